//! Run configuration: flat `key = value` text with `#` comments.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::complexity::{ComplexitySettings, NeuronFilter};
use crate::error::{Error, Result};
use crate::genome::{GeneMap, Genome, GenomeLayout, SeedGenomeSpec, make_seed_genome};
use crate::world::WorldConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    #[default]
    Driven,
    Lockstep,
    ComplexityFitness,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Driven => "driven",
            Mode::Lockstep => "lockstep",
            Mode::ComplexityFitness => "complexity-fitness",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "driven" => Ok(Mode::Driven),
            "lockstep" => Ok(Mode::Lockstep),
            "complexity-fitness" | "fitness" => Ok(Mode::ComplexityFitness),
            other => Err(format!("unknown mode `{other}` (driven|lockstep|complexity-fitness)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Tails {
    #[default]
    One,
    Two,
}

impl fmt::Display for Tails {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tails::One => "one",
            Tails::Two => "two",
        })
    }
}

impl FromStr for Tails {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "one" => Ok(Tails::One),
            "two" => Ok(Tails::Two),
            other => Err(format!("unknown tail convention `{other}` (one|two)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub bin_width: u64,
    pub alpha: f64,
    pub tails: Tails,
    pub histogram_bins: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            bin_width: 1000,
            alpha: 0.05,
            tails: Tails::One,
            histogram_bins: 40,
        }
    }
}

/// Steady-state replacement by lifetime complexity.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessConfig {
    /// Steps between replacements.
    pub interval: u64,
    /// Trailing steps of activity scored per agent.
    pub window: usize,
}

impl Default for FitnessConfig {
    fn default() -> Self {
        FitnessConfig {
            interval: 100,
            window: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub world: WorldConfig,
    pub layout: GenomeLayout,
    pub founder: SeedGenomeSpec,
    pub complexity: ComplexitySettings,
    pub analysis: AnalysisConfig,
    pub fitness: FitnessConfig,
    pub steps: u64,
    pub seed: u64,
    pub mode: Mode,
    /// Whole-population genome snapshots every this many steps.
    pub snapshot_interval: u64,
    /// Write a trace file for every dead agent.
    pub record_traces: bool,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            world: WorldConfig::default(),
            layout: GenomeLayout::default(),
            founder: SeedGenomeSpec::default(),
            complexity: ComplexitySettings::default(),
            analysis: AnalysisConfig::default(),
            fitness: FitnessConfig::default(),
            steps: 30_000,
            seed: 0,
            mode: Mode::Driven,
            snapshot_interval: 1000,
            record_traces: true,
            out: PathBuf::from("runs"),
        }
    }
}

trait Value: Sized {
    fn parse(s: &str) -> std::result::Result<Self, String>;
    fn render(&self) -> String;
}

macro_rules! display_value {
    ($($t:ty),*) => {$(
        impl Value for $t {
            fn parse(s: &str) -> std::result::Result<Self, String> {
                s.parse::<$t>().map_err(|e| format!("`{s}`: {e}"))
            }
            fn render(&self) -> String {
                self.to_string()
            }
        }
    )*};
}

display_value!(f64, usize, u64, bool, Mode, Tails, NeuronFilter);

impl Value for PathBuf {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        Ok(PathBuf::from(s))
    }
    fn render(&self) -> String {
        self.display().to_string()
    }
}

struct Key {
    name: &'static str,
    get: fn(&RunConfig) -> String,
    set: fn(&mut RunConfig, &str) -> std::result::Result<(), String>,
    /// Part of the config hash; run identity keys are not.
    hashed: bool,
}

macro_rules! keys {
    ($($name:literal => $($field:tt).+ $([$idx:literal])? : $ty:ty $([$unhashed:ident])?),* $(,)?) => {
        const KEYS: &[Key] = &[$(Key {
            name: $name,
            get: |c| Value::render(&c.$($field).+$([$idx])?),
            set: |c, v| {
                c.$($field).+$([$idx])? = <$ty as Value>::parse(v)?;
                Ok(())
            },
            hashed: keys!(@hashed $($unhashed)?),
        }),*];
    };
    (@hashed) => { true };
    (@hashed unhashed) => { false };
}

keys! {
    "steps" => steps: u64,
    "seed" => seed: u64 [unhashed],
    "mode" => mode: Mode [unhashed],
    "out" => out: PathBuf [unhashed],
    "snapshot_interval" => snapshot_interval: u64,
    "record_traces" => record_traces: bool,

    "width" => world.width: f64,
    "height" => world.height: f64,
    "initial_agents" => world.initial_agents: usize,
    "p_min" => world.p_min: usize,
    "p_max" => world.p_max: usize,
    "e_max" => world.e_max: f64,
    "initial_energy" => world.initial_energy: f64,
    "max_age" => world.max_age: u64,
    "m_low" => world.m_low: f64,
    "m_high" => world.m_high: f64,
    "fecundity_age" => world.fecundity_age: u64,
    "eat_threshold" => world.eat_threshold: f64,
    "mate_threshold" => world.mate_threshold: f64,
    "attack_threshold" => world.attack_threshold: f64,
    "rays" => world.rays: usize,
    "fov" => world.fov: f64,
    "sensor_range" => world.sensor_range: f64,
    "agent_radius" => world.agent_radius: f64,
    "food_radius" => world.food_radius: f64,
    "reach" => world.reach: f64,
    "max_speed" => world.max_speed: f64,
    "max_turn" => world.max_turn: f64,
    "bite" => world.bite: f64,
    "attack_damage" => world.attack_damage: f64,
    "parental_min_energy" => world.parental_min_energy: f64,
    "parental_donation" => world.parental_donation: f64,
    "cost_fixed" => world.cost_fixed: f64,
    "cost_neuron" => world.cost_neuron: f64,
    "cost_synapse" => world.cost_synapse: f64,
    "cost_move" => world.cost_move: f64,
    "cost_turn" => world.cost_turn: f64,
    "cost_eat" => world.cost_eat: f64,
    "cost_mate" => world.cost_mate: f64,
    "cost_attack" => world.cost_attack: f64,
    "corpse_fraction" => world.corpse_fraction: f64,
    "food_growth" => world.food_growth: f64,
    "food_cap" => world.food_cap: f64,
    "food_item_energy" => world.food_item_energy: f64,
    "initial_food" => world.initial_food: f64,
    "energy_floor" => world.energy_floor: f64,

    "genome_bits" => layout.genome_len: usize,
    "groups_min" => layout.group_range.0: usize,
    "groups_max" => layout.group_range.1: usize,
    "excitatory_min" => layout.excitatory_range.0: usize,
    "excitatory_max" => layout.excitatory_range.1: usize,
    "inhibitory_min" => layout.inhibitory_range.0: usize,
    "inhibitory_max" => layout.inhibitory_range.1: usize,
    "mutation_rate_min" => layout.mutation_rate_range.0: f64,
    "mutation_rate_max" => layout.mutation_rate_range.1: f64,
    "crossover_min" => layout.crossover_range.0: usize,
    "crossover_max" => layout.crossover_range.1: usize,
    "learning_rate_max" => layout.learning_rate_max: f64,
    "max_weight_min" => layout.max_weight_range.0: f64,
    "max_weight_max" => layout.max_weight_range.1: f64,
    "output_bias_limit" => layout.output_bias_limit: f64,
    "group_bias_limit" => layout.group_bias_limit: f64,
    "reflex_max" => layout.reflex_max: f64,

    "seed_excitatory" => founder.excitatory: usize,
    "seed_inhibitory" => founder.inhibitory: usize,
    "seed_density" => founder.density: f64,
    "seed_recurrent_density" => founder.recurrent_density: f64,
    "seed_distortion" => founder.distortion: f64,
    "seed_learning_rate" => founder.learning_rate: f64,
    "seed_mutation_rate" => founder.mutation_rate: f64,
    "seed_crossover_points" => founder.crossover_points: usize,
    "seed_max_weight" => founder.max_weight: f64,
    "seed_group_bias" => founder.group_bias: f64,
    "seed_bias_move" => founder.output_bias[0]: f64,
    "seed_bias_turn" => founder.output_bias[1]: f64,
    "seed_bias_eat" => founder.output_bias[2]: f64,
    "seed_bias_mate" => founder.output_bias[3]: f64,
    "seed_bias_attack" => founder.output_bias[4]: f64,
    "seed_reflex_green_move" => founder.reflex_green_move: f64,
    "seed_reflex_red_turn" => founder.reflex_red_turn: f64,

    "neurons" => complexity.filter: NeuronFilter,
    "jitter" => complexity.jitter: f64,
    "exact_limit" => complexity.exact_limit: usize,

    "bin_width" => analysis.bin_width: u64,
    "alpha" => analysis.alpha: f64,
    "tails" => analysis.tails: Tails,
    "histogram_bins" => analysis.histogram_bins: usize,

    "fitness_interval" => fitness.interval: u64,
    "fitness_window" => fitness.window: usize,
}

impl RunConfig {
    pub fn keys() -> impl Iterator<Item = &'static str> {
        KEYS.iter().map(|k| k.name)
    }

    pub fn get(&self, key: &str) -> Option<String> {
        KEYS.iter().find(|k| k.name == key).map(|k| (k.get)(self))
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let k = KEYS
            .iter()
            .find(|k| k.name == key)
            .ok_or_else(|| Error::Config(format!("unknown key `{key}`")))?;
        (k.set)(self, value.trim()).map_err(|e| Error::Config(format!("{key}: {e}")))
    }

    /// Applies `key = value` lines over the defaults and validates.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        cfg.apply(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(k.trim(), v).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("line {}: {m}", n + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Every key, one per line, in canonical order.
    pub fn to_text(&self) -> String {
        KEYS.iter().map(|k| format!("{} = {}\n", k.name, (k.get)(self))).collect()
    }

    /// Identifies the experiment independent of seed, mode and output location.
    pub fn hash(&self) -> u64 {
        let mut h = Sha256::new();
        for k in KEYS.iter().filter(|k| k.hashed) {
            h.update(format!("{}={}\n", k.name, (k.get)(self)).as_bytes());
        }
        let digest = h.finalize();
        u64::from_be_bytes(digest[..8].try_into().expect("sha256 digest is 32 bytes"))
    }

    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        self.gene_map()?;
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.snapshot_interval == 0 {
            return fail("snapshot_interval must be positive");
        }
        if self.analysis.bin_width == 0 || self.analysis.histogram_bins == 0 {
            return fail("bin_width and histogram_bins must be positive");
        }
        if !(self.analysis.alpha > 0.0 && self.analysis.alpha < 1.0) {
            return fail("alpha must be in (0, 1)");
        }
        if self.fitness.interval == 0 || self.fitness.window == 0 {
            return fail("fitness_interval and fitness_window must be positive");
        }
        if !(self.complexity.jitter >= 0.0) {
            return fail("jitter must be non-negative");
        }
        Ok(())
    }

    pub fn gene_map(&self) -> Result<GeneMap> {
        GeneMap::standard(&self.layout)
    }

    pub fn founder_genome(&self, map: &GeneMap) -> Genome {
        make_seed_genome(map, &self.founder)
    }
}
