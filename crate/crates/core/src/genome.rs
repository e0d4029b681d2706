//! Fixed-length haploid bit-string genomes.
//!
//! A [`GeneMap`] lays linear genes over the bit string; everything the brain
//! builder and the genetic operators need (group structure, connection
//! parameters, mutation rate, crossover point count) is decoded from it.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::RandomStream;

pub const DEFAULT_GENOME_BITS: usize = 1024;

/// Number of fixed sensory input groups (red, green, blue, energy).
pub const INPUT_GROUPS: usize = 4;
pub const INPUT_GROUP_NAMES: [&str; INPUT_GROUPS] = ["red", "green", "blue", "energy"];

/// Behaviours driven by the designated output neurons, in output order.
pub const OUTPUT_NAMES: [&str; 5] = ["move", "turn", "eat", "mate", "attack"];

pub mod gene {
    //! Gene naming scheme of the standard map.

    pub const GROUP_COUNT: &str = "group_count";
    pub const MUTATION_RATE: &str = "mutation_rate";
    pub const CROSSOVER_POINTS: &str = "crossover_points";
    pub const MAX_WEIGHT: &str = "max_weight";
    pub const REFLEX_GREEN_MOVE: &str = "reflex_green_move";
    pub const REFLEX_RED_TURN: &str = "reflex_red_turn";

    pub fn excitatory(group: usize) -> String {
        format!("excitatory_g{group}")
    }

    pub fn inhibitory(group: usize) -> String {
        format!("inhibitory_g{group}")
    }

    pub fn group_bias(group: usize) -> String {
        format!("bias_g{group}")
    }

    pub fn output_bias(output: &str) -> String {
        format!("bias_{output}")
    }

    /// Source groups are `in0..in3` (sensors) followed by `g0..` (processing).
    pub fn source_name(source: usize, input_groups: usize) -> String {
        if source < input_groups {
            format!("in{source}")
        } else {
            format!("g{}", source - input_groups)
        }
    }

    pub fn density(source: &str, target: usize) -> String {
        format!("density_{source}_g{target}")
    }

    pub fn distortion(source: &str, target: usize) -> String {
        format!("distortion_{source}_g{target}")
    }

    pub fn learning(source: &str, target: usize) -> String {
        format!("learning_{source}_g{target}")
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Genome {
    /// Packed, most-significant bit = lowest site index.
    bytes: Vec<u8>,
    len: usize,
}

impl std::fmt::Debug for Genome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Genome({} bits, {} ones)", self.len, self.count_ones())
    }
}

impl Genome {
    pub fn zeros(len: usize) -> Self {
        Genome {
            bytes: vec![0; len.div_ceil(8)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut g = Genome::zeros(len);
        for i in 0..len {
            g.set(i, true);
        }
        g
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut g = Genome::zeros(len);
        for i in 0..len {
            g.set(i, f(i));
        }
        g
    }

    /// Rebuilds a genome from its bit dump. Padding bits past `len` must be 0.
    pub fn from_bytes(len: usize, bytes: &[u8]) -> Option<Self> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let g = Genome {
            bytes: bytes.to_vec(),
            len,
        };
        let padding_clean = (len..bytes.len() * 8).all(|i| bytes[i / 8] & (0x80 >> (i % 8)) == 0);
        padding_clean.then_some(g)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bit dump, 8 sites per byte.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    #[inline]
    pub fn get(&self, site: usize) -> bool {
        debug_assert!(site < self.len);
        self.bytes[site / 8] & (0x80 >> (site % 8)) != 0
    }

    #[inline]
    pub fn set(&mut self, site: usize, value: bool) {
        debug_assert!(site < self.len);
        let mask = 0x80 >> (site % 8);
        if value {
            self.bytes[site / 8] |= mask;
        } else {
            self.bytes[site / 8] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, site: usize) {
        debug_assert!(site < self.len);
        self.bytes[site / 8] ^= 0x80 >> (site % 8);
    }

    pub fn count_ones(&self) -> usize {
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn hamming(&self, other: &Genome) -> usize {
        assert_eq!(self.len, other.len, "genome lengths differ");
        self.bytes
            .iter()
            .zip(&other.bytes)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Unsigned integer read from `width` sites starting at `offset`, MSB first.
    pub fn read_raw(&self, offset: usize, width: usize) -> u64 {
        (offset..offset + width).fold(0u64, |acc, i| (acc << 1) | u64::from(self.get(i)))
    }

    pub fn write_raw(&mut self, offset: usize, width: usize, raw: u64) {
        for k in 0..width {
            let bit = (raw >> (width - 1 - k)) & 1 == 1;
            self.set(offset + k, bit);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneScale {
    Linear,
    /// Linear, rounded to the nearest integer.
    LinearInt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneEntry {
    pub name: String,
    pub offset: usize,
    pub width: usize,
    pub min: f64,
    pub max: f64,
    pub scale: GeneScale,
}

impl GeneEntry {
    pub fn new(name: impl Into<String>, offset: usize, width: usize, min: f64, max: f64) -> Self {
        GeneEntry {
            name: name.into(),
            offset,
            width,
            min,
            max,
            scale: GeneScale::Linear,
        }
    }

    pub fn integer(name: impl Into<String>, offset: usize, width: usize, min: f64, max: f64) -> Self {
        GeneEntry {
            scale: GeneScale::LinearInt,
            ..GeneEntry::new(name, offset, width, min, max)
        }
    }

    pub fn max_raw(&self) -> u64 {
        (1u64 << self.width) - 1
    }

    pub fn value_of_raw(&self, raw: u64) -> f64 {
        let v = self.min + (raw as f64 / self.max_raw() as f64) * (self.max - self.min);
        match self.scale {
            GeneScale::Linear => v,
            GeneScale::LinearInt => v.round(),
        }
    }

    /// Nearest raw value whose decoded value approximates `value`.
    pub fn raw_for_value(&self, value: f64) -> u64 {
        if self.max == self.min {
            return 0;
        }
        let frac = ((value - self.min) / (self.max - self.min)).clamp(0.0, 1.0);
        (frac * self.max_raw() as f64).round() as u64
    }

    pub fn decode(&self, genome: &Genome) -> f64 {
        self.value_of_raw(genome.read_raw(self.offset, self.width))
    }
}

/// Decoded physical gene values keyed by gene name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GeneValues(BTreeMap<String, f64>);

impl GeneValues {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    /// Like [`get`](Self::get) for genes the standard map always carries.
    pub fn value(&self, name: &str) -> f64 {
        self.get(name)
            .unwrap_or_else(|| panic!("gene `{name}` missing from gene map"))
    }

    pub fn count(&self, name: &str) -> usize {
        self.value(name).max(0.0) as usize
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Value ranges of the standard gene map.
#[derive(Debug, Clone, PartialEq)]
pub struct GenomeLayout {
    pub genome_len: usize,
    pub group_range: (usize, usize),
    pub excitatory_range: (usize, usize),
    pub inhibitory_range: (usize, usize),
    pub mutation_rate_range: (f64, f64),
    pub crossover_range: (usize, usize),
    pub learning_rate_max: f64,
    pub max_weight_range: (f64, f64),
    pub output_bias_limit: f64,
    pub group_bias_limit: f64,
    pub reflex_max: f64,
}

impl Default for GenomeLayout {
    fn default() -> Self {
        GenomeLayout {
            genome_len: DEFAULT_GENOME_BITS,
            group_range: (1, 5),
            excitatory_range: (5, 16),
            inhibitory_range: (0, 8),
            mutation_rate_range: (0.001, 0.05),
            crossover_range: (1, 8),
            learning_rate_max: 0.2,
            max_weight_range: (2.0, 10.0),
            output_bias_limit: 4.0,
            group_bias_limit: 2.0,
            reflex_max: 4.0,
        }
    }
}

const W_GROUP_COUNT: usize = 4;
const W_EXCITATORY: usize = 5;
const W_INHIBITORY: usize = 4;
const W_GROUP_BIAS: usize = 6;
const W_DENSITY: usize = 8;
const W_DISTORTION: usize = 4;
const W_LEARNING: usize = 6;
const W_MUTATION: usize = 8;
const W_CROSSOVER: usize = 4;
const W_MAX_WEIGHT: usize = 6;
const W_OUTPUT_BIAS: usize = 6;
const W_REFLEX: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneMap {
    genome_len: usize,
    entries: Vec<GeneEntry>,
    by_name: HashMap<String, usize>,
    max_groups: usize,
}

impl GeneMap {
    /// Validates that entries are uniquely named, non-overlapping and inside
    /// the genome.
    pub fn new(genome_len: usize, entries: Vec<GeneEntry>) -> Result<Self> {
        let mut by_name = HashMap::with_capacity(entries.len());
        let mut spans: Vec<(usize, usize, &str)> = Vec::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if e.width == 0 || e.width > 32 {
                return Err(Error::Config(format!("gene `{}` has width {}", e.name, e.width)));
            }
            if e.offset + e.width > genome_len {
                return Err(Error::Config(format!(
                    "gene `{}` spans [{}, {}) outside genome of {} bits",
                    e.name,
                    e.offset,
                    e.offset + e.width,
                    genome_len
                )));
            }
            if !(e.min <= e.max) || !e.min.is_finite() || !e.max.is_finite() {
                return Err(Error::Config(format!("gene `{}` has range [{}, {}]", e.name, e.min, e.max)));
            }
            if by_name.insert(e.name.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate gene `{}`", e.name)));
            }
            spans.push((e.offset, e.offset + e.width, &e.name));
        }
        spans.sort_unstable();
        for w in spans.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(Error::Config(format!("genes `{}` and `{}` overlap", w[0].2, w[1].2)));
            }
        }
        let max_groups = (0..)
            .take_while(|g| by_name.contains_key(&gene::excitatory(*g)))
            .count();
        Ok(GeneMap {
            genome_len,
            entries,
            by_name,
            max_groups,
        })
    }

    pub fn standard(layout: &GenomeLayout) -> Result<Self> {
        let mut entries = Vec::new();
        let mut offset = 0usize;
        let mut push = |mut e: GeneEntry| {
            e.offset = offset;
            offset += e.width;
            entries.push(e);
        };
        let (gmin, gmax) = layout.group_range;
        push(GeneEntry::integer(gene::GROUP_COUNT, 0, W_GROUP_COUNT, gmin as f64, gmax as f64));
        push(GeneEntry::new(gene::MUTATION_RATE, 0, W_MUTATION, layout.mutation_rate_range.0, layout.mutation_rate_range.1));
        let (cmin, cmax) = layout.crossover_range;
        push(GeneEntry::integer(gene::CROSSOVER_POINTS, 0, W_CROSSOVER, cmin as f64, cmax as f64));
        push(GeneEntry::new(gene::MAX_WEIGHT, 0, W_MAX_WEIGHT, layout.max_weight_range.0, layout.max_weight_range.1));
        for out in OUTPUT_NAMES {
            let b = layout.output_bias_limit;
            push(GeneEntry::new(gene::output_bias(out), 0, W_OUTPUT_BIAS, -b, b));
        }
        push(GeneEntry::new(gene::REFLEX_GREEN_MOVE, 0, W_REFLEX, 0.0, layout.reflex_max));
        push(GeneEntry::new(gene::REFLEX_RED_TURN, 0, W_REFLEX, 0.0, layout.reflex_max));
        let (emin, emax) = layout.excitatory_range;
        let (imin, imax) = layout.inhibitory_range;
        for g in 0..gmax {
            push(GeneEntry::integer(gene::excitatory(g), 0, W_EXCITATORY, emin as f64, emax as f64));
            push(GeneEntry::integer(gene::inhibitory(g), 0, W_INHIBITORY, imin as f64, imax as f64));
            let b = layout.group_bias_limit;
            push(GeneEntry::new(gene::group_bias(g), 0, W_GROUP_BIAS, -b, b));
        }
        for target in 0..gmax {
            for source in 0..INPUT_GROUPS + gmax {
                let s = gene::source_name(source, INPUT_GROUPS);
                push(GeneEntry::new(gene::density(&s, target), 0, W_DENSITY, 0.0, 1.0));
                push(GeneEntry::new(gene::distortion(&s, target), 0, W_DISTORTION, 0.0, 1.0));
                push(GeneEntry::new(gene::learning(&s, target), 0, W_LEARNING, 0.0, layout.learning_rate_max));
            }
        }
        GeneMap::new(layout.genome_len, entries)
    }

    pub fn genome_len(&self) -> usize {
        self.genome_len
    }

    pub fn entries(&self) -> &[GeneEntry] {
        &self.entries
    }

    pub fn max_groups(&self) -> usize {
        self.max_groups
    }

    pub fn entry(&self, name: &str) -> Option<&GeneEntry> {
        self.by_name.get(name).map(|&i| &self.entries[i])
    }

    /// Number of genome sites covered by some gene.
    pub fn coded_bits(&self) -> usize {
        self.entries.iter().map(|e| e.width).sum()
    }

    pub fn decode(&self, genome: &Genome) -> GeneValues {
        debug_assert_eq!(genome.len(), self.genome_len);
        GeneValues(
            self.entries
                .iter()
                .map(|e| (e.name.clone(), e.decode(genome)))
                .collect(),
        )
    }

    pub fn decode_gene(&self, genome: &Genome, name: &str) -> Option<f64> {
        self.entry(name).map(|e| e.decode(genome))
    }

    /// Per-bit mutation probability; zero when the map carries no rate gene.
    pub fn mutation_rate(&self, genome: &Genome) -> f64 {
        self.decode_gene(genome, gene::MUTATION_RATE).unwrap_or(0.0)
    }

    pub fn crossover_points(&self, genome: &Genome) -> usize {
        self.decode_gene(genome, gene::CROSSOVER_POINTS)
            .map_or(1, |v| v.max(1.0) as usize)
    }

    /// Writes the raw encoding nearest to `value` into the gene's sites.
    pub fn encode(&self, genome: &mut Genome, name: &str, value: f64) {
        let e = self
            .entry(name)
            .unwrap_or_else(|| panic!("gene `{name}` missing from gene map"));
        genome.write_raw(e.offset, e.width, e.raw_for_value(value));
    }

    /// Text table, one gene per line: `name offset width min max scale`.
    pub fn to_table(&self) -> String {
        let mut out = format!("# gene map, genome_len={}\n", self.genome_len);
        out.push_str("# name offset width min max scale\n");
        for e in &self.entries {
            let scale = match e.scale {
                GeneScale::Linear => "linear",
                GeneScale::LinearInt => "linear-int",
            };
            let _ = writeln!(out, "{} {} {} {:?} {:?} {}", e.name, e.offset, e.width, e.min, e.max, scale);
        }
        out
    }

    pub fn from_table(text: &str) -> Result<Self> {
        let bad = |line: &str| Error::Config(format!("bad gene map line `{line}`"));
        let mut genome_len = None;
        let mut entries = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if let Some(rest) = line.strip_prefix("# gene map, genome_len=") {
                genome_len = Some(rest.trim().parse().map_err(|_| bad(line))?);
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 {
                return Err(bad(line));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(line));
            let int = |s: &str| s.parse::<usize>().map_err(|_| bad(line));
            let scale = match f[5] {
                "linear" => GeneScale::Linear,
                "linear-int" => GeneScale::LinearInt,
                _ => return Err(bad(line)),
            };
            entries.push(GeneEntry {
                name: f[0].to_string(),
                offset: int(f[1])?,
                width: int(f[2])?,
                min: num(f[3])?,
                max: num(f[4])?,
                scale,
            });
        }
        let genome_len = genome_len.ok_or_else(|| Error::Config("gene map lacks genome_len header".into()))?;
        GeneMap::new(genome_len, entries)
    }
}

/// Copies alternating segments of `a` and `b`, switching at each cut.
pub fn splice(a: &Genome, b: &Genome, cuts: &[usize], start_with_a: bool) -> Genome {
    assert_eq!(a.len(), b.len(), "crossover parents differ in length");
    let mut child = Genome::zeros(a.len());
    let mut from_a = start_with_a;
    let mut next_cut = cuts.iter().copied().peekable();
    for site in 0..a.len() {
        while next_cut.peek() == Some(&site) {
            from_a = !from_a;
            next_cut.next();
        }
        let src = if from_a { a } else { b };
        child.set(site, src.get(site));
    }
    child
}

/// Multi-point crossover; the point count comes from one uniformly chosen parent.
pub fn crossover(a: &Genome, b: &Genome, map: &GeneMap, rng: &mut RandomStream) -> Genome {
    assert_eq!(a.len(), b.len(), "crossover parents differ in length");
    let len = a.len();
    if len < 2 {
        return a.clone();
    }
    let source = if rng.random_bool(0.5) { a } else { b };
    let k = map.crossover_points(source).min(len - 1);
    let mut cuts: Vec<usize> = index::sample(rng, len - 1, k).into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    let start_with_a = rng.random_bool(0.5);
    splice(a, b, &cuts, start_with_a)
}

/// Independent per-site flips at the genome's own decoded mutation rate,
/// read before any site changes.
pub fn mutate(genome: &Genome, map: &GeneMap, rng: &mut RandomStream) -> Genome {
    let rate = map.mutation_rate(genome).clamp(0.0, 1.0);
    let mut out = genome.clone();
    if rate == 0.0 {
        return out;
    }
    for site in 0..out.len() {
        if rng.random_bool(rate) {
            out.flip(site);
        }
    }
    out
}

/// Founder genome parameters. Values are encoded at the nearest raw setting.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedGenomeSpec {
    pub excitatory: usize,
    pub inhibitory: usize,
    pub density: f64,
    pub recurrent_density: f64,
    pub distortion: f64,
    pub learning_rate: f64,
    pub mutation_rate: f64,
    pub crossover_points: usize,
    pub max_weight: f64,
    pub group_bias: f64,
    /// Biases for move, turn, eat, mate, attack.
    pub output_bias: [f64; 5],
    pub reflex_green_move: f64,
    pub reflex_red_turn: f64,
}

impl Default for SeedGenomeSpec {
    fn default() -> Self {
        SeedGenomeSpec {
            excitatory: 5,
            inhibitory: 1,
            density: 0.05,
            recurrent_density: 0.05,
            distortion: 0.5,
            learning_rate: 0.02,
            mutation_rate: 0.002,
            crossover_points: 2,
            max_weight: 6.0,
            group_bias: 0.0,
            output_bias: [0.0, -0.2, 0.5, 0.6, -1.5],
            reflex_green_move: 2.0,
            reflex_red_turn: 2.0,
        }
    }
}

/// Deterministic founder genome: minimum group count, near-minimal neuron
/// counts, sparse connectivity and hand-set food/danger reflexes. Uncoded
/// sites are zero.
pub fn make_seed_genome(map: &GeneMap, spec: &SeedGenomeSpec) -> Genome {
    let mut g = Genome::zeros(map.genome_len());
    let mut set = |name: &str, value: f64| {
        if map.entry(name).is_some() {
            map.encode(&mut g, name, value);
        }
    };
    let min_groups = map.entry(gene::GROUP_COUNT).map_or(1.0, |e| e.min);
    set(gene::GROUP_COUNT, min_groups);
    set(gene::MUTATION_RATE, spec.mutation_rate);
    set(gene::CROSSOVER_POINTS, spec.crossover_points as f64);
    set(gene::MAX_WEIGHT, spec.max_weight);
    for (out, bias) in OUTPUT_NAMES.iter().zip(spec.output_bias) {
        set(&gene::output_bias(out), bias);
    }
    set(gene::REFLEX_GREEN_MOVE, spec.reflex_green_move);
    set(gene::REFLEX_RED_TURN, spec.reflex_red_turn);
    for grp in 0..map.max_groups() {
        set(&gene::excitatory(grp), spec.excitatory as f64);
        set(&gene::inhibitory(grp), spec.inhibitory as f64);
        set(&gene::group_bias(grp), spec.group_bias);
        for source in 0..INPUT_GROUPS + map.max_groups() {
            let s = gene::source_name(source, INPUT_GROUPS);
            let density = if source < INPUT_GROUPS { spec.density } else { spec.recurrent_density };
            set(&gene::density(&s, grp), density);
            set(&gene::distortion(&s, grp), spec.distortion);
            set(&gene::learning(&s, grp), spec.learning_rate);
        }
    }
    g
}
