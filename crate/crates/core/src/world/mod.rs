//! The 2D ecology.
//!
//! A step runs in fixed phases: sense, think, learn, record, act, deplete,
//! deaths, births, food regrowth. Agents are kept in id order and every
//! phase iterates them in that order, so a run is a pure function of its
//! configuration and seed.

pub mod event;
pub mod sense;

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::brain::{build_brain, Behavior, Brain, NeuralArchitecture};
use crate::complexity::LifetimeRecording;
use crate::error::{Error, Result};
use crate::genome::{crossover, mutate, GeneMap, Genome};
use crate::rng::{keyed_stream, stream, Purpose, RandomStream};

pub use event::{ArtifactHeader, DeathCause, Event, EventKind, EventLog};
pub use sense::{Eye, Sighting};

#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig {
    pub width: f64,
    pub height: f64,
    pub initial_agents: usize,
    pub p_min: usize,
    pub p_max: usize,
    pub e_max: f64,
    pub initial_energy: f64,
    pub max_age: u64,
    pub m_low: f64,
    pub m_high: f64,
    pub fecundity_age: u64,
    pub eat_threshold: f64,
    pub mate_threshold: f64,
    pub attack_threshold: f64,
    pub rays: usize,
    /// Degrees.
    pub fov: f64,
    pub sensor_range: f64,
    pub agent_radius: f64,
    pub food_radius: f64,
    /// Centre distance within which eating, attacking and mating are possible.
    pub reach: f64,
    pub max_speed: f64,
    /// Degrees; heading changes by `(turn − 0.5) · max_turn` per step.
    pub max_turn: f64,
    pub bite: f64,
    pub attack_damage: f64,
    pub parental_min_energy: f64,
    /// Fraction of its own energy each parent hands to the child.
    pub parental_donation: f64,
    pub cost_fixed: f64,
    pub cost_neuron: f64,
    pub cost_synapse: f64,
    pub cost_move: f64,
    pub cost_turn: f64,
    pub cost_eat: f64,
    pub cost_mate: f64,
    pub cost_attack: f64,
    /// Fraction of a dead agent's remaining energy left behind as food.
    pub corpse_fraction: f64,
    pub food_growth: f64,
    pub food_cap: f64,
    pub food_item_energy: f64,
    pub initial_food: f64,
    /// Replay energy floor as a fraction of `e_max`.
    pub energy_floor: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            width: 100.0,
            height: 100.0,
            initial_agents: 30,
            p_min: 30,
            p_max: 120,
            e_max: 100.0,
            initial_energy: 80.0,
            max_age: 1000,
            m_low: 1.0,
            m_high: 3.0,
            fecundity_age: 25,
            eat_threshold: 0.6,
            mate_threshold: 0.6,
            attack_threshold: 0.6,
            rays: 8,
            fov: 120.0,
            sensor_range: 30.0,
            agent_radius: 1.0,
            food_radius: 0.5,
            reach: 2.0,
            max_speed: 1.0,
            max_turn: 45.0,
            bite: 5.0,
            attack_damage: 5.0,
            parental_min_energy: 30.0,
            parental_donation: 0.25,
            cost_fixed: 0.05,
            cost_neuron: 0.001,
            cost_synapse: 0.0001,
            cost_move: 0.05,
            cost_turn: 0.01,
            cost_eat: 0.01,
            cost_mate: 0.01,
            cost_attack: 0.05,
            corpse_fraction: 0.75,
            food_growth: 30.0,
            food_cap: 3000.0,
            food_item_energy: 20.0,
            initial_food: 1000.0,
            energy_floor: 0.01,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.width > 0.0 && self.height > 0.0) {
            return fail("world extent must be positive");
        }
        if self.p_min > self.p_max || self.p_max == 0 {
            return fail("population bounds need 0 <= p_min <= p_max, p_max > 0");
        }
        if !(self.e_max > 0.0) || self.initial_energy > self.e_max || self.initial_energy <= 0.0 {
            return fail("energies need 0 < initial_energy <= e_max");
        }
        if self.rays == 0 || self.rays > 64 {
            return fail("rays must be in 1..=64");
        }
        if !(0.0..=360.0).contains(&self.fov) || self.sensor_range <= 0.0 {
            return fail("fov must be in [0, 360] degrees and sensor_range positive");
        }
        if !(0.0..=0.5).contains(&self.parental_donation) {
            return fail("parental_donation must be in [0, 0.5]");
        }
        if !(0.0..=1.0).contains(&self.corpse_fraction) || !(0.0..1.0).contains(&self.energy_floor) {
            return fail("corpse_fraction must be in [0, 1] and energy_floor in [0, 1)");
        }
        if self.food_item_energy <= 0.0 || self.food_cap < 0.0 || self.food_growth < 0.0 {
            return fail("food parameters must be non-negative with positive item energy");
        }
        Ok(())
    }

    pub fn eye(&self) -> Eye {
        Eye {
            rays: self.rays,
            fov: self.fov.to_radians(),
            range: self.sensor_range,
        }
    }

    /// Sizes of the red, green, blue and energy input groups.
    pub fn input_sizes(&self) -> [usize; 4] {
        [self.rays, self.rays, self.rays, 1]
    }

    pub fn n_inputs(&self) -> usize {
        3 * self.rays + 1
    }
}

/// Multiplier on all energy depletion, linear between the population bounds.
pub fn population_pressure(population: usize, cfg: &WorldConfig) -> f64 {
    let span = (cfg.p_max - cfg.p_min) as f64;
    let frac = if span > 0.0 {
        ((population as f64 - cfg.p_min as f64) / span).clamp(0.0, 1.0)
    } else if population >= cfg.p_max {
        1.0
    } else {
        0.0
    };
    cfg.m_low + (cfg.m_high - cfg.m_low) * frac
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Food {
    pub x: f64,
    pub y: f64,
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub id: u64,
    pub genome: Genome,
    pub brain: Brain,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub energy: f64,
    pub birth_step: u64,
    pub recording: LifetimeRecording,
    upkeep: f64,
    killed: bool,
    inputs: Vec<f64>,
}

impl Agent {
    pub fn age(&self, step: u64) -> u64 {
        step - self.birth_step
    }

    fn behaviour_cost(&self, cfg: &WorldConfig) -> f64 {
        let b = &self.brain;
        cfg.cost_move * b.output(Behavior::Move)
            + cfg.cost_turn * b.output(Behavior::Turn)
            + cfg.cost_eat * b.output(Behavior::Eat)
            + cfg.cost_mate * b.output(Behavior::Mate)
            + cfg.cost_attack * b.output(Behavior::Attack)
    }
}

/// How births and deaths come about.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// Deaths from starvation, age and attack; births from mating.
    Natural,
    /// No natural births or deaths; energy is floored. Births and deaths
    /// are imposed through [`World::step_forced`].
    Replay,
}

/// Births and deaths imposed on a replay step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Forced {
    pub deaths: usize,
    pub births: usize,
}

#[derive(Debug, Default)]
pub struct StepReport {
    pub step: u64,
    pub events: Vec<Event>,
    /// Energy drawn from agents by upkeep and behaviour this step.
    pub depleted: f64,
    /// Energy of corpses not converted into food.
    pub decayed: f64,
    /// Energy added by regrowth.
    pub grown: f64,
    /// Energy created by the replay floor.
    pub floored: f64,
    /// Agents that died this step, recordings complete.
    pub dead: Vec<Agent>,
}

impl StepReport {
    pub fn births(&self) -> usize {
        self.events.iter().filter(|e| e.is_birth()).count()
    }

    pub fn deaths(&self) -> usize {
        self.events.iter().filter(|e| e.is_death()).count()
    }
}

#[derive(Debug, Clone)]
pub struct World {
    cfg: WorldConfig,
    map: Arc<GeneMap>,
    regime: Regime,
    step: u64,
    agents: Vec<Agent>,
    food: Vec<Food>,
    next_id: u64,
    food_bank: f64,
    brain_seed: u64,
    record: bool,
}

impl World {
    /// Seeds `initial_agents` copies of `founder` and the initial food at
    /// positions drawn from the placement stream of `seed`.
    pub fn new(cfg: WorldConfig, map: Arc<GeneMap>, founder: &Genome, seed: u64) -> Result<World> {
        cfg.validate()?;
        let mut world = World {
            cfg,
            map,
            regime: Regime::Natural,
            step: 0,
            agents: Vec::new(),
            food: Vec::new(),
            next_id: 0,
            food_bank: 0.0,
            brain_seed: seed,
            record: true,
        };
        let mut place = stream(seed, Purpose::Placement);
        for _ in 0..world.cfg.initial_agents {
            let (x, y) = world.random_position(&mut place);
            let heading = place.random_range(-PI..PI);
            world.spawn(founder.clone(), x, y, heading, world.cfg.initial_energy)?;
        }
        let mut remaining = world.cfg.initial_food;
        while remaining > 1e-12 {
            let energy = remaining.min(world.cfg.food_item_energy);
            let (x, y) = world.random_position(&mut place);
            world.food.push(Food { x, y, energy });
            remaining -= energy;
        }
        Ok(world)
    }

    /// Switches to replay rules; children built from now on draw their
    /// brains from streams keyed by `brain_seed`.
    pub fn into_replay(mut self, brain_seed: u64) -> World {
        self.regime = Regime::Replay;
        self.brain_seed = brain_seed;
        self
    }

    pub fn set_recording(&mut self, record: bool) {
        self.record = record;
    }

    pub fn config(&self) -> &WorldConfig {
        &self.cfg
    }

    pub fn gene_map(&self) -> &GeneMap {
        &self.map
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn agents_mut(&mut self) -> &mut [Agent] {
        &mut self.agents
    }

    pub fn population(&self) -> usize {
        self.agents.len()
    }

    pub fn food(&self) -> &[Food] {
        &self.food
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    pub fn total_energy(&self) -> f64 {
        self.agents.iter().map(|a| a.energy).sum::<f64>() + self.food.iter().map(|f| f.energy).sum::<f64>()
    }

    pub fn genomes(&self) -> impl Iterator<Item = &Genome> {
        self.agents.iter().map(|a| &a.genome)
    }

    fn random_position(&self, rng: &mut RandomStream) -> (f64, f64) {
        (rng.random_range(0.0..self.cfg.width), rng.random_range(0.0..self.cfg.height))
    }

    fn clamp_position(&self, x: f64, y: f64) -> (f64, f64) {
        (x.clamp(0.0, self.cfg.width), y.clamp(0.0, self.cfg.height))
    }

    /// Adds an agent born at the current step, building its brain from the
    /// stream keyed by its id.
    pub fn spawn(&mut self, genome: Genome, x: f64, y: f64, heading: f64, energy: f64) -> Result<u64> {
        let id = self.next_id;
        let values = self.map.decode(&genome);
        let arch = NeuralArchitecture::from_genes(&values, &self.cfg.input_sizes());
        let brain = build_brain(&arch, &mut keyed_stream(self.brain_seed, Purpose::BrainBuild, id))?;
        Ok(self.insert(genome, brain, x, y, heading, energy))
    }

    fn insert(&mut self, genome: Genome, brain: Brain, x: f64, y: f64, heading: f64, energy: f64) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        let upkeep = self.cfg.cost_fixed
            + self.cfg.cost_neuron * brain.n_neurons() as f64
            + self.cfg.cost_synapse * brain.n_synapses() as f64;
        let recording = LifetimeRecording::new(id, self.step, brain.roles().to_vec());
        let (x, y) = self.clamp_position(x, y);
        self.agents.push(Agent {
            id,
            genome,
            brain,
            x,
            y,
            heading,
            energy: energy.min(self.cfg.e_max),
            birth_step: self.step,
            recording,
            upkeep,
            killed: false,
            inputs: vec![0.0; self.cfg.n_inputs()],
        });
        id
    }

    /// Removes the agent at `index`, leaving its corpse as food.
    pub fn remove(&mut self, index: usize, report: &mut StepReport) -> Agent {
        let mut agent = self.agents.remove(index);
        agent.recording.death_step = self.step;
        let remains = agent.energy.max(0.0);
        let corpse = self.cfg.corpse_fraction * remains;
        if corpse > 0.0 {
            self.food.push(Food {
                x: agent.x,
                y: agent.y,
                energy: corpse,
            });
        }
        report.decayed += remains - corpse;
        agent
    }

    /// Produces a child of the agents at indices `a` and `b`.
    pub fn breed(&mut self, a: usize, b: usize, rng: &mut RandomStream) -> Genome {
        let child = crossover(&self.agents[a].genome, &self.agents[b].genome, &self.map, rng);
        mutate(&child, &self.map, rng)
    }

    fn donate(&mut self, a: usize, b: usize) -> f64 {
        let fa = self.cfg.parental_donation * self.agents[a].energy.max(0.0);
        let fb = self.cfg.parental_donation * self.agents[b].energy.max(0.0);
        self.agents[a].energy -= fa;
        self.agents[b].energy -= fb;
        fa + fb
    }

    /// One step under natural rules.
    pub fn step(&mut self, rng: &mut RandomStream) -> Result<StepReport> {
        assert_eq!(self.regime, Regime::Natural, "replay worlds step through step_forced");
        self.step_inner(rng, None)
    }

    /// One replay step with the given imposed births and deaths.
    pub fn step_forced(&mut self, rng: &mut RandomStream, forced: Forced) -> Result<StepReport> {
        assert_eq!(self.regime, Regime::Replay, "natural worlds step through step");
        self.step_inner(rng, Some(forced))
    }

    fn step_inner(&mut self, rng: &mut RandomStream, forced: Option<Forced>) -> Result<StepReport> {
        self.step += 1;
        let mut report = StepReport {
            step: self.step,
            ..StepReport::default()
        };
        self.think();
        self.act();
        self.deplete(&mut report);
        match forced {
            None => {
                self.natural_deaths(&mut report);
                self.natural_births(rng, &mut report)?;
            }
            Some(f) => {
                self.forced_deaths(f.deaths, rng, &mut report)?;
                self.forced_births(f.births, rng, &mut report)?;
            }
        }
        self.regrow(rng, &mut report);
        Ok(report)
    }

    /// Sense, brain step, Hebbian update and recording for every agent.
    fn think(&mut self) {
        let cfg = &self.cfg;
        let mut scene: Vec<Sighting> = Vec::with_capacity(self.agents.len() + self.food.len());
        scene.extend(self.agents.iter().map(|a| Sighting {
            x: a.x,
            y: a.y,
            radius: cfg.agent_radius,
            color: [a.brain.output(Behavior::Attack), 0.0, a.brain.output(Behavior::Mate)],
        }));
        scene.extend(self.food.iter().map(|f| Sighting {
            x: f.x,
            y: f.y,
            radius: cfg.food_radius,
            color: [0.0, 1.0, 0.0],
        }));
        let eye = cfg.eye();
        let record = self.record;
        let colours = 3 * cfg.rays;
        self.agents.par_iter_mut().enumerate().for_each(|(i, agent)| {
            let visible = scene.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, s)| s);
            eye.look(agent.x, agent.y, agent.heading, visible, &mut agent.inputs[..colours]);
            agent.inputs[colours] = (agent.energy / cfg.e_max).clamp(0.0, 1.0);
            agent.brain.step(&agent.inputs).expect("input layout fixed by config");
            agent.brain.hebbian_update();
            if record {
                agent.recording.push_row(agent.brain.activations());
            }
            agent.killed = false;
        });
    }

    fn act(&mut self) {
        let cfg = self.cfg.clone();
        for i in 0..self.agents.len() {
            let (mv, turn, eat, attack) = {
                let b = &self.agents[i].brain;
                (
                    b.output(Behavior::Move),
                    b.output(Behavior::Turn),
                    b.output(Behavior::Eat),
                    b.output(Behavior::Attack),
                )
            };
            let a = &mut self.agents[i];
            let speed = mv * cfg.max_speed;
            a.x = (a.x + speed * a.heading.cos()).clamp(0.0, cfg.width);
            a.y = (a.y + speed * a.heading.sin()).clamp(0.0, cfg.height);
            a.heading = sense::wrap(a.heading + (turn - 0.5) * cfg.max_turn.to_radians());

            if eat > cfg.eat_threshold {
                let (ax, ay) = (a.x, a.y);
                if let Some(k) = nearest(self.food.iter().map(|f| (f.x, f.y)), ax, ay, cfg.reach, None) {
                    let room = (cfg.e_max - self.agents[i].energy).max(0.0);
                    let taken = cfg.bite.min(self.food[k].energy).min(room);
                    self.food[k].energy -= taken;
                    self.agents[i].energy += taken;
                    if self.food[k].energy <= 0.0 {
                        self.food.remove(k);
                    }
                }
            }

            if attack > cfg.attack_threshold {
                let (ax, ay) = (self.agents[i].x, self.agents[i].y);
                let others = self.agents.iter().map(|o| (o.x, o.y));
                if let Some(v) = nearest(others, ax, ay, cfg.reach, Some(i)) {
                    let taken = (attack * cfg.attack_damage).min(self.agents[v].energy.max(0.0));
                    self.agents[v].energy -= taken;
                    if self.agents[v].energy <= 0.0 {
                        self.agents[v].killed = true;
                    }
                    let room = (cfg.e_max - self.agents[i].energy).max(0.0);
                    let gained = taken.min(room);
                    self.agents[i].energy += gained;
                    if taken - gained > 0.0 {
                        let (vx, vy) = (self.agents[v].x, self.agents[v].y);
                        self.food.push(Food {
                            x: vx,
                            y: vy,
                            energy: taken - gained,
                        });
                    }
                }
            }
        }
    }

    fn deplete(&mut self, report: &mut StepReport) {
        let m = population_pressure(self.agents.len(), &self.cfg);
        let floor = self.cfg.energy_floor * self.cfg.e_max;
        for a in &mut self.agents {
            let cost = m * (a.upkeep + a.behaviour_cost(&self.cfg));
            let drawn = cost.min(a.energy.max(0.0));
            a.energy -= drawn;
            report.depleted += drawn;
            if self.regime == Regime::Replay && a.energy < floor {
                report.floored += floor - a.energy;
                a.energy = floor;
            }
        }
    }

    fn natural_deaths(&mut self, report: &mut StepReport) {
        let suppress_old_age = self.agents.len() <= self.cfg.p_min;
        let mut i = 0;
        while i < self.agents.len() {
            let a = &self.agents[i];
            let cause = if a.energy <= 0.0 {
                Some(if a.killed {
                    DeathCause::Killed
                } else {
                    DeathCause::Starvation
                })
            } else if !suppress_old_age && a.age(self.step) > self.cfg.max_age {
                Some(DeathCause::OldAge)
            } else {
                None
            };
            match cause {
                Some(cause) => {
                    let dead = self.remove(i, report);
                    report.events.push(Event {
                        step: self.step,
                        kind: EventKind::Death { agent: dead.id, cause },
                    });
                    report.dead.push(dead);
                }
                None => i += 1,
            }
        }
    }

    fn natural_births(&mut self, rng: &mut RandomStream, report: &mut StepReport) -> Result<()> {
        let cfg = &self.cfg;
        let step = self.step;
        let eligible: Vec<bool> = self
            .agents
            .iter()
            .map(|a| {
                a.brain.output(Behavior::Mate) > cfg.mate_threshold
                    && a.age(step) >= cfg.fecundity_age
                    && a.energy > cfg.parental_min_energy
            })
            .collect();
        let reach2 = cfg.reach * cfg.reach;
        let n = self.agents.len();
        let mut mated = vec![false; n];
        let mut pairs = Vec::new();
        for i in 0..n {
            if !eligible[i] || mated[i] {
                continue;
            }
            let (xi, yi) = (self.agents[i].x, self.agents[i].y);
            let partner = (i + 1..n).find(|&j| {
                let (dx, dy) = (self.agents[j].x - xi, self.agents[j].y - yi);
                eligible[j] && !mated[j] && dx * dx + dy * dy <= reach2
            });
            if let Some(j) = partner {
                mated[i] = true;
                mated[j] = true;
                pairs.push((i, j));
            }
        }
        for (i, j) in pairs {
            let genome = self.breed(i, j, rng);
            let theta = rng.random_range(-PI..PI);
            let (pi, pj) = (&self.agents[i], &self.agents[j]);
            let x = 0.5 * (pi.x + pj.x) + self.cfg.reach * theta.cos();
            let y = 0.5 * (pi.y + pj.y) + self.cfg.reach * theta.sin();
            let heading = rng.random_range(-PI..PI);
            let parents = (pi.id, pj.id);
            // a stillborn decode leaves the parents untouched
            let energy = self.cfg.parental_donation * (pi.energy + pj.energy);
            match self.spawn(genome, x, y, heading, energy) {
                Ok(child) => {
                    self.donate(i, j);
                    report.events.push(Event {
                        step: self.step,
                        kind: EventKind::Birth { child, parents },
                    });
                }
                Err(Error::Brain(_)) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    fn forced_deaths(&mut self, count: usize, rng: &mut RandomStream, report: &mut StepReport) -> Result<()> {
        for _ in 0..count {
            if self.agents.is_empty() {
                return Err(Error::Inconsistency {
                    step: self.step,
                    reason: "forced death with an empty population".into(),
                });
            }
            let victim = rng.random_range(0..self.agents.len());
            let dead = self.remove(victim, report);
            report.events.push(Event {
                step: self.step,
                kind: EventKind::Death {
                    agent: dead.id,
                    cause: DeathCause::Forced,
                },
            });
            report.dead.push(dead);
        }
        Ok(())
    }

    fn forced_births(&mut self, count: usize, rng: &mut RandomStream, report: &mut StepReport) -> Result<()> {
        let adults = self.agents.len();
        if count > 0 && adults < 2 {
            return Err(Error::Inconsistency {
                step: self.step,
                reason: format!("forced birth needs two distinct parents, population is {adults}"),
            });
        }
        for _ in 0..count {
            let a = rng.random_range(0..adults);
            let mut b = rng.random_range(0..adults - 1);
            if b >= a {
                b += 1;
            }
            let genome = self.breed(a, b, rng);
            let (x, y) = self.random_position(rng);
            let heading = rng.random_range(-PI..PI);
            let parents = (self.agents[a].id, self.agents[b].id);
            let energy = self.donate(a, b);
            let child = self.spawn(genome, x, y, heading, energy).map_err(|e| Error::Inconsistency {
                step: self.step,
                reason: format!("forced birth produced a stillborn child: {e}"),
            })?;
            report.events.push(Event {
                step: self.step,
                kind: EventKind::Birth { child, parents },
            });
        }
        Ok(())
    }

    /// Culls the agent at `victim` in favour of a child of `parents`, placed
    /// uniformly at random. A stillborn child leaves the population as it was.
    pub fn replace(
        &mut self,
        victim: usize,
        parents: (usize, usize),
        rng: &mut RandomStream,
        report: &mut StepReport,
    ) -> Result<bool> {
        let (a, b) = parents;
        assert!(a != b && victim != a && victim != b, "replacement needs three distinct agents");
        let genome = self.breed(a, b, rng);
        let (x, y) = self.random_position(rng);
        let heading = rng.random_range(-PI..PI);
        let ids = (self.agents[a].id, self.agents[b].id);
        let energy = self.cfg.parental_donation * (self.agents[a].energy + self.agents[b].energy);
        let child = match self.spawn(genome, x, y, heading, energy) {
            Ok(child) => child,
            Err(Error::Brain(_)) => return Ok(false),
            Err(e) => return Err(e),
        };
        self.donate(a, b);
        let dead = self.remove(victim, report);
        report.events.push(Event {
            step: self.step,
            kind: EventKind::Death {
                agent: dead.id,
                cause: DeathCause::Replaced,
            },
        });
        report.events.push(Event {
            step: self.step,
            kind: EventKind::Birth { child, parents: ids },
        });
        report.dead.push(dead);
        Ok(true)
    }

    fn regrow(&mut self, rng: &mut RandomStream, report: &mut StepReport) {
        if self.cfg.food_growth <= 0.0 || self.cfg.food_cap <= 0.0 {
            return;
        }
        let current: f64 = self.food.iter().map(|f| f.energy).sum::<f64>() + self.food_bank;
        let added = self.cfg.food_growth * (1.0 - current / self.cfg.food_cap);
        if added <= 0.0 {
            return;
        }
        self.food_bank += added;
        report.grown += added;
        while self.food_bank >= self.cfg.food_item_energy {
            let (x, y) = self.random_position(rng);
            self.food.push(Food {
                x,
                y,
                energy: self.cfg.food_item_energy,
            });
            self.food_bank -= self.cfg.food_item_energy;
        }
    }

    /// Energy held by regrowth not yet placed as food.
    pub fn food_bank(&self) -> f64 {
        self.food_bank
    }
}

/// Index of the nearest point within `reach` of `(x, y)`; ties go to the
/// lower index.
fn nearest(points: impl Iterator<Item = (f64, f64)>, x: f64, y: f64, reach: f64, skip: Option<usize>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, (px, py)) in points.enumerate() {
        if Some(k) == skip {
            continue;
        }
        let d2 = (px - x) * (px - x) + (py - y) * (py - y);
        if d2 <= reach * reach && best.is_none_or(|(_, b)| d2 < b) {
            best = Some((k, d2));
        }
    }
    best.map(|(k, _)| k)
}
