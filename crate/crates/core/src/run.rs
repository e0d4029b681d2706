//! Whole-run drivers and the sinks that receive their outputs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;

use crate::artifact::{self, PopulationRow, Snapshot};
use crate::complexity::{analyze_recording, analyze_trace, build_trace, ComplexityReport, ComplexitySettings, LifetimeRecording};
use crate::config::{Mode, RunConfig};
use crate::error::{Error, Result};
use crate::genome::GeneMap;
use crate::lockstep::LockstepSchedule;
use crate::rng::{keyed_stream, mix, stream, Purpose, RandomStream};
use crate::world::event::EVENT_LOG_COLUMNS;
use crate::world::{Agent, ArtifactHeader, DeathCause, Event, EventKind, EventLog, StepReport, World};

pub const DONE_MARKER: &str = "DONE";
pub const PARTIAL_MARKER: &str = "PARTIAL";

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub header: ArtifactHeader,
    pub steps: u64,
    pub births: usize,
    pub deaths: usize,
    pub initial_population: usize,
    pub final_population: usize,
    pub peak_population: usize,
    /// First step at which the population reached zero.
    pub extinct_at: Option<u64>,
    /// Seed of the driven run whose schedule a lockstep run replayed.
    pub driven_seed: Option<u64>,
    /// Replacements made by the complexity-fitness scheme.
    pub replacements: usize,
}

impl RunSummary {
    pub fn to_text(&self) -> String {
        let opt = |v: Option<u64>| v.map_or("none".to_string(), |v| v.to_string());
        format!(
            "# {}\nsteps = {}\nbirths = {}\ndeaths = {}\ninitial_population = {}\nfinal_population = {}\n\
             peak_population = {}\nextinct_at = {}\ndriven_seed = {}\nreplacements = {}\n",
            self.header.to_text(),
            self.steps,
            self.births,
            self.deaths,
            self.initial_population,
            self.final_population,
            self.peak_population,
            opt(self.extinct_at),
            opt(self.driven_seed),
            self.replacements,
        )
    }
}

/// Receives a run's outputs as they are produced.
pub trait Sink {
    fn begin(&mut self, _header: &ArtifactHeader, _cfg: &RunConfig, _map: &GeneMap) -> Result<()> {
        Ok(())
    }
    fn step(&mut self, _row: &PopulationRow, _events: &[Event]) -> Result<()> {
        Ok(())
    }
    /// Called once per dead agent, recording complete.
    fn death(&mut self, _agent: &Agent) -> Result<()> {
        Ok(())
    }
    fn snapshot(&mut self, _snapshot: &Snapshot) -> Result<()> {
        Ok(())
    }
    fn finish(&mut self, _summary: &RunSummary) -> Result<()> {
        Ok(())
    }
}

impl<A: Sink, B: Sink> Sink for (A, B) {
    fn begin(&mut self, header: &ArtifactHeader, cfg: &RunConfig, map: &GeneMap) -> Result<()> {
        self.0.begin(header, cfg, map)?;
        self.1.begin(header, cfg, map)
    }
    fn step(&mut self, row: &PopulationRow, events: &[Event]) -> Result<()> {
        self.0.step(row, events)?;
        self.1.step(row, events)
    }
    fn death(&mut self, agent: &Agent) -> Result<()> {
        self.0.death(agent)?;
        self.1.death(agent)
    }
    fn snapshot(&mut self, snapshot: &Snapshot) -> Result<()> {
        self.0.snapshot(snapshot)?;
        self.1.snapshot(snapshot)
    }
    fn finish(&mut self, summary: &RunSummary) -> Result<()> {
        self.0.finish(summary)?;
        self.1.finish(summary)
    }
}

/// Keeps outputs in memory. Dead agents' recordings are kept, reduced to
/// complexity reports on the fly, or both.
#[derive(Debug, Default)]
pub struct Collector {
    pub log: Option<EventLog>,
    pub population: Vec<PopulationRow>,
    pub snapshots: Vec<Snapshot>,
    pub recordings: Vec<LifetimeRecording>,
    pub reports: Vec<ComplexityReport>,
    keep_recordings: bool,
    analyze: Option<ComplexitySettings>,
    seed: u64,
}

impl Collector {
    /// Keeps everything, recordings included.
    pub fn everything() -> Self {
        Collector {
            keep_recordings: true,
            ..Collector::default()
        }
    }

    /// Computes a complexity report per dead agent and drops its recording.
    pub fn reporting(settings: ComplexitySettings) -> Self {
        Collector {
            analyze: Some(settings),
            ..Collector::default()
        }
    }

    /// Keeps neither recordings nor reports.
    pub fn lean() -> Self {
        Collector::default()
    }

    pub fn log(&self) -> &EventLog {
        self.log.as_ref().expect("run has begun")
    }
}

impl Sink for Collector {
    fn begin(&mut self, header: &ArtifactHeader, _cfg: &RunConfig, _map: &GeneMap) -> Result<()> {
        self.log = Some(EventLog::new(header.clone()));
        self.seed = header.seed;
        Ok(())
    }

    fn step(&mut self, row: &PopulationRow, events: &[Event]) -> Result<()> {
        self.population.push(*row);
        self.log.as_mut().expect("run has begun").extend(events.iter().copied());
        Ok(())
    }

    fn death(&mut self, agent: &Agent) -> Result<()> {
        if let Some(settings) = &self.analyze {
            let mut rng = keyed_stream(self.seed, Purpose::Jitter, agent.id);
            self.reports.push(analyze_recording(&agent.recording, settings, &mut rng));
        }
        if self.keep_recordings {
            self.recordings.push(agent.recording.clone());
        }
        Ok(())
    }

    fn snapshot(&mut self, snapshot: &Snapshot) -> Result<()> {
        self.snapshots.push(snapshot.clone());
        Ok(())
    }
}

/// File names inside a run directory.
pub mod files {
    pub const CONFIG: &str = "config.txt";
    pub const GENE_MAP: &str = "genemap.txt";
    pub const EVENTS: &str = "events.csv";
    pub const POPULATION: &str = "population.csv";
    pub const SNAPSHOTS: &str = "snapshots.bin";
    pub const TRACES: &str = "traces";
    pub const SUMMARY: &str = "summary.txt";
    /// Wall-clock timing; excluded from the determinism contract.
    pub const TIMING: &str = "timing.txt";
}

/// Writes a run's artifacts under one directory. A `PARTIAL` marker stands
/// until the run finishes, when it is replaced by `DONE`.
pub struct ArtifactDir {
    dir: PathBuf,
    header: Option<ArtifactHeader>,
    events: Option<BufWriter<File>>,
    population: Option<BufWriter<File>>,
    snapshots: Option<BufWriter<File>>,
    traces: bool,
    started: std::time::Instant,
}

impl ArtifactDir {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ArtifactDir {
            dir: dir.into(),
            header: None,
            events: None,
            population: None,
            snapshots: None,
            traces: true,
            started: std::time::Instant::now(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let p = self.path(name);
        File::create(&p).map(BufWriter::new).map_err(|e| Error::io(p, e))
    }

    fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, contents).map_err(|e| Error::io(p, e))
    }

    fn put(w: &mut Option<BufWriter<File>>, path: &Path, bytes: &[u8]) -> Result<()> {
        w.as_mut()
            .expect("run has begun")
            .write_all(bytes)
            .map_err(|e| Error::io(path, e))
    }
}

impl Sink for ArtifactDir {
    fn begin(&mut self, header: &ArtifactHeader, cfg: &RunConfig, map: &GeneMap) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let _ = fs::remove_file(self.path(DONE_MARKER));
        self.write(PARTIAL_MARKER, "")?;
        self.traces = cfg.record_traces;
        if self.traces {
            let t = self.path(files::TRACES);
            if t.exists() {
                fs::remove_dir_all(&t).map_err(|e| Error::io(&t, e))?;
            }
            fs::create_dir_all(&t).map_err(|e| Error::io(&t, e))?;
        }
        self.write(files::CONFIG, cfg.to_text())?;
        self.write(files::GENE_MAP, map.to_table())?;
        let head = format!("# {}\n", header.to_text());
        let mut events = self.create(files::EVENTS)?;
        let mut population = self.create(files::POPULATION)?;
        let mut snapshots = self.create(files::SNAPSHOTS)?;
        let io = |name: &str, e| Error::io(self.path(name), e);
        events
            .write_all(format!("{head}{EVENT_LOG_COLUMNS}\n").as_bytes())
            .map_err(|e| io(files::EVENTS, e))?;
        population
            .write_all(format!("{head}{}\n", artifact::POPULATION_COLUMNS).as_bytes())
            .map_err(|e| io(files::POPULATION, e))?;
        snapshots
            .write_all(&artifact::encode_snapshot_header(header, map.genome_len()))
            .map_err(|e| io(files::SNAPSHOTS, e))?;
        self.events = Some(events);
        self.population = Some(population);
        self.snapshots = Some(snapshots);
        self.header = Some(header.clone());
        self.started = std::time::Instant::now();
        Ok(())
    }

    fn step(&mut self, row: &PopulationRow, events: &[Event]) -> Result<()> {
        let mut text = String::new();
        for e in events {
            text.push_str(&e.to_csv());
            text.push('\n');
        }
        let p = self.path(files::EVENTS);
        Self::put(&mut self.events, &p, text.as_bytes())?;
        let p = self.path(files::POPULATION);
        Self::put(&mut self.population, &p, artifact::population_csv_line(row).as_bytes())
    }

    fn death(&mut self, agent: &Agent) -> Result<()> {
        if !self.traces {
            return Ok(());
        }
        let p = self.dir.join(files::TRACES).join(artifact::trace_file_name(agent.id));
        artifact::write_trace(&p, self.header.as_ref().expect("run has begun"), &agent.recording)
    }

    fn snapshot(&mut self, snapshot: &Snapshot) -> Result<()> {
        let p = self.path(files::SNAPSHOTS);
        Self::put(&mut self.snapshots, &p, &artifact::encode_snapshot(snapshot))
    }

    fn finish(&mut self, summary: &RunSummary) -> Result<()> {
        for (name, w) in [
            (files::EVENTS, self.events.take()),
            (files::POPULATION, self.population.take()),
            (files::SNAPSHOTS, self.snapshots.take()),
        ] {
            if let Some(mut w) = w {
                w.flush().map_err(|e| Error::io(self.path(name), e))?;
            }
        }
        self.write(files::SUMMARY, summary.to_text())?;
        self.write(
            files::TIMING,
            format!("wall_seconds = {:.3}\n", self.started.elapsed().as_secs_f64()),
        )?;
        self.write(DONE_MARKER, "")?;
        fs::remove_file(self.path(PARTIAL_MARKER)).map_err(|e| Error::io(self.path(PARTIAL_MARKER), e))
    }
}

pub fn is_complete(dir: &Path) -> bool {
    dir.join(DONE_MARKER).is_file()
}

fn snapshot_of(world: &World) -> Snapshot {
    Snapshot {
        step: world.step_count(),
        ids: world.agents().iter().map(|a| a.id).collect(),
        genomes: world.genomes().cloned().collect(),
    }
}

/// Steps `world` to `cfg.steps`, feeding `sink`.
fn drive(
    cfg: &RunConfig,
    mut world: World,
    header: ArtifactHeader,
    driven_seed: Option<u64>,
    sink: &mut impl Sink,
    mut advance: impl FnMut(&mut World) -> Result<StepReport>,
) -> Result<RunSummary> {
    world.set_recording(true);
    sink.begin(&header, cfg, world.gene_map())?;
    let initial = world.population();
    let mut summary = RunSummary {
        header,
        steps: cfg.steps,
        births: 0,
        deaths: 0,
        initial_population: initial,
        final_population: initial,
        peak_population: initial,
        extinct_at: (initial == 0).then_some(0),
        driven_seed,
        replacements: 0,
    };
    sink.step(
        &PopulationRow {
            step: 0,
            population: initial,
            births: 0,
            deaths: 0,
        },
        &[],
    )?;
    sink.snapshot(&snapshot_of(&world))?;
    for _ in 0..cfg.steps {
        let report = advance(&mut world)?;
        let (births, deaths) = (report.births(), report.deaths());
        summary.births += births;
        summary.deaths += deaths;
        summary.replacements += report
            .events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::Death { cause: DeathCause::Replaced, .. }))
            .count();
        let pop = world.population();
        summary.peak_population = summary.peak_population.max(pop);
        if pop == 0 && summary.extinct_at.is_none() {
            summary.extinct_at = Some(report.step);
        }
        sink.step(
            &PopulationRow {
                step: report.step,
                population: pop,
                births,
                deaths,
            },
            &report.events,
        )?;
        for dead in &report.dead {
            sink.death(dead)?;
        }
        if report.step % cfg.snapshot_interval == 0 || report.step == cfg.steps {
            sink.snapshot(&snapshot_of(&world))?;
        }
    }
    summary.final_population = world.population();
    sink.finish(&summary)?;
    Ok(summary)
}

fn initial_world(cfg: &RunConfig, seed: u64) -> Result<World> {
    cfg.validate()?;
    let map = Arc::new(cfg.gene_map()?);
    let founder = cfg.founder_genome(&map);
    World::new(cfg.world.clone(), map, &founder, seed)
}

/// Natural selection: births from mating, deaths from starvation, age and
/// attack.
pub fn run_driven(cfg: &RunConfig, seed: u64, sink: &mut impl Sink) -> Result<RunSummary> {
    let world = initial_world(cfg, seed)?;
    let header = ArtifactHeader::new(cfg.hash(), seed, Mode::Driven.as_str());
    let mut rng = stream(seed, Purpose::World);
    drive(cfg, world, header, None, sink, |w| w.step(&mut rng))
}

/// Replays `schedule` from the driven run's initial conditions, drawing
/// victims, parents and everything else from `replay_seed`.
pub fn run_lockstep(
    cfg: &RunConfig,
    schedule: &LockstepSchedule,
    replay_seed: u64,
    sink: &mut impl Sink,
) -> Result<RunSummary> {
    schedule.check_config(cfg.hash())?;
    if schedule.steps() != cfg.steps {
        return Err(Error::Mismatch(format!(
            "schedule covers {} steps, run wants {}",
            schedule.steps(),
            cfg.steps
        )));
    }
    let driven_seed = schedule.source().seed;
    let world = initial_world(cfg, driven_seed)?.into_replay(replay_seed);
    let header = ArtifactHeader::new(cfg.hash(), replay_seed, Mode::Lockstep.as_str());
    let mut rng = stream(replay_seed, Purpose::Replay);
    drive(cfg, world, header, Some(driven_seed), sink, |w| {
        let forced = schedule.at(w.step_count() + 1);
        w.step_forced(&mut rng, forced)
    })
}

/// A driven run in which, every `fitness.interval` steps, the agent with the
/// lowest complexity over its last `fitness.window` steps is replaced by a
/// child of two parents drawn in proportion to their window complexity.
/// Agents without a valid window score are exempt; fewer than three agents
/// suspend replacement.
pub fn run_fitness(cfg: &RunConfig, seed: u64, sink: &mut impl Sink) -> Result<RunSummary> {
    let world = initial_world(cfg, seed)?;
    let header = ArtifactHeader::new(cfg.hash(), seed, Mode::ComplexityFitness.as_str());
    let mut rng = stream(seed, Purpose::World);
    drive(cfg, world, header, None, sink, |w| {
        let mut report = w.step(&mut rng)?;
        if report.step % cfg.fitness.interval == 0 && w.population() >= 3 {
            let scores = window_scores(w, cfg, mix(seed ^ report.step));
            replace_weakest(w, &scores, &mut rng, &mut report)?;
        }
        Ok(report)
    })
}

/// Approximate complexity over each agent's trailing window, `None` when
/// the window is unusable.
pub fn window_scores(world: &World, cfg: &RunConfig, key: u64) -> Vec<Option<f64>> {
    world
        .agents()
        .iter()
        .map(|a| {
            let mut rng = keyed_stream(key, Purpose::Jitter, a.id);
            let s = &cfg.complexity;
            let trace = build_trace(&a.recording, s.filter, s.jitter, Some(cfg.fitness.window), &mut rng);
            let r = analyze_trace(&trace, world.step_count(), 0);
            r.is_valid().then_some(r.c_approx)
        })
        .collect()
}

fn replace_weakest(
    world: &mut World,
    scores: &[Option<f64>],
    rng: &mut RandomStream,
    report: &mut StepReport,
) -> Result<bool> {
    let victim = scores
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|c| (i, c)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i);
    let Some(victim) = victim else {
        return Ok(false);
    };
    let mut weights: Vec<f64> = scores.iter().map(|s| s.unwrap_or(0.0).max(0.0)).collect();
    weights[victim] = 0.0;
    if weights.iter().filter(|w| **w > 0.0).count() < 2 {
        weights = (0..scores.len()).map(|i| if i == victim { 0.0 } else { 1.0 }).collect();
    }
    let a = weighted_pick(&weights, rng);
    weights[a] = 0.0;
    let b = weighted_pick(&weights, rng);
    world.replace(victim, (a, b), rng, report)
}

fn weighted_pick(weights: &[f64], rng: &mut RandomStream) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random_range(0.0..total);
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).expect("positive total weight")
}

/// Runs `cfg.mode` into `sink`; lockstep runs need a schedule.
pub fn run(
    cfg: &RunConfig,
    schedule: Option<&LockstepSchedule>,
    sink: &mut impl Sink,
) -> Result<RunSummary> {
    match cfg.mode {
        Mode::Driven => run_driven(cfg, cfg.seed, sink),
        Mode::ComplexityFitness => run_fitness(cfg, cfg.seed, sink),
        Mode::Lockstep => {
            let schedule = schedule.ok_or_else(|| Error::Config("lockstep requires a driven event log".into()))?;
            run_lockstep(cfg, schedule, cfg.seed, sink)
        }
    }
}
