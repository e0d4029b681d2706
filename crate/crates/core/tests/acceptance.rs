//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Stochastic criteria run on pinned seeds.

mod common;

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{random_pd, rng, tse_brute_force, tse_conditional, Matrix};
use evotrend_core::analysis::{
    bin_by_death, bit_frequency, genomic_consistency, paired_t, paired_t_statistic, significant_runs, TSeries,
};
use evotrend_core::artifact::{PopulationRow, Snapshot};
use evotrend_core::complexity::{complexity_approx, complexity_exact, gaussian_entropy, integration, CovarianceModel};
use evotrend_core::genome::Genome;
use evotrend_core::run::{files, run, run_driven, run_lockstep, ArtifactDir, Collector, Sink};
use evotrend_core::world::{Agent, Event};
use evotrend_core::{LockstepSchedule, Mode, RunConfig, RunSummary, Tails};
use rand::Rng;
use rayon::prelude::*;
use statrs::statistics::Statistics;

const REPLAY_OFFSET: u64 = 1_000_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn model(m: &Matrix) -> CovarianceModel {
    CovarianceModel::from_covariance(m.n, m.a.clone())
}

/// The desk world: 5,000 steps unless stated, soft population ceiling 60.
fn desk(steps: u64) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.steps = steps;
    cfg.world.p_max = 60;
    cfg
}

fn approx_dual_path() -> Outcome {
    let mut r = rng(2024);
    let models: Vec<Matrix> = (0..100)
        .map(|_| {
            let n = r.random_range(2..=10);
            random_pd(n, &mut r)
        })
        .collect();
    let t = Instant::now();
    let fast: Vec<f64> = models.iter().map(|m| complexity_approx(&model(m)).unwrap()).collect();
    let elapsed = t.elapsed();
    let worst = models
        .iter()
        .zip(&fast)
        .map(|(m, c)| (c - tse_conditional(m)).abs())
        .fold(0.0, f64::max);
    outcome(
        worst < 1e-9 && elapsed < Duration::from_secs(1),
        format!("max |Δ| = {worst:.2e} bits over 100 models, {:.1} ms", elapsed.as_secs_f64() * 1e3),
    )
}

fn exact_brute_force() -> Outcome {
    let mut r = rng(1999);
    let models: Vec<Matrix> = (0..20)
        .map(|_| {
            let n = r.random_range(1..=8);
            random_pd(n, &mut r)
        })
        .collect();
    let t = Instant::now();
    let exact: Vec<f64> = models
        .iter()
        .map(|m| complexity_exact(&model(m), 12).unwrap().unwrap())
        .collect();
    let elapsed = t.elapsed();
    let worst = models
        .iter()
        .zip(&exact)
        .map(|(m, c)| (c - tse_brute_force(m)).abs())
        .fold(0.0, f64::max);
    let mut diag_worst: f64 = 0.0;
    for n in 1..=8 {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 1.7;
        }
        let m = Matrix { n, a };
        diag_worst = diag_worst
            .max(complexity_exact(&model(&m), 12).unwrap().unwrap().abs())
            .max(complexity_approx(&model(&m)).unwrap().abs());
    }
    outcome(
        worst < 1e-9 && diag_worst < 1e-9 && elapsed < Duration::from_secs(10),
        format!(
            "max |Δ| = {worst:.2e} bits over 20 models, diagonal max |C| = {diag_worst:.2e}, {:.1} ms",
            elapsed.as_secs_f64() * 1e3
        ),
    )
}

fn closed_forms() -> Outcome {
    let uni = gaussian_entropy(&CovarianceModel::from_covariance(1, vec![1.0]), &[0]).unwrap();
    let bi = integration(&CovarianceModel::from_covariance(2, vec![1.0, 0.5, 0.5, 1.0])).unwrap();
    outcome(
        (uni - 2.0471).abs() <= 1e-4 && (bi - 0.2075).abs() <= 1e-4,
        format!("H(unit normal) = {uni:.6} bits, I(ρ=0.5) = {bi:.6} bits"),
    )
}

struct Pair {
    driven: Collector,
    lockstep: Collector,
    schedule: LockstepSchedule,
    summaries: (RunSummary, RunSummary),
    elapsed: Duration,
}

fn run_pair(cfg: &RunConfig, seed: u64, mut driven: Collector, mut lockstep: Collector) -> Pair {
    let t = Instant::now();
    let sd = run_driven(cfg, seed, &mut driven).expect("driven run");
    let schedule = LockstepSchedule::from_log(driven.log(), cfg.steps).expect("schedule");
    let sl = run_lockstep(cfg, &schedule, seed + REPLAY_OFFSET, &mut lockstep).expect("lockstep run");
    Pair {
        driven,
        lockstep,
        schedule,
        summaries: (sd, sl),
        elapsed: t.elapsed(),
    }
}

fn lockstep_identity(pairs: &[Pair]) -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        let same = p.driven.population == p.lockstep.population;
        let forced = (p.summaries.1.births, p.summaries.1.deaths);
        let scheduled = (p.schedule.total_births(), p.schedule.total_deaths());
        let fast = p.elapsed < Duration::from_secs(600);
        ok &= same && forced == scheduled && fast;
        notes.push(format!(
            "seed {}: same={same} births/deaths {}/{} of {}/{}, {:.1}s",
            i + 1,
            forced.0,
            forced.1,
            scheduled.0,
            scheduled.1,
            p.elapsed.as_secs_f64()
        ));
    }
    outcome(ok, notes.join("; "))
}

fn final_genomes(c: &Collector) -> &[Genome] {
    &c.snapshots.last().expect("final snapshot").genomes
}

/// A larger desk world in which the passive run can reach drift balance:
/// neutral drift needs population × mutation rate of about 4 for per-site
/// entropy above 0.9 bits.
fn drift_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.apply(
        "steps = 15000
         width = 250
         height = 250
         initial_agents = 250
         p_min = 250
         p_max = 600
         food_growth = 150
         food_cap = 25000
         initial_food = 10000
         max_age = 400
         seed_mutation_rate = 0.04
         record_traces = false",
    )
    .expect("drift config");
    cfg
}

fn passive_drift() -> Outcome {
    let cfg = drift_config();
    let t = Instant::now();
    let p = run_pair(&cfg, 1, Collector::lean(), Collector::lean());
    let genomes = final_genomes(&p.lockstep);
    if genomes.is_empty() {
        return outcome(false, "lockstep population extinct");
    }
    let len = genomes[0].len() as f64;
    let gc = genomic_consistency(genomes).gc;
    let bits = bit_frequency(genomes);
    let driven_gc = final_genomes(&p.driven).first().map(|_| genomic_consistency(final_genomes(&p.driven)).gc);
    outcome(
        (0.45..=0.55).contains(&bits) && gc < 0.1 * len,
        format!(
            "seed 1, {} agents: bit frequency {bits:.3}, GC {gc:.1} < {:.1} (driven GC {:.1}), {:.0}s",
            genomes.len(),
            0.1 * len,
            driven_gc.unwrap_or(f64::NAN),
            t.elapsed().as_secs_f64()
        ),
    )
}

fn driven_consistency(pairs: &[Pair]) -> Outcome {
    let mut wins = 0;
    let mut notes = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        let (d, l) = (final_genomes(&p.driven), final_genomes(&p.lockstep));
        if d.is_empty() || l.is_empty() {
            notes.push(format!("seed {}: extinct", i + 1));
            continue;
        }
        let (gd, gl) = (genomic_consistency(d).gc, genomic_consistency(l).gc);
        wins += usize::from(gd > gl);
        notes.push(format!("seed {}: {gd:.1} vs {gl:.1}", i + 1));
    }
    outcome(wins >= 2, format!("driven > lockstep in {wins}/3 ({})", notes.join(", ")))
}

fn t_line(t: &TSeries) -> String {
    t.bins
        .iter()
        .map(|b| b.t.map_or("-".into(), |v| format!("{v:.2}")))
        .collect::<Vec<_>>()
        .join(" ")
}

fn early_advantage() -> Outcome {
    let cfg = desk(10_000);
    let t0 = Instant::now();
    let pairs: Vec<Pair> = (1..=10u64)
        .into_par_iter()
        .map(|seed| run_pair(&cfg, seed, Collector::reporting(cfg.complexity), Collector::reporting(cfg.complexity)))
        .collect();
    let w = cfg.analysis.bin_width;
    let d: Vec<_> = pairs.iter().map(|p| bin_by_death(&p.driven.reports, w, cfg.steps)).collect();
    let l: Vec<_> = pairs.iter().map(|p| bin_by_death(&p.lockstep.reports, w, cfg.steps)).collect();
    let t = paired_t(&d, &l, 0.05, Tails::One);
    let early = t.bins.len() / 2;
    let runs = significant_runs(&t, 2);
    let critical = t.bins.iter().find_map(|b| b.t_critical).unwrap_or(f64::NAN);
    let hit = runs.iter().find(|&&k| k < early);
    outcome(
        hit.is_some(),
        format!(
            "seeds 1-10, T* = {critical:.3}; t = [{}]; first contiguous pair {} ({:.0}s)",
            t_line(&t),
            hit.map_or("none".into(), |k| format!("at bins {}-{}", k + 1, k + 2)),
            t0.elapsed().as_secs_f64()
        ),
    )
}

fn statistics_oracle() -> Outcome {
    let mut r = rng(77);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = r.random_range(2..=25);
        let d: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.5)).collect();
        let reference = d.iter().mean() / (d.iter().std_dev() / (n as f64).sqrt());
        let ours = paired_t_statistic(&d).unwrap();
        worst = worst.max(((ours - reference) / reference).abs());
    }
    let fixture = paired_t_statistic(&[1.0, 2.0, 3.0]).unwrap();
    let driven: Vec<_> = [1.0, 2.0, 3.0].iter().map(|&x| one_bin(x)).collect();
    let passive: Vec<_> = (0..3).map(|_| one_bin(0.0)).collect();
    let df = paired_t(&driven, &passive, 0.05, Tails::One).bins[0].df;
    outcome(
        worst < 1e-12 && (fixture - 3.4641).abs() < 1e-4 && df == Some(2),
        format!("max relative error {worst:.1e}; {{1,2,3}} → t = {fixture:.4}, df {df:?}"),
    )
}

fn one_bin(x: f64) -> evotrend_core::analysis::BinnedSeries {
    evotrend_core::analysis::BinnedSeries {
        width: 1000,
        bins: vec![evotrend_core::analysis::Bin {
            end_step: 1000,
            mean: Some(x),
            count: 1,
            excluded: 0,
        }],
    }
}

fn gc_identities(pairs: &[Pair]) -> Outcome {
    let mut checked = 0;
    let mut exact = true;
    for c in pairs.iter().flat_map(|p| [&p.driven, &p.lockstep]) {
        for s in c.snapshots.iter().filter(|s| !s.genomes.is_empty()) {
            let g = genomic_consistency(&s.genomes);
            let sum: f64 = g.site_entropy.iter().sum();
            exact &= g.gc + sum == s.genomes[0].len() as f64;
            checked += 1;
        }
    }
    let founders = &pairs[0].driven.snapshots[0].genomes;
    let uniform = genomic_consistency(founders).gc == founders[0].len() as f64;
    let hand: Vec<Genome> = ["00", "01", "11", "11"]
        .iter()
        .map(|r| Genome::from_fn(2, |i| r.as_bytes()[i] == b'1'))
        .collect();
    let example = genomic_consistency(&hand).gc;
    outcome(
        exact && uniform && (example - 0.1887).abs() < 1e-4,
        format!("GC + ΣH = L on {checked} snapshots: {exact}; founders GC = L: {uniform}; hand example {example:.4}"),
    )
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for name in [files::EVENTS, files::SNAPSHOTS] {
        out.push((name.to_string(), fs::read(dir.join(name)).unwrap()));
    }
    let mut traces: Vec<_> = fs::read_dir(dir.join(files::TRACES))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    traces.sort();
    for t in traces {
        out.push((t.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&t).unwrap()));
    }
    out
}

fn determinism() -> Outcome {
    let mut cfg = desk(2000);
    cfg.seed = 11;
    cfg.mode = Mode::Driven;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(&cfg, None, &mut ArtifactDir::new(a.path())).unwrap();
    run(&cfg, None, &mut ArtifactDir::new(b.path())).unwrap();
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    let traces = ta.len() - 2;
    outcome(
        ta == tb && traces > 0,
        format!("event log, snapshots and {traces} trace files byte-identical: {}", ta == tb),
    )
}

/// Tracks the workload an artifact-writing run actually carried.
struct Workload {
    inner: ArtifactDir,
    peak: usize,
    max_neurons: usize,
}

impl Sink for Workload {
    fn begin(
        &mut self,
        header: &evotrend_core::ArtifactHeader,
        cfg: &RunConfig,
        map: &evotrend_core::GeneMap,
    ) -> evotrend_core::Result<()> {
        self.inner.begin(header, cfg, map)
    }
    fn step(&mut self, row: &PopulationRow, events: &[Event]) -> evotrend_core::Result<()> {
        self.peak = self.peak.max(row.population);
        self.inner.step(row, events)
    }
    fn death(&mut self, agent: &Agent) -> evotrend_core::Result<()> {
        self.max_neurons = self.max_neurons.max(agent.recording.n_columns());
        self.inner.death(agent)
    }
    fn snapshot(&mut self, s: &Snapshot) -> evotrend_core::Result<()> {
        self.inner.snapshot(s)
    }
    fn finish(&mut self, summary: &RunSummary) -> evotrend_core::Result<()> {
        self.inner.finish(summary)
    }
}

fn throughput() -> Outcome {
    let mut cfg = desk(5000);
    cfg.world.p_max = 50;
    let dir = tempfile::tempdir().unwrap();
    let mut sink = Workload {
        inner: ArtifactDir::new(dir.path()),
        peak: 0,
        max_neurons: 0,
    };
    let t = Instant::now();
    run_driven(&cfg, 1, &mut sink).unwrap();
    let elapsed = t.elapsed();
    outcome(
        elapsed < Duration::from_secs(300) && sink.peak <= 60 && sink.max_neurons <= 150,
        format!(
            "5000 steps with traces written, peak {} agents, ≤ {} neurons/agent: {:.1}s",
            sink.peak,
            sink.max_neurons,
            elapsed.as_secs_f64()
        ),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, &str, Outcome, Duration)> = Vec::new();
    let mut check = |n: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let e = t.elapsed();
        println!(
            "criterion {n:>2} {:<4} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            e.as_secs_f64()
        );
        results.push((n, name, o, e));
    };

    check(1, "leave-one-out dual path", &mut approx_dual_path);
    check(2, "exact complexity vs subset enumeration", &mut exact_brute_force);
    check(3, "Gaussian closed forms", &mut closed_forms);

    let cfg = desk(5000);
    let pairs: Vec<Pair> = (1..=3u64)
        .into_par_iter()
        .map(|seed| run_pair(&cfg, seed, Collector::lean(), Collector::lean()))
        .collect();
    check(4, "lockstep identity", &mut || lockstep_identity(&pairs));
    check(5, "passive drift", &mut passive_drift);
    check(6, "driven consistency", &mut || driven_consistency(&pairs));
    check(7, "early driven advantage", &mut early_advantage);
    check(8, "statistics oracle", &mut statistics_oracle);
    check(9, "genomic consistency identities", &mut || gc_identities(&pairs));
    check(10, "determinism", &mut determinism);
    check(11, "throughput", &mut throughput);

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria pass{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(", failing: {failed:?}")
        }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
