use std::fs;

use evotrend_core::analysis::bin_by_death;
use evotrend_core::artifact::complexity_csv_line;
use evotrend_core::report::load_run;
use evotrend_core::run::{files, run_driven, run_fitness, run_lockstep, ArtifactDir, Collector};
use evotrend_core::world::{DeathCause, EventKind};
use evotrend_core::{ComplexityReport, Error, LockstepSchedule, RunConfig};

fn desk(steps: u64) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.steps = steps;
    cfg.world.p_max = 60;
    cfg
}

fn lines(reports: &[ComplexityReport]) -> Vec<String> {
    let mut v: Vec<(u64, String)> = reports.iter().map(|r| (r.agent_id, complexity_csv_line(r))).collect();
    v.sort();
    v.into_iter().map(|(_, l)| l).collect()
}

#[test]
fn reports_from_trace_files_match_on_the_fly_reports() {
    let cfg = desk(800);
    let dir = tempfile::tempdir().unwrap();
    let mut sink = (Collector::reporting(cfg.complexity), ArtifactDir::new(dir.path()));
    run_driven(&cfg, 9, &mut sink).unwrap();
    let live = &sink.0.reports;
    assert!(live.iter().filter(|r| r.is_valid()).count() > 5);
    let loaded = load_run(dir.path(), &cfg.complexity).unwrap();
    assert_eq!(lines(&loaded.reports), lines(live));
    assert_eq!(loaded.snapshots, sink.0.snapshots);
}

#[test]
fn lockstep_replays_population_and_schedule() {
    let cfg = desk(1500);
    for seed in [1, 2] {
        let mut d = Collector::lean();
        let driven = run_driven(&cfg, seed, &mut d).unwrap();
        let schedule = LockstepSchedule::from_log(d.log(), cfg.steps).unwrap();
        assert_eq!(schedule.total_births(), driven.births);
        assert_eq!(schedule.total_deaths(), driven.deaths);
        let mut l = Collector::lean();
        let replay = run_lockstep(&cfg, &schedule, seed + 1_000_000, &mut l).unwrap();
        assert_eq!(d.population, l.population);
        assert_eq!((replay.births, replay.deaths), (driven.births, driven.deaths));
        assert_eq!(replay.driven_seed, Some(seed));
        for e in l.log().events() {
            if let EventKind::Death { cause, .. } = e.kind {
                assert_eq!(cause, DeathCause::Forced);
            }
        }
        // parentage is randomised, not copied
        assert_ne!(d.log().events(), l.log().events());
    }
}

#[test]
fn lockstep_refuses_a_schedule_from_another_config() {
    let cfg = desk(200);
    let mut d = Collector::lean();
    run_driven(&cfg, 1, &mut d).unwrap();
    let schedule = LockstepSchedule::from_log(d.log(), cfg.steps).unwrap();
    let mut other = cfg.clone();
    other.world.food_growth += 1.0;
    let err = run_lockstep(&other, &schedule, 5, &mut Collector::lean()).unwrap_err();
    assert!(matches!(err, Error::Mismatch(_)), "{err}");
    let mut longer = cfg.clone();
    longer.steps = 300;
    assert!(LockstepSchedule::from_log(d.log(), 100).is_err());
    assert!(run_lockstep(&longer, &schedule, 5, &mut Collector::lean()).is_err());
}

#[test]
fn artifact_directories_are_reproducible() {
    let cfg = desk(500);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_driven(&cfg, 3, &mut ArtifactDir::new(a.path())).unwrap();
    run_driven(&cfg, 3, &mut ArtifactDir::new(b.path())).unwrap();
    for f in [files::EVENTS, files::POPULATION, files::SNAPSHOTS, files::SUMMARY] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let names = |d: &std::path::Path| {
        let mut v: Vec<_> = fs::read_dir(d.join(files::TRACES)).unwrap().map(|e| e.unwrap().file_name()).collect();
        v.sort();
        v
    };
    let traces = names(a.path());
    assert!(!traces.is_empty());
    assert_eq!(traces, names(b.path()));
    for t in traces {
        let p = |d: &std::path::Path| fs::read(d.join(files::TRACES).join(&t)).unwrap();
        assert_eq!(p(a.path()), p(b.path()));
    }
}

#[test]
fn sparse_fitness_intervals_reduce_to_a_driven_run() {
    let mut cfg = desk(600);
    cfg.fitness.interval = 10_000;
    let mut d = Collector::lean();
    let mut f = Collector::lean();
    run_driven(&cfg, 6, &mut d).unwrap();
    let s = run_fitness(&cfg, 6, &mut f).unwrap();
    assert_eq!(s.replacements, 0);
    assert_eq!(d.log().events(), f.log().events());
    assert_eq!(d.snapshots, f.snapshots);
}

#[test]
fn short_windows_exempt_everyone() {
    let mut cfg = desk(600);
    cfg.fitness.interval = 20;
    cfg.fitness.window = 10;
    let mut f = Collector::lean();
    assert_eq!(run_fitness(&cfg, 6, &mut f).unwrap().replacements, 0);
}

#[test]
fn complexity_fitness_raises_complexity_in_most_seeds() {
    let mut cfg = desk(3000);
    cfg.fitness.interval = 20;
    let last_mean = |reports: &[ComplexityReport]| {
        bin_by_death(reports, cfg.steps / 3, cfg.steps)
            .bins
            .last()
            .and_then(|b| b.mean)
            .unwrap_or(0.0)
    };
    let mut wins = 0;
    for seed in 1..=3 {
        let mut d = Collector::reporting(cfg.complexity);
        let mut f = Collector::reporting(cfg.complexity);
        run_driven(&cfg, seed, &mut d).unwrap();
        let s = run_fitness(&cfg, seed, &mut f).unwrap();
        assert!(s.replacements > 0);
        let (cd, cf) = (last_mean(&d.reports), last_mean(&f.reports));
        eprintln!("seed {seed}: driven {cd:.4} fitness {cf:.4} ({} replacements)", s.replacements);
        wins += usize::from(cf > cd);
    }
    assert!(wins >= 2, "fitness mode beat natural selection in {wins} of 3 seeds");
}
