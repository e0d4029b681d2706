mod common;

use common::{h2, reference_t, rng};
use evotrend_core::analysis::{
    bin_by_death, bin_index, bit_frequency, genomic_consistency, paired_t, paired_t_statistic, site_frequencies,
    t_critical, Bin, BinnedSeries,
};
use evotrend_core::genome::Genome;
use evotrend_core::run::{run_driven, Collector};
use evotrend_core::{RunConfig, Tails};
use proptest::prelude::*;
use rand::Rng;
use statrs::statistics::Statistics;

fn series(means: &[Option<f64>]) -> BinnedSeries {
    BinnedSeries {
        width: 1000,
        bins: means
            .iter()
            .enumerate()
            .map(|(k, m)| Bin {
                end_step: (k as u64 + 1) * 1000,
                mean: *m,
                count: usize::from(m.is_some()),
                excluded: 0,
            })
            .collect(),
    }
}

#[test]
fn paired_t_matches_reference_statistics() {
    let mut r = rng(8);
    for _ in 0..100 {
        let n = r.random_range(2..=30);
        let driven: Vec<f64> = (0..n).map(|_| r.random_range(0.0..2.0)).collect();
        let passive: Vec<f64> = (0..n).map(|_| r.random_range(0.0..2.0)).collect();
        let d: Vec<f64> = driven.iter().zip(&passive).map(|(a, b)| a - b).collect();
        let reference = d.iter().mean() / (d.iter().std_dev() / (n as f64).sqrt());
        let ours = paired_t_statistic(&d).unwrap();
        assert!(((ours - reference) / reference).abs() < 1e-12, "{ours} vs {reference}");
        assert!(((ours - reference_t(&d)) / reference).abs() < 1e-12);

        let ds: Vec<BinnedSeries> = driven.iter().map(|&x| series(&[Some(x)])).collect();
        let ps: Vec<BinnedSeries> = passive.iter().map(|&x| series(&[Some(x)])).collect();
        let t = paired_t(&ds, &ps, 0.05, Tails::One);
        assert!(((t.bins[0].t.unwrap() - reference) / reference).abs() < 1e-12);
        assert_eq!(t.bins[0].df, Some(n - 1));
    }
}

#[test]
fn hand_fixture_and_critical_value() {
    let t = paired_t_statistic(&[1.0, 2.0, 3.0]).unwrap();
    assert!((t - 3.4641).abs() < 1e-4);
    assert!((t - 2.0 * 3f64.sqrt()).abs() < 1e-12);
    assert!((t_critical(9, 0.05, Tails::One) - 1.833).abs() < 5e-4);
    assert!((t_critical(9, 0.05, Tails::Two) - 2.262).abs() < 5e-4);
}

#[test]
fn degenerate_differences() {
    assert_eq!(paired_t_statistic(&[0.0, 0.0, 0.0]), Some(0.0));
    assert_eq!(paired_t_statistic(&[0.5, 0.5]), Some(f64::INFINITY));
    assert_eq!(paired_t_statistic(&[-0.5, -0.5]), Some(f64::NEG_INFINITY));
    assert_eq!(paired_t_statistic(&[1.0]), None);
}

#[test]
fn pairs_need_data_on_both_sides() {
    let driven = vec![
        series(&[Some(1.0), None]),
        series(&[Some(2.0), Some(1.0)]),
        series(&[Some(3.0), Some(1.0)]),
    ];
    let passive = vec![
        series(&[Some(0.0), Some(0.0)]),
        series(&[Some(0.0), Some(0.0)]),
        series(&[Some(0.0), None]),
    ];
    let t = paired_t(&driven, &passive, 0.05, Tails::One);
    assert_eq!(t.bins[0].pairs, 3);
    assert_eq!(t.bins[1].pairs, 1);
    assert_eq!(t.bins[1].t, None);
    assert!(!t.bins[1].significant());
}

fn genomes(rows: &[&str]) -> Vec<Genome> {
    rows.iter()
        .map(|r| Genome::from_fn(r.len(), |i| r.as_bytes()[i] == b'1'))
        .collect()
}

#[test]
fn consistency_hand_example() {
    let pop = genomes(&["00", "01", "11", "11"]);
    let c = genomic_consistency(&pop);
    let expected = (1.0 - h2(0.5)) + (1.0 - h2(0.75));
    assert!((c.gc - expected).abs() < 1e-12);
    assert!((c.gc - 0.1887).abs() < 1e-4);
}

#[test]
fn uniform_and_balanced_populations() {
    let same = genomes(&["0110100", "0110100", "0110100"]);
    assert_eq!(genomic_consistency(&same).gc, 7.0);
    let balanced = genomes(&["0101", "1010"]);
    assert_eq!(genomic_consistency(&balanced).gc, 0.0);
    assert_eq!(bit_frequency(&genomes(&["000", "000"])), 0.0);
    assert_eq!(bit_frequency(&genomes(&["111", "111"])), 1.0);
}

#[test]
fn consistency_identity_holds_on_every_snapshot() {
    let mut cfg = RunConfig::default();
    cfg.steps = 1500;
    cfg.snapshot_interval = 100;
    cfg.world.p_max = 60;
    cfg.record_traces = false;
    cfg.founder.mutation_rate = 0.03;
    let mut sink = Collector::lean();
    run_driven(&cfg, 4, &mut sink).unwrap();
    assert!(sink.snapshots.len() > 10);
    let first = &sink.snapshots[0];
    let len = first.genomes[0].len() as f64;
    assert_eq!(genomic_consistency(&first.genomes).gc, len);
    for s in sink.snapshots.iter().filter(|s| !s.genomes.is_empty()) {
        let c = genomic_consistency(&s.genomes);
        let sum: f64 = c.site_entropy.iter().sum();
        assert_eq!(c.gc + sum, len, "step {}", s.step);
        let oracle: f64 = site_frequencies(&s.genomes).iter().map(|&p| h2(p)).sum();
        assert!((sum - oracle).abs() < 1e-9);
    }
}

proptest! {
    #[test]
    fn consistency_is_bounded(rows in prop::collection::vec(prop::collection::vec(any::<bool>(), 16), 1..12)) {
        let pop: Vec<Genome> = rows.iter().map(|r| Genome::from_fn(16, |i| r[i])).collect();
        let c = genomic_consistency(&pop);
        prop_assert!(c.gc >= -1e-12 && c.gc <= 16.0 + 1e-12);
        prop_assert!(c.site_entropy.iter().all(|h| (0.0..=1.0 + 1e-12).contains(h)));
    }

    #[test]
    fn swapping_sides_negates_t(d in prop::collection::vec(-5.0f64..5.0, 2..20)) {
        let neg: Vec<f64> = d.iter().map(|x| -x).collect();
        match (paired_t_statistic(&d), paired_t_statistic(&neg)) {
            (Some(a), Some(b)) if a.is_finite() => prop_assert!((a + b).abs() < 1e-9 * (1.0 + a.abs())),
            (Some(a), Some(b)) => prop_assert_eq!(a, -b),
            _ => prop_assert!(false),
        }
    }

    #[test]
    fn bins_cover_their_range(step in 1u64..100_000, width in 1u64..5000) {
        let k = bin_index(step, width) as u64;
        prop_assert!((k - 1) * width < step && step <= k * width);
    }

    #[test]
    fn binning_keeps_every_report(steps in prop::collection::vec(0u64..20_000, 0..50)) {
        use evotrend_core::complexity::{ComplexityReport, Exclusion, NeuronFilter};
        let reports: Vec<ComplexityReport> = steps.iter().enumerate().map(|(i, &s)| ComplexityReport {
            agent_id: i as u64,
            death_step: s,
            filter: NeuronFilter::Processing,
            n_columns: 3,
            samples: 50,
            c_approx: 0.1,
            c_exact: None,
            integration: 0.2,
            entropy: 1.0,
            validity: if i % 3 == 0 { Err(Exclusion::NoColumns) } else { Ok(()) },
        }).collect();
        let b = bin_by_death(&reports, 1000, 10_000);
        prop_assert_eq!(b.total(), reports.len());
        prop_assert!(b.bins.len() >= 10);
    }
}
