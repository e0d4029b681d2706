//! Population statistics over completed runs: death-binned complexity
//! means, paired t-series, genomic consistency, bit frequency and
//! complexity histograms, plus their CSV and gnuplot renderings.

use std::fmt::Write as _;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::complexity::ComplexityReport;
use crate::config::Tails;
use crate::genome::Genome;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub end_step: u64,
    /// `None` when no valid report fell in the bin.
    pub mean: Option<f64>,
    pub count: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinnedSeries {
    pub width: u64,
    /// Bin `k` (from 1) holds deaths in `((k − 1)·width, k·width]`.
    pub bins: Vec<Bin>,
}

impl BinnedSeries {
    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count + b.excluded).sum()
    }
}

/// Bin index of a death step; step 0 shares the first bin.
pub fn bin_index(death_step: u64, width: u64) -> usize {
    death_step.div_ceil(width).max(1) as usize
}

/// Mean `C_approx` of valid reports per death bin over `[0, run_length]`.
pub fn bin_by_death(reports: &[ComplexityReport], width: u64, run_length: u64) -> BinnedSeries {
    assert!(width > 0, "bin width must be positive");
    let last = reports
        .iter()
        .map(|r| bin_index(r.death_step, width))
        .max()
        .unwrap_or(0)
        .max(bin_index(run_length, width));
    let mut sums = vec![0.0; last];
    let mut counts = vec![0usize; last];
    let mut excluded = vec![0usize; last];
    for r in reports {
        let k = bin_index(r.death_step, width) - 1;
        if r.is_valid() {
            sums[k] += r.c_approx;
            counts[k] += 1;
        } else {
            excluded[k] += 1;
        }
    }
    BinnedSeries {
        width,
        bins: (0..last)
            .map(|k| Bin {
                end_step: (k as u64 + 1) * width,
                mean: (counts[k] > 0).then(|| sums[k] / counts[k] as f64),
                count: counts[k],
                excluded: excluded[k],
            })
            .collect(),
    }
}

/// Critical value of Student's t for `df` degrees of freedom.
pub fn t_critical(df: usize, alpha: f64, tails: Tails) -> f64 {
    let p = match tails {
        Tails::One => 1.0 - alpha,
        Tails::Two => 1.0 - alpha / 2.0,
    };
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("df >= 1")
        .inverse_cdf(p)
}

/// Dependent-samples t of differences `d`: `mean / (sd / √n)` with the
/// sample standard deviation. `None` below two samples; a zero spread gives
/// 0 for a zero mean and ±∞ otherwise.
pub fn paired_t_statistic(d: &[f64]) -> Option<f64> {
    let n = d.len();
    if n < 2 {
        return None;
    }
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    Some(if sd == 0.0 {
        if mean == 0.0 {
            0.0
        } else {
            mean.signum() * f64::INFINITY
        }
    } else {
        mean / (sd / (n as f64).sqrt())
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TBin {
    pub end_step: u64,
    pub t: Option<f64>,
    /// Pairs with data in both members.
    pub pairs: usize,
    pub df: Option<usize>,
    pub t_critical: Option<f64>,
}

impl TBin {
    /// Driven exceeds passive beyond the critical value.
    pub fn significant(&self) -> bool {
        matches!((self.t, self.t_critical), (Some(t), Some(c)) if t > c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TSeries {
    pub alpha: f64,
    pub tails: Tails,
    pub bins: Vec<TBin>,
}

/// Per-bin paired t of driven minus passive means; runs pair by index and
/// a pair contributes to a bin only when both members have data there.
pub fn paired_t(driven: &[BinnedSeries], passive: &[BinnedSeries], alpha: f64, tails: Tails) -> TSeries {
    assert_eq!(driven.len(), passive.len(), "runs pair by index");
    let n_bins = driven.iter().chain(passive).map(|s| s.bins.len()).max().unwrap_or(0);
    let width = driven.first().map_or(1, |s| s.width);
    let bins = (0..n_bins)
        .map(|k| {
            let d: Vec<f64> = driven
                .iter()
                .zip(passive)
                .filter_map(|(a, b)| Some(a.bins.get(k)?.mean? - b.bins.get(k)?.mean?))
                .collect();
            let t = paired_t_statistic(&d);
            let df = t.map(|_| d.len() - 1);
            TBin {
                end_step: (k as u64 + 1) * width,
                t,
                pairs: d.len(),
                df,
                t_critical: df.map(|df| t_critical(df, alpha, tails)),
            }
        })
        .collect();
    TSeries { alpha, tails, bins }
}

/// Indices of bins starting runs of at least `len` consecutive significant bins.
pub fn significant_runs(t: &TSeries, len: usize) -> Vec<usize> {
    let sig: Vec<bool> = t.bins.iter().map(TBin::significant).collect();
    (0..sig.len())
        .filter(|&k| k + len <= sig.len() && sig[k..k + len].iter().all(|&s| s))
        .collect()
}

/// Binary entropy in bits with `0·log 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let h = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.log2() };
    h(p) + h(1.0 - p)
}

/// Per-site fraction of 1-bits.
pub fn site_frequencies(genomes: &[Genome]) -> Vec<f64> {
    let len = genomes.first().map_or(0, Genome::len);
    let mut ones = vec![0usize; len];
    for g in genomes {
        assert_eq!(g.len(), len, "genomes in a population share a length");
        for (site, n) in ones.iter_mut().enumerate() {
            *n += usize::from(g.get(site));
        }
    }
    ones.iter().map(|&n| n as f64 / genomes.len() as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Consistency {
    /// `Σ (1 − Hᵢ)` over sites.
    pub gc: f64,
    pub site_entropy: Vec<f64>,
}

/// Genomic consistency of a non-empty population.
pub fn genomic_consistency(genomes: &[Genome]) -> Consistency {
    assert!(!genomes.is_empty(), "genomic consistency needs a population");
    let site_entropy: Vec<f64> = site_frequencies(genomes).into_iter().map(binary_entropy).collect();
    let gc = site_entropy.len() as f64 - site_entropy.iter().sum::<f64>();
    Consistency { gc, site_entropy }
}

/// Grand mean of all bits of a non-empty population.
pub fn bit_frequency(genomes: &[Genome]) -> f64 {
    assert!(!genomes.is_empty(), "bit frequency needs a population");
    let ones: usize = genomes.iter().map(Genome::count_ones).sum();
    let sites: usize = genomes.iter().map(Genome::len).sum();
    ones as f64 / sites as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramSeries {
    pub time_width: u64,
    /// `value_bins + 1` edges.
    pub edges: Vec<f64>,
    /// `counts[time_bin][value_bin]`, time bins numbered from 1 as in
    /// [`bin_by_death`] (row 0 is time bin 1).
    pub counts: Vec<Vec<usize>>,
}

/// Counts of valid reports by death bin and complexity over the observed range.
pub fn histogram_series(reports: &[ComplexityReport], time_width: u64, value_bins: usize) -> HistogramSeries {
    assert!(time_width > 0 && value_bins > 0, "histogram widths must be positive");
    let valid: Vec<&ComplexityReport> = reports.iter().filter(|r| r.is_valid()).collect();
    let lo = valid.iter().map(|r| r.c_approx).fold(f64::INFINITY, f64::min);
    let hi = valid.iter().map(|r| r.c_approx).fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if valid.is_empty() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    };
    let edges: Vec<f64> = (0..=value_bins)
        .map(|i| lo + (hi - lo) * i as f64 / value_bins as f64)
        .collect();
    let rows = valid.iter().map(|r| bin_index(r.death_step, time_width)).max().unwrap_or(0);
    let mut counts = vec![vec![0usize; value_bins]; rows];
    for r in valid {
        let v = (((r.c_approx - lo) / (hi - lo)) * value_bins as f64).floor();
        let v = (v.max(0.0) as usize).min(value_bins - 1);
        counts[bin_index(r.death_step, time_width) - 1][v] += 1;
    }
    HistogramSeries {
        time_width,
        edges,
        counts,
    }
}

/// Cross-run mean and sample standard deviation of per-run bin means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossRunBin {
    pub end_step: u64,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub runs: usize,
}

pub fn cross_run_mean(series: &[BinnedSeries]) -> Vec<CrossRunBin> {
    let n_bins = series.iter().map(|s| s.bins.len()).max().unwrap_or(0);
    let width = series.first().map_or(1, |s| s.width);
    (0..n_bins)
        .map(|k| {
            let v: Vec<f64> = series.iter().filter_map(|s| s.bins.get(k)?.mean).collect();
            let n = v.len();
            let mean = (n > 0).then(|| v.iter().sum::<f64>() / n as f64);
            let sd = mean.filter(|_| n > 1).map(|m| {
                (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64).sqrt()
            });
            CrossRunBin {
                end_step: (k as u64 + 1) * width,
                mean,
                sd,
                runs: n,
            }
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(x) if x.is_infinite() => if x > 0.0 { "inf" } else { "-inf" }.to_string(),
        Some(x) => format!("{x:.9}"),
    }
}

pub const MEAN_COLUMNS: &str = "bin_end_step,run_id,mode,mean_C,count,excluded";
pub const T_COLUMNS: &str = "bin_end_step,t,df,t_critical,significant";
pub const GC_COLUMNS: &str = "step,run_id,mode,gc,population";
pub const CROSS_COLUMNS: &str = "bin_end_step,mode,mean_C,sd,runs";
pub const BIT_FREQUENCY_COLUMNS: &str = "step,run_id,mode,bit_frequency,population";

/// Rows for one run; concatenate runs under a single [`MEAN_COLUMNS`] line.
pub fn mean_csv_rows(series: &BinnedSeries, run_id: &str, mode: &str) -> String {
    let mut out = String::new();
    for b in &series.bins {
        let _ = writeln!(out, "{},{run_id},{mode},{},{},{}", b.end_step, opt(b.mean), b.count, b.excluded);
    }
    out
}

pub fn cross_run_csv_rows(bins: &[CrossRunBin], mode: &str) -> String {
    let mut out = String::new();
    for b in bins {
        let _ = writeln!(out, "{},{mode},{},{},{}", b.end_step, opt(b.mean), opt(b.sd), b.runs);
    }
    out
}

pub fn t_csv(t: &TSeries) -> String {
    let mut out = format!("{T_COLUMNS}\n");
    for b in &t.bins {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            b.end_step,
            opt(b.t),
            b.df.map_or(String::new(), |d| d.to_string()),
            opt(b.t_critical),
            u8::from(b.significant())
        );
    }
    out
}

/// One GC row; `step,run_id,mode,gc,population`.
pub fn gc_csv_row(step: u64, run_id: &str, mode: &str, gc: f64, population: usize) -> String {
    format!("{step},{run_id},{mode},{gc:.9},{population}\n")
}

/// `# edges: e0 e1 …`, then `time_bin,value_bin,count` for non-empty cells.
pub fn histogram_text(h: &HistogramSeries) -> String {
    let mut out = String::from("# edges:");
    for e in &h.edges {
        let _ = write!(out, " {e:.9}");
    }
    let _ = writeln!(out, "\n# time_width: {}\ntime_bin,value_bin,count", h.time_width);
    for (t, row) in h.counts.iter().enumerate() {
        for (v, &c) in row.iter().enumerate() {
            if c > 0 {
                let _ = writeln!(out, "{},{v},{c}", t + 1);
            }
        }
    }
    out
}

/// A gnuplot script over the CSVs written by the analysis pipeline: mean
/// complexity per run and across runs, the t-series against its critical
/// value, genomic consistency, and one heatmap per histogram file.
pub fn gnuplot_script(histograms: &[String]) -> String {
    let mut s = String::from(
        r##"# Render with: gnuplot plots.gp
set datafile separator ","
set key autotitle columnhead
set terminal pngcairo size 1000,700

set output "complexity.png"
set multiplot layout 2,1
set ylabel "mean complexity (bits)"
set xlabel "time step"
plot "means.csv" using 1:($3 eq "driven" ? $4 : 1/0) with points pt 7 ps 0.3 lc rgb "#99bbdd" title "driven runs", \
     "means.csv" using 1:($3 eq "lockstep" ? $4 : 1/0) with points pt 7 ps 0.3 lc rgb "#ddaa99" title "lockstep runs", \
     "cross_means.csv" using 1:($2 eq "driven" ? $3 : 1/0) with lines lw 3 lc rgb "#1f4e79" title "driven mean", \
     "cross_means.csv" using 1:($2 eq "lockstep" ? $3 : 1/0) with lines lw 3 lc rgb "#a0412d" title "lockstep mean"
set ylabel "t"
plot "t_series.csv" using 1:2 with linespoints lw 2 title "paired t", \
     "t_series.csv" using 1:4 with lines dt 2 lc rgb "black" title "T*"
unset multiplot

set output "consistency.png"
set ylabel "genomic consistency (bits)"
plot "gc.csv" using 1:($3 eq "driven" ? $4 : 1/0) with points pt 7 ps 0.4 lc rgb "#1f4e79" title "driven", \
     "gc.csv" using 1:($3 eq "lockstep" ? $4 : 1/0) with points pt 7 ps 0.4 lc rgb "#a0412d" title "lockstep"
"##,
    );
    for h in histograms {
        let stem = h.trim_end_matches(".csv");
        let _ = write!(
            s,
            r#"
set output "{stem}.png"
set xlabel "time bin"
set ylabel "complexity bin"
set view map
plot "{h}" using 1:2:3 every ::3 with image title "{stem}"
"#
        );
    }
    s
}
