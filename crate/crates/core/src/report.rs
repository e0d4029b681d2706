//! Analysis of a completed pair set from its on-disk artifacts: complexity
//! per dead agent, binned means, paired t-series, genomic consistency and
//! histograms, written as CSV files with a gnuplot script.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::analysis::{
    bin_by_death, bit_frequency, cross_run_csv_rows, cross_run_mean, genomic_consistency, gc_csv_row,
    gnuplot_script, histogram_series, histogram_text, mean_csv_rows, paired_t, t_csv, BinnedSeries, TSeries,
    BIT_FREQUENCY_COLUMNS, CROSS_COLUMNS, GC_COLUMNS, MEAN_COLUMNS,
};
use crate::artifact::{self, digest64, Snapshot};
use crate::complexity::{analyze_recording, ComplexityReport, ComplexitySettings};
use crate::config::{RunConfig, Tails};
use crate::error::{Error, Result};
use crate::pairset::{read_schedule_sidecar, Manifest, PairEntry};
use crate::rng::{keyed_stream, Purpose};
use crate::run::{files, is_complete};
use crate::world::event::FORMAT_VERSION;
use crate::world::ArtifactHeader;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub complexity: ComplexitySettings,
    pub bin_width: u64,
    pub alpha: f64,
    pub tails: Tails,
    pub histogram_bins: usize,
}

impl AnalysisOptions {
    pub fn from_config(cfg: &RunConfig) -> Self {
        AnalysisOptions {
            complexity: cfg.complexity,
            bin_width: cfg.analysis.bin_width,
            alpha: cfg.analysis.alpha,
            tails: cfg.analysis.tails,
            histogram_bins: cfg.analysis.histogram_bins,
        }
    }
}

/// What analysis needs from one run directory.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub header: ArtifactHeader,
    pub reports: Vec<ComplexityReport>,
    pub snapshots: Vec<Snapshot>,
}

/// Recomputes a report for every trace under `dir`. Jitter draws are keyed
/// by the run seed and agent id, matching on-the-fly analysis exactly.
pub fn load_run(dir: &Path, settings: &ComplexitySettings) -> Result<RunArtifacts> {
    let (header, snapshots) = artifact::read_snapshots(&dir.join(files::SNAPSHOTS))?;
    let traces = dir.join(files::TRACES);
    let mut paths: Vec<PathBuf> = match fs::read_dir(&traces) {
        Ok(entries) => entries
            .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(&traces, err)))
            .collect::<Result<_>>()?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(Error::io(&traces, e)),
    };
    paths.retain(|p| p.extension().is_some_and(|x| x == "trace"));
    paths.sort();
    let reports = paths
        .par_iter()
        .map(|p| {
            let (h, rec) = artifact::read_trace(p)?;
            if h != header {
                return Err(Error::Mismatch(format!(
                    "{} has header `{}`, run has `{}`",
                    p.display(),
                    h.to_text(),
                    header.to_text()
                )));
            }
            let mut rng = keyed_stream(header.seed, Purpose::Jitter, rec.agent_id);
            Ok(analyze_recording(&rec, settings, &mut rng))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunArtifacts {
        header,
        reports,
        snapshots,
    })
}

#[derive(Debug, Clone)]
pub struct SetAnalysis {
    pub pairs: Vec<String>,
    pub driven: Vec<BinnedSeries>,
    pub lockstep: Vec<BinnedSeries>,
    pub t: TSeries,
    /// Pairs left out, with the reason.
    pub skipped: Vec<(String, String)>,
}

fn check_pair(root: &Path, p: &PairEntry) -> std::result::Result<(), String> {
    let ddir = root.join(&p.driven_dir);
    let ldir = root.join(&p.lockstep_dir);
    let mut missing = Vec::new();
    if !is_complete(&ddir) {
        missing.push(format!("{} incomplete", p.driven_dir.display()));
    }
    if !is_complete(&ldir) {
        missing.push(format!("{} incomplete", p.lockstep_dir.display()));
    }
    if !p.is_done() {
        missing.push(format!("manifest status {:?}/{:?}", p.driven, p.lockstep));
    }
    if !missing.is_empty() {
        return Err(missing.join(", "));
    }
    Ok(())
}

fn check_schedule(root: &Path, p: &PairEntry) -> Result<()> {
    let events = root.join(&p.driven_dir).join(files::EVENTS);
    let bytes = fs::read(&events).map_err(|e| Error::io(&events, e))?;
    let actual = digest64(&bytes);
    let sidecar = read_schedule_sidecar(&root.join(&p.lockstep_dir));
    if p.schedule_hash != Some(actual) || sidecar != Some(actual) {
        return Err(Error::Mismatch(format!(
            "{}: lockstep run did not consume the driven event log now on disk",
            p.id()
        )));
    }
    Ok(())
}

fn check_header(h: &ArtifactHeader, manifest: &Manifest, what: &str) -> Result<()> {
    if h.format_version != FORMAT_VERSION {
        return Err(Error::Mismatch(format!(
            "{what} has artifact format {}, expected {FORMAT_VERSION}",
            h.format_version
        )));
    }
    if h.config_hash != manifest.config_hash {
        return Err(Error::Mismatch(format!(
            "{what} has config_hash={:016x}, manifest has {:016x}",
            h.config_hash, manifest.config_hash
        )));
    }
    Ok(())
}

fn write(dir: &Path, name: &str, text: impl AsRef<[u8]>) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, text).map_err(|e| Error::io(p, e))
}

/// Analyses every completed pair under `root` into `out`. Incomplete pairs
/// are skipped and listed; a set with no complete pair is an error.
pub fn analyze_set(root: &Path, run_length: u64, opts: &AnalysisOptions, out: &Path) -> Result<SetAnalysis> {
    let manifest = Manifest::load(root)?;
    let mut usable = Vec::new();
    let mut skipped = Vec::new();
    for p in &manifest.pairs {
        match check_pair(root, p) {
            Ok(()) => usable.push(p),
            Err(why) => skipped.push((p.id(), why)),
        }
    }
    if usable.is_empty() {
        return Err(Error::NothingToAnalyze(format!(
            "no completed pairs in {}",
            root.display()
        )));
    }
    for p in &usable {
        check_schedule(root, p)?;
    }
    let runs: Vec<(RunArtifacts, RunArtifacts)> = usable
        .iter()
        .map(|p| {
            let d = load_run(&root.join(&p.driven_dir), &opts.complexity)?;
            let l = load_run(&root.join(&p.lockstep_dir), &opts.complexity)?;
            check_header(&d.header, &manifest, &format!("{} driven", p.id()))?;
            check_header(&l.header, &manifest, &format!("{} lockstep", p.id()))?;
            Ok((d, l))
        })
        .collect::<Result<_>>()?;

    fs::create_dir_all(out.join("complexity")).map_err(|e| Error::io(out, e))?;
    let mut means = format!("{MEAN_COLUMNS}\n");
    let mut gc = format!("{GC_COLUMNS}\n");
    let mut bits = format!("{BIT_FREQUENCY_COLUMNS}\n");
    let mut driven = Vec::new();
    let mut lockstep = Vec::new();
    let mut pooled: [Vec<ComplexityReport>; 2] = [Vec::new(), Vec::new()];
    for (p, (d, l)) in usable.iter().zip(&runs) {
        let id = p.id();
        for (k, (run, mode)) in [(d, "driven"), (l, "lockstep")].into_iter().enumerate() {
            write(
                &out.join("complexity"),
                &format!("{id}-{mode}.csv"),
                artifact::complexity_csv(&run.header, &run.reports),
            )?;
            let series = bin_by_death(&run.reports, opts.bin_width, run_length);
            means.push_str(&mean_csv_rows(&series, &id, mode));
            for s in run.snapshots.iter().filter(|s| !s.genomes.is_empty()) {
                gc.push_str(&gc_csv_row(s.step, &id, mode, genomic_consistency(&s.genomes).gc, s.population()));
                let _ = writeln!(
                    bits,
                    "{},{id},{mode},{:.9},{}",
                    s.step,
                    bit_frequency(&s.genomes),
                    s.population()
                );
            }
            pooled[k].extend(run.reports.iter().cloned());
            if k == 0 {
                driven.push(series);
            } else {
                lockstep.push(series);
            }
        }
    }
    let mut cross = format!("{CROSS_COLUMNS}\n");
    cross.push_str(&cross_run_csv_rows(&cross_run_mean(&driven), "driven"));
    cross.push_str(&cross_run_csv_rows(&cross_run_mean(&lockstep), "lockstep"));
    let t = paired_t(&driven, &lockstep, opts.alpha, opts.tails);

    write(out, "means.csv", means)?;
    write(out, "cross_means.csv", cross)?;
    write(out, "t_series.csv", t_csv(&t))?;
    write(out, "gc.csv", gc)?;
    write(out, "bit_frequency.csv", bits)?;
    let mut hist_files = Vec::new();
    for (reports, mode) in pooled.iter().zip(["driven", "lockstep"]) {
        let name = format!("histogram_{mode}.csv");
        write(out, &name, histogram_text(&histogram_series(reports, opts.bin_width, opts.histogram_bins)))?;
        hist_files.push(name);
    }
    write(out, "plots.gp", gnuplot_script(&hist_files))?;

    Ok(SetAnalysis {
        pairs: usable.iter().map(|p| p.id()).collect(),
        driven,
        lockstep,
        t,
        skipped,
    })
}
