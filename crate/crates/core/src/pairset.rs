//! Sets of paired runs: each driven run is followed by a lockstep replay of
//! its event log. A manifest at the set root records seeds, directories and
//! completion, so an interrupted set can be resumed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::artifact::digest64;
use crate::config::{Mode, RunConfig};
use crate::error::{Error, Result};
use crate::lockstep::LockstepSchedule;
use crate::run::{files, is_complete, run_driven, run_lockstep, ArtifactDir};
use crate::world::EventLog;

pub const MANIFEST: &str = "manifest.txt";
/// Written into each lockstep directory before the replay starts.
pub const SCHEDULE_SIDECAR: &str = "schedule.txt";
pub const REPLAY_SEED_OFFSET: u64 = 1_000_000;

const PAIR_COLUMNS: &str = "pair,driven_seed,replay_seed,driven_dir,lockstep_dir,driven,lockstep,schedule_hash";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pending,
    Done,
    Failed,
}

impl Status {
    fn as_str(self) -> &'static str {
        match self {
            Status::Pending => "pending",
            Status::Done => "done",
            Status::Failed => "failed",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "pending" => Some(Status::Pending),
            "done" => Some(Status::Done),
            "failed" => Some(Status::Failed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairEntry {
    pub index: usize,
    pub driven_seed: u64,
    pub replay_seed: u64,
    /// Relative to the set root.
    pub driven_dir: PathBuf,
    pub lockstep_dir: PathBuf,
    pub driven: Status,
    pub lockstep: Status,
    /// Digest of the driven `events.csv` the replay consumed.
    pub schedule_hash: Option<u64>,
    /// Why the pair failed; not persisted.
    pub error: Option<String>,
}

impl PairEntry {
    pub fn id(&self) -> String {
        format!("pair-{:03}", self.index)
    }

    pub fn is_done(&self) -> bool {
        self.driven == Status::Done && self.lockstep == Status::Done
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub config_hash: u64,
    pub base_seed: u64,
    pub pairs: Vec<PairEntry>,
}

impl Manifest {
    /// Pair `i` runs driven with `base + i` and replays with `base + i + 10⁶`.
    pub fn plan(config_hash: u64, n_pairs: usize, base_seed: u64) -> Self {
        let pairs = (0..n_pairs)
            .map(|i| {
                let dir = PathBuf::from(format!("pair-{i:03}"));
                PairEntry {
                    index: i,
                    driven_seed: base_seed + i as u64,
                    replay_seed: base_seed + i as u64 + REPLAY_SEED_OFFSET,
                    driven_dir: dir.join("driven"),
                    lockstep_dir: dir.join("lockstep"),
                    driven: Status::Pending,
                    lockstep: Status::Pending,
                    schedule_hash: None,
                    error: None,
                }
            })
            .collect();
        Manifest {
            config_hash,
            base_seed,
            pairs,
        }
    }

    pub fn completed(&self) -> impl Iterator<Item = &PairEntry> {
        self.pairs.iter().filter(|p| p.is_done())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "# pairset manifest\nconfig_hash = {:016x}\nbase_seed = {}\npairs = {}\n{PAIR_COLUMNS}\n",
            self.config_hash,
            self.base_seed,
            self.pairs.len()
        );
        for p in &self.pairs {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                p.index,
                p.driven_seed,
                p.replay_seed,
                p.driven_dir.display(),
                p.lockstep_dir.display(),
                p.driven.as_str(),
                p.lockstep.as_str(),
                p.schedule_hash.map_or(String::new(), |h| format!("{h:016x}"))
            );
        }
        s
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let bad = |reason: String| Error::format("manifest", path, reason);
        let mut config_hash = None;
        let mut base_seed = None;
        let mut n_pairs = None;
        let mut pairs = Vec::new();
        let mut in_table = false;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            if line == PAIR_COLUMNS {
                in_table = true;
            } else if !in_table {
                let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("expected key = value, got `{line}`")))?;
                let v = v.trim();
                match k.trim() {
                    "config_hash" => config_hash = u64::from_str_radix(v, 16).ok(),
                    "base_seed" => base_seed = v.parse().ok(),
                    "pairs" => n_pairs = v.parse::<usize>().ok(),
                    other => return Err(bad(format!("unknown key `{other}`"))),
                }
            } else {
                pairs.push(parse_pair(line).ok_or_else(|| bad(format!("bad pair row `{line}`")))?);
            }
        }
        let (Some(config_hash), Some(base_seed), Some(n)) = (config_hash, base_seed, n_pairs) else {
            return Err(bad("missing config_hash, base_seed or pairs".into()));
        };
        if pairs.len() != n {
            return Err(bad(format!("declares {n} pairs, lists {}", pairs.len())));
        }
        Ok(Manifest {
            config_hash,
            base_seed,
            pairs,
        })
    }

    pub fn load(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Manifest::from_text(&text, &path)
    }

    pub fn save(&self, root: &Path) -> Result<()> {
        let path = root.join(MANIFEST);
        fs::write(&path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn parse_pair(line: &str) -> Option<PairEntry> {
    let f: Vec<&str> = line.split(',').collect();
    if f.len() != 8 {
        return None;
    }
    Some(PairEntry {
        index: f[0].parse().ok()?,
        driven_seed: f[1].parse().ok()?,
        replay_seed: f[2].parse().ok()?,
        driven_dir: PathBuf::from(f[3]),
        lockstep_dir: PathBuf::from(f[4]),
        driven: Status::parse(f[5])?,
        lockstep: Status::parse(f[6])?,
        schedule_hash: if f[7].is_empty() {
            None
        } else {
            Some(u64::from_str_radix(f[7], 16).ok()?)
        },
        error: None,
    })
}

/// Hash recorded in a lockstep directory's schedule sidecar.
pub fn read_schedule_sidecar(dir: &Path) -> Option<u64> {
    let text = fs::read_to_string(dir.join(SCHEDULE_SIDECAR)).ok()?;
    text.lines()
        .filter_map(|l| l.split_once('='))
        .find(|(k, _)| k.trim() == "schedule_hash")
        .and_then(|(_, v)| u64::from_str_radix(v.trim(), 16).ok())
}

/// Runs (or resumes) `n_pairs` pairs under `root`. Pairs already marked
/// complete on disk are skipped; independent pairs run concurrently. A
/// failing pair is recorded as failed and does not stop the others.
pub fn run_pairset(cfg: &RunConfig, root: &Path, n_pairs: usize, base_seed: u64) -> Result<Manifest> {
    if n_pairs == 0 {
        return Err(Error::Config("a pair set needs at least one pair".into()));
    }
    cfg.validate()?;
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let mut manifest = if root.join(MANIFEST).is_file() {
        let m = Manifest::load(root)?;
        if m.config_hash != cfg.hash() || m.base_seed != base_seed || m.pairs.len() != n_pairs {
            return Err(Error::Mismatch(format!(
                "{} holds a different pair set (config_hash={:016x}, base_seed={}, pairs={})",
                root.display(),
                m.config_hash,
                m.base_seed,
                m.pairs.len()
            )));
        }
        m
    } else {
        Manifest::plan(cfg.hash(), n_pairs, base_seed)
    };
    let config_path = root.join(files::CONFIG);
    fs::write(&config_path, cfg.to_text()).map_err(|e| Error::io(config_path, e))?;
    manifest.save(root)?;
    manifest.pairs.par_iter_mut().for_each(|p| run_pair(cfg, root, p));
    manifest.save(root)?;
    Ok(manifest)
}

fn run_pair(cfg: &RunConfig, root: &Path, p: &mut PairEntry) {
    p.error = None;
    let ddir = root.join(&p.driven_dir);
    if !is_complete(&ddir) {
        p.lockstep = Status::Pending;
        let mut c = cfg.clone();
        c.mode = Mode::Driven;
        c.seed = p.driven_seed;
        if let Err(e) = run_driven(&c, p.driven_seed, &mut ArtifactDir::new(&ddir)) {
            p.driven = Status::Failed;
            p.error = Some(format!("driven run: {e}"));
            return;
        }
    }
    p.driven = Status::Done;
    if let Err(e) = replay(cfg, root, p) {
        p.lockstep = Status::Failed;
        p.error = Some(format!("lockstep run: {e}"));
    }
}

fn replay(cfg: &RunConfig, root: &Path, p: &mut PairEntry) -> Result<()> {
    let events = root.join(&p.driven_dir).join(files::EVENTS);
    let text = fs::read_to_string(&events).map_err(|e| Error::io(&events, e))?;
    let hash = digest64(text.as_bytes());
    p.schedule_hash = Some(hash);
    let ldir = root.join(&p.lockstep_dir);
    if is_complete(&ldir) && read_schedule_sidecar(&ldir) == Some(hash) {
        p.lockstep = Status::Done;
        return Ok(());
    }
    let schedule = LockstepSchedule::from_log(&EventLog::from_text(&text, &events)?, cfg.steps)?;
    fs::create_dir_all(&ldir).map_err(|e| Error::io(&ldir, e))?;
    let sidecar = ldir.join(SCHEDULE_SIDECAR);
    fs::write(
        &sidecar,
        format!("source = ../driven/{}\nschedule_hash = {hash:016x}\n", files::EVENTS),
    )
    .map_err(|e| Error::io(sidecar, e))?;
    let mut c = cfg.clone();
    c.mode = Mode::Lockstep;
    c.seed = p.replay_seed;
    run_lockstep(&c, &schedule, p.replay_seed, &mut ArtifactDir::new(&ldir))?;
    p.lockstep = Status::Done;
    Ok(())
}
