//! The passive null model: replay of a driven run's birth and death counts
//! with random parentage and random mortality.

use std::path::Path;

use crate::error::{Error, Result};
use crate::world::{ArtifactHeader, EventLog, Forced};

/// Per-step forced birth and death counts taken from a driven event log.
#[derive(Debug, Clone, PartialEq)]
pub struct LockstepSchedule {
    source: ArtifactHeader,
    per_step: Vec<Forced>,
}

impl LockstepSchedule {
    /// Indexes `log` by step over `[0, steps]`. Events outside that range or
    /// a log that did not come from a driven run are rejected.
    pub fn from_log(log: &EventLog, steps: u64) -> Result<Self> {
        if log.header.mode != "driven" {
            return Err(Error::Mismatch(format!(
                "schedule must come from a driven run, got mode={}",
                log.header.mode
            )));
        }
        let mut per_step = vec![Forced::default(); steps as usize + 1];
        for e in log.events() {
            let slot = per_step.get_mut(e.step as usize).filter(|_| e.step > 0).ok_or_else(|| {
                Error::Mismatch(format!("schedule has an event at step {} outside 1..={steps}", e.step))
            })?;
            if e.is_birth() {
                slot.births += 1;
            } else {
                slot.deaths += 1;
            }
        }
        Ok(LockstepSchedule {
            source: log.header.clone(),
            per_step,
        })
    }

    pub fn load(path: &Path, steps: u64) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        LockstepSchedule::from_log(&EventLog::from_text(&text, path)?, steps)
    }

    /// Header of the driven run the schedule was recorded from.
    pub fn source(&self) -> &ArtifactHeader {
        &self.source
    }

    pub fn steps(&self) -> u64 {
        self.per_step.len() as u64 - 1
    }

    /// Forced counts for `step`; the schedule is total over `[0, steps]`.
    pub fn at(&self, step: u64) -> Forced {
        self.per_step[step as usize]
    }

    pub fn total_births(&self) -> usize {
        self.per_step.iter().map(|f| f.births).sum()
    }

    pub fn total_deaths(&self) -> usize {
        self.per_step.iter().map(|f| f.deaths).sum()
    }

    /// Refuses a schedule recorded under a different configuration.
    pub fn check_config(&self, config_hash: u64) -> Result<()> {
        if self.source.config_hash != config_hash {
            return Err(Error::Mismatch(format!(
                "schedule was recorded with config_hash={:016x}, this run has {config_hash:016x}",
                self.source.config_hash
            )));
        }
        Ok(())
    }
}
