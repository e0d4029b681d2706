use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeathCause {
    Starvation,
    OldAge,
    Killed,
    /// Removed by a replayed schedule.
    Forced,
    /// Culled by the complexity-fitness scheme.
    Replaced,
}

impl DeathCause {
    pub fn is_natural(self) -> bool {
        matches!(self, DeathCause::Starvation | DeathCause::OldAge | DeathCause::Killed)
    }
}

impl fmt::Display for DeathCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeathCause::Starvation => "starvation",
            DeathCause::OldAge => "old-age",
            DeathCause::Killed => "killed",
            DeathCause::Forced => "forced",
            DeathCause::Replaced => "replaced",
        })
    }
}

impl FromStr for DeathCause {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "starvation" => DeathCause::Starvation,
            "old-age" => DeathCause::OldAge,
            "killed" => DeathCause::Killed,
            "forced" => DeathCause::Forced,
            "replaced" => DeathCause::Replaced,
            other => return Err(format!("unknown death cause `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Birth { child: u64, parents: (u64, u64) },
    Death { agent: u64, cause: DeathCause },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub step: u64,
    pub kind: EventKind,
}

impl Event {
    pub fn is_birth(&self) -> bool {
        matches!(self.kind, EventKind::Birth { .. })
    }

    pub fn is_death(&self) -> bool {
        matches!(self.kind, EventKind::Death { .. })
    }

    /// `step,kind,agent_id,parent1,parent2,cause`
    pub fn to_csv(&self) -> String {
        match self.kind {
            EventKind::Birth { child, parents } => {
                format!("{},birth,{},{},{},", self.step, child, parents.0, parents.1)
            }
            EventKind::Death { agent, cause } => format!("{},death,{},,,{}", self.step, agent, cause),
        }
    }

    pub fn from_csv(line: &str) -> std::result::Result<Event, String> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(format!("expected 6 fields, got {}", f.len()));
        }
        let int = |s: &str| s.parse::<u64>().map_err(|_| format!("bad integer `{s}`"));
        let step = int(f[0])?;
        let kind = match f[1] {
            "birth" if f[5].is_empty() => EventKind::Birth {
                child: int(f[2])?,
                parents: (int(f[3])?, int(f[4])?),
            },
            "death" if f[3].is_empty() && f[4].is_empty() => EventKind::Death {
                agent: int(f[2])?,
                cause: f[5].parse()?,
            },
            _ => return Err(format!("malformed event `{line}`")),
        };
        Ok(Event { step, kind })
    }
}

/// Identifies the run that produced an artifact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactHeader {
    pub format_version: u32,
    pub config_hash: u64,
    pub seed: u64,
    pub mode: String,
}

pub const FORMAT_VERSION: u32 = 1;

impl ArtifactHeader {
    pub fn new(config_hash: u64, seed: u64, mode: impl Into<String>) -> Self {
        ArtifactHeader {
            format_version: FORMAT_VERSION,
            config_hash,
            seed,
            mode: mode.into(),
        }
    }

    /// `format=1 config_hash=<16 hex> seed=<n> mode=<name>`
    pub fn to_text(&self) -> String {
        format!(
            "format={} config_hash={:016x} seed={} mode={}",
            self.format_version, self.config_hash, self.seed, self.mode
        )
    }

    pub fn from_text(text: &str) -> std::result::Result<Self, String> {
        let mut format_version = None;
        let mut config_hash = None;
        let mut seed = None;
        let mut mode = None;
        for token in text.split_whitespace() {
            let (k, v) = token.split_once('=').ok_or_else(|| format!("bad header token `{token}`"))?;
            match k {
                "format" => format_version = v.parse().ok(),
                "config_hash" => config_hash = u64::from_str_radix(v, 16).ok(),
                "seed" => seed = v.parse().ok(),
                "mode" => mode = Some(v.to_string()),
                _ => {}
            }
        }
        match (format_version, config_hash, seed, mode) {
            (Some(format_version), Some(config_hash), Some(seed), Some(mode)) => Ok(ArtifactHeader {
                format_version,
                config_hash,
                seed,
                mode,
            }),
            _ => Err(format!("incomplete artifact header `{text}`")),
        }
    }
}

/// Append-only, step-ordered record of births and deaths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventLog {
    pub header: ArtifactHeader,
    events: Vec<Event>,
}

pub const EVENT_LOG_COLUMNS: &str = "step,kind,agent_id,parent1,parent2,cause";

impl EventLog {
    pub fn new(header: ArtifactHeader) -> Self {
        EventLog {
            header,
            events: Vec::new(),
        }
    }

    pub fn push(&mut self, event: Event) {
        if let Some(last) = self.events.last() {
            assert!(event.step >= last.step, "event log steps must be non-decreasing");
        }
        self.events.push(event);
    }

    pub fn extend(&mut self, events: impl IntoIterator<Item = Event>) {
        for e in events {
            self.push(e);
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn births(&self) -> usize {
        self.events.iter().filter(|e| e.is_birth()).count()
    }

    pub fn deaths(&self) -> usize {
        self.events.iter().filter(|e| e.is_death()).count()
    }

    /// Population after each step `0..=steps`, replayed from the log.
    pub fn population_series(&self, initial: usize, steps: u64) -> Vec<usize> {
        let mut series = Vec::with_capacity(steps as usize + 1);
        let mut pop = initial as i64;
        let mut events = self.events.iter().peekable();
        for t in 0..=steps {
            while let Some(e) = events.next_if(|e| e.step == t) {
                pop += if e.is_birth() { 1 } else { -1 };
            }
            series.push(pop.max(0) as usize);
        }
        series
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(32 * self.events.len() + 128);
        out.push_str("# ");
        out.push_str(&self.header.to_text());
        out.push('\n');
        out.push_str(EVENT_LOG_COLUMNS);
        out.push('\n');
        for e in &self.events {
            out.push_str(&e.to_csv());
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str, origin: &std::path::Path) -> Result<Self> {
        let bad = |reason: String| Error::format("event log", origin, reason);
        let mut lines = text.lines();
        let header_line = lines.next().ok_or_else(|| bad("empty file".into()))?;
        let header = header_line
            .strip_prefix("# ")
            .ok_or_else(|| bad("missing header line".into()))
            .and_then(|h| ArtifactHeader::from_text(h).map_err(bad))?;
        if lines.next() != Some(EVENT_LOG_COLUMNS) {
            return Err(bad("missing column line".into()));
        }
        let mut log = EventLog::new(header);
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let e = Event::from_csv(line).map_err(|r| bad(format!("line {}: {r}", i + 3)))?;
            if log.events.last().is_some_and(|l| l.step > e.step) {
                return Err(bad(format!("line {}: step goes backwards", i + 3)));
            }
            log.events.push(e);
        }
        Ok(log)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_lines() {
        let b = Event {
            step: 12,
            kind: EventKind::Birth {
                child: 61,
                parents: (3, 9),
            },
        };
        let d = Event {
            step: 12,
            kind: EventKind::Death {
                agent: 5,
                cause: DeathCause::OldAge,
            },
        };
        assert_eq!(b.to_csv(), "12,birth,61,3,9,");
        assert_eq!(d.to_csv(), "12,death,5,,,old-age");
        assert_eq!(Event::from_csv(&b.to_csv()).unwrap(), b);
        assert_eq!(Event::from_csv(&d.to_csv()).unwrap(), d);
        assert!(Event::from_csv("1,death,5,2,,killed").is_err());
    }

    #[test]
    fn log_text_round_trip_and_population() {
        let mut log = EventLog::new(ArtifactHeader::new(0xabc, 7, "driven"));
        log.push(Event {
            step: 2,
            kind: EventKind::Death {
                agent: 0,
                cause: DeathCause::Starvation,
            },
        });
        log.push(Event {
            step: 2,
            kind: EventKind::Birth {
                child: 3,
                parents: (1, 2),
            },
        });
        log.push(Event {
            step: 4,
            kind: EventKind::Birth {
                child: 4,
                parents: (1, 3),
            },
        });
        let text = log.to_text();
        assert!(text.starts_with("# format=1 config_hash=0000000000000abc seed=7 mode=driven\n"));
        let back = EventLog::from_text(&text, std::path::Path::new("x")).unwrap();
        assert_eq!(back, log);
        assert_eq!(log.population_series(3, 5), vec![3, 3, 3, 3, 4, 4]);
    }

    #[test]
    #[should_panic(expected = "non-decreasing")]
    fn steps_cannot_go_backwards() {
        let mut log = EventLog::new(ArtifactHeader::new(0, 0, "driven"));
        let d = |step| Event {
            step,
            kind: EventKind::Death {
                agent: 0,
                cause: DeathCause::Killed,
            },
        };
        log.push(d(5));
        log.push(d(4));
    }
}
