//! On-disk formats for run outputs.
//!
//! Text artifacts (event log, population series, complexity reports) start
//! with a `# format=… config_hash=… seed=… mode=…` line. Binary artifacts
//! (traces, genome snapshots) carry the same fields after a four-byte magic.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::brain::Role;
use crate::complexity::{ComplexityReport, Exclusion, LifetimeRecording, NeuronFilter};
use crate::error::{Error, Result};
use crate::genome::Genome;
use crate::world::ArtifactHeader;

pub const TRACE_MAGIC: &[u8; 4] = b"EVTR";
pub const SNAPSHOT_MAGIC: &[u8; 4] = b"EVGS";
pub const POPULATION_COLUMNS: &str = "step,population,births,deaths";
pub const COMPLEXITY_COLUMNS: &str = "agent_id,death_step,filter,C_approx,C_exact,integration,entropy,valid,reason";

fn put_header(out: &mut Vec<u8>, magic: &[u8; 4], h: &ArtifactHeader) {
    out.extend_from_slice(magic);
    out.extend_from_slice(&h.format_version.to_le_bytes());
    out.extend_from_slice(&h.config_hash.to_le_bytes());
    out.extend_from_slice(&h.seed.to_le_bytes());
    let mode = h.mode.as_bytes();
    out.push(u8::try_from(mode.len()).expect("mode names are short"));
    out.extend_from_slice(mode);
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'static str,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], what: &'static str, path: &'a Path) -> Self {
        Reader { bytes, pos: 0, what, path }
    }

    fn fail(&self, reason: impl Into<String>) -> Error {
        Error::format(self.what, self.path, format!("{} (offset {})", reason.into(), self.pos))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.fail("truncated"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn at_end(&self) -> bool {
        self.pos == self.bytes.len()
    }

    fn header(&mut self, magic: &[u8; 4]) -> Result<ArtifactHeader> {
        if self.take(4)? != magic {
            return Err(self.fail("bad magic"));
        }
        let format_version = self.u32()?;
        if format_version != crate::world::event::FORMAT_VERSION {
            return Err(self.fail(format!("unsupported format version {format_version}")));
        }
        let config_hash = self.u64()?;
        let seed = self.u64()?;
        let len = self.u8()? as usize;
        let mode = std::str::from_utf8(self.take(len)?)
            .map_err(|_| self.fail("mode is not utf-8"))?
            .to_string();
        Ok(ArtifactHeader {
            format_version,
            config_hash,
            seed,
            mode,
        })
    }
}

/// Header, agent id, birth and death steps, column counts, a role bitmap
/// (bit set = processing, most significant bit first), then the rows as
/// little-endian `f32`.
pub fn encode_trace(header: &ArtifactHeader, rec: &LifetimeRecording) -> Vec<u8> {
    let n = rec.n_columns();
    let mut out = Vec::with_capacity(64 + n / 8 + 4 * rec.data.len());
    put_header(&mut out, TRACE_MAGIC, header);
    out.extend_from_slice(&rec.agent_id.to_le_bytes());
    out.extend_from_slice(&rec.birth_step.to_le_bytes());
    out.extend_from_slice(&rec.death_step.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(rec.n_inputs() as u32).to_le_bytes());
    out.extend_from_slice(&(rec.n_rows() as u64).to_le_bytes());
    let mut bitmap = vec![0u8; n.div_ceil(8)];
    for (c, role) in rec.roles.iter().enumerate() {
        if *role == Role::Processing {
            bitmap[c / 8] |= 0x80 >> (c % 8);
        }
    }
    out.extend_from_slice(&bitmap);
    for v in &rec.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_trace(bytes: &[u8], path: &Path) -> Result<(ArtifactHeader, LifetimeRecording)> {
    let mut r = Reader::new(bytes, "trace", path);
    let header = r.header(TRACE_MAGIC)?;
    let agent_id = r.u64()?;
    let birth_step = r.u64()?;
    let death_step = r.u64()?;
    let n = r.u32()? as usize;
    let n_input = r.u32()? as usize;
    let rows = r.u64()? as usize;
    let bitmap = r.take(n.div_ceil(8))?;
    let roles: Vec<Role> = (0..n)
        .map(|c| {
            if bitmap[c / 8] & (0x80 >> (c % 8)) != 0 {
                Role::Processing
            } else {
                Role::Input
            }
        })
        .collect();
    if roles.iter().filter(|r| **r == Role::Input).count() != n_input {
        return Err(r.fail("role bitmap disagrees with input count"));
    }
    let cells = rows.checked_mul(n).ok_or_else(|| r.fail("row count overflows"))?;
    let raw = r.take(cells.checked_mul(4).ok_or_else(|| r.fail("row count overflows"))?)?;
    if !r.at_end() {
        return Err(r.fail("trailing bytes"));
    }
    let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((
        header,
        LifetimeRecording {
            agent_id,
            birth_step,
            death_step,
            roles,
            data,
        },
    ))
}

pub fn write_trace(path: &Path, header: &ArtifactHeader, rec: &LifetimeRecording) -> Result<()> {
    std::fs::write(path, encode_trace(header, rec)).map_err(|e| Error::io(path, e))
}

pub fn read_trace(path: &Path) -> Result<(ArtifactHeader, LifetimeRecording)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_trace(&bytes, path)
}

/// First eight bytes of the SHA-256 of `bytes`, big-endian.
pub fn digest64(bytes: &[u8]) -> u64 {
    let d = Sha256::digest(bytes);
    u64::from_be_bytes(d[..8].try_into().expect("sha256 digest is 32 bytes"))
}

pub fn trace_file_name(agent_id: u64) -> String {
    format!("agent-{agent_id:08}.trace")
}

/// The living population at one instant, in id order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub step: u64,
    pub ids: Vec<u64>,
    pub genomes: Vec<Genome>,
}

impl Snapshot {
    pub fn population(&self) -> usize {
        self.genomes.len()
    }
}

/// Header followed by the genome length in bits.
pub fn encode_snapshot_header(header: &ArtifactHeader, genome_len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(48);
    put_header(&mut out, SNAPSHOT_MAGIC, header);
    out.extend_from_slice(&(genome_len as u32).to_le_bytes());
    out
}

/// Step, population count, then `(id, packed bits)` per agent.
pub fn encode_snapshot(s: &Snapshot) -> Vec<u8> {
    let bytes_per = s.genomes.first().map_or(0, |g| g.as_bytes().len());
    let mut out = Vec::with_capacity(12 + s.genomes.len() * (8 + bytes_per));
    out.extend_from_slice(&s.step.to_le_bytes());
    out.extend_from_slice(&(s.genomes.len() as u32).to_le_bytes());
    for (id, g) in s.ids.iter().zip(&s.genomes) {
        out.extend_from_slice(&id.to_le_bytes());
        out.extend_from_slice(g.as_bytes());
    }
    out
}

pub fn decode_snapshots(bytes: &[u8], path: &Path) -> Result<(ArtifactHeader, Vec<Snapshot>)> {
    let mut r = Reader::new(bytes, "genome snapshot", path);
    let header = r.header(SNAPSHOT_MAGIC)?;
    let len = r.u32()? as usize;
    let per = len.div_ceil(8);
    let mut snapshots = Vec::new();
    while !r.at_end() {
        let step = r.u64()?;
        let pop = r.u32()? as usize;
        let mut ids = Vec::with_capacity(pop);
        let mut genomes = Vec::with_capacity(pop);
        for _ in 0..pop {
            ids.push(r.u64()?);
            let raw = r.take(per)?;
            genomes.push(Genome::from_bytes(len, raw).ok_or_else(|| r.fail("genome has stray padding bits"))?);
        }
        snapshots.push(Snapshot { step, ids, genomes });
    }
    Ok((header, snapshots))
}

pub fn read_snapshots(path: &Path) -> Result<(ArtifactHeader, Vec<Snapshot>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_snapshots(&bytes, path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PopulationRow {
    pub step: u64,
    pub population: usize,
    pub births: usize,
    pub deaths: usize,
}

pub fn population_csv_line(row: &PopulationRow) -> String {
    format!("{},{},{},{}\n", row.step, row.population, row.births, row.deaths)
}

fn split_header<'a>(text: &'a str, what: &'static str, columns: &str, path: &Path) -> Result<(ArtifactHeader, std::str::Lines<'a>)> {
    let bad = |reason: String| Error::format(what, path, reason);
    let mut lines = text.lines();
    let header = lines
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .ok_or_else(|| bad("missing header line".into()))
        .and_then(|h| ArtifactHeader::from_text(h).map_err(bad))?;
    if lines.next() != Some(columns) {
        return Err(bad("missing column line".into()));
    }
    Ok((header, lines))
}

pub fn parse_population(text: &str, path: &Path) -> Result<(ArtifactHeader, Vec<PopulationRow>)> {
    let (header, lines) = split_header(text, "population series", POPULATION_COLUMNS, path)?;
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        let parsed = (f.len() == 4)
            .then(|| -> Option<PopulationRow> {
                Some(PopulationRow {
                    step: f[0].parse().ok()?,
                    population: f[1].parse().ok()?,
                    births: f[2].parse().ok()?,
                    deaths: f[3].parse().ok()?,
                })
            })
            .flatten();
        rows.push(parsed.ok_or_else(|| Error::format("population series", path, format!("line {}", i + 3)))?);
    }
    Ok((header, rows))
}

fn number(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.12}")
    }
}

pub fn complexity_csv_line(r: &ComplexityReport) -> String {
    let reason = match &r.validity {
        Ok(()) => String::new(),
        Err(e) => e.to_string(),
    };
    format!(
        "{},{},{},{},{},{},{},{},{}\n",
        r.agent_id,
        r.death_step,
        r.filter,
        number(r.c_approx),
        r.c_exact.map_or(String::new(), number),
        number(r.integration),
        number(r.entropy),
        u8::from(r.is_valid()),
        reason
    )
}

pub fn complexity_csv(header: &ArtifactHeader, reports: &[ComplexityReport]) -> String {
    let mut out = format!("# {}\n{COMPLEXITY_COLUMNS}\n", header.to_text());
    for r in reports {
        out.push_str(&complexity_csv_line(r));
    }
    out
}

/// Reads reports back; column counts and sample sizes are not stored and
/// come back as zero.
pub fn parse_complexity(text: &str, path: &Path) -> Result<(ArtifactHeader, Vec<ComplexityReport>)> {
    let (header, lines) = split_header(text, "complexity report", COMPLEXITY_COLUMNS, path)?;
    let mut out = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        let bad = || Error::format("complexity report", path, format!("line {}", i + 3));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(bad());
        }
        let num = |s: &str| if s.is_empty() { Ok(f64::NAN) } else { s.parse::<f64>().map_err(|_| bad()) };
        let validity = match (f[7], f[8]) {
            ("1", "") => Ok(()),
            ("0", "insufficient samples") => Err(Exclusion::InsufficientSamples { samples: 0, required: 0 }),
            ("0", "no columns") => Err(Exclusion::NoColumns),
            ("0", "degenerate covariance") => Err(Exclusion::Degenerate),
            ("0", "negative complexity") => Err(Exclusion::NegativeComplexity),
            _ => return Err(bad()),
        };
        out.push(ComplexityReport {
            agent_id: f[0].parse().map_err(|_| bad())?,
            death_step: f[1].parse().map_err(|_| bad())?,
            filter: f[2].parse::<NeuronFilter>().map_err(|_| bad())?,
            n_columns: 0,
            samples: 0,
            c_approx: num(f[3])?,
            c_exact: if f[4].is_empty() { None } else { Some(num(f[4])?) },
            integration: num(f[5])?,
            entropy: num(f[6])?,
            validity,
        });
    }
    Ok((header, out))
}
