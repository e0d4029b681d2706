//! Neural complexity of lifetime activation traces.
//!
//! Entropies use the Gaussian closed form over the sample covariance of the
//! (jittered) trace; all quantities are in bits.
//!
//! * `integration`: `I(X) = Σ H(xᵢ) − H(X)`
//! * `complexity_exact`: `Σₖ [⟨H(Xⱼᵏ)⟩ − (k/n)·H(X)]` by enumerating every
//!   subset, feasible only for small `n`
//! * `complexity_approx`: `H(X) − Σ H(xᵢ | X − xᵢ)`, evaluated through
//!   `Σ H(X − xᵢ) − (n − 1)·H(X)`

use std::f64::consts::{E, LN_2, PI};
use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Normal};

use crate::brain::Role;
use crate::rng::RandomStream;

pub const DEFAULT_JITTER: f64 = 1e-6;
pub const DEFAULT_EXACT_LIMIT: usize = 12;
pub const MIN_SAMPLES_FLOOR: usize = 20;
/// Approximate complexity below this (bits) marks a report as numerically unsound.
pub const NEGATIVE_FLOOR: f64 = -1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NeuronFilter {
    All,
    Input,
    #[default]
    Processing,
}

impl NeuronFilter {
    pub fn keeps(self, role: Role) -> bool {
        match self {
            NeuronFilter::All => true,
            NeuronFilter::Input => role == Role::Input,
            NeuronFilter::Processing => role == Role::Processing,
        }
    }
}

impl fmt::Display for NeuronFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NeuronFilter::All => "all",
            NeuronFilter::Input => "input",
            NeuronFilter::Processing => "processing",
        })
    }
}

impl FromStr for NeuronFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(NeuronFilter::All),
            "input" => Ok(NeuronFilter::Input),
            "processing" => Ok(NeuronFilter::Processing),
            other => Err(format!("unknown neuron filter `{other}` (all|input|processing)")),
        }
    }
}

/// Why a trace or model yields no usable complexity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Exclusion {
    InsufficientSamples { samples: usize, required: usize },
    NoColumns,
    Degenerate,
    NegativeComplexity,
}

impl fmt::Display for Exclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exclusion::InsufficientSamples { .. } => f.write_str("insufficient samples"),
            Exclusion::NoColumns => f.write_str("no columns"),
            Exclusion::Degenerate => f.write_str("degenerate covariance"),
            Exclusion::NegativeComplexity => f.write_str("negative complexity"),
        }
    }
}

/// The full-brain activation history of one agent, one row per living step.
#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeRecording {
    pub agent_id: u64,
    pub birth_step: u64,
    pub death_step: u64,
    pub roles: Vec<Role>,
    /// Row-major, `rows × roles.len()`.
    pub data: Vec<f32>,
}

impl LifetimeRecording {
    pub fn new(agent_id: u64, birth_step: u64, roles: Vec<Role>) -> Self {
        LifetimeRecording {
            agent_id,
            birth_step,
            death_step: birth_step,
            roles,
            data: Vec::new(),
        }
    }

    pub fn n_columns(&self) -> usize {
        self.roles.len()
    }

    pub fn n_rows(&self) -> usize {
        self.data.len().checked_div(self.roles.len()).unwrap_or(0)
    }

    pub fn n_inputs(&self) -> usize {
        self.roles.iter().filter(|r| **r == Role::Input).count()
    }

    pub fn push_row(&mut self, activations: &[f64]) {
        debug_assert_eq!(activations.len(), self.roles.len());
        self.data.extend(activations.iter().map(|&a| a as f32));
    }

    pub fn row(&self, r: usize) -> &[f32] {
        let n = self.roles.len();
        &self.data[r * n..(r + 1) * n]
    }
}

/// A column-filtered, jittered trace ready for covariance estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTrace {
    pub agent_id: u64,
    pub filter: NeuronFilter,
    pub roles: Vec<Role>,
    pub rows: usize,
    /// Row-major, `rows × roles.len()`.
    pub data: Vec<f64>,
    pub validity: Result<(), Exclusion>,
}

impl ActivationTrace {
    pub fn n_columns(&self) -> usize {
        self.roles.len()
    }

    pub fn is_valid(&self) -> bool {
        self.validity.is_ok()
    }
}

pub fn min_samples(n_columns: usize) -> usize {
    (2 * n_columns).max(MIN_SAMPLES_FLOOR)
}

/// Selects columns by role and adds N(0, σ²) jitter to every entry.
///
/// `rows` limits the trace to its last `rows` steps (the whole lifetime when
/// `None`). A trace shorter than `max(2n, 20)` rows is marked invalid.
pub fn build_trace(
    recording: &LifetimeRecording,
    filter: NeuronFilter,
    jitter: f64,
    rows: Option<usize>,
    rng: &mut RandomStream,
) -> ActivationTrace {
    let columns: Vec<usize> = (0..recording.n_columns())
        .filter(|&c| filter.keeps(recording.roles[c]))
        .collect();
    let total = recording.n_rows();
    let take = rows.map_or(total, |r| r.min(total));
    let noise = Normal::new(0.0, jitter.max(0.0)).expect("finite jitter");
    let mut data = Vec::with_capacity(take * columns.len());
    for r in total - take..total {
        let row = recording.row(r);
        for &c in &columns {
            let j = if jitter > 0.0 { noise.sample(rng) } else { 0.0 };
            data.push(f64::from(row[c]) + j);
        }
    }
    let required = min_samples(columns.len());
    let validity = if columns.is_empty() {
        Err(Exclusion::NoColumns)
    } else if take < required {
        Err(Exclusion::InsufficientSamples {
            samples: take,
            required,
        })
    } else {
        Ok(())
    };
    ActivationTrace {
        agent_id: recording.agent_id,
        filter,
        roles: columns.iter().map(|&c| recording.roles[c]).collect(),
        rows: take,
        data,
        validity,
    }
}

/// Mean and covariance of a set of variables.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    n: usize,
    mean: Vec<f64>,
    /// Row-major `n × n`.
    cov: Vec<f64>,
    samples: usize,
}

impl CovarianceModel {
    /// Sample covariance with the `T − 1` divisor.
    pub fn from_trace(trace: &ActivationTrace) -> Self {
        let n = trace.n_columns();
        let t = trace.rows;
        let mut mean = vec![0.0; n];
        for row in trace.data.chunks_exact(n) {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= t as f64);
        let mut cov = vec![0.0; n * n];
        let mut centred = vec![0.0; n];
        for row in trace.data.chunks_exact(n) {
            for ((c, x), m) in centred.iter_mut().zip(row).zip(&mean) {
                *c = x - m;
            }
            for i in 0..n {
                let ci = centred[i];
                let dst = &mut cov[i * n..i * n + i + 1];
                for (d, cj) in dst.iter_mut().zip(&centred[..=i]) {
                    *d += ci * cj;
                }
            }
        }
        let denom = t.saturating_sub(1).max(1) as f64;
        for i in 0..n {
            for j in 0..=i {
                let v = cov[i * n + j] / denom;
                cov[i * n + j] = v;
                cov[j * n + i] = v;
            }
        }
        CovarianceModel {
            n,
            mean,
            cov,
            samples: t,
        }
    }

    /// A model from a known covariance (row-major, symmetric).
    pub fn from_covariance(n: usize, cov: Vec<f64>) -> Self {
        assert_eq!(cov.len(), n * n, "covariance must be n×n");
        CovarianceModel {
            n,
            mean: vec![0.0; n],
            cov,
            samples: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        self.cov[i * self.n + j]
    }

    fn submatrix(&self, subset: &[usize]) -> Vec<f64> {
        let k = subset.len();
        let mut m = Vec::with_capacity(k * k);
        for &i in subset {
            for &j in subset {
                m.push(self.cov[i * self.n + j]);
            }
        }
        m
    }
}

/// In-place lower Cholesky factor of a row-major `k × k` matrix; `None` when
/// the matrix is not numerically positive definite.
fn cholesky(m: &mut [f64], k: usize) -> Option<()> {
    for j in 0..k {
        let mut d = m[j * k + j];
        for p in 0..j {
            d -= m[j * k + p] * m[j * k + p];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        m[j * k + j] = d;
        for i in j + 1..k {
            let mut s = m[i * k + j];
            for p in 0..j {
                s -= m[i * k + p] * m[j * k + p];
            }
            m[i * k + j] = s / d;
        }
    }
    Some(())
}

fn ln_det_of_factor(l: &[f64], k: usize) -> f64 {
    (0..k).map(|i| l[i * k + i].ln()).sum::<f64>() * 2.0
}

/// Entropy of `k` jointly Gaussian variables with log-determinant `ln_det`.
fn entropy_from_ln_det(k: usize, ln_det: f64) -> f64 {
    0.5 * (k as f64 * (2.0 * PI * E).ln() + ln_det) / LN_2
}

/// `½·log₂((2πe)^k · det Σ_S)` for the variables in `subset`. The empty set
/// has zero entropy.
pub fn gaussian_entropy(model: &CovarianceModel, subset: &[usize]) -> Result<f64, Exclusion> {
    if subset.is_empty() {
        return Ok(0.0);
    }
    let k = subset.len();
    let mut m = model.submatrix(subset);
    cholesky(&mut m, k).ok_or(Exclusion::Degenerate)?;
    let h = entropy_from_ln_det(k, ln_det_of_factor(&m, k));
    h.is_finite().then_some(h).ok_or(Exclusion::Degenerate)
}

pub fn joint_entropy(model: &CovarianceModel) -> Result<f64, Exclusion> {
    let all: Vec<usize> = (0..model.n).collect();
    gaussian_entropy(model, &all)
}

pub fn integration(model: &CovarianceModel) -> Result<f64, Exclusion> {
    let mut marginals = 0.0;
    for i in 0..model.n {
        marginals += gaussian_entropy(model, &[i])?;
    }
    Ok(marginals - joint_entropy(model)?)
}

/// Full subset enumeration; `None` when `n > limit`.
pub fn complexity_exact(model: &CovarianceModel, limit: usize) -> Option<Result<f64, Exclusion>> {
    let n = model.n;
    if n > limit || n >= usize::BITS as usize {
        return None;
    }
    Some(exact_sum(model))
}

fn exact_sum(model: &CovarianceModel) -> Result<f64, Exclusion> {
    let n = model.n;
    if n == 0 {
        return Err(Exclusion::NoColumns);
    }
    let h_all = joint_entropy(model)?;
    let mut sum_by_size = vec![0.0; n + 1];
    let mut count_by_size = vec![0usize; n + 1];
    let mut subset = Vec::with_capacity(n);
    for mask in 1usize..(1 << n) {
        subset.clear();
        subset.extend((0..n).filter(|b| mask & (1 << b) != 0));
        let k = subset.len();
        sum_by_size[k] += gaussian_entropy(model, &subset)?;
        count_by_size[k] += 1;
    }
    Ok((1..=n)
        .map(|k| sum_by_size[k] / count_by_size[k] as f64 - (k as f64 / n as f64) * h_all)
        .sum())
}

/// Leave-one-out form. The `n` determinants of the `(n−1)`-variable
/// marginals come from one factorisation: `det Σ₋ᵢ = det Σ · (Σ⁻¹)ᵢᵢ`.
pub fn complexity_approx(model: &CovarianceModel) -> Result<f64, Exclusion> {
    let n = model.n;
    if n == 0 {
        return Err(Exclusion::NoColumns);
    }
    if n == 1 {
        joint_entropy(model)?;
        return Ok(0.0);
    }
    let mut l = model.cov.clone();
    cholesky(&mut l, n).ok_or(Exclusion::Degenerate)?;
    let ln_det = ln_det_of_factor(&l, n);
    let h_all = entropy_from_ln_det(n, ln_det);

    // (Σ⁻¹)ᵢᵢ = ‖L⁻¹ eᵢ‖²; invert the triangular factor column by column.
    let mut inv_diag = vec![0.0; n];
    let mut col = vec![0.0; n];
    for i in 0..n {
        col.fill(0.0);
        col[i] = 1.0 / l[i * n + i];
        for r in i + 1..n {
            let mut s = 0.0;
            for p in i..r {
                s -= l[r * n + p] * col[p];
            }
            col[r] = s / l[r * n + r];
        }
        inv_diag[i] = col[i..].iter().map(|c| c * c).sum();
    }
    let mut sum_loo = 0.0;
    for d in inv_diag {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Exclusion::Degenerate);
        }
        sum_loo += entropy_from_ln_det(n - 1, ln_det + d.ln());
    }
    let c = sum_loo - (n as f64 - 1.0) * h_all;
    c.is_finite().then_some(c).ok_or(Exclusion::Degenerate)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexitySettings {
    pub filter: NeuronFilter,
    pub jitter: f64,
    pub exact_limit: usize,
}

impl Default for ComplexitySettings {
    fn default() -> Self {
        ComplexitySettings {
            filter: NeuronFilter::Processing,
            jitter: DEFAULT_JITTER,
            exact_limit: DEFAULT_EXACT_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityReport {
    pub agent_id: u64,
    pub death_step: u64,
    pub filter: NeuronFilter,
    pub n_columns: usize,
    pub samples: usize,
    pub c_approx: f64,
    pub c_exact: Option<f64>,
    pub integration: f64,
    pub entropy: f64,
    pub validity: Result<(), Exclusion>,
}

impl ComplexityReport {
    pub fn is_valid(&self) -> bool {
        self.validity.is_ok()
    }

    fn invalid(trace: &ActivationTrace, death_step: u64, why: Exclusion) -> Self {
        ComplexityReport {
            agent_id: trace.agent_id,
            death_step,
            filter: trace.filter,
            n_columns: trace.n_columns(),
            samples: trace.rows,
            c_approx: f64::NAN,
            c_exact: None,
            integration: f64::NAN,
            entropy: f64::NAN,
            validity: Err(why),
        }
    }
}

/// Every measure for one trace; unusable traces yield an invalid report.
pub fn analyze_trace(trace: &ActivationTrace, death_step: u64, exact_limit: usize) -> ComplexityReport {
    if let Err(why) = &trace.validity {
        return ComplexityReport::invalid(trace, death_step, why.clone());
    }
    let model = CovarianceModel::from_trace(trace);
    let measured = (|| {
        let entropy = joint_entropy(&model)?;
        let integration = integration(&model)?;
        let c_approx = complexity_approx(&model)?;
        let c_exact = complexity_exact(&model, exact_limit).transpose()?;
        Ok::<_, Exclusion>((entropy, integration, c_approx, c_exact))
    })();
    match measured {
        Err(why) => ComplexityReport::invalid(trace, death_step, why),
        Ok((entropy, integration, c_approx, c_exact)) => ComplexityReport {
            agent_id: trace.agent_id,
            death_step,
            filter: trace.filter,
            n_columns: trace.n_columns(),
            samples: trace.rows,
            c_approx,
            c_exact,
            integration,
            entropy,
            validity: if c_approx < NEGATIVE_FLOOR {
                Err(Exclusion::NegativeComplexity)
            } else {
                Ok(())
            },
        },
    }
}

/// Convenience: trace construction and analysis of a whole recording.
pub fn analyze_recording(
    recording: &LifetimeRecording,
    settings: &ComplexitySettings,
    rng: &mut RandomStream,
) -> ComplexityReport {
    let trace = build_trace(recording, settings.filter, settings.jitter, None, rng);
    analyze_trace(&trace, recording.death_step, settings.exact_limit)
}
