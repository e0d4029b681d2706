//! Reference implementations written independently of the crate: plain
//! Gaussian elimination instead of Cholesky, explicit subset recursion,
//! Schur complements for conditional variances.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn log2_2pi_e() -> f64 {
    (2.0 * std::f64::consts::PI * std::f64::consts::E).log2()
}

/// Row-major symmetric matrix.
#[derive(Debug, Clone)]
pub struct Matrix {
    pub n: usize,
    pub a: Vec<f64>,
}

impl Matrix {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn restrict(&self, idx: &[usize]) -> Matrix {
        let k = idx.len();
        let mut a = Vec::with_capacity(k * k);
        for &i in idx {
            for &j in idx {
                a.push(self.at(i, j));
            }
        }
        Matrix { n: k, a }
    }

    pub fn permuted(&self, perm: &[usize]) -> Matrix {
        self.restrict(perm)
    }
}

/// `B Bᵀ + δI` with `B` uniform in [-1, 1].
pub fn random_pd(n: usize, rng: &mut impl Rng) -> Matrix {
    let b: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = (0..n).map(|p| b[i * n + p] * b[j * n + p]).sum();
        }
        a[i * n + i] += 0.05 + rng.random_range(0.0..0.5);
    }
    Matrix { n, a }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Natural log of the determinant by LU with partial pivoting.
pub fn ln_det(m: &Matrix) -> f64 {
    let n = m.n;
    let mut a = m.a.clone();
    let mut sign = 1.0;
    let mut acc = 0.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))
            .unwrap();
        if a[pivot * n + col] == 0.0 {
            return f64::NEG_INFINITY;
        }
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
            }
            sign = -sign;
        }
        let p = a[col * n + col];
        if p < 0.0 {
            sign = -sign;
        }
        acc += p.abs().ln();
        for r in col + 1..n {
            let f = a[r * n + col] / p;
            for j in col..n {
                a[r * n + j] -= f * a[col * n + j];
            }
        }
    }
    assert!(sign > 0.0, "covariance determinant must be positive");
    acc
}

/// Differential entropy in bits of the Gaussian with covariance `m`.
pub fn entropy_bits(m: &Matrix) -> f64 {
    0.5 * (m.n as f64 * log2_2pi_e() + ln_det(m) / std::f64::consts::LN_2)
}

/// All `k`-subsets of `0..n`, in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// `Σ_k [⟨H(X_j^k)⟩ − (k/n) H(X)]` by brute force.
pub fn tse_brute_force(m: &Matrix) -> f64 {
    let n = m.n;
    let h = entropy_bits(m);
    (1..=n)
        .map(|k| {
            let subs = subsets(n, k);
            let mean = subs.iter().map(|s| entropy_bits(&m.restrict(s))).sum::<f64>() / subs.len() as f64;
            mean - k as f64 / n as f64 * h
        })
        .sum()
}

/// Solves `a x = b` by Gauss-Jordan with partial pivoting.
pub fn solve(a: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = a.n;
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| a.at(i, j)).collect();
            row.push(b[i]);
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap();
        m.swap(c, p);
        let d = m[c][c];
        for v in m[c].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                let pivot_row = m[c].clone();
                for (v, pv) in m[r].iter_mut().zip(pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
    m.into_iter().map(|row| row[n]).collect()
}

/// `H(xᵢ | X − xᵢ)` in bits from the Schur complement
/// `σᵢᵢ − Σᵢᵣ Σᵣᵣ⁻¹ Σᵣᵢ`.
pub fn conditional_entropy(m: &Matrix, i: usize) -> f64 {
    let rest: Vec<usize> = (0..m.n).filter(|&j| j != i).collect();
    let var = if rest.is_empty() {
        m.at(i, i)
    } else {
        let cross: Vec<f64> = rest.iter().map(|&j| m.at(j, i)).collect();
        let y = solve(&m.restrict(&rest), &cross);
        m.at(i, i) - cross.iter().zip(&y).map(|(c, y)| c * y).sum::<f64>()
    };
    0.5 * (log2_2pi_e() + var.log2())
}

/// The conditional-entropy form `H(X) − Σ H(xᵢ | X − xᵢ)`.
pub fn tse_conditional(m: &Matrix) -> f64 {
    entropy_bits(m) - (0..m.n).map(|i| conditional_entropy(m, i)).sum::<f64>()
}

/// Paired t computed directly from the textbook formula.
pub fn reference_t(d: &[f64]) -> f64 {
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let ss = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    mean / ((ss / (n - 1.0)).sqrt() / n.sqrt())
}

/// `−p log₂ p − (1−p) log₂(1−p)` with `0 log 0 = 0`.
pub fn h2(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}
