//! Exact small-scale references used to validate the Monte Carlo engine:
//! closed-form single-mode click probabilities, pattern probabilities by
//! inclusion-exclusion over vacuum projections, and identity-network
//! intensity correlations.
//!
//! The covariance is assembled in the symmetric-ordering convention, where
//! the vacuum is the identity: quadrature blocks are
//! `Vxx = I + 2 Re(N + M)`, `Vyy = I + 2 Re(N - M)`, `Vxy = 2 Im(N + M)`
//! with the output moment matrices `N = conj(S) diag(n) S^T` and
//! `M = S diag(m) S^T` for the scaled network `S`. The probability that a
//! mode subset A sees no clicks is `2^|A| / sqrt(det(V_A + I))`, and a
//! pattern probability follows by inclusion-exclusion over its click set.

use crate::error::{Error, Result};
use crate::input::InputModel;
use crate::network::TransmissionMatrix;
use crate::observables::{lattice_index, BinningSpec};
use num_complex::Complex64;

/// Default cap on modes for exact pattern evaluation (2^M patterns, each an
/// inclusion-exclusion over up to 2^M subsets).
pub const DEFAULT_PATTERN_CAP: usize = 12;

/// Dense real matrix, row-major, square where needed.
#[derive(Debug, Clone)]
struct RealMatrix {
    data: Vec<f64>,
    n: usize,
}

impl RealMatrix {
    fn zeros(n: usize) -> Self {
        Self {
            data: vec![0.0; n * n],
            n,
        }
    }

    #[inline]
    fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n + c]
    }

    #[inline]
    fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.n + c] = v;
    }

    /// Determinant by LU with partial pivoting; destroys a working copy.
    fn determinant(&self) -> f64 {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = 1.0f64;
        for col in 0..n {
            let mut pivot = col;
            let mut best = a[col * n + col].abs();
            for row in col + 1..n {
                let v = a[row * n + col].abs();
                if v > best {
                    best = v;
                    pivot = row;
                }
            }
            if best == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot * n + k);
                }
                det = -det;
            }
            let diag = a[col * n + col];
            det *= diag;
            for row in col + 1..n {
                let f = a[row * n + col] / diag;
                if f == 0.0 {
                    continue;
                }
                for k in col..n {
                    a[row * n + k] -= f * a[col * n + k];
                }
            }
        }
        det
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations;
    /// returns (eigenvalues, eigenvector columns).
    fn symmetric_eigen(&self) -> (Vec<f64>, RealMatrix) {
        let n = self.n;
        let mut a = self.clone();
        let mut q = RealMatrix::zeros(n);
        for i in 0..n {
            q.set(i, i, 1.0);
        }
        for _sweep in 0..60 {
            let mut off = 0.0;
            for r in 0..n {
                for c in r + 1..n {
                    off += a.get(r, c).powi(2);
                }
            }
            if off.sqrt() < 1e-14 {
                break;
            }
            for p in 0..n {
                for qq in p + 1..n {
                    let apq = a.get(p, qq);
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let app = a.get(p, p);
                    let aqq = a.get(qq, qq);
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a.get(k, p);
                        let akq = a.get(k, qq);
                        a.set(k, p, c * akp - s * akq);
                        a.set(k, qq, s * akp + c * akq);
                    }
                    for k in 0..n {
                        let apk = a.get(p, k);
                        let aqk = a.get(qq, k);
                        a.set(p, k, c * apk - s * aqk);
                        a.set(qq, k, s * apk + c * aqk);
                    }
                    for k in 0..n {
                        let qkp = q.get(k, p);
                        let qkq = q.get(k, qq);
                        q.set(k, p, c * qkp - s * qkq);
                        q.set(k, qq, s * qkp + c * qkq);
                    }
                }
            }
        }
        ((0..n).map(|i| a.get(i, i)).collect(), q)
    }

    fn symmetric_eigenvalues(&self) -> Vec<f64> {
        self.symmetric_eigen().0
    }

    fn matmul(&self, other: &RealMatrix) -> RealMatrix {
        let n = self.n;
        let mut out = RealMatrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let v = self.get(r, k);
                if v == 0.0 {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += v * other.get(k, c);
                }
            }
        }
        out
    }
}

/// Symplectic eigenvalues of a quadrature covariance in the convention where
/// the vacuum is the identity: the positive spectrum of `i Omega V` with
/// `Omega = [[0, I], [-I, 0]]`. Computed as the square roots of the
/// eigenvalues of `-(W^2)` for the skew-symmetric `W = V^(1/2) Omega V^(1/2)`.
/// The uncertainty bound is `nu_j >= 1`; ordinary eigenvalues of a squeezed
/// covariance drop below one and carry no such bound.
fn symplectic_eigenvalues(v: &RealMatrix) -> Vec<f64> {
    let n = v.n;
    debug_assert_eq!(n % 2, 0);
    let m = n / 2;
    let (lam, q) = v.symmetric_eigen();
    // V must be positive definite for the Williamson form to exist
    if lam.iter().any(|&l| l <= 0.0) {
        return vec![0.0];
    }
    let mut half = RealMatrix::zeros(n);
    for r in 0..n {
        for c in 0..n {
            let mut acc = 0.0;
            for (k, &l) in lam.iter().enumerate() {
                acc += q.get(r, k) * l.sqrt() * q.get(c, k);
            }
            half.set(r, c, acc);
        }
    }
    let mut omega = RealMatrix::zeros(n);
    for j in 0..m {
        omega.set(j, m + j, 1.0);
        omega.set(m + j, j, -1.0);
    }
    let w = half.matmul(&omega).matmul(&half);
    let w2 = w.matmul(&w);
    let mut neg = RealMatrix::zeros(n);
    for r in 0..n {
        for c in 0..n {
            neg.set(r, c, -0.5 * (w2.get(r, c) + w2.get(c, r)));
        }
    }
    neg.symmetric_eigenvalues()
        .into_iter()
        .map(|l| l.max(0.0).sqrt())
        .collect()
}

/// Real symmetric covariance of the output quadratures, 2M x 2M in the
/// symmetric-ordering convention (vacuum = identity), laid out as
/// `[x_1..x_M, y_1..y_M]`.
#[derive(Debug, Clone)]
pub struct OutputCovariance {
    modes: usize,
    v: RealMatrix,
}

impl OutputCovariance {
    pub fn from_model(model: &InputModel, matrix: &TransmissionMatrix) -> Result<Self> {
        if matrix.n_inputs() != model.n_modes() {
            return Err(Error::ShapeMismatch(format!(
                "matrix expects {} input modes, model has {}",
                matrix.n_inputs(),
                model.n_modes()
            )));
        }
        let effective = matrix.with_t_scale(matrix.t_scale() * model.t())?;
        let s = effective.scaled_elements();
        let (n_in, m_in) = model.photon_params();
        let m_out = matrix.n_outputs();
        // N_jk = sum_l conj(S_jl) n_l S_kl ; M_jk = sum_l S_jl m_l S_kl
        let mut nmat = vec![Complex64::ZERO; m_out * m_out];
        let mut mmat = vec![Complex64::ZERO; m_out * m_out];
        for j in 0..m_out {
            for k in 0..m_out {
                let mut accn = Complex64::ZERO;
                let mut accm = Complex64::ZERO;
                for l in 0..model.n_modes() {
                    accn += s.get(j, l).conj() * n_in[l] * s.get(k, l);
                    accm += s.get(j, l) * m_in[l] * s.get(k, l);
                }
                nmat[j * m_out + k] = accn;
                mmat[j * m_out + k] = accm;
            }
        }
        let mut v = RealMatrix::zeros(2 * m_out);
        for j in 0..m_out {
            for k in 0..m_out {
                let npm = nmat[j * m_out + k] + mmat[j * m_out + k];
                let nmm = nmat[j * m_out + k] - mmat[j * m_out + k];
                let id = if j == k { 1.0 } else { 0.0 };
                v.set(j, k, id + 2.0 * npm.re);
                v.set(m_out + j, m_out + k, id + 2.0 * nmm.re);
                v.set(j, m_out + k, 2.0 * npm.im);
                v.set(m_out + k, j, 2.0 * npm.im);
            }
        }
        let cov = Self { modes: m_out, v };
        let min_eig = symplectic_eigenvalues(&cov.v)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_eig < 1.0 - 1e-9 {
            return Err(Error::InvalidCovariance { min_eig });
        }
        Ok(cov)
    }

    pub fn n_modes(&self) -> usize {
        self.modes
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.v.get(r, c)
    }

    /// Probability that every mode in `subset` registers no click: the
    /// vacuum projection of the reduced state.
    fn no_click_probability(&self, subset: &[usize]) -> f64 {
        let a = subset.len();
        if a == 0 {
            return 1.0;
        }
        // submatrix of V + I over the x and y rows of the subset
        let mut sub = RealMatrix::zeros(2 * a);
        let index = |i: usize, which: usize| subset[i] + which * self.modes;
        for (ri, &_r) in subset.iter().enumerate() {
            for (ci, &_c) in subset.iter().enumerate() {
                for (wr, wc) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    let v = self.v.get(index(ri, wr), index(ci, wc));
                    let id = if ri == ci && wr == wc { 1.0 } else { 0.0 };
                    sub.set(ri + wr * a, ci + wc * a, v + id);
                }
            }
        }
        let det = sub.determinant();
        2f64.powi(a as i32) / det.sqrt()
    }
}

/// Closed-form (no-click, click) probabilities for one thermalized mode:
/// `p0 = ((1+n)^2 - m^2)^{-1/2}`, reducing to `1/cosh(r)` for pure inputs and
/// `(1+2n)^{-1/2}` for squashed ones.
pub fn exact_click_prob_single_mode(model: &InputModel) -> Result<(f64, f64)> {
    if model.n_modes() != 1 {
        return Err(Error::ParameterDomain(format!(
            "single-mode closed form called with {} modes",
            model.n_modes()
        )));
    }
    let (n, m) = model.photon_params();
    let p0 = 1.0 / ((1.0 + n[0]).powi(2) - m[0] * m[0]).sqrt();
    Ok((p0, 1.0 - p0))
}

/// Exact probability of one click pattern by inclusion-exclusion:
/// `P(c) = sum_{S subset of clicks} (-1)^|S| p0(silent + S)`.
pub fn exact_pattern_probability(
    cov: &OutputCovariance,
    pattern: &[bool],
    cap: usize,
) -> Result<f64> {
    if pattern.len() != cov.n_modes() {
        return Err(Error::ShapeMismatch(format!(
            "pattern width {} vs {} covariance modes",
            pattern.len(),
            cov.n_modes()
        )));
    }
    if cov.n_modes() > cap {
        return Err(Error::OracleCap {
            modes: cov.n_modes(),
            cap,
        });
    }
    let clicks: Vec<usize> = pattern
        .iter()
        .enumerate()
        .filter(|(_, &c)| c)
        .map(|(i, _)| i)
        .collect();
    let silent: Vec<usize> = pattern
        .iter()
        .enumerate()
        .filter(|(_, &c)| !c)
        .map(|(i, _)| i)
        .collect();
    let mut prob = 0.0;
    let mut subset = Vec::with_capacity(silent.len() + clicks.len());
    for mask in 0u64..(1u64 << clicks.len()) {
        subset.clear();
        subset.extend_from_slice(&silent);
        let mut sign = 1.0;
        for (bit, &mode) in clicks.iter().enumerate() {
            if (mask >> bit) & 1 == 1 {
                subset.push(mode);
                sign = -sign;
            }
        }
        prob += sign * cov.no_click_probability(&subset);
    }
    Ok(prob)
}

/// Exact grouped-count probabilities by enumerating all 2^M patterns.
pub fn exact_gcp(cov: &OutputCovariance, spec: &BinningSpec, cap: usize) -> Result<Vec<f64>> {
    spec.validate_for(cov.n_modes())?;
    if cov.n_modes() > cap {
        return Err(Error::OracleCap {
            modes: cov.n_modes(),
            cap,
        });
    }
    let m = cov.n_modes();
    let dims = spec.dims();
    let mut lattice = vec![0.0; dims.iter().product()];
    let mut pattern = vec![false; m];
    for bits in 0u64..(1u64 << m) {
        for (i, slot) in pattern.iter_mut().enumerate() {
            *slot = (bits >> i) & 1 == 1;
        }
        let p = exact_pattern_probability(cov, &pattern, cap)?;
        let coords: Vec<usize> = spec
            .subsets()
            .iter()
            .map(|s| s.iter().filter(|&&i| pattern[i]).count())
            .collect();
        lattice[lattice_index(&dims, &coords)] += p;
    }
    Ok(lattice)
}

/// Product of per-mode photon numbers over distinct modes: the exact
/// intensity correlation of an identity network with exponent 1 per mode.
pub fn exact_identity_correlation(
    model: &InputModel,
    matrix: &TransmissionMatrix,
    modes: &[usize],
) -> Result<f64> {
    let ident = matrix.n_outputs() == matrix.n_inputs()
        && (matrix.t_scale() - 1.0).abs() <= 1e-12
        && (0..matrix.n_outputs()).all(|r| {
            (0..matrix.n_inputs()).all(|c| {
                let want = if r == c {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::ZERO
                };
                (matrix.elements().get(r, c) - want).norm() <= 1e-12
            })
        });
    if !ident {
        return Err(Error::ParameterDomain(
            "exact identity correlation requires the identity network".into(),
        ));
    }
    let mut seen = std::collections::HashSet::new();
    let (n, _) = model.photon_params();
    let mut prod = 1.0;
    for &m in modes {
        if m >= model.n_modes() {
            return Err(Error::InvalidModeSet(format!("mode {m} out of range")));
        }
        if !seen.insert(m) {
            return Err(Error::InvalidModeSet(format!("duplicate mode {m}")));
        }
        prod *= n[m];
    }
    Ok(prod)
}
