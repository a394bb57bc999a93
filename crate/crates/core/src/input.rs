//! Input-state models and initial stochastic amplitude sampling.
//!
//! A model is a squeezing vector plus a thermalization fraction `epsilon`, an
//! amplitude transmission correction `t`, an ordering parameter `sigma` and a
//! state family. Per mode, the derived photon number is `n = sinh^2(r)` and
//! the coherence `m = (1 - epsilon) cosh(r) sinh(r)`; thermalization keeps
//! the photon number and attenuates the coherence.
//!
//! Initial samples are drawn as
//!
//! ```text
//! alpha = (dx * w1 + i dy * w2) / 2,    beta = (dx * w1 - i dy * w2) / 2
//! ```
//!
//! with independent standard normals `w` and sigma-ordered quadrature
//! standard deviations `dx`, `dy`. When the squeezed-quadrature variance is
//! negative (normal ordering, nonclassical state) `dy` is imaginary and the
//! pair becomes two real, independent amplitudes; otherwise `beta` is the
//! complex conjugate of `alpha` and the phase space is classical.

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::rng::{chunks_of, stream_rng, StreamLabel};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Operator ordering: the vacuum-noise content of the representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaOrdering {
    /// sigma = 0: normal ordering (Glauber P / positive-P).
    Normal,
    /// sigma = 1/2: symmetric ordering (Wigner).
    Symmetric,
    /// sigma = 1: anti-normal ordering (Q function).
    AntiNormal,
}

impl SigmaOrdering {
    pub fn offset(self) -> f64 {
        match self {
            SigmaOrdering::Normal => 0.0,
            SigmaOrdering::Symmetric => 0.5,
            SigmaOrdering::AntiNormal => 1.0,
        }
    }

    pub fn from_value(v: f64) -> Option<Self> {
        if v == 0.0 {
            Some(SigmaOrdering::Normal)
        } else if v == 0.5 {
            Some(SigmaOrdering::Symmetric)
        } else if v == 1.0 {
            Some(SigmaOrdering::AntiNormal)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateFamily {
    PureSqueezed,
    ThermalizedSqueezed,
    Thermal,
    Squashed,
}

impl std::fmt::Display for StateFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            StateFamily::PureSqueezed => "pure",
            StateFamily::ThermalizedSqueezed => "thermalized",
            StateFamily::Thermal => "thermal",
            StateFamily::Squashed => "squashed",
        };
        f.write_str(s)
    }
}

impl StateFamily {
    /// Families with a positive diagonal-P distribution; these can be sampled
    /// on a classical phase space and drive the fake-pattern generator.
    pub fn is_classical(self) -> bool {
        matches!(self, StateFamily::Thermal | StateFamily::Squashed)
    }
}

/// Per-mode photon number `n` and coherence `m` from the beamsplitter
/// thermalization model: the coherence is attenuated by `1 - epsilon` while
/// the photon number is unchanged.
pub fn derive_photon_params(r: &[f64], epsilon: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !r.iter().all(|x| x.is_finite()) {
        return Err(Error::ParameterDomain(
            "squeezing vector must be finite".into(),
        ));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::ParameterDomain(format!(
            "thermalization fraction must lie in [0, 1], got {epsilon}"
        )));
    }
    let n = r.iter().map(|&x| x.sinh().powi(2)).collect();
    let m = r
        .iter()
        .map(|&x| (1.0 - epsilon) * x.cosh() * x.sinh())
        .collect();
    Ok((n, m))
}

#[derive(Debug, Clone)]
pub struct InputModel {
    r: Vec<f64>,
    epsilon: f64,
    t: f64,
    sigma: SigmaOrdering,
    family: StateFamily,
}

impl InputModel {
    pub fn new(
        family: StateFamily,
        r: Vec<f64>,
        epsilon: f64,
        t: f64,
        sigma: SigmaOrdering,
    ) -> Result<Self> {
        if r.is_empty() {
            return Err(Error::ParameterDomain(
                "at least one input mode required".into(),
            ));
        }
        if !r.iter().all(|x| x.is_finite()) {
            return Err(Error::ParameterDomain(
                "squeezing vector must be finite".into(),
            ));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::ParameterDomain(format!(
                "thermalization fraction must lie in [0, 1], got {epsilon}"
            )));
        }
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::ParameterDomain(format!(
                "transmission correction must be positive, got {t}"
            )));
        }
        match family {
            StateFamily::PureSqueezed if epsilon != 0.0 => {
                return Err(Error::ParameterDomain(
                    "pure squeezed inputs require epsilon = 0".into(),
                ));
            }
            StateFamily::Thermal if epsilon != 1.0 => {
                return Err(Error::ParameterDomain(
                    "thermal inputs are the epsilon = 1 limit; set epsilon = 1".into(),
                ));
            }
            // Squashed states are only defined on the diagonal-P phase space.
            StateFamily::Squashed if sigma != SigmaOrdering::Normal => {
                return Err(Error::ParameterDomain(
                    "squashed inputs are only supported at normal ordering".into(),
                ));
            }
            _ => {}
        }
        Ok(Self {
            r,
            epsilon,
            t,
            sigma,
            family,
        })
    }

    pub fn pure_squeezed(r: Vec<f64>, sigma: SigmaOrdering) -> Result<Self> {
        Self::new(StateFamily::PureSqueezed, r, 0.0, 1.0, sigma)
    }

    pub fn thermalized(r: Vec<f64>, epsilon: f64, t: f64, sigma: SigmaOrdering) -> Result<Self> {
        Self::new(StateFamily::ThermalizedSqueezed, r, epsilon, t, sigma)
    }

    pub fn thermal(r: Vec<f64>) -> Result<Self> {
        Self::new(StateFamily::Thermal, r, 1.0, 1.0, SigmaOrdering::Normal)
    }

    pub fn squashed(r: Vec<f64>) -> Result<Self> {
        Self::new(StateFamily::Squashed, r, 0.0, 1.0, SigmaOrdering::Normal)
    }

    /// Squashed model with given per-mode photon numbers: r = asinh(sqrt(n)).
    pub fn squashed_with_photons(n: &[f64]) -> Result<Self> {
        if !n.iter().all(|&x| x.is_finite() && x >= 0.0) {
            return Err(Error::ParameterDomain("photon numbers must be >= 0".into()));
        }
        Self::squashed(n.iter().map(|&x| x.sqrt().asinh()).collect())
    }

    pub fn n_modes(&self) -> usize {
        self.r.len()
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn sigma(&self) -> SigmaOrdering {
        self.sigma
    }

    pub fn family(&self) -> StateFamily {
        self.family
    }

    pub fn with_sigma(&self, sigma: SigmaOrdering) -> Result<Self> {
        Self::new(self.family, self.r.clone(), self.epsilon, self.t, sigma)
    }

    /// Per-mode (photon number, coherence) for this family.
    pub fn photon_params(&self) -> (Vec<f64>, Vec<f64>) {
        match self.family {
            StateFamily::PureSqueezed | StateFamily::ThermalizedSqueezed => {
                derive_photon_params(&self.r, self.epsilon).expect("validated at construction")
            }
            StateFamily::Thermal => {
                let (n, _) = derive_photon_params(&self.r, 1.0).expect("validated");
                let m = vec![0.0; n.len()];
                (n, m)
            }
            StateFamily::Squashed => {
                let (n, _) = derive_photon_params(&self.r, 0.0).expect("validated");
                let m = n.clone();
                (n, m)
            }
        }
    }
}

/// Sigma-ordered quadrature variances per mode. `dy2` entries may be negative
/// only at normal ordering, where the squeezed quadrature of a nonclassical
/// state has an imaginary half-width and the sampler switches to the
/// doubled (real, independent alpha/beta) branch.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureVariances {
    pub dx2: Vec<f64>,
    pub dy2: Vec<f64>,
}

pub fn sigma_variances(model: &InputModel) -> QuadratureVariances {
    let (n, m) = model.photon_params();
    let s = model.sigma().offset();
    let dx2 = n.iter().zip(&m).map(|(&n, &m)| 2.0 * (n + s + m)).collect();
    let dy2 = n.iter().zip(&m).map(|(&n, &m)| 2.0 * (n + s - m)).collect();
    QuadratureVariances { dx2, dy2 }
}

/// A batch of paired stochastic amplitudes, `n_modes x (n_s * n_r)`, laid out
/// as `n_r` contiguous repeat blocks of `n_s` trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeEnsemble {
    pub(crate) alpha: ComplexMatrix,
    pub(crate) beta: ComplexMatrix,
    sigma: SigmaOrdering,
    n_s: usize,
    n_r: usize,
}

impl AmplitudeEnsemble {
    pub(crate) fn from_parts(
        alpha: ComplexMatrix,
        beta: ComplexMatrix,
        sigma: SigmaOrdering,
        n_s: usize,
        n_r: usize,
    ) -> Self {
        debug_assert_eq!(alpha.cols(), n_s * n_r);
        debug_assert_eq!(alpha.rows(), beta.rows());
        Self {
            alpha,
            beta,
            sigma,
            n_s,
            n_r,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.alpha.rows()
    }

    pub fn batch(&self) -> usize {
        self.alpha.cols()
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn sigma(&self) -> SigmaOrdering {
        self.sigma
    }

    pub fn alpha(&self) -> &ComplexMatrix {
        &self.alpha
    }

    pub fn beta(&self) -> &ComplexMatrix {
        &self.beta
    }
}

/// Precomputed per-mode sampling coefficients.
pub(crate) struct SamplingWidths {
    /// dx / 2 per mode.
    half_dx: Vec<f64>,
    /// |dy| / 2 per mode (the modulus; `negative` records the branch).
    half_dy: Vec<f64>,
    /// Mode-wise branch flag: true when dy^2 < 0 (imaginary half-width).
    negative: Vec<bool>,
}

impl SamplingWidths {
    pub(crate) fn of(model: &InputModel) -> Self {
        let v = sigma_variances(model);
        let half_dx = v.dx2.iter().map(|&x| x.max(0.0).sqrt() / 2.0).collect();
        let half_dy = v.dy2.iter().map(|&y| y.abs().sqrt() / 2.0).collect();
        let negative = v.dy2.iter().map(|&y| y < 0.0).collect();
        Self {
            half_dx,
            half_dy,
            negative,
        }
    }

    pub(crate) fn n_modes(&self) -> usize {
        self.half_dx.len()
    }

    /// Fills one chunk of trajectories, drawing two normals per mode per
    /// trajectory in a fixed order.
    pub(crate) fn sample_chunk(
        &self,
        seed: u64,
        repeat: u64,
        chunk: u64,
        len: usize,
    ) -> (ComplexMatrix, ComplexMatrix) {
        let modes = self.n_modes();
        let mut alpha = ComplexMatrix::zeros(modes, len);
        let mut beta = ComplexMatrix::zeros(modes, len);
        let mut rng = stream_rng(seed, StreamLabel::Amplitudes, repeat, chunk);
        for traj in 0..len {
            for j in 0..modes {
                let w1: f64 = rng.sample(StandardNormal);
                let w2: f64 = rng.sample(StandardNormal);
                let x = self.half_dx[j] * w1;
                let y = self.half_dy[j] * w2;
                if self.negative[j] {
                    // imaginary dy: i * (i |dy| w2) = -|dy| w2, both real
                    alpha.set(j, traj, Complex64::new(x - y, 0.0));
                    beta.set(j, traj, Complex64::new(x + y, 0.0));
                } else {
                    let a = Complex64::new(x, y);
                    alpha.set(j, traj, a);
                    beta.set(j, traj, a.conj());
                }
            }
        }
        (alpha, beta)
    }
}

/// Draws the full ensemble: `n_r` repeat blocks of `n_s` trajectories each,
/// deterministic in (model, n_s, n_r, seed) and independent of threading.
pub fn sample_input_ensemble(
    model: &InputModel,
    n_s: usize,
    n_r: usize,
    seed: u64,
) -> Result<AmplitudeEnsemble> {
    if n_s == 0 || n_r == 0 {
        return Err(Error::ParameterDomain(
            "ensemble sizes n_s and n_r must both be at least 1".into(),
        ));
    }
    let widths = SamplingWidths::of(model);
    let modes = widths.n_modes();
    let batch = n_s * n_r;
    let mut alpha = ComplexMatrix::zeros(modes, batch);
    let mut beta = ComplexMatrix::zeros(modes, batch);
    for rep in 0..n_r {
        for (chunk, off, len) in chunks_of(n_s) {
            let (a, b) = widths.sample_chunk(seed, rep as u64, chunk, len);
            let base = rep * n_s + off;
            for j in 0..modes {
                for k in 0..len {
                    alpha.set(j, base + k, a.get(j, k));
                    beta.set(j, base + k, b.get(j, k));
                }
            }
        }
    }
    Ok(AmplitudeEnsemble::from_parts(
        alpha,
        beta,
        model.sigma(),
        n_s,
        n_r,
    ))
}
