//! Click statistics of an output ensemble: grouped count probabilities,
//! intensity correlations, low-order click moments and cumulants.
//!
//! The grouped-count estimator never touches the 2^M pattern space. Per
//! trajectory, each detector contributes a two-term factor
//! `pi(0) + pi(1) e^{-i k theta}` with `pi(0) = exp(-n')`,
//! `pi(1) = 1 - exp(-n')` and `n' = alpha' beta' - sigma`; the product over a
//! mode subset, accumulated on the Fourier lattice `k` and inverse-DFT'd back,
//! yields the probability of each grouped count. Memory per repeat is the
//! product of the grouped-count axis lengths, independent of M's exponential
//! pattern space.
//!
//! Estimates are means over `n_r` repeat blocks of `n_s` trajectories; the
//! repeat scatter supplies the theoretical sampling error per bin. The real
//! part is taken at the repeat level, after averaging trajectories, never per
//! trajectory.

use crate::error::{Error, Result};
use crate::input::{AmplitudeEnsemble, SigmaOrdering};
use crate::linalg::{ComplexMatrix, KahanVec};
use crate::rng::chunks_of;
use num_bigint::BigUint;
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::HashSet;
use std::ops::Range;

/// Clamp floor for Re(n') before exponentiation; exp(700) is still finite in
/// f64, anything lower would overflow for pathological trajectories.
const EXP_CLAMP: f64 = -700.0;

/// Disjoint output-mode subsets defining the grouped-count axes. Axis `j`
/// takes integer values `0..=|S_j|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinningSpec {
    subsets: Vec<Vec<usize>>,
}

impl BinningSpec {
    pub fn new(subsets: Vec<Vec<usize>>) -> Result<Self> {
        if subsets.is_empty() {
            return Err(Error::InvalidBinning("at least one subset required".into()));
        }
        let mut seen = HashSet::new();
        for (i, s) in subsets.iter().enumerate() {
            if s.is_empty() {
                return Err(Error::InvalidBinning(format!("subset {i} is empty")));
            }
            for &m in s {
                if !seen.insert(m) {
                    return Err(Error::InvalidBinning(format!(
                        "mode {m} appears in more than one subset"
                    )));
                }
            }
        }
        Ok(Self { subsets })
    }

    /// One group covering `0..modes`: the total-count distribution.
    pub fn full(modes: usize) -> Result<Self> {
        Self::new(vec![(0..modes).collect()])
    }

    /// `d` contiguous groups of `modes / d` modes each; requires `d | modes`.
    pub fn equal_split(modes: usize, d: usize) -> Result<Self> {
        if d == 0 || modes == 0 {
            return Err(Error::InvalidBinning("empty split".into()));
        }
        if !modes.is_multiple_of(d) {
            return Err(Error::InvalidBinning(format!(
                "equal split needs d | modes, got modes = {modes}, d = {d}"
            )));
        }
        let size = modes / d;
        Self::new(
            (0..d)
                .map(|g| (g * size..(g + 1) * size).collect())
                .collect(),
        )
    }

    pub fn d(&self) -> usize {
        self.subsets.len()
    }

    pub fn subsets(&self) -> &[Vec<usize>] {
        &self.subsets
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.subsets.iter().map(|s| s.len()).collect()
    }

    /// Axis lengths `|S_j| + 1`.
    pub fn dims(&self) -> Vec<usize> {
        self.subsets.iter().map(|s| s.len() + 1).collect()
    }

    /// Total click correlation order, the sum of group sizes.
    pub fn total_order(&self) -> usize {
        self.subsets.iter().map(|s| s.len()).sum()
    }

    pub fn bin_count(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn validate_for(&self, n_modes: usize) -> Result<()> {
        for s in &self.subsets {
            for &m in s {
                if m >= n_modes {
                    return Err(Error::InvalidBinning(format!(
                        "subset index {m} out of range for {n_modes} modes"
                    )));
                }
            }
        }
        if self.total_order() > n_modes {
            return Err(Error::InvalidBinning(
                "total correlation order exceeds mode count".into(),
            ));
        }
        Ok(())
    }
}

/// Number of lattice points of a binning spec.
pub fn bin_count(spec: &BinningSpec) -> usize {
    spec.bin_count()
}

/// Number of distinct equal-split groupings of `modes` into `d` groups,
/// `binom(modes, modes/d) / d`. Requires `d | modes`.
pub fn permutation_count(modes: usize, d: usize) -> Result<BigUint> {
    if d == 0 || modes == 0 || !modes.is_multiple_of(d) {
        return Err(Error::InvalidBinning(format!(
            "permutation count needs d | modes, got modes = {modes}, d = {d}"
        )));
    }
    let k = modes / d;
    let mut num = BigUint::from(1u32);
    let mut den = BigUint::from(1u32);
    for i in 0..k {
        num *= BigUint::from(modes - i);
        den *= BigUint::from(i + 1);
    }
    let binom = num / den;
    let d_big = BigUint::from(d);
    if (&binom % &d_big) != BigUint::ZERO {
        return Err(Error::InvalidBinning(format!(
            "binom({modes}, {k}) is not divisible by {d}"
        )));
    }
    Ok(binom / d_big)
}

/// A scalar Monte Carlo estimate with its repeat-scatter standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Grouped-count probabilities on the full lattice, with per-bin theoretical
/// sampling errors from the repeat scatter.
#[derive(Debug, Clone, PartialEq)]
pub struct GcpEstimate {
    dims: Vec<usize>,
    values: Vec<f64>,
    errors: Vec<f64>,
    n_r: usize,
    clamped: u64,
}

impl GcpEstimate {
    /// Assembles an estimate from raw lattice parts (also used for exact
    /// lattices, with zero errors).
    pub fn new(
        dims: Vec<usize>,
        values: Vec<f64>,
        errors: Vec<f64>,
        n_r: usize,
        clamped: u64,
    ) -> Self {
        assert_eq!(values.len(), dims.iter().product::<usize>());
        assert_eq!(values.len(), errors.len());
        Self {
            dims,
            values,
            errors,
            n_r,
            clamped,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn errors(&self) -> &[f64] {
        &self.errors
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    /// Trajectories whose weight exponent hit the overflow clamp.
    pub fn clamped(&self) -> u64 {
        self.clamped
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Row-major (lexicographic) flat index of a grouped-count tuple.
    pub fn index_of(&self, coords: &[usize]) -> usize {
        lattice_index(&self.dims, coords)
    }

    pub fn coords_of(&self, index: usize) -> Vec<usize> {
        lattice_coords(&self.dims, index)
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Root-sum-square of the per-bin errors.
    pub fn combined_error(&self) -> f64 {
        self.errors.iter().map(|e| e * e).sum::<f64>().sqrt()
    }
}

pub(crate) fn lattice_index(dims: &[usize], coords: &[usize]) -> usize {
    debug_assert_eq!(dims.len(), coords.len());
    let mut idx = 0;
    for (d, c) in dims.iter().zip(coords) {
        debug_assert!(c < d);
        idx = idx * d + c;
    }
    idx
}

pub(crate) fn lattice_coords(dims: &[usize], mut index: usize) -> Vec<usize> {
    let mut coords = vec![0; dims.len()];
    for i in (0..dims.len()).rev() {
        coords[i] = index % dims[i];
        index /= dims[i];
    }
    coords
}

/// Separable multi-dimensional DFT along every axis; `sign` is the exponent
/// sign. Forward uses -1, inverse +1 with a 1/len normalization.
fn dft_all_axes(data: &mut [Complex64], dims: &[usize], sign: f64) {
    for axis in 0..dims.len() {
        let d = dims[axis];
        let theta = 2.0 * std::f64::consts::PI / d as f64;
        let stride: usize = dims[axis + 1..].iter().product();
        let outer: usize = dims[..axis].iter().product();
        let block = stride * d;
        let mut scratch = vec![Complex64::ZERO; d];
        for o in 0..outer {
            for s in 0..stride {
                let base = o * block + s;
                for (k, slot) in scratch.iter_mut().enumerate() {
                    let mut acc = Complex64::ZERO;
                    for m in 0..d {
                        let ang = sign * theta * ((k * m) % d) as f64;
                        acc += data[base + m * stride] * Complex64::from_polar(1.0, ang);
                    }
                    *slot = acc;
                }
                for (k, slot) in scratch.iter().enumerate() {
                    data[base + k * stride] = *slot;
                }
            }
        }
    }
}

/// Forward transform of a lattice to Fourier coefficients.
pub fn forward_dft(lattice: &[Complex64], dims: &[usize]) -> Vec<Complex64> {
    let mut out = lattice.to_vec();
    dft_all_axes(&mut out, dims, -1.0);
    out
}

/// Inverse transform back to the grouped-count lattice (normalized).
pub fn inverse_dft(freq: &[Complex64], dims: &[usize]) -> Vec<Complex64> {
    let mut out = freq.to_vec();
    dft_all_axes(&mut out, dims, 1.0);
    let norm = 1.0 / out.len() as f64;
    out.iter_mut().for_each(|z| *z *= norm);
    out
}

/// Mean and standard error of the mean from repeat means (two-pass). With a
/// single repeat the error is undefined and reported as NaN.
pub(crate) fn mean_and_std_error(repeat_means: &[f64]) -> Estimate {
    let n = repeat_means.len();
    let mean = repeat_means.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Estimate {
            mean,
            std_error: f64::NAN,
        };
    }
    let ss = repeat_means.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    Estimate {
        mean,
        std_error: (ss / ((n as f64) * (n as f64 - 1.0))).sqrt(),
    }
}

#[inline]
fn output_number(alpha: Complex64, beta: Complex64, sigma_offset: f64) -> Complex64 {
    alpha * beta - sigma_offset
}

#[inline]
fn clamped_no_click(n_prime: Complex64, clamped: &mut u64) -> Complex64 {
    let mut np = n_prime;
    if np.re < EXP_CLAMP {
        np.re = EXP_CLAMP;
        *clamped += 1;
    }
    (-np).exp()
}

/// Per-trajectory click weights `pi(1) = 1 - exp(-n')`, complex-capable for
/// the doubled phase space. Real parts are only meaningful after ensemble
/// averaging of products.
pub fn click_probabilities(ens: &AmplitudeEnsemble) -> ComplexMatrix {
    let sigma = ens.sigma().offset();
    let mut out = ComplexMatrix::zeros(ens.n_modes(), ens.batch());
    let mut clamped = 0u64;
    for j in 0..ens.n_modes() {
        for k in 0..ens.batch() {
            let np = output_number(ens.alpha().get(j, k), ens.beta().get(j, k), sigma);
            let p0 = clamped_no_click(np, &mut clamped);
            out.set(j, k, Complex64::new(1.0, 0.0) - p0);
        }
    }
    out
}

/// Partial sums of one trajectory chunk over the Fourier lattice.
pub(crate) struct GcpPartial {
    pub sums: Vec<Complex64>,
    pub count: u64,
    pub clamped: u64,
}

/// Shared grouped-count accumulation kernel (same code path for in-memory
/// ensembles and the streaming driver, so both give identical results).
pub(crate) struct GcpKernel {
    subsets: Vec<Vec<usize>>,
    dims: Vec<usize>,
    /// Per axis: `omega^k = exp(-i 2 pi k / (M_j + 1))`.
    omegas: Vec<Vec<Complex64>>,
    sigma_offset: f64,
}

impl GcpKernel {
    pub fn new(spec: &BinningSpec, sigma: SigmaOrdering) -> Self {
        let dims = spec.dims();
        let omegas = dims
            .iter()
            .map(|&d| {
                let theta = 2.0 * std::f64::consts::PI / d as f64;
                (0..d)
                    .map(|k| Complex64::from_polar(1.0, -theta * k as f64))
                    .collect()
            })
            .collect();
        Self {
            subsets: spec.subsets().to_vec(),
            dims,
            omegas,
            sigma_offset: sigma.offset(),
        }
    }

    pub fn lattice_len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Accumulates trajectories `cols` of a transformed block.
    pub fn accumulate(
        &self,
        alpha: &ComplexMatrix,
        beta: &ComplexMatrix,
        cols: Range<usize>,
    ) -> GcpPartial {
        let d = self.dims.len();
        let len = self.lattice_len();
        let mut acc = KahanVec::zeros(len);
        let mut clamped = 0u64;
        let mut factors: Vec<Vec<Complex64>> = self
            .dims
            .iter()
            .map(|&n| vec![Complex64::ZERO; n])
            .collect();
        let count = cols.len() as u64;
        for traj in cols {
            for (g, modes) in self.subsets.iter().enumerate() {
                let f = &mut factors[g];
                f.fill(Complex64::new(1.0, 0.0));
                let omega = &self.omegas[g];
                for &i in modes {
                    let np =
                        output_number(alpha.get(i, traj), beta.get(i, traj), self.sigma_offset);
                    let p0 = clamped_no_click(np, &mut clamped);
                    let p1 = Complex64::new(1.0, 0.0) - p0;
                    for (fk, &w) in f.iter_mut().zip(omega) {
                        *fk *= p0 + p1 * w;
                    }
                }
            }
            if d == 1 {
                acc.add_slice(&factors[0]);
            } else {
                // odometer over the row-major lattice
                let mut coords = vec![0usize; d];
                for idx in 0..len {
                    let mut p = factors[0][coords[0]];
                    for g in 1..d {
                        p *= factors[g][coords[g]];
                    }
                    acc.add(idx, p);
                    for g in (0..d).rev() {
                        coords[g] += 1;
                        if coords[g] < self.dims[g] {
                            break;
                        }
                        coords[g] = 0;
                    }
                }
            }
        }
        GcpPartial {
            sums: acc.totals().to_vec(),
            count,
            clamped,
        }
    }
}

/// Ordered per-repeat totals; merge order is fixed by the caller so results
/// are independent of worker scheduling.
pub(crate) struct RepeatTotals {
    sums: Vec<KahanVec>,
    counts: Vec<u64>,
    clamped: u64,
}

impl RepeatTotals {
    pub fn new(n_r: usize, lattice_len: usize) -> Self {
        Self {
            sums: (0..n_r).map(|_| KahanVec::zeros(lattice_len)).collect(),
            counts: vec![0; n_r],
            clamped: 0,
        }
    }

    pub fn merge(&mut self, repeat: usize, partial: GcpPartial) {
        self.sums[repeat].add_slice(&partial.sums);
        self.counts[repeat] += partial.count;
        self.clamped += partial.clamped;
    }

    /// Inverse-DFT each repeat mean, take real parts, then average across
    /// repeats with the scatter as the per-bin error.
    pub fn finalize(self, dims: &[usize]) -> GcpEstimate {
        let n_r = self.sums.len();
        let len: usize = dims.iter().product();
        let mut per_repeat: Vec<Vec<f64>> = Vec::with_capacity(n_r);
        for (acc, &count) in self.sums.iter().zip(&self.counts) {
            let inv = 1.0 / count as f64;
            let freq: Vec<Complex64> = acc.totals().iter().map(|&z| z * inv).collect();
            let lattice = inverse_dft(&freq, dims);
            per_repeat.push(lattice.into_iter().map(|z| z.re).collect());
        }
        let mut values = vec![0.0; len];
        let mut errors = vec![0.0; len];
        let mut scratch = vec![0.0; n_r];
        for bin in 0..len {
            for (r, rep) in per_repeat.iter().enumerate() {
                scratch[r] = rep[bin];
            }
            let est = mean_and_std_error(&scratch);
            values[bin] = est.mean;
            errors[bin] = est.std_error;
        }
        GcpEstimate::new(dims.to_vec(), values, errors, n_r, self.clamped)
    }
}

/// Splits an in-memory ensemble into (repeat, chunk) jobs and folds the
/// partials in job order.
fn run_kernel_over_ensemble<P: Send>(
    ens: &AmplitudeEnsemble,
    accumulate: impl Fn(Range<usize>) -> P + Sync,
    merge: impl FnMut(usize, P),
) {
    let mut jobs: Vec<(usize, Range<usize>)> = Vec::new();
    for rep in 0..ens.n_r() {
        let base = rep * ens.n_s();
        for (_, off, len) in chunks_of(ens.n_s()) {
            jobs.push((rep, base + off..base + off + len));
        }
    }
    let partials: Vec<(usize, P)> = jobs
        .into_par_iter()
        .map(|(rep, cols)| (rep, accumulate(cols)))
        .collect();
    let mut merge = merge;
    for (rep, p) in partials {
        merge(rep, p);
    }
}

/// Grouped count probabilities of an output ensemble.
pub fn gcp(ens: &AmplitudeEnsemble, spec: &BinningSpec) -> Result<GcpEstimate> {
    spec.validate_for(ens.n_modes())?;
    let kernel = GcpKernel::new(spec, ens.sigma());
    let mut totals = RepeatTotals::new(ens.n_r(), kernel.lattice_len());
    run_kernel_over_ensemble(
        ens,
        |cols| kernel.accumulate(ens.alpha(), ens.beta(), cols),
        |rep, p| totals.merge(rep, p),
    );
    Ok(totals.finalize(kernel.dims()))
}

/// Scalar-weight accumulation: one complex Kahan sum per weight function.
pub(crate) struct ScalarPartial {
    pub sums: Vec<Complex64>,
    pub count: u64,
}

pub(crate) enum WeightKind {
    /// Product of (n'_j)^(c_j) over listed modes.
    NumberPowers(Vec<(usize, u32)>),
    /// Product of click weights pi_j(1) over listed modes.
    ClickProduct(Vec<usize>),
}

pub(crate) struct ScalarKernel {
    weights: Vec<WeightKind>,
    sigma_offset: f64,
}

impl ScalarKernel {
    pub fn new(weights: Vec<WeightKind>, sigma: SigmaOrdering) -> Self {
        Self {
            weights,
            sigma_offset: sigma.offset(),
        }
    }

    pub fn n_weights(&self) -> usize {
        self.weights.len()
    }

    pub fn accumulate(
        &self,
        alpha: &ComplexMatrix,
        beta: &ComplexMatrix,
        cols: Range<usize>,
    ) -> ScalarPartial {
        let mut acc = KahanVec::zeros(self.weights.len());
        // click weights share the exp clamp with the lattice kernel; the
        // count is only surfaced for lattice estimates
        let mut clamped = 0u64;
        let count = cols.len() as u64;
        for traj in cols {
            for (w, kind) in self.weights.iter().enumerate() {
                let val = match kind {
                    WeightKind::NumberPowers(powers) => {
                        let mut p = Complex64::new(1.0, 0.0);
                        for &(mode, c) in powers {
                            let np = output_number(
                                alpha.get(mode, traj),
                                beta.get(mode, traj),
                                self.sigma_offset,
                            );
                            p *= np.powu(c);
                        }
                        p
                    }
                    WeightKind::ClickProduct(modes) => {
                        let mut p = Complex64::new(1.0, 0.0);
                        for &mode in modes {
                            let np = output_number(
                                alpha.get(mode, traj),
                                beta.get(mode, traj),
                                self.sigma_offset,
                            );
                            let p0 = clamped_no_click(np, &mut clamped);
                            p *= Complex64::new(1.0, 0.0) - p0;
                        }
                        p
                    }
                };
                acc.add(w, val);
            }
        }
        let _ = clamped;
        ScalarPartial {
            sums: acc.totals().to_vec(),
            count,
        }
    }
}

/// Runs a scalar kernel over an ensemble and reduces each weight to repeat
/// means (real parts) plus scatter errors.
pub(crate) fn scalar_estimates(ens: &AmplitudeEnsemble, kernel: &ScalarKernel) -> Vec<Estimate> {
    let n_w = kernel.n_weights();
    let mut sums: Vec<KahanVec> = (0..ens.n_r()).map(|_| KahanVec::zeros(n_w)).collect();
    let mut counts = vec![0u64; ens.n_r()];
    run_kernel_over_ensemble(
        ens,
        |cols| kernel.accumulate(ens.alpha(), ens.beta(), cols),
        |rep, p: ScalarPartial| {
            sums[rep].add_slice(&p.sums);
            counts[rep] += p.count;
        },
    );
    (0..n_w)
        .map(|w| {
            let means: Vec<f64> = sums
                .iter()
                .zip(&counts)
                .map(|(s, &c)| (s.totals()[w] / c as f64).re)
                .collect();
            mean_and_std_error(&means)
        })
        .collect()
}

fn check_distinct(modes: &[usize], n_modes: usize) -> Result<()> {
    let mut seen = HashSet::new();
    for &m in modes {
        if m >= n_modes {
            return Err(Error::InvalidModeSet(format!("mode {m} out of range")));
        }
        if !seen.insert(m) {
            return Err(Error::InvalidModeSet(format!("duplicate mode {m}")));
        }
    }
    Ok(())
}

/// n-th order intensity correlation `<prod_j (n'_j)^(c_j)>` with per-mode
/// exponents `c`. Above normal ordering only exponents 0 and 1 are exact.
pub fn intensity_correlation(ens: &AmplitudeEnsemble, orders: &[u32]) -> Result<Estimate> {
    if orders.len() != ens.n_modes() {
        return Err(Error::ShapeMismatch(format!(
            "got {} exponents for {} modes",
            orders.len(),
            ens.n_modes()
        )));
    }
    if ens.sigma() != SigmaOrdering::Normal && orders.iter().any(|&c| c > 1) {
        return Err(Error::UnsupportedOrder);
    }
    let powers: Vec<(usize, u32)> = orders
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(m, &c)| (m, c))
        .collect();
    let kernel = ScalarKernel::new(vec![WeightKind::NumberPowers(powers)], ens.sigma());
    Ok(scalar_estimates(ens, &kernel)[0])
}

/// All-click marginal moment `<prod_j pi_j(1)>` over distinct modes.
pub fn marginal_moment(ens: &AmplitudeEnsemble, modes: &[usize]) -> Result<Estimate> {
    check_distinct(modes, ens.n_modes())?;
    let kernel = ScalarKernel::new(vec![WeightKind::ClickProduct(modes.to_vec())], ens.sigma());
    Ok(scalar_estimates(ens, &kernel)[0])
}

/// First two click cumulants of a mode pair: kappa1 = <pi_j(1)> and
/// kappa2 = <pi_j(1) pi_k(1)> - <pi_j(1)><pi_k(1)>, with errors from the
/// repeat scatter of the per-repeat cumulant estimates.
pub fn cumulants_low_order(
    ens: &AmplitudeEnsemble,
    j: usize,
    k: usize,
) -> Result<(Estimate, Estimate)> {
    if j == k {
        return Err(Error::InvalidModeSet(format!(
            "cumulant modes must differ, got {j}, {k}"
        )));
    }
    check_distinct(&[j, k], ens.n_modes())?;
    let kernel = ScalarKernel::new(
        vec![
            WeightKind::ClickProduct(vec![j]),
            WeightKind::ClickProduct(vec![k]),
            WeightKind::ClickProduct(vec![j, k]),
        ],
        ens.sigma(),
    );
    // per-repeat means feed the cumulant combination before the scatter
    let n_w = kernel.n_weights();
    let mut sums: Vec<KahanVec> = (0..ens.n_r()).map(|_| KahanVec::zeros(n_w)).collect();
    let mut counts = vec![0u64; ens.n_r()];
    run_kernel_over_ensemble(
        ens,
        |cols| kernel.accumulate(ens.alpha(), ens.beta(), cols),
        |rep, p: ScalarPartial| {
            sums[rep].add_slice(&p.sums);
            counts[rep] += p.count;
        },
    );
    let mut k1 = Vec::with_capacity(ens.n_r());
    let mut k2 = Vec::with_capacity(ens.n_r());
    for (s, &c) in sums.iter().zip(&counts) {
        let inv = 1.0 / c as f64;
        let pj = (s.totals()[0] * inv).re;
        let pk = (s.totals()[1] * inv).re;
        let pjk = (s.totals()[2] * inv).re;
        k1.push(pj);
        k2.push(pjk - pj * pk);
    }
    Ok((mean_and_std_error(&k1), mean_and_std_error(&k2)))
}
