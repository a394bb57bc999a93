//! Streaming simulation drivers: generate, transform and accumulate
//! trajectory chunks without materializing the full ensemble.
//!
//! Work is sharded over (repeat, chunk) cells. Every cell derives its own
//! random stream and partials are folded in cell order, so results are
//! bit-identical for a given seed regardless of thread count, and identical
//! to running the in-memory pipeline on the same sizes.

use crate::error::Result;
use crate::input::{InputModel, SamplingWidths};
use crate::network::{check_ordering_compatibility, TransmissionMatrix};
use crate::observables::{
    BinningSpec, Estimate, GcpEstimate, GcpKernel, RepeatTotals, ScalarKernel, ScalarPartial,
    WeightKind,
};
use crate::rng::chunks_of;
use crate::{linalg::KahanVec, observables::mean_and_std_error};
use rayon::prelude::*;

/// Sub-ensemble sizes: `n_r` independent repeats of `n_s` trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleSizes {
    pub n_s: usize,
    pub n_r: usize,
}

impl SampleSizes {
    pub fn new(n_s: usize, n_r: usize) -> Self {
        Self { n_s, n_r }
    }

    /// Splits a total ensemble size into the default 16 repeats (fewer when
    /// the total is small), rounding the repeat size up to cover the total.
    pub fn from_total(e_s: usize) -> Self {
        let n_r = 16.min(e_s.max(1));
        Self {
            n_s: e_s.div_ceil(n_r),
            n_r,
        }
    }

    pub fn total(&self) -> usize {
        self.n_s * self.n_r
    }
}

/// A model wired to a network with fixed sampling sizes and seed; the unit
/// that comparison workflows re-run under permutations or parameter changes.
#[derive(Debug, Clone)]
pub struct SimulationSpec<'a> {
    pub model: &'a InputModel,
    pub matrix: &'a TransmissionMatrix,
    pub sizes: SampleSizes,
    pub seed: u64,
}

fn validate(model: &InputModel, matrix: &TransmissionMatrix, sizes: SampleSizes) -> Result<()> {
    if sizes.n_s == 0 || sizes.n_r == 0 {
        return Err(crate::error::Error::ParameterDomain(
            "ensemble sizes n_s and n_r must both be at least 1".into(),
        ));
    }
    if matrix.n_inputs() != model.n_modes() {
        return Err(crate::error::Error::ShapeMismatch(format!(
            "matrix expects {} input modes, model has {}",
            matrix.n_inputs(),
            model.n_modes()
        )));
    }
    check_ordering_compatibility(matrix, model.sigma())
}

/// Grouped count probabilities of `model` through `matrix` (with the model's
/// `t` applied as the amplitude scale), streamed chunk by chunk.
pub fn run_gcp(
    model: &InputModel,
    matrix: &TransmissionMatrix,
    spec: &BinningSpec,
    sizes: SampleSizes,
    seed: u64,
) -> Result<GcpEstimate> {
    validate(model, matrix, sizes)?;
    spec.validate_for(matrix.n_outputs())?;
    let effective = matrix.with_t_scale(matrix.t_scale() * model.t())?;
    let scaled = effective.scaled_elements();
    let widths = SamplingWidths::of(model);
    let kernel = GcpKernel::new(spec, model.sigma());

    let jobs: Vec<(usize, u64, usize)> = (0..sizes.n_r)
        .flat_map(|rep| chunks_of(sizes.n_s).map(move |(c, _, len)| (rep, c, len)))
        .collect();
    let partials: Vec<(usize, crate::observables::GcpPartial)> = jobs
        .into_par_iter()
        .map(|(rep, chunk, len)| {
            let (a, b) = widths.sample_chunk(seed, rep as u64, chunk, len);
            let alpha = scaled.mul_block(&a, false);
            let beta = scaled.mul_block(&b, true);
            (rep, kernel.accumulate(&alpha, &beta, 0..len))
        })
        .collect();
    let mut totals = RepeatTotals::new(sizes.n_r, kernel.lattice_len());
    for (rep, p) in partials {
        totals.merge(rep, p);
    }
    Ok(totals.finalize(kernel.dims()))
}

impl SimulationSpec<'_> {
    pub fn run_gcp(&self, spec: &BinningSpec) -> Result<GcpEstimate> {
        run_gcp(self.model, self.matrix, spec, self.sizes, self.seed)
    }
}

/// Intensity correlations for several exponent vectors in one pass.
/// Each entry of `order_sets` lists (mode, exponent) pairs.
pub fn run_moments(
    model: &InputModel,
    matrix: &TransmissionMatrix,
    order_sets: &[Vec<(usize, u32)>],
    sizes: SampleSizes,
    seed: u64,
) -> Result<Vec<Estimate>> {
    validate(model, matrix, sizes)?;
    for set in order_sets {
        for &(mode, c) in set {
            if mode >= matrix.n_outputs() {
                return Err(crate::error::Error::InvalidModeSet(format!(
                    "mode {mode} out of range"
                )));
            }
            if model.sigma() != crate::input::SigmaOrdering::Normal && c > 1 {
                return Err(crate::error::Error::UnsupportedOrder);
            }
        }
    }
    let effective = matrix.with_t_scale(matrix.t_scale() * model.t())?;
    let scaled = effective.scaled_elements();
    let widths = SamplingWidths::of(model);
    let kernel = ScalarKernel::new(
        order_sets
            .iter()
            .map(|s| WeightKind::NumberPowers(s.clone()))
            .collect(),
        model.sigma(),
    );
    let n_w = order_sets.len();

    let jobs: Vec<(usize, u64, usize)> = (0..sizes.n_r)
        .flat_map(|rep| chunks_of(sizes.n_s).map(move |(c, _, len)| (rep, c, len)))
        .collect();
    let partials: Vec<(usize, ScalarPartial)> = jobs
        .into_par_iter()
        .map(|(rep, chunk, len)| {
            let (a, b) = widths.sample_chunk(seed, rep as u64, chunk, len);
            let alpha = scaled.mul_block(&a, false);
            let beta = scaled.mul_block(&b, true);
            (rep, kernel.accumulate(&alpha, &beta, 0..len))
        })
        .collect();
    let mut sums: Vec<KahanVec> = (0..sizes.n_r).map(|_| KahanVec::zeros(n_w)).collect();
    let mut counts = vec![0u64; sizes.n_r];
    for (rep, p) in partials {
        sums[rep].add_slice(&p.sums);
        counts[rep] += p.count;
    }
    Ok((0..n_w)
        .map(|w| {
            let means: Vec<f64> = sums
                .iter()
                .zip(&counts)
                .map(|(s, &c)| (s.totals()[w] / c as f64).re)
                .collect();
            mean_and_std_error(&means)
        })
        .collect())
}
