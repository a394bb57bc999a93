//! Helpers for tests and examples: random sub-unitary networks and synthetic
//! count draws from a simulated distribution.

use crate::counts::BinnedCounts;
use crate::linalg::ComplexMatrix;
use crate::network::TransmissionMatrix;
use crate::observables::GcpEstimate;
use crate::rng::{stream_rng, StreamLabel};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// A random complex Gaussian matrix rescaled so its largest singular value is
/// `max_singular` (sub-unitary by construction for values below one).
pub fn random_subunitary(
    outputs: usize,
    inputs: usize,
    max_singular: f64,
    seed: u64,
) -> TransmissionMatrix {
    assert!(max_singular > 0.0 && max_singular <= 1.0);
    let mut rng = stream_rng(seed, StreamLabel::Amplitudes, u64::MAX, 0);
    let data: Vec<Complex64> = (0..outputs * inputs)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let raw = ComplexMatrix::from_rows(outputs, inputs, data);
    let scale = max_singular / crate::linalg::max_singular_value(&raw);
    TransmissionMatrix::new(raw.map(|z| z * scale), 1.0).expect("rescaled matrix is sub-unitary")
}

/// Draws `n` categorical samples from the (clamped, renormalized) lattice of
/// an estimate; the synthetic-counts side of closed-loop tests.
pub fn sample_counts_from_gcp(gcp: &GcpEstimate, n: u64, seed: u64) -> BinnedCounts {
    let weights: Vec<f64> = gcp.values().iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    assert!(total > 0.0, "estimate has no probability mass");
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w / total;
        cdf.push(acc);
    }
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    let mut rng = stream_rng(seed, StreamLabel::Bernoulli, u64::MAX, 0);
    let mut counts = vec![0u64; weights.len()];
    for _ in 0..n {
        let u: f64 = rng.random();
        let idx = cdf.partition_point(|&c| c < u).min(counts.len() - 1);
        counts[idx] += 1;
    }
    BinnedCounts {
        dims: gcp.dims().to_vec(),
        counts,
        n_samples: n,
    }
}
