//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//! Run with `cargo test -p gbs-core --test acceptance -- --nocapture` to see
//! the lines for passing criteria too.

use gbs_core::counts::generate_fakes;
use gbs_core::csvio::{write_gcp_csv, Metadata};
use gbs_core::input::{InputModel, SigmaOrdering};
use gbs_core::network::TransmissionMatrix;
use gbs_core::observables::{bin_count, permutation_count, BinningSpec};
use gbs_core::oracle::{
    exact_gcp, exact_identity_correlation, exact_pattern_probability, OutputCovariance,
    DEFAULT_PATTERN_CAP,
};
use gbs_core::simulate::{run_gcp, run_moments, SampleSizes};
use gbs_core::statistics::{chi_square, fit_decoherence, z_statistic, FitGrid, FitOptions};
use gbs_core::testing::{random_subunitary, sample_counts_from_gcp};
use gbs_core::{bin_patterns, BinnedCounts};
use num_bigint::BigUint;

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

/// Criterion 1: the Z-statistic reproduces the seven reference
/// (chi2/k, k) -> Z conversions within +-1.
#[test]
fn criterion_1_z_statistic_table() {
    let rows: [(f64, usize, f64); 7] = [
        (218.0, 53, 78.0),
        (143.0, 31, 50.0),
        (1861.0, 85, 221.0),
        (215.0, 74, 91.0),
        (171.0, 57, 72.0),
        (193.0, 40, 64.0),
        (151.0, 28, 49.0),
    ];
    let mut worst: f64 = 0.0;
    for (chi2_over_k, k, z_expect) in rows {
        let z = z_statistic(chi2_over_k * k as f64, k).unwrap();
        worst = worst.max((z - z_expect).abs());
        assert!(
            (z - z_expect).abs() <= 1.0,
            "chi2/k = {chi2_over_k}, k = {k}: z = {z:.2}, want {z_expect} +- 1"
        );
    }
    report(
        "1 (z-statistic table)",
        true,
        &format!("7/7 rows within +-1, worst |dz| = {worst:.2}"),
    );
}

/// Criterion 2: simulated single-mode no-click probabilities at E_S = 1e6
/// match the closed forms within 3 sigma_T.
#[test]
fn criterion_2_single_mode_closed_forms() {
    let sizes = SampleSizes::new(62_500, 16);
    let ident = TransmissionMatrix::identity(1);
    let spec = BinningSpec::full(1).unwrap();

    let pure = InputModel::pure_squeezed(vec![1.0], SigmaOrdering::Normal).unwrap();
    let g = run_gcp(&pure, &ident, &spec, sizes, 20_240_001).unwrap();
    let want = 1.0 / 1.0f64.cosh();
    let dev = (g.values()[0] - want).abs();
    assert!(
        dev < 3.0 * g.errors()[0],
        "pure r=1: p(0) = {} +- {}, want {want}",
        g.values()[0],
        g.errors()[0]
    );
    let pure_detail = format!(
        "pure r=1: |{:.5} - {want:.5}| = {:.1e} < 3*{:.1e}",
        g.values()[0],
        dev,
        g.errors()[0]
    );

    let squashed = InputModel::squashed_with_photons(&[0.5]).unwrap();
    let g = run_gcp(&squashed, &ident, &spec, sizes, 20_240_002).unwrap();
    let want_sq = 1.0 / 2.0f64.sqrt();
    let dev_sq = (g.values()[0] - want_sq).abs();
    assert!(
        dev_sq < 3.0 * g.errors()[0],
        "squashed n=0.5: p(0) = {} +- {}, want {want_sq}",
        g.values()[0],
        g.errors()[0]
    );
    report(
        "2 (single-mode closed forms)",
        true,
        &format!(
            "{pure_detail}; squashed n=0.5: dev {dev_sq:.1e} < 3*{:.1e}",
            g.errors()[0]
        ),
    );
}

/// Criterion 3: phase-space GCPs match the inclusion-exclusion oracle on
/// five random sub-unitary networks (M <= 4, N <= 2) within 3x the combined
/// error at E_S = 1e6, and oracle pattern probabilities sum to 1 within 1e-8.
#[test]
fn criterion_3_oracle_equivalence_small_networks() {
    let cases: [(usize, Vec<f64>, u64); 5] = [
        (2, vec![1.0], 3101),
        (3, vec![0.8, 0.5], 3102),
        (4, vec![1.1, 0.7], 3103),
        (2, vec![0.6, 0.9], 3104),
        (4, vec![1.2], 3105),
    ];
    let sizes = SampleSizes::new(62_500, 16);
    let mut bins_checked = 0usize;
    let mut worst_pull: f64 = 0.0;
    for (idx, (m_out, r, seed)) in cases.into_iter().enumerate() {
        let model = InputModel::pure_squeezed(r.clone(), SigmaOrdering::Normal).unwrap();
        let matrix = random_subunitary(m_out, r.len(), 0.9, seed);
        let cov = OutputCovariance::from_model(&model, &matrix).unwrap();

        // full pattern distribution normalizes
        let mut total = 0.0;
        let mut pattern = vec![false; m_out];
        for bits in 0u64..(1 << m_out) {
            for (i, slot) in pattern.iter_mut().enumerate() {
                *slot = (bits >> i) & 1 == 1;
            }
            total += exact_pattern_probability(&cov, &pattern, DEFAULT_PATTERN_CAP).unwrap();
        }
        assert!(
            (total - 1.0).abs() < 1e-8,
            "network {idx}: oracle patterns sum to {total}"
        );

        let mut specs = vec![BinningSpec::full(m_out).unwrap()];
        specs.push(match m_out {
            2 => BinningSpec::equal_split(2, 2).unwrap(),
            3 => BinningSpec::new(vec![vec![0], vec![1, 2]]).unwrap(),
            _ => BinningSpec::equal_split(4, 2).unwrap(),
        });
        for spec in &specs {
            let mc = run_gcp(&model, &matrix, spec, sizes, seed ^ 0xabcd).unwrap();
            let exact = exact_gcp(&cov, spec, DEFAULT_PATTERN_CAP).unwrap();
            for (bin, (&got, &want)) in mc.values().iter().zip(&exact).enumerate() {
                let err = mc.errors()[bin].max(1e-12);
                let pull = (got - want).abs() / err;
                worst_pull = worst_pull.max(pull);
                assert!(
                    pull < 3.0,
                    "network {idx}, d={}, bin {bin}: mc {got} vs exact {want}, pull {pull:.2}",
                    spec.d()
                );
                bins_checked += 1;
            }
        }
    }
    report(
        "3 (oracle equivalence, M <= 4)",
        true,
        &format!("{bins_checked} bins across 5 networks, worst pull {worst_pull:.2} < 3"),
    );
}

/// Criterion 4: the sampling-error scaling study at E_S = 1e6, M = N = 20,
/// identity network, uniform r = 1.
///
/// Pinned acceptance bounds: the sigma_T/G_exact ratio is ordered
/// positive-P < Wigner < Q at n in {2,4,6,8}; the Q ratio reaches O(1)
/// (pinned as >= 0.5) by n = 6 and Wigner by n = 8; the positive-P ratio
/// stays below 0.1 at n = 8.
///
/// Those bounds are jointly unsatisfiable and this test is red by design.
/// For exponent-one correlators on distinct modes (the only estimator family
/// valid above normal ordering here), the per-sample error constants are
/// exactly sqrt(rho^n - 1) with per-mode second-moment ratios rho_P = 3.7238,
/// rho_W = 4.5793, rho_Q = 5.6966 at r = 1. The Q constant at n = 6 (184.9)
/// is *smaller* than the positive-P constant at n = 8 (192.3), so no sample
/// size can satisfy "Q(6) >= 0.5" together with "posP(8) < 0.1": the first
/// needs sqrt(E_S) <= 370, the second sqrt(E_S) > 1923. At E_S = 1e6 the
/// expected positive-P ratio at n = 8 is 0.19, not < 0.1. The bounds are
/// asserted unchanged and the failure message lists the measured values;
/// the attainable ordering property passes separately in
/// `criterion_4_scaling_study_stable_orders`.
#[test]
fn criterion_4_scaling_study() {
    let sizes = SampleSizes::new(62_500, 16);
    let orders = [2usize, 4, 6, 8];
    let ratios = scaling_ratios(sizes, 44_001, &orders);
    let mut lines = Vec::new();
    for (i, &n) in orders.iter().enumerate() {
        lines.push(format!(
            "n={n}: posP {:.4}  wigner {:.4}  q {:.4}",
            ratios[0][i], ratios[1][i], ratios[2][i]
        ));
    }
    println!("measured sigma_T/G_exact at E_S = 1e6:");
    for l in &lines {
        println!("  {l}");
    }
    println!("analytic expectations: posP(8) = 0.192, wigner(8) = 0.440, q(6) = 0.185");

    let mut failures = Vec::new();
    for (i, &n) in orders.iter().enumerate() {
        if !(ratios[0][i] < ratios[1][i] && ratios[1][i] < ratios[2][i]) {
            failures.push(format!(
                "ordering violated at n={n}: posP {:.4}, wigner {:.4}, q {:.4} (the error \
                 estimate itself is heavy-tail noisy at high order)",
                ratios[0][i], ratios[1][i], ratios[2][i]
            ));
        }
    }
    if ratios[2][2] < 0.5 {
        failures.push(format!(
            "Q ratio at n=6 is {:.4}, pinned bound >= 0.5 (O(1)); unattainable together with \
             the positive-P bound at any E_S, see test doc",
            ratios[2][2]
        ));
    }
    if ratios[1][3] < 0.5 {
        failures.push(format!(
            "Wigner ratio at n=8 is {:.4}, pinned bound >= 0.5",
            ratios[1][3]
        ));
    }
    if ratios[0][3] >= 0.1 {
        failures.push(format!(
            "positive-P ratio at n=8 is {:.4}, pinned bound < 0.1 (analytic expectation at \
             E_S = 1e6 is 0.192: this sample size cannot reach the bound)",
            ratios[0][3]
        ));
    }
    let pass = failures.is_empty();
    report(
        "4 (scaling study, pinned bounds)",
        pass,
        if pass {
            "all pinned bounds hold"
        } else {
            "pinned bounds are mutually unattainable for distinct-mode correlators (red by design)"
        },
    );
    assert!(
        pass,
        "pinned bounds failed as analytically expected:\n  {}",
        failures.join("\n  ")
    );
}

/// The attainable part of the scaling study: strict positive-P < Wigner < Q
/// error ordering where the error estimator itself is stable (n <= 4; the
/// repeat scatter at n >= 6 fluctuates by factors of 2-3 at this scale).
#[test]
fn criterion_4_scaling_study_stable_orders() {
    let sizes = SampleSizes::new(7_812, 128);
    let orders = [2usize, 4];
    let ratios = scaling_ratios(sizes, 44_002, &orders);
    for (i, &n) in orders.iter().enumerate() {
        assert!(
            ratios[0][i] < ratios[1][i] && ratios[1][i] < ratios[2][i],
            "ordering violated at n={n}: posP {:.4}, wigner {:.4}, q {:.4}",
            ratios[0][i],
            ratios[1][i],
            ratios[2][i]
        );
    }
    report(
        "4b (scaling study, stable orders)",
        true,
        &format!(
            "positive-P < Wigner < Q at n=2 ({:.4} < {:.4} < {:.4}) and n=4 ({:.4} < {:.4} < {:.4})",
            ratios[0][0], ratios[1][0], ratios[2][0], ratios[0][1], ratios[1][1], ratios[2][1]
        ),
    );
}

/// sigma_T / G_exact for the three orderings, M = N = 20, identity network,
/// uniform r = 1, exponent-one correlators on the first n modes.
fn scaling_ratios(sizes: SampleSizes, seed: u64, orders: &[usize]) -> [Vec<f64>; 3] {
    let matrix = TransmissionMatrix::identity(20);
    let order_sets: Vec<Vec<(usize, u32)>> = orders
        .iter()
        .map(|&n| (0..n).map(|m| (m, 1)).collect())
        .collect();
    let normal = InputModel::pure_squeezed(vec![1.0; 20], SigmaOrdering::Normal).unwrap();
    let mut out: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (slot, sigma) in [
        SigmaOrdering::Normal,
        SigmaOrdering::Symmetric,
        SigmaOrdering::AntiNormal,
    ]
    .into_iter()
    .enumerate()
    {
        let model = normal.with_sigma(sigma).unwrap();
        let estimates = run_moments(&model, &matrix, &order_sets, sizes, seed).unwrap();
        for (i, &n) in orders.iter().enumerate() {
            let exact =
                exact_identity_correlation(&normal, &matrix, &(0..n).collect::<Vec<_>>()).unwrap();
            out[slot].push(estimates[i].std_error / exact);
        }
    }
    out
}

fn desk_network() -> (Vec<f64>, TransmissionMatrix) {
    let r = vec![0.52, 0.74, 0.91, 1.05, 1.18, 1.27, 1.38, 1.49];
    let matrix = random_subunitary(16, 8, 0.75, 5_001);
    (r, matrix)
}

/// Criterion 5: squashed fakes binned and compared against the squashed
/// phase-space simulation agree within |Z| <= 3 for d = 1 and d = 2.
#[test]
fn criterion_5_classical_self_consistency() {
    let (r, matrix) = desk_network();
    let model = InputModel::squashed(r).unwrap();
    let fakes = generate_fakes(&model, &matrix, 1_000_000, 51_001).unwrap();
    let sizes = SampleSizes::new(62_500, 16);
    let mut zs = Vec::new();
    for spec in [
        BinningSpec::full(16).unwrap(),
        BinningSpec::equal_split(16, 2).unwrap(),
    ] {
        let theory = run_gcp(&model, &matrix, &spec, sizes, 51_002).unwrap();
        let counts = bin_patterns(&fakes, &spec, None).unwrap();
        let rep = chi_square(&theory, &counts).unwrap();
        assert!(
            rep.z.abs() <= 3.0,
            "d={}: |Z| = {:.2} > 3 (chi2/k = {:.3}, k = {})",
            spec.d(),
            rep.z.abs(),
            rep.chi2_over_k,
            rep.k
        );
        zs.push(format!("d={}: Z = {:.2} (k = {})", spec.d(), rep.z, rep.k));
    }
    report("5 (classical self-consistency)", true, &zs.join("; "));
}

/// Criterion 6: counts synthesized from a thermalized model at
/// (t, epsilon) = (1.000, 0.040) are fitted back within +-0.005 on each axis.
#[test]
fn criterion_6_closed_loop_decoherence_fit() {
    let (r, matrix) = desk_network();
    let truth = InputModel::thermalized(r.clone(), 0.040, 1.000, SigmaOrdering::Normal).unwrap();
    let spec = BinningSpec::full(16).unwrap();
    let theory = run_gcp(&truth, &matrix, &spec, SampleSizes::new(62_500, 16), 61_001).unwrap();
    let counts = sample_counts_from_gcp(&theory, 1_000_000, 61_002);

    let base = InputModel::thermalized(r, 0.0, 1.0, SigmaOrdering::Normal).unwrap();
    let grid = FitGrid {
        t: (0.99, 1.01, 5),
        epsilon: (0.0, 0.08, 9),
    };
    let opts = FitOptions::new(SampleSizes::new(12_500, 16), 61_003);
    let fit = fit_decoherence(&counts, &base, &matrix, &grid, &opts).unwrap();
    assert!(
        (fit.t - 1.000).abs() <= 0.005,
        "t* = {:.4}, want 1.000 +- 0.005 (epsilon* = {:.4})",
        fit.t,
        fit.epsilon
    );
    assert!(
        (fit.epsilon - 0.040).abs() <= 0.005,
        "epsilon* = {:.4}, want 0.040 +- 0.005 (t* = {:.4})",
        fit.epsilon,
        fit.t
    );
    report(
        "6 (closed-loop decoherence fit)",
        true,
        &format!(
            "recovered (t, eps) = ({:.4}, {:.4}) from (1.000, 0.040); chi2/k = {:.2}, corner Z spread {:?}",
            fit.t, fit.epsilon, fit.chi2_over_k, fit.corner_z
        ),
    );
}

/// Criterion 7: structural invariants — normalization, marginalization
/// consistency, lattice/permutation counting, deterministic replay.
#[test]
fn criterion_7_structural_invariants() {
    // counting
    assert_eq!(bin_count(&BinningSpec::equal_split(144, 2).unwrap()), 5329);
    assert_eq!(permutation_count(4, 2).unwrap(), BigUint::from(3u32));

    // normalization and marginalization on a desk model
    let model = InputModel::thermalized(
        vec![1.0, 0.7, 0.5, 0.9, 0.3, 1.1],
        0.1,
        1.0,
        SigmaOrdering::Normal,
    )
    .unwrap();
    let matrix = random_subunitary(6, 6, 0.85, 7_001);
    let sizes = SampleSizes::new(25_000, 16);
    let joint = run_gcp(
        &model,
        &matrix,
        &BinningSpec::equal_split(6, 2).unwrap(),
        sizes,
        7_002,
    )
    .unwrap();
    assert!(
        (joint.total() - 1.0).abs() <= 3.0 * joint.combined_error().max(1e-12),
        "normalization: sum = {}, combined error = {}",
        joint.total(),
        joint.combined_error()
    );
    let single = run_gcp(
        &model,
        &matrix,
        &BinningSpec::new(vec![vec![0, 1, 2]]).unwrap(),
        sizes,
        7_002,
    )
    .unwrap();
    for m1 in 0..4 {
        let marginal: f64 = (0..4)
            .map(|m2| joint.values()[joint.index_of(&[m1, m2])])
            .sum();
        let sigma = (joint.errors()[joint.index_of(&[m1, 0])].powi(2)
            + single.errors()[m1].powi(2))
        .sqrt()
        .max(1e-12);
        assert!(
            (marginal - single.values()[m1]).abs() <= 3.0 * sigma,
            "marginalization at m1 = {m1}: {} vs {}",
            marginal,
            single.values()[m1]
        );
    }

    // deterministic replay: byte-identical serialized output
    let spec = BinningSpec::full(6).unwrap();
    let a = run_gcp(&model, &matrix, &spec, sizes, 7_003).unwrap();
    let b = run_gcp(&model, &matrix, &spec, sizes, 7_003).unwrap();
    let mut meta = Metadata::new();
    meta.push("seed", 7_003u64);
    let csv_a = write_gcp_csv(&a, &meta);
    let csv_b = write_gcp_csv(&b, &meta);
    assert_eq!(csv_a, csv_b, "replay must be byte-identical");

    report(
        "7 (structural invariants)",
        true,
        "bin_count(144,2) = 5329, permutation_count(4,2) = 3, normalization and marginalization within 3 sigma, replay byte-identical",
    );
}

/// The count side of criterion 7's normalization statement: binned pattern
/// totals are exact.
#[test]
fn binned_counts_total_exactly() {
    let (r, matrix) = desk_network();
    let model = InputModel::squashed(r).unwrap();
    let fakes = generate_fakes(&model, &matrix, 10_000, 99).unwrap();
    let counts: BinnedCounts =
        bin_patterns(&fakes, &BinningSpec::equal_split(16, 4).unwrap(), None).unwrap();
    assert_eq!(counts.total(), 10_000);
}
