//! Linear network transmission matrices and the amplitude transform.
//!
//! A lossy network is a complex `outputs x inputs` matrix with a global
//! amplitude scale `t`; the effective matrix `S = t * elements` must be
//! sub-unitary (no gain). The ensemble transform is `alpha' = S alpha`,
//! `beta' = conj(S) beta`, which preserves `beta = conj(alpha)` on the
//! classical branch automatically.

use crate::error::{Error, Result};
use crate::input::{AmplitudeEnsemble, SigmaOrdering};
use crate::linalg::ComplexMatrix;
use num_complex::Complex64;
use rand::Rng;
use std::path::Path;

/// Tolerance on the largest singular value: physical matrices only attenuate.
pub const SUB_UNITARY_TOL: f64 = 1e-6;
/// Tolerance for treating a matrix as exactly unitary.
pub const UNITARY_TOL: f64 = 1e-6;

/// An output-index permutation. `perm[i]` is the source index of slot `i`:
/// row `i` of the permuted matrix is row `perm[i]` of the original, and bit
/// `i` of a permuted detection pattern is bit `perm[i]` of the original.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &i in &map {
            if i >= n || seen[i] {
                return Err(Error::InvalidPermutation { len: n });
            }
            seen[i] = true;
        }
        Ok(Self(map))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// Unbiased Fisher-Yates shuffle of the identity.
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        let mut map: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            map.swap(i, j);
        }
        Self(map)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// Source index feeding slot `i`.
    #[inline]
    pub fn source(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &j) in self.0.iter().enumerate() {
            inv[j] = i;
        }
        Self(inv)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionMatrix {
    elements: ComplexMatrix,
    t_scale: f64,
}

impl TransmissionMatrix {
    /// Validates finiteness and sub-unitarity of `t_scale * elements`.
    pub fn new(elements: ComplexMatrix, t_scale: f64) -> Result<Self> {
        if !(t_scale.is_finite() && t_scale > 0.0) {
            return Err(Error::ParameterDomain(format!(
                "transmission scale must be positive, got {t_scale}"
            )));
        }
        if elements
            .data()
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::MatrixFormat("non-finite matrix entry".into()));
        }
        let m = Self { elements, t_scale };
        let smax = m.max_singular_value();
        if smax > 1.0 + SUB_UNITARY_TOL {
            return Err(Error::SubUnitary { sigma_max: smax });
        }
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        let mut e = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            e.set(i, i, Complex64::new(1.0, 0.0));
        }
        Self {
            elements: e,
            t_scale: 1.0,
        }
    }

    pub fn n_outputs(&self) -> usize {
        self.elements.rows()
    }

    pub fn n_inputs(&self) -> usize {
        self.elements.cols()
    }

    pub fn t_scale(&self) -> f64 {
        self.t_scale
    }

    pub fn elements(&self) -> &ComplexMatrix {
        &self.elements
    }

    /// Replaces the amplitude scale, revalidating sub-unitarity.
    pub fn with_t_scale(&self, t: f64) -> Result<Self> {
        Self::new(self.elements.clone(), t)
    }

    /// The effective matrix `t * elements`.
    pub fn scaled_elements(&self) -> ComplexMatrix {
        self.elements.map(|z| z * self.t_scale)
    }

    /// Largest singular value of the scaled matrix.
    pub fn max_singular_value(&self) -> f64 {
        crate::linalg::max_singular_value(&self.scaled_elements())
    }

    /// max |S^H S - I| over entries; infinite for non-square matrices.
    pub fn unitarity_residual(&self) -> f64 {
        if self.elements.rows() != self.elements.cols() {
            return f64::INFINITY;
        }
        let s = self.scaled_elements();
        let n = s.cols();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::ZERO;
                for r in 0..s.rows() {
                    acc += s.get(r, i).conj() * s.get(r, j);
                }
                let target = if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::ZERO
                };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_residual() <= tol
    }

    /// Rows reordered so that output `i` reads former output `perm[i]`.
    pub fn permuted(&self, perm: &Permutation) -> Result<Self> {
        if perm.len() != self.n_outputs() {
            return Err(Error::InvalidPermutation { len: perm.len() });
        }
        let (m, n) = (self.n_outputs(), self.n_inputs());
        let mut e = ComplexMatrix::zeros(m, n);
        for i in 0..m {
            let src = perm.source(i);
            for c in 0..n {
                e.set(i, c, self.elements.get(src, c));
            }
        }
        // row permutation preserves singular values; skip revalidation
        Ok(Self {
            elements: e,
            t_scale: self.t_scale,
        })
    }
}

pub fn permute_outputs(
    matrix: &TransmissionMatrix,
    perm: &Permutation,
) -> Result<TransmissionMatrix> {
    matrix.permuted(perm)
}

/// Parses the text format: optional `#` comment lines, a `M N` header, then
/// M*N whitespace-separated `re im` pairs in row-major order. A `# transpose`
/// comment marks files stored as inputs x outputs; they are transposed on
/// ingest so the in-memory convention is always outputs x inputs.
pub fn parse_matrix(text: &str) -> Result<TransmissionMatrix> {
    let mut transpose = false;
    let mut tokens: Vec<&str> = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            if comment.trim() == "transpose" {
                transpose = true;
            }
            continue;
        }
        tokens.extend(trimmed.split_whitespace());
    }
    if tokens.len() < 2 {
        return Err(Error::MatrixFormat("missing `rows cols` header".into()));
    }
    let rows: usize = tokens[0]
        .parse()
        .map_err(|_| Error::MatrixFormat(format!("bad row count {:?}", tokens[0])))?;
    let cols: usize = tokens[1]
        .parse()
        .map_err(|_| Error::MatrixFormat(format!("bad column count {:?}", tokens[1])))?;
    if rows == 0 || cols == 0 {
        return Err(Error::MatrixFormat(
            "matrix dimensions must be positive".into(),
        ));
    }
    let body = &tokens[2..];
    if body.len() != 2 * rows * cols {
        return Err(Error::MatrixFormat(format!(
            "expected {} re/im values for a {rows}x{cols} matrix, found {}",
            2 * rows * cols,
            body.len()
        )));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for pair in body.chunks(2) {
        let re: f64 = pair[0]
            .parse()
            .map_err(|_| Error::MatrixFormat(format!("bad entry {:?}", pair[0])))?;
        let im: f64 = pair[1]
            .parse()
            .map_err(|_| Error::MatrixFormat(format!("bad entry {:?}", pair[1])))?;
        if !re.is_finite() || !im.is_finite() {
            return Err(Error::MatrixFormat("non-finite matrix entry".into()));
        }
        data.push(Complex64::new(re, im));
    }
    let mut elements = ComplexMatrix::from_rows(rows, cols, data);
    if transpose {
        elements = elements.transposed();
    }
    TransmissionMatrix::new(elements, 1.0)
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<TransmissionMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_matrix(&text)
}

/// Checks the ordering/loss compatibility rule: above normal ordering the
/// transform is only exact for unitary matrices (lossy channels would need
/// extra reservoir noise, which this pipeline does not inject).
pub(crate) fn check_ordering_compatibility(
    matrix: &TransmissionMatrix,
    sigma: SigmaOrdering,
) -> Result<()> {
    if sigma != SigmaOrdering::Normal && !matrix.is_unitary(UNITARY_TOL) {
        return Err(Error::NonUnitary(format!(
            "sigma = {} needs a unitary matrix (residual {:.3e})",
            sigma.offset(),
            matrix.unitarity_residual()
        )));
    }
    Ok(())
}

/// Transforms an ensemble through the network: `alpha' = S alpha`,
/// `beta' = conj(S) beta` with `S = t * elements`.
pub fn apply_network(
    matrix: &TransmissionMatrix,
    ens: &AmplitudeEnsemble,
) -> Result<AmplitudeEnsemble> {
    if matrix.n_inputs() != ens.n_modes() {
        return Err(Error::ShapeMismatch(format!(
            "matrix expects {} input modes, ensemble has {}",
            matrix.n_inputs(),
            ens.n_modes()
        )));
    }
    check_ordering_compatibility(matrix, ens.sigma())?;
    let s = matrix.scaled_elements();
    let alpha = s.mul_block(ens.alpha(), false);
    let beta = s.mul_block(ens.beta(), true);
    Ok(AmplitudeEnsemble::from_parts(
        alpha,
        beta,
        ens.sigma(),
        ens.n_s(),
        ens.n_r(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::input::{sample_input_ensemble, InputModel};
    use approx::assert_relative_eq;

    fn balanced_beamsplitter() -> TransmissionMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let e = ComplexMatrix::from_rows(
            2,
            2,
            vec![
                Complex64::new(h, 0.0),
                Complex64::new(h, 0.0),
                Complex64::new(h, 0.0),
                Complex64::new(-h, 0.0),
            ],
        );
        TransmissionMatrix::new(e, 1.0).unwrap()
    }

    #[test]
    fn parse_identity_channel() {
        let t = parse_matrix("1 1\n1 0\n").unwrap();
        assert_eq!(t.n_outputs(), 1);
        assert_eq!(t.n_inputs(), 1);
        assert_eq!(t.elements().get(0, 0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn parse_rejects_entry_count_mismatch() {
        // three values for a declared 2x2 (needs 8)
        let err = parse_matrix("2 2\n1 0 0\n").unwrap_err();
        assert!(matches!(err, Error::MatrixFormat(_)), "{err}");
    }

    #[test]
    fn parse_rejects_bad_header_and_nonfinite() {
        assert!(parse_matrix("").is_err());
        assert!(parse_matrix("x 2\n").is_err());
        assert!(parse_matrix("1 1\nnan 0\n").is_err());
    }

    #[test]
    fn parse_rejects_gain() {
        let err = parse_matrix("1 1\n2 0\n").unwrap_err();
        assert!(matches!(err, Error::SubUnitary { .. }), "{err}");
    }

    #[test]
    fn parse_transpose_directive() {
        // stored inputs x outputs: 1 input, 2 outputs
        let t = parse_matrix("# transpose\n1 2\n0.5 0 0.5 0\n").unwrap();
        assert_eq!(t.n_outputs(), 2);
        assert_eq!(t.n_inputs(), 1);
    }

    #[test]
    fn beamsplitter_is_unitary_with_unit_singular_values() {
        let t = balanced_beamsplitter();
        assert_relative_eq!(t.max_singular_value(), 1.0, max_relative = 1e-9);
        assert!(t.is_unitary(1e-12));
    }

    #[test]
    fn identity_transform_is_identity() {
        let model = InputModel::pure_squeezed(vec![1.0, 0.5], SigmaOrdering::Normal).unwrap();
        let ens = sample_input_ensemble(&model, 100, 2, 9).unwrap();
        let out = apply_network(&TransmissionMatrix::identity(2), &ens).unwrap();
        assert_eq!(out, ens);
    }

    #[test]
    fn zero_matrix_gives_vacuum() {
        let model = InputModel::pure_squeezed(vec![1.0], SigmaOrdering::Normal).unwrap();
        let ens = sample_input_ensemble(&model, 50, 2, 9).unwrap();
        let zero = TransmissionMatrix::new(ComplexMatrix::zeros(3, 1), 1.0).unwrap();
        let out = apply_network(&zero, &ens).unwrap();
        assert!(out.alpha().data().iter().all(|z| *z == Complex64::ZERO));
        assert_eq!(out.n_modes(), 3);
    }

    #[test]
    fn scalar_loss_semantics() {
        // alpha = beta = 2 through a 0.5 channel: alpha' = beta' = 1, n' = 1
        let model = InputModel::pure_squeezed(vec![1.0], SigmaOrdering::Normal).unwrap();
        let mut ens = sample_input_ensemble(&model, 1, 1, 9).unwrap();
        ens.alpha.set(0, 0, Complex64::new(2.0, 0.0));
        ens.beta.set(0, 0, Complex64::new(2.0, 0.0));
        let half = TransmissionMatrix::new(
            ComplexMatrix::from_rows(1, 1, vec![Complex64::new(0.5, 0.0)]),
            1.0,
        )
        .unwrap();
        let out = apply_network(&half, &ens).unwrap();
        assert_eq!(out.alpha().get(0, 0), Complex64::new(1.0, 0.0));
        assert_eq!(out.beta().get(0, 0), Complex64::new(1.0, 0.0));
        let n_out = out.alpha().get(0, 0) * out.beta().get(0, 0);
        assert_eq!(n_out, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn loss_scales_photon_number_by_t_squared() {
        let model = InputModel::pure_squeezed(vec![1.0, 0.7], SigmaOrdering::Normal).unwrap();
        let ens = sample_input_ensemble(&model, 5_000, 2, 21).unwrap();
        let u = balanced_beamsplitter();
        let t = 0.8;
        let lossy = u.with_t_scale(t).unwrap();
        let out_u = apply_network(&u, &ens).unwrap();
        let out_l = apply_network(&lossy, &ens).unwrap();
        for mode in 0..2 {
            let mean = |e: &AmplitudeEnsemble| {
                (0..e.batch())
                    .map(|k| (e.alpha().get(mode, k) * e.beta().get(mode, k)).re)
                    .sum::<f64>()
                    / e.batch() as f64
            };
            assert_relative_eq!(mean(&out_l), t * t * mean(&out_u), max_relative = 1e-12);
        }
    }

    #[test]
    fn lossy_matrix_rejected_above_normal_ordering() {
        let model = InputModel::pure_squeezed(vec![1.0], SigmaOrdering::Symmetric).unwrap();
        let ens = sample_input_ensemble(&model, 10, 1, 2).unwrap();
        let lossy = TransmissionMatrix::new(
            ComplexMatrix::from_rows(1, 1, vec![Complex64::new(0.5, 0.0)]),
            1.0,
        )
        .unwrap();
        let err = apply_network(&lossy, &ens).unwrap_err();
        assert!(matches!(err, Error::NonUnitary(_)), "{err}");
        let ok = apply_network(&TransmissionMatrix::identity(1), &ens);
        assert!(ok.is_ok());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let model = InputModel::pure_squeezed(vec![1.0], SigmaOrdering::Normal).unwrap();
        let ens = sample_input_ensemble(&model, 10, 1, 2).unwrap();
        assert!(apply_network(&TransmissionMatrix::identity(2), &ens).is_err());
    }

    #[test]
    fn permutation_basics() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        let p = Permutation::new(vec![1, 0]).unwrap();
        let t = balanced_beamsplitter();
        let swapped = t.permuted(&p).unwrap();
        assert_eq!(swapped.elements().row(0), t.elements().row(1));
        assert_eq!(swapped.elements().row(1), t.elements().row(0));
        // applying the inverse restores the matrix
        let restored = swapped.permuted(&p.inverse()).unwrap();
        assert_eq!(restored, t);
        // identity permutation is a no-op
        let id = Permutation::identity(2);
        assert_eq!(t.permuted(&id).unwrap(), t);
    }

    #[test]
    fn permute_then_apply_equals_apply_then_permute() {
        let model = InputModel::pure_squeezed(vec![0.9, 0.4], SigmaOrdering::Normal).unwrap();
        let ens = sample_input_ensemble(&model, 64, 2, 31).unwrap();
        let t = balanced_beamsplitter();
        let p = Permutation::new(vec![1, 0]).unwrap();
        let a = apply_network(&t.permuted(&p).unwrap(), &ens).unwrap();
        let b = apply_network(&t, &ens).unwrap();
        for k in 0..ens.batch() {
            for i in 0..2 {
                assert_eq!(a.alpha().get(i, k), b.alpha().get(p.source(i), k));
                assert_eq!(a.beta().get(i, k), b.beta().get(p.source(i), k));
            }
        }
    }

    #[test]
    fn linearity_of_transform() {
        let model = InputModel::pure_squeezed(vec![0.9, 0.4], SigmaOrdering::Normal).unwrap();
        let e1 = sample_input_ensemble(&model, 32, 2, 41).unwrap();
        let e2 = sample_input_ensemble(&model, 32, 2, 42).unwrap();
        let mut sum = e1.clone();
        for j in 0..2 {
            for k in 0..sum.batch() {
                sum.alpha
                    .set(j, k, e1.alpha().get(j, k) + e2.alpha().get(j, k));
                sum.beta
                    .set(j, k, e1.beta().get(j, k) + e2.beta().get(j, k));
            }
        }
        let t = balanced_beamsplitter();
        let o1 = apply_network(&t, &e1).unwrap();
        let o2 = apply_network(&t, &e2).unwrap();
        let os = apply_network(&t, &sum).unwrap();
        for j in 0..2 {
            for k in 0..sum.batch() {
                let lhs = os.alpha().get(j, k);
                let rhs = o1.alpha().get(j, k) + o2.alpha().get(j, k);
                assert_relative_eq!(lhs.re, rhs.re, max_relative = 1e-12, epsilon = 1e-14);
                assert_relative_eq!(lhs.im, rhs.im, max_relative = 1e-12, epsilon = 1e-14);
            }
        }
    }
}
