//! Minimal dense complex matrix storage shared by the sampling pipeline.
//!
//! Row-major `rows x cols`; for amplitude blocks rows are modes and columns
//! are trajectories, so per-mode rows are contiguous and the network
//! transform reduces to scaled row accumulations (axpy) over the batch.

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    data: Vec<Complex64>,
    rows: usize,
    cols: usize,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            data: vec![Complex64::ZERO; rows * cols],
            rows,
            cols,
        }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { data, rows, cols }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [Complex64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            data: self.data.iter().map(|&z| f(z)).collect(),
            rows: self.rows,
            cols: self.cols,
        }
    }

    pub fn transposed(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    /// `self * block`, accumulating rows of the output as weighted sums of
    /// input rows. `conjugate` multiplies by the elementwise conjugate of
    /// `self` instead (used for the conjugate amplitude array).
    pub fn mul_block(&self, block: &ComplexMatrix, conjugate: bool) -> ComplexMatrix {
        assert_eq!(self.cols, block.rows, "matrix/block shape mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, block.cols);
        for m in 0..self.rows {
            let out_row = out.row_mut(m);
            for n in 0..self.cols {
                let mut w = self.get(m, n);
                if conjugate {
                    w = w.conj();
                }
                if w == Complex64::ZERO {
                    continue;
                }
                let in_row = block.row(n);
                for (o, &x) in out_row.iter_mut().zip(in_row) {
                    *o += w * x;
                }
            }
        }
        out
    }

    /// `self * v` for a column vector.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(&a, &x)| a * x).sum())
            .collect()
    }

    /// `self^H * v` (conjugate transpose times vector).
    pub fn mul_vec_adjoint(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.rows, v.len());
        let mut out = vec![Complex64::ZERO; self.cols];
        for (r, &vr) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(r)) {
                *o += a.conj() * vr;
            }
        }
        out
    }
}

/// Largest singular value by power iteration on `A^H A`. Top singular values
/// of the matrices handled here are well separated from zero, and degenerate
/// tops (unitaries) converge immediately.
pub fn max_singular_value(a: &ComplexMatrix) -> f64 {
    let n = a.cols();
    if n == 0 || a.rows() == 0 {
        return 0.0;
    }
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 1e-3 * i as f64, 0.0))
        .collect();
    let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nv = norm(&v);
    v.iter_mut().for_each(|z| *z /= nv);
    let mut last = 0.0f64;
    for _ in 0..300 {
        let w = a.mul_vec(&v);
        let lambda = norm(&w);
        if lambda == 0.0 {
            return 0.0;
        }
        let u = a.mul_vec_adjoint(&w);
        let nu = norm(&u);
        v = u.into_iter().map(|z| z / nu).collect();
        if (lambda - last).abs() <= 1e-13 * lambda.max(1.0) {
            return lambda;
        }
        last = lambda;
    }
    last
}

/// Compensated (Kahan) accumulator over a complex vector. The grouped-count
/// accumulators sum up to 1e7 products per bin, where naive summation loses
/// digits that the repeat-scatter error estimate then under-reports.
#[derive(Debug, Clone)]
pub struct KahanVec {
    sum: Vec<Complex64>,
    comp: Vec<Complex64>,
}

impl KahanVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            sum: vec![Complex64::ZERO; len],
            comp: vec![Complex64::ZERO; len],
        }
    }

    pub fn len(&self) -> usize {
        self.sum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sum.is_empty()
    }

    #[inline]
    pub fn add(&mut self, idx: usize, v: Complex64) {
        let y = v - self.comp[idx];
        let t = self.sum[idx] + y;
        self.comp[idx] = (t - self.sum[idx]) - y;
        self.sum[idx] = t;
    }

    pub fn add_slice(&mut self, vs: &[Complex64]) {
        assert_eq!(vs.len(), self.sum.len());
        for (i, &v) in vs.iter().enumerate() {
            self.add(i, v);
        }
    }

    pub fn totals(&self) -> &[Complex64] {
        &self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;

    #[test]
    fn mul_block_matches_hand_product() {
        // [[1, i], [0, 2]] * [[1, 2], [3, 4]]
        let a = ComplexMatrix::from_rows(
            2,
            2,
            vec![
                C::new(1.0, 0.0),
                C::new(0.0, 1.0),
                C::ZERO,
                C::new(2.0, 0.0),
            ],
        );
        let b = ComplexMatrix::from_rows(
            2,
            2,
            vec![
                C::new(1.0, 0.0),
                C::new(2.0, 0.0),
                C::new(3.0, 0.0),
                C::new(4.0, 0.0),
            ],
        );
        let p = a.mul_block(&b, false);
        assert_eq!(p.get(0, 0), C::new(1.0, 3.0));
        assert_eq!(p.get(0, 1), C::new(2.0, 4.0));
        assert_eq!(p.get(1, 0), C::new(6.0, 0.0));
        assert_eq!(p.get(1, 1), C::new(8.0, 0.0));
    }

    #[test]
    fn kahan_recovers_small_terms() {
        let mut acc = KahanVec::zeros(1);
        acc.add(0, C::new(1e16, 0.0));
        for _ in 0..1000 {
            acc.add(0, C::new(1.0, 0.0));
        }
        acc.add(0, C::new(-1e16, 0.0));
        assert_eq!(acc.totals()[0].re, 1000.0);
    }
}
