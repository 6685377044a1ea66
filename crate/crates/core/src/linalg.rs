//! Small dense linear algebra for pointwise tensor work.
//!
//! All matrices here are tiny (at most 8×8: spacetime dimension plus
//! codimension), stored row-major in fixed buffers. Partial pivoting is
//! enough at these sizes.

/// Row-major dense matrix view backed by a `Vec<f64>`.
#[derive(Clone, Debug)]
pub struct SmallMat {
    pub n: usize,
    pub a: Vec<f64>,
}

impl SmallMat {
    pub fn zeros(n: usize) -> Self {
        SmallMat { n, a: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    /// LU-factorize in place with partial pivoting; returns the pivot
    /// permutation and the sign of the permutation, or `None` if singular
    /// to working precision.
    fn lu(&mut self) -> Option<(Vec<usize>, f64)> {
        let n = self.n;
        let mut piv: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for col in 0..n {
            let mut best = col;
            let mut best_val = self.at(col, col).abs();
            for row in (col + 1)..n {
                let v = self.at(row, col).abs();
                if v > best_val {
                    best = row;
                    best_val = v;
                }
            }
            if best_val == 0.0 {
                return None;
            }
            if best != col {
                for k in 0..n {
                    self.a.swap(col * n + k, best * n + k);
                }
                piv.swap(col, best);
                sign = -sign;
            }
            let d = self.at(col, col);
            for row in (col + 1)..n {
                let f = self.at(row, col) / d;
                self.set(row, col, f);
                for k in (col + 1)..n {
                    let v = self.at(row, k) - f * self.at(col, k);
                    self.set(row, k, v);
                }
            }
        }
        Some((piv, sign))
    }

    pub fn det(&self) -> f64 {
        let mut lu = self.clone();
        match lu.lu() {
            None => 0.0,
            Some((_, sign)) => {
                let mut d = sign;
                for i in 0..lu.n {
                    d *= lu.at(i, i);
                }
                d
            }
        }
    }

    /// Solve `A x = b` for several right-hand sides stacked as columns of
    /// `rhs` (row-major `n × m`). Returns `None` if singular.
    pub fn solve_multi(&self, rhs: &[f64], m: usize) -> Option<Vec<f64>> {
        let n = self.n;
        debug_assert_eq!(rhs.len(), n * m);
        let mut lu = self.clone();
        let (piv, _) = lu.lu()?;
        let mut x = vec![0.0; n * m];
        // apply permutation
        for i in 0..n {
            for c in 0..m {
                x[i * m + c] = rhs[piv[i] * m + c];
            }
        }
        // forward substitution (unit lower)
        for i in 0..n {
            for j in 0..i {
                let f = lu.at(i, j);
                for c in 0..m {
                    x[i * m + c] -= f * x[j * m + c];
                }
            }
        }
        // back substitution
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                let f = lu.at(i, j);
                for c in 0..m {
                    x[i * m + c] -= f * x[j * m + c];
                }
            }
            let d = lu.at(i, i);
            for c in 0..m {
                x[i * m + c] /= d;
            }
        }
        Some(x)
    }

    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        self.solve_multi(b, 1)
    }

    pub fn inverse(&self) -> Option<SmallMat> {
        let n = self.n;
        let eye = SmallMat::identity(n);
        let inv = self.solve_multi(&eye.a, n)?;
        Some(SmallMat { n, a: inv })
    }
}

/// Inverse of a symmetric matrix given as a flat row-major slice, returning
/// the flat inverse. Panics on singular input (callers check determinants
/// where degeneracy is a real failure mode).
pub fn invert(n: usize, a: &[f64]) -> Option<Vec<f64>> {
    let m = SmallMat { n, a: a.to_vec() };
    m.inverse().map(|inv| inv.a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_and_det_small() {
        let m = SmallMat { n: 3, a: vec![2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0] };
        let det = m.det();
        // det = 2*(6-1) - 1*(2-0) = 8
        assert!((det - 8.0).abs() < 1e-12);
        let x = m.solve(&[1.0, 2.0, 3.0]).unwrap();
        // residual check
        for i in 0..3 {
            let mut r = 0.0;
            for j in 0..3 {
                r += m.at(i, j) * x[j];
            }
            let b = [1.0, 2.0, 3.0][i];
            assert!((r - b).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let m = SmallMat { n: 4, a: vec![
            4.0, 1.0, 0.2, 0.0,
            1.0, 3.0, 0.0, 0.1,
            0.2, 0.0, 2.0, 0.3,
            0.0, 0.1, 0.3, 5.0,
        ] };
        let inv = m.inverse().unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let mut s = 0.0;
                for k in 0..4 {
                    s += m.at(i, k) * inv.at(k, j);
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((s - expect).abs() < 1e-12, "product entry ({i},{j}) = {s}");
            }
        }
    }
}
