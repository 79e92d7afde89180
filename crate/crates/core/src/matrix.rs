//! Small dense row-major matrices and the handful of factorizations the
//! spectral code needs (one-sided Jacobi SVD, symmetric Jacobi eigenvalues,
//! Gaussian elimination).

use std::ops::{Index, IndexMut};

use num_traits::Float;

use crate::scalar::{Real, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy> Matrix<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from row vectors; panics on ragged input.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self { rows: r, cols: c, data: rows.iter().flatten().copied().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, T::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn row_sum(&self, i: usize) -> T {
        self.row(i).iter().fold(T::zero(), |acc, &v| acc + v)
    }

    /// Row vector times matrix: `xᵀ A`.
    pub fn left_mul(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == T::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += xi * a;
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out[(i, j)] + a * other[(k, j)];
                    out[(i, j)] = v;
                }
            }
        }
        out
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Singular values in descending order via one-sided Jacobi rotations.
///
/// Returns `None` if the sweeps fail to converge.
pub fn singular_values<T: Real>(a: &Matrix<T>) -> Option<Vec<T>> {
    // Work on columns of a copy; rotate column pairs until mutually orthogonal.
    let (m, n) = (a.rows(), a.cols());
    let mut cols: Vec<Vec<T>> = (0..n).map(|j| (0..m).map(|i| a[(i, j)]).collect()).collect();
    let eps = T::epsilon();
    let tol = eps * T::from_usize_exact(m.max(1));
    // Columns below this squared norm are numerically zero; rotating them
    // only churns rounding noise and can stall the sweep.
    let mut fro = T::zero();
    for c in &cols {
        for &x in c {
            fro += x * x;
        }
    }
    let negligible = eps * eps * fro;
    let max_sweeps = 80;
    let mut converged = false;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    let mut alpha = T::zero();
                    let mut beta = T::zero();
                    let mut gamma = T::zero();
                    for i in 0..m {
                        alpha += cp[i] * cp[i];
                        beta += cq[i] * cq[i];
                        gamma += cp[i] * cq[i];
                    }
                    (alpha, beta, gamma)
                };
                if alpha <= negligible || beta <= negligible || Float::abs(gamma) <= tol * Float::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let two = T::one() + T::one();
                let zeta = (beta - alpha) / (two * gamma);
                let t = Float::signum(zeta) / (Float::abs(zeta) + Float::sqrt(T::one() + zeta * zeta));
                let c = T::one() / Float::sqrt(T::one() + t * t);
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                let (cp, cq) = (&mut left[p], &mut right[0]);
                for i in 0..m {
                    let x = cp[i];
                    let y = cq[i];
                    cp[i] = c * x - s * y;
                    cq[i] = s * x + c * y;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return None;
    }
    let mut sv: Vec<T> = cols.iter().map(|c| Float::sqrt(c.iter().map(|&v| v * v).sum::<T>())).collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    Some(sv)
}

/// Eigenvalues of a symmetric matrix (descending) by cyclic Jacobi.
pub fn symmetric_eigenvalues<T: Real>(a: &Matrix<T>) -> Option<Vec<T>> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut w = a.clone();
    let eps = T::epsilon();
    for _ in 0..100 {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += w[(i, j)] * w[(i, j)];
                } else {
                    diag += w[(i, i)] * w[(i, i)];
                }
            }
        }
        if off <= eps * eps * (diag + off) || off == T::zero() {
            let mut ev: Vec<T> = (0..n).map(|i| w[(i, i)]).collect();
            ev.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
            return Some(ev);
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let two = T::one() + T::one();
                let theta = (w[(q, q)] - w[(p, p)]) / (two * apq);
                let t = Float::signum(theta) / (Float::abs(theta) + Float::sqrt(theta * theta + T::one()));
                let c = T::one() / Float::sqrt(t * t + T::one());
                let s = t * c;
                for k in 0..n {
                    let akp = w[(k, p)];
                    let akq = w[(k, q)];
                    w[(k, p)] = c * akp - s * akq;
                    w[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = w[(p, k)];
                    let aqk = w[(q, k)];
                    w[(p, k)] = c * apk - s * aqk;
                    w[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    None
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve<T: Real>(a: &Matrix<T>, b: &[T]) -> Option<Vec<T>> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    assert_eq!(n, b.len());
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| {
            Float::abs(m[(x, col)]).partial_cmp(&Float::abs(m[(y, col)])).unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if Float::abs(m[(pivot, col)]) <= T::epsilon() * T::of(1e-6) {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                let tmp = m[(col, j)];
                m[(col, j)] = m[(pivot, j)];
                m[(pivot, j)] = tmp;
            }
            rhs.swap(col, pivot);
        }
        for r in (col + 1)..n {
            let factor = m[(r, col)] / m[(col, col)];
            if factor == T::zero() {
                continue;
            }
            for j in col..n {
                let v = m[(r, j)] - factor * m[(col, j)];
                m[(r, j)] = v;
            }
            let v = rhs[r] - factor * rhs[col];
            rhs[r] = v;
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        for j in (i + 1)..n {
            acc -= m[(i, j)] * x[j];
        }
        x[i] = acc / m[(i, i)];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_values_of_diagonal() {
        let a = Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, -4.0]]);
        let sv = singular_values(&a).unwrap();
        assert!((sv[0] - 4.0).abs() < 1e-14 && (sv[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn singular_values_of_rank_one() {
        // u vᵀ with |u| = sqrt(2), |v| = sqrt(5)
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]]);
        let sv = singular_values(&a).unwrap();
        assert!((sv[0] - 10.0_f64.sqrt()).abs() < 1e-13);
        assert!(sv[1].abs() < 1e-13);
    }

    #[test]
    fn symmetric_eigenvalues_two_by_two() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let ev = symmetric_eigenvalues(&a).unwrap();
        assert!((ev[0] - 3.0).abs() < 1e-13 && (ev[1] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn solve_small_system() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let x = solve(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn left_mul_exact_on_rationals() {
        use num_rational::Ratio;
        let a: Matrix<Ratio<i64>> = Matrix::from_fn(2, 2, |i, j| Ratio::new((i + j) as i64, 3));
        let x = vec![Ratio::new(1, 2), Ratio::new(1, 2)];
        assert_eq!(a.left_mul(&x), vec![Ratio::new(1, 6), Ratio::new(1, 2)]);
    }
}
