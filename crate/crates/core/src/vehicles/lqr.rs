//! Continuous-time LQR for small dense systems.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major square or rectangular matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<S> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data: data.iter().map(|&v| S::of(v)).collect() }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows);
        let mut m = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..o.cols {
                    m[(i, j)] += a * o[(k, j)];
                }
            }
        }
        m
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(&a, &b)| a + b).collect() }
    }

    pub fn scale(&self, s: S) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&a| a * s).collect() }
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().fold(S::zero(), |m, &v| m.max(v.abs()))
    }

    /// Solves `self * X = rhs` by Gaussian elimination with partial
    /// pivoting, returning `X` and `det(self)`.
    pub fn solve(&self, rhs: &Self) -> Result<(Self, S)> {
        let n = self.rows;
        assert_eq!(n, self.cols);
        assert_eq!(rhs.rows, n);
        let mut a = self.clone();
        let mut b = rhs.clone();
        let mut det = S::one();
        let scale = self.max_abs().max(S::min_positive_value());
        for c in 0..n {
            let p = (c..n)
                .max_by(|&i, &j| a[(i, c)].abs().partial_cmp(&a[(j, c)].abs()).unwrap())
                .unwrap();
            if a[(p, c)].abs() <= scale * S::epsilon() * S::of(16.0) {
                return Err(Error::Domain("singular matrix".into()));
            }
            if p != c {
                for j in 0..n {
                    a.data.swap(p * n + j, c * n + j);
                }
                for j in 0..b.cols {
                    b.data.swap(p * b.cols + j, c * b.cols + j);
                }
                det = -det;
            }
            let piv = a[(c, c)];
            det *= piv;
            for r in c + 1..n {
                let f = a[(r, c)] / piv;
                if f == S::zero() {
                    continue;
                }
                for j in c..n {
                    let v = a[(c, j)];
                    a[(r, j)] -= f * v;
                }
                for j in 0..b.cols {
                    let v = b[(c, j)];
                    b[(r, j)] -= f * v;
                }
            }
        }
        for c in (0..n).rev() {
            for j in 0..b.cols {
                let mut s = b[(c, j)];
                for k in c + 1..n {
                    s -= a[(c, k)] * b[(k, j)];
                }
                b[(c, j)] = s / a[(c, c)];
            }
        }
        Ok((b, det))
    }

    /// Characteristic polynomial coefficients `[1, c1, ..., cn]` of
    /// `det(sI - self)` (Faddeev-LeVerrier).
    pub fn char_poly(&self) -> Vec<S> {
        let n = self.rows;
        let mut coeffs = vec![S::one()];
        let mut m = Self::zeros(n, n);
        let id = Self::identity(n);
        for k in 1..=n {
            let am = self.mul(&m);
            let mk = am.add(&id.scale(*coeffs.last().unwrap()));
            let ak = self.mul(&mk);
            let tr = (0..n).map(|i| ak[(i, i)]).sum::<S>();
            coeffs.push(-tr / S::of_usize(k));
            m = mk;
        }
        coeffs
    }
}

impl<S> std::ops::Index<(usize, usize)> for Mat<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for Mat<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

/// Routh-Hurwitz test: all roots of the monic polynomial have strictly
/// negative real part.
pub fn is_hurwitz<S: Scalar>(coeffs: &[S]) -> bool {
    let n = coeffs.len() - 1;
    if coeffs.iter().any(|&c| !(c > S::zero())) {
        return false;
    }
    let mut prev: Vec<S> = coeffs.iter().step_by(2).cloned().collect();
    let mut cur: Vec<S> = coeffs.iter().skip(1).step_by(2).cloned().collect();
    for _ in 1..n {
        if !(cur[0] > S::zero()) {
            return false;
        }
        let mut next = Vec::with_capacity(prev.len());
        for i in 0..prev.len() - 1 {
            let c = cur.get(i + 1).copied().unwrap_or(S::zero());
            next.push((cur[0] * prev[i + 1] - prev[0] * c) / cur[0]);
        }
        if next.is_empty() {
            break;
        }
        prev = cur;
        cur = next;
    }
    cur.first().map_or(true, |&c| c > S::zero())
}

/// Solves the continuous algebraic Riccati equation
/// `A'P + PA - P B R^-1 B' P + Q = 0` via the matrix sign function of the
/// Hamiltonian, returning `(P, K)` with `K = R^-1 B' P`.
pub fn lqr<S: Scalar>(a: &Mat<S>, b: &Mat<S>, q: &Mat<S>, r: &Mat<S>) -> Result<(Mat<S>, Mat<S>)> {
    let n = a.rows;
    let m = b.cols;
    let (r_inv, _) = r.solve(&Mat::identity(m))?;
    let g = b.mul(&r_inv).mul(&b.transpose());
    let mut h = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] = a[(i, j)];
            h[(i, j + n)] = -g[(i, j)];
            h[(i + n, j)] = -q[(i, j)];
            h[(i + n, j + n)] = -a[(j, i)];
        }
    }
    let id = Mat::identity(2 * n);
    let mut z = h;
    let half = S::of(0.5);
    for _ in 0..100 {
        let (zi, det) = z.solve(&id)?;
        let c = det.abs().powf(-S::one() / S::of_usize(2 * n));
        let next = z.scale(c).add(&zi.scale(S::one() / c)).scale(half);
        let diff = next.add(&z.scale(-S::one())).max_abs();
        z = next;
        if diff <= S::epsilon() * S::of(1e3) * z.max_abs() {
            break;
        }
    }
    // [W12; W22 + I] P = -[W11 + I; W21], solved in the least-squares sense.
    let mut lhs = Mat::zeros(2 * n, n);
    let mut rhs = Mat::zeros(2 * n, n);
    for i in 0..n {
        for j in 0..n {
            lhs[(i, j)] = z[(i, j + n)];
            lhs[(i + n, j)] = z[(i + n, j + n)] + if i == j { S::one() } else { S::zero() };
            rhs[(i, j)] = -(z[(i, j)] + if i == j { S::one() } else { S::zero() });
            rhs[(i + n, j)] = -z[(i + n, j)];
        }
    }
    let lt = lhs.transpose();
    let (p, _) = lt.mul(&lhs).solve(&lt.mul(&rhs))?;
    let p = p.add(&p.transpose()).scale(half);
    let k = r_inv.mul(&b.transpose()).mul(&p);
    let closed = a.add(&b.mul(&k).scale(-S::one()));
    if !is_hurwitz(&closed.char_poly()) {
        return Err(Error::Domain("LQR gain does not stabilise the system".into()));
    }
    Ok((p, k))
}

/// Planar double integrator `[px, py, vx, vy]` with acceleration input.
pub fn double_integrator_matrices<S: Scalar>() -> (Mat<S>, Mat<S>) {
    let a = Mat::from_rows(4, 4, &[0., 0., 1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 0., 0., 0., 0.]);
    let b = Mat::from_rows(4, 2, &[0., 0., 0., 0., 1., 0., 0., 1.]);
    (a, b)
}
