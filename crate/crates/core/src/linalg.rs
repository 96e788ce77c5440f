//! Dense row-major linear algebra used by the policy-evaluation solvers.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> Dense<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.n..(i + 1) * self.n]
    }

    /// Solves `A x = b` by Gaussian elimination with partial pivoting.
    pub fn solve(mut self, mut b: Vec<T>) -> Result<Vec<T>> {
        let n = self.n;
        assert_eq!(b.len(), n, "rhs length");
        let scale = self
            .data
            .iter()
            .fold(T::zero(), |m, x| m.max(x.abs()))
            .max(T::one());
        let pivot_floor = T::tol(1e-13) * scale;

        for col in 0..n {
            let (piv, piv_abs) = (col..n)
                .map(|r| (r, self[(r, col)].abs()))
                .fold((col, T::neg_infinity()), |best, cur| {
                    if cur.1 > best.1 {
                        cur
                    } else {
                        best
                    }
                });
            if piv_abs <= pivot_floor {
                return Err(Error::SingularSystem);
            }
            if piv != col {
                for k in 0..n {
                    self.data.swap(piv * n + k, col * n + k);
                }
                b.swap(piv, col);
            }
            let d = self[(col, col)];
            for r in col + 1..n {
                let f = self[(r, col)] / d;
                if f == T::zero() {
                    continue;
                }
                for k in col..n {
                    let v = self[(col, k)];
                    self[(r, k)] = self[(r, k)] - f * v;
                }
                b[r] = b[r] - f * b[col];
            }
        }

        let mut x = vec![T::zero(); n];
        for r in (0..n).rev() {
            let mut acc = b[r];
            for k in r + 1..n {
                acc = acc - self[(r, k)] * x[k];
            }
            x[r] = acc / self[(r, r)];
        }
        Ok(x)
    }
}

impl<T> std::ops::Index<(usize, usize)> for Dense<T> {
    type Output = T;
    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.n + c]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Dense<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.n + c]
    }
}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}
