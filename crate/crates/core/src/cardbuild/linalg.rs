//! Small dense kernels used by the randomized SVD: Householder
//! orthonormalization, Givens row absorption and one-sided Jacobi SVD.

use crate::Scalar;

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Dense<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Dense {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[j * self.rows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[j * self.rows + i] = v;
    }

    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Replaces `a` (m × n, m ≥ n) by an m × n matrix with orthonormal columns
/// spanning at least the column space of `a`. Zero columns get arbitrary
/// orthonormal completions.
pub(crate) fn orthonormalize<T: Scalar>(a: &mut Dense<T>) {
    let (m, n) = (a.rows, a.cols);
    assert!(m >= n, "orthonormalize needs a tall matrix");
    let two = T::of(2.0);
    let mut reflectors: Vec<Option<Vec<T>>> = Vec::with_capacity(n);
    for k in 0..n {
        let x = &a.col(k)[k..];
        let norm = dot(x, x).sqrt();
        let v = if norm == T::zero() {
            None
        } else {
            let alpha = if x[0] >= T::zero() { -norm } else { norm };
            let mut v = x.to_vec();
            v[0] = v[0] - alpha;
            let vn = dot(&v, &v).sqrt();
            if vn == T::zero() {
                None
            } else {
                v.iter_mut().for_each(|e| *e = *e / vn);
                Some(v)
            }
        };
        if let Some(v) = &v {
            for j in k..n {
                let c = &mut a.col_mut(j)[k..];
                let d = dot(v, c) * two;
                c.iter_mut().zip(v).for_each(|(e, &vi)| *e = *e - d * vi);
            }
        }
        reflectors.push(v);
    }
    a.data.iter_mut().for_each(|e| *e = T::zero());
    for k in 0..n {
        a.set(k, k, T::one());
    }
    for (k, v) in reflectors.iter().enumerate().rev() {
        let Some(v) = v else { continue };
        for j in k..n {
            let c = &mut a.col_mut(j)[k..];
            let d = dot(v, c) * two;
            c.iter_mut().zip(v).for_each(|(e, &vi)| *e = *e - d * vi);
        }
    }
}

/// Folds one more row into the upper-triangular `r` (l × l) so that
/// `rᵀr` gains `rowᵀrow`. `row` is clobbered.
pub(crate) fn absorb_row<T: Scalar>(r: &mut Dense<T>, row: &mut [T]) {
    let l = r.cols;
    for k in 0..l {
        if row[k] == T::zero() {
            continue;
        }
        let rkk = r.get(k, k);
        let h = rkk.hypot(row[k]);
        let (c, s) = (rkk / h, row[k] / h);
        for col in k..l {
            let (x, y) = (r.get(k, col), row[col]);
            r.set(k, col, c * x + s * y);
            row[col] = c * y - s * x;
        }
        row[k] = T::zero();
    }
}

/// One-sided Jacobi SVD of a square or tall `a`: returns the singular values
/// (non-increasing) and the right singular vectors as columns.
pub(crate) fn jacobi_svd<T: Scalar>(mut a: Dense<T>) -> (Vec<T>, Dense<T>) {
    let n = a.cols;
    let mut v = Dense::zeros(n, n);
    for k in 0..n {
        v.set(k, k, T::one());
    }
    let tol = T::epsilon() * T::of(n.max(1) as f64);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(a.col(p), a.col(p));
                let beta = dot(a.col(q), a.col(q));
                let gamma = dot(a.col(p), a.col(q));
                if alpha == T::zero() || beta == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::of(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for m in [&mut a, &mut v] {
                    for i in 0..m.rows {
                        let (x, y) = (m.get(i, p), m.get(i, q));
                        m.set(i, p, c * x - s * y);
                        m.set(i, q, s * x + c * y);
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<T> = (0..n).map(|k| dot(a.col(k), a.col(k)).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap_or(std::cmp::Ordering::Equal).then(x.cmp(&y)));
    let mut sorted = Dense::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        sorted.col_mut(dst).copy_from_slice(v.col(src));
    }
    (order.iter().map(|&k| norms[k]).collect(), sorted)
}
