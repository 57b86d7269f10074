use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Solves `(A + lambda I) X = B` for symmetric positive definite `A` by
/// Cholesky factorisation. Pivots at or below `64 n eps max(diag)` are
/// reported as rank deficiency.
pub(crate) fn solve_spd(
    a: ArrayView2<f64>,
    lambda: f64,
    b: ArrayView2<f64>,
) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(Error::DimensionMismatch {
            left: format!("{}x{}", a.nrows(), a.ncols()),
            right: format!("{}x{}", b.nrows(), b.ncols()),
        });
    }
    let max_diag = (0..n).map(|i| a[[i, i]] + lambda).fold(0.0, f64::max);
    let tol = 64.0 * n as f64 * f64::EPSILON * max_diag;

    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]] + lambda;
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !(d > tol) {
            return Err(Error::RankDeficient { pivot: j });
        }
        let d = d.sqrt();
        l[[j, j]] = d;
        for i in j + 1..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / d;
        }
    }

    let mut x = b.to_owned();
    for c in 0..x.ncols() {
        for i in 0..n {
            let mut s = x[[i, c]];
            for k in 0..i {
                s -= l[[i, k]] * x[[k, c]];
            }
            x[[i, c]] = s / l[[i, i]];
        }
        for i in (0..n).rev() {
            let mut s = x[[i, c]];
            for k in i + 1..n {
                s -= l[[k, i]] * x[[k, c]];
            }
            x[[i, c]] = s / l[[i, i]];
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn small_system() {
        let a = array![[4.0, 2.0], [2.0, 3.0]];
        let b = array![[2.0], [1.0]];
        let x = solve_spd(a.view(), 0.0, b.view()).unwrap();
        let r = a.dot(&x) - &b;
        assert!(r.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn singular_detected() {
        let a = array![[1.0, 1.0], [1.0, 1.0]];
        let b = array![[1.0], [1.0]];
        assert!(matches!(
            solve_spd(a.view(), 0.0, b.view()),
            Err(Error::RankDeficient { pivot: 1 })
        ));
        assert!(solve_spd(a.view(), 1e-3, b.view()).is_ok());
    }
}
