use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::TimeSeries;

const ESCAPE: f64 = 10.0;

/// One application of the Hénon map with a = 1.4, b = 0.3.
#[inline]
pub fn henon_step<T: Scalar>(x: T, y: T) -> (T, T) {
    (T::one() - T::lit(1.4) * x * x + y, T::lit(0.3) * x)
}

/// Iterates the map from `(x0, y0)`; sample 0 is the initial point.
pub fn henon_orbit<T: Scalar>(n_steps: usize, x0: T, y0: T) -> Result<TimeSeries<T>> {
    if n_steps == 0 {
        return Err(Error::invalid("n_steps must be >= 1"));
    }
    let mut out = Array2::zeros((2, n_steps));
    let (mut x, mut y) = (x0, y0);
    for n in 0..n_steps {
        if x.abs() > T::lit(ESCAPE) || !x.is_finite() {
            return Err(Error::OrbitEscape {
                step: n,
                value: x.to_f64_lossy(),
            });
        }
        out[[0, n]] = x;
        out[[1, n]] = y;
        (x, y) = henon_step(x, y);
    }
    TimeSeries::with_names(vec!["x".into(), "y".into()], out, 1.0)
}
