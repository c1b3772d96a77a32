//! Adaptive Dormand–Prince 5(4) integration of small ODE systems.

use crate::error::{Error, Result};
use crate::scalar::Real;

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Difference between the 5th and embedded 4th order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y′ = f(t, y)` from `t0` to `t1` with mixed error control
/// `|err_i| ≤ tol (1 + |y_i|)`.
pub fn integrate<T: Real, const N: usize>(
    f: impl Fn(T, &[T; N]) -> [T; N],
    t0: T,
    y0: [T; N],
    t1: T,
    tol: T,
) -> Result<[T; N]> {
    let mut t = t0;
    let mut y = y0;
    let span = t1 - t0;
    if span == T::zero() {
        return Ok(y);
    }
    let mut h = span * T::lit(1e-3);
    let mut k = [[T::zero(); N]; 7];
    k[0] = f(t, &y);
    for _ in 0..1_000_000 {
        if (t1 - t) * span.signum() <= T::zero() {
            return Ok(y);
        }
        if ((t + h) - t1) * span.signum() > T::zero() {
            h = t1 - t;
        }
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = T::lit(A[s][j]);
                if a != T::zero() {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[s] = f(t + T::lit(C[s]) * h, &ys);
        }
        let mut y_new = y;
        for i in 0..N {
            for (s, ks) in k.iter().enumerate().take(6) {
                y_new[i] += h * T::lit(A[6][s]) * ks[i];
            }
        }
        let mut err = T::zero();
        for i in 0..N {
            let e: T = (0..7).map(|s| T::lit(E[s]) * k[s][i]).sum::<T>() * h;
            err = err.max(e.abs() / (tol * (T::one() + y[i].abs().max(y_new[i].abs()))));
        }
        if !err.is_finite() {
            return Err(Error::NumericalDegeneracy("ODE right-hand side is not finite".into()));
        }
        if err <= T::one() {
            t += h;
            y = y_new;
            k[0] = k[6];
        }
        let factor = if err == T::zero() {
            T::lit(5.0)
        } else {
            (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.2)).min(T::lit(5.0))
        };
        h *= factor;
    }
    Err(Error::NoConvergence {
        iterations: 1_000_000,
        residual: (t1 - t).abs().as_f64(),
    })
}
