//! Rotationally symmetric model spaces `dt² + s²(t) g_{S^{n−1}}`, model radii
//! and the radial solvers built on them.

mod compare;
mod ode;
mod radial;

pub use compare::{comparison_report, ComparisonReport};
pub use ode::integrate as integrate_ode;
pub use radial::{radial_dispersion, radial_eigen, RadialMethod, RadialReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::scalar::Real;

/// `s_{κ,λ}(t)`: the solution of `s″ + κs = 0`, `s(0) = 1`, `s′(0) = −λ`.
pub fn warp<T: Real>(kappa: T, lambda: T, t: T) -> T {
    if kappa > T::zero() {
        let r = kappa.sqrt();
        (r * t).cos() - lambda / r * (r * t).sin()
    } else if kappa == T::zero() {
        T::one() - lambda * t
    } else {
        let r = (-kappa).sqrt();
        (r * t).cosh() - lambda / r * (r * t).sinh()
    }
}

/// `s′_{κ,λ}(t)`.
pub fn warp_derivative<T: Real>(kappa: T, lambda: T, t: T) -> T {
    if kappa > T::zero() {
        let r = kappa.sqrt();
        -r * (r * t).sin() - lambda * (r * t).cos()
    } else if kappa == T::zero() {
        -lambda
    } else {
        let r = (-kappa).sqrt();
        r * (r * t).sinh() - lambda * (r * t).cosh()
    }
}

/// `sn_κ(r)`, the radial warp of the space form of curvature `κ`.
fn sn<T: Real>(kappa: T, r: T) -> T {
    if kappa > T::zero() {
        let a = kappa.sqrt();
        (a * r).sin() / a
    } else if kappa == T::zero() {
        r
    } else {
        let a = (-kappa).sqrt();
        (a * r).sinh() / a
    }
}

/// Area of the unit sphere `S^{n−1}`: `2π^{n/2} / Γ(n/2)`.
pub fn sphere_area<T: Real>(n: u32) -> T {
    // Γ(n/2) by the half-integer recurrence.
    let mut gamma = if n % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if n % 2 == 0 { 1.0 } else { 0.5 };
    while x < n as f64 / 2.0 - 0.25 {
        gamma *= x;
        x += 1.0;
    }
    T::lit(2.0 * std::f64::consts::PI.powf(n as f64 / 2.0) / gamma)
}

/// `∫_0^π sin^m θ dθ`.
pub fn sine_power_integral<T: Real>(m: u32) -> T {
    let mut w = if m % 2 == 0 { std::f64::consts::PI } else { 2.0 };
    let mut k = if m % 2 == 0 { 2 } else { 3 };
    while k <= m {
        w *= (k as f64 - 1.0) / k as f64;
        k += 2;
    }
    T::lit(w)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelCase {
    /// Closed geodesic ball with boundary mean curvature `λ`.
    Ball,
    /// Complement of the ball `B_{κ,−λ}`.
    Exterior,
    /// `[0, ∞) × S^{n−1}` with warp `s_{κ,λ}` (`|λ| = √|κ|`).
    Horn,
    /// `[t_{κ,λ}, ∞) × S^{n−1}` with warp `s_{κ,0}` (`|λ| < √|κ|`, `κ < 0`).
    Hyperbolic,
}

/// Parameters of a model space as read from a configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams<T> {
    pub kappa: T,
    pub lambda: T,
    pub n: u32,
    #[serde(default)]
    pub cutoff: Option<T>,
}

/// Warped product on `[t0, t_end]` with volume element
/// `ω_{n−1} (A s(t))^{n−1} dt`, where `A` is the radius scale of the
/// underlying space form (`A = sn_κ(r_b)` for balls and exteriors, 1
/// otherwise). The boundary sits at `t0`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ModelSpace<T> {
    pub kappa: T,
    pub lambda: T,
    pub n: u32,
    pub case: ModelCase,
    pub t0: T,
    pub t_end: T,
    pub scale: T,
    pub compact: bool,
}

pub fn model_space<T: Real>(kappa: T, lambda: T, n: u32, cutoff: Option<T>) -> Result<ModelSpace<T>> {
    if n < 2 {
        return Err(Error::InvalidSpec("model dimension must be at least 2".into()));
    }
    if !kappa.is_finite() || !lambda.is_finite() {
        return Err(Error::InvalidSpec("kappa and lambda must be finite".into()));
    }
    let root = kappa.abs().sqrt();
    let gap = lambda.abs() - root;
    let near = gap.abs() <= T::lit(1e-9) * (T::one() + root);
    if kappa <= T::zero() && near && gap != T::zero() {
        return Err(Error::AmbiguousCase {
            kappa: kappa.as_f64(),
            lambda: lambda.as_f64(),
        });
    }
    let need_cutoff = |t0: T| -> Result<T> {
        match cutoff {
            Some(t) if t > t0 && t.is_finite() => Ok(t),
            Some(t) => Err(Error::InvalidSpec(format!("cutoff {t} must exceed {t0}"))),
            None => Err(Error::MissingCutoff),
        }
    };
    let space = if kappa > T::zero() || lambda > root {
        let r_b = if kappa > T::zero() {
            root.atan2(lambda) / root
        } else if kappa == T::zero() {
            T::one() / lambda
        } else {
            (root / lambda).atanh() / root
        };
        ModelSpace {
            kappa,
            lambda,
            n,
            case: ModelCase::Ball,
            t0: T::zero(),
            t_end: r_b,
            scale: sn(kappa, r_b),
            compact: true,
        }
    } else if lambda < -root {
        let r_b = if kappa == T::zero() {
            -T::one() / lambda
        } else {
            (-root / lambda).atanh() / root
        };
        ModelSpace {
            kappa,
            lambda,
            n,
            case: ModelCase::Exterior,
            t0: T::zero(),
            t_end: need_cutoff(T::zero())?,
            scale: sn(kappa, r_b),
            compact: false,
        }
    } else if gap == T::zero() {
        ModelSpace {
            kappa,
            lambda,
            n,
            case: ModelCase::Horn,
            t0: T::zero(),
            t_end: need_cutoff(T::zero())?,
            scale: T::one(),
            compact: false,
        }
    } else {
        let t0 = (-lambda / root).atanh() / root;
        ModelSpace {
            kappa,
            lambda,
            n,
            case: ModelCase::Hyperbolic,
            t0,
            t_end: need_cutoff(t0)?,
            scale: T::one(),
            compact: false,
        }
    };
    Ok(space)
}

impl<T: Real> ModelSpace<T> {
    pub fn from_params(p: &ModelParams<T>) -> Result<Self> {
        model_space(p.kappa, p.lambda, p.n, p.cutoff)
    }

    /// Profile `s(t)` on `[t0, t_end]`.
    pub fn warp(&self, t: T) -> T {
        match self.case {
            ModelCase::Hyperbolic => warp(self.kappa, T::zero(), t),
            _ => warp(self.kappa, self.lambda, t),
        }
    }

    pub fn warp_derivative(&self, t: T) -> T {
        match self.case {
            ModelCase::Hyperbolic => warp_derivative(self.kappa, T::zero(), t),
            _ => warp_derivative(self.kappa, self.lambda, t),
        }
    }

    /// `ω_{n−1} A^{n−1}`: converts `∫ s^{n−1} dt` into volume.
    pub fn measure_factor(&self) -> T {
        sphere_area::<T>(self.n) * self.scale.powi(self.n as i32 - 1)
    }

    /// Boundary measure `ω_{n−1} (A s(t0))^{n−1}`.
    pub fn boundary_measure(&self) -> T {
        self.measure_factor() * self.warp(self.t0).powi(self.n as i32 - 1)
    }

    /// `ω_{n−1} A^{n−1} ∫_a^b s^{n−1} dt`.
    pub fn volume(&self, a: T, b: T) -> Result<T> {
        let k = self.n as i32 - 1;
        let tol = T::lit(1e-13) * (b - a).abs().max(T::one());
        Ok(self.measure_factor() * quad::integrate(|t| self.warp(t).powi(k), a, b, tol)?)
    }
}

/// Model radius `R_κ(n, d)` for `κ ∈ {1, 0, −1}`.
pub fn model_radius<T: Real>(kappa: i32, n: u32, d: T) -> Result<T> {
    if !(d > T::zero()) || n < 2 {
        return Err(Error::InvalidSpec("model radius needs d > 0 and n >= 2".into()));
    }
    let w = sine_power_integral::<T>(n - 1);
    let nf = T::lit(n as f64);
    match kappa {
        1 => Ok(T::one()),
        0 => Ok(d / ((T::one() + nf * w).powf(T::one() / nf) - T::one())),
        -1 => Ok(T::one() / hyperbolic_root(n, d)?),
        _ => Err(Error::InvalidSpec(format!("kappa = {kappa} not in {{1, 0, -1}}"))),
    }
}

/// `c(d)`: the positive root of `u ∫_0^d (cosh t + u sinh t)^{n−1} dt = ∫_0^π sin^{n−1}`.
pub fn hyperbolic_root<T: Real>(n: u32, d: T) -> Result<T> {
    let w = sine_power_integral::<T>(n - 1);
    let k = n as i32 - 1;
    let g = |u: T| -> T {
        let tol = T::lit(1e-15) * (T::one() + u).powi(k) * d.cosh().powi(k) * d;
        let integral = quad::integrate(|t: T| (t.cosh() + u * t.sinh()).powi(k), T::zero(), d, tol)
            .unwrap_or_else(|_| T::nan());
        u * integral - w
    };
    let mut hi = T::one();
    let mut tries = 0;
    while g(hi) <= T::zero() {
        hi *= T::lit(2.0);
        tries += 1;
        if tries > 200 {
            return Err(Error::RootNotBracketed(format!("c(d) for d = {d}")));
        }
    }
    quad::brent(g, T::zero(), hi, T::lit(1e-15))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn warp_solves_its_ode() {
        for (kappa, lambda) in [(1.0, 0.3), (0.0, 0.5), (-1.0, 2.0), (-2.0, 0.4)] {
            assert_eq!(warp(kappa, lambda, 0.0), 1.0);
            assert_eq!(warp_derivative(kappa, lambda, 0.0), -lambda);
            for k in 0..20 {
                let t = 0.05 * k as f64;
                let h = 1e-4;
                let dd = (warp(kappa, lambda, t + h) - 2.0 * warp(kappa, lambda, t) + warp(kappa, lambda, t - h)) / (h * h);
                assert!((dd + kappa * warp(kappa, lambda, t)).abs() < 1e-6);
            }
        }
        assert_eq!(warp(0.0, 0.25, 2.0), 0.5);
        assert!((warp(1.0f64, 0.0, 0.7) - 0.7f64.cos()).abs() < 1e-15);
        let z = 0.5f64.atanh();
        assert!(warp(-1.0, 2.0, z).abs() < 1e-15);
    }

    #[test]
    fn four_cases() {
        let ball = model_space(0.0f64, 1.0, 2, None).unwrap();
        assert_eq!(ball.case, ModelCase::Ball);
        assert!((ball.t_end - 1.0).abs() < 1e-15);
        assert!((ball.boundary_measure() - 2.0 * PI).abs() < 1e-14);
        let hemi = model_space(1.0f64, 0.0, 2, None).unwrap();
        assert!((hemi.t_end - PI / 2.0).abs() < 1e-15);
        let big = model_space(0.0f64, 0.5, 2, None).unwrap();
        assert!((big.boundary_measure() - 4.0 * PI).abs() < 1e-13);
        let hyp = model_space(-1.0f64, 0.5, 2, Some(3.0)).unwrap();
        assert_eq!(hyp.case, ModelCase::Hyperbolic);
        assert!((hyp.t0 - (-0.5f64).atanh()).abs() < 1e-15);
        let ratio = hyp.warp_derivative(hyp.t0) / hyp.warp(hyp.t0);
        assert!((ratio + 0.5).abs() < 1e-12);
        let horn = model_space(-1.0f64, 1.0, 2, Some(2.0)).unwrap();
        assert_eq!(horn.case, ModelCase::Horn);
        assert!((horn.warp(1.3) - (-1.3f64).exp()).abs() < 1e-14);
        assert!(matches!(model_space(-1.0f64, 1.0, 2, None), Err(Error::MissingCutoff)));
        assert!(matches!(
            model_space(-1.0f64, 1.0 + 1e-12, 2, Some(1.0)),
            Err(Error::AmbiguousCase { .. })
        ));
        let ext = model_space(0.0f64, -1.0, 2, Some(1.0)).unwrap();
        assert_eq!(ext.case, ModelCase::Exterior);
        assert!((ext.warp(1.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn radii() {
        assert_eq!(model_radius(1, 2, 0.3).unwrap(), 1.0);
        let r0: f64 = model_radius(0, 2, 1.0).unwrap();
        assert!((r0 - 1.0 / (5f64.sqrt() - 1.0)).abs() < 1e-12);
        let d = 1.0f64;
        let closed = (-d.sinh() + (d.sinh().powi(2) + 8.0 * (d.cosh() - 1.0)).sqrt()) / (2.0 * (d.cosh() - 1.0));
        let c = hyperbolic_root(2, d).unwrap();
        assert!((c - closed).abs() < 1e-12);
        assert!((model_radius(-1, 2, d).unwrap() - 1.0 / closed).abs() < 1e-11);
        assert!((sphere_area::<f64>(3) - 4.0 * PI).abs() < 1e-13);
        assert!((sine_power_integral::<f64>(2) - PI / 2.0).abs() < 1e-15);
    }
}
