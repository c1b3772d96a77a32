//! One-dimensional radial dispersion and eigenvalue solvers on model spaces.

use serde::Serialize;

use super::{integrate_ode, ModelCase, ModelSpace};
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::newton::{Newton, Objective, Stage};
use crate::quad;
use crate::scalar::Real;

/// Elements of the 1-D discretizations.
const ELEMENTS: usize = 1000;
/// Samples kept in a closed-form profile.
const SAMPLES: usize = 65;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialMethod {
    QuadratureClosedForm,
    Fem1d,
}

#[derive(Clone, Debug, Serialize)]
pub struct RadialReport<T> {
    pub value: T,
    /// `(t, u(t))` on `[t0, t0 + δ]`.
    pub profile: Vec<[T; 2]>,
    pub conductor_volume: T,
    pub method: RadialMethod,
}

/// P1 energy on a weighted interval:
/// `Σ_e W_e |Δu/h|^p + Σ_i c_i |u_i|^p − Σ_i r_i u_i`.
struct Chain<T> {
    p: T,
    h: Vec<T>,
    w: Vec<T>,
    c: Vec<T>,
    rhs: Vec<T>,
}

impl<T: Real> Chain<T> {
    fn nodal_hessian(&self, x: T, eps: T) -> T {
        let two = T::lit(2.0);
        let p = self.p;
        if p == two {
            return two;
        }
        let base = if p < two { x.abs().max(eps) } else { x.abs() };
        p * (p - T::one()) * base.apow(p - two)
    }
}

impl<T: Real> Objective<T> for Chain<T> {
    fn value(&self, x: &[T], eps: T) -> T {
        let p = self.p;
        let mut e = T::zero();
        for k in 0..self.h.len() {
            let g = (x[k + 1] - x[k]) / self.h[k];
            e += if eps == T::zero() {
                self.w[k] * g.apow(p)
            } else {
                self.w[k] * ((eps * eps + g * g).powf(p / T::lit(2.0)) - eps.powf(p))
            };
        }
        for i in 0..x.len() {
            e += self.c[i] * x[i].apow(p) - self.rhs[i] * x[i];
        }
        e
    }

    fn gradient(&self, x: &[T], eps: T) -> Result<(Vec<T>, Vec<T>)> {
        let p = self.p;
        let n = x.len();
        let mut g = vec![T::zero(); n];
        let mut s = vec![T::zero(); n];
        for k in 0..self.h.len() {
            let d = (x[k + 1] - x[k]) / self.h[k];
            let r = eps * eps + d * d;
            let w = if p == T::lit(2.0) { T::one() } else { r.apow((p - T::lit(2.0)) / T::lit(2.0)) };
            let v = p * self.w[k] * w * d / self.h[k];
            g[k] -= v;
            g[k + 1] += v;
            s[k] += v.abs();
            s[k + 1] += v.abs();
        }
        for i in 0..n {
            let v = self.c[i] * p * x[i].spow(p - T::one());
            g[i] += v - self.rhs[i];
            s[i] += v.abs() + self.rhs[i].abs();
        }
        Ok((g, s))
    }

    fn hessian(&self, x: &[T], eps: T, h: &mut CsrMatrix<T>) -> Result<()> {
        let p = self.p;
        let two = T::lit(2.0);
        h.clear();
        for k in 0..self.h.len() {
            let d = (x[k + 1] - x[k]) / self.h[k];
            let r = eps * eps + d * d;
            let v = if p == two {
                two
            } else if r == T::zero() {
                T::zero()
            } else {
                p * r.powf((p - two) / two) * (T::one() + (p - two) * d * d / r)
            };
            let v = v * self.w[k] / (self.h[k] * self.h[k]);
            h.add(k, k, v);
            h.add(k + 1, k + 1, v);
            h.add(k, k + 1, -v);
            h.add(k + 1, k, -v);
        }
        for i in 0..x.len() {
            if self.c[i] != T::zero() {
                h.add(i, i, self.c[i] * self.nodal_hessian(x[i], eps));
            }
        }
        Ok(())
    }

    fn pattern(&self) -> CsrMatrix<T> {
        let n = self.h.len() + 1;
        let rows: Vec<Vec<usize>> = (0..n)
            .map(|i| (i.saturating_sub(1)..(i + 2).min(n)).collect())
            .collect();
        CsrMatrix::from_pattern(&rows)
    }
}

/// Uniform grid on `[a, b]` with element weights `factor ∫_e weight` and
/// lumped nodal masses.
fn grid<T: Real>(a: T, b: T, weight: impl Fn(T) -> T, factor: T) -> Result<(Vec<T>, Vec<T>, Vec<T>, Vec<T>)> {
    let h = (b - a) / T::lit(ELEMENTS as f64);
    let nodes: Vec<T> = (0..=ELEMENTS).map(|i| a + h * T::lit(i as f64)).collect();
    let mut w = Vec::with_capacity(ELEMENTS);
    for k in 0..ELEMENTS {
        let tol = T::lit(1e-14) * h;
        w.push(factor * quad::integrate(&weight, nodes[k], nodes[k + 1], tol)?);
    }
    let mut m = vec![T::zero(); ELEMENTS + 1];
    for k in 0..ELEMENTS {
        m[k] += w[k] / T::lit(2.0);
        m[k + 1] += w[k] / T::lit(2.0);
    }
    Ok((nodes, vec![h; ELEMENTS], w, m))
}

fn newton_stages<T: Real>(scale: T, tol: T) -> Vec<Stage<T>> {
    let mut stages: Vec<Stage<T>> = [1e-2, 1e-4, 1e-6]
        .iter()
        .map(|&e| Stage {
            grad_eps: T::lit(e) / scale,
            hess_eps: T::lit(e) / scale,
            tol: T::lit(1e-6).max(tol),
        })
        .collect();
    stages.push(Stage {
        grad_eps: T::zero(),
        hess_eps: T::lit(1e-8) / scale,
        tol,
    });
    stages
}

/// Radial heat dispersion of `K* = {t ≥ t0 + δ}` in `model` with constant
/// coefficients, the Robin boundary sitting at `t0`.
pub fn radial_dispersion<T: Real>(model: &ModelSpace<T>, delta: T, p: T, phi: T, psi: T) -> Result<RadialReport<T>> {
    let t0 = model.t0;
    let t1 = t0 + delta;
    if !(delta > T::zero()) || !(t1 < model.t_end) {
        return Err(Error::InvalidSpec(format!(
            "delta = {delta} must lie in (0, {})",
            model.t_end - t0
        )));
    }
    if !(p > T::one()) || !(phi >= T::zero()) || !(psi >= T::zero()) || !psi.is_finite() || !phi.is_finite() {
        return Err(Error::InvalidSpec("need p > 1 and finite phi, psi >= 0".into()));
    }
    if phi > T::zero() && !model.compact {
        return Err(Error::InfiniteDispersion);
    }
    let k = model.n as i32 - 1;
    let conductor_volume = model.volume(t1, model.t_end)?;
    let sigma0 = model.warp(t0).powi(k);
    let factor = model.measure_factor();

    if phi == T::zero() {
        // s^{n−1} (u′)^{p−1} = C on the collar, C = Ψ σ0 u(t0)^{p−1}.
        let q = T::lit(k as f64) / (p - T::one());
        let kernel = |t: T| model.warp(t).powf(-q);
        let tol = T::lit(1e-14) * delta;
        let total = quad::integrate(kernel, t0, t1, tol)?;
        let flux = (psi * sigma0).powf(T::one() / (p - T::one()));
        let a = T::one() / (T::one() + flux * total);
        let c = psi * sigma0 * a.powf(p - T::one());
        let mut profile = Vec::with_capacity(SAMPLES);
        let mut acc = T::zero();
        let mut prev = t0;
        for i in 0..SAMPLES {
            let t = t0 + delta * T::lit(i as f64 / (SAMPLES - 1) as f64);
            acc += quad::integrate(kernel, prev, t, tol)?;
            prev = t;
            profile.push([t, a * (T::one() + flux * acc)]);
        }
        return Ok(RadialReport {
            value: factor * c,
            profile,
            conductor_volume,
            method: RadialMethod::QuadratureClosedForm,
        });
    }

    let (nodes, h, w, m) = grid(t0, t1, |t| model.warp(t).powi(k), factor)?;
    let mut c: Vec<T> = m.iter().map(|&mi| phi * mi).collect();
    c[0] += psi * factor * sigma0;
    let n = nodes.len();
    let free: Vec<usize> = (0..n - 1).collect();
    let mut x = vec![T::one(); n];
    let mut chain = Chain {
        p: T::lit(2.0),
        h,
        w,
        c,
        rhs: vec![T::zero(); n],
    };
    let exact = Stage {
        grad_eps: T::zero(),
        hess_eps: T::zero(),
        tol: T::lit(1e-10),
    };
    Newton::new(&chain, free.clone(), 200).run(&mut x, &[exact])?;
    if p != T::lit(2.0) {
        chain.p = p;
        Newton::new(&chain, free, 200).run(&mut x, &newton_stages(delta.recip(), T::lit(1e-10)))?;
    }
    let energy = chain.value(&x, T::zero());
    Ok(RadialReport {
        value: energy + phi * conductor_volume,
        profile: nodes.into_iter().zip(x).map(|(t, u)| [t, u]).collect(),
        conductor_volume,
        method: RadialMethod::Fem1d,
    })
}

/// Radius of the geodesic ball and its radial warp `sn_κ`.
fn ball<T: Real>(model: &ModelSpace<T>) -> Result<T> {
    if model.case != ModelCase::Ball {
        return Err(Error::InvalidSpec("radial eigenvalues need a compact ball model".into()));
    }
    Ok(model.t_end - model.t0)
}

/// `(u(R), u′(R))` for the regular solution of
/// `u″ + (n−1)(sn′/sn)u′ + λu = 0`, `u(0) = 1`.
fn shoot<T: Real>(model: &ModelSpace<T>, radius: T, lambda: T) -> Result<[T; 2]> {
    let nf = T::lit(model.n as f64);
    let kappa = model.kappa;
    let r0 = radius * T::lit(1e-4);
    let y0 = [T::one() - lambda * r0 * r0 / (T::lit(2.0) * nf), -lambda * r0 / nf];
    let rhs = |r: T, y: &[T; 2]| {
        // sn′/sn in terms of r.
        let cot = if kappa > T::zero() {
            let a = kappa.sqrt();
            a / (a * r).tan()
        } else if kappa == T::zero() {
            r.recip()
        } else {
            let a = (-kappa).sqrt();
            a / (a * r).tanh()
        };
        [y[1], -(nf - T::one()) * cot * y[1] - lambda * y[0]]
    };
    integrate_ode(rhs, r0, y0, radius, T::lit(1e-12))
}

/// First Dirichlet eigenvalue of the ball by shooting.
fn dirichlet_shooting<T: Real>(model: &ModelSpace<T>, radius: T) -> Result<T> {
    let end = |lambda: T| shoot(model, radius, lambda).map(|y| y[0]).unwrap_or_else(|_| T::nan());
    let step = T::PI() / (T::lit(8.0) * radius);
    let mut lo = T::zero();
    for i in 1..=400 {
        let hi = step * T::lit(i as f64);
        if end(hi * hi) <= T::zero() {
            let mu = quad::brent(|m: T| end(m * m), lo, hi, T::lit(1e-14))?;
            return Ok(mu * mu);
        }
        lo = hi;
    }
    Err(Error::RootNotBracketed("first Dirichlet eigenvalue".into()))
}

/// First radial Robin eigenvalue of the ball model with coefficient `beta`
/// (`+∞` gives the Dirichlet eigenvalue). `p = 2` shoots from the centre;
/// other exponents minimize the 1-D quotient by inverse power iteration.
pub fn radial_eigen<T: Real>(model: &ModelSpace<T>, p: T, beta: T) -> Result<T> {
    let radius = ball(model)?;
    if !(p > T::one()) || beta.is_nan() {
        return Err(Error::InvalidSpec("need p > 1 and a numeric beta".into()));
    }
    if beta == T::zero() {
        return Ok(T::zero());
    }
    if p != T::lit(2.0) {
        return power_radial(model, radius, p, beta);
    }
    let dirichlet = dirichlet_shooting(model, radius)?;
    if beta == T::infinity() {
        return Ok(dirichlet);
    }
    let robin = |lambda: T| {
        shoot(model, radius, lambda)
            .map(|y| y[1] + beta * y[0])
            .unwrap_or_else(|_| T::nan())
    };
    let tol = T::lit(1e-14) * dirichlet;
    if beta > T::zero() {
        return quad::brent(robin, T::zero(), dirichlet, tol);
    }
    let mut lo = -T::one();
    for _ in 0..200 {
        if robin(lo) > T::zero() {
            return quad::brent(robin, lo, T::zero(), tol);
        }
        lo *= T::lit(2.0);
    }
    Err(Error::RootNotBracketed("negative Robin eigenvalue".into()))
}

fn power_radial<T: Real>(model: &ModelSpace<T>, radius: T, p: T, beta: T) -> Result<T> {
    let k = model.n as i32 - 1;
    let kappa = model.kappa;
    let sn = |r: T| {
        if kappa > T::zero() {
            let a = kappa.sqrt();
            (a * r).sin() / a
        } else if kappa == T::zero() {
            r
        } else {
            let a = (-kappa).sqrt();
            (a * r).sinh() / a
        }
    };
    let (_, h, w, m) = grid(T::zero(), radius, |r| sn(r).powi(k), T::one())?;
    let n = m.len();
    let dirichlet = beta == T::infinity();
    let boundary = sn(radius).powi(k);
    let shift = if beta > T::zero() {
        T::zero()
    } else {
        T::lit(2.0) * beta.abs() * boundary / m[n - 1] + T::one()
    };
    let mut c: Vec<T> = m.iter().map(|&mi| shift * mi).collect();
    if !dirichlet {
        c[n - 1] += beta * boundary;
    }
    let free: Vec<usize> = if dirichlet { (0..n - 1).collect() } else { (0..n).collect() };
    let rayleigh = |u: &[T], chain: &Chain<T>| -> T {
        let mut num = T::zero();
        for e in 0..chain.h.len() {
            num += chain.w[e] * ((u[e + 1] - u[e]) / chain.h[e]).apow(p);
        }
        if !dirichlet {
            num += beta * boundary * u[n - 1].apow(p);
        }
        let den: T = (0..n).map(|i| m[i] * u[i].apow(p)).sum();
        num / den
    };
    let normalize = |u: &mut [T]| {
        let s: T = (0..n).map(|i| m[i] * u[i].apow(p)).sum();
        let f = s.powf(-p.recip());
        u.iter_mut().for_each(|x| *x *= f);
    };
    let mut u: Vec<T> = (0..n)
        .map(|i| if dirichlet && i == n - 1 { T::zero() } else { T::one() })
        .collect();
    normalize(&mut u);
    let mut chain = Chain {
        p,
        h,
        w,
        c,
        rhs: vec![T::zero(); n],
    };
    let mut lambda = rayleigh(&u, &chain);
    let stages = newton_stages(radius.recip(), T::lit(1e-11));
    let mut last_change = T::infinity();
    for _ in 0..2000 {
        chain.rhs = (0..n).map(|i| p * m[i] * u[i].spow(p - T::one())).collect();
        let warm = (lambda + shift).max(T::epsilon()).powf(-(p - T::one()).recip());
        let mut v: Vec<T> = u.iter().map(|&x| x * warm).collect();
        Newton::new(&chain, free.clone(), 200).run(&mut v, &stages)?;
        normalize(&mut v);
        let next = rayleigh(&v, &chain);
        last_change = (next - lambda).abs();
        u = v;
        lambda = next;
        if last_change <= T::lit(1e-13) * lambda.abs().max(T::one()) {
            return Ok(lambda);
        }
    }
    Err(Error::NoConvergence {
        iterations: 2000,
        residual: last_change.as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::model_space;
    use super::*;
    use std::f64::consts::PI;

    /// `J_ν` for `sign = −1`, `I_ν` for `sign = 1`.
    fn series(nu: i32, x: f64, sign: f64) -> f64 {
        let mut term = (x / 2.0).powi(nu) / (1..=nu).map(|k| k as f64).product::<f64>();
        let mut sum = term;
        for k in 1..80 {
            term *= sign * (x * x / 4.0) / (k as f64 * (k + nu) as f64);
            sum += term;
        }
        sum
    }

    fn bessel(nu: i32, x: f64) -> f64 {
        series(nu, x, -1.0)
    }

    #[test]
    fn robin_annulus_closed_form() {
        let model = model_space(0.0f64, 0.5, 2, None).unwrap();
        let r = radial_dispersion(&model, 1.0, 2.0, 0.0, 1.0).unwrap();
        let exact = 4.0 * PI / (1.0 + 2.0 * 2f64.ln());
        assert!((r.value - exact).abs() < 1e-10 * exact);
        assert_eq!(r.method, RadialMethod::QuadratureClosedForm);
        assert!((r.conductor_volume - PI).abs() < 1e-10);
        // u = a(1 + 2 ln(2/(2−t))) on the collar.
        let a = 1.0 / (1.0 + 2.0 * 2f64.ln());
        for &[t, u] in &r.profile {
            assert!((u - a * (1.0 + 2.0 * (2.0 / (2.0 - t)).ln())).abs() < 1e-10);
        }
    }

    #[test]
    fn dirichlet_limit_and_vanishing() {
        let model = model_space(0.0f64, 0.5, 2, None).unwrap();
        let r = radial_dispersion(&model, 1.0, 2.0, 0.0, 1e6).unwrap();
        let cap = 2.0 * PI / 2f64.ln();
        assert!((r.value - cap).abs() < 1e-3 * cap);
        let zero = radial_dispersion(&model, 1.0, 2.5, 0.0, 0.0).unwrap();
        assert_eq!(zero.value, 0.0);
        assert!(zero.profile.iter().all(|s| s[1] == 1.0));
    }

    #[test]
    fn fem_matches_closed_form() {
        let model = model_space(0.0f64, 0.5, 2, None).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let closed = radial_dispersion(&model, 1.0, p, 0.0, 1.0).unwrap();
            let fem = radial_dispersion(&model, 1.0, p, 1e-300, 1.0).unwrap();
            assert_eq!(fem.method, RadialMethod::Fem1d);
            assert!((fem.value - closed.value).abs() < 1e-3 * closed.value, "p = {p}");
        }
    }

    #[test]
    fn bulk_term_flat_p2() {
        // u″ + u′/r = Φu on 1 < r < 2 with u(1) = 1, u′(2) + Ψu(2) = 0 is a
        // modified Bessel problem; compare against a fine shooting in r.
        let model = model_space(0.0f64, 0.5, 2, None).unwrap();
        let phi = 1.0;
        let fem = radial_dispersion(&model, 1.0, 2.0, phi, 1.0).unwrap();
        assert!(fem.value >= phi * PI);
        let sol = |a: f64, b: f64| {
            integrate_ode(
                |r: f64, y: &[f64; 2]| [y[1], -y[1] / r + phi * y[0]],
                2.0,
                [a, b],
                1.0,
                1e-13,
            )
            .unwrap()
        };
        // Integrate inward from the Robin end u(2) = 1, u′(2) = −1; the
        // minimizer energy is then −2π u′(1)/u(1).
        let y = sol(1.0, -1.0);
        let exact = -2.0 * PI * y[1] / y[0] + phi * PI;
        assert!((fem.value - exact).abs() < 1e-4 * exact, "{} vs {}", fem.value, exact);
    }

    #[test]
    fn noncompact_bulk_is_infinite() {
        let model = model_space(-1.0f64, 0.5, 2, Some(3.0)).unwrap();
        assert!(matches!(
            radial_dispersion(&model, 1.0, 2.0, 1.0, 1.0),
            Err(Error::InfiniteDispersion)
        ));
        assert!(radial_dispersion(&model, 1.0, 2.0, 0.0, 1.0).unwrap().value > 0.0);
    }

    #[test]
    fn disk_robin_eigenvalue() {
        let disk = model_space(0.0f64, 1.0, 2, None).unwrap();
        let lambda = radial_eigen(&disk, 2.0, 1.0).unwrap();
        let k = lambda.sqrt();
        assert!((k * bessel(1, k) - bessel(0, k)).abs() < 1e-10);
        assert!((lambda - 1.5771).abs() < 1e-3);
        assert_eq!(radial_eigen(&disk, 2.0, 0.0).unwrap(), 0.0);
        let d = radial_eigen(&disk, 2.0, f64::INFINITY).unwrap();
        assert!(bessel(0, d.sqrt()).abs() < 1e-10);
        let big = radial_eigen(&disk, 2.0, 1e4).unwrap();
        assert!(big < d && d - big < 1e-2);
        let mut prev = 0.0;
        for beta in [0.1, 1.0, 10.0] {
            let l = radial_eigen(&disk, 2.0, beta).unwrap();
            assert!(l > prev);
            prev = l;
        }
        let neg = radial_eigen(&disk, 2.0, -0.5).unwrap();
        assert!(neg < 0.0);
        let k = (-neg).sqrt();
        // k I₁(k) = 0.5 I₀(k).
        let i = |nu, x| series(nu, x, 1.0);
        assert!((k * i(1, k) - 0.5 * i(0, k)).abs() < 1e-9);
    }

    #[test]
    fn hemisphere_eigenvalue() {
        // First Dirichlet eigenvalue of the hemisphere is 2 (u = cos r).
        let hemi = model_space(1.0f64, 0.0, 2, None).unwrap();
        let d = radial_eigen(&hemi, 2.0, f64::INFINITY).unwrap();
        assert!((d - 2.0).abs() < 1e-9);
    }

    #[test]
    fn fem_eigen_paths() {
        let disk = model_space(0.0f64, 1.0, 2, None).unwrap();
        let shoot = radial_eigen(&disk, 2.0, 1.0).unwrap();
        let fem: f64 = power_radial(&disk, 1.0, 2.0, 1.0).unwrap();
        assert!((fem - shoot).abs() < 1e-4 * shoot);
        let l3 = radial_eigen(&disk, 3.0, 1.0).unwrap();
        let l15 = radial_eigen(&disk, 1.5, 1.0).unwrap();
        assert!(l3 > 0.0 && l15 > 0.0);
        let lo = radial_eigen(&disk, 3.0, 0.1).unwrap();
        let hi = radial_eigen(&disk, 3.0, 10.0).unwrap();
        assert!(lo < l3 && l3 < hi);
    }
}
