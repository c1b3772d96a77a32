//! The C² smoother `h`, the discrete `Δ_p` density, the L¹ dual functional
//! and the half-law check.

use serde::{Deserialize, Serialize};

use crate::assembly::{Assembler, Medium};
use crate::dispersion::DispersionReport;
use crate::error::{Error, Result};
use crate::field::NodalField;
use crate::mesh::{level_set_segments, TriMesh};
use crate::quad;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Flattens at `t = 1`.
    Upper,
    /// Flattens at `t = 0`: `h_low(t) = 1 − h_up(1 − t)`.
    Lower,
}

/// Reparameterization with `h(t) = t` on `[0, 1 − δ]`, `h(1) = 1` and
/// `h′(1) = h″(1) = 0` (upper orientation).
///
/// `h″` vanishes up to `t1 = 1 − δ`, equals `sin((t − t1)/ε)` on `[t1, t2]`
/// and `c sin(k (t − t2))` on `[t2, 1]`, where `t2 = 1 − a`,
/// `a = 2ε²π/(1 − 2ε)`, `k = π / a` and `c = −(1 + 2ε)(1 − 2ε)/(4ε²)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SmootherH<T> {
    pub epsilon: T,
    pub delta: T,
    pub orientation: Orientation,
    #[serde(skip)]
    t1: T,
    #[serde(skip)]
    t2: T,
    #[serde(skip)]
    k: T,
    #[serde(skip)]
    c: T,
}

pub fn make_smoother<T: Real>(epsilon: T, orientation: Orientation) -> Result<SmootherH<T>> {
    if !(epsilon > T::zero() && epsilon < T::lit(0.2)) {
        return Err(Error::EpsilonOutOfRange(epsilon.as_f64()));
    }
    let one = T::one();
    let two = T::lit(2.0);
    let pi = T::PI();
    let a = two * epsilon * epsilon * pi / (one - two * epsilon);
    let delta = a + epsilon * pi;
    if !(delta < one) {
        return Err(Error::EpsilonOutOfRange(epsilon.as_f64()));
    }
    Ok(SmootherH {
        epsilon,
        delta,
        orientation,
        t1: one - delta,
        t2: one - a,
        k: (one - two * epsilon) / (two * epsilon * epsilon),
        c: -(one + two * epsilon) * (one - two * epsilon) / (T::lit(4.0) * epsilon * epsilon),
    })
}

impl<T: Real> SmootherH<T> {
    /// Maximum of `h′`, attained at `t2` (upper orientation).
    pub fn max_slope(&self) -> T {
        T::one() + T::lit(2.0) * self.epsilon
    }

    /// `2(1 + 2ε)^{p−1} − 1`, the total variation of `h′^{p−1}`.
    pub fn variation_closed_form(&self, p: T) -> T {
        T::lit(2.0) * self.max_slope().powf(p - T::one()) - T::one()
    }

    fn up(&self, t: T) -> (T, T, T) {
        let one = T::one();
        let eps = self.epsilon;
        if t <= self.t1 {
            (t, one, T::zero())
        } else if t <= self.t2 {
            let x = (t - self.t1) / eps;
            (
                t + eps * (t - self.t1) - eps * eps * x.sin(),
                one + eps * (one - x.cos()),
                x.sin(),
            )
        } else {
            let s = t - self.t2;
            let slope = self.max_slope();
            let half = slope / T::lit(2.0);
            let h2 = self.t2 + eps * eps * T::PI();
            let ks = self.k * s;
            (
                h2 + slope * s + half * (-s + ks.sin() / self.k),
                slope + half * (ks.cos() - one),
                self.c * ks.sin(),
            )
        }
    }

    fn eval(&self, t: T) -> (T, T, T) {
        match self.orientation {
            Orientation::Upper => self.up(t),
            Orientation::Lower => {
                let (h, d, dd) = self.up(T::one() - t);
                (T::one() - h, d, -dd)
            }
        }
    }

    pub fn h(&self, t: T) -> T {
        self.eval(t).0
    }

    pub fn dh(&self, t: T) -> T {
        self.eval(t).1
    }

    pub fn d2h(&self, t: T) -> T {
        self.eval(t).2
    }

    /// `∫_0^1 |(h′^{p−1})′| dt` by adaptive quadrature on the pieces where
    /// `h″` keeps its sign.
    pub fn variation_quadrature(&self, p: T, tol: T) -> Result<T> {
        let pm1 = p - T::one();
        let pm2 = p - T::lit(2.0);
        let integrand = |t: T| {
            let (_, d, dd) = self.up(t);
            if dd == T::zero() {
                T::zero()
            } else {
                pm1 * d.powf(pm2) * dd.abs()
            }
        };
        let half = tol / T::lit(2.0);
        Ok(quad::integrate(integrand, self.t1, self.t2, half)?
            + quad::integrate(integrand, self.t2, T::one(), half)?)
    }
}

/// `f` clamped into `[0, 1]` with the largest clamp distance.
pub fn clamp_unit<T: Real>(f: &NodalField<T>) -> (NodalField<T>, T) {
    let w = f.map(|x| x.max(T::zero()).min(T::one()));
    let worst = f
        .iter()
        .zip(w.iter())
        .fold(T::zero(), |acc, (&x, &c)| acc.max((x - c).abs()));
    (w, worst)
}

/// `w_i = h(clamp(f_i))` and the clamp magnitude.
pub fn apply_smoother<T: Real>(h: &SmootherH<T>, f: &NodalField<T>) -> (NodalField<T>, T) {
    let (c, clamped) = clamp_unit(f);
    (c.map(|t| h.h(t)), clamped)
}

fn density<T: Real>(asm: &Assembler<T>, f: &[T]) -> Vec<T> {
    let medium = asm.medium();
    let m = asm.masses();
    let pm1 = medium.p - T::one();
    let action = asm.stiffness_action(f);
    (0..f.len())
        .map(|i| (-action[i] - m.b[i] * medium.psi[i] * f[i].spow(pm1)) / m.m[i])
        .collect()
}

/// `d_i = [−A_p(f)_i − b_i Ψ_i |f_i|^{p−2} f_i] / m_i`.
pub fn plap_density<T: Real>(
    mesh: &TriMesh<T>,
    medium: &Medium<T>,
    f: &NodalField<T>,
) -> Result<NodalField<T>> {
    f.check_len(mesh.n_vertices())?;
    let asm = Assembler::new(mesh, medium)?;
    Ok(NodalField(density(&asm, f.values())))
}

pub(crate) fn dual_of<T: Real>(asm: &Assembler<T>, f: &[T]) -> T {
    let medium = asm.medium();
    let m = asm.masses();
    let pm1 = medium.p - T::one();
    let d = density(asm, f);
    (0..f.len())
        .map(|i| {
            let fp = f[i].spow(pm1);
            let bulk = medium.phi[i] * fp;
            m.m[i] * ((d[i] - bulk).abs() + bulk) + m.b[i] * medium.psi[i] * fp
        })
        .sum()
}

/// `Σ m_i(|d_i − Φ_i f_i^{p−1}| + Φ_i f_i^{p−1}) + Σ b_i Ψ_i f_i^{p−1}`
/// evaluated on `f` clamped into `[0, 1]`.
pub fn dual_value<T: Real>(mesh: &TriMesh<T>, medium: &Medium<T>, f: &NodalField<T>) -> Result<T> {
    f.check_len(mesh.n_vertices())?;
    let asm = Assembler::new(mesh, medium)?;
    let (c, _) = clamp_unit(f);
    Ok(dual_of(&asm, c.values()))
}

#[derive(Clone, Debug, Serialize)]
pub struct DualReport<T> {
    pub epsilon: T,
    pub dual_value: T,
    #[serde(skip)]
    pub density: NodalField<T>,
    pub primal_value: T,
    pub ratio: T,
    pub clamped: T,
}

/// `a / (2 b)` with `0 / 0 = 1`.
pub fn half_ratio<T: Real>(dual: T, primal: T) -> T {
    if primal == T::zero() && dual == T::zero() {
        T::one()
    } else {
        dual / (T::lit(2.0) * primal)
    }
}

/// Dual functional of the smoothed minimizer `h_ε(f_*)` for each `ε`.
pub fn half_law<T: Real>(
    mesh: &TriMesh<T>,
    medium: &Medium<T>,
    primal: &DispersionReport<T>,
    epsilons: &[T],
) -> Result<Vec<DualReport<T>>> {
    let asm = Assembler::new(mesh, medium)?;
    epsilons
        .iter()
        .map(|&eps| {
            let h = make_smoother(eps, Orientation::Upper)?;
            let (w, clamped) = apply_smoother(&h, &primal.minimizer);
            let dual = dual_of(&asm, w.values());
            Ok(DualReport {
                epsilon: eps,
                dual_value: dual,
                density: NodalField(density(&asm, w.values())),
                primal_value: primal.value,
                ratio: half_ratio(dual, primal.value),
                clamped,
            })
        })
        .collect()
}

/// `∫_{f = t} |∇f|^{p−1}` over the piecewise-linear level set.
pub fn level_set_flux<T: Real>(mesh: &TriMesh<T>, f: &NodalField<T>, p: T, t: T) -> Result<T> {
    f.check_len(mesh.n_vertices())?;
    let medium = Medium::uniform(mesh, p, T::zero(), T::zero())?;
    let norms = Assembler::new(mesh, &medium)?.gradient_norms(f.values());
    let line = level_set_segments(mesh, f, t)?;
    let pm1 = p - T::one();
    Ok(line
        .segments
        .iter()
        .map(|s| norms[s.triangle].apow(pm1) * s.length)
        .sum())
}
