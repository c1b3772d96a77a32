//! First Robin and Dirichlet p-Laplace eigenpairs and the recycling laws.

use serde::{Deserialize, Serialize};

use crate::assembly::{Assembler, Medium};
use crate::dispersion::SolveOptions;
use crate::dual::{make_smoother, Orientation};
use crate::error::{Error, Result};
use crate::field::NodalField;
use crate::linalg::{CsrMatrix, EnvelopeCholesky};
use crate::mesh::TriMesh;
use crate::newton::{relative_residual, Newton, Objective, Stage};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition<T> {
    Robin(T),
    Dirichlet,
}

impl<T: Real> BoundaryCondition<T> {
    fn beta(&self) -> T {
        match self {
            BoundaryCondition::Robin(b) => *b,
            BoundaryCondition::Dirichlet => T::zero(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    deny_unknown_fields,
    bound(deserialize = "T: Real + Deserialize<'de>")
)]
pub struct EigenOptions<T> {
    /// Target relative residual of the eigen equation.
    pub tol: T,
    /// Cap on inverse-power steps per exponent.
    pub max_iters: usize,
    /// Step `p` away from 2.
    pub continuation: bool,
    /// Inner Newton settings for `p != 2`.
    pub newton: SolveOptions<T>,
}

impl<T: Real> Default for EigenOptions<T> {
    fn default() -> Self {
        EigenOptions {
            tol: T::lit(1e-10),
            max_iters: 2000,
            continuation: true,
            newton: SolveOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RayleighParts<T> {
    pub dirichlet: T,
    pub boundary: T,
    pub mass: T,
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenReport<T> {
    pub p: T,
    pub boundary: BoundaryCondition<T>,
    pub lambda: T,
    #[serde(skip)]
    pub eigenfunction: NodalField<T>,
    pub rayleigh_parts: RayleighParts<T>,
    pub residual: T,
    pub iterations: usize,
    /// Set for `β < 0`, which is accepted but outside the coercive range
    /// covered by the recycling law.
    pub negative_beta: bool,
}

/// Medium with a possibly negative boundary coefficient; bypasses the
/// sign validation of [`Medium::new`].
fn raw_medium<T: Real>(n: usize, p: T, sigma: T, beta: T) -> Medium<T> {
    Medium {
        p,
        phi: vec![sigma; n],
        psi: vec![beta; n],
    }
}

fn parts<T: Real>(mesh: &TriMesh<T>, p: T, beta: T, u: &[T]) -> RayleighParts<T> {
    let medium = raw_medium(mesh.n_vertices(), p, T::one(), beta);
    let e = Assembler::new(mesh, &medium).expect("consistent sizes").energy(u);
    RayleighParts {
        dirichlet: e.dirichlet,
        boundary: e.boundary,
        mass: e.bulk,
    }
}

/// `(Σ|∇u|^p·area + βΣb|u|^p) / Σm|u|^p`.
pub fn rayleigh_quotient<T: Real>(mesh: &TriMesh<T>, p: T, beta: T, u: &NodalField<T>) -> Result<T> {
    u.check_len(mesh.n_vertices())?;
    let r = parts(mesh, p, beta, u.values());
    if r.mass == T::zero() {
        return Err(Error::ZeroDenominator);
    }
    Ok((r.dirichlet + r.boundary) / r.mass)
}

/// Relative residual of `A_p u + βBφ_p(u) − λMφ_p(u)` on `free`.
fn eigen_residual<T: Real>(asm: &Assembler<T>, u: &[T], lambda: T, free: &[usize]) -> Result<T> {
    let (mut g, mut scale) = asm.gradient_parts(u, T::zero())?;
    let p = asm.medium().p;
    let m = &asm.masses().m;
    for i in 0..u.len() {
        let t = p * lambda * m[i] * u[i].spow(p - T::one());
        g[i] -= t;
        scale[i] += t.abs();
    }
    Ok(relative_residual(&g, &scale, free))
}

/// Scales `u` to `Σ m|u|^p = 1` with positive sum.
fn normalize<T: Real>(u: &mut [T], m: &[T], p: T) {
    let norm: T = u.iter().zip(m).map(|(&x, &w)| w * x.apow(p)).sum::<T>().powf(T::one() / p);
    let sign = if u.iter().copied().sum::<T>() < T::zero() { -T::one() } else { T::one() };
    for x in u.iter_mut() {
        *x = *x * sign / norm;
    }
}

/// Energy `E(v) − Σ r_i v_i` for one inverse-power step.
struct Shifted<'a, T: Real> {
    asm: Assembler<'a, T>,
    rhs: Vec<T>,
}

impl<'a, T: Real> Objective<T> for Shifted<'a, T> {
    fn value(&self, x: &[T], eps: T) -> T {
        self.asm.regularized_energy(x, eps) - x.iter().zip(&self.rhs).map(|(&a, &b)| a * b).sum::<T>()
    }

    fn gradient(&self, x: &[T], eps: T) -> Result<(Vec<T>, Vec<T>)> {
        let (mut g, mut s) = self.asm.gradient_parts(x, eps)?;
        for i in 0..x.len() {
            g[i] -= self.rhs[i];
            s[i] += self.rhs[i].abs();
        }
        Ok((g, s))
    }

    fn hessian(&self, x: &[T], eps: T, h: &mut CsrMatrix<T>) -> Result<()> {
        self.asm.hessian_into(x, eps, h)
    }

    fn pattern(&self) -> CsrMatrix<T> {
        self.asm.pattern()
    }
}

struct Setup<T> {
    free: Vec<usize>,
    beta: T,
    sigma: T,
}

fn setup<T: Real>(mesh: &TriMesh<T>, bc: BoundaryCondition<T>, masses: &crate::assembly::MassData<T>) -> Result<Setup<T>> {
    let n = mesh.n_vertices();
    if mesh.boundary_edges().is_empty() {
        return Err(Error::InvalidMesh("eigenproblems need a nonempty boundary".into()));
    }
    let beta = bc.beta();
    let free: Vec<usize> = match bc {
        BoundaryCondition::Robin(_) => (0..n).collect(),
        BoundaryCondition::Dirichlet => (0..n).filter(|&i| !mesh.is_boundary_vertex(i)).collect(),
    };
    if free.is_empty() {
        return Err(Error::InvalidMesh("no interior vertices".into()));
    }
    // With σ the shifted operator is coercive: the quotient is bounded
    // below by β·max(b/m) when β < 0.
    let sigma = match bc {
        BoundaryCondition::Dirichlet => T::zero(),
        BoundaryCondition::Robin(b) if b > T::zero() => T::zero(),
        BoundaryCondition::Robin(b) if b == T::zero() => T::one(),
        BoundaryCondition::Robin(b) => {
            let ratio = (0..n).map(|i| masses.b[i] / masses.m[i]).fold(T::zero(), T::max);
            T::lit(2.0) * b.abs() * ratio + T::one()
        }
    };
    Ok(Setup { free, beta, sigma })
}

fn quadratic_eigen<T: Real>(
    mesh: &TriMesh<T>,
    s: &Setup<T>,
    opts: &EigenOptions<T>,
) -> Result<(Vec<T>, T, usize, T)> {
    let n = mesh.n_vertices();
    let two = T::lit(2.0);
    let shifted = raw_medium(n, two, s.sigma, s.beta);
    let asm = Assembler::new(mesh, &shifted)?;
    let plain = raw_medium(n, two, T::zero(), s.beta);
    let plain_asm = Assembler::new(mesh, &plain)?;
    let m = asm.masses().m.clone();
    let h = asm.hessian(&vec![T::zero(); n], T::zero())?.restrict(&s.free);
    let chol = EnvelopeCholesky::factor(&h)?;
    let mut u = vec![T::zero(); n];
    for &i in &s.free {
        u[i] = T::one();
    }
    normalize(&mut u, &m, two);
    let mut residual = T::infinity();
    let mut lambda = T::zero();
    for it in 0..opts.max_iters {
        lambda = rayleigh_quotient(mesh, two, s.beta, &NodalField(u.clone()))?;
        residual = eigen_residual(&plain_asm, &u, lambda, &s.free)?;
        if residual <= opts.tol {
            return Ok((u, lambda, it, residual));
        }
        let rhs: Vec<T> = s.free.iter().map(|&i| two * m[i] * u[i]).collect();
        let v = chol.solve(&rhs);
        for (k, &i) in s.free.iter().enumerate() {
            u[i] = v[k];
        }
        normalize(&mut u, &m, two);
    }
    Err(no_convergence(s, opts.max_iters, residual, lambda))
}

fn no_convergence<T: Real>(s: &Setup<T>, iterations: usize, residual: T, _lambda: T) -> Error {
    if s.beta < T::zero() {
        Error::IndefiniteQuotient { beta: s.beta.as_f64() }
    } else {
        Error::NoConvergence {
            iterations,
            residual: residual.as_f64(),
        }
    }
}

/// Nonlinear inverse power iteration at exponent `p` from `u`:
/// `A_p v + βBφ_p(v) + σMφ_p(v) = Mφ_p(u)`, then normalize.
fn power_eigen<T: Real>(
    mesh: &TriMesh<T>,
    s: &Setup<T>,
    p: T,
    mut u: Vec<T>,
    tol: T,
    opts: &EigenOptions<T>,
) -> Result<(Vec<T>, T, usize, T)> {
    let n = mesh.n_vertices();
    let pm1 = p - T::one();
    let shifted = raw_medium(n, p, s.sigma, s.beta);
    let plain = raw_medium(n, p, T::zero(), s.beta);
    let plain_asm = Assembler::new(mesh, &plain)?;
    let m = plain_asm.masses().m.clone();
    let inv_diam = T::one() / mesh.diameter();
    let inner_tol = (tol * T::lit(1e-2)).max(T::lit(1e-13));
    normalize(&mut u, &m, p);
    let mut residual = T::infinity();
    let mut lambda = T::zero();
    for it in 0..opts.max_iters {
        lambda = rayleigh_quotient(mesh, p, s.beta, &NodalField(u.clone()))?;
        residual = eigen_residual(&plain_asm, &u, lambda, &s.free)?;
        if residual <= tol {
            return Ok((u, lambda, it, residual));
        }
        let obj = Shifted {
            asm: Assembler::new(mesh, &shifted)?,
            rhs: (0..n).map(|i| p * m[i] * u[i].spow(pm1)).collect(),
        };
        let scale = (lambda + s.sigma).max(T::min_positive_value()).powf(-T::one() / pm1);
        let mut v: Vec<T> = u.iter().map(|&x| x * scale).collect();
        let mut stages: Vec<Stage<T>> = Vec::new();
        if it == 0 {
            stages.extend(opts.newton.regularization.iter().map(|&e| Stage {
                grad_eps: e * inv_diam,
                hess_eps: e * inv_diam,
                tol: T::lit(1e-6),
            }));
        }
        stages.push(Stage {
            grad_eps: T::zero(),
            hess_eps: opts.newton.hessian_floor * inv_diam,
            tol: inner_tol,
        });
        Newton::new(&obj, s.free.clone(), opts.newton.max_newton_iters).run(&mut v, &stages)?;
        u = v;
        normalize(&mut u, &m, p);
    }
    Err(no_convergence(s, opts.max_iters, residual, lambda))
}

fn eigen<T: Real>(
    mesh: &TriMesh<T>,
    p: T,
    bc: BoundaryCondition<T>,
    opts: &EigenOptions<T>,
) -> Result<EigenReport<T>> {
    if !(p > T::one()) {
        return Err(Error::InvalidSpec(format!("exponent p = {p} must exceed 1")));
    }
    let masses = crate::assembly::masses(mesh);
    let s = setup(mesh, bc, &masses)?;
    let two = T::lit(2.0);
    let (mut u, mut lambda, mut iterations, mut residual) = quadratic_eigen(mesh, &s, opts)?;
    if p != two {
        let mut path = Vec::new();
        if opts.continuation {
            let step = if p > two { T::lit(0.5) } else { T::lit(-0.25) };
            let mut q = two + step;
            while (p - q) * step > T::lit(1e-12) {
                path.push(q);
                q += step;
            }
        }
        path.push(p);
        for (k, &q) in path.iter().enumerate() {
            let tol = if k + 1 == path.len() { opts.tol } else { T::lit(1e-6).max(opts.tol) };
            let out = power_eigen(mesh, &s, q, u, tol, opts)?;
            u = out.0;
            lambda = out.1;
            iterations += out.2;
            residual = out.3;
        }
    }
    let rayleigh_parts = parts(mesh, p, s.beta, &u);
    Ok(EigenReport {
        p,
        boundary: bc,
        lambda,
        eigenfunction: NodalField(u),
        rayleigh_parts,
        residual,
        iterations,
        negative_beta: s.beta < T::zero(),
    })
}

/// First Robin eigenpair of `−Δ_p` with `|∇u|^{p−2}∂_n u + β|u|^{p−2}u = 0`.
pub fn robin_eigen<T: Real>(mesh: &TriMesh<T>, p: T, beta: T, opts: &EigenOptions<T>) -> Result<EigenReport<T>> {
    eigen(mesh, p, BoundaryCondition::Robin(beta), opts)
}

/// First Dirichlet eigenpair (boundary values pinned to 0).
pub fn dirichlet_eigen<T: Real>(mesh: &TriMesh<T>, p: T, opts: &EigenOptions<T>) -> Result<EigenReport<T>> {
    eigen(mesh, p, BoundaryCondition::Dirichlet, opts)
}

pub fn solve_eigen<T: Real>(
    mesh: &TriMesh<T>,
    p: T,
    bc: BoundaryCondition<T>,
    opts: &EigenOptions<T>,
) -> Result<EigenReport<T>> {
    eigen(mesh, p, bc, opts)
}

/// The L¹ functional `Λ`: Robin
/// `[Σ m_i|d_i + λu_i^{p−1}| + βΣ b_i u_i^{p−1}] / Σ m_i u_i^{p−1}` with the
/// Robin flux absorbed in `d`; Dirichlet sums over interior vertices only.
pub fn recycling_value<T: Real>(
    mesh: &TriMesh<T>,
    p: T,
    bc: BoundaryCondition<T>,
    u: &NodalField<T>,
    lambda: T,
) -> Result<T> {
    u.check_len(mesh.n_vertices())?;
    let n = mesh.n_vertices();
    let beta = bc.beta();
    let medium = raw_medium(n, p, T::zero(), beta);
    let asm = Assembler::new(mesh, &medium)?;
    let masses = asm.masses();
    let action = asm.stiffness_action(u.values());
    let pm1 = p - T::one();
    let interior = |i: usize| match bc {
        BoundaryCondition::Robin(_) => true,
        BoundaryCondition::Dirichlet => !mesh.is_boundary_vertex(i),
    };
    let mut num = T::zero();
    let mut den = T::zero();
    for i in 0..n {
        let up = u[i].spow(pm1);
        den += masses.m[i] * up;
        if interior(i) {
            let md = -action[i] - masses.b[i] * beta * up;
            num += (md + lambda * masses.m[i] * up).abs() + masses.b[i] * beta * up;
        }
    }
    if !(den > T::zero()) {
        return Err(Error::ZeroDenominator);
    }
    Ok(num / den)
}

#[derive(Clone, Debug, Serialize)]
pub struct RecyclingReport<T> {
    #[serde(rename = "Lambda")]
    pub big_lambda: T,
    pub lambda: T,
    pub ratio: T,
    /// Smoother parameter for the Dirichlet witness.
    pub epsilon: Option<T>,
    #[serde(skip)]
    pub witness: NodalField<T>,
}

/// Robin: `Λ` at the eigenfunction. Dirichlet: `Λ` at
/// `h_low(u/max u)·max u` for each `ε`.
pub fn recycling_check<T: Real>(
    mesh: &TriMesh<T>,
    eig: &EigenReport<T>,
    epsilons: &[T],
) -> Result<Vec<RecyclingReport<T>>> {
    let u = &eig.eigenfunction;
    let make = |w: NodalField<T>, epsilon: Option<T>| -> Result<RecyclingReport<T>> {
        let big = recycling_value(mesh, eig.p, eig.boundary, &w, eig.lambda)?;
        Ok(RecyclingReport {
            big_lambda: big,
            lambda: eig.lambda,
            ratio: if eig.lambda == T::zero() && big == T::zero() { T::one() } else { big / eig.lambda },
            epsilon,
            witness: w,
        })
    };
    match eig.boundary {
        BoundaryCondition::Robin(_) => Ok(vec![make(u.clone(), None)?]),
        BoundaryCondition::Dirichlet => {
            let top = u.range().1;
            epsilons
                .iter()
                .map(|&eps| {
                    let h = make_smoother(eps, Orientation::Lower)?;
                    let w = u.map(|x| h.h((x / top).max(T::zero()).min(T::one())) * top);
                    make(w, Some(eps))
                })
                .collect()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetrizationReport<T> {
    pub lambda_domain: T,
    pub lambda_ball: T,
    pub margin: T,
    pub holds: bool,
    pub area_domain: T,
    pub area_ball: T,
}

/// Robin eigenvalue of a flat domain against the disk of equal area.
pub fn symmetrization_check<T: Real>(
    domain: &TriMesh<T>,
    ball: &TriMesh<T>,
    p: T,
    beta: T,
    opts: &EigenOptions<T>,
) -> Result<SymmetrizationReport<T>> {
    let (a, b) = (domain.total_area(), ball.total_area());
    if (a - b).abs() > T::lit(1e-2) * b {
        return Err(Error::InvalidSpec(format!("areas differ: {a} vs {b}")));
    }
    let ld = robin_eigen(domain, p, beta, opts)?.lambda;
    let lb = robin_eigen(ball, p, beta, opts)?.lambda;
    Ok(SymmetrizationReport {
        lambda_domain: ld,
        lambda_ball: lb,
        margin: ld - lb,
        holds: ld >= lb,
        area_domain: a,
        area_ball: b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, ConductorSpec, Generator, MeshSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn disk(level: u32) -> TriMesh<f64> {
        generate(&MeshSpec::new(Generator::Disk { radius: 1.0 }, level, ConductorSpec::None)).unwrap()
    }

    #[test]
    fn neumann_gives_zero() {
        let mesh = disk(1);
        let r = robin_eigen(&mesh, 2.0, 0.0, &EigenOptions::default()).unwrap();
        assert!(r.lambda.abs() < 1e-12);
        let (lo, hi) = r.eigenfunction.range();
        assert!(hi - lo < 1e-10);
    }

    #[test]
    fn quotient_is_scale_invariant() {
        let mesh = disk(1);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = NodalField((0..mesh.n_vertices()).map(|_| rng.gen_range(0.1..1.0)).collect());
        let q = rayleigh_quotient(&mesh, 3.0, 1.0, &u).unwrap();
        for c in [0.5, 2.0, -3.0] {
            let qc = rayleigh_quotient(&mesh, 3.0, 1.0, &u.scaled(c)).unwrap();
            assert!((q - qc).abs() < 1e-13 * q);
        }
    }

    #[test]
    fn recycling_exact_at_eigenpair() {
        let mesh = disk(1);
        for p in [2.0, 3.0] {
            let r = robin_eigen(&mesh, p, 1.0, &EigenOptions::default()).unwrap();
            assert!(r.eigenfunction.iter().all(|&x| x > 0.0));
            let rec = recycling_check(&mesh, &r, &[]).unwrap();
            assert!((rec[0].ratio - 1.0).abs() < 1e-8, "p={p}: {}", rec[0].ratio);
            let d = dirichlet_eigen(&mesh, p, &EigenOptions::default()).unwrap();
            assert!(d.lambda > r.lambda);
        }
    }

    #[test]
    fn recycling_lower_bound_on_random_fields() {
        let mesh = disk(1);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let lambda = 1.7;
        for _ in 0..20 {
            let u = NodalField((0..mesh.n_vertices()).map(|_| rng.gen_range(0.01..1.0)).collect());
            let big = recycling_value(&mesh, 3.0, BoundaryCondition::Robin(1.0), &u, lambda).unwrap();
            assert!(big >= lambda * (1.0 - 1e-10));
        }
    }
}
