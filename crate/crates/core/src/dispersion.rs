//! Constrained minimization defining the heat dispersion, its diagnostics and
//! the two limit sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{Assembler, EnergyBreakdown, Medium};
use crate::error::{Error, Result};
use crate::field::NodalField;
use crate::linalg::CsrMatrix;
use crate::mesh::TriMesh;
use crate::newton::{Newton, Objective, Stage};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    deny_unknown_fields,
    bound(deserialize = "T: Real + Deserialize<'de>")
)]
pub struct SolveOptions<T> {
    /// Target for `‖∇E_free‖ / ‖|∇E|_free‖`.
    pub grad_tol: T,
    /// Iteration cap per Newton stage.
    pub max_newton_iters: usize,
    /// Regularization levels, in units of `1 / diameter`.
    pub regularization: Vec<T>,
    /// Hessian regularization of the final, unregularized stage.
    pub hessian_floor: T,
    /// Step `p` away from 2 instead of jumping directly.
    pub continuation: bool,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            grad_tol: T::lit(1e-10),
            max_newton_iters: 200,
            regularization: vec![T::lit(1e-2), T::lit(1e-4), T::lit(1e-6)],
            hessian_floor: T::lit(1e-8),
            continuation: true,
        }
    }
}

impl<T: Real> SolveOptions<T> {
    fn validate(&self) -> Result<()> {
        let ok = |x: T| x > T::zero() && x.is_finite();
        if !ok(self.grad_tol) || !ok(self.hessian_floor) || !self.regularization.iter().all(|&e| ok(e)) {
            return Err(Error::InvalidSpec("solver tolerances must be positive".into()));
        }
        if self.max_newton_iters == 0 {
            return Err(Error::InvalidSpec("max_newton_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DispersionReport<T> {
    pub value: T,
    #[serde(skip)]
    pub minimizer: NodalField<T>,
    pub breakdown: EnergyBreakdown<T>,
    pub identity_residual: T,
    pub range_violation: T,
    pub gradient_residual: T,
    pub iterations: usize,
    pub converged: bool,
}

impl<'a, T: Real> Objective<T> for Assembler<'a, T> {
    fn value(&self, x: &[T], eps: T) -> T {
        self.regularized_energy(x, eps)
    }

    fn gradient(&self, x: &[T], eps: T) -> Result<(Vec<T>, Vec<T>)> {
        self.gradient_parts(x, eps)
    }

    fn hessian(&self, x: &[T], eps: T, h: &mut CsrMatrix<T>) -> Result<()> {
        self.hessian_into(x, eps, h)
    }

    fn pattern(&self) -> CsrMatrix<T> {
        Assembler::pattern(self)
    }
}

/// Exponents visited by continuation from 2 to `p`.
fn p_path<T: Real>(p: T, continuation: bool) -> Vec<T> {
    let two = T::lit(2.0);
    let mut path = Vec::new();
    if continuation && p != two {
        let step = if p > two { T::lit(0.5) } else { T::lit(-0.25) };
        let mut q = two + step;
        while (p - q) * step > T::lit(1e-12) {
            path.push(q);
            q += step;
        }
    }
    path.push(p);
    path
}

/// Minimizes over vertices with `fixed[i] == None`, starting from a `p = 2`
/// solve of the same problem and continuing in `p`.
pub(crate) fn minimize<T: Real>(
    mesh: &TriMesh<T>,
    medium: &Medium<T>,
    fixed: &[Option<T>],
    opts: &SolveOptions<T>,
) -> Result<(Vec<T>, usize, T)> {
    opts.validate()?;
    let n = mesh.n_vertices();
    let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
    let mut x: Vec<T> = fixed.iter().map(|v| v.unwrap_or(T::one())).collect();
    let two = T::lit(2.0);
    let inv_diam = T::one() / mesh.diameter();
    let loose = T::lit(1e-6).max(opts.grad_tol);
    let mut iterations = 0;

    let quadratic = medium.with_p(two)?;
    let stage2 = Stage {
        grad_eps: T::zero(),
        hess_eps: T::zero(),
        tol: if medium.p == two { opts.grad_tol } else { loose },
    };
    let asm = Assembler::new(mesh, &quadratic)?;
    let out = Newton::new(&asm, free.clone(), opts.max_newton_iters).run(&mut x, &[stage2])?;
    iterations += out.iterations;
    let mut residual = out.residual;
    if medium.p == two {
        return Ok((x, iterations, residual));
    }

    let path = p_path(medium.p, opts.continuation);
    for (k, &q) in path.iter().enumerate() {
        let last = k + 1 == path.len();
        let med = medium.with_p(q)?;
        let asm = Assembler::new(mesh, &med)?;
        let mut stages: Vec<Stage<T>> = opts
            .regularization
            .iter()
            .map(|&e| Stage {
                grad_eps: e * inv_diam,
                hess_eps: e * inv_diam,
                tol: loose,
            })
            .collect();
        if last {
            stages.push(Stage {
                grad_eps: T::zero(),
                hess_eps: opts.hessian_floor * inv_diam,
                tol: opts.grad_tol,
            });
        } else {
            stages.truncate(1);
        }
        let out = Newton::new(&asm, free.clone(), opts.max_newton_iters).run(&mut x, &stages)?;
        iterations += out.iterations;
        residual = out.residual;
    }
    Ok((x, iterations, residual))
}

fn report<T: Real>(
    asm: &Assembler<T>,
    f: Vec<T>,
    iterations: usize,
    gradient_residual: T,
    flux: T,
) -> DispersionReport<T> {
    let breakdown = asm.energy(&f);
    let medium = asm.medium();
    let m = asm.masses();
    let pm1 = medium.p - T::one();
    let rhs: T = (0..f.len())
        .map(|i| (m.m[i] * medium.phi[i] + m.b[i] * medium.psi[i]) * f[i].spow(pm1))
        .sum::<T>()
        + flux;
    let value = breakdown.total;
    let identity_residual = (value - rhs).abs() / value.max(T::one());
    let (lo, hi) = f
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(a, b), &x| (a.min(x), b.max(x)));
    let range_violation = T::zero().max(-lo).max(hi - T::one());
    DispersionReport {
        value,
        minimizer: NodalField(f),
        breakdown,
        identity_residual,
        range_violation,
        gradient_residual,
        iterations,
        converged: true,
    }
}

/// Heat dispersion of the conductor region of `mesh` with Robin data `psi`.
pub fn solve<T: Real>(
    mesh: &TriMesh<T>,
    medium: &Medium<T>,
    opts: &SolveOptions<T>,
) -> Result<DispersionReport<T>> {
    if !mesh.has_conductor() {
        return Err(Error::InvalidSpec(
            "mesh has no conductor region (use with_whole_conductor for K = M)".into(),
        ));
    }
    let asm = Assembler::new(mesh, medium)?;
    let fixed: Vec<Option<T>> = (0..mesh.n_vertices())
        .map(|i| mesh.is_conductor_vertex(i).then_some(T::one()))
        .collect();
    let (f, iterations, residual) = minimize(mesh, medium, &fixed, opts)?;
    Ok(report(&asm, f, iterations, residual, T::zero()))
}

/// Dirichlet limit: `f = 0` on the outer boundary, `psi` ignored. The
/// identity check uses the boundary flux `−Σ_{∂M} A_p(f)_i` in place of the
/// Robin term.
pub fn solve_dirichlet<T: Real>(
    mesh: &TriMesh<T>,
    medium: &Medium<T>,
    opts: &SolveOptions<T>,
) -> Result<DispersionReport<T>> {
    if !mesh.has_conductor() {
        return Err(Error::InvalidSpec("mesh has no conductor region".into()));
    }
    let n = mesh.n_vertices();
    if (0..n).any(|i| mesh.is_conductor_vertex(i) && mesh.is_boundary_vertex(i)) {
        return Err(Error::InvalidSpec("conductor touches the boundary".into()));
    }
    let medium = Medium::new(medium.p, medium.phi.clone(), vec![T::zero(); n])?;
    let asm = Assembler::new(mesh, &medium)?;
    let fixed: Vec<Option<T>> = (0..n)
        .map(|i| {
            if mesh.is_conductor_vertex(i) {
                Some(T::one())
            } else if mesh.is_boundary_vertex(i) {
                Some(T::zero())
            } else {
                None
            }
        })
        .collect();
    let (f, iterations, residual) = minimize(mesh, &medium, &fixed, opts)?;
    let action = asm.stiffness_action(&f);
    let flux: T = -(0..n)
        .filter(|&i| mesh.is_boundary_vertex(i))
        .map(|i| action[i])
        .sum::<T>();
    Ok(report(&asm, f, iterations, residual, flux))
}

/// One row of a sweep table (`param,value,aux`).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepRow<T> {
    pub param: T,
    pub value: T,
    pub aux: T,
}

#[derive(Clone, Debug, Serialize)]
pub struct PsiSweep<T> {
    /// `aux` is the relative gap `(dirichlet − value) / dirichlet`.
    pub rows: Vec<SweepRow<T>>,
    pub reports: Vec<DispersionReport<T>>,
    pub dirichlet: DispersionReport<T>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhiSweep<T> {
    /// `aux` is the forced lower bound `Φ · area(K)`.
    pub rows: Vec<SweepRow<T>>,
    pub reports: Vec<DispersionReport<T>>,
}

fn powers_of_ten<T: Real>(exponents: std::ops::RangeInclusive<i32>) -> Vec<T> {
    std::iter::once(T::zero())
        .chain(exponents.map(|k| T::lit(10f64.powi(k))))
        .collect()
}

/// `Ψ ∈ {0} ∪ {10^k}` with `Φ = 0`, plus the hard Dirichlet solve.
pub fn sweep_psi<T: Real>(
    mesh: &TriMesh<T>,
    p: T,
    exponents: std::ops::RangeInclusive<i32>,
    opts: &SolveOptions<T>,
) -> Result<PsiSweep<T>> {
    let zero = Medium::uniform(mesh, p, T::zero(), T::zero())?;
    let dirichlet = solve_dirichlet(mesh, &zero, opts)?;
    let params = powers_of_ten::<T>(exponents);
    let reports = params
        .par_iter()
        .map(|&psi| solve(mesh, &Medium::uniform(mesh, p, T::zero(), psi)?, opts))
        .collect::<Result<Vec<_>>>()?;
    let rows = params
        .iter()
        .zip(&reports)
        .map(|(&param, r)| SweepRow {
            param,
            value: r.value,
            aux: (dirichlet.value - r.value) / dirichlet.value,
        })
        .collect();
    Ok(PsiSweep {
        rows,
        reports,
        dirichlet,
    })
}

/// Constant `Φ ∈ {0} ∪ {10^k}` with `Ψ = 0`.
pub fn sweep_phi<T: Real>(
    mesh: &TriMesh<T>,
    p: T,
    exponents: std::ops::RangeInclusive<i32>,
    opts: &SolveOptions<T>,
) -> Result<PhiSweep<T>> {
    let params = powers_of_ten::<T>(exponents);
    let reports = params
        .par_iter()
        .map(|&phi| solve(mesh, &Medium::uniform(mesh, p, phi, T::zero())?, opts))
        .collect::<Result<Vec<_>>>()?;
    let area_k = mesh.conductor_area();
    let rows = params
        .iter()
        .zip(&reports)
        .map(|(&param, r)| SweepRow {
            param,
            value: r.value,
            aux: param * area_k,
        })
        .collect();
    Ok(PhiSweep { rows, reports })
}
