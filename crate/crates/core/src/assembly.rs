//! P1 energy, first and second derivatives, p-stiffness action and lumped
//! masses.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::NodalField;
use crate::linalg::CsrMatrix;
use crate::mesh::TriMesh;
use crate::scalar::Real;

/// Exponent `p` with per-vertex bulk (`phi`) and boundary (`psi`)
/// coefficients. Entries of `psi` at interior vertices are never used.
#[derive(Clone, Debug, Serialize)]
pub struct Medium<T> {
    pub p: T,
    pub phi: Vec<T>,
    pub psi: Vec<T>,
}

impl<T: Real> Medium<T> {
    pub fn new(p: T, phi: Vec<T>, psi: Vec<T>) -> Result<Self> {
        if !(p > T::one()) || !p.is_finite() {
            return Err(Error::InvalidSpec(format!("exponent p = {p} must exceed 1")));
        }
        if phi.len() != psi.len() {
            return Err(Error::DimensionMismatch {
                expected: phi.len(),
                got: psi.len(),
            });
        }
        if phi.iter().chain(&psi).any(|&c| !(c >= T::zero()) || !c.is_finite()) {
            return Err(Error::InvalidSpec(
                "coefficients phi and psi must be finite and nonnegative".into(),
            ));
        }
        Ok(Medium { p, phi, psi })
    }

    /// Constant coefficients on every vertex of `mesh`.
    pub fn uniform(mesh: &TriMesh<T>, p: T, phi: T, psi: T) -> Result<Self> {
        let n = mesh.n_vertices();
        Self::new(p, vec![phi; n], vec![psi; n])
    }

    pub fn with_p(&self, p: T) -> Result<Self> {
        Self::new(p, self.phi.clone(), self.psi.clone())
    }

    fn check(&self, mesh: &TriMesh<T>) -> Result<()> {
        if self.phi.len() != mesh.n_vertices() {
            return Err(Error::DimensionMismatch {
                expected: mesh.n_vertices(),
                got: self.phi.len(),
            });
        }
        Ok(())
    }
}

/// Lumped vertex weights: `m` (area) and `b` (boundary length, zero at
/// interior vertices).
#[derive(Clone, Debug, Serialize)]
pub struct MassData<T> {
    pub m: Vec<T>,
    pub b: Vec<T>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EnergyBreakdown<T> {
    pub dirichlet: T,
    pub bulk: T,
    pub boundary: T,
    pub total: T,
}

pub fn masses<T: Real>(mesh: &TriMesh<T>) -> MassData<T> {
    let n = mesh.n_vertices();
    let third = T::lit(1.0 / 3.0);
    let half = T::lit(0.5);
    let mut m = vec![T::zero(); n];
    for (tri, g) in mesh.triangles().iter().zip(mesh.geometry()) {
        for &i in tri {
            m[i] += third * g.area;
        }
    }
    let mut b = vec![T::zero(); n];
    for e in mesh.boundary_edges() {
        let l = mesh.edge_length(e.a, e.b);
        b[e.a] += half * l;
        b[e.b] += half * l;
    }
    MassData { m, b }
}

/// Per-triangle P1 kinematics: `d = (f1 - f0, f2 - f0)`, `q = G⁻¹ d` and
/// `s = |∇f|² = d·q`.
#[derive(Clone, Copy)]
struct Local<T> {
    area: T,
    ginv: [T; 3],
    q: [T; 2],
    s: T,
}

/// Evaluator bound to one mesh and medium, with cached masses.
#[derive(Clone, Debug)]
pub struct Assembler<'a, T> {
    mesh: &'a TriMesh<T>,
    medium: &'a Medium<T>,
    masses: MassData<T>,
}

impl<'a, T: Real> Assembler<'a, T> {
    pub fn new(mesh: &'a TriMesh<T>, medium: &'a Medium<T>) -> Result<Self> {
        medium.check(mesh)?;
        Ok(Assembler {
            mesh,
            medium,
            masses: masses(mesh),
        })
    }

    pub fn mesh(&self) -> &'a TriMesh<T> {
        self.mesh
    }

    pub fn medium(&self) -> &'a Medium<T> {
        self.medium
    }

    pub fn masses(&self) -> &MassData<T> {
        &self.masses
    }

    fn local(&self, t: usize, f: &[T]) -> Local<T> {
        let [i0, i1, i2] = self.mesh.triangles()[t];
        let g = self.mesh.geometry()[t];
        let d = [f[i1] - f[i0], f[i2] - f[i0]];
        let [a, b, c] = g.ginv;
        let q = [a * d[0] + b * d[1], b * d[0] + c * d[1]];
        Local {
            area: g.area,
            ginv: g.ginv,
            q,
            s: (d[0] * q[0] + d[1] * q[1]).max(T::zero()),
        }
    }

    /// Per-triangle `|∇f|`.
    pub fn gradient_norms(&self, f: &[T]) -> Vec<T> {
        (0..self.mesh.n_triangles())
            .map(|t| self.local(t, f).s.sqrt())
            .collect()
    }

    pub fn energy(&self, f: &[T]) -> EnergyBreakdown<T> {
        let p = self.medium.p;
        let half_p = p / T::lit(2.0);
        let dirichlet = (0..self.mesh.n_triangles())
            .map(|t| {
                let l = self.local(t, f);
                l.area * l.s.apow(half_p)
            })
            .sum();
        let (bulk, boundary) = self.lumped_energy(f);
        EnergyBreakdown {
            dirichlet,
            bulk,
            boundary,
            total: dirichlet + bulk + boundary,
        }
    }

    fn lumped_energy(&self, f: &[T]) -> (T, T) {
        let p = self.medium.p;
        let m = &self.masses;
        let mut bulk = T::zero();
        let mut boundary = T::zero();
        for i in 0..f.len() {
            let fp = f[i].apow(p);
            bulk += m.m[i] * self.medium.phi[i] * fp;
            boundary += m.b[i] * self.medium.psi[i] * fp;
        }
        (bulk, boundary)
    }

    /// Energy whose gradient is [`Self::gradient_parts`] at the same `eps`:
    /// the Dirichlet density is `(eps² + s)^{p/2} − eps^p`.
    pub fn regularized_energy(&self, f: &[T], eps: T) -> T {
        if eps == T::zero() {
            return self.energy(f).total;
        }
        let p = self.medium.p;
        let half_p = p / T::lit(2.0);
        let e2 = eps * eps;
        let shift = eps.powf(p);
        let dirichlet: T = (0..self.mesh.n_triangles())
            .map(|t| {
                let l = self.local(t, f);
                l.area * ((e2 + l.s).powf(half_p) - shift)
            })
            .sum();
        let (bulk, boundary) = self.lumped_energy(f);
        dirichlet + bulk + boundary
    }

    /// Gradient of the (regularized) energy together with the sum of the
    /// absolute values of the contributions to each component, which sets
    /// the scale for relative residuals.
    pub fn gradient_parts(&self, f: &[T], eps: T) -> Result<(Vec<T>, Vec<T>)> {
        let n = self.mesh.n_vertices();
        let p = self.medium.p;
        let mut g = vec![T::zero(); n];
        let mut scale = vec![T::zero(); n];
        self.dirichlet_flux(f, eps, |i, v| {
            g[i] += p * v;
            scale[i] += (p * v).abs();
        });
        let pm1 = p - T::one();
        for i in 0..n {
            let fp = f[i].spow(pm1);
            let bulk = p * self.masses.m[i] * self.medium.phi[i] * fp;
            let bnd = p * self.masses.b[i] * self.medium.psi[i] * fp;
            g[i] += bulk + bnd;
            scale[i] += bulk.abs() + bnd.abs();
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NumericalDegeneracy("nonfinite gradient".into()));
        }
        Ok((g, scale))
    }

    pub fn gradient(&self, f: &[T], eps: T) -> Result<Vec<T>> {
        self.gradient_parts(f, eps).map(|(g, _)| g)
    }

    /// Calls `sink(i, c)` for every triangle contribution `c` of
    /// `Σ_T w (∇f·∇φ_i) area` with weight `w = (eps² + s)^{(p−2)/2}`;
    /// triangles with `s = 0` contribute nothing when `eps = 0`.
    fn dirichlet_flux(&self, f: &[T], eps: T, mut sink: impl FnMut(usize, T)) {
        let p = self.medium.p;
        let e2 = eps * eps;
        let half_pm2 = (p - T::lit(2.0)) / T::lit(2.0);
        for t in 0..self.mesh.n_triangles() {
            let l = self.local(t, f);
            let r = e2 + l.s;
            if r == T::zero() {
                continue;
            }
            let w = l.area * r.powf(half_pm2);
            let c1 = w * l.q[0];
            let c2 = w * l.q[1];
            let [i0, i1, i2] = self.mesh.triangles()[t];
            sink(i0, -(c1 + c2));
            sink(i1, c1);
            sink(i2, c2);
        }
    }

    /// `A_p(f)_i = Σ_T |∇f|^{p−2} (∇f·∇φ_i)_T area_T`.
    pub fn stiffness_action(&self, f: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); f.len()];
        self.dirichlet_flux(f, T::zero(), |i, v| out[i] += v);
        out
    }

    /// Sparsity pattern of the Hessian (vertex adjacency).
    pub fn pattern(&self) -> CsrMatrix<T> {
        CsrMatrix::from_pattern(&self.mesh.adjacency())
    }

    /// Hessian of the energy regularized with `eps` (the lumped terms use
    /// `max(|f|, eps)^{p−2}` when `p < 2`), written into `h`.
    pub fn hessian_into(&self, f: &[T], eps: T, h: &mut CsrMatrix<T>) -> Result<()> {
        let p = self.medium.p;
        let two = T::lit(2.0);
        if p != two && !(eps > T::zero()) {
            return Err(Error::NumericalDegeneracy(
                "Hessian needs eps > 0 when p != 2".into(),
            ));
        }
        h.clear();
        let e2 = eps * eps;
        let half_pm2 = (p - two) / two;
        let tris = self.mesh.triangles();
        for t in 0..self.mesh.n_triangles() {
            let l = self.local(t, f);
            let r = e2 + l.s;
            let (w, w2) = if p == two {
                (T::one(), T::zero())
            } else if r == T::zero() {
                continue;
            } else {
                let w = r.powf(half_pm2);
                (w, (p - two) * w / r)
            };
            let [a, b, c] = l.ginv;
            let k = p * l.area;
            let hdd = [
                [k * (w * a + w2 * l.q[0] * l.q[0]), k * (w * b + w2 * l.q[0] * l.q[1])],
                [k * (w * b + w2 * l.q[1] * l.q[0]), k * (w * c + w2 * l.q[1] * l.q[1])],
            ];
            // rows of B mapping d = Bᵀ (f0, f1, f2)
            let bm = [[-T::one(), -T::one()], [T::one(), T::zero()], [T::zero(), T::one()]];
            let tri = tris[t];
            for x in 0..3 {
                for y in 0..3 {
                    let mut v = T::zero();
                    for u in 0..2 {
                        for z in 0..2 {
                            v += bm[x][u] * hdd[u][z] * bm[y][z];
                        }
                    }
                    h.add(tri[x], tri[y], v);
                }
            }
        }
        let pm2 = p - two;
        let coef = p * (p - T::one());
        for i in 0..f.len() {
            let c = self.masses.m[i] * self.medium.phi[i] + self.masses.b[i] * self.medium.psi[i];
            if c == T::zero() {
                continue;
            }
            let base = if p < two { f[i].abs().max(eps) } else { f[i].abs() };
            let d = if pm2 == T::zero() { T::one() } else { base.apow(pm2) };
            h.add(i, i, coef * c * d);
        }
        Ok(())
    }

    pub fn hessian(&self, f: &[T], eps: T) -> Result<CsrMatrix<T>> {
        let mut h = self.pattern();
        self.hessian_into(f, eps, &mut h)?;
        Ok(h)
    }
}

pub fn energy<T: Real>(
    mesh: &TriMesh<T>,
    medium: &Medium<T>,
    f: &NodalField<T>,
) -> Result<EnergyBreakdown<T>> {
    f.check_len(mesh.n_vertices())?;
    Ok(Assembler::new(mesh, medium)?.energy(f.values()))
}

/// `∂ energy / ∂ f_i` with the Dirichlet weight regularized by `eps_reg`.
pub fn gradient<T: Real>(
    mesh: &TriMesh<T>,
    medium: &Medium<T>,
    f: &NodalField<T>,
    eps_reg: T,
) -> Result<NodalField<T>> {
    f.check_len(mesh.n_vertices())?;
    Assembler::new(mesh, medium)?
        .gradient(f.values(), eps_reg)
        .map(NodalField)
}

pub fn hessian<T: Real>(
    mesh: &TriMesh<T>,
    medium: &Medium<T>,
    f: &NodalField<T>,
    eps_reg: T,
) -> Result<CsrMatrix<T>> {
    f.check_len(mesh.n_vertices())?;
    Assembler::new(mesh, medium)?.hessian(f.values(), eps_reg)
}

pub fn stiffness_action<T: Real>(mesh: &TriMesh<T>, p: T, f: &NodalField<T>) -> Result<NodalField<T>> {
    f.check_len(mesh.n_vertices())?;
    let n = mesh.n_vertices();
    let medium = Medium::new(p, vec![T::zero(); n], vec![T::zero(); n])?;
    Ok(NodalField(Assembler::new(mesh, &medium)?.stiffness_action(f.values())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, ConductorSpec, Generator, MeshSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square(level: u32) -> TriMesh<f64> {
        generate(&MeshSpec::new(Generator::Square { side: 1.0 }, level, ConductorSpec::None)).unwrap()
    }

    fn disk(level: u32) -> TriMesh<f64> {
        generate(&MeshSpec::new(Generator::Disk { radius: 1.0 }, level, ConductorSpec::None)).unwrap()
    }

    fn random_medium(mesh: &TriMesh<f64>, p: f64, rng: &mut ChaCha8Rng) -> Medium<f64> {
        let n = mesh.n_vertices();
        Medium::new(
            p,
            (0..n).map(|_| rng.gen_range(0.0..2.0)).collect(),
            (0..n).map(|_| rng.gen_range(0.0..2.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn masses_partition_area_and_perimeter() {
        let m = masses(&square(2));
        assert!((m.m.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((m.b.iter().sum::<f64>() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn linear_field_energy() {
        let mesh = square(1);
        let medium = Medium::uniform(&mesh, 2.0, 0.0, 0.0).unwrap();
        let f = NodalField::from_fn(&mesh, |v| v[0]);
        let e = energy(&mesh, &medium, &f).unwrap();
        assert!((e.total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_field_energy_is_area_plus_perimeter() {
        let mesh = disk(1);
        let medium = Medium::uniform(&mesh, 3.0, 1.0, 1.0).unwrap();
        let f = NodalField::constant(mesh.n_vertices(), 1.0);
        let e = energy(&mesh, &medium, &f).unwrap();
        let exact = mesh.total_area() + mesh.boundary_length();
        assert!((e.total - exact).abs() < 1e-13);
        let g = gradient(&mesh, &Medium::uniform(&mesh, 3.0, 0.0, 0.0).unwrap(), &f, 0.0).unwrap();
        assert!(g.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mesh = disk(0);
        for p in [1.5, 2.0, 3.0] {
            let medium = random_medium(&mesh, p, &mut rng);
            let asm = Assembler::new(&mesh, &medium).unwrap();
            let f: Vec<f64> = (0..mesh.n_vertices()).map(|_| rng.gen_range(0.1..1.0)).collect();
            let g = asm.gradient(&f, 0.0).unwrap();
            let scale = g.iter().fold(1.0f64, |a, x| a.max(x.abs()));
            let h = 1e-6;
            for i in 0..f.len() {
                let mut fp = f.clone();
                let mut fm = f.clone();
                fp[i] += h;
                fm[i] -= h;
                let fd = (asm.energy(&fp).total - asm.energy(&fm).total) / (2.0 * h);
                assert!((fd - g[i]).abs() / scale < 1e-6, "p={p} i={i} {fd} {}", g[i]);
            }
        }
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mesh = disk(0);
        for p in [1.5, 2.0, 3.0] {
            let medium = random_medium(&mesh, p, &mut rng);
            let asm = Assembler::new(&mesh, &medium).unwrap();
            let n = mesh.n_vertices();
            let f: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
            let eps = 1e-2;
            let h = asm.hessian(&f, eps).unwrap();
            assert!(h.asymmetry() < 1e-12);
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let hv = h.mul_vec(&v);
            let step = 1e-6;
            let shifted = |s: f64| -> Vec<f64> {
                let x: Vec<f64> = f.iter().zip(&v).map(|(a, b)| a + s * b).collect();
                asm.gradient(&x, eps).unwrap()
            };
            let (gp, gm) = (shifted(step), shifted(-step));
            let scale = hv.iter().fold(1e-300f64, |a, x| a.max(x.abs()));
            for i in 0..n {
                let fd = (gp[i] - gm[i]) / (2.0 * step);
                assert!((fd - hv[i]).abs() / scale < 1e-5, "p={p} i={i}");
            }
        }
    }

    #[test]
    fn regularized_energy_is_consistent_with_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mesh = disk(0);
        let medium = random_medium(&mesh, 1.5, &mut rng);
        let asm = Assembler::new(&mesh, &medium).unwrap();
        let f: Vec<f64> = (0..mesh.n_vertices()).map(|_| rng.gen_range(0.1..1.0)).collect();
        let eps = 0.1;
        let g = asm.gradient(&f, eps).unwrap();
        let h = 1e-6;
        for i in 0..f.len() {
            let mut fp = f.clone();
            let mut fm = f.clone();
            fp[i] += h;
            fm[i] -= h;
            let fd = (asm.regularized_energy(&fp, eps) - asm.regularized_energy(&fm, eps)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn stiffness_kernel_and_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let mesh = disk(1);
        for p in [1.5, 2.0, 3.0] {
            let f = NodalField((0..mesh.n_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let a = stiffness_action(&mesh, p, &f).unwrap();
            let sum: f64 = a.iter().sum();
            let mag: f64 = a.iter().map(|x| x.abs()).sum();
            assert!(sum.abs() < 1e-13 * mag);
            let medium = Medium::uniform(&mesh, p, 0.0, 0.0).unwrap();
            let e = energy(&mesh, &medium, &f).unwrap();
            assert!((f.dot(&a) - e.dirichlet).abs() < 1e-12 * e.dirichlet);
            let c = stiffness_action(&mesh, p, &NodalField::constant(mesh.n_vertices(), 0.3)).unwrap();
            assert!(c.iter().all(|x| *x == 0.0));
        }
    }

    #[test]
    fn p2_hessian_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let mesh = square(1);
        let medium = Medium::uniform(&mesh, 2.0, 1.0, 1.0).unwrap();
        let asm = Assembler::new(&mesh, &medium).unwrap();
        let f1: Vec<f64> = (0..mesh.n_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f2: Vec<f64> = (0..mesh.n_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h1 = asm.hessian(&f1, 0.0).unwrap();
        let h2 = asm.hessian(&f2, 0.0).unwrap();
        for i in 0..mesh.n_vertices() {
            for (j, v) in h1.row(i) {
                assert!((v - h2.get(i, j)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_bad_medium() {
        let mesh = square(0);
        assert!(Medium::uniform(&mesh, 1.0, 0.0, 0.0).is_err());
        assert!(Medium::uniform(&mesh, 2.0, -1.0, 0.0).is_err());
    }
}
