//! Surface versus model heat dispersion.

use serde::Serialize;

use super::{radial_dispersion, ModelSpace};
use crate::assembly::Medium;
use crate::dispersion::{self, SolveOptions};
use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::scalar::Real;

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport<T> {
    pub kappa: T,
    pub lambda: T,
    pub delta: T,
    pub surface: T,
    pub model: T,
    /// `(model − surface) / model`.
    pub gap: T,
    /// `surface ≤ model`.
    pub holds: bool,
    pub boundary_surface: T,
    pub boundary_model: T,
}

impl<T: Real> ComparisonReport<T> {
    /// Rows `side,value,gap,flag`.
    pub fn csv(&self) -> String {
        format!(
            "side,value,gap,flag\nsurface,{},{},{}\nmodel,{},{},{}\n",
            self.surface, self.gap, self.holds, self.model, self.gap, self.holds
        )
    }
}

/// Heat dispersion of the conductor region of `mesh` against the radial
/// value on `model` with `K* = {t ≥ t0 + δ}`. The boundary measures must
/// agree within 1%.
pub fn comparison_report<T: Real>(
    mesh: &TriMesh<T>,
    model: &ModelSpace<T>,
    delta: T,
    p: T,
    phi: T,
    psi: T,
    opts: &SolveOptions<T>,
) -> Result<ComparisonReport<T>> {
    if model.n != 2 {
        return Err(Error::InvalidSpec("surfaces compare against n = 2 models".into()));
    }
    let boundary_surface = mesh.boundary_length();
    let boundary_model = model.boundary_measure();
    if (boundary_surface - boundary_model).abs() > T::lit(0.01) * boundary_model {
        return Err(Error::BoundaryMeasureMismatch {
            surface: boundary_surface.as_f64(),
            model: boundary_model.as_f64(),
        });
    }
    let radial = radial_dispersion(model, delta, p, phi, psi)?;
    let medium = Medium::uniform(mesh, p, phi, psi)?;
    let surface = dispersion::solve(mesh, &medium, opts)?.value;
    let model_value = radial.value;
    let gap = if model_value == T::zero() {
        T::zero()
    } else {
        (model_value - surface) / model_value
    };
    Ok(ComparisonReport {
        kappa: model.kappa,
        lambda: model.lambda,
        delta,
        surface,
        model: model_value,
        gap,
        holds: surface <= model_value,
        boundary_surface,
        boundary_model,
    })
}

#[cfg(test)]
mod tests {
    use super::super::model_space;
    use super::*;
    use crate::mesh::{generate, ConductorSpec, Generator, MeshSpec};

    #[test]
    fn mismatched_boundary_rejected() {
        let spec = MeshSpec::new(Generator::Disk { radius: 1.0 }, 1, ConductorSpec::Disk { radius: 0.5 });
        let mesh: TriMesh<f64> = generate(&spec).unwrap();
        let model = model_space(0.0f64, 0.5, 2, None).unwrap();
        let r = comparison_report(&mesh, &model, 0.5, 2.0, 0.0, 1.0, &SolveOptions::default());
        assert!(matches!(r, Err(Error::BoundaryMeasureMismatch { .. })));
    }
}
