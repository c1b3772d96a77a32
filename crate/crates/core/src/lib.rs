//! Heat dispersion of condensers on triangulated surfaces.
//!
//! The crate computes the minimal energy
//! `inf { ∫|∇f|^p + Φ|f|^p + ∫_∂ Ψ|f|^p : f = 1 on K }` of a conductor `K`
//! inside a compact surface `M` with boundary using P1 finite elements,
//! evaluates the companion L¹ functional of `Δ_p f − Φ f^{p−1}` on smoothed
//! minimizers, computes first Robin/Dirichlet p-Laplace eigenpairs, and
//! provides radial warped-product models that serve as independent oracles.
//!
//! Every numerical type is generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix `f64`.

pub mod assembly;
pub mod dispersion;
pub mod dual;
pub mod eigen;
pub mod error;
pub mod field;
pub mod linalg;
pub mod mesh;
pub mod model;
mod newton;
pub mod quad;
pub mod scalar;
pub mod study;

pub use error::{Error, Result};
pub use field::NodalField;
pub use scalar::Real;

pub type Mesh = mesh::TriMesh<f64>;
pub type Field = field::NodalField<f64>;
pub type Medium = assembly::Medium<f64>;
pub type Masses = assembly::MassData<f64>;
pub type Breakdown = assembly::EnergyBreakdown<f64>;
pub type Spec = mesh::MeshSpec<f64>;
pub type Options = dispersion::SolveOptions<f64>;
pub type Report = dispersion::DispersionReport<f64>;
pub type Smoother = dual::SmootherH<f64>;
pub type Dual = dual::DualReport<f64>;
pub type Eigen = eigen::EigenReport<f64>;
pub type Recycling = eigen::RecyclingReport<f64>;
pub type Model = model::ModelSpace<f64>;
pub type Radial = model::RadialReport<f64>;
