//! Run configurations, one struct per command. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use hd_core::dispersion::SolveOptions;
use hd_core::eigen::{BoundaryCondition, EigenOptions};
use hd_core::mesh::{self, MeshSpec, TriMesh};
use hd_core::model::ModelParams;
use hd_core::{Medium, Mesh};

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSource {
    Generate(MeshSpec<f64>),
    /// Text mesh file, relative to the config file.
    File(PathBuf),
}

impl MeshSource {
    pub fn is_generated(&self) -> bool {
        matches!(self, MeshSource::Generate(_))
    }

    /// Builds the mesh. `refine` replaces the generator resolution, or
    /// refines a file mesh that many times.
    pub fn load(&self, base: &Path, refine: Option<u32>) -> Result<Mesh> {
        match self {
            MeshSource::Generate(spec) => {
                let mut spec = spec.clone();
                if let Some(l) = refine {
                    spec.resolution = l;
                }
                Ok(mesh::generate(&spec)?)
            }
            MeshSource::File(path) => {
                let path = base.join(path);
                let file = std::fs::File::open(&path).with_context(|| format!("opening mesh {}", path.display()))?;
                let mut m: TriMesh<f64> = mesh::read_mesh(std::io::BufReader::new(file))
                    .with_context(|| format!("reading mesh {}", path.display()))?;
                for _ in 0..refine.unwrap_or(0) {
                    m = mesh::refine(&m)?;
                }
                Ok(m)
            }
        }
    }
}

/// Coefficient field: a number, or a named profile.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Coefficient {
    Constant(f64),
    Named(Profile),
}

impl Default for Coefficient {
    fn default() -> Self {
        Coefficient::Constant(0.0)
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant(f64),
    /// `inside` where the radial coordinate (distance from the origin, or
    /// polar angle on a sphere) is at most `radius`, `outside` elsewhere.
    RadialStep { radius: f64, inside: f64, outside: f64 },
}

impl Coefficient {
    pub fn constant(&self) -> Option<f64> {
        match self {
            Coefficient::Constant(c) | Coefficient::Named(Profile::Constant(c)) => Some(*c),
            _ => None,
        }
    }

    pub fn nodal(&self, mesh: &Mesh) -> Vec<f64> {
        match self {
            Coefficient::Constant(c) | Coefficient::Named(Profile::Constant(c)) => vec![*c; mesh.n_vertices()],
            Coefficient::Named(Profile::RadialStep { radius, inside, outside }) => {
                let sphere = matches!(mesh.surface(), mesh::Surface::Sphere { .. });
                mesh.vertices()
                    .iter()
                    .map(|v| {
                        let r = if sphere {
                            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                            (v[2] / n).clamp(-1.0, 1.0).acos()
                        } else {
                            (v[0] * v[0] + v[1] * v[1]).sqrt()
                        };
                        if r <= *radius {
                            *inside
                        } else {
                            *outside
                        }
                    })
                    .collect()
            }
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub p: f64,
    #[serde(default)]
    pub phi: Coefficient,
    #[serde(default)]
    pub psi: Coefficient,
}

impl MediumConfig {
    pub fn build(&self, mesh: &Mesh) -> Result<Medium> {
        Ok(Medium::new(self.p, self.phi.nodal(mesh), self.psi.nodal(mesh))?)
    }

    pub fn label(&self) -> (f64, String, String) {
        let show = |c: &Coefficient| match c.constant() {
            Some(v) => v.to_string(),
            None => "profile".to_string(),
        };
        (self.p, show(&self.phi), show(&self.psi))
    }
}

/// A single item or a list of them.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RandomFields {
    pub count: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Exponents {
    pub from: i32,
    pub to: i32,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub command: Option<String>,
    pub output: Option<PathBuf>,
    pub mesh: MeshSource,
    #[serde(default)]
    pub whole_conductor: bool,
    pub medium: MediumConfig,
    /// Hard Dirichlet data on the outer boundary instead of the Robin term.
    #[serde(default)]
    pub dirichlet: bool,
    #[serde(default)]
    pub solver: SolveOptions<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct HalfLawConfig {
    pub command: Option<String>,
    pub output: Option<PathBuf>,
    pub mesh: MeshSource,
    #[serde(default)]
    pub whole_conductor: bool,
    pub medium: OneOrMany<MediumConfig>,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    /// Random nodal fields in `[0, 1]` checked against the exact lower bound.
    pub random_fields: Option<RandomFields>,
    #[serde(default)]
    pub solver: SolveOptions<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub command: Option<String>,
    pub output: Option<PathBuf>,
    pub mesh: MeshSource,
    pub p: f64,
    pub exponents: Exponents,
    #[serde(default)]
    pub solver: SolveOptions<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EigenConfig {
    pub command: Option<String>,
    pub output: Option<PathBuf>,
    pub mesh: MeshSource,
    pub p: OneOrMany<f64>,
    pub boundary: BoundaryCondition<f64>,
    /// Radial ball model whose 1-D eigenvalue is reported next to the 2-D one.
    pub oracle: Option<ModelParams<f64>>,
    /// Disk of equal area for the symmetrization comparison (Robin only).
    pub ball: Option<MeshSource>,
    #[serde(default)]
    pub solver: EigenOptions<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RecycleConfig {
    pub command: Option<String>,
    pub output: Option<PathBuf>,
    pub mesh: MeshSource,
    pub p: OneOrMany<f64>,
    pub boundary: BoundaryCondition<f64>,
    /// Smoother parameters for the Dirichlet witnesses.
    #[serde(default)]
    pub epsilons: Vec<f64>,
    /// Random positive fields checked against `Λ ≥ λ`.
    pub random_fields: Option<RandomFields>,
    #[serde(default)]
    pub solver: EigenOptions<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub command: Option<String>,
    pub output: Option<PathBuf>,
    pub mesh: MeshSource,
    pub model: ModelParams<f64>,
    pub delta: f64,
    pub p: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub psi: f64,
    #[serde(default)]
    pub solver: SolveOptions<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Quantity {
    Dispersion,
    Dirichlet,
    HalfLaw { epsilon: f64 },
    Eigen { boundary: BoundaryCondition<f64> },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Reference {
    Value(f64),
    /// `Φ·area(M) + Ψ·length(∂M)` of each refined mesh (`K = M`).
    WholeConductor,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub command: Option<String>,
    pub output: Option<PathBuf>,
    pub mesh: MeshSource,
    #[serde(default)]
    pub whole_conductor: bool,
    pub medium: MediumConfig,
    pub quantity: Quantity,
    pub levels: Vec<u32>,
    pub reference: Option<Reference>,
    #[serde(default)]
    pub solver: SolveOptions<f64>,
    #[serde(default)]
    pub eigen_solver: EigenOptions<f64>,
}

/// Parses `text` as `C`, naming the offending key on failure.
pub fn parse<C: DeserializeOwned>(text: &str, command: &str, path: &Path) -> Result<C> {
    let value: serde_json::Value =
        serde_json::from_str(text).with_context(|| format!("config {} is not valid JSON", path.display()))?;
    if let Some(c) = value.get("command") {
        if c.as_str() != Some(command) {
            bail!("config {} is for command {c}, not \"{command}\"", path.display());
        }
    }
    serde_json::from_value(value).map_err(|e| anyhow::anyhow!("config {}: {e}", path.display()))
}
