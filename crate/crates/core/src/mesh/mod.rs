//! Triangulated compact surfaces with boundary and a tagged conductor region.
//!
//! A [`TriMesh`] is immutable once built. Construction validates the manifold
//! invariants (edge multiplicity, orientation, positive areas, boundary
//! consistency, edge-connected conductor) and caches the per-triangle metric
//! used by the P1 assembly routines.

mod generate;
mod io;
mod level;
mod refine;

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use generate::{generate, ConductorSpec, Generator, MeshSpec};
pub use io::{read_mesh, write_mesh};
pub use level::{level_set_segments, LevelPolyline, LevelSegment};
pub use refine::refine;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    Insulator,
    Conductor,
}

/// Ambient surface the vertices live on. Refinement projects new vertices
/// back onto a sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Surface<T> {
    Planar,
    Sphere { radius: T },
}

/// Circle carrying all boundary edges with a given tag (planar meshes only).
/// Refinement places boundary midpoints on it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryCircle<T> {
    pub tag: i32,
    pub center: [T; 2],
    pub radius: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub tag: i32,
}

/// Intrinsic P1 data of one triangle: area and the inverse of the edge Gram
/// matrix `[[e1.e1, e1.e2], [e1.e2, e2.e2]]`, stored as `[g00, g01, g11]`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct TriGeometry<T> {
    pub area: T,
    pub ginv: [T; 3],
}

#[derive(Clone, Debug)]
pub struct TriMesh<T> {
    vertices: Vec<[T; 3]>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    region: Vec<Region>,
    surface: Surface<T>,
    circles: Vec<BoundaryCircle<T>>,
    geometry: Vec<TriGeometry<T>>,
    conductor_vertex: Vec<bool>,
    boundary_vertex: Vec<bool>,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn sub<T: Real>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot<T: Real>(a: [T; 3], b: [T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross<T: Real>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn distance<T: Real>(a: [T; 3], b: [T; 3]) -> T {
    let d = sub(a, b);
    dot(d, d).sqrt()
}

impl<T: Real> TriMesh<T> {
    /// Builds and validates a mesh. The boundary edge list must match the
    /// edges incident to exactly one triangle.
    pub fn new(
        vertices: Vec<[T; 3]>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
        region: Vec<Region>,
    ) -> Result<Self> {
        Self::with_surface(
            vertices,
            triangles,
            boundary_edges,
            region,
            Surface::Planar,
            Vec::new(),
        )
    }

    pub(crate) fn with_surface(
        vertices: Vec<[T; 3]>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
        region: Vec<Region>,
        surface: Surface<T>,
        circles: Vec<BoundaryCircle<T>>,
    ) -> Result<Self> {
        if region.len() != triangles.len() {
            return Err(Error::DimensionMismatch {
                expected: triangles.len(),
                got: region.len(),
            });
        }
        let nv = vertices.len();
        let mut geometry = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= nv) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} references a missing vertex"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!("triangle {t} repeats a vertex")));
            }
            let x0 = vertices[tri[0]];
            let e1 = sub(vertices[tri[1]], x0);
            let e2 = sub(vertices[tri[2]], x0);
            let g00 = dot(e1, e1);
            let g01 = dot(e1, e2);
            let g11 = dot(e2, e2);
            let det = g00 * g11 - g01 * g01;
            let area = det.max(T::zero()).sqrt() * T::lit(0.5);
            if !(area > T::zero()) || !area.is_finite() {
                return Err(Error::InvalidMesh(format!("triangle {t} has zero area")));
            }
            let n = cross(e1, e2);
            let facing = match surface {
                Surface::Planar if vertices.iter().all(|v| v[2] == T::zero()) => n[2],
                Surface::Planar => T::one(),
                Surface::Sphere { .. } => dot(n, x0),
            };
            if facing <= T::zero() {
                return Err(Error::InvalidMesh(format!("triangle {t} is inverted")));
            }
            geometry.push(TriGeometry {
                area,
                ginv: [g11 / det, -g01 / det, g00 / det],
            });
        }

        // Directed edge multiplicity: each directed edge at most once, each
        // undirected edge in one or two triangles.
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if directed.insert((a, b), t).is_some() {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({a}, {b}) oriented inconsistently or shared by more than two triangles"
                    )));
                }
            }
        }
        let mut open: Vec<(usize, usize)> = directed
            .keys()
            .filter(|&&(a, b)| !directed.contains_key(&(b, a)))
            .map(|&(a, b)| edge_key(a, b))
            .collect();
        open.sort_unstable();
        let mut given: Vec<(usize, usize)> = boundary_edges
            .iter()
            .map(|e| edge_key(e.a, e.b))
            .collect();
        given.sort_unstable();
        if given != open {
            return Err(Error::InvalidMesh(format!(
                "boundary edge list ({} edges) does not match the {} edges of a single triangle",
                given.len(),
                open.len()
            )));
        }

        let mut conductor_vertex = vec![false; nv];
        for (tri, r) in triangles.iter().zip(&region) {
            if *r == Region::Conductor {
                for &i in tri {
                    conductor_vertex[i] = true;
                }
            }
        }
        let mut boundary_vertex = vec![false; nv];
        for e in &boundary_edges {
            boundary_vertex[e.a] = true;
            boundary_vertex[e.b] = true;
        }

        let mesh = TriMesh {
            vertices,
            triangles,
            boundary_edges,
            region,
            surface,
            circles,
            geometry,
            conductor_vertex,
            boundary_vertex,
        };
        mesh.check_conductor_connected()?;
        Ok(mesh)
    }

    fn check_conductor_connected(&self) -> Result<()> {
        let cond: Vec<usize> = (0..self.triangles.len())
            .filter(|&t| self.region[t] == Region::Conductor)
            .collect();
        if cond.is_empty() {
            return Ok(());
        }
        let mut by_edge: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for &t in &cond {
            let tri = self.triangles[t];
            for k in 0..3 {
                by_edge
                    .entry(edge_key(tri[k], tri[(k + 1) % 3]))
                    .or_default()
                    .push(t);
            }
        }
        let mut seen: HashMap<usize, bool> = cond.iter().map(|&t| (t, false)).collect();
        let mut queue = VecDeque::from([cond[0]]);
        seen.insert(cond[0], true);
        let mut count = 1;
        while let Some(t) = queue.pop_front() {
            let tri = self.triangles[t];
            for k in 0..3 {
                for &u in &by_edge[&edge_key(tri[k], tri[(k + 1) % 3])] {
                    if let Some(s) = seen.get_mut(&u) {
                        if !*s {
                            *s = true;
                            count += 1;
                            queue.push_back(u);
                        }
                    }
                }
            }
        }
        if count != cond.len() {
            return Err(Error::InvalidMesh(
                "conductor region is not edge-connected".into(),
            ));
        }
        Ok(())
    }

    /// Same geometry with a new region labelling.
    pub fn with_regions(&self, region: Vec<Region>) -> Result<Self> {
        Self::with_surface(
            self.vertices.clone(),
            self.triangles.clone(),
            self.boundary_edges.clone(),
            region,
            self.surface,
            self.circles.clone(),
        )
    }

    /// Same geometry with every triangle in the conductor (the `K = M` case).
    pub fn with_whole_conductor(&self) -> Result<Self> {
        self.with_regions(vec![Region::Conductor; self.triangles.len()])
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[[T; 3]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn region(&self) -> &[Region] {
        &self.region
    }

    pub fn surface(&self) -> Surface<T> {
        self.surface
    }

    pub fn boundary_circles(&self) -> &[BoundaryCircle<T>] {
        &self.circles
    }

    pub(crate) fn geometry(&self) -> &[TriGeometry<T>] {
        &self.geometry
    }

    pub fn triangle_area(&self, t: usize) -> T {
        self.geometry[t].area
    }

    pub fn is_conductor_vertex(&self, i: usize) -> bool {
        self.conductor_vertex[i]
    }

    pub fn is_boundary_vertex(&self, i: usize) -> bool {
        self.boundary_vertex[i]
    }

    pub fn conductor_vertices(&self) -> Vec<usize> {
        (0..self.n_vertices())
            .filter(|&i| self.conductor_vertex[i])
            .collect()
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.n_vertices())
            .filter(|&i| self.boundary_vertex[i])
            .collect()
    }

    pub fn has_conductor(&self) -> bool {
        self.region.contains(&Region::Conductor)
    }

    pub fn total_area(&self) -> T {
        self.geometry.iter().map(|g| g.area).sum()
    }

    /// Area of the conductor triangles.
    pub fn conductor_area(&self) -> T {
        self.geometry
            .iter()
            .zip(&self.region)
            .filter(|(_, r)| **r == Region::Conductor)
            .map(|(g, _)| g.area)
            .sum()
    }

    pub fn edge_length(&self, a: usize, b: usize) -> T {
        distance(self.vertices[a], self.vertices[b])
    }

    pub fn boundary_length(&self) -> T {
        self.boundary_edges
            .iter()
            .map(|e| self.edge_length(e.a, e.b))
            .sum()
    }

    /// Diagonal of the axis-aligned bounding box.
    pub fn diameter(&self) -> T {
        let mut lo = [T::infinity(); 3];
        let mut hi = [T::neg_infinity(); 3];
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        distance(lo, hi)
    }

    /// Longest edge length.
    pub fn max_edge_length(&self) -> T {
        let mut h = T::zero();
        for tri in &self.triangles {
            for k in 0..3 {
                h = h.max(self.edge_length(tri[k], tri[(k + 1) % 3]));
            }
        }
        h
    }

    /// Sorted vertex neighbour lists (each list includes the vertex itself).
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj: Vec<Vec<usize>> = (0..self.n_vertices()).map(|i| vec![i]).collect();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
        }
        adj
    }
}
