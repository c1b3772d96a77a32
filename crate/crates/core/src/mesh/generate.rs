//! Structured, deterministic mesh generators.
//!
//! Disks and spherical caps use concentric rings with `6k` vertices on ring
//! `k`; annuli, squares with holes and squares use tensor-product layers
//! split into triangles with alternating diagonals. The ring count doubles
//! with each resolution level, so the triangle count grows by four.

use serde::{Deserialize, Serialize};

use super::{BoundaryCircle, BoundaryEdge, Region, Surface, TriMesh};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator<T> {
    Disk { radius: T },
    Annulus { inner: T, outer: T },
    /// `[0, side]^2`.
    Square { side: T },
    /// `[-side/2, side/2]^2` minus a centred disk.
    SquareWithHole { side: T, hole_radius: T },
    /// Cap `{polar angle <= max_angle}` of the unit sphere.
    SphericalCap { max_angle: T },
}

/// Conductor descriptor. Radii are measured from the domain centre; a
/// triangle belongs to the conductor when all three vertices satisfy the
/// descriptor.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ConductorSpec<T> {
    #[default]
    None,
    Disk {
        radius: T,
    },
    Band {
        inner: T,
        outer: T,
    },
    Cap {
        angle: T,
    },
    Vertices(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec<T> {
    pub generator: Generator<T>,
    #[serde(default)]
    pub resolution: u32,
    #[serde(default)]
    pub conductor: ConductorSpec<T>,
}

impl<T: Real> MeshSpec<T> {
    pub fn new(generator: Generator<T>, resolution: u32, conductor: ConductorSpec<T>) -> Self {
        MeshSpec {
            generator,
            resolution,
            conductor,
        }
    }

    fn validate(&self) -> Result<()> {
        let pos = |x: T, what: &str| {
            if x > T::zero() && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{what} must be positive")))
            }
        };
        match self.generator {
            Generator::Disk { radius } => pos(radius, "radius")?,
            Generator::Annulus { inner, outer } => {
                pos(inner, "inner radius")?;
                pos(outer - inner, "outer - inner")?;
            }
            Generator::Square { side } => pos(side, "side")?,
            Generator::SquareWithHole { side, hole_radius } => {
                pos(hole_radius, "hole radius")?;
                pos(side * T::lit(0.5) - hole_radius, "side/2 - hole radius")?;
            }
            Generator::SphericalCap { max_angle } => {
                pos(max_angle, "cap angle")?;
                pos(T::PI() - max_angle, "pi - cap angle")?;
            }
        }
        if self.resolution > 8 {
            return Err(Error::InvalidSpec("resolution above 8".into()));
        }
        match (&self.generator, &self.conductor) {
            (_, ConductorSpec::None) | (_, ConductorSpec::Vertices(_)) => Ok(()),
            (Generator::SphericalCap { max_angle }, ConductorSpec::Cap { angle }) => {
                pos(*angle, "conductor angle")?;
                pos(*max_angle - *angle, "cap angle - conductor angle")
            }
            (Generator::SphericalCap { .. }, _) | (_, ConductorSpec::Cap { .. }) => Err(
                Error::InvalidSpec("cap conductors pair with spherical caps only".into()),
            ),
            (_, ConductorSpec::Disk { radius }) => pos(*radius, "conductor radius"),
            (_, ConductorSpec::Band { inner, outer }) => {
                pos(*inner, "band inner radius")?;
                pos(*outer - *inner, "band width")
            }
        }
    }
}

/// Builds the mesh described by `spec`.
pub fn generate<T: Real>(spec: &MeshSpec<T>) -> Result<TriMesh<T>> {
    spec.validate()?;
    let level = 1usize << spec.resolution;
    let (vertices, triangles, boundary, surface, circles, center) = match spec.generator {
        Generator::Disk { radius } => {
            let rings = aligned_rings(radius, conductor_radius(&spec.conductor)) * level;
            let (v, t, b) = ring_disk(rings, |k, j, m| {
                let r = radius * T::lit(k as f64 / rings as f64);
                let phi = T::lit(2.0 * std::f64::consts::PI * j as f64 / m as f64);
                [r * phi.cos(), r * phi.sin(), T::zero()]
            });
            let circle = BoundaryCircle {
                tag: 1,
                center: [T::zero(); 2],
                radius,
            };
            (v, t, b, Surface::Planar, vec![circle], [T::zero(); 3])
        }
        Generator::SphericalCap { max_angle } => {
            let k_angle = match spec.conductor {
                ConductorSpec::Cap { angle } => Some(angle),
                _ => None,
            };
            let rings = aligned_rings(max_angle, k_angle) * level;
            let (v, t, b) = ring_disk(rings, |k, j, m| {
                let th = max_angle * T::lit(k as f64 / rings as f64);
                let phi = T::lit(2.0 * std::f64::consts::PI * j as f64 / m as f64);
                [th.sin() * phi.cos(), th.sin() * phi.sin(), th.cos()]
            });
            let surface = Surface::Sphere { radius: T::one() };
            (v, t, b, surface, Vec::new(), [T::zero(), T::zero(), T::one()])
        }
        Generator::Annulus { inner, outer } => {
            let layers = 2 * level;
            let width = (outer - inner).as_f64();
            let mean_circ = std::f64::consts::PI * (inner + outer).as_f64();
            let m0 = ((mean_circ / (width / 2.0) / 4.0).ceil() as usize * 4).max(8);
            let sectors = m0 * level;
            let (v, t, b) = layered_ring(layers, sectors, |j, i| {
                let r = inner + (outer - inner) * T::lit(j as f64 / layers as f64);
                let phi = T::lit(2.0 * std::f64::consts::PI * i as f64 / sectors as f64);
                [r * phi.cos(), r * phi.sin(), T::zero()]
            });
            let circles = vec![
                BoundaryCircle {
                    tag: 1,
                    center: [T::zero(); 2],
                    radius: outer,
                },
                BoundaryCircle {
                    tag: 2,
                    center: [T::zero(); 2],
                    radius: inner,
                },
            ];
            (v, t, b, Surface::Planar, circles, [T::zero(); 3])
        }
        Generator::SquareWithHole { side, hole_radius } => {
            let layers = 4 * level;
            let sectors = 32 * level;
            let half = side * T::lit(0.5);
            let (v, t, b) = layered_ring(layers, sectors, |j, i| {
                let rho = T::lit(j as f64 / layers as f64);
                let phi = T::lit(2.0 * std::f64::consts::PI * i as f64 / sectors as f64);
                let (s, c) = phi.sin_cos();
                let to_square = half / c.abs().max(s.abs());
                let r = (T::one() - rho) * hole_radius + rho * to_square;
                [r * c, r * s, T::zero()]
            });
            let circles = vec![BoundaryCircle {
                tag: 2,
                center: [T::zero(); 2],
                radius: hole_radius,
            }];
            (v, t, b, Surface::Planar, circles, [T::zero(); 3])
        }
        Generator::Square { side } => {
            let n = 4 * level;
            let (v, t, b) = square_grid(n, side);
            let half = side * T::lit(0.5);
            (v, t, b, Surface::Planar, Vec::new(), [half, half, T::zero()])
        }
    };

    let region = classify(&spec.conductor, &vertices, &triangles, center, surface)?;
    let mesh = TriMesh::with_surface(vertices, triangles, boundary, region, surface, circles)?;
    if !matches!(spec.conductor, ConductorSpec::None) {
        if !mesh.has_conductor() {
            return Err(Error::InvalidSpec(
                "conductor descriptor selects no triangle at this resolution".into(),
            ));
        }
        if mesh
            .conductor_vertices()
            .iter()
            .any(|&i| mesh.is_boundary_vertex(i))
        {
            return Err(Error::InvalidSpec("conductor touches the boundary".into()));
        }
    }
    Ok(mesh)
}

fn conductor_radius<T: Real>(c: &ConductorSpec<T>) -> Option<T> {
    match c {
        ConductorSpec::Disk { radius } => Some(*radius),
        _ => None,
    }
}

/// Smallest base ring count >= 4 that puts a ring exactly on the conductor
/// interface, falling back to 4.
fn aligned_rings<T: Real>(extent: T, interface: Option<T>) -> usize {
    let Some(r) = interface else { return 4 };
    let frac = (r / extent).as_f64();
    (4..=64)
        .find(|&n| {
            let x = frac * n as f64;
            (x - x.round()).abs() < 1e-9
        })
        .unwrap_or(4)
}

type Parts<T> = (Vec<[T; 3]>, Vec<[usize; 3]>, Vec<BoundaryEdge>);

/// Centre vertex plus `rings` rings, ring `k` holding `6k` vertices placed by
/// `pos(k, j, 6k)`. Layers are zipped by angle.
fn ring_disk<T: Real>(rings: usize, pos: impl Fn(usize, usize, usize) -> [T; 3]) -> Parts<T> {
    let mut vertices = vec![pos(0, 0, 1)];
    let mut start = vec![0usize];
    for k in 1..=rings {
        start.push(vertices.len());
        for j in 0..6 * k {
            vertices.push(pos(k, j, 6 * k));
        }
    }
    let idx = |k: usize, j: usize| {
        if k == 0 {
            0
        } else {
            start[k] + j % (6 * k)
        }
    };
    let mut triangles = Vec::with_capacity(6 * rings * rings);
    for k in 1..=rings {
        let m_in = 6 * (k - 1);
        let m_out = 6 * k;
        if k == 1 {
            for j in 0..m_out {
                triangles.push([0, idx(1, j), idx(1, j + 1)]);
            }
            continue;
        }
        let (mut a, mut b) = (0usize, 0usize);
        while a < m_in || b < m_out {
            // Compare the next angles as exact fractions (a+1)/m_in vs (b+1)/m_out.
            let advance_inner = b == m_out || (a < m_in && (a + 1) * m_out < (b + 1) * m_in);
            if advance_inner {
                triangles.push([idx(k - 1, a), idx(k, b), idx(k - 1, a + 1)]);
                a += 1;
            } else {
                triangles.push([idx(k - 1, a), idx(k, b), idx(k, b + 1)]);
                b += 1;
            }
        }
    }
    let boundary = (0..6 * rings)
        .map(|j| BoundaryEdge {
            a: idx(rings, j),
            b: idx(rings, j + 1),
            tag: 1,
        })
        .collect();
    (vertices, triangles, boundary)
}

/// `layers + 1` closed rings of `sectors` vertices; ring 0 is the inner
/// boundary (tag 2), the last ring the outer boundary (tag 1).
fn layered_ring<T: Real>(
    layers: usize,
    sectors: usize,
    pos: impl Fn(usize, usize) -> [T; 3],
) -> Parts<T> {
    let mut vertices = Vec::with_capacity((layers + 1) * sectors);
    for j in 0..=layers {
        for i in 0..sectors {
            vertices.push(pos(j, i));
        }
    }
    let idx = |j: usize, i: usize| j * sectors + i % sectors;
    let mut triangles = Vec::with_capacity(2 * layers * sectors);
    for j in 0..layers {
        for i in 0..sectors {
            let (v00, v01, v10, v11) = (idx(j, i), idx(j, i + 1), idx(j + 1, i), idx(j + 1, i + 1));
            if (i + j) % 2 == 0 {
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            } else {
                triangles.push([v00, v10, v01]);
                triangles.push([v01, v10, v11]);
            }
        }
    }
    let mut boundary = Vec::with_capacity(2 * sectors);
    for i in 0..sectors {
        boundary.push(BoundaryEdge {
            a: idx(layers, i),
            b: idx(layers, i + 1),
            tag: 1,
        });
    }
    for i in 0..sectors {
        boundary.push(BoundaryEdge {
            a: idx(0, i + 1),
            b: idx(0, i),
            tag: 2,
        });
    }
    (vertices, triangles, boundary)
}

fn square_grid<T: Real>(n: usize, side: T) -> Parts<T> {
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([
                side * T::lit(i as f64 / n as f64),
                side * T::lit(j as f64 / n as f64),
                T::zero(),
            ]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    let mut boundary = Vec::with_capacity(4 * n);
    let mut push = |a, b| boundary.push(BoundaryEdge { a, b, tag: 1 });
    for i in 0..n {
        push(idx(i, 0), idx(i + 1, 0));
    }
    for j in 0..n {
        push(idx(n, j), idx(n, j + 1));
    }
    for i in (0..n).rev() {
        push(idx(i + 1, n), idx(i, n));
    }
    for j in (0..n).rev() {
        push(idx(0, j + 1), idx(0, j));
    }
    (vertices, triangles, boundary)
}

fn classify<T: Real>(
    spec: &ConductorSpec<T>,
    vertices: &[[T; 3]],
    triangles: &[[usize; 3]],
    center: [T; 3],
    surface: Surface<T>,
) -> Result<Vec<Region>> {
    let tol = T::lit(1e-9);
    let radial = |v: [T; 3]| {
        let d = [v[0] - center[0], v[1] - center[1]];
        (d[0] * d[0] + d[1] * d[1]).sqrt()
    };
    let polar = |v: [T; 3]| match surface {
        Surface::Sphere { radius } => (v[2] / radius).max(-T::one()).min(T::one()).acos(),
        Surface::Planar => radial(v),
    };
    let inside: Box<dyn Fn(usize) -> bool> = match spec {
        ConductorSpec::None => Box::new(|_| false),
        ConductorSpec::Disk { radius } => {
            let r = *radius;
            Box::new(move |i| radial(vertices[i]) <= r * (T::one() + tol))
        }
        ConductorSpec::Band { inner, outer } => {
            let (a, b) = (*inner, *outer);
            Box::new(move |i| {
                let r = radial(vertices[i]);
                r >= a * (T::one() - tol) && r <= b * (T::one() + tol)
            })
        }
        ConductorSpec::Cap { angle } => {
            let a = *angle;
            Box::new(move |i| polar(vertices[i]) <= a * (T::one() + tol))
        }
        ConductorSpec::Vertices(list) => {
            let mut mark = vec![false; vertices.len()];
            for &i in list {
                if i >= vertices.len() {
                    return Err(Error::InvalidSpec(format!("conductor vertex {i} out of range")));
                }
                mark[i] = true;
            }
            Box::new(move |i| mark[i])
        }
    };
    Ok(triangles
        .iter()
        .map(|tri| {
            if tri.iter().all(|&i| inside(i)) {
                Region::Conductor
            } else {
                Region::Insulator
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn disk(r: f64, level: u32, c: ConductorSpec<f64>) -> TriMesh<f64> {
        generate(&MeshSpec::new(Generator::Disk { radius: r }, level, c)).unwrap()
    }

    #[test]
    fn coarse_disk_perimeter() {
        let m = disk(1.0, 0, ConductorSpec::None);
        assert!(m.n_triangles() >= 8);
        let len = m.boundary_length();
        assert!((len - 2.0 * PI).abs() / (2.0 * PI) < 0.05, "{len}");
    }

    #[test]
    fn triangle_count_quadruples() {
        let a = disk(1.0, 1, ConductorSpec::None).n_triangles();
        let b = disk(1.0, 2, ConductorSpec::None).n_triangles();
        assert_eq!(4 * a, b);
    }

    #[test]
    fn annulus_area_converges() {
        let mut last = f64::INFINITY;
        for level in 0..4 {
            let spec = MeshSpec::new(
                Generator::Annulus {
                    inner: 1.0,
                    outer: 2.0,
                },
                level,
                ConductorSpec::None,
            );
            let err = (generate(&spec).unwrap().total_area() - 3.0 * PI).abs();
            assert!(err < last);
            last = err;
        }
        assert!(last / (3.0 * PI) < 1e-3);
    }

    #[test]
    fn hemisphere_boundary_is_great_circle() {
        let spec = MeshSpec::new(
            Generator::SphericalCap {
                max_angle: PI / 2.0,
            },
            3,
            ConductorSpec::Cap { angle: PI / 6.0 },
        );
        let m = generate(&spec).unwrap();
        assert!((m.boundary_length() - 2.0 * PI).abs() < 2.0 * PI * 1e-3);
        for v in m.vertices() {
            let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            assert!((r - 1.0).abs() < 1e-14);
        }
        // polar cap area 2 pi (1 - cos theta_K), polygonal from inside
        let exact = 2.0 * PI * (1.0 - (PI / 6.0).cos());
        let k = m.conductor_area();
        assert!(k < exact && k > 0.97 * exact, "{k} vs {exact}");
    }

    #[test]
    fn conductor_rings_are_aligned() {
        let m = disk(2.0, 2, ConductorSpec::Disk { radius: 1.0 });
        for &i in &m.conductor_vertices() {
            let v = m.vertices()[i];
            assert!((v[0] * v[0] + v[1] * v[1]).sqrt() <= 1.0 + 1e-12);
        }
        // interface ring radius 1 has 6 * (rings/2) vertices
        let rings = 4 * 4;
        let on_interface = m
            .conductor_vertices()
            .iter()
            .filter(|&&i| {
                let v = m.vertices()[i];
                ((v[0] * v[0] + v[1] * v[1]).sqrt() - 1.0).abs() < 1e-12
            })
            .count();
        assert_eq!(on_interface, 6 * rings / 2);
    }

    #[test]
    fn rejects_conductor_touching_boundary() {
        let spec = MeshSpec::new(
            Generator::Disk { radius: 1.0 },
            0,
            ConductorSpec::Disk { radius: 1.0 },
        );
        assert!(matches!(generate(&spec), Err(Error::InvalidSpec(_))));
        let spec = MeshSpec::new(
            Generator::Annulus {
                inner: 1.0,
                outer: 2.0,
            },
            1,
            ConductorSpec::Band {
                inner: 0.5,
                outer: 1.5,
            },
        );
        assert!(matches!(generate(&spec), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn rejects_nonpositive_sizes() {
        for g in [
            Generator::Disk { radius: 0.0 },
            Generator::Annulus {
                inner: 2.0,
                outer: 1.0,
            },
            Generator::Square { side: -1.0 },
            Generator::SquareWithHole {
                side: 1.0,
                hole_radius: 0.6,
            },
        ] {
            let spec = MeshSpec::new(g, 0, ConductorSpec::None);
            assert!(matches!(generate(&spec), Err(Error::InvalidSpec(_))));
        }
    }

    #[test]
    fn square_with_hole_area() {
        let spec = MeshSpec::new(
            Generator::SquareWithHole {
                side: 2.0,
                hole_radius: 0.5,
            },
            2,
            ConductorSpec::Band {
                inner: 0.6,
                outer: 0.95,
            },
        );
        let m = generate(&spec).unwrap();
        let exact = 4.0 - PI * 0.25;
        assert!((m.total_area() - exact).abs() / exact < 2e-3);
        assert!(m.has_conductor());
    }
}
