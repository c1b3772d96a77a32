use std::collections::HashMap;

use super::{edge_key, BoundaryEdge, Surface, TriMesh};
use crate::error::Result;
use crate::scalar::Real;

/// Uniform 1-to-4 split through edge midpoints.
///
/// Midpoints are projected onto the sphere for spherical meshes, and onto the
/// carrying circle for boundary edges whose tag has one. Regions and boundary
/// tags are inherited.
pub fn refine<T: Real>(mesh: &TriMesh<T>) -> Result<TriMesh<T>> {
    let mut vertices = mesh.vertices.clone();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let half = T::lit(0.5);

    let mut circle_of_edge = HashMap::new();
    for e in &mesh.boundary_edges {
        if let Some(c) = mesh.circles.iter().find(|c| c.tag == e.tag) {
            circle_of_edge.insert(edge_key(e.a, e.b), *c);
        }
    }

    let mut mid = |a: usize, b: usize, vertices: &mut Vec<[T; 3]>| -> usize {
        let key = edge_key(a, b);
        if let Some(&m) = midpoint.get(&key) {
            return m;
        }
        let (pa, pb) = (vertices[a], vertices[b]);
        let mut p = [
            (pa[0] + pb[0]) * half,
            (pa[1] + pb[1]) * half,
            (pa[2] + pb[2]) * half,
        ];
        match mesh.surface {
            Surface::Sphere { radius } => {
                let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                for x in &mut p {
                    *x = *x * radius / r;
                }
            }
            Surface::Planar => {
                if let Some(c) = circle_of_edge.get(&key) {
                    let d = [p[0] - c.center[0], p[1] - c.center[1]];
                    let r = (d[0] * d[0] + d[1] * d[1]).sqrt();
                    p[0] = c.center[0] + d[0] * c.radius / r;
                    p[1] = c.center[1] + d[1] * c.radius / r;
                }
            }
        }
        vertices.push(p);
        let m = vertices.len() - 1;
        midpoint.insert(key, m);
        m
    };

    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    let mut region = Vec::with_capacity(4 * mesh.triangles.len());
    for (tri, r) in mesh.triangles.iter().zip(&mesh.region) {
        let [a, b, c] = *tri;
        let ab = mid(a, b, &mut vertices);
        let bc = mid(b, c, &mut vertices);
        let ca = mid(c, a, &mut vertices);
        triangles.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        region.extend_from_slice(&[*r; 4]);
    }
    let mut boundary = Vec::with_capacity(2 * mesh.boundary_edges.len());
    for e in &mesh.boundary_edges {
        let m = mid(e.a, e.b, &mut vertices);
        boundary.push(BoundaryEdge { a: e.a, b: m, tag: e.tag });
        boundary.push(BoundaryEdge { a: m, b: e.b, tag: e.tag });
    }
    TriMesh::with_surface(
        vertices,
        triangles,
        boundary,
        region,
        mesh.surface,
        mesh.circles.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, ConductorSpec, Generator, MeshSpec, Region};
    use std::f64::consts::PI;

    #[test]
    fn square_area_is_preserved() {
        let spec = MeshSpec::new(Generator::Square { side: 1.0 }, 0, ConductorSpec::None);
        let m: TriMesh<f64> = generate(&spec).unwrap();
        let r = refine(&m).unwrap();
        assert_eq!(r.n_triangles(), 4 * m.n_triangles());
        assert_eq!(r.boundary_edges().len(), 2 * m.boundary_edges().len());
        assert!((r.total_area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn region_partition_is_preserved() {
        let spec = MeshSpec::new(
            Generator::Square { side: 1.0 },
            1,
            ConductorSpec::Disk { radius: 0.3 },
        );
        let m: TriMesh<f64> = generate(&spec).unwrap();
        let r = refine(&m).unwrap();
        assert!((r.conductor_area() - m.conductor_area()).abs() < 1e-15);
        let n_cond = |m: &TriMesh<f64>| m.region().iter().filter(|&&x| x == Region::Conductor).count();
        assert_eq!(n_cond(&r), 4 * n_cond(&m));
    }

    #[test]
    fn disk_perimeter_increases_toward_circle() {
        let spec = MeshSpec::new(Generator::Disk { radius: 1.5 }, 0, ConductorSpec::None);
        let mut m = generate(&spec).unwrap();
        let mut len = m.boundary_length();
        for _ in 0..3 {
            m = refine(&m).unwrap();
            let next = m.boundary_length();
            // inscribed polygon with twice the sides
            let sides = m.boundary_edges().len() as f64;
            let inscribed = sides * 2.0 * 1.5 * (PI / sides).sin();
            assert!(next > len);
            assert!((next - inscribed).abs() < 1e-12);
            len = next;
        }
        assert!(len < 2.0 * PI * 1.5);
    }

    #[test]
    fn sphere_refinement_stays_on_sphere() {
        let spec = MeshSpec::new(
            Generator::SphericalCap { max_angle: PI / 2.0 },
            0,
            ConductorSpec::None,
        );
        let mut m = generate(&spec).unwrap();
        let mut last = m.boundary_length();
        for _ in 0..2 {
            m = refine(&m).unwrap();
            for v in m.vertices() {
                assert!(((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() - 1.0).abs() < 1e-14);
            }
            assert!(m.boundary_length() > last);
            last = m.boundary_length();
        }
        assert!((last - 2.0 * PI).abs() < 0.01);
    }
}
