use super::{distance, TriMesh};
use crate::error::{Error, Result};
use crate::field::NodalField;
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct LevelSegment<T> {
    pub a: [T; 3],
    pub b: [T; 3],
    pub length: T,
    pub triangle: usize,
}

/// The level set `{f = t}` of a P1 field, one segment per crossed triangle.
#[derive(Clone, Debug, Default)]
pub struct LevelPolyline<T> {
    pub segments: Vec<LevelSegment<T>>,
}

impl<T: Real> LevelPolyline<T> {
    pub fn total_length(&self) -> T {
        self.segments.iter().map(|s| s.length).sum()
    }
}

/// Extracts `{f = t}` from the piecewise-linear interpolant of `f`.
///
/// Vertices with `f == t` count as lying below the level, so a segment that
/// runs along a mesh edge is reported by exactly one of its two triangles.
pub fn level_set_segments<T: Real>(
    mesh: &TriMesh<T>,
    f: &NodalField<T>,
    t: T,
) -> Result<LevelPolyline<T>> {
    f.check_len(mesh.n_vertices())?;
    let (lo, hi) = f.range();
    if !(lo < t && t < hi) {
        return Err(Error::LevelEmpty {
            t: t.as_f64(),
            min: lo.as_f64(),
            max: hi.as_f64(),
        });
    }
    let x = mesh.vertices();
    let mut segments = Vec::new();
    for (k, tri) in mesh.triangles().iter().enumerate() {
        let above = tri.map(|i| f[i] > t);
        let n_above = above.iter().filter(|&&a| a).count();
        if n_above == 0 || n_above == 3 {
            continue;
        }
        let mut pts = Vec::with_capacity(2);
        for e in 0..3 {
            let (i, j) = (tri[e], tri[(e + 1) % 3]);
            if above[e] != above[(e + 1) % 3] {
                let s = (t - f[i]) / (f[j] - f[i]);
                let (pi, pj) = (x[i], x[j]);
                pts.push([
                    pi[0] + s * (pj[0] - pi[0]),
                    pi[1] + s * (pj[1] - pi[1]),
                    pi[2] + s * (pj[2] - pi[2]),
                ]);
            }
        }
        let length = distance(pts[0], pts[1]);
        if length > T::zero() {
            segments.push(LevelSegment {
                a: pts[0],
                b: pts[1],
                length,
                triangle: k,
            });
        }
    }
    Ok(LevelPolyline { segments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, ConductorSpec, Generator, MeshSpec};
    use std::f64::consts::PI;

    fn square(level: u32) -> TriMesh<f64> {
        generate(&MeshSpec::new(Generator::Square { side: 1.0 }, level, ConductorSpec::None))
            .unwrap()
    }

    #[test]
    fn chord_of_linear_field_is_exact() {
        let m = square(1);
        let f = NodalField::from_fn(&m, |v| v[0]);
        for t in [0.5, 0.125, 0.3, 0.77] {
            let len = level_set_segments(&m, &f, t).unwrap().total_length();
            assert!((len - 1.0).abs() < 1e-14, "t = {t}: {len}");
        }
    }

    #[test]
    fn constant_field_has_no_level() {
        let m = square(0);
        let f = NodalField::constant(m.n_vertices(), 0.5);
        assert!(matches!(
            level_set_segments(&m, &f, 0.5),
            Err(Error::LevelEmpty { .. })
        ));
    }

    #[test]
    fn radial_level_approaches_circle() {
        let mut err = f64::INFINITY;
        for level in 1..4 {
            let spec = MeshSpec::new(
                Generator::Annulus { inner: 1.0, outer: 2.0 },
                level,
                ConductorSpec::None,
            );
            let m: TriMesh<f64> = generate(&spec).unwrap();
            let f = NodalField::from_fn(&m, |v| (v[0] * v[0] + v[1] * v[1]).sqrt());
            let len = level_set_segments(&m, &f, 1.5).unwrap().total_length();
            let e = (len - 3.0 * PI).abs();
            assert!(e < err);
            err = e;
        }
        assert!(err / (3.0 * PI) < 1e-3);
    }
}
