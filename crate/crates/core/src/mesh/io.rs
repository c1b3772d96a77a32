//! Plain-text mesh format.
//!
//! ```text
//! nv nt nbe
//! x y z            (nv lines)
//! i j k region     (nt lines, region 0 = insulator, 1 = conductor)
//! i j tag          (nbe lines)
//! ```

use std::io::{BufRead, Write};

use super::{BoundaryEdge, Region, TriMesh};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub fn write_mesh<T: Real, W: Write>(mesh: &TriMesh<T>, mut out: W) -> Result<()> {
    writeln!(
        out,
        "{} {} {}",
        mesh.n_vertices(),
        mesh.n_triangles(),
        mesh.boundary_edges().len()
    )?;
    for v in mesh.vertices() {
        writeln!(out, "{} {} {}", v[0], v[1], v[2])?;
    }
    for (t, r) in mesh.triangles().iter().zip(mesh.region()) {
        let tag = match r {
            Region::Insulator => 0,
            Region::Conductor => 1,
        };
        writeln!(out, "{} {} {} {}", t[0], t[1], t[2], tag)?;
    }
    for e in mesh.boundary_edges() {
        writeln!(out, "{} {} {}", e.a, e.b, e.tag)?;
    }
    Ok(())
}

struct Tokens<R> {
    reader: R,
    line: usize,
}

impl<R: BufRead> Tokens<R> {
    fn next_line(&mut self, expect: usize) -> Result<Vec<String>> {
        loop {
            let mut buf = String::new();
            if self.reader.read_line(&mut buf)? == 0 {
                return Err(Error::Parse {
                    line: self.line + 1,
                    msg: "unexpected end of file".into(),
                });
            }
            self.line += 1;
            let toks: Vec<String> = buf.split_whitespace().map(str::to_owned).collect();
            if toks.is_empty() {
                continue;
            }
            if toks.len() != expect {
                return Err(self.err(format!("expected {expect} fields, found {}", toks.len())));
            }
            return Ok(toks);
        }
    }

    fn err(&self, msg: String) -> Error {
        Error::Parse {
            line: self.line,
            msg,
        }
    }

    fn parse<V: std::str::FromStr>(&self, s: &str) -> Result<V> {
        s.parse().map_err(|_| self.err(format!("cannot parse `{s}`")))
    }
}

/// Reads a mesh and validates it. The ambient surface is taken as planar
/// (refinement will not project midpoints).
pub fn read_mesh<T: Real, R: BufRead>(reader: R) -> Result<TriMesh<T>> {
    let mut tk = Tokens { reader, line: 0 };
    let head = tk.next_line(3)?;
    let nv: usize = tk.parse(&head[0])?;
    let nt: usize = tk.parse(&head[1])?;
    let nbe: usize = tk.parse(&head[2])?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let l = tk.next_line(3)?;
        let mut v = [T::zero(); 3];
        for k in 0..3 {
            v[k] = T::lit(tk.parse::<f64>(&l[k])?);
        }
        vertices.push(v);
    }
    let mut triangles = Vec::with_capacity(nt);
    let mut region = Vec::with_capacity(nt);
    for _ in 0..nt {
        let l = tk.next_line(4)?;
        triangles.push([tk.parse(&l[0])?, tk.parse(&l[1])?, tk.parse(&l[2])?]);
        region.push(match tk.parse::<u8>(&l[3])? {
            0 => Region::Insulator,
            1 => Region::Conductor,
            r => return Err(tk.err(format!("region must be 0 or 1, found {r}"))),
        });
    }
    let mut boundary = Vec::with_capacity(nbe);
    for _ in 0..nbe {
        let l = tk.next_line(3)?;
        boundary.push(BoundaryEdge {
            a: tk.parse(&l[0])?,
            b: tk.parse(&l[1])?,
            tag: tk.parse(&l[2])?,
        });
    }
    TriMesh::new(vertices, triangles, boundary, region)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, ConductorSpec, Generator, MeshSpec};

    #[test]
    fn text_round_trip() {
        let spec = MeshSpec::new(
            Generator::Disk { radius: 2.0 },
            1,
            ConductorSpec::Disk { radius: 1.0 },
        );
        let m = generate::<f64>(&spec).unwrap();
        let mut buf = Vec::new();
        write_mesh(&m, &mut buf).unwrap();
        let back: TriMesh<f64> = read_mesh(buf.as_slice()).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.triangles(), m.triangles());
        assert_eq!(back.region(), m.region());
        assert_eq!(back.boundary_edges(), m.boundary_edges());
    }

    #[test]
    fn reports_bad_line() {
        let text = "3 1 3\n0 0 0\n1 0 0\n0 1\n0 1 2 0\n0 1 1\n1 2 1\n2 0 1\n";
        match read_mesh::<f64, _>(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }
}
