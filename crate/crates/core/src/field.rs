use std::io::{BufRead, Write};
use std::ops::{Index, IndexMut};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::scalar::Real;

/// One value per mesh vertex, interpreted as a piecewise-linear field.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct NodalField<T>(pub Vec<T>);

impl<T: Real> NodalField<T> {
    pub fn constant(n: usize, value: T) -> Self {
        NodalField(vec![value; n])
    }

    pub fn zeros(n: usize) -> Self {
        Self::constant(n, T::zero())
    }

    pub fn from_fn(mesh: &TriMesh<T>, f: impl Fn([T; 3]) -> T) -> Self {
        NodalField(mesh.vertices().iter().map(|&v| f(v)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.0.iter()
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.0.len() == n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: n,
                got: self.0.len(),
            })
        }
    }

    /// `(min, max)` of the values.
    pub fn range(&self) -> (T, T) {
        self.0
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            })
    }

    pub fn dot(&self, other: &Self) -> T {
        self.0.iter().zip(&other.0).map(|(&a, &b)| a * b).sum()
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        NodalField(self.0.iter().map(|&x| f(x)).collect())
    }

    pub fn scaled(&self, c: T) -> Self {
        self.map(|x| x * c)
    }

    /// One value per line.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        for x in &self.0 {
            writeln!(out, "{x}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut values = Vec::new();
        for (k, line) in reader.lines().enumerate() {
            let line = line?;
            let s = line.trim();
            if s.is_empty() {
                continue;
            }
            let x: f64 = s.parse().map_err(|_| Error::Parse {
                line: k + 1,
                msg: format!("cannot parse `{s}`"),
            })?;
            values.push(T::lit(x));
        }
        Ok(NodalField(values))
    }
}

impl<T> Index<usize> for NodalField<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> IndexMut<usize> for NodalField<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn text_round_trip(values in proptest::collection::vec(-1e6f64..1e6, 0..50)) {
            let f = NodalField(values);
            let mut buf = Vec::new();
            f.write_text(&mut buf).unwrap();
            let g = NodalField::<f64>::read_text(buf.as_slice()).unwrap();
            prop_assert_eq!(f, g);
        }
    }
}
