use std::collections::VecDeque;

use super::CsrMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Ordering and envelope layout of a symmetric sparsity pattern.
#[derive(Clone, Debug)]
pub struct Symbolic {
    /// `perm[new] = old`.
    perm: Vec<usize>,
    inv: Vec<usize>,
    /// First stored column of each permuted row.
    first: Vec<usize>,
    /// Offset of each row in the packed storage.
    start: Vec<usize>,
}

impl Symbolic {
    /// Reverse Cuthill-McKee ordering followed by envelope layout.
    pub fn analyze<T: Real>(a: &CsrMatrix<T>) -> Self {
        let n = a.n();
        let perm = rcm(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first = vec![0; n];
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            let lo = a.columns(perm[i]).iter().map(|&j| inv[j]).min().unwrap_or(i).min(i);
            first[i] = lo;
            start.push(start[i] + (i - lo + 1));
        }
        Symbolic {
            perm,
            inv,
            first,
            start,
        }
    }

    pub fn envelope_size(&self) -> usize {
        *self.start.last().unwrap_or(&0)
    }
}

fn rcm<T: Real>(a: &CsrMatrix<T>) -> Vec<usize> {
    let n = a.n();
    let degree: Vec<usize> = (0..n).map(|i| a.columns(i).len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs_last = |root: usize, visited: &[bool]| -> usize {
        let mut seen = visited.to_vec();
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        let mut last = root;
        while let Some(i) = queue.pop_front() {
            last = i;
            for &j in a.columns(i) {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        last
    };
    while order.len() < n {
        let seed = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| degree[i])
            .expect("unvisited vertex");
        // Two sweeps towards a pseudo-peripheral start.
        let root = bfs_last(bfs_last(seed, &visited), &visited);
        let mut queue = VecDeque::from([root]);
        visited[root] = true;
        while let Some(i) = queue.pop_front() {
            order.push(i);
            let mut next: Vec<usize> = a.columns(i).iter().copied().filter(|&j| !visited[j]).collect();
            next.sort_unstable_by_key(|&j| (degree[j], j));
            for j in next {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// `P A Pᵀ = L Lᵀ` with `L` stored row-wise inside the envelope.
#[derive(Clone, Debug)]
pub struct EnvelopeCholesky<T> {
    symbolic: Symbolic,
    l: Vec<T>,
}

impl<T: Real> EnvelopeCholesky<T> {
    pub fn factor(a: &CsrMatrix<T>) -> Result<Self> {
        Self::factor_with(Symbolic::analyze(a), a)
    }

    /// Numeric factorization reusing a previous analysis of the same pattern.
    pub fn factor_with(symbolic: Symbolic, a: &CsrMatrix<T>) -> Result<Self> {
        let n = a.n();
        let s = &symbolic;
        let mut l = vec![T::zero(); s.envelope_size()];
        for i in 0..n {
            for (j_old, v) in a.row(s.perm[i]) {
                let j = s.inv[j_old];
                if j <= i {
                    l[s.start[i] + j - s.first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = s.first[i];
            let row_i = s.start[i];
            for j in fi..i {
                let fj = s.first[j];
                let k0 = fi.max(fj);
                let (a_part, b_part) = l.split_at(row_i);
                let li = &b_part[k0 - fi..j - fi];
                let lj = &a_part[s.start[j] + k0 - fj..s.start[j] + j - fj];
                let dot: T = li.iter().zip(lj).map(|(&x, &y)| x * y).sum();
                let ljj = a_part[s.start[j] + j - fj];
                let idx = row_i + j - fi;
                l[idx] = (l[idx] - dot) / ljj;
            }
            let diag_idx = row_i + i - fi;
            let sq: T = l[row_i..diag_idx].iter().map(|&x| x * x).sum();
            let d = l[diag_idx] - sq;
            if !(d > T::zero()) || !d.is_finite() {
                return Err(Error::NumericalDegeneracy(format!(
                    "matrix not positive definite (pivot {} at row {i})",
                    d
                )));
            }
            l[diag_idx] = d.sqrt();
        }
        Ok(EnvelopeCholesky { symbolic, l })
    }

    pub fn symbolic(&self) -> &Symbolic {
        &self.symbolic
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let s = &self.symbolic;
        let n = s.perm.len();
        let mut y: Vec<T> = s.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = s.first[i];
            let row = &self.l[s.start[i]..s.start[i + 1]];
            let dot: T = row[..i - fi].iter().zip(&y[fi..i]).map(|(&a, &x)| a * x).sum();
            y[i] = (y[i] - dot) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = s.first[i];
            let row = &self.l[s.start[i]..s.start[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for (k, &a) in row[..i - fi].iter().enumerate() {
                y[fi + k] -= a * yi;
            }
        }
        let mut x = vec![T::zero(); n];
        for (new, &old) in s.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}
