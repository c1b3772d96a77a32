use crate::scalar::Real;

/// Compressed sparse row matrix with sorted column indices. Symmetric
/// operators are stored in full (both triangles).
#[derive(Clone, Debug)]
pub struct CsrMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Zero matrix with the given sorted, deduplicated row patterns.
    pub fn from_pattern(rows: &[Vec<usize>]) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col = Vec::new();
        for r in rows {
            col.extend_from_slice(r);
            row_ptr.push(col.len());
        }
        let nnz = col.len();
        CsrMatrix {
            n: rows.len(),
            row_ptr,
            col,
            val: vec![T::zero(); nnz],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col.len()
    }

    pub fn clear(&mut self) {
        self.val.iter_mut().for_each(|v| *v = T::zero());
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let row = &self.col[self.row_ptr[i]..self.row_ptr[i + 1]];
        row.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }

    /// Adds `v` to entry `(i, j)`. Panics if the entry is outside the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let k = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside sparsity pattern"));
        self.val[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.position(i, j).map_or(T::zero(), |k| self.val[k])
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.col[k], self.val[k]))
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, a)| a * x[j]).sum())
            .collect()
    }

    /// `|A - Aᵀ|_max`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for (j, a) in self.row(i) {
                worst = worst.max((a - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Principal submatrix on `keep` (in that order).
    pub fn restrict(&self, keep: &[usize]) -> CsrMatrix<T> {
        let mut local = vec![usize::MAX; self.n];
        for (k, &i) in keep.iter().enumerate() {
            local[i] = k;
        }
        let mut row_ptr = Vec::with_capacity(keep.len() + 1);
        row_ptr.push(0);
        let mut col = Vec::new();
        let mut val = Vec::new();
        for &i in keep {
            let mut entries: Vec<(usize, T)> = self
                .row(i)
                .filter(|&(j, _)| local[j] != usize::MAX)
                .map(|(j, a)| (local[j], a))
                .collect();
            entries.sort_unstable_by_key(|e| e.0);
            for (j, a) in entries {
                col.push(j);
                val.push(a);
            }
            row_ptr.push(col.len());
        }
        CsrMatrix {
            n: keep.len(),
            row_ptr,
            col,
            val,
        }
    }

    pub(crate) fn columns(&self, i: usize) -> &[usize] {
        &self.col[self.row_ptr[i]..self.row_ptr[i + 1]]
    }
}
