//! Small exact-rational dense linear algebra: reduced row echelon form,
//! kernels, column spans and complements. Dimensions here are tiny, so a
//! straightforward Gauss-Jordan is all that is needed.

use num_traits::Zero;

use crate::scalar::{self, Scalar};

/// Dense matrix over the rationals, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Scalar>,
}

impl Matrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![scalar::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zero(n, n);
        for i in 0..n {
            m.set(i, i, scalar::one());
        }
        m
    }

    pub fn from_columns(rows: usize, columns: &[Vec<Scalar>]) -> Self {
        let mut m = Matrix::zero(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows);
            for (i, v) in col.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<Scalar> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn mul_vec(&self, v: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut acc = scalar::zero();
                for j in 0..self.cols {
                    if !self.get(i, j).is_zero() && !v[j].is_zero() {
                        acc += self.get(i, j) * &v[j];
                    }
                }
                acc
            })
            .collect()
    }

    /// In-place Gauss-Jordan; returns the pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0usize;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let Some(p) = (row..self.rows).find(|&r| !self.get(r, col).is_zero()) else {
                continue;
            };
            if p != row {
                for j in 0..self.cols {
                    let a = self.get(p, j).clone();
                    let b = self.get(row, j).clone();
                    self.set(p, j, b);
                    self.set(row, j, a);
                }
            }
            let inv = scalar::one() / self.get(row, col).clone();
            for j in 0..self.cols {
                let v = self.get(row, j) * &inv;
                self.set(row, j, v);
            }
            for r in 0..self.rows {
                if r != row && !self.get(r, col).is_zero() {
                    let f = self.get(r, col).clone();
                    for j in 0..self.cols {
                        let v = self.get(r, j) - &(self.get(row, j) * &f);
                        self.set(r, j, v);
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }
}

/// Basis of the kernel of the matrix, as coordinate vectors.
pub fn kernel_basis(m: &Matrix) -> Vec<Vec<Scalar>> {
    let mut r = m.clone();
    let pivots = r.rref();
    let pivot_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
    let mut out = Vec::new();
    for free in 0..m.cols {
        if pivot_set.contains(&free) {
            continue;
        }
        let mut v = vec![scalar::zero(); m.cols];
        v[free] = scalar::one();
        for (prow, &pcol) in pivots.iter().enumerate() {
            v[pcol] = -r.get(prow, free).clone();
        }
        out.push(v);
    }
    out
}

/// Indices of a maximal independent subset of the given columns, found left
/// to right.
pub fn independent_columns(rows: usize, columns: &[Vec<Scalar>]) -> Vec<usize> {
    let mut m = Matrix::from_columns(rows, columns);
    m.rref()
}

/// Solves `A x = b` exactly; `None` when inconsistent.
pub fn solve(a: &Matrix, b: &[Scalar]) -> Option<Vec<Scalar>> {
    assert_eq!(b.len(), a.rows);
    let mut aug = Matrix::zero(a.rows, a.cols + 1);
    for i in 0..a.rows {
        for j in 0..a.cols {
            aug.set(i, j, a.get(i, j).clone());
        }
        aug.set(i, a.cols, b[i].clone());
    }
    let pivots = aug.rref();
    if pivots.contains(&a.cols) {
        return None;
    }
    let mut x = vec![scalar::zero(); a.cols];
    for (prow, &pcol) in pivots.iter().enumerate() {
        x[pcol] = aug.get(prow, a.cols).clone();
    }
    Some(x)
}

/// Membership/coordinate queries against a fixed column span.
#[derive(Debug, Clone)]
pub struct SpanSolver {
    matrix: Matrix,
}

impl SpanSolver {
    pub fn new(rows: usize, columns: &[Vec<Scalar>]) -> Self {
        SpanSolver { matrix: Matrix::from_columns(rows, columns) }
    }

    /// Coordinates of `v` in the column span, or `None` if outside.
    pub fn coordinates(&self, v: &[Scalar]) -> Option<Vec<Scalar>> {
        solve(&self.matrix, v)
    }
}

/// Extends the independent set `base` to a basis of the ambient space by
/// unit vectors; returns the indices of the chosen units.
pub fn complement_by_units(rows: usize, base: &[Vec<Scalar>]) -> Vec<usize> {
    let mut cols: Vec<Vec<Scalar>> = base.to_vec();
    let mut chosen = Vec::new();
    for u in 0..rows {
        if cols.len() == rows {
            break;
        }
        let mut unit = vec![scalar::zero(); rows];
        unit[u] = scalar::one();
        let mut trial = cols.clone();
        trial.push(unit.clone());
        if Matrix::from_columns(rows, &trial).rank() == trial.len() {
            cols.push(unit);
            chosen.push(u);
        }
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    fn m2(rows: usize, cols: usize, entries: &[i64]) -> Matrix {
        let mut m = Matrix::zero(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, scalar::from_int(entries[i * cols + j]));
            }
        }
        m
    }

    #[test]
    fn rref_rank_and_kernel() {
        let m = m2(2, 3, &[1, 2, 3, 2, 4, 6]);
        assert_eq!(m.rank(), 1);
        let ker = kernel_basis(&m);
        assert_eq!(ker.len(), 2);
        for v in &ker {
            assert!(m.mul_vec(v).iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        let m = m2(2, 2, &[1, 1, 0, 1]);
        let x = solve(&m, &[scalar::from_int(3), scalar::from_int(2)]).unwrap();
        assert_eq!(x, vec![scalar::from_int(1), scalar::from_int(2)]);
        let singular = m2(2, 2, &[1, 1, 2, 2]);
        assert!(solve(&singular, &[scalar::from_int(1), scalar::from_int(3)]).is_none());
        let sol = solve(&singular, &[ratio(1, 2), scalar::from_int(1)]).unwrap();
        assert_eq!(singular.mul_vec(&sol), vec![ratio(1, 2), scalar::from_int(1)]);
    }

    #[test]
    fn complement_extends_to_full_basis() {
        let base = vec![vec![scalar::one(), scalar::one(), scalar::zero()]];
        let units = complement_by_units(3, &base);
        assert_eq!(units.len(), 2);
    }

    #[test]
    fn independent_columns_picks_leftmost() {
        let cols = vec![
            vec![scalar::one(), scalar::zero()],
            vec![scalar::from_int(2), scalar::zero()],
            vec![scalar::zero(), scalar::one()],
        ];
        assert_eq!(independent_columns(2, &cols), vec![0, 2]);
    }
}
