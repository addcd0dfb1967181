//! Compressed sparse row storage for complex operators.
//!
//! Operators are assembled from `(row, col, value)` triplets through
//! [`TripletBuilder`]; duplicate coordinates are summed when the builder is
//! finished. Rows keep their column indices sorted.

use alloc::vec;
use alloc::vec::Vec;

use crate::{C64, ZERO};

#[derive(Debug, Clone)]
pub struct TripletBuilder {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl TripletBuilder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, capacity: usize) -> Self {
        Self {
            dim,
            entries: Vec::with_capacity(capacity),
        }
    }

    /// Panics if either index is out of range.
    pub fn push(&mut self, row: usize, col: usize, value: C64) {
        assert!(
            row < self.dim && col < self.dim,
            "triplet ({row}, {col}) out of range for dimension {}",
            self.dim
        );
        self.entries.push((row, col, value));
    }

    pub fn finish(mut self, hermitian_hint: bool) -> SparseOperator {
        self.entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.dim + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<C64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for r in 0..self.dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut op = SparseOperator {
            dim: self.dim,
            row_ptr,
            cols,
            vals,
            hermitian_hint,
        };
        op.prune();
        op
    }
}

/// Square complex sparse matrix in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    hermitian_hint: bool,
}

impl SparseOperator {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            vals: Vec::new(),
            hermitian_hint: true,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![C64::new(1.0, 0.0); dim], true)
    }

    pub fn from_diagonal(diag: &[C64], hermitian_hint: bool) -> Self {
        let mut b = TripletBuilder::with_capacity(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            b.push(i, i, d);
        }
        b.finish(hermitian_hint)
    }

    /// Row-major dense input; entries with modulus below `drop_tol` are skipped.
    pub fn from_dense(dim: usize, data: &[C64], drop_tol: f64, hermitian_hint: bool) -> Self {
        assert_eq!(data.len(), dim * dim);
        let mut b = TripletBuilder::new(dim);
        for r in 0..dim {
            for c in 0..dim {
                let v = data[r * dim + c];
                if v.norm() > drop_tol {
                    b.push(r, c, v);
                }
            }
        }
        b.finish(hermitian_hint)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn hermitian_hint(&self) -> bool {
        self.hermitian_hint
    }

    pub fn with_hermitian_hint(mut self, hint: bool) -> Self {
        self.hermitian_hint = hint;
        self
    }

    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[C64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            let (cs, vs) = self.row(r);
            cs.iter().zip(vs).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let (cs, vs) = self.row(r);
        match cs.binary_search(&c) {
            Ok(k) => vs[k],
            Err(_) => ZERO,
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    fn prune(&mut self) {
        if self.vals.iter().all(|v| *v != ZERO) {
            return;
        }
        let mut b = Vec::with_capacity(self.vals.len());
        for (r, c, v) in self.triplets() {
            if v != ZERO {
                b.push((r, c, v));
            }
        }
        let mut row_ptr = vec![0usize; self.dim + 1];
        for &(r, _, _) in &b {
            row_ptr[r + 1] += 1;
        }
        for r in 0..self.dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        self.cols = b.iter().map(|e| e.1).collect();
        self.vals = b.iter().map(|e| e.2).collect();
        self.row_ptr = row_ptr;
    }

    /// Multiplies every entry by `s`.
    pub fn scaled(&self, s: C64) -> Self {
        let hint = self.hermitian_hint && s.im == 0.0;
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out.hermitian_hint = hint;
        out.prune();
        out
    }

    pub fn scaled_real(&self, s: f64) -> Self {
        self.scaled(C64::new(s, 0.0))
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Self, s: C64) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in sparse sum");
        let mut b = TripletBuilder::with_capacity(self.dim, self.nnz() + other.nnz());
        for (r, c, v) in self.triplets() {
            b.push(r, c, v);
        }
        for (r, c, v) in other.triplets() {
            b.push(r, c, v * s);
        }
        b.finish(self.hermitian_hint && other.hermitian_hint && s.im == 0.0)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_scaled(other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(other, C64::new(-1.0, 0.0))
    }

    /// Sparse matrix product `self * other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in sparse product");
        let mut b = TripletBuilder::new(self.dim);
        let mut acc = vec![ZERO; self.dim];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; self.dim];
        for r in 0..self.dim {
            let (cs, vs) = self.row(r);
            for (&k, &a) in cs.iter().zip(vs) {
                let (cs2, vs2) = other.row(k);
                for (&c, &bv) in cs2.iter().zip(vs2) {
                    if !mark[c] {
                        mark[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * bv;
                }
            }
            for &c in &touched {
                b.push(r, c, acc[c]);
                acc[c] = ZERO;
                mark[c] = false;
            }
            touched.clear();
        }
        b.finish(false)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut b = TripletBuilder::with_capacity(self.dim, self.nnz());
        for (r, c, v) in self.triplets() {
            b.push(c, r, v.conj());
        }
        b.finish(self.hermitian_hint)
    }

    /// `out = self * x`.
    #[inline]
    pub fn matvec_into(&self, x: &[C64], out: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        for (r, o) in out.iter_mut().enumerate() {
            let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let mut re = 0.0;
            let mut im = 0.0;
            for k in a..b {
                let v = self.vals[k];
                let y = x[self.cols[k]];
                re += v.re * y.re - v.im * y.im;
                im += v.re * y.im + v.im * y.re;
            }
            *o = C64::new(re, im);
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim];
        self.matvec_into(x, &mut out);
        out
    }

    /// `<x|A|x>` without allocating.
    pub fn expectation(&self, x: &[C64]) -> C64 {
        let mut acc = ZERO;
        for (r, xr) in x.iter().enumerate() {
            let (cs, vs) = self.row(r);
            let mut s = ZERO;
            for (&c, &v) in cs.iter().zip(vs) {
                s += v * x[c];
            }
            acc += xr.conj() * s;
        }
        acc
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<C64> {
        let mut d = vec![ZERO; self.dim * self.dim];
        for (r, c, v) in self.triplets() {
            d[r * self.dim + c] = v;
        }
        d
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other)
            .vals
            .iter()
            .fold(0.0, |m, v| if v.norm() > m { v.norm() } else { m })
    }

    /// Largest `|A - A^dagger|` entry.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn max_abs(&self) -> f64 {
        self.vals
            .iter()
            .fold(0.0, |m, v| if v.norm() > m { v.norm() } else { m })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn duplicates_are_summed() {
        let mut b = TripletBuilder::new(3);
        b.push(0, 1, c(1.0, 0.0));
        b.push(2, 2, c(0.5, 0.5));
        b.push(0, 1, c(2.0, -1.0));
        let op = b.finish(false);
        assert_eq!(op.nnz(), 2);
        assert_eq!(op.get(0, 1), c(3.0, -1.0));
        let coords: Vec<_> = op.triplets().map(|(r, c, _)| (r, c)).collect();
        assert_eq!(coords, [(0, 1), (2, 2)]);
    }

    #[test]
    fn cancelling_entries_are_dropped() {
        let mut b = TripletBuilder::new(2);
        b.push(1, 0, c(1.0, 2.0));
        b.push(1, 0, c(-1.0, -2.0));
        assert_eq!(b.finish(true).nnz(), 0);
    }

    #[test]
    #[should_panic]
    fn out_of_range_triplet_panics() {
        TripletBuilder::new(2).push(2, 0, c(1.0, 0.0));
    }

    #[test]
    fn product_and_adjoint_match_dense() {
        let a = SparseOperator::from_dense(
            2,
            &[c(1.0, 1.0), c(0.0, 2.0), ZERO, c(3.0, 0.0)],
            0.0,
            false,
        );
        let b = SparseOperator::from_dense(
            2,
            &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, -1.0), ZERO],
            0.0,
            false,
        );
        let ab = a.mul(&b).to_dense();
        // [[1+i, 2i], [0, 3]] * [[0, 1], [1-i, 0]]
        assert_eq!(ab, [c(2.0, 2.0), c(1.0, 1.0), c(3.0, -3.0), ZERO]);
        let ad = a.adjoint();
        assert_eq!(ad.get(1, 0), c(0.0, -2.0));
        assert_eq!(ad.get(0, 0), c(1.0, -1.0));
    }

    #[test]
    fn expectation_matches_matvec() {
        let a = SparseOperator::from_dense(
            2,
            &[c(1.0, 0.0), c(0.0, 2.0), c(0.0, -2.0), c(3.0, 0.0)],
            0.0,
            true,
        );
        let x = [c(0.3, 0.1), c(-0.2, 0.7)];
        let ax = a.matvec(&x);
        let direct = crate::inner(&x, &ax);
        assert!((a.expectation(&x) - direct).norm() < 1e-15);
        assert!(a.hermiticity_defect() < 1e-15);
    }
}
