//! Spin matrices, tensor-product layouts and singlet/triplet projectors.
//!
//! Sites are ordered electron 1, electron 2, then nuclei in declaration order.
//! Kronecker products nest left to right, so site 0 carries the most
//! significant digit of a basis index. Local bases run `m = I, I-1, ..., -I`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::sparse::{SparseOperator, TripletBuilder};
use crate::{Error, Result, C64, ZERO};

/// Small dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl LocalMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(dim: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), dim * dim, "local matrix data has wrong length");
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add_scaled(&self, other: &Self, s: C64) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b * s)
                .collect(),
        }
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl core::ops::Index<(usize, usize)> for LocalMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + c]
    }
}

impl core::ops::IndexMut<(usize, usize)> for LocalMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.dim + c]
    }
}

/// Angular momentum matrices for one site, in units of hbar.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinMatrices {
    pub multiplicity: usize,
    pub sx: LocalMatrix,
    pub sy: LocalMatrix,
    pub sz: LocalMatrix,
}

impl SpinMatrices {
    /// Spin quantum number `I = (multiplicity - 1) / 2`.
    pub fn spin(&self) -> f64 {
        (self.multiplicity as f64 - 1.0) / 2.0
    }

    pub fn components(&self) -> [&LocalMatrix; 3] {
        [&self.sx, &self.sy, &self.sz]
    }

    /// Raising operator `sx + i sy`.
    pub fn raising(&self) -> LocalMatrix {
        self.sx.add_scaled(&self.sy, C64::new(0.0, 1.0))
    }

    /// Lowering operator `sx - i sy`.
    pub fn lowering(&self) -> LocalMatrix {
        self.sx.add_scaled(&self.sy, C64::new(0.0, -1.0))
    }
}

pub fn spin_matrices(multiplicity: usize) -> Result<SpinMatrices> {
    if multiplicity == 0 {
        return Err(Error::InvalidSpin(0));
    }
    let n = multiplicity;
    let s = (n as f64 - 1.0) / 2.0;
    let mut sz = LocalMatrix::zeros(n);
    let mut sx = LocalMatrix::zeros(n);
    let mut sy = LocalMatrix::zeros(n);
    for j in 0..n {
        let m = s - j as f64;
        sz[(j, j)] = C64::new(m, 0.0);
    }
    // <m+1| S+ |m> = sqrt(s(s+1) - m(m+1)); index j holds m = s - j.
    for j in 1..n {
        let m = s - j as f64;
        let c = (s * (s + 1.0) - m * (m + 1.0)).sqrt();
        sx[(j - 1, j)] = C64::new(c / 2.0, 0.0);
        sx[(j, j - 1)] = C64::new(c / 2.0, 0.0);
        sy[(j - 1, j)] = C64::new(0.0, -c / 2.0);
        sy[(j, j - 1)] = C64::new(0.0, c / 2.0);
    }
    Ok(SpinMatrices {
        multiplicity: n,
        sx,
        sy,
        sz,
    })
}

/// Site multiplicities of a radical pair: two electrons followed by nuclei.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HilbertLayout {
    site_dims: Vec<usize>,
    total_dim: usize,
}

impl HilbertLayout {
    pub const ELECTRONS: (usize, usize) = (0, 1);

    pub fn radical_pair(nuclear_multiplicities: &[usize]) -> Result<Self> {
        let mut site_dims = vec![2, 2];
        for (i, &m) in nuclear_multiplicities.iter().enumerate() {
            if m == 0 {
                return Err(Error::Layout(format!(
                    "nucleus {i} has multiplicity 0"
                )));
            }
            site_dims.push(m);
        }
        let total_dim = site_dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Layout("Hilbert space dimension overflows usize".into()))?;
        Ok(Self {
            site_dims,
            total_dim,
        })
    }

    pub fn site_dims(&self) -> &[usize] {
        &self.site_dims
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn n_sites(&self) -> usize {
        self.site_dims.len()
    }

    pub fn n_nuclei(&self) -> usize {
        self.site_dims.len() - 2
    }

    /// Number of nuclear spin states, `total_dim / 4`.
    pub fn nuclear_states(&self) -> usize {
        self.total_dim / 4
    }

    pub fn nuclear_multiplicities(&self) -> &[usize] {
        &self.site_dims[2..]
    }

    /// Product of the dimensions of all sites after `site`.
    pub fn stride(&self, site: usize) -> usize {
        self.site_dims[site + 1..].iter().product()
    }
}

/// `1 ⊗ ... ⊗ local ⊗ ... ⊗ 1` with `local` at position `site`.
pub fn embed_site_operator(
    local: &LocalMatrix,
    site: usize,
    layout: &HilbertLayout,
) -> Result<SparseOperator> {
    let dims = layout.site_dims();
    if site >= dims.len() {
        return Err(Error::Layout(format!(
            "site {site} out of range for {} sites",
            dims.len()
        )));
    }
    let m = dims[site];
    if local.dim() != m {
        return Err(Error::Layout(format!(
            "local operator has dimension {} but site {site} has multiplicity {m}",
            local.dim()
        )));
    }
    let right = layout.stride(site);
    let left: usize = dims[..site].iter().product();
    let local_nz: Vec<(usize, usize, C64)> = (0..m)
        .flat_map(|a| (0..m).map(move |b| (a, b)))
        .map(|(a, b)| (a, b, local[(a, b)]))
        .filter(|e| e.2 != ZERO)
        .collect();
    let mut builder = TripletBuilder::with_capacity(layout.total_dim(), left * right * local_nz.len());
    for l in 0..left {
        for &(a, b, v) in &local_nz {
            let row0 = (l * m + a) * right;
            let col0 = (l * m + b) * right;
            for r in 0..right {
                builder.push(row0 + r, col0 + r, v);
            }
        }
    }
    let hermitian = local.max_abs_diff(&adjoint_local(local)) <= 1e-12;
    Ok(builder.finish(hermitian))
}

fn adjoint_local(m: &LocalMatrix) -> LocalMatrix {
    let n = m.dim();
    let mut out = LocalMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = m[(j, i)].conj();
        }
    }
    out
}

/// The three Cartesian spin operators of `site`, embedded in the full space.
pub fn embedded_spin_vector(site: usize, layout: &HilbertLayout) -> Result<[SparseOperator; 3]> {
    let mult = *layout
        .site_dims()
        .get(site)
        .ok_or_else(|| Error::Layout(format!("site {site} out of range")))?;
    let s = spin_matrices(mult)?;
    Ok([
        embed_site_operator(&s.sx, site, layout)?,
        embed_site_operator(&s.sy, site, layout)?,
        embed_site_operator(&s.sz, site, layout)?,
    ])
}

/// `P_S = 1/4 - S_i . S_j` on the full space.
pub fn singlet_projector(layout: &HilbertLayout, electrons: (usize, usize)) -> Result<SparseOperator> {
    let (i, j) = electrons;
    let dims = layout.site_dims();
    if i == j || dims.get(i) != Some(&2) || dims.get(j) != Some(&2) {
        return Err(Error::InvalidPair(i, j));
    }
    let si = embedded_spin_vector(i, layout)?;
    let sj = embedded_spin_vector(j, layout)?;
    let mut dot = SparseOperator::zero(layout.total_dim());
    for (a, b) in si.iter().zip(&sj) {
        dot = dot.add(&a.mul(b));
    }
    let p = SparseOperator::identity(layout.total_dim())
        .scaled_real(0.25)
        .sub(&dot);
    Ok(p.with_hermitian_hint(true))
}

/// `P_T = 1 - P_S`.
pub fn triplet_projector(singlet: &SparseOperator) -> SparseOperator {
    SparseOperator::identity(singlet.dim())
        .sub(singlet)
        .with_hermitian_hint(true)
}
