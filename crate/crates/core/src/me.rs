//! Master-equation reference: dense density matrix, sparse operators.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::model::{JumpKind, ModelOperators};
use crate::ode::{Integrator, IntegratorStats, OdeSystem, Tolerances};
use crate::sparse::SparseOperator;
use crate::spin::HilbertLayout;
use crate::{Error, Result, C64, ZERO};

pub const DEFAULT_ME_TOL: Tolerances = Tolerances::new(1e-8, 1e-8);

/// Shift added to the diagonal before the Cholesky positivity probe.
pub const POSITIVITY_SLACK: f64 = 1e-6;

/// Dense row-major complex square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn from_data(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Layout(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_operator(op: &SparseOperator) -> Self {
        Self {
            dim: op.dim(),
            data: op.to_dense(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim + c]
    }

    pub fn trace(&self) -> C64 {
        trace(&self.data, self.dim)
    }

    /// `Tr(A ρ)` for sparse `A`.
    pub fn expectation(&self, op: &SparseOperator) -> C64 {
        expectation(op, &self.data)
    }

    /// `max |ρ - ρ†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.data, self.dim)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Whether `ρ + slack·1` admits a Cholesky factorization.
    pub fn is_positive_with_slack(&self, slack: f64) -> bool {
        cholesky_succeeds(&self.data, self.dim, slack)
    }
}

pub fn trace(rho: &[C64], dim: usize) -> C64 {
    (0..dim).map(|i| rho[i * dim + i]).sum()
}

pub fn hermiticity_defect(rho: &[C64], dim: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..dim {
        for j in i..dim {
            worst = worst.max((rho[i * dim + j] - rho[j * dim + i].conj()).norm());
        }
    }
    worst
}

/// `Tr(A ρ) = Σ_ij A_ij ρ_ji`.
pub fn expectation(op: &SparseOperator, rho: &[C64]) -> C64 {
    let d = op.dim();
    let mut acc = ZERO;
    for i in 0..d {
        let (cols, vals) = op.row(i);
        for (&j, &a) in cols.iter().zip(vals) {
            acc += a * rho[j * d + i];
        }
    }
    acc
}

fn cholesky_succeeds(rho: &[C64], dim: usize, slack: f64) -> bool {
    // Hermitian part only.
    let mut l = vec![ZERO; dim * dim];
    for j in 0..dim {
        let mut diag = rho[j * dim + j].re + slack;
        for k in 0..j {
            diag -= l[j * dim + k].norm_sqr();
        }
        if !(diag > 0.0) {
            return false;
        }
        let ljj = diag.sqrt();
        l[j * dim + j] = C64::new(ljj, 0.0);
        for i in (j + 1)..dim {
            let mut s = 0.5 * (rho[i * dim + j] + rho[j * dim + i].conj());
            for k in 0..j {
                s -= l[i * dim + k] * l[j * dim + k].conj();
            }
            l[i * dim + j] = s / ljj;
        }
    }
    true
}

/// `P_S / Tr P_S`.
pub fn initial_density(layout: &HilbertLayout) -> Result<DensityMatrix> {
    let ps = crate::spin::singlet_projector(layout, HilbertLayout::ELECTRONS)?;
    let z = ps.trace().re;
    Ok(DensityMatrix::from_operator(&ps.scaled_real(1.0 / z)))
}

/// `out = A ρ` (sparse times dense).
pub(crate) fn sparse_dense(a: &SparseOperator, rho: &[C64], out: &mut [C64]) {
    let d = a.dim();
    out.iter_mut().for_each(|z| *z = ZERO);
    for r in 0..d {
        let (cols, vals) = a.row(r);
        let orow = &mut out[r * d..(r + 1) * d];
        for (&c, &v) in cols.iter().zip(vals) {
            let src = &rho[c * d..(c + 1) * d];
            for (o, s) in orow.iter_mut().zip(src) {
                *o += v * s;
            }
        }
    }
}

/// `out += M B†` (dense times adjoint of sparse).
pub(crate) fn add_dense_sparse_adjoint(m: &[C64], b: &SparseOperator, out: &mut [C64]) {
    let d = b.dim();
    for i in 0..d {
        let mrow = &m[i * d..(i + 1) * d];
        let orow = &mut out[i * d..(i + 1) * d];
        for (j, o) in orow.iter_mut().enumerate() {
            let (cols, vals) = b.row(j);
            let mut acc = ZERO;
            for (&k, &v) in cols.iter().zip(vals) {
                acc += mrow[k] * v.conj();
            }
            *o += acc;
        }
    }
}

/// How S/T dephasing enters the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DephasingForm {
    /// As the Lindblad channel `sqrt(2 k_ST) P_S`.
    #[default]
    Lindblad,
    /// As `-k_ST (P_S ρ P_T + P_T ρ P_S)`.
    Projector,
}

/// Right-hand side of the master equation for a flattened density matrix.
#[derive(Debug, Clone)]
pub struct MasterEquation {
    dim: usize,
    generator: SparseOperator,
    sandwich: Vec<SparseOperator>,
    projector_dephasing: Option<(f64, SparseOperator, SparseOperator)>,
    scratch: Vec<C64>,
    scratch2: Vec<C64>,
}

impl MasterEquation {
    pub fn new(model: &ModelOperators) -> Self {
        Self::with_form(model, DephasingForm::Lindblad)
    }

    pub fn with_form(model: &ModelOperators, form: DephasingForm) -> Self {
        let dim = model.dim();
        let mut generator = model.generator.clone();
        let mut sandwich = Vec::new();
        let mut projector_dephasing = None;
        for j in &model.jumps {
            if form == DephasingForm::Projector && j.kind == JumpKind::SingletTripletDephasing {
                // Undo the anticommutator part carried by -i H_eff.
                generator = generator.add_scaled(&j.weight_op, C64::new(0.5, 0.0));
                // J†J = 2 k_ST P_S.
                let k = 0.5 * j.weight_op.trace().re / model.p_singlet.trace().re;
                projector_dephasing =
                    Some((k, model.p_singlet.clone(), model.p_triplet.clone()));
            } else {
                sandwich.push(j.op.clone());
            }
        }
        Self {
            dim,
            generator: generator.with_hermitian_hint(false),
            sandwich,
            projector_dephasing,
            scratch: vec![ZERO; dim * dim],
            scratch2: vec![ZERO; dim * dim],
        }
    }

    pub fn matrix_dim(&self) -> usize {
        self.dim
    }

    /// `out = L[ρ]`.
    pub fn apply(&mut self, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        // G ρ + ρ G† with G = -i H_eff.
        sparse_dense(&self.generator, rho, out);
        add_dense_sparse_adjoint(rho, &self.generator, out);
        for j in &self.sandwich {
            sparse_dense(j, rho, &mut self.scratch);
            add_dense_sparse_adjoint(&self.scratch, j, out);
        }
        if let Some((k, ps, pt)) = &self.projector_dephasing {
            // P_S ρ P_T + P_T ρ P_S
            sparse_dense(ps, rho, &mut self.scratch);
            self.scratch2.iter_mut().for_each(|z| *z = ZERO);
            add_dense_sparse_adjoint(&self.scratch, pt, &mut self.scratch2);
            sparse_dense(pt, rho, &mut self.scratch);
            add_dense_sparse_adjoint(&self.scratch, ps, &mut self.scratch2);
            for (o, s) in out.iter_mut().zip(&self.scratch2) {
                *o -= s * *k;
            }
        }
        debug_assert_eq!(out.len(), d * d);
    }
}

impl OdeSystem for MasterEquation {
    fn dim(&self) -> usize {
        self.dim * self.dim
    }

    fn rhs(&mut self, _t: f64, y: &[C64], dy: &mut [C64]) {
        self.apply(y, dy);
    }
}

/// `-i(H_eff ρ - ρ H_eff†) + Σ J ρ J†`.
pub fn liouvillian_rhs(model: &ModelOperators, rho: &DensityMatrix) -> Result<DensityMatrix> {
    liouvillian_rhs_with_form(model, rho, DephasingForm::Lindblad)
}

pub fn liouvillian_rhs_with_form(
    model: &ModelOperators,
    rho: &DensityMatrix,
    form: DephasingForm,
) -> Result<DensityMatrix> {
    if rho.dim() != model.dim() {
        return Err(Error::Layout(format!(
            "density matrix has dimension {}, model has {}",
            rho.dim(),
            model.dim()
        )));
    }
    let mut me = MasterEquation::with_form(model, form);
    let mut out = DensityMatrix::zeros(rho.dim());
    me.apply(rho.as_slice(), out.as_mut_slice());
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeSeries {
    pub grid: Vec<f64>,
    /// `Tr ρ(t)`.
    pub p1: Vec<f64>,
    /// `Tr[P_S ρ(t)]`.
    pub ps: Vec<f64>,
    pub tol: Tolerances,
    pub stats: IntegratorStats,
    pub warnings: Vec<String>,
}

/// Options beyond the defaults of [`integrate_master_equation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeOptions {
    pub tol: Tolerances,
    pub form: DephasingForm,
    /// Run the Cholesky positivity probe on this many evenly spaced grid
    /// points (0 disables). Skipped above `positivity_dim_cap`.
    pub positivity_checks: usize,
    pub positivity_dim_cap: usize,
}

impl Default for MeOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_ME_TOL,
            form: DephasingForm::Lindblad,
            positivity_checks: 4,
            positivity_dim_cap: 1024,
        }
    }
}

pub fn integrate_master_equation(
    model: &ModelOperators,
    rho0: &DensityMatrix,
    grid: &[f64],
    tol: Tolerances,
) -> Result<MeSeries> {
    let opts = MeOptions {
        tol,
        ..MeOptions::default()
    };
    integrate_master_equation_with(model, rho0, grid, opts, |_, _| {})
}

/// Integrate and call `visit(grid_index, ρ)` at every grid point.
pub fn integrate_master_equation_with<F>(
    model: &ModelOperators,
    rho0: &DensityMatrix,
    grid: &[f64],
    opts: MeOptions,
    mut visit: F,
) -> Result<MeSeries>
where
    F: FnMut(usize, &[C64]),
{
    let d = model.dim();
    if rho0.dim() != d {
        return Err(Error::Layout(format!(
            "initial density matrix has dimension {}, model has {d}",
            rho0.dim()
        )));
    }
    let Some(&t_end) = grid.last() else {
        return Err(Error::Range("empty output grid".into()));
    };
    if grid[0] < 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Range("grid must be strictly increasing from t >= 0".into()));
    }
    let mut warnings = Vec::new();
    let defect = rho0.hermiticity_defect();
    if defect > 1e-10 {
        warnings.push(format!("initial density matrix is not Hermitian (defect {defect:.3e})"));
    }
    let ps_op = &model.p_singlet;
    let check_every = if opts.positivity_checks == 0 || d > opts.positivity_dim_cap {
        usize::MAX
    } else {
        (grid.len() / opts.positivity_checks).max(1)
    };
    let mut p1 = Vec::with_capacity(grid.len());
    let mut ps = Vec::with_capacity(grid.len());
    let mut record = |i: usize, rho: &[C64], warnings: &mut Vec<String>| {
        p1.push(trace(rho, d).re);
        ps.push(expectation(ps_op, rho).re);
        if (i % check_every == check_every - 1 || i + 1 == grid.len())
            && check_every != usize::MAX
            && !cholesky_succeeds(rho, d, POSITIVITY_SLACK)
        {
            warnings.push(format!(
                "density matrix at t = {} has an eigenvalue below -{POSITIVITY_SLACK:e}",
                grid[i]
            ));
        }
        visit(i, rho);
    };

    let mut next = 0;
    let mut buf = vec![ZERO; d * d];
    while next < grid.len() && grid[next] == 0.0 {
        record(next, rho0.as_slice(), &mut warnings);
        next += 1;
    }
    let mut stats = IntegratorStats::default();
    if next < grid.len() {
        let system = MasterEquation::with_form(model, opts.form);
        let mut integ = Integrator::new(system, opts.tol, 0.0, rho0.as_slice(), t_end)?;
        while let Some(seg) = integ.step()? {
            while next < grid.len() && grid[next] <= seg.t_end() {
                seg.eval_into(grid[next], &mut buf);
                record(next, &buf, &mut warnings);
                next += 1;
            }
        }
        stats = integ.stats();
    }
    Ok(MeSeries {
        grid: grid.to_vec(),
        p1,
        ps,
        tol: opts.tol,
        stats,
        warnings,
    })
}
