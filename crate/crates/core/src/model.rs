//! Declarative radical-pair description and its assembled operators.
//!
//! Configuration quantities use mT for fields and hyperfine couplings and
//! μs⁻¹ for rates. Assembled operators are in rad·μs⁻¹.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::sparse::SparseOperator;
use crate::spin::{embedded_spin_vector, singlet_projector, triplet_projector, HilbertLayout};
use crate::{Error, Result, C64};

/// Bohr magneton, J/T (CODATA 2018).
pub const BOHR_MAGNETON: f64 = 9.2740100783e-24;
/// Reduced Planck constant, J·s (CODATA 2018).
pub const HBAR: f64 = 1.054571817e-34;
/// Default electron g-factor.
pub const DEFAULT_G: f64 = 2.00232;

const HYPERFINE_SYMMETRY_TOL: f64 = 1e-9;
const DIRECTION_TOL: f64 = 1e-12;

/// `g μ_B b / ħ` for `b` in mT, in rad·μs⁻¹.
pub fn mt_to_angular_frequency(b_mt: f64, g: f64) -> f64 {
    // T -> mT is 1e-3, s⁻¹ -> μs⁻¹ is 1e-6.
    g * (BOHR_MAGNETON / HBAR) * 1e-9 * b_mt
}

/// Symmetric 3×3 hyperfine coupling tensor in mT.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperfineTensor {
    matrix: [[f64; 3]; 3],
}

impl HyperfineTensor {
    pub fn isotropic(a_mt: f64) -> Self {
        let mut matrix = [[0.0; 3]; 3];
        for (i, row) in matrix.iter_mut().enumerate() {
            row[i] = a_mt;
        }
        Self { matrix }
    }

    /// `a_iso·1 + a_axial·(3 n nᵀ - 1)`: principal values `a_iso + 2 a_axial`
    /// along `axis` and `a_iso - a_axial` perpendicular to it.
    pub fn axial(a_iso: f64, a_axial: f64, axis: [f64; 3]) -> Result<Self> {
        let len = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !(len.is_finite() && len > 0.0) {
            return Err(Error::spec("hyperfine.axis", "axis must be a non-zero finite vector"));
        }
        let n = [axis[0] / len, axis[1] / len, axis[2] / len];
        let mut matrix = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                matrix[i][j] = a_iso * delta + a_axial * (3.0 * n[i] * n[j] - delta);
            }
        }
        Ok(Self { matrix })
    }

    pub fn from_matrix(matrix: [[f64; 3]; 3]) -> Result<Self> {
        let t = Self { matrix };
        t.validate("hyperfine")?;
        Ok(t)
    }

    pub fn matrix(&self) -> &[[f64; 3]; 3] {
        &self.matrix
    }

    pub fn is_isotropic(&self) -> bool {
        let a = self.matrix[0][0];
        (0..3).all(|i| (0..3).all(|j| self.matrix[i][j] == if i == j { a } else { 0.0 }))
    }

    fn validate(&self, field: &str) -> Result<()> {
        for i in 0..3 {
            for j in 0..3 {
                if !self.matrix[i][j].is_finite() {
                    return Err(Error::spec(field, "hyperfine entries must be finite"));
                }
                let asym = (self.matrix[i][j] - self.matrix[j][i]).abs();
                if asym > HYPERFINE_SYMMETRY_TOL {
                    return Err(Error::spec(
                        field,
                        format!("tensor is asymmetric by {asym:e} mT at ({i}, {j})"),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NucleusSpec {
    pub label: String,
    pub multiplicity: usize,
    /// 0 or 1.
    pub coupled_electron: usize,
    pub hyperfine: HyperfineTensor,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSpec {
    pub magnitude_mt: f64,
    pub direction: [f64; 3],
}

impl FieldSpec {
    pub fn new(magnitude_mt: f64, direction: [f64; 3]) -> Self {
        Self {
            magnitude_mt,
            direction,
        }
    }

    /// Direction `(sinθ cosφ, sinθ sinφ, cosθ)`.
    pub fn from_angles(magnitude_mt: f64, theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self::new(magnitude_mt, [st * cp, st * sp, ct])
    }

    pub fn along_z(magnitude_mt: f64) -> Self {
        Self::new(magnitude_mt, [0.0, 0.0, 1.0])
    }

    pub fn zero() -> Self {
        Self::along_z(0.0)
    }

    fn validate(&self) -> Result<()> {
        if !(self.magnitude_mt.is_finite() && self.magnitude_mt >= 0.0) {
            return Err(Error::spec("field.magnitude", "must be finite and non-negative"));
        }
        let d = self.direction;
        let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if !((len - 1.0).abs() <= DIRECTION_TOL) {
            return Err(Error::spec(
                "field.direction",
                format!("must be a unit vector (norm is {len})"),
            ));
        }
        Ok(())
    }
}

/// Recombination kinetics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KineticsSpec {
    /// Singlet recombination `k_b` plus spin-independent forward reaction `k_f`.
    Forward { k_b: f64, k_f: f64 },
    /// Separate singlet and triplet rates.
    SingletTriplet { k_s: f64, k_t: f64 },
}

impl KineticsSpec {
    /// `(k_S, k_T)`; the forward form maps to `(k_f + k_b, k_f)`.
    pub fn singlet_triplet_rates(&self) -> (f64, f64) {
        match *self {
            KineticsSpec::Forward { k_b, k_f } => (k_f + k_b, k_f),
            KineticsSpec::SingletTriplet { k_s, k_t } => (k_s, k_t),
        }
    }

    /// Spin-independent part of the decay, `min(k_S, k_T)` for the generic form.
    pub fn forward_rate(&self) -> f64 {
        match *self {
            KineticsSpec::Forward { k_f, .. } => k_f,
            KineticsSpec::SingletTriplet { k_s, k_t } => k_s.min(k_t),
        }
    }

    /// Singlet-selective part, `k_b`.
    pub fn singlet_rate(&self) -> f64 {
        match *self {
            KineticsSpec::Forward { k_b, .. } => k_b,
            KineticsSpec::SingletTriplet { k_s, k_t } => k_s - k_s.min(k_t),
        }
    }

    fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::spec(
                    format!("kinetics.{name}"),
                    format!("rate must be finite and non-negative, got {v}"),
                ))
            }
        };
        match *self {
            KineticsSpec::Forward { k_b, k_f } => {
                check("k_b", k_b)?;
                check("k_f", k_f)
            }
            KineticsSpec::SingletTriplet { k_s, k_t } => {
                check("k_s", k_s)?;
                check("k_t", k_t)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DissipationSpec {
    /// Singlet-triplet dephasing rate `k_ST`, μs⁻¹.
    pub gamma_st: f64,
    /// Random-field relaxation rate per radical, μs⁻¹.
    pub gamma_rf: [f64; 2],
}

impl DissipationSpec {
    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.gamma_st) {
            return Err(Error::spec("dissipation.gamma_st", "rate must be finite and non-negative"));
        }
        for (k, &g) in self.gamma_rf.iter().enumerate() {
            if !ok(g) {
                return Err(Error::spec(
                    format!("dissipation.gamma_rf[{k}]"),
                    "rate must be finite and non-negative",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystemSpec {
    pub g_factors: [f64; 2],
    pub nuclei: Vec<NucleusSpec>,
    pub field: FieldSpec,
    pub kinetics: KineticsSpec,
    pub dissipation: DissipationSpec,
}

impl SpinSystemSpec {
    /// Bare pair with default g-factors, no field, no kinetics and no dissipation.
    pub fn bare() -> Self {
        Self {
            g_factors: [DEFAULT_G; 2],
            nuclei: Vec::new(),
            field: FieldSpec::zero(),
            kinetics: KineticsSpec::SingletTriplet { k_s: 0.0, k_t: 0.0 },
            dissipation: DissipationSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (k, g) in self.g_factors.iter().enumerate() {
            if !g.is_finite() {
                return Err(Error::spec(format!("electrons.g_factors[{k}]"), "must be finite"));
            }
        }
        for (i, n) in self.nuclei.iter().enumerate() {
            if n.multiplicity < 1 {
                return Err(Error::spec(format!("nuclei[{i}].multiplicity"), "must be at least 1"));
            }
            if n.coupled_electron > 1 {
                return Err(Error::spec(
                    format!("nuclei[{i}].electron"),
                    "must be 0 or 1",
                ));
            }
            n.hyperfine.validate(&format!("nuclei[{i}].hyperfine"))?;
        }
        self.field.validate()?;
        self.kinetics.validate()?;
        self.dissipation.validate()
    }

    pub fn layout(&self) -> Result<HilbertLayout> {
        let mults: Vec<usize> = self.nuclei.iter().map(|n| n.multiplicity).collect();
        HilbertLayout::radical_pair(&mults)
    }

    /// Same system with the spin-independent forward rate removed. The removed
    /// rate multiplies every observable by `exp(-k_f t)`.
    pub fn without_forward_rate(&self) -> (Self, f64) {
        let k_f = self.kinetics.forward_rate();
        let mut s = self.clone();
        s.kinetics = match self.kinetics {
            KineticsSpec::Forward { k_b, .. } => KineticsSpec::Forward { k_b, k_f: 0.0 },
            KineticsSpec::SingletTriplet { k_s, k_t } => KineticsSpec::SingletTriplet {
                k_s: k_s - k_f,
                k_t: k_t - k_f,
            },
        };
        (s, k_f)
    }

    /// True when `other` equals `self` up to the field direction.
    pub fn differs_only_in_field_direction(&self, other: &Self) -> bool {
        let mut a = self.clone();
        a.field.direction = other.field.direction;
        a == *other
    }
}

/// Lindblad channel types.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpKind {
    /// `sqrt(2 k_ST) P_S`.
    SingletTripletDephasing,
    /// `sqrt(γ_RF,k) S_{k,α}`.
    RandomField { electron: usize, axis: usize },
}

#[derive(Debug, Clone)]
pub struct JumpChannel {
    pub kind: JumpKind,
    pub op: SparseOperator,
    /// `J† J`.
    pub weight_op: SparseOperator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReactionKind {
    Singlet,
    Triplet,
}

#[derive(Debug, Clone)]
pub struct ReactionChannel {
    pub kind: ReactionKind,
    pub rate: f64,
    /// `K_n = k P`.
    pub op: SparseOperator,
}

/// Operators shared by both integrators. Immutable once assembled.
#[derive(Debug, Clone)]
pub struct ModelOperators {
    pub layout: HilbertLayout,
    pub hamiltonian: SparseOperator,
    pub reactions: Vec<ReactionChannel>,
    pub jumps: Vec<JumpChannel>,
    pub h_eff: SparseOperator,
    /// `-i H_eff`, the no-jump generator.
    pub generator: SparseOperator,
    pub p_singlet: SparseOperator,
    pub p_triplet: SparseOperator,
}

impl ModelOperators {
    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    /// `Σ K_n + Σ J_m† J_m`, equal to `i (H_eff - H_eff†)`.
    pub fn decay_operator(&self) -> SparseOperator {
        let mut acc = SparseOperator::zero(self.dim());
        for r in &self.reactions {
            acc = acc.add(&r.op);
        }
        for j in &self.jumps {
            acc = acc.add(&j.weight_op);
        }
        acc.with_hermitian_hint(true)
    }
}

fn electron_spin_ops(layout: &HilbertLayout) -> Result<[[SparseOperator; 3]; 2]> {
    Ok([
        embedded_spin_vector(0, layout)?,
        embedded_spin_vector(1, layout)?,
    ])
}

pub fn build_hamiltonian(spec: &SpinSystemSpec) -> Result<SparseOperator> {
    spec.validate()?;
    let layout = spec.layout()?;
    let dim = layout.total_dim();
    let electrons = electron_spin_ops(&layout)?;
    let mut h = SparseOperator::zero(dim);

    let b = spec.field.magnitude_mt;
    if b != 0.0 {
        for (k, s) in electrons.iter().enumerate() {
            let omega = mt_to_angular_frequency(b, spec.g_factors[k]);
            for (axis, op) in s.iter().enumerate() {
                let c = omega * spec.field.direction[axis];
                if c != 0.0 {
                    h = h.add_scaled(op, C64::new(c, 0.0));
                }
            }
        }
    }

    for (i, nucleus) in spec.nuclei.iter().enumerate() {
        let k = nucleus.coupled_electron;
        let s = &electrons[k];
        let nuc = embedded_spin_vector(2 + i, &layout)?;
        let scale = mt_to_angular_frequency(1.0, spec.g_factors[k]);
        let a = nucleus.hyperfine.matrix();
        for (p, sp) in s.iter().enumerate() {
            for (q, iq) in nuc.iter().enumerate() {
                let c = a[p][q] * scale;
                if c != 0.0 {
                    h = h.add_scaled(&sp.mul(iq), C64::new(c, 0.0));
                }
            }
        }
    }
    Ok(h.with_hermitian_hint(true))
}

/// Zeeman part of the Hamiltonian alone.
pub fn build_zeeman(spec: &SpinSystemSpec) -> Result<SparseOperator> {
    let mut s = spec.clone();
    s.nuclei.iter_mut().for_each(|n| n.hyperfine = HyperfineTensor::isotropic(0.0));
    build_hamiltonian(&s)
}

pub fn build_kinetic_ops(spec: &SpinSystemSpec, layout: &HilbertLayout) -> Result<Vec<ReactionChannel>> {
    spec.kinetics.validate()?;
    let p_s = singlet_projector(layout, HilbertLayout::ELECTRONS)?;
    let p_t = triplet_projector(&p_s);
    let (k_s, k_t) = spec.kinetics.singlet_triplet_rates();
    let mut out = Vec::new();
    if k_s > 0.0 {
        out.push(ReactionChannel {
            kind: ReactionKind::Singlet,
            rate: k_s,
            op: p_s.scaled_real(k_s),
        });
    }
    if k_t > 0.0 {
        out.push(ReactionChannel {
            kind: ReactionKind::Triplet,
            rate: k_t,
            op: p_t.scaled_real(k_t),
        });
    }
    Ok(out)
}

pub fn build_jump_ops(spec: &SpinSystemSpec, layout: &HilbertLayout) -> Result<Vec<JumpChannel>> {
    spec.dissipation.validate()?;
    let mut out = Vec::new();
    let d = &spec.dissipation;
    if d.gamma_st > 0.0 {
        let p_s = singlet_projector(layout, HilbertLayout::ELECTRONS)?;
        let op = p_s.scaled_real((2.0 * d.gamma_st).sqrt());
        out.push(channel(JumpKind::SingletTripletDephasing, op));
    }
    let electrons = electron_spin_ops(layout)?;
    for (k, s) in electrons.iter().enumerate() {
        let g = d.gamma_rf[k];
        if g > 0.0 {
            for (axis, op) in s.iter().enumerate() {
                out.push(channel(
                    JumpKind::RandomField { electron: k, axis },
                    op.scaled_real(g.sqrt()),
                ));
            }
        }
    }
    Ok(out)
}

fn channel(kind: JumpKind, op: SparseOperator) -> JumpChannel {
    let weight_op = op.adjoint().mul(&op).with_hermitian_hint(true);
    JumpChannel { kind, op, weight_op }
}

/// `H_eff = H - (i/2) Σ K_n - (i/2) Σ J_m† J_m`.
pub fn effective_hamiltonian(
    hamiltonian: &SparseOperator,
    reactions: &[ReactionChannel],
    jumps: &[JumpChannel],
) -> SparseOperator {
    let half_i = C64::new(0.0, -0.5);
    let mut h_eff = hamiltonian.clone();
    for r in reactions {
        h_eff = h_eff.add_scaled(&r.op, half_i);
    }
    for j in jumps {
        h_eff = h_eff.add_scaled(&j.weight_op, half_i);
    }
    h_eff.with_hermitian_hint(false)
}

pub fn assemble_model(spec: &SpinSystemSpec) -> Result<ModelOperators> {
    let hamiltonian = build_hamiltonian(spec)?;
    let layout = spec.layout()?;
    let reactions = build_kinetic_ops(spec, &layout)?;
    let jumps = build_jump_ops(spec, &layout)?;
    let h_eff = effective_hamiltonian(&hamiltonian, &reactions, &jumps);
    let generator = h_eff.scaled(C64::new(0.0, -1.0));
    let p_singlet = singlet_projector(&layout, HilbertLayout::ELECTRONS)?;
    let p_triplet = triplet_projector(&p_singlet);
    if hamiltonian.dim() != layout.total_dim() {
        return Err(Error::Layout(format!(
            "Hamiltonian dimension {} does not match layout {}",
            hamiltonian.dim(),
            layout.total_dim()
        )));
    }
    Ok(ModelOperators {
        layout,
        hamiltonian,
        reactions,
        jumps,
        h_eff,
        generator,
        p_singlet,
        p_triplet,
    })
}
