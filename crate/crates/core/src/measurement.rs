//! Generalized measurements and multi-observer measurement histories.
//!
//! A history is a chronological list of Kraus measurements, each owned by
//! Alice, Bob or Eve. Flattening multiplies the chosen Kraus operators with
//! the newest step leftmost, then regroups the outcome indices per owner:
//! `i` packs Alice's outcomes, `j` Bob's and `e` Eve's, each mixed-radix with
//! the earliest step as the most significant digit. An owner without steps
//! gets a single trivial index.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, digits, hermitian_eig, hermitian_norm, matrix_sqrt_psd, tol, trace_product, ComplexMatrix, DensityMatrix,
};

const COMPLETENESS_TOL: f64 = 1e-9;

/// Positive operator `0 ≤ E ≤ I`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct Effect(ComplexMatrix);

impl Effect {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        let eig = hermitian_eig(&mat)?;
        let scale = eig.max().abs().max(1.0);
        if eig.min() < -tol::PSD * scale {
            return Err(Error::Positivity { min_eigenvalue: eig.min() });
        }
        if eig.max() > 1.0 + tol::PSD {
            return Err(Error::InvalidValue(format!("effect eigenvalue {} exceeds 1", eig.max())));
        }
        Ok(Self(mat.hermitian_part()))
    }

    pub fn identity(d: usize) -> Self {
        Self(ComplexMatrix::identity(d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    /// `Tr[E ρ]`
    pub fn probability(&self, rho: &DensityMatrix) -> f64 {
        trace_product(&self.0, rho.matrix())
    }
}

impl TryFrom<ComplexMatrix> for Effect {
    type Error = Error;

    fn try_from(m: ComplexMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<Effect> for ComplexMatrix {
    fn from(e: Effect) -> Self {
        e.0
    }
}

/// Complete set of effects, `Σ E_m = I`.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    effects: Vec<Effect>,
}

impl Povm {
    pub fn new(effects: Vec<Effect>) -> Result<Self> {
        let d = check_common_dim(effects.iter().map(Effect::dim))?;
        let mut sum = ComplexMatrix::zeros(d, d);
        for e in &effects {
            sum = &sum + e.matrix();
        }
        let residual = hermitian_norm(&(&sum - &ComplexMatrix::identity(d)))?;
        if residual > COMPLETENESS_TOL {
            return Err(Error::InvalidValue(format!("effects sum to identity only within {residual:.3e}")));
        }
        Ok(Self { effects })
    }

    pub fn from_matrices(mats: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(mats.into_iter().map(Effect::new).collect::<Result<_>>()?)
    }

    /// Projective measurement in the computational basis.
    pub fn computational(d: usize) -> Self {
        let effects = (0..d)
            .map(|k| {
                let mut p = vec![0.0; d];
                p[k] = 1.0;
                Effect(ComplexMatrix::from_diagonal(&p))
            })
            .collect();
        Self { effects }
    }

    /// Random `n`-outcome POVM, the effects of [`KrausPovm::random`].
    pub fn random<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Self {
        let k = KrausPovm::random(d, n, rng);
        let effects = (0..n).map(|i| Effect(k.effect(i).expect("in range").hermitian_part())).collect();
        Self { effects }
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }
}

/// Measurement operators `M_i` with `Σ M_i† M_i = I`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ComplexMatrix>", into = "Vec<ComplexMatrix>")]
pub struct KrausPovm {
    ops: Vec<ComplexMatrix>,
}

impl KrausPovm {
    pub fn new(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let d = check_common_dim(ops.iter().map(|m| m.nrows()))?;
        for m in &ops {
            m.require_square()?;
        }
        let residual = kraus_completeness(&ops, d)?;
        if residual > COMPLETENESS_TOL {
            return Err(Error::InvalidValue(format!("Kraus operators complete only within {residual:.3e}")));
        }
        Ok(Self { ops })
    }

    /// `M_i = √E_i`.
    pub fn from_povm(povm: &Povm) -> Result<Self> {
        let ops = povm.effects.iter().map(|e| matrix_sqrt_psd(e.matrix())).collect::<Result<_>>()?;
        Ok(Self { ops })
    }

    /// `M_i = U_i √E_i`; the unitaries carry no information about the outcome.
    pub fn with_unitaries(povm: &Povm, unitaries: &[ComplexMatrix]) -> Result<Self> {
        if unitaries.len() != povm.len() {
            return Err(Error::shape("one unitary per outcome is required"));
        }
        let mut ops = Vec::with_capacity(povm.len());
        for (e, u) in povm.effects.iter().zip(unitaries) {
            if u.nrows() != e.dim() || !u.is_square() {
                return Err(Error::shape("unitary dimension differs from effect"));
            }
            let dev = (&u.adjoint() * u).max_abs_diff(&ComplexMatrix::identity(e.dim()));
            if dev > COMPLETENESS_TOL {
                return Err(Error::InvalidValue(format!("matrix is not unitary (deviation {dev:.3e})")));
            }
            ops.push(u * &matrix_sqrt_psd(e.matrix())?);
        }
        Ok(Self { ops })
    }

    pub fn trivial(d: usize) -> Self {
        Self { ops: vec![ComplexMatrix::identity(d)] }
    }

    /// Random `n`-outcome measurement: Gaussian operators `G_k` rescaled by `(Σ G†G)^{-1/2}`.
    pub fn random<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Self {
        let gs: Vec<DMatrix<Complex64>> = (0..n)
            .map(|_| {
                DMatrix::from_fn(d, d, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            })
            .collect();
        let mut s = DMatrix::<Complex64>::zeros(d, d);
        for g in &gs {
            s += g.adjoint() * g;
        }
        let eig = hermitian_eig(&ComplexMatrix::wrap(s)).expect("Gram matrix is Hermitian");
        let inv_root = eig.reconstruct_with(|x| 1.0 / x.sqrt());
        let ops = gs.into_iter().map(|g| &ComplexMatrix::wrap(g) * &inv_root).collect();
        Self { ops }
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn op(&self, i: usize) -> Result<&ComplexMatrix> {
        self.ops.get(i).ok_or_else(|| Error::Index(format!("outcome {i} of {}", self.ops.len())))
    }

    /// `E_i = M_i† M_i`
    pub fn effect(&self, i: usize) -> Result<ComplexMatrix> {
        let m = self.op(i)?;
        Ok(&m.adjoint() * m)
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

impl TryFrom<Vec<ComplexMatrix>> for KrausPovm {
    type Error = Error;

    fn try_from(v: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<KrausPovm> for Vec<ComplexMatrix> {
    fn from(k: KrausPovm) -> Self {
        k.ops
    }
}

fn check_common_dim(dims: impl Iterator<Item = usize>) -> Result<usize> {
    let dims: Vec<usize> = dims.collect();
    let first = *dims.first().ok_or_else(|| Error::shape("measurement needs at least one outcome"))?;
    if dims.iter().any(|&d| d != first) {
        return Err(Error::shape(format!("operators of mixed dimension {dims:?}")));
    }
    Ok(first)
}

fn kraus_completeness(ops: &[ComplexMatrix], d: usize) -> Result<f64> {
    let mut sum = ComplexMatrix::zeros(d, d);
    for m in ops {
        sum = &sum + &(&m.adjoint() * m);
    }
    hermitian_norm(&(&sum - &ComplexMatrix::identity(d)))
}

/// `ρ → M ρ M† / p` with `p = Tr[M† M ρ]`.
pub fn measurement_update(rho: &DensityMatrix, op: &KrausPovm, outcome: usize) -> Result<(DensityMatrix, f64)> {
    if rho.dim() != op.dim() {
        return Err(Error::shape("state and measurement dimensions differ"));
    }
    let m = op.op(outcome)?;
    let unnorm = &(m * rho.matrix()) * &m.adjoint();
    let prob = unnorm.trace().re;
    if !(prob > 0.0) {
        return Err(Error::ImpossibleOutcome);
    }
    Ok((DensityMatrix::from_trusted(unnorm.scale(1.0 / prob)), prob))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Owner {
    Alice,
    Bob,
    Eve,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementStep {
    pub owner: Owner,
    pub kraus: KrausPovm,
}

/// Chronological, owner-tagged sequence of measurements on one system.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementHistory {
    steps: Vec<MeasurementStep>,
}

impl MeasurementHistory {
    pub fn new(steps: Vec<MeasurementStep>) -> Result<Self> {
        check_common_dim(steps.iter().map(|s| s.kraus.dim()))
            .map_err(|_| Error::shape("history is empty or mixes dimensions"))?;
        Ok(Self { steps })
    }

    pub fn steps(&self) -> &[MeasurementStep] {
        &self.steps
    }

    pub fn dim(&self) -> usize {
        self.steps[0].kraus.dim()
    }

    /// Outcome counts of the given owner's steps, in chronological order.
    pub fn radices(&self, owner: Owner) -> Vec<usize> {
        self.steps.iter().filter(|s| s.owner == owner).map(|s| s.kraus.len()).collect()
    }
}

/// A history rewritten as one measurement with operators `𝒜_{ije}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatPovm {
    dim: usize,
    i_max: usize,
    j_max: usize,
    e_max: usize,
    ops: Vec<ComplexMatrix>,
}

impl FlatPovm {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn i_max(&self) -> usize {
        self.i_max
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn e_max(&self) -> usize {
        self.e_max
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    fn index(&self, i: usize, j: usize, e: usize) -> usize {
        (i * self.j_max + j) * self.e_max + e
    }

    pub fn op(&self, i: usize, j: usize, e: usize) -> Result<&ComplexMatrix> {
        if i >= self.i_max || j >= self.j_max || e >= self.e_max {
            return Err(Error::Index(format!(
                "({i}, {j}, {e}) outside ({}, {}, {})",
                self.i_max, self.j_max, self.e_max
            )));
        }
        Ok(&self.ops[self.index(i, j, e)])
    }

    /// All `(i, j, e, 𝒜_{ije})`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, usize, &ComplexMatrix)> + '_ {
        self.ops.iter().enumerate().map(move |(k, m)| {
            let e = k % self.e_max;
            let j = (k / self.e_max) % self.j_max;
            let i = k / (self.e_max * self.j_max);
            (i, j, e, m)
        })
    }

    /// `‖Σ 𝒜†𝒜 − I‖`
    pub fn completeness_residual(&self) -> f64 {
        kraus_completeness(&self.ops, self.dim).unwrap_or(f64::INFINITY)
    }
}

/// Flattens a history into `𝒜_{ije}` (newest step leftmost in each product).
pub fn flatten_history(h: &MeasurementHistory) -> Result<FlatPovm> {
    let d = h.dim();
    if h.steps.iter().any(|s| s.kraus.dim() != d) {
        return Err(Error::shape("history mixes dimensions"));
    }
    let radix_a = h.radices(Owner::Alice);
    let radix_b = h.radices(Owner::Bob);
    let radix_e = h.radices(Owner::Eve);
    let (i_max, j_max, e_max) = (
        radix_a.iter().product::<usize>(),
        radix_b.iter().product::<usize>(),
        radix_e.iter().product::<usize>(),
    );
    let all_radices: Vec<usize> = h.steps.iter().map(|s| s.kraus.len()).collect();
    let total: usize = all_radices.iter().product();

    let mut flat = FlatPovm { dim: d, i_max, j_max, e_max, ops: vec![ComplexMatrix::zeros(d, d); total] };
    for global in 0..total {
        let outcome = digits(global, &all_radices);
        let mut prod = ComplexMatrix::identity(d);
        let (mut i, mut j, mut e) = (0, 0, 0);
        for (step, &k) in h.steps.iter().zip(&outcome) {
            prod = &step.kraus.ops[k] * &prod;
            let n = step.kraus.len();
            match step.owner {
                Owner::Alice => i = i * n + k,
                Owner::Bob => j = j * n + k,
                Owner::Eve => e = e * n + k,
            }
        }
        let slot = flat.index(i, j, e);
        flat.ops[slot] = prod;
    }
    Ok(flat)
}

/// Which composite outcomes an observer knows; `None` means summed over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnownOutcomes {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alice: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bob: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eve: Option<usize>,
}

impl KnownOutcomes {
    pub fn alice(i: usize) -> Self {
        Self { alice: Some(i), ..Self::default() }
    }

    pub fn bob(j: usize) -> Self {
        Self { bob: Some(j), ..Self::default() }
    }

    /// Both Alice's and Bob's outcomes, as held by Charlie.
    pub fn charlie(i: usize, j: usize) -> Self {
        Self { alice: Some(i), bob: Some(j), eve: None }
    }

    fn matches(&self, i: usize, j: usize, e: usize) -> bool {
        self.alice.is_none_or(|a| a == i) && self.bob.is_none_or(|b| b == j) && self.eve.is_none_or(|x| x == e)
    }

    fn check(&self, f: &FlatPovm) -> Result<()> {
        for (name, v, max) in [("alice", self.alice, f.i_max), ("bob", self.bob, f.j_max), ("eve", self.eve, f.e_max)] {
            if let Some(v) = v {
                if v >= max {
                    return Err(Error::Index(format!("{name} outcome {v} of {max}")));
                }
            }
        }
        Ok(())
    }
}

/// Conditional state and its probability for a partial outcome assignment.
#[derive(Clone, Debug)]
pub struct Conditional {
    pub state: DensityMatrix,
    pub probability: f64,
}

/// `Σ_unknown 𝒜 𝒜† / 𝒩`, the state after the history applied to `I/d`.
///
/// With Hermitian Kraus operators (the default `√E`) the unconditioned state is
/// again `I/d`; folded-in unitaries or general Kraus operators need not be unital.
pub fn conditional_state(f: &FlatPovm, known: &KnownOutcomes) -> Result<DensityMatrix> {
    conditional(f, known).map(|c| c.state)
}

/// As [`conditional_state`], also returning the probability of the assignment.
pub fn conditional(f: &FlatPovm, known: &KnownOutcomes) -> Result<Conditional> {
    known.check(f)?;
    let d = f.dim;
    let mut acc = ComplexMatrix::zeros(d, d);
    for (i, j, e, a) in f.iter() {
        if known.matches(i, j, e) {
            acc = &acc + &(a * &a.adjoint());
        }
    }
    let weight = acc.trace().re;
    if !(weight > 0.0) {
        return Err(Error::ImpossibleOutcome);
    }
    Ok(Conditional { state: DensityMatrix::from_trusted(acc.scale(1.0 / weight)), probability: weight / d as f64 })
}

/// Conditional state for an arbitrary initial state `ρ₀`, `Σ 𝒜 ρ₀ 𝒜† / 𝒩`.
///
/// The multi-observer analysis assumes `ρ₀ = I/d`; this variant is kept apart
/// from [`conditional_state`] for experiments with shared prior knowledge.
pub fn conditional_state_with_initial(
    f: &FlatPovm,
    rho0: &DensityMatrix,
    known: &KnownOutcomes,
) -> Result<Conditional> {
    known.check(f)?;
    if rho0.dim() != f.dim {
        return Err(Error::shape("initial state dimension differs from history"));
    }
    let mut acc = ComplexMatrix::zeros(f.dim, f.dim);
    for (i, j, e, a) in f.iter() {
        if known.matches(i, j, e) {
            acc = &acc + &(&(a * rho0.matrix()) * &a.adjoint());
        }
    }
    let p = acc.trace().re;
    if !(p > 0.0) {
        return Err(Error::ImpossibleOutcome);
    }
    Ok(Conditional { state: DensityMatrix::from_trusted(acc.scale(1.0 / p)), probability: p })
}

/// Completeness and positivity diagnostics; never fails on bad input.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PovmReport {
    /// `‖Σ E − I‖` in spectral norm.
    pub completeness_residual: f64,
    /// Smallest eigenvalue of each effect.
    pub psd_margins: Vec<f64>,
    /// `1 − λ_max` of each effect.
    pub upper_margins: Vec<f64>,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Checks a list of effects for completeness and positivity.
pub fn validate_povm(effects: &[ComplexMatrix]) -> PovmReport {
    let mut failures = Vec::new();
    let mut psd_margins = Vec::new();
    let mut upper_margins = Vec::new();
    let d = effects.first().map_or(0, |e| e.nrows());
    let mut sum = ComplexMatrix::zeros(d.max(1), d.max(1));
    let mut shapes_ok = d > 0;
    for (k, e) in effects.iter().enumerate() {
        if !e.is_square() || e.nrows() != d {
            failures.push(format!("effect {k}: shape {}x{} (expected {d}x{d})", e.nrows(), e.ncols()));
            shapes_ok = false;
            continue;
        }
        match hermitian_eig(e) {
            Ok(eig) => {
                psd_margins.push(eig.min());
                upper_margins.push(1.0 - eig.max());
                if eig.min() < -tol::PSD {
                    failures.push(format!("effect {k}: negative eigenvalue {:.3e}", eig.min()));
                }
                if eig.max() > 1.0 + tol::PSD {
                    failures.push(format!("effect {k}: eigenvalue {:.6} above 1", eig.max()));
                }
            }
            Err(err) => failures.push(format!("effect {k}: {err}")),
        }
        sum = &sum + e;
    }
    if effects.is_empty() {
        failures.push("no effects".into());
    }
    let completeness_residual = if shapes_ok {
        hermitian_norm(&(&sum - &ComplexMatrix::identity(d)).hermitian_part()).unwrap_or(f64::INFINITY)
    } else {
        f64::INFINITY
    };
    if completeness_residual > COMPLETENESS_TOL {
        failures.push(format!("completeness residual {completeness_residual:.3e}"));
    }
    PovmReport { completeness_residual, psd_margins, upper_margins, passed: failures.is_empty(), failures }
}

/// Checks Kraus operators through their effects `M†M`.
pub fn validate_kraus(ops: &[ComplexMatrix]) -> PovmReport {
    let effects: Vec<ComplexMatrix> = ops.iter().map(|m| &m.adjoint() * m).collect();
    validate_povm(&effects)
}
