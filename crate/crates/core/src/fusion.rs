//! Consistency of two states of knowledge and the realizability construction.
//!
//! Two states are consistent when their supports intersect. Any state `σ`
//! supported in that intersection can be split off both of them as a common
//! term, `ρ_A = ασ + Σ p^A_k |φ^A_k⟩⟨φ^A_k|` and likewise for `ρ_B`, and a
//! tripartite pure state on `S ⊗ S_A ⊗ S_B` then realizes `ρ_A`, `ρ_B` for two
//! observers and `σ` for a third who holds both records.
//!
//! Tensor order is `S` (most significant), then `S_A` of dimension `N + L`,
//! then `S_B` of dimension `N + K`, where `N = rank σ` and `K`, `L` count the
//! remainder terms of `ρ_A`, `ρ_B`. Alice's remainders sit on `ψ^A` in `S_A`
//! and on the labels `B_{N+k}` in `S_B`; Bob's mirror this. Alice keeps only
//! outcomes `n ≤ N` and renormalizes, and the third observer keeps the
//! matched branches `n = m ≤ N` and averages them.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::haar::{random_density, random_unitary, sample_pure_state};
use crate::linalg::{
    c, hermitian_eig, partial_trace, subspace_intersection, support, tol, vector_literal, ComplexMatrix,
    ComplexVector, DensityMatrix, Subspace,
};
use crate::montecarlo;

/// Eigenvalues at or below this are dropped from spectral expansions.
const SPECTRAL_CUTOFF: f64 = 1e-12;

fn serialize_vector<S: Serializer>(v: &ComplexVector, s: S) -> std::result::Result<S::Ok, S::Error> {
    vector_literal(v).serialize(s)
}

fn same_dim(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::shape(format!("dimensions differ: {} vs {}", a.dim(), b.dim())));
    }
    Ok(())
}

/// `W M W†`
fn embed(basis: &ComplexMatrix, m: &ComplexMatrix) -> ComplexMatrix {
    &(basis * m) * &basis.adjoint()
}

/// Supports intersect; returns the verdict and the intersection.
pub fn check_consistency(rho_a: &DensityMatrix, rho_b: &DensityMatrix, tol: f64) -> Result<(bool, Subspace)> {
    same_dim(rho_a, rho_b)?;
    let i = subspace_intersection(&support(rho_a, tol), &support(rho_b, tol), tol)?;
    Ok((!i.is_empty(), i))
}

/// Largest `α ∈ [0, 1]` with `ρ − ασ ⪰ 0`; zero when `σ` leaves the support of `ρ`.
///
/// On the support of `ρ` this is `1 / λ_max(ρ^{-1/2} σ ρ^{-1/2})`.
pub fn max_common_weight(rho: &DensityMatrix, sigma: &DensityMatrix, tol: f64) -> f64 {
    if rho.dim() != sigma.dim() {
        return 0.0;
    }
    let w = support(rho, tol);
    if w.trace_outside(sigma.matrix()) > tol {
        return 0.0;
    }
    let b = w.basis_matrix();
    let restrict = |m: &ComplexMatrix| &(&b.adjoint() * m) * b;
    let rho_r = restrict(rho.matrix()).hermitian_part();
    let sigma_r = restrict(sigma.matrix()).hermitian_part();
    let inv_sqrt = match hermitian_eig(&rho_r) {
        Ok(e) => e.reconstruct_with(|x| 1.0 / x.sqrt()),
        Err(_) => return 0.0,
    };
    let m = (&(&inv_sqrt * &sigma_r) * &inv_sqrt).hermitian_part();
    match hermitian_eig(&m) {
        Ok(e) if e.max() > 0.0 => (1.0 / e.max()).min(1.0),
        _ => 0.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RemainderTerm {
    pub weight: f64,
    #[serde(serialize_with = "serialize_vector")]
    pub state: ComplexVector,
}

/// `ρ_A = ασ + Σ p^A_k |φ^A_k⟩⟨φ^A_k|`, `ρ_B = βσ + Σ p^B_l |φ^B_l⟩⟨φ^B_l|`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommonTermDecomposition {
    pub rho_a: DensityMatrix,
    pub rho_b: DensityMatrix,
    pub sigma: DensityMatrix,
    pub alpha: f64,
    pub beta: f64,
    pub remainder_a: Vec<RemainderTerm>,
    pub remainder_b: Vec<RemainderTerm>,
}

impl CommonTermDecomposition {
    fn rebuild(sigma: &DensityMatrix, weight: f64, terms: &[RemainderTerm]) -> ComplexMatrix {
        terms.iter().fold(sigma.matrix().scale(weight), |acc, t| {
            &acc + &ComplexMatrix::projector(&t.state).scale(t.weight)
        })
    }

    /// `ασ + Σ p^A_k |φ^A_k⟩⟨φ^A_k|`
    pub fn reconstruct_a(&self) -> ComplexMatrix {
        Self::rebuild(&self.sigma, self.alpha, &self.remainder_a)
    }

    pub fn reconstruct_b(&self) -> ComplexMatrix {
        Self::rebuild(&self.sigma, self.beta, &self.remainder_b)
    }
}

fn remainder(rho: &DensityMatrix, sigma: &DensityMatrix, weight: f64) -> Result<Vec<RemainderTerm>> {
    if !(0.0..=1.0).contains(&weight) {
        return Err(Error::InvalidValue(format!("common weight {weight} outside [0, 1]")));
    }
    let r = (rho.matrix() - &sigma.matrix().scale(weight)).hermitian_part();
    let eig = hermitian_eig(&r)?;
    if eig.min() < -1e-10 {
        return Err(Error::Positivity { min_eigenvalue: eig.min() });
    }
    Ok(eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > SPECTRAL_CUTOFF)
        .map(|(k, &v)| RemainderTerm { weight: v, state: eig.vectors.column(k) })
        .collect())
}

/// Splits `ασ` off `ρ_A` and `βσ` off `ρ_B`, expanding what is left in its eigenbasis.
pub fn decompose_common(
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
    sigma: &DensityMatrix,
    alpha: f64,
    beta: f64,
) -> Result<CommonTermDecomposition> {
    same_dim(rho_a, rho_b)?;
    same_dim(rho_a, sigma)?;
    Ok(CommonTermDecomposition {
        remainder_a: remainder(rho_a, sigma, alpha)?,
        remainder_b: remainder(rho_b, sigma, beta)?,
        rho_a: rho_a.clone(),
        rho_b: rho_b.clone(),
        sigma: sigma.clone(),
        alpha,
        beta,
    })
}

/// The unnormalized tripartite state realizing a decomposition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TripartiteScenario {
    pub d_s: usize,
    pub d_a: usize,
    pub d_b: usize,
    /// `rank σ`
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub lambdas: Vec<f64>,
    #[serde(skip)]
    pub phis: Vec<ComplexVector>,
    #[serde(serialize_with = "serialize_vector")]
    pub psi: ComplexVector,
    pub decomposition: CommonTermDecomposition,
}

impl TripartiteScenario {
    pub fn dims(&self) -> [usize; 3] {
        [self.d_s, self.d_a, self.d_b]
    }

    pub fn norm_sq(&self) -> f64 {
        self.psi.norm_squared()
    }

    fn index(&self, s: usize, a: usize, b: usize) -> usize {
        (s * self.d_a + a) * self.d_b + b
    }
}

/// Builds `|Ψ⟩ = Σ √λ_i |φ_i⟩|A_i⟩|B_i⟩ + Σ √(p^A_k/α) |φ^A_k⟩|ψ^A⟩|B_{N+k}⟩
/// + Σ √(p^B_l/β) |φ^B_l⟩|A_{N+l}⟩|ψ^B⟩`.
pub fn brun_construct(dec: &CommonTermDecomposition) -> Result<TripartiteScenario> {
    if !(dec.alpha > 0.0 && dec.beta > 0.0) {
        return Err(Error::DegenerateConstruction { alpha: dec.alpha, beta: dec.beta });
    }
    let eig = dec.sigma.eig();
    let keep: Vec<usize> = (0..eig.values.len()).filter(|&i| eig.values[i] > SPECTRAL_CUTOFF).collect();
    let lambdas: Vec<f64> = keep.iter().map(|&i| eig.values[i]).collect();
    let phis: Vec<ComplexVector> = keep.iter().map(|&i| eig.vectors.column(i)).collect();
    let (n, k, l) = (lambdas.len(), dec.remainder_a.len(), dec.remainder_b.len());
    let d_s = dec.sigma.dim();
    let mut sc = TripartiteScenario {
        d_s,
        d_a: n + l,
        d_b: n + k,
        n,
        k,
        l,
        lambdas,
        phis,
        psi: ComplexVector::zeros(d_s * (n + l) * (n + k)),
        decomposition: dec.clone(),
    };
    let uniform = 1.0 / (n as f64).sqrt();
    let mut psi = ComplexVector::zeros(sc.psi.len());
    for (i, (lam, phi)) in sc.lambdas.iter().zip(&sc.phis).enumerate() {
        for s in 0..d_s {
            psi[sc.index(s, i, i)] += phi[s] * lam.sqrt();
        }
    }
    for (kk, t) in dec.remainder_a.iter().enumerate() {
        let amp = (t.weight / dec.alpha).sqrt() * uniform;
        for s in 0..d_s {
            for a in 0..n {
                psi[sc.index(s, a, n + kk)] += t.state[s] * amp;
            }
        }
    }
    for (ll, t) in dec.remainder_b.iter().enumerate() {
        let amp = (t.weight / dec.beta).sqrt() * uniform;
        for s in 0..d_s {
            for b in 0..n {
                psi[sc.index(s, n + ll, b)] += t.state[s] * amp;
            }
        }
    }
    sc.psi = psi;
    Ok(sc)
}

/// Outcome statistics and states produced by running the construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstructionReport {
    pub norm_sq: f64,
    /// Alice's `P(n)`, `n = 1..N`, from the projected state.
    pub p_n: Vec<f64>,
    /// `(λ_n + (1 − α)/(αN)) / ‖Ψ‖²`
    pub p_n_formula: Vec<f64>,
    pub p_m: Vec<f64>,
    pub p_m_formula: Vec<f64>,
    pub alice_states: Vec<DensityMatrix>,
    pub bob_states: Vec<DensityMatrix>,
    pub rho_a_recovered: DensityMatrix,
    pub rho_b_recovered: DensityMatrix,
    /// Probability of each matched branch `n = m`.
    pub charlie_branch_probabilities: Vec<f64>,
    /// Total probability of the branches `n ≠ m`, both at most `N`.
    pub mismatched_probability: f64,
    pub charlie_state: DensityMatrix,
    pub rho_a_error: f64,
    pub rho_b_error: f64,
    pub charlie_error: f64,
    pub p_n_error: f64,
}

fn basis_projector(d: usize, i: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d).into_dmatrix();
    m[(i, i)] = c(1.0, 0.0);
    ComplexMatrix::wrap(m)
}

/// Unnormalized state of `S` after projecting `S_A` onto `|A_a⟩` and/or `S_B` onto `|B_b⟩`.
fn project_to_system(sc: &TripartiteScenario, a: Option<usize>, b: Option<usize>) -> Result<ComplexMatrix> {
    let id = |d| ComplexMatrix::identity(d);
    let pa = a.map_or_else(|| id(sc.d_a), |i| basis_projector(sc.d_a, i));
    let pb = b.map_or_else(|| id(sc.d_b), |i| basis_projector(sc.d_b, i));
    let proj = crate::linalg::tensor(&crate::linalg::tensor(&id(sc.d_s), &pa), &pb);
    let v = proj.apply(&sc.psi);
    partial_trace(&ComplexMatrix::projector(&v), &sc.dims(), &[0])
}

fn normalize(m: &ComplexMatrix) -> Result<DensityMatrix> {
    DensityMatrix::normalized(m.hermitian_part())
}

/// Runs Alice's, Bob's and the joint post-selected measurements on `|Ψ⟩`.
pub fn simulate_construction(sc: &TripartiteScenario) -> Result<ConstructionReport> {
    let norm = sc.norm_sq();
    let dec = &sc.decomposition;
    let n_f = sc.n as f64;

    type Side = (Vec<f64>, Vec<f64>, Vec<DensityMatrix>, DensityMatrix);
    let side = |alice: bool| -> Result<Side> {
        let weight = if alice { dec.alpha } else { dec.beta };
        let mut probs = Vec::with_capacity(sc.n);
        let mut formula = Vec::with_capacity(sc.n);
        let mut states = Vec::with_capacity(sc.n);
        let mut total = ComplexMatrix::zeros(sc.d_s, sc.d_s);
        for i in 0..sc.n {
            let m = if alice { project_to_system(sc, Some(i), None)? } else { project_to_system(sc, None, Some(i))? };
            probs.push(m.trace().re / norm);
            formula.push((sc.lambdas[i] + (1.0 - weight) / (weight * n_f)) / norm);
            states.push(normalize(&m)?);
            total = &total + &m;
        }
        Ok((probs, formula, states, normalize(&total)?))
    };
    let (p_n, p_n_formula, alice_states, rho_a_recovered) = side(true)?;
    let (p_m, p_m_formula, bob_states, rho_b_recovered) = side(false)?;

    let mut branches = Vec::with_capacity(sc.n);
    let mut matched = ComplexMatrix::zeros(sc.d_s, sc.d_s);
    let mut mismatched = 0.0;
    for i in 0..sc.n {
        for j in 0..sc.n {
            let m = project_to_system(sc, Some(i), Some(j))?;
            let p = m.trace().re / norm;
            if i == j {
                branches.push(p);
                matched = &matched + &m;
            } else {
                mismatched += p;
            }
        }
    }
    let charlie_state = normalize(&matched)?;

    let p_n_error = p_n
        .iter()
        .zip(&p_n_formula)
        .chain(p_m.iter().zip(&p_m_formula))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(ConstructionReport {
        norm_sq: norm,
        rho_a_error: rho_a_recovered.matrix().max_abs_diff(dec.rho_a.matrix()),
        rho_b_error: rho_b_recovered.matrix().max_abs_diff(dec.rho_b.matrix()),
        charlie_error: charlie_state.matrix().max_abs_diff(dec.sigma.matrix()),
        p_n,
        p_n_formula,
        p_m,
        p_m_formula,
        alice_states,
        bob_states,
        rho_a_recovered,
        rho_b_recovered,
        charlie_branch_probabilities: branches,
        mismatched_probability: mismatched,
        charlie_state,
        p_n_error,
    })
}

/// One full realization of a chosen common state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Realization {
    pub sigma: DensityMatrix,
    pub alpha_max: f64,
    pub beta_max: f64,
    pub scenario: TripartiteScenario,
    pub report: ConstructionReport,
    /// Charlie's state equals `σ` within `1e-10`.
    pub verified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AmbiguityReport {
    pub intersection_dim: usize,
    pub realizations: [Realization; 2],
    /// Trace distance between the two Charlie states.
    pub trace_distance: f64,
}

/// Decomposes, constructs and simulates with `α`, `β` at half their maximum.
pub fn realize(rho_a: &DensityMatrix, rho_b: &DensityMatrix, sigma: &DensityMatrix) -> Result<Realization> {
    realize_with_weights(rho_a, rho_b, sigma, None, None)
}

/// As [`realize`], with explicit common weights where given.
pub fn realize_with_weights(
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
    sigma: &DensityMatrix,
    alpha: Option<f64>,
    beta: Option<f64>,
) -> Result<Realization> {
    let (_, inter) = check_consistency(rho_a, rho_b, tol::RANK)?;
    same_dim(rho_a, sigma)?;
    let residual = inter.trace_outside(sigma.matrix());
    if residual > 1e-9 {
        return Err(Error::LemmaPrecondition { residual });
    }
    let alpha_max = max_common_weight(rho_a, sigma, tol::RANK);
    let beta_max = max_common_weight(rho_b, sigma, tol::RANK);
    let dec = decompose_common(
        rho_a,
        rho_b,
        sigma,
        alpha.unwrap_or(alpha_max / 2.0),
        beta.unwrap_or(beta_max / 2.0),
    )?;
    let scenario = brun_construct(&dec)?;
    let report = simulate_construction(&scenario)?;
    let verified = report.charlie_error < 1e-10 && report.rho_a_error < 1e-10 && report.rho_b_error < 1e-10;
    Ok(Realization { sigma: sigma.clone(), alpha_max, beta_max, scenario, report, verified })
}

/// Realizes two common states for the same pair and compares the third observer's results.
pub fn demonstrate_ambiguity(
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
    sigma1: &DensityMatrix,
    sigma2: &DensityMatrix,
) -> Result<AmbiguityReport> {
    let (_, inter) = check_consistency(rho_a, rho_b, tol::RANK)?;
    let r1 = realize(rho_a, rho_b, sigma1)?;
    let r2 = realize(rho_a, rho_b, sigma2)?;
    let trace_distance = r1.report.charlie_state.trace_distance(&r2.report.charlie_state)?;
    Ok(AmbiguityReport { intersection_dim: inter.dim(), realizations: [r1, r2], trace_distance })
}

/// How candidate common states are drawn inside the support intersection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureFamily {
    /// Invariant pure states.
    #[default]
    HaarPure,
    /// Full-rank states with an invariant eigenbasis and flat spectrum.
    RandomMixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoryMeasureConfig {
    #[serde(default)]
    pub family: MeasureFamily,
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Power applied to each history's joint probability.
    #[serde(default = "default_exponent")]
    pub weight_exponent: f64,
}

fn default_exponent() -> f64 {
    1.0
}

impl HistoryMeasureConfig {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        Self { family: MeasureFamily::default(), n_samples, seed, weight_exponent: 1.0 }
    }
}

/// Result of the averaged fusion. The measure over histories is a modelling
/// choice, so the state is labelled exploratory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AveragedFusion {
    pub label: &'static str,
    pub state: DensityMatrix,
    pub family: MeasureFamily,
    pub n_samples: usize,
    pub seed: u64,
    pub intersection_dim: usize,
    pub effective_sample_size: f64,
}

/// Joint probability `1/‖Ψ‖²` that the construction for `σ` (at half the
/// maximum weights) lands in a matched branch.
pub fn history_weight(rho_a: &DensityMatrix, rho_b: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let a = max_common_weight(rho_a, sigma, tol::RANK) / 2.0;
    let b = max_common_weight(rho_b, sigma, tol::RANK) / 2.0;
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    1.0 / (1.0 + (1.0 - a) / a + (1.0 - b) / b)
}

/// Weighted average of common states over a family of measurement histories.
pub fn averaged_fusion(rho_a: &DensityMatrix, rho_b: &DensityMatrix, cfg: &HistoryMeasureConfig) -> Result<AveragedFusion> {
    if cfg.n_samples == 0 {
        return Err(Error::InvalidValue("at least one sample is required".into()));
    }
    let (consistent, inter) = check_consistency(rho_a, rho_b, tol::RANK)?;
    if !consistent {
        return Err(Error::InconsistentStates);
    }
    let d = rho_a.dim();
    let k = inter.dim();
    let basis = inter.basis_matrix().clone();
    let partials = montecarlo::chunked(cfg.n_samples, cfg.seed, |rng, count| {
        let mut acc = DMatrix::<Complex64>::zeros(d, d);
        let (mut sw, mut sw2) = (0.0, 0.0);
        for _ in 0..count {
            let local = match cfg.family {
                MeasureFamily::HaarPure => sample_pure_state(k, rng).map(|s| s.projector()),
                MeasureFamily::RandomMixed => random_density(k, k, rng).map(DensityMatrix::into_matrix),
            }
            .expect("intersection is non-empty");
            let sigma = DensityMatrix::from_trusted(embed(&basis, &local));
            let w = history_weight(rho_a, rho_b, &sigma).powf(cfg.weight_exponent);
            acc += sigma.matrix().as_dmatrix() * c(w, 0.0);
            sw += w;
            sw2 += w * w;
        }
        (acc, sw, sw2)
    });
    let mut acc = DMatrix::<Complex64>::zeros(d, d);
    let (mut sw, mut sw2) = (0.0, 0.0);
    for (m, a, b) in partials {
        acc += m;
        sw += a;
        sw2 += b;
    }
    if !(sw > 0.0) {
        return Err(Error::ImpossibleOutcome);
    }
    Ok(AveragedFusion {
        label: "EXPLORATORY",
        state: DensityMatrix::from_trusted(ComplexMatrix::wrap(acc / c(sw, 0.0))),
        family: cfg.family,
        n_samples: cfg.n_samples,
        seed: cfg.seed,
        intersection_dim: k,
        effective_sample_size: sw * sw / sw2,
    })
}

/// Random consistent pair with a random common state in the intersection of
/// their supports. Supports are spans of columns of one random unitary,
/// overlapping in at least one direction.
pub fn random_consistent_instance<R: Rng + ?Sized>(
    d: usize,
    rng: &mut R,
) -> Result<(DensityMatrix, DensityMatrix, DensityMatrix)> {
    if d == 0 {
        return Err(Error::shape("dimension must be at least 1"));
    }
    let u = random_unitary(d, rng);
    let rank_a = rng.random_range(1..=d);
    let rank_b = rng.random_range(1..=d);
    // Columns [0, rank_a) for A and [start, start + rank_b) for B with start < rank_a.
    let start = rng.random_range(0..rank_a).min(d - rank_b);
    let cols = |from: usize, len: usize| -> ComplexMatrix {
        let vs: Vec<ComplexVector> = (from..from + len).map(|j| u.column(j)).collect();
        ComplexMatrix::from_columns(d, &vs)
    };
    let inter_lo = start;
    let inter_hi = rank_a.min(start + rank_b);
    let make = |basis: ComplexMatrix, rank: usize, rng: &mut R| -> Result<DensityMatrix> {
        let local = random_density(basis.ncols(), rank, rng)?;
        Ok(DensityMatrix::from_trusted(embed(&basis, local.matrix())))
    };
    let rho_a = make(cols(0, rank_a), rank_a, rng)?;
    let rho_b = make(cols(start, rank_b), rank_b, rng)?;
    let k = inter_hi - inter_lo;
    let sigma_rank = rng.random_range(1..=k);
    let sigma = make(cols(inter_lo, k), sigma_rank, rng)?;
    Ok((rho_a, rho_b, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::montecarlo::stream_rng;

    fn ket(v: &[f64]) -> ComplexVector {
        ComplexVector::from_iterator(v.len(), v.iter().map(|&x| c(x, 0.0)))
    }

    fn pure(v: &[f64]) -> DensityMatrix {
        DensityMatrix::pure(&ket(v)).unwrap()
    }

    fn half() -> DensityMatrix {
        DensityMatrix::maximally_mixed(2)
    }

    fn s2() -> f64 {
        std::f64::consts::FRAC_1_SQRT_2
    }

    #[test]
    fn consistency_examples() {
        let zero = pure(&[1.0, 0.0]);
        let one = pure(&[0.0, 1.0]);
        let plus = pure(&[s2(), s2()]);
        let (ok, i) = check_consistency(&zero, &zero, 1e-9).unwrap();
        assert!(ok && i.dim() == 1);
        assert!(!check_consistency(&zero, &one, 1e-9).unwrap().0);
        let (ok, i) = check_consistency(&half(), &plus, 1e-9).unwrap();
        assert!(ok && i.dim() == 1);
        assert!(i.residual(&ket(&[s2(), s2()])) < 1e-12);
        let three = DensityMatrix::maximally_mixed(3);
        assert!(matches!(check_consistency(&half(), &three, 1e-9), Err(Error::Shape(_))));
    }

    #[test]
    fn max_weight_examples() {
        let zero = pure(&[1.0, 0.0]);
        assert!((max_common_weight(&half(), &half(), 1e-9) - 1.0).abs() < 1e-12);
        assert!((max_common_weight(&half(), &zero, 1e-9) - 0.5).abs() < 1e-12);
        assert_eq!(max_common_weight(&zero, &pure(&[s2(), s2()]), 1e-9), 0.0);
    }

    /// Bisection on the smallest eigenvalue of `ρ − ασ`.
    fn bisect_weight(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
        let feasible = |a: f64| {
            let r = rho.matrix() - &sigma.matrix().scale(a);
            hermitian_eig(&r.hermitian_part()).unwrap().min() >= -1e-13
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        if feasible(1.0) {
            return 1.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    #[test]
    fn max_weight_matches_bisection() {
        let mut rng = stream_rng(21, 0);
        for _ in 0..50 {
            let d = rng.random_range(2..=4);
            let (rho_a, _, sigma) = random_consistent_instance(d, &mut rng).unwrap();
            let a = max_common_weight(&rho_a, &sigma, 1e-9);
            assert!((a - bisect_weight(&rho_a, &sigma)).abs() < 1e-9, "{a}");
            assert!(a > 0.0);
        }
    }

    #[test]
    fn weight_one_only_for_equal_states() {
        let mut rng = stream_rng(22, 0);
        for _ in 0..30 {
            let rho = random_density(3, 3, &mut rng).unwrap();
            let other = random_density(3, 3, &mut rng).unwrap();
            assert!((max_common_weight(&rho, &rho, 1e-9) - 1.0).abs() < 1e-9);
            assert!(max_common_weight(&rho, &other, 1e-9) < 1.0 - 1e-6);
        }
    }

    #[test]
    fn decomposition_examples() {
        let zero = pure(&[1.0, 0.0]);
        let dec = decompose_common(&half(), &half(), &zero, 0.5, 0.5).unwrap();
        assert_eq!(dec.remainder_a.len(), 1);
        assert!((dec.remainder_a[0].weight - 0.5).abs() < 1e-12);
        assert!(dec.remainder_a[0].state[1].norm() > 1.0 - 1e-12);
        assert!(dec.reconstruct_b().max_abs_diff(half().matrix()) < 1e-12);

        let same = decompose_common(&half(), &half(), &half(), 1.0, 1.0).unwrap();
        assert!(same.remainder_a.is_empty() && same.remainder_b.is_empty());

        assert!(matches!(decompose_common(&half(), &half(), &zero, 0.6, 0.5), Err(Error::Positivity { .. })));
    }

    #[test]
    fn construction_examples() {
        let zero = pure(&[1.0, 0.0]);
        let dec = decompose_common(&half(), &half(), &zero, 0.5, 0.5).unwrap();
        let sc = brun_construct(&dec).unwrap();
        assert_eq!((sc.d_s, sc.d_a, sc.d_b), (2, 2, 2));
        assert!((sc.norm_sq() - 3.0).abs() < 1e-12);
        let rep = simulate_construction(&sc).unwrap();
        assert!((rep.p_n[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!(rep.rho_a_error < 1e-12 && rep.rho_b_error < 1e-12);
        assert!(rep.charlie_state.matrix().max_abs_diff(zero.matrix()) < 1e-12);
        assert!(rep.mismatched_probability.abs() < 1e-15);

        let phi = pure(&[0.6, 0.8]);
        let sc = brun_construct(&decompose_common(&phi, &phi, &phi, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!((sc.d_a, sc.d_b), (1, 1));
        let rep = simulate_construction(&sc).unwrap();
        assert!((rep.p_n[0] - 1.0).abs() < 1e-12);
        assert!(rep.charlie_error < 1e-12);

        let sc = brun_construct(&decompose_common(&half(), &half(), &half(), 1.0, 1.0).unwrap()).unwrap();
        assert_eq!(sc.n, 2);
        let rep = simulate_construction(&sc).unwrap();
        for st in &rep.alice_states {
            assert!((st.purity() - 1.0).abs() < 1e-12);
        }
        assert!(rep.rho_a_error < 1e-12);

        assert!(matches!(
            brun_construct(&decompose_common(&half(), &half(), &zero, 0.0, 0.5).unwrap()),
            Err(Error::DegenerateConstruction { .. })
        ));
    }

    #[test]
    fn round_trip_random_pairs() {
        let mut rng = stream_rng(23, 0);
        for _ in 0..100 {
            let d = rng.random_range(1..=4);
            let (rho_a, rho_b, sigma) = random_consistent_instance(d, &mut rng).unwrap();
            let r = realize(&rho_a, &rho_b, &sigma).unwrap();
            assert!(r.verified, "{:?}", (r.report.rho_a_error, r.report.rho_b_error, r.report.charlie_error));
            assert!(r.report.p_n_error < 1e-12);
        }
    }

    #[test]
    fn ambiguity_examples() {
        let zero = pure(&[1.0, 0.0]);
        let plus = pure(&[s2(), s2()]);
        let rep = demonstrate_ambiguity(&half(), &half(), &zero, &plus).unwrap();
        assert!((rep.trace_distance - s2()).abs() < 1e-9);
        assert!(rep.realizations.iter().all(|r| r.verified));
        let same = demonstrate_ambiguity(&half(), &half(), &zero, &zero).unwrap();
        assert!(same.trace_distance < 1e-12);
        let one = pure(&[0.0, 1.0]);
        assert!(matches!(demonstrate_ambiguity(&zero, &zero, &zero, &one), Err(Error::LemmaPrecondition { .. })));
    }

    #[test]
    fn one_dimensional_intersection_is_unique() {
        // Planes in C^3 sharing only (1, 1, 0)/√2.
        let a = Subspace::span(3, &[ket(&[1.0, 1.0, 0.0]), ket(&[0.0, 0.0, 1.0])], 1e-12).unwrap();
        let b = Subspace::span(3, &[ket(&[1.0, 1.0, 0.0]), ket(&[1.0, -1.0, 1.0])], 1e-12).unwrap();
        let rho_a = DensityMatrix::normalized(a.projector()).unwrap();
        let rho_b = DensityMatrix::normalized(b.projector()).unwrap();
        let shared = DensityMatrix::pure(&ket(&[1.0, 1.0, 0.0])).unwrap();
        let phased = DensityMatrix::pure(&ket(&[1.0, 1.0, 0.0]).map(|z| z * c(0.0, 1.0))).unwrap();
        let rep = demonstrate_ambiguity(&rho_a, &rho_b, &shared, &phased).unwrap();
        assert_eq!(rep.intersection_dim, 1);
        assert!(rep.trace_distance < 1e-9);
    }

    #[test]
    fn averaged_fusion_examples() {
        let zero = pure(&[1.0, 0.0]);
        for family in [MeasureFamily::HaarPure, MeasureFamily::RandomMixed] {
            let cfg = HistoryMeasureConfig { family, ..HistoryMeasureConfig::new(200, 1) };
            let out = averaged_fusion(&zero, &zero, &cfg).unwrap();
            assert!(out.state.matrix().max_abs_diff(zero.matrix()) < 1e-12);
        }
        let out = averaged_fusion(&half(), &half(), &HistoryMeasureConfig::new(100_000, 2)).unwrap();
        assert!(out.state.matrix().max_abs_diff(half().matrix()) < 5e-3);
        assert_eq!(out.label, "EXPLORATORY");
        let again = averaged_fusion(&half(), &half(), &HistoryMeasureConfig::new(100_000, 2)).unwrap();
        assert_eq!(out, again);
        assert!(matches!(
            averaged_fusion(&zero, &pure(&[0.0, 1.0]), &HistoryMeasureConfig::new(10, 0)),
            Err(Error::InconsistentStates)
        ));
    }

    #[test]
    fn averaged_fusion_stays_in_intersection() {
        let mut rng = stream_rng(24, 0);
        for _ in 0..10 {
            let (rho_a, rho_b, _) = random_consistent_instance(4, &mut rng).unwrap();
            let (_, inter) = check_consistency(&rho_a, &rho_b, tol::RANK).unwrap();
            let out = averaged_fusion(&rho_a, &rho_b, &HistoryMeasureConfig::new(500, 3)).unwrap();
            assert!(inter.trace_outside(out.state.matrix()).abs() < 1e-9);
        }
    }

    #[test]
    fn history_weight_matches_constructed_norm() {
        let mut rng = stream_rng(25, 0);
        for _ in 0..20 {
            let (rho_a, rho_b, sigma) = random_consistent_instance(3, &mut rng).unwrap();
            let r = realize(&rho_a, &rho_b, &sigma).unwrap();
            let matched: f64 = r.report.charlie_branch_probabilities.iter().sum();
            assert!((history_weight(&rho_a, &rho_b, &sigma) - matched).abs() < 1e-12);
        }
    }

    #[test]
    fn consistency_with_itself() {
        let mut rng = stream_rng(26, 0);
        for _ in 0..30 {
            let d = rng.random_range(1..=4);
            let rank = rng.random_range(1..=d);
            let rho = random_density(d, rank, &mut rng).unwrap();
            let (ok, inter) = check_consistency(&rho, &rho, tol::RANK).unwrap();
            assert!(ok);
            assert!(inter.same_span(&support(&rho, tol::RANK), 1e-9));
        }
    }
}
