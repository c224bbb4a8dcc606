//! Classical states of knowledge and their Bayesian combination.
//!
//! A likelihood model is normalized over outcomes (each column, one per
//! hypothesis, sums to one) but its rows, read as functions of the
//! hypothesis, are arbitrary non-negative weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matrix_sqrt_psd, tol, trace_product, ComplexMatrix, DensityMatrix};
use crate::measurement::Effect;

const NORMALIZATION_TOL: f64 = 1e-12;

/// Finite probability vector over hypotheses `n = 0..n_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbDist(Vec<f64>);

impl ProbDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::shape("empty distribution"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidValue("probabilities must be finite and non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidValue(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self(probs))
    }

    /// Normalizes non-negative weights; zero total is an impossible outcome.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidValue("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ImpossibleOutcome);
        }
        Ok(Self(weights.into_iter().map(|w| w / total).collect()))
    }

    /// Maximum-entropy distribution, the zero-knowledge starting point.
    pub fn flat(n: usize) -> Self {
        assert!(n > 0, "flat distribution needs at least one hypothesis");
        Self(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    /// Unique argmax, if any.
    pub fn argmax(&self) -> Option<usize> {
        let max = self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut hits = self.0.iter().enumerate().filter(|(_, &p)| p == max);
        let first = hits.next().map(|(i, _)| i);
        if hits.next().is_some() {
            None
        } else {
            first
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Diagonal density matrix with these populations.
    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::diagonal(&self.0).expect("probability vector is a valid density matrix")
    }
}

impl TryFrom<Vec<f64>> for ProbDist {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ProbDist> for Vec<f64> {
    fn from(p: ProbDist) -> Self {
        p.0
    }
}

/// Conditional probabilities `P(m|n)`: rows are outcomes, columns hypotheses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodModel {
    cond: Vec<Vec<f64>>,
}

impl LikelihoodModel {
    pub fn new(cond: Vec<Vec<f64>>) -> Result<Self> {
        let n = cond.first().map_or(0, Vec::len);
        if cond.is_empty() || n == 0 || cond.iter().any(|r| r.len() != n) {
            return Err(Error::shape("likelihood table must be a non-empty rectangle"));
        }
        if cond.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidValue("likelihoods must lie in [0, 1]".into()));
        }
        for col in 0..n {
            let s: f64 = cond.iter().map(|r| r[col]).sum();
            if (s - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidValue(format!(
                    "outcome probabilities for hypothesis {col} sum to {s}"
                )));
            }
        }
        Ok(Self { cond })
    }

    pub fn outcomes(&self) -> usize {
        self.cond.len()
    }

    pub fn hypotheses(&self) -> usize {
        self.cond[0].len()
    }

    /// `P(m|·)` as a function of the hypothesis.
    pub fn row(&self, m: usize) -> Result<&[f64]> {
        self.cond
            .get(m)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Index(format!("outcome {m} of {}", self.outcomes())))
    }
}

/// Deterministic relabelling `n → perm[n]` of hypotheses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationTransform {
    perm: Vec<usize>,
}

impl PermutationTransform {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || seen[p] {
                return Err(Error::InvalidValue(format!("{perm:?} is not a bijection")));
            }
            seen[p] = true;
        }
        Ok(Self { perm })
    }

    pub fn identity(n: usize) -> Self {
        Self { perm: (0..n).collect() }
    }

    /// `n → n + shift (mod len)`.
    pub fn cycle(n: usize, shift: usize) -> Self {
        Self { perm: (0..n).map(|i| (i + shift) % n).collect() }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn image(&self, n: usize) -> usize {
        self.perm[n]
    }
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn shannon_entropy(p: &ProbDist) -> f64 {
    -p.0.iter().filter(|&&x| x > 0.0).map(|&x| x * x.log2()).sum::<f64>()
}

/// `P(n|m) = P(m|n) P(n) / P(m)`.
pub fn bayes_update(prior: &ProbDist, model: &LikelihoodModel, outcome: usize) -> Result<ProbDist> {
    if model.hypotheses() != prior.len() {
        return Err(Error::shape(format!(
            "model covers {} hypotheses, prior {}",
            model.hypotheses(),
            prior.len()
        )));
    }
    let row = model.row(outcome)?;
    let joint: Vec<f64> = prior.0.iter().zip(row).map(|(p, l)| p * l).collect();
    ProbDist::from_weights(joint)
}

/// Folds a list of independent `(model, outcome)` observations into the prior.
///
/// The result is independent of the order of the evidence.
pub fn sequential_update(prior: &ProbDist, evidence: &[(&LikelihoodModel, usize)]) -> Result<ProbDist> {
    let mut weights = prior.0.clone();
    for (model, outcome) in evidence {
        if model.hypotheses() != prior.len() {
            return Err(Error::shape("evidence model size differs from prior"));
        }
        let row = model.row(*outcome)?;
        for (w, l) in weights.iter_mut().zip(row) {
            *w *= l;
        }
        // Rescale to avoid underflow on long evidence lists; normalization is deferred.
        let m = weights.iter().copied().fold(0.0, f64::max);
        if m > 0.0 {
            weights.iter_mut().for_each(|w| *w /= m);
        }
    }
    ProbDist::from_weights(weights)
}

/// Multiply and renormalize.
pub fn pool_classical(p: &ProbDist, q: &ProbDist) -> Result<ProbDist> {
    if p.len() != q.len() {
        return Err(Error::shape("distributions of different length"));
    }
    let prod: Vec<f64> = p.0.iter().zip(&q.0).map(|(a, b)| a * b).collect();
    ProbDist::from_weights(prod).map_err(|e| match e {
        Error::ImpossibleOutcome => Error::IncompatibleKnowledge,
        other => other,
    })
}

/// `result(T(n)) = P(n)`.
pub fn apply_transform(p: &ProbDist, t: &PermutationTransform) -> Result<ProbDist> {
    if p.len() != t.len() {
        return Err(Error::shape("permutation size differs from distribution"));
    }
    let mut out = vec![0.0; p.len()];
    for (n, &pn) in p.0.iter().enumerate() {
        out[t.image(n)] = pn;
    }
    Ok(ProbDist(out))
}

/// Bayes' rule written as a measurement on diagonal matrices:
/// `√E ρ √E / Tr[E ρ]`, returning the outcome probability alongside.
pub fn matrix_bayes_update(rho: &DensityMatrix, effect: &Effect) -> Result<(DensityMatrix, f64)> {
    if rho.dim() != effect.dim() {
        return Err(Error::shape("state and effect dimensions differ"));
    }
    for m in [rho.matrix(), effect.matrix()] {
        let off = m.off_diagonal_max();
        if off > tol::HERMITIAN {
            return Err(Error::NonDiagonal(off));
        }
    }
    let root = matrix_sqrt_psd(effect.matrix())?;
    let prob = trace_product(effect.matrix(), rho.matrix());
    if !(prob > 0.0) {
        return Err(Error::ImpossibleOutcome);
    }
    let post = (&(&root * rho.matrix()) * &root).scale(1.0 / prob);
    Ok((DensityMatrix::from_trusted(post), prob))
}

/// `ρ_A ρ_B / Tr[ρ_A ρ_B]` for commuting states.
pub fn pool_commuting_density(rho_a: &DensityMatrix, rho_b: &DensityMatrix) -> Result<DensityMatrix> {
    if rho_a.dim() != rho_b.dim() {
        return Err(Error::shape("states of different dimension"));
    }
    let comm = rho_a.matrix().commutator(rho_b.matrix()).frobenius_norm();
    if comm >= 1e-9 {
        return Err(Error::Noncommuting(comm));
    }
    let overlap = trace_product(rho_a.matrix(), rho_b.matrix());
    if !(overlap > 0.0) {
        return Err(Error::IncompatibleKnowledge);
    }
    let prod: ComplexMatrix = (rho_a.matrix() * rho_b.matrix()).scale(1.0 / overlap);
    Ok(DensityMatrix::from_trusted(prod))
}
