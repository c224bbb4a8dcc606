//! Bayesian state estimation over the invariant pure-state prior.
//!
//! Two evaluation paths are provided. The Monte-Carlo path keeps a weighted
//! ensemble of sampled pure states and handles arbitrary effects in any
//! dimension. The exact path covers qubits measured with diagonal effects
//! `A(x) = diag(x, 1 − x)`: with `r = ρ₁₁` uniform on `[0, 1]` under the flat
//! prior, the posterior is a polynomial `q(r)` and every predictive state is
//! `diag(m₁/m₀, 1 − m₁/m₀)` with `m_k = ∫ r^k q(r) dr`. Phase integrals kill
//! the off-diagonals. Coefficients are kept as exact rationals (every `f64`
//! is one), so two predictive states can be compared without round-off.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::haar::{accumulate_projector, fill_amplitudes, PureStateSample};
use crate::linalg::{ComplexMatrix, DensityMatrix};
use crate::measurement::Effect;
use crate::montecarlo::{self, CHUNK};

/// Largest Hilbert-space dimension `d^N` a de Finetti state may occupy.
pub const DEFINETTI_DIM_LIMIT: usize = 4096;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Unnormalized posterior density `q(r)` of the qubit population `r = ρ₁₁`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolynomialDensity {
    /// Ascending powers, trailing zeros trimmed.
    coeffs: Vec<BigRational>,
}

impl PolynomialDensity {
    /// The flat density `q ≡ 1`.
    pub fn flat() -> Self {
        Self { coeffs: vec![BigRational::one()] }
    }

    /// Builds a density from ascending coefficients, rejecting polynomials that
    /// dip below zero on a 1001-point grid of `[0, 1]`.
    pub fn new(coeffs: Vec<BigRational>) -> Result<Self> {
        let p = Self::trimmed(coeffs);
        for k in 0..=1000 {
            let v = p.eval(k as f64 / 1000.0);
            if v < -1e-12 {
                return Err(Error::InvalidValue(format!("density is negative ({v:.3e}) at r = {}", k as f64 / 1000.0)));
            }
        }
        Ok(p)
    }

    fn trimmed(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(BigRational::zero());
        }
        Self { coeffs }
    }

    /// Likelihood `Tr[A(x) ρ] = (2x − 1) r + (1 − x)`.
    pub fn likelihood(effect: &DiagonalEffect) -> Self {
        let x = effect.x();
        Self::trimmed(vec![BigRational::one() - x, x * BigInt::from(2) - BigRational::one()])
    }

    pub fn coefficients(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::trimmed(out)
    }

    /// `q(1 − r)`.
    pub fn reflect(&self) -> Self {
        // Horner in the variable (1 − r).
        let one_minus_r = Self { coeffs: vec![BigRational::one(), -BigRational::one()] };
        let mut acc = Self { coeffs: vec![BigRational::zero()] };
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(&one_minus_r);
            acc.coeffs[0] += c;
        }
        Self::trimmed(acc.coeffs)
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + to_f64(c))
    }

    /// `∫₀¹ r^k q(r) dr`, exactly.
    pub fn moment(&self, k: usize) -> BigRational {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c / BigInt::from(i + k + 1))
            .fold(BigRational::zero(), |acc, t| acc + t)
    }
}

impl fmt::Display for PolynomialDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match i {
                0 => format!("{c}"),
                1 => format!("({c}) r"),
                _ => format!("({c}) r^{i}"),
            })
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

/// The qubit effect `A(x) = diag(x, 1 − x)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagonalEffect {
    x: BigRational,
}

impl DiagonalEffect {
    pub fn new(x: BigRational) -> Result<Self> {
        if x.is_negative() || x > BigRational::one() {
            return Err(Error::InvalidEffect(format!("{x}")));
        }
        Ok(Self { x })
    }

    /// Exact conversion of a float parameter.
    pub fn from_f64(x: f64) -> Result<Self> {
        let r = BigRational::from_float(x).ok_or_else(|| Error::InvalidEffect(format!("{x}")))?;
        Self::new(r)
    }

    pub fn from_ratio(numer: i64, denom: i64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::InvalidEffect(format!("{numer}/0")));
        }
        Self::new(rat(numer, denom))
    }

    pub fn x(&self) -> &BigRational {
        &self.x
    }

    pub fn x_f64(&self) -> f64 {
        to_f64(&self.x)
    }

    pub fn effect(&self) -> Effect {
        let x = self.x_f64();
        Effect::new(ComplexMatrix::from_diagonal(&[x, 1.0 - x])).expect("0 ≤ x ≤ 1")
    }
}

/// Pure-state samples with non-negative weights, stored flat.
///
/// Amplitudes are shared between updates; only the weights are copied.
#[derive(Clone, Debug)]
pub struct WeightedStateEnsemble {
    dim: usize,
    amps: Arc<[Complex64]>,
    weights: Vec<f64>,
}

impl WeightedStateEnsemble {
    /// `n_samples` draws from the invariant prior, all with weight one.
    pub fn flat(d: usize, n_samples: usize, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::shape("dimension must be at least 1"));
        }
        if n_samples == 0 {
            return Err(Error::InvalidValue("at least one sample is required".into()));
        }
        let chunks = montecarlo::chunked(n_samples, seed, |rng, count| {
            let mut buf = vec![Complex64::new(0.0, 0.0); count * d];
            for s in buf.chunks_exact_mut(d) {
                fill_amplitudes(s, rng);
            }
            buf
        });
        let amps: Arc<[Complex64]> = chunks.concat().into();
        Ok(Self { dim: d, amps, weights: vec![1.0; n_samples] })
    }

    pub fn from_samples(samples: Vec<(PureStateSample, f64)>) -> Result<Self> {
        let dim = samples.first().map(|(s, _)| s.dim()).ok_or_else(|| Error::shape("empty ensemble"))?;
        let mut amps = Vec::with_capacity(dim * samples.len());
        let mut weights = Vec::with_capacity(samples.len());
        for (s, w) in samples {
            if s.dim() != dim {
                return Err(Error::shape("samples of different dimension"));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidValue(format!("weight {w}")));
            }
            amps.extend(s.amplitudes().iter());
            weights.push(w);
        }
        if weights.iter().all(|w| *w == 0.0) {
            return Err(Error::ImpossibleOutcome);
        }
        Ok(Self { dim, amps: amps.into(), weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn amplitudes(&self, i: usize) -> &[Complex64] {
        &self.amps[i * self.dim..(i + 1) * self.dim]
    }

    pub fn sample(&self, i: usize) -> PureStateSample {
        PureStateSample::from_amplitudes(self.amplitudes(i)).expect("stored samples are normalized")
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.chunks(CHUNK).map(|c| c.iter().sum::<f64>()).sum()
    }
}

/// Multiplies every weight by the likelihood `⟨ψ|E|ψ⟩` of its sample.
pub fn posterior_update(ens: &WeightedStateEnsemble, effect: &Effect) -> Result<WeightedStateEnsemble> {
    let d = ens.dim;
    if effect.dim() != d {
        return Err(Error::shape(format!("effect is {}-dimensional, ensemble is {d}", effect.dim())));
    }
    let e = effect.matrix();
    let weights: Vec<f64> = if e.off_diagonal_max() == 0.0 {
        let diag = e.real_diagonal();
        ens.amps
            .par_chunks_exact(d)
            .zip(ens.weights.par_iter())
            .map(|(psi, w)| w * psi.iter().zip(&diag).map(|(z, x)| x * z.norm_sqr()).sum::<f64>().max(0.0))
            .collect()
    } else {
        let m = e.as_dmatrix();
        ens.amps
            .par_chunks_exact(d)
            .zip(ens.weights.par_iter())
            .map(|(psi, w)| {
                let mut s = Complex64::new(0.0, 0.0);
                for i in 0..d {
                    for j in 0..d {
                        s += psi[i].conj() * m[(i, j)] * psi[j];
                    }
                }
                w * s.re.max(0.0)
            })
            .collect()
    };
    if weights.iter().all(|w| *w == 0.0) {
        return Err(Error::ImpossibleOutcome);
    }
    Ok(WeightedStateEnsemble { dim: d, amps: Arc::clone(&ens.amps), weights })
}

/// Weighted mean projector of the ensemble.
pub fn predictive_state(ens: &WeightedStateEnsemble) -> Result<DensityMatrix> {
    weighted_tensor_moment(ens, 1)
}

fn weighted_tensor_moment(ens: &WeightedStateEnsemble, n_copies: usize) -> Result<DensityMatrix> {
    let d = ens.dim;
    let big = d.pow(n_copies as u32);
    let partials: Vec<(DMatrix<Complex64>, f64)> = ens
        .amps
        .par_chunks(CHUNK * d)
        .zip(ens.weights.par_chunks(CHUNK))
        .map(|(amps, ws)| {
            let mut acc = DMatrix::<Complex64>::zeros(big, big);
            let mut total = 0.0;
            let mut buf = Vec::with_capacity(big);
            for (psi, &w) in amps.chunks_exact(d).zip(ws) {
                if w == 0.0 {
                    continue;
                }
                total += w;
                tensor_power_into(psi, n_copies, &mut buf);
                accumulate_projector(&mut acc, &buf, w);
            }
            (acc, total)
        })
        .collect();
    let mut acc = DMatrix::<Complex64>::zeros(big, big);
    let mut total = 0.0;
    for (m, t) in partials {
        acc += m;
        total += t;
    }
    if !(total > 0.0) {
        return Err(Error::ImpossibleOutcome);
    }
    Ok(DensityMatrix::from_trusted(ComplexMatrix::wrap(acc / Complex64::new(total, 0.0))))
}

fn tensor_power_into(psi: &[Complex64], n: usize, out: &mut Vec<Complex64>) {
    out.clear();
    out.push(Complex64::new(1.0, 0.0));
    for _ in 0..n {
        let prev = std::mem::take(out);
        out.extend(prev.iter().flat_map(|a| psi.iter().map(move |b| a * b)));
    }
}

/// Monte-Carlo estimate of `∫ P(ρ) ρ^{⊗N} dρ`.
///
/// Without a posterior the flat prior is sampled from `seed` in dimension
/// `d`; with one, its samples and weights are used and `d` must match.
pub fn definetti_state(
    d: usize,
    n_copies: usize,
    n_samples: usize,
    seed: u64,
    posterior: Option<&WeightedStateEnsemble>,
) -> Result<DensityMatrix> {
    if let Some(p) = posterior {
        if p.dim() != d {
            return Err(Error::shape(format!("posterior is {}-dimensional, expected {d}", p.dim())));
        }
    }
    let big = u32::try_from(n_copies).ok().and_then(|n| d.checked_pow(n)).unwrap_or(usize::MAX);
    if big > DEFINETTI_DIM_LIMIT {
        return Err(Error::DimensionGuard { dim: big, limit: DEFINETTI_DIM_LIMIT });
    }
    if n_copies == 0 {
        return Ok(DensityMatrix::maximally_mixed(1));
    }
    match posterior {
        Some(p) => weighted_tensor_moment(p, n_copies),
        None => weighted_tensor_moment(&WeightedStateEnsemble::flat(d, n_samples, seed)?, n_copies),
    }
}

/// `q(r) = Π_x [(2x − 1) r + (1 − x)]` for a sequence of diagonal effects.
pub fn qubit_diagonal_posterior(effects: &[DiagonalEffect]) -> PolynomialDensity {
    effects
        .iter()
        .fold(PolynomialDensity::flat(), |q, e| q.mul(&PolynomialDensity::likelihood(e)))
}

/// Exact predictive population `m₁/m₀`.
pub fn polynomial_population(q: &PolynomialDensity) -> Result<BigRational> {
    let m0 = q.moment(0);
    if !m0.is_positive() {
        return Err(Error::ImpossibleOutcome);
    }
    Ok(q.moment(1) / m0)
}

fn qubit_diagonal_state(r: &BigRational) -> DensityMatrix {
    let p = to_f64(r);
    let q = to_f64(&(BigRational::one() - r));
    DensityMatrix::from_trusted(ComplexMatrix::from_diagonal(&[p, q]))
}

/// Predictive single-copy state `diag(m₁/m₀, 1 − m₁/m₀)`.
pub fn polynomial_predictive(q: &PolynomialDensity) -> Result<DensityMatrix> {
    polynomial_population(q).map(|r| qubit_diagonal_state(&r))
}

/// Population of the state of an observer holding both observers' data.
pub fn pooled_population(qa: &PolynomialDensity, qb: &PolynomialDensity) -> Result<BigRational> {
    polynomial_population(&qa.mul(qb))
}

pub fn pooled_predictive(qa: &PolynomialDensity, qb: &PolynomialDensity) -> Result<DensityMatrix> {
    pooled_population(qa, qb).map(|r| qubit_diagonal_state(&r))
}

/// The `β` for which `[A(β), A(γ)]` gives the same predictive state as `[A(α)]`:
/// `β = [(γ − 2)(α + 1)/3 + 1/2] / [(2γ − 1)(α + 1)/3 − γ]`.
pub fn beta_constraint(alpha: &BigRational, gamma: &BigRational) -> Result<BigRational> {
    let third = rat(1, 3);
    let a1 = alpha + BigRational::one();
    let num = &third * (gamma - BigInt::from(2)) * &a1 + rat(1, 2);
    let den = &third * (gamma * BigInt::from(2) - BigRational::one()) * &a1 - gamma;
    if den.is_zero() {
        return Err(Error::SingularConstraint);
    }
    for (name, v) in [("alpha", alpha), ("gamma", gamma)] {
        if v.is_negative() || *v > BigRational::one() {
            return Err(Error::InvalidEffect(format!("{name} = {v}")));
        }
    }
    let beta = num / den;
    if beta.is_negative() || beta > BigRational::one() {
        return Err(Error::InvalidEffect(format!("beta = {beta}")));
    }
    Ok(beta)
}

pub fn beta_constraint_f64(alpha: f64, gamma: f64) -> Result<f64> {
    let conv = |v: f64| BigRational::from_float(v).ok_or_else(|| Error::InvalidEffect(format!("{v}")));
    beta_constraint(&conv(alpha)?, &conv(gamma)?).map(|b| to_f64(&b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditStatus {
    /// Printed value recomputed exactly.
    Reproduced,
    /// Printed value contradicted by exact computation.
    Discrepancy,
    /// Printed expression inconsistent, corrected reading used.
    Corrected,
    /// No printed counterpart; computed here.
    Derived,
}

impl fmt::Display for AuditStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AuditStatus::Reproduced => "reproduced",
            AuditStatus::Discrepancy => "DISCREPANCY",
            AuditStatus::Corrected => "corrected",
            AuditStatus::Derived => "derived",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditEntry {
    pub quantity: String,
    pub parameters: String,
    /// Published value, exact form.
    pub printed: Option<String>,
    pub printed_value: Option<f64>,
    /// Exact computed value.
    pub computed: String,
    pub computed_value: f64,
    pub symmetry_prediction: Option<f64>,
    pub status: AuditStatus,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlternativeInstance {
    pub alpha: String,
    pub gamma: String,
    pub beta: String,
    pub rho_a_11: f64,
    pub rho_a_prime_11: f64,
    pub sigma_11: f64,
    pub sigma_prime_11: f64,
    /// `|σ₁₁ − σ′₁₁|`
    pub separation: f64,
    pub priors_agree: bool,
    pub pooled_states_differ: bool,
}

/// Exact re-derivation of the two-strategy counterexample with a ledger of
/// where the published numbers and the computation agree or part ways.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub entries: Vec<AuditEntry>,
    /// Exact check that `q(r) = q(1 − r)` for the two-effect posterior at the published parameters.
    pub published_posterior_symmetric: bool,
    pub symmetry_argument: String,
    pub alternative: AlternativeInstance,
    pub conclusion: String,
}

impl AuditReport {
    pub fn discrepancies(&self) -> impl Iterator<Item = &AuditEntry> {
        self.entries.iter().filter(|e| e.status == AuditStatus::Discrepancy)
    }

    /// Human-readable table: published value, computed value, symmetry prediction.
    pub fn to_table(&self) -> String {
        let fmt_opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"));
        let mut rows: Vec<[String; 6]> = vec![[
            "quantity".into(),
            "parameters".into(),
            "PAPER".into(),
            "COMPUTED".into(),
            "symmetry".into(),
            "status".into(),
        ]];
        for e in &self.entries {
            let printed = match (&e.printed, e.printed_value) {
                (Some(s), Some(v)) => format!("{s} ({v:.6})"),
                _ => "-".into(),
            };
            rows.push([
                e.quantity.clone(),
                e.parameters.clone(),
                printed,
                format!("{} ({:.6})", e.computed, e.computed_value),
                fmt_opt(e.symmetry_prediction),
                e.status.to_string(),
            ]);
        }
        let widths: Vec<usize> = (0..6).map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::from("PAPER vs COMPUTED\n");
        for (i, r) in rows.iter().enumerate() {
            let line: Vec<String> = r.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
            if i == 0 {
                out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 10));
                out.push('\n');
            }
        }
        out.push_str("\nnotes\n");
        for e in self.entries.iter().filter(|e| !e.note.is_empty()) {
            out.push_str(&format!("  {}: {}\n", e.quantity, e.note));
        }
        out.push_str(&format!("\nsymmetry argument\n  {}\n", self.symmetry_argument));
        let a = &self.alternative;
        out.push_str(&format!(
            "\nalternative instance (alpha = {}, gamma = {}, beta = {})\n  rho_A[1,1] = {:.12}\n  rho'_A[1,1] = {:.12}\n  sigma[1,1] = {:.12}\n  sigma'[1,1] = {:.12}\n  |sigma - sigma'| = {:.6}\n",
            a.alpha, a.gamma, a.beta, a.rho_a_11, a.rho_a_prime_11, a.sigma_11, a.sigma_prime_11, a.separation
        ));
        out.push_str(&format!("\nconclusion\n  {}\n", self.conclusion));
        out
    }
}

fn effects(xs: &[&BigRational]) -> Vec<DiagonalEffect> {
    xs.iter().map(|x| DiagonalEffect::new((*x).clone()).expect("parameter in [0, 1]")).collect()
}

#[allow(clippy::too_many_arguments)]
fn entry(
    quantity: &str,
    parameters: &str,
    printed: Option<&BigRational>,
    computed: &BigRational,
    symmetry_prediction: Option<f64>,
    status: AuditStatus,
    note: &str,
) -> AuditEntry {
    AuditEntry {
        quantity: quantity.into(),
        parameters: parameters.into(),
        printed: printed.map(|p| p.to_string()),
        printed_value: printed.map(to_f64),
        computed: computed.to_string(),
        computed_value: to_f64(computed),
        symmetry_prediction,
        status,
        note: note.into(),
    }
}

/// Recomputes the published two-strategy example and its substitute.
pub fn reproduce_paper_example() -> AuditReport {
    let one = BigRational::one();
    let two = BigInt::from(2);
    let (alpha, gamma) = (rat(1, 2), rat(1, 4));
    let beta = beta_constraint(&alpha, &gamma).expect("admissible parameters");

    let q1 = qubit_diagonal_posterior(&effects(&[&alpha]));
    let q2 = qubit_diagonal_posterior(&effects(&[&beta, &gamma]));
    let rho_a = polynomial_population(&q1).expect("positive normalizer");
    let rho_a_prime = polynomial_population(&q2).expect("positive normalizer");
    let sigma = pooled_population(&q1, &q1).expect("positive normalizer");
    let sigma_prime = pooled_population(&q2, &q2).expect("positive normalizer");
    let symmetric = q2.reflect() == q2;
    let sym = if symmetric { Some(0.5) } else { None };

    // Published closed forms, evaluated literally.
    let printed_rho_a_22 = rat(1, 3) * rat(1, 3) * (BigRational::from_integer(two.clone()) - &alpha);
    let printed_linear = -((&one - &beta * &two) * (&one - &gamma * &two) + (&one - &alpha - &beta));
    let printed_constant = (&one - &alpha) * (&one - &beta);
    let q2c = q2.coefficients();

    let p = "alpha=1/2, beta=3/4, gamma=1/4";
    let mut entries = vec![
        entry("beta(alpha, gamma)", "alpha=1/2, gamma=1/4", Some(&rat(3, 4)), &beta, None, AuditStatus::Reproduced, ""),
        entry("rho_A[1,1]", p, Some(&rat(1, 2)), &rho_a, None, AuditStatus::Reproduced, ""),
        entry("rho'_A[1,1]", p, Some(&rat(1, 2)), &rho_a_prime, sym, AuditStatus::Reproduced, ""),
        entry("sigma[1,1]", p, Some(&rat(1, 2)), &sigma, None, AuditStatus::Reproduced, ""),
        entry(
            "sigma'[1,1]",
            p,
            Some(&rat(299, 406)),
            &sigma_prime,
            sym,
            AuditStatus::Discrepancy,
            "exact integration gives I/2 = sigma; the published diag(299, 107)/406 cannot be reproduced",
        ),
        entry(
            "rho_A[2,2] closed form",
            p,
            Some(&printed_rho_a_22),
            &(&one - &rho_a),
            None,
            AuditStatus::Corrected,
            "printed entry carries an extra factor 1/3 that breaks unit trace; (2 - alpha)/3 is used",
        ),
        entry(
            "P(rho|k2,k3) coefficient of r",
            p,
            Some(&printed_linear),
            &q2c[1],
            None,
            AuditStatus::Corrected,
            "printed form has alpha where expansion gives gamma; 3b + 3g - 4bg - 2 is used",
        ),
        entry(
            "P(rho|k2,k3) constant term",
            p,
            Some(&printed_constant),
            &q2c[0],
            None,
            AuditStatus::Corrected,
            "printed (1 - alpha)(1 - beta) should read (1 - beta)(1 - gamma)",
        ),
    ];

    // Substitute instance where the pooled states genuinely differ.
    let (alpha2, gamma2) = (rat(3, 4), rat(3, 10));
    let beta2 = beta_constraint(&alpha2, &gamma2).expect("admissible parameters");
    let p1 = qubit_diagonal_posterior(&effects(&[&alpha2]));
    let p2 = qubit_diagonal_posterior(&effects(&[&beta2, &gamma2]));
    let alt_rho_a = polynomial_population(&p1).expect("positive normalizer");
    let alt_rho_a_prime = polynomial_population(&p2).expect("positive normalizer");
    let alt_sigma = pooled_population(&p1, &p1).expect("positive normalizer");
    let alt_sigma_prime = pooled_population(&p2, &p2).expect("positive normalizer");

    // The published closed forms for rho'_A and sigma, checked on the substitute.
    let closed_rho_a_prime =
        (&beta2 * &gamma2 + rat(1, 2)) / ((&one - &beta2) * (&one - &gamma2) * &two + &beta2 + &gamma2);
    let closed_sigma = (&alpha2 * &alpha2 + rat(1, 2))
        / ((&one - &alpha2) * (&one - &alpha2) * &two + &alpha2 * &two);
    let q = "alpha=3/4, beta=59/64, gamma=3/10";
    entries.extend([
        entry(
            "rho'_A[1,1] closed form",
            q,
            Some(&closed_rho_a_prime),
            &alt_rho_a_prime,
            None,
            AuditStatus::Reproduced,
            "published closed form agrees with exact integration",
        ),
        entry(
            "sigma[1,1] closed form",
            q,
            Some(&closed_sigma),
            &alt_sigma,
            None,
            AuditStatus::Reproduced,
            "published closed form agrees with exact integration",
        ),
        entry("rho_A[1,1]", q, None, &alt_rho_a, None, AuditStatus::Derived, ""),
        entry("rho'_A[1,1]", q, None, &alt_rho_a_prime, None, AuditStatus::Derived, ""),
        entry("sigma[1,1]", q, None, &alt_sigma, None, AuditStatus::Derived, ""),
        entry("sigma'[1,1]", q, None, &alt_sigma_prime, None, AuditStatus::Derived, ""),
    ]);

    let separation = (to_f64(&alt_sigma) - to_f64(&alt_sigma_prime)).abs();
    let alternative = AlternativeInstance {
        alpha: alpha2.to_string(),
        gamma: gamma2.to_string(),
        beta: beta2.to_string(),
        rho_a_11: to_f64(&alt_rho_a),
        rho_a_prime_11: to_f64(&alt_rho_a_prime),
        sigma_11: to_f64(&alt_sigma),
        sigma_prime_11: to_f64(&alt_sigma_prime),
        separation,
        priors_agree: alt_rho_a == alt_rho_a_prime,
        pooled_states_differ: alt_sigma != alt_sigma_prime,
    };

    let symmetry_argument = "With beta = 1 - gamma the factors (2 beta - 1) r + (1 - beta) and \
        (2 gamma - 1) r + (1 - gamma) map into each other under r -> 1 - r, so q(r) = q(1 - r) \
        and the same holds for q(r)^2. Then the integral of r q^2 equals the integral of (1 - r) q^2, \
        so m1/m0 = 1/2 and sigma' = I/2 = sigma at alpha = 1/2, gamma = 1/4."
        .to_string();
    let conclusion = if alternative.priors_agree && alternative.pooled_states_differ {
        format!(
            "At (1/2, 3/4, 1/4) both pooled states are I/2, so that instance does not separate them. \
             At alpha = 3/4, gamma = 3/10, beta = {} the observers hold identical states \
             (rho_A = rho'_A = diag(7/12, 5/12)) while the pooled states differ by {separation:.6}, \
             so the pooled state is not fixed by the individual density matrices.",
            alternative.beta
        )
    } else {
        "substitute instance failed to separate the pooled states".to_string()
    };

    AuditReport { entries, published_posterior_symmetric: symmetric, symmetry_argument, alternative, conclusion }
}
