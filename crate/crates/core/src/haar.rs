//! The unitarily invariant measure on pure states.
//!
//! In probability/phase coordinates `c_k = √P_k e^{iθ_k}` the invariant
//! measure is flat: `P` uniform on the probability simplex and every phase
//! uniform on `[0, 2π)`. Sampling the simplex uses normalized exponential
//! spacings (a flat Dirichlet). The global phase is sampled along with the rest.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix, ComplexVector, DensityMatrix};
use crate::montecarlo;

/// A pure state in probability/phase coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PureStateSample {
    probs: Vec<f64>,
    phases: Vec<f64>,
}

impl PureStateSample {
    pub fn new(probs: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.len() != phases.len() {
            return Err(Error::shape("probabilities and phases must be equally long and non-empty"));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidValue("probabilities must be non-negative".into()));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidValue(format!("probabilities sum to {s}")));
        }
        let phases = phases.into_iter().map(|t| t.rem_euclid(2.0 * PI)).collect();
        Ok(Self { probs, phases })
    }

    /// Recovers `(P_k, θ_k)` from amplitudes.
    pub fn from_amplitudes(amps: &[Complex64]) -> Result<Self> {
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        if !(norm > 0.0) {
            return Err(Error::InvalidValue("zero state vector".into()));
        }
        let probs = amps.iter().map(|z| z.norm_sqr() / norm).collect();
        let phases = amps.iter().map(|z| z.arg()).collect();
        Self::new(probs, phases)
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn amplitudes(&self) -> ComplexVector {
        ComplexVector::from_iterator(
            self.dim(),
            self.probs.iter().zip(&self.phases).map(|(&p, &t)| Complex64::from_polar(p.sqrt(), t)),
        )
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::projector(&self.amplitudes())
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::pure(&self.amplitudes()).expect("unit vector")
    }
}

/// Draws one pure state from the invariant measure.
pub fn sample_pure_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<PureStateSample> {
    if d == 0 {
        return Err(Error::shape("dimension must be at least 1"));
    }
    let mut probs: Vec<f64> = (0..d).map(|_| rng.sample(Exp1)).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    let phases = (0..d).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
    Ok(PureStateSample { probs, phases })
}

/// Writes the amplitudes of one invariant sample into `out`, consuming the
/// generator exactly as [`sample_pure_state`] does.
pub(crate) fn fill_amplitudes<R: Rng + ?Sized>(out: &mut [Complex64], rng: &mut R) {
    let mut total = 0.0;
    for z in out.iter_mut() {
        let e: f64 = rng.sample(Exp1);
        total += e;
        *z = c(e, 0.0);
    }
    for z in out.iter_mut() {
        let p = z.re / total;
        let theta = rng.random::<f64>() * 2.0 * PI;
        *z = Complex64::from_polar(p.sqrt(), theta);
    }
}

/// Total mass `2π^d / (d−1)!` of the invariant measure on the unit sphere of `C^d`.
pub fn measure_normalization(d: usize) -> f64 {
    assert!(d >= 1, "dimension must be at least 1");
    let factorial: f64 = (1..d).map(|k| k as f64).product();
    2.0 * PI.powi(d as i32) / factorial
}

/// Sample mean of `|ψ⟩⟨ψ|` over `n_samples` invariant draws.
pub fn average_projector(d: usize, n_samples: usize, seed: u64) -> Result<ComplexMatrix> {
    if d == 0 {
        return Err(Error::shape("dimension must be at least 1"));
    }
    if n_samples == 0 {
        return Err(Error::InvalidValue("at least one sample is required".into()));
    }
    let partials = montecarlo::chunked(n_samples, seed, |rng, count| {
        let mut acc = DMatrix::<Complex64>::zeros(d, d);
        let mut amps = vec![Complex64::new(0.0, 0.0); d];
        for _ in 0..count {
            fill_amplitudes(&mut amps, rng);
            accumulate_projector(&mut acc, &amps, 1.0);
        }
        acc
    });
    let mut total = DMatrix::<Complex64>::zeros(d, d);
    for p in partials {
        total += p;
    }
    Ok(ComplexMatrix::wrap(total).scale(1.0 / n_samples as f64))
}

/// `acc += w |ψ⟩⟨ψ|`
pub(crate) fn accumulate_projector(acc: &mut DMatrix<Complex64>, amps: &[Complex64], w: f64) {
    let d = amps.len();
    for i in 0..d {
        let ai = amps[i] * w;
        for j in 0..d {
            acc[(i, j)] += ai * amps[j].conj();
        }
    }
}

/// Haar-random unitary from the QR decomposition of a complex Gaussian matrix,
/// with the phases of `R`'s diagonal absorbed into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let g = DMatrix::<Complex64>::from_fn(d, d, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for k in 0..d {
        let rk = r[(k, k)];
        let phase = if rk.norm() > 0.0 { rk / rk.norm() } else { c(1.0, 0.0) };
        q.column_mut(k).iter_mut().for_each(|z| *z *= phase);
    }
    ComplexMatrix::wrap(q)
}

/// Random density matrix of the given rank: random eigenbasis, flat-Dirichlet spectrum.
pub fn random_density<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> Result<DensityMatrix> {
    if rank == 0 || rank > d {
        return Err(Error::InvalidValue(format!("rank {rank} in dimension {d}")));
    }
    let u = random_unitary(d, rng);
    let spectrum = sample_pure_state(rank, rng)?.probs;
    let mut acc = ComplexMatrix::zeros(d, d);
    for (k, p) in spectrum.iter().enumerate() {
        acc = &acc + &ComplexMatrix::projector(&u.column(k)).scale(*p);
    }
    Ok(DensityMatrix::from_trusted(acc))
}
