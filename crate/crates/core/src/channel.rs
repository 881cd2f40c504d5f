//! Per-trial fading, zero-forcing reception and SIC decoding.
//!
//! One trial draws an N×r matrix of iid unit-variance circularly symmetric
//! complex Gaussians per user, composes the effective channel
//! `H̃ = G Λ^{1/2} U P`, and inverts its Gram matrix to get the zero-forcing
//! noise covariance `C = (H̃ᴴH̃)⁻¹`. The scalar channel quality of group `q`
//! is the effective gain `1/[C]_{q,q}`; SIC success is decided rate by rate
//! from the resulting SINRs.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::{CMatrix, Error, Result, C64};

/// Draws an N×r fading matrix with iid CN(0,1) entries.
///
/// Real and imaginary parts are independent N(0, 1/2), so every entry has
/// unit variance. With a seeded generator the draw is bit-reproducible.
pub fn sample_fading<R: Rng + ?Sized>(n: usize, r: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(n, r, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * std::f64::consts::FRAC_1_SQRT_2, im * std::f64::consts::FRAC_1_SQRT_2)
    })
}

/// Deterministic part of the effective channel, `Λ^{1/2} U P` (r×M̃).
///
/// Computed once per cluster and reused for every trial.
pub fn effective_basis(eigvals: &[f64], eigvecs: &CMatrix, precoder: &CMatrix) -> CMatrix {
    let mut scaled = eigvecs * precoder;
    for (i, l) in eigvals.iter().enumerate() {
        let s = C64::new(l.sqrt(), 0.0);
        for c in 0..scaled.ncols() {
            scaled[(i, c)] *= s;
        }
    }
    scaled
}

/// Effective channel `H̃ = G Λ^{1/2} U P` (N×M̃).
pub fn compose_effective(
    fading: &CMatrix,
    eigvals: &[f64],
    eigvecs: &CMatrix,
    precoder: &CMatrix,
) -> CMatrix {
    fading * effective_basis(eigvals, eigvecs, precoder)
}

/// Zero-forcing noise covariance `C = (H̃ᴴH̃)⁻¹`.
///
/// Fails when the Gram matrix is not positive definite (a rank-deficient
/// draw); callers resample such trials.
pub fn zf_covariance(h_tilde: &CMatrix) -> Result<CMatrix> {
    let gram = h_tilde.adjoint() * h_tilde;
    gram.cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::SingularMatrix("rank-deficient effective channel".into()))
}

/// Effective gain of group `q` (0-based), `1/[C]_{q,q}`.
pub fn effective_gain(c: &CMatrix, q: usize) -> f64 {
    1.0 / c[(q, q)].re
}

/// Power allocation and target rates shared by the users of one group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupConfig {
    /// Amplitude coefficients α_p, nonincreasing, with Σ α_p² = 1.
    alphas: Vec<f64>,
    /// Target rates in bits per channel use.
    rates: Vec<f64>,
    /// Decoding thresholds τ_p = 2^{R_p} − 1.
    taus: Vec<f64>,
}

impl GroupConfig {
    /// Builds a group from squared power coefficients and target rates.
    pub fn from_alpha_sq(alpha_sq: &[f64], rates: &[f64]) -> Result<Self> {
        let alphas: Vec<f64> = alpha_sq.iter().map(|a| a.sqrt()).collect();
        Self::new(alphas, rates.to_vec())
    }

    pub fn new(alphas: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() || alphas.len() != rates.len() {
            return Err(Error::InvalidConfig(
                "need one power coefficient and one rate per user".into(),
            ));
        }
        if alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::InvalidConfig("power coefficients must be positive".into()));
        }
        if alphas.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig(
                "power coefficients must be nonincreasing (weak users get more power)".into(),
            ));
        }
        let sum_sq: f64 = alphas.iter().map(|a| a * a).sum();
        if (sum_sq - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "power coefficients must satisfy Σα² = 1, got {sum_sq}"
            )));
        }
        if rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidConfig("target rates must be positive".into()));
        }
        let taus = rates.iter().map(|r| (2f64).powf(*r) - 1.0).collect();
        Ok(Self { alphas, rates, taus })
    }

    /// Users per group, P.
    pub fn users(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Squared coefficient α_p² for 1-based user index `p`.
    pub fn alpha_sq(&self, p: usize) -> f64 {
        self.alphas[p - 1] * self.alphas[p - 1]
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Target rate R_p for 1-based user index `p`.
    pub fn rate(&self, p: usize) -> f64 {
        self.rates[p - 1]
    }

    /// Threshold τ_p = 2^{R_p} − 1 for 1-based user index `p`.
    pub fn tau(&self, p: usize) -> f64 {
        self.taus[p - 1]
    }
}

/// SINR at ordered user `p` when decoding the message of user `n` (both 1-based).
///
/// `ρ · g · α_n² / (1 + ρ · g · Σ_{m>n} α_m²)`; for n = P the interference
/// sum is empty and this is a plain SNR.
pub fn sic_sinr(p: usize, n: usize, gain: f64, cfg: &GroupConfig, rho: f64) -> f64 {
    debug_assert!(1 <= n && n <= p && p <= cfg.users());
    let big_p = cfg.users();
    let signal = rho * gain * cfg.alpha_sq(n);
    let interference: f64 = (n + 1..=big_p).map(|m| rho * gain * cfg.alpha_sq(m)).sum();
    signal / (1.0 + interference)
}

/// Outcome of the successive decoding chain at one user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome {
    /// Success of each SIC stage n = 1..p, in order.
    pub message_ok: Vec<bool>,
    /// True when any stage failed.
    pub outage: bool,
}

/// Runs the SIC chain of ordered user `p` (1-based) at effective gain `gain`.
///
/// The user must decode messages n = 1..p in order; stage n succeeds when
/// `log2(1 + SINR_p^n) ≥ R_n`, i.e. `SINR_p^n ≥ τ_n`.
pub fn decode_outcome(p: usize, gain: f64, cfg: &GroupConfig, rho: f64) -> DecodeOutcome {
    let mut message_ok = Vec::with_capacity(p);
    let mut outage = false;
    for n in 1..=p {
        let ok = sic_sinr(p, n, gain, cfg, rho) >= cfg.tau(n);
        message_ok.push(ok);
        outage |= !ok;
    }
    DecodeOutcome { message_ok, outage }
}
