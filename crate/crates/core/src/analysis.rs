//! Closed-form outage engine.
//!
//! After zero forcing, the diagonal noise entry `[C]_{q,q}` of a group
//! follows an inverse-gamma law with integer shape `s = N − M̃ + 1` and
//! scale constant `a = 1/[(PᴴRP)⁻¹]_{q,q}`; equivalently the effective gain
//! `1/[C]_{q,q}` is Gamma(s, a)-distributed. Everything here — ordered
//! densities, outage probabilities under perfect ordering and under one-bit
//! feedback, and the high-SNR asymptotes that expose the diversity order —
//! is built from that law using only exact integer-shape gamma sums.

use crate::channel::GroupConfig;
use crate::{Error, Result};

/// Regularized lower incomplete gamma function `P(s, x) = γ(s, x)/Γ(s)` for
/// integer shape.
///
/// Uses the exact complement `1 − e^{−x} Σ_{j<s} x^j/j!` for large `x` and
/// the tail series `e^{−x} Σ_{j≥s} x^j/j!` for small `x`, so the result is
/// accurate in absolute and relative terms on both ends.
pub fn reg_lower_gamma(s: u32, x: f64) -> f64 {
    assert!(s >= 1, "shape must be a positive integer");
    assert!(x >= 0.0, "argument must be nonnegative");
    if x == 0.0 {
        return 0.0;
    }
    if x >= s as f64 + 1.0 {
        1.0 - reg_upper_gamma_direct(s, x)
    } else {
        reg_lower_gamma_series(s, x)
    }
}

/// Complement `Q(s, x) = 1 − P(s, x)`, computed on the stable branch.
pub fn reg_upper_gamma(s: u32, x: f64) -> f64 {
    assert!(s >= 1, "shape must be a positive integer");
    assert!(x >= 0.0, "argument must be nonnegative");
    if x == 0.0 {
        return 1.0;
    }
    if x >= s as f64 + 1.0 {
        reg_upper_gamma_direct(s, x)
    } else {
        1.0 - reg_lower_gamma_series(s, x)
    }
}

/// `e^{−x} Σ_{j=0}^{s−1} x^j/j!`, the exact finite sum for integer shape.
fn reg_upper_gamma_direct(s: u32, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..s {
        term *= x / j as f64;
        sum += term;
    }
    ((-x).exp() * sum).clamp(0.0, 1.0)
}

/// `e^{−x} Σ_{j=s}^{∞} x^j/j!`, all-positive tail series, converges for x < s+1.
fn reg_lower_gamma_series(s: u32, x: f64) -> f64 {
    let log_first = s as f64 * x.ln() - ln_factorial(s) - x;
    let first = log_first.exp();
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut j = s as f64;
    for _ in 0..500 {
        j += 1.0;
        term *= x / j;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    (first * sum).clamp(0.0, 1.0)
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n as u64).map(|k| (k as f64).ln()).sum()
}

fn factorial(n: u32) -> f64 {
    (2..=n as u64).map(|k| k as f64).product()
}

/// Exact binomial coefficient.
pub fn binomial(n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        acc = acc * (n as u128 - i) / (i + 1);
    }
    acc
}

/// Ordering coefficient `π_p^P = P! / ((P−p)!(p−1)!)`, exact integer arithmetic.
pub fn ordering_coefficient(p: u32, big_p: u32) -> f64 {
    assert!(1 <= p && p <= big_p);
    // P!/((P−p)!(p−1)!) = C(P, p) · p!/(p−1)! = C(P, p) · p
    (binomial(big_p, p) * p as u128) as f64
}

/// Distribution of the zero-forcing noise entry `[C]_{q,q}` of one group.
///
/// Inverse-gamma with integer shape `s = N − M̃ + 1` and rate `1/a`; the
/// effective gain `1/[C]_{q,q}` is Gamma(s) with scale `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainDistribution {
    /// Deterministic gain constant `a = 1/[(PᴴRP)⁻¹]_{q,q}`.
    pub a: f64,
    /// Integer shape `s = N − M̃ + 1 ≥ 1`.
    pub shape: u32,
}

impl GainDistribution {
    pub fn new(a: f64, shape: u32) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Domain(format!("gain constant must be positive, got {a}")));
        }
        if shape < 1 {
            return Err(Error::Domain("shape N − M̃ + 1 must be at least 1 (N ≥ M̃)".into()));
        }
        Ok(Self { a, shape })
    }

    /// Density of `[C]_{q,q}` at `x`; zero for x ≤ 0.
    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let s = self.shape as f64;
        let log_pdf =
            -(s + 1.0) * x.ln() - 1.0 / (self.a * x) - ln_factorial(self.shape - 1) - s * self.a.ln();
        log_pdf.exp()
    }

    /// CDF `F(x) = 1 − γ(s, 1/(a x))/Γ(s)`; errors on x ≤ 0.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Err(Error::Domain(format!("CDF argument must be positive, got {x}")));
        }
        Ok(reg_upper_gamma(self.shape, 1.0 / (self.a * x)))
    }

    /// Survival function `P([C]_{q,q} > x) = γ(s, 1/(a x))/Γ(s)`.
    ///
    /// Extended with `sf(x) = 1` for x ≤ 0 so that thresholds that are
    /// impossible to meet (ξ ≤ 0 or ρ = 0) yield certain outage.
    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        reg_lower_gamma(self.shape, 1.0 / (self.a * x))
    }

    /// CDF extended with `F(x) = 0` for x ≤ 0.
    pub fn cdf_ext(&self, x: f64) -> f64 {
        1.0 - self.sf(x)
    }
}

/// SIC decodability thresholds of one group.
#[derive(Debug, Clone, PartialEq)]
pub struct XiThresholds {
    /// ξ_n for n = 1..P (index 0-based); negative values mean the n-th
    /// message can never be decoded, whatever the channel.
    pub xi: Vec<f64>,
    /// ξ*_p = min{ξ_n : n ≤ p}, nonincreasing in p.
    pub xi_star: Vec<f64>,
}

/// Computes ξ_n = (α_n² − τ_n Σ_{m>n} α_m²)/τ_n for n < P and ξ_P = α_P²/τ_P.
pub fn xi_thresholds(cfg: &GroupConfig) -> XiThresholds {
    let big_p = cfg.users();
    let mut xi = Vec::with_capacity(big_p);
    for n in 1..=big_p {
        let tau = cfg.tau(n);
        let v = if n == big_p {
            cfg.alpha_sq(n) / tau
        } else {
            let residual: f64 = (n + 1..=big_p).map(|m| cfg.alpha_sq(m)).sum();
            (cfg.alpha_sq(n) - tau * residual) / tau
        };
        xi.push(v);
    }
    let mut xi_star = Vec::with_capacity(big_p);
    let mut running = f64::INFINITY;
    for &v in &xi {
        running = running.min(v);
        xi_star.push(running);
    }
    XiThresholds { xi, xi_star }
}

/// Density of the p-th ordered noise entry out of P (p = 1 weakest user,
/// i.e. the largest `[C]_{q,q}`):
/// `f_p(x) = π_p^P f(x) F(x)^{P−p} (1 − F(x))^{p−1}`.
pub fn ordered_pdf(p: u32, big_p: u32, dist: &GainDistribution, x: f64) -> f64 {
    assert!(1 <= p && p <= big_p);
    if x <= 0.0 {
        return 0.0;
    }
    let f = dist.cdf_ext(x);
    let sf = dist.sf(x);
    ordering_coefficient(p, big_p) * dist.pdf(x) * f.powi((big_p - p) as i32) * sf.powi(p as i32 - 1)
}

/// Tail probability of the p-th ordered noise entry, `P([C]_(p) > z)`.
///
/// The p-th largest of P iid draws exceeds `z` exactly when at least `p`
/// draws do, so the tail is the binomial sum
/// `Σ_{j=p}^{P} C(P,j) ε^j (1−ε)^{P−j}` with `ε = sf(z)`. This equals the
/// alternating finite sum obtained by integrating the ordered density (see
/// [`ordered_tail_alternating`]) but stays accurate when ε is tiny.
pub fn ordered_tail(p: u32, big_p: u32, dist: &GainDistribution, z: f64) -> f64 {
    assert!(1 <= p && p <= big_p);
    let eps = dist.sf(z);
    let one_m = 1.0 - eps;
    let mut acc = 0.0;
    for j in p..=big_p {
        acc += binomial(big_p, j) as f64
            * eps.powi(j as i32)
            * one_m.powi((big_p - j) as i32);
    }
    acc.clamp(0.0, 1.0)
}

/// Reference evaluation of the same tail via the alternating sum
/// `Σ_{i=0}^{p−1} C(p−1,i) (−1)^i π_p^P (1 − F^{P−p+i+1})/(P−p+i+1)`.
///
/// Algebraically identical to [`ordered_tail`]; kept as an independent route
/// for verification (it cancels catastrophically for tiny tails, so the
/// stable form is the one used everywhere else).
pub fn ordered_tail_alternating(p: u32, big_p: u32, dist: &GainDistribution, z: f64) -> f64 {
    assert!(1 <= p && p <= big_p);
    let f = dist.cdf_ext(z);
    let pi = ordering_coefficient(p, big_p);
    let mut acc = 0.0;
    for i in 0..p {
        let k = (big_p - p + i + 1) as f64;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binomial(p - 1, i) as f64 * pi * (1.0 - f.powf(k)) / k;
    }
    acc
}

/// Outage probability of ordered user `p` under perfect ordering.
///
/// Returns 1 when `ξ*_p ≤ 0` (the rate targets are infeasible for any
/// channel); otherwise the ordered tail at threshold `ρ ξ*_p`.
pub fn outage_perfect(p: u32, big_p: u32, dist: &GainDistribution, xi_star_p: f64, rho: f64) -> f64 {
    if xi_star_p <= 0.0 {
        return 1.0;
    }
    ordered_tail(p, big_p, dist, rho * xi_star_p)
}

/// High-SNR approximation `C(P,p) (s! (ρ a ξ*)^s)^{−p}`.
///
/// Valid for `ρ a ξ* ≫ 1`; its log-log slope in ρ is exactly `−p·s`, the
/// diversity order of ordered user p. The coefficient is
/// `π_p^P / p = C(P,p)`, the constant of the exact antiderivative
/// `∫_z^∞ f (1−F)^{p−1} dx = (1−F(z))^p / p`; with it the ratio to the
/// exact outage tends to 1.
pub fn outage_perfect_highsnr(
    p: u32,
    big_p: u32,
    dist: &GainDistribution,
    xi_star_p: f64,
    rho: f64,
) -> f64 {
    if xi_star_p <= 0.0 {
        return 1.0;
    }
    let s = dist.shape;
    let tail = 1.0 / (factorial(s) * (rho * dist.a * xi_star_p).powi(s as i32));
    binomial(big_p, p) as f64 * tail.powi(p as i32)
}

/// Threshold feedback configuration for the two-user analyzed case.
#[derive(Debug, Clone, PartialEq)]
pub struct OnebitConfig {
    /// Feedback threshold τ on the effective gain.
    pub tau: f64,
    /// Rates and power coefficients of the two NOMA positions.
    pub group: GroupConfig,
}

impl OnebitConfig {
    pub fn new(tau: f64, group: GroupConfig) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::Domain(format!("feedback threshold must be positive, got {tau}")));
        }
        if group.users() != 2 {
            return Err(Error::InvalidConfig(
                "one-bit closed forms cover exactly two users per group".into(),
            ));
        }
        Ok(Self { tau, group })
    }

    /// Threshold on the noise entry, τ̃ = 1/τ.
    pub fn tau_tilde(&self) -> f64 {
        1.0 / self.tau
    }
}

/// Survival values the one-bit closed forms are assembled from.
///
/// `eps_t = P([C] > τ̃)` and `eps_r[i] = P([C] > ρ ξ*_{i+1})`, with the
/// convention `eps = 1` for nonpositive thresholds.
fn onebit_survivals(cfg: &OnebitConfig, dist: &GainDistribution, rho: f64) -> (f64, [f64; 2]) {
    let xi = xi_thresholds(&cfg.group);
    let eps_t = dist.sf(cfg.tau_tilde());
    let eps_r = [dist.sf(rho * xi.xi_star[0]), dist.sf(rho * xi.xi_star[1])];
    (eps_t, eps_r)
}

/// Outage probability of the weak user (larger noise entry) under one-bit
/// feedback, P = 2.
///
/// Sum of three disjoint events: the weak user alone reports below
/// threshold and takes the weak slot; both report below and are ordered at
/// random; both report above and are ordered at random. Written in terms of
/// survival values ε = 1 − F the three terms are
///
/// ```text
/// 2 e₁ (1 − ε_t)  +  Σ_i e_i (ε_t − e_i/2)  +  ½ Σ_i [(ε_{r,i} − ε_t)(2 − ε_t − ε_{r,i})]⁺
/// ```
///
/// with `e_i = min(ε_t, ε_{r,i})`, which is the clamped closed form
/// `2(1−F(φ₁))F(τ̃) + Σ_i {½(1−F(φ_i)²) − F(τ̃)(1−F(φ_i))} + ½ Σ_i [F(τ̃)² − F(ρξ*_i)²]⁺`
/// with `φ_i = max{τ̃, ρξ*_i}`, rearranged to avoid cancellation.
pub fn outage_onebit_weak(cfg: &OnebitConfig, dist: &GainDistribution, rho: f64) -> f64 {
    let (eps_t, eps_r) = onebit_survivals(cfg, dist, rho);
    let e = [eps_t.min(eps_r[0]), eps_t.min(eps_r[1])];

    let lone_below = 2.0 * e[0] * (1.0 - eps_t);
    let both_below: f64 = e.iter().map(|&ei| ei * (eps_t - ei / 2.0)).sum();
    let both_above: f64 = eps_r
        .iter()
        .map(|&ri| 0.5 * ((ri - eps_t) * (2.0 - eps_t - ri)).max(0.0))
        .sum();

    (lone_below + both_below + both_above).clamp(0.0, 1.0)
}

/// Outage probability of the strong user (smaller noise entry) under one-bit
/// feedback, P = 2.
///
/// In survival form the clamped closed form
/// `2[F(τ̃)−F(ρξ*₂)]⁺(1−F(τ̃)) + Σ_i {F(τ̃)[F(τ̃)−F(ρξ*_i)]⁺ − ½[F(τ̃)²−F(ρξ*_i)²]⁺} + ½Σ_i(1−F(φ_i))²`
/// collapses to
///
/// ```text
/// 2 [ε_{r,2} − ε_t]⁺ ε_t  +  ½ Σ_i ([ε_{r,i} − ε_t]⁺)²  +  ½ Σ_i min(ε_t, ε_{r,i})²
/// ```
pub fn outage_onebit_strong(cfg: &OnebitConfig, dist: &GainDistribution, rho: f64) -> f64 {
    let (eps_t, eps_r) = onebit_survivals(cfg, dist, rho);

    let lone_above = 2.0 * (eps_r[1] - eps_t).max(0.0) * eps_t;
    let both_above: f64 = eps_r.iter().map(|&ri| 0.5 * (ri - eps_t).max(0.0).powi(2)).sum();
    let both_below: f64 = eps_r.iter().map(|&ri| 0.5 * eps_t.min(ri).powi(2)).sum();

    (lone_above + both_above + both_below).clamp(0.0, 1.0)
}

/// High-SNR expansion of the strong user's one-bit outage in the regime
/// `τ < min{1/(ρξ*₁), 1/(ρξ*₂)}`:
///
/// ```text
/// 2(θ₂ − θ₀)θ₀ − ½ Σ_i (θ₀² − θ_i²) + ½ Σ_i θ_i²
/// ```
///
/// with `θ₀ = τ^s/(s! a^s)` and `θ_i = (s! (ρ a ξ*_i)^s)^{−1}`. Both θ_i
/// decay like ρ^{−s}, so the expression decays like ρ^{−2s}; it is used only
/// to verify that diversity slope.
pub fn onebit_strong_highsnr(cfg: &OnebitConfig, dist: &GainDistribution, rho: f64) -> Result<f64> {
    let xi = xi_thresholds(&cfg.group);
    let (x1, x2) = (xi.xi_star[0], xi.xi_star[1]);
    if x1 <= 0.0 || x2 <= 0.0 {
        return Err(Error::Domain("ξ* must be positive in the high-SNR regime".into()));
    }
    if cfg.tau >= (1.0 / (rho * x1)).min(1.0 / (rho * x2)) {
        return Err(Error::Domain(format!(
            "τ = {} is not below min{{1/(ρξ*₁), 1/(ρξ*₂)}} = {}",
            cfg.tau,
            (1.0 / (rho * x1)).min(1.0 / (rho * x2))
        )));
    }
    let s = dist.shape;
    let sf = factorial(s);
    let theta0 = cfg.tau.powi(s as i32) / (sf * dist.a.powi(s as i32));
    let theta = [
        1.0 / (sf * (rho * dist.a * x1).powi(s as i32)),
        1.0 / (sf * (rho * dist.a * x2).powi(s as i32)),
    ];
    let value = 2.0 * (theta[1] - theta0) * theta0
        - 0.5 * ((theta0 * theta0 - theta[0] * theta[0]) + (theta0 * theta0 - theta[1] * theta[1]))
        + 0.5 * (theta[0] * theta[0] + theta[1] * theta[1]);
    Ok(value)
}
