//! Shared oracles and statistics helpers for the integration tests.
//!
//! Everything here deliberately avoids the library's own closed-form code
//! paths: the gamma function uses a series/continued-fraction algorithm for
//! real shapes, integrals use adaptive Simpson quadrature, and probabilities
//! of ordered-pair events are computed by nested quadrature over the joint
//! density.

#![allow(dead_code)]

use massive_noma::channel::GroupConfig;
use massive_noma::geometry::{ArrayGeometry, ClusterGeometry};
use massive_noma::simulator::{Protocol, RunConfig, SystemModel};

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    whole: f64,
    m: f64,
    fm: f64,
    tol: f64,
    depth: u32,
    force: u32,
) -> f64 {
    let (left, lm, flm) = simpson(f, a, fa, m, fm);
    let (right, rm, frm) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || (force == 0 && delta.abs() <= 15.0 * tol) {
        left + right + delta / 15.0
    } else {
        let force = force.saturating_sub(1);
        adaptive_step(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1, force)
            + adaptive_step(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1, force)
    }
}

/// Adaptive Simpson integration of `f` over `[a, b]`.
///
/// The first twelve subdivision levels are unconditional so that narrow
/// features (the gamma density on a [0, 250] window is one) cannot slip
/// between the first sample points and fake convergence.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (whole, m, fm) = simpson(&f, a, fa, b, fb);
    adaptive_step(&f, a, fa, b, fb, whole, m, fm, tol, 48, 12)
}

// ---------------------------------------------------------------------------
// Independent gamma-law oracle (series + continued fraction, real shape)
// ---------------------------------------------------------------------------

#[allow(clippy::excessive_precision)]
fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation, g = 7, n = 9.
    const COEFFS: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma P(s, x) for real shape, via the power
/// series (x < s + 1) or the Lentz continued fraction for the complement.
pub fn gamma_p_oracle(s: f64, x: f64) -> f64 {
    assert!(s > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    let log_pre = s * x.ln() - x - ln_gamma(s);
    if x < s + 1.0 {
        // P = pre · Σ_{n≥0} x^n / (s (s+1) … (s+n)) / … standard rising series.
        let mut ap = s;
        let mut term = 1.0 / s;
        let mut sum = term;
        for _ in 0..500 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        (log_pre.exp() * sum).clamp(0.0, 1.0)
    } else {
        // Q = pre · CF(x) by modified Lentz.
        let tiny = 1e-300;
        let mut b = x + 1.0 - s;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - s);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (1.0 - log_pre.exp() * h).clamp(0.0, 1.0)
    }
}

/// Unit-rate gamma density with integer shape, written out directly.
pub fn gamma_pdf_oracle(s: u32, t: f64) -> f64 {
    if t < 0.0 || (t == 0.0 && s > 1) {
        return 0.0;
    }
    if t == 0.0 {
        return 1.0; // shape 1 is the unit exponential
    }
    let ln_fact: f64 = (2..s as u64).map(|k| (k as f64).ln()).sum();
    ((s as f64 - 1.0) * t.ln() - t - ln_fact).exp()
}

/// Integration cap: the unit-rate gamma mass beyond this point is far below
/// every tolerance used in the tests (e^{-250} ~ 1e-109).
pub const T_CAP: f64 = 250.0;

// ---------------------------------------------------------------------------
// Ordered-statistics oracles on the noise entry [C]_{q,q}
// ---------------------------------------------------------------------------
//
// With T = 1/(a·X), X ~ the noise-entry law with constant `a` and shape `s`
// maps to T ~ Gamma(s, 1); larger X means smaller T. All oracle integrals run
// in t-space, where the density is the plain gamma density above.

/// Oracle for `P([C]_(p) > z)` (p-th largest of `big_p` iid draws):
/// integrates the ordered density `π_p^P f F^{P−p} (1−F)^{p−1}` from `z` to ∞
/// after the change of variables t = 1/(a·x).
pub fn ordered_tail_oracle(p: u32, big_p: u32, s: u32, a: f64, z: f64, tol: f64) -> f64 {
    assert!(1 <= p && p <= big_p);
    let t0 = if z <= 0.0 { T_CAP } else { (1.0 / (a * z)).min(T_CAP) };
    // π_p^P = C(P,p) · p
    let mut pi = p as f64;
    for i in 0..p {
        pi *= (big_p - i) as f64 / (i + 1) as f64;
    }
    let integrand = |t: f64| {
        // F(x) = P(T ≥ t) = 1 − G(t); survival of X is G(t).
        let g = gamma_p_oracle(s as f64, t);
        gamma_pdf_oracle(s, t) * (1.0 - g).powi((big_p - p) as i32) * g.powi(p as i32 - 1)
    };
    pi * integrate(integrand, 0.0, t0, tol)
}

/// Oracle for `P(X₁ ∈ (xl, xh), X₂ ∈ (yl, yh))` where `(X₁, X₂)` is the
/// descending-ordered pair of two iid noise entries (joint density
/// `2 f(x) f(y)` on x > y). Bounds may be 0 or `f64::INFINITY`.
pub fn ordered_pair_oracle(
    s: u32,
    a: f64,
    xl: f64,
    xh: f64,
    yl: f64,
    yh: f64,
    tol: f64,
) -> f64 {
    let to_t = |x: f64| -> f64 {
        if x <= 0.0 {
            T_CAP
        } else if x.is_infinite() {
            0.0
        } else {
            (1.0 / (a * x)).min(T_CAP)
        }
    };
    // x ∈ (xl, xh) ⇔ t_x ∈ (to_t(xh), to_t(xl)), and x > y ⇔ t_x < t_y.
    let (txl, txh) = (to_t(xh), to_t(xl));
    let (tyl, tyh) = (to_t(yh), to_t(yl));
    if txl >= txh {
        return 0.0;
    }
    let inner = |u: f64| {
        let lo = tyl.max(u);
        if lo >= tyh {
            0.0
        } else {
            gamma_p_oracle(s as f64, tyh) - gamma_p_oracle(s as f64, lo)
        }
    };
    2.0 * integrate(|u| gamma_pdf_oracle(s, u) * inner(u), txl, txh, tol)
}

/// One-bit weak-user outage by quadrature over the event decomposition.
pub fn onebit_weak_oracle(s: u32, a: f64, tau: f64, xi_star: [f64; 2], rho: f64, tol: f64) -> f64 {
    let tt = 1.0 / tau;
    let inf = f64::INFINITY;
    let phi = [tt.max(rho * xi_star[0]), tt.max(rho * xi_star[1])];
    let mut p = ordered_pair_oracle(s, a, phi[0], inf, 0.0, tt, tol);
    for i in 0..2 {
        p += 0.5 * ordered_pair_oracle(s, a, phi[i], inf, tt, inf, tol);
        p += 0.5 * ordered_pair_oracle(s, a, (rho * xi_star[i]).max(0.0), tt, 0.0, inf, tol);
    }
    p
}

/// One-bit strong-user outage by quadrature over the event decomposition.
pub fn onebit_strong_oracle(s: u32, a: f64, tau: f64, xi_star: [f64; 2], rho: f64, tol: f64) -> f64 {
    let tt = 1.0 / tau;
    let inf = f64::INFINITY;
    let phi = [tt.max(rho * xi_star[0]), tt.max(rho * xi_star[1])];
    let mut p = ordered_pair_oracle(s, a, tt, inf, (rho * xi_star[1]).max(0.0), tt, tol);
    for i in 0..2 {
        p += 0.5 * ordered_pair_oracle(s, a, 0.0, tt, (rho * xi_star[i]).max(0.0), inf, tol);
        p += 0.5 * ordered_pair_oracle(s, a, 0.0, inf, phi[i], inf, tol);
    }
    p
}

// ---------------------------------------------------------------------------
// Statistics helpers
// ---------------------------------------------------------------------------

/// Two-sided Kolmogorov–Smirnov test. Returns (D, asymptotic p-value).
pub fn ks_test(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max((f - (i as f64 + 1.0) / n).abs());
    }
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let mut p = 0.0;
    for j in 1..=100 {
        let sign = if j % 2 == 1 { 2.0 } else { -2.0 };
        p += sign * (-2.0 * (j as f64 * lambda).powi(2)).exp();
    }
    (d, p.clamp(0.0, 1.0))
}

/// Acceptance check `|k/n − p| ≤ 3σ` with σ from the true probability; for
/// cells with fewer than ten expected events on either side the normal
/// approximation is invalid, so an exact Poisson envelope with the same
/// 99.73% coverage is used instead.
pub fn within_three_sigma(k: u64, n: u64, p: f64) -> bool {
    let nf = n as f64;
    if p <= 0.0 {
        return k == 0;
    }
    if p >= 1.0 {
        return k == n;
    }
    if nf * p >= 10.0 && nf * (1.0 - p) >= 10.0 {
        let sigma = (p * (1.0 - p) / nf).sqrt();
        return (k as f64 / nf - p).abs() <= 3.0 * sigma;
    }
    // Poisson envelope for the rarer side.
    let (events, lambda) = if p <= 0.5 { (k, nf * p) } else { (n - k, nf * (1.0 - p)) };
    let alpha = 0.00135;
    let mut cdf = 0.0;
    let mut term = (-lambda).exp();
    let mut lo = 0u64;
    let mut hi = u64::MAX;
    for j in 0..10_000u64 {
        cdf += term;
        if cdf < alpha {
            lo = j + 1;
        }
        if cdf >= 1.0 - alpha {
            hi = j;
            break;
        }
        term *= lambda / (j as f64 + 1.0);
    }
    events >= lo && events <= hi
}

/// Least-squares slope of y against x.
pub fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

// ---------------------------------------------------------------------------
// Reference system configurations
// ---------------------------------------------------------------------------

/// Desk-scale system: M=5, K=2, r=3 per cluster, M̃=2, N=2.
pub fn desk_config(
    group: GroupConfig,
    protocols: Vec<Protocol>,
    rho_db: Vec<f64>,
    trials: u64,
    seed: u64,
) -> RunConfig {
    RunConfig {
        num_antennas: 5,
        radius_wavelengths: ArrayGeometry::uca_radius_for_spacing(5, 0.5),
        user_antennas: 2,
        groups_per_cluster: 2,
        eigen_threshold: 1e-3,
        quadrature_points: 1024,
        clusters: vec![
            ClusterGeometry::new(0.0, 20f64.to_radians(), 1).unwrap(),
            ClusterGeometry::new(144f64.to_radians(), 20f64.to_radians(), 2).unwrap(),
        ],
        group,
        protocols,
        rho_db,
        trials,
        master_seed: seed,
    }
}

/// Paper-scale system: M=50 half-wavelength UCA, K=4, r=16, M̃=2, N=2.
pub fn paper_config(
    group: GroupConfig,
    protocols: Vec<Protocol>,
    rho_db: Vec<f64>,
    trials: u64,
    seed: u64,
) -> RunConfig {
    RunConfig {
        num_antennas: 50,
        radius_wavelengths: ArrayGeometry::uca_radius_for_spacing(50, 0.5),
        user_antennas: 2,
        groups_per_cluster: 2,
        eigen_threshold: 1e-6,
        quadrature_points: 2048,
        clusters: vec![
            ClusterGeometry::new(0.0, 30f64.to_radians(), 1).unwrap(),
            ClusterGeometry::new(86.4f64.to_radians(), 30f64.to_radians(), 2).unwrap(),
            ClusterGeometry::new(180.0f64.to_radians(), 30f64.to_radians(), 3).unwrap(),
            ClusterGeometry::new(266.4f64.to_radians(), 30f64.to_radians(), 4).unwrap(),
        ],
        group,
        protocols,
        rho_db,
        trials,
        master_seed: seed,
    }
}

/// Group of the three-user experiments: α² = (5/8, 2/8, 1/8), R = (0.5, 0.5, 3).
pub fn three_user_group() -> GroupConfig {
    GroupConfig::from_alpha_sq(&[0.625, 0.25, 0.125], &[0.5, 0.5, 3.0]).unwrap()
}

/// Group of the two-user experiments: α² = (3/4, 1/4), R = (0.5, 0.5).
pub fn two_user_group() -> GroupConfig {
    GroupConfig::from_alpha_sq(&[0.75, 0.25], &[0.5, 0.5]).unwrap()
}

pub fn build(config: RunConfig) -> SystemModel {
    SystemModel::build(config).expect("reference configuration must build")
}
