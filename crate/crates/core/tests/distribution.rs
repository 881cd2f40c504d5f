//! Statistical agreement between the sampled channel and the analytical laws.

mod common;

use common::*;
use massive_noma::analysis::{ordered_tail, reg_lower_gamma, xi_thresholds};
use massive_noma::channel::{
    compose_effective, decode_outcome, effective_gain, sample_fading, zf_covariance, GroupConfig,
};
use massive_noma::simulator::{draw_trial_gains, trial_rng, Protocol};
use massive_noma::{CMatrix, C64};

#[test]
fn uncorrelated_full_rank_gain_is_gamma_distributed() {
    // With Λ = I and U P = I the effective gain 1/[C]_{q,q} follows a
    // Gamma law with shape N − M̃ + 1 and unit scale.
    let (n, m_tilde) = (4usize, 2usize);
    let shape = (n - m_tilde + 1) as u32;
    let eye = CMatrix::identity(m_tilde, m_tilde);
    let mut rng = trial_rng(11, 0);
    let mut samples: Vec<f64> = (0..100_000)
        .map(|_| {
            let g = sample_fading(n, m_tilde, &mut rng);
            let c = zf_covariance(&compose_effective(&g, &[1.0; 2], &eye, &eye)).unwrap();
            effective_gain(&c, 0)
        })
        .collect();
    let (d, p) = ks_test(&mut samples, |x| {
        if x <= 0.0 { 0.0 } else { reg_lower_gamma(shape, x) }
    });
    assert!(p > 0.01, "KS D={d}, p={p}");
}

#[test]
fn gram_expectation_matches_effective_correlation() {
    // E[H̃ᴴH̃] = N · PᴴRP over the fading ensemble.
    let model = build(desk_config(two_user_group(), vec![Protocol::PerfectOrdering], vec![10.0], 1000, 5));
    let cl = &model.clusters[0];
    let n = model.config.user_antennas;
    let trials = 200_000;
    let mut rng = trial_rng(23, 0);
    let mut acc = CMatrix::zeros(cl.m_tilde(), cl.m_tilde());
    for _ in 0..trials {
        let g = sample_fading(n, cl.correlation.rank, &mut rng);
        let h = &g * &cl.basis;
        acc += h.adjoint() * h;
    }
    let mean = acc / C64::new(trials as f64 * n as f64, 0.0);
    let err = (&mean - &cl.effective_correlation).norm() / cl.effective_correlation.norm();
    assert!(err < 0.02, "relative deviation {err}");
}

#[test]
fn noise_entry_mean_matches_inverse_law() {
    // E[[C]_{q,q}] = 1/(a (N − M̃)) requires N − M̃ ≥ 1; use N = 3.
    let mut cfg = desk_config(two_user_group(), vec![Protocol::PerfectOrdering], vec![10.0], 1000, 5);
    cfg.user_antennas = 3;
    let model = build(cfg);
    let cl = &model.clusters[0];
    let q = 1;
    let trials = 200_000;
    let mut rng = trial_rng(31, 0);
    let mut acc = 0.0;
    for _ in 0..trials {
        let g = sample_fading(3, cl.correlation.rank, &mut rng);
        let c = zf_covariance(&(&g * &cl.basis)).unwrap();
        acc += c[(q, q)].re;
    }
    let mean = acc / trials as f64;
    let expect = 1.0 / (cl.gain_constants[q] * (3 - cl.m_tilde()) as f64);
    assert!(
        (mean - expect).abs() / expect < 0.03,
        "mean [C]_qq {mean} vs inverse-law {expect}"
    );
}

#[test]
fn unordered_noise_entry_passes_ks() {
    let model = build(desk_config(two_user_group(), vec![Protocol::PerfectOrdering], vec![10.0], 1000, 5));
    let cl = &model.clusters[0];
    let dist = model.distribution(0, 0).unwrap();
    let mut rng = trial_rng(47, 0);
    let mut samples: Vec<f64> = (0..100_000)
        .map(|_| {
            let g = sample_fading(2, cl.correlation.rank, &mut rng);
            let c = zf_covariance(&(&g * &cl.basis)).unwrap();
            c[(0, 0)].re
        })
        .collect();
    let (d, p) = ks_test(&mut samples, |x| dist.cdf_ext(x));
    assert!(p > 0.01, "KS D={d}, p={p}");
}

#[test]
fn ordered_noise_entries_pass_ks() {
    // The p-th ordered [C]_{q,q} of each group follows the order-statistic law.
    let model = build(desk_config(
        three_user_group(),
        vec![Protocol::PerfectOrdering],
        vec![10.0],
        1000,
        5,
    ));
    let dist = model.distribution(0, 0).unwrap();
    let big_p = 3u32;
    let trials = 100_000usize;
    let mut per_position: Vec<Vec<f64>> = (0..3).map(|_| Vec::with_capacity(trials)).collect();
    for t in 0..trials {
        let mut rng = trial_rng(53, t as u64);
        let draw = draw_trial_gains(&model, &mut rng);
        // gains ascending; position p (1-based) has noise entry 1/gain.
        for (i, g) in draw.gains[0][0].iter().enumerate() {
            per_position[i].push(1.0 / g);
        }
    }
    for p in 1..=big_p {
        let samples = &mut per_position[(p - 1) as usize];
        let (d, pv) = ks_test(samples, |x| 1.0 - ordered_tail(p, big_p, &dist, x));
        assert!(pv > 0.01, "position {p}: KS D={d}, p={pv}");
    }
}

#[test]
fn sic_chain_agrees_with_threshold_characterization() {
    // Rate-by-rate SIC decoding and the noise-entry threshold test decide
    // identically when every ξ_n is positive.
    let group = three_user_group();
    let xi = xi_thresholds(&group);
    assert!(xi.xi.iter().all(|&x| x > 0.0));
    let model = build(desk_config(group.clone(), vec![Protocol::PerfectOrdering], vec![10.0], 1000, 5));
    let rho = 6.0;
    for t in 0..10_000u64 {
        let mut rng = trial_rng(61, t);
        let draw = draw_trial_gains(&model, &mut rng);
        for groups in &draw.gains {
            for gains in groups {
                for (i, &g) in gains.iter().enumerate() {
                    let sic = decode_outcome(i + 1, g, &group, rho).outage;
                    let threshold = 1.0 / g > rho * xi.xi_star[i];
                    assert_eq!(sic, threshold, "trial {t}, position {}", i + 1);
                }
            }
        }
    }
}

#[test]
fn fading_draw_is_unit_variance_gaussian() {
    let mut rng = trial_rng(3, 0);
    let n = 100_000;
    let mut samples: Vec<f64> = Vec::with_capacity(n);
    for _ in 0..n {
        let g = sample_fading(1, 1, &mut rng)[(0, 0)];
        // |g|² of CN(0,1) is unit-mean exponential.
        samples.push(g.norm_sqr());
    }
    let (d, p) = ks_test(&mut samples, |x| if x <= 0.0 { 0.0 } else { 1.0 - (-x).exp() });
    assert!(p > 0.01, "KS D={d}, p={p}");
}

#[test]
fn group_config_rejects_bad_inputs() {
    assert!(GroupConfig::from_alpha_sq(&[0.6, 0.25], &[0.5, 0.5]).is_err()); // Σ ≠ 1
    assert!(GroupConfig::from_alpha_sq(&[0.25, 0.75], &[0.5, 0.5]).is_err()); // increasing
    assert!(GroupConfig::from_alpha_sq(&[0.75, 0.25], &[0.5, -0.5]).is_err()); // bad rate
    assert!(GroupConfig::from_alpha_sq(&[1.0], &[0.5]).is_ok());
}
