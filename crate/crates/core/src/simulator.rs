//! Deterministic trial-parallel Monte Carlo engine.
//!
//! A run builds the system model once (correlation matrices, null-space
//! precoders, gain constants), then replays independent trials. Trial `t`
//! draws its randomness from a ChaCha8 generator seeded with the master
//! seed on stream `t`, so results are bit-identical for any worker count
//! and each trial can be reproduced in isolation.
//!
//! Within a trial the effective gains of every (cluster, group) pair are
//! drawn once; they do not depend on the transmit SNR, so one set of draws
//! serves every grid point and every protocol. Outage counts and per-slot
//! success counts are accumulated as integers, which keeps the reduction
//! over workers order-independent.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{
    outage_onebit_strong, outage_onebit_weak, outage_perfect, xi_thresholds, GainDistribution,
    OnebitConfig, XiThresholds,
};
use crate::channel::{decode_outcome, effective_basis, effective_gain, sample_fading, zf_covariance, GroupConfig};
use crate::geometry::{ArrayGeometry, ClusterGeometry, CorrelationMatrix};
use crate::precoding::{NullPrecoder, PrecoderSet};
use crate::{CMatrix, Error, Result};

/// Transmission protocol simulated for a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Protocol {
    /// NOMA with genie knowledge of the gain ordering.
    PerfectOrdering,
    /// NOMA ordered from one-bit feedback against gain threshold τ.
    OneBit { tau: f64 },
    /// Time-division baseline: each user gets 1/P of the channel uses at full power.
    Oma,
}

impl Protocol {
    pub fn label(&self) -> &'static str {
        match self {
            Protocol::PerfectOrdering => "perfect-ordering",
            Protocol::OneBit { .. } => "one-bit",
            Protocol::Oma => "oma",
        }
    }
}

/// Fully resolved run description consumed by [`SystemModel::build`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Base station antennas, M.
    pub num_antennas: usize,
    /// UCA radius in carrier wavelengths.
    pub radius_wavelengths: f64,
    /// Antennas per user, N.
    pub user_antennas: usize,
    /// Groups per cluster, Q.
    pub groups_per_cluster: usize,
    /// Relative eigenvalue truncation threshold.
    pub eigen_threshold: f64,
    /// Midpoint-rule point count for the correlation integrals.
    pub quadrature_points: usize,
    /// One entry per cluster.
    pub clusters: Vec<ClusterGeometry>,
    /// Power coefficients and rates shared by every group.
    pub group: GroupConfig,
    /// Protocols to simulate.
    pub protocols: Vec<Protocol>,
    /// Transmit SNR grid in dB.
    pub rho_db: Vec<f64>,
    /// Monte Carlo trials per grid point.
    pub trials: u64,
    /// Master seed of the per-trial stream derivation.
    pub master_seed: u64,
}

/// Per-cluster precomputed quantities.
#[derive(Debug, Clone)]
pub struct ClusterModel {
    pub correlation: CorrelationMatrix,
    pub precoder: NullPrecoder,
    /// S_k = P_kᴴ R_k P_k.
    pub effective_correlation: CMatrix,
    /// a_{k,q} for q = 0..M̃-1.
    pub gain_constants: Vec<f64>,
    /// Λ^{1/2} U P, r×M̃; the fading matrix left-multiplies this.
    pub basis: CMatrix,
}

impl ClusterModel {
    pub fn m_tilde(&self) -> usize {
        self.precoder.dim
    }
}

/// Immutable system state shared read-only by all Monte Carlo workers.
#[derive(Debug, Clone)]
pub struct SystemModel {
    pub config: RunConfig,
    pub array: ArrayGeometry,
    pub clusters: Vec<ClusterModel>,
    pub xi: XiThresholds,
}

impl SystemModel {
    pub fn build(config: RunConfig) -> Result<Self> {
        if config.clusters.is_empty() {
            return Err(Error::InvalidConfig("at least one cluster is required".into()));
        }
        if config.groups_per_cluster == 0 {
            return Err(Error::InvalidConfig("Q must be at least 1".into()));
        }
        if config.rho_db.is_empty() {
            return Err(Error::InvalidConfig("the SNR sweep needs at least one point".into()));
        }
        if config.user_antennas == 0 {
            return Err(Error::InvalidConfig("users need at least one antenna".into()));
        }
        for p in &config.protocols {
            if let Protocol::OneBit { tau } = p {
                if !(tau.is_finite() && *tau > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "one-bit threshold must be positive, got {tau}"
                    )));
                }
            }
        }

        let array = ArrayGeometry::uca(config.num_antennas, config.radius_wavelengths)?;
        let correlations = config
            .clusters
            .iter()
            .map(|c| {
                CorrelationMatrix::build(&array, c, config.quadrature_points, config.eigen_threshold)
            })
            .collect::<Result<Vec<_>>>()?;
        let precoding = PrecoderSet::build(&correlations)?;

        let mut clusters = Vec::with_capacity(correlations.len());
        for ((correlation, precoder), (s, a)) in correlations
            .into_iter()
            .zip(precoding.precoders)
            .zip(precoding.effective_correlations.into_iter().zip(precoding.gain_constants))
        {
            let m_tilde = precoder.dim;
            if config.user_antennas < m_tilde {
                return Err(Error::InvalidConfig(format!(
                    "N={} < M̃={}: zero-forcing requires N ≥ M̃",
                    config.user_antennas, m_tilde
                )));
            }
            if config.groups_per_cluster > m_tilde {
                return Err(Error::InvalidConfig(format!(
                    "Q={} > M̃={}: canonical group vectors need Q ≤ M̃",
                    config.groups_per_cluster, m_tilde
                )));
            }
            let basis = effective_basis(&correlation.eigvals, &correlation.eigvecs, &precoder.basis);
            clusters.push(ClusterModel {
                correlation,
                precoder,
                effective_correlation: s,
                gain_constants: a,
                basis,
            });
        }

        let xi = xi_thresholds(&config.group);
        Ok(Self { config, array, clusters, xi })
    }

    /// Integer shape s = N − M̃_k + 1 of cluster k's gain law.
    pub fn shape(&self, k: usize) -> u32 {
        (self.config.user_antennas - self.clusters[k].m_tilde() + 1) as u32
    }

    /// Marginal law of `[C]_{q,q}` for cluster `k`, group `q` (0-based).
    pub fn distribution(&self, k: usize, q: usize) -> Result<GainDistribution> {
        GainDistribution::new(self.clusters[k].gain_constants[q], self.shape(k))
    }

    pub fn users_per_group(&self) -> usize {
        self.config.group.users()
    }
}

/// Generator for trial `trial_index`: master seed, stream = trial index.
///
/// This mapping is the determinism contract — every worker partitioning of
/// the trial range sees exactly the same randomness per trial.
pub fn trial_rng(master_seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

/// Effective gains of every (cluster, group) pair for one trial.
#[derive(Debug, Clone)]
pub struct TrialGains {
    /// `gains[k][q]` holds the P users' effective gains sorted ascending
    /// (index 0 is the weakest user).
    pub gains: Vec<Vec<Vec<f64>>>,
    /// Rank-deficient fading draws that were rejected and resampled.
    pub rejected: u64,
}

/// Draws and sorts the per-user effective gains of one trial.
///
/// Consumes the generator in a fixed order: clusters outer, groups next,
/// users innermost.
pub fn draw_trial_gains(model: &SystemModel, rng: &mut ChaCha8Rng) -> TrialGains {
    let n = model.config.user_antennas;
    let q_groups = model.config.groups_per_cluster;
    let p_users = model.users_per_group();
    let mut rejected = 0u64;

    let mut gains = Vec::with_capacity(model.clusters.len());
    for cl in &model.clusters {
        let r = cl.correlation.rank;
        let mut groups = Vec::with_capacity(q_groups);
        for q in 0..q_groups {
            let mut users = Vec::with_capacity(p_users);
            for _ in 0..p_users {
                let gain = loop {
                    let g = sample_fading(n, r, rng);
                    let h = &g * &cl.basis;
                    match zf_covariance(&h) {
                        Ok(c) => break effective_gain(&c, q),
                        Err(_) => rejected += 1,
                    }
                };
                users.push(gain);
            }
            users.sort_by(|a, b| a.total_cmp(b));
            groups.push(users);
        }
        gains.push(groups);
    }

    TrialGains { gains, rejected }
}

/// Random slot assignment under one-bit feedback.
///
/// Users are indexed by ascending gain; the `n_below` users under the
/// threshold take the weak slots `0..n_below` in random order, the rest take
/// the remaining slots in random order. Returns `slot[user]` (0-based).
pub fn onebit_assign(p_users: usize, n_below: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut weak_slots: Vec<usize> = (0..n_below).collect();
    let mut strong_slots: Vec<usize> = (n_below..p_users).collect();
    weak_slots.shuffle(rng);
    strong_slots.shuffle(rng);
    weak_slots.into_iter().chain(strong_slots).collect()
}

/// Per-protocol outage decisions for one (cluster, group) draw.
///
/// `by_position[p]` indexes users by true ascending-gain order (the
/// quantity the closed forms describe); `by_slot[s]` indexes the NOMA/OMA
/// transmission slots (the quantity sum rates are built from). For perfect
/// ordering and OMA the two coincide.
#[derive(Debug, Clone)]
pub struct GroupDecision {
    pub by_position: Vec<bool>,
    pub by_slot: Vec<bool>,
}

fn eval_perfect(gains: &[f64], cfg: &GroupConfig, rho: f64) -> GroupDecision {
    let by_position: Vec<bool> = gains
        .iter()
        .enumerate()
        .map(|(i, &g)| decode_outcome(i + 1, g, cfg, rho).outage)
        .collect();
    GroupDecision { by_slot: by_position.clone(), by_position }
}

fn eval_oma(gains: &[f64], cfg: &GroupConfig, rho: f64) -> GroupDecision {
    let p_users = cfg.users() as f64;
    let by_position: Vec<bool> = gains
        .iter()
        .enumerate()
        .map(|(i, &g)| (1.0 + rho * g).log2() / p_users < cfg.rate(i + 1))
        .collect();
    GroupDecision { by_slot: by_position.clone(), by_position }
}

fn eval_onebit(gains: &[f64], slots: &[usize], cfg: &GroupConfig, rho: f64) -> GroupDecision {
    let p_users = cfg.users();
    let mut by_position = vec![false; p_users];
    let mut by_slot = vec![false; p_users];
    for (user, (&g, &slot)) in gains.iter().zip(slots).enumerate() {
        let outage = decode_outcome(slot + 1, g, cfg, rho).outage;
        by_position[user] = outage;
        by_slot[slot] = outage;
    }
    GroupDecision { by_position, by_slot }
}

/// Outage indicators for one trial, `outage[k][q][p]` with users in
/// ascending-gain order.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub outage: Vec<Vec<Vec<bool>>>,
    pub rejected: u64,
}

/// One trial of NOMA with perfect ordering at linear SNR `rho`.
pub fn run_trial_perfect(model: &SystemModel, rho: f64, trial_index: u64) -> TrialOutcome {
    let mut rng = trial_rng(model.config.master_seed, trial_index);
    let draw = draw_trial_gains(model, &mut rng);
    let outage = draw
        .gains
        .iter()
        .map(|groups| {
            groups.iter().map(|g| eval_perfect(g, &model.config.group, rho).by_position).collect()
        })
        .collect();
    TrialOutcome { outage, rejected: draw.rejected }
}

/// One trial of NOMA ordered by one-bit feedback with threshold `tau`.
pub fn run_trial_onebit(model: &SystemModel, tau: f64, rho: f64, trial_index: u64) -> TrialOutcome {
    let mut rng = trial_rng(model.config.master_seed, trial_index);
    let draw = draw_trial_gains(model, &mut rng);
    let p_users = model.users_per_group();
    let mut outage = Vec::with_capacity(draw.gains.len());
    for groups in &draw.gains {
        let mut per_group = Vec::with_capacity(groups.len());
        for g in groups {
            let n_below = g.iter().filter(|&&x| x < tau).count();
            let slots = onebit_assign(p_users, n_below, &mut rng);
            per_group.push(eval_onebit(g, &slots, &model.config.group, rho).by_position);
        }
        outage.push(per_group);
    }
    TrialOutcome { outage, rejected: draw.rejected }
}

/// One trial of the time-division baseline.
pub fn run_trial_oma(model: &SystemModel, rho: f64, trial_index: u64) -> TrialOutcome {
    let mut rng = trial_rng(model.config.master_seed, trial_index);
    let draw = draw_trial_gains(model, &mut rng);
    let outage = draw
        .gains
        .iter()
        .map(|groups| {
            groups.iter().map(|g| eval_oma(g, &model.config.group, rho).by_position).collect()
        })
        .collect();
    TrialOutcome { outage, rejected: draw.rejected }
}

/// Monte Carlo estimate for one (ρ, protocol, cluster, group, user) cell.
#[derive(Debug, Clone)]
pub struct OutageEstimate {
    pub rho_db: f64,
    pub protocol: Protocol,
    /// 1-based cluster index k.
    pub cluster: usize,
    /// 1-based group index q.
    pub group: usize,
    /// 1-based ordered user position p (1 = weakest).
    pub user: usize,
    pub outage_prob: f64,
    /// `sqrt(p̂ (1 − p̂) / trials)`.
    pub standard_error: f64,
    pub trials: u64,
    /// Closed-form companion where the analysis provides one.
    pub closed_form: Option<f64>,
    /// Monte Carlo mean of `R_p · (1 − outage of slot p)` for this group's slot p.
    pub slot_sum_rate: f64,
}

/// Outage sum rate averaged over trials and over (cluster, group) pairs.
#[derive(Debug, Clone)]
pub struct SumRateRecord {
    pub rho_db: f64,
    pub protocol: Protocol,
    /// Mean of `Σ_slots R_slot (1 − outage)`; at most `Σ_p R_p`.
    pub sum_rate: f64,
    /// Closed-form companion where slot outage probabilities are available.
    pub closed_form: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunResults {
    pub outage: Vec<OutageEstimate>,
    pub sum_rates: Vec<SumRateRecord>,
    pub rejected_draws: u64,
}

/// Integer accumulator; merging is elementwise addition, so the parallel
/// reduction is order-independent.
struct Accum {
    outage_by_pos: Vec<u64>,
    outage_by_slot: Vec<u64>,
    rejected: u64,
}

impl Accum {
    fn zeros(cells: usize) -> Self {
        Self { outage_by_pos: vec![0; cells], outage_by_slot: vec![0; cells], rejected: 0 }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.outage_by_pos.iter_mut().zip(&other.outage_by_pos) {
            *a += b;
        }
        for (a, b) in self.outage_by_slot.iter_mut().zip(&other.outage_by_slot) {
            *a += b;
        }
        self.rejected += other.rejected;
        self
    }
}

struct CellIndex {
    protocols: usize,
    clusters: usize,
    groups: usize,
    users: usize,
}

impl CellIndex {
    fn flat(&self, r: usize, pr: usize, k: usize, q: usize, p: usize) -> usize {
        (((r * self.protocols + pr) * self.clusters + k) * self.groups + q) * self.users + p
    }

    fn cells(&self, rho_points: usize) -> usize {
        rho_points * self.protocols * self.clusters * self.groups * self.users
    }
}

/// Runs the full sweep described by the model's configuration.
///
/// Trials are independent and parallelized with rayon; the outcome is
/// bit-identical for any worker count because the per-trial generator
/// depends only on (master seed, trial index) and all accumulation is
/// integer addition.
pub fn estimate(model: &SystemModel) -> Result<RunResults> {
    let cfg = &model.config;
    if cfg.trials < 1_000 {
        return Err(Error::InvalidConfig(format!(
            "Monte Carlo needs at least 1000 trials, got {}",
            cfg.trials
        )));
    }
    if cfg.protocols.is_empty() {
        return Err(Error::InvalidConfig("no protocols requested".into()));
    }

    let rho_lin: Vec<f64> = cfg.rho_db.iter().map(|db| 10f64.powf(db / 10.0)).collect();
    let idx = CellIndex {
        protocols: cfg.protocols.len(),
        clusters: model.clusters.len(),
        groups: cfg.groups_per_cluster,
        users: model.users_per_group(),
    };
    let cells = idx.cells(rho_lin.len());

    const CHUNK: u64 = 4096;
    let n_chunks = cfg.trials.div_ceil(CHUNK);

    let acc = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut local = Accum::zeros(cells);
            let start = chunk * CHUNK;
            let end = (start + CHUNK).min(cfg.trials);
            for trial in start..end {
                accumulate_trial(model, trial, &rho_lin, &idx, &mut local);
            }
            local
        })
        .reduce(|| Accum::zeros(cells), Accum::merge);

    Ok(collect_results(model, &rho_lin, &idx, acc))
}

fn accumulate_trial(
    model: &SystemModel,
    trial: u64,
    rho_lin: &[f64],
    idx: &CellIndex,
    acc: &mut Accum,
) {
    let cfg = &model.config;
    let p_users = model.users_per_group();
    let mut rng = trial_rng(cfg.master_seed, trial);
    let draw = draw_trial_gains(model, &mut rng);
    acc.rejected += draw.rejected;

    // Slot assignments are SNR-independent; draw them once per one-bit
    // protocol, in protocol order, right after the gains.
    let mut onebit_slots: Vec<Vec<Vec<Vec<usize>>>> = Vec::new();
    for proto in &cfg.protocols {
        if let Protocol::OneBit { tau } = proto {
            let mut per_cluster = Vec::with_capacity(draw.gains.len());
            for groups in &draw.gains {
                let mut per_group = Vec::with_capacity(groups.len());
                for g in groups {
                    let n_below = g.iter().filter(|&&x| x < *tau).count();
                    per_group.push(onebit_assign(p_users, n_below, &mut rng));
                }
                per_cluster.push(per_group);
            }
            onebit_slots.push(per_cluster);
        }
    }

    for (r, &rho) in rho_lin.iter().enumerate() {
        let mut onebit_seen = 0;
        for (pr, proto) in cfg.protocols.iter().enumerate() {
            for (k, groups) in draw.gains.iter().enumerate() {
                for (q, gains) in groups.iter().enumerate() {
                    let decision = match proto {
                        Protocol::PerfectOrdering => eval_perfect(gains, &cfg.group, rho),
                        Protocol::Oma => eval_oma(gains, &cfg.group, rho),
                        Protocol::OneBit { .. } => {
                            let slots = &onebit_slots[onebit_seen][k][q];
                            eval_onebit(gains, slots, &cfg.group, rho)
                        }
                    };
                    for p in 0..p_users {
                        let cell = idx.flat(r, pr, k, q, p);
                        acc.outage_by_pos[cell] += decision.by_position[p] as u64;
                        acc.outage_by_slot[cell] += decision.by_slot[p] as u64;
                    }
                }
            }
            if matches!(proto, Protocol::OneBit { .. }) {
                onebit_seen += 1;
            }
        }
    }
}

fn collect_results(
    model: &SystemModel,
    rho_lin: &[f64],
    idx: &CellIndex,
    acc: Accum,
) -> RunResults {
    let cfg = &model.config;
    let p_users = model.users_per_group();
    let trials = cfg.trials;
    let mut outage = Vec::new();
    let mut sum_rates = Vec::new();

    for (r, &rho) in rho_lin.iter().enumerate() {
        for (pr, proto) in cfg.protocols.iter().enumerate() {
            let mut rate_acc = 0.0;
            // Under one-bit feedback the closed forms describe users ordered
            // by channel, not slots, so no closed-form slot rate exists.
            let mut closed_rate_acc =
                if matches!(proto, Protocol::OneBit { .. }) { None } else { Some(0.0) };
            for k in 0..model.clusters.len() {
                for q in 0..cfg.groups_per_cluster {
                    let dist = model
                        .distribution(k, q)
                        .expect("model construction validated the gain constants");
                    for p in 0..p_users {
                        let cell = idx.flat(r, pr, k, q, p);
                        let fails = acc.outage_by_pos[cell];
                        let p_hat = fails as f64 / trials as f64;
                        let se = (p_hat * (1.0 - p_hat) / trials as f64).sqrt();
                        let closed = closed_form_outage(model, proto, &dist, p + 1, rho);

                        let slot_ok = trials - acc.outage_by_slot[cell];
                        let slot_rate =
                            cfg.group.rate(p + 1) * slot_ok as f64 / trials as f64;
                        rate_acc += slot_rate;
                        closed_rate_acc = match (closed_rate_acc, closed) {
                            (Some(acc_v), Some(c)) => {
                                Some(acc_v + cfg.group.rate(p + 1) * (1.0 - c))
                            }
                            _ => None,
                        };

                        outage.push(OutageEstimate {
                            rho_db: cfg.rho_db[r],
                            protocol: *proto,
                            cluster: k + 1,
                            group: q + 1,
                            user: p + 1,
                            outage_prob: p_hat,
                            standard_error: se,
                            trials,
                            closed_form: closed,
                            slot_sum_rate: slot_rate,
                        });
                    }
                }
            }
            let n_groups = (model.clusters.len() * cfg.groups_per_cluster) as f64;
            sum_rates.push(SumRateRecord {
                rho_db: cfg.rho_db[r],
                protocol: *proto,
                sum_rate: rate_acc / n_groups,
                closed_form: closed_rate_acc.map(|v| v / n_groups),
            });
        }
    }

    RunResults { outage, sum_rates, rejected_draws: acc.rejected }
}

/// Closed-form outage for ordered user `p` (1-based) under `proto`, if the
/// analysis covers the case.
pub fn closed_form_outage(
    model: &SystemModel,
    proto: &Protocol,
    dist: &GainDistribution,
    p: usize,
    rho: f64,
) -> Option<f64> {
    let cfg = &model.config;
    let big_p = cfg.group.users() as u32;
    match proto {
        Protocol::PerfectOrdering => Some(outage_perfect(
            p as u32,
            big_p,
            dist,
            model.xi.xi_star[p - 1],
            rho,
        )),
        Protocol::Oma => {
            // User p succeeds iff (1/P) log2(1 + ρ g) ≥ R_p, i.e. the p-th
            // ordered noise entry stays below ρ / (2^{P R_p} − 1).
            let tau_oma = (2f64).powf(big_p as f64 * cfg.group.rate(p)) - 1.0;
            Some(crate::analysis::ordered_tail(p as u32, big_p, dist, rho / tau_oma))
        }
        Protocol::OneBit { tau } => {
            if big_p != 2 {
                return None;
            }
            let onebit = OnebitConfig::new(*tau, cfg.group.clone()).ok()?;
            Some(match p {
                1 => outage_onebit_weak(&onebit, dist, rho),
                _ => outage_onebit_strong(&onebit, dist, rho),
            })
        }
    }
}

/// Worst-case received inter-cluster interference power for one trial.
///
/// Draws one user per cluster, forms its physical channel `G Λ^{1/2} U`,
/// and sums the received power of every other cluster's transmission
/// through its precoder (unit-power symbols on every slot). The null-space
/// construction makes this zero up to rounding.
pub fn inter_cluster_leakage(model: &SystemModel, trial_index: u64) -> f64 {
    let mut rng = trial_rng(model.config.master_seed, trial_index);
    let n = model.config.user_antennas;
    let mut worst: f64 = 0.0;
    for (k, cl) in model.clusters.iter().enumerate() {
        let g = sample_fading(n, cl.correlation.rank, &mut rng);
        let mut lam_u = cl.correlation.eigvecs.clone();
        for (i, l) in cl.correlation.eigvals.iter().enumerate() {
            let s = crate::C64::new(l.sqrt(), 0.0);
            for c in 0..lam_u.ncols() {
                lam_u[(i, c)] *= s;
            }
        }
        let h = &g * &lam_u;
        let mut received = 0.0;
        for (i, other) in model.clusters.iter().enumerate() {
            if i != k {
                received += (&h * &other.precoder.basis).norm_squared();
            }
        }
        worst = worst.max(received);
    }
    worst
}
