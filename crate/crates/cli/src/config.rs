//! Run-configuration file format, presets and the run manifest.
//!
//! Configurations are TOML documents; see the repository README for the
//! schema. A manifest written after a run contains the fully resolved
//! configuration under `[config]` together with derived quantities, so a
//! manifest file can itself be fed back to `--config`.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use massive_noma::channel::GroupConfig;
use massive_noma::geometry::{
    ArrayGeometry, ClusterGeometry, DEFAULT_EIGEN_THRESHOLD, DEFAULT_QUADRATURE_POINTS,
};
use massive_noma::simulator::{Protocol, RunConfig, SystemModel};

fn default_eigen_threshold() -> f64 {
    DEFAULT_EIGEN_THRESHOLD
}

fn default_quadrature_points() -> usize {
    DEFAULT_QUADRATURE_POINTS
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemSection {
    pub antennas: usize,
    /// UCA radius in wavelengths; omitted means half-wavelength element spacing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_wavelengths: Option<f64>,
    pub user_antennas: usize,
    pub groups_per_cluster: usize,
    #[serde(default = "default_eigen_threshold")]
    pub eigen_threshold: f64,
    #[serde(default = "default_quadrature_points")]
    pub quadrature_points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterSection {
    pub azimuth_deg: f64,
    pub spread_deg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSection {
    /// Squared power coefficients α_p², nonincreasing, summing to 1.
    pub alpha_sq: Vec<f64>,
    /// Target rates in bits per channel use.
    pub rates: Vec<f64>,
}

/// SNR grid, either explicit values or an inclusive start/stop/step range.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RhoGrid {
    List(Vec<f64>),
    Range { start_db: f64, stop_db: f64, step_db: f64 },
}

impl RhoGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            RhoGrid::List(v) => {
                if v.is_empty() {
                    bail!("sweep.rho_db must contain at least one value");
                }
                Ok(v.clone())
            }
            RhoGrid::Range { start_db, stop_db, step_db } => {
                if *step_db <= 0.0 {
                    bail!("sweep.rho_db.step_db must be positive");
                }
                if stop_db < start_db {
                    bail!("sweep.rho_db has stop_db < start_db");
                }
                let mut v = Vec::new();
                let mut x = *start_db;
                while x <= stop_db + 1e-9 {
                    v.push(x);
                    x += step_db;
                }
                Ok(v)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSection {
    pub rho_db: RhoGrid,
    pub trials: u64,
    pub seed: u64,
    /// Any of "perfect-ordering", "one-bit", "oma".
    pub protocols: Vec<String>,
    /// Gain threshold for the one-bit protocol; required when it is listed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub onebit_tau: Option<f64>,
}

/// The on-disk configuration document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigFile {
    pub system: SystemSection,
    #[serde(rename = "cluster")]
    pub clusters: Vec<ClusterSection>,
    pub group: GroupSection,
    pub sweep: SweepSection,
}

/// Wrapper detected when a manifest is passed back as a configuration.
#[derive(Debug, Deserialize)]
struct ManifestEnvelope {
    config: ConfigFile,
}

impl ConfigFile {
    /// Converts the document into a validated run configuration.
    pub fn resolve(&self) -> Result<RunConfig> {
        let radius = self
            .system
            .radius_wavelengths
            .unwrap_or_else(|| ArrayGeometry::uca_radius_for_spacing(self.system.antennas, 0.5));
        if self.clusters.is_empty() {
            bail!("at least one [[cluster]] is required");
        }
        let clusters = self
            .clusters
            .iter()
            .enumerate()
            .map(|(i, c)| {
                ClusterGeometry::new(c.azimuth_deg.to_radians(), c.spread_deg.to_radians(), i + 1)
                    .map_err(anyhow::Error::from)
            })
            .collect::<Result<Vec<_>>>()?;
        let group = GroupConfig::from_alpha_sq(&self.group.alpha_sq, &self.group.rates)
            .context("invalid [group] section")?;

        let mut protocols = Vec::new();
        for name in &self.sweep.protocols {
            protocols.push(match name.as_str() {
                "perfect-ordering" => Protocol::PerfectOrdering,
                "oma" => Protocol::Oma,
                "one-bit" => {
                    let tau = self.sweep.onebit_tau.context(
                        "sweep.onebit_tau is required when the one-bit protocol is listed",
                    )?;
                    Protocol::OneBit { tau }
                }
                other => bail!(
                    "unknown protocol {other:?}; expected perfect-ordering, one-bit or oma"
                ),
            });
        }
        if protocols.is_empty() {
            bail!("sweep.protocols must list at least one protocol");
        }

        Ok(RunConfig {
            num_antennas: self.system.antennas,
            radius_wavelengths: radius,
            user_antennas: self.system.user_antennas,
            groups_per_cluster: self.system.groups_per_cluster,
            eigen_threshold: self.system.eigen_threshold,
            quadrature_points: self.system.quadrature_points,
            clusters,
            group,
            protocols,
            rho_db: self.sweep.rho_db.values()?,
            trials: self.sweep.trials,
            master_seed: self.sweep.seed,
        })
    }
}

/// Parses a configuration file; a manifest containing a `[config]` table is
/// accepted transparently.
pub fn parse_config(text: &str) -> Result<ConfigFile> {
    if let Ok(envelope) = toml::from_str::<ManifestEnvelope>(text) {
        return Ok(envelope.config);
    }
    toml::from_str::<ConfigFile>(text).context("configuration file is not valid")
}

pub fn load_config(path: &std::path::Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read configuration {}", path.display()))?;
    parse_config(&text)
}

/// Derived quantities echoed into the manifest for by-hand auditing.
#[derive(Debug, Serialize)]
struct DerivedCluster {
    cluster: usize,
    rank: usize,
    m_tilde: usize,
    shape: u32,
    /// Gain constants a_{k,q}, q = 1..M̃.
    a: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct DerivedSection {
    xi: Vec<f64>,
    xi_star: Vec<f64>,
    clusters: Vec<DerivedCluster>,
}

#[derive(Debug, Serialize)]
struct ManifestDoc<'a> {
    code_version: &'a str,
    seed: u64,
    rejected_draws: Option<u64>,
    config: &'a ConfigFile,
    derived: DerivedSection,
}

/// Renders the run manifest: resolved config, seed, code version and the
/// derived quantities (r, M̃, a_{k,q}, ξ) needed to check results by hand.
pub fn render_manifest(
    file: &ConfigFile,
    model: &SystemModel,
    rejected_draws: Option<u64>,
) -> Result<String> {
    let derived = DerivedSection {
        xi: model.xi.xi.clone(),
        xi_star: model.xi.xi_star.clone(),
        clusters: model
            .clusters
            .iter()
            .enumerate()
            .map(|(k, cl)| DerivedCluster {
                cluster: k + 1,
                rank: cl.correlation.rank,
                m_tilde: cl.m_tilde(),
                shape: model.shape(k),
                a: cl.gain_constants.clone(),
            })
            .collect(),
    };
    let doc = ManifestDoc {
        code_version: env!("CARGO_PKG_VERSION"),
        seed: model.config.master_seed,
        rejected_draws,
        config: file,
        derived,
    };
    Ok(toml::to_string_pretty(&doc)?)
}

/// Built-in experiment presets.
pub fn preset(name: &str) -> Result<ConfigFile> {
    // Shared array: 50-antenna UCA at half-wavelength spacing; four clusters
    // 86.4°–93.6° apart (multiples of the array's 7.2° symmetry step, so all
    // clusters share one eigenvalue spectrum) with 30° half-width sectors,
    // which truncate to rank 16 at the default threshold and leave M̃ = 2
    // interference-free dimensions per cluster.
    let system = SystemSection {
        antennas: 50,
        radius_wavelengths: None,
        user_antennas: 2,
        groups_per_cluster: 2,
        eigen_threshold: DEFAULT_EIGEN_THRESHOLD,
        quadrature_points: DEFAULT_QUADRATURE_POINTS,
    };
    let clusters = vec![
        ClusterSection { azimuth_deg: 0.0, spread_deg: 30.0 },
        ClusterSection { azimuth_deg: 86.4, spread_deg: 30.0 },
        ClusterSection { azimuth_deg: 180.0, spread_deg: 30.0 },
        ClusterSection { azimuth_deg: 266.4, spread_deg: 30.0 },
    ];
    let three_users = GroupSection {
        alpha_sq: vec![0.625, 0.25, 0.125],
        rates: vec![0.5, 0.5, 3.0],
    };
    let rho = RhoGrid::Range { start_db: 0.0, stop_db: 30.0, step_db: 5.0 };

    let cfg = match name {
        "fig1" => ConfigFile {
            system,
            clusters,
            group: three_users,
            sweep: SweepSection {
                rho_db: rho,
                trials: 100_000,
                seed: 1,
                protocols: vec!["perfect-ordering".into(), "oma".into()],
                onebit_tau: None,
            },
        },
        "fig2" => ConfigFile {
            system,
            clusters,
            group: three_users,
            sweep: SweepSection {
                rho_db: RhoGrid::Range { start_db: 0.0, stop_db: 40.0, step_db: 5.0 },
                trials: 100_000,
                seed: 2,
                protocols: vec!["perfect-ordering".into()],
                onebit_tau: None,
            },
        },
        "fig3" => ConfigFile {
            system,
            clusters,
            group: GroupSection { alpha_sq: vec![0.75, 0.25], rates: vec![0.5, 0.5] },
            sweep: SweepSection {
                rho_db: rho,
                trials: 100_000,
                seed: 3,
                protocols: vec!["perfect-ordering".into(), "one-bit".into()],
                onebit_tau: Some(1.0),
            },
        },
        other => bail!("unknown preset {other:?}; expected fig1, fig2 or fig3"),
    };
    Ok(cfg)
}
