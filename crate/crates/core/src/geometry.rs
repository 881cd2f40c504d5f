//! Spatial correlation of clustered users under a one-ring scattering model.
//!
//! Scatterers around a cluster are seen from the array inside a narrow
//! azimuth sector `[θ − Δ, θ + Δ]` with a uniform power azimuth spectrum.
//! The transmit correlation matrix is the sector average of the steering
//! outer product,
//!
//! ```text
//! [R]_{m,n} = (1 / 2Δ) ∫ a_m(α) a_n*(α) dα,   a_m(α) = exp(j 2π ⟨u_m, d(α)⟩),
//! ```
//!
//! with `u_m` the m-th element position in carrier wavelengths and `d(α)`
//! the unit direction of arrival. The integral is evaluated with a
//! fixed-count midpoint rule so that results are deterministic for a given
//! point count.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::{CMatrix, CVector, Error, Result, C64};

/// Relative eigenvalue cutoff used when a configuration does not override it.
pub const DEFAULT_EIGEN_THRESHOLD: f64 = 1e-6;

/// Midpoint-rule point count used when a configuration does not override it.
pub const DEFAULT_QUADRATURE_POINTS: usize = 2048;

/// Antenna element layout of the base station array.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    /// Number of antennas (M).
    pub num_antennas: usize,
    /// Circle radius in carrier wavelengths; 0 collapses every element to the origin.
    pub radius_wavelengths: f64,
    /// Element positions in wavelengths, one `[x, y]` pair per antenna.
    pub element_positions: Vec<[f64; 2]>,
}

impl ArrayGeometry {
    /// Uniform circular array with `m` elements; element `i` sits at angle `2πi/m`.
    pub fn uca(m: usize, radius_wavelengths: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidConfig("array needs at least one antenna".into()));
        }
        if !radius_wavelengths.is_finite() || radius_wavelengths < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "array radius must be a nonnegative number of wavelengths, got {radius_wavelengths}"
            )));
        }
        let element_positions = (0..m)
            .map(|i| {
                let phi = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
                [radius_wavelengths * phi.cos(), radius_wavelengths * phi.sin()]
            })
            .collect();
        Ok(Self { num_antennas: m, radius_wavelengths, element_positions })
    }

    /// Radius giving an adjacent-element spacing of `spacing` wavelengths on a UCA.
    ///
    /// Chord length between neighbours is `2 r sin(π/M)`.
    pub fn uca_radius_for_spacing(m: usize, spacing: f64) -> f64 {
        if m < 2 {
            return 0.0;
        }
        0.5 * spacing / (std::f64::consts::PI / m as f64).sin()
    }

    /// Steering vector for a planar wave arriving from azimuth `alpha`.
    pub fn steering(&self, alpha: f64) -> CVector {
        let (sin_a, cos_a) = alpha.sin_cos();
        DVector::from_iterator(
            self.num_antennas,
            self.element_positions.iter().map(|p| {
                let phase = 2.0 * std::f64::consts::PI * (p[0] * cos_a + p[1] * sin_a);
                C64::new(phase.cos(), phase.sin())
            }),
        )
    }
}

/// Azimuth sector of one user cluster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterGeometry {
    /// Sector center in radians.
    pub center_azimuth: f64,
    /// Sector half-width Δ in radians.
    pub angular_spread: f64,
    /// Cluster index k, 1-based.
    pub cluster_id: usize,
}

impl ClusterGeometry {
    pub fn new(center_azimuth: f64, angular_spread: f64, cluster_id: usize) -> Result<Self> {
        if !angular_spread.is_finite()
            || !(0.0..=std::f64::consts::PI).contains(&angular_spread)
        {
            return Err(Error::InvalidConfig(format!(
                "angular spread must lie in [0, π], got {angular_spread}"
            )));
        }
        Ok(Self { center_azimuth, angular_spread, cluster_id })
    }
}

/// Correlation matrix together with its retained eigenstructure.
///
/// `matrix = eigvecs.adjoint() * diag(eigvals) * eigvecs` up to the truncated
/// eigenvalues; rows of `eigvecs` are orthonormal and `eigvals` is positive
/// and nonincreasing.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    /// Full M×M Hermitian PSD correlation matrix with unit diagonal.
    pub matrix: CMatrix,
    /// Retained eigenvectors as rows, r×M.
    pub eigvecs: CMatrix,
    /// Retained eigenvalues, nonincreasing.
    pub eigvals: Vec<f64>,
    /// Number of retained eigenvalues.
    pub rank: usize,
}

impl CorrelationMatrix {
    /// Builds the correlation matrix of `cluster` and truncates its spectrum.
    pub fn build(
        array: &ArrayGeometry,
        cluster: &ClusterGeometry,
        quadrature_points: usize,
        eigen_threshold: f64,
    ) -> Result<Self> {
        let matrix = build_correlation(array, cluster, quadrature_points)?;
        let (eigvecs, eigvals) = eigen_truncate(&matrix, eigen_threshold)?;
        let rank = eigvals.len();
        Ok(Self { matrix, eigvecs, eigvals, rank })
    }
}

/// Sector-averaged steering outer product, midpoint rule with `quadrature_points` points.
///
/// The result is symmetrized to exactly Hermitian and its diagonal is pinned
/// to exactly 1, so the trace equals the antenna count.
pub fn build_correlation(
    array: &ArrayGeometry,
    cluster: &ClusterGeometry,
    quadrature_points: usize,
) -> Result<CMatrix> {
    if quadrature_points == 0 {
        return Err(Error::InvalidConfig("quadrature needs at least one point".into()));
    }
    if cluster.angular_spread < 0.0 {
        return Err(Error::InvalidConfig("angular spread must be nonnegative".into()));
    }
    let m = array.num_antennas;
    let delta = cluster.angular_spread;
    let theta = cluster.center_azimuth;
    let n = quadrature_points;

    let mut acc = CMatrix::zeros(m, m);
    for i in 0..n {
        // Midpoint of the i-th of n equal sub-sectors.
        let alpha = theta - delta + (2.0 * i as f64 + 1.0) / n as f64 * delta;
        let a = array.steering(alpha);
        // acc += a a^H
        acc.gerc(C64::new(1.0, 0.0), &a, &a, C64::new(1.0, 0.0));
    }
    let mut r = acc / C64::new(n as f64, 0.0);

    // Exact Hermitian symmetrization; IEEE addition commutes so the result is
    // bit-exact conjugate symmetric.
    let rh = r.adjoint();
    r = (r + rh) * C64::new(0.5, 0.0);
    for q in 0..m {
        r[(q, q)] = C64::new(1.0, 0.0);
    }
    Ok(r)
}

/// Hermitian eigendecomposition with relative truncation.
///
/// Keeps eigenvalues above `threshold * λ_max` and returns them nonincreasing
/// together with the matching eigenvectors as rows (r×M, rows orthonormal).
pub fn eigen_truncate(r: &CMatrix, threshold: f64) -> Result<(CMatrix, Vec<f64>)> {
    if threshold <= 0.0 {
        return Err(Error::Domain("truncation threshold must be positive".into()));
    }
    let m = r.nrows();
    let eig = r.clone().symmetric_eigen();

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let lambda_max = eig.eigenvalues[order[0]];
    let lambda_min = eig.eigenvalues[order[m - 1]];
    if lambda_min < -1e-10 {
        return Err(Error::Domain(format!(
            "matrix is not positive semidefinite: smallest eigenvalue {lambda_min:e}"
        )));
    }

    let cutoff = threshold * lambda_max;
    let kept: Vec<usize> = order.iter().copied().filter(|&i| eig.eigenvalues[i] > cutoff).collect();
    if kept.is_empty() {
        return Err(Error::DegenerateCluster);
    }

    let eigvals: Vec<f64> = kept.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigvecs = CMatrix::zeros(kept.len(), m);
    for (row, &i) in kept.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        for c in 0..m {
            eigvecs[(row, c)] = v[c].conj();
        }
    }
    Ok((eigvecs, eigvals))
}

/// Count of eigenvalues above `threshold * λ_max`, without truncating.
///
/// Convenience wrapper used to study how the effective rank grows with the
/// angular spread.
pub fn effective_rank(r: &CMatrix, threshold: f64) -> usize {
    let eig = r.clone().symmetric_eigen();
    let lambda_max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    eig.eigenvalues.iter().filter(|&&l| l > threshold * lambda_max).count()
}
