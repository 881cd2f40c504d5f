//! Null-space transmit precoders and the deterministic constants they induce.
//!
//! Cluster `k` transmits through an M×M̃ matrix whose columns span the null
//! space of every other cluster's eigenvector rows, so the signal never
//! excites their subspaces and inter-cluster interference vanishes by
//! construction. Within a cluster, group `q` uses the q-th canonical basis
//! vector of the reduced M̃-dimensional space as its precoding vector.

use nalgebra::DVector;

use crate::geometry::CorrelationMatrix;
use crate::{CMatrix, CVector, Error, Result, C64};

/// Relative singular-value cutoff deciding the rank of the stacked matrix.
pub const NULL_SPACE_CUTOFF: f64 = 1e-10;

/// Null-space basis for one cluster.
#[derive(Debug, Clone)]
pub struct NullPrecoder {
    /// M×M̃ matrix with orthonormal columns.
    pub basis: CMatrix,
    /// Null-space dimension M̃ actually found.
    pub dim: usize,
    /// M − Σ_{i≠k} r_i, the dimension a full-row-rank stacking would give.
    pub expected_dim: usize,
}

impl NullPrecoder {
    /// True when the stacked eigenvector matrix was rank deficient and the
    /// null space came out larger than `expected_dim`.
    pub fn rank_deficient(&self) -> bool {
        self.dim > self.expected_dim
    }
}

/// Orthonormal basis of the null space of all other clusters' eigenvector rows.
///
/// `k` is 0-based here. The basis comes from a singular value decomposition
/// of the stacked matrix (zero-padded to square so the full right singular
/// basis is available); right singular vectors whose singular value is at
/// most `NULL_SPACE_CUTOFF · σ_max` span the null space. Columns keep the
/// decomposition's descending singular-value order, so the mapping from
/// group index to column is reproducible.
pub fn build_null_precoder(k: usize, all_eigvecs: &[CMatrix]) -> Result<NullPrecoder> {
    let m = all_eigvecs
        .first()
        .map(|u| u.ncols())
        .ok_or_else(|| Error::InvalidConfig("no clusters".into()))?;
    if k >= all_eigvecs.len() {
        return Err(Error::InvalidConfig(format!("cluster index {k} out of range")));
    }

    let others: Vec<&CMatrix> = all_eigvecs
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != k)
        .map(|(_, u)| u)
        .collect();
    let stacked_rows: usize = others.iter().map(|u| u.nrows()).sum();

    if stacked_rows == 0 {
        // Single cluster: nothing to null, transmit in the full space.
        return Ok(NullPrecoder { basis: CMatrix::identity(m, m), dim: m, expected_dim: m });
    }
    let expected_dim = m.saturating_sub(stacked_rows);

    // Pad with zero rows so the SVD exposes the full M×M right basis.
    let padded_rows = stacked_rows.max(m);
    let mut stacked = CMatrix::zeros(padded_rows, m);
    let mut row = 0;
    for u in &others {
        stacked.view_mut((row, 0), (u.nrows(), m)).copy_from(*u);
        row += u.nrows();
    }

    let svd = stacked.svd(false, true);
    let v_t = svd.v_t.expect("SVD with v_t requested");
    let sigma_max = svd.singular_values[0];
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > NULL_SPACE_CUTOFF * sigma_max)
        .count();
    let dim = m - rank;
    if dim == 0 {
        return Err(Error::NoNullSpace);
    }

    let mut basis = CMatrix::zeros(m, dim);
    for (col, i) in (rank..m).enumerate() {
        for r in 0..m {
            basis[(r, col)] = v_t[(i, r)].conj();
        }
    }
    Ok(NullPrecoder { basis, dim, expected_dim })
}

/// Canonical intra-cluster precoding vector for group `q` (0-based), unit norm.
pub fn group_vector(q: usize, m_tilde: usize) -> CVector {
    let mut w = DVector::from_element(m_tilde, C64::new(0.0, 0.0));
    w[q] = C64::new(1.0, 0.0);
    w
}

/// Schur-complement gain constant `a_q = 1 / [S⁻¹]_{q,q}` for group `q` (0-based).
///
/// `s` must be Hermitian positive definite.
pub fn effective_gain_constant(s: &CMatrix, q: usize) -> Result<f64> {
    let inv = s
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularMatrix("effective correlation is not positive definite".into()))?
        .inverse();
    let d = inv[(q, q)].re;
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::SingularMatrix(format!("[S^-1]_{{{q},{q}}} = {d} is not positive")));
    }
    Ok(1.0 / d)
}

/// Precoders, effective correlations and gain constants for every cluster.
#[derive(Debug, Clone)]
pub struct PrecoderSet {
    pub precoders: Vec<NullPrecoder>,
    /// Per cluster: S_k = P_kᴴ R_k P_k, M̃×M̃ Hermitian positive definite.
    pub effective_correlations: Vec<CMatrix>,
    /// Per cluster: a_{k,q} for q = 0..M̃-1.
    pub gain_constants: Vec<Vec<f64>>,
}

impl PrecoderSet {
    pub fn build(correlations: &[CorrelationMatrix]) -> Result<Self> {
        let eigvecs: Vec<CMatrix> = correlations.iter().map(|c| c.eigvecs.clone()).collect();
        let mut precoders = Vec::with_capacity(correlations.len());
        let mut effective_correlations = Vec::with_capacity(correlations.len());
        let mut gain_constants = Vec::with_capacity(correlations.len());
        for (k, corr) in correlations.iter().enumerate() {
            let p = build_null_precoder(k, &eigvecs)?;
            let s = p.basis.adjoint() * &corr.matrix * &p.basis;
            let a = (0..p.dim)
                .map(|q| effective_gain_constant(&s, q))
                .collect::<Result<Vec<f64>>>()?;
            precoders.push(p);
            effective_correlations.push(s);
            gain_constants.push(a);
        }
        Ok(Self { precoders, effective_correlations, gain_constants })
    }

    /// Largest Frobenius leakage ‖U_i P_k‖_F over all pairs i ≠ k.
    pub fn max_leakage(&self, correlations: &[CorrelationMatrix]) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, p) in self.precoders.iter().enumerate() {
            for (i, corr) in correlations.iter().enumerate() {
                if i != k {
                    worst = worst.max((&corr.eigvecs * &p.basis).norm());
                }
            }
        }
        worst
    }
}
