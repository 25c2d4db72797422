//! Stochastic localization: tilt process simulation and posterior moments.
//!
//! The tilted reweighting of a measure μ at (t, θ) has density proportional
//! to `exp(⟨θ, x⟩ − t|x|²/2) ρ(x)`. Two equivalent drivers produce paths of
//! the tilt vector: the exact representation `θ_t = tX + B_t` with X ~ μ,
//! and the Euler–Maruyama discretization of `dθ_t = a(t, θ_t) dt + dB_t`.
//! Posterior moments along a path come from one of three backends: the
//! self-normalized importance-sampling reweighting of a fixed prior pool
//! (the workhorse being validated), per-coordinate closed forms/quadrature
//! for product measures, and the closed-form oracle where one exists.

mod drive;
mod ensemble;
mod moments;

pub use drive::{drive_sde, drive_sde_with, drive_tilt_exact, drive_tilt_exact_with};
pub use ensemble::{
    covariance_deviation, drift_formula, eigen_drift_check, ensemble_stats, f_means,
    martingale_checks, moment_bound_check, opnorm_tail, simulate_ensemble, write_paths_csv,
    DriftCheckReport, EigenWeight, Ensemble, EnsembleSpec, EnsembleStats, IdentityWeight,
    MartingaleReport, MomentBoundReport, OpNormTail, TimeStat,
};
pub use moments::{
    posterior_moments, third_moment, third_moment_for_state, third_moment_with_se, MomentBackend,
    MomentEngine,
};

use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::Result;

/// Tuning knobs for posterior-moment evaluation.
#[derive(Debug, Clone, Copy)]
pub struct LocalizationConfig {
    /// Minimum effective sample size before a tilt is declared degenerate.
    pub ess_floor: f64,
    /// Eigenvalue gap below which divided differences switch to f''.
    pub gap_floor: f64,
}

impl Default for LocalizationConfig {
    fn default() -> Self {
        Self {
            ess_floor: 50.0,
            gap_floor: 1e-4,
        }
    }
}

/// A point of the localization process with its posterior moments.
#[derive(Debug, Clone)]
pub struct TiltState {
    pub t: f64,
    pub theta: DVector<f64>,
    /// Posterior mean a(t, θ).
    pub barycenter: DVector<f64>,
    /// Posterior covariance A(t, θ).
    pub covariance: DMatrix<f64>,
    /// Effective sample size of the reweighting; pool count for exact backends.
    pub ess: f64,
}

/// Which driver produced a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    TiltExact,
    EulerMaruyama,
}

/// One simulated trajectory of the localization process.
#[derive(Debug, Clone)]
pub struct LocalizationPath {
    pub times: Vec<f64>,
    pub states: Vec<TiltState>,
    /// Ascending eigenvalues of each state's covariance.
    pub eigenvalues: Vec<Vec<f64>>,
    pub driver: Driver,
    pub seed: u64,
    pub path_index: u64,
}

impl LocalizationPath {
    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, |s| s.theta.len())
    }
}

/// Symmetric eigen-decomposition with deterministic ordering: ascending
/// eigenvalues, eigenvector sign fixed by the first component exceeding
/// 1e-12 in magnitude being positive.
pub fn sym_eigen_sorted(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        let mut col = eig.eigenvectors.column(src).clone_owned();
        if let Some(lead) = col.iter().find(|v| v.abs() > 1e-12) {
            if *lead < 0.0 {
                col.neg_mut();
            }
        }
        vectors.set_column(dst, &col);
    }
    (values, vectors)
}

/// Sorted covariance eigenvalues; errors on entries below −1e-10, clamps
/// smaller negative rounding noise to zero.
pub fn covariance_eigenvalues(cov: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (vals, _) = sym_eigen_sorted(cov);
    if let Some(v) = vals.iter().find(|&&v| v < -1e-10) {
        return Err(Error::InvalidArgument(format!(
            "covariance has negative eigenvalue {v}"
        )));
    }
    Ok(vals.into_iter().map(|v| v.max(0.0)).collect())
}

/// Fully symmetric 3-tensor of weighted central third moments, stored in
/// the eigenbasis of the state covariance.
#[derive(Debug, Clone)]
pub struct ThirdMomentTensor {
    pub dim: usize,
    pub t: f64,
    /// Packed entries for i ≤ j ≤ k.
    packed: Vec<f64>,
}

impl ThirdMomentTensor {
    pub(crate) fn from_packed(dim: usize, t: f64, packed: Vec<f64>) -> Self {
        debug_assert_eq!(packed.len(), Self::packed_len(dim));
        Self { dim, t, packed }
    }

    pub fn packed_len(dim: usize) -> usize {
        dim * (dim + 1) * (dim + 2) / 6
    }

    pub(crate) fn packed_index(dim: usize, i: usize, j: usize, k: usize) -> usize {
        // Sort so a <= b <= c, then rank within the lexicographic simplex
        // enumeration used by the accumulation loop.
        let mut idx = [i, j, k];
        idx.sort_unstable();
        let [a, b, c] = idx;
        debug_assert!(c < dim);
        let mut pos = 0;
        for m in 0..a {
            let r = dim - m;
            pos += r * (r + 1) / 2;
        }
        let r = dim - a;
        let row = b - a;
        pos += row * r - row * row.saturating_sub(1) / 2;
        pos + (c - b)
    }

    /// Entry u_{ijk}; symmetry is exact because one accumulation is shared
    /// across index permutations.
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.packed[Self::packed_index(self.dim, i, j, k)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_index_is_a_bijection() {
        for dim in 1..=6 {
            let len = ThirdMomentTensor::packed_len(dim);
            let mut seen = vec![false; len];
            for i in 0..dim {
                for j in i..dim {
                    for k in j..dim {
                        let p = ThirdMomentTensor::packed_index(dim, i, j, k);
                        assert!(p < len, "index out of range");
                        assert!(!seen[p], "collision at ({i},{j},{k})");
                        seen[p] = true;
                    }
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn packed_index_is_permutation_invariant() {
        let dim = 4;
        for &(i, j, k) in &[(0, 1, 2), (2, 1, 0), (1, 3, 1), (3, 1, 1)] {
            let base = ThirdMomentTensor::packed_index(dim, i, j, k);
            assert_eq!(base, ThirdMomentTensor::packed_index(dim, k, j, i));
            assert_eq!(base, ThirdMomentTensor::packed_index(dim, j, i, k));
        }
    }

    #[test]
    fn eigen_sort_is_ascending_with_sign_convention() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let (vals, vecs) = sym_eigen_sorted(&m);
        assert!(vals[0] < vals[1]);
        for c in 0..2 {
            let col = vecs.column(c);
            let lead = col.iter().find(|v| v.abs() > 1e-12).unwrap();
            assert!(*lead > 0.0);
        }
        // Reconstruction.
        let d = DMatrix::from_diagonal(&DVector::from_vec(vals.clone()));
        let rec = &vecs * d * vecs.transpose();
        assert!((rec - m).norm() < 1e-12);
    }
}
