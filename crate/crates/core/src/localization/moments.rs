//! Posterior moments of tilted measures.
//!
//! The pool backend reweights a fixed prior pool with self-normalized
//! importance weights `w_i ∝ exp(⟨θ, x_i⟩ − t|x_i|²/2)`, stabilized by
//! log-sum-exp. Weight collapse is detected through the effective sample
//! size `(Σw)²/Σw²` and aborts loudly instead of degrading silently.

use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::measures::{Measure, SamplePool};
use crate::Result;

use super::{LocalizationConfig, ThirdMomentTensor, TiltState};

/// Where posterior moments come from.
#[derive(Clone, Copy)]
pub enum MomentBackend<'a> {
    /// Self-normalized importance sampling over a fixed prior pool.
    Pool(&'a SamplePool),
    /// Per-coordinate closed forms/quadrature; exact for product measures.
    Product(&'a dyn Measure),
    /// Closed-form oracle of the measure (errors if absent).
    Oracle(&'a dyn Measure),
}

/// Reusable scratch for repeated moment evaluations along a path.
pub struct MomentEngine<'a> {
    backend: MomentBackend<'a>,
    config: LocalizationConfig,
    log_weights: Vec<f64>,
}

impl<'a> MomentEngine<'a> {
    pub fn new(backend: MomentBackend<'a>, config: LocalizationConfig) -> Self {
        let scratch = match backend {
            MomentBackend::Pool(pool) => vec![0.0; pool.count],
            _ => Vec::new(),
        };
        Self {
            backend,
            config,
            log_weights: scratch,
        }
    }

    pub fn dim(&self) -> usize {
        match self.backend {
            MomentBackend::Pool(pool) => pool.dim,
            MomentBackend::Product(m) | MomentBackend::Oracle(m) => m.dim(),
        }
    }

    /// Normalized weights and ESS for the current (t, θ); pool backend only.
    fn pool_weights(&mut self, pool: &SamplePool, t: f64, theta: &[f64]) -> Result<(f64, f64)> {
        let dim = pool.dim;
        let mut max_lw = f64::NEG_INFINITY;
        for i in 0..pool.count {
            let x = &pool.data[i * dim..(i + 1) * dim];
            let dot: f64 = x.iter().zip(theta).map(|(a, b)| a * b).sum();
            let lw = dot - t * pool.half_norms[i];
            self.log_weights[i] = lw;
            if lw > max_lw {
                max_lw = lw;
            }
        }
        if !max_lw.is_finite() {
            return Err(Error::DegenerateTilt {
                ess: 0.0,
                floor: self.config.ess_floor,
            });
        }
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for lw in self.log_weights.iter_mut() {
            let w = (*lw - max_lw).exp();
            *lw = w;
            sum += w;
            sum_sq += w * w;
        }
        let ess = sum * sum / sum_sq;
        if ess < self.config.ess_floor {
            return Err(Error::DegenerateTilt {
                ess,
                floor: self.config.ess_floor,
            });
        }
        Ok((sum, ess))
    }

    /// Full posterior moments at (t, θ).
    pub fn state(&mut self, t: f64, theta: &DVector<f64>) -> Result<TiltState> {
        match self.backend {
            MomentBackend::Pool(pool) => {
                let dim = pool.dim;
                let (sum, ess) = self.pool_weights(pool, t, theta.as_slice())?;
                let mut mean = vec![0.0; dim];
                for i in 0..pool.count {
                    let w = self.log_weights[i];
                    let x = &pool.data[i * dim..(i + 1) * dim];
                    for (m, &v) in mean.iter_mut().zip(x) {
                        *m += w * v;
                    }
                }
                for m in mean.iter_mut() {
                    *m /= sum;
                }
                let mut cov = DMatrix::zeros(dim, dim);
                {
                    let c = cov.as_mut_slice();
                    let mut d = vec![0.0; dim];
                    for i in 0..pool.count {
                        let w = self.log_weights[i];
                        let x = &pool.data[i * dim..(i + 1) * dim];
                        for k in 0..dim {
                            d[k] = x[k] - mean[k];
                        }
                        for a in 0..dim {
                            let wda = w * d[a];
                            for b in a..dim {
                                c[b * dim + a] += wda * d[b];
                            }
                        }
                    }
                }
                for a in 0..dim {
                    for b in a..dim {
                        let v = cov[(a, b)] / sum;
                        cov[(a, b)] = v;
                        cov[(b, a)] = v;
                    }
                }
                Ok(TiltState {
                    t,
                    theta: theta.clone(),
                    barycenter: DVector::from_vec(mean),
                    covariance: cov,
                    ess,
                })
            }
            MomentBackend::Product(model) => {
                let law = model.product_law().ok_or_else(|| {
                    Error::InvalidArgument("product backend needs a product measure".into())
                })?;
                let dim = model.dim();
                let mut mean = DVector::zeros(dim);
                let mut cov = DMatrix::zeros(dim, dim);
                for k in 0..dim {
                    let (m, v) = law.tilted_mean_var(t, theta[k]);
                    mean[k] = m;
                    cov[(k, k)] = v;
                }
                Ok(TiltState {
                    t,
                    theta: theta.clone(),
                    barycenter: mean,
                    covariance: cov,
                    ess: f64::INFINITY,
                })
            }
            MomentBackend::Oracle(model) => {
                let oracle = model
                    .oracle()
                    .ok_or_else(|| Error::InvalidArgument("measure has no oracle".into()))?;
                let mean = oracle.posterior_mean.as_ref().ok_or_else(|| {
                    Error::InvalidArgument("oracle lacks posterior mean".into())
                })?(t, theta.as_slice());
                let cov = oracle.posterior_cov.as_ref().ok_or_else(|| {
                    Error::InvalidArgument("oracle lacks posterior covariance".into())
                })?(t, theta.as_slice());
                Ok(TiltState {
                    t,
                    theta: theta.clone(),
                    barycenter: mean,
                    covariance: cov,
                    ess: f64::INFINITY,
                })
            }
        }
    }

    /// Posterior mean only; the cheap path for SDE drift evaluation.
    pub fn mean_into(&mut self, t: f64, theta: &DVector<f64>, out: &mut DVector<f64>) -> Result<()> {
        match self.backend {
            MomentBackend::Pool(pool) => {
                let dim = pool.dim;
                let (sum, _) = self.pool_weights(pool, t, theta.as_slice())?;
                out.fill(0.0);
                for i in 0..pool.count {
                    let w = self.log_weights[i];
                    let x = &pool.data[i * dim..(i + 1) * dim];
                    for (m, &v) in out.iter_mut().zip(x) {
                        *m += w * v;
                    }
                }
                *out /= sum;
                Ok(())
            }
            MomentBackend::Product(model) => {
                let law = model.product_law().ok_or_else(|| {
                    Error::InvalidArgument("product backend needs a product measure".into())
                })?;
                for k in 0..model.dim() {
                    out[k] = law.tilted_mean_var(t, theta[k]).0;
                }
                Ok(())
            }
            MomentBackend::Oracle(model) => {
                let oracle = model
                    .oracle()
                    .ok_or_else(|| Error::InvalidArgument("measure has no oracle".into()))?;
                let mean = oracle.posterior_mean.as_ref().ok_or_else(|| {
                    Error::InvalidArgument("oracle lacks posterior mean".into())
                })?(t, theta.as_slice());
                out.copy_from(&mean);
                Ok(())
            }
        }
    }
}

/// Posterior moments of the tilted measure over a prior pool.
pub fn posterior_moments(
    pool: &SamplePool,
    t: f64,
    theta: &DVector<f64>,
    config: &LocalizationConfig,
) -> Result<TiltState> {
    if pool.count == 0 {
        return Err(Error::EmptyPool);
    }
    MomentEngine::new(MomentBackend::Pool(pool), *config).state(t, theta)
}

/// Weighted central third moments in the eigenbasis of the state
/// covariance. Guarded to dim ≤ 6; a single accumulation is shared across
/// index permutations so the tensor is symmetric by construction.
pub fn third_moment(
    pool: &SamplePool,
    t: f64,
    theta: &DVector<f64>,
    config: &LocalizationConfig,
) -> Result<ThirdMomentTensor> {
    let state = posterior_moments(pool, t, theta, config)?;
    third_moment_for_state(pool, &state, config)
}

/// Same as [`third_moment`] but reusing an already computed state.
pub fn third_moment_for_state(
    pool: &SamplePool,
    state: &TiltState,
    config: &LocalizationConfig,
) -> Result<ThirdMomentTensor> {
    accumulate_third(pool, state, config).map(|(tensor, _)| tensor)
}

/// Third-moment tensor together with per-entry delta-method standard
/// errors of the self-normalized estimates.
pub fn third_moment_with_se(
    pool: &SamplePool,
    state: &TiltState,
    config: &LocalizationConfig,
) -> Result<(ThirdMomentTensor, ThirdMomentTensor)> {
    accumulate_third(pool, state, config)
}

fn accumulate_third(
    pool: &SamplePool,
    state: &TiltState,
    config: &LocalizationConfig,
) -> Result<(ThirdMomentTensor, ThirdMomentTensor)> {
    let dim = pool.dim;
    if dim > 6 {
        return Err(Error::DimensionTooLarge { dim, max: 6 });
    }
    let mut engine = MomentEngine::new(MomentBackend::Pool(pool), *config);
    let (sum, _) = engine.pool_weights(pool, state.t, state.theta.as_slice())?;
    let (_, basis) = super::sym_eigen_sorted(&state.covariance);
    let mean = &state.barycenter;

    let len = ThirdMomentTensor::packed_len(dim);
    // Ratio-estimator accumulators: Σw p, Σw² p, Σw² p², and Σw².
    let mut s1 = vec![0.0; len];
    let mut s2 = vec![0.0; len];
    let mut s3 = vec![0.0; len];
    let mut w2_total = 0.0;
    let mut y = vec![0.0; dim];
    for i in 0..pool.count {
        let w = engine.log_weights[i];
        let x = &pool.data[i * dim..(i + 1) * dim];
        for (a, yv) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for b in 0..dim {
                acc += basis[(b, a)] * (x[b] - mean[b]);
            }
            *yv = acc;
        }
        w2_total += w * w;
        let mut pos = 0;
        for a in 0..dim {
            for b in a..dim {
                let yab = y[a] * y[b];
                for c in b..dim {
                    let p = yab * y[c];
                    let wp = w * p;
                    s1[pos] += wp;
                    s2[pos] += w * wp;
                    s3[pos] += w * wp * p;
                    pos += 1;
                }
            }
        }
    }
    let mut packed = vec![0.0; len];
    let mut se = vec![0.0; len];
    for pos in 0..len {
        let u = s1[pos] / sum;
        packed[pos] = u;
        // Var(Σw̃ (p − u)) ≈ Σw̃²(p − u)² for self-normalized weights.
        let var = (s3[pos] - 2.0 * u * s2[pos] + u * u * w2_total) / (sum * sum);
        se[pos] = var.max(0.0).sqrt();
    }
    Ok((
        ThirdMomentTensor::from_packed(dim, state.t, packed),
        ThirdMomentTensor::from_packed(dim, state.t, se),
    ))
}
