//! Path drivers for the tilt process.

use nalgebra::DVector;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Error;
use crate::measures::{Measure, SamplePool};
use crate::rng::stream_rng;
use crate::Result;

use super::moments::{MomentBackend, MomentEngine};
use super::{covariance_eigenvalues, Driver, LocalizationConfig, LocalizationPath};

fn standard_normal_vec(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    DVector::from_iterator(dim, (0..dim).map(|_| StandardNormal.sample(rng)))
}

fn validate_times(times: &[f64]) -> Result<()> {
    if times.is_empty() || times[0] != 0.0 {
        return Err(Error::InvalidArgument(
            "time grid must start at 0".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("time grid must increase".into()));
    }
    Ok(())
}

/// One exact-representation path: θ_t = tX + B_t with X ~ μ drawn fresh
/// and B a Brownian path on the grid, moments evaluated at every grid time.
pub fn drive_tilt_exact_with(
    model: &dyn Measure,
    backend: MomentBackend<'_>,
    times: &[f64],
    base_seed: u64,
    path_index: u64,
    config: &LocalizationConfig,
) -> Result<LocalizationPath> {
    validate_times(times)?;
    let dim = model.dim();
    let mut rng = stream_rng(base_seed, path_index);
    let mut x = vec![0.0; dim];
    model.sample(&mut rng, &mut x);
    let x = DVector::from_vec(x);

    let mut engine = MomentEngine::new(backend, *config);
    let mut brownian = DVector::zeros(dim);
    let mut states = Vec::with_capacity(times.len());
    let mut eigenvalues = Vec::with_capacity(times.len());
    let mut prev_t = 0.0;
    for (i, &t) in times.iter().enumerate() {
        if i > 0 {
            let dt = t - prev_t;
            brownian += standard_normal_vec(&mut rng, dim) * dt.sqrt();
        }
        prev_t = t;
        let theta = &x * t + &brownian;
        let state = engine.state(t, &theta)?;
        eigenvalues.push(covariance_eigenvalues(&state.covariance)?);
        states.push(state);
    }
    Ok(LocalizationPath {
        times: times.to_vec(),
        states,
        eigenvalues,
        driver: Driver::TiltExact,
        seed: base_seed,
        path_index,
    })
}

/// Exact driver with the pool reweighting backend.
pub fn drive_tilt_exact(
    model: &dyn Measure,
    pool: &SamplePool,
    times: &[f64],
    seed: u64,
    config: &LocalizationConfig,
) -> Result<LocalizationPath> {
    drive_tilt_exact_with(model, MomentBackend::Pool(pool), times, seed, 0, config)
}

/// One Euler–Maruyama path of dθ_t = a(t, θ_t) dt + dB_t, states recorded
/// at every step.
pub fn drive_sde_with(
    model: &dyn Measure,
    backend: MomentBackend<'_>,
    dt: f64,
    t_end: f64,
    base_seed: u64,
    path_index: u64,
    config: &LocalizationConfig,
) -> Result<LocalizationPath> {
    if !(dt > 0.0 && dt <= t_end) {
        return Err(Error::InvalidArgument(
            "need 0 < dt <= t_end for the Euler-Maruyama driver".into(),
        ));
    }
    let dim = model.dim();
    let steps = (t_end / dt).round() as usize;
    let mut rng = stream_rng(base_seed, path_index);
    let mut engine = MomentEngine::new(backend, *config);

    let mut theta = DVector::zeros(dim);
    let mut drift = DVector::zeros(dim);
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut eigenvalues = Vec::with_capacity(steps + 1);

    for step in 0..=steps {
        let t = if step == steps {
            t_end
        } else {
            step as f64 * dt
        };
        if theta.iter().any(|v: &f64| !v.is_finite()) {
            return Err(Error::Divergence { step });
        }
        let state = engine.state(t, &theta)?;
        eigenvalues.push(covariance_eigenvalues(&state.covariance)?);
        times.push(t);
        if step < steps {
            engine.mean_into(t, &theta, &mut drift)?;
            theta += &drift * dt + standard_normal_vec(&mut rng, dim) * dt.sqrt();
        }
        states.push(state);
    }
    Ok(LocalizationPath {
        times,
        states,
        eigenvalues,
        driver: Driver::EulerMaruyama,
        seed: base_seed,
        path_index,
    })
}

/// Euler–Maruyama driver with the pool reweighting backend.
pub fn drive_sde(
    model: &dyn Measure,
    pool: &SamplePool,
    dt: f64,
    t_end: f64,
    seed: u64,
    config: &LocalizationConfig,
) -> Result<LocalizationPath> {
    drive_sde_with(model, MomentBackend::Pool(pool), dt, t_end, seed, 0, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{draw_pool, make_gaussian, make_product_exponential};
    use approx::assert_relative_eq;

    #[test]
    fn identical_seed_gives_identical_path() {
        let g = make_gaussian(2).unwrap();
        let pool = draw_pool(g.as_ref(), 2000, 4).unwrap();
        let cfg = LocalizationConfig::default();
        let times = [0.0, 0.25, 0.5];
        let a = drive_tilt_exact(g.as_ref(), &pool, &times, 9, &cfg).unwrap();
        let b = drive_tilt_exact(g.as_ref(), &pool, &times, 9, &cfg).unwrap();
        for (sa, sb) in a.states.iter().zip(&b.states) {
            assert_eq!(sa.theta, sb.theta);
            assert_eq!(sa.barycenter, sb.barycenter);
        }
    }

    #[test]
    fn path_starts_at_prior_moments() {
        let g = make_gaussian(3).unwrap();
        let pool = draw_pool(g.as_ref(), 5000, 2).unwrap();
        let cfg = LocalizationConfig::default();
        let path = drive_tilt_exact(g.as_ref(), &pool, &[0.0, 0.1], 1, &cfg).unwrap();
        assert_eq!(path.states[0].theta, DVector::zeros(3));
        assert_relative_eq!(path.states[0].barycenter, pool.mean(), epsilon = 1e-12);
    }

    #[test]
    fn eigenvalue_trace_consistency() {
        let e = make_product_exponential(3).unwrap();
        let pool = draw_pool(e.as_ref(), 20_000, 6).unwrap();
        let cfg = LocalizationConfig::default();
        let path = drive_tilt_exact(e.as_ref(), &pool, &[0.0, 0.3, 0.8], 12, &cfg).unwrap();
        for (state, eigs) in path.states.iter().zip(&path.eigenvalues) {
            let tr: f64 = state.covariance.diagonal().iter().sum();
            let sum: f64 = eigs.iter().sum();
            assert_relative_eq!(tr, sum, max_relative = 1e-8);
            assert!(eigs.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn sde_single_step_stays_near_zero_drift() {
        let e = make_product_exponential(2).unwrap();
        let cfg = LocalizationConfig::default();
        // One step of size 1e-3: θ = a(0,0) dt + sqrt(dt) ξ and a(0,0) = 0
        // for an isotropic measure, so |θ| ~ sqrt(dt).
        let path = drive_sde_with(
            e.as_ref(),
            MomentBackend::Product(e.as_ref()),
            1e-3,
            1e-3,
            3,
            0,
            &cfg,
        )
        .unwrap();
        assert_eq!(path.times.len(), 2);
        let theta = &path.states[1].theta;
        assert!(theta.norm() < 6.0 * (1e-3f64).sqrt());
    }

    #[test]
    fn sde_rejects_bad_steps() {
        let g = make_gaussian(1).unwrap();
        let pool = draw_pool(g.as_ref(), 100, 1).unwrap();
        let cfg = LocalizationConfig::default();
        assert!(drive_sde(g.as_ref(), &pool, 0.0, 1.0, 1, &cfg).is_err());
        assert!(drive_sde(g.as_ref(), &pool, 2.0, 1.0, 1, &cfg).is_err());
    }

    #[test]
    fn gaussian_exact_driver_tracks_oracle_covariance() {
        let g = make_gaussian(4).unwrap();
        let pool = draw_pool(g.as_ref(), 30_000, 8).unwrap();
        let cfg = LocalizationConfig::default();
        let path = drive_tilt_exact(g.as_ref(), &pool, &[0.0, 0.5, 1.0], 3, &cfg).unwrap();
        for (i, &t) in path.times.iter().enumerate() {
            let expect = 1.0 / (1.0 + t);
            for k in 0..4 {
                let got = path.states[i].covariance[(k, k)];
                assert!(
                    (got - expect).abs() < 0.05,
                    "cov({k},{k}) at t={t}: {got} vs {expect}"
                );
            }
        }
    }
}
