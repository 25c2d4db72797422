//! Ensemble simulation and the dynamical identity checks.
//!
//! Paths are embarrassingly parallel: each owns the RNG stream derived from
//! (base seed, path index) and writes into its own slot. Aggregation is a
//! single-threaded fixed-order pass with compensated summation, so ensemble
//! statistics are bit-identical regardless of thread count. Paths whose
//! tilt weights collapse below the ESS floor are excluded and counted; the
//! count is reported, never swallowed.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::Error;
use crate::measures::Measure;
use crate::stats::{mean_se, wilson_interval, CompensatedSum};
use crate::Result;

use super::moments::{third_moment_for_state, MomentBackend};
use super::{
    drive::drive_tilt_exact_with, LocalizationConfig, LocalizationPath, ThirdMomentTensor,
};

/// Eigenvalue weight function f with two derivatives, as used by the
/// drift and growth checks. Implemented by assistant functions and by
/// [`IdentityWeight`].
pub trait EigenWeight: Sync {
    fn f(&self, r: f64) -> f64;
    fn df(&self, r: f64) -> f64;
    fn d2f(&self, r: f64) -> f64;
}

/// f(r) = r; turns the weighted functional into Tr A_t.
pub struct IdentityWeight;

impl EigenWeight for IdentityWeight {
    fn f(&self, r: f64) -> f64 {
        r
    }
    fn df(&self, _r: f64) -> f64 {
        1.0
    }
    fn d2f(&self, _r: f64) -> f64 {
        0.0
    }
}

/// Specification of a tilt-exact path ensemble.
pub struct EnsembleSpec<'a> {
    pub model: &'a dyn Measure,
    pub backend: MomentBackend<'a>,
    pub times: &'a [f64],
    pub n_paths: usize,
    pub base_seed: u64,
    pub config: LocalizationConfig,
}

/// Simulated paths plus the count of excluded degenerate paths.
pub struct Ensemble {
    pub paths: Vec<LocalizationPath>,
    pub degenerate: usize,
}

/// Drive `n_paths` exact-representation paths in parallel.
///
/// Paths aborting with a degenerate tilt are excluded and counted; any
/// other failure propagates.
pub fn simulate_ensemble(spec: &EnsembleSpec<'_>) -> Result<Ensemble> {
    let results: Vec<Result<LocalizationPath>> = (0..spec.n_paths)
        .into_par_iter()
        .map(|i| {
            drive_tilt_exact_with(
                spec.model,
                spec.backend,
                spec.times,
                spec.base_seed,
                i as u64,
                &spec.config,
            )
        })
        .collect();
    let mut paths = Vec::with_capacity(spec.n_paths);
    let mut degenerate = 0;
    for r in results {
        match r {
            Ok(p) => paths.push(p),
            Err(Error::DegenerateTilt { .. }) => degenerate += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(Ensemble { paths, degenerate })
}

/// Mean and standard error of one statistic at one grid time.
#[derive(Debug, Clone, Copy)]
pub struct TimeStat {
    pub mean: f64,
    pub se: f64,
}

/// Plain ensemble averages with path-count standard errors.
#[derive(Debug)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub paths: usize,
    /// E |a_t|² per time.
    pub a_norm_sq: Vec<TimeStat>,
    /// E Tr A_t per time.
    pub tr_a: Vec<TimeStat>,
    /// E Tr A_t² per time.
    pub tr_a_sq: Vec<TimeStat>,
    /// Histogram of covariance eigenvalues per time over [0, hist_max).
    pub eig_hist: Vec<Vec<usize>>,
    pub hist_max: f64,
}

const HIST_BINS: usize = 60;

fn common_grid(paths: &[LocalizationPath]) -> Result<&[f64]> {
    let first = paths.first().ok_or(Error::EmptyEnsemble)?;
    for p in paths {
        if p.times != first.times {
            return Err(Error::GridMismatch);
        }
    }
    Ok(&first.times)
}

fn stat_over_paths(paths: &[LocalizationPath], idx: usize, f: impl Fn(&LocalizationPath) -> f64) -> TimeStat {
    let _ = idx;
    let values: Vec<f64> = paths.iter().map(f).collect();
    let (mean, se) = mean_se(&values);
    TimeStat { mean, se }
}

/// Fixed-order ensemble averages of |a_t|², Tr A_t and Tr A_t².
pub fn ensemble_stats(paths: &[LocalizationPath]) -> Result<EnsembleStats> {
    let times = common_grid(paths)?.to_vec();
    let hist_max = 3.0;
    let mut a_norm_sq = Vec::with_capacity(times.len());
    let mut tr_a = Vec::with_capacity(times.len());
    let mut tr_a_sq = Vec::with_capacity(times.len());
    let mut eig_hist = Vec::with_capacity(times.len());
    for i in 0..times.len() {
        a_norm_sq.push(stat_over_paths(paths, i, |p| {
            p.states[i].barycenter.norm_squared()
        }));
        tr_a.push(stat_over_paths(paths, i, |p| {
            p.eigenvalues[i].iter().sum::<f64>()
        }));
        tr_a_sq.push(stat_over_paths(paths, i, |p| {
            p.eigenvalues[i].iter().map(|l| l * l).sum::<f64>()
        }));
        let mut hist = vec![0usize; HIST_BINS + 1];
        for p in paths {
            for &l in &p.eigenvalues[i] {
                let bin = ((l / hist_max) * HIST_BINS as f64).floor();
                let bin = if bin < 0.0 {
                    0
                } else {
                    (bin as usize).min(HIST_BINS)
                };
                hist[bin] += 1;
            }
        }
        eig_hist.push(hist);
    }
    Ok(EnsembleStats {
        times,
        paths: paths.len(),
        a_norm_sq,
        tr_a,
        tr_a_sq,
        eig_hist,
        hist_max,
    })
}

/// E Σᵢ f(λᵢ;t) per time, with standard errors.
pub fn f_means(paths: &[LocalizationPath], f: &dyn EigenWeight) -> Result<Vec<TimeStat>> {
    let times = common_grid(paths)?;
    Ok((0..times.len())
        .map(|i| {
            stat_over_paths(paths, i, |p| {
                p.eigenvalues[i].iter().map(|&l| f.f(l.max(0.0))).sum()
            })
        })
        .collect())
}

/// Martingale-structure checks of the ensemble.
#[derive(Debug)]
pub struct MartingaleReport {
    pub times: Vec<f64>,
    /// E[Tr A_t + |a_t|²] per time, to be compared with n.
    pub conservation: Vec<TimeStat>,
    /// Per interval [t_i, t_{i+1}]: entrywise max of
    /// |E[(A_{t+δ}−A_t)/δ + A_t²]| in units of its standard error.
    pub drift_max_dev: Vec<f64>,
}

/// Verifies that E∫|x|² dp_t is conserved and that dE[A_t]/dt = −E[A_t²].
pub fn martingale_checks(paths: &[LocalizationPath]) -> Result<MartingaleReport> {
    let times = common_grid(paths)?.to_vec();
    let dim = paths[0].dim();
    let conservation = (0..times.len())
        .map(|i| {
            stat_over_paths(paths, i, |p| {
                p.eigenvalues[i].iter().sum::<f64>() + p.states[i].barycenter.norm_squared()
            })
        })
        .collect();

    let mut drift_max_dev = Vec::new();
    for i in 0..times.len().saturating_sub(1) {
        let dt = times[i + 1] - times[i];
        let mut worst: f64 = 0.0;
        for a in 0..dim {
            for b in a..dim {
                let vals: Vec<f64> = paths
                    .iter()
                    .map(|p| {
                        let fd =
                            (p.states[i + 1].covariance[(a, b)] - p.states[i].covariance[(a, b)]) / dt;
                        let sq = (&p.states[i].covariance * &p.states[i].covariance)[(a, b)];
                        fd + sq
                    })
                    .collect();
                let (mean, se) = mean_se(&vals);
                if se > 0.0 {
                    worst = worst.max(mean.abs() / se);
                }
            }
        }
        drift_max_dev.push(worst);
    }
    Ok(MartingaleReport {
        times,
        conservation,
        drift_max_dev,
    })
}

/// Divided difference of f' with the continuity convention: f''(λᵢ) when
/// the eigenvalues are closer than `gap_floor` (including i = j).
fn divided_difference(f: &dyn EigenWeight, li: f64, lj: f64, gap_floor: f64) -> f64 {
    if (li - lj).abs() < gap_floor {
        f.d2f(li)
    } else {
        (f.df(li) - f.df(lj)) / (li - lj)
    }
}

/// Drift of F_t = Σ f(λᵢ;t) predicted from one state's eigenvalues and
/// third-moment tensor: −Σ λᵢ² f'(λᵢ) + ½ Σᵢⱼₖ u²ᵢⱼₖ Δf'(λᵢ, λⱼ).
pub fn drift_formula(
    eigenvalues: &[f64],
    tensor: &ThirdMomentTensor,
    f: &dyn EigenWeight,
    gap_floor: f64,
) -> f64 {
    let n = eigenvalues.len();
    let mut drift = 0.0;
    for (_, &l) in eigenvalues.iter().enumerate() {
        drift -= l * l * f.df(l);
    }
    let mut m_t = 0.0;
    for i in 0..n {
        for j in 0..n {
            let dq = divided_difference(f, eigenvalues[i], eigenvalues[j], gap_floor);
            for k in 0..n {
                let u = tensor.get(i, j, k);
                m_t += u * u * dq;
            }
        }
    }
    drift + 0.5 * m_t
}

/// Per-time comparison of the finite-difference drift of E F_t against the
/// formula from eigenvalues and third moments.
#[derive(Debug)]
pub struct DriftCheckReport {
    /// Interior grid times the comparison ran at.
    pub times: Vec<f64>,
    /// Centered finite difference of E F_t.
    pub fd: Vec<TimeStat>,
    /// Ensemble mean of the per-state drift formula.
    pub formula: Vec<TimeStat>,
    /// Paths per time whose smallest eigenvalue gap fell below the floor
    /// (the continuity convention was applied there).
    pub near_degenerate: Vec<usize>,
}

/// Compares E[F_{t+δ} − F_{t−δ}]/2δ with the drift formula at interior
/// grid times. Tensors are recomputed from the pool backing the paths.
pub fn eigen_drift_check(
    pool: &crate::measures::SamplePool,
    paths: &[LocalizationPath],
    f: &dyn EigenWeight,
    config: &LocalizationConfig,
) -> Result<DriftCheckReport> {
    let times = common_grid(paths)?.to_vec();
    let dim = paths[0].dim();
    if dim > 4 {
        return Err(Error::DimensionTooLarge { dim, max: 4 });
    }
    if times.len() < 3 {
        return Err(Error::InvalidArgument(
            "drift check needs at least three grid times".into(),
        ));
    }

    // F values per (path, time).
    let f_vals: Vec<Vec<f64>> = paths
        .iter()
        .map(|p| {
            p.eigenvalues
                .iter()
                .map(|eigs| eigs.iter().map(|&l| f.f(l.max(0.0))).sum())
                .collect()
        })
        .collect();

    let mut out_times = Vec::new();
    let mut fd_stats = Vec::new();
    let mut formula_stats = Vec::new();
    let mut near_degenerate = Vec::new();
    for i in 1..times.len() - 1 {
        let h = times[i + 1] - times[i - 1];
        let fd_vals: Vec<f64> = f_vals.iter().map(|fv| (fv[i + 1] - fv[i - 1]) / h).collect();
        let formula_vals: Vec<f64> = paths
            .par_iter()
            .map(|p| {
                let tensor = third_moment_for_state(pool, &p.states[i], config)?;
                Ok(drift_formula(&p.eigenvalues[i], &tensor, f, config.gap_floor))
            })
            .collect::<Result<Vec<f64>>>()?;
        let degenerate = paths
            .iter()
            .filter(|p| {
                p.eigenvalues[i]
                    .windows(2)
                    .any(|w| (w[1] - w[0]).abs() < config.gap_floor)
            })
            .count();
        let (fm, fse) = mean_se(&fd_vals);
        let (gm, gse) = mean_se(&formula_vals);
        out_times.push(times[i]);
        fd_stats.push(TimeStat { mean: fm, se: fse });
        formula_stats.push(TimeStat { mean: gm, se: gse });
        near_degenerate.push(degenerate);
    }
    Ok(DriftCheckReport {
        times: out_times,
        fd: fd_stats,
        formula: formula_stats,
        near_degenerate,
    })
}

/// Outcome of the restricted third-moment bound check at one (path, time,
/// direction k): Σ_{λᵢ≤r} Σ_{λⱼ≤r} u²ᵢⱼₖ ≤ 4 t^{−1/2} r^{3/2} λₖ.
#[derive(Debug)]
pub struct MomentBoundReport {
    pub r: f64,
    pub checks: usize,
    pub violations: usize,
    /// Largest (lhs − bound)/bound observed, negative when all pass.
    pub worst_excess: f64,
}

/// Checks the restricted moment bound on every path/time with t > 0,
/// tolerating 3 SE of Monte-Carlo noise on the left side.
pub fn moment_bound_check(
    pool: &crate::measures::SamplePool,
    paths: &[LocalizationPath],
    r: f64,
    config: &LocalizationConfig,
) -> Result<MomentBoundReport> {
    let times = common_grid(paths)?;
    let dim = paths[0].dim();
    if dim > 4 {
        return Err(Error::DimensionTooLarge { dim, max: 4 });
    }
    let per_path: Vec<(usize, usize, f64)> = paths
        .par_iter()
        .map(|p| {
            let mut checks = 0usize;
            let mut violations = 0usize;
            let mut worst = f64::NEG_INFINITY;
            for (i, &t) in times.iter().enumerate() {
                if t <= 0.0 {
                    continue;
                }
                let (tensor, se) = super::moments::third_moment_with_se(pool, &p.states[i], config)?;
                let eigs = &p.eigenvalues[i];
                for k in 0..dim {
                    let mut lhs = 0.0;
                    let mut var_lhs = 0.0;
                    for a in 0..dim {
                        if eigs[a] > r {
                            continue;
                        }
                        for b in 0..dim {
                            if eigs[b] > r {
                                continue;
                            }
                            let u = tensor.get(a, b, k);
                            let su = se.get(a, b, k);
                            lhs += u * u;
                            var_lhs += (2.0 * u * su).powi(2);
                        }
                    }
                    let bound = 4.0 * t.powf(-0.5) * r.powf(1.5) * eigs[k];
                    let slack = 3.0 * var_lhs.sqrt();
                    checks += 1;
                    if lhs > bound + slack {
                        violations += 1;
                    }
                    if bound > 0.0 {
                        worst = worst.max((lhs - bound) / bound);
                    }
                }
            }
            Ok((checks, violations, worst))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut checks = 0;
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for (c, v, w) in per_path {
        checks += c;
        violations += v;
        worst = worst.max(w);
    }
    Ok(MomentBoundReport {
        r,
        checks,
        violations,
        worst_excess: worst,
    })
}

/// Empirical operator-norm tail P(‖A_t‖ ≥ 2) with a Wilson interval and
/// the reference rate exp(−1/(C₂ t)). Diagnostic: C₂ is configurable, not
/// derived.
#[derive(Debug)]
pub struct OpNormTail {
    pub t: f64,
    pub frequency: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub reference: f64,
}

pub fn opnorm_tail(paths: &[LocalizationPath], c2: f64) -> Result<Vec<OpNormTail>> {
    let times = common_grid(paths)?;
    Ok(times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let hits = paths
                .iter()
                .filter(|p| *p.eigenvalues[i].last().unwrap() >= 2.0)
                .count();
            let (lo, hi) = wilson_interval(hits, paths.len(), 2.0);
            OpNormTail {
                t,
                frequency: hits as f64 / paths.len() as f64,
                wilson_low: lo,
                wilson_high: hi,
                reference: if t > 0.0 {
                    (-1.0 / (c2 * t)).exp()
                } else {
                    0.0
                },
            }
        })
        .collect())
}

/// CSV export: one row per (path, time) with columns
/// `time,path_id,a_norm_sq,tr_A,tr_A_sq,lambda_1..lambda_n`.
pub fn write_paths_csv(paths: &[LocalizationPath], w: &mut impl Write) -> Result<()> {
    let dim = paths.first().map_or(0, |p| p.dim());
    write!(w, "time,path_id,a_norm_sq,tr_A,tr_A_sq")?;
    for k in 1..=dim {
        write!(w, ",lambda_{k}")?;
    }
    writeln!(w)?;
    for p in paths {
        for (i, &t) in p.times.iter().enumerate() {
            let mut tr = CompensatedSum::new();
            let mut tr_sq = CompensatedSum::new();
            for &l in &p.eigenvalues[i] {
                tr.add(l);
                tr_sq.add(l * l);
            }
            write!(
                w,
                "{},{},{},{},{}",
                t,
                p.path_index,
                p.states[i].barycenter.norm_squared(),
                tr.value(),
                tr_sq.value()
            )?;
            for &l in &p.eigenvalues[i] {
                write!(w, ",{l}")?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

/// Entrywise deviation of the mean covariance from a target matrix, in
/// units of the entry standard errors. Used by exactness checks.
pub fn covariance_deviation(
    paths: &[LocalizationPath],
    idx: usize,
    target: &DMatrix<f64>,
) -> (f64, f64) {
    let dim = paths[0].dim();
    let mut max_dev = 0.0f64;
    let mut max_abs = 0.0f64;
    for a in 0..dim {
        for b in a..dim {
            let vals: Vec<f64> = paths.iter().map(|p| p.states[idx].covariance[(a, b)]).collect();
            let (mean, se) = mean_se(&vals);
            let diff = mean - target[(a, b)];
            max_abs = max_abs.max(diff.abs());
            if se > 0.0 {
                max_dev = max_dev.max(diff.abs() / se);
            }
        }
    }
    (max_dev, max_abs)
}
