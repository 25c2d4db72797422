//! Gaussian smoothing μ_s = μ ∗ γ_s and the heat-flow semigroup pair
//! (P_s, Q_s), with quadrature verification of the structural identities:
//! the smoothed variance identity, the Hessian window of log ρ_s, the
//! gradient contraction of Q_s, the Bochner/Γ₂ identities, the
//! s-derivative of ‖Q_s u‖², the tilt/semigroup correspondence, and the
//! uniform-convexity of marginals.
//!
//! Everything here is a ground-truth channel: errors are quadrature and
//! finite differences on dense 1D/2D grids, not sampling noise.

pub mod grid;

pub use grid::{Grid1, Grid2};

use rand_distr::{Distribution, StandardNormal};

use crate::error::Error;
use crate::measures::{CoordinateLaw, Measure};
use crate::quad;
use crate::rng::stream_rng;
use crate::stats::mean_se;
use crate::Result;

/// Nodes with ρ_s below this floor are masked out of integrals rather
/// than clamped into them.
pub const RHO_FLOOR: f64 = 1e-300;

/// Default node count of base tabulations.
pub const DEFAULT_RESOLUTION: usize = 4001;

/// A smooth test function with two analytic derivatives.
pub struct TestFn1 {
    pub f: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub d1: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub d2: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl TestFn1 {
    pub fn coordinate() -> Self {
        TestFn1 {
            f: Box::new(|x| x),
            d1: Box::new(|_| 1.0),
            d2: Box::new(|_| 0.0),
        }
    }

    pub fn coordinate_sq() -> Self {
        TestFn1 {
            f: Box::new(|x| x * x),
            d1: Box::new(|x| 2.0 * x),
            d2: Box::new(|_| 2.0),
        }
    }

    pub fn constant(v: f64) -> Self {
        TestFn1 {
            f: Box::new(move |_| v),
            d1: Box::new(|_| 0.0),
            d2: Box::new(|_| 0.0),
        }
    }

    /// Polynomial with the given coefficients (ascending powers).
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        let eval = move |c: &[f64], x: f64| {
            let mut acc = 0.0;
            for &ci in c.iter().rev() {
                acc = acc * x + ci;
            }
            acc
        };
        let d1c: Vec<f64> = coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| k as f64 * c)
            .collect();
        let d2c: Vec<f64> = d1c
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| k as f64 * c)
            .collect();
        let c0 = coeffs;
        let c1 = d1c;
        let c2 = d2c;
        TestFn1 {
            f: Box::new(move |x| eval(&c0, x)),
            d1: Box::new(move |x| eval(&c1, x)),
            d2: Box::new(move |x| eval(&c2, x)),
        }
    }

    /// Smooth compactly supported bump ψ(z) = e^{1 − 1/(1−z²)} on |z| < 1,
    /// rescaled to [center − halfwidth, center + halfwidth], multiplied by
    /// a polynomial. Guarantees subexponential decay for any base density.
    pub fn poly_bump(coeffs: Vec<f64>, center: f64, halfwidth: f64) -> Self {
        let p = TestFn1::polynomial(coeffs);
        let (pf, pd1, pd2) = (p.f, p.d1, p.d2);
        let bump = move |x: f64| -> (f64, f64, f64) {
            let z = (x - center) / halfwidth;
            if z.abs() >= 1.0 {
                return (0.0, 0.0, 0.0);
            }
            let q = 1.0 - z * z;
            let b = (1.0 - 1.0 / q).exp();
            // dψ/dz = ψ · (−2z/q²); d²ψ/dz² = ψ ((2z/q²)² − (2/q² + 8z²/q³)).
            let g1 = -2.0 * z / (q * q);
            let g2 = g1 * g1 - (2.0 / (q * q) + 8.0 * z * z / (q * q * q));
            (b, b * g1 / halfwidth, b * g2 / (halfwidth * halfwidth))
        };
        let b1 = std::sync::Arc::new(bump);
        let b2 = b1.clone();
        let b3 = b1.clone();
        let pf1 = std::sync::Arc::new(pf);
        let pf2 = pf1.clone();
        let pf3 = pf1.clone();
        let pd1a = std::sync::Arc::new(pd1);
        let pd1b = pd1a.clone();
        let pd2a = std::sync::Arc::new(pd2);
        TestFn1 {
            f: Box::new(move |x| pf1(x) * b1(x).0),
            d1: Box::new(move |x| {
                let (b, db, _) = b2(x);
                pd1a(x) * b + pf2(x) * db
            }),
            d2: Box::new(move |x| {
                let (b, db, ddb) = b3(x);
                pd2a(x) * b + 2.0 * pd1b(x) * db + pf3(x) * ddb
            }),
        }
    }
}

/// One-dimensional smoothed measure μ_s = μ ∗ γ_s on a padded grid.
#[derive(Debug)]
pub struct Smoothed1 {
    pub law: CoordinateLaw,
    pub s: f64,
    pub base_grid: Grid1,
    /// Normalized base density on `base_grid`.
    pub rho: Vec<f64>,
    pub grid: Grid1,
    /// Normalized smoothed density on `grid`.
    pub rho_s: Vec<f64>,
}

/// Two-dimensional smoothed product measure.
#[derive(Debug)]
pub struct Smoothed2 {
    pub law: CoordinateLaw,
    pub s: f64,
    pub base_grid: Grid2,
    pub rho: Vec<f64>,
    pub grid: Grid2,
    pub rho_s: Vec<f64>,
}

/// Smoothing result for dimension 1 or 2.
#[derive(Debug)]
pub enum SmoothedMeasure {
    One(Smoothed1),
    Two(Smoothed2),
}

fn gaussian_kernel(offset0: f64, dx: f64, len: usize, s: f64) -> Vec<f64> {
    let norm = 1.0 / (2.0 * std::f64::consts::PI * s).sqrt();
    (0..len)
        .map(|k| {
            let d = offset0 + k as f64 * dx;
            norm * (-0.5 * d * d / s).exp()
        })
        .collect()
}

/// Gaussian convolution of values tabulated on `src` (with its quadrature
/// weights) evaluated at the nodes of `dst`. Both grids must share the
/// lattice.
pub fn convolve(src: &Grid1, values: &[f64], dst: &Grid1, s: f64) -> Vec<f64> {
    debug_assert_eq!(values.len(), src.n);
    let shift = (dst.x0 - src.x0) / src.dx;
    debug_assert!(
        (shift - shift.round()).abs() < 1e-6,
        "grids must share the lattice"
    );
    let shift = shift.round() as isize;
    // Kernel over all possible node offsets dst_i - src_j.
    let k_lo = shift - (src.n as isize - 1);
    let k_hi = shift + (dst.n as isize - 1);
    let len = (k_hi - k_lo + 1) as usize;
    let kernel = gaussian_kernel(k_lo as f64 * src.dx, src.dx, len, s);
    let wq = src.quad_weights();
    // Ignore kernel entries beyond 10 sigma.
    let band = ((10.0 * s.sqrt()) / src.dx).ceil() as isize;
    let mut out = vec![0.0; dst.n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        let center = i as isize + shift;
        let j_lo = (center - band).max(0) as usize;
        let j_hi = ((center + band) as usize).min(src.n - 1);
        for j in j_lo..=j_hi {
            let k = (i as isize + shift - j as isize - k_lo) as usize;
            acc += values[j] * wq[j] * kernel[k];
        }
        *o = acc;
    }
    out
}

/// Base tabulation grid of a coordinate law (odd node count).
pub fn law_grid(law: &CoordinateLaw, resolution: usize) -> Grid1 {
    let (a, b) = law.tabulation_interval(1e-18);
    Grid1::span(a, b, resolution)
}

fn tabulate_normalized(law: &CoordinateLaw, grid: &Grid1) -> Vec<f64> {
    let mut rho: Vec<f64> = grid.nodes().map(|x| law.log_density(x).exp()).collect();
    let z = grid.integrate(&rho);
    for v in rho.iter_mut() {
        *v /= z;
    }
    rho
}

/// Smooths a 1D coordinate law: μ_s tabulated on the base interval padded
/// by 8√s, by direct quadrature convolution.
pub fn smooth_law(law: &CoordinateLaw, s: f64, resolution: usize) -> Result<Smoothed1> {
    if !(s > 0.0) {
        return Err(Error::InvalidArgument(format!("s = {s} must be positive")));
    }
    let base_grid = law_grid(law, resolution);
    let rho = tabulate_normalized(law, &base_grid);
    let grid = base_grid.padded(8.0 * s.sqrt());
    let mut rho_s = convolve(&base_grid, &rho, &grid, s);
    let z = grid.integrate(&rho_s);
    for v in rho_s.iter_mut() {
        *v /= z;
    }
    Ok(Smoothed1 {
        law: *law,
        s,
        base_grid,
        rho,
        grid,
        rho_s,
    })
}

/// Smooths a product measure of dimension ≤ 2.
pub fn smooth(base: &dyn Measure, s: f64, resolution: usize) -> Result<SmoothedMeasure> {
    let law = base
        .product_law()
        .ok_or_else(|| Error::InvalidArgument("smoothing needs a product measure".into()))?;
    match base.dim() {
        1 => Ok(SmoothedMeasure::One(smooth_law(law, s, resolution)?)),
        2 => Ok(SmoothedMeasure::Two(smooth_law_2d(law, s, resolution)?)),
        d => Err(Error::GridUnsupported { dim: d }),
    }
}

/// 2D smoothing by separable row/column convolution of the tabulated base.
pub fn smooth_law_2d(law: &CoordinateLaw, s: f64, resolution: usize) -> Result<Smoothed2> {
    if !(s > 0.0) {
        return Err(Error::InvalidArgument(format!("s = {s} must be positive")));
    }
    let g1 = law_grid(law, resolution);
    let rho1 = tabulate_normalized(law, &g1);
    let base_grid = Grid2 { x: g1, y: g1 };
    let mut rho = vec![0.0; base_grid.len()];
    for ix in 0..g1.n {
        for iy in 0..g1.n {
            rho[base_grid.idx(ix, iy)] = rho1[ix] * rho1[iy];
        }
    }
    let gs = g1.padded(8.0 * s.sqrt());
    let grid = Grid2 { x: gs, y: gs };
    // Convolve along y (rows of the base), then along x (columns).
    let mut stage = vec![0.0; g1.n * gs.n];
    for ix in 0..g1.n {
        let row: Vec<f64> = (0..g1.n).map(|iy| rho[base_grid.idx(ix, iy)]).collect();
        let conv = convolve(&g1, &row, &gs, s);
        stage[ix * gs.n..(ix + 1) * gs.n].copy_from_slice(&conv);
    }
    let mut rho_s = vec![0.0; grid.len()];
    for iy in 0..gs.n {
        let col: Vec<f64> = (0..g1.n).map(|ix| stage[ix * gs.n + iy]).collect();
        let conv = convolve(&g1, &col, &gs, s);
        for ix in 0..gs.n {
            rho_s[grid.idx(ix, iy)] = conv[ix];
        }
    }
    let z = grid.integrate(&rho_s);
    for v in rho_s.iter_mut() {
        *v /= z;
    }
    Ok(Smoothed2 {
        law: *law,
        s,
        base_grid,
        rho,
        grid,
        rho_s,
    })
}

impl Smoothed1 {
    /// ⟨f, g⟩ in L²(μ) over the base grid.
    pub fn ip_mu(&self, f: &[f64], g: &[f64]) -> f64 {
        let vals: Vec<f64> = (0..self.base_grid.n)
            .map(|i| f[i] * g[i] * self.rho[i])
            .collect();
        self.base_grid.integrate(&vals)
    }

    /// ⟨f, g⟩ in L²(μ_s) over the smoothed grid, skipping masked nodes.
    pub fn ip_mus(&self, f: &[f64], g: &[f64]) -> f64 {
        let vals: Vec<f64> = (0..self.grid.n)
            .map(|i| {
                if self.rho_s[i] < RHO_FLOOR {
                    0.0
                } else {
                    f[i] * g[i] * self.rho_s[i]
                }
            })
            .collect();
        self.grid.integrate(&vals)
    }

    /// P_s u on the base grid for u tabulated on the smoothed grid.
    pub fn apply_p_to_base(&self, u_on_grid: &[f64]) -> Vec<f64> {
        convolve(&self.grid, u_on_grid, &self.base_grid, self.s)
    }

    /// Q_s u = P_s(u ρ)/ρ_s on the smoothed grid for u on the base grid.
    pub fn apply_q(&self, u_on_base: &[f64]) -> Vec<f64> {
        let weighted: Vec<f64> = (0..self.base_grid.n)
            .map(|i| u_on_base[i] * self.rho[i])
            .collect();
        let num = convolve(&self.base_grid, &weighted, &self.grid, self.s);
        num.iter()
            .zip(&self.rho_s)
            .map(|(n, r)| if *r < RHO_FLOOR { 0.0 } else { n / r })
            .collect()
    }

    pub fn tabulate_base(&self, u: &TestFn1) -> Vec<f64> {
        self.base_grid.nodes().map(|x| (u.f)(x)).collect()
    }

    pub fn tabulate_smoothed(&self, u: &TestFn1) -> Vec<f64> {
        self.grid.nodes().map(|x| (u.f)(x)).collect()
    }
}

/// P_s u on the same grid as u (plain Gaussian convolution).
pub fn apply_p(grid: &Grid1, u: &[f64], s: f64) -> Vec<f64> {
    convolve(grid, u, grid, s)
}

/// Adjointness ⟨Q_s u, v⟩_{μ_s} vs ⟨u, P_s v⟩_μ.
pub fn adjointness_check(sm: &Smoothed1, u: &TestFn1, v: &TestFn1) -> (f64, f64) {
    let u_base = sm.tabulate_base(u);
    let v_s = sm.tabulate_smoothed(v);
    let qu = sm.apply_q(&u_base);
    let lhs = sm.ip_mus(&qu, &v_s);
    let pv = sm.apply_p_to_base(&v_s);
    let rhs = sm.ip_mu(&u_base, &pv);
    (lhs, rhs)
}

/// Per-coordinate variance identity:
/// ∫(z² − (1+s))² dμ_s = ∫(y² − 1)² dμ + 2(s² + 2s).
pub fn variance_identity_1d(law: &CoordinateLaw, s: f64, resolution: usize) -> Result<(f64, f64)> {
    let sm = smooth_law(law, s, resolution)?;
    let center = 1.0 + s;
    let lhs_vals: Vec<f64> = sm
        .grid
        .nodes()
        .zip(&sm.rho_s)
        .map(|(x, r)| (x * x - center).powi(2) * r)
        .collect();
    let lhs = sm.grid.integrate(&lhs_vals);
    let rhs_vals: Vec<f64> = sm
        .base_grid
        .nodes()
        .zip(&sm.rho)
        .map(|(x, r)| (x * x - 1.0).powi(2) * r)
        .collect();
    let rhs = sm.base_grid.integrate(&rhs_vals) + 2.0 * (s * s + 2.0 * s);
    Ok((lhs, rhs))
}

/// n-dimensional variance identity assembled from 1D moments:
/// ∫(|x|² − (1+s)n)² dμ_s = ∫(|y|² − n)² dμ + 2(s² + 2s)n.
pub fn variance_identity_product(
    law: &CoordinateLaw,
    dim: usize,
    s: f64,
    resolution: usize,
) -> Result<(f64, f64)> {
    let (l1, r1) = variance_identity_1d(law, s, resolution)?;
    Ok((l1 * dim as f64, r1 * dim as f64))
}

/// Direct 2D-grid version of the variance identity.
pub fn variance_identity_2d(law: &CoordinateLaw, s: f64, resolution: usize) -> Result<(f64, f64)> {
    let sm = smooth_law_2d(law, s, resolution)?;
    let center = 2.0 * (1.0 + s);
    let mut lhs_vals = vec![0.0; sm.grid.len()];
    for ix in 0..sm.grid.x.n {
        let x = sm.grid.x.node(ix);
        for iy in 0..sm.grid.y.n {
            let y = sm.grid.y.node(iy);
            let idx = sm.grid.idx(ix, iy);
            lhs_vals[idx] = (x * x + y * y - center).powi(2) * sm.rho_s[idx];
        }
    }
    let lhs = sm.grid.integrate(&lhs_vals);
    let mut rhs_vals = vec![0.0; sm.base_grid.len()];
    for ix in 0..sm.base_grid.x.n {
        let x = sm.base_grid.x.node(ix);
        for iy in 0..sm.base_grid.y.n {
            let y = sm.base_grid.y.node(iy);
            let idx = sm.base_grid.idx(ix, iy);
            rhs_vals[idx] = (x * x + y * y - 2.0).powi(2) * sm.rho[idx];
        }
    }
    let rhs = sm.base_grid.integrate(&rhs_vals) + 2.0 * (s * s + 2.0 * s) * 2.0;
    Ok((lhs, rhs))
}

/// Extremes of the finite-difference (log ρ_s)'' over unmasked interior
/// nodes; the window requires −1/s ≤ (log ρ_s)'' ≤ 0.
#[derive(Debug, Clone, Copy)]
pub struct HessianWindow {
    pub min: f64,
    pub max: f64,
    pub lower_bound: f64,
    pub pass: bool,
}

pub fn hessian_window_check(sm: &Smoothed1, slack: f64) -> HessianWindow {
    // For laws with unbounded support the far tail of ρ_s is dominated by
    // the base tabulation cutoff, not by real mass; the second log
    // derivative is meaningless there. Compact supports tabulate exactly.
    let support = sm.law.support();
    let floor = if support.0.is_finite() && support.1.is_finite() {
        RHO_FLOOR
    } else {
        1e-10
    };
    let log_rho: Vec<f64> = sm.rho_s.iter().map(|r| r.max(RHO_FLOOR).ln()).collect();
    let d2 = sm.grid.second_derivative(&log_rho);
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for i in 1..sm.grid.n - 1 {
        if sm.rho_s[i] < floor || sm.rho_s[i - 1] < floor || sm.rho_s[i + 1] < floor {
            continue;
        }
        min = min.min(d2[i]);
        max = max.max(d2[i]);
    }
    let lower = -1.0 / sm.s;
    HessianWindow {
        min,
        max,
        lower_bound: lower,
        pass: min >= lower - slack && max <= slack,
    }
}

/// ∫ φ'' dμ for a smooth positive coordinate density e^{−φ}; exceeds 1 for
/// isotropic laws. Only defined when the law is twice differentiable.
pub fn mean_convexity(law: &CoordinateLaw, resolution: usize) -> Option<f64> {
    if matches!(law, CoordinateLaw::CenteredExponential | CoordinateLaw::UniformSym { .. }) {
        return None;
    }
    let grid = law_grid(law, resolution);
    let rho = tabulate_normalized(law, &grid);
    let vals: Vec<f64> = grid
        .nodes()
        .zip(&rho)
        .map(|(x, r)| -law.hessian_log_density(x).unwrap_or(f64::NAN) * r)
        .collect();
    Some(grid.integrate(&vals))
}

/// Dirichlet-energy contraction ∫|∇Q_s u|² dμ_s ≤ ∫|∇u|² dμ.
pub fn gradient_contraction_check(sm: &Smoothed1, u: &TestFn1) -> (f64, f64) {
    let u_base = sm.tabulate_base(u);
    let qu = sm.apply_q(&u_base);
    let dqu = sm.grid.derivative(&qu);
    let lhs = sm.ip_mus(&dqu, &dqu);
    let du: Vec<f64> = sm.base_grid.nodes().map(|x| (u.d1)(x)).collect();
    let rhs = sm.ip_mu(&du, &du);
    (lhs, rhs)
}

/// The Bochner identity, the Γ₂ decomposition relation, and the
/// s-derivative identity d/ds ∫(Q_s u)² dμ_s = −∫|∇Q_s u|² dμ_s.
#[derive(Debug, Clone, Copy)]
pub struct BochnerReport {
    pub boc_lhs: f64,
    pub boc_rhs: f64,
    pub gat_lhs: f64,
    pub gat_rhs: f64,
    pub di_lhs: f64,
    pub di_rhs: f64,
}

pub fn bochner_gamma2_check(
    law: &CoordinateLaw,
    s: f64,
    u: &TestFn1,
    resolution: usize,
) -> Result<BochnerReport> {
    let sm = smooth_law(law, s, resolution)?;
    let log_rho: Vec<f64> = sm.rho_s.iter().map(|r| r.max(RHO_FLOOR).ln()).collect();
    let dlog = sm.grid.derivative(&log_rho);
    let ddlog = sm.grid.second_derivative(&log_rho);

    let du: Vec<f64> = sm.grid.nodes().map(|x| (u.d1)(x)).collect();
    let ddu: Vec<f64> = sm.grid.nodes().map(|x| (u.d2)(x)).collect();

    // L_s u = u'' + (log ρ_s)' u'.
    let lsu: Vec<f64> = (0..sm.grid.n).map(|i| ddu[i] + dlog[i] * du[i]).collect();
    let boc_lhs = sm.ip_mus(&lsu, &lsu);
    let boc_rhs_vals: Vec<f64> = (0..sm.grid.n)
        .map(|i| ddu[i] * ddu[i] - ddlog[i] * du[i] * du[i])
        .collect();
    let ones = vec![1.0; sm.grid.n];
    let boc_rhs = sm.ip_mus(&boc_rhs_vals, &ones);

    // Γ₂(u, u) = ‖∇²u‖² − 2⟨∇²log ρ_s ∇u, ∇u⟩; as an integral identity it
    // must equal ∫(L_s u)² − ∫⟨∇²log ρ_s ∇u, ∇u⟩.
    let gamma2: Vec<f64> = (0..sm.grid.n)
        .map(|i| ddu[i] * ddu[i] - 2.0 * ddlog[i] * du[i] * du[i])
        .collect();
    let gat_lhs = sm.ip_mus(&gamma2, &ones);
    let cross: Vec<f64> = (0..sm.grid.n).map(|i| ddlog[i] * du[i] * du[i]).collect();
    let gat_rhs = boc_lhs - sm.ip_mus(&cross, &ones);

    // d/ds ∫(Q_s u)² dμ_s by centered differences in s.
    let delta = s / 64.0;
    let mut norms = [0.0; 2];
    for (slot, ss) in [s - delta, s + delta].into_iter().enumerate() {
        let smd = smooth_law(law, ss, resolution)?;
        let ub = smd.tabulate_base(u);
        let qu = smd.apply_q(&ub);
        norms[slot] = smd.ip_mus(&qu, &qu);
    }
    let di_lhs = (norms[1] - norms[0]) / (2.0 * delta);
    let ub = sm.tabulate_base(u);
    let qu = sm.apply_q(&ub);
    let dqu = sm.grid.derivative(&qu);
    let di_rhs = -sm.ip_mus(&dqu, &dqu);

    Ok(BochnerReport {
        boc_lhs,
        boc_rhs,
        gat_lhs,
        gat_rhs,
        di_lhs,
        di_rhs,
    })
}

/// Pointwise and distributional correspondence between the tilt
/// expectations and the smoothed semigroup at s = 1/t.
#[derive(Debug, Clone, Copy)]
pub struct StReport {
    /// Max |Q_s u(y) − ∫u dp_{t, ty}| over the probe grid.
    pub pointwise_max_err: f64,
    /// Monte-Carlo E|∫u dp_t|² with its standard error.
    pub mc_mean: f64,
    pub mc_se: f64,
    /// ∫|Q_s u|² dμ_s by quadrature.
    pub grid_value: f64,
}

pub fn check_st_correspondence(
    law: &CoordinateLaw,
    u: &TestFn1,
    t: f64,
    n_paths: usize,
    seed: u64,
    resolution: usize,
) -> Result<StReport> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument("t must be positive".into()));
    }
    let s = 1.0 / t;
    let sm = smooth_law(law, s, resolution)?;
    let u_base = sm.tabulate_base(u);
    let qu = sm.apply_q(&u_base);

    // Pointwise probes within ±3 sd of μ_s.
    let spread = (1.0 + s).sqrt();
    let mut max_err: f64 = 0.0;
    let support = law.support();
    for k in -8..=8 {
        let y = 0.375 * k as f64 * spread;
        let tilt = quad::tilted_expectation(
            |x| law.log_density(x),
            support,
            t,
            t * y,
            |x| (u.f)(x),
        );
        let grid_val = sm.grid.interp(&qu, y);
        max_err = max_err.max((tilt - grid_val).abs());
    }

    // Distribution of θ_t/t is that of X + B_t/t ~ X + N(0, 1/t).
    let mut rng = stream_rng(seed, 0x5e0a);
    let samples: Vec<f64> = (0..n_paths)
        .map(|_| {
            let x = law.sample(&mut rng);
            let noise: f64 = StandardNormal.sample(&mut rng);
            let y = x + noise / t.sqrt();
            quad::tilted_expectation(|z| law.log_density(z), support, t, t * y, |z| (u.f)(z))
                .powi(2)
        })
        .collect();
    let (mc_mean, mc_se) = mean_se(&samples);
    let qu_sq: Vec<f64> = qu.iter().map(|v| v * v).collect();
    let ones = vec![1.0; sm.grid.n];
    let grid_value = sm.ip_mus(&qu_sq, &ones);
    Ok(StReport {
        pointwise_max_err: max_err,
        mc_mean,
        mc_se,
        grid_value,
    })
}

/// Result of the marginal uniform-convexity check.
#[derive(Debug, Clone, Copy)]
pub struct UlcReport {
    /// min over interior nodes of the input Hessian's smallest eigenvalue,
    /// minus 2t (certification slack; NaN when certification was skipped).
    pub certification_slack: f64,
    /// min over interior nodes of (−log marginal)'' − 2t.
    pub marginal_slack: f64,
    pub pass: bool,
}

/// Verifies that the 1D marginal of a t-uniformly log-concave 2D density
/// is t-uniformly log-concave: (−log m)'' ≥ 2t on the grid interior.
///
/// `neg_log_density` is φ with ρ = e^{−φ}; certification requires
/// ∇²φ ≥ 2t·Id on the interior and fails with a precondition error.
pub fn projection_ulc_check(
    neg_log_density: &dyn Fn(f64, f64) -> f64,
    t: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
    resolution: usize,
    certify: bool,
) -> Result<UlcReport> {
    let grid = Grid2 {
        x: Grid1::span(x_range.0, x_range.1, resolution),
        y: Grid1::span(y_range.0, y_range.1, resolution),
    };
    let mut phi = vec![0.0; grid.len()];
    for ix in 0..grid.x.n {
        for iy in 0..grid.y.n {
            phi[grid.idx(ix, iy)] = neg_log_density(grid.x.node(ix), grid.y.node(iy));
        }
    }

    let mut cert_slack = f64::NAN;
    if certify {
        let (hx, hy) = (grid.x.dx, grid.y.dx);
        let mut min_eig = f64::INFINITY;
        for ix in 1..grid.x.n - 1 {
            for iy in 1..grid.y.n - 1 {
                let c = grid.idx(ix, iy);
                let pxx = (phi[grid.idx(ix + 1, iy)] - 2.0 * phi[c] + phi[grid.idx(ix - 1, iy)])
                    / (hx * hx);
                let pyy = (phi[grid.idx(ix, iy + 1)] - 2.0 * phi[c] + phi[grid.idx(ix, iy - 1)])
                    / (hy * hy);
                let pxy = (phi[grid.idx(ix + 1, iy + 1)] - phi[grid.idx(ix + 1, iy - 1)]
                    - phi[grid.idx(ix - 1, iy + 1)]
                    + phi[grid.idx(ix - 1, iy - 1)])
                    / (4.0 * hx * hy);
                let mean = 0.5 * (pxx + pyy);
                let rad = (0.25 * (pxx - pyy).powi(2) + pxy * pxy).sqrt();
                min_eig = min_eig.min(mean - rad);
            }
        }
        cert_slack = min_eig - 2.0 * t;
        if cert_slack < -1e-6 {
            return Err(Error::NotUniformlyLogConcave {
                t,
                reason: format!("input Hessian eigenvalue dips to {min_eig} < 2t"),
            });
        }
    }

    // Marginal over y, stabilized by the column minimum of φ.
    let mut marginal = vec![0.0; grid.x.n];
    for ix in 0..grid.x.n {
        let col: Vec<f64> = (0..grid.y.n).map(|iy| phi[grid.idx(ix, iy)]).collect();
        let m = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let vals: Vec<f64> = col.iter().map(|p| (-(p - m)).exp()).collect();
        marginal[ix] = grid.y.integrate(&vals).ln() - m;
    }
    let neg_log_m: Vec<f64> = marginal.iter().map(|v| -v).collect();
    let d2 = grid.x.second_derivative(&neg_log_m);
    let mut min_slack = f64::INFINITY;
    for &v in d2.iter().take(grid.x.n - 1).skip(1) {
        min_slack = min_slack.min(v - 2.0 * t);
    }
    Ok(UlcReport {
        certification_slack: cert_slack,
        marginal_slack: min_slack,
        pass: min_slack >= -1e-6,
    })
}
