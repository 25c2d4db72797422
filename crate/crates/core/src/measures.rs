//! Catalog of isotropic log-concave test measures.
//!
//! Three product measures with unit coordinate variance serve as ground
//! truth throughout the lab: the standard Gaussian (fully solvable), the
//! centered product exponential (heavy-ish tail, kinked density) and the
//! uniform cube (compact support). All are immutable and thread-safe;
//! samplers draw from explicit RNG streams and hold no state.

use std::io::{Read, Write};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::Error;
use crate::quad::{self, special};
use crate::rng::stream_rng;
use crate::Result;

/// Half-width of the uniform coordinate with unit variance.
pub const CUBE_HALF_WIDTH: f64 = 1.732_050_807_568_877_2; // sqrt(3)

/// Closed-form ground truth attached to a measure where available.
pub struct ClosedFormOracle {
    /// Exact posterior mean a(t, θ) of the tilted measure.
    pub posterior_mean: Option<Box<dyn Fn(f64, &[f64]) -> DVector<f64> + Send + Sync>>,
    /// Exact posterior covariance A(t, θ).
    pub posterior_cov: Option<Box<dyn Fn(f64, &[f64]) -> DMatrix<f64> + Send + Sync>>,
    /// Exact Var(|x|²).
    pub var_norm_sq: Option<f64>,
    /// Exact spectral gap of −L.
    pub spectral_gap: Option<f64>,
}

/// One coordinate law of an i.i.d. product measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoordinateLaw {
    StandardGaussian,
    /// X = E − 1 with E standard exponential; density e^{−(x+1)} on x ≥ −1.
    CenteredExponential,
    /// Uniform on [−half, half].
    UniformSym { half: f64 },
}

impl CoordinateLaw {
    pub fn support(&self) -> (f64, f64) {
        match self {
            CoordinateLaw::StandardGaussian => (f64::NEG_INFINITY, f64::INFINITY),
            CoordinateLaw::CenteredExponential => (-1.0, f64::INFINITY),
            CoordinateLaw::UniformSym { half } => (-half, *half),
        }
    }

    /// Interval carrying all but ~`tail` of the mass, for tabulation.
    pub fn tabulation_interval(&self, tail: f64) -> (f64, f64) {
        match self {
            CoordinateLaw::StandardGaussian => {
                let r = (-2.0 * (tail / 2.0).ln()).sqrt().clamp(8.0, 42.0);
                (-r, r)
            }
            CoordinateLaw::CenteredExponential => (-1.0, (-tail.ln()).clamp(40.0, 700.0) - 1.0),
            CoordinateLaw::UniformSym { half } => (-half, *half),
        }
    }

    /// Normalized log-density.
    pub fn log_density(&self, x: f64) -> f64 {
        match self {
            CoordinateLaw::StandardGaussian => {
                -0.5 * x * x - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            CoordinateLaw::CenteredExponential => {
                if x >= -1.0 {
                    -(x + 1.0)
                } else {
                    f64::NEG_INFINITY
                }
            }
            CoordinateLaw::UniformSym { half } => {
                if x.abs() <= *half {
                    -(2.0 * half).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn grad_log_density(&self, x: f64) -> f64 {
        match self {
            CoordinateLaw::StandardGaussian => -x,
            CoordinateLaw::CenteredExponential => -1.0,
            CoordinateLaw::UniformSym { .. } => 0.0,
        }
    }

    /// Second derivative of the log-density where smooth.
    pub fn hessian_log_density(&self, _x: f64) -> Option<f64> {
        match self {
            CoordinateLaw::StandardGaussian => Some(-1.0),
            CoordinateLaw::CenteredExponential => Some(0.0),
            CoordinateLaw::UniformSym { .. } => Some(0.0),
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            CoordinateLaw::StandardGaussian => StandardNormal.sample(rng),
            CoordinateLaw::CenteredExponential => {
                let e: f64 = Exp1.sample(rng);
                e - 1.0
            }
            CoordinateLaw::UniformSym { half } => rng.gen_range(-half..=*half),
        }
    }

    /// Mean and variance of the tilted coordinate density
    /// `∝ exp(theta*x − t*x²/2) ρ(x)`, by closed form where one exists.
    pub fn tilted_mean_var(&self, t: f64, theta: f64) -> (f64, f64) {
        match self {
            CoordinateLaw::StandardGaussian => (theta / (1.0 + t), 1.0 / (1.0 + t)),
            CoordinateLaw::CenteredExponential => {
                if t > 0.0 {
                    // exp(theta x − t x²/2 − (x+1)) is N((theta−1)/t, 1/t)
                    // truncated to x ≥ −1.
                    let sigma = 1.0 / t.sqrt();
                    special::truncated_normal_lower((theta - 1.0) / t, sigma, -1.0)
                } else {
                    // Pure exponential tilt, needs theta < 1.
                    debug_assert!(theta < 1.0, "non-integrable tilt at t = 0");
                    let rate = 1.0 - theta;
                    (-1.0 + 1.0 / rate, 1.0 / (rate * rate))
                }
            }
            CoordinateLaw::UniformSym { half } => {
                let m = quad::tilted_moments(|x| self.log_density(x), (-half, *half), t, theta);
                (m.mean, m.var)
            }
        }
    }

    /// Full tilted moments (mean, variance, third central) by quadrature.
    pub fn tilted_moments(&self, t: f64, theta: f64) -> quad::TiltedMoments {
        quad::tilted_moments(|x| self.log_density(x), self.support(), t, theta)
    }
}

/// A log-concave probability measure usable by the lab.
///
/// Implementations must be isotropic (barycenter 0, identity covariance).
/// The catalog lives here; external measures register by implementing the
/// trait and wrapping in an [`Arc`].
pub trait Measure: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    /// log ρ(x) up to the stored normalizer; −∞ outside the support.
    fn log_density(&self, x: &[f64]) -> f64;
    fn grad_log_density(&self, x: &[f64], out: &mut [f64]);
    fn hessian_log_density(&self, x: &[f64]) -> Option<DMatrix<f64>>;
    /// Exact independent sample into `out`.
    fn sample(&self, rng: &mut ChaCha8Rng, out: &mut [f64]);
    fn oracle(&self) -> Option<&ClosedFormOracle>;
    /// The coordinate law when the measure is an i.i.d. product.
    fn product_law(&self) -> Option<&CoordinateLaw>;
}

/// Shared handle to a measure.
pub type MeasureModel = Arc<dyn Measure>;

struct IidProduct {
    name: &'static str,
    dim: usize,
    law: CoordinateLaw,
    oracle: ClosedFormOracle,
}

impl Measure for IidProduct {
    fn name(&self) -> &str {
        self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        x.iter().map(|&xi| self.law.log_density(xi)).sum()
    }

    fn grad_log_density(&self, x: &[f64], out: &mut [f64]) {
        for (o, &xi) in out.iter_mut().zip(x) {
            *o = self.law.grad_log_density(xi);
        }
    }

    fn hessian_log_density(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let mut h = DMatrix::zeros(self.dim, self.dim);
        for (i, &xi) in x.iter().enumerate() {
            h[(i, i)] = self.law.hessian_log_density(xi)?;
        }
        Some(h)
    }

    fn sample(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        for o in out.iter_mut() {
            *o = self.law.sample(rng);
        }
    }

    fn oracle(&self) -> Option<&ClosedFormOracle> {
        Some(&self.oracle)
    }

    fn product_law(&self) -> Option<&CoordinateLaw> {
        Some(&self.law)
    }
}

/// Standard Gaussian on ℝⁿ with a fully populated oracle.
pub fn make_gaussian(dim: usize) -> Result<MeasureModel> {
    if dim == 0 {
        return Err(Error::InvalidDimension);
    }
    let oracle = ClosedFormOracle {
        posterior_mean: Some(Box::new(move |t, theta| {
            DVector::from_iterator(theta.len(), theta.iter().map(|&v| v / (1.0 + t)))
        })),
        posterior_cov: Some(Box::new(move |t, theta| {
            DMatrix::identity(theta.len(), theta.len()) / (1.0 + t)
        })),
        var_norm_sq: Some(2.0 * dim as f64),
        spectral_gap: Some(1.0),
    };
    Ok(Arc::new(IidProduct {
        name: "gaussian",
        dim,
        law: CoordinateLaw::StandardGaussian,
        oracle,
    }))
}

/// Product of centered standard exponentials.
pub fn make_product_exponential(dim: usize) -> Result<MeasureModel> {
    if dim == 0 {
        return Err(Error::InvalidDimension);
    }
    let oracle = ClosedFormOracle {
        posterior_mean: None,
        posterior_cov: None,
        var_norm_sq: Some(8.0 * dim as f64),
        spectral_gap: Some(0.25),
    };
    Ok(Arc::new(IidProduct {
        name: "exponential",
        dim,
        law: CoordinateLaw::CenteredExponential,
        oracle,
    }))
}

/// Uniform measure on [−√3, √3]ⁿ (unit coordinate variance).
pub fn make_uniform_cube(dim: usize) -> Result<MeasureModel> {
    if dim == 0 {
        return Err(Error::InvalidDimension);
    }
    // Neumann interval spectrum: gap (π / (2√3))².
    let gap = (std::f64::consts::PI / (2.0 * CUBE_HALF_WIDTH)).powi(2);
    let oracle = ClosedFormOracle {
        posterior_mean: None,
        posterior_cov: None,
        var_norm_sq: Some(0.8 * dim as f64),
        spectral_gap: Some(gap),
    };
    Ok(Arc::new(IidProduct {
        name: "cube",
        dim,
        law: CoordinateLaw::UniformSym {
            half: CUBE_HALF_WIDTH,
        },
        oracle,
    }))
}

/// Catalog lookup by name.
pub fn catalog(name: &str, dim: usize) -> Result<MeasureModel> {
    match name {
        "gaussian" => make_gaussian(dim),
        "exponential" => make_product_exponential(dim),
        "cube" => make_uniform_cube(dim),
        other => Err(Error::InvalidArgument(format!(
            "unknown measure '{other}' (expected gaussian, exponential or cube)"
        ))),
    }
}

/// A fixed pool of i.i.d. draws, the substrate for tilted reweighting.
pub struct SamplePool {
    pub dim: usize,
    pub count: usize,
    pub seed: u64,
    /// Row-major points, `count × dim`.
    pub data: Vec<f64>,
    /// Cached |x_i|²/2 per point.
    pub half_norms: Vec<f64>,
}

impl SamplePool {
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Pool mean per coordinate.
    pub fn mean(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.dim);
        for i in 0..self.count {
            for (k, &v) in self.point(i).iter().enumerate() {
                m[k] += v;
            }
        }
        m / self.count as f64
    }
}

/// Stream id reserved for pool draws under a given seed.
const POOL_STREAM: u64 = 0x9e3779b97f4a7c15;

/// Draw `count` i.i.d. points from `model`; bit-reproducible in `seed`.
pub fn draw_pool(model: &dyn Measure, count: usize, seed: u64) -> Result<SamplePool> {
    if count == 0 {
        return Err(Error::EmptyPool);
    }
    let dim = model.dim();
    let mut rng = stream_rng(seed, POOL_STREAM);
    let mut data = vec![0.0; count * dim];
    for chunk in data.chunks_mut(dim) {
        model.sample(&mut rng, chunk);
    }
    let half_norms = data
        .chunks(dim)
        .map(|p| 0.5 * p.iter().map(|v| v * v).sum::<f64>())
        .collect();
    Ok(SamplePool {
        dim,
        count,
        seed,
        data,
        half_norms,
    })
}

const POOL_MAGIC: &[u8; 8] = b"SLPOOL1\0";

/// Serialize a pool: magic "SLPOOL1", dim, count, seed as u64 LE, then
/// row-major little-endian f64 points.
pub fn write_pool(pool: &SamplePool, w: &mut impl Write) -> Result<()> {
    w.write_all(POOL_MAGIC)?;
    w.write_all(&(pool.dim as u64).to_le_bytes())?;
    w.write_all(&(pool.count as u64).to_le_bytes())?;
    w.write_all(&pool.seed.to_le_bytes())?;
    for v in &pool.data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_pool(r: &mut impl Read) -> Result<SamplePool> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != POOL_MAGIC {
        return Err(Error::MalformedPool("bad magic".into()));
    }
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    let dim = u64::from_le_bytes(buf) as usize;
    r.read_exact(&mut buf)?;
    let count = u64::from_le_bytes(buf) as usize;
    r.read_exact(&mut buf)?;
    let seed = u64::from_le_bytes(buf);
    if dim == 0 || count == 0 {
        return Err(Error::MalformedPool("empty dimensions".into()));
    }
    let mut data = vec![0.0f64; count * dim];
    for v in data.iter_mut() {
        r.read_exact(&mut buf)?;
        *v = f64::from_le_bytes(buf);
    }
    let half_norms = data
        .chunks(dim)
        .map(|p| 0.5 * p.iter().map(|v| v * v).sum::<f64>())
        .collect();
    Ok(SamplePool {
        dim,
        count,
        seed,
        data,
        half_norms,
    })
}
