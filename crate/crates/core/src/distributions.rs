//! Parametric distributions with exact seeded sampling, log-density
//! evaluation, and closed-form Gaussian KL used as ground truth.
//!
//! Covariance descriptors stay structured (isotropic / diagonal / 2x2-block /
//! full) so that sampling and densities use the analytic factorization where
//! one exists; only the `full` descriptor goes through a dense Cholesky.

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy as CauchyDist, ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.8378770664093453;

/// Covariance (or Student-t scale matrix) descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovarianceSpec {
    /// sigma^2 * I
    Isotropic { variance: f64 },
    /// Independent per-coordinate variances.
    Diagonal { variances: Vec<f64> },
    /// 2x2 blocks along the diagonal: ones on the diagonal, `rho` off it.
    /// Pairs adjacent coordinates (x1,x2), (x3,x4), ...; D must be even.
    Block2x2 { rho: f64 },
    /// Dense symmetric positive-definite matrix, row-major.
    Full { matrix: Vec<Vec<f64>> },
}

impl CovarianceSpec {
    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            CovarianceSpec::Isotropic { variance } => {
                if !(variance.is_finite() && *variance > 0.0) {
                    return Err(Error::InvalidDistribution(format!(
                        "isotropic variance must be positive, got {variance}"
                    )));
                }
            }
            CovarianceSpec::Diagonal { variances } => {
                if variances.len() != dim {
                    return Err(Error::InvalidDistribution(format!(
                        "diagonal covariance has {} entries for dimension {dim}",
                        variances.len()
                    )));
                }
                if variances.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(Error::InvalidDistribution(
                        "diagonal covariance requires strictly positive variances".into(),
                    ));
                }
            }
            CovarianceSpec::Block2x2 { rho } => {
                if dim % 2 != 0 {
                    return Err(Error::InvalidDistribution(format!(
                        "block2x2 covariance requires even dimension, got {dim}"
                    )));
                }
                if !(rho.is_finite() && rho.abs() < 1.0) {
                    return Err(Error::InvalidDistribution(format!(
                        "block correlation must lie in (-1, 1), got {rho}"
                    )));
                }
            }
            CovarianceSpec::Full { matrix } => {
                if matrix.len() != dim || matrix.iter().any(|r| r.len() != dim) {
                    return Err(Error::InvalidDistribution(format!(
                        "full covariance must be {dim}x{dim}"
                    )));
                }
                let dense = self.to_dense(dim);
                for i in 0..dim {
                    for j in 0..i {
                        let scale = dense[(i, i)].abs().max(dense[(j, j)].abs()).max(1.0);
                        if (dense[(i, j)] - dense[(j, i)]).abs() > 1e-9 * scale {
                            return Err(Error::InvalidDistribution(
                                "full covariance must be symmetric".into(),
                            ));
                        }
                    }
                }
                cholesky(&dense)?; // PD check
            }
        }
        Ok(())
    }

    /// Materialize as a dense matrix.
    pub fn to_dense(&self, dim: usize) -> Array2<f64> {
        match self {
            CovarianceSpec::Isotropic { variance } => Array2::eye(dim) * *variance,
            CovarianceSpec::Diagonal { variances } => Array2::from_diag(&Array1::from(
                variances.clone(),
            )),
            CovarianceSpec::Block2x2 { rho } => {
                let mut m = Array2::eye(dim);
                for b in 0..dim / 2 {
                    m[(2 * b, 2 * b + 1)] = *rho;
                    m[(2 * b + 1, 2 * b)] = *rho;
                }
                m
            }
            CovarianceSpec::Full { matrix } => {
                let mut m = Array2::zeros((dim, dim));
                for (i, row) in matrix.iter().enumerate() {
                    for (j, v) in row.iter().enumerate() {
                        m[(i, j)] = *v;
                    }
                }
                m
            }
        }
    }

    fn log_det(&self, dim: usize) -> f64 {
        match self {
            CovarianceSpec::Isotropic { variance } => dim as f64 * variance.ln(),
            CovarianceSpec::Diagonal { variances } => variances.iter().map(|v| v.ln()).sum(),
            CovarianceSpec::Block2x2 { rho } => (dim as f64 / 2.0) * (1.0 - rho * rho).ln(),
            CovarianceSpec::Full { .. } => {
                let l = cholesky(&self.to_dense(dim)).expect("validated covariance");
                2.0 * (0..dim).map(|i| l[(i, i)].ln()).sum::<f64>()
            }
        }
    }
}

/// Parametric description of a distribution: the numerator p, denominator q,
/// or an auxiliary m in a ratio-estimation task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    Gaussian {
        mean: Vec<f64>,
        covariance: CovarianceSpec,
    },
    /// Coordinates are independent Cauchy(location_i, scale_i).
    Cauchy {
        location: Vec<f64>,
        scale: Vec<f64>,
    },
    StudentT {
        location: Vec<f64>,
        scale: CovarianceSpec,
        dof: f64,
    },
    /// 1D normal restricted to [low, high] and renormalized.
    TruncatedNormal {
        loc: f64,
        scale: f64,
        low: f64,
        high: f64,
    },
    Mixture {
        weights: Vec<f64>,
        components: Vec<DistributionSpec>,
    },
}

impl DistributionSpec {
    /// 1D Gaussian given mean and standard deviation.
    pub fn gaussian_1d(mean: f64, sd: f64) -> Self {
        DistributionSpec::Gaussian {
            mean: vec![mean],
            covariance: CovarianceSpec::Isotropic { variance: sd * sd },
        }
    }

    /// Isotropic Gaussian with constant mean in every coordinate.
    pub fn gaussian_iso(dim: usize, mean: f64, variance: f64) -> Self {
        DistributionSpec::Gaussian {
            mean: vec![mean; dim],
            covariance: CovarianceSpec::Isotropic { variance },
        }
    }

    /// Gaussian with unit-variance coordinates correlated in adjacent pairs.
    pub fn gaussian_block2x2(dim: usize, mean: f64, rho: f64) -> Self {
        DistributionSpec::Gaussian {
            mean: vec![mean; dim],
            covariance: CovarianceSpec::Block2x2 { rho },
        }
    }

    pub fn cauchy_1d(location: f64, scale: f64) -> Self {
        DistributionSpec::Cauchy {
            location: vec![location],
            scale: vec![scale],
        }
    }

    pub fn truncated_normal(loc: f64, scale: f64, low: f64, high: f64) -> Self {
        DistributionSpec::TruncatedNormal {
            loc,
            scale,
            low,
            high,
        }
    }

    /// Dimensionality of a draw.
    pub fn dim(&self) -> usize {
        match self {
            DistributionSpec::Gaussian { mean, .. } => mean.len(),
            DistributionSpec::Cauchy { location, .. } => location.len(),
            DistributionSpec::StudentT { location, .. } => location.len(),
            DistributionSpec::TruncatedNormal { .. } => 1,
            DistributionSpec::Mixture { components, .. } => {
                components.first().map_or(0, |c| c.dim())
            }
        }
    }

    /// Check all structural invariants; rejected specs never sample.
    pub fn validate(&self) -> Result<()> {
        match self {
            DistributionSpec::Gaussian { mean, covariance } => {
                if mean.is_empty() {
                    return Err(Error::InvalidDistribution("empty mean vector".into()));
                }
                covariance.validate(mean.len())
            }
            DistributionSpec::Cauchy { location, scale } => {
                if location.is_empty() || location.len() != scale.len() {
                    return Err(Error::InvalidDistribution(
                        "cauchy location/scale length mismatch".into(),
                    ));
                }
                if scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                    return Err(Error::InvalidDistribution(
                        "cauchy scales must be positive".into(),
                    ));
                }
                Ok(())
            }
            DistributionSpec::StudentT {
                location,
                scale,
                dof,
            } => {
                if location.is_empty() {
                    return Err(Error::InvalidDistribution("empty location vector".into()));
                }
                if !(dof.is_finite() && *dof > 0.0) {
                    return Err(Error::InvalidDistribution(format!(
                        "degrees of freedom must be positive, got {dof}"
                    )));
                }
                scale.validate(location.len())
            }
            DistributionSpec::TruncatedNormal {
                scale, low, high, ..
            } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::InvalidDistribution(
                        "truncated normal scale must be positive".into(),
                    ));
                }
                if !(low < high) {
                    return Err(Error::InvalidDistribution(format!(
                        "truncated normal requires low < high, got [{low}, {high}]"
                    )));
                }
                Ok(())
            }
            DistributionSpec::Mixture {
                weights,
                components,
            } => {
                if components.is_empty() || weights.len() != components.len() {
                    return Err(Error::InvalidDistribution(
                        "mixture weights/components length mismatch".into(),
                    ));
                }
                if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return Err(Error::InvalidDistribution(
                        "mixture weights must be positive".into(),
                    ));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidDistribution(format!(
                        "mixture weights sum to {total}, expected 1"
                    )));
                }
                let d = components[0].dim();
                for c in components {
                    if c.dim() != d {
                        return Err(Error::InvalidDistribution(
                            "mixture components must share a dimension".into(),
                        ));
                    }
                    c.validate()?;
                }
                Ok(())
            }
        }
    }

    /// Draw `n` i.i.d. rows. Identical `(spec, n, seed)` gives a bit-identical
    /// matrix; each call owns a private generator.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Array2<f64>> {
        if n == 0 {
            return Err(Error::InvalidArgument("sample count must be >= 1".into()));
        }
        self.validate()?;
        let sampler = RowSampler::prepare(self)?;
        let d = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Array2::zeros((n, d));
        let mut row = vec![0.0; d];
        for i in 0..n {
            sampler.fill_row(&mut rng, &mut row);
            for (j, v) in row.iter().enumerate() {
                out[(i, j)] = *v;
            }
        }
        Ok(out)
    }

    /// Exact log pdf at a point. Returns `-inf` outside a truncated support.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.log_density_unchecked(x))
    }

    /// Log pdf for every row of `xs`.
    pub fn log_density_rows(&self, xs: &ArrayView2<f64>) -> Result<Array1<f64>> {
        if xs.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: xs.ncols(),
            });
        }
        let mut out = Array1::zeros(xs.nrows());
        let mut buf = vec![0.0; xs.ncols()];
        for (i, row) in xs.rows().into_iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                buf[j] = *v;
            }
            out[i] = self.log_density_unchecked(&buf);
        }
        Ok(out)
    }

    fn log_density_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            DistributionSpec::Gaussian { mean, covariance } => {
                let d = mean.len();
                let centered: Vec<f64> = x.iter().zip(mean).map(|(a, m)| a - m).collect();
                let quad = match covariance {
                    CovarianceSpec::Isotropic { variance } => {
                        centered.iter().map(|c| c * c).sum::<f64>() / variance
                    }
                    CovarianceSpec::Diagonal { variances } => centered
                        .iter()
                        .zip(variances)
                        .map(|(c, v)| c * c / v)
                        .sum(),
                    CovarianceSpec::Block2x2 { rho } => {
                        let denom = 1.0 - rho * rho;
                        (0..d / 2)
                            .map(|b| {
                                let a = centered[2 * b];
                                let bb = centered[2 * b + 1];
                                (a * a + bb * bb - 2.0 * rho * a * bb) / denom
                            })
                            .sum()
                    }
                    CovarianceSpec::Full { .. } => {
                        let l = cholesky(&covariance.to_dense(d)).expect("validated covariance");
                        let y = forward_substitute(&l, &centered);
                        y.iter().map(|v| v * v).sum()
                    }
                };
                -0.5 * (d as f64 * LN_2PI + covariance.log_det(d) + quad)
            }
            DistributionSpec::Cauchy { location, scale } => x
                .iter()
                .zip(location)
                .zip(scale)
                .map(|((xi, li), si)| {
                    let z = (xi - li) / si;
                    -std::f64::consts::PI.ln() - si.ln() - (1.0 + z * z).ln()
                })
                .sum(),
            DistributionSpec::StudentT {
                location,
                scale,
                dof,
            } => {
                let d = location.len() as f64;
                let centered: Vec<f64> = x.iter().zip(location).map(|(a, m)| a - m).collect();
                let quad = match scale {
                    CovarianceSpec::Isotropic { variance } => {
                        centered.iter().map(|c| c * c).sum::<f64>() / variance
                    }
                    CovarianceSpec::Diagonal { variances } => centered
                        .iter()
                        .zip(variances)
                        .map(|(c, v)| c * c / v)
                        .sum(),
                    CovarianceSpec::Block2x2 { rho } => {
                        let denom = 1.0 - rho * rho;
                        (0..location.len() / 2)
                            .map(|b| {
                                let a = centered[2 * b];
                                let bb = centered[2 * b + 1];
                                (a * a + bb * bb - 2.0 * rho * a * bb) / denom
                            })
                            .sum()
                    }
                    CovarianceSpec::Full { .. } => {
                        let l = cholesky(&scale.to_dense(location.len()))
                            .expect("validated covariance");
                        let y = forward_substitute(&l, &centered);
                        y.iter().map(|v| v * v).sum()
                    }
                };
                ln_gamma((dof + d) / 2.0)
                    - ln_gamma(dof / 2.0)
                    - 0.5 * d * (dof * std::f64::consts::PI).ln()
                    - 0.5 * scale.log_det(location.len())
                    - 0.5 * (dof + d) * (1.0 + quad / dof).ln()
            }
            DistributionSpec::TruncatedNormal {
                loc,
                scale,
                low,
                high,
            } => {
                let xi = x[0];
                if xi < *low || xi > *high {
                    return f64::NEG_INFINITY;
                }
                let std_normal = Normal::new(0.0, 1.0).unwrap();
                let alpha = (low - loc) / scale;
                let beta = (high - loc) / scale;
                let z = std_normal.cdf(beta) - std_normal.cdf(alpha);
                let t = (xi - loc) / scale;
                -0.5 * (LN_2PI + t * t) - scale.ln() - z.ln()
            }
            DistributionSpec::Mixture {
                weights,
                components,
            } => {
                let terms: Vec<f64> = weights
                    .iter()
                    .zip(components)
                    .map(|(w, c)| w.ln() + c.log_density_unchecked(x))
                    .collect();
                crate::scoremodel::log_sum_exp(&terms)
            }
        }
    }
}

/// Prepared per-row sampler; factorizations are computed once per `sample` call.
enum RowSampler {
    Gaussian {
        mean: Vec<f64>,
        kind: GaussianFactor,
    },
    Cauchy {
        location: Vec<f64>,
        scale: Vec<f64>,
    },
    StudentT {
        location: Vec<f64>,
        factor: GaussianFactor,
        dof: f64,
    },
    TruncatedNormal {
        loc: f64,
        scale: f64,
        cdf_low: f64,
        cdf_high: f64,
        low: f64,
        high: f64,
    },
    Mixture {
        cumulative: Vec<f64>,
        components: Vec<RowSampler>,
    },
}

enum GaussianFactor {
    Isotropic(f64),
    Diagonal(Vec<f64>),
    /// Analytic 2x2 Cholesky per block: (x1, x2) = (z1, rho*z1 + c*z2).
    Block2x2 {
        rho: f64,
        c: f64,
    },
    Full(Array2<f64>),
}

impl GaussianFactor {
    fn prepare(cov: &CovarianceSpec, dim: usize) -> Result<Self> {
        Ok(match cov {
            CovarianceSpec::Isotropic { variance } => GaussianFactor::Isotropic(variance.sqrt()),
            CovarianceSpec::Diagonal { variances } => {
                GaussianFactor::Diagonal(variances.iter().map(|v| v.sqrt()).collect())
            }
            CovarianceSpec::Block2x2 { rho } => GaussianFactor::Block2x2 {
                rho: *rho,
                c: (1.0 - rho * rho).sqrt(),
            },
            CovarianceSpec::Full { .. } => GaussianFactor::Full(cholesky(&cov.to_dense(dim))?),
        })
    }

    fn apply(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let d = out.len();
        match self {
            GaussianFactor::Isotropic(sd) => {
                for v in out.iter_mut() {
                    let z: f64 = StandardNormal.sample(rng);
                    *v = sd * z;
                }
            }
            GaussianFactor::Diagonal(sds) => {
                for (v, sd) in out.iter_mut().zip(sds) {
                    let z: f64 = StandardNormal.sample(rng);
                    *v = sd * z;
                }
            }
            GaussianFactor::Block2x2 { rho, c } => {
                for b in 0..d / 2 {
                    let z1: f64 = StandardNormal.sample(rng);
                    let z2: f64 = StandardNormal.sample(rng);
                    out[2 * b] = z1;
                    out[2 * b + 1] = rho * z1 + c * z2;
                }
            }
            GaussianFactor::Full(l) => {
                let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
                for i in 0..d {
                    let mut acc = 0.0;
                    for j in 0..=i {
                        acc += l[(i, j)] * z[j];
                    }
                    out[i] = acc;
                }
            }
        }
    }
}

impl RowSampler {
    fn prepare(spec: &DistributionSpec) -> Result<Self> {
        Ok(match spec {
            DistributionSpec::Gaussian { mean, covariance } => RowSampler::Gaussian {
                mean: mean.clone(),
                kind: GaussianFactor::prepare(covariance, mean.len())?,
            },
            DistributionSpec::Cauchy { location, scale } => RowSampler::Cauchy {
                location: location.clone(),
                scale: scale.clone(),
            },
            DistributionSpec::StudentT {
                location,
                scale,
                dof,
            } => RowSampler::StudentT {
                location: location.clone(),
                factor: GaussianFactor::prepare(scale, location.len())?,
                dof: *dof,
            },
            DistributionSpec::TruncatedNormal {
                loc,
                scale,
                low,
                high,
            } => {
                let std_normal = Normal::new(0.0, 1.0).unwrap();
                RowSampler::TruncatedNormal {
                    loc: *loc,
                    scale: *scale,
                    cdf_low: std_normal.cdf((low - loc) / scale),
                    cdf_high: std_normal.cdf((high - loc) / scale),
                    low: *low,
                    high: *high,
                }
            }
            DistributionSpec::Mixture {
                weights,
                components,
            } => {
                let mut cumulative = Vec::with_capacity(weights.len());
                let mut acc = 0.0;
                for w in weights {
                    acc += w;
                    cumulative.push(acc);
                }
                RowSampler::Mixture {
                    cumulative,
                    components: components
                        .iter()
                        .map(RowSampler::prepare)
                        .collect::<Result<_>>()?,
                }
            }
        })
    }

    fn fill_row(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        match self {
            RowSampler::Gaussian { mean, kind } => {
                kind.apply(rng, out);
                for (v, m) in out.iter_mut().zip(mean) {
                    *v += m;
                }
            }
            RowSampler::Cauchy { location, scale } => {
                for ((v, l), s) in out.iter_mut().zip(location).zip(scale) {
                    let c = CauchyDist::new(*l, *s).expect("validated scale");
                    *v = c.sample(rng);
                }
            }
            RowSampler::StudentT {
                location,
                factor,
                dof,
            } => {
                factor.apply(rng, out);
                let chi2 = ChiSquared::new(*dof).expect("validated dof");
                let w: f64 = chi2.sample(rng);
                let r = (dof / w).sqrt();
                for (v, l) in out.iter_mut().zip(location) {
                    *v = l + r * *v;
                }
            }
            RowSampler::TruncatedNormal {
                loc,
                scale,
                cdf_low,
                cdf_high,
                low,
                high,
            } => {
                // Inverse CDF on the truncated interval; rejection sampling
                // stalls on the narrow supports used by the finite-support tasks.
                let u: f64 = rng.random();
                let p = cdf_low + u * (cdf_high - cdf_low);
                let std_normal = Normal::new(0.0, 1.0).unwrap();
                let x = loc + scale * std_normal.inverse_cdf(p.clamp(1e-300, 1.0 - 1e-16));
                out[0] = x.clamp(*low, *high);
            }
            RowSampler::Mixture {
                cumulative,
                components,
            } => {
                let u: f64 = rng.random();
                let idx = cumulative
                    .iter()
                    .position(|c| u <= *c)
                    .unwrap_or(components.len() - 1);
                components[idx].fill_row(rng, out);
            }
        }
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
pub(crate) fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::InvalidDistribution(
                        "covariance is not positive-definite".into(),
                    ));
                }
                l[(i, j)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Ok(l)
}

fn forward_substitute(l: &Array2<f64>, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut acc = b[i];
        for j in 0..i {
            acc -= l[(i, j)] * y[j];
        }
        y[i] = acc / l[(i, i)];
    }
    y
}

/// Closed-form KL(p || q) between two Gaussians:
/// 0.5 * [tr(Sq^-1 Sp) + (mq-mp)^T Sq^-1 (mq-mp) - D + ln det Sq - ln det Sp].
pub fn gaussian_kl(p: &DistributionSpec, q: &DistributionSpec) -> Result<f64> {
    let (mp, cp) = match p {
        DistributionSpec::Gaussian { mean, covariance } => (mean, covariance),
        _ => {
            return Err(Error::InvalidArgument(
                "gaussian_kl requires Gaussian inputs".into(),
            ))
        }
    };
    let (mq, cq) = match q {
        DistributionSpec::Gaussian { mean, covariance } => (mean, covariance),
        _ => {
            return Err(Error::InvalidArgument(
                "gaussian_kl requires Gaussian inputs".into(),
            ))
        }
    };
    if mp.len() != mq.len() {
        return Err(Error::DimensionMismatch {
            expected: mp.len(),
            got: mq.len(),
        });
    }
    p.validate()?;
    q.validate()?;
    let d = mp.len();

    let sp = cp.to_dense(d);
    let sq = cq.to_dense(d);
    let l = cholesky(&sq)?;

    // tr(Sq^-1 Sp) = sum_ij (Sq^-1)_ij (Sp)_ji; solve column by column.
    let mut trace = 0.0;
    let mut col = vec![0.0; d];
    for j in 0..d {
        for i in 0..d {
            col[i] = sp[(i, j)];
        }
        let solved = cholesky_solve(&l, &col);
        trace += solved[j];
    }

    let diff: Vec<f64> = mq.iter().zip(mp).map(|(a, b)| a - b).collect();
    let solved = cholesky_solve(&l, &diff);
    let maha: f64 = diff.iter().zip(&solved).map(|(a, b)| a * b).sum();

    Ok(0.5 * (trace + maha - d as f64 + cq.log_det(d) - cp.log_det(d)))
}

fn cholesky_solve(l: &Array2<f64>, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let y = forward_substitute(l, b);
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = y[i];
        for j in i + 1..n {
            acc -= l[(j, i)] * x[j];
        }
        x[i] = acc / l[(i, i)];
    }
    x
}

/// Correlation giving a target mutual information for `d_blocks` correlated
/// pairs: rho = sqrt(1 - exp(-2 I / d)).
pub fn rho_for_target_mi(d_blocks: usize, target_mi: f64) -> Result<f64> {
    if d_blocks == 0 {
        return Err(Error::InvalidArgument("d_blocks must be >= 1".into()));
    }
    if !(target_mi.is_finite() && target_mi > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "target mutual information must be positive, got {target_mi}"
        )));
    }
    Ok((1.0 - (-2.0 * target_mi / d_blocks as f64).exp()).sqrt())
}

/// Mutual information of a block2x2 Gaussian against independent coordinates:
/// I = -(d/2) ln(1 - rho^2) for d correlated pairs.
pub fn block_mi(d_blocks: usize, rho: f64) -> f64 {
    -(d_blocks as f64 / 2.0) * (1.0 - rho * rho).ln()
}

/// Empirical mean of one column; test helper exposed for diagnostics.
pub fn column_mean(xs: &ArrayView2<f64>, col: usize) -> f64 {
    xs.column(col).mean().unwrap_or(0.0)
}

/// Empirical Pearson correlation between two columns.
pub fn column_correlation(xs: &ArrayView2<f64>, a: usize, b: usize) -> f64 {
    let ca = xs.column(a);
    let cb = xs.column(b);
    let ma = ca.mean().unwrap();
    let mb = cb.mean().unwrap();
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ca.iter().zip(cb.iter()) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va.sqrt() * vb.sqrt()).max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gaussian_sample_mean_law_of_large_numbers() {
        let spec = DistributionSpec::gaussian_1d(0.0, 1.0);
        let n = 1_000_000;
        let xs = spec.sample(n, 7).unwrap();
        let mean = column_mean(&xs.view(), 0);
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn truncated_normal_stays_in_support() {
        let spec = DistributionSpec::truncated_normal(-1.0, 0.1, -1.1, -0.9);
        let xs = spec.sample(10_000, 3).unwrap();
        assert!(xs.iter().all(|v| (-1.1..=-0.9).contains(v)));
    }

    #[test]
    fn block2x2_empirical_correlation_matches_rho() {
        // rho derived from the d=20, I=20 inversion; verified by round trip below.
        let rho = rho_for_target_mi(20, 20.0).unwrap();
        let spec = DistributionSpec::gaussian_block2x2(40, 0.0, rho);
        let xs = spec.sample(100_000, 11).unwrap();
        for b in 0..20 {
            let r = column_correlation(&xs.view(), 2 * b, 2 * b + 1);
            assert!((0.92..=0.94).contains(&r), "block {b}: correlation {r}");
        }
        // off-block correlation should be near zero
        let off = column_correlation(&xs.view(), 0, 2);
        assert!(off.abs() < 0.02, "off-block correlation {off}");
    }

    #[test]
    fn log_density_standard_points() {
        let g = DistributionSpec::gaussian_1d(0.0, 1.0);
        assert_abs_diff_eq!(
            g.log_density(&[0.0]).unwrap(),
            -0.9189385332046727,
            epsilon = 1e-12
        );
        let c = DistributionSpec::cauchy_1d(0.0, 1.0);
        assert_abs_diff_eq!(
            c.log_density(&[0.0]).unwrap(),
            -1.1447298858494002,
            epsilon = 1e-12
        );
        let t = DistributionSpec::truncated_normal(1.0, 0.2, -1.1, 1.2);
        assert_eq!(t.log_density(&[1.5]).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn neg_infinity_propagates_through_sums() {
        let t = DistributionSpec::truncated_normal(1.0, 0.2, -1.1, 1.2);
        let ld = t.log_density(&[2.0]).unwrap();
        assert!((ld + 5.0).is_infinite() && (ld + 5.0) < 0.0);
        assert!(!(ld + 5.0).is_nan());
    }

    #[test]
    fn gaussian_kl_table_values() {
        let p1 = DistributionSpec::gaussian_1d(-1.0, 0.08);
        let p2 = DistributionSpec::gaussian_1d(-2.0, 0.08);
        let q = DistributionSpec::gaussian_1d(2.0, 0.15);
        assert_abs_diff_eq!(gaussian_kl(&p1, &q).unwrap(), 200.27, epsilon = 0.01);
        assert_abs_diff_eq!(gaussian_kl(&p2, &q).unwrap(), 355.82, epsilon = 0.01);
        assert_eq!(gaussian_kl(&q, &q).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_kl_rejects_non_gaussian() {
        let p = DistributionSpec::gaussian_1d(0.0, 1.0);
        let c = DistributionSpec::cauchy_1d(0.0, 1.0);
        assert!(gaussian_kl(&p, &c).is_err());
    }

    #[test]
    fn rho_inversion_round_trip() {
        let rho = rho_for_target_mi(20, 20.0).unwrap();
        assert_abs_diff_eq!(rho, 0.9298734950321937, epsilon = 1e-12);
        assert_abs_diff_eq!(block_mi(20, rho), 20.0, epsilon = 1e-10);
        // zero-MI limit
        assert!(rho_for_target_mi(20, 1e-9).unwrap() < 1e-4);
    }

    #[test]
    fn block_kl_over_80_blocks_equals_target() {
        let rho = rho_for_target_mi(80, 40.0).unwrap();
        let p = DistributionSpec::gaussian_block2x2(160, 0.0, rho);
        let q = DistributionSpec::gaussian_iso(160, 0.0, 1.0);
        assert_abs_diff_eq!(gaussian_kl(&p, &q).unwrap(), 40.0, epsilon = 1e-8);
    }

    #[test]
    fn mean_shifted_block_kl_reproduces_mi_100() {
        let rho = rho_for_target_mi(20, 20.0).unwrap();
        let p = DistributionSpec::gaussian_block2x2(40, -1.0, rho);
        let q = DistributionSpec::gaussian_iso(40, 1.0, 1.0);
        assert_abs_diff_eq!(gaussian_kl(&p, &q).unwrap(), 100.0, epsilon = 1e-6);
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = DistributionSpec::Mixture {
            weights: vec![0.5, 0.5],
            components: vec![
                DistributionSpec::gaussian_1d(-1.0, 0.1),
                DistributionSpec::truncated_normal(1.0, 0.2, 0.8, 1.0),
            ],
        };
        let a = spec.sample(500, 42).unwrap();
        let b = spec.sample(500, 42).unwrap();
        assert_eq!(a, b);
        let c = spec.sample(500, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_specs_rejected_before_sampling() {
        let bad = DistributionSpec::Gaussian {
            mean: vec![0.0, 0.0],
            covariance: CovarianceSpec::Full {
                matrix: vec![vec![1.0, 2.0], vec![2.0, 1.0]], // not PD
            },
        };
        assert!(bad.sample(10, 0).is_err());
        let bad_tn = DistributionSpec::truncated_normal(0.0, 1.0, 1.0, 1.0);
        assert!(bad_tn.validate().is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        // trapezoid over a 12-sigma window
        for spec in [
            DistributionSpec::gaussian_1d(-1.0, 0.08),
            DistributionSpec::truncated_normal(-1.0, 0.1, -1.1, -0.9),
        ] {
            let (lo, hi) = match &spec {
                DistributionSpec::Gaussian { mean, .. } => (mean[0] - 12.0 * 0.08, mean[0] + 12.0 * 0.08),
                DistributionSpec::TruncatedNormal { low, high, .. } => (*low, *high),
                _ => unreachable!(),
            };
            let n = 200_001;
            let h = (hi - lo) / (n - 1) as f64;
            let mut acc = 0.0;
            for i in 0..n {
                let x = lo + i as f64 * h;
                let d = spec.log_density(&[x]).unwrap().exp();
                acc += if i == 0 || i == n - 1 { 0.5 * d } else { d };
            }
            let integral = acc * h;
            assert!(integral >= 0.999, "integral {integral}");
        }
    }

    #[test]
    fn student_t_density_matches_1d_form() {
        // 1D Student-t with unit scale: known closed form at x = 0.
        let t = DistributionSpec::StudentT {
            location: vec![0.0],
            scale: CovarianceSpec::Isotropic { variance: 1.0 },
            dof: 5.0,
        };
        // ln Gamma(3) - ln Gamma(2.5) - 0.5 ln(5 pi)
        let expected = ln_gamma(3.0) - ln_gamma(2.5) - 0.5 * (5.0 * std::f64::consts::PI).ln();
        assert_abs_diff_eq!(t.log_density(&[0.0]).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn serde_round_trip() {
        let spec = DistributionSpec::Gaussian {
            mean: vec![0.0; 4],
            covariance: CovarianceSpec::Block2x2 { rho: 0.5 },
        };
        let json = serde_json::to_string(&spec).unwrap();
        let back: DistributionSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
    }
}
