//! Construction of auxiliary sample sets bridging or overlapping p and q.
//!
//! Three schemes: sampling an explicit overlapping distribution, linear
//! mixing of paired p/q rows (plain or the skewed variant that weights the
//! p row by sqrt(1 - alpha^2)), and dimension-wise splicing of q-coordinates
//! onto p-coordinates.

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{CovarianceSpec, DistributionSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearMixVariant {
    /// (1 - alpha) x_p + alpha x_q; alpha unconstrained, so non-convex
    /// mixtures surrounding both distributions are allowed.
    Plain,
    /// sqrt(1 - alpha^2) x_p + alpha x_q with 0 <= alpha <= 1.
    TreSkewed,
}

/// How the auxiliary classes are generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AuxiliaryScheme {
    /// Sample an explicit distribution whose support covers p and q.
    Overlapping { spec: DistributionSpec },
    /// One auxiliary class per mixing weight.
    LinearMix {
        alphas: Vec<f64>,
        variant: LinearMixVariant,
    },
    /// Splice leading q-coordinates onto trailing p-coordinates; `chunks`
    /// divides D and yields chunks - 1 classes.
    DimensionWiseMix { chunks: usize },
}

impl AuxiliaryScheme {
    /// Number of auxiliary classes the scheme produces for dimension `d`.
    pub fn class_count(&self, d: usize) -> usize {
        match self {
            AuxiliaryScheme::Overlapping { .. } => 1,
            AuxiliaryScheme::LinearMix { alphas, .. } => alphas.len(),
            AuxiliaryScheme::DimensionWiseMix { chunks } => {
                let _ = d;
                chunks.saturating_sub(1)
            }
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            AuxiliaryScheme::Overlapping { spec } => {
                spec.validate()?;
                if spec.dim() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: spec.dim(),
                    });
                }
            }
            AuxiliaryScheme::LinearMix { alphas, variant } => {
                if alphas.is_empty() {
                    return Err(Error::InvalidArgument("no mixing weights given".into()));
                }
                for (i, a) in alphas.iter().enumerate() {
                    if !a.is_finite() {
                        return Err(Error::InvalidArgument("non-finite mixing weight".into()));
                    }
                    if alphas[..i].contains(a) {
                        return Err(Error::InvalidArgument(format!(
                            "mixing weights must be distinct, {a} repeats"
                        )));
                    }
                    if *variant == LinearMixVariant::TreSkewed && !(0.0..=1.0).contains(a) {
                        return Err(Error::InvalidArgument(format!(
                            "skewed mixing requires 0 <= alpha <= 1, got {a}"
                        )));
                    }
                }
            }
            AuxiliaryScheme::DimensionWiseMix { chunks } => {
                if *chunks < 2 {
                    return Err(Error::InvalidArgument(
                        "dimension-wise mixing needs at least 2 chunks".into(),
                    ));
                }
                if d % chunks != 0 {
                    return Err(Error::InvalidArgument(format!(
                        "dimension {d} is not divisible by {chunks} chunks"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Default waymark grid alpha_k = k / (K + 1), k = 1..K.
pub fn default_waymark_alphas(k: usize) -> Vec<f64> {
    (1..=k).map(|i| i as f64 / (k + 1) as f64).collect()
}

/// Build the K auxiliary sample matrices. p rows are paired with q rows by a
/// single seed-derived permutation shared across classes, so classes differ
/// only through the scheme itself.
pub fn build_auxiliary_samples(
    scheme: &AuxiliaryScheme,
    samples_p: &ArrayView2<f64>,
    samples_q: &ArrayView2<f64>,
    seed: u64,
) -> Result<Vec<Array2<f64>>> {
    let (n, d) = (samples_p.nrows(), samples_p.ncols());
    if samples_q.nrows() != n || samples_q.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: samples_q.ncols(),
        });
    }
    if n == 0 {
        return Err(Error::EmptyInput("no p/q samples to mix".into()));
    }
    scheme.validate(d)?;

    match scheme {
        AuxiliaryScheme::Overlapping { spec } => Ok(vec![spec.sample(n, seed)?]),
        AuxiliaryScheme::LinearMix { alphas, variant } => {
            let perm = pairing_permutation(n, seed);
            let mut out = Vec::with_capacity(alphas.len());
            for alpha in alphas {
                let (wp, wq) = match variant {
                    LinearMixVariant::Plain => (1.0 - alpha, *alpha),
                    LinearMixVariant::TreSkewed => ((1.0 - alpha * alpha).sqrt(), *alpha),
                };
                let mut m = Array2::zeros((n, d));
                for i in 0..n {
                    let qi = perm[i];
                    for j in 0..d {
                        m[(i, j)] = wp * samples_p[(i, j)] + wq * samples_q[(qi, j)];
                    }
                }
                out.push(m);
            }
            Ok(out)
        }
        AuxiliaryScheme::DimensionWiseMix { chunks } => {
            let perm = pairing_permutation(n, seed);
            let chunk = d / chunks;
            let mut out = Vec::with_capacity(chunks - 1);
            for k in 1..*chunks {
                let boundary = k * chunk;
                let mut m = Array2::zeros((n, d));
                for i in 0..n {
                    let qi = perm[i];
                    for j in 0..d {
                        m[(i, j)] = if j < boundary {
                            samples_q[(qi, j)]
                        } else {
                            samples_p[(i, j)]
                        };
                    }
                }
                out.push(m);
            }
            Ok(out)
        }
    }
}

fn pairing_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perm.shuffle(&mut rng);
    perm
}

/// Per-coordinate sample-overlap fractions between an auxiliary set and the
/// p/q training sets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverlapReport {
    /// Fraction of auxiliary rows inside the joint min/max hull of p and q.
    pub aux_in_pq_hull: Vec<f64>,
    /// Fraction of p rows inside the auxiliary hull.
    pub p_in_aux_hull: Vec<f64>,
    /// Fraction of q rows inside the auxiliary hull.
    pub q_in_aux_hull: Vec<f64>,
}

impl OverlapReport {
    /// Worst coordinate coverage of p and q by the auxiliary hull.
    pub fn min_pq_coverage(&self) -> f64 {
        self.p_in_aux_hull
            .iter()
            .chain(self.q_in_aux_hull.iter())
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Check how well auxiliary samples cover p and q (and vice versa), per
/// coordinate, using empirical min/max hulls.
pub fn overlap_diagnostic(
    aux: &ArrayView2<f64>,
    samples_p: &ArrayView2<f64>,
    samples_q: &ArrayView2<f64>,
) -> Result<OverlapReport> {
    let d = aux.ncols();
    if samples_p.ncols() != d || samples_q.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: samples_p.ncols().max(samples_q.ncols()),
        });
    }
    if aux.nrows() == 0 || samples_p.nrows() == 0 || samples_q.nrows() == 0 {
        return Err(Error::EmptyInput("overlap diagnostic needs samples".into()));
    }

    let hull = |xs: &ArrayView2<f64>, j: usize| {
        let col = xs.column(j);
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let frac_inside = |xs: &ArrayView2<f64>, j: usize, lo: f64, hi: f64| {
        let col = xs.column(j);
        col.iter().filter(|v| **v >= lo && **v <= hi).count() as f64 / col.len() as f64
    };

    let mut report = OverlapReport {
        aux_in_pq_hull: Vec::with_capacity(d),
        p_in_aux_hull: Vec::with_capacity(d),
        q_in_aux_hull: Vec::with_capacity(d),
    };
    for j in 0..d {
        let (plo, phi) = hull(samples_p, j);
        let (qlo, qhi) = hull(samples_q, j);
        let (jlo, jhi) = (plo.min(qlo), phi.max(qhi));
        let (alo, ahi) = hull(aux, j);
        report.aux_in_pq_hull.push(frac_inside(aux, j, jlo, jhi));
        report.p_in_aux_hull.push(frac_inside(samples_p, j, alo, ahi));
        report.q_in_aux_hull.push(frac_inside(samples_q, j, alo, ahi));
    }
    Ok(report)
}

/// Closed-form distribution of a linear mix of two independent Gaussians:
/// wp*X_p + wq*X_q is Gaussian with mean wp*mu_p + wq*mu_q and covariance
/// wp^2 Sigma_p + wq^2 Sigma_q. Used as ground truth for waymark densities.
pub fn linear_mix_gaussian_spec(
    p: &DistributionSpec,
    q: &DistributionSpec,
    alpha: f64,
    variant: LinearMixVariant,
) -> Result<DistributionSpec> {
    let (mp, cp) = match p {
        DistributionSpec::Gaussian { mean, covariance } => (mean, covariance),
        _ => {
            return Err(Error::InvalidArgument(
                "waymark density is closed-form only for Gaussian p and q".into(),
            ))
        }
    };
    let (mq, cq) = match q {
        DistributionSpec::Gaussian { mean, covariance } => (mean, covariance),
        _ => {
            return Err(Error::InvalidArgument(
                "waymark density is closed-form only for Gaussian p and q".into(),
            ))
        }
    };
    if mp.len() != mq.len() {
        return Err(Error::DimensionMismatch {
            expected: mp.len(),
            got: mq.len(),
        });
    }
    let (wp, wq) = match variant {
        LinearMixVariant::Plain => (1.0 - alpha, alpha),
        LinearMixVariant::TreSkewed => ((1.0 - alpha * alpha).sqrt(), alpha),
    };
    let d = mp.len();
    let mean: Vec<f64> = mp.iter().zip(mq).map(|(a, b)| wp * a + wq * b).collect();
    let covariance = match (cp, cq) {
        (
            CovarianceSpec::Isotropic { variance: vp },
            CovarianceSpec::Isotropic { variance: vq },
        ) => CovarianceSpec::Isotropic {
            variance: wp * wp * vp + wq * wq * vq,
        },
        _ => {
            let dense = cp.to_dense(d) * (wp * wp) + cq.to_dense(d) * (wq * wq);
            CovarianceSpec::Full {
                matrix: (0..d)
                    .map(|i| (0..d).map(|j| dense[(i, j)]).collect())
                    .collect(),
            }
        }
    };
    Ok(DistributionSpec::Gaussian { mean, covariance })
}
