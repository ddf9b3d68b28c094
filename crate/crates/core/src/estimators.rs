//! Log-ratio readout from fitted models and the Monte Carlo KL / MI
//! estimates built on it.
//!
//! For a multiclass fit the ratio between any two classes is the logit
//! difference h_i - h_j; the p/q readout is the (0, 1) pair. A telescoping
//! fit sums its link readouts.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::training::{FittedEstimator, MdreFit, TreFit};

/// A fitted multiclass estimator read at an ordered class pair.
#[derive(Debug, Clone, Copy)]
pub struct LogRatioFunction<'a> {
    fit: &'a MdreFit,
    i: usize,
    j: usize,
}

impl<'a> LogRatioFunction<'a> {
    pub fn new(fit: &'a MdreFit, i: usize, j: usize) -> Result<Self> {
        let c = fit.score_set.n_classes();
        if i == j {
            return Err(Error::InvalidArgument(
                "ordered class pair must be distinct".into(),
            ));
        }
        if i >= c || j >= c {
            return Err(Error::InvalidArgument(format!(
                "class pair ({i}, {j}) out of range for {c} classes"
            )));
        }
        Ok(LogRatioFunction { fit, i, j })
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let h = self.fit.score_set.logits(x)?;
        Ok(h[self.i] - h[self.j])
    }

    pub fn eval_rows(&self, xs: &ArrayView2<f64>) -> Result<Array1<f64>> {
        let h = self.fit.score_set.logits_rows(xs)?;
        Ok(&h.column(self.i) - &h.column(self.j))
    }
}

/// log p/q readout of a multiclass fit: h_0(x) - h_1(x).
pub fn mdre_log_ratio(fit: &MdreFit, x: &[f64]) -> Result<f64> {
    pair_log_ratio(fit, 0, 1, x)
}

/// Logit difference h_i(x) - h_j(x) for an arbitrary ordered class pair.
pub fn pair_log_ratio(fit: &MdreFit, i: usize, j: usize, x: &[f64]) -> Result<f64> {
    LogRatioFunction::new(fit, i, j)?.eval(x)
}

/// Chained readout of a telescoping fit: the sum of link logit differences.
pub fn tre_log_ratio(fit: &TreFit, x: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for link in &fit.links {
        let h = link.score_set.logits(x)?;
        total += h[0] - h[1];
    }
    Ok(total)
}

impl FittedEstimator {
    /// log p/q readout at one point.
    pub fn log_ratio(&self, x: &[f64]) -> Result<f64> {
        match self {
            FittedEstimator::Mdre(fit) => mdre_log_ratio(fit, x),
            FittedEstimator::Bdre(fit) => {
                let h = fit.score_set.logits(x)?;
                Ok(h[0] - h[1])
            }
            FittedEstimator::Tre(fit) => tre_log_ratio(fit, x),
        }
    }

    /// log p/q readout for every row.
    pub fn log_ratio_rows(&self, xs: &ArrayView2<f64>) -> Result<Array1<f64>> {
        match self {
            FittedEstimator::Mdre(fit) => {
                let h = fit.score_set.logits_rows(xs)?;
                Ok(&h.column(0) - &h.column(1))
            }
            FittedEstimator::Bdre(fit) => {
                let h = fit.score_set.logits_rows(xs)?;
                Ok(&h.column(0) - &h.column(1))
            }
            FittedEstimator::Tre(fit) => {
                let mut total = Array1::zeros(xs.nrows());
                for link in &fit.links {
                    let h = link.score_set.logits_rows(xs)?;
                    total = total + (&h.column(0) - &h.column(1));
                }
                Ok(total)
            }
        }
    }
}

/// Mean and standard error of a set of readouts.
pub fn mean_and_stderr(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::EmptyInput(
            "need at least 2 values for a standard error".into(),
        ));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Monte Carlo KL(p || q): mean log-ratio over samples from p, with its
/// standard error.
pub fn estimate_kl(
    fit: &FittedEstimator,
    samples_from_p: &ArrayView2<f64>,
) -> Result<(f64, f64)> {
    let readout = fit.log_ratio_rows(samples_from_p)?;
    mean_and_stderr(readout.as_slice().expect("contiguous"))
}

/// KL through an arbitrary log-ratio function; the oracle route plugs exact
/// log-densities in here instead of a fit.
pub fn estimate_kl_fn<F>(mut log_ratio: F, samples_from_p: &ArrayView2<f64>) -> Result<(f64, f64)>
where
    F: FnMut(&[f64]) -> f64,
{
    if samples_from_p.nrows() < 2 {
        return Err(Error::EmptyInput("need at least 2 evaluation rows".into()));
    }
    let mut buf = vec![0.0; samples_from_p.ncols()];
    let mut values = Vec::with_capacity(samples_from_p.nrows());
    for row in samples_from_p.rows() {
        for (j, v) in row.iter().enumerate() {
            buf[j] = *v;
        }
        values.push(log_ratio(&buf));
    }
    mean_and_stderr(&values)
}

/// Which dependence structure a marginal shuffle has to break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalShuffle {
    /// Treat columns [D/2, D) as the v-half and permute those rows as a block.
    Halves,
    /// Permute every column independently; required for the adjacent-pair
    /// block covariance layout, where both halves are internally independent
    /// but pairs straddle consecutive columns.
    PerCoordinate,
}

/// Destroy cross dependence while preserving every column's marginal
/// (each column keeps the same multiset of values).
pub fn product_of_marginals(
    samples_joint: &ArrayView2<f64>,
    mode: MarginalShuffle,
    seed: u64,
) -> Result<Array2<f64>> {
    let (n, d) = (samples_joint.nrows(), samples_joint.ncols());
    if n == 0 {
        return Err(Error::EmptyInput("no joint samples to shuffle".into()));
    }
    let mut out = samples_joint.to_owned();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match mode {
        MarginalShuffle::Halves => {
            if d % 2 != 0 {
                return Err(Error::InvalidArgument(
                    "halves mode needs an even dimension".into(),
                ));
            }
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            for (i, &src) in perm.iter().enumerate() {
                for j in d / 2..d {
                    out[(i, j)] = samples_joint[(src, j)];
                }
            }
        }
        MarginalShuffle::PerCoordinate => {
            for j in 0..d {
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut rng);
                for (i, &src) in perm.iter().enumerate() {
                    out[(i, j)] = samples_joint[(src, j)];
                }
            }
        }
    }
    Ok(out)
}

/// Mutual information readout: the KL estimate of a fit trained against
/// product-of-marginals samples, averaged over joint samples.
pub fn estimate_mi(
    fit: &FittedEstimator,
    samples_joint: &ArrayView2<f64>,
) -> Result<(f64, f64)> {
    estimate_kl(fit, samples_joint)
}

/// Column means of a sample matrix; shared by the shuffle diagnostics.
pub fn column_means(xs: &ArrayView2<f64>) -> Vec<f64> {
    xs.mean_axis(Axis(0))
        .map(|m| m.to_vec())
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{column_correlation, DistributionSpec};
    use crate::scoremodel::{Score, ScoreSet, TabularScore};
    use crate::training::{MdreFit, TrainingMetadata};

    fn tabular_fit(tables: &[Vec<f64>], outcomes: Vec<f64>) -> MdreFit {
        let scores: Vec<Score> = tables
            .iter()
            .map(|t| {
                Score::Tabular(TabularScore {
                    outcomes: outcomes.clone(),
                    table: t.clone(),
                })
            })
            .collect();
        let c = scores.len();
        MdreFit {
            score_set: ScoreSet {
                scores,
                priors: vec![1.0 / c as f64; c],
                class_labels: (0..c).map(|i| format!("class{i}")).collect(),
                dim: 1,
            },
            meta: TrainingMetadata {
                final_loss: 0.0,
                best_epoch: 0,
                initial_loss: 0.0,
                diverged: false,
                train_accuracy: vec![],
                validation_accuracy: None,
                optimizer_hash: String::new(),
                seed: 0,
            },
        }
    }

    #[test]
    fn pair_ratio_antisymmetry_and_telescoping_exact() {
        // dyadic logits keep every difference and sum exactly representable,
        // so both identities must hold to the last bit
        let fit = tabular_fit(
            &[
                vec![0.75, -0.25, 1.125],
                vec![0.25, 0.875, -2.5],
                vec![-1.375, 0.0625, 0.625],
            ],
            vec![0.0, 1.0, 2.0],
        );
        for x in [0.0, 1.0, 2.0] {
            let r12 = pair_log_ratio(&fit, 0, 1, &[x]).unwrap();
            let r21 = pair_log_ratio(&fit, 1, 0, &[x]).unwrap();
            assert_eq!(r12, -r21);
            let r13 = pair_log_ratio(&fit, 0, 2, &[x]).unwrap();
            let r32 = pair_log_ratio(&fit, 2, 1, &[x]).unwrap();
            assert_eq!(r13 + r32, r12);
        }
    }

    #[test]
    fn same_class_pair_rejected() {
        let fit = tabular_fit(&[vec![0.0], vec![0.0]], vec![0.0]);
        assert!(pair_log_ratio(&fit, 1, 1, &[0.0]).is_err());
        assert!(pair_log_ratio(&fit, 0, 5, &[0.0]).is_err());
    }

    #[test]
    fn tabular_exact_fit_reads_exact_ratios() {
        let p: [f64; 2] = [0.5, 0.5];
        let q: [f64; 2] = [0.25, 0.75];
        let fit = tabular_fit(
            &[p.iter().map(|v| v.ln()).collect(), q.iter().map(|v| v.ln()).collect()],
            vec![0.0, 1.0],
        );
        let r0 = mdre_log_ratio(&fit, &[0.0]).unwrap();
        let r1 = mdre_log_ratio(&fit, &[1.0]).unwrap();
        assert!((r0 - 2f64.ln()).abs() < 1e-12);
        assert!((r1 - (2.0f64 / 3.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_ratio_gives_zero_kl() {
        let xs = Array2::from_shape_fn((100, 1), |(i, _)| i as f64);
        let (mean, se) = estimate_kl_fn(|_| 0.0, &xs.view()).unwrap();
        assert_eq!(mean, 0.0);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn exact_gaussian_ratio_recovers_true_kl() {
        let p = DistributionSpec::gaussian_1d(-1.0, 0.08);
        let q = DistributionSpec::gaussian_1d(2.0, 0.15);
        let xs = p.sample(100_000, 31).unwrap();
        let (mean, se) = estimate_kl_fn(
            |x| p.log_density(x).unwrap() - q.log_density(x).unwrap(),
            &xs.view(),
        )
        .unwrap();
        assert!(
            (mean - 200.27).abs() < 3.0 * se + 0.05,
            "mean {mean}, se {se}"
        );
    }

    #[test]
    fn marginal_shuffle_breaks_coupling_and_preserves_marginals() {
        // perfectly correlated pairs u = v
        let n = 40_000;
        let u = DistributionSpec::gaussian_1d(0.0, 1.0).sample(n, 77).unwrap();
        let mut joint = Array2::zeros((n, 2));
        for i in 0..n {
            joint[(i, 0)] = u[(i, 0)];
            joint[(i, 1)] = u[(i, 0)];
        }
        let shuffled = product_of_marginals(&joint.view(), MarginalShuffle::Halves, 3).unwrap();
        let corr = column_correlation(&shuffled.view(), 0, 1);
        assert!(corr.abs() < 4.0 / (n as f64).sqrt(), "corr {corr}");

        // columns keep their multisets
        for j in 0..2 {
            let mut a: Vec<f64> = joint.column(j).to_vec();
            let mut b: Vec<f64> = shuffled.column(j).to_vec();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn shuffle_of_independent_joint_changes_little() {
        let n = 40_000;
        let joint = DistributionSpec::gaussian_iso(2, 0.0, 1.0).sample(n, 5).unwrap();
        let before = column_correlation(&joint.view(), 0, 1);
        let after = column_correlation(
            &product_of_marginals(&joint.view(), MarginalShuffle::PerCoordinate, 8)
                .unwrap()
                .view(),
            0,
            1,
        );
        let se = 1.0 / (n as f64).sqrt();
        assert!((before - after).abs() < 4.0 * 2.0 * se);
    }
}
