//! Fitting the multiclass estimator and the binary / telescoping baselines
//! by adaptive-moment gradient descent on the multinomial cross-entropy.
//!
//! The objective is convex in the joint parameter vector (scores are linear
//! in their parameters), so initialization only affects iteration count and
//! the best-loss snapshot across epochs is returned.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::auxiliary::{build_auxiliary_samples, AuxiliaryScheme, LinearMixVariant};
use crate::error::{Error, Result};
use crate::scoremodel::{ClassedSamples, ScoreFamily, ScoreSet};
use crate::util::{derive_seed, fnv1a_64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BatchMode {
    Full,
    /// Class-stratified minibatches: every step sees max(1, size/C) samples
    /// from each class, so chunk losses stay comparable to the full loss.
    Minibatch { size: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum InitMode {
    Zeros,
    Gaussian { std: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub batch: BatchMode,
    pub seed: u64,
    pub init: InitMode,
    /// Optional per-class held-out fraction for the accuracy-band diagnostic.
    pub validation_fraction: Option<f64>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            learning_rate: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 500,
            batch: BatchMode::Full,
            seed: 0,
            init: InitMode::Zeros,
            validation_fraction: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument("learning rate must be > 0".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be >= 1".into()));
        }
        if let BatchMode::Minibatch { size } = self.batch {
            if size == 0 {
                return Err(Error::InvalidArgument("minibatch size must be >= 1".into()));
            }
        }
        if let Some(f) = self.validation_fraction {
            if !(0.0..1.0).contains(&f) {
                return Err(Error::InvalidArgument(
                    "validation fraction must lie in [0, 1)".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        let canonical = serde_json::to_value(self)
            .and_then(|v| serde_json::to_string(&v))
            .unwrap_or_default();
        format!("{:016x}", fnv1a_64(canonical.as_bytes()))
    }
}

/// What a fit records besides the parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingMetadata {
    /// Loss of the returned (best-epoch) parameters on the training set.
    pub final_loss: f64,
    pub best_epoch: usize,
    pub initial_loss: f64,
    /// Loss went non-finite; the last finite state was returned.
    pub diverged: bool,
    pub train_accuracy: Vec<f64>,
    pub validation_accuracy: Option<Vec<f64>>,
    pub optimizer_hash: String,
    pub seed: u64,
}

/// Multiclass fit: class 0 is p, class 1 is q, classes 2.. are auxiliaries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdreFit {
    pub score_set: ScoreSet,
    pub meta: TrainingMetadata,
}

/// Binary fit; the log-ratio readout is h_0 - h_1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BdreFit {
    pub score_set: ScoreSet,
    pub meta: TrainingMetadata,
}

/// Chain of binary fits along consecutive waymark pairs
/// (p, m_1), (m_1, m_2), ..., (m_K, q).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreFit {
    pub links: Vec<BdreFit>,
    pub waymark_alphas: Vec<f64>,
    pub variant: LinearMixVariant,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum FittedEstimator {
    Mdre(MdreFit),
    Bdre(BdreFit),
    Tre(TreFit),
}

impl FittedEstimator {
    pub fn method_name(&self) -> &'static str {
        match self {
            FittedEstimator::Mdre(_) => "mdre",
            FittedEstimator::Bdre(_) => "bdre",
            FittedEstimator::Tre(_) => "tre",
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}

/// Fit one score per class by minimizing the multinomial cross-entropy.
/// Returns the parameter state with the lowest recorded training loss.
pub fn fit_multiclass(
    class_samples: &[Array2<f64>],
    family: &ScoreFamily,
    priors: Option<Vec<f64>>,
    class_labels: Vec<String>,
    opt: &OptimizerConfig,
) -> Result<MdreFit> {
    opt.validate()?;
    if class_samples.len() < 2 {
        return Err(Error::InvalidArgument("need at least 2 classes".into()));
    }
    let dim = class_samples[0].ncols();
    for m in class_samples {
        if m.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: m.ncols(),
            });
        }
        if m.nrows() < 2 {
            return Err(Error::EmptyInput(
                "each class needs at least 2 samples".into(),
            ));
        }
    }

    let (train, validation) = split_train_validation(class_samples, opt)?;
    let mut set = ScoreSet::from_family(family, class_samples.len(), dim, class_labels)?;
    if let Some(p) = priors {
        set = set.with_priors(p)?;
    }

    let meta = optimize(&mut set, &train, validation.as_ref(), opt)?;
    Ok(MdreFit {
        score_set: set,
        meta,
    })
}

/// Binary special case; classes are (p, q) and the readout is h_0 - h_1.
pub fn fit_bdre(
    samples_p: &Array2<f64>,
    samples_q: &Array2<f64>,
    opt: &OptimizerConfig,
) -> Result<BdreFit> {
    let fit = fit_multiclass(
        &[samples_p.clone(), samples_q.clone()],
        &ScoreFamily::Quadratic,
        None,
        vec!["p".into(), "q".into()],
        opt,
    )?;
    Ok(BdreFit {
        score_set: fit.score_set,
        meta: fit.meta,
    })
}

/// Telescoping chain: waymarks from the linear-mix grid, one binary fit per
/// consecutive pair. An empty grid degenerates to a single binary fit.
pub fn fit_tre(
    samples_p: &Array2<f64>,
    samples_q: &Array2<f64>,
    waymark_alphas: &[f64],
    variant: LinearMixVariant,
    opt: &OptimizerConfig,
) -> Result<TreFit> {
    for w in waymark_alphas.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::InvalidArgument(
                "waymark alphas must be strictly increasing".into(),
            ));
        }
    }
    if waymark_alphas
        .iter()
        .any(|a| !(a.is_finite() && *a > 0.0 && *a < 1.0))
    {
        return Err(Error::InvalidArgument(
            "waymark alphas must lie strictly inside (0, 1)".into(),
        ));
    }

    let waymarks = if waymark_alphas.is_empty() {
        Vec::new()
    } else {
        build_auxiliary_samples(
            &AuxiliaryScheme::LinearMix {
                alphas: waymark_alphas.to_vec(),
                variant,
            },
            &samples_p.view(),
            &samples_q.view(),
            derive_seed(opt.seed, "tre-waymarks"),
        )?
    };

    let mut chain: Vec<&Array2<f64>> = Vec::with_capacity(waymarks.len() + 2);
    chain.push(samples_p);
    chain.extend(waymarks.iter());
    chain.push(samples_q);

    let mut links = Vec::with_capacity(chain.len() - 1);
    for i in 0..chain.len() - 1 {
        let mut link_opt = opt.clone();
        link_opt.seed = derive_seed(opt.seed, &format!("tre-link-{i}"));
        links.push(fit_bdre(chain[i], chain[i + 1], &link_opt)?);
    }
    Ok(TreFit {
        links,
        waymark_alphas: waymark_alphas.to_vec(),
        variant,
    })
}

fn split_train_validation(
    class_samples: &[Array2<f64>],
    opt: &OptimizerConfig,
) -> Result<(ClassedSamples, Option<ClassedSamples>)> {
    match opt.validation_fraction {
        None | Some(0.0) => Ok((ClassedSamples::from_class_matrices(class_samples)?, None)),
        Some(frac) => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opt.seed, "validation-split"));
            let mut train_parts = Vec::with_capacity(class_samples.len());
            let mut val_parts = Vec::with_capacity(class_samples.len());
            for m in class_samples {
                let n = m.nrows();
                let n_val = ((n as f64 * frac).round() as usize).clamp(1, n - 1);
                let mut idx: Vec<usize> = (0..n).collect();
                idx.shuffle(&mut rng);
                let take = |ids: &[usize]| {
                    let mut out = Array2::zeros((ids.len(), m.ncols()));
                    for (r, &i) in ids.iter().enumerate() {
                        for j in 0..m.ncols() {
                            out[(r, j)] = m[(i, j)];
                        }
                    }
                    out
                };
                val_parts.push(take(&idx[..n_val]));
                train_parts.push(take(&idx[n_val..]));
            }
            Ok((
                ClassedSamples::from_class_matrices(&train_parts)?,
                Some(ClassedSamples::from_class_matrices(&val_parts)?),
            ))
        }
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
}

impl Adam {
    fn new(n: usize, opt: &OptimizerConfig) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr: opt.learning_rate,
            beta1: opt.beta1,
            beta2: opt.beta2,
            epsilon: opt.epsilon,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

fn optimize(
    set: &mut ScoreSet,
    train: &ClassedSamples,
    validation: Option<&ClassedSamples>,
    opt: &OptimizerConfig,
) -> Result<TrainingMetadata> {
    let mut params = set.param_vector();
    if let InitMode::Gaussian { std } = opt.init {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opt.seed, "init"));
        for p in params.iter_mut() {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            *p = std * z;
        }
        set.set_param_vector(&params)?;
        params = set.param_vector();
    }

    let initial_loss = set.loss(train)?;
    let mut best_loss = initial_loss;
    let mut best_epoch = 0;
    let mut best_params = params.clone();
    let mut diverged = false;

    let mut adam = Adam::new(params.len(), opt);
    let mut epoch_rng = ChaCha8Rng::seed_from_u64(derive_seed(opt.seed, "epochs"));

    if !initial_loss.is_finite() {
        diverged = true;
    } else {
        match opt.batch {
            BatchMode::Full => {
                for epoch in 1..=opt.epochs {
                    let (loss, grad) = set.loss_gradient(train)?;
                    if !loss.is_finite() {
                        diverged = true;
                        break;
                    }
                    if loss < best_loss {
                        best_loss = loss;
                        best_epoch = epoch - 1;
                        best_params.copy_from_slice(&params);
                    }
                    adam.step(&mut params, &grad);
                    set.set_param_vector(&params)?;
                }
                // the state after the last step still needs a loss reading
                if !diverged {
                    let final_loss = set.loss(train)?;
                    if final_loss.is_finite() && final_loss < best_loss {
                        best_loss = final_loss;
                        best_epoch = opt.epochs;
                        best_params.copy_from_slice(&params);
                    } else if !final_loss.is_finite() {
                        diverged = true;
                    }
                }
            }
            BatchMode::Minibatch { size } => {
                let counts = train.class_counts();
                let per_class = (size / counts.len()).max(1);
                let max_count = *counts.iter().max().unwrap();
                let steps = max_count.div_ceil(per_class);
                // per-class index pools, reshuffled every epoch
                let mut pools: Vec<Vec<usize>> = {
                    let mut pools = vec![Vec::new(); counts.len()];
                    for (i, &y) in train.labels.iter().enumerate() {
                        pools[y].push(i);
                    }
                    pools
                };
                'epochs: for epoch in 1..=opt.epochs {
                    for pool in pools.iter_mut() {
                        pool.shuffle(&mut epoch_rng);
                    }
                    let mut epoch_loss = 0.0;
                    for step in 0..steps {
                        let mut idx = Vec::with_capacity(per_class * counts.len());
                        for pool in &pools {
                            for k in 0..per_class.min(pool.len()) {
                                idx.push(pool[(step * per_class + k) % pool.len()]);
                            }
                        }
                        let chunk = train.subset(&idx);
                        let weights = set.chunk_weights(&chunk);
                        let (loss, grad) = set.weighted_nll(&chunk, &weights, true)?;
                        let grad = grad.expect("gradient requested");
                        if !loss.is_finite() {
                            diverged = true;
                            break 'epochs;
                        }
                        epoch_loss += loss;
                        adam.step(&mut params, &grad);
                        set.set_param_vector(&params)?;
                    }
                    // recorded training loss = mean chunk loss for the epoch
                    let epoch_loss = epoch_loss / steps as f64;
                    if epoch_loss < best_loss {
                        best_loss = epoch_loss;
                        best_epoch = epoch;
                        best_params.copy_from_slice(&params);
                    }
                }
            }
        }
    }

    set.set_param_vector(&best_params)?;
    let train_accuracy = set.per_class_accuracy(train)?;
    let validation_accuracy = match validation {
        Some(v) => Some(set.per_class_accuracy(v)?),
        None => None,
    };
    Ok(TrainingMetadata {
        final_loss: best_loss,
        best_epoch,
        initial_loss,
        diverged,
        train_accuracy,
        validation_accuracy,
        optimizer_hash: opt.hash(),
        seed: opt.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DistributionSpec;
    use crate::estimators::{mdre_log_ratio, pair_log_ratio};
    use approx::assert_abs_diff_eq;

    fn quick_opt(epochs: usize) -> OptimizerConfig {
        OptimizerConfig {
            learning_rate: 0.05,
            epochs,
            ..OptimizerConfig::default()
        }
    }

    #[test]
    fn zero_init_epoch0_loss_is_ln_c() {
        let p = DistributionSpec::gaussian_1d(0.0, 1.0).sample(200, 1).unwrap();
        let q = DistributionSpec::gaussian_1d(0.5, 1.0).sample(200, 2).unwrap();
        let m = DistributionSpec::cauchy_1d(0.0, 1.0).sample(200, 3).unwrap();
        let fit = fit_multiclass(
            &[p, q, m],
            &ScoreFamily::Quadratic,
            None,
            vec![],
            &quick_opt(1),
        )
        .unwrap();
        assert_abs_diff_eq!(fit.meta.initial_loss, 3f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn identical_classes_learn_flat_ratio() {
        let n = 10_000;
        let p = DistributionSpec::gaussian_1d(0.0, 1.0).sample(n, 10).unwrap();
        let q = DistributionSpec::gaussian_1d(0.0, 1.0).sample(n, 11).unwrap();
        let fit = fit_bdre(&p, &q, &quick_opt(400)).unwrap();
        assert!((fit.meta.final_loss - 2f64.ln()).abs() < 1e-2);
        for x in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            let h = fit.score_set.logits(&[x]).unwrap();
            assert!((h[0] - h[1]).abs() < 0.2, "x={x}: {}", h[0] - h[1]);
        }
    }

    #[test]
    fn tabular_three_class_recovers_exact_log_ratios() {
        // empirical tables are exact because samples replicate outcome counts
        let outcomes = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let tables = [
            vec![0.4, 0.3, 0.1, 0.1, 0.1],
            vec![0.1, 0.2, 0.2, 0.2, 0.3],
            vec![0.2, 0.2, 0.2, 0.2, 0.2],
        ];
        let build = |p: &Vec<f64>| {
            let mut rows = Vec::new();
            for (i, w) in p.iter().enumerate() {
                for _ in 0..(w * 100.0).round() as usize {
                    rows.push(outcomes[i]);
                }
            }
            Array2::from_shape_vec((rows.len(), 1), rows).unwrap()
        };
        let classes: Vec<Array2<f64>> = tables.iter().map(build).collect();
        let opt = OptimizerConfig {
            learning_rate: 0.05,
            epochs: 4000,
            ..OptimizerConfig::default()
        };
        let fit = fit_multiclass(
            &classes,
            &ScoreFamily::Tabular {
                outcomes: outcomes.clone(),
            },
            None,
            vec![],
            &opt,
        )
        .unwrap();
        for (i, pi) in tables.iter().enumerate() {
            for (j, pj) in tables.iter().enumerate() {
                if i == j {
                    continue;
                }
                for (s, x) in outcomes.iter().enumerate() {
                    let got = pair_log_ratio(&fit, i, j, &[*x]).unwrap();
                    let want = (pi[s] / pj[s]).ln();
                    assert!(
                        (got - want).abs() < 1e-3,
                        "pair ({i},{j}) outcome {x}: got {got}, want {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn training_is_deterministic() {
        let p = DistributionSpec::gaussian_1d(-1.0, 0.5).sample(500, 4).unwrap();
        let q = DistributionSpec::gaussian_1d(1.0, 0.5).sample(500, 5).unwrap();
        let opt = OptimizerConfig {
            batch: BatchMode::Minibatch { size: 64 },
            epochs: 20,
            ..OptimizerConfig::default()
        };
        let a = fit_bdre(&p, &q, &opt).unwrap();
        let b = fit_bdre(&p, &q, &opt).unwrap();
        assert_eq!(a.score_set.param_vector(), b.score_set.param_vector());
    }

    #[test]
    fn convexity_makes_inits_agree() {
        let p = DistributionSpec::gaussian_1d(-0.5, 0.4).sample(2000, 6).unwrap();
        let q = DistributionSpec::gaussian_1d(0.5, 0.6).sample(2000, 7).unwrap();
        let mk = |init: InitMode, seed: u64| OptimizerConfig {
            learning_rate: 0.05,
            epochs: 3000,
            init,
            seed,
            ..OptimizerConfig::default()
        };
        let a = fit_bdre(&p, &q, &mk(InitMode::Zeros, 0)).unwrap();
        let b = fit_bdre(&p, &q, &mk(InitMode::Gaussian { std: 0.3 }, 99)).unwrap();
        assert!(
            (a.meta.final_loss - b.meta.final_loss).abs() < 1e-4,
            "losses {} vs {}",
            a.meta.final_loss,
            b.meta.final_loss
        );
    }

    #[test]
    fn tre_with_no_waymarks_is_a_single_bdre() {
        let p = DistributionSpec::gaussian_1d(-1.0, 0.3).sample(300, 8).unwrap();
        let q = DistributionSpec::gaussian_1d(1.0, 0.3).sample(300, 9).unwrap();
        let tre = fit_tre(&p, &q, &[], LinearMixVariant::Plain, &quick_opt(50)).unwrap();
        assert_eq!(tre.links.len(), 1);
    }

    #[test]
    fn tre_rejects_bad_waymark_grids() {
        let p = DistributionSpec::gaussian_1d(-1.0, 0.3).sample(50, 8).unwrap();
        let q = DistributionSpec::gaussian_1d(1.0, 0.3).sample(50, 9).unwrap();
        assert!(fit_tre(&p, &q, &[0.5, 0.3], LinearMixVariant::Plain, &quick_opt(5)).is_err());
        assert!(fit_tre(&p, &q, &[0.0, 0.5], LinearMixVariant::Plain, &quick_opt(5)).is_err());
    }

    #[test]
    fn validation_split_records_accuracy() {
        let p = DistributionSpec::gaussian_1d(-2.0, 0.3).sample(400, 12).unwrap();
        let q = DistributionSpec::gaussian_1d(2.0, 0.3).sample(400, 13).unwrap();
        let opt = OptimizerConfig {
            validation_fraction: Some(0.1),
            epochs: 200,
            learning_rate: 0.05,
            ..OptimizerConfig::default()
        };
        let fit = fit_bdre(&p, &q, &opt).unwrap();
        let val = fit.meta.validation_accuracy.expect("split configured");
        assert_eq!(val.len(), 2);
        // trivially separable task
        assert!(val.iter().all(|a| *a > 0.95), "{val:?}");
    }

    #[test]
    fn mdre_identity_task_symmetric_fit() {
        let n = 10_000;
        let p = DistributionSpec::gaussian_1d(0.0, 1.0).sample(n, 20).unwrap();
        let q = DistributionSpec::gaussian_1d(0.0, 1.0).sample(n, 21).unwrap();
        let m = DistributionSpec::cauchy_1d(0.0, 1.0).sample(n, 22).unwrap();
        let opt = OptimizerConfig {
            batch: BatchMode::Minibatch { size: 512 },
            epochs: 60,
            ..OptimizerConfig::default()
        };
        let fit = fit_multiclass(&[p, q, m], &ScoreFamily::Quadratic, None, vec![], &opt).unwrap();
        for x in [-1.5, 0.0, 1.5] {
            let r = mdre_log_ratio(&fit, &[x]).unwrap();
            assert!(r.abs() < 0.2, "log ratio {r} at {x}");
        }
    }
}
