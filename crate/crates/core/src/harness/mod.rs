//! Experiment configuration, the end-to-end pipeline
//! (sample -> build auxiliaries -> fit -> estimate -> compare to truth),
//! diagnostics, and result records.

pub mod presets;

use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::auxiliary::{build_auxiliary_samples, AuxiliaryScheme, LinearMixVariant};
use crate::auxiliary::linear_mix_gaussian_spec;
use crate::distributions::{gaussian_kl, DistributionSpec};
use crate::error::{Error, Result};
use crate::estimators::{estimate_kl, product_of_marginals, MarginalShuffle};
use crate::hmc::{hmc_sample, ratio_uncertainty, HmcConfig, PosteriorRatioStats};
use crate::oracle::{mc_kl, quadrature_kl_1d};
use crate::scoremodel::{ClassedSamples, ScoreFamily};
use crate::training::{fit_bdre, fit_multiclass, fit_tre, FittedEstimator, OptimizerConfig};
use crate::util::{derive_seed, fnv1a_64, format_sig6};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    #[serde(rename = "kl_1d")]
    Kl1d,
    MiHighdim,
    Robustness,
    ShiftDiagnostic,
    HmcUncertainty,
}

impl TaskKind {
    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::Kl1d => "kl_1d",
            TaskKind::MiHighdim => "mi_highdim",
            TaskKind::Robustness => "robustness",
            TaskKind::ShiftDiagnostic => "shift_diagnostic",
            TaskKind::HmcUncertainty => "hmc_uncertainty",
        }
    }
}

/// Estimation method plus its method-specific options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MethodSpec {
    Mdre { auxiliary: AuxiliaryScheme },
    Bdre,
    Tre {
        waymark_alphas: Vec<f64>,
        variant: LinearMixVariant,
    },
}

impl MethodSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MethodSpec::Mdre { .. } => "mdre",
            MethodSpec::Bdre => "bdre",
            MethodSpec::Tre { .. } => "tre",
        }
    }
}

/// Where the reference value comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum TruthSpec {
    GaussianClosedForm,
    Quadrature1d,
    MonteCarlo { n: usize },
    Known { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Read the ratio on fresh p-samples instead of the training set.
    pub heldout: bool,
    pub eval_samples: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            heldout: true,
            eval_samples: 10_000,
        }
    }
}

/// One benchmark run, fully specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub task: TaskKind,
    pub p: DistributionSpec,
    pub q: DistributionSpec,
    pub method: MethodSpec,
    pub samples_per_class: usize,
    pub optimizer: OptimizerConfig,
    pub eval: EvalConfig,
    pub truth: TruthSpec,
    pub seed: u64,
    /// MI tasks may draw q-samples by shuffling fresh p-samples instead of
    /// sampling the q spec.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_from_marginal_shuffle: Option<MarginalShuffle>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hmc: Option<HmcConfig>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.p.validate()?;
        self.q.validate()?;
        if self.p.dim() != self.q.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.p.dim(),
                got: self.q.dim(),
            });
        }
        if self.samples_per_class < 100 {
            return Err(Error::Config(
                "samples_per_class must be at least 100".into(),
            ));
        }
        if self.eval.eval_samples < 2 {
            return Err(Error::Config("eval_samples must be at least 2".into()));
        }
        self.optimizer.validate()?;
        match &self.method {
            MethodSpec::Mdre { auxiliary } => auxiliary.validate(self.p.dim())?,
            MethodSpec::Bdre => {}
            MethodSpec::Tre { waymark_alphas, .. } => {
                if waymark_alphas
                    .iter()
                    .any(|a| !(a.is_finite() && *a > 0.0 && *a < 1.0))
                {
                    return Err(Error::Config(
                        "waymark alphas must lie strictly inside (0, 1)".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Stable 64-bit hash of the canonical (sorted-key) JSON serialization.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_value(self)
            .and_then(|v| serde_json::to_string(&v))
            .unwrap_or_default();
        format!("{:016x}", fnv1a_64(canonical.as_bytes()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}

/// One benchmark outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config_hash: String,
    pub seed: u64,
    pub method: String,
    pub task: String,
    pub true_value: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub runtime_s: f64,
    pub train_accuracy: Vec<f64>,
    pub validation_accuracy: Option<Vec<f64>>,
    pub notes: String,
}

impl ResultRecord {
    pub fn csv_header() -> &'static str {
        "config_hash,seed,method,task,true_value,estimate,stderr,runtime_s,notes"
    }

    /// Fixed 9-column row; accuracies travel in the notes field.
    pub fn to_csv_row(&self) -> String {
        let mut notes = self.notes.clone();
        if !self.train_accuracy.is_empty() {
            let acc: Vec<String> = self
                .train_accuracy
                .iter()
                .map(|a| format!("{a:.4}"))
                .collect();
            if !notes.is_empty() {
                notes.push_str("; ");
            }
            notes.push_str(&format!("train_acc=[{}]", acc.join(" ")));
        }
        if let Some(val) = &self.validation_accuracy {
            let acc: Vec<String> = val.iter().map(|a| format!("{a:.4}")).collect();
            notes.push_str(&format!("; val_acc=[{}]", acc.join(" ")));
        }
        format!(
            "{},{},{},{},{},{},{},{},\"{}\"",
            self.config_hash,
            self.seed,
            self.method,
            self.task,
            format_sig6(self.true_value),
            format_sig6(self.estimate),
            format_sig6(self.stderr),
            format_sig6(self.runtime_s),
            notes.replace('"', "\"\"")
        )
    }
}

/// Sample p and q and every auxiliary class; returns per-class matrices and
/// their labels (p, q, then auxiliaries).
fn assemble_classes(config: &ExperimentConfig) -> Result<(Vec<Array2<f64>>, Vec<String>)> {
    let n = config.samples_per_class;
    let p_samples = config
        .p
        .sample(n, derive_seed(config.seed, "sample-p"))
        .map_err(|e| e.in_stage("sample"))?;
    let q_samples = match config.q_from_marginal_shuffle {
        None => config
            .q
            .sample(n, derive_seed(config.seed, "sample-q"))
            .map_err(|e| e.in_stage("sample"))?,
        Some(mode) => {
            let base = config
                .p
                .sample(n, derive_seed(config.seed, "marginal-base"))
                .map_err(|e| e.in_stage("sample"))?;
            product_of_marginals(&base.view(), mode, derive_seed(config.seed, "marginal-shuffle"))
                .map_err(|e| e.in_stage("sample"))?
        }
    };

    let mut classes = vec![p_samples, q_samples];
    let mut labels = vec!["p".to_string(), "q".to_string()];
    if let MethodSpec::Mdre { auxiliary } = &config.method {
        let aux = build_auxiliary_samples(
            auxiliary,
            &classes[0].view(),
            &classes[1].view(),
            derive_seed(config.seed, "auxiliary"),
        )
        .map_err(|e| e.in_stage("auxiliary"))?;
        for (k, m) in aux.into_iter().enumerate() {
            classes.push(m);
            labels.push(format!("m{}", k + 1));
        }
    }
    Ok((classes, labels))
}

fn fit_estimator(
    config: &ExperimentConfig,
    classes: &[Array2<f64>],
    labels: &[String],
) -> Result<FittedEstimator> {
    let mut opt = config.optimizer.clone();
    opt.seed = derive_seed(config.seed, "fit");
    let fitted = match &config.method {
        MethodSpec::Mdre { .. } => FittedEstimator::Mdre(
            fit_multiclass(
                classes,
                &ScoreFamily::Quadratic,
                None,
                labels.to_vec(),
                &opt,
            )
            .map_err(|e| e.in_stage("fit"))?,
        ),
        MethodSpec::Bdre => FittedEstimator::Bdre(
            fit_bdre(&classes[0], &classes[1], &opt).map_err(|e| e.in_stage("fit"))?,
        ),
        MethodSpec::Tre {
            waymark_alphas,
            variant,
        } => FittedEstimator::Tre(
            fit_tre(&classes[0], &classes[1], waymark_alphas, *variant, &opt)
                .map_err(|e| e.in_stage("fit"))?,
        ),
    };
    Ok(fitted)
}

fn truth_value(config: &ExperimentConfig) -> Result<f64> {
    let v = match &config.truth {
        TruthSpec::GaussianClosedForm => {
            gaussian_kl(&config.p, &config.q).map_err(|e| e.in_stage("truth"))?
        }
        TruthSpec::Quadrature1d => {
            quadrature_kl_1d(&config.p, &config.q, None)
                .map_err(|e| e.in_stage("truth"))?
                .value
        }
        TruthSpec::MonteCarlo { n } => {
            mc_kl(&config.p, &config.q, *n, derive_seed(config.seed, "truth"))
                .map_err(|e| e.in_stage("truth"))?
                .estimate
        }
        TruthSpec::Known { value } => *value,
    };
    Ok(v)
}

/// Full pipeline for one config: sample, build auxiliaries, fit, read the
/// ratio on (held-out) p-samples, and compare to the oracle truth.
pub fn run(config: &ExperimentConfig) -> Result<ResultRecord> {
    let start = Instant::now();
    config.validate().map_err(|e| e.in_stage("config"))?;

    let (classes, labels) = assemble_classes(config)?;
    let fitted = fit_estimator(config, &classes, &labels)?;

    let eval_samples = if config.eval.heldout {
        config
            .p
            .sample(config.eval.eval_samples, derive_seed(config.seed, "eval"))
            .map_err(|e| e.in_stage("evaluate"))?
    } else {
        classes[0].clone()
    };
    let (estimate, stderr) =
        estimate_kl(&fitted, &eval_samples.view()).map_err(|e| e.in_stage("evaluate"))?;

    let true_value = truth_value(config)?;

    let (train_accuracy, validation_accuracy, mut notes) = match &fitted {
        FittedEstimator::Mdre(f) => (
            f.meta.train_accuracy.clone(),
            f.meta.validation_accuracy.clone(),
            String::new(),
        ),
        FittedEstimator::Bdre(f) => (
            f.meta.train_accuracy.clone(),
            f.meta.validation_accuracy.clone(),
            String::new(),
        ),
        FittedEstimator::Tre(f) => (
            vec![],
            None,
            format!("links={}", f.links.len()),
        ),
    };
    if let Some(val) = &validation_accuracy {
        let band = accuracy_band(val)?;
        if !notes.is_empty() {
            notes.push_str("; ");
        }
        notes.push_str(&format!("band={}", band.verdict.name()));
    }

    Ok(ResultRecord {
        config_hash: config.config_hash(),
        seed: config.seed,
        method: config.method.name().to_string(),
        task: config.task.name().to_string(),
        true_value,
        estimate,
        stderr,
        runtime_s: start.elapsed().as_secs_f64(),
        train_accuracy,
        validation_accuracy,
        notes,
    })
}

/// Run a pipeline and also hand back the fitted estimator (model export).
pub fn run_with_fit(config: &ExperimentConfig) -> Result<(ResultRecord, FittedEstimator)> {
    config.validate().map_err(|e| e.in_stage("config"))?;
    let start = Instant::now();
    let (classes, labels) = assemble_classes(config)?;
    let fitted = fit_estimator(config, &classes, &labels)?;
    let eval_samples = if config.eval.heldout {
        config
            .p
            .sample(config.eval.eval_samples, derive_seed(config.seed, "eval"))
            .map_err(|e| e.in_stage("evaluate"))?
    } else {
        classes[0].clone()
    };
    let (estimate, stderr) =
        estimate_kl(&fitted, &eval_samples.view()).map_err(|e| e.in_stage("evaluate"))?;
    let true_value = truth_value(config)?;
    let record = ResultRecord {
        config_hash: config.config_hash(),
        seed: config.seed,
        method: config.method.name().to_string(),
        task: config.task.name().to_string(),
        true_value,
        estimate,
        stderr,
        runtime_s: start.elapsed().as_secs_f64(),
        train_accuracy: vec![],
        validation_accuracy: None,
        notes: String::new(),
    };
    Ok((record, fitted))
}

/// One point of the train-eval shift scatter data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShiftRow {
    /// "tre_link_<i>", "tre_chain", or "mdre".
    pub series: String,
    /// Which distribution the evaluation point was drawn from.
    pub eval_dist: String,
    pub x: f64,
    pub estimated: f64,
    pub truth: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ShiftDataset {
    pub rows: Vec<ShiftRow>,
}

impl ShiftDataset {
    pub fn csv_header() -> &'static str {
        "series,eval_dist,x,estimated,truth"
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::csv_header());
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.series,
                r.eval_dist,
                format_sig6(r.x),
                format_sig6(r.estimated),
                format_sig6(r.truth)
            ));
        }
        out
    }

    /// Mean |estimated - truth| over one (series, eval_dist) cell.
    pub fn mean_abs_error(&self, series: &str, eval_dist: &str) -> Option<f64> {
        let vals: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.series == series && r.eval_dist == eval_dist)
            .map(|r| (r.estimated - r.truth).abs())
            .collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }
}

/// Scatter data reproducing the train-eval distribution-shift comparison:
/// per-link readouts on their own training distributions, the chained (or
/// multiclass) readout on samples from every distribution in the chain, and
/// the exact log-ratios beside them. 1D Gaussian tasks only (the waymark
/// densities need a closed form).
pub fn shift_diagnostic(config: &ExperimentConfig) -> Result<ShiftDataset> {
    config.validate().map_err(|e| e.in_stage("config"))?;
    if config.p.dim() != 1 {
        return Err(Error::Config(
            "shift diagnostic is defined for the 1D task".into(),
        ));
    }
    let n_eval = config.eval.eval_samples.min(2_000);
    let mut dataset = ShiftDataset::default();

    let (classes, labels) = assemble_classes(config)?;
    let fitted = fit_estimator(config, &classes, &labels)?;

    let true_pq = |x: &[f64]| -> Result<f64> {
        Ok(config.p.log_density(x)? - config.q.log_density(x)?)
    };

    match (&config.method, &fitted) {
        (
            MethodSpec::Tre {
                waymark_alphas,
                variant,
            },
            FittedEstimator::Tre(tre),
        ) => {
            // chain distributions p, m_1.., q with their closed-form specs
            let mut chain_specs = vec![config.p.clone()];
            let mut chain_names = vec!["p".to_string()];
            for (k, alpha) in waymark_alphas.iter().enumerate() {
                chain_specs.push(linear_mix_gaussian_spec(
                    &config.p, &config.q, *alpha, *variant,
                )?);
                chain_names.push(format!("m{}", k + 1));
            }
            chain_specs.push(config.q.clone());
            chain_names.push("q".to_string());

            let eval_sets: Vec<Array2<f64>> = chain_specs
                .iter()
                .enumerate()
                .map(|(i, s)| s.sample(n_eval, derive_seed(config.seed, &format!("shift-eval-{i}"))))
                .collect::<Result<_>>()?;

            // each link on its own denominator samples
            for (i, link) in tre.links.iter().enumerate() {
                let denom_idx = i + 1;
                let xs = &eval_sets[denom_idx];
                let h = link.score_set.logits_rows(&xs.view())?;
                for r in 0..xs.nrows() {
                    let x = [xs[(r, 0)]];
                    let truth = chain_specs[i].log_density(&x)?
                        - chain_specs[denom_idx].log_density(&x)?;
                    dataset.rows.push(ShiftRow {
                        series: format!("tre_link_{}", i + 1),
                        eval_dist: chain_names[denom_idx].clone(),
                        x: x[0],
                        estimated: h[(r, 0)] - h[(r, 1)],
                        truth,
                    });
                }
            }

            // chained readout on samples from every distribution
            for (d, xs) in eval_sets.iter().enumerate() {
                let readout = fitted.log_ratio_rows(&xs.view())?;
                for r in 0..xs.nrows() {
                    let x = [xs[(r, 0)]];
                    dataset.rows.push(ShiftRow {
                        series: "tre_chain".to_string(),
                        eval_dist: chain_names[d].clone(),
                        x: x[0],
                        estimated: readout[r],
                        truth: true_pq(&x)?,
                    });
                }
            }
        }
        (MethodSpec::Mdre { auxiliary }, FittedEstimator::Mdre(_)) => {
            let mut eval_specs = vec![("p".to_string(), config.p.clone())];
            match auxiliary {
                AuxiliaryScheme::Overlapping { spec } => {
                    eval_specs.push(("m1".to_string(), spec.clone()));
                }
                AuxiliaryScheme::LinearMix { alphas, variant } => {
                    for (k, alpha) in alphas.iter().enumerate() {
                        eval_specs.push((
                            format!("m{}", k + 1),
                            linear_mix_gaussian_spec(&config.p, &config.q, *alpha, *variant)?,
                        ));
                    }
                }
                AuxiliaryScheme::DimensionWiseMix { .. } => {
                    return Err(Error::Config(
                        "shift diagnostic needs overlapping or linear-mix auxiliaries".into(),
                    ));
                }
            }
            eval_specs.push(("q".to_string(), config.q.clone()));

            for (i, (name, spec)) in eval_specs.iter().enumerate() {
                let xs =
                    spec.sample(n_eval, derive_seed(config.seed, &format!("shift-eval-{i}")))?;
                let readout = fitted.log_ratio_rows(&xs.view())?;
                for r in 0..xs.nrows() {
                    let x = [xs[(r, 0)]];
                    dataset.rows.push(ShiftRow {
                        series: "mdre".to_string(),
                        eval_dist: name.clone(),
                        x: x[0],
                        estimated: readout[r],
                        truth: true_pq(&x)?,
                    });
                }
            }
        }
        _ => {
            return Err(Error::Config(
                "shift diagnostic supports tre and mdre methods".into(),
            ));
        }
    }
    Ok(dataset)
}

/// Band verdict for the per-class validation accuracies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    TooEasy,
    TooHard,
    InBand,
}

impl Band {
    pub fn name(&self) -> &'static str {
        match self {
            Band::TooEasy => "too_easy",
            Band::TooHard => "too_hard",
            Band::InBand => "in_band",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandVerdict {
    pub per_class: Vec<f64>,
    pub verdict: Band,
}

/// Classification-difficulty heuristic: accuracies above 95% for every class
/// mean the problem is too easy for ratio estimation, below 50% for every
/// class too hard; anything else is in band.
pub fn accuracy_band(accuracies: &[f64]) -> Result<BandVerdict> {
    if accuracies.is_empty() {
        return Err(Error::Config(
            "no validation split configured; accuracies missing".into(),
        ));
    }
    let verdict = if accuracies.iter().all(|a| *a > 0.95) {
        Band::TooEasy
    } else if accuracies.iter().all(|a| *a < 0.50) {
        Band::TooHard
    } else {
        Band::InBand
    };
    Ok(BandVerdict {
        per_class: accuracies.to_vec(),
        verdict,
    })
}

/// Support check for the telescoping decomposition on finite-support tasks:
/// ln m - ln q evaluated on m-samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RndReport {
    pub n_samples: usize,
    /// m-samples where q has zero density (the ratio is undefined).
    pub m_over_q_infinite: usize,
    /// m-samples where the finite ratio exceeds the threshold.
    pub m_over_q_above_threshold: usize,
    /// p-samples outside m's support (the p/m leg of the chain).
    pub p_outside_m: usize,
    pub threshold: f64,
    pub max_finite_log_ratio: f64,
}

/// Evaluate dM/dQ existence empirically; reproduces the finite-support
/// blow-up demonstration.
pub fn rnd_diagnostic(
    p: &DistributionSpec,
    q: &DistributionSpec,
    m: &DistributionSpec,
    n_samples: usize,
    threshold: f64,
    seed: u64,
) -> Result<RndReport> {
    if p.dim() != 1 || q.dim() != 1 || m.dim() != 1 {
        return Err(Error::InvalidArgument(
            "the support diagnostic handles 1D specs".into(),
        ));
    }
    let m_samples = m.sample(n_samples, derive_seed(seed, "rnd-m"))?;
    let lm = m.log_density_rows(&m_samples.view())?;
    let lq = q.log_density_rows(&m_samples.view())?;
    let mut infinite = 0usize;
    let mut above = 0usize;
    let mut max_finite = f64::NEG_INFINITY;
    for i in 0..n_samples {
        let ratio = lm[i] - lq[i];
        if lq[i] == f64::NEG_INFINITY {
            infinite += 1;
        } else {
            if ratio > threshold {
                above += 1;
            }
            if ratio > max_finite {
                max_finite = ratio;
            }
        }
    }
    let p_samples = p.sample(n_samples, derive_seed(seed, "rnd-p"))?;
    let lm_on_p = m.log_density_rows(&p_samples.view())?;
    let p_outside_m = lm_on_p
        .iter()
        .filter(|v| **v == f64::NEG_INFINITY)
        .count();
    Ok(RndReport {
        n_samples,
        m_over_q_infinite: infinite,
        m_over_q_above_threshold: above,
        p_outside_m,
        threshold,
        max_finite_log_ratio: max_finite,
    })
}

/// Posterior log-ratio uncertainty over a 1D evaluation grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HmcUncertaintyResult {
    pub stats: PosteriorRatioStats,
    pub acceptance_rate: f64,
    pub median_abs_energy_error: f64,
    /// Point-estimate readout of the maximum-likelihood fit at the grid.
    pub point_estimate: Vec<f64>,
}

impl HmcUncertaintyResult {
    pub fn csv_header() -> &'static str {
        "x,posterior_mean,posterior_std"
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::csv_header());
        out.push('\n');
        for (i, pt) in self.stats.points.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                format_sig6(pt[0]),
                format_sig6(self.stats.mean[i]),
                format_sig6(self.stats.std[i])
            ));
        }
        out
    }
}

/// Fit the multiclass estimator, then sample classifier parameters from the
/// posterior (normal prior) and summarize the log-ratio per grid point.
pub fn run_hmc_uncertainty(
    config: &ExperimentConfig,
    grid: &[f64],
) -> Result<HmcUncertaintyResult> {
    config.validate().map_err(|e| e.in_stage("config"))?;
    if config.p.dim() != 1 {
        return Err(Error::Config(
            "the posterior-uncertainty task is defined for 1D setups".into(),
        ));
    }
    if grid.len() < 2 {
        return Err(Error::Config("need at least two grid points".into()));
    }
    let (classes, labels) = assemble_classes(config)?;
    let fitted = fit_estimator(config, &classes, &labels)?;
    let mdre = match &fitted {
        FittedEstimator::Mdre(f) => f,
        _ => {
            return Err(Error::Config(
                "posterior uncertainty is computed for the multiclass method".into(),
            ))
        }
    };

    let data = ClassedSamples::from_class_matrices(&classes).map_err(|e| e.in_stage("hmc"))?;
    let mut hmc_cfg = config.hmc.clone().unwrap_or_default();
    hmc_cfg.seed = derive_seed(config.seed, "hmc");
    let init = mdre.score_set.param_vector();
    let run = hmc_sample(&data, &init, &mdre.score_set, &hmc_cfg)
        .map_err(|e| e.in_stage("hmc"))?;

    let points = Array2::from_shape_fn((grid.len(), 1), |(i, _)| grid[i]);
    let stats = ratio_uncertainty(&mdre.score_set, &run.draws, &points.view())
        .map_err(|e| e.in_stage("hmc"))?;
    let point_estimate: Vec<f64> = grid
        .iter()
        .map(|x| crate::estimators::mdre_log_ratio(mdre, &[*x]))
        .collect::<Result<_>>()?;

    Ok(HmcUncertaintyResult {
        stats,
        acceptance_rate: run.acceptance_rate,
        median_abs_energy_error: run.median_abs_energy_error,
        point_estimate,
    })
}
