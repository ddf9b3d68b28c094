//! Classifier-based density ratio estimation.
//!
//! The central estimator trains one multinomial logistic regression over
//! samples from the numerator p, the denominator q, and K auxiliary
//! distributions that overlap both; the log-ratio ln p(x)/q(x) is then read
//! off as the difference of the first two class scores. Because the
//! classifier is trained on the mixture of all K+2 distributions, the readout
//! stays valid on samples from any of them — unlike a chain of binary
//! estimators, which is only trained pairwise and degrades off its training
//! distributions.
//!
//! The crate also ships the binary (`bdre`) and telescoping (`tre`)
//! baselines, exact samplers and densities for the benchmark distributions,
//! quadrature and Monte Carlo ground-truth oracles, posterior uncertainty of
//! the log-ratio via Hamiltonian Monte Carlo, and a benchmark harness with
//! named presets and CSV output.
//!
//! ```no_run
//! use dre_core::harness::{presets, run};
//!
//! let preset = presets::preset("table1_row1").unwrap();
//! let record = run(&preset.run_config(0)).unwrap();
//! println!("true {} vs estimate {}", record.true_value, record.estimate);
//! ```

pub mod auxiliary;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod hmc;
pub mod oracle;
pub mod scoremodel;
pub mod training;
pub mod util;

pub use auxiliary::{
    build_auxiliary_samples, default_waymark_alphas, overlap_diagnostic, AuxiliaryScheme,
    LinearMixVariant, OverlapReport,
};
pub use distributions::{
    gaussian_kl, rho_for_target_mi, CovarianceSpec, DistributionSpec,
};
pub use error::{Error, Result};
pub use estimators::{
    estimate_kl, estimate_kl_fn, estimate_mi, mdre_log_ratio, pair_log_ratio,
    product_of_marginals, tre_log_ratio, LogRatioFunction, MarginalShuffle,
};
pub use harness::{
    accuracy_band, rnd_diagnostic, run, run_hmc_uncertainty, shift_diagnostic, Band,
    ExperimentConfig, MethodSpec, ResultRecord, TaskKind, TruthSpec,
};
pub use hmc::{hmc_sample, log_posterior, ratio_uncertainty, HmcConfig, PosteriorRatioStats};
pub use oracle::{exact_tabular_ratios, mc_kl, quadrature_kl_1d, McKl, QuadratureGrid, QuadratureKl};
pub use scoremodel::{ClassedSamples, QuadraticScore, Score, ScoreFamily, ScoreSet, TabularScore};
pub use training::{
    fit_bdre, fit_multiclass, fit_tre, BatchMode, BdreFit, FittedEstimator, InitMode, MdreFit,
    OptimizerConfig, TreFit,
};
