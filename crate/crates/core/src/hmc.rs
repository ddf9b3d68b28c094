//! Bayesian uncertainty of log-ratio estimates: Hamiltonian Monte Carlo over
//! the classifier parameters with a standard normal prior.
//!
//! The posterior is the data *sum* of log P(y|x; theta) minus the Gaussian
//! prior penalty, so posterior concentration scales with the sample count.
//! Leapfrog with an identity mass matrix and a Metropolis correction; a
//! non-finite Hamiltonian rejects the step rather than aborting the chain.

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoremodel::{ClassedSamples, ScoreSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmcConfig {
    pub step_size: f64,
    pub leapfrog_steps: usize,
    pub n_samples: usize,
    pub burn_in: usize,
    pub prior_std: f64,
    pub seed: u64,
}

impl Default for HmcConfig {
    fn default() -> Self {
        HmcConfig {
            step_size: 1e-3,
            leapfrog_steps: 20,
            n_samples: 500,
            burn_in: 200,
            prior_std: 1.0,
            seed: 0,
        }
    }
}

impl HmcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::InvalidArgument("step size must be > 0".into()));
        }
        if self.leapfrog_steps == 0 {
            return Err(Error::InvalidArgument("leapfrog steps must be >= 1".into()));
        }
        if self.n_samples == 0 {
            return Err(Error::InvalidArgument("n_samples must be >= 1".into()));
        }
        if !(self.prior_std.is_finite() && self.prior_std > 0.0) {
            return Err(Error::InvalidArgument("prior std must be > 0".into()));
        }
        Ok(())
    }
}

/// Unnormalized log posterior: sum_i log P(y_i|x_i; theta) - |theta|^2 / (2 s^2).
pub fn log_posterior(
    template: &ScoreSet,
    params: &[f64],
    data: &ClassedSamples,
    prior_std: f64,
) -> Result<f64> {
    let (lp, _) = log_posterior_grad_impl(template, params, data, prior_std, false)?;
    Ok(lp)
}

/// Log posterior and its gradient with respect to the flattened parameters.
pub fn log_posterior_grad(
    template: &ScoreSet,
    params: &[f64],
    data: &ClassedSamples,
    prior_std: f64,
) -> Result<(f64, Vec<f64>)> {
    let (lp, grad) = log_posterior_grad_impl(template, params, data, prior_std, true)?;
    Ok((lp, grad.expect("gradient requested")))
}

fn log_posterior_grad_impl(
    template: &ScoreSet,
    params: &[f64],
    data: &ClassedSamples,
    prior_std: f64,
    want_grad: bool,
) -> Result<(f64, Option<Vec<f64>>)> {
    let mut set = template.clone();
    set.set_param_vector(params)?;
    // unit weights make the weighted NLL the plain data sum
    let weights = vec![1.0; data.len()];
    let (nll, nll_grad) = set.weighted_nll(data, &weights, want_grad)?;
    let var = prior_std * prior_std;
    let prior: f64 = params.iter().map(|t| t * t).sum::<f64>() / (2.0 * var);
    let lp = -nll - prior;
    let grad = nll_grad.map(|g| {
        // note: set_param_vector symmetrized W1, so take the gradient at the
        // stored (symmetric) point
        g.iter()
            .zip(params)
            .map(|(gn, t)| -gn - t / var)
            .collect()
    });
    Ok((lp, grad))
}

/// Parameter draws plus chain health numbers.
#[derive(Debug, Clone)]
pub struct HmcRun {
    /// Post-burn-in draws, one row per sample.
    pub draws: Array2<f64>,
    pub acceptance_rate: f64,
    /// Median |Delta H| across accepted trajectories.
    pub median_abs_energy_error: f64,
}

/// Standard leapfrog HMC with identity mass matrix, deterministic per seed.
/// `init` is typically the maximum-likelihood fit.
pub fn hmc_sample(
    data: &ClassedSamples,
    init: &[f64],
    template: &ScoreSet,
    cfg: &HmcConfig,
) -> Result<HmcRun> {
    cfg.validate()?;
    if init.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "initial parameters must be finite".into(),
        ));
    }
    if init.len() != template.n_params() {
        return Err(Error::DimensionMismatch {
            expected: template.n_params(),
            got: init.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dim = init.len();
    let mut position = init.to_vec();
    let (mut log_post, mut grad) = log_posterior_grad(template, &position, data, cfg.prior_std)?;

    let total = cfg.burn_in + cfg.n_samples;
    let mut draws = Array2::zeros((cfg.n_samples, dim));
    let mut accepted = 0usize;
    let mut energy_errors: Vec<f64> = Vec::new();

    for iter in 0..total {
        let momentum: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let kinetic0: f64 = momentum.iter().map(|p| p * p).sum::<f64>() / 2.0;
        let h0 = -log_post + kinetic0;

        let mut q = position.clone();
        let mut p = momentum;
        let mut g = grad.clone();
        let mut lp = log_post;
        let eps = cfg.step_size;

        // leapfrog: half step on momentum, full on position, half on momentum
        let mut finite = true;
        for _ in 0..cfg.leapfrog_steps {
            for i in 0..dim {
                p[i] += 0.5 * eps * g[i];
            }
            for i in 0..dim {
                q[i] += eps * p[i];
            }
            if q.iter().any(|v| !v.is_finite()) {
                finite = false;
                break;
            }
            match log_posterior_grad(template, &q, data, cfg.prior_std) {
                Ok((new_lp, new_g)) => {
                    lp = new_lp;
                    g = new_g;
                }
                Err(_) => {
                    finite = false;
                    break;
                }
            }
            if !lp.is_finite() {
                finite = false;
                break;
            }
            for i in 0..dim {
                p[i] += 0.5 * eps * g[i];
            }
        }

        let accept = if finite {
            let kinetic1: f64 = p.iter().map(|v| v * v).sum::<f64>() / 2.0;
            let h1 = -lp + kinetic1;
            if !h1.is_finite() {
                false
            } else {
                let log_alpha = h0 - h1;
                let u: f64 = rng.random();
                let ok = log_alpha >= 0.0 || u.ln() < log_alpha;
                if ok {
                    energy_errors.push((h1 - h0).abs());
                }
                ok
            }
        } else {
            false
        };

        if accept {
            position = q;
            log_post = lp;
            grad = g;
            accepted += 1;
        }
        if iter >= cfg.burn_in {
            for i in 0..dim {
                draws[(iter - cfg.burn_in, i)] = position[i];
            }
        }
    }

    energy_errors.sort_by(f64::total_cmp);
    let median = if energy_errors.is_empty() {
        f64::INFINITY
    } else {
        energy_errors[energy_errors.len() / 2]
    };
    Ok(HmcRun {
        draws,
        acceptance_rate: accepted as f64 / total as f64,
        median_abs_energy_error: median,
    })
}

/// Posterior mean and standard deviation of the p/q log-ratio per point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PosteriorRatioStats {
    pub points: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Evaluate h_0 - h_1 under every parameter draw and summarize per point.
pub fn ratio_uncertainty(
    template: &ScoreSet,
    draws: &Array2<f64>,
    eval_points: &ArrayView2<f64>,
) -> Result<PosteriorRatioStats> {
    if draws.nrows() < 2 {
        return Err(Error::EmptyInput("need at least 2 posterior draws".into()));
    }
    let n_points = eval_points.nrows();
    let mut mean = Array1::<f64>::zeros(n_points);
    let mut m2 = Array1::<f64>::zeros(n_points);
    let mut set = template.clone();
    let mut count = 0.0;
    for draw in draws.rows() {
        set.set_param_vector(draw.as_slice().expect("contiguous draws"))?;
        let h = set.logits_rows(eval_points)?;
        count += 1.0;
        for i in 0..n_points {
            let r = h[(i, 0)] - h[(i, 1)];
            let delta = r - mean[i];
            mean[i] += delta / count;
            m2[i] += delta * (r - mean[i]);
        }
    }
    let std: Vec<f64> = m2.iter().map(|v| (v / (count - 1.0)).sqrt()).collect();
    Ok(PosteriorRatioStats {
        points: eval_points
            .rows()
            .into_iter()
            .map(|r| r.to_vec())
            .collect(),
        mean: mean.to_vec(),
        std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;

    fn empty_data(n_classes: usize) -> ClassedSamples {
        ClassedSamples {
            xs: Array2::zeros((0, 1)),
            labels: vec![],
            n_classes,
        }
    }

    fn template(c: usize) -> ScoreSet {
        ScoreSet::new_quadratic(c, 1, vec![]).unwrap()
    }

    #[test]
    fn log_posterior_zero_params_is_minus_n_ln_c() {
        let t = template(3);
        let xs = Array2::from_shape_fn((30, 1), |(i, _)| i as f64 * 0.1);
        let data = ClassedSamples {
            xs,
            labels: (0..30).map(|i| i % 3).collect(),
            n_classes: 3,
        };
        let lp = log_posterior(&t, &vec![0.0; t.n_params()], &data, 1.0).unwrap();
        assert_abs_diff_eq!(lp, -30.0 * 3f64.ln(), epsilon = 1e-10);
    }

    #[test]
    fn prior_term_alone() {
        let t = template(2);
        let mut params = vec![0.0; t.n_params()];
        params[0] = 1.0; // |theta| = 1
        let lp = log_posterior(&t, &params, &empty_data(2), 1.0).unwrap();
        assert_abs_diff_eq!(lp, -0.5, epsilon = 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let t = template(3);
        let xs = Array2::from_shape_fn((12, 1), |(i, _)| (i as f64) * 0.3 - 2.0);
        let data = ClassedSamples {
            xs,
            labels: (0..12).map(|i| i % 3).collect(),
            n_classes: 3,
        };
        let params: Vec<f64> = (0..t.n_params()).map(|i| 0.05 * i as f64 - 0.2).collect();
        let (_, grad) = log_posterior_grad(&t, &params, &data, 0.7).unwrap();
        let h = 1e-5;
        for i in 0..params.len() {
            let mut plus = params.clone();
            plus[i] += h;
            let mut minus = params.clone();
            minus[i] -= h;
            let fd = (log_posterior(&t, &plus, &data, 0.7).unwrap()
                - log_posterior(&t, &minus, &data, 0.7).unwrap())
                / (2.0 * h);
            let denom = grad[i].abs().max(1.0);
            assert!(
                (grad[i] - fd).abs() / denom < 1e-5,
                "param {i}: analytic {} vs fd {fd}",
                grad[i]
            );
        }
    }

    #[test]
    fn pure_prior_target_recovers_prior_moments() {
        let t = template(2);
        let dim = t.n_params();
        let cfg = HmcConfig {
            step_size: 0.45,
            leapfrog_steps: 16,
            n_samples: 2000,
            burn_in: 300,
            seed: 4,
            ..HmcConfig::default()
        };
        let run = hmc_sample(&empty_data(2), &vec![0.0; dim], &t, &cfg).unwrap();
        assert!(run.acceptance_rate > 0.5, "rate {}", run.acceptance_rate);
        let col0: Vec<f64> = run.draws.column(0).to_vec();
        let mean = col0.iter().sum::<f64>() / col0.len() as f64;
        let var = col0.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (col0.len() - 1) as f64;
        // autocorrelated draws; allow a few nominal standard errors
        assert!(mean.abs() < 0.15, "mean {mean}");
        assert!((var - 1.0).abs() < 0.2, "variance {var}");
    }

    #[test]
    fn chains_are_deterministic() {
        let t = template(2);
        let dim = t.n_params();
        let cfg = HmcConfig {
            step_size: 0.3,
            n_samples: 50,
            burn_in: 10,
            seed: 9,
            ..HmcConfig::default()
        };
        let a = hmc_sample(&empty_data(2), &vec![0.0; dim], &t, &cfg).unwrap();
        let b = hmc_sample(&empty_data(2), &vec![0.0; dim], &t, &cfg).unwrap();
        assert_eq!(a.draws, b.draws);
        assert_eq!(a.acceptance_rate, b.acceptance_rate);
    }

    #[test]
    fn identical_draws_have_zero_std() {
        let t = template(2);
        let dim = t.n_params();
        let draws = Array2::from_shape_fn((5, dim), |(_, j)| j as f64 * 0.1);
        let pts = Array2::from_shape_fn((4, 1), |(i, _)| i as f64 - 2.0);
        let stats = ratio_uncertainty(&t, &draws, &pts.view()).unwrap();
        assert!(stats.std.iter().all(|s| *s == 0.0));
    }
}
