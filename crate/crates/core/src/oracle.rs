//! Independent ground-truth computations: quadrature and Monte Carlo KL from
//! exact log-densities, and brute-force ratio tables for discrete problems.

use serde::{Deserialize, Serialize};

use crate::distributions::{CovarianceSpec, DistributionSpec};
use crate::error::{Error, Result};

/// Integration window and starting resolution for the 1D quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub lo: f64,
    pub hi: f64,
    pub n_points: usize,
}

/// Outcome of the adaptive trapezoid; `value` is +inf when p has mass where
/// q vanishes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadratureKl {
    pub value: f64,
    pub n_points: usize,
    pub converged: bool,
    pub support_violations: usize,
}

const DENSITY_FLOOR: f64 = 1e-300;

/// Trapezoidal KL(p || q) = integral p (ln p - ln q), refined by doubling the
/// resolution until successive values differ by less than 1e-4.
pub fn quadrature_kl_1d(
    p: &DistributionSpec,
    q: &DistributionSpec,
    grid: Option<QuadratureGrid>,
) -> Result<QuadratureKl> {
    if p.dim() != 1 || q.dim() != 1 {
        return Err(Error::InvalidArgument(
            "quadrature oracle handles 1D specs only".into(),
        ));
    }
    p.validate()?;
    q.validate()?;
    let (lo, hi, mut n) = match grid {
        Some(g) => {
            if !(g.lo < g.hi) || g.n_points < 3 {
                return Err(Error::InvalidArgument("bad quadrature grid".into()));
            }
            (g.lo, g.hi, g.n_points)
        }
        None => {
            let (lo, hi) = effective_interval(p);
            (lo, hi, (1 << 14) + 1)
        }
    };

    let eval = |n: usize| -> (f64, usize) {
        let h = (hi - lo) / (n - 1) as f64;
        let mut acc = 0.0;
        let mut violations = 0usize;
        for i in 0..n {
            let x = lo + i as f64 * h;
            let lp = p.log_density(&[x]).expect("validated 1d spec");
            let density = lp.exp();
            if density <= DENSITY_FLOOR {
                continue;
            }
            let lq = q.log_density(&[x]).expect("validated 1d spec");
            if lq == f64::NEG_INFINITY {
                violations += 1;
                continue;
            }
            let term = density * (lp - lq);
            acc += if i == 0 || i == n - 1 { 0.5 * term } else { term };
        }
        (acc * h, violations)
    };

    let (mut value, mut violations) = eval(n);
    let mut converged = false;
    while n < (1 << 22) {
        let n2 = (n - 1) * 2 + 1;
        let (v2, viol2) = eval(n2);
        let stable = (v2 - value).abs() < 1e-4;
        value = v2;
        violations = viol2;
        n = n2;
        if stable {
            converged = true;
            break;
        }
    }

    Ok(QuadratureKl {
        value: if violations > 0 { f64::INFINITY } else { value },
        n_points: n,
        converged,
        support_violations: violations,
    })
}

/// Default window: p's center plus/minus 10 scales, clipped to p's support.
fn effective_interval(p: &DistributionSpec) -> (f64, f64) {
    match p {
        DistributionSpec::Gaussian { mean, covariance } => {
            let sd = match covariance {
                CovarianceSpec::Isotropic { variance } => variance.sqrt(),
                CovarianceSpec::Diagonal { variances } => variances[0].sqrt(),
                _ => 1.0,
            };
            (mean[0] - 10.0 * sd, mean[0] + 10.0 * sd)
        }
        DistributionSpec::Cauchy { location, scale } => {
            (location[0] - 10.0 * scale[0], location[0] + 10.0 * scale[0])
        }
        DistributionSpec::StudentT {
            location, scale, ..
        } => {
            let sd = match scale {
                CovarianceSpec::Isotropic { variance } => variance.sqrt(),
                CovarianceSpec::Diagonal { variances } => variances[0].sqrt(),
                _ => 1.0,
            };
            (location[0] - 10.0 * sd, location[0] + 10.0 * sd)
        }
        DistributionSpec::TruncatedNormal {
            loc,
            scale,
            low,
            high,
        } => ((loc - 10.0 * scale).max(*low), (loc + 10.0 * scale).min(*high)),
        DistributionSpec::Mixture { components, .. } => {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for c in components {
                let (l, h) = effective_interval(c);
                lo = lo.min(l);
                hi = hi.max(h);
            }
            (lo, hi)
        }
    }
}

/// Monte Carlo KL estimate with exact log-densities.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct McKl {
    pub estimate: f64,
    pub stderr: f64,
    /// Draws from p where q's log-density was -inf; any makes the estimate +inf.
    pub infinite_count: usize,
}

/// KL(p || q) as the sample mean of ln p - ln q over n draws from p.
pub fn mc_kl(p: &DistributionSpec, q: &DistributionSpec, n: usize, seed: u64) -> Result<McKl> {
    if n < 2 {
        return Err(Error::InvalidArgument("need n >= 2 draws".into()));
    }
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    let xs = p.sample(n, seed)?;
    let lp = p.log_density_rows(&xs.view())?;
    let lq = q.log_density_rows(&xs.view())?;
    let mut infinite_count = 0usize;
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        if lq[i] == f64::NEG_INFINITY {
            infinite_count += 1;
        } else {
            values.push(lp[i] - lq[i]);
        }
    }
    if infinite_count > 0 {
        return Ok(McKl {
            estimate: f64::INFINITY,
            stderr: f64::INFINITY,
            infinite_count,
        });
    }
    let (estimate, stderr) = crate::estimators::mean_and_stderr(&values)?;
    Ok(McKl {
        estimate,
        stderr,
        infinite_count: 0,
    })
}

/// ln(p_i(s) / p_j(s)) for every outcome s and ordered pair (i, j); indexed
/// [i][j][s].
pub fn exact_tabular_ratios(tables: &[Vec<f64>]) -> Result<Vec<Vec<Vec<f64>>>> {
    if tables.len() < 2 {
        return Err(Error::InvalidArgument("need at least 2 tables".into()));
    }
    let s = tables[0].len();
    for t in tables {
        if t.len() != s {
            return Err(Error::DimensionMismatch {
                expected: s,
                got: t.len(),
            });
        }
        if t.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidArgument(
                "zero or negative probability outcome".into(),
            ));
        }
    }
    // differences of per-table logs keep antisymmetry exact
    let logs: Vec<Vec<f64>> = tables
        .iter()
        .map(|t| t.iter().map(|p| p.ln()).collect())
        .collect();
    Ok(logs
        .iter()
        .map(|li| {
            logs.iter()
                .map(|lj| li.iter().zip(lj).map(|(a, b)| a - b).collect::<Vec<f64>>())
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::gaussian_kl;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quadrature_matches_gaussian_closed_form() {
        let p = DistributionSpec::gaussian_1d(-1.0, 0.08);
        let q = DistributionSpec::gaussian_1d(2.0, 0.15);
        let quad = quadrature_kl_1d(&p, &q, None).unwrap();
        assert!(quad.converged);
        assert_abs_diff_eq!(quad.value, gaussian_kl(&p, &q).unwrap(), epsilon = 1e-4);
    }

    #[test]
    fn quadrature_identity_is_zero() {
        let p = DistributionSpec::gaussian_1d(0.3, 0.5);
        let quad = quadrature_kl_1d(&p, &p, None).unwrap();
        assert!(quad.value.abs() < 1e-10);
    }

    #[test]
    fn truncated_normal_kl_converged_value() {
        // The converged truth for p=TN(-1,0.1,(-1.1,-0.9)), q=TN(1,0.2,(-1.1,1.2)).
        // Cross-checked against the closed-form truncated-normal moments
        // (50.79296) and the Monte Carlo route below.
        let p = DistributionSpec::truncated_normal(-1.0, 0.1, -1.1, -0.9);
        let q = DistributionSpec::truncated_normal(1.0, 0.2, -1.1, 1.2);
        let quad = quadrature_kl_1d(&p, &q, None).unwrap();
        assert!(quad.converged);
        assert_abs_diff_eq!(quad.value, 50.79296, epsilon = 1e-3);

        let mc = mc_kl(&p, &q, 400_000, 17).unwrap();
        assert!(
            (mc.estimate - quad.value).abs() < 4.0 * mc.stderr,
            "mc {} vs quad {}",
            mc.estimate,
            quad.value
        );
    }

    #[test]
    fn quadrature_reports_support_violation_as_infinite() {
        // p has mass on (0.9, 1.1) where q = TN support (-1.2, 0.8) vanishes
        let p = DistributionSpec::truncated_normal(1.0, 0.1, 0.9, 1.1);
        let q = DistributionSpec::truncated_normal(-1.0, 0.2, -1.2, 0.8);
        let quad = quadrature_kl_1d(&p, &q, None).unwrap();
        assert!(quad.value.is_infinite());
        assert!(quad.support_violations > 0);
    }

    #[test]
    fn quadrature_doubling_is_stable() {
        let p = DistributionSpec::truncated_normal(-1.0, 0.1, -1.1, -0.9);
        let q = DistributionSpec::truncated_normal(1.0, 0.2, -1.1, 1.2);
        let coarse = quadrature_kl_1d(
            &p,
            &q,
            Some(QuadratureGrid {
                lo: -1.1,
                hi: -0.9,
                n_points: (1 << 14) + 1,
            }),
        )
        .unwrap();
        let fine = quadrature_kl_1d(
            &p,
            &q,
            Some(QuadratureGrid {
                lo: -1.1,
                hi: -0.9,
                n_points: (1 << 16) + 1,
            }),
        )
        .unwrap();
        assert!((coarse.value - fine.value).abs() < 1e-4);
    }

    #[test]
    fn mc_kl_matches_table_value() {
        let p = DistributionSpec::gaussian_1d(-2.0, 0.08);
        let q = DistributionSpec::gaussian_1d(2.0, 0.15);
        let mc = mc_kl(&p, &q, 1_000_000, 5).unwrap();
        assert!(
            (mc.estimate - 355.82).abs() < 3.0 * mc.stderr + 0.01,
            "estimate {} stderr {}",
            mc.estimate,
            mc.stderr
        );
    }

    #[test]
    fn mc_kl_identity_is_zero() {
        let p = DistributionSpec::gaussian_1d(0.0, 1.0);
        let mc = mc_kl(&p, &p, 10_000, 3).unwrap();
        assert!(mc.estimate.abs() < 3.0 * mc.stderr.max(1e-12));
    }

    #[test]
    fn mc_kl_counts_support_escapes() {
        let p = DistributionSpec::truncated_normal(0.0, 1.0, -1.2, 1.2);
        let q = DistributionSpec::truncated_normal(0.0, 0.5, -0.5, 0.5);
        let mc = mc_kl(&p, &q, 5_000, 1).unwrap();
        assert!(mc.estimate.is_infinite());
        assert!(mc.infinite_count > 0);
    }

    #[test]
    fn tabular_ratios_basic() {
        let tables = vec![vec![0.5, 0.5], vec![0.25, 0.75]];
        let r = exact_tabular_ratios(&tables).unwrap();
        assert_abs_diff_eq!(r[0][1][0], 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(r[0][1][1], (2.0f64 / 3.0).ln(), epsilon = 1e-15);
        // identical tables -> zeros
        let same = exact_tabular_ratios(&[tables[0].clone(), tables[0].clone()]).unwrap();
        assert!(same[0][1].iter().all(|v| *v == 0.0));
        // antisymmetry is exact; telescoping exact up to one rounding of the sum
        let three = vec![
            vec![0.2, 0.3, 0.5],
            vec![0.4, 0.4, 0.2],
            vec![0.25, 0.25, 0.5],
        ];
        let r = exact_tabular_ratios(&three).unwrap();
        for s in 0..3 {
            assert_eq!(r[0][1][s], -r[1][0][s]);
            assert_abs_diff_eq!(r[0][2][s] + r[2][1][s], r[0][1][s], epsilon = 1e-15);
        }
        // zero probability rejected
        assert!(exact_tabular_ratios(&[vec![0.0, 1.0], vec![0.5, 0.5]]).is_err());
    }
}
