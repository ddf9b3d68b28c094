//! Per-class unnormalized log-score functions and the multinomial
//! probability / cross-entropy machinery built on them.
//!
//! A `ScoreSet` holds one score h_c per class plus class priors.  The
//! conditional model is P(Y=c|x) = pi_c exp(h_c(x)) / sum_k pi_k exp(h_k(x));
//! everything downstream (ratio readout, training, HMC) works through the
//! flattened parameter vector exposed here.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Max-shifted log(sum(exp(xs))); tolerates -inf entries.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + xs.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Quadratic score x^T W1 x + w2 . x + b with W1 kept symmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticScore {
    pub w1: Array2<f64>,
    pub w2: Array1<f64>,
    pub b: f64,
}

impl QuadraticScore {
    pub fn zeros(dim: usize) -> Self {
        QuadraticScore {
            w1: Array2::zeros((dim, dim)),
            w2: Array1::zeros(dim),
            b: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.w2.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let mut quad = 0.0;
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..d {
                acc += self.w1[(i, j)] * x[j];
            }
            quad += x[i] * acc;
        }
        let lin: f64 = self.w2.iter().zip(x).map(|(w, xi)| w * xi).sum();
        quad + lin + self.b
    }

    /// x^T W1 x only sees the symmetric part; keep the stored matrix there.
    pub fn symmetrize(&mut self) {
        let d = self.dim();
        for i in 0..d {
            for j in 0..i {
                let avg = 0.5 * (self.w1[(i, j)] + self.w1[(j, i)]);
                self.w1[(i, j)] = avg;
                self.w1[(j, i)] = avg;
            }
        }
    }
}

/// Score over a finite outcome set; the brute-force family used to check
/// the critical-point conditions exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularScore {
    pub outcomes: Vec<f64>,
    pub table: Vec<f64>,
}

impl TabularScore {
    pub fn zeros(outcomes: Vec<f64>) -> Self {
        let table = vec![0.0; outcomes.len()];
        TabularScore { outcomes, table }
    }

    pub fn outcome_index(&self, x: f64) -> Option<usize> {
        self.outcomes.iter().position(|o| *o == x)
    }
}

/// One class score; a `ScoreSet` keeps a homogeneous family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Score {
    Quadratic(QuadraticScore),
    Tabular(TabularScore),
}

/// Which score family a fit should instantiate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ScoreFamily {
    Quadratic,
    Tabular { outcomes: Vec<f64> },
}

/// Samples tagged with a class index in 0..C (class 0 = numerator p,
/// class 1 = denominator q, classes 2.. = auxiliaries).
#[derive(Debug, Clone)]
pub struct ClassedSamples {
    pub xs: Array2<f64>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl ClassedSamples {
    /// Stack per-class matrices; class c rows are labeled c.
    pub fn from_class_matrices(classes: &[Array2<f64>]) -> Result<Self> {
        if classes.len() < 2 {
            return Err(Error::InvalidArgument(
                "need at least two classes of samples".into(),
            ));
        }
        let d = classes[0].ncols();
        let mut total = 0;
        for (c, m) in classes.iter().enumerate() {
            if m.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: m.ncols(),
                });
            }
            if m.nrows() == 0 {
                return Err(Error::EmptyInput(format!("class {c} has no samples")));
            }
            total += m.nrows();
        }
        let mut xs = Array2::zeros((total, d));
        let mut labels = Vec::with_capacity(total);
        let mut row = 0;
        for (c, m) in classes.iter().enumerate() {
            for r in m.rows() {
                for (j, v) in r.iter().enumerate() {
                    xs[(row, j)] = *v;
                }
                labels.push(c);
                row += 1;
            }
        }
        Ok(ClassedSamples {
            xs,
            labels,
            n_classes: classes.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.xs.ncols()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for l in &self.labels {
            counts[*l] += 1;
        }
        counts
    }

    /// Select a subset of rows by index.
    pub fn subset(&self, idx: &[usize]) -> ClassedSamples {
        let d = self.dim();
        let mut xs = Array2::zeros((idx.len(), d));
        let mut labels = Vec::with_capacity(idx.len());
        for (r, &i) in idx.iter().enumerate() {
            for j in 0..d {
                xs[(r, j)] = self.xs[(i, j)];
            }
            labels.push(self.labels[i]);
        }
        ClassedSamples {
            xs,
            labels,
            n_classes: self.n_classes,
        }
    }
}

/// C per-class scores plus class priors; the trained object from which all
/// ratios are read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub scores: Vec<Score>,
    pub priors: Vec<f64>,
    pub class_labels: Vec<String>,
    pub dim: usize,
}

impl ScoreSet {
    /// All-zero quadratic scores with uniform priors.
    pub fn new_quadratic(n_classes: usize, dim: usize, class_labels: Vec<String>) -> Result<Self> {
        let scores = (0..n_classes)
            .map(|_| Score::Quadratic(QuadraticScore::zeros(dim)))
            .collect();
        ScoreSet::assemble(scores, None, class_labels, dim)
    }

    /// All-zero tabular scores over a shared outcome set.
    pub fn new_tabular(
        n_classes: usize,
        outcomes: Vec<f64>,
        class_labels: Vec<String>,
    ) -> Result<Self> {
        let scores = (0..n_classes)
            .map(|_| Score::Tabular(TabularScore::zeros(outcomes.clone())))
            .collect();
        ScoreSet::assemble(scores, None, class_labels, 1)
    }

    pub fn from_family(
        family: &ScoreFamily,
        n_classes: usize,
        dim: usize,
        class_labels: Vec<String>,
    ) -> Result<Self> {
        match family {
            ScoreFamily::Quadratic => ScoreSet::new_quadratic(n_classes, dim, class_labels),
            ScoreFamily::Tabular { outcomes } => {
                ScoreSet::new_tabular(n_classes, outcomes.clone(), class_labels)
            }
        }
    }

    fn assemble(
        scores: Vec<Score>,
        priors: Option<Vec<f64>>,
        class_labels: Vec<String>,
        dim: usize,
    ) -> Result<Self> {
        let c = scores.len();
        if c < 2 {
            return Err(Error::InvalidArgument("need at least 2 classes".into()));
        }
        let priors = priors.unwrap_or_else(|| vec![1.0 / c as f64; c]);
        let labels = if class_labels.is_empty() {
            (0..c).map(|i| format!("class{i}")).collect()
        } else {
            class_labels
        };
        let set = ScoreSet {
            scores,
            priors,
            class_labels: labels,
            dim,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scores.len() < 2 {
            return Err(Error::InvalidArgument("need at least 2 classes".into()));
        }
        if self.priors.len() != self.scores.len() || self.class_labels.len() != self.scores.len() {
            return Err(Error::InvalidArgument(
                "scores, priors, and labels must have equal length".into(),
            ));
        }
        let total: f64 = self.priors.iter().sum();
        if self.priors.iter().any(|p| *p <= 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "priors must be positive and sum to 1, got sum {total}"
            )));
        }
        let homogeneous = self
            .scores
            .windows(2)
            .all(|w| matches!((&w[0], &w[1]), (Score::Quadratic(_), Score::Quadratic(_)) | (Score::Tabular(_), Score::Tabular(_))));
        if !homogeneous {
            return Err(Error::InvalidArgument(
                "score family must be homogeneous across classes".into(),
            ));
        }
        Ok(())
    }

    pub fn with_priors(mut self, priors: Vec<f64>) -> Result<Self> {
        self.priors = priors;
        self.validate()?;
        Ok(self)
    }

    pub fn n_classes(&self) -> usize {
        self.scores.len()
    }

    /// h_c(x) for every class.
    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        self.scores
            .iter()
            .map(|s| match s {
                Score::Quadratic(q) => Ok(q.eval(x)),
                Score::Tabular(t) => t
                    .outcome_index(x[0])
                    .map(|i| t.table[i])
                    .ok_or_else(|| {
                        Error::InvalidArgument(format!("{} is not in the outcome set", x[0]))
                    }),
            })
            .collect()
    }

    /// Logit matrix (n x C) for a batch of rows.
    pub fn logits_rows(&self, xs: &ArrayView2<f64>) -> Result<Array2<f64>> {
        if xs.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: xs.ncols(),
            });
        }
        let n = xs.nrows();
        let c = self.n_classes();
        let mut out = Array2::zeros((n, c));
        for (k, score) in self.scores.iter().enumerate() {
            match score {
                Score::Quadratic(q) => {
                    // (X W1 * X).sum(axis=1) + X w2 + b
                    let xw = xs.dot(&q.w1);
                    let quad = (&xw * xs).sum_axis(Axis(1));
                    let lin = xs.dot(&q.w2);
                    for i in 0..n {
                        out[(i, k)] = quad[i] + lin[i] + q.b;
                    }
                }
                Score::Tabular(t) => {
                    for i in 0..n {
                        let v = xs[(i, 0)];
                        let idx = t.outcome_index(v).ok_or_else(|| {
                            Error::InvalidArgument(format!("{v} is not in the outcome set"))
                        })?;
                        out[(i, k)] = t.table[idx];
                    }
                }
            }
        }
        Ok(out)
    }

    /// log P(Y=c|x) for every class, via a max shift on the raw logits so
    /// that adding one constant to every score cancels exactly.
    pub fn class_log_probs(&self, x: &[f64]) -> Result<Vec<f64>> {
        let h = self.logits(x)?;
        Ok(self.log_probs_from_logits(&h))
    }

    fn log_probs_from_logits(&self, h: &[f64]) -> Vec<f64> {
        let m = h.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let shifted: Vec<f64> = h.iter().map(|v| v - m).collect();
        let denom: f64 = shifted
            .iter()
            .zip(&self.priors)
            .map(|(r, p)| p * r.exp())
            .sum();
        let ln_denom = denom.ln();
        shifted
            .iter()
            .zip(&self.priors)
            .map(|(r, p)| p.ln() + r - ln_denom)
            .collect()
    }

    /// Empirical multinomial cross-entropy:
    /// sum_c pi_c * mean over class-c samples of -log P(Y=c|x).
    pub fn loss(&self, data: &ClassedSamples) -> Result<f64> {
        let weights = self.cross_entropy_weights(data)?;
        let (loss, _) = self.weighted_nll(data, &weights, false)?;
        Ok(loss)
    }

    /// Loss and its analytic gradient with respect to the flattened
    /// parameter vector; W1 gradients are symmetrized.
    pub fn loss_gradient(&self, data: &ClassedSamples) -> Result<(f64, Vec<f64>)> {
        let weights = self.cross_entropy_weights(data)?;
        let (loss, grad) = self.weighted_nll(data, &weights, true)?;
        Ok((loss, grad.expect("gradient requested")))
    }

    /// Per-sample weights pi_{y_i} / N_{y_i} turning the weighted NLL into
    /// the empirical cross-entropy; errors on an empty class.
    fn cross_entropy_weights(&self, data: &ClassedSamples) -> Result<Vec<f64>> {
        if data.n_classes != self.n_classes() {
            return Err(Error::InvalidArgument(format!(
                "data has {} classes, model has {}",
                data.n_classes,
                self.n_classes()
            )));
        }
        let counts = data.class_counts();
        if let Some(c) = counts.iter().position(|&n| n == 0) {
            return Err(Error::EmptyInput(format!("class {c} has no samples")));
        }
        Ok(data
            .labels
            .iter()
            .map(|&y| self.priors[y] / counts[y] as f64)
            .collect())
    }

    /// Weights that skip validation of per-class presence; minibatch training
    /// reweights each chunk by its own class counts and drops absent classes.
    pub(crate) fn chunk_weights(&self, data: &ClassedSamples) -> Vec<f64> {
        let counts = data.class_counts();
        data.labels
            .iter()
            .map(|&y| {
                if counts[y] == 0 {
                    0.0
                } else {
                    self.priors[y] / counts[y] as f64
                }
            })
            .collect()
    }

    /// Core objective: sum_i w_i * (-log P(y_i|x_i; theta)) and, on request,
    /// its gradient. The multinomial cross-entropy and the HMC likelihood
    /// (w_i = 1) are both instances.
    pub(crate) fn weighted_nll(
        &self,
        data: &ClassedSamples,
        weights: &[f64],
        want_grad: bool,
    ) -> Result<(f64, Option<Vec<f64>>)> {
        if weights.len() != data.len() {
            return Err(Error::InvalidArgument(
                "one weight per sample required".into(),
            ));
        }
        let h = self.logits_rows(&data.xs.view())?;
        let n = data.len();
        let c = self.n_classes();
        let ln_priors: Vec<f64> = self.priors.iter().map(|p| p.ln()).collect();
        let mut nll = 0.0;
        // coeff[i,k] = w_i * (P(k|x_i) - [y_i = k]) = d nll / d h_k(x_i)
        let mut coeff = if want_grad {
            Some(Array2::zeros((n, c)))
        } else {
            None
        };
        for i in 0..n {
            let row = h.row(i);
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut denom = 0.0;
            for k in 0..c {
                denom += self.priors[k] * (row[k] - m).exp();
            }
            let ln_denom = denom.ln();
            let y = data.labels[i];
            let log_p_y = ln_priors[y] + (row[y] - m) - ln_denom;
            nll -= weights[i] * log_p_y;
            if let Some(cf) = coeff.as_mut() {
                for k in 0..c {
                    let p = (ln_priors[k] + (row[k] - m) - ln_denom).exp();
                    let delta = if k == y { 1.0 } else { 0.0 };
                    cf[(i, k)] = weights[i] * (p - delta);
                }
            }
        }
        let grad = match coeff {
            None => None,
            Some(cf) => Some(self.assemble_gradient(data, &cf)?),
        };
        Ok((nll, grad))
    }

    /// Chain per-sample logit sensitivities through each score's parameters.
    fn assemble_gradient(&self, data: &ClassedSamples, coeff: &Array2<f64>) -> Result<Vec<f64>> {
        let n = data.len();
        let mut grad = vec![0.0; self.n_params()];
        let mut offset = 0;
        for (k, score) in self.scores.iter().enumerate() {
            match score {
                Score::Quadratic(q) => {
                    let d = q.dim();
                    let col = coeff.column(k);
                    // grad W1 = X^T diag(col) X  (symmetric by construction,
                    // symmetrized anyway against GEMM rounding asymmetry)
                    let weighted = &data.xs * &col.insert_axis(Axis(1));
                    let mut gw1 = weighted.t().dot(&data.xs);
                    for i in 0..d {
                        for j in 0..i {
                            let avg = 0.5 * (gw1[(i, j)] + gw1[(j, i)]);
                            gw1[(i, j)] = avg;
                            gw1[(j, i)] = avg;
                        }
                    }
                    let gw2 = data.xs.t().dot(&coeff.column(k));
                    let gb: f64 = coeff.column(k).sum();
                    for i in 0..d {
                        for j in 0..d {
                            grad[offset + i * d + j] = gw1[(i, j)];
                        }
                    }
                    for i in 0..d {
                        grad[offset + d * d + i] = gw2[i];
                    }
                    grad[offset + d * d + d] = gb;
                    offset += d * d + d + 1;
                }
                Score::Tabular(t) => {
                    let s = t.outcomes.len();
                    for i in 0..n {
                        let idx = t
                            .outcome_index(data.xs[(i, 0)])
                            .expect("checked by logits_rows");
                        grad[offset + idx] += coeff[(i, k)];
                    }
                    offset += s;
                }
            }
        }
        Ok(grad)
    }

    /// Number of free parameters across all classes.
    pub fn n_params(&self) -> usize {
        self.scores
            .iter()
            .map(|s| match s {
                Score::Quadratic(q) => {
                    let d = q.dim();
                    d * d + d + 1
                }
                Score::Tabular(t) => t.outcomes.len(),
            })
            .sum()
    }

    /// Flatten parameters class-major: per class W1 row-major, then w2, then b
    /// (or the table for tabular scores).
    pub fn param_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_params());
        for score in &self.scores {
            match score {
                Score::Quadratic(q) => {
                    v.extend(q.w1.iter());
                    v.extend(q.w2.iter());
                    v.push(q.b);
                }
                Score::Tabular(t) => v.extend(t.table.iter()),
            }
        }
        v
    }

    /// Write back a flattened parameter vector, re-symmetrizing every W1.
    pub fn set_param_vector(&mut self, v: &[f64]) -> Result<()> {
        if v.len() != self.n_params() {
            return Err(Error::DimensionMismatch {
                expected: self.n_params(),
                got: v.len(),
            });
        }
        let mut offset = 0;
        for score in &mut self.scores {
            match score {
                Score::Quadratic(q) => {
                    let d = q.dim();
                    for i in 0..d {
                        for j in 0..d {
                            q.w1[(i, j)] = v[offset + i * d + j];
                        }
                    }
                    for i in 0..d {
                        q.w2[i] = v[offset + d * d + i];
                    }
                    q.b = v[offset + d * d + d];
                    q.symmetrize();
                    offset += d * d + d + 1;
                }
                Score::Tabular(t) => {
                    let s = t.outcomes.len();
                    t.table.copy_from_slice(&v[offset..offset + s]);
                    offset += s;
                }
            }
        }
        Ok(())
    }

    /// Fraction of samples per class whose argmax of (ln pi_k + h_k) matches
    /// the label.
    pub fn per_class_accuracy(&self, data: &ClassedSamples) -> Result<Vec<f64>> {
        let h = self.logits_rows(&data.xs.view())?;
        let counts = data.class_counts();
        let mut hits = vec![0usize; self.n_classes()];
        for i in 0..data.len() {
            let mut best = 0;
            let mut best_v = f64::NEG_INFINITY;
            for k in 0..self.n_classes() {
                let v = self.priors[k].ln() + h[(i, k)];
                if v > best_v {
                    best_v = v;
                    best = k;
                }
            }
            if best == data.labels[i] {
                hits[best] += 1;
            }
        }
        Ok(hits
            .iter()
            .zip(&counts)
            .map(|(h, c)| if *c == 0 { 0.0 } else { *h as f64 / *c as f64 })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn quad_1d(w1: f64, w2: f64, b: f64) -> Score {
        Score::Quadratic(QuadraticScore {
            w1: array![[w1]],
            w2: array![w2],
            b,
        })
    }

    #[test]
    fn logits_basic_values() {
        let set = ScoreSet::new_quadratic(3, 1, vec![]).unwrap();
        assert_eq!(set.logits(&[0.7]).unwrap(), vec![0.0, 0.0, 0.0]);

        let set = ScoreSet {
            scores: vec![quad_1d(1.0, 0.0, 0.0), quad_1d(0.0, 0.0, 0.0)],
            priors: vec![0.5, 0.5],
            class_labels: vec!["a".into(), "b".into()],
            dim: 1,
        };
        assert_eq!(set.logits(&[2.0]).unwrap()[0], 4.0);

        let mut q = QuadraticScore::zeros(2);
        q.w1 = Array2::eye(2);
        q.b = 1.0;
        let set2 = ScoreSet {
            scores: vec![Score::Quadratic(q.clone()), Score::Quadratic(QuadraticScore::zeros(2))],
            priors: vec![0.5, 0.5],
            class_labels: vec!["a".into(), "b".into()],
            dim: 2,
        };
        assert_eq!(set2.logits(&[1.0, 1.0]).unwrap()[0], 3.0);
    }

    #[test]
    fn class_log_probs_symmetry_and_stability() {
        let set = ScoreSet::new_quadratic(3, 1, vec![]).unwrap();
        let lp = set.class_log_probs(&[0.0]).unwrap();
        for v in &lp {
            assert_abs_diff_eq!(*v, (1.0f64 / 3.0).ln(), epsilon = 1e-15);
        }

        // huge logit gap must not overflow
        let set = ScoreSet {
            scores: vec![quad_1d(0.0, 0.0, 1e4), quad_1d(0.0, 0.0, 0.0)],
            priors: vec![0.5, 0.5],
            class_labels: vec!["a".into(), "b".into()],
            dim: 1,
        };
        let lp = set.class_log_probs(&[0.0]).unwrap();
        assert!(lp[0] <= 0.0 && lp[0] > -1e-300, "log p(class 1) = {}", lp[0]);
        assert!(lp[1].is_finite());

        // ln2 logit gap -> probs (2/3, 1/3)
        let set = ScoreSet {
            scores: vec![quad_1d(0.0, 0.0, std::f64::consts::LN_2), quad_1d(0.0, 0.0, 0.0)],
            priors: vec![0.5, 0.5],
            class_labels: vec!["a".into(), "b".into()],
            dim: 1,
        };
        let lp = set.class_log_probs(&[0.0]).unwrap();
        assert_abs_diff_eq!(lp[0].exp(), 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lp[1].exp(), 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn probs_normalize_within_1e12() {
        let set = ScoreSet {
            scores: vec![quad_1d(0.3, -0.7, 2.0), quad_1d(-0.2, 0.4, -1.0), quad_1d(0.05, 0.0, 0.0)],
            priors: vec![0.2, 0.3, 0.5],
            class_labels: vec!["a".into(), "b".into(), "c".into()],
            dim: 1,
        };
        for x in [-3.0, -0.5, 0.0, 1.7, 42.0] {
            let lp = set.class_log_probs(&[x]).unwrap();
            let total: f64 = lp.iter().map(|v| v.exp()).sum();
            assert!((total - 1.0).abs() < 1e-12, "x={x}: sum {total}");
        }
    }

    #[test]
    fn zero_scores_loss_is_ln_c() {
        for c in [2usize, 3, 5] {
            let set = ScoreSet::new_quadratic(c, 1, vec![]).unwrap();
            let classes: Vec<Array2<f64>> = (0..c)
                .map(|k| Array2::from_shape_fn((4, 1), |(i, _)| k as f64 + i as f64))
                .collect();
            let data = ClassedSamples::from_class_matrices(&classes).unwrap();
            let loss = set.loss(&data).unwrap();
            assert_abs_diff_eq!(loss, (c as f64).ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn saturated_tabular_loss_approaches_zero() {
        let outcomes = vec![0.0, 1.0];
        let mut set = ScoreSet::new_tabular(2, outcomes.clone(), vec![]).unwrap();
        let m = 40.0;
        set.scores[0] = Score::Tabular(TabularScore {
            outcomes: outcomes.clone(),
            table: vec![m, -m],
        });
        set.scores[1] = Score::Tabular(TabularScore {
            outcomes: outcomes.clone(),
            table: vec![-m, m],
        });
        let data = ClassedSamples::from_class_matrices(&[
            Array2::zeros((5, 1)),
            Array2::ones((5, 1)),
        ])
        .unwrap();
        assert!(set.loss(&data).unwrap() < 1e-10);
    }

    #[test]
    fn loss_nonnegative_with_uniform_priors() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let set = ScoreSet {
                scores: (0..3)
                    .map(|_| {
                        quad_1d(
                            rng.random::<f64>() - 0.5,
                            rng.random::<f64>() - 0.5,
                            rng.random::<f64>() - 0.5,
                        )
                    })
                    .collect(),
                priors: vec![1.0 / 3.0; 3],
                class_labels: vec!["a".into(), "b".into(), "c".into()],
                dim: 1,
            };
            let classes: Vec<Array2<f64>> = (0..3)
                .map(|_| Array2::from_shape_fn((6, 1), |_| rng.random::<f64>() * 4.0 - 2.0))
                .collect();
            let data = ClassedSamples::from_class_matrices(&classes).unwrap();
            assert!(set.loss(&data).unwrap() >= 0.0);
        }
    }

    #[test]
    fn gradient_zero_at_tabular_optimum() {
        // h_c = ln p_c + const is a critical point of the population loss;
        // feed the empirical counts as exact class-conditional probabilities.
        let outcomes = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let p1 = [0.4, 0.3, 0.1, 0.1, 0.1];
        let p2 = [0.1, 0.2, 0.2, 0.2, 0.3];
        let p3 = [0.2, 0.2, 0.2, 0.2, 0.2];
        // 10 samples per outcome weight unit keeps empirical = exact
        let build = |p: &[f64; 5]| {
            let mut rows = Vec::new();
            for (i, w) in p.iter().enumerate() {
                let copies = (w * 10.0).round() as usize;
                for _ in 0..copies {
                    rows.push(outcomes[i]);
                }
            }
            Array2::from_shape_vec((rows.len(), 1), rows).unwrap()
        };
        let data = ClassedSamples::from_class_matrices(&[build(&p1), build(&p2), build(&p3)])
            .unwrap();
        let mut set = ScoreSet::new_tabular(3, outcomes.clone(), vec![]).unwrap();
        for (k, p) in [p1, p2, p3].iter().enumerate() {
            set.scores[k] = Score::Tabular(TabularScore {
                outcomes: outcomes.clone(),
                table: p.iter().map(|v| v.ln()).collect(),
            });
        }
        let (_, grad) = set.loss_gradient(&data).unwrap();
        let norm: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        assert!(norm < 1e-10, "gradient norm {norm}");
    }

    #[test]
    fn identical_data_zero_init_gives_identical_class_gradients() {
        let set = ScoreSet::new_quadratic(3, 2, vec![]).unwrap();
        let block = Array2::from_shape_fn((8, 2), |(i, j)| (i as f64) * 0.3 - (j as f64) * 0.1);
        let data =
            ClassedSamples::from_class_matrices(&[block.clone(), block.clone(), block]).unwrap();
        let (_, grad) = set.loss_gradient(&data).unwrap();
        let per_class = grad.len() / 3;
        for i in 0..per_class {
            assert_abs_diff_eq!(grad[i], grad[per_class + i], epsilon = 1e-15);
            assert_abs_diff_eq!(grad[i], grad[2 * per_class + i], epsilon = 1e-15);
        }
    }

    #[test]
    fn tabular_shift_invariance_is_exact() {
        // dyadic tables and a dyadic shift make b+c exact, so the max-shifted
        // softmax must cancel the shift to the last bit
        let outcomes = vec![0.0, 1.0, 2.0];
        let t1 = vec![0.5, -1.25, 2.0];
        let t2 = vec![-0.75, 0.125, 1.5];
        let t3 = vec![1.0, 0.25, -0.5];
        let mk = |tables: &[Vec<f64>]| ScoreSet {
            scores: tables
                .iter()
                .map(|t| {
                    Score::Tabular(TabularScore {
                        outcomes: outcomes.clone(),
                        table: t.clone(),
                    })
                })
                .collect(),
            priors: vec![1.0 / 3.0; 3],
            class_labels: vec!["a".into(), "b".into(), "c".into()],
            dim: 1,
        };
        let base = mk(&[t1.clone(), t2.clone(), t3.clone()]);
        let c = 7.25;
        let shifted = mk(&[
            t1.iter().map(|v| v + c).collect(),
            t2.iter().map(|v| v + c).collect(),
            t3.iter().map(|v| v + c).collect(),
        ]);
        for x in &outcomes {
            let a = base.class_log_probs(&[*x]).unwrap();
            let b = shifted.class_log_probs(&[*x]).unwrap();
            assert_eq!(a, b, "at x={x}");
            let ha = base.logits(&[*x]).unwrap();
            let hb = shifted.logits(&[*x]).unwrap();
            assert_eq!(ha[0] - ha[1], hb[0] - hb[1]);
        }
    }

    #[test]
    fn param_vector_round_trip() {
        let mut set = ScoreSet::new_quadratic(2, 3, vec![]).unwrap();
        let v: Vec<f64> = (0..set.n_params()).map(|i| i as f64 * 0.1).collect();
        set.set_param_vector(&v).unwrap();
        // W1 comes back symmetrized, so eval must agree with the symmetric part
        let back = set.param_vector();
        assert_eq!(back.len(), v.len());
        let mut set2 = set.clone();
        set2.set_param_vector(&back).unwrap();
        assert_eq!(set.param_vector(), set2.param_vector());
    }

    #[test]
    fn empty_class_is_an_error() {
        let r = ClassedSamples::from_class_matrices(&[Array2::zeros((3, 1)), Array2::zeros((0, 1))]);
        assert!(r.is_err());
    }
}
