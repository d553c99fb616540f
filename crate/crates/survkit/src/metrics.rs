//! Predictive-performance metrics for survival models: time-dependent AUC,
//! concordance index, and Brier score, each with a point estimate, standard
//! error, confidence interval, one-sample test against a random predictor,
//! and a paired two-sample comparison between models.
//!
//! Conventions: a higher risk score always means higher risk. Tied scores
//! contribute one half to concordance counts, so an all-tied score vector
//! scores exactly 0.5. The cumulative/dynamic AUC at time `t` compares cases
//! (`time <= t` with an event) against controls (`time > t`); its default
//! evaluation times are the distinct event times strictly inside the
//! follow-up range, where both sets are nonempty.
//!
//! Variance machinery: the concordance index carries an analytic
//! Noether-style U-statistic standard error; AUC and Brier use a seeded
//! subject-level percentile bootstrap (replicate `i` draws its stream from
//! `seed xor i`). Two-model comparisons reuse the same resample indices on
//! both sides so the difference variance respects the pairing. When weights
//! come from an estimated censoring curve, resamples keep that curve fixed
//! (a plug-in bootstrap).

use std::sync::OnceLock;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{RiskScores, SubjectWeights, SurvivalProbabilities, WeightProvenance};
use crate::error::{Error, Result};
use crate::km::{ipcw_weights, StepFunction};

/// Which metric a result came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Auc,
    Cindex,
    Brier,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Auc => "auc",
            MetricKind::Cindex => "cindex",
            MetricKind::Brier => "brier",
        }
    }
}

/// Direction of a hypothesis test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    TwoSided,
    Greater,
    Less,
}

impl Alternative {
    pub fn name(self) -> &'static str {
        match self {
            Alternative::TwoSided => "two_sided",
            Alternative::Greater => "greater",
            Alternative::Less => "less",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "two_sided" => Ok(Alternative::TwoSided),
            "greater" => Ok(Alternative::Greater),
            "less" => Ok(Alternative::Less),
            other => Err(Error::BadConfig {
                what: format!("unknown alternative `{other}`"),
            }),
        }
    }
}

/// Subject weighting rule.
#[derive(Debug, Clone)]
pub enum Weighting {
    Uniform,
    /// Inverse probability of censoring weighting from an estimated
    /// censoring survival curve.
    Ipcw(StepFunction),
    /// Fixed per-subject weights, applied as given at every time.
    Custom(SubjectWeights),
}

impl Weighting {
    pub fn provenance(&self) -> WeightProvenance {
        match self {
            Weighting::Uniform => WeightProvenance::Uniform,
            Weighting::Ipcw(_) => WeightProvenance::Ipcw,
            Weighting::Custom(_) => WeightProvenance::Custom,
        }
    }

    /// Per-subject weights for a horizon-`t` case/control split.
    fn at_horizon(&self, event: &[bool], time: &[f64], horizon: f64) -> Result<Vec<f64>> {
        match self {
            Weighting::Uniform => Ok(vec![1.0; event.len()]),
            Weighting::Ipcw(g) => Ok(ipcw_weights(g, event, time, horizon)?.values().to_vec()),
            Weighting::Custom(w) => {
                if w.len() != event.len() {
                    return Err(Error::LengthMismatch {
                        what: format!("{} weights for {} subjects", w.len(), event.len()),
                    });
                }
                Ok(w.values().to_vec())
            }
        }
    }
}

/// Bootstrap and weighting options shared by the metric constructors.
#[derive(Debug, Clone)]
pub struct MetricOptions {
    pub weighting: Weighting,
    /// Number of bootstrap resamples backing CIs for AUC/Brier and every
    /// two-model comparison. Zero disables the bootstrap.
    pub bootstrap: usize,
    pub seed: u64,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            weighting: Weighting::Uniform,
            bootstrap: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
enum MetricInputs {
    Scores(RiskScores),
    Survival(Array2<f64>),
}

/// A metric estimate with everything needed for inference: the inputs (for
/// bootstrap resampling), per-time values when time-resolved, an analytic
/// standard error when one exists, and tie/weighting metadata.
#[derive(Debug)]
pub struct MetricResult {
    kind: MetricKind,
    estimate: f64,
    noether_se: Option<f64>,
    times: Option<Vec<f64>>,
    per_time: Option<Vec<f64>>,
    score_ties: usize,
    weighting: Weighting,
    bootstrap_b: usize,
    seed: u64,
    event: Vec<bool>,
    time: Vec<f64>,
    inputs: MetricInputs,
    replicates: OnceLock<Vec<Option<f64>>>,
}

/// Time-dependent AUC. `new_time` selects the evaluation times; when absent
/// the distinct event times strictly before the last observed time are used.
/// Time-dependent score matrices require explicit times (column `t` is used
/// at the `t`-th time), so scores and times cannot silently misalign.
pub fn auc(
    scores: RiskScores,
    event: &[bool],
    time: &[f64],
    new_time: Option<&[f64]>,
    opts: MetricOptions,
) -> Result<MetricResult> {
    let n = check_survival_inputs(event, time)?;
    scores.validate(n)?;

    let eval_times: Vec<f64> = match new_time {
        Some(ts) => {
            if ts.is_empty() {
                return Err(Error::BadConfig {
                    what: "new_time must contain at least one time".into(),
                });
            }
            ts.to_vec()
        }
        None => {
            if matches!(scores, RiskScores::TimeDependent(_)) {
                return Err(Error::BadConfig {
                    what: "time-dependent scores need explicit evaluation times".into(),
                });
            }
            default_auc_times(event, time)?
        }
    };
    if let RiskScores::TimeDependent(m) = &scores {
        if m.ncols() != eval_times.len() {
            return Err(Error::ShapeMismatch {
                what: format!(
                    "{} score columns for {} evaluation times",
                    m.ncols(),
                    eval_times.len()
                ),
            });
        }
    }

    let (per_time, ties) = auc_core(&scores, event, time, &opts.weighting, &eval_times)?;
    let estimate = mean(&per_time);
    Ok(MetricResult {
        kind: MetricKind::Auc,
        estimate,
        noether_se: None,
        times: Some(eval_times),
        per_time: Some(per_time),
        score_ties: ties,
        weighting: opts.weighting,
        bootstrap_b: opts.bootstrap,
        seed: opts.seed,
        event: event.to_vec(),
        time: time.to_vec(),
        inputs: MetricInputs::Scores(scores),
        replicates: OnceLock::new(),
    })
}

/// Concordance index over comparable pairs: `(i, j)` is comparable when `i`
/// has an event and either `time_i < time_j`, or the times tie and `j` is
/// censored. Under IPCW each pair weighs `G(time_i-)^-2`.
pub fn concordance_index(
    scores: RiskScores,
    event: &[bool],
    time: &[f64],
    opts: MetricOptions,
) -> Result<MetricResult> {
    let n = check_survival_inputs(event, time)?;
    scores.validate(n)?;
    let values = match &scores {
        RiskScores::TimeIndependent(v) => v.clone(),
        RiskScores::TimeDependent(_) => {
            return Err(Error::ShapeMismatch {
                what: "the concordance index takes one time-independent score per subject".into(),
            })
        }
    };

    let out = cindex_core(&values, event, time, &opts.weighting)?;
    Ok(MetricResult {
        kind: MetricKind::Cindex,
        estimate: out.estimate,
        noether_se: Some(out.se),
        times: None,
        per_time: None,
        score_ties: out.tied_pairs,
        weighting: opts.weighting,
        bootstrap_b: opts.bootstrap,
        seed: opts.seed,
        event: event.to_vec(),
        time: time.to_vec(),
        inputs: MetricInputs::Scores(scores),
        replicates: OnceLock::new(),
    })
}

/// Brier score at each evaluation time:
/// `BS(t) = (1/n) sum_i [ S(t|i)^2 1(time_i <= t, event_i) W_i
///                      + (1 - S(t|i))^2 1(time_i > t) W_i ]`
/// with `W` following the IPCW rule when requested. Uniform weights are
/// accepted but biased under censoring; the weighting is recorded in the
/// result metadata.
pub fn brier(
    surv: &SurvivalProbabilities,
    event: &[bool],
    time: &[f64],
    new_time: &[f64],
    opts: MetricOptions,
) -> Result<MetricResult> {
    let n = check_survival_inputs(event, time)?;
    if surv.n() != n {
        return Err(Error::LengthMismatch {
            what: format!("{} survival rows for {n} subjects", surv.n()),
        });
    }
    if surv.n_times() != new_time.len() {
        return Err(Error::ShapeMismatch {
            what: format!(
                "{} survival columns for {} evaluation times",
                surv.n_times(),
                new_time.len()
            ),
        });
    }
    if new_time.is_empty() {
        return Err(Error::BadConfig {
            what: "new_time must contain at least one time".into(),
        });
    }

    let per_time = brier_core(surv.values(), event, time, &opts.weighting, new_time)?;
    let estimate = mean(&per_time);
    Ok(MetricResult {
        kind: MetricKind::Brier,
        estimate,
        noether_se: None,
        times: Some(new_time.to_vec()),
        per_time: Some(per_time),
        score_ties: 0,
        weighting: opts.weighting,
        bootstrap_b: opts.bootstrap,
        seed: opts.seed,
        event: event.to_vec(),
        time: time.to_vec(),
        inputs: MetricInputs::Survival(surv.values().clone()),
        replicates: OnceLock::new(),
    })
}

fn check_survival_inputs(event: &[bool], time: &[f64]) -> Result<usize> {
    if event.len() != time.len() {
        return Err(Error::LengthMismatch {
            what: format!("{} events for {} times", event.len(), time.len()),
        });
    }
    if event.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(event.len())
}

/// Distinct event times with at least one later observation, so cases and
/// controls are both nonempty.
fn default_auc_times(event: &[bool], time: &[f64]) -> Result<Vec<f64>> {
    let t_max = time.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut times: Vec<f64> = event
        .iter()
        .zip(time)
        .filter(|(&e, &t)| e && t < t_max)
        .map(|(_, &t)| t)
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    if times.is_empty() {
        return Err(Error::NoCases { time: t_max });
    }
    Ok(times)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn auc_core(
    scores: &RiskScores,
    event: &[bool],
    time: &[f64],
    weighting: &Weighting,
    eval_times: &[f64],
) -> Result<(Vec<f64>, usize)> {
    let n = event.len();
    let mut per_time = Vec::with_capacity(eval_times.len());
    let mut ties = 0usize;
    for (col, &t) in eval_times.iter().enumerate() {
        let w = weighting.at_horizon(event, time, t)?;
        let cases: Vec<usize> = (0..n).filter(|&i| event[i] && time[i] <= t).collect();
        let controls: Vec<usize> = (0..n).filter(|&j| time[j] > t).collect();
        let case_weight: f64 = cases.iter().map(|&i| w[i]).sum();
        let control_weight: f64 = controls.iter().map(|&j| w[j]).sum();
        if cases.is_empty() || case_weight == 0.0 {
            return Err(Error::NoCases { time: t });
        }
        if controls.is_empty() || control_weight == 0.0 {
            return Err(Error::NoControls { time: t });
        }

        let t_col = match scores {
            RiskScores::TimeIndependent(_) => 0,
            RiskScores::TimeDependent(_) => col,
        };
        let mut concordant = 0.0;
        for &i in &cases {
            let si = scores.at(i, t_col);
            for &j in &controls {
                let sj = scores.at(j, t_col);
                let pair = w[i] * w[j];
                if si > sj {
                    concordant += pair;
                } else if si == sj {
                    concordant += 0.5 * pair;
                    ties += 1;
                }
            }
        }
        per_time.push(concordant / (case_weight * control_weight));
    }
    Ok((per_time, ties))
}

struct CindexOut {
    estimate: f64,
    se: f64,
    tied_pairs: usize,
}

fn cindex_core(
    scores: &[f64],
    event: &[bool],
    time: &[f64],
    weighting: &Weighting,
) -> Result<CindexOut> {
    let n = scores.len();
    // Pair weight sqrt per event subject: IPCW uses G(time_i-)^-2.
    let pair_weight_of = |i: usize| -> Result<f64> {
        match weighting {
            Weighting::Uniform => Ok(1.0),
            Weighting::Ipcw(g) => {
                let gi = g.eval_left(time[i]);
                if gi == 0.0 {
                    return Err(Error::DegenerateCensoring { subject: i });
                }
                Ok(1.0 / (gi * gi))
            }
            Weighting::Custom(_) => Ok(1.0),
        }
    };
    let custom = match weighting {
        Weighting::Custom(w) => {
            if w.len() != n {
                return Err(Error::LengthMismatch {
                    what: format!("{} weights for {n} subjects", w.len()),
                });
            }
            Some(w.values())
        }
        _ => None,
    };

    let mut num = 0.0;
    let mut den = 0.0;
    let mut tied_pairs = 0usize;
    // Per-subject pair sums for the Noether-style U-statistic variance.
    let mut involved_weight = vec![0.0; n];
    let mut involved_score = vec![0.0; n];

    for i in 0..n {
        if !event[i] {
            continue;
        }
        let wi = pair_weight_of(i)?;
        for j in 0..n {
            if j == i {
                continue;
            }
            let comparable = time[i] < time[j] || (time[i] == time[j] && !event[j]);
            if !comparable {
                continue;
            }
            let w = match custom {
                Some(cw) => cw[i] * cw[j],
                None => wi,
            };
            let a = if scores[i] > scores[j] {
                1.0
            } else if scores[i] == scores[j] {
                tied_pairs += 1;
                0.5
            } else {
                0.0
            };
            num += w * a;
            den += w;
            involved_weight[i] += w;
            involved_weight[j] += w;
            involved_score[i] += w * a;
            involved_score[j] += w * a;
        }
    }

    if den == 0.0 {
        return Err(Error::NoComparablePairs);
    }
    let estimate = num / den;
    let variance: f64 = (0..n)
        .map(|i| {
            let u = involved_score[i] - estimate * involved_weight[i];
            u * u
        })
        .sum::<f64>()
        / (den * den);
    Ok(CindexOut {
        estimate,
        se: variance.sqrt(),
        tied_pairs,
    })
}

fn brier_core(
    surv: &Array2<f64>,
    event: &[bool],
    time: &[f64],
    weighting: &Weighting,
    eval_times: &[f64],
) -> Result<Vec<f64>> {
    let n = event.len();
    let mut per_time = Vec::with_capacity(eval_times.len());
    for (col, &t) in eval_times.iter().enumerate() {
        let w = weighting.at_horizon(event, time, t)?;
        let mut total = 0.0;
        for i in 0..n {
            let s = surv[(i, col)];
            if event[i] && time[i] <= t {
                total += s * s * w[i];
            } else if time[i] > t {
                total += (1.0 - s) * (1.0 - s) * w[i];
            }
        }
        per_time.push(total / n as f64);
    }
    Ok(per_time)
}

/// Two-sided normal quantile.
fn z_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
}

fn normal_sf(z: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(-z)
}

fn p_from_z(z: f64, alternative: Alternative) -> f64 {
    match alternative {
        Alternative::Greater => normal_sf(z),
        Alternative::Less => normal_sf(-z),
        Alternative::TwoSided => 2.0 * normal_sf(z.abs()).min(0.5),
    }
}

/// Normal-theory interval truncated to [0, 1].
fn normal_ci(estimate: f64, se: f64, alpha: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    let z = z_quantile(1.0 - alpha / 2.0);
    Ok(((estimate - z * se).max(0.0), (estimate + z * se).min(1.0)))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::BadConfig {
            what: format!("alpha must lie in (0, 1], got {alpha}"),
        });
    }
    Ok(())
}

/// Linear-interpolation percentile of a sorted slice.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.len() == 1 {
        return sorted[0];
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Confidence interval method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiMethod {
    /// Normal interval around the analytic standard error.
    Noether,
    /// Percentile bootstrap over subject resamples.
    Bootstrap,
}

impl MetricResult {
    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn estimate(&self) -> f64 {
        self.estimate
    }

    pub fn times(&self) -> Option<&[f64]> {
        self.times.as_deref()
    }

    pub fn per_time(&self) -> Option<&[f64]> {
        self.per_time.as_deref()
    }

    pub fn weighting(&self) -> WeightProvenance {
        self.weighting.provenance()
    }

    /// Number of score-tied pairs that contributed one half.
    pub fn tie_count(&self) -> usize {
        self.score_ties
    }

    pub fn bootstrap_b(&self) -> usize {
        self.bootstrap_b
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n(&self) -> usize {
        self.event.len()
    }

    /// Standard error: analytic for the concordance index, bootstrap
    /// otherwise.
    pub fn se(&self) -> Result<f64> {
        if let Some(se) = self.noether_se {
            return Ok(se);
        }
        let reps = self.successful_replicates()?;
        if reps.len() < 2 {
            return Err(Error::MissingVariance {
                what: "not enough successful bootstrap replicates".into(),
            });
        }
        let m = mean(&reps);
        let var = reps.iter().map(|r| (r - m) * (r - m)).sum::<f64>() / (reps.len() - 1) as f64;
        Ok(var.sqrt())
    }

    /// Default interval: Noether for the concordance index, percentile
    /// bootstrap for AUC and Brier.
    pub fn confidence_interval(&self, alpha: f64) -> Result<(f64, f64)> {
        let method = match self.kind {
            MetricKind::Cindex => CiMethod::Noether,
            _ => CiMethod::Bootstrap,
        };
        self.confidence_interval_with(alpha, method)
    }

    pub fn confidence_interval_with(&self, alpha: f64, method: CiMethod) -> Result<(f64, f64)> {
        match method {
            CiMethod::Noether => {
                let se = self.noether_se.ok_or_else(|| Error::MissingVariance {
                    what: format!("no analytic variance for {}", self.kind.name()),
                })?;
                normal_ci(self.estimate, se, alpha)
            }
            CiMethod::Bootstrap => {
                check_alpha(alpha)?;
                let mut reps = self.successful_replicates()?;
                if reps.is_empty() {
                    return Err(Error::MissingVariance {
                        what: "no successful bootstrap replicates".into(),
                    });
                }
                reps.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let lo = percentile(&reps, alpha / 2.0);
                let hi = percentile(&reps, 1.0 - alpha / 2.0);
                // The interval contract includes the point estimate.
                Ok((lo.min(self.estimate), hi.max(self.estimate)))
            }
        }
    }

    /// One-sample test of the estimate against `null` (0.5 is the random
    /// predictor for rank metrics): `z = (estimate - null) / se` with a
    /// normal tail per the alternative.
    pub fn p_value(&self, alternative: Alternative, null: f64) -> Result<f64> {
        if self.estimate == null {
            return Ok(p_from_z(0.0, alternative));
        }
        let se = self.se()?;
        if se == 0.0 {
            return Err(Error::ZeroVariance {
                what: "standard error is zero away from the null".into(),
            });
        }
        Ok(p_from_z((self.estimate - null) / se, alternative))
    }

    /// Trapezoidal integral of the per-time values over the evaluation
    /// range, normalized by its width (the integrated Brier score).
    pub fn integral(&self) -> Result<f64> {
        let (times, values) = match (&self.times, &self.per_time) {
            (Some(t), Some(v)) if t.len() >= 2 => (t, v),
            (Some(t), Some(_)) => return Err(Error::TooFewTimes { got: t.len() }),
            _ => return Err(Error::TooFewTimes { got: 0 }),
        };
        let mut area = 0.0;
        for k in 1..times.len() {
            area += 0.5 * (values[k] + values[k - 1]) * (times[k] - times[k - 1]);
        }
        Ok(area / (times[times.len() - 1] - times[0]))
    }

    /// Bootstrap replicate estimates, aligned by replicate index; `None`
    /// marks a resample on which the metric was undefined.
    fn raw_replicates(&self) -> Result<&[Option<f64>]> {
        if self.bootstrap_b == 0 {
            return Err(Error::MissingVariance {
                what: "bootstrap disabled (B = 0)".into(),
            });
        }
        Ok(self.replicates.get_or_init(|| {
            use rand::{Rng, SeedableRng};
            let n = self.event.len();
            (0..self.bootstrap_b)
                .map(|rep| {
                    let mut rng =
                        rand_chacha::ChaCha8Rng::seed_from_u64(self.seed ^ rep as u64);
                    let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                    self.evaluate_on(&idx).ok()
                })
                .collect()
        }))
    }

    fn successful_replicates(&self) -> Result<Vec<f64>> {
        Ok(self.raw_replicates()?.iter().flatten().copied().collect())
    }

    /// Re-evaluates the metric on a subject resample.
    fn evaluate_on(&self, idx: &[usize]) -> Result<f64> {
        let event: Vec<bool> = idx.iter().map(|&i| self.event[i]).collect();
        let time: Vec<f64> = idx.iter().map(|&i| self.time[i]).collect();
        let weighting = match &self.weighting {
            Weighting::Custom(w) => Weighting::Custom(SubjectWeights::new(
                idx.iter().map(|&i| w.values()[i]).collect(),
                WeightProvenance::Custom,
            )?),
            other => other.clone(),
        };
        match (&self.inputs, self.kind) {
            (MetricInputs::Scores(scores), MetricKind::Auc) => {
                let resampled = resample_scores(scores, idx);
                let times = self.times.as_ref().expect("auc has times");
                let (per_time, _) = auc_core(&resampled, &event, &time, &weighting, times)?;
                Ok(mean(&per_time))
            }
            (MetricInputs::Scores(scores), MetricKind::Cindex) => {
                let values = match scores {
                    RiskScores::TimeIndependent(v) => {
                        idx.iter().map(|&i| v[i]).collect::<Vec<f64>>()
                    }
                    RiskScores::TimeDependent(_) => unreachable!("rejected at construction"),
                };
                Ok(cindex_core(&values, &event, &time, &weighting)?.estimate)
            }
            (MetricInputs::Survival(surv), MetricKind::Brier) => {
                let mut rows = Array2::zeros((idx.len(), surv.ncols()));
                for (r, &i) in idx.iter().enumerate() {
                    rows.row_mut(r).assign(&surv.row(i));
                }
                let times = self.times.as_ref().expect("brier has times");
                let per_time = brier_core(&rows, &event, &time, &weighting, times)?;
                Ok(mean(&per_time))
            }
            _ => unreachable!("inputs always match the metric kind"),
        }
    }
}

fn resample_scores(scores: &RiskScores, idx: &[usize]) -> RiskScores {
    match scores {
        RiskScores::TimeIndependent(v) => {
            RiskScores::TimeIndependent(idx.iter().map(|&i| v[i]).collect())
        }
        RiskScores::TimeDependent(m) => {
            let mut out = Array2::zeros((idx.len(), m.ncols()));
            for (r, &i) in idx.iter().enumerate() {
                out.row_mut(r).assign(&m.row(i));
            }
            RiskScores::TimeDependent(out)
        }
    }
}

/// Paired two-sample comparison of two results for the same metric on the
/// same subjects. The statistic is the point difference divided by the
/// bootstrap standard error of the difference over shared resample indices,
/// with a normal tail per the alternative. Testing a result against itself
/// gives `z = 0`.
pub fn compare(a: &MetricResult, b: &MetricResult, alternative: Alternative) -> Result<f64> {
    if a.kind != b.kind {
        return Err(Error::UnpairedInputs {
            what: format!("comparing {} with {}", a.kind.name(), b.kind.name()),
        });
    }
    if a.event != b.event || a.time != b.time {
        return Err(Error::UnpairedInputs {
            what: "results were not computed on the same subjects".into(),
        });
    }
    if a.times != b.times {
        return Err(Error::UnpairedInputs {
            what: "results use different evaluation times".into(),
        });
    }
    if a.bootstrap_b != b.bootstrap_b || a.seed != b.seed {
        return Err(Error::UnpairedInputs {
            what: "results use different bootstrap settings, so resamples are not shared".into(),
        });
    }

    let diff = a.estimate - b.estimate;
    if diff == 0.0 {
        return Ok(p_from_z(0.0, alternative));
    }

    let (ra, rb) = (a.raw_replicates()?, b.raw_replicates()?);
    let diffs: Vec<f64> = ra
        .iter()
        .zip(rb)
        .filter_map(|(x, y)| match (x, y) {
            (Some(x), Some(y)) => Some(x - y),
            _ => None,
        })
        .collect();
    if diffs.len() < 2 {
        return Err(Error::MissingVariance {
            what: "not enough shared bootstrap replicates".into(),
        });
    }
    let m = mean(&diffs);
    let sd = (diffs.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / (diffs.len() - 1) as f64)
        .sqrt();
    if sd == 0.0 {
        return Err(Error::ZeroVariance {
            what: "bootstrap difference variance is zero away from equality".into(),
        });
    }
    Ok(p_from_z(diff / sd, alternative))
}

/// Fixed-schema JSON report for a metric evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub estimate: f64,
    pub se: Option<f64>,
    pub ci: [f64; 2],
    pub alpha: f64,
    pub p_value: f64,
    pub alternative: String,
    pub times: Option<Vec<f64>>,
    pub per_time: Option<Vec<f64>>,
    pub weighting: WeightProvenance,
    #[serde(rename = "B")]
    pub b: usize,
    pub seed: u64,
}

impl MetricResult {
    /// Assembles the full report: estimate, SE, CI, and the one-sample test
    /// against `null`.
    pub fn report(&self, alpha: f64, alternative: Alternative, null: f64) -> Result<MetricReport> {
        let (lo, hi) = self.confidence_interval(alpha)?;
        Ok(MetricReport {
            metric: self.kind.name().to_string(),
            estimate: self.estimate,
            se: self.se().ok(),
            ci: [lo, hi],
            alpha,
            p_value: self.p_value(alternative, null)?,
            alternative: alternative.name().to_string(),
            times: self.times.clone(),
            per_time: self.per_time.clone(),
            weighting: self.weighting(),
            b: self.bootstrap_b,
            seed: self.seed,
        })
    }
}
