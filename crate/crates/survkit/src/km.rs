//! Kaplan-Meier product-limit estimation of survival and censoring
//! distributions, and the inverse-probability-of-censoring weights the
//! evaluation metrics use.
//!
//! Ties between events and censorings at the same time follow the standard
//! convention that events precede censorings: a subject censored at `t` is
//! still in the risk set of an event at `t`. A zero censoring-survival
//! denominator is a hard error rather than a clipped weight, so weight
//! explosions cannot silently corrupt a metric.

use crate::data::{SubjectWeights, WeightProvenance};
use crate::error::{Error, Result};

/// Right-continuous non-increasing step function with value 1 before the
/// first jump.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    jump_times: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    /// `jump_times` strictly increasing; `values[i]` is the value on
    /// `[jump_times[i], jump_times[i+1])`.
    pub fn new(jump_times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if jump_times.len() != values.len() {
            return Err(Error::LengthMismatch {
                what: format!(
                    "{} jump times for {} values",
                    jump_times.len(),
                    values.len()
                ),
            });
        }
        let mut prev_t = f64::NEG_INFINITY;
        let mut prev_v = 1.0;
        for (&t, &v) in jump_times.iter().zip(&values) {
            if t <= prev_t {
                return Err(Error::DomainError {
                    what: "jump times must be strictly increasing".into(),
                });
            }
            if !(0.0..=1.0).contains(&v) || v > prev_v {
                return Err(Error::DomainError {
                    what: "step values must be non-increasing within [0, 1]".into(),
                });
            }
            prev_t = t;
            prev_v = v;
        }
        Ok(Self { jump_times, values })
    }

    /// Right-continuous evaluation: the value after the last jump at or
    /// before `t`.
    pub fn eval(&self, t: f64) -> f64 {
        match self.jump_times.partition_point(|&jt| jt <= t) {
            0 => 1.0,
            k => self.values[k - 1],
        }
    }

    /// Left limit: the value just before `t`.
    pub fn eval_left(&self, t: f64) -> f64 {
        match self.jump_times.partition_point(|&jt| jt < t) {
            0 => 1.0,
            k => self.values[k - 1],
        }
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Kaplan-Meier estimate of the survival function:
/// the product over distinct event times `t_j <= t` of `1 - d_j / r_j`,
/// with `d_j` events at `t_j` and risk set `r_j = #{time >= t_j}`.
pub fn kaplan_meier(event: &[bool], time: &[f64]) -> Result<StepFunction> {
    if event.len() != time.len() {
        return Err(Error::LengthMismatch {
            what: format!("{} events for {} times", event.len(), time.len()),
        });
    }
    if event.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some((row, &t)) = time
        .iter()
        .enumerate()
        .find(|(_, &t)| !t.is_finite() || t <= 0.0)
    {
        return Err(Error::NonPositiveTime { row, value: t });
    }

    let n = time.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| time[a].partial_cmp(&time[b]).unwrap());

    let mut jump_times = Vec::new();
    let mut values = Vec::new();
    let mut surv = 1.0;
    let mut at_risk = n;
    // While nobody has been censored the product telescopes to
    // survivors / n; keeping that path in integers makes the estimate agree
    // with the empirical survival fraction as an exact rational.
    let mut survivors_exact = Some(n);
    let mut i = 0;
    while i < n {
        let t = time[order[i]];
        let mut deaths = 0usize;
        let mut leaving = 0usize;
        while i < n && time[order[i]] == t {
            if event[order[i]] {
                deaths += 1;
            }
            leaving += 1;
            i += 1;
        }
        if deaths > 0 {
            surv = match survivors_exact {
                Some(s) => (s - deaths) as f64 / n as f64,
                None => surv * (at_risk - deaths) as f64 / at_risk as f64,
            };
            jump_times.push(t);
            values.push(surv);
        }
        if leaving > deaths {
            survivors_exact = None; // a censoring breaks the telescoping
        } else if let Some(s) = survivors_exact.as_mut() {
            *s -= deaths;
        }
        at_risk -= leaving;
    }
    StepFunction::new(jump_times, values)
}

/// Kaplan-Meier estimate of the censoring survival function `G`, obtained
/// by complementing the event indicator so censorings play the event role.
pub fn censoring_distribution(event: &[bool], time: &[f64]) -> Result<StepFunction> {
    let complemented: Vec<bool> = event.iter().map(|&e| !e).collect();
    kaplan_meier(&complemented, time)
}

/// IPCW weights at horizon `t`: an observed event at or before `t` weighs
/// `1 / G(time-)` (left limit), a subject still under observation after `t`
/// weighs `1 / G(t)`, everyone else weighs zero.
pub fn ipcw_weights(
    censoring: &StepFunction,
    event: &[bool],
    time: &[f64],
    horizon: f64,
) -> Result<SubjectWeights> {
    if event.len() != time.len() {
        return Err(Error::LengthMismatch {
            what: format!("{} events for {} times", event.len(), time.len()),
        });
    }
    let mut weights = Vec::with_capacity(event.len());
    for i in 0..event.len() {
        let w = if event[i] && time[i] <= horizon {
            let g = censoring.eval_left(time[i]);
            if g == 0.0 {
                return Err(Error::DegenerateCensoring { subject: i });
            }
            1.0 / g
        } else if time[i] > horizon {
            let g = censoring.eval(horizon);
            if g == 0.0 {
                return Err(Error::DegenerateCensoring { subject: i });
            }
            1.0 / g
        } else {
            0.0
        };
        weights.push(w);
    }
    SubjectWeights::new(weights, WeightProvenance::Ipcw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn all_events_product_limit() {
        let s = kaplan_meier(&[true; 4], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.jump_times(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.values(), &[0.75, 0.5, 0.25, 0.0]);
        assert_eq!(s.eval(0.5), 1.0);
        assert_eq!(s.eval(2.5), 0.5);
        assert_eq!(s.eval(10.0), 0.0);
    }

    #[test]
    fn no_events_keeps_survival_at_one() {
        let s = kaplan_meier(&[false; 3], &[1.0, 2.0, 3.0]).unwrap();
        assert!(s.jump_times().is_empty());
        assert_eq!(s.eval(100.0), 1.0);
    }

    #[test]
    fn censored_middle_subject() {
        // Events at 1 and 3, censoring at 2: risk set at 3 is only subject 3.
        let s = kaplan_meier(&[true, false, true], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.jump_times(), &[1.0, 3.0]);
        assert_relative_eq!(s.eval(1.0), 2.0 / 3.0, max_relative = 1e-15);
        assert_eq!(s.eval(3.0), 0.0);
    }

    #[test]
    fn censoring_distribution_mirrors_roles() {
        // Censorings at 1 and 3, event at 2.
        let g = censoring_distribution(&[false, true, false], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(g.jump_times(), &[1.0, 3.0]);
        assert_relative_eq!(g.eval(1.0), 2.0 / 3.0, max_relative = 1e-15);
        assert_eq!(g.eval(3.0), 0.0);

        let s = kaplan_meier(&[true, false, true], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(g.jump_times(), s.jump_times());
        assert_eq!(g.values(), s.values());
    }

    #[test]
    fn all_events_means_no_censoring_curve_drop() {
        let g = censoring_distribution(&[true; 3], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(g.eval(99.0), 1.0);
    }

    #[test]
    fn complementing_twice_returns_to_the_original_curve() {
        let event = [true, false, true, false, false, true];
        let time = [1.0, 1.5, 2.0, 2.0, 3.5, 4.0];
        let complement: Vec<bool> = event.iter().map(|&e| !e).collect();
        let twice: Vec<bool> = complement.iter().map(|&e| !e).collect();
        assert_eq!(
            kaplan_meier(&event, &time).unwrap(),
            kaplan_meier(&twice, &time).unwrap()
        );
    }

    #[test]
    fn no_censoring_matches_empirical_survival_exactly() {
        let time = [2.0, 1.0, 4.0, 2.0, 5.0, 3.0, 2.0];
        let n = time.len() as f64;
        let s = kaplan_meier(&[true; 7], &time).unwrap();
        for t in [0.5, 1.0, 1.5, 2.0, 3.0, 4.5, 5.0, 6.0] {
            let empirical = time.iter().filter(|&&u| u > t).count() as f64 / n;
            assert_eq!(s.eval(t), empirical, "at t = {t}");
        }
    }

    #[test]
    fn step_function_is_right_continuous_with_left_limits() {
        let s = kaplan_meier(&[true, true], &[1.0, 2.0]).unwrap();
        assert_eq!(s.eval(1.0), 0.5);
        assert_eq!(s.eval_left(1.0), 1.0);
        assert_eq!(s.eval_left(1.5), 0.5);
        assert_eq!(s.eval_left(2.0), 0.5);
        assert_eq!(s.eval(2.0), 0.0);
    }

    #[test]
    fn ipcw_without_censoring_is_all_ones_or_zero() {
        let event = [true, true, false, true];
        let time = [1.0, 2.0, 3.0, 4.0];
        let g = censoring_distribution(&[true; 4], &time).unwrap();
        let w = ipcw_weights(&g, &event, &time, 2.5).unwrap();
        // Subjects 0, 1 are events before the horizon; 2 and 3 are past it.
        assert_eq!(w.values(), &[1.0, 1.0, 1.0, 1.0]);

        let w = ipcw_weights(&g, &[true, false, false, true], &time, 3.5).unwrap();
        assert_eq!(w.values(), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(w.provenance(), WeightProvenance::Ipcw);
    }

    #[test]
    fn ipcw_boundary_subject_uses_horizon_value() {
        let event = [false, true, false];
        let time = [1.0, 2.0, 4.0];
        let g = censoring_distribution(&event, &time).unwrap();
        // Subject 2 is beyond the horizon 3.0, so it weighs 1/G(3.0).
        let w = ipcw_weights(&g, &event, &time, 3.0).unwrap();
        assert_relative_eq!(w.values()[2], 1.0 / g.eval(3.0), max_relative = 1e-15);
        // Subject 1 had its event at 2.0 <= 3.0: left limit at 2.0.
        assert_relative_eq!(w.values()[1], 1.0 / g.eval_left(2.0), max_relative = 1e-15);
        // Subject 0 was censored before the horizon: weight zero.
        assert_eq!(w.values()[0], 0.0);
    }

    #[test]
    fn zero_censoring_survival_is_a_hard_error() {
        // A reference sample fully censored by time 2 gives G(2) = 0; an
        // event at 3 in the evaluation sample then has an undefined weight.
        let g = censoring_distribution(&[false, false], &[1.0, 2.0]).unwrap();
        assert_eq!(g.eval(2.0), 0.0);
        let event = [true, true, true];
        let time = [1.0, 2.0, 3.0];
        match ipcw_weights(&g, &event, &time, 5.0) {
            Err(Error::DegenerateCensoring { subject }) => assert_eq!(subject, 2),
            other => panic!("expected DegenerateCensoring, got {other:?}"),
        }
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(kaplan_meier(&[], &[]), Err(Error::EmptyDataset)));
    }
}
