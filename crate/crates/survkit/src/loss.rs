//! Negative log-likelihood losses for survival models, differentiable
//! through the autodiff tape.
//!
//! Two model families are covered: the Cox proportional hazards model, whose
//! loss is the negative partial log-likelihood with a choice of Breslow or
//! Efron handling for tied event times, and the Weibull accelerated failure
//! time model, whose loss is the negative of the full log-likelihood with a
//! per-subject log scale and log shape. Every log/exp composition routes
//! through the masked `logsumexp` or a max-capped `exp`, so values never pass
//! through the probability scale on the way to the loss.
//!
//! Risk sets use `time_j >= t`: subjects censored exactly at an event time
//! are still at risk there.

use ndarray::Array2;

use crate::autodiff::{column_matrix, Node, Tape};
use crate::data::SurvivalProbabilities;
use crate::error::{Error, Result};

/// Treatment of tied event times in the Cox partial likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieMethod {
    Breslow,
    Efron,
}

/// Loss reduction. Mean keeps the magnitude independent of batch size:
/// over events for Cox, over subjects for Weibull.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    Mean,
    Sum,
}

/// Exponent cap inside `exp` when leaving the log scale. Keeps the Weibull
/// cumulative hazard finite (and sums of it representable) for log-parameters
/// anywhere in a wide training range; the capped region has zero derivative,
/// like the flat side of `relu`.
const EXP_CAP: f64 = 690.0;

fn check_batch(n_rows: usize, event: &[bool], time: &[f64]) -> Result<()> {
    if event.len() != n_rows || time.len() != n_rows {
        return Err(Error::LengthMismatch {
            what: format!(
                "{n_rows} model outputs, {} event indicators, {} times",
                event.len(),
                time.len()
            ),
        });
    }
    Ok(())
}

/// Negative Cox partial log-likelihood of per-subject log relative hazards.
///
/// For each distinct event time `t` with death set `D` (size `d`) and risk
/// set `R = {j: time_j >= t}`, the log-likelihood contribution is
/// `sum_{i in D} h_i` minus `d * logsumexp_R(h)` under Breslow, or minus
/// `sum_{l=0}^{d-1} log(sum_R e^h - (l/d) sum_D e^h)` under Efron, with the
/// Efron terms rewritten as `lse_R + log(1 - (l/d) exp(lse_D - lse_R))` so
/// everything stays max-shifted.
pub fn cox_neg_partial_log_likelihood(
    tape: &Tape,
    log_hazards: Node,
    event: &[bool],
    time: &[f64],
    ties: TieMethod,
    reduction: Reduction,
) -> Result<Node> {
    let (n, cols) = tape.shape(log_hazards);
    if cols != 1 {
        return Err(Error::ShapeMismatch {
            what: format!("log hazards must be n x 1, got {n} x {cols}"),
        });
    }
    check_batch(n, event, time)?;

    let mut event_times: Vec<f64> = event
        .iter()
        .zip(time)
        .filter(|(&e, _)| e)
        .map(|(_, &t)| t)
        .collect();
    if event_times.is_empty() {
        return Err(Error::NoEvents);
    }
    let total_events = event_times.len();
    event_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    event_times.dedup();

    let mut contributions = Vec::with_capacity(event_times.len());
    for &t in &event_times {
        let deaths: Vec<usize> = (0..n).filter(|&i| event[i] && time[i] == t).collect();
        let risk_mask: Vec<bool> = (0..n).map(|j| time[j] >= t).collect();
        let d = deaths.len();

        let death_sum = tape.sum(tape.gather_rows(log_hazards, deaths.clone())?)?;
        let lse_risk = tape.logsumexp_masked(log_hazards, risk_mask)?;

        let denom_sum = match ties {
            TieMethod::Breslow => tape.mul(tape.scalar(d as f64), lse_risk)?,
            TieMethod::Efron => {
                let mut acc = lse_risk; // l = 0 term is exactly the risk-set logsumexp
                if d > 1 {
                    let death_mask: Vec<bool> =
                        (0..n).map(|j| deaths.contains(&j)).collect();
                    let lse_death = tape.logsumexp_masked(log_hazards, death_mask)?;
                    let ratio = tape.exp(tape.sub(lse_death, lse_risk)?)?;
                    let one = tape.scalar(1.0);
                    for l in 1..d {
                        let frac = tape.scalar(l as f64 / d as f64);
                        let inner = tape.sub(one, tape.mul(frac, ratio)?)?;
                        let term = tape.add(lse_risk, tape.log(inner)?)?;
                        acc = tape.add(acc, term)?;
                    }
                }
                acc
            }
        };
        contributions.push(tape.sub(death_sum, denom_sum)?);
    }

    let log_lik = tape.sum(tape.concat_rows(&contributions)?)?;
    let loss = tape.neg(log_lik)?;
    match reduction {
        Reduction::Sum => Ok(loss),
        Reduction::Mean => tape.mul(tape.scalar(1.0 / total_events as f64), loss),
    }
}

/// Negative Weibull AFT log-likelihood.
///
/// `log_params` is n x 2 (column 0 the log scale, column 1 the log shape) or
/// n x 1, in which case the shape is fixed at one and the model degenerates
/// to the exponential. The per-subject log-likelihood is
/// `event * [log k - log lambda + (k - 1)(log t - log lambda)] - (t/lambda)^k`
/// with the power computed as `exp(k * (log t - log lambda))`.
pub fn weibull_neg_log_likelihood(
    tape: &Tape,
    log_params: Node,
    event: &[bool],
    time: &[f64],
    reduction: Reduction,
) -> Result<Node> {
    let (n, cols) = tape.shape(log_params);
    if cols != 1 && cols != 2 {
        return Err(Error::ShapeMismatch {
            what: format!("Weibull parameters must be n x 1 or n x 2, got {n} x {cols}"),
        });
    }
    check_batch(n, event, time)?;
    if let Some(&bad) = time.iter().find(|&&t| t <= 0.0) {
        return Err(Error::DomainError {
            what: format!("Weibull likelihood needs times > 0, got {bad}"),
        });
    }

    let (log_scale, log_shape) = split_log_params(tape, log_params, cols)?;
    let ln_t = tape.column(&time.iter().map(|t| t.ln()).collect::<Vec<_>>());
    let ev = tape.column(&event.iter().map(|&e| f64::from(u8::from(e))).collect::<Vec<_>>());
    let ones = tape.constant(Array2::ones((n, 1)));

    let shape = tape.exp(log_shape)?;
    let z = tape.sub(ln_t, log_scale)?;
    // (t / lambda)^k, capped on the exponent scale.
    let cum_hazard = tape.exp(tape.clamp_max(tape.mul(shape, z)?, EXP_CAP)?)?;

    let log_hazard_t = tape.add(
        tape.sub(log_shape, log_scale)?,
        tape.mul(tape.sub(shape, ones)?, z)?,
    )?;
    let event_part = tape.mul(ev, log_hazard_t)?;
    let per_subject = tape.sub(event_part, cum_hazard)?;

    let total = match reduction {
        Reduction::Mean => tape.mean(per_subject)?,
        Reduction::Sum => tape.sum(per_subject)?,
    };
    tape.neg(total)
}

fn split_log_params(tape: &Tape, log_params: Node, cols: usize) -> Result<(Node, Node)> {
    if cols == 1 {
        let (n, _) = tape.shape(log_params);
        let zero_shape = tape.constant(Array2::zeros((n, 1)));
        return Ok((log_params, zero_shape));
    }
    let select0 = tape.constant(Array2::from_shape_vec((2, 1), vec![1.0, 0.0]).unwrap());
    let select1 = tape.constant(Array2::from_shape_vec((2, 1), vec![0.0, 1.0]).unwrap());
    Ok((
        tape.matmul(log_params, select0)?,
        tape.matmul(log_params, select1)?,
    ))
}

/// Weibull survival function `S(t | i) = exp(-(t / lambda_i)^{k_i})` on
/// plain parameter values, evaluated at each requested time.
///
/// `log_params` is n x 2 (or n x 1 for the exponential special case) exactly
/// as in [`weibull_neg_log_likelihood`].
pub fn weibull_survival(
    log_params: &Array2<f64>,
    eval_times: &[f64],
) -> Result<SurvivalProbabilities> {
    let cols = log_params.ncols();
    if cols != 1 && cols != 2 {
        return Err(Error::ShapeMismatch {
            what: format!("Weibull parameters must be n x 1 or n x 2, got {cols} columns"),
        });
    }
    if let Some(&bad) = eval_times.iter().find(|&&t| t <= 0.0) {
        return Err(Error::DomainError {
            what: format!("survival function needs evaluation times > 0, got {bad}"),
        });
    }
    let n = log_params.nrows();
    let mut out = Array2::zeros((n, eval_times.len()));
    for i in 0..n {
        let log_scale = log_params[(i, 0)];
        let shape = if cols == 2 { log_params[(i, 1)].exp() } else { 1.0 };
        for (j, &t) in eval_times.iter().enumerate() {
            let exponent = (shape * (t.ln() - log_scale)).min(EXP_CAP);
            out[(i, j)] = (-exponent.exp()).exp();
        }
    }
    SurvivalProbabilities::new(out)
}
