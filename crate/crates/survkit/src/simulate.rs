//! Synthetic survival data with known ground truth, plus a fixed suite of
//! edge-case datasets for exercising loss and metric corner cases.
//!
//! The generator draws covariates from a standard normal and event times
//! from a Weibull proportional hazards model by inverse-transform sampling:
//! `T = scale * (-ln U / exp(x . beta))^(1/shape)`. Censoring times are
//! exponential with the configured rate (rate zero means no censoring), and
//! an optional grid rounds observed times up so ties appear while positivity
//! is preserved. Everything is deterministic given the seed.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::SurvivalDataset;
use crate::error::{Error, Result};

/// Generator configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    /// Covariate count; `beta` must have this length.
    pub p: usize,
    pub beta: Vec<f64>,
    pub baseline_shape: f64,
    pub baseline_scale: f64,
    /// Rate of the exponential censoring distribution; 0 disables censoring.
    pub censoring_rate: f64,
    /// Round observed times up to multiples of this width to force ties.
    pub tie_grid: Option<f64>,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(n: usize, beta: Vec<f64>, seed: u64) -> Self {
        Self {
            n,
            p: beta.len(),
            beta,
            baseline_shape: 1.0,
            baseline_scale: 1.0,
            censoring_rate: 0.0,
            tie_grid: None,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::BadConfig {
                what: "n must be >= 1".into(),
            });
        }
        if self.beta.len() != self.p {
            return Err(Error::BadConfig {
                what: format!("beta has length {}, p is {}", self.beta.len(), self.p),
            });
        }
        if !(self.baseline_shape > 0.0) || !(self.baseline_scale > 0.0) {
            return Err(Error::BadConfig {
                what: "baseline shape and scale must be positive".into(),
            });
        }
        if self.censoring_rate < 0.0 {
            return Err(Error::BadConfig {
                what: "censoring rate must be non-negative".into(),
            });
        }
        if let Some(g) = self.tie_grid {
            if !(g > 0.0) {
                return Err(Error::BadConfig {
                    what: "tie grid width must be positive".into(),
                });
            }
        }
        Ok(())
    }
}

/// The generator parameters persisted next to a simulated dataset, so
/// consistency checks never have to re-derive them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub n: usize,
    pub p: usize,
    pub beta: Vec<f64>,
    pub baseline_shape: f64,
    pub baseline_scale: f64,
    pub censoring_rate: f64,
    pub tie_grid: Option<f64>,
    pub seed: u64,
    pub event_fraction: f64,
}

fn uniform_open(rng: &mut ChaCha8Rng) -> f64 {
    // Strictly inside (0, 1) so -ln keeps times positive and finite.
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 && u < 1.0 {
            return u;
        }
    }
}

/// Draws a dataset from the Weibull proportional hazards generator and
/// returns it with its ground-truth record.
pub fn simulate_weibull_cox(config: &SimConfig) -> Result<(SurvivalDataset, GroundTruth)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut covariates = Array2::zeros((config.n, config.p));
    let mut event = Vec::with_capacity(config.n);
    let mut time = Vec::with_capacity(config.n);
    for i in 0..config.n {
        let mut linear = 0.0;
        for j in 0..config.p {
            let x: f64 = rng.sample(StandardNormal);
            covariates[(i, j)] = x;
            linear += x * config.beta[j];
        }
        let u = uniform_open(&mut rng);
        let t_event = config.baseline_scale
            * (-u.ln() / linear.exp()).powf(1.0 / config.baseline_shape);
        let t_censor = if config.censoring_rate > 0.0 {
            -uniform_open(&mut rng).ln() / config.censoring_rate
        } else {
            f64::INFINITY
        };
        let observed = t_event.min(t_censor);
        let observed = match config.tie_grid {
            // Rounding up keeps every time strictly positive.
            Some(g) => (observed / g).ceil().max(1.0) * g,
            None => observed.max(f64::MIN_POSITIVE),
        };
        event.push(t_event <= t_censor);
        time.push(observed);
    }

    let dataset = SurvivalDataset::new(event, time, covariates)?;
    let truth = GroundTruth {
        n: config.n,
        p: config.p,
        beta: config.beta.clone(),
        baseline_shape: config.baseline_shape,
        baseline_scale: config.baseline_scale,
        censoring_rate: config.censoring_rate,
        tie_grid: config.tie_grid,
        seed: config.seed,
        event_fraction: dataset.event_count() as f64 / dataset.n() as f64,
    };
    Ok((dataset, truth))
}

/// Writes a simulated dataset in the canonical CSV schema together with its
/// ground-truth JSON sidecar.
pub fn save_with_ground_truth(
    dataset: &SurvivalDataset,
    truth: &GroundTruth,
    csv_path: &std::path::Path,
    json_path: &std::path::Path,
) -> Result<()> {
    dataset.write_csv_path(csv_path)?;
    let text = serde_json::to_string_pretty(truth)?;
    std::fs::write(json_path, text + "\n")?;
    Ok(())
}

/// Fixed, versioned small datasets covering the corner cases the losses and
/// metrics must handle: no events at all, a single subject, fully tied event
/// times, constant covariates (so any linear score is tied), no censoring,
/// and censoring only after the last event.
pub fn edge_case_suite() -> Vec<(&'static str, SurvivalDataset)> {
    let col = |values: &[f64]| {
        Array2::from_shape_vec((values.len(), 1), values.to_vec()).unwrap()
    };
    vec![
        (
            "all_censored",
            SurvivalDataset::new(
                vec![false; 4],
                vec![1.0, 2.0, 3.0, 4.0],
                col(&[0.4, -1.1, 0.3, 2.0]),
            )
            .unwrap(),
        ),
        (
            "single_subject",
            SurvivalDataset::new(vec![true], vec![2.0], col(&[0.5])).unwrap(),
        ),
        (
            "all_tied",
            SurvivalDataset::new(
                vec![true; 3],
                vec![1.0, 1.0, 1.0],
                col(&[-0.8, 0.1, 1.4]),
            )
            .unwrap(),
        ),
        (
            "all_tied_risk_grid",
            SurvivalDataset::new(
                vec![true, false, true, true],
                vec![1.0, 2.0, 3.0, 4.0],
                col(&[0.0, 0.0, 0.0, 0.0]),
            )
            .unwrap(),
        ),
        (
            "no_censoring",
            SurvivalDataset::new(
                vec![true; 5],
                vec![0.5, 1.0, 1.5, 2.5, 4.0],
                col(&[1.2, 0.7, -0.3, -0.9, 0.0]),
            )
            .unwrap(),
        ),
        (
            "censoring_after_last_event",
            SurvivalDataset::new(
                vec![true, true, false, false],
                vec![1.0, 2.0, 5.0, 6.0],
                col(&[0.9, -0.2, 0.4, -1.5]),
            )
            .unwrap(),
        ),
    ]
}
