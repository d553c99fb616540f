//! Feed-forward network mapping covariates to survival model parameters,
//! the Adam/SGD optimizers, the training loop, and text checkpoints.
//!
//! The network owns plain `f64` parameter matrices. Each forward pass for
//! training inserts them as leaves on a fresh tape, so gradients come back
//! through [`Tape::backward`] as leaf adjoints. Inference uses a tape-free
//! forward over the same values.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Node, Tape};
use crate::data::SurvivalDataset;
use crate::error::{Error, Result};
use crate::loss::{self, Reduction, TieMethod};
use crate::momentum::{MemoryBank, MomentumPair};

/// Multi-layer perceptron with `relu` between layers and a linear output.
/// The output dimension is 1 for Cox log hazards and 2 for Weibull log
/// scale/shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array2<f64>>,
}

/// Tape handles for one forward pass: the parameter leaves that receive
/// gradients.
#[derive(Debug, Clone)]
pub struct MlpLeaves {
    pub weights: Vec<Node>,
    pub biases: Vec<Node>,
}

impl Mlp {
    /// Deterministic initialization: weights uniform in
    /// `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` from the given seed, biases zero.
    pub fn init(sizes: &[usize], seed: u64) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::BadArchitecture {
                what: format!("need at least input and output sizes, got {sizes:?}"),
            });
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::BadArchitecture {
                what: format!("layer sizes must be >= 1, got {sizes:?}"),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(sizes.len() - 1);
        let mut biases = Vec::with_capacity(sizes.len() - 1);
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let mut m = Array2::zeros((fan_in, fan_out));
            for v in m.iter_mut() {
                *v = rng.gen_range(-bound..=bound);
            }
            weights.push(m);
            biases.push(Array2::zeros((1, fan_out)));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            weights,
            biases,
        })
    }

    /// Builds a network from explicit parameter matrices.
    pub fn from_params(
        sizes: Vec<usize>,
        weights: Vec<Array2<f64>>,
        biases: Vec<Array2<f64>>,
    ) -> Result<Self> {
        if sizes.len() < 2 || weights.len() != sizes.len() - 1 || biases.len() != weights.len() {
            return Err(Error::BadArchitecture {
                what: "parameter count does not match layer sizes".into(),
            });
        }
        for (i, w) in sizes.windows(2).enumerate() {
            if weights[i].dim() != (w[0], w[1]) || biases[i].dim() != (1, w[1]) {
                return Err(Error::BadArchitecture {
                    what: format!("layer {i} parameter shapes do not chain"),
                });
            }
        }
        Ok(Self {
            sizes,
            weights,
            biases,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array2<f64>] {
        &self.biases
    }

    fn check_input(&self, x: &Array2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::ShapeMismatch {
                what: format!(
                    "input has {} columns, network expects {}",
                    x.ncols(),
                    self.input_dim()
                ),
            });
        }
        Ok(())
    }

    /// Forward pass recorded on `tape`. Parameters become leaves; the bias
    /// row is added through `ones(n x 1) . b`, which keeps every backward
    /// rule within the primitive set.
    pub fn forward_on_tape(&self, tape: &Tape, x: &Array2<f64>) -> Result<(Node, MlpLeaves)> {
        self.check_input(x)?;
        let n = x.nrows();
        let ones = tape.constant(Array2::ones((n, 1)));
        let mut h = tape.constant(x.clone());
        let mut leaves = MlpLeaves {
            weights: Vec::with_capacity(self.weights.len()),
            biases: Vec::with_capacity(self.biases.len()),
        };
        let last = self.weights.len() - 1;
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let wl = tape.leaf(w.clone());
            let bl = tape.leaf(b.clone());
            leaves.weights.push(wl);
            leaves.biases.push(bl);
            let z = tape.add(tape.matmul(h, wl)?, tape.matmul(ones, bl)?)?;
            h = if i < last { tape.relu(z)? } else { z };
        }
        Ok((h, leaves))
    }

    /// Pure, tape-free forward pass.
    pub fn forward_values(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        let mut h = x.clone();
        let last = self.weights.len() - 1;
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = h.dot(w);
            for mut row in z.outer_iter_mut() {
                row += &b.row(0);
            }
            if i < last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            h = z;
        }
        Ok(h)
    }

    /// Gradients for every parameter, read from the leaf adjoints of a
    /// completed backward pass.
    pub fn gradients(&self, tape: &Tape, leaves: &MlpLeaves) -> Vec<Array2<f64>> {
        leaves
            .weights
            .iter()
            .chain(&leaves.biases)
            .map(|&l| tape.adjoint(l))
            .collect()
    }

    /// Mutable views over all parameters, weights first then biases, in the
    /// same order as [`Mlp::gradients`].
    pub fn params_mut(&mut self) -> Vec<&mut Array2<f64>> {
        self.weights.iter_mut().chain(self.biases.iter_mut()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Flattened copy of all parameters (weights then biases, row-major).
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for m in self.weights.iter().chain(&self.biases) {
            out.extend(m.iter().copied());
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::ShapeMismatch {
                what: format!(
                    "{} flat parameters for a network with {}",
                    flat.len(),
                    self.param_count()
                ),
            });
        }
        let mut at = 0;
        for m in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            for v in m.iter_mut() {
                *v = flat[at];
                at += 1;
            }
        }
        Ok(())
    }
}

/// Which survival loss drives training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossKind {
    CoxBreslow,
    CoxEfron,
    Weibull,
}

impl LossKind {
    pub fn model_kind(self) -> ModelKind {
        match self {
            LossKind::CoxBreslow | LossKind::CoxEfron => ModelKind::Cox,
            LossKind::Weibull => ModelKind::Weibull,
        }
    }

    pub fn flag_name(self) -> &'static str {
        match self {
            LossKind::CoxBreslow => "cox-breslow",
            LossKind::CoxEfron => "cox-efron",
            LossKind::Weibull => "weibull",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cox-breslow" => Ok(LossKind::CoxBreslow),
            "cox-efron" => Ok(LossKind::CoxEfron),
            "weibull" => Ok(LossKind::Weibull),
            other => Err(Error::BadConfig {
                what: format!("unknown loss `{other}`"),
            }),
        }
    }
}

/// Model family a checkpoint belongs to. The Cox model has no closed
/// survival function here, which is what makes Brier evaluation impossible
/// for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Cox,
    Weibull,
}

/// First-order optimizer choice. The default Adam settings follow the
/// common lr 1e-3, beta 0.9/0.999, eps 1e-8 convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OptimizerKind {
    Adam { lr: f64 },
    Sgd { lr: f64 },
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::Adam { lr: 1e-3 }
    }
}

/// Adam state: per-parameter first and second moment estimates with bias
/// correction.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
    step: u64,
}

impl AdamState {
    pub fn new(lr: f64, shapes: &[(usize, usize)]) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: shapes.iter().map(|&s| Array2::zeros(s)).collect(),
            v: shapes.iter().map(|&s| Array2::zeros(s)).collect(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One Adam update applied in place.
    pub fn step(&mut self, params: &mut [&mut Array2<f64>], grads: &[Array2<f64>]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::ShapeMismatch {
                what: "optimizer state does not match parameter count".into(),
            });
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            if p.dim() != g.dim() {
                return Err(Error::ShapeMismatch {
                    what: format!("gradient {:?} for parameter {:?}", g.dim(), p.dim()),
                });
            }
            m.zip_mut_with(g, |mi, &gi| *mi = self.beta1 * *mi + (1.0 - self.beta1) * gi);
            v.zip_mut_with(g, |vi, &gi| *vi = self.beta2 * *vi + (1.0 - self.beta2) * gi * gi);
            ndarray::Zip::from(&mut **p)
                .and(&*m)
                .and(&*v)
                .for_each(|pi, &mi, &vi| {
                    let m_hat = mi / bc1;
                    let v_hat = vi / bc2;
                    *pi -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
                });
        }
        Ok(())
    }
}

enum Optimizer {
    Adam(AdamState),
    Sgd { lr: f64 },
}

impl Optimizer {
    fn new(kind: OptimizerKind, shapes: &[(usize, usize)]) -> Self {
        match kind {
            OptimizerKind::Adam { lr } => Optimizer::Adam(AdamState::new(lr, shapes)),
            OptimizerKind::Sgd { lr } => Optimizer::Sgd { lr },
        }
    }

    fn step(&mut self, params: &mut [&mut Array2<f64>], grads: &[Array2<f64>]) -> Result<()> {
        match self {
            Optimizer::Adam(state) => state.step(params, grads),
            Optimizer::Sgd { lr } => {
                for (p, g) in params.iter_mut().zip(grads) {
                    p.zip_mut_with(g, |pi, &gi| *pi -= *lr * gi);
                }
                Ok(())
            }
        }
    }
}

/// Momentum wrapper settings: EMA rate and memory bank capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumSettings {
    pub rate: f64,
    pub capacity: usize,
}

impl Default for MomentumSettings {
    fn default() -> Self {
        Self {
            rate: 0.999,
            capacity: 512,
        }
    }
}

/// Training configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub shuffle: bool,
    pub loss: LossKind,
    pub reduction: Reduction,
    pub optimizer: OptimizerKind,
    pub momentum: Option<MomentumSettings>,
}

impl TrainConfig {
    pub fn new(loss: LossKind) -> Self {
        Self {
            epochs: 100,
            batch_size: 64,
            seed: 0,
            shuffle: true,
            loss,
            reduction: Reduction::Mean,
            optimizer: OptimizerKind::default(),
            momentum: None,
        }
    }
}

/// A trained model plus its per-epoch loss trace. `target` is present only
/// when training ran with the momentum wrapper.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Mlp,
    pub target: Option<Mlp>,
    pub trace: Vec<f64>,
}

impl TrainOutcome {
    /// Network that should serve predictions: the EMA target when present,
    /// the online model otherwise.
    pub fn inference_model(&self) -> &Mlp {
        self.target.as_ref().unwrap_or(&self.model)
    }
}

/// Computes the configured loss on a forward-pass output node.
pub fn loss_on_tape(
    tape: &Tape,
    theta: Node,
    event: &[bool],
    time: &[f64],
    kind: LossKind,
    reduction: Reduction,
) -> Result<Node> {
    match kind {
        LossKind::CoxBreslow => loss::cox_neg_partial_log_likelihood(
            tape,
            theta,
            event,
            time,
            TieMethod::Breslow,
            reduction,
        ),
        LossKind::CoxEfron => loss::cox_neg_partial_log_likelihood(
            tape,
            theta,
            event,
            time,
            TieMethod::Efron,
            reduction,
        ),
        LossKind::Weibull => {
            loss::weibull_neg_log_likelihood(tape, theta, event, time, reduction)
        }
    }
}

fn check_arch_for_loss(mlp: &Mlp, loss: LossKind) -> Result<()> {
    let out = mlp.output_dim();
    let ok = match loss {
        LossKind::CoxBreslow | LossKind::CoxEfron => out == 1,
        LossKind::Weibull => out == 1 || out == 2,
    };
    if !ok {
        return Err(Error::BadArchitecture {
            what: format!(
                "loss `{}` needs {} network output(s), architecture produces {out}",
                loss.flag_name(),
                match loss {
                    LossKind::Weibull => "2 (or 1 for the exponential special case)",
                    _ => "1",
                }
            ),
        });
    }
    Ok(())
}

/// Trains by mini-batch maximum likelihood. The trace holds the mean batch
/// loss per epoch. Cox batches without any event are skipped with a warning
/// (the partial likelihood is undefined there); a dataset on which every
/// batch is skipped is an error.
pub fn train(dataset: &SurvivalDataset, mlp: Mlp, config: &TrainConfig) -> Result<TrainOutcome> {
    if config.epochs == 0 {
        return Err(Error::BadConfig {
            what: "epochs must be >= 1".into(),
        });
    }
    if config.batch_size == 0 {
        return Err(Error::BadConfig {
            what: "batch size must be >= 1".into(),
        });
    }
    if let Some(m) = &config.momentum {
        if !(0.0..=1.0).contains(&m.rate) {
            return Err(Error::BadConfig {
                what: format!("momentum rate must lie in [0, 1], got {}", m.rate),
            });
        }
    }
    check_arch_for_loss(&mlp, config.loss)?;
    dataset.validate()?;
    if mlp.input_dim() != dataset.p() {
        return Err(Error::ShapeMismatch {
            what: format!(
                "dataset has {} covariates, network expects {}",
                dataset.p(),
                mlp.input_dim()
            ),
        });
    }

    let is_cox = matches!(config.loss, LossKind::CoxBreslow | LossKind::CoxEfron);
    if is_cox && dataset.event_count() == 0 {
        return Err(Error::NoEvents);
    }

    let shapes: Vec<(usize, usize)> = mlp
        .weights()
        .iter()
        .chain(mlp.biases())
        .map(|m| m.dim())
        .collect();
    let mut optimizer = Optimizer::new(config.optimizer, &shapes);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut momentum = config
        .momentum
        .map(|settings| (MomentumPair::new(mlp.clone(), settings.rate), MemoryBank::new(settings.capacity)));
    let mut online = mlp;

    let n = dataset.n();
    let mut trace = Vec::with_capacity(config.epochs);
    for _epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        if config.shuffle {
            use rand::seq::SliceRandom;
            order.shuffle(&mut rng);
        }

        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let x = {
                let mut xb = Array2::zeros((chunk.len(), dataset.p()));
                for (r, &i) in chunk.iter().enumerate() {
                    xb.row_mut(r).assign(&dataset.covariates().row(i));
                }
                xb
            };
            let event: Vec<bool> = chunk.iter().map(|&i| dataset.event()[i]).collect();
            let time: Vec<f64> = chunk.iter().map(|&i| dataset.time()[i]).collect();

            let combined_events = event.iter().any(|&e| e)
                || momentum
                    .as_ref()
                    .map(|(_, bank)| bank.entries().iter().any(|e| e.event))
                    .unwrap_or(false);
            if is_cox && !combined_events {
                log::warn!(
                    "skipping a batch of {} subjects with no events; the Cox partial likelihood is undefined there",
                    chunk.len()
                );
                continue;
            }

            let tape = Tape::new();
            let loss_value = if let Some((pair, bank)) = momentum.as_mut() {
                let (loss_node, leaves, _target_leaves) = crate::momentum::momentum_loss(
                    &tape,
                    pair,
                    bank,
                    &x,
                    &event,
                    &time,
                    config.loss,
                    config.reduction,
                )?;
                let value = tape.scalar_value(loss_node);
                tape.backward(loss_node)?;
                let grads = pair.online().gradients(&tape, &leaves);
                optimizer.step(&mut pair.online_mut().params_mut(), &grads)?;
                pair.ema_update();
                value
            } else {
                let (theta, leaves) = online.forward_on_tape(&tape, &x)?;
                let loss_node =
                    loss_on_tape(&tape, theta, &event, &time, config.loss, config.reduction)?;
                let value = tape.scalar_value(loss_node);
                tape.backward(loss_node)?;
                let grads = online.gradients(&tape, &leaves);
                optimizer.step(&mut online.params_mut(), &grads)?;
                value
            };

            if !loss_value.is_finite() {
                return Err(Error::DomainError {
                    what: format!("training loss became non-finite ({loss_value})"),
                });
            }
            epoch_loss += loss_value;
            batches += 1;
        }

        if batches == 0 {
            return Err(Error::NoEvents);
        }
        trace.push(epoch_loss / batches as f64);
    }

    Ok(match momentum {
        Some((pair, _)) => {
            let (online, target) = pair.into_parts();
            TrainOutcome {
                model: online,
                target: Some(target),
                trace,
            }
        }
        None => TrainOutcome {
            model: online,
            target: None,
            trace,
        },
    })
}

/// Self-describing decimal-text checkpoint: architecture sizes and every
/// parameter value, with the optional EMA target network alongside.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub model: ModelKind,
    pub loss: String,
    pub sizes: Vec<usize>,
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetParams>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetParams {
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
}

pub const CHECKPOINT_FORMAT: &str = "survkit-checkpoint-v1";

fn weights_to_nested(weights: &[Array2<f64>]) -> Vec<Vec<Vec<f64>>> {
    weights
        .iter()
        .map(|w| w.outer_iter().map(|r| r.to_vec()).collect())
        .collect()
}

fn biases_to_nested(biases: &[Array2<f64>]) -> Vec<Vec<f64>> {
    biases.iter().map(|b| b.row(0).to_vec()).collect()
}

fn nested_to_params(
    sizes: &[usize],
    weights: &[Vec<Vec<f64>>],
    biases: &[Vec<f64>],
) -> Result<(Vec<Array2<f64>>, Vec<Array2<f64>>)> {
    let bad = |what: String| Error::Checkpoint { what };
    if sizes.len() < 2 || weights.len() != sizes.len() - 1 || biases.len() != weights.len() {
        return Err(bad("layer counts do not match sizes".into()));
    }
    let mut ws = Vec::with_capacity(weights.len());
    let mut bs = Vec::with_capacity(biases.len());
    for (i, dims) in sizes.windows(2).enumerate() {
        let (rows, cols) = (dims[0], dims[1]);
        if weights[i].len() != rows || weights[i].iter().any(|r| r.len() != cols) {
            return Err(bad(format!("weight {i} is not {rows} x {cols}")));
        }
        if biases[i].len() != cols {
            return Err(bad(format!("bias {i} is not length {cols}")));
        }
        let flat: Vec<f64> = weights[i].iter().flatten().copied().collect();
        ws.push(Array2::from_shape_vec((rows, cols), flat).unwrap());
        bs.push(Array2::from_shape_vec((1, cols), biases[i].clone()).unwrap());
    }
    Ok((ws, bs))
}

impl Checkpoint {
    pub fn from_outcome(outcome: &TrainOutcome, loss: LossKind) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            model: loss.model_kind(),
            loss: loss.flag_name().to_string(),
            sizes: outcome.model.sizes().to_vec(),
            weights: weights_to_nested(outcome.model.weights()),
            biases: biases_to_nested(outcome.model.biases()),
            target: outcome.target.as_ref().map(|t| TargetParams {
                weights: weights_to_nested(t.weights()),
                biases: biases_to_nested(t.biases()),
            }),
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let ckpt: Checkpoint = serde_json::from_str(&text)?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint {
                what: format!("unsupported checkpoint format `{}`", ckpt.format),
            });
        }
        Ok(ckpt)
    }

    /// The online network.
    pub fn model(&self) -> Result<Mlp> {
        let (w, b) = nested_to_params(&self.sizes, &self.weights, &self.biases)?;
        Mlp::from_params(self.sizes.clone(), w, b)
    }

    /// The network to use for predictions: the stored EMA target when
    /// present, otherwise the online network.
    pub fn inference_model(&self) -> Result<Mlp> {
        match &self.target {
            Some(t) => {
                let (w, b) = nested_to_params(&self.sizes, &t.weights, &t.biases)?;
                Mlp::from_params(self.sizes.clone(), w, b)
            }
            None => self.model(),
        }
    }
}
