//! Momentum wrapper for rank-based survival losses: an EMA target network
//! and a FIFO memory bank of target outputs that enlarge the effective batch
//! presented to the loss, decoupling the loss from the mini-batch size.
//!
//! The online network is the only one gradients reach. The target network is
//! an exponential moving average of the online parameters and is never
//! gradient-updated; its outputs enter the bank as plain constants. A bank
//! push happens after the loss of the current step is built, so a sample
//! never appears in both the live batch and the bank within one step.
//! Inference goes through the target network.

use std::collections::VecDeque;

use ndarray::Array2;

use crate::autodiff::{Node, Tape};
use crate::error::{Error, Result};
use crate::loss::Reduction;
use crate::net::{loss_on_tape, LossKind, Mlp, MlpLeaves};

/// Online network plus its EMA target. Immediately after construction the
/// target is an exact copy of the online network.
#[derive(Debug, Clone)]
pub struct MomentumPair {
    online: Mlp,
    target: Mlp,
    rate: f64,
}

impl MomentumPair {
    pub fn new(online: Mlp, rate: f64) -> Self {
        let target = online.clone();
        Self {
            online,
            target,
            rate,
        }
    }

    pub fn online(&self) -> &Mlp {
        &self.online
    }

    pub fn online_mut(&mut self) -> &mut Mlp {
        &mut self.online
    }

    pub fn target(&self) -> &Mlp {
        &self.target
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// `target <- rate * target + (1 - rate) * online`, elementwise.
    /// Runs once per optimizer step, after the online update.
    pub fn ema_update(&mut self) {
        let rate = self.rate;
        let online_params: Vec<&Array2<f64>> =
            self.online.weights().iter().chain(self.online.biases()).collect();
        for (t, o) in self.target.params_mut().into_iter().zip(online_params) {
            t.zip_mut_with(o, |ti, &oi| *ti = rate * *ti + (1.0 - rate) * oi);
        }
    }

    /// Target-network forward pass; no tape is recorded.
    pub fn infer(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.target.forward_values(x)
    }

    pub fn into_parts(self) -> (Mlp, Mlp) {
        (self.online, self.target)
    }
}

/// One remembered subject: the target network's output row and the survival
/// data needed to place it in a risk set.
#[derive(Debug, Clone)]
pub struct BankEntry {
    pub theta: Vec<f64>,
    pub event: bool,
    pub time: f64,
}

/// FIFO queue of target outputs with bounded capacity.
#[derive(Debug, Clone)]
pub struct MemoryBank {
    entries: VecDeque<BankEntry>,
    capacity: usize,
}

impl MemoryBank {
    pub fn new(capacity: usize) -> Self {
        Self {
            entries: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &VecDeque<BankEntry> {
        &self.entries
    }

    /// Appends a batch of target outputs, evicting the oldest entries once
    /// the capacity is exceeded.
    pub fn push_batch(&mut self, theta: &Array2<f64>, event: &[bool], time: &[f64]) {
        if self.capacity == 0 {
            return;
        }
        for (i, (&e, &t)) in event.iter().zip(time).enumerate() {
            self.entries.push_back(BankEntry {
                theta: theta.row(i).to_vec(),
                event: e,
                time: t,
            });
            if self.entries.len() > self.capacity {
                self.entries.pop_front();
            }
        }
    }

    fn theta_matrix(&self, out_dim: usize) -> Array2<f64> {
        let mut m = Array2::zeros((self.entries.len(), out_dim));
        for (r, entry) in self.entries.iter().enumerate() {
            for (c, &v) in entry.theta.iter().enumerate() {
                m[(r, c)] = v;
            }
        }
        m
    }
}

/// Builds the momentum loss for one step: the base loss evaluated on the
/// online outputs concatenated with the bank's stored constants, after which
/// the current batch's target outputs are pushed into the bank.
///
/// Returns the loss node, the online parameter leaves (which carry the
/// gradients), and the target parameter leaves. The target leaves sit on the
/// tape but feed no operation, so their adjoints stay exactly zero through
/// any backward pass.
#[allow(clippy::too_many_arguments)]
pub fn momentum_loss(
    tape: &Tape,
    pair: &MomentumPair,
    bank: &mut MemoryBank,
    x: &Array2<f64>,
    event: &[bool],
    time: &[f64],
    loss: LossKind,
    reduction: Reduction,
) -> Result<(Node, MlpLeaves, MlpLeaves)> {
    if x.nrows() == 0 {
        return Err(Error::EmptyDataset);
    }
    if event.len() != x.nrows() || time.len() != x.nrows() {
        return Err(Error::LengthMismatch {
            what: format!(
                "{} covariate rows, {} events, {} times",
                x.nrows(),
                event.len(),
                time.len()
            ),
        });
    }

    let (theta_online, online_leaves) = pair.online().forward_on_tape(tape, x)?;

    let target_leaves = MlpLeaves {
        weights: pair.target().weights().iter().map(|w| tape.leaf(w.clone())).collect(),
        biases: pair.target().biases().iter().map(|b| tape.leaf(b.clone())).collect(),
    };

    let loss_node = if bank.is_empty() {
        loss_on_tape(tape, theta_online, event, time, loss, reduction)?
    } else {
        let out_dim = pair.online().output_dim();
        let bank_theta = tape.constant(bank.theta_matrix(out_dim));
        let combined = tape.concat_rows(&[theta_online, bank_theta])?;
        let mut all_event = event.to_vec();
        let mut all_time = time.to_vec();
        all_event.extend(bank.entries().iter().map(|e| e.event));
        all_time.extend(bank.entries().iter().map(|e| e.time));
        loss_on_tape(tape, combined, &all_event, &all_time, loss, reduction)?
    };

    let target_out = pair.infer(x)?;
    bank.push_batch(&target_out, event, time);

    Ok((loss_node, online_leaves, target_leaves))
}
