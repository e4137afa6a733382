use super::EvalError;
use serde::{Deserialize, Serialize};

pub const DEFAULT_PATIENCE: usize = 50;
pub const DEFAULT_UPPER_LIMIT: usize = 3000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// `k` consecutive epochs without a strictly lower loss.
    Patience,
    UpperLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Decision {
    Continue,
    Stop {
        reason: StopReason,
        /// 1-based epoch with the lowest loss; earliest on ties.
        best_epoch: usize,
        best_loss: f64,
    },
}

/// Halts after `k` consecutive epochs whose loss is not strictly below the
/// best seen so far, or at `upper_limit` epochs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopState {
    pub best_loss: f64,
    /// 0 until the first epoch is observed.
    pub best_epoch: usize,
    pub stale_count: usize,
    pub epoch: usize,
    pub k: usize,
    pub upper_limit: usize,
}

impl Default for EarlyStopState {
    fn default() -> Self {
        EarlyStopState::new(DEFAULT_PATIENCE, DEFAULT_UPPER_LIMIT)
    }
}

impl EarlyStopState {
    pub fn new(k: usize, upper_limit: usize) -> Self {
        assert!(k >= 1 && upper_limit >= 1, "patience and upper limit must be positive");
        EarlyStopState {
            best_loss: f64::INFINITY,
            best_epoch: 0,
            stale_count: 0,
            epoch: 0,
            k,
            upper_limit,
        }
    }

    /// Observes the loss of the next epoch.
    pub fn step(self, epoch_loss: f64) -> Result<(EarlyStopState, Decision), EvalError> {
        if !epoch_loss.is_finite() {
            return Err(EvalError::NonFiniteLoss(epoch_loss));
        }
        let mut next = self;
        next.epoch += 1;
        if epoch_loss < next.best_loss {
            next.best_loss = epoch_loss;
            next.best_epoch = next.epoch;
            next.stale_count = 0;
        } else {
            next.stale_count += 1;
        }
        let reason = if next.stale_count >= next.k {
            Some(StopReason::Patience)
        } else if next.epoch >= next.upper_limit {
            Some(StopReason::UpperLimit)
        } else {
            None
        };
        let decision = match reason {
            Some(reason) => Decision::Stop {
                reason,
                best_epoch: next.best_epoch,
                best_loss: next.best_loss,
            },
            None => Decision::Continue,
        };
        Ok((next, decision))
    }
}
