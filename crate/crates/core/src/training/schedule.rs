/// Significant digits kept for learning rates, so that `0.001 * 0.9` is the
/// same number as the literal `0.0009`.
const LR_DIGITS: usize = 12;

pub(crate) fn round_lr(lr: f64) -> f64 {
    format!("{:.*e}", LR_DIGITS - 1, lr).parse().unwrap_or(lr)
}

/// One plateau reduction: `max(lr * factor, floor)`, none at or below the floor.
pub fn reduce_lr(lr: f64, factor: f64, floor: f64) -> f64 {
    if lr <= floor {
        lr
    } else {
        round_lr(lr * factor).max(floor)
    }
}

/// Reduce-on-plateau with zero improvement threshold.
///
/// A validation loss counts as a new best only when strictly lower than every
/// earlier one. After `patience` epochs without a new best the rate is
/// reduced and the count restarts.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauScheduler {
    pub patience: usize,
    pub factor: f64,
    pub floor: f64,
    lr: f64,
    best: f64,
    wait: usize,
}

impl PlateauScheduler {
    pub fn new(initial_lr: f64, patience: usize, factor: f64, floor: f64) -> Self {
        Self {
            patience,
            factor,
            floor,
            lr: initial_lr,
            best: f64::INFINITY,
            wait: 0,
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    /// Records the loss of a finished epoch and returns the rate for the next one.
    pub fn observe(&mut self, val_loss: f64) -> f64 {
        if val_loss < self.best {
            self.best = val_loss;
            self.wait = 0;
        } else {
            self.wait += 1;
            if self.wait >= self.patience && self.lr > self.floor {
                self.lr = reduce_lr(self.lr, self.factor, self.floor);
                self.wait = 0;
            }
        }
        self.lr
    }
}

/// Stateless form: the rate after `history` given the rate in use during its
/// last epoch, with patience 5, factor 0.9 and floor 0.0008.
pub fn plateau_schedule(history: &[f64], current_lr: f64) -> f64 {
    plateau_schedule_with(history, current_lr, 5, 0.9, 0.0008)
}

pub fn plateau_schedule_with(
    history: &[f64],
    current_lr: f64,
    patience: usize,
    factor: f64,
    floor: f64,
) -> f64 {
    if history.is_empty() || patience == 0 {
        return current_lr;
    }
    let mut best = f64::INFINITY;
    let mut best_at = 0;
    for (i, &v) in history.iter().enumerate() {
        if v < best {
            best = v;
            best_at = i;
        }
    }
    let since = history.len() - 1 - best_at;
    if since > 0 && since.is_multiple_of(patience) {
        reduce_lr(current_lr, factor, floor)
    } else {
        current_lr
    }
}
