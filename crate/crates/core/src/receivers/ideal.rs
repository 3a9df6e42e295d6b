use crate::signal::LinkState;

use super::metrics::{ideal_decide, ideal_threshold};
use super::{Decision, Receiver};

/// Symbol-by-symbol threshold detector that knows `n_r` and `n_b`.
///
/// In genie mode the threshold follows every [`LinkState`] the harness
/// reveals; in fixed mode it stays at the configured values.
#[derive(Debug, Clone)]
pub struct IdealReceiver {
    threshold: f64,
    genie: bool,
}

impl IdealReceiver {
    pub fn genie() -> Self {
        IdealReceiver {
            threshold: 0.0,
            genie: true,
        }
    }

    pub fn fixed(n_r: f64, n_b: f64) -> Self {
        IdealReceiver {
            threshold: ideal_threshold(n_r, n_b),
            genie: false,
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

impl Receiver for IdealReceiver {
    fn observe_link(&mut self, state: &LinkState) {
        if self.genie {
            self.threshold = ideal_threshold(state.n_r, state.n_b);
        }
    }

    fn push(&mut self, count: u32, out: &mut Vec<Decision>) {
        out.push(Decision::firm(ideal_decide(count, self.threshold)));
    }

    fn flush(&mut self, _out: &mut Vec<Decision>) {}
}
