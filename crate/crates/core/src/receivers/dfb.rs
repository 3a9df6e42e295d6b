//! Decision-feedback receivers: each slot is decided alone against the
//! statistics of past firm decisions held in a selective store.

use super::bootstrap::bootstrap_warmup;
use super::metrics::{glrt_constrained_metric, glrt_dfb_psi, glrt_labeling_is_physical, gmlsd_dfb_psi0};
use super::stats::{DetectedStore, WindowStats};
use super::{Decision, Receiver};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DfbRule {
    /// Unknown `n_r` and `n_b`; stores `L` counts of each class.
    Glrt,
    /// Known `n_b`; stores the `L` most recent 1-detected counts.
    Gmlsd { n_b: f64 },
}

impl DfbRule {
    /// Decision for `count` given the store; ties go to 0. The GLRT rule
    /// uses Ψ while both extensions are physical and otherwise compares the
    /// constrained metrics.
    pub fn decide(&self, store: &DetectedStore, count: u32) -> u8 {
        let psi = match *self {
            DfbRule::Glrt => {
                let s = store.stats();
                let on = s + WindowStats::slot(1, count);
                let off = s + WindowStats::slot(0, count);
                if glrt_labeling_is_physical(&on) && glrt_labeling_is_physical(&off) {
                    glrt_dfb_psi(&s, count)
                } else {
                    glrt_constrained_metric(&on) - glrt_constrained_metric(&off)
                }
            }
            DfbRule::Gmlsd { n_b } => {
                let s = store.stats();
                gmlsd_dfb_psi0(s.r_on, s.n_on, count, n_b)
            }
        };
        u8::from(psi > 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct DfbReceiver {
    rule: DfbRule,
    caps: (usize, usize),
    warmup_len: usize,
    warmup: Vec<u32>,
    store: Option<DetectedStore>,
}

impl DfbReceiver {
    pub fn glrt(window: usize) -> Self {
        assert!(window >= 1);
        DfbReceiver::new(DfbRule::Glrt, window, window, 2 * window)
    }

    pub fn gmlsd(window: usize, n_b: f64) -> Self {
        assert!(window >= 1);
        DfbReceiver::new(DfbRule::Gmlsd { n_b }, 0, window, 2 * window)
    }

    pub fn new(rule: DfbRule, cap0: usize, cap1: usize, warmup_len: usize) -> Self {
        assert!(warmup_len >= cap0 + cap1);
        DfbReceiver {
            rule,
            caps: (cap0, cap1),
            warmup_len,
            warmup: Vec::with_capacity(warmup_len),
            store: None,
        }
    }

    pub fn from_store(rule: DfbRule, store: DetectedStore) -> Self {
        DfbReceiver {
            rule,
            caps: (store.buf0.capacity(), store.buf1.capacity()),
            warmup_len: 0,
            warmup: Vec::new(),
            store: Some(store),
        }
    }

    pub fn store(&self) -> Option<&DetectedStore> {
        self.store.as_ref()
    }

    fn finish_warmup(&mut self, out: &mut Vec<Decision>) {
        let (store, bits) = bootstrap_warmup(&self.warmup, self.caps.0, self.caps.1);
        out.extend(bits.into_iter().map(Decision::provisional));
        self.warmup.clear();
        self.store = Some(store);
    }
}

impl Receiver for DfbReceiver {
    fn push(&mut self, count: u32, out: &mut Vec<Decision>) {
        match self.store.as_mut() {
            Some(store) => {
                let bit = self.rule.decide(store, count);
                store.push(bit, count);
                out.push(Decision::firm(bit));
            }
            None => {
                self.warmup.push(count);
                if self.warmup.len() == self.warmup_len {
                    self.finish_warmup(out);
                }
            }
        }
    }

    fn flush(&mut self, out: &mut Vec<Decision>) {
        if self.store.is_none() && !self.warmup.is_empty() {
            self.finish_warmup(out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glrt_rule_on_worked_store() {
        let mut store = DetectedStore::new(4, 4);
        for c in [1, 1, 1, 1] {
            store.push(0, c);
        }
        for c in [5, 5, 5, 5] {
            store.push(1, c);
        }
        assert_eq!(DfbRule::Glrt.decide(&store, 0), 0);
        assert_eq!(DfbRule::Glrt.decide(&store, 5), 1);
    }

    #[test]
    fn decisions_feed_back_into_store() {
        let mut rx = DfbReceiver::glrt(2);
        let mut out = Vec::new();
        for c in [2, 40, 3, 38, 41, 1, 0, 44] {
            rx.push(c, &mut out);
        }
        let bits: Vec<u8> = out.iter().map(|d| d.bit).collect();
        assert_eq!(bits, vec![0, 1, 0, 1, 1, 0, 0, 1]);
        assert_eq!(out.iter().filter(|d| d.provisional).count(), 4);
        let store = rx.store().unwrap();
        assert_eq!(store.buf1.iter().collect::<Vec<_>>(), vec![41, 44]);
        assert_eq!(store.buf0.iter().collect::<Vec<_>>(), vec![1, 0]);
    }

    #[test]
    fn gmlsd_rule_uses_only_ones() {
        let mut rx = DfbReceiver::gmlsd(2, 3.0);
        let mut out = Vec::new();
        for c in [2, 40, 3, 38, 41, 1, 0, 44] {
            rx.push(c, &mut out);
        }
        let bits: Vec<u8> = out[4..].iter().map(|d| d.bit).collect();
        assert_eq!(bits, vec![1, 0, 0, 1]);
        assert!(rx.store().unwrap().buf0.is_empty());
    }
}
