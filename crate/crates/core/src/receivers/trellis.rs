//! Two-state trellis search over the undecided tail, backed by a selective
//! store of firm decisions.
//!
//! Survivors are bitmasks with the oldest undecided slot at bit 0, so the
//! merge point is the number of trailing zeros of `path0 ^ path1`.

use std::collections::VecDeque;

use super::bootstrap::bootstrap_warmup;
use super::metrics::{glrt_constrained_metric, gmlsd_log_metric};
use super::stats::{DetectedStore, WindowStats};
use super::{Decision, Receiver};

/// Ongoing-buffer capacity used by the receivers.
pub const ONGOING_CAPACITY: usize = 30;

/// Sequence metric evaluated on store plus ongoing statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrellisMetric {
    Glrt,
    Gmlsd { n_b: f64 },
}

impl TrellisMetric {
    #[inline]
    pub fn eval(&self, stats: &WindowStats) -> f64 {
        match *self {
            TrellisMetric::Glrt => glrt_constrained_metric(stats),
            TrellisMetric::Gmlsd { n_b } => gmlsd_log_metric(stats, n_b),
        }
    }
}

/// The two survivors of the trellis over the ongoing slots.
#[derive(Debug, Clone)]
pub struct SurvivorPair {
    paths: [u64; 2],
    ongoing: [WindowStats; 2],
    counts: VecDeque<u32>,
    metrics: [f64; 2],
    capacity: usize,
}

impl SurvivorPair {
    pub fn new(capacity: usize) -> Self {
        assert!((1..=63).contains(&capacity), "ongoing capacity must be in 1..=63");
        SurvivorPair {
            paths: [0; 2],
            ongoing: [WindowStats::default(); 2],
            counts: VecDeque::with_capacity(capacity + 1),
            metrics: [f64::NEG_INFINITY; 2],
            capacity,
        }
    }

    /// Number of undecided slots `d`.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Survivor ending in node `node`, oldest slot first.
    pub fn path(&self, node: usize) -> Vec<u8> {
        (0..self.len()).map(|i| ((self.paths[node] >> i) & 1) as u8).collect()
    }

    pub fn ongoing_stats(&self, node: usize) -> WindowStats {
        self.ongoing[node]
    }

    pub fn metrics(&self) -> [f64; 2] {
        self.metrics
    }

    pub fn counts(&self) -> impl Iterator<Item = u32> + '_ {
        self.counts.iter().copied()
    }

    /// Index of the better survivor; ties go to node 0.
    pub fn best(&self) -> usize {
        usize::from(self.metrics[1] > self.metrics[0])
    }

    fn refresh(&mut self, store: &DetectedStore, metric: TrellisMetric) {
        let base = store.stats();
        for node in 0..2 {
            self.metrics[node] = metric.eval(&(base + self.ongoing[node]));
        }
    }

    /// Drops the oldest slot, which both survivors must agree on.
    fn pop_agreed(&mut self, store: &mut DetectedStore) -> (u8, u32) {
        let bit = (self.paths[0] & 1) as u8;
        debug_assert_eq!(bit as u64, self.paths[1] & 1);
        let count = self.counts.pop_front().expect("non-empty ongoing buffer");
        let slot = WindowStats::slot(bit, count);
        for node in 0..2 {
            self.ongoing[node] -= slot;
            self.paths[node] >>= 1;
        }
        store.push(bit, count);
        (bit, count)
    }
}

/// Extends both survivors by one slot. For each target bit the candidate from
/// predecessor 0 wins ties.
pub fn trellis_step(sp: &mut SurvivorPair, store: &DetectedStore, count: u32, metric: TrellisMetric) {
    let base = store.stats();
    let d = sp.len();
    let mut paths = [0u64; 2];
    let mut ongoing = [WindowStats::default(); 2];
    let mut metrics = [0.0; 2];
    for b in 0..2u8 {
        let slot = WindowStats::slot(b, count);
        let cand = [sp.ongoing[0] + slot, sp.ongoing[1] + slot];
        let m = [metric.eval(&(base + cand[0])), metric.eval(&(base + cand[1]))];
        let pred = usize::from(m[1] > m[0]);
        let node = b as usize;
        paths[node] = sp.paths[pred] | ((b as u64) << d);
        ongoing[node] = cand[pred];
        metrics[node] = m[pred];
    }
    sp.paths = paths;
    sp.ongoing = ongoing;
    sp.metrics = metrics;
    sp.counts.push_back(count);
}

/// Emits the common prefix of the survivors as firm decisions and feeds it
/// into the store. Returns the number of slots committed.
pub fn merge_and_commit(
    sp: &mut SurvivorPair,
    store: &mut DetectedStore,
    metric: TrellisMetric,
    out: &mut Vec<(u8, u32)>,
) -> usize {
    let common = ((sp.paths[0] ^ sp.paths[1]).trailing_zeros() as usize).min(sp.len());
    for _ in 0..common {
        out.push(sp.pop_agreed(store));
    }
    if common > 0 {
        sp.refresh(store, metric);
    }
    common
}

/// Commits the oldest slot of the better survivor and re-roots the other one
/// onto it. Used when the ongoing buffer is full.
pub fn forced_commit(
    sp: &mut SurvivorPair,
    store: &mut DetectedStore,
    metric: TrellisMetric,
    out: &mut Vec<(u8, u32)>,
) {
    let winner = sp.best();
    let loser = 1 - winner;
    let bit = (sp.paths[winner] & 1) as u8;
    let old = (sp.paths[loser] & 1) as u8;
    if old != bit {
        let count = *sp.counts.front().expect("non-empty ongoing buffer");
        sp.paths[loser] ^= 1;
        sp.ongoing[loser] -= WindowStats::slot(old, count);
        sp.ongoing[loser] += WindowStats::slot(bit, count);
    }
    out.push(sp.pop_agreed(store));
    sp.refresh(store, metric);
}

/// Running counters of the trellis engine.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrellisDiagnostics {
    pub steps: u64,
    pub forced_commits: u64,
    /// Sum of the ongoing length after each step's merge.
    pub ongoing_total: u64,
    pub max_ongoing: usize,
}

impl TrellisDiagnostics {
    pub fn mean_ongoing(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.ongoing_total as f64 / self.steps as f64
        }
    }
}

/// Sequence receiver: bootstrap, then trellis steps with commits into the
/// selective store.
#[derive(Debug, Clone)]
pub struct TrellisReceiver {
    metric: TrellisMetric,
    caps: (usize, usize),
    warmup_len: usize,
    warmup: Vec<u32>,
    store: Option<DetectedStore>,
    sp: SurvivorPair,
    emitted: Vec<(u8, u32)>,
    diagnostics: TrellisDiagnostics,
}

impl TrellisReceiver {
    /// Receiver with store capacities `(cap0, cap1)` that bootstraps from its
    /// first `warmup_len` counts.
    pub fn new(metric: TrellisMetric, cap0: usize, cap1: usize, warmup_len: usize) -> Self {
        assert!(warmup_len >= cap0 + cap1);
        TrellisReceiver {
            metric,
            caps: (cap0, cap1),
            warmup_len,
            warmup: Vec::with_capacity(warmup_len),
            store: None,
            sp: SurvivorPair::new(ONGOING_CAPACITY),
            emitted: Vec::new(),
            diagnostics: TrellisDiagnostics::default(),
        }
    }

    /// Receiver starting from a ready store, skipping the bootstrap.
    pub fn from_store(metric: TrellisMetric, store: DetectedStore, ongoing_capacity: usize) -> Self {
        let caps = (store.buf0.capacity(), store.buf1.capacity());
        TrellisReceiver {
            metric,
            caps,
            warmup_len: 0,
            warmup: Vec::new(),
            store: Some(store),
            sp: SurvivorPair::new(ongoing_capacity),
            emitted: Vec::new(),
            diagnostics: TrellisDiagnostics::default(),
        }
    }

    /// GLRT sequence receiver with window `L`: `L/2` slots per store class.
    pub fn glrt(window: usize) -> Self {
        assert!(window >= 2, "GLRT sequence receiver needs L >= 2");
        TrellisReceiver::new(TrellisMetric::Glrt, window / 2, window / 2, 2 * window)
    }

    /// GMLSD sequence receiver with window `L`: the `L` most recent
    /// 1-detected slots.
    pub fn gmlsd(window: usize, n_b: f64) -> Self {
        assert!(window >= 1);
        TrellisReceiver::new(TrellisMetric::Gmlsd { n_b }, 0, window, 2 * window)
    }

    pub fn diagnostics(&self) -> TrellisDiagnostics {
        self.diagnostics
    }

    pub fn survivors(&self) -> &SurvivorPair {
        &self.sp
    }

    pub fn store(&self) -> Option<&DetectedStore> {
        self.store.as_ref()
    }

    fn drain(&mut self, out: &mut Vec<Decision>) {
        out.extend(self.emitted.drain(..).map(|(b, _)| Decision::firm(b)));
    }

    fn finish_warmup(&mut self, out: &mut Vec<Decision>) {
        let (store, bits) = bootstrap_warmup(&self.warmup, self.caps.0, self.caps.1);
        out.extend(bits.into_iter().map(Decision::provisional));
        self.warmup.clear();
        self.store = Some(store);
    }
}

impl Receiver for TrellisReceiver {
    fn push(&mut self, count: u32, out: &mut Vec<Decision>) {
        let Some(store) = self.store.as_mut() else {
            self.warmup.push(count);
            if self.warmup.len() == self.warmup_len {
                self.finish_warmup(out);
            }
            return;
        };
        trellis_step(&mut self.sp, store, count, self.metric);
        merge_and_commit(&mut self.sp, store, self.metric, &mut self.emitted);
        while self.sp.len() >= self.sp.capacity() {
            forced_commit(&mut self.sp, store, self.metric, &mut self.emitted);
            self.diagnostics.forced_commits += 1;
        }
        self.diagnostics.steps += 1;
        self.diagnostics.ongoing_total += self.sp.len() as u64;
        self.diagnostics.max_ongoing = self.diagnostics.max_ongoing.max(self.sp.len());
        self.drain(out);
    }

    fn flush(&mut self, out: &mut Vec<Decision>) {
        let Some(store) = self.store.as_mut() else {
            if !self.warmup.is_empty() {
                self.finish_warmup(out);
            }
            return;
        };
        let best = self.sp.best();
        for (bit, count) in self.sp.path(best).into_iter().zip(self.sp.counts.iter().copied()) {
            store.push(bit, count);
            self.emitted.push((bit, count));
        }
        self.sp = SurvivorPair::new(self.sp.capacity());
        self.drain(out);
    }
}
