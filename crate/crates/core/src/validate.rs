//! Self-checks against independent oracles: closed forms, anchor values and
//! exhaustive searches. [`fast_checks`] is the quick subset behind the
//! command-line `validate` command.

use std::collections::VecDeque;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::analysis::conditional_bep;
use crate::channel::scintillation_index;
use crate::numerics::bessel_k;
use crate::receivers::{
    asymptotic_decide, forced_commit, glrt_dfb_psi, gmlsd_log_metric, merge_and_commit, mlsd_log_metric,
    msd_block_decode, trellis_step, DetectedStore, GainPrior, MsdScan, SurvivorPair, TrellisMetric, WindowStats,
};
use crate::signal::{n_s_from_snr, snr_from_counts};

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Check { name, passed, detail }
    }
}

/// Runs the quick checks in a fixed order.
pub fn fast_checks() -> Vec<Check> {
    vec![
        bessel_half_check(),
        scintillation_check(),
        conditional_bep_check(),
        snr_mapping_check(),
        appendix_a_check(),
        msd_oracle_check(1000, 11),
        trellis_reference_check(300, 12),
    ]
}

/// `K_{1/2}(x) = sqrt(π/(2x)) e^{-x}` on 50 log-spaced points in
/// `[1e-3, 50]`, to 1e-8 relative.
pub fn bessel_half_check() -> Check {
    let mut worst = 0.0f64;
    for i in 0..50 {
        let x = 1e-3 * (5e4f64).powf(i as f64 / 49.0);
        let exact = (PI / (2.0 * x)).sqrt() * (-x).exp();
        let rel = match bessel_k(0.5, x) {
            Ok(v) => ((v - exact) / exact).abs(),
            Err(_) => f64::INFINITY,
        };
        worst = worst.max(rel);
    }
    Check::new("bessel_k(0.5, x) closed form", worst <= 1e-8, format!("max rel err {worst:.2e}"))
}

pub fn scintillation_check() -> Check {
    let weak = scintillation_index(17.13, 16.04);
    let strong = scintillation_index(2.23, 1.54);
    let ok = (weak - 0.1244).abs() <= 1e-3 && (strong - 1.3890).abs() <= 1e-3;
    Check::new("scintillation indices", ok, format!("weak {weak:.4}, strong {strong:.4}"))
}

pub fn conditional_bep_check() -> Check {
    let a = conditional_bep(50.0, 25.0);
    let b = conditional_bep(100.0, 150.0);
    let ok = ((a - 1.17e-4) / 1.17e-4).abs() <= 0.02 && ((b - 1.80e-4) / 1.80e-4).abs() <= 0.02;
    Check::new("conditional BEP anchors", ok, format!("(50,25) {a:.4e}, (100,150) {b:.4e}"))
}

pub fn snr_mapping_check() -> Check {
    let n_s = n_s_from_snr(12.5, 25.0);
    let back = snr_from_counts(100.0, 150.0);
    Check::new("SNR mapping", n_s == 50.0 && back == 12.5, format!("n_s {n_s}, snr {back}"))
}

/// Counts in `0..=r_max` where the sign of the GLRT decision-feedback
/// statistic disagrees with the plug-in ideal rule, for stores of `n` slots
/// per class holding their exact expectations.
pub fn appendix_a_disagreements(n_r: f64, n_b: f64, n: u64, r_max: u32) -> Vec<u32> {
    let stats = WindowStats::new(n, (n as f64 * (n_r + n_b)).round() as u64, n, (n as f64 * n_b).round() as u64);
    let nr_hat = stats.r_on as f64 / n as f64 - stats.r_off as f64 / n as f64;
    let nb_hat = stats.r_off as f64 / n as f64;
    (0..=r_max)
        .filter(|&r| u8::from(glrt_dfb_psi(&stats, r) > 0.0) != asymptotic_decide(nr_hat, nb_hat, r))
        .collect()
}

pub fn appendix_a_check() -> Check {
    let cases = [(50.0, 25.0), (100.0, 150.0), (20.0, 60.0)];
    let bad: usize = cases
        .iter()
        .map(|&(nr, nb)| appendix_a_disagreements(nr, nb, 1_000_000, 300).len())
        .sum();
    Check::new("decision-feedback asymptotic agreement", bad == 0, format!("{bad} disagreements"))
}

fn on_off_counts<R: Rng>(rng: &mut R, n: usize, n_r: f64, n_b: f64) -> Vec<u32> {
    (0..n)
        .map(|_| {
            let lambda = n_b + if rng.random_bool(0.5) { n_r } else { 0.0 };
            Poisson::new(lambda).expect("positive mean").sample(rng) as u32
        })
        .collect()
}

/// Largest metric over every labeling of `counts`, on top of `base`.
pub fn exhaustive_max<F: Fn(&WindowStats) -> f64>(base: &WindowStats, counts: &[u32], metric: F) -> f64 {
    assert!(counts.len() <= 24);
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << counts.len()) {
        let mut s = *base;
        for (i, &c) in counts.iter().enumerate() {
            s += WindowStats::slot(((mask >> i) & 1) as u8, c);
        }
        best = best.max(metric(&s));
    }
    best
}

fn below(got: f64, best: f64) -> bool {
    got < best - 1e-9 * best.abs().max(1.0)
}

/// Block decoding against exhaustive search on random blocks of length
/// 1..=12: GMLSD with matched and mismatched background (both-ends scan) and
/// MLSD with a point-mass gain prior (largest-counts scan).
pub fn msd_block_misses(blocks: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut misses = 0;
    for i in 0..blocks {
        let len = rng.random_range(1..=12usize);
        let n_r = rng.random_range(1.0..120.0);
        let n_b = rng.random_range(5.0..100.0);
        let counts = on_off_counts(&mut rng, len, n_r, n_b);
        let total: u64 = counts.iter().map(|&c| c as u64).sum();
        let assumed = if i % 2 == 0 { n_b } else { 39.0 };
        let metric: Box<dyn Fn(&WindowStats) -> f64> = if i % 3 == 2 {
            let prior = GainPrior::PointMass(1.0);
            Box::new(move |s: &WindowStats| {
                mlsd_log_metric(s, len as u64, n_r, assumed, &prior).unwrap_or(f64::NEG_INFINITY)
            })
        } else {
            Box::new(move |s: &WindowStats| gmlsd_log_metric(s, assumed))
        };
        let scan = if i % 3 == 2 { MsdScan::Largest } else { MsdScan::BothEnds };
        let bits = msd_block_decode(&counts, scan, |n, g| Ok(metric(&WindowStats::new(n, g, len as u64 - n, total - g))))
            .expect("metric is infallible");
        let got = metric(&WindowStats::from_sequence(&bits, &counts));
        if below(got, exhaustive_max(&WindowStats::default(), &counts, &metric)) {
            misses += 1;
        }
    }
    misses
}

pub fn msd_oracle_check(blocks: usize, seed: u64) -> Check {
    let misses = msd_block_misses(blocks, seed);
    Check::new("block decoder vs exhaustive search", misses == 0, format!("{misses}/{blocks} blocks below the maximum"))
}

fn random_store<R: Rng>(rng: &mut R, cap0: usize, cap1: usize, n_r: f64, n_b: f64) -> DetectedStore {
    let mut store = DetectedStore::new(cap0, cap1);
    for _ in 0..cap0 {
        store.push(0, on_off_counts(rng, 1, 0.0, n_b)[0]);
    }
    for _ in 0..cap1 {
        store.push(1, on_off_counts(rng, 1, 0.0, n_r + n_b)[0]);
    }
    store
}

/// Survivor search against exhaustive search: for random small stores
/// (`L ≤ 4`) and streams of up to 12 slots, counts how often the better
/// survivor falls short of the best labeling of the whole stream. Returns
/// `(short, trials, largest shortfall)`.
pub fn trellis_exhaustive_shortfall(trials: usize, seed: u64) -> (usize, usize, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut short, mut worst) = (0, 0.0f64);
    for i in 0..trials {
        let n_r = rng.random_range(5.0..120.0);
        let n_b = rng.random_range(5.0..100.0);
        let l = 2 * rng.random_range(1..=2usize);
        let (metric, store) = if i % 2 == 0 {
            (TrellisMetric::Glrt, random_store(&mut rng, l / 2, l / 2, n_r, n_b))
        } else {
            (TrellisMetric::Gmlsd { n_b }, random_store(&mut rng, 0, l, n_r, n_b))
        };
        let len = rng.random_range(1..=12usize);
        let counts = on_off_counts(&mut rng, len, n_r, n_b);
        let mut sp = SurvivorPair::new(30);
        for &c in &counts {
            trellis_step(&mut sp, &store, c, metric);
        }
        let got = sp.metrics()[sp.best()];
        let best = exhaustive_max(&store.stats(), &counts, |s| metric.eval(s));
        if below(got, best) {
            short += 1;
            worst = worst.max(best - got);
        }
    }
    (short, trials, worst)
}

/// Straightforward survivor search that keeps whole paths and recomputes
/// every metric from scratch.
struct ReferenceTrellis {
    metric: TrellisMetric,
    caps: (usize, usize),
    store: [VecDeque<u32>; 2],
    paths: [Vec<u8>; 2],
    metrics: [f64; 2],
    counts: Vec<u32>,
    capacity: usize,
}

impl ReferenceTrellis {
    fn stats(&self, path: &[u8], counts: &[u32]) -> WindowStats {
        let mut s = WindowStats::new(
            self.store[1].len() as u64,
            self.store[1].iter().map(|&c| c as u64).sum(),
            self.store[0].len() as u64,
            self.store[0].iter().map(|&c| c as u64).sum(),
        );
        for (&b, &c) in path.iter().zip(counts) {
            s += WindowStats::slot(b, c);
        }
        s
    }

    fn store_push(&mut self, bit: u8, count: u32) {
        let cap = if bit == 1 { self.caps.1 } else { self.caps.0 };
        let buf = &mut self.store[bit as usize];
        if cap == 0 {
            return;
        }
        if buf.len() == cap {
            buf.pop_front();
        }
        buf.push_back(count);
    }

    fn commit_front(&mut self, out: &mut Vec<u8>) {
        let bit = self.paths[0][0];
        let count = self.counts.remove(0);
        self.paths[0].remove(0);
        self.paths[1].remove(0);
        self.store_push(bit, count);
        out.push(bit);
    }

    fn recompute(&mut self) {
        for node in 0..2 {
            self.metrics[node] = self.metric.eval(&self.stats(&self.paths[node], &self.counts));
        }
    }

    fn push(&mut self, count: u32, out: &mut Vec<u8>) {
        let mut counts = self.counts.clone();
        counts.push(count);
        let mut next: [Vec<u8>; 2] = Default::default();
        let mut metrics = [0.0; 2];
        for b in 0..2u8 {
            let cands: Vec<Vec<u8>> = self.paths.iter().map(|p| [p.as_slice(), &[b]].concat()).collect();
            let m: Vec<f64> = cands.iter().map(|p| self.metric.eval(&self.stats(p, &counts))).collect();
            let pred = usize::from(m[1] > m[0]);
            next[b as usize] = cands[pred].clone();
            metrics[b as usize] = m[pred];
        }
        self.paths = next;
        self.metrics = metrics;
        self.counts = counts;
        let common = self.paths[0].iter().zip(&self.paths[1]).take_while(|(a, b)| a == b).count();
        for _ in 0..common {
            self.commit_front(out);
        }
        if common > 0 {
            self.recompute();
        }
        while self.counts.len() >= self.capacity {
            let winner = usize::from(self.metrics[1] > self.metrics[0]);
            let bit = self.paths[winner][0];
            self.paths[1 - winner][0] = bit;
            self.commit_front(out);
            self.recompute();
        }
    }
}

/// Bitmask survivor search against [`ReferenceTrellis`] on random streams
/// with commits and forced commits. Returns the number of streams whose
/// firm decisions or survivors differ.
pub fn trellis_reference_mismatches(streams: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    for i in 0..streams {
        let n_r = rng.random_range(5.0..120.0);
        let n_b = rng.random_range(5.0..100.0);
        let l = 2 * rng.random_range(1..=8usize);
        let (metric, caps) = if i % 2 == 0 {
            (TrellisMetric::Glrt, (l / 2, l / 2))
        } else {
            (TrellisMetric::Gmlsd { n_b }, (0, l))
        };
        let mut store = random_store(&mut rng, caps.0, caps.1, n_r, n_b);
        let capacity = rng.random_range(2..=12usize);
        let mut reference = ReferenceTrellis {
            metric,
            caps,
            store: [store.buf0.iter().collect(), store.buf1.iter().collect()],
            paths: Default::default(),
            metrics: [f64::NEG_INFINITY; 2],
            counts: Vec::new(),
            capacity,
        };
        let mut sp = SurvivorPair::new(capacity);
        let (mut fast, mut slow) = (Vec::new(), Vec::new());
        for c in on_off_counts(&mut rng, 200, n_r, n_b) {
            trellis_step(&mut sp, &store, c, metric);
            merge_and_commit(&mut sp, &mut store, metric, &mut fast);
            while sp.len() >= sp.capacity() {
                forced_commit(&mut sp, &mut store, metric, &mut fast);
            }
            reference.push(c, &mut slow);
        }
        let fast_bits: Vec<u8> = fast.iter().map(|&(b, _)| b).collect();
        let same = fast_bits == slow
            && sp.path(0) == reference.paths[0]
            && sp.path(1) == reference.paths[1]
            && store.buf0.iter().eq(reference.store[0].iter().copied())
            && store.buf1.iter().eq(reference.store[1].iter().copied());
        if !same {
            mismatches += 1;
        }
    }
    mismatches
}

pub fn trellis_reference_check(streams: usize, seed: u64) -> Check {
    let bad = trellis_reference_mismatches(streams, seed);
    Check::new(
        "survivor search vs whole-path reference",
        bad == 0,
        format!("{bad}/{streams} streams differ"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_checks_pass() {
        for c in fast_checks() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn exhaustive_max_small_case() {
        // GMLSD with n_b = 1: labeling only the count 9 gives 9 ln 9 - 8
        let best = exhaustive_max(&WindowStats::default(), &[9, 1], |s| gmlsd_log_metric(s, 1.0));
        assert!((best - (9.0 * 9f64.ln() - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn appendix_scan_detects_a_wrong_rule() {
        // a store biased away from its expectation must disagree somewhere
        let stats = WindowStats::new(1000, 1000 * 75, 1000, 1000 * 25);
        let bad = (0..=300u32).filter(|&r| u8::from(glrt_dfb_psi(&stats, r) > 0.0) != asymptotic_decide(60.0, 25.0, r));
        assert!(bad.count() > 0);
    }
}
