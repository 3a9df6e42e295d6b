//! Monte-Carlo experiment engine.
//!
//! A point (one receiver config at one SNR) is simulated as a sequence of
//! independent run segments, each with a fresh receiver and its own random
//! stream keyed by `(seed, SNR index, segment index)`. Receivers never
//! consume randomness, so every receiver and memory length sees the same
//! channel, background and bits at a given SNR. Segments are grouped in waves
//! of fixed size whose lengths double from wave to wave; the stopping rule is
//! checked between waves, so results do not depend on the thread count.

mod output;
mod spec;

use std::collections::VecDeque;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{BepMethod, GenieEvaluator};
use crate::channel::{ChannelModel, GainDensity};
use crate::error::{Error, Result};
use crate::receivers::{Decision, GainPrior, LinkContext, ReceiverConfig, ReceiverKind};
use crate::signal::{db_to_linear, generate_block_into, n_s_from_snr, Block, LinkState};

pub use output::{read_csv, write_csv, RunManifest};
pub use spec::{
    preset, preset_names, ChannelPreset, ChannelSpec, ExperimentSpec, ReceiverEntry, ReceiverState, WarmupAccounting,
};

/// Segments per wave.
pub const WAVE: usize = 8;

/// One row of a result table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BepPoint {
    pub receiver: String,
    #[serde(rename = "L")]
    pub l: usize,
    pub snr_db: f64,
    pub errors: u64,
    pub slots: u64,
    pub bep: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub method: String,
}

impl BepPoint {
    pub fn from_counts(receiver: String, l: usize, snr_db: f64, errors: u64, slots: u64) -> Self {
        let (ci_lo, ci_hi) = if slots == 0 { (0.0, 1.0) } else { wilson_interval(errors, slots) };
        BepPoint {
            receiver,
            l,
            snr_db,
            errors,
            slots,
            bep: if slots == 0 { 0.0 } else { errors as f64 / slots as f64 },
            ci_lo,
            ci_hi,
            method: BepMethod::MonteCarlo.name().to_string(),
        }
    }

    pub fn is_reference(&self) -> bool {
        self.method != BepMethod::MonteCarlo.name()
    }
}

/// Simulated point plus run bookkeeping that does not go into the table.
#[derive(Debug, Clone, PartialEq)]
pub struct PointOutcome {
    pub point: BepPoint,
    /// The slot budget ran out before `min_errors` errors were seen.
    pub censored: bool,
    pub segments: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub receiver: String,
    pub l: usize,
    pub snr_db: f64,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct SweepResult {
    /// Genie rows first (one per SNR), then simulated points in
    /// (receiver, level, SNR) order.
    pub points: Vec<BepPoint>,
    pub censored: Vec<BepPoint>,
    pub failures: Vec<PointFailure>,
}

/// 95% Wilson score interval for `errors` out of `slots`.
pub fn wilson_interval(errors: u64, slots: u64) -> (f64, f64) {
    const Z: f64 = 1.959_963_984_540_054;
    assert!(slots >= 1 && errors <= slots);
    let n = slots as f64;
    let p = errors as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if errors == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if errors == slots { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Random stream of one run segment.
pub fn segment_rng(seed: u64, snr_index: usize, segment: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((snr_index as u64) << 40) | segment as u64);
    rng
}

/// Everything a point needs that is shared across the sweep.
#[derive(Debug, Clone)]
pub struct SweepContext {
    pub spec: ExperimentSpec,
    channel: ChannelModel,
    density: Option<Arc<GainDensity>>,
}

impl SweepContext {
    pub fn new(spec: &ExperimentSpec) -> Result<Self> {
        spec.validate()?;
        let channel = spec.channel_model();
        let needs_density = spec.genie || spec.receivers.iter().any(|r| r.kind == ReceiverKind::Mlsd);
        let density = match (&channel, needs_density) {
            (ChannelModel::Turbulent(p), true) => Some(Arc::new(GainDensity::new(p)?)),
            _ => None,
        };
        Ok(SweepContext {
            spec: spec.clone(),
            channel,
            density,
        })
    }

    pub fn n_s(&self, snr_db: f64) -> f64 {
        n_s_from_snr(db_to_linear(snr_db), self.spec.nb_reference())
    }

    fn prior(&self) -> GainPrior {
        match (&self.channel, &self.density) {
            (ChannelModel::Fixed { gain }, _) => GainPrior::PointMass(*gain),
            (_, Some(d)) => GainPrior::Density(d.clone()),
            (ChannelModel::Turbulent(p), None) => {
                GainPrior::Density(Arc::new(GainDensity::new(p).expect("validated channel")))
            }
        }
    }

    pub fn link_context(&self, snr_db: f64) -> LinkContext {
        LinkContext {
            n_s: self.n_s(snr_db),
            nb_reference: self.spec.nb_reference(),
            prior: self.prior(),
        }
    }

    pub fn genie_evaluator(&self) -> Result<GenieEvaluator> {
        match &self.density {
            Some(d) => Ok(GenieEvaluator::with_density(&self.channel, d.clone())),
            None => GenieEvaluator::new(&self.channel),
        }
    }

    /// Genie-bound reference row at one SNR.
    pub fn genie_point(&self, snr_db: f64) -> Result<BepPoint> {
        let r = self.genie_evaluator()?.bound_nb(self.n_s(snr_db), &self.spec.nb_model)?;
        Ok(BepPoint {
            receiver: "genie".to_string(),
            l: 0,
            snr_db,
            errors: 0,
            slots: 0,
            bep: r.value,
            ci_lo: (r.value - r.tolerance).max(0.0),
            ci_hi: (r.value + r.tolerance).min(1.0),
            method: r.method.name().to_string(),
        })
    }

    /// Slots one segment of wave `wave` must score, before the global cap.
    fn segment_target(&self, wave: usize) -> u64 {
        let base = (4 * self.spec.l_c as u64).max(4096);
        let grown = base.saturating_mul(1u64 << wave.min(40));
        grown.min(self.spec.segment_slots.max(1))
    }

    /// Simulates one point until the stopping rule fires.
    pub fn run_point(&self, cfg: &ReceiverConfig, snr_index: usize) -> Result<PointOutcome> {
        let snr_db = self.spec.snr_db[snr_index];
        let link = self.link_context(snr_db);
        // Build once up front so configuration errors surface before any
        // simulation work.
        cfg.build(&link)?;
        let (mut errors, mut slots) = (0u64, 0u64);
        let mut segments = 0usize;
        let mut wave = 0usize;
        while errors < self.spec.min_errors && slots < self.spec.max_slots {
            let remaining = self.spec.max_slots - slots;
            let target = self.segment_target(wave).min(remaining.div_ceil(WAVE as u64)).max(1);
            let tallies: Vec<Result<Tally>> = (segments..segments + WAVE)
                .into_par_iter()
                .map(|seg| self.run_segment(cfg, &link, snr_index, seg, target))
                .collect();
            for t in tallies {
                let t = t?;
                errors += t.errors;
                slots += t.slots;
            }
            segments += WAVE;
            wave += 1;
        }
        Ok(PointOutcome {
            point: BepPoint::from_counts(cfg.label(), cfg.window_l, snr_db, errors, slots),
            censored: errors < self.spec.min_errors,
            segments,
        })
    }

    fn run_segment(
        &self,
        cfg: &ReceiverConfig,
        link: &LinkContext,
        snr_index: usize,
        segment: usize,
        target: u64,
    ) -> Result<Tally> {
        let mut rng = segment_rng(self.spec.seed, snr_index, segment);
        let mut rx = cfg.build(link)?;
        let include_warmup = self.spec.warmup == WarmupAccounting::Include;
        let mut scorer = Scorer::new(include_warmup);
        let mut block = Block::default();
        let mut decisions: Vec<Decision> = Vec::new();
        let mut index = 0usize;
        while scorer.tally.slots < target {
            let h = self.channel.sample(&mut rng).h;
            let n_b = self.spec.nb_model.sample(&mut rng);
            let state = LinkState::new(h, link.n_s, n_b);
            generate_block_into(&state, self.spec.l_c, &mut rng, &mut block);
            let per_block = self.spec.receiver_state == ReceiverState::PerBlock;
            if per_block && index > 0 {
                rx.flush(&mut decisions);
                scorer.score(&mut decisions);
                rx = cfg.build(link)?;
            }
            rx.observe_link(&state);
            let counted = include_warmup || per_block || index > 0;
            for (&bit, &count) in block.bits.iter().zip(&block.counts) {
                scorer.expect(bit, counted);
                rx.push(count, &mut decisions);
                scorer.score(&mut decisions);
            }
            index += 1;
        }
        rx.flush(&mut decisions);
        scorer.score(&mut decisions);
        Ok(scorer.tally)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally {
    errors: u64,
    slots: u64,
}

/// Matches decisions, which arrive in slot order, against the true bits.
struct Scorer {
    truth: VecDeque<(u8, bool)>,
    include_provisional: bool,
    tally: Tally,
}

impl Scorer {
    fn new(include_provisional: bool) -> Self {
        Scorer {
            truth: VecDeque::new(),
            include_provisional,
            tally: Tally::default(),
        }
    }

    fn expect(&mut self, bit: u8, counted: bool) {
        self.truth.push_back((bit, counted));
    }

    fn score(&mut self, decisions: &mut Vec<Decision>) {
        for d in decisions.drain(..) {
            let (bit, counted) = self.truth.pop_front().expect("receiver emitted more decisions than slots");
            if counted && (self.include_provisional || !d.provisional) {
                self.tally.slots += 1;
                self.tally.errors += u64::from(d.bit != bit);
            }
        }
    }
}

/// Runs every (receiver, level, SNR) point of `spec`. Per-point failures are
/// collected rather than aborting the sweep.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepResult> {
    let ctx = SweepContext::new(spec)?;
    let configs = spec.receiver_configs()?;
    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| (0..spec.snr_db.len()).map(move |s| (c, s)))
        .collect();
    let genie: Vec<Result<BepPoint>> = if spec.genie {
        spec.snr_db.par_iter().map(|&db| ctx.genie_point(db)).collect()
    } else {
        Vec::new()
    };
    let outcomes: Vec<Result<PointOutcome>> =
        jobs.par_iter().map(|&(c, s)| ctx.run_point(&configs[c], s)).collect();

    let mut result = SweepResult::default();
    for (s, g) in genie.into_iter().enumerate() {
        match g {
            Ok(p) => result.points.push(p),
            Err(e) => result.failures.push(PointFailure {
                receiver: "genie".to_string(),
                l: 0,
                snr_db: spec.snr_db[s],
                message: e.to_string(),
            }),
        }
    }
    for (&(c, s), outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok(o) => {
                if o.censored {
                    result.censored.push(o.point.clone());
                }
                result.points.push(o.point);
            }
            Err(e) => result.failures.push(PointFailure {
                receiver: configs[c].label(),
                l: configs[c].window_l,
                snr_db: spec.snr_db[s],
                message: e.to_string(),
            }),
        }
    }
    Ok(result)
}

/// [`run_sweep`] on a dedicated pool of `workers` threads.
pub fn run_sweep_with_workers(spec: &ExperimentSpec, workers: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    pool.install(|| run_sweep(spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::NbModel;

    #[test]
    fn wilson_edges_and_reference() {
        let (lo, hi) = wilson_interval(0, 1000);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.005);
        let (lo, hi) = wilson_interval(1000, 1000);
        assert_eq!(hi, 1.0);
        assert!(lo > 0.995);
        let (lo, hi) = wilson_interval(100, 1_000_000);
        assert!((lo - 0.822e-4).abs() < 0.01e-4, "{lo}");
        assert!((hi - 1.216e-4).abs() < 0.01e-4, "{hi}");
        let (lo, hi) = wilson_interval(37, 200);
        assert!(lo < 37.0 / 200.0 && 37.0 / 200.0 < hi);
    }

    fn tiny_spec() -> ExperimentSpec {
        let mut spec = ExperimentSpec::new(
            ChannelSpec::Preset(ChannelPreset::Static),
            NbModel::Constant(25.0),
            vec![6.0, 12.0],
        );
        spec.l_c = 64;
        spec.min_errors = 50;
        spec.max_slots = 200_000;
        spec.receivers = vec![
            ReceiverEntry { levels: vec![1], ..ReceiverEntry::new(ReceiverKind::Ideal) },
            ReceiverEntry { levels: vec![4], ..ReceiverEntry::new(ReceiverKind::GlrtDfb) },
        ];
        spec
    }

    #[test]
    fn sweep_is_deterministic_across_pool_sizes() {
        let spec = tiny_spec();
        let a = run_sweep_with_workers(&spec, 1).unwrap();
        let b = run_sweep_with_workers(&spec, 4).unwrap();
        assert_eq!(a.points, b.points);
        assert_eq!(a.points.len(), 2 + 4);
        assert!(a.failures.is_empty());
        assert!(a.points[..2].iter().all(|p| p.receiver == "genie"));
    }

    #[test]
    fn noiseless_link_has_no_errors() {
        let mut spec = ExperimentSpec::new(
            ChannelSpec::Preset(ChannelPreset::Static),
            NbModel::Constant(0.0),
            vec![30.0],
        );
        spec.receivers = vec![ReceiverEntry { levels: vec![1], ..ReceiverEntry::new(ReceiverKind::Ideal) }];
        spec.min_errors = 1;
        spec.max_slots = 100_000;
        let out = run_sweep(&spec).unwrap();
        let p = out.points.iter().find(|p| p.receiver == "ideal").unwrap();
        assert_eq!(p.errors, 0);
        assert!(p.slots >= 100_000);
        // zero errors against a one-error target is censored by definition
        assert_eq!(out.censored.len(), 1);
    }

    #[test]
    fn empty_receiver_list_gives_genie_only_table() {
        let mut spec = tiny_spec();
        spec.receivers.clear();
        let out = run_sweep(&spec).unwrap();
        assert_eq!(out.points.len(), 2);
        assert!(out.points.iter().all(|p| p.is_reference()));
    }

    #[test]
    fn point_failures_do_not_abort() {
        let mut spec = tiny_spec();
        spec.nb_model = NbModel::Constant(0.0);
        spec.receivers.push(ReceiverEntry { levels: vec![4], ..ReceiverEntry::new(ReceiverKind::GmlsdDfb) });
        let out = run_sweep(&spec).unwrap();
        assert_eq!(out.failures.len(), 2);
        assert!(out.points.iter().any(|p| p.receiver == "glrt_dfb"));
    }
}
