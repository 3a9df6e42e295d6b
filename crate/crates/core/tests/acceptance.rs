//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use fsolink::analysis::conditional_bep;
use fsolink::channel::{sample_channel_gain, scintillation_index, ChannelParams};
use fsolink::harness::{
    run_sweep, BepPoint, ChannelPreset, ChannelSpec, ExperimentSpec, ReceiverEntry, ReceiverState, SweepContext,
};
use fsolink::receivers::{glrt_nr_nb_estimates, DetectedStore, ReceiverKind};
use fsolink::signal::NbModel;
use fsolink::validate::{
    appendix_a_disagreements, bessel_half_check, conditional_bep_check, msd_oracle_check, scintillation_check,
    snr_mapping_check, trellis_exhaustive_shortfall,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

const TARGET: f64 = 1e-3;

struct Outcome {
    id: &'static str,
    passed: bool,
    detail: String,
}

fn outcome(id: &'static str, passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { id, passed, detail: detail.into() }
}

fn entry(kind: ReceiverKind, levels: &[usize], assumed_nb: Option<f64>) -> ReceiverEntry {
    ReceiverEntry { levels: levels.to_vec(), assumed_nb, ..ReceiverEntry::new(kind) }
}

fn spec(channel: ChannelPreset, nb_model: NbModel, snr_db: Vec<f64>, receivers: Vec<ReceiverEntry>) -> ExperimentSpec {
    let mut s = ExperimentSpec::new(ChannelSpec::Preset(channel), nb_model, snr_db);
    s.receivers = receivers;
    s.receiver_state = ReceiverState::PerBlock;
    s
}

/// Simulated curve of one receiver at one level, in SNR order.
fn curve<'a>(points: &'a [BepPoint], receiver: &str, l: usize) -> Vec<&'a BepPoint> {
    points.iter().filter(|p| p.receiver == receiver && p.l == l && !p.is_reference()).collect()
}

fn genie_curve(points: &[BepPoint]) -> Vec<&BepPoint> {
    points.iter().filter(|p| p.receiver == "genie").collect()
}

/// SNR where `log10 BEP`, linear in dB between grid points, first falls to
/// `target`.
fn crossing(db: &[f64], bep: &[f64], target: f64) -> Option<f64> {
    (1..db.len()).find_map(|i| {
        let (a, b) = (bep[i - 1], bep[i]);
        if a >= target && b < target && a > 0.0 && b > 0.0 {
            let t = (a.log10() - target.log10()) / (a.log10() - b.log10());
            Some(db[i - 1] + t * (db[i] - db[i - 1]))
        } else {
            None
        }
    })
}

/// `log10 BEP` interpolated at `x` dB.
fn interpolate(db: &[f64], bep: &[f64], x: f64) -> f64 {
    let i = (1..db.len()).find(|&i| db[i] >= x).unwrap_or(db.len() - 1);
    let t = (x - db[i - 1]) / (db[i] - db[i - 1]);
    10f64.powf(bep[i - 1].log10() + t * (bep[i].log10() - bep[i - 1].log10()))
}

/// SNR where the quadrature genie bound equals `target`, by bisection.
fn genie_crossing(ctx: &SweepContext, lo: f64, hi: f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if ctx.genie_point(mid).unwrap().bep > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Raw and control-variate curves of one receiver. The second rescales each
/// point by `genie / ideal`, where the simulated ideal receiver saw the same
/// channel draws.
struct Curves {
    db: Vec<f64>,
    raw: Vec<f64>,
    adjusted: Vec<f64>,
}

fn curves(points: &[BepPoint], receiver: &str, l: usize) -> Curves {
    let rx = curve(points, receiver, l);
    let ideal = curve(points, "ideal", 1);
    let genie = genie_curve(points);
    Curves {
        db: rx.iter().map(|p| p.snr_db).collect(),
        raw: rx.iter().map(|p| p.bep).collect(),
        adjusted: rx
            .iter()
            .zip(&ideal)
            .zip(&genie)
            .map(|((r, i), g)| if i.bep > 0.0 { r.bep * g.bep / i.bep } else { r.bep })
            .collect(),
    }
}

/// Gap at `TARGET` to the genie crossing `g`, raw and adjusted.
fn gaps(c: &Curves, g: f64) -> (Option<f64>, Option<f64>) {
    (crossing(&c.db, &c.raw, TARGET).map(|x| x - g), crossing(&c.db, &c.adjusted, TARGET).map(|x| x - g))
}

fn fmt_gap(gap: Option<f64>) -> String {
    gap.map_or("no crossing".to_string(), |g| format!("{g:+.2} dB"))
}

fn gap_within(gap: Option<f64>, limit: f64) -> bool {
    gap.is_some_and(|g| g <= limit)
}

fn criterion_1() -> Outcome {
    let c = scintillation_check();
    outcome("1 scintillation indices", c.passed, c.detail)
}

fn criterion_2() -> Outcome {
    let c = conditional_bep_check();
    outcome("2 conditional BEP anchors", c.passed, c.detail)
}

fn criterion_3() -> Outcome {
    let c = snr_mapping_check();
    outcome("3 SNR mapping", c.passed, c.detail)
}

fn wilson_agreement(s: &ExperimentSpec, reference: impl Fn(f64) -> f64) -> (usize, usize, String) {
    let out = run_sweep(s).unwrap();
    let (mut checked, mut outside, mut worst) = (0, 0, String::new());
    for p in curve(&out.points, "ideal", 1) {
        if p.errors < 100 {
            continue;
        }
        checked += 1;
        let r = reference(p.snr_db);
        if r < p.ci_lo || r > p.ci_hi {
            outside += 1;
            worst = format!("; {} dB: {:.3e} not in [{:.3e}, {:.3e}]", p.snr_db, r, p.ci_lo, p.ci_hi);
        }
    }
    (checked, outside, worst)
}

fn criterion_4() -> Outcome {
    let grid: Vec<f64> = (0..6).map(|i| 4.0 + 2.0 * i as f64).collect();
    let mut fixed = spec(ChannelPreset::Static, NbModel::Constant(25.0), grid, vec![entry(ReceiverKind::Ideal, &[1], None)]);
    fixed.min_errors = 1000;
    fixed.receiver_state = ReceiverState::Continuous;
    fixed.genie = false;
    let ctx = SweepContext::new(&fixed).unwrap();
    let (c1, o1, w1) = wilson_agreement(&fixed, |db| conditional_bep(ctx.n_s(db), 25.0));

    let grid: Vec<f64> = (0..6).map(|i| 8.0 + 2.0 * i as f64).collect();
    let mut faded = spec(ChannelPreset::Weak, NbModel::Constant(39.0), grid, vec![entry(ReceiverKind::Ideal, &[1], None)]);
    faded.l_c = 1;
    faded.min_errors = 1000;
    faded.receiver_state = ReceiverState::Continuous;
    faded.genie = false;
    let ctx = SweepContext::new(&faded).unwrap();
    let (c2, o2, w2) = wilson_agreement(&faded, |db| ctx.genie_point(db).unwrap().bep);
    outcome(
        "4 simulation matches analysis",
        o1 + o2 == 0 && c1 > 0 && c2 > 0,
        format!("static {}/{c1} outside{w1}; weak fading {}/{c2} outside{w2}", o1, o2),
    )
}

/// Weak and strong sweeps with n_b = 39 shared by the sequence criteria.
fn sequence_sweeps() -> Vec<(&'static str, Vec<BepPoint>, f64)> {
    let mut runs = Vec::new();
    for (name, preset, lo, hi) in
        [("weak", ChannelPreset::Weak, 14.0, 20.0), ("strong", ChannelPreset::Strong, 29.0, 35.0)]
    {
        let grid: Vec<f64> = (0..=((hi - lo) as usize)).map(|i| lo + i as f64).collect();
        let mut s = spec(
            preset,
            NbModel::Constant(39.0),
            grid,
            vec![
                entry(ReceiverKind::Ideal, &[1], None),
                entry(ReceiverKind::GlrtSeq, &[2, 32], None),
                entry(ReceiverKind::GmlsdSeq, &[1, 8], Some(39.0)),
            ],
        );
        s.min_errors = 3000;
        let ctx = SweepContext::new(&s).unwrap();
        let g = genie_crossing(&ctx, lo - 2.0, hi, TARGET);
        runs.push((name, run_sweep(&s).unwrap().points, g));
    }
    runs
}

fn gap_criterion(
    id: &'static str,
    runs: &[(&'static str, Vec<BepPoint>, f64)],
    receiver: &str,
    limits: [(usize, f64); 2],
) -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, points, g) in runs {
        for (l, limit) in limits {
            let (raw, adjusted) = gaps(&curves(points, receiver, l), *g);
            passed &= gap_within(adjusted, limit);
            parts.push(format!("{name} L={l} gap {} (raw {}, limit {limit})", fmt_gap(adjusted), fmt_gap(raw)));
        }
    }
    outcome(id, passed, parts.join("; "))
}

fn criterion_7() -> Outcome {
    let grid: Vec<f64> = (14..=21).map(f64::from).collect();
    let mut s = spec(
        ChannelPreset::Weak,
        NbModel::Uniform { lo: 10.0, hi: 100.0 },
        grid,
        vec![
            entry(ReceiverKind::Ideal, &[1], None),
            entry(ReceiverKind::GlrtDfb, &[32], None),
            entry(ReceiverKind::GmlsdDfb, &[32], Some(39.0)),
        ],
    );
    s.min_errors = 3000;
    let ctx = SweepContext::new(&s).unwrap();
    let g = genie_crossing(&ctx, 12.0, 21.0, TARGET);
    let points = run_sweep(&s).unwrap().points;
    let glrt = curves(&points, "glrt_dfb", 32);
    let (raw, adjusted) = gaps(&glrt, g);
    let gmlsd = curves(&points, "gmlsd_dfb", 32);
    let ratio = interpolate(&gmlsd.db, &gmlsd.adjusted, g) / TARGET;
    let raw_ratio = interpolate(&gmlsd.db, &gmlsd.raw, g) / TARGET;
    outcome(
        "7 robustness to unknown background",
        gap_within(adjusted, 0.3) && ratio >= 2.0,
        format!(
            "GLRT DFB L=32 gap {} (raw {}); GMLSD DFB at {g:.2} dB is {ratio:.2}x the bound (raw {raw_ratio:.2}x)",
            fmt_gap(adjusted),
            fmt_gap(raw)
        ),
    )
}

fn criterion_8() -> Outcome {
    let grid: Vec<f64> = (0..5).map(|i| 14.0 + 3.0 * i as f64).collect();
    let mut s = spec(
        ChannelPreset::Weak,
        NbModel::Constant(39.0),
        grid,
        vec![entry(ReceiverKind::GlrtSeq, &[16], None), entry(ReceiverKind::GmlsdSeq, &[16], Some(39.0))],
    );
    s.min_errors = 300;
    s.genie = false;
    let points = run_sweep(&s).unwrap().points;
    let mut passed = true;
    let mut parts = Vec::new();
    for name in ["glrt_seq", "gmlsd_seq"] {
        let c = curve(&points, name, 16);
        let separated = c.windows(2).all(|w| w[1].ci_hi < w[0].ci_lo);
        let reaches = c.last().is_some_and(|p| p.bep <= 1e-5);
        passed &= separated && reaches;
        let beps: Vec<String> = c.iter().map(|p| format!("{:.1e}", p.bep)).collect();
        parts.push(format!("{name} [{}]", beps.join(", ")));
    }
    outcome("8 no error floor at L=16", passed, parts.join("; "))
}

fn criterion_9() -> Outcome {
    let bad: usize = [(50.0, 25.0), (100.0, 150.0), (20.0, 60.0)]
        .iter()
        .map(|&(nr, nb)| appendix_a_disagreements(nr, nb, 1_000_000, 300).len())
        .sum();
    let n_b = 39.0;
    let poisson = Poisson::new(n_b).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(90);
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for l in [2usize, 8, 32] {
        let trials = 10_000;
        let estimates: Vec<f64> = (0..trials)
            .map(|_| {
                let mut store = DetectedStore::new(l / 2, l / 2);
                for _ in 0..l / 2 {
                    store.push(0, poisson.sample(&mut rng) as u32);
                    store.push(1, Poisson::new(n_b + 50.0).unwrap().sample(&mut rng) as u32);
                }
                glrt_nr_nb_estimates(&store.stats()).unwrap().1
            })
            .collect();
        let mean = estimates.iter().sum::<f64>() / trials as f64;
        let var = estimates.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (trials - 1) as f64;
        let want = 2.0 * n_b / l as f64;
        worst = worst.max((var / want - 1.0).abs());
        parts.push(format!("L={l} var {var:.3} vs {want:.3}"));
    }
    outcome(
        "9 asymptotic equivalence and estimator variance",
        bad == 0 && worst <= 0.10,
        format!("{bad} disagreements; {}", parts.join(", ")),
    )
}

fn criterion_10() -> Outcome {
    let msd = msd_oracle_check(1000, 101);
    let (short, trials, worst) = trellis_exhaustive_shortfall(2000, 102);
    let bessel = bessel_half_check();
    outcome(
        "10 oracle equivalences",
        msd.passed && short == 0 && bessel.passed,
        format!(
            "(a) {}; (b) {short}/{trials} streams below the exhaustive maximum, worst by {worst:.3}; (c) {}",
            msd.detail, bessel.detail
        ),
    )
}

fn criterion_11() -> Outcome {
    let n = 1_000_000;
    let mut parts = Vec::new();
    let mut passed = true;
    for (name, params) in [("weak", ChannelParams::WEAK), ("strong", ChannelParams::STRONG)] {
        let mut rng = ChaCha8Rng::seed_from_u64(110);
        let draws: Vec<_> = (0..n).map(|_| sample_channel_gain(&params, &mut rng)).collect();
        let mean_h = draws.iter().map(|d| d.h).sum::<f64>() / n as f64;
        let mean_a = draws.iter().map(|d| d.h_a).sum::<f64>() / n as f64;
        let si = draws.iter().map(|d| d.h_a * d.h_a).sum::<f64>() / n as f64 / (mean_a * mean_a) - 1.0;
        let want = scintillation_index(params.alpha, params.beta);
        let p = params.pointing.unwrap();
        let mut hp: Vec<f64> = draws.iter().map(|d| d.h_p).collect();
        hp.sort_by(f64::total_cmp);
        let ks = hp
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = p.cdf(x);
                (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        passed &= (mean_h - 1.0).abs() <= 0.01 && (si - want).abs() <= 0.05 * want && ks < 0.002;
        parts.push(format!("{name}: mean h {mean_h:.4}, SI {si:.4} vs {want:.4}, KS {ks:.4}"));
    }
    outcome("11 sampler fidelity", passed, parts.join("; "))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results = vec![criterion_1(), criterion_2(), criterion_3(), criterion_4()];
    let runs = sequence_sweeps();
    results.push(gap_criterion("5 GLRT sequence convergence", &runs, "glrt_seq", [(2, 1.3), (32, 0.3)]));
    results.push(gap_criterion("6 GMLSD sequence convergence", &runs, "gmlsd_seq", [(1, 0.5), (8, 0.2)]));
    results.extend([criterion_7(), criterion_8(), criterion_9(), criterion_10(), criterion_11()]);
    for r in &results {
        println!("{}  {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.id, r.detail);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} criteria, {failed} failed, {:.0} s", results.len(), start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
