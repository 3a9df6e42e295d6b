//! Statistical checks of the samplers and of the averaged genie bound.

use fsolink::analysis::GenieEvaluator;
use fsolink::channel::{sample_channel_gain, scintillation_index, ChannelModel, ChannelParams, GainDensity};
use fsolink::numerics::{integrate_adaptive, poisson_cdf, AdaptiveOptions};
use fsolink::signal::{db_to_linear, generate_block, n_s_from_snr, LinkState, NbModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn pointing_draws_follow_their_cdf() {
    let params = ChannelParams::WEAK;
    let p = params.pointing.unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 1_000_000;
    let mut draws: Vec<f64> = (0..n).map(|_| sample_channel_gain(&params, &mut rng).h_p).collect();
    draws.sort_by(f64::total_cmp);
    let ks = draws
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = p.cdf(x);
            (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.002, "KS distance {ks}");
}

#[test]
fn gain_mean_and_turbulence_si() {
    for params in [ChannelParams::WEAK, ChannelParams::STRONG] {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let n = 1_000_000;
        let (mut sum_h, mut sum_a, mut sum_a2) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let s = sample_channel_gain(&params, &mut rng);
            sum_h += s.h;
            sum_a += s.h_a;
            sum_a2 += s.h_a * s.h_a;
        }
        let n = n as f64;
        let mean_h = sum_h / n;
        let mean_a = sum_a / n;
        let si = (sum_a2 / n) / (mean_a * mean_a) - 1.0;
        let want = scintillation_index(params.alpha, params.beta);
        assert!((mean_h - 1.0).abs() < 0.01, "mean {mean_h}");
        assert!((si - want).abs() < 0.05 * want, "SI {si} vs {want}");
    }
}

#[test]
fn gain_histogram_matches_density() {
    let params = ChannelParams::WEAK;
    let density = GainDensity::new(&params).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let n = 10_000_000usize;
    let (lo, hi, bins) = (0.05, 2.55, 50usize);
    let width = (hi - lo) / bins as f64;
    let mut hist = vec![0u64; bins];
    for _ in 0..n {
        let h = sample_channel_gain(&params, &mut rng).h;
        if h >= lo && h < hi {
            hist[((h - lo) / width) as usize] += 1;
        }
    }
    let opts = AdaptiveOptions {
        rel_tol: 1e-10,
        abs_tol: 1e-14,
        max_intervals: 200,
    };
    for (i, &count) in hist.iter().enumerate() {
        let a = lo + i as f64 * width;
        let mass = integrate_adaptive(|h| density.pdf(h), a, a + width, opts).unwrap().value;
        let expected = mass * n as f64;
        let se = expected.max(1.0).sqrt();
        assert!(
            (count as f64 - expected).abs() <= 3.0 * se,
            "bin {i} [{a:.2}): {count} draws, {expected:.1} expected"
        );
    }
}

/// Pools the upper tail so every cell expects at least five counts.
fn chi_square_poisson(counts: &[u32], lambda: f64) -> (f64, usize) {
    let n = counts.len() as f64;
    let top = (lambda + 6.0 * lambda.sqrt()).ceil() as u32;
    let mut observed = vec![0u64; top as usize + 1];
    for &c in counts {
        observed[c.min(top) as usize] += 1;
    }
    let mut cells = Vec::new();
    let mut prev = 0.0;
    for k in 0..top {
        let cdf = poisson_cdf(k as u64, lambda).unwrap();
        cells.push((observed[k as usize] as f64, (cdf - prev) * n));
        prev = cdf;
    }
    cells.push((observed[top as usize] as f64, (1.0 - prev) * n));
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (o, e) in cells {
        acc = (acc.0 + o, acc.1 + e);
        if acc.1 >= 5.0 {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if let Some(last) = pooled.last_mut() {
        last.0 += acc.0;
        last.1 += acc.1;
    }
    let stat = pooled.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    (stat, pooled.len() - 1)
}

#[test]
fn slot_counts_are_poisson_given_the_bit() {
    let state = LinkState::new(0.9, 40.0, 20.0);
    let block = generate_block(&state, 1_000_000, &mut ChaCha8Rng::seed_from_u64(24));
    for (bit, lambda) in [(0u8, 20.0), (1u8, 56.0)] {
        let counts: Vec<u32> =
            block.bits.iter().zip(&block.counts).filter(|(&b, _)| b == bit).map(|(_, &c)| c).collect();
        let (stat, dof) = chi_square_poisson(&counts, lambda);
        let critical = ChiSquared::new(dof as f64).unwrap().inverse_cdf(0.99);
        assert!(stat < critical, "bit {bit}: chi2 {stat:.1} with {dof} dof, critical {critical:.1}");
    }
}

#[test]
fn averaged_bound_is_the_background_average() {
    let channel = ChannelModel::Turbulent(ChannelParams::WEAK);
    let eval = GenieEvaluator::new(&channel).unwrap();
    let model = NbModel::Uniform { lo: 10.0, hi: 100.0 };
    for db in [10.0, 14.0, 18.0] {
        let n_s = n_s_from_snr(db_to_linear(db), 55.0);
        let averaged = eval.bound_nb(n_s, &model).unwrap().value;
        // composite Simpson over n_b with unit spacing
        let f = |nb: f64| eval.bound(n_s, nb).unwrap().value;
        let steps = 90;
        let h = 90.0 / steps as f64;
        let mut sum = f(10.0) + f(100.0);
        for i in 1..steps {
            sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(10.0 + i as f64 * h);
        }
        let simpson = sum * h / 3.0 / 90.0;
        assert!((averaged - simpson).abs() < 1e-3 * simpson, "{db} dB: {averaged} vs {simpson}");
    }
}
