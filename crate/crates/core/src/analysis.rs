//! Error probabilities of the genie-aided receiver: per channel state, and
//! averaged over fading and over the background model.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, GainDensity};
use crate::error::Result;
use crate::numerics::special::poisson_cdf;
use crate::numerics::QuadratureRule;
use crate::receivers::ideal_threshold;
use crate::signal::NbModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BepMethod {
    Analytic,
    Quadrature,
    MonteCarlo,
}

impl BepMethod {
    pub fn name(&self) -> &'static str {
        match self {
            BepMethod::Analytic => "analytic",
            BepMethod::Quadrature => "quadrature",
            BepMethod::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BepResult {
    pub value: f64,
    pub method: BepMethod,
    /// Absolute error bound for quadrature, one standard error for Monte Carlo.
    pub tolerance: f64,
}

/// Error probability of the ideal receiver at signal `n_r` and background
/// `n_b`, with equiprobable bits and the strict rule `count > τ`.
pub fn conditional_bep(n_r: f64, n_b: f64) -> f64 {
    let tau = ideal_threshold(n_r, n_b);
    let k = tau.floor() as u64;
    let miss = poisson_cdf(k, n_r + n_b).unwrap_or(1.0);
    let false_alarm = 1.0 - poisson_cdf(k, n_b).unwrap_or(1.0);
    (0.5 * (false_alarm + miss)).min(0.5)
}

/// Signal count at which the threshold reaches `k`; needs `k > n_b > 0`.
fn signal_for_threshold(k: f64, n_b: f64) -> f64 {
    let g = |x: f64| x - k * (x / n_b).ln_1p();
    let mut hi = k;
    while g(hi) <= 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Genie bound evaluator for one channel. Building the gain density table is
/// the expensive part, so one evaluator serves a whole SNR grid.
#[derive(Debug, Clone)]
pub struct GenieEvaluator {
    channel: ChannelModel,
    density: Option<Arc<GainDensity>>,
}

impl GenieEvaluator {
    pub fn new(channel: &ChannelModel) -> Result<Self> {
        channel.validate()?;
        let density = match channel {
            ChannelModel::Fixed { .. } => None,
            ChannelModel::Turbulent(p) => Some(Arc::new(GainDensity::new(p)?)),
        };
        Ok(GenieEvaluator {
            channel: *channel,
            density,
        })
    }

    pub fn with_density(channel: &ChannelModel, density: Arc<GainDensity>) -> Self {
        GenieEvaluator {
            channel: *channel,
            density: Some(density),
        }
    }

    pub fn density(&self) -> Option<&Arc<GainDensity>> {
        self.density.as_ref()
    }

    /// `∫ conditional_bep(h n_s, n_b) p_h(h) dh`.
    pub fn bound(&self, n_s: f64, n_b: f64) -> Result<BepResult> {
        let density = match (&self.channel, &self.density) {
            (ChannelModel::Fixed { gain }, _) => {
                return Ok(BepResult {
                    value: conditional_bep(gain * n_s, n_b),
                    method: BepMethod::Analytic,
                    tolerance: 1e-14,
                })
            }
            (_, Some(d)) => d,
            (_, None) => unreachable!("turbulent evaluator always carries a density"),
        };
        // The integrand jumps wherever ⌊τ(h n_s)⌋ steps; integrate between
        // those gains.
        let h_max = density.log_domain().1.exp();
        let mut breaks = Vec::new();
        if n_b > 0.0 && n_s > 0.0 {
            let tau_max = ideal_threshold(h_max * n_s, n_b);
            let mut k = n_b.floor() + 1.0;
            while k <= tau_max {
                breaks.push(signal_for_threshold(k, n_b) / n_s);
                k += 1.0;
            }
        }
        let rel_tol = 1e-9;
        let value = density.expect(|h| conditional_bep(h * n_s, n_b), &breaks, rel_tol)?;
        Ok(BepResult {
            value,
            method: BepMethod::Quadrature,
            tolerance: rel_tol * value + 1e-6 * value,
        })
    }

    /// Bound averaged over the background model (Gauss-Legendre over a
    /// uniform range).
    pub fn bound_nb(&self, n_s: f64, model: &NbModel) -> Result<BepResult> {
        match *model {
            NbModel::Constant(n_b) => self.bound(n_s, n_b),
            NbModel::Uniform { lo, hi } if lo == hi => self.bound(n_s, lo),
            NbModel::Uniform { lo, hi } => {
                let rule = QuadratureRule::composite_gauss_legendre(8, 24, lo, hi);
                let mut value = 0.0;
                let mut tolerance = 0.0;
                for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                    let r = self.bound(n_s, *x)?;
                    value += w * r.value;
                    tolerance += w * r.tolerance;
                }
                let width = hi - lo;
                let method = match self.channel {
                    ChannelModel::Fixed { .. } => BepMethod::Analytic,
                    ChannelModel::Turbulent(_) => BepMethod::Quadrature,
                };
                Ok(BepResult {
                    value: value / width,
                    method,
                    tolerance: tolerance / width,
                })
            }
        }
    }
}

/// Genie bound by quadrature (or in closed form for a fixed gain).
pub fn genie_bound(n_s: f64, n_b: f64, channel: &ChannelModel) -> Result<BepResult> {
    GenieEvaluator::new(channel)?.bound(n_s, n_b)
}

/// Monte-Carlo cross-check: averages `conditional_bep` over `draws` channel
/// samples. Deterministic in `seed` regardless of thread count.
pub fn genie_bound_monte_carlo(n_s: f64, n_b: f64, channel: &ChannelModel, draws: usize, seed: u64) -> Result<BepResult> {
    channel.validate()?;
    const CHUNK: usize = 1 << 16;
    let chunks = draws.div_ceil(CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = CHUNK.min(draws - c * CHUNK);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let v = conditional_bep(channel.sample(&mut rng).h * n_s, n_b);
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = draws as f64;
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    Ok(BepResult {
        value: mean,
        method: BepMethod::MonteCarlo,
        tolerance: (var / n).sqrt(),
    })
}
