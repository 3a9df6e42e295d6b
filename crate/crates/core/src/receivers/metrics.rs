//! Decision metrics and per-symbol decision statistics of every receiver.
//!
//! All metrics are natural logs of the corresponding likelihood expressions;
//! the raw products overflow double precision for windows of a few hundred
//! slots.

use std::sync::Arc;

use crate::channel::GainDensity;
use crate::error::{Error, Result};
use crate::numerics::{integrate_adaptive, AdaptiveOptions};
use crate::numerics::special::xlogx_over;

use super::stats::WindowStats;

/// Decision threshold of the receiver that knows `n_r` and `n_b`:
/// decide 1 iff `count > threshold`.
///
/// With `n_b = 0` an off slot can only produce zero photons, so the rule is
/// "1 iff any photon", i.e. a threshold of 0 under the strict comparison.
/// As `n_r → 0` the threshold tends to `n_b`.
pub fn ideal_threshold(n_r: f64, n_b: f64) -> f64 {
    if n_b <= 0.0 {
        0.0
    } else if n_r <= 0.0 {
        n_b
    } else {
        n_r / (n_r / n_b).ln_1p()
    }
}

#[inline]
pub fn ideal_decide(count: u32, threshold: f64) -> u8 {
    u8::from(count as f64 > threshold)
}

/// GLRT sequence metric `R_off ln(R_off/N_off) + R_on ln(R_on/N_on)`, with
/// `0·ln 0 = 0`. Both classes must be non-empty.
pub fn glrt_metric(stats: &WindowStats) -> Result<f64> {
    if stats.n_on == 0 || stats.n_off == 0 {
        return Err(Error::Precondition("GLRT metric needs n_on >= 1 and n_off >= 1"));
    }
    Ok(glrt_metric_unchecked(stats))
}

#[inline]
pub(crate) fn glrt_metric_unchecked(s: &WindowStats) -> f64 {
    xlogx_over(s.r_off as f64, s.n_off as f64) + xlogx_over(s.r_on as f64, s.n_on as f64)
}

/// Whether the labeling's on-class mean is at least its off-class mean, i.e.
/// its signal estimate `n̂_r` is non-negative.
#[inline]
pub fn glrt_labeling_is_physical(s: &WindowStats) -> bool {
    (s.r_on as u128) * (s.n_off as u128) >= (s.r_off as u128) * (s.n_on as u128)
}

/// GLRT metric maximized over `n_r ≥ 0`. Labelings whose on-class mean falls
/// below the off-class mean take the pooled value `R ln(R/N)` of a window
/// without signal, so the label-swapped solution never scores above a
/// physical one.
#[inline]
pub fn glrt_constrained_metric(s: &WindowStats) -> f64 {
    if glrt_labeling_is_physical(s) {
        glrt_metric_unchecked(s)
    } else {
        xlogx_over((s.r_on + s.r_off) as f64, (s.n_on + s.n_off) as f64)
    }
}

/// ML estimates of the signal and background counts for a hypothesis:
/// `n̂_b = R_off/N_off`, `n̂_r = R_on/N_on − n̂_b` (may be negative).
pub fn glrt_nr_nb_estimates(stats: &WindowStats) -> Result<(f64, f64)> {
    if stats.n_on == 0 || stats.n_off == 0 {
        return Err(Error::Precondition("estimates need n_on >= 1 and n_off >= 1"));
    }
    let nb = stats.r_off as f64 / stats.n_off as f64;
    let nr = stats.r_on as f64 / stats.n_on as f64 - nb;
    Ok((nr, nb))
}

/// GMLSD metric with known background:
/// `R_on ln(R_on/(N_on n_b)) − R_on + n_b N_on`; zero when `N_on = 0`.
#[inline]
pub fn gmlsd_log_metric(stats: &WindowStats, n_b: f64) -> f64 {
    if stats.n_on == 0 {
        return 0.0;
    }
    let r = stats.r_on as f64;
    let n = stats.n_on as f64;
    xlogx_over(r, n * n_b) - r + n_b * n
}

/// Prior on the channel gain used by the MLSD metric.
#[derive(Debug, Clone)]
pub enum GainPrior {
    /// Degenerate prior `δ(h − h₀)`; the integral collapses to a closed form.
    PointMass(f64),
    Density(Arc<GainDensity>),
}

/// MLSD metric: `ln ∫ (h n_s/n_b + 1)^R_on exp(−(n_s N_on h + n_b L)) p_h(h) dh`.
///
/// The log-integrand is evaluated in `u = ln h`, shifted by its maximum and
/// integrated adaptively on pieces bracketing the peak.
pub fn mlsd_log_metric(
    stats: &WindowStats,
    window: u64,
    n_s: f64,
    n_b: f64,
    prior: &GainPrior,
) -> Result<f64> {
    if !(n_b > 0.0) {
        return Err(Error::Precondition("MLSD metric needs n_b > 0"));
    }
    let r_on = stats.r_on as f64;
    let n_on = stats.n_on as f64;
    let base = -n_b * window as f64;
    match prior {
        GainPrior::PointMass(h) => {
            Ok(r_on * (h * n_s / n_b).ln_1p() - n_s * n_on * h + base)
        }
        GainPrior::Density(density) => {
            let ratio = n_s / n_b;
            let g = |u: f64| {
                let lp = density.ln_pdf_at_log(u);
                if lp == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                let h = u.exp();
                r_on * (h * ratio).ln_1p() - n_s * n_on * h + lp + u
            };
            let (lo, hi) = density.log_domain();
            let (u_peak, g_peak) = density
                .knot_positions()
                .map(|u| (u, g(u)))
                .fold((lo, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
            if g_peak == f64::NEG_INFINITY {
                return Err(Error::Integration { abscissa: u_peak });
            }
            let du = density.knot_spacing();
            let mut cuts = vec![lo, u_peak - 4.0 * du, u_peak - du, u_peak + du, u_peak + 4.0 * du, hi];
            cuts.iter_mut().for_each(|c| *c = c.clamp(lo, hi));
            cuts.dedup();
            let opts = AdaptiveOptions {
                rel_tol: 1e-10,
                abs_tol: 1e-300,
                max_intervals: 2000,
            };
            let mut total = 0.0;
            for w in cuts.windows(2) {
                if w[1] > w[0] {
                    total += integrate_adaptive(|u| (g(u) - g_peak).exp(), w[0], w[1], opts)?.value;
                }
            }
            Ok(g_peak + total.ln() + base)
        }
    }
}

/// GLRT decision-feedback statistic Ψ; decide 1 iff Ψ > 0.
///
/// Terms of the form `a·ln(·/a)` with `a = 0` take their limit 0.
pub fn glrt_dfb_psi(stats: &WindowStats, count: u32) -> f64 {
    let r = count as f64;
    let (ron, roff) = (stats.r_on as f64, stats.r_off as f64);
    let (non, noff) = (stats.n_on as f64, stats.n_off as f64);
    let first = if r == 0.0 {
        0.0
    } else {
        r * (((noff + 1.0) / (roff + r)) * ((ron + r) / (non + 1.0))).ln()
    };
    let second = if ron == 0.0 {
        0.0
    } else {
        ron * (((non + 1.0) / (ron + r)) * (ron / non)).ln()
    };
    let third = if roff == 0.0 {
        0.0
    } else {
        roff * (((roff + r) / (noff + 1.0)) * (noff / roff)).ln()
    };
    first - second - third
}

/// GMLSD decision-feedback statistic Ψ₀ with known `n_b`; decide 1 iff Ψ₀ > 0.
pub fn gmlsd_dfb_psi0(r_on: u64, n_on: u64, count: u32, n_b: f64) -> f64 {
    let ron = r_on as f64;
    let r = count as f64;
    let non = n_on as f64;
    let grown = xlogx_over(ron + r, (non + 1.0) * n_b);
    let current = if n_on == 0 { 0.0 } else { xlogx_over(ron, non * n_b) };
    grown - current - r + n_b
}

/// Plug-in version of the ideal rule with estimated parameters.
pub fn asymptotic_decide(nr_hat: f64, nb_hat: f64, count: u32) -> u8 {
    ideal_decide(count, ideal_threshold(nr_hat, nb_hat))
}
