//! Channel gain model: Gamma-Gamma turbulence times a bounded pointing-error
//! factor, normalized to unit mean.
//!
//! The gain of one coherence block is `h = h_a · h_p / E[h_p]`. The
//! turbulence factor `h_a` is drawn as the product of two unit-mean gamma
//! variates (shapes α and β), which has the Gamma-Gamma density and mean 1.
//! The pointing factor has density `γ² x^(γ²−1) / A₀^γ²` on `(0, A₀]` and is
//! sampled by inverting its CDF.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate_adaptive, ln_bessel_k, log_gamma, AdaptiveOptions};

/// Pointing-error parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pointing {
    pub a0: f64,
    pub gamma_sq: f64,
}

impl Pointing {
    /// A₀ = 0.0198, γ² = 2.8071.
    pub const REFERENCE: Pointing = Pointing {
        a0: 0.0198,
        gamma_sq: 2.8071,
    };

    /// E[h_p] = A₀γ²/(γ²+1).
    pub fn mean(&self) -> f64 {
        self.a0 * self.gamma_sq / (self.gamma_sq + 1.0)
    }

    /// Inverse-CDF map from `u ∈ (0, 1]` to a pointing factor in `(0, A₀]`.
    pub fn from_uniform(&self, u: f64) -> f64 {
        self.a0 * u.powf(1.0 / self.gamma_sq)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= self.a0 {
            1.0
        } else {
            (x / self.a0).powf(self.gamma_sq)
        }
    }
}

/// Turbulence and pointing parameters of a fading channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub alpha: f64,
    pub beta: f64,
    pub pointing: Option<Pointing>,
    #[serde(default = "default_true")]
    pub normalize_mean: bool,
}

fn default_true() -> bool {
    true
}

impl ChannelParams {
    /// Weak turbulence: α = 17.13, β = 16.04.
    pub const WEAK: ChannelParams = ChannelParams {
        alpha: 17.13,
        beta: 16.04,
        pointing: Some(Pointing::REFERENCE),
        normalize_mean: true,
    };
    /// Strong turbulence: α = 2.23, β = 1.54.
    pub const STRONG: ChannelParams = ChannelParams {
        alpha: 2.23,
        beta: 1.54,
        pointing: Some(Pointing::REFERENCE),
        normalize_mean: true,
    };

    pub fn new(alpha: f64, beta: f64, pointing: Option<Pointing>) -> Result<Self> {
        let p = ChannelParams {
            alpha,
            beta,
            pointing,
            normalize_mean: true,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn without_pointing(mut self) -> Self {
        self.pointing = None;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.alpha) {
            return Err(Error::domain("turbulence shape alpha", self.alpha));
        }
        if !positive(self.beta) {
            return Err(Error::domain("turbulence shape beta", self.beta));
        }
        if let Some(p) = self.pointing {
            if !positive(p.a0) {
                return Err(Error::domain("pointing constant a0", p.a0));
            }
            if !positive(p.gamma_sq) {
                return Err(Error::domain("pointing shape gamma_sq", p.gamma_sq));
            }
        }
        Ok(())
    }

    /// Factor applied to `h_a·h_p`: 1/E[h_p] when normalizing, else 1.
    fn pointing_scale(&self) -> f64 {
        match (self.pointing, self.normalize_mean) {
            (Some(p), true) => 1.0 / p.mean(),
            _ => 1.0,
        }
    }

    /// Pointing parameters after scaling, i.e. the law of `h_p·scale`.
    fn scaled_pointing(&self) -> Option<Pointing> {
        self.pointing.map(|p| Pointing {
            a0: p.a0 * self.pointing_scale(),
            gamma_sq: p.gamma_sq,
        })
    }

    /// Analytic E[h].
    pub fn mean_gain(&self) -> f64 {
        match self.pointing {
            Some(p) => p.mean() * self.pointing_scale(),
            None => 1.0,
        }
    }
}

/// One draw of the block gain and its two factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSample {
    pub h: f64,
    pub h_a: f64,
    pub h_p: f64,
}

/// Channel used by a simulation: a fixed gain (test hook, no fading) or
/// Gamma-Gamma turbulence with optional pointing errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelModel {
    Fixed { gain: f64 },
    Turbulent(ChannelParams),
}

impl ChannelModel {
    pub const UNIT: ChannelModel = ChannelModel::Fixed { gain: 1.0 };

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelSample {
        match self {
            ChannelModel::Fixed { gain } => ChannelSample {
                h: *gain,
                h_a: *gain,
                h_p: 1.0,
            },
            ChannelModel::Turbulent(p) => sample_channel_gain(p, rng),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ChannelModel::Fixed { gain } if !(*gain >= 0.0 && gain.is_finite()) => {
                Err(Error::domain("fixed channel gain", *gain))
            }
            ChannelModel::Fixed { .. } => Ok(()),
            ChannelModel::Turbulent(p) => p.validate(),
        }
    }
}

/// Draws the turbulence factor `h_a = X·Y`, X ~ Gamma(α, 1/α), Y ~ Gamma(β, 1/β).
pub fn sample_gamma_gamma<R: Rng + ?Sized>(params: &ChannelParams, rng: &mut R) -> f64 {
    let x = Gamma::new(params.alpha, 1.0 / params.alpha).expect("alpha validated");
    let y = Gamma::new(params.beta, 1.0 / params.beta).expect("beta validated");
    x.sample(rng) * y.sample(rng)
}

/// Draws the unnormalized pointing factor in `(0, A₀]`; 1 when pointing is
/// disabled.
pub fn sample_pointing<R: Rng + ?Sized>(params: &ChannelParams, rng: &mut R) -> f64 {
    match params.pointing {
        Some(p) => {
            // random::<f64>() is in [0, 1); flip it onto (0, 1].
            let u = 1.0 - rng.random::<f64>();
            p.from_uniform(u)
        }
        None => 1.0,
    }
}

pub fn sample_channel_gain<R: Rng + ?Sized>(params: &ChannelParams, rng: &mut R) -> ChannelSample {
    let h_a = sample_gamma_gamma(params, rng);
    let h_p = sample_pointing(params, rng);
    let h = match params.pointing {
        Some(_) => h_a * h_p * params.pointing_scale(),
        None => h_a,
    };
    ChannelSample { h, h_a, h_p }
}

/// α⁻¹ + β⁻¹ + (αβ)⁻¹.
pub fn scintillation_index(alpha: f64, beta: f64) -> f64 {
    1.0 / alpha + 1.0 / beta + 1.0 / (alpha * beta)
}

/// ln of the Gamma-Gamma density of `h_a` at `a > 0`.
pub fn ln_pdf_turbulence(alpha: f64, beta: f64, a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    let s = 0.5 * (alpha + beta);
    let ab = alpha * beta;
    Ok(std::f64::consts::LN_2 + s * ab.ln() - log_gamma(alpha)? - log_gamma(beta)?
        + (s - 1.0) * a.ln()
        + ln_bessel_k(alpha - beta, 2.0 * (ab * a).sqrt())?)
}

/// Upper end of the turbulence factor's effective support: beyond it the
/// Gamma-Gamma density is below e^-70 times its polynomial prefactor.
fn turbulence_upper(params: &ChannelParams) -> f64 {
    let t = 70.0 / (2.0 * (params.alpha * params.beta).sqrt());
    (t * t).max(10.0)
}

/// Density of the channel gain `h`.
///
/// Without pointing this is the Gamma-Gamma density. With pointing it is
/// `∫ (1/a) p_ha(a) p_hp(h/a) da` over `a > h/A₀′`, where `A₀′` is the
/// pointing upper limit after normalization, evaluated by adaptive quadrature
/// in `ln a`.
pub fn pdf_h(params: &ChannelParams, h: f64) -> Result<f64> {
    params.validate()?;
    if !(h > 0.0) {
        return Ok(0.0);
    }
    let Some(p) = params.scaled_pointing() else {
        return Ok(ln_pdf_turbulence(params.alpha, params.beta, h)?.exp());
    };
    let lo = (h / p.a0).ln();
    let hi = turbulence_upper(params).ln();
    if lo >= hi {
        return Ok(0.0);
    }
    let ln_c = p.gamma_sq.ln() - p.gamma_sq * p.a0.ln();
    let g2 = p.gamma_sq;
    let (alpha, beta) = (params.alpha, params.beta);
    // Integrand in v = ln a:  p_ha(a) · p_hp(h/a).
    let integrand = |v: f64| {
        let ln_pa = ln_pdf_turbulence(alpha, beta, v.exp()).unwrap_or(f64::NEG_INFINITY);
        (ln_pa + ln_c + (g2 - 1.0) * (h.ln() - v)).exp()
    };
    let opts = AdaptiveOptions {
        rel_tol: 1e-11,
        abs_tol: 0.0,
        max_intervals: 4000,
    };
    // Split at a = 1 so the bulk of p_ha is never straddled by one panel.
    let mid = 0.0_f64.clamp(lo, hi);
    let a = integrate_adaptive(integrand, lo, mid, opts)?;
    let b = integrate_adaptive(integrand, mid, hi, opts)?;
    Ok(a.value + b.value)
}

/// `p_h` tabulated on a uniform grid in `u = ln h`, with cubic interpolation
/// of `ln p_h` between knots.
///
/// The pointing convolution is rewritten as
/// `p_h(h) = C h^(γ²−1) T(h/A₀′)`, `T(x) = ∫ₓ^∞ a^(−γ²) p_ha(a) da`, so the
/// whole table costs one cumulative pass over the grid instead of one
/// quadrature per knot.
#[derive(Debug, Clone)]
pub struct GainDensity {
    u_lo: f64,
    du: f64,
    ln_pdf: Vec<f64>,
}

impl GainDensity {
    pub const DEFAULT_KNOTS: usize = 2401;

    pub fn new(params: &ChannelParams) -> Result<Self> {
        Self::with_knots(params, Self::DEFAULT_KNOTS)
    }

    pub fn with_knots(params: &ChannelParams, knots: usize) -> Result<Self> {
        params.validate()?;
        assert!(knots >= 16);
        let a_max = turbulence_upper(params);
        let u_lo = (1e-12f64).ln();
        let (alpha, beta) = (params.alpha, params.beta);
        match params.scaled_pointing() {
            None => {
                let u_hi = a_max.ln();
                let du = (u_hi - u_lo) / (knots - 1) as f64;
                let ln_pdf = (0..knots)
                    .map(|i| ln_pdf_turbulence(alpha, beta, (u_lo + i as f64 * du).exp()))
                    .collect::<Result<Vec<_>>>()?;
                Ok(GainDensity { u_lo, du, ln_pdf })
            }
            Some(p) => {
                let u_hi = (a_max * p.a0).ln();
                let du = (u_hi - u_lo) / (knots - 1) as f64;
                let g2 = p.gamma_sq;
                let ln_c = g2.ln() - g2 * p.a0.ln();
                // T on the grid x_i = h_i / A₀′, i.e. ln x_i = u_i − ln A₀′.
                let weight = |v: f64| {
                    let lp = ln_pdf_turbulence(alpha, beta, v.exp()).unwrap_or(f64::NEG_INFINITY);
                    (lp + (1.0 - g2) * v).exp()
                };
                let opts = AdaptiveOptions {
                    rel_tol: 1e-12,
                    abs_tol: 0.0,
                    max_intervals: 200,
                };
                let mut tail = vec![0.0; knots];
                let shift = p.a0.ln();
                for i in (0..knots - 1).rev() {
                    let v0 = u_lo + i as f64 * du - shift;
                    let v1 = v0 + du;
                    tail[i] = tail[i + 1] + integrate_adaptive(weight, v0, v1, opts)?.value;
                }
                let ln_pdf = tail
                    .iter()
                    .enumerate()
                    .map(|(i, &t)| {
                        let u = u_lo + i as f64 * du;
                        if t > 0.0 {
                            ln_c + (g2 - 1.0) * u + t.ln()
                        } else {
                            f64::NEG_INFINITY
                        }
                    })
                    .collect();
                Ok(GainDensity { u_lo, du, ln_pdf })
            }
        }
    }

    /// Range of `u = ln h` covered by the table.
    pub fn log_domain(&self) -> (f64, f64) {
        (self.u_lo, self.u_lo + self.du * (self.ln_pdf.len() - 1) as f64)
    }

    /// Spacing of the table knots in `u = ln h`.
    pub fn knot_spacing(&self) -> f64 {
        self.du
    }

    pub fn knot_positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.ln_pdf.len()).map(move |i| self.u_lo + i as f64 * self.du)
    }

    /// Interpolated `ln p_h(e^u)`; `-inf` outside the table.
    pub fn ln_pdf_at_log(&self, u: f64) -> f64 {
        let (lo, hi) = self.log_domain();
        if !(u >= lo && u <= hi) {
            return f64::NEG_INFINITY;
        }
        let n = self.ln_pdf.len();
        let s = (u - self.u_lo) / self.du;
        let i = (s.floor() as usize).min(n - 2);
        let t = s - i as f64;
        let y1 = self.ln_pdf[i];
        let y2 = self.ln_pdf[i + 1];
        if !y1.is_finite() || !y2.is_finite() {
            // edge of the support: no interpolation into -inf
            return match t {
                0.0 => y1,
                1.0 => y2,
                _ => f64::NEG_INFINITY,
            };
        }
        // Catmull-Rom, falling back to one-sided differences at the ends.
        let y0 = if i > 0 && self.ln_pdf[i - 1].is_finite() {
            self.ln_pdf[i - 1]
        } else {
            2.0 * y1 - y2
        };
        let y3 = if i + 2 < n && self.ln_pdf[i + 2].is_finite() {
            self.ln_pdf[i + 2]
        } else {
            2.0 * y2 - y1
        };
        let m1 = 0.5 * (y2 - y0);
        let m2 = 0.5 * (y3 - y1);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y1
            + (t3 - 2.0 * t2 + t) * m1
            + (-2.0 * t3 + 3.0 * t2) * y2
            + (t3 - t2) * m2
    }

    pub fn pdf(&self, h: f64) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        self.ln_pdf_at_log(h.ln()).exp()
    }

    /// `∫ f(h) p_h(h) dh`, adaptive in `u = ln h`. Extra break points (in `h`)
    /// can be supplied where `f` is known to change character.
    pub fn expect<F: FnMut(f64) -> f64>(&self, mut f: F, breaks: &[f64], rel_tol: f64) -> Result<f64> {
        let (lo, hi) = self.log_domain();
        let mut cuts: Vec<f64> = breaks
            .iter()
            .filter(|&&b| b > 0.0)
            .map(|b| b.ln())
            .filter(|&u| u > lo && u < hi)
            .collect();
        cuts.push(lo);
        cuts.push(hi);
        // A few fixed cuts keep the first Kronrod pass from missing the bulk.
        cuts.extend([-6.0, -3.0, -1.5, 0.0, 1.0]);
        cuts.retain(|&u| u >= lo && u <= hi);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let opts = AdaptiveOptions {
            rel_tol,
            abs_tol: 1e-300,
            max_intervals: 20_000,
        };
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let est = integrate_adaptive(
                |u| {
                    let lp = self.ln_pdf_at_log(u);
                    if lp == f64::NEG_INFINITY {
                        0.0
                    } else {
                        let h = u.exp();
                        f(h) * (lp + u).exp()
                    }
                },
                w[0],
                w[1],
                opts,
            )?;
            total += est.value;
        }
        Ok(total)
    }
}
