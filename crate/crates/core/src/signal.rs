//! Transmitted bits, Poisson photon counts and the SNR ↔ mean-count mapping.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hidden truth of one coherence block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState {
    pub h: f64,
    pub n_s: f64,
    pub n_b: f64,
    pub n_r: f64,
}

impl LinkState {
    pub fn new(h: f64, n_s: f64, n_b: f64) -> Self {
        LinkState {
            h,
            n_s,
            n_b,
            n_r: h * n_s,
        }
    }
}

/// Background-count model of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NbModel {
    Constant(f64),
    /// Continuous uniform on `[lo, hi]`, redrawn once per coherence block.
    Uniform { lo: f64, hi: f64 },
}

impl NbModel {
    pub fn mean(&self) -> f64 {
        match *self {
            NbModel::Constant(v) => v,
            NbModel::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NbModel::Constant(v) => v,
            NbModel::Uniform { lo, hi } if lo == hi => lo,
            NbModel::Uniform { lo, hi } => rng.random_range(lo..=hi),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NbModel::Constant(v) if v >= 0.0 && v.is_finite() => Ok(()),
            NbModel::Constant(v) => Err(Error::domain("background count", v)),
            NbModel::Uniform { lo, hi } if lo >= 0.0 && lo <= hi && hi.is_finite() => Ok(()),
            NbModel::Uniform { .. } => Err(Error::config(
                "nb_model",
                "uniform bounds must satisfy 0 <= lo <= hi",
            )),
        }
    }
}

impl fmt::Display for NbModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NbModel::Constant(v) => write!(f, "const:{v}"),
            NbModel::Uniform { lo, hi } => write!(f, "uniform:{lo}:{hi}"),
        }
    }
}

impl FromStr for NbModel {
    type Err = Error;

    /// Parses `const:v` or `uniform:lo:hi`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config("nb_model", format!("expected const:v or uniform:lo:hi, got `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let model = match parts.as_slice() {
            ["const", v] => NbModel::Constant(num(v)?),
            ["uniform", lo, hi] => NbModel::Uniform {
                lo: num(lo)?,
                hi: num(hi)?,
            },
            _ => return Err(bad()),
        };
        model.validate()?;
        Ok(model)
    }
}

impl Serialize for NbModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NbModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Block structure of a run: `l_c` symbols share one gain and one background
/// level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherencePlan {
    pub l_c: usize,
    pub nb_model: NbModel,
}

impl CoherencePlan {
    pub fn validate(&self) -> Result<()> {
        if self.l_c == 0 {
            return Err(Error::config("l_c", "coherence length must be at least 1"));
        }
        self.nb_model.validate()
    }
}

/// Bits and photon counts of one block.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Block {
    pub bits: Vec<u8>,
    pub counts: Vec<u32>,
}

/// Draws `length` equiprobable bits and their counts,
/// `count ~ Poisson(n_s·m·h + n_b)`.
pub fn generate_block<R: Rng + ?Sized>(state: &LinkState, length: usize, rng: &mut R) -> Block {
    let mut block = Block::default();
    generate_block_into(state, length, rng, &mut block);
    block
}

/// As [`generate_block`], reusing the buffers in `out`.
pub fn generate_block_into<R: Rng + ?Sized>(
    state: &LinkState,
    length: usize,
    rng: &mut R,
    out: &mut Block,
) {
    out.bits.clear();
    out.counts.clear();
    let off = PoissonCounter::new(state.n_b);
    let on = PoissonCounter::new(state.n_r + state.n_b);
    for _ in 0..length {
        let bit = u8::from(rng.random::<bool>());
        let count = if bit == 1 { on.sample(rng) } else { off.sample(rng) };
        out.bits.push(bit);
        out.counts.push(count);
    }
}

/// Poisson sampler that also accepts a zero mean.
struct PoissonCounter(Option<Poisson<f64>>);

impl PoissonCounter {
    fn new(mean: f64) -> Self {
        PoissonCounter(if mean > 0.0 {
            Some(Poisson::new(mean).expect("finite positive mean"))
        } else {
            None
        })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match &self.0 {
            Some(p) => p.sample(rng) as u32,
            None => 0,
        }
    }
}

/// Signal count for a target SNR: the positive root of
/// `n_s² − 2S·n_s − 4S·n_b = 0`, taking `E[h] = 1`.
pub fn n_s_from_snr(snr_linear: f64, mean_nb: f64) -> f64 {
    snr_linear + (snr_linear * snr_linear + 4.0 * snr_linear * mean_nb).sqrt()
}

/// `(n_s E[h])² / (2 n_s E[h] + 4 n_b)` with `E[h] = 1`.
pub fn snr_from_counts(n_s: f64, n_b: f64) -> f64 {
    n_s * n_s / (2.0 * n_s + 4.0 * n_b)
}

/// SNR of a packet carrying `pilots` pilot and `data` data symbols:
/// `(p + d)/d · snr`.
pub fn effective_snr(snr: f64, pilots: u64, data: u64) -> Result<f64> {
    if data == 0 {
        return Err(Error::domain("data symbol count", 0.0));
    }
    Ok((pilots + data) as f64 / data as f64 * snr)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
