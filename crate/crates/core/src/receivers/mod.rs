//! The six detectors and the shared store/trellis machinery.
//!
//! Every receiver is a slot-by-slot state machine implementing [`Receiver`]:
//! counts go in strictly in slot order and decisions come out in the same
//! order, possibly delayed. Decisions made during cold start are flagged
//! provisional.

pub mod bootstrap;
pub mod dfb;
pub mod ideal;
pub mod metrics;
pub mod msd;
pub mod stats;
pub mod trellis;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::LinkState;

pub use bootstrap::bootstrap_warmup;
pub use dfb::{DfbReceiver, DfbRule};
pub use ideal::IdealReceiver;
pub use metrics::{
    asymptotic_decide, glrt_constrained_metric, glrt_dfb_psi, glrt_labeling_is_physical, glrt_metric, glrt_nr_nb_estimates, gmlsd_dfb_psi0, gmlsd_log_metric,
    ideal_decide, ideal_threshold, mlsd_log_metric, GainPrior,
};
pub use msd::{msd_block_decode, MsdReceiver, MsdScan};
pub use stats::{CountRing, DetectedStore, WindowStats};
pub use trellis::{
    forced_commit, merge_and_commit, trellis_step, SurvivorPair, TrellisDiagnostics, TrellisMetric,
    TrellisReceiver, ONGOING_CAPACITY,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub bit: u8,
    /// Made before the receiver had a filled store.
    pub provisional: bool,
}

impl Decision {
    pub fn firm(bit: u8) -> Self {
        Decision {
            bit,
            provisional: false,
        }
    }

    pub fn provisional(bit: u8) -> Self {
        Decision {
            bit,
            provisional: true,
        }
    }
}

pub trait Receiver: Send {
    /// Reveals the hidden link state of the coming coherence block. Only the
    /// genie-aided receiver looks at it.
    fn observe_link(&mut self, _state: &LinkState) {}

    /// Consumes the next slot count, appending any decisions now available.
    fn push(&mut self, count: u32, out: &mut Vec<Decision>);

    /// Emits decisions for every slot still pending.
    fn flush(&mut self, out: &mut Vec<Decision>);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiverKind {
    Ideal,
    Mlsd,
    GmlsdSeq,
    GlrtSeq,
    GlrtDfb,
    GmlsdDfb,
}

impl ReceiverKind {
    pub const ALL: [ReceiverKind; 6] = [
        ReceiverKind::Ideal,
        ReceiverKind::Mlsd,
        ReceiverKind::GmlsdSeq,
        ReceiverKind::GlrtSeq,
        ReceiverKind::GlrtDfb,
        ReceiverKind::GmlsdDfb,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ReceiverKind::Ideal => "ideal",
            ReceiverKind::Mlsd => "mlsd",
            ReceiverKind::GmlsdSeq => "gmlsd_seq",
            ReceiverKind::GlrtSeq => "glrt_seq",
            ReceiverKind::GlrtDfb => "glrt_dfb",
            ReceiverKind::GmlsdDfb => "gmlsd_dfb",
        }
    }

    /// Whether the receiver is told the background level.
    pub fn needs_nb(&self) -> bool {
        matches!(
            self,
            ReceiverKind::Ideal | ReceiverKind::Mlsd | ReceiverKind::GmlsdSeq | ReceiverKind::GmlsdDfb
        )
    }
}

impl fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReceiverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ReceiverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config("receiver", format!("unknown receiver `{s}`")))
    }
}

/// Search engine of a sequence receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Independent length-`L` blocks decoded by count sorting.
    Msd,
    #[default]
    Trellis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverConfig {
    pub kind: ReceiverKind,
    pub window_l: usize,
    /// Background level given to the receivers that assume it; defaults to
    /// the run's reference level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumed_nb: Option<f64>,
    /// Signal level given to the ideal and MLSD receivers; defaults to the
    /// run's `n_s`. Setting it (with `assumed_nb`) freezes the ideal receiver's
    /// threshold instead of following the true link state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumed_ns: Option<f64>,
    #[serde(default)]
    pub engine: Engine,
}

/// Run-level quantities a receiver may be built against.
#[derive(Debug, Clone)]
pub struct LinkContext {
    pub n_s: f64,
    pub nb_reference: f64,
    pub prior: GainPrior,
}

impl ReceiverConfig {
    pub fn new(kind: ReceiverKind, window_l: usize) -> Self {
        let engine = if kind == ReceiverKind::Mlsd { Engine::Msd } else { Engine::Trellis };
        ReceiverConfig {
            kind,
            window_l,
            assumed_nb: None,
            assumed_ns: None,
            engine,
        }
    }

    pub fn with_engine(mut self, engine: Engine) -> Self {
        self.engine = engine;
        self
    }

    pub fn with_assumed_nb(mut self, n_b: f64) -> Self {
        self.assumed_nb = Some(n_b);
        self
    }

    /// Identifier used in result tables, e.g. `glrt_seq` or `gmlsd_seq_msd`.
    pub fn label(&self) -> String {
        match (self.kind, self.engine) {
            (ReceiverKind::GmlsdSeq, Engine::Msd) => "gmlsd_seq_msd".to_string(),
            (kind, _) => kind.name().to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_l == 0 {
            return Err(Error::config("window_l", "must be at least 1"));
        }
        if self.kind == ReceiverKind::GlrtSeq && self.window_l < 2 {
            return Err(Error::config("window_l", "GLRT sequence receiver needs L >= 2"));
        }
        for (field, v) in [("assumed_nb", self.assumed_nb), ("assumed_ns", self.assumed_ns)] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::config(field, format!("must be a finite nonnegative number, got {v}")));
                }
            }
        }
        match (self.kind, self.engine) {
            (ReceiverKind::Mlsd, Engine::Trellis) => {
                Err(Error::config("engine", "the MLSD receiver runs only in msd block mode"))
            }
            (ReceiverKind::GlrtSeq | ReceiverKind::GlrtDfb | ReceiverKind::GmlsdDfb, Engine::Msd) => Err(
                Error::config("engine", format!("{} does not have an msd block mode", self.kind)),
            ),
            _ => Ok(()),
        }
    }

    pub fn build(&self, ctx: &LinkContext) -> Result<Box<dyn Receiver>> {
        self.validate()?;
        let l = self.window_l;
        let n_b = self.assumed_nb.unwrap_or(ctx.nb_reference);
        let n_s = self.assumed_ns.unwrap_or(ctx.n_s);
        if matches!(self.kind, ReceiverKind::Mlsd | ReceiverKind::GmlsdSeq | ReceiverKind::GmlsdDfb) && !(n_b > 0.0) {
            return Err(Error::config("assumed_nb", format!("{} needs a positive background level", self.kind)));
        }
        Ok(match self.kind {
            ReceiverKind::Ideal => match (self.assumed_ns, self.assumed_nb) {
                (Some(ns), Some(nb)) => Box::new(IdealReceiver::fixed(ns, nb)),
                _ => Box::new(IdealReceiver::genie()),
            },
            ReceiverKind::Mlsd => {
                let prior = ctx.prior.clone();
                Box::new(MsdReceiver::new(
                    l,
                    MsdScan::Largest,
                    Box::new(move |s, len| mlsd_log_metric(s, len, n_s, n_b, &prior)),
                ))
            }
            ReceiverKind::GmlsdSeq => match self.engine {
                Engine::Msd => Box::new(MsdReceiver::new(
                    l,
                    MsdScan::BothEnds,
                    Box::new(move |s, _| Ok(gmlsd_log_metric(s, n_b))),
                )),
                Engine::Trellis => Box::new(TrellisReceiver::gmlsd(l, n_b)),
            },
            ReceiverKind::GlrtSeq => Box::new(TrellisReceiver::glrt(l)),
            ReceiverKind::GlrtDfb => Box::new(DfbReceiver::glrt(l)),
            ReceiverKind::GmlsdDfb => Box::new(DfbReceiver::gmlsd(l, n_b)),
        })
    }
}
