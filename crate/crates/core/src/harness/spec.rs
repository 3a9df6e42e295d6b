use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, ChannelParams};
use crate::error::{Error, Result};
use crate::receivers::{Engine, ReceiverConfig, ReceiverKind};
use crate::signal::{CoherencePlan, NbModel};

/// Named channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelPreset {
    /// No fading, `h ≡ 1`.
    Static,
    Weak,
    Strong,
    WeakNoPointing,
    StrongNoPointing,
}

impl ChannelPreset {
    pub const ALL: [ChannelPreset; 5] = [
        ChannelPreset::Static,
        ChannelPreset::Weak,
        ChannelPreset::Strong,
        ChannelPreset::WeakNoPointing,
        ChannelPreset::StrongNoPointing,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ChannelPreset::Static => "static",
            ChannelPreset::Weak => "weak",
            ChannelPreset::Strong => "strong",
            ChannelPreset::WeakNoPointing => "weak_no_pointing",
            ChannelPreset::StrongNoPointing => "strong_no_pointing",
        }
    }

    pub fn model(&self) -> ChannelModel {
        match self {
            ChannelPreset::Static => ChannelModel::UNIT,
            ChannelPreset::Weak => ChannelModel::Turbulent(ChannelParams::WEAK),
            ChannelPreset::Strong => ChannelModel::Turbulent(ChannelParams::STRONG),
            ChannelPreset::WeakNoPointing => ChannelModel::Turbulent(ChannelParams::WEAK.without_pointing()),
            ChannelPreset::StrongNoPointing => ChannelModel::Turbulent(ChannelParams::STRONG.without_pointing()),
        }
    }
}

impl fmt::Display for ChannelPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ChannelPreset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<_> = ChannelPreset::ALL.iter().map(|p| p.name()).collect();
            Error::config("channel", format!("unknown channel `{s}`; expected one of {}", names.join(", ")))
        })
    }
}

/// A channel given by preset name or spelled out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelSpec {
    Preset(ChannelPreset),
    Custom(ChannelModel),
}

impl ChannelSpec {
    pub fn model(&self) -> ChannelModel {
        match self {
            ChannelSpec::Preset(p) => p.model(),
            ChannelSpec::Custom(m) => *m,
        }
    }
}

/// Whether receivers keep their state from one coherence block to the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiverState {
    /// One receiver runs through the whole segment.
    #[default]
    Continuous,
    /// A fresh receiver bootstraps at the start of every block, measuring
    /// steady-state performance within a coherence interval.
    PerBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarmupAccounting {
    /// Skip provisional decisions and, for continuous receivers, the first
    /// coherence block of every run segment.
    #[default]
    Exclude,
    Include,
}

/// One receiver line of an experiment; expands to one config per level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverEntry {
    pub kind: ReceiverKind,
    /// Memory lengths; falls back to the experiment-wide `levels`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engine: Option<Engine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumed_nb: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumed_ns: Option<f64>,
}

impl ReceiverEntry {
    pub fn new(kind: ReceiverKind) -> Self {
        ReceiverEntry {
            kind,
            levels: Vec::new(),
            engine: None,
            assumed_nb: None,
            assumed_ns: None,
        }
    }
}

impl FromStr for ReceiverEntry {
    type Err = Error;

    /// `kind[@engine]`, e.g. `glrt_seq` or `gmlsd_seq@msd`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, engine) = match s.split_once('@') {
            Some((k, "msd")) => (k, Some(Engine::Msd)),
            Some((k, "trellis")) => (k, Some(Engine::Trellis)),
            Some((_, e)) => return Err(Error::config("engine", format!("unknown engine `{e}`; expected msd or trellis"))),
            None => (s, None),
        };
        let mut entry = ReceiverEntry::new(kind.trim().parse()?);
        entry.engine = engine;
        Ok(entry)
    }
}

fn default_name() -> String {
    "custom".to_string()
}
fn default_l_c() -> usize {
    1000
}
fn default_min_errors() -> u64 {
    200
}
fn default_max_slots() -> u64 {
    50_000_000
}
fn default_seed() -> u64 {
    1
}
fn default_segment_slots() -> u64 {
    1 << 20
}
fn default_true() -> bool {
    true
}

/// Full description of a Monte-Carlo sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub channel: ChannelSpec,
    /// Coherence length in slots.
    #[serde(default = "default_l_c")]
    pub l_c: usize,
    pub nb_model: NbModel,
    /// Background level used to turn SNR into `n_s`; defaults to the mean of
    /// `nb_model`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_reference_nb: Option<f64>,
    #[serde(default)]
    pub receivers: Vec<ReceiverEntry>,
    pub snr_db: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<usize>,
    #[serde(default = "default_min_errors")]
    pub min_errors: u64,
    #[serde(default = "default_max_slots")]
    pub max_slots: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub warmup: WarmupAccounting,
    #[serde(default)]
    pub receiver_state: ReceiverState,
    /// Longest independent run segment; segments are the unit of parallelism
    /// inside one point.
    #[serde(default = "default_segment_slots")]
    pub segment_slots: u64,
    /// Whether to add genie-bound reference rows.
    #[serde(default = "default_true")]
    pub genie: bool,
}

impl ExperimentSpec {
    pub fn new(channel: ChannelSpec, nb_model: NbModel, snr_db: Vec<f64>) -> Self {
        ExperimentSpec {
            name: default_name(),
            description: None,
            channel,
            l_c: default_l_c(),
            nb_model,
            snr_reference_nb: None,
            receivers: Vec::new(),
            snr_db,
            levels: Vec::new(),
            min_errors: default_min_errors(),
            max_slots: default_max_slots(),
            seed: default_seed(),
            warmup: WarmupAccounting::Exclude,
            receiver_state: ReceiverState::Continuous,
            segment_slots: default_segment_slots(),
            genie: true,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            serde_json::from_str(text).map_err(|e| Error::config(json_field(&e), e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec is serializable")
    }

    pub fn channel_model(&self) -> ChannelModel {
        self.channel.model()
    }

    pub fn coherence(&self) -> CoherencePlan {
        CoherencePlan {
            l_c: self.l_c,
            nb_model: self.nb_model,
        }
    }

    pub fn nb_reference(&self) -> f64 {
        self.snr_reference_nb.unwrap_or_else(|| self.nb_model.mean())
    }

    /// One config per (receiver entry, level), in declaration order.
    pub fn receiver_configs(&self) -> Result<Vec<ReceiverConfig>> {
        let mut out = Vec::new();
        for (i, entry) in self.receivers.iter().enumerate() {
            let levels = if entry.levels.is_empty() { &self.levels } else { &entry.levels };
            if levels.is_empty() {
                return Err(Error::config(
                    format!("receivers[{i}].levels"),
                    "no memory lengths given for this receiver or the experiment",
                ));
            }
            for &l in levels {
                let mut cfg = ReceiverConfig::new(entry.kind, l);
                if let Some(engine) = entry.engine {
                    cfg.engine = engine;
                }
                cfg.assumed_nb = entry.assumed_nb;
                cfg.assumed_ns = entry.assumed_ns;
                cfg.validate().map_err(|e| match e {
                    Error::Config { field, message } => Error::config(format!("receivers[{i}].{field}"), message),
                    other => other,
                })?;
                out.push(cfg);
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_empty() {
            return Err(Error::config("snr_db", "SNR grid must not be empty"));
        }
        if let Some(bad) = self.snr_db.iter().find(|v| !v.is_finite()) {
            return Err(Error::config("snr_db", format!("non-finite SNR {bad}")));
        }
        if self.min_errors == 0 {
            return Err(Error::config("min_errors", "must be at least 1"));
        }
        if self.max_slots == 0 {
            return Err(Error::config("max_slots", "must be at least 1"));
        }
        if self.segment_slots == 0 {
            return Err(Error::config("segment_slots", "must be at least 1"));
        }
        if let Some(v) = self.snr_reference_nb {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config("snr_reference_nb", format!("must be nonnegative, got {v}")));
            }
        }
        self.coherence().validate()?;
        self.channel_model().validate().map_err(|e| Error::config("channel", e.to_string()))?;
        self.receiver_configs()?;
        Ok(())
    }
}

fn json_field(e: &serde_json::Error) -> String {
    // serde reports the offending key inside backticks for unknown or
    // missing fields.
    let msg = e.to_string();
    msg.split('`').nth(1).map(str::to_string).unwrap_or_else(|| "config".to_string())
}

static PRESETS_JSON: &str = include_str!("../../presets/presets.json");

fn preset_table() -> &'static BTreeMap<String, ExperimentSpec> {
    static TABLE: OnceLock<BTreeMap<String, ExperimentSpec>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let raw: BTreeMap<String, ExperimentSpec> = serde_json::from_str(PRESETS_JSON).expect("bundled presets parse");
        raw.into_iter()
            .map(|(name, mut spec)| {
                spec.name = name.clone();
                (name, spec)
            })
            .collect()
    })
}

pub fn preset_names() -> Vec<&'static str> {
    preset_table().keys().map(String::as_str).collect()
}

/// Bundled experiment reproducing one figure's parameterization. `fig5` is
/// shorthand for the weak-turbulence panel `fig5w`.
pub fn preset(name: &str) -> Result<ExperimentSpec> {
    let key = if name == "fig5" { "fig5w" } else { name };
    preset_table().get(key).cloned().ok_or_else(|| Error::UnknownPreset {
        name: name.to_string(),
        available: preset_names().join(", "),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_validate() {
        let names = preset_names();
        for want in ["fig3a", "fig3b", "fig3c", "fig4", "fig5w", "fig5s", "fig6", "fig7"] {
            assert!(names.contains(&want), "{want}");
        }
        for name in names {
            let spec = preset(name).unwrap();
            spec.validate().unwrap();
            assert_eq!(spec.name, name);
        }
    }

    #[test]
    fn fig3a_parameterization() {
        let spec = preset("fig3a").unwrap();
        assert_eq!(spec.channel, ChannelSpec::Preset(ChannelPreset::Weak));
        assert_eq!(spec.nb_model, NbModel::Constant(39.0));
        let labels: Vec<(String, usize)> =
            spec.receiver_configs().unwrap().iter().map(|c| (c.label(), c.window_l)).collect();
        assert_eq!(
            labels,
            vec![
                ("gmlsd_seq".to_string(), 1),
                ("gmlsd_seq".to_string(), 8),
                ("glrt_seq".to_string(), 2),
                ("glrt_seq".to_string(), 32)
            ]
        );
    }

    #[test]
    fn unknown_preset_lists_names() {
        let err = preset("fig99").unwrap_err().to_string();
        assert!(err.contains("fig3a") && err.contains("fig7"), "{err}");
        assert_eq!(preset("fig5").unwrap(), preset("fig5w").unwrap());
    }

    #[test]
    fn json_errors_name_the_field() {
        let err = ExperimentSpec::from_json(r#"{"channel":"weak","nb_model":"const:39","snr_db":[10],"bogus":1}"#)
            .unwrap_err();
        assert!(matches!(&err, Error::Config { field, .. } if field == "bogus"), "{err}");
        let err = ExperimentSpec::from_json(r#"{"channel":"weak","nb_model":"const:39","snr_db":[]}"#).unwrap_err();
        assert!(matches!(&err, Error::Config { field, .. } if field == "snr_db"), "{err}");
        let err = ExperimentSpec::from_json(
            r#"{"channel":"weak","nb_model":"const:39","snr_db":[1],"receivers":[{"kind":"glrt_seq","levels":[1]}]}"#,
        )
        .unwrap_err();
        assert!(matches!(&err, Error::Config { field, .. } if field == "receivers[0].window_l"), "{err}");
    }

    #[test]
    fn custom_channel_round_trip() {
        let text = r#"{"channel":{"kind":"fixed","gain":1.0},"nb_model":"uniform:10:100","snr_db":[10,12],
            "receivers":[{"kind":"ideal","levels":[1]}]}"#;
        let spec = ExperimentSpec::from_json(text).unwrap();
        assert_eq!(spec.channel_model(), ChannelModel::UNIT);
        assert_eq!(spec.nb_reference(), 55.0);
        let again = ExperimentSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn receiver_entry_parsing() {
        let e: ReceiverEntry = "gmlsd_seq@msd".parse().unwrap();
        assert_eq!((e.kind, e.engine), (ReceiverKind::GmlsdSeq, Some(Engine::Msd)));
        assert!("glrt_seq@fast".parse::<ReceiverEntry>().is_err());
    }
}
