use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{BepPoint, ExperimentSpec, PointFailure, SweepResult};
use crate::error::{Error, Result};

/// Writes the result table with the fixed column order
/// `receiver,L,snr_db,errors,slots,bep,ci_lo,ci_hi,method`.
pub fn write_csv<W: Write>(points: &[BepPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<BepPoint>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|row| row.map_err(csv_error))
        .collect()
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Everything needed to reproduce a result table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub spec: ExperimentSpec,
    pub rows: usize,
    pub censored: Vec<BepPoint>,
    pub failures: Vec<PointFailure>,
}

impl RunManifest {
    pub fn new(spec: &ExperimentSpec, result: &SweepResult) -> Self {
        RunManifest {
            tool: "fsolink".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: spec.seed,
            spec: spec.clone(),
            rows: result.points.len(),
            censored: result.censored.clone(),
            failures: result.failures.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest is serializable")
    }
}
