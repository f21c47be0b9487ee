//! Machine-readable run reports.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::costmod::CostReport;
use crate::error::Result;
use crate::gqir::GateTally;

/// Non-fatal conditions raised while processing an image.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// Input was zero-padded to a power-of-two square.
    Padded {
        width: usize,
        height: usize,
        side: usize,
    },
    /// Recovered pixels whose fixed-point sum left `[0, 2^q)`.
    Wraparound { locations: usize },
    /// Pixels clamped into range for display.
    Clamped { pixels: usize },
    /// Dequantized coefficients too wide for the IDCT multiplier operand.
    OperandTruncated { locations: usize },
    /// Running accumulator exceeded its register width.
    AccumulatorOverflow { locations: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct RaisedWarning {
    /// What raised it, usually an input path.
    pub source: String,
    #[serde(flatten)]
    pub warning: Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything a command reports. Timing lives apart from the rest so that
/// two runs on the same inputs can be compared field by field.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ReportBundle {
    pub command: String,
    pub args: BTreeMap<String, String>,
    pub inputs: Vec<InputDigest>,
    pub costs: Vec<CostReport>,
    pub tallies: BTreeMap<String, GateTally>,
    pub psnr: BTreeMap<String, f64>,
    pub values: BTreeMap<String, serde_json::Value>,
    pub warnings: Vec<RaisedWarning>,
    pub timing_seconds: BTreeMap<String, f64>,
}

impl ReportBundle {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            ..Self::default()
        }
    }

    pub fn arg(&mut self, key: &str, value: impl ToString) {
        self.args.insert(key.into(), value.to_string());
    }

    /// Records an input file's digest.
    pub fn input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    /// Adds a warning unless the same one from the same source is present.
    pub fn warn(&mut self, source: impl Into<String>, warning: Warning) {
        let w = RaisedWarning {
            source: source.into(),
            warning,
        };
        if !self.warnings.contains(&w) {
            self.warnings.push(w);
        }
    }

    pub fn value(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.values.insert(key.into(), v);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write(&self, w: impl io::Write) -> Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(io::Error::from)?;
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
