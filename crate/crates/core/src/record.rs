//! Versioned JSON envelope for command results.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema: u32,
    pub command: String,
    pub options: Value,
    pub payload: Value,
    pub version: String,
    /// Seconds since the Unix epoch; omitted unless asked for, so that
    /// identical runs give identical bytes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl RunRecord {
    pub fn new(command: &str, options: impl Serialize, payload: impl Serialize) -> Result<Self> {
        let enc = |v: serde_json::Result<Value>| v.map_err(|e| Error::InvalidInput(e.to_string()));
        Ok(Self {
            schema: SCHEMA,
            command: command.to_string(),
            options: enc(serde_json::to_value(options))?,
            payload: enc(serde_json::to_value(payload))?,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: None,
        })
    }

    pub fn with_timestamp(mut self) -> Self {
        self.timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
        self
    }

    /// Pretty JSON; floats use the shortest representation that parses back
    /// to the same value, and non-finite values become null.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("a JSON value always serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: RunRecord =
            serde_json::from_str(text).map_err(|e| Error::Parse {
                line: e.line(),
                column: e.column(),
                msg: e.to_string(),
            })?;
        if rec.schema != SCHEMA {
            return Err(Error::InvalidInput(format!("unsupported schema {}", rec.schema)));
        }
        Ok(rec)
    }
}
