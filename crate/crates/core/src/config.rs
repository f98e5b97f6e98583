//! Scenario files.
//!
//! A scenario file is TOML whose keys mirror [`Scenario`] field by field.
//! Scalars sit at the top level, entity lists are repeated tables:
//!
//! ```toml
//! carrier_freq = 28e9
//! bandwidth = 10e6
//! bs_position = [0.0, 20.0, 10.0]
//! bs_antennas = 16
//! ue_antennas = 4
//! tx_power = 30.0
//! vpl = 40.0
//!
//! [ue]
//! position = [150.0, 0.0, 1.5]
//! velocity = [30.0, 0.0, 0.0]
//!
//! [[ris]]
//! position = [198.4, -5.0, 5.0]
//! n_elements = 200
//! ```
//!
//! Unknown keys are rejected.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scenario::Scenario;

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parse and validate scenario text.
pub fn parse_config(text: &str) -> Result<Scenario> {
    let scenario: Scenario = toml::from_str(text).map_err(|e| Error::Parse {
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
        message: e.message().trim().to_string(),
    })?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_config(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

/// Scenario as TOML text that [`parse_config`] reads back unchanged.
pub fn to_config_text(scenario: &Scenario) -> Result<String> {
    toml::to_string(scenario).map_err(|e| Error::Config(e.to_string()))
}

/// Hex sha256 of the scenario's canonical JSON form.
pub fn scenario_hash(scenario: &Scenario) -> String {
    let json = serde_json::to_vec(scenario).expect("scenario serializes");
    hex::encode(Sha256::digest(&json))
}
