//! Output writers. Every file starts with the tool version, the config
//! digest and the master seed.

use std::io::Write;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::estimators::StudyRow;

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Column order of the study/estimate CSV. New columns are appended only.
pub const STUDY_COLUMNS: [&str; 11] = [
    "method", "T", "epsilon", "log_prob", "stderr", "normalized", "I_f", "psi_exp", "replicas", "ess", "seed",
];

/// SHA-256 of the canonical JSON form (sorted keys, no whitespace).
pub fn config_digest<T: Serialize + ?Sized>(config: &T) -> Result<String> {
    let value = serde_json::to_value(config)?;
    let bytes = serde_json::to_vec(&value)?;
    let hash = Sha256::digest(&bytes);
    Ok(hash.iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub tool_version: String,
    pub config_digest: String,
    pub master_seed: u64,
}

impl Provenance {
    pub fn new(config_digest: String, master_seed: u64) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_string(),
            config_digest,
            master_seed,
        }
    }

    pub fn write_csv_header<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "# tool_version: {}", self.tool_version)?;
        writeln!(out, "# config_digest: {}", self.config_digest)?;
        writeln!(out, "# master_seed: {}", self.master_seed)?;
        Ok(())
    }
}

pub fn write_study_csv<W: Write>(out: &mut W, provenance: &Provenance, rows: &[StudyRow]) -> Result<()> {
    provenance.write_csv_header(out)?;
    writeln!(out, "{}", STUDY_COLUMNS.join(","))?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.method.as_str(),
            r.horizon,
            r.epsilon,
            r.log_prob,
            r.stderr,
            r.normalized,
            r.rate_functional,
            r.psi_exponent,
            r.replicas,
            r.ess,
            r.seed
        )?;
    }
    Ok(())
}

/// Generic CSV table with the provenance header.
pub fn write_table_csv<W: Write>(
    out: &mut W,
    provenance: &Provenance,
    columns: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    provenance.write_csv_header(out)?;
    writeln!(out, "{}", columns.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    #[serde(flatten)]
    provenance: &'a Provenance,
    data: &'a T,
}

pub fn write_json<W: Write, T: Serialize>(out: &mut W, provenance: &Provenance, data: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, &Envelope { provenance, data })?;
    writeln!(out)?;
    Ok(())
}
