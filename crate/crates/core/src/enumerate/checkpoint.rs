//! Append-only checkpoint file: a header line with the search configuration,
//! then one JSON object per completed cell.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{SearchConfig, WorkCell};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct HeaderConfig {
    r_min: u32,
    r_max: u32,
    max_modulus: u64,
    min_modulus: u64,
    lcm_cap: u64,
    nz_prune: bool,
    divisor_prune: bool,
}

impl From<&SearchConfig> for HeaderConfig {
    fn from(cfg: &SearchConfig) -> Self {
        Self {
            r_min: cfg.r_min,
            r_max: cfg.r_max,
            max_modulus: cfg.max_modulus,
            min_modulus: cfg.min_modulus,
            lcm_cap: cfg.lcm_cap,
            nz_prune: cfg.enable_nz_prune,
            divisor_prune: cfg.divisor_prune,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    ecs_checkpoint: u32,
    config: HeaderConfig,
}

/// One completed cell: base moduli of every feasible profile, plus undecided ones.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRecord {
    pub r: u32,
    #[serde(rename = "M")]
    pub top: u64,
    pub profiles: Vec<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undecided: Vec<Vec<u64>>,
}

impl CellRecord {
    pub fn cell(&self) -> WorkCell {
        WorkCell {
            r: self.r,
            top: self.top,
        }
    }
}

pub struct Checkpoint {
    path: PathBuf,
    out: BufWriter<File>,
}

impl Checkpoint {
    /// Opens `path` for `cfg`, returning the cells already completed.
    ///
    /// A missing or empty file starts fresh. A header for a different configuration
    /// is refused. A torn final line (from an interrupted write) is discarded.
    pub fn open(path: &Path, cfg: &SearchConfig) -> Result<(Self, BTreeMap<WorkCell, CellRecord>)> {
        let fail = |reason: String| Error::Checkpoint {
            path: path.to_path_buf(),
            reason,
        };
        let wanted = HeaderConfig::from(cfg);
        let mut done = BTreeMap::new();
        let mut lines = Vec::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            lines = reader.lines().collect::<std::io::Result<Vec<_>>>()?;
        }
        lines.retain(|l| !l.trim().is_empty());
        if let Some(first) = lines.first() {
            let header: Header = serde_json::from_str(first)
                .map_err(|e| fail(format!("unreadable header: {e}")))?;
            if header.config != wanted {
                return Err(fail(format!(
                    "header {:?} does not match active config {:?}; refusing to resume",
                    header.config, wanted
                )));
            }
            let last = lines.len() - 1;
            for (i, line) in lines.iter().enumerate().skip(1) {
                match serde_json::from_str::<CellRecord>(line) {
                    Ok(rec) => {
                        if !cfg.cell_is_valid(&rec.cell()) {
                            return Err(fail(format!("cell ({}, {}) outside the config", rec.r, rec.top)));
                        }
                        done.insert(rec.cell(), rec);
                    }
                    Err(_) if i == last => {}
                    Err(e) => return Err(fail(format!("corrupt line {}: {e}", i + 1))),
                }
            }
        }
        // Rewrite header plus intact records so appends never follow a torn line.
        let mut out = BufWriter::new(File::create(path)?);
        let header = Header {
            ecs_checkpoint: 1,
            config: wanted,
        };
        writeln!(out, "{}", serde_json::to_string(&header).expect("serialisable"))?;
        for rec in done.values() {
            writeln!(out, "{}", serde_json::to_string(rec).expect("serialisable"))?;
        }
        out.flush()?;
        let file = OpenOptions::new().append(true).open(path)?;
        Ok((
            Self {
                path: path.to_path_buf(),
                out: BufWriter::new(file),
            },
            done,
        ))
    }

    pub fn append(&mut self, rec: &CellRecord) -> Result<()> {
        writeln!(self.out, "{}", serde_json::to_string(rec).expect("serialisable"))?;
        self.out.flush()?;
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}
