//! The versioned `stats` output.
//!
//! JSON: `{ "schema_version", "config", "stats", "exact_rate" }`. Every stage
//! appears in `stats.stages`, zero or not, so runs are comparable field by
//! field. CSV: one header row and one data row, with the same fields
//! flattened (`stage_<name>` per stage).

use std::collections::BTreeMap;

use fibcode::channel::{SignPolicy, TrialStats};
use fibcode::correction::Stage;
use fibcode::Profile;
use serde::Serialize;

use crate::{SamplerArg, SignArg};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct StatsOptions {
    pub n: u32,
    pub errors: usize,
    pub trials: u64,
    pub seed: u64,
    pub bound: Option<u64>,
    pub profile: Profile,
    pub sampler: SamplerArg,
    pub sign: SignArg,
    pub nonnegative: bool,
}

#[derive(Debug, Serialize)]
pub struct StatsConfig {
    pub n: u32,
    pub errors: usize,
    pub trials: u64,
    pub seed: u64,
    /// The magnitude bound actually used.
    pub bound: u64,
    pub profile: Profile,
    pub sampler: &'static str,
    pub sign: SignPolicy,
    pub nonnegative: bool,
    pub rng: &'static str,
}

#[derive(Debug, Serialize)]
pub struct StatsReport {
    pub schema_version: u32,
    pub config: StatsConfig,
    pub stats: TrialStats,
    pub exact_rate: f64,
}

impl StatsReport {
    pub fn new(config: StatsConfig, mut stats: TrialStats) -> Self {
        for s in Stage::ALL {
            stats.stages.entry(s.name().to_string()).or_insert(0);
        }
        let exact_rate = stats.exact_rate();
        StatsReport { schema_version: SCHEMA_VERSION, config, stats, exact_rate }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let c = &self.config;
        let s = &self.stats;
        let mut row: BTreeMap<&str, String> = BTreeMap::new();
        let mut header = vec![
            "schema_version",
            "n",
            "errors",
            "trials",
            "seed",
            "bound",
            "profile",
            "sampler",
            "sign",
            "nonnegative",
            "detected",
            "corrected_exact",
            "corrected_wrong",
            "uncorrectable",
            "ambiguous",
            "false_clean",
        ];
        row.insert("schema_version", self.schema_version.to_string());
        row.insert("n", c.n.to_string());
        row.insert("errors", c.errors.to_string());
        row.insert("trials", s.trials.to_string());
        row.insert("seed", c.seed.to_string());
        row.insert("bound", c.bound.to_string());
        row.insert("profile", c.profile.to_string());
        row.insert("sampler", c.sampler.to_string());
        row.insert("sign", sign_name(c.sign).to_string());
        row.insert("nonnegative", c.nonnegative.to_string());
        row.insert("detected", s.detected.to_string());
        row.insert("corrected_exact", s.corrected_exact.to_string());
        row.insert("corrected_wrong", s.corrected_wrong.to_string());
        row.insert("uncorrectable", s.uncorrectable.to_string());
        row.insert("ambiguous", s.ambiguous.to_string());
        row.insert("false_clean", s.false_clean.to_string());
        let stage_cols: Vec<String> = Stage::ALL.iter().map(|st| format!("stage_{}", st.name())).collect();
        for (st, col) in Stage::ALL.iter().zip(&stage_cols) {
            header.push(col);
            row.insert(col, s.stages.get(st.name()).copied().unwrap_or(0).to_string());
        }
        header.push("exact_rate");
        row.insert("exact_rate", self.exact_rate.to_string());

        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&header)?;
        w.write_record(header.iter().map(|h| row[h].as_str()))?;
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub fn sign_policy(s: SignArg) -> SignPolicy {
    match s {
        SignArg::Both => SignPolicy::Both,
        SignArg::Positive => SignPolicy::Positive,
        SignArg::Negative => SignPolicy::Negative,
    }
}

fn sign_name(s: SignPolicy) -> &'static str {
    match s {
        SignPolicy::Both => "both",
        SignPolicy::Positive => "positive",
        SignPolicy::Negative => "negative",
    }
}
