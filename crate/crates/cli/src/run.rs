use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stconvex::report::{CheckReport, Verdict, SCHEMA_VERSION};
use stconvex::sampling::derive_seed;

use crate::checks::execute;
use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Obstructed,
    HypothesisFailed,
    /// The check raised a numerical error; its report records it.
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub index: usize,
    pub kind: String,
    pub check_id: String,
    pub chart: String,
    pub seed: u64,
    pub status: CheckStatus,
    pub report: String,
    pub series: Vec<String>,
    pub wall_time_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema_version: u32,
    pub artifact_version: String,
    pub config_hash: String,
    pub checks: Vec<ManifestEntry>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn any_failure(&self) -> bool {
        self.checks.iter().any(|c| c.status == CheckStatus::Fail)
    }

    pub fn any_error(&self) -> bool {
        self.checks.iter().any(|c| c.status == CheckStatus::Error)
    }

    /// 0 all pass, 1 some check failed, 3 some check hit a numerical error.
    pub fn exit_code(&self) -> i32 {
        if self.any_error() {
            3
        } else if self.any_failure() {
            1
        } else {
            0
        }
    }
}

pub fn config_hash(config: &RunConfig) -> String {
    let digest = Sha256::digest(config.canonical_json().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn status_of(report: &CheckReport) -> CheckStatus {
    match report.verdict {
        Verdict::Pass => CheckStatus::Pass,
        Verdict::Fail => CheckStatus::Fail,
        Verdict::Obstructed => CheckStatus::Obstructed,
        Verdict::HypothesisFailed { .. } => CheckStatus::HypothesisFailed,
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Executes every check in declaration order and writes
/// `NN-<check_id>.json`, one CSV per series and `manifest.json` into
/// `out_dir`. Configuration problems abort before anything runs; numerical
/// errors are captured into the check's report.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<(RunManifest, Vec<CheckReport>), CliError> {
    let catalog = config.catalog()?;
    config.validate(&catalog)?;
    fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config_hash(config),
        checks: Vec::new(),
        outputs: Vec::new(),
    };
    let mut reports = Vec::new();
    for (index, check) in config.checks.iter().enumerate() {
        let seed = check.seed().unwrap_or_else(|| derive_seed(config.seed, index as u64));
        let started = Instant::now();
        let (report, status) = match execute(check, &catalog, seed) {
            Ok(r) => {
                let s = status_of(&r);
                (r, s)
            }
            Err(e) => {
                let mut r = CheckReport::new(check.kind(), check.chart(), None, vec![], 0.0);
                r.notes.push(format!("error: {e}"));
                r.set_verdict(Verdict::Fail);
                (r, CheckStatus::Error)
            }
        };
        let wall_time_ms = started.elapsed().as_millis() as u64;
        let stem = format!("{index:02}-{}", report.check_id);
        let report_name = format!("{stem}.json");
        write(&out_dir.join(&report_name), &report.to_json())?;
        let mut series_names = Vec::new();
        for s in &report.series {
            let name = format!("{stem}-{}.csv", s.name);
            write(&out_dir.join(&name), &s.to_csv())?;
            series_names.push(name);
        }
        manifest.outputs.push(report_name.clone());
        manifest.outputs.extend(series_names.iter().cloned());
        manifest.checks.push(ManifestEntry {
            index,
            kind: check.kind().to_string(),
            check_id: report.check_id.clone(),
            chart: check.chart().to_string(),
            seed,
            status,
            report: report_name,
            series: series_names,
            wall_time_ms,
        });
        reports.push(report);
    }
    manifest.outputs.push("manifest.json".into());
    let text = serde_json::to_string_pretty(&manifest).expect("manifests serialize");
    write(&out_dir.join("manifest.json"), &text)?;
    Ok((manifest, reports))
}

/// Output directory: explicit argument, then `STCONVEX_OUTPUT_DIR`, then
/// the config's `output_dir`, then `stconvex-out`.
pub fn resolve_output_dir(explicit: Option<PathBuf>, config: &RunConfig) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("stconvex-out"))
}

pub const OUTPUT_DIR_ENV: &str = "STCONVEX_OUTPUT_DIR";
