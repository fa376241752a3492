use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, EXIT_MISMATCH};
use crate::fit::FitArgs;
use crate::mc::McArgs;
use crate::output::{sibling, RunOutput};
use crate::scan::ScanArgs;

/// A command with every parameter resolved, including drawn seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", content = "parameters", rename_all = "lowercase")]
pub enum Job {
    Fit(FitArgs),
    Scan(ScanArgs),
    Mc(McArgs),
}

impl Job {
    pub fn execute(&self) -> CliResult<RunOutput> {
        match self {
            Job::Fit(a) => crate::fit::run(a),
            Job::Scan(a) => crate::scan::run(a),
            Job::Mc(a) => crate::mc::run(a),
        }
    }

    pub fn manifest_path(&self) -> PathBuf {
        match self {
            Job::Fit(a) => sibling(&a.out, ".manifest.json"),
            Job::Scan(a) => sibling(&a.out, ".manifest.json"),
            Job::Mc(a) => a.out.join("manifest.json"),
        }
    }

    /// Fixes any seed left to chance so the manifest can replay the run.
    fn pin_seeds(&mut self, output: &RunOutput) {
        if let (Job::Mc(a), Some(&seed)) = (self, output.seeds.first()) {
            a.seed = Some(seed);
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: PathBuf,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VersionInfo {
    pub package: String,
    pub rng: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    #[serde(flatten)]
    pub job: Job,
    pub argv: Vec<String>,
    pub seeds: Vec<u64>,
    pub version: VersionInfo,
    pub threads: usize,
    pub outputs: Vec<OutputRecord>,
    pub started_unix_seconds: f64,
    pub wall_clock_seconds: f64,
}

fn version() -> VersionInfo {
    VersionInfo {
        package: format!("spinthermo {}", env!("CARGO_PKG_VERSION")),
        rng: spinthermo::montecarlo::RNG_NAME.to_string(),
    }
}

/// Runs `job`, writes its outputs and the manifest beside them.
pub fn run_and_record(mut job: Job, threads: usize) -> CliResult<RunManifest> {
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0);
    let clock = Instant::now();
    let output = job.execute()?;
    output.write_all()?;
    job.pin_seeds(&output);
    let manifest = RunManifest {
        argv: std::env::args().collect(),
        seeds: output.seeds.clone(),
        version: version(),
        threads,
        outputs: output
            .files
            .iter()
            .map(|(path, bytes)| OutputRecord {
                path: path.clone(),
                bytes: bytes.len(),
            })
            .collect(),
        started_unix_seconds: started,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        job,
    };
    let path = manifest.job.manifest_path();
    std::fs::write(&path, serde_json::to_vec_pretty(&manifest)?)?;
    log::info!("manifest written to {}", path.display());
    Ok(manifest)
}

pub fn read(path: &Path) -> CliResult<RunManifest> {
    let text = std::fs::read(path).map_err(|e| {
        let mut err = CliError::from(e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    })?;
    Ok(serde_json::from_slice(&text)?)
}

/// Re-executes a recorded run in memory and compares every output byte for
/// byte with the files on disk. With `write`, the outputs are rewritten
/// instead of compared.
pub fn replay(path: &Path, write: bool) -> CliResult<Vec<PathBuf>> {
    let manifest = read(path)?;
    if manifest.version.package != version().package {
        log::warn!(
            "manifest was written by {}, replaying with {}",
            manifest.version.package,
            version().package
        );
    }
    let output = manifest.job.execute()?;
    if write {
        output.write_all()?;
        return Ok(Vec::new());
    }
    let mut differing = Vec::new();
    for (file, bytes) in &output.files {
        match std::fs::read(file) {
            Ok(disk) if &disk == bytes => {}
            _ => differing.push(file.clone()),
        }
    }
    let recorded: Vec<&PathBuf> = manifest.outputs.iter().map(|o| &o.path).collect();
    let produced: Vec<&PathBuf> = output.files.iter().map(|f| &f.0).collect();
    if recorded != produced {
        return Err(CliError {
            code: EXIT_MISMATCH,
            message: "replay produced a different set of output files".into(),
        });
    }
    Ok(differing)
}
