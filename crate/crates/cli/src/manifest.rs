use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use leakscope::io::atomic_write;
use leakscope::Error;

use crate::config::RunConfig;

pub const MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Seeds {
    pub global: u64,
    pub search: u64,
    pub synth: u64,
    pub logistic: u64,
}

/// Written next to every command's outputs. Holds no timestamps, so reruns
/// with the same inputs produce the same bytes.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seeds: Seeds,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub config: &'a RunConfig,
}

pub fn digest_file(path: &Path) -> Result<InputDigest, Error> {
    let bytes = std::fs::read(path)?;
    Ok(InputDigest {
        path: path.display().to_string(),
        bytes: bytes.len() as u64,
        sha256: format!("{:x}", Sha256::digest(&bytes)),
    })
}

pub fn write_manifest(
    dir: &Path,
    command: &str,
    config: &RunConfig,
    inputs: &[&Path],
    mut outputs: Vec<String>,
) -> Result<(), Error> {
    outputs.sort();
    let manifest = RunManifest {
        tool: "leakscope",
        version: env!("CARGO_PKG_VERSION"),
        command,
        seeds: Seeds {
            global: config.seed,
            search: config.search.seed,
            synth: config.synth.seed,
            logistic: config.hyper.logistic.seed,
        },
        inputs: inputs.iter().map(|p| digest_file(p)).collect::<Result<_, _>>()?,
        outputs,
        config,
    };
    let mut body = serde_json::to_string_pretty(&manifest)?;
    body.push('\n');
    std::fs::create_dir_all(dir)?;
    atomic_write(dir.join(MANIFEST_FILE), body.as_bytes())?;
    Ok(())
}
