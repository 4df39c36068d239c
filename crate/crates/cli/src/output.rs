//! Output writing: atomic per-file writes, a common provenance header
//! (tool version and config hash, no timestamps so reruns are
//! byte-identical).

use bosegas_core::{Error, Result};
use std::path::Path;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Commented provenance header prepended to every text output.
pub fn header(config_sha256: &str) -> String {
    format!("# bosegas {VERSION}\n# config_sha256 = {config_sha256}\n")
}

/// TOML-style provenance preamble.
pub fn header_toml(config_sha256: &str) -> String {
    format!("version = \"{VERSION}\"\nconfig_sha256 = \"{config_sha256}\"\n\n")
}

/// Write atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path
        .parent()
        .ok_or_else(|| Error::Config(format!("output path {} has no parent", path.display())))?;
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| Error::Config(format!("cannot move output into place: {e}")))?;
    Ok(())
}
