//! Atomic file output and trajectory CSV formatting.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use ipocp::OcpTrajectory;

use crate::error::CliError;

/// Writes `contents` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let err = |source| CliError::Write { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(contents).map_err(err)?;
    tmp.as_file().sync_all().map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}

/// Header and one row per mesh node, every value with 17 significant digits.
pub fn trajectory_csv(traj: &OcpTrajectory) -> String {
    let first = |v: &[Vec<f64>]| v.first().map_or(0, Vec::len);
    let (n, m) = (first(&traj.x), first(&traj.u));
    let (ng, nc) = (first(&traj.lambda_g), first(&traj.lambda_c));
    let mut cols = vec!["t".to_string()];
    for (prefix, count) in [("x", n), ("p", n), ("u", m), ("lg", ng), ("lc", nc)] {
        cols.extend((1..=count).map(|i| format!("{prefix}{i}")));
    }
    let mut out = cols.join(",");
    out.push('\n');
    for k in 0..traj.len() {
        let row = std::iter::once(&traj.t[k])
            .chain(&traj.x[k])
            .chain(&traj.p[k])
            .chain(&traj.u[k])
            .chain(&traj.lambda_g[k])
            .chain(&traj.lambda_c[k]);
        let mut sep = "";
        for v in row {
            let _ = write!(out, "{sep}{v:.16e}");
            sep = ",";
        }
        out.push('\n');
    }
    out
}
