//! File artifacts: CSV curves, JSON reports, run manifests, and the debug
//! matrix dump. Rendering is string-based so byte-identical output across
//! runs and thread counts is testable without touching the filesystem.

use crate::engine::{BoundData, ChannelStatsData};
use crate::CliError;
use bicmb_core::analysis::{BerCurve, BerPoint};
use bicmb_core::CMat;
use serde::Serialize;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

/// FNV-1a 64-bit hash; stable fingerprint for configs and inputs.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x00000100000001B3);
    }
    h
}

/// BER sweep CSV: `snr_db,user,ber,bit_errors,bits,frames,converged`.
pub fn render_ber_csv(curves: &[BerCurve]) -> String {
    let mut out = String::from("snr_db,user,ber,bit_errors,bits,frames,converged\n");
    let points = curves.first().map_or(0, |c| c.points.len());
    for i in 0..points {
        for curve in curves {
            let p = &curve.points[i];
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                p.snr_db,
                curve.user,
                p.ber(),
                p.bit_errors,
                p.bits,
                p.frames,
                p.converged
            );
        }
    }
    out
}

/// Parses a sweep CSV back into per-user curves (the `slope` subcommand).
pub fn parse_ber_csv(text: &str) -> Result<Vec<BerCurve>, CliError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header.trim() != "snr_db,user,ber,bit_errors,bits,frames,converged" {
        return Err(CliError::Config(crate::ConfigError::Invalid(format!(
            "unrecognized CSV header: {header:?}"
        ))));
    }
    let bad = |line: &str, what: &str| {
        CliError::Config(crate::ConfigError::Invalid(format!(
            "bad CSV line ({what}): {line:?}"
        )))
    };
    let mut curves: Vec<BerCurve> = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad(line, "field count"));
        }
        let snr_db: f64 = f[0].parse().map_err(|_| bad(line, "snr_db"))?;
        let user: usize = f[1].parse().map_err(|_| bad(line, "user"))?;
        let bit_errors: u64 = f[3].parse().map_err(|_| bad(line, "bit_errors"))?;
        let bits: u64 = f[4].parse().map_err(|_| bad(line, "bits"))?;
        let frames: u64 = f[5].parse().map_err(|_| bad(line, "frames"))?;
        let converged: bool = f[6].parse().map_err(|_| bad(line, "converged"))?;
        while curves.len() <= user {
            let u = curves.len();
            curves.push(BerCurve {
                user: u,
                points: Vec::new(),
                master_seed: 0,
                config_fingerprint: String::new(),
            });
        }
        curves[user].points.push(BerPoint {
            snr_db,
            bit_errors,
            bits,
            frames,
            converged,
        });
    }
    if curves.iter().any(|c| c.points.is_empty()) {
        return Err(CliError::Config(crate::ConfigError::Invalid(
            "CSV has a user gap".into(),
        )));
    }
    Ok(curves)
}

/// Bound CSV sharing the sweep's grid: `snr_db,user,bound`.
pub fn render_bound_csv(data: &BoundData) -> String {
    let mut out = String::from("snr_db,user,bound\n");
    for (i, &snr_db) in data.snr_db.iter().enumerate() {
        for (user, curve) in data.per_user.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", snr_db, user, curve[i]);
        }
    }
    out
}

/// Singular-value CSV: `user,realization,index,sigma`.
pub fn render_stats_csv(data: &ChannelStatsData) -> String {
    let mut out = String::from("user,realization,index,sigma\n");
    for r in &data.realizations {
        for (i, s) in r.singular_values.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{}", r.user, r.realization, i, s);
        }
    }
    out
}

/// Debug dump of a complex matrix: header `rows cols`, then one row per
/// line with re/im interleaved, row-major. Not a bit-exact interchange
/// format; meant for eyeballing and quick plotting.
pub fn render_matrix_dump(m: &CMat) -> String {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let mut first = true;
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            if !first {
                out.push(' ');
            }
            let _ = write!(out, "{} {}", z.re, z.im);
            first = false;
        }
        out.push('\n');
    }
    out
}

/// Run provenance written next to every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub fingerprint: String,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub config: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, fingerprint: &str, seed: u64, threads: usize) -> Manifest {
        Manifest {
            command: command.to_string(),
            version: format!("bicmb {}", env!("CARGO_PKG_VERSION")),
            fingerprint: fingerprint.to_string(),
            seed,
            threads,
            wall_time_s: 0.0,
            outputs: Vec::new(),
            config: serde_json::Value::Null,
        }
    }
}

/// A run directory keyed by the config fingerprint.
#[derive(Debug)]
pub struct RunDir {
    pub path: PathBuf,
}

impl RunDir {
    pub fn create(out_root: &Path, command: &str, fingerprint: &str) -> Result<RunDir, CliError> {
        let path = out_root.join(format!("{command}-{fingerprint}"));
        std::fs::create_dir_all(&path).map_err(CliError::io(path.display().to_string()))?;
        Ok(RunDir { path })
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.path.join(name);
        let mut f =
            std::fs::File::create(&path).map_err(CliError::io(path.display().to_string()))?;
        f.write_all(contents.as_bytes())
            .map_err(CliError::io(path.display().to_string()))?;
        Ok(path)
    }

    pub fn write_manifest(&self, manifest: &Manifest) -> Result<PathBuf, CliError> {
        let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
        self.write("manifest.json", &text)
    }
}
