//! TOML configuration files.
//!
//! A config names the scenario (mode, geometry, fading profile), the code
//! and modulation, and the sweep parameters. Everything except the antenna
//! counts and stream count has a default, so a minimal single-user file is
//! just a `mode`, a `[geometry]` table, and nothing else. `resolved()`
//! returns the fully-populated equivalent, which serializes back to TOML
//! losslessly for manifests and reproduction.

use bicmb_core::channel::{FadingProfile, Mode, SystemGeometry};
use bicmb_core::codec::CodeSpec;
use bicmb_core::modulation::ModulationSpec;
use bicmb_core::sim::{CodingMode, SimConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config error: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] bicmb_core::Error),
}

fn default_seed() -> u64 {
    1
}

fn default_d_lambda() -> f64 {
    0.5
}

fn default_one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    /// Transmit RAU count (the multi-user M).
    #[serde(default = "default_one")]
    pub m_t: usize,
    /// Receive RAU count (single-user only; one per user otherwise).
    #[serde(default = "default_one")]
    pub m_r: usize,
    /// Antennas per transmit RAU.
    pub n_t: usize,
    /// Antennas per receive RAU.
    pub n_r: usize,
    /// Users served (multi-user mode).
    #[serde(default = "default_one")]
    pub k: usize,
    /// Streams per receiver.
    pub n_s: usize,
    /// Transmit RF chains; defaults to twice the transmitted streams.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_t_rf: Option<usize>,
    /// Receive RF chains; defaults to twice the streams per receiver.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_r_rf: Option<usize>,
    /// ULA spacing in wavelengths.
    #[serde(default = "default_d_lambda")]
    pub d_lambda: f64,
}

/// A per-RAU-pair quantity: one value for all pairs, or a full matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrMatrix<T> {
    Scalar(T),
    Matrix(Vec<Vec<T>>),
}

impl<T: Copy> ScalarOrMatrix<T> {
    fn expand(&self, rows: usize, cols: usize, key: &str) -> Result<Vec<Vec<T>>, ConfigError> {
        match self {
            ScalarOrMatrix::Scalar(v) => Ok(vec![vec![*v; cols]; rows]),
            ScalarOrMatrix::Matrix(m) => {
                if m.len() != rows || m.iter().any(|r| r.len() != cols) {
                    return Err(ConfigError::Invalid(format!(
                        "profile.{key} must be {rows}x{cols} for this geometry"
                    )));
                }
                Ok(m.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    /// Paths per RAU pair.
    #[serde(default = "default_l")]
    pub l: ScalarOrMatrix<u32>,
    /// Large-scale coefficients in dB (-inf zeroes a block).
    #[serde(default = "default_beta")]
    pub beta_db: ScalarOrMatrix<f64>,
}

fn default_l() -> ScalarOrMatrix<u32> {
    ScalarOrMatrix::Scalar(2)
}

fn default_beta() -> ScalarOrMatrix<f64> {
    ScalarOrMatrix::Scalar(-20.0)
}

impl Default for ProfileSection {
    fn default() -> Self {
        ProfileSection {
            l: default_l(),
            beta_db: default_beta(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSection {
    /// Feedforward generators written in the conventional digit-octal form
    /// (133 means octal 133).
    #[serde(default = "default_generators")]
    pub generators_octal: Vec<u32>,
    #[serde(default = "default_constraint")]
    pub constraint_length: usize,
}

fn default_generators() -> Vec<u32> {
    vec![133, 171]
}

fn default_constraint() -> usize {
    7
}

impl Default for CodeSection {
    fn default() -> Self {
        CodeSection {
            generators_octal: default_generators(),
            constraint_length: default_constraint(),
        }
    }
}

/// 133 (digits) -> 0o133. Rejects digits above 7.
fn digit_octal(n: u32) -> Result<u32, ConfigError> {
    let s = n.to_string();
    u32::from_str_radix(&s, 8).map_err(|_| {
        ConfigError::Invalid(format!(
            "code.generators_octal entry {n} has non-octal digits"
        ))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SnrSpec {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl SnrSpec {
    pub fn expand(&self) -> Result<Vec<f64>, ConfigError> {
        match self {
            SnrSpec::List(v) => Ok(v.clone()),
            SnrSpec::Range { start, stop, step } => {
                if step.is_nan() || *step <= 0.0 || stop < start {
                    return Err(ConfigError::Invalid(format!(
                        "sim.snr_db range needs step > 0 and stop >= start \
                         (got start = {start}, stop = {stop}, step = {step})"
                    )));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                Ok((0..count).map(|i| start + i as f64 * step).collect())
            }
        }
    }

    /// Parses the CLI form `a:b:step`.
    pub fn parse_cli(text: &str) -> Result<SnrSpec, ConfigError> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(ConfigError::Invalid(format!(
                "--snr expects start:stop:step, got {text:?}"
            )));
        }
        let nums: Result<Vec<f64>, _> = parts.iter().map(|p| p.parse::<f64>()).collect();
        let nums = nums.map_err(|e| ConfigError::Invalid(format!("--snr: {e}")))?;
        Ok(SnrSpec::Range {
            start: nums[0],
            stop: nums[1],
            step: nums[2],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_snr")]
    pub snr_db: SnrSpec,
    #[serde(default = "default_max_frames")]
    pub max_frames: u64,
    #[serde(default = "default_target")]
    pub target_bit_errors: u64,
    #[serde(default = "default_info_bits")]
    pub info_bits_per_frame: usize,
}

fn default_snr() -> SnrSpec {
    SnrSpec::Range {
        start: 0.0,
        stop: 40.0,
        step: 5.0,
    }
}

fn default_max_frames() -> u64 {
    100_000
}

fn default_target() -> u64 {
    100
}

fn default_info_bits() -> usize {
    120
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            snr_db: default_snr(),
            max_frames: default_max_frames(),
            target_bit_errors: default_target(),
            info_bits_per_frame: default_info_bits(),
        }
    }
}

/// The on-disk configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub mode: Mode,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub coding: CodingMode,
    #[serde(default = "default_modulation")]
    pub modulation: ModulationSpec,
    pub geometry: GeometrySection,
    #[serde(default)]
    pub profile: ProfileSection,
    #[serde(default)]
    pub code: CodeSection,
    #[serde(default)]
    pub sim: SimSection,
}

fn default_modulation() -> ModulationSpec {
    ModulationSpec::Bpsk
}

impl ConfigFile {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_str(&text)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Expands defaults into a validated simulator configuration.
    pub fn resolve(&self) -> Result<SimConfig, ConfigError> {
        let g = &self.geometry;
        let geometry = match self.mode {
            Mode::SingleUser => {
                if g.k != 1 {
                    return Err(ConfigError::Invalid(format!(
                        "geometry.k = {} is not valid in single-user mode",
                        g.k
                    )));
                }
                let mut geo = SystemGeometry::single_user(g.m_t, g.m_r, g.n_t, g.n_r, g.n_s);
                geo.n_t_rf = g.n_t_rf.unwrap_or(geo.n_t_rf);
                geo.n_r_rf = g.n_r_rf.unwrap_or(geo.n_r_rf);
                geo.d_lambda = g.d_lambda;
                geo
            }
            Mode::MultiUser => {
                if g.m_r != 1 {
                    return Err(ConfigError::Invalid(format!(
                        "geometry.m_r = {} is not valid in multi-user mode (one RAU per user)",
                        g.m_r
                    )));
                }
                let mut geo = SystemGeometry::multi_user(g.m_t, g.k, g.n_t, g.n_r, g.n_s);
                geo.n_t_rf = g.n_t_rf.unwrap_or(geo.n_t_rf);
                geo.n_r_rf = g.n_r_rf.unwrap_or(geo.n_r_rf);
                geo.d_lambda = g.d_lambda;
                geo
            }
        };
        let rows = geometry.profile_rows();
        let cols = geometry.profile_cols();
        let profile = FadingProfile::new(
            self.profile.l.expand(rows, cols, "l")?,
            self.profile.beta_db.expand(rows, cols, "beta_db")?,
        )?;
        let generators: Result<Vec<u32>, ConfigError> = self
            .code
            .generators_octal
            .iter()
            .map(|&n| digit_octal(n))
            .collect();
        let code = CodeSpec::new(&generators?, self.code.constraint_length)?;
        let sim = SimConfig {
            geometry,
            profile,
            code,
            modulation: self.modulation,
            coding: self.coding,
            snr_db: self.sim.snr_db.expand()?,
            max_frames: self.sim.max_frames,
            target_bit_errors: self.sim.target_bit_errors,
            info_bits_per_frame: self.sim.info_bits_per_frame,
            master_seed: self.seed,
        };
        sim.validate()?;
        Ok(sim)
    }

    /// The fully-populated equivalent of this file: parsing its TOML
    /// serialization yields the same configuration.
    pub fn resolved(&self) -> Result<ConfigFile, ConfigError> {
        let sim = self.resolve()?;
        let g = &sim.geometry;
        Ok(ConfigFile {
            mode: g.mode,
            seed: sim.master_seed,
            coding: sim.coding,
            modulation: sim.modulation,
            geometry: GeometrySection {
                m_t: g.m_t,
                m_r: g.m_r,
                n_t: g.n_t,
                n_r: g.n_r,
                k: g.k,
                n_s: g.n_s,
                n_t_rf: Some(g.n_t_rf),
                n_r_rf: Some(g.n_r_rf),
                d_lambda: g.d_lambda,
            },
            profile: ProfileSection {
                l: ScalarOrMatrix::Matrix(
                    (0..sim.profile.rows())
                        .map(|i| (0..sim.profile.cols()).map(|j| sim.profile.l(i, j)).collect())
                        .collect(),
                ),
                beta_db: ScalarOrMatrix::Matrix(
                    (0..sim.profile.rows())
                        .map(|i| {
                            (0..sim.profile.cols()).map(|j| sim.profile.beta_db(i, j)).collect()
                        })
                        .collect(),
                ),
            },
            code: self.code.clone(),
            sim: SimSection {
                snr_db: SnrSpec::List(sim.snr_db.clone()),
                max_frames: sim.max_frames,
                target_bit_errors: sim.target_bit_errors,
                info_bits_per_frame: sim.info_bits_per_frame,
            },
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Stable hex fingerprint of the resolved configuration.
    pub fn fingerprint(&self) -> Result<String, ConfigError> {
        let canonical = self.resolved()?.to_toml();
        Ok(format!("{:016x}", crate::output::fnv1a64(canonical.as_bytes()))[..12].to_string())
    }
}
