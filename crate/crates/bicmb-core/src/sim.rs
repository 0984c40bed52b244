//! The per-frame Monte Carlo link: draw a channel, build beamformers,
//! encode/interleave/map, add noise, compute metrics, decode, count errors.
//!
//! A frame is a pure function of (master seed, SNR index, frame index), so
//! frames can be executed in any order or on any number of workers and the
//! results are identical. The sweep engine that schedules frames lives in
//! the companion crate.

use crate::beamforming::{hybrid_bd_mu, svd_beamformers_su};
use crate::channel::{ula_response, ChannelRealization, FadingProfile, Mode, PathSet, SystemGeometry};
use crate::codec::{conv_encode, viterbi_decode, CodeSpec};
use crate::error::{Error, Result};
use crate::interleaver::{build_interleaver, InterleaverPlan};
use crate::linalg;
use crate::math;
use crate::modulation::{map_symbols, ModulationSpec};
use crate::rng::{Domain, SeedStream};
use crate::{channel, CMat, C64};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Whether frames run the full BICMB chain or uncoded symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum CodingMode {
    #[default]
    Bicmb,
    Uncoded,
}

/// Everything a sweep needs: scenario, code, grid, stopping rule, seed.
///
/// The channel is refreshed on every frame (quasi-static within a frame).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SimConfig {
    pub geometry: SystemGeometry,
    pub profile: FadingProfile,
    pub code: CodeSpec,
    pub modulation: ModulationSpec,
    pub coding: CodingMode,
    /// Strictly increasing SNR grid in dB.
    pub snr_db: Vec<f64>,
    pub max_frames: u64,
    pub target_bit_errors: u64,
    pub info_bits_per_frame: usize,
    pub master_seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.profile.check_dims(&self.geometry)?;
        if self.snr_db.is_empty() {
            return Err(Error::InvalidArgument(String::from("empty SNR grid")));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument(String::from("SNR grid must be finite")));
        }
        if self.snr_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(String::from(
                "SNR grid must be strictly increasing",
            )));
        }
        if self.max_frames == 0 || self.target_bit_errors == 0 || self.info_bits_per_frame == 0 {
            return Err(Error::InvalidArgument(String::from(
                "max_frames, target_bit_errors, and info_bits_per_frame must be positive",
            )));
        }
        if self.coding == CodingMode::Bicmb {
            let d_free = self.code.d_free()?;
            if self.geometry.n_s > d_free {
                return Err(Error::InterleaverConstraint {
                    n_s: self.geometry.n_s,
                    d_free,
                });
            }
        }
        // Streams cannot exceed what the channel carries per receiver.
        match self.geometry.mode {
            Mode::SingleUser => {
                let rank_cap = channel::theoretical_rank(&self.profile)
                    .min(self.geometry.m_r * self.geometry.n_r)
                    .min(self.geometry.m_t * self.geometry.n_t);
                if self.geometry.n_s > rank_cap {
                    return Err(Error::StreamCountExceedsRank {
                        requested: self.geometry.n_s,
                        rank: rank_cap,
                    });
                }
            }
            Mode::MultiUser => {
                for (user, paths) in channel::theoretical_rank_per_user(&self.profile)
                    .into_iter()
                    .enumerate()
                {
                    if self.geometry.n_s > paths.min(self.geometry.n_r) {
                        return Err(Error::InfeasibleConfiguration {
                            user,
                            reason: format!(
                                "n_s = {} exceeds the user's {} available subchannels",
                                self.geometry.n_s,
                                paths.min(self.geometry.n_r)
                            ),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Error counts for one user in one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct UserFrameResult {
    pub bit_errors: u64,
    pub bits: u64,
}

/// Outcome of one simulated frame.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FrameResult {
    pub per_user: Vec<UserFrameResult>,
    pub frame_seed: u64,
}

impl FrameResult {
    pub fn total_errors(&self) -> u64 {
        self.per_user.iter().map(|u| u.bit_errors).sum()
    }

    pub fn total_bits(&self) -> u64 {
        self.per_user.iter().map(|u| u.bits).sum()
    }
}

/// A validated configuration with its derived code parameters, ready to
/// run frames. Immutable and safe to share across workers.
#[derive(Debug, Clone)]
pub struct Link {
    config: SimConfig,
    /// Free distance of the configured code (interleaver constraint); only
    /// meaningful under BICMB.
    d_free: usize,
}

impl Link {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let d_free = match config.coding {
            CodingMode::Bicmb => config.code.d_free()?,
            // No code: the interleaver is a plain round-robin with no
            // diversity constraint to enforce.
            CodingMode::Uncoded => usize::MAX,
        };
        Ok(Link { config, d_free })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn d_free(&self) -> usize {
        self.d_free
    }

    /// Effective per-stream gains and the noise variance for one draw.
    ///
    /// Single-user: lambda_s from the channel SVD, N_0 = N_t / SNR.
    /// Multi-user: sigma_{k,s} scaled by the 1/sqrt(K N_s) symbol energy,
    /// N_0 = 1 / SNR.
    fn effective_gains(
        &self,
        realization: &ChannelRealization,
        snr: f64,
    ) -> Result<(Vec<Vec<f64>>, f64)> {
        let g = &self.config.geometry;
        match g.mode {
            Mode::SingleUser => {
                let lambda = self.su_gains(realization)?;
                Ok((vec![lambda], g.n_t as f64 / snr))
            }
            Mode::MultiUser => {
                let hs: Vec<_> = (0..g.k).map(|k| realization.h_user(k).clone()).collect();
                let set = hybrid_bd_mu(&hs, g)?;
                let amp = 1.0 / math::sqrt((g.k * g.n_s) as f64);
                let gains = set
                    .sigma
                    .iter()
                    .map(|user| user.iter().map(|s| s * amp).collect())
                    .collect();
                Ok((gains, 1.0 / snr))
            }
        }
    }

    /// Single-user subchannel gains lambda_1..lambda_{N_s}.
    ///
    /// The assembled channel is a sum of a few weighted steering-vector
    /// outer products, so for small path counts the singular values come
    /// exactly from QR-reducing the two stacked factors and taking the SVD
    /// of the small core. Falls back to the dense SVD otherwise; both
    /// routes agree to floating-point accuracy (see tests).
    fn su_gains(&self, realization: &ChannelRealization) -> Result<Vec<f64>> {
        let n_s = self.config.geometry.n_s;
        let total = channel::theoretical_rank(&self.config.profile);
        if total > 32 {
            return Ok(svd_beamformers_su(realization.h(), n_s)?.lambda);
        }
        let s = self.su_singular_values_factored(&realization.paths)?;
        let rank = linalg::numerical_rank(s.as_slice());
        if n_s > rank {
            return Err(Error::StreamCountExceedsRank {
                requested: n_s,
                rank,
            });
        }
        Ok(s[..n_s].to_vec())
    }

    fn su_singular_values_factored(&self, paths: &PathSet) -> Result<alloc::vec::Vec<f64>> {
        let g = &self.config.geometry;
        let profile = &self.config.profile;
        let total = channel::theoretical_rank(profile);
        let mut left = CMat::zeros(g.m_r * g.n_r, total);
        let mut right = CMat::zeros(g.m_t * g.n_t, total);
        let mut weights = alloc::vec::Vec::with_capacity(total);
        let mut p = 0;
        for i in 0..g.m_r {
            for j in 0..g.m_t {
                let pair = paths.pair(i, j);
                let l = pair.gains.len();
                let w = math::sqrt(profile.beta(i, j) * (g.n_t * g.n_r) as f64 / l as f64);
                for ((&alpha, &theta), &phi) in pair.gains.iter().zip(&pair.aoa).zip(&pair.aod) {
                    let ar = ula_response(theta, g.n_r, g.d_lambda)?;
                    let at = ula_response(phi, g.n_t, g.d_lambda)?;
                    for r in 0..g.n_r {
                        left[(i * g.n_r + r, p)] = ar[r];
                    }
                    for r in 0..g.n_t {
                        right[(j * g.n_t + r, p)] = at[r];
                    }
                    weights.push(alpha * w);
                    p += 1;
                }
            }
        }
        let r_left = left.qr().r();
        let r_right = right.qr().r();
        // core = R_left * diag(weights) * R_right^H
        let mut scaled = r_left;
        for (col, &w) in weights.iter().enumerate() {
            for row in 0..scaled.nrows() {
                scaled[(row, col)] *= w;
            }
        }
        let core = scaled * r_right.adjoint();
        let mut s: alloc::vec::Vec<f64> = core.singular_values().as_slice().to_vec();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(s)
    }

    /// Runs one frame at grid point `snr_idx`. Deterministic in
    /// (master seed, snr_idx, frame_idx).
    pub fn run_frame(&self, snr_idx: usize, frame_idx: u64) -> Result<FrameResult> {
        let cfg = &self.config;
        if snr_idx >= cfg.snr_db.len() {
            return Err(Error::InvalidArgument(format!(
                "snr index {snr_idx} outside grid of {}",
                cfg.snr_db.len()
            )));
        }
        let snr = math::db_to_linear(cfg.snr_db[snr_idx]);
        let seed = SeedStream::new(cfg.master_seed)
            .domain(Domain::Frame)
            .with(snr_idx as u64)
            .with(frame_idx);

        let realization = ChannelRealization::generate(&cfg.geometry, &cfg.profile, seed)?;
        let (gains, n0) = self.effective_gains(&realization, snr)?;

        let mut per_user = Vec::with_capacity(cfg.geometry.k);
        for (user, user_gains) in gains.iter().enumerate() {
            per_user.push(self.run_user(seed, user, user_gains, n0)?);
        }
        Ok(FrameResult {
            per_user,
            frame_seed: seed.key(),
        })
    }

    fn run_user(
        &self,
        frame_seed: SeedStream,
        user: usize,
        gains: &[f64],
        n0: f64,
    ) -> Result<UserFrameResult> {
        let cfg = &self.config;
        let n_s = cfg.geometry.n_s;
        let m = cfg.modulation.bits_per_symbol();
        let info_len = cfg.info_bits_per_frame;

        let mut payload_rng = frame_seed.domain(Domain::Payload).with(user as u64).rng();
        let info: Vec<u8> = (0..info_len).map(|_| payload_rng.bit()).collect();

        // The frame payload, zero-padded so it tiles N_s streams of m-bit
        // symbols exactly.
        let body: Vec<u8> = match cfg.coding {
            CodingMode::Bicmb => conv_encode(&info, &cfg.code),
            CodingMode::Uncoded => info.clone(),
        };
        let body_len = body.len();
        let granule = n_s * m;
        let padded_len = body_len.div_ceil(granule) * granule;
        let mut padded = body;
        padded.resize(padded_len, 0);

        let plan = build_interleaver(
            padded_len,
            n_s,
            &cfg.modulation,
            self.d_free,
            frame_seed.domain(Domain::Interleaver).with(user as u64),
        )?;
        let tx_bits = plan.interleave(&padded);
        let streams = map_symbols(&tx_bits, &cfg.modulation, n_s)?;

        // Transmit each stream over its scalar effective subchannel.
        let mut noise_rng = frame_seed.domain(Domain::Noise).with(user as u64).rng();
        let mut received: Vec<Vec<C64>> = Vec::with_capacity(n_s);
        for (s, stream) in streams.iter().enumerate() {
            received.push(
                stream
                    .iter()
                    .map(|&x| x * gains[s] + noise_rng.cnoise(n0))
                    .collect(),
            );
        }

        let points = cfg.modulation.points();
        let metric = |k_prime: usize, b: u8| -> f64 {
            let p = plan.position(k_prime);
            let y = received[p.s as usize][p.k as usize];
            let gain = gains[p.s as usize];
            let mut best = f64::INFINITY;
            for &(label, x) in &points {
                if (label >> p.i) & 1 == b {
                    let d = (y - x * gain).norm_sqr();
                    if d < best {
                        best = d;
                    }
                }
            }
            best
        };

        let bit_errors = match cfg.coding {
            CodingMode::Bicmb => {
                let metrics: Vec<[f64; 2]> =
                    (0..body_len).map(|k| [metric(k, 0), metric(k, 1)]).collect();
                let decoded = viterbi_decode(&metrics, &cfg.code)?;
                count_mismatches(&decoded, &info)
            }
            CodingMode::Uncoded => {
                let decided: Vec<u8> = (0..info_len)
                    .map(|k| u8::from(metric(k, 1) < metric(k, 0)))
                    .collect();
                count_mismatches(&decided, &info)
            }
        };

        Ok(UserFrameResult {
            bit_errors,
            bits: info_len as u64,
        })
    }

    /// The interleaver plan a frame would use (diagnostics and validation).
    pub fn interleaver_plan(&self, snr_idx: usize, frame_idx: u64, user: usize) -> Result<InterleaverPlan> {
        let cfg = &self.config;
        let m = cfg.modulation.bits_per_symbol();
        let n_s = cfg.geometry.n_s;
        let body_len = match cfg.coding {
            CodingMode::Bicmb => cfg.code.coded_len(cfg.info_bits_per_frame),
            CodingMode::Uncoded => cfg.info_bits_per_frame,
        };
        let granule = n_s * m;
        let padded_len = body_len.div_ceil(granule) * granule;
        let seed = SeedStream::new(cfg.master_seed)
            .domain(Domain::Frame)
            .with(snr_idx as u64)
            .with(frame_idx);
        build_interleaver(
            padded_len,
            n_s,
            &cfg.modulation,
            self.d_free,
            seed.domain(Domain::Interleaver).with(user as u64),
        )
    }
}

fn count_mismatches(a: &[u8], b: &[u8]) -> u64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u64
}
