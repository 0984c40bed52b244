//! Sweep scheduling and the computations behind each subcommand.
//!
//! Frames are scheduled in chunks whose sizes follow a fixed doubling
//! schedule; the stopping rule is evaluated only at chunk boundaries and
//! frame results are reduced in frame-index order. The set of frames
//! executed is therefore a pure function of the configuration, so worker
//! count cannot change any output byte.

use bicmb_core::analysis::{
    ber_union_bound, gamma_approx_mu, gamma_approx_su, BerCurve, BerPoint, BoundParams,
    GammaApprox,
};
use bicmb_core::channel::{self, ChannelRealization, Mode};
use bicmb_core::codec::distance_spectrum;
use bicmb_core::error::Result as CoreResult;
use bicmb_core::interleaver::{validate_interleaver, ValidationReport};
use bicmb_core::linalg;
use bicmb_core::rng::SeedStream;
use bicmb_core::sim::{FrameResult, Link, SimConfig};
use bicmb_core::Error as CoreError;
use rayon::prelude::*;
use serde::Serialize;

const FIRST_CHUNK: u64 = 64;
const MAX_CHUNK: u64 = 8192;

/// Builds a rayon pool with `threads` workers (0 = one per CPU).
pub fn make_pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}

/// Runs the full SNR sweep, one BER curve per user.
pub fn sweep(link: &Link, pool: &rayon::ThreadPool, fingerprint: &str) -> CoreResult<Vec<BerCurve>> {
    let cfg = link.config();
    let users = cfg.geometry.k;
    let mut curves: Vec<BerCurve> = (0..users)
        .map(|user| BerCurve {
            user,
            points: Vec::with_capacity(cfg.snr_db.len()),
            master_seed: cfg.master_seed,
            config_fingerprint: fingerprint.to_string(),
        })
        .collect();

    for (snr_idx, &snr_db) in cfg.snr_db.iter().enumerate() {
        let mut errors = vec![0u64; users];
        let mut bits = vec![0u64; users];
        let mut frames_done = 0u64;
        let mut chunk = FIRST_CHUNK;
        while frames_done < cfg.max_frames {
            let n = chunk.min(cfg.max_frames - frames_done);
            let results: CoreResult<Vec<FrameResult>> = pool.install(|| {
                (frames_done..frames_done + n)
                    .into_par_iter()
                    .map(|f| link.run_frame(snr_idx, f))
                    .collect()
            });
            for frame in results? {
                for (u, r) in frame.per_user.iter().enumerate() {
                    errors[u] += r.bit_errors;
                    bits[u] += r.bits;
                }
            }
            frames_done += n;
            if errors.iter().all(|&e| e >= cfg.target_bit_errors) {
                break;
            }
            chunk = (chunk * 2).min(MAX_CHUNK);
        }
        for u in 0..users {
            curves[u].points.push(BerPoint {
                snr_db,
                bit_errors: errors[u],
                bits: bits[u],
                frames: frames_done,
                converged: errors[u] >= cfg.target_bit_errors,
            });
        }
    }
    Ok(curves)
}

/// Union-bound curves on the configured SNR grid.
#[derive(Debug, Clone, Serialize)]
pub struct BoundData {
    pub snr_db: Vec<f64>,
    /// One bound curve per user.
    pub per_user: Vec<Vec<f64>>,
    /// Spectrum truncation depth (output Hamming weight).
    pub d_max: usize,
    pub alpha_min: usize,
}

/// Evaluates the truncated BER union bound for every user.
///
/// The spectrum is truncated eight weights past the free distance and
/// alpha_min is pinned to 1, the value the constructive interleaver
/// guarantees.
pub fn bound_curves(cfg: &SimConfig) -> CoreResult<BoundData> {
    let d_free = cfg.code.d_free()?;
    let d_max = d_free + 8;
    let spectrum = distance_spectrum(&cfg.code, d_max)?;
    let snr_linear: Vec<f64> = cfg.snr_db.iter().map(|db| 10f64.powf(db / 10.0)).collect();
    let mut per_user = Vec::new();
    for user in 0..cfg.geometry.k {
        let (gamma, l_t) = user_gamma(cfg, user)?;
        let params = BoundParams {
            d_min: cfg.modulation.d_min(),
            alpha_min: 1,
            n_s: cfg.geometry.n_s,
            n_t: cfg.geometry.n_t,
            l_t,
        };
        per_user.push(ber_union_bound(
            &spectrum,
            cfg.code.k_c(),
            &params,
            &gamma,
            &snr_linear,
        )?);
    }
    Ok(BoundData {
        snr_db: cfg.snr_db.clone(),
        per_user,
        d_max,
        alpha_min: 1,
    })
}

fn user_gamma(cfg: &SimConfig, user: usize) -> CoreResult<(GammaApprox, usize)> {
    match cfg.geometry.mode {
        Mode::SingleUser => Ok((
            gamma_approx_su(&cfg.profile)?,
            channel::theoretical_rank(&cfg.profile),
        )),
        Mode::MultiUser => Ok((
            gamma_approx_mu(&cfg.profile, user)?,
            cfg.profile.row_paths(user),
        )),
    }
}

/// Closed-form diversity report.
#[derive(Debug, Clone, Serialize)]
pub struct DiversityEntry {
    pub user: usize,
    pub diversity_gain: f64,
    pub gamma_shape: f64,
    pub gamma_scale: f64,
    /// Available subchannels for this receiver.
    pub l_t: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiversityData {
    pub mode: Mode,
    pub entries: Vec<DiversityEntry>,
}

pub fn diversity_table(cfg: &SimConfig) -> CoreResult<DiversityData> {
    let users = match cfg.geometry.mode {
        Mode::SingleUser => 1,
        Mode::MultiUser => cfg.geometry.k,
    };
    let mut entries = Vec::with_capacity(users);
    for user in 0..users {
        let (gamma, l_t) = user_gamma(cfg, user)?;
        entries.push(DiversityEntry {
            user,
            diversity_gain: gamma.shape,
            gamma_shape: gamma.shape,
            gamma_scale: gamma.scale,
            l_t,
        });
    }
    Ok(DiversityData {
        mode: cfg.geometry.mode,
        entries,
    })
}

/// Singular-value statistics over channel realizations.
#[derive(Debug, Clone, Serialize)]
pub struct RealizationStat {
    pub user: usize,
    pub realization: usize,
    pub numerical_rank: usize,
    pub singular_values: Vec<f64>,
}

/// Per-user beamforming diagnostics for one realization (multi-user mode).
#[derive(Debug, Clone, Serialize)]
pub struct BeamformingDiag {
    pub user: usize,
    pub realization: usize,
    pub effective_gains: Vec<f64>,
    pub intersymbol_ratio: f64,
    pub interuser_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelStatsData {
    /// Sum of path counts per receiver (the predicted rank).
    pub theoretical_rank: Vec<usize>,
    pub realizations: Vec<RealizationStat>,
    /// Hybrid-BD leakage diagnostics, multi-user mode only.
    pub beamforming: Option<Vec<BeamformingDiag>>,
}

impl ChannelStatsData {
    /// True when every realization's numerical rank equals the prediction.
    pub fn rank_always_theoretical(&self) -> bool {
        self.realizations
            .iter()
            .all(|r| r.numerical_rank == self.theoretical_rank[r.user])
    }
}

pub fn channel_stats(cfg: &SimConfig, realizations: usize) -> CoreResult<ChannelStatsData> {
    let theoretical = match cfg.geometry.mode {
        Mode::SingleUser => vec![channel::theoretical_rank(&cfg.profile)
            .min(cfg.geometry.m_r * cfg.geometry.n_r)
            .min(cfg.geometry.m_t * cfg.geometry.n_t)],
        Mode::MultiUser => channel::theoretical_rank_per_user(&cfg.profile),
    };
    let mut stats = Vec::new();
    let mut diags = Vec::new();
    for t in 0..realizations {
        let r = ChannelRealization::generate(
            &cfg.geometry,
            &cfg.profile,
            SeedStream::new(cfg.master_seed).with(t as u64),
        )?;
        let matrices: Vec<(usize, &bicmb_core::CMat)> = match cfg.geometry.mode {
            Mode::SingleUser => vec![(0, r.h())],
            Mode::MultiUser => (0..cfg.geometry.k).map(|k| (k, r.h_user(k))).collect(),
        };
        for (user, h) in matrices {
            let dec = linalg::svd(h);
            stats.push(RealizationStat {
                user,
                realization: t,
                numerical_rank: linalg::numerical_rank(dec.s.as_slice()),
                singular_values: dec.s.as_slice().to_vec(),
            });
        }
        if cfg.geometry.mode == Mode::MultiUser {
            let hs: Vec<bicmb_core::CMat> =
                (0..cfg.geometry.k).map(|k| r.h_user(k).clone()).collect();
            let set = bicmb_core::beamforming::hybrid_bd_mu(&hs, &cfg.geometry)?;
            let reports = bicmb_core::beamforming::effective_channel_report_mu(
                &set.w_rf,
                &set.w_bb,
                &set.f_rf,
                &set.f_bb,
                &hs,
                cfg.geometry.n_s,
            );
            for (user, rep) in reports.into_iter().enumerate() {
                diags.push(BeamformingDiag {
                    user,
                    realization: t,
                    effective_gains: rep.desired_gains.clone(),
                    intersymbol_ratio: rep.intersymbol_ratio(),
                    interuser_ratio: rep.interuser_ratio(),
                });
            }
        }
    }
    Ok(ChannelStatsData {
        theoretical_rank: theoretical,
        realizations: stats,
        beamforming: (!diags.is_empty()).then_some(diags),
    })
}

/// Interleaver criteria report for the configured frame shape.
#[derive(Debug, Clone, Serialize)]
pub struct InterleaverData {
    pub n_s: usize,
    pub bits_per_symbol: usize,
    pub coded_bits: usize,
    pub report: ValidationReport,
}

pub fn interleaver_report(cfg: &SimConfig) -> Result<InterleaverData, CoreError> {
    let link = Link::new(cfg.clone())?;
    let plan = link.interleaver_plan(0, 0, 0)?;
    Ok(InterleaverData {
        n_s: plan.n_s(),
        bits_per_symbol: plan.bits_per_symbol(),
        coded_bits: plan.n_bits(),
        report: validate_interleaver(&plan),
    })
}
