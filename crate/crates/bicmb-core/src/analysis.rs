//! Closed-form performance analysis: Gamma moment matching of the channel
//! energy, diversity gains, PEP and BER union bounds, and the empirical
//! BER-slope estimator.
//!
//! The normalized channel energy decomposes into a weighted sum of
//! independent per-pair Gamma variables Psi_ij ~ G(L_ij, beta_ij / L_ij);
//! Welch-Satterthwaite moment matching collapses the sum to a single Gamma
//! whose shape is the diversity gain. The homogeneous case is exact.

use crate::channel::FadingProfile;
use crate::codec::SpectrumLine;
use crate::error::{Error, Result};
use crate::linalg;
use crate::math;
use crate::CMat;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Moment-matched Gamma distribution (shape k, scale theta).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GammaApprox {
    pub shape: f64,
    pub scale: f64,
}

impl GammaApprox {
    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn variance(&self) -> f64 {
        self.shape * self.scale * self.scale
    }

    /// E[exp(-c X)] = (1 + theta c)^(-k) for c >= 0.
    pub fn mgf_neg(&self, c: f64) -> f64 {
        math::powf(1.0 + self.scale * c, -self.shape)
    }

    /// The same distribution after multiplying the variable by `factor`
    /// (e.g. to move from Theta / (N_r N_t) to Theta itself).
    pub fn scaled(&self, factor: f64) -> GammaApprox {
        GammaApprox {
            shape: self.shape,
            scale: self.scale * factor,
        }
    }
}

/// Welch-Satterthwaite Gamma approximation of the normalized single-user
/// channel energy: shape (sum beta)^2 / (sum beta^2 / L), scale the ratio
/// the other way.
pub fn gamma_approx_su(profile: &FadingProfile) -> Result<GammaApprox> {
    let mut sum_beta = 0.0;
    let mut sum_beta2_inv_l = 0.0;
    for i in 0..profile.rows() {
        for j in 0..profile.cols() {
            let beta = profile.beta(i, j);
            sum_beta += beta;
            sum_beta2_inv_l += beta * beta / profile.l(i, j) as f64;
        }
    }
    if sum_beta == 0.0 {
        return Err(Error::AllZeroProfile);
    }
    Ok(GammaApprox {
        shape: sum_beta * sum_beta / sum_beta2_inv_l,
        scale: sum_beta2_inv_l / sum_beta,
    })
}

/// Multi-user per-user approximation: kappa_k = M^2 / sum_j 1/L_kj,
/// theta_k = (sum_j 1/L_kj) / M.
pub fn gamma_approx_mu(profile: &FadingProfile, user: usize) -> Result<GammaApprox> {
    if user >= profile.rows() {
        return Err(Error::InvalidArgument(format!(
            "user {user} outside profile with {} rows",
            profile.rows()
        )));
    }
    let m = profile.cols() as f64;
    let sum_inv_l: f64 = (0..profile.cols())
        .map(|j| 1.0 / profile.l(user, j) as f64)
        .sum();
    Ok(GammaApprox {
        shape: m * m / sum_inv_l,
        scale: sum_inv_l / m,
    })
}

/// Which closed form a diversity query refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiversityMode {
    SingleUser,
    MultiUser { user: usize },
}

/// Diversity gain: the shape of the matched Gamma distribution.
pub fn diversity_gain(profile: &FadingProfile, mode: DiversityMode) -> Result<f64> {
    let g = match mode {
        DiversityMode::SingleUser => gamma_approx_su(profile)?,
        DiversityMode::MultiUser { user } => gamma_approx_mu(profile, user)?,
    };
    Ok(g.shape)
}

/// Constants entering the PEP bound besides the Gamma parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BoundParams {
    /// Minimum constellation distance at unit energy.
    pub d_min: f64,
    /// Guaranteed minimum subchannel usage count along an error event; the
    /// constructive interleaver gives 1.
    pub alpha_min: usize,
    pub n_s: usize,
    pub n_t: usize,
    /// Total available subchannels (channel rank).
    pub l_t: usize,
}

impl BoundParams {
    /// The factor multiplying `snr` inside the MGF argument.
    pub fn snr_coefficient(&self) -> f64 {
        self.d_min * self.d_min * self.alpha_min as f64 * self.n_s as f64 * self.n_t as f64
            / (4.0 * self.l_t as f64)
    }
}

/// Pairwise error probability bound
/// (1/2) (1 + theta c snr)^(-k) with c from [`BoundParams::snr_coefficient`].
pub fn pep_bound(params: &BoundParams, gamma: &GammaApprox, snr: f64) -> f64 {
    0.5 * gamma.mgf_neg(params.snr_coefficient() * snr)
}

/// High-SNR power-law form (1/2) (theta c snr)^(-k).
pub fn pep_bound_high_snr(params: &BoundParams, gamma: &GammaApprox, snr: f64) -> f64 {
    0.5 * math::powf(gamma.scale * params.snr_coefficient() * snr, -gamma.shape)
}

/// Truncated union bound on bit error probability over a linear SNR grid.
///
/// Every spectrum line contributes W_I(d) times the (d-independent,
/// alpha_min = 1) PEP bound; the truncation depth is whatever the supplied
/// spectrum covers and is reported alongside the curve by the callers.
pub fn ber_union_bound(
    spectrum: &[SpectrumLine],
    k_c: usize,
    params: &BoundParams,
    gamma: &GammaApprox,
    snr_grid: &[f64],
) -> Result<Vec<f64>> {
    if spectrum.is_empty() {
        return Err(Error::InvalidArgument(String::from(
            "empty distance spectrum; run distance_spectrum first",
        )));
    }
    let total_weight: f64 = spectrum.iter().map(|l| l.input_weight as f64).sum();
    Ok(snr_grid
        .iter()
        .map(|&snr| total_weight / k_c as f64 * pep_bound(params, gamma, snr))
        .collect())
}

/// Channel energy Theta = ||H||_F^2 (the sum of squared singular values).
pub fn channel_energy(h: &CMat) -> f64 {
    linalg::fro_norm_sqr(h)
}

/// One measured point of a BER sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BerPoint {
    pub snr_db: f64,
    pub bit_errors: u64,
    pub bits: u64,
    pub frames: u64,
    /// Whether the stopping target was reached at this point.
    pub converged: bool,
}

impl BerPoint {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.bits as f64
    }
}

/// A per-user BER-vs-SNR curve with its provenance.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BerCurve {
    pub user: usize,
    pub points: Vec<BerPoint>,
    pub master_seed: u64,
    /// Hash of the resolved configuration that produced the curve.
    pub config_fingerprint: String,
}

/// Least-squares diversity estimate from the high-SNR BER slope.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SlopeFit {
    /// Negated slope of log10(BER) vs log10(SNR): the measured diversity.
    pub slope: f64,
    pub stderr: f64,
    pub points_used: usize,
}

/// Fits the diversity slope over points whose SNR lies in
/// `[window.0, window.1]` dB.
///
/// Refuses when fewer than three points fall in the window or when any of
/// them carries fewer than 100 bit errors (the estimate would be noise).
pub fn fit_diversity_slope(curve: &BerCurve, window: (f64, f64)) -> Result<SlopeFit> {
    let selected: Vec<&BerPoint> = curve
        .points
        .iter()
        .filter(|p| p.snr_db >= window.0 && p.snr_db <= window.1)
        .collect();
    if selected.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} points in window [{}, {}] dB; need at least 3",
            selected.len(),
            window.0,
            window.1
        )));
    }
    if let Some(p) = selected.iter().find(|p| p.bit_errors < 100) {
        return Err(Error::InsufficientData(format!(
            "point at {} dB has only {} bit errors; need >= 100",
            p.snr_db, p.bit_errors
        )));
    }
    if let Some(p) = selected.iter().find(|p| p.bit_errors == 0 || p.bits == 0) {
        return Err(Error::InsufficientData(format!(
            "point at {} dB has no usable error counts",
            p.snr_db
        )));
    }

    // log10(SNR) = snr_db / 10
    let xs: Vec<f64> = selected.iter().map(|p| p.snr_db / 10.0).collect();
    let ys: Vec<f64> = selected.iter().map(|p| math::log10(p.ber())).collect();
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean) * (x - x_mean)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData(String::from(
            "all points share one SNR; slope undefined",
        )));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    let slope = sxy / sxx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let fit = y_mean + slope * (x - x_mean);
            (y - fit) * (y - fit)
        })
        .sum();
    let dof = (selected.len() - 2) as f64;
    let stderr = if dof > 0.0 {
        math::sqrt(ss_res / dof / sxx)
    } else {
        0.0
    };
    Ok(SlopeFit {
        slope: -slope,
        stderr,
        points_used: selected.len(),
    })
}

/// The default fit window: the top 10 dB of the grid, restricted to points
/// that collected at least 100 bit errors.
pub fn default_slope_window(curve: &BerCurve) -> Option<(f64, f64)> {
    let top = curve
        .points
        .iter()
        .filter(|p| p.bit_errors >= 100)
        .map(|p| p.snr_db)
        .fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        None
    } else {
        Some((top - 10.0, top))
    }
}
