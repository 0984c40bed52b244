//! Beamformer construction.
//!
//! Single-user: the optimal unconstrained precoder/combiner are the leading
//! singular vectors of the channel, turning it into parallel scalar
//! subchannels with gains lambda_s.
//!
//! Multi-user: a two-stage hybrid scheme. Per-user RF combiners come from
//! each user's channel SVD, the RF precoder from the SVD of the composite
//! combined channel, and the baseband stage block-diagonalizes the
//! low-dimensional baseband channels so each user sees an interference-free
//! diagonal link with gains sigma_{k,s}. RF factors are unconstrained
//! (amplitude and phase), matching the analysis path.

use crate::channel::{Mode, SystemGeometry};
use crate::error::{Error, Result};
use crate::linalg;
use crate::math;
use crate::{CMat, C64};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Single-user SVD beamformers: `rx^H H tx = diag(lambda)`.
#[derive(Debug, Clone)]
pub struct BeamformerSet {
    /// Transmit matrix V_ns (M_t N_t x N_s), orthonormal columns.
    pub tx: CMat,
    /// Receive matrix U_ns (M_r N_r x N_s), orthonormal columns.
    pub rx: CMat,
    /// Effective subchannel gains, non-negative and non-increasing.
    pub lambda: Vec<f64>,
}

/// Leading-`n_s` SVD beamformers of `h`.
pub fn svd_beamformers_su(h: &CMat, n_s: usize) -> Result<BeamformerSet> {
    if n_s == 0 {
        return Err(Error::InvalidArgument(String::from("n_s must be positive")));
    }
    let dec = linalg::svd(h);
    let rank = linalg::numerical_rank(dec.s.as_slice());
    if n_s > rank {
        return Err(Error::StreamCountExceedsRank {
            requested: n_s,
            rank,
        });
    }
    Ok(BeamformerSet {
        tx: dec.v.columns(0, n_s).clone_owned(),
        rx: dec.u.columns(0, n_s).clone_owned(),
        lambda: dec.s.as_slice()[..n_s].to_vec(),
    })
}

/// Multi-user hybrid block-diagonalization beamformers.
#[derive(Debug, Clone)]
pub struct MuBeamformerSet {
    /// RF precoder (M N_t x N_t_rf), orthonormal columns.
    pub f_rf: CMat,
    /// Baseband precoder (N_t_rf x K N_s); columns of `f_rf * f_bb` have
    /// unit norm, so the power constraint ||F_RF F_BB||_F^2 = K N_s holds.
    pub f_bb: CMat,
    /// Per-user RF combiners (N_r x N_r_rf).
    pub w_rf: Vec<CMat>,
    /// Per-user baseband combiners (N_r_rf x N_s).
    pub w_bb: Vec<CMat>,
    /// Effective gains sigma[k][s], non-increasing per user.
    ///
    /// Power allocation is uniform (P = I), so these are the raw diagonal
    /// gains of each user's effective channel.
    pub sigma: Vec<Vec<f64>>,
}

impl MuBeamformerSet {
    /// Effective channel of user `k`: W_bb^H W_rf^H H_k F_rf F_bb
    /// (N_s x K N_s).
    pub fn effective_channel(&self, k: usize, h_k: &CMat) -> CMat {
        self.w_bb[k].adjoint() * self.w_rf[k].adjoint() * h_k * &self.f_rf * &self.f_bb
    }
}

/// Two-stage hybrid block diagonalization for `K` users.
///
/// Requires the doubled RF-chain budget (N_t_rf = 2 K N_s and
/// N_r_rf = 2 N_s) and enough propagation paths per user to carry N_s
/// streams.
pub fn hybrid_bd_mu(h_users: &[CMat], geometry: &SystemGeometry) -> Result<MuBeamformerSet> {
    geometry.validate()?;
    if geometry.mode != Mode::MultiUser {
        return Err(Error::InvalidArgument(String::from(
            "hybrid block diagonalization applies to multi-user geometries",
        )));
    }
    let (k_users, n_s) = (geometry.k, geometry.n_s);
    let (n_t_rf, n_r_rf) = (geometry.n_t_rf, geometry.n_r_rf);
    if n_t_rf != 2 * k_users * n_s || n_r_rf != 2 * n_s {
        return Err(Error::InvalidArgument(format!(
            "hybrid BD needs the doubled RF budget n_t_rf = 2*k*n_s and n_r_rf = 2*n_s \
             (got n_t_rf = {n_t_rf}, n_r_rf = {n_r_rf})"
        )));
    }
    if h_users.len() != k_users {
        return Err(Error::DimensionMismatch {
            what: "user channels",
            expected: format!("{k_users}"),
            actual: format!("{}", h_users.len()),
        });
    }
    let cols = geometry.m_t * geometry.n_t;
    for (k, h) in h_users.iter().enumerate() {
        if h.nrows() != geometry.n_r || h.ncols() != cols {
            return Err(Error::DimensionMismatch {
                what: "user channel",
                expected: format!("{}x{}", geometry.n_r, cols),
                actual: format!("{}x{} (user {k})", h.nrows(), h.ncols()),
            });
        }
    }

    let inv_sqrt_nt = C64::new(1.0 / math::sqrt(geometry.n_t as f64), 0.0);

    // Stage 1: per-user RF combiners from the channel SVDs.
    let mut w_rf = Vec::with_capacity(k_users);
    for h in h_users {
        let dec = linalg::svd(&(h * inv_sqrt_nt));
        w_rf.push(dec.u.columns(0, n_r_rf).clone_owned());
    }

    // Stage 2: RF precoder from the composite combined channel.
    let mut h_comp = CMat::zeros(k_users * n_r_rf, cols);
    for (k, h) in h_users.iter().enumerate() {
        let combined = w_rf[k].adjoint() * h;
        h_comp
            .view_mut((k * n_r_rf, 0), (n_r_rf, cols))
            .copy_from(&combined);
    }
    let dec = linalg::svd(&(&h_comp * inv_sqrt_nt));
    if dec.v.ncols() < n_t_rf {
        return Err(Error::InvalidArgument(format!(
            "composite channel provides only {} right singular vectors, need {n_t_rf}",
            dec.v.ncols()
        )));
    }
    let f_rf = dec.v.columns(0, n_t_rf).clone_owned();

    // Stage 3: baseband channels.
    let h_bb: Vec<CMat> = h_users
        .iter()
        .enumerate()
        .map(|(k, h)| w_rf[k].adjoint() * h * &f_rf)
        .collect();

    // Stage 4: baseband block diagonalization. For each user, project its
    // baseband channel onto the null space of everyone else's and take the
    // leading singular triplets of the projection.
    let mut f_bb = CMat::zeros(n_t_rf, k_users * n_s);
    let mut w_bb = Vec::with_capacity(k_users);
    let mut sigma = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let mut stack = CMat::zeros((k_users - 1) * n_r_rf, n_t_rf);
        for (row, l) in (0..k_users).filter(|&l| l != k).enumerate() {
            stack
                .view_mut((row * n_r_rf, 0), (n_r_rf, n_t_rf))
                .copy_from(&h_bb[l]);
        }
        let null_basis = linalg::null_space(&stack, 1e-10);
        let projected = &h_bb[k] * &null_basis;
        let dec = linalg::svd(&projected);
        if linalg::numerical_rank(dec.s.as_slice()) < n_s {
            return Err(Error::InfeasibleConfiguration {
                user: k,
                reason: format!(
                    "interference-free baseband channel has rank {} < n_s = {n_s}",
                    linalg::numerical_rank(dec.s.as_slice())
                ),
            });
        }
        let cols_k = &null_basis * dec.v.columns(0, n_s);
        f_bb.view_mut((0, k * n_s), (n_t_rf, n_s)).copy_from(&cols_k);
        w_bb.push(dec.u.columns(0, n_s).clone_owned());
        sigma.push(dec.s.as_slice()[..n_s].to_vec());
    }

    // Stage 5: per-column normalization of F_RF F_BB. The RF precoder has
    // orthonormal columns, so this is a unit-scale correction; sigma tracks
    // it so the stored gains equal the realized diagonal.
    for i in 0..k_users * n_s {
        let full_col = &f_rf * f_bb.column(i);
        let norm = full_col.norm();
        let scale = C64::new(1.0 / norm, 0.0);
        for r in 0..n_t_rf {
            f_bb[(r, i)] *= scale;
        }
        sigma[i / n_s][i % n_s] /= norm;
    }

    Ok(MuBeamformerSet {
        f_rf,
        f_bb,
        w_rf,
        w_bb,
        sigma,
    })
}

/// Signal/leakage breakdown of an effective channel, per user.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EffectiveChannelReport {
    /// Magnitudes of the diagonal (desired) entries for each stream.
    pub desired_gains: Vec<f64>,
    /// Power in the diagonal entries.
    pub desired_power: f64,
    /// Power leaking between this user's own streams.
    pub intersymbol_leakage: f64,
    /// Power arriving from other users' streams.
    pub interuser_leakage: f64,
}

impl EffectiveChannelReport {
    fn from_block(effective: &CMat, own_cols: core::ops::Range<usize>) -> Self {
        let n_s = effective.nrows();
        let mut desired_gains = Vec::with_capacity(n_s);
        let mut desired_power = 0.0;
        let mut intersymbol = 0.0;
        let mut interuser = 0.0;
        for c in 0..effective.ncols() {
            for r in 0..n_s {
                let p = effective[(r, c)].norm_sqr();
                if own_cols.contains(&c) {
                    if c - own_cols.start == r {
                        desired_power += p;
                    } else {
                        intersymbol += p;
                    }
                } else {
                    interuser += p;
                }
            }
        }
        for r in 0..n_s {
            desired_gains.push(effective[(r, own_cols.start + r)].norm());
        }
        EffectiveChannelReport {
            desired_gains,
            desired_power,
            intersymbol_leakage: intersymbol,
            interuser_leakage: interuser,
        }
    }

    /// Leakage between own streams relative to desired power.
    pub fn intersymbol_ratio(&self) -> f64 {
        self.intersymbol_leakage / self.desired_power
    }

    /// Other-user leakage relative to desired power.
    pub fn interuser_ratio(&self) -> f64 {
        self.interuser_leakage / self.desired_power
    }
}

/// Diagnostics for a single-user beamformer: the effective channel
/// `rx^H H tx` against its diagonal.
pub fn effective_channel_report_su(set: &BeamformerSet, h: &CMat) -> EffectiveChannelReport {
    let effective = set.rx.adjoint() * h * &set.tx;
    let n_s = effective.nrows();
    EffectiveChannelReport::from_block(&effective, 0..n_s)
}

/// Diagnostics for arbitrary multi-user precoder/combiner factors. One
/// report per user; the beamformers need not come from [`hybrid_bd_mu`],
/// which makes deliberately mismatched precoders measurable.
pub fn effective_channel_report_mu(
    w_rf: &[CMat],
    w_bb: &[CMat],
    f_rf: &CMat,
    f_bb: &CMat,
    h_users: &[CMat],
    n_s: usize,
) -> Vec<EffectiveChannelReport> {
    h_users
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let effective = w_bb[k].adjoint() * w_rf[k].adjoint() * h * f_rf * f_bb;
            EffectiveChannelReport::from_block(&effective, k * n_s..(k + 1) * n_s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_paths, assemble_channel, FadingProfile};
    use crate::rng::SeedStream;

    fn mu_setup(
        m: usize,
        k: usize,
        n_t: usize,
        n_r: usize,
        n_s: usize,
        l: u32,
        seed: u64,
    ) -> (SystemGeometry, Vec<CMat>) {
        let g = SystemGeometry::multi_user(m, k, n_t, n_r, n_s);
        let p = FadingProfile::homogeneous(k, m, l, -20.0);
        let ps = draw_paths(&p, SeedStream::new(seed));
        let r = assemble_channel(&g, &p, &ps).unwrap();
        let hs = (0..k).map(|u| r.h_user(u).clone()).collect();
        (g, hs)
    }

    #[test]
    fn diagonal_channel_svd() {
        let h = CMat::from_fn(3, 3, |i, j| {
            if i == j {
                C64::new([3.0, 2.0, 1.0][i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let set = svd_beamformers_su(&h, 2).unwrap();
        assert!((set.lambda[0] - 3.0).abs() < 1e-12);
        assert!((set.lambda[1] - 2.0).abs() < 1e-12);
        // with the real-positive phase convention the vectors are exactly
        // identity columns
        let want = CMat::from_fn(3, 2, |i, j| {
            if i == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        assert!((&set.tx - &want).norm() < 1e-12);
    }

    #[test]
    fn permutation_channel_has_unit_gains() {
        let h = CMat::from_fn(2, 2, |i, j| {
            if i != j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let set = svd_beamformers_su(&h, 2).unwrap();
        assert!((set.lambda[0] - 1.0).abs() < 1e-12);
        assert!((set.lambda[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn effective_channel_is_diagonal() {
        let mut rng = SeedStream::new(91).rng();
        let h = CMat::from_fn(12, 20, |_, _| rng.crandn());
        let set = svd_beamformers_su(&h, 4).unwrap();
        let effective = set.rx.adjoint() * &h * &set.tx;
        let lead = set.lambda[0];
        assert!(linalg::max_off_diagonal(&effective) < 1e-10 * lead);
        for s in 0..4 {
            assert!((effective[(s, s)].re - set.lambda[s]).abs() < 1e-10 * lead);
        }
        // unitarity
        let eye = CMat::identity(4, 4);
        assert!((set.tx.adjoint() * &set.tx - &eye).norm() < 1e-10);
        assert!((set.rx.adjoint() * &set.rx - &eye).norm() < 1e-10);
    }

    #[test]
    fn stream_count_beyond_rank_names_the_rank() {
        let mut rng = SeedStream::new(92).rng();
        let a = CMat::from_fn(8, 2, |_, _| rng.crandn());
        let b = CMat::from_fn(2, 10, |_, _| rng.crandn());
        let h = a * b; // rank 2
        match svd_beamformers_su(&h, 5) {
            Err(Error::StreamCountExceedsRank { requested: 5, rank: 2 }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn single_user_report_is_clean() {
        let mut rng = SeedStream::new(93).rng();
        let h = CMat::from_fn(8, 8, |_, _| rng.crandn());
        let set = svd_beamformers_su(&h, 3).unwrap();
        let report = effective_channel_report_su(&set, &h);
        assert!(report.intersymbol_ratio() < 1e-20);
        assert_eq!(report.interuser_leakage, 0.0);
        for (g, l) in report.desired_gains.iter().zip(&set.lambda) {
            assert!((g - l).abs() < 1e-12);
        }
    }

    #[test]
    fn hybrid_bd_separates_users() {
        let (g, hs) = mu_setup(2, 2, 16, 8, 2, 3, 500);
        let set = hybrid_bd_mu(&hs, &g).unwrap();
        let reports = effective_channel_report_mu(&set.w_rf, &set.w_bb, &set.f_rf, &set.f_bb, &hs, 2);
        for (k, r) in reports.iter().enumerate() {
            assert!(r.interuser_ratio() < 1e-18, "user {k}: {}", r.interuser_ratio());
            assert!(r.intersymbol_ratio() < 1e-18, "user {k}: {}", r.intersymbol_ratio());
            // stored sigma equals realized diagonal
            for (a, b) in r.desired_gains.iter().zip(&set.sigma[k]) {
                assert!((a - b).abs() < 1e-10 * set.sigma[k][0]);
            }
        }
    }

    #[test]
    fn hybrid_bd_power_constraint() {
        let (g, hs) = mu_setup(2, 3, 16, 8, 2, 2, 501);
        let set = hybrid_bd_mu(&hs, &g).unwrap();
        let product = &set.f_rf * &set.f_bb;
        for i in 0..product.ncols() {
            assert!((product.column(i).norm() - 1.0).abs() < 1e-12, "column {i}");
        }
        assert!((linalg::fro_norm_sqr(&product) - (3 * 2) as f64).abs() < 1e-10);
    }

    #[test]
    fn hybrid_bd_factors_are_orthonormal() {
        let (g, hs) = mu_setup(2, 2, 16, 8, 2, 2, 502);
        let set = hybrid_bd_mu(&hs, &g).unwrap();
        let eye_rf = CMat::identity(g.n_t_rf, g.n_t_rf);
        assert!((set.f_rf.adjoint() * &set.f_rf - eye_rf).norm() < 1e-10);
        for k in 0..2 {
            let eye_r = CMat::identity(g.n_r_rf, g.n_r_rf);
            assert!((set.w_rf[k].adjoint() * &set.w_rf[k] - eye_r).norm() < 1e-10);
            let eye_s = CMat::identity(g.n_s, g.n_s);
            assert!((set.w_bb[k].adjoint() * &set.w_bb[k] - eye_s).norm() < 1e-10);
        }
    }

    #[test]
    fn single_user_collapse_matches_digital_svd() {
        // K = 1 hybrid BD must reproduce the fully digital benchmark.
        let (g, hs) = mu_setup(2, 1, 16, 8, 2, 3, 503);
        let set = hybrid_bd_mu(&hs, &g).unwrap();
        let digital = svd_beamformers_su(&hs[0], 2).unwrap();
        for s in 0..2 {
            let rel = (set.sigma[0][s] - digital.lambda[s]).abs() / digital.lambda[s];
            assert!(rel < 1e-6, "stream {s}: {} vs {}", set.sigma[0][s], digital.lambda[s]);
        }
    }

    #[test]
    fn sigma_is_non_increasing() {
        let (g, hs) = mu_setup(2, 2, 16, 8, 3, 4, 504);
        let set = hybrid_bd_mu(&hs, &g).unwrap();
        for user in &set.sigma {
            for w in user.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn infeasible_when_paths_cannot_carry_streams() {
        // One path per pair gives each user rank 2 < n_s = 3.
        let (g, hs) = mu_setup(2, 2, 16, 8, 3, 1, 505);
        match hybrid_bd_mu(&hs, &g) {
            Err(Error::InfeasibleConfiguration { user, .. }) => assert_eq!(user, 0),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn mismatched_precoder_leaks_between_users() {
        let (g, hs) = mu_setup(2, 2, 16, 8, 2, 3, 506);
        let set = hybrid_bd_mu(&hs, &g).unwrap();
        // Scramble the baseband precoder with a random unitary: nulls gone.
        let mut rng = SeedStream::new(907).rng();
        let scramble = linalg::svd(&CMat::from_fn(4, 4, |_, _| rng.crandn())).u;
        let f_bad = &set.f_bb * scramble;
        let reports =
            effective_channel_report_mu(&set.w_rf, &set.w_bb, &set.f_rf, &f_bad, &hs, 2);
        assert!(reports.iter().any(|r| r.interuser_ratio() > 1e-6));
    }

    #[test]
    fn beamformers_are_deterministic() {
        let (g, hs) = mu_setup(2, 2, 16, 8, 2, 2, 507);
        let a = hybrid_bd_mu(&hs, &g).unwrap();
        let b = hybrid_bd_mu(&hs, &g).unwrap();
        assert_eq!(a.f_rf, b.f_rf);
        assert_eq!(a.f_bb, b.f_bb);
        for k in 0..2 {
            assert_eq!(a.w_rf[k], b.w_rf[k]);
            assert_eq!(a.w_bb[k], b.w_bb[k]);
            assert_eq!(a.sigma[k], b.sigma[k]);
        }
    }

    #[test]
    fn rejects_wrong_rf_budget() {
        let (mut g, hs) = mu_setup(2, 2, 16, 8, 2, 2, 508);
        g.n_t_rf = 7;
        assert!(matches!(hybrid_bd_mu(&hs, &g), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn report_desired_gains_match_lambda_su() {
        let h = CMat::from_fn(2, 2, |i, j| {
            C64::new((2 * i + j) as f64 + 1.0, (i as f64) - 0.5)
        });
        let set = svd_beamformers_su(&h, 1).unwrap();
        let report = effective_channel_report_su(&set, &h);
        assert_eq!(report.desired_gains.len(), 1);
        assert!((report.desired_gains[0] - set.lambda[0]).abs() < 1e-12);
    }
}
