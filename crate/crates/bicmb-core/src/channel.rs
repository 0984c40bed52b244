//! Saleh-Valenzuela channel synthesis for distributed RAU geometries.
//!
//! A realization is built in three steps: draw per-pair path gains and
//! angles ([`draw_paths`]), form each subchannel matrix from ULA responses
//! ([`subchannel_matrix`]), and assemble the large-scale-weighted block
//! matrix ([`assemble_channel`]). All steps are pure functions of their
//! inputs; randomness enters only through the seed handed to `draw_paths`.

use crate::error::{Error, Result};
use crate::math;
use crate::rng::{Domain, SeedStream};
use crate::{CMat, CVec, C64};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Single-user (one receiver with `m_r` RAUs) or multi-user downlink
/// (K mobile stations, each a single RAU).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Mode {
    SingleUser,
    MultiUser,
}

/// Antenna, RAU, RF-chain, and stream counts for one scenario.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SystemGeometry {
    pub mode: Mode,
    /// Transmit RAU count (the multi-user M).
    pub m_t: usize,
    /// Receive RAU count; 1 per user in multi-user mode.
    pub m_r: usize,
    /// Antennas per transmit RAU.
    pub n_t: usize,
    /// Antennas per receive RAU.
    pub n_r: usize,
    /// Number of users (1 in single-user mode).
    pub k: usize,
    /// Data streams per receiver.
    pub n_s: usize,
    /// Transmit RF chains.
    pub n_t_rf: usize,
    /// Receive RF chains (per receiver).
    pub n_r_rf: usize,
    /// ULA element spacing in wavelengths.
    pub d_lambda: f64,
}

impl SystemGeometry {
    /// Single-user geometry with the usual defaults: twice the stream count
    /// in RF chains on both sides, half-wavelength spacing.
    pub fn single_user(m_t: usize, m_r: usize, n_t: usize, n_r: usize, n_s: usize) -> Self {
        SystemGeometry {
            mode: Mode::SingleUser,
            m_t,
            m_r,
            n_t,
            n_r,
            k: 1,
            n_s,
            n_t_rf: 2 * n_s,
            n_r_rf: 2 * n_s,
            d_lambda: 0.5,
        }
    }

    /// Multi-user geometry: `m` transmit RAUs serving `k` single-RAU users,
    /// with double the least number of RF chains on both sides.
    pub fn multi_user(m: usize, k: usize, n_t: usize, n_r: usize, n_s: usize) -> Self {
        SystemGeometry {
            mode: Mode::MultiUser,
            m_t: m,
            m_r: 1,
            n_t,
            n_r,
            k,
            n_s,
            n_t_rf: 2 * k * n_s,
            n_r_rf: 2 * n_s,
            d_lambda: 0.5,
        }
    }

    /// Rows of the profile matrices: receive RAUs (SU) or users (MU).
    pub fn profile_rows(&self) -> usize {
        match self.mode {
            Mode::SingleUser => self.m_r,
            Mode::MultiUser => self.k,
        }
    }

    /// Columns of the profile matrices: transmit RAUs.
    pub fn profile_cols(&self) -> usize {
        self.m_t
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("m_t", self.m_t),
            ("m_r", self.m_r),
            ("n_t", self.n_t),
            ("n_r", self.n_r),
            ("k", self.k),
            ("n_s", self.n_s),
            ("n_t_rf", self.n_t_rf),
            ("n_r_rf", self.n_r_rf),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if self.d_lambda.is_nan() || self.d_lambda <= 0.0 {
            return Err(Error::InvalidArgument(String::from("d_lambda must be positive")));
        }
        match self.mode {
            Mode::SingleUser if self.k != 1 => {
                return Err(Error::InvalidArgument(String::from(
                    "single-user mode requires k = 1",
                )));
            }
            Mode::MultiUser if self.m_r != 1 => {
                return Err(Error::InvalidArgument(String::from(
                    "multi-user mode models one RAU per user (m_r = 1)",
                )));
            }
            _ => {}
        }
        // RF-chain constraints: N_s <= N_r^RF <= N_r and K N_s <= N_t^RF <= M_t N_t.
        if self.n_r_rf < self.n_s || self.n_r_rf > self.n_r {
            return Err(Error::InvalidArgument(format!(
                "receive RF chains must satisfy n_s <= n_r_rf <= n_r (got n_r_rf = {}, n_s = {}, n_r = {})",
                self.n_r_rf, self.n_s, self.n_r
            )));
        }
        if self.n_t_rf < self.k * self.n_s || self.n_t_rf > self.m_t * self.n_t {
            return Err(Error::InvalidArgument(format!(
                "transmit RF chains must satisfy k*n_s <= n_t_rf <= m_t*n_t (got n_t_rf = {})",
                self.n_t_rf
            )));
        }
        Ok(())
    }
}

/// Per-pair path counts and large-scale coefficients (in dB).
///
/// Rows index receive RAUs (single-user) or users (multi-user); columns
/// index transmit RAUs. `-inf` dB zeroes a block.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FadingProfile {
    l: Vec<Vec<u32>>,
    beta_db: Vec<Vec<f64>>,
}

impl FadingProfile {
    pub fn new(l: Vec<Vec<u32>>, beta_db: Vec<Vec<f64>>) -> Result<Self> {
        if l.is_empty() || l[0].is_empty() {
            return Err(Error::InvalidArgument(String::from("profile must be non-empty")));
        }
        let cols = l[0].len();
        if l.iter().any(|row| row.len() != cols) {
            return Err(Error::InvalidArgument(String::from("path-count matrix is ragged")));
        }
        if beta_db.len() != l.len() || beta_db.iter().any(|row| row.len() != cols) {
            return Err(Error::DimensionMismatch {
                what: "beta_db",
                expected: format!("{}x{}", l.len(), cols),
                actual: format!(
                    "{}x{}",
                    beta_db.len(),
                    beta_db.first().map_or(0, Vec::len)
                ),
            });
        }
        if l.iter().flatten().any(|&v| v == 0) {
            return Err(Error::InvalidArgument(String::from("every path count must be >= 1")));
        }
        if beta_db
            .iter()
            .flatten()
            .any(|&b| b.is_nan() || b == f64::INFINITY)
        {
            return Err(Error::InvalidArgument(String::from(
                "beta_db entries must be finite or -inf",
            )));
        }
        Ok(FadingProfile { l, beta_db })
    }

    /// Constant path count and coefficient across all pairs.
    pub fn homogeneous(rows: usize, cols: usize, l: u32, beta_db: f64) -> Self {
        FadingProfile::new(
            alloc::vec![alloc::vec![l; cols]; rows],
            alloc::vec![alloc::vec![beta_db; cols]; rows],
        )
        .expect("homogeneous profile is well-formed")
    }

    pub fn rows(&self) -> usize {
        self.l.len()
    }

    pub fn cols(&self) -> usize {
        self.l[0].len()
    }

    pub fn l(&self, i: usize, j: usize) -> u32 {
        self.l[i][j]
    }

    pub fn beta_db(&self, i: usize, j: usize) -> f64 {
        self.beta_db[i][j]
    }

    /// Large-scale coefficient in linear units.
    pub fn beta(&self, i: usize, j: usize) -> f64 {
        math::db_to_linear(self.beta_db[i][j])
    }

    /// Checks the profile dimensions against a geometry.
    pub fn check_dims(&self, geometry: &SystemGeometry) -> Result<()> {
        let (want_r, want_c) = (geometry.profile_rows(), geometry.profile_cols());
        if self.rows() != want_r || self.cols() != want_c {
            return Err(Error::DimensionMismatch {
                what: "fading profile",
                expected: format!("{want_r}x{want_c}"),
                actual: format!("{}x{}", self.rows(), self.cols()),
            });
        }
        Ok(())
    }

    /// Total path count over all pairs in row `i`.
    pub fn row_paths(&self, i: usize) -> usize {
        self.l[i].iter().map(|&v| v as usize).sum()
    }
}

/// Number of available subchannels: the sum of all per-pair path counts.
pub fn theoretical_rank(profile: &FadingProfile) -> usize {
    (0..profile.rows()).map(|i| profile.row_paths(i)).sum()
}

/// Per-user available subchannels in multi-user mode (row sums).
pub fn theoretical_rank_per_user(profile: &FadingProfile) -> Vec<usize> {
    (0..profile.rows()).map(|i| profile.row_paths(i)).collect()
}

/// Path gains and angles for one (receive, transmit) RAU pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPaths {
    /// Complex gains, CN(0,1) with unit second moment.
    pub gains: Vec<C64>,
    /// Azimuth angles of arrival, radians in [-pi/2, pi/2].
    pub aoa: Vec<f64>,
    /// Azimuth angles of departure, radians in [-pi/2, pi/2].
    pub aod: Vec<f64>,
}

/// All path draws for a realization, indexed by (row, column) RAU pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    rows: usize,
    cols: usize,
    pairs: Vec<PairPaths>,
    seed_key: u64,
}

impl PathSet {
    /// Builds a path set from explicit per-pair draws (row-major order).
    pub fn from_pairs(rows: usize, cols: usize, pairs: Vec<PairPaths>) -> Result<Self> {
        if pairs.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "path set",
                expected: format!("{} pairs", rows * cols),
                actual: format!("{}", pairs.len()),
            });
        }
        for p in &pairs {
            if p.gains.len() != p.aoa.len() || p.gains.len() != p.aod.len() {
                return Err(Error::InvalidArgument(String::from(
                    "gain and angle counts differ within a pair",
                )));
            }
        }
        Ok(PathSet {
            rows,
            cols,
            pairs,
            seed_key: 0,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pair(&self, i: usize, j: usize) -> &PairPaths {
        &self.pairs[i * self.cols + j]
    }

    pub fn seed_key(&self) -> u64 {
        self.seed_key
    }

    /// Checks that path counts agree with a profile.
    pub fn check_profile(&self, profile: &FadingProfile) -> Result<()> {
        if self.rows != profile.rows() || self.cols != profile.cols() {
            return Err(Error::DimensionMismatch {
                what: "path set",
                expected: format!("{}x{}", profile.rows(), profile.cols()),
                actual: format!("{}x{}", self.rows, self.cols),
            });
        }
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.pair(i, j).gains.len() != profile.l(i, j) as usize {
                    return Err(Error::InvalidArgument(format!(
                        "pair ({i},{j}) has {} paths, profile says {}",
                        self.pair(i, j).gains.len(),
                        profile.l(i, j)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// ULA response vector: entry n is exp(j 2 pi d n sin(phi)) / sqrt(N).
pub fn ula_response(phi: f64, n: usize, d_lambda: f64) -> Result<CVec> {
    if n == 0 {
        return Err(Error::InvalidArgument(String::from(
            "ULA response needs at least one element",
        )));
    }
    let scale = 1.0 / math::sqrt(n as f64);
    let step = 2.0 * core::f64::consts::PI * d_lambda * math::sin(phi);
    Ok(CVec::from_fn(n, |i, _| {
        let ph = step * i as f64;
        C64::new(scale * math::cos(ph), scale * math::sin(ph))
    }))
}

/// Draws i.i.d. CN(0,1) gains and uniform angles for every RAU pair.
///
/// Each pair uses its own derived stream, so draws are identical no matter
/// how pairs are iterated or scheduled.
pub fn draw_paths(profile: &FadingProfile, seed: SeedStream) -> PathSet {
    let rows = profile.rows();
    let cols = profile.cols();
    let mut pairs = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let mut rng = seed
                .domain(Domain::Paths)
                .with(i as u64)
                .with(j as u64)
                .rng();
            let l = profile.l(i, j) as usize;
            let mut gains = Vec::with_capacity(l);
            let mut aoa = Vec::with_capacity(l);
            let mut aod = Vec::with_capacity(l);
            for _ in 0..l {
                gains.push(rng.crandn());
                aoa.push(rng.uniform_in(-core::f64::consts::FRAC_PI_2, core::f64::consts::FRAC_PI_2));
                aod.push(rng.uniform_in(-core::f64::consts::FRAC_PI_2, core::f64::consts::FRAC_PI_2));
            }
            pairs.push(PairPaths { gains, aoa, aod });
        }
    }
    PathSet {
        rows,
        cols,
        pairs,
        seed_key: seed.key(),
    }
}

/// Normalized subchannel matrix:
/// sqrt(N_t N_r / L) * sum_l alpha_l a_r(theta_l) a_t(phi_l)^H.
pub fn subchannel_matrix(paths: &PairPaths, n_r: usize, n_t: usize, d_lambda: f64) -> CMat {
    let l = paths.gains.len();
    let mut h = CMat::zeros(n_r, n_t);
    if l == 0 {
        return h;
    }
    let scale = math::sqrt((n_t * n_r) as f64 / l as f64);
    for ((&alpha, &theta), &phi) in paths.gains.iter().zip(&paths.aoa).zip(&paths.aod) {
        let ar = ula_response(theta, n_r, d_lambda).expect("n_r >= 1");
        let at = ula_response(phi, n_t, d_lambda).expect("n_t >= 1");
        let w = alpha * scale;
        for c in 0..n_t {
            let atc = at[c].conj() * w;
            for r in 0..n_r {
                h[(r, c)] += ar[r] * atc;
            }
        }
    }
    h
}

/// Assembled channel: one block matrix in single-user mode, one row-block
/// matrix per user in multi-user mode.
#[derive(Debug, Clone)]
pub enum ChannelMatrix {
    Single(CMat),
    PerUser(Vec<CMat>),
}

/// A complete channel draw: the paths it was built from, the assembled
/// matrices, and the seed that produced it.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub geometry: SystemGeometry,
    pub paths: PathSet,
    pub matrix: ChannelMatrix,
    pub seed_key: u64,
}

impl ChannelRealization {
    /// The single-user channel matrix. Panics in multi-user mode.
    pub fn h(&self) -> &CMat {
        match &self.matrix {
            ChannelMatrix::Single(h) => h,
            ChannelMatrix::PerUser(_) => panic!("multi-user realization; use h_user"),
        }
    }

    /// User `k`'s row-block channel. Panics in single-user mode.
    pub fn h_user(&self, k: usize) -> &CMat {
        match &self.matrix {
            ChannelMatrix::PerUser(hs) => &hs[k],
            ChannelMatrix::Single(_) => panic!("single-user realization; use h"),
        }
    }

    pub fn per_user(&self) -> &[CMat] {
        match &self.matrix {
            ChannelMatrix::PerUser(hs) => hs,
            ChannelMatrix::Single(_) => core::slice::from_ref(match &self.matrix {
                ChannelMatrix::Single(h) => h,
                _ => unreachable!(),
            }),
        }
    }

    /// Draws paths and assembles in one step, recording the seed.
    pub fn generate(
        geometry: &SystemGeometry,
        profile: &FadingProfile,
        seed: SeedStream,
    ) -> Result<Self> {
        let paths = draw_paths(profile, seed);
        assemble_channel(geometry, profile, &paths)
    }
}

/// Assembles the large-scale-weighted block channel from per-pair paths.
pub fn assemble_channel(
    geometry: &SystemGeometry,
    profile: &FadingProfile,
    paths: &PathSet,
) -> Result<ChannelRealization> {
    geometry.validate()?;
    profile.check_dims(geometry)?;
    paths.check_profile(profile)?;
    let (n_r, n_t, d) = (geometry.n_r, geometry.n_t, geometry.d_lambda);

    let block = |i: usize, j: usize| -> CMat {
        let b = profile.beta(i, j);
        if b == 0.0 {
            return CMat::zeros(n_r, n_t);
        }
        subchannel_matrix(paths.pair(i, j), n_r, n_t, d) * C64::new(math::sqrt(b), 0.0)
    };

    let matrix = match geometry.mode {
        Mode::SingleUser => {
            let mut h = CMat::zeros(geometry.m_r * n_r, geometry.m_t * n_t);
            for i in 0..geometry.m_r {
                for j in 0..geometry.m_t {
                    h.view_mut((i * n_r, j * n_t), (n_r, n_t)).copy_from(&block(i, j));
                }
            }
            ChannelMatrix::Single(h)
        }
        Mode::MultiUser => {
            let mut users = Vec::with_capacity(geometry.k);
            for k in 0..geometry.k {
                let mut hk = CMat::zeros(n_r, geometry.m_t * n_t);
                for j in 0..geometry.m_t {
                    hk.view_mut((0, j * n_t), (n_r, n_t)).copy_from(&block(k, j));
                }
                users.push(hk);
            }
            ChannelMatrix::PerUser(users)
        }
    };

    Ok(ChannelRealization {
        geometry: geometry.clone(),
        paths: paths.clone(),
        matrix,
        seed_key: paths.seed_key(),
    })
}
