//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (run with `--nocapture` to see them). The Monte Carlo criteria are
//! deterministic: fixed seeds, fixed grids, thread-count-invariant engine.

use bicmb::config::ConfigFile;
use bicmb::engine;
use bicmb::output;
use bicmb_core::analysis::{
    channel_energy, default_slope_window, fit_diversity_slope, gamma_approx_mu, gamma_approx_su,
    BerCurve,
};
use bicmb_core::channel::{draw_paths, subchannel_matrix, ChannelRealization, FadingProfile, SystemGeometry};
use bicmb_core::codec::{conv_encode, distance_spectrum, viterbi_decode, CodeSpec};
use bicmb_core::interleaver::{build_interleaver, validate_interleaver, BitPosition, InterleaverPlan};
use bicmb_core::linalg;
use bicmb_core::modulation::{map_symbols, ml_bit_metric, ModulationSpec};
use bicmb_core::rng::SeedStream;
use bicmb_core::sim::{Link, SimConfig};
use bicmb_core::{C64, Error};
use std::sync::OnceLock;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {id:2} {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} {name}: {detail}");
}

fn su_config(text: &str) -> SimConfig {
    ConfigFile::from_str(text).unwrap().resolve().unwrap()
}

// ---------------------------------------------------------------- 1

#[test]
fn criterion_01_closed_form_diversity() {
    // Homogeneous 2x2, L = 2: D_G = M_r M_t L = 8, exact.
    let homog = su_config(
        r#"
mode = "single-user"
[geometry]
m_t = 2
m_r = 2
n_t = 64
n_r = 32
n_s = 1
[profile]
l = 2
"#,
    );
    let d_homog = engine::diversity_table(&homog).unwrap().entries[0].diversity_gain;

    // B3 profile: recompute the shape from the dB entries independently.
    let b3 = su_config(
        r#"
mode = "single-user"
[geometry]
m_t = 2
m_r = 2
n_t = 64
n_r = 32
n_s = 1
[profile]
l = 2
beta_db = [[-20.0, -35.0], [-35.0, -20.0]]
"#,
    );
    let d_b3 = engine::diversity_table(&b3).unwrap().entries[0].diversity_gain;
    let strong = 10f64.powf(-2.0);
    let weak = 10f64.powf(-3.5);
    let independent = {
        let sum_beta = 2.0 * (strong + weak);
        let sum_b2l = (2.0 * strong * strong + 2.0 * weak * weak) / 2.0;
        sum_beta * sum_beta / sum_b2l
    };

    // Multi-user homogeneous rows: kappa = M L, exact, for two cases.
    let mu = |l: u32| {
        let p = FadingProfile::homogeneous(2, 2, l, -20.0);
        gamma_approx_mu(&p, 0).unwrap().shape
    };

    let pass = (d_homog - 8.0).abs() < 1e-12
        && (d_b3 - independent).abs() < 1e-12
        && (d_b3 - 4.26).abs() < 0.01
        && (mu(2) - 4.0).abs() < 1e-12
        && (mu(9) - 18.0).abs() < 1e-12;
    report(
        1,
        "closed-form diversity",
        pass,
        &format!("homog {d_homog:.12}, B3 {d_b3:.6} vs independent {independent:.6}, MU ML exact"),
    );
}

// ---------------------------------------------------------------- 2

#[test]
fn criterion_02_rank_and_spectrum() {
    let mut pass = true;
    let mut detail = String::new();
    for (n_t, n_r) in [(64usize, 32usize), (128, 64)] {
        let geometry = SystemGeometry::single_user(2, 2, n_t, n_r, 1);
        let profile = FadingProfile::homogeneous(2, 2, 2, -20.0);
        let mut worst_tail = 0.0f64;
        let mut ranks_ok = true;
        for t in 0..100u64 {
            let r = ChannelRealization::generate(&geometry, &profile, SeedStream::new(777).with(t))
                .unwrap();
            let dec = linalg::svd(r.h());
            let s = dec.s.as_slice();
            ranks_ok &= linalg::numerical_rank(s) == 8;
            for &x in &s[8..] {
                worst_tail = worst_tail.max(x / s[0]);
            }
        }
        pass &= ranks_ok && worst_tail < 1e-8;
        detail.push_str(&format!(
            "N_t={n_t}: rank8 all={ranks_ok}, max tail ratio {worst_tail:.2e}; "
        ));
    }
    report(2, "rank independent of antennas", pass, &detail);
}

// ---------------------------------------------------------------- 3

#[test]
fn criterion_03_singular_value_convergence() {
    let profile = FadingProfile::homogeneous(1, 1, 3, 0.0);
    let median_err = |n_t: usize| {
        let mut errs: Vec<f64> = Vec::new();
        for t in 0..200u64 {
            let ps = draw_paths(&profile, SeedStream::new(901).with(t));
            let h = subchannel_matrix(ps.pair(0, 0), 64, n_t, 0.5);
            let dec = linalg::svd(&h);
            let scale = ((64 * n_t) as f64 / 3.0).sqrt();
            let mut want: Vec<f64> = ps.pair(0, 0).gains.iter().map(|g| scale * g.norm()).collect();
            want.sort_by(|a, b| b.partial_cmp(a).unwrap());
            for (got, wanted) in dec.s.iter().take(3).zip(&want) {
                errs.push((got - wanted).abs() / wanted);
            }
        }
        errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        errs[errs.len() / 2]
    };
    let med_64 = median_err(64);
    let med_256 = median_err(256);
    let pass = med_256 < 0.10 && med_256 < med_64;
    report(
        3,
        "singular-value convergence",
        pass,
        &format!("median rel err: N_t=64 {med_64:.4}, N_t=256 {med_256:.4}"),
    );
}

// ---------------------------------------------------------------- 4

#[test]
fn criterion_04_theta_statistics() {
    let geometry = SystemGeometry::single_user(2, 2, 64, 32, 1);
    let profile = FadingProfile::homogeneous(2, 2, 2, -20.0);
    let n = 10_000u64;
    let norm = (geometry.n_r * geometry.n_t) as f64;
    let samples: Vec<f64> = (0..n)
        .map(|t| {
            let r = ChannelRealization::generate(&geometry, &profile, SeedStream::new(902).with(t))
                .unwrap();
            channel_energy(r.h()) / norm
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    let shape = mean * mean / var;
    let pass = (shape - 8.0).abs() / 8.0 < 0.10;
    report(
        4,
        "channel-energy Gamma shape",
        pass,
        &format!("sample shape {shape:.3} vs 8"),
    );
}

// ---------------------------------------------------------------- 5

#[test]
fn criterion_05_mgf_oracle() {
    let geometry = SystemGeometry::single_user(2, 2, 64, 32, 1);
    let profiles = [
        ("homogeneous", FadingProfile::homogeneous(2, 2, 2, -20.0)),
        (
            "B3",
            FadingProfile::new(
                vec![vec![2, 2], vec![2, 2]],
                vec![vec![-20.0, -35.0], vec![-35.0, -20.0]],
            )
            .unwrap(),
        ),
    ];
    let mut pass = true;
    let mut detail = String::new();
    for (name, profile) in profiles {
        let gamma = gamma_approx_su(&profile).unwrap().scaled(32.0 * 64.0);
        let samples: Vec<f64> = (0..100_000u64)
            .map(|t| {
                let r =
                    ChannelRealization::generate(&geometry, &profile, SeedStream::new(903).with(t))
                        .unwrap();
                channel_energy(r.h())
            })
            .collect();
        // three c values spanning three decades
        for scale in [5e-4, 1.5811e-2, 0.5] {
            let c = scale / gamma.scale;
            let sampled = samples.iter().map(|&t| (-c * t).exp()).sum::<f64>() / samples.len() as f64;
            let closed = gamma.mgf_neg(c);
            let rel = (sampled - closed).abs() / closed;
            pass &= rel < 0.05;
            detail.push_str(&format!("{name} c*theta={scale:.1e}: {rel:.4}; "));
        }
    }
    report(5, "MGF bound oracle", pass, &detail);
}

// ---------------------------------------------------------------- 6

/// One codec frame: synthetic subchannel gains, real interleaver, metrics,
/// and both decoders.
fn codec_frame_matches_ml(
    code: &CodeSpec,
    codewords: &[Vec<u8>],
    plan: &InterleaverPlan,
    n_s: usize,
    word: u32,
    noise_scale: f64,
) -> bool {
    let info_len = 12;
    let info: Vec<u8> = (0..info_len).map(|i| ((word >> i) & 1) as u8).collect();
    let coded = conv_encode(&info, code);
    let spec = ModulationSpec::Bpsk;
    let mut rng = SeedStream::new(904).with(word as u64).rng();
    let gains: Vec<f64> = (0..n_s).map(|_| 0.2 + rng.crandn().norm()).collect();
    let tx = plan.interleave(&coded);
    let streams = map_symbols(&tx, &spec, n_s).unwrap();
    let mut received: Vec<Vec<C64>> = Vec::new();
    for (s, stream) in streams.iter().enumerate() {
        received.push(
            stream
                .iter()
                .map(|&x| x * gains[s] + rng.cnoise(noise_scale))
                .collect(),
        );
    }
    let metric = |k: usize, b: u8| {
        let p = plan.position(k);
        ml_bit_metric(
            received[p.s as usize][p.k as usize],
            gains[p.s as usize],
            p.i as usize,
            b,
            &spec,
        )
    };
    let metrics: Vec<[f64; 2]> = (0..coded.len()).map(|k| [metric(k, 0), metric(k, 1)]).collect();
    let viterbi = viterbi_decode(&metrics, code).unwrap();

    // exhaustive ML over all 2^12 codewords
    let mut best = f64::INFINITY;
    let mut best_word = 0usize;
    for (w, cw) in codewords.iter().enumerate() {
        let cost: f64 = cw.iter().enumerate().map(|(k, &b)| metrics[k][b as usize]).sum();
        if cost < best {
            best = cost;
            best_word = w;
        }
    }
    let ml: Vec<u8> = (0..info_len).map(|i| ((best_word >> i) & 1) as u8).collect();
    viterbi == ml
}

#[test]
fn criterion_06_codec_exactness() {
    let code = CodeSpec::standard();
    let spectrum = distance_spectrum(&code, 12).unwrap();
    let d_free_ok = spectrum[0].d == 10;

    let info_len = 12usize;
    let codewords: Vec<Vec<u8>> = (0..1u32 << info_len)
        .map(|w| {
            let bits: Vec<u8> = (0..info_len).map(|i| ((w >> i) & 1) as u8).collect();
            conv_encode(&bits, &code)
        })
        .collect();
    let coded_len = code.coded_len(info_len);

    let mut ml_ok = true;
    for n_s in [1usize, 2] {
        let plan = build_interleaver(
            coded_len,
            n_s,
            &ModulationSpec::Bpsk,
            10,
            SeedStream::new(905).with(n_s as u64),
        )
        .unwrap();
        for word in 0..1u32 << info_len {
            if !codec_frame_matches_ml(&code, &codewords, &plan, n_s, word, 0.8) {
                ml_ok = false;
                break;
            }
        }
    }

    // noiseless exact recovery over 10^3 random frames through the full link
    let cfg = su_config(
        r#"
mode = "single-user"
seed = 906
[geometry]
n_t = 64
n_r = 32
n_s = 2
[profile]
l = 2
[sim]
snr_db = [400.0]
"#,
    );
    let link = Link::new(cfg).unwrap();
    let mut noiseless_ok = true;
    for f in 0..1000u64 {
        if link.run_frame(0, f).unwrap().total_errors() != 0 {
            noiseless_ok = false;
            break;
        }
    }

    let pass = d_free_ok && ml_ok && noiseless_ok;
    report(
        6,
        "codec exactness",
        pass,
        &format!("d_free=10 {d_free_ok}, viterbi==ML over 2x4096 frames {ml_ok}, noiseless {noiseless_ok}"),
    );
}

// ---------------------------------------------------------------- 7

#[test]
fn criterion_07_interleaver_criteria() {
    let spec = ModulationSpec::Bpsk;
    let mut built_ok = true;
    for n_s in [1usize, 2, 3, 6] {
        let bits = 252; // the default frame's coded length, divisible by all
        let plan = build_interleaver(bits, n_s, &spec, 10, SeedStream::new(907)).unwrap();
        built_ok &= validate_interleaver(&plan).all_ok();
    }

    let rejected = match build_interleaver(264, 11, &spec, 10, SeedStream::new(907)) {
        Err(e @ Error::InterleaverConstraint { .. }) => format!("{e}").contains("d_free >= N_s"),
        _ => false,
    };

    // the same-subchannel failure mode: consecutive bits ride one stream
    let n_s = 3;
    let t = 84;
    let blocked: Vec<BitPosition> = (0..n_s * t)
        .map(|k| BitPosition {
            k: (k % t) as u32,
            s: (k / t) as u32,
            i: 0,
        })
        .collect();
    let bad = InterleaverPlan::from_mapping(n_s, 1, t, blocked);
    let bad_report = validate_interleaver(&bad);
    let blocked_fails = !bad_report.window_coverage && bad_report.bijection;

    let pass = built_ok && rejected && blocked_fails;
    report(
        7,
        "interleaver criteria",
        pass,
        &format!("built ok {built_ok}, n_s=11 rejected {rejected}, blocked plan fails {blocked_fails}"),
    );
}

// ---------------------------------------------------------------- 8

#[test]
fn criterion_08_multi_user_separation() {
    let mut pass = true;
    let mut detail = String::new();
    for n_s in [1usize, 3] {
        let geometry = SystemGeometry::multi_user(2, 2, 64, 16, n_s);
        let profile = FadingProfile::homogeneous(2, 2, 2, -20.0);
        let mut worst_interuser = 0.0f64;
        let mut worst_intersym = 0.0f64;
        for t in 0..100u64 {
            let r = ChannelRealization::generate(&geometry, &profile, SeedStream::new(908).with(t))
                .unwrap();
            let hs: Vec<_> = (0..2).map(|k| r.h_user(k).clone()).collect();
            let set = bicmb_core::beamforming::hybrid_bd_mu(&hs, &geometry).unwrap();
            let reports = bicmb_core::beamforming::effective_channel_report_mu(
                &set.w_rf, &set.w_bb, &set.f_rf, &set.f_bb, &hs, n_s,
            );
            for rep in reports {
                // amplitude ratios: sqrt of the power ratios
                worst_interuser = worst_interuser.max(rep.interuser_ratio().sqrt());
                worst_intersym = worst_intersym.max(rep.intersymbol_ratio().sqrt());
            }
        }
        pass &= worst_interuser < 1e-9 && worst_intersym < 1e-9;
        detail.push_str(&format!(
            "n_s={n_s}: interuser {worst_interuser:.2e}, intersymbol {worst_intersym:.2e}; "
        ));
    }
    report(8, "multi-user separation", pass, &detail);
}

// ------------------------------------------------------------- 9/10

struct SlopeRun {
    config: SimConfig,
    curve: BerCurve,
    slope: f64,
}

fn slope_config(l: u32, n_s: usize, snr_db: &str, max_frames: u64) -> SimConfig {
    su_config(&format!(
        r#"
mode = "single-user"
seed = 42

[geometry]
n_t = 64
n_r = 32
n_s = {n_s}

[profile]
l = {l}

[sim]
snr_db = {snr_db}
max_frames = {max_frames}
target_bit_errors = 1200
"#
    ))
}

fn run_slope(cfg: SimConfig) -> SlopeRun {
    let link = Link::new(cfg.clone()).unwrap();
    let pool = engine::make_pool(0);
    let curves = engine::sweep(&link, &pool, "acceptance").unwrap();
    let curve = curves.into_iter().next().unwrap();
    let window = default_slope_window(&curve).expect("converged points exist");
    let fit = fit_diversity_slope(&curve, window).expect("fit succeeds");
    SlopeRun {
        config: cfg,
        curve,
        slope: fit.slope,
    }
}

fn slope_runs() -> &'static [SlopeRun; 3] {
    static RUNS: OnceLock<[SlopeRun; 3]> = OnceLock::new();
    RUNS.get_or_init(|| {
        [
            run_slope(slope_config(1, 1, "[30.0, 33.0, 36.0, 40.0]", 400_000)),
            run_slope(slope_config(2, 1, "[20.0, 23.0, 26.0]", 700_000)),
            run_slope(slope_config(2, 2, "[20.0, 23.0, 26.0]", 700_000)),
        ]
    })
}

#[test]
fn criterion_09_desk_scale_slopes() {
    let [a, b, c] = slope_runs();
    let min_errors = |run: &SlopeRun| {
        run.curve.points.iter().map(|p| p.bit_errors).min().unwrap_or(0)
    };
    let counts_ok = min_errors(a) >= 100 && min_errors(b) >= 100 && min_errors(c) >= 100;
    let ratio = b.slope / a.slope;
    let streams_rel = (c.slope - b.slope).abs() / b.slope;
    let pass = counts_ok && (1.5..=2.5).contains(&ratio) && streams_rel <= 0.25;
    report(
        9,
        "desk-scale diversity slopes",
        pass,
        &format!(
            "slope(L=1)={:.3}, slope(L=2)={:.3}, slope(L=2,N_s=2)={:.3}; ratio {ratio:.3}, stream rel {streams_rel:.3}",
            a.slope, b.slope, c.slope
        ),
    );
}

#[test]
fn criterion_10_bound_dominates_simulation() {
    let mut pass = true;
    let mut detail = String::new();
    for run in slope_runs() {
        let bound = engine::bound_curves(&run.config).unwrap();
        for (i, p) in run.curve.points.iter().enumerate() {
            if p.bit_errors < 100 {
                continue;
            }
            let ber = p.ber();
            // one-sided 99% binomial test: reject dominance only if the
            // measurement exceeds the bound by more than 2.326 sigma
            let sigma = (ber * (1.0 - ber) / p.bits as f64).sqrt();
            let b = bound.per_user[0][i];
            if ber > b + 2.326 * sigma {
                pass = false;
                detail.push_str(&format!("violation at {} dB: {ber:.3e} > {b:.3e}; ", p.snr_db));
            }
        }
    }
    if detail.is_empty() {
        detail = "bound >= measured BER at every converged point".into();
    }
    report(10, "union bound dominates", pass, &detail);
}

// ---------------------------------------------------------------- 11

#[test]
fn criterion_11_thread_count_determinism() {
    let cfg = su_config(
        r#"
mode = "single-user"
seed = 4242

[geometry]
n_t = 32
n_r = 16
n_s = 2

[profile]
l = 2

[sim]
snr_db = [0.0, 5.0, 10.0]
max_frames = 2000
target_bit_errors = 100
"#,
    );
    let link = Link::new(cfg).unwrap();
    let render = |threads: usize| {
        let pool = engine::make_pool(threads);
        let curves = engine::sweep(&link, &pool, "det").unwrap();
        output::render_ber_csv(&curves)
    };
    let one = render(1);
    let two = render(2);
    let four = render(4);
    let library_ok = one == two && one == four;

    // end to end through the binary with --threads
    let dir = std::env::temp_dir().join(format!("bicmb-acc-det-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let cfg_path = dir.join("det.toml");
    std::fs::write(
        &cfg_path,
        r#"
mode = "single-user"
seed = 4242

[geometry]
n_t = 32
n_r = 16
n_s = 2

[profile]
l = 2

[sim]
snr_db = [0.0, 5.0, 10.0]
max_frames = 2000
target_bit_errors = 100
"#,
    )
    .unwrap();
    let run_cli = |threads: &str, out: &str| {
        let out_dir = dir.join(out);
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_bicmb"))
            .arg("simulate")
            .arg(&cfg_path)
            .arg("--threads")
            .arg(threads)
            .arg("--out")
            .arg(&out_dir)
            .output()
            .unwrap();
        assert!(status.status.success());
        let run_dir = std::fs::read_dir(&out_dir).unwrap().next().unwrap().unwrap().path();
        std::fs::read(run_dir.join("curve.csv")).unwrap()
    };
    let csv1 = run_cli("1", "t1");
    let csv2 = run_cli("2", "t2");
    let cli_ok = csv1 == csv2;

    let pass = library_ok && cli_ok;
    report(
        11,
        "thread-count determinism",
        pass,
        &format!("library pools equal {library_ok}, CLI byte-identical {cli_ok}"),
    );
}
