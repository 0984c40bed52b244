//! `bicmb` — link-level BICMB simulation and analysis for distributed
//! mm-Wave massive MIMO scenarios.

use bicmb::config::{ConfigFile, SnrSpec};
use bicmb::output::{self, Manifest, RunDir};
use bicmb::{engine, CliError};
use bicmb_core::analysis::{default_slope_window, fit_diversity_slope};
use bicmb_core::sim::Link;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "bicmb", version, about = "BICMB link simulator for distributed mm-Wave massive MIMO")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario description (TOML).
    config: PathBuf,
    /// Output root; each run writes into <out>/<command>-<fingerprint>/.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Override the master seed from the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Monte Carlo BER sweep over the SNR grid.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Worker threads (0 = one per CPU). Never changes results.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Override the per-point frame cap.
        #[arg(long)]
        max_frames: Option<u64>,
        /// Override the SNR grid as start:stop:step (dB).
        #[arg(long)]
        snr: Option<String>,
    },
    /// Closed-form BER union-bound curves on the same grid.
    Bound {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        snr: Option<String>,
    },
    /// Closed-form diversity gains (Gamma shape per receiver).
    Diversity {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Singular-value spectra and numerical rank over realizations.
    ChannelStats {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 100)]
        realizations: usize,
    },
    /// Check the configured interleaver against the design criteria.
    ValidateInterleaver {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Fit the diversity slope of a sweep CSV.
    Slope {
        /// A curve.csv produced by `simulate`.
        csv: PathBuf,
        /// Fit window in dB as a:b; defaults to the top 10 dB with
        /// at least 100 errors per point.
        #[arg(long)]
        window: Option<String>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load(common: &CommonArgs) -> Result<ConfigFile, CliError> {
    let mut file = ConfigFile::from_path(&common.config)?;
    if let Some(seed) = common.seed {
        file.seed = seed;
    }
    Ok(file)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Simulate { common, threads, max_frames, snr } => {
            let started = Instant::now();
            let mut file = load(&common)?;
            if let Some(text) = &snr {
                file.sim.snr_db = SnrSpec::parse_cli(text)?;
            }
            if let Some(mf) = max_frames {
                file.sim.max_frames = mf;
            }
            let resolved = file.resolved()?;
            let fingerprint = file.fingerprint()?;
            let sim = file.resolve()?;
            let link = Link::new(sim)?;
            let pool = engine::make_pool(threads);
            let curves = engine::sweep(&link, &pool, &fingerprint)?;

            let dir = RunDir::create(&common.out, "simulate", &fingerprint)?;
            let csv_path = dir.write("curve.csv", &output::render_ber_csv(&curves))?;
            let mut manifest = Manifest::new("simulate", &fingerprint, file.seed, threads);
            manifest.config = serde_json::to_value(&resolved).expect("config to json");
            manifest.outputs = vec![csv_path.display().to_string()];
            manifest.wall_time_s = started.elapsed().as_secs_f64();
            dir.write_manifest(&manifest)?;
            for c in &curves {
                for p in &c.points {
                    println!(
                        "snr {:>6.1} dB  user {}  ber {:.3e}  ({} errors / {} bits{})",
                        p.snr_db,
                        c.user,
                        p.ber(),
                        p.bit_errors,
                        p.bits,
                        if p.converged { "" } else { ", unconverged" }
                    );
                }
            }
            println!("wrote {}", dir.path.display());
            Ok(())
        }
        Cmd::Bound { common, snr } => {
            let started = Instant::now();
            let mut file = load(&common)?;
            if let Some(text) = &snr {
                file.sim.snr_db = SnrSpec::parse_cli(text)?;
            }
            let resolved = file.resolved()?;
            let fingerprint = file.fingerprint()?;
            let data = engine::bound_curves(&file.resolve()?)?;
            let dir = RunDir::create(&common.out, "bound", &fingerprint)?;
            let csv_path = dir.write("bound.csv", &output::render_bound_csv(&data))?;
            let mut manifest = Manifest::new("bound", &fingerprint, file.seed, 1);
            manifest.config = serde_json::to_value(&resolved).expect("config to json");
            manifest.outputs = vec![csv_path.display().to_string()];
            manifest.wall_time_s = started.elapsed().as_secs_f64();
            dir.write_manifest(&manifest)?;
            println!(
                "union bound truncated at d <= {} written to {}",
                data.d_max,
                dir.path.display()
            );
            Ok(())
        }
        Cmd::Diversity { common } => {
            let started = Instant::now();
            let file = load(&common)?;
            let resolved = file.resolved()?;
            let fingerprint = file.fingerprint()?;
            let data = engine::diversity_table(&file.resolve()?)?;
            let dir = RunDir::create(&common.out, "diversity", &fingerprint)?;
            let json = serde_json::to_string_pretty(&data).expect("diversity to json");
            let path = dir.write("diversity.json", &json)?;
            let mut manifest = Manifest::new("diversity", &fingerprint, file.seed, 1);
            manifest.config = serde_json::to_value(&resolved).expect("config to json");
            manifest.outputs = vec![path.display().to_string()];
            manifest.wall_time_s = started.elapsed().as_secs_f64();
            dir.write_manifest(&manifest)?;
            for e in &data.entries {
                println!("user {}: diversity gain {:.4}", e.user, e.diversity_gain);
            }
            Ok(())
        }
        Cmd::ChannelStats { common, realizations } => {
            let started = Instant::now();
            let file = load(&common)?;
            let resolved = file.resolved()?;
            let fingerprint = file.fingerprint()?;
            let data = engine::channel_stats(&file.resolve()?, realizations)?;
            let dir = RunDir::create(&common.out, "channel-stats", &fingerprint)?;
            let csv_path = dir.write("singular_values.csv", &output::render_stats_csv(&data))?;
            #[derive(Serialize)]
            struct RankSummary<'a> {
                theoretical_rank: &'a [usize],
                rank_always_theoretical: bool,
                realizations: usize,
            }
            let summary = RankSummary {
                theoretical_rank: &data.theoretical_rank,
                rank_always_theoretical: data.rank_always_theoretical(),
                realizations,
            };
            let json_path = dir.write(
                "rank.json",
                &serde_json::to_string_pretty(&summary).expect("rank to json"),
            )?;
            let mut outputs = vec![csv_path.display().to_string(), json_path.display().to_string()];
            if let Some(diags) = &data.beamforming {
                let p = dir.write(
                    "beamforming.json",
                    &serde_json::to_string_pretty(diags).expect("diagnostics to json"),
                )?;
                outputs.push(p.display().to_string());
            }
            let mut manifest = Manifest::new("channel-stats", &fingerprint, file.seed, 1);
            manifest.config = serde_json::to_value(&resolved).expect("config to json");
            manifest.outputs = outputs;
            manifest.wall_time_s = started.elapsed().as_secs_f64();
            dir.write_manifest(&manifest)?;
            println!(
                "theoretical rank {:?}, always observed: {}",
                data.theoretical_rank,
                data.rank_always_theoretical()
            );
            Ok(())
        }
        Cmd::ValidateInterleaver { common } => {
            let started = Instant::now();
            let file = load(&common)?;
            let resolved = file.resolved()?;
            let fingerprint = file.fingerprint()?;
            let data = engine::interleaver_report(&file.resolve()?)?;
            let dir = RunDir::create(&common.out, "validate-interleaver", &fingerprint)?;
            let path = dir.write(
                "interleaver.json",
                &serde_json::to_string_pretty(&data).expect("interleaver to json"),
            )?;
            let mut manifest = Manifest::new("validate-interleaver", &fingerprint, file.seed, 1);
            manifest.config = serde_json::to_value(&resolved).expect("config to json");
            manifest.outputs = vec![path.display().to_string()];
            manifest.wall_time_s = started.elapsed().as_secs_f64();
            dir.write_manifest(&manifest)?;
            println!(
                "criterion1 {}  window_coverage {}  bijection {}",
                data.report.criterion1, data.report.window_coverage, data.report.bijection
            );
            if !data.report.all_ok() {
                return Err(CliError::Core(bicmb_core::Error::InvalidArgument(
                    "interleaver fails the design criteria".into(),
                )));
            }
            Ok(())
        }
        Cmd::Slope { csv, window, out } => {
            let started = Instant::now();
            let text = std::fs::read_to_string(&csv).map_err(CliError::io(csv.display().to_string()))?;
            let curves = output::parse_ber_csv(&text)?;
            let fingerprint = format!("{:016x}", output::fnv1a64(text.as_bytes()))[..12].to_string();
            #[derive(Serialize)]
            struct SlopeEntry {
                user: usize,
                window_db: (f64, f64),
                slope: f64,
                stderr: f64,
                points_used: usize,
            }
            let mut entries = Vec::new();
            for curve in &curves {
                let w = match &window {
                    Some(text) => {
                        let parts: Vec<&str> = text.split(':').collect();
                        if parts.len() != 2 {
                            return Err(CliError::Config(bicmb::ConfigError::Invalid(format!(
                                "--window expects a:b, got {text:?}"
                            ))));
                        }
                        let a: f64 = parts[0].parse().map_err(|e| {
                            CliError::Config(bicmb::ConfigError::Invalid(format!("--window: {e}")))
                        })?;
                        let b: f64 = parts[1].parse().map_err(|e| {
                            CliError::Config(bicmb::ConfigError::Invalid(format!("--window: {e}")))
                        })?;
                        (a, b)
                    }
                    None => default_slope_window(curve).ok_or_else(|| {
                        CliError::Core(bicmb_core::Error::InsufficientData(
                            "no point reaches 100 bit errors".into(),
                        ))
                    })?,
                };
                let fit = fit_diversity_slope(curve, w)?;
                entries.push(SlopeEntry {
                    user: curve.user,
                    window_db: w,
                    slope: fit.slope,
                    stderr: fit.stderr,
                    points_used: fit.points_used,
                });
            }
            let dir = RunDir::create(&out, "slope", &fingerprint)?;
            let path = dir.write(
                "slope.json",
                &serde_json::to_string_pretty(&entries).expect("slope to json"),
            )?;
            let mut manifest = Manifest::new("slope", &fingerprint, 0, 1);
            manifest.outputs = vec![path.display().to_string()];
            manifest.wall_time_s = started.elapsed().as_secs_f64();
            dir.write_manifest(&manifest)?;
            for e in &entries {
                println!(
                    "user {}: slope {:.4} +/- {:.4} over [{:.1}, {:.1}] dB ({} points)",
                    e.user, e.slope, e.stderr, e.window_db.0, e.window_db.1, e.points_used
                );
            }
            Ok(())
        }
    }
}
