//! Command-line front end: closed-loop simulation, controller comparison,
//! scan-matching utilities, and synthetic cloud generation.
//!
//! Exit codes: 0 success, 2 configuration or input-file error, 3 funnel
//! breach (latched emergency stop), 4 scan-match non-convergence.

use clap::{Parser, Subcommand};
use raidnav::config::RunConfig;
use raidnav::geometry::{
    cloud_from_csv, transform_cloud, Frame, PointCloud, Transform3D,
};
use raidnav::harness::{
    compute_metrics_with, fit_envelope, lyapunov_trace, run_pair, run_scenario, ControlLaw,
    MetricsReport, RunRecord, StabilityMetrics,
};
use raidnav::lidar::{build_voxel_map, scan_match, synthetic, Keyframe, MatchOptions};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_CONFIG: u8 = 2;
const EXIT_BREACH: u8 = 3;
const EXIT_NO_CONVERGENCE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "raidnav",
    about = "Skid-steer navigation and control sandbox: deterministic closed-loop runs, scan matching, and controller comparison"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the closed-loop scenario with the adaptive barrier controller and
    /// write trajectory CSV, controls CSV, metadata JSON, and metrics JSON.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the barrier controller and the frozen PID baseline on the same
    /// scenario and seed, and emit a side-by-side metrics table.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Align cloud A against cloud B (both `x,y,z` CSV) and print the
    /// recovered transform as JSON.
    ScanMatch {
        cloud_a: PathBuf,
        cloud_b: PathBuf,
        /// Initial transform guess: tx,ty,tz,roll,pitch,yaw
        #[arg(long, default_value = "0,0,0,0,0,0")]
        initial: String,
        /// Correspondence gate in meters.
        #[arg(long, default_value_t = 1.0)]
        gate: f64,
        /// Voxel size for the reference map.
        #[arg(long, default_value_t = 0.05)]
        voxel_size: f64,
    },
    /// Generate a synthetic cloud CSV.
    GenScan {
        #[arg(long, default_value_t = 500)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_parser = ["random", "room"], default_value = "random")]
        shape: String,
        /// Half extent of the random cube, meters.
        #[arg(long, default_value_t = 8.0)]
        half_extent: f64,
        /// Optional transform applied to every point: tx,ty,tz,roll,pitch,yaw
        #[arg(long)]
        transform: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grid-search PID gains on a scenario (reporting tool; the shipped
    /// baseline gains stay frozen in the config).
    TunePid {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Simulate { config, out_dir, seed } => cmd_simulate(&config, &out_dir, seed),
        Command::Compare { config, out_dir, seed } => cmd_compare(&config, &out_dir, seed),
        Command::ScanMatch {
            cloud_a,
            cloud_b,
            initial,
            gate,
            voxel_size,
        } => cmd_scan_match(&cloud_a, &cloud_b, &initial, gate, voxel_size),
        Command::GenScan {
            points,
            seed,
            shape,
            half_extent,
            transform,
            out,
        } => cmd_gen_scan(points, seed, &shape, half_extent, transform.as_deref(), &out),
        Command::TunePid { config, seed } => cmd_tune_pid(&config, seed),
    };
    ExitCode::from(code)
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<(RunConfig, PathBuf), String> {
    let mut config = RunConfig::from_file(path).map_err(|e| e.to_string())?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    Ok((config, base_dir))
}

fn write_artifacts(out_dir: &Path, record: &RunRecord, config: &RunConfig) -> std::io::Result<()> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("trajectory.csv"), record.trajectory_csv())?;
    std::fs::write(out_dir.join("controls.csv"), record.controls_csv())?;

    let metadata = serde_json::json!({
        "scenario_id": record.scenario_id,
        "law": record.law,
        "seed": record.seed,
        "config_hash": record.config_hash,
        "estopped": record.estopped,
        "finished_path": record.finished_path,
        "clamp_events": record.clamp_events,
        "steps": record.rows.len(),
        "rbf_centers": {
            "right": record.rbf_centers_right,
            "left": record.rbf_centers_left,
        },
        "artifacts": ["trajectory.csv", "controls.csv", "metrics.json"],
        "config": config,
    });
    std::fs::write(
        out_dir.join("metadata.json"),
        serde_json::to_string_pretty(&metadata).expect("serializable") + "\n",
    )?;

    let metrics = metrics_json(record, config);
    std::fs::write(
        out_dir.join("metrics.json"),
        serde_json::to_string_pretty(&metrics).expect("serializable") + "\n",
    )?;
    Ok(())
}

fn metrics_json(record: &RunRecord, config: &RunConfig) -> serde_json::Value {
    let band_main = report_or_null(record, config, config.metrics.settling_band);
    let band_2pct = report_or_null(record, config, 0.02);
    let lyapunov = lyapunov_trace(record)
        .ok()
        .and_then(|trace| fit_envelope(&trace.t, &trace.total))
        .map(|fit| serde_json::to_value(fit).expect("serializable"))
        .unwrap_or(serde_json::Value::Null);
    serde_json::json!({
        "config_hash": record.config_hash,
        "seed": record.seed,
        "law": record.law,
        "estopped": record.estopped,
        "clamp_events": record.clamp_events,
        "bands": {
            "primary": band_main,
            "two_percent": band_2pct,
        },
        "lyapunov_envelope": lyapunov,
    })
}

fn report_or_null(record: &RunRecord, config: &RunConfig, band: f64) -> serde_json::Value {
    match compute_metrics_with(record, band, &config.metrics) {
        Ok(report) => serde_json::to_value(report).expect("serializable"),
        Err(_) => serde_json::Value::Null,
    }
}

fn cmd_simulate(config_path: &Path, out_dir: &Path, seed: Option<u64>) -> u8 {
    let (config, base_dir) = match load_config(config_path, seed) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let path = match config.load_path(&base_dir) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let record = run_scenario(&config, &path, ControlLaw::Raid);
    if let Err(e) = write_artifacts(out_dir, &record, &config) {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    if record.estopped {
        eprintln!(
            "funnel breach: emergency stop latched at t = {:.3} s",
            record.rows.last().map(|r| r.t).unwrap_or(0.0)
        );
        return EXIT_BREACH;
    }
    println!(
        "simulate: {} steps, artifacts in {}",
        record.rows.len(),
        out_dir.display()
    );
    EXIT_OK
}

fn fmt_settling(m: &StabilityMetrics) -> String {
    match m.settling_time_s {
        Some(s) => format!("{s:.2}"),
        None => "never".into(),
    }
}

fn comparison_rows(raid: &MetricsReport, pid: &MetricsReport) -> String {
    let mut out = String::new();
    out.push_str("metric            raid (R / L)           pid (R / L)\n");
    out.push_str(&format!(
        "settling [s]      {:>8} / {:<8}  {:>8} / {:<8}\n",
        fmt_settling(&raid.right),
        fmt_settling(&raid.left),
        fmt_settling(&pid.right),
        fmt_settling(&pid.left),
    ));
    out.push_str(&format!(
        "overshoot [%]     {:>8.3} / {:<8.3}  {:>8.3} / {:<8.3}\n",
        raid.right.overshoot_pct, raid.left.overshoot_pct, pid.right.overshoot_pct, pid.left.overshoot_pct
    ));
    out.push_str(&format!(
        "sse [m/s]         {:>8.4} / {:<8.4}  {:>8.4} / {:<8.4}\n",
        raid.right.steady_state_error_mps,
        raid.left.steady_state_error_mps,
        pid.right.steady_state_error_mps,
        pid.left.steady_state_error_mps
    ));
    out.push_str(&format!(
        "max |u*| [RPM]    {:>8.1} / {:<8.1}  {:>8.1} / {:<8.1}\n",
        raid.right.max_u_safe_abs_rpm,
        raid.left.max_u_safe_abs_rpm,
        pid.right.max_u_safe_abs_rpm,
        pid.left.max_u_safe_abs_rpm
    ));
    out.push_str(&format!(
        "funnel viol.      {:>8} / {:<8}  {:>8} / {:<8}\n",
        raid.right.funnel_violations,
        raid.left.funnel_violations,
        pid.right.funnel_violations,
        pid.left.funnel_violations
    ));
    out
}

fn cmd_compare(config_path: &Path, out_dir: &Path, seed: Option<u64>) -> u8 {
    let (config, base_dir) = match load_config(config_path, seed) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let path = match config.load_path(&base_dir) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let (raid_record, pid_record) = run_pair(&config, &path);

    if let Err(e) = std::fs::create_dir_all(out_dir) {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    let report = serde_json::json!({
        "config_hash": config.hash(),
        "seed": config.seed,
        "note": "identical scenario and seed; only the control law differs. \
                 The PID baseline is frozen with conservative integral authority; \
                 run tune-pid for the sse-optimized frontier on this plant.",
        "raid": metrics_json(&raid_record, &config),
        "pid": metrics_json(&pid_record, &config),
    });
    if let Err(e) = std::fs::write(
        out_dir.join("compare.json"),
        serde_json::to_string_pretty(&report).expect("serializable") + "\n",
    ) {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }

    if raid_record.is_empty() {
        println!("empty run (zero duration): no metrics");
        return EXIT_OK;
    }
    let raid_metrics = compute_metrics_with(&raid_record, config.metrics.settling_band, &config.metrics);
    let pid_metrics = compute_metrics_with(&pid_record, config.metrics.settling_band, &config.metrics);
    if let (Ok(raid), Ok(pid)) = (raid_metrics, pid_metrics) {
        print!("{}", comparison_rows(&raid, &pid));
    }
    if raid_record.estopped {
        eprintln!("funnel breach during the raid run");
        return EXIT_BREACH;
    }
    EXIT_OK
}

fn parse_transform(text: &str) -> Result<Transform3D, String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        return Err(format!("expected 6 comma-separated numbers, got {}", parts.len()));
    }
    let mut vals = [0.0f64; 6];
    for (v, p) in vals.iter_mut().zip(&parts) {
        *v = p.parse::<f64>().map_err(|e| format!("bad transform component '{p}': {e}"))?;
    }
    Ok(Transform3D::from_parts(
        vals[0], vals[1], vals[2], vals[3], vals[4], vals[5],
    ))
}

fn cmd_scan_match(cloud_a: &Path, cloud_b: &Path, initial: &str, gate: f64, voxel_size: f64) -> u8 {
    let read_cloud = |p: &Path| -> Result<PointCloud, String> {
        let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
        cloud_from_csv(&text, Frame::Body).map_err(|e| format!("{}: {e}", p.display()))
    };
    let (a, b) = match (read_cloud(cloud_a), read_cloud(cloud_b)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let initial = match parse_transform(initial) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };

    // cloud B is the reference: all points enter the planar map, and the
    // moving cloud A is matched with point-to-plane residuals
    let features = raidnav::lidar::FeatureSet {
        edge_points: PointCloud::empty(Frame::Body),
        planar_points: a,
        frame_index: 0,
    };
    let reference = Keyframe {
        features: raidnav::lidar::FeatureSet {
            edge_points: PointCloud::empty(Frame::Body),
            planar_points: b,
            frame_index: 0,
        },
        pose: Transform3D::identity(),
        index: 0,
    };
    let map = match build_voxel_map(&[reference], 1, voxel_size) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let opts = MatchOptions {
        max_correspondence_distance: gate,
        ..Default::default()
    };
    match scan_match(&features, &map, &initial, &opts) {
        Ok(result) => {
            let (tx, ty, tz, roll, pitch, yaw) = result.transform.to_parts();
            println!(
                "{}",
                serde_json::json!({
                    "tx": tx, "ty": ty, "tz": tz,
                    "roll": roll, "pitch": pitch, "yaw": yaw
                })
            );
            if result.converged {
                EXIT_OK
            } else {
                eprintln!(
                    "did not converge after {} iterations (cost {:.3e}); best transform printed",
                    result.iterations, result.final_cost
                );
                EXIT_NO_CONVERGENCE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_NO_CONVERGENCE
        }
    }
}

fn cmd_gen_scan(
    points: usize,
    seed: u64,
    shape: &str,
    half_extent: f64,
    transform: Option<&str>,
    out: &Path,
) -> u8 {
    let cloud = match shape {
        "room" => {
            let per_wall = (points / 4).max(1);
            PointCloud::new(synthetic::room_scan(per_wall, 8.0, 6.0), Frame::Body)
                .expect("room scan is finite")
        }
        _ => synthetic::random_cloud(points, half_extent, seed),
    };
    let cloud = match transform {
        Some(text) => match parse_transform(text) {
            Ok(t) => transform_cloud(&t, &cloud),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_CONFIG;
            }
        },
        None => cloud,
    };
    if let Err(e) = raidnav::geometry::write_cloud_csv(out, &cloud) {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    println!("wrote {} points to {}", cloud.len(), out.display());
    EXIT_OK
}

fn cmd_tune_pid(config_path: &Path, seed: Option<u64>) -> u8 {
    let (base, base_dir) = match load_config(config_path, seed) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let path = match base.load_path(&base_dir) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };

    println!("grid search on {} (overshoot <= 5% feasible set, best sse first)", config_path.display());
    let mut results = Vec::new();
    for &kp in &[0.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0] {
        for &ki in &[0.0, 25.0, 50.0, 100.0, 200.0, 400.0, 800.0, 1600.0] {
            for &kd in &[0.0, 50.0, 200.0] {
                let mut config = base.clone();
                config.pid.kp = kp;
                config.pid.ki = ki;
                config.pid.kd = kd;
                let record = run_scenario(&config, &path, ControlLaw::Pid);
                let Ok(m) = compute_metrics_with(&record, config.metrics.settling_band, &config.metrics) else {
                    continue;
                };
                let overshoot = m.right.overshoot_pct.max(m.left.overshoot_pct);
                let sse = 0.5 * (m.right.steady_state_error_mps + m.left.steady_state_error_mps);
                let settling = match (m.right.settling_time_s, m.left.settling_time_s) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    _ => None,
                };
                results.push((kp, ki, kd, overshoot, sse, settling));
            }
        }
    }
    results.sort_by(|a, b| a.4.partial_cmp(&b.4).expect("finite sse"));
    for (kp, ki, kd, overshoot, sse, settling) in results.iter().filter(|r| r.3 <= 5.0).take(15) {
        let settling = settling.map_or("never".to_string(), |s| format!("{s:.2}"));
        println!(
            "kp={kp:<7} ki={ki:<7} kd={kd:<5} overshoot={overshoot:>6.2}% sse={sse:.5} settling={settling}"
        );
    }
    println!(
        "frozen baseline in config: kp={} ki={} kd={}",
        base.pid.kp, base.pid.ki, base.pid.kd
    );
    EXIT_OK
}
