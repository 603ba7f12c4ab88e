//! `bodyfit` command-line front end.

mod config;
mod table;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bodyfit_core::calibration::HeadGridConfig;
use bodyfit_core::coupling::{compute_offsets, Placement};
use bodyfit_core::device_id::{BodyRole, IdentifyConfig};
use bodyfit_core::eval::{run_experiment, AccuracyStreams, EvalConfig};
use bodyfit_core::geometry::{yaw, Vec3};
use bodyfit_core::io::{
    fixed, parse_skeleton, read_text, write_report, write_series, write_skeleton, write_text, CalibrationResult,
    TrackerStream,
};
use bodyfit_core::pipeline::{calibrate_stream, coupling_frame, identify_stream, CalibrateConfig};
use bodyfit_core::skeleton::{make_variant, tune_chains, uniform_scale, AvatarVariant, Skeleton, VariantDeltas};
use bodyfit_core::synth::{segments, simulate, Exercise, ExerciseFrames, GroundTruthBody, NoiseModel};
use clap::{Args, Parser, Subcommand};

use config::Config;
use table::{Format, Table};

const DECIMALS: usize = 6;

#[derive(Parser)]
#[command(name = "bodyfit", version, about = "Calibrate a six-device tracked body and fit an avatar skeleton to it")]
struct Cli {
    /// Output style for tables printed to stdout.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assign body roles to the devices of a stream's T-pose frame.
    Identify {
        stream: PathBuf,
        /// Height (m) above which a generic tracker is the root tracker.
        #[arg(long)]
        root_height_threshold: Option<f64>,
    },
    /// Identify devices and estimate joint centres and body measurements.
    Calibrate {
        stream: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        root_height_threshold: Option<f64>,
        /// Samples read per centre before giving up.
        #[arg(long)]
        sample_budget: Option<usize>,
        /// Print a progress line every this many accepted points.
        #[arg(long)]
        progress_every: Option<usize>,
        #[arg(long)]
        grid_rows: Option<usize>,
        #[arg(long)]
        grid_cols: Option<usize>,
        /// Head grid cell size (m).
        #[arg(long)]
        cell_size: Option<f64>,
    },
    /// Write the built-in avatar skeleton, optionally as a proportion variant.
    Skeleton {
        /// Eye height of the template (m).
        #[arg(long, default_value_t = 1.6)]
        eye_height: f64,
        /// SA, N_SA, W_SA, L_LA or S_LA.
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Resize a skeleton to calibrated measurements.
    Fit {
        skeleton: PathBuf,
        result: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute tracker-to-joint offsets at one frame (`stream@frame`).
    Couple {
        skeleton: PathBuf,
        stream_at: String,
        result: PathBuf,
        #[command(flatten)]
        placement: PlacementArgs,
        /// Write the result with the offsets added.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Record scripted exercises of a synthetic body.
    Simulate {
        /// Comma-separated key=value body parameters: eye, arm, leg,
        /// shoulder, torso, ankle (m), x, z (m), heading (deg).
        #[arg(long)]
        body: Option<String>,
        /// Comma-separated list of tpose, arms, head, accuracy.
        #[arg(long)]
        exercise: Option<String>,
        /// Position noise sigma (m).
        #[arg(long)]
        noise: Option<f64>,
        /// Orientation noise sigma (rad).
        #[arg(long)]
        orientation_noise: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Frame rate (Hz).
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the five avatar variants under both scaling methods.
    Evaluate {
        stream: PathBuf,
        skeleton: PathBuf,
        result: PathBuf,
        /// Output directory for the report and per-frame series.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        placement: PlacementArgs,
        /// Relative shoulder-width change of the N_SA and W_SA variants.
        #[arg(long)]
        shoulder_delta: Option<f64>,
        /// Relative leg-length change of the L_LA and S_LA variants.
        #[arg(long)]
        leg_delta: Option<f64>,
    },
}

#[derive(Args)]
struct PlacementArgs {
    /// Avatar origin X,Y,Z (m).
    #[arg(long)]
    spot: Option<String>,
    /// Avatar heading about world up (deg).
    #[arg(long, allow_hyphen_values = true)]
    heading: Option<f64>,
    /// User offset X,Y,Z from the avatar in the avatar frame (m); the avatar
    /// is placed that far away from the spot in the opposite direction.
    #[arg(long, allow_hyphen_values = true)]
    misalign: Option<String>,
}

fn parse_vec3(s: &str) -> Result<Vec3> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        bail!(bodyfit_core::Error::InvalidArgument(format!("expected X,Y,Z, got `{s}`")));
    }
    let mut v = [0.0; 3];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p
            .parse()
            .map_err(|_| bodyfit_core::Error::InvalidArgument(format!("`{p}` is not a number")))?;
    }
    Ok(Vec3::new(v[0], v[1], v[2]))
}

fn placement(args: &PlacementArgs, cfg: &config::PlacementSection) -> Result<Placement> {
    let spot = match args.spot.as_deref().or(cfg.spot.as_deref()) {
        Some(s) => parse_vec3(s)?,
        None => Vec3::zeros(),
    };
    let misalign = match args.misalign.as_deref().or(cfg.misalign.as_deref()) {
        Some(s) => parse_vec3(s)?,
        None => Vec3::zeros(),
    };
    let heading = yaw(args.heading.or(cfg.heading).unwrap_or(0.0).to_radians());
    Ok(Placement {
        origin: spot - heading * misalign,
        heading,
    })
}

fn parse_body(params: &str) -> Result<GroundTruthBody> {
    let mut pairs = Vec::new();
    for item in params.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| bodyfit_core::Error::InvalidArgument(format!("body parameter `{item}` is not key=value")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| bodyfit_core::Error::InvalidArgument(format!("body parameter `{item}` is not a number")))?;
        pairs.push((k.trim(), v));
    }
    let eye = pairs.iter().find(|(k, _)| *k == "eye").map(|p| p.1);
    let mut body = eye.map(GroundTruthBody::scaled).unwrap_or_default();
    for (k, v) in pairs {
        match k {
            "eye" => {}
            "arm" => body.arm = v,
            "leg" => body.leg = v,
            "shoulder" => body.shoulder_width = v,
            "torso" => body.torso = v,
            "ankle" => body.ankle_height = v,
            "x" => body.origin.x = v,
            "z" => body.origin.z = v,
            "heading" => body.heading = v.to_radians(),
            other => bail!(bodyfit_core::Error::InvalidArgument(format!("unknown body parameter `{other}`"))),
        }
    }
    body.validate()?;
    Ok(body)
}

fn parse_exercises(list: &str) -> Result<Vec<Exercise>> {
    let exercises = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Exercise>())
        .collect::<Result<Vec<_>, _>>()?;
    if exercises.is_empty() {
        bail!(bodyfit_core::Error::InvalidArgument("no exercises given".into()));
    }
    Ok(exercises)
}

fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn load_skeleton(path: &Path) -> Result<Skeleton> {
    Ok(parse_skeleton(&read_text(path)?, &path.display().to_string())?)
}

fn f(v: f64) -> String {
    fixed(v, DECIMALS)
}

fn vec_cells(v: &Vec3) -> [String; 3] {
    [f(v.x), f(v.y), f(v.z)]
}

fn identify_config(threshold: Option<f64>) -> IdentifyConfig {
    let mut cfg = IdentifyConfig::default();
    if let Some(t) = threshold {
        cfg.root_height_threshold = t;
    }
    cfg
}

fn run(cli: Cli, config: &Config) -> Result<()> {
    let format = match (cli.format, &config.format) {
        (Some(f), _) => f,
        (None, Some(s)) => s.parse().map_err(|e: String| bodyfit_core::Error::InvalidArgument(e))?,
        (None, None) => Format::Human,
    };
    match cli.command {
        Command::Identify {
            stream,
            root_height_threshold,
        } => {
            let s = TrackerStream::read(&stream)?;
            let cfg = identify_config(root_height_threshold.or(config.identify.root_height_threshold));
            let roles = identify_stream(&s, &cfg)?;
            let h = roles.tpose_heights;
            let mut t = Table::new(&["role", "device", "kind", "height_m"]);
            for role in BodyRole::ALL {
                let d = roles.device(role);
                let height = match role {
                    BodyRole::Hmd => f(h.hmd),
                    BodyRole::Root => f(h.root),
                    BodyRole::LFoot => f(h.lfoot),
                    BodyRole::RFoot => f(h.rfoot),
                    _ => "-".into(),
                };
                t.row(vec![role.to_string(), d.to_string(), s.devices[d].kind.as_str().into(), height]);
            }
            print!("{}", t.render(format));
        }
        Command::Calibrate {
            stream,
            out,
            root_height_threshold,
            sample_budget,
            progress_every,
            grid_rows,
            grid_cols,
            cell_size,
        } => {
            let c = &config.calibrate;
            let grid = HeadGridConfig::default();
            let cfg = CalibrateConfig {
                identify: identify_config(root_height_threshold.or(c.root_height_threshold)),
                sample_budget: sample_budget.or(c.sample_budget).unwrap_or(CalibrateConfig::default().sample_budget),
                progress_every: progress_every.or(c.progress_every).unwrap_or(CalibrateConfig::default().progress_every),
                head_grid: HeadGridConfig {
                    rows: grid_rows.or(c.grid_rows).unwrap_or(grid.rows),
                    cols: grid_cols.or(c.grid_cols).unwrap_or(grid.cols),
                    cell_size: cell_size.or(c.cell_size).unwrap_or(grid.cell_size),
                },
                ..CalibrateConfig::default()
            };
            let s = TrackerStream::read(&stream)?;
            let cal = calibrate_stream(&s, &cfg, &mut |e| {
                let done = if e.converged { " converged" } else { "" };
                eprintln!("progress {}: {} accepted / {} samples{done}", e.stage, e.accepted, e.samples);
            })?;
            let result = cal.to_result(&cfg, vec![(file_label(&stream), s.digest())]);
            result.write(&out)?;

            let m = &cal.measurements;
            let mut t = Table::new(&["quantity", "value"]);
            for (name, v) in [
                ("hmd_height_m", m.hmd_height),
                ("shoulder_width_m", m.shoulder_width),
                ("arm_left_m", m.l_arm_left),
                ("arm_right_m", m.l_arm_right),
                ("leg_m", m.l_leg),
                ("torso_m", m.l_torso),
                ("neck_m", m.l_neck),
                ("eyes_m", m.l_eyes),
                ("root_height_m", m.root_height),
            ] {
                t.row(vec![name.into(), f(v)]);
            }
            for (name, e) in [("lshoulder", &cal.lshoulder), ("rshoulder", &cal.rshoulder), ("neck", &cal.neck)] {
                t.row(vec![format!("{name}_accepted"), e.accepted.to_string()]);
                t.row(vec![format!("{name}_rms_m"), f(e.fit.rms_residual)]);
            }
            print!("{}", t.render(format));
        }
        Command::Skeleton {
            eye_height,
            variant,
            out,
        } => {
            let base = Skeleton::standard(eye_height)?;
            let sk = match variant {
                Some(v) => make_variant(&base, v.parse::<AvatarVariant>()?, &VariantDeltas::default())?,
                None => base,
            };
            write_text(&out, &write_skeleton(&sk))?;
            let d = sk.dimensions();
            let mut t = Table::new(&["dimension", "m"]);
            for (name, v) in [
                ("eye_height", d.eye_height),
                ("shoulder_width", d.shoulder_width),
                ("arm", d.arm_left),
                ("leg", d.leg_left),
                ("torso", d.torso),
            ] {
                t.row(vec![name.into(), f(v)]);
            }
            print!("{}", t.render(format));
        }
        Command::Fit { skeleton, result, out } => {
            let sk = load_skeleton(&skeleton)?;
            let r = CalibrationResult::read(&result)?;
            let uniform = uniform_scale(&sk, r.measurements.hmd_height)?;
            let (fitted, scales) = tune_chains(&uniform, &r.measurements)?;
            write_text(&out, &write_skeleton(&fitted))?;
            let k = r.measurements.hmd_height / sk.eye_height();
            let mut t = Table::new(&["chain", "scale"]);
            for (name, v) in [
                ("uniform", k),
                ("left_leg", scales.left_leg),
                ("right_leg", scales.right_leg),
                ("left_arm", scales.left_arm),
                ("right_arm", scales.right_arm),
                ("shoulder_width", scales.shoulder_width),
                ("spine", scales.spine),
                ("neck_head", scales.neck_head),
            ] {
                t.row(vec![name.into(), f(v)]);
            }
            print!("{}", t.render(format));
        }
        Command::Couple {
            skeleton,
            stream_at,
            result,
            placement: p,
            out,
        } => {
            let sk = load_skeleton(&skeleton)?;
            let mut r = CalibrationResult::read(&result)?;
            let (path, frame) = match stream_at.rsplit_once('@') {
                Some((path, k)) => {
                    let k: usize = k
                        .parse()
                        .map_err(|_| bodyfit_core::Error::InvalidArgument(format!("`{k}` is not a frame index")))?;
                    (path.to_string(), Some(k))
                }
                None => (stream_at.clone(), None),
            };
            let s = TrackerStream::read(Path::new(&path))?;
            let k = match frame {
                Some(k) => k,
                None => s.segment(segments::COUPLE).map(|seg| seg.start).unwrap_or(0),
            };
            let fr = s.frames.get(k).ok_or_else(|| {
                bodyfit_core::Error::InvalidArgument(format!("frame {k} out of range ({} frames)", s.frames.len()))
            })?;
            if fr.samples.len() != 6 {
                bail!(bodyfit_core::Error::InvalidArgument(format!(
                    "stream has {} devices, expected 6",
                    fr.samples.len()
                )));
            }
            let placement = placement(&p, &config.couple)?;
            let offsets = compute_offsets(&sk, &placement, &coupling_frame(fr, &r.roles), r.measurements.head_local)?;
            for w in &offsets.warnings {
                eprintln!("warning: {w}");
            }
            let mut t = Table::new(&["role", "joint", "offset_x", "offset_y", "offset_z", "distance_m"]);
            for b in &offsets.bindings {
                let [x, y, z] = vec_cells(&b.offset);
                t.row(vec![b.role.to_string(), b.joint.to_string(), x, y, z, f(b.offset.norm())]);
            }
            print!("{}", t.render(format));
            if let Some(out) = out {
                r.offsets = Some(offsets);
                r.write(&out)?;
            }
        }
        Command::Simulate {
            body,
            exercise,
            noise,
            orientation_noise,
            seed,
            rate,
            out,
        } => {
            let c = &config.simulate;
            let body = parse_body(body.as_deref().or(c.body.as_deref()).unwrap_or(""))?;
            let exercises = parse_exercises(exercise.as_deref().or(c.exercise.as_deref()).unwrap_or("tpose,arms,head,accuracy"))?;
            let noise = NoiseModel {
                position_sigma: noise.or(c.noise).unwrap_or(0.0),
                orientation_sigma: orientation_noise.or(c.orientation_noise).unwrap_or(0.0),
            };
            let stream = simulate(
                &body,
                &exercises,
                &ExerciseFrames::default(),
                noise,
                seed.or(c.seed).unwrap_or(0),
                rate.or(c.rate).unwrap_or(90.0),
            )?;
            stream.write(&out)?;
            let mut t = Table::new(&["segment", "first_frame", "frames"]);
            for seg in &stream.segments {
                t.row(vec![seg.name.clone(), seg.start.to_string(), (seg.end - seg.start).to_string()]);
            }
            print!("{}", t.render(format));
        }
        Command::Evaluate {
            stream,
            skeleton,
            result,
            out,
            placement: p,
            shoulder_delta,
            leg_delta,
        } => {
            let e = &config.evaluate;
            let section = config::PlacementSection {
                spot: e.spot.clone(),
                heading: e.heading,
                misalign: e.misalign.clone(),
            };
            let defaults = VariantDeltas::default();
            let cfg = EvalConfig {
                deltas: VariantDeltas {
                    shoulder_width: shoulder_delta.or(e.shoulder_delta).unwrap_or(defaults.shoulder_width),
                    leg_length: leg_delta.or(e.leg_delta).unwrap_or(defaults.leg_length),
                },
                placement: placement(&p, &section)?,
            };
            let base = load_skeleton(&skeleton)?;
            let r = CalibrationResult::read(&result)?;
            let s = TrackerStream::read(&stream)?;
            let streams = AccuracyStreams::from_stream(&s, &r.roles)?;
            let report = run_experiment(&streams, &base, &r.measurements, &cfg)?;

            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            write_text(&out.join("report.tsv"), &write_report(&report))?;
            for (name, text) in write_series(&report) {
                write_text(&out.join(name), &text)?;
            }
            let mut t = Table::new(&["variant", "method", "hand_cm", "leg_cm", "knee_deg", "warnings"]);
            for s in &report.summaries {
                t.row(vec![
                    s.condition.variant.to_string(),
                    s.condition.method.to_string(),
                    f(s.hand.mean),
                    f(s.leg.mean),
                    f(s.knee.mean),
                    s.warnings.len().to_string(),
                ]);
            }
            print!("{}", t.render(format));
            for d in &report.dispersion {
                eprintln!("knee dispersion across variants, {}: {} deg", d.method, f(d.mean));
            }
        }
    }
    Ok(())
}

/// 2 validation, 3 calibration timeout, 4 degenerate geometry.
fn exit_code(err: &anyhow::Error) -> u8 {
    use bodyfit_core::Error as E;
    match err.chain().find_map(|e| e.downcast_ref::<E>()) {
        Some(E::CalibrationTimeout(_) | E::InsufficientMotion { .. }) => 3,
        Some(E::DegenerateInput(_) | E::AmbiguousLayout(_) | E::DegeneratePole | E::NonPositiveChain(_)) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = Config::load().and_then(|config| run(cli, &config));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::anyhow;

    #[test]
    fn body_params_override_scaled_defaults() {
        let b = parse_body("eye=1.8, arm=0.7,heading=90").unwrap();
        assert_eq!(b.eye_height, 1.8);
        assert_eq!(b.arm, 0.7);
        assert!((b.leg - 0.86 * 1.8 / 1.62).abs() < 1e-12);
        assert!((b.heading - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!(parse_body("wingspan=2").is_err());
    }

    #[test]
    fn misalignment_moves_the_avatar_away() {
        let args = PlacementArgs {
            spot: Some("1,0,0".into()),
            heading: Some(180.0),
            misalign: Some("0,0,0.1".into()),
        };
        let p = placement(&args, &config::PlacementSection::default()).unwrap();
        assert!((p.origin - Vec3::new(1.0, 0.0, 0.1)).norm() < 1e-12);
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        use bodyfit_core::Error as E;
        assert_eq!(exit_code(&anyhow!(E::AmbiguousLayout("x".into()))), 4);
        assert_eq!(exit_code(&anyhow!(E::CalibrationTimeout("x".into()))), 3);
        assert_eq!(exit_code(&anyhow!(E::InvalidSnapshot("x".into()))), 2);
        assert_eq!(exit_code(&anyhow!("plain")), 2);
    }
}
