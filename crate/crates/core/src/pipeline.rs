//! Stream-level drivers tying identification, calibration, coupling and
//! solving to recorded tracker streams.

use crate::animation::TrackedFrame;
use crate::calibration::{
    compute_measurements, AccumulatorConfig, BodyMeasurements, CenterAccumulator, CenterEstimate, HeadCenter,
    HeadGrid, HeadGridConfig, JointCenters, Progress, DEFAULT_SAMPLE_BUDGET,
};
use crate::coupling::CouplingFrame;
use crate::device_id::{identify_trackers, BodyRole, DeviceSample, IdentifyConfig, RoleAssignment, TPoseSnapshot};
use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec3};
use crate::io::{CalibrationResult, CenterProvenance, Frame, TrackerStream};
use crate::synth::segments;

pub const TOOL_VERSION: &str = concat!("bodyfit ", env!("CARGO_PKG_VERSION"));

/// T-pose snapshot from one stream frame.
pub fn snapshot(stream: &TrackerStream, frame: &Frame) -> Result<TPoseSnapshot> {
    let devices = stream
        .devices
        .iter()
        .zip(&frame.samples)
        .filter(|(_, s)| s.valid)
        .map(|(d, _)| DeviceSample {
            index: d.index,
            kind: d.kind,
            pose: frame.pose(d.index),
        })
        .collect();
    TPoseSnapshot::from_devices(devices)
}

/// Identifies roles on the first frame of the `tpose` segment.
pub fn identify_stream(stream: &TrackerStream, cfg: &IdentifyConfig) -> Result<RoleAssignment> {
    let frames = stream.segment_frames(segments::TPOSE)?;
    identify_trackers(&snapshot(stream, &frames[0])?, cfg)
}

pub fn tracked_frame(frame: &Frame, roles: &RoleAssignment) -> TrackedFrame {
    let pose = |r| frame.pose(roles.device(r));
    TrackedFrame {
        hmd: pose(BodyRole::Hmd),
        lwrist: pose(BodyRole::LWrist),
        rwrist: pose(BodyRole::RWrist),
        root: pose(BodyRole::Root),
        lfoot: pose(BodyRole::LFoot),
        rfoot: pose(BodyRole::RFoot),
    }
}

fn all_valid(frame: &Frame, roles: &RoleAssignment) -> bool {
    BodyRole::ALL.iter().all(|r| frame.samples[roles.device(*r)].valid)
}

pub fn coupling_frame(frame: &Frame, roles: &RoleAssignment) -> CouplingFrame {
    let f = tracked_frame(frame, roles);
    CouplingFrame {
        hmd: f.hmd,
        root: f.root,
        lfoot: f.lfoot,
        rfoot: f.rfoot,
    }
}

/// Frames of a segment with every device valid.
pub fn segment_tracked(stream: &TrackerStream, name: &str, roles: &RoleAssignment) -> Result<Vec<TrackedFrame>> {
    Ok(stream
        .segment_frames(name)?
        .iter()
        .filter(|f| all_valid(f, roles))
        .map(|f| tracked_frame(f, roles))
        .collect())
}

/// Accumulator state reported while a centre is being estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgressEvent {
    pub stage: &'static str,
    pub accepted: usize,
    pub samples: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrateConfig {
    pub identify: IdentifyConfig,
    pub shoulder: AccumulatorConfig,
    pub neck: AccumulatorConfig,
    pub head_grid: HeadGridConfig,
    pub sample_budget: usize,
    /// Report progress every this many accepted points.
    pub progress_every: usize,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        Self {
            identify: IdentifyConfig::default(),
            shoulder: AccumulatorConfig::SHOULDER,
            neck: AccumulatorConfig::NECK,
            head_grid: HeadGridConfig::default(),
            sample_budget: DEFAULT_SAMPLE_BUDGET,
            progress_every: 10,
        }
    }
}

fn estimate_center(
    stage: &'static str,
    points: impl Iterator<Item = Vec3>,
    config: AccumulatorConfig,
    budget: usize,
    every: usize,
    progress: &mut dyn FnMut(ProgressEvent),
) -> Result<CenterEstimate> {
    let mut acc = CenterAccumulator::new(config)?;
    let mut reported = 0;
    for (i, p) in points.take(budget).enumerate() {
        let step = acc.accumulate(p)?;
        let event = ProgressEvent {
            stage,
            accepted: acc.accepted(),
            samples: i + 1,
            converged: matches!(step, Progress::Finished(_)),
        };
        if let Progress::Finished(fit) = step {
            progress(event);
            return Ok(CenterEstimate {
                fit,
                config,
                accepted: acc.accepted(),
                samples: i + 1,
            });
        }
        if every > 0 && acc.accepted() >= reported + every {
            reported = acc.accepted();
            progress(event);
        }
    }
    Err(Error::CalibrationTimeout(format!(
        "{stage}: no convergence after {} accepted points (budget {budget} samples)",
        acc.accepted()
    )))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub roles: RoleAssignment,
    pub lshoulder: CenterEstimate,
    pub rshoulder: CenterEstimate,
    pub neck: CenterEstimate,
    pub head: HeadCenter,
    pub measurements: BodyMeasurements,
}

/// Steps 1 and 2 on one stream: identification on the T-pose, shoulder
/// centres from the `arms` segment, the neck pivot from the `neck` segment
/// and the head fixed point from `head` (or `neck` when absent).
pub fn calibrate_stream(
    stream: &TrackerStream,
    cfg: &CalibrateConfig,
    progress: &mut dyn FnMut(ProgressEvent),
) -> Result<Calibration> {
    let roles = identify_stream(stream, &cfg.identify)?;

    let arms = stream.segment_frames(segments::ARMS)?;
    let controller = |role: BodyRole| {
        let d = roles.device(role);
        arms.iter().filter(move |f| f.samples[d].valid).map(move |f| f.samples[d].position)
    };
    let budget = cfg.sample_budget;
    let every = cfg.progress_every;
    let lshoulder = estimate_center("left shoulder", controller(BodyRole::LWrist), cfg.shoulder, budget, every, progress)?;
    let rshoulder = estimate_center("right shoulder", controller(BodyRole::RWrist), cfg.shoulder, budget, every, progress)?;

    let hmd = roles.device(BodyRole::Hmd);
    let neck_frames = stream.segment_frames(segments::NECK)?;
    let neck = estimate_center(
        "neck",
        neck_frames.iter().filter(|f| f.samples[hmd].valid).map(|f| f.samples[hmd].position),
        cfg.neck,
        budget,
        every,
        progress,
    )?;

    let head_frames = match stream.segment(segments::HEAD) {
        Some(_) => stream.segment_frames(segments::HEAD)?,
        None => neck_frames,
    };
    let poses: Vec<Pose> = head_frames
        .iter()
        .filter(|f| f.samples[hmd].valid)
        .map(|f| f.pose(hmd))
        .collect();
    let (first, rest) = poses
        .split_first()
        .ok_or(Error::InsufficientMotion { max_displacement: 0.0 })?;
    let mut grid = HeadGrid::new(cfg.head_grid, first)?;
    for p in rest {
        grid.update(p);
    }
    let head = grid.finish()?;

    let centers = JointCenters {
        lshoulder: lshoulder.fit.center,
        rshoulder: rshoulder.fit.center,
        arm_left: lshoulder.fit.radius,
        arm_right: rshoulder.fit.radius,
        neck: neck.fit.center,
        head_local: head.local,
        head_world: head.world,
    };
    let measurements = compute_measurements(&roles.tpose_heights, &centers)?;
    Ok(Calibration {
        roles,
        lshoulder,
        rshoulder,
        neck,
        head,
        measurements,
    })
}

impl Calibration {
    pub fn to_result(&self, cfg: &CalibrateConfig, inputs: Vec<(String, String)>) -> CalibrationResult {
        CalibrationResult {
            tool_version: TOOL_VERSION.to_string(),
            inputs,
            roles: self.roles.clone(),
            measurements: self.measurements,
            lshoulder: CenterProvenance::from(&self.lshoulder),
            rshoulder: CenterProvenance::from(&self.rshoulder),
            neck: CenterProvenance::from(&self.neck),
            head_grid: cfg.head_grid,
            head: self.head,
            offsets: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{simulate, Exercise, ExerciseFrames, GroundTruthBody, NoiseModel};
    use crate::skeleton::Side;

    #[test]
    fn noiseless_stream_closes() {
        let body = GroundTruthBody::default();
        let stream = simulate(
            &body,
            &[Exercise::TPose, Exercise::Arms, Exercise::Head],
            &ExerciseFrames::default(),
            NoiseModel::NONE,
            0,
            90.0,
        )
        .unwrap();
        let mut events = Vec::new();
        let cal = calibrate_stream(&stream, &CalibrateConfig::default(), &mut |e| events.push(e)).unwrap();
        assert!((cal.lshoulder.fit.center - body.world_shoulder_center(Side::Left)).norm() < 1e-6);
        assert!((cal.neck.fit.center - body.world_neck_center()).norm() < 1e-6);
        assert!((cal.head.local - body.head_point).norm() < 1e-6);
        assert!(events.iter().any(|e| e.converged && e.stage == "neck"));
        let m = &cal.measurements;
        assert!((m.l_leg - body.leg).abs() < 1e-6);
        assert!((m.arm_length() - body.arm).abs() < 1e-6);
    }

    #[test]
    fn missing_segment_is_reported() {
        let stream = simulate(
            &GroundTruthBody::default(),
            &[Exercise::TPose],
            &ExerciseFrames::default(),
            NoiseModel::NONE,
            0,
            90.0,
        )
        .unwrap();
        let err = calibrate_stream(&stream, &CalibrateConfig::default(), &mut |_| {}).unwrap_err();
        assert!(err.to_string().contains("arms"), "{err}");
    }
}
