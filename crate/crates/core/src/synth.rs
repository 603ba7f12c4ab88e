//! Parametric body that performs the calibration and accuracy exercises and
//! emits device streams, so every estimate has a known answer.
//!
//! Body frame: origin on the floor below the hip centre, facing +Z, left
//! side toward -X. Noise is drawn from a ChaCha8 generator seeded by the
//! caller, so streams are reproducible bit for bit.

use std::f64::consts::{PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::device_id::{BodyRole, DeviceKind, DeviceSample, TPoseSnapshot};
use crate::error::{Error, Result};
use crate::geometry::{yaw, Pose, Quat, Vec3};
use crate::io::{DeviceEntry, TrackerStream};
use crate::skeleton::{JointName, Side, Skeleton};

pub mod segments {
    pub const TPOSE: &str = "tpose";
    pub const ARMS: &str = "arms";
    pub const NECK: &str = "neck";
    pub const HEAD: &str = "head";
    pub const COUPLE: &str = "couple";
    pub const ARMS_MOVE: &str = "arms_move";
    pub const LEGS_MOVE: &str = "legs_move";
}

/// Roles of the emitted devices, by device index.
pub const DEVICE_ROLES: [BodyRole; 6] = [
    BodyRole::Hmd,
    BodyRole::RFoot,
    BodyRole::RWrist,
    BodyRole::Root,
    BodyRole::LWrist,
    BodyRole::LFoot,
];

pub fn role_kind(role: BodyRole) -> DeviceKind {
    match role {
        BodyRole::Hmd => DeviceKind::HeadMounted,
        BodyRole::LWrist | BodyRole::RWrist => DeviceKind::Controller,
        BodyRole::Root | BodyRole::LFoot | BodyRole::RFoot => DeviceKind::GenericTracker,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Per-axis Gaussian position noise (m).
    pub position_sigma: f64,
    /// Per-axis rotation-vector jitter (rad).
    pub orientation_sigma: f64,
}

impl NoiseModel {
    pub const NONE: NoiseModel = NoiseModel {
        position_sigma: 0.0,
        orientation_sigma: 0.0,
    };

    pub fn position(sigma: f64) -> Self {
        Self {
            position_sigma: sigma,
            orientation_sigma: 0.0,
        }
    }
}

/// Where devices sit on the body, in the body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mounting {
    /// Root tracker relative to the hip centre.
    pub root: Vec3,
    /// Foot tracker relative to the ankle (x mirrored for the left side).
    pub foot: Vec3,
    /// Akimbo controller relative to the hip joint (x mirrored for the left).
    pub hip_top: Vec3,
}

impl Default for Mounting {
    fn default() -> Self {
        Self {
            root: Vec3::new(0.0, 0.0, -0.10),
            foot: Vec3::new(0.0, 0.0, 0.05),
            hip_top: Vec3::new(0.05, 0.07, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthBody {
    pub eye_height: f64,
    /// Shoulder centre to controller tip.
    pub arm: f64,
    /// Hip joint to ankle, vertical in the T-pose.
    pub leg: f64,
    pub shoulder_width: f64,
    /// Shoulder height above the hip joints.
    pub torso: f64,
    pub ankle_height: f64,
    pub hip_half_width: f64,
    /// Thigh share of the leg.
    pub thigh_share: f64,
    /// Neck pivot height above the shoulders.
    pub neck_rise: f64,
    /// Neck pivot z.
    pub neck_depth: f64,
    /// HMD z.
    pub hmd_depth: f64,
    /// Head fixed point in the HMD frame.
    pub head_point: Vec3,
    pub mounting: Mounting,
    /// World placement of the body frame.
    pub origin: Vec3,
    pub heading: f64,
}

impl Default for GroundTruthBody {
    fn default() -> Self {
        Self {
            eye_height: 1.62,
            arm: 0.60,
            leg: 0.86,
            shoulder_width: 0.36,
            torso: 0.46,
            ankle_height: 0.09,
            hip_half_width: 0.0972,
            thigh_share: 0.52,
            neck_rise: 0.07,
            neck_depth: -0.03,
            hmd_depth: 0.08,
            head_point: Vec3::new(0.0, 0.0, 0.09),
            mounting: Mounting::default(),
            origin: Vec3::zeros(),
            heading: 0.0,
        }
    }
}

/// Arm configuration for one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Arms {
    TPose,
    /// Unit directions (body frame) of the left and right arms.
    Reach(Vec3, Vec3),
    Akimbo,
}

/// Body state for one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState {
    pub hip_drop: f64,
    /// Head rotation about a body-frame pivot.
    pub head: Option<(Vec3, Quat)>,
    pub arms: Arms,
}

impl BodyState {
    pub const TPOSE: BodyState = BodyState {
        hip_drop: 0.0,
        head: None,
        arms: Arms::TPose,
    };
}

impl GroundTruthBody {
    /// Default proportions scaled to a new eye height.
    pub fn scaled(eye_height: f64) -> Self {
        let d = Self::default();
        let k = eye_height / d.eye_height;
        Self {
            eye_height,
            arm: d.arm * k,
            leg: d.leg * k,
            shoulder_width: d.shoulder_width * k,
            torso: d.torso * k,
            ankle_height: d.ankle_height * k,
            hip_half_width: d.hip_half_width * k,
            neck_rise: d.neck_rise * k,
            neck_depth: d.neck_depth * k,
            hmd_depth: d.hmd_depth * k,
            head_point: d.head_point * k,
            mounting: Mounting {
                root: d.mounting.root * k,
                foot: d.mounting.foot * k,
                hip_top: d.mounting.hip_top * k,
            },
            ..d
        }
    }

    /// A body with exactly the skeleton's proportions.
    pub fn matching(sk: &Skeleton) -> Self {
        let d = sk.dimensions();
        let w = sk.world_rest_pose();
        let thigh = sk.offset(JointName::LeftLowerLeg).norm();
        let shin = sk.offset(JointName::LeftFoot).norm();
        Self {
            eye_height: d.eye_height,
            arm: 0.5 * (d.arm_left + d.arm_right),
            leg: 0.5 * (d.leg_left + d.leg_right),
            shoulder_width: d.shoulder_width,
            torso: d.torso,
            ankle_height: d.ankle_height,
            hip_half_width: w[&JointName::RightUpperLeg].x,
            thigh_share: thigh / (thigh + shin),
            neck_rise: d.neck_height - d.shoulder_height,
            neck_depth: w[&JointName::Neck].z,
            hmd_depth: sk.eye_position().z,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eye_height", self.eye_height),
            ("arm", self.arm),
            ("leg", self.leg),
            ("shoulder_width", self.shoulder_width),
            ("torso", self.torso),
            ("ankle_height", self.ankle_height),
            ("hip_half_width", self.hip_half_width),
            ("neck_rise", self.neck_rise),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("body {name} must be positive, got {v}")));
            }
        }
        if !(self.thigh_share > 0.0 && self.thigh_share < 1.0) {
            return Err(Error::InvalidArgument("thigh share must be in (0, 1)".into()));
        }
        if !(self.neck_center().y < self.eye_height) {
            return Err(Error::InvalidArgument(format!(
                "neck pivot {:.3} m must sit below eye height {:.3} m",
                self.neck_center().y,
                self.eye_height
            )));
        }
        Ok(())
    }

    pub fn hip_height(&self) -> f64 {
        self.ankle_height + self.leg
    }

    pub fn shoulder_height(&self) -> f64 {
        self.hip_height() + self.torso
    }

    pub fn thigh(&self) -> f64 {
        self.thigh_share * self.leg
    }

    pub fn shin(&self) -> f64 {
        (1.0 - self.thigh_share) * self.leg
    }

    fn to_world(&self) -> Pose {
        Pose::new(self.origin, yaw(self.heading), 0.0)
    }

    fn world_point(&self, p: Vec3) -> Vec3 {
        self.to_world().transform_point(&p)
    }

    // Body-frame landmarks in the T-pose.

    pub fn shoulder_center(&self, side: Side) -> Vec3 {
        Vec3::new(side.sign() * 0.5 * self.shoulder_width, self.shoulder_height(), 0.0)
    }

    pub fn hip_joint(&self, side: Side) -> Vec3 {
        Vec3::new(side.sign() * self.hip_half_width, self.hip_height(), 0.0)
    }

    pub fn ankle(&self, side: Side) -> Vec3 {
        Vec3::new(side.sign() * self.hip_half_width, self.ankle_height, 0.0)
    }

    pub fn neck_center(&self) -> Vec3 {
        Vec3::new(0.0, self.shoulder_height() + self.neck_rise, self.neck_depth)
    }

    pub fn hmd_rest(&self) -> Pose {
        Pose::new(Vec3::new(0.0, self.eye_height, self.hmd_depth), yaw(PI), 0.0)
    }

    /// Head fixed point in the body frame, T-pose.
    pub fn head_center(&self) -> Vec3 {
        self.hmd_rest().transform_point(&self.head_point)
    }

    pub fn hip_top(&self, side: Side) -> Vec3 {
        let m = self.mounting.hip_top;
        self.hip_joint(side) + Vec3::new(side.sign() * m.x, m.y, m.z)
    }

    /// World-space ground truth for closure checks.
    pub fn world_shoulder_center(&self, side: Side) -> Vec3 {
        self.world_point(self.shoulder_center(side))
    }

    pub fn world_neck_center(&self) -> Vec3 {
        self.world_point(self.neck_center())
    }

    pub fn world_hip_top(&self, side: Side, hip_drop: f64) -> Vec3 {
        self.world_point(self.hip_top(side) - Vec3::new(0.0, hip_drop, 0.0))
    }

    /// Interior knee angle (rad) with the hips lowered by `hip_drop`.
    pub fn knee_angle(&self, hip_drop: f64) -> f64 {
        let (u, l) = (self.thigh(), self.shin());
        let d = self.leg - hip_drop;
        ((u * u + l * l - d * d) / (2.0 * u * l)).clamp(-1.0, 1.0).acos()
    }

    /// Device poses in `BodyRole::ALL` order.
    pub fn device_poses(&self, state: &BodyState) -> [Pose; 6] {
        let down = Vec3::new(0.0, -state.hip_drop, 0.0);
        let facing = yaw(PI);
        let body = Quat::identity();

        let mut hmd = self.hmd_rest();
        if let Some((pivot, r)) = state.head {
            hmd = Pose::new(pivot + r * (hmd.position - pivot), r * hmd.orientation, 0.0);
        }
        hmd.position += down;

        let wrist = |side: Side| -> Vec3 {
            match state.arms {
                Arms::TPose => self.shoulder_center(side) + Vec3::new(side.sign() * self.arm, 0.0, 0.0) + down,
                Arms::Reach(l, r) => {
                    let dir = if side == Side::Left { l } else { r };
                    self.shoulder_center(side) + dir * self.arm + down
                }
                Arms::Akimbo => self.hip_top(side) + down,
            }
        };
        let foot = |side: Side| {
            let m = self.mounting.foot;
            self.ankle(side) + Vec3::new(side.sign() * m.x, m.y, m.z)
        };
        let root = Vec3::new(0.0, self.hip_height(), 0.0) + self.mounting.root + down;

        let world = self.to_world();
        let place = |p: Vec3, q: Quat| Pose::new(world.transform_point(&p), world.orientation * q, 0.0);
        [
            place(hmd.position, hmd.orientation),
            place(wrist(Side::Left), facing),
            place(wrist(Side::Right), facing),
            place(root, body),
            place(foot(Side::Left), body),
            place(foot(Side::Right), body),
        ]
    }
}

/// Precessing cone about the lateral axis, swept at the shoulder.
pub fn arm_circle_direction(side: Side, t: f64) -> Vec3 {
    let half_angle = (35.0 + 20.0 * (TAU * t / 1.3).sin()).to_radians();
    let phase = TAU * t / 2.0;
    let axis = Vec3::new(side.sign(), 0.0, 0.0);
    half_angle.cos() * axis + half_angle.sin() * (phase.cos() * Vec3::y() + phase.sin() * Vec3::z())
}

/// Stretched-arm circles whose cone axis swings from lateral toward
/// forward.
pub fn reach_direction(side: Side, t: f64) -> Vec3 {
    let swing = (30.0 * (1.0 - (TAU * t / 8.0).cos())).to_radians();
    let axis = Vec3::new(side.sign() * swing.cos(), 0.0, swing.sin());
    let across = axis.cross(&Vec3::y());
    let half_angle = 30f64.to_radians();
    let phase = TAU * t / 2.5;
    half_angle.cos() * axis + half_angle.sin() * (phase.cos() * Vec3::y() + phase.sin() * across)
}

pub fn neck_rotation(t: f64) -> Quat {
    let shake = 0.6 * (TAU * t / 4.0).sin();
    let nod = 0.4 * (TAU * t / 3.0).sin();
    let tilt = 0.2 * (TAU * t / 5.0).sin();
    Quat::from_euler_angles(nod, shake, tilt)
}

pub fn head_rotation(t: f64) -> Quat {
    let shake = 0.35 * (TAU * t / 3.0).sin();
    let nod = 0.3 * (TAU * t / 2.2).sin();
    let tilt = 0.15 * (TAU * t / 4.1).sin();
    Quat::from_euler_angles(nod, shake, tilt)
}

/// Squat depth of the hips at time `t` of the squat exercise.
pub fn squat_drop(t: f64, depth: f64) -> f64 {
    0.5 * depth * (1.0 - (TAU * t / 4.0).cos())
}

pub const SQUAT_DEPTH: f64 = 0.25;

/// Frame counts of the scripted exercises.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExerciseFrames {
    pub tpose: usize,
    pub arms: usize,
    pub neck: usize,
    pub head: usize,
    pub couple: usize,
    pub arms_move: usize,
    pub legs_move: usize,
}

impl Default for ExerciseFrames {
    fn default() -> Self {
        Self {
            tpose: 30,
            arms: 2700,
            neck: 1800,
            head: 900,
            couple: 30,
            arms_move: 1440,
            legs_move: 1080,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exercise {
    TPose,
    Arms,
    Head,
    Accuracy,
}

impl std::str::FromStr for Exercise {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tpose" => Ok(Exercise::TPose),
            "arms" => Ok(Exercise::Arms),
            "head" => Ok(Exercise::Head),
            "accuracy" => Ok(Exercise::Accuracy),
            other => Err(Error::InvalidArgument(format!("unknown exercise `{other}`"))),
        }
    }
}

/// Scripted recording session writing one tracker stream.
pub struct Simulator {
    body: GroundTruthBody,
    noise: NoiseModel,
    rng: ChaCha8Rng,
    stream: TrackerStream,
    frame: usize,
}

impl Simulator {
    pub fn new(body: GroundTruthBody, noise: NoiseModel, seed: u64, rate_hz: f64) -> Result<Self> {
        body.validate()?;
        if !(rate_hz > 0.0) {
            return Err(Error::InvalidArgument("rate must be positive".into()));
        }
        if !(noise.position_sigma >= 0.0) || !(noise.orientation_sigma >= 0.0) {
            return Err(Error::InvalidArgument("noise sigma must be non-negative".into()));
        }
        let devices = DEVICE_ROLES
            .iter()
            .enumerate()
            .map(|(index, role)| DeviceEntry {
                index,
                kind: role_kind(*role),
                role: None,
            })
            .collect();
        Ok(Self {
            body,
            noise,
            rng: ChaCha8Rng::seed_from_u64(seed),
            stream: TrackerStream::new(rate_hz, devices),
            frame: 0,
        })
    }

    pub fn body(&self) -> &GroundTruthBody {
        &self.body
    }

    fn time(&self) -> f64 {
        self.frame as f64 / self.stream.rate_hz
    }

    fn jitter(&mut self, pose: Pose, t: f64) -> Pose {
        let mut p = pose;
        p.timestamp = t;
        if self.noise.position_sigma > 0.0 {
            let n = Normal::new(0.0, self.noise.position_sigma).expect("valid sigma");
            p.position += Vec3::new(n.sample(&mut self.rng), n.sample(&mut self.rng), n.sample(&mut self.rng));
        }
        if self.noise.orientation_sigma > 0.0 {
            let n = Normal::new(0.0, self.noise.orientation_sigma).expect("valid sigma");
            let v = Vec3::new(n.sample(&mut self.rng), n.sample(&mut self.rng), n.sample(&mut self.rng));
            p.orientation = Quat::from_scaled_axis(v) * p.orientation;
        }
        p
    }

    /// Emits one frame; `state` is evaluated at the segment-local time.
    pub fn emit(&mut self, segment: &str, state: &BodyState) {
        let t = self.time();
        let by_role = self.body.device_poses(state);
        let poses: Vec<Pose> = DEVICE_ROLES
            .iter()
            .map(|r| by_role[BodyRole::ALL.iter().position(|x| x == r).expect("role")])
            .collect();
        let poses: Vec<Pose> = poses.into_iter().map(|p| self.jitter(p, t)).collect();
        self.stream.push_frame(segment, t, &poses);
        self.frame += 1;
    }

    fn run(&mut self, segment: &str, frames: usize, state: impl Fn(f64) -> BodyState) {
        let rate = self.stream.rate_hz;
        for k in 0..frames {
            let s = state(k as f64 / rate);
            self.emit(segment, &s);
        }
    }

    pub fn tpose(&mut self, frames: usize) {
        self.run(segments::TPOSE, frames, |_| BodyState::TPOSE);
    }

    pub fn arm_circles(&mut self, frames: usize) {
        self.run(segments::ARMS, frames, |t| BodyState {
            arms: Arms::Reach(arm_circle_direction(Side::Left, t), arm_circle_direction(Side::Right, t)),
            ..BodyState::TPOSE
        });
    }

    pub fn head_exercise(&mut self, neck_frames: usize, head_frames: usize) {
        let neck = self.body.neck_center();
        let head = self.body.head_center();
        self.run(segments::NECK, neck_frames, |t| BodyState {
            head: Some((neck, neck_rotation(t))),
            ..BodyState::TPOSE
        });
        self.run(segments::HEAD, head_frames, |t| BodyState {
            head: Some((head, head_rotation(t))),
            ..BodyState::TPOSE
        });
    }

    pub fn accuracy(&mut self, couple: usize, arms: usize, legs: usize) {
        self.run(segments::COUPLE, couple, |_| BodyState::TPOSE);
        self.run(segments::ARMS_MOVE, arms, |t| BodyState {
            arms: Arms::Reach(reach_direction(Side::Left, t), reach_direction(Side::Right, t)),
            ..BodyState::TPOSE
        });
        self.run(segments::LEGS_MOVE, legs, |t| BodyState {
            hip_drop: squat_drop(t, SQUAT_DEPTH),
            arms: Arms::Akimbo,
            head: None,
        });
    }

    pub fn exercise(&mut self, exercise: Exercise, frames: &ExerciseFrames) {
        match exercise {
            Exercise::TPose => self.tpose(frames.tpose),
            Exercise::Arms => self.arm_circles(frames.arms),
            Exercise::Head => self.head_exercise(frames.neck, frames.head),
            Exercise::Accuracy => self.accuracy(frames.couple, frames.arms_move, frames.legs_move),
        }
    }

    pub fn finish(self) -> TrackerStream {
        self.stream
    }
}

/// Records the listed exercises into one stream.
pub fn simulate(
    body: &GroundTruthBody,
    exercises: &[Exercise],
    frames: &ExerciseFrames,
    noise: NoiseModel,
    seed: u64,
    rate_hz: f64,
) -> Result<TrackerStream> {
    let mut sim = Simulator::new(*body, noise, seed, rate_hz)?;
    for e in exercises {
        sim.exercise(*e, frames);
    }
    Ok(sim.finish())
}

/// T-pose snapshot, with devices in the stream's index order.
pub fn emit_tpose(body: &GroundTruthBody, noise: NoiseModel, seed: u64) -> Result<TPoseSnapshot> {
    let stream = simulate(body, &[Exercise::TPose], &ExerciseFrames { tpose: 1, ..Default::default() }, noise, seed, 90.0)?;
    let frame = &stream.frames[0];
    let devices = stream
        .devices
        .iter()
        .map(|d| DeviceSample {
            index: d.index,
            kind: d.kind,
            pose: frame.pose(d.index),
        })
        .collect();
    TPoseSnapshot::from_devices(devices)
}

/// Left and right controller-tip positions during arm circles.
pub fn emit_arm_circles(
    body: &GroundTruthBody,
    frames: usize,
    rate_hz: f64,
    noise: NoiseModel,
    seed: u64,
) -> Result<(Vec<Vec3>, Vec<Vec3>)> {
    let mut sim = Simulator::new(*body, noise, seed, rate_hz)?;
    sim.arm_circles(frames);
    let s = sim.finish();
    let l = device_index(BodyRole::LWrist);
    let r = device_index(BodyRole::RWrist);
    Ok((
        s.frames.iter().map(|f| f.samples[l].position).collect(),
        s.frames.iter().map(|f| f.samples[r].position).collect(),
    ))
}

/// HMD poses of the neck segment followed by the head segment.
pub fn emit_head_exercise(
    body: &GroundTruthBody,
    neck_frames: usize,
    head_frames: usize,
    noise: NoiseModel,
    seed: u64,
) -> Result<(Vec<Pose>, Vec<Pose>)> {
    let mut sim = Simulator::new(*body, noise, seed, 90.0)?;
    sim.head_exercise(neck_frames, head_frames);
    let s = sim.finish();
    let hmd = device_index(BodyRole::Hmd);
    let poses = |name| -> Result<Vec<Pose>> {
        Ok(s.segment_frames(name)?.iter().map(|f| f.pose(hmd)).collect())
    };
    Ok((poses(segments::NECK)?, poses(segments::HEAD)?))
}

pub fn device_index(role: BodyRole) -> usize {
    DEVICE_ROLES.iter().position(|r| *r == role).expect("every role is emitted")
}
