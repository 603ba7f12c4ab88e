//! Per-frame pose solving: hips and ankles follow their trackers, the spine
//! bends toward the head, and arms and legs reach their targets by
//! two-bone IK.

use crate::coupling::{OffsetSet, Placement};
use crate::device_id::BodyRole;
use crate::error::{Error, Result};
use crate::geometry::{Pose, Quat, Vec3};
use crate::skeleton::{JointName, Side, Skeleton};

/// Spine bends above this angle are flagged.
pub const MAX_SPINE_BEND: f64 = std::f64::consts::FRAC_PI_2;

const POLE_EPS: f64 = 1e-9;
const MIN_SPINE_SPAN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkSolution {
    pub mid: Vec3,
    pub end: Vec3,
    /// Angle at the middle joint; pi when the chain is straight.
    pub interior_angle: f64,
    /// Distance left between the chain end and the target.
    pub reach_deficit: f64,
}

/// Analytic two-bone IK.
///
/// The root-to-target distance is clamped to what the bones can span; the
/// middle joint bends toward the component of `pole` perpendicular to the
/// root-target line.
pub fn two_bone_ik(root: Vec3, upper: f64, lower: f64, target: Vec3, pole: Vec3) -> Result<IkSolution> {
    if !(upper > 0.0) || !(lower > 0.0) {
        return Err(Error::NonPositiveChain(format!("bones {upper} and {lower}")));
    }
    let to_target = target - root;
    let dist = to_target.norm();
    if !(dist > POLE_EPS) {
        return Err(Error::DegeneratePole);
    }
    let dir = to_target / dist;
    let reach = dist.clamp((upper - lower).abs(), upper + lower);
    let end = root + dir * reach;
    let reach_deficit = (target - end).norm();

    if reach >= upper + lower {
        return Ok(IkSolution {
            mid: root + dir * upper,
            end,
            interior_angle: std::f64::consts::PI,
            reach_deficit,
        });
    }
    let bend = pole - dir * pole.dot(&dir);
    if !(bend.norm() > POLE_EPS * pole.norm().max(1.0)) {
        return Err(Error::DegeneratePole);
    }
    let bend = bend.normalize();
    let cos_root = ((upper * upper + reach * reach - lower * lower) / (2.0 * upper * reach)).clamp(-1.0, 1.0);
    let sin_root = (1.0 - cos_root * cos_root).sqrt();
    let mid = root + upper * (cos_root * dir + sin_root * bend);
    let cos_mid = ((upper * upper + lower * lower - reach * reach) / (2.0 * upper * lower)).clamp(-1.0, 1.0);
    Ok(IkSolution {
        mid,
        end,
        interior_angle: cos_mid.acos(),
        reach_deficit,
    })
}

/// Rotation taking `rest` onto `current`, split into `joints` equal steps.
pub fn spine_bend(rest: &Vec3, current: &Vec3, joints: usize) -> Result<(Quat, f64)> {
    if joints == 0 {
        return Err(Error::InvalidArgument("spine needs at least one joint".into()));
    }
    if !(rest.norm() > MIN_SPINE_SPAN) || !(current.norm() > MIN_SPINE_SPAN) {
        return Err(Error::DegenerateInput("spine endpoints coincide".into()));
    }
    let total = Quat::rotation_between(rest, current)
        .ok_or_else(|| Error::DegenerateInput("spine direction reversed".into()))?;
    Ok((total.powf(1.0 / joints as f64), total.angle()))
}

/// All six device poses for one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackedFrame {
    pub hmd: Pose,
    pub lwrist: Pose,
    pub rwrist: Pose,
    pub root: Pose,
    pub lfoot: Pose,
    pub rfoot: Pose,
}

impl TrackedFrame {
    pub fn device(&self, role: BodyRole) -> &Pose {
        match role {
            BodyRole::Hmd => &self.hmd,
            BodyRole::LWrist => &self.lwrist,
            BodyRole::RWrist => &self.rwrist,
            BodyRole::Root => &self.root,
            BodyRole::LFoot => &self.lfoot,
            BodyRole::RFoot => &self.rfoot,
        }
    }

    pub fn wrist(&self, side: Side) -> &Pose {
        match side {
            Side::Left => &self.lwrist,
            Side::Right => &self.rwrist,
        }
    }

    pub fn foot(&self, side: Side) -> &Pose {
        match side {
            Side::Left => &self.lfoot,
            Side::Right => &self.rfoot,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimbState {
    pub interior_angle: f64,
    pub reach_deficit: f64,
}

/// Solved world pose, indexed like the skeleton's joints.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSolution {
    pub positions: Vec<Vec3>,
    pub orientations: Vec<Quat>,
    pub timestamp: f64,
    pub arms: [LimbState; 2],
    pub legs: [LimbState; 2],
    pub spine_bend: f64,
    pub spine_overbent: bool,
}

impl PoseSolution {
    pub fn position(&self, sk: &Skeleton, name: JointName) -> Option<Vec3> {
        sk.index_of(name).map(|i| self.positions[i])
    }

    pub fn arm(&self, side: Side) -> &LimbState {
        &self.arms[side as usize]
    }

    pub fn leg(&self, side: Side) -> &LimbState {
        &self.legs[side as usize]
    }
}

fn limb_orientation(parent: Quat, rest_dir: Vec3, new_dir: Vec3) -> Quat {
    let from = parent * rest_dir;
    let swing = Quat::rotation_between(&from, &new_dir).unwrap_or_else(Quat::identity);
    swing * parent
}

/// Solves one frame for a coupled skeleton.
///
/// Hips follow the root tracker and the ankle targets follow the foot
/// trackers through `offsets`. The spine rotates the coupling-time
/// hips-to-head direction onto the current one, shared equally by the spine
/// joints. Arms reach the controllers with elbows toward back-down; legs
/// reach the ankle targets with knees forward.
pub fn solve_frame(sk: &Skeleton, offsets: &OffsetSet, frame: &TrackedFrame) -> Result<PoseSolution> {
    let binding = |role| {
        offsets
            .binding(role)
            .ok_or_else(|| Error::InvalidArgument(format!("offset set lacks the {role} binding")))
    };
    let (hips_p, hips_q) = binding(BodyRole::Root)?.apply(&frame.root);

    let head = frame.hmd.transform_point(&offsets.head_anchor);
    let current = hips_q.inverse() * (head - hips_p);
    let spine = sk.spine_joints();
    let (step, bend) = spine_bend(&offsets.spine_rest_axis, &current, spine.len())?;

    let joints = sk.joints();
    let mut positions = Vec::with_capacity(joints.len());
    let mut orientations = Vec::with_capacity(joints.len());
    for j in joints {
        let (p, q) = match j.parent {
            None => (hips_p, hips_q),
            Some(parent) => {
                let pq: Quat = orientations[parent];
                let local = if spine.contains(&j.name) { step } else { Quat::identity() };
                (positions[parent] + pq * j.offset, pq * local)
            }
        };
        positions.push(p);
        orientations.push(q);
    }

    let idx = |n: JointName| sk.index_of(n).expect("validated skeleton");
    let chest_q = orientations[idx(*spine.last().expect("validated spine"))];
    let mut arms = [LimbState {
        interior_angle: 0.0,
        reach_deficit: 0.0,
    }; 2];
    let mut legs = arms;

    for side in Side::BOTH {
        let (ua, la, hand) = (idx(side.upper_arm()), idx(side.lower_arm()), idx(side.hand()));
        let upper = joints[la].offset;
        let lower = joints[hand].offset;
        let ik = two_bone_ik(
            positions[ua],
            upper.norm(),
            lower.norm(),
            frame.wrist(side).position,
            chest_q * Vec3::new(0.0, -1.0, -1.0),
        )?;
        orientations[ua] = limb_orientation(orientations[ua], upper, ik.mid - positions[ua]);
        orientations[la] = limb_orientation(orientations[ua], lower, ik.end - ik.mid);
        orientations[hand] = orientations[la];
        positions[la] = ik.mid;
        positions[hand] = ik.end;
        arms[side as usize] = LimbState {
            interior_angle: ik.interior_angle,
            reach_deficit: ik.reach_deficit,
        };

        let (ul, ll, foot) = (idx(side.upper_leg()), idx(side.lower_leg()), idx(side.foot()));
        let role = match side {
            Side::Left => BodyRole::LFoot,
            Side::Right => BodyRole::RFoot,
        };
        let (ankle, foot_q) = binding(role)?.apply(frame.foot(side));
        let upper = joints[ll].offset;
        let lower = joints[foot].offset;
        let ik = two_bone_ik(
            positions[ul],
            upper.norm(),
            lower.norm(),
            ankle,
            hips_q * Vec3::new(0.0, 0.0, 1.0),
        )?;
        orientations[ul] = limb_orientation(hips_q, upper, ik.mid - positions[ul]);
        orientations[ll] = limb_orientation(orientations[ul], lower, ik.end - ik.mid);
        positions[ll] = ik.mid;
        positions[foot] = ik.end;
        orientations[foot] = foot_q;
        if let Some(toes) = sk.index_of(side.toes()) {
            positions[toes] = ik.end + foot_q * joints[toes].offset;
            orientations[toes] = foot_q;
        }
        legs[side as usize] = LimbState {
            interior_angle: ik.interior_angle,
            reach_deficit: ik.reach_deficit,
        };
    }

    Ok(PoseSolution {
        positions,
        orientations,
        timestamp: frame.root.timestamp,
        arms,
        legs,
        spine_bend: bend,
        spine_overbent: bend > MAX_SPINE_BEND,
    })
}

/// Rest pose of a placed skeleton, in the same layout as [`PoseSolution`].
pub fn placed_rest_pose(sk: &Skeleton, placement: &Placement) -> Vec<Vec3> {
    sk.world_positions().iter().map(|p| placement.apply(p)).collect()
}
