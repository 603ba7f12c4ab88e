//! Tracker-to-bone coupling.
//!
//! At one instant the avatar is placed in the world and each body tracker
//! records the rigid transform to the joint it drives. Afterwards the joint
//! follows the tracker through that fixed transform.

use std::fmt;

use crate::device_id::BodyRole;
use crate::error::{Error, Result};
use crate::geometry::{yaw, Pose, Quat, Vec3};
use crate::skeleton::{JointName, Skeleton};

/// Offsets longer than this are reported as a likely misalignment.
pub const MISALIGNMENT_WARNING: f64 = 0.30;

/// Largest timestamp spread allowed inside one coupling frame.
pub const MAX_COUPLING_SPREAD: f64 = 0.05;

/// Rigid placement of the avatar's rest pose in the world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub origin: Vec3,
    pub heading: Quat,
}

impl Default for Placement {
    fn default() -> Self {
        Self {
            origin: Vec3::zeros(),
            heading: Quat::identity(),
        }
    }
}

impl Placement {
    pub fn new(origin: Vec3, heading_angle: f64) -> Self {
        Self {
            origin,
            heading: yaw(heading_angle),
        }
    }

    pub fn apply(&self, rest: &Vec3) -> Vec3 {
        self.origin + self.heading * rest
    }
}

/// Device poses captured at the coupling instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingFrame {
    pub hmd: Pose,
    pub root: Pose,
    pub lfoot: Pose,
    pub rfoot: Pose,
}

impl CouplingFrame {
    pub fn tracker(&self, role: BodyRole) -> Option<&Pose> {
        match role {
            BodyRole::Hmd => Some(&self.hmd),
            BodyRole::Root => Some(&self.root),
            BodyRole::LFoot => Some(&self.lfoot),
            BodyRole::RFoot => Some(&self.rfoot),
            BodyRole::LWrist | BodyRole::RWrist => None,
        }
    }

    fn time_spread(&self) -> f64 {
        let ts = [
            self.hmd.timestamp,
            self.root.timestamp,
            self.lfoot.timestamp,
            self.rfoot.timestamp,
        ];
        let lo = ts.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }
}

/// Tracker roles bound to skeleton joints.
pub const BINDINGS: [(BodyRole, JointName); 3] = [
    (BodyRole::Root, JointName::Hips),
    (BodyRole::LFoot, JointName::LeftFoot),
    (BodyRole::RFoot, JointName::RightFoot),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Binding {
    pub role: BodyRole,
    pub joint: JointName,
    /// Joint position in the tracker frame.
    pub offset: Vec3,
    /// Joint orientation relative to the tracker.
    pub rotation: Quat,
}

impl Binding {
    /// Joint world pose for a tracker pose.
    pub fn apply(&self, tracker: &Pose) -> (Vec3, Quat) {
        (
            tracker.position + tracker.orientation * self.offset,
            tracker.orientation * self.rotation,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MisalignmentWarning {
    pub role: BodyRole,
    pub joint: JointName,
    pub distance: f64,
}

impl fmt::Display for MisalignmentWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} tracker is {:.3} m from {}; the user may not be standing in the avatar",
            self.role, self.distance, self.joint
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OffsetSet {
    pub bindings: Vec<Binding>,
    /// Head fixed point in the HMD frame.
    pub head_anchor: Vec3,
    /// Hips-to-head direction at coupling, in the Hips frame.
    pub spine_rest_axis: Vec3,
    pub timestamp: f64,
    pub warnings: Vec<MisalignmentWarning>,
}

impl OffsetSet {
    pub fn binding(&self, role: BodyRole) -> Option<&Binding> {
        self.bindings.iter().find(|b| b.role == role)
    }
}

/// Records the offsets of the root and foot trackers to Hips and the
/// ankles, with the avatar's rest pose placed by `placement`.
pub fn compute_offsets(
    sk: &Skeleton,
    placement: &Placement,
    frame: &CouplingFrame,
    head_anchor: Vec3,
) -> Result<OffsetSet> {
    let spread = frame.time_spread();
    if !(spread <= MAX_COUPLING_SPREAD) {
        return Err(Error::InvalidSnapshot(format!(
            "coupling poses spread over {spread:.3} s"
        )));
    }
    let rest = sk.world_rest_pose();
    let mut bindings = Vec::with_capacity(BINDINGS.len());
    let mut warnings = Vec::new();
    for (role, joint) in BINDINGS {
        let tracker = frame.tracker(role).expect("body tracker");
        let position = placement.apply(&rest[&joint]);
        let offset = tracker.inverse_transform_point(&position);
        let rotation = tracker.orientation.inverse() * placement.heading;
        let distance = offset.norm();
        if distance > MISALIGNMENT_WARNING {
            warnings.push(MisalignmentWarning {
                role,
                joint,
                distance,
            });
        }
        bindings.push(Binding {
            role,
            joint,
            offset,
            rotation,
        });
    }
    let hips_position = placement.apply(&rest[&JointName::Hips]);
    let head = frame.hmd.transform_point(&head_anchor);
    let axis = placement.heading.inverse() * (head - hips_position);
    if !(axis.norm() > 1e-3) {
        return Err(Error::DegenerateInput("head coincides with hips at coupling".into()));
    }
    Ok(OffsetSet {
        bindings,
        head_anchor,
        spine_rest_axis: axis.normalize(),
        timestamp: frame.root.timestamp,
        warnings,
    })
}
