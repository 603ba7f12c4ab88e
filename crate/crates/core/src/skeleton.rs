//! Humanoid skeleton and the two-pass resize (uniform scale, then per-chain
//! tuning to measured dimensions).
//!
//! Rest orientations are identity for every joint, so a joint's local
//! offset is also its world-space displacement from the parent in T-pose.
//! The avatar faces +Z with its left side toward -X.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::calibration::BodyMeasurements;
use crate::error::{Error, Result};
use crate::geometry::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JointName {
    Hips,
    Spine,
    Chest,
    UpperChest,
    Neck,
    Head,
    LeftShoulder,
    LeftUpperArm,
    LeftLowerArm,
    LeftHand,
    RightShoulder,
    RightUpperArm,
    RightLowerArm,
    RightHand,
    LeftUpperLeg,
    LeftLowerLeg,
    LeftFoot,
    LeftToes,
    RightUpperLeg,
    RightLowerLeg,
    RightFoot,
    RightToes,
}

impl JointName {
    pub const ALL: [JointName; 22] = [
        JointName::Hips,
        JointName::Spine,
        JointName::Chest,
        JointName::UpperChest,
        JointName::Neck,
        JointName::Head,
        JointName::LeftShoulder,
        JointName::LeftUpperArm,
        JointName::LeftLowerArm,
        JointName::LeftHand,
        JointName::RightShoulder,
        JointName::RightUpperArm,
        JointName::RightLowerArm,
        JointName::RightHand,
        JointName::LeftUpperLeg,
        JointName::LeftLowerLeg,
        JointName::LeftFoot,
        JointName::LeftToes,
        JointName::RightUpperLeg,
        JointName::RightLowerLeg,
        JointName::RightFoot,
        JointName::RightToes,
    ];

    pub const SPINE_CHAIN: [JointName; 3] = [JointName::Spine, JointName::Chest, JointName::UpperChest];

    pub fn as_str(self) -> &'static str {
        match self {
            JointName::Hips => "Hips",
            JointName::Spine => "Spine",
            JointName::Chest => "Chest",
            JointName::UpperChest => "UpperChest",
            JointName::Neck => "Neck",
            JointName::Head => "Head",
            JointName::LeftShoulder => "LeftShoulder",
            JointName::LeftUpperArm => "LeftUpperArm",
            JointName::LeftLowerArm => "LeftLowerArm",
            JointName::LeftHand => "LeftHand",
            JointName::RightShoulder => "RightShoulder",
            JointName::RightUpperArm => "RightUpperArm",
            JointName::RightLowerArm => "RightLowerArm",
            JointName::RightHand => "RightHand",
            JointName::LeftUpperLeg => "LeftUpperLeg",
            JointName::LeftLowerLeg => "LeftLowerLeg",
            JointName::LeftFoot => "LeftFoot",
            JointName::LeftToes => "LeftToes",
            JointName::RightUpperLeg => "RightUpperLeg",
            JointName::RightLowerLeg => "RightLowerLeg",
            JointName::RightFoot => "RightFoot",
            JointName::RightToes => "RightToes",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for JointName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for JointName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        JointName::ALL
            .into_iter()
            .find(|j| j.as_str() == s)
            .ok_or_else(|| Error::InvalidSkeleton(format!("unknown joint name `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    /// Lateral sign of this side in the avatar frame.
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }

    pub fn shoulder(self) -> JointName {
        match self {
            Side::Left => JointName::LeftShoulder,
            Side::Right => JointName::RightShoulder,
        }
    }

    pub fn upper_arm(self) -> JointName {
        match self {
            Side::Left => JointName::LeftUpperArm,
            Side::Right => JointName::RightUpperArm,
        }
    }

    pub fn lower_arm(self) -> JointName {
        match self {
            Side::Left => JointName::LeftLowerArm,
            Side::Right => JointName::RightLowerArm,
        }
    }

    pub fn hand(self) -> JointName {
        match self {
            Side::Left => JointName::LeftHand,
            Side::Right => JointName::RightHand,
        }
    }

    pub fn upper_leg(self) -> JointName {
        match self {
            Side::Left => JointName::LeftUpperLeg,
            Side::Right => JointName::RightUpperLeg,
        }
    }

    pub fn lower_leg(self) -> JointName {
        match self {
            Side::Left => JointName::LeftLowerLeg,
            Side::Right => JointName::RightLowerLeg,
        }
    }

    pub fn foot(self) -> JointName {
        match self {
            Side::Left => JointName::LeftFoot,
            Side::Right => JointName::RightFoot,
        }
    }

    pub fn toes(self) -> JointName {
        match self {
            Side::Left => JointName::LeftToes,
            Side::Right => JointName::RightToes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChainKind {
    LeftArm,
    RightArm,
    LeftLeg,
    RightLeg,
    Spine,
}

/// Ordered parent-to-child joints of one of the five tuned chains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoneChain {
    pub kind: ChainKind,
    pub joints: Vec<JointName>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AvatarVariant {
    Sa,
    NSa,
    WSa,
    LLa,
    SLa,
}

impl AvatarVariant {
    pub const ALL: [AvatarVariant; 5] = [
        AvatarVariant::Sa,
        AvatarVariant::SLa,
        AvatarVariant::LLa,
        AvatarVariant::NSa,
        AvatarVariant::WSa,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AvatarVariant::Sa => "SA",
            AvatarVariant::NSa => "N_SA",
            AvatarVariant::WSa => "W_SA",
            AvatarVariant::LLa => "L_LA",
            AvatarVariant::SLa => "S_LA",
        }
    }
}

impl fmt::Display for AvatarVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AvatarVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AvatarVariant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown avatar variant `{s}`")))
    }
}

/// Proportion changes applied to SA to build the other variants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariantDeltas {
    /// Fractional shoulder-width change for N_SA (-) and W_SA (+).
    pub shoulder_width: f64,
    /// Fractional leg-length change for S_LA (-) and L_LA (+).
    pub leg_length: f64,
}

impl Default for VariantDeltas {
    fn default() -> Self {
        Self {
            shoulder_width: 0.2,
            leg_length: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Joint {
    pub name: JointName,
    pub parent: Option<usize>,
    /// Rest offset from the parent (for the root: world position).
    pub offset: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    joints: Vec<Joint>,
    index: [Option<usize>; 22],
    /// Eye marker, offset from the Head joint.
    eye: Vec3,
    pub variant: Option<AvatarVariant>,
}

/// Standard-avatar proportions, as fractions of eye height.
mod standard {
    pub const ANKLE_HEIGHT: f64 = 0.055;
    pub const LEG: f64 = 0.53;
    pub const THIGH_SHARE: f64 = 0.52;
    pub const HIP_ABOVE_LEG: f64 = 0.04;
    pub const HIP_HALF_WIDTH: f64 = 0.06;
    pub const SHOULDER_HEIGHT: f64 = 0.874;
    pub const SHOULDER_WIDTH: f64 = 0.23;
    pub const CLAVICLE_RISE: f64 = 0.03;
    pub const CLAVICLE_SPAN: f64 = 0.025;
    pub const SPINE_SHARES: [f64; 3] = [0.3, 0.35, 0.35];
    pub const NECK: f64 = 0.075;
    pub const HEAD: f64 = 0.04;
    pub const EYE_FORWARD: f64 = 0.06;
    pub const ARM: f64 = 0.33;
    pub const UPPER_ARM_SHARE: f64 = 0.53;
    pub const TOES_DOWN: f64 = 0.045;
    pub const TOES_FORWARD: f64 = 0.1;
}

impl Skeleton {
    /// Builds and validates a skeleton from joints listed parent-first.
    pub fn new(joints: Vec<Joint>, eye: Vec3, variant: Option<AvatarVariant>) -> Result<Self> {
        let mut index = [None; 22];
        for (i, j) in joints.iter().enumerate() {
            if index[j.name.slot()].replace(i).is_some() {
                return Err(Error::InvalidSkeleton(format!("duplicate joint {}", j.name)));
            }
            match j.parent {
                Some(p) if p >= i => {
                    return Err(Error::InvalidSkeleton(format!(
                        "joint {} is listed before its parent",
                        j.name
                    )))
                }
                None if i != 0 => {
                    return Err(Error::InvalidSkeleton(format!("second root {}", j.name)))
                }
                _ => {}
            }
            if !j.offset.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidSkeleton(format!("non-finite offset on {}", j.name)));
            }
        }
        let sk = Self {
            joints,
            index,
            eye,
            variant,
        };
        sk.validate_topology()?;
        Ok(sk)
    }

    fn validate_topology(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSkeleton(msg));
        match self.joints.first() {
            Some(j) if j.name == JointName::Hips && j.parent.is_none() => {}
            _ => return bad("skeleton must be rooted at Hips".into()),
        }
        let spine = self.spine_joints();
        if spine.len() < 2 {
            return bad(format!("need at least two spine joints, found {}", spine.len()));
        }
        // spine joints form a parent chain from Hips
        let mut parent = JointName::Hips;
        for &s in &spine {
            if self.parent_name(s) != Some(parent) {
                return bad(format!("{s} must be a child of {parent}"));
            }
            parent = s;
        }
        let top = parent;
        self.expect_child(JointName::Neck, &[top])?;
        self.expect_child(JointName::Head, &[JointName::Neck])?;
        for side in Side::BOTH {
            let arm_root: Vec<JointName> = if self.has(side.shoulder()) {
                self.expect_child(side.shoulder(), &[top])?;
                vec![side.shoulder()]
            } else {
                vec![top]
            };
            self.expect_child(side.upper_arm(), &arm_root)?;
            self.expect_child(side.lower_arm(), &[side.upper_arm()])?;
            self.expect_child(side.hand(), &[side.lower_arm()])?;
            self.expect_child(side.upper_leg(), &[JointName::Hips])?;
            self.expect_child(side.lower_leg(), &[side.upper_leg()])?;
            self.expect_child(side.foot(), &[side.lower_leg()])?;
            if self.has(side.toes()) {
                self.expect_child(side.toes(), &[side.foot()])?;
            }
        }
        for j in &self.joints[1..] {
            if !(j.offset.norm() > 0.0) {
                return bad(format!("bone ending at {} has zero length", j.name));
            }
        }
        for side in Side::BOTH {
            for name in [side.lower_arm(), side.hand()] {
                if self.offset(name).y.abs() > 1e-9 {
                    return bad(format!("{name} offset is not horizontal in the T-pose"));
                }
            }
        }
        if !self.eye.iter().all(|c| c.is_finite()) {
            return bad("non-finite eye marker".into());
        }
        if !(self.eye_height() > 0.0) {
            return bad("eye height must be positive".into());
        }
        Ok(())
    }

    fn expect_child(&self, name: JointName, parents: &[JointName]) -> Result<()> {
        if !self.has(name) {
            return Err(Error::InvalidSkeleton(format!("missing joint {name}")));
        }
        match self.parent_name(name) {
            Some(p) if parents.contains(&p) => Ok(()),
            other => Err(Error::InvalidSkeleton(format!(
                "{name} has parent {other:?}, expected one of {parents:?}"
            ))),
        }
    }

    /// Standard avatar (SA) with the given eye height.
    pub fn standard(eye_height: f64) -> Result<Self> {
        use standard::*;
        if !(eye_height > 0.0) {
            return Err(Error::InvalidArgument("eye height must be positive".into()));
        }
        let h = eye_height;
        let leg = LEG * h;
        let hip_joint_y = (ANKLE_HEIGHT + LEG) * h;
        let hips_y = hip_joint_y + HIP_ABOVE_LEG * h;
        let shoulder_y = SHOULDER_HEIGHT * h;
        let upper_chest_y = shoulder_y - CLAVICLE_RISE * h;
        let spine_total = upper_chest_y - hips_y;
        let arm = ARM * h;
        let half_width = 0.5 * SHOULDER_WIDTH * h;
        let neck_y = upper_chest_y + NECK * h;
        let head_y = neck_y + HEAD * h;

        let mut joints = Vec::new();
        let mut push = |name, parent: Option<usize>, offset: Vec3| {
            joints.push(Joint {
                name,
                parent,
                offset,
            });
            joints.len() - 1
        };
        let hips = push(JointName::Hips, None, Vec3::new(0.0, hips_y, 0.0));
        let mut parent = hips;
        for (name, share) in JointName::SPINE_CHAIN.into_iter().zip(SPINE_SHARES) {
            parent = push(name, Some(parent), Vec3::new(0.0, share * spine_total, 0.0));
        }
        let upper_chest = parent;
        let neck = push(JointName::Neck, Some(upper_chest), Vec3::new(0.0, NECK * h, 0.0));
        push(JointName::Head, Some(neck), Vec3::new(0.0, HEAD * h, 0.0));
        for side in Side::BOTH {
            let s = side.sign();
            let clavicle = push(
                side.shoulder(),
                Some(upper_chest),
                Vec3::new(s * CLAVICLE_SPAN * h, CLAVICLE_RISE * h, 0.0),
            );
            let upper = push(
                side.upper_arm(),
                Some(clavicle),
                Vec3::new(s * (half_width - CLAVICLE_SPAN * h), 0.0, 0.0),
            );
            let lower = push(
                side.lower_arm(),
                Some(upper),
                Vec3::new(s * UPPER_ARM_SHARE * arm, 0.0, 0.0),
            );
            push(
                side.hand(),
                Some(lower),
                Vec3::new(s * (1.0 - UPPER_ARM_SHARE) * arm, 0.0, 0.0),
            );
        }
        for side in Side::BOTH {
            let s = side.sign();
            let thigh = push(
                side.upper_leg(),
                Some(hips),
                Vec3::new(s * HIP_HALF_WIDTH * h, hip_joint_y - hips_y, 0.0),
            );
            let shin = push(
                side.lower_leg(),
                Some(thigh),
                Vec3::new(0.0, -THIGH_SHARE * leg, 0.0),
            );
            let foot = push(
                side.foot(),
                Some(shin),
                Vec3::new(0.0, -(1.0 - THIGH_SHARE) * leg, 0.0),
            );
            push(
                side.toes(),
                Some(foot),
                Vec3::new(0.0, -TOES_DOWN * h, TOES_FORWARD * h),
            );
        }
        let eye = Vec3::new(0.0, h - head_y, EYE_FORWARD * h);
        let mut sk = Self::new(joints, eye, Some(AvatarVariant::Sa))?;
        sk.set_eye_height(h);
        Ok(sk)
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn eye(&self) -> Vec3 {
        self.eye
    }

    pub fn has(&self, name: JointName) -> bool {
        self.index[name.slot()].is_some()
    }

    pub fn index_of(&self, name: JointName) -> Option<usize> {
        self.index[name.slot()]
    }

    fn idx(&self, name: JointName) -> usize {
        self.index[name.slot()].unwrap_or_else(|| panic!("validated skeleton lacks {name}"))
    }

    pub fn parent_name(&self, name: JointName) -> Option<JointName> {
        let j = &self.joints[self.index_of(name)?];
        j.parent.map(|p| self.joints[p].name)
    }

    pub fn offset(&self, name: JointName) -> Vec3 {
        self.joints[self.idx(name)].offset
    }

    fn offset_mut(&mut self, name: JointName) -> &mut Vec3 {
        let i = self.idx(name);
        &mut self.joints[i].offset
    }

    /// Spine-chain joints present, Hips side first.
    pub fn spine_joints(&self) -> Vec<JointName> {
        JointName::SPINE_CHAIN
            .into_iter()
            .filter(|j| self.has(*j))
            .collect()
    }

    pub fn chain(&self, kind: ChainKind) -> BoneChain {
        let joints = match kind {
            ChainKind::LeftArm | ChainKind::RightArm => {
                let s = if kind == ChainKind::LeftArm { Side::Left } else { Side::Right };
                vec![s.upper_arm(), s.lower_arm(), s.hand()]
            }
            ChainKind::LeftLeg | ChainKind::RightLeg => {
                let s = if kind == ChainKind::LeftLeg { Side::Left } else { Side::Right };
                vec![s.upper_leg(), s.lower_leg(), s.foot()]
            }
            ChainKind::Spine => self.spine_joints(),
        };
        BoneChain { kind, joints }
    }

    /// World rest positions, indexed like [`Skeleton::joints`].
    pub fn world_positions(&self) -> Vec<Vec3> {
        let mut out: Vec<Vec3> = Vec::with_capacity(self.joints.len());
        for j in &self.joints {
            let p = match j.parent {
                Some(p) => out[p] + j.offset,
                None => j.offset,
            };
            out.push(p);
        }
        out
    }

    pub fn world_rest_pose(&self) -> BTreeMap<JointName, Vec3> {
        self.joints
            .iter()
            .map(|j| j.name)
            .zip(self.world_positions())
            .collect()
    }

    pub fn world_position(&self, name: JointName) -> Vec3 {
        self.world_positions()[self.idx(name)]
    }

    pub fn eye_position(&self) -> Vec3 {
        self.world_position(JointName::Head) + self.eye
    }

    pub fn eye_height(&self) -> f64 {
        self.world_position(JointName::Head).y + self.eye.y
    }

    /// Moves the eye marker vertically so `eye_height()` returns `target`
    /// exactly.
    fn set_eye_height(&mut self, target: f64) {
        let head_y = self.world_position(JointName::Head).y;
        self.eye.y = target - head_y;
    }

    pub fn arm_length(&self, side: Side) -> f64 {
        self.offset(side.lower_arm()).norm() + self.offset(side.hand()).norm()
    }

    /// Vertical hip-to-ankle extent.
    pub fn leg_extent(&self, side: Side) -> f64 {
        -(self.offset(side.lower_leg()).y + self.offset(side.foot()).y)
    }

    pub fn dimensions(&self) -> Dimensions {
        let w = self.world_positions();
        let at = |n: JointName| w[self.idx(n)];
        let (ls, rs) = (at(JointName::LeftUpperArm), at(JointName::RightUpperArm));
        let hip_height = 0.5 * (at(JointName::LeftUpperLeg).y + at(JointName::RightUpperLeg).y);
        let ankle_height = 0.5 * (at(JointName::LeftFoot).y + at(JointName::RightFoot).y);
        let shoulder_height = 0.5 * (ls.y + rs.y);
        Dimensions {
            arm_left: self.arm_length(Side::Left),
            arm_right: self.arm_length(Side::Right),
            leg_left: self.leg_extent(Side::Left),
            leg_right: self.leg_extent(Side::Right),
            torso: shoulder_height - hip_height,
            shoulder_width: (rs - ls).norm(),
            shoulder_height,
            hip_height,
            ankle_height,
            neck_height: at(JointName::Neck).y,
            eye_height: at(JointName::Head).y + self.eye.y,
        }
    }

    /// The measurements a user with exactly this skeleton's body would
    /// produce.
    pub fn self_measurements(&self) -> BodyMeasurements {
        let w = self.world_positions();
        let at = |n: JointName| w[self.idx(n)];
        let d = self.dimensions();
        let head = at(JointName::Head);
        BodyMeasurements {
            c_lshoulder: at(JointName::LeftUpperArm),
            c_rshoulder: at(JointName::RightUpperArm),
            c_neck: at(JointName::Neck),
            c_head: head,
            head_local: Vec3::zeros(),
            l_arm_left: d.arm_left,
            l_arm_right: d.arm_right,
            l_leg: d.hip_height - d.ankle_height,
            l_torso: d.torso,
            l_neck: d.neck_height - d.shoulder_height,
            l_eyes: d.eye_height - d.neck_height,
            shoulder_width: d.shoulder_width,
            hmd_height: d.eye_height,
            root_height: d.hip_height,
            foot_height: d.ankle_height,
        }
    }

    /// Moves both UpperArm joints along the shoulder axis so they are
    /// `width` apart, keeping their midpoint.
    fn set_shoulder_width(&mut self, width: f64) -> Result<f64> {
        if !(width > 0.0) {
            return Err(Error::NonPositiveChain(format!("shoulder width {width}")));
        }
        let l = self.world_position(JointName::LeftUpperArm);
        let r = self.world_position(JointName::RightUpperArm);
        let current = (r - l).norm();
        if !(current > 0.0) {
            return Err(Error::NonPositiveChain("shoulder joints coincide".into()));
        }
        let axis = (r - l) / current;
        let half = 0.5 * (width - current);
        for (side, dir) in [(Side::Left, -axis), (Side::Right, axis)] {
            let off = self.offset_mut(side.upper_arm());
            *off += dir * half;
            if !(off.dot(&dir) > 0.0) {
                return Err(Error::NonPositiveChain(format!(
                    "{} collapses past its parent",
                    side.upper_arm()
                )));
            }
        }
        Ok(width / current)
    }

    /// Scales the spine chain's vertical components so the mean UpperArm
    /// height becomes `target`.
    fn set_shoulder_height(&mut self, target: f64) -> Result<f64> {
        let spine = self.spine_joints();
        let span: f64 = spine.iter().map(|j| self.offset(*j).y).sum();
        let current = self.dimensions().shoulder_height;
        let wanted = span + (target - current);
        if !(span > 0.0) || !(wanted > 0.0) {
            return Err(Error::NonPositiveChain(format!(
                "spine vertical extent would be {wanted:.4} m"
            )));
        }
        let factor = wanted / span;
        for j in spine {
            self.offset_mut(j).y *= factor;
        }
        Ok(factor)
    }

    fn scale_leg(&mut self, side: Side, factor: f64) {
        *self.offset_mut(side.lower_leg()) *= factor;
        *self.offset_mut(side.foot()) *= factor;
    }

    fn scale_arm(&mut self, side: Side, factor: f64) {
        *self.offset_mut(side.lower_arm()) *= factor;
        *self.offset_mut(side.hand()) *= factor;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dimensions {
    pub arm_left: f64,
    pub arm_right: f64,
    pub leg_left: f64,
    pub leg_right: f64,
    /// Mean UpperArm height minus mean UpperLeg height.
    pub torso: f64,
    pub shoulder_width: f64,
    pub shoulder_height: f64,
    pub hip_height: f64,
    pub ankle_height: f64,
    pub neck_height: f64,
    pub eye_height: f64,
}

/// Multiplies every offset by `hmd_height / eye_height`.
pub fn uniform_scale(sk: &Skeleton, hmd_height: f64) -> Result<Skeleton> {
    if !(hmd_height > 0.0) || !hmd_height.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "HMD height must be positive, got {hmd_height}"
        )));
    }
    let eye = sk.eye_height();
    if !(eye > 0.0) {
        return Err(Error::InvalidArgument("skeleton eye height must be positive".into()));
    }
    let k = hmd_height / eye;
    let mut out = sk.clone();
    for j in &mut out.joints {
        j.offset *= k;
    }
    out.eye *= k;
    Ok(out)
}

/// Per-chain factors applied by [`tune_chains`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainScales {
    pub left_leg: f64,
    pub right_leg: f64,
    pub left_arm: f64,
    pub right_arm: f64,
    pub shoulder_width: f64,
    pub spine: f64,
    pub neck_head: f64,
}

/// Resizes the five chains of a uniform-scaled skeleton to the measured body.
///
/// Legs are stretched to `l_leg` with the hip joints placed at the root
/// tracker height, arms to the mean fitted arm radius, the UpperArm joints
/// spread to the measured shoulder width, the spine's vertical extent set so
/// the shoulders sit at the measured shoulder-centre height, and finally
/// Neck and Head are scaled together so the eye marker meets the HMD height.
pub fn tune_chains(sk: &Skeleton, m: &BodyMeasurements) -> Result<(Skeleton, ChainScales)> {
    m.validate()?;
    let mut out = sk.clone();

    let mut leg = [1.0; 2];
    for (k, side) in Side::BOTH.into_iter().enumerate() {
        let extent = out.leg_extent(side);
        if !(extent > 0.0) {
            return Err(Error::NonPositiveChain(format!("{side:?} leg extent {extent}")));
        }
        leg[k] = m.l_leg / extent;
        out.scale_leg(side, leg[k]);
    }
    let hip_height = out.dimensions().hip_height;
    out.offset_mut(JointName::Hips).y += m.root_height - hip_height;

    let mut arm = [1.0; 2];
    for (k, side) in Side::BOTH.into_iter().enumerate() {
        let len = out.arm_length(side);
        if !(len > 0.0) {
            return Err(Error::NonPositiveChain(format!("{side:?} arm length {len}")));
        }
        arm[k] = m.arm_length() / len;
        out.scale_arm(side, arm[k]);
    }

    let shoulder_width = out.set_shoulder_width(m.shoulder_width)?;
    let spine = out.set_shoulder_height(m.shoulder_height())?;

    let neck_y = out.world_position(JointName::Neck).y;
    let current = out.eye_height() - neck_y;
    let wanted = m.hmd_height - neck_y;
    if !(current > 0.0) || !(wanted > 0.0) {
        return Err(Error::NonPositiveChain(format!(
            "neck-to-eye extent {current:.4} -> {wanted:.4} m"
        )));
    }
    let neck_head = wanted / current;
    *out.offset_mut(JointName::Head) *= neck_head;
    out.eye *= neck_head;
    out.set_eye_height(m.hmd_height);

    Ok((
        out,
        ChainScales {
            left_leg: leg[0],
            right_leg: leg[1],
            left_arm: arm[0],
            right_arm: arm[1],
            shoulder_width,
            spine,
            neck_head,
        },
    ))
}

/// Derives one of the five proportion variants from the standard avatar.
///
/// Shoulder variants only move the UpperArm joints. Leg variants scale both
/// leg bones, raise the hips to keep the feet in place and shorten or
/// lengthen the spine by the same amount so shoulder and eye heights do not
/// change.
pub fn make_variant(base: &Skeleton, variant: AvatarVariant, deltas: &VariantDeltas) -> Result<Skeleton> {
    let mut out = base.clone();
    out.variant = Some(variant);
    let eye = base.eye_height();
    let width = base.dimensions().shoulder_width;
    match variant {
        AvatarVariant::Sa => {}
        AvatarVariant::NSa => {
            out.set_shoulder_width(width * (1.0 - deltas.shoulder_width))?;
        }
        AvatarVariant::WSa => {
            out.set_shoulder_width(width * (1.0 + deltas.shoulder_width))?;
        }
        AvatarVariant::LLa | AvatarVariant::SLa => {
            let sign = if variant == AvatarVariant::LLa { 1.0 } else { -1.0 };
            let factor = 1.0 + sign * deltas.leg_length;
            if !(factor > 0.0) {
                return Err(Error::NonPositiveChain(format!("leg factor {factor}")));
            }
            let before = base.dimensions();
            for side in Side::BOTH {
                out.scale_leg(side, factor);
            }
            let after = out.dimensions();
            // keep ankles where they were
            out.offset_mut(JointName::Hips).y += before.ankle_height - after.ankle_height;
            out.set_shoulder_height(before.shoulder_height)?;
            out.set_eye_height(eye);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leg_ratio(sk: &Skeleton, side: Side) -> f64 {
        sk.offset(side.lower_leg()).norm() / sk.offset(side.foot()).norm()
    }

    fn arm_ratio(sk: &Skeleton, side: Side) -> f64 {
        sk.offset(side.lower_arm()).norm() / sk.offset(side.hand()).norm()
    }

    fn max_offset_diff(a: &Skeleton, b: &Skeleton) -> f64 {
        a.joints()
            .iter()
            .zip(b.joints())
            .map(|(x, y)| (x.offset - y.offset).norm())
            .chain(std::iter::once((a.eye() - b.eye()).norm()))
            .fold(0.0, f64::max)
    }

    #[test]
    fn standard_proportions() {
        let sk = Skeleton::standard(1.6).unwrap();
        let d = sk.dimensions();
        assert_eq!(sk.eye_height(), 1.6);
        assert!((d.leg_left - 0.53 * 1.6).abs() < 1e-12);
        assert!((d.shoulder_width - 0.23 * 1.6).abs() < 1e-12);
        assert!((d.arm_left - 0.33 * 1.6).abs() < 1e-12);
        assert!(d.neck_height > d.shoulder_height);
        assert!(d.eye_height > d.neck_height);
        // left side toward -X
        assert!(sk.world_position(JointName::LeftHand).x < 0.0);
    }

    #[test]
    fn leg_heights_decrease_from_hips() {
        let sk = Skeleton::standard(1.6).unwrap();
        let w = sk.world_rest_pose();
        for side in Side::BOTH {
            let ys = [
                w[&JointName::Hips].y,
                w[&side.upper_leg()].y,
                w[&side.lower_leg()].y,
                w[&side.foot()].y,
            ];
            assert!(ys.windows(2).all(|p| p[0] > p[1]), "{ys:?}");
        }
    }

    #[test]
    fn tiny_trees() {
        // world composition on a bare chain (bypasses topology checks)
        let joints = vec![
            Joint {
                name: JointName::Hips,
                parent: None,
                offset: Vec3::new(0.1, 0.2, 0.3),
            },
            Joint {
                name: JointName::Spine,
                parent: Some(0),
                offset: Vec3::new(0.0, 0.5, 0.0),
            },
        ];
        let sk = Skeleton {
            joints,
            index: [None; 22],
            eye: Vec3::zeros(),
            variant: None,
        };
        let w = sk.world_positions();
        assert_eq!(w[0], Vec3::new(0.1, 0.2, 0.3));
        assert_eq!(w[1], Vec3::new(0.1, 0.7, 0.3));
        // and validation rejects it for its missing limbs
        assert!(Skeleton::new(sk.joints.clone(), Vec3::y(), None).is_err());
    }

    #[test]
    fn topology_rules() {
        let sk = Skeleton::standard(1.6).unwrap();
        let without = |drop: &[JointName]| {
            let mut joints = Vec::new();
            let mut remap = vec![None; sk.joints().len()];
            for (i, j) in sk.joints().iter().enumerate() {
                if drop.contains(&j.name) {
                    continue;
                }
                remap[i] = Some(joints.len());
                joints.push(Joint {
                    parent: j.parent.and_then(|p| remap[p]),
                    ..*j
                });
            }
            Skeleton::new(joints, sk.eye(), None)
        };
        // optional joints may go (their children re-parent to None -> error), so
        // only drop leaves or full limbs
        assert!(without(&[JointName::LeftToes, JointName::RightToes]).is_ok());
        assert!(without(&[JointName::LeftHand]).is_err());
        assert!(without(&[JointName::Neck, JointName::Head]).is_err());

        let mut tilted = sk.joints().to_vec();
        let i = sk.index_of(JointName::RightHand).unwrap();
        tilted[i].offset.y = 0.05;
        assert!(Skeleton::new(tilted, sk.eye(), None).is_err());

        let mut dup = sk.joints().to_vec();
        dup[3].name = JointName::Spine;
        assert!(Skeleton::new(dup, sk.eye(), None).is_err());
    }

    #[test]
    fn uniform_scaling() {
        let sk = Skeleton::standard(1.6).unwrap();
        let same = uniform_scale(&sk, 1.6).unwrap();
        assert_eq!(max_offset_diff(&sk, &same), 0.0);

        let big = uniform_scale(&sk, 1.76).unwrap();
        assert!((big.eye_height() - 1.76).abs() < 1e-9);
        let k = 1.76 / 1.6;
        assert!((big.leg_extent(Side::Left) - sk.leg_extent(Side::Left) * k).abs() < 1e-12);
        assert!((leg_ratio(&big, Side::Left) - leg_ratio(&sk, Side::Left)).abs() < 1e-12);

        assert!(matches!(uniform_scale(&sk, 0.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn femur_example() {
        // a 0.40 m bone scaled by 1.76 / 1.60 becomes 0.44 m
        let sk = Skeleton::standard(1.6).unwrap();
        let mut joints = sk.joints().to_vec();
        let i = sk.index_of(JointName::LeftLowerLeg).unwrap();
        joints[i].offset = Vec3::new(0.0, -0.40, 0.0);
        let sk = Skeleton::new(joints, sk.eye(), None).unwrap();
        let k = 1.76 / sk.eye_height();
        let out = uniform_scale(&sk, sk.eye_height() * 1.1).unwrap();
        assert!((k - 1.76 / sk.eye_height()).abs() < 1e-15);
        assert!((out.offset(JointName::LeftLowerLeg).norm() - 0.44).abs() < 1e-12);
    }

    #[test]
    fn self_measurements_are_a_fixed_point() {
        let sk = uniform_scale(&Skeleton::standard(1.6).unwrap(), 1.71).unwrap();
        let (out, scales) = tune_chains(&sk, &sk.self_measurements()).unwrap();
        assert!(max_offset_diff(&sk, &out) < 1e-9);
        for f in [
            scales.left_leg,
            scales.right_leg,
            scales.left_arm,
            scales.right_arm,
            scales.shoulder_width,
            scales.spine,
            scales.neck_head,
        ] {
            assert!((f - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn leg_chain_example() {
        // upper:lower 0.45:0.40, target 0.935 -> factor 1.1
        let base = Skeleton::standard(1.6).unwrap();
        let mut joints = base.joints().to_vec();
        for side in Side::BOTH {
            joints[base.index_of(side.lower_leg()).unwrap()].offset = Vec3::new(0.0, -0.45, 0.0);
            joints[base.index_of(side.foot()).unwrap()].offset = Vec3::new(0.0, -0.40, 0.0);
        }
        let sk = Skeleton::new(joints, base.eye(), None).unwrap();
        let mut m = sk.self_measurements();
        m.l_leg = 0.935;
        m.foot_height = m.root_height - 0.935;
        m.l_torso = m.shoulder_height() - m.root_height;
        let (out, scales) = tune_chains(&sk, &m).unwrap();
        assert!((scales.left_leg - 1.1).abs() < 1e-12);
        assert!((out.offset(JointName::LeftLowerLeg).y + 0.495).abs() < 1e-12);
        assert!((out.offset(JointName::LeftFoot).y + 0.44).abs() < 1e-12);
        assert!((leg_ratio(&out, Side::Left) - 0.45 / 0.40).abs() < 1e-12);
    }

    #[test]
    fn shoulder_width_example() {
        let base = Skeleton::standard(1.6).unwrap();
        let mut joints = base.joints().to_vec();
        // put the UpperArm joints at (+-0.18, 1.40, 0)
        let uc = base.world_position(JointName::UpperChest);
        for side in Side::BOTH {
            joints[base.index_of(side.shoulder()).unwrap()].offset =
                Vec3::new(side.sign() * 0.04, 1.40 - uc.y, 0.0);
            joints[base.index_of(side.upper_arm()).unwrap()].offset =
                Vec3::new(side.sign() * 0.14, 0.0, 0.0);
        }
        let mut sk = Skeleton::new(joints, base.eye(), None).unwrap();
        sk.set_shoulder_width(0.44).unwrap();
        let l = sk.world_position(JointName::LeftUpperArm);
        let r = sk.world_position(JointName::RightUpperArm);
        assert!((l - Vec3::new(-0.22, 1.40, 0.0)).norm() < 1e-12);
        assert!((r - Vec3::new(0.22, 1.40, 0.0)).norm() < 1e-12);
        assert!(sk.set_shoulder_width(0.0).is_err());
        assert!(sk.set_shoulder_width(0.05).is_err());
    }

    #[test]
    fn full_tune_hits_targets_and_keeps_ratios() {
        let sk = uniform_scale(&Skeleton::standard(1.6).unwrap(), 1.62).unwrap();
        let mut m = sk.self_measurements();
        m.l_arm_left = 0.61;
        m.l_arm_right = 0.59;
        m.root_height = 0.95;
        m.foot_height = 0.09;
        m.l_leg = 0.86;
        m.c_lshoulder = Vec3::new(-0.19, 1.41, 0.0);
        m.c_rshoulder = Vec3::new(0.19, 1.41, 0.0);
        m.shoulder_width = 0.38;
        m.l_torso = 1.41 - 0.95;
        m.hmd_height = 1.62;
        let (out, _) = tune_chains(&sk, &m).unwrap();
        let d = out.dimensions();
        assert!((d.leg_left - 0.86).abs() < 1e-12 && (d.leg_right - 0.86).abs() < 1e-12);
        assert!((d.arm_left - 0.60).abs() < 1e-12 && (d.arm_right - 0.60).abs() < 1e-12);
        assert!((d.shoulder_width - 0.38).abs() < 1e-12);
        assert!((d.shoulder_height - 1.41).abs() < 1e-12);
        assert!((d.hip_height - 0.95).abs() < 1e-12);
        assert!((d.torso - 0.46).abs() < 1e-12);
        assert_eq!(d.eye_height, 1.62);
        for side in Side::BOTH {
            assert!((leg_ratio(&out, side) - leg_ratio(&sk, side)).abs() < 1e-9);
            assert!((arm_ratio(&out, side) - arm_ratio(&sk, side)).abs() < 1e-9);
        }
        // mirror symmetry survives symmetric inputs
        let w = out.world_rest_pose();
        for (l, r) in [
            (JointName::LeftHand, JointName::RightHand),
            (JointName::LeftFoot, JointName::RightFoot),
            (JointName::LeftToes, JointName::RightToes),
        ] {
            let (a, b) = (w[&l], w[&r]);
            assert!((a.x + b.x).abs() < 1e-12 && (a.y - b.y).abs() < 1e-12 && (a.z - b.z).abs() < 1e-12);
        }
    }

    #[test]
    fn impossible_spine_is_rejected() {
        let sk = uniform_scale(&Skeleton::standard(1.6).unwrap(), 1.62).unwrap();
        let mut m = sk.self_measurements();
        // shoulders below the hips
        m.c_lshoulder.y = 0.5;
        m.c_rshoulder.y = 0.5;
        assert!(tune_chains(&sk, &m).is_err());
    }

    #[test]
    fn variants() {
        let sa = Skeleton::standard(1.6).unwrap();
        let deltas = VariantDeltas::default();
        let same = make_variant(&sa, AvatarVariant::Sa, &deltas).unwrap();
        assert_eq!(same, sa);

        let w = make_variant(&sa, AvatarVariant::WSa, &deltas).unwrap();
        let (dw, d0) = (w.dimensions(), sa.dimensions());
        assert!((dw.shoulder_width - d0.shoulder_width * 1.2).abs() < 1e-12);
        assert_eq!(dw.eye_height, d0.eye_height);
        assert_eq!(dw.leg_left, d0.leg_left);
        assert_eq!(dw.arm_left, d0.arm_left);

        for v in [AvatarVariant::LLa, AvatarVariant::SLa] {
            let sk = make_variant(&sa, v, &deltas).unwrap();
            let d = sk.dimensions();
            assert_eq!(d.eye_height.to_bits(), d0.eye_height.to_bits());
            let expected = if v == AvatarVariant::LLa { 1.1 } else { 0.9 };
            assert!((d.leg_left - d0.leg_left * expected).abs() < 1e-12);
            assert!((d.shoulder_height - d0.shoulder_height).abs() < 1e-12);
            assert!((d.ankle_height - d0.ankle_height).abs() < 1e-12);
            assert_eq!(sk.variant, Some(v));
        }

        let absurd = VariantDeltas {
            shoulder_width: 1.5,
            leg_length: 0.1,
        };
        assert!(matches!(
            make_variant(&sa, AvatarVariant::NSa, &absurd),
            Err(Error::NonPositiveChain(_))
        ));
    }
}
