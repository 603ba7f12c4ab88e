//! Assigns the six tracked devices to body roles from one T-pose snapshot.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{fit_plane, plane_uv_frame, project_to_plane, Pose, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DeviceKind {
    HeadMounted,
    Controller,
    GenericTracker,
}

impl DeviceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DeviceKind::HeadMounted => "hmd",
            DeviceKind::Controller => "controller",
            DeviceKind::GenericTracker => "tracker",
        }
    }
}

impl FromStr for DeviceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hmd" => Ok(DeviceKind::HeadMounted),
            "controller" => Ok(DeviceKind::Controller),
            "tracker" => Ok(DeviceKind::GenericTracker),
            other => Err(Error::InvalidArgument(format!("unknown device kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BodyRole {
    Hmd,
    LWrist,
    RWrist,
    Root,
    LFoot,
    RFoot,
}

impl BodyRole {
    pub const ALL: [BodyRole; 6] = [
        BodyRole::Hmd,
        BodyRole::LWrist,
        BodyRole::RWrist,
        BodyRole::Root,
        BodyRole::LFoot,
        BodyRole::RFoot,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BodyRole::Hmd => "hmd",
            BodyRole::LWrist => "lwrist",
            BodyRole::RWrist => "rwrist",
            BodyRole::Root => "root",
            BodyRole::LFoot => "lfoot",
            BodyRole::RFoot => "rfoot",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for BodyRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BodyRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BodyRole::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown body role `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceSample {
    pub index: usize,
    pub kind: DeviceKind,
    pub pose: Pose,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TPoseSnapshot {
    pub devices: Vec<DeviceSample>,
    pub hmd_forward: Vec3,
}

impl TPoseSnapshot {
    /// Builds a snapshot, taking the forward vector from the HMD's pose.
    pub fn from_devices(devices: Vec<DeviceSample>) -> Result<Self> {
        let hmd = devices
            .iter()
            .find(|d| d.kind == DeviceKind::HeadMounted)
            .ok_or_else(|| Error::InvalidSnapshot("no head-mounted device".into()))?;
        let hmd_forward = hmd.pose.forward();
        Ok(Self {
            devices,
            hmd_forward,
        })
    }
}

/// World heights recorded at the T-pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TPoseHeights {
    pub hmd: f64,
    pub root: f64,
    pub lfoot: f64,
    pub rfoot: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoleAssignment {
    devices: [usize; 6],
    pub tpose_heights: TPoseHeights,
}

impl RoleAssignment {
    pub fn new(devices: [usize; 6], tpose_heights: TPoseHeights) -> Self {
        Self {
            devices,
            tpose_heights,
        }
    }

    pub fn device(&self, role: BodyRole) -> usize {
        self.devices[role.slot()]
    }

    pub fn role_of(&self, device: usize) -> Option<BodyRole> {
        BodyRole::ALL.into_iter().find(|r| self.device(*r) == device)
    }
}

/// How a generic tracker qualifies as the root (lower back) tracker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootHeightRule {
    /// World height of the tracker above the floor.
    WorldHeight,
    /// Plane-projected v coordinate relative to the projected HMD, read literally.
    ProjectedV,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentifyConfig {
    pub root_height_threshold: f64,
    pub root_rule: RootHeightRule,
    /// Minimum |u| for a left/right decision.
    pub side_margin: f64,
    /// Maximum timestamp spread inside one snapshot.
    pub max_time_spread: f64,
}

impl Default for IdentifyConfig {
    fn default() -> Self {
        Self {
            root_height_threshold: 0.8,
            root_rule: RootHeightRule::WorldHeight,
            side_margin: 0.01,
            max_time_spread: 0.05,
        }
    }
}

fn validate(snapshot: &TPoseSnapshot, cfg: &IdentifyConfig) -> Result<()> {
    if snapshot.devices.len() != 6 {
        return Err(Error::InvalidSnapshot(format!(
            "expected 6 devices, got {}",
            snapshot.devices.len()
        )));
    }
    let count = |k| snapshot.devices.iter().filter(|d| d.kind == k).count();
    let counts = (
        count(DeviceKind::HeadMounted),
        count(DeviceKind::Controller),
        count(DeviceKind::GenericTracker),
    );
    if counts != (1, 2, 3) {
        return Err(Error::InvalidSnapshot(format!(
            "expected 1 hmd, 2 controllers, 3 trackers; got {}, {}, {}",
            counts.0, counts.1, counts.2
        )));
    }
    let (lo, hi) = snapshot
        .devices
        .iter()
        .map(|d| d.pose.timestamp)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| {
            (lo.min(t), hi.max(t))
        });
    if hi - lo > cfg.max_time_spread {
        return Err(Error::InvalidSnapshot(format!(
            "device timestamps spread over {:.3} s",
            hi - lo
        )));
    }
    Ok(())
}

/// Automatic tracker identification from a T-pose snapshot.
///
/// Fits a plane to the six positions, orients it along the HMD forward,
/// expresses the projected positions in (u, v) coordinates centred on the
/// projected HMD, then labels controllers by the sign of u and generic
/// trackers by height (root) and the sign of u (feet).
pub fn identify_trackers(snapshot: &TPoseSnapshot, cfg: &IdentifyConfig) -> Result<RoleAssignment> {
    validate(snapshot, cfg)?;
    let positions: Vec<Vec3> = snapshot.devices.iter().map(|d| d.pose.position).collect();
    let plane = fit_plane(&positions)?;
    let (u_axis, v_axis, plane) = plane_uv_frame(&plane, &snapshot.hmd_forward)?;

    let hmd = snapshot
        .devices
        .iter()
        .find(|d| d.kind == DeviceKind::HeadMounted)
        .expect("validated");
    let origin_proj = project_to_plane(&hmd.pose.position, &plane);
    let origin = (origin_proj.dot(&u_axis), origin_proj.dot(&v_axis));

    let mut lwrist = None;
    let mut rwrist = None;
    let mut root = None;
    let mut lfoot = None;
    let mut rfoot = None;

    for dev in &snapshot.devices {
        let p = project_to_plane(&dev.pose.position, &plane);
        let (u, v) = (p.dot(&u_axis) - origin.0, p.dot(&v_axis) - origin.1);
        match dev.kind {
            DeviceKind::HeadMounted => {}
            DeviceKind::Controller => {
                if u.abs() < cfg.side_margin {
                    return Err(Error::AmbiguousLayout(format!(
                        "controller {} lies on the body midline (u = {u:.4})",
                        dev.index
                    )));
                }
                let slot = if u < 0.0 { &mut lwrist } else { &mut rwrist };
                if slot.replace(dev.index).is_some() {
                    return Err(Error::AmbiguousLayout(
                        "both controllers are on the same side".into(),
                    ));
                }
            }
            DeviceKind::GenericTracker => {
                let height = match cfg.root_rule {
                    RootHeightRule::WorldHeight => dev.pose.position.y,
                    RootHeightRule::ProjectedV => v,
                };
                if height > cfg.root_height_threshold {
                    if root.replace(dev.index).is_some() {
                        return Err(Error::AmbiguousLayout(
                            "two trackers exceed the root height threshold".into(),
                        ));
                    }
                    continue;
                }
                if u.abs() < cfg.side_margin {
                    return Err(Error::AmbiguousLayout(format!(
                        "foot tracker {} lies on the body midline (u = {u:.4})",
                        dev.index
                    )));
                }
                let slot = if u < 0.0 { &mut lfoot } else { &mut rfoot };
                if slot.replace(dev.index).is_some() {
                    return Err(Error::AmbiguousLayout(
                        "both foot trackers are on the same side".into(),
                    ));
                }
            }
        }
    }

    let missing = |what: &str| Error::AmbiguousLayout(format!("no tracker identified as {what}"));
    let root = root.ok_or_else(|| missing("root"))?;
    let devices = [
        hmd.index,
        lwrist.ok_or_else(|| missing("left wrist"))?,
        rwrist.ok_or_else(|| missing("right wrist"))?,
        root,
        lfoot.ok_or_else(|| missing("left foot"))?,
        rfoot.ok_or_else(|| missing("right foot"))?,
    ];
    let height_of = |index: usize| {
        snapshot
            .devices
            .iter()
            .find(|d| d.index == index)
            .map(|d| d.pose.position.y)
            .expect("assigned device exists")
    };
    let tpose_heights = TPoseHeights {
        hmd: height_of(devices[0]),
        root: height_of(devices[3]),
        lfoot: height_of(devices[4]),
        rfoot: height_of(devices[5]),
    };
    let h = tpose_heights;
    if [h.hmd, h.root, h.lfoot, h.rfoot]
        .iter()
        .any(|&y| !(y > 0.0 && y < 3.0))
    {
        return Err(Error::InvalidSnapshot(format!(
            "tracker heights out of range (0, 3) m: {h:?}"
        )));
    }
    if h.root <= h.lfoot || h.root <= h.rfoot {
        return Err(Error::AmbiguousLayout(
            "root tracker is not above both feet".into(),
        ));
    }
    Ok(RoleAssignment::new(devices, tpose_heights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{yaw, Quat};

    fn facing_z() -> Quat {
        // device forward is local -Z; turn it to world +Z
        yaw(std::f64::consts::PI)
    }

    fn sample(index: usize, kind: DeviceKind, p: [f64; 3]) -> DeviceSample {
        let orientation = if kind == DeviceKind::HeadMounted {
            facing_z()
        } else {
            Quat::identity()
        };
        DeviceSample {
            index,
            kind,
            pose: Pose::new(Vec3::new(p[0], p[1], p[2]), orientation, 0.0),
        }
    }

    fn reference_layout() -> TPoseSnapshot {
        TPoseSnapshot {
            devices: vec![
                sample(0, DeviceKind::HeadMounted, [0.0, 1.70, 0.0]),
                sample(1, DeviceKind::Controller, [-0.8, 1.45, 0.0]),
                sample(2, DeviceKind::Controller, [0.8, 1.45, 0.0]),
                sample(3, DeviceKind::GenericTracker, [0.0, 1.00, -0.05]),
                sample(4, DeviceKind::GenericTracker, [-0.15, 0.05, 0.0]),
                sample(5, DeviceKind::GenericTracker, [0.15, 0.05, 0.0]),
            ],
            hmd_forward: Vec3::z(),
        }
    }

    #[test]
    fn reference_layout_is_labelled() {
        let a = identify_trackers(&reference_layout(), &IdentifyConfig::default()).unwrap();
        assert_eq!(a.device(BodyRole::Hmd), 0);
        assert_eq!(a.device(BodyRole::LWrist), 1);
        assert_eq!(a.device(BodyRole::RWrist), 2);
        assert_eq!(a.device(BodyRole::Root), 3);
        assert_eq!(a.device(BodyRole::LFoot), 4);
        assert_eq!(a.device(BodyRole::RFoot), 5);
        assert_eq!(a.tpose_heights.hmd, 1.70);
        assert_eq!(a.tpose_heights.root, 1.00);
        assert_eq!(a.tpose_heights.lfoot, 0.05);
        assert_eq!(a.tpose_heights.rfoot, 0.05);
        assert_eq!(a.role_of(4), Some(BodyRole::LFoot));
    }

    #[test]
    fn reference_layout_coordinates_by_hand() {
        // Brute-force the projection arithmetic for the root tracker: the
        // fitted normal is close to +Z, so v relative to the HMD is about
        // 1.00 - 1.70.
        let snap = reference_layout();
        let pts: Vec<Vec3> = snap.devices.iter().map(|d| d.pose.position).collect();
        let plane = fit_plane(&pts).unwrap();
        let (u, v, plane) = plane_uv_frame(&plane, &snap.hmd_forward).unwrap();
        let o = project_to_plane(&pts[0], &plane);
        let root = project_to_plane(&pts[3], &plane);
        let rel_v = root.dot(&v) - o.dot(&v);
        assert!((rel_v + 0.70).abs() < 0.01, "{rel_v}");
        assert!(project_to_plane(&pts[1], &plane).dot(&u) < o.dot(&u));
    }

    #[test]
    fn mirrored_layout_swaps_sides() {
        let mut snap = reference_layout();
        for d in &mut snap.devices {
            d.pose.position.x = -d.pose.position.x;
        }
        let a = identify_trackers(&snap, &IdentifyConfig::default()).unwrap();
        assert_eq!(a.device(BodyRole::LWrist), 2);
        assert_eq!(a.device(BodyRole::RWrist), 1);
        assert_eq!(a.device(BodyRole::LFoot), 5);
        assert_eq!(a.device(BodyRole::RFoot), 4);
        assert_eq!(a.device(BodyRole::Root), 3);
    }

    #[test]
    fn low_tracker_on_left_is_a_foot() {
        let mut snap = reference_layout();
        snap.devices[4].pose.position = Vec3::new(-0.15, 0.5, 0.0);
        let a = identify_trackers(&snap, &IdentifyConfig::default()).unwrap();
        assert_eq!(a.device(BodyRole::LFoot), 4);
    }

    #[test]
    fn literal_projected_v_rule_finds_no_root() {
        let cfg = IdentifyConfig {
            root_rule: RootHeightRule::ProjectedV,
            ..IdentifyConfig::default()
        };
        assert!(matches!(
            identify_trackers(&reference_layout(), &cfg),
            Err(Error::AmbiguousLayout(_))
        ));
    }

    #[test]
    fn ambiguous_layouts() {
        let cfg = IdentifyConfig::default();

        let mut two_roots = reference_layout();
        two_roots.devices[4].pose.position.y = 0.95;
        assert!(matches!(
            identify_trackers(&two_roots, &cfg),
            Err(Error::AmbiguousLayout(_))
        ));

        let mut same_side = reference_layout();
        same_side.devices[5].pose.position.x = -0.25;
        assert!(matches!(
            identify_trackers(&same_side, &cfg),
            Err(Error::AmbiguousLayout(_))
        ));

        let mut midline = reference_layout();
        midline.devices[2].pose.position.x = 0.005;
        assert!(matches!(
            identify_trackers(&midline, &cfg),
            Err(Error::AmbiguousLayout(_))
        ));
    }

    #[test]
    fn wrong_device_counts() {
        let cfg = IdentifyConfig::default();
        let mut five = reference_layout();
        five.devices.pop();
        assert!(matches!(
            identify_trackers(&five, &cfg),
            Err(Error::InvalidSnapshot(_))
        ));

        let mut three_controllers = reference_layout();
        three_controllers.devices[3].kind = DeviceKind::Controller;
        assert!(matches!(
            identify_trackers(&three_controllers, &cfg),
            Err(Error::InvalidSnapshot(_))
        ));

        let mut late = reference_layout();
        late.devices[2].pose.timestamp = 0.08;
        assert!(matches!(
            identify_trackers(&late, &cfg),
            Err(Error::InvalidSnapshot(_))
        ));
    }
}
