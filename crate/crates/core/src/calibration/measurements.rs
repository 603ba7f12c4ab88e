use crate::device_id::TPoseHeights;
use crate::error::{Error, Result};
use crate::geometry::Vec3;

const MIN_LENGTH: f64 = 0.01;
const MAX_LENGTH: f64 = 1.5;
const SHOULDER_WIDTH_RANGE: (f64, f64) = (0.2, 0.8);
const HEIGHT_SANITY_BAND: f64 = 0.15;

/// Joint centres recovered by the exercises.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointCenters {
    pub lshoulder: Vec3,
    pub rshoulder: Vec3,
    /// Fitted sphere radii of the left/right controller clouds.
    pub arm_left: f64,
    pub arm_right: f64,
    pub neck: Vec3,
    /// Head fixed point in the HMD frame.
    pub head_local: Vec3,
    /// Head fixed point in the world at the end of the head exercise.
    pub head_world: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyMeasurements {
    pub c_lshoulder: Vec3,
    pub c_rshoulder: Vec3,
    pub c_neck: Vec3,
    pub c_head: Vec3,
    pub head_local: Vec3,
    pub l_arm_left: f64,
    pub l_arm_right: f64,
    pub l_leg: f64,
    pub l_torso: f64,
    pub l_neck: f64,
    pub l_eyes: f64,
    pub shoulder_width: f64,
    /// h(T_HMD) at the T-pose.
    pub hmd_height: f64,
    /// h(T_root) at the T-pose.
    pub root_height: f64,
    /// Mean of the two foot-tracker heights at the T-pose.
    pub foot_height: f64,
}

impl BodyMeasurements {
    pub fn shoulder_height(&self) -> f64 {
        0.5 * (self.c_lshoulder.y + self.c_rshoulder.y)
    }

    pub fn arm_length(&self) -> f64 {
        0.5 * (self.l_arm_left + self.l_arm_right)
    }

    pub fn validate(&self) -> Result<()> {
        let lengths = [
            ("l_arm_left", self.l_arm_left),
            ("l_arm_right", self.l_arm_right),
            ("l_leg", self.l_leg),
            ("l_torso", self.l_torso),
            ("l_neck", self.l_neck),
            ("l_eyes", self.l_eyes),
        ];
        for (name, value) in lengths {
            if !(value > MIN_LENGTH && value < MAX_LENGTH) {
                return Err(Error::ImplausibleMeasurement(format!(
                    "{name} = {value:.4} m outside ({MIN_LENGTH}, {MAX_LENGTH})"
                )));
            }
        }
        let (lo, hi) = SHOULDER_WIDTH_RANGE;
        if !(self.shoulder_width > lo && self.shoulder_width < hi) {
            return Err(Error::ImplausibleMeasurement(format!(
                "shoulder width {:.4} m outside ({lo}, {hi})",
                self.shoulder_width
            )));
        }
        let stacked = self.l_leg + self.l_torso + self.l_neck + self.l_eyes;
        if (stacked - self.hmd_height).abs() > HEIGHT_SANITY_BAND * self.hmd_height {
            return Err(Error::ImplausibleMeasurement(format!(
                "leg + torso + neck + eyes = {stacked:.4} m is not within 15% of the eye height {:.4} m",
                self.hmd_height
            )));
        }
        Ok(())
    }
}

/// Derives limb lengths from T-pose tracker heights and fitted centres.
///
/// Shoulder height in the torso and neck terms is the mean of the two
/// shoulder-centre heights.
pub fn compute_measurements(heights: &TPoseHeights, centers: &JointCenters) -> Result<BodyMeasurements> {
    let finite = [
        centers.lshoulder,
        centers.rshoulder,
        centers.neck,
        centers.head_local,
        centers.head_world,
    ]
    .iter()
    .all(|v| v.iter().all(|c| c.is_finite()))
        && [heights.hmd, heights.root, heights.lfoot, heights.rfoot, centers.arm_left, centers.arm_right]
            .iter()
            .all(|v| v.is_finite());
    if !finite {
        return Err(Error::ImplausibleMeasurement("non-finite input".into()));
    }

    let foot_height = 0.5 * (heights.lfoot + heights.rfoot);
    let shoulder_height = 0.5 * (centers.lshoulder.y + centers.rshoulder.y);
    let m = BodyMeasurements {
        c_lshoulder: centers.lshoulder,
        c_rshoulder: centers.rshoulder,
        c_neck: centers.neck,
        c_head: centers.head_world,
        head_local: centers.head_local,
        l_arm_left: centers.arm_left,
        l_arm_right: centers.arm_right,
        l_leg: heights.root - foot_height,
        l_torso: shoulder_height - heights.root,
        l_neck: centers.neck.y - shoulder_height,
        l_eyes: heights.hmd - centers.neck.y,
        shoulder_width: (centers.rshoulder - centers.lshoulder).norm(),
        hmd_height: heights.hmd,
        root_height: heights.root,
        foot_height,
    };
    m.validate()?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heights() -> TPoseHeights {
        TPoseHeights {
            hmd: 1.62,
            root: 1.00,
            lfoot: 0.10,
            rfoot: 0.10,
        }
    }

    fn centers() -> JointCenters {
        JointCenters {
            lshoulder: Vec3::new(-0.18, 1.40, 0.0),
            rshoulder: Vec3::new(0.18, 1.40, 0.0),
            arm_left: 0.6,
            arm_right: 0.61,
            neck: Vec3::new(0.0, 1.48, -0.03),
            head_local: Vec3::new(0.0, 0.0, 0.09),
            head_world: Vec3::new(0.0, 1.62, -0.01),
        }
    }

    #[test]
    fn formulas() {
        let m = compute_measurements(&heights(), &centers()).unwrap();
        assert!((m.l_leg - 0.90).abs() < 1e-12);
        assert!((m.l_torso - 0.40).abs() < 1e-12);
        assert!((m.l_neck - 0.08).abs() < 1e-12);
        assert!((m.l_eyes - 0.14).abs() < 1e-12);
        assert!((m.shoulder_width - 0.36).abs() < 1e-12);
        assert!((m.arm_length() - 0.605).abs() < 1e-12);
        // additivity: the four vertical segments stack from foot to eye
        let stacked = m.l_leg + m.l_torso + m.l_neck + m.l_eyes;
        assert!((stacked - (m.hmd_height - m.foot_height)).abs() < 1e-12);
    }

    #[test]
    fn neck_below_shoulders_is_implausible() {
        let mut c = centers();
        c.neck.y = 1.35;
        assert!(matches!(
            compute_measurements(&heights(), &c),
            Err(Error::ImplausibleMeasurement(_))
        ));
    }

    #[test]
    fn out_of_range_values() {
        let mut c = centers();
        c.arm_left = 1.7;
        assert!(compute_measurements(&heights(), &c).is_err());

        let mut c = centers();
        c.rshoulder.x = 0.9;
        assert!(compute_measurements(&heights(), &c).is_err());

        let mut h = heights();
        h.lfoot = 0.4;
        h.rfoot = 0.4;
        // legs of 0.6 m with feet trackers 0.4 m up: stack misses eye height by 25%
        assert!(compute_measurements(&h, &centers()).is_err());

        let mut c = centers();
        c.neck.x = f64::NAN;
        assert!(compute_measurements(&heights(), &c).is_err());
    }
}
