//! Step 2: joint centres and limb dimensions.
//!
//! Shoulder and neck centres come from streaming sphere fits over the
//! exercise samples, the head fixed point from a displacement grid rigid to
//! the HMD, and the remaining lengths from T-pose tracker heights.

mod accumulator;
mod head_grid;
mod measurements;

pub use accumulator::{
    run_center_calibration, run_neck_calibration, run_shoulder_calibration, AccumulatorConfig,
    CenterAccumulator, CenterEstimate, Hold, Progress, ShoulderCalibration, DEFAULT_SAMPLE_BUDGET,
};
pub use head_grid::{estimate_head_center, HeadCenter, HeadGrid, HeadGridConfig, MIN_HEAD_MOTION};
pub use measurements::{compute_measurements, BodyMeasurements, JointCenters};
