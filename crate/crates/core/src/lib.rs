//! Full-body avatar calibration for six-device VR tracking: tracker role
//! identification, joint-centre estimation, skeleton resizing, tracker to
//! bone coupling and per-frame pose solving.

pub mod animation;
pub mod calibration;
pub mod coupling;
pub mod device_id;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod pipeline;
pub mod skeleton;
pub mod synth;

pub use error::{Error, Result};
