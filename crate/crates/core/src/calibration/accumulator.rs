use crate::error::{Error, Result};
use crate::geometry::{fit_sphere, SphereFit, Vec3};

/// Stopping rule of the streaming sphere fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccumulatorConfig {
    /// Minimum number of accepted points before a fit is attempted.
    pub min_points: usize,
    /// Minimum distance between a new sample and every accepted point (m).
    pub min_spacing: f64,
    /// Convergence threshold on the centre shift (m).
    pub tolerance: f64,
}

impl AccumulatorConfig {
    pub const SHOULDER: AccumulatorConfig = AccumulatorConfig {
        min_points: 70,
        min_spacing: 0.05,
        tolerance: 0.02,
    };

    pub const NECK: AccumulatorConfig = AccumulatorConfig {
        min_points: 60,
        min_spacing: 0.015,
        tolerance: 0.02,
    };

    pub fn validate(&self) -> Result<()> {
        if self.min_points < 4 || !(self.min_spacing > 0.0) || !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "accumulator config needs n >= 4, d > 0, tau > 0: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Why a sample did not finish the fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hold {
    /// Closer than `min_spacing` to an accepted point; discarded.
    TooClose,
    /// Accepted, but fewer than `min_points` collected.
    BelowMinimum,
    /// Accepted, but the cloud does not constrain a sphere yet.
    Degenerate,
    /// Accepted; the centre moved by `shift` (>= tolerance).
    Moving { shift: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Progress {
    Continue(Hold),
    Finished(SphereFit),
}

/// Streaming centre-of-rotation estimator.
///
/// Samples closer than `min_spacing` to any accepted point are dropped. Once
/// `min_points` are collected, every accepted sample triggers two fits, with
/// and without the new point; the estimator converges when the two centres
/// differ by less than `tolerance`.
#[derive(Debug, Clone)]
pub struct CenterAccumulator {
    config: AccumulatorConfig,
    points: Vec<Vec3>,
    // fit of the first `.0` accepted points
    last_fit: Option<(usize, SphereFit)>,
    converged: Option<SphereFit>,
}

impl CenterAccumulator {
    pub fn new(config: AccumulatorConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            points: Vec::new(),
            last_fit: None,
            converged: None,
        })
    }

    pub fn config(&self) -> &AccumulatorConfig {
        &self.config
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn accepted(&self) -> usize {
        self.points.len()
    }

    pub fn result(&self) -> Option<&SphereFit> {
        self.converged.as_ref()
    }

    pub fn is_converged(&self) -> bool {
        self.converged.is_some()
    }

    fn fit_prefix(&self, len: usize) -> Result<SphereFit> {
        match self.last_fit {
            Some((n, fit)) if n == len => Ok(fit),
            _ => fit_sphere(&self.points[..len]),
        }
    }

    pub fn accumulate(&mut self, sample: Vec3) -> Result<Progress> {
        if self.converged.is_some() {
            return Err(Error::AlreadyConverged);
        }
        let d = self.config.min_spacing;
        if self.points.iter().any(|p| (p - sample).norm() < d) {
            return Ok(Progress::Continue(Hold::TooClose));
        }
        self.points.push(sample);
        let len = self.points.len();
        if len < self.config.min_points {
            return Ok(Progress::Continue(Hold::BelowMinimum));
        }

        let with_new = match fit_sphere(&self.points) {
            Ok(fit) => fit,
            Err(Error::DegenerateInput(_)) => return Ok(Progress::Continue(Hold::Degenerate)),
            Err(e) => return Err(e),
        };
        let previous = self.fit_prefix(len - 1);
        self.last_fit = Some((len, with_new));
        let previous = match previous {
            Ok(fit) => fit,
            Err(Error::DegenerateInput(_)) => return Ok(Progress::Continue(Hold::Degenerate)),
            Err(e) => return Err(e),
        };

        let shift = (with_new.center - previous.center).norm();
        if shift < self.config.tolerance {
            self.converged = Some(with_new);
            Ok(Progress::Finished(with_new))
        } else {
            Ok(Progress::Continue(Hold::Moving { shift }))
        }
    }
}

/// Converged centre plus provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterEstimate {
    pub fit: SphereFit,
    pub config: AccumulatorConfig,
    pub accepted: usize,
    /// Stream samples consumed up to and including the converging one.
    pub samples: usize,
}

/// Sample budget for one streaming estimate (~55 s at 90 Hz).
pub const DEFAULT_SAMPLE_BUDGET: usize = 5000;

/// Feeds `stream` into a fresh accumulator until it converges.
pub fn run_center_calibration<I>(
    stream: I,
    config: AccumulatorConfig,
    budget: usize,
    label: &str,
) -> Result<CenterEstimate>
where
    I: IntoIterator<Item = Vec3>,
{
    let mut acc = CenterAccumulator::new(config)?;
    for (i, sample) in stream.into_iter().take(budget).enumerate() {
        if let Progress::Finished(fit) = acc.accumulate(sample)? {
            return Ok(CenterEstimate {
                fit,
                config,
                accepted: acc.accepted(),
                samples: i + 1,
            });
        }
    }
    Err(Error::CalibrationTimeout(format!(
        "{label}: no convergence after {} accepted points (budget {budget} samples)",
        acc.accepted()
    )))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShoulderCalibration {
    pub left: CenterEstimate,
    pub right: CenterEstimate,
}

/// Runs one shoulder accumulator per side on the controller-tip streams.
pub fn run_shoulder_calibration<L, R>(
    left: L,
    right: R,
    config: AccumulatorConfig,
    budget: usize,
) -> Result<ShoulderCalibration>
where
    L: IntoIterator<Item = Vec3>,
    R: IntoIterator<Item = Vec3>,
{
    Ok(ShoulderCalibration {
        left: run_center_calibration(left, config, budget, "left shoulder")?,
        right: run_center_calibration(right, config, budget, "right shoulder")?,
    })
}

/// Neck pivot from HMD positions during the head exercise.
pub fn run_neck_calibration<I>(hmd: I, config: AccumulatorConfig, budget: usize) -> Result<CenterEstimate>
where
    I: IntoIterator<Item = Vec3>,
{
    run_center_calibration(hmd, config, budget, "neck")
}
