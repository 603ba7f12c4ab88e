//! Accuracy evaluation over avatar variant x scaling method.
//!
//! One recording is replayed against all ten conditions. Per condition the
//! skeleton is coupled at the `couple` frame, then every frame of the arm
//! and squat exercises is solved and measured.

use std::fmt;

use crate::animation::{solve_frame, PoseSolution, TrackedFrame};
use crate::calibration::BodyMeasurements;
use crate::coupling::{compute_offsets, CouplingFrame, MisalignmentWarning, Placement};
use crate::device_id::RoleAssignment;
use crate::error::{Error, Result};
use crate::io::TrackerStream;
use crate::pipeline::{coupling_frame, segment_tracked};
use crate::skeleton::{make_variant, tune_chains, uniform_scale, AvatarVariant, ChainScales, Side, Skeleton, VariantDeltas};
use crate::synth::segments;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScalingMethod {
    Uniform,
    Fitted,
}

impl ScalingMethod {
    pub const ALL: [ScalingMethod; 2] = [ScalingMethod::Uniform, ScalingMethod::Fitted];

    pub fn as_str(self) -> &'static str {
        match self {
            ScalingMethod::Uniform => "Uniform",
            ScalingMethod::Fitted => "Fitted",
        }
    }
}

impl fmt::Display for ScalingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Condition {
    pub variant: AvatarVariant,
    pub method: ScalingMethod,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.variant, self.method)
    }
}

pub fn conditions() -> Vec<Condition> {
    AvatarVariant::ALL
        .iter()
        .flat_map(|&variant| ScalingMethod::ALL.iter().map(move |&method| Condition { variant, method }))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (0 for fewer than two values).
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("statistics of an empty series".into()));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Ok(Self {
            count: values.len(),
            mean,
            sd: var.sqrt(),
            min: values.iter().cloned().fold(f64::INFINITY, f64::min),
            max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

fn population_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Controller to solved wrist, per side (cm).
pub fn hand_dist(sk: &Skeleton, sol: &PoseSolution, frame: &TrackedFrame) -> [f64; 2] {
    Side::BOTH.map(|s| {
        let wrist = sol.position(sk, s.hand()).expect("validated skeleton");
        100.0 * (frame.wrist(s).position - wrist).norm()
    })
}

/// Controller to the same-side hip joint, per side (cm).
pub fn leg_dist(sk: &Skeleton, sol: &PoseSolution, frame: &TrackedFrame) -> [f64; 2] {
    Side::BOTH.map(|s| {
        let hip = sol.position(sk, s.upper_leg()).expect("validated skeleton");
        100.0 * (frame.wrist(s).position - hip).norm()
    })
}

/// Interior knee angle between the thigh and shin bones, per side (deg).
pub fn knee_angle(sk: &Skeleton, sol: &PoseSolution) -> [f64; 2] {
    Side::BOTH.map(|s| {
        let at = |n| sol.position(sk, n).expect("validated skeleton");
        let knee = at(s.lower_leg());
        let a = at(s.upper_leg()) - knee;
        let b = at(s.foot()) - knee;
        let cos = (a.dot(&b) / (a.norm() * b.norm())).clamp(-1.0, 1.0);
        cos.acos().to_degrees()
    })
}

/// Recorded accuracy exercises.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyStreams {
    pub couple: CouplingFrame,
    pub arms: Vec<TrackedFrame>,
    pub legs: Vec<TrackedFrame>,
}

impl AccuracyStreams {
    /// Coupling on the first `couple` frame, then `arms_move` and
    /// `legs_move`.
    pub fn from_stream(stream: &TrackerStream, roles: &RoleAssignment) -> Result<Self> {
        let couple = stream.segment_frames(segments::COUPLE)?;
        let arms = segment_tracked(stream, segments::ARMS_MOVE, roles)?;
        let legs = segment_tracked(stream, segments::LEGS_MOVE, roles)?;
        if arms.is_empty() || legs.is_empty() {
            return Err(Error::InvalidArgument("accuracy segments have no complete frames".into()));
        }
        Ok(Self {
            couple: coupling_frame(&couple[0], roles),
            arms,
            legs,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalConfig {
    pub deltas: VariantDeltas,
    /// Where the avatar's rest pose is placed for coupling.
    pub placement: Placement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub condition: Condition,
    pub arm_times: Vec<f64>,
    pub hand: Vec<[f64; 2]>,
    pub leg_times: Vec<f64>,
    pub leg: Vec<[f64; 2]>,
    pub knee: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSummary {
    pub condition: Condition,
    pub hand: Stats,
    pub leg: Stats,
    pub knee: Stats,
    pub scales: Option<ChainScales>,
    pub warnings: Vec<MisalignmentWarning>,
}

/// Per-frame spread of the knee angle across the five variants.
#[derive(Debug, Clone, PartialEq)]
pub struct KneeDispersion {
    pub method: ScalingMethod,
    /// Population sd over variants, averaged over both knees (deg).
    pub per_frame: Vec<f64>,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub deltas: VariantDeltas,
    pub summaries: Vec<ConditionSummary>,
    pub series: Vec<MetricSeries>,
    pub dispersion: Vec<KneeDispersion>,
}

impl Report {
    pub fn summary(&self, condition: Condition) -> Option<&ConditionSummary> {
        self.summaries.iter().find(|s| s.condition == condition)
    }

    pub fn dispersion(&self, method: ScalingMethod) -> Option<&KneeDispersion> {
        self.dispersion.iter().find(|d| d.method == method)
    }
}

/// Skeleton for one condition: the variant uniformly scaled to the HMD
/// height, then (Fitted) tuned to the measurements.
pub fn condition_skeleton(
    base: &Skeleton,
    m: &BodyMeasurements,
    condition: Condition,
    deltas: &VariantDeltas,
) -> Result<(Skeleton, Option<ChainScales>)> {
    let variant = make_variant(base, condition.variant, deltas)?;
    let uniform = uniform_scale(&variant, m.hmd_height)?;
    match condition.method {
        ScalingMethod::Uniform => Ok((uniform, None)),
        ScalingMethod::Fitted => {
            let (sk, scales) = tune_chains(&uniform, m)?;
            Ok((sk, Some(scales)))
        }
    }
}

fn flatten(pairs: &[[f64; 2]]) -> Vec<f64> {
    pairs.iter().flatten().copied().collect()
}

pub fn run_condition(
    streams: &AccuracyStreams,
    base: &Skeleton,
    m: &BodyMeasurements,
    condition: Condition,
    cfg: &EvalConfig,
) -> Result<(ConditionSummary, MetricSeries)> {
    let (sk, scales) = condition_skeleton(base, m, condition, &cfg.deltas)?;
    let offsets = compute_offsets(&sk, &cfg.placement, &streams.couple, m.head_local)?;

    let mut hand = Vec::with_capacity(streams.arms.len());
    for f in &streams.arms {
        let sol = solve_frame(&sk, &offsets, f)?;
        hand.push(hand_dist(&sk, &sol, f));
    }
    let mut leg = Vec::with_capacity(streams.legs.len());
    let mut knee = Vec::with_capacity(streams.legs.len());
    for f in &streams.legs {
        let sol = solve_frame(&sk, &offsets, f)?;
        leg.push(leg_dist(&sk, &sol, f));
        knee.push(knee_angle(&sk, &sol));
    }
    let summary = ConditionSummary {
        condition,
        hand: Stats::of(&flatten(&hand))?,
        leg: Stats::of(&flatten(&leg))?,
        knee: Stats::of(&flatten(&knee))?,
        scales,
        warnings: offsets.warnings.clone(),
    };
    let series = MetricSeries {
        condition,
        arm_times: streams.arms.iter().map(|f| f.root.timestamp).collect(),
        hand,
        leg_times: streams.legs.iter().map(|f| f.root.timestamp).collect(),
        leg,
        knee,
    };
    Ok((summary, series))
}

/// Runs all ten conditions; any failure aborts the whole run.
pub fn run_experiment(
    streams: &AccuracyStreams,
    base: &Skeleton,
    m: &BodyMeasurements,
    cfg: &EvalConfig,
) -> Result<Report> {
    let mut summaries = Vec::new();
    let mut series = Vec::new();
    for c in conditions() {
        let (s, m) = run_condition(streams, base, m, c, cfg)?;
        summaries.push(s);
        series.push(m);
    }
    let dispersion = ScalingMethod::ALL
        .iter()
        .map(|&method| {
            let runs: Vec<&MetricSeries> = series.iter().filter(|s| s.condition.method == method).collect();
            let frames = runs[0].knee.len();
            let per_frame: Vec<f64> = (0..frames)
                .map(|k| {
                    let side = |i: usize| population_sd(&runs.iter().map(|r| r.knee[k][i]).collect::<Vec<_>>());
                    0.5 * (side(0) + side(1))
                })
                .collect();
            let mean = per_frame.iter().sum::<f64>() / frames as f64;
            KneeDispersion {
                method,
                per_frame,
                mean,
            }
        })
        .collect();
    Ok(Report {
        deltas: cfg.deltas,
        summaries,
        series,
        dispersion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_conditions() {
        let c = conditions();
        assert_eq!(c.len(), 10);
        let mut dedup = c.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), 10);
    }

    #[test]
    fn stats() {
        let s = Stats::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!((s.min, s.max, s.count), (1.0, 4.0, 4));
        assert_eq!(Stats::of(&[7.0]).unwrap().sd, 0.0);
        assert!(Stats::of(&[]).is_err());
        assert_eq!(population_sd(&[2.0, 4.0]), 1.0);
    }
}
