use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec3};

/// Minimum largest-cell displacement for a head exercise to count.
pub const MIN_HEAD_MOTION: f64 = 0.02;

/// Grid of candidate head-centre points on the HMD forward/right plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadGridConfig {
    /// Cells along -forward (behind the HMD).
    pub rows: usize,
    /// Cells along right, centred on the HMD.
    pub cols: usize,
    /// Cell size (m).
    pub cell_size: f64,
}

impl Default for HeadGridConfig {
    fn default() -> Self {
        Self {
            rows: 21,
            cols: 21,
            cell_size: 0.01,
        }
    }
}

impl HeadGridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rows < 2 || self.cols < 2 || !(self.cell_size > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "head grid needs rows, cols >= 2 and s > 0: {self:?}"
            )));
        }
        Ok(())
    }

    /// Position of cell (i, j) in the HMD frame: `s(-f)i + s r (j - m/2)`
    /// with forward `f = -Z` and right `r = +X`.
    pub fn cell_local(&self, i: usize, j: usize) -> Vec3 {
        let s = self.cell_size;
        let half = (self.cols / 2) as f64;
        Vec3::new(s * (j as f64 - half), 0.0, s * i as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadCenter {
    /// Fixed point in the HMD frame.
    pub local: Vec3,
    /// World position at the last pose of the exercise.
    pub world: Vec3,
    pub cell: (usize, usize),
    /// Largest displacement of the winning cell over the exercise.
    pub max_displacement: f64,
}

/// Tracks, per grid cell, the largest displacement from its initial world
/// position while the head moves.
#[derive(Debug, Clone)]
pub struct HeadGrid {
    cfg: HeadGridConfig,
    locals: Vec<Vec3>,
    initial: Vec<Vec3>,
    max_disp: Vec<f64>,
    last: Pose,
}

impl HeadGrid {
    pub fn new(cfg: HeadGridConfig, first: &Pose) -> Result<Self> {
        cfg.validate()?;
        let locals: Vec<Vec3> = (0..cfg.rows)
            .flat_map(|i| (0..cfg.cols).map(move |j| (i, j)))
            .map(|(i, j)| cfg.cell_local(i, j))
            .collect();
        let initial = locals.iter().map(|l| first.transform_point(l)).collect();
        let max_disp = vec![0.0; locals.len()];
        Ok(Self {
            cfg,
            locals,
            initial,
            max_disp,
            last: *first,
        })
    }

    /// `M_ij <- max(|G_ij(t) - G_ij(0)|, M_ij)`.
    pub fn update(&mut self, pose: &Pose) {
        for ((local, g0), m) in self
            .locals
            .iter()
            .zip(&self.initial)
            .zip(self.max_disp.iter_mut())
        {
            let d = (pose.transform_point(local) - g0).norm();
            if d > *m {
                *m = d;
            }
        }
        self.last = *pose;
    }

    /// Row-major `M` values, `rows * cols` long.
    pub fn displacements(&self) -> &[f64] {
        &self.max_disp
    }

    /// Picks the cell with the smallest maximum displacement; ties go to
    /// the lowest (i, j).
    pub fn finish(&self) -> Result<HeadCenter> {
        let largest = self.max_disp.iter().cloned().fold(0.0, f64::max);
        if largest < MIN_HEAD_MOTION {
            return Err(Error::InsufficientMotion {
                max_displacement: largest,
            });
        }
        let (best, m) = self
            .max_disp
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bi, bm), (k, &m)| {
                if m < bm {
                    (k, m)
                } else {
                    (bi, bm)
                }
            });
        let cell = (best / self.cfg.cols, best % self.cfg.cols);
        let local = self.locals[best];
        Ok(HeadCenter {
            local,
            world: self.last.transform_point(&local),
            cell,
            max_displacement: m,
        })
    }
}

pub fn estimate_head_center(poses: &[Pose], cfg: &HeadGridConfig) -> Result<HeadCenter> {
    let (first, rest) = poses
        .split_first()
        .ok_or(Error::InsufficientMotion {
            max_displacement: 0.0,
        })?;
    let mut grid = HeadGrid::new(*cfg, first)?;
    for pose in rest {
        grid.update(pose);
    }
    grid.finish()
}
