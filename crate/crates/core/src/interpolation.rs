//! Takagi-Sugeno-Kang blending of per-intensity power models.
//!
//! Each grid point contributes the analytical model evaluated with its own
//! fitted parameters at the query intensity. Memberships are triangles in
//! `log2(I)` space with apex at the grid point and feet at its neighbours,
//! so at most two points are active for any query and their weights sum to
//! one. Queries outside the grid use the nearest extreme point alone.
//! Core count is never blended; it enters each model exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::power::{self, IntensityParams, OpMix, PlatformProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<IntensityParams>", into = "Vec<IntensityParams>")]
pub struct IntensityGrid {
    points: Vec<IntensityParams>,
}

impl IntensityGrid {
    /// Builds a grid from points in any order. Intensities must be distinct.
    pub fn new(mut points: Vec<IntensityParams>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("intensity grid is empty".into()));
        }
        for p in &points {
            p.validate()?;
        }
        points.sort_by(|a, b| a.intensity.total_cmp(&b.intensity));
        if let Some(w) = points.windows(2).find(|w| w[0].intensity >= w[1].intensity) {
            return Err(Error::Config(format!(
                "duplicate grid intensity {}",
                w[1].intensity
            )));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[IntensityParams] {
        &self.points
    }

    pub fn intensities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.intensity).collect()
    }

    /// Nonzero membership weights `(point index, weight)` at `intensity`.
    pub fn memberships(&self, intensity: f64) -> Result<Vec<(usize, f64)>> {
        power::check_intensity(intensity)?;
        let last = self.points.len() - 1;
        if intensity <= self.points[0].intensity {
            return Ok(vec![(0, 1.0)]);
        }
        if intensity >= self.points[last].intensity {
            return Ok(vec![(last, 1.0)]);
        }
        // First point strictly above the query; the bracket is [k-1, k].
        let k = self.points.partition_point(|p| p.intensity <= intensity);
        let lo = self.points[k - 1].intensity;
        if lo == intensity {
            return Ok(vec![(k - 1, 1.0)]);
        }
        let (u, u_lo, u_hi) = (intensity.log2(), lo.log2(), self.points[k].intensity.log2());
        let w_hi = (u - u_lo) / (u_hi - u_lo);
        Ok(vec![(k - 1, 1.0 - w_hi), (k, w_hi)])
    }
}

impl TryFrom<Vec<IntensityParams>> for IntensityGrid {
    type Error = Error;

    fn try_from(points: Vec<IntensityParams>) -> Result<Self> {
        Self::new(points)
    }
}

impl From<IntensityGrid> for Vec<IntensityParams> {
    fn from(grid: IntensityGrid) -> Self {
        grid.points
    }
}

/// Power at any intensity and core count, blended over the grid.
pub fn tsk_power(
    profile: &PlatformProfile,
    grid: &IntensityGrid,
    mix: &OpMix,
    intensity: f64,
    n: u32,
) -> Result<f64> {
    profile.check_cores(n)?;
    let dyn_sum = profile.dynamic_sum(mix)?;
    let weights = grid.memberships(intensity)?;
    let (num, den) = weights.iter().fold((0.0, 0.0), |(num, den), &(k, w)| {
        let f = power::app_power_resolved(profile, &grid.points[k], dyn_sum, intensity, n as f64);
        (num + w * f, den + w)
    });
    Ok(num / den)
}
