//! Bucketed change in a team's weekly tweet volume.
//!
//! Both rate functions map the signed change `v_curr - v_old` onto
//! `{-2, -1, 0, 1, 2}` using buckets of width `w` (a constant for `rate_s`,
//! a fraction of `v_old` for `rate_p`). A change of exactly `m * w` falls in
//! the lower-magnitude bucket, so with `v_old = 2000, w = 500` the closed
//! interval `[1500, 2500]` maps to 0 and `(2500, 3000]` to 1.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::FeatureError;

/// Relative slack for comparing a change against bucket edges computed in
/// floating point (`0.2 * 2000` must compare equal to 400).
const EDGE_SLACK: f64 = 1e-9;

fn bucket(diff: f64, width: f64) -> i8 {
    let mag = diff.abs();
    let mut category = 0i8;
    for m in [1.0, 2.0] {
        let edge = m * width;
        if mag > edge + EDGE_SLACK * edge {
            category += 1;
        }
    }
    if diff < 0.0 {
        -category
    } else {
        category
    }
}

fn check_volume(v: f64) -> Result<(), FeatureError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(FeatureError::Parameter(format!("tweet volume must be a nonnegative number, got {v}")))
    }
}

/// Static-width rate: buckets of `delta` tweets.
pub fn rate_s(v_old: f64, v_curr: f64, delta: u32) -> Result<i8, FeatureError> {
    if delta == 0 {
        return Err(FeatureError::Parameter("rate_s bucket width must be positive".into()));
    }
    check_volume(v_old)?;
    check_volume(v_curr)?;
    Ok(bucket(v_curr - v_old, f64::from(delta)))
}

/// Proportional rate: buckets of `theta * v_old` tweets. Growth from a zero
/// baseline is put in the top bucket.
pub fn rate_p(v_old: f64, v_curr: f64, theta: f64) -> Result<i8, FeatureError> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(FeatureError::Parameter(format!("rate_p theta must be in (0, 1], got {theta}")));
    }
    check_volume(v_old)?;
    check_volume(v_curr)?;
    if v_old == 0.0 {
        return Ok(if v_curr > 0.0 { 2 } else { 0 });
    }
    Ok(bucket(v_curr - v_old, theta * v_old))
}

/// Which past volume is subtracted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeBaseline {
    /// Volume before the team's previous game.
    Prev,
    /// Mean volume over the team's earlier games this season.
    PrevAvg,
}

impl VolumeBaseline {
    pub fn name(self) -> &'static str {
        match self {
            VolumeBaseline::Prev => "prev",
            VolumeBaseline::PrevAvg => "prevavg",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "prev" => Some(VolumeBaseline::Prev),
            "prevavg" => Some(VolumeBaseline::PrevAvg),
            _ => None,
        }
    }

    /// Baseline from a team's earlier weekly volumes this season, oldest first.
    pub fn of(self, history: &[f64]) -> Option<f64> {
        match self {
            VolumeBaseline::Prev => history.last().copied(),
            VolumeBaseline::PrevAvg if history.is_empty() => None,
            VolumeBaseline::PrevAvg => Some(history.iter().sum::<f64>() / history.len() as f64),
        }
    }
}

impl fmt::Display for VolumeBaseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RateScale {
    Static(u32),
    Proportional(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub baseline: VolumeBaseline,
    pub scale: RateScale,
}

impl RateParams {
    pub fn static_width(baseline: VolumeBaseline, delta: u32) -> Self {
        Self { baseline, scale: RateScale::Static(delta) }
    }

    pub fn proportional(baseline: VolumeBaseline, theta: f64) -> Self {
        Self { baseline, scale: RateScale::Proportional(theta) }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        match self.scale {
            RateScale::Static(0) => Err(FeatureError::Parameter("rate delta must be >= 1".into())),
            RateScale::Proportional(t) if !(t > 0.0 && t <= 1.0) => {
                Err(FeatureError::Parameter(format!("rate theta must be in (0, 1], got {t}")))
            }
            _ => Ok(()),
        }
    }

    /// Identifier prefix shared by the home and away features,
    /// e.g. `rateS.prev.500` or `rateP.prevavg.0.2`.
    pub fn feature_prefix(&self) -> String {
        match self.scale {
            RateScale::Static(d) => format!("rateS.{}.{}", self.baseline, d),
            RateScale::Proportional(t) => format!("rateP.{}.{}", self.baseline, t),
        }
    }

    /// Rate feature for one team: 0 when the team has no earlier game this
    /// season.
    pub fn evaluate(&self, history: &[f64], v_curr: f64) -> Result<i8, FeatureError> {
        let Some(v_old) = self.baseline.of(history) else {
            return Ok(0);
        };
        match self.scale {
            RateScale::Static(d) => rate_s(v_old, v_curr, d),
            RateScale::Proportional(t) => rate_p(v_old, v_curr, t),
        }
    }
}
