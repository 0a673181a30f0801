//! Race-to-halt decision framework.
//!
//! Gather an application's metadata (intensity, speed-up), predict its power
//! at one core and at the maximum core count, and compare energies. Under
//! race-to-halt timing `E(n) / E(1) = power_up / speed_up`, so running on all
//! cores saves energy exactly when the speed-up exceeds the power-up.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::{improved_power, BetaFactor};
use crate::interpolation::{tsk_power, IntensityGrid};
use crate::power::{self, OpMix, PlatformProfile, WorkloadCounts};

/// How an application's operational intensity is known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntensitySpec {
    /// A fixed value, e.g. 0.25 for CSR SpMV.
    Value(f64),
    /// Counted work and traffic.
    Counts(WorkloadCounts),
    /// `coefficient * size^exponent`, e.g. `size / 8` for dense matmul.
    PerSize {
        coefficient: f64,
        exponent: f64,
        size: f64,
    },
}

impl IntensitySpec {
    pub fn resolve(&self) -> Result<f64> {
        let i = match *self {
            IntensitySpec::Value(i) => i,
            IntensitySpec::Counts(ref c) => power::operational_intensity(c)?,
            IntensitySpec::PerSize {
                coefficient,
                exponent,
                size,
            } => coefficient * size.powf(exponent),
        };
        power::check_intensity(i)?;
        Ok(i)
    }
}

/// Everything the framework needs to know about one application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplicationMeta {
    pub name: String,
    pub intensity: IntensitySpec,
    #[serde(default)]
    pub mix: OpMix,
    /// Measured speed-ups keyed by core count.
    #[serde(default, with = "core_keyed")]
    pub speedup: BTreeMap<u32, f64>,
    /// Fraction of the program that parallelizes, for Amdahl estimates.
    #[serde(default)]
    pub parallel_fraction: Option<f64>,
    /// Single-core run time in seconds.
    #[serde(default)]
    pub baseline_time: Option<f64>,
    /// Measured energies (mJ) keyed by core count.
    #[serde(default, with = "core_keyed")]
    pub energy: BTreeMap<u32, f64>,
    /// Online-learning corrections keyed by core count.
    #[serde(default, with = "core_keyed")]
    pub beta: BTreeMap<u32, BetaFactor>,
}

impl ApplicationMeta {
    pub fn new(name: impl Into<String>, intensity: IntensitySpec, mix: OpMix) -> Self {
        Self {
            name: name.into(),
            intensity,
            mix,
            speedup: BTreeMap::new(),
            parallel_fraction: None,
            baseline_time: None,
            energy: BTreeMap::new(),
            beta: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.intensity.resolve()?;
        if let Some(&s1) = self.speedup.get(&1) {
            if s1 != 1.0 {
                return Err(Error::Metadata(format!(
                    "`{}`: speed-up at 1 core must be 1, got {s1}",
                    self.name
                )));
            }
        }
        if let Some((n, s)) = self
            .speedup
            .iter()
            .find(|(_, s)| !(**s > 0.0) || !s.is_finite())
        {
            return Err(Error::Metadata(format!(
                "`{}`: speed-up at {n} cores must be > 0, got {s}",
                self.name
            )));
        }
        if let Some(p) = self.parallel_fraction {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Metadata(format!(
                    "`{}`: parallel fraction {p} outside [0, 1]",
                    self.name
                )));
            }
        }
        if let Some(t) = self.baseline_time {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::Metadata(format!(
                    "`{}`: baseline time must be > 0, got {t}",
                    self.name
                )));
            }
        }
        if let Some((n, e)) = self
            .energy
            .iter()
            .find(|(_, e)| !(**e >= 0.0) || !e.is_finite())
        {
            return Err(Error::Metadata(format!(
                "`{}`: energy at {n} cores must be >= 0, got {e}",
                self.name
            )));
        }
        Ok(())
    }

    /// Speed-up at `n` cores: measured if available, else the Amdahl bound.
    pub fn speedup_at(&self, n: u32) -> Result<(f64, SpeedupSource)> {
        if n == 1 {
            return Ok((1.0, SpeedupSource::Measured));
        }
        if let Some(&s) = self.speedup.get(&n) {
            return Ok((s, SpeedupSource::Measured));
        }
        if let Some(p) = self.parallel_fraction {
            return Ok((amdahl_speedup(p, n)?, SpeedupSource::Amdahl));
        }
        Err(Error::Metadata(format!(
            "`{}`: no speed-up at {n} cores and no parallel fraction",
            self.name
        )))
    }
}

/// Maps keyed by core count. TOML and JSON keys are strings, so keys go
/// through their decimal text form.
mod core_keyed {
    use std::collections::BTreeMap;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<V: Serialize, S: Serializer>(
        map: &BTreeMap<u32, V>,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        let keyed: BTreeMap<String, &V> = map.iter().map(|(k, v)| (k.to_string(), v)).collect();
        keyed.serialize(serializer)
    }

    pub fn deserialize<'de, V: Deserialize<'de>, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<BTreeMap<u32, V>, D::Error> {
        BTreeMap::<String, V>::deserialize(deserializer)?
            .into_iter()
            .map(|(k, v)| {
                k.trim().parse::<u32>().map(|k| (k, v)).map_err(|_| {
                    D::Error::custom(format!("core count key `{k}` is not an integer"))
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedupSource {
    Measured,
    Amdahl,
}

/// What the verdict was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DecisionBasis {
    /// Predicted power-up against a measured or Amdahl speed-up.
    Model { speedup_source: SpeedupSource },
    /// Measured single-core and n-core energies.
    MeasuredEnergy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RthDecision {
    pub use_rth: bool,
    pub n_max: u32,
    /// Absent when the verdict comes from measured energies alone.
    pub power_up: Option<f64>,
    pub speed_up: Option<f64>,
    pub energy_saving: f64,
    pub predicted_e1: Option<f64>,
    pub predicted_en: Option<f64>,
    pub basis: DecisionBasis,
}

/// Amdahl upper bound on speed-up, `1 / ((1 - p) + p / n)`.
pub fn amdahl_speedup(p: f64, n: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "parallel fraction {p} outside [0, 1]"
        )));
    }
    if n == 0 {
        return Err(Error::Domain("Amdahl speed-up needs n >= 1".into()));
    }
    Ok(1.0 / ((1.0 - p) + p / n as f64))
}

/// Predicted application power at `n` cores, beta-corrected.
pub fn predicted_power(
    profile: &PlatformProfile,
    grid: &IntensityGrid,
    meta: &ApplicationMeta,
    n: u32,
) -> Result<f64> {
    let raw = tsk_power(profile, grid, &meta.mix, meta.intensity.resolve()?, n)?;
    Ok(match meta.beta.get(&n) {
        Some(beta) => improved_power(raw, beta),
        None => raw,
    })
}

/// `P(n) / P(1)` from the beta-corrected blended model.
pub fn power_up(
    profile: &PlatformProfile,
    grid: &IntensityGrid,
    meta: &ApplicationMeta,
    n: u32,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("power-up needs n >= 1".into()));
    }
    let p1 = predicted_power(profile, grid, meta, 1)?;
    let pn = predicted_power(profile, grid, meta, n)?;
    if !(p1 > 0.0) {
        return Err(Error::Domain(format!(
            "single-core power {p1} is not positive"
        )));
    }
    Ok(pn / p1)
}

/// Energy in millijoules from milliwatts and seconds.
pub fn energy(power: f64, time: f64) -> f64 {
    debug_assert!(power >= 0.0 && time >= 0.0);
    power * time
}

/// `(E1 - En) / E1`; positive means running on `n` cores saves energy.
pub fn energy_saving(e_1core: f64, e_ncore: f64) -> Result<f64> {
    if !(e_1core > 0.0) || !e_1core.is_finite() {
        return Err(Error::Domain(format!(
            "single-core energy must be > 0, got {e_1core}"
        )));
    }
    Ok((e_1core - e_ncore) / e_1core)
}

/// Decides whether running on `n_max` cores beats running on one core.
pub fn rth_decide(
    profile: &PlatformProfile,
    grid: &IntensityGrid,
    meta: &ApplicationMeta,
    n_max: u32,
) -> Result<RthDecision> {
    meta.validate()?;
    let (speed_up, speedup_source) = meta.speedup_at(n_max)?;
    let power_up = power_up(profile, grid, meta, n_max)?;
    // Same value as 1 - power_up / speed_up, but its sign is exactly that of
    // speed_up - power_up.
    let energy_saving = (speed_up - power_up) / speed_up;

    let (predicted_e1, predicted_en) = match meta.baseline_time {
        Some(t1) => (
            Some(energy(predicted_power(profile, grid, meta, 1)?, t1)),
            Some(energy(
                predicted_power(profile, grid, meta, n_max)?,
                t1 / speed_up,
            )),
        ),
        None => (None, None),
    };

    Ok(RthDecision {
        use_rth: energy_saving > 0.0,
        n_max,
        power_up: Some(power_up),
        speed_up: Some(speed_up),
        energy_saving,
        predicted_e1,
        predicted_en,
        basis: DecisionBasis::Model { speedup_source },
    })
}

/// Verdict straight from measured energies at one core and `n_max` cores.
pub fn decide_from_energies(e_1core: f64, e_ncore: f64, n_max: u32) -> Result<RthDecision> {
    let energy_saving = energy_saving(e_1core, e_ncore)?;
    Ok(RthDecision {
        use_rth: energy_saving > 0.0,
        n_max,
        power_up: None,
        speed_up: None,
        energy_saving,
        predicted_e1: Some(e_1core),
        predicted_en: Some(e_ncore),
        basis: DecisionBasis::MeasuredEnergy,
    })
}

/// Run-time information for an energy curve.
#[derive(Debug, Clone, PartialEq)]
pub enum Timing {
    /// Single-core time (s) plus speed-ups keyed by core count.
    Speedups {
        baseline_time: f64,
        speedups: BTreeMap<u32, f64>,
    },
    /// Measured time (s) per core count.
    Times(BTreeMap<u32, f64>),
}

impl Timing {
    /// Timing implied by the metadata: baseline time with measured or Amdahl
    /// speed-ups at each requested core count.
    pub fn from_meta(meta: &ApplicationMeta, core_counts: &[u32]) -> Result<Self> {
        let baseline_time = meta.baseline_time.ok_or_else(|| {
            Error::Metadata(format!("`{}`: no baseline (1-core) time", meta.name))
        })?;
        let speedups = core_counts
            .iter()
            .map(|&n| meta.speedup_at(n).map(|(s, _)| (n, s)))
            .collect::<Result<_>>()?;
        Ok(Timing::Speedups {
            baseline_time,
            speedups,
        })
    }

    fn time_at(&self, n: u32) -> Result<f64> {
        match self {
            Timing::Speedups {
                baseline_time,
                speedups,
            } => {
                let s = if n == 1 {
                    speedups.get(&1).copied().unwrap_or(1.0)
                } else {
                    *speedups
                        .get(&n)
                        .ok_or_else(|| Error::Metadata(format!("no speed-up at {n} cores")))?
                };
                if !(s > 0.0) {
                    return Err(Error::Metadata(format!(
                        "speed-up at {n} cores must be > 0"
                    )));
                }
                Ok(baseline_time / s)
            }
            Timing::Times(times) => times
                .get(&n)
                .copied()
                .ok_or_else(|| Error::Metadata(format!("no run time at {n} cores"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyPoint {
    pub cores: u32,
    /// mW
    pub power: f64,
    /// s
    pub time: f64,
    /// mJ
    pub energy: f64,
}

/// Predicted power, time and energy at each of `core_counts`.
pub fn predict_energy_curve(
    profile: &PlatformProfile,
    grid: &IntensityGrid,
    meta: &ApplicationMeta,
    timing: &Timing,
    core_counts: &[u32],
) -> Result<Vec<EnergyPoint>> {
    if let Timing::Speedups { baseline_time, .. } = timing {
        if !(*baseline_time > 0.0) {
            return Err(Error::Metadata("baseline time must be > 0".into()));
        }
    }
    core_counts
        .iter()
        .map(|&n| {
            let power = predicted_power(profile, grid, meta, n)?;
            let time = timing.time_at(n)?;
            Ok(EnergyPoint {
                cores: n,
                power,
                time,
                energy: energy(power, time),
            })
        })
        .collect()
}
