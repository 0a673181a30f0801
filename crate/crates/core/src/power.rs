//! Analytical power equations for operation units and applications.
//!
//! Every function here is a pure function of its arguments. Power is in
//! milliwatts throughout.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default load-store unit power (mW): the measured LSU load figure.
pub const DEFAULT_P_LSU: f64 = 28.0;

/// One operation unit and its dynamic power per core.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationKind {
    pub name: String,
    pub dynamic_power: f64,
}

impl OperationKind {
    pub fn new(name: impl Into<String>, dynamic_power: f64) -> Result<Self> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(Error::Config("operation name must be nonempty".into()));
        }
        if !(dynamic_power >= 0.0) || !dynamic_power.is_finite() {
            return Err(Error::Config(format!(
                "operation `{name}` has invalid dynamic power {dynamic_power}"
            )));
        }
        Ok(Self {
            name,
            dynamic_power,
        })
    }
}

/// Static/active constants plus the per-operation dynamic power table of a platform.
#[derive(Debug, Clone, PartialEq)]
pub struct PlatformProfile {
    p_static: f64,
    p_active: f64,
    p_lsu: f64,
    max_cores: u32,
    ops: BTreeMap<String, f64>,
}

fn check_power(label: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{label} must be finite and >= 0, got {value}"
        )))
    }
}

impl PlatformProfile {
    pub fn new(
        p_static: f64,
        p_active: f64,
        p_lsu: f64,
        max_cores: u32,
        ops: impl IntoIterator<Item = OperationKind>,
    ) -> Result<Self> {
        check_power("p_sta", p_static)?;
        check_power("p_act", p_active)?;
        check_power("p_lsu", p_lsu)?;
        if max_cores == 0 {
            return Err(Error::Config("max_cores must be >= 1".into()));
        }
        let mut table = BTreeMap::new();
        for op in ops {
            let op = OperationKind::new(op.name, op.dynamic_power)?;
            if table.insert(op.name.clone(), op.dynamic_power).is_some() {
                return Err(Error::Config(format!("duplicate operation `{}`", op.name)));
            }
        }
        Ok(Self {
            p_static,
            p_active,
            p_lsu,
            max_cores,
            ops: table,
        })
    }

    /// Movidius Myriad1 constants: 62.125 mW static, 30 mW active per core,
    /// eight SHAVE cores and the measured SHAVE operation table.
    pub fn myriad1() -> Self {
        let ops = [
            ("SAUXOR", 15.0),
            ("SAUMUL", 18.0),
            ("VAUXOR", 35.6),
            ("VAUMUL", 52.6),
            ("IAUXOR", 15.0),
            ("IAUMUL", 21.0),
            ("CMUCPSS", 20.0),
            ("CMUCPIVR", 13.0),
            ("LSULOAD", 28.0),
            ("LSUSTORE", 37.0),
        ]
        .into_iter()
        .map(|(name, p)| OperationKind {
            name: name.to_string(),
            dynamic_power: p,
        });
        Self::new(62.125, 30.0, DEFAULT_P_LSU, 8, ops).expect("built-in profile is valid")
    }

    pub fn p_static(&self) -> f64 {
        self.p_static
    }

    pub fn p_active(&self) -> f64 {
        self.p_active
    }

    pub fn p_lsu(&self) -> f64 {
        self.p_lsu
    }

    pub fn max_cores(&self) -> u32 {
        self.max_cores
    }

    /// Returns a copy with a different load-store unit power.
    pub fn with_p_lsu(mut self, p_lsu: f64) -> Result<Self> {
        check_power("p_lsu", p_lsu)?;
        self.p_lsu = p_lsu;
        Ok(self)
    }

    pub fn op_power(&self, name: &str) -> Option<f64> {
        self.ops.get(name).copied()
    }

    pub fn operations(&self) -> impl Iterator<Item = OperationKind> + '_ {
        self.ops.iter().map(|(name, &p)| OperationKind {
            name: name.clone(),
            dynamic_power: p,
        })
    }

    /// Sum of dynamic powers of the operations in `mix`.
    pub fn dynamic_sum(&self, mix: &OpMix) -> Result<f64> {
        mix.ops
            .iter()
            .map(|name| {
                self.op_power(name)
                    .ok_or_else(|| Error::UnknownOperation(name.clone()))
            })
            .sum()
    }

    pub fn check_cores(&self, n: u32) -> Result<()> {
        if n > self.max_cores {
            Err(Error::CoreRange {
                cores: n,
                max: self.max_cores,
            })
        } else {
            Ok(())
        }
    }

    /// Upper bound for fitted contention power: a waiting core should not
    /// draw more than a fully active one.
    pub fn p_ctn_max(&self) -> f64 {
        let max_op = self.ops.values().copied().fold(0.0_f64, f64::max);
        self.p_active + self.p_lsu + max_op
    }
}

/// Fitted model parameters for one operational-intensity grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityParams {
    pub intensity: f64,
    /// Time ratio of transferring one byte to performing one operation.
    pub alpha: f64,
    /// Average number of cores accessing data in parallel.
    pub m: f64,
    /// Contention power of one core waiting for data (mW).
    pub p_ctn: f64,
}

impl IntensityParams {
    pub fn new(intensity: f64, alpha: f64, m: f64, p_ctn: f64) -> Result<Self> {
        let p = Self {
            intensity,
            alpha,
            m,
            p_ctn,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.intensity.is_finite()
            && self.intensity > 0.0
            && self.alpha.is_finite()
            && self.alpha > 0.0
            && self.m.is_finite()
            && self.m >= 0.0
            && self.p_ctn.is_finite()
            && self.p_ctn >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid intensity parameters (I={}, alpha={}, m={}, p_ctn={})",
                self.intensity, self.alpha, self.m, self.p_ctn
            )))
        }
    }
}

/// Work (operations) and traffic (bytes) of an application.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkloadCounts {
    pub work: f64,
    pub bytes: f64,
}

/// Operation units exercised by every active core.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OpMix {
    pub ops: Vec<String>,
}

impl OpMix {
    pub fn new<S: Into<String>>(ops: impl IntoIterator<Item = S>) -> Self {
        Self {
            ops: ops.into_iter().map(Into::into).collect(),
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

/// Whole-chip power of `n` cores running the operation units in `mix`.
pub fn units_power(profile: &PlatformProfile, mix: &OpMix, n: u32) -> Result<f64> {
    profile.check_cores(n)?;
    let dyn_sum = profile.dynamic_sum(mix)?;
    Ok(profile.p_static + n as f64 * (profile.p_active + dyn_sum))
}

/// Operational intensity `W / Q`.
pub fn operational_intensity(counts: &WorkloadCounts) -> Result<f64> {
    if !(counts.work >= 0.0) || !counts.work.is_finite() {
        return Err(Error::Domain(format!(
            "work must be >= 0, got {}",
            counts.work
        )));
    }
    if !(counts.bytes > 0.0) || !counts.bytes.is_finite() {
        return Err(Error::Domain(format!(
            "transferred bytes must be > 0, got {}",
            counts.bytes
        )));
    }
    Ok(counts.work / counts.bytes)
}

/// Power when only data transfer is performed.
pub fn data_power(profile: &PlatformProfile, params: &IntensityParams, n: u32) -> Result<f64> {
    profile.check_cores(n)?;
    Ok(data_power_at(profile, params, n as f64))
}

/// Power when only computation is performed.
pub fn comp_power(profile: &PlatformProfile, mix: &OpMix, n: u32) -> Result<f64> {
    profile.check_cores(n)?;
    let dyn_sum = profile.dynamic_sum(mix)?;
    Ok(comp_power_at(profile, dyn_sum, n as f64))
}

/// Power when computation and data transfer overlap.
pub fn comp_data_power(
    profile: &PlatformProfile,
    params: &IntensityParams,
    mix: &OpMix,
    n: u32,
) -> Result<f64> {
    profile.check_cores(n)?;
    let dyn_sum = profile.dynamic_sum(mix)?;
    Ok(comp_data_power_at(profile, params, dyn_sum, n as f64))
}

/// Application power at intensity `intensity`, blending the overlapped period
/// with the data-only (memory-bound) or compute-only (compute-bound) period.
///
/// `intensity` is deliberately separate from `params.intensity` so that
/// grid-fitted parameters can be evaluated at off-grid intensities.
pub fn app_power(
    profile: &PlatformProfile,
    params: &IntensityParams,
    mix: &OpMix,
    intensity: f64,
    n: u32,
) -> Result<f64> {
    check_intensity(intensity)?;
    profile.check_cores(n)?;
    let dyn_sum = profile.dynamic_sum(mix)?;
    Ok(app_power_resolved(
        profile, params, dyn_sum, intensity, n as f64,
    ))
}

pub(crate) fn check_intensity(intensity: f64) -> Result<()> {
    if intensity > 0.0 && intensity.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "operational intensity must be finite and > 0, got {intensity}"
        )))
    }
}

pub(crate) fn data_power_at(profile: &PlatformProfile, params: &IntensityParams, n: f64) -> f64 {
    profile.p_static
        + params.m.min(n) * (profile.p_active + profile.p_lsu)
        + (n - params.m).max(0.0) * params.p_ctn
}

pub(crate) fn comp_power_at(profile: &PlatformProfile, dyn_sum: f64, n: f64) -> f64 {
    profile.p_static + n * (profile.p_active + dyn_sum)
}

pub(crate) fn comp_data_power_at(
    profile: &PlatformProfile,
    params: &IntensityParams,
    dyn_sum: f64,
    n: f64,
) -> f64 {
    profile.p_static
        + params.m.min(n) * (profile.p_active + profile.p_lsu + dyn_sum)
        + (n - params.m).max(0.0) * params.p_ctn
}

/// [`app_power`] with the mix already resolved to its dynamic-power sum and
/// no range checks. Continuous in `intensity` at `alpha`.
pub fn app_power_resolved(
    profile: &PlatformProfile,
    params: &IntensityParams,
    dyn_sum: f64,
    intensity: f64,
    n: f64,
) -> f64 {
    let overlapped = comp_data_power_at(profile, params, dyn_sum, n);
    let alpha = params.alpha;
    if intensity < alpha {
        let data = data_power_at(profile, params, n);
        overlapped * (intensity / alpha) + data * ((alpha - intensity) / alpha)
    } else if intensity > alpha {
        let comp = comp_power_at(profile, dyn_sum, n);
        overlapped * (alpha / intensity) + comp * ((intensity - alpha) / intensity)
    } else {
        overlapped
    }
}

/// Signed percentage error `(measured - estimated) / measured`, as a fraction.
pub fn percentage_error(measured: f64, estimated: f64) -> Result<f64> {
    if measured == 0.0 || !measured.is_finite() {
        return Err(Error::Domain(format!(
            "percentage error needs a finite nonzero measurement, got {measured}"
        )));
    }
    Ok((measured - estimated) / measured)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(alpha: f64, m: f64, p_ctn: f64) -> IntensityParams {
        IntensityParams::new(1.0, alpha, m, p_ctn).unwrap()
    }

    #[test]
    fn units_power_examples() {
        let p = PlatformProfile::myriad1();
        let xor = OpMix::new(["SAUXOR"]);
        assert_relative_eq!(
            units_power(&p, &xor, 1).unwrap(),
            107.125,
            max_relative = 1e-12
        );
        assert_eq!(units_power(&p, &OpMix::empty(), 0).unwrap(), 62.125);
        let both = OpMix::new(["SAUXOR", "LSULOAD"]);
        assert_relative_eq!(
            units_power(&p, &both, 4).unwrap(),
            354.125,
            max_relative = 1e-12
        );
    }

    #[test]
    fn units_power_errors() {
        let p = PlatformProfile::myriad1();
        match units_power(&p, &OpMix::new(["FMA"]), 1) {
            Err(Error::UnknownOperation(name)) => assert_eq!(name, "FMA"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            units_power(&p, &OpMix::empty(), 9),
            Err(Error::CoreRange { cores: 9, max: 8 })
        ));
    }

    #[test]
    fn intensity_examples() {
        let n = 1024.0_f64;
        let matmul = WorkloadCounts {
            work: 2.0 * n.powi(3),
            bytes: 16.0 * n * n,
        };
        assert_eq!(operational_intensity(&matmul).unwrap(), 128.0);
        let eq = WorkloadCounts {
            work: 1000.0,
            bytes: 1000.0,
        };
        assert_eq!(operational_intensity(&eq).unwrap(), 1.0);
        let spmv = WorkloadCounts {
            work: 10.0 * 500.0,
            bytes: 40.0 * 500.0,
        };
        assert_eq!(operational_intensity(&spmv).unwrap(), 0.25);
        let bad = WorkloadCounts {
            work: 1.0,
            bytes: 0.0,
        };
        assert!(matches!(operational_intensity(&bad), Err(Error::Domain(_))));
    }

    #[test]
    fn data_power_examples() {
        let p = PlatformProfile::myriad1();
        assert_relative_eq!(
            data_power(&p, &params(1.0, 2.0, 10.0), 1).unwrap(),
            120.125,
            max_relative = 1e-12
        );
        assert_eq!(data_power(&p, &params(1.0, 2.0, 10.0), 0).unwrap(), 62.125);
        assert_relative_eq!(
            data_power(&p, &params(1.0, 0.5, 10.0), 8).unwrap(),
            166.125,
            max_relative = 1e-12
        );
    }

    #[test]
    fn comp_and_overlap_examples() {
        let p = PlatformProfile::myriad1();
        let xor = OpMix::new(["SAUXOR"]);
        assert_relative_eq!(
            comp_power(&p, &xor, 8).unwrap(),
            422.125,
            max_relative = 1e-12
        );
        assert_eq!(comp_power(&p, &OpMix::empty(), 0).unwrap(), 62.125);
        let q = params(1.0, 2.0, 10.0);
        assert_relative_eq!(
            comp_data_power(&p, &q, &xor, 1).unwrap(),
            135.125,
            max_relative = 1e-12
        );
        assert_eq!(comp_data_power(&p, &q, &xor, 0).unwrap(), 62.125);
        for n in 0..=8 {
            assert_eq!(
                comp_data_power(&p, &q, &OpMix::empty(), n).unwrap(),
                data_power(&p, &q, n).unwrap()
            );
        }
    }

    #[test]
    fn app_power_examples() {
        let p = PlatformProfile::myriad1();
        let xor = OpMix::new(["SAUXOR"]);
        let q = params(2.0, 2.0, 10.0);
        assert_eq!(
            app_power(&p, &q, &xor, 2.0, 1).unwrap(),
            comp_data_power(&p, &q, &xor, 1).unwrap()
        );
        // memory-bound: 135.125 * 0.5 + 120.125 * 0.5
        assert_relative_eq!(
            app_power(&p, &q, &xor, 1.0, 1).unwrap(),
            127.625,
            max_relative = 1e-12
        );
        // compute-bound: 135.125 * 0.5 + 107.125 * 0.5
        assert_relative_eq!(
            app_power(&p, &q, &xor, 4.0, 1).unwrap(),
            121.125,
            max_relative = 1e-12
        );
        assert!(matches!(
            app_power(&p, &q, &xor, 0.0, 1),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            app_power(&p, &q, &xor, -1.0, 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn percentage_error_examples() {
        assert_relative_eq!(
            percentage_error(100.0, 90.0).unwrap(),
            0.10,
            max_relative = 1e-12
        );
        assert_eq!(percentage_error(42.0, 42.0).unwrap(), 0.0);
        assert_relative_eq!(
            percentage_error(100.0, 110.0).unwrap(),
            -0.10,
            max_relative = 1e-12
        );
        assert!(matches!(percentage_error(0.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn profile_validation() {
        let dup = [
            OperationKind::new("A", 1.0).unwrap(),
            OperationKind::new("A", 2.0).unwrap(),
        ];
        assert!(PlatformProfile::new(1.0, 1.0, 1.0, 8, dup).is_err());
        assert!(PlatformProfile::new(-1.0, 1.0, 1.0, 8, []).is_err());
        assert!(PlatformProfile::new(1.0, 1.0, 1.0, 0, []).is_err());
        assert!(OperationKind::new("", 1.0).is_err());
        assert!(OperationKind::new("X", -0.5).is_err());
        assert!(IntensityParams::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(IntensityParams::new(1.0, 0.0, 1.0, 1.0).is_err());
    }

    fn arb_profile() -> impl Strategy<Value = PlatformProfile> {
        (
            0.0..200.0,
            0.0..80.0,
            0.0..60.0,
            1u32..=16,
            prop::collection::vec(0.0..60.0, 1..6),
        )
            .prop_map(|(s, a, l, n, ops)| {
                let ops = ops
                    .into_iter()
                    .enumerate()
                    .map(|(i, p)| OperationKind::new(format!("OP{i}"), p).unwrap());
                PlatformProfile::new(s, a, l, n, ops).unwrap()
            })
    }

    fn mix_from_bits(profile: &PlatformProfile, bits: u32) -> OpMix {
        OpMix::new(
            profile
                .operations()
                .enumerate()
                .filter(|(i, _)| bits & (1 << i) != 0)
                .map(|(_, op)| op.name),
        )
    }

    proptest! {
        #[test]
        fn units_power_is_linear_in_cores(profile in arb_profile(), bits in 0u32..64) {
            let mix = mix_from_bits(&profile, bits);
            let p0 = units_power(&profile, &mix, 0).unwrap();
            let p1 = units_power(&profile, &mix, 1).unwrap();
            for n in 0..=profile.max_cores() {
                let pn = units_power(&profile, &mix, n).unwrap();
                let expected = n as f64 * (p1 - p0);
                prop_assert!(((pn - p0) - expected).abs() <= 1e-9 * expected.abs().max(1.0));
            }
        }

        #[test]
        fn units_power_composes_over_disjoint_mixes(profile in arb_profile(), a in 0u32..64, b in 0u32..64, n in 0u32..16) {
            let n = n.min(profile.max_cores());
            let b = b & !a;
            let (ma, mb, mab) = (mix_from_bits(&profile, a), mix_from_bits(&profile, b), mix_from_bits(&profile, a | b));
            let lhs = units_power(&profile, &mab, n).unwrap();
            let rhs = units_power(&profile, &ma, n).unwrap() + units_power(&profile, &mb, n).unwrap()
                - profile.p_static() - n as f64 * profile.p_active();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
        }

        #[test]
        fn comp_power_matches_units_power(profile in arb_profile(), bits in 0u32..64, n in 0u32..16) {
            let n = n.min(profile.max_cores());
            let mix = mix_from_bits(&profile, bits);
            prop_assert_eq!(comp_power(&profile, &mix, n).unwrap(), units_power(&profile, &mix, n).unwrap());
        }

        #[test]
        fn app_power_continuous_at_alpha(
            profile in arb_profile(), bits in 0u32..64, n in 0u32..16,
            alpha in 0.01..100.0, m in 0.0..16.0, p_ctn in 0.0..100.0,
        ) {
            let n = n.min(profile.max_cores());
            let mix = mix_from_bits(&profile, bits);
            let q = IntensityParams::new(1.0, alpha, m, p_ctn).unwrap();
            let at = comp_data_power(&profile, &q, &mix, n).unwrap();
            let eps = alpha * 1e-12;
            let below = app_power(&profile, &q, &mix, alpha - eps, n).unwrap();
            let above = app_power(&profile, &q, &mix, alpha + eps, n).unwrap();
            prop_assert!((below - at).abs() <= 1e-9 * at);
            prop_assert!((above - at).abs() <= 1e-9 * at);
        }

        #[test]
        fn powers_nondecreasing_in_cores(
            profile in arb_profile(), bits in 0u32..64,
            m in 0.0..16.0, p_ctn in 0.0..100.0,
        ) {
            let mix = mix_from_bits(&profile, bits);
            let q = IntensityParams::new(1.0, 1.0, m, p_ctn).unwrap();
            for n in 1..=profile.max_cores() {
                prop_assert!(data_power(&profile, &q, n).unwrap() >= data_power(&profile, &q, n - 1).unwrap());
                prop_assert!(comp_power(&profile, &mix, n).unwrap() >= comp_power(&profile, &mix, n - 1).unwrap());
                prop_assert!(comp_data_power(&profile, &q, &mix, n).unwrap() >= comp_data_power(&profile, &q, &mix, n - 1).unwrap());
            }
        }

        #[test]
        fn app_power_limits(
            profile in arb_profile(), bits in 0u32..64, n in 0u32..16,
            alpha in 0.1..10.0, m in 0.0..16.0, p_ctn in 0.0..100.0,
        ) {
            let n = n.min(profile.max_cores());
            let mix = mix_from_bits(&profile, bits);
            let q = IntensityParams::new(1.0, alpha, m, p_ctn).unwrap();
            let low = app_power(&profile, &q, &mix, 1e-12, n).unwrap();
            let high = app_power(&profile, &q, &mix, 1e12, n).unwrap();
            let data = data_power(&profile, &q, n).unwrap();
            let comp = comp_power(&profile, &mix, n).unwrap();
            prop_assert!((low - data).abs() <= 1e-6 * data);
            prop_assert!((high - comp).abs() <= 1e-6 * comp);
        }

        #[test]
        fn percentage_error_of_scaled_estimate(measured in 0.1..1000.0f64, x in -2.0..2.0f64) {
            let pe = percentage_error(measured, measured * (1.0 - x)).unwrap();
            prop_assert!((pe - x).abs() <= 1e-9);
        }
    }
}
