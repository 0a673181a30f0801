//! Parameter estimation from power measurements.
//!
//! * [`fit_static_active`]: linear least squares for the static, active and
//!   per-benchmark dynamic powers of the unit model.
//! * [`fit_intensity_params`]: bounded nonlinear least squares for
//!   `(alpha, m, p_ctn)` at one operational intensity. The objective is only
//!   piecewise smooth (it switches branch at `I = alpha` and has kinks where
//!   `m` crosses a sampled core count), so a damped Gauss-Newton descent is
//!   restarted from a fixed grid of starting points.
//! * [`compute_beta`] / [`calibrate_beta`]: the multiplicative correction
//!   applied to model output for one application and core configuration.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::power::{self, IntensityParams, OpMix, PlatformProfile};

/// One observed power sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub benchmark: String,
    /// Absent for unit-suite records.
    pub intensity: Option<f64>,
    pub cores: u32,
    /// Milliwatts.
    pub power: f64,
    /// Seconds.
    pub time: Option<f64>,
}

impl MeasurementRecord {
    pub fn new(
        benchmark: impl Into<String>,
        intensity: Option<f64>,
        cores: u32,
        power: f64,
        time: Option<f64>,
    ) -> Result<Self> {
        let r = Self {
            benchmark: benchmark.into(),
            intensity,
            cores,
            power,
            time,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cores == 0 {
            return Err(Error::Domain("record cores must be >= 1".into()));
        }
        if !(self.power > 0.0) || !self.power.is_finite() {
            return Err(Error::Domain(format!(
                "record power must be > 0, got {}",
                self.power
            )));
        }
        if let Some(i) = self.intensity {
            power::check_intensity(i)?;
        }
        if let Some(t) = self.time {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::Domain(format!("record time must be >= 0, got {t}")));
            }
        }
        Ok(())
    }
}

/// Output of the unit-model regression.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaticActiveFit {
    pub p_static: f64,
    pub p_active: f64,
    /// Dynamic power per benchmark, including the anchored ones.
    pub per_op_dyn: BTreeMap<String, f64>,
    /// Parameters whose unconstrained estimate was negative and got pinned to 0.
    pub clamped: Vec<String>,
    pub residual_rms: f64,
}

const P_STA: &str = "p_sta";
const P_ACT: &str = "p_act";

/// Fits `power = p_sta + n * (p_act + p_dyn[b])` jointly over all benchmarks.
///
/// `p_act` and the per-benchmark dynamic powers are only separable if at
/// least one benchmark has its dynamic power pinned through `fixed_dyn`
/// (typically an idle loop at 0 mW).
pub fn fit_static_active(
    records: &[MeasurementRecord],
    fixed_dyn: &BTreeMap<String, f64>,
) -> Result<StaticActiveFit> {
    if records.is_empty() {
        return Err(Error::Fit("no unit-suite records to fit".into()));
    }
    for r in records {
        r.validate()?;
    }

    let mut cores_by_bench: BTreeMap<&str, BTreeSet<u32>> = BTreeMap::new();
    for r in records {
        cores_by_bench
            .entry(&r.benchmark)
            .or_default()
            .insert(r.cores);
    }
    for (bench, cores) in &cores_by_bench {
        if cores.len() < 2 {
            return Err(Error::Fit(format!(
                "underdetermined: benchmark `{bench}` has {} distinct core count(s), need at least 2",
                cores.len()
            )));
        }
    }
    if !cores_by_bench.keys().any(|b| fixed_dyn.contains_key(*b)) {
        return Err(Error::Fit(
            "underdetermined: active power and per-benchmark dynamic power cannot be separated \
             without at least one benchmark whose dynamic power is fixed"
                .into(),
        ));
    }

    // Pinned values: anchored benchmarks plus anything clamped along the way.
    let mut pinned: BTreeMap<String, f64> = fixed_dyn
        .iter()
        .filter(|(b, _)| cores_by_bench.contains_key(b.as_str()))
        .map(|(b, &v)| (b.clone(), v))
        .collect();
    let mut pinned_globals: BTreeMap<&str, f64> = BTreeMap::new();
    let mut clamped = Vec::new();

    loop {
        let free_bench: Vec<&str> = cores_by_bench
            .keys()
            .copied()
            .filter(|b| !pinned.contains_key(*b))
            .collect();
        let mut columns: Vec<&str> = Vec::new();
        for g in [P_STA, P_ACT] {
            if !pinned_globals.contains_key(g) {
                columns.push(g);
            }
        }
        let bench_col0 = columns.len();
        let unknowns = columns.len() + free_bench.len();
        if records.len() < unknowns {
            return Err(Error::Fit(format!(
                "underdetermined: {} equations for {unknowns} unknowns (deficit {})",
                records.len(),
                unknowns - records.len()
            )));
        }

        let mut a = DMatrix::<f64>::zeros(records.len(), unknowns);
        let mut y = DVector::<f64>::zeros(records.len());
        for (row, r) in records.iter().enumerate() {
            let n = r.cores as f64;
            let mut rhs = r.power;
            for (col, name) in columns.iter().enumerate() {
                match *name {
                    P_STA => a[(row, col)] = 1.0,
                    P_ACT => a[(row, col)] = n,
                    _ => unreachable!(),
                }
            }
            if let Some(v) = pinned_globals.get(P_STA) {
                rhs -= v;
            }
            if let Some(v) = pinned_globals.get(P_ACT) {
                rhs -= n * v;
            }
            match pinned.get(&r.benchmark) {
                Some(v) => rhs -= n * v,
                None => {
                    let idx = free_bench.iter().position(|b| *b == r.benchmark).unwrap();
                    a[(row, bench_col0 + idx)] = n;
                }
            }
            y[row] = rhs;
        }

        let x = if unknowns == 0 {
            DVector::zeros(0)
        } else {
            solve_least_squares(&a, &y)?
        };

        // Clamp the most negative parameter and re-solve the rest.
        let worst = x
            .iter()
            .enumerate()
            .filter(|(_, v)| **v < 0.0)
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i);
        if let Some(i) = worst {
            if i < bench_col0 {
                let name = columns[i];
                pinned_globals.insert(name, 0.0);
                clamped.push(name.to_string());
            } else {
                let name = free_bench[i - bench_col0].to_string();
                pinned.insert(name.clone(), 0.0);
                clamped.push(name);
            }
            continue;
        }

        let mut p_static = pinned_globals.get(P_STA).copied().unwrap_or(0.0);
        let mut p_active = pinned_globals.get(P_ACT).copied().unwrap_or(0.0);
        let mut per_op_dyn = pinned.clone();
        for (col, name) in columns.iter().enumerate() {
            match *name {
                P_STA => p_static = x[col],
                P_ACT => p_active = x[col],
                _ => unreachable!(),
            }
        }
        for (idx, b) in free_bench.iter().enumerate() {
            per_op_dyn.insert(b.to_string(), x[bench_col0 + idx]);
        }

        let sse: f64 = records
            .iter()
            .map(|r| {
                let est = p_static + r.cores as f64 * (p_active + per_op_dyn[&r.benchmark]);
                (r.power - est).powi(2)
            })
            .sum();
        return Ok(StaticActiveFit {
            p_static,
            p_active,
            per_op_dyn,
            clamped,
            residual_rms: (sse / records.len() as f64).sqrt(),
        });
    }
}

fn solve_least_squares(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * 1e-10 * a.nrows().max(a.ncols()) as f64;
    let rank = svd.rank(tol);
    if rank < a.ncols() {
        return Err(Error::Fit(format!(
            "underdetermined: design matrix has rank {rank} for {} unknowns (deficit {})",
            a.ncols(),
            a.ncols() - rank
        )));
    }
    svd.solve(y, tol).map_err(|e| Error::Fit(e.to_string()))
}

/// Box constraints for the nonlinear fit. Lower bounds are `alpha > 0`,
/// `m >= 0`, `p_ctn >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitBounds {
    pub alpha_max: f64,
    pub m_max: f64,
    pub p_ctn_max: f64,
}

/// Smallest admissible alpha.
pub const ALPHA_MIN: f64 = 1e-6;

impl FitBounds {
    /// Default bounds: `alpha <= 16 * max(grid)`, `m <= max_cores`,
    /// `p_ctn <= p_act + p_lsu + max op power`.
    pub fn for_grid(profile: &PlatformProfile, intensities: &[f64]) -> Self {
        let i_max = intensities.iter().copied().fold(0.0_f64, f64::max);
        Self {
            alpha_max: 16.0 * i_max,
            m_max: profile.max_cores() as f64,
            p_ctn_max: profile.p_ctn_max(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative tolerance on cost decrease and step length.
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tolerance: 1e-14,
        }
    }
}

/// Result of a per-intensity fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: IntensityParams,
    pub residual_rms: f64,
    /// Signed percentage error of each input record, in input order.
    pub per_point_pe: Vec<f64>,
}

struct Problem<'a> {
    profile: &'a PlatformProfile,
    dyn_sum: f64,
    intensity: f64,
    cores: Vec<f64>,
    power: Vec<f64>,
    lower: Vector3<f64>,
    upper: Vector3<f64>,
}

impl Problem<'_> {
    fn params(&self, x: &Vector3<f64>) -> IntensityParams {
        IntensityParams {
            intensity: self.intensity,
            alpha: x[0],
            m: x[1],
            p_ctn: x[2],
        }
    }

    fn model(&self, x: &Vector3<f64>, n: f64) -> f64 {
        power::app_power_resolved(
            self.profile,
            &self.params(x),
            self.dyn_sum,
            self.intensity,
            n,
        )
    }

    fn cost(&self, x: &Vector3<f64>) -> f64 {
        self.cores
            .iter()
            .zip(&self.power)
            .map(|(&n, &p)| (self.model(x, n) - p).powi(2))
            .sum::<f64>()
            * 0.5
    }

    /// Normal equations `J^T J` and gradient `J^T r` with `r = model - y`.
    fn normal_equations(&self, x: &Vector3<f64>) -> (Matrix3<f64>, Vector3<f64>) {
        let (alpha, m, c) = (x[0], x[1], x[2]);
        let i = self.intensity;
        let p = self.profile;
        let lsu_act = p.p_active() + p.p_lsu();
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for (&n, &y) in self.cores.iter().zip(&self.power) {
            let busy = m.min(n);
            let waiting = (n - m).max(0.0);
            let m_active = if m < n { 1.0 } else { 0.0 };
            let row = if i < alpha {
                // P = P_data + min(m,n) * dyn * I / alpha
                Vector3::new(
                    -busy * self.dyn_sum * i / (alpha * alpha),
                    m_active * (lsu_act - c + self.dyn_sum * i / alpha),
                    waiting,
                )
            } else {
                // P = P_comp + (P_comp||data - P_comp) * alpha / I
                let overlapped = power::comp_data_power_at(p, &self.params(x), self.dyn_sum, n);
                let comp = power::comp_power_at(p, self.dyn_sum, n);
                Vector3::new(
                    (overlapped - comp) / i,
                    m_active * (lsu_act + self.dyn_sum - c) * alpha / i,
                    waiting * alpha / i,
                )
            };
            let r = self.model(x, n) - y;
            jtj += row * row.transpose();
            jtr += row * r;
        }
        (jtj, jtr)
    }

    fn project(&self, x: Vector3<f64>) -> Vector3<f64> {
        Vector3::from_fn(|k, _| x[k].clamp(self.lower[k], self.upper[k]))
    }
}

struct LocalFit {
    x: Vector3<f64>,
    cost: f64,
    converged: bool,
}

/// Projected Levenberg-Marquardt from one start.
fn descend(problem: &Problem, start: Vector3<f64>, opts: &FitOptions) -> LocalFit {
    let mut x = problem.project(start);
    let mut cost = problem.cost(&x);
    let mut lambda = 1e-3;
    let scale = problem.power.iter().map(|p| p * p).sum::<f64>().max(1.0);

    for _ in 0..opts.max_iterations {
        if cost <= 1e-30 * scale {
            return LocalFit {
                x,
                cost,
                converged: true,
            };
        }
        let (jtj, g) = problem.normal_equations(&x);

        // Freeze variables pinned at a bound with the gradient pushing outward.
        let mut free = [true; 3];
        for k in 0..3 {
            let at_lower = x[k] <= problem.lower[k] && g[k] > 0.0;
            let at_upper = x[k] >= problem.upper[k] && g[k] < 0.0;
            free[k] = !(at_lower || at_upper);
        }
        let proj_grad: f64 = (0..3)
            .filter(|&k| free[k])
            .map(|k| g[k].abs() * (1.0 + x[k].abs()))
            .fold(0.0, f64::max);
        if proj_grad <= 1e-13 * scale.sqrt() * (1.0 + cost.sqrt()) {
            return LocalFit {
                x,
                cost,
                converged: true,
            };
        }

        let mut improved = false;
        while lambda < 1e16 {
            let mut a = jtj;
            let mut b = -g;
            for k in 0..3 {
                if free[k] {
                    a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
                } else {
                    for j in 0..3 {
                        a[(k, j)] = 0.0;
                        a[(j, k)] = 0.0;
                    }
                    a[(k, k)] = 1.0;
                    b[k] = 0.0;
                }
            }
            let Some(step) = a.lu().solve(&b) else {
                lambda *= 4.0;
                continue;
            };
            let candidate = problem.project(x + step);
            let new_cost = problem.cost(&candidate);
            if new_cost < cost {
                let moved = (candidate - x).norm();
                let rel_decrease = (cost - new_cost) / cost.max(f64::MIN_POSITIVE);
                x = candidate;
                cost = new_cost;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                if rel_decrease < opts.tolerance
                    && moved <= opts.tolerance.sqrt() * (1.0 + x.norm())
                {
                    return LocalFit {
                        x,
                        cost,
                        converged: true,
                    };
                }
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            // No descent direction at any damping: a (possibly kinked) local minimum.
            return LocalFit {
                x,
                cost,
                converged: true,
            };
        }
    }
    LocalFit {
        x,
        cost,
        converged: false,
    }
}

/// Deterministic start grid over `(alpha, m, p_ctn)`.
fn start_grid(intensity: f64, bounds: &FitBounds) -> Vec<Vector3<f64>> {
    let alphas = [0.25, 0.6, 0.9, 1.1, 1.7, 4.0, 16.0].map(|f| f * intensity);
    let ms = [0.25, 0.5, 1.5, 3.0, 6.0].map(|f| f * bounds.m_max / 8.0);
    let ctns = [0.05, 0.25, 0.6].map(|f| f * bounds.p_ctn_max);
    let mut starts = Vec::with_capacity(alphas.len() * ms.len() * ctns.len());
    for &a in &alphas {
        for &m in &ms {
            for &c in &ctns {
                starts.push(Vector3::new(
                    a.clamp(ALPHA_MIN, bounds.alpha_max),
                    m.min(bounds.m_max),
                    c,
                ));
            }
        }
    }
    starts
}

/// Fits `(alpha, m, p_ctn)` for one intensity by bounded least squares on
/// `app_power`. Needs at least three distinct core counts.
pub fn fit_intensity_params(
    profile: &PlatformProfile,
    mix: &OpMix,
    intensity: f64,
    records: &[MeasurementRecord],
    bounds: &FitBounds,
    opts: &FitOptions,
) -> Result<FitResult> {
    power::check_intensity(intensity)?;
    for r in records {
        r.validate()?;
        profile.check_cores(r.cores)?;
    }
    let distinct: BTreeSet<u32> = records.iter().map(|r| r.cores).collect();
    if distinct.len() < 3 {
        return Err(Error::Fit(format!(
            "underdetermined: {} distinct core count(s) at I={intensity}, need at least 3 for (alpha, m, p_ctn)",
            distinct.len()
        )));
    }
    if !(bounds.alpha_max >= ALPHA_MIN) || !(bounds.m_max >= 0.0) || !(bounds.p_ctn_max >= 0.0) {
        return Err(Error::Config(format!("invalid fit bounds {bounds:?}")));
    }

    let problem = Problem {
        profile,
        dyn_sum: profile.dynamic_sum(mix)?,
        intensity,
        cores: records.iter().map(|r| r.cores as f64).collect(),
        power: records.iter().map(|r| r.power).collect(),
        lower: Vector3::new(ALPHA_MIN, 0.0, 0.0),
        upper: Vector3::new(bounds.alpha_max, bounds.m_max, bounds.p_ctn_max),
    };

    let fits: Vec<LocalFit> = start_grid(intensity, bounds)
        .into_iter()
        .map(|s| descend(&problem, s, opts))
        .collect();

    let best_any = fits
        .iter()
        .min_by(|a, b| a.cost.total_cmp(&b.cost))
        .expect("start grid is nonempty");
    let converged: Vec<&LocalFit> = fits.iter().filter(|f| f.converged).collect();
    let Some(best_cost) = converged.iter().map(|f| f.cost).min_by(f64::total_cmp) else {
        return Err(Error::NoConvergence {
            iterations: opts.max_iterations,
            best_rms: (2.0 * best_any.cost / records.len() as f64).sqrt(),
            best: problem.params(&best_any.x),
        });
    };

    // Equal-residual ties: smaller alpha, then smaller p_ctn, then smaller m.
    let tie = best_cost * 1e-9 + 1e-18 * problem.power.iter().map(|p| p * p).sum::<f64>();
    let chosen = converged
        .iter()
        .filter(|f| f.cost <= best_cost + tie)
        .min_by(|a, b| {
            a.x[0]
                .total_cmp(&b.x[0])
                .then(a.x[2].total_cmp(&b.x[2]))
                .then(a.x[1].total_cmp(&b.x[1]))
        })
        .expect("at least the best fit qualifies");

    let params = problem.params(&chosen.x);
    let per_point_pe = records
        .iter()
        .map(|r| {
            let est = power::app_power_resolved(
                profile,
                &params,
                problem.dyn_sum,
                intensity,
                r.cores as f64,
            );
            power::percentage_error(r.power, est)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FitResult {
        params,
        residual_rms: (2.0 * chosen.cost / records.len() as f64).sqrt(),
        per_point_pe,
    })
}

/// Multiplicative correction for one application at one core configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaFactor {
    pub configuration: u32,
    pub beta: f64,
    pub mean_pe: f64,
}

/// `beta = 1 / (1 + mean(pe_samples))`.
///
/// The samples are signed model errors relative to the measurement in the
/// estimate-minus-measurement orientation, `(estimated - measured) / measured`,
/// which is the negation of [`power::percentage_error`]. In that orientation
/// scaling the model by `beta` zeroes the mean error of the samples.
pub fn compute_beta(configuration: u32, pe_samples: &[f64]) -> Result<BetaFactor> {
    if pe_samples.is_empty() {
        return Err(Error::Domain("beta needs at least one error sample".into()));
    }
    let mean_pe = pe_samples.iter().sum::<f64>() / pe_samples.len() as f64;
    if !(mean_pe > -1.0) || !mean_pe.is_finite() {
        return Err(Error::Domain(format!(
            "mean error {mean_pe} <= -1 gives an undefined or nonpositive beta"
        )));
    }
    Ok(BetaFactor {
        configuration,
        beta: 1.0 / (1.0 + mean_pe),
        mean_pe,
    })
}

/// Computes beta from `(measured, estimated)` power pairs of sample executions.
pub fn calibrate_beta(configuration: u32, samples: &[(f64, f64)]) -> Result<BetaFactor> {
    let errors = samples
        .iter()
        .map(|&(measured, estimated)| power::percentage_error(measured, estimated).map(|pe| -pe))
        .collect::<Result<Vec<_>>>()?;
    compute_beta(configuration, &errors)
}

/// Model output scaled by the online-learning factor.
pub fn improved_power(raw: f64, beta: &BetaFactor) -> f64 {
    debug_assert!(raw >= 0.0);
    raw * beta.beta
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rec(bench: &str, cores: u32, power: f64) -> MeasurementRecord {
        MeasurementRecord::new(bench, None, cores, power, None).unwrap()
    }

    fn idle_anchor() -> BTreeMap<String, f64> {
        BTreeMap::from([("IDLE".to_string(), 0.0)])
    }

    #[test]
    fn static_active_hand_example() {
        let records = [
            rec("SAUXOR", 1, 107.125),
            rec("SAUXOR", 2, 152.125),
            rec("IDLE", 1, 92.125),
            rec("IDLE", 2, 122.125),
        ];
        let fit = fit_static_active(&records, &idle_anchor()).unwrap();
        assert_relative_eq!(fit.p_static, 62.125, max_relative = 1e-12);
        assert_relative_eq!(fit.p_active, 30.0, max_relative = 1e-12);
        assert_relative_eq!(fit.per_op_dyn["SAUXOR"], 15.0, max_relative = 1e-12);
        assert_eq!(fit.per_op_dyn["IDLE"], 0.0);
        assert!(fit.clamped.is_empty());
        assert!(fit.residual_rms < 1e-9);
    }

    #[test]
    fn static_active_needs_two_core_counts() {
        let records = [
            rec("SAUXOR", 1, 107.125),
            rec("IDLE", 1, 92.125),
            rec("IDLE", 2, 122.125),
        ];
        let err = fit_static_active(&records, &idle_anchor()).unwrap_err();
        assert!(err.to_string().contains("SAUXOR"), "{err}");
    }

    #[test]
    fn static_active_needs_anchor() {
        let records = [rec("SAUXOR", 1, 107.125), rec("SAUXOR", 2, 152.125)];
        assert!(matches!(
            fit_static_active(&records, &BTreeMap::new()),
            Err(Error::Fit(_))
        ));
        assert!(matches!(
            fit_static_active(&[], &idle_anchor()),
            Err(Error::Fit(_))
        ));
    }

    #[test]
    fn static_active_clamps_negative_dynamic_power() {
        // NEG has slope below p_act: unconstrained dyn would be -5.
        let records = [
            rec("IDLE", 1, 92.125),
            rec("IDLE", 2, 122.125),
            rec("NEG", 1, 87.125),
            rec("NEG", 2, 112.125),
        ];
        let fit = fit_static_active(&records, &idle_anchor()).unwrap();
        assert_eq!(fit.clamped, vec!["NEG".to_string()]);
        assert_eq!(fit.per_op_dyn["NEG"], 0.0);
        assert!(fit.p_static >= 0.0 && fit.p_active >= 0.0);
    }

    #[test]
    fn intensity_fit_is_underdetermined_on_one_core_count() {
        let p = PlatformProfile::myriad1();
        let records: Vec<_> = (0..5)
            .map(|_| MeasurementRecord::new("b", Some(1.0), 1, 120.0, None).unwrap())
            .collect();
        let bounds = FitBounds::for_grid(&p, &[1.0]);
        let err = fit_intensity_params(
            &p,
            &OpMix::new(["SAUXOR"]),
            1.0,
            &records,
            &bounds,
            &FitOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Fit(_)), "{err}");
    }

    #[test]
    fn intensity_fit_noiseless_round_trip() {
        let p = PlatformProfile::myriad1();
        let mix = OpMix::new(["SAUXOR"]);
        let truth = IntensityParams::new(4.0, 1.5, 2.0, 12.0).unwrap();
        let records: Vec<_> = [1, 2, 4, 8]
            .into_iter()
            .map(|n| {
                let y = power::app_power(&p, &truth, &mix, 4.0, n).unwrap();
                MeasurementRecord::new("synthetic", Some(4.0), n, y, None).unwrap()
            })
            .collect();
        let bounds = FitBounds::for_grid(&p, &[4.0]);
        let fit =
            fit_intensity_params(&p, &mix, 4.0, &records, &bounds, &FitOptions::default()).unwrap();
        assert_relative_eq!(fit.params.alpha, 1.5, max_relative = 1e-6);
        assert_relative_eq!(fit.params.m, 2.0, max_relative = 1e-6);
        assert_relative_eq!(fit.params.p_ctn, 12.0, max_relative = 1e-6);
        assert_eq!(fit.per_point_pe.len(), 4);
        assert!(fit.residual_rms < 1e-6);
    }

    #[test]
    fn memory_bound_data_has_a_compute_bound_twin() {
        // Below alpha the data also admit an exact solution on the other
        // branch with a smaller alpha; the tie rule picks that one.
        let p = PlatformProfile::myriad1();
        let mix = OpMix::new(["SAUXOR"]);
        let truth = IntensityParams::new(1.0, 1.5, 2.0, 12.0).unwrap();
        let records: Vec<_> = [1, 2, 4, 8]
            .into_iter()
            .map(|n| {
                let y = power::app_power(&p, &truth, &mix, 1.0, n).unwrap();
                MeasurementRecord::new("synthetic", Some(1.0), n, y, None).unwrap()
            })
            .collect();
        let bounds = FitBounds::for_grid(&p, &[1.0]);
        let fit =
            fit_intensity_params(&p, &mix, 1.0, &records, &bounds, &FitOptions::default()).unwrap();
        assert!(fit.residual_rms < 1e-6);
        // alpha' = I * (1 + dyn * (I / alpha - 1) / p_lsu) = 23/28
        assert_relative_eq!(fit.params.alpha, 23.0 / 28.0, max_relative = 1e-6);
        assert_relative_eq!(fit.params.m, 2.0, max_relative = 1e-6);
    }

    #[test]
    fn beta_examples() {
        let b1 = compute_beta(1, &[-0.28]).unwrap();
        assert_relative_eq!(b1.beta, 1.0 / 0.72, max_relative = 1e-12);
        assert!((b1.beta - 1.3889).abs() < 1e-4);
        let b8 = compute_beta(8, &[0.13]).unwrap();
        assert!((b8.beta - 0.8850).abs() < 1e-4);
        assert_eq!(compute_beta(1, &[0.0]).unwrap().beta, 1.0);
        assert!(matches!(compute_beta(1, &[-1.0]), Err(Error::Domain(_))));
        assert!(matches!(
            compute_beta(1, &[-1.5, -0.7]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(compute_beta(1, &[]), Err(Error::Domain(_))));
    }

    #[test]
    fn improved_power_examples() {
        let one = compute_beta(1, &[0.0]).unwrap();
        assert_eq!(improved_power(100.0, &one), 100.0);
        let b = BetaFactor {
            configuration: 1,
            beta: 1.3889,
            mean_pe: -0.28,
        };
        assert_relative_eq!(improved_power(100.0, &b), 138.89, max_relative = 1e-12);
    }

    #[test]
    fn correction_zeroes_calibration_error() {
        let samples = [(100.0, 131.3), (220.0, 270.0), (80.0, 95.5)];
        let beta = calibrate_beta(1, &samples).unwrap();
        let corrected: Vec<(f64, f64)> = samples
            .iter()
            .map(|&(m, e)| (m, improved_power(e, &beta)))
            .collect();
        let mean_pe = corrected
            .iter()
            .map(|&(m, e)| power::percentage_error(m, e).unwrap())
            .sum::<f64>()
            / corrected.len() as f64;
        assert!(mean_pe.abs() < 1e-12);
        let again = calibrate_beta(1, &corrected).unwrap();
        assert!((again.beta - 1.0).abs() < 1e-12);
    }
}
