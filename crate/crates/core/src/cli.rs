//! Command-line front end. Each subcommand returns its report as a string so
//! the binary only has to print it and pick an exit code.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fitting::{
    self, BetaFactor, FitBounds, FitOptions, FitResult, MeasurementRecord, StaticActiveFit,
};
use crate::interpolation::tsk_power;
use crate::io::{self, PlatformFile, PlatformSection};
use crate::power::{self, OpMix, PlatformProfile, DEFAULT_P_LSU};
use crate::rth::{self, ApplicationMeta, RthDecision};

#[derive(Debug, Parser)]
#[command(
    name = "rthpower",
    version,
    about = "Multicore power models and race-to-halt decisions"
)]
pub struct Cli {
    /// Report format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit static, active and per-operation dynamic power from a unit-suite CSV.
    FitUnits(FitUnitsArgs),
    /// Fit (alpha, m, p_ctn) at each intensity and store the grid in a platform file.
    FitIntensity(FitIntensityArgs),
    /// Predict power at an intensity and core count.
    Predict(PredictArgs),
    /// Decide whether racing to halt on all cores saves energy.
    Decide(DecideArgs),
    /// Compare measurements against the model.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct FitUnitsArgs {
    /// Measurement CSV; rows with an intensity are ignored.
    #[arg(long)]
    pub measurements: PathBuf,
    /// Platform file to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Benchmark with known dynamic power, as NAME=MW. Repeatable.
    /// Defaults to IDLE=0 when an IDLE benchmark is present.
    #[arg(long = "fixed", value_name = "NAME=MW")]
    pub fixed: Vec<String>,
    /// Only train on these core counts.
    #[arg(long, value_delimiter = ',')]
    pub train_cores: Vec<u32>,
    /// Core count of the platform. Defaults to the largest in the data.
    #[arg(long)]
    pub max_cores: Option<u32>,
    /// Load/store unit power (mW) used by the intensity models.
    #[arg(long, default_value_t = DEFAULT_P_LSU)]
    pub p_lsu: f64,
}

#[derive(Debug, Args)]
pub struct FitIntensityArgs {
    #[arg(long)]
    pub platform: PathBuf,
    #[arg(long)]
    pub measurements: PathBuf,
    /// Grid intensities. Defaults to every intensity in the data.
    #[arg(long, value_delimiter = ',')]
    pub intensities: Vec<f64>,
    /// Operation units of the micro-benchmarks. Defaults to the existing grid mix.
    #[arg(long, value_delimiter = ',')]
    pub mix: Option<Vec<String>>,
    /// Where to write the updated platform file. Defaults to --platform.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub platform: PathBuf,
    #[arg(long)]
    pub intensity: f64,
    /// One or more core counts.
    #[arg(long, value_delimiter = ',', required = true)]
    pub cores: Vec<u32>,
    /// Multiplicative correction applied to the model output.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Operation units. Defaults to the grid mix.
    #[arg(long, value_delimiter = ',')]
    pub mix: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct DecideArgs {
    #[arg(long)]
    pub platform: PathBuf,
    /// Application metadata file with one or more [[application]] tables.
    #[arg(long)]
    pub app: PathBuf,
    /// Only decide for this application.
    #[arg(long)]
    pub name: Option<String>,
    /// Core count to race on. Defaults to the platform maximum.
    #[arg(long)]
    pub cores: Option<u32>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub platform: PathBuf,
    #[arg(long)]
    pub measurements: PathBuf,
    /// Largest acceptable |PE|, in percent.
    #[arg(long, default_value_t = 5.0)]
    pub threshold: f64,
    /// Multiplicative correction applied to every estimate.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Operation units for rows with an intensity. Defaults to the grid mix.
    #[arg(long, value_delimiter = ',')]
    pub mix: Option<Vec<String>>,
}

/// What the binary prints and the exit code it returns.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub output: String,
    pub exit_code: i32,
}

impl Outcome {
    fn ok(output: String) -> Self {
        Self {
            output,
            exit_code: 0,
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let f = cli.format;
    match &cli.command {
        Command::FitUnits(a) => cmd_fit_units(a, f),
        Command::FitIntensity(a) => cmd_fit_intensity(a, f),
        Command::Predict(a) => cmd_predict(a, f),
        Command::Decide(a) => cmd_decide(a, f),
        Command::Validate(a) => cmd_validate(a, f),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

fn parse_fixed(items: &[String]) -> Result<BTreeMap<String, f64>> {
    items
        .iter()
        .map(|item| {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| Error::parse("--fixed", format!("`{item}` is not NAME=MW")))?;
            let mw: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::parse("--fixed", format!("`{value}` is not a number")))?;
            Ok((name.trim().to_string(), mw))
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct FitUnitsReport<'a> {
    output: String,
    #[serde(flatten)]
    fit: &'a StaticActiveFit,
}

pub fn cmd_fit_units(a: &FitUnitsArgs, format: Format) -> Result<Outcome> {
    let all = io::read_measurements(&a.measurements)?;
    let largest = all.iter().map(|r| r.cores).max().unwrap_or(1);
    let records: Vec<MeasurementRecord> = all
        .into_iter()
        .filter(|r| r.intensity.is_none())
        .filter(|r| a.train_cores.is_empty() || a.train_cores.contains(&r.cores))
        .collect();
    if records.is_empty() {
        return Err(Error::Fit(format!(
            "{}: no unit-suite rows (rows without intensity) to fit",
            a.measurements.display()
        )));
    }
    let mut fixed = parse_fixed(&a.fixed)?;
    if fixed.is_empty() && records.iter().any(|r| r.benchmark == "IDLE") {
        fixed.insert("IDLE".into(), 0.0);
    }
    let fit = fitting::fit_static_active(&records, &fixed)?;
    let max_cores = a.max_cores.unwrap_or(largest);

    let file = PlatformFile {
        platform: PlatformSection {
            p_sta: fit.p_static,
            p_act: fit.p_active,
            p_lsu: a.p_lsu,
            max_cores,
            ops: fit.per_op_dyn.clone(),
        },
        grid: None,
        beta: Vec::new(),
    };
    file.validate()?;
    file.save(&a.output)?;

    let output = match format {
        Format::Json => to_json(&FitUnitsReport {
            output: a.output.display().to_string(),
            fit: &fit,
        }),
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "p_sta        {:>12.6} mW", fit.p_static);
            let _ = writeln!(s, "p_act        {:>12.6} mW", fit.p_active);
            for (name, p) in &fit.per_op_dyn {
                let tag = if fixed.contains_key(name) {
                    "  (fixed)"
                } else {
                    ""
                };
                let _ = writeln!(s, "{name:<12} {p:>12.6} mW{tag}");
            }
            if !fit.clamped.is_empty() {
                let _ = writeln!(s, "clamped to 0: {}", fit.clamped.join(", "));
            }
            let _ = writeln!(
                s,
                "residual rms {:>12.6} mW over {} rows",
                fit.residual_rms,
                records.len()
            );
            let _ = writeln!(s, "wrote {}", a.output.display());
            s
        }
    };
    Ok(Outcome::ok(output))
}

fn same_intensity(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

#[derive(Debug, Serialize)]
struct GridFitReport {
    intensity: f64,
    samples: usize,
    #[serde(flatten)]
    fit: FitResult,
}

pub fn cmd_fit_intensity(a: &FitIntensityArgs, format: Format) -> Result<Outcome> {
    let mut file = PlatformFile::load(&a.platform)?;
    let profile = file.profile()?;
    let records: Vec<MeasurementRecord> = io::read_measurements(&a.measurements)?
        .into_iter()
        .filter(|r| r.intensity.is_some())
        .collect();

    let mut intensities = a.intensities.clone();
    if intensities.is_empty() {
        for r in &records {
            let i = r.intensity.unwrap();
            if !intensities.iter().any(|&x| same_intensity(x, i)) {
                intensities.push(i);
            }
        }
    }
    if intensities.is_empty() {
        return Err(Error::Fit(format!(
            "{}: no rows with an intensity",
            a.measurements.display()
        )));
    }
    intensities.sort_by(f64::total_cmp);

    let mix = match &a.mix {
        Some(ops) => OpMix::new(ops.iter().filter(|o| !o.is_empty()).cloned()),
        None => file
            .grid
            .as_ref()
            .map(|g| g.mix.clone())
            .unwrap_or_default(),
    };
    let bounds = FitBounds::for_grid(&profile, &intensities);
    let opts = FitOptions::default();

    let mut reports = Vec::new();
    for &i in &intensities {
        let at: Vec<MeasurementRecord> = records
            .iter()
            .filter(|r| same_intensity(r.intensity.unwrap(), i))
            .cloned()
            .collect();
        if at.is_empty() {
            return Err(Error::Fit(format!("no measurements at intensity {i}")));
        }
        let fit = fitting::fit_intensity_params(&profile, &mix, i, &at, &bounds, &opts)?;
        reports.push(GridFitReport {
            intensity: i,
            samples: at.len(),
            fit,
        });
    }

    file.set_grid(
        mix,
        reports
            .iter()
            .map(|r| (r.fit.params, Some(r.fit.residual_rms)))
            .collect(),
    );
    file.validate()?;
    let out = a.output.as_ref().unwrap_or(&a.platform);
    file.save(out)?;

    let output = match format {
        Format::Json => to_json(&reports),
        Format::Text => {
            let mut s = format!(
                "{:>10} {:>12} {:>10} {:>12} {:>12} {:>10}\n",
                "intensity", "alpha", "m", "p_ctn_mW", "rms_mW", "max|PE|"
            );
            for r in &reports {
                let max_pe = r
                    .fit
                    .per_point_pe
                    .iter()
                    .fold(0.0f64, |m, p| m.max(p.abs()));
                let p = r.fit.params;
                let _ = writeln!(
                    s,
                    "{:>10} {:>12.6} {:>10.6} {:>12.6} {:>12.6} {:>9.3}%",
                    r.intensity,
                    p.alpha,
                    p.m,
                    p.p_ctn,
                    r.fit.residual_rms,
                    100.0 * max_pe
                );
            }
            let _ = writeln!(s, "wrote {}", out.display());
            s
        }
    };
    Ok(Outcome::ok(output))
}

fn beta_factor(configuration: u32, beta: f64) -> Result<BetaFactor> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!("beta must be > 0, got {beta}")));
    }
    Ok(BetaFactor {
        configuration,
        beta,
        mean_pe: 1.0 / beta - 1.0,
    })
}

fn mix_or_grid(mix: &Option<Vec<String>>, grid_mix: OpMix) -> OpMix {
    match mix {
        Some(ops) => OpMix::new(ops.iter().filter(|o| !o.is_empty()).cloned()),
        None => grid_mix,
    }
}

#[derive(Debug, Serialize)]
struct Prediction {
    intensity: f64,
    cores: u32,
    raw_power_mw: f64,
    beta: Option<f64>,
    power_mw: f64,
}

pub fn cmd_predict(a: &PredictArgs, format: Format) -> Result<Outcome> {
    let file = PlatformFile::load(&a.platform)?;
    let profile = file.profile()?;
    let (grid, grid_mix) = file.require_grid()?;
    let mix = mix_or_grid(&a.mix, grid_mix);

    let rows = a
        .cores
        .iter()
        .map(|&n| {
            let raw = tsk_power(&profile, &grid, &mix, a.intensity, n)?;
            let power = match a.beta {
                Some(b) => fitting::improved_power(raw, &beta_factor(n, b)?),
                None => raw,
            };
            Ok(Prediction {
                intensity: a.intensity,
                cores: n,
                raw_power_mw: raw,
                beta: a.beta,
                power_mw: power,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let output = match format {
        Format::Json => to_json(&rows),
        Format::Text => rows.iter().fold(String::new(), |mut s, r| {
            let _ = writeln!(
                s,
                "I={} n={} power={:.6} mW",
                r.intensity, r.cores, r.power_mw
            );
            s
        }),
    };
    Ok(Outcome::ok(output))
}

#[derive(Debug, Serialize)]
struct AppDecision {
    application: String,
    intensity: f64,
    /// Prediction from the fitted model, when the metadata has speed-ups.
    model: Option<RthDecision>,
    /// Verdict from measured energies, when the metadata has them.
    measured: Option<RthDecision>,
}

/// Model and measured-energy verdicts for one application.
pub fn decide_application(
    profile: &PlatformProfile,
    file: &PlatformFile,
    meta: &ApplicationMeta,
    n_max: u32,
) -> Result<(Option<RthDecision>, Option<RthDecision>)> {
    meta.validate()?;
    let mut meta = meta.clone();
    for (n, b) in file.betas_for(&meta.name) {
        meta.beta.entry(n).or_insert(b);
    }
    let has_speedup = meta.speedup.contains_key(&n_max) || meta.parallel_fraction.is_some();
    let model = match (has_speedup, file.intensity_grid()?) {
        (true, Some(grid)) => Some(rth::rth_decide(profile, &grid, &meta, n_max)?),
        _ => None,
    };
    let measured = match (meta.energy.get(&1), meta.energy.get(&n_max)) {
        (Some(&e1), Some(&en)) => Some(rth::decide_from_energies(e1, en, n_max)?),
        _ => None,
    };
    if model.is_none() && measured.is_none() {
        return Err(Error::Metadata(format!(
            "`{}`: need speed-ups and a fitted grid, or energies at 1 and {n_max} cores",
            meta.name
        )));
    }
    Ok((model, measured))
}

fn verdict(d: &RthDecision) -> &'static str {
    if d.use_rth {
        "use RTH"
    } else {
        "do not use RTH"
    }
}

pub fn cmd_decide(a: &DecideArgs, format: Format) -> Result<Outcome> {
    let file = PlatformFile::load(&a.platform)?;
    let profile = file.profile()?;
    let n_max = a.cores.unwrap_or(profile.max_cores());
    profile.check_cores(n_max)?;
    if n_max < 2 {
        return Err(Error::Domain(format!(
            "race-to-halt needs at least 2 cores, got {n_max}"
        )));
    }
    let apps: Vec<ApplicationMeta> = io::load_applications(&a.app)?
        .into_iter()
        .filter(|m| a.name.as_ref().is_none_or(|n| &m.name == n))
        .collect();
    if apps.is_empty() {
        return Err(Error::Metadata(format!(
            "{}: no application named `{}`",
            a.app.display(),
            a.name.as_deref().unwrap_or("")
        )));
    }

    let decisions = apps
        .iter()
        .map(|meta| {
            let (model, measured) = decide_application(&profile, &file, meta, n_max)?;
            Ok(AppDecision {
                application: meta.name.clone(),
                intensity: meta.intensity.resolve()?,
                model,
                measured,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let output = match format {
        Format::Json => to_json(&decisions),
        Format::Text => {
            let mut s = String::new();
            for d in &decisions {
                let _ = writeln!(s, "{} (I={}, n={n_max})", d.application, d.intensity);
                if let Some(m) = &d.model {
                    let _ = writeln!(
                        s,
                        "  model:    {:<15} power_up={:.6} speed_up={:.6} energy_saving={:+.4}",
                        verdict(m),
                        m.power_up.unwrap_or(f64::NAN),
                        m.speed_up.unwrap_or(f64::NAN),
                        m.energy_saving
                    );
                }
                if let Some(m) = &d.measured {
                    let _ = writeln!(
                        s,
                        "  measured: {:<15} energy_saving={:+.4}",
                        verdict(m),
                        m.energy_saving
                    );
                }
            }
            s
        }
    };
    Ok(Outcome::ok(output))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleError {
    pub benchmark: String,
    pub intensity: Option<f64>,
    pub cores: u32,
    pub measured_mw: f64,
    pub estimated_mw: f64,
    /// `(measured - estimated) / measured`
    pub pe: f64,
    pub abs_pe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupError {
    pub group: String,
    pub samples: usize,
    pub max_abs_pe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub samples: Vec<SampleError>,
    pub groups: Vec<GroupError>,
    pub max_abs_pe: f64,
    /// Fraction, not percent.
    pub threshold: f64,
    pub pass: bool,
}

/// Operation units named by a unit-suite benchmark: the name itself when the
/// op table has it, otherwise its `-` or `+` separated parts. `LOAD`,
/// `STORE`, `DUALLOAD` and `DUALSTORE` stand for load/store unit ops.
fn unit_mix(profile: &PlatformProfile, benchmark: &str) -> Result<OpMix> {
    if profile.op_power(benchmark).is_some() {
        return Ok(OpMix::new([benchmark]));
    }
    let mut ops = Vec::new();
    for part in benchmark.split(['-', '+']).map(str::trim) {
        match part {
            "LOAD" => ops.push("LSULOAD"),
            "STORE" => ops.push("LSUSTORE"),
            "DUALLOAD" => ops.extend(["LSULOAD", "LSULOAD"]),
            "DUALSTORE" => ops.extend(["LSUSTORE", "LSUSTORE"]),
            p if profile.op_power(p).is_some() => ops.push(p),
            _ => return Err(Error::UnknownOperation(benchmark.to_string())),
        }
    }
    Ok(OpMix::new(ops))
}

/// Percentage errors of every record against the model.
pub fn validation_report(
    file: &PlatformFile,
    records: &[MeasurementRecord],
    mix: Option<&OpMix>,
    beta: Option<f64>,
    threshold: f64,
) -> Result<ValidationReport> {
    if records.is_empty() {
        return Err(Error::Fit("no measurements to validate".into()));
    }
    if !(threshold >= 0.0) {
        return Err(Error::Domain(format!(
            "threshold must be >= 0, got {threshold}"
        )));
    }
    let profile = file.profile()?;
    let grid = file.intensity_grid()?;
    let grid_mix = file
        .grid
        .as_ref()
        .map(|g| g.mix.clone())
        .unwrap_or_default();
    let mix = mix.cloned().unwrap_or(grid_mix);

    let mut samples = Vec::with_capacity(records.len());
    for r in records {
        let raw = match r.intensity {
            Some(i) => {
                let grid = grid.as_ref().ok_or_else(|| {
                    Error::Config("rows with an intensity need a fitted [grid]".into())
                })?;
                tsk_power(&profile, grid, &mix, i, r.cores)?
            }
            None => power::units_power(&profile, &unit_mix(&profile, &r.benchmark)?, r.cores)?,
        };
        let estimated = match beta {
            Some(b) => fitting::improved_power(raw, &beta_factor(r.cores, b)?),
            None => raw,
        };
        let pe = power::percentage_error(r.power, estimated)?;
        samples.push(SampleError {
            benchmark: r.benchmark.clone(),
            intensity: r.intensity,
            cores: r.cores,
            measured_mw: r.power,
            estimated_mw: estimated,
            pe,
            abs_pe: pe.abs(),
        });
    }

    let mut groups: BTreeMap<String, (usize, f64)> = BTreeMap::new();
    for s in &samples {
        let g = groups.entry(s.benchmark.clone()).or_insert((0, 0.0));
        g.0 += 1;
        g.1 = g.1.max(s.abs_pe);
    }
    let max_abs_pe = samples.iter().fold(0.0f64, |m, s| m.max(s.abs_pe));
    Ok(ValidationReport {
        samples,
        groups: groups
            .into_iter()
            .map(|(group, (samples, max_abs_pe))| GroupError {
                group,
                samples,
                max_abs_pe,
            })
            .collect(),
        max_abs_pe,
        threshold,
        pass: max_abs_pe <= threshold,
    })
}

pub fn cmd_validate(a: &ValidateArgs, format: Format) -> Result<Outcome> {
    let file = PlatformFile::load(&a.platform)?;
    let records = io::read_measurements(&a.measurements)?;
    if records.is_empty() {
        return Err(Error::Fit(format!(
            "{}: no measurements to validate",
            a.measurements.display()
        )));
    }
    let mix = a
        .mix
        .as_ref()
        .map(|ops| OpMix::new(ops.iter().filter(|o| !o.is_empty()).cloned()));
    let report = validation_report(&file, &records, mix.as_ref(), a.beta, a.threshold / 100.0)?;

    let output = match format {
        Format::Json => to_json(&report),
        Format::Text => {
            let mut s = format!(
                "{:<14} {:>10} {:>5} {:>12} {:>12} {:>9} {:>9}\n",
                "benchmark", "intensity", "cores", "measured", "estimated", "PE", "|PE|"
            );
            for r in &report.samples {
                let i = r
                    .intensity
                    .map(|i| i.to_string())
                    .unwrap_or_else(|| "-".into());
                let _ = writeln!(
                    s,
                    "{:<14} {:>10} {:>5} {:>12.4} {:>12.4} {:>+8.3}% {:>8.3}%",
                    r.benchmark,
                    i,
                    r.cores,
                    r.measured_mw,
                    r.estimated_mw,
                    100.0 * r.pe,
                    100.0 * r.abs_pe
                );
            }
            let seen: BTreeSet<&str> = report.groups.iter().map(|g| g.group.as_str()).collect();
            if seen.len() > 1 {
                for g in &report.groups {
                    let _ = writeln!(
                        s,
                        "max |PE| {:<14} {:>8.3}% ({} samples)",
                        g.group,
                        100.0 * g.max_abs_pe,
                        g.samples
                    );
                }
            }
            let _ = writeln!(
                s,
                "max |PE| {:.3}% vs threshold {:.3}%: {}",
                100.0 * report.max_abs_pe,
                100.0 * report.threshold,
                if report.pass { "PASS" } else { "FAIL" }
            );
            s
        }
    };
    Ok(Outcome {
        output,
        exit_code: if report.pass { 0 } else { 1 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::power::IntensityParams;

    fn grid_file() -> PlatformFile {
        let mut f = PlatformFile::from_profile(&PlatformProfile::myriad1());
        f.set_grid(
            OpMix::new(["SAUXOR"]),
            vec![
                (IntensityParams::new(0.25, 0.4, 1.0, 10.0).unwrap(), None),
                (IntensityParams::new(1.0, 1.5, 2.0, 12.0).unwrap(), None),
            ],
        );
        f
    }

    #[test]
    fn fixed_flag_parsing() {
        let m = parse_fixed(&["IDLE=0".into(), " NOP = 1.5".into()]).unwrap();
        assert_eq!(m["IDLE"], 0.0);
        assert_eq!(m["NOP"], 1.5);
        assert!(parse_fixed(&["IDLE".into()]).is_err());
        assert!(parse_fixed(&["IDLE=x".into()]).is_err());
    }

    #[test]
    fn unit_mix_resolves_names() {
        let p = PlatformProfile::myriad1();
        assert_eq!(unit_mix(&p, "SAUXOR").unwrap(), OpMix::new(["SAUXOR"]));
        assert_eq!(
            unit_mix(&p, "SAUXOR+LSULOAD").unwrap(),
            OpMix::new(["SAUXOR", "LSULOAD"])
        );
        assert_eq!(
            unit_mix(&p, "SAUXOR-IAUXOR-CMUCPSS").unwrap(),
            OpMix::new(["SAUXOR", "IAUXOR", "CMUCPSS"])
        );
        assert_eq!(
            unit_mix(&p, "DUALLOAD").unwrap(),
            OpMix::new(["LSULOAD", "LSULOAD"])
        );
        assert!(matches!(
            unit_mix(&p, "NOPE"),
            Err(Error::UnknownOperation(_))
        ));
    }

    #[test]
    fn report_of_model_data_is_exact() {
        let f = grid_file();
        let p = f.profile().unwrap();
        let (g, mix) = f.require_grid().unwrap();
        let mut recs = Vec::new();
        for n in 1..=8 {
            recs.push(
                MeasurementRecord::new("SAUXOR", None, n, 62.125 + n as f64 * 45.0, None).unwrap(),
            );
            let y = tsk_power(&p, &g, &mix, 0.5, n).unwrap();
            recs.push(MeasurementRecord::new("mid", Some(0.5), n, y, None).unwrap());
        }
        let r = validation_report(&f, &recs, None, None, 0.001).unwrap();
        assert!(r.pass);
        assert!(r.max_abs_pe < 1e-12);
        assert_eq!(r.groups.len(), 2);
        for s in &r.samples {
            assert!(s.abs_pe <= r.max_abs_pe);
        }
    }

    #[test]
    fn report_of_scaled_data() {
        let f = grid_file();
        let recs: Vec<_> = (1..=4)
            .map(|n| {
                MeasurementRecord::new("SAUXOR", None, n, (62.125 + n as f64 * 45.0) / 1.1, None)
                    .unwrap()
            })
            .collect();
        let r = validation_report(&f, &recs, None, None, 0.05).unwrap();
        assert!(!r.pass);
        for s in &r.samples {
            assert!((s.pe + 0.10).abs() < 1e-12, "{}", s.pe);
        }
        // A matching beta removes the error.
        let r = validation_report(&f, &recs, None, Some(1.0 / 1.1), 0.001).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn report_errors() {
        let f = grid_file();
        assert!(validation_report(&f, &[], None, None, 0.05).is_err());
        let bare = PlatformFile::from_profile(&PlatformProfile::myriad1());
        let recs = [MeasurementRecord::new("x", Some(1.0), 1, 100.0, None).unwrap()];
        assert!(matches!(
            validation_report(&bare, &recs, None, None, 0.05),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn cli_parses_subcommands() {
        let cli = Cli::try_parse_from([
            "rthpower",
            "predict",
            "--platform",
            "p.toml",
            "--intensity",
            "0.5",
            "--cores",
            "1,8",
            "--format",
            "json",
        ])
        .unwrap();
        assert_eq!(cli.format, Format::Json);
        match cli.command {
            Command::Predict(a) => assert_eq!(a.cores, vec![1, 8]),
            other => panic!("{other:?}"),
        }
        assert!(Cli::try_parse_from(["rthpower", "predict", "--platform", "p.toml"]).is_err());
    }
}
