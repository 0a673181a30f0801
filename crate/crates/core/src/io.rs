//! File formats: platform files (TOML), measurement CSVs and application
//! metadata files.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::{BetaFactor, MeasurementRecord};
use crate::interpolation::IntensityGrid;
use crate::power::{IntensityParams, OpMix, OperationKind, PlatformProfile};
use crate::rth::ApplicationMeta;

/// Mandatory CSV header.
pub const CSV_HEADER: [&str; 5] = ["benchmark", "intensity", "cores", "power_mw", "time_s"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformSection {
    pub p_sta: f64,
    pub p_act: f64,
    pub p_lsu: f64,
    pub max_cores: u32,
    #[serde(default)]
    pub ops: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPoint {
    pub intensity: f64,
    pub alpha: f64,
    pub m: f64,
    pub p_ctn: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_rms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Operation units the grid was fitted with; the default mix for predictions.
    #[serde(default)]
    pub mix: OpMix,
    pub points: Vec<GridPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaEntry {
    pub application: String,
    pub cores: u32,
    pub beta: f64,
    pub mean_pe: f64,
}

/// On-disk platform description: constants, optional fitted grid and
/// optional per-application beta factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformFile {
    pub platform: PlatformSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub beta: Vec<BetaEntry>,
}

impl PlatformFile {
    pub fn from_profile(profile: &PlatformProfile) -> Self {
        Self {
            platform: PlatformSection {
                p_sta: profile.p_static(),
                p_act: profile.p_active(),
                p_lsu: profile.p_lsu(),
                max_cores: profile.max_cores(),
                ops: profile
                    .operations()
                    .map(|op| (op.name, op.dynamic_power))
                    .collect(),
            },
            grid: None,
            beta: Vec::new(),
        }
    }

    pub fn profile(&self) -> Result<PlatformProfile> {
        let s = &self.platform;
        let ops = s
            .ops
            .iter()
            .map(|(name, &p)| OperationKind::new(name.clone(), p))
            .collect::<Result<Vec<_>>>()?;
        PlatformProfile::new(s.p_sta, s.p_act, s.p_lsu, s.max_cores, ops)
    }

    pub fn intensity_grid(&self) -> Result<Option<IntensityGrid>> {
        let Some(section) = &self.grid else {
            return Ok(None);
        };
        let points = section
            .points
            .iter()
            .map(|g| IntensityParams::new(g.intensity, g.alpha, g.m, g.p_ctn))
            .collect::<Result<Vec<_>>>()?;
        IntensityGrid::new(points).map(Some)
    }

    /// The grid, or a configuration error naming the file.
    pub fn require_grid(&self) -> Result<(IntensityGrid, OpMix)> {
        match self.intensity_grid()? {
            Some(g) => Ok((g, self.grid.as_ref().unwrap().mix.clone())),
            None => Err(Error::Config(
                "platform file has no [grid]; run fit-intensity first".into(),
            )),
        }
    }

    pub fn set_grid(&mut self, mix: OpMix, points: Vec<(IntensityParams, Option<f64>)>) {
        let mut points: Vec<GridPoint> = points
            .into_iter()
            .map(|(p, rms)| GridPoint {
                intensity: p.intensity,
                alpha: p.alpha,
                m: p.m,
                p_ctn: p.p_ctn,
                residual_rms: rms,
            })
            .collect();
        points.sort_by(|a, b| a.intensity.total_cmp(&b.intensity));
        self.grid = Some(GridSection { mix, points });
    }

    pub fn betas_for(&self, application: &str) -> BTreeMap<u32, BetaFactor> {
        self.beta
            .iter()
            .filter(|b| b.application == application)
            .map(|b| {
                (
                    b.cores,
                    BetaFactor {
                        configuration: b.cores,
                        beta: b.beta,
                        mean_pe: b.mean_pe,
                    },
                )
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.profile()?;
        self.intensity_grid()?;
        for b in &self.beta {
            if !(b.beta > 0.0) || !b.beta.is_finite() {
                return Err(Error::Config(format!(
                    "beta for `{}` at {} cores must be > 0",
                    b.application, b.cores
                )));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let file: Self = toml::from_str(text).map_err(|e| Error::parse(source, e.message()))?;
        file.validate()?;
        Ok(file)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("platform file serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?, &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml()).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parses a measurement CSV. Errors carry the 1-based line number.
pub fn parse_measurements<R: Read>(reader: R, source: &str) -> Result<Vec<MeasurementRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::parse(format!("{source}:1"), e.to_string()))?
        .clone();
    let got: Vec<&str> = header.iter().collect();
    if got.is_empty() || got == [""] {
        return Err(Error::parse(format!("{source}:1"), "missing header"));
    }
    if got != CSV_HEADER {
        return Err(Error::parse(
            format!("{source}:1"),
            format!(
                "expected header `{}`, got `{}`",
                CSV_HEADER.join(","),
                got.join(",")
            ),
        ));
    }

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(format!("{source}:{line}"), e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let at = || format!("{source}:{line}");
        let bad =
            |field: &str, value: &str| Error::parse(at(), format!("invalid {field} `{value}`"));

        let benchmark = &row[0];
        if benchmark.is_empty() {
            return Err(Error::parse(at(), "empty benchmark name"));
        }
        let intensity = match &row[1] {
            "" => None,
            s => Some(s.parse::<f64>().map_err(|_| bad("intensity", s))?),
        };
        let cores = row[2].parse::<u32>().map_err(|_| bad("cores", &row[2]))?;
        let power = row[3]
            .parse::<f64>()
            .map_err(|_| bad("power_mw", &row[3]))?;
        let time = match &row[4] {
            "" => None,
            s => Some(s.parse::<f64>().map_err(|_| bad("time_s", s))?),
        };
        let record = MeasurementRecord::new(benchmark, intensity, cores, power, time)
            .map_err(|e| Error::parse(at(), e.to_string()))?;
        records.push(record);
    }
    Ok(records)
}

pub fn read_measurements(path: &Path) -> Result<Vec<MeasurementRecord>> {
    let file = fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_measurements(file, &path.display().to_string())
}

pub fn write_measurements<W: Write>(writer: W, records: &[MeasurementRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let io_err = |e: csv::Error| Error::Io {
        path: "<csv writer>".into(),
        source: std::io::Error::other(e.to_string()),
    };
    wtr.write_record(CSV_HEADER).map_err(io_err)?;
    for r in records {
        wtr.write_record([
            r.benchmark.clone(),
            r.intensity.map(|i| i.to_string()).unwrap_or_default(),
            r.cores.to_string(),
            r.power.to_string(),
            r.time.map(|t| t.to_string()).unwrap_or_default(),
        ])
        .map_err(io_err)?;
    }
    wtr.flush().map_err(|source| Error::Io {
        path: "<csv writer>".into(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MetaFile {
    application: Vec<ApplicationMeta>,
}

/// Parses an application metadata file holding one or more `[[application]]` tables.
pub fn parse_applications(text: &str, source: &str) -> Result<Vec<ApplicationMeta>> {
    let file: MetaFile = toml::from_str(text).map_err(|e| Error::parse(source, e.message()))?;
    if file.application.is_empty() {
        return Err(Error::parse(source, "no [[application]] entries"));
    }
    for app in &file.application {
        app.validate()?;
    }
    Ok(file.application)
}

pub fn load_applications(path: &Path) -> Result<Vec<ApplicationMeta>> {
    parse_applications(&read_text(path)?, &path.display().to_string())
}

pub fn applications_to_toml(apps: &[ApplicationMeta]) -> String {
    toml::to_string_pretty(&MetaFile {
        application: apps.to_vec(),
    })
    .expect("metadata serializes")
}
