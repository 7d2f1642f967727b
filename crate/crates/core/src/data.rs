//! Reading, validating and aligning the input series.
//!
//! All quantities are carried in PgC (stocks) and PgC/yr (flows). The GCB file
//! reports GtC, which is the same unit. Conversion to ppm happens only on output.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// First year of the estimation sample.
pub const SAMPLE_START: i32 = 1959;
/// Last year of the estimation sample.
pub const SAMPLE_END: i32 = 2022;
/// PgC per ppm of atmospheric CO₂.
pub const PGC_PER_PPM: f64 = 2.12;
/// GtCO₂ per GtC (molar mass ratio 44.01/12.011).
pub const GTCO2_PER_GTC: f64 = 3.664;

/// Physical anchors of the carbon budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Atmospheric stock in 1750, PgC.
    pub c_preindustrial: f64,
    /// Atmospheric stock in the first sample year, PgC.
    pub c_initial: f64,
    /// ppm per PgC.
    pub ppm_per_pgc: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c_preindustrial: 593.0,
            c_initial: 670.0,
            ppm_per_pgc: 1.0 / PGC_PER_PPM,
        }
    }
}

impl Constants {
    pub fn to_ppm(&self, pgc: f64) -> f64 {
        pgc * self.ppm_per_pgc
    }
}

/// The columns of the GCB global budget sheet used by the model, one row per year.
#[derive(Debug, Clone, PartialEq)]
pub struct GcbTable {
    pub years: Vec<i32>,
    pub fossil: Vec<f64>,
    pub land_use: Vec<f64>,
    pub cement_carbonation: Vec<f64>,
    pub atmospheric_growth: Vec<f64>,
    pub land_sink: Vec<f64>,
    pub ocean_sink: Vec<f64>,
    pub budget_imbalance: Option<Vec<f64>>,
}

impl GcbTable {
    pub fn len(&self) -> usize {
        self.years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }

    fn index_of(&self, year: i32) -> Option<usize> {
        self.years.iter().position(|&y| y == year)
    }

    /// Writes the table with GCB-style column headers.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![
            "Year",
            "fossil emissions excluding carbonation",
            "land-use change emissions",
            "atmospheric growth",
            "ocean sink",
            "land sink",
            "cement carbonation sink",
        ];
        if self.budget_imbalance.is_some() {
            header.push("budget imbalance");
        }
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec = vec![
                self.years[i].to_string(),
                self.fossil[i].to_string(),
                self.land_use[i].to_string(),
                self.atmospheric_growth[i].to_string(),
                self.ocean_sink[i].to_string(),
                self.land_sink[i].to_string(),
                self.cement_carbonation[i].to_string(),
            ];
            if let Some(b) = &self.budget_imbalance {
                rec.push(b[i].to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<gcb csv>", e))?;
        Ok(())
    }
}

/// Annual Southern Oscillation Index.
#[derive(Debug, Clone, PartialEq)]
pub struct SoiSeries {
    pub years: Vec<i32>,
    pub values: Vec<f64>,
}

impl SoiSeries {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Writes `year,soi` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["year", "soi"])?;
        for (y, v) in self.years.iter().zip(&self.values) {
            w.write_record([y.to_string(), v.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<soi csv>", e))?;
        Ok(())
    }
}

/// The four system variables plus SOI on a common annual grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedDataset {
    pub years: Vec<i32>,
    pub land_sink: Vec<f64>,
    pub ocean_sink: Vec<f64>,
    pub emissions: Vec<f64>,
    pub concentration: Vec<f64>,
    pub soi: Vec<f64>,
}

/// Exogenous emissions pathway for the projection period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionScenario {
    pub name: String,
    pub years: Vec<i32>,
    pub emissions: Vec<f64>,
}

/// Unit of the values in a scenario file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmissionUnit {
    #[default]
    PgC,
    GtCO2,
}

impl EmissionUnit {
    fn from_label(label: &str) -> Option<Self> {
        match normalize(label).as_str() {
            "pgc" | "gtc" | "pgcyr" | "gtcyr" => Some(EmissionUnit::PgC),
            "gtco2" | "gtco2yr" | "ptco2" => Some(EmissionUnit::GtCO2),
            _ => None,
        }
    }

    fn to_pgc(self, v: f64) -> f64 {
        match self {
            EmissionUnit::PgC => v,
            EmissionUnit::GtCO2 => v / GTCO2_PER_GTC,
        }
    }
}

fn normalize(s: &str) -> String {
    let s = match s.find('(') {
        Some(i) => &s[..i],
        None => s,
    };
    s.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .flat_map(|c| c.to_lowercase())
        .collect()
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn check_contiguous(years: &[i32], what: &str) -> Result<()> {
    for w in years.windows(2) {
        if w[1] != w[0] + 1 {
            return Err(Error::Alignment(format!(
                "{what}: years jump from {} to {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

fn parse_cell(path: &Path, row: usize, column: &str, value: &str) -> Result<f64> {
    value.trim().parse::<f64>().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        row,
        column: column.to_string(),
        value: value.to_string(),
    })
}

fn parse_year(path: &Path, row: usize, value: &str) -> Result<i32> {
    let v = parse_cell(path, row, "year", value)?;
    if v.fract() != 0.0 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row,
            column: "year".into(),
            value: value.to_string(),
        });
    }
    Ok(v as i32)
}

const GCB_COLUMNS: [(&str, &[&str]); 7] = [
    ("year", &["year"]),
    (
        "fossil emissions",
        &[
            "fossilemissionsexcludingcarbonation",
            "fossilemissions",
            "fossilfuelandindustry",
            "fossilfuelemissions",
        ],
    ),
    ("land-use change emissions", &["landusechangeemissions", "landuseemissions"]),
    ("cement carbonation sink", &["cementcarbonationsink", "cementcarbonation"]),
    ("atmospheric growth", &["atmosphericgrowth"]),
    ("land sink", &["landsink"]),
    ("ocean sink", &["oceansink"]),
];

/// Reads the GCB global budget table from a CSV file.
pub fn load_gcb(path: impl AsRef<Path>) -> Result<GcbTable> {
    let path = path.as_ref();
    read_gcb(open(path)?, path)
}

/// Reads the GCB global budget table from any CSV source; `path` labels errors.
pub fn read_gcb<R: Read>(reader: R, path: &Path) -> Result<GcbTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(normalize).collect();
    let find = |aliases: &[&str]| headers.iter().position(|h| aliases.contains(&h.as_str()));

    let mut idx = [0usize; 7];
    for (slot, (name, aliases)) in idx.iter_mut().zip(GCB_COLUMNS.iter()) {
        *slot = find(aliases).ok_or_else(|| Error::Schema {
            path: path.to_path_buf(),
            column: name.to_string(),
        })?;
    }
    let imbalance_idx = find(&["budgetimbalance"]);

    let mut table = GcbTable {
        years: vec![],
        fossil: vec![],
        land_use: vec![],
        cement_carbonation: vec![],
        atmospheric_growth: vec![],
        land_sink: vec![],
        ocean_sink: vec![],
        budget_imbalance: imbalance_idx.map(|_| vec![]),
    };

    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        let get = |j: usize| rec.get(j).unwrap_or("");
        table.years.push(parse_year(path, row, get(idx[0]))?);
        let cols: [&mut Vec<f64>; 6] = [
            &mut table.fossil,
            &mut table.land_use,
            &mut table.cement_carbonation,
            &mut table.atmospheric_growth,
            &mut table.land_sink,
            &mut table.ocean_sink,
        ];
        for (k, col) in cols.into_iter().enumerate() {
            col.push(parse_cell(path, row, GCB_COLUMNS[k + 1].0, get(idx[k + 1]))?);
        }
        if let (Some(j), Some(col)) = (imbalance_idx, table.budget_imbalance.as_mut()) {
            col.push(parse_cell(path, row, "budget imbalance", get(j))?);
        }
    }
    check_contiguous(&table.years, "GCB table")?;
    Ok(table)
}

/// Anthropogenic emissions: fossil plus land-use change minus cement carbonation.
pub fn compose_emissions(raw: &GcbTable) -> Result<Vec<f64>> {
    let n = raw.years.len();
    if raw.fossil.len() != n || raw.land_use.len() != n || raw.cement_carbonation.len() != n {
        return Err(Error::Alignment(
            "emission component columns have different lengths".into(),
        ));
    }
    Ok(raw
        .fossil
        .iter()
        .zip(&raw.land_use)
        .zip(&raw.cement_carbonation)
        .map(|((f, l), c)| f + l - c)
        .collect())
}

/// Atmospheric stock obtained by accumulating the growth column from the initial anchor.
///
/// The first row of the table receives `constants.c_initial`; its own growth entry is unused.
pub fn build_concentration(raw: &GcbTable, constants: &Constants) -> Result<Vec<f64>> {
    let growth = &raw.atmospheric_growth;
    if growth.len() != raw.years.len() {
        return Err(Error::Alignment(
            "atmospheric growth column does not cover every year".into(),
        ));
    }
    if let Some(bad) = growth.iter().position(|g| !g.is_finite()) {
        return Err(Error::Alignment(format!(
            "missing atmospheric growth for {}",
            raw.years[bad]
        )));
    }
    let mut c = Vec::with_capacity(growth.len());
    let mut level = constants.c_initial;
    for (i, g) in growth.iter().enumerate() {
        if i > 0 {
            level += g;
        }
        c.push(level);
    }
    Ok(c)
}

/// Reads an annual SOI file.
///
/// Two layouts are accepted: `year,value` rows, or `year` followed by twelve monthly
/// values, which are averaged over the calendar year. Monthly rows with a missing
/// month (non-numeric or below -99) are dropped, which surfaces later as a gap.
pub fn load_soi(path: impl AsRef<Path>) -> Result<SoiSeries> {
    let path = path.as_ref();
    read_soi(open(path)?, path)
}

pub fn read_soi<R: Read>(reader: R, path: &Path) -> Result<SoiSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut years = vec![];
    let mut values = vec![];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let cells: Vec<&str> = rec.iter().filter(|c| !c.is_empty()).collect();
        if cells.is_empty() {
            continue;
        }
        if cells[0].parse::<f64>().is_err() {
            if years.is_empty() {
                continue; // header
            }
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row,
                column: "year".into(),
                value: cells[0].to_string(),
            });
        }
        let year = parse_year(path, row, cells[0])?;
        match cells.len() {
            2 => {
                years.push(year);
                values.push(parse_cell(path, row, "soi", cells[1])?);
            }
            n if n >= 13 => {
                let months: Vec<Option<f64>> = cells[1..13]
                    .iter()
                    .map(|c| c.parse::<f64>().ok().filter(|v| *v > -99.0))
                    .collect();
                if months.iter().all(Option::is_some) {
                    years.push(year);
                    values.push(months.iter().flatten().sum::<f64>() / 12.0);
                }
            }
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row,
                    column: "soi".into(),
                    value: rec.iter().collect::<Vec<_>>().join(","),
                })
            }
        }
    }
    check_contiguous(&years, "SOI series")?;
    Ok(SoiSeries { years, values })
}

/// Reads an emissions scenario covering `SAMPLE_END + 1` onwards.
///
/// Rows are `year,value[,unit]`. A unit column overrides `default_unit` per row.
pub fn load_scenario(
    path: impl AsRef<Path>,
    name: &str,
    default_unit: EmissionUnit,
) -> Result<EmissionScenario> {
    let path = path.as_ref();
    read_scenario(open(path)?, path, name, default_unit)
}

pub fn read_scenario<R: Read>(
    reader: R,
    path: &Path,
    name: &str,
    default_unit: EmissionUnit,
) -> Result<EmissionScenario> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut years = vec![];
    let mut emissions = vec![];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let first = rec.get(0).unwrap_or("");
        if first.is_empty() {
            continue;
        }
        if first.parse::<f64>().is_err() && years.is_empty() {
            continue; // header
        }
        let year = parse_year(path, row, first)?;
        let value = parse_cell(path, row, "emissions", rec.get(1).unwrap_or(""))?;
        let unit = match rec.get(2).filter(|u| !u.is_empty()) {
            Some(label) => EmissionUnit::from_label(label).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                row,
                column: "unit".into(),
                value: label.to_string(),
            })?,
            None => default_unit,
        };
        years.push(year);
        emissions.push(unit.to_pgc(value));
    }
    let scenario = EmissionScenario {
        name: name.to_string(),
        years,
        emissions,
    };
    scenario.validate(SAMPLE_END + 1)?;
    Ok(scenario)
}

impl EmissionScenario {
    /// Checks that the scenario is non-empty, contiguous and starts at `first_year`.
    pub fn validate(&self, first_year: i32) -> Result<()> {
        if self.years.is_empty() || self.years.len() != self.emissions.len() {
            return Err(Error::ScenarioAlignment(format!(
                "scenario `{}` is empty or ragged",
                self.name
            )));
        }
        if self.years[0] != first_year {
            return Err(Error::ScenarioAlignment(format!(
                "scenario `{}` starts in {} but must start in {first_year}",
                self.name, self.years[0]
            )));
        }
        for w in self.years.windows(2) {
            if w[1] != w[0] + 1 {
                return Err(Error::ScenarioAlignment(format!(
                    "scenario `{}` has a gap between {} and {}",
                    self.name, w[0], w[1]
                )));
            }
        }
        if let Some(i) = self.emissions.iter().position(|e| !e.is_finite()) {
            return Err(Error::ScenarioAlignment(format!(
                "scenario `{}` has a non-finite value in {}",
                self.name, self.years[i]
            )));
        }
        Ok(())
    }

    pub fn last_year(&self) -> i32 {
        *self.years.last().expect("validated scenario is non-empty")
    }
}

/// Canonical CSV header.
pub const CANONICAL_HEADER: [&str; 6] = ["year", "sL", "sO", "E", "C", "soi"];

impl AlignedDataset {
    /// Builds a dataset, checking shape, year contiguity and finiteness.
    pub fn new(
        years: Vec<i32>,
        land_sink: Vec<f64>,
        ocean_sink: Vec<f64>,
        emissions: Vec<f64>,
        concentration: Vec<f64>,
        soi: Vec<f64>,
    ) -> Result<Self> {
        let n = years.len();
        for (name, col) in [
            ("land sink", &land_sink),
            ("ocean sink", &ocean_sink),
            ("emissions", &emissions),
            ("concentration", &concentration),
            ("soi", &soi),
        ] {
            if col.len() != n {
                return Err(Error::Alignment(format!(
                    "{name} has {} values for {n} years",
                    col.len()
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!(
                    "{name} is missing or non-finite in {}",
                    years[i]
                )));
            }
        }
        check_contiguous(&years, "dataset")?;
        Ok(AlignedDataset {
            years,
            land_sink,
            ocean_sink,
            emissions,
            concentration,
            soi,
        })
    }

    /// Assembles the estimation sample `[first_year, last_year]` from the raw sources.
    pub fn from_sources(
        gcb: &GcbTable,
        soi: &SoiSeries,
        constants: &Constants,
        first_year: i32,
        last_year: i32,
    ) -> Result<Self> {
        let start = gcb.index_of(first_year).ok_or_else(|| {
            Error::Alignment(format!("GCB table does not contain {first_year}"))
        })?;
        let end = gcb
            .index_of(last_year)
            .ok_or_else(|| Error::Alignment(format!("GCB table does not contain {last_year}")))?;
        if end < start {
            return Err(Error::Alignment(format!("empty sample {first_year}..{last_year}")));
        }
        let slice = |v: &Vec<f64>| v[start..=end].to_vec();
        let sub = GcbTable {
            years: gcb.years[start..=end].to_vec(),
            fossil: slice(&gcb.fossil),
            land_use: slice(&gcb.land_use),
            cement_carbonation: slice(&gcb.cement_carbonation),
            atmospheric_growth: slice(&gcb.atmospheric_growth),
            land_sink: slice(&gcb.land_sink),
            ocean_sink: slice(&gcb.ocean_sink),
            budget_imbalance: gcb.budget_imbalance.as_ref().map(slice),
        };
        let s0 = soi.years.iter().position(|&y| y == first_year);
        let s1 = soi.years.iter().position(|&y| y == last_year);
        let (s0, s1) = match (s0, s1) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::Alignment(format!(
                    "SOI series covers {}..{} but the sample is {first_year}..{last_year}",
                    soi.years.first().copied().unwrap_or(0),
                    soi.years.last().copied().unwrap_or(0)
                )))
            }
        };
        let ds = AlignedDataset::new(
            sub.years.clone(),
            sub.land_sink.clone(),
            sub.ocean_sink.clone(),
            compose_emissions(&sub)?,
            build_concentration(&sub, constants)?,
            soi.values[s0..=s1].to_vec(),
        )?;
        ds.validate_observed()?;
        Ok(ds)
    }

    /// Observational checks: the atmospheric stock is positive and rising.
    pub fn validate_observed(&self) -> Result<()> {
        if let Some(i) = self.concentration.iter().position(|&c| c <= 0.0) {
            return Err(Error::InvalidData(format!(
                "concentration is not positive in {}",
                self.years[i]
            )));
        }
        for (i, w) in self.concentration.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::InvalidData(format!(
                    "concentration does not increase from {} to {}",
                    self.years[i],
                    self.years[i + 1]
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }

    pub fn first_year(&self) -> i32 {
        self.years[0]
    }

    pub fn last_year(&self) -> i32 {
        *self.years.last().expect("non-empty dataset")
    }

    /// The sub-sample `first..=last`.
    pub fn window(&self, first: i32, last: i32) -> Result<Self> {
        let lo = self.years.iter().position(|&y| y == first);
        let hi = self.years.iter().position(|&y| y == last);
        let (Some(lo), Some(hi)) = (lo, hi) else {
            return Err(Error::Alignment(format!(
                "window {first}-{last} is outside the sample {}-{}",
                self.first_year(),
                self.last_year()
            )));
        };
        if lo > hi {
            return Err(Error::Alignment(format!("empty window {first}-{last}")));
        }
        let r = lo..hi + 1;
        Ok(AlignedDataset {
            years: self.years[r.clone()].to_vec(),
            land_sink: self.land_sink[r.clone()].to_vec(),
            ocean_sink: self.ocean_sink[r.clone()].to_vec(),
            emissions: self.emissions[r.clone()].to_vec(),
            concentration: self.concentration[r.clone()].to_vec(),
            soi: self.soi[r].to_vec(),
        })
    }

    /// Levels `Y_t = (S^L, S^O, E, C)` as a `T × 4` matrix.
    pub fn levels(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.len(), 4, |i, j| match j {
            0 => self.land_sink[i],
            1 => self.ocean_sink[i],
            2 => self.emissions[i],
            _ => self.concentration[i],
        })
    }

    /// Budget imbalance `ΔC_t − E_t + S^L_t + S^O_t` for every year after the first.
    pub fn budget_imbalance(&self) -> Vec<f64> {
        (1..self.len())
            .map(|t| {
                self.concentration[t] - self.concentration[t - 1] - self.emissions[t]
                    + self.land_sink[t]
                    + self.ocean_sink[t]
            })
            .collect()
    }

    /// Writes the canonical CSV (`year,sL,sO,E,C,soi`, six decimals).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CANONICAL_HEADER)?;
        for i in 0..self.len() {
            w.write_record([
                self.years[i].to_string(),
                format!("{:.6}", self.land_sink[i]),
                format!("{:.6}", self.ocean_sink[i]),
                format!("{:.6}", self.emissions[i]),
                format!("{:.6}", self.concentration[i]),
                format!("{:.6}", self.soi[i]),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<canonical csv>", e))?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(f)
    }

    /// Reads the canonical CSV.
    pub fn read_csv<R: Read>(reader: R, path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut idx = [0usize; 6];
        for (slot, name) in idx.iter_mut().zip(CANONICAL_HEADER) {
            *slot = headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Schema {
                    path: path.to_path_buf(),
                    column: name.to_string(),
                })?;
        }
        let mut cols: [Vec<f64>; 5] = Default::default();
        let mut years = vec![];
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = i + 2;
            years.push(parse_year(path, row, rec.get(idx[0]).unwrap_or(""))?);
            for k in 0..5 {
                let name = CANONICAL_HEADER[k + 1];
                cols[k].push(parse_cell(path, row, name, rec.get(idx[k + 1]).unwrap_or(""))?);
            }
        }
        let [sl, so, e, c, soi] = cols;
        AlignedDataset::new(years, sl, so, e, c, soi)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::read_csv(open(path)?, path)
    }

    /// Summary of the loaded sample for the validation report.
    pub fn report(&self, constants: &Constants) -> ValidationReport {
        let n = self.len();
        ValidationReport {
            first_year: self.first_year(),
            last_year: self.last_year(),
            n_years: n,
            last_emissions: self.emissions[n - 1],
            last_concentration: self.concentration[n - 1],
            last_concentration_ppm: constants.to_ppm(self.concentration[n - 1]),
            soi_mean: self.soi.iter().sum::<f64>() / n as f64,
            max_abs_imbalance: self
                .budget_imbalance()
                .iter()
                .fold(0.0_f64, |m, v| m.max(v.abs())),
        }
    }
}

/// Facts about an aligned dataset, printed to standard error by the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub first_year: i32,
    pub last_year: i32,
    pub n_years: usize,
    pub last_emissions: f64,
    pub last_concentration: f64,
    pub last_concentration_ppm: f64,
    pub soi_mean: f64,
    pub max_abs_imbalance: f64,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "sample {}-{} ({} years), all columns complete",
            self.first_year, self.last_year, self.n_years
        )?;
        writeln!(f, "E_{} = {:.4} PgC/yr", self.last_year, self.last_emissions)?;
        writeln!(
            f,
            "C_{} = {:.3} PgC ({:.2} ppm)",
            self.last_year, self.last_concentration, self.last_concentration_ppm
        )?;
        writeln!(f, "SOI sample mean = {:.4}", self.soi_mean)?;
        write!(f, "max |budget imbalance| = {:.4} PgC/yr", self.max_abs_imbalance)
    }
}
