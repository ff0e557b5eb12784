//! Embedded reference datasets and CSV input/output for series.

use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::{Cohort, TimeSeries};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    pub name: String,
    pub series: TimeSeries,
    pub provenance: String,
}

const SYNTHETIC21: [f64; 21] = [
    1.10, 1.35, 1.65, 1.95, 1.90, 1.75, 1.82, 2.00, 2.25, 2.55, 2.80, 2.98, 3.10, 3.20, 3.27, 3.32, 3.35, 3.37, 3.39,
    3.40, 3.41,
];

const ENTERPRISE78: [f64; 40] = [
    0.0, 5.2, 12.8, 18.5, 22.1, 19.8, 16.2, 13.5, 11.8, 10.5, 9.2, 8.8, 9.5, 11.2, 13.8, 16.5, 19.2, 21.8, 24.1, 25.8,
    26.9, 27.6, 28.1, 28.3, 28.8, 29.5, 30.2, 30.8, 31.2, 31.8, 32.1, 32.4, 32.6, 32.7, 32.8, 32.9, 33.0, 33.0, 33.1,
    33.1,
];

pub const BUILTIN_NAMES: [&str; 3] = ["synthetic21", "enterprise78", "cohorts"];

/// Daily synthetic adoption series with an early rise, a dip and a recovery.
pub fn synthetic21() -> Dataset {
    let times = (0..21).map(f64::from).collect();
    Dataset {
        name: "synthetic21".into(),
        series: TimeSeries::new(times, SYNTHETIC21.to_vec()).expect("embedded series is valid"),
        provenance: "21-point daily synthetic adoption series (reference fitting pipeline)".into(),
    }
}

/// Weekly active users (%) of an enterprise tool over 78 weeks, every second week.
pub fn enterprise78() -> Dataset {
    let times = (0..40).map(|i| 2.0 * i as f64).collect();
    Dataset {
        name: "enterprise78".into(),
        series: TimeSeries::new(times, ENTERPRISE78.to_vec()).expect("embedded series is valid").with_unit("week"),
        provenance: "enterprise deployment, weekly active users in percent, 18 months".into(),
    }
}

/// Growth rates fitted per embedding cohort (low, medium, high).
pub fn cohorts() -> Vec<Cohort> {
    vec![
        Cohort { e: 0.2, beta_hat: 0.120, se: 0.015 },
        Cohort { e: 0.6, beta_hat: 0.182, se: 0.018 },
        Cohort { e: 0.9, beta_hat: 0.238, se: 0.021 },
    ]
}

/// Reads cohort rows from a CSV with columns `e`, `beta_hat` and `se`.
pub fn load_cohorts(path: impl AsRef<Path>) -> Result<Vec<Cohort>> {
    read_cohorts(std::fs::File::open(path)?)
}

pub fn read_cohorts<R: Read>(reader: R) -> Result<Vec<Cohort>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Parse { row: 1, column: String::new(), message: e.to_string() })?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            row: 1,
            column: name.into(),
            message: format!("missing column '{name}'"),
        })
    };
    let (ei, bi, si) = (col("e")?, col("beta_hat")?, col("se")?);
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| Error::Parse { row, column: String::new(), message: e.to_string() })?;
        let num = |idx: usize, name: &str| -> Result<f64> {
            let raw = rec.get(idx).unwrap_or("");
            raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                row,
                column: name.into(),
                message: format!("'{raw}' is not a finite number"),
            })
        };
        out.push(Cohort { e: num(ei, "e")?, beta_hat: num(bi, "beta_hat")?, se: num(si, "se")? });
    }
    Ok(out)
}

/// Series-valued builtin datasets by name.
pub fn builtin(name: &str) -> Result<Dataset> {
    match name {
        "synthetic21" => Ok(synthetic21()),
        "enterprise78" => Ok(enterprise78()),
        other => Err(Error::UnknownDataset(other.to_string())),
    }
}

/// Column names to read from a CSV file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub t_col: String,
    pub y_col: String,
    pub dow_col: Option<String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self { t_col: "t".into(), y_col: "y".into(), dow_col: None }
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<TimeSeries> {
    let file = std::fs::File::open(path)?;
    read_csv(file, schema)
}

/// Parses a headed CSV. Row numbers in errors count the header as row 1.
pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let parse_err = |row: usize, column: &str, message: String| Error::Parse { row, column: column.into(), message };
    let headers = rdr.headers().map_err(|e| parse_err(1, "", e.to_string()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(1, name, format!("missing column '{name}'")))
    };
    let ti = find(&schema.t_col)?;
    let yi = find(&schema.y_col)?;
    let di = schema.dow_col.as_deref().map(find).transpose()?;

    let (mut times, mut values, mut dow) = (Vec::new(), Vec::new(), Vec::new());
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| parse_err(row, "", e.to_string()))?;
        let num = |idx: usize, name: &str| -> Result<f64> {
            let raw = rec.get(idx).ok_or_else(|| parse_err(row, name, "missing field".into()))?;
            let v: f64 = raw.parse().map_err(|_| parse_err(row, name, format!("'{raw}' is not a number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(row, name, format!("'{raw}' is not finite")))
            }
        };
        let t = num(ti, &schema.t_col)?;
        if let Some(&prev) = times.last() {
            if !(t > prev) {
                return Err(Error::NonMonotoneTime { row });
            }
        }
        times.push(t);
        values.push(num(yi, &schema.y_col)?);
        if let (Some(idx), Some(name)) = (di, schema.dow_col.as_deref()) {
            let raw = rec.get(idx).ok_or_else(|| parse_err(row, name, "missing field".into()))?;
            let d: u8 = raw
                .parse()
                .ok()
                .filter(|d| *d <= 6)
                .ok_or_else(|| parse_err(row, name, format!("'{raw}' is not a day index 0-6")))?;
            dow.push(d);
        }
    }
    let series = TimeSeries::new(times, values)?;
    if di.is_some() {
        series.with_dow(dow)
    } else {
        Ok(series)
    }
}

/// Writes `t,y[,dow]` with shortest round-trip float formatting.
pub fn write_csv<W: Write>(series: &TimeSeries, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    if series.dow.is_some() {
        w.write_record(["t", "y", "dow"]).map_err(io)?;
    } else {
        w.write_record(["t", "y"]).map_err(io)?;
    }
    for i in 0..series.len() {
        let (t, y) = (series.times[i].to_string(), series.values[i].to_string());
        match &series.dow {
            Some(d) => w.write_record([t, y, d[i].to_string()]).map_err(io)?,
            None => w.write_record([t, y]).map_err(io)?,
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(series: &TimeSeries, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(series, std::io::BufWriter::new(file))
}
