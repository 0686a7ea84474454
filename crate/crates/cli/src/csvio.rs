//! CSV ingest and export. Comma separated, header row, `.` decimals, LF.
//! Numbers are written in shortest round-trip form so files re-ingest
//! exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use genset_core::signal::{derive_channels, SignalConfig, ThreePhaseFrames};
use genset_core::units::TimeSeries;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const RAW_COLUMNS: [&str; 7] = ["t", "van", "vbn", "vcn", "ia", "ib", "ic"];
pub const DERIVED_COLUMNS: [&str; 5] = ["t", "P", "Q", "V", "f"];

/// Relative tolerance on sample-step uniformity.
const UNIFORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    /// Instantaneous three-phase voltages and currents.
    Raw,
    /// `P`, `Q`, `V`, `f` channels.
    Derived,
}

/// Numeric table with its header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub path: PathBuf,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    /// Column index by exact name, falling back to a case-insensitive match.
    pub fn column_index(&self, name: &str) -> CliResult<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .or_else(|| self.header.iter().position(|h| h.eq_ignore_ascii_case(name)))
            .ok_or_else(|| CliError::MissingColumn {
                path: self.path.clone(),
                column: name.to_string(),
            })
    }

    pub fn column(&self, name: &str) -> CliResult<Vec<f64>> {
        let i = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.column_index(name).is_ok()
    }
}

fn reader(path: &Path) -> CliResult<csv::Reader<File>> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(f))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line());
    CliError::Csv {
        path: path.to_path_buf(),
        line,
        msg: e.to_string(),
    }
}

/// Reads an all-numeric CSV file.
pub fn read_table(path: &Path) -> CliResult<Table> {
    let mut rdr = reader(path)?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.parse::<f64>().map_err(|_| CliError::Csv {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("column `{}`: `{s}` is not a number", header[i]),
                })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(Table {
        path: path.to_path_buf(),
        header,
        rows,
    })
}

/// Start time and step of a strictly increasing, uniform time column.
pub fn uniform_grid(path: &Path, t: &[f64]) -> CliResult<(f64, f64)> {
    let bad = |line: usize, msg: String| CliError::Csv {
        path: path.to_path_buf(),
        line: line as u64 + 2,
        msg,
    };
    if t.len() < 2 {
        return Err(CliError::Csv {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("need at least 2 samples, found {}", t.len()),
        });
    }
    let first = t[1] - t[0];
    for k in 1..t.len() {
        let step = t[k] - t[k - 1];
        if !(step > 0.0) {
            return Err(bad(k, format!("time is not strictly increasing ({} after {})", t[k], t[k - 1])));
        }
        if (step - first).abs() > UNIFORM_TOL * first {
            return Err(bad(k, format!("non-uniform sampling: step {step} after {first}")));
        }
    }
    Ok((t[0], (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64))
}

/// Guesses the dataset kind from the header.
pub fn detect_kind(table: &Table) -> CliResult<DatasetKind> {
    if RAW_COLUMNS[1..].iter().all(|c| table.has_column(c)) {
        Ok(DatasetKind::Raw)
    } else if DERIVED_COLUMNS[1..].iter().all(|c| table.has_column(c)) {
        Ok(DatasetKind::Derived)
    } else {
        Err(CliError::Config {
            path: table.path.clone(),
            msg: format!(
                "header matches neither the raw ({}) nor the derived ({}) layout",
                RAW_COLUMNS.join(","),
                DERIVED_COLUMNS.join(",")
            ),
        })
    }
}

/// Loads a measurement as `P`, `Q`, `V`, `f` channels. Raw waveforms are
/// run through the signal pipeline.
pub fn ingest(path: &Path, kind: Option<DatasetKind>, f_nominal: f64, signal: &SignalConfig) -> CliResult<TimeSeries> {
    let table = read_table(path)?;
    let kind = match kind {
        Some(k) => k,
        None => detect_kind(&table)?,
    };
    let (t0, dt) = uniform_grid(path, &table.column("t")?)?;
    match kind {
        DatasetKind::Derived => {
            let mut ts = TimeSeries::new(t0, dt)?;
            for c in &DERIVED_COLUMNS[1..] {
                ts.insert(*c, table.column(c)?)?;
            }
            Ok(ts)
        }
        DatasetKind::Raw => {
            let cols = RAW_COLUMNS[1..]
                .iter()
                .map(|c| table.column(c))
                .collect::<CliResult<Vec<_>>>()?;
            let [van, vbn, vcn, ia, ib, ic]: [Vec<f64>; 6] = cols.try_into().expect("six columns");
            let frames = ThreePhaseFrames {
                t0,
                dt,
                van,
                vbn,
                vcn,
                ia,
                ib,
                ic,
            };
            Ok(derive_channels(&frames, f_nominal, signal)?)
        }
    }
}

/// Writes a header and numeric rows.
pub fn write_table(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> CliResult<()> {
    let cells = rows
        .into_iter()
        .map(|r| r.into_iter().map(Some).collect::<Vec<_>>());
    write_optional_table(path, header, cells)
}

/// Like [`write_table`], leaving `None` cells empty.
pub fn write_optional_table(
    path: &Path,
    header: &[String],
    rows: impl IntoIterator<Item = Vec<Option<f64>>>,
) -> CliResult<()> {
    let cells = rows
        .into_iter()
        .map(|r| r.iter().map(|v| v.map(|v| format!("{v:?}")).unwrap_or_default()).collect());
    write_cells(path, header, cells)
}

/// Writes preformatted cells.
pub fn write_cells(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    let io = |e| CliError::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for row in rows {
        writeln!(w, "{}", row.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Writes `t` followed by every channel.
pub fn write_series(path: &Path, ts: &TimeSeries) -> CliResult<()> {
    let mut header = vec!["t".to_string()];
    header.extend(ts.channel_names().map(str::to_string));
    let cols: Vec<&[f64]> = ts.channels().map(|(_, v)| v).collect();
    let rows = (0..ts.len()).map(|k| {
        let mut r = Vec::with_capacity(cols.len() + 1);
        r.push(ts.time(k));
        r.extend(cols.iter().map(|c| c[k]));
        r
    });
    write_table(path, &header, rows)
}

/// Writes instantaneous waveforms in the raw layout.
pub fn write_raw(path: &Path, frames: &ThreePhaseFrames) -> CliResult<()> {
    let header: Vec<String> = RAW_COLUMNS.iter().map(|s| s.to_string()).collect();
    let rows = (0..frames.len()).map(|k| {
        vec![
            frames.time(k),
            frames.van[k],
            frames.vbn[k],
            frames.vcn[k],
            frames.ia[k],
            frames.ib[k],
            frames.ic[k],
        ]
    });
    write_table(path, &header, rows)
}

/// `(P kW, fuel L/h)` pairs from a file with `p_kw` and `fuel_lph` columns.
pub fn read_fuel_points(path: &Path) -> CliResult<Vec<(f64, f64)>> {
    let t = read_table(path)?;
    let p = t.column("p_kw")?;
    let f = t.column("fuel_lph")?;
    Ok(p.into_iter().zip(f).collect())
}

/// `name,lower,upper` rows.
pub fn read_bounds(path: &Path) -> CliResult<Vec<(String, f64, f64)>> {
    let mut rdr = reader(path)?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(|s| s.to_ascii_lowercase())
        .collect();
    let idx = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| CliError::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
        })
    };
    let (ni, li, ui) = (idx("name")?, idx("lower")?, idx("upper")?);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| {
            rec[i].parse::<f64>().map_err(|_| CliError::Csv {
                path: path.to_path_buf(),
                line,
                msg: format!("`{}` is not a number", &rec[i]),
            })
        };
        out.push((rec[ni].to_string(), num(li)?, num(ui)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_checks() {
        let p = Path::new("x.csv");
        let (t0, dt) = uniform_grid(p, &[0.5, 0.6, 0.7, 0.8]).unwrap();
        assert!((t0 - 0.5).abs() < 1e-15 && (dt - 0.1).abs() < 1e-12);
        let e = uniform_grid(p, &[0.0, 1.0, 1.0, 3.0]).unwrap_err();
        assert!(matches!(e, CliError::Csv { line: 4, .. }), "{e}");
        assert!(uniform_grid(p, &[0.0, 1.0, 2.1, 3.0]).is_err());
        assert!(uniform_grid(p, &[0.0, 1.0, 2.0000000001, 3.0]).is_ok());
    }
}
