use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{validate_schema, MonthStamp, TimeSeriesFrame, VariableSpec};
use crate::error::{Error, Result};
use crate::fmt::{format_float, format_sig};
use crate::numkit::Matrix;

/// Loads a monthly CSV whose header is `date,<schema names in order>`.
///
/// Error positions are 1-based: `row` counts data rows (header excluded),
/// `col` counts fields with `date` as field 1.
pub fn load_csv(path: impl AsRef<Path>, schema: &[VariableSpec]) -> Result<TimeSeriesFrame> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &[VariableSpec]) -> Result<TimeSeriesFrame> {
    validate_schema(schema)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);

    let header = rdr.headers()?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names.first().copied() != Some("date") {
        return Err(Error::MissingColumn("date".into()));
    }
    for (i, spec) in schema.iter().enumerate() {
        match names.get(i + 1) {
            Some(&n) if n == spec.name => {}
            Some(&n) if !schema.iter().any(|s| s.name == n) => {
                return Err(Error::UnexpectedColumn(n.to_string()))
            }
            _ => return Err(Error::MissingColumn(spec.name.clone())),
        }
    }
    if let Some(extra) = names.get(schema.len() + 1) {
        return Err(Error::UnexpectedColumn(extra.to_string()));
    }

    let k = schema.len();
    let mut dates: Vec<MonthStamp> = Vec::new();
    let mut data = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let date_text = record.get(0).unwrap_or("");
        let date: MonthStamp = date_text.parse().map_err(|_| Error::UnparseableCell {
            row,
            col: 1,
            text: date_text.to_string(),
        })?;
        if let Some(&prev) = dates.last() {
            if date <= prev {
                return Err(Error::NonMonotonicDates { row });
            }
            if date != prev.next() {
                return Err(Error::GapInDates {
                    row,
                    expected: prev.next(),
                    found: date,
                });
            }
        }
        dates.push(date);
        for c in 0..k {
            let col = c + 2;
            let text = record.get(c + 1).unwrap_or("");
            data.push(parse_cell(text, row, col)?);
        }
    }
    let values = Matrix::new(dates.len(), k, data)?;
    TimeSeriesFrame::new(dates, schema.to_vec(), values)
}

fn parse_cell(text: &str, row: usize, col: usize) -> Result<f64> {
    if text.is_empty() || matches!(text, "NA" | "N/A" | "na" | "NaN" | "nan" | ".") {
        return Err(Error::MissingValue { row, col });
    }
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(Error::MissingValue { row, col }),
        Err(_) => Err(Error::UnparseableCell {
            row,
            col,
            text: text.to_string(),
        }),
    }
}

/// Writes a frame back out in the input layout.
pub fn write_frame_csv<W: Write>(writer: W, frame: &TimeSeriesFrame) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["date".to_string()];
    header.extend(frame.column_names().iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for (date, row) in frame.dates().iter().zip(frame.values().row_iter()) {
        let mut rec = vec![date.to_string()];
        rec.extend(row.iter().map(|&v| format_float(v)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Correlation table with variable names on both axes, 6 significant digits.
pub fn write_correlation_csv<W: Write>(writer: W, names: &[&str], corr: &Matrix) -> Result<()> {
    if corr.rows() != names.len() || corr.cols() != names.len() {
        return Err(Error::dims(
            "correlation matrix does not match the name list",
        ));
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![String::new()];
    header.extend(names.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for (i, name) in names.iter().enumerate() {
        let mut rec = vec![name.to_string()];
        rec.extend(corr.row(i).iter().map(|&v| format_sig(v, 6)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
