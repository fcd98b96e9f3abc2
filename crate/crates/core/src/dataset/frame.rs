use serde::{Deserialize, Serialize};

use super::{validate_schema, MonthStamp, VariableSpec};
use crate::error::{Error, Result};
use crate::numkit::Matrix;

/// Dated monthly matrix: one row per month, one column per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesFrame {
    dates: Vec<MonthStamp>,
    columns: Vec<VariableSpec>,
    values: Matrix,
    target_index: usize,
}

impl TimeSeriesFrame {
    /// Builds a frame, checking that dates are contiguous months and every
    /// cell is finite.
    pub fn new(dates: Vec<MonthStamp>, columns: Vec<VariableSpec>, values: Matrix) -> Result<Self> {
        let target_index = validate_schema(&columns)?;
        if values.rows() != dates.len() || values.cols() != columns.len() {
            return Err(Error::dims(format!(
                "values are {}x{}, frame has {} dates and {} columns",
                values.rows(),
                values.cols(),
                dates.len(),
                columns.len()
            )));
        }
        check_dates(&dates)?;
        for r in 0..values.rows() {
            for c in 0..values.cols() {
                if !values.get(r, c).is_finite() {
                    return Err(Error::MissingValue {
                        row: r + 1,
                        col: c + 2,
                    });
                }
            }
        }
        Ok(Self {
            dates,
            columns,
            values,
            target_index,
        })
    }

    pub fn dates(&self) -> &[MonthStamp] {
        &self.dates
    }

    pub fn columns(&self) -> &[VariableSpec] {
        &self.columns
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn target_index(&self) -> usize {
        self.target_index
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    /// Indices of the independent variables, in schema order.
    pub fn input_indices(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&c| c != self.target_index)
            .collect()
    }

    pub fn column_values(&self, col: usize) -> Vec<f64> {
        self.values.col_vec(col)
    }

    pub fn target(&self) -> Vec<f64> {
        self.values.col_vec(self.target_index)
    }

    fn slice_rows(&self, range: std::ops::Range<usize>) -> Self {
        let cols = self.values.cols();
        let data = self.values.data()[range.start * cols..range.end * cols].to_vec();
        Self {
            dates: self.dates[range.clone()].to_vec(),
            columns: self.columns.clone(),
            values: Matrix::new(range.len(), cols, data).expect("slice of a valid matrix"),
            target_index: self.target_index,
        }
    }

    /// Appends `other` below `self`; `other` must continue the month sequence.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.columns != other.columns {
            return Err(Error::InvalidSchema("frames have different columns".into()));
        }
        let mut dates = self.dates.clone();
        dates.extend_from_slice(&other.dates);
        let mut data = self.values.data().to_vec();
        data.extend_from_slice(other.values.data());
        let values = Matrix::new(dates.len(), self.columns.len(), data)?;
        Self::new(dates, self.columns.clone(), values)
    }
}

fn check_dates(dates: &[MonthStamp]) -> Result<()> {
    for (i, pair) in dates.windows(2).enumerate() {
        let (prev, cur) = (pair[0], pair[1]);
        if cur <= prev {
            return Err(Error::NonMonotonicDates { row: i + 2 });
        }
        if cur != prev.next() {
            return Err(Error::GapInDates {
                row: i + 2,
                expected: prev.next(),
                found: cur,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_start: MonthStamp,
}

/// Train = rows strictly before `test_start`, test = the rest. Both sides
/// must keep at least two rows.
pub fn split(
    frame: &TimeSeriesFrame,
    spec: SplitSpec,
) -> Result<(TimeSeriesFrame, TimeSeriesFrame)> {
    let at = frame
        .dates
        .iter()
        .position(|&d| d == spec.test_start)
        .ok_or(Error::SplitOutOfRange(spec.test_start))?;
    if at < 2 || frame.len() - at < 2 {
        return Err(Error::SplitOutOfRange(spec.test_start));
    }
    Ok((frame.slice_rows(0..at), frame.slice_rows(at..frame.len())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnRange {
    pub index: usize,
    pub min_val: f64,
    pub max_val: f64,
}

/// Per-column min-max ranges, fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub columns: Vec<ColumnRange>,
}

impl NormalizationParams {
    pub fn applied_columns(&self) -> Vec<usize> {
        self.columns.iter().map(|c| c.index).collect()
    }
}

pub fn fit_normalization(train: &TimeSeriesFrame) -> Result<NormalizationParams> {
    let mut columns = Vec::new();
    for c in train.input_indices() {
        let vals = train.column_values(c);
        let min_val = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let max_val = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(max_val > min_val) {
            return Err(Error::ConstantColumn(c));
        }
        columns.push(ColumnRange {
            index: c,
            min_val,
            max_val,
        });
    }
    Ok(NormalizationParams { columns })
}

fn check_params(frame: &TimeSeriesFrame, params: &NormalizationParams) -> Result<()> {
    for r in &params.columns {
        if r.index >= frame.columns.len() {
            return Err(Error::UnknownColumn(r.index));
        }
        if r.index == frame.target_index {
            return Err(Error::InvalidParameter(format!(
                "column {} is the target and is never normalized",
                r.index
            )));
        }
        if !(r.max_val > r.min_val) {
            return Err(Error::ConstantColumn(r.index));
        }
    }
    Ok(())
}

fn map_columns(
    frame: &TimeSeriesFrame,
    params: &NormalizationParams,
    f: impl Fn(f64, &ColumnRange) -> f64,
) -> Result<TimeSeriesFrame> {
    check_params(frame, params)?;
    let mut out = frame.clone();
    for range in &params.columns {
        for r in 0..out.values.rows() {
            let v = out.values.get(r, range.index);
            out.values.set(r, range.index, f(v, range));
        }
    }
    Ok(out)
}

/// `(x - min) / (max - min)` on every applied column. Rows outside the fitting
/// window may land outside `[0, 1]`; the target is never touched.
pub fn apply_normalization(
    frame: &TimeSeriesFrame,
    params: &NormalizationParams,
) -> Result<TimeSeriesFrame> {
    map_columns(frame, params, |v, r| {
        (v - r.min_val) / (r.max_val - r.min_val)
    })
}

/// Inverse of [`apply_normalization`].
pub fn denormalize(
    frame: &TimeSeriesFrame,
    params: &NormalizationParams,
) -> Result<TimeSeriesFrame> {
    map_columns(frame, params, |v, r| {
        r.min_val + v * (r.max_val - r.min_val)
    })
}

/// Pearson correlation of every pair of columns (schema order, target included).
pub fn correlation_matrix(frame: &TimeSeriesFrame) -> Result<Matrix> {
    let n = frame.len();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    let k = frame.columns.len();
    let mut centered = Vec::with_capacity(k);
    for c in 0..k {
        let col = frame.column_values(c);
        let mean = col.iter().sum::<f64>() / n as f64;
        let dev: Vec<f64> = col.iter().map(|v| v - mean).collect();
        let norm = dev.iter().map(|d| d * d).sum::<f64>().sqrt();
        if norm == 0.0 || dev.iter().all(|&d| d == 0.0) {
            return Err(Error::ConstantColumn(c));
        }
        centered.push((dev, norm));
    }
    let mut out = Matrix::identity(k);
    for i in 0..k {
        for j in i + 1..k {
            let (a, na) = &centered[i];
            let (b, nb) = &centered[j];
            let r = (crate::numkit::dot(a, b) / (na * nb)).clamp(-1.0, 1.0);
            out.set(i, j, r);
            out.set(j, i, r);
        }
    }
    Ok(out)
}

/// Inputs in schema order and the target column.
pub fn extract_xy(frame: &TimeSeriesFrame) -> (Matrix, Vec<f64>) {
    let inputs = frame.input_indices();
    let mut data = Vec::with_capacity(frame.len() * inputs.len());
    for row in frame.values.row_iter() {
        data.extend(inputs.iter().map(|&c| row[c]));
    }
    let x = Matrix::new(frame.len(), inputs.len(), data).expect("consistent shape");
    (x, frame.target())
}
