//! Monthly dataset handling: schema, CSV ingestion, date split, min-max
//! normalization, and correlations.

mod csv_io;
mod frame;
mod month;
mod schema;

pub use csv_io::{load_csv, read_csv, write_correlation_csv, write_frame_csv};
pub use frame::{
    apply_normalization, correlation_matrix, denormalize, extract_xy, fit_normalization, split,
    ColumnRange, NormalizationParams, SplitSpec, TimeSeriesFrame,
};
pub use month::MonthStamp;
pub use schema::{
    category_counts, check_cardinality, default_schema, load_schema, validate_schema, Category,
    SourceTag, VariableSpec, DEFAULT_SCHEMA_JSON,
};

use crate::error::Result;
use crate::numkit::{Matrix, Rng};

/// Shape of a generated noiseless linear frame.
#[derive(Debug, Clone, Copy)]
pub struct SyntheticSpec {
    pub rows: usize,
    pub inputs: usize,
    /// Rows used to fix the min-max ranges the linear target is built on.
    pub train_rows: usize,
    pub start: MonthStamp,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    /// 1986-01..2018-04 with the 2017-01 split point and 12 inputs.
    fn default() -> Self {
        Self {
            rows: 388,
            inputs: 12,
            train_rows: 372,
            start: MonthStamp::new(1986, 1).expect("valid month"),
            seed: 2018,
        }
    }
}

/// Frame whose target is an exact, intercept-free linear function of the
/// train-normalized inputs, so both ridge (no intercept) and the network can
/// represent it. Inputs are i.i.d. uniform on per-column scales.
pub fn synthetic_linear_frame(spec: &SyntheticSpec) -> Result<TimeSeriesFrame> {
    let mut rng = Rng::new(spec.seed);
    let k = spec.inputs;
    let scales: Vec<(f64, f64)> = (0..k)
        .map(|j| (10.0 * j as f64, 1.0 + 5.0 * (j % 5) as f64))
        .collect();
    let mut x = Matrix::zeros(spec.rows, k);
    for r in 0..spec.rows {
        for (j, &(offset, scale)) in scales.iter().enumerate() {
            x.set(r, j, offset + scale * rng.next_f64());
        }
    }
    let beta: Vec<f64> = (0..k)
        .map(|_| rng.next_uniform(0.5, 3.0))
        .collect::<Result<_>>()?;

    let fit_rows = spec.train_rows.min(spec.rows).max(1);
    let ranges: Vec<(f64, f64)> = (0..k)
        .map(|j| {
            let col = &x.col_vec(j)[..fit_rows];
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        })
        .collect();

    let mut specs: Vec<VariableSpec> = (0..k)
        .map(|j| {
            let cat = [
                Category::Supply,
                Category::Demand,
                Category::Balances,
                Category::FinancialMarkets,
            ][j % 4];
            VariableSpec::new(format!("x{:02}", j + 1), cat, SourceTag::Other)
        })
        .collect();
    specs.push(VariableSpec::new("y", Category::Target, SourceTag::Other));

    let mut data = Vec::with_capacity(spec.rows * (k + 1));
    for r in 0..spec.rows {
        let row = x.row(r);
        let y: f64 = row
            .iter()
            .zip(&ranges)
            .zip(&beta)
            .map(|((&v, &(lo, hi)), b)| b * (v - lo) / (hi - lo))
            .sum();
        data.extend_from_slice(row);
        data.push(y);
    }
    let values = Matrix::new(spec.rows, k + 1, data)?;
    TimeSeriesFrame::new(spec.start.range(spec.rows), specs, values)
}
