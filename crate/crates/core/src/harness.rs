//! Experiment grid over the three model families: fit, forecast, score,
//! time, select, and write the report files.

use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::arima::{arima_fit, ArimaOrder};
use crate::dataset::{
    apply_normalization, correlation_matrix, extract_xy, fit_normalization, split,
    write_correlation_csv, MonthStamp, SplitSpec, TimeSeriesFrame,
};
use crate::error::{Error, Result};
use crate::evalkit::{generalization, EvalReport, GeneralizationScore};
use crate::ffnet::{FFNetConfig, FFNetModel};
use crate::fmt::format_float;
use crate::numkit::{derive_seed, Matrix};
use crate::par::Exec;
use crate::ridge::{ridge_fit, CANONICAL_LAMBDAS};

pub const DEFAULT_TIMING_REPETITIONS: usize = 25;
pub const DEFAULT_GRID_SEED: u64 = 2018;

fn default_repetitions() -> usize {
    DEFAULT_TIMING_REPETITIONS
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NnCellSpec {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Explicit initialization seed; derived from the grid seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// The `grid.json` document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    #[serde(default)]
    pub nn: Vec<NnCellSpec>,
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub arima: Vec<[usize; 3]>,
    #[serde(default = "default_repetitions")]
    pub timing_repetitions: usize,
    pub seed: u64,
}

impl ExperimentGrid {
    /// 6 network configurations, 6 ridge penalties, 6 ARIMA orders.
    pub fn canonical(seed: u64) -> Self {
        let nn = FFNetConfig::CANONICAL_LEARNING_RATES
            .iter()
            .flat_map(|&learning_rate| {
                FFNetConfig::CANONICAL_EPOCHS
                    .iter()
                    .map(move |&epochs| NnCellSpec {
                        learning_rate,
                        epochs,
                        seed: None,
                    })
            })
            .collect();
        Self {
            nn,
            lambdas: CANONICAL_LAMBDAS.to_vec(),
            arima: ArimaOrder::CANONICAL_GRID
                .iter()
                .map(|o| [o.p, o.d, o.q])
                .collect(),
            timing_repetitions: DEFAULT_TIMING_REPETITIONS,
            seed,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let grid: Self = serde_json::from_str(text)?;
        grid.validate()?;
        Ok(grid)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn cell_count(&self) -> usize {
        self.nn.len() + self.lambdas.len() + self.arima.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.cell_count() == 0 {
            return Err(Error::InvalidParameter("grid has no cells".into()));
        }
        if self.timing_repetitions == 0 {
            return Err(Error::InvalidParameter(
                "timing_repetitions must be at least 1".into(),
            ));
        }
        for &[p, d, q] in &self.arima {
            ArimaOrder::new(p, d, q).validate()?;
        }
        Ok(())
    }

    /// Cells in grid order: network configurations, then penalties, then orders.
    /// Unseeded network cells take the stream value at their ordinal.
    pub fn cells(&self, input_dim: usize) -> Vec<CellParams> {
        let mut out = Vec::with_capacity(self.cell_count());
        for spec in &self.nn {
            let seed = spec
                .seed
                .unwrap_or_else(|| derive_seed(self.seed, out.len() as u64));
            let mut config = FFNetConfig::canonical(spec.learning_rate, spec.epochs, seed);
            config.input_dim = input_dim;
            out.push(CellParams::Nn(config));
        }
        out.extend(
            self.lambdas
                .iter()
                .map(|&lambda| CellParams::Ridge { lambda }),
        );
        out.extend(
            self.arima
                .iter()
                .map(|&[p, d, q]| CellParams::Arima(ArimaOrder::new(p, d, q))),
        );
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Nn,
    Ridge,
    Arima,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Nn, Method::Ridge, Method::Arima];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Nn => "nn",
            Method::Ridge => "ridge",
            Method::Arima => "arima",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum CellParams {
    Nn(FFNetConfig),
    Ridge { lambda: f64 },
    Arima(ArimaOrder),
}

impl CellParams {
    pub fn method(&self) -> Method {
        match self {
            CellParams::Nn(_) => Method::Nn,
            CellParams::Ridge { .. } => Method::Ridge,
            CellParams::Arima(_) => Method::Arima,
        }
    }
}

impl fmt::Display for CellParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellParams::Nn(c) => write!(
                f,
                "lr={} epochs={} seed={}",
                c.learning_rate, c.epochs, c.seed
            ),
            CellParams::Ridge { lambda } => write!(f, "lambda={lambda}"),
            CellParams::Arima(o) => write!(f, "order={o}"),
        }
    }
}

/// Metrics and series of a cell that ran to completion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub in_sample: EvalReport,
    pub out_of_sample: EvalReport,
    /// `None` when the in-sample R² is exactly zero.
    pub generalization: Option<GeneralizationScore>,
    /// In-sample predictions for the last `fitted.len()` training months.
    pub fitted: Vec<f64>,
    pub forecast: Vec<f64>,
    /// Last entry of the network's training-loss history.
    pub final_train_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub ordinal: usize,
    pub params: CellParams,
    pub mean_runtime_s: f64,
    pub outcome: std::result::Result<CellOutcome, String>,
}

impl GridCell {
    pub fn method(&self) -> Method {
        self.params.method()
    }

    pub fn ok(&self) -> Option<&CellOutcome> {
        self.outcome.as_ref().ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub cells: Vec<GridCell>,
    pub train_dates: Vec<MonthStamp>,
    pub test_dates: Vec<MonthStamp>,
    pub train_actual: Vec<f64>,
    pub test_actual: Vec<f64>,
    /// Column names and correlation matrix of the full raw frame, if defined.
    pub correlation: Option<(Vec<String>, Matrix)>,
}

impl GridResult {
    pub fn failed_count(&self) -> usize {
        self.cells.iter().filter(|c| c.outcome.is_err()).count()
    }
}

struct Prepared {
    x_train: Matrix,
    y_train: Vec<f64>,
    x_test: Matrix,
    y_test: Vec<f64>,
}

struct CellRun {
    fitted: Vec<f64>,
    forecast: Vec<f64>,
    final_train_loss: Option<f64>,
    /// Regressor count for adjusted R².
    k: usize,
}

fn fit_and_forecast(params: &CellParams, data: &Prepared) -> Result<CellRun> {
    let k = data.x_train.cols();
    match params {
        CellParams::Nn(config) => {
            let model = FFNetModel::init(*config)?.train_with(
                &data.x_train,
                &data.y_train,
                Exec::Sequential,
            )?;
            Ok(CellRun {
                fitted: model.predict(&data.x_train)?,
                forecast: model.predict(&data.x_test)?,
                final_train_loss: model.train_loss_history.last().copied(),
                k,
            })
        }
        CellParams::Ridge { lambda } => {
            let model = ridge_fit(&data.x_train, &data.y_train, *lambda)?;
            Ok(CellRun {
                fitted: model.predict(&data.x_train)?,
                forecast: model.predict(&data.x_test)?,
                final_train_loss: None,
                k,
            })
        }
        CellParams::Arima(order) => {
            let model = arima_fit(&data.y_train, *order)?;
            Ok(CellRun {
                fitted: model.fitted(&data.y_train)?,
                forecast: model.forecast(data.y_test.len())?,
                final_train_loss: None,
                k: order.p + order.q,
            })
        }
    }
}

/// Mean wall-clock seconds over the repetitions (stopping at the first
/// failure) and the scored outcome of the first run.
fn run_cell(
    params: &CellParams,
    data: &Prepared,
    repetitions: usize,
) -> (f64, Result<CellOutcome>) {
    let mut first = None;
    let mut total = 0.0;
    let mut runs = 0;
    while runs < repetitions.max(1) {
        let start = Instant::now();
        let run = fit_and_forecast(params, data);
        total += start.elapsed().as_secs_f64();
        runs += 1;
        let failed = run.is_err();
        first.get_or_insert(run);
        if failed {
            break;
        }
    }
    let outcome = first.expect("at least one repetition").and_then(|run| {
        let actual_in = &data.y_train[data.y_train.len() - run.fitted.len()..];
        let in_sample = EvalReport::in_sample(actual_in, &run.fitted, run.k)?;
        let out_of_sample = EvalReport::out_of_sample(&data.y_test, &run.forecast)?;
        Ok(CellOutcome {
            generalization: generalization(in_sample.r2, out_of_sample.r2).ok(),
            in_sample,
            out_of_sample,
            fitted: run.fitted,
            forecast: run.forecast,
            final_train_loss: run.final_train_loss,
        })
    });
    (total / runs as f64, outcome)
}

/// [`run_grid_with`] using the default (parallel) execution policy.
pub fn run_grid(
    frame: &TimeSeriesFrame,
    split_spec: SplitSpec,
    grid: &ExperimentGrid,
) -> Result<GridResult> {
    run_grid_with(frame, split_spec, grid, Exec::default())
}

/// Normalizes inputs on the training rows, then fits and scores every cell.
/// Cells may run concurrently; results are stored by ordinal and metric
/// values do not depend on scheduling. Cell failures are recorded in place.
pub fn run_grid_with(
    frame: &TimeSeriesFrame,
    split_spec: SplitSpec,
    grid: &ExperimentGrid,
    exec: Exec,
) -> Result<GridResult> {
    grid.validate()?;
    let (train, test) = split(frame, split_spec)?;
    let norm = fit_normalization(&train)?;
    let (x_train, y_train) = extract_xy(&apply_normalization(&train, &norm)?);
    let (x_test, y_test) = extract_xy(&apply_normalization(&test, &norm)?);
    let data = Prepared {
        x_train,
        y_train,
        x_test,
        y_test,
    };

    let params = grid.cells(data.x_train.cols());
    let runs = exec.map_indexed(params.len(), |i| {
        run_cell(&params[i], &data, grid.timing_repetitions)
    });
    let cells = params
        .iter()
        .zip(runs)
        .enumerate()
        .map(|(ordinal, (&params, (mean_runtime_s, outcome)))| GridCell {
            ordinal,
            params,
            mean_runtime_s,
            outcome: outcome.map_err(|e| e.to_string()),
        })
        .collect();

    let correlation = correlation_matrix(frame).ok().map(|m| {
        (
            frame.column_names().iter().map(|s| s.to_string()).collect(),
            m,
        )
    });
    Ok(GridResult {
        cells,
        train_dates: train.dates().to_vec(),
        test_dates: test.dates().to_vec(),
        train_actual: data.y_train,
        test_actual: data.y_test,
        correlation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    InSampleError,
    OutSampleError,
    OutSampleR2,
    Generalization,
}

impl Criterion {
    pub const ALL: [Criterion; 4] = [
        Criterion::InSampleError,
        Criterion::OutSampleError,
        Criterion::OutSampleR2,
        Criterion::Generalization,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::InSampleError => "in_sample_error",
            Criterion::OutSampleError => "out_sample_error",
            Criterion::OutSampleR2 => "out_sample_r2",
            Criterion::Generalization => "generalization",
        }
    }

    /// Score to minimize, or `None` when the cell has no value for it.
    fn key(self, o: &CellOutcome) -> Option<f64> {
        let v = match self {
            Criterion::InSampleError => o.in_sample.rmse,
            Criterion::OutSampleError => o.out_of_sample.rmse,
            Criterion::OutSampleR2 => -o.out_of_sample.r2,
            Criterion::Generalization => -o.generalization?.ratio,
        };
        (!v.is_nan()).then_some(v)
    }

    /// The MAD counterpart of an error criterion.
    fn mad_key(self, o: &CellOutcome) -> Option<f64> {
        match self {
            Criterion::InSampleError => Some(o.in_sample.mad),
            Criterion::OutSampleError => Some(o.out_of_sample.mad),
            _ => None,
        }
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown criterion {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestCell {
    pub method: Method,
    pub ordinal: usize,
    pub params: String,
    /// For error criteria: whether MAD picks the same cell as RMSE.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmse_mad_agree: Option<bool>,
}

fn argmin<'a>(cells: impl Iterator<Item = (&'a GridCell, f64)>) -> Option<&'a GridCell> {
    let mut best: Option<(&GridCell, f64)> = None;
    for (cell, v) in cells {
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((cell, v));
        }
    }
    best.map(|(c, _)| c)
}

/// Best successful cell per method; ties go to the earlier cell.
pub fn select_best(result: &GridResult, criterion: Criterion) -> Result<Vec<BestCell>> {
    if result.cells.iter().all(|c| c.outcome.is_err()) {
        return Err(Error::AllCellsFailed);
    }
    let mut out = Vec::new();
    for method in Method::ALL {
        let pool = || {
            result
                .cells
                .iter()
                .filter(move |c| c.method() == method)
                .filter_map(|c| Some((c, c.ok()?)))
        };
        let Some(best) = argmin(pool().filter_map(|(c, o)| Some((c, criterion.key(o)?)))) else {
            continue;
        };
        let by_mad = argmin(pool().filter_map(|(c, o)| Some((c, criterion.mad_key(o)?))));
        out.push(BestCell {
            method,
            ordinal: best.ordinal,
            params: best.params.to_string(),
            rmse_mad_agree: by_mad.map(|m| m.ordinal == best.ordinal),
        });
    }
    Ok(out)
}

/// Mean Generalization over the successful cells of each method that have one.
pub fn mean_generalization_by_method(result: &GridResult) -> Vec<(Method, f64)> {
    Method::ALL
        .into_iter()
        .filter_map(|m| {
            let ratios: Vec<f64> = result
                .cells
                .iter()
                .filter(|c| c.method() == m)
                .filter_map(|c| Some(c.ok()?.generalization?.ratio))
                .collect();
            (!ratios.is_empty()).then(|| (m, ratios.iter().sum::<f64>() / ratios.len() as f64))
        })
        .collect()
}

pub const GRID_CSV_HEADER: [&str; 12] = [
    "method",
    "params",
    "rmse_in",
    "mad_in",
    "r2_in",
    "adj_r2_in",
    "rmse_out",
    "mad_out",
    "r2_out",
    "generalization",
    "mean_runtime_s",
    "status",
];

fn num(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

fn write_grid_csv(result: &GridResult, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(GRID_CSV_HEADER)?;
    for cell in &result.cells {
        let o = cell.ok();
        let status = match &cell.outcome {
            Ok(_) => "ok".to_string(),
            Err(msg) => format!("failed: {msg}"),
        };
        w.write_record([
            cell.method().to_string(),
            cell.params.to_string(),
            num(o.map(|o| o.in_sample.rmse)),
            num(o.map(|o| o.in_sample.mad)),
            num(o.map(|o| o.in_sample.r2)),
            num(o.and_then(|o| o.in_sample.adjusted_r2)),
            num(o.map(|o| o.out_of_sample.rmse)),
            num(o.map(|o| o.out_of_sample.mad)),
            num(o.map(|o| o.out_of_sample.r2)),
            num(o.and_then(|o| o.generalization.map(|g| g.ratio))),
            format_float(cell.mean_runtime_s),
            status,
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// One row per date; leading dates without a prediction get an empty cell.
fn write_series_csv(
    path: &Path,
    dates: &[MonthStamp],
    actual: &[f64],
    predicted: &[f64],
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["date", "actual", "predicted"])?;
    let skip = dates.len().saturating_sub(predicted.len());
    for (i, (date, a)) in dates.iter().zip(actual).enumerate() {
        let p = if i < skip {
            String::new()
        } else {
            format_float(predicted[i - skip])
        };
        w.write_record([date.to_string(), format_float(*a), p])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<String>,
    pub cells: usize,
    pub failed_cells: usize,
    pub best: Vec<(Criterion, Vec<BestCell>)>,
}

/// Writes `grid.csv`, fitted and forecast series for the best-out-of-sample-R²
/// cell of each method, `correlation.csv` when defined, and `manifest.json`.
pub fn emit_reports(result: &GridResult, out_dir: impl AsRef<Path>) -> Result<Manifest> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = vec!["grid.csv".to_string()];
    write_grid_csv(result, &dir.join("grid.csv"))?;

    let mut best = Vec::new();
    if let Ok(picks) = select_best(result, Criterion::OutSampleR2) {
        for pick in &picks {
            let o = result.cells[pick.ordinal]
                .ok()
                .expect("selected cells succeeded");
            let fitted = format!("series_{}_fitted.csv", pick.method);
            write_series_csv(
                &dir.join(&fitted),
                &result.train_dates,
                &result.train_actual,
                &o.fitted,
            )?;
            let forecast = format!("series_{}_forecast.csv", pick.method);
            write_series_csv(
                &dir.join(&forecast),
                &result.test_dates,
                &result.test_actual,
                &o.forecast,
            )?;
            files.push(fitted);
            files.push(forecast);
        }
        for criterion in Criterion::ALL {
            best.push((criterion, select_best(result, criterion)?));
        }
    }

    if let Some((names, corr)) = &result.correlation {
        let path = dir.join("correlation.csv");
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        write_correlation_csv(BufWriter::new(file), &names, corr)?;
        files.push("correlation.csv".into());
    }

    files.push("manifest.json".into());
    let manifest = Manifest {
        files,
        cells: result.cells.len(),
        failed_cells: result.failed_count(),
        best,
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
