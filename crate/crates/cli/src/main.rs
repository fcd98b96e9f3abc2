use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use oilcast::arima::{acf, arima_fit, difference, pacf, ArimaModel, ArimaOrder};
use oilcast::dataset::{
    apply_normalization, category_counts, check_cardinality, correlation_matrix, default_schema,
    extract_xy, fit_normalization, load_csv, load_schema, split, synthetic_linear_frame,
    write_correlation_csv, write_frame_csv, MonthStamp, NormalizationParams, SplitSpec,
    SyntheticSpec, TimeSeriesFrame, VariableSpec,
};
use oilcast::evalkit::{dm_test, EvalReport};
use oilcast::ffnet::{BatchMode, FFNetConfig, FFNetModel};
use oilcast::fmt::{format_float, to_json_17};
use oilcast::harness::{
    emit_reports, mean_generalization_by_method, run_grid, select_best, Criterion, ExperimentGrid,
};
use oilcast::par::{threads_from_env, with_threads};
use oilcast::ridge::{ridge_fit, RidgeModel};

#[derive(Parser)]
#[command(
    name = "oilcast",
    version,
    about = "Monthly price forecasting benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct DataArgs {
    /// Monthly CSV: `date` then one column per schema variable.
    #[arg(long)]
    data: PathBuf,
    /// Schema JSON; the bundled thirteen-variable layout when omitted.
    #[arg(long)]
    schema: Option<PathBuf>,
}

impl DataArgs {
    fn load(&self) -> Result<TimeSeriesFrame> {
        let schema = match &self.schema {
            Some(p) => load_schema(p)?,
            None => default_schema(),
        };
        Ok(load_csv(&self.data, &schema)?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    Nn,
    Ridge,
    Arima,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a dataset and print a summary.
    Ingest {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Pearson correlation matrix of all columns.
    Corr {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// ACF and PACF of one column after differencing.
    Acf {
        #[command(flatten)]
        data: DataArgs,
        /// Column name; the target when omitted.
        #[arg(long)]
        column: Option<String>,
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=2))]
        diff: u8,
        #[arg(long, default_value_t = 24)]
        max_lag: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit one model on the training rows and write it as JSON.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum)]
        model: ModelKind,
        /// First month of the test period (YYYY-MM); the last 16 rows when omitted.
        #[arg(long)]
        split: Option<MonthStamp>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.0001)]
        lr: f64,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long)]
        full_batch: bool,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        /// ARIMA order as p,d,q.
        #[arg(long, default_value = "1,1,2")]
        order: String,
        #[arg(long, default_value_t = 2018)]
        seed: u64,
    },
    /// Predict with a saved model file.
    Forecast {
        #[arg(long)]
        model_file: PathBuf,
        /// Rows to predict for network and ridge models.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Predict only rows from this month on.
        #[arg(long)]
        split: Option<MonthStamp>,
        /// Steps ahead for ARIMA models.
        #[arg(long, default_value_t = 16)]
        horizon: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a predictions CSV with `actual` and `predicted` columns.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        /// Regressor count; reports adjusted R² as an in-sample fit when given.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diebold-Mariano test on two forecast-error files.
    Dm {
        #[arg(long)]
        errors_a: PathBuf,
        #[arg(long)]
        errors_b: PathBuf,
        #[arg(long, default_value_t = 1)]
        h: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment grid and write the reports.
    Grid {
        /// grid.json; the canonical 18-cell grid when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        split: Option<MonthStamp>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the grid seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the grid's timing repetitions.
        #[arg(long)]
        repetitions: Option<usize>,
    },
    /// Write a noiseless linear dataset and its schema.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        schema_out: PathBuf,
        #[arg(long, default_value_t = 388)]
        rows: usize,
        #[arg(long, default_value_t = 372)]
        train_rows: usize,
        #[arg(long, default_value_t = 12)]
        inputs: usize,
        #[arg(long, default_value_t = 2018)]
        seed: u64,
    },
}

/// Saved model with what is needed to apply it to new rows.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    #[serde(flatten)]
    model: SavedModel,
    /// Input ranges from the training rows (network and ridge).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    normalization: Option<NormalizationParams>,
    /// Last training month.
    last_date: MonthStamp,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "lowercase")]
enum SavedModel {
    Nn(FFNetModel),
    Ridge(RidgeModel),
    Arima(ArimaModel),
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit_text(out: Option<&Path>, text: &str) -> Result<()> {
    let mut w = sink(out)?;
    writeln!(w, "{text}")?;
    w.flush()?;
    Ok(())
}

fn split_spec(frame: &TimeSeriesFrame, at: Option<MonthStamp>) -> Result<SplitSpec> {
    let test_start = match at {
        Some(m) => m,
        None if frame.len() > 18 => frame.dates()[frame.len() - 16],
        None => bail!("frame has {} rows; pass --split explicitly", frame.len()),
    };
    Ok(SplitSpec { test_start })
}

fn parse_order(text: &str) -> Result<ArimaOrder> {
    let parts: Vec<usize> = text
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("order {text:?} is not p,d,q"))?;
    let [p, d, q] = parts[..] else {
        bail!("order {text:?} is not p,d,q");
    };
    let order = ArimaOrder::new(p, d, q);
    order.validate()?;
    Ok(order)
}

/// One number per line; a non-numeric first line is taken as a header.
fn read_numbers(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let field = line.split(',').next_back().unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => {}
            Err(_) => bail!(
                "{}: line {} is not a number: {field:?}",
                path.display(),
                i + 1
            ),
        }
    }
    Ok(out)
}

fn ingest(data: &DataArgs) -> Result<()> {
    let frame = data.load()?;
    let target = frame.target();
    let (lo, hi) = target
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    println!("rows: {}", frame.len());
    println!(
        "range: {} .. {}",
        frame.dates()[0],
        frame.dates()[frame.len() - 1]
    );
    println!(
        "target: {} (min {lo}, max {hi})",
        frame.columns()[frame.target_index()].name
    );
    for (category, count) in category_counts(frame.columns()) {
        println!(
            "{}: {count}",
            serde_json::to_value(category)?.as_str().unwrap_or("?")
        );
    }
    if let Err(e) = check_cardinality(frame.columns(), frame.columns().len() - 1) {
        eprintln!("warning: {e}");
    }
    Ok(())
}

fn corr(data: &DataArgs, out: Option<&Path>) -> Result<()> {
    let frame = data.load()?;
    let m = correlation_matrix(&frame)?;
    write_correlation_csv(sink(out)?, &frame.column_names(), &m)?;
    Ok(())
}

fn correlogram(
    data: &DataArgs,
    column: Option<&str>,
    d: usize,
    max_lag: usize,
    out: Option<&Path>,
) -> Result<()> {
    let frame = data.load()?;
    let col = match column {
        Some(name) => frame
            .column_names()
            .iter()
            .position(|n| *n == name)
            .with_context(|| format!("no column named {name:?}"))?,
        None => frame.target_index(),
    };
    let series = difference(&frame.column_values(col), d)?;
    let a = acf(&series, max_lag)?;
    let p = pacf(&series, max_lag)?;
    let mut w = csv::Writer::from_writer(sink(out)?);
    w.write_record(["lag", "acf", "pacf", "conf_limit"])?;
    for (x, y) in a.iter().zip(&p) {
        w.write_record([
            x.lag.to_string(),
            format_float(x.value),
            format_float(y.value),
            format_float(x.conf_limit),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn train(
    data: &DataArgs,
    kind: ModelKind,
    at: Option<MonthStamp>,
    out: &Path,
    lr: f64,
    epochs: usize,
    full_batch: bool,
    lambda: f64,
    order: &str,
    seed: u64,
) -> Result<()> {
    let frame = data.load()?;
    let (train, _) = split(&frame, split_spec(&frame, at)?)?;
    let last_date = train.dates()[train.len() - 1];
    let (file, report) = match kind {
        ModelKind::Arima => {
            let order = parse_order(order)?;
            let y = train.target();
            let model = arima_fit(&y, order)?;
            let fitted = model.fitted(&y)?;
            let report =
                EvalReport::in_sample(&y[y.len() - fitted.len()..], &fitted, order.p + order.q)?;
            (SavedModel::Arima(model), report)
        }
        ModelKind::Nn | ModelKind::Ridge => {
            let norm = fit_normalization(&train)?;
            let (x, y) = extract_xy(&apply_normalization(&train, &norm)?);
            let (saved, fitted) = if let ModelKind::Nn = kind {
                let mut config = FFNetConfig::canonical(lr, epochs, seed);
                config.input_dim = x.cols();
                if full_batch {
                    config.batch_mode = BatchMode::FullBatch;
                }
                let model = FFNetModel::init(config)?.train(&x, &y)?;
                let fitted = model.predict(&x)?;
                (SavedModel::Nn(model), fitted)
            } else {
                let model = ridge_fit(&x, &y, lambda)?;
                let fitted = model.predict(&x)?;
                (SavedModel::Ridge(model), fitted)
            };
            let report = EvalReport::in_sample(&y, &fitted, x.cols())?;
            return finish_train(out, saved, Some(norm), last_date, report);
        }
    };
    finish_train(out, file, None, last_date, report)
}

fn finish_train(
    out: &Path,
    model: SavedModel,
    normalization: Option<NormalizationParams>,
    last_date: MonthStamp,
    report: EvalReport,
) -> Result<()> {
    let file = ModelFile {
        model,
        normalization,
        last_date,
    };
    fs::write(out, to_json_17(&file)?).with_context(|| format!("writing {}", out.display()))?;
    println!("{}", report.to_json()?);
    Ok(())
}

fn forecast(
    model_file: &Path,
    data: Option<DataArgs>,
    at: Option<MonthStamp>,
    horizon: usize,
    out: Option<&Path>,
) -> Result<()> {
    let text = fs::read_to_string(model_file)
        .with_context(|| format!("reading {}", model_file.display()))?;
    let file: ModelFile =
        serde_json::from_str(&text).context("model file is not valid JSON for any model kind")?;
    let mut w = csv::Writer::from_writer(sink(out)?);
    w.write_record(["date", "actual", "predicted"])?;
    match &file.model {
        SavedModel::Arima(model) => {
            model.order.validate()?;
            let mut date = file.last_date;
            for v in model.forecast(horizon)? {
                date = date.next();
                w.write_record([date.to_string(), String::new(), format_float(v)])?;
            }
        }
        SavedModel::Nn(_) | SavedModel::Ridge(_) => {
            let Some(args) = data else {
                bail!("network and ridge forecasts need --data");
            };
            let norm = file
                .normalization
                .as_ref()
                .context("model file has no normalization ranges")?;
            let frame = args.load()?;
            let rows = match at {
                Some(at) => split(&frame, SplitSpec { test_start: at })?.1,
                None => frame,
            };
            let (x, y) = extract_xy(&apply_normalization(&rows, norm)?);
            let predicted = match &file.model {
                SavedModel::Nn(m) => {
                    m.validate()?;
                    m.predict(&x)?
                }
                SavedModel::Ridge(m) => m.predict(&x)?,
                SavedModel::Arima(_) => unreachable!(),
            };
            for ((date, a), p) in rows.dates().iter().zip(&y).zip(&predicted) {
                w.write_record([date.to_string(), format_float(*a), format_float(*p)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn evaluate(predictions: &Path, k: Option<usize>, out: Option<&Path>) -> Result<()> {
    let mut rdr = csv::Reader::from_path(predictions)
        .with_context(|| format!("reading {}", predictions.display()))?;
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .with_context(|| format!("no {name:?} column"))
    };
    let (ai, pi) = (col("actual")?, col("predicted")?);
    let (mut actual, mut predicted) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let (a, p) = (
            rec.get(ai).unwrap_or("").trim(),
            rec.get(pi).unwrap_or("").trim(),
        );
        if a.is_empty() || p.is_empty() {
            continue;
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .with_context(|| format!("data row {}: {s:?} is not a number", i + 1))
        };
        actual.push(parse(a)?);
        predicted.push(parse(p)?);
    }
    let report = match k {
        Some(k) => EvalReport::in_sample(&actual, &predicted, k)?,
        None => EvalReport::out_of_sample(&actual, &predicted)?,
    };
    emit_text(out, &report.to_json()?)
}

fn dm(a: &Path, b: &Path, h: usize, out: Option<&Path>) -> Result<()> {
    let r = dm_test(&read_numbers(a)?, &read_numbers(b)?, h)?;
    emit_text(out, &r.to_json()?)
}

fn grid(
    spec: Option<&Path>,
    data: &DataArgs,
    at: Option<MonthStamp>,
    out: &Path,
    seed: Option<u64>,
    repetitions: Option<usize>,
) -> Result<()> {
    let mut g = match spec {
        Some(p) => ExperimentGrid::load(p)?,
        None => ExperimentGrid::canonical(oilcast::harness::DEFAULT_GRID_SEED),
    };
    if let Some(s) = seed {
        g.seed = s;
    }
    if let Some(r) = repetitions {
        g.timing_repetitions = r;
        g.validate()?;
    }
    let frame = data.load()?;
    let split_at = split_spec(&frame, at)?;
    let result = with_threads(threads_from_env(), || run_grid(&frame, split_at, &g))?;
    let manifest = emit_reports(&result, out)?;
    println!(
        "cells: {} ({} failed)",
        manifest.cells, manifest.failed_cells
    );
    if let Ok(best) = select_best(&result, Criterion::InSampleError) {
        for b in best.iter().filter(|b| b.rmse_mad_agree == Some(false)) {
            eprintln!(
                "note: RMSE and MAD disagree on the best in-sample {} cell",
                b.method
            );
        }
    }
    for (method, mean) in mean_generalization_by_method(&result) {
        println!("mean generalization {method}: {mean}");
    }
    for f in &manifest.files {
        println!("wrote {}", out.join(f).display());
    }
    Ok(())
}

fn synth(
    out: &Path,
    schema_out: &Path,
    rows: usize,
    train_rows: usize,
    inputs: usize,
    seed: u64,
) -> Result<()> {
    let spec = SyntheticSpec {
        rows,
        inputs,
        train_rows,
        seed,
        ..SyntheticSpec::default()
    };
    let frame = synthetic_linear_frame(&spec)?;
    let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    write_frame_csv(BufWriter::new(file), &frame)?;
    let schema: &[VariableSpec] = frame.columns();
    fs::write(schema_out, serde_json::to_string_pretty(schema)?)
        .with_context(|| format!("writing {}", schema_out.display()))?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { data } => ingest(&data),
        Command::Corr { data, out } => corr(&data, out.as_deref()),
        Command::Acf {
            data,
            column,
            diff,
            max_lag,
            out,
        } => correlogram(
            &data,
            column.as_deref(),
            diff as usize,
            max_lag,
            out.as_deref(),
        ),
        Command::Train {
            data,
            model,
            split,
            out,
            lr,
            epochs,
            full_batch,
            lambda,
            order,
            seed,
        } => train(
            &data, model, split, &out, lr, epochs, full_batch, lambda, &order, seed,
        ),
        Command::Forecast {
            model_file,
            data,
            schema,
            split,
            horizon,
            out,
        } => {
            let data = data.map(|data| DataArgs { data, schema });
            forecast(&model_file, data, split, horizon, out.as_deref())
        }
        Command::Evaluate {
            predictions,
            k,
            out,
        } => evaluate(&predictions, k, out.as_deref()),
        Command::Dm {
            errors_a,
            errors_b,
            h,
            out,
        } => dm(&errors_a, &errors_b, h, out.as_deref()),
        Command::Grid {
            spec,
            data,
            split,
            out,
            seed,
            repetitions,
        } => grid(spec.as_deref(), &data, split, &out, seed, repetitions),
        Command::Synth {
            out,
            schema_out,
            rows,
            train_rows,
            inputs,
            seed,
        } => synth(&out, &schema_out, rows, train_rows, inputs, seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
