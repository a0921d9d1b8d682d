//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use alle_core::baselines::SvrParams;
use alle_core::dataset::{
    self, default_sigma, export_sample_set, ingest_sample_set, read_recording_dir, smooth,
    write_recording, RecordingMeta, SampleSet, SensorId, StateKind, SENSOR_COUNT,
};
use alle_core::error::{Error, Result};
use alle_core::evaluate::{compare_families, estimate, EvalReport};
use alle_core::forest::{permutation_importance, Forest};
use alle_core::model::{FitParams, ModelFamily, TrainedModel};
use alle_core::sensitivity::{analyze, m_sweep, Criterion, SensitivityReport};
use alle_core::synthgen::{generate, GeneratorConfig};

use crate::report::{fmt4, write_csv, write_json, Report};
use crate::{Command, InputArgs, ModelArgs};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate { config, out } => cmd_generate(&config, &out),
        Command::Preprocess { input, out } => cmd_preprocess(&input, &out),
        Command::Sensitivity {
            input,
            criterion,
            out,
        } => cmd_sensitivity(&input, &criterion, &out),
        Command::Train {
            input,
            family,
            sensors,
            ordering,
            seed,
            out,
            model,
        } => cmd_train(&input, &family, &sensors, &ordering, seed, &out, &model),
        Command::Importance {
            model,
            input,
            seed,
            out,
        } => cmd_importance(&model, &input, seed, &out),
        Command::Sweep {
            input,
            family,
            ordering,
            seed,
            out,
            model,
        } => cmd_sweep(&input, &family, &ordering, seed, &out, &model),
        Command::Estimate {
            input,
            family,
            fraction,
            sensors,
            ordering,
            seed,
            out,
            model,
        } => cmd_estimate(
            &input, &family, fraction, &sensors, &ordering, seed, &out, &model,
        ),
        Command::Compare {
            input,
            fraction,
            seed,
            out,
            model,
        } => cmd_compare(&input, fraction, seed, &out, &model),
    }
}

// ---------------------------------------------------------------------------
// shared input handling
// ---------------------------------------------------------------------------

/// Resolved smoothing/assembly settings, echoed into reports.
#[derive(Serialize, Clone)]
struct InputEcho {
    input: String,
    window: usize,
    sigma: f64,
    per_recording: usize,
}

fn input_echo(args: &InputArgs) -> InputEcho {
    InputEcho {
        input: args.input.display().to_string(),
        window: args.window,
        sigma: args.sigma.unwrap_or_else(|| default_sigma(args.window)),
        per_recording: args.per_recording,
    }
}

/// Detects the state kind of a recording directory from the first sidecar.
fn detect_state(dir: &Path) -> Result<StateKind> {
    let mut sidecars: Vec<PathBuf> = fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.to_string_lossy().ends_with(".meta.json"))
        .collect();
    sidecars.sort();
    let first = sidecars.first().ok_or_else(|| Error::Schema {
        path: dir.display().to_string(),
        message: "no recording sidecars (*.meta.json) found".to_owned(),
    })?;
    let meta: RecordingMeta = serde_json::from_str(&fs::read_to_string(first)?)?;
    StateKind::from_code(&meta.state_kind)
}

/// Loads a sample set from a CSV file, a directory holding `sample_set.csv`,
/// or a directory of recordings (smoothed and assembled on the fly).
fn load_sample_set(args: &InputArgs) -> Result<SampleSet> {
    let path = &args.input;
    if path.is_file() {
        return ingest_sample_set(path);
    }
    if !path.is_dir() {
        return Err(Error::Schema {
            path: path.display().to_string(),
            message: "input path does not exist".to_owned(),
        });
    }
    let set_csv = path.join("sample_set.csv");
    if set_csv.is_file() {
        return ingest_sample_set(&set_csv);
    }
    let state = detect_state(path)?;
    let recordings = read_recording_dir(path, state)?;
    let sigma = args.sigma.unwrap_or_else(|| default_sigma(args.window));
    let smoothed: Result<Vec<_>> = recordings
        .iter()
        .map(|r| smooth(r, args.window, sigma))
        .collect();
    dataset::assemble(&smoothed?, args.per_recording)
}

/// Resolves a `--sensors` spec against a criterion ordering: "all", a prefix
/// length, or comma-separated labels.
fn resolve_sensors(
    spec: &str,
    ordering: &[SensorId; SENSOR_COUNT],
) -> Result<Vec<SensorId>> {
    if spec == "all" {
        return Ok(SensorId::all().to_vec());
    }
    if let Ok(prefix) = spec.parse::<usize>() {
        if prefix == 0 || prefix > SENSOR_COUNT {
            return Err(Error::Argument(format!(
                "sensor prefix must lie in 1..={SENSOR_COUNT}, got {prefix}"
            )));
        }
        return Ok(ordering[..prefix].to_vec());
    }
    spec.split(',').map(SensorId::from_label).collect()
}

fn fit_params(args: &ModelArgs) -> FitParams {
    FitParams {
        trees: args.trees,
        m_try: args.m_try,
        bpnn_hidden: args.hidden,
        bpnn_iterations: args.iterations,
        svr: SvrParams {
            c_box: args.svr_c,
            eps_tube: args.svr_eps,
            gamma: args.svr_gamma,
            tol: args.svr_tol,
            max_iter: args.svr_max_iter,
        },
    }
}

#[derive(Serialize, Clone)]
struct ModelEcho {
    family: String,
    sensors: Vec<String>,
    params: FitParams,
}

fn labels(sensors: &[SensorId]) -> Vec<String> {
    sensors.iter().map(|s| s.label().to_owned()).collect()
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct GenerateConfigEcho {
    config_path: String,
    out: String,
    generator: GeneratorConfig,
}

#[derive(Serialize)]
struct GenerateSummary {
    recordings: usize,
    steps_per_recording: usize,
    state: StateKind,
}

fn cmd_generate(config_path: &Path, out: &Path) -> Result<()> {
    let config: GeneratorConfig = serde_json::from_str(&fs::read_to_string(config_path)?)?;
    let (recordings, truth) = generate(&config)?;
    fs::create_dir_all(out)?;
    for rec in &recordings {
        write_recording(out, rec)?;
    }
    let mut truth_text = serde_json::to_string_pretty(&truth)?;
    truth_text.push('\n');
    fs::write(out.join("ground_truth.json"), truth_text)?;

    let report = Report {
        command: "generate",
        config: GenerateConfigEcho {
            config_path: config_path.display().to_string(),
            out: out.display().to_string(),
            generator: config.clone(),
        },
        report: GenerateSummary {
            recordings: recordings.len(),
            steps_per_recording: config.steps_per_recording,
            state: config.state,
        },
    };
    let path = write_json(out, "generate.json", &report)?;
    println!(
        "generated {} recordings for state {} -> {}",
        recordings.len(),
        config.state,
        path.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// preprocess
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct PreprocessSummary {
    state: StateKind,
    samples: usize,
    sample_set: String,
}

fn cmd_preprocess(input: &InputArgs, out: &Path) -> Result<()> {
    let set = load_sample_set(input)?;
    fs::create_dir_all(out)?;
    let csv_path = out.join("sample_set.csv");
    export_sample_set(&csv_path, &set)?;
    let report = Report {
        command: "preprocess",
        config: input_echo(input),
        report: PreprocessSummary {
            state: set.state,
            samples: set.len(),
            sample_set: csv_path.display().to_string(),
        },
    };
    write_json(out, "preprocess.json", &report)?;
    println!(
        "assembled {} samples for state {} -> {}",
        set.len(),
        set.state,
        csv_path.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// sensitivity
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SensitivityConfigEcho {
    #[serde(flatten)]
    input: InputEcho,
    criterion: String,
    out: String,
}

fn cmd_sensitivity(input: &InputArgs, criterion: &str, out: &Path) -> Result<()> {
    let chosen = Criterion::from_code(criterion)?;
    let set = load_sample_set(input)?;
    let report = analyze(&set, chosen)?;

    // Reports land on disk before any chatty output so a closed pipe can
    // never truncate the artifacts.
    let envelope = Report {
        command: "sensitivity",
        config: SensitivityConfigEcho {
            input: input_echo(input),
            criterion: criterion.to_owned(),
            out: out.display().to_string(),
        },
        report: &report,
    };
    let path = write_json(out, "sensitivity.json", &envelope)?;

    print_sensitivity_summary(&report, set.state);
    println!("report -> {}", path.display());
    Ok(())
}

fn print_sensitivity_summary(report: &SensitivityReport, state: StateKind) {
    println!("state {state}: sensitivity criteria per sensor");
    println!("{:<6} {:>10} {:>10}", "sensor", "c1", "c2");
    for id in SensorId::all() {
        println!(
            "{:<6} {:>10} {:>10}",
            id.label(),
            fmt4(report.c1[id.index()]),
            fmt4(report.c2[id.index()])
        );
    }
    let fmt_order =
        |o: &[SensorId; SENSOR_COUNT]| o.iter().map(|s| s.label()).collect::<Vec<_>>().join(", ");
    println!("order by c1: {}", fmt_order(&report.order_c1));
    println!("order by c2: {}", fmt_order(&report.order_c2));
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

/// Versioned model file; prediction replays bit-exactly after reload.
#[derive(Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub state: StateKind,
    pub seed: u64,
    pub model: TrainedModel,
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct TrainConfigEcho {
    #[serde(flatten)]
    input: InputEcho,
    #[serde(flatten)]
    model: ModelEcho,
    ordering: String,
    seed: u64,
    out: String,
}

#[derive(Serialize)]
struct TrainSummary {
    state: StateKind,
    samples: usize,
    train_mae: f64,
    train_r2: f64,
    model_file: String,
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    input: &InputArgs,
    family: &str,
    sensors_spec: &str,
    ordering: &str,
    seed: u64,
    out: &Path,
    model_args: &ModelArgs,
) -> Result<()> {
    let family = ModelFamily::from_code(family)?;
    let set = load_sample_set(input)?;
    let criterion = Criterion::from_code(ordering)?;
    let order = *analyze(&set, criterion)?.ordering(criterion);
    let sensors = resolve_sensors(sensors_spec, &order)?;
    let params = fit_params(model_args);

    let model = TrainedModel::fit(family, &set, &sensors, &params, seed)?;
    let preds = model.predict_set(&set)?;
    let labels_vec = set.labels();
    let train_mae = alle_core::evaluate::mae(&preds, &labels_vec)?;
    let train_r2 = alle_core::evaluate::r_squared(&preds, &labels_vec)?;

    fs::create_dir_all(out)?;
    let model_path = out.join("model.json");
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        state: set.state,
        seed,
        model,
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    fs::write(&model_path, text)?;

    let report = Report {
        command: "train",
        config: TrainConfigEcho {
            input: input_echo(input),
            model: ModelEcho {
                family: family.code().to_owned(),
                sensors: labels(&sensors),
                params,
            },
            ordering: ordering.to_owned(),
            seed,
            out: out.display().to_string(),
        },
        report: TrainSummary {
            state: set.state,
            samples: set.len(),
            train_mae,
            train_r2,
            model_file: model_path.display().to_string(),
        },
    };
    write_json(out, "train.json", &report)?;
    println!(
        "trained {} on {} samples: training MAE {} {}, R2 {}",
        family,
        set.len(),
        fmt4(train_mae),
        set.state.unit(),
        fmt4(train_r2)
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// importance
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ImportanceConfigEcho {
    model: String,
    #[serde(flatten)]
    input: InputEcho,
    seed: u64,
    out: String,
}

fn load_forest(path: &Path) -> Result<(Forest, StateKind)> {
    let file: ModelFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::Schema {
            path: path.display().to_string(),
            message: format!("unsupported model format version {}", file.format_version),
        });
    }
    match file.model {
        TrainedModel::Rf(forest) => Ok((forest, file.state)),
        other => Err(Error::Argument(format!(
            "importance requires a random-forest model, found {}",
            other.family()
        ))),
    }
}

fn cmd_importance(model_path: &Path, input: &InputArgs, seed: u64, out: &Path) -> Result<()> {
    let (forest, state) = load_forest(model_path)?;
    let set = load_sample_set(input)?;
    if set.state != state {
        return Err(Error::StateMismatch {
            expected: state.code().to_owned(),
            found: set.state.code().to_owned(),
        });
    }
    if let Some(&max_idx) = forest
        .trees
        .iter()
        .flat_map(|t| t.bootstrap.iter())
        .max()
    {
        if max_idx >= set.len() {
            return Err(Error::Argument(format!(
                "model was trained on a larger set (index {max_idx}) than the input ({} samples); \
                 importance must use the training set",
                set.len()
            )));
        }
    }
    let report = permutation_importance(&forest, &set, seed)?;

    let envelope = Report {
        command: "importance",
        config: ImportanceConfigEcho {
            model: model_path.display().to_string(),
            input: input_echo(input),
            seed,
            out: out.display().to_string(),
        },
        report: &report,
    };
    let path = write_json(out, "importance.json", &envelope)?;

    println!("permutation importance (ranked by magnitude):");
    for id in &report.ranking {
        let k = report
            .sensors
            .iter()
            .position(|s| s == id)
            .expect("ranking covers the model sensors");
        println!("{:<6} I = {}", id.label(), fmt4(report.importance[k]));
    }
    println!("report -> {}", path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SweepConfigEcho {
    #[serde(flatten)]
    input: InputEcho,
    family: String,
    ordering: String,
    seed: u64,
    out: String,
    params: FitParams,
}

fn cmd_sweep(
    input: &InputArgs,
    family: &str,
    ordering: &str,
    seed: u64,
    out: &Path,
    model_args: &ModelArgs,
) -> Result<()> {
    let family = ModelFamily::from_code(family)?;
    let criterion = Criterion::from_code(ordering)?;
    let set = load_sample_set(input)?;
    let order = *analyze(&set, criterion)?.ordering(criterion);
    let params = fit_params(model_args);
    let curve = m_sweep(&set, &order, family, &params, seed)?;

    let envelope = Report {
        command: "sweep",
        config: SweepConfigEcho {
            input: input_echo(input),
            family: family.code().to_owned(),
            ordering: ordering.to_owned(),
            seed,
            out: out.display().to_string(),
            params,
        },
        report: &curve,
    };
    let json_path = write_json(out, "sweep.json", &envelope)?;
    write_csv(out, "sweep_curve.csv", &curve.to_csv())?;

    println!(
        "state {}: {} accuracy along the {} ordering",
        set.state,
        family,
        criterion.code()
    );
    for m in 1..=SENSOR_COUNT {
        println!(
            "M={m}: R2 {}  MAE {}",
            fmt4(curve.r2[m - 1]),
            fmt4(curve.mae[m - 1])
        );
    }
    println!("plateau sensor count M_r = {}", curve.m_r);
    println!("report -> {}", json_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct EstimateConfigEcho {
    #[serde(flatten)]
    input: InputEcho,
    #[serde(flatten)]
    model: ModelEcho,
    ordering: String,
    fraction: f64,
    seed: u64,
    out: String,
}

#[allow(clippy::too_many_arguments)]
fn cmd_estimate(
    input: &InputArgs,
    family: &str,
    fraction: f64,
    sensors_spec: &str,
    ordering: &str,
    seed: u64,
    out: &Path,
    model_args: &ModelArgs,
) -> Result<()> {
    let family = ModelFamily::from_code(family)?;
    let criterion = Criterion::from_code(ordering)?;
    let set = load_sample_set(input)?;
    let order = *analyze(&set, criterion)?.ordering(criterion);
    let sensors = resolve_sensors(sensors_spec, &order)?;
    let params = fit_params(model_args);

    let (train, test) = dataset::split(&set, fraction, seed)?;
    let report = estimate(&train, &test, family, &sensors, &params, seed)?;

    let envelope = Report {
        command: "estimate",
        config: EstimateConfigEcho {
            input: input_echo(input),
            model: ModelEcho {
                family: family.code().to_owned(),
                sensors: labels(&sensors),
                params,
            },
            ordering: ordering.to_owned(),
            fraction,
            seed,
            out: out.display().to_string(),
        },
        report: &report,
    };
    let path = write_json(out, "estimate.json", &envelope)?;

    print_estimate_summary(&report);
    println!("report -> {}", path.display());
    Ok(())
}

fn print_estimate_summary(report: &EvalReport) {
    let unit = report.state.unit();
    println!(
        "{} with M={} sensors: test MAE {} {}, test R2 {} (train MAE {}, train R2 {})",
        report.family,
        report.m_used,
        fmt4(report.test_mae),
        unit,
        fmt4(report.test_r2),
        fmt4(report.train_mae),
        fmt4(report.train_r2)
    );
    for p in &report.per_parameter_mae {
        println!(
            "  {} = {:<8}: test MAE {} {} ({} samples)",
            report.state,
            p.parameter,
            fmt4(p.mae),
            unit,
            p.count
        );
    }
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CompareConfigEcho {
    #[serde(flatten)]
    input: InputEcho,
    fraction: f64,
    seed: u64,
    out: String,
    params: FitParams,
}

fn cmd_compare(
    input: &InputArgs,
    fraction: f64,
    seed: u64,
    out: &Path,
    model_args: &ModelArgs,
) -> Result<()> {
    let set = load_sample_set(input)?;
    let sens = analyze(&set, Criterion::C2)?;
    let params = fit_params(model_args);
    let matrix = compare_families(
        &set,
        &sens.order_c1,
        &sens.order_c2,
        &params,
        fraction,
        seed,
    )?;

    let envelope = Report {
        command: "compare",
        config: CompareConfigEcho {
            input: input_echo(input),
            fraction,
            seed,
            out: out.display().to_string(),
            params,
        },
        report: &matrix,
    };
    let json_path = write_json(out, "compare.json", &envelope)?;
    write_csv(out, "compare.csv", &matrix.to_csv())?;

    println!("best (R2, MAE, M) per family for state {}:", set.state);
    for best in &matrix.best {
        println!(
            "{:<5} via {}: {}",
            best.family.code(),
            best.ordering.code(),
            best.render(set.state)
        );
    }
    let failures = matrix.cells.iter().filter(|c| c.failure.is_some()).count();
    if failures > 0 {
        println!("{failures} grid cells failed; see the report for details");
    }
    println!("report -> {}", json_path.display());
    Ok(())
}
