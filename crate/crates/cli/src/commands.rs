use std::fs;
use std::io::Write;
use std::path::Path;

use log::info;
use thiserror::Error;

use tramdag::causal::{self, CausalError, DoAssignment};
use tramdag::dgp::{DgpError, DgpPreset, Intervention};
use tramdag::evalmetrics::{self, EvalError, PlotData};
use tramdag::experiments::{self, Experiment, ExperimentConfig, ExperimentError};
use tramdag::graph::{parse_dag_spec, DagError};
use tramdag::model::{fit, DataError, Dataset, ModelError, TrainConfig, TramDag};

use crate::args::{
    AssignedValue, Assignment, CfArgs, Command, CoefArgs, CurveArgs, DgpArgs, DoArgs, EvalArgs, FitArgs,
    ReproduceArgs, SampleArgs,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Dag(#[from] DagError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Causal(#[from] CausalError),
    #[error(transparent)]
    Dgp(#[from] DgpError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn write(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn load_model(path: &Path) -> Result<TramDag, CliError> {
    let text = read(path)?;
    Ok(TramDag::from_json_str(&text)?)
}

fn load_data(path: &Path) -> Result<Dataset, CliError> {
    Ok(Dataset::read_csv(read(path)?.as_bytes())?)
}

fn numeric_assignment(set: &[Assignment]) -> Result<DoAssignment, CliError> {
    let mut out = DoAssignment::new();
    for a in set {
        match a.value {
            AssignedValue::Number(v) => {
                out.set(&a.node, v);
            }
            AssignedValue::Alpha => return Err(CliError::Usage(format!("`{}=alpha` needs --alpha-grid", a.node))),
        }
    }
    Ok(out)
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Dgp(a) => dgp(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Sample(a) => sample(a),
        Command::Do(a) => do_cmd(a),
        Command::Cf(a) => cf(a),
        Command::Coef(a) => coef(a),
        Command::Curve(a) => curve(a),
        Command::Eval(a) => eval(a),
        Command::Reproduce(a) => reproduce(a),
    }
}

fn dgp(a: DgpArgs) -> Result<(), CliError> {
    let mut preset = DgpPreset::from_name(&a.preset)?;
    for (k, v) in &a.params {
        preset = preset.with_param(k, *v)?;
    }
    let intervention = if let Some((node, delta)) = &a.shift {
        Intervention::Shift { node: preset.index_of(node)?, delta: *delta }
    } else if !a.set.is_empty() {
        let assign = numeric_assignment(&a.set)?;
        Intervention::Do(
            assign.0.iter().map(|(k, v)| Ok((preset.index_of(k)?, *v))).collect::<Result<_, DgpError>>()?,
        )
    } else {
        Intervention::Observational
    };
    let data = preset.generate(a.n, a.seed.seed, &intervention)?;
    let mut header = preset.header_lines(a.n, a.seed.seed);
    if intervention != Intervention::Observational {
        header.push(format!("intervention {intervention:?}"));
    }
    let mut buf = Vec::new();
    data.write_csv(&mut buf, &header)?;
    write(&a.out, &buf)
}

fn fit_cmd(a: FitArgs) -> Result<(), CliError> {
    let spec = parse_dag_spec(&read(&a.dag)?)?;
    let data = load_data(&a.data)?;
    let cfg = TrainConfig {
        epochs: a.epochs,
        learning_rate: a.lr,
        batch_size: a.batch_size,
        seed: a.seed.seed,
        ..TrainConfig::default()
    };
    let (model, history) = fit(&spec, &data, &cfg)?;
    write(&a.out, model.to_json_string().as_bytes())?;
    let history_path = a.history.unwrap_or_else(|| {
        a.out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new(".")).join("history.csv")
    });
    let mut buf = Vec::new();
    history.write_csv(&mut buf)?;
    write(&history_path, &buf)?;
    info!("final mean NLL {:.6}; model written to {}", model.training_meta.final_nll, a.out.display());
    Ok(())
}

fn sample(a: SampleArgs) -> Result<(), CliError> {
    let model = load_model(&a.model)?;
    let s = causal::sample_observational(&model, a.n, a.seed.seed)?;
    let mut buf = Vec::new();
    s.write_csv(&mut buf)?;
    write(&a.out, &buf)
}

fn do_cmd(a: DoArgs) -> Result<(), CliError> {
    let model = load_model(&a.model)?;
    let assign = numeric_assignment(&a.set)?;
    let s = causal::sample_interventional(&model, &assign, a.n, a.seed.seed)?;
    let mut buf = Vec::new();
    s.write_csv(&mut buf)?;
    write(&a.out, &buf)
}

fn observation_row(model: &TramDag, values: &[f64], header: Option<&[String]>) -> Result<Vec<f64>, CliError> {
    let d = model.nodes.len();
    if values.len() != d {
        return Err(CliError::Usage(format!("--obs has {} values, the model has {d} nodes", values.len())));
    }
    let names: Vec<String> = match header {
        Some(h) => {
            if h.len() != d {
                return Err(CliError::Usage(format!("--obs-header has {} names, expected {d}", h.len())));
            }
            h.to_vec()
        }
        None => model.spec.topological_order().iter().map(|&j| model.nodes[j].name.clone()).collect(),
    };
    let mut row = vec![f64::NAN; d];
    for (name, v) in names.iter().zip(values) {
        let j = model.spec.index_of(name).ok_or_else(|| CliError::Usage(format!("unknown node `{name}` in --obs-header")))?;
        row[j] = *v;
    }
    Ok(row)
}

fn cf(a: CfArgs) -> Result<(), CliError> {
    let model = load_model(&a.model)?;
    let obs = observation_row(&model, &a.obs, a.obs_header.as_deref())?;
    let sweeps: Vec<&Assignment> = a.set.iter().filter(|s| s.value == AssignedValue::Alpha).collect();
    let alphas: Vec<Option<f64>> = match (sweeps.is_empty(), a.alpha_grid) {
        (true, _) => vec![None],
        (false, Some(g)) => g.points().into_iter().map(Some).collect(),
        (false, None) => return Err(CliError::Usage("`=alpha` assignments need --alpha-grid".into())),
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = if sweeps.is_empty() { vec![] } else { vec!["alpha".into()] };
    header.extend(model.node_names());
    w.write_record(&header)?;
    for alpha in alphas {
        let mut assign = DoAssignment::new();
        for s in &a.set {
            let v = match s.value {
                AssignedValue::Number(v) => v,
                AssignedValue::Alpha => alpha.expect("grid present"),
            };
            assign.set(&s.node, v);
        }
        let row = causal::counterfactual(&model, &obs, &assign)?;
        let mut rec: Vec<String> = alpha.map(|v| v.to_string()).into_iter().collect();
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    match &a.out {
        Some(p) => write(p, &bytes),
        None => {
            std::io::stdout().write_all(&bytes).map_err(|source| CliError::Io { path: "stdout".into(), source })
        }
    }
}

fn coef(a: CoefArgs) -> Result<(), CliError> {
    let model = load_model(&a.model)?;
    let coefs = model.extract_coefficients();
    println!("{:<12} {:<12} {:>12} {:>12}", "parent", "child", "beta", "OR");
    for ((p, c), beta) in &coefs {
        println!("{p:<12} {c:<12} {beta:>12.6} {:>12.6}", causal::predicted_odds_ratio(*beta));
    }
    Ok(())
}

fn curve(a: CurveArgs) -> Result<(), CliError> {
    let model = load_model(&a.model)?;
    let grid = a.grid.points();
    let values = model.extract_shift_curve(&a.edge.0, &a.edge.1, &grid)?;
    let csv = evalmetrics::export_plot_data(&PlotData::ShiftCurve { grid: &grid, model: &values, truth: None })?;
    match &a.out {
        Some(p) => write(p, csv.as_bytes()),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn eval(a: EvalArgs) -> Result<(), CliError> {
    let da = load_data(&a.a)?;
    let db = load_data(&a.b)?;
    let spec = match &a.dag {
        Some(p) => Some(parse_dag_spec(&read(p)?)?),
        None => None,
    };
    let report = evalmetrics::marginal_report(&da, &db, spec.as_ref())?;
    let csv = report.to_csv();
    match &a.report {
        Some(p) => write(p, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    for e in &report.entries {
        info!("{} {} = {:.4}", e.node, e.metric, e.value);
    }
    Ok(())
}

fn reproduce(a: ReproduceArgs) -> Result<(), CliError> {
    let exp: Experiment = a.experiment.parse()?;
    let cfg = ExperimentConfig {
        n_train: a.n_train,
        n_eval: a.n_eval,
        train: TrainConfig { epochs: a.epochs, seed: a.seed, ..TrainConfig::default() },
    };
    let report = experiments::run_experiment(exp, &cfg)?;
    let dir = a.out_dir.unwrap_or_else(|| Path::new("reproduce").join(exp.name()));
    fs::create_dir_all(&dir).map_err(|source| CliError::Io { path: dir.display().to_string(), source })?;
    for (name, csv) in &report.artifacts {
        write(&dir.join(name), csv.as_bytes())?;
    }
    let summary = report.summary();
    write(&dir.join("summary.txt"), summary.as_bytes())?;
    print!("{summary}");
    Ok(())
}
