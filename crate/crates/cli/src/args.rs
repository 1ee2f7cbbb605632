use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "tramdag", version, about = "Fit transformation-model DAGs and answer causal queries")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset from a synthetic preset.
    Dgp(DgpArgs),
    /// Train a model on a dataset.
    Fit(FitArgs),
    /// Draw observational samples from a model.
    Sample(SampleArgs),
    /// Draw interventional samples from a model.
    Do(DoArgs),
    /// Counterfactual values for one observation.
    Cf(CfArgs),
    /// Print linear-shift coefficients and their odds ratios.
    Coef(CoefArgs),
    /// Evaluate a complex shift on a grid.
    Curve(CurveArgs),
    /// Compare the marginals of two sample files.
    Eval(EvalArgs),
    /// Run an experiment end to end.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    /// Points `start, start + step, …` up to `stop`, which is included when
    /// it lies within half a step of the last point.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 0.5).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(format!("expected start:stop:step, got `{s}`"));
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number"));
    let grid = Grid { start: num(a)?, stop: num(b)?, step: num(c)? };
    if grid.step.is_nan() || grid.step <= 0.0 || !grid.start.is_finite() || !grid.stop.is_finite() {
        return Err("step must be positive and bounds finite".into());
    }
    if grid.stop < grid.start {
        return Err("stop must not be below start".into());
    }
    Ok(grid)
}

/// `NAME=VALUE` where VALUE is a number or the literal `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub node: String,
    pub value: AssignedValue,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AssignedValue {
    Number(f64),
    Alpha,
}

pub fn parse_assignment(s: &str) -> Result<Assignment, String> {
    let (node, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let node = node.trim();
    if node.is_empty() {
        return Err(format!("missing node name in `{s}`"));
    }
    let value = match value.trim() {
        "alpha" => AssignedValue::Alpha,
        v => AssignedValue::Number(v.parse().map_err(|_| format!("`{v}` is not a number"))?),
    };
    Ok(Assignment { node: node.to_string(), value })
}

/// `PARENT-CHILD` or `PARENT->CHILD`.
pub fn parse_edge(s: &str) -> Result<(String, String), String> {
    let (a, b) = s
        .split_once("->")
        .or_else(|| s.split_once('-'))
        .ok_or_else(|| format!("expected PARENT-CHILD, got `{s}`"))?;
    let (a, b) = (a.trim(), b.trim());
    if a.is_empty() || b.is_empty() {
        return Err(format!("expected PARENT-CHILD, got `{s}`"));
    }
    Ok((a.to_string(), b.to_string()))
}

pub fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    Ok((k.trim().to_string(), v.trim().parse().map_err(|_| format!("`{v}` is not a number"))?))
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Random seed; falls back to $TRAMDAG_SEED, then 0.
    #[arg(long, env = "TRAMDAG_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DgpArgs {
    #[arg(long)]
    pub preset: String,
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: PathBuf,
    /// Override a preset coefficient, e.g. `beta13=-0.2`.
    #[arg(long = "param", value_parser = parse_param, allow_hyphen_values = true)]
    pub params: Vec<(String, f64)>,
    /// Generate under `do(NAME=VALUE)`.
    #[arg(long = "set", value_parser = parse_assignment, allow_hyphen_values = true, conflicts_with = "shift")]
    pub set: Vec<Assignment>,
    /// Generate with a node's natural value shifted, e.g. `X1=1`.
    #[arg(long, value_parser = parse_param, allow_hyphen_values = true)]
    pub shift: Option<(String, f64)>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub dag: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 256)]
    pub batch_size: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: PathBuf,
    /// Training history; defaults to `history.csv` next to the model.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DoArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// `NAME=VALUE`; repeat for several nodes.
    #[arg(long = "set", required = true, value_parser = parse_assignment, allow_hyphen_values = true)]
    pub set: Vec<Assignment>,
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CfArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Observed values, comma separated, in topological order (or in the
    /// order given by `--obs-header`).
    #[arg(long, required = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub obs: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub obs_header: Option<Vec<String>>,
    /// `NAME=VALUE` or `NAME=alpha` to sweep the alpha grid.
    #[arg(long = "set", required = true, value_parser = parse_assignment, allow_hyphen_values = true)]
    pub set: Vec<Assignment>,
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pub alpha_grid: Option<Grid>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CoefArgs {
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// `PARENT-CHILD`.
    #[arg(long, value_parser = parse_edge)]
    pub edge: (String, String),
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pub grid: Grid,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Graph naming the ordinal/binary columns (compared by total variation).
    #[arg(long)]
    pub dag: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(long)]
    pub experiment: String,
    /// Directory for plot data and the summary; defaults to
    /// `reproduce/<experiment>`.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 40_000)]
    pub n_train: usize,
    #[arg(long, default_value_t = 10_000)]
    pub n_eval: usize,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    /// Random seed; falls back to $TRAMDAG_SEED, then 1.
    #[arg(long, env = "TRAMDAG_SEED", default_value_t = 1)]
    pub seed: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_stop_within_half_step() {
        let g = parse_grid("-3:3:0.25").unwrap();
        let p = g.points();
        assert_eq!(p.len(), 25);
        assert_eq!(p[0], -3.0);
        assert!((p[24] - 3.0).abs() < 1e-12);
        assert_eq!(parse_grid("0:1:0.3").unwrap().points().len(), 4);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:-1").is_err());
    }

    #[test]
    fn assignments_and_edges() {
        assert_eq!(
            parse_assignment("X2=-3").unwrap(),
            Assignment { node: "X2".into(), value: AssignedValue::Number(-3.0) }
        );
        assert_eq!(parse_assignment("X2=alpha").unwrap().value, AssignedValue::Alpha);
        assert!(parse_assignment("X2").is_err());
        assert_eq!(parse_edge("X2-X3").unwrap(), ("X2".into(), "X3".into()));
        assert_eq!(parse_edge("X2->X3").unwrap(), ("X2".into(), "X3".into()));
    }

    #[test]
    fn cf_command_line_parses() {
        use clap::Parser;
        let cli = Cli::try_parse_from([
            "tramdag", "cf", "--model", "m.json", "--obs", "2.0,1.5,0.81,-0.28", "--set", "X2=alpha",
            "--alpha-grid", "-3:3:0.25",
        ])
        .unwrap();
        let Command::Cf(a) = cli.command else { panic!("wrong subcommand") };
        assert_eq!(a.obs, vec![2.0, 1.5, 0.81, -0.28]);
        assert_eq!(a.alpha_grid.unwrap().points().len(), 25);
        assert_eq!(a.set[0].value, AssignedValue::Alpha);
    }
}
