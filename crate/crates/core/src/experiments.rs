//! End-to-end experiments: generate data from a preset, fit the matching
//! model and compare its answers with the ground truth.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::causal::{self, ArmNoise, CausalError, DoAssignment};
use crate::dgp::{DgpError, DgpPreset, Intervention, PresetKind};
use crate::evalmetrics::{self, EvalError, PlotData};
use crate::graph::{parse_dag_spec, DagSpec};
use crate::model::{fit, Dataset, History, ModelError, TrainConfig, TramDag};
use crate::transform::quantile_sorted;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Causal(#[from] CausalError),
    #[error(transparent)]
    Dgp(#[from] DgpError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    VacaL1,
    VacaL2,
    CareflL3,
    ContLs,
    ContCs,
    ContMisspec,
    ContSin,
    MixedLs,
    MixedExp,
    OrCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::VacaL1,
        Experiment::VacaL2,
        Experiment::CareflL3,
        Experiment::ContLs,
        Experiment::ContCs,
        Experiment::ContMisspec,
        Experiment::ContSin,
        Experiment::MixedLs,
        Experiment::MixedExp,
        Experiment::OrCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::VacaL1 => "vaca_l1",
            Experiment::VacaL2 => "vaca_l2",
            Experiment::CareflL3 => "carefl_l3",
            Experiment::ContLs => "cont_ls",
            Experiment::ContCs => "cont_cs",
            Experiment::ContMisspec => "cont_misspec",
            Experiment::ContSin => "cont_sin",
            Experiment::MixedLs => "mixed_ls",
            Experiment::MixedExp => "mixed_exp",
            Experiment::OrCheck => "or_check",
        }
    }

    /// Preset the training data comes from.
    pub fn preset(self) -> DgpPreset {
        DgpPreset::new(match self {
            Experiment::VacaL1 | Experiment::VacaL2 => PresetKind::Vaca,
            Experiment::CareflL3 => PresetKind::Carefl,
            Experiment::ContLs | Experiment::ContMisspec => PresetKind::ContLs,
            Experiment::ContCs => PresetKind::ContCs,
            Experiment::ContSin => PresetKind::ContSin,
            Experiment::MixedLs | Experiment::OrCheck => PresetKind::MixedLs,
            Experiment::MixedExp => PresetKind::MixedExp,
        })
    }

    /// Graph of the fitted model.
    pub fn model_dag(self) -> DagSpec {
        match self {
            Experiment::ContMisspec => parse_dag_spec(
                "node X1 continuous\nnode X2 continuous\nnode X3 continuous\n\
                 edge X1 -> X2 : ls\nedge X1 -> X3 : ls\nedge X2 -> X3 : cs\n",
            )
            .expect("valid graph"),
            other => other.preset().model_dag(),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| ExperimentError::UnknownExperiment(s.into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub n_train: usize,
    pub n_eval: usize,
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig { n_train: 40_000, n_eval: 10_000, train: TrainConfig { seed: 1, ..TrainConfig::default() } }
    }
}

/// One measured quantity and its acceptance band.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: String,
    pub pass: bool,
}

impl Check {
    fn within(name: &str, value: f64, target: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold: format!("{target} ± {tol}"),
            pass: (value - target).abs() <= tol,
        }
    }

    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, threshold: format!("≤ {limit}"), pass: value <= limit }
    }

    fn below(name: &str, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, threshold: format!("< {limit}"), pass: value < limit }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {:.6} (want {})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.threshold
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub experiment: Experiment,
    pub checks: Vec<Check>,
    /// Plot-data CSV documents keyed by file name.
    pub artifacts: Vec<(String, String)>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn summary(&self) -> String {
        let mut out = format!("experiment {}\n", self.experiment);
        for c in &self.checks {
            out.push_str(&format!("{c}\n"));
        }
        out.push_str(if self.passed() { "PASS\n" } else { "FAIL\n" });
        out
    }
}

/// Training data plus the fitted model.
#[derive(Debug, Clone)]
pub struct Fitted {
    pub preset: DgpPreset,
    pub data: Dataset,
    pub model: TramDag,
    pub history: History,
}

pub fn fit_experiment(exp: Experiment, cfg: &ExperimentConfig) -> Result<Fitted, ExperimentError> {
    let preset = exp.preset();
    let data = preset.generate(cfg.n_train, cfg.train.seed, &Intervention::Observational)?;
    let (model, history) = fit(&exp.model_dag(), &data, &cfg.train)?;
    Ok(Fitted { preset, data, model, history })
}

pub fn run_experiment(exp: Experiment, cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let fitted = fit_experiment(exp, cfg)?;
    evaluate(exp, &fitted, cfg)
}

/// Seeds for evaluation data, distinct from the training seed.
fn eval_seed(cfg: &ExperimentConfig, k: u64) -> u64 {
    cfg.train.seed.wrapping_mul(1_000).wrapping_add(100 + k)
}

/// 5% and 95% quantiles of a training column.
pub fn central_range(values: &[f64]) -> (f64, f64) {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    (quantile_sorted(&s, 0.05), quantile_sorted(&s, 0.95))
}

/// `n` equispaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn sup_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Grid, centered model curve and centered truth.
pub type CurveComparison = (Vec<f64>, Vec<f64>, Vec<f64>);

/// Centered fitted shift and centered ground truth on the central 90% grid
/// of the parent. Both are centered by their mean over the training values
/// of the parent.
pub fn shift_comparison(fitted: &Fitted, from: &str, to: &str) -> Result<CurveComparison, ExperimentError> {
    let parent = fitted.data.column_by_name(from).expect("preset column");
    let (lo, hi) = central_range(&parent);
    let grid = linspace(lo, hi, 201);
    let model = fitted.model.extract_shift_curve(from, to, &grid)?;
    let offset = parent.iter().map(|&x| fitted.preset.x2_shift(x)).sum::<f64>() / parent.len() as f64;
    let truth = grid.iter().map(|&x| fitted.preset.x2_shift(x) - offset).collect();
    Ok((grid, model, truth))
}

fn coefficient_checks(fitted: &Fitted, tolerances: &[((&str, &str), f64)]) -> Vec<Check> {
    let est = fitted.model.extract_coefficients();
    let truth = fitted.preset.true_coefficients();
    tolerances
        .iter()
        .map(|&((p, c), tol)| {
            let key = (p.to_string(), c.to_string());
            Check::within(&format!("beta_{p}{c}", p = &p[1..], c = &c[1..]), est[&key], truth[&key], tol)
        })
        .collect()
}

fn coef_artifact(fitted: &Fitted) -> Result<(String, String), ExperimentError> {
    let truth = fitted.preset.true_coefficients();
    let csv = evalmetrics::export_plot_data(&PlotData::CoefHistory { history: &fitted.history, truth: &truth })?;
    Ok(("coef_history.csv".into(), csv))
}

fn ks_checks(model_samples: &Dataset, dgp_samples: &Dataset, spec: &DagSpec, label: &str) -> Result<Vec<Check>, ExperimentError> {
    let report = evalmetrics::marginal_report(dgp_samples, model_samples, Some(spec))?;
    Ok(report
        .entries
        .iter()
        .map(|e| Check::below(&format!("{label} {} {}", e.metric, e.node), e.value, 0.05))
        .collect())
}

/// Counterfactual curve of `target` under `do(node = α)`, model and oracle.
pub fn counterfactual_curve(
    fitted: &Fitted,
    observation: &[f64],
    node: &str,
    target: &str,
    alphas: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), ExperimentError> {
    let j = fitted.model.index_of(node)?;
    let t = fitted.model.index_of(target)?;
    let mut model = Vec::with_capacity(alphas.len());
    let mut oracle = Vec::with_capacity(alphas.len());
    for &a in alphas {
        model.push(causal::counterfactual(&fitted.model, observation, &DoAssignment::single(node, a))?[t]);
        oracle.push(fitted.preset.oracle_counterfactual(observation, &[(j, a)])?[t]);
    }
    Ok((model, oracle))
}

/// Observation used by the counterfactual queries.
pub const CAREFL_OBSERVATION: [f64; 4] = [2.00, 1.50, 0.81, -0.28];

/// `−3, −2.75, …, 3`.
pub fn alpha_grid() -> Vec<f64> {
    (0..=24).map(|i| -3.0 + 0.25 * i as f64).collect()
}

/// Runs the checks of `exp` on an already fitted model.
pub fn evaluate(exp: Experiment, fitted: &Fitted, cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let spec = &fitted.model.spec;
    let n = cfg.n_eval;
    let mut checks = Vec::new();
    let mut artifacts = Vec::new();
    match exp {
        Experiment::VacaL1 | Experiment::MixedLs | Experiment::MixedExp | Experiment::ContMisspec => {
            let samples = causal::sample_observational(&fitted.model, n, eval_seed(cfg, 1))?;
            let fresh = fitted.preset.generate(n, eval_seed(cfg, 2), &Intervention::Observational)?;
            checks.extend(ks_checks(&samples.data, &fresh, spec, "L1")?);
            artifacts.push((
                "pairwise_scatter.csv".into(),
                evalmetrics::export_plot_data(&PlotData::PairwiseScatter {
                    samples: &[("dgp", &fresh), ("model", &samples.data)],
                })?,
            ));
            artifacts.push((
                "marginal_hist.csv".into(),
                evalmetrics::export_plot_data(&PlotData::MarginalHist {
                    samples: &[("dgp", &fresh), ("model", &samples.data)],
                    bins: 0,
                })?,
            ));
            match exp {
                Experiment::MixedLs => {
                    checks.extend(coefficient_checks(
                        fitted,
                        &[(("X1", "X2"), 0.1), (("X1", "X3"), 0.2), (("X2", "X3"), 0.2)],
                    ));
                    artifacts.push(coef_artifact(fitted)?);
                }
                Experiment::MixedExp => {
                    let do_x1 = DoAssignment::single("X1", 0.5);
                    let model_int = causal::sample_interventional(&fitted.model, &do_x1, n, eval_seed(cfg, 3))?;
                    let dgp_int = fitted.preset.generate(n, eval_seed(cfg, 4), &Intervention::Do(vec![(0, 0.5)]))?;
                    checks.extend(ks_checks(&model_int.data, &dgp_int, spec, "L2 do(X1=0.5)")?);
                }
                Experiment::ContMisspec => {
                    let (grid, model, _) = shift_comparison(fitted, "X2", "X3")?;
                    let (slope, intercept) = least_squares(&grid, &model);
                    let line: Vec<f64> = grid.iter().map(|x| intercept + slope * x).collect();
                    checks.push(Check::at_most("CS deviation from linear fit", sup_abs_diff(&model, &line), 0.15));
                    checks.push(Check::within("CS linear slope", slope, 0.3, 0.1));
                    checks.extend(coefficient_checks(fitted, &[(("X1", "X2"), 0.1), (("X1", "X3"), 0.06)]));
                    artifacts.push(shift_artifact(fitted)?);
                }
                _ => {}
            }
        }
        Experiment::VacaL2 => {
            let te = causal::treatment_effect(
                &fitted.model,
                &DoAssignment::single("X2", -3.0),
                &DoAssignment::single("X2", -2.0),
                "X3",
                n,
                eval_seed(cfg, 5),
                ArmNoise::Independent,
            )?;
            checks.push(Check::within("TE do(X2): -3 -> -2 on X3", te.estimate, 0.25, 0.05));
            let at0 = causal::sample_interventional(&fitted.model, &DoAssignment::single("X2", 0.0), n, eval_seed(cfg, 6))?;
            let x3 = at0.column("X3")?;
            checks.push(Check::within("E[X3 | do(X2=0)]", x3.iter().sum::<f64>() / x3.len() as f64, -0.25, 0.05));
            for (k, v) in [-3.0, -2.0, 0.0].into_iter().enumerate() {
                let m = causal::sample_interventional(&fitted.model, &DoAssignment::single("X2", v), n, eval_seed(cfg, 7))?;
                let d = fitted.preset.generate(n, eval_seed(cfg, 8 + k as u64), &Intervention::Do(vec![(1, v)]))?;
                artifacts.push((
                    format!("do_x2_{v}.csv"),
                    evalmetrics::export_plot_data(&PlotData::MarginalHist { samples: &[("dgp", &d), ("model", &m.data)], bins: 0 })?,
                ));
            }
        }
        Experiment::CareflL3 => {
            let obs = CAREFL_OBSERVATION;
            let alphas = alpha_grid();
            for (label, node, target, file) in [("(i)", "X2", "X3", "cf_query_i.csv"), ("(ii)", "X1", "X4", "cf_query_ii.csv")] {
                let (model, oracle) = counterfactual_curve(fitted, &obs, node, target, &alphas)?;
                let (lo, hi) = central_range(&fitted.data.column_by_name(node).expect("column"));
                let errs: Vec<f64> = alphas
                    .iter()
                    .zip(model.iter().zip(&oracle))
                    .filter(|(a, _)| **a >= lo && **a <= hi)
                    .map(|(_, (m, o))| (m - o).abs())
                    .collect();
                let mae = errs.iter().sum::<f64>() / errs.len() as f64;
                checks.push(Check::at_most(&format!("CF {label} MAE over central range"), mae, 0.15));
                let j = fitted.model.index_of(node)?;
                let t = fitted.model.index_of(target)?;
                let same = causal::counterfactual(&fitted.model, &obs, &DoAssignment::single(node, obs[j]))?;
                checks.push(Check::at_most(&format!("CF {label} identity at observed value"), (same[t] - obs[t]).abs(), 1e-6));
                artifacts.push((
                    file.into(),
                    evalmetrics::export_plot_data(&PlotData::CfCurve { alpha: &alphas, model: &model, oracle: &oracle })?,
                ));
            }
        }
        Experiment::ContLs => {
            checks.extend(coefficient_checks(fitted, &[(("X1", "X2"), 0.1), (("X1", "X3"), 0.06), (("X2", "X3"), 0.08)]));
            artifacts.push(coef_artifact(fitted)?);
        }
        Experiment::ContCs => {
            checks.extend(coefficient_checks(fitted, &[(("X1", "X2"), 0.12), (("X1", "X3"), 0.06)]));
            let (_, model, truth) = shift_comparison(fitted, "X2", "X3")?;
            checks.push(Check::at_most("CS sup-norm vs truth", sup_abs_diff(&model, &truth), 0.15));
            artifacts.push(coef_artifact(fitted)?);
            artifacts.push(shift_artifact(fitted)?);
        }
        Experiment::ContSin => {
            let (_, model, truth) = shift_comparison(fitted, "X2", "X3")?;
            checks.push(Check::at_most("CS sup-norm vs truth", sup_abs_diff(&model, &truth), 0.25));
            artifacts.push(shift_artifact(fitted)?);
        }
        Experiment::OrCheck => {
            let beta = fitted.model.extract_coefficients()[&("X1".to_string(), "X2".to_string())];
            let report = odds_ratio_check(&fitted.preset, beta, 40_000, eval_seed(cfg, 20))?;
            checks.push(Check {
                name: format!(
                    "exp(beta_12) = {:.4} inside simulated 95% CI [{:.4}, {:.4}] (OR {:.4}, counts {:?})",
                    report.predicted, report.simulated.lower, report.simulated.upper, report.simulated.estimate, report.simulated.counts
                ),
                value: report.predicted,
                threshold: format!("[{:.4}, {:.4}]", report.simulated.lower, report.simulated.upper),
                pass: report.simulated.contains(report.predicted),
            });
            let reported = causal::odds_ratio_from_counts(5119, 34881, 744, 39256)?;
            checks.push(Check::within("OR from reference counts", reported.estimate, 7.74, 0.01));
            checks.push(Check::within("CI lower from reference counts", reported.lower, 7.16, 0.02));
            checks.push(Check::within("CI upper from reference counts", reported.upper, 8.38, 0.02));
        }
    }
    Ok(ExperimentReport { experiment: exp, checks, artifacts })
}

fn shift_artifact(fitted: &Fitted) -> Result<(String, String), ExperimentError> {
    let (grid, model, truth) = shift_comparison(fitted, "X2", "X3")?;
    let csv = evalmetrics::export_plot_data(&PlotData::ShiftCurve { grid: &grid, model: &model, truth: Some(&truth) })?;
    Ok(("shift_curve.csv".into(), csv))
}

/// Ordinary least squares `y ≈ a + b·x`; returns `(b, a)`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OddsRatioCheck {
    pub predicted: f64,
    pub simulated: causal::OddsRatio,
}

/// Cutoff of the odds-ratio experiment on `X2`.
pub const OR_CUTOFF: f64 = -1.0;

/// Compares `exp(β̂12)` with the odds ratio of `X2 ≤ −1` between DGP data with
/// `X1` raised by one and plain observational DGP data.
pub fn odds_ratio_check(preset: &DgpPreset, beta12: f64, n: usize, seed: u64) -> Result<OddsRatioCheck, ExperimentError> {
    let base = preset.generate(n, seed, &Intervention::Observational)?;
    let shifted = preset.generate(n, seed.wrapping_add(1), &Intervention::Shift { node: 0, delta: 1.0 })?;
    let simulated = causal::odds_ratio_from_samples(&base, &shifted, "X2", OR_CUTOFF)?;
    Ok(OddsRatioCheck { predicted: causal::predicted_odds_ratio(beta12), simulated })
}

/// Per-check summary of several reports keyed by experiment name.
pub fn summarize(reports: &[ExperimentReport]) -> BTreeMap<String, bool> {
    reports.iter().map(|r| (r.experiment.name().to_string(), r.passed())).collect()
}
