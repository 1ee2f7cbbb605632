//! Observational, interventional and counterfactual queries on a fitted
//! model, plus odds-ratio utilities.
//!
//! Latent noise for node `j` comes from ChaCha8 stream `j` of the query seed,
//! with row `r` taking the `r`-th draw. An interventional query with the same
//! seed as an observational one therefore reuses the noise of every node it
//! does not pin.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{DataError, Dataset, ModelError, TramDag};
use crate::numeric::logit;
use crate::transform::TransformError;

#[derive(Debug, Error)]
pub enum CausalError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{node}`: level {value} outside 1..={levels}")]
    LevelOutOfRange { node: String, value: f64, levels: usize },
    #[error("node `{node}`: non-finite value {value}")]
    NonFiniteValue { node: String, value: f64 },
    #[error("the intervention assigns no nodes")]
    EmptyAssignment,
    #[error("target `{0}` is intervened on")]
    TargetIntervened(String),
    #[error("counterfactual not identifiable: discrete node `{descendant}` descends from intervened node `{intervened}`")]
    DiscreteCounterfactual { intervened: String, descendant: String },
    #[error("observation is missing a value for `{0}`")]
    MissingValue(String),
    #[error("observation has {found} values, the model has {expected} nodes")]
    ObservationLength { expected: usize, found: usize },
    #[error("odds ratio undefined: zero cell in counts {0:?}")]
    ZeroCell([u64; 4]),
    #[error("sample set is empty")]
    EmptySample,
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Nodes pinned by an intervention, in data units (or levels).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DoAssignment(pub BTreeMap<String, f64>);

impl DoAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(node: &str, value: f64) -> Self {
        let mut d = Self::new();
        d.set(node, value);
        d
    }

    pub fn set(&mut self, node: &str, value: f64) -> &mut Self {
        self.0.insert(node.to_string(), value);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, node: &str) -> bool {
        self.0.contains_key(node)
    }

    /// Node indices and values, checked against the model.
    pub fn resolve(&self, model: &TramDag) -> Result<Vec<(usize, f64)>, CausalError> {
        self.0
            .iter()
            .map(|(name, &v)| {
                let j = model.spec.index_of(name).ok_or_else(|| CausalError::UnknownNode(name.clone()))?;
                if !v.is_finite() {
                    return Err(CausalError::NonFiniteValue { node: name.clone(), value: v });
                }
                if let Some(levels) = model.spec.node(j).kind.levels() {
                    if v.fract() != 0.0 || v < 1.0 || v > levels as f64 {
                        return Err(CausalError::LevelOutOfRange { node: name.clone(), value: v, levels });
                    }
                }
                Ok((j, v))
            })
            .collect()
    }
}

impl fmt::Display for DoAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "do({})", parts.join(", "))
    }
}

/// Latent value recovered for one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseEntry {
    Continuous(f64),
    /// A discrete observation only pins the latent to an interval.
    Interval { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseVector(pub Vec<NoiseEntry>);

#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    Observational,
    Interventional(DoAssignment),
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Observational => f.write_str("observational"),
            Query::Interventional(d) => write!(f, "{d}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub data: Dataset,
    pub seed: u64,
    pub query: Query,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>, CausalError> {
        self.data.column_by_name(name).ok_or_else(|| CausalError::UnknownNode(name.into()))
    }

    /// CSV with `# seed` and `# query` comment lines before the header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CausalError> {
        let meta = [format!("seed {}", self.seed), format!("query {}", self.query)];
        self.data.write_csv(out, &meta)?;
        Ok(())
    }
}

/// How the two arms of [`treatment_effect`] draw their noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArmNoise {
    /// Separate substreams per arm.
    #[default]
    Independent,
    /// Both arms reuse the same noise (common random numbers).
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreatmentEffect {
    /// `E[target | do_b] − E[target | do_a]`.
    pub estimate: f64,
    pub std_error: f64,
    pub mean_a: f64,
    pub mean_b: f64,
}

fn node_streams(seed: u64, d: usize, offset: u64) -> Vec<ChaCha8Rng> {
    (0..d)
        .map(|j| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(offset + j as u64);
            r
        })
        .collect()
}

/// Standard logistic draw by inverse CDF.
pub fn draw_logistic<R: Rng>(rng: &mut R) -> f64 {
    logit(rng.sample(Open01))
}

fn sample_rows(
    model: &TramDag,
    pinned: &[(usize, f64)],
    n: usize,
    seed: u64,
    stream_offset: u64,
) -> Result<Dataset, CausalError> {
    let d = model.nodes.len();
    let order = model.spec.topological_order();
    let mut fixed: Vec<Option<f64>> = vec![None; d];
    for &(j, v) in pinned {
        fixed[j] = Some(v);
    }
    let mut streams = node_streams(seed, d, stream_offset);
    let mut values = Vec::with_capacity(n * d);
    let mut x = vec![f64::NAN; d];
    for _ in 0..n {
        x.iter_mut().for_each(|v| *v = f64::NAN);
        for &j in &order {
            let u = draw_logistic(&mut streams[j]);
            x[j] = match fixed[j] {
                Some(v) => v,
                None => {
                    let node = &model.nodes[j];
                    if node.is_continuous() {
                        node.invert_h(u, &x)?
                    } else {
                        node.sample_level(u, &x)? as f64
                    }
                }
            };
        }
        values.extend_from_slice(&x);
    }
    Ok(Dataset::from_flat(model.node_names(), values))
}

/// L1: `n` rows from the fitted joint distribution.
pub fn sample_observational(model: &TramDag, n: usize, seed: u64) -> Result<SampleSet, CausalError> {
    Ok(SampleSet { data: sample_rows(model, &[], n, seed, 0)?, seed, query: Query::Observational })
}

/// L2: `n` rows with the assigned nodes pinned and their incoming edges cut.
pub fn sample_interventional(
    model: &TramDag,
    assign: &DoAssignment,
    n: usize,
    seed: u64,
) -> Result<SampleSet, CausalError> {
    if assign.is_empty() {
        return Err(CausalError::EmptyAssignment);
    }
    let pinned = assign.resolve(model)?;
    Ok(SampleSet {
        data: sample_rows(model, &pinned, n, seed, 0)?,
        seed,
        query: Query::Interventional(assign.clone()),
    })
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var)
}

/// Difference of interventional means with its Monte-Carlo standard error.
pub fn treatment_effect(
    model: &TramDag,
    do_a: &DoAssignment,
    do_b: &DoAssignment,
    target: &str,
    n: usize,
    seed: u64,
    arms: ArmNoise,
) -> Result<TreatmentEffect, CausalError> {
    let t = model.spec.index_of(target).ok_or_else(|| CausalError::UnknownNode(target.into()))?;
    if do_a.contains(target) || do_b.contains(target) {
        return Err(CausalError::TargetIntervened(target.into()));
    }
    if do_a.is_empty() || do_b.is_empty() {
        return Err(CausalError::EmptyAssignment);
    }
    let pa = do_a.resolve(model)?;
    let pb = do_b.resolve(model)?;
    let offset_b = match arms {
        ArmNoise::Independent => 1 << 32,
        ArmNoise::Shared => 0,
    };
    let a = sample_rows(model, &pa, n, seed, 0)?.column(t);
    let b = sample_rows(model, &pb, n, seed, offset_b)?.column(t);
    let (mean_a, var_a) = mean_var(&a);
    let (mean_b, var_b) = mean_var(&b);
    let std_error = match arms {
        ArmNoise::Independent => (var_a / n as f64 + var_b / n as f64).sqrt(),
        ArmNoise::Shared => {
            let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| y - x).collect();
            (mean_var(&diff).1 / n as f64).sqrt()
        }
    };
    Ok(TreatmentEffect { estimate: mean_b - mean_a, std_error, mean_a, mean_b })
}

fn check_observation(model: &TramDag, obs: &[f64]) -> Result<(), CausalError> {
    if obs.len() != model.nodes.len() {
        return Err(CausalError::ObservationLength { expected: model.nodes.len(), found: obs.len() });
    }
    for (node, &v) in model.nodes.iter().zip(obs) {
        if !v.is_finite() {
            return Err(CausalError::MissingValue(node.name.clone()));
        }
    }
    Ok(())
}

/// Abduction: `u_i = h(x_i | parents)` for continuous nodes; the latent
/// interval of the observed level for discrete nodes.
pub fn abduct_noise(model: &TramDag, obs: &[f64]) -> Result<NoiseVector, CausalError> {
    check_observation(model, obs)?;
    let entries = model
        .nodes
        .iter()
        .map(|node| {
            let x = obs[node.index];
            if node.is_continuous() {
                Ok(NoiseEntry::Continuous(node.eval_h(x, obs)?))
            } else {
                let (cuts, shift) = node.cuts_and_shift(obs)?;
                let k = x as usize;
                let lower = if k <= 1 { f64::NEG_INFINITY } else { cuts[k - 2] + shift };
                let upper = if k > cuts.len() { f64::INFINITY } else { cuts[k - 1] + shift };
                Ok(NoiseEntry::Interval { lower, upper })
            }
        })
        .collect::<Result<_, CausalError>>()?;
    Ok(NoiseVector(entries))
}

/// L3: abduction, action, prediction. Nodes that do not descend from an
/// intervened node keep their observed values.
pub fn counterfactual(model: &TramDag, obs: &[f64], assign: &DoAssignment) -> Result<Vec<f64>, CausalError> {
    if assign.is_empty() {
        return Err(CausalError::EmptyAssignment);
    }
    let pinned = assign.resolve(model)?;
    let mut affected = BTreeSet::new();
    for &(i, _) in &pinned {
        for j in model.spec.descendants(i) {
            if !model.nodes[j].is_continuous() {
                return Err(CausalError::DiscreteCounterfactual {
                    intervened: model.nodes[i].name.clone(),
                    descendant: model.nodes[j].name.clone(),
                });
            }
            affected.insert(j);
        }
    }
    let noise = abduct_noise(model, obs)?;
    let mut x = obs.to_vec();
    for j in model.spec.topological_order() {
        if let Some(&(_, v)) = pinned.iter().find(|(k, _)| *k == j) {
            x[j] = v;
        } else if affected.contains(&j) {
            let NoiseEntry::Continuous(u) = noise.0[j] else { unreachable!("checked continuous") };
            x[j] = model.nodes[j].invert_h(u, &x)?;
        }
    }
    Ok(x)
}

/// Odds-ratio factor `exp(β)` by which `odds(child ≤ c)` changes when the
/// parent is raised by one unit.
pub fn predicted_odds_ratio(beta: f64) -> f64 {
    beta.exp()
}

/// Complex-shift analogue `exp(γ(x + 1) − γ(x))`.
pub fn shift_odds_ratio(model: &TramDag, from: &str, to: &str, x: f64) -> Result<f64, CausalError> {
    let g = model.extract_shift_curve(from, to, &[x, x + 1.0])?;
    Ok((g[1] - g[0]).exp())
}

/// Point estimate and 95% Wald interval of an odds ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OddsRatio {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    /// `[int ≤ c, int > c, base ≤ c, base > c]`.
    pub counts: [u64; 4],
}

impl OddsRatio {
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// 97.5% standard normal quantile.
const Z_975: f64 = 1.959_963_984_540_054;

/// `OR = (a/b)/(c/d)` with a Wald interval on the log scale.
pub fn odds_ratio_from_counts(a: u64, b: u64, c: u64, d: u64) -> Result<OddsRatio, CausalError> {
    let counts = [a, b, c, d];
    if counts.contains(&0) {
        return Err(CausalError::ZeroCell(counts));
    }
    let [a, b, c, d] = counts.map(|v| v as f64);
    let log_or = (a / b).ln() - (c / d).ln();
    let se = (1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d).sqrt();
    Ok(OddsRatio {
        estimate: log_or.exp(),
        lower: (log_or - Z_975 * se).exp(),
        upper: (log_or + Z_975 * se).exp(),
        counts,
    })
}

fn split_counts(values: &[f64], cutoff: f64) -> (u64, u64) {
    let below = values.iter().filter(|&&v| v <= cutoff).count() as u64;
    (below, values.len() as u64 - below)
}

/// Odds ratio of `node ≤ cutoff` between an interventional and a baseline
/// sample.
pub fn odds_ratio_from_samples(
    base: &Dataset,
    intervened: &Dataset,
    node: &str,
    cutoff: f64,
) -> Result<OddsRatio, CausalError> {
    if base.is_empty() || intervened.is_empty() {
        return Err(CausalError::EmptySample);
    }
    let col = |d: &Dataset| d.column_by_name(node).ok_or_else(|| CausalError::UnknownNode(node.into()));
    let (a, b) = split_counts(&col(intervened)?, cutoff);
    let (c, d) = split_counts(&col(base)?, cutoff);
    odds_ratio_from_counts(a, b, c, d)
}
