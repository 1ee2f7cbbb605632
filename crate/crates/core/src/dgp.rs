//! Synthetic data-generating processes with known ground truth.
//!
//! Every preset has three or four nodes named `X1 … X4`. Noise is drawn from
//! one ChaCha8 stream per node, one draw sequence per row, so data generated
//! under an intervention with the same seed reuses the exogenous noise of the
//! observational data exactly.
//!
//! The TRAM-style presets (`cont_*`, `mixed_*`) use the reference simple
//! intercept `h_0(x) = 5x − 2.5` on continuous nodes and cut points
//! `(−2, 0, 2)` on the ordinal node, with standard logistic noise.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::graph::{parse_dag_spec, DagSpec};
use crate::model::Dataset;
use crate::numeric::logit;
use crate::transform::sample_discrete;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DgpError {
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("preset `{preset}` has no parameter `{name}`")]
    UnknownParameter { preset: String, name: String },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unsupported query: {0}")]
    UnsupportedQuery(String),
    #[error("preset `{0}` has no closed-form counterfactual")]
    UnsupportedPreset(String),
    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),
}

/// Exogenous noise distributions.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    StandardLogistic,
    Normal { mu: f64, sigma: f64 },
    Laplace { mu: f64, b: f64 },
    /// Weights and `(mu, sigma)` components.
    GaussianMixture { weights: Vec<f64>, components: Vec<(f64, f64)> },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<(), DgpError> {
        let bad = |m: String| Err(DgpError::InvalidNoise(m));
        match self {
            NoiseSpec::StandardLogistic => Ok(()),
            NoiseSpec::Normal { sigma, .. } if sigma.is_nan() || *sigma <= 0.0 => bad(format!("sigma {sigma} ≤ 0")),
            NoiseSpec::Laplace { b, .. } if b.is_nan() || *b <= 0.0 => bad(format!("scale {b} ≤ 0")),
            NoiseSpec::GaussianMixture { weights, components } => {
                if weights.len() != components.len() || weights.is_empty() {
                    return bad("mixture weights and components differ in length".into());
                }
                if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 || weights.iter().any(|w| *w < 0.0) {
                    return bad("mixture weights must be non-negative and sum to 1".into());
                }
                if components.iter().any(|(_, s)| s.is_nan() || *s <= 0.0) {
                    return bad("mixture component sigma ≤ 0".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            NoiseSpec::StandardLogistic => 0.0,
            NoiseSpec::Normal { mu, .. } | NoiseSpec::Laplace { mu, .. } => *mu,
            NoiseSpec::GaussianMixture { weights, components } => {
                weights.iter().zip(components).map(|(w, (m, _))| w * m).sum()
            }
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseSpec::StandardLogistic => logit(rng.sample(Open01)),
            NoiseSpec::Normal { mu, sigma } => Normal::new(*mu, *sigma).expect("validated").sample(rng),
            NoiseSpec::Laplace { mu, b } => {
                let p: f64 = rng.sample(Open01);
                let v = p - 0.5;
                mu - b * v.signum() * (1.0 - 2.0 * v.abs()).ln()
            }
            NoiseSpec::GaussianMixture { weights, components } => {
                let pick: f64 = rng.random();
                let mut acc = 0.0;
                let mut which = components.len() - 1;
                for (k, w) in weights.iter().enumerate() {
                    acc += w;
                    if pick < acc {
                        which = k;
                        break;
                    }
                }
                let (mu, sigma) = components[which];
                Normal::new(mu, sigma).expect("validated").sample(rng)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PresetKind {
    Vaca,
    Carefl,
    ContLs,
    ContCs,
    ContSin,
    MixedLs,
    MixedExp,
}

impl PresetKind {
    pub const ALL: [PresetKind; 7] = [
        PresetKind::Vaca,
        PresetKind::Carefl,
        PresetKind::ContLs,
        PresetKind::ContCs,
        PresetKind::ContSin,
        PresetKind::MixedLs,
        PresetKind::MixedExp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PresetKind::Vaca => "vaca",
            PresetKind::Carefl => "carefl",
            PresetKind::ContLs => "cont_ls",
            PresetKind::ContCs => "cont_cs",
            PresetKind::ContSin => "cont_sin",
            PresetKind::MixedLs => "mixed_ls",
            PresetKind::MixedExp => "mixed_exp",
        }
    }

    pub fn is_mixed(self) -> bool {
        matches!(self, PresetKind::MixedLs | PresetKind::MixedExp)
    }
}

impl fmt::Display for PresetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PresetKind {
    type Err = DgpError;

    fn from_str(s: &str) -> Result<Self, DgpError> {
        PresetKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| DgpError::UnknownPreset(s.to_string()))
    }
}

/// How rows are generated.
#[derive(Debug, Clone, PartialEq)]
pub enum Intervention {
    Observational,
    /// Pin nodes to values (data units or levels).
    Do(Vec<(usize, f64)>),
    /// Add `delta` to a node's natural value; descendants follow.
    Shift { node: usize, delta: f64 },
}

/// Reference simple intercept of the TRAM-style presets.
pub fn reference_intercept(x: f64) -> f64 {
    5.0 * x - 2.5
}

/// Cut points of the ordinal node of the mixed presets.
pub const REFERENCE_CUTS: [f64; 3] = [-2.0, 0.0, 2.0];

#[derive(Debug, Clone, PartialEq)]
pub struct DgpPreset {
    pub kind: PresetKind,
    pub params: BTreeMap<String, f64>,
    pub noise: Vec<NoiseSpec>,
}

impl DgpPreset {
    pub fn new(kind: PresetKind) -> Self {
        let p = |pairs: &[(&str, f64)]| pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let logistic = |d: usize| vec![NoiseSpec::StandardLogistic; d];
        let (params, noise) = match kind {
            PresetKind::Vaca => (
                p(&[("b21", -1.0), ("b31", 1.0), ("b32", 0.25)]),
                vec![
                    NoiseSpec::GaussianMixture {
                        weights: vec![0.5, 0.5],
                        components: vec![(-2.0, 1.5f64.sqrt()), (1.5, 1.0)],
                    },
                    NoiseSpec::Normal { mu: 0.0, sigma: 1.0 },
                    NoiseSpec::Normal { mu: 0.0, sigma: 1.0 },
                ],
            ),
            PresetKind::Carefl => (
                BTreeMap::new(),
                vec![NoiseSpec::Laplace { mu: 0.0, b: 1.0 / 2f64.sqrt() }; 4],
            ),
            PresetKind::ContLs => (p(&[("beta12", 2.0), ("beta13", -0.2), ("beta23", 0.3)]), logistic(3)),
            PresetKind::ContCs | PresetKind::ContSin => (p(&[("beta12", 2.0), ("beta13", -0.2)]), logistic(3)),
            PresetKind::MixedLs => (p(&[("beta12", 2.0), ("beta13", 2.0), ("beta23", -0.3)]), logistic(3)),
            PresetKind::MixedExp => (p(&[("beta12", 2.0), ("beta13", 2.0), ("exp_scale", 0.5)]), logistic(3)),
        };
        DgpPreset { kind, params, noise }
    }

    pub fn from_name(name: &str) -> Result<Self, DgpError> {
        Ok(Self::new(name.parse()?))
    }

    /// Overrides one named coefficient.
    pub fn with_param(mut self, name: &str, value: f64) -> Result<Self, DgpError> {
        match self.params.get_mut(name) {
            Some(v) => {
                *v = value;
                Ok(self)
            }
            None => Err(DgpError::UnknownParameter { preset: self.kind.name().into(), name: name.into() }),
        }
    }

    fn param(&self, name: &str) -> f64 {
        self.params[name]
    }

    pub fn node_count(&self) -> usize {
        self.noise.len()
    }

    pub fn node_names(&self) -> Vec<String> {
        (1..=self.node_count()).map(|i| format!("X{i}")).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize, DgpError> {
        self.node_names()
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| DgpError::UnknownNode(name.into()))
    }

    /// Graph used to fit a model to this preset's data.
    pub fn model_dag_text(&self) -> &'static str {
        match self.kind {
            PresetKind::Vaca => {
                "node X1 continuous\nnode X2 continuous\nnode X3 continuous\n\
                 edge X1 -> X2 : ci\nedge X1 -> X3 : ci\nedge X2 -> X3 : ci\n"
            }
            PresetKind::Carefl => {
                "node X1 continuous\nnode X2 continuous\nnode X3 continuous\nnode X4 continuous\n\
                 edge X1 -> X3 : ci\nedge X2 -> X3 : ci\nedge X1 -> X4 : ci\nedge X2 -> X4 : ci\n"
            }
            PresetKind::ContLs => {
                "node X1 continuous\nnode X2 continuous\nnode X3 continuous\n\
                 edge X1 -> X2 : ls\nedge X1 -> X3 : ls\nedge X2 -> X3 : ls\n"
            }
            PresetKind::ContCs | PresetKind::ContSin => {
                "node X1 continuous\nnode X2 continuous\nnode X3 continuous\n\
                 edge X1 -> X2 : ls\nedge X1 -> X3 : ls\nedge X2 -> X3 : cs\n"
            }
            PresetKind::MixedLs => {
                "node X1 continuous\nnode X2 continuous\nnode X3 ordinal 4\n\
                 edge X1 -> X2 : ls\nedge X1 -> X3 : ls\nedge X2 -> X3 : ls\n"
            }
            PresetKind::MixedExp => {
                "node X1 continuous\nnode X2 continuous\nnode X3 ordinal 4\n\
                 edge X1 -> X2 : ls\nedge X1 -> X3 : ls\nedge X2 -> X3 : cs\n"
            }
        }
    }

    pub fn model_dag(&self) -> DagSpec {
        parse_dag_spec(self.model_dag_text()).expect("preset graphs parse")
    }

    /// Shift of `X2` inside `h(x3 | x1, x2)` for the TRAM-style presets.
    pub fn x2_shift(&self, x2: f64) -> f64 {
        match self.kind {
            PresetKind::ContLs | PresetKind::MixedLs => self.param("beta23") * x2,
            PresetKind::ContCs => -0.75 * (5.0 * (x2 + 0.12)).atan(),
            PresetKind::ContSin => -(2.0 * (3.0 * x2).sin() + x2),
            PresetKind::MixedExp => self.param("exp_scale") * x2.exp(),
            PresetKind::Vaca | PresetKind::Carefl => 0.0,
        }
    }

    /// Linear-shift coefficients of the TRAM-style presets, keyed like
    /// [`crate::model::TramDag::extract_coefficients`].
    pub fn true_coefficients(&self) -> BTreeMap<(String, String), f64> {
        let mut out = BTreeMap::new();
        let mut put = |a: &str, b: &str, key: &str| {
            if let Some(v) = self.params.get(key) {
                out.insert((a.to_string(), b.to_string()), *v);
            }
        };
        if !matches!(self.kind, PresetKind::Vaca | PresetKind::Carefl) {
            put("X1", "X2", "beta12");
            put("X1", "X3", "beta13");
            put("X2", "X3", "beta23");
        }
        out
    }

    /// `#` header lines describing the preset.
    pub fn header_lines(&self, n: usize, seed: u64) -> Vec<String> {
        let mut out = vec![format!("preset {}", self.kind), format!("n {n}"), format!("seed {seed}")];
        out.extend(self.params.iter().map(|(k, v)| format!("param {k} = {v}")));
        out
    }

    /// One structural step for node `j` given the earlier values and the
    /// node's noise.
    fn mechanism(&self, j: usize, x: &[f64], e: f64) -> f64 {
        let inv = |h_rest: f64| (e - h_rest + 2.5) / 5.0;
        match (self.kind, j) {
            (PresetKind::Vaca, 0) | (PresetKind::Carefl, 0) | (PresetKind::Carefl, 1) => e,
            (PresetKind::Vaca, 1) => self.param("b21") * x[0] + e,
            (PresetKind::Vaca, _) => self.param("b31") * x[0] + self.param("b32") * x[1] + e,
            (PresetKind::Carefl, 2) => x[0] + 0.5 * x[1].powi(3) + e,
            (PresetKind::Carefl, _) => -x[1] + 0.5 * x[0] * x[0] + e,
            (_, 0) => inv(0.0),
            (_, 1) => inv(self.param("beta12") * x[0]),
            (kind, _) => {
                let shift = self.param("beta13") * x[0] + self.x2_shift(x[1]);
                if kind.is_mixed() {
                    sample_discrete(&REFERENCE_CUTS, shift, e) as f64
                } else {
                    inv(shift)
                }
            }
        }
    }

    /// Noise of node `j` that produced `x[j]` (continuous structural
    /// equations only).
    fn abduct(&self, j: usize, x: &[f64]) -> f64 {
        match (self.kind, j) {
            (PresetKind::Vaca, 0) | (PresetKind::Carefl, 0) | (PresetKind::Carefl, 1) => x[j],
            (PresetKind::Vaca, 1) => x[1] - self.param("b21") * x[0],
            (PresetKind::Vaca, _) => x[2] - self.param("b31") * x[0] - self.param("b32") * x[1],
            (PresetKind::Carefl, 2) => x[2] - x[0] - 0.5 * x[1].powi(3),
            (PresetKind::Carefl, _) => x[3] + x[1] - 0.5 * x[0] * x[0],
            _ => unreachable!("closed-form abduction only for vaca/carefl"),
        }
    }

    /// Draws `n` rows.
    pub fn generate(&self, n: usize, seed: u64, intervention: &Intervention) -> Result<Dataset, DgpError> {
        for noise in &self.noise {
            noise.validate()?;
        }
        let d = self.node_count();
        let mut pinned: Vec<Option<f64>> = vec![None; d];
        let mut delta = vec![0.0; d];
        match intervention {
            Intervention::Observational => {}
            Intervention::Do(assign) => {
                for &(j, v) in assign {
                    if j >= d {
                        return Err(DgpError::UnknownNode(format!("#{j}")));
                    }
                    pinned[j] = Some(v);
                }
            }
            Intervention::Shift { node, delta: dv } => {
                if *node >= d {
                    return Err(DgpError::UnknownNode(format!("#{node}")));
                }
                delta[*node] = *dv;
            }
        }
        let mut streams: Vec<ChaCha8Rng> = (0..d)
            .map(|j| {
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                r.set_stream(j as u64);
                r
            })
            .collect();
        let mut values = Vec::with_capacity(n * d);
        let mut x = vec![0.0; d];
        for _ in 0..n {
            for j in 0..d {
                let e = self.noise[j].sample(&mut streams[j]);
                x[j] = match pinned[j] {
                    Some(v) => v,
                    None => self.mechanism(j, &x, e) + delta[j],
                };
            }
            values.extend_from_slice(&x);
        }
        Ok(Dataset::from_flat(self.node_names(), values))
    }

    /// `E[target | do(...)]`: closed form for `vaca` and `carefl`, otherwise
    /// a Monte-Carlo mean of 10⁶ draws with its standard error.
    pub fn oracle_interventional_mean(
        &self,
        assign: &[(String, f64)],
        target: &str,
    ) -> Result<OracleValue, DgpError> {
        let t = self.index_of(target)?;
        let mut pinned: Vec<Option<f64>> = vec![None; self.node_count()];
        for (name, v) in assign {
            let j = self.index_of(name)?;
            let levels = (REFERENCE_CUTS.len() + 1) as f64;
            if self.kind.is_mixed() && j == 2 && !(v.fract() == 0.0 && *v >= 1.0 && *v <= levels) {
                return Err(DgpError::UnsupportedQuery(format!("X3 has no level {v}")));
            }
            pinned[j] = Some(*v);
        }
        if let Some(v) = pinned[t] {
            return Ok(OracleValue { value: v, std_error: None });
        }
        let mean1 = pinned[0].unwrap_or(self.noise[0].mean());
        match self.kind {
            PresetKind::Vaca => {
                let m1 = mean1;
                let m2 = pinned[1].unwrap_or(self.param("b21") * m1);
                let m3 = self.param("b31") * m1 + self.param("b32") * m2;
                Ok(OracleValue { value: [m1, m2, m3][t], std_error: None })
            }
            PresetKind::Carefl => {
                // Laplace(0, b): E[X] = E[X³] = 0, E[X²] = 2b² = 1
                let m1 = pinned[0].unwrap_or(0.0);
                let m2 = pinned[1].unwrap_or(0.0);
                let cube2 = pinned[1].map_or(0.0, |v| v.powi(3));
                let sq1 = pinned[0].map_or(1.0, |v| v * v);
                let value = [m1, m2, m1 + 0.5 * cube2, -m2 + 0.5 * sq1][t];
                Ok(OracleValue { value, std_error: None })
            }
            _ => {
                const DRAWS: usize = 1_000_000;
                const ORACLE_SEED: u64 = 0x0dd5_eed5;
                let assign: Vec<(usize, f64)> =
                    pinned.iter().enumerate().filter_map(|(j, v)| v.map(|v| (j, v))).collect();
                let intervention =
                    if assign.is_empty() { Intervention::Observational } else { Intervention::Do(assign) };
                let data = self.generate(DRAWS, ORACLE_SEED, &intervention)?;
                let col = data.column(t);
                let mean = col.iter().sum::<f64>() / DRAWS as f64;
                let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (DRAWS - 1) as f64;
                Ok(OracleValue { value: mean, std_error: Some((var / DRAWS as f64).sqrt()) })
            }
        }
    }

    /// Exact counterfactual row for the `carefl` preset: abduct every noise
    /// term from the structural equations, pin the do-values, replay.
    pub fn oracle_counterfactual(&self, observation: &[f64], assign: &[(usize, f64)]) -> Result<Vec<f64>, DgpError> {
        if self.kind != PresetKind::Carefl {
            return Err(DgpError::UnsupportedPreset(self.kind.name().into()));
        }
        let d = self.node_count();
        if observation.len() != d {
            return Err(DgpError::UnsupportedQuery(format!("observation has {} values, expected {d}", observation.len())));
        }
        let noise: Vec<f64> = (0..d).map(|j| self.abduct(j, observation)).collect();
        let mut x = vec![0.0; d];
        for j in 0..d {
            x[j] = match assign.iter().find(|(k, _)| *k == j) {
                Some(&(_, v)) => v,
                None => self.mechanism(j, &x, noise[j]),
            };
        }
        Ok(x)
    }
}

/// An oracle expectation; `std_error` is set for Monte-Carlo values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValue {
    pub value: f64,
    pub std_error: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    #[test]
    fn presets_parse_and_round_trip_names() {
        for kind in PresetKind::ALL {
            assert_eq!(kind.name().parse::<PresetKind>().unwrap(), kind);
            let p = DgpPreset::new(kind);
            assert_eq!(p.model_dag().len(), p.node_count());
        }
        assert_eq!(DgpPreset::from_name("nope"), Err(DgpError::UnknownPreset("nope".into())));
        assert!(DgpPreset::new(PresetKind::MixedLs).with_param("beta13", -0.2).is_ok());
        assert!(DgpPreset::new(PresetKind::Vaca).with_param("beta13", 1.0).is_err());
    }

    #[test]
    fn vaca_mixture_mean() {
        let p = DgpPreset::new(PresetKind::Vaca);
        let data = p.generate(100_000, 3, &Intervention::Observational).unwrap();
        let x1 = data.column(0);
        // Var(X1) = 0.5·1.5 + 0.5·1 + 0.25·3.5² = 4.3125
        let se = (4.3125f64 / 1e5).sqrt();
        assert!((mean(&x1) + 0.25).abs() < 3.0 * se);
        // two modes: far more mass near −2 and 1.5 than near the dip at −0.5
        let near = |c: f64| x1.iter().filter(|v| (*v - c).abs() < 0.25).count();
        assert!(near(-2.0) > near(-0.4) && near(1.5) > near(-0.4));
    }

    #[test]
    fn carefl_marginal_means() {
        let p = DgpPreset::new(PresetKind::Carefl);
        let data = p.generate(100_000, 5, &Intervention::Observational).unwrap();
        // Var: X1, X2 = 1; X3 = 1 + 0.25 E[X2⁶] + 1 with E[X⁶] = 720 b⁶ = 90;
        // X4 = 1 + 0.25 (E[X1⁴] − 1) + 1 with E[X⁴] = 24 b⁴ = 6
        let sd = [1.0, 1.0, (2.0 + 22.5f64).sqrt(), (2.0 + 1.25f64).sqrt()];
        let truth = [0.0, 0.0, 0.0, 0.5];
        for j in 0..4 {
            let m = mean(&data.column(j));
            assert!((m - truth[j]).abs() < 3.0 * sd[j] / 1e5f64.sqrt(), "X{}: {m}", j + 1);
        }
    }

    #[test]
    fn tram_presets_follow_their_equations() {
        let p = DgpPreset::new(PresetKind::ContCs);
        let data = p.generate(10, 9, &Intervention::Observational).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        rng.set_stream(2);
        for row in data.rows() {
            let u3 = NoiseSpec::StandardLogistic.sample(&mut rng);
            let h = reference_intercept(row[2]) - 0.2 * row[0] - 0.75 * (5.0 * (row[1] + 0.12)).atan();
            assert!((h - u3).abs() < 1e-12);
        }
        let mixed = DgpPreset::new(PresetKind::MixedExp).generate(2000, 1, &Intervention::Observational).unwrap();
        let mut counts = [0usize; 4];
        for v in mixed.column(2) {
            counts[v as usize - 1] += 1;
        }
        assert_eq!(counts.iter().sum::<usize>(), 2000);
    }

    #[test]
    fn interventions_reuse_noise() {
        let p = DgpPreset::new(PresetKind::ContLs);
        let obs = p.generate(50, 4, &Intervention::Observational).unwrap();
        let int = p.generate(50, 4, &Intervention::Do(vec![(1, 0.7)])).unwrap();
        let shifted = p.generate(50, 4, &Intervention::Shift { node: 0, delta: 1.0 }).unwrap();
        for i in 0..50 {
            assert_eq!(obs.row(i)[0], int.row(i)[0]);
            assert_eq!(int.row(i)[1], 0.7);
            assert!((shifted.row(i)[0] - obs.row(i)[0] - 1.0).abs() < 1e-12);
            // h(x2 | x1 + 1) with the same noise: x2 drops by β12/5
            assert!((shifted.row(i)[1] - obs.row(i)[1] + 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn interventional_oracles() {
        let vaca = DgpPreset::new(PresetKind::Vaca);
        let at = |x: f64| vaca.oracle_interventional_mean(&[("X2".into(), x)], "X3").unwrap().value;
        assert!((at(0.0) + 0.25).abs() < 1e-12);
        assert!((at(-2.0) - at(-3.0) - 0.25).abs() < 1e-12);
        let sink = DgpPreset::new(PresetKind::ContLs);
        let obs = sink.oracle_interventional_mean(&[], "X1").unwrap();
        let int = sink.oracle_interventional_mean(&[("X3".into(), 0.3)], "X1").unwrap();
        assert_eq!(obs.value, int.value);
        // X1 mean: E[(u + 2.5)/5] = 0.5
        assert!((obs.value - 0.5).abs() < 4.0 * obs.std_error.unwrap());
        assert!(matches!(
            vaca.oracle_interventional_mean(&[], "X9"),
            Err(DgpError::UnknownNode(_))
        ));
    }

    #[test]
    fn carefl_counterfactual_oracle() {
        let p = DgpPreset::new(PresetKind::Carefl);
        let obs = [2.0, 1.5, 0.81, -0.28];
        let same = p.oracle_counterfactual(&obs, &[(1, 1.5)]).unwrap();
        assert!((same[2] - 0.81).abs() < 1e-12);
        let q1 = p.oracle_counterfactual(&obs, &[(1, 0.0)]).unwrap();
        assert!((q1[2] + 0.8775).abs() < 1e-12);
        let q2 = p.oracle_counterfactual(&obs, &[(0, 0.0)]).unwrap();
        assert!((q2[3] + 2.28).abs() < 1e-12);
        assert_eq!(
            DgpPreset::new(PresetKind::Vaca).oracle_counterfactual(&obs[..3], &[]),
            Err(DgpError::UnsupportedPreset("vaca".into()))
        );
    }
}
