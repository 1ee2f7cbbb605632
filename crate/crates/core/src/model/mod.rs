//! A TRAM per node, assembled into one jointly trained model.
//!
//! Sign convention for linear shifts: `h(x_child | ·) = h_I + β·x_parent`, so
//! a positive `β` moves the transformation up and makes the child
//! stochastically smaller.

mod dataset;
mod file;
mod train;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use dataset::{format_value, DataError, Dataset};
pub use file::FORMAT_VERSION;
pub use train::{fit, EpochRecord, History, TrainConfig};

use crate::diff::DiffError;
use crate::graph::{DagError, DagSpec};
use crate::transform::{Intercept, LatentLogistic, Scaler, ShiftTerm, TramNode, TransformError};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Dag(#[from] DagError),
    #[error("non-finite likelihood at epoch {epoch}, batch {batch}")]
    NonFiniteLikelihood { epoch: usize, batch: usize },
    #[error("non-finite likelihood for row {row}")]
    NonFiniteRow { row: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("edge {from} -> {to} is not a complex shift")]
    NotAComplexShift { from: String, to: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file has format_version {found}, expected {FORMAT_VERSION}")]
    FormatVersionMismatch { found: u64 },
    #[error("model file checksum mismatch (stored {stored:?}, computed {computed:?})")]
    ChecksumMismatch { stored: Option<u32>, computed: Option<u32> },
    #[error("malformed model file: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs: usize,
    pub final_nll: f64,
    pub rows: usize,
    /// Rows whose `h'` fell below the slope guard during training.
    pub guard_hits: u64,
}

/// Per-node and total negative log-likelihood of one row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowNll {
    pub per_node: Vec<f64>,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TramDag {
    pub spec: DagSpec,
    pub nodes: Vec<TramNode>,
    pub latent: LatentLogistic,
    pub training_meta: TrainingMeta,
}

impl TramDag {
    /// Untrained model with scalers fitted to `data` (aligned to `spec`).
    pub fn init(spec: &DagSpec, data: &Dataset, seed: u64) -> Result<Self, ModelError> {
        let data = data.aligned(spec)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nodes = (0..spec.len())
            .map(|i| {
                let scaler =
                    spec.node(i).kind.is_continuous().then(|| Scaler::fit(&data.column(i)));
                TramNode::init(spec, i, scaler, &mut rng)
            })
            .collect();
        Ok(TramDag {
            spec: spec.clone(),
            nodes,
            latent: LatentLogistic,
            training_meta: TrainingMeta { seed, rows: data.len(), ..Default::default() },
        })
    }

    pub fn node_names(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize, ModelError> {
        self.spec.index_of(name).ok_or_else(|| ModelError::UnknownNode(name.to_string()))
    }

    pub fn param_count(&self) -> usize {
        self.nodes.iter().map(TramNode::param_count).sum()
    }

    pub fn write_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for n in &self.nodes {
            n.write_params(&mut out);
        }
        out
    }

    pub fn read_params(&mut self, src: &[f64]) {
        let mut at = 0;
        for n in &mut self.nodes {
            at += n.read_params(&src[at..]);
        }
        debug_assert_eq!(at, src.len());
    }

    /// NLL of a row in spec node order.
    pub fn nll_row(&self, row: &[f64]) -> Result<RowNll, ModelError> {
        let mut per_node = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            per_node.push(n.nll(row)?.0);
        }
        let total = per_node.iter().sum::<f64>();
        Ok(RowNll { per_node, total })
    }

    /// Mean NLL over a dataset, summed in row order.
    pub fn mean_nll(&self, data: &Dataset) -> Result<f64, ModelError> {
        let data = data.aligned(&self.spec)?;
        let mut total = 0.0;
        for (i, row) in data.rows().enumerate() {
            let v = self.nll_row(row)?.total;
            if !v.is_finite() {
                return Err(ModelError::NonFiniteRow { row: i });
            }
            total += v;
        }
        Ok(total / data.len() as f64)
    }

    /// Mean NLL of a single node.
    pub fn node_mean_nll(&self, data: &Dataset, node: usize) -> Result<f64, ModelError> {
        let data = data.aligned(&self.spec)?;
        let mut total = 0.0;
        for row in data.rows() {
            total += self.nodes[node].nll(row)?.0;
        }
        Ok(total / data.len() as f64)
    }

    /// Every linear-shift coefficient keyed by `(parent, child)`.
    pub fn extract_coefficients(&self) -> BTreeMap<(String, String), f64> {
        let mut out = BTreeMap::new();
        for n in &self.nodes {
            for s in &n.shifts {
                if let ShiftTerm::Linear { parent, beta } = s {
                    out.insert((self.nodes[*parent].name.clone(), n.name.clone()), *beta);
                }
            }
        }
        out
    }

    /// Linear-shift edges in a stable order (child-major, then parent).
    pub fn linear_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for n in &self.nodes {
            for s in &n.shifts {
                if let ShiftTerm::Linear { parent, .. } = s {
                    out.push((*parent, n.index));
                }
            }
        }
        out
    }

    fn complex_shift(&self, from: &str, to: &str) -> Result<&ShiftTerm, ModelError> {
        let p = self.index_of(from)?;
        let c = self.index_of(to)?;
        self.nodes[c]
            .shifts
            .iter()
            .find(|s| matches!(s, ShiftTerm::Complex { parent, .. } if *parent == p))
            .ok_or_else(|| ModelError::NotAComplexShift { from: from.into(), to: to.into() })
    }

    /// Centered complex shift `γ(x) − c` on a grid of parent values.
    pub fn extract_shift_curve(&self, from: &str, to: &str, grid: &[f64]) -> Result<Vec<f64>, ModelError> {
        let s = self.complex_shift(from, to)?;
        Ok(grid.iter().map(|&x| s.eval(x)).collect())
    }

    /// Chooses each complex shift's centering as the mean of `γ` over the
    /// parent's training values and moves the constant into the child's
    /// intercept, leaving every `h` unchanged.
    pub fn center_complex_shifts(&mut self, data: &Dataset) {
        for n in &mut self.nodes {
            let mut moved = 0.0;
            for s in &mut n.shifts {
                if let ShiftTerm::Complex { parent, net, centering } = s {
                    let mean = data.rows().map(|r| net.forward(&[r[*parent]])[0]).sum::<f64>()
                        / data.len() as f64;
                    moved += mean - *centering;
                    *centering = mean;
                }
            }
            match &mut n.intercept {
                Intercept::Simple(raw) => raw[0] += moved,
                Intercept::Complex { net, .. } => net.output_layer_mut().bias[0] += moved,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_dag_spec;

    fn toy() -> (DagSpec, Dataset) {
        let spec = parse_dag_spec(
            "node A continuous\nnode B continuous\nnode C binary\n\
             edge A -> B : cs\nedge A -> C : ls\nedge B -> C : ls",
        )
        .unwrap();
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|i| {
                let a = (i as f64 * 0.37).sin();
                vec![a, a * a + 0.1 * (i as f64).cos(), 1.0 + (i % 2) as f64]
            })
            .collect();
        (spec, Dataset::new(vec!["A".into(), "B".into(), "C".into()], &rows).unwrap())
    }

    #[test]
    fn total_is_sum_of_node_nll() {
        let (spec, data) = toy();
        let model = TramDag::init(&spec, &data, 3).unwrap();
        let total = model.mean_nll(&data).unwrap();
        let parts: f64 = (0..3).map(|j| model.node_mean_nll(&data, j).unwrap()).sum();
        assert!((total - parts).abs() < 1e-10);
    }

    #[test]
    fn coefficients_pass_through_at_init() {
        let (spec, data) = toy();
        let model = TramDag::init(&spec, &data, 3).unwrap();
        let coefs = model.extract_coefficients();
        assert_eq!(coefs.len(), 2);
        assert!(coefs.values().all(|&b| b == 0.0));
        let only_cs = parse_dag_spec("node A continuous\nnode B continuous\nedge A -> B : cs").unwrap();
        let data2 = Dataset::new(vec!["A".into(), "B".into()], &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(TramDag::init(&only_cs, &data2, 1).unwrap().extract_coefficients().is_empty());
    }

    #[test]
    fn centering_keeps_h_and_zero_net_gives_zero_curve() {
        let (spec, data) = toy();
        let mut model = TramDag::init(&spec, &data, 5).unwrap();
        let before: Vec<f64> = data.rows().map(|r| model.nll_row(r).unwrap().total).collect();
        model.center_complex_shifts(&data);
        for (r, b) in data.rows().zip(&before) {
            assert!((model.nll_row(r).unwrap().total - b).abs() < 1e-10);
        }
        let curve = model.extract_shift_curve("A", "B", &data.column(0)).unwrap();
        assert!(curve.iter().sum::<f64>().abs() < 1e-10);
        assert!(matches!(
            model.extract_shift_curve("A", "C", &[0.0]),
            Err(ModelError::NotAComplexShift { .. })
        ));

        if let ShiftTerm::Complex { net, .. } = &mut model.nodes[1].shifts[0] {
            for l in &mut net.layers {
                l.weights.iter_mut().for_each(|w| *w = 0.0);
                l.bias.iter_mut().for_each(|b| *b = 0.0);
            }
        }
        model.center_complex_shifts(&data);
        let curve = model.extract_shift_curve("A", "B", &[-2.0, 0.0, 2.0]).unwrap();
        assert!(curve.iter().all(|&v| v == 0.0));
    }
}
