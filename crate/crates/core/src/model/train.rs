use std::io::Write;

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, ModelError, TramDag};
use crate::diff::{adam_step, AdamConfig, AdamState, Tape, Var};
use crate::graph::DagSpec;
use crate::transform::{increment_design, InterceptVars, Response, TapeScratch};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Log the mean NLL every this many epochs; 0 disables logging.
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 500, learning_rate: 1e-3, batch_size: 256, seed: 0, log_every: 50 }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), ModelError> {
        if self.epochs == 0 {
            return Err(ModelError::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ModelError::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(ModelError::InvalidConfig("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean minibatch NLL over the epoch.
    pub mean_nll: f64,
    /// Linear-shift coefficients at the end of the epoch, in
    /// [`History::linear_edges`] order.
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct History {
    pub linear_edges: Vec<(String, String)>,
    pub records: Vec<EpochRecord>,
}

impl History {
    /// Columns `epoch, mean_nll, beta_<parent>_<child>...`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["epoch".to_string(), "mean_nll".to_string()];
        header.extend(self.linear_edges.iter().map(|(p, c)| format!("beta_{p}_{c}")));
        w.write_record(&header)?;
        for r in &self.records {
            let mut fields = vec![r.epoch.to_string(), r.mean_nll.to_string()];
            fields.extend(r.coefficients.iter().map(f64::to_string));
            w.write_record(&fields)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Initializes, trains and centers a model.
pub fn fit(spec: &DagSpec, data: &Dataset, cfg: &TrainConfig) -> Result<(TramDag, History), ModelError> {
    cfg.validate()?;
    let mut model = TramDag::init(spec, data, cfg.seed)?;
    let history = model.train(data, cfg)?;
    Ok((model, history))
}

/// Precomputed intercept design rows of one continuous node.
struct Design {
    value_len: usize,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl TramDag {
    /// Minibatch Adam on the mean joint NLL, followed by centering of the
    /// complex shifts.
    pub fn train(&mut self, data: &Dataset, cfg: &TrainConfig) -> Result<History, ModelError> {
        cfg.validate()?;
        let data = data.aligned(&self.spec)?;
        let n = data.len();
        let designs: Vec<Option<Design>> = self
            .nodes
            .iter()
            .map(|node| match node.response {
                Response::Continuous { scaler, order } => {
                    let mut values = vec![0.0; n * (order + 1)];
                    let mut derivs = vec![0.0; n * order];
                    for (i, row) in data.rows().enumerate() {
                        increment_design(
                            order,
                            scaler.standardize(row[node.index]),
                            &mut values[i * (order + 1)..(i + 1) * (order + 1)],
                            &mut derivs[i * order..(i + 1) * order],
                        );
                    }
                    Some(Design { value_len: order + 1, values, derivs })
                }
                Response::Discrete { .. } => None,
            })
            .collect();

        let mut offsets = Vec::with_capacity(self.nodes.len() + 1);
        offsets.push(0);
        for node in &self.nodes {
            offsets.push(offsets.last().unwrap() + node.param_count());
        }
        let mut params = self.write_params();
        let mut adam = AdamState::new(
            params.len(),
            AdamConfig { learning_rate: cfg.learning_rate, ..AdamConfig::default() },
        );
        let mut grads = vec![0.0; params.len()];

        let edges = self.linear_edges();
        let mut history = History {
            linear_edges: edges
                .iter()
                .map(|&(p, c)| (self.nodes[p].name.clone(), self.nodes[c].name.clone()))
                .collect(),
            records: Vec::with_capacity(cfg.epochs),
        };

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(1);
        let mut order: Vec<usize> = (0..n).collect();
        let mut tape = Tape::new();
        let mut leaves: Vec<Var> = Vec::with_capacity(params.len());
        let mut shared: Vec<Option<InterceptVars>> = Vec::with_capacity(self.nodes.len());
        let mut losses: Vec<Var> = Vec::new();
        let mut scratch = TapeScratch::default();
        let mut guard_hits = 0u64;
        let mut last_mean = f64::NAN;

        for epoch in 1..=cfg.epochs {
            order.shuffle(&mut rng);
            let mut epoch_total = 0.0;
            for (batch, chunk) in order.chunks(cfg.batch_size).enumerate() {
                tape.clear();
                leaves.clear();
                leaves.extend(params.iter().map(|&p| tape.leaf(p)));
                shared.clear();
                for (j, node) in self.nodes.iter().enumerate() {
                    shared.push(node.batch_vars(&mut tape, &leaves[offsets[j]..offsets[j + 1]]));
                }
                losses.clear();
                for &i in chunk {
                    let row = data.row(i);
                    for (j, node) in self.nodes.iter().enumerate() {
                        let design = designs[j].as_ref().map(|d| {
                            let m = d.value_len - 1;
                            (
                                &d.values[i * d.value_len..(i + 1) * d.value_len],
                                &d.derivs[i * m..(i + 1) * m],
                            )
                        });
                        let (v, clamped) = node.nll_tape(
                            &mut tape,
                            &leaves[offsets[j]..offsets[j + 1]],
                            shared[j].as_ref(),
                            row,
                            design,
                            &mut scratch,
                        )?;
                        guard_hits += clamped as u64;
                        losses.push(v);
                    }
                }
                let scale = 1.0 / chunk.len() as f64;
                let loss = tape.linear(losses.iter().map(|&v| (v, scale)), 0.0);
                let value = tape.value(loss);
                if !value.is_finite() {
                    return Err(ModelError::NonFiniteLikelihood { epoch, batch });
                }
                epoch_total += value * chunk.len() as f64;
                let adjoints = tape.backward(loss);
                for (g, leaf) in grads.iter_mut().zip(&leaves) {
                    *g = adjoints[leaf.index()];
                }
                adam_step(&mut params, &grads, &mut adam)?;
            }
            last_mean = epoch_total / n as f64;
            self.read_params(&params);
            let coefs = self.extract_coefficients();
            let coefficients = history.linear_edges.iter().map(|e| coefs[e]).collect();
            history.records.push(EpochRecord { epoch, mean_nll: last_mean, coefficients });
            if cfg.log_every > 0 && (epoch % cfg.log_every == 0 || epoch == 1) {
                info!("epoch {epoch:>4}  mean NLL {last_mean:.6}");
            }
        }
        if guard_hits > 0 {
            warn!("slope guard fired {guard_hits} times during training");
        }
        self.center_complex_shifts(&data);
        self.training_meta.seed = cfg.seed;
        self.training_meta.epochs += cfg.epochs;
        self.training_meta.rows = n;
        self.training_meta.final_nll = last_mean;
        self.training_meta.guard_hits += guard_hits;
        Ok(history)
    }
}
