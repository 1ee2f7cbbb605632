//! Small fully connected tanh networks used for complex shifts and complex
//! intercepts.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diff::{Tape, Var};

/// Hidden layer widths of every network in a model.
pub const HIDDEN_LAYERS: [usize; 2] = [16, 16];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs × inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn init<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let mut draw = || rng.random_range(-bound..bound);
        let weights = (0..inputs * outputs).map(|_| draw()).collect();
        let bias = (0..outputs).map(|_| draw()).collect();
        Dense { inputs, outputs, weights, bias }
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Tanh on every hidden layer, identity on the output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

impl Mlp {
    /// Network `inputs → HIDDEN_LAYERS → outputs` with weights and biases
    /// drawn uniformly from `±1/sqrt(fan_in)`.
    pub fn new<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let mut sizes = vec![inputs];
        sizes.extend(HIDDEN_LAYERS);
        sizes.push(outputs);
        let layers = sizes.windows(2).map(|w| Dense::init(w[0], w[1], rng)).collect();
        Mlp { layers }
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    pub fn output_layer_mut(&mut self) -> &mut Dense {
        self.layers.last_mut().expect("network has layers")
    }

    /// Appends parameters in layer order, weights before biases.
    pub fn write_params(&self, out: &mut Vec<f64>) {
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
    }

    /// Inverse of [`Mlp::write_params`]; returns the number of values read.
    pub fn read_params(&mut self, src: &[f64]) -> usize {
        let mut at = 0;
        for l in &mut self.layers {
            let w = l.weights.len();
            l.weights.copy_from_slice(&src[at..at + w]);
            at += w;
            let b = l.bias.len();
            l.bias.copy_from_slice(&src[at..at + b]);
            at += b;
        }
        at
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut act = input.to_vec();
        let last = self.layers.len() - 1;
        for (li, l) in self.layers.iter().enumerate() {
            let mut next = Vec::with_capacity(l.outputs);
            for o in 0..l.outputs {
                let row = &l.weights[o * l.inputs..(o + 1) * l.inputs];
                let z = l.bias[o] + row.iter().zip(&act).map(|(w, a)| w * a).sum::<f64>();
                next.push(if li == last { z } else { z.tanh() });
            }
            act = next;
        }
        act
    }

    /// Records the forward pass on `tape`. `params` are the network's
    /// parameter leaves in [`Mlp::write_params`] order; the input is data.
    pub fn forward_tape(&self, tape: &mut Tape, params: &[Var], input: &[f64], out: &mut Vec<Var>) {
        debug_assert_eq!(params.len(), self.param_count());
        let mut at = 0;
        let mut act: Vec<Var> = Vec::new();
        let last = self.layers.len() - 1;
        for (li, l) in self.layers.iter().enumerate() {
            let w = &params[at..at + l.inputs * l.outputs];
            let b = &params[at + l.inputs * l.outputs..at + l.param_count()];
            at += l.param_count();
            let mut next = Vec::with_capacity(l.outputs);
            for o in 0..l.outputs {
                let row = &w[o * l.inputs..(o + 1) * l.inputs];
                let z = if li == 0 {
                    let terms = row.iter().zip(input).map(|(&wv, &x)| (wv, x));
                    tape.linear(terms.chain(std::iter::once((b[o], 1.0))), 0.0)
                } else {
                    tape.dot(row.iter().copied().zip(act.iter().copied()), Some(b[o]))
                };
                next.push(if li == last { z } else { tape.tanh(z) });
            }
            act = next;
        }
        out.clear();
        out.extend(act);
    }
}
