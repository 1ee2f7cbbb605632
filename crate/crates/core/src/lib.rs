//! Transformation-model DAGs: graph specification, per-node transformation
//! models, training, observational/interventional/counterfactual sampling,
//! synthetic data generators and evaluation metrics.

pub mod diff;
pub mod graph;
pub mod nn;
pub mod numeric;
pub mod transform;
pub mod model;
pub mod dgp;
pub mod causal;
pub mod evalmetrics;
pub mod experiments;

pub use causal::{counterfactual, sample_interventional, sample_observational, treatment_effect, DoAssignment};
pub use dgp::{DgpPreset, Intervention, PresetKind};
pub use graph::{parse_dag_spec, DagSpec, EffectKind, NodeKind};
pub use model::{fit, Dataset, TrainConfig, TramDag};
