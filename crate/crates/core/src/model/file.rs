use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ModelError, TrainingMeta, TramDag};
use crate::graph::parse_dag_spec;
use crate::nn::Mlp;
use crate::transform::{Intercept, LatentLogistic, Response, Scaler, ShiftTerm, TramNode};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
struct Body {
    format_version: u64,
    spec: String,
    nodes: Vec<NodeRecord>,
    training_meta: MetaRecord,
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    name: String,
    scaler: Option<[f64; 2]>,
    intercept: InterceptRecord,
    shifts: Vec<ShiftRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum InterceptRecord {
    Simple { raw: Vec<f64> },
    Complex { parents: Vec<String>, net: Mlp },
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ShiftRecord {
    Linear { parent: String, beta: f64 },
    Complex { parent: String, net: Mlp, centering: f64 },
}

#[derive(Serialize, Deserialize)]
struct MetaRecord {
    seed: u64,
    epochs: usize,
    final_nll: Option<f64>,
    rows: usize,
    guard_hits: u64,
}

fn checksum(body: &Value) -> u32 {
    crc32fast::hash(serde_json::to_string(body).expect("value serializes").as_bytes())
}

impl TramDag {
    fn body(&self) -> Body {
        let name = |i: usize| self.nodes[i].name.clone();
        let nodes = self
            .nodes
            .iter()
            .map(|n| NodeRecord {
                name: n.name.clone(),
                scaler: n.scaler().map(|s| [s.low, s.high]),
                intercept: match &n.intercept {
                    Intercept::Simple(raw) => InterceptRecord::Simple { raw: raw.clone() },
                    Intercept::Complex { parents, net } => InterceptRecord::Complex {
                        parents: parents.iter().map(|&p| name(p)).collect(),
                        net: net.clone(),
                    },
                },
                shifts: n
                    .shifts
                    .iter()
                    .map(|s| match s {
                        ShiftTerm::Linear { parent, beta } => {
                            ShiftRecord::Linear { parent: name(*parent), beta: *beta }
                        }
                        ShiftTerm::Complex { parent, net, centering } => ShiftRecord::Complex {
                            parent: name(*parent),
                            net: net.clone(),
                            centering: *centering,
                        },
                    })
                    .collect(),
            })
            .collect();
        let m = self.training_meta;
        Body {
            format_version: FORMAT_VERSION,
            spec: self.spec.to_text(),
            nodes,
            training_meta: MetaRecord {
                seed: m.seed,
                epochs: m.epochs,
                final_nll: m.final_nll.is_finite().then_some(m.final_nll),
                rows: m.rows,
                guard_hits: m.guard_hits,
            },
        }
    }

    /// JSON document with a trailing CRC32 of the canonical body.
    pub fn to_json_string(&self) -> String {
        let mut value = serde_json::to_value(self.body()).expect("model serializes");
        let crc = checksum(&value);
        value.as_object_mut().expect("object").insert("checksum".into(), Value::from(crc));
        serde_json::to_string_pretty(&value).expect("value serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self, ModelError> {
        let mut value: Value = serde_json::from_str(text).map_err(|e| {
            if e.is_eof() {
                ModelError::ChecksumMismatch { stored: None, computed: None }
            } else {
                ModelError::Malformed(e.to_string())
            }
        })?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| ModelError::Malformed("top level is not an object".into()))?;
        let version = obj
            .get("format_version")
            .and_then(Value::as_u64)
            .ok_or_else(|| ModelError::Malformed("missing format_version".into()))?;
        if version != FORMAT_VERSION {
            return Err(ModelError::FormatVersionMismatch { found: version });
        }
        let stored = obj.remove("checksum").and_then(|v| v.as_u64()).map(|v| v as u32);
        let computed = checksum(&value);
        if stored != Some(computed) {
            return Err(ModelError::ChecksumMismatch { stored, computed: Some(computed) });
        }
        let body: Body =
            serde_json::from_value(value).map_err(|e| ModelError::Malformed(e.to_string()))?;
        Self::from_body(body)
    }

    fn from_body(body: Body) -> Result<Self, ModelError> {
        let spec = parse_dag_spec(&body.spec)?;
        if body.nodes.len() != spec.len() {
            return Err(ModelError::Malformed(format!(
                "{} node records for {} graph nodes",
                body.nodes.len(),
                spec.len()
            )));
        }
        let bad = |msg: String| ModelError::Malformed(msg);
        let index = |name: &str| spec.index_of(name).ok_or_else(|| bad(format!("unknown node `{name}`")));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut nodes = Vec::with_capacity(spec.len());
        for (i, rec) in body.nodes.into_iter().enumerate() {
            if rec.name != spec.node(i).name {
                return Err(bad(format!("node record `{}` out of order", rec.name)));
            }
            let scaler = match (spec.node(i).kind.is_continuous(), rec.scaler) {
                (true, Some([low, high])) if low < high => Some(Scaler { low, high }),
                (false, None) => None,
                _ => return Err(bad(format!("node `{}`: bad scaler", rec.name))),
            };
            let template = TramNode::init(&spec, i, Some(scaler.unwrap_or(Scaler::new(0.0, 1.0))), &mut rng);
            let intercept = match rec.intercept {
                InterceptRecord::Simple { raw } => Intercept::Simple(raw),
                InterceptRecord::Complex { parents, net } => Intercept::Complex {
                    parents: parents.iter().map(|p| index(p)).collect::<Result<_, _>>()?,
                    net,
                },
            };
            let shifts = rec
                .shifts
                .into_iter()
                .map(|s| {
                    Ok(match s {
                        ShiftRecord::Linear { parent, beta } => ShiftTerm::Linear { parent: index(&parent)?, beta },
                        ShiftRecord::Complex { parent, net, centering } => {
                            ShiftTerm::Complex { parent: index(&parent)?, net, centering }
                        }
                    })
                })
                .collect::<Result<Vec<_>, ModelError>>()?;
            let response = match template.response.clone() {
                Response::Continuous { order, .. } => {
                    Response::Continuous { scaler: scaler.expect("checked"), order }
                }
                r => r,
            };
            let node = TramNode { name: rec.name, index: i, response, intercept, shifts };
            if !same_structure(&node, &template) {
                return Err(bad(format!("node `{}` does not match the graph", node.name)));
            }
            nodes.push(node);
        }
        let m = body.training_meta;
        Ok(TramDag {
            spec,
            nodes,
            latent: LatentLogistic,
            training_meta: TrainingMeta {
                seed: m.seed,
                epochs: m.epochs,
                final_nll: m.final_nll.unwrap_or(f64::NAN),
                rows: m.rows,
                guard_hits: m.guard_hits,
            },
        })
    }
}

fn same_net(a: &Mlp, b: &Mlp) -> bool {
    a.layers.len() == b.layers.len()
        && a.layers.iter().zip(&b.layers).all(|(x, y)| {
            x.inputs == y.inputs
                && x.outputs == y.outputs
                && x.weights.len() == y.weights.len()
                && x.bias.len() == y.bias.len()
        })
}

fn same_structure(node: &TramNode, template: &TramNode) -> bool {
    let intercept = match (&node.intercept, &template.intercept) {
        (Intercept::Simple(a), Intercept::Simple(b)) => a.len() == b.len(),
        (Intercept::Complex { parents: pa, net: na }, Intercept::Complex { parents: pb, net: nb }) => {
            pa == pb && same_net(na, nb)
        }
        _ => false,
    };
    intercept
        && node.shifts.len() == template.shifts.len()
        && node.shifts.iter().zip(&template.shifts).all(|(a, b)| match (a, b) {
            (ShiftTerm::Linear { parent: p, .. }, ShiftTerm::Linear { parent: q, .. }) => p == q,
            (
                ShiftTerm::Complex { parent: p, net: na, .. },
                ShiftTerm::Complex { parent: q, net: nb, .. },
            ) => p == q && same_net(na, nb),
            _ => false,
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Dataset;

    fn model() -> (TramDag, Dataset) {
        let spec = parse_dag_spec(
            "node A continuous\nnode B continuous\nnode C ordinal 3\n\
             edge A -> B : ci\nedge A -> C : ls\nedge B -> C : cs",
        )
        .unwrap();
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let a = (i as f64 * 0.91).sin() * 2.0;
                vec![a, a + (i as f64 * 0.3).cos(), 1.0 + (i % 3) as f64]
            })
            .collect();
        let data = Dataset::new(vec!["A".into(), "B".into(), "C".into()], &rows).unwrap();
        let mut m = TramDag::init(&spec, &data, 11).unwrap();
        m.center_complex_shifts(&data);
        (m, data)
    }

    #[test]
    fn round_trip_is_exact() {
        let (m, data) = model();
        let back = TramDag::from_json_str(&m.to_json_string()).unwrap();
        assert_eq!(back.spec, m.spec);
        assert_eq!(back.write_params(), m.write_params());
        assert_eq!(back.mean_nll(&data).unwrap().to_bits(), m.mean_nll(&data).unwrap().to_bits());
        assert_eq!(back.to_json_string(), m.to_json_string());
    }

    #[test]
    fn truncated_and_tampered_files() {
        let (m, _) = model();
        let text = m.to_json_string();
        assert!(matches!(
            TramDag::from_json_str(&text[..text.len() / 2]),
            Err(ModelError::ChecksumMismatch { .. })
        ));
        let tampered = text.replacen("\"beta\": 0.0", "\"beta\": 0.5", 1);
        assert_ne!(tampered, text);
        assert!(matches!(TramDag::from_json_str(&tampered), Err(ModelError::ChecksumMismatch { .. })));
        let future = text.replacen("\"format_version\": 1", "\"format_version\": 999", 1);
        assert!(matches!(
            TramDag::from_json_str(&future),
            Err(ModelError::FormatVersionMismatch { found: 999 })
        ));
        assert!(matches!(TramDag::from_json_str("[1, 2]"), Err(ModelError::Malformed(_))));
    }
}
