//! DAG declarations and the meta-adjacency matrix.
//!
//! A [`DagSpec`] is a list of typed node declarations plus a `d × d` matrix
//! whose entry `[i][j]` says how node `i` enters the transformation function
//! of node `j`: not at all, as a linear shift, as a complex shift, or through
//! the complex intercept.
//!
//! The text format is line oriented:
//!
//! ```text
//! # comment
//! node X1 continuous
//! node X2 ordinal 4
//! edge X1 -> X2 : ls
//! set X1 bernstein_order 12
//! ```

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Bernstein order used for continuous nodes unless overridden with `set`.
pub const DEFAULT_BERNSTEIN_ORDER: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DagError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: node `{name}` declared twice")]
    DuplicateNode { line: usize, name: String },
    #[error("line {line}: unknown node `{name}`")]
    UnknownNode { line: usize, name: String },
    #[error("line {line}: edge closes a cycle through {nodes:?}")]
    CycleDetected { line: usize, nodes: Vec<String> },
    #[error("line {line}: node `{node}` mixes a complex intercept with shift terms")]
    MixedInterceptColumn { line: usize, node: String },
}

/// Data kind of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Continuous,
    /// Ordered categories `1..=levels`.
    Ordinal { levels: usize },
    /// Two ordered categories, stored as levels 1 and 2.
    Binary,
}

impl NodeKind {
    pub fn is_continuous(self) -> bool {
        matches!(self, NodeKind::Continuous)
    }

    /// Number of levels for discrete kinds, `None` for continuous nodes.
    pub fn levels(self) -> Option<usize> {
        match self {
            NodeKind::Continuous => None,
            NodeKind::Ordinal { levels } => Some(levels),
            NodeKind::Binary => Some(2),
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Continuous => write!(f, "continuous"),
            NodeKind::Ordinal { levels } => write!(f, "ordinal {levels}"),
            NodeKind::Binary => write!(f, "binary"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeDecl {
    pub name: String,
    pub kind: NodeKind,
    /// Bernstein order of the intercept; only meaningful for continuous nodes.
    pub bernstein_order: usize,
}

/// How a parent enters the child's transformation function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub enum EffectKind {
    #[default]
    None,
    /// Linear shift `β · x_parent`.
    LinearShift,
    /// Complex shift `γ(x_parent)`.
    ComplexShift,
    /// Parent feeds the complex intercept network.
    ComplexIntercept,
}

impl EffectKind {
    pub fn token(self) -> &'static str {
        match self {
            EffectKind::None => "0",
            EffectKind::LinearShift => "ls",
            EffectKind::ComplexShift => "cs",
            EffectKind::ComplexIntercept => "ci",
        }
    }

    fn parse(token: &str) -> Option<Self> {
        match token.to_ascii_lowercase().as_str() {
            "ls" => Some(EffectKind::LinearShift),
            "cs" => Some(EffectKind::ComplexShift),
            "ci" => Some(EffectKind::ComplexIntercept),
            _ => None,
        }
    }
}

/// Validated DAG with its meta-adjacency matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DagSpec {
    nodes: Vec<NodeDecl>,
    meta: Vec<Vec<EffectKind>>,
}

impl DagSpec {
    /// Builds and validates a spec from declarations and a full matrix.
    pub fn new(nodes: Vec<NodeDecl>, meta: Vec<Vec<EffectKind>>) -> Result<Self, DagError> {
        let d = nodes.len();
        if meta.len() != d || meta.iter().any(|row| row.len() != d) {
            return Err(DagError::Syntax {
                line: 0,
                message: format!("meta-adjacency matrix must be {d}x{d}"),
            });
        }
        let mut seen = BTreeSet::new();
        for node in &nodes {
            if !is_identifier(&node.name) {
                return Err(DagError::Syntax {
                    line: 0,
                    message: format!("invalid node name `{}`", node.name),
                });
            }
            if !seen.insert(node.name.as_str()) {
                return Err(DagError::DuplicateNode { line: 0, name: node.name.clone() });
            }
            validate_kind(node.kind, 0)?;
        }
        let spec = DagSpec { nodes, meta };
        spec.validate_structure(&|_, _| 0)?;
        Ok(spec)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NodeDecl] {
        &self.nodes
    }

    pub fn node(&self, index: usize) -> &NodeDecl {
        &self.nodes[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    /// Effect of node `from` on node `to`.
    pub fn effect(&self, from: usize, to: usize) -> EffectKind {
        self.meta[from][to]
    }

    pub fn meta_adjacency(&self) -> &[Vec<EffectKind>] {
        &self.meta
    }

    /// Parents of `node` in declaration order, with their effect kinds.
    pub fn parents(&self, node: usize) -> Vec<(usize, EffectKind)> {
        (0..self.len())
            .filter_map(|i| match self.meta[i][node] {
                EffectKind::None => None,
                e => Some((i, e)),
            })
            .collect()
    }

    pub fn children(&self, node: usize) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.meta[node][j] != EffectKind::None).collect()
    }

    /// True when the node's intercept depends on its parents.
    pub fn has_complex_intercept(&self, node: usize) -> bool {
        (0..self.len()).any(|i| self.meta[i][node] == EffectKind::ComplexIntercept)
    }

    pub fn edges(&self) -> Vec<(usize, usize, EffectKind)> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            for j in 0..self.len() {
                if self.meta[i][j] != EffectKind::None {
                    out.push((i, j, self.meta[i][j]));
                }
            }
        }
        out
    }

    /// Causal order; parents precede children, ties broken by declaration order.
    pub fn topological_order(&self) -> Vec<usize> {
        kahn(&self.meta).expect("validated spec is acyclic")
    }

    /// Strict descendants of `node` (the node itself excluded), ascending.
    pub fn descendants(&self, node: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            for c in self.children(v) {
                if out.insert(c) {
                    stack.push(c);
                }
            }
        }
        out
    }

    /// The graph after `do(node)`: every edge into `node` is removed.
    pub fn post_intervention(&self, node: &str) -> Result<DagSpec, DagError> {
        let j = self
            .index_of(node)
            .ok_or_else(|| DagError::UnknownNode { line: 0, name: node.to_string() })?;
        Ok(self.post_intervention_index(j))
    }

    pub fn post_intervention_index(&self, node: usize) -> DagSpec {
        let mut out = self.clone();
        for row in &mut out.meta {
            row[node] = EffectKind::None;
        }
        out
    }

    /// Same as [`DagSpec::post_intervention_index`] but in place.
    pub fn cut_incoming(&mut self, node: usize) {
        for row in &mut self.meta {
            row[node] = EffectKind::None;
        }
    }

    /// Writes the spec back in the text grammar; stable for a fixed spec.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            out.push_str(&format!("node {} {}\n", n.name, n.kind));
        }
        for (i, j, e) in self.edges() {
            out.push_str(&format!(
                "edge {} -> {} : {}\n",
                self.nodes[i].name,
                self.nodes[j].name,
                e.token()
            ));
        }
        for n in &self.nodes {
            if n.kind.is_continuous() && n.bernstein_order != DEFAULT_BERNSTEIN_ORDER {
                out.push_str(&format!("set {} bernstein_order {}\n", n.name, n.bernstein_order));
            }
        }
        out
    }

    fn validate_structure(&self, line_of: &dyn Fn(usize, usize) -> usize) -> Result<(), DagError> {
        let d = self.len();
        for i in 0..d {
            if self.meta[i][i] != EffectKind::None {
                return Err(DagError::CycleDetected {
                    line: line_of(i, i),
                    nodes: vec![self.nodes[i].name.clone()],
                });
            }
        }
        if let Err(remaining) = kahn(&self.meta) {
            // any edge between two unresolved nodes lies on or feeds a cycle
            let set: BTreeSet<usize> = remaining.iter().copied().collect();
            let mut line = 0;
            'outer: for &i in &remaining {
                for &j in &remaining {
                    if self.meta[i][j] != EffectKind::None && set.contains(&j) {
                        line = line.max(line_of(i, j));
                        if line > 0 {
                            break 'outer;
                        }
                    }
                }
            }
            return Err(DagError::CycleDetected {
                line,
                nodes: remaining.iter().map(|&i| self.nodes[i].name.clone()).collect(),
            });
        }
        for j in 0..d {
            let column: Vec<EffectKind> = (0..d).map(|i| self.meta[i][j]).collect();
            let has_ci = column.contains(&EffectKind::ComplexIntercept);
            let has_shift = column
                .iter()
                .any(|e| matches!(e, EffectKind::LinearShift | EffectKind::ComplexShift));
            if has_ci && has_shift {
                let line = (0..d)
                    .filter(|&i| column[i] != EffectKind::None)
                    .map(|i| line_of(i, j))
                    .max()
                    .unwrap_or(0);
                return Err(DagError::MixedInterceptColumn {
                    line,
                    node: self.nodes[j].name.clone(),
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for DagSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl std::str::FromStr for DagSpec {
    type Err = DagError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_dag_spec(s)
    }
}

/// Kahn's algorithm picking the lowest ready index first. On a cycle, returns
/// the nodes that could not be ordered.
fn kahn(meta: &[Vec<EffectKind>]) -> Result<Vec<usize>, Vec<usize>> {
    let d = meta.len();
    let mut indegree: Vec<usize> = (0..d)
        .map(|j| (0..d).filter(|&i| meta[i][j] != EffectKind::None).count())
        .collect();
    let mut ready: BTreeSet<usize> = (0..d).filter(|&j| indegree[j] == 0).collect();
    let mut order = Vec::with_capacity(d);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for j in 0..d {
            if meta[v][j] != EffectKind::None {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    ready.insert(j);
                }
            }
        }
    }
    if order.len() == d {
        Ok(order)
    } else {
        let done: BTreeSet<usize> = order.into_iter().collect();
        Err((0..d).filter(|v| !done.contains(v)).collect())
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn validate_kind(kind: NodeKind, line: usize) -> Result<(), DagError> {
    if let NodeKind::Ordinal { levels } = kind {
        if levels < 2 {
            return Err(DagError::Syntax {
                line,
                message: format!("ordinal node needs at least 2 levels, got {levels}"),
            });
        }
    }
    Ok(())
}

struct PendingEdge {
    line: usize,
    from: String,
    to: String,
    effect: EffectKind,
}

/// Parses and validates the text form of a DAG spec.
pub fn parse_dag_spec(text: &str) -> Result<DagSpec, DagError> {
    let mut nodes: Vec<NodeDecl> = Vec::new();
    let mut edges: Vec<PendingEdge> = Vec::new();
    let mut options: Vec<(usize, String, usize)> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let syntax = |message: String| DagError::Syntax { line, message };
        let (keyword, rest) = match content.split_once(char::is_whitespace) {
            Some((k, r)) => (k, r.trim()),
            None => (content, ""),
        };
        match keyword {
            "node" => {
                let tokens: Vec<&str> = rest.split_whitespace().collect();
                let (name, kind) = match tokens.as_slice() {
                    [name, "continuous"] => (*name, NodeKind::Continuous),
                    [name, "binary"] => (*name, NodeKind::Binary),
                    [name, "ordinal", k] => {
                        let levels: usize = k
                            .parse()
                            .map_err(|_| syntax(format!("invalid level count `{k}`")))?;
                        (*name, NodeKind::Ordinal { levels })
                    }
                    _ => {
                        return Err(syntax(
                            "expected `node NAME continuous|binary|ordinal K`".to_string(),
                        ))
                    }
                };
                if !is_identifier(name) {
                    return Err(syntax(format!("invalid node name `{name}`")));
                }
                validate_kind(kind, line)?;
                if nodes.iter().any(|n| n.name == name) {
                    return Err(DagError::DuplicateNode { line, name: name.to_string() });
                }
                nodes.push(NodeDecl {
                    name: name.to_string(),
                    kind,
                    bernstein_order: DEFAULT_BERNSTEIN_ORDER,
                });
            }
            "edge" => {
                let (from, rest) = rest
                    .split_once("->")
                    .ok_or_else(|| syntax("expected `edge A -> B : ls|cs|ci`".to_string()))?;
                let (to, effect) = rest
                    .split_once(':')
                    .ok_or_else(|| syntax("missing `: EFFECT` in edge".to_string()))?;
                let (from, to, effect) = (from.trim(), to.trim(), effect.trim());
                for name in [from, to] {
                    if !is_identifier(name) {
                        return Err(syntax(format!("invalid node name `{name}`")));
                    }
                }
                let effect = EffectKind::parse(effect)
                    .ok_or_else(|| syntax(format!("unknown effect `{effect}`")))?;
                edges.push(PendingEdge { line, from: from.into(), to: to.into(), effect });
            }
            "set" => {
                let tokens: Vec<&str> = rest.split_whitespace().collect();
                match tokens.as_slice() {
                    [name, "bernstein_order", m] => {
                        let m: usize = m
                            .parse()
                            .ok()
                            .filter(|&m| m >= 1)
                            .ok_or_else(|| syntax(format!("invalid bernstein order `{m}`")))?;
                        options.push((line, name.to_string(), m));
                    }
                    _ => return Err(syntax("expected `set NAME bernstein_order M`".to_string())),
                }
            }
            other => return Err(syntax(format!("unknown statement `{other}`"))),
        }
    }

    let d = nodes.len();
    let mut meta = vec![vec![EffectKind::None; d]; d];
    let mut lines = vec![vec![0usize; d]; d];
    let lookup = |nodes: &[NodeDecl], name: &str, line: usize| {
        nodes
            .iter()
            .position(|n| n.name == name)
            .ok_or_else(|| DagError::UnknownNode { line, name: name.to_string() })
    };
    for e in &edges {
        let i = lookup(&nodes, &e.from, e.line)?;
        let j = lookup(&nodes, &e.to, e.line)?;
        if meta[i][j] != EffectKind::None {
            return Err(DagError::Syntax {
                line: e.line,
                message: format!("duplicate edge {} -> {}", e.from, e.to),
            });
        }
        meta[i][j] = e.effect;
        lines[i][j] = e.line;
    }
    for (line, name, m) in options {
        let i = lookup(&nodes, &name, line)?;
        if !nodes[i].kind.is_continuous() {
            return Err(DagError::Syntax {
                line,
                message: format!("bernstein_order applies to continuous nodes, `{name}` is not"),
            });
        }
        nodes[i].bernstein_order = m;
    }
    let spec = DagSpec { nodes, meta };
    spec.validate_structure(&|i, j| lines[i][j])?;
    Ok(spec)
}
