//! Module dependency graphs, cluster labelings and the Modularization Quality
//! (MQ) fitness.
//!
//! A [`ModuleGraph`] is a directed, weighted graph over named modules. A
//! clustering is a [`ClusterLabels`] vector assigning every module a label in
//! `1..=D`. MQ sums a per-cluster modularization factor, `i / (i + j/2)`, where
//! `i` is the intra-cluster edge weight and `j` the weight of edges crossing
//! the cluster boundary in either direction.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Largest module count accepted by [`brute_force_optimum`].
pub const BRUTE_FORCE_MAX_MODULES: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdgError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid module name {0:?}")]
    InvalidName(String),
    #[error("unknown module index {0}")]
    UnknownModule(usize),
    #[error("edge weight must be positive, got {0}")]
    NonPositiveWeight(f64),
    #[error("self-loop on module {0:?}")]
    SelfLoop(String),
    #[error("duplicate edge {0:?} -> {1:?}")]
    DuplicateEdge(String, String),
    #[error("label vector has length {actual}, graph has {expected} modules")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("label {label} at position {position} is outside 1..={max}")]
    LabelOutOfRange {
        position: usize,
        label: usize,
        max: usize,
    },
    #[error("cluster {0} does not appear in the labeling")]
    ClusterNotPresent(usize),
    #[error("brute-force enumeration is limited to {max} modules, graph has {actual}")]
    TooLarge { max: usize, actual: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

/// Directed weighted module dependency graph.
///
/// Modules are kept in registration order; edges refer to modules by index.
#[derive(Debug, Clone, Default)]
pub struct ModuleGraph {
    names: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
}

impl PartialEq for ModuleGraph {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names && self.edges == other.edges
    }
}

impl ModuleGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a module, returning its index. Re-adding an existing name
    /// returns the existing index.
    pub fn add_module(&mut self, name: &str) -> Result<usize, MdgError> {
        if let Some(&i) = self.index.get(name) {
            return Ok(i);
        }
        if name.is_empty() || name.chars().any(char::is_whitespace) || name.starts_with('#') {
            return Err(MdgError::InvalidName(name.to_string()));
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        Ok(i)
    }

    pub fn add_edge(&mut self, source: usize, target: usize, weight: f64) -> Result<(), MdgError> {
        let n = self.names.len();
        for endpoint in [source, target] {
            if endpoint >= n {
                return Err(MdgError::UnknownModule(endpoint));
            }
        }
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(MdgError::NonPositiveWeight(weight));
        }
        if source == target {
            return Err(MdgError::SelfLoop(self.names[source].clone()));
        }
        if self
            .edges
            .iter()
            .any(|e| e.source == source && e.target == target)
        {
            return Err(MdgError::DuplicateEdge(
                self.names[source].clone(),
                self.names[target].clone(),
            ));
        }
        self.edges.push(Edge {
            source,
            target,
            weight,
        });
        Ok(())
    }

    /// Adds an edge between named modules, registering them if needed.
    pub fn add_named_edge(&mut self, source: &str, target: &str, weight: f64) -> Result<(), MdgError> {
        let s = self.add_module(source)?;
        let t = self.add_module(target)?;
        self.add_edge(s, t, weight)
    }

    /// Number of modules, the problem dimension `D`.
    pub fn module_count(&self) -> usize {
        self.names.len()
    }

    pub fn module_names(&self) -> &[String] {
        &self.names
    }

    pub fn module_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Serializes to the MDG text format. Every module is declared on its own
    /// line first so that parsing the output restores the module order.
    pub fn to_mdg_string(&self) -> String {
        let mut out = String::new();
        for name in &self.names {
            out.push_str(name);
            out.push('\n');
        }
        for e in &self.edges {
            out.push_str(&format!(
                "{} {} {}\n",
                self.names[e.source], self.names[e.target], e.weight
            ));
        }
        out
    }
}

/// Parses MDG text.
///
/// Each non-blank line is `SOURCE TARGET [WEIGHT]` (an edge, weight defaults
/// to 1) or a lone `NAME` (a module, possibly isolated). `#` starts a comment
/// line. Modules are numbered in order of first appearance.
pub fn parse_mdg(text: &str) -> Result<ModuleGraph, MdgError> {
    let mut graph = ModuleGraph::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = |e: MdgError| MdgError::Parse {
            line: line_no,
            message: e.to_string(),
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [name] => {
                graph.add_module(name).map_err(at)?;
            }
            [source, target] => graph.add_named_edge(source, target, 1.0).map_err(at)?,
            [source, target, weight] => {
                let w: f64 = weight.parse().map_err(|_| MdgError::Parse {
                    line: line_no,
                    message: format!("weight {weight:?} is not a number"),
                })?;
                graph.add_named_edge(source, target, w).map_err(at)?
            }
            _ => {
                return Err(MdgError::Parse {
                    line: line_no,
                    message: format!("expected 1 to 3 tokens, found {}", tokens.len()),
                })
            }
        }
    }
    Ok(graph)
}

/// Cluster label per module, each in `1..=D`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClusterLabels(Vec<usize>);

impl ClusterLabels {
    /// Validates labels against a graph of `module_count` modules.
    pub fn new(labels: Vec<usize>, module_count: usize) -> Result<Self, MdgError> {
        if labels.len() != module_count {
            return Err(MdgError::DimensionMismatch {
                expected: module_count,
                actual: labels.len(),
            });
        }
        if let Some((position, &label)) = labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l == 0 || l > module_count)
        {
            return Err(MdgError::LabelOutOfRange {
                position,
                label,
                max: module_count,
            });
        }
        Ok(Self(labels))
    }

    /// Wraps labels already known to lie in `1..=len`.
    pub(crate) fn from_vec_unchecked(labels: Vec<usize>) -> Self {
        debug_assert!(labels.iter().all(|&l| l >= 1 && l <= labels.len()));
        Self(labels)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    /// Number of distinct (non-empty) clusters.
    pub fn cluster_count(&self) -> usize {
        let mut seen = vec![false; self.0.len() + 1];
        self.0
            .iter()
            .filter(|&&l| !std::mem::replace(&mut seen[l], true))
            .count()
    }

    /// Number of positions at which two labelings differ.
    pub fn hamming(&self, other: &ClusterLabels) -> usize {
        self.0
            .iter()
            .zip(&other.0)
            .filter(|(a, b)| a != b)
            .count()
    }
}

impl fmt::Display for ClusterLabels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "]")
    }
}

/// Intra-cluster (`i`) and inter-cluster (`j`) edge weight of one cluster.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntraInterWeights {
    pub intra: f64,
    pub inter: f64,
}

fn check_dimension(graph: &ModuleGraph, labels: &ClusterLabels) -> Result<(), MdgError> {
    if labels.len() != graph.module_count() {
        return Err(MdgError::DimensionMismatch {
            expected: graph.module_count(),
            actual: labels.len(),
        });
    }
    Ok(())
}

pub fn cluster_weights(
    graph: &ModuleGraph,
    labels: &ClusterLabels,
    cluster: usize,
) -> Result<IntraInterWeights, MdgError> {
    check_dimension(graph, labels)?;
    let l = labels.as_slice();
    if !l.contains(&cluster) {
        return Err(MdgError::ClusterNotPresent(cluster));
    }
    let mut w = IntraInterWeights::default();
    for e in graph.edges() {
        match (l[e.source] == cluster, l[e.target] == cluster) {
            (true, true) => w.intra += e.weight,
            (true, false) | (false, true) => w.inter += e.weight,
            (false, false) => {}
        }
    }
    Ok(w)
}

/// `0` when the cluster has no internal weight, otherwise `i / (i + j/2)`.
pub fn modularization_factor(w: IntraInterWeights) -> f64 {
    if w.intra == 0.0 {
        0.0
    } else {
        w.intra / (w.intra + 0.5 * w.inter)
    }
}

/// Modularization Quality of a labeling.
pub fn mq(graph: &ModuleGraph, labels: &ClusterLabels) -> Result<f64, MdgError> {
    check_dimension(graph, labels)?;
    Ok(mq_raw(graph, labels.as_slice()))
}

/// MQ for a label slice with values in `1..=D`. Clusters are summed in label
/// order; empty labels contribute nothing.
pub(crate) fn mq_raw(graph: &ModuleGraph, labels: &[usize]) -> f64 {
    let mut weights = vec![IntraInterWeights::default(); labels.len() + 1];
    for e in graph.edges() {
        let (ls, lt) = (labels[e.source], labels[e.target]);
        if ls == lt {
            weights[ls].intra += e.weight;
        } else {
            weights[ls].inter += e.weight;
            weights[lt].inter += e.weight;
        }
    }
    weights.into_iter().map(modularization_factor).sum()
}

/// Renumbers clusters by order of first appearance.
pub fn canonicalize(labels: &ClusterLabels) -> ClusterLabels {
    ClusterLabels(canonical_vec(labels.as_slice()))
}

pub(crate) fn canonical_vec(labels: &[usize]) -> Vec<usize> {
    let mut mapping = vec![0usize; labels.len() + 1];
    let mut next = 0;
    labels
        .iter()
        .map(|&l| {
            if mapping[l] == 0 {
                next += 1;
                mapping[l] = next;
            }
            mapping[l]
        })
        .collect()
}

/// Exhaustive search over all set partitions of the modules.
///
/// Partitions are visited as restricted growth strings in lexicographic
/// order, so the first labeling reaching the maximum is the lexicographically
/// smallest canonical optimum. Values within `1e-12` of the incumbent count
/// as ties.
pub fn brute_force_optimum(graph: &ModuleGraph) -> Result<(ClusterLabels, f64), MdgError> {
    let d = graph.module_count();
    if d > BRUTE_FORCE_MAX_MODULES {
        return Err(MdgError::TooLarge {
            max: BRUTE_FORCE_MAX_MODULES,
            actual: d,
        });
    }
    if d == 0 {
        return Ok((ClusterLabels(Vec::new()), 0.0));
    }

    let mut best_labels = vec![1; d];
    let mut best_mq = mq_raw(graph, &best_labels);
    for_each_partition(d, |labels| {
        let value = mq_raw(graph, labels);
        if value > best_mq + 1e-12 {
            best_mq = value;
            best_labels.copy_from_slice(labels);
        }
    });
    Ok((ClusterLabels(best_labels), best_mq))
}

/// Calls `visit` with every restricted growth string of length `d` (labels
/// starting at 1), in lexicographic order.
pub fn for_each_partition(d: usize, mut visit: impl FnMut(&[usize])) {
    if d == 0 {
        visit(&[]);
        return;
    }
    let mut labels = vec![1usize; d];
    // prefix_max[i] = max(labels[..=i])
    let mut prefix_max = vec![1usize; d];
    loop {
        visit(&labels);
        // rightmost position that can still grow
        let mut i = d - 1;
        loop {
            if i == 0 {
                return;
            }
            if labels[i] <= prefix_max[i - 1] {
                break;
            }
            i -= 1;
        }
        labels[i] += 1;
        prefix_max[i] = prefix_max[i - 1].max(labels[i]);
        for k in i + 1..d {
            labels[k] = 1;
            prefix_max[k] = prefix_max[k - 1];
        }
    }
}
