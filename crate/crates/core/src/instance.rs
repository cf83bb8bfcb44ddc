//! Instance and solution data model, validation, and the random generator.
//!
//! Indices are 0-based in memory. Files and human-facing messages are 1-based.

use std::collections::HashSet;
use std::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Version tag written into generated instance metadata.
pub const GENERATOR_VERSION: &str = "mba-gen-chacha8-v1";

/// Unvalidated instance payload. Every field is public so that malformed data
/// can be represented and reported by [`InstanceData::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceData {
    pub n: usize,
    pub m: usize,
    /// `weights[i][j]` is the weight of element `i` in layer `j`.
    pub weights: Vec<Vec<i64>>,
    /// `arcs[j]` holds the allowed pairs between layer `j` and layer `j + 1`.
    pub arcs: Vec<Vec<(usize, usize)>>,
}

/// Optional provenance recorded alongside generated instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator_version: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyDimension { field: &'static str },
    WeightShape { expected_rows: usize, expected_cols: usize, row: Option<usize> },
    NegativeWeight { element: usize, layer: usize, value: i64 },
    ArcLayerCount { expected: usize, found: usize },
    EndpointOutOfRange { layer: usize, arc: (usize, usize) },
    DuplicateArc { layer: usize, arc: (usize, usize) },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyDimension { field } => write!(f, "{field} must be at least 1"),
            Violation::WeightShape { expected_rows, expected_cols, row } => match row {
                Some(r) => write!(f, "weights row {} must have {expected_cols} entries", r + 1),
                None => write!(f, "weights must have {expected_rows} rows"),
            },
            Violation::NegativeWeight { element, layer, value } => write!(
                f,
                "negative weight {value} at ({}, {})",
                element + 1,
                layer + 1
            ),
            Violation::ArcLayerCount { expected, found } => {
                write!(f, "expected {expected} arc sets, found {found}")
            }
            Violation::EndpointOutOfRange { layer, arc } => write!(
                f,
                "endpoint out of range: arc ({}, {}) in layer {}",
                arc.0 + 1,
                arc.1 + 1,
                layer + 1
            ),
            Violation::DuplicateArc { layer, arc } => write!(
                f,
                "duplicate arc ({}, {}) in layer {}",
                arc.0 + 1,
                arc.1 + 1,
                layer + 1
            ),
        }
    }
}

impl InstanceData {
    /// Lists every invariant violation; an empty list means the data is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.n == 0 {
            out.push(Violation::EmptyDimension { field: "n" });
        }
        if self.m == 0 {
            out.push(Violation::EmptyDimension { field: "m" });
        }
        if self.weights.len() != self.n {
            out.push(Violation::WeightShape {
                expected_rows: self.n,
                expected_cols: self.m,
                row: None,
            });
        }
        for (i, row) in self.weights.iter().enumerate() {
            if row.len() != self.m {
                out.push(Violation::WeightShape {
                    expected_rows: self.n,
                    expected_cols: self.m,
                    row: Some(i),
                });
            }
            for (j, &w) in row.iter().enumerate() {
                if w < 0 {
                    out.push(Violation::NegativeWeight { element: i, layer: j, value: w });
                }
            }
        }
        let expected_layers = self.m.saturating_sub(1);
        if self.arcs.len() != expected_layers {
            out.push(Violation::ArcLayerCount { expected: expected_layers, found: self.arcs.len() });
        }
        for (j, layer) in self.arcs.iter().enumerate() {
            let mut seen = HashSet::with_capacity(layer.len());
            for &arc in layer {
                if arc.0 >= self.n || arc.1 >= self.n {
                    out.push(Violation::EndpointOutOfRange { layer: j, arc });
                } else if !seen.insert(arc) {
                    out.push(Violation::DuplicateArc { layer: j, arc });
                }
            }
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("invalid instance: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("infeasible solution: {0}")]
    Infeasible(Infeasibility),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// First violated solution constraint, reported 1-based in `Display`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Infeasibility {
    Shape { expected_tuples: usize, expected_layers: usize },
    ElementOutOfRange { tuple: usize, layer: usize, element: usize },
    NotAPermutation { layer: usize, element: usize },
    MissingArc { tuple: usize, layer: usize, arc: (usize, usize) },
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Infeasibility::Shape { expected_tuples, expected_layers } => {
                write!(f, "solution must have {expected_tuples} tuples of length {expected_layers}")
            }
            Infeasibility::ElementOutOfRange { tuple, layer, element } => write!(
                f,
                "tuple {} uses element {} in layer {}, out of range",
                tuple + 1,
                element + 1,
                layer + 1
            ),
            Infeasibility::NotAPermutation { layer, element } => write!(
                f,
                "layer {} uses element {} more than once",
                layer + 1,
                element + 1
            ),
            Infeasibility::MissingArc { tuple, layer, arc } => write!(
                f,
                "tuple {} uses arc ({}, {}) absent from layer {}",
                tuple + 1,
                arc.0 + 1,
                arc.1 + 1,
                layer + 1
            ),
        }
    }
}

/// Adjacency of a layered graph, derived once from the arc lists.
#[derive(Debug, Clone)]
pub struct LayeredGraph {
    n: usize,
    m: usize,
    successors: Vec<Vec<Vec<usize>>>,
    mask: Vec<Vec<bool>>,
}

impl LayeredGraph {
    pub fn new(n: usize, m: usize, arcs: &[Vec<(usize, usize)>]) -> Self {
        let mut successors = Vec::with_capacity(arcs.len());
        let mut mask = Vec::with_capacity(arcs.len());
        for layer in arcs {
            let mut succ = vec![Vec::new(); n];
            let mut bits = vec![false; n * n];
            for &(a, b) in layer {
                if !bits[a * n + b] {
                    bits[a * n + b] = true;
                    succ[a].push(b);
                }
            }
            for s in &mut succ {
                s.sort_unstable();
            }
            successors.push(succ);
            mask.push(bits);
        }
        LayeredGraph { n, m, successors, mask }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Sorted successors of element `i` of layer `layer` in layer `layer + 1`.
    pub fn successors(&self, layer: usize, i: usize) -> &[usize] {
        &self.successors[layer][i]
    }

    pub fn has_arc(&self, layer: usize, from: usize, to: usize) -> bool {
        self.mask[layer][from * self.n + to]
    }
}

/// A validated instance. Immutable after construction.
#[derive(Debug, Clone)]
pub struct MbaInstance {
    data: InstanceData,
    metadata: Option<InstanceMetadata>,
    graph: LayeredGraph,
}

impl PartialEq for MbaInstance {
    fn eq(&self, other: &Self) -> bool {
        self.data == other.data && self.metadata == other.metadata
    }
}

impl MbaInstance {
    pub fn new(data: InstanceData) -> Result<Self, InstanceError> {
        Self::with_metadata(data, None)
    }

    pub fn with_metadata(
        data: InstanceData,
        metadata: Option<InstanceMetadata>,
    ) -> Result<Self, InstanceError> {
        let violations = data.validate();
        if !violations.is_empty() {
            return Err(InstanceError::Invalid(violations));
        }
        let graph = LayeredGraph::new(data.n, data.m, &data.arcs);
        Ok(MbaInstance { data, metadata, graph })
    }

    /// Instance where every consecutive layer pair is completely connected.
    pub fn complete(weights: Vec<Vec<i64>>) -> Result<Self, InstanceError> {
        let n = weights.len();
        let m = weights.first().map_or(0, Vec::len);
        let full: Vec<(usize, usize)> =
            (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
        Self::new(InstanceData { n, m, weights, arcs: vec![full; m.saturating_sub(1)] })
    }

    pub fn n(&self) -> usize {
        self.data.n
    }

    pub fn m(&self) -> usize {
        self.data.m
    }

    pub fn weight(&self, element: usize, layer: usize) -> i64 {
        self.data.weights[element][layer]
    }

    pub fn weights(&self) -> &[Vec<i64>] {
        &self.data.weights
    }

    pub fn arcs(&self) -> &[Vec<(usize, usize)>] {
        &self.data.arcs
    }

    pub fn data(&self) -> &InstanceData {
        &self.data
    }

    pub fn metadata(&self) -> Option<&InstanceMetadata> {
        self.metadata.as_ref()
    }

    pub fn graph(&self) -> &LayeredGraph {
        &self.graph
    }

    /// Weights transposed to `columns[layer][element]`.
    pub fn columns(&self) -> Vec<Vec<i64>> {
        (0..self.m())
            .map(|j| (0..self.n()).map(|i| self.weight(i, j)).collect())
            .collect()
    }

    pub fn total_weight(&self) -> i64 {
        self.data.weights.iter().flatten().sum()
    }

    /// Checks every solution invariant, reporting the first violation found.
    pub fn check_solution(&self, sol: &MbaSolution) -> Result<(), Infeasibility> {
        let (n, m) = (self.n(), self.m());
        if sol.assign.len() != n || sol.assign.iter().any(|t| t.len() != m) {
            return Err(Infeasibility::Shape { expected_tuples: n, expected_layers: m });
        }
        for j in 0..m {
            let mut used = vec![false; n];
            for (k, tuple) in sol.assign.iter().enumerate() {
                let e = tuple[j];
                if e >= n {
                    return Err(Infeasibility::ElementOutOfRange { tuple: k, layer: j, element: e });
                }
                if std::mem::replace(&mut used[e], true) {
                    return Err(Infeasibility::NotAPermutation { layer: j, element: e });
                }
            }
        }
        for (k, tuple) in sol.assign.iter().enumerate() {
            for j in 0..m.saturating_sub(1) {
                if !self.graph.has_arc(j, tuple[j], tuple[j + 1]) {
                    return Err(Infeasibility::MissingArc {
                        tuple: k,
                        layer: j,
                        arc: (tuple[j], tuple[j + 1]),
                    });
                }
            }
        }
        Ok(())
    }

    /// Weight of the heaviest tuple, after checking feasibility.
    pub fn objective(&self, sol: &MbaSolution) -> Result<i64, InstanceError> {
        self.check_solution(sol).map_err(InstanceError::Infeasible)?;
        Ok(sol.tuple_weights(self).into_iter().max().unwrap_or(0))
    }

    /// Serializes to the `mba-v1` instance document.
    pub fn to_json_string(&self) -> String {
        crate::io::instance_to_string(self)
    }

    /// The identity tuples `(i, i, ..., i)`; feasible whenever all horizontal
    /// arcs are present.
    pub fn identity_solution(&self) -> MbaSolution {
        MbaSolution { assign: (0..self.n()).map(|i| vec![i; self.m()]).collect() }
    }
}

/// `assign[k][j]` is the element of layer `j` used by tuple `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MbaSolution {
    pub assign: Vec<Vec<usize>>,
}

impl MbaSolution {
    /// Builds a solution from layer-major assignments (`by_layer[j][k]`).
    pub fn from_layers(by_layer: &[Vec<usize>]) -> Self {
        let n = by_layer.first().map_or(0, Vec::len);
        MbaSolution {
            assign: (0..n).map(|k| by_layer.iter().map(|layer| layer[k]).collect()).collect(),
        }
    }

    /// Layer-major view: `result[j][k]`.
    pub fn layers(&self) -> Vec<Vec<usize>> {
        let m = self.assign.first().map_or(0, Vec::len);
        (0..m).map(|j| self.assign.iter().map(|t| t[j]).collect()).collect()
    }

    pub fn tuple_weights(&self, inst: &MbaInstance) -> Vec<i64> {
        self.assign
            .iter()
            .map(|t| t.iter().enumerate().map(|(j, &e)| inst.weight(e, j)).sum())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Feasible,
    TimeLimit,
    Infeasible,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::TimeLimit => "time_limit",
            SolveStatus::Infeasible => "infeasible",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub objective: Option<i64>,
    pub lower_bound: f64,
    pub status: SolveStatus,
    pub runtime_seconds: f64,
    pub node_or_iteration_count: u64,
}

/// Uniform integer in `[0, bound)` by rejection sampling on 64-bit draws.
fn uniform_below(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    assert!(bound > 0);
    // largest multiple of `bound` representable; draws at or above it are rejected
    let zone = u64::MAX - (u64::MAX % bound + 1) % bound;
    loop {
        let x = rng.next_u64();
        if x <= zone {
            return x % bound;
        }
    }
}

/// Number of random tuple walks for density `d`: `floor(d * n)`.
pub fn walk_count(n: usize, d: f64) -> usize {
    // the 1e-9 nudge keeps products like 2.2 * 30 from flooring to 65
    ((d * n as f64) + 1e-9).floor().max(0.0) as usize
}

/// Random instance following the experimental protocol: weights uniform in
/// `1..=max_weight`, all horizontal arcs, plus `floor(d n)` random
/// first-to-last-layer walks whose arcs are added if absent.
///
/// The stream is ChaCha8 seeded through `SeedableRng::seed_from_u64`; weights
/// are drawn row by row, then each walk draws one element per layer.
pub fn generate_random(n: usize, m: usize, d: f64, seed: u64, max_weight: u64) -> MbaInstance {
    assert!(n >= 1 && m >= 1, "n and m must be positive");
    assert!(max_weight >= 1, "max_weight must be positive");
    assert!(d >= 0.0 && d.is_finite(), "density must be a nonnegative number");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<Vec<i64>> = (0..n)
        .map(|_| (0..m).map(|_| 1 + uniform_below(&mut rng, max_weight) as i64).collect())
        .collect();
    let mut present = vec![vec![false; n * n]; m.saturating_sub(1)];
    for layer in present.iter_mut() {
        for i in 0..n {
            layer[i * n + i] = true;
        }
    }
    for _ in 0..walk_count(n, d) {
        let walk: Vec<usize> = (0..m).map(|_| uniform_below(&mut rng, n as u64) as usize).collect();
        for j in 0..m.saturating_sub(1) {
            present[j][walk[j] * n + walk[j + 1]] = true;
        }
    }
    let arcs = present
        .iter()
        .map(|bits| {
            (0..n * n).filter(|&x| bits[x]).map(|x| (x / n, x % n)).collect::<Vec<_>>()
        })
        .collect();
    let metadata = InstanceMetadata {
        seed: Some(seed),
        d: Some(d),
        generator_version: Some(GENERATOR_VERSION.to_string()),
    };
    MbaInstance::with_metadata(InstanceData { n, m, weights, arcs }, Some(metadata))
        .expect("generator output satisfies all invariants")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> MbaInstance {
        MbaInstance::complete(vec![vec![3, 4], vec![1, 2]]).unwrap()
    }

    #[test]
    fn well_formed_instance_validates() {
        assert!(two_by_two().data().validate().is_empty());
    }

    #[test]
    fn out_of_range_endpoint_is_reported() {
        let data = InstanceData {
            n: 2,
            m: 2,
            weights: vec![vec![1, 1], vec![1, 1]],
            arcs: vec![vec![(2, 0), (0, 0)]],
        };
        let v = data.validate();
        assert_eq!(v, vec![Violation::EndpointOutOfRange { layer: 0, arc: (2, 0) }]);
        assert!(v[0].to_string().contains("endpoint out of range"));
        assert!(v[0].to_string().contains("(3, 1)"));
    }

    #[test]
    fn negative_weight_is_reported() {
        let data = InstanceData {
            n: 2,
            m: 2,
            weights: vec![vec![-1, 1], vec![1, 1]],
            arcs: vec![vec![(0, 0), (1, 1)]],
        };
        let v = data.validate();
        assert_eq!(v, vec![Violation::NegativeWeight { element: 0, layer: 0, value: -1 }]);
        assert!(v[0].to_string().contains("negative weight"));
    }

    #[test]
    fn duplicate_arcs_and_bad_shapes_are_all_listed() {
        let data = InstanceData {
            n: 2,
            m: 3,
            weights: vec![vec![1, 1, 1], vec![1, 1]],
            arcs: vec![vec![(0, 1), (0, 1)]],
        };
        let v = data.validate();
        assert!(v.contains(&Violation::DuplicateArc { layer: 0, arc: (0, 1) }));
        assert!(v.contains(&Violation::ArcLayerCount { expected: 2, found: 1 }));
        assert!(v.iter().any(|x| matches!(x, Violation::WeightShape { row: Some(1), .. })));
    }

    #[test]
    fn objective_of_single_tuple_is_row_sum() {
        let inst = MbaInstance::new(InstanceData {
            n: 1,
            m: 3,
            weights: vec![vec![4, 5, 6]],
            arcs: vec![vec![(0, 0)], vec![(0, 0)]],
        })
        .unwrap();
        assert_eq!(inst.objective(&inst.identity_solution()).unwrap(), 15);
    }

    #[test]
    fn objective_of_two_by_two_pairing() {
        let inst = two_by_two();
        // column 1 = (3, 1), column 2 = (4, 2): pair 3 with 2 and 1 with 4
        let sol = MbaSolution { assign: vec![vec![0, 1], vec![1, 0]] };
        assert_eq!(inst.objective(&sol).unwrap(), 5);
        assert_eq!(inst.objective(&inst.identity_solution()).unwrap(), 7);
    }

    #[test]
    fn reused_element_is_infeasible() {
        let inst = two_by_two();
        let sol = MbaSolution { assign: vec![vec![0, 0], vec![1, 0]] };
        match inst.objective(&sol) {
            Err(InstanceError::Infeasible(Infeasibility::NotAPermutation { layer: 1, element: 0 })) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_arc_is_infeasible() {
        let inst = MbaInstance::new(InstanceData {
            n: 2,
            m: 2,
            weights: vec![vec![1, 1], vec![1, 1]],
            arcs: vec![vec![(0, 0), (1, 1)]],
        })
        .unwrap();
        let sol = MbaSolution { assign: vec![vec![0, 1], vec![1, 0]] };
        assert!(matches!(
            inst.check_solution(&sol),
            Err(Infeasibility::MissingArc { tuple: 0, layer: 0, arc: (0, 1) })
        ));
    }

    #[test]
    fn zero_density_only_adds_horizontal_arcs() {
        let inst = generate_random(2, 2, 0.0, 7, 100);
        assert_eq!(inst.arcs(), &[vec![(0, 0), (1, 1)]]);
    }

    #[test]
    fn generated_instance_respects_bounds() {
        let (n, m, d) = (10, 5, 1.8);
        let inst = generate_random(n, m, d, 42, 100);
        assert_eq!(inst.weights().iter().flatten().count(), 50);
        assert!(inst.weights().iter().flatten().all(|&w| (1..=100).contains(&w)));
        for layer in inst.arcs() {
            assert!((10..=28).contains(&layer.len()), "arc count {}", layer.len());
        }
        assert!(inst.check_solution(&inst.identity_solution()).is_ok());
    }

    #[test]
    fn generator_is_deterministic() {
        let a = generate_random(10, 5, 1.8, 42, 100);
        let b = generate_random(10, 5, 1.8, 42, 100);
        assert_eq!(a, b);
        assert_eq!(a.to_json_string(), b.to_json_string());
        assert_ne!(a, generate_random(10, 5, 1.8, 43, 100));
    }

    #[test]
    fn walk_count_floors() {
        assert_eq!(walk_count(10, 1.8), 18);
        assert_eq!(walk_count(30, 2.2), 66);
        assert_eq!(walk_count(3, 0.5), 1);
        assert_eq!(walk_count(7, 0.0), 0);
    }

    #[test]
    fn rejection_sampler_stays_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0usize; 3];
        for _ in 0..3000 {
            counts[uniform_below(&mut rng, 3) as usize] += 1;
        }
        assert!(counts.iter().all(|&c| c > 900), "{counts:?}");
    }
}
