//! Gap reduction from three-dimensional matching.
//!
//! A 3DM instance with `q` elements per side and `p` triples becomes an MBA
//! instance with `m = 3u` columns, grouped into `u` layers of three columns.
//! Layers are numbered from the right: layer `k` occupies 0-based columns
//! `3(u-k) .. 3(u-k)+2`, so layer `u` is leftmost. Each layer holds one gadget
//! of `q^(k-1) p^(u-k)` blocks; the gadget in layer 1 is `G0` (its head
//! T-sub-blocks in the third column weigh 1), all others are `G1`. Z-nodes
//! weigh 1 everywhere. YES instances admit objective 1, NO instances force
//! `u + 1`.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{brute_force, solve_exact, ExactError};
use crate::instance::{InstanceData, InstanceError, MbaInstance, SolveStatus};

/// Largest `q` accepted by [`solve_3dm_bruteforce`].
pub const BRUTE_FORCE_MAX_Q: usize = 8;

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("q must be positive")]
    EmptyGroundSet,
    #[error("triple {index} has coordinate outside 1..={q}")]
    CoordinateOutOfRange { index: usize, q: usize },
    #[error("triple {0} appears twice")]
    DuplicateTriple(usize),
    #[error("fewer triples ({p}) than elements per side ({q})")]
    TooFewTriples { p: usize, q: usize },
    #[error("y{0} occurs in no triple")]
    UnusedY(usize),
    #[error("u must be at least 1")]
    ZeroLayers,
    #[error("brute force is limited to q <= {BRUTE_FORCE_MAX_Q} (got {0})")]
    TooLarge(usize),
    #[error("3DM parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Solver(#[from] ExactError),
}

/// `q` elements per side and triples with 0-based coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreeDmInstance {
    q: usize,
    triples: Vec<(usize, usize, usize)>,
}

impl ThreeDmInstance {
    /// `triples` use 1-based coordinates as in the file format.
    pub fn new(q: usize, triples: &[(usize, usize, usize)]) -> Result<Self, ReductionError> {
        if q == 0 {
            return Err(ReductionError::EmptyGroundSet);
        }
        let mut seen = HashSet::new();
        let mut zero_based = Vec::with_capacity(triples.len());
        for (index, &(x, y, z)) in triples.iter().enumerate() {
            if [x, y, z].iter().any(|&c| c == 0 || c > q) {
                return Err(ReductionError::CoordinateOutOfRange { index: index + 1, q });
            }
            if !seen.insert((x, y, z)) {
                return Err(ReductionError::DuplicateTriple(index + 1));
            }
            zero_based.push((x - 1, y - 1, z - 1));
        }
        if triples.len() < q {
            return Err(ReductionError::TooFewTriples { p: triples.len(), q });
        }
        Ok(ThreeDmInstance { q, triples: zero_based })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn p(&self) -> usize {
        self.triples.len()
    }

    pub fn d(&self) -> usize {
        self.p() - self.q
    }

    /// 0-based triples.
    pub fn triples(&self) -> &[(usize, usize, usize)] {
        &self.triples
    }

    pub fn occurrences_y(&self, y: usize) -> usize {
        self.triples.iter().filter(|t| t.1 == y).count()
    }

    /// Parses `q` followed by one 1-based triple per line. Blank lines and
    /// `#` comments are ignored; coordinates may be separated by commas.
    pub fn parse(text: &str) -> Result<Self, ReductionError> {
        let mut q = None;
        let mut triples = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ReductionError::Parse { line: idx + 1, message };
            let fields: Vec<usize> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<usize>().map_err(|e| err(format!("`{s}`: {e}"))))
                .collect::<Result<_, _>>()?;
            match (q, fields.as_slice()) {
                (None, &[v]) => q = Some(v),
                (None, _) => return Err(err("expected q alone on the first line".into())),
                (Some(_), &[x, y, z]) => triples.push((x, y, z)),
                (Some(_), _) => return Err(err(format!("expected 3 coordinates, found {}", fields.len()))),
            }
        }
        let q = q.ok_or(ReductionError::Parse { line: 0, message: "missing q".into() })?;
        Self::new(q, &triples)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, ReductionError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ReductionError::Instance(InstanceError::Io(e)))?;
        Self::parse(&text)
    }

    /// The worked example: t1 = (1,1,1), t2 = (2,2,2), t3 = (1,2,1), q = 2.
    pub fn example() -> Self {
        Self::new(2, &[(1, 1, 1), (2, 2, 2), (1, 2, 1)]).expect("valid example")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    X,
    Y,
    Z,
    THead,
    TTail,
    Dummy,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NodeKind::X => "X",
            NodeKind::Y => "Y",
            NodeKind::Z => "Z",
            NodeKind::THead => "T-head",
            NodeKind::TTail => "T-tail",
            NodeKind::Dummy => "dummy",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gadget {
    G0,
    G1,
}

/// Provenance of one node. `layer` is 1-based and counted from the right,
/// `t` is the column within the layer (1..=3), `block` is 0-based.
/// `source` is the 0-based element (X, Y, Z) or triple (T) index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeMeta {
    pub layer: usize,
    pub t: usize,
    pub kind: NodeKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ReductionOutput {
    pub tdm: ThreeDmInstance,
    pub u: usize,
    pub instance: MbaInstance,
    /// `meta[column][element]`.
    pub meta: Vec<Vec<NodeMeta>>,
    /// `layer_heights[k - 1]` is the block count of layer `k`.
    pub layer_heights: Vec<usize>,
    pub gadgets: Vec<Gadget>,
}

/// 0-based column of position `t` (1..=3) in layer `k` (1..=u).
pub fn column_of(u: usize, k: usize, t: usize) -> usize {
    3 * (u - k) + t - 1
}

pub fn layer_height(tdm: &ThreeDmInstance, u: usize, k: usize) -> usize {
    tdm.q.pow(k as u32 - 1) * tdm.p().pow((u - k) as u32)
}

/// Non-dummy node count of one column of layer `k`.
fn nondummy_per_column(tdm: &ThreeDmInstance, u: usize, k: usize) -> usize {
    tdm.q + 2 * tdm.p() * layer_height(tdm, u, k)
}

/// Node indices of one layer, by sub-block.
#[derive(Default)]
struct LayerNodes {
    z: Vec<Vec<usize>>,
    y: Vec<Vec<usize>>,
    tail1: Vec<Vec<usize>>,
    head2: Vec<Vec<usize>>,
    tail2: Vec<Vec<usize>>,
    head3: Vec<Vec<usize>>,
    tail3: Vec<Vec<usize>>,
    x: [Vec<usize>; 3],
    dummy: [Vec<usize>; 3],
}

struct Column {
    meta: Vec<NodeMeta>,
}

impl Column {
    fn push(&mut self, meta: NodeMeta) -> usize {
        self.meta.push(meta);
        self.meta.len() - 1
    }
}

pub fn build_reduction(tdm: &ThreeDmInstance, u: usize) -> Result<ReductionOutput, ReductionError> {
    if u == 0 {
        return Err(ReductionError::ZeroLayers);
    }
    let (q, p) = (tdm.q, tdm.p());
    if let Some(y) = (0..q).find(|&y| tdm.occurrences_y(y) == 0) {
        return Err(ReductionError::UnusedY(y + 1));
    }
    let m = 3 * u;
    let heights: Vec<usize> = (1..=u).map(|k| layer_height(tdm, u, k)).collect();
    let gadgets: Vec<Gadget> = (1..=u).map(|k| if k == 1 { Gadget::G0 } else { Gadget::G1 }).collect();
    let total_nondummy: usize = (1..=u).map(|k| nondummy_per_column(tdm, u, k)).sum();

    // Y-sub-block: #occ(y) - 1 copies of each y, in element order
    let y_nodes: Vec<usize> =
        (0..q).flat_map(|y| std::iter::repeat_n(y, tdm.occurrences_y(y) - 1)).collect();

    let mut columns: Vec<Column> = (0..m).map(|_| Column { meta: Vec::new() }).collect();
    let mut layers: Vec<LayerNodes> = (0..u).map(|_| LayerNodes::default()).collect();
    for k in 1..=u {
        let h = heights[k - 1];
        let nodes = &mut layers[k - 1];
        let meta = |t, kind, block, source| NodeMeta { layer: k, t, kind, block, source };
        let [c1, c2, c3] = [1, 2, 3].map(|t| column_of(u, k, t));
        for j in 0..h {
            let col = &mut columns[c1];
            nodes.z.push((0..q).map(|z| col.push(meta(1, NodeKind::Z, Some(j), Some(z)))).collect());
            nodes.y.push(y_nodes.iter().map(|&y| col.push(meta(1, NodeKind::Y, Some(j), Some(y)))).collect());
            nodes.tail1.push((0..p).map(|s| col.push(meta(1, NodeKind::TTail, Some(j), Some(s)))).collect());
            let col = &mut columns[c2];
            nodes.head2.push((0..p).map(|s| col.push(meta(2, NodeKind::THead, Some(j), Some(s)))).collect());
            nodes.tail2.push((0..p).map(|s| col.push(meta(2, NodeKind::TTail, Some(j), Some(s)))).collect());
            let col = &mut columns[c3];
            nodes.head3.push((0..p).map(|s| col.push(meta(3, NodeKind::THead, Some(j), Some(s)))).collect());
            nodes.tail3.push((0..p).map(|s| col.push(meta(3, NodeKind::TTail, Some(j), Some(s)))).collect());
        }
        let dummies = total_nondummy - nondummy_per_column(tdm, u, k);
        for (slot, c) in [c1, c2, c3].into_iter().enumerate() {
            let t = slot + 1;
            let col = &mut columns[c];
            nodes.x[slot] = (0..q).map(|x| col.push(meta(t, NodeKind::X, None, Some(x)))).collect();
            nodes.dummy[slot] = (0..dummies).map(|_| col.push(meta(t, NodeKind::Dummy, None, None))).collect();
        }
    }
    let n = total_nondummy;
    debug_assert!(columns.iter().all(|c| c.meta.len() == n));

    let mut arcs: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m - 1];
    let complete = |arcs: &mut Vec<(usize, usize)>, from: &[usize], to: &[usize]| {
        for &a in from {
            for &b in to {
                arcs.push((a, b));
            }
        }
    };
    let triples = tdm.triples();
    for k in 1..=u {
        let nodes = &layers[k - 1];
        let h = heights[k - 1];
        let a12 = column_of(u, k, 1);
        let a23 = column_of(u, k, 2);
        for j in 0..h {
            for (s, &(_, y, z)) in triples.iter().enumerate() {
                arcs[a12].push((nodes.z[j][z], nodes.head2[j][s]));
                for (idx, &yy) in y_nodes.iter().enumerate() {
                    if yy == y {
                        arcs[a12].push((nodes.y[j][idx], nodes.head2[j][s]));
                    }
                }
                arcs[a12].push((nodes.tail1[j][s], nodes.tail2[j][s]));

                arcs[a23].push((nodes.head2[j][s], nodes.head3[j][s]));
                arcs[a23].push((nodes.tail2[j][s], nodes.head3[j][s]));
                arcs[a23].push((nodes.tail2[j][s], nodes.tail3[j][s]));
                if j + 1 < h {
                    arcs[a23].push((nodes.head2[j + 1][s], nodes.tail3[j][s]));
                }
            }
        }
        for (s, &(x, _, _)) in triples.iter().enumerate() {
            arcs[a23].push((nodes.head2[0][s], nodes.x[2][x]));
            arcs[a23].push((nodes.x[1][x], nodes.tail3[h - 1][s]));
        }
        for x in 0..q {
            arcs[a12].push((nodes.x[0][x], nodes.x[1][x]));
        }
        complete(&mut arcs[a12], &nodes.dummy[0], &nodes.dummy[1]);
        complete(&mut arcs[a23], &nodes.dummy[1], &nodes.dummy[2]);

        if k == u {
            continue;
        }
        // layer k + 1 sits directly to the left of layer k
        let left = &layers[k];
        let between = column_of(u, k + 1, 3);
        let block_z = q.pow(k as u32 - 1);
        let group_nodes = block_z * q;
        let groups = p.pow((u - k) as u32);
        for batch in 0..groups / p {
            for g in 0..p {
                let group = batch * p + g;
                for l in 0..group_nodes {
                    let z_node = nodes.z[group * block_z + l / q][l % q];
                    for &t_node in &left.head3[batch * group_nodes + l] {
                        arcs[between].push((t_node, z_node));
                    }
                }
            }
        }
        let mut into_dummy: Vec<usize> = left.tail3.iter().flatten().copied().collect();
        into_dummy.extend(&left.x[2]);
        into_dummy.extend(&left.dummy[2]);
        complete(&mut arcs[between], &into_dummy, &nodes.dummy[0]);
        let mut from_dummy: Vec<usize> = nodes.y.iter().flatten().copied().collect();
        from_dummy.extend(nodes.tail1.iter().flatten());
        from_dummy.extend(&nodes.x[0]);
        complete(&mut arcs[between], &left.dummy[2], &from_dummy);
    }
    for layer in arcs.iter_mut() {
        layer.sort_unstable();
    }

    let mut weights = vec![vec![0i64; m]; n];
    for k in 1..=u {
        let nodes = &layers[k - 1];
        for &z in nodes.z.iter().flatten() {
            weights[z][column_of(u, k, 1)] = 1;
        }
        if gadgets[k - 1] == Gadget::G0 {
            for &t in nodes.head3.iter().flatten() {
                weights[t][column_of(u, k, 3)] = 1;
            }
        }
    }
    let instance = MbaInstance::new(InstanceData { n, m, weights, arcs })?;
    Ok(ReductionOutput {
        tdm: tdm.clone(),
        u,
        instance,
        meta: columns.into_iter().map(|c| c.meta).collect(),
        layer_heights: heights,
        gadgets,
    })
}

/// Sizes recomputed from node metadata, with any mismatch against the
/// construction's formulas.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountReport {
    /// Node count per layer (three columns each), indexed by `k - 1`.
    pub layer_totals: Vec<usize>,
    /// Non-dummy node count per layer.
    pub nondummy_totals: Vec<usize>,
    /// `u (3q + 6 p^(u+1))`.
    pub bound: usize,
    pub mismatches: Vec<String>,
}

impl CountReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

pub fn count_check(out: &ReductionOutput) -> CountReport {
    let tdm = &out.tdm;
    let (q, p, d, u) = (tdm.q, tdm.p(), tdm.d(), out.u);
    let mut mismatches = Vec::new();
    let m = 3 * u;
    if out.instance.m() != m || out.meta.len() != m {
        mismatches.push(format!("expected {m} columns, instance has {} and metadata {}", out.instance.m(), out.meta.len()));
    }
    let bound = u * (3 * q + 6 * p.pow(u as u32 + 1));
    let mut layer_totals = vec![0; u];
    let mut nondummy_totals = vec![0; u];
    let expected_n: usize = (1..=u).map(|k| nondummy_per_column(tdm, u, k)).sum();

    for (c, metas) in out.meta.iter().enumerate() {
        if metas.len() != out.instance.n() {
            mismatches.push(format!("column {} has {} nodes, expected {}", c + 1, metas.len(), out.instance.n()));
        }
        let Some(first) = metas.first() else { continue };
        let k = first.layer;
        if k == 0 || k > u || column_of(u, k, first.t) != c {
            mismatches.push(format!("column {} carries metadata for layer {k}, t {}", c + 1, first.t));
            continue;
        }
        let t = first.t;
        layer_totals[k - 1] += metas.len();
        let h = layer_height(tdm, u, k);
        if out.layer_heights.get(k - 1) != Some(&h) {
            mismatches.push(format!("layer {k} height {:?}, expected {h}", out.layer_heights.get(k - 1)));
        }
        let mut per_block = std::collections::HashMap::new();
        let (mut x, mut dummies) = (0, 0);
        for meta in metas {
            if meta.layer != k || meta.t != t {
                mismatches.push(format!("column {} mixes layers", c + 1));
                break;
            }
            match (meta.kind, meta.block) {
                (NodeKind::X, _) => x += 1,
                (NodeKind::Dummy, _) => dummies += 1,
                (kind, Some(j)) => *per_block.entry((j, kind)).or_insert(0usize) += 1,
                (kind, None) => mismatches.push(format!("{kind} node without block in column {}", c + 1)),
            }
        }
        nondummy_totals[k - 1] += metas.len() - dummies;
        if x != q {
            mismatches.push(format!("column {}: X-sub-block has {x} nodes, expected {q}", c + 1));
        }
        let expected_dummies = expected_n - nondummy_per_column(tdm, u, k);
        if dummies != expected_dummies {
            mismatches.push(format!("column {}: {dummies} dummy nodes, expected {expected_dummies}", c + 1));
        }
        let kinds: &[(NodeKind, usize)] = match t {
            1 => &[(NodeKind::Z, q), (NodeKind::Y, d), (NodeKind::TTail, p)],
            _ => &[(NodeKind::THead, p), (NodeKind::TTail, p)],
        };
        for j in 0..h {
            for &(kind, size) in kinds {
                let found = per_block.get(&(j, kind)).copied().unwrap_or(0);
                if found != size {
                    mismatches.push(format!("column {}, block {j}: {kind}-sub-block has {found} nodes, expected {size}", c + 1));
                }
            }
        }
        let blocks = per_block.keys().map(|&(j, _)| j + 1).max().unwrap_or(0);
        if blocks > h {
            mismatches.push(format!("column {} has {blocks} blocks, expected {h}", c + 1));
        }
    }
    for k in 1..=u {
        // 3q + 6 p h_k plus the same term for every other layer
        let formula: usize = (1..=u).map(|kk| 3 * q + 6 * p * layer_height(tdm, u, kk)).sum();
        if layer_totals[k - 1] != formula {
            mismatches.push(format!("layer {k} has {} nodes, formula gives {formula}", layer_totals[k - 1]));
        }
        let own = 3 * q + 6 * p * layer_height(tdm, u, k);
        if nondummy_totals[k - 1] != own {
            mismatches.push(format!("layer {k} has {} non-dummy nodes, expected {own}", nondummy_totals[k - 1]));
        }
        if layer_totals[k - 1] > bound {
            mismatches.push(format!("layer {k} has {} nodes, above the bound {bound}", layer_totals[k - 1]));
        }
    }
    let weights_ok = out.instance.weights().iter().flatten().all(|&w| w == 0 || w == 1);
    if !weights_ok {
        mismatches.push("weights outside {0, 1}".into());
    }
    CountReport { layer_totals, nondummy_totals, bound, mismatches }
}

/// A perfect 3D matching as 0-based triple indices, or `None` for NO.
pub fn solve_3dm_bruteforce(tdm: &ThreeDmInstance) -> Result<Option<Vec<usize>>, ReductionError> {
    let q = tdm.q;
    if q > BRUTE_FORCE_MAX_Q {
        return Err(ReductionError::TooLarge(q));
    }
    fn extend(
        tdm: &ThreeDmInstance,
        x: usize,
        used_y: &mut [bool],
        used_z: &mut [bool],
        chosen: &mut Vec<usize>,
    ) -> bool {
        if x == tdm.q {
            return true;
        }
        for (s, &(tx, ty, tz)) in tdm.triples.iter().enumerate() {
            if tx != x || used_y[ty] || used_z[tz] {
                continue;
            }
            used_y[ty] = true;
            used_z[tz] = true;
            chosen.push(s);
            if extend(tdm, x + 1, used_y, used_z, chosen) {
                return true;
            }
            chosen.pop();
            used_y[ty] = false;
            used_z[tz] = false;
        }
        false
    }
    let mut chosen = Vec::with_capacity(q);
    let found = extend(tdm, 0, &mut vec![false; q], &mut vec![false; q], &mut chosen);
    Ok(found.then_some(chosen))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapSolver {
    Exact { time_limit: Option<Duration> },
    BruteForce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GapOutcome {
    /// The measured objective equals the predicted one.
    Confirmed,
    /// The solver finished and disagrees (including an infeasible instance).
    Contradicted,
    /// The solver ran out of time before proving optimality.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapVerdict {
    pub yes: bool,
    pub witness: Option<Vec<usize>>,
    pub expected: i64,
    pub objective: Option<i64>,
    pub status: String,
    pub outcome: GapOutcome,
    pub n: usize,
    pub m: usize,
}

/// Builds the reduction, solves it, and compares with the predicted gap value.
pub fn verify_gap(
    tdm: &ThreeDmInstance,
    u: usize,
    solver: GapSolver,
) -> Result<GapVerdict, ReductionError> {
    let witness = solve_3dm_bruteforce(tdm)?;
    let yes = witness.is_some();
    let expected = if yes { 1 } else { u as i64 + 1 };
    let out = build_reduction(tdm, u)?;
    let inst = &out.instance;
    let (objective, status) = match solver {
        GapSolver::Exact { time_limit } => {
            let r = solve_exact(inst, time_limit, None);
            (r.report.objective, r.report.status)
        }
        GapSolver::BruteForce => match brute_force(inst) {
            Ok((v, _)) => (Some(v), SolveStatus::Optimal),
            Err(ExactError::Infeasible) => (None, SolveStatus::Infeasible),
            Err(e) => return Err(e.into()),
        },
    };
    let outcome = match status {
        SolveStatus::Optimal if objective == Some(expected) => GapOutcome::Confirmed,
        SolveStatus::Optimal | SolveStatus::Infeasible => GapOutcome::Contradicted,
        // an incumbent already at the prediction settles the YES side
        _ if yes && objective == Some(expected) => GapOutcome::Confirmed,
        _ => GapOutcome::Inconclusive,
    };
    Ok(GapVerdict {
        yes,
        witness,
        expected,
        objective,
        status: status.to_string(),
        outcome,
        n: inst.n(),
        m: inst.m(),
    })
}

/// Sidecar document mapping each node to its provenance.
#[derive(Debug, Serialize, Deserialize)]
pub struct ReductionSidecar {
    pub q: usize,
    pub p: usize,
    pub u: usize,
    pub triples: Vec<(usize, usize, usize)>,
    pub layer_heights: Vec<usize>,
    pub gadgets: Vec<Gadget>,
    /// `meta[column][element]`, both 0-based.
    pub meta: Vec<Vec<NodeMeta>>,
}

impl ReductionOutput {
    pub fn sidecar(&self) -> ReductionSidecar {
        ReductionSidecar {
            q: self.tdm.q,
            p: self.tdm.p(),
            u: self.u,
            triples: self.tdm.triples.iter().map(|&(x, y, z)| (x + 1, y + 1, z + 1)).collect(),
            layer_heights: self.layer_heights.clone(),
            gadgets: self.gadgets.clone(),
            meta: self.meta.clone(),
        }
    }

    pub fn sidecar_json(&self) -> String {
        serde_json::to_string_pretty(&self.sidecar()).expect("metadata serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_instance() -> ThreeDmInstance {
        ThreeDmInstance::new(2, &[(1, 1, 1), (1, 2, 1), (2, 1, 1)]).unwrap()
    }

    #[test]
    fn example_heights_and_sizes() {
        let out = build_reduction(&ThreeDmInstance::example(), 2).unwrap();
        assert_eq!(out.layer_heights, vec![3, 2]);
        assert_eq!(out.gadgets, vec![Gadget::G0, Gadget::G1]);
        assert_eq!(out.instance.n(), 34);
        assert_eq!(out.instance.m(), 6);
        let report = count_check(&out);
        assert!(report.passed(), "{:?}", report.mismatches);
        assert_eq!(report.nondummy_totals, vec![60, 42]);
        assert_eq!(report.layer_totals, vec![102, 102]);
        assert_eq!(report.bound, 336);
    }

    #[test]
    fn weights_are_binary() {
        let out = build_reduction(&ThreeDmInstance::example(), 2).unwrap();
        assert!(out.instance.weights().iter().flatten().all(|&w| w == 0 || w == 1));
        assert!(out.instance.weights().iter().flatten().any(|&w| w == 1));
    }

    #[test]
    fn minimal_instance_passes_counts() {
        let tdm = ThreeDmInstance::new(1, &[(1, 1, 1)]).unwrap();
        let out = build_reduction(&tdm, 1).unwrap();
        assert_eq!(tdm.d(), 0);
        assert!(count_check(&out).passed());
        assert_eq!(out.instance.n(), 3);
    }

    #[test]
    fn tampering_is_reported() {
        let mut out = build_reduction(&ThreeDmInstance::example(), 2).unwrap();
        let col = &mut out.meta[0];
        let pos = col.iter().position(|m| m.kind == NodeKind::Dummy).unwrap();
        col.remove(pos);
        assert!(!count_check(&out).passed());
    }

    #[test]
    fn three_dm_brute_force() {
        assert_eq!(solve_3dm_bruteforce(&ThreeDmInstance::example()).unwrap(), Some(vec![0, 1]));
        assert_eq!(solve_3dm_bruteforce(&no_instance()).unwrap(), None);
        let single = ThreeDmInstance::new(1, &[(1, 1, 1)]).unwrap();
        assert_eq!(solve_3dm_bruteforce(&single).unwrap(), Some(vec![0]));
        let big = ThreeDmInstance::new(9, &(1..=9).map(|i| (i, i, i)).collect::<Vec<_>>()).unwrap();
        assert!(matches!(solve_3dm_bruteforce(&big), Err(ReductionError::TooLarge(9))));
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(ThreeDmInstance::new(0, &[]), Err(ReductionError::EmptyGroundSet)));
        assert!(matches!(
            ThreeDmInstance::new(2, &[(1, 1, 3), (2, 2, 2)]),
            Err(ReductionError::CoordinateOutOfRange { index: 1, q: 2 })
        ));
        assert!(matches!(
            ThreeDmInstance::new(2, &[(1, 1, 1), (1, 1, 1)]),
            Err(ReductionError::DuplicateTriple(2))
        ));
        assert!(matches!(
            ThreeDmInstance::new(2, &[(1, 1, 1)]),
            Err(ReductionError::TooFewTriples { p: 1, q: 2 })
        ));
        let tdm = ThreeDmInstance::new(2, &[(1, 1, 1), (2, 1, 2)]).unwrap();
        assert!(matches!(build_reduction(&tdm, 1), Err(ReductionError::UnusedY(2))));
        assert!(matches!(build_reduction(&ThreeDmInstance::example(), 0), Err(ReductionError::ZeroLayers)));
    }

    #[test]
    fn parse_file_format() {
        let tdm = ThreeDmInstance::parse("# example\n2\n1 1 1\n2,2,2\n\n1 2 1\n").unwrap();
        assert_eq!(tdm, ThreeDmInstance::example());
        assert!(matches!(
            ThreeDmInstance::parse("2\n1 1\n"),
            Err(ReductionError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn yes_example_reaches_one_with_one_layer() {
        let v = verify_gap(&ThreeDmInstance::example(), 1, GapSolver::Exact { time_limit: None }).unwrap();
        assert!(v.yes);
        assert_eq!(v.objective, Some(1));
        assert_eq!(v.outcome, GapOutcome::Confirmed);
    }

    #[test]
    fn sidecar_round_trips() {
        let out = build_reduction(&ThreeDmInstance::example(), 1).unwrap();
        let back: ReductionSidecar = serde_json::from_str(&out.sidecar_json()).unwrap();
        assert_eq!(back.meta, out.meta);
        assert_eq!(back.triples, vec![(1, 1, 1), (2, 2, 2), (1, 2, 1)]);
    }
}
