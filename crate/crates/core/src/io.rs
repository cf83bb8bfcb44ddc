//! `mba-v1` instance and solution documents.
//!
//! Both are JSON objects tagged `"format": "mba-v1"` with 1-based indices.
//! Writers emit one matrix row per line so files stay diffable.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::instance::{
    InstanceData, InstanceError, InstanceMetadata, MbaInstance, MbaSolution,
};

pub const FORMAT_TAG: &str = "mba-v1";

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    format: String,
    n: usize,
    m: usize,
    weights: Vec<Vec<i64>>,
    arcs: Vec<Vec<[usize; 2]>>,
    #[serde(default)]
    metadata: Option<InstanceMetadata>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SolutionDoc {
    format: String,
    n: usize,
    m: usize,
    assign: Vec<Vec<usize>>,
    #[serde(default)]
    objective: Option<i64>,
}

fn check_format(found: &str) -> Result<(), InstanceError> {
    if found == FORMAT_TAG {
        Ok(())
    } else {
        Err(InstanceError::Parse(format!("unsupported format {found:?}, expected {FORMAT_TAG:?}")))
    }
}

fn one_based_to_zero(v: usize, what: &str) -> Result<usize, InstanceError> {
    v.checked_sub(1)
        .ok_or_else(|| InstanceError::Parse(format!("{what} index 0 is invalid (indices are 1-based)")))
}

pub fn parse_instance(text: &str) -> Result<MbaInstance, InstanceError> {
    let doc: InstanceDoc =
        serde_json::from_str(text).map_err(|e| InstanceError::Parse(e.to_string()))?;
    check_format(&doc.format)?;
    let arcs = doc
        .arcs
        .iter()
        .map(|layer| {
            layer
                .iter()
                .map(|&[a, b]| Ok((one_based_to_zero(a, "arc")?, one_based_to_zero(b, "arc")?)))
                .collect::<Result<Vec<_>, InstanceError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let data = InstanceData { n: doc.n, m: doc.m, weights: doc.weights, arcs };
    MbaInstance::with_metadata(data, doc.metadata)
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

pub(crate) fn instance_to_string(inst: &MbaInstance) -> String {
    let mut s = String::new();
    s.push_str("{\n");
    let _ = writeln!(s, "  \"format\": \"{FORMAT_TAG}\",");
    let _ = writeln!(s, "  \"n\": {},", inst.n());
    let _ = writeln!(s, "  \"m\": {},", inst.m());
    s.push_str("  \"weights\": [\n");
    let rows: Vec<String> =
        inst.weights().iter().map(|row| format!("    [{}]", join(row))).collect();
    s.push_str(&rows.join(",\n"));
    s.push_str("\n  ],\n");
    s.push_str("  \"arcs\": [");
    if inst.arcs().is_empty() {
        s.push(']');
    } else {
        s.push('\n');
        let layers: Vec<String> = inst
            .arcs()
            .iter()
            .map(|layer| {
                format!("    [{}]", join(layer.iter().map(|(a, b)| format!("[{}, {}]", a + 1, b + 1))))
            })
            .collect();
        s.push_str(&layers.join(",\n"));
        s.push_str("\n  ]");
    }
    if let Some(meta) = inst.metadata() {
        s.push_str(",\n  \"metadata\": ");
        s.push_str(&serde_json::to_string(meta).expect("metadata serializes"));
    }
    s.push_str("\n}\n");
    s
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<MbaInstance, InstanceError> {
    parse_instance(&fs::read_to_string(path)?)
}

pub fn write_instance(inst: &MbaInstance, path: impl AsRef<Path>) -> Result<(), InstanceError> {
    fs::write(path, instance_to_string(inst))?;
    Ok(())
}

pub fn solution_to_string(sol: &MbaSolution, objective: Option<i64>) -> String {
    let n = sol.assign.len();
    let m = sol.assign.first().map_or(0, Vec::len);
    let mut s = String::new();
    s.push_str("{\n");
    let _ = writeln!(s, "  \"format\": \"{FORMAT_TAG}\",");
    let _ = writeln!(s, "  \"n\": {n},");
    let _ = writeln!(s, "  \"m\": {m},");
    s.push_str("  \"assign\": [\n");
    let rows: Vec<String> = sol
        .assign
        .iter()
        .map(|t| format!("    [{}]", join(t.iter().map(|e| e + 1))))
        .collect();
    s.push_str(&rows.join(",\n"));
    s.push_str("\n  ]");
    if let Some(obj) = objective {
        let _ = write!(s, ",\n  \"objective\": {obj}");
    }
    s.push_str("\n}\n");
    s
}

/// Parses a solution document; returns the solution and its recorded objective.
pub fn parse_solution(text: &str) -> Result<(MbaSolution, Option<i64>), InstanceError> {
    let doc: SolutionDoc =
        serde_json::from_str(text).map_err(|e| InstanceError::Parse(e.to_string()))?;
    check_format(&doc.format)?;
    if doc.assign.len() != doc.n || doc.assign.iter().any(|t| t.len() != doc.m) {
        return Err(InstanceError::Parse(format!(
            "assign must have {} rows of {} entries",
            doc.n, doc.m
        )));
    }
    let assign = doc
        .assign
        .iter()
        .map(|t| t.iter().map(|&e| one_based_to_zero(e, "element")).collect())
        .collect::<Result<Vec<Vec<usize>>, _>>()?;
    Ok((MbaSolution { assign }, doc.objective))
}

pub fn write_solution(
    sol: &MbaSolution,
    objective: Option<i64>,
    path: impl AsRef<Path>,
) -> Result<(), InstanceError> {
    fs::write(path, solution_to_string(sol, objective))?;
    Ok(())
}

pub fn read_solution(path: impl AsRef<Path>) -> Result<(MbaSolution, Option<i64>), InstanceError> {
    parse_solution(&fs::read_to_string(path)?)
}
