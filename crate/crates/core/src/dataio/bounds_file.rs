use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Deserialize;

use super::network::{json_error, write_rows};
use crate::bounds::ParameterBounds;
use crate::error::{Error, Result};
use crate::model::{NetworkStructure, Table};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsDoc {
    bounds: BTreeMap<String, NodeBounds>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeBounds {
    min: Vec<Vec<f64>>,
    max: Vec<Vec<f64>>,
}

/// Serializes bounds as a map from node name to `{min, max}` tables laid
/// out like CPTs.
pub fn write_bounds(structure: &NetworkStructure, bounds: &ParameterBounds) -> String {
    let mut out = String::from("{\n  \"bounds\": {\n");
    for i in 0..structure.len() {
        let _ = write!(out, "    \"{}\": {{\n      \"min\": ", structure.name(i));
        write_rows(&mut out, bounds.lower(i), "      ");
        out.push_str(",\n      \"max\": ");
        write_rows(&mut out, bounds.upper(i), "      ");
        out.push_str("\n    }");
        out.push_str(if i + 1 < structure.len() { ",\n" } else { "\n" });
    }
    out.push_str("  }\n}\n");
    out
}

pub fn parse_bounds(text: &str, structure: &NetworkStructure) -> Result<ParameterBounds> {
    let mut doc: BoundsDoc = serde_json::from_str(text).map_err(json_error)?;
    let mut lower = Vec::with_capacity(structure.len());
    let mut upper = Vec::with_capacity(structure.len());
    for i in 0..structure.len() {
        let name = structure.name(i);
        let nb = doc.bounds.remove(name).ok_or_else(|| Error::Table {
            node: name.to_string(),
            message: "no bounds given".into(),
        })?;
        lower.push(Table::from_rows(nb.min)?);
        upper.push(Table::from_rows(nb.max)?);
    }
    if let Some(extra) = doc.bounds.keys().next() {
        return Err(Error::Table {
            node: extra.clone(),
            message: "bounds for a node that is not declared".into(),
        });
    }
    ParameterBounds::new(structure, lower, upper)
}
