use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Deserialize;

use super::{check_label, format_g17};
use crate::error::{Error, Result};
use crate::model::{NetworkStructure, NodeSpec, ParameterSet, Table, ROW_SUM_TOLERANCE};

/// CPT rows read from a file may miss a sum of one by at most this much.
/// Rows off by more than the in-memory row-sum tolerance are rescaled;
/// rows closer than that are kept verbatim so written tables read back
/// bit for bit. Larger deviations are rejected.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    nodes: Vec<NodeDoc>,
    #[serde(default)]
    cpts: Option<BTreeMap<String, Vec<Vec<f64>>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    name: String,
    states: Vec<String>,
    #[serde(default)]
    parents: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedNetwork {
    pub structure: NetworkStructure,
    pub params: Option<ParameterSet>,
}

pub(crate) fn json_error(e: serde_json::Error) -> Error {
    Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

pub fn parse_network(text: &str) -> Result<ParsedNetwork> {
    let doc: NetworkDoc = serde_json::from_str(text).map_err(json_error)?;

    let names: Vec<&str> = doc.nodes.iter().map(|n| n.name.as_str()).collect();
    let mut specs = Vec::with_capacity(doc.nodes.len());
    for node in &doc.nodes {
        check_label(&node.name)?;
        for s in &node.states {
            check_label(s)?;
        }
        let parents = node
            .parents
            .iter()
            .map(|p| {
                names
                    .iter()
                    .position(|n| n == p)
                    .ok_or_else(|| Error::UnknownParent {
                        node: node.name.clone(),
                        parent: p.clone(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        specs.push(NodeSpec {
            name: node.name.clone(),
            states: node.states.clone(),
            parents,
        });
    }
    let structure = NetworkStructure::new(specs)?;

    let params = match doc.cpts {
        None => None,
        Some(mut cpts) => {
            let mut tables = Vec::with_capacity(structure.len());
            for i in 0..structure.len() {
                let name = structure.name(i);
                let rows = cpts.remove(name).ok_or_else(|| Error::Table {
                    node: name.to_string(),
                    message: "no CPT given".into(),
                })?;
                tables.push(read_cpt(&structure, i, rows)?);
            }
            if let Some(extra) = cpts.keys().next() {
                return Err(Error::Table {
                    node: extra.clone(),
                    message: "CPT for a node that is not declared".into(),
                });
            }
            Some(ParameterSet::new(&structure, tables)?)
        }
    };
    Ok(ParsedNetwork { structure, params })
}

fn read_cpt(structure: &NetworkStructure, i: usize, mut rows: Vec<Vec<f64>>) -> Result<Table> {
    let name = structure.name(i);
    let (q, r) = (structure.parent_configs(i), structure.cardinality(i));
    if rows.len() != q {
        return Err(Error::Table {
            node: name.to_string(),
            message: format!("expected {q} rows, found {}", rows.len()),
        });
    }
    for (j, row) in rows.iter_mut().enumerate() {
        if row.len() != r {
            return Err(Error::Table {
                node: name.to_string(),
                message: format!("row {j} has {} entries, expected {r}", row.len()),
            });
        }
        if row.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::Table {
                node: name.to_string(),
                message: format!("row {j} has a negative entry"),
            });
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > RENORMALIZE_TOLERANCE {
            return Err(Error::RowSum {
                node: name.to_string(),
                row: j,
                sum,
            });
        }
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            row.iter_mut().for_each(|v| *v /= sum);
        }
    }
    Table::from_rows(rows)
}

fn quoted_list<'a>(items: impl Iterator<Item = &'a str>) -> String {
    let quoted: Vec<String> = items.map(|s| format!("\"{s}\"")).collect();
    format!("[{}]", quoted.join(", "))
}

pub(crate) fn write_rows(out: &mut String, table: &Table, indent: &str) {
    out.push_str("[\n");
    let rows: Vec<String> = table
        .row_iter()
        .map(|row| {
            let cells: Vec<String> = row.iter().map(|&v| format_g17(v)).collect();
            format!("{indent}  [{}]", cells.join(", "))
        })
        .collect();
    out.push_str(&rows.join(",\n"));
    let _ = write!(out, "\n{indent}]");
}

/// Serializes a network, with CPTs when `params` is given.
pub fn write_network(structure: &NetworkStructure, params: Option<&ParameterSet>) -> String {
    let mut out = String::from("{\n  \"nodes\": [\n");
    let nodes: Vec<String> = structure
        .nodes()
        .iter()
        .map(|n| {
            format!(
                "    {{\"name\": \"{}\", \"states\": {}, \"parents\": {}}}",
                n.name,
                quoted_list(n.states.iter().map(String::as_str)),
                quoted_list(n.parents.iter().map(|&p| structure.name(p)))
            )
        })
        .collect();
    out.push_str(&nodes.join(",\n"));
    out.push_str("\n  ]");
    if let Some(params) = params {
        out.push_str(",\n  \"cpts\": {\n");
        for i in 0..structure.len() {
            let _ = write!(out, "    \"{}\": ", structure.name(i));
            write_rows(&mut out, params.table(i), "    ");
            out.push_str(if i + 1 < structure.len() { ",\n" } else { "\n" });
        }
        out.push_str("  }");
    }
    out.push_str("\n}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixture_ab;

    const AB: &str = r#"{
  "nodes": [
    {"name": "A", "states": ["a0", "a1"], "parents": []},
    {"name": "B", "states": ["b0", "b1"], "parents": ["A"]}
  ],
  "cpts": {
    "A": [[0.6, 0.4]],
    "B": [[0.5, 0.5], [0.2, 0.8]]
  }
}"#;

    #[test]
    fn parses_fixture_ab() {
        let parsed = parse_network(AB).unwrap();
        let (s, p) = fixture_ab();
        assert_eq!(parsed.structure, s);
        assert_eq!(parsed.params.unwrap(), p);
    }

    #[test]
    fn round_trip_is_exact() {
        let (s, p) = fixture_ab();
        let text = write_network(&s, Some(&p));
        let back = parse_network(&text).unwrap();
        assert_eq!(back.structure, s);
        assert_eq!(back.params.unwrap(), p);
        let bare = parse_network(&write_network(&s, None)).unwrap();
        assert!(bare.params.is_none());
    }

    #[test]
    fn unknown_parent() {
        let text = r#"{"nodes": [{"name": "B", "states": ["0", "1"], "parents": ["C"]}]}"#;
        assert_eq!(
            parse_network(text).unwrap_err(),
            Error::UnknownParent {
                node: "B".into(),
                parent: "C".into()
            }
        );
    }

    #[test]
    fn row_sum_outside_tolerance() {
        let text = AB.replace("[0.5, 0.5]", "[0.7, 0.7]");
        assert!(matches!(
            parse_network(&text).unwrap_err(),
            Error::RowSum { row: 0, ref node, .. } if node == "B"
        ));
    }

    #[test]
    fn small_deviation_is_renormalized() {
        let text = AB.replace("[0.5, 0.5]", "[0.5, 0.5000004]");
        let p = parse_network(&text).unwrap().params.unwrap();
        let row = p.table(1).row(0);
        assert!((row[0] + row[1] - 1.0).abs() < 1e-15);
        assert!(row[1] > row[0]);
    }

    #[test]
    fn syntax_and_shape_errors() {
        let err = parse_network("{\n  \"nodes\": [,]\n}").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 2, .. }), "{err:?}");
        let err = parse_network(&AB.replace("[0.2, 0.8]", "[0.2, 0.3, 0.5]")).unwrap_err();
        assert!(matches!(err, Error::Table { .. }));
        let err = parse_network(&AB.replace("\"a1\"", "\"a 1\"")).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        let cyclic = r#"{"nodes": [
            {"name": "A", "states": ["0", "1"], "parents": ["B"]},
            {"name": "B", "states": ["0", "1"], "parents": ["A"]}]}"#;
        assert!(matches!(parse_network(cyclic).unwrap_err(), Error::InvalidNetwork(_)));
    }
}
