use crate::error::{Error, Result};
use crate::model::NetworkStructure;

pub const MISSING_TOKEN: &str = "?";

/// Records over the nodes of a network, in node declaration order. Each
/// cell is an observed state index or `None` when missing.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dataset {
    records: Vec<Vec<Option<usize>>>,
}

impl Dataset {
    /// Checks that every record has one in-range cell per node.
    pub fn new(structure: &NetworkStructure, records: Vec<Vec<Option<usize>>>) -> Result<Self> {
        for (l, record) in records.iter().enumerate() {
            if record.len() != structure.len() {
                return Err(Error::RaggedRow {
                    record: l + 1,
                    expected: structure.len(),
                    found: record.len(),
                });
            }
            for (i, cell) in record.iter().enumerate() {
                if let Some(v) = *cell {
                    if v >= structure.cardinality(i) {
                        return Err(Error::Index {
                            node: structure.name(i).to_string(),
                            detail: format!("record {}: state {v} out of range", l + 1),
                        });
                    }
                }
            }
        }
        Ok(Dataset { records })
    }

    pub(crate) fn from_records(records: Vec<Vec<Option<usize>>>) -> Self {
        Dataset { records }
    }

    pub fn records(&self) -> &[Vec<Option<usize>>] {
        &self.records
    }

    pub(crate) fn records_mut(&mut self) -> &mut [Vec<Option<usize>>] {
        &mut self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn missing_cells(&self) -> usize {
        self.records
            .iter()
            .flatten()
            .filter(|c| c.is_none())
            .count()
    }

    pub fn total_cells(&self) -> usize {
        self.records.iter().map(Vec::len).sum()
    }

    pub fn is_complete(&self) -> bool {
        self.missing_cells() == 0
    }
}

/// Reads a dataset CSV. Columns may appear in any order; lines starting
/// with `#` and blank lines are skipped. Record numbers in errors count
/// data rows from 1.
pub fn parse_dataset(text: &str, structure: &NetworkStructure) -> Result<Dataset> {
    let mut lines = text
        .lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'));

    let header = lines.next().ok_or_else(|| Error::Syntax {
        line: 1,
        column: 1,
        message: "missing header line".into(),
    })?;
    let mut column_node = Vec::new();
    for name in header.split(',') {
        let node = structure
            .index_of(name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))?;
        if column_node.contains(&node) {
            return Err(Error::Domain(format!("column `{name}` appears twice")));
        }
        column_node.push(node);
    }
    if let Some(missing) = (0..structure.len()).find(|i| !column_node.contains(i)) {
        return Err(Error::MissingColumn(structure.name(missing).to_string()));
    }

    let mut records = Vec::new();
    for (l, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != column_node.len() {
            return Err(Error::RaggedRow {
                record: l + 1,
                expected: column_node.len(),
                found: cells.len(),
            });
        }
        let mut record = vec![None; structure.len()];
        for (&node, &cell) in column_node.iter().zip(&cells) {
            if cell == MISSING_TOKEN {
                continue;
            }
            record[node] = Some(structure.state_index(node, cell).ok_or_else(|| {
                Error::UnknownState {
                    record: l + 1,
                    node: structure.name(node).to_string(),
                    label: cell.to_string(),
                }
            })?);
        }
        records.push(record);
    }
    Ok(Dataset { records })
}

/// Writes a dataset CSV in node declaration order. `comments` become
/// leading `# ` lines.
pub fn write_dataset(structure: &NetworkStructure, dataset: &Dataset, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    let names: Vec<&str> = (0..structure.len()).map(|i| structure.name(i)).collect();
    out.push_str(&names.join(","));
    out.push('\n');
    for record in dataset.records() {
        let cells: Vec<&str> = record
            .iter()
            .enumerate()
            .map(|(i, c)| match *c {
                Some(v) => structure.node(i).states[v].as_str(),
                None => MISSING_TOKEN,
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixture_ab;

    const D4: &str = "A,B\na0,b0\na0,?\n?,b1\na1,b1\n";

    #[test]
    fn parses_d4() {
        let (s, _) = fixture_ab();
        let d = parse_dataset(D4, &s).unwrap();
        assert_eq!(
            d.records(),
            &[
                vec![Some(0), Some(0)],
                vec![Some(0), None],
                vec![None, Some(1)],
                vec![Some(1), Some(1)],
            ]
        );
        assert_eq!(write_dataset(&s, &d, &[]), D4);
    }

    #[test]
    fn reorders_columns_and_skips_comments() {
        let (s, _) = fixture_ab();
        let d = parse_dataset("# generated\nB,A\r\nb1,a0\r\n\n", &s).unwrap();
        assert_eq!(d.records(), &[vec![Some(0), Some(1)]]);
    }

    #[test]
    fn error_cases() {
        let (s, _) = fixture_ab();
        assert_eq!(
            parse_dataset("A,B\na0,b0\na1,b9\n", &s).unwrap_err(),
            Error::UnknownState {
                record: 2,
                node: "B".into(),
                label: "b9".into()
            }
        );
        assert_eq!(
            parse_dataset("A\na0\n", &s).unwrap_err(),
            Error::MissingColumn("B".into())
        );
        assert_eq!(
            parse_dataset("A,C\n", &s).unwrap_err(),
            Error::UnknownColumn("C".into())
        );
        assert!(matches!(
            parse_dataset("A,B\na0\n", &s).unwrap_err(),
            Error::RaggedRow { record: 1, .. }
        ));
        assert!(parse_dataset("", &s).is_err());
        // quoting is not part of the format
        assert!(parse_dataset("A,B\n\"a0\",b0\n", &s).is_err());
    }

    #[test]
    fn comments_are_written_first() {
        let (s, _) = fixture_ab();
        let d = Dataset::new(&s, vec![vec![Some(1), None]]).unwrap();
        let text = write_dataset(&s, &d, &["seed 3".to_string()]);
        assert_eq!(text, "# seed 3\nA,B\na1,?\n");
        assert_eq!(parse_dataset(&text, &s).unwrap(), d);
    }

    #[test]
    fn new_checks_shape_and_range() {
        let (s, _) = fixture_ab();
        assert!(Dataset::new(&s, vec![vec![Some(0)]]).is_err());
        assert!(Dataset::new(&s, vec![vec![Some(0), Some(2)]]).is_err());
    }
}
