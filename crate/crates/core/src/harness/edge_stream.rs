//! Plain-text edge streams: one `t u v` triple per line, 0-based nodes,
//! timestamps from 1. Consecutive windows of `T + 1` timestamps form one
//! instance each: `T` input snapshots followed by the ground-truth snapshot.
//! Lines starting with `#` are comments, except the directives `# nodes N`
//! and `# timestamps M`, which fix the node count and stream length when the
//! highest-numbered nodes are isolated or the last snapshots are empty.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::{DynGraphSequence, EdgeSet};
use crate::metp::InstanceData;

pub fn load_edge_stream(path: &Path, snapshots: usize) -> Result<Vec<InstanceData>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        let mut all = Vec::new();
        for file in files {
            let text = fs::read_to_string(&file)?;
            all.extend(parse_edge_stream(&text, snapshots, &file)?);
        }
        return Ok(all);
    }
    let text = fs::read_to_string(path)?;
    parse_edge_stream(&text, snapshots, path)
}

pub fn parse_edge_stream(text: &str, snapshots: usize, origin: &Path) -> Result<Vec<InstanceData>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    if snapshots == 0 {
        return Err(parse_err(0, "need at least one input snapshot".into()));
    }
    let window = snapshots + 1;

    let mut declared_nodes = 0usize;
    let mut declared_t = 0usize;
    let mut max_node = 0usize;
    let mut max_t = 0usize;
    let mut triples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let mut words = comment.split_whitespace();
            let target = match words.next() {
                Some("nodes") => &mut declared_nodes,
                Some("timestamps") => &mut declared_t,
                _ => continue,
            };
            *target = words
                .next()
                .and_then(|w| w.parse().ok())
                .ok_or_else(|| parse_err(line_no, format!("bad directive {line:?}")))?;
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(
                line_no,
                format!("expected `t u v`, got {line:?}"),
            ));
        }
        let mut values = [0usize; 3];
        for (v, field) in values.iter_mut().zip(&fields) {
            *v = field.parse().map_err(|_| {
                parse_err(line_no, format!("not a non-negative integer: {field:?}"))
            })?;
        }
        let [t, u, v] = values;
        if t == 0 {
            return Err(parse_err(line_no, "timestamps start at 1".into()));
        }
        max_t = max_t.max(t);
        max_node = max_node.max(u).max(v);
        triples.push((t, u, v));
    }
    let max_t = max_t.max(declared_t);
    if max_t == 0 {
        return Err(parse_err(0, "empty stream".into()));
    }
    if !max_t.is_multiple_of(window) {
        return Err(parse_err(
            0,
            format!(
                "missing timestamps: stream ends at t={max_t}, windows span {window} timestamps"
            ),
        ));
    }
    let node_count = declared_nodes.max(max_node + 1);

    let mut edge_sets = vec![EdgeSet::new(); max_t];
    for (t, u, v) in triples {
        edge_sets[t - 1].insert(u, v);
    }
    edge_sets
        .chunks(window)
        .map(|chunk| {
            let clean = DynGraphSequence::from_edge_sets(node_count, &chunk[..snapshots])?;
            Ok(InstanceData {
                clean,
                truth: chunk[snapshots].clone(),
            })
        })
        .collect()
}

/// Writes instances as consecutive windows of one stream.
pub fn write_edge_stream(path: &Path, instances: &[InstanceData]) -> Result<()> {
    let node_count = instances
        .iter()
        .map(|d| d.clean.node_count())
        .max()
        .unwrap_or(0);
    let timestamps: usize = instances.iter().map(|d| d.clean.len() + 1).sum();
    let mut out = String::new();
    writeln!(out, "# nodes {node_count}").expect("write to String");
    writeln!(out, "# timestamps {timestamps}").expect("write to String");
    let mut t = 0;
    for data in instances {
        for snapshot in data.clean.snapshots() {
            t += 1;
            for (u, v) in snapshot.edges().iter() {
                writeln!(out, "{t} {u} {v}").expect("write to String");
            }
        }
        t += 1;
        for (u, v) in data.truth.iter() {
            writeln!(out, "{t} {u} {v}").expect("write to String");
        }
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, snapshots: usize) -> Result<Vec<InstanceData>> {
        parse_edge_stream(text, snapshots, Path::new("test.txt"))
    }

    fn set(pairs: &[(usize, usize)]) -> EdgeSet {
        pairs.iter().copied().collect()
    }

    #[test]
    fn single_window() {
        let data = parse("1 0 1\n2 0 1\n", 1).unwrap();
        assert_eq!(data.len(), 1);
        assert_eq!(data[0].clean.len(), 1);
        assert_eq!(data[0].clean.last().edges(), set(&[(0, 1)]));
        assert_eq!(data[0].truth, set(&[(0, 1)]));
    }

    #[test]
    fn self_loops_dropped_and_duplicates_merged() {
        let data = parse("1 3 3\n1 0 1\n1 1 0\n2 0 2\n", 1).unwrap();
        assert_eq!(data[0].clean.node_count(), 4);
        assert_eq!(data[0].clean.last().edges(), set(&[(0, 1)]));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse("1 0 1\n2 0 x\n", 1).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse("1 0 1\n\n2 0\n", 1).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse("0 0 1\n", 1).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn missing_timestamps_rejected() {
        assert!(parse("1 0 1\n2 0 1\n", 2).is_err());
        assert!(parse("# nothing\n", 2).is_err());
    }

    #[test]
    fn multiple_windows() {
        let text = "1 0 1\n2 1 2\n3 0 2\n4 2 3\n";
        let data = parse(text, 1).unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!(data[1].clean.last().edges(), set(&[(0, 2)]));
        assert_eq!(data[1].truth, set(&[(2, 3)]));
        assert!(data.iter().all(|d| d.clean.node_count() == 4));
    }

    #[test]
    fn node_directive_keeps_isolated_nodes() {
        let data = parse("# nodes 10\n1 0 1\n2 0 1\n", 1).unwrap();
        assert_eq!(data[0].clean.node_count(), 10);
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stream.txt");
        let a = InstanceData {
            clean: DynGraphSequence::from_edge_sets(6, &[set(&[(0, 1)]), set(&[(1, 2), (0, 3)])])
                .unwrap(),
            truth: set(&[(2, 4)]),
        };
        let b = InstanceData {
            clean: DynGraphSequence::from_edge_sets(6, &[EdgeSet::new(), set(&[(0, 1)])]).unwrap(),
            truth: EdgeSet::new(),
        };
        write_edge_stream(&path, &[a.clone(), b.clone()]).unwrap();
        assert_eq!(load_edge_stream(&path, 2).unwrap(), vec![a, b]);
    }
}
