use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{MatchEdge, ReconError};

/// Parses `VIEW_A VIEW_B MATCH_COUNT` lines. Endpoints are ordered and
/// repeated pairs keep the largest count.
pub fn parse_match_graph_str(text: &str) -> Result<Vec<MatchEdge>, ReconError> {
    let mut merged: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(ReconError::malformed(
                line_no,
                format!(
                    "expected VIEW_A VIEW_B MATCH_COUNT, got {} fields",
                    toks.len()
                ),
            ));
        }
        let parse = |t: &str, what: &str| {
            t.parse::<u32>()
                .map_err(|_| ReconError::malformed(line_no, format!("invalid {what} `{t}`")))
        };
        let a = parse(toks[0], "view id")?;
        let b = parse(toks[1], "view id")?;
        let count = parse(toks[2], "match count")?;
        let edge = MatchEdge::new(a, b, count).ok_or(ReconError::SelfLoop {
            view_id: a,
            line_no,
        })?;
        let slot = merged.entry((edge.view_a, edge.view_b)).or_insert(0);
        *slot = (*slot).max(count);
    }
    Ok(merged
        .into_iter()
        .map(|((view_a, view_b), match_count)| MatchEdge {
            view_a,
            view_b,
            match_count,
        })
        .collect())
}

pub fn parse_match_graph(path: &Path) -> Result<Vec<MatchEdge>, ReconError> {
    let text = fs::read_to_string(path).map_err(|e| ReconError::io(path, e))?;
    parse_match_graph_str(&text)
}

pub fn render_match_graph(edges: &[MatchEdge]) -> String {
    let mut s = String::new();
    for e in edges {
        let _ = writeln!(s, "{} {} {}", e.view_a, e.view_b, e.match_count);
    }
    s
}

pub fn write_match_graph(edges: &[MatchEdge], path: &Path) -> Result<(), ReconError> {
    fs::write(path, render_match_graph(edges)).map_err(|e| ReconError::io(path, e))
}
