//! Text formats for payoff matrices, flow networks and linear programs.

use std::sync::Arc;

use crate::convex::{AffineConstraints, FlowNetwork, LinearConstraints, SmoothCP};
use crate::error::{Error, Result};
use crate::game::PayoffMatrix;

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Non-blank lines that do not start with `#`, with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_reals(line: usize, field: &str) -> Result<Vec<f64>> {
    field
        .split(',')
        .map(|tok| {
            let tok = tok.trim();
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_error(line, format!("not a number: {tok:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_error(line, format!("non-finite entry {tok:?}")))
            }
        })
        .collect()
}

/// Row-major CSV of reals, every entry in `[-1, 1]`.
pub fn parse_matrix(text: &str) -> Result<PayoffMatrix> {
    let mut entries = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line, content) in content_lines(text) {
        let row = parse_reals(line, content)?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(parse_error(
                    line,
                    format!("expected {c} entries, found {}", row.len()),
                ))
            }
            Some(_) => {}
        }
        if let Some(v) = row.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(parse_error(line, format!("entry {v} outside [-1, 1]")));
        }
        entries.extend(row);
        rows += 1;
    }
    let cols = cols.ok_or_else(|| parse_error(0, "empty matrix"))?;
    PayoffMatrix::new(rows, cols, entries)
}

/// `p <nodes> <edges> <source> <sink>` followed by one `e <u> <v>` line per
/// edge, all 1-indexed. Lines starting with `c` or `#` are comments.
pub fn parse_graph(text: &str) -> Result<FlowNetwork> {
    let mut header: Option<(usize, usize, usize, usize, usize)> = None;
    let mut edges = Vec::new();
    for (line, content) in content_lines(text) {
        let mut tokens = content.split_whitespace();
        let tag = tokens.next().unwrap_or_default();
        if tag == "c" {
            continue;
        }
        let numbers: Vec<usize> = tokens
            .map(|t| {
                t.parse()
                    .map_err(|_| parse_error(line, format!("not a nonnegative integer: {t:?}")))
            })
            .collect::<Result<_>>()?;
        match tag {
            "p" => {
                if header.is_some() {
                    return Err(parse_error(line, "duplicate problem line"));
                }
                let [nodes, count, s, t] = numbers[..] else {
                    return Err(parse_error(
                        line,
                        "expected `p <nodes> <edges> <source> <sink>`",
                    ));
                };
                for (name, v) in [("source", s), ("sink", t)] {
                    if v == 0 || v > nodes {
                        return Err(parse_error(line, format!("{name} {v} outside 1..={nodes}")));
                    }
                }
                if s == t {
                    return Err(parse_error(line, "source and sink must differ"));
                }
                header = Some((nodes, count, s - 1, t - 1, line));
            }
            "e" => {
                let Some((nodes, ..)) = header else {
                    return Err(parse_error(line, "edge before the problem line"));
                };
                let [u, v] = numbers[..] else {
                    return Err(parse_error(line, "expected `e <u> <v>`"));
                };
                for w in [u, v] {
                    if w == 0 || w > nodes {
                        return Err(parse_error(line, format!("node {w} outside 1..={nodes}")));
                    }
                }
                if u == v {
                    return Err(parse_error(line, "self-loop"));
                }
                edges.push((u - 1, v - 1));
            }
            other => return Err(parse_error(line, format!("unknown line type {other:?}"))),
        }
    }
    let (nodes, count, source, sink, line) =
        header.ok_or_else(|| parse_error(0, "missing problem line"))?;
    if edges.len() != count {
        return Err(parse_error(
            line,
            format!("declared {count} edges, found {}", edges.len()),
        ));
    }
    FlowNetwork::new(nodes, edges, source, sink)
}

/// A linear program `max cᵀf` with constraints `a_iᵀf + b_i ≤ 1`:
///
/// ```text
/// objective 1,0
/// target 0.5
/// constraint 1,0 ; 0
/// equality 1,1 ; 1
/// interior 0,0
/// gamma 1
/// radius 2
/// ```
///
/// `constraint` lines give `a_i ; b_i` (offset optional, default 0);
/// `equality` lines give `m ; r` for the ambient equality `mᵀf = r`.
/// Keys may be separated from their values by `=` instead of whitespace.
pub fn parse_program(text: &str) -> Result<SmoothCP> {
    let mut objective: Option<Vec<f64>> = None;
    let mut target = None;
    let mut interior = None;
    let mut gamma = None;
    let mut radius = None;
    let mut constraints: Vec<(usize, Vec<f64>, f64)> = Vec::new();
    let mut equalities: Vec<(usize, Vec<f64>, f64)> = Vec::new();
    let scalar = |line: usize, rest: &str| -> Result<f64> {
        match parse_reals(line, rest)?[..] {
            [v] => Ok(v),
            _ => Err(parse_error(line, "expected one number")),
        }
    };
    let row_with_offset = |line: usize, rest: &str| -> Result<(Vec<f64>, f64)> {
        let mut parts = rest.splitn(2, ';');
        let row = parse_reals(line, parts.next().unwrap_or_default())?;
        let offset = match parts.next() {
            Some(b) => scalar(line, b)?,
            None => 0.0,
        };
        Ok((row, offset))
    };
    for (line, content) in content_lines(text) {
        let (key, rest) = content
            .split_once(|c: char| c == '=' || c.is_whitespace())
            .unwrap_or((content, ""));
        let rest = rest.trim();
        match key {
            "objective" => objective = Some(parse_reals(line, rest)?),
            "target" => target = Some(scalar(line, rest)?),
            "interior" => interior = Some(parse_reals(line, rest)?),
            "gamma" => gamma = Some(scalar(line, rest)?),
            "radius" => radius = Some(scalar(line, rest)?),
            "constraint" => {
                let (row, b) = row_with_offset(line, rest)?;
                constraints.push((line, row, b));
            }
            "equality" => {
                let (row, b) = row_with_offset(line, rest)?;
                equalities.push((line, row, b));
            }
            other => return Err(parse_error(line, format!("unknown key {other:?}"))),
        }
    }
    let objective = objective.ok_or_else(|| parse_error(0, "missing `objective`"))?;
    let dim = objective.len();
    let check_dim = |line: usize, row: &[f64]| {
        if row.len() == dim {
            Ok(())
        } else {
            Err(parse_error(
                line,
                format!("expected {dim} coefficients, found {}", row.len()),
            ))
        }
    };
    let mut cons = LinearConstraints::new(dim);
    for (line, row, b) in &constraints {
        check_dim(*line, row)?;
        let sparse = row
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v));
        cons.push(sparse.collect(), *b)?;
    }
    let mut ambient = AffineConstraints::new(dim);
    for (line, row, r) in &equalities {
        check_dim(*line, row)?;
        let sparse = row
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v));
        ambient.push_row(sparse.collect(), *r)?;
    }
    let interior = interior.unwrap_or_else(|| vec![0.0; dim]);
    SmoothCP::new(
        objective,
        target.ok_or_else(|| parse_error(0, "missing `target`"))?,
        Arc::new(cons),
        interior,
        gamma.ok_or_else(|| parse_error(0, "missing `gamma`"))?,
        radius.ok_or_else(|| parse_error(0, "missing `radius`"))?,
        ambient,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_pennies_text() {
        assert_eq!(
            parse_matrix("1,-1\n-1,1").unwrap(),
            PayoffMatrix::matching_pennies()
        );
    }

    #[test]
    fn out_of_range_entry_names_line() {
        let err = parse_matrix("# comment\n1,0\n0,2.0\n").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 3,
                message: "entry 2 outside [-1, 1]".into()
            }
        );
        assert!(matches!(
            parse_matrix("1,0\n0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_matrix("1,x\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn parallel_edge_graph() {
        let net = parse_graph("p 2 2 1 2\ne 1 2\ne 1 2\n").unwrap();
        assert_eq!(net.edges(), &[(0, 1), (0, 1)]);
        assert!(parse_graph("c two edges\np 2 1 1 2\ne 2 1\n").is_ok());
        assert_eq!((net.source(), net.sink()), (0, 1));
    }

    #[test]
    fn malformed_graphs() {
        assert!(matches!(
            parse_graph("p 2 1 1 2\ne 1 3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_graph("e 1 2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_graph("p 2 2 1 2\ne 1 2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_graph("p 2 1 1 1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_graph("p 2 1 1 2\nx 1 2\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn program_round_trip() {
        let text = "objective 1\ntarget 0.5\nconstraint 1\nconstraint -1 ; 0\ngamma 1\nradius 2\n";
        let p = parse_program(text).unwrap();
        assert_eq!(p.target(), 0.5);
        assert_eq!(p.constraints().count(), 2);
        assert!(matches!(
            parse_program("objective 1\nconstraint 1,2\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
