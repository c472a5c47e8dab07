//! Text formats read and written by the command line.
//!
//! Datasets are CSV with a header row `X0,...,X{d-1}`. Discrete datasets carry a
//! leading `# alphabet=s` line and integer cells. Metric matrices are headerless
//! `d x d` CSV with the literal `inf` for `+inf` and a zero diagonal, which is
//! ignored on input. Edge lists start with
//! `# d=<vertices>` followed by sorted `i j` lines with `i < j`.

use std::fmt::Write as _;

use fermat_core::{ContinuousDataset, DiscreteDataset, Graph, MetricMatrix};

use crate::failure::{Failure, Kind};

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Continuous(ContinuousDataset),
    Discrete(DiscreteDataset),
}

impl Dataset {
    /// Discrete labels widen to reals so rank-based estimators can run on them.
    pub fn to_continuous(&self) -> Result<ContinuousDataset, Failure> {
        match self {
            Dataset::Continuous(c) => Ok(c.clone()),
            Dataset::Discrete(c) => {
                let cells = c.rows().flatten().map(|&v| f64::from(v)).collect();
                Ok(ContinuousDataset::new(c.n(), c.dim(), cells)?)
            }
        }
    }
}

fn parse_error(what: &str, line: usize, detail: impl std::fmt::Display) -> Failure {
    Failure::new(Kind::Parse, format!("{what}, line {line}: {detail}"))
}

/// Non-empty lines with their 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn header(d: usize) -> String {
    (0..d).map(|k| format!("X{k}")).collect::<Vec<_>>().join(",")
}

pub fn write_continuous(data: &ContinuousDataset) -> String {
    let mut out = header(data.dim());
    out.push('\n');
    for row in data.rows() {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
pub fn write_discrete(data: &DiscreteDataset) -> String {
    let mut out = format!("# alphabet={}\n{}\n", data.alphabet(), header(data.dim()));
    for row in data.rows() {
        let cells: Vec<String> = row.iter().map(u32::to_string).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn read_dataset(text: &str) -> Result<Dataset, Failure> {
    let mut it = lines(text).peekable();
    let mut alphabet = None;
    while let Some(&(no, line)) = it.peek() {
        let Some(comment) = line.strip_prefix('#') else { break };
        if let Some(s) = comment.trim().strip_prefix("alphabet=") {
            let s: usize = s.trim().parse().map_err(|e| parse_error("dataset", no, e))?;
            alphabet = Some(s);
        }
        it.next();
    }
    let (no, head) = it.next().ok_or_else(|| Failure::new(Kind::Parse, "dataset has no header row"))?;
    let d = head.split(',').count();
    if head.split(',').any(|h| h.trim().is_empty()) {
        return Err(parse_error("dataset", no, "empty column name in header"));
    }
    let mut n = 0;
    match alphabet {
        Some(s) => {
            let mut cells = Vec::new();
            for (no, line) in it {
                let row: Vec<&str> = line.split(',').collect();
                if row.len() != d {
                    return Err(parse_error("dataset", no, format!("expected {d} cells, found {}", row.len())));
                }
                for cell in row {
                    cells.push(cell.trim().parse::<u32>().map_err(|_| {
                        parse_error("dataset", no, format!("'{cell}' is not a non-negative integer label"))
                    })?);
                }
                n += 1;
            }
            Ok(Dataset::Discrete(DiscreteDataset::new(n, d, s, cells)?))
        }
        None => {
            let mut cells = Vec::new();
            for (no, line) in it {
                let row: Vec<&str> = line.split(',').collect();
                if row.len() != d {
                    return Err(parse_error("dataset", no, format!("expected {d} cells, found {}", row.len())));
                }
                for cell in row {
                    let v: f64 = cell.trim().parse().map_err(|_| parse_error("dataset", no, format!("'{cell}' is not a number")))?;
                    if !v.is_finite() {
                        return Err(parse_error("dataset", no, format!("'{cell}' is not finite")));
                    }
                    cells.push(v);
                }
                n += 1;
            }
            if n == 0 {
                return Err(Failure::new(Kind::Parse, "dataset has no rows"));
            }
            Ok(Dataset::Continuous(ContinuousDataset::new(n, d, cells)?))
        }
    }
}

pub fn write_metric(m: &MetricMatrix) -> String {
    let mut out = String::new();
    for (i, row) in m.rows().iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(j, v)| if i == j { "0".to_string() } else { v.to_string() })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn read_metric(text: &str) -> Result<MetricMatrix, Failure> {
    let mut rows = Vec::new();
    for (no, line) in lines(text) {
        let row = line
            .split(',')
            .map(|cell| match cell.trim() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                c => match c.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(parse_error("metric", no, format!("'{c}' is neither a finite number nor inf"))),
                },
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Failure::new(Kind::Parse, "metric file is empty"));
    }
    Ok(MetricMatrix::from_rows(&rows)?)
}

pub fn write_edges(g: &Graph) -> String {
    let mut out = format!("# d={}\n", g.dim());
    for e in g.edges() {
        writeln!(out, "{} {}", e.i, e.j).expect("writing to a String cannot fail");
    }
    out
}

/// Reads an edge list. The `# d=` line is optional when `d` is known from context;
/// when both are present they must agree.
pub fn read_edges(text: &str, d: Option<usize>) -> Result<Graph, Failure> {
    let mut declared = None;
    let mut pairs = Vec::new();
    for (no, line) in lines(text) {
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("d=") {
                declared = Some(v.trim().parse::<usize>().map_err(|e| parse_error("edge list", no, e))?);
            }
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [a, b] = parts[..] else {
            return Err(parse_error("edge list", no, "expected two vertex indices"));
        };
        let parse = |s: &str| s.parse::<usize>().map_err(|_| parse_error("edge list", no, format!("'{s}' is not a vertex index")));
        pairs.push((parse(a)?, parse(b)?));
    }
    let d = match (declared, d) {
        (Some(x), Some(y)) if x != y => {
            return Err(Failure::new(Kind::InvalidInput, format!("edge list declares d={x} but the data have d={y}")))
        }
        (Some(x), _) | (None, Some(x)) => x,
        (None, None) => return Err(Failure::new(Kind::Parse, "edge list lacks a '# d=' line")),
    };
    let mut g = Graph::empty(d);
    for (a, b) in pairs {
        g.insert(a, b)?;
    }
    Ok(g)
}
