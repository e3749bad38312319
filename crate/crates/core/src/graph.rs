//! Conditional-dependence graphs from roll-call style ±1 vote matrices.
//!
//! Votes are rows and subjects are columns. Subjects become the graph's nodes;
//! edges are weighted by partial correlations of the estimated precision matrix.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::cov_inputs::{estimate_zeta, missing_data_gamma, MaskedData};
use crate::error::{Error, Result};
use crate::estimators::{estimate, EstimateResult, EstimatorSpec, EstimatorVariant};
use crate::io::{read_data_csv, DataCsvOptions, MissingToken};
use crate::matrix::SymmetricMatrix;
use crate::penalty::Penalty;

/// A vote table after parsing: values in {1, −1}, unobserved cells zero.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteTable {
    pub names: Vec<String>,
    pub values: Mat<f64>,
    pub mask: Vec<bool>,
}

impl VoteTable {
    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    fn observed(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.ncols() + j]
    }

    /// Swaps the roles of votes and subjects.
    pub fn transpose(&self, names: Vec<String>) -> Self {
        let (n, m) = (self.nrows(), self.ncols());
        Self {
            names,
            values: self.values.transpose().to_owned(),
            mask: (0..m).flat_map(|j| (0..n).map(move |i| (i, j))).map(|(i, j)| self.observed(i, j)).collect(),
        }
    }

    fn keep(&self, rows: &[usize], cols: &[usize]) -> Self {
        let m = self.ncols();
        Self {
            names: cols.iter().map(|&j| self.names[j].clone()).collect(),
            values: Mat::from_fn(rows.len(), cols.len(), |r, c| self.values[(rows[r], cols[c])]),
            mask: rows
                .iter()
                .flat_map(|&i| cols.iter().map(move |&j| self.mask[i * m + j]))
                .collect(),
        }
    }

    /// Drops votes whose observed entries are all equal (including fully missing ones).
    pub fn drop_unanimous(&self) -> Self {
        let rows: Vec<usize> = (0..self.nrows())
            .filter(|&i| {
                let mut seen = (0..self.ncols()).filter(|&j| self.observed(i, j)).map(|j| self.values[(i, j)]);
                match seen.next() {
                    Some(first) => seen.any(|v| v != first),
                    None => false,
                }
            })
            .collect();
        let cols: Vec<usize> = (0..self.ncols()).collect();
        self.keep(&rows, &cols)
    }

    /// Drops subjects observed on fewer than `min_fraction` of the votes.
    pub fn drop_partial(&self, min_fraction: f64) -> Self {
        let n = self.nrows().max(1) as f64;
        let cols: Vec<usize> = (0..self.ncols())
            .filter(|&j| (0..self.nrows()).filter(|&i| self.observed(i, j)).count() as f64 / n >= min_fraction)
            .collect();
        let rows: Vec<usize> = (0..self.nrows()).collect();
        self.keep(&rows, &cols)
    }
}

/// Reads a vote CSV. With `header`, the first line names the subjects.
/// Cells must be `1`, `-1` or a missing token.
pub fn read_votes(path: &Path, header: bool, missing: MissingToken) -> Result<VoteTable> {
    let t = read_data_csv(path, DataCsvOptions { missing, header })?;
    let m = t.values.ncols();
    let first = if header { 2 } else { 1 };
    for i in 0..t.values.nrows() {
        for j in 0..m {
            let v = t.values[(i, j)];
            if t.mask[i * m + j] && v != 1.0 && v != -1.0 {
                return Err(Error::Parse {
                    row: i + first,
                    column: j + 1,
                    message: format!("vote {v} is not 1 or -1"),
                });
            }
        }
    }
    let names = t.header.unwrap_or_else(|| (0..m).map(|j| format!("s{}", j + 1)).collect());
    Ok(VoteTable {
        names,
        values: t.values,
        mask: t.mask,
    })
}

/// Reads `subject,party` lines (an optional `subject,party` header is skipped).
pub fn read_parties(path: &Path) -> Result<Vec<(String, String)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::Parse {
                row: i + 1,
                column: rec.len().min(2) + 1,
                message: "expected subject,party".into(),
            });
        }
        if i == 0 && rec[0].eq_ignore_ascii_case("subject") {
            continue;
        }
        out.push((rec[0].to_owned(), rec[1].to_owned()));
    }
    Ok(out)
}

/// Party label for each subject, matched by name.
pub fn party_labels(names: &[String], parties: &[(String, String)]) -> Result<Vec<String>> {
    let map: HashMap<&str, &str> = parties.iter().map(|(s, p)| (s.as_str(), p.as_str())).collect();
    names
        .iter()
        .map(|n| {
            map.get(n.as_str())
                .map(|p| p.to_string())
                .ok_or_else(|| Error::Input(format!("no party listed for subject {n:?}")))
        })
        .collect()
}

/// Subtracts, per vote and group, the mean of the observed entries in that group.
/// `groups = None` demeans each vote over all its observed entries.
pub fn demean(table: &VoteTable, groups: Option<&[String]>) -> Mat<f64> {
    let (n, m) = (table.nrows(), table.ncols());
    let group_of: Vec<usize> = match groups {
        None => vec![0; m],
        Some(g) => {
            let mut ids: Vec<&String> = g.iter().collect();
            ids.sort();
            ids.dedup();
            g.iter().map(|x| ids.iter().position(|y| *y == x).expect("present")).collect()
        }
    };
    let k = group_of.iter().max().map_or(1, |&x| x + 1);
    let mut out = table.values.clone();
    for i in 0..n {
        let mut sum = vec![0.0; k];
        let mut cnt = vec![0usize; k];
        for j in 0..m {
            if table.observed(i, j) {
                sum[group_of[j]] += table.values[(i, j)];
                cnt[group_of[j]] += 1;
            }
        }
        for j in 0..m {
            if table.observed(i, j) {
                out[(i, j)] -= sum[group_of[j]] / cnt[group_of[j]] as f64;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// `−Θ_ij / √(Θ_ii Θ_jj)` for every pair with a nonzero estimate, sorted by
/// descending weight then ascending `(i, j)`.
pub fn partial_correlations(theta: &SymmetricMatrix) -> Vec<Edge> {
    let m = theta.dim();
    let mut edges = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            let t = theta.get(i, j);
            if t.abs() > crate::eval::SUPPORT_THRESHOLD {
                let w = -t / (theta.get(i, i) * theta.get(j, j)).sqrt();
                edges.push(Edge { i, j, weight: w });
            }
        }
    }
    sort_edges(&mut edges);
    edges
}

pub fn sort_edges(edges: &mut [Edge]) {
    edges.sort_by(|a, b| b.weight.total_cmp(&a.weight).then(a.i.cmp(&b.i)).then(a.j.cmp(&b.j)));
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphOptions {
    pub spec: EstimatorSpec,
    /// Edges with `|partial correlation| ≥ threshold` enter the graph.
    pub threshold: f64,
    pub drop_unanimous: bool,
    /// Minimum observed fraction for a subject to be kept; `None` keeps all.
    pub min_coverage: Option<f64>,
    pub transpose: bool,
    pub demean_by_party: bool,
}

impl Default for GraphOptions {
    fn default() -> Self {
        let mut spec = EstimatorSpec::new(
            EstimatorVariant::NonprojGlasso,
            Penalty::l1(0.1).expect("valid"),
            10.0,
        );
        spec.solver.rho = 10.0;
        Self {
            spec,
            threshold: 0.04,
            drop_unanimous: true,
            min_coverage: None,
            transpose: false,
            demean_by_party: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VoteGraph {
    pub names: Vec<String>,
    pub parties: Option<Vec<String>>,
    pub estimate: EstimateResult,
    /// All nonzero partial correlations, ranked.
    pub ranked: Vec<Edge>,
    pub threshold: f64,
    pub votes_used: usize,
}

impl VoteGraph {
    /// Edges with `|weight| ≥ threshold`, in ranked order.
    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.ranked.iter().filter(move |e| e.weight.abs() >= self.threshold)
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph votes {\n");
        for (k, name) in self.names.iter().enumerate() {
            let _ = write!(s, "  n{k} [label=\"{}\"", escape(name));
            if let Some(p) = &self.parties {
                let _ = write!(s, ", party=\"{}\"", escape(&p[k]));
            }
            s.push_str("];\n");
        }
        for e in self.edges() {
            let (sign, color) = if e.weight > 0.0 { ("positive", "green") } else { ("negative", "orange") };
            let _ = writeln!(
                s,
                "  n{} -- n{} [weight={:.6}, sign={sign}, color={color}];",
                e.i, e.j, e.weight
            );
        }
        s.push_str("}\n");
        s
    }

    /// Ranked edge list: `i,j,subject_i,subject_j,partial_correlation,in_graph`.
    pub fn edge_list_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["i", "j", "subject_i", "subject_j", "partial_correlation", "in_graph"])?;
        for e in &self.ranked {
            w.write_record([
                e.i.to_string(),
                e.j.to_string(),
                self.names[e.i].clone(),
                self.names[e.j].clone(),
                format!("{}", e.weight),
                (e.weight.abs() >= self.threshold).to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("utf8"))
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Filters, demeans and estimates the subject graph. `parties` holds
/// `(subject, party)` pairs matched by name.
pub fn build_vote_graph(table: &VoteTable, parties: Option<&[(String, String)]>, opts: &GraphOptions) -> Result<VoteGraph> {
    let mut t = table.clone();
    if opts.transpose {
        let names = (0..t.nrows()).map(|i| format!("r{}", i + 1)).collect();
        t = t.transpose(names);
    }
    if opts.drop_unanimous {
        t = t.drop_unanimous();
    }
    if let Some(f) = opts.min_coverage {
        t = t.drop_partial(f);
    }
    if t.nrows() < 2 || t.ncols() < 2 {
        return Err(Error::Input(format!(
            "after filtering, {} votes × {} subjects remain; need at least 2 × 2",
            t.nrows(),
            t.ncols()
        )));
    }
    let labels = parties.map(|p| party_labels(&t.names, p)).transpose()?;
    let groups = if opts.demean_by_party {
        Some(
            labels
                .as_deref()
                .ok_or_else(|| Error::Config("party demeaning requires a party file".into()))?,
        )
    } else {
        None
    };
    let x = demean(&t, groups);
    let votes_used = t.nrows();
    let zeta = estimate_zeta(&t.mask, t.nrows(), t.ncols());
    let data = MaskedData::new(x, t.mask, zeta)?;
    let gamma = missing_data_gamma(&data)?;
    let est = estimate(&gamma, &opts.spec, None)?;
    let ranked = partial_correlations(&est.theta_hat);
    Ok(VoteGraph {
        names: t.names,
        parties: labels,
        estimate: est,
        ranked,
        threshold: opts.threshold,
        votes_used,
    })
}
