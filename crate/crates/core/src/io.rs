//! Graph files and flow tables.
//!
//! Graph files are JSON written in one canonical layout so that parsing and
//! re-serializing a canonical file reproduces it byte for byte:
//!
//! ```text
//! {"n":3,"edges":[[0,1,1],[1,2,0.5]],"diag":[0,0,1],"meta":{"family":"interval","params":[3]}}
//! ```
//!
//! `diag` is present only when some entry is nonzero, and `meta` only when
//! known. Reals use 17 significant digits with trailing zeros dropped.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::graph::WeightedGraph;
use crate::spectra::FlowResult;
use crate::{Error, Result};

/// Where a graph came from.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMeta {
    pub family: String,
    pub params: Vec<f64>,
    pub seed: Option<u64>,
    /// Samples drawn before a connected one was found.
    pub attempts: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphFile {
    pub graph: WeightedGraph,
    pub meta: Option<GraphMeta>,
}

/// `%.17g`: shortest of fixed or exponent form, trailing zeros removed.
pub fn format_g17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x))
    } else {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

pub fn serialize_graph(file: &GraphFile) -> String {
    let g = &file.graph;
    let mut out = String::new();
    write!(out, "{{\"n\":{},\"edges\":[", g.n()).unwrap();
    for (k, e) in g.edges().iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        write!(out, "[{},{},{}]", e.i, e.j, format_g17(e.w)).unwrap();
    }
    out.push(']');
    if g.has_diag_extra() {
        out.push_str(",\"diag\":");
        push_list(&mut out, g.diag_extra());
    }
    if let Some(meta) = &file.meta {
        write!(
            out,
            ",\"meta\":{{\"family\":{}",
            Value::String(meta.family.clone())
        )
        .unwrap();
        out.push_str(",\"params\":");
        push_list(&mut out, &meta.params);
        if let Some(seed) = meta.seed {
            write!(out, ",\"seed\":{seed}").unwrap();
        }
        if let Some(attempts) = meta.attempts {
            write!(out, ",\"attempts\":{attempts}").unwrap();
        }
        out.push('}');
    }
    out.push_str("}\n");
    out
}

fn push_list(out: &mut String, xs: &[f64]) {
    out.push('[');
    for (k, x) in xs.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        out.push_str(&format_g17(*x));
    }
    out.push(']');
}

pub fn parse_graph(text: &str) -> Result<GraphFile> {
    let perr = |m: String| Error::Parse(m);
    let root: Value = serde_json::from_str(text).map_err(|e| perr(e.to_string()))?;
    let obj = root
        .as_object()
        .ok_or_else(|| perr("top level must be an object".into()))?;
    let n = obj
        .get("n")
        .and_then(Value::as_u64)
        .ok_or_else(|| perr("\"n\" must be a nonnegative integer".into()))? as usize;
    let edges = obj
        .get("edges")
        .and_then(Value::as_array)
        .ok_or_else(|| perr("\"edges\" must be an array".into()))?;
    let mut list = Vec::with_capacity(edges.len());
    for (k, e) in edges.iter().enumerate() {
        let triple = e.as_array().filter(|a| a.len() == 3);
        let parsed = triple.and_then(|a| Some((a[0].as_u64()?, a[1].as_u64()?, a[2].as_f64()?)));
        let (i, j, w) = parsed.ok_or_else(|| perr(format!("edge {k} must be [i, j, w]")))?;
        list.push((i as usize, j as usize, w));
    }
    let mut graph = WeightedGraph::new(n, list)?;
    if let Some(diag) = obj.get("diag") {
        let diag =
            float_list(diag).ok_or_else(|| perr("\"diag\" must be an array of numbers".into()))?;
        if diag.len() != n {
            return Err(perr(format!(
                "\"diag\" has {} entries, expected {n}",
                diag.len()
            )));
        }
        graph = graph.with_diag_extra(diag)?;
    }
    let meta = match obj.get("meta") {
        None => None,
        Some(m) => {
            let family = m
                .get("family")
                .and_then(Value::as_str)
                .ok_or_else(|| perr("\"meta.family\" must be a string".into()))?
                .to_string();
            let params = m
                .get("params")
                .map(float_list)
                .unwrap_or(Some(Vec::new()))
                .ok_or_else(|| perr("\"meta.params\" must be an array of numbers".into()))?;
            let seed = m
                .get("seed")
                .map(|s| s.as_u64().ok_or_else(|| perr("bad \"meta.seed\"".into())));
            let attempts = m.get("attempts").map(|s| {
                s.as_u64()
                    .map(|a| a as usize)
                    .ok_or_else(|| perr("bad \"meta.attempts\"".into()))
            });
            Some(GraphMeta {
                family,
                params,
                seed: seed.transpose()?,
                attempts: attempts.transpose()?,
            })
        }
    };
    Ok(GraphFile { graph, meta })
}

fn float_list(v: &Value) -> Option<Vec<f64>> {
    v.as_array()?.iter().map(Value::as_f64).collect()
}

/// Branch values as CSV, one row per sample.
pub fn branch_table_csv(flow: &FlowResult) -> String {
    let mut out = String::from("sigma");
    for b in 0..flow.branch_count() {
        write!(out, ",branch_{b}").unwrap();
    }
    out.push('\n');
    for (s, row) in flow.sigmas.iter().zip(&flow.values) {
        out.push_str(&format_g17(*s));
        for v in row {
            out.push(',');
            out.push_str(&format_g17(*v));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossingSummary {
    pub branch: usize,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub upward: bool,
}

/// Companion JSON for a branch table.
#[derive(Debug, Clone, Serialize)]
pub struct FlowSummary {
    pub method: String,
    pub k: usize,
    pub requested_k: usize,
    pub lambda_k: f64,
    pub nu: usize,
    pub deficiency: i64,
    pub simple: bool,
    pub nowhere_zero: bool,
    pub n_sign_change_edges: usize,
    pub converged_count: usize,
    pub crossings: Vec<CrossingSummary>,
    pub crossings_below: usize,
    pub branch_origins: Vec<String>,
    pub refinement_exhausted: bool,
    pub block_matches: usize,
    pub min_overlap: f64,
    pub warnings: Vec<String>,
}

impl FlowSummary {
    pub fn crossings_of(flow: &FlowResult) -> Vec<CrossingSummary> {
        flow.crossings
            .iter()
            .map(|c| CrossingSummary {
                branch: c.branch,
                sigma_lo: c.sigma_lo,
                sigma_hi: c.sigma_hi,
                upward: c.upward,
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}
