//! Graphical multiple comparison procedures.
//!
//! A procedure is a weighted directed graph: initial local-alpha fractions
//! on the hypotheses plus a transition matrix that re-allocates the weight
//! of a rejected hypothesis to the survivors. The module implements the
//! sequentially rejective test, adjusted p-values, simultaneous confidence
//! bounds, and the composition of two mirrored one-sided procedures into
//! two-sided inference (Bretz et al. 2009; Strassburger & Bretz 2008).

mod bounds;
mod two_sided;

pub use bounds::{simultaneous_bounds, OneSidedBound};
pub use two_sided::{
    mirrored_harm_pvalues, two_sided_inference, AdjustedInterval, HypothesisInference,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance applied to every alpha-boundary comparison.
pub const ALPHA_EPS: f64 = 1e-12;

/// A one-sided p-value for a hypothesis, or the marker for an endpoint
/// that has not been observed yet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PValue {
    Available(f64),
    Unavailable,
}

impl PValue {
    pub fn is_available(&self) -> bool {
        matches!(self, PValue::Available(_))
    }
}

/// Association from hypothesis id to its one-sided p-value.
pub type PValueSet = BTreeMap<String, PValue>;

/// Weighted directed graph encoding a multiple testing procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McpGraph {
    hypotheses: Vec<String>,
    weights: Vec<f64>,
    transitions: Vec<Vec<f64>>,
    #[serde(default)]
    removed: Vec<bool>,
}

/// Structural check of weights and transitions. Returns every violation,
/// each naming the offending hypothesis or matrix entry.
pub fn validate_graph(
    hypotheses: &[String],
    weights: &[f64],
    transitions: &[Vec<f64>],
) -> Vec<String> {
    let n = hypotheses.len();
    let mut out = Vec::new();
    if n == 0 {
        out.push("graph has no hypotheses".to_string());
        return out;
    }
    for (i, h) in hypotheses.iter().enumerate() {
        if hypotheses[..i].contains(h) {
            out.push(format!("duplicate hypothesis id {h:?}"));
        }
    }
    if weights.len() != n {
        out.push(format!(
            "weight count {} does not match hypothesis count {n}",
            weights.len()
        ));
    }
    if transitions.len() != n {
        out.push(format!(
            "transition row count {} does not match hypothesis count {n}",
            transitions.len()
        ));
    }
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() || !(0.0..=1.0 + ALPHA_EPS).contains(&w) {
            out.push(format!("weight[{i}] = {w} outside [0, 1]"));
        }
    }
    let total: f64 = weights.iter().sum();
    if total > 1.0 + ALPHA_EPS {
        out.push(format!("weights sum to {total} > 1"));
    }
    for (i, row) in transitions.iter().enumerate() {
        if row.len() != n {
            out.push(format!(
                "transition row {i} has {} entries, expected {n}",
                row.len()
            ));
            continue;
        }
        for (j, &g) in row.iter().enumerate() {
            if !g.is_finite() || !(0.0..=1.0 + ALPHA_EPS).contains(&g) {
                out.push(format!("transition[{i}][{j}] = {g} outside [0, 1]"));
            }
        }
        if row[i] != 0.0 {
            out.push(format!("transition[{i}][{i}] = {} must be 0", row[i]));
        }
        let row_sum: f64 = row.iter().sum();
        if row_sum > 1.0 + ALPHA_EPS {
            out.push(format!("transition row {i} sums to {row_sum} > 1"));
        }
    }
    out
}

impl McpGraph {
    /// Build and validate a graph. All violations are reported together.
    pub fn new(
        hypotheses: Vec<String>,
        weights: Vec<f64>,
        transitions: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let violations = validate_graph(&hypotheses, &weights, &transitions);
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }
        let n = hypotheses.len();
        Ok(McpGraph {
            hypotheses,
            weights,
            transitions,
            removed: vec![false; n],
        })
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn hypotheses(&self) -> &[String] {
        &self.hypotheses
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.hypotheses
            .iter()
            .position(|h| h == id)
            .ok_or_else(|| Error::domain(format!("unknown hypothesis id {id:?}")))
    }

    pub fn weight_of(&self, id: &str) -> Result<f64> {
        Ok(self.weights[self.index_of(id)?])
    }

    /// The standard weight/transition update after rejecting hypothesis
    /// `id`: survivors inherit `w_j * g_ji`, and transition mass is
    /// re-routed around the removed node.
    pub fn update_after_rejection(&self, id: &str) -> Result<McpGraph> {
        let j = self.index_of(id)?;
        if self.removed[j] {
            return Err(Error::domain(format!(
                "hypothesis {id:?} was already rejected"
            )));
        }
        let n = self.len();
        let mut g = self.clone();
        for l in 0..n {
            if l != j && !g.removed[l] {
                g.weights[l] = self.weights[l] + self.weights[j] * self.transitions[j][l];
            }
        }
        g.weights[j] = 0.0;
        for l in 0..n {
            if l == j || g.removed[l] {
                continue;
            }
            for k in 0..n {
                if k == j || k == l || g.removed[k] {
                    continue;
                }
                let denom = 1.0 - self.transitions[l][j] * self.transitions[j][l];
                g.transitions[l][k] = if denom > 0.0 {
                    (self.transitions[l][k] + self.transitions[l][j] * self.transitions[j][k])
                        / denom
                } else {
                    0.0
                };
            }
        }
        for l in 0..n {
            g.transitions[l][j] = 0.0;
            g.transitions[j][l] = 0.0;
        }
        g.removed[j] = true;
        Ok(g)
    }

    fn rejectable(&self, pvals: &[PValue], alpha: f64) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| !self.removed[i])
            .filter(|&i| match pvals[i] {
                PValue::Available(p) => p <= alpha * self.weights[i] + ALPHA_EPS,
                PValue::Unavailable => false,
            })
            .collect()
    }

    fn aligned_pvalues(&self, pvals: &PValueSet) -> Result<Vec<PValue>> {
        let mut problems = Vec::new();
        let mut out = Vec::with_capacity(self.len());
        for h in &self.hypotheses {
            match pvals.get(h) {
                Some(p) => out.push(*p),
                None => problems.push(format!("no p-value entry for hypothesis {h:?}")),
            }
        }
        for (h, p) in pvals {
            if let PValue::Available(v) = p {
                if !(0.0..=1.0).contains(v) {
                    problems.push(format!("p-value for {h:?} is {v}, outside [0, 1]"));
                }
            }
            if !self.hypotheses.contains(h) {
                problems.push(format!("p-value entry {h:?} matches no hypothesis"));
            }
        }
        if problems.is_empty() {
            Ok(out)
        } else {
            Err(Error::Validation(problems))
        }
    }
}

/// One rejection in a sequentially rejective run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub id: String,
    /// Weight the hypothesis held at the moment it was rejected.
    pub weight: f64,
    /// Local significance level `alpha * weight`.
    pub local_level: f64,
}

/// Outcome of a sequentially rejective test.
#[derive(Debug, Clone)]
pub struct RejectionResult {
    /// Rejected hypotheses in rejection order.
    pub rejected: Vec<String>,
    /// Graph state after all rejections.
    pub final_graph: McpGraph,
    pub trace: Vec<TraceStep>,
    pub all_rejected: bool,
}

impl RejectionResult {
    pub fn is_rejected(&self, id: &str) -> bool {
        self.rejected.iter().any(|r| r == id)
    }
}

/// Sequentially rejective test at one-sided level `alpha`: repeatedly
/// reject any available hypothesis with `p_i <= alpha * w_i` and propagate
/// its weight. Unavailable p-values are never rejected but absorb
/// propagated weight. Ties go to the smallest `p_i / w_i` ratio; the
/// rejected set is order-invariant, so the tie rule only fixes the trace.
pub fn sequentially_rejective_test(
    graph: &McpGraph,
    pvals: &PValueSet,
    alpha: f64,
) -> Result<RejectionResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!(
            "alpha must lie in (0, 1); got {alpha}"
        )));
    }
    let aligned = graph.aligned_pvalues(pvals)?;
    let mut g = graph.clone();
    let mut rejected = Vec::new();
    let mut trace = Vec::new();
    loop {
        let candidates = g.rejectable(&aligned, alpha);
        if candidates.is_empty() {
            break;
        }
        let &next = candidates
            .iter()
            .min_by(|&&a, &&b| {
                let ra = ratio(aligned[a], g.weights[a]);
                let rb = ratio(aligned[b], g.weights[b]);
                ra.partial_cmp(&rb).unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        let id = g.hypotheses[next].clone();
        trace.push(TraceStep {
            id: id.clone(),
            weight: g.weights[next],
            local_level: alpha * g.weights[next],
        });
        rejected.push(id.clone());
        g = g.update_after_rejection(&id)?;
    }
    let all_rejected = rejected.len() == graph.len();
    Ok(RejectionResult {
        rejected,
        final_graph: g,
        trace,
        all_rejected,
    })
}

fn ratio(p: PValue, w: f64) -> f64 {
    match p {
        PValue::Available(p) => {
            if p == 0.0 {
                0.0
            } else if w > 0.0 {
                p / w
            } else {
                f64::INFINITY
            }
        }
        PValue::Unavailable => f64::INFINITY,
    }
}

/// One-sided adjusted p-values: the smallest alpha at which the
/// sequentially rejective test rejects each hypothesis, computed by the
/// sequential max-of-min-ratio scheme. Unavailable hypotheses report 1.
pub fn adjusted_p_values(graph: &McpGraph, pvals: &PValueSet) -> Result<BTreeMap<String, f64>> {
    let aligned = graph.aligned_pvalues(pvals)?;
    let mut g = graph.clone();
    let mut out = BTreeMap::new();
    let mut max_ratio = 0.0_f64;
    let available = aligned.iter().filter(|p| p.is_available()).count();
    for _ in 0..available {
        let next = (0..g.len())
            .filter(|&i| !g.removed[i] && aligned[i].is_available())
            .min_by(|&a, &b| {
                let ra = ratio(aligned[a], g.weights[a]);
                let rb = ratio(aligned[b], g.weights[b]);
                ra.partial_cmp(&rb).unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("available hypothesis remains");
        let r = ratio(aligned[next], g.weights[next]);
        max_ratio = max_ratio.max(r);
        let id = g.hypotheses[next].clone();
        out.insert(id.clone(), max_ratio.min(1.0));
        g = g.update_after_rejection(&id)?;
    }
    for (i, h) in graph.hypotheses.iter().enumerate() {
        if !aligned[i].is_available() {
            out.insert(h.clone(), 1.0);
        }
    }
    Ok(out)
}
