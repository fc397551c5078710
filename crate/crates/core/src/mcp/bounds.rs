//! Simultaneous one-sided confidence bounds compatible with a sequentially
//! rejective graphical procedure.
//!
//! Bounds are computed in the benefit-normalized frame (lower bounds for
//! benefit-positive effects). With `R` the rejected set at level alpha:
//!
//! - `i` rejected, `R` not exhaustive: the bound sits at the null boundary
//!   0, open — the interval confirms the test decision and nothing more;
//! - `i` not rejected: `estimate - q(1 - alpha * w_i(R)) * se` with
//!   `w_i(R)` the weight after rejecting `R`; zero weight gives -inf;
//! - every hypothesis rejected: the bound uses the pre-specified terminal
//!   weights and is clamped from below at 0 (clamped sides are open).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::normal::{norm_quantile, SummaryStat};

use super::{sequentially_rejective_test, McpGraph, PValue, PValueSet};

/// One-sided lower bound in the benefit-normalized frame. `value` may be
/// -inf (uninformative side); `open` marks a bound clamped at the null
/// boundary by a rejection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneSidedBound {
    pub value: f64,
    pub open: bool,
}

/// Simultaneous lower bounds for all hypotheses with available data.
///
/// `terminal_weights` is the pre-specified weight vector used when the
/// procedure rejects everything (the graph itself carries no weights in
/// that state). Hypotheses with unavailable p-values receive no bound;
/// every available hypothesis must come with a summary.
pub fn simultaneous_bounds(
    graph: &McpGraph,
    pvals: &PValueSet,
    alpha: f64,
    summaries: &BTreeMap<String, SummaryStat>,
    terminal_weights: &[f64],
) -> Result<BTreeMap<String, OneSidedBound>> {
    if terminal_weights.len() != graph.len() {
        return Err(Error::domain(format!(
            "terminal weight count {} does not match hypothesis count {}",
            terminal_weights.len(),
            graph.len()
        )));
    }
    let total: f64 = terminal_weights.iter().sum();
    if terminal_weights.iter().any(|w| *w < 0.0) || total > 1.0 + super::ALPHA_EPS {
        return Err(Error::domain(format!(
            "terminal weights must be nonnegative and sum to at most 1; got sum {total}"
        )));
    }

    let outcome = sequentially_rejective_test(graph, pvals, alpha)?;
    let mut out = BTreeMap::new();

    for (idx, id) in graph.hypotheses().iter().enumerate() {
        if matches!(pvals.get(id), Some(PValue::Unavailable)) {
            continue;
        }
        let s = summaries
            .get(id)
            .ok_or_else(|| Error::domain(format!("missing summary for graph hypothesis {id:?}")))?;
        let benefit_estimate = s.scale.benefit_sign() * s.estimate;
        let bound = if outcome.all_rejected {
            let w = terminal_weights[idx];
            let raw = raw_bound(benefit_estimate, s.se, alpha, w);
            if raw < 0.0 {
                OneSidedBound {
                    value: 0.0,
                    open: true,
                }
            } else {
                OneSidedBound {
                    value: raw,
                    open: false,
                }
            }
        } else if outcome.is_rejected(id) {
            OneSidedBound {
                value: 0.0,
                open: true,
            }
        } else {
            let w = outcome.final_graph.weights()[idx];
            OneSidedBound {
                value: raw_bound(benefit_estimate, s.se, alpha, w),
                open: false,
            }
        };
        out.insert(id.clone(), bound);
    }
    Ok(out)
}

fn raw_bound(benefit_estimate: f64, se: f64, alpha: f64, weight: f64) -> f64 {
    if weight <= 0.0 {
        f64::NEG_INFINITY
    } else {
        benefit_estimate - norm_quantile(1.0 - alpha * weight) * se
    }
}
