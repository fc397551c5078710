//! Two-sided inference composed from mirrored one-sided graphical
//! procedures run in the benefit and harm directions.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::normal::SummaryStat;

use super::{
    adjusted_p_values, sequentially_rejective_test, simultaneous_bounds, McpGraph, PValue,
    PValueSet,
};

/// Interval on the analysis scale with per-side open/closed flags. An open
/// side sits at a null boundary clamped by a rejection and is rendered
/// with a round bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjustedInterval {
    pub lower: f64,
    pub lower_open: bool,
    pub upper: f64,
    pub upper_open: bool,
}

/// Multiplicity-adjusted two-sided inference for one hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisInference {
    pub adjusted_p_two_sided: f64,
    /// None when the endpoint has not been observed yet.
    pub interval: Option<AdjustedInterval>,
    pub rejected_benefit: bool,
    pub rejected_harm: bool,
}

/// Run the benefit- and harm-direction procedures at one-sided level
/// `alpha_one_sided` and compose them: the two-sided adjusted p-value is
/// twice the smaller one-sided adjusted p-value (capped at 1) and the
/// adjusted interval is the intersection of the two one-sided bound sets.
pub fn two_sided_inference(
    benefit: &McpGraph,
    harm: &McpGraph,
    p_benefit: &PValueSet,
    p_harm: &PValueSet,
    alpha_one_sided: f64,
    summaries: &BTreeMap<String, SummaryStat>,
    terminal_weights: &[f64],
) -> Result<BTreeMap<String, HypothesisInference>> {
    if benefit.hypotheses() != harm.hypotheses() {
        return Err(Error::Validation(vec![format!(
            "benefit and harm graphs must share the hypothesis set; got {:?} vs {:?}",
            benefit.hypotheses(),
            harm.hypotheses()
        )]));
    }

    let adj_benefit = adjusted_p_values(benefit, p_benefit)?;
    let adj_harm = adjusted_p_values(harm, p_harm)?;
    let rej_benefit = sequentially_rejective_test(benefit, p_benefit, alpha_one_sided)?;
    let rej_harm = sequentially_rejective_test(harm, p_harm, alpha_one_sided)?;
    let bounds_benefit = simultaneous_bounds(
        benefit,
        p_benefit,
        alpha_one_sided,
        summaries,
        terminal_weights,
    )?;
    // Bounds are computed in the normalized frame of whichever direction is
    // being tested; for the harm run the benefit direction is flipped.
    let harm_summaries: BTreeMap<String, SummaryStat> = summaries
        .iter()
        .map(|(k, s)| {
            let mut m = *s;
            m.scale.benefit = match s.scale.benefit {
                crate::normal::BenefitDirection::LowerIsBetter => {
                    crate::normal::BenefitDirection::HigherIsBetter
                }
                crate::normal::BenefitDirection::HigherIsBetter => {
                    crate::normal::BenefitDirection::LowerIsBetter
                }
            };
            m.z = -s.z;
            m.p_one_sided = 1.0 - s.p_one_sided;
            (k.clone(), m)
        })
        .collect();
    let bounds_harm = simultaneous_bounds(
        harm,
        p_harm,
        alpha_one_sided,
        &harm_summaries,
        terminal_weights,
    )?;

    let mut out = BTreeMap::new();
    for id in benefit.hypotheses() {
        let adjusted_p_two_sided = (2.0 * adj_benefit[id].min(adj_harm[id])).min(1.0);
        let available = matches!(p_benefit.get(id), Some(PValue::Available(_)));
        let interval = if available {
            let s = summaries.get(id).ok_or_else(|| {
                Error::domain(format!("missing summary for graph hypothesis {id:?}"))
            })?;
            let b = bounds_benefit[id];
            let h = bounds_harm[id];
            // Benefit bound constrains the benefit-normalized effect from
            // below, harm bound the mirrored effect from below; map both
            // back to the analysis scale.
            Some(if s.scale.benefit_sign() > 0.0 {
                AdjustedInterval {
                    lower: b.value,
                    lower_open: b.open,
                    upper: -h.value,
                    upper_open: h.open,
                }
            } else {
                AdjustedInterval {
                    lower: h.value,
                    lower_open: h.open,
                    upper: -b.value,
                    upper_open: b.open,
                }
            })
        } else {
            None
        };
        out.insert(
            id.clone(),
            HypothesisInference {
                adjusted_p_two_sided,
                interval,
                rejected_benefit: rej_benefit.is_rejected(id),
                rejected_harm: rej_harm.is_rejected(id),
            },
        );
    }
    Ok(out)
}

/// Harm-direction p-values mirrored from benefit-direction ones
/// (`p_harm = 1 - p_benefit`); unavailable entries stay unavailable.
pub fn mirrored_harm_pvalues(p_benefit: &PValueSet) -> PValueSet {
    p_benefit
        .iter()
        .map(|(k, v)| {
            let m = match v {
                PValue::Available(p) => PValue::Available(1.0 - p),
                PValue::Unavailable => PValue::Unavailable,
            };
            (k.clone(), m)
        })
        .collect()
}
