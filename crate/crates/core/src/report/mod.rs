//! Report assembly: spec ingestion, orchestration of the inference
//! modules, confirmatory/descriptive flagging (including hierarchical
//! gating across group-sequential endpoints), and rendering of
//! regulatory-style result tables.

mod render;
mod spec;

pub use render::{render, RenderFormat, Rounding};
pub use spec::{
    load_spec, load_spec_str, validate_spec, DesignSpec, EndpointSpec, GsdEndpointSpec,
    HarmGraphSpec, McSpec, McpSpec, ObservationSpec, OutputSpec, SummaryInput, TrialSpec,
    SCHEMA_VERSION,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gsd::{compute_boundaries, GridSpec, GroupSequentialDesign};
use crate::inference::{BiasAdjustKind, GsdInference, LookObservation};
use crate::mc::RngConfig;
use crate::mcp::{two_sided_inference, McpGraph, PValue, PValueSet, ALPHA_EPS};
use crate::normal::{ci_from_summary, summary_from_ci, EndpointScale, SummaryStat};

/// Inferential weight of a reported row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowStatus {
    #[serde(rename = "confirmatory")]
    Confirmatory,
    #[serde(rename = "descriptive")]
    Descriptive,
    #[serde(rename = "not-yet-decided")]
    NotYetDecided,
}

impl RowStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowStatus::Confirmatory => "confirmatory",
            RowStatus::Descriptive => "descriptive",
            RowStatus::NotYetDecided => "not-yet-decided",
        }
    }
}

/// Natural-scale interval with open/closed endpoint flags. An open side
/// was clamped at a null boundary by a rejection and renders with a round
/// bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplayInterval {
    pub lower: f64,
    pub lower_open: bool,
    pub upper: f64,
    pub upper_open: bool,
}

impl DisplayInterval {
    fn closed(lower: f64, upper: f64) -> Self {
        DisplayInterval {
            lower,
            lower_open: false,
            upper,
            upper_open: false,
        }
    }

    /// The interval excludes the null value (an open endpoint sitting on
    /// the null counts as exclusion).
    pub fn excludes(&self, null_value: f64) -> bool {
        null_value < self.lower
            || null_value > self.upper
            || (null_value == self.lower && self.lower_open)
            || (null_value == self.upper && self.upper_open)
    }
}

/// Which estimator (or inference route) a row reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    /// Graph-procedure row: per-comparison plus adjusted inference.
    Endpoint,
    Naive,
    MedianUnbiased,
    UnconditionalAdjusted,
    ConditionalAdjusted,
    Repeated,
}

impl RowKind {
    fn estimator_label(&self) -> &'static str {
        match self {
            RowKind::Endpoint => "",
            RowKind::Naive => "Naive estimate",
            RowKind::MedianUnbiased => "Median-unbiased estimate",
            RowKind::UnconditionalAdjusted => "Unconditional bias-adjusted estimate",
            RowKind::ConditionalAdjusted => "Conditional bias-adjusted estimate",
            RowKind::Repeated => "Repeated interval and p-value",
        }
    }
}

/// One rendered row. All values are on the natural display scale (hazard
/// ratios exponentiated); p-values are two-sided.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub endpoint_id: String,
    pub label: String,
    pub kind: RowKind,
    pub estimate: Option<f64>,
    pub interval: Option<DisplayInterval>,
    pub p: Option<f64>,
    pub adjusted_interval: Option<DisplayInterval>,
    pub adjusted_p: Option<f64>,
    pub status: Option<RowStatus>,
}

impl ReportRow {
    fn empty(endpoint_id: &str, label: &str, kind: RowKind) -> Self {
        ReportRow {
            endpoint_id: endpoint_id.to_string(),
            label: label.to_string(),
            kind,
            estimate: None,
            interval: None,
            p: None,
            adjusted_interval: None,
            adjusted_p: None,
            status: None,
        }
    }
}

/// Table layout family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableLayout {
    Graph,
    GroupSequential,
}

/// Rendered rows plus footnotes.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub title: String,
    pub layout: TableLayout,
    pub ci_level: f64,
    pub rows: Vec<ReportRow>,
    pub footnotes: Vec<String>,
}

/// Gate resolution for one endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct GateStatus {
    pub endpoint_id: String,
    pub satisfied: bool,
    pub reason: String,
}

fn endpoint_scale(e: &EndpointSpec) -> EndpointScale {
    EndpointScale {
        kind: e.scale,
        benefit: e.benefit,
    }
}

fn build_summary(e: &EndpointSpec) -> Result<Option<SummaryStat>> {
    let scale = endpoint_scale(e);
    match &e.summary {
        None => Ok(None),
        Some(SummaryInput::EstimateCi {
            estimate,
            lo,
            hi,
            level,
        }) => Ok(Some(summary_from_ci(*estimate, *lo, *hi, *level, scale)?)),
        Some(SummaryInput::EstimateSe { estimate, se }) => {
            Ok(Some(SummaryStat::from_estimate_se(*estimate, *se, scale)?))
        }
        Some(SummaryInput::ZInformation { z, information }) => Ok(Some(
            SummaryStat::from_z_information(*z, *information, scale)?,
        )),
    }
}

/// Map an analysis-scale interval (with flags) onto the natural display
/// scale of the endpoint.
fn natural_interval(
    scale: EndpointScale,
    lower: f64,
    lower_open: bool,
    upper: f64,
    upper_open: bool,
) -> DisplayInterval {
    DisplayInterval {
        lower: scale.to_natural(lower),
        lower_open,
        upper: scale.to_natural(upper),
        upper_open,
    }
}

/// Two-direction graph inference for every hypothesis, in graph order.
struct GraphInference {
    order: Vec<String>,
    rows: BTreeMap<String, crate::mcp::HypothesisInference>,
    summaries: BTreeMap<String, SummaryStat>,
    mirrored_harm: bool,
}

fn graph_inference(spec: &TrialSpec) -> Result<GraphInference> {
    let mcp = spec
        .mcp
        .as_ref()
        .ok_or_else(|| Error::domain("spec has no mcp section".to_string()))?;
    let endpoints: BTreeMap<&str, &EndpointSpec> =
        spec.endpoints.iter().map(|e| (e.id.as_str(), e)).collect();

    let benefit = McpGraph::new(
        mcp.hypotheses.clone(),
        mcp.weights.clone(),
        mcp.transitions.clone(),
    )?;
    let harm = match &mcp.harm {
        Some(h) => McpGraph::new(
            mcp.hypotheses.clone(),
            h.weights.clone(),
            h.transitions.clone(),
        )?,
        None => benefit.clone(),
    };
    let terminal = mcp
        .terminal_weights
        .clone()
        .unwrap_or_else(|| mcp.weights.clone());

    let mut summaries: BTreeMap<String, SummaryStat> = BTreeMap::new();
    let mut p_benefit: PValueSet = BTreeMap::new();
    for id in benefit.hypotheses() {
        let e = endpoints[id.as_str()];
        match build_summary(e)? {
            Some(s) => {
                p_benefit.insert(id.clone(), PValue::Available(s.p_one_sided));
                summaries.insert(id.clone(), s);
            }
            None => {
                p_benefit.insert(id.clone(), PValue::Unavailable);
            }
        }
    }
    let p_harm = crate::mcp::mirrored_harm_pvalues(&p_benefit);
    let rows = two_sided_inference(
        &benefit,
        &harm,
        &p_benefit,
        &p_harm,
        mcp.alpha_one_sided,
        &summaries,
        &terminal,
    )?;
    Ok(GraphInference {
        order: benefit.hypotheses().to_vec(),
        rows,
        summaries,
        mirrored_harm: mcp.harm.is_none(),
    })
}

/// Run the graphical multiple-comparison report: per-comparison rows from
/// the summaries, adjusted rows from the two-direction composition.
/// Endpoints without data render with em-dashes and await analysis.
pub fn run_graph_report(spec: &TrialSpec) -> Result<ReportTable> {
    let mcp = spec
        .mcp
        .as_ref()
        .ok_or_else(|| Error::domain("spec has no mcp section".to_string()))?;
    let endpoints: BTreeMap<&str, &EndpointSpec> =
        spec.endpoints.iter().map(|e| (e.id.as_str(), e)).collect();
    let gi = graph_inference(spec)?;

    let mut rows = Vec::new();
    for id in &gi.order {
        let e = endpoints[id.as_str()];
        let scale = endpoint_scale(e);
        let inf = &gi.rows[id];
        let mut row = ReportRow::empty(id, &e.label, RowKind::Endpoint);
        if let Some(s) = gi.summaries.get(id) {
            let (lo, hi) = ci_from_summary(s, spec.output.ci_level)?;
            row.estimate = Some(s.natural_estimate());
            row.interval = Some(DisplayInterval::closed(lo, hi));
            row.p = Some(s.p_two_sided);
            let iv = inf.interval.expect("available endpoints carry intervals");
            row.adjusted_interval = Some(natural_interval(
                scale,
                iv.lower,
                iv.lower_open,
                iv.upper,
                iv.upper_open,
            ));
            row.adjusted_p = Some(inf.adjusted_p_two_sided);
            row.status = Some(if inf.rejected_benefit || inf.rejected_harm {
                RowStatus::Confirmatory
            } else {
                RowStatus::Descriptive
            });
        } else {
            row.status = Some(RowStatus::NotYetDecided);
        }
        rows.push(row);
    }

    let mut footnotes = vec![two_sided_note(mcp.alpha_one_sided)];
    if gi.mirrored_harm {
        footnotes
            .push("The harm-direction procedure mirrors the benefit-direction graph.".to_string());
    }
    if rows.iter().any(|r| r.estimate.is_none()) {
        footnotes.push("Endpoints shown with em-dashes have no data yet.".to_string());
    }

    Ok(ReportTable {
        title: spec.title.clone(),
        layout: TableLayout::Graph,
        ci_level: spec.output.ci_level,
        rows,
        footnotes,
    })
}

fn two_sided_note(alpha: f64) -> String {
    format!(
        "Two-sided adjusted inference runs the one-sided procedure twice (benefit and harm \
         directions, each at level {alpha}); the adjusted p-value is twice the smaller \
         one-sided adjusted p-value and the adjusted interval intersects the two one-sided \
         bound sets."
    )
}

/// Resolved pieces of one group-sequential endpoint analysis, shared by
/// the report assembly and the gating logic.
struct GsdAnalysis<'a> {
    endpoint: &'a EndpointSpec,
    spec: &'a GsdEndpointSpec,
    design: GroupSequentialDesign,
    max_information: f64,
    obs: LookObservation,
    crossed: bool,
}

fn analyze_gsd_endpoint<'a>(
    g: &'a GsdEndpointSpec,
    endpoints: &BTreeMap<&str, &'a EndpointSpec>,
) -> Result<GsdAnalysis<'a>> {
    let endpoint = endpoints
        .get(g.id.as_str())
        .ok_or_else(|| Error::domain(format!("gsd endpoint {:?} unknown", g.id)))?;
    let design = compute_boundaries(
        &g.design.info_fractions,
        g.design.alpha_one_sided,
        g.design.spending.clone(),
        GridSpec::BOUNDARY,
    )?;
    let max_information = g.design.resolved_max_information()?;
    let last = g
        .observations
        .iter()
        .max_by_key(|o| o.look)
        .ok_or_else(|| Error::domain(format!("gsd endpoint {:?} has no observations", g.id)))?;
    if last.look > design.looks() {
        return Err(Error::domain(format!(
            "gsd endpoint {:?}: observation look {} exceeds design looks {}",
            g.id,
            last.look,
            design.looks()
        )));
    }
    let scale = endpoint_scale(endpoint);
    let information = match (last.information, last.events) {
        (Some(i), None) => i,
        (None, Some(d)) => crate::normal::events_to_information(d, g.design.allocation_ratio)?,
        _ => {
            return Err(Error::domain(format!(
                "gsd endpoint {:?} look {}: need exactly one of information or events",
                g.id, last.look
            )))
        }
    };
    let mle_benefit = scale.benefit_sign() * scale.to_analysis(last.estimate)?;
    let obs = LookObservation::from_mle(last.look, mle_benefit, information, last.stopped)?;
    let crossed = obs.z + ALPHA_EPS >= design.boundaries[last.look - 1];
    Ok(GsdAnalysis {
        endpoint,
        spec: g,
        design,
        max_information,
        obs,
        crossed,
    })
}

/// Gate resolution: an endpoint's confirmatory claim requires every
/// ancestor in its gate chain to be rejected.
pub fn apply_gating(
    spec: &TrialSpec,
    rejections: &BTreeMap<String, bool>,
) -> Result<Vec<GateStatus>> {
    let gsd = spec.gsd_endpoints.as_deref().unwrap_or(&[]);
    let by_id: BTreeMap<&str, &GsdEndpointSpec> = gsd.iter().map(|g| (g.id.as_str(), g)).collect();
    let mut out = Vec::new();
    for g in gsd {
        let mut satisfied = true;
        let mut reason = "no gate".to_string();
        let mut cur = g.gate_on.as_deref();
        let mut hops = 0;
        while let Some(anc) = cur {
            hops += 1;
            if hops > gsd.len() + 1 {
                return Err(Error::domain(format!(
                    "gate chain starting at {:?} is cyclic",
                    g.id
                )));
            }
            match rejections.get(anc) {
                Some(true) => {
                    if satisfied {
                        reason = format!("gate on {anc:?} satisfied");
                    }
                }
                Some(false) | None => {
                    satisfied = false;
                    reason = format!("gate not satisfied: {anc:?} not rejected");
                    break;
                }
            }
            cur = by_id.get(anc).and_then(|s| s.gate_on.as_deref());
        }
        out.push(GateStatus {
            endpoint_id: g.id.clone(),
            satisfied,
            reason,
        });
    }
    Ok(out)
}

/// Run the group-sequential report: per endpoint a naive row, the
/// estimator rows when a boundary decision was reached, and always a
/// repeated-inference row.
pub fn run_gsd_report(spec: &TrialSpec, mc: &McSpec) -> Result<ReportTable> {
    let gsd = spec
        .gsd_endpoints
        .as_deref()
        .filter(|g| !g.is_empty())
        .ok_or_else(|| Error::domain("spec has no gsd endpoints".to_string()))?;
    let endpoints: BTreeMap<&str, &EndpointSpec> =
        spec.endpoints.iter().map(|e| (e.id.as_str(), e)).collect();
    let level = spec.output.ci_level;
    let cfg = RngConfig {
        seed: mc.seed,
        replications: mc.replications,
        substreams: 1,
    };

    let analyses: Vec<GsdAnalysis> = gsd
        .iter()
        .map(|g| analyze_gsd_endpoint(g, &endpoints))
        .collect::<Result<_>>()?;

    // Rejections feeding gates: a graph hypothesis counts when its
    // benefit-direction test rejected; a gsd endpoint when it crossed.
    let mut rejections: BTreeMap<String, bool> = BTreeMap::new();
    if spec.mcp.is_some() {
        let gi = graph_inference(spec)?;
        for (id, inf) in &gi.rows {
            rejections.insert(id.clone(), inf.rejected_benefit);
        }
    }
    for a in &analyses {
        rejections.insert(a.spec.id.clone(), a.crossed);
    }
    let gates = apply_gating(spec, &rejections)?;
    let gate_of: BTreeMap<&str, &GateStatus> =
        gates.iter().map(|s| (s.endpoint_id.as_str(), s)).collect();

    let mut rows = Vec::new();
    let mut footnotes = Vec::new();
    let mut any_adjusted = false;
    for a in &analyses {
        let scale = endpoint_scale(a.endpoint);
        let s = scale.benefit_sign();
        let to_display = |iv: (f64, f64)| -> DisplayInterval {
            // Benefit-normalized interval back to the analysis scale, then
            // to the natural scale.
            let (lo_a, hi_a) = if s > 0.0 {
                (iv.0, iv.1)
            } else {
                (-iv.1, -iv.0)
            };
            DisplayInterval::closed(scale.to_natural(lo_a), scale.to_natural(hi_a))
        };
        let gate = gate_of[a.spec.id.as_str()];
        let status = if a.crossed && gate.satisfied {
            RowStatus::Confirmatory
        } else if a.crossed {
            RowStatus::Descriptive
        } else if a.obs.look < a.design.looks() {
            RowStatus::NotYetDecided
        } else {
            RowStatus::Descriptive
        };

        let inf = GsdInference::new(&a.design, a.max_information)?;
        let two_sided = |p_one: f64| (2.0 * p_one).min(1.0);

        // Section header row.
        rows.push(ReportRow::empty(
            &a.spec.id,
            &a.endpoint.label,
            RowKind::Endpoint,
        ));

        let naive = inf.naive(&a.obs, level)?;
        rows.push(ReportRow {
            endpoint_id: a.spec.id.clone(),
            label: RowKind::Naive.estimator_label().to_string(),
            kind: RowKind::Naive,
            estimate: Some(scale.to_natural(s * a.obs.mle)),
            interval: Some(to_display(naive.interval)),
            p: naive.p_value.map(two_sided),
            adjusted_interval: None,
            adjusted_p: None,
            status: Some(status),
        });

        if a.obs.stopped {
            let mu = inf.median_unbiased(&a.obs, level)?;
            rows.push(ReportRow {
                endpoint_id: a.spec.id.clone(),
                label: RowKind::MedianUnbiased.estimator_label().to_string(),
                kind: RowKind::MedianUnbiased,
                estimate: Some(scale.to_natural(s * mu.estimate)),
                interval: Some(to_display(mu.interval)),
                p: mu.p_value.map(two_sided),
                adjusted_interval: None,
                adjusted_p: None,
                status: None,
            });
            for (kind, tag) in [
                (
                    BiasAdjustKind::Unconditional,
                    RowKind::UnconditionalAdjusted,
                ),
                (BiasAdjustKind::Conditional, RowKind::ConditionalAdjusted),
            ] {
                let est = inf.bias_adjusted_estimate(&a.obs, kind, level, &cfg)?;
                any_adjusted = true;
                rows.push(ReportRow {
                    endpoint_id: a.spec.id.clone(),
                    label: tag.estimator_label().to_string(),
                    kind: tag,
                    estimate: Some(scale.to_natural(s * est.estimate)),
                    interval: Some(to_display(est.interval)),
                    p: None,
                    adjusted_interval: None,
                    adjusted_p: None,
                    status: None,
                });
            }
        }

        let rep_iv = inf.repeated_ci(&a.obs, level)?;
        let rep_p = inf.repeated_p_value(&a.obs)?;
        rows.push(ReportRow {
            endpoint_id: a.spec.id.clone(),
            label: RowKind::Repeated.estimator_label().to_string(),
            kind: RowKind::Repeated,
            estimate: None,
            interval: Some(to_display(rep_iv)),
            p: Some(rep_p),
            adjusted_interval: None,
            adjusted_p: None,
            status: None,
        });

        let look = a.obs.look;
        let local = 2.0 * a.design.local_levels[look - 1];
        footnotes.push(format!(
            "{}: efficacy boundary at analysis {look} {} (z = {:.2} vs boundary {:.2}; \
             two-sided local level {:.4}).",
            a.endpoint.label,
            if a.crossed { "crossed" } else { "not crossed" },
            a.obs.z,
            a.design.boundaries[look - 1],
            local,
        ));
        if a.spec.gate_on.is_some() {
            footnotes.push(format!(
                "{}: confirmatory status additionally requires its gate ({}).",
                a.endpoint.label, gate.reason
            ));
        }
    }
    footnotes.push(
        "A repeated interval equals the naive interval evaluated at the current look's \
         local confidence level; its p-value is the smallest overall two-sided level at \
         which the recomputed design is crossed."
            .to_string(),
    );
    if any_adjusted {
        footnotes.push(format!(
            "Bias-adjusted rows match simulated expectations of the stage-at-stop estimate \
             (seed {}, {} replications per bias-curve evaluation); no p-values accompany them.",
            cfg.seed, cfg.replications
        ));
    }

    Ok(ReportTable {
        title: spec.title.clone(),
        layout: TableLayout::GroupSequential,
        ci_level: level,
        rows,
        footnotes,
    })
}
