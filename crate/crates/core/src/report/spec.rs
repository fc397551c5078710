//! Trial specification document: a versioned JSON schema carrying the
//! endpoints, the multiple-testing graph, the group-sequential designs
//! and observations, and the output configuration. Parsed documents are
//! fully validated up front with every violation reported together.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gsd::SpendingFunction;
use crate::mcp::validate_graph;
use crate::normal::{events_to_information, BenefitDirection, ScaleKind};

pub const SCHEMA_VERSION: u32 = 1;

/// How an endpoint's summary statistics are supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SummaryInput {
    /// Natural-scale estimate with its confidence interval.
    EstimateCi {
        estimate: f64,
        lo: f64,
        hi: f64,
        level: f64,
    },
    /// Natural-scale estimate with an analysis-scale standard error.
    EstimateSe { estimate: f64, se: f64 },
    /// Benefit-normalized z with Fisher information.
    ZInformation { z: f64, information: f64 },
}

/// One endpoint: identity, scale, and (if observed) summary input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointSpec {
    pub id: String,
    pub label: String,
    pub scale: ScaleKind,
    pub benefit: BenefitDirection,
    /// Absent for endpoints not yet observed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<SummaryInput>,
}

/// Graph section: the benefit-direction procedure, an optional explicit
/// harm-direction graph (defaults to a structural mirror), and the
/// terminal weights used by the all-rejected bound construction
/// (defaults to the initial weights).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McpSpec {
    pub alpha_one_sided: f64,
    pub hypotheses: Vec<String>,
    pub weights: Vec<f64>,
    pub transitions: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harm: Option<HarmGraphSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal_weights: Option<Vec<f64>>,
}

/// Explicit harm-direction graph over the same hypotheses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmGraphSpec {
    pub weights: Vec<f64>,
    pub transitions: Vec<Vec<f64>>,
}

/// Group-sequential design shell. Maximum information comes either
/// directly or from a planned event count (log hazard ratio endpoints).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub info_fractions: Vec<f64>,
    pub alpha_one_sided: f64,
    pub spending: SpendingFunction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_information: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_events: Option<u32>,
    #[serde(default = "default_allocation")]
    pub allocation_ratio: f64,
}

fn default_allocation() -> f64 {
    1.0
}

impl DesignSpec {
    /// Resolve the planned maximum information.
    pub fn resolved_max_information(&self) -> Result<f64> {
        match (self.max_information, self.max_events) {
            (Some(i), None) => Ok(i),
            (None, Some(d)) => events_to_information(d, self.allocation_ratio),
            _ => Err(Error::Validation(vec![
                "design needs exactly one of max_information or max_events".to_string(),
            ])),
        }
    }
}

/// What was observed at one look of a group-sequential endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSpec {
    pub look: usize,
    /// Natural-scale estimate (hazard ratio for log-HR endpoints).
    pub estimate: f64,
    /// Observed information; alternatively an observed event count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub information: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<u32>,
    pub stopped: bool,
}

/// One group-sequential endpoint: design shell, per-look observations,
/// and an optional confirmatory gate on a predecessor endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GsdEndpointSpec {
    pub id: String,
    pub design: DesignSpec,
    pub observations: Vec<ObservationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate_on: Option<String>,
}

/// Monte Carlo configuration for the bias-adjusted estimator rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSpec {
    pub seed: u64,
    pub replications: u64,
}

impl Default for McSpec {
    fn default() -> Self {
        let d = crate::mc::RngConfig::default();
        McSpec {
            seed: d.seed,
            replications: d.replications,
        }
    }
}

/// Output configuration: rounding digits and display conventions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    #[serde(default = "default_effect_digits")]
    pub effect_digits: usize,
    #[serde(default = "default_p_digits")]
    pub p_digits: usize,
    #[serde(default = "default_ci_level")]
    pub ci_level: f64,
    /// Prefix positive finite bounds with '+' in the text rendering.
    #[serde(default)]
    pub positive_sign: bool,
}

fn default_effect_digits() -> usize {
    2
}
fn default_p_digits() -> usize {
    3
}
fn default_ci_level() -> f64 {
    0.95
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            effect_digits: 2,
            p_digits: 3,
            ci_level: 0.95,
            positive_sign: false,
        }
    }
}

/// A full trial specification document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub schema_version: u32,
    pub title: String,
    pub endpoints: Vec<EndpointSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mcp: Option<McpSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gsd_endpoints: Option<Vec<GsdEndpointSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Parse and validate a spec document from a string.
pub fn load_spec_str(text: &str) -> Result<TrialSpec> {
    let spec: TrialSpec = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    let problems = validate_spec(&spec);
    if problems.is_empty() {
        Ok(spec)
    } else {
        Err(Error::Validation(problems))
    }
}

/// Parse and validate a spec document from a file.
pub fn load_spec(path: impl AsRef<Path>) -> Result<TrialSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    load_spec_str(&text)
}

/// Every structural violation in the document, reported together.
pub fn validate_spec(spec: &TrialSpec) -> Vec<String> {
    let mut out = Vec::new();
    if spec.schema_version != SCHEMA_VERSION {
        out.push(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            spec.schema_version
        ));
    }
    if spec.endpoints.is_empty() {
        out.push("spec declares no endpoints".to_string());
    }
    let mut ids = BTreeSet::new();
    for e in &spec.endpoints {
        if !ids.insert(e.id.clone()) {
            out.push(format!("duplicate endpoint id {:?}", e.id));
        }
        if let Some(SummaryInput::EstimateCi {
            estimate,
            lo,
            hi,
            level,
        }) = &e.summary
        {
            if !(lo < hi) {
                out.push(format!(
                    "endpoint {:?}: interval [{lo}, {hi}] not ordered",
                    e.id
                ));
            }
            if !(estimate >= lo && estimate <= hi) {
                out.push(format!(
                    "endpoint {:?}: estimate {estimate} outside [{lo}, {hi}]",
                    e.id
                ));
            }
            if !(*level > 0.0 && *level < 1.0) {
                out.push(format!("endpoint {:?}: level {level} outside (0, 1)", e.id));
            }
            if e.scale == ScaleKind::LogHazardRatio && (*lo <= 0.0 || *estimate <= 0.0) {
                out.push(format!(
                    "endpoint {:?}: hazard-ratio inputs must be positive",
                    e.id
                ));
            }
        }
        if let Some(SummaryInput::EstimateSe { se, estimate }) = &e.summary {
            if !(*se > 0.0) {
                out.push(format!("endpoint {:?}: se {se} must be positive", e.id));
            }
            if e.scale == ScaleKind::LogHazardRatio && *estimate <= 0.0 {
                out.push(format!(
                    "endpoint {:?}: hazard-ratio estimate must be positive",
                    e.id
                ));
            }
        }
        if let Some(SummaryInput::ZInformation { information, .. }) = &e.summary {
            if !(*information > 0.0) {
                out.push(format!(
                    "endpoint {:?}: information {information} must be positive",
                    e.id
                ));
            }
        }
    }
    let endpoint_ids: BTreeSet<&str> = spec.endpoints.iter().map(|e| e.id.as_str()).collect();

    let mut graph_ids: BTreeSet<&str> = BTreeSet::new();
    if let Some(mcp) = &spec.mcp {
        if !(mcp.alpha_one_sided > 0.0 && mcp.alpha_one_sided < 0.5) {
            out.push(format!(
                "mcp alpha_one_sided {} outside (0, 0.5)",
                mcp.alpha_one_sided
            ));
        }
        for v in validate_graph(&mcp.hypotheses, &mcp.weights, &mcp.transitions) {
            out.push(format!("mcp graph: {v}"));
        }
        for h in &mcp.hypotheses {
            graph_ids.insert(h);
            if !endpoint_ids.contains(h.as_str()) {
                out.push(format!("mcp hypothesis {h:?} matches no endpoint"));
            }
        }
        if let Some(harm) = &mcp.harm {
            for v in validate_graph(&mcp.hypotheses, &harm.weights, &harm.transitions) {
                out.push(format!("mcp harm graph: {v}"));
            }
        }
        if let Some(tw) = &mcp.terminal_weights {
            if tw.len() != mcp.hypotheses.len() {
                out.push(format!(
                    "terminal_weights has {} entries for {} hypotheses",
                    tw.len(),
                    mcp.hypotheses.len()
                ));
            }
            if tw.iter().any(|w| *w < 0.0) || tw.iter().sum::<f64>() > 1.0 + 1e-12 {
                out.push("terminal_weights must be nonnegative with sum <= 1".to_string());
            }
        }
    }

    if let Some(gsd) = &spec.gsd_endpoints {
        let gsd_ids: BTreeMap<&str, &GsdEndpointSpec> =
            gsd.iter().map(|g| (g.id.as_str(), g)).collect();
        if gsd_ids.len() != gsd.len() {
            out.push("duplicate gsd endpoint ids".to_string());
        }
        for g in gsd {
            if !endpoint_ids.contains(g.id.as_str()) {
                out.push(format!("gsd endpoint {:?} matches no endpoint", g.id));
            }
            if graph_ids.contains(g.id.as_str()) {
                out.push(format!(
                    "endpoint {:?} appears in both the mcp and gsd sections",
                    g.id
                ));
            }
            let k = g.design.info_fractions.len();
            if k == 0 {
                out.push(format!("gsd endpoint {:?}: design has no looks", g.id));
            }
            for w in g.design.info_fractions.windows(2) {
                if w[1] <= w[0] {
                    out.push(format!(
                        "gsd endpoint {:?}: info fractions not increasing",
                        g.id
                    ));
                    break;
                }
            }
            if let Some(&last) = g.design.info_fractions.last() {
                if (last - 1.0).abs() > 1e-12 {
                    out.push(format!(
                        "gsd endpoint {:?}: final info fraction must be 1",
                        g.id
                    ));
                }
            }
            if !(g.design.alpha_one_sided > 0.0 && g.design.alpha_one_sided < 0.5) {
                out.push(format!(
                    "gsd endpoint {:?}: alpha_one_sided outside (0, 0.5)",
                    g.id
                ));
            }
            if let Err(e) = g.design.resolved_max_information() {
                out.push(format!("gsd endpoint {:?}: {e}", g.id));
            }
            if g.observations.is_empty() {
                out.push(format!("gsd endpoint {:?} has no observations", g.id));
            }
            for obs in &g.observations {
                if obs.look == 0 || obs.look > k {
                    out.push(format!(
                        "gsd endpoint {:?}: observation look {} outside 1..={k}",
                        g.id, obs.look
                    ));
                }
                match (obs.information, obs.events) {
                    (Some(i), None) if i > 0.0 => {}
                    (None, Some(d)) if d > 0 => {}
                    _ => out.push(format!(
                        "gsd endpoint {:?} look {}: need exactly one of information or events, positive",
                        g.id, obs.look
                    )),
                }
            }
            if let Some(gate) = &g.gate_on {
                if !gsd_ids.contains_key(gate.as_str()) && !graph_ids.contains(gate.as_str()) {
                    out.push(format!(
                        "gsd endpoint {:?}: gate_on {gate:?} matches no tested endpoint",
                        g.id
                    ));
                }
            }
        }
        // gate chains must be acyclic
        for g in gsd {
            let mut seen = BTreeSet::new();
            let mut cur = g.id.as_str();
            seen.insert(cur);
            while let Some(next) = gsd_ids.get(cur).and_then(|s| s.gate_on.as_deref()) {
                if !seen.insert(next) {
                    out.push(format!("gate chain starting at {:?} is cyclic", g.id));
                    break;
                }
                if !gsd_ids.contains_key(next) {
                    break;
                }
                cur = next;
            }
        }
    }

    if spec.mcp.is_none() && spec.gsd_endpoints.as_ref().is_none_or(|g| g.is_empty()) {
        out.push("spec has neither an mcp section nor gsd endpoints".to_string());
    }
    if spec.output.effect_digits > 9 || spec.output.p_digits > 9 {
        out.push("output digits must be at most 9".to_string());
    }
    if !(spec.output.ci_level > 0.0 && spec.output.ci_level < 1.0) {
        out.push(format!(
            "output ci_level {} outside (0, 1)",
            spec.output.ci_level
        ));
    }
    out
}
