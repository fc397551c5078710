//! Rendering of report tables to text, CSV, and JSON.
//!
//! Rendering is a pure function of (table, format, rounding): identical
//! inputs yield byte-identical output. The text layout uses fixed-width
//! columns with typographic minus and infinity signs; CSV and JSON stick
//! to ASCII with `-inf` / `+inf` for unbounded sides.

use serde_json::{json, Value};

use super::{DisplayInterval, ReportRow, ReportTable, RowKind, TableLayout};

/// Output format of [`render`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderFormat {
    Text,
    Csv,
    Json,
}

impl std::str::FromStr for RenderFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(RenderFormat::Text),
            "csv" => Ok(RenderFormat::Csv),
            "json" => Ok(RenderFormat::Json),
            other => Err(format!("unknown format {other:?} (expected text|csv|json)")),
        }
    }
}

/// Display rounding: digits for effect-scale numbers and p-values, and
/// whether positive finite bounds carry an explicit plus sign in text.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rounding {
    pub effect_digits: usize,
    pub p_digits: usize,
    pub positive_sign: bool,
}

impl From<&super::OutputSpec> for Rounding {
    fn from(o: &super::OutputSpec) -> Self {
        Rounding {
            effect_digits: o.effect_digits,
            p_digits: o.p_digits,
            positive_sign: o.positive_sign,
        }
    }
}

/// Round to `digits` decimals with ties to even, normalizing -0.
pub fn round_half_even(x: f64, digits: usize) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let scale = 10f64.powi(digits as i32);
    let y = x * scale;
    let floor = y.floor();
    let diff = y - floor;
    let rounded = if (diff - 0.5).abs() < 1e-9 {
        if (floor as i64).rem_euclid(2) == 0 {
            floor
        } else {
            floor + 1.0
        }
    } else {
        y.round()
    };
    let v = rounded / scale;
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

const EM_DASH: &str = "\u{2014}";
const MINUS: char = '\u{2212}';
const MINUS_INF: &str = "\u{2212}\u{221E}";
const PLUS_INF: &str = "+\u{221E}";

fn fmt_effect_text(x: f64, r: &Rounding) -> String {
    if x == f64::NEG_INFINITY {
        return MINUS_INF.to_string();
    }
    if x == f64::INFINITY {
        return PLUS_INF.to_string();
    }
    let v = round_half_even(x, r.effect_digits);
    let mut s = format!("{:.*}", r.effect_digits, v).replace('-', &MINUS.to_string());
    if r.positive_sign && v > 0.0 {
        s.insert(0, '+');
    }
    s
}

fn fmt_effect_ascii(x: f64, digits: usize) -> String {
    if x == f64::NEG_INFINITY {
        return "-inf".to_string();
    }
    if x == f64::INFINITY {
        return "+inf".to_string();
    }
    format!("{:.*}", digits, round_half_even(x, digits))
}

fn fmt_interval_text(iv: &DisplayInterval, r: &Rounding) -> String {
    // Unbounded sides always print square brackets; finite open sides
    // (clamped at a null boundary by a rejection) print round ones.
    let open_l = iv.lower.is_finite() && iv.lower_open;
    let open_r = iv.upper.is_finite() && iv.upper_open;
    format!(
        "{}{}, {}{}",
        if open_l { '(' } else { '[' },
        fmt_effect_text(iv.lower, r),
        fmt_effect_text(iv.upper, r),
        if open_r { ')' } else { ']' },
    )
}

fn fmt_p_text(p: f64, r: &Rounding) -> String {
    if p < 0.0005 {
        "p < 0.001".to_string()
    } else {
        format!("p = {:.*}", r.p_digits, round_half_even(p, r.p_digits))
    }
}

fn fmt_p_ascii(p: f64, digits: usize) -> String {
    if p < 0.0005 {
        "<0.001".to_string()
    } else {
        format!("{:.*}", digits, round_half_even(p, digits))
    }
}

fn level_percent(level: f64) -> String {
    let pct = level * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("{}%", pct.round() as i64)
    } else {
        format!("{pct}%")
    }
}

/// Render a table. Text is a fixed-width layout with footnotes; CSV is a
/// header row plus one data row per entry; JSON follows the documented
/// stable schema (`schema_version` 1).
pub fn render(table: &ReportTable, format: RenderFormat, rounding: &Rounding) -> String {
    match format {
        RenderFormat::Text => render_text(table, rounding),
        RenderFormat::Csv => render_csv(table, rounding),
        RenderFormat::Json => render_json(table, rounding),
    }
}

fn row_cells_text(table: &ReportTable, row: &ReportRow, r: &Rounding) -> Vec<String> {
    let dash = EM_DASH.to_string();
    let est = row
        .estimate
        .map(|e| fmt_effect_text(e, r))
        .unwrap_or_else(|| dash.clone());
    let ci_p = |iv: &Option<DisplayInterval>, p: &Option<f64>| -> String {
        match (iv, p) {
            (Some(iv), Some(p)) => format!("{}; {}", fmt_interval_text(iv, r), fmt_p_text(*p, r)),
            (Some(iv), None) => fmt_interval_text(iv, r),
            (None, Some(p)) => fmt_p_text(*p, r),
            (None, None) => dash.clone(),
        }
    };
    match table.layout {
        TableLayout::Graph => vec![
            row.label.clone(),
            est,
            ci_p(&row.interval, &row.p),
            ci_p(&row.adjusted_interval, &row.adjusted_p),
            row.status
                .map(|s| s.as_str().to_string())
                .unwrap_or_default(),
        ],
        TableLayout::GroupSequential => {
            let label = if row.kind == RowKind::Endpoint {
                row.label.clone()
            } else {
                format!("  {}", row.label)
            };
            let body = if row.kind == RowKind::Endpoint {
                String::new()
            } else {
                match (&row.estimate, &row.interval) {
                    (Some(_), Some(iv)) => format!("{} {}", est, fmt_interval_text(iv, r)),
                    (None, Some(iv)) => fmt_interval_text(iv, r),
                    _ => est,
                }
            };
            let p = if row.kind == RowKind::Endpoint {
                String::new()
            } else {
                row.p
                    .map(|p| fmt_p_text(p, r))
                    .unwrap_or_else(|| dash.clone())
            };
            vec![
                label,
                body,
                p,
                row.status
                    .map(|s| s.as_str().to_string())
                    .unwrap_or_default(),
            ]
        }
    }
}

fn render_text(table: &ReportTable, r: &Rounding) -> String {
    let pct = level_percent(table.ci_level);
    let headers: Vec<String> = match table.layout {
        TableLayout::Graph => vec![
            "Endpoint".to_string(),
            "Estimate".to_string(),
            format!("Per-comparison {pct} CI; p"),
            format!("Adjusted {pct} CI; p"),
            "Status".to_string(),
        ],
        TableLayout::GroupSequential => vec![
            "Outcome / estimator".to_string(),
            format!("Estimate ({pct} CI)"),
            "p (two-sided)".to_string(),
            "Status".to_string(),
        ],
    };
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|row| row_cells_text(table, row, r))
        .collect();

    let ncol = headers.len();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.chars().count());
        }
    }

    let mut out = String::new();
    out.push_str(&table.title);
    out.push('\n');
    out.push('\n');
    let write_row = |out: &mut String, cells: &[String]| {
        for (i, cell) in cells.iter().enumerate() {
            out.push_str(cell);
            if i + 1 < ncol {
                let pad = widths[i] - cell.chars().count() + 2;
                out.extend(std::iter::repeat_n(' ', pad));
            }
        }
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    };
    write_row(&mut out, &headers);
    let total: usize = widths.iter().sum::<usize>() + 2 * (ncol - 1);
    out.extend(std::iter::repeat_n('-', total));
    out.push('\n');
    for row in &rows {
        write_row(&mut out, row);
    }
    if !table.footnotes.is_empty() {
        out.push('\n');
        out.push_str("Notes:\n");
        for note in &table.footnotes {
            out.push_str("  - ");
            out.push_str(note);
            out.push('\n');
        }
    }
    out
}

fn csv_escape(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_csv(table: &ReportTable, r: &Rounding) -> String {
    let mut out = String::new();
    out.push_str(
        "endpoint_id,label,kind,estimate,ci_lower,ci_upper,p,\
         adj_lower,adj_lower_open,adj_upper,adj_upper_open,adj_p,status\n",
    );
    for row in &table.rows {
        if table.layout == TableLayout::GroupSequential && row.kind == RowKind::Endpoint {
            continue; // section headers carry no data
        }
        let kind = serde_json::to_value(row.kind).unwrap();
        let cells: Vec<String> = vec![
            csv_escape(&row.endpoint_id),
            csv_escape(&row.label),
            kind.as_str().unwrap_or_default().to_string(),
            row.estimate
                .map(|e| fmt_effect_ascii(e, r.effect_digits))
                .unwrap_or_default(),
            row.interval
                .map(|iv| fmt_effect_ascii(iv.lower, r.effect_digits))
                .unwrap_or_default(),
            row.interval
                .map(|iv| fmt_effect_ascii(iv.upper, r.effect_digits))
                .unwrap_or_default(),
            row.p
                .map(|p| fmt_p_ascii(p, r.p_digits))
                .unwrap_or_default(),
            row.adjusted_interval
                .map(|iv| fmt_effect_ascii(iv.lower, r.effect_digits))
                .unwrap_or_default(),
            row.adjusted_interval
                .map(|iv| iv.lower_open.to_string())
                .unwrap_or_default(),
            row.adjusted_interval
                .map(|iv| fmt_effect_ascii(iv.upper, r.effect_digits))
                .unwrap_or_default(),
            row.adjusted_interval
                .map(|iv| iv.upper_open.to_string())
                .unwrap_or_default(),
            row.adjusted_p
                .map(|p| fmt_p_ascii(p, r.p_digits))
                .unwrap_or_default(),
            row.status
                .map(|s| s.as_str().to_string())
                .unwrap_or_default(),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn json_number(x: f64, digits: usize) -> Value {
    if x == f64::NEG_INFINITY {
        Value::String("-inf".to_string())
    } else if x == f64::INFINITY {
        Value::String("+inf".to_string())
    } else {
        json!(round_half_even(x, digits))
    }
}

fn json_interval(iv: &DisplayInterval, digits: usize) -> Value {
    json!({
        "lower": json_number(iv.lower, digits),
        "lower_open": iv.lower_open,
        "upper": json_number(iv.upper, digits),
        "upper_open": iv.upper_open,
    })
}

fn render_json(table: &ReportTable, r: &Rounding) -> String {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| {
            json!({
                "endpoint_id": row.endpoint_id,
                "label": row.label,
                "kind": row.kind,
                "estimate": row.estimate.map(|e| json_number(e, r.effect_digits)),
                "interval": row.interval.map(|iv| json_interval(&iv, r.effect_digits)),
                "p": row.p.map(|p| json_number(p, r.p_digits)),
                "adjusted_interval": row
                    .adjusted_interval
                    .map(|iv| json_interval(&iv, r.effect_digits)),
                "adjusted_p": row.adjusted_p.map(|p| json_number(p, r.p_digits)),
                "status": row.status.map(|s| s.as_str()),
            })
        })
        .collect();
    let doc = json!({
        "schema_version": super::SCHEMA_VERSION,
        "title": table.title,
        "layout": table.layout,
        "ci_level": table.ci_level,
        "rows": rows,
        "footnotes": table.footnotes,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    text
}
