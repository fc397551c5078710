//! Command-line front end: design summaries, adjusted inference tables,
//! the group-sequential estimator zoo, full reports, and a golden-fixture
//! verification mode.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ctinfer_core::gsd::{compute_boundaries, GridSpec};
use ctinfer_core::report::{
    load_spec, load_spec_str, render, run_graph_report, run_gsd_report, McSpec, RenderFormat,
    Rounding, TrialSpec,
};

/// Environment variable holding the default Monte Carlo seed.
const SEED_ENV: &str = "CTINFER_SEED";

#[derive(Parser)]
#[command(
    name = "ctinfer",
    about = "Multiplicity-adjusted decisions, adjusted estimates, and report tables \
             for group-sequential trials, computed from summary statistics",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Trial specification document (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Output format.
    #[arg(long, default_value = "text")]
    format: String,
    /// Override the effect-scale rounding digits from the spec.
    #[arg(long)]
    digits: Option<usize>,
    /// Monte Carlo seed (overrides CTINFER_SEED and the spec document).
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo replications per bias-curve evaluation.
    #[arg(long)]
    reps: Option<u64>,
    /// Write output to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Size of the worker thread pool (results are identical for any
    /// worker count).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Print boundaries and local levels for the spec's designs.
    Design(CommonArgs),
    /// Graph multiple-comparison inference only.
    Adjust(CommonArgs),
    /// Estimator zoo for one group-sequential endpoint.
    GsdInfer {
        #[command(flatten)]
        common: CommonArgs,
        /// Endpoint id to report.
        #[arg(long)]
        endpoint: String,
    },
    /// Full report tables (graph and group-sequential sections).
    Report(CommonArgs),
    /// Recompute the golden fixtures and compare byte-for-byte; exits
    /// nonzero on any mismatch.
    Verify {
        /// Size of the worker thread pool.
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Design(args) => with_pool(args.workers, || {
            let format: RenderFormat = args.format.parse().map_err(anyhow::Error::msg)?;
            emit(&args, |spec, _| design_output(spec, format))
        }),
        Command::Adjust(args) => with_pool(args.workers, || {
            emit(&args, |spec, _| {
                let table = run_graph_report(spec)?;
                Ok(Rendered::Table(table))
            })
        }),
        Command::Report(args) => with_pool(args.workers, || {
            emit(&args, |spec, mc| {
                let mut parts = Vec::new();
                if spec.mcp.is_some() {
                    parts.push(run_graph_report(spec)?);
                }
                if spec.gsd_endpoints.as_ref().is_some_and(|g| !g.is_empty()) {
                    parts.push(run_gsd_report(spec, mc)?);
                }
                Ok(Rendered::Tables(parts))
            })
        }),
        Command::GsdInfer { common, endpoint } => with_pool(common.workers, || {
            emit(&common, |spec, mc| {
                let mut table = run_gsd_report(spec, mc)?;
                if !table.rows.iter().any(|r| r.endpoint_id == endpoint) {
                    bail!("spec has no gsd endpoint {endpoint:?}");
                }
                table.rows.retain(|r| r.endpoint_id == endpoint);
                table.title = format!("{} \u{2014} {endpoint}", table.title);
                Ok(Rendered::Table(table))
            })
        }),
        Command::Verify { workers } => with_pool(workers, verify),
    }
}

fn with_pool(workers: Option<usize>, f: impl FnOnce() -> Result<i32> + Send) -> Result<i32> {
    match workers {
        None => f(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .context("building worker pool")?;
            pool.install(f)
        }
    }
}

enum Rendered {
    Table(ctinfer_core::report::ReportTable),
    Tables(Vec<ctinfer_core::report::ReportTable>),
    Raw(String),
}

fn resolve_mc(spec: &TrialSpec, seed: Option<u64>, reps: Option<u64>) -> McSpec {
    let mut mc = spec.mc.unwrap_or_default();
    if let Ok(value) = std::env::var(SEED_ENV) {
        if let Ok(parsed) = value.parse::<u64>() {
            mc.seed = parsed;
        }
    }
    if let Some(s) = seed {
        mc.seed = s;
    }
    if let Some(r) = reps {
        mc.replications = r;
    }
    mc
}

fn emit(
    args: &CommonArgs,
    build: impl FnOnce(&TrialSpec, &McSpec) -> Result<Rendered>,
) -> Result<i32> {
    let spec = load_spec(&args.spec)?;
    let format: RenderFormat = args.format.parse().map_err(anyhow::Error::msg)?;
    let mc = resolve_mc(&spec, args.seed, args.reps);
    let mut rounding = Rounding::from(&spec.output);
    if let Some(d) = args.digits {
        rounding.effect_digits = d;
    }
    let text = match build(&spec, &mc)? {
        Rendered::Table(t) => render(&t, format, &rounding),
        Rendered::Tables(ts) => ts
            .iter()
            .map(|t| render(t, format, &rounding))
            .collect::<Vec<_>>()
            .join("\n"),
        Rendered::Raw(s) => s,
    };
    match &args.out {
        None => print!("{text}"),
        Some(path) => {
            let mut f = std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            f.write_all(text.as_bytes())?;
        }
    }
    Ok(0)
}

fn design_output(spec: &TrialSpec, format: RenderFormat) -> Result<Rendered> {
    let gsd = spec
        .gsd_endpoints
        .as_deref()
        .filter(|g| !g.is_empty())
        .context("spec has no gsd endpoints")?;
    let mut designs = Vec::new();
    for g in gsd {
        let d = compute_boundaries(
            &g.design.info_fractions,
            g.design.alpha_one_sided,
            g.design.spending.clone(),
            GridSpec::BOUNDARY,
        )?;
        let max_information = g.design.resolved_max_information()?;
        designs.push((g.id.clone(), max_information, d));
    }
    let out = match format {
        RenderFormat::Text => {
            let mut out = String::new();
            for (id, imax, d) in &designs {
                out.push_str(&format!(
                    "{id} (one-sided alpha {}, max information {imax:.4})\n",
                    d.alpha_one_sided,
                ));
                out.push_str(
                    "  look  fraction  boundary  local level (1-sided)  nominal (2-sided)  cumulative spend\n",
                );
                for k in 0..d.looks() {
                    let b = d.boundaries[k];
                    let btxt = if b.is_finite() {
                        format!("{b:.4}")
                    } else {
                        "inf".to_string()
                    };
                    out.push_str(&format!(
                        "  {:>4}  {:>8.4}  {:>8}  {:>21.6}  {:>17.6}  {:>16.6}\n",
                        k + 1,
                        d.info_fractions[k],
                        btxt,
                        d.local_levels[k],
                        2.0 * d.local_levels[k],
                        d.cumulative_spend[k],
                    ));
                }
                out.push('\n');
            }
            out
        }
        RenderFormat::Csv => {
            let mut out = String::from(
                "design_id,look,fraction,boundary,local_level_one_sided,nominal_two_sided,cumulative_spend\n",
            );
            for (id, _, d) in &designs {
                for k in 0..d.looks() {
                    let b = d.boundaries[k];
                    let btxt = if b.is_finite() {
                        format!("{b:.6}")
                    } else {
                        "+inf".to_string()
                    };
                    out.push_str(&format!(
                        "{id},{},{},{btxt},{:.8},{:.8},{:.8}\n",
                        k + 1,
                        d.info_fractions[k],
                        d.local_levels[k],
                        2.0 * d.local_levels[k],
                        d.cumulative_spend[k],
                    ));
                }
            }
            out
        }
        RenderFormat::Json => {
            let docs: Vec<serde_json::Value> = designs
                .iter()
                .map(|(id, imax, d)| {
                    let looks: Vec<serde_json::Value> = (0..d.looks())
                        .map(|k| {
                            let b = d.boundaries[k];
                            serde_json::json!({
                                "look": k + 1,
                                "fraction": d.info_fractions[k],
                                "boundary": if b.is_finite() {
                                    serde_json::json!(b)
                                } else {
                                    serde_json::json!("+inf")
                                },
                                "local_level_one_sided": d.local_levels[k],
                                "nominal_two_sided": 2.0 * d.local_levels[k],
                                "cumulative_spend": d.cumulative_spend[k],
                            })
                        })
                        .collect();
                    serde_json::json!({
                        "id": id,
                        "alpha_one_sided": d.alpha_one_sided,
                        "max_information": imax,
                        "looks": looks,
                    })
                })
                .collect();
            let mut text = serde_json::to_string_pretty(&serde_json::json!({
                "schema_version": 1,
                "designs": docs,
            }))
            .expect("design summary serializes");
            text.push('\n');
            text
        }
    };
    Ok(Rendered::Raw(out))
}

struct Fixture {
    name: &'static str,
    spec: &'static str,
    golden: &'static str,
}

const FIXTURES: &[Fixture] = &[
    Fixture {
        name: "alzheimers",
        spec: include_str!("../fixtures/alzheimers.json"),
        golden: include_str!("../fixtures/golden/alzheimers.txt"),
    },
    Fixture {
        name: "obesity_week26",
        spec: include_str!("../fixtures/obesity_week26.json"),
        golden: include_str!("../fixtures/golden/obesity_week26.txt"),
    },
    Fixture {
        name: "obesity_full",
        spec: include_str!("../fixtures/obesity_full.json"),
        golden: include_str!("../fixtures/golden/obesity_full.txt"),
    },
    Fixture {
        name: "oncology",
        spec: include_str!("../fixtures/oncology.json"),
        golden: include_str!("../fixtures/golden/oncology.txt"),
    },
];

/// Recompute one embedded fixture and render it as text.
fn compute_fixture(f: &Fixture) -> Result<String> {
    let spec = load_spec_str(f.spec)?;
    let rounding = Rounding::from(&spec.output);
    let mc = spec.mc.unwrap_or_default();
    let mut parts = Vec::new();
    if spec.mcp.is_some() {
        parts.push(render(
            &run_graph_report(&spec)?,
            RenderFormat::Text,
            &rounding,
        ));
    }
    if spec.gsd_endpoints.as_ref().is_some_and(|g| !g.is_empty()) {
        parts.push(render(
            &run_gsd_report(&spec, &mc)?,
            RenderFormat::Text,
            &rounding,
        ));
    }
    Ok(parts.join("\n"))
}

fn verify() -> Result<i32> {
    let mut failures = 0;
    for f in FIXTURES {
        let computed = compute_fixture(f)?;
        print!("{computed}");
        if computed == f.golden {
            println!("fixture {}: OK", f.name);
        } else {
            failures += 1;
            println!("fixture {}: MISMATCH", f.name);
            for (i, (got, want)) in computed.lines().zip(f.golden.lines()).enumerate() {
                if got != want {
                    println!("  first difference at line {}:", i + 1);
                    println!("    computed: {got}");
                    println!("    golden:   {want}");
                    break;
                }
            }
            if computed.lines().count() != f.golden.lines().count() {
                println!(
                    "  line counts differ: computed {} vs golden {}",
                    computed.lines().count(),
                    f.golden.lines().count()
                );
            }
        }
        println!();
    }
    Ok(if failures == 0 { 0 } else { 1 })
}
