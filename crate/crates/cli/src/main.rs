use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use nodalflow::edge_flow::{self, EdgeFlowOptions};
use nodalflow::families::{generate_connected_er, FamilySpec};
use nodalflow::io::{
    branch_table_csv, parse_graph, serialize_graph, FlowSummary, GraphFile, GraphMeta,
};
use nodalflow::nodal::{self, EigenSelection, PERTURB_SEED};
use nodalflow::spectra::{self, FlowResult};
use nodalflow::svg::{LineChart, Scatter};
use nodalflow::vertex_flow::{self, VertexFlowOptions};
use nodalflow::{Error, WeightedGraph};

const EXIT_INPUT: u8 = 2;
const EXIT_ASSUMPTION: u8 = 3;
const EXIT_PARTIAL: u8 = 4;

#[derive(Parser)]
#[command(
    name = "nodalflow",
    version,
    about = "Nodal domain counts of graph Laplacian eigenvectors via spectral flows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a graph from one of the built-in families.
    Generate {
        /// complete, cycle, petersen, interval, grid or er
        #[arg(long)]
        family: String,
        /// Comma-separated parameters, e.g. 7,3
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        params: Vec<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// For er: retry seed, seed+1, ... until the sample is connected.
        #[arg(long)]
        connected: bool,
        #[arg(long, default_value_t = 100)]
        max_attempts: usize,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Nodal count and deficiency of the k-th eigenvector.
    Nodal {
        #[command(flatten)]
        pick: Pick,
    },
    /// Track eigenvalue branches of the edge or vertex flow.
    Flow {
        #[arg(long, value_enum)]
        method: Method,
        #[command(flatten)]
        pick: Pick,
        /// Largest sigma of the vertex flow.
        #[arg(long, default_value_t = 1e4)]
        sigma_max: f64,
        /// Grid points (uniform for edge, logarithmic for vertex).
        #[arg(long, default_value_t = 200)]
        steps: usize,
        /// Writes PREFIX.csv and PREFIX.json.
        #[arg(long)]
        out: PathBuf,
        /// Also write PREFIX.svg.
        #[arg(long)]
        svg: bool,
    },
    /// Nodal counts for every eigenvector.
    Scan {
        #[arg(long)]
        graph: PathBuf,
        /// Scatter plot of (k, nu) with the line y = x.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Exact sigma = infinity limit of the vertex flow.
    Dirichlet {
        #[command(flatten)]
        pick: Pick,
    },
}

#[derive(clap::Args)]
struct Pick {
    #[arg(long)]
    graph: PathBuf,
    /// 1-based eigenvalue index.
    #[arg(long)]
    k: usize,
    /// Treat a repeated eigenvalue as an error (exit 3).
    #[arg(long)]
    strict: bool,
    /// Add a small random diagonal first so the eigenvector has no zeros.
    #[arg(long)]
    perturb: bool,
    /// Absolute perturbation size; defaults to 1e-8 times the Laplacian's row-sum norm.
    #[arg(long, requires = "perturb")]
    perturb_magnitude: Option<f64>,
    #[arg(long, default_value_t = PERTURB_SEED, requires = "perturb")]
    perturb_seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Edge,
    Vertex,
}

struct Failure {
    code: u8,
    message: String,
    /// Printed to stdout before exiting.
    report: Option<Value>,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
            report: None,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::AssumptionViolated(_) | Error::ZeroVertex { .. } => EXIT_ASSUMPTION,
            Error::EigFailure { .. } => 1,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
            report: None,
        }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("nodalflow: {msg}");
        return ExitCode::from(EXIT_INPUT);
    }
    let result = match cli.command {
        Command::Generate {
            family,
            params,
            seed,
            connected,
            max_attempts,
            out,
        } => generate(
            &family,
            &params,
            seed,
            connected,
            max_attempts,
            out.as_deref(),
        ),
        Command::Nodal { pick } => nodal_cmd(&pick),
        Command::Flow {
            method,
            pick,
            sigma_max,
            steps,
            out,
            svg,
        } => flow_cmd(method, &pick, sigma_max, steps, &out, svg),
        Command::Scan { graph, plot } => scan_cmd(&graph, plot.as_deref()),
        Command::Dirichlet { pick } => dirichlet_cmd(&pick),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            if let Some(report) = f.report {
                println!("{}", serde_json::to_string_pretty(&report).expect("json"));
            }
            eprintln!("nodalflow: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("NODALFLOW_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("NODALFLOW_THREADS must be a nonnegative integer, got '{raw}'"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

fn load(path: &Path) -> Result<GraphFile, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    parse_graph(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn generate(
    family: &str,
    params: &[f64],
    seed: Option<u64>,
    connected: bool,
    max_attempts: usize,
    out: Option<&Path>,
) -> Outcome {
    let spec = FamilySpec::from_parts(family, params, seed)?;
    let (graph, meta) = match spec {
        FamilySpec::ErdosRenyi { n, p, seed } if connected => {
            let (g, used, attempts) = generate_connected_er(n, p, seed, max_attempts)?;
            let meta = GraphMeta {
                family: spec.family_name().into(),
                params: spec.params(),
                seed: Some(used),
                attempts: Some(attempts),
            };
            (g, meta)
        }
        _ => {
            let meta = GraphMeta {
                family: spec.family_name().into(),
                params: spec.params(),
                seed: spec.seed(),
                attempts: None,
            };
            (spec.generate()?, meta)
        }
    };
    let text = serialize_graph(&GraphFile {
        graph,
        meta: Some(meta),
    });
    match out {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

/// The graph actually analysed, the selected pair and a note on any perturbation.
struct Picked {
    graph: WeightedGraph,
    sel: EigenSelection,
    perturbation: Option<Value>,
}

fn pick(p: &Pick) -> Result<Picked, Failure> {
    let file = load(&p.graph)?;
    let original = file.graph;
    let spec = spectra::eigendecompose(&original.laplacian())?;
    let sel = nodal::select_eigenpair(&spec, p.k)?;
    if !p.perturb {
        return Ok(Picked {
            graph: original,
            sel,
            perturbation: None,
        });
    }
    let before = nodal::strong_domains_allowing_zeros(&original, &sel.psi).len();
    let weak_before = nodal::weak_domains(&original, &sel.psi).len();
    let perturbed = nodal::perturb_to_nonzero(&original, p.perturb_magnitude, p.perturb_seed)?;
    let spec = spectra::eigendecompose(&perturbed.graph.laplacian())?;
    let sel = nodal::select_eigenpair(&spec, p.k)?;
    let after = nodal::strong_domains_allowing_zeros(&perturbed.graph, &sel.psi).len();
    let weak_after = nodal::weak_domains(&perturbed.graph, &sel.psi).len();
    Ok(Picked {
        graph: perturbed.graph,
        sel,
        perturbation: Some(json!({
            "magnitude": perturbed.magnitude,
            "seed": perturbed.seed,
            "strong_domains_before": before,
            "weak_domains_before": weak_before,
            "strong_domains_after": after,
            "weak_domains_after": weak_after,
        })),
    })
}

fn selection_json(sel: &EigenSelection) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("k".into(), json!(sel.k));
    m.insert("requested_k".into(), json!(sel.requested_k));
    m.insert("lambda_k".into(), json!(sel.lambda_k));
    m.insert("simple".into(), json!(sel.simple));
    m.insert("nowhere_zero".into(), json!(sel.nowhere_zero));
    m.insert("multiplicity".into(), json!(sel.multiplicity));
    m
}

fn warnings(sel: &EigenSelection) -> Vec<String> {
    let mut w = Vec::new();
    if !sel.simple {
        w.push(format!(
            "lambda_k has multiplicity {}; the count is outside the counting theorem's hypotheses",
            sel.multiplicity
        ));
    }
    if !sel.first_index() {
        w.push(format!(
            "k lowered from {} to the first index {} of its eigenvalue",
            sel.requested_k, sel.k
        ));
    }
    w
}

/// Exit 3 with the flags printed when the hypotheses fail.
fn require(
    sel: &EigenSelection,
    strict: bool,
    mut report: serde_json::Map<String, Value>,
) -> Result<(), Failure> {
    if let Err(e) = edge_flow::check_hypotheses(sel, strict) {
        report.insert("error".into(), json!(e.to_string()));
        return Err(Failure {
            report: Some(Value::Object(report)),
            ..Failure::from(e)
        });
    }
    Ok(())
}

fn nodal_cmd(p: &Pick) -> Outcome {
    let Picked {
        graph,
        sel,
        perturbation,
    } = pick(p)?;
    let mut report = selection_json(&sel);
    if let Some(pert) = perturbation {
        report.insert("perturbation".into(), pert);
    }
    if !sel.nowhere_zero {
        let partial = nodal::strong_domains_allowing_zeros(&graph, &sel.psi).len();
        report.insert("strong_domains_on_nonzero_vertices".into(), json!(partial));
    }
    require(&sel, p.strict, report.clone())?;
    let count = edge_flow::nodal_count_direct(&graph, &sel)?;
    let nd = nodal::nodal_decomposition(&graph, &sel)?;
    report.insert("nu".into(), json!(count.nu));
    report.insert("deficiency".into(), json!(count.deficiency));
    report.insert("nu_combinatorial".into(), json!(nd.nu));
    report.insert(
        "n_sign_change_edges".into(),
        json!(nd.sign_change_edges.len()),
    );
    if let Ok(b) = nodal::courant_and_betti_check(&graph, &sel, &nd) {
        report.insert("betti_1".into(), json!(b.betti_1));
        report.insert("bounds_ok".into(), json!(b.all_ok()));
    }
    report.insert("warnings".into(), json!(warnings(&sel)));
    println!(
        "{}",
        serde_json::to_string_pretty(&Value::Object(report)).expect("json")
    );
    Ok(0)
}

fn flow_cmd(
    method: Method,
    p: &Pick,
    sigma_max: f64,
    steps: usize,
    out: &Path,
    svg: bool,
) -> Outcome {
    let Picked { graph, sel, .. } = pick(p)?;
    require(&sel, p.strict, selection_json(&sel))?;
    if steps < 2 {
        return Err(Failure::input("--steps must be at least 2"));
    }
    if !(sigma_max.is_finite() && sigma_max > 1e-3) {
        return Err(Failure::input("--sigma-max must be finite and above 1e-3"));
    }
    let nd = nodal::nodal_decomposition(&graph, &sel)?;
    let mut warn = warnings(&sel);
    let (flow, nu, method_name, log_x): (FlowResult, usize, &str, bool) = match method {
        Method::Edge => {
            let run = edge_flow::run_edge_flow(
                &graph,
                &sel,
                &EdgeFlowOptions {
                    steps,
                    ..EdgeFlowOptions::default()
                },
            )?;
            if !run.identity_holds {
                warn.push("converged branches plus crossings from below differ from k".into());
            }
            let nu = run.flow.converged_count;
            (run.flow, nu, "edge", false)
        }
        Method::Vertex => {
            let run = vertex_flow::run_vertex_flow(
                &graph,
                &sel,
                &VertexFlowOptions {
                    sigma_max,
                    steps,
                    ..VertexFlowOptions::default()
                },
            )?;
            if !run.limit.within_conv_tol {
                warn.push(format!(
                    "sigma_max eigenvalues are {:.3e} from the Dirichlet limit (conv_tol {:.3e})",
                    run.limit.max_deviation, run.limit.conv_tol
                ));
            }
            let nu = run.limit.multiplicity;
            (run.flow, nu, "vertex", true)
        }
    };
    if flow.refinement_exhausted {
        warn.push("branch matching reached the minimum step without a consistent match".into());
    }
    if flow.block_matches > 0 {
        warn.push(format!(
            "{} steps matched through repeated eigenvalues",
            flow.block_matches
        ));
    }
    let summary = FlowSummary {
        method: method_name.into(),
        k: sel.k,
        requested_k: sel.requested_k,
        lambda_k: sel.lambda_k,
        nu,
        deficiency: sel.k as i64 - nu as i64,
        simple: sel.simple,
        nowhere_zero: sel.nowhere_zero,
        n_sign_change_edges: nd.sign_change_edges.len(),
        converged_count: flow.converged_count,
        crossings: FlowSummary::crossings_of(&flow),
        crossings_below: flow.crossings_below(),
        branch_origins: flow
            .origins
            .iter()
            .map(|o| o.as_str().to_string())
            .collect(),
        refinement_exhausted: flow.refinement_exhausted,
        block_matches: flow.block_matches,
        min_overlap: flow.min_overlap,
        warnings: warn,
    };
    let with_ext = |ext: &str| {
        let mut s = out.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    write_file(&with_ext(".csv"), &branch_table_csv(&flow))?;
    write_file(&with_ext(".json"), &summary.to_json())?;
    if svg {
        let series = (0..flow.branch_count())
            .map(|b| flow.branch_values(b))
            .collect();
        let top = 2.0 * sel.lambda_k.max(1.0);
        let chart = LineChart {
            title: &format!("{method_name} flow, k = {}", sel.k),
            x_label: "sigma",
            y_label: "eigenvalue",
            xs: &flow.sigmas,
            series,
            rule: Some(sel.lambda_k),
            log_x,
            y_range: log_x.then_some((0.0, top)),
        };
        write_file(&with_ext(".svg"), &chart.render())?;
    }
    print!("{}", summary.to_json());
    Ok(if flow.refinement_exhausted {
        EXIT_PARTIAL
    } else {
        0
    })
}

fn scan_cmd(path: &Path, plot: Option<&Path>) -> Outcome {
    let graph = load(path)?.graph;
    let spec = spectra::eigendecompose(&graph.laplacian())?;
    println!("k\tlambda_k\tnu\tdeficiency\tsimple\tnowhere_zero\tgroup");
    let mut points = Vec::with_capacity(spec.len());
    let mut links = Vec::new();
    for k in 1..=spec.len() {
        let sel = nodal::select_eigenpair(&spec, k)?;
        let nu = if sel.nowhere_zero {
            edge_flow::nodal_count_direct(&graph, &sel)?.nu
        } else {
            nodal::strong_domains_allowing_zeros(&graph, &sel.psi).len()
        };
        let group = spec.group_of(k - 1);
        let group_mark = if group.len() > 1 {
            format!("{}-{}", group.start + 1, group.end)
        } else {
            "-".into()
        };
        // values that round to zero print without a sign
        let shown = if sel.lambda_k.abs() < 5e-13 {
            0.0
        } else {
            sel.lambda_k
        };
        println!(
            "{k}\t{shown:.12}\t{nu}\t{}\t{}\t{}\t{group_mark}",
            sel.k as i64 - nu as i64,
            sel.simple,
            sel.nowhere_zero
        );
        if k - 1 > group.start {
            links.push((k - 2, k - 1));
        }
        points.push((k as f64, nu as f64));
    }
    if let Some(plot) = plot {
        let svg = Scatter {
            title: "nodal count against eigenvalue index",
            points: &points,
            links: &links,
        }
        .render();
        write_file(plot, &svg)?;
    }
    Ok(0)
}

fn dirichlet_cmd(p: &Pick) -> Outcome {
    let Picked {
        graph,
        sel,
        perturbation,
    } = pick(p)?;
    let mut report = selection_json(&sel);
    require(&sel, p.strict, report.clone())?;
    let sg = vertex_flow::subdivide(&graph, &sel)?;
    let limit =
        vertex_flow::limit_check(&sg, sel.lambda_k, VertexFlowOptions::default().sigma_max)?;
    report.insert("n_ghosts".into(), json!(sg.n_ghosts()));
    report.insert("d_components".into(), json!(limit.d_components));
    report.insert("multiplicity".into(), json!(limit.multiplicity));
    report.insert("dirichlet_eigenvalues".into(), json!(limit.dirichlet));
    if let Some(pert) = perturbation {
        report.insert("perturbation".into(), pert);
    }
    report.insert("warnings".into(), json!(warnings(&sel)));
    println!(
        "{}",
        serde_json::to_string_pretty(&Value::Object(report)).expect("json")
    );
    Ok(0)
}
