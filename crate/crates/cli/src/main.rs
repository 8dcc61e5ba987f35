use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Value};

use ihara_core::census::{reproduce_preset, run_census, CensusConfig, Preset, PresetComparison, ThresholdMode};
use ihara_core::spectral::{classify_non_ramanujan, HashimotoMethod, SpectrumReport, Tolerances};
use ihara_core::traces::{estimate_expected_trace, exact_expected_trace_small, fit_expansion_coefficients, hashimoto_traces};
use ihara_core::zeta::{
    contour_pole_count, cp0_residues, essential_log_derivative_coeffs, hashimoto_char_poly, verify_ihara,
    zeta_reciprocal_poly, ContourSign, ContourSpec, EXACT_EDGE_LIMIT,
};
use ihara_core::{Graph, ModelId};

#[derive(Parser)]
#[command(name = "ihara", version, about = "Non-backtracking spectra, Ihara zeta data and eigenvalue censuses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count adjacency eigenvalues ≥ 2√(d−1) over seeded random samples.
    Census(CensusArgs),
    /// Rerun a published census preset and compare means.
    Section8(Section8Args),
    /// Exact zeta data of a graph file.
    Zeta(ZetaArgs),
    /// Expected non-backtracking traces.
    Traces(TracesArgs),
    /// Adjacency and Hashimoto spectra of a graph file.
    Spectrum(SpectrumArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Perm,
    Cycle,
    Match,
    Cover,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    At2sqrt,
    Strict,
}

#[derive(Args)]
struct CensusArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Base graph (nbgraph file) for covers.
    #[arg(long)]
    base: Option<PathBuf>,
    /// Vertex count, or cover degree for covers.
    #[arg(long)]
    n: usize,
    /// Degree; taken from the base for covers.
    #[arg(long, default_value_t = 4)]
    d: usize,
    #[arg(long)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "at2sqrt")]
    mode: ModeArg,
    /// Absolute tolerance at the threshold (default 1e-9·d).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// CSV record file; the aggregate goes next to it with a `.json` extension.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Section8Args {
    /// G4_100, G4_1000, G4_10000, H4_100, H4_1000, H4_10000 or all.
    #[arg(long)]
    preset: String,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct ZetaArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    check_ihara: bool,
    /// Coefficients c_0..c_K of the essential logarithmic derivative.
    #[arg(long = "series-K")]
    series_k: Option<usize>,
    /// `eps,delta,sign,points`, e.g. `0.2,0.05,+,512`.
    #[arg(long, allow_hyphen_values = true)]
    contour: Option<String>,
    /// Also report the residues of cP_0 for the graph's degree.
    #[arg(long)]
    cp0: bool,
}

#[derive(Args)]
struct TracesArgs {
    #[arg(long, value_enum, default_value = "perm")]
    model: ModelArg,
    #[arg(long)]
    base: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 4)]
    d: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exact expectation by enumerating every permutation tuple.
    #[arg(long)]
    exact: bool,
    /// Fit `a + b/n` over this comma-separated grid of n values.
    #[arg(long, value_delimiter = ',')]
    fit: Option<Vec<usize>>,
    /// Exact traces Tr(H^0..k) of one graph file instead of a model.
    #[arg(long, conflicts_with_all = ["exact", "fit"])]
    graph: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    hashimoto: bool,
    #[arg(long)]
    classify: bool,
}

type CliResult<T> = Result<T, String>;

fn read_graph(path: &Path) -> CliResult<Graph> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.parse().map_err(|e| format!("{}: {e}", path.display()))
}

fn model_id(model: ModelArg, base: Option<&Path>) -> CliResult<ModelId> {
    Ok(match model {
        ModelArg::Perm => ModelId::Perm,
        ModelArg::Cycle => ModelId::Cycle,
        ModelArg::Match => ModelId::Match,
        ModelArg::Cover => {
            let path = base.ok_or("--model cover needs --base <file>")?;
            ModelId::Cover(read_graph(path)?)
        }
    })
}

fn print_json(v: &impl serde::Serialize) {
    out(&serde_json::to_string_pretty(v).expect("serializable output"));
}

/// Writes a line to stdout; a closed pipe ends output quietly.
fn out(line: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{line}");
}

fn rational(r: &BigRational) -> String {
    if *r.denom() == BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn census(a: CensusArgs) -> CliResult<()> {
    let model = model_id(a.model, a.base.as_deref())?;
    let mut config = CensusConfig::new(model, a.n, a.d, a.samples, a.seed);
    config.base_path = a.base.map(|p| p.display().to_string());
    config.mode = match a.mode {
        ModeArg::At2sqrt => ThresholdMode::AtLeast2Sqrt,
        ModeArg::Strict => ThresholdMode::Strict,
    };
    if let Some(tol) = a.tol {
        config.tol = tol;
    }
    config.workers = a.workers;
    config.out = a.out;
    let result = run_census(&config).map_err(|e| e.to_string())?;
    print_json(&result);
    Ok(())
}

fn section8(a: Section8Args) -> CliResult<()> {
    let presets: Vec<Preset> = if a.preset.eq_ignore_ascii_case("all") {
        Preset::ALL.to_vec()
    } else {
        vec![a.preset.parse()?]
    };
    out(PresetComparison::HEADER);
    for p in presets {
        let row = reproduce_preset(p, a.samples, a.seed, a.workers).map_err(|e| e.to_string())?;
        out(&row.row());
    }
    Ok(())
}

fn parse_contour(s: &str) -> CliResult<ContourSpec> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [eps, delta, sign, points] = parts[..] else {
        return Err(format!("--contour expects eps,delta,sign,points; got {s:?}"));
    };
    let num = |x: &str| x.parse::<f64>().map_err(|e| format!("bad number {x:?}: {e}"));
    let sign = match sign {
        "+" | "plus" => ContourSign::Plus,
        "-" | "minus" => ContourSign::Minus,
        other => return Err(format!("contour sign must be + or -, got {other:?}")),
    };
    let mut spec = ContourSpec::new(num(eps)?, num(delta)?, sign);
    spec.quadrature_points = points.parse().map_err(|e| format!("bad point count {points:?}: {e}"))?;
    Ok(spec)
}

fn zeta(a: ZetaArgs) -> CliResult<()> {
    let g = read_graph(&a.graph)?;
    let mut out = json!({ "counts": g.counts() });
    if g.directed_edge_count() <= EXACT_EDGE_LIMIT {
        out["hashimoto_char_poly"] = json!(hashimoto_char_poly(&g).map_err(|e| e.to_string())?);
        out["zeta_reciprocal_poly"] = json!(zeta_reciprocal_poly(&g).map_err(|e| e.to_string())?);
    }
    if a.check_ihara {
        let report = verify_ihara(&g).map_err(|e| e.to_string())?;
        out["ihara"] = json!({
            "holds": true,
            "forms": report.checks.iter().map(|c| c.form).collect::<Vec<_>>(),
        });
    }
    if let Some(k) = a.series_k {
        out["series"] = json!(essential_log_derivative_coeffs(&g, k).map_err(|e| e.to_string())?);
    }
    if let Some(spec) = a.contour.as_deref().map(parse_contour).transpose()? {
        let c = contour_pole_count(&g, &spec).map_err(|e| e.to_string())?;
        out["contour"] = json!({ "spec": spec, "count": c });
    }
    if a.cp0 {
        let d = g.regular_degree().ok_or("cP_0 needs a regular graph")?;
        if d < 3 {
            return Err("cP_0 needs d ≥ 3".into());
        }
        out["cp0"] = json!(cp0_residues(d));
    }
    print_json(&out);
    Ok(())
}

fn traces(a: TracesArgs) -> CliResult<()> {
    if let Some(path) = &a.graph {
        let g = read_graph(path)?;
        let t = hashimoto_traces(&g, a.k).map_err(|e| e.to_string())?;
        print_json(&json!({ "traces": t.iter().map(|x| x.to_string()).collect::<Vec<_>>() }));
        return Ok(());
    }
    let model = model_id(a.model, a.base.as_deref())?;
    if let Some(grid) = &a.fit {
        let fit = fit_expansion_coefficients(&model, a.d, a.k, grid, a.samples, a.seed).map_err(|e| e.to_string())?;
        print_json(&fit);
        return Ok(());
    }
    let n = a.n.ok_or("--n is required")?;
    if a.exact {
        if !matches!(model, ModelId::Perm) {
            return Err("--exact enumerates the permutation model only".into());
        }
        let v = exact_expected_trace_small(n, a.d, a.k).map_err(|e| e.to_string())?;
        let out: Value = json!({ "n": n, "d": a.d, "k": a.k, "expected_trace": rational(&v) });
        print_json(&out);
    } else {
        let est = estimate_expected_trace(&model, n, a.d, a.k, a.samples, a.seed).map_err(|e| e.to_string())?;
        print_json(&est);
    }
    Ok(())
}

fn spectrum(a: SpectrumArgs) -> CliResult<()> {
    let g = read_graph(&a.graph)?;
    let mut out = json!({ "counts": g.counts() });
    if a.hashimoto || a.classify {
        let report = SpectrumReport::new(&g, HashimotoMethod::Direct).map_err(|e| e.to_string())?;
        if a.classify {
            let tol = Tolerances::for_degree(report.d);
            out["classification"] = json!(classify_non_ramanujan(&report, tol.real_tol, tol.special_tol));
        }
        out["spectrum"] = json!(report);
    } else {
        let spec = ihara_core::spectral::adjacency_spectrum(&g).map_err(|e| e.to_string())?;
        out["adjacency_eigenvalues"] = json!(spec);
    }
    print_json(&out);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Census(a) => census(a),
        Command::Section8(a) => section8(a),
        Command::Zeta(a) => zeta(a),
        Command::Traces(a) => traces(a),
        Command::Spectrum(a) => spectrum(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
