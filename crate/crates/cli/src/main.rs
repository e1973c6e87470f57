mod output;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};
use symq_core::gaussian::{
    classify_localization, ghz_two_gaussian, moment_summary, t_matrix, GaussianModel, MultiGaussian,
    DEFAULT_EPSILON,
};
use symq_core::moments::{
    build_model, closed_form_tables, deviation_table, spherical_check, ModelChoice, MomentKind, MomentReport,
};
use symq_core::projection::{project_analytic, project_bruteforce, ProjectedQ};
use symq_core::states::{build_state, RawSpec, StateSpec, DEFAULT_NMAX_BRUTE};
use symq_core::Axis;

use crate::output::emit;
use crate::sweep::parse_sweep;

#[derive(Parser, Debug)]
#[command(name = "symq", version, about = "Projected Husimi Q-functions of N-qubit states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Projected Q̃ over the (m, n, k) lattice as a point cloud.
    Project(ProjectArgs),
    /// Moments, dispersion matrix T, eigen-structure and Gaussian model.
    Gaussian(GaussianArgs),
    /// Exact vs Gaussian moments of S·n.
    Moments(MomentsArgs),
    /// Localization verdict from an N-sweep.
    Localize(LocalizeArgs),
    /// Compare the analytic projections against the brute-force oracle.
    Validate(ValidateArgs),
    /// Point clouds and Gaussian envelopes for the reference figures.
    Figures(FiguresArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
struct StateArgs {
    /// dcs, basis, superposition_basis, ghz, shifted_ghz, w, biseparable_a,
    /// graph_pairs, uniform_mixed, dicke_uniform or custom.
    #[arg(long)]
    family: Option<String>,
    /// Number of qubits.
    #[arg(long)]
    n: Option<usize>,
    /// Phase shift μ as a 0/1 string (qubit 1 first).
    #[arg(long)]
    mu: Option<String>,
    /// Bit flip ν as a 0/1 string.
    #[arg(long)]
    nu: Option<String>,
    /// Basis string κ (κ₁ for superposition_basis).
    #[arg(long)]
    kappa: Option<String>,
    /// Second basis string κ₂.
    #[arg(long)]
    kappa2: Option<String>,
    /// Pair amplitude for biseparable_a.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    /// Amplitude file for custom states.
    #[arg(long)]
    path: Option<PathBuf>,
    /// JSON state spec `{"family", "n", "params"}`; flags above override n.
    #[arg(long)]
    spec: Option<PathBuf>,
}

impl StateArgs {
    /// The spec at `n`, or at the given N when none is set on the command line.
    fn build(&self, fallback_n: Option<usize>) -> Result<StateSpec> {
        let spec: StateSpec = if let Some(path) = &self.spec {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let spec: StateSpec = serde_json::from_str(&text).map_err(symq_core::Error::from)?;
            match self.n.or(fallback_n) {
                Some(n) if n != spec.n() => spec.with_n(n)?,
                _ => spec,
            }
        } else {
            let family = self.family.clone().context("give --family or --spec")?;
            let n = self.n.or(fallback_n).context("give --n (or --sweep)")?;
            let mut params = Map::new();
            let mut put = |key: &str, v: Option<Value>| {
                if let Some(v) = v {
                    params.insert(key.to_string(), v);
                }
            };
            let text = |s: &Option<String>| s.clone().map(Value::String);
            put("mu", text(&self.mu));
            put("nu", text(&self.nu));
            if family == "superposition_basis" {
                put("kappa1", text(&self.kappa));
                put("kappa2", text(&self.kappa2));
            } else {
                put("kappa", text(&self.kappa));
            }
            put("a", self.a.map(|a| json!(a)));
            put("path", self.path.as_ref().map(|p| Value::String(p.display().to_string())));
            StateSpec::try_from(RawSpec { family, n, params })?
        };
        Ok(spec)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Xyz,
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModelArg {
    Single,
    GhzPair,
}

impl From<ModelArg> for ModelChoice {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Single => ModelChoice::Single,
            ModelArg::GhzPair => ModelChoice::GhzPair,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum KindArg {
    Raw,
    Central,
}

#[derive(Args, Debug, Serialize)]
struct ProjectArgs {
    #[command(flatten)]
    state: StateArgs,
    /// Bin the full brute-force grid instead of the closed forms.
    #[arg(long)]
    bruteforce: bool,
    #[arg(long, default_value_t = DEFAULT_NMAX_BRUTE)]
    nmax_brute: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "xyz")]
    format: Format,
}

#[derive(Args, Debug, Serialize)]
struct GaussianArgs {
    #[command(flatten)]
    state: StateArgs,
    #[arg(long, value_enum, default_value = "single")]
    model: ModelArg,
    #[arg(long, default_value_t = DEFAULT_NMAX_BRUTE)]
    nmax_brute: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug, Serialize)]
struct MomentsArgs {
    #[command(flatten)]
    state: StateArgs,
    /// N-sweep: a:b:step, a:b:*factor or a comma list.
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long, value_enum)]
    axis: Option<AxisArg>,
    /// Direction as "nx,ny,nz" (need not be normalized).
    #[arg(long, allow_hyphen_values = true)]
    direction: Option<String>,
    /// Moment order(s), comma separated.
    #[arg(long, default_value = "4")]
    order: String,
    #[arg(long, value_enum, default_value = "raw")]
    kind: KindArg,
    #[arg(long, value_enum, default_value = "single")]
    model: ModelArg,
    /// Emit the closed-form comparison tables at --n (default 100).
    #[arg(long)]
    paper_tables: bool,
    #[arg(long, default_value_t = DEFAULT_NMAX_BRUTE)]
    nmax_brute: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum AxisArg {
    X,
    Y,
    Z,
}

#[derive(Args, Debug, Serialize)]
struct LocalizeArgs {
    #[command(flatten)]
    state: StateArgs,
    #[arg(long)]
    sweep: String,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_NMAX_BRUTE)]
    nmax_brute: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug, Serialize)]
struct ValidateArgs {
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// "all" or a comma list of family names.
    #[arg(long, default_value = "all")]
    families: String,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(long, default_value_t = DEFAULT_NMAX_BRUTE)]
    nmax_brute: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug, Serialize)]
struct FiguresArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Qubit count for the coherent, W and GHZ clouds.
    #[arg(long, default_value_t = 18)]
    n: usize,
    #[arg(long, value_enum, default_value = "xyz")]
    format: Format,
}

fn require_format(format: Format, allowed: &[Format], what: &str) -> Result<()> {
    if !allowed.contains(&format) {
        bail!(symq_core::Error::InvalidArgument(format!("{what} supports {allowed:?}, got {format:?}")));
    }
    Ok(())
}

fn config_of<T: Serialize>(command: &str, args: &T) -> Value {
    json!({ "command": command, "args": args })
}

fn render_projection(pq: &ProjectedQ, format: Format) -> Result<String> {
    let mut buf = Vec::new();
    match format {
        Format::Xyz => pq.write_xyz(&mut buf)?,
        Format::Csv => pq.write_csv(&mut buf)?,
        Format::Json => {
            let n = pq.n_qubits();
            let points: Vec<Value> = pq
                .iter_ln()
                .map(|(t, ln)| {
                    let [x, y, z] = t.scaled(n);
                    json!({"m": t.m, "n": t.n, "k": t.k, "x": x, "y": y, "z": z, "ln_value": ln, "value": ln.exp()})
                })
                .collect();
            let doc = json!({"meta": pq.sidecar(), "points": points});
            buf = (serde_json::to_string_pretty(&doc)? + "\n").into_bytes();
        }
    }
    Ok(String::from_utf8(buf)?)
}

fn run_project(args: &ProjectArgs) -> Result<()> {
    let spec = args.state.build(None)?;
    let pq = if args.bruteforce {
        project_bruteforce(&build_state(&spec, args.nmax_brute)?, args.nmax_brute, &spec.label())?
    } else {
        project_analytic(&spec)?
    };
    let body = render_projection(&pq, args.format)?;
    emit(args.out.as_deref(), &body, &config_of("project", args), pq.sidecar())
}

fn model_json(model: &GaussianModel) -> Value {
    let e = model.eigen();
    json!({
        "weight": model.weight(),
        "center": model.center(),
        "dispersion": model.dispersion(),
        "covariance": model.covariance(),
        "trace": model.trace(),
        "det": model.det(),
        "rank": model.rank(),
        "eigenvalues": e.values,
        "principal_axes": e.vectors,
    })
}

fn gaussian_doc(spec: &StateSpec, choice: ModelChoice, nmax: usize) -> Result<Value> {
    let summary = moment_summary(spec, nmax)?;
    let model = build_model(spec, choice, nmax)?;
    let single = t_matrix(&summary)?;
    let spherical = match spherical_check(&single) {
        Ok(s) => serde_json::to_value(s)?,
        Err(e) => json!({"not_applicable": e.to_string()}),
    };
    Ok(json!({
        "state": spec.label(),
        "n_qubits": spec.n(),
        "moments": summary,
        "components": model.components().iter().map(model_json).collect::<Vec<_>>(),
        "spherical": spherical,
    }))
}

fn run_gaussian(args: &GaussianArgs) -> Result<()> {
    require_format(args.format, &[Format::Json], "gaussian")?;
    let spec = args.state.build(None)?;
    let doc = gaussian_doc(&spec, args.model.into(), args.nmax_brute)?;
    let body = serde_json::to_string_pretty(&doc)? + "\n";
    emit(args.out.as_deref(), &body, &config_of("gaussian", args), json!({"state": spec.label()}))
}

fn parse_direction(args: &MomentsArgs) -> Result<[f64; 3]> {
    match (&args.axis, &args.direction) {
        (Some(_), Some(_)) => bail!(symq_core::Error::InvalidArgument("give --axis or --direction, not both".into())),
        (Some(a), None) => Ok(match a {
            AxisArg::X => Axis::X,
            AxisArg::Y => Axis::Y,
            AxisArg::Z => Axis::Z,
        }
        .unit()),
        (None, Some(text)) => {
            let v = text
                .split(',')
                .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad direction component `{s}`")))
                .collect::<Result<Vec<_>>>()?;
            let d: [f64; 3] = v.try_into().map_err(|_| anyhow::anyhow!("direction needs three components"))?;
            Ok(d)
        }
        (None, None) => bail!(symq_core::Error::InvalidArgument("give --axis or --direction".into())),
    }
}

fn reports_body(reports: &[MomentReport], format: Format) -> Result<String> {
    Ok(match format {
        Format::Csv => {
            let mut s = String::from(MomentReport::CSV_HEADER);
            s.push('\n');
            for r in reports {
                s.push_str(&r.csv_row());
                s.push('\n');
            }
            s
        }
        Format::Json => serde_json::to_string_pretty(reports)? + "\n",
        Format::Xyz => unreachable!("format checked earlier"),
    })
}

fn run_moments(args: &MomentsArgs) -> Result<()> {
    require_format(args.format, &[Format::Csv, Format::Json], "moments")?;
    let config = config_of("moments", args);
    if args.paper_tables {
        let n = args.state.n.unwrap_or(100);
        let rows = closed_form_tables(n, args.nmax_brute)?;
        let body = match args.format {
            Format::Csv => {
                let mut s = format!("label,formula_exact,formula_approx,{}\n", MomentReport::CSV_HEADER);
                for r in &rows {
                    s.push_str(&format!(
                        "\"{}\",{:.17e},{:.17e},{}\n",
                        r.label,
                        r.formula_exact,
                        r.formula_approx,
                        r.report.csv_row()
                    ));
                }
                s
            }
            _ => serde_json::to_string_pretty(&rows)? + "\n",
        };
        return emit(args.out.as_deref(), &body, &config, json!({"tables_n": n, "rows": rows.len()}));
    }
    let dir = parse_direction(args)?;
    let orders = args
        .order
        .split(',')
        .map(|s| s.trim().parse::<usize>().with_context(|| format!("bad order `{s}`")))
        .collect::<Result<Vec<_>>>()?;
    let ns = match &args.sweep {
        Some(s) => parse_sweep(s)?,
        None => vec![args.state.n.context("give --n or --sweep")?],
    };
    let spec = args.state.build(Some(ns[0]))?;
    let kind = match args.kind {
        KindArg::Raw => MomentKind::Raw,
        KindArg::Central => MomentKind::Central,
    };
    let reports = deviation_table(&spec, &[dir], &orders, &ns, kind, args.model.into(), args.nmax_brute)?;
    let body = reports_body(&reports, args.format)?;
    emit(args.out.as_deref(), &body, &config, json!({"rows": reports.len()}))
}

fn run_localize(args: &LocalizeArgs) -> Result<()> {
    require_format(args.format, &[Format::Json], "localize")?;
    let ns = parse_sweep(&args.sweep)?;
    let spec = args.state.build(Some(ns[0]))?;
    let report = classify_localization(&spec, &ns, args.epsilon, args.nmax_brute)?;
    let body = serde_json::to_string_pretty(&report)? + "\n";
    emit(args.out.as_deref(), &body, &config_of("localize", args), json!({"localized": report.localized}))
}

fn validation_specs(n: usize, which: &str) -> Result<Vec<StateSpec>> {
    let half = "1".repeat(n / 2) + &"0".repeat(n - n / 2);
    let mu: String = (0..n).map(|j| if j % 3 == 0 { '1' } else { '0' }).collect();
    let even = n.is_multiple_of(2);
    let mut all = vec![
        StateSpec::fiducial(n),
        StateSpec::dcs(&mu, &half)?,
        StateSpec::basis(&half)?,
        StateSpec::ghz(n),
        StateSpec::shifted_ghz(&half)?,
        StateSpec::w(n),
        StateSpec::uniform_mixed(n),
        StateSpec::dicke_uniform(n),
    ];
    if even {
        all.push(StateSpec::biseparable(-1.0, n)?);
        all.push(StateSpec::biseparable(0.5, n)?);
        all.push(StateSpec::graph_pairs(n)?);
    }
    if which.trim() == "all" {
        return Ok(all);
    }
    let wanted: Vec<&str> = which.split(',').map(str::trim).collect();
    for w in &wanted {
        if !all.iter().any(|s| s.family().name() == *w) {
            bail!(symq_core::Error::UnknownFamily(format!("{w} (not available for validation at N = {n})")));
        }
    }
    Ok(all.into_iter().filter(|s| wanted.contains(&s.family().name())).collect())
}

fn run_validate(args: &ValidateArgs) -> Result<bool> {
    require_format(args.format, &[Format::Json], "validate")?;
    if args.tolerance.is_nan() || args.tolerance <= 0.0 {
        bail!(symq_core::Error::InvalidArgument("tolerance must be positive".into()));
    }
    let specs = validation_specs(args.n, &args.families)?;
    let floor = 1e-14 * 2f64.powi(args.n as i32);
    let mut rows = Vec::new();
    let mut worst_all = 0.0f64;
    for spec in &specs {
        let fast = project_analytic(spec)?;
        let slow = project_bruteforce(&build_state(spec, args.nmax_brute)?, args.nmax_brute, &spec.label())?;
        let worst = fast
            .iter()
            .zip(slow.iter())
            .map(|((_, a), (_, b))| (a - b).abs() / b.abs().max(floor))
            .fold(0.0, f64::max);
        let norm = (fast.total() / 2f64.powi(args.n as i32) - 1.0).abs();
        worst_all = worst_all.max(worst).max(norm);
        rows.push(json!({
            "state": spec.label(),
            "max_relative_error": worst,
            "normalization_error": norm,
            "pass": worst <= args.tolerance && norm <= args.tolerance,
        }));
    }
    let pass = worst_all <= args.tolerance;
    let doc = json!({
        "n_qubits": args.n,
        "tolerance": args.tolerance,
        "max_relative_error": worst_all,
        "pass": pass,
        "states": rows,
    });
    let body = serde_json::to_string_pretty(&doc)? + "\n";
    emit(args.out.as_deref(), &body, &config_of("validate", args), json!({"pass": pass}))?;
    Ok(pass)
}

fn envelope_json(mix: &MultiGaussian) -> Value {
    json!({"components": mix.components().iter().map(model_json).collect::<Vec<_>>()})
}

fn run_figures(args: &FiguresArgs) -> Result<()> {
    require_format(args.format, &[Format::Xyz, Format::Csv, Format::Json], "figures")?;
    let n = args.n;
    let ext = match args.format {
        Format::Xyz => "xyz",
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let cases: Vec<(&str, StateSpec, bool)> = vec![
        ("coherent", StateSpec::fiducial(n), false),
        ("w", StateSpec::w(n), false),
        ("ghz", StateSpec::ghz(n), true),
        ("shifted_ghz", StateSpec::shifted_ghz("11110000")?, false),
    ];
    let config = config_of("figures", args);
    for (name, spec, pair) in cases {
        let pq = project_analytic(&spec)?;
        let path = args.out.join(format!("{name}_n{}.{ext}", spec.n()));
        emit(Some(&path), &render_projection(&pq, args.format)?, &config, pq.sidecar())?;
        let envelope = if pair {
            ghz_two_gaussian(spec.n())
        } else {
            MultiGaussian::single(t_matrix(&moment_summary(&spec, DEFAULT_NMAX_BRUTE)?)?)?
        };
        let env_path = args.out.join(format!("{name}_n{}_envelope.json", spec.n()));
        let body = serde_json::to_string_pretty(&envelope_json(&envelope))? + "\n";
        emit(Some(&env_path), &body, &config, json!({"state": spec.label()}))?;
    }
    Ok(())
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("SYMQ_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("SYMQ_THREADS=`{v}` is not a count"))?;
        if n == 0 {
            bail!(symq_core::Error::InvalidArgument("SYMQ_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn error_json(kind: &str, message: &str) -> String {
    json!({"error": kind, "message": message}).to_string()
}

fn report_error(err: &anyhow::Error) {
    let kind = err.downcast_ref::<symq_core::Error>().map_or("cli", symq_core::Error::kind);
    eprintln!("{}", error_json(kind, &format!("{err:#}")));
}

fn run(cli: &Cli) -> Result<bool> {
    configure_threads()?;
    match &cli.command {
        Command::Project(a) => run_project(a).map(|_| true),
        Command::Gaussian(a) => run_gaussian(a).map(|_| true),
        Command::Moments(a) => run_moments(a).map(|_| true),
        Command::Localize(a) => run_localize(a).map(|_| true),
        Command::Validate(a) => run_validate(a),
        Command::Figures(a) => run_figures(a).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", error_json("usage", e.render().to_string().trim()));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{}", error_json("validation_failed", "analytic and brute-force projections disagree"));
            ExitCode::from(1)
        }
        Err(err) => {
            report_error(&err);
            ExitCode::from(1)
        }
    }
}

