//! `aggrekin`: simulate and analyze the p62/ubiquitin aggregation model.
//!
//! Subcommands wrap the library operations one-to-one: `classify`,
//! `equilibrium`, `constants`, `simulate`, `sweep`, and `verify
//! theorem2|corollary1|transforms|growth`. Reports go to stdout as JSON;
//! trajectory and sweep data go to files as CSV (or a minimal SVG chart).
//!
//! Exit codes: 0 success, 2 validation errors (bad files, bad parameters,
//! bad flags), 3 domain errors (inadmissible states, preconditions of the
//! wrapped operation), 4 numerical failures (step limits, non-finite
//! states, failed brackets).

mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use aggrekin::analysis::{
    bifurcation_sweep, fit_growth, run_regime_experiment, slow_growth_constant,
    sqrt_growth_slope, transform_agreement_batch, verify_corollary1, verify_theorem2,
    AnalysisError, ExperimentOptions, SweepConfig, Verdict,
};
use aggrekin::integrator::{IntegratorConfig, Status};
use aggrekin::io::{curve_csv, sweep_grid_csv, trajectory_csv};
use aggrekin::model::{
    alpha_bar, classify, equilibrium, validate_params, vector_field, ModelError, ModelParams,
    RawParams, State,
};
use aggrekin::rng::{random_admissible, SplitMix64};
use aggrekin::systems::{self, SystemKind};
use aggrekin::transforms::{find_slow_constants, TransformError};
use aggrekin::IntegrateError;

#[derive(Parser)]
#[command(name = "aggrekin", version, about = "p62/ubiquitin aggregation kinetics toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the parameter regime from alpha_bar.
    Classify(ParamsArg),
    /// Print the nontrivial equilibrium (requires 0 < alpha_bar < 1).
    Equilibrium(ParamsArg),
    /// Print the slow-dynamics constants u*, v*, B, A* (growth regime).
    Constants {
        #[command(flatten)]
        params: ParamsArg,
        /// Scale separation eps = (p0 + q0)^{-1/2} to carry in the output.
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
    },
    /// Integrate one of the systems and write the trajectory.
    Simulate(SimulateArgs),
    /// Evaluate the alpha_bar grid and level curves over (kappa1, kappa2).
    Sweep(SweepArgs),
    /// Numerical verification drivers.
    #[command(subcommand)]
    Verify(VerifyCommand),
}

#[derive(Args)]
struct ParamsArg {
    /// Parameter file: JSON {"n","kappa1","kappa2","kappa3","kappa_m1","kappa_m"}.
    #[arg(short = 'p', long = "params")]
    params: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    params: ParamsArg,
    /// Initial state as `p,q,r` (original coordinates for every system).
    #[arg(long, default_value = "2,4,3")]
    init: String,
    /// Horizon in original time t, for every system.
    #[arg(long = "t-end", default_value_t = 200.0)]
    t_end: f64,
    /// Which chart to integrate in.
    #[arg(long, default_value = "original")]
    system: String,
    #[arg(long, default_value_t = 1e-9)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    atol: f64,
    #[arg(long = "max-steps", default_value_t = 10_000_000)]
    max_steps: usize,
    /// Keep every k-th accepted sample (memory control for long runs).
    #[arg(long = "store-every", default_value_t = 1)]
    store_every: usize,
    /// Output file for the trajectory.
    #[arg(long)]
    out: PathBuf,
    /// csv or svg; inferred from the output extension when omitted.
    #[arg(long)]
    format: Option<String>,
    /// Logarithmic x axis for SVG output.
    #[arg(long)]
    logx: bool,
    /// Logarithmic y axis for SVG output.
    #[arg(long)]
    logy: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep config: JSON {"k1_min","k1_max","k2_min","k2_max","resolution","fixed":{...}}.
    #[arg(short = 'c', long = "config")]
    config: PathBuf,
    /// Grid CSV path; level curves land next to it as `<stem>.alpha1.csv`
    /// and `<stem>.alpha0.csv`. An `.svg` path plots the curves instead.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Error scaling of the slow-fast approximation across epsilons.
    Theorem2 {
        #[command(flatten)]
        params: ParamsArg,
        #[arg(long, default_value_t = 1.0)]
        u0: f64,
        #[arg(long, default_value_t = 0.0)]
        v0: f64,
        /// Comma-separated epsilon list.
        #[arg(long, default_value = "1e-2,5e-3,2.5e-3")]
        eps: String,
        #[arg(long = "sigma-end", default_value_t = 10.0)]
        sigma_end: f64,
    },
    /// Tail law t*w -> 1/A* and the limits of u and v.
    Corollary1 {
        #[command(flatten)]
        params: ParamsArg,
        #[arg(long, default_value = "2,4,3")]
        init: String,
        #[arg(long = "t-end", default_value_t = 1e4)]
        t_end: f64,
    },
    /// Agreement of the blow-up and compactified flows with the original.
    Transforms {
        #[command(flatten)]
        params: ParamsArg,
        /// Number of random admissible initial states.
        #[arg(long, default_value_t = 5)]
        count: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long = "t-end", default_value_t = 50.0)]
        t_end: f64,
    },
    /// Growth exponents/coefficients and the sqrt growth law constant.
    Growth {
        #[command(flatten)]
        params: ParamsArg,
        #[arg(long, default_value = "2,4,3")]
        init: String,
        #[arg(long = "t-end", default_value_t = 1e4)]
        t_end: f64,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Analysis(#[from] AnalysisError),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    BadArgument(String),
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Analysis(e.into())
    }
}

impl From<TransformError> for CliError {
    fn from(e: TransformError) -> Self {
        CliError::Analysis(e.into())
    }
}

impl From<IntegrateError> for CliError {
    fn from(e: IntegrateError) -> Self {
        CliError::Analysis(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Read { .. } | CliError::Parse { .. } | CliError::Write { .. } => 2,
            CliError::BadArgument(_) => 2,
            CliError::Analysis(err) => match err {
                AnalysisError::Model(m) => match m {
                    ModelError::NonPositiveRate { .. } | ModelError::OligomerTooSmall { .. } => 2,
                    _ => 3,
                },
                AnalysisError::Transform(t) => match t {
                    TransformError::NoRoot(_) => 4,
                    _ => 3,
                },
                AnalysisError::Integrate(i) => match i {
                    IntegrateError::InvalidConfig(_) => 2,
                    _ => 4,
                },
                AnalysisError::Inconclusive(_) => 3,
                AnalysisError::NonPositiveComponent { .. } => 3,
                AnalysisError::WindowNotCovered { .. } => 2,
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("aggrekin: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Classify(args) => cmd_classify(&args.params),
        Command::Equilibrium(args) => cmd_equilibrium(&args.params),
        Command::Constants { params, epsilon } => cmd_constants(&params.params, epsilon),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Verify(v) => match v {
            VerifyCommand::Theorem2 { params, u0, v0, eps, sigma_end } => {
                cmd_verify_theorem2(&params.params, u0, v0, &eps, sigma_end)
            }
            VerifyCommand::Corollary1 { params, init, t_end } => {
                cmd_verify_corollary1(&params.params, &init, t_end)
            }
            VerifyCommand::Transforms { params, count, seed, t_end } => {
                cmd_verify_transforms(&params.params, count, seed, t_end)
            }
            VerifyCommand::Growth { params, init, t_end } => {
                cmd_verify_growth(&params.params, &init, t_end)
            }
        },
    }
}

fn load_params(path: &Path) -> Result<ModelParams, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
    let raw: RawParams = serde_json::from_str(&text)
        .map_err(|source| CliError::Parse { path: path.to_path_buf(), source })?;
    Ok(validate_params(raw)?)
}

fn parse_init(text: &str) -> Result<State, CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::BadArgument(format!("--init expects `p,q,r`, got `{text}`")));
    }
    let mut vals = [0.0; 3];
    for (slot, part) in vals.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse::<f64>()
            .map_err(|e| CliError::BadArgument(format!("--init component `{part}`: {e}")))?;
    }
    Ok(State::new(vals[0], vals[1], vals[2]))
}

fn parse_eps_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::BadArgument(format!("--eps entry `{s}`: {e}")))
        })
        .collect()
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|source| CliError::Write { path: path.to_path_buf(), source })
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("report serialization"));
}

fn to_value<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("report serialization")
}

fn cmd_classify(path: &Path) -> Result<(), CliError> {
    let params = load_params(path)?;
    let regime = classify(&params);
    print_json(&serde_json::json!({
        "alpha_bar": regime.alpha_bar,
        "regime": format!("{:?}", regime.tag),
    }));
    Ok(())
}

fn cmd_equilibrium(path: &Path) -> Result<(), CliError> {
    let params = load_params(path)?;
    let eq = equilibrium(&params)?;
    let f = vector_field(&eq.state(), &params)?;
    let residual = (f[0] * f[0] + f[1] * f[1] + f[2] * f[2]).sqrt();
    let mut value = to_value(&eq);
    value["alpha_bar"] = to_value(&alpha_bar(&params));
    value["residual"] = to_value(&residual);
    print_json(&value);
    Ok(())
}

fn cmd_constants(path: &Path, epsilon: f64) -> Result<(), CliError> {
    let params = load_params(path)?;
    let sc = find_slow_constants(&params, epsilon)?;
    print_json(&to_value(&sc));
    Ok(())
}

fn output_format(explicit: &Option<String>, out: &Path) -> Result<String, CliError> {
    let format = match explicit {
        Some(f) => f.clone(),
        None => out
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("csv")
            .to_ascii_lowercase(),
    };
    match format.as_str() {
        "csv" | "svg" => Ok(format),
        other => Err(CliError::BadArgument(format!("unsupported format `{other}`"))),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let params = load_params(&args.params.params)?;
    let init = parse_init(&args.init)?;
    let kind: SystemKind = args.system.parse().map_err(CliError::BadArgument)?;
    let format = output_format(&args.format, &args.out)?;
    let config = IntegratorConfig {
        rtol: args.rtol,
        atol: args.atol,
        max_steps: args.max_steps,
        store_every: args.store_every,
        ..Default::default()
    };

    let traj = systems::simulate(kind, &params, init, args.t_end, &config)?;
    let names = kind.component_names();
    match format.as_str() {
        "csv" => write_file(&args.out, &trajectory_csv(&traj, kind.time_name(), names))?,
        "svg" => {
            let series: Vec<svg::Series> = names
                .iter()
                .enumerate()
                .map(|(i, name)| svg::Series {
                    name: (*name).to_string(),
                    points: traj
                        .times
                        .iter()
                        .zip(&traj.states)
                        .map(|(t, y)| (*t, y[i]))
                        .collect(),
                })
                .collect();
            let chart = svg::line_chart(
                &format!("{:?} trajectory", kind),
                kind.time_name(),
                "components",
                &series,
                args.logx,
                args.logy,
            );
            write_file(&args.out, &chart)?;
        }
        _ => unreachable!("validated above"),
    }

    let mapped = systems::terminal_state(kind, &params, &traj)?;
    let status = match traj.status {
        Status::ReachedTEnd => "ReachedTEnd",
        Status::EventStop => "EventStop",
        Status::StepLimit => "StepLimit",
    };
    let mut terminal = serde_json::Map::new();
    terminal.insert(kind.time_name().into(), to_value(&traj.last_time()));
    for (name, value) in names.iter().zip(traj.last_state()) {
        terminal.insert((*name).to_string(), to_value(value));
    }
    print_json(&serde_json::json!({
        "system": format!("{kind:?}"),
        "status": status,
        "steps_accepted": traj.steps_accepted,
        "terminal": serde_json::Value::Object(terminal),
        "terminal_original": to_value(&mapped),
        "out": args.out.display().to_string(),
    }));
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|source| CliError::Read { path: args.config.clone(), source })?;
    let config: SweepConfig = serde_json::from_str(&text)
        .map_err(|source| CliError::Parse { path: args.config.clone(), source })?;
    let format = output_format(&args.format, &args.out)?;
    let sweep = bifurcation_sweep(&config)?;

    let mut outputs = vec![args.out.display().to_string()];
    match format.as_str() {
        "csv" => {
            write_file(&args.out, &sweep_grid_csv(&sweep))?;
            for (suffix, curve) in
                [("alpha1", &sweep.curve_alpha1), ("alpha0", &sweep.curve_alpha0)]
            {
                let path = args.out.with_extension(format!("{suffix}.csv"));
                write_file(&path, &curve_csv(curve))?;
                outputs.push(path.display().to_string());
            }
        }
        "svg" => {
            let series = vec![
                svg::Series {
                    name: "alpha_bar = 1".into(),
                    points: sweep.curve_alpha1.iter().map(|p| (p[0], p[1])).collect(),
                },
                svg::Series {
                    name: "alpha_bar = 0".into(),
                    points: sweep.curve_alpha0.iter().map(|p| (p[0], p[1])).collect(),
                },
            ];
            let chart =
                svg::line_chart("regime boundaries", "kappa1", "kappa2", &series, false, false);
            write_file(&args.out, &chart)?;
        }
        _ => unreachable!("validated above"),
    }

    print_json(&serde_json::json!({
        "fixed": to_value(&sweep.fixed),
        "resolution": sweep.resolution,
        "curve_alpha1_points": sweep.curve_alpha1.len(),
        "curve_alpha0_points": sweep.curve_alpha0.len(),
        "outputs": outputs,
    }));
    Ok(())
}

fn cmd_verify_theorem2(
    path: &Path,
    u0: f64,
    v0: f64,
    eps: &str,
    sigma_end: f64,
) -> Result<(), CliError> {
    let params = load_params(path)?;
    let eps_list = parse_eps_list(eps)?;
    let report = verify_theorem2(&params, u0, v0, &eps_list, sigma_end)?;
    print_json(&to_value(&report));
    Ok(())
}

fn cmd_verify_corollary1(path: &Path, init: &str, t_end: f64) -> Result<(), CliError> {
    let params = load_params(path)?;
    let init = parse_init(init)?;
    let config = IntegratorConfig { dense_output: false, store_every: 20, ..Default::default() };
    let report = verify_corollary1(&params, init, t_end, &config)?;
    print_json(&to_value(&report));
    Ok(())
}

fn cmd_verify_transforms(
    path: &Path,
    count: usize,
    seed: u64,
    t_end: f64,
) -> Result<(), CliError> {
    let params = load_params(path)?;
    let mut rng = SplitMix64::new(seed);
    let inits: Vec<State> =
        (0..count.max(1)).map(|_| random_admissible(&params, &mut rng, 4.0)).collect();
    let config = IntegratorConfig::with_tolerances(1e-10, 1e-13);
    let reports = transform_agreement_batch(&params, &inits, t_end, &config);
    let mut entries = Vec::new();
    let mut worst: f64 = 0.0;
    for (init, report) in inits.iter().zip(reports) {
        let report = report?;
        worst = worst.max(report.max_rel_dev_blowup).max(report.max_rel_dev_compact);
        entries.push(serde_json::json!({
            "init": to_value(init),
            "blowup_dev": report.max_rel_dev_blowup,
            "compact_dev": report.max_rel_dev_compact,
        }));
    }
    print_json(&serde_json::json!({
        "seed": seed,
        "t_end": t_end,
        "count": entries.len(),
        "max_rel_dev": worst,
        "runs": entries,
    }));
    Ok(())
}

fn cmd_verify_growth(path: &Path, init: &str, t_end: f64) -> Result<(), CliError> {
    let params = load_params(path)?;
    let init = parse_init(init)?;
    let opts = ExperimentOptions::default();
    let report = run_regime_experiment(&params, init, t_end, &opts)?;
    let c = slow_growth_constant(&params)?;

    // re-integrate for the slope check on the same tail window as the fit
    let traj = aggrekin::integrate(
        systems::original_field(&params),
        &init.as_array(),
        (0.0, t_end),
        &opts.integrator,
        &[],
    )?;
    let slope = sqrt_growth_slope(&traj, &params, (t_end / 10.0, t_end))?;
    let fit = match &report.verdict {
        Verdict::Growing { fit } => Some(fit.clone()),
        _ => fit_growth(&traj, (t_end / 10.0, t_end)).ok(),
    };
    print_json(&serde_json::json!({
        "experiment": to_value(&report),
        "fit": fit.as_ref().map(to_value),
        "sqrt_growth_constant": c,
        "fitted_sqrt_slope": slope,
    }));
    Ok(())
}
