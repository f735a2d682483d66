//! `pluriclosed` command line: integrate the flow on the model geometries,
//! run the validation suite, and extract long-time diagnostics.
//!
//! Exit codes are a stable contract: 0 success, 1 usage/configuration
//! problems, 2 numerical failures (including a validation suite that does not
//! pass).  Configuration is accepted both as flags and as a JSON file via
//! `--config`; explicit flags override file values.

use std::env;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use pluriclosed::analysis::{blowdown_limit, estimate_asymptotics, gh_limit, soliton_check};
use pluriclosed::catalog::{build_geometry, GeometryId, GeometryParams, GeometrySpec};
use pluriclosed::curvature::MetricCoefficients;
use pluriclosed::flow::{integrate, log_spaced, IntegratorOptions, Trajectory};
use pluriclosed::report::{
    write_trajectory_csv, AsymptoticsEnvelope, BlowdownEnvelope, SimulateReport, StateRecord,
    SweepManifest, SweepRun, ValidateReport, SCHEMA_VERSION,
};
use pluriclosed::validate::run_validation_suite;
use pluriclosed::{Error, Result};

#[derive(Parser)]
#[command(
    name = "pluriclosed",
    version,
    about = "Pluriclosed flow for invariant metrics on the 4d model geometries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the flow and write the trajectory as CSV.
    Simulate(SimulateArgs),
    /// Run the validation suite and print every check with its residual.
    Validate,
    /// Classify long-time coefficient growth and the Gromov-Hausdorff limit.
    Asymptotics(AsymptoticsArgs),
    /// Compare parabolic blowdown rescalings against the closed-form limits.
    Blowdown(BlowdownArgs),
    /// Run a grid of simulations (in parallel) into an output directory.
    Sweep(SweepArgs),
}

/// Flags shared by every run-producing subcommand.  Each is optional here;
/// required ones are enforced after merging with the `--config` file.
#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// JSON file with the same keys as these flags; explicit flags win.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Geometry name, e.g. `torus`, `hopf`, `kodaira-nil-semidirect`.
    #[arg(long)]
    geometry: Option<String>,
    /// Parameter alpha (hopf, properly-elliptic).
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Sign in {-1, 1} (kodaira-nil-semidirect); the flow is independent of
    /// it, so it defaults to 1.
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<i32>,
    /// Im(lambda) != 0 (inoue).
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    /// -Re(lambda) (inoue); defaults to 0.
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,
    /// Lattice quotient parameter > 1; required for sol1/sol1-prime
    /// Gromov-Hausdorff circle lengths.
    #[arg(long, allow_hyphen_values = true)]
    lambda_quotient: Option<f64>,
    /// Initial coefficient of zeta^{1 1bar} (required, > 0).
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<f64>,
    /// Initial coefficient of zeta^{2 2bar} (required, > 0).
    #[arg(long, allow_hyphen_values = true)]
    y0: Option<f64>,
    /// Initial Re z (default 0).
    #[arg(long, allow_hyphen_values = true)]
    re_z0: Option<f64>,
    /// Initial Im z (default 0).
    #[arg(long, allow_hyphen_values = true)]
    im_z0: Option<f64>,
    /// Integration horizon (default 1e4).
    #[arg(long)]
    t_end: Option<f64>,
    /// Relative tolerance (default 1e-10).
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Absolute tolerance on x and y (default 1e-12).
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Step budget (default 5e6).
    #[arg(long)]
    max_steps: Option<u64>,
    /// Number of log-spaced sample times, at least 2 (default 200).
    #[arg(long)]
    samples: Option<usize>,
}

/// The merged configuration bag; also the schema of the `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RunConfig {
    geometry: Option<String>,
    alpha: Option<f64>,
    epsilon: Option<i32>,
    a: Option<f64>,
    b: Option<f64>,
    lambda_quotient: Option<f64>,
    x0: Option<f64>,
    y0: Option<f64>,
    re_z0: Option<f64>,
    im_z0: Option<f64>,
    t_end: Option<f64>,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    max_steps: Option<u64>,
    samples: Option<usize>,
}

impl RunConfig {
    fn overlay(mut self, args: &ConfigArgs) -> RunConfig {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if args.$field.is_some() {
                    self.$field = args.$field.clone();
                })*
            };
        }
        take!(
            geometry,
            alpha,
            epsilon,
            a,
            b,
            lambda_quotient,
            x0,
            y0,
            re_z0,
            im_z0,
            t_end,
            rel_tol,
            abs_tol,
            max_steps,
            samples
        );
        self
    }

    /// Sets a sweep axis value.  Keys are validated by [`parse_vary`].
    fn set(&mut self, key: &str, value: f64) -> Result<()> {
        match key {
            "alpha" => self.alpha = Some(value),
            "a" => self.a = Some(value),
            "b" => self.b = Some(value),
            "x0" => self.x0 = Some(value),
            "y0" => self.y0 = Some(value),
            "re_z0" => self.re_z0 = Some(value),
            "im_z0" => self.im_z0 = Some(value),
            "epsilon" => {
                if value != 1.0 && value != -1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "epsilon must be 1 or -1, got {value}"
                    )));
                }
                self.epsilon = Some(value as i32);
            }
            other => {
                return Err(Error::InvalidOptions(format!(
                    "unknown sweep key `{other}`"
                )))
            }
        }
        Ok(())
    }

    fn resolve(&self) -> Result<Resolved> {
        let name = self
            .geometry
            .as_deref()
            .ok_or_else(|| Error::InvalidOptions("--geometry is required".into()))?;
        let id: GeometryId = name.parse()?;
        let params = self.params_for(id)?;
        let spec = build_geometry(id, params)?;
        let require = |value: Option<f64>, flag: &str| {
            value.ok_or_else(|| Error::InvalidOptions(format!("--{flag} is required")))
        };
        let g0 = MetricCoefficients::from_parts(
            require(self.x0, "x0")?,
            require(self.y0, "y0")?,
            self.re_z0.unwrap_or(0.0),
            self.im_z0.unwrap_or(0.0),
        )?;
        let t_end = self.t_end.unwrap_or(1e4);
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidOptions(format!(
                "t_end must be positive and finite, got {t_end}"
            )));
        }
        let mut opts = IntegratorOptions::to_time(t_end);
        if let Some(r) = self.rel_tol {
            opts.rel_tol = r;
        }
        if let Some(a) = self.abs_tol {
            opts.abs_tol = a;
        }
        if let Some(m) = self.max_steps {
            opts.max_steps = m;
        }
        if let Some(n) = self.samples {
            if n < 2 {
                return Err(Error::InvalidOptions(format!(
                    "--samples must be at least 2, got {n}"
                )));
            }
            opts.sample_times = log_spaced(n, t_end * 1e-6, t_end);
        }
        Ok(Resolved {
            spec,
            g0,
            opts,
            lambda_quotient: self.lambda_quotient,
        })
    }

    fn params_for(&self, id: GeometryId) -> Result<GeometryParams> {
        let need = |value: Option<f64>, flag: &str| {
            value.ok_or_else(|| {
                Error::InvalidParameter(format!("geometry `{}` requires --{flag}", id.name()))
            })
        };
        Ok(match id {
            GeometryId::Hopf | GeometryId::ProperlyElliptic => GeometryParams::Alpha {
                alpha: need(self.alpha, "alpha")?,
            },
            GeometryId::KodairaNilSemidirect => GeometryParams::Epsilon {
                epsilon: self.epsilon.unwrap_or(1),
            },
            GeometryId::InoueSolvable => GeometryParams::Lambda {
                a: need(self.a, "a")?,
                b: self.b.unwrap_or(0.0),
            },
            _ => GeometryParams::None,
        })
    }
}

#[derive(Debug, Clone)]
struct Resolved {
    spec: GeometrySpec,
    g0: MetricCoefficients,
    opts: IntegratorOptions,
    lambda_quotient: Option<f64>,
}

fn merged(args: &ConfigArgs) -> Result<RunConfig> {
    let base = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            serde_json::from_str(&text).map_err(|e| {
                Error::InvalidOptions(format!("config {}: {e}", path.display()))
            })?
        }
        None => RunConfig::default(),
    };
    Ok(base.overlay(args))
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Trajectory CSV path (stdout when omitted).
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// JSON run report path (defaults to stdout, or stderr when the CSV
    /// already occupies stdout).
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct AsymptoticsArgs {
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct BlowdownArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Blowdown scales, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
    scales: Vec<f64>,
    /// Blowdown time grid, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
    times: Vec<f64>,
    /// Also verify the expanding-soliton identity at this scale factor.
    #[arg(long)]
    soliton_scale: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Sweep axis `key=v1,v2,...`; repeatable.  Keys: alpha, epsilon, a, b,
    /// x0, y0, re_z0, im_z0.  The sweep runs the cartesian product.
    #[arg(long, value_name = "KEY=V1,V2,...")]
    vary: Vec<String>,
    /// Directory for `run_NNN.csv` files and `manifest.json`.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version land on stdout and exit 0; genuine usage
            // errors follow the exit-code contract (1, not clap's default 2).
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    let outcome = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Validate => cmd_validate(),
        Command::Asymptotics(args) => cmd_asymptotics(args),
        Command::Blowdown(args) => cmd_blowdown(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    let code = match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    };
    std::process::exit(code);
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize to JSON")
}

fn cmd_simulate(args: SimulateArgs) -> Result<i32> {
    let resolved = merged(&args.config)?.resolve()?;
    let (trajectory, truncated, failure): (Trajectory, bool, Option<String>) =
        match integrate(&resolved.spec, &resolved.g0, &resolved.opts) {
            Ok(traj) => (traj, false, None),
            Err(err) => {
                let message = err.to_string();
                match err {
                    Error::StepSizeUnderflow { partial, .. }
                    | Error::MaxStepsExceeded { partial, .. } => (*partial, true, Some(message)),
                    other => return Err(other),
                }
            }
        };

    match &args.csv {
        Some(path) => {
            let file = fs::File::create(path)?;
            write_trajectory_csv(BufWriter::new(file), &trajectory)?;
        }
        None => {
            let stdout = io::stdout().lock();
            write_trajectory_csv(stdout, &trajectory)?;
        }
    }

    let report = SimulateReport::new(&trajectory, resolved.opts.t_end, truncated);
    let json = to_json(&report);
    match (&args.report, &args.csv) {
        (Some(path), _) => {
            let mut file = fs::File::create(path)?;
            writeln!(file, "{json}")?;
        }
        (None, Some(_)) => println!("{json}"),
        (None, None) => eprintln!("{json}"),
    }

    if let Some(message) = failure {
        eprintln!("error: {message}");
        return Ok(2);
    }
    Ok(0)
}

fn cmd_validate() -> Result<i32> {
    let report = ValidateReport::new(run_validation_suite());
    println!("{}", to_json(&report));
    Ok(if report.passed { 0 } else { 2 })
}

fn cmd_asymptotics(args: AsymptoticsArgs) -> Result<i32> {
    let resolved = merged(&args.config)?.resolve()?;
    let trajectory = integrate(&resolved.spec, &resolved.g0, &resolved.opts)?;
    let report = estimate_asymptotics(&trajectory)?;
    let limit = gh_limit(&trajectory, resolved.lambda_quotient)?;
    let envelope = AsymptoticsEnvelope {
        schema_version: SCHEMA_VERSION,
        geometry: resolved.spec.id,
        params: resolved.spec.params,
        report,
        gh_limit: Some(limit),
    };
    println!("{}", to_json(&envelope));
    Ok(0)
}

fn cmd_blowdown(args: BlowdownArgs) -> Result<i32> {
    let config = merged(&args.config)?;
    let resolved = config.resolve()?;
    if args.scales.is_empty() || args.times.is_empty() {
        return Err(Error::InvalidOptions(
            "--scales and --times must be nonempty".into(),
        ));
    }
    let positive = |vs: &[f64]| vs.iter().all(|v| v.is_finite() && *v > 0.0);
    if !positive(&args.scales) || !positive(&args.times) {
        return Err(Error::InvalidOptions(
            "--scales and --times must be positive and finite".into(),
        ));
    }
    let s_max = args.scales.iter().fold(0.0f64, |m, v| m.max(*v));
    let t_max = args.times.iter().fold(0.0f64, |m, v| m.max(*v));
    let needed = s_max * t_max;

    // Stretch the horizon to cover the largest rescaled time and land exactly
    // on every (s, t) product.
    let mut opts = resolved.opts.clone();
    if config.t_end.is_none() || opts.t_end < needed {
        opts.t_end = opts.t_end.max(needed);
        let n = config.samples.unwrap_or(200);
        opts.sample_times = log_spaced(n, opts.t_end * 1e-6, opts.t_end);
    }
    for &s in &args.scales {
        for &t in &args.times {
            opts.sample_times.push(s * t);
        }
    }
    opts.sample_times
        .sort_by(|a, b| a.partial_cmp(b).expect("finite sample times"));
    opts.sample_times
        .dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    opts.sample_times.retain(|&t| t <= opts.t_end);

    let trajectory = integrate(&resolved.spec, &resolved.g0, &opts)?;
    let result = blowdown_limit(&trajectory, &args.scales, &args.times)?;
    let soliton_residual = args
        .soliton_scale
        .map(|scale| soliton_check(&result, scale))
        .transpose()?;
    let envelope = BlowdownEnvelope {
        schema_version: SCHEMA_VERSION,
        params: resolved.spec.params,
        result,
        soliton_residual,
    };
    println!("{}", to_json(&envelope));
    Ok(0)
}

fn parse_vary(axes: &[String]) -> Result<Vec<(String, Vec<f64>)>> {
    const KEYS: [&str; 8] = ["alpha", "epsilon", "a", "b", "x0", "y0", "re_z0", "im_z0"];
    let mut parsed = Vec::with_capacity(axes.len());
    for axis in axes {
        let (key, values) = axis.split_once('=').ok_or_else(|| {
            Error::InvalidOptions(format!("--vary expects `key=v1,v2,...`, got `{axis}`"))
        })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(Error::InvalidOptions(format!(
                "unknown sweep key `{key}` (expected one of {})",
                KEYS.join(", ")
            )));
        }
        let values = values
            .split(',')
            .map(|v| {
                v.trim().parse::<f64>().map_err(|_| {
                    Error::InvalidOptions(format!("--vary {key}: bad value `{v}`"))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.is_empty() {
            return Err(Error::InvalidOptions(format!(
                "--vary {key}: needs at least one value"
            )));
        }
        parsed.push((key.to_string(), values));
    }
    Ok(parsed)
}

fn sweep_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = env::var("BISMUT_FLOW_THREADS") {
        let threads: usize = raw.trim().parse().map_err(|_| {
            Error::InvalidOptions(format!(
                "BISMUT_FLOW_THREADS must be a positive integer, got `{raw}`"
            ))
        })?;
        if threads == 0 {
            return Err(Error::InvalidOptions(
                "BISMUT_FLOW_THREADS must be at least 1".into(),
            ));
        }
        builder = builder.num_threads(threads);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidOptions(format!("thread pool: {e}")))
}

fn cmd_sweep(args: SweepArgs) -> Result<i32> {
    let base = merged(&args.config)?;
    let axes = parse_vary(&args.vary)?;
    let mut configs = vec![base];
    for (key, values) in &axes {
        let mut next = Vec::with_capacity(configs.len() * values.len());
        for config in &configs {
            for &value in values {
                let mut combo = config.clone();
                combo.set(key, value)?;
                next.push(combo);
            }
        }
        configs = next;
    }
    // Every combination must be valid before any run starts.
    let resolved = configs
        .iter()
        .map(RunConfig::resolve)
        .collect::<Result<Vec<Resolved>>>()?;

    fs::create_dir_all(&args.out_dir)?;
    let pool = sweep_pool()?;
    let outcomes: Vec<(Option<StateRecord>, Option<String>)> = pool.install(|| {
        resolved
            .par_iter()
            .enumerate()
            .map(|(index, run)| {
                let csv = args.out_dir.join(format!("run_{index:03}.csv"));
                let write = |traj: &Trajectory| -> Result<()> {
                    let file = fs::File::create(&csv)?;
                    write_trajectory_csv(BufWriter::new(file), traj)
                };
                match integrate(&run.spec, &run.g0, &run.opts) {
                    Ok(traj) => match write(&traj) {
                        Ok(()) => (Some(StateRecord::from(&traj.final_state())), None),
                        Err(err) => (None, Some(err.to_string())),
                    },
                    Err(err) => {
                        let message = err.to_string();
                        match err {
                            Error::StepSizeUnderflow { partial, .. }
                            | Error::MaxStepsExceeded { partial, .. } => {
                                let _ = write(&partial);
                            }
                            _ => {}
                        }
                        (None, Some(message))
                    }
                }
            })
            .collect()
    });

    let runs: Vec<SweepRun> = resolved
        .iter()
        .zip(&outcomes)
        .enumerate()
        .map(|(index, (run, (final_state, error)))| {
            let start = pluriclosed::flow::FlowState { t: 0.0, g: run.g0 };
            SweepRun {
                index,
                geometry: run.spec.id,
                params: run.spec.params,
                initial: StateRecord::from(&start),
                csv: format!("run_{index:03}.csv"),
                final_state: *final_state,
                error: error.clone(),
            }
        })
        .collect();
    let failed = runs.iter().filter(|r| r.error.is_some()).count();
    let manifest = SweepManifest {
        schema_version: SCHEMA_VERSION,
        t_end: resolved.first().map_or(0.0, |r| r.opts.t_end),
        runs,
    };
    fs::write(
        args.out_dir.join("manifest.json"),
        to_json(&manifest) + "\n",
    )?;
    if failed > 0 {
        eprintln!("error: {failed} of {} runs failed", resolved.len());
        return Ok(2);
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_file_values() {
        let file: RunConfig =
            serde_json::from_str(r#"{"geometry": "hopf", "alpha": 2.0, "x0": 1.0, "y0": 3.0}"#)
                .unwrap();
        let args = ConfigArgs {
            alpha: Some(0.5),
            ..ConfigArgs::default()
        };
        let merged = file.overlay(&args);
        assert_eq!(merged.alpha, Some(0.5));
        assert_eq!(merged.geometry.as_deref(), Some("hopf"));
        assert_eq!(merged.y0, Some(3.0));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let parsed: std::result::Result<RunConfig, _> =
            serde_json::from_str(r#"{"geomtry": "hopf"}"#);
        assert!(parsed.is_err());
    }

    #[test]
    fn vary_axes_parse_and_validate() {
        let axes = parse_vary(&["alpha=1,2".into(), "x0=0.5".into()]).unwrap();
        assert_eq!(axes[0].0, "alpha");
        assert_eq!(axes[0].1, vec![1.0, 2.0]);
        assert_eq!(axes[1].1, vec![0.5]);

        assert!(parse_vary(&["t_end=1".into()]).is_err());
        assert!(parse_vary(&["alpha".into()]).is_err());
        assert!(parse_vary(&["alpha=x".into()]).is_err());
    }

    #[test]
    fn geometry_parameters_are_enforced() {
        let config = RunConfig {
            geometry: Some("hopf".into()),
            x0: Some(1.0),
            y0: Some(1.0),
            ..RunConfig::default()
        };
        assert!(matches!(
            config.resolve(),
            Err(Error::InvalidParameter(_))
        ));

        let config = RunConfig {
            alpha: Some(1.0),
            ..config
        };
        let resolved = config.resolve().unwrap();
        assert_eq!(resolved.spec.id, GeometryId::Hopf);
        assert_eq!(resolved.opts.t_end, 1e4);
    }

    #[test]
    fn inadmissible_initial_data_is_a_config_error() {
        let config = RunConfig {
            geometry: Some("torus".into()),
            x0: Some(1.0),
            y0: Some(1.0),
            re_z0: Some(2.0),
            ..RunConfig::default()
        };
        let err = config.resolve().unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
