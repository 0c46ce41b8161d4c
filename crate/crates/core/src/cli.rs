//! Command-line front end: configuration ingestion, run orchestration,
//! artifact persistence, and plot-script emission.
//!
//! Conventions: a single JSON document (`--config`) supplies the run
//! configuration; individual flags override its keys; the `LVFRONT_OUT_DIR`
//! environment variable overrides the output directory. All outputs are
//! written atomically (temp file + rename) together with the effective
//! configuration, so re-running from the persisted `run_config.json`
//! reproduces them bitwise. Exit codes: 0 pass, 1 certified failure,
//! 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{LvError, Result};
use crate::front::{
    default_window, estimate_tail_constants, fit_tail_rate, solve_scalar_front,
    solve_system_front, FrontProfile, GridSpec, ScalarEq,
};
use crate::model::{classify_regime, ModelParams};
use crate::odefree::{certify_logistic_envelope, monotone_connecting_data, solve_diffusion_free};
use crate::pde::{
    check_theorem42_properties, comparison_harness, derivative_bound_probe, entire_approximation,
    simulate, BoundaryKind, FieldState, SchemeConfig, StartData,
};
use crate::spectral::{
    classify_minus_infinity, coexistence_eigenvalues, coexistence_report, origin_eigenvalues,
    Side, WaveParams,
};
use crate::supersub::{
    build_front_family, build_scalar_family, verify_inequalities, Lattice, Selector, SuperSubPair,
};

/// Environment variable overriding the output directory.
pub const OUT_DIR_ENV: &str = "LVFRONT_OUT_DIR";

/// Persisted run configuration; every flag has a corresponding key.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub k1: f64,
    pub k2: f64,
    pub r: f64,
    pub d: f64,
    /// Wave speed.
    pub c: f64,
    /// Branch selector `ijm` for the front family, e.g. "110".
    pub selector: String,
    /// Boundary tolerance for the front grids.
    pub front_tol: f64,
    /// Verification lattice for the coupled inequalities.
    pub lattice_x: (f64, f64),
    pub lattice_nx: usize,
    pub lattice_t: (f64, f64),
    pub lattice_nt: usize,
    pub ridge_margin: f64,
    /// PDE discretization.
    pub scheme: SchemeConfig,
    pub snap_every: usize,
    /// Backward start offsets for the entire approximation.
    pub n_list: Vec<u32>,
    /// Diffusion-free initial data; `theta2` defaults to the monotone
    /// connecting curve through `theta1`, `theta1` to `u*/2`.
    pub theta1: Option<f64>,
    pub theta2: Option<f64>,
    pub t_horizon: f64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            k1: 0.5,
            k2: 0.5,
            r: 1.0,
            d: 1.0,
            c: 2.2,
            selector: "110".into(),
            front_tol: 1e-9,
            lattice_x: (-20.0, 20.0),
            lattice_nx: 201,
            lattice_t: (-5.0, 5.0),
            lattice_nt: 201,
            ridge_margin: 1e-8,
            scheme: SchemeConfig {
                x_half_length: 60.0,
                nx: 601,
                dt: 0.02,
                t_start: -5.0,
                t_end: 5.0,
                boundary: BoundaryKind::NeumannZero,
                theta: 1.0,
            },
            snap_every: 25,
            n_list: vec![5, 10, 20],
            theta1: None,
            theta2: None,
            t_horizon: 40.0,
            out_dir: PathBuf::from("lvfront-out"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "lvfront",
    about = "Fronts, super-/sub-solution pairs, and entire-solution \
             approximation for the diffusive competition system",
    version
)]
struct Cli {
    /// JSON run configuration; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (LVFRONT_OUT_DIR overrides both).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Clone, Args)]
struct ModelArgs {
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    k2: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    d: Option<f64>,
    /// Wave speed.
    #[arg(long)]
    c: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify the competition regime from (k1, k2).
    Classify(ModelArgs),
    /// Origin and coexistence spectra, multiplicity case, templates.
    Spectral(ModelArgs),
    /// Solve a traveling front and fit its tails.
    Front {
        #[command(flatten)]
        model: ModelArgs,
        /// system | scalar-u | scalar-v
        #[arg(long, default_value = "system")]
        family: String,
    },
    /// Diffusion-free orbit with logistic envelopes.
    Odefree {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        theta1: Option<f64>,
        /// Defaults to the monotone connecting curve through theta1.
        #[arg(long)]
        theta2: Option<f64>,
    },
    /// Build a super-/sub-solution pair and verify its inequalities.
    Supersub {
        #[command(flatten)]
        model: ModelArgs,
        /// Branch selector "ijm", or "kpp" for the scalar family.
        #[arg(long)]
        selector: Option<String>,
    },
    /// Simulate from sub-solution data and certify the sandwich.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        selector: Option<String>,
    },
    /// Backward-start entire-solution approximation; gaps must decrease.
    Entire {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        selector: Option<String>,
        /// Comma-separated start offsets, e.g. 5,10,20.
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<u32>>,
    },
    /// Qualitative checks on the approximated entire solution.
    Check42 {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<u32>>,
    },
    /// Derivative-boundedness probe on a sandwich run.
    Probe {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        selector: Option<String>,
    },
    /// Emit a gnuplot script for existing artifacts.
    Plot {
        /// front | tail | sandwich
        #[arg(long)]
        kind: String,
        /// Artifact paths referenced by the script.
        #[arg(long, required = true, num_args = 1..)]
        artifact: Vec<PathBuf>,
    },
}

/// Parse `argv` and execute; returns the process exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(line) => {
            println!("{line}");
            0
        }
        Err(e) => {
            eprintln!("lvfront: {e}");
            match e {
                LvError::Config(_) | LvError::Io(_) => 2,
                _ => 1,
            }
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            serde_json::from_str(&text)
                .map_err(|e| LvError::Config(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.clone();
    }
    if let Some(dir) = std::env::var_os(OUT_DIR_ENV) {
        cfg.out_dir = PathBuf::from(dir);
    }
    Ok(cfg)
}

fn apply_model_args(cfg: &mut RunConfig, m: &ModelArgs) {
    if let Some(x) = m.k1 {
        cfg.k1 = x;
    }
    if let Some(x) = m.k2 {
        cfg.k2 = x;
    }
    if let Some(x) = m.r {
        cfg.r = x;
    }
    if let Some(x) = m.d {
        cfg.d = x;
    }
    if let Some(x) = m.c {
        cfg.c = x;
    }
}

fn model_of(cfg: &RunConfig) -> Result<ModelParams> {
    ModelParams::new(cfg.k1, cfg.k2, cfg.r, cfg.d)
}

/// Write atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp-write");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| LvError::Config(format!("serialize {name}: {e}")))?;
    write_atomic(&path, &text)?;
    Ok(path)
}

fn persist_config(cfg: &RunConfig) -> Result<()> {
    write_json(&cfg.out_dir, "run_config.json", cfg)?;
    Ok(())
}

fn parse_selector(s: &str) -> Result<Selector> {
    let b: Vec<u8> = s
        .chars()
        .map(|c| {
            c.to_digit(10)
                .map(|d| d as u8)
                .ok_or_else(|| LvError::Config(format!("selector must be three digits, got {s}")))
        })
        .collect::<Result<_>>()?;
    if b.len() != 3 {
        return Err(LvError::Config(format!(
            "selector must be three digits, got {s}"
        )));
    }
    Selector::new(b[0], b[1], b[2])
}

fn solve_front(cfg: &RunConfig) -> Result<(WaveParams, FrontProfile)> {
    let model = model_of(cfg)?;
    let wave = WaveParams::new(model, cfg.c)?;
    let front = solve_system_front(&wave, GridSpec::auto(&wave, cfg.front_tol)?)?;
    Ok((wave, front))
}

fn build_pair(cfg: &RunConfig, selector: &str) -> Result<SuperSubPair> {
    let model = model_of(cfg)?;
    if selector.eq_ignore_ascii_case("kpp") {
        let eq_u = crate::front::ScalarEquation::from_model(&model, ScalarEq::UEq, cfg.c)?;
        let eq_v = crate::front::ScalarEquation::from_model(&model, ScalarEq::VEq, cfg.c)?;
        let fu = solve_scalar_front(
            &model,
            ScalarEq::UEq,
            cfg.c,
            GridSpec::auto_scalar(&eq_u, cfg.front_tol)?,
        )?;
        let fv = solve_scalar_front(
            &model,
            ScalarEq::VEq,
            cfg.c,
            GridSpec::auto_scalar(&eq_v, cfg.front_tol)?,
        )?;
        return build_scalar_family(&fu, &fv);
    }
    let sel = parse_selector(selector)?;
    let (_, front) = solve_front(cfg)?;
    let (us, _) = model.coexistence()?;
    let th1 = cfg.theta1.unwrap_or(us / 2.0);
    let th2 = match cfg.theta2 {
        Some(t) => t,
        None => monotone_connecting_data(&model, th1)?,
    };
    let horizon = cfg
        .t_horizon
        .max(cfg.scheme.t_end.abs())
        .max(cfg.n_list.iter().copied().max().unwrap_or(0) as f64 + 1.0);
    let orbit = solve_diffusion_free(&model, th1, th2, horizon, 1e-10)?;
    build_front_family(&front, &orbit, sel)
}

fn snapshots_manifest(
    cfg: &RunConfig,
    snaps: &[FieldState],
    dir_name: &str,
) -> Result<serde_json::Value> {
    let dir = cfg.out_dir.join(dir_name);
    let mut times = Vec::with_capacity(snaps.len());
    for (k, s) in snaps.iter().enumerate() {
        let name = format!("snap_{k:04}.csv");
        write_atomic(&dir.join(&name), &s.to_csv())?;
        times.push(serde_json::json!({ "file": name, "time": s.time }));
    }
    Ok(serde_json::json!({
        "dir": dir_name,
        "scheme": cfg.scheme,
        "snapshots": times,
    }))
}

fn dispatch(cli: Cli) -> Result<String> {
    let mut cfg = load_config(&cli)?;
    match &cli.cmd {
        Command::Classify(m) => {
            apply_model_args(&mut cfg, m);
            let model = model_of(&cfg)?;
            let case = classify_regime(&model)?;
            Ok(format!("{case:?}: {}", case.description()))
        }
        Command::Spectral(m) => {
            apply_model_args(&mut cfg, m);
            persist_config(&cfg)?;
            let model = model_of(&cfg)?;
            let wave = WaveParams::new(model, cfg.c)?;
            let origin = origin_eigenvalues(&wave)?;
            let coex = coexistence_eigenvalues(&wave)?;
            let minus = classify_minus_infinity(&wave)?;
            let plus = coexistence_report(&wave)?;
            let doc = serde_json::json!({
                "model": model,
                "c": cfg.c,
                "origin_eigenvalues": { "lambda3": origin.0, "lambda4": origin.1,
                                         "lambda5": origin.2, "lambda6": origin.3 },
                "coexistence": coex,
                "minus_infinity": minus,
                "plus_infinity": plus,
            });
            let path = write_json(&cfg.out_dir, "spectral.json", &doc)?;
            Ok(format!(
                "case {:?}; lambda1={:.6}, lambda2={:.6} -> {}",
                minus.case_tag,
                coex.lambda1,
                coex.lambda2,
                path.display()
            ))
        }
        Command::Front { model: m, family } => {
            apply_model_args(&mut cfg, m);
            persist_config(&cfg)?;
            let model = model_of(&cfg)?;
            let front = match family.as_str() {
                "system" => solve_front(&cfg)?.1,
                "scalar-u" | "scalar-v" => {
                    let which = if family == "scalar-u" {
                        ScalarEq::UEq
                    } else {
                        ScalarEq::VEq
                    };
                    let eq = crate::front::ScalarEquation::from_model(&model, which, cfg.c)?;
                    solve_scalar_front(
                        &model,
                        which,
                        cfg.c,
                        GridSpec::auto_scalar(&eq, cfg.front_tol)?,
                    )?
                }
                other => {
                    return Err(LvError::Config(format!(
                        "unknown front family {other}; use system, scalar-u, or scalar-v"
                    )))
                }
            };
            write_atomic(&cfg.out_dir.join("front.csv"), &front.to_csv())?;
            let mut tails = serde_json::Map::new();
            tails.insert(
                "residual_norm".into(),
                serde_json::json!(front.residual_norm),
            );
            for (side, key) in [
                (Side::PlusInfinity, "plus"),
                (Side::MinusInfinity, "minus"),
            ] {
                let scale = match side {
                    Side::PlusInfinity => front.limits.1 .0.max(front.limits.1 .1),
                    Side::MinusInfinity => 1.0,
                };
                match fit_tail_rate(&front, side, default_window(scale)) {
                    Ok(fit) => {
                        tails.insert(key.into(), serde_json::to_value(&fit).unwrap());
                    }
                    Err(e) => {
                        tails.insert(key.into(), serde_json::json!({ "error": e.to_string() }));
                    }
                }
            }
            if family == "system" {
                if let Ok(consts) = estimate_tail_constants(&front) {
                    tails.insert("constants".into(), serde_json::to_value(&consts).unwrap());
                }
            }
            let path = write_json(&cfg.out_dir, "tails.json", &serde_json::Value::Object(tails))?;
            Ok(format!(
                "front residual {:.3e} -> front.csv, {}",
                front.residual_norm,
                path.display()
            ))
        }
        Command::Odefree { model: m, theta1, theta2 } => {
            apply_model_args(&mut cfg, m);
            if theta1.is_some() {
                cfg.theta1 = *theta1;
            }
            if theta2.is_some() {
                cfg.theta2 = *theta2;
            }
            persist_config(&cfg)?;
            let model = model_of(&cfg)?;
            let (us, _) = model.coexistence()?;
            let th1 = cfg.theta1.unwrap_or(us / 2.0);
            let th2 = match cfg.theta2 {
                Some(t) => t,
                None => monotone_connecting_data(&model, th1)?,
            };
            let orbit = solve_diffusion_free(&model, th1, th2, cfg.t_horizon, 1e-10)?;
            write_atomic(&cfg.out_dir.join("orbit.csv"), &orbit.to_csv())?;
            let report = certify_logistic_envelope(&orbit)?;
            let path = write_json(&cfg.out_dir, "envelope.json", &report)?;
            Ok(format!(
                "orbit from ({th1:.6}, {th2:.6}); envelope margins p={:.3e}, q={:.3e} -> {}",
                report.worst_margin_p,
                report.worst_margin_q,
                path.display()
            ))
        }
        Command::Supersub { model: m, selector } => {
            apply_model_args(&mut cfg, m);
            if let Some(s) = selector {
                cfg.selector = s.clone();
            }
            persist_config(&cfg)?;
            let pair = build_pair(&cfg, &cfg.selector.clone())?;
            let lattice = Lattice::new(
                cfg.lattice_x,
                cfg.lattice_nx,
                cfg.lattice_t,
                cfg.lattice_nt,
            )?;
            let cert = verify_inequalities(&pair, lattice, cfg.ridge_margin)?;
            let path = write_json(&cfg.out_dir, "supersub.json", &cert)?;
            Ok(format!(
                "inequalities pass={} (ridge-skipped {}/{}) -> {}",
                cert.pass,
                cert.ridge_points_skipped,
                cert.lattice_points,
                path.display()
            ))
        }
        Command::Simulate { model: m, selector } => {
            apply_model_args(&mut cfg, m);
            if let Some(s) = selector {
                cfg.selector = s.clone();
            }
            persist_config(&cfg)?;
            let pair = build_pair(&cfg, &cfg.selector.clone())?;
            let model = model_of(&cfg)?;
            let cert = comparison_harness(
                &pair,
                &model,
                &cfg.scheme,
                cfg.snap_every,
                StartData::SubSub,
            )?;
            let path = write_json(&cfg.out_dir, "sandwich.json", &cert)?;
            Ok(format!(
                "sandwich pass={} (eps={:.3e}) -> {}",
                cert.pass,
                cert.epsilon,
                path.display()
            ))
        }
        Command::Entire { model: m, selector, n } => {
            apply_model_args(&mut cfg, m);
            if let Some(s) = selector {
                cfg.selector = s.clone();
            }
            if let Some(n) = n {
                cfg.n_list = n.clone();
            }
            persist_config(&cfg)?;
            let pair = build_pair(&cfg, &cfg.selector.clone())?;
            let model = model_of(&cfg)?;
            let approx = entire_approximation(
                &pair,
                &model,
                &cfg.scheme,
                &cfg.n_list,
                cfg.snap_every,
                StartData::SubSub,
            )?;
            let mut manifests = Vec::new();
            for (k, run) in approx.snapshots.iter().enumerate() {
                manifests.push(snapshots_manifest(
                    &cfg,
                    run,
                    &format!("entire_n{}", cfg.n_list[k]),
                )?);
            }
            let doc = serde_json::json!({
                "start_times": approx.start_times,
                "window": approx.window,
                "cauchy_gaps": approx.cauchy_gaps,
                "runs": manifests,
            });
            let path = write_json(&cfg.out_dir, "gaps.json", &doc)?;
            Ok(format!(
                "gaps {:?} decreasing -> {}",
                approx.cauchy_gaps,
                path.display()
            ))
        }
        Command::Check42 { model: m, n } => {
            apply_model_args(&mut cfg, m);
            if let Some(n) = n {
                cfg.n_list = n.clone();
            }
            persist_config(&cfg)?;
            let pair = build_pair(&cfg, &cfg.selector.clone())?;
            let model = model_of(&cfg)?;
            let approx = entire_approximation(
                &pair,
                &model,
                &cfg.scheme,
                &cfg.n_list,
                cfg.snap_every,
                StartData::SubSuper,
            )?;
            let report = check_theorem42_properties(&approx, &pair, &model)?;
            let path = write_json(&cfg.out_dir, "check42.json", &report)?;
            Ok(format!(
                "properties pass={}; backward rate {:.4} vs {:.4} -> {}",
                report.pass,
                report.fitted_backward_rate,
                report.reference_rate,
                path.display()
            ))
        }
        Command::Probe { model: m, selector } => {
            apply_model_args(&mut cfg, m);
            if let Some(s) = selector {
                cfg.selector = s.clone();
            }
            persist_config(&cfg)?;
            let pair = build_pair(&cfg, &cfg.selector.clone())?;
            let model = model_of(&cfg)?;
            let t0 = cfg.scheme.t_start;
            let mut initial =
                FieldState::from_fn(&cfg.scheme, |x| (pair.sub_u(x, t0), pair.super_v(x, t0)));
            initial.time = t0;
            let snaps = simulate(&initial, &model, &cfg.scheme, cfg.snap_every)?;
            let report = derivative_bound_probe(&snaps)?;
            let path = write_json(&cfg.out_dir, "probe.json", &report)?;
            Ok(format!(
                "derivative norms bounded (early {:.3e}, late {:.3e}) -> {}",
                report.early,
                report.late,
                path.display()
            ))
        }
        Command::Plot { kind, artifact } => {
            let script = emit_plot_script(&cfg.out_dir, artifact, kind)?;
            Ok(format!("plot script -> {}", script.display()))
        }
    }
}

/// Write a gnuplot script referencing existing artifacts.
///
/// `kind` selects the template: `front` (profiles vs xi), `tail`
/// (log-profile with a slope guide), `sandwich` (margin vs time).
pub fn emit_plot_script(out_dir: &Path, artifacts: &[PathBuf], kind: &str) -> Result<PathBuf> {
    for a in artifacts {
        if !a.exists() {
            return Err(LvError::MissingArtifact(a.display().to_string()));
        }
    }
    let first = artifacts
        .first()
        .ok_or_else(|| LvError::MissingArtifact("no artifacts given".into()))?;
    let data = first.display();
    let body = match kind {
        "front" => format!(
            "set datafile separator ','\n\
             set xlabel 'xi'\nset ylabel 'profile'\nset key left\n\
             plot '{data}' using 1:2 with lines title 'phi', \\\n     \
             '{data}' using 1:3 with lines title 'psi'\n"
        ),
        "tail" => format!(
            "set datafile separator ','\n\
             set xlabel 'xi'\nset ylabel 'log10 distance to limit'\n\
             set logscale y 10\nset key left\n\
             # reference slope: adjust 'rate' to the predicted eigenvalue\n\
             rate = 1.0\n\
             plot '{data}' using 1:(abs($2)) with lines title 'phi tail', \\\n     \
             exp(rate*x) with lines dashtype 2 title 'predicted slope'\n"
        ),
        "sandwich" => format!(
            "set datafile separator ','\n\
             set xlabel 't'\nset ylabel 'worst margin'\nset key left\n\
             plot '{data}' using 1:2 with lines title 'margin'\n"
        ),
        other => {
            return Err(LvError::Config(format!(
                "unknown plot kind {other}; use front, tail, or sandwich"
            )))
        }
    };
    let path = out_dir.join(format!("plot_{kind}.gp"));
    write_atomic(&path, &body)?;
    Ok(path)
}
