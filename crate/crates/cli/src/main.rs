//! `peakonlab`: run, verify and sweep peakon-train experiments from TOML configs.
//!
//! Exit codes: 0 success, 1 a check failed, 2 bad config or scenario, 3 runtime failure
//! (collision, modulation did not converge, I/O).

mod config;
mod svg;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use peakonlab::functionals::WeightProfile;
use peakonlab::harness::{
    evaluate_checks_with, read_json, run_experiment_from, sweep, write_csv, write_json,
    write_summary_csv, Check, Report, Tolerances,
};
use serde::Serialize;

use config::{Config, ConfigError, Overrides};

#[derive(Parser)]
#[command(name = "peakonlab", version, about = "Antipeakon-peakon train experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one scenario and write its report, checks, manifest and plots.
    Simulate(RunArgs),
    /// Recompute the checks of a stored report.
    Verify(VerifyArgs),
    /// Run the epsilon x spacing grid and fit the orbital constant.
    Sweep(RunArgs),
    /// Check the weight profile constraints.
    PsiCheck(PsiArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory [default: $PEAKONLAB_OUT, else ./peakonlab-out]
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Comma-separated criteria, e.g. `conservation,orbital`.
    #[arg(long, value_delimiter = ',')]
    criteria: Option<Vec<String>>,
    /// Worker threads for sweeps.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    /// `report.json` written by `simulate`.
    report: PathBuf,
    #[arg(long, value_delimiter = ',')]
    criteria: Option<Vec<String>>,
    /// Config whose `[tolerances]` replace the frozen constants.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct PsiArgs {
    /// Reverse the bridge slope.
    #[arg(long, hide = true)]
    flip_bridge: bool,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    config_path: &'a Path,
    /// Resolved config after flags; `config.toml` beside the manifest holds the same.
    config: &'a Config,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Verify(a) => verify(&a),
        Command::Sweep(a) => run_sweep(&a),
        Command::PsiCheck(a) => psi_check(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<peakonlab::Error>() {
        Some(err) if err.is_scenario_error() => 2,
        Some(peakonlab::Error::Report(_)) => 2,
        _ => 3,
    }
}

fn overrides(a: &RunArgs) -> Overrides {
    Overrides {
        out: a.out.clone(),
        seed: a.seed,
        t_end: a.t_end,
        criteria: a.criteria.clone(),
        jobs: a.jobs,
    }
}

/// Loads the config, applies the flags and re-validates the scenario.
fn resolve(a: &RunArgs) -> Result<Config> {
    let mut cfg = Config::load(&a.config)?;
    cfg.apply(&overrides(a));
    cfg.scenario.validate()?;
    Ok(cfg)
}

fn prepare_out(cfg: &Config, command: &str, config_path: &Path) -> Result<PathBuf> {
    let out = cfg.out_dir();
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let echo = cfg.to_toml()?;
    fs::write(out.join("config.toml"), echo)?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed: cfg.scenario.seed,
        config_path,
        config: cfg,
    };
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(out)
}

fn print_checks(checks: &[Check]) -> bool {
    let mut stdout = std::io::stdout().lock();
    for c in checks {
        let _ = writeln!(
            stdout,
            "{:<28} {} value={:.6e} bound={:.6e} margin={:+.6e}",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.value,
            c.bound,
            c.margin()
        );
    }
    checks.iter().all(|c| c.passed)
}

fn simulate(a: &RunArgs) -> Result<u8> {
    let cfg = resolve(a)?;
    let initial = cfg.initial()?;
    let out = prepare_out(&cfg, "simulate", &a.config)?;
    let report = run_experiment_from(&cfg.scenario, initial)?;
    write_csv(&report, &out.join("report.csv"))?;
    write_json(&report, &out.join("report.json"))?;
    if cfg.plots {
        write_plots(&report, &out)?;
    }
    let checks = evaluate_checks_with(&report, &cfg.criteria, &cfg.tolerances)?;
    fs::write(out.join("checks.json"), serde_json::to_string_pretty(&checks)?)?;
    let all = print_checks(&checks);
    eprintln!(
        "{} samples written to {} ({})",
        report.times.len(),
        out.display(),
        if all { "all checks pass" } else { "some checks fail" }
    );
    Ok(0)
}

fn verify(a: &VerifyArgs) -> Result<u8> {
    let report = read_json(&a.report)?;
    let tol = match &a.config {
        Some(p) => Config::load(p)?.tolerances,
        None => Tolerances::default(),
    };
    let criteria = a.criteria.clone().unwrap_or_default();
    let checks = match evaluate_checks_with(&report, &criteria, &tol) {
        Err(e @ peakonlab::Error::NotSettled { .. }) => {
            println!("asymptotic                    FAIL {e}");
            return Ok(1);
        }
        other => other?,
    };
    Ok(if print_checks(&checks) { 0 } else { 1 })
}

fn run_sweep(a: &RunArgs) -> Result<u8> {
    let cfg = resolve(a)?;
    let out = prepare_out(&cfg, "sweep", &a.config)?;
    let axes = &cfg.sweep;
    let summary = sweep(&cfg.scenario, &axes.epsilon, &axes.spacing, axes.jobs)?;
    write_summary_csv(&summary, &out.join("sweep.csv"))?;
    fs::write(out.join("sweep.json"), serde_json::to_string_pretty(&summary)?)?;
    for c in &summary.cells {
        match &c.error {
            Some(e) => println!("eps={:.1e} L={:<6} ERROR {e}", c.eps, c.spacing),
            None => println!(
                "eps={:.1e} L={:<6} {} sup_dist={:.3e} bound={:.3e}",
                c.eps,
                c.spacing,
                if c.passed { "PASS" } else { "FAIL" },
                c.sup_dist,
                c.bound
            ),
        }
    }
    println!("fitted A = {:.6e}", summary.fitted_a);
    println!("fitted drift C = {:.6e}", summary.fitted_drift_c);
    Ok(if summary.cells.iter().any(|c| c.error.is_some()) {
        3
    } else if summary.all_passed() {
        0
    } else {
        1
    })
}

fn psi_check(a: &PsiArgs) -> Result<u8> {
    let profile = if a.flip_bridge {
        WeightProfile::with_flipped_bridge()
    } else {
        WeightProfile::new()
    };
    let c = profile.check();
    let flag = |ok: bool| if ok { "ok" } else { "FAIL" };
    println!("min psi                {:.6e}", c.min_psi);
    println!("max psi                {:.6e}  {}", c.max_psi, flag(c.bounded()));
    println!("min psi'               {:.6e}  {}", c.min_psi_prime, flag(c.increasing()));
    println!(
        "max |psi'''|/|psi'|    {:.6}  (bound {})  {}",
        c.max_ratio,
        peakonlab::functionals::RATIO_BOUND,
        flag(c.ratio_ok())
    );
    println!("C2 mismatch at +-1     {:.3e}  {}", c.c2_mismatch, flag(c.smooth()));
    println!("tail mismatch          {:.3e}", c.tail_mismatch);
    Ok(if c.all() { 0 } else { 1 })
}

fn write_plots(r: &Report, out: &Path) -> Result<()> {
    let dist = svg::Series {
        label: "dist H1".into(),
        points: r.times.iter().copied().zip(r.dist_h1.iter().copied()).collect(),
    };
    fs::write(
        out.join("distance.svg"),
        svg::line_chart("distance to the tracked train", "t", "H1 distance", &[dist]),
    )?;

    let deltas = r.monotonicity_deltas();
    let k = r.scenario.k();
    let mut series = Vec::new();
    if let Some(first) = deltas.first() {
        for (row, lams) in first.iter().enumerate() {
            for l in 0..lams.len() {
                series.push(svg::Series {
                    label: format!("I j={} lam={:.3}", k + 1 + row, r.lambdas[l]),
                    points: r.times.iter().zip(&deltas).map(|(t, d)| (*t, d[row][l])).collect(),
                });
            }
        }
    }
    if let Some(i0) = r.functionals[0].itilde {
        series.push(svg::Series {
            label: format!("Itilde j={k}"),
            points: r
                .times
                .iter()
                .zip(&r.functionals)
                .map(|(t, s)| (*t, s.itilde.unwrap_or(f64::NAN) - i0))
                .collect(),
        });
    }
    fs::write(
        out.join("monotonicity.svg"),
        svg::line_chart("I(t) - I(0)", "t", "delta", &series),
    )?;
    Ok(())
}
