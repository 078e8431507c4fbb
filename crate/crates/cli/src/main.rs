use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nonlocal_core::cantor::{audit_cantor, build_cantor_model};
use nonlocal_core::harness::config::parse_phi;
use nonlocal_core::harness::presets::run_cross;
use nonlocal_core::harness::report::{summarize_rows, summary_text};
use nonlocal_core::harness::{
    audit_mollifier, audit_space, emit_report, load_config, preset, preset_names, read_series_csv, run_preset,
    run_sweep, Config, Overrides, PresetOutcome,
};
use nonlocal_core::phi::audit_phi;
use nonlocal_core::space::{audit_ahlfors, audit_doubling, audit_upper_mass_bound, nested_pairs, SpaceKind};
use nonlocal_core::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_BOUND: u8 = 2;
const EXIT_RESOLUTION: u8 = 3;

#[derive(Parser)]
#[command(name = "nonlocal-lab", version, about = "Sweeps and audits of nonlocal approximations of total variation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Scenario config file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in scenario preset.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory for reports.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads per evaluation.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Override the grid size (cells per side).
    #[arg(long, global = true)]
    grid: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Doubling, upper mass bound and Ahlfors constants of the scenario space.
    AuditSpace,
    /// Minorize and dyadic-majorant audits of the scenario kernel.
    AuditMollifier,
    /// Integral condition of the scenario's phi profile.
    AuditPhi,
    /// Evaluate the first point of the sweep.
    Eval,
    /// Run the full sweep and write CSV, summary and gnuplot files.
    Sweep,
    /// Cantor construction identities and the Cantor-versus-tent comparison.
    CantorDemo,
    /// Read a series CSV and print the plateau of each scenario.
    Report {
        /// CSV written by `sweep`.
        csv: PathBuf,
    },
    /// List the built-in presets.
    Presets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Resolution { .. } => EXIT_RESOLUTION,
                _ => EXIT_CONFIG,
            })
        }
    }
}

fn overrides(cli: &Cli) -> Overrides {
    Overrides { workers: cli.workers, grid: cli.grid }
}

/// The configs named on the command line, with overrides applied.
fn configs(cli: &Cli) -> Result<(String, Vec<Config>), Error> {
    let (name, mut cfgs) = match (&cli.config, &cli.preset) {
        (Some(_), Some(_)) => return Err(Error::Config("give either --config or --preset, not both".into())),
        (Some(path), None) => {
            let cfg = load_config(path)?;
            (cfg.scenario.clone(), vec![cfg])
        }
        (None, Some(name)) => {
            let p = preset(name).ok_or_else(|| {
                Error::Config(format!("unknown preset {name:?}; known: {}", preset_names().join(", ")))
            })?;
            (p.name.to_string(), p.configs)
        }
        (None, None) => return Err(Error::Config("need --config or --preset".into())),
    };
    for c in &mut cfgs {
        overrides(cli).apply(c);
        c.validate()?;
    }
    Ok((name, cfgs))
}

fn run(cli: &Cli) -> Result<u8, Error> {
    match &cli.cmd {
        Cmd::Presets => {
            for n in preset_names() {
                let p = preset(n).expect("listed preset");
                println!("{n:<16} {}", p.summary);
            }
            Ok(0)
        }
        Cmd::Report { csv } => {
            let rows = read_series_csv(&std::fs::read_to_string(csv)?)?;
            print!("{}", summarize_rows(&rows, 0.02));
            Ok(0)
        }
        Cmd::AuditSpace => {
            let (_, cfgs) = configs(cli)?;
            for cfg in &cfgs {
                audit_space_cmd(cfg)?;
            }
            Ok(0)
        }
        Cmd::AuditMollifier => {
            let (_, cfgs) = configs(cli)?;
            let mut ok = true;
            for cfg in &cfgs {
                println!("[{}]", cfg.scenario);
                let (checks, notes) = audit_mollifier(cfg)?;
                for n in notes {
                    println!("  {n}");
                }
                for c in &checks {
                    println!("  check {} {} lhs {} rhs {}", c.name, pass(c.pass), c.lhs, c.rhs);
                    ok &= c.pass;
                }
            }
            Ok(if ok { 0 } else { EXIT_BOUND })
        }
        Cmd::AuditPhi => {
            let (_, cfgs) = configs(cli)?;
            for cfg in &cfgs {
                let phi = parse_phi(cfg.functional.phi.as_deref().unwrap_or("step"))?;
                let a = audit_phi(&phi, cfg.functional.p)?;
                println!("[{}] p = {}", cfg.scenario, cfg.functional.p);
                println!("  monotone {} bound {} integral {} C_phi {} feasible {}", a.monotone, a.bound, a.integral, a.c_phi, a.feasible);
            }
            Ok(0)
        }
        Cmd::Eval => {
            let (_, cfgs) = configs(cli)?;
            for cfg in &cfgs {
                let mut one = cfg.clone();
                one.sweep.values.truncate(1);
                if let Some(e) = one.sweep.eps_values.as_mut() {
                    e.truncate(1);
                }
                one.sweep.oracle = None;
                one.sweep.lower_bound = None;
                let o = run_sweep(&one)?;
                let p = &o.series.points[0];
                println!(
                    "[{}] {} = {}: functional {} energy {} ratio {} pairs {}",
                    one.scenario,
                    o.series.axis.name(),
                    p.param,
                    p.functional.value,
                    p.energy.value,
                    p.ratio,
                    p.functional.pair_count
                );
                for c in &o.checks {
                    println!("  check {} {} margin {}", c.name, pass(c.pass), c.margin);
                }
            }
            Ok(0)
        }
        Cmd::Sweep => {
            let (name, cfgs) = configs(cli)?;
            let outcome = match &cli.preset {
                Some(p) if cli.config.is_none() => {
                    run_preset(&preset(p).expect("checked above"), overrides(cli))?
                }
                _ => {
                    let sweeps = cfgs.iter().map(run_sweep).collect::<Result<Vec<_>, _>>()?;
                    run_cross(&name, sweeps, &[])?
                }
            };
            finish(&outcome, &cli.out)
        }
        Cmd::CantorDemo => {
            let p = preset("example-6.1").expect("built-in preset");
            let depth = p.configs[0].space.depth.unwrap_or(10);
            let model = build_cantor_model(depth)?;
            let audit = audit_cantor(&model);
            println!("Cantor construction, depth {depth}");
            for c in &audit.checks {
                println!("  {} {}: {}", pass(c.pass), c.name, c.detail);
            }
            let outcome = run_preset(&p, overrides(cli))?;
            let code = finish(&outcome, &cli.out)?;
            Ok(if audit.all_pass() { code } else { EXIT_BOUND })
        }
    }
}

fn pass(b: bool) -> &'static str {
    if b {
        "PASS"
    } else {
        "FAIL"
    }
}

fn finish(outcome: &PresetOutcome, out: &Path) -> Result<u8, Error> {
    let files = emit_report(outcome, out)?;
    print!("{}", summary_text(outcome));
    println!("wrote {}, {}, {}", files.csv.display(), files.summary.display(), files.gnuplot.display());
    Ok(if outcome.passed() { 0 } else { EXIT_BOUND })
}

fn audit_space_cmd(cfg: &Config) -> Result<(), Error> {
    let space = audit_space(cfg)?;
    let sample = space.default_sample(16);
    let cd = audit_doubling(&space, &sample)?;
    let fit = audit_upper_mass_bound(&space, &nested_pairs(&sample))?;
    let q = match space.kind() {
        SpaceKind::Interval => 1.0,
        SpaceKind::Planar => 2.0,
    };
    let af = audit_ahlfors(&space, q, &sample)?;
    println!("[{}] {} nodes, total mass {}", cfg.scenario, space.len(), space.total_mass());
    println!("  doubling C_d = {cd}");
    println!("  upper mass bound C0 = {} sigma = {} residual = {}", fit.c0, fit.sigma, fit.residual);
    println!("  Ahlfors Q = {q}: C_A = {}", af.c_a);
    if let Some(n) = af.note {
        println!("  note: {n}");
    }
    Ok(())
}
