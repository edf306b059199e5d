use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use kpp_core::asymptotics::main_expansion;
use kpp_core::harness::acceptance::Suite;
use kpp_core::harness::config::{FitSpec, RunConfig};
use kpp_core::harness::output::format_num;
use kpp_core::harness::{run, Report};
use kpp_core::model::Nonlinearity;
use kpp_core::wave::solve_wave;

#[derive(Parser)]
#[command(name = "kpp", version, about = "Fisher-KPP front laboratory")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output root; overrides `out_dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Critical travelling wave samples and tail coefficients.
    Wave {
        /// Exponent p of F(h) = h^(1+p); 1 is F = h².
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 60.0)]
        z_max: f64,
        #[arg(long, default_value_t = 0.01)]
        dz: f64,
        /// Keep every n-th sample.
        #[arg(long, default_value_t = 10)]
        stride: usize,
    },
    /// Run the configured evolution and write all tables.
    Evolve,
    /// Φ(c) by every configured route.
    Phi,
    /// Fit of the front position expansion.
    MuFit,
    /// Both sides of the magical relation on the configured ε grid.
    MagicCheck,
    /// Small-ε expansion of Φ(2+ε) for given tail coefficients.
    Expand {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.4, 0.2, 0.1, 0.05])]
        eps: Vec<f64>,
    },
    /// Feynman-Kac Monte Carlo estimate of Φ(c).
    FkMc,
    /// The acceptance suite; exits non-zero on an unexpected failure.
    Accept,
}

fn load(g: &Global) -> Result<RunConfig> {
    let path = g.config.as_ref().context("this subcommand needs --config PATH")?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(o) = &g.out {
        cfg.out_dir = o.clone();
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_table(path: &Path) -> Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    print!("{text}");
    Ok(())
}

fn print_named(rep: &Report, name: &str) -> Result<()> {
    match rep.table(name) {
        Some(p) => print_table(p),
        None => bail!("run produced no {name} table; notes: {}", rep.notes.join("; ")),
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let g = &cli.global;
    match cli.cmd {
        Cmd::Wave { p, z_max, dz, stride } => {
            let nl = if p == 1.0 { Nonlinearity::Quadratic } else { Nonlinearity::power(p)? };
            let w = solve_wave(&nl, z_max, dz)?;
            println!("# alpha_tilde: {}", format_num(w.alpha_t));
            println!("# beta_tilde: {}", format_num(w.beta_t));
            println!("# ode_residual: {}", format_num(w.ode_residual()));
            println!("zeta,omega");
            for k in (0..w.omega.len()).step_by(stride.max(1)) {
                println!("{},{}", format_num(w.z(k)), format_num(w.omega[k]));
            }
        }
        Cmd::Evolve => {
            let rep = run(&load(g)?)?;
            print!("{}", rep.render());
        }
        Cmd::Phi => print_named(&run(&load(g)?)?, "phi_routes")?,
        Cmd::MuFit => {
            let mut cfg = load(g)?;
            cfg.fit.get_or_insert_with(FitSpec::default);
            cfg.validate()?;
            let rep = run(&cfg)?;
            let path = rep.table("mu_fit").context(rep.notes.join("; "))?;
            let text = fs::read_to_string(path)?;
            println!("coefficient,value,ci95_low,ci95_high");
            for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
                let f: Vec<&str> = line.split(',').collect();
                let (v, se): (f64, f64) = (f[1].parse()?, f[2].parse()?);
                println!("{},{},{},{}", f[0], format_num(v), format_num(v - 1.96 * se), format_num(v + 1.96 * se));
            }
        }
        Cmd::MagicCheck => print_named(&run(&load(g)?)?, "magic_check")?,
        Cmd::Expand { alpha, beta, eps } => {
            println!("eps,phi");
            for e in eps {
                println!("{},{}", format_num(e), format_num(main_expansion(e, alpha, beta)?));
            }
        }
        Cmd::FkMc => {
            let mut cfg = load(g)?;
            cfg.fk.enabled = true;
            let rep = run(&cfg)?;
            let path = rep.table("phi_routes").context("no phi_routes table")?;
            let text = fs::read_to_string(path)?;
            println!("c,route,value,uncertainty,flags");
            for line in text.lines().filter(|l| l.contains(",feynman_kac,")) {
                println!("{line}");
            }
        }
        Cmd::Accept => {
            let dir = g.out.clone().unwrap_or_else(|| PathBuf::from("out")).join("acceptance");
            let suite = Suite::new();
            let mut rep = Report::new("acceptance", dir);
            let mut unexpected = Vec::new();
            for k in 1..=9u8 {
                match suite.criterion(k) {
                    Ok(o) => {
                        println!("{}", o.row.line());
                        unexpected.extend(o.unexpected_failures());
                        rep.rows.push(o.row);
                    }
                    Err(e) => {
                        println!("[FAIL] criterion {k}: could not be evaluated: {e}");
                        unexpected.push(k.to_string());
                    }
                }
            }
            let p = rep.write()?;
            eprintln!("report: {}", p.display());
            if !unexpected.is_empty() {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
