use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wavecip::domain::FrequencySample;
use wavecip_cli::cache::CacheOutcome;
use wavecip_cli::commands::ReconstructOptions;
use wavecip_cli::config::parse_freq;
use wavecip_cli::{cmd_control, cmd_forward, cmd_reconstruct, cmd_validate, CliError, Overrides, Scenario};

/// Coefficient identification for the wave equation from partial boundary data.
#[derive(Parser, Debug)]
#[command(name = "wavecip", version)]
struct Cli {
    /// Scenario file (TOML); the built-in default scenario when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; defaults to runs/<run_id>.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Parallel frequency workers.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Keep sample rows already present in the output directory.
    #[arg(long, global = true)]
    resume: bool,
    /// Use the bare constant 2 in the inversion sum instead of 1/π².
    #[arg(long, global = true)]
    paper_constant: bool,
    /// Functional scaling: `linearized` (default) or `literal`.
    #[arg(long, global = true)]
    scaling: Option<String>,
    /// Functional feeding the estimate: `theta` (default) or `g`.
    #[arg(long, global = true)]
    form: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize Λ_α, Λ₀ and their difference on Γ for one frequency.
    Forward {
        /// Frequency `ηx,ηy`; entries may be written as multiples of π, e.g. `2pi,0`.
        #[arg(long, allow_hyphen_values = true)]
        eta: Option<String>,
        /// Perturbation size; the scenario value when omitted.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Solve (or load from the cache) the null control for one frequency.
    Control {
        #[arg(long, allow_hyphen_values = true)]
        eta: Option<String>,
    },
    /// Run the pipeline over the frequency lattice and invert.
    Reconstruct,
    /// Identity, rate and cross-method checks.
    Validate,
}

fn parse_eta(text: &str) -> Result<FrequencySample<f64>, CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    let bad = || CliError::Config(format!("--eta: expected `ηx,ηy`, got `{text}`"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let x = parse_freq(parts[0]).ok_or_else(bad)?;
    let y = parse_freq(parts[1]).ok_or_else(bad)?;
    FrequencySample::new([x, y]).map_err(|e| CliError::Config(format!("--eta: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let overrides = Overrides {
        paper_constant: cli.paper_constant,
        scaling: cli.scaling.clone(),
        form: cli.form.clone(),
    };
    let s = Scenario::load(cli.config.as_deref(), cli.out.clone(), &overrides)?;
    let eta_or_probe = |e: &Option<String>| match e {
        Some(t) => parse_eta(t),
        None => Ok(s.probe),
    };
    if !s.geometric_control_presumed() {
        eprintln!(
            "warning: geometric control condition presumed violated for Γ = {:?}, T = {}; control certification expected to fail",
            s.config.boundary.sides,
            s.grid.t_final()
        );
    }
    match &cli.command {
        Command::Forward { eta, alpha } => {
            let r = cmd_forward(&s, &eta_or_probe(eta)?, *alpha)?;
            println!(
                "forward η = ({:.6}, {:.6}), α = {}: sup |Λ_α − Λ₀| = {:.6e}",
                r.eta[0], r.eta[1], r.alpha, r.difference_sup
            );
            println!("wrote {}", r.dir.display());
        }
        Command::Control { eta } => {
            let r = cmd_control(&s, &eta_or_probe(eta)?)?;
            let cache = match &r.outcome {
                CacheOutcome::Hit => "cache hit".to_string(),
                CacheOutcome::Miss => "solved".to_string(),
                CacheOutcome::Replaced(why) => format!("re-solved, cache entry replaced ({why})"),
            };
            println!(
                "control {}: {}, E(T)/E(0) = {:.4e}, {} iterations [{cache}]",
                r.key,
                if r.control.certified { "certified" } else { "NOT certified" },
                r.control.residual_energy,
                r.control.iterations
            );
            println!("wrote {}", r.dir.display());
        }
        Command::Reconstruct => {
            let opts = ReconstructOptions {
                resume: cli.resume,
                jobs: cli.jobs,
            };
            let r = cmd_reconstruct(&s, &opts)?;
            let m = &r.metrics;
            println!(
                "{} frequencies computed, {} reused, {} control cache hits",
                r.computed, r.reused, r.cache_hits
            );
            match m.rel_l2_band_limited {
                Some(e) => println!("relative L² error vs band-limited reference: {e:.4}"),
                None => println!("band-limited reference unavailable for this lattice"),
            }
            println!(
                "relative L² error vs c1: {:.4}; imaginary residue {:.4}; Hermitian residue {:.4}",
                m.rel_l2_truth, m.imag_residue, m.hermitian_residue
            );
            if !m.excluded.is_empty() {
                println!("excluded {} of {} frequencies", m.excluded.len(), m.lattice_len);
            }
            println!("wrote {}", r.dir.display());
        }
        Command::Validate => {
            let r = cmd_validate(&s)?;
            print!("{}", r.table());
            if !r.passed() {
                let n = r.checks.iter().filter(|c| !c.pass).count();
                return Err(CliError::Validation(format!("{n} of {} checks failed", r.checks.len())));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
