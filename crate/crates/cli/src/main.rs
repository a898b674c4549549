use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use aotomo::fields::io::{load, StoredField};
use aotomo::fields::ScalarField;
use aotomo::harness::{stages, ExperimentConfig, SCHEMA_VERSION};
use aotomo::phantom::{presets, Phantom};
use aotomo::segmentation::write_pgm;

#[derive(Parser)]
#[command(name = "aotomo", about = "Acousto-optic tomography pipeline", disable_version_flag = true)]
struct Cli {
    /// Print the program and schema versions.
    #[arg(long)]
    version: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Phantom description files.
    Phantom {
        #[command(subcommand)]
        action: PhantomAction,
    },
    /// Unperturbed optical field and boundary flux.
    Forward(ConfigArg),
    /// Acousto-optic measurements on the cylinder.
    Sinogram(ConfigArg),
    /// Potential from the sinogram.
    RecoverPsi {
        #[command(flatten)]
        config: ConfigArg,
        /// Sinogram CSV; defaults to the one in the output directory.
        #[arg(long)]
        sinogram: Option<PathBuf>,
    },
    /// Inclusion masks from the potential.
    Segment {
        #[command(flatten)]
        config: ConfigArg,
        /// Potential field file; defaults to the one in the output directory.
        #[arg(long)]
        psi: Option<PathBuf>,
    },
    /// Piecewise-constant guess and projected Landweber iteration.
    Reconstruct {
        #[command(flatten)]
        config: ConfigArg,
        /// Do not log the distance to the phantom.
        #[arg(long)]
        no_truth: bool,
    },
    /// Metrics of the stored reconstruction against the phantom.
    Evaluate(ConfigArg),
    /// Every stage in order.
    Run(ConfigArg),
    /// Converts a field file to an image.
    Export {
        /// Write an 8-bit binary PGM.
        #[arg(long)]
        pgm: bool,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
struct ConfigArg {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum PhantomAction {
    /// Writes a reference phantom.
    Gen {
        /// disk, two-disks, ellipse or empty.
        #[arg(long)]
        preset: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(arg: &ConfigArg) -> anyhow::Result<ExperimentConfig> {
    Ok(ExperimentConfig::load(&arg.config)?)
}

fn preset(name: &str) -> anyhow::Result<Phantom> {
    presets::by_name(name).ok_or_else(|| {
        aotomo::Error::validation(format!("unknown preset {name:?}; use disk, two-disks, ellipse or empty")).into()
    })
}

fn export_pgm(input: &Path, out: &Path) -> anyhow::Result<()> {
    if !input.exists() {
        return Err(aotomo::Error::validation(format!("missing input {}", input.display())).into());
    }
    let field = match load(input)? {
        StoredField::Scalar(f) => f,
        StoredField::Vector(v) => {
            let mag = v.x().iter().zip(v.y()).map(|(x, y)| x.hypot(*y)).collect();
            ScalarField::new(v.grid(), mag)?
        }
        StoredField::Trace(_) => {
            return Err(aotomo::Error::validation("boundary traces cannot be exported as images").into())
        }
    };
    let f = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    write_pgm(BufWriter::new(f), &field)?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if cli.version {
        println!("aotomo {} (schema {SCHEMA_VERSION})", env!("CARGO_PKG_VERSION"));
        return Ok(());
    }
    let Some(command) = cli.command else {
        bail!(aotomo::Error::validation("no command given; see --help"));
    };
    match command {
        Command::Phantom {
            action: PhantomAction::Gen { preset: name, out },
        } => {
            preset(&name)?.save(&out)?;
            println!("wrote {}", out.display());
        }
        Command::Forward(c) => {
            let cfg = load_config(&c)?;
            let out = stages::forward(&cfg)?;
            println!(
                "phi in [{:.6e}, {:.6e}], flux L2 norm {:.6e}",
                out.phi.min(),
                out.phi.max(),
                out.flux.norm_l2()
            );
        }
        Command::Sinogram(c) => {
            let cfg = load_config(&c)?;
            let s = stages::sinogram(&cfg)?;
            println!("{} x {} cells, max |M| {:.6e}", s.ny(), s.nr(), s.max_abs());
        }
        Command::RecoverPsi { config, sinogram } => {
            let cfg = load_config(&config)?;
            let (psi, report) = stages::recover_psi(&cfg, sinogram.as_deref())?;
            println!(
                "psi in [{:.6e}, {:.6e}] after {} iterations (relative residual {:.3e})",
                psi.psi.min(),
                psi.psi.max(),
                report.iterations,
                report.relative_residual
            );
        }
        Command::Segment { config, psi } => {
            let cfg = load_config(&config)?;
            let out = stages::segment(&cfg, psi.as_deref())?;
            println!("{} inclusion(s), threshold {:.4e}", out.masks.len(), out.threshold);
            for e in &out.clip_events {
                println!("mask {} clipped to D: {} node(s) removed", e.label, e.removed_nodes);
            }
        }
        Command::Reconstruct { config, no_truth } => {
            let cfg = load_config(&config)?;
            let rec = stages::reconstruct(&cfg, !no_truth)?;
            let last = rec.state.log.last().map_or(f64::NAN, |e| e.residual);
            println!(
                "guess {:?}, {} iteration(s), stop {:?}, final residual {last:.4e}",
                rec.guess.alpha,
                rec.state.log.len().saturating_sub(1),
                rec.state.stop
            );
        }
        Command::Evaluate(c) => {
            let cfg = load_config(&c)?;
            let m = stages::evaluate(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&m)?);
        }
        Command::Run(c) => {
            let cfg = load_config(&c)?;
            let m = stages::run(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&m)?);
        }
        Command::Export { pgm, input, out } => {
            if !pgm {
                bail!(aotomo::Error::validation("choose an export format, e.g. --pgm"));
            }
            export_pgm(&input, &out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<aotomo::Error>() {
        Some(e) if e.is_numerical() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
