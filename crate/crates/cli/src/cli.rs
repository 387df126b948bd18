//! Argument parsing and dispatch for the `aniso` binary.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bench::{cmd_bench, Suite};
use crate::commands::{
    cmd_analyze, cmd_mask, cmd_register, cmd_rotate, cmd_synth, registration_report, SynthKind,
};
use crate::config::{read_config_file, RunConfig};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "aniso",
    version,
    about = "Angular power profiles, orientation estimation and angular registration"
)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

/// Settings shared by all subcommands. Unset flags fall back to the config
/// file, then to built-in defaults.
#[derive(Debug, Args)]
struct Common {
    /// Flat key=value configuration file
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// cake, ridge, binning, a comma list, or all
    #[arg(long, global = true)]
    method: Option<String>,
    /// Number of analysis angles M
    #[arg(long, global = true, value_name = "M")]
    angles: Option<String>,
    /// disk-hann or none
    #[arg(long, global = true)]
    window: Option<String>,
    /// Window support radius as a fraction of min(H, W) / 2
    #[arg(long, global = true)]
    window_radius: Option<String>,
    /// Sub-grid parabolic refinement: on or off
    #[arg(long, global = true)]
    refine: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Number of generated images
    #[arg(long, global = true)]
    n: Option<String>,
    /// Rotations per equivariance measurement
    #[arg(long, global = true)]
    trials: Option<String>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<String>,
    #[arg(long, global = true)]
    cake_exponent: Option<String>,
    #[arg(long, global = true)]
    band_lo: Option<String>,
    #[arg(long, global = true)]
    band_hi: Option<String>,
    #[arg(long, global = true)]
    ridge_sigma: Option<String>,
    /// Side length of generated square images
    #[arg(long, global = true)]
    size: Option<String>,
}

#[derive(Debug, Args)]
struct GeneratorArgs {
    #[arg(long)]
    atoms: Option<String>,
    /// Center of the atom orientation distribution (degrees)
    #[arg(long)]
    mu: Option<String>,
    /// Concentration of the atom orientation distribution
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    scale_lo: Option<String>,
    #[arg(long)]
    scale_hi: Option<String>,
    #[arg(long)]
    center_fraction: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic images with ground truth
    Synth {
        /// gabor, oscillation or isotropic
        #[arg(long)]
        kind: String,
        #[command(flatten)]
        generator: GeneratorArgs,
        /// Grating angle (degrees)
        #[arg(long)]
        angle: Option<String>,
        /// Grating wavelength (pixels)
        #[arg(long)]
        wavelength: Option<String>,
        /// anim or png
        #[arg(long)]
        format: Option<String>,
    },
    /// Angular profiles, orientation estimates and a plot for one image
    Analyze { image: PathBuf },
    /// Estimate the rotation taking the first image to the second
    Register { first: PathBuf, second: PathBuf },
    /// Run a benchmark suite
    Bench {
        /// table1 or register
        #[arg(long)]
        suite: String,
        /// Image pair for the register suite
        #[arg(long, num_args = 2, value_names = ["FIRST", "SECOND"])]
        pair: Option<Vec<PathBuf>>,
        /// Comma-separated concentrations for table1
        #[arg(long)]
        sigmas: Option<String>,
        #[command(flatten)]
        generator: GeneratorArgs,
        /// Rotation of the synthetic register pair (degrees)
        #[arg(long)]
        angle: Option<String>,
    },
    /// Rotate an image counter-clockwise with bilinear interpolation
    Rotate {
        image: PathBuf,
        /// Angle in [0, 360) degrees
        #[arg(long, allow_negative_numbers = true)]
        angle: f64,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Write one filter-bank mask (or a rasterized line) as an image
    Mask {
        /// Analysis angle index
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Draw the Bresenham line at this angle instead of a bank mask
        #[arg(long)]
        line_angle: Option<f64>,
        #[arg(long, short)]
        output: PathBuf,
    },
}

fn put(map: &mut BTreeMap<String, String>, key: &str, value: &Option<String>) {
    if let Some(v) = value {
        map.insert(key.to_string(), v.clone());
    }
}

fn put_generator(map: &mut BTreeMap<String, String>, g: &GeneratorArgs) {
    put(map, "atoms", &g.atoms);
    put(map, "mu", &g.mu);
    put(map, "sigma", &g.sigma);
    put(map, "scale_lo", &g.scale_lo);
    put(map, "scale_hi", &g.scale_hi);
    put(map, "center_fraction", &g.center_fraction);
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut map = match &cli.common.config {
        Some(path) => read_config_file(path)?,
        None => BTreeMap::new(),
    };
    let c = &cli.common;
    for (key, value) in [
        ("method", &c.method),
        ("angles", &c.angles),
        ("window", &c.window),
        ("window_radius", &c.window_radius),
        ("refine", &c.refine),
        ("seed", &c.seed),
        ("n", &c.n),
        ("trials", &c.trials),
        ("out", &c.out),
        ("cake_exponent", &c.cake_exponent),
        ("band_lo", &c.band_lo),
        ("band_hi", &c.band_hi),
        ("ridge_sigma", &c.ridge_sigma),
        ("size", &c.size),
    ] {
        put(&mut map, key, value);
    }
    match &cli.command {
        Command::Synth {
            generator,
            angle,
            wavelength,
            format,
            ..
        } => {
            put_generator(&mut map, generator);
            put(&mut map, "angle", angle);
            put(&mut map, "wavelength", wavelength);
            put(&mut map, "format", format);
        }
        Command::Bench {
            sigmas,
            generator,
            angle,
            ..
        } => {
            put_generator(&mut map, generator);
            put(&mut map, "sigmas", sigmas);
            put(&mut map, "angle", angle);
        }
        _ => {}
    }
    RunConfig::from_pairs(&map)
}

fn execute(cli: Cli) -> Result<()> {
    let config = resolve_config(&cli)?;
    // a closed pipe on stdout is not an error worth reporting
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Synth { kind, .. } => {
            let kind: SynthKind = kind.parse()?;
            for path in cmd_synth(&config, kind)? {
                let _ = writeln!(stdout, "{}", path.display());
            }
        }
        Command::Analyze { image } => {
            let out = cmd_analyze(&config, &image)?;
            let _ = write!(stdout, "{}", out.record);
            for path in out.files {
                let _ = writeln!(stdout, "wrote={}", path.display());
            }
        }
        Command::Register { first, second } => {
            let results = cmd_register(&config, &first, &second)?;
            let _ = write!(stdout, "{}", registration_report(&results));
            for (_, r) in &results {
                for w in &r.warnings {
                    eprintln!("warning: {w}");
                }
            }
        }
        Command::Bench { suite, pair, .. } => {
            let suite: Suite = suite.parse()?;
            let pair = pair.as_ref().map(|p| (p[0].as_path(), p[1].as_path()));
            if pair.is_some() && suite != Suite::Register {
                return Err(CliError::Config("--pair only applies to --suite register".into()));
            }
            for path in cmd_bench(&config, suite, pair)? {
                let _ = writeln!(stdout, "{}", path.display());
            }
        }
        Command::Rotate {
            image,
            angle,
            output,
        } => cmd_rotate(&image, angle, &output)?,
        Command::Mask {
            index,
            line_angle,
            output,
        } => cmd_mask(&config, index, line_angle, &output)?,
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
