//! Subcommand implementations. Each returns the paths it wrote (or a record)
//! so callers and tests can inspect results without parsing stdout.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use aniso_core::filterbank::rasterized_line_mask;
use aniso_core::io::{read_image, write_image};
use aniso_core::profile::{angular_profile, normalize, principal_orientation};
use aniso_core::synth::{gen_gabor_image, gen_isotropic, gen_oriented_oscillation, GroundTruth};
use aniso_core::{
    periodogram, rotate_bilinear, AngularProfile, FilterBank, Image, Method, Registrar,
    RegistrationResult,
};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::svg::profile_plot;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    Gabor,
    Oscillation,
    Isotropic,
}

impl std::str::FromStr for SynthKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gabor" => Ok(SynthKind::Gabor),
            "oscillation" | "grating" => Ok(SynthKind::Oscillation),
            "isotropic" => Ok(SynthKind::Isotropic),
            other => Err(CliError::Config(format!(
                "kind: expected gabor, oscillation or isotropic, got '{other}'"
            ))),
        }
    }
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_generated(
    config: &RunConfig,
    stem: &str,
    image: &Image,
    truth: &GroundTruth,
) -> Result<Vec<PathBuf>> {
    let image_path = config
        .out
        .join(format!("{stem}.{}", config.format.extension()));
    write_image(&image_path, image)?;
    let truth_path = config.out.join(format!("{stem}.truth.txt"));
    write_text(&truth_path, &truth.to_record())?;
    let reference_path = config.out.join(format!("{stem}.reference.csv"));
    truth
        .reference_profile(config.num_angles)?
        .write_csv(&reference_path)?;
    Ok(vec![image_path, truth_path, reference_path])
}

/// Writes generated images with their ground-truth record and reference
/// profile. Gabor and isotropic images use seeds `seed .. seed + n`.
pub fn cmd_synth(config: &RunConfig, kind: SynthKind) -> Result<Vec<PathBuf>> {
    ensure_dir(&config.out)?;
    let size = config.size;
    let generated: Vec<(String, Image, GroundTruth)> = match kind {
        SynthKind::Oscillation => {
            let (img, truth) = gen_oriented_oscillation(config.angle, config.wavelength, size, size)?;
            vec![(format!("oscillation_{}", config.angle), img, truth)]
        }
        SynthKind::Gabor | SynthKind::Isotropic => (0..config.n as u64)
            .into_par_iter()
            .map(|i| {
                let seed = config.seed + i;
                let (img, truth) = if kind == SynthKind::Gabor {
                    gen_gabor_image(&config.gabor_spec(config.sigma, seed))?
                } else {
                    gen_isotropic(size, size, seed)?
                };
                let name = if kind == SynthKind::Gabor { "gabor" } else { "isotropic" };
                Ok((format!("{name}_{seed:04}"), img, truth))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let mut paths = Vec::new();
    for (stem, img, truth) in &generated {
        paths.extend(write_generated(config, stem, img, truth)?);
    }
    Ok(paths)
}

#[derive(Debug, Clone)]
pub struct MethodAnalysis {
    pub method: Method,
    pub profile: AngularProfile,
    pub eta: f64,
    pub peak_to_mean: f64,
}

#[derive(Debug, Clone)]
pub struct AnalyzeOutput {
    pub analyses: Vec<MethodAnalysis>,
    pub files: Vec<PathBuf>,
    pub record: String,
}

pub(crate) fn build_banks(config: &RunConfig, height: usize, width: usize) -> Result<Vec<FilterBank>> {
    config
        .methods
        .par_iter()
        .map(|&m| Ok(FilterBank::new(m, height, width, config.num_angles, &config.filter)?))
        .collect()
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("image")
        .to_string()
}

/// Normalized profile CSV per method, an SVG overlay of all profiles and a
/// `key=value` record with the orientation estimates.
pub fn cmd_analyze(config: &RunConfig, input: &Path) -> Result<AnalyzeOutput> {
    let image = read_image(input)?;
    let psd = periodogram(&image, &config.window);
    let banks = build_banks(config, image.height(), image.width())?;
    let analyses = banks
        .iter()
        .map(|bank| {
            let profile = normalize(&angular_profile(&psd, bank)?)?;
            let est = principal_orientation(&profile, config.refine)?;
            Ok(MethodAnalysis {
                method: bank.method(),
                peak_to_mean: profile.peak_to_mean(),
                profile,
                eta: est.eta,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    ensure_dir(&config.out)?;
    let stem = stem_of(input);
    let mut files = Vec::new();
    let mut record = String::new();
    let _ = writeln!(record, "image={}", input.display());
    let _ = writeln!(record, "width={}\nheight={}", image.width(), image.height());
    let _ = writeln!(record, "config={}", config.describe());
    for a in &analyses {
        let path = config.out.join(format!("{stem}_{}.csv", a.method));
        a.profile.write_csv(&path)?;
        files.push(path);
        let _ = writeln!(record, "{}.eta_deg={:.16e}", a.method, a.eta);
        let _ = writeln!(record, "{}.peak_to_mean={:.16e}", a.method, a.peak_to_mean);
    }
    let series: Vec<(String, AngularProfile)> = analyses
        .iter()
        .map(|a| (a.method.name().to_string(), a.profile.clone()))
        .collect();
    let svg_path = config.out.join(format!("{stem}_profiles.svg"));
    write_text(&svg_path, &profile_plot(&format!("angular profile: {stem}"), &series))?;
    files.push(svg_path);
    let record_path = config.out.join(format!("{stem}_analysis.txt"));
    write_text(&record_path, &record)?;
    files.push(record_path);
    Ok(AnalyzeOutput {
        analyses,
        files,
        record,
    })
}

/// Registers `second` against `first` with every configured method.
pub fn cmd_register(
    config: &RunConfig,
    first: &Path,
    second: &Path,
) -> Result<Vec<(Method, RegistrationResult)>> {
    let x1 = read_image(first)?;
    let x2 = read_image(second)?;
    let banks = build_banks(config, x1.height(), x1.width())?;
    banks
        .into_par_iter()
        .map(|bank| {
            let method = bank.method();
            let r = Registrar::new(bank, config.window)
                .with_refine(config.refine)
                .register(&x1, &x2)?;
            Ok((method, r))
        })
        .collect()
}

/// Text form of [`cmd_register`] results: one `key=value` block per method.
pub fn registration_report(results: &[(Method, RegistrationResult)]) -> String {
    let blocks: Vec<String> = results
        .iter()
        .map(|(m, r)| format!("method={m}\n{}", r.to_record()))
        .collect();
    blocks.join("\n")
}

pub fn cmd_rotate(input: &Path, angle: f64, output: &Path) -> Result<()> {
    let image = read_image(input)?;
    let rotated = rotate_bilinear(&image, angle)?;
    write_image(output, &rotated)?;
    Ok(())
}

/// Writes the mask of analysis angle `index` for the first configured
/// method, or with `line_angle` the rasterized line through the origin.
pub fn cmd_mask(
    config: &RunConfig,
    index: usize,
    line_angle: Option<f64>,
    output: &Path,
) -> Result<()> {
    let n = config.size;
    let image = match line_angle {
        Some(angle) => Image::new(n, n, rasterized_line_mask(n, n, angle))?,
        None => {
            if index >= config.num_angles {
                return Err(CliError::Config(format!(
                    "index must be below {}, got {index}",
                    config.num_angles
                )));
            }
            FilterBank::new(config.methods[0], n, n, config.num_angles, &config.filter)?
                .mask_image(index)?
        }
    };
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    write_image(output, &image)?;
    Ok(())
}
