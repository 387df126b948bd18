//! Benchmark suites: the synthetic orientation/equivariance table and the
//! registration table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use aniso_core::metrics::{
    angular_distance, compare_shifted, profile_distance_db, registration_equivariance_at,
    stratified_angles, von_mises_reference_profile,
};
use aniso_core::profile::{angular_profile, normalize, principal_orientation};
use aniso_core::synth::{gen_gabor_image, seeded_rng};
use aniso_core::{periodogram, rotate_bilinear, Error, FilterBank, Image, MetricReport, Registrar};

use crate::commands::{build_banks, ensure_dir, write_text};
use crate::config::RunConfig;
use crate::error::Result;

pub const ANGULAR_DISTANCE: &str = "angular_distance_deg";
pub const EQUIVARIANCE_DB: &str = "profile_equivariance_db";
pub const REFERENCE_DB: &str = "profile_distance_reference_db";
pub const EQUIVARIANCE_MAX_ABS: &str = "profile_equivariance_max_abs";
pub const REGISTRATION_ERROR: &str = "registration_error_deg";
pub const REGISTRATION_EQUIVARIANCE: &str = "registration_equivariance_deg";

/// Rows of metric reports, one per (method, metric) and parameter set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchTable {
    pub title: String,
    pub rows: Vec<MetricReport>,
}

impl BenchTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", MetricReport::CSV_HEADER);
        for r in &self.rows {
            out.push_str(&r.to_csv_row());
            out.push('\n');
        }
        out
    }

    /// Aligned plain-text rendering with `mean ± std` columns.
    pub fn to_text(&self) -> String {
        let header = ["method", "metric", "mean ± std", "n", "failed", "params"];
        let cells: Vec<[String; 6]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.method.clone(),
                    r.metric.clone(),
                    format!("{:.4} ± {:.4}", r.mean, r.std),
                    r.n.to_string(),
                    r.failures.to_string(),
                    r.params.clone(),
                ]
            })
            .collect();
        let mut widths = header.map(|h| h.chars().count());
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |row: &[String]| {
            let padded: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
                .collect();
            padded.join("  ").trim_end().to_string()
        };
        let mut out = format!("{}\n", self.title);
        let head: Vec<String> = header.iter().map(|h| h.to_string()).collect();
        let _ = writeln!(out, "{}", line(&head));
        let _ = writeln!(
            out,
            "{}",
            widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>().join("  ")
        );
        for row in &cells {
            let _ = writeln!(out, "{}", line(row));
        }
        out
    }

    pub fn find(&self, method: &str, metric: &str, params_prefix: &str) -> Option<&MetricReport> {
        self.rows.iter().find(|r| {
            r.method == method && r.metric == metric && r.params.starts_with(params_prefix)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1 {
    /// Angular distance and profile-equivariance dB per method and sigma.
    pub main: BenchTable,
    /// Distance to the von Mises reference profile and equivariance max-abs.
    pub reference: BenchTable,
}

/// Per-image results for every bank, in bank order.
struct ImageScores {
    distance: Vec<Option<f64>>,
    reference_db: Vec<Option<f64>>,
    equivariance_db: Vec<Option<f64>>,
    max_abs: Vec<Option<f64>>,
}

fn score_image(
    config: &RunConfig,
    banks: &[FilterBank],
    image: &Image,
    sigma: f64,
    equivariance_seed: u64,
) -> Result<ImageScores> {
    let reference = von_mises_reference_profile(config.mu, sigma, config.num_angles)?;
    let psd = periodogram(image, &config.window);
    let base: Vec<Option<_>> = banks
        .iter()
        .map(|b| normalize(&angular_profile(&psd, b).ok()?).ok())
        .collect();
    let mut distance = Vec::new();
    let mut reference_db = Vec::new();
    for p in &base {
        distance.push(p.as_ref().and_then(|p| {
            let eta = principal_orientation(p, config.refine).ok()?.eta;
            Some(angular_distance(eta, config.mu, 180.0))
        }));
        reference_db.push(p.as_ref().and_then(|p| profile_distance_db(p, &reference).ok()));
    }

    let mut rng = seeded_rng(equivariance_seed);
    let angles = stratified_angles(config.trials, 180.0, &mut rng);
    let mut db_sums = vec![Some(0.0); banks.len()];
    let mut max_abs = vec![Some(0.0f64); banks.len()];
    for &alpha in &angles {
        let rotated = rotate_bilinear(image, alpha)?;
        let rpsd = periodogram(&rotated, &config.window);
        for (k, bank) in banks.iter().enumerate() {
            let sample = base[k].as_ref().and_then(|b| {
                let r = normalize(&angular_profile(&rpsd, bank).ok()?).ok()?;
                Some(compare_shifted(&r, b, alpha))
            });
            match sample {
                Some(s) => {
                    db_sums[k] = db_sums[k].map(|v| v + s.db);
                    max_abs[k] = max_abs[k].map(|v| v.max(s.max_abs));
                }
                None => {
                    db_sums[k] = None;
                    max_abs[k] = None;
                }
            }
        }
    }
    let equivariance_db = db_sums
        .into_iter()
        .map(|s| s.map(|v| v / angles.len() as f64))
        .collect();
    Ok(ImageScores {
        distance,
        reference_db,
        equivariance_db,
        max_abs,
    })
}

fn report(
    method: &str,
    metric: &str,
    values: impl Iterator<Item = Option<f64>>,
    params: &str,
) -> Result<MetricReport> {
    let (ok, failed): (Vec<_>, Vec<_>) = values.partition(|v| v.is_some());
    let samples: Vec<f64> = ok.into_iter().flatten().collect();
    if samples.is_empty() {
        return Ok(MetricReport {
            method: method.to_string(),
            metric: metric.to_string(),
            mean: f64::NAN,
            std: f64::NAN,
            n: 0,
            failures: failed.len(),
            params: params.to_string(),
        });
    }
    Ok(MetricReport::from_samples(method, metric, &samples, params)?.with_failures(failed.len()))
}

/// Synthetic orientation benchmark: for each concentration, `n` Gabor
/// mixtures with seeds `seed .. seed + n`, scored by every method.
/// Per-image equivariance uses `trials` stratified rotations shared by all
/// methods.
pub fn table1(config: &RunConfig) -> Result<Table1> {
    config.validate()?;
    let banks = build_banks(config, config.size, config.size)?;
    let mut main = BenchTable {
        title: format!(
            "synthetic Gabor mixtures: mu={} N={} M={} trials={} seed={}",
            config.mu, config.n, config.num_angles, config.trials, config.seed
        ),
        rows: Vec::new(),
    };
    let mut reference = BenchTable {
        title: format!("{} (reference variants)", main.title),
        rows: Vec::new(),
    };
    for &sigma in &config.sigmas {
        let scores: Vec<ImageScores> = (0..config.n as u64)
            .into_par_iter()
            .map(|i| {
                let seed = config.seed + i;
                let (image, _) = gen_gabor_image(&config.gabor_spec(sigma, seed))?;
                score_image(config, &banks, &image, sigma, seed ^ 0x9e37_79b9_7f4a_7c15)
            })
            .collect::<Result<Vec<_>>>()?;
        let params = format!(
            "sigma={sigma} N={} M={} trials={} seed={}",
            config.n, config.num_angles, config.trials, config.seed
        );
        for (k, bank) in banks.iter().enumerate() {
            let name = bank.method().name();
            main.rows.push(report(
                name,
                ANGULAR_DISTANCE,
                scores.iter().map(|s| s.distance[k]),
                &params,
            )?);
            main.rows.push(report(
                name,
                EQUIVARIANCE_DB,
                scores.iter().map(|s| s.equivariance_db[k]),
                &params,
            )?);
            reference.rows.push(report(
                name,
                REFERENCE_DB,
                scores.iter().map(|s| s.reference_db[k]),
                &params,
            )?);
            reference.rows.push(report(
                name,
                EQUIVARIANCE_MAX_ABS,
                scores.iter().map(|s| s.max_abs[k]),
                &params,
            )?);
        }
    }
    Ok(Table1 { main, reference })
}

/// Registration benchmark on one pair. Without a pair, a Gabor mixture
/// (concentration `sigma`) and its rotation by `angle` are used, and the
/// recovery error is reported as well.
pub fn register_suite(config: &RunConfig, pair: Option<(Image, Image)>) -> Result<BenchTable> {
    config.validate()?;
    let (x1, x2, truth) = match pair {
        Some((a, b)) => (a, b, None),
        None => {
            let (x1, _) = gen_gabor_image(&config.gabor_spec(config.sigma, config.seed))?;
            let angle = config.angle.rem_euclid(360.0);
            let x2 = rotate_bilinear(&x1, angle)?;
            (x1, x2, Some(angle))
        }
    };
    if x1.shape() != x2.shape() {
        return Err(Error::ShapeMismatch {
            expected: x1.shape(),
            found: x2.shape(),
        }
        .into());
    }
    let banks = build_banks(config, x1.height(), x1.width())?;
    let mut rng = seeded_rng(config.seed);
    let angles = stratified_angles(config.trials, 180.0, &mut rng);
    let per_method: Vec<Vec<MetricReport>> = banks
        .into_par_iter()
        .map(|bank| {
            let name = bank.method().name();
            let registrar = Registrar::new(bank, config.window).with_refine(config.refine);
            let mut rows = Vec::new();
            let gamma = registrar.register(&x1, &x2);
            let params = match &gamma {
                Ok(r) => format!("gamma={:.4} trials={}", r.gamma, config.trials),
                Err(_) => format!("gamma=failed trials={}", config.trials),
            };
            if let Some(angle) = truth {
                let err = gamma.as_ref().ok().map(|r| angular_distance(r.gamma, angle, 360.0));
                rows.push(report(
                    name,
                    REGISTRATION_ERROR,
                    std::iter::once(err),
                    &format!("angle={angle} {params}"),
                )?);
            }
            let eq = match gamma {
                Ok(_) => registration_equivariance_at(&x1, &x2, &registrar, &angles),
                Err(e) => Err(e),
            };
            rows.push(match eq {
                Ok(r) => MetricReport { params, ..r },
                Err(_) => report(name, REGISTRATION_EQUIVARIANCE, std::iter::once(None), &params)?,
            });
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchTable {
        title: format!(
            "registration: M={} trials={} seed={}",
            config.num_angles, config.trials, config.seed
        ),
        rows: per_method.into_iter().flatten().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Table1,
    Register,
}

impl std::str::FromStr for Suite {
    type Err = crate::error::CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "table1" => Ok(Suite::Table1),
            "register" => Ok(Suite::Register),
            other => Err(crate::error::CliError::Config(format!(
                "suite: expected table1 or register, got '{other}'"
            ))),
        }
    }
}

fn write_table(dir: &Path, stem: &str, table: &BenchTable) -> Result<Vec<PathBuf>> {
    let csv = dir.join(format!("{stem}.csv"));
    write_text(&csv, &table.to_csv())?;
    let txt = dir.join(format!("{stem}.txt"));
    write_text(&txt, &table.to_text())?;
    Ok(vec![csv, txt])
}

/// Runs a suite and writes `<suite>.csv` and `<suite>.txt` (plus
/// `table1_reference.*` for the synthetic suite) into `config.out`.
pub fn cmd_bench(
    config: &RunConfig,
    suite: Suite,
    pair: Option<(&Path, &Path)>,
) -> Result<Vec<PathBuf>> {
    ensure_dir(&config.out)?;
    match suite {
        Suite::Table1 => {
            let t = table1(config)?;
            let mut files = write_table(&config.out, "table1", &t.main)?;
            files.extend(write_table(&config.out, "table1_reference", &t.reference)?);
            Ok(files)
        }
        Suite::Register => {
            let images = match pair {
                Some((a, b)) => Some((
                    aniso_core::io::read_image(a)?,
                    aniso_core::io::read_image(b)?,
                )),
                None => None,
            };
            write_table(&config.out, "register", &register_suite(config, images)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_table_is_aligned() {
        let t = BenchTable {
            title: "t".into(),
            rows: vec![
                MetricReport::from_samples("cake", "a", &[1.0, 3.0], "p").unwrap(),
                MetricReport::from_samples("binning", "longer_metric", &[2.0], "q").unwrap(),
            ],
        };
        let text = t.to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        let col = lines[1].find("metric").unwrap();
        assert!(lines[3][col..].starts_with("a "));
        assert!(lines[3].contains("2.0000 ± 1.4142"));
        assert_eq!(t.to_csv().lines().count(), 3);
    }
}
