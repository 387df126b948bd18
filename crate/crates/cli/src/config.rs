//! Run configuration: defaults, overridden by a `key=value` file, overridden
//! by command-line flags.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use aniso_core::{CakeParams, FilterParams, GaborMixSpec, Method, RadialBand, RidgeParams, WindowSpec};

use crate::error::{CliError, Result};

/// Output image encoding for generated images.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Anim,
    Png,
}

impl ImageFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            ImageFormat::Anim => "anim",
            ImageFormat::Png => "png",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub methods: Vec<Method>,
    pub num_angles: usize,
    pub window: WindowSpec,
    pub filter: FilterParams,
    pub refine: bool,
    pub seed: u64,
    pub n: usize,
    pub trials: usize,
    pub out: PathBuf,
    pub size: usize,
    pub atoms: usize,
    pub mu: f64,
    pub sigma: f64,
    /// Concentrations swept by the table1 benchmark.
    pub sigmas: Vec<f64>,
    pub scale: (f64, f64),
    pub center_fraction: f64,
    pub angle: f64,
    pub wavelength: f64,
    pub format: ImageFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        let gabor = GaborMixSpec::default();
        Self {
            methods: Method::ALL.to_vec(),
            num_angles: 180,
            window: WindowSpec::default(),
            filter: FilterParams::default(),
            refine: true,
            seed: 0,
            n: 30,
            trials: 36,
            out: PathBuf::from("."),
            size: gabor.width,
            atoms: gabor.atoms,
            mu: gabor.mu,
            sigma: 50.0,
            sigmas: vec![5.0, 20.0, 50.0],
            scale: gabor.scale,
            center_fraction: gabor.center_fraction,
            angle: 25.0,
            wavelength: 8.0,
            format: ImageFormat::Anim,
        }
    }
}

/// Keys accepted in config files and their flag spellings.
pub const KEYS: &[&str] = &[
    "method",
    "angles",
    "window",
    "window_radius",
    "refine",
    "seed",
    "n",
    "trials",
    "out",
    "cake_exponent",
    "band_lo",
    "band_hi",
    "ridge_sigma",
    "size",
    "atoms",
    "mu",
    "sigma",
    "sigmas",
    "scale_lo",
    "scale_hi",
    "center_fraction",
    "angle",
    "wavelength",
    "format",
];

/// Parses `key=value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("line {}: expected key=value, got '{raw}'", no + 1))
        })?;
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!("line {}: unknown key '{key}'", no + 1)));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config_text(&text)
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse '{value}'")))
}

fn parse_on_off(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("{key}: expected on/off, got '{value}'"))),
    }
}

pub fn parse_methods(value: &str) -> Result<Vec<Method>> {
    let value = value.trim();
    if value.eq_ignore_ascii_case("all") {
        return Ok(Method::ALL.to_vec());
    }
    let mut methods = Vec::new();
    for part in value.split(',') {
        let m: Method = part.trim().parse()?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    Ok(methods)
}

impl RunConfig {
    /// Defaults overridden by `pairs`, then validated.
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        let mut c = Self::default();
        let mut window_kind = "disk-hann".to_string();
        let mut window_radius = 1.0;
        let mut band = RadialBand::default();
        for (key, value) in pairs {
            let v = value.as_str();
            match key.as_str() {
                "method" => c.methods = parse_methods(v)?,
                "angles" => c.num_angles = parse(key, v)?,
                "window" => window_kind = v.trim().to_ascii_lowercase(),
                "window_radius" => window_radius = parse(key, v)?,
                "refine" => c.refine = parse_on_off(key, v)?,
                "seed" => c.seed = parse(key, v)?,
                "n" => c.n = parse(key, v)?,
                "trials" => c.trials = parse(key, v)?,
                "out" => c.out = PathBuf::from(v.trim()),
                "cake_exponent" => c.filter.cake.exponent = parse(key, v)?,
                "band_lo" => band.lo = parse(key, v)?,
                "band_hi" => band.hi = parse(key, v)?,
                "ridge_sigma" => c.filter.ridge.sigma = parse(key, v)?,
                "size" => c.size = parse(key, v)?,
                "atoms" => c.atoms = parse(key, v)?,
                "mu" => c.mu = parse(key, v)?,
                "sigma" => c.sigma = parse(key, v)?,
                "sigmas" => {
                    c.sigmas = v
                        .split(',')
                        .map(|s| parse(key, s))
                        .collect::<Result<Vec<f64>>>()?
                }
                "scale_lo" => c.scale.0 = parse(key, v)?,
                "scale_hi" => c.scale.1 = parse(key, v)?,
                "center_fraction" => c.center_fraction = parse(key, v)?,
                "angle" => c.angle = parse(key, v)?,
                "wavelength" => c.wavelength = parse(key, v)?,
                "format" => {
                    c.format = match v.trim().to_ascii_lowercase().as_str() {
                        "anim" => ImageFormat::Anim,
                        "png" => ImageFormat::Png,
                        other => {
                            return Err(CliError::Config(format!(
                                "format: expected anim or png, got '{other}'"
                            )))
                        }
                    }
                }
                other => return Err(CliError::Config(format!("unknown key '{other}'"))),
            }
        }
        c.window = match window_kind.as_str() {
            "disk-hann" | "disk_hann" | "hann" => WindowSpec::disk_hann(window_radius)?,
            "none" => WindowSpec::none(),
            other => {
                return Err(CliError::Config(format!(
                    "window: expected disk-hann or none, got '{other}'"
                )))
            }
        };
        c.filter.cake.band = band;
        c.filter.ridge.band = band;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if self.num_angles < aniso_core::FilterBank::MIN_ANGLES {
            return bad(format!("angles must be at least 4, got {}", self.num_angles));
        }
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.sigmas.is_empty() {
            return bad("sigmas must list at least one value".into());
        }
        if !(self.angle.is_finite() && self.mu.is_finite()) {
            return bad("angles must be finite".into());
        }
        CakeParams::validate(&self.filter.cake)?;
        RidgeParams::validate(&self.filter.ridge)?;
        for &sigma in std::iter::once(&self.sigma).chain(&self.sigmas) {
            self.gabor_spec(sigma, 0).validate()?;
        }
        if !(self.wavelength.is_finite() && self.wavelength >= 3.0) {
            return bad(format!("wavelength must be at least 3, got {}", self.wavelength));
        }
        Ok(())
    }

    pub fn gabor_spec(&self, sigma: f64, seed: u64) -> GaborMixSpec {
        GaborMixSpec {
            atoms: self.atoms,
            mu: self.mu,
            sigma,
            scale: self.scale,
            center_fraction: self.center_fraction,
            width: self.size,
            height: self.size,
            seed,
        }
    }

    /// Flat record of the analysis-relevant settings, for result headers.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        let methods: Vec<&str> = self.methods.iter().map(|m| m.name()).collect();
        let _ = write!(
            out,
            "methods={} M={} window={:?}:{} refine={} cake_p={} band=[{},{}] ridge_sigma={}",
            methods.join("+"),
            self.num_angles,
            self.window.kind(),
            self.window.radius(),
            if self.refine { "on" } else { "off" },
            self.filter.cake.exponent,
            self.filter.cake.band.lo,
            self.filter.cake.band.hi,
            self.filter.ridge.sigma,
        );
        out
    }
}
