//! Experiment configuration: flat `key = value` text with dotted sections.
//!
//! Angles are radians; any angle key may instead be given with a `_deg`
//! suffix in place of `_rad`. [`ExperimentConfig::to_text`] emits the
//! canonical (radian) form, which parses back to an identical value.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::beam::BeamParams;
use crate::geoloss::DetectorParams;
use crate::montecarlo::DEFAULT_TRIALS;
use crate::numerics::DEFAULT_REL_TOL;
use crate::output::fmt_f64;
use crate::stochastic::PoseSigmas;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}{field}: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(line: Option<usize>, field: &str, message: impl Into<String>) -> Self {
        Self { line, field: field.to_string(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Some(Self::Csv),
            "json" => Some(Self::Json),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

/// Swept quantity; sigma sweeps carry their unit in the name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Alpha,
    SigmaPCm,
    SigmaOMrad,
}

impl SweepVariable {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "alpha" => Some(Self::Alpha),
            "sigma_p_cm" => Some(Self::SigmaPCm),
            "sigma_o_mrad" => Some(Self::SigmaOMrad),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Alpha => "alpha",
            Self::SigmaPCm => "sigma_p_cm",
            Self::SigmaOMrad => "sigma_o_mrad",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub variable: SweepVariable,
    /// Grid in the variable's unit (radians for `alpha`).
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub range_m: f64,
    pub alpha: f64,
    pub beta: f64,
    pub beam: BeamParams,
    pub detector: DetectorParams,
    pub sigma: PoseSigmas,
    pub sweep: Option<Sweep>,
    /// Link distances for average-loss runs; empty means `range_m` only.
    pub ranges_m: Vec<f64>,
    /// Footprint offsets `(f_y, f_z)` for the bounds table.
    pub offsets_m: Vec<(f64, f64)>,
    pub pdf_bins: usize,
    pub n_trials: u64,
    pub seed: u64,
    pub rel_tol: f64,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
    /// Test hook: negate the cross term of the contour ellipse in `validate`.
    pub flip_rho_yz_sign: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            range_m: 1000.0,
            alpha: 0.0,
            beta: PI / 2.0,
            beam: BeamParams::default(),
            detector: DetectorParams::default(),
            sigma: PoseSigmas::default(),
            sweep: None,
            ranges_m: Vec::new(),
            offsets_m: vec![(0.0, 0.0)],
            pdf_bins: 50,
            n_trials: DEFAULT_TRIALS,
            seed: 1,
            rel_tol: DEFAULT_REL_TOL,
            output_path: None,
            format: OutputFormat::Csv,
            flip_rho_yz_sign: false,
        }
    }
}

/// Keys taking an angle; each also accepts a `_deg` spelling.
const ANGLE_KEYS: [&str; 5] = [
    "geometry.alpha_rad",
    "geometry.beta_rad",
    "stability.sigma_o_rad",
    "stability.sigma_theta_rad",
    "stability.sigma_phi_rad",
];

fn parse_f64(line: Option<usize>, key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v.trim().parse().map_err(|_| ConfigError::new(line, key, format!("expected a number, got {v:?}")))?;
    if !x.is_finite() {
        return Err(ConfigError::new(line, key, "value must be finite"));
    }
    Ok(x)
}

fn parse_list(line: Option<usize>, key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_f64(line, key, s)).collect()
}

fn parse_int<T: std::str::FromStr>(line: Option<usize>, key: &str, v: &str) -> Result<T, ConfigError> {
    v.trim().parse().map_err(|_| ConfigError::new(line, key, format!("expected a non-negative integer, got {v:?}")))
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        // key → (value, line); later assignments win
        let mut entries: HashMap<String, (String, usize)> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new(Some(lineno), line, "expected `key = value`"))?;
            let k = k.trim();
            let v = v.trim();
            let (key, value) = match k.strip_suffix("_deg") {
                Some(stem) if ANGLE_KEYS.contains(&format!("{stem}_rad").as_str()) => {
                    let deg = parse_f64(Some(lineno), k, v)?;
                    (format!("{stem}_rad"), deg.to_radians().to_string())
                }
                _ if k == "sweep.values_deg" => {
                    let list = parse_list(Some(lineno), k, v)?;
                    ("sweep.values".to_string(), fmt_list(&list.iter().map(|d| d.to_radians()).collect::<Vec<_>>()))
                }
                _ => (k.to_string(), v.to_string()),
            };
            entries.insert(key, (value, lineno));
        }
        Self::from_entries(entries)
    }

    fn from_entries(entries: HashMap<String, (String, usize)>) -> Result<Self, ConfigError> {
        let mut c = Self::default();
        let mut lines: HashMap<&'static str, usize> = HashMap::new();
        let mut sweep_var: Option<SweepVariable> = None;
        let mut sweep_values: Option<Vec<f64>> = None;
        let (mut w0, mut lambda, mut cn2, mut a) = (c.beam.w0, c.beam.wavelength, c.beam.cn2, c.detector.a);
        let mut iso_p: Option<f64> = None;
        let mut iso_o: Option<f64> = None;
        let mut axis: [Option<f64>; 5] = [None; 5];

        let mut keys: Vec<_> = entries.iter().collect();
        keys.sort_by_key(|(_, (_, l))| *l);
        for (key, (v, line)) in keys {
            let l = Some(*line);
            let k = key.as_str();
            let canonical: &'static str = match k {
                "geometry.range_m" => {
                    c.range_m = parse_f64(l, k, v)?;
                    "geometry.range_m"
                }
                "geometry.alpha_rad" => {
                    c.alpha = parse_f64(l, k, v)?;
                    "geometry.alpha_rad"
                }
                "geometry.beta_rad" => {
                    c.beta = parse_f64(l, k, v)?;
                    "geometry.beta_rad"
                }
                "beam.w0_m" => {
                    w0 = parse_f64(l, k, v)?;
                    "beam.w0_m"
                }
                "beam.wavelength_m" => {
                    lambda = parse_f64(l, k, v)?;
                    "beam.wavelength_m"
                }
                "beam.cn2" => {
                    cn2 = parse_f64(l, k, v)?;
                    "beam.cn2"
                }
                "detector.a_m" => {
                    a = parse_f64(l, k, v)?;
                    "detector.a_m"
                }
                "stability.sigma_p_m" => {
                    iso_p = Some(parse_f64(l, k, v)?);
                    "stability.sigma_p_m"
                }
                "stability.sigma_o_rad" => {
                    iso_o = Some(parse_f64(l, k, v)?);
                    "stability.sigma_o_rad"
                }
                "stability.sigma_x_m" => {
                    axis[0] = Some(parse_f64(l, k, v)?);
                    "stability.sigma_x_m"
                }
                "stability.sigma_y_m" => {
                    axis[1] = Some(parse_f64(l, k, v)?);
                    "stability.sigma_y_m"
                }
                "stability.sigma_z_m" => {
                    axis[2] = Some(parse_f64(l, k, v)?);
                    "stability.sigma_z_m"
                }
                "stability.sigma_theta_rad" => {
                    axis[3] = Some(parse_f64(l, k, v)?);
                    "stability.sigma_theta_rad"
                }
                "stability.sigma_phi_rad" => {
                    axis[4] = Some(parse_f64(l, k, v)?);
                    "stability.sigma_phi_rad"
                }
                "sweep.variable" => {
                    sweep_var = Some(SweepVariable::parse(v).ok_or_else(|| {
                        ConfigError::new(l, k, format!("unknown sweep variable {v:?} (alpha, sigma_p_cm, sigma_o_mrad)"))
                    })?);
                    "sweep.variable"
                }
                "sweep.values" => {
                    sweep_values = Some(parse_list(l, k, v)?);
                    "sweep.values"
                }
                "sweep.ranges_m" => {
                    c.ranges_m = parse_list(l, k, v)?;
                    "sweep.ranges_m"
                }
                "bounds.offsets_m" => {
                    c.offsets_m = parse_offsets(l, k, v)?;
                    "bounds.offsets_m"
                }
                "pdf.bins" => {
                    c.pdf_bins = parse_int(l, k, v)?;
                    "pdf.bins"
                }
                "mc.n_trials" => {
                    c.n_trials = parse_int(l, k, v)?;
                    "mc.n_trials"
                }
                "mc.seed" => {
                    c.seed = parse_int(l, k, v)?;
                    "mc.seed"
                }
                "quadrature.rel_tol" => {
                    c.rel_tol = parse_f64(l, k, v)?;
                    "quadrature.rel_tol"
                }
                "output.path" => {
                    c.output_path = if v.is_empty() { None } else { Some(PathBuf::from(v)) };
                    "output.path"
                }
                "output.format" => {
                    c.format = OutputFormat::parse(v).ok_or_else(|| ConfigError::new(l, k, "expected csv or json"))?;
                    "output.format"
                }
                "validate.flip_rho_yz_sign" => {
                    c.flip_rho_yz_sign = v
                        .parse()
                        .map_err(|_| ConfigError::new(l, k, format!("expected true or false, got {v:?}")))?;
                    "validate.flip_rho_yz_sign"
                }
                _ => return Err(ConfigError::new(l, k, "unknown key")),
            };
            lines.insert(canonical, *line);
        }

        let line_of = |k: &str| lines.get(k).copied();
        for (k, v, min_ok) in [("beam.w0_m", w0, w0 > 0.0), ("beam.wavelength_m", lambda, lambda > 0.0), ("beam.cn2", cn2, cn2 >= 0.0)] {
            if !min_ok {
                let bound = if k == "beam.cn2" { "≥ 0" } else { "positive" };
                return Err(ConfigError::new(line_of(k), k, format!("must be {bound}, got {v}")));
            }
        }
        c.beam = BeamParams::new(w0, lambda, cn2).map_err(|e| ConfigError::new(None, "beam", e.to_string()))?;
        c.detector = DetectorParams::new(a).map_err(|e| ConfigError::new(line_of("detector.a_m"), "detector.a_m", e.to_string()))?;

        let p = iso_p.unwrap_or(0.0);
        let o = iso_o.unwrap_or(0.0);
        c.sigma = PoseSigmas {
            x: axis[0].unwrap_or(p),
            y: axis[1].unwrap_or(p),
            z: axis[2].unwrap_or(p),
            theta: axis[3].unwrap_or(o),
            phi: axis[4].unwrap_or(o),
        };
        c.sweep = match (sweep_var, sweep_values) {
            (Some(variable), Some(values)) => Some(Sweep { variable, values }),
            (Some(_), None) => return Err(ConfigError::new(line_of("sweep.variable"), "sweep.values", "missing grid")),
            (None, Some(_)) => return Err(ConfigError::new(line_of("sweep.values"), "sweep.variable", "missing variable")),
            (None, None) => None,
        };
        c.validate_with(&line_of)?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.validate_with(&|_| None)
    }

    fn validate_with(&self, line_of: &dyn Fn(&str) -> Option<usize>) -> Result<(), ConfigError> {
        let err = |k: &str, m: String| Err(ConfigError::new(line_of(k), k, m));
        if !(self.range_m > 0.0) {
            return err("geometry.range_m", format!("must be positive, got {}", self.range_m));
        }
        let s = self.sigma;
        for (k, v) in [
            ("stability.sigma_x_m", s.x),
            ("stability.sigma_y_m", s.y),
            ("stability.sigma_z_m", s.z),
            ("stability.sigma_theta_rad", s.theta),
            ("stability.sigma_phi_rad", s.phi),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return err(k, format!("must be ≥ 0, got {v}"));
            }
        }
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                return err("sweep.values", "grid is empty".into());
            }
            if sw.values.windows(2).any(|w| !(w[0] < w[1])) {
                return err("sweep.values", "grid must be strictly increasing".into());
            }
            if sw.variable != SweepVariable::Alpha && sw.values.iter().any(|v| *v < 0.0) {
                return err("sweep.values", "standard deviations must be ≥ 0".into());
            }
        }
        if self.ranges_m.iter().any(|r| !(*r > 0.0)) {
            return err("sweep.ranges_m", "distances must be positive".into());
        }
        if self.ranges_m.windows(2).any(|w| !(w[0] < w[1])) {
            return err("sweep.ranges_m", "distances must be strictly increasing".into());
        }
        if self.offsets_m.is_empty() {
            return err("bounds.offsets_m", "need at least one offset".into());
        }
        if self.pdf_bins == 0 {
            return err("pdf.bins", "must be at least 1".into());
        }
        if self.n_trials == 0 {
            return err("mc.n_trials", "must be at least 1".into());
        }
        if !(self.rel_tol > 0.0 && self.rel_tol <= 0.1) {
            return err("quadrature.rel_tol", format!("must lie in (0, 0.1], got {}", self.rel_tol));
        }
        Ok(())
    }

    /// Canonical text form; parses back to `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("geometry.range_m", fmt_f64(self.range_m));
        kv("geometry.alpha_rad", fmt_f64(self.alpha));
        kv("geometry.beta_rad", fmt_f64(self.beta));
        kv("beam.w0_m", fmt_f64(self.beam.w0));
        kv("beam.wavelength_m", fmt_f64(self.beam.wavelength));
        kv("beam.cn2", fmt_f64(self.beam.cn2));
        kv("detector.a_m", fmt_f64(self.detector.a));
        kv("stability.sigma_x_m", fmt_f64(self.sigma.x));
        kv("stability.sigma_y_m", fmt_f64(self.sigma.y));
        kv("stability.sigma_z_m", fmt_f64(self.sigma.z));
        kv("stability.sigma_theta_rad", fmt_f64(self.sigma.theta));
        kv("stability.sigma_phi_rad", fmt_f64(self.sigma.phi));
        if let Some(sw) = &self.sweep {
            kv("sweep.variable", sw.variable.as_str().to_string());
            kv("sweep.values", fmt_list(&sw.values));
        }
        if !self.ranges_m.is_empty() {
            kv("sweep.ranges_m", fmt_list(&self.ranges_m));
        }
        kv(
            "bounds.offsets_m",
            self.offsets_m.iter().map(|(y, z)| format!("{y},{z}")).collect::<Vec<_>>().join(";"),
        );
        kv("pdf.bins", self.pdf_bins.to_string());
        kv("mc.n_trials", self.n_trials.to_string());
        kv("mc.seed", self.seed.to_string());
        kv("quadrature.rel_tol", fmt_f64(self.rel_tol));
        if let Some(p) = &self.output_path {
            kv("output.path", p.display().to_string());
        }
        kv("output.format", self.format.as_str().to_string());
        if self.flip_rho_yz_sign {
            kv("validate.flip_rho_yz_sign", "true".to_string());
        }
        s
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_text().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn ranges(&self) -> Vec<f64> {
        if self.ranges_m.is_empty() {
            vec![self.range_m]
        } else {
            self.ranges_m.clone()
        }
    }
}

fn parse_offsets(line: Option<usize>, key: &str, v: &str) -> Result<Vec<(f64, f64)>, ConfigError> {
    v.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let xs = parse_list(line, key, pair)?;
            match xs.as_slice() {
                [y, z] => Ok((*y, *z)),
                _ => Err(ConfigError::new(line, key, format!("expected `fy,fz` pairs separated by `;`, got {pair:?}"))),
            }
        })
        .collect()
}
