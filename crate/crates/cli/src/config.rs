//! Flat `key = value` configuration with `[algorithm]` sections.
//!
//! ```text
//! # global keys
//! max_iters = 2000
//! algorithms = apdfp, pdfp
//!
//! [apdfp]
//! c = 0.5
//! ```
//!
//! Keys are case-insensitive and `-` is read as `_`. Later sources override
//! earlier ones: built-in defaults, then the file, then command-line flags.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use apdfp_core::problems::{CtSpec, QuadSpec};
use apdfp_core::solvers::{
    AadmmGradientPoint, AadmmParams, AadmmStep, Algorithm, ApdParams, ApdfpParams, Cadence,
    FistaParams, Inertia, IpdfpParams, IpdfpUpdate, LpAdmmParams, LpdhgmParams, NagParams,
    PdfpForm, PdfpParams, PgdParams, Problem, StepRule, ThetaRule,
};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub global: BTreeMap<String, String>,
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
}

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

impl ConfigFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut cfg = ConfigFile::default();
        let mut section: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| {
                    CliError::Config(format!("line {line_no}: unterminated section header"))
                })?;
                let name = normalize(name).replace('_', "");
                if !Algorithm::NAMES.contains(&name.as_str()) {
                    return Err(CliError::Config(format!(
                        "line {line_no}: unknown algorithm section [{name}]"
                    )));
                }
                cfg.sections.entry(name.clone()).or_default();
                section = Some(name);
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {line_no}: expected key = value")))?;
            let key = normalize(key);
            if key.is_empty() {
                return Err(CliError::Config(format!("line {line_no}: empty key")));
            }
            let map = match &section {
                Some(s) => cfg.sections.get_mut(s).expect("section created on header"),
                None => &mut cfg.global,
            };
            if map.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::Config(format!(
                    "line {line_no}: duplicate key '{key}'"
                )));
            }
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.global.insert(normalize(key), value.into());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Logreg,
    Ct,
    Quad,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Logreg => "logreg",
            Experiment::Ct => "ct",
            Experiment::Quad => "quad",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Experiment::Logreg => &[
                "input",
                "test_input",
                "train_fraction",
                "mu1",
                "mu2",
                "threshold",
                "graph",
                "samples",
                "features",
                "n_features",
            ],
            Experiment::Ct => &["n", "angles", "detectors", "sigma2", "mu"],
            Experiment::Quad => &["dim", "rows", "mu", "condition", "b_scale", "window"],
        }
    }

    fn default_algorithms(self) -> &'static str {
        match self {
            Experiment::Logreg | Experiment::Ct => "apdfp,pdfp,ipdfp,lpdhgm,apd,lpadmm,aadmm",
            Experiment::Quad => "apdfp,pdfp",
        }
    }
}

const COMMON_KEYS: &[&str] = &[
    "algorithms",
    "max_iters",
    "tol",
    "seed",
    "out",
    "lambda_scale",
    "c",
    "cadence",
    "reference_iters",
    "wall_clock",
    "lambda_sweep",
];

/// Per-algorithm settings, turned into solver parameters once the problem
/// (and hence `L_f`, `|B|`) is known.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgoSpec {
    pub label: String,
    pub name: String,
    /// `lambda = lambda_scale / rho_max(BB^T)`.
    pub lambda_scale: f64,
    /// APDFP/NAG schedule constant as a fraction of `L_f`.
    pub c_fraction: f64,
    keys: BTreeMap<String, String>,
}

fn section_keys(name: &str) -> &'static [&'static str] {
    match name {
        "pgd" => &["gamma"],
        "fista" => &["gamma", "momentum"],
        "nag" => &["c", "gamma"],
        "lpdhgm" => &["sigma", "gamma"],
        "apd" | "lpadmm" => &["c"],
        "aadmm" => &["rho", "step", "gradient_point"],
        "pdfp" => &["lambda_scale", "gamma", "form", "long_step"],
        "ipdfp" => &["lambda_scale", "gamma", "inertia", "update"],
        "apdfp" => &["lambda_scale", "c", "gamma", "theta"],
        _ => &[],
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> CliResult<T> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> CliResult<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(CliError::Config(format!(
            "{key}: expected a boolean, got '{value}'"
        ))),
    }
}

fn parse_list(key: &str, value: &str) -> CliResult<Vec<f64>> {
    value.split(',').map(|v| parse_value(key, v)).collect()
}

impl AlgoSpec {
    fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.keys
            .get(key)
            .map(|v| parse_value(&format!("[{}] {key}", self.name), v))
            .transpose()
    }

    fn word(&self, key: &str) -> Option<String> {
        self.keys.get(key).map(|v| v.trim().to_ascii_lowercase())
    }

    fn bad_word(&self, key: &str, value: &str, expected: &str) -> CliError {
        CliError::Config(format!(
            "[{}] {key}: expected {expected}, got '{value}'",
            self.name
        ))
    }

    /// Whether this method uses the fixed-point `lambda`.
    pub fn uses_lambda(&self) -> bool {
        matches!(self.name.as_str(), "pdfp" | "ipdfp" | "apdfp")
    }

    /// Parses every key once so syntax errors surface before any work starts.
    fn validate(&self) -> CliResult<()> {
        for key in self.keys.keys() {
            if !section_keys(&self.name).contains(&key.as_str()) {
                return Err(CliError::Config(format!(
                    "[{}]: unknown key '{key}'",
                    self.name
                )));
            }
        }
        if !(self.lambda_scale > 0.0 && self.lambda_scale <= 1.0) {
            return Err(CliError::Config(format!(
                "{}: lambda_scale must lie in (0, 1], got {}",
                self.label, self.lambda_scale
            )));
        }
        if !(0.0..1.0).contains(&self.c_fraction) {
            return Err(CliError::Config(format!(
                "{}: c must lie in [0, 1) as a fraction of L_f, got {}",
                self.label, self.c_fraction
            )));
        }
        for key in ["gamma", "sigma", "rho"] {
            self.get::<f64>(key)?;
        }
        if self.name == "apd" || self.name == "lpadmm" {
            self.get::<f64>("c")?;
        }
        if let Some(v) = self.keys.get("momentum") {
            parse_bool("momentum", v)?;
        }
        if let Some(v) = self.keys.get("long_step") {
            parse_bool("long_step", v)?;
        }
        // Word-valued keys are checked by a dry instantiation below.
        self.word_params()?;
        Ok(())
    }

    fn word_params(
        &self,
    ) -> CliResult<(
        PdfpForm,
        Inertia,
        IpdfpUpdate,
        ThetaRule,
        AadmmStep,
        AadmmGradientPoint,
    )> {
        let form = match self.word("form").as_deref() {
            None | Some("conjugate") => PdfpForm::Conjugate,
            Some("primal") => PdfpForm::Primal,
            Some(v) => return Err(self.bad_word("form", v, "conjugate|primal")),
        };
        let inertia = match self.word("inertia").as_deref() {
            None => IpdfpParams::default().inertia,
            Some("zero") => Inertia::Zero,
            Some("fista") => Inertia::Fista,
            Some(v) => match v.parse::<f64>() {
                Ok(a) if a >= 0.0 => Inertia::Constant(a),
                _ => return Err(self.bad_word("inertia", v, "zero|fista|<nonnegative number>")),
            },
        };
        let update = match self.word("update").as_deref() {
            None | Some("iterate") => IpdfpUpdate::FromIterate,
            Some("extrapolated") => IpdfpUpdate::FromExtrapolated,
            Some(v) => return Err(self.bad_word("update", v, "iterate|extrapolated")),
        };
        let theta = match self.word("theta").as_deref() {
            None | Some("nesterov") => ThetaRule::Nesterov,
            Some("one") => ThetaRule::One,
            Some(v) => return Err(self.bad_word("theta", v, "nesterov|one")),
        };
        let step = match self.word("step").as_deref() {
            None | Some("doubled") => AadmmStep::DoubledLipschitz,
            Some("inverse") => AadmmStep::InverseLipschitz,
            Some(v) => return Err(self.bad_word("step", v, "doubled|inverse")),
        };
        let point = match self.word("gradient_point").as_deref() {
            None | Some("interpolated") => AadmmGradientPoint::Interpolated,
            Some("iterate") => AadmmGradientPoint::Iterate,
            Some(v) => return Err(self.bad_word("gradient_point", v, "interpolated|iterate")),
        };
        Ok((form, inertia, update, theta, step, point))
    }

    /// Schedule rule for APDFP/NAG: constant `gamma` if given, else the
    /// accelerated schedule with `c = c_fraction * L_f`.
    pub fn step_rule(&self, problem: &Problem) -> CliResult<StepRule> {
        Ok(match self.get::<f64>("gamma")? {
            Some(g) => StepRule::Constant(g),
            None => StepRule::Decaying {
                c: self.c_fraction * problem.lipschitz(),
            },
        })
    }

    pub fn lambda(&self, problem: &Problem) -> f64 {
        self.lambda_scale * problem.default_lambda()
    }

    pub fn instantiate(&self, problem: &Problem) -> CliResult<Algorithm> {
        let (form, inertia, update, theta, step, point) = self.word_params()?;
        let gamma = self.get::<f64>("gamma")?;
        let lambda = Some(self.lambda(problem));
        Ok(match self.name.as_str() {
            "pgd" => Algorithm::Pgd(PgdParams { gamma }),
            "fista" => Algorithm::Fista(FistaParams {
                gamma,
                momentum: self
                    .keys
                    .get("momentum")
                    .map_or(Ok(true), |v| parse_bool("momentum", v))?,
            }),
            "nag" => Algorithm::Nag(NagParams {
                step: self.step_rule(problem)?,
            }),
            "lpdhgm" => Algorithm::Lpdhgm(LpdhgmParams {
                sigma: self.get("sigma")?,
                gamma,
            }),
            "apd" => Algorithm::Apd(ApdParams {
                c: self.get("c")?.unwrap_or(ApdParams::default().c),
            }),
            "lpadmm" => Algorithm::LpAdmm(LpAdmmParams {
                c: self.get("c")?.unwrap_or(LpAdmmParams::default().c),
            }),
            "aadmm" => Algorithm::Aadmm(AadmmParams {
                rho: self.get("rho")?,
                step,
                gradient_point: point,
            }),
            "pdfp" => Algorithm::Pdfp(PdfpParams {
                lambda,
                gamma,
                form,
                long_step: self
                    .keys
                    .get("long_step")
                    .map_or(Ok(false), |v| parse_bool("long_step", v))?,
            }),
            "ipdfp" => Algorithm::Ipdfp(IpdfpParams {
                lambda,
                gamma,
                inertia,
                update,
            }),
            "apdfp" => Algorithm::Apdfp(ApdfpParams {
                lambda,
                step: self.step_rule(problem)?,
                theta,
            }),
            other => return Err(CliError::Config(format!("unknown algorithm '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogregOptions {
    pub input: Option<PathBuf>,
    pub test_input: Option<PathBuf>,
    pub train_fraction: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub threshold: f64,
    pub graph: Option<PathBuf>,
    pub samples: usize,
    pub features: usize,
    pub n_features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub algorithms: Vec<AlgoSpec>,
    pub max_iters: usize,
    pub stop_tol: Option<f64>,
    pub seed: u64,
    pub out: PathBuf,
    pub cadence: Cadence,
    pub reference_iters: usize,
    pub wall_clock: bool,
    pub logreg: LogregOptions,
    pub ct: CtSpec,
    pub quad: QuadSpec,
    /// Slope-fit window for gap traces.
    pub window: (usize, usize),
}

struct Reader<'a> {
    map: &'a BTreeMap<String, String>,
}

impl Reader<'_> {
    fn get<T: FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        self.map
            .get(key)
            .map_or(Ok(default), |v| parse_value(key, v))
    }

    fn opt<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.map.get(key).map(|v| parse_value(key, v)).transpose()
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.map.get(key).map(|v| PathBuf::from(v.trim()))
    }
}

fn parse_cadence(value: &str) -> CliResult<Cadence> {
    let v = value.trim().to_ascii_lowercase();
    let cadence = if let Some(rest) = v.strip_prefix("log:") {
        Cadence::LogSpaced {
            per_decade: parse_value("cadence", rest)?,
        }
    } else {
        Cadence::Every(parse_value("cadence", &v)?)
    };
    match cadence {
        Cadence::Every(0) | Cadence::LogSpaced { per_decade: 0 } => {
            Err(CliError::Config("cadence must be at least 1".into()))
        }
        c => Ok(c),
    }
}

impl RunConfig {
    pub fn resolve(experiment: Experiment, file: &ConfigFile) -> CliResult<Self> {
        let g = &file.global;
        for key in g.keys() {
            if !COMMON_KEYS.contains(&key.as_str()) && !experiment.keys().contains(&key.as_str()) {
                return Err(CliError::Config(format!(
                    "unknown key '{key}' for the {} experiment",
                    experiment.name()
                )));
            }
        }
        let r = Reader { map: g };
        let quad_defaults = experiment == Experiment::Quad;

        let max_iters: usize = r.get("max_iters", if quad_defaults { 2000 } else { 1000 })?;
        if max_iters == 0 {
            return Err(CliError::Config("max_iters must be at least 1".into()));
        }
        let stop_tol = match g.get("tol").map(|v| v.trim().to_ascii_lowercase()) {
            None if quad_defaults => None,
            None => Some(1e-3),
            Some(v) if v == "none" || v == "off" => None,
            Some(v) => {
                let t: f64 = parse_value("tol", &v)?;
                if !(t > 0.0) {
                    return Err(CliError::Config(format!(
                        "tol must be positive (or 'none'), got {t}"
                    )));
                }
                Some(t)
            }
        };
        let cadence = match g.get("cadence") {
            Some(v) => parse_cadence(v)?,
            None if quad_defaults => Cadence::LogSpaced { per_decade: 20 },
            None => Cadence::Every(1),
        };
        let lambda_scale: f64 = r.get("lambda_scale", 1.0)?;
        let c_fraction: f64 = r.get("c", 0.0)?;
        let sweep = g
            .get("lambda_sweep")
            .map(|v| parse_list("lambda_sweep", v))
            .transpose()?;

        let names = g
            .get("algorithms")
            .map_or(experiment.default_algorithms(), String::as_str);
        let mut algorithms = Vec::new();
        let mut seen = Vec::new();
        for raw in names.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let alg: Algorithm = raw
                .parse()
                .map_err(|e: apdfp_core::Error| CliError::Config(e.to_string()))?;
            let name = alg.name().to_string();
            if seen.contains(&name) {
                return Err(CliError::Config(format!("algorithm '{name}' listed twice")));
            }
            seen.push(name.clone());
            let keys = file.sections.get(&name).cloned().unwrap_or_default();
            let section_lambda = keys
                .get("lambda_scale")
                .map(|v| parse_value("lambda_scale", v))
                .transpose()?;
            let section_c = match name.as_str() {
                "apdfp" | "nag" => keys.get("c").map(|v| parse_value("c", v)).transpose()?,
                _ => None,
            };
            let base = AlgoSpec {
                label: name.clone(),
                name: name.clone(),
                lambda_scale: section_lambda.unwrap_or(lambda_scale),
                c_fraction: section_c.unwrap_or(c_fraction),
                keys,
            };
            match &sweep {
                Some(scales) if base.uses_lambda() => {
                    for &s in scales {
                        algorithms.push(AlgoSpec {
                            label: format!("{name}_lambda{s}"),
                            lambda_scale: s,
                            ..base.clone()
                        });
                    }
                }
                _ => algorithms.push(base),
            }
        }
        if algorithms.is_empty() {
            return Err(CliError::Config("no algorithms selected".into()));
        }
        for spec in &algorithms {
            spec.validate()?;
        }

        let logreg = LogregOptions {
            input: r.path("input"),
            test_input: r.path("test_input"),
            train_fraction: r.get("train_fraction", 0.8)?,
            mu1: r.get("mu1", 1e-3)?,
            mu2: r.get("mu2", 1e-3)?,
            threshold: r.get("threshold", 0.5)?,
            graph: r.path("graph"),
            samples: r.get("samples", 200)?,
            features: r.get("features", 10)?,
            n_features: r.opt("n_features")?,
        };
        let ct_default = CtSpec::default();
        let seed: u64 = r.get("seed", 0)?;
        let ct = CtSpec {
            n: r.get("n", ct_default.n)?,
            n_angles: r.get("angles", ct_default.n_angles)?,
            n_det: r.get("detectors", ct_default.n_det)?,
            sigma2: r.get("sigma2", ct_default.sigma2)?,
            mu: if experiment == Experiment::Ct {
                r.get("mu", ct_default.mu)?
            } else {
                ct_default.mu
            },
            seed,
        };
        let qd = QuadSpec::default();
        let quad = QuadSpec {
            dim: r.get("dim", qd.dim)?,
            rows: r.get("rows", qd.rows)?,
            mu: if experiment == Experiment::Quad {
                r.get("mu", qd.mu)?
            } else {
                qd.mu
            },
            condition: r.get("condition", qd.condition)?,
            b_scale: r.get("b_scale", qd.b_scale)?,
            seed,
        };
        let window = match g.get("window") {
            None => (20, max_iters),
            Some(v) => {
                let parts = parse_list("window", v)?;
                match parts[..] {
                    [lo, hi] if lo >= 1.0 && hi > lo => (lo as usize, hi as usize),
                    _ => {
                        return Err(CliError::Config(format!(
                            "window must be 'lo,hi' with 1 <= lo < hi, got '{v}'"
                        )))
                    }
                }
            }
        };
        let reference_iters: usize = r.get("reference_iters", 10_000)?;
        if reference_iters == 0 {
            return Err(CliError::Config(
                "reference_iters must be at least 1".into(),
            ));
        }
        Ok(RunConfig {
            experiment,
            algorithms,
            max_iters,
            stop_tol,
            seed,
            out: r
                .path("out")
                .unwrap_or_else(|| PathBuf::from(format!("apdfp-out/{}", experiment.name()))),
            cadence,
            reference_iters,
            wall_clock: g
                .get("wall_clock")
                .map_or(Ok(false), |v| parse_bool("wall_clock", v))?,
            logreg,
            ct,
            quad,
            window,
        })
    }
}
