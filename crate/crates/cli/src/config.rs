//! Run configuration: built-in defaults, then a `key = value` file, then
//! command-line flags.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gksl::params::DEFAULT_EPSILON_SCHEDULE;
use gksl::ModelParams;

use crate::CliError;

/// How dimensionful results are reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Units {
    /// Results divided by the matching power of `m_E`.
    Me,
    /// Results as computed from the literal inputs.
    Absolute,
}

impl Units {
    fn name(self) -> &'static str {
        match self {
            Self::Me => "me",
            Self::Absolute => "absolute",
        }
    }
}

/// Fully resolved settings of one invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub lambda: f64,
    pub m_s: Option<f64>,
    pub m_e: f64,
    pub m_e_given: bool,
    pub units: Units,
    pub tol: f64,
    pub mc_samples: usize,
    pub eps_schedule: Vec<f64>,
    pub seed: u64,
    pub box_length: f64,
    pub n_max: i32,
    pub t_eff: f64,
    pub angular_theta: usize,
    pub angular_phi: usize,
    pub out: Option<PathBuf>,
}

/// Fallback system mass when neither a flag nor the config sets one.
pub const DEFAULT_M_S: f64 = 0.02;

impl Default for RunConfig {
    fn default() -> Self {
        let p = ModelParams::default();
        Self {
            lambda: p.lambda,
            m_s: None,
            m_e: p.m_e,
            m_e_given: false,
            units: Units::Me,
            tol: p.tol,
            mc_samples: 100_000,
            eps_schedule: DEFAULT_EPSILON_SCHEDULE.to_vec(),
            seed: p.seed,
            box_length: 4.0,
            n_max: 1,
            t_eff: 10.0,
            angular_theta: p.angular_nodes[0],
            angular_phi: p.angular_nodes[1],
            out: None,
        }
    }
}

/// Flags shared by every subcommand; `None` leaves the configured value.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct CommonArgs {
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Coupling λ.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// System mass m_s.
    #[arg(long, allow_negative_numbers = true)]
    pub ms: Option<f64>,
    /// Environment mass m_E.
    #[arg(long, allow_negative_numbers = true)]
    pub me: Option<f64>,
    /// Reporting units.
    #[arg(long, value_enum)]
    pub units: Option<Units>,
    /// Relative integration tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Monte Carlo samples per phase-space integral.
    #[arg(long)]
    pub mc_samples: Option<usize>,
    /// iε schedule in units of m_E², comma separated, decreasing.
    #[arg(long)]
    pub eps_schedule: Option<String>,
    /// Base random seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl RunConfig {
    /// Defaults, overridden by the config file, overridden by flags.
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        if let Some(path) = &args.config {
            cfg.apply_file(path)?;
        }
        if let Some(v) = args.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = args.ms {
            cfg.m_s = Some(v);
        }
        if let Some(v) = args.me {
            cfg.m_e = v;
            cfg.m_e_given = true;
        }
        if let Some(v) = args.units {
            cfg.units = v;
        }
        if let Some(v) = args.tol {
            cfg.tol = v;
        }
        if let Some(v) = args.mc_samples {
            cfg.mc_samples = v;
        }
        if let Some(v) = &args.eps_schedule {
            cfg.eps_schedule = parse_list(v).map_err(|e| CliError::usage(format!("--eps-schedule: {e}")))?;
        }
        if let Some(v) = args.seed {
            cfg.seed = v;
        }
        if cfg.units == Units::Absolute && !cfg.m_e_given {
            return Err(CliError::usage(
                "--units absolute needs m_E set explicitly (--me or `me` in the config)",
            ));
        }
        Ok(cfg)
    }

    fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| CliError::usage(format!("{}:{}: {msg}", path.display(), lineno + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected `key = value`, got `{line}`")))?;
            self.set(key.trim(), value.trim()).map_err(at)?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("invalid value `{v}` for `{key}`"))
        }
        match key {
            "lambda" => self.lambda = num(key, value)?,
            "ms" => self.m_s = Some(num(key, value)?),
            "me" => {
                self.m_e = num(key, value)?;
                self.m_e_given = true;
            }
            "units" => {
                self.units = match value {
                    "me" => Units::Me,
                    "absolute" => Units::Absolute,
                    _ => return Err(format!("units must be `me` or `absolute`, got `{value}`")),
                }
            }
            "tol" => self.tol = num(key, value)?,
            "mc_samples" => self.mc_samples = num(key, value)?,
            "eps_schedule" => self.eps_schedule = parse_list(value)?,
            "seed" => self.seed = num(key, value)?,
            "box_length" => self.box_length = num(key, value)?,
            "n_max" => self.n_max = num(key, value)?,
            "t_eff" => self.t_eff = num(key, value)?,
            "angular_theta" => self.angular_theta = num(key, value)?,
            "angular_phi" => self.angular_phi = num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn m_s_or_default(&self) -> f64 {
        self.m_s.unwrap_or(DEFAULT_M_S)
    }

    /// Library parameters with the given system mass.
    pub fn params_with_ms(&self, m_s: f64) -> Result<ModelParams, CliError> {
        let params = ModelParams {
            lambda: self.lambda,
            m_s,
            m_e: self.m_e,
            epsilon_schedule: self.eps_schedule.clone(),
            mc_samples: self.mc_samples,
            seed: self.seed,
            tol: self.tol,
            angular_nodes: [self.angular_theta, self.angular_phi],
        };
        params.validate()?;
        Ok(params)
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        self.params_with_ms(self.m_s_or_default())
    }

    /// `# key = value` lines describing the resolved configuration.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let ms = self.m_s.map_or_else(|| format!("{DEFAULT_M_S}"), |v| v.to_string());
        let eps: Vec<String> = self.eps_schedule.iter().map(f64::to_string).collect();
        let out = self
            .out
            .as_ref()
            .map_or_else(|| "-".to_owned(), |p| p.display().to_string());
        for (k, v) in [
            ("lambda", self.lambda.to_string()),
            ("ms", ms),
            ("me", self.m_e.to_string()),
            ("units", self.units.name().to_owned()),
            ("tol", self.tol.to_string()),
            ("mc_samples", self.mc_samples.to_string()),
            ("eps_schedule", eps.join(",")),
            ("seed", self.seed.to_string()),
            ("box_length", self.box_length.to_string()),
            ("n_max", self.n_max.to_string()),
            ("t_eff", self.t_eff.to_string()),
            ("angular_theta", self.angular_theta.to_string()),
            ("angular_phi", self.angular_phi.to_string()),
            ("out", out),
        ] {
            let _ = writeln!(s, "# {k} = {v}");
        }
        s
    }

    /// Multiplier turning a quantity of mass dimension `dim` into the
    /// reporting units.
    pub fn unit_factor(&self, dim: i32) -> f64 {
        match self.units {
            Units::Me => self.m_e.powi(-dim),
            Units::Absolute => 1.0,
        }
    }
}

/// Comma-separated list of numbers; `pi` expressions such as `pi/2` and
/// `2*pi` are accepted.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|t| parse_angle(t.trim())).collect()
}

fn parse_angle(t: &str) -> Result<f64, String> {
    let bad = || format!("cannot parse `{t}` as a number");
    let lower = t.to_ascii_lowercase();
    let pi = std::f64::consts::PI;
    if let Some(rest) = lower.strip_prefix("pi") {
        return match rest.strip_prefix('/') {
            Some(d) => d.parse::<f64>().map(|d| pi / d).map_err(|_| bad()),
            None if rest.is_empty() => Ok(pi),
            None => Err(bad()),
        };
    }
    if let Some(coef) = lower.strip_suffix("*pi") {
        return coef.parse::<f64>().map(|c| c * pi).map_err(|_| bad());
    }
    lower.parse().map_err(|_| bad())
}
