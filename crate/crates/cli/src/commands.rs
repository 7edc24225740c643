//! Subcommand implementations. Each returns the text for stdout; files are
//! written directly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use gksl::coefficients::{decay_rate_closed, decay_rate_numeric, loop_a_report};
use gksl::lindblad::{
    apply_generator, assemble_decay, assemble_pair, evolve_step, hermiticity_defect, sum_rule_check, DecayRateSource,
    DensityMatrix, FockBasis, GeneratorMatrices, MomentumGrid, SUM_RULE_TOLERANCE,
};
use gksl::probability::{sigma_scan, KernelRoute, ScanSummary};
use gksl::symmetry::{poincare_suite, SIGMA_LEVEL};
use gksl::{FourVector, Mandelstam, ModelParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{parse_list, RunConfig};
use crate::state::parse_state;
use crate::CliError;

/// Scientific notation with 12 significant digits.
pub fn sci(x: f64) -> String {
    format!("{x:.11e}")
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

pub fn decay(cfg: &RunConfig) -> Result<String, CliError> {
    let m_s = cfg
        .m_s
        .ok_or_else(|| CliError::usage("decay needs the system mass: pass --ms or set `ms` in the config"))?;
    if m_s.is_nan() || m_s <= 0.0 {
        return Err(CliError::usage(format!("decay needs m_s > 0, got {m_s}")));
    }
    let params = cfg.params_with_ms(m_s)?;
    let closed = decay_rate_closed(&params);
    let numeric = decay_rate_numeric(&params, FourVector::new(m_s, 0.0, 0.0, 0.0))?;
    let f = cfg.unit_factor(1);
    let mut out = cfg.echo();
    let _ = writeln!(out, "decay_rate_closed = {}", sci(closed * f));
    let _ = writeln!(out, "decay_rate_numeric = {}", sci(numeric.re() * f));
    let _ = writeln!(out, "decay_rate_numeric_error = {}", sci(numeric.abs_error * f));
    let ratio = if closed != 0.0 {
        sci(numeric.re() / closed)
    } else {
        "undefined".to_owned()
    };
    let _ = writeln!(out, "ratio_numeric_to_closed = {ratio}");
    let _ = writeln!(out, "converged = {}", numeric.converged);
    if numeric.converged {
        Ok(out)
    } else {
        Err(CliError::not_converged(out))
    }
}

pub fn loop_a(cfg: &RunConfig, s: f64, t: f64, u: f64) -> Result<String, CliError> {
    let params = cfg.params()?;
    let report = loop_a_report(&Mandelstam::new(s, t, u), &params)?;
    let f = cfg.unit_factor(-4);
    let v = report.value;
    let mut out = cfg.echo();
    let _ = writeln!(out, "re_loop_a = {}", sci(v.re() * f));
    let _ = writeln!(out, "im_loop_a = {}", sci(v.im() * f));
    let _ = writeln!(out, "abs_error = {}", sci(v.abs_error * f));
    let _ = writeln!(out, "converged = {}", v.converged);
    let _ = writeln!(out, "parity = {:?}", report.parity);
    let _ = writeln!(out, "extrapolation_residual = {}", sci(report.residual * f));
    let _ = writeln!(out, "monotone = {}", report.monotone);
    for (eps, sample) in &report.samples {
        let _ = writeln!(
            out,
            "eps_sample = {} {} {} {}",
            sci(*eps),
            sci(sample.re()),
            sci(sample.im()),
            sci(sample.abs_error)
        );
    }
    if v.converged {
        Ok(out)
    } else {
        Err(CliError::not_converged(out))
    }
}

pub struct ScanOptions {
    pub x_min: f64,
    pub x_max: f64,
    pub steps: usize,
    pub deltas: String,
    pub out: Option<PathBuf>,
    pub route: KernelRoute,
}

pub const SCAN_HEADER: &str = "x,delta_rad,sigma_closed,sigma_numeric,numeric_error";

pub fn sigma_scan_cmd(cfg: &RunConfig, opts: &ScanOptions) -> Result<String, CliError> {
    let deltas = parse_list(&opts.deltas).map_err(|e| CliError::usage(format!("--deltas: {e}")))?;
    let params = cfg.params()?;
    let out_path = opts
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("sigma_scan.csv"));
    let rows = sigma_scan(opts.x_min, opts.x_max, opts.steps, &deltas, &params, opts.route)?;
    let mut csv = String::with_capacity(rows.len() * 96);
    csv.push_str(SCAN_HEADER);
    csv.push('\n');
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            sci(r.x),
            sci(r.delta),
            sci(r.sigma_closed),
            sci(r.sigma_numeric),
            sci(r.numeric_error)
        );
    }
    write_file(&out_path, &csv)?;

    let summary = ScanSummary::from_rows(&rows);
    let mut text = String::new();
    let _ = writeln!(text, "rows = {}", rows.len());
    let _ = writeln!(text, "above_threshold_rows = {}", summary.above_threshold_rows);
    let _ = writeln!(text, "agreeing_fraction_10pct = {}", sci(summary.agreeing_fraction));
    let _ = writeln!(text, "median_ratio_closed_to_numeric = {}", sci(summary.median_ratio));
    let _ = writeln!(text, "ratio_relative_spread = {}", sci(summary.ratio_spread));
    let _ = writeln!(
        text,
        "systematic_discrepancy = {}",
        summary.agreeing_fraction < 0.8 && summary.above_threshold_rows > 0
    );
    let mut summary_path = out_path.clone().into_os_string();
    summary_path.push(".summary");
    write_file(Path::new(&summary_path), &text)?;

    let mut out = cfg.echo();
    let _ = writeln!(out, "csv = {}", out_path.display());
    out.push_str(&text);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Process {
    /// Decay when m_s > 2 m_E, pair annihilation otherwise.
    Auto,
    Decay,
    Pair,
}

pub struct EvolveOptions {
    pub grid_l: Option<f64>,
    pub n_max: Option<i32>,
    pub t_eff: Option<f64>,
    pub state: PathBuf,
    pub steps: usize,
    pub dt: f64,
    pub out: Option<PathBuf>,
    pub process: Process,
    pub numeric_rate: bool,
    pub export_generator: Option<PathBuf>,
}

pub const EVOLVE_HEADER: &str = "step,time,vacuum,one_particle,two_particle,trace,purity";

pub fn evolve(cfg: &RunConfig, opts: &EvolveOptions) -> Result<String, CliError> {
    let params = cfg.params()?;
    let grid = MomentumGrid::new(
        opts.grid_l.unwrap_or(cfg.box_length),
        opts.n_max.unwrap_or(cfg.n_max),
        opts.t_eff.unwrap_or(cfg.t_eff),
    )?;
    if grid.n_max > 3 {
        return Err(CliError::usage(
            "n_max above 3 gives a Fock space too large for dense density matrices",
        ));
    }
    let basis = FockBasis::new(grid);
    let text = fs::read_to_string(&opts.state)
        .map_err(|e| CliError::usage(format!("cannot read state {}: {e}", opts.state.display())))?;
    let mut rho = parse_state(&text, &basis, &opts.state.display().to_string())?;

    let decay_process = match opts.process {
        Process::Auto => params.m_s > 2.0 * params.m_e,
        Process::Decay => true,
        Process::Pair => false,
    };
    let gen = if decay_process {
        let source = if opts.numeric_rate {
            DecayRateSource::Numeric
        } else {
            DecayRateSource::Closed
        };
        assemble_decay(&basis, &params, source)?
    } else {
        assemble_pair(&basis, &params)?
    };
    if let Some(path) = &opts.export_generator {
        write_file(path, &generator_csv(&gen))?;
    }

    let time_factor = cfg.unit_factor(-1);
    let out_path = opts
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("evolve.csv"));
    let mut csv = String::from(EVOLVE_HEADER);
    csv.push('\n');
    let mut row = |step: usize, rho: &DensityMatrix| {
        let pops = rho.sector_populations(&basis);
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            step,
            sci(step as f64 * opts.dt * time_factor),
            sci(pops[0]),
            sci(pops[1]),
            sci(pops[2]),
            sci(rho.trace()),
            sci(rho.purity())
        );
    };
    row(0, &rho);
    for step in 1..=opts.steps {
        rho = evolve_step(&gen, &rho, opts.dt).map_err(|e| match e {
            gksl::Error::ValidityGuard(v) => CliError::usage(format!(
                "step {step}: ‖L[ρ]‖·dt = {v:.3e} exceeds the validity bound; reduce --dt"
            )),
            other => other.into(),
        })?;
        row(step, &rho);
    }
    write_file(&out_path, &csv)?;

    let mut out = cfg.echo();
    let _ = writeln!(out, "process = {}", if decay_process { "decay" } else { "pair" });
    let _ = writeln!(out, "dimension = {}", basis.dim());
    let _ = writeln!(out, "lindblad_operators = {}", gen.lindblad_ops.len());
    let _ = writeln!(out, "csv = {}", out_path.display());
    let _ = writeln!(out, "converged = {}", gen.converged);
    if gen.converged {
        Ok(out)
    } else {
        Err(CliError::not_converged(out))
    }
}

/// Nonzero entries of `M` and of every `L_k`, one per line.
fn generator_csv(gen: &GeneratorMatrices) -> String {
    let mut csv = String::from("operator,row,col,re,im\n");
    for &(i, j, v) in gen.hamiltonian.entries() {
        let _ = writeln!(csv, "H,{i},{j},{},{}", sci(v.re), sci(v.im));
    }
    for (k, l) in gen.lindblad_ops.iter().enumerate() {
        for &(i, j, v) in l.entries() {
            let _ = writeln!(csv, "L{k},{i},{j},{},{}", sci(v.re), sci(v.im));
        }
    }
    csv
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    All,
    Sumrule,
    Poincare,
    Gksl,
}

/// Number of random density matrices in the structural suite.
pub const GKSL_SAMPLES: usize = 100;
/// Rank of the random density matrices.
pub const GKSL_RANK: usize = 16;
pub const TRACE_TOLERANCE: f64 = 1e-10;
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;
pub const KERNEL_TOLERANCE: f64 = 1e-8;
pub const POINCARE_ELEMENTS: usize = 20;

struct CheckLine {
    name: String,
    passed: bool,
    metric: f64,
    threshold: f64,
}

impl CheckLine {
    fn render(&self) -> String {
        format!(
            "check={} status={} metric={} threshold={}\n",
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            sci(self.metric),
            sci(self.threshold)
        )
    }
}

pub fn check(cfg: &RunConfig, suite: Suite) -> Result<String, CliError> {
    let mut lines = Vec::new();
    if matches!(suite, Suite::All | Suite::Sumrule) {
        lines.extend(sumrule_suite(cfg)?);
    }
    if matches!(suite, Suite::All | Suite::Gksl) {
        lines.extend(gksl_suite(cfg)?);
    }
    if matches!(suite, Suite::All | Suite::Poincare) {
        lines.extend(poincare_checks(cfg)?);
    }
    let mut out = cfg.echo();
    for l in &lines {
        out.push_str(&l.render());
    }
    if lines.iter().all(|l| l.passed) {
        Ok(out)
    } else {
        Err(CliError::invariant(out))
    }
}

fn grid_momenta(cfg: &RunConfig) -> Result<Vec<[f64; 3]>, CliError> {
    let grid = MomentumGrid::new(cfg.box_length, cfg.n_max, cfg.t_eff)?;
    Ok(grid.modes().into_iter().map(|n| grid.momentum(n)).collect())
}

fn sumrule_suite(cfg: &RunConfig) -> Result<Vec<CheckLine>, CliError> {
    let params = cfg.params()?;
    if params.m_s <= 0.0 {
        return Err(CliError::usage("the sum rule needs m_s > 0"));
    }
    let report = sum_rule_check(&params, &grid_momenta(cfg)?)?;
    Ok(vec![CheckLine {
        name: "sumrule".into(),
        passed: report.passed,
        metric: report.max_relative_deviation,
        threshold: SUM_RULE_TOLERANCE,
    }])
}

/// Decay generator at `m_s = 3 m_E`, pair generator at the configured mass
/// (the default one if the configured mass allows single-particle decay).
fn gksl_suite(cfg: &RunConfig) -> Result<Vec<CheckLine>, CliError> {
    let basis = FockBasis::new(MomentumGrid::new(cfg.box_length, cfg.n_max, cfg.t_eff)?);
    let decay_params = cfg.params_with_ms(3.0 * cfg.m_e)?;
    let m_s = cfg.m_s_or_default();
    let pair_ms = if m_s > 0.0 && m_s < 2.0 * cfg.m_e {
        m_s
    } else {
        crate::config::DEFAULT_M_S * cfg.m_e
    };
    let pair_params = cfg.params_with_ms(pair_ms)?;
    let generators = [
        ("decay", assemble_decay(&basis, &decay_params, DecayRateSource::Closed)?),
        ("pair", assemble_pair(&basis, &pair_params)?),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let states: Vec<DensityMatrix> = (0..GKSL_SAMPLES)
        .map(|_| DensityMatrix::random(basis.dim(), GKSL_RANK, &mut rng))
        .collect();
    let mut lines = Vec::new();
    for (name, gen) in &generators {
        let (mut trace, mut herm) = (0.0_f64, 0.0_f64);
        for rho in &states {
            let l = apply_generator(gen, rho)?;
            trace = trace.max(l.trace().norm());
            herm = herm.max(hermiticity_defect(&l));
        }
        let scale = gen.kernel_scale();
        let kernel = if scale > 0.0 {
            (-gen.min_kernel_eigenvalue / scale).max(0.0)
        } else {
            0.0
        };
        lines.push(CheckLine {
            name: format!("gksl_{name}_trace"),
            passed: trace <= TRACE_TOLERANCE,
            metric: trace,
            threshold: TRACE_TOLERANCE,
        });
        lines.push(CheckLine {
            name: format!("gksl_{name}_hermiticity"),
            passed: herm <= HERMITICITY_TOLERANCE,
            metric: herm,
            threshold: HERMITICITY_TOLERANCE,
        });
        lines.push(CheckLine {
            name: format!("gksl_{name}_kernel_psd"),
            passed: kernel <= KERNEL_TOLERANCE,
            metric: kernel,
            threshold: KERNEL_TOLERANCE,
        });
    }
    Ok(lines)
}

fn poincare_checks(cfg: &RunConfig) -> Result<Vec<CheckLine>, CliError> {
    let m_s = cfg.m_s_or_default();
    if m_s.is_nan() || m_s <= 0.0 {
        return Err(CliError::usage("the Poincaré suite needs m_s > 0"));
    }
    let decay_ms = if m_s > 2.0 * cfg.m_e { m_s } else { 3.0 * cfg.m_e };
    let decay_params = cfg.params_with_ms(decay_ms)?;
    let pair_params: ModelParams = cfg.params_with_ms(m_s)?;
    let reports = poincare_suite(&decay_params, &pair_params, POINCARE_ELEMENTS, cfg.seed)?;
    Ok(reports
        .iter()
        .enumerate()
        .map(|(i, r)| CheckLine {
            name: format!("poincare_{i:02}"),
            passed: r.passed(),
            metric: r.worst_deviation(),
            threshold: SIGMA_LEVEL,
        })
        .collect())
}
