//! Acceptance suite: one PASS/FAIL line per criterion. Run with
//! `cargo test -p gksl-cli --test acceptance --release`.

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode, Output};
use std::time::{Duration, Instant};

use gksl::coefficients::{decay_rate_closed, decay_rate_numeric, loop_a};
use gksl::lindblad::{sum_rule_check, MomentumGrid, SUM_RULE_TOLERANCE};
use gksl::probability::{
    annihilation_probability, sigma_scan, KernelRoute, Regulators, ScanRow, ScanSummary, SuperposedPairState,
};
use gksl::symmetry::{poincare_suite, RELATIVE_FLOOR, SIGMA_LEVEL};
use gksl::{FourVector, LoopValue, Mandelstam, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BIN: &str = env!("CARGO_BIN_EXE_gksl");

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

type Criterion = fn() -> Outcome;

fn gksl(args: &[&str], dir: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .output()
        .expect("failed to launch the gksl binary")
}

fn stdout_value(out: &Output, key: &str) -> Option<String> {
    let text = String::from_utf8_lossy(&out.stdout);
    let prefix = format!("{key} = ");
    text.lines().find_map(|l| l.strip_prefix(&prefix).map(str::to_owned))
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

/// Parameters of the annihilation scan: `λ/2m_E = 0.1`, `m_s/2m_E = 0.01`.
fn scan_params(samples: usize) -> ModelParams {
    ModelParams::new(0.2, 0.02, 1.0).with_samples(samples)
}

fn scan_rows(samples: usize) -> Vec<ScanRow> {
    sigma_scan(
        0.5,
        5.0,
        50,
        &[0.0, PI / 2.0, PI],
        &scan_params(samples),
        KernelRoute::MonteCarlo,
    )
    .expect("scan failed")
}

fn low_energy_box_limit() -> Outcome {
    let start = Instant::now();
    let params = ModelParams::new(0.2, 0.0, 1.0);
    let v = loop_a(&Mandelstam::new(0.0, 0.0, 0.0), &params).expect("loop_a failed");
    let expected = 3.0 / (4.0 * PI).powi(2);
    let rel = (v.im() - expected).abs() / expected;

    let dir = tempfile::tempdir().unwrap();
    let out = gksl(&["loop-a", "--ms", "0", "--s", "0", "--t", "0", "--u", "0"], dir.path());
    let cli_im: f64 = stdout_value(&out, "im_loop_a")
        .and_then(|v| v.parse().ok())
        .unwrap_or(f64::NAN);
    let cli_rel = (cli_im - expected).abs() / expected;
    let elapsed = start.elapsed();
    Outcome::new(
        rel <= 1e-6 && v.re().abs() <= 1e-8 && cli_rel <= 1e-6 && out.status.success() && within(elapsed, 10.0),
        format!(
            "Im = {:.10e} (relative error {rel:.2e}, CLI {cli_rel:.2e}), Re = {:.2e}, {:.2} s",
            v.im(),
            v.re(),
            elapsed.as_secs_f64()
        ),
    )
}

fn decay_threshold() -> Outcome {
    let m_e = 1.0;
    let below = [0.5, 1.0, 1.9, 1.999_999, 2.0];
    let above = [2.000_001, 2.01, 2.5, 3.0, 10.0];
    let mut ok = true;
    let mut closed_time = Duration::ZERO;
    let mut numeric_time = Duration::ZERO;
    for &x in below.iter().chain(&above) {
        let params = ModelParams::new(0.2, x * m_e, m_e);
        let t = Instant::now();
        let closed = decay_rate_closed(&params);
        closed_time += t.elapsed();
        let t = Instant::now();
        let numeric = decay_rate_numeric(&params, FourVector::new(x * m_e, 0.0, 0.0, 0.0)).expect("decay failed");
        numeric_time += t.elapsed();
        let numeric = numeric.re();
        ok &= if x <= 2.0 {
            closed == 0.0 && numeric == 0.0
        } else {
            closed > 0.0 && numeric > 0.0
        };
    }
    Outcome::new(
        ok && within(closed_time, 1.0) && within(numeric_time, 60.0),
        format!(
            "{} masses at or below 2 m_E give exactly 0, {} above give positive rates; closed {:.1e} s, numeric {:.2} s",
            below.len(),
            above.len(),
            closed_time.as_secs_f64(),
            numeric_time.as_secs_f64()
        ),
    )
}

fn decay_ratio_audit() -> Outcome {
    let params = ModelParams::new(1.0, 1.0, 0.1);
    let closed = decay_rate_closed(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let rest = FourVector::new(1.0, 0.0, 0.0, 0.0);
    let mut ratios: Vec<LoopValue> = Vec::new();
    for _ in 0..5 {
        let rapidity = rng.gen_range(0.1..2.0);
        let raw: [f64; 3] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let norm = raw.iter().map(|c| c * c).sum::<f64>().sqrt();
        let axis = raw.map(|c| c / norm);
        let p = rest.boost(rapidity, axis).expect("boost failed");
        let numeric = decay_rate_numeric(&params, p).expect("decay failed");
        ratios.push(numeric.scale(gksl::C64::new(1.0 / closed, 0.0)));
    }
    let constant = ratios
        .iter()
        .all(|r| r.agrees_with(&ratios[0], SIGMA_LEVEL, RELATIVE_FLOOR));
    let shown: Vec<String> = ratios.iter().map(|r| format!("{:.12}", r.re())).collect();
    Outcome::new(constant, format!("numeric/closed = [{}]", shown.join(", ")))
}

fn sigma_at(rows: &[ScanRow], delta: f64, closed: bool) -> Vec<(f64, f64)> {
    rows.iter()
        .filter(|r| (r.delta - delta).abs() < 1e-12)
        .map(|r| (r.x, if closed { r.sigma_closed } else { r.sigma_numeric }))
        .collect()
}

/// Shape checks on one σ column; returns a description of the first
/// violation.
fn scan_shape(rows: &[ScanRow], closed: bool) -> Result<(), String> {
    let curves: Vec<Vec<(f64, f64)>> = [0.0, PI / 2.0, PI].iter().map(|&d| sigma_at(rows, d, closed)).collect();
    for curve in &curves {
        if let Some((x, s)) = curve.iter().find(|(x, s)| *x < 1.0 && *s != 0.0) {
            return Err(format!("σ({x:.3}) = {s:.3e} below threshold"));
        }
        if let Some((x, _)) = curve.iter().find(|(x, s)| *x > 1.0 && *s <= 0.0) {
            return Err(format!("σ({x:.3}) not positive above threshold"));
        }
        let tail: Vec<f64> = curve.iter().filter(|(x, _)| *x >= 3.0).map(|(_, s)| *s).collect();
        if let Some(w) = tail.windows(2).find(|w| w[1] >= w[0]) {
            return Err(format!("σ not decreasing for x >= 3 ({:.4e} then {:.4e})", w[0], w[1]));
        }
    }
    let (peak, _) = curves[0]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("empty scan");
    let near_peak = peak.saturating_sub(1)..=(peak + 1).min(curves[0].len() - 1);
    for ((&(x, s0), &(_, s1)), &(_, s2)) in curves[0][near_peak.clone()]
        .iter()
        .zip(&curves[1][near_peak.clone()])
        .zip(&curves[2][near_peak])
    {
        if !(s0 > s1 && s1 > s2) {
            return Err(format!(
                "phase ordering fails at x = {x:.3}: {s0:.4e}, {s1:.4e}, {s2:.4e}"
            ));
        }
    }
    Ok(())
}

fn qualitative_scan() -> Outcome {
    let start = Instant::now();
    let rows = scan_rows(100_000);
    let elapsed = start.elapsed();
    let numeric = scan_shape(&rows, false);
    let closed = scan_shape(&rows, true);
    let describe = |r: &Result<(), String>| r.as_ref().map_or_else(|e| e.clone(), |_| "ok".into());
    Outcome::new(
        numeric.is_ok() && closed.is_ok() && within(elapsed, 300.0),
        format!(
            "{} rows in {:.2} s; numeric: {}; closed form: {}",
            rows.len(),
            elapsed.as_secs_f64(),
            describe(&numeric),
            describe(&closed)
        ),
    )
}

fn closed_vs_oracle() -> Outcome {
    let base = ScanSummary::from_rows(&scan_rows(100_000));
    let refined = ScanSummary::from_rows(&scan_rows(400_000));
    let agrees = |s: &ScanSummary| s.agreeing_fraction >= 0.8;
    let median_shift = (refined.median_ratio - base.median_ratio).abs() / base.median_ratio;
    let stable = agrees(&base) == agrees(&refined)
        && base.above_threshold_rows == refined.above_threshold_rows
        && median_shift < 0.01
        && (refined.ratio_spread - base.ratio_spread).abs() < 0.01;
    let verdict = if agrees(&base) {
        "agreement".to_owned()
    } else {
        format!(
            "systematic discrepancy, median closed/numeric = {:.4}",
            base.median_ratio
        )
    };
    Outcome::new(
        stable,
        format!(
            "{verdict}; agreeing fraction {:.3} -> {:.3}, median shift {median_shift:.2e}, spread {:.4} -> {:.4} under 4x samples",
            base.agreeing_fraction, refined.agreeing_fraction, base.ratio_spread, refined.ratio_spread
        ),
    )
}

fn structural_suite() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let out = gksl(&["check", "--suite", "gksl"], dir.path());
    let elapsed = start.elapsed();
    let text = String::from_utf8_lossy(&out.stdout);
    let checks: Vec<&str> = text.lines().filter(|l| l.starts_with("check=")).collect();
    let failed = checks.iter().filter(|l| !l.contains("status=PASS")).count();
    Outcome::new(
        out.status.success() && checks.len() == 6 && failed == 0 && within(elapsed, 120.0),
        format!(
            "{} checks over 100 random states on the 27-mode grid, {failed} failed, {:.1} s",
            checks.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn unitarity_sum_rule() -> Outcome {
    let start = Instant::now();
    let params = ModelParams::new(0.2, 3.0, 1.0);
    let grid = MomentumGrid::new(4.0, 1, 10.0).unwrap();
    let momenta: Vec<[f64; 3]> = grid.modes().into_iter().map(|n| grid.momentum(n)).collect();
    let report = sum_rule_check(&params, &momenta).expect("sum rule failed");
    let elapsed = start.elapsed();
    Outcome::new(
        report.passed && within(elapsed, 120.0),
        format!(
            "max relative deviation {:.2e} (tolerance {SUM_RULE_TOLERANCE}) over {} momenta, {:.2} s",
            report.max_relative_deviation,
            report.entries.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn poincare() -> Outcome {
    let start = Instant::now();
    let decay = ModelParams::new(0.2, 3.0, 1.0);
    let pair = ModelParams::new(0.2, 0.02, 1.0);
    let reports = poincare_suite(&decay, &pair, 20, 2024).expect("Poincaré suite failed");
    let elapsed = start.elapsed();
    let failed = reports.iter().filter(|r| !r.passed()).count();
    let worst = reports.iter().map(|r| r.worst_deviation()).fold(0.0, f64::max);
    Outcome::new(
        reports.len() == 20 && failed == 0 && within(elapsed, 300.0),
        format!(
            "{} elements, {failed} failed, worst deviation {worst:.2} sigma, {:.1} s",
            reports.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn interference_linearity() -> Outcome {
    let params = scan_params(100_000);
    let regulators = Regulators::default();
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for x in [1.2, 1.6, 2.0, 3.0, 4.5] {
        let p = |delta: f64| {
            let state = SuperposedPairState::at_energy(x, delta, &params).unwrap();
            annihilation_probability(&state, &params, &regulators, KernelRoute::MonteCarlo).unwrap()
        };
        let (p0, p_half, p_pi) = (p(0.0), p(PI / 2.0), p(PI));
        let mean = 0.5 * (p0.re() + p_pi.re());
        let combined = (p_half.abs_error.powi(2) + 0.25 * (p0.abs_error.powi(2) + p_pi.abs_error.powi(2))).sqrt();
        let gap = (p_half.re() - mean).abs();
        let allowed = SIGMA_LEVEL * combined + RELATIVE_FLOOR * mean.abs();
        ok &= gap <= allowed;
        worst = worst.max(if allowed > 0.0 { gap / allowed } else { 0.0 });
    }
    Outcome::new(
        ok,
        format!("worst |P(π/2) - mean| / allowance = {worst:.3e} at 5 energies"),
    )
}

fn determinism() -> Outcome {
    let state = "2 1 0 0 -1 0 0 1 0\n2 0 1 0 0 -1 0 1 0\n";
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("state.txt"), state).unwrap();
        let scan = gksl(&["sigma-scan", "--steps", "20", "--out", "scan.csv"], dir.path());
        let evolve = gksl(
            &[
                "evolve",
                "--ms",
                "3",
                "--state",
                "state.txt",
                "--steps",
                "20",
                "--dt",
                "0.05",
                "--out",
                "evolve.csv",
            ],
            dir.path(),
        );
        if !scan.status.success() || !evolve.status.success() {
            return Outcome::new(false, "a CLI run failed");
        }
        let read = |name: &str| std::fs::read(dir.path().join(name)).unwrap();
        outputs.push((read("scan.csv"), read("scan.csv.summary"), read("evolve.csv")));
    }
    let identical = outputs[0] == outputs[1];
    Outcome::new(
        identical,
        format!(
            "sigma-scan CSV ({} bytes), summary and evolve CSV ({} bytes) {} across runs",
            outputs[0].0.len(),
            outputs[0].2.len(),
            if identical { "identical" } else { "differ" }
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 10] = [
        ("low-energy box limit", low_energy_box_limit),
        ("decay threshold", decay_threshold),
        ("decay ratio audit", decay_ratio_audit),
        ("qualitative sigma scan", qualitative_scan),
        ("closed form vs oracle", closed_vs_oracle),
        ("GKSL structural suite", structural_suite),
        ("unitarity sum rule", unitarity_sum_rule),
        ("Poincaré suite", poincare),
        ("interference linearity", interference_linearity),
        ("CLI determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Outcome::new(false, "panicked"));
        if !outcome.passed {
            failures += 1;
        }
        println!(
            "{} criterion {:>2} ({name}): {}",
            if outcome.passed { "PASS" } else { "FAIL" },
            i + 1,
            outcome.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
