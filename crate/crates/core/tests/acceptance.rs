//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach the output; exits nonzero on failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use fks_core::blowup::{self, Classification, ClassifyCriteria, FitOptions};
use fks_core::cli::{self, RunConfig, Suite, SuiteStatus, SweepConfig};
use fks_core::integrator::{self, IntegratorConfig, StepInfo, Termination};
use fks_core::model::{self, KellerSegel, Scenario, State, SystemParams};
use fks_core::spectral::{Grid, SpectralField};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn suite(s: Suite) -> Outcome {
    let report = match cli::verify(&[s], None) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("error: {e}")),
    };
    let r = &report.results[0];
    let checks: Vec<String> = r
        .checks
        .iter()
        .map(|c| format!("{} = {:.3e} (tol {:.0e})", c.name, c.measured, c.tolerance))
        .collect();
    outcome(
        r.status == SuiteStatus::Pass,
        format!("{}; {}", checks.join(", "), r.detail),
    )
}

fn config(text: &str) -> RunConfig {
    RunConfig::from_kv(&cli::parse_kv(text).expect("kv")).expect("config")
}

fn chaos_sweep() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let text = format!(
        "scenario = A-sin8\nalpha = 1\nbeta = 1\nn = 1024\nt_end = 30\ndealias = true\nstride = 5\n\
         sweep_param = chi\nsweep_values = 5, 20\nout = {}",
        dir.path().display()
    );
    let sweep = SweepConfig::from_kv(&cli::parse_kv(&text).expect("kv")).expect("sweep");
    let summary = match cli::sweep(&sweep) {
        Ok(s) => s,
        Err(e) => return outcome(false, format!("error: {e}")),
    };
    let dev = |i: usize| {
        summary.rows[i]
            .result
            .as_ref()
            .map(|s| (s.deviation_inf, s.termination, s.tail_ratio))
    };
    match (dev(0), dev(1)) {
        (Ok((d5, t5, r5)), Ok((d20, t20, r20))) => outcome(
            d5 <= 0.05 && d20 >= 0.5 && t5 == Termination::ReachedTEnd && t20 == Termination::ReachedTEnd,
            format!(
                "chi=5: |u-<u>|inf = {d5:.3e} (<= 0.05), chi=20: {d20:.3} (>= 0.5); tail ratios {r5:.1e}, {r20:.1e}; dealiased, explicit"
            ),
        ),
        (a, b) => outcome(false, format!("run failed: {:?} / {:?}", a.err(), b.err())),
    }
}

fn blowup_fit() -> Outcome {
    let cfg = config(
        "scenario = C-sin10\nalpha = 0.5\nbeta = 1\nchi = 20\nn = 8192\nt_end = 0.11\nrel_tol = 1e-6\nabs_tol = 1e-9",
    );
    let out = match cli::run(&cfg, None) {
        Ok(o) => o,
        Err(e) => return outcome(false, format!("error: {e}")),
    };
    let bounded = out.termination == Termination::ReachedTEnd;
    let report = blowup::classify(&out.dxu_series(), bounded, &ClassifyCriteria::default());
    let Some(fit) = report.fit else {
        return outcome(false, format!("no fit: {}", report.reason));
    };
    let ok = report.classification == Classification::Singular
        && (0.09..=0.14).contains(&fit.a2)
        && (1.5..=3.0).contains(&fit.a3);
    outcome(
        ok,
        format!(
            "{}; a1 = {:.4}, a2 = {:.5} in [0.09, 0.14], a3 = {:.3} in [1.5, 3], rms = {:.2e}, growth = {:.3e}; n = 8192, T = 0.11, explicit",
            report.classification.as_str(),
            fit.a1,
            fit.a2,
            fit.a3,
            fit.rms_residual,
            report.growth.unwrap_or(f64::NAN)
        ),
    )
}

fn non_singular_contrast() -> Outcome {
    let cfg = config("scenario = D-gauss\nalpha = 0.5\nbeta = 1\nchi = 10\nn = 8192\nt_end = 0.9");
    let out = match cli::run(&cfg, None) {
        Ok(o) => o,
        Err(e) => return outcome(false, format!("error: {e}")),
    };
    let series = out.dxu_series();
    let bounded = out.termination == Termination::ReachedTEnd;
    let report = blowup::classify(&series, bounded, &ClassifyCriteria::default());
    // u0 is constant, so |d_x u| starts at 0; measure growth from t = 0.09.
    let (t0, y0) = series
        .iter()
        .copied()
        .find(|s| s.0 >= 0.09)
        .unwrap_or(series[0]);
    let ymax = series.iter().map(|s| s.1).fold(0.0, f64::max);
    let growth = ymax / y0;
    outcome(
        report.classification != Classification::Singular && growth >= 10.0,
        format!(
            "{} ({}); max |d_x u| = {ymax:.3e} is {growth:.3e}x its value {y0:.3e} at t = {t0:.3} (>= 10); t_final = {}, n = 8192",
            report.classification.as_str(),
            report.reason,
            out.final_state.t
        ),
    )
}

fn random_field(grid: &Grid, rng: &mut ChaCha8Rng, offset: f64) -> SpectralField {
    let values: Vec<f64> = (0..grid.n())
        .map(|_| offset + rng.random_range(-1.0..1.0))
        .collect();
    SpectralField::forward(grid, &values).expect("sized")
}

fn max_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn sup(a: &SpectralField) -> f64 {
    a.values().iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn random_params(rng: &mut ChaCha8Rng) -> SystemParams {
    SystemParams {
        alpha: rng.random_range(0.3..2.0),
        beta: rng.random_range(0.5..2.0),
        mu: rng.random_range(0.1..3.0),
        nu: rng.random_range(0.1..3.0),
        lambda: rng.random_range(0.1..3.0),
        r: rng.random_range(0.0..2.0),
        chi: rng.random_range(0.0..20.0),
    }
}

/// Condensed property suite: linearity, equivariance, determinism, the
/// dense-convolution oracle and fit equivariance on seeded random inputs.
/// The full randomized versions live in `tests/properties.rs`.
fn properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures: Vec<String> = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok && !failures.iter().any(|f| f == name) {
            failures.push(name.to_string());
        }
    };
    let g64 = Grid::new(64).unwrap();
    let g32 = Grid::new(32).unwrap();
    for _ in 0..20 {
        // linearity of every multiplier
        let (f, h) = (
            random_field(&g64, &mut rng, 0.0),
            random_field(&g64, &mut rng, 0.0),
        );
        let (a, b) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let combo = &(&f * a) + &(&h * b);
        let ops: [fn(&SpectralField) -> SpectralField; 4] = [
            |x| x.fractional_laplacian(1.3).unwrap(),
            |x| x.hilbert(),
            |x| x.drift_operator(1.6).unwrap(),
            |x| x.derivative(),
        ];
        for op in ops {
            let lhs = op(&combo);
            let rhs = &(&op(&f) * a) + &(&op(&h) * b);
            check(
                "linearity",
                max_diff(&lhs, &rhs)
                    <= 1e-12 * (1.0 + sup(&rhs) + sup(&op(&f)) * a.abs() + sup(&op(&h)) * b.abs()),
            );
            check("real-valuedness", op(&f).hermitian_defect() == 0.0);
        }

        // translation equivariance of the RHS
        let p = random_params(&mut rng);
        let s = State::new(
            random_field(&g64, &mut rng, 2.5),
            random_field(&g64, &mut rng, 2.5),
            0.0,
        )
        .unwrap();
        let shift = rng.random_range(1..64i64);
        let moved = State::new(s.u.shift_cells(shift), s.v.shift_cells(shift), 0.0).unwrap();
        let (du, dv) = model::rhs(&s, &p).unwrap();
        let (du_m, dv_m) = model::rhs(&moved, &p).unwrap();
        check(
            "translation equivariance",
            max_diff(&du.shift_cells(shift), &du_m) <= 1e-12 * (1.0 + sup(&du)),
        );
        check(
            "translation equivariance",
            max_diff(&dv.shift_cells(shift), &dv_m) <= 1e-12 * (1.0 + sup(&dv)),
        );

        // dense convolution oracle at n = 32
        let s = State::new(
            random_field(&g32, &mut rng, 2.5),
            random_field(&g32, &mut rng, 2.5),
            0.0,
        )
        .unwrap();
        let (du, dv) = model::rhs(&s, &p).unwrap();
        let n = 32usize;
        let (uh, vh) = (s.u.coeffs(), s.v.coeffs());
        let kf = |i: usize| {
            if i < n / 2 {
                i as f64
            } else {
                i as f64 - n as f64
            }
        };
        let wh: Vec<Complex64> = (0..n)
            .map(|i| {
                if i == 0 || i == n / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, -kf(i).signum() * kf(i).abs().powf(p.beta - 1.0)) * vh[i]
                }
            })
            .collect();
        let mut uw = vec![Complex64::new(0.0, 0.0); n];
        let mut uu = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n {
                uw[(i + j) % n] += uh[i] * wh[j];
                uu[(i + j) % n] += uh[i] * uh[j];
            }
        }
        let scale = 1.0 + sup(&du) + sup(&dv);
        for i in 0..n {
            let k = kf(i);
            let ik = if i == n / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k)
            };
            let du_ref =
                -p.mu * k.abs().powf(p.alpha) * uh[i] + p.chi * ik * uw[i] + p.r * (uh[i] - uu[i]);
            let dv_ref = -(p.nu * k.abs().powf(p.beta) + p.lambda) * vh[i] + uh[i];
            check(
                "dense convolution oracle",
                (du.coeffs()[i] - du_ref).norm() <= 1e-12 * scale,
            );
            check(
                "dense convolution oracle",
                (dv.coeffs()[i] - dv_ref).norm() <= 1e-12 * scale,
            );
        }

        // fit scale and shift equivariance
        let (a1, a2, a3) = (
            rng.random_range(0.1..10.0),
            rng.random_range(0.5..2.0),
            rng.random_range(0.5..3.0),
        );
        let (c, dt) = (rng.random_range(0.01..100.0), rng.random_range(-5.0..5.0));
        let base: Vec<(f64, f64)> = (0..120)
            .map(|i| {
                let t = 0.85 * a2 * i as f64 / 119.0;
                (t, a1 * (a2 - t).powf(-a3))
            })
            .collect();
        let opts = FitOptions::default();
        let f0 = blowup::fit_blowup(&base, &opts).unwrap();
        check("exact-model residual", f0.rms_residual <= 1e-10);
        let scaled: Vec<_> = base.iter().map(|&(t, y)| (t, c * y)).collect();
        let fs = blowup::fit_blowup(&scaled, &opts).unwrap();
        check(
            "fit scale equivariance",
            (fs.a1 / f0.a1 - c).abs() <= 1e-8 * c
                && (fs.a2 - f0.a2).abs() <= 1e-8
                && (fs.a3 - f0.a3).abs() <= 1e-8,
        );
        let shifted: Vec<_> = base.iter().map(|&(t, y)| (t + dt, y)).collect();
        let fm = blowup::fit_blowup(&shifted, &opts).unwrap();
        check(
            "fit shift equivariance",
            (fm.a2 - f0.a2 - dt).abs() <= 1e-8
                && (fm.a1 - f0.a1).abs() <= 1e-8 * f0.a1
                && (fm.a3 - f0.a3).abs() <= 1e-8,
        );
    }

    // determinism and the u-mean invariant on a short nonlinear run
    let grid = Grid::new(128).unwrap();
    let p = SystemParams {
        r: 0.0,
        ..SystemParams::reduced(1.0, 1.0, 5.0)
    };
    let system = KellerSegel::new(p, &grid, false).unwrap();
    let s0 = model::make_initial(&Scenario::Sin8, &grid, 0).unwrap();
    let trace = || {
        let mut out = Vec::new();
        let mut obs = |s: &State, _: &StepInfo| out.push(s.to_vector());
        integrator::integrate(
            &system,
            &s0,
            1.0,
            &IntegratorConfig::default(),
            &mut [&mut obs],
        )
        .unwrap();
        out
    };
    let (a, b) = (trace(), trace());
    check("determinism", a == b);
    let m0 = a[0][0].re;
    check(
        "u-mean conservation",
        a.iter().all(|y| (y[0].re - m0).abs() <= 1e-12),
    );

    if failures.is_empty() {
        outcome(true, "linearity, real-valuedness, translation equivariance, dense convolution (n = 32), fit equivariance, determinism, u-mean conservation")
    } else {
        outcome(false, format!("failed: {}", failures.join(", ")))
    }
}

fn main() -> ExitCode {
    type Criterion = (u32, &'static str, Duration, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        (1, "operator symbols", Duration::from_secs(1), || {
            suite(Suite::Symbols)
        }),
        (2, "linear exactness", Duration::from_secs(1), || {
            suite(Suite::Linear)
        }),
        (3, "mass law", Duration::from_secs(60), || {
            suite(Suite::Mass)
        }),
        (4, "logistic mass ODE", Duration::from_secs(1), || {
            suite(Suite::Logistic)
        }),
        (5, "steady state", Duration::from_secs(10), || {
            suite(Suite::Steady)
        }),
        (6, "Wiener decay", Duration::from_secs(60), || {
            suite(Suite::Wiener)
        }),
        (
            7,
            "transition to chaos",
            Duration::from_secs(600),
            chaos_sweep,
        ),
        (8, "blow-up fit", Duration::from_secs(900), blowup_fit),
        (
            9,
            "non-singular contrast",
            Duration::from_secs(900),
            non_singular_contrast,
        ),
        (10, "constants regression", Duration::from_secs(10), || {
            suite(Suite::Constants)
        }),
        (11, "property suite", Duration::from_secs(300), properties),
    ];
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let pass = out.passed && took <= budget;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {name}: {} [{:.2}s / {}s] {}",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget.as_secs(),
            out.detail
        );
    }
    println!("acceptance: {} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
