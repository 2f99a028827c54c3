//! Least-squares fit of the singular ansatz `y(t) = a1 / (a2 - t)^a3` and
//! run classification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    MaxIterations,
    /// The iterate ran off to `a3 <= 0` or an unbounded `a2`; the ansatz
    /// does not describe the data.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FitSpace {
    /// Residuals `log y - log model` (default).
    #[default]
    Log,
    /// Log fit followed by a refinement on `y - model`.
    LinearRefined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub gradient_tol: f64,
    pub space: FitSpace,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 200,
            gradient_tol: 1e-10,
            space: FitSpace::Log,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupFit {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// RMS of the log-space residuals at the returned parameters.
    pub rms_residual: f64,
    pub window: [f64; 2],
    pub samples: usize,
    pub iterations: usize,
    pub status: FitStatus,
}

impl BlowupFit {
    pub fn converged(&self) -> bool {
        self.status == FitStatus::Converged
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.a1 / (self.a2 - t).powf(self.a3)
    }
}

/// Which samples enter the fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowRule {
    All,
    /// Drop the last `drop_last` samples, then keep the trailing `fraction`.
    Trailing {
        fraction: f64,
        drop_last: usize,
    },
    /// Samples with `t_lo <= t <= t_hi`.
    Range {
        t_lo: f64,
        t_hi: f64,
    },
}

impl Default for WindowRule {
    fn default() -> Self {
        WindowRule::Trailing {
            fraction: 0.6,
            drop_last: 2,
        }
    }
}

pub fn select_window(samples: &[(f64, f64)], rule: WindowRule) -> Vec<(f64, f64)> {
    match rule {
        WindowRule::All => samples.to_vec(),
        WindowRule::Trailing {
            fraction,
            drop_last,
        } => {
            let usable = samples.len().saturating_sub(drop_last);
            let keep = ((usable as f64) * fraction.clamp(0.0, 1.0)).round() as usize;
            samples[usable - keep..usable].to_vec()
        }
        WindowRule::Range { t_lo, t_hi } => samples
            .iter()
            .copied()
            .filter(|&(t, _)| t >= t_lo && t <= t_hi)
            .collect(),
    }
}

const MIN_SAMPLES: usize = 8;

/// Fit `a1 / (a2 - t)^a3` to `(t, y)` samples (already windowed) by damped
/// Gauss-Newton on `(log a1, a2, a3)` in log space.
pub fn fit_blowup(samples: &[(f64, f64)], opts: &FitOptions) -> Result<BlowupFit> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "blow-up fit needs at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    for w in samples.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(Error::invalid("sample times must be strictly increasing"));
        }
    }
    if let Some(&(t, y)) = samples.iter().find(|&&(_, y)| !(y > 0.0 && y.is_finite())) {
        return Err(Error::invalid(format!(
            "blow-up fit needs positive finite data, got y = {y} at t = {t}"
        )));
    }
    let t_lo = samples[0].0;
    let t_hi = samples[samples.len() - 1].0;
    let ts: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let log_y: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();

    // Start: a2 a quarter window past the end, then a line through
    // (log(a2 - t), log y).
    let a2_0 = t_hi + (t_hi - t_lo) / 4.0;
    let xs: Vec<f64> = ts.iter().map(|t| (a2_0 - t).ln()).collect();
    let (intercept, slope) = linear_regression(&xs, &log_y);
    let theta0 = [intercept, a2_0, -slope];

    let log_residuals = |theta: &[f64; 3]| -> Option<(Vec<f64>, Vec<[f64; 3]>)> {
        let [la1, a2, a3] = *theta;
        if !(a2 > t_hi) {
            return None;
        }
        let mut r = Vec::with_capacity(ts.len());
        let mut jac = Vec::with_capacity(ts.len());
        for (&t, &ly) in ts.iter().zip(&log_y) {
            let gap = a2 - t;
            let lg = gap.ln();
            r.push(ly - la1 + a3 * lg);
            jac.push([-1.0, a3 / gap, lg]);
        }
        Some((r, jac))
    };

    let mut outcome = levenberg_marquardt(theta0, log_residuals, opts);

    if opts.space == FitSpace::LinearRefined && outcome.status != FitStatus::Degenerate {
        let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let lin_residuals = |theta: &[f64; 3]| -> Option<(Vec<f64>, Vec<[f64; 3]>)> {
            let [la1, a2, a3] = *theta;
            if !(a2 > t_hi) {
                return None;
            }
            let a1 = la1.exp();
            let mut r = Vec::with_capacity(ts.len());
            let mut jac = Vec::with_capacity(ts.len());
            for (&t, &y) in ts.iter().zip(&ys) {
                let gap = a2 - t;
                let m = a1 * gap.powf(-a3);
                r.push(y - m);
                jac.push([-m, m * a3 / gap, m * gap.ln()]);
            }
            Some((r, jac))
        };
        let refined = levenberg_marquardt(outcome.theta, lin_residuals, opts);
        outcome.theta = refined.theta;
        outcome.iterations += refined.iterations;
        outcome.status = refined.status;
    }

    let [la1, a2, a3] = outcome.theta;
    let (r, _) = log_residuals(&outcome.theta).expect("iterate stays feasible");
    let rms = (r.iter().map(|x| x * x).sum::<f64>() / r.len() as f64).sqrt();
    let window_len = t_hi - t_lo;
    let status = if !(a3 > 1e-6)
        || !(a2 - t_hi < 1e6 * window_len.max(f64::MIN_POSITIVE))
        || !la1.is_finite()
    {
        FitStatus::Degenerate
    } else {
        outcome.status
    };
    Ok(BlowupFit {
        a1: la1.exp(),
        a2,
        a3,
        rms_residual: rms,
        window: [t_lo, t_hi],
        samples: samples.len(),
        iterations: outcome.iterations,
        status,
    })
}

fn linear_regression(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - slope * mx, slope)
}

struct LmOutcome {
    theta: [f64; 3],
    iterations: usize,
    status: FitStatus,
}

/// Levenberg-Marquardt with diagonal scaling; infeasible trial points are
/// treated like cost increases.
fn levenberg_marquardt(
    theta0: [f64; 3],
    residuals: impl Fn(&[f64; 3]) -> Option<(Vec<f64>, Vec<[f64; 3]>)>,
    opts: &FitOptions,
) -> LmOutcome {
    let cost = |r: &[f64]| 0.5 * r.iter().map(|x| x * x).sum::<f64>();
    let mut theta = theta0;
    let Some((mut r, mut jac)) = residuals(&theta) else {
        return LmOutcome {
            theta,
            iterations: 0,
            status: FitStatus::Degenerate,
        };
    };
    let mut c = cost(&r);
    let mut damping = 1e-3;
    for iter in 0..opts.max_iterations {
        let mut jtj = [[0.0; 3]; 3];
        let mut g = [0.0; 3];
        for (row, &ri) in jac.iter().zip(&r) {
            for a in 0..3 {
                g[a] += row[a] * ri;
                for b in 0..3 {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        let gnorm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gnorm <= opts.gradient_tol {
            return LmOutcome {
                theta,
                iterations: iter,
                status: FitStatus::Converged,
            };
        }
        let mut improved = false;
        while damping < 1e20 {
            let mut m = jtj;
            for a in 0..3 {
                m[a][a] += damping * jtj[a][a].max(1e-300);
            }
            let Some(delta) = solve3(m, [-g[0], -g[1], -g[2]]) else {
                damping *= 10.0;
                continue;
            };
            let trial = [
                theta[0] + delta[0],
                theta[1] + delta[1],
                theta[2] + delta[2],
            ];
            if let Some((rt, jt)) = residuals(&trial) {
                let ct = cost(&rt);
                if ct.is_finite() && ct <= c {
                    let stalled = c - ct <= 1e-16 * c.max(f64::MIN_POSITIVE)
                        && delta
                            .iter()
                            .zip(&theta)
                            .all(|(d, t)| d.abs() <= 1e-14 * t.abs().max(1.0));
                    theta = trial;
                    r = rt;
                    jac = jt;
                    c = ct;
                    damping = (damping / 10.0).max(1e-12);
                    improved = true;
                    if stalled {
                        return LmOutcome {
                            theta,
                            iterations: iter + 1,
                            status: FitStatus::Converged,
                        };
                    }
                    break;
                }
            }
            damping *= 10.0;
        }
        if !improved {
            // No descent direction left at machine precision.
            let scale: f64 = jtj
                .iter()
                .map(|row| row.iter().map(|x| x * x).sum::<f64>())
                .sum::<f64>()
                .sqrt()
                * (2.0 * c).sqrt();
            let status = if gnorm <= 1e-8 * (1.0 + scale) {
                FitStatus::Converged
            } else {
                FitStatus::MaxIterations
            };
            return LmOutcome {
                theta,
                iterations: iter + 1,
                status,
            };
        }
    }
    LmOutcome {
        theta,
        iterations: opts.max_iterations,
        status: FitStatus::MaxIterations,
    }
}

#[allow(clippy::needless_range_loop)]
fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut a = [[0.0; 4]; 3];
    for i in 0..3 {
        a[i][..3].copy_from_slice(&m[i]);
        a[i][3] = b[i];
    }
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 || !a[pivot][col].is_finite() {
            return None;
        }
        a.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|k| a[i][k] * x[k]).sum();
        x[i] = (a[i][3] - s) / a[i][i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Singular,
    Bounded,
    Inconclusive,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Singular => "singular",
            Classification::Bounded => "bounded",
            Classification::Inconclusive => "inconclusive",
        }
    }
}

/// Thresholds for [`classify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyCriteria {
    pub max_singular_residual: f64,
    pub min_bounded_residual: f64,
    /// Required growth factor of `y` across the fit window.
    pub min_growth: f64,
    /// `a2 - t_hi` may be at most this many window lengths.
    pub horizon_factor: f64,
    pub window: WindowRule,
    pub fit: FitOptions,
}

impl Default for ClassifyCriteria {
    fn default() -> Self {
        ClassifyCriteria {
            max_singular_residual: 0.05,
            min_bounded_residual: 0.2,
            min_growth: 1e3,
            horizon_factor: 2.0,
            window: WindowRule::default(),
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub classification: Classification,
    pub fit: Option<BlowupFit>,
    /// `y` at the end of the window over `y` at its start.
    pub growth: Option<f64>,
    pub reason: String,
}

/// Classify a run from its `(t, sup|d_x u|)` series. `bounded_run` says
/// whether the run reached its end time without a blow-up event; such runs
/// keep their final samples, since only steps next to a blow-up event are
/// distrusted.
pub fn classify(
    series: &[(f64, f64)],
    bounded_run: bool,
    criteria: &ClassifyCriteria,
) -> ClassificationReport {
    let rule = match criteria.window {
        WindowRule::Trailing { fraction, .. } if bounded_run => WindowRule::Trailing {
            fraction,
            drop_last: 0,
        },
        rule => rule,
    };
    let window = select_window(series, rule);
    let growth = match (window.first(), window.last()) {
        (Some(a), Some(b)) if a.1 > 0.0 => Some(b.1 / a.1),
        _ => None,
    };
    let fit = fit_blowup(&window, &criteria.fit);
    let (classification, reason) = match &fit {
        Ok(f) => {
            let span = f.window[1] - f.window[0];
            let near = f.a2 - f.window[1] <= criteria.horizon_factor * span;
            let grew = growth.is_some_and(|g| g >= criteria.min_growth);
            if f.converged() && f.rms_residual <= criteria.max_singular_residual && near && grew {
                (
                    Classification::Singular,
                    "ansatz fits a growing series with a nearby singular time".to_string(),
                )
            } else if bounded_run
                && (f.rms_residual > criteria.min_bounded_residual || !f.converged())
            {
                (
                    Classification::Bounded,
                    format!(
                        "bounded run, poor fit ({:?}, rms {:.3e})",
                        f.status, f.rms_residual
                    ),
                )
            } else {
                (
                    Classification::Inconclusive,
                    format!(
                        "status {:?}, rms {:.3e}, a2 - t_hi = {:.3e}, growth {:?}",
                        f.status,
                        f.rms_residual,
                        f.a2 - f.window[1],
                        growth
                    ),
                )
            }
        }
        Err(e) if bounded_run => (
            Classification::Bounded,
            format!("bounded run, no fit possible: {e}"),
        ),
        Err(e) => (
            Classification::Inconclusive,
            format!("no fit possible: {e}"),
        ),
    };
    ClassificationReport {
        classification,
        fit: fit.ok(),
        growth,
        reason,
    }
}
