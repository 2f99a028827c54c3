//! Adaptive Dormand-Prince 5(4) time stepping.
//!
//! Two modes share one tableau. `Explicit` integrates the full right-hand
//! side. `IntegratingFactor` propagates the diagonal linear part exactly
//! between stages (Lawson form), so stiff high modes do not limit the step.

use std::ops::ControlFlow;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{KellerSegel, State, SystemParams};

/// A first-order system `y' = L y + N(t, y)` with optional diagonal `L`.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    /// Diagonal of the linear part, when the system has one.
    fn linear_diagonal(&self) -> Option<&[f64]> {
        None
    }

    /// Everything except the linear diagonal.
    fn nonlinear(&self, t: f64, y: &[Complex64], out: &mut [Complex64]);

    /// Full right-hand side.
    fn rhs(&self, t: f64, y: &[Complex64], out: &mut [Complex64]) {
        self.nonlinear(t, y, out);
        if let Some(lin) = self.linear_diagonal() {
            for ((o, &l), &yi) in out.iter_mut().zip(lin).zip(y) {
                *o += yi * l;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    #[default]
    Explicit,
    IntegratingFactor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// `None` selects the step from the scaled size of `f(y0)`.
    pub initial_step: Option<f64>,
    /// Blow-up is declared once `sup|u|` exceeds this.
    pub blowup_threshold: f64,
    pub max_steps: usize,
    pub mode: StepMode,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-3,
            abs_tol: 1e-6,
            max_step: f64::INFINITY,
            initial_step: None,
            blowup_threshold: 1e8,
            max_steps: 1_000_000,
            mode: StepMode::Explicit,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::invalid("tolerances must be > 0"));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(Error::invalid("blowup_threshold must be > 0"));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::invalid("max_step must be > 0"));
        }
        if let Some(h) = self.initial_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::invalid("initial_step must be finite and > 0"));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps must be >= 1"));
        }
        Ok(())
    }
}

/// Result of one trial step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub accepted: bool,
    pub err_estimate: f64,
    pub new_step: f64,
    /// A stage or the candidate produced NaN/inf.
    pub non_finite: bool,
}

// Dormand & Prince (1980), RK5(4)7M.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B_HAT: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.1;
const MAX_FACTOR: f64 = 5.0;
const PI_BETA: f64 = 0.04;
const PI_ALPHA: f64 = 0.2 - 0.75 * PI_BETA;

/// Dormand-Prince 5(4) stepper bound to one system.
pub struct DormandPrince<'a, S: OdeSystem + ?Sized> {
    system: &'a S,
    cfg: IntegratorConfig,
    k: Vec<Vec<Complex64>>,
    k0_valid: bool,
    err_old: f64,
    last_rejected: bool,
}

impl<'a, S: OdeSystem + ?Sized> DormandPrince<'a, S> {
    pub fn new(system: &'a S, cfg: IntegratorConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.mode == StepMode::IntegratingFactor && system.linear_diagonal().is_none() {
            return Err(Error::invalid(
                "integrating-factor mode needs a system with a diagonal linear part",
            ));
        }
        let dim = system.dim();
        Ok(DormandPrince {
            system,
            cfg,
            k: vec![vec![Complex64::new(0.0, 0.0); dim]; 7],
            k0_valid: false,
            err_old: 1e-4,
            last_rejected: false,
        })
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.cfg
    }

    /// Forget the cached first stage (call when `y` changes outside `try_step`).
    pub fn reset(&mut self) {
        self.k0_valid = false;
    }

    fn stage_rhs(&self, t: f64, y: &[Complex64], out: &mut [Complex64]) {
        match self.cfg.mode {
            StepMode::Explicit => self.system.rhs(t, y, out),
            StepMode::IntegratingFactor => self.system.nonlinear(t, y, out),
        }
    }

    /// Scaled max norm with scale `abs_tol + rel_tol * max(|a|, |b|)`.
    ///
    /// A max norm rather than RMS: with thousands of Fourier modes an RMS
    /// average lets individual high modes carry errors far above tolerance.
    fn scaled_norm(&self, e: &[Complex64], a: &[Complex64], b: &[Complex64]) -> f64 {
        e.iter()
            .zip(a.iter().zip(b))
            .map(|(e, (a, b))| {
                let sc = self.cfg.abs_tol + self.cfg.rel_tol * a.norm().max(b.norm());
                e.norm() / sc
            })
            .fold(0.0, |m, x| if x.is_nan() { f64::NAN } else { m.max(x) })
    }

    /// Starting step from the scaled sizes of `y0`, `f(y0)` and a trial
    /// difference quotient (Hairer, Norsett & Wanner, II.4).
    pub fn initial_step(&mut self, t: f64, y: &[Complex64], t_end: f64) -> f64 {
        let span = (t_end - t).abs();
        if let Some(h) = self.cfg.initial_step {
            return h.min(self.cfg.max_step).min(span);
        }
        let dim = y.len();
        let mut f0 = vec![Complex64::new(0.0, 0.0); dim];
        self.system.rhs(t, y, &mut f0);
        let d0 = self.scaled_norm(y, y, y);
        let d1 = self.scaled_norm(&f0, y, y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let y1: Vec<Complex64> = y.iter().zip(&f0).map(|(a, f)| a + f * h0).collect();
        let mut f1 = vec![Complex64::new(0.0, 0.0); dim];
        self.system.rhs(t + h0, &y1, &mut f1);
        let diff: Vec<Complex64> = f1.iter().zip(&f0).map(|(a, b)| a - b).collect();
        let d2 = self.scaled_norm(&diff, y, y) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 5.0)
        };
        let h = (100.0 * h0).min(h1);
        if h.is_finite() && h > 0.0 {
            h.min(self.cfg.max_step).min(span)
        } else {
            1e-6f64.min(span)
        }
    }

    /// One trial step of size `h` from `(t, y)`. Returns the candidate
    /// solution and the controller outcome; the candidate must be discarded
    /// when the step is rejected.
    pub fn try_step(&mut self, t: f64, y: &[Complex64], h: f64) -> (Vec<Complex64>, StepOutcome) {
        let dim = y.len();
        if !self.k0_valid {
            let mut k0 = std::mem::take(&mut self.k[0]);
            self.stage_rhs(t, y, &mut k0);
            self.k[0] = k0;
            self.k0_valid = true;
        }

        let lin = match self.cfg.mode {
            StepMode::Explicit => None,
            StepMode::IntegratingFactor => self.system.linear_diagonal(),
        };
        let decay = |tau: f64| -> Option<Vec<f64>> {
            lin.map(|l| l.iter().map(|&li| (li * tau).exp()).collect())
        };

        let mut stage = vec![Complex64::new(0.0, 0.0); dim];
        for i in 1..7 {
            let base = decay(C[i] * h);
            for (idx, s) in stage.iter_mut().enumerate() {
                *s = match &base {
                    Some(e) => y[idx] * e[idx],
                    None => y[idx],
                };
            }
            for j in 0..i {
                let a = A[i][j];
                if a == 0.0 {
                    continue;
                }
                let kj = &self.k[j];
                match decay((C[i] - C[j]) * h) {
                    Some(e) => {
                        for idx in 0..dim {
                            stage[idx] += kj[idx] * (h * a * e[idx]);
                        }
                    }
                    None => {
                        for idx in 0..dim {
                            stage[idx] += kj[idx] * (h * a);
                        }
                    }
                }
            }
            let mut ki = std::mem::take(&mut self.k[i]);
            self.stage_rhs(t + C[i] * h, &stage, &mut ki);
            self.k[i] = ki;
        }
        // Stage 6 was evaluated at the fifth-order solution (B equals row 6 of A).
        let y_new = stage;

        let mut err = vec![Complex64::new(0.0, 0.0); dim];
        for j in 0..7 {
            let w = B[j] - B_HAT[j];
            if w == 0.0 {
                continue;
            }
            let kj = &self.k[j];
            match decay((1.0 - C[j]) * h) {
                Some(e) => {
                    for idx in 0..dim {
                        err[idx] += kj[idx] * (h * w * e[idx]);
                    }
                }
                None => {
                    for idx in 0..dim {
                        err[idx] += kj[idx] * (h * w);
                    }
                }
            }
        }

        let finite = y_new.iter().all(|z| z.re.is_finite() && z.im.is_finite())
            && self.k[6]
                .iter()
                .all(|z| z.re.is_finite() && z.im.is_finite());
        let err_norm = if finite {
            self.scaled_norm(&err, y, &y_new)
        } else {
            f64::INFINITY
        };

        let outcome = if finite && err_norm <= 1.0 {
            let e = err_norm.max(1e-10);
            let mut fac = SAFETY * e.powf(-PI_ALPHA) * self.err_old.powf(PI_BETA);
            fac = fac.clamp(MIN_FACTOR, MAX_FACTOR);
            if self.last_rejected {
                fac = fac.min(1.0);
            }
            self.err_old = err_norm.max(1e-4);
            self.last_rejected = false;
            self.k.swap(0, 6);
            StepOutcome {
                accepted: true,
                err_estimate: err_norm,
                new_step: (h * fac).min(self.cfg.max_step),
                non_finite: false,
            }
        } else {
            self.last_rejected = true;
            let fac = if finite {
                (SAFETY * err_norm.powf(-0.2)).clamp(MIN_FACTOR, 1.0)
            } else {
                MIN_FACTOR
            };
            StepOutcome {
                accepted: false,
                err_estimate: err_norm,
                new_step: h * fac,
                non_finite: !finite,
            }
        };
        (y_new, outcome)
    }

    /// Advance from `(t0, y0)` to `t_end`. `on_accept` sees every accepted
    /// step and may stop the run early.
    pub fn run<B>(
        &mut self,
        t0: f64,
        y0: Vec<Complex64>,
        t_end: f64,
        mut on_accept: impl FnMut(f64, &[Complex64], &StepOutcome, f64) -> ControlFlow<B>,
    ) -> Result<RunResult<B>> {
        if !(t_end > t0) {
            return Err(Error::invalid(format!(
                "t_end ({t_end}) must exceed the start time ({t0})"
            )));
        }
        self.reset();
        let mut t = t0;
        let mut y = y0;
        let mut h = self.initial_step(t, &y, t_end);
        let mut accepted = 0usize;
        let mut rejected = 0usize;
        let mut consecutive_non_finite = 0usize;
        loop {
            if accepted + rejected >= self.cfg.max_steps {
                return Ok(RunResult {
                    t,
                    y,
                    accepted,
                    rejected,
                    stop: RunStop::MaxSteps,
                });
            }
            let remaining = t_end - t;
            let mut last = false;
            if h >= remaining * (1.0 - 1e-12) {
                h = remaining;
                last = true;
            }
            if h <= 1e-12 * t.abs().max(1.0) {
                return Ok(RunResult {
                    t,
                    y,
                    accepted,
                    rejected,
                    stop: RunStop::StepCollapse,
                });
            }
            let (y_new, outcome) = self.try_step(t, &y, h);
            if !outcome.accepted {
                rejected += 1;
                if outcome.non_finite {
                    consecutive_non_finite += 1;
                    if consecutive_non_finite >= 20 {
                        return Ok(RunResult {
                            t,
                            y,
                            accepted,
                            rejected,
                            stop: RunStop::NonFinite,
                        });
                    }
                }
                h = outcome.new_step;
                continue;
            }
            consecutive_non_finite = 0;
            accepted += 1;
            t = if last { t_end } else { t + h };
            y = y_new;
            if let ControlFlow::Break(b) = on_accept(t, &y, &outcome, h) {
                return Ok(RunResult {
                    t,
                    y,
                    accepted,
                    rejected,
                    stop: RunStop::Callback(b),
                });
            }
            if last {
                return Ok(RunResult {
                    t,
                    y,
                    accepted,
                    rejected,
                    stop: RunStop::Reached,
                });
            }
            h = outcome.new_step;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStop<B> {
    Reached,
    MaxSteps,
    StepCollapse,
    NonFinite,
    Callback(B),
}

#[derive(Debug, Clone)]
pub struct RunResult<B> {
    pub t: f64,
    pub y: Vec<Complex64>,
    pub accepted: usize,
    pub rejected: usize,
    pub stop: RunStop<B>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedTEnd,
    BlowupEvent,
    MaxSteps,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::ReachedTEnd => "reached_t_end",
            Termination::BlowupEvent => "blowup_event",
            Termination::MaxSteps => "max_steps",
        }
    }
}

/// What triggered a blow-up event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupCause {
    Threshold,
    NonFinite,
    StepCollapse,
}

/// Bookkeeping handed to observers with each accepted state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub accepted_steps: usize,
    /// Size of the step that produced this state (0 for the initial state).
    pub step_size: f64,
    pub err_estimate: f64,
    pub linf_u: f64,
}

/// Receives the initial state and every accepted state.
pub trait Observer {
    fn observe(&mut self, state: &State, info: &StepInfo);
}

impl<F: FnMut(&State, &StepInfo)> Observer for F {
    fn observe(&mut self, state: &State, info: &StepInfo) {
        self(state, info)
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub final_state: State,
    pub termination: Termination,
    pub blowup_cause: Option<BlowupCause>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Times of the initial and every accepted state.
    pub times: Vec<f64>,
}

impl Trajectory {
    pub fn t_final(&self) -> f64 {
        self.final_state.t
    }
}

fn sup_norm(values: &[f64]) -> f64 {
    values.iter().fold(
        0.0f64,
        |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) },
    )
}

/// One trial step of the Keller-Segel system.
pub fn step(
    state: &State,
    params: &SystemParams,
    h: f64,
    cfg: &IntegratorConfig,
) -> Result<(State, StepOutcome)> {
    if !(h > 0.0) {
        return Err(Error::invalid(format!("step size must be > 0, got {h}")));
    }
    let system = KellerSegel::new(*params, state.grid(), false)?;
    let mut dp = DormandPrince::new(&system, *cfg)?;
    let y = state.to_vector();
    let (y_new, outcome) = dp.try_step(state.t, &y, h);
    let t = if outcome.accepted {
        state.t + h
    } else {
        state.t
    };
    let next = if outcome.accepted {
        State::from_vector(state.grid(), y_new, t)?
    } else {
        state.clone()
    };
    Ok((next, outcome))
}

/// Integrate the Keller-Segel system from `state0` to `t_end`.
///
/// Observers see the initial state and then every accepted step. The run
/// stops early on a blow-up event: `sup|u|` above the configured threshold,
/// non-finite values, or a collapsing step size. The event time is the last
/// accepted step time.
pub fn integrate(
    system: &KellerSegel,
    state0: &State,
    t_end: f64,
    cfg: &IntegratorConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory> {
    if state0.grid() != system.grid() {
        return Err(Error::invalid(
            "initial state grid does not match the system grid",
        ));
    }
    if !(t_end > state0.t) {
        return Err(Error::invalid(format!(
            "t_end ({t_end}) must exceed the initial time ({})",
            state0.t
        )));
    }
    let grid = system.grid().clone();
    let mut times = vec![state0.t];
    let linf0 = sup_norm(state0.u.values());
    let info0 = StepInfo {
        accepted_steps: 0,
        step_size: 0.0,
        err_estimate: 0.0,
        linf_u: linf0,
    };
    for obs in observers.iter_mut() {
        obs.observe(state0, &info0);
    }
    let mut last_state = state0.clone();
    if !linf0.is_finite() || linf0 > cfg.blowup_threshold {
        return Ok(Trajectory {
            final_state: last_state,
            termination: Termination::BlowupEvent,
            blowup_cause: Some(if linf0.is_finite() {
                BlowupCause::Threshold
            } else {
                BlowupCause::NonFinite
            }),
            accepted_steps: 0,
            rejected_steps: 0,
            times,
        });
    }

    let mut dp = DormandPrince::new(system, *cfg)?;
    let mut accepted = 0usize;
    let result = dp.run(state0.t, state0.to_vector(), t_end, |t, y, outcome, h| {
        accepted += 1;
        let state = State::from_vector(&grid, y.to_vec(), t).expect("sized");
        let linf = sup_norm(state.u.values());
        let info = StepInfo {
            accepted_steps: accepted,
            step_size: h,
            err_estimate: outcome.err_estimate,
            linf_u: linf,
        };
        for obs in observers.iter_mut() {
            obs.observe(&state, &info);
        }
        times.push(t);
        last_state = state;
        if !linf.is_finite() {
            ControlFlow::Break(BlowupCause::NonFinite)
        } else if linf > cfg.blowup_threshold {
            ControlFlow::Break(BlowupCause::Threshold)
        } else {
            ControlFlow::Continue(())
        }
    })?;

    let (termination, cause) = match result.stop {
        RunStop::Reached => (Termination::ReachedTEnd, None),
        RunStop::MaxSteps => (Termination::MaxSteps, None),
        RunStop::StepCollapse => (Termination::BlowupEvent, Some(BlowupCause::StepCollapse)),
        RunStop::NonFinite => (Termination::BlowupEvent, Some(BlowupCause::NonFinite)),
        RunStop::Callback(c) => (Termination::BlowupEvent, Some(c)),
    };
    Ok(Trajectory {
        final_state: last_state,
        termination,
        blowup_cause: cause,
        accepted_steps: result.accepted,
        rejected_steps: result.rejected,
        times,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Grid, SpectralField};

    struct Logistic;

    impl OdeSystem for Logistic {
        fn dim(&self) -> usize {
            1
        }

        fn nonlinear(&self, _t: f64, y: &[Complex64], out: &mut [Complex64]) {
            out[0] = y[0] * (Complex64::new(1.0, 0.0) - y[0]);
        }
    }

    /// y' = -50 y with the decay held as a linear diagonal.
    struct Stiff(Vec<f64>);

    impl OdeSystem for Stiff {
        fn dim(&self) -> usize {
            self.0.len()
        }

        fn linear_diagonal(&self) -> Option<&[f64]> {
            Some(&self.0)
        }

        fn nonlinear(&self, _t: f64, _y: &[Complex64], out: &mut [Complex64]) {
            out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        }
    }

    fn tight() -> IntegratorConfig {
        IntegratorConfig {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            ..Default::default()
        }
    }

    #[test]
    fn logistic_closed_form() {
        let mut dp = DormandPrince::new(&Logistic, tight()).unwrap();
        let res = dp
            .run(0.0, vec![Complex64::new(0.5, 0.0)], 1.0, |_, _, _, _| {
                ControlFlow::<()>::Continue(())
            })
            .unwrap();
        assert_eq!(res.stop, RunStop::Reached);
        assert_eq!(res.t, 1.0);
        let exact = 1.0 / (1.0 + (-1.0f64).exp());
        assert!(
            (res.y[0].re - exact).abs() < 1e-8,
            "{}",
            res.y[0].re - exact
        );
    }

    #[test]
    fn huge_step_on_stiff_mode_is_rejected() {
        let sys = Stiff(vec![-1.0e4]);
        let mut dp = DormandPrince::new(&sys, IntegratorConfig::default()).unwrap();
        let (_, out) = dp.try_step(0.0, &[Complex64::new(1.0, 0.0)], 1.0);
        assert!(!out.accepted);
        assert!(out.new_step < 1.0);
        assert!(out.err_estimate > 1.0);
    }

    #[test]
    fn integrating_factor_is_exact_on_linear_part() {
        let sys = Stiff(vec![-1.0e4, -2.0]);
        let cfg = IntegratorConfig {
            mode: StepMode::IntegratingFactor,
            ..Default::default()
        };
        let mut dp = DormandPrince::new(&sys, cfg).unwrap();
        let y0 = vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        let (y, out) = dp.try_step(0.0, &y0, 0.5);
        assert!(out.accepted);
        assert!((y[0].re - (-5.0e3f64).exp()).abs() < 1e-15);
        assert!((y[1].re - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn integrating_factor_requires_linear_part() {
        let cfg = IntegratorConfig {
            mode: StepMode::IntegratingFactor,
            ..Default::default()
        };
        assert!(DormandPrince::new(&Logistic, cfg).is_err());
    }

    #[test]
    fn config_validation() {
        let bad = IntegratorConfig {
            rel_tol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = IntegratorConfig {
            blowup_threshold: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn single_step_on_linear_v_equation() {
        let g = Grid::new(32).unwrap();
        let params = SystemParams {
            alpha: 1.0,
            beta: 2.0,
            mu: 1.0,
            nu: 1.0,
            lambda: 1.0,
            r: 0.0,
            chi: 1.0,
        };
        let v = SpectralField::from_fn(&g, |x| 1.0 + x.cos() + 0.5 * (3.0 * x).sin());
        let s = State::new(SpectralField::zeros(&g), v.clone(), 0.0).unwrap();
        let h = 1e-3;
        let (next, out) = step(&s, &params, h, &tight()).unwrap();
        assert!(out.accepted);
        for i in 0..g.n() {
            let k = g.wavenumber(i) as f64;
            let exact = v.coeffs()[i] * (-(k * k + 1.0) * h).exp();
            assert!((next.v.coeffs()[i] - exact).norm() < 1e-9);
        }
        assert!(step(&s, &params, 0.0, &tight()).is_err());
    }
}
