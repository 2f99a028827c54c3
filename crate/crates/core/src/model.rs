//! Semidiscrete right-hand side of the fractional Keller-Segel system
//!
//! ```text
//! u_t = -mu Lambda^alpha u + chi d_x(u Lambda^(beta-1) H v) + r u (1 - u)
//! v_t = -nu Lambda^beta v - lambda v + u
//! ```
//!
//! and the initial data of the reference scenarios.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::OdeSystem;
use crate::spectral::{drift_symbol, fractional_symbol, Grid, SpectralField};

/// Description of the pseudorandom generator used by the `B-random` scenario.
pub const RANDOM_GENERATOR: &str =
    "rand_chacha::ChaCha8Rng::seed_from_u64(seed); one f64 in [0,1) per grid point, mapped to -0.1 + 0.2*x";

/// PDE coefficients. The full system corresponds to `chi = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub nu: f64,
    pub lambda: f64,
    pub r: f64,
    pub chi: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams::reduced(1.0, 1.0, 1.0)
    }
}

impl SystemParams {
    /// One-parameter system with `mu = nu = lambda = r = 1`.
    pub fn reduced(alpha: f64, beta: f64, chi: f64) -> Self {
        SystemParams {
            alpha,
            beta,
            mu: 1.0,
            nu: 1.0,
            lambda: 1.0,
            r: 1.0,
            chi,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |x: f64| x > 0.0 && x <= 2.0;
        if !in_range(self.alpha) {
            return Err(Error::invalid(format!(
                "alpha must lie in (0, 2], got {}",
                self.alpha
            )));
        }
        if !in_range(self.beta) {
            return Err(Error::invalid(format!(
                "beta must lie in (0, 2], got {}",
                self.beta
            )));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid(format!("mu must be > 0, got {}", self.mu)));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::invalid(format!("nu must be > 0, got {}", self.nu)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(Error::invalid(format!("r must be >= 0, got {}", self.r)));
        }
        if !(self.chi > 0.0 && self.chi.is_finite()) {
            return Err(Error::invalid(format!("chi must be > 0, got {}", self.chi)));
        }
        Ok(())
    }

    /// Reduce to `(alpha, beta, chi)`; only defined when `mu = nu = lambda = r = 1`.
    pub fn to_reduced(&self) -> Result<ReducedParams> {
        let unit = [
            ("mu", self.mu),
            ("nu", self.nu),
            ("lambda", self.lambda),
            ("r", self.r),
        ];
        if let Some((name, value)) = unit.iter().find(|(_, v)| *v != 1.0) {
            return Err(Error::invalid(format!(
                "reduction requires mu = nu = lambda = r = 1, but {name} = {value}"
            )));
        }
        Ok(ReducedParams {
            alpha: self.alpha,
            beta: self.beta,
            chi: self.chi,
        })
    }
}

/// The one-parameter normalisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedParams {
    pub alpha: f64,
    pub beta: f64,
    pub chi: f64,
}

impl ReducedParams {
    pub fn to_full(&self) -> SystemParams {
        SystemParams::reduced(self.alpha, self.beta, self.chi)
    }
}

impl From<ReducedParams> for SystemParams {
    fn from(p: ReducedParams) -> Self {
        p.to_full()
    }
}

/// Cell density `u`, chemoattractant `v`, time `t`.
#[derive(Debug, Clone)]
pub struct State {
    pub u: SpectralField,
    pub v: SpectralField,
    pub t: f64,
}

impl State {
    pub fn new(u: SpectralField, v: SpectralField, t: f64) -> Result<Self> {
        u.check_grid(&v)?;
        Ok(State { u, v, t })
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    /// Coefficients of `u` followed by those of `v`.
    pub fn to_vector(&self) -> Vec<Complex64> {
        let mut y = Vec::with_capacity(2 * self.grid().n());
        y.extend_from_slice(self.u.coeffs());
        y.extend_from_slice(self.v.coeffs());
        y
    }

    pub fn from_vector(grid: &Grid, y: Vec<Complex64>, t: f64) -> Result<Self> {
        let n = grid.n();
        if y.len() != 2 * n {
            return Err(Error::invalid(format!(
                "state vector must have {} entries, got {}",
                2 * n,
                y.len()
            )));
        }
        let mut y = y;
        let v = y.split_off(n);
        Ok(State {
            u: SpectralField::from_coeffs(grid, y)?,
            v: SpectralField::from_coeffs(grid, v)?,
            t,
        })
    }

    pub fn min_u(&self) -> f64 {
        self.u
            .values()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_v(&self) -> f64 {
        self.v
            .values()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Default undershoot tolerance `1e-8 * max(1, sup|u|)`.
    pub fn default_positivity_tol(&self) -> f64 {
        let sup = self.u.values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        1e-8 * sup.max(1.0)
    }

    /// True when `u` or `v` dips below `-tol` somewhere on the grid.
    pub fn violates_positivity(&self, tol: f64) -> bool {
        self.min_u() < -tol || self.min_v() < -tol
    }
}

/// Evaluate `(du/dt, dv/dt)` at `state` (no dealiasing).
pub fn rhs(state: &State, params: &SystemParams) -> Result<(SpectralField, SpectralField)> {
    let system = KellerSegel::new(*params, state.grid(), false)?;
    system.rhs_fields(state)
}

/// The semidiscrete system in Fourier space with precomputed symbols.
///
/// The state vector holds the `u` coefficients followed by the `v`
/// coefficients. The diagonal linear part is `-mu |k|^alpha` on `u` and
/// `-nu |k|^beta - lambda` on `v`; everything else (transport, logistic
/// source, the `+u` coupling) is treated as the nonlinear part.
#[derive(Debug, Clone)]
pub struct KellerSegel {
    params: SystemParams,
    grid: Grid,
    dealias: bool,
    linear: Vec<f64>,
    drift: Vec<Complex64>,
    deriv: Vec<Complex64>,
    keep: Vec<bool>,
}

impl KellerSegel {
    pub fn new(params: SystemParams, grid: &Grid, dealias: bool) -> Result<Self> {
        params.validate()?;
        let n = grid.n();
        let mut linear = vec![0.0; 2 * n];
        let mut drift = vec![Complex64::new(0.0, 0.0); n];
        let mut deriv = vec![Complex64::new(0.0, 0.0); n];
        let mut keep = vec![true; n];
        let cutoff = n as f64 / 3.0;
        for i in 0..n {
            let k = grid.wavenumber(i);
            linear[i] = -params.mu * fractional_symbol(k, params.alpha);
            linear[n + i] = -params.nu * fractional_symbol(k, params.beta) - params.lambda;
            if i != n / 2 {
                drift[i] = drift_symbol(k, params.beta);
                deriv[i] = Complex64::new(0.0, k as f64);
            }
            keep[i] = !dealias || (k.unsigned_abs() as f64) <= cutoff;
        }
        Ok(KellerSegel {
            params,
            grid: grid.clone(),
            dealias,
            linear,
            drift,
            deriv,
            keep,
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dealias(&self) -> bool {
        self.dealias
    }

    pub fn rhs_fields(&self, state: &State) -> Result<(SpectralField, SpectralField)> {
        if state.grid() != &self.grid {
            return Err(Error::invalid("state grid does not match the system grid"));
        }
        let y = state.to_vector();
        let mut dy = vec![Complex64::new(0.0, 0.0); y.len()];
        self.rhs(state.t, &y, &mut dy);
        let n = self.grid.n();
        let dv = dy.split_off(n);
        Ok((
            SpectralField::from_coeffs(&self.grid, dy)?,
            SpectralField::from_coeffs(&self.grid, dv)?,
        ))
    }

    fn filter(&self, c: &mut [Complex64]) {
        if self.dealias {
            for (c, &keep) in c.iter_mut().zip(&self.keep) {
                if !keep {
                    *c = Complex64::new(0.0, 0.0);
                }
            }
        }
    }
}

impl OdeSystem for KellerSegel {
    fn dim(&self) -> usize {
        2 * self.grid.n()
    }

    fn linear_diagonal(&self) -> Option<&[f64]> {
        Some(&self.linear)
    }

    fn nonlinear(&self, _t: f64, y: &[Complex64], out: &mut [Complex64]) {
        let n = self.grid.n();
        let p = &self.params;
        let (u_hat, v_hat) = y.split_at(n);

        let mut scratch = vec![Complex64::new(0.0, 0.0); n];
        let mut u = vec![0.0; n];
        let mut w = vec![0.0; n];

        let mut buf: Vec<Complex64> = u_hat.to_vec();
        self.filter(&mut buf);
        self.grid.inverse_into(&buf, &mut scratch, &mut u);

        for ((b, &v), &d) in buf.iter_mut().zip(v_hat).zip(&self.drift) {
            *b = v * d;
        }
        self.filter(&mut buf);
        self.grid.inverse_into(&buf, &mut scratch, &mut w);

        let flux: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a * b).collect();
        let mut flux_hat = vec![Complex64::new(0.0, 0.0); n];
        self.grid.forward_into(&flux, &mut flux_hat);
        self.filter(&mut flux_hat);

        let (du, dv) = out.split_at_mut(n);
        for i in 0..n {
            du[i] = self.deriv[i] * flux_hat[i] * p.chi;
        }
        if p.r != 0.0 {
            let source: Vec<f64> = u.iter().map(|x| x - x * x).collect();
            let mut source_hat = vec![Complex64::new(0.0, 0.0); n];
            self.grid.forward_into(&source, &mut source_hat);
            self.filter(&mut source_hat);
            for (d, s) in du.iter_mut().zip(&source_hat) {
                *d += s * p.r;
            }
        }
        dv.copy_from_slice(u_hat);
    }
}

/// Reference initial data.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    /// `u = 1`, `v = 0.1 sin(8x) + 1`.
    Sin8,
    /// `u = 1`, `v = 2 + U[-0.1, 0.1]` pointwise.
    Random,
    /// `u = 1`, `v = 0.1 sin(10x) + 1`.
    Sin10,
    /// `u = 1`, `v = 0.1 cos(x) exp(-x^2) + 1`, sampled literally on `[-pi, pi)`.
    Gauss,
    /// Explicit coefficient lists `(k, u_hat(k))` for `k >= 0`.
    Custom {
        u_modes: Vec<(i64, Complex64)>,
        v_modes: Vec<(i64, Complex64)>,
    },
}

impl Scenario {
    pub fn id(&self) -> &'static str {
        match self {
            Scenario::Sin8 => "A-sin8",
            Scenario::Random => "B-random",
            Scenario::Sin10 => "C-sin10",
            Scenario::Gauss => "D-gauss",
            Scenario::Custom { .. } => "custom",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    /// Parses the named scenarios; `custom` needs explicit modes and is
    /// built through [`Scenario::Custom`] instead.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A-sin8" => Ok(Scenario::Sin8),
            "B-random" => Ok(Scenario::Random),
            "C-sin10" => Ok(Scenario::Sin10),
            "D-gauss" => Ok(Scenario::Gauss),
            other => Err(Error::invalid(format!(
                "unknown scenario '{other}' (expected A-sin8, B-random, C-sin10, D-gauss or custom)"
            ))),
        }
    }
}

/// Parse a mode list such as `0:1, 8:0:-0.05` (wavenumber, real part,
/// optional imaginary part).
pub fn parse_modes(text: &str) -> Result<Vec<(i64, Complex64)>> {
    let mut modes = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').map(str::trim).collect();
        let bad = || Error::invalid(format!("malformed mode '{item}', expected k:re[:im]"));
        if parts.len() < 2 || parts.len() > 3 {
            return Err(bad());
        }
        let k: i64 = parts[0].parse().map_err(|_| bad())?;
        let re: f64 = parts[1].parse().map_err(|_| bad())?;
        let im: f64 = match parts.get(2) {
            Some(s) => s.parse().map_err(|_| bad())?,
            None => 0.0,
        };
        modes.push((k, Complex64::new(re, im)));
    }
    Ok(modes)
}

/// Sample the initial state of `scenario` at `t = 0`.
pub fn make_initial(scenario: &Scenario, grid: &Grid, seed: u64) -> Result<State> {
    let needs_32 = matches!(scenario, Scenario::Sin8 | Scenario::Sin10);
    if needs_32 && grid.n() < 32 {
        return Err(Error::invalid(format!(
            "scenario {scenario} needs n >= 32 to resolve its initial modes, got {}",
            grid.n()
        )));
    }
    let one = SpectralField::constant(grid, 1.0);
    let state = match scenario {
        Scenario::Sin8 => State::new(
            one,
            SpectralField::from_fn(grid, |x| 0.1 * (8.0 * x).sin() + 1.0),
            0.0,
        )?,
        Scenario::Sin10 => State::new(
            one,
            SpectralField::from_fn(grid, |x| 0.1 * (10.0 * x).sin() + 1.0),
            0.0,
        )?,
        Scenario::Gauss => State::new(
            one,
            SpectralField::from_fn(grid, |x| 0.1 * x.cos() * (-x * x).exp() + 1.0),
            0.0,
        )?,
        Scenario::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values: Vec<f64> = (0..grid.n())
                .map(|_| 2.0 + (-0.1 + 0.2 * rng.random::<f64>()))
                .collect();
            State::new(one, SpectralField::forward(grid, &values)?, 0.0)?
        }
        Scenario::Custom { u_modes, v_modes } => State::new(
            SpectralField::from_modes(grid, u_modes)?,
            SpectralField::from_modes(grid, v_modes)?,
            0.0,
        )?,
    };
    Ok(state)
}

/// Spatial mean of `u` times the torus length, i.e. the L1 norm for `u >= 0`.
pub fn total_mass(f: &SpectralField) -> f64 {
    2.0 * PI * f.mean()
}
