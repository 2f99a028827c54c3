//! Norms and functionals monitored along a run.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{Observer, StepInfo};
use crate::model::{State, SystemParams};
use crate::spectral::{fractional_symbol, SpectralField};

/// Rectangle-rule `L^1` norm.
pub fn l1_norm(f: &SpectralField) -> f64 {
    f.grid().spacing() * f.values().iter().map(|x| x.abs()).sum::<f64>()
}

/// Rectangle-rule `L^2` norm.
pub fn l2_norm(f: &SpectralField) -> f64 {
    (f.grid().spacing() * f.values().iter().map(|x| x * x).sum::<f64>()).sqrt()
}

/// `L^2` norm from the coefficients (Parseval).
pub fn l2_norm_fourier(f: &SpectralField) -> f64 {
    (2.0 * PI * f.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
}

/// Grid maximum of `|f|`.
pub fn linf_norm(f: &SpectralField) -> f64 {
    f.values().iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `sup |d_x f|` on the grid.
pub fn linf_derivative(f: &SpectralField) -> f64 {
    linf_norm(&f.derivative())
}

/// `sup |Lambda^s f|` on the grid.
pub fn linf_fractional(f: &SpectralField, s: f64) -> Result<f64> {
    Ok(linf_norm(&f.fractional_laplacian(s)?))
}

/// Homogeneous Sobolev seminorm `||Lambda^s f||_{L^2}`.
pub fn hs_seminorm(f: &SpectralField, s: f64) -> Result<f64> {
    check_order(s)?;
    let n = f.grid().n();
    let sum: f64 = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| fractional_symbol(f.grid().wavenumber(i), s).powi(2) * c.norm_sqr())
        .sum();
    debug_assert_eq!(f.coeffs().len(), n);
    Ok((2.0 * PI * sum).sqrt())
}

/// Inhomogeneous Sobolev norm, `||f||_{H^s}^2 = ||f||_{L^2}^2 + ||f||_{H^s-dot}^2`.
pub fn hs_norm(f: &SpectralField, s: f64) -> Result<f64> {
    let l2 = l2_norm_fourier(f);
    let h = hs_seminorm(f, s)?;
    Ok((l2 * l2 + h * h).sqrt())
}

/// Wiener-algebra seminorm `sum_k |k|^s |u_hat(k)|`.
pub fn wiener_seminorm(f: &SpectralField, s: f64) -> Result<f64> {
    check_order(s)?;
    Ok(f.coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| fractional_symbol(f.grid().wavenumber(i), s) * c.norm())
        .sum())
}

fn check_order(s: f64) -> Result<()> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::invalid(format!(
            "order must be finite and >= 0, got {s}"
        )));
    }
    Ok(())
}

/// Every monitored quantity at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagRecord {
    pub t: f64,
    pub l1_u: f64,
    pub l2_u: f64,
    pub linf_u: f64,
    pub linf_dxu: f64,
    pub linf_lbeta_v: f64,
    pub wiener_u_1: f64,
    pub wiener_v_beta: f64,
    pub energy_wiener: f64,
    pub hs_u: f64,
    pub min_u: f64,
    pub min_v: f64,
    /// Running integral of `sup|Lambda^beta v| + sup|d_x u|`.
    pub cont_integral: f64,
    pub l1_v: f64,
}

/// Column order of `diagnostics.csv`.
pub const CSV_HEADER: [&str; 12] = [
    "t",
    "l1_u",
    "l2_u",
    "linf_u",
    "linf_dxu",
    "linf_lbeta_v",
    "wiener_u_1",
    "wiener_v_beta",
    "energy_wiener",
    "min_u",
    "min_v",
    "cont_integral",
];

impl DiagRecord {
    /// Evaluate every norm at `state`; `prev` carries the continuation
    /// integral forward by one trapezoid.
    pub fn compute(
        state: &State,
        params: &SystemParams,
        hs_order: f64,
        prev: Option<&DiagRecord>,
    ) -> Result<Self> {
        let wiener_u_1 = wiener_seminorm(&state.u, 1.0)?;
        let wiener_v_beta = wiener_seminorm(&state.v, params.beta)?;
        let linf_dxu = linf_derivative(&state.u);
        let linf_lbeta_v = linf_fractional(&state.v, params.beta)?;
        let cont_integral = match prev {
            Some(p) => {
                if state.t < p.t {
                    return Err(Error::invalid("diagnostic records must be time-ordered"));
                }
                p.cont_integral
                    + 0.5 * (state.t - p.t) * (p.continuation_integrand() + linf_lbeta_v + linf_dxu)
            }
            None => 0.0,
        };
        Ok(DiagRecord {
            t: state.t,
            l1_u: l1_norm(&state.u),
            l2_u: l2_norm(&state.u),
            linf_u: linf_norm(&state.u),
            linf_dxu,
            linf_lbeta_v,
            wiener_u_1,
            wiener_v_beta,
            energy_wiener: wiener_u_1 + wiener_v_beta,
            hs_u: hs_seminorm(&state.u, hs_order)?,
            min_u: state.min_u(),
            min_v: state.min_v(),
            cont_integral,
            l1_v: l1_norm(&state.v),
        })
    }

    pub fn continuation_integrand(&self) -> f64 {
        self.linf_lbeta_v + self.linf_dxu
    }

    /// Values in [`CSV_HEADER`] order.
    pub fn csv_row(&self) -> [f64; 12] {
        [
            self.t,
            self.l1_u,
            self.l2_u,
            self.linf_u,
            self.linf_dxu,
            self.linf_lbeta_v,
            self.wiener_u_1,
            self.wiener_v_beta,
            self.energy_wiener,
            self.min_u,
            self.min_v,
            self.cont_integral,
        ]
    }
}

/// Trapezoid integral of time-ordered `(t, value)` samples.
pub fn trapezoid(samples: &[(f64, f64)]) -> Result<f64> {
    let mut total = 0.0;
    for w in samples.windows(2) {
        let (t0, y0) = w[0];
        let (t1, y1) = w[1];
        if !(t1 >= t0) {
            return Err(Error::invalid(format!(
                "sample times not ordered: {t0} then {t1}"
            )));
        }
        total += 0.5 * (t1 - t0) * (y0 + y1);
    }
    Ok(total)
}

/// Continuation functional over accepted-step records.
pub fn accumulate_continuation(records: &[DiagRecord]) -> Result<f64> {
    let samples: Vec<(f64, f64)> = records
        .iter()
        .map(|r| (r.t, r.continuation_integrand()))
        .collect();
    trapezoid(&samples)
}

/// Residual of `d/dt ||u||_1 = r (||u||_1 - ||u||_2^2)` between two records:
/// divided difference minus the right-hand side averaged over both ends.
pub fn mass_law_residual(a: &DiagRecord, b: &DiagRecord, r: f64) -> f64 {
    let rate = (b.l1_u - a.l1_u) / (b.t - a.t);
    let rhs_a = a.l1_u - a.l2_u * a.l2_u;
    let rhs_b = b.l1_u - b.l2_u * b.l2_u;
    rate - r * 0.5 * (rhs_a + rhs_b)
}

/// Closed-form `||v(t)||_1` when `r = 0` and both fields stay nonnegative.
/// For `lambda = 0` the mean grows linearly.
pub fn v_l1_exact(l1_u0: f64, l1_v0: f64, lambda: f64, t: f64) -> f64 {
    if lambda == 0.0 {
        l1_v0 + t * l1_u0
    } else {
        l1_u0 / lambda + (l1_v0 - l1_u0 / lambda) * (-lambda * t).exp()
    }
}

/// Observer collecting a [`DiagRecord`] per accepted step.
#[derive(Debug, Clone)]
pub struct DiagnosticsRecorder {
    params: SystemParams,
    hs_order: f64,
    pub records: Vec<DiagRecord>,
    pub error: Option<String>,
}

impl DiagnosticsRecorder {
    /// `hs_order` defaults to `alpha / 2` when `None`.
    pub fn new(params: SystemParams, hs_order: Option<f64>) -> Self {
        DiagnosticsRecorder {
            params,
            hs_order: hs_order.unwrap_or(params.alpha / 2.0),
            records: Vec::new(),
            error: None,
        }
    }
}

impl Observer for DiagnosticsRecorder {
    fn observe(&mut self, state: &State, _info: &StepInfo) {
        match DiagRecord::compute(state, &self.params, self.hs_order, self.records.last()) {
            Ok(r) => self.records.push(r),
            Err(e) => self.error = Some(e.to_string()),
        }
    }
}
