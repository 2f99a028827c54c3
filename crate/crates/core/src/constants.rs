//! Explicit constants: absorbing-set radii, the smoothing constants
//! `C1..C6`, `K1`, `K2`, the analyticity width and the peak-count bounds.
//!
//! The Sobolev, Kato-Ponce and related embedding constants are never given
//! numerically; they are inputs and default to 1.0, which makes every derived
//! quantity a placeholder rather than a rigorous bound.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{hs_norm, l1_norm, linf_norm, wiener_seminorm};
use crate::error::{Error, Result};
use crate::model::{State, SystemParams};

/// Embedding constants. `c_se1..c_se4` are the four Sobolev constants at
/// `alpha`; `c_se2_at_1_1` is the second one evaluated at 1.1, which the
/// `K2` branch uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConstants {
    pub c_se1: f64,
    pub c_se2: f64,
    pub c_se3: f64,
    pub c_se4: f64,
    pub c_se2_at_1_1: f64,
    pub c_kp: f64,
    pub c_kpv: f64,
    pub c_gn: f64,
    pub c_i: f64,
    pub c_si: f64,
}

impl Default for EmbeddingConstants {
    fn default() -> Self {
        EmbeddingConstants {
            c_se1: 1.0,
            c_se2: 1.0,
            c_se3: 1.0,
            c_se4: 1.0,
            c_se2_at_1_1: 1.0,
            c_kp: 1.0,
            c_kpv: 1.0,
            c_gn: 1.0,
            c_i: 1.0,
            c_si: 1.0,
        }
    }
}

impl EmbeddingConstants {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("c_se1", self.c_se1),
            ("c_se2", self.c_se2),
            ("c_se3", self.c_se3),
            ("c_se4", self.c_se4),
            ("c_se2_at_1_1", self.c_se2_at_1_1),
            ("c_kp", self.c_kp),
            ("c_kpv", self.c_kpv),
            ("c_gn", self.c_gn),
            ("c_i", self.c_i),
            ("c_si", self.c_si),
        ];
        for (name, v) in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// True when any constant still holds its 1.0 default.
    pub fn has_placeholders(&self) -> bool {
        let d = Self::default();
        [
            self.c_se1 == d.c_se1,
            self.c_se2 == d.c_se2,
            self.c_se3 == d.c_se3,
            self.c_se4 == d.c_se4,
            self.c_se2_at_1_1 == d.c_se2_at_1_1,
            self.c_kp == d.c_kp,
            self.c_kpv == d.c_kpv,
            self.c_gn == d.c_gn,
            self.c_i == d.c_i,
            self.c_si == d.c_si,
        ]
        .into_iter()
        .any(|b| b)
    }
}

/// Truncated Fourier sum with its tail bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: f64,
    /// Largest `|k|` summed.
    pub truncation: u64,
    /// Upper bound on the omitted tail.
    pub tail_bound: f64,
}

const MAX_TRUNCATION: u64 = 100_000_000;

fn check_c_fs_domain(beta: f64, alpha: f64, lambda: f64, nu: f64) -> Result<()> {
    if !(alpha > 1.0) {
        return Err(Error::invalid(format!(
            "C_FS diverges unless alpha > 1 (terms decay like |k|^-alpha), got alpha = {alpha}"
        )));
    }
    if !(beta >= alpha / 2.0) {
        return Err(Error::invalid(format!(
            "C_FS needs beta >= alpha/2, got beta = {beta}, alpha = {alpha}"
        )));
    }
    if !(nu > 0.0) || !(lambda >= 0.0) {
        return Err(Error::invalid("C_FS needs nu > 0 and lambda >= 0"));
    }
    Ok(())
}

/// Tail of `2 sum_{k > K}` using `term(k) <= k^-alpha / nu^2`, bounded by
/// `2 K^(1-alpha) / ((alpha-1) nu^2)`.
fn c_fs_tail(alpha: f64, nu: f64, k: u64) -> f64 {
    2.0 * (k as f64).powf(1.0 - alpha) / ((alpha - 1.0) * nu * nu)
}

/// `C_FS = sum_{k != 0} (|k|^(beta-alpha/2) / (nu |k|^beta + lambda))^2`,
/// summed up to `|k| = k_max`.
pub fn c_fs_truncated(
    beta: f64,
    alpha: f64,
    lambda: f64,
    nu: f64,
    k_max: u64,
) -> Result<SeriesValue> {
    check_c_fs_domain(beta, alpha, lambda, nu)?;
    let mut sum = 0.0;
    // Smallest terms first.
    for k in (1..=k_max).rev() {
        let kf = k as f64;
        let term = kf.powf(beta - alpha / 2.0) / (nu * kf.powf(beta) + lambda);
        sum += term * term;
    }
    Ok(SeriesValue {
        value: 2.0 * sum,
        truncation: k_max,
        tail_bound: c_fs_tail(alpha, nu, k_max),
    })
}

/// [`c_fs_truncated`] with the truncation chosen so the tail bound drops
/// below `tail_tol` (capped at 10^8 terms; the reported bound says whether
/// the tolerance was met).
pub fn c_fs(beta: f64, alpha: f64, lambda: f64, nu: f64, tail_tol: f64) -> Result<SeriesValue> {
    check_c_fs_domain(beta, alpha, lambda, nu)?;
    if !(tail_tol > 0.0) {
        return Err(Error::invalid("tail_tol must be > 0"));
    }
    let needed = (2.0 / ((alpha - 1.0) * nu * nu * tail_tol))
        .powf(1.0 / (alpha - 1.0))
        .ceil();
    let k = if needed.is_finite() {
        (needed as u64).clamp(1, MAX_TRUNCATION)
    } else {
        MAX_TRUNCATION
    };
    c_fs_truncated(beta, alpha, lambda, nu, k)
}

/// `N = max(||u0||_1, 2 pi)`.
pub fn n_script(l1_u0: f64) -> f64 {
    l1_u0.max(2.0 * PI)
}

fn require_alpha_above_one(alpha: f64, what: &str) -> Result<()> {
    if !(alpha > 1.0) {
        return Err(Error::invalid(format!(
            "{what} needs alpha > 1, got {alpha}"
        )));
    }
    Ok(())
}

/// Radius of the absorbing set in `L^2`.
pub fn s_l2(
    params: &SystemParams,
    n_script: f64,
    c: &EmbeddingConstants,
    c_fs: f64,
) -> Result<f64> {
    require_alpha_above_one(params.alpha, "S(L^2)")?;
    let a = params.alpha;
    let nn = n_script;
    let kp_gn = (c.c_kp * c.c_gn).powf((2.0 * a + 2.0) / (a - 1.0));
    let bracket = 3.0 * nn
        + c.c_kp.powi(2) * nn.powi(3) / params.mu * 2.0 * c_fs
        + kp_gn * 4.0 * nn * nn / params.mu * (2.0 * nn * c_fs).powf((a + 1.0) / (a - 1.0));
    Ok(params.r.exp() * bracket)
}

/// The exponent `I` entering `S(H^{alpha/2})`.
pub fn i_script(
    params: &SystemParams,
    n_script: f64,
    c: &EmbeddingConstants,
    c_fs: f64,
) -> Result<f64> {
    require_alpha_above_one(params.alpha, "I")?;
    let (mu, nu, r) = (params.mu, params.nu, params.r);
    let nn = n_script;
    let kpv = (c.c_kpv * (c.c_se3 * c.c_se1 + c.c_se4)).powi(2);
    Ok(r + r * r * c.c_se2 / mu * 6.0 * nn
        + nn / nu
            * (3.0 / nu + 2.0 * c_fs)
            * (0.5 + (2.0 * c.c_se2 + c.c_i * c.c_i) / mu * kpv / mu))
}

/// `log S(H^{alpha/2})`, evaluated without overflow:
/// `S(H^{alpha/2}) = S(L^2) (1 + 2 (1 + e^-r) / mu * e^{2 I})`.
pub fn log_s_halpha2(params: &SystemParams, s_l2: f64, i_script: f64) -> f64 {
    let log_b = (2.0 * (1.0 + (-params.r).exp()) / params.mu).ln() + 2.0 * i_script;
    // log(1 + e^b) computed stably
    let log1p_exp = if log_b > 0.0 {
        log_b + (-log_b).exp().ln_1p()
    } else {
        log_b.exp().ln_1p()
    };
    s_l2.ln() + log1p_exp
}

/// `S(H^{alpha/2})`; overflows to infinity for large `I`, see [`log_s_halpha2`].
pub fn s_halpha2(params: &SystemParams, s_l2: f64, i_script: f64) -> f64 {
    s_l2 * (1.0 + 2.0 * (1.0 + (-params.r).exp()) / params.mu * (2.0 * i_script).exp())
}

/// `omega_0 = min(nu / 3, mu / 8)`.
pub fn omega0(params: &SystemParams) -> f64 {
    (params.nu / 3.0).min(params.mu / 8.0)
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::invalid(format!(
            "omega must be finite and > 0, got {omega}"
        )));
    }
    Ok(())
}

/// `C1 = max_{xi > 0} 4 omega xi - (mu/2) xi^alpha`, closed form.
pub fn c1(params: &SystemParams, omega: f64) -> Result<f64> {
    check_omega(omega)?;
    let a = params.alpha;
    if !(a > 1.0) {
        return Err(Error::invalid(format!(
            "C1 has no finite maximum for alpha = {a} <= 1; use the K2 branch"
        )));
    }
    let base = 8.0 * omega / (params.mu * a);
    Ok(4.0 * omega * base.powf(1.0 / (a - 1.0)) - params.mu / 2.0 * base.powf(a / (a - 1.0)))
}

/// `C2 = max_{xi > 0} 3 omega xi - nu xi^beta`, closed form.
pub fn c2(params: &SystemParams, omega: f64) -> Result<f64> {
    check_omega(omega)?;
    let b = params.beta;
    if !(b > 1.0) {
        return Err(Error::invalid(format!(
            "C2 has no finite maximum for beta = {b} <= 1; use the K2 branch"
        )));
    }
    let base = 3.0 * omega / (params.nu * b);
    Ok(3.0 * omega * base.powf(1.0 / (b - 1.0)) - params.nu * base.powf(b / (b - 1.0)))
}

pub fn c3(params: &SystemParams, omega: f64, c: &EmbeddingConstants) -> Result<f64> {
    check_omega(omega)?;
    let a = params.alpha;
    require_alpha_above_one(a, "C3")?;
    let si2 = c.c_si * c.c_si;
    let first = si2 / omega * (a - 1.0) / a * (omega * omega * a / si2).powf(-1.0 / (a - 1.0));
    let r = params.r;
    Ok(2.0
        * (first
            + 2.0 * omega
            + 1.25
            + 2.0 * r
            + (17.5 * c.c_se2).powi(2)
            + (9.0 * r * c.c_se2).powi(2) / 2.0))
}

pub fn c4(params: &SystemParams, c: &EmbeddingConstants) -> f64 {
    1.5 + 2.0 * (c.c_kpv * c.c_kpv * c.c_se2).powi(2) / params.mu
}

pub fn c5(params: &SystemParams, c: &EmbeddingConstants) -> f64 {
    let r = params.r;
    let s = c.c_se2_at_1_1;
    2.0 * (params.mu / 4.0 + 1.25 + 2.0 * r + (17.5 * s).powi(2) + (9.0 * r * s).powi(2) / 2.0)
}

pub fn c6(params: &SystemParams, c: &EmbeddingConstants) -> f64 {
    1.5 + 2.0 * (c.c_kpv * c.c_kpv * c.c_se2_at_1_1).powi(2) / params.mu
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KBranch {
    K1,
    K2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KScript {
    /// Only defined when `alpha, beta > 1`.
    pub k1: Option<f64>,
    pub k2: f64,
    pub k: f64,
    pub branch: KBranch,
}

/// `K1` (needs `alpha, beta > 1`).
pub fn k1(params: &SystemParams, omega: f64, c: &EmbeddingConstants) -> Result<f64> {
    let p = params;
    Ok(1.0
        + (p.mu + 2.0 + 2.0 * p.r + p.nu + p.lambda + 1.0) * c.c_se2
        + c1(p, omega)?
        + 2.0 * c2(p, omega)?
        + c3(p, omega, c)?
        + c4(p, c))
}

pub fn k2(params: &SystemParams, c: &EmbeddingConstants) -> f64 {
    let p = params;
    1.0 + (1.0 + p.mu + 2.0 + 2.0 * p.r + p.nu + p.lambda + 1.0) * c.c_se2_at_1_1
        + c5(p, c)
        + c6(p, c)
}

/// `K = K1` when `alpha, beta > 1`, `K2` when `min(alpha, beta) = 1`.
pub fn k_script(params: &SystemParams, omega: f64, c: &EmbeddingConstants) -> Result<KScript> {
    let m = params.alpha.min(params.beta);
    if !(m >= 1.0) {
        return Err(Error::invalid(format!(
            "K is only defined for min(alpha, beta) >= 1, got {m}"
        )));
    }
    check_omega(omega)?;
    let k2v = k2(params, c);
    if m > 1.0 {
        let k1v = k1(params, omega, c)?;
        Ok(KScript {
            k1: Some(k1v),
            k2: k2v,
            k: k1v,
            branch: KBranch::K1,
        })
    } else {
        Ok(KScript {
            k1: None,
            k2: k2v,
            k: k2v,
            branch: KBranch::K2,
        })
    }
}

/// `(12 pi K1 / log 2) * log(6 sqrt(2) K1 * level)`, where `level` bounds
/// `sup |u|` (or `sup |v|`).
pub fn peak_count_bound(k1: f64, level: f64) -> f64 {
    peak_count_bound_log(k1, level.ln())
}

/// [`peak_count_bound`] with `log(level)` supplied directly.
pub fn peak_count_bound_log(k1: f64, log_level: f64) -> f64 {
    12.0 * PI * k1 / LN_2 * ((6.0 * 2f64.sqrt() * k1).ln() + log_level)
}

/// `min(mu - 1, nu - <u0>, lambda / 2)`.
pub fn smallness_threshold(params: &SystemParams, mean_u0: f64) -> f64 {
    (params.mu - 1.0)
        .min(params.nu - mean_u0)
        .min(params.lambda / 2.0)
}

/// `T~ = (1 + ||u0||_{H^3}^2 + ||v0||_{H^4}^2) / (3 K)`.
pub fn t_tilde(h3_u0: f64, h4_v0: f64, k: f64) -> f64 {
    (1.0 + h3_u0 * h3_u0 + h4_v0 * h4_v0) / (3.0 * k)
}

/// Norms of the initial data the bounds depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataNorms {
    pub l1_u0: f64,
    pub mean_u0: f64,
    pub linf_u0: f64,
    pub linf_v0: f64,
    pub h3_u0: f64,
    pub h4_v0: f64,
    /// `|u0|_1 + |v0|_beta`.
    pub energy_wiener0: f64,
}

impl DataNorms {
    pub fn from_state(state: &State, beta: f64) -> Result<Self> {
        Ok(DataNorms {
            l1_u0: l1_norm(&state.u),
            mean_u0: state.u.mean(),
            linf_u0: linf_norm(&state.u),
            linf_v0: linf_norm(&state.v),
            h3_u0: hs_norm(&state.u, 3.0)?,
            h4_v0: hs_norm(&state.v, 4.0)?,
            energy_wiener0: wiener_seminorm(&state.u, 1.0)? + wiener_seminorm(&state.v, beta)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub c_fs_tail_tol: f64,
    /// The integer `N >= 3` in the analyticity width `W = omega0 T~ / N`.
    pub width_divisor: u32,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            c_fs_tail_tol: 1e-6,
            width_divisor: 3,
        }
    }
}

/// Hypotheses under which the reported quantities are theorems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hypotheses {
    /// `r > 0` and `2 >= beta >= alpha >= 8/7` (attractor peak bound).
    pub attractor_peak_bound: bool,
    /// `r = 0`, `mu > 1`, `1 <= beta <= 2 <= 1 + alpha` (Wiener smallness).
    pub wiener_smallness: bool,
    /// Data satisfy `E(0) < smallness_threshold`.
    pub wiener_data_small: bool,
    /// `2 >= alpha, beta >= 1` (analyticity width and interval count).
    pub smoothing: bool,
}

/// Every evaluated constant. Quantities outside their parameter domain are
/// `None` with a note.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub params: SystemParams,
    pub constants: EmbeddingConstants,
    pub norms: DataNorms,
    pub options: ReportOptions,
    pub placeholder_constants: bool,
    pub hypotheses: Hypotheses,
    pub c_fs: Option<f64>,
    pub c_fs_tail_bound: Option<f64>,
    pub n_script: f64,
    pub s_l2: Option<f64>,
    pub i_script: Option<f64>,
    pub s_halpha2: Option<f64>,
    pub log_s_halpha2: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub k1: Option<f64>,
    pub k2: f64,
    pub k_script: Option<f64>,
    pub k_branch: Option<KBranch>,
    pub omega0: f64,
    pub t_tilde: Option<f64>,
    pub w_script: Option<f64>,
    pub interval_count: Option<u64>,
    pub smallness_threshold: f64,
    /// Attractor bound, level `C_SE^2 S(H^{alpha/2})`.
    pub peak_bound_u: Option<f64>,
    /// Bound from the initial data, level `||u0||_inf`.
    pub peak_bound_u_data: Option<f64>,
    /// Bound from the initial data, level `||v0||_inf`.
    pub peak_bound_v: Option<f64>,
    pub notes: Vec<String>,
}

/// Evaluate every constant for `params` and the given data norms.
pub fn evaluate(
    params: &SystemParams,
    constants: &EmbeddingConstants,
    norms: &DataNorms,
    options: &ReportOptions,
) -> Result<ConstantsReport> {
    params.validate()?;
    constants.validate()?;
    if options.width_divisor < 3 {
        return Err(Error::invalid("width_divisor must be >= 3"));
    }
    let values = [
        norms.l1_u0,
        norms.linf_u0,
        norms.linf_v0,
        norms.h3_u0,
        norms.h4_v0,
    ];
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid("data norms must be finite and nonnegative"));
    }
    let p = params;
    let mut notes = Vec::new();
    let placeholder = constants.has_placeholders();
    if placeholder {
        notes.push(
            "placeholder constants: embedding constants left at 1.0 are not rigorous values"
                .to_string(),
        );
    }

    let note = |r: Result<f64>, notes: &mut Vec<String>| match r {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(e.to_string());
            None
        }
    };

    let n_scr = n_script(norms.l1_u0);
    let cfs = match c_fs(p.beta, p.alpha, p.lambda, p.nu, options.c_fs_tail_tol) {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(e.to_string());
            None
        }
    };
    let s_l2_v = cfs.and_then(|c| note(s_l2(p, n_scr, constants, c.value), &mut notes));
    let i_v = cfs.and_then(|c| note(i_script(p, n_scr, constants, c.value), &mut notes));
    let (s_h, log_s_h) = match (s_l2_v, i_v) {
        (Some(s), Some(i)) => (Some(s_halpha2(p, s, i)), Some(log_s_halpha2(p, s, i))),
        _ => (None, None),
    };

    let w0 = omega0(p);
    let c1_v = note(c1(p, w0), &mut notes);
    let c2_v = note(c2(p, w0), &mut notes);
    let c3_v = note(c3(p, w0, constants), &mut notes);
    let ks = match k_script(p, w0, constants) {
        Ok(k) => Some(k),
        Err(e) => {
            notes.push(e.to_string());
            None
        }
    };
    let k1_v = ks.and_then(|k| k.k1);
    let k_v = ks.map(|k| k.k);

    let t_t = k_v.map(|k| t_tilde(norms.h3_u0, norms.h4_v0, k));
    let w = t_t.map(|t| w0 * t / options.width_divisor as f64);
    let intervals = w.map(|w| (4.0 * PI / w).floor() as u64);

    let peak_u = match (k1_v, log_s_h) {
        (Some(k1), Some(ls)) => Some(peak_count_bound_log(k1, constants.c_se2.ln() + ls)),
        _ => None,
    };
    let peak_u_data = k1_v.map(|k1| peak_count_bound(k1, norms.linf_u0));
    let peak_v = k1_v.map(|k1| peak_count_bound(k1, norms.linf_v0));
    if k1_v.is_none() {
        notes.push("peak bounds need K1, i.e. alpha, beta > 1".to_string());
    }

    let hypotheses = Hypotheses {
        attractor_peak_bound: p.r > 0.0
            && p.beta <= 2.0
            && p.beta >= p.alpha
            && p.alpha >= 8.0 / 7.0,
        wiener_smallness: p.r == 0.0
            && p.mu > 1.0
            && p.beta >= 1.0
            && p.beta <= 2.0
            && 2.0 <= 1.0 + p.alpha,
        wiener_data_small: norms.energy_wiener0 < smallness_threshold(p, norms.mean_u0),
        smoothing: p.alpha >= 1.0 && p.beta >= 1.0,
    };
    if !hypotheses.attractor_peak_bound {
        notes.push("attractor peak-bound hypotheses (r > 0, 2 >= beta >= alpha >= 8/7) not met: peak bounds are informational".to_string());
    }

    Ok(ConstantsReport {
        params: *p,
        constants: *constants,
        norms: *norms,
        options: *options,
        placeholder_constants: placeholder,
        hypotheses,
        c_fs: cfs.map(|c| c.value),
        c_fs_tail_bound: cfs.map(|c| c.tail_bound),
        n_script: n_scr,
        s_l2: s_l2_v,
        i_script: i_v,
        s_halpha2: s_h,
        log_s_halpha2: log_s_h,
        c1: c1_v,
        c2: c2_v,
        c3: c3_v,
        c4: c4(p, constants),
        c5: c5(p, constants),
        c6: c6(p, constants),
        k1: k1_v,
        k2: k2(p, constants),
        k_script: k_v,
        k_branch: ks.map(|k| k.branch),
        omega0: w0,
        t_tilde: t_t,
        w_script: w,
        interval_count: intervals,
        smallness_threshold: smallness_threshold(p, norms.mean_u0),
        peak_bound_u: peak_u,
        peak_bound_u_data: peak_u_data,
        peak_bound_v: peak_v,
        notes,
    })
}
