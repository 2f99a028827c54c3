//! Collocation grid on the torus `[-pi, pi)`, Fourier transforms and the
//! multiplier operators used by the model.
//!
//! Coefficients follow the Fourier-series convention
//! `u_hat(k) = (1/n) sum_j u_j exp(-i k x_j)` with `x_j = -pi + 2 pi j / n`,
//! so that `u_j = sum_k u_hat(k) exp(i k x_j)`. They are stored in FFT order:
//! storage index `i` holds wavenumber `i` for `i < n/2` and `i - n` otherwise.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone)]
struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans_for(n: usize) -> Plans {
    static CACHE: OnceLock<Mutex<HashMap<usize, Plans>>> = OnceLock::new();
    let mut cache = CACHE
        .get_or_init(|| Mutex::new(HashMap::new()))
        .lock()
        .unwrap_or_else(|e| e.into_inner());
    cache
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Plans {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            }
        })
        .clone()
}

/// Uniform collocation grid with `n` points on `[-pi, pi)`.
#[derive(Clone)]
pub struct Grid {
    n: usize,
    plans: Plans,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("n", &self.n).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl Eq for Grid {}

impl Grid {
    /// `n` must be a power of two, at least 4.
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::invalid(format!(
                "grid size must be a power of two >= 4, got {n}"
            )));
        }
        Ok(Grid {
            n,
            plans: plans_for(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        -PI + self.spacing() * j as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Wavenumber held at storage index `i`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        wavenumber(i, self.n)
    }

    /// Storage index of wavenumber `k`, if representable.
    pub fn index_of(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k < -half || k >= half {
            return None;
        }
        Some(if k >= 0 {
            k as usize
        } else {
            (k + self.n as i64) as usize
        })
    }

    /// Wavenumbers of every storage slot.
    pub fn wavenumbers(&self) -> Vec<i64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    pub(crate) fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    /// Forward transform of real grid values into Fourier coefficients.
    /// The output is symmetrized so that Hermitian symmetry holds exactly.
    pub(crate) fn forward_into(&self, values: &[f64], out: &mut [Complex64]) {
        debug_assert_eq!(values.len(), self.n);
        for (o, &v) in out.iter_mut().zip(values) {
            *o = Complex64::new(v, 0.0);
        }
        self.plans.forward.process(out);
        let scale = 1.0 / self.n as f64;
        for (i, c) in out.iter_mut().enumerate() {
            let sign = if i % 2 == 0 { scale } else { -scale };
            *c *= sign;
        }
        let n = self.n;
        out[0].im = 0.0;
        out[n / 2].im = 0.0;
        for i in 1..n / 2 {
            let a = out[i];
            let b = out[n - i].conj();
            let avg = (a + b) * 0.5;
            out[i] = avg;
            out[n - i] = avg.conj();
        }
    }

    /// Inverse transform; `scratch` is overwritten, real parts land in `out`.
    pub(crate) fn inverse_into(
        &self,
        coeffs: &[Complex64],
        scratch: &mut [Complex64],
        out: &mut [f64],
    ) {
        debug_assert_eq!(coeffs.len(), self.n);
        for (i, (s, &c)) in scratch.iter_mut().zip(coeffs).enumerate() {
            *s = if i % 2 == 0 { c } else { -c };
        }
        self.plans.inverse.process(scratch);
        for (o, s) in out.iter_mut().zip(scratch.iter()) {
            *o = s.re;
        }
    }
}

pub(crate) fn wavenumber(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Symbol `|k|^s` of the fractional Laplacian; `k = 0` maps to 0 for `s > 0`
/// and to 1 for `s = 0`.
pub fn fractional_symbol(k: i64, s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else if k == 0 {
        0.0
    } else {
        (k.unsigned_abs() as f64).powf(s)
    }
}

/// Symbol `-i sgn(k) |k|^(beta-1)` of the drift operator `Lambda^(beta-1) H`.
pub fn drift_symbol(k: i64, beta: f64) -> Complex64 {
    if k == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let mag = (k.unsigned_abs() as f64).powf(beta - 1.0);
    Complex64::new(0.0, -(k.signum() as f64) * mag)
}

/// Real periodic field held as Fourier coefficients with lazily cached
/// grid values.
#[derive(Clone)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
    values: OnceLock<Vec<f64>>,
}

impl fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralField")
            .field("n", &self.grid.n)
            .field("mean", &self.mean())
            .finish()
    }
}

impl SpectralField {
    /// Transform grid values into a field.
    pub fn forward(grid: &Grid, values: &[f64]) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::invalid(format!(
                "expected {} grid values, got {}",
                grid.n,
                values.len()
            )));
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.n];
        grid.forward_into(values, &mut coeffs);
        Ok(SpectralField {
            grid: grid.clone(),
            coeffs,
            values: OnceLock::new(),
        })
    }

    /// Sample `f` on the grid and transform.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = grid.points().into_iter().map(f).collect();
        Self::forward(grid, &values).expect("length matches grid")
    }

    /// Build from coefficients in storage order. The caller is responsible
    /// for Hermitian symmetry.
    pub fn from_coeffs(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n {
            return Err(Error::invalid(format!(
                "expected {} coefficients, got {}",
                grid.n,
                coeffs.len()
            )));
        }
        Ok(SpectralField {
            grid: grid.clone(),
            coeffs,
            values: OnceLock::new(),
        })
    }

    /// Field with the given coefficients for `k >= 0`; negative modes are
    /// filled by conjugation.
    pub fn from_modes(grid: &Grid, modes: &[(i64, Complex64)]) -> Result<Self> {
        let n = grid.n;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        for &(k, c) in modes {
            if k < 0 || k >= (n / 2) as i64 {
                return Err(Error::invalid(format!(
                    "mode {k} not representable on a grid of {n} points (need 0 <= k < {})",
                    n / 2
                )));
            }
            let k = k as usize;
            if k == 0 {
                coeffs[0] += Complex64::new(c.re, 0.0);
            } else {
                coeffs[k] += c;
                coeffs[n - k] += c.conj();
            }
        }
        Self::from_coeffs(grid, coeffs)
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::from_coeffs(grid, vec![Complex64::new(0.0, 0.0); grid.n]).expect("sized")
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeffs[0] = Complex64::new(c, 0.0);
        f
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Coefficients in storage order.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of wavenumber `k`, zero when `k` is outside the grid band.
    pub fn coeff(&self, k: i64) -> Complex64 {
        self.grid
            .index_of(k)
            .map(|i| self.coeffs[i])
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Grid values `u_j`, computed on first use.
    pub fn values(&self) -> &[f64] {
        self.values.get_or_init(|| {
            let mut scratch = vec![Complex64::new(0.0, 0.0); self.grid.n];
            let mut out = vec![0.0; self.grid.n];
            self.grid.inverse_into(&self.coeffs, &mut scratch, &mut out);
            out
        })
    }

    /// Alias of [`values`](Self::values).
    pub fn inverse(&self) -> Vec<f64> {
        self.values().to_vec()
    }

    /// Mean value over the torus.
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// Apply a Fourier multiplier given by its symbol on (storage index, wavenumber).
    pub fn apply_symbol(&self, symbol: impl Fn(usize, i64) -> Complex64) -> Self {
        let n = self.grid.n;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * symbol(i, wavenumber(i, n)))
            .collect();
        Self::from_coeffs(&self.grid, coeffs).expect("sized")
    }

    /// `Lambda^s`, symbol `|k|^s`.
    pub fn fractional_laplacian(&self, s: f64) -> Result<Self> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::invalid(format!(
                "fractional order must be finite and >= 0, got {s}"
            )));
        }
        Ok(self.apply_symbol(|_, k| Complex64::new(fractional_symbol(k, s), 0.0)))
    }

    /// Hilbert transform, symbol `-i sgn(k)`.
    pub fn hilbert(&self) -> Self {
        self.apply_symbol(|i, k| {
            if self.grid.is_nyquist(i) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, -(k.signum() as f64))
            }
        })
    }

    /// `Lambda^(beta-1) H`, symbol `-i sgn(k) |k|^(beta-1)`; `beta` in (0, 2].
    pub fn drift_operator(&self, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 2.0) {
            return Err(Error::invalid(format!(
                "beta must lie in (0, 2], got {beta}"
            )));
        }
        Ok(self.apply_symbol(|i, k| {
            if self.grid.is_nyquist(i) {
                Complex64::new(0.0, 0.0)
            } else {
                drift_symbol(k, beta)
            }
        }))
    }

    /// Spectral derivative, symbol `i k`.
    pub fn derivative(&self) -> Self {
        self.apply_symbol(|i, k| {
            if self.grid.is_nyquist(i) {
                Complex64::new(0.0, 0.0)
            } else {
                I * k as f64
            }
        })
    }

    /// Two-thirds rule: zero every mode with `|k| > n/3`.
    pub fn dealias(&self) -> Self {
        let cutoff = self.grid.n as f64 / 3.0;
        self.apply_symbol(|_, k| {
            if (k.unsigned_abs() as f64) > cutoff {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
    }

    /// Pointwise product computed on the grid.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        let values: Vec<f64> = self
            .values()
            .iter()
            .zip(other.values())
            .map(|(a, b)| a * b)
            .collect();
        Self::forward(&self.grid, &values)
    }

    /// Circular shift by `cells` grid cells: `out_j = u_{j - cells}`.
    pub fn shift_cells(&self, cells: i64) -> Self {
        let n = self.grid.n as i64;
        let values = self.values();
        let shifted: Vec<f64> = (0..n)
            .map(|j| values[(j - cells).rem_euclid(n) as usize])
            .collect();
        Self::forward(&self.grid, &shifted).expect("sized")
    }

    /// Largest deviation from Hermitian symmetry over all mode pairs.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n;
        let mut worst = self.coeffs[0].im.abs().max(self.coeffs[n / 2].im.abs());
        for i in 1..n / 2 {
            worst = worst.max((self.coeffs[i] - self.coeffs[n - i].conj()).norm());
        }
        worst
    }

    pub(crate) fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::invalid(format!(
                "grid mismatch: {} vs {} points",
                self.grid.n, other.grid.n
            )));
        }
        Ok(())
    }

    fn zip_coeffs(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::from_coeffs(&self.grid, coeffs).expect("sized")
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;

    fn add(self, rhs: Self) -> SpectralField {
        self.zip_coeffs(rhs, |a, b| a + b)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;

    fn sub(self, rhs: Self) -> SpectralField {
        self.zip_coeffs(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;

    fn mul(self, rhs: f64) -> SpectralField {
        self.apply_symbol(|_, _| Complex64::new(rhs, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// O(n^2) DFT under the same convention, independent of rustfft.
    fn direct_dft(grid: &Grid, values: &[f64]) -> Vec<Complex64> {
        let n = grid.n();
        (0..n)
            .map(|i| {
                let k = grid.wavenumber(i) as f64;
                values
                    .iter()
                    .enumerate()
                    .map(|(j, &u)| u * Complex64::from_polar(1.0, -k * grid.point(j)))
                    .sum::<Complex64>()
                    / n as f64
            })
            .collect()
    }

    fn direct_synthesis(grid: &Grid, coeffs: &[Complex64]) -> Vec<f64> {
        (0..grid.n())
            .map(|j| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| {
                        c * Complex64::from_polar(1.0, grid.wavenumber(i) as f64 * grid.point(j))
                    })
                    .sum::<Complex64>()
                    .re
            })
            .collect()
    }

    fn pseudo_random(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect()
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(Grid::new(2).is_err());
        assert!(Grid::new(12).is_err());
        assert!(Grid::new(0).is_err());
        let g = Grid::new(8).unwrap();
        assert_eq!(g.point(0), -PI);
        assert!((g.spacing() - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn forward_rejects_wrong_length() {
        let g = Grid::new(8).unwrap();
        assert!(matches!(
            SpectralField::forward(&g, &[1.0; 7]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn constant_has_only_mean_mode() {
        let g = Grid::new(16).unwrap();
        let f = SpectralField::forward(&g, &[1.0; 16]).unwrap();
        assert!((f.coeff(0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        for k in 1..8 {
            assert!(f.coeff(k).norm() < 1e-15);
            assert!(f.coeff(-k).norm() < 1e-15);
        }
    }

    #[test]
    fn sine_has_two_modes() {
        let g = Grid::new(8).unwrap();
        let f = SpectralField::from_fn(&g, f64::sin);
        assert!((f.coeff(1) - Complex64::new(0.0, -0.5)).norm() < 1e-15);
        assert!((f.coeff(-1) - Complex64::new(0.0, 0.5)).norm() < 1e-15);
        for k in [-4, -3, -2, 0, 2, 3] {
            assert!(f.coeff(k).norm() < 1e-15, "k={k}");
        }
    }

    #[test]
    fn transform_matches_direct_dft_and_roundtrips() {
        let g = Grid::new(64).unwrap();
        let u = pseudo_random(64, 7);
        let f = SpectralField::forward(&g, &u).unwrap();
        let oracle = direct_dft(&g, &u);
        for (a, b) in f.coeffs().iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-14);
        }
        assert!(max_diff(f.values(), &u) < 1e-12);
        assert!(max_diff(&direct_synthesis(&g, f.coeffs()), &u) < 1e-12);
        assert!(f.hermitian_defect() < 1e-12);
    }

    #[test]
    fn parseval() {
        let g = Grid::new(64).unwrap();
        let u = pseudo_random(64, 11);
        let f = SpectralField::forward(&g, &u).unwrap();
        let grid_side: f64 = g.spacing() * u.iter().map(|x| x * x).sum::<f64>();
        let fourier_side: f64 = 2.0 * PI * f.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>();
        assert!((grid_side - fourier_side).abs() / grid_side < 1e-10);
    }

    #[test]
    fn fractional_laplacian_symbols() {
        let g = Grid::new(32).unwrap();
        let s1 = SpectralField::from_fn(&g, f64::sin);
        assert!(max_diff(s1.fractional_laplacian(1.0).unwrap().values(), s1.values()) < 1e-12);

        let s2 = SpectralField::from_fn(&g, |x| (2.0 * x).sin());
        let half = s2.fractional_laplacian(0.5).unwrap();
        let expect: Vec<f64> = s2.values().iter().map(|v| v * 2f64.sqrt()).collect();
        assert!(max_diff(half.values(), &expect) < 1e-12);

        let c = SpectralField::constant(&g, 3.0);
        assert!(c
            .fractional_laplacian(0.7)
            .unwrap()
            .values()
            .iter()
            .all(|v| v.abs() < 1e-15));
        assert!(max_diff(c.fractional_laplacian(0.0).unwrap().values(), c.values()) < 1e-15);
        assert!(c.fractional_laplacian(-0.1).is_err());
    }

    #[test]
    fn hilbert_symbols() {
        let g = Grid::new(32).unwrap();
        let sin = SpectralField::from_fn(&g, f64::sin);
        let cos = SpectralField::from_fn(&g, f64::cos);
        let neg_cos: Vec<f64> = cos.values().iter().map(|v| -v).collect();
        assert!(max_diff(sin.hilbert().values(), &neg_cos) < 1e-12);
        assert!(max_diff(cos.hilbert().values(), sin.values()) < 1e-12);

        let f = SpectralField::from_fn(&g, |x| 2.0 + x.sin() + 0.3 * (3.0 * x).cos());
        let hh = f.hilbert().hilbert();
        let expect: Vec<f64> = f.values().iter().map(|v| -(v - f.mean())).collect();
        assert!(max_diff(hh.values(), &expect) < 1e-12);
    }

    #[test]
    fn drift_operator_symbols() {
        let g = Grid::new(32).unwrap();
        let sin = SpectralField::from_fn(&g, f64::sin);
        let cos = SpectralField::from_fn(&g, f64::cos);
        let neg_cos: Vec<f64> = cos.values().iter().map(|v| -v).collect();
        assert!(max_diff(sin.drift_operator(2.0).unwrap().values(), &neg_cos) < 1e-12);
        assert!(max_diff(cos.drift_operator(1.0).unwrap().values(), sin.values()) < 1e-12);

        // -i sgn(k) 2^0.5 on k = +-2: sin(2x) = (e^{2ix} - e^{-2ix})/(2i) maps to
        // -sqrt(2) (e^{2ix} + e^{-2ix}) / 2 = -sqrt(2) cos(2x).
        let s2 = SpectralField::from_fn(&g, |x| (2.0 * x).sin());
        let expect: Vec<f64> = g
            .points()
            .iter()
            .map(|x| -(2f64.sqrt()) * (2.0 * x).cos())
            .collect();
        assert!(max_diff(s2.drift_operator(1.5).unwrap().values(), &expect) < 1e-12);

        assert!(sin.drift_operator(0.0).is_err());
        assert!(sin.drift_operator(2.5).is_err());
    }

    #[test]
    fn derivative_symbols() {
        let g = Grid::new(32).unwrap();
        let sin = SpectralField::from_fn(&g, f64::sin);
        let cos = SpectralField::from_fn(&g, f64::cos);
        assert!(max_diff(sin.derivative().values(), cos.values()) < 1e-12);
        let c = SpectralField::constant(&g, 2.0);
        assert!(c.derivative().values().iter().all(|v| v.abs() < 1e-15));

        let f = SpectralField::from_fn(&g, |x| (x.sin()).exp());
        let lhs = f.fractional_laplacian(1.0).unwrap();
        let rhs = f.hilbert().derivative();
        assert!(max_diff(lhs.values(), rhs.values()) < 1e-12);
    }

    #[test]
    fn dealias_two_thirds() {
        let g = Grid::new(8).unwrap();
        let f = SpectralField::from_modes(
            &g,
            &[(3, Complex64::new(0.2, 0.1)), (1, Complex64::new(1.0, 0.0))],
        )
        .unwrap();
        let d = f.dealias();
        assert_eq!(d.coeff(3), Complex64::new(0.0, 0.0));
        assert_eq!(d.coeff(-3), Complex64::new(0.0, 0.0));
        assert_eq!(d.coeff(1), f.coeff(1));

        let g = Grid::new(64).unwrap();
        let f = SpectralField::from_fn(&g, f64::sin);
        let d = f.dealias();
        assert!(d
            .coeffs()
            .iter()
            .zip(f.coeffs())
            .all(|(a, b)| (a - b).norm() < 1e-15));
        assert_eq!(d.coeff(1), f.coeff(1));
    }

    #[test]
    fn dealiased_product_matches_dense_convolution() {
        // cos(16x)^2 on n=64: the k=+-32 product mode aliases onto the Nyquist slot.
        let g = Grid::new(64).unwrap();
        let a = SpectralField::from_fn(&g, |x| (16.0 * x).cos() + 0.5 * (3.0 * x).sin());
        let prod = a.product(&a).unwrap().dealias();
        let n = g.n() as i64;
        let cutoff = n as f64 / 3.0;
        for i in 0..g.n() {
            let k = g.wavenumber(i);
            let mut exact = Complex64::new(0.0, 0.0);
            for p in -n / 2..n / 2 {
                let q = k - p;
                exact += a.coeff(p) * a.coeff(q);
            }
            if (k.unsigned_abs() as f64) > cutoff {
                exact = Complex64::new(0.0, 0.0);
            }
            assert!((prod.coeffs()[i] - exact).norm() < 1e-13, "k={k}");
        }
        // without dealiasing the Nyquist slot carries the aliased energy
        let raw = a.product(&a).unwrap();
        assert!(raw.coeff(-32).norm() > 0.1);
    }
}
