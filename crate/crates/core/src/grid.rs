//! Periodic scalar fields on the unit 2-torus.
//!
//! A [`TorusField`] stores `n * n` samples with the x-index outermost, so
//! sample `(i, j)` sits at `(x, y) = (i / n, j / n)`. Derivatives are
//! Fourier pseudo-spectral; products are plain pointwise products on the
//! grid (no dealiasing).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Default tolerance on the mean of a right-hand side passed to
/// [`TorusField::invert_laplacian`].
pub const DEFAULT_MEAN_TOL: f64 = 1e-10;

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans_for(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut cache = cache.lock().expect("FFT plan cache poisoned");
    cache
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

/// Uniform `n x n` sampling of the unit torus.
#[derive(Clone)]
pub struct Grid {
    n: usize,
    plans: Arc<Plans>,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(n));
        }
        Ok(Self {
            n,
            plans: plans_for(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signed wavenumber for FFT index `idx`; the Nyquist index maps to `+n/2`.
    pub fn wavenumber(&self, idx: usize) -> i64 {
        if idx <= self.n / 2 {
            idx as i64
        } else {
            idx as i64 - self.n as i64
        }
    }

    pub fn is_nyquist(&self, idx: usize) -> bool {
        idx == self.n / 2
    }

    fn fft2(&self, data: &mut [Complex64], forward: bool) {
        let n = self.n;
        let fft = if forward {
            &self.plans.forward
        } else {
            &self.plans.inverse
        };
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        // rows: transform along y (contiguous)
        fft.process_with_scratch(data, &mut scratch);
        // columns: transform along x
        let mut column = vec![Complex64::default(); n];
        for j in 0..n {
            for i in 0..n {
                column[i] = data[i * n + j];
            }
            fft.process_with_scratch(&mut column, &mut scratch);
            for i in 0..n {
                data[i * n + j] = column[i];
            }
        }
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl Eq for Grid {}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("n", &self.n).finish()
    }
}

/// Which partial derivative to take.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Deriv {
    X,
    Y,
    XX,
    YY,
    XY,
}

impl Deriv {
    fn orders(self) -> (u32, u32) {
        match self {
            Deriv::X => (1, 0),
            Deriv::Y => (0, 1),
            Deriv::XX => (2, 0),
            Deriv::YY => (0, 2),
            Deriv::XY => (1, 1),
        }
    }
}

/// Real function on the unit torus sampled on a [`Grid`].
#[derive(Clone, Debug)]
pub struct TorusField {
    grid: Grid,
    values: Vec<f64>,
}

impl TorusField {
    /// Wraps raw samples (row-major, x-index outermost). Rejects non-finite data.
    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(idx));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub(crate) fn from_raw(grid: &Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n;
        let h = grid.spacing();
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f(i as f64 * h, j as f64 * h));
            }
        }
        Self::from_raw(grid, values)
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self::from_raw(grid, vec![c; grid.len()])
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        let n = self.grid.n;
        self.values[(i % n) * n + (j % n)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination. Panics if the grids differ.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        Self::from_raw(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    pub fn add_scalar(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + s * b)
    }

    /// Integral over the unit torus: the mean of the samples.
    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.integrate()
    }

    /// Copy with the mean removed.
    pub fn zero_mean(&self) -> Self {
        self.add_scalar(-self.integrate())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Root-mean-square, i.e. the L2 norm on the unit torus.
    pub fn l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// L2 inner product on the unit torus.
    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / self.values.len() as f64
    }

    pub fn spectrum(&self) -> Spectrum {
        let mut coeffs: Vec<Complex64> = self
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.grid.fft2(&mut coeffs, true);
        let norm = 1.0 / self.grid.len() as f64;
        for c in &mut coeffs {
            *c *= norm;
        }
        Spectrum {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    pub fn derivative(&self, which: Deriv) -> Self {
        self.spectrum().derivative(which)
    }

    /// `f_xx + f_yy`
    pub fn laplacian(&self) -> Self {
        self.spectrum().laplacian()
    }

    /// Zero-mean solution of `Δg = f - mean(f)`, with the default mean tolerance.
    pub fn invert_laplacian(&self) -> Result<Self> {
        self.invert_laplacian_with_tol(DEFAULT_MEAN_TOL)
    }

    pub fn invert_laplacian_with_tol(&self, mean_tol: f64) -> Result<Self> {
        let mean = self.integrate();
        if mean.abs() > mean_tol {
            return Err(Error::NonZeroMeanInput { mean, tol: mean_tol });
        }
        let spec = self.spectrum();
        let four_pi2 = 4.0 * PI * PI;
        Ok(spec.apply(|k, l, _, _| {
            if k == 0 && l == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(-1.0 / (four_pi2 * (k * k + l * l) as f64), 0.0)
            }
        }))
    }

    /// Supremum of the trigonometric interpolant of the samples.
    ///
    /// Each discrete local maximum is refined by Newton's method on the
    /// interpolant, so the value does not depend on whether the true maximum
    /// happens to fall on a grid node.
    pub fn sup_interpolated(&self) -> f64 {
        let n = self.grid.n;
        let grid_max = self.max();
        let spec = self.spectrum();
        let scale = self.sup_abs().max(1.0);
        let idx = |i: usize, j: usize| i * n + j;
        let mut candidates = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = self.at(i, j);
                // only refine near-global discrete local maxima
                if grid_max - v > 0.1 * scale {
                    continue;
                }
                // ties go to the smallest index so plateaus yield one candidate
                let is_local_max = (-1i64..=1).all(|di| {
                    (-1i64..=1).all(|dj| {
                        let ii = (i as i64 + di).rem_euclid(n as i64) as usize;
                        let jj = (j as i64 + dj).rem_euclid(n as i64) as usize;
                        let w = self.at(ii, jj);
                        w < v || (w == v && idx(i, j) <= idx(ii, jj))
                    })
                });
                if is_local_max {
                    candidates.push((v, i, j));
                }
            }
        }
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
        let h = self.grid.spacing();
        let mut best = grid_max;
        for &(_, i, j) in candidates.iter().take(MAX_REFINED_MAXIMA) {
            best = best.max(spec.refine_maximum(i as f64 * h, j as f64 * h));
        }
        best
    }
}

const MAX_REFINED_MAXIMA: usize = 32;

macro_rules! field_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&TorusField> for &TorusField {
            type Output = TorusField;
            fn $method(self, rhs: &TorusField) -> TorusField {
                self.zip_with(rhs, |a, b| a $op b)
            }
        }
        impl $trait<TorusField> for TorusField {
            type Output = TorusField;
            fn $method(self, rhs: TorusField) -> TorusField {
                (&self).$method(&rhs)
            }
        }
    };
}

field_binop!(Add, add, +);
field_binop!(Sub, sub, -);
field_binop!(Mul, mul, *);

impl Neg for &TorusField {
    type Output = TorusField;
    fn neg(self) -> TorusField {
        self.scale(-1.0)
    }
}

/// Second-order local data of an interpolant at one point.
#[derive(Clone, Copy, Debug)]
pub struct PointJet {
    pub value: f64,
    pub gradient: [f64; 2],
    pub hessian: [[f64; 2]; 2],
}

/// Normalized discrete Fourier coefficients of a [`TorusField`].
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient at FFT indices `(p, q)` (x then y).
    pub fn coeff(&self, p: usize, q: usize) -> Complex64 {
        self.coeffs[p * self.grid.n + q]
    }

    /// Multiplies mode `(k, l)` by `symbol(k, l, nyquist_x, nyquist_y)` and
    /// transforms back, keeping the real part.
    pub fn apply(&self, symbol: impl Fn(i64, i64, bool, bool) -> Complex64) -> TorusField {
        let n = self.grid.n;
        let mut data = self.coeffs.clone();
        for p in 0..n {
            let k = self.grid.wavenumber(p);
            let nyq_x = self.grid.is_nyquist(p);
            for q in 0..n {
                let l = self.grid.wavenumber(q);
                data[p * n + q] *= symbol(k, l, nyq_x, self.grid.is_nyquist(q));
            }
        }
        self.grid.fft2(&mut data, false);
        TorusField::from_raw(&self.grid, data.into_iter().map(|c| c.re).collect())
    }

    /// Pseudo-spectral derivative; odd-order Nyquist modes are dropped.
    pub fn derivative(&self, which: Deriv) -> TorusField {
        let (ox, oy) = which.orders();
        self.apply(|k, l, nyq_x, nyq_y| {
            if (ox % 2 == 1 && nyq_x) || (oy % 2 == 1 && nyq_y) {
                return Complex64::new(0.0, 0.0);
            }
            let ikx = Complex64::new(0.0, 2.0 * PI * k as f64);
            let iky = Complex64::new(0.0, 2.0 * PI * l as f64);
            ikx.powu(ox) * iky.powu(oy)
        })
    }

    pub fn laplacian(&self) -> TorusField {
        let four_pi2 = 4.0 * PI * PI;
        self.apply(|k, l, _, _| Complex64::new(-four_pi2 * (k * k + l * l) as f64, 0.0))
    }

    /// Value, gradient and Hessian of the trigonometric interpolant at `(x, y)`.
    pub fn evaluate(&self, x: f64, y: f64) -> PointJet {
        let n = self.grid.n;
        let bx = self.axis_basis(x);
        let by = self.axis_basis(y);
        let (mut v, mut gx, mut gy, mut hxx, mut hyy, mut hxy) =
            (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for p in 0..n {
            let (wx, dwx, ddwx) = bx[p];
            for q in 0..n {
                let c = self.coeffs[p * n + q];
                let (wy, dwy, ddwy) = by[q];
                v += (c * wx * wy).re;
                gx += (c * dwx * wy).re;
                gy += (c * wx * dwy).re;
                hxx += (c * ddwx * wy).re;
                hyy += (c * wx * ddwy).re;
                hxy += (c * dwx * dwy).re;
            }
        }
        PointJet {
            value: v,
            gradient: [gx, gy],
            hessian: [[hxx, hxy], [hxy, hyy]],
        }
    }

    /// Basis function and its first two derivatives for every index on one axis.
    fn axis_basis(&self, s: f64) -> Vec<(Complex64, Complex64, Complex64)> {
        (0..self.grid.n)
            .map(|p| {
                let k = self.grid.wavenumber(p) as f64;
                let w = 2.0 * PI * k;
                if self.grid.is_nyquist(p) {
                    let (sin, cos) = (w * s).sin_cos();
                    (
                        Complex64::new(cos, 0.0),
                        Complex64::new(-w * sin, 0.0),
                        Complex64::new(-w * w * cos, 0.0),
                    )
                } else {
                    let e = Complex64::from_polar(1.0, w * s);
                    let iw = Complex64::new(0.0, w);
                    (e, iw * e, iw * iw * e)
                }
            })
            .collect()
    }

    fn refine_maximum(&self, x0: f64, y0: f64) -> f64 {
        let h = self.grid.spacing();
        let (mut x, mut y) = (x0, y0);
        let mut best = self.evaluate(x, y).value;
        for _ in 0..30 {
            let jet = self.evaluate(x, y);
            let g = jet.gradient;
            let [[hxx, hxy], [_, hyy]] = jet.hessian;
            let det = hxx * hyy - hxy * hxy;
            if !(hxx < 0.0 && det > 0.0) {
                break;
            }
            let dx = -(hyy * g[0] - hxy * g[1]) / det;
            let dy = -(-hxy * g[0] + hxx * g[1]) / det;
            if (x + dx - x0).abs() > h || (y + dy - y0).abs() > h {
                break;
            }
            x += dx;
            y += dy;
            best = best.max(self.evaluate(x, y).value);
            if dx.abs().max(dy.abs()) < 1e-15 {
                break;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    fn tau() -> f64 {
        2.0 * PI
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(Grid::new(2), Err(Error::InvalidGrid(2))));
        assert!(matches!(Grid::new(7), Err(Error::InvalidGrid(7))));
        assert!(Grid::new(6).is_ok());
        assert!(Grid::new(4).is_ok());
    }

    #[test]
    fn rejects_non_finite_values() {
        let g = grid(4);
        let mut v = vec![0.0; 16];
        v[5] = f64::NAN;
        assert!(matches!(TorusField::from_values(&g, v), Err(Error::NonFinite(5))));
        assert!(matches!(
            TorusField::from_values(&g, vec![0.0; 3]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn derivative_of_sine() {
        let g = grid(32);
        let f = TorusField::from_fn(&g, |x, _| (tau() * x).sin());
        let expect = TorusField::from_fn(&g, |x, _| tau() * (tau() * x).cos());
        assert!((f.derivative(Deriv::X) - expect).sup_abs() <= 1e-12);
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = grid(16);
        let f = TorusField::constant(&g, 3.25);
        for d in [Deriv::X, Deriv::Y, Deriv::XX, Deriv::YY, Deriv::XY] {
            assert!(f.derivative(d).sup_abs() < 1e-13, "{d:?}");
        }
    }

    #[test]
    fn mixed_derivative_of_product() {
        let g = grid(32);
        let f = TorusField::from_fn(&g, |x, y| (tau() * x).sin() * (tau() * y).sin());
        let expect = TorusField::from_fn(&g, |x, y| {
            tau() * tau() * (tau() * x).cos() * (tau() * y).cos()
        });
        assert!((f.derivative(Deriv::XY) - expect).sup_abs() <= 1e-11);
    }

    #[test]
    fn nyquist_mode_dropped_by_odd_derivatives_only() {
        let g = grid(8);
        // cos(pi n x) is the x-Nyquist mode
        let f = TorusField::from_fn(&g, |x, _| (PI * 8.0 * x).cos());
        assert!(f.derivative(Deriv::X).sup_abs() < 1e-12);
        assert!(f.derivative(Deriv::XY).sup_abs() < 1e-12);
        let fxx = f.derivative(Deriv::XX);
        assert!((fxx + f.scale(PI * PI * 64.0)).sup_abs() < 1e-9);
    }

    #[test]
    fn integrate_basics() {
        let g = grid(16);
        assert_eq!(TorusField::constant(&g, 1.5).integrate(), 1.5);
        let s = TorusField::from_fn(&g, |x, _| (tau() * x).sin());
        assert!(s.integrate().abs() < 1e-16);
    }

    #[test]
    fn invert_laplacian_single_mode() {
        let g = grid(16);
        let s = TorusField::from_fn(&g, |x, _| (tau() * x).sin());
        let f = s.scale(-tau() * tau());
        assert!((f.invert_laplacian().unwrap() - s).sup_abs() < 1e-14);
        let z = TorusField::zeros(&g).invert_laplacian().unwrap();
        assert_eq!(z.sup_abs(), 0.0);
    }

    #[test]
    fn invert_laplacian_rejects_mean() {
        let g = grid(8);
        let f = TorusField::constant(&g, 1e-6);
        assert!(matches!(
            f.invert_laplacian(),
            Err(Error::NonZeroMeanInput { .. })
        ));
        assert!(f.invert_laplacian_with_tol(1e-5).is_ok());
    }

    #[test]
    fn sup_interpolated_finds_off_grid_maximum() {
        let g = grid(16);
        // maximum at (0.3, 0.7), between grid nodes
        let f = TorusField::from_fn(&g, |x, y| {
            (tau() * (x - 0.3)).cos() + 0.5 * (tau() * (y - 0.7)).cos()
        });
        assert!(f.max() < 1.5 - 1e-3);
        assert!((f.sup_interpolated() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn interpolant_reproduces_samples() {
        let g = grid(8);
        let f = TorusField::from_fn(&g, |x, y| (tau() * x).sin() + (tau() * 2.0 * y).cos());
        let spec = f.spectrum();
        for (i, j) in [(0, 0), (3, 5), (7, 1)] {
            let v = spec.evaluate(i as f64 / 8.0, j as f64 / 8.0).value;
            assert!((v - f.at(i, j)).abs() < 1e-13);
        }
    }
}
