//! Reduction of the invariant Calabi-Yau equation to a periodic
//! Monge-Ampère equation in one scalar potential.
//!
//! A torus-invariant compatible form cohomologous to Ω is generated by a
//! zero-mean potential φ through `f2 = φ_x`, `f4 = φ_y`. Its metric is the
//! triple `A = 1 + φ_xx`, `B = 1 + φ_yy`, `D = φ_xy` and the volume equation
//! reads `AB - D² = e^(F + c)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{cohomology_coeffs, InvariantOneForm, InvariantTwoForm};
use crate::grid::{Deriv, Grid, TorusField};

/// Default positivity margin for [`is_admissible`].
pub const DEFAULT_ADMISSIBILITY_DELTA: f64 = 1e-8;

/// Zero-mean potential φ.
#[derive(Clone, Debug)]
pub struct Potential {
    phi: TorusField,
}

impl Potential {
    /// Wraps `phi`, removing its mean.
    pub fn new(phi: TorusField) -> Self {
        Self {
            phi: phi.zero_mean(),
        }
    }

    pub fn zero(grid: &Grid) -> Self {
        Self {
            phi: TorusField::zeros(grid),
        }
    }

    pub fn phi(&self) -> &TorusField {
        &self.phi
    }

    pub fn grid(&self) -> &Grid {
        self.phi.grid()
    }

    /// `φ + s δ`, re-projected to zero mean.
    pub fn updated(&self, s: f64, delta: &TorusField) -> Self {
        Self::new(self.phi.axpy(s, delta))
    }
}

/// Coefficients of the solved metric and its determinant ν.
#[derive(Clone, Debug)]
pub struct ReducedMetric {
    pub a: TorusField,
    pub b: TorusField,
    pub d: TorusField,
    pub nu: TorusField,
}

/// Log-density `F` together with the additive constant `c`.
#[derive(Clone, Debug)]
pub struct DensityData {
    pub f: TorusField,
    pub c: f64,
}

impl DensityData {
    pub fn new(f: TorusField, c: f64) -> Self {
        Self { f, c }
    }

    /// Chooses `c` with `∫ e^(F + c) = 1`.
    pub fn normalized(f: TorusField) -> Self {
        let c = -f.map(f64::exp).integrate().ln();
        Self { f, c }
    }

    /// `e^(F + c)`
    pub fn volume_density(&self) -> TorusField {
        let c = self.c;
        self.f.map(|v| (v + c).exp())
    }
}

pub fn reduced_metric(p: &Potential) -> ReducedMetric {
    let spec = p.phi.spectrum();
    let a = spec.derivative(Deriv::XX).add_scalar(1.0);
    let b = spec.derivative(Deriv::YY).add_scalar(1.0);
    let d = spec.derivative(Deriv::XY);
    let nu = metric_determinant(&a, &b, &d);
    ReducedMetric { a, b, d, nu }
}

fn metric_determinant(a: &TorusField, b: &TorusField, d: &TorusField) -> TorusField {
    let ab = a * b;
    ab.zip_with(d, |ab, d| ab - d * d)
}

pub fn is_admissible(m: &ReducedMetric, delta: f64) -> bool {
    m.a.min() > delta && m.b.min() > delta && m.nu.min() > delta
}

/// `AB - D² - e^(F + c)`.
pub fn residual(p: &Potential, d: &DensityData) -> TorusField {
    residual_from_metric(&reduced_metric(p), d)
}

pub(crate) fn residual_from_metric(m: &ReducedMetric, d: &DensityData) -> TorusField {
    &m.nu - &d.volume_density()
}

/// Half the trace of the solved metric: `u = 2 + φ_xx + φ_yy`.
pub fn trace_u(p: &Potential) -> TorusField {
    p.phi.laplacian().add_scalar(2.0)
}

pub fn laplace_flat(psi: &TorusField) -> TorusField {
    psi.laplacian()
}

/// Laplacian of the solved metric applied to an invariant function.
pub fn laplace_tilde(psi: &TorusField, m: &ReducedMetric) -> Result<TorusField> {
    let min_nu = m.nu.min();
    if min_nu <= 0.0 {
        return Err(Error::DegenerateMetric { min_nu });
    }
    let spec = psi.spectrum();
    let pxx = spec.derivative(Deriv::XX);
    let pyy = spec.derivative(Deriv::YY);
    let pxy = spec.derivative(Deriv::XY);
    let values = (0..psi.grid().len())
        .map(|k| {
            let (a, b, d, nu) = (m.a.values()[k], m.b.values()[k], m.d.values()[k], m.nu.values()[k]);
            (a * pyy.values()[k] + b * pxx.values()[k] - 2.0 * d * pxy.values()[k]) / nu
        })
        .collect();
    TorusField::from_values(psi.grid(), values)
}

/// Pointwise difference between the two sides of the identity
///
/// `Δ̃u = Δ log ν + (1/ν)(ν_x²/ν + ν_y²/ν + 2(-f2_xx f2_yy + f2_xy² - f4_yy f4_xx + f4_xy²))`
///
/// with `f2 = φ_x`, `f4 = φ_y`. Third derivatives of φ are taken as spectral
/// derivatives of `A`, `B`, `D`.
pub fn key_identity_gap(p: &Potential) -> Result<TorusField> {
    let m = reduced_metric(p);
    let u = &m.a + &m.b;
    let lhs = laplace_tilde(&u, &m)?;

    let sa = m.a.spectrum();
    let sb = m.b.spectrum();
    let sd = m.d.spectrum();
    // f2_x = A - 1, f2_y = D, f4_x = D, f4_y = B - 1
    let f2xx = sa.derivative(Deriv::X);
    let f2yy = sd.derivative(Deriv::Y);
    let f2yx = sd.derivative(Deriv::X);
    let f4xx = sd.derivative(Deriv::X);
    let f4yy = sb.derivative(Deriv::Y);
    let f4yx = sb.derivative(Deriv::X);

    let snu = m.nu.spectrum();
    let nux = snu.derivative(Deriv::X);
    let nuy = snu.derivative(Deriv::Y);
    let lap_log_nu = laplace_flat(&m.nu.map(f64::ln));

    let values = (0..p.grid().len())
        .map(|k| {
            let nu = m.nu.values()[k];
            let (nx, ny) = (nux.values()[k], nuy.values()[k]);
            let hess_terms = -f2xx.values()[k] * f2yy.values()[k] + f2yx.values()[k].powi(2)
                - f4yy.values()[k] * f4xx.values()[k]
                + f4yx.values()[k].powi(2);
            let rhs = lap_log_nu.values()[k] + (nx * nx / nu + ny * ny / nu + 2.0 * hess_terms) / nu;
            lhs.values()[k] - rhs
        })
        .collect();
    TorusField::from_values(p.grid(), values)
}

/// `min Δ̃u - min Δ(F + c)`; nonnegative for exact solutions.
pub fn lemma22_margin(p: &Potential, d: &DensityData) -> Result<f64> {
    let m = reduced_metric(p);
    let lap_u = laplace_tilde(&trace_u(p), &m)?;
    let lap_f = laplace_flat(&d.f.add_scalar(d.c));
    Ok(lap_u.min() - lap_f.min())
}

/// Symmetric 2x2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub fn identity() -> Self {
        Self::new(1.0, 0.0, 1.0)
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn is_positive_definite(&self) -> bool {
        self.xx > 0.0 && self.det() > 0.0
    }
}

/// `(tr PQ)² - 2 det(PQ)` for positive-definite `P` and symmetric `Q`.
pub fn la_inequality(p: Sym2, q: Sym2) -> Result<f64> {
    if !p.is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    let tr = p.xx * q.xx + 2.0 * p.xy * q.xy + p.yy * q.yy;
    Ok(tr * tr - 2.0 * p.det() * q.det())
}

/// Recovers `a = f1 dx + f2 dt + f3 dy + f4 (dz - x dy)` with `Ω + da` equal
/// to the form generated by `p`.
///
/// `f2 = φ_x` and `f4 = φ_y`. The constraint `f3_x - f1_y = f4` is solved
/// mode by mode: modes with `k ∉ {0, n/2}` go to `f3`, the rest to `f1`
/// (the x-derivative drops the Nyquist column). Zero modes of `f1`, `f3`
/// are set to zero.
pub fn reconstruct_one_form(p: &Potential) -> InvariantOneForm {
    let spec = p.phi.spectrum();
    let f2 = spec.derivative(Deriv::X);
    let f4 = spec.derivative(Deriv::Y);
    let zero = rustfft::num_complex::Complex64::new(0.0, 0.0);
    let f3 = spec.apply(|k, l, nyq_x, nyq_y| {
        if k == 0 || nyq_x || nyq_y {
            zero
        } else {
            // (2πil) / (2πik)
            rustfft::num_complex::Complex64::new(l as f64 / k as f64, 0.0)
        }
    });
    let f1 = spec.apply(|k, l, nyq_x, nyq_y| {
        if (k == 0 || nyq_x) && l != 0 && !nyq_y {
            rustfft::num_complex::Complex64::new(-1.0, 0.0)
        } else {
            zero
        }
    });
    InvariantOneForm::new(f1, f2, f3, f4)
}

/// `ω̃ = A e1 + D e3 - D e4 + B e6`.
pub fn assemble_omega_tilde(p: &Potential) -> InvariantTwoForm {
    omega_tilde_from_metric(&reduced_metric(p))
}

pub(crate) fn omega_tilde_from_metric(m: &ReducedMetric) -> InvariantTwoForm {
    let z = TorusField::zeros(m.a.grid());
    InvariantTwoForm::new([m.a.clone(), z.clone(), m.d.clone(), -&m.d, z, m.b.clone()])
}

/// Matrix of the solved metric in the frame `{∂x, ∂t, ∂y + x∂z, ∂z}`.
pub fn metric_matrix(p: &Potential) -> [[TorusField; 4]; 4] {
    let m = reduced_metric(p);
    let z = TorusField::zeros(p.grid());
    let (a, b, d) = (m.a, m.b, m.d);
    [
        [a.clone(), z.clone(), d.clone(), z.clone()],
        [z.clone(), a.clone(), z.clone(), d.clone()],
        [d.clone(), z.clone(), b.clone(), z.clone()],
        [z.clone(), d, z, b],
    ]
}

/// Scalar health metrics of a potential against a density.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Diagnostics {
    pub residual_sup: f64,
    pub residual_l2: f64,
    pub min_nu: f64,
    #[serde(rename = "min_A")]
    pub min_a: f64,
    pub sup_u: f64,
    pub lemma22_margin: f64,
    pub key_identity_sup: f64,
    pub alpha: f64,
    pub beta: f64,
}

pub fn diagnostics(p: &Potential, d: &DensityData) -> Result<Diagnostics> {
    let m = reduced_metric(p);
    let r = residual_from_metric(&m, d);
    let (alpha, beta) = cohomology_coeffs(&omega_tilde_from_metric(&m));
    Ok(Diagnostics {
        residual_sup: r.sup_abs(),
        residual_l2: r.l2(),
        min_nu: m.nu.min(),
        min_a: m.a.min(),
        sup_u: trace_u(p).sup_interpolated(),
        lemma22_margin: lemma22_margin(p, d)?,
        key_identity_sup: key_identity_gap(p)?.sup_abs(),
        alpha,
        beta,
    })
}
