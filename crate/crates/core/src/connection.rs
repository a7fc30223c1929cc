//! Canonical connection of `(Ω, J)` in the unitary coframe
//!
//! `θ¹ = (dx + √-1 dt)/√2`, `θ² = (dy + √-1 (dz - x dy))/√2`.
//!
//! All forms here are left-invariant with constant coefficients, so the
//! structure equations are evaluated exactly in `Q(√2)[√-1]`. One-forms are
//! stored over `{θ¹, θ², θ̄¹, θ̄²}` (indices 0..4) and two-forms over the six
//! ordered products `θᵃ∧θᵇ`, `a < b`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::exact::ExactComplex;
use crate::forms::{ext_d, j_one_form, InvariantOneForm, InvariantTwoForm, TWO_FORM_BASIS};
use crate::grid::{Grid, TorusField};

/// Index pairs of the degree-2 basis; same ordering as [`TWO_FORM_BASIS`].
pub const PAIRS: [(usize, usize); 6] = TWO_FORM_BASIS;

pub const THETA_NAMES: [&str; 4] = ["θ1", "θ2", "θ̄1", "θ̄2"];

/// Index of θⁱ's conjugate.
const fn conj_index(a: usize) -> usize {
    (a + 2) % 4
}

fn pair_index(a: usize, b: usize) -> Option<(usize, bool)> {
    if a == b {
        return None;
    }
    let (lo, hi, flipped) = if a < b { (a, b, false) } else { (b, a, true) };
    let idx = PAIRS.iter().position(|&p| p == (lo, hi)).expect("valid pair");
    Some((idx, flipped))
}

/// Constant 1-form over `{θ¹, θ², θ̄¹, θ̄²}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComplexOneForm {
    pub coeffs: [ExactComplex; 4],
}

impl ComplexOneForm {
    pub fn zero() -> Self {
        Self {
            coeffs: [ExactComplex::zero(); 4],
        }
    }

    /// The basis element with index `a`.
    pub fn basis(a: usize) -> Self {
        let mut f = Self::zero();
        f.coeffs[a] = ExactComplex::one();
        f
    }

    pub fn theta(i: usize) -> Self {
        Self::basis(i - 1)
    }

    pub fn theta_bar(i: usize) -> Self {
        Self::basis(i + 1)
    }

    pub fn scale(&self, s: ExactComplex) -> Self {
        Self {
            coeffs: self.coeffs.map(|c| s * c),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            coeffs: std::array::from_fn(|k| self.coeffs[k] + o.coeffs[k]),
        }
    }

    /// Complex conjugate form: swaps θⁱ and θ̄ⁱ and conjugates coefficients.
    pub fn conj(&self) -> Self {
        Self {
            coeffs: std::array::from_fn(|a| self.coeffs[conj_index(a)].conj()),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(ExactComplex::is_zero)
    }

    pub fn wedge(&self, o: &Self) -> ComplexTwoForm {
        let mut out = ComplexTwoForm::zero();
        for a in 0..4 {
            for b in 0..4 {
                if let Some((idx, flipped)) = pair_index(a, b) {
                    let term = self.coeffs[a] * o.coeffs[b];
                    out.coeffs[idx] = if flipped {
                        out.coeffs[idx] - term
                    } else {
                        out.coeffs[idx] + term
                    };
                }
            }
        }
        out
    }
}

/// Constant 2-form over the products `θᵃ∧θᵇ`, `a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComplexTwoForm {
    pub coeffs: [ExactComplex; 6],
}

impl ComplexTwoForm {
    pub fn zero() -> Self {
        Self {
            coeffs: [ExactComplex::zero(); 6],
        }
    }

    /// Antisymmetric component `w(θᵃ, θᵇ)` for any index order.
    pub fn component(&self, a: usize, b: usize) -> ExactComplex {
        match pair_index(a, b) {
            None => ExactComplex::zero(),
            Some((idx, false)) => self.coeffs[idx],
            Some((idx, true)) => -self.coeffs[idx],
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            coeffs: std::array::from_fn(|k| self.coeffs[k] + o.coeffs[k]),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self {
            coeffs: std::array::from_fn(|k| self.coeffs[k] - o.coeffs[k]),
        }
    }

    pub fn scale(&self, s: ExactComplex) -> Self {
        Self {
            coeffs: self.coeffs.map(|c| s * c),
        }
    }

    pub fn conj(&self) -> Self {
        let mut out = Self::zero();
        for (k, &(a, b)) in PAIRS.iter().enumerate() {
            let (idx, flipped) = pair_index(conj_index(a), conj_index(b)).expect("distinct");
            let c = self.coeffs[k].conj();
            out.coeffs[idx] = if flipped { -c } else { c };
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(ExactComplex::is_zero)
    }

    /// Components pairing one θ with one θ̄.
    pub fn part_11(&self) -> Self {
        let mut out = *self;
        for (k, &(a, b)) in PAIRS.iter().enumerate() {
            if (a < 2) == (b < 2) {
                out.coeffs[k] = ExactComplex::zero();
            }
        }
        out
    }
}

/// `dθ² = -(√-1/(2√2)) (θ¹∧θ̄² - θ²∧θ̄¹ + θ¹∧θ² + θ̄¹∧θ̄²)`.
fn d_theta2() -> ComplexTwoForm {
    let t = ComplexOneForm::theta;
    let tb = ComplexOneForm::theta_bar;
    let sum = t(1)
        .wedge(&tb(2))
        .sub(&t(2).wedge(&tb(1)))
        .add(&t(1).wedge(&t(2)))
        .add(&tb(1).wedge(&tb(2)));
    sum.scale(-i_over_2sqrt2())
}

/// `√-1/(2√2)`
fn i_over_2sqrt2() -> ExactComplex {
    ExactComplex::i() * ExactComplex::inv_sqrt2() * ExactComplex::rational(1, 2)
}

/// Exterior derivative of a constant-coefficient 1-form, from `dθ¹ = 0` and
/// the expansion of `dθ²`, extended by conjugation.
pub fn structure_d(form: &ComplexOneForm) -> ComplexTwoForm {
    let d2 = d_theta2();
    let d_basis = [ComplexTwoForm::zero(), d2, ComplexTwoForm::zero(), d2.conj()];
    (0..4).fold(ComplexTwoForm::zero(), |acc, a| {
        acc.add(&d_basis[a].scale(form.coeffs[a]))
    })
}

/// Connection 1-forms `θⁱⱼ`, stored as `theta[i-1][j-1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConnectionMatrix {
    pub theta: [[ComplexOneForm; 2]; 2],
}

impl ConnectionMatrix {
    pub fn is_skew_hermitian(&self) -> bool {
        (0..2).all(|i| (0..2).all(|j| self.theta[j][i] == self.theta[i][j].conj().scale(-ExactComplex::one())))
    }
}

/// Curvature 2-forms `Ψⁱⱼ`, stored as `psi[i-1][j-1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CurvatureMatrix {
    pub psi: [[ComplexTwoForm; 2]; 2],
}

impl CurvatureMatrix {
    pub fn is_skew_hermitian(&self) -> bool {
        (0..2).all(|i| (0..2).all(|j| self.psi[j][i] == self.psi[i][j].conj().scale(-ExactComplex::one())))
    }

    pub fn trace(&self) -> ComplexTwoForm {
        self.psi[0][0].add(&self.psi[1][1])
    }
}

/// Connection forms of the canonical connection of `(Ω, J)`.
pub fn canonical_connection_forms() -> ConnectionMatrix {
    let c = i_over_2sqrt2();
    let t = ComplexOneForm::theta;
    let tb = ComplexOneForm::theta_bar;
    ConnectionMatrix {
        theta: [
            [ComplexOneForm::zero(), t(2).scale(-c)],
            [tb(2).scale(-c), t(1).add(&tb(1)).scale(c)],
        ],
    }
}

/// `Θⁱ = dθⁱ + θⁱⱼ∧θʲ`.
pub fn torsion() -> [ComplexTwoForm; 2] {
    let conn = canonical_connection_forms();
    std::array::from_fn(|i| {
        let d = structure_d(&ComplexOneForm::basis(i));
        (0..2).fold(d, |acc, j| {
            acc.add(&conn.theta[i][j].wedge(&ComplexOneForm::basis(j)))
        })
    })
}

/// `Ψⁱⱼ = dθⁱⱼ + θⁱₖ∧θᵏⱼ`.
pub fn curvature() -> CurvatureMatrix {
    let conn = canonical_connection_forms();
    let psi = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let d = structure_d(&conn.theta[i][j]);
            (0..2).fold(d, |acc, k| {
                acc.add(&conn.theta[i][k].wedge(&conn.theta[k][j]))
            })
        })
    });
    CurvatureMatrix { psi }
}

/// Rows: θ-basis elements; columns: coefficients on `{dx, dt, dy, dz - x dy}`.
fn theta_to_real() -> [[ExactComplex; 4]; 4] {
    let h = ExactComplex::inv_sqrt2();
    let ih = ExactComplex::i() * h;
    let z = ExactComplex::zero();
    [[h, ih, z, z], [z, z, h, ih], [h, -ih, z, z], [z, z, h, -ih]]
}

/// Rows: real coframe elements; columns: coefficients on the θ-basis.
fn real_to_theta() -> [[ExactComplex; 4]; 4] {
    let h = ExactComplex::inv_sqrt2();
    let ih = ExactComplex::i() * h;
    let z = ExactComplex::zero();
    [[h, z, h, z], [-ih, z, ih, z], [z, h, z, h], [z, -ih, z, ih]]
}

fn change_two_form_basis(coeffs: &[ExactComplex; 6], m: &[[ExactComplex; 4]; 4]) -> [ExactComplex; 6] {
    let mut out = [ExactComplex::zero(); 6];
    for (k, &(a, b)) in PAIRS.iter().enumerate() {
        for (q, &(r, s)) in PAIRS.iter().enumerate() {
            out[q] = out[q] + coeffs[k] * (m[a][r] * m[b][s] - m[a][s] * m[b][r]);
        }
    }
    out
}

/// Coefficients over the real basis e1..e6.
pub fn to_real_basis(w: &ComplexTwoForm) -> [ExactComplex; 6] {
    change_two_form_basis(&w.coeffs, &theta_to_real())
}

pub fn from_real_basis(coeffs: &[ExactComplex; 6]) -> ComplexTwoForm {
    ComplexTwoForm {
        coeffs: change_two_form_basis(coeffs, &real_to_theta()),
    }
}

pub fn one_form_to_real_basis(a: &ComplexOneForm) -> [ExactComplex; 4] {
    let m = theta_to_real();
    std::array::from_fn(|r| (0..4).fold(ExactComplex::zero(), |acc, k| acc + a.coeffs[k] * m[k][r]))
}

/// `2π Ric(Ω, J) = √-1 (Ψ¹₁ + Ψ²₂)` over e1..e6.
pub fn ricci_trace_exact() -> [ExactComplex; 6] {
    to_real_basis(&curvature().trace().scale(ExactComplex::i()))
}

fn exact_real_to_form(grid: &Grid, coeffs: &[ExactComplex; 6], scale: f64) -> InvariantTwoForm {
    assert!(coeffs.iter().all(ExactComplex::is_real), "Ricci form must be real");
    InvariantTwoForm::from_constants(grid, coeffs.map(|c| scale * c.re.to_f64()))
}

/// `Ric(Ω, J) = (√-1/2π)(Ψ¹₁ + Ψ²₂)` as an invariant 2-form on `grid`.
pub fn ricci_flat(grid: &Grid) -> InvariantTwoForm {
    exact_real_to_form(grid, &ricci_trace_exact(), 1.0 / (2.0 * PI))
}

/// `(√-1/2π) Ψ¹₁` alone, for comparison with the traced form.
pub fn ricci_partial(grid: &Grid) -> InvariantTwoForm {
    let coeffs = to_real_basis(&curvature().psi[0][0].scale(ExactComplex::i()));
    exact_real_to_form(grid, &coeffs, 1.0 / (2.0 * PI))
}

/// Ricci form of the solution for log-density `F + c`: `-½ d(J dF)`.
///
/// The constant `c` does not contribute.
pub fn ricci_tilde(f: &TorusField, _c: f64) -> InvariantTwoForm {
    ext_d(&j_one_form(&InvariantOneForm::exact(f))).scale(-0.5)
}

fn describe_one_form(a: &ComplexOneForm) -> String {
    let terms: Vec<String> = (0..4)
        .filter(|&k| !a.coeffs[k].is_zero())
        .map(|k| format!("[{}] {}", a.coeffs[k], THETA_NAMES[k]))
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

fn describe_two_form(w: &ComplexTwoForm) -> String {
    let terms: Vec<String> = PAIRS
        .iter()
        .enumerate()
        .filter(|(k, _)| !w.coeffs[*k].is_zero())
        .map(|(k, &(a, b))| format!("[{}] {}^{}", w.coeffs[k], THETA_NAMES[a], THETA_NAMES[b]))
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

/// Human-readable listing of the connection, torsion and curvature forms
/// with exact coefficients.
pub fn exact_report() -> String {
    let conn = canonical_connection_forms();
    let tor = torsion();
    let curv = curvature();
    let mut out = String::new();
    let _ = writeln!(out, "# canonical connection of (Omega, J), unitary coframe");
    for i in 0..2 {
        let _ = writeln!(out, "dθ{} = {}", i + 1, describe_two_form(&structure_d(&ComplexOneForm::basis(i))));
    }
    for i in 0..2 {
        for j in 0..2 {
            let _ = writeln!(out, "θ{}_{} = {}", i + 1, j + 1, describe_one_form(&conn.theta[i][j]));
        }
    }
    for (i, t) in tor.iter().enumerate() {
        let _ = writeln!(out, "Θ{} = {}", i + 1, describe_two_form(t));
    }
    for i in 0..2 {
        for j in 0..2 {
            let _ = writeln!(out, "Ψ{}_{} = {}", i + 1, j + 1, describe_two_form(&curv.psi[i][j]));
        }
    }
    let ric = ricci_trace_exact();
    let _ = writeln!(
        out,
        "2π Ric(Ω,J) over e1..e6 = [{}]",
        ric.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
    );
    out
}
