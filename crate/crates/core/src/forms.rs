//! Torus-invariant differential forms on the Kodaira-Thurston manifold.
//!
//! Everything is expressed in the left-invariant coframe
//! `{dx, dt, dy, η}` with `η = dz - x dy`, whose only nontrivial structure
//! relation is `dη = -dx∧dy`. Coefficients are functions of `(x, y)` only.
//!
//! Two-forms use the ordered basis
//!
//! | e1    | e2    | e3    | e4    | e5    | e6    |
//! |-------|-------|-------|-------|-------|-------|
//! | dx∧dt | dx∧dy | dx∧η  | dt∧dy | dt∧η  | dy∧η  |
//!
//! and top-degree forms are measured against `vol' = dx∧dt∧dy∧η`, so that
//! `Ω∧Ω = 2 vol'`.

use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::Result;
use crate::field_io::write_ktcy;
use crate::grid::{Deriv, Grid, TorusField};

/// Names of the coframe 1-forms, indexed 0..4.
pub const COFRAME: [&str; 4] = ["dx", "dt", "dy", "dz-xdy"];

/// Coframe index pairs for e1..e6.
pub const TWO_FORM_BASIS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Sign of the permutation taking `(0, 1, 2, 3)` to `p`, or 0 if `p` repeats an index.
pub fn permutation_sign(p: [usize; 4]) -> i32 {
    for a in 0..4 {
        for b in (a + 1)..4 {
            if p[a] == p[b] {
                return 0;
            }
        }
    }
    let mut inversions = 0;
    for a in 0..4 {
        for b in (a + 1)..4 {
            if p[a] > p[b] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `e_i ∧ e_j = table[i][j] vol'`.
pub fn pairing_table() -> &'static [[i32; 6]; 6] {
    static TABLE: OnceLock<[[i32; 6]; 6]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [[0; 6]; 6];
        for (i, &(a, b)) in TWO_FORM_BASIS.iter().enumerate() {
            for (j, &(c, d)) in TWO_FORM_BASIS.iter().enumerate() {
                table[i][j] = permutation_sign([a, b, c, d]);
            }
        }
        // e1∧e6 = +vol', e2∧e5 = -vol'
        assert_eq!(table[0][5], 1, "pairing table sign error (e1^e6)");
        assert_eq!(table[1][4], -1, "pairing table sign error (e2^e5)");
        table
    })
}

/// `a = f1 dx + f2 dt + f3 dy + f4 (dz - x dy)`.
#[derive(Clone, Debug)]
pub struct InvariantOneForm {
    pub f1: TorusField,
    pub f2: TorusField,
    pub f3: TorusField,
    pub f4: TorusField,
}

impl InvariantOneForm {
    pub fn new(f1: TorusField, f2: TorusField, f3: TorusField, f4: TorusField) -> Self {
        let g = f1.grid();
        assert!(
            f2.grid() == g && f3.grid() == g && f4.grid() == g,
            "one-form coefficients live on different grids"
        );
        Self { f1, f2, f3, f4 }
    }

    pub fn zero(grid: &Grid) -> Self {
        let z = TorusField::zeros(grid);
        Self::new(z.clone(), z.clone(), z.clone(), z)
    }

    /// `dψ = ψ_x dx + ψ_y dy` for an invariant function ψ.
    pub fn exact(psi: &TorusField) -> Self {
        let spec = psi.spectrum();
        let z = TorusField::zeros(psi.grid());
        Self::new(spec.derivative(Deriv::X), z.clone(), spec.derivative(Deriv::Y), z)
    }

    pub fn grid(&self) -> &Grid {
        self.f1.grid()
    }

    pub fn coefficients(&self) -> [&TorusField; 4] {
        [&self.f1, &self.f2, &self.f3, &self.f4]
    }
}

/// Invariant 2-form `Σ c_k e_k`; `coeffs[k]` is the coefficient of e_(k+1).
#[derive(Clone, Debug)]
pub struct InvariantTwoForm {
    pub coeffs: [TorusField; 6],
}

impl InvariantTwoForm {
    pub fn new(coeffs: [TorusField; 6]) -> Self {
        let g = coeffs[0].grid();
        assert!(
            coeffs.iter().all(|c| c.grid() == g),
            "two-form coefficients live on different grids"
        );
        Self { coeffs }
    }

    pub fn zero(grid: &Grid) -> Self {
        Self::from_constants(grid, [0.0; 6])
    }

    pub fn from_constants(grid: &Grid, c: [f64; 6]) -> Self {
        Self::new(c.map(|v| TorusField::constant(grid, v)))
    }

    pub fn grid(&self) -> &Grid {
        self.coeffs[0].grid()
    }

    /// Coefficient of e_k, 1-based to match the basis labels.
    pub fn e(&self, k: usize) -> &TorusField {
        &self.coeffs[k - 1]
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(std::array::from_fn(|k| &self.coeffs[k] + &other.coeffs[k]))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(std::array::from_fn(|k| self.coeffs[k].scale(s)))
    }

    /// Largest coefficient-wise sup-norm difference.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        (0..6)
            .map(|k| (&self.coeffs[k] - &other.coeffs[k]).sup_abs())
            .fold(0.0, f64::max)
    }

    /// Writes `<stem>_e1.ktcy` .. `<stem>_e6.ktcy` plus `<stem>.manifest`.
    pub fn export(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        let mut manifest = format!("format KTCY v1\nn {}\n", self.grid().n());
        for (k, &(a, b)) in TWO_FORM_BASIS.iter().enumerate() {
            let file = format!("{stem}_e{}.ktcy", k + 1);
            write_ktcy(dir.join(&file), &self.coeffs[k])?;
            manifest.push_str(&format!("e{} {}^{} {}\n", k + 1, COFRAME[a], COFRAME[b], file));
        }
        fs::write(dir.join(format!("{stem}.manifest")), manifest)?;
        Ok(())
    }
}

/// Reference symplectic form `Ω = dx∧dt + dy∧η`.
pub fn omega(grid: &Grid) -> InvariantTwoForm {
    InvariantTwoForm::from_constants(grid, [1.0, 0.0, 0.0, 0.0, 0.0, 1.0])
}

/// Harmonic self-dual form `Ω₁ = dx∧η + dt∧dy`.
pub fn omega1(grid: &Grid) -> InvariantTwoForm {
    InvariantTwoForm::from_constants(grid, [0.0, 0.0, 1.0, 1.0, 0.0, 0.0])
}

/// `J dx = dt`, `J dt = -dx`, `J dy = η`, `J η = -dy`.
pub fn j_one_form(a: &InvariantOneForm) -> InvariantOneForm {
    InvariantOneForm::new(-&a.f2, a.f1.clone(), -&a.f4, a.f3.clone())
}

/// `(Jw)(X, Y) = w(JX, JY)`: fixes e1 and e6, swaps e2 and e5, sends e3 to -e4 and e4 to -e3.
pub fn j_two_form(w: &InvariantTwoForm) -> InvariantTwoForm {
    let c = &w.coeffs;
    InvariantTwoForm::new([
        c[0].clone(),
        c[4].clone(),
        -&c[3],
        -&c[2],
        c[1].clone(),
        c[5].clone(),
    ])
}

/// Exterior derivative of an invariant 1-form.
pub fn ext_d(a: &InvariantOneForm) -> InvariantTwoForm {
    let s1 = a.f1.spectrum();
    let s2 = a.f2.spectrum();
    let s3 = a.f3.spectrum();
    let s4 = a.f4.spectrum();
    let f3x = s3.derivative(Deriv::X);
    let f1y = s1.derivative(Deriv::Y);
    InvariantTwoForm::new([
        s2.derivative(Deriv::X),
        &(&f3x - &f1y) - &a.f4,
        s4.derivative(Deriv::X),
        -&s2.derivative(Deriv::Y),
        TorusField::zeros(a.grid()),
        s4.derivative(Deriv::Y),
    ])
}

/// Coefficient of `w1∧w2` relative to `vol'`.
pub fn wedge_top(w1: &InvariantTwoForm, w2: &InvariantTwoForm) -> TorusField {
    let table = pairing_table();
    let grid = w1.grid();
    assert_eq!(grid, w2.grid(), "two-forms live on different grids");
    let mut out = vec![0.0; grid.len()];
    for (i, row) in table.iter().enumerate() {
        for (j, &sign) in row.iter().enumerate() {
            if sign == 0 {
                continue;
            }
            let s = sign as f64;
            let (a, b) = (w1.coeffs[i].values(), w2.coeffs[j].values());
            for (o, (x, y)) in out.iter_mut().zip(a.iter().zip(b)) {
                *o += s * x * y;
            }
        }
    }
    TorusField::from_raw(grid, out)
}

/// Components of the class of `w` along `[Ω]` and `[Ω₁]`.
pub fn cohomology_coeffs(w: &InvariantTwoForm) -> (f64, f64) {
    let grid = w.grid();
    let om = omega(grid);
    let om1 = omega1(grid);
    let alpha = wedge_top(w, &om).integrate() / wedge_top(&om, &om).integrate();
    let beta = wedge_top(w, &om1).integrate() / wedge_top(&om1, &om1).integrate();
    (alpha, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(16).unwrap()
    }

    #[test]
    fn pairing_table_entries() {
        let t = pairing_table();
        assert_eq!(t[0][5], 1);
        assert_eq!(t[1][4], -1);
        assert_eq!(t[2][3], 1);
        // symmetric: 2-forms commute
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(t[i][j], t[j][i]);
            }
            assert_eq!(t[i][i], 0);
        }
    }

    #[test]
    fn j_on_basis_one_forms() {
        let g = grid();
        let one = TorusField::constant(&g, 1.0);
        let z = TorusField::zeros(&g);
        let dx = InvariantOneForm::new(one.clone(), z.clone(), z.clone(), z.clone());
        let jdx = j_one_form(&dx);
        assert_eq!(jdx.f2.values(), one.values());
        assert_eq!(jdx.f1.sup_abs(), 0.0);
        let dt = InvariantOneForm::new(z.clone(), one.clone(), z.clone(), z.clone());
        let jdt = j_one_form(&dt);
        assert_eq!(jdt.f1.values(), (-&one).values());
    }

    #[test]
    fn j_of_exact_form() {
        let g = grid();
        let f = TorusField::from_fn(&g, |x, y| (2.0 * PI * x).sin() * (2.0 * PI * y).cos());
        let df = InvariantOneForm::exact(&f);
        let jdf = j_one_form(&df);
        assert_eq!(jdf.f2.values(), df.f1.values());
        assert_eq!(jdf.f4.values(), df.f3.values());
        assert_eq!(jdf.f1.sup_abs(), 0.0);
        assert_eq!(jdf.f3.sup_abs(), 0.0);
    }

    #[test]
    fn j_two_form_matches_wedge_of_j_one_forms() {
        // J(α∧β) = Jα ∧ Jβ on coframe elements
        let j1: [[f64; 4]; 4] = {
            let mut m = [[0.0; 4]; 4];
            // column = image of basis element
            m[1][0] = 1.0; // J dx = dt
            m[0][1] = -1.0; // J dt = -dx
            m[3][2] = 1.0; // J dy = η
            m[2][3] = -1.0; // J η = -dy
            m
        };
        let g = Grid::new(4).unwrap();
        for (k, &(a, b)) in TWO_FORM_BASIS.iter().enumerate() {
            let mut expect = [0.0; 6];
            for p in 0..4 {
                for q in 0..4 {
                    let coeff = j1[p][a] * j1[q][b];
                    if coeff == 0.0 || p == q {
                        continue;
                    }
                    let (lo, hi, s) = if p < q { (p, q, 1.0) } else { (q, p, -1.0) };
                    let idx = TWO_FORM_BASIS.iter().position(|&e| e == (lo, hi)).unwrap();
                    expect[idx] += s * coeff;
                }
            }
            let mut unit = [0.0; 6];
            unit[k] = 1.0;
            let got = j_two_form(&InvariantTwoForm::from_constants(&g, unit));
            for m in 0..6 {
                assert_eq!(got.coeffs[m].at(0, 0), expect[m], "basis e{} comp e{}", k + 1, m + 1);
            }
        }
    }

    #[test]
    fn omega_and_omega1_types() {
        let g = grid();
        let om = omega(&g);
        let om1 = omega1(&g);
        assert_eq!(j_two_form(&om).sup_distance(&om), 0.0);
        assert_eq!(j_two_form(&om1).sup_distance(&om1.scale(-1.0)), 0.0);
    }

    #[test]
    fn reference_pairings() {
        let g = grid();
        let om = omega(&g);
        let om1 = omega1(&g);
        assert!(wedge_top(&om, &om).values().iter().all(|&v| v == 2.0));
        assert!(wedge_top(&om1, &om1).values().iter().all(|&v| v == 2.0));
        assert!(wedge_top(&om, &om1).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ext_d_structure_term() {
        let g = grid();
        let z = TorusField::zeros(&g);
        let a = InvariantOneForm::new(z.clone(), z.clone(), z.clone(), TorusField::constant(&g, 2.5));
        let da = ext_d(&a);
        assert!((da.e(2).add_scalar(2.5)).sup_abs() < 1e-14);
        for k in [1, 3, 4, 5, 6] {
            assert!(da.e(k).sup_abs() < 1e-14);
        }
    }

    #[test]
    fn ext_d_single_term() {
        let g = grid();
        let z = TorusField::zeros(&g);
        let f2 = TorusField::from_fn(&g, |x, _| (2.0 * PI * x).sin());
        let da = ext_d(&InvariantOneForm::new(z.clone(), f2, z.clone(), z));
        let expect = TorusField::from_fn(&g, |x, _| 2.0 * PI * (2.0 * PI * x).cos());
        assert!((da.e(1) - &expect).sup_abs() < 1e-12);
        for k in 2..=6 {
            assert!(da.e(k).sup_abs() < 1e-12);
        }
    }

    #[test]
    fn cohomology_of_references() {
        let g = grid();
        assert_eq!(cohomology_coeffs(&omega(&g)), (1.0, 0.0));
        assert_eq!(cohomology_coeffs(&omega1(&g)), (0.0, 1.0));
    }

    #[test]
    fn export_writes_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(4).unwrap();
        omega(&g).export(dir.path(), "omega").unwrap();
        let manifest = fs::read_to_string(dir.path().join("omega.manifest")).unwrap();
        assert!(manifest.contains("e1 dx^dt omega_e1.ktcy"));
        assert!(manifest.contains("e6 dy^dz-xdy omega_e6.ktcy"));
        let e6 = crate::field_io::read_ktcy(dir.path().join("omega_e6.ktcy")).unwrap();
        assert_eq!(e6.values(), &[1.0; 16]);
    }
}
