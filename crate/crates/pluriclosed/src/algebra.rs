//! Invariant tensor algebra on the complexified Lie algebra.
//!
//! Everything is expressed on the complex basis `{Z1, Z2, Z1bar, Z2bar}` of
//! the complexified Lie algebra of a 4-dimensional model geometry, with dual
//! coframe `{zeta1, zeta2, zeta1bar, zeta2bar}`.  Wedge products are
//! normalized so that `zeta^{ab}(e_a, e_b) = 1` for `a != b`, and the exterior
//! derivative of an invariant 1-form `theta` is evaluated through the
//! invariant-form identity `d theta(A, B) = -theta([A, B])`.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Structure constants of the catalog are short integer/parameter expressions,
/// so their algebraic identities hold to roundoff; anything above this is a
/// genuine violation.
pub const EXACT_TOL: f64 = 1e-14;

/// Basis vector of the complexified Lie algebra: `H1, H2` are the holomorphic
/// frame vectors `Z1, Z2`; `A1, A2` are their conjugates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisIndex {
    H1,
    H2,
    A1,
    A2,
}

impl BasisIndex {
    pub const ALL: [BasisIndex; 4] = [
        BasisIndex::H1,
        BasisIndex::H2,
        BasisIndex::A1,
        BasisIndex::A2,
    ];

    /// Complex conjugation of basis vectors; an involution exchanging the
    /// holomorphic and antiholomorphic halves.
    pub fn conjugate(self) -> BasisIndex {
        match self {
            BasisIndex::H1 => BasisIndex::A1,
            BasisIndex::H2 => BasisIndex::A2,
            BasisIndex::A1 => BasisIndex::H1,
            BasisIndex::A2 => BasisIndex::H2,
        }
    }

    pub fn is_holomorphic(self) -> bool {
        matches!(self, BasisIndex::H1 | BasisIndex::H2)
    }

    /// Position in [`BasisIndex::ALL`], used to index component arrays.
    pub fn index(self) -> usize {
        match self {
            BasisIndex::H1 => 0,
            BasisIndex::H2 => 1,
            BasisIndex::A1 => 2,
            BasisIndex::A2 => 3,
        }
    }

    fn label(self) -> &'static str {
        match self {
            BasisIndex::H1 => "Z1",
            BasisIndex::H2 => "Z2",
            BasisIndex::A1 => "Z1bar",
            BasisIndex::A2 => "Z2bar",
        }
    }
}

/// Components of a vector on `{Z1, Z2, Z1bar, Z2bar}`.
pub type Components = [Complex64; 4];

/// `out[k] = conj(v[conj k])` — the components of the conjugate vector.
fn conjugate_components(v: &Components) -> Components {
    [v[2].conj(), v[3].conj(), v[0].conj(), v[1].conj()]
}

/// Structure constants `c(a, b) = [e_a, e_b]` stored as the full 4x4 table of
/// component vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureConstants {
    table: [[Components; 4]; 4],
}

impl StructureConstants {
    pub fn zero() -> Self {
        StructureConstants {
            table: [[[Complex64::ZERO; 4]; 4]; 4],
        }
    }

    /// Builds the full table from the four independent brackets
    /// `[Z1, Z2]`, `[Z1, Z1bar]`, `[Z1, Z2bar]`, `[Z2, Z2bar]`; the remaining
    /// entries are filled in by antisymmetry and reality.  The mixed brackets
    /// `[Z1, Z1bar]` and `[Z2, Z2bar]` must themselves be compatible with
    /// reality, which [`check_structure_constants`] verifies.
    pub fn from_brackets(
        z1_z2: Components,
        z1_z1bar: Components,
        z1_z2bar: Components,
        z2_z2bar: Components,
    ) -> Self {
        use BasisIndex::*;
        let mut c = StructureConstants::zero();
        c.set_pair(H1, H2, z1_z2);
        c.set_pair(H1, A1, z1_z1bar);
        c.set_pair(H1, A2, z1_z2bar);
        c.set_pair(H2, A2, z2_z2bar);
        // [Z1bar, Z2bar] = conjugate of [Z1, Z2].
        c.set_pair(A1, A2, conjugate_components(&z1_z2));
        // [Z1bar, Z2] = conjugate of [Z1, Z2bar].
        c.set_pair(A1, H2, conjugate_components(&z1_z2bar));
        c
    }

    fn set_pair(&mut self, a: BasisIndex, b: BasisIndex, v: Components) {
        self.table[a.index()][b.index()] = v;
        let mut neg = v;
        for comp in &mut neg {
            *comp = -*comp;
        }
        self.table[b.index()][a.index()] = neg;
    }

    /// Components of `[e_a, e_b]`.
    pub fn bracket(&self, a: BasisIndex, b: BasisIndex) -> Components {
        self.table[a.index()][b.index()]
    }

    /// Single component `c_{ab}^k`.
    pub fn component(&self, a: BasisIndex, b: BasisIndex, k: BasisIndex) -> Complex64 {
        self.table[a.index()][b.index()][k.index()]
    }

    /// Bracket extended bilinearly to arbitrary vectors.
    pub fn bracket_of(&self, v: &Components, w: &Components) -> Components {
        let mut out = [Complex64::ZERO; 4];
        for a in 0..4 {
            if v[a] == Complex64::ZERO {
                continue;
            }
            for b in 0..4 {
                if w[b] == Complex64::ZERO {
                    continue;
                }
                let coeff = v[a] * w[b];
                for (k, out_k) in out.iter_mut().enumerate() {
                    *out_k += coeff * self.table[a][b][k];
                }
            }
        }
        out
    }
}

/// A violated algebraic identity together with its numerical residual.
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub check: String,
    pub residual: f64,
}

/// Result of an exactness check; empty means every identity holds to
/// [`EXACT_TOL`].
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, check: impl Into<String>, residual: f64) {
        self.violations.push(Violation {
            check: check.into(),
            residual,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "no violations");
        }
        let mut first = true;
        for v in &self.violations {
            if !first {
                write!(f, "; ")?;
            }
            write!(f, "{} (residual {:.3e})", v.check, v.residual)?;
            first = false;
        }
        Ok(())
    }
}

fn max_abs(v: &Components) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Verifies antisymmetry, compatibility with conjugation, the Jacobi identity
/// and integrability of the complex structure (holomorphic brackets have no
/// antiholomorphic part), all to [`EXACT_TOL`].
pub fn check_structure_constants(c: &StructureConstants) -> ValidationReport {
    let mut report = ValidationReport::default();

    for a in BasisIndex::ALL {
        for b in BasisIndex::ALL {
            let ab = c.bracket(a, b);
            let ba = c.bracket(b, a);
            let residual = (0..4)
                .map(|k| (ab[k] + ba[k]).norm())
                .fold(0.0, f64::max);
            if residual > EXACT_TOL {
                report.push(format!("antisymmetry [{}, {}]", a.label(), b.label()), residual);
            }
        }
    }

    for a in BasisIndex::ALL {
        for b in BasisIndex::ALL {
            let expected = conjugate_components(&c.bracket(a, b));
            let actual = c.bracket(a.conjugate(), b.conjugate());
            let residual = (0..4)
                .map(|k| (actual[k] - expected[k]).norm())
                .fold(0.0, f64::max);
            if residual > EXACT_TOL {
                report.push(format!("reality [{}, {}]", a.label(), b.label()), residual);
            }
        }
    }

    let basis_vector = |i: BasisIndex| -> Components {
        let mut v = [Complex64::ZERO; 4];
        v[i.index()] = Complex64::ONE;
        v
    };
    for (i, a) in BasisIndex::ALL.iter().enumerate() {
        for (j, b) in BasisIndex::ALL.iter().enumerate().skip(i + 1) {
            for k in BasisIndex::ALL.iter().skip(j + 1) {
                let (va, vb, vk) = (basis_vector(*a), basis_vector(*b), basis_vector(*k));
                let mut sum = c.bracket_of(&c.bracket_of(&va, &vb), &vk);
                let t2 = c.bracket_of(&c.bracket_of(&vb, &vk), &va);
                let t3 = c.bracket_of(&c.bracket_of(&vk, &va), &vb);
                for n in 0..4 {
                    sum[n] += t2[n] + t3[n];
                }
                let residual = max_abs(&sum);
                if residual > EXACT_TOL {
                    report.push(
                        format!("jacobi ({}, {}, {})", a.label(), b.label(), k.label()),
                        residual,
                    );
                }
            }
        }
    }

    let hol = c.bracket(BasisIndex::H1, BasisIndex::H2);
    let residual = hol[2].norm().max(hol[3].norm());
    if residual > EXACT_TOL {
        report.push("integrability [Z1, Z2]", residual);
    }

    report
}

/// Invariant (1,0)-form `eta = eta1 zeta1 + eta2 zeta2`; its conjugate (with
/// coefficients `conj(eta1)`, `conj(eta2)` on the barred coframe) is implied
/// wherever a real object is assembled from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantOneForm {
    pub eta1: Complex64,
    pub eta2: Complex64,
}

impl InvariantOneForm {
    pub fn zero() -> Self {
        InvariantOneForm {
            eta1: Complex64::ZERO,
            eta2: Complex64::ZERO,
        }
    }

    /// Evaluation of `eta + conj(eta)` on a vector with the given components.
    fn eval_with_conjugate(&self, v: &Components) -> Complex64 {
        self.eta1 * v[0] + self.eta2 * v[1] + self.eta1.conj() * v[2] + self.eta2.conj() * v[3]
    }
}

/// Invariant 2-form expressed on the ordered wedge basis
/// `{zeta^{12}, zeta^{1 1bar}, zeta^{1 2bar}, zeta^{2 1bar}, zeta^{2 2bar},
/// zeta^{1bar 2bar}}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantTwoForm {
    /// Coefficient of `zeta^{12}`.
    pub c12: Complex64,
    /// Coefficient of `zeta^{1 1bar}`.
    pub c11b: Complex64,
    /// Coefficient of `zeta^{1 2bar}`.
    pub c12b: Complex64,
    /// Coefficient of `zeta^{2 1bar}`.
    pub c21b: Complex64,
    /// Coefficient of `zeta^{2 2bar}`.
    pub c22b: Complex64,
    /// Coefficient of `zeta^{1bar 2bar}`.
    pub c1b2b: Complex64,
}

impl InvariantTwoForm {
    pub fn zero() -> Self {
        InvariantTwoForm {
            c12: Complex64::ZERO,
            c11b: Complex64::ZERO,
            c12b: Complex64::ZERO,
            c21b: Complex64::ZERO,
            c22b: Complex64::ZERO,
            c1b2b: Complex64::ZERO,
        }
    }

    pub fn components(&self) -> [Complex64; 6] {
        [self.c12, self.c11b, self.c12b, self.c21b, self.c22b, self.c1b2b]
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        InvariantTwoForm {
            c12: factor * self.c12,
            c11b: factor * self.c11b,
            c12b: factor * self.c12b,
            c21b: factor * self.c21b,
            c22b: factor * self.c22b,
            c1b2b: factor * self.c1b2b,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        InvariantTwoForm {
            c12: self.c12 + other.c12,
            c11b: self.c11b + other.c11b,
            c12b: self.c12b + other.c12b,
            c21b: self.c21b + other.c21b,
            c22b: self.c22b + other.c22b,
            c1b2b: self.c1b2b + other.c1b2b,
        }
    }

    /// Complex conjugate as a 2-form.  Conjugation permutes the wedge basis
    /// (`conj zeta^{1 1bar} = zeta^{1bar 1} = -zeta^{1 1bar}` and so on), so
    /// the coefficients move and pick up signs.
    pub fn conjugated(&self) -> Self {
        InvariantTwoForm {
            c12: self.c1b2b.conj(),
            c11b: -self.c11b.conj(),
            c12b: -self.c21b.conj(),
            c21b: -self.c12b.conj(),
            c22b: -self.c22b.conj(),
            c1b2b: self.c12.conj(),
        }
    }

    /// `F + conj(F)` — the real form obtained by adding the conjugate terms.
    pub fn plus_conjugate(&self) -> Self {
        self.add(&self.conjugated())
    }

    /// Projection onto the (1,1) part: drops `zeta^{12}` and
    /// `zeta^{1bar 2bar}`.
    pub fn one_one_part(&self) -> Self {
        InvariantTwoForm {
            c12: Complex64::ZERO,
            c1b2b: Complex64::ZERO,
            ..*self
        }
    }

    /// Largest violation of the identities characterizing a real 2-form:
    /// `c1b2b = conj(c12)`, `c11b` and `c22b` purely imaginary,
    /// `c21b = -conj(c12b)`.
    pub fn real_form_residual(&self) -> f64 {
        let mut r = (self.c1b2b - self.c12.conj()).norm();
        r = r.max(self.c11b.re.abs());
        r = r.max(self.c22b.re.abs());
        r.max((self.c21b + self.c12b.conj()).norm())
    }

    pub fn is_real_form(&self, tol: f64) -> bool {
        self.real_form_residual() <= tol
    }

    pub fn max_abs(&self) -> f64 {
        self.components().iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest componentwise difference from `other`.
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.components()
            .iter()
            .zip(other.components())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// The six ordered index pairs of the wedge basis, in coefficient order.
const WEDGE_PAIRS: [(BasisIndex, BasisIndex); 6] = [
    (BasisIndex::H1, BasisIndex::H2),
    (BasisIndex::H1, BasisIndex::A1),
    (BasisIndex::H1, BasisIndex::A2),
    (BasisIndex::H2, BasisIndex::A1),
    (BasisIndex::H2, BasisIndex::A2),
    (BasisIndex::A1, BasisIndex::A2),
];

/// Exterior derivative of the real 1-form `eta + conj(eta)`, evaluated via
/// `d theta(A, B) = -theta([A, B])` on each wedge-basis pair.  Rejects
/// structure constants that fail [`check_structure_constants`].
pub fn d_one_form(c: &StructureConstants, eta: &InvariantOneForm) -> Result<InvariantTwoForm> {
    let report = check_structure_constants(c);
    if !report.is_empty() {
        return Err(Error::InvalidStructureConstants(report));
    }
    Ok(d_one_form_unchecked(c, eta))
}

/// [`d_one_form`] without re-validating the structure constants; for use with
/// catalog geometries, which are validated at construction.
pub(crate) fn d_one_form_unchecked(
    c: &StructureConstants,
    eta: &InvariantOneForm,
) -> InvariantTwoForm {
    let mut coeffs = [Complex64::ZERO; 6];
    for (slot, (a, b)) in WEDGE_PAIRS.iter().enumerate() {
        coeffs[slot] = -eta.eval_with_conjugate(&c.bracket(*a, *b));
    }
    InvariantTwoForm {
        c12: coeffs[0],
        c11b: coeffs[1],
        c12b: coeffs[2],
        c21b: coeffs[3],
        c22b: coeffs[4],
        c1b2b: coeffs[5],
    }
}
