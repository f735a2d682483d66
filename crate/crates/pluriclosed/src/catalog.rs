//! Catalog of the nine 4-dimensional model geometries.
//!
//! Each entry fixes a complex frame `{Z1, Z2}` of the Lie algebra in which the
//! metric coefficients `(x, y, z)` live, given here by its structure constants
//! together with the exterior derivatives of the dual coframe `{zeta1, zeta2}`.
//! The two descriptions are redundant — `d zeta^k(A, B) = -zeta^k([A, B])` —
//! and [`verify_coframe`] checks they agree, which guards the transcription.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    check_structure_constants, BasisIndex, Components, InvariantTwoForm, StructureConstants,
    ValidationReport, EXACT_TOL,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryId {
    /// Complex torus; the flow is stationary.
    Torus,
    /// Hyperelliptic surfaces.
    Hyperelliptic,
    /// Hopf surfaces; a one-parameter family indexed by a real `alpha`.
    Hopf,
    /// Properly elliptic surfaces (non-Kaehler, fibered over a curve of genus
    /// at least 2); real parameter `alpha`.
    ProperlyElliptic,
    /// Primary Kodaira surfaces, nilpotent model.
    KodairaNil,
    /// Secondary Kodaira surfaces, semidirect-product model; sign `epsilon`.
    KodairaNilSemidirect,
    /// Inoue surfaces of solvable type; `lambda = -b + i a` with `a != 0`.
    InoueSolvable,
    /// Inoue surfaces modeled on Sol with one lattice family.
    Sol1,
    /// The companion Sol model with the extra mixed bracket term.
    Sol1Prime,
}

impl GeometryId {
    pub const ALL: [GeometryId; 9] = [
        GeometryId::Torus,
        GeometryId::Hyperelliptic,
        GeometryId::Hopf,
        GeometryId::ProperlyElliptic,
        GeometryId::KodairaNil,
        GeometryId::KodairaNilSemidirect,
        GeometryId::InoueSolvable,
        GeometryId::Sol1,
        GeometryId::Sol1Prime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GeometryId::Torus => "torus",
            GeometryId::Hyperelliptic => "hyperelliptic",
            GeometryId::Hopf => "hopf",
            GeometryId::ProperlyElliptic => "properly-elliptic",
            GeometryId::KodairaNil => "kodaira-nil",
            GeometryId::KodairaNilSemidirect => "kodaira-nil-semidirect",
            GeometryId::InoueSolvable => "inoue-solvable",
            GeometryId::Sol1 => "sol1",
            GeometryId::Sol1Prime => "sol1-prime",
        }
    }
}

impl fmt::Display for GeometryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeometryId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        let id = match key.as_str() {
            "torus" => GeometryId::Torus,
            "hyperelliptic" => GeometryId::Hyperelliptic,
            "hopf" => GeometryId::Hopf,
            "properly-elliptic" => GeometryId::ProperlyElliptic,
            "kodaira-nil" => GeometryId::KodairaNil,
            "kodaira-nil-semidirect" => GeometryId::KodairaNilSemidirect,
            "inoue-solvable" | "inoue" => GeometryId::InoueSolvable,
            "sol1" => GeometryId::Sol1,
            "sol1-prime" | "sol1prime" => GeometryId::Sol1Prime,
            _ => return Err(Error::UnknownGeometry(s.to_string())),
        };
        Ok(id)
    }
}

/// Continuous parameters of a catalog entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryParams {
    /// Torus, Hyperelliptic, KodairaNil, Sol1, Sol1Prime.
    None,
    /// Hopf and ProperlyElliptic.
    Alpha { alpha: f64 },
    /// InoueSolvable: `lambda = -b + i a`, `a != 0`.
    Lambda { a: f64, b: f64 },
    /// KodairaNilSemidirect: `epsilon` in `{-1, +1}`.
    Epsilon { epsilon: i32 },
}

/// A validated catalog entry: structure constants plus coframe differentials.
#[derive(Debug, Clone)]
pub struct GeometrySpec {
    pub id: GeometryId,
    pub params: GeometryParams,
    pub constants: StructureConstants,
    /// `[d zeta1, d zeta2]` on the wedge basis.
    pub coframe: [InvariantTwoForm; 2],
}

impl GeometrySpec {
    pub fn alpha(&self) -> Option<f64> {
        match self.params {
            GeometryParams::Alpha { alpha } => Some(alpha),
            _ => None,
        }
    }

    pub fn lambda_parts(&self) -> Option<(f64, f64)> {
        match self.params {
            GeometryParams::Lambda { a, b } => Some((a, b)),
            _ => None,
        }
    }

    /// `lambda = -b + i a` for the solvable Inoue entry.
    pub fn lambda(&self) -> Option<Complex64> {
        self.lambda_parts().map(|(a, b)| Complex64::new(-b, a))
    }

    pub fn epsilon(&self) -> Option<f64> {
        match self.params {
            GeometryParams::Epsilon { epsilon } => Some(epsilon as f64),
            _ => None,
        }
    }
}

const ZERO4: Components = [Complex64::ZERO; 4];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn real4(h1: f64, h2: f64, a1: f64, a2: f64) -> Components {
    [c(h1, 0.0), c(h2, 0.0), c(a1, 0.0), c(a2, 0.0)]
}

fn constants_for(id: GeometryId, params: &GeometryParams) -> StructureConstants {
    match (id, params) {
        (GeometryId::Torus, _) => StructureConstants::zero(),
        (GeometryId::Hyperelliptic, _) => StructureConstants::from_brackets(
            // [Z1, Z2] = Z1, [Z1, Z2bar] = -Z1.
            real4(1.0, 0.0, 0.0, 0.0),
            ZERO4,
            real4(-1.0, 0.0, 0.0, 0.0),
            ZERO4,
        ),
        (GeometryId::Hopf, GeometryParams::Alpha { alpha }) => StructureConstants::from_brackets(
            // [Z1, Z2] = Z2, [Z1, Z2bar] = -Z2bar,
            // [Z2, Z2bar] = (i alpha - 1) Z1 + (i alpha + 1) Z1bar.
            real4(0.0, 1.0, 0.0, 0.0),
            ZERO4,
            real4(0.0, 0.0, 0.0, -1.0),
            [c(-1.0, *alpha), Complex64::ZERO, c(1.0, *alpha), Complex64::ZERO],
        ),
        (GeometryId::ProperlyElliptic, GeometryParams::Alpha { alpha }) => {
            StructureConstants::from_brackets(
                // [Z1, Z2] = i Z1, [Z1, Z1bar] = (i - alpha) Z2 + (i + alpha) Z2bar,
                // [Z1, Z2bar] = i Z1.
                [c(0.0, 1.0), Complex64::ZERO, Complex64::ZERO, Complex64::ZERO],
                [Complex64::ZERO, c(-alpha, 1.0), Complex64::ZERO, c(*alpha, 1.0)],
                [c(0.0, 1.0), Complex64::ZERO, Complex64::ZERO, Complex64::ZERO],
                ZERO4,
            )
        }
        (GeometryId::KodairaNil, _) => StructureConstants::from_brackets(
            // [Z1, Z1bar] = i(Z2 + Z2bar).
            ZERO4,
            [Complex64::ZERO, c(0.0, 1.0), Complex64::ZERO, c(0.0, 1.0)],
            ZERO4,
            ZERO4,
        ),
        (GeometryId::KodairaNilSemidirect, GeometryParams::Epsilon { epsilon }) => {
            let e = *epsilon as f64;
            StructureConstants::from_brackets(
                // [Z1, Z2] = eps Z1, [Z1, Z1bar] = -eps i (Z2 + Z2bar),
                // [Z1, Z2bar] = -eps Z1.
                real4(e, 0.0, 0.0, 0.0),
                [Complex64::ZERO, c(0.0, -e), Complex64::ZERO, c(0.0, -e)],
                real4(-e, 0.0, 0.0, 0.0),
                ZERO4,
            )
        }
        (GeometryId::InoueSolvable, GeometryParams::Lambda { a, b }) => {
            let lambda = c(-b, *a);
            StructureConstants::from_brackets(
                // [Z1, Z2] = lambda Z1, [Z1, Z2bar] = -lambda Z1,
                // [Z2, Z2bar] = 2 a i (Z2 + Z2bar).
                [lambda, Complex64::ZERO, Complex64::ZERO, Complex64::ZERO],
                ZERO4,
                [-lambda, Complex64::ZERO, Complex64::ZERO, Complex64::ZERO],
                [Complex64::ZERO, c(0.0, 2.0 * a), Complex64::ZERO, c(0.0, 2.0 * a)],
            )
        }
        (GeometryId::Sol1, _) => StructureConstants::from_brackets(
            // [Z1, Z2] = -Z2, [Z1, Z1bar] = Z1bar - Z1, [Z1, Z2bar] = -Z2.
            real4(0.0, -1.0, 0.0, 0.0),
            real4(-1.0, 0.0, 1.0, 0.0),
            real4(0.0, -1.0, 0.0, 0.0),
            ZERO4,
        ),
        (GeometryId::Sol1Prime, _) => StructureConstants::from_brackets(
            // Same as Sol1 except [Z1, Z1bar] = Z1bar - Z1 + Z2 - Z2bar.
            real4(0.0, -1.0, 0.0, 0.0),
            real4(-1.0, 1.0, 1.0, -1.0),
            real4(0.0, -1.0, 0.0, 0.0),
            ZERO4,
        ),
        // Parameter mismatches are rejected in build_geometry before this is
        // reached.
        _ => unreachable!("parameter variant checked before construction"),
    }
}

fn coframe_for(id: GeometryId, params: &GeometryParams) -> [InvariantTwoForm; 2] {
    let mut d1 = InvariantTwoForm::zero();
    let mut d2 = InvariantTwoForm::zero();
    match (id, params) {
        (GeometryId::Torus, _) => {}
        (GeometryId::Hyperelliptic, _) => {
            // d zeta1 = -zeta^{12} + zeta^{1 2bar}.
            d1.c12 = c(-1.0, 0.0);
            d1.c12b = c(1.0, 0.0);
        }
        (GeometryId::Hopf, GeometryParams::Alpha { alpha }) => {
            // d zeta1 = (1 - i alpha) zeta^{2 2bar},
            // d zeta2 = -zeta^{12} - zeta^{2 1bar}.
            d1.c22b = c(1.0, -alpha);
            d2.c12 = c(-1.0, 0.0);
            d2.c21b = c(-1.0, 0.0);
        }
        (GeometryId::ProperlyElliptic, GeometryParams::Alpha { alpha }) => {
            // d zeta1 = -i(zeta^{12} + zeta^{1 2bar}),
            // d zeta2 = (alpha - i) zeta^{1 1bar}.
            d1.c12 = c(0.0, -1.0);
            d1.c12b = c(0.0, -1.0);
            d2.c11b = c(*alpha, -1.0);
        }
        (GeometryId::KodairaNil, _) => {
            // d zeta2 = -i zeta^{1 1bar}.
            d2.c11b = c(0.0, -1.0);
        }
        (GeometryId::KodairaNilSemidirect, GeometryParams::Epsilon { epsilon }) => {
            // d zeta1 = eps(-zeta^{12} + zeta^{1 2bar}),
            // d zeta2 = eps i zeta^{1 1bar}.
            let e = *epsilon as f64;
            d1.c12 = c(-e, 0.0);
            d1.c12b = c(e, 0.0);
            d2.c11b = c(0.0, e);
        }
        (GeometryId::InoueSolvable, GeometryParams::Lambda { a, b }) => {
            // d zeta1 = -lambda zeta^{12} + lambda zeta^{1 2bar},
            // d zeta2 = -2 a i zeta^{2 2bar}.
            let lambda = c(-b, *a);
            d1.c12 = -lambda;
            d1.c12b = lambda;
            d2.c22b = c(0.0, -2.0 * a);
        }
        (GeometryId::Sol1, _) => {
            // d zeta1 = zeta^{1 1bar}, d zeta2 = zeta^{12} + zeta^{1 2bar}.
            d1.c11b = c(1.0, 0.0);
            d2.c12 = c(1.0, 0.0);
            d2.c12b = c(1.0, 0.0);
        }
        (GeometryId::Sol1Prime, _) => {
            // d zeta1 = zeta^{1 1bar},
            // d zeta2 = zeta^{12} - zeta^{1 1bar} + zeta^{1 2bar}.
            d1.c11b = c(1.0, 0.0);
            d2.c12 = c(1.0, 0.0);
            d2.c11b = c(-1.0, 0.0);
            d2.c12b = c(1.0, 0.0);
        }
        _ => unreachable!("parameter variant checked before construction"),
    }
    [d1, d2]
}

fn check_params(id: GeometryId, params: &GeometryParams) -> Result<()> {
    let ok = match (id, params) {
        (GeometryId::Torus, GeometryParams::None)
        | (GeometryId::Hyperelliptic, GeometryParams::None)
        | (GeometryId::KodairaNil, GeometryParams::None)
        | (GeometryId::Sol1, GeometryParams::None)
        | (GeometryId::Sol1Prime, GeometryParams::None) => true,
        (GeometryId::Hopf, GeometryParams::Alpha { alpha })
        | (GeometryId::ProperlyElliptic, GeometryParams::Alpha { alpha }) => {
            if !alpha.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{id} requires a finite alpha, got {alpha}"
                )));
            }
            true
        }
        (GeometryId::KodairaNilSemidirect, GeometryParams::Epsilon { epsilon }) => {
            if *epsilon != 1 && *epsilon != -1 {
                return Err(Error::InvalidParameter(format!(
                    "{id} requires epsilon in {{-1, +1}}, got {epsilon}"
                )));
            }
            true
        }
        (GeometryId::InoueSolvable, GeometryParams::Lambda { a, b }) => {
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{id} requires finite (a, b), got ({a}, {b})"
                )));
            }
            if *a == 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{id} requires a != 0 (lambda = -b + i a must be non-real)"
                )));
            }
            true
        }
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "parameters {params:?} do not match geometry {id}"
        )))
    }
}

/// Constructs and validates a catalog entry.  The returned spec has passed
/// [`check_structure_constants`] and [`verify_coframe`].
pub fn build_geometry(id: GeometryId, params: GeometryParams) -> Result<GeometrySpec> {
    check_params(id, &params)?;
    let spec = GeometrySpec {
        id,
        params,
        constants: constants_for(id, &params),
        coframe: coframe_for(id, &params),
    };
    let report = check_structure_constants(&spec.constants);
    if !report.is_empty() {
        return Err(Error::InvalidStructureConstants(report));
    }
    let report = verify_coframe(&spec);
    if !report.is_empty() {
        return Err(Error::InvalidCoframe(report));
    }
    Ok(spec)
}

/// Recomputes `d zeta^k` from the structure constants through
/// `d zeta^k(A, B) = -zeta^k([A, B])` and compares with the stored coframe.
pub fn verify_coframe(spec: &GeometrySpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    let pairs: [(BasisIndex, BasisIndex, &str); 6] = [
        (BasisIndex::H1, BasisIndex::H2, "zeta^{12}"),
        (BasisIndex::H1, BasisIndex::A1, "zeta^{1 1bar}"),
        (BasisIndex::H1, BasisIndex::A2, "zeta^{1 2bar}"),
        (BasisIndex::H2, BasisIndex::A1, "zeta^{2 1bar}"),
        (BasisIndex::H2, BasisIndex::A2, "zeta^{2 2bar}"),
        (BasisIndex::A1, BasisIndex::A2, "zeta^{1bar 2bar}"),
    ];
    for (k, hol) in [BasisIndex::H1, BasisIndex::H2].into_iter().enumerate() {
        let stored = spec.coframe[k].components();
        for (slot, (a, b, label)) in pairs.iter().enumerate() {
            let derived = -spec.constants.component(*a, *b, hol);
            let residual = (derived - stored[slot]).norm();
            if residual > EXACT_TOL {
                report.push(format!("coframe d zeta{} at {}", k + 1, label), residual);
            }
        }
    }
    report
}

/// One spec per geometry id, with fixed representative parameters for the
/// parametric families.
pub fn representatives() -> Vec<GeometrySpec> {
    GeometryId::ALL
        .into_iter()
        .map(|id| build_geometry(id, default_params(id)).expect("catalog entries are valid"))
        .collect()
}

/// Representative parameters used when a caller asks for a geometry by id
/// alone.
pub fn default_params(id: GeometryId) -> GeometryParams {
    match id {
        GeometryId::Hopf | GeometryId::ProperlyElliptic => GeometryParams::Alpha { alpha: 1.0 },
        GeometryId::KodairaNilSemidirect => GeometryParams::Epsilon { epsilon: 1 },
        GeometryId::InoueSolvable => GeometryParams::Lambda { a: 1.0, b: 1.0 },
        _ => GeometryParams::None,
    }
}

/// The test grid for parametric families: every catalog entry at every grid
/// parameter value.
pub fn parameter_grid() -> Vec<GeometrySpec> {
    let mut specs = Vec::new();
    for id in GeometryId::ALL {
        for params in grid_params(id) {
            specs.push(build_geometry(id, params).expect("catalog entries are valid"));
        }
    }
    specs
}

/// Grid parameter values per geometry: `alpha` in `{-2, 0, 1, 3}`,
/// `(a, b)` in `{(1, 0), (0.5, 1), (2, -1)}`, `epsilon` in `{+1, -1}`.
pub fn grid_params(id: GeometryId) -> Vec<GeometryParams> {
    match id {
        GeometryId::Hopf | GeometryId::ProperlyElliptic => [-2.0, 0.0, 1.0, 3.0]
            .into_iter()
            .map(|alpha| GeometryParams::Alpha { alpha })
            .collect(),
        GeometryId::KodairaNilSemidirect => vec![
            GeometryParams::Epsilon { epsilon: 1 },
            GeometryParams::Epsilon { epsilon: -1 },
        ],
        GeometryId::InoueSolvable => [(1.0, 0.0), (0.5, 1.0), (2.0, -1.0)]
            .into_iter()
            .map(|(a, b)| GeometryParams::Lambda { a, b })
            .collect(),
        _ => vec![GeometryParams::None],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn torus_brackets_vanish() {
        let spec = build_geometry(GeometryId::Torus, GeometryParams::None).unwrap();
        for a in BasisIndex::ALL {
            for b in BasisIndex::ALL {
                assert_eq!(spec.constants.bracket(a, b), [Complex64::ZERO; 4]);
            }
        }
        assert_eq!(spec.coframe[0].max_abs(), 0.0);
        assert_eq!(spec.coframe[1].max_abs(), 0.0);
    }

    #[test]
    fn hopf_mixed_bracket_components() {
        let spec = build_geometry(GeometryId::Hopf, GeometryParams::Alpha { alpha: 1.0 }).unwrap();
        let br = spec.constants.bracket(BasisIndex::H2, BasisIndex::A2);
        assert_eq!(br[0], Complex64::new(-1.0, 1.0));
        assert_eq!(br[1], Complex64::ZERO);
        assert_eq!(br[2], Complex64::new(1.0, 1.0));
        assert_eq!(br[3], Complex64::ZERO);
    }

    #[test]
    fn sol1_prime_mixed_bracket_components() {
        let spec = build_geometry(GeometryId::Sol1Prime, GeometryParams::None).unwrap();
        let br = spec.constants.bracket(BasisIndex::H1, BasisIndex::A1);
        assert_eq!(br[0], Complex64::new(-1.0, 0.0));
        assert_eq!(br[1], Complex64::new(1.0, 0.0));
        assert_eq!(br[2], Complex64::new(1.0, 0.0));
        assert_eq!(br[3], Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn whole_grid_passes_structure_and_coframe_checks() {
        let specs = parameter_grid();
        assert_eq!(specs.len(), 18);
        for spec in &specs {
            let r = check_structure_constants(&spec.constants);
            assert!(r.is_empty(), "{}: {r}", spec.id);
            let r = verify_coframe(spec);
            assert!(r.is_empty(), "{}: {r}", spec.id);
        }
    }

    #[test]
    fn hopf_coframe_value_on_frame_pair() {
        // d zeta2 = -zeta^{12} - zeta^{2 1bar} evaluates to -1 on (Z1, Z2).
        let spec = build_geometry(GeometryId::Hopf, GeometryParams::Alpha { alpha: -2.0 }).unwrap();
        assert_relative_eq!(spec.coframe[1].c12.re, -1.0, epsilon = 1e-15);
        let derived = -spec.constants.component(BasisIndex::H1, BasisIndex::H2, BasisIndex::H2);
        assert_relative_eq!(derived.re, -1.0, epsilon = 1e-15);
        assert_relative_eq!(derived.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn corrupted_coframe_is_flagged() {
        let mut spec =
            build_geometry(GeometryId::ProperlyElliptic, GeometryParams::Alpha { alpha: 1.0 })
                .unwrap();
        spec.coframe[0].c12 = -spec.coframe[0].c12;
        let report = verify_coframe(&spec);
        assert!(!report.is_empty());
        assert!(report.violations[0].check.contains("d zeta1"));
    }

    #[test]
    fn parameter_mismatch_is_rejected() {
        assert!(matches!(
            build_geometry(GeometryId::Torus, GeometryParams::Alpha { alpha: 1.0 }),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            build_geometry(GeometryId::Hopf, GeometryParams::None),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            build_geometry(GeometryId::InoueSolvable, GeometryParams::Lambda { a: 0.0, b: 1.0 }),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            build_geometry(
                GeometryId::KodairaNilSemidirect,
                GeometryParams::Epsilon { epsilon: 2 }
            ),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn geometry_names_round_trip() {
        for id in GeometryId::ALL {
            assert_eq!(id.name().parse::<GeometryId>().unwrap(), id);
        }
        assert_eq!("inoue".parse::<GeometryId>().unwrap(), GeometryId::InoueSolvable);
        assert_eq!("Sol1_Prime".parse::<GeometryId>().unwrap(), GeometryId::Sol1Prime);
        assert!("unknown".parse::<GeometryId>().is_err());
    }
}
