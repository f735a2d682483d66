//! The Bismut-Ricci form of a left-invariant Hermitian metric, computed two
//! independent ways.
//!
//! [`bismut_ricci`] evaluates `rho = d eta` where the components of the
//! invariant 1-form `eta` come from a generic contraction of the structure
//! constants with the metric and its inverse,
//!
//! ```text
//! eta_i = i c_{ij}^j - i g^{jk} c_{k jbar}^{lbar} g_{i lbar},
//! ```
//!
//! while [`closed_form_ricci`] carries the worked-out per-geometry
//! expressions.  Agreement of the two is the strongest internal correctness
//! check in the crate and is enforced by the validation suite.

use num_complex::Complex64;

use crate::algebra::{d_one_form_unchecked, BasisIndex, InvariantOneForm, InvariantTwoForm};
use crate::catalog::{GeometryId, GeometrySpec};
use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative margin below which `x*y - |z|^2` is treated as degenerate; keeps
/// metrics a safe distance from the boundary where the inverse blows up.
pub const ADMISSIBILITY_MARGIN: f64 = 1e-14;

/// Coefficients `(x, y, z)` of a left-invariant Hermitian metric
/// `omega = i/2 (x zeta^{1 1bar} + y zeta^{2 2bar}) + 1/2 (z zeta^{1 2bar} -
/// conj(z) zeta^{2 1bar})` in the frame fixed by the geometry.  Instances are
/// admissible by construction: `x > 0`, `y > 0` and
/// `x*y - |z|^2 > ADMISSIBILITY_MARGIN * x * y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricCoefficients {
    x: f64,
    y: f64,
    z: Complex64,
}

impl MetricCoefficients {
    pub fn new(x: f64, y: f64, z: Complex64) -> Result<Self> {
        let det = x * y - z.norm_sqr();
        let admissible = x.is_finite()
            && y.is_finite()
            && z.re.is_finite()
            && z.im.is_finite()
            && x > 0.0
            && y > 0.0
            && det > ADMISSIBILITY_MARGIN * x * y;
        if admissible {
            Ok(MetricCoefficients { x, y, z })
        } else {
            Err(Error::InadmissibleMetric { x, y, z })
        }
    }

    pub fn from_parts(x: f64, y: f64, re_z: f64, im_z: f64) -> Result<Self> {
        MetricCoefficients::new(x, y, Complex64::new(re_z, im_z))
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    /// `x*y - |z|^2`, the determinant of the coefficient matrix.
    pub fn det(&self) -> f64 {
        self.x * self.y - self.z.norm_sqr()
    }

    /// The metric scaled by a positive constant; admissibility is preserved.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        MetricCoefficients::new(factor * self.x, factor * self.y, factor * self.z)
    }
}

/// Entries of the inverse of the coefficient matrix `[[x, z], [conj z, y]]`,
/// indexed by (row, column) over the holomorphic frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricInverse {
    /// `y / D`.
    pub m11: f64,
    /// `-z / D`.
    pub m12: Complex64,
    /// `-conj(z) / D`.
    pub m21: Complex64,
    /// `x / D`.
    pub m22: f64,
}

impl MetricInverse {
    /// Largest deviation of `Minv * M` from the identity; an exactness check
    /// used by the validation suite.
    pub fn identity_residual(&self, g: &MetricCoefficients) -> f64 {
        let m = [
            [Complex64::from(g.x), g.z],
            [g.z.conj(), Complex64::from(g.y)],
        ];
        let minv = [
            [Complex64::from(self.m11), self.m12],
            [self.m21, Complex64::from(self.m22)],
        ];
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                let entry = minv[r][0] * m[0][c] + minv[r][1] * m[1][c];
                let expected = if r == c { Complex64::ONE } else { Complex64::ZERO };
                worst = worst.max((entry - expected).norm());
            }
        }
        worst
    }
}

pub fn metric_inverse(g: &MetricCoefficients) -> MetricInverse {
    let d = g.det();
    MetricInverse {
        m11: g.y / d,
        m12: -g.z / d,
        m21: -g.z.conj() / d,
        m22: g.x / d,
    }
}

/// The invariant 1-form `eta` whose exterior derivative is the Bismut-Ricci
/// form, from the generic structure-constant contraction.
pub fn compute_eta(spec: &GeometrySpec, g: &MetricCoefficients) -> InvariantOneForm {
    let hol = [BasisIndex::H1, BasisIndex::H2];
    let minv = metric_inverse(g);
    let mi = [
        [Complex64::from(minv.m11), minv.m12],
        [minv.m21, Complex64::from(minv.m22)],
    ];
    // g_{i lbar}: rows over {Z1, Z2}, columns over {Z1bar, Z2bar}.
    let gm = [
        [Complex64::from(g.x), g.z],
        [g.z.conj(), Complex64::from(g.y)],
    ];
    let mut eta = [Complex64::ZERO; 2];
    for i in 0..2 {
        let mut trace_term = Complex64::ZERO;
        for j in 0..2 {
            trace_term += spec.constants.component(hol[i], hol[j], hol[j]);
        }
        let mut metric_term = Complex64::ZERO;
        for j in 0..2 {
            for k in 0..2 {
                let bracket = spec.constants.bracket(hol[k], hol[j].conjugate());
                for l in 0..2 {
                    let c_anti = bracket[hol[l].conjugate().index()];
                    if c_anti != Complex64::ZERO {
                        metric_term += mi[j][k] * c_anti * gm[i][l];
                    }
                }
            }
        }
        eta[i] = I * trace_term - I * metric_term;
    }
    InvariantOneForm {
        eta1: eta[0],
        eta2: eta[1],
    }
}

/// Bismut-Ricci form `rho = d eta` via the generic contraction.  Relies on
/// the spec having been validated at construction.
pub fn bismut_ricci(spec: &GeometrySpec, g: &MetricCoefficients) -> InvariantTwoForm {
    d_one_form_unchecked(&spec.constants, &compute_eta(spec, g))
}

/// Bismut-Ricci form from the worked-out per-geometry expression, written in
/// the coefficients `(x, y, z)` alone.  Shares no code with [`bismut_ricci`]
/// beyond the 2-form container.
pub fn closed_form_ricci(spec: &GeometrySpec, g: &MetricCoefficients) -> InvariantTwoForm {
    let (x, y, z) = (g.x, g.y, g.z);
    let d = g.det();
    let zsq = z.norm_sqr();
    let mut f = InvariantTwoForm::zero();
    match spec.id {
        GeometryId::Torus => InvariantTwoForm::zero(),
        GeometryId::Hyperelliptic => {
            // rho = (i z x / D)(-zeta^{12} + zeta^{1 2bar}) + conjugates.
            let h = I * z * x / d;
            f.c12 = -h;
            f.c12b = h;
            f.plus_conjugate()
        }
        GeometryId::Hopf => {
            // rho = (1 - i alpha) eta1 zeta^{2 2bar}
            //     + zbar(-alpha x + i(x + y))/D (zeta^{12} + zeta^{2 1bar})
            //     + conjugates,
            // with eta1 = (alpha x^2 + i(x y - x^2 - 2|z|^2))/D.
            let alpha = spec.alpha().expect("hopf carries alpha");
            let eta1 = Complex64::new(alpha * x * x, x * y - x * x - 2.0 * zsq) / d;
            let q = z.conj() * Complex64::new(-alpha * x, x + y) / d;
            f.c22b = Complex64::new(1.0, -alpha) * eta1;
            f.c12 = q;
            f.c21b = q;
            f.plus_conjugate()
        }
        GeometryId::ProperlyElliptic => {
            // rho = z(-alpha y + i(x - y))/D (zeta^{12} + zeta^{1 2bar})
            //     + (alpha - i) eta2 zeta^{1 1bar} + conjugates,
            // with eta2 = (x y + y^2 - 2|z|^2 - i alpha y^2)/D.
            let alpha = spec.alpha().expect("properly-elliptic carries alpha");
            let p = z * Complex64::new(-alpha * y, x - y) / d;
            let eta2 = Complex64::new(x * y + y * y - 2.0 * zsq, -alpha * y * y) / d;
            f.c12 = p;
            f.c12b = p;
            f.c11b = Complex64::new(alpha, -1.0) * eta2;
            f.plus_conjugate()
        }
        GeometryId::KodairaNil => {
            // rho = -i (y^2 / D) zeta^{1 1bar} + conjugates.
            f.c11b = Complex64::new(0.0, -y * y / d);
            f.plus_conjugate()
        }
        GeometryId::KodairaNilSemidirect => {
            // rho = z(-y + i x)/D (-zeta^{12} + zeta^{1 2bar})
            //     + ((x y - 2|z|^2 - i y^2)/D) zeta^{1 1bar} + conjugates;
            // both epsilon signs give the same form.
            let u = z * Complex64::new(-y, x) / d;
            f.c12 = -u;
            f.c12b = u;
            f.c11b = Complex64::new(x * y - 2.0 * zsq, -y * y) / d;
            f.plus_conjugate()
        }
        GeometryId::InoueSolvable => {
            // rho = (2a + i conj(lambda)) z x / D (-lambda zeta^{12}
            //     + lambda zeta^{1 2bar})
            //     + ((2a(lambda + conj lambda)|z|^2
            //        - (4a^2 i + 2a lambda) x y)/D) zeta^{2 2bar}
            //     + conjugates.
            let (a, _) = spec.lambda_parts().expect("inoue carries (a, b)");
            let lambda = spec.lambda().expect("inoue carries lambda");
            let w = (Complex64::new(2.0 * a, 0.0) + I * lambda.conj()) * z * x / d;
            f.c12 = -lambda * w;
            f.c12b = lambda * w;
            f.c22b = (2.0 * a * (lambda + lambda.conj()) * zsq
                - (4.0 * a * a * I + 2.0 * a * lambda) * x * y)
                / d;
            f.plus_conjugate()
        }
        GeometryId::Sol1 => {
            // Final components:
            // rho_{1 1bar} = -i(4 x y - (z + zbar)^2)/D,
            // rho_{1 2bar} = rho_{12} = -i y (zbar - z)/D, rho_{2 2bar} = 0.
            let zpzb = z + z.conj();
            let v = -I * y * (z.conj() - z) / d;
            f.c11b = -I * (4.0 * x * y - zpzb * zpzb) / d;
            f.c12 = v;
            f.c12b = v;
            f.c21b = -v.conj();
            f.c1b2b = v.conj();
            f
        }
        GeometryId::Sol1Prime => {
            // Final components:
            // rho_{1 1bar} = -i(4 x y - y(z + zbar) - (z + zbar)^2 + 2 y^2)/D,
            // rho_{1 2bar} = rho_{12} = -i(y(zbar - z) - y^2)/D,
            // rho_{2 2bar} = 0.
            let zpzb = z + z.conj();
            let v = -I * (y * (z.conj() - z) - Complex64::from(y * y)) / d;
            f.c11b = -I * (4.0 * x * y - y * zpzb - zpzb * zpzb + Complex64::from(2.0 * y * y)) / d;
            f.c12 = v;
            f.c12b = v;
            f.c21b = -v.conj();
            f.c1b2b = v.conj();
            f
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_geometry, GeometryParams};
    use crate::validate::{random_admissible_metric, rel_err};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn metric(x: f64, y: f64, re_z: f64, im_z: f64) -> MetricCoefficients {
        MetricCoefficients::from_parts(x, y, re_z, im_z).unwrap()
    }

    #[test]
    fn inverse_of_identity_coefficients() {
        let g = metric(1.0, 1.0, 0.0, 0.0);
        let inv = metric_inverse(&g);
        assert_eq!(inv.m11, 1.0);
        assert_eq!(inv.m22, 1.0);
        assert_eq!(inv.m12, Complex64::ZERO);
        assert_eq!(inv.m21, Complex64::ZERO);
    }

    #[test]
    fn inverse_of_diagonal_coefficients() {
        let g = metric(2.0, 1.0, 0.0, 0.0);
        let inv = metric_inverse(&g);
        assert_relative_eq!(inv.m11, 0.5, epsilon = 1e-15);
        assert_relative_eq!(inv.m22, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn inverse_with_off_diagonal_entry() {
        let g = metric(1.0, 2.0, 0.0, 0.5);
        assert_relative_eq!(g.det(), 1.75, epsilon = 1e-15);
        let inv = metric_inverse(&g);
        // -z/D = -(i/2)/(7/4) = -2i/7.
        assert_relative_eq!(inv.m12.im, -2.0 / 7.0, epsilon = 1e-15);
        assert_relative_eq!(inv.m12.re, 0.0, epsilon = 1e-15);
        assert!(inv.identity_residual(&g) < 1e-15);
    }

    #[test]
    fn inverse_contraction_is_identity_on_random_metrics() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let g = random_admissible_metric(&mut rng);
            let inv = metric_inverse(&g);
            assert!(inv.identity_residual(&g) < 1e-12);
        }
    }

    #[test]
    fn inadmissible_coefficients_are_rejected() {
        assert!(matches!(
            MetricCoefficients::from_parts(1.0, 1.0, 1.0, 0.0),
            Err(Error::InadmissibleMetric { .. })
        ));
        assert!(MetricCoefficients::from_parts(-1.0, 1.0, 0.0, 0.0).is_err());
        assert!(MetricCoefficients::from_parts(1.0, 0.0, 0.0, 0.0).is_err());
        assert!(MetricCoefficients::from_parts(f64::NAN, 1.0, 0.0, 0.0).is_err());
        // Determinant barely above zero but inside the degeneracy margin.
        assert!(MetricCoefficients::new(1.0, 1.0, Complex64::new((1.0f64 - 1e-16).sqrt(), 0.0))
            .is_err());
    }

    #[test]
    fn eta_vanishes_for_flat_hyperelliptic_metric() {
        let spec = build_geometry(GeometryId::Hyperelliptic, GeometryParams::None).unwrap();
        let eta = compute_eta(&spec, &metric(1.0, 1.0, 0.0, 0.0));
        assert!(eta.eta1.norm() < 1e-15);
        // eta2 = -i(x y - 2|z|^2)/D = -i here; it does not contribute to rho
        // because d zeta2 = 0.
        assert_relative_eq!(eta.eta2.im, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn eta_hopf_example() {
        let spec = build_geometry(GeometryId::Hopf, GeometryParams::Alpha { alpha: 0.0 }).unwrap();
        let eta = compute_eta(&spec, &metric(1.0, 2.0, 0.0, 0.0));
        // eta1 = (alpha x^2 + i(x y - x^2 - 2|z|^2))/D = i(2 - 1)/2 = i/2.
        assert_relative_eq!(eta.eta1.im, 0.5, epsilon = 1e-15);
        assert_relative_eq!(eta.eta1.re, 0.0, epsilon = 1e-15);
        assert!(eta.eta2.norm() < 1e-15);
    }

    #[test]
    fn eta_heisenberg_example() {
        let spec = build_geometry(GeometryId::KodairaNil, GeometryParams::None).unwrap();
        let eta = compute_eta(&spec, &metric(1.0, 1.0, 0.0, 0.0));
        // eta2 = y^2/D = 1.
        assert_relative_eq!(eta.eta2.re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(eta.eta2.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn torus_curvature_vanishes() {
        let spec = build_geometry(GeometryId::Torus, GeometryParams::None).unwrap();
        let g = metric(3.0, 5.0, 1.0, 2.0);
        assert_eq!(bismut_ricci(&spec, &g).max_abs(), 0.0);
        assert_eq!(closed_form_ricci(&spec, &g).max_abs(), 0.0);
    }

    #[test]
    fn heisenberg_curvature_example() {
        let spec = build_geometry(GeometryId::KodairaNil, GeometryParams::None).unwrap();
        let rho = bismut_ricci(&spec, &metric(1.0, 1.0, 0.0, 0.0));
        assert_relative_eq!(rho.c11b.im, -2.0, epsilon = 1e-14);
        assert!(rho.c11b.re.abs() < 1e-15);
        assert!(rho.c22b.norm() < 1e-15);
        assert!(rho.c12.norm() < 1e-15);
    }

    #[test]
    fn sol1_mixed_component_pattern() {
        let spec = build_geometry(GeometryId::Sol1, GeometryParams::None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let g = random_admissible_metric(&mut rng);
            let rho = bismut_ricci(&spec, &g);
            assert!(rho.c22b.norm() < 1e-13, "rho_{{2 2bar}} should vanish");
            assert!(rho.is_real_form(1e-12));
        }
    }

    #[test]
    fn hyperelliptic_closed_form_example() {
        let spec = build_geometry(GeometryId::Hyperelliptic, GeometryParams::None).unwrap();
        let rho = closed_form_ricci(&spec, &metric(1.0, 2.0, 1.0, 0.0));
        // D = 1, so the zeta^{12} coefficient is -(i z x) = -i.
        assert_relative_eq!(rho.c12.im, -1.0, epsilon = 1e-15);
        assert_relative_eq!(rho.c12.re, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn hopf_round_metric_is_static_for_alpha_zero() {
        let spec = build_geometry(GeometryId::Hopf, GeometryParams::Alpha { alpha: 0.0 }).unwrap();
        // x = y, z = 0 is the fixed point of the alpha = 0 Hopf flow: the
        // (1,1) part of rho vanishes.
        let rho = closed_form_ricci(&spec, &metric(1.0, 1.0, 0.0, 0.0)).one_one_part();
        assert!(rho.max_abs() < 1e-15);
    }

    #[test]
    fn inoue_closed_form_matches_flow_coefficient() {
        let spec = build_geometry(
            GeometryId::InoueSolvable,
            GeometryParams::Lambda { a: 1.0, b: 0.0 },
        )
        .unwrap();
        let rho = closed_form_ricci(&spec, &metric(1.0, 1.0, 0.0, 0.0));
        // i rho_{2 2bar} = 12 a^2 x y / D = 12.
        assert_relative_eq!((I * rho.c22b).re, 12.0, epsilon = 1e-13);
        assert!((I * rho.c22b).im.abs() < 1e-14);
    }

    #[test]
    fn generic_and_closed_form_agree_on_the_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for spec in crate::catalog::parameter_grid() {
            for _ in 0..100 {
                let g = random_admissible_metric(&mut rng);
                let generic = bismut_ricci(&spec, &g);
                let closed = closed_form_ricci(&spec, &g);
                let scale = generic.max_abs().max(closed.max_abs()).max(1.0);
                assert!(
                    generic.max_diff(&closed) <= 1e-11 * scale,
                    "{}: generic {:?} vs closed {:?}",
                    spec.id,
                    generic,
                    closed
                );
            }
        }
    }

    #[test]
    fn curvature_outputs_are_real_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for spec in crate::catalog::representatives() {
            for _ in 0..20 {
                let g = random_admissible_metric(&mut rng);
                let scale = bismut_ricci(&spec, &g).max_abs().max(1.0);
                assert!(bismut_ricci(&spec, &g).real_form_residual() <= 1e-12 * scale);
                assert!(closed_form_ricci(&spec, &g).real_form_residual() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn eta_scale_invariance_for_unimodular_entries() {
        // For the hyperelliptic, nil and Sol1 entries eta is invariant under
        // g -> c g.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for id in [GeometryId::Hyperelliptic, GeometryId::KodairaNil, GeometryId::Sol1] {
            let spec = build_geometry(id, GeometryParams::None).unwrap();
            for _ in 0..100 {
                let g = random_admissible_metric(&mut rng);
                let eta = compute_eta(&spec, &g);
                for factor in [0.5, 2.0, 7.0] {
                    let scaled = compute_eta(&spec, &g.scaled(factor).unwrap());
                    assert!(rel_err(eta.eta1.norm(), scaled.eta1.norm()) < 1e-12);
                    assert!((eta.eta1 - scaled.eta1).norm() < 1e-12 * (1.0 + eta.eta1.norm()));
                    assert!((eta.eta2 - scaled.eta2).norm() < 1e-12 * (1.0 + eta.eta2.norm()));
                }
            }
        }
    }
}
