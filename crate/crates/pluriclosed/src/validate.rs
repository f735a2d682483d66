//! Cross-check suite tying the independent computations together.
//!
//! The checks here are cheap enough to run on demand (`pluriclosed validate`)
//! and strict: structure constants and coframes must satisfy their identities
//! to near machine precision, and the generic Bismut-Ricci computation must
//! reproduce the closed forms at randomly sampled admissible metrics.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::check_structure_constants;
use crate::catalog::{grid_params, verify_coframe, GeometryId, GeometrySpec};
use crate::curvature::{
    bismut_ricci, closed_form_ricci, metric_inverse, MetricCoefficients,
};
use crate::flow::{rhs_closed_form, rhs_generic};

/// Draws `x, y` log-uniform in `[0.1, 10]` and `z` with `|z|^2` up to
/// `0.9 x y`, so sampled metrics are admissible with margin.
pub fn random_admissible_metric<R: Rng>(rng: &mut R) -> MetricCoefficients {
    let x = 10f64.powf(rng.gen_range(-1.0..=1.0));
    let y = 10f64.powf(rng.gen_range(-1.0..=1.0));
    let u: f64 = rng.gen_range(0.0..=0.9);
    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let z = Complex64::from_polar((u * x * y).sqrt(), phase);
    MetricCoefficients::new(x, y, z).expect("sampled coefficients are admissible")
}

/// Relative discrepancy `|a - b| / max(1, |a|, |b|)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Outcome of a single named check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst residual observed; compare against `tolerance`.
    pub residual: f64,
    pub tolerance: f64,
}

impl CheckResult {
    fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        CheckResult {
            name: name.into(),
            passed: residual <= tolerance,
            residual,
            tolerance,
        }
    }
}

/// Number of random metric samples per geometry used by the equivalence
/// check.
pub const EQUIVALENCE_SAMPLES: usize = 1000;
/// Tolerance for generic-vs-closed-form agreement of the Bismut-Ricci form.
pub const EQUIVALENCE_TOL: f64 = 1e-11;

/// Worst relative componentwise deviation between the generic and closed-form
/// Bismut-Ricci computations over `samples` random admissible metrics, cycling
/// through the parameter grid of `id`.
pub fn ricci_equivalence_residual(id: GeometryId, samples: usize, seed: u64) -> f64 {
    let specs: Vec<GeometrySpec> = grid_params(id)
        .into_iter()
        .map(|p| crate::catalog::build_geometry(id, p).expect("catalog entries are valid"))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for n in 0..samples {
        let spec = &specs[n % specs.len()];
        let g = random_admissible_metric(&mut rng);
        let generic = bismut_ricci(spec, &g);
        let closed = closed_form_ricci(spec, &g);
        let scale = generic.max_abs().max(closed.max_abs()).max(1.0);
        worst = worst.max(generic.max_diff(&closed) / scale);
    }
    worst
}

fn catalog_checks(out: &mut Vec<CheckResult>) {
    for spec in crate::catalog::parameter_grid() {
        let name = format!("structure-constants {} {:?}", spec.id, spec.params);
        let report = check_structure_constants(&spec.constants);
        let residual = report
            .violations
            .iter()
            .map(|v| v.residual)
            .fold(0.0, f64::max);
        out.push(CheckResult::new(name, residual, 1e-14));

        let name = format!("coframe {} {:?}", spec.id, spec.params);
        let report = verify_coframe(&spec);
        let residual = report
            .violations
            .iter()
            .map(|v| v.residual)
            .fold(0.0, f64::max);
        out.push(CheckResult::new(name, residual, 1e-14));
    }
}

fn inverse_check(out: &mut Vec<CheckResult>) {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let g = random_admissible_metric(&mut rng);
        worst = worst.max(metric_inverse(&g).identity_residual(&g));
    }
    out.push(CheckResult::new("metric-inverse identity", worst, 1e-12));
}

fn equivalence_checks(out: &mut Vec<CheckResult>) {
    for (n, id) in GeometryId::ALL.into_iter().enumerate() {
        let residual = ricci_equivalence_residual(id, EQUIVALENCE_SAMPLES, 7000 + n as u64);
        out.push(CheckResult::new(
            format!("ricci-equivalence {id}"),
            residual,
            EQUIVALENCE_TOL,
        ));
    }
}

fn reality_check(out: &mut Vec<CheckResult>) {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst: f64 = 0.0;
    for spec in crate::catalog::parameter_grid() {
        for _ in 0..100 {
            let g = random_admissible_metric(&mut rng);
            let rho = bismut_ricci(&spec, &g);
            let scale = rho.max_abs().max(1.0);
            // i * c11b and i * c22b are the x and y rates; their imaginary
            // parts are the real parts of the coefficients.
            worst = worst.max(rho.c11b.re.abs() / scale);
            worst = worst.max(rho.c22b.re.abs() / scale);
        }
    }
    out.push(CheckResult::new("flow-rate reality", worst, 1e-11));
}

fn conserved_rate_checks(out: &mut Vec<CheckResult>) {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    // (geometry, label, extractor of rates that must vanish identically)
    type Extract = fn(f64, f64, Complex64) -> f64;
    let cases: [(GeometryId, &str, Extract); 8] = [
        (GeometryId::Hyperelliptic, "dx, dy", |dx, dy, _| {
            dx.abs().max(dy.abs())
        }),
        (GeometryId::Hopf, "dx", |dx, _, _| dx.abs()),
        (GeometryId::ProperlyElliptic, "dy", |_, dy, _| dy.abs()),
        (GeometryId::KodairaNil, "dy, dz", |_, dy, dz| {
            dy.abs().max(dz.norm())
        }),
        (GeometryId::KodairaNilSemidirect, "dy", |_, dy, _| dy.abs()),
        (GeometryId::InoueSolvable, "dx", |dx, _, _| dx.abs()),
        (GeometryId::Sol1, "dy, Re dz", |_, dy, dz| {
            dy.abs().max(dz.re.abs())
        }),
        (GeometryId::Sol1Prime, "dy", |_, dy, _| dy.abs()),
    ];
    for (id, label, extract) in cases {
        let mut worst: f64 = 0.0;
        for params in grid_params(id) {
            let spec = crate::catalog::build_geometry(id, params).expect("valid");
            for _ in 0..100 {
                let g = random_admissible_metric(&mut rng);
                let (dx, dy, dz) = rhs_closed_form(&spec, &g);
                worst = worst.max(extract(dx, dy, dz));
                let (dx, dy, dz) = rhs_generic(&spec, &g).expect("real rates");
                worst = worst.max(extract(dx, dy, dz));
            }
        }
        out.push(CheckResult::new(
            format!("conserved rates {id} ({label})"),
            worst,
            1e-14,
        ));
    }
}

fn epsilon_independence_check(out: &mut Vec<CheckResult>) {
    let plus = crate::catalog::build_geometry(
        GeometryId::KodairaNilSemidirect,
        crate::catalog::GeometryParams::Epsilon { epsilon: 1 },
    )
    .expect("valid");
    let minus = crate::catalog::build_geometry(
        GeometryId::KodairaNilSemidirect,
        crate::catalog::GeometryParams::Epsilon { epsilon: -1 },
    )
    .expect("valid");
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let g = random_admissible_metric(&mut rng);
        let a = rhs_generic(&plus, &g).expect("real rates");
        let b = rhs_generic(&minus, &g).expect("real rates");
        let scale = a.0.abs().max(a.1.abs()).max(a.2.norm()).max(1.0);
        worst = worst.max((a.0 - b.0).abs() / scale);
        worst = worst.max((a.1 - b.1).abs() / scale);
        worst = worst.max((a.2 - b.2).norm() / scale);
    }
    out.push(CheckResult::new("epsilon independence", worst, 1e-14));
}

fn scale_invariance_check(out: &mut Vec<CheckResult>) {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst: f64 = 0.0;
    for id in [
        GeometryId::Hyperelliptic,
        GeometryId::KodairaNil,
        GeometryId::Sol1,
    ] {
        let spec =
            crate::catalog::build_geometry(id, crate::catalog::GeometryParams::None).expect("valid");
        for _ in 0..100 {
            let g = random_admissible_metric(&mut rng);
            let eta = crate::curvature::compute_eta(&spec, &g);
            for factor in [0.5, 2.0, 7.0] {
                let scaled = crate::curvature::compute_eta(&spec, &g.scaled(factor).unwrap());
                let scale = eta.eta1.norm().max(eta.eta2.norm()).max(1.0);
                worst = worst.max((eta.eta1 - scaled.eta1).norm() / scale);
                worst = worst.max((eta.eta2 - scaled.eta2).norm() / scale);
            }
        }
    }
    out.push(CheckResult::new("eta scale invariance", worst, 1e-12));
}

/// Runs every check; the CLI serializes the result.
pub fn run_validation_suite() -> Vec<CheckResult> {
    let mut out = Vec::new();
    catalog_checks(&mut out);
    inverse_check(&mut out);
    equivalence_checks(&mut out);
    reality_check(&mut out);
    conserved_rate_checks(&mut out);
    epsilon_independence_check(&mut out);
    scale_invariance_check(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_metrics_are_admissible_with_margin() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let g = random_admissible_metric(&mut rng);
            assert!(g.det() >= 0.0999 * g.x() * g.y());
        }
    }

    #[test]
    fn full_suite_passes() {
        let results = run_validation_suite();
        for r in &results {
            assert!(
                r.passed,
                "{} failed: residual {:.3e} > tolerance {:.3e}",
                r.name, r.residual, r.tolerance
            );
        }
        // 18 grid entries contribute two checks each; the remainder are the
        // global checks.
        assert!(results.len() > 40);
    }
}
