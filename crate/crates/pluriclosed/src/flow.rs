//! Time integration of the pluriclosed flow.
//!
//! For every catalog geometry the flow reduces to an autonomous ODE system for
//! `(x, y, z)`; [`rhs_closed_form`] carries those systems verbatim and is what
//! [`integrate`] advances.  [`rhs_generic`] derives the same rates from the
//! generically computed Bismut-Ricci form — the two must agree, and the
//! validation suite compares them at random admissible states.
//!
//! The integrator is an embedded Dormand-Prince 5(4) scheme with a PI
//! step-size controller and a positivity guard on `(x, y, x*y - |z|^2)` that
//! rejects and halves any step leaving the admissible cone.  Steps land
//! exactly on each requested sample time, so sampled values carry full
//! integration accuracy and conserved coefficients are reproduced bit for
//! bit.  The `z` channel is error-controlled purely relatively (and snapped
//! to the invariant `z = 0` section once it decays below [`Z_SNAP`]), which
//! keeps exponentially decaying tails decaying instead of stalling at an
//! absolute-tolerance noise floor.

use num_complex::Complex64;

use crate::catalog::{GeometryId, GeometrySpec};
use crate::curvature::{bismut_ricci, MetricCoefficients};
use crate::error::{Error, Result};

/// Derivatives of `x` and `y` produced by translating the Bismut-Ricci form
/// must be real; an imaginary part above this (relative) level is a
/// convention bug, not roundoff.
pub const REALITY_TOL: f64 = 1e-11;

/// Metric at a single flow time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub g: MetricCoefficients,
}

/// Integration controls.  `sample_times` must be strictly increasing within
/// `(0, t_end]`; the integrator lands on each of them exactly.
#[derive(Debug, Clone)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_end: f64,
    pub max_steps: u64,
    pub sample_times: Vec<f64>,
}

impl IntegratorOptions {
    /// Default controls: `rel_tol = 1e-10`, `abs_tol = 1e-12`, and 200
    /// log-spaced sample times spanning the final six decades up to `t_end`.
    pub fn to_time(t_end: f64) -> Self {
        IntegratorOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            t_end,
            max_steps: 5_000_000,
            sample_times: log_spaced(200, t_end * 1e-6, t_end),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::InvalidOptions(format!(
                "rel_tol must be positive and finite, got {}",
                self.rel_tol
            )));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::InvalidOptions(format!(
                "abs_tol must be positive and finite, got {}",
                self.abs_tol
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidOptions(format!(
                "t_end must be positive and finite, got {}",
                self.t_end
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidOptions("max_steps must be at least 1".into()));
        }
        let mut prev = 0.0;
        for &ts in &self.sample_times {
            if !(ts > prev) {
                return Err(Error::InvalidOptions(format!(
                    "sample_times must be strictly increasing and positive (offender {ts})"
                )));
            }
            if ts > self.t_end {
                return Err(Error::InvalidOptions(format!(
                    "sample time {ts} exceeds t_end {}",
                    self.t_end
                )));
            }
            prev = ts;
        }
        Ok(())
    }
}

/// `n` logarithmically spaced times from `from` to `to` inclusive.
pub fn log_spaced(n: usize, from: f64, to: f64) -> Vec<f64> {
    assert!(n >= 2 && from > 0.0 && to > from);
    let (l0, l1) = (from.log10(), to.log10());
    let mut times: Vec<f64> = (0..n)
        .map(|i| 10f64.powf(l0 + (l1 - l0) * i as f64 / (n - 1) as f64))
        .collect();
    times[0] = from;
    times[n - 1] = to;
    times
}

#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct IntegrationStats {
    pub steps_accepted: u64,
    pub steps_rejected: u64,
    pub rhs_evaluations: u64,
    /// Smallest `x*y - |z|^2` seen over accepted states and samples.
    pub min_det: f64,
}

/// A completed (or, inside error variants, partial) integration.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub geometry: GeometrySpec,
    pub initial: FlowState,
    pub samples: Vec<FlowState>,
    pub stats: IntegrationStats,
}

impl Trajectory {
    /// Last sampled state, falling back to the initial condition.
    pub fn final_state(&self) -> FlowState {
        self.samples.last().copied().unwrap_or(self.initial)
    }

    /// Last time covered by the samples.
    pub fn reached(&self) -> f64 {
        self.final_state().t
    }
}

/// Flow rates `(dx/dt, dy/dt, dz/dt)` from the per-geometry closed-form ODE
/// system.
pub fn rhs_closed_form(spec: &GeometrySpec, g: &MetricCoefficients) -> (f64, f64, Complex64) {
    closed_form_rates(spec, g.x(), g.y(), g.z(), g.det())
}

fn closed_form_rates(
    spec: &GeometrySpec,
    x: f64,
    y: f64,
    z: Complex64,
    d: f64,
) -> (f64, f64, Complex64) {
    let zsq = z.norm_sqr();
    match spec.id {
        GeometryId::Torus => (0.0, 0.0, Complex64::ZERO),
        GeometryId::Hyperelliptic => (0.0, 0.0, -x * z / d),
        GeometryId::Hopf => {
            let alpha = spec.alpha().expect("hopf carries alpha");
            let dy = 2.0 * (x * ((1.0 + alpha * alpha) * x - y) + 2.0 * zsq) / d;
            let dz = z * Complex64::new(-(x + y), alpha * x) / d;
            (0.0, dy, dz)
        }
        GeometryId::ProperlyElliptic => {
            let alpha = spec.alpha().expect("properly-elliptic carries alpha");
            let dx = 2.0 * (1.0 + ((1.0 + alpha * alpha) * y * y - zsq) / d);
            let dz = z * Complex64::new(y - x, -alpha * y) / d;
            (dx, 0.0, dz)
        }
        GeometryId::KodairaNil => (2.0 * y * y / d, 0.0, Complex64::ZERO),
        GeometryId::KodairaNilSemidirect => {
            // Both epsilon signs yield the same system.
            (2.0 * y * y / d, 0.0, -Complex64::new(x, y) * z / d)
        }
        GeometryId::InoueSolvable => {
            let (a, b) = spec.lambda_parts().expect("inoue carries (a, b)");
            let dy = 12.0 * a * a * (1.0 + zsq / d);
            let dz = -Complex64::new(3.0 * a * a + b * b, 2.0 * a * b) * x * z / d;
            (0.0, dy, dz)
        }
        GeometryId::Sol1 => {
            let s = z.re + z.re; // z + conj z
            let dx = (4.0 * x * y - s * s) / d;
            let dz = y * (z.conj() - z) / d;
            (dx, 0.0, dz)
        }
        GeometryId::Sol1Prime => {
            let s = z.re + z.re;
            let dx = (4.0 * x * y - y * s - s * s + 2.0 * y * y) / d;
            let dz = (y * (z.conj() - z) - Complex64::from(y * y)) / d;
            (dx, 0.0, dz)
        }
    }
}

/// Flow rates derived from the generic Bismut-Ricci form: the flow equation
/// translates into `dx = i rho_{1 1bar}`, `dy = i rho_{2 2bar}`,
/// `dz = i rho_{1 2bar}` on the (1,1) part.  Errors if `dx` or `dy` acquires
/// an imaginary part beyond [`REALITY_TOL`].
pub fn rhs_generic(spec: &GeometrySpec, g: &MetricCoefficients) -> Result<(f64, f64, Complex64)> {
    const I: Complex64 = Complex64::new(0.0, 1.0);
    let rho = bismut_ricci(spec, g).one_one_part();
    let dx = I * rho.c11b;
    let dy = I * rho.c22b;
    let dz = I * rho.c12b;
    let scale = rho.max_abs().max(1.0);
    for rate in [dx, dy] {
        if rate.im.abs() > REALITY_TOL * scale {
            return Err(Error::NonRealDerivative { imag: rate.im });
        }
    }
    Ok((dx.re, dy.re, dz))
}

// Dormand-Prince 5(4) tableau (stage abscissae are not needed: the flow is
// autonomous).
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Difference between the 5th- and 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const PI_ALPHA: f64 = 0.7 / 5.0;
const PI_BETA: f64 = 0.4 / 5.0;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
/// Steps below this fraction of the local time scale abort the run.
const STEP_FLOOR: f64 = 1e-14;
/// Once `|z|` decays below this level it is set to exactly zero.  Every
/// family either preserves `|z|` or drives `z` to the invariant zero section,
/// far above this threshold in meaningful dynamics, so the snap only cleans
/// up tails that would otherwise linger as denormal round-off.
pub const Z_SNAP: f64 = 1e-290;

type StateVec = [f64; 4];

fn state_of(g: &MetricCoefficients) -> StateVec {
    [g.x(), g.y(), g.z().re, g.z().im]
}

fn det_of(s: &StateVec) -> f64 {
    s[0] * s[1] - (s[2] * s[2] + s[3] * s[3])
}

/// Closed-form rates on a raw state vector; `None` when the state has left
/// the admissible cone (the caller treats that as a rejected step).
fn rhs_raw(spec: &GeometrySpec, s: &StateVec) -> Option<StateVec> {
    let det = det_of(s);
    if !(s[0] > 0.0 && s[1] > 0.0 && det > 0.0) || !det.is_finite() {
        return None;
    }
    let (dx, dy, dz) = closed_form_rates(spec, s[0], s[1], Complex64::new(s[2], s[3]), det);
    let out = [dx, dy, dz.re, dz.im];
    if out.iter().all(|v| v.is_finite()) {
        Some(out)
    } else {
        None
    }
}

fn rms(v: &StateVec) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / 4.0).sqrt()
}

fn initial_step(spec: &GeometrySpec, y0: &StateVec, f0: &StateVec, opts: &IntegratorOptions) -> f64 {
    let sc: Vec<f64> = (0..4)
        .map(|i| opts.abs_tol + opts.rel_tol * y0[i].abs())
        .collect();
    let scaled = |v: &StateVec| {
        let mut out = [0.0; 4];
        for i in 0..4 {
            out[i] = v[i] / sc[i];
        }
        rms(&out)
    };
    let (d0, d1) = (scaled(y0), scaled(f0));
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        (1e-3 * opts.t_end).max(1e-6)
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(opts.t_end);
    // One explicit Euler probe to estimate the second derivative scale.
    let mut y1 = *y0;
    for i in 0..4 {
        y1[i] += h0 * f0[i];
    }
    if let Some(f1) = rhs_raw(spec, &y1) {
        let mut df = [0.0; 4];
        for i in 0..4 {
            df[i] = f1[i] - f0[i];
        }
        let d2 = scaled(&df) / h0;
        let m = d1.max(d2);
        let h1 = if m <= 1e-15 {
            h0 * 100.0
        } else {
            (0.01 / m).powf(0.2)
        };
        h0 = (100.0 * h0).min(h1);
    } else {
        h0 *= 1e-3;
    }
    h0.min(opts.t_end).max(1e-300)
}

enum StepOutcome {
    /// Error estimate and the admissible end state with its derivative.
    Accept {
        y_new: StateVec,
        f_new: StateVec,
        err: f64,
    },
    /// Step-size multiplier to apply before retrying.
    Reject(f64),
}

fn attempt_step(
    spec: &GeometrySpec,
    y: &StateVec,
    f: &StateVec,
    h: f64,
    opts: &IntegratorOptions,
    rhs_evals: &mut u64,
) -> StepOutcome {
    let mut k = [[0.0; 4]; 7];
    k[0] = *f;
    for stage in 1..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(stage) {
            let a = A[stage][j];
            if a != 0.0 {
                for i in 0..4 {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        *rhs_evals += 1;
        match rhs_raw(spec, &ys) {
            Some(fs) => k[stage] = fs,
            None => return StepOutcome::Reject(0.5),
        }
    }
    // Stage 7 state is the 5th-order solution (FSAL).
    let mut y_new = *y;
    for (j, kj) in k.iter().enumerate().take(6) {
        let a = A[6][j];
        if a != 0.0 {
            for i in 0..4 {
                y_new[i] += h * a * kj[i];
            }
        }
    }
    let det_new = det_of(&y_new);
    if !(y_new[0] > 0.0 && y_new[1] > 0.0 && det_new > 0.0) || !det_new.is_finite() {
        return StepOutcome::Reject(0.5);
    }

    // Snap a decaying z onto the invariant zero section.  hypot, not
    // sqrt-of-squares: |z|^2 underflows to subnormals around |z| ~ 1e-162,
    // which would freeze the relative error scale and stall the decay there.
    let z_scale_old = y[2].hypot(y[3]);
    let z_scale_new = y_new[2].hypot(y_new[3]);
    let snapped = z_scale_new > 0.0 && z_scale_new < Z_SNAP && z_scale_new < z_scale_old;
    if snapped {
        y_new[2] = 0.0;
        y_new[3] = 0.0;
    }
    let f_new = if snapped {
        // FSAL: the cached derivative must match the (snapped) end state.
        *rhs_evals += 1;
        match rhs_raw(spec, &y_new) {
            Some(fs) => fs,
            None => return StepOutcome::Reject(0.5),
        }
    } else {
        k[6]
    };

    let mut est = [0.0; 4];
    for (i, slot) in est.iter_mut().enumerate() {
        let mut e = 0.0;
        for (j, kj) in k.iter().enumerate() {
            e += E[j] * kj[i];
        }
        *slot = h * e;
    }
    // x and y are measured against a mixed absolute/relative scale; the z
    // pair against a purely relative one, so the error control keeps tracking
    // z while it decays through hundreds of orders of magnitude.
    let mut err_sq = 0.0;
    for i in 0..2 {
        let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs());
        err_sq += (est[i] / sc) * (est[i] / sc);
    }
    let z_err = est[2].hypot(est[3]);
    let z_sc = opts.rel_tol * z_scale_old.max(z_scale_new);
    if z_sc > 0.0 {
        err_sq += (z_err / z_sc) * (z_err / z_sc);
    } else if z_err > 0.0 {
        return StepOutcome::Reject(0.5);
    }
    let err = (err_sq / 3.0).sqrt();
    if !err.is_finite() {
        return StepOutcome::Reject(0.5);
    }
    if err <= 1.0 {
        StepOutcome::Accept { y_new, f_new, err }
    } else {
        StepOutcome::Reject((SAFETY * err.powf(-0.2)).clamp(0.1, 0.9))
    }
}

/// Integrates the closed-form flow from `g0` at `t = 0` to `opts.t_end`,
/// sampling at `opts.sample_times`.  Fails with the partial trajectory
/// attached if the step size underflows or the step budget is exhausted.
pub fn integrate(
    spec: &GeometrySpec,
    g0: &MetricCoefficients,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    opts.validate()?;
    let initial = FlowState { t: 0.0, g: *g0 };
    let mut stats = IntegrationStats {
        min_det: g0.det(),
        ..Default::default()
    };
    let mut samples: Vec<FlowState> = Vec::with_capacity(opts.sample_times.len());
    let mut t = 0.0;
    let mut y = state_of(g0);
    stats.rhs_evaluations += 1;
    let mut f = rhs_raw(spec, &y).expect("initial state is admissible by construction");
    let mut h = initial_step(spec, &y, &f, opts);
    let mut sample_idx = 0usize;
    let mut err_prev: f64 = 1e-4;
    let mut just_rejected = false;

    let partial = |samples: &Vec<FlowState>, stats: &IntegrationStats| {
        Box::new(Trajectory {
            geometry: spec.clone(),
            initial,
            samples: samples.clone(),
            stats: *stats,
        })
    };

    while t < opts.t_end {
        if stats.steps_accepted + stats.steps_rejected >= opts.max_steps {
            return Err(Error::MaxStepsExceeded {
                steps: opts.max_steps,
                t,
                partial: partial(&samples, &stats),
            });
        }
        if h < STEP_FLOOR * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow {
                t,
                step: h,
                partial: partial(&samples, &stats),
            });
        }
        // Clamp the step so it lands exactly on the next sample time (or the
        // horizon): sampled states are then genuine step endpoints.
        let next_stop = if sample_idx < opts.sample_times.len() {
            opts.sample_times[sample_idx]
        } else {
            opts.t_end
        };
        let hitting_stop = h >= next_stop - t;
        let h_step = if hitting_stop { next_stop - t } else { h };
        match attempt_step(spec, &y, &f, h_step, opts, &mut stats.rhs_evaluations) {
            StepOutcome::Reject(factor) => {
                stats.steps_rejected += 1;
                h = h_step * factor;
                just_rejected = true;
            }
            StepOutcome::Accept { y_new, f_new, err } => {
                let t_new = if hitting_stop { next_stop } else { t + h_step };
                if sample_idx < opts.sample_times.len() && t_new == opts.sample_times[sample_idx] {
                    let g = MetricCoefficients::from_parts(y_new[0], y_new[1], y_new[2], y_new[3])
                        .map_err(|_| Error::InadmissibleSample { t: t_new })?;
                    samples.push(FlowState { t: t_new, g });
                    sample_idx += 1;
                }
                t = t_new;
                y = y_new;
                f = f_new;
                stats.steps_accepted += 1;
                stats.min_det = stats.min_det.min(det_of(&y));
                let e = err.max(1e-10);
                let mut fac = SAFETY * e.powf(-PI_ALPHA) * err_prev.powf(PI_BETA);
                fac = fac.clamp(FAC_MIN, if just_rejected { 1.0 } else { FAC_MAX });
                // After a clamped landing, resume from the controller's step.
                let h_next = h_step * fac;
                h = if hitting_stop { h_next.max(h) } else { h_next };
                err_prev = e;
                just_rejected = false;
            }
        }
    }
    debug_assert_eq!(sample_idx, opts.sample_times.len());
    Ok(Trajectory {
        geometry: spec.clone(),
        initial,
        samples,
        stats,
    })
}

/// [`integrate`] with the default long-horizon setup: `t_end = 1e4` and 200
/// log-spaced samples on `[1e-2, 1e4]`.
pub fn solve_default(spec: &GeometrySpec, g0: &MetricCoefficients) -> Result<Trajectory> {
    integrate(spec, g0, &IntegratorOptions::to_time(1e4))
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
    fn closed_form_rates_fixed_examples() {
        let hopf = build_geometry(GeometryId::Hopf, GeometryParams::Alpha { alpha: 0.0 }).unwrap();
        let (dx, dy, dz) = rhs_closed_form(&hopf, &metric(1.0, 1.0, 0.0, 0.0));
        assert_eq!(dx, 0.0);
        assert_relative_eq!(dy, 0.0, epsilon = 1e-15);
        assert_eq!(dz, Complex64::ZERO);

        let pe = build_geometry(GeometryId::ProperlyElliptic, GeometryParams::Alpha { alpha: 0.0 })
            .unwrap();
        let (dx, dy, dz) = rhs_closed_form(&pe, &metric(1.0, 1.0, 0.0, 0.0));
        assert_relative_eq!(dx, 4.0, epsilon = 1e-15);
        assert_eq!(dy, 0.0);
        assert_eq!(dz, Complex64::ZERO);

        let hyper =
            build_geometry(GeometryId::Hyperelliptic, GeometryParams::None).unwrap();
        let (_, _, dz) = rhs_closed_form(&hyper, &metric(1.0, 2.0, 0.0, 0.5));
        assert_relative_eq!(dz.im, -2.0 / 7.0, epsilon = 1e-15);
        assert_relative_eq!(dz.re, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn generic_rates_match_closed_form_at_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        for spec in crate::catalog::parameter_grid() {
            for _ in 0..50 {
                let g = random_admissible_metric(&mut rng);
                let (cx, cy, cz) = rhs_closed_form(&spec, &g);
                let (gx, gy, gz) = rhs_generic(&spec, &g).unwrap();
                let scale = [cx.abs(), cy.abs(), cz.norm(), 1.0]
                    .into_iter()
                    .fold(0.0, f64::max);
                assert!((cx - gx).abs() <= 1e-11 * scale, "{}: dx", spec.id);
                assert!((cy - gy).abs() <= 1e-11 * scale, "{}: dy", spec.id);
                assert!((cz - gz).norm() <= 1e-11 * scale, "{}: dz", spec.id);
            }
        }
    }

    #[test]
    fn generic_rates_vanish_on_torus() {
        let spec = build_geometry(GeometryId::Torus, GeometryParams::None).unwrap();
        let (dx, dy, dz) = rhs_generic(&spec, &metric(3.0, 5.0, 1.0, 2.0)).unwrap();
        assert_eq!((dx, dy), (0.0, 0.0));
        assert_eq!(dz, Complex64::ZERO);
    }

    #[test]
    fn epsilon_sign_does_not_change_the_flow() {
        let plus = build_geometry(
            GeometryId::KodairaNilSemidirect,
            GeometryParams::Epsilon { epsilon: 1 },
        )
        .unwrap();
        let minus = build_geometry(
            GeometryId::KodairaNilSemidirect,
            GeometryParams::Epsilon { epsilon: -1 },
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let g = random_admissible_metric(&mut rng);
            let a = rhs_generic(&plus, &g).unwrap();
            let b = rhs_generic(&minus, &g).unwrap();
            assert!((a.0 - b.0).abs() < 1e-14 * (1.0 + a.0.abs()));
            assert!((a.1 - b.1).abs() < 1e-14 * (1.0 + a.1.abs()));
            assert!((a.2 - b.2).norm() < 1e-14 * (1.0 + a.2.norm()));
        }
    }

    #[test]
    fn torus_flow_is_stationary() {
        let spec = build_geometry(GeometryId::Torus, GeometryParams::None).unwrap();
        let g0 = metric(2.0, 3.0, 0.5, -0.25);
        let traj = solve_default(&spec, &g0).unwrap();
        assert_eq!(traj.samples.len(), 200);
        for s in &traj.samples {
            assert_eq!(s.g.x(), 2.0);
            assert_eq!(s.g.y(), 3.0);
            assert_eq!(s.g.z(), Complex64::new(0.5, -0.25));
        }
    }

    #[test]
    fn nil_geometry_has_square_root_closed_form() {
        // With x0 = y0 = 1, z0 = 0 the system integrates to x(t) = sqrt(4t+1).
        let spec = build_geometry(GeometryId::KodairaNil, GeometryParams::None).unwrap();
        let mut opts = IntegratorOptions::to_time(1.0);
        opts.sample_times = vec![0.25, 0.5, 1.0];
        let traj = integrate(&spec, &metric(1.0, 1.0, 0.0, 0.0), &opts).unwrap();
        for s in &traj.samples {
            let expected = (4.0 * s.t + 1.0).sqrt();
            assert!(
                (s.g.x() - expected).abs() < 1e-8,
                "x({}) = {} vs {}",
                s.t,
                s.g.x(),
                expected
            );
            assert_eq!(s.g.y(), 1.0);
        }
        assert_relative_eq!(traj.final_state().g.x(), 5f64.sqrt(), epsilon = 1e-8);
    }

    #[test]
    fn hopf_flow_converges_to_round_metric() {
        let spec = build_geometry(GeometryId::Hopf, GeometryParams::Alpha { alpha: 0.0 }).unwrap();
        let mut opts = IntegratorOptions::to_time(50.0);
        opts.sample_times = vec![50.0];
        let traj = integrate(&spec, &metric(1.0, 2.0, 0.0, 0.0), &opts).unwrap();
        let end = traj.final_state().g;
        assert!((end.y() - 1.0).abs() < 1e-6);
        assert_eq!(end.x(), 1.0);
    }

    #[test]
    fn nil_first_integral_is_preserved() {
        // (x y0 - |z0|^2) dx = 2 y0^2 dt integrates to
        // y0 x^2 / 2 - |z0|^2 x = 2 y0^2 t + const.
        let spec = build_geometry(GeometryId::KodairaNil, GeometryParams::None).unwrap();
        let g0 = metric(2.0, 1.5, 0.4, -0.3);
        let (y0, zsq) = (g0.y(), g0.z().norm_sqr());
        let c0 = 0.5 * y0 * g0.x() * g0.x() - zsq * g0.x();
        let mut opts = IntegratorOptions::to_time(100.0);
        opts.sample_times = log_spaced(50, 0.1, 100.0);
        let traj = integrate(&spec, &g0, &opts).unwrap();
        for s in &traj.samples {
            let c = 0.5 * y0 * s.g.x() * s.g.x() - zsq * s.g.x() - 2.0 * y0 * y0 * s.t;
            assert!(
                (c - c0).abs() <= 1e-7 * (1.0 + s.t),
                "first integral drift {} at t = {}",
                (c - c0).abs(),
                s.t
            );
        }
    }

    #[test]
    fn conserved_coefficients_are_exact_along_the_flow() {
        // Components with identically zero rates are preserved bit-for-bit by
        // the Runge-Kutta update.
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let cases: Vec<(GeometrySpec, Box<dyn Fn(&MetricCoefficients, &MetricCoefficients) -> bool>)> = vec![
            (
                build_geometry(GeometryId::Hyperelliptic, GeometryParams::None).unwrap(),
                Box::new(|a, b| a.x() == b.x() && a.y() == b.y()),
            ),
            (
                build_geometry(GeometryId::Hopf, GeometryParams::Alpha { alpha: 3.0 }).unwrap(),
                Box::new(|a, b| a.x() == b.x()),
            ),
            (
                build_geometry(GeometryId::ProperlyElliptic, GeometryParams::Alpha { alpha: -2.0 })
                    .unwrap(),
                Box::new(|a, b| a.y() == b.y()),
            ),
            (
                build_geometry(GeometryId::KodairaNil, GeometryParams::None).unwrap(),
                Box::new(|a, b| a.y() == b.y() && a.z() == b.z()),
            ),
            (
                build_geometry(
                    GeometryId::KodairaNilSemidirect,
                    GeometryParams::Epsilon { epsilon: -1 },
                )
                .unwrap(),
                Box::new(|a, b| a.y() == b.y()),
            ),
            (
                build_geometry(GeometryId::InoueSolvable, GeometryParams::Lambda { a: 0.5, b: 1.0 })
                    .unwrap(),
                Box::new(|a, b| a.x() == b.x()),
            ),
            (
                build_geometry(GeometryId::Sol1, GeometryParams::None).unwrap(),
                Box::new(|a, b| a.y() == b.y() && a.z().re == b.z().re),
            ),
            (
                build_geometry(GeometryId::Sol1Prime, GeometryParams::None).unwrap(),
                Box::new(|a, b| a.y() == b.y()),
            ),
        ];
        for (spec, conserved) in &cases {
            let g0 = random_admissible_metric(&mut rng);
            let mut opts = IntegratorOptions::to_time(10.0);
            opts.sample_times = vec![0.1, 1.0, 10.0];
            let traj = integrate(spec, &g0, &opts).unwrap();
            for s in &traj.samples {
                assert!(conserved(&g0, &s.g), "{}: conserved quantity drifted", spec.id);
            }
        }
    }

    #[test]
    fn sol1_z_norm_is_monotone_nonincreasing() {
        let spec = build_geometry(GeometryId::Sol1, GeometryParams::None).unwrap();
        let g0 = metric(2.0, 1.0, 0.3, 0.7);
        let traj = solve_default(&spec, &g0).unwrap();
        let mut prev = g0.z().norm_sqr();
        for s in &traj.samples {
            let cur = s.g.z().norm_sqr();
            assert!(cur <= prev * (1.0 + 1e-12));
            prev = cur;
        }
    }

    #[test]
    fn properly_elliptic_determinant_increases() {
        let spec =
            build_geometry(GeometryId::ProperlyElliptic, GeometryParams::Alpha { alpha: 1.0 })
                .unwrap();
        let g0 = metric(1.0, 2.0, 0.5, -0.5);
        let traj = solve_default(&spec, &g0).unwrap();
        let mut prev = g0.det();
        for s in &traj.samples {
            assert!(s.g.det() >= prev * (1.0 - 1e-12));
            prev = s.g.det();
        }
    }

    #[test]
    fn halved_tolerances_reproduce_samples() {
        let spec = build_geometry(GeometryId::Sol1, GeometryParams::None).unwrap();
        let g0 = metric(1.0, 1.0, 0.2, 0.4);
        let mut opts = IntegratorOptions::to_time(1.0);
        opts.sample_times = vec![0.25, 0.5, 1.0];
        let coarse = integrate(&spec, &g0, &opts).unwrap();
        let mut fine_opts = opts.clone();
        fine_opts.rel_tol /= 2.0;
        fine_opts.abs_tol /= 2.0;
        let fine = integrate(&spec, &g0, &fine_opts).unwrap();
        for (a, b) in coarse.samples.iter().zip(&fine.samples) {
            assert!(rel_err(a.g.x(), b.g.x()) < 10.0 * opts.rel_tol);
            assert!(rel_err(a.g.y(), b.g.y()) < 10.0 * opts.rel_tol);
            assert!((a.g.z() - b.g.z()).norm() < 10.0 * opts.rel_tol * (1.0 + a.g.z().norm()));
        }
    }

    #[test]
    fn exhausted_step_budget_reports_partial_trajectory() {
        let spec = build_geometry(GeometryId::KodairaNil, GeometryParams::None).unwrap();
        let mut opts = IntegratorOptions::to_time(1e4);
        opts.max_steps = 3;
        let err = integrate(&spec, &metric(1.0, 1.0, 0.0, 0.0), &opts).unwrap_err();
        match err {
            Error::MaxStepsExceeded { steps, partial, .. } => {
                assert_eq!(steps, 3);
                assert!(partial.samples.len() < 200);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn invalid_options_are_rejected() {
        let spec = build_geometry(GeometryId::Torus, GeometryParams::None).unwrap();
        let g0 = metric(1.0, 1.0, 0.0, 0.0);
        let mut opts = IntegratorOptions::to_time(1.0);
        opts.sample_times = vec![0.5, 2.0];
        assert!(matches!(
            integrate(&spec, &g0, &opts),
            Err(Error::InvalidOptions(_))
        ));
        let mut opts = IntegratorOptions::to_time(1.0);
        opts.sample_times = vec![0.5, 0.5];
        assert!(matches!(
            integrate(&spec, &g0, &opts),
            Err(Error::InvalidOptions(_))
        ));
        let mut opts = IntegratorOptions::to_time(1.0);
        opts.rel_tol = -1.0;
        assert!(matches!(
            integrate(&spec, &g0, &opts),
            Err(Error::InvalidOptions(_))
        ));
    }

    #[test]
    fn default_sample_grid_spans_six_decades() {
        let opts = IntegratorOptions::to_time(1e4);
        assert_eq!(opts.sample_times.len(), 200);
        assert_relative_eq!(opts.sample_times[0], 1e-2, epsilon = 1e-15);
        assert_eq!(*opts.sample_times.last().unwrap(), 1e4);
    }
}
