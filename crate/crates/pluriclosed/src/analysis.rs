//! Long-time diagnostics of flow trajectories.
//!
//! Works purely on sampled [`Trajectory`] data: conversion to the orthonormal
//! real frame, least-squares classification of coefficient growth,
//! Gromov-Hausdorff limit data, parabolic blowdown rescalings against their
//! closed-form targets, and the soliton scale-invariance check on blowdown
//! limits.

use num_complex::Complex64;
use serde::Serialize;

use crate::catalog::GeometryId;
use crate::curvature::MetricCoefficients;
use crate::error::{Error, Result};
use crate::flow::Trajectory;

/// Metric coefficients rewritten on the real coframe `{sigma^1..sigma^4}`:
/// `omega = x/2 sigma^{12} + y/2 sigma^{34} - Im z/2 (sigma^{13} + sigma^{24})
/// + Re z/2 (sigma^{14} - sigma^{23})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RealFrameForm {
    pub s12: f64,
    pub s34: f64,
    pub s13: f64,
    pub s24: f64,
    pub s14: f64,
    pub s23: f64,
}

impl RealFrameForm {
    pub fn as_array(&self) -> [f64; 6] {
        [self.s12, self.s34, self.s13, self.s24, self.s14, self.s23]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        RealFrameForm {
            s12: a[0],
            s34: a[1],
            s13: a[2],
            s24: a[3],
            s14: a[4],
            s23: a[5],
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.as_array().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Frame index pairs of the coefficients in [`RealFrameForm`] order
/// (zero-based).
const FRAME_PAIRS: [(usize, usize); 6] = [(0, 1), (2, 3), (0, 2), (1, 3), (0, 3), (1, 2)];

pub fn to_real_frame(g: &MetricCoefficients) -> RealFrameForm {
    real_frame_of(g.x(), g.y(), g.z())
}

fn real_frame_of(x: f64, y: f64, z: Complex64) -> RealFrameForm {
    RealFrameForm {
        s12: 0.5 * x,
        s34: 0.5 * y,
        s13: -0.5 * z.im,
        s24: -0.5 * z.im,
        s14: 0.5 * z.re,
        s23: -0.5 * z.re,
    }
}

/// Growth class of one metric coefficient over the fit window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum Asymptotic {
    Constant { value: f64 },
    Linear { slope: f64 },
    Sqrt { coefficient: f64 },
    LogBounded { offset: f64, log_coefficient: f64 },
    ExpDecay { rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientFit {
    #[serde(flatten)]
    pub class: Asymptotic,
    /// Normalized root-mean-square misfit of the winning model.
    pub residual: f64,
    /// Time span the fit was performed on.
    pub window: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticsReport {
    pub x: CoefficientFit,
    pub y: CoefficientFit,
    pub z_abs: CoefficientFit,
}

/// Values this far below a series' global scale are treated as numerically
/// extinct (relevant for exponentially decaying `|z|`, which underflows well
/// before the default horizon).
const EXTINCT_REL: f64 = 1e-250;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

/// Least squares for `c ~ p * u + q * v`; returns `(p, q, rms residual)`.
fn lsq2(u: &[f64], v: &[f64], c: &[f64]) -> (f64, f64, f64) {
    let n = c.len() as f64;
    let suu = u.iter().map(|a| a * a).sum::<f64>();
    let svv = v.iter().map(|a| a * a).sum::<f64>();
    let suv = u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let suc = u.iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
    let svc = v.iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
    let det = suu * svv - suv * suv;
    if det.abs() < 1e-300 {
        return (0.0, 0.0, f64::INFINITY);
    }
    let p = (suc * svv - svc * suv) / det;
    let q = (svc * suu - suc * suv) / det;
    let mut resid_sq = 0.0;
    for i in 0..c.len() {
        let r = c[i] - p * u[i] - q * v[i];
        resid_sq += r * r;
    }
    (p, q, (resid_sq / n).sqrt())
}

fn classify(ts: &[f64], cs: &[f64]) -> CoefficientFit {
    let t_last = *ts.last().expect("nonempty window");
    let global_scale = cs.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    // The tail window: the last decade of samples.
    let start = ts.iter().position(|&t| t >= t_last / 10.0).unwrap_or(0);
    let (wt, wc) = (&ts[start..], &cs[start..]);
    let window = (wt[0], t_last);
    let tail_scale = wc.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    if global_scale < 1e-300 {
        return CoefficientFit {
            class: Asymptotic::Constant { value: 0.0 },
            residual: 0.0,
            window,
        };
    }

    // A series that has collapsed to (numerical) zero by the end decayed at
    // least exponentially; fit the rate on the last decade of live samples
    // instead of letting the (partially) dead tail win as a constant.
    let end_scale = cs.last().expect("nonempty window").abs();
    if end_scale < EXTINCT_REL * global_scale {
        let live: Vec<(f64, f64)> = ts
            .iter()
            .zip(cs)
            .filter(|(_, &c)| c.abs() > EXTINCT_REL * global_scale)
            .map(|(&t, &c)| (t, c.abs()))
            .collect();
        if live.len() >= 5 {
            let t_live = live.last().unwrap().0;
            let lts: Vec<f64> = live
                .iter()
                .filter(|(t, _)| *t >= t_live / 10.0)
                .map(|(t, _)| *t)
                .collect();
            let lcs: Vec<f64> = live
                .iter()
                .filter(|(t, _)| *t >= t_live / 10.0)
                .map(|(_, c)| c.ln())
                .collect();
            if lts.len() >= 5 {
                let ones = vec![1.0; lts.len()];
                let (_, slope, resid) = lsq2(&ones, &lts, &lcs);
                return CoefficientFit {
                    class: Asymptotic::ExpDecay { rate: -slope },
                    residual: resid,
                    window: (lts[0], t_live),
                };
            }
        }
        return CoefficientFit {
            class: Asymptotic::Constant { value: 0.0 },
            residual: 0.0,
            window,
        };
    }

    let scale = tail_scale;
    let ones = vec![1.0; wt.len()];
    let mut candidates: Vec<(Asymptotic, f64)> = Vec::new();

    let value = mean(wc);
    let dev: Vec<f64> = wc.iter().map(|c| c - value).collect();
    candidates.push((Asymptotic::Constant { value }, rms(&dev) / scale));

    let (_, slope, resid) = lsq2(&ones, wt, wc);
    candidates.push((Asymptotic::Linear { slope }, resid / scale));

    // One-parameter fit through the origin for c = k sqrt(t).
    let num: f64 = wt.iter().zip(wc).map(|(t, c)| c * t.sqrt()).sum();
    let den: f64 = wt.iter().sum();
    let k = num / den;
    let dev: Vec<f64> = wt
        .iter()
        .zip(wc)
        .map(|(t, c)| c - k * t.sqrt())
        .collect();
    candidates.push((Asymptotic::Sqrt { coefficient: k }, rms(&dev) / scale));

    let logs: Vec<f64> = wt.iter().map(|t| t.ln_1p()).collect();
    let (offset, log_coefficient, resid) = lsq2(&ones, &logs, wc);
    candidates.push((
        Asymptotic::LogBounded {
            offset,
            log_coefficient,
        },
        resid / scale,
    ));

    // Exponential decay, fitted in log space on the positive samples.
    let live: Vec<(f64, f64)> = wt
        .iter()
        .zip(wc)
        .filter(|(_, &c)| c.abs() > EXTINCT_REL * global_scale)
        .map(|(&t, &c)| (t, c.abs().ln()))
        .collect();
    if live.len() >= 5 {
        let lt: Vec<f64> = live.iter().map(|(t, _)| *t).collect();
        let lc: Vec<f64> = live.iter().map(|(_, c)| *c).collect();
        let ones = vec![1.0; lt.len()];
        let (_, slope, resid) = lsq2(&ones, &lt, &lc);
        if slope < 0.0 {
            candidates.push((Asymptotic::ExpDecay { rate: -slope }, resid));
        }
    }

    // Smallest residual wins; on a near-tie (within 50%) the earlier, simpler
    // class is preferred.
    let best = candidates
        .iter()
        .map(|(_, r)| *r)
        .fold(f64::INFINITY, f64::min);
    let (class, residual) = candidates
        .into_iter()
        .find(|(_, r)| *r <= 1.5 * best)
        .expect("at least one candidate");
    CoefficientFit {
        class,
        residual,
        window,
    }
}

/// Classifies the growth of `x`, `y` and `|z|` over the last decade of the
/// trajectory.  Requires samples spanning at least two decades.
pub fn estimate_asymptotics(traj: &Trajectory) -> Result<AsymptoticsReport> {
    let n = traj.samples.len();
    if n < 20 {
        return Err(Error::InsufficientSamples(format!(
            "asymptotics needs at least 20 samples, got {n}"
        )));
    }
    let t_first = traj.samples[0].t;
    let t_last = traj.samples[n - 1].t;
    if t_last < 100.0 * t_first {
        return Err(Error::InsufficientSamples(format!(
            "samples span [{t_first:e}, {t_last:e}], need at least two decades"
        )));
    }
    let ts: Vec<f64> = traj.samples.iter().map(|s| s.t).collect();
    let xs: Vec<f64> = traj.samples.iter().map(|s| s.g.x()).collect();
    let ys: Vec<f64> = traj.samples.iter().map(|s| s.g.y()).collect();
    let zs: Vec<f64> = traj.samples.iter().map(|s| s.g.z().norm()).collect();
    Ok(AsymptoticsReport {
        x: classify(&ts, &xs),
        y: classify(&ts, &ys),
        z_abs: classify(&ts, &zs),
    })
}

/// Gromov-Hausdorff limit data extracted from the end of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GhLimit {
    /// Collapse to a point: every coefficient is `o(t)`.
    Point { diameter_proxy: f64 },
    /// No collapse — the flow converges; reports the limiting `y/x` ratio.
    Convergence { final_y_over_x: f64 },
    /// Collapse to a circle of the given length.
    Circle { length: f64 },
    /// Collapse to the base curve; reports the limit of `x(t)/t`.
    BaseCurve { coefficient: f64 },
}

/// Normalized-time limit (the `t -> infinity` Gromov-Hausdorff behavior of
/// `(M, g(t)/t)`).  Sol geometries need `lambda_quotient` (the lattice
/// parameter, `> 1`) to turn the collapse rate into a circle length.
pub fn gh_limit(traj: &Trajectory, lambda_quotient: Option<f64>) -> Result<GhLimit> {
    if traj.samples.is_empty() {
        return Err(Error::InsufficientSamples("gh_limit needs samples".into()));
    }
    let end = traj.final_state();
    let (t, g) = (end.t, end.g);
    let limit = match traj.geometry.id {
        GeometryId::Torus
        | GeometryId::Hyperelliptic
        | GeometryId::KodairaNil
        | GeometryId::KodairaNilSemidirect => GhLimit::Point {
            diameter_proxy: (g.x().max(g.y()).max(g.z().norm())) / t,
        },
        GeometryId::Hopf => GhLimit::Convergence {
            final_y_over_x: g.y() / g.x(),
        },
        GeometryId::ProperlyElliptic => GhLimit::BaseCurve {
            coefficient: g.x() / t,
        },
        GeometryId::InoueSolvable => GhLimit::Circle {
            length: (g.y() / (2.0 * t)).sqrt(),
        },
        GeometryId::Sol1 => {
            let lambda = quotient_param(lambda_quotient)?;
            // This family is uniformized with the squared lattice parameter.
            GhLimit::Circle {
                length: (g.x() / (2.0 * t)).sqrt() * (lambda * lambda).ln().abs(),
            }
        }
        GeometryId::Sol1Prime => {
            let lambda = quotient_param(lambda_quotient)?;
            GhLimit::Circle {
                length: (g.x() / (2.0 * t)).sqrt() * lambda.ln().abs(),
            }
        }
    };
    Ok(limit)
}

fn quotient_param(lambda: Option<f64>) -> Result<f64> {
    match lambda {
        None => Err(Error::MissingQuotientParameter),
        Some(l) if l.is_finite() && l > 1.0 => Ok(l),
        Some(l) => Err(Error::InvalidQuotientParameter(l)),
    }
}

/// Scaling weights `(w1, w2, w3, w4)` of the blowdown diffeomorphisms: frame
/// direction `i` is rescaled by `s^{w_i}`, so the `sigma^{ij}` coefficient of
/// the pulled-back form at time `s t` carries `s^{w_i + w_j - 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowdownWeights {
    pub w: [f64; 4],
}

pub fn blowdown_weights(id: GeometryId) -> BlowdownWeights {
    let w = match id {
        // Converging or stationary families: parabolic scaling in all
        // directions fixes the limit.
        GeometryId::Torus | GeometryId::Hyperelliptic | GeometryId::Hopf => [0.5, 0.5, 0.5, 0.5],
        GeometryId::ProperlyElliptic => [0.0, 0.0, 0.5, 0.5],
        GeometryId::KodairaNil | GeometryId::KodairaNilSemidirect => [0.25, 0.25, 0.5, 0.5],
        GeometryId::InoueSolvable => [0.5, 0.5, 0.0, 0.0],
        GeometryId::Sol1 | GeometryId::Sol1Prime => [0.0, 0.0, 0.5, 0.5],
    };
    BlowdownWeights { w }
}

/// One blowdown scale: the rescaled real-frame forms over the time grid.
#[derive(Debug, Clone, Serialize)]
pub struct RescaledSlice {
    pub s: f64,
    pub forms: Vec<RealFrameForm>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowdownResult {
    pub geometry: GeometryId,
    pub weights: BlowdownWeights,
    pub t_grid: Vec<f64>,
    pub slices: Vec<RescaledSlice>,
    /// Closed-form limit forms on `t_grid`.
    pub target: Vec<RealFrameForm>,
    /// Sup deviation of the largest-`s` slice from the target, normalized by
    /// the largest target coefficient over the grid.
    pub deviation: f64,
}

impl BlowdownResult {
    /// The rescaled slice at the largest blowdown scale.
    pub fn limit_slice(&self) -> &RescaledSlice {
        self.slices.last().expect("at least one scale")
    }
}

/// Raw coefficients at time `tau`, linearly interpolated between samples (and
/// exact on sample times).
fn coefficients_at(traj: &Trajectory, tau: f64) -> Result<(f64, f64, Complex64)> {
    let samples = &traj.samples;
    if samples.is_empty() || tau > samples[samples.len() - 1].t * (1.0 + 1e-12) {
        return Err(Error::TrajectoryTooShort {
            needed: tau,
            reached: traj.reached(),
        });
    }
    let values = |s: &crate::flow::FlowState| (s.g.x(), s.g.y(), s.g.z());
    let idx = samples.partition_point(|s| s.t < tau);
    if idx < samples.len() && (samples[idx].t - tau).abs() <= 1e-9 * tau {
        return Ok(values(&samples[idx]));
    }
    let (t0, v0, t1, v1) = if idx == 0 {
        (
            traj.initial.t,
            values(&traj.initial),
            samples[0].t,
            values(&samples[0]),
        )
    } else {
        let hi = idx.min(samples.len() - 1);
        (
            samples[hi - 1].t,
            values(&samples[hi - 1]),
            samples[hi].t,
            values(&samples[hi]),
        )
    };
    let w = (tau - t0) / (t1 - t0);
    Ok((
        v0.0 + w * (v1.0 - v0.0),
        v0.1 + w * (v1.1 - v0.1),
        v0.2 + w * (v1.2 - v0.2),
    ))
}

/// Closed-form blowdown target at time `t`, from the initial data.
fn blowdown_target(traj: &Trajectory, t: f64) -> RealFrameForm {
    let g0 = traj.initial.g;
    let (x0, y0) = (g0.x(), g0.y());
    match traj.geometry.id {
        GeometryId::Torus => to_real_frame(&g0),
        GeometryId::Hyperelliptic => RealFrameForm::from_array([0.5 * x0, 0.5 * y0, 0.0, 0.0, 0.0, 0.0]),
        GeometryId::Hopf => {
            let alpha = traj.geometry.alpha().expect("hopf carries alpha");
            RealFrameForm::from_array([
                0.5 * x0,
                0.5 * (1.0 + alpha * alpha) * x0,
                0.0,
                0.0,
                0.0,
                0.0,
            ])
        }
        GeometryId::ProperlyElliptic => {
            RealFrameForm::from_array([t, 0.5 * y0, 0.0, 0.0, 0.0, 0.0])
        }
        GeometryId::KodairaNil | GeometryId::KodairaNilSemidirect => {
            RealFrameForm::from_array([(y0 * t).sqrt(), 0.5 * y0, 0.0, 0.0, 0.0, 0.0])
        }
        GeometryId::InoueSolvable => {
            let (a, _) = traj.geometry.lambda_parts().expect("inoue carries (a, b)");
            RealFrameForm::from_array([0.5 * x0, 6.0 * a * a * t, 0.0, 0.0, 0.0, 0.0])
        }
        GeometryId::Sol1 | GeometryId::Sol1Prime => {
            RealFrameForm::from_array([2.0 * t, 0.5 * y0, 0.0, 0.0, 0.0, 0.0])
        }
    }
}

/// Evaluates the parabolic blowdown rescalings `s^{w_i + w_j - 1} omega(s t)`
/// over `t_grid` for each scale in `s_values` and compares the largest scale
/// against the closed-form limit.  The trajectory must reach
/// `max(s) * max(t)`.
pub fn blowdown_limit(
    traj: &Trajectory,
    s_values: &[f64],
    t_grid: &[f64],
) -> Result<BlowdownResult> {
    if s_values.is_empty() || t_grid.is_empty() {
        return Err(Error::InvalidOptions(
            "blowdown needs nonempty scale and time grids".into(),
        ));
    }
    let mut s_sorted = s_values.to_vec();
    s_sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite scales"));
    let mut grid = t_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    if s_sorted[0] <= 0.0 || grid[0] <= 0.0 {
        return Err(Error::InvalidOptions(
            "blowdown scales and times must be positive".into(),
        ));
    }
    let needed = s_sorted[s_sorted.len() - 1] * grid[grid.len() - 1];
    if traj.reached() < needed * (1.0 - 1e-12) {
        return Err(Error::TrajectoryTooShort {
            needed,
            reached: traj.reached(),
        });
    }

    let weights = blowdown_weights(traj.geometry.id);
    let mut slices = Vec::with_capacity(s_sorted.len());
    for &s in &s_sorted {
        let mut forms = Vec::with_capacity(grid.len());
        for &t in &grid {
            let (x, y, z) = coefficients_at(traj, s * t)?;
            let raw = real_frame_of(x, y, z).as_array();
            let mut rescaled = [0.0; 6];
            for (slot, (i, j)) in FRAME_PAIRS.iter().enumerate() {
                rescaled[slot] = s.powf(weights.w[*i] + weights.w[*j] - 1.0) * raw[slot];
            }
            forms.push(RealFrameForm::from_array(rescaled));
        }
        slices.push(RescaledSlice { s, forms });
    }

    let target: Vec<RealFrameForm> = grid.iter().map(|&t| blowdown_target(traj, t)).collect();
    let scale = target
        .iter()
        .map(RealFrameForm::max_abs)
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let limit = slices.last().expect("nonempty scales");
    let mut worst: f64 = 0.0;
    for (form, goal) in limit.forms.iter().zip(&target) {
        for (a, b) in form.as_array().iter().zip(goal.as_array()) {
            worst = worst.max((a - b).abs());
        }
    }

    Ok(BlowdownResult {
        geometry: traj.geometry.id,
        weights,
        t_grid: grid,
        slices,
        target,
        deviation: worst / scale,
    })
}

/// Expanding-soliton check on a blowdown limit: each coefficient must obey
/// `c(a t) = a^{1 - w_i - w_j} c(t)` for every pair `(t, a t)` present in the
/// time grid.  Returns the sup residual normalized by the largest limit
/// coefficient.
pub fn soliton_check(result: &BlowdownResult, scale: f64) -> Result<f64> {
    if !(scale.is_finite() && scale > 0.0 && scale != 1.0) {
        return Err(Error::InvalidParameter(format!(
            "soliton scale must be positive and != 1, got {scale}"
        )));
    }
    let limit = result.limit_slice();
    let norm = limit
        .forms
        .iter()
        .map(RealFrameForm::max_abs)
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let grid = &result.t_grid;
    let mut worst: f64 = 0.0;
    let mut pairs = 0usize;
    for (i, &t) in grid.iter().enumerate() {
        let scaled_t = scale * t;
        let Some(j) = grid
            .iter()
            .position(|&u| (u - scaled_t).abs() <= 1e-9 * scaled_t)
        else {
            continue;
        };
        pairs += 1;
        let from = limit.forms[i].as_array();
        let to = limit.forms[j].as_array();
        for (slot, (wi, wj)) in FRAME_PAIRS.iter().enumerate() {
            let power = 1.0 - result.weights.w[*wi] - result.weights.w[*wj];
            let expected = scale.powf(power) * from[slot];
            worst = worst.max((to[slot] - expected).abs());
        }
    }
    if pairs == 0 {
        return Err(Error::NoScalePairs { scale });
    }
    Ok(worst / norm)
}
