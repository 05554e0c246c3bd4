//! Measurement harness for the weak Harnack inequality and its consequences:
//! space-time boxes, Lᵖ means and grid infima, ratio sweeps over p,
//! oscillation decay at t = 0, maximum-principle checks and a weighted
//! Poincaré inequality verifier.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use std::sync::Arc;

use crate::error::{domain, Error, Result};
use crate::fracops::TimeGrid;
use crate::fundsol::{critical_exponent, linear_fit};
use crate::kernels::FractionalOrder;
use crate::solver::{
    checkerboard_coefficients, supersolution_residual, CoefficientField, ProblemSpec, ScalarField,
    SolveResult, SpaceGrid,
};

/// Values below `−NEGATIVITY_TOL` count as negative in sign scans.
pub const NEGATIVITY_TOL: f64 = 1e-10;
/// Required gap below the data maximum on interior cylinders.
pub const STRICT_MARGIN: f64 = 1e-8;
/// Relative slack on the weighted Poincaré inequality.
pub const POINCARE_SLACK: f64 = 0.02;

/// Parameters fixing the boxes `Q₋`, `Q₊` around `(t0, x0)` at scale `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarnackConfig {
    pub delta: f64,
    pub eta: f64,
    pub tau: f64,
    pub t0: f64,
    pub x0: [f64; 2],
    pub r: f64,
    pub alpha: FractionalOrder,
}

impl HarnackConfig {
    pub fn new(
        delta: f64,
        eta: f64,
        tau: f64,
        t0: f64,
        x0: [f64; 2],
        r: f64,
        alpha: FractionalOrder,
    ) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(domain(format!("delta must lie in (0, 1), got {delta}")));
        }
        if !(eta > 1.0) {
            return Err(domain(format!("eta must exceed 1, got {eta}")));
        }
        if !(tau > 0.0 && r > 0.0) {
            return Err(domain(format!("tau and r must be positive, got tau={tau}, r={r}")));
        }
        if !(t0 >= 0.0 && t0.is_finite()) {
            return Err(domain(format!("t0 must be nonnegative, got {t0}")));
        }
        Ok(Self { delta, eta, tau, t0, x0, r, alpha })
    }

    /// `r^{2/α}`.
    pub fn time_scale(&self) -> f64 {
        self.r.powf(2.0 / self.alpha.value())
    }

    /// `t0 + 2τ r^{2/α}`, the end of `Q₊`.
    pub fn horizon(&self) -> f64 {
        self.t0 + 2.0 * self.tau * self.time_scale()
    }

    /// Horizon within the solve and `B(x0, ηr)` inside the domain.
    pub fn check_against(&self, result: &SolveResult) -> Result<()> {
        let t_end = result.time().t_end();
        if self.horizon() > t_end * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!(
                "boxes end at t={} beyond the solve horizon {t_end}",
                self.horizon()
            )));
        }
        let outer = BoxRegion::new(0.0, self.horizon(), self.x0, self.eta * self.r)?;
        if !outer.ball_inside(result.space()) {
            return Err(Error::Precondition(format!(
                "B(x0, eta*r) with radius {} leaves the domain",
                self.eta * self.r
            )));
        }
        Ok(())
    }
}

/// Time interval times a ball (an interval in 1D).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxRegion {
    pub t_lower: f64,
    pub t_upper: f64,
    pub center: [f64; 2],
    pub radius: f64,
}

impl BoxRegion {
    pub fn new(t_lower: f64, t_upper: f64, center: [f64; 2], radius: f64) -> Result<Self> {
        if !(t_lower < t_upper) || !(radius > 0.0) {
            return Err(domain(format!(
                "box needs a < b and radius > 0, got ({t_lower}, {t_upper}) and {radius}"
            )));
        }
        Ok(Self { t_lower, t_upper, center, radius })
    }

    pub fn duration(&self) -> f64 {
        self.t_upper - self.t_lower
    }

    fn distance(&self, dim: usize, p: [f64; 2]) -> f64 {
        (0..dim).map(|d| (p[d] - self.center[d]).powi(2)).sum::<f64>().sqrt()
    }

    /// Closed-ball membership of a point.
    pub fn contains_point(&self, dim: usize, p: [f64; 2]) -> bool {
        self.distance(dim, p) <= self.radius * (1.0 + 1e-12)
    }

    /// The ball lies inside the grid rectangle.
    pub fn ball_inside(&self, space: &SpaceGrid) -> bool {
        space.axes().iter().enumerate().all(|(d, a)| {
            self.center[d] - self.radius >= a.lower - 1e-12 && self.center[d] + self.radius <= a.upper + 1e-12
        })
    }

    /// Image under `(t, x) ↦ (s^{2/α} t, s x)`.
    pub fn scaled(&self, s: f64, alpha: FractionalOrder) -> Self {
        let ts = s.powf(2.0 / alpha.value());
        Self {
            t_lower: ts * self.t_lower,
            t_upper: ts * self.t_upper,
            center: [s * self.center[0], s * self.center[1]],
            radius: s * self.radius,
        }
    }

    /// Interior cells whose centre lies in the ball.
    pub fn space_cells(&self, space: &SpaceGrid) -> Vec<usize> {
        space
            .interior()
            .into_iter()
            .filter(|&i| self.contains_point(space.dim(), space.point(i)))
            .collect()
    }

    /// Time cells `(t_{n−1}, t_n]` whose midpoint lies in `(a, b)`, listed by `n`.
    pub fn time_cells(&self, result: &SolveResult) -> Vec<usize> {
        let g = result.time();
        (1..=g.steps())
            .filter(|&n| {
                let mid = g.t(n) - 0.5 * g.dt();
                mid > self.t_lower && mid < self.t_upper
            })
            .collect()
    }

    /// Time levels `t_n ∈ [a, b]`.
    pub fn time_levels(&self, result: &SolveResult) -> Vec<usize> {
        let g = result.time();
        let tol = 1e-12 * g.t_end();
        (0..=g.steps())
            .filter(|&n| g.t(n) >= self.t_lower - tol && g.t(n) <= self.t_upper + tol)
            .collect()
    }
}

/// `Q₋ = (t0, t0 + δτ r^{2/α}) × B(x0, δr)` and
/// `Q₊ = (t0 + (2−δ)τ r^{2/α}, t0 + 2τ r^{2/α}) × B(x0, δr)`.
pub fn harnack_boxes(config: &HarnackConfig) -> (BoxRegion, BoxRegion) {
    let s = config.tau * config.time_scale();
    let rad = config.delta * config.r;
    let minus = BoxRegion {
        t_lower: config.t0,
        t_upper: config.t0 + config.delta * s,
        center: config.x0,
        radius: rad,
    };
    let plus = BoxRegion {
        t_lower: config.t0 + (2.0 - config.delta) * s,
        t_upper: config.t0 + 2.0 * s,
        center: config.x0,
        radius: rad,
    };
    (minus, plus)
}

/// An Lᵖ mean with the clipped measure it was taken over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpMean {
    pub value: f64,
    /// exact space-time measure of the selected cells
    pub measure: f64,
    pub cells: usize,
}

fn negativity(value: f64, n: usize, result: &SolveResult, idx: usize) -> Error {
    let p = result.space().point(idx);
    Error::Negativity { value, location: format!("t={}, x=({}, {})", result.time().t(n), p[0], p[1]) }
}

/// `(1/μ(Q) Σ_cells u^p μ(cell))^{1/p}` with `u` taken at the cell's upper time level.
pub fn lp_mean_detailed(result: &SolveResult, region: &BoxRegion, p: f64) -> Result<LpMean> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(domain(format!("p must be positive and finite, got {p}")));
    }
    let space = result.space();
    let xs = region.space_cells(space);
    let ts = region.time_cells(result);
    if xs.is_empty() || ts.is_empty() {
        return Err(Error::EmptyRegion(format!("{region:?} contains no grid cells")));
    }
    let mut sum = 0.0;
    for &n in &ts {
        let level = result.level(n);
        for &i in &xs {
            let v = level[i];
            if v < -NEGATIVITY_TOL {
                return Err(negativity(v, n, result, i));
            }
            sum += v.max(0.0).powf(p);
        }
    }
    let cells = xs.len() * ts.len();
    let measure = cells as f64 * space.cell_volume() * result.time().dt();
    Ok(LpMean { value: (sum / cells as f64).powf(1.0 / p), measure, cells })
}

pub fn lp_mean(result: &SolveResult, region: &BoxRegion, p: f64) -> Result<f64> {
    Ok(lp_mean_detailed(result, region, p)?.value)
}

/// Minimum of `u` over grid nodes in the region (cell centres in the ball, levels in `[a, b]`).
pub fn essinf(result: &SolveResult, region: &BoxRegion) -> Result<f64> {
    let xs = region.space_cells(result.space());
    let ts = region.time_levels(result);
    if xs.is_empty() || ts.is_empty() {
        return Err(Error::EmptyRegion(format!("{region:?} contains no grid nodes")));
    }
    let mut m = f64::INFINITY;
    for &n in &ts {
        let level = result.level(n);
        for &i in &xs {
            m = m.min(level[i]);
        }
    }
    Ok(m)
}

/// One row of a ratio sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct HarnackReport {
    pub p: f64,
    pub lp_mean: f64,
    pub essinf_plus: f64,
    /// `lp_mean / essinf_plus`, `+∞` when the infimum vanishes
    pub ratio: f64,
    pub grid: String,
    /// `p` below the critical exponent
    pub in_range: bool,
    pub degenerate: bool,
    pub measure_minus: f64,
}

/// Short label of the discretization.
pub fn grid_tag(result: &SolveResult) -> String {
    let h: Vec<String> = result.space().axes().iter().map(|a| format!("{}", a.h())).collect();
    format!("h={};dt={}", h.join("x"), result.time().dt())
}

/// Sign scan of `u` on `[0, horizon] × Ω`, the global positivity hypothesis.
pub fn check_nonnegative(result: &SolveResult, horizon: f64) -> Result<()> {
    let g = result.time();
    for n in 0..=g.steps() {
        if g.t(n) > horizon * (1.0 + 1e-12) {
            break;
        }
        for (i, &v) in result.level(n).iter().enumerate() {
            if v < -NEGATIVITY_TOL {
                return Err(negativity(v, n, result, i));
            }
        }
    }
    Ok(())
}

/// Ratio `Lᵖ mean over Q₋ / grid infimum over Q₊` for each `p`.
///
/// Checks the hypotheses first: boxes inside the solve, `u ≥ 0` from `t = 0`,
/// `u0 ≥ 0` on `B(x0, ηr)`, and a nonnegative weak-form residual. A vanishing
/// infimum yields reports with `ratio = +∞` and `degenerate = true`; see
/// [`ensure_nondegenerate`].
pub fn harnack_ratio_sweep(
    result: &SolveResult,
    config: &HarnackConfig,
    p_values: &[f64],
) -> Result<Vec<HarnackReport>> {
    if config.alpha != result.spec.alpha {
        return Err(Error::Precondition("config and solve use different orders".into()));
    }
    config.check_against(result)?;
    check_nonnegative(result, config.horizon())?;
    let space = result.space();
    let outer = BoxRegion::new(0.0, config.horizon(), config.x0, config.eta * config.r)?;
    for (k, &i) in space.interior().iter().enumerate() {
        if outer.contains_point(space.dim(), space.point(i)) && result.spec.u0[k] < -NEGATIVITY_TOL {
            return Err(negativity(result.spec.u0[k], 0, result, i));
        }
    }
    let residual = supersolution_residual(result);
    let tol = 1e-9 * (1.0 + result.max_abs());
    if residual < -tol {
        return Err(Error::Precondition(format!(
            "weak-form residual {residual:e} is negative: not a supersolution"
        )));
    }
    let (minus, plus) = harnack_boxes(config);
    let inf = essinf(result, &plus)?;
    let p_crit = critical_exponent(config.alpha, space.dim());
    let tag = grid_tag(result);
    p_values
        .iter()
        .map(|&p| {
            let mean = lp_mean_detailed(result, &minus, p)?;
            let degenerate = inf <= 0.0;
            Ok(HarnackReport {
                p,
                lp_mean: mean.value,
                essinf_plus: inf,
                ratio: if degenerate { f64::INFINITY } else { mean.value / inf },
                grid: tag.clone(),
                in_range: p < p_crit,
                degenerate,
                measure_minus: mean.measure,
            })
        })
        .collect()
}

/// Turns the `+∞` sentinel into a [`Error::Degenerate`].
pub fn ensure_nondegenerate(reports: &[HarnackReport]) -> Result<()> {
    match reports.iter().find(|r| r.degenerate) {
        Some(r) => Err(Error::Degenerate(format!("essinf over Q+ is {} (p={})", r.essinf_plus, r.p))),
        None => Ok(()),
    }
}

/// CSV `p,lp_mean,essinf,ratio,grid`.
pub fn write_harnack_csv<W: Write>(reports: &[HarnackReport], mut w: W) -> Result<()> {
    writeln!(w, "p,lp_mean,essinf,ratio,grid")?;
    for r in reports {
        writeln!(w, "{},{},{},{},{}", r.p, r.lp_mean, r.essinf_plus, r.ratio, r.grid)?;
    }
    Ok(())
}

/// Oscillation of `u` over nested cylinders `Q(x0, r) = (0, η r^{2/α}) × B(x0, r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillationReport {
    pub radii: Vec<f64>,
    pub osc: Vec<f64>,
    /// least-squares slope of `log osc` against `log r`
    pub slope: f64,
    pub intercept: f64,
    /// `max |u|` over the solve
    pub sup_norm: f64,
}

impl OscillationReport {
    /// `osc(r)` nonincreasing as `r` decreases.
    pub fn is_monotone(&self) -> bool {
        self.osc.windows(2).all(|w| w[1] <= w[0])
    }

    /// Fitted oscillation `exp(c) r^δ̂`.
    pub fn fitted(&self, r: f64) -> f64 {
        (self.intercept + self.slope * r.ln()).exp()
    }
}

fn cylinder(x0: [f64; 2], r: f64, eta: f64, alpha: FractionalOrder) -> Result<BoxRegion> {
    BoxRegion::new(0.0, eta * r.powf(2.0 / alpha.value()), x0, r)
}

/// `max |u|` over the nodes of `Q(x0, r)` with `t > 0`.
pub fn cylinder_sup(result: &SolveResult, x0: [f64; 2], r: f64, eta: f64) -> Result<f64> {
    let q = cylinder(x0, r, eta, result.spec.alpha)?;
    let xs = q.space_cells(result.space());
    let ts: Vec<usize> = q.time_levels(result).into_iter().filter(|&n| n > 0).collect();
    if xs.is_empty() || ts.is_empty() {
        return Err(Error::EmptyRegion(format!("{q:?} contains no grid nodes")));
    }
    Ok(ts
        .iter()
        .flat_map(|&n| xs.iter().map(move |&i| result.level(n)[i].abs()))
        .fold(0.0, f64::max))
}

fn cylinder_osc(result: &SolveResult, q: &BoxRegion) -> Result<f64> {
    let xs = q.space_cells(result.space());
    let ts: Vec<usize> = q.time_levels(result).into_iter().filter(|&n| n > 0).collect();
    if xs.is_empty() || ts.is_empty() {
        return Err(Error::EmptyRegion(format!("{q:?} contains no grid nodes")));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &n in &ts {
        for &i in &xs {
            let v = result.level(n)[i];
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    Ok(hi - lo)
}

/// Fits `osc_{Q(x0, r)} u ≈ C r^δ̂` over a decreasing list of radii.
pub fn oscillation_decay(
    result: &SolveResult,
    x0: [f64; 2],
    r_list: &[f64],
    eta: f64,
) -> Result<OscillationReport> {
    if result.spec.u0.iter().any(|v| v.abs() > 1e-14) {
        return Err(Error::Precondition("oscillation decay needs u0 = 0".into()));
    }
    if r_list.len() < 2 || r_list.windows(2).any(|w| !(w[1] < w[0])) || r_list[r_list.len() - 1] <= 0.0 {
        return Err(domain("radii must be positive and strictly decreasing"));
    }
    if !(eta > 0.0) {
        return Err(domain(format!("eta must be positive, got {eta}")));
    }
    let alpha = result.spec.alpha;
    let mut osc = Vec::with_capacity(r_list.len());
    for &r in r_list {
        let q = cylinder(x0, r, eta, alpha)?;
        if !q.ball_inside(result.space()) || q.t_upper > result.time().t_end() * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!("cylinder of radius {r} leaves the solve")));
        }
        osc.push(cylinder_osc(result, &q)?);
    }
    let pts: Vec<(f64, f64)> = r_list
        .iter()
        .zip(&osc)
        .filter(|(_, o)| **o > 0.0)
        .map(|(r, o)| (r.ln(), o.ln()))
        .collect();
    if pts.is_empty() {
        return Err(Error::Degenerate("oscillation vanishes on every cylinder".into()));
    }
    let (slope, intercept) = if pts.len() >= 2 { linear_fit(&pts) } else { (0.0, pts[0].1) };
    Ok(OscillationReport {
        radii: r_list.to_vec(),
        osc,
        slope,
        intercept,
        sup_norm: result.max_abs(),
    })
}

/// Continuity at `t = 0` judged from an oscillation fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityReport {
    pub decay: OscillationReport,
    /// `max |u|` over the smallest cylinder
    pub smallest_sup: f64,
    /// `‖u‖_∞ (r_min/r_0)^δ̂`
    pub extrapolated: f64,
    pub pass: bool,
}

/// Minimum fitted exponent accepted by [`continuity_check`].
pub const MIN_DECAY_SLOPE: f64 = 0.05;

/// Decay fit plus the check that `u` on the smallest cylinder stays within
/// 10% of the Hölder extrapolation `‖u‖_∞ (r/r_0)^δ̂`.
pub fn continuity_check(
    result: &SolveResult,
    x0: [f64; 2],
    r_list: &[f64],
    eta: f64,
) -> Result<ContinuityReport> {
    let decay = oscillation_decay(result, x0, r_list, eta)?;
    let (r0, rmin) = (r_list[0], r_list[r_list.len() - 1]);
    let smallest_sup = cylinder_sup(result, x0, rmin, eta)?;
    let extrapolated = decay.sup_norm * (rmin / r0).powf(decay.slope);
    let pass = decay.slope > MIN_DECAY_SLOPE && decay.is_monotone() && smallest_sup <= 1.1 * extrapolated;
    Ok(ContinuityReport { decay, smallest_sup, extrapolated, pass })
}

/// CSV `r,osc`.
pub fn write_oscillation_csv<W: Write>(report: &OscillationReport, mut w: W) -> Result<()> {
    writeln!(w, "r,osc")?;
    for (r, o) in report.radii.iter().zip(&report.osc) {
        writeln!(w, "{r},{o}")?;
    }
    Ok(())
}

/// Outcome of [`max_principle_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct MaxPrincipleReport {
    pub data_min: f64,
    pub data_max: f64,
    pub u_min: f64,
    pub u_max: f64,
    /// largest excursion outside `[data_min, data_max]` (≤ 0 when inside)
    pub worst_violation: f64,
    /// `(t, x, y)` of the worst excursion
    pub worst_location: [f64; 3],
    /// data are constant: the bounds are attained and no margin is expected
    pub constant: bool,
    /// `data_max − max u` over the interior cylinder `[T/4, T] × (inner half of Ω)`
    pub interior_margin: f64,
}

impl MaxPrincipleReport {
    pub fn bounds_hold(&self, tol: f64) -> bool {
        self.worst_violation <= tol
    }

    /// Bounds within `tol` and, unless constant, a strict interior gap.
    pub fn passes(&self, tol: f64) -> bool {
        self.bounds_hold(tol) && (self.constant || self.interior_margin > STRICT_MARGIN)
    }
}

/// Weak maximum principle `min(data) ≤ u ≤ max(data)` plus the interior gap.
pub fn max_principle_check(result: &SolveResult) -> Result<MaxPrincipleReport> {
    let space = result.space();
    let g = result.time();
    for n in 0..=g.steps() {
        for i in space.interior() {
            let f = (result.spec.forcing)(g.t(n), space.point(i));
            if f != 0.0 {
                return Err(Error::Precondition(format!("forcing must vanish, found {f} at t={}", g.t(n))));
            }
        }
    }
    let (lo, hi) = result.data_bounds();
    let mut report = MaxPrincipleReport {
        data_min: lo,
        data_max: hi,
        u_min: f64::INFINITY,
        u_max: f64::NEG_INFINITY,
        worst_violation: f64::NEG_INFINITY,
        worst_location: [0.0; 3],
        constant: hi - lo <= 1e-14 * hi.abs().max(1.0),
        interior_margin: 0.0,
    };
    for n in 0..=g.steps() {
        for (i, &v) in result.level(n).iter().enumerate() {
            report.u_min = report.u_min.min(v);
            report.u_max = report.u_max.max(v);
            let excess = (lo - v).max(v - hi);
            if excess > report.worst_violation {
                let p = space.point(i);
                report.worst_violation = excess;
                report.worst_location = [g.t(n), p[0], p[1]];
            }
        }
    }
    if !report.constant {
        let inner: Vec<usize> = space
            .interior()
            .into_iter()
            .filter(|&i| {
                let p = space.point(i);
                space.axes().iter().enumerate().all(|(d, a)| {
                    let q = 0.25 * (a.upper - a.lower);
                    p[d] >= a.lower + q && p[d] <= a.upper - q
                })
            })
            .collect();
        let start = (g.steps() / 4).max(1);
        let top = (start..=g.steps())
            .flat_map(|n| inner.iter().map(move |&i| result.level(n)[i]))
            .fold(f64::NEG_INFINITY, f64::max);
        report.interior_margin = hi - top;
    }
    Ok(report)
}

/// Weight for the Poincaré check: values on `ℝ^N` with known support geometry.
pub trait Weight {
    fn value(&self, x: [f64; 2]) -> f64;
    /// Lebesgue measure of the support.
    fn support_measure(&self, dim: usize) -> f64;
    /// Diameter of the support.
    fn diameter(&self) -> f64;
}

/// `φ(x) = clamp(s(1 − |x − c|/R), 0, 1)`: superlevel sets are balls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampedCone {
    pub center: [f64; 2],
    pub radius: f64,
    /// slope factor `s ≥ 1`; `s = 1` is the plain cone
    pub height: f64,
}

impl ClampedCone {
    pub fn new(center: [f64; 2], radius: f64, height: f64) -> Result<Self> {
        if !(radius > 0.0 && height >= 1.0) {
            return Err(Error::InvalidWeight(format!(
                "cone needs radius > 0 and height >= 1, got {radius}, {height}"
            )));
        }
        Ok(Self { center, radius, height })
    }
}

impl Weight for ClampedCone {
    fn value(&self, x: [f64; 2]) -> f64 {
        let d = ((x[0] - self.center[0]).powi(2) + (x[1] - self.center[1]).powi(2)).sqrt();
        (self.height * (1.0 - d / self.radius)).clamp(0.0, 1.0)
    }

    fn support_measure(&self, dim: usize) -> f64 {
        if dim == 1 {
            2.0 * self.radius
        } else {
            std::f64::consts::PI * self.radius * self.radius
        }
    }

    fn diameter(&self) -> f64 {
        2.0 * self.radius
    }
}

/// Weight given by a closure, with the support data supplied by the caller.
pub struct FnWeight<F> {
    pub f: F,
    pub measure: f64,
    pub diameter: f64,
}

impl<F: Fn([f64; 2]) -> f64> Weight for FnWeight<F> {
    fn value(&self, x: [f64; 2]) -> f64 {
        (self.f)(x)
    }

    fn support_measure(&self, _dim: usize) -> f64 {
        self.measure
    }

    fn diameter(&self) -> f64 {
        self.diameter
    }
}

/// Both sides of the weighted Poincaré inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareReport {
    /// `∫ (u − u_φ)² φ`
    pub lhs: f64,
    /// `2 d² μ(supp φ)/‖φ‖₁ · ∫ |Du|² φ`
    pub rhs: f64,
    pub pass: bool,
}

/// Seed for the superlevel-set convexity probe.
pub const CONVEXITY_SEED: u64 = 0xc0ffee;
const CONVEXITY_PROBES: usize = 4000;

fn check_quasiconcave(space: &SpaceGrid, phi: &[f64], weight: &dyn Weight) -> Result<()> {
    // superlevel sets are convex iff φ(λx + (1−λ)y) ≥ min(φ(x), φ(y))
    let cells = space.interior();
    let support: Vec<usize> = (0..cells.len()).filter(|&k| phi[k] > 0.0).collect();
    if support.len() < 2 {
        return Ok(());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(CONVEXITY_SEED);
    for _ in 0..CONVEXITY_PROBES {
        let a = support[rng.gen_range(0..support.len())];
        let b = support[rng.gen_range(0..support.len())];
        let lam: f64 = rng.gen();
        let (pa, pb) = (space.point(cells[a]), space.point(cells[b]));
        let m = [lam * pa[0] + (1.0 - lam) * pb[0], lam * pa[1] + (1.0 - lam) * pb[1]];
        let floor = phi[a].min(phi[b]);
        if weight.value(m) < floor - 1e-12 {
            return Err(Error::InvalidWeight(format!(
                "superlevel set {{phi >= {floor}}} is not convex near ({}, {})",
                m[0], m[1]
            )));
        }
    }
    Ok(())
}

/// Evaluates both sides by the midpoint rule on the interior cells of `space`.
///
/// `u` is given at cell centres (interior order). Gradients use central
/// differences, one-sided at the edges of the grid.
pub fn weighted_poincare_check(space: &SpaceGrid, u: &[f64], weight: &dyn Weight) -> Result<PoincareReport> {
    let cells = space.interior();
    if u.len() != cells.len() {
        return Err(Error::GridMismatch(format!("{} values for {} cells", u.len(), cells.len())));
    }
    let phi: Vec<f64> = cells.iter().map(|&i| weight.value(space.point(i))).collect();
    if phi.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidWeight("weight must take values in [0, 1]".into()));
    }
    check_quasiconcave(space, &phi, weight)?;
    let dim = space.dim();
    // support must stay inside the grid so the boundary cells carry no weight
    for (k, &i) in cells.iter().enumerate() {
        let (ix, iy) = space.split(i);
        let edge = ix == 1 || ix == space.axis(0).cells || (dim == 2 && (iy == 1 || iy == space.axis(1).cells));
        if edge && phi[k] > 0.0 {
            return Err(Error::InvalidWeight("weight support touches the grid edge".into()));
        }
    }
    let vol = space.cell_volume();
    let mass: f64 = phi.iter().sum::<f64>() * vol;
    if !(mass > 0.0) {
        return Err(Error::InvalidWeight("weight vanishes on the grid".into()));
    }
    let mean = phi.iter().zip(u).map(|(p, v)| p * v).sum::<f64>() * vol / mass;
    let lhs = phi.iter().zip(u).map(|(p, v)| p * (v - mean).powi(2)).sum::<f64>() * vol;

    let ncols = if dim == 2 { space.axis(1).cells } else { 1 };
    let at = |ix: usize, iy: usize| u[(ix - 1) * ncols + (iy - 1)];
    let mut energy = 0.0;
    for (k, &i) in cells.iter().enumerate() {
        if phi[k] == 0.0 {
            continue;
        }
        let (ix, iy) = space.split(i);
        let iy = if dim == 1 { 1 } else { iy };
        let mut g2 = 0.0;
        for d in 0..dim {
            let a = space.axis(d);
            let (j, n) = if d == 0 { (ix, a.cells) } else { (iy, a.cells) };
            let val = |jj: usize| if d == 0 { at(jj, iy) } else { at(ix, jj) };
            let deriv = if j == 1 {
                (val(2) - val(1)) / a.h()
            } else if j == n {
                (val(n) - val(n - 1)) / a.h()
            } else {
                (val(j + 1) - val(j - 1)) / (2.0 * a.h())
            };
            g2 += deriv * deriv;
        }
        energy += phi[k] * g2;
    }
    energy *= vol;
    let d = weight.diameter();
    let rhs = 2.0 * d * d * weight.support_measure(dim) / mass * energy;
    let floor = 1e-12 * phi.iter().zip(u).map(|(p, v)| p * v * v).sum::<f64>() * vol;
    Ok(PoincareReport { lhs, rhs, pass: lhs <= rhs * (1.0 + POINCARE_SLACK) + floor })
}

/// Nonnegative `cos²` bump of radius `r` around `x0`, at most 1.
pub fn bump(x0: [f64; 2], r: f64, dim: usize) -> impl Fn([f64; 2]) -> f64 {
    move |p| {
        let d = (0..dim).map(|k| (p[k] - x0[k]).powi(2)).sum::<f64>().sqrt();
        if d < r {
            (std::f64::consts::FRAC_PI_2 * d / r).cos().powi(2)
        } else {
            0.0
        }
    }
}

/// Checkerboard Harnack benchmark: `Ω = (lower, upper)^N`, blocks of physical
/// width `block` taking the values `low`/`high`, `u0` a bump of radius `r`
/// at `x0`, `f = 0`, zero boundary data, solved up to the box horizon.
#[allow(clippy::too_many_arguments)]
pub fn checkerboard_benchmark(
    config: &HarnackConfig,
    dim: usize,
    domain_bounds: (f64, f64),
    cells: usize,
    steps: usize,
    block: f64,
    low: f64,
    high: f64,
) -> Result<ProblemSpec> {
    let (lo, hi) = domain_bounds;
    let space = match dim {
        1 => SpaceGrid::new_1d(lo, hi, cells)?,
        2 => SpaceGrid::new_2d((lo, hi, cells), (lo, hi, cells))?,
        _ => return Err(domain(format!("benchmark dimension must be 1 or 2, got {dim}"))),
    };
    let h = space.axis(0).h();
    let period = (block / h).round();
    if period < 1.0 || ((block / h) - period).abs() > 1e-9 * period {
        return Err(domain(format!("block width {block} is not a multiple of the cell size {h}")));
    }
    let coeff = checkerboard_coefficients(&space, period as usize, low, high, None)?;
    let u0 = ProblemSpec::u0_from_fn(&space, bump(config.x0, config.r, dim));
    let time = TimeGrid::covering(config.horizon(), steps)?;
    Ok(ProblemSpec::new(config.alpha, space, time, u0, coeff))
}

/// Ramp-boundary benchmark for continuity at `t = 0`: `Ω = (lower, upper)`,
/// `A ≡ 1`, `u0 = 0`, `f = 0`, data `min(t/ramp, 1)` at the upper endpoint and
/// 0 at the lower one, solved on `[0, t_end]`.
pub fn ramp_benchmark(
    alpha: FractionalOrder,
    domain_bounds: (f64, f64),
    cells: usize,
    t_end: f64,
    steps: usize,
    ramp: f64,
) -> Result<ProblemSpec> {
    if !(ramp > 0.0) {
        return Err(domain(format!("ramp time must be positive, got {ramp}")));
    }
    let (lo, hi) = domain_bounds;
    let space = SpaceGrid::new_1d(lo, hi, cells)?;
    let coeff = CoefficientField::constant(&space, 1.0)?;
    let u0 = vec![0.0; space.cells()];
    let edge = hi - 1e-12 * (hi - lo);
    let g: ScalarField = Arc::new(move |t, p| if p[0] >= edge { (t / ramp).min(1.0) } else { 0.0 });
    Ok(ProblemSpec::new(alpha, space, TimeGrid::covering(t_end, steps)?, u0, coeff).with_boundary(g))
}

/// A randomized problem with `f = 0` for maximum-principle sweeps: random
/// order, grid, horizon, time-flipping checkerboard coefficients and data.
/// With `nonnegative` the data are drawn from `[0, 3)`.
pub fn random_max_principle_problem(seed: u64, two_d: bool, nonnegative: bool) -> Result<ProblemSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = if two_d {
        SpaceGrid::new_2d((0.0, 1.0, rng.gen_range(4..10)), (0.0, 1.0, rng.gen_range(4..10)))?
    } else {
        SpaceGrid::new_1d(0.0, 1.0, rng.gen_range(4..40))?
    };
    let time = TimeGrid::covering(rng.gen_range(0.1..2.0), rng.gen_range(2..30))?;
    let low = rng.gen_range(0.1..2.0);
    let high = low * rng.gen_range(1.0..10.0);
    let coeff = checkerboard_coefficients(&space, rng.gen_range(1..4), low, high, Some(rng.gen_range(1..5)))?;
    let floor = if nonnegative { 0.0 } else { -1.0 };
    let u0: Vec<f64> = (0..space.cells()).map(|_| rng.gen_range(floor..3.0)).collect();
    let g: f64 = rng.gen_range(floor..3.0);
    let slope: f64 = rng.gen_range(0.0..0.5);
    let alpha = FractionalOrder::new(rng.gen_range(0.05..0.95))?;
    let boundary: ScalarField = Arc::new(move |t, p| g * (1.0 + t).sin().abs() + slope * p[0]);
    Ok(ProblemSpec::new(alpha, space, time, u0, coeff).with_boundary(boundary))
}
