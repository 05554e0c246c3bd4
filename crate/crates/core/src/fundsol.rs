//! Whole-space fundamental solution `Y` of `∂ₜᵅu − Δu = f`, the exponent
//! algebra around the critical exponent, and the divergence experiment for `Y^p`.
//!
//! `Y` is computed from its Fourier symbol `S(ξ) = t^{α−1} E_{α,α}(−|ξ|² t^α)`
//! by a radial inverse transform:
//!
//! * N = 1: `(1/π) ∫₀^∞ cos(ξr) S dξ`
//! * N = 2: `(1/2π) ∫₀^∞ J₀(ξr) ξ S dξ`
//! * N = 3: `(1/(2π² r)) ∫₀^∞ sin(ξr) ξ S dξ`
//!
//! For large ξ the symbol decays like `ξ^{−4} t^{−1−α}/|Γ(−α)|`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use crate::error::{domain, Error, Result};
use crate::kernels::{mittag_leffler, FractionalOrder, MittagLefflerParams};
use crate::quadrature::GaussLegendre;
use crate::special::{bessel_j0, rgamma, CompensatedSum};

/// κ̃ = (2 + Nα)/(2 + Nα − 2α). At α = 1 this is 1 + 2/N.
pub fn critical_exponent(alpha: FractionalOrder, n: usize) -> f64 {
    let a = alpha.value();
    let nf = n as f64;
    (2.0 + nf * a) / (2.0 + nf * a - 2.0 * a)
}

/// Integrability exponent for [`kappa`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

/// κ_p = (2p + N(p−1))/(2 + N(p−1)); κ_∞ = 1 + 2/N.
pub fn kappa(p: Exponent, n: usize) -> Result<f64> {
    let nf = n as f64;
    match p {
        Exponent::Infinite => Ok(1.0 + 2.0 / nf),
        Exponent::Finite(p) if p > 1.0 => Ok((2.0 * p + nf * (p - 1.0)) / (2.0 + nf * (p - 1.0))),
        Exponent::Finite(p) => Err(domain(format!("kappa needs p > 1, got {p}"))),
    }
}

/// α(N − Np)/2 + (α − 1)p, the power of t in `∫_{B} Y(t, ·)^p`.
pub fn divergence_exponent(alpha: FractionalOrder, n: usize, p: f64) -> f64 {
    let a = alpha.value();
    let nf = n as f64;
    a * (nf - nf * p) / 2.0 + (a - 1.0) * p
}

/// Summary of the exponent algebra at one `(α, N, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentReport {
    pub alpha: f64,
    pub n: usize,
    pub p: f64,
    pub critical_p: f64,
    pub divergence_exponent: f64,
    pub diverges: bool,
}

impl ExponentReport {
    pub fn new(alpha: FractionalOrder, n: usize, p: f64) -> Self {
        let e = divergence_exponent(alpha, n, p);
        Self {
            alpha: alpha.value(),
            n,
            p,
            critical_p: critical_exponent(alpha, n),
            divergence_exponent: e,
            // the borderline e = −1 diverges logarithmically
            diverges: e <= -1.0 + 1e-12,
        }
    }
}

/// Weighted head-region samples keyed by `t.to_bits()`.
type HeadCache = Arc<Mutex<HashMap<u64, Arc<Vec<(f64, f64)>>>>>;

/// Evaluates `Y(t, x)` by panel quadrature of the radial Fourier integral.
#[derive(Debug, Clone)]
pub struct FundamentalSolutionEvaluator {
    alpha: FractionalOrder,
    dim: usize,
    rule: GaussLegendre,
    params: MittagLefflerParams,
    head_cache: HeadCache,
    /// number of cutoff doublings before giving up
    pub max_doublings: u32,
}

/// The head `[0, HEAD_EXTENT·t^{−α/2}]` uses fixed panels of width
/// `HEAD_WIDTH·t^{−α/2}`; its weighted symbol values are cached per `t`.
const HEAD_EXTENT: f64 = 8.0;
const HEAD_WIDTH: f64 = 0.25;
const HEAD_CACHE_LIMIT: usize = 512;

/// Tail-bound target relative to `max(|Y|, natural scale)` that drives cutoff growth.
pub const TAIL_TARGET: f64 = 1e-10;
/// Largest accepted tail bound, same normalization.
pub const TAIL_TOLERANCE: f64 = 1e-8;

/// One evaluation with its quadrature diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct YValue {
    pub value: f64,
    pub cutoff: f64,
    pub tail_bound: f64,
}

impl FundamentalSolutionEvaluator {
    /// `α = 1` is accepted and gives the heat kernel.
    pub fn new(alpha: FractionalOrder, dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(domain(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        let a = alpha.value();
        Ok(Self {
            alpha,
            dim,
            rule: GaussLegendre::new(16),
            params: MittagLefflerParams::new(a, a)?,
            head_cache: Arc::default(),
            max_doublings: 14,
        })
    }

    pub fn alpha(&self) -> FractionalOrder {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `t^{α−1} E_{α,α}(−ξ² t^α)`.
    pub fn symbol(&self, t: f64, xi: f64) -> Result<f64> {
        let a = self.alpha.value();
        Ok(t.powf(a - 1.0) * mittag_leffler(self.params, -xi * xi * t.powf(a))?)
    }

    /// Size of `Y(t, ·)` near the origin: `t^{α−1−αN/2}`.
    pub fn natural_scale(&self, t: f64) -> f64 {
        let a = self.alpha.value();
        t.powf(a - 1.0 - a * self.dim as f64 / 2.0)
    }

    fn weight(&self, xi: f64, r: f64) -> f64 {
        match self.dim {
            1 => (xi * r).cos() / PI,
            2 => bessel_j0(xi * r) * xi / (2.0 * PI),
            _ => {
                if r == 0.0 {
                    xi * xi / (2.0 * PI * PI)
                } else {
                    (xi * r).sin() * xi / (2.0 * PI * PI * r)
                }
            }
        }
    }

    /// Envelope of the integrand: symbol times the non-oscillating factor.
    fn envelope(&self, t: f64, xi: f64, r: f64) -> Result<f64> {
        let s = self.symbol(t, xi)?;
        Ok(match self.dim {
            1 => s / PI,
            2 => s * xi / (2.0 * PI),
            _ => {
                if r == 0.0 {
                    s * xi * xi / (2.0 * PI * PI)
                } else {
                    s * xi / (2.0 * PI * PI * r)
                }
            }
        })
    }

    /// Coefficient `C` of the algebraic tail `S ≈ C ξ^{−4}`.
    fn tail_coefficient(&self, t: f64) -> f64 {
        let a = self.alpha.value();
        rgamma(-a).abs() * t.powf(-1.0 - a)
    }

    fn tail(&self, t: f64, r: f64, cut: f64) -> Result<(f64, f64)> {
        let f = self.envelope(t, cut, r)?;
        let nf = self.dim as f64;
        if r > 0.0 {
            let bound = match self.dim {
                // second mean value theorem on a decreasing envelope
                1 | 3 => 2.0 * f.abs() / r,
                _ => 4.0 * f.abs() * (2.0 / (PI * cut * r)).sqrt().min(1.0) / r,
            };
            return Ok((0.0, bound));
        }
        // r = 0: add the algebraic tail analytically
        let c_n = match self.dim {
            1 => 1.0 / PI,
            2 => 1.0 / (2.0 * PI),
            _ => 1.0 / (2.0 * PI * PI),
        };
        let model = c_n * self.tail_coefficient(t) * cut.powf(nf - 4.0) / (4.0 - nf);
        let observed = f.abs() * cut / (4.0 - nf);
        let a = self.alpha.value();
        let g = rgamma(-a);
        let ratio = if g == 0.0 { 0.0 } else { (rgamma(-2.0 * a) / g).abs() };
        let next = model.abs() / (cut * cut * t.powf(a)) * (1.0 + ratio);
        Ok((model, (observed - model).abs() + next))
    }

    /// Quadrature nodes on the head with `weight × symbol` folded in.
    fn head(&self, t: f64) -> Result<Arc<Vec<(f64, f64)>>> {
        let key = t.to_bits();
        if let Some(h) = self.head_cache.lock().expect("head cache poisoned").get(&key) {
            return Ok(h.clone());
        }
        let xi_c = t.powf(-self.alpha.value() / 2.0);
        let w = HEAD_WIDTH * xi_c;
        let panels = (HEAD_EXTENT / HEAD_WIDTH).round() as usize;
        let mut nodes = Vec::with_capacity(panels * 16);
        for k in 0..panels {
            for (node, wt) in self.rule.mapped(k as f64 * w, (k + 1) as f64 * w) {
                nodes.push((node, wt * self.symbol(t, node)?));
            }
        }
        let nodes = Arc::new(nodes);
        let mut cache = self.head_cache.lock().expect("head cache poisoned");
        if cache.len() >= HEAD_CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, nodes.clone());
        Ok(nodes)
    }

    /// `Y(t, x)` for `|x| = r` with quadrature diagnostics.
    pub fn eval_radial_detailed(&self, t: f64, r: f64) -> Result<YValue> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(domain(format!("eval_Y needs t > 0, got {t}")));
        }
        let r = r.abs();
        let a = self.alpha.value();
        let xi_c = t.powf(-a / 2.0);
        // panels grow with ξ where the symbol is a smooth power, capped at one period
        let cap = if r > 0.0 { 2.0 * PI / r } else { f64::INFINITY };
        let width = |xi: f64| (0.25 * xi).max(0.5 * xi_c).min(cap).max(1e-3 * xi_c);
        let scale = self.natural_scale(t);
        let mut sum = CompensatedSum::new();
        let head_end = HEAD_EXTENT * xi_c;
        if cap >= HEAD_WIDTH * xi_c {
            for &(node, ws) in self.head(t)?.iter() {
                sum.add(ws * self.weight(node, r));
            }
        } else {
            let pieces = (head_end / cap).ceil() as usize;
            let w = head_end / pieces as f64;
            for k in 0..pieces {
                for (node, wt) in self.rule.mapped(k as f64 * w, (k + 1) as f64 * w) {
                    sum.add(wt * self.symbol(t, node)? * self.weight(node, r));
                }
            }
        }
        let mut xi = head_end;
        let mut cut = 16.0 * xi_c;
        let mut doublings = 0;
        loop {
            while xi < cut {
                let hi = xi + width(xi);
                let mut panel = 0.0;
                for (node, w) in self.rule.mapped(xi, hi) {
                    panel += w * self.symbol(t, node)? * self.weight(node, r);
                }
                sum.add(panel);
                xi = hi;
            }
            let (tail, bound) = self.tail(t, r, xi)?;
            let value = sum.value() + tail;
            let norm = value.abs().max(scale);
            if bound <= TAIL_TARGET * norm {
                return Ok(YValue { value, cutoff: xi, tail_bound: bound });
            }
            if doublings >= self.max_doublings {
                if bound <= TAIL_TOLERANCE * norm {
                    return Ok(YValue { value, cutoff: xi, tail_bound: bound });
                }
                return Err(Error::QuadratureTail { bound, tolerance: TAIL_TOLERANCE * norm });
            }
            cut *= 2.0;
            doublings += 1;
        }
    }

    pub fn eval_radial(&self, t: f64, r: f64) -> Result<f64> {
        Ok(self.eval_radial_detailed(t, r)?.value)
    }

    /// `Y(t, x)`; `x` has `dim` components.
    pub fn eval(&self, t: f64, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(domain(format!("point has {} components, expected {}", x.len(), self.dim)));
        }
        self.eval_radial(t, x.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// Self-similar profile `Φ(ρ) = Y(1, ρ)`, so `Y(t, x) = t^{α−1−αN/2} Φ(|x| t^{−α/2})`.
    pub fn profile(&self, rho: f64) -> Result<f64> {
        self.eval_radial(1.0, rho)
    }
}

/// `Y(t, x)` with the given evaluator.
pub fn eval_y(evaluator: &FundamentalSolutionEvaluator, t: f64, x: &[f64]) -> Result<f64> {
    evaluator.eval(t, x)
}

/// Surface measure of the unit sphere, `ω_N` for N = 1, 2, 3.
pub fn sphere_measure(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

/// Growth regime of `I(ε)` predicted by the divergence exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Convergent,
    Logarithmic,
    Power,
}

/// Range of the divergence exponent treated as the borderline `−1`.
pub const BORDERLINE_WIDTH: f64 = 1e-3;

/// Output of [`optimality_experiment`].
#[derive(Debug, Clone)]
pub struct OptimalityReport {
    pub exponents: ExponentReport,
    pub regime: Regime,
    /// `(ε, I(ε))` in the order of the input list
    pub points: Vec<(f64, f64)>,
    /// relative change of I over the last decade of ε
    pub last_decade_change: f64,
    /// least-squares slope of `I` against `log(1/ε)` and its relative RMS residual
    pub log_slope: f64,
    pub log_fit_residual: f64,
    /// least-squares slope of `log I` against `log(1/ε)`
    pub power_slope: f64,
    /// `−(1 + e)`, the predicted power slope
    pub predicted_power_slope: f64,
    /// `I(ε) · ε^{1+e}` should tend to this when the exponent is below −1
    pub profile_mass: f64,
}

impl OptimalityReport {
    /// The criterion matching the regime: stabilization below 2%,
    /// logarithmic fit residual below 5%, or power slope within 0.05.
    pub fn passes(&self) -> bool {
        match self.regime {
            Regime::Convergent => self.last_decade_change < 0.02,
            Regime::Logarithmic => self.log_fit_residual < 0.05,
            Regime::Power => (self.power_slope - self.predicted_power_slope).abs() <= 0.05,
        }
    }
}

/// Profile values below this are treated as zero when truncating `F`.
const PROFILE_FLOOR: f64 = 1e-9;

/// Cumulative `F(R) = ∫₀^R ρ^{N−1} max(Φ, 0)^p dρ` on a uniform panel grid,
/// constant beyond the point where the profile is negligible.
struct ProfileIntegral {
    h: f64,
    cumulative: Vec<f64>,
}

impl ProfileIntegral {
    fn build(
        ev: &FundamentalSolutionEvaluator,
        p: f64,
        profile: &mut Vec<(f64, f64)>,
        h: f64,
    ) -> Result<Self> {
        let rule = GaussLegendre::new(6);
        let nm1 = ev.dim as i32 - 1;
        let mut cumulative = vec![0.0];
        let mut k = 0usize;
        let mut quiet = 0;
        loop {
            let a = k as f64 * h;
            let nodes: Vec<(f64, f64)> = rule.mapped(a, a + h).collect();
            let mut s = 0.0;
            let mut phi_max = 0.0f64;
            for (j, (rho, w)) in nodes.iter().enumerate() {
                let idx = k * 6 + j;
                let phi = if idx < profile.len() {
                    profile[idx].1
                } else {
                    let v = ev.profile(*rho)?;
                    profile.push((*rho, v));
                    v
                };
                let f = rho.powi(nm1) * phi.max(0.0).powf(p);
                phi_max = phi_max.max(phi.abs());
                s += w * f;
            }
            let total = cumulative[k] + s;
            cumulative.push(total);
            k += 1;
            // the profile is O(1) at the origin; below the floor it is quadrature noise
            if phi_max <= PROFILE_FLOOR {
                quiet += 1;
                if quiet >= 8 {
                    break;
                }
            } else {
                quiet = 0;
            }
            if k > 20_000 {
                return Err(Error::Accuracy("profile integral did not saturate".into()));
            }
        }
        Ok(Self { h, cumulative })
    }

    fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Cubic Lagrange interpolation of the cumulative integral.
    fn at(&self, r: f64) -> f64 {
        let n = self.cumulative.len() - 1;
        let x = r / self.h;
        if x >= n as f64 {
            return self.total();
        }
        let k = (x.floor() as usize).clamp(1, n.saturating_sub(2).max(1));
        let base = k - 1;
        let pts: Vec<usize> = (base..(base + 4).min(n + 1)).collect();
        let mut v = 0.0;
        for &i in &pts {
            let mut l = 1.0;
            for &j in &pts {
                if i != j {
                    l *= (x - j as f64) / (i as f64 - j as f64);
                }
            }
            v += l * self.cumulative[i];
        }
        v
    }
}

/// `I(ε) = ∫_ε^1 ∫_{B(0,1)} Y^p dx dt` for each ε, using
/// `I(ε) = ω_N ∫_ε^1 t^e F(t^{−α/2}) dt` with the exponent `e` of
/// [`divergence_exponent`] and the substitution `t = e^{−s}`.
pub fn optimality_experiment(
    alpha: FractionalOrder,
    n: usize,
    p: f64,
    epsilon_list: &[f64],
) -> Result<OptimalityReport> {
    let ev = FundamentalSolutionEvaluator::new(alpha, n)?;
    let mut profile = Vec::new();
    optimality_with_profile(&ev, p, epsilon_list, &mut profile)
}

/// As [`optimality_experiment`], reusing profile samples across calls with the
/// same evaluator (the samples do not depend on `p`).
pub fn optimality_with_profile(
    ev: &FundamentalSolutionEvaluator,
    p: f64,
    epsilon_list: &[f64],
    profile: &mut Vec<(f64, f64)>,
) -> Result<OptimalityReport> {
    if !(p > 0.0) {
        return Err(domain(format!("p must be positive, got {p}")));
    }
    if epsilon_list.len() < 3 {
        return Err(domain("need at least three epsilon values"));
    }
    if epsilon_list.iter().any(|e| !(*e > 0.0 && *e < 1.0))
        || epsilon_list.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(domain("epsilon list must be decreasing inside (0, 1)"));
    }
    let alpha = ev.alpha();
    let n = ev.dim();
    let a = alpha.value();
    let exps = ExponentReport::new(alpha, n, p);
    let e = exps.divergence_exponent;
    let fint = ProfileIntegral::build(ev, p, profile, 0.05)?;
    let omega = sphere_measure(n);

    // I(ε) = ω ∫_0^{ln 1/ε} e^{−s(e+1)} F(e^{sα/2}) ds
    let rule = GaussLegendre::new(8);
    let panel = 0.25;
    let mut acc = CompensatedSum::new();
    let mut s0 = 0.0;
    let mut points = Vec::with_capacity(epsilon_list.len());
    for &eps in epsilon_list {
        let s1 = (1.0 / eps).ln();
        let pieces = ((s1 - s0) / panel).ceil().max(1.0) as usize;
        let w = (s1 - s0) / pieces as f64;
        for k in 0..pieces {
            let lo = s0 + k as f64 * w;
            for (s, wt) in rule.mapped(lo, lo + w) {
                acc.add(wt * (-s * (e + 1.0)).exp() * fint.at((s * a / 2.0).exp()));
            }
        }
        s0 = s1;
        points.push((eps, omega * acc.value()));
    }

    let regime = if (e + 1.0).abs() < BORDERLINE_WIDTH {
        Regime::Logarithmic
    } else if e > -1.0 {
        Regime::Convergent
    } else {
        Regime::Power
    };

    let last = points.last().unwrap();
    let decade = points
        .iter()
        .rev()
        .find(|(eps, _)| *eps >= 10.0 * last.0 * (1.0 - 1e-9))
        .copied()
        .unwrap_or(points[0]);
    let last_decade_change = ((last.1 - decade.1) / last.1).abs();

    // fits over the last three decades (or what is available)
    let tail: Vec<(f64, f64)> = points
        .iter()
        .filter(|(eps, _)| *eps <= 1000.0 * last.0 * (1.0 + 1e-9))
        .map(|&(eps, i)| ((1.0 / eps).ln(), i))
        .collect();
    let (b, c) = linear_fit(&tail);
    let mean = tail.iter().map(|q| q.1).sum::<f64>() / tail.len() as f64;
    let rms = (tail.iter().map(|&(x, y)| (y - (b * x + c)).powi(2)).sum::<f64>()
        / tail.len() as f64)
        .sqrt();
    let log_points: Vec<(f64, f64)> = tail.iter().map(|&(x, y)| (x, y.ln())).collect();
    let (power_slope, _) = linear_fit(&log_points);

    Ok(OptimalityReport {
        exponents: exps,
        regime,
        points,
        last_decade_change,
        log_slope: b,
        log_fit_residual: rms / mean.abs(),
        power_slope,
        predicted_power_slope: -(1.0 + e),
        profile_mass: omega * fint.total(),
    })
}

/// Least-squares `y ≈ b x + c`; returns `(b, c)`.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let den = n * sxx - sx * sx;
    if den == 0.0 {
        return (0.0, sy / n);
    }
    let b = (n * sxy - sx * sy) / den;
    (b, (sy - b * sx) / n)
}

/// Default ε list: four points per decade from 1e−1 to 1e−8.
pub fn default_epsilons() -> Vec<f64> {
    (4..=32).map(|k| 10f64.powf(-(k as f64) / 4.0)).collect()
}

/// CSV `epsilon,integral`.
pub fn write_optimality_csv<W: std::io::Write>(points: &[(f64, f64)], mut w: W) -> Result<()> {
    writeln!(w, "epsilon,integral")?;
    for (e, i) in points {
        writeln!(w, "{e},{i}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(a: f64) -> FractionalOrder {
        FractionalOrder::new(a).unwrap()
    }

    #[test]
    fn critical_exponent_values() {
        assert!((critical_exponent(order(0.5), 1) - 5.0 / 3.0).abs() < 1e-15);
        assert!((critical_exponent(order(0.5), 2) - 1.5).abs() < 1e-15);
        for n in 1..=3 {
            let lim = 1.0 + 2.0 / n as f64;
            assert!((critical_exponent(FractionalOrder::classical(), n) - lim).abs() < 1e-15);
            assert!((critical_exponent(order(0.999), n) - lim).abs() < 1e-2);
        }
    }

    #[test]
    fn kappa_values() {
        assert_eq!(kappa(Exponent::Infinite, 2).unwrap(), 2.0);
        assert!((kappa(Exponent::Finite(1.0 + 1e-12), 3).unwrap() - 1.0).abs() < 1e-11);
        assert!(kappa(Exponent::Finite(1.0), 1).is_err());
        let a = order(0.5);
        let k = kappa(Exponent::Finite(1.0 / (1.0 - 0.5)), 1).unwrap();
        assert!((k - critical_exponent(a, 1)).abs() < 1e-15);
    }

    #[test]
    fn divergence_exponent_values() {
        let a = order(0.5);
        assert!((divergence_exponent(a, 1, 1.0) + 0.5).abs() < 1e-15);
        assert!((divergence_exponent(a, 1, 5.0 / 3.0) + 1.0).abs() < 1e-15);
        assert!((divergence_exponent(a, 1, 2.0) + 1.25).abs() < 1e-15);
        for k in 1..=9 {
            let a = order(k as f64 / 10.0);
            for n in 1..=3 {
                let e = divergence_exponent(a, n, critical_exponent(a, n));
                assert!((e + 1.0).abs() < 1e-12);
                assert!(ExponentReport::new(a, n, critical_exponent(a, n)).diverges);
            }
        }
    }

    #[test]
    fn heat_kernel_at_origin() {
        let ev = FundamentalSolutionEvaluator::new(FractionalOrder::classical(), 1).unwrap();
        let y = ev.eval(1.0, &[0.0]).unwrap();
        assert!((y - 0.282_094_791_773_878_14).abs() < 1e-9, "{y}");
    }

    #[test]
    fn self_similarity() {
        let a = 0.5;
        for n in 1..=3 {
            let ev = FundamentalSolutionEvaluator::new(order(a), n).unwrap();
            let t: f64 = 0.25;
            let x = 0.3;
            let direct = ev.eval_radial(t, x).unwrap();
            let via = ev.natural_scale(t) * ev.profile(x * t.powf(-a / 2.0)).unwrap();
            assert!((direct - via).abs() < 1e-8 * via.abs().max(1.0), "N={n}: {direct} vs {via}");
        }
    }
}
