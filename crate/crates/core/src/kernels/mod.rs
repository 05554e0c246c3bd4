//! Convolution kernels on a uniform time grid.
//!
//! A [`KernelTable`] with `m` steps stores `m + 1` values. Entry `j ≥ 1` is the
//! exact average of the kernel over the cell `((j−1)·dt, j·dt]`; entry `0` is the
//! limit at `0⁺`, which is `+∞` for weakly singular kernels. The one exception is
//! [`KernelKind::ConvolutionWeights`], whose entries are Grünwald-type weights
//! chosen so that discrete convolution reproduces `g_α ∗ g_{1−α} = 1` exactly.

mod mittag_leffler;
mod volterra;

use std::io::{BufRead, Write};

pub use mittag_leffler::{
    mittag_leffler, mittag_leffler_with, series_switch, MittagLefflerMethod, MittagLefflerParams,
};
pub use volterra::{solve_volterra, yosida_kernels_volterra};

use crate::error::{domain, Error, Result};
use crate::special::rgamma;

/// Fractional order α; `0 < α < 1`, or `α = 1` through [`FractionalOrder::classical`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Self(alpha))
        } else {
            Err(domain(format!("fractional order must lie in (0, 1), got {alpha}")))
        }
    }

    /// Accepts `α = 1` as well, for operations with a documented classical limit.
    pub fn with_classical_limit(alpha: f64) -> Result<Self> {
        if alpha == 1.0 {
            Ok(Self(1.0))
        } else {
            Self::new(alpha)
        }
    }

    pub fn classical() -> Self {
        Self(1.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_classical(self) -> bool {
        self.0 == 1.0
    }
}

/// g_β(t) = t^{β−1}/Γ(β).
pub fn rl_kernel(beta: f64, t: f64) -> Result<f64> {
    if !(beta > 0.0) || !(t > 0.0) {
        return Err(domain(format!("rl_kernel needs beta > 0 and t > 0, got beta={beta}, t={t}")));
    }
    Ok(t.powf(beta - 1.0) * rgamma(beta))
}

/// What a table represents. The table's `scale` multiplies the kernel named here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    /// g_β, stored by cell averages.
    RiemannLiouville { beta: f64 },
    /// g_β as discrete convolution weights `dt^{β−1} ω_{j−1}`.
    ConvolutionWeights { beta: f64 },
    /// g_{1−α,n} = n·s_{α,n}.
    YosidaG { alpha: f64, n: u32 },
    /// h_{α,n}.
    YosidaH { alpha: f64, n: u32 },
    /// r_{α,θ}.
    Resolvent { alpha: f64, theta: f64 },
    Custom,
}

/// Kernels of the form c·t^{γ−1}·E_{α,γ}(−λ t^α), with primitives in closed form.
#[derive(Debug, Clone, Copy)]
struct MlForm {
    c: f64,
    gamma: f64,
    alpha: f64,
    lambda: f64,
}

impl MlForm {
    fn of(kind: KernelKind) -> Option<Self> {
        match kind {
            KernelKind::RiemannLiouville { beta } => {
                Some(Self { c: 1.0, gamma: beta, alpha: 1.0, lambda: 0.0 })
            }
            KernelKind::YosidaG { alpha, n } => {
                Some(Self { c: n as f64, gamma: 1.0, alpha, lambda: n as f64 })
            }
            KernelKind::YosidaH { alpha, n } => {
                Some(Self { c: n as f64, gamma: alpha, alpha, lambda: n as f64 })
            }
            KernelKind::Resolvent { alpha, theta } => {
                Some(Self { c: 1.0, gamma: alpha, alpha, lambda: theta })
            }
            KernelKind::ConvolutionWeights { .. } | KernelKind::Custom => None,
        }
    }

    /// k-th primitive (k = 0 is the kernel itself) at t > 0.
    fn primitive(&self, k: u32, t: f64) -> Result<f64> {
        let g = self.gamma + k as f64;
        let power = t.powf(g - 1.0);
        if self.lambda == 0.0 {
            return Ok(self.c * power * rgamma(g));
        }
        let params = MittagLefflerParams::new(self.alpha, g)?;
        Ok(self.c * power * mittag_leffler(params, -self.lambda * t.powf(self.alpha))?)
    }

    fn at_zero(&self) -> f64 {
        if self.gamma < 1.0 {
            f64::INFINITY
        } else if self.gamma == 1.0 {
            self.c
        } else {
            0.0
        }
    }
}

/// A causal kernel on a uniform grid; see the module docs for the storage convention.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    dt: f64,
    values: Vec<f64>,
    kind: KernelKind,
    scale: f64,
}

fn check_grid(dt: f64, m: usize) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(domain(format!("time step must be positive, got {dt}")));
    }
    if m < 1 {
        return Err(domain("kernel tables need at least one step"));
    }
    Ok(())
}

impl KernelTable {
    fn from_form(kind: KernelKind, dt: f64, m: usize) -> Result<Self> {
        check_grid(dt, m)?;
        let form = MlForm::of(kind).expect("closed-form kind");
        let mut values = Vec::with_capacity(m + 1);
        values.push(form.at_zero());
        let mut prev = 0.0;
        for j in 1..=m {
            let p = form.primitive(1, j as f64 * dt)?;
            values.push((p - prev) / dt);
            prev = p;
        }
        Ok(Self { dt, values, kind, scale: 1.0 })
    }

    /// Cell averages of g_β.
    pub fn riemann_liouville(beta: f64, dt: f64, m: usize) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(domain(format!("beta must be positive, got {beta}")));
        }
        Self::from_form(KernelKind::RiemannLiouville { beta }, dt, m)
    }

    /// Convolution weights of g_β: `values[j] = dt^{β−1} ω_{j−1}` with
    /// ω₀ = 1, ω_j = ω_{j−1}(j−1+β)/j. Products of such tables for β and 1−β
    /// convolve to exactly 1.
    pub fn convolution_weights(beta: f64, dt: f64, m: usize) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(domain(format!("beta must be positive, got {beta}")));
        }
        check_grid(dt, m)?;
        let f = dt.powf(beta - 1.0);
        let mut values = Vec::with_capacity(m + 1);
        values.push(MlForm::of(KernelKind::RiemannLiouville { beta }).unwrap().at_zero());
        let mut w = 1.0;
        for j in 1..=m {
            if j > 1 {
                let i = (j - 1) as f64;
                w *= (i - 1.0 + beta) / i;
            }
            values.push(f * w);
        }
        Ok(Self { dt, values, kind: KernelKind::ConvolutionWeights { beta }, scale: 1.0 })
    }

    /// A table with caller-supplied values (`values[0]` is the value at 0⁺).
    pub fn custom(dt: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(domain("kernel tables need at least two entries"));
        }
        check_grid(dt, values.len() - 1)?;
        if values[1..].iter().any(|v| !v.is_finite()) {
            return Err(domain("kernel cell values must be finite"));
        }
        Ok(Self { dt, values, kind: KernelKind::Custom, scale: 1.0 })
    }

    /// Cell averages of a bounded function, by 8-point Gauss–Legendre per cell.
    pub fn from_fn(dt: f64, m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        check_grid(dt, m)?;
        let rule = crate::quadrature::GaussLegendre::new(8);
        let mut values = Vec::with_capacity(m + 1);
        values.push(f(0.0));
        for j in 1..=m {
            let a = (j - 1) as f64 * dt;
            values.push(rule.integrate(&f, a, a + dt) / dt);
        }
        Self::custom(dt, values)
    }

    pub fn constant(dt: f64, m: usize, c: f64) -> Result<Self> {
        Self::custom(dt, vec![c; m + 1])
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Number of time steps `m` (one less than the number of stored values).
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `c` times this kernel; the kind is kept so exact primitives stay available.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dt: self.dt,
            values: self.values.iter().map(|v| if *v == 0.0 { 0.0 } else { c * v }).collect(),
            kind: self.kind,
            scale: self.scale * c,
        }
    }

    /// Relabel this table's provenance; values are untouched.
    pub fn with_kind(mut self, kind: KernelKind) -> Self {
        self.kind = kind;
        self
    }

    /// True when the kernel is bounded at 0⁺ and has a cell-average representation.
    pub fn is_regular(&self) -> bool {
        self.values[0].is_finite() && !matches!(self.kind, KernelKind::ConvolutionWeights { .. })
    }

    /// Pointwise value at `t_j = j·dt`. Exact for closed-form kinds; otherwise
    /// reconstructed from neighbouring cell averages.
    pub fn node_value(&self, j: usize) -> Result<f64> {
        if j == 0 {
            return Ok(self.values[0]);
        }
        if let Some(form) = MlForm::of(self.kind) {
            return Ok(self.scale * form.primitive(0, j as f64 * self.dt)?);
        }
        let m = self.steps();
        let v = &self.values;
        Ok(if j < m {
            0.5 * (v[j] + v[j + 1])
        } else if m >= 2 {
            1.5 * v[m] - 0.5 * v[m - 1]
        } else {
            v[m]
        })
    }

    /// Second primitive ∫₀^t ∫₀^s k at `t = j·dt`; exact for closed-form kinds,
    /// piecewise quadratic from the cell averages otherwise.
    pub fn second_primitive(&self, j: usize) -> Result<f64> {
        if j == 0 {
            return Ok(0.0);
        }
        if let Some(form) = MlForm::of(self.kind) {
            return Ok(self.scale * form.primitive(2, j as f64 * self.dt)?);
        }
        let dt2 = self.dt * self.dt;
        let s: f64 = (1..=j)
            .map(|i| (j as f64 - i as f64 + 0.5) * self.values[i])
            .sum();
        Ok(dt2 * s)
    }

    /// Product-rule convolution with another table on the same grid:
    /// `out[n] = dt Σ_{j=1}^{n} a_j b_{n−j+1}`, `out[0] = 0`.
    pub fn convolve(&self, other: &KernelTable) -> Result<Vec<f64>> {
        self.check_same_grid(other)?;
        Ok(product_convolution(self.dt, &self.values, &other.values))
    }

    /// dt·Σ_{j≥1} |a_j − b_j|; exact L¹ distance when the difference has one sign per cell.
    pub fn l1_distance(&self, other: &KernelTable) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self.dt
            * self.values[1..]
                .iter()
                .zip(&other.values[1..])
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    pub(crate) fn check_same_grid(&self, other: &KernelTable) -> Result<()> {
        if self.values.len() != other.values.len() || !same_step(self.dt, other.dt) {
            return Err(Error::GridMismatch(format!(
                "tables have (dt={}, len={}) and (dt={}, len={})",
                self.dt,
                self.values.len(),
                other.dt,
                other.values.len()
            )));
        }
        Ok(())
    }

    /// Nonnegative and nonincreasing, entry by entry, including the 0⁺ entry.
    pub fn is_nonnegative_nonincreasing(&self) -> bool {
        self.values.iter().all(|v| *v >= 0.0) && self.values.windows(2).all(|w| w[1] <= w[0])
    }

    /// CSV with header `t,value`, one row per stored entry.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,value")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", j as f64 * self.dt, v)?;
        }
        Ok(())
    }

    /// Reads the format written by [`KernelTable::write_csv`] as a custom table.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == "t,value" => {}
            _ => return Err(Error::Parse("expected header `t,value`".into())),
        }
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (t, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("row {}: expected two fields", i + 2)))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {e}", i + 2)))
            };
            ts.push(parse(t)?);
            vs.push(parse(v)?);
        }
        if ts.len() < 2 {
            return Err(Error::Parse("need at least two rows".into()));
        }
        let dt = ts[1] - ts[0];
        Self::custom(dt, vs)
    }
}

fn same_step(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

pub(crate) fn product_convolution(dt: f64, a: &[f64], b: &[f64]) -> Vec<f64> {
    let m = a.len().min(b.len()) - 1;
    let mut out = vec![0.0; m + 1];
    for (n, o) in out.iter_mut().enumerate().skip(1) {
        let s: f64 = (1..=n).map(|j| a[j] * b[n - j + 1]).sum();
        *o = dt * s;
    }
    out
}

/// Yosida kernels `(g_{1−α,n}, h_{α,n})` from their Mittag-Leffler closed forms:
/// `g_n(t) = n E_{α,1}(−n t^α)` and `h_n(t) = n t^{α−1} E_{α,α}(−n t^α)`.
pub fn yosida_kernels(
    alpha: FractionalOrder,
    n: u32,
    dt: f64,
    m: usize,
) -> Result<(KernelTable, KernelTable)> {
    if n == 0 {
        return Err(domain("Yosida index n must be at least 1"));
    }
    let a = alpha.value();
    let g = KernelTable::from_form(KernelKind::YosidaG { alpha: a, n }, dt, m)?;
    let h = KernelTable::from_form(KernelKind::YosidaH { alpha: a, n }, dt, m)?;
    if !g.is_nonnegative_nonincreasing() {
        return Err(Error::Accuracy(format!(
            "g_n table lost monotonicity (alpha={a}, n={n}, dt={dt})"
        )));
    }
    Ok((g, h))
}

/// Max over nodes `t_j ≥ t_min` of `|(g_{1−α}∗h_{α,n})(t_j) − g_{1−α,n}(t_j)|` on `[0, 1]`
/// with `m` steps. Near `t = 0` the product rule cannot resolve `h_n`, hence the window.
pub fn yosida_identity_residual(alpha: FractionalOrder, n: u32, m: usize, t_min: f64) -> Result<f64> {
    let dt = 1.0 / m as f64;
    let (g, h) = yosida_kernels(alpha, n, dt, m)?;
    let rl = KernelTable::riemann_liouville(1.0 - alpha.value(), dt, m)?;
    let c = rl.convolve(&h)?;
    let mut worst = 0.0f64;
    for (j, cj) in c.iter().enumerate().skip(1) {
        if j as f64 * dt >= t_min {
            worst = worst.max((cj - g.node_value(j)?).abs());
        }
    }
    Ok(worst)
}

/// Resolvent r_{α,θ}(t) = t^{α−1} E_{α,α}(−θ t^α), stored by cell averages.
/// Accepts α = 1, where r_{1,θ}(t) = e^{−θt}.
pub fn resolvent_kernel(
    alpha: FractionalOrder,
    theta: f64,
    dt: f64,
    m: usize,
) -> Result<KernelTable> {
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(domain(format!("theta must be nonnegative, got {theta}")));
    }
    let t = KernelTable::from_form(KernelKind::Resolvent { alpha: alpha.value(), theta }, dt, m)?;
    if t.values[1..].iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Accuracy(format!(
            "resolvent lost positivity (alpha={}, theta={theta})",
            alpha.value()
        )));
    }
    Ok(t)
}
