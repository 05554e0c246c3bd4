//! Discrete causal convolution, the L1 fractional derivative, and residual
//! checks for the commutator identities of `d/dt (k∗·)`.

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::kernels::{FractionalOrder, KernelKind, KernelTable};
use crate::special::rgamma;

/// Uniform grid `t_j = j·dt`, `j = 0..=m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    m: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, m: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(domain(format!("time step must be positive, got {dt}")));
        }
        if m < 2 {
            return Err(domain(format!("time grids need at least two steps, got {m}")));
        }
        Ok(Self { dt, m })
    }

    /// `m` steps covering `[0, t_end]`.
    pub fn covering(t_end: f64, m: usize) -> Result<Self> {
        Self::new(t_end / m as f64, m)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.m
    }

    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.m)
    }

    pub(crate) fn matches(&self, dt: f64, len: usize) -> bool {
        len == self.m + 1 && (self.dt - dt).abs() <= 1e-12 * self.dt
    }
}

/// Values of a scalar trace at every node of a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl SampledPath {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.m + 1 {
            return Err(Error::GridMismatch(format!(
                "path has {} values for a grid with {} nodes",
                values.len(),
                grid.m + 1
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..=grid.m).map(|j| f(grid.t(j))).collect();
        Self { grid, values }
    }

    /// Reuses a kernel table's entries as path values (entry 0 may be infinite).
    pub fn from_table(table: &KernelTable) -> Result<Self> {
        let grid = TimeGrid::new(table.dt(), table.steps())?;
        Self::new(grid, table.values().to_vec())
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Nodal derivative: centred in the interior, second-order one-sided at the ends.
    pub fn derivative(&self) -> Vec<f64> {
        let w = &self.values;
        let m = self.grid.m;
        let h = self.grid.dt;
        let mut d = vec![0.0; m + 1];
        d[0] = (-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2.0 * h);
        d[m] = (3.0 * w[m] - 4.0 * w[m - 1] + w[m - 2]) / (2.0 * h);
        for i in 1..m {
            d[i] = (w[i + 1] - w[i - 1]) / (2.0 * h);
        }
        d
    }
}

fn check_table_grid(k: &KernelTable, grid: TimeGrid) -> Result<()> {
    if !grid.matches(k.dt(), k.len()) {
        return Err(Error::GridMismatch(format!(
            "kernel (dt={}, {} entries) does not match path grid (dt={}, {} nodes)",
            k.dt(),
            k.len(),
            grid.dt,
            grid.m + 1
        )));
    }
    Ok(())
}

const PARALLEL_THRESHOLD: usize = 1024;

fn nodewise(m: usize, f: impl Fn(usize) -> f64 + Sync + Send) -> Vec<f64> {
    if m >= PARALLEL_THRESHOLD {
        (0..=m).into_par_iter().map(f).collect()
    } else {
        (0..=m).map(f).collect()
    }
}

/// `(k∗v)(t_n) ≈ dt Σ_{j=1}^{n} K_j v_{n−j+1}`, exact when `v` is constant on each
/// cell with its right-endpoint value and `K` holds exact cell averages.
pub fn causal_convolve(k: &KernelTable, v: &SampledPath) -> Result<SampledPath> {
    check_table_grid(k, v.grid)?;
    let kv = k.values();
    let vv = &v.values;
    let dt = v.grid.dt;
    let values = nodewise(v.grid.m, |n| {
        if n == 0 {
            0.0
        } else {
            dt * (1..=n).map(|j| kv[j] * vv[n - j + 1]).sum::<f64>()
        }
    });
    SampledPath::new(v.grid, values)
}

/// L1 weights `b_j = (j+1)^{1−α} − j^{1−α}`, `j = 0..m`.
pub fn l1_weights(alpha: FractionalOrder, m: usize) -> Vec<f64> {
    let e = 1.0 - alpha.value();
    (0..m)
        .map(|j| {
            if j == 0 {
                // 0^0 would make b_0 vanish in the classical limit
                return 1.0;
            }
            let j = j as f64;
            (j + 1.0).powf(e) - j.powf(e)
        })
        .collect()
}

/// L1 approximation of `∂ₜᵅ(v − v₀)`:
/// `dt^{−α}/Γ(2−α) Σ_{j=0}^{n−1} b_j (w_{n−j} − w_{n−j−1})` with `w_0 = v₀`, `w_i = v_i`.
/// The value at `t = 0` is reported as 0.
pub fn rl_derivative(v: &SampledPath, v0: f64, alpha: FractionalOrder) -> SampledPath {
    let m = v.grid.m;
    let b = l1_weights(alpha, m);
    let c0 = v.grid.dt.powf(-alpha.value()) * rgamma(2.0 - alpha.value());
    let mut w = v.values.clone();
    w[0] = v0;
    let diffs: Vec<f64> = (1..=m).map(|i| w[i] - w[i - 1]).collect();
    let values = nodewise(m, |n| {
        if n == 0 {
            0.0
        } else {
            c0 * (0..n).map(|j| b[j] * diffs[n - j - 1]).sum::<f64>()
        }
    });
    SampledPath { grid: v.grid, values }
}

/// `d/dt (k∗w)(t_n) = k(t_n) w(0) + (k∗ẇ)(t_n)`, with ẇ the piecewise-linear
/// interpolant of the nodal derivative and `k` entering through its cell averages.
fn d_conv(k: &KernelTable, knode: &[f64], w: &SampledPath) -> Vec<f64> {
    let dw = w.derivative();
    let mid: Vec<f64> = (1..dw.len()).map(|i| 0.5 * (dw[i - 1] + dw[i])).collect();
    let kv = k.values();
    let dt = w.grid.dt;
    let w0 = w.values[0];
    nodewise(w.grid.m, |n| {
        let hist: f64 = (1..=n).map(|i| kv[n - i + 1] * mid[i - 1]).sum();
        knode[n] * w0 + dt * hist
    })
}

fn regular_kernel(k: &KernelTable) -> Result<Vec<f64>> {
    if let KernelKind::RiemannLiouville { beta } = k.kind() {
        if beta < 1.0 {
            return Err(Error::SingularKernel(format!(
                "g_{beta} is not differentiable at 0; use a Yosida kernel"
            )));
        }
    }
    if !k.is_regular() {
        return Err(Error::SingularKernel("kernel is unbounded at 0".into()));
    }
    (0..k.len()).map(|j| k.node_value(j)).collect()
}

/// Per-node breakdown of the fundamental identity check.
#[derive(Debug, Clone)]
pub struct IdentityReport {
    /// max over interior nodes of |LHS − RHS|
    pub max_residual: f64,
    /// the history integral at every node (≥ 0 for convex H and nonincreasing k)
    pub history: Vec<f64>,
}

impl IdentityReport {
    pub fn min_history(&self) -> f64 {
        self.history.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Checks `H'(u) d/dt(k∗u) = d/dt(k∗H(u)) + (−H(u) + H'(u)u) k + ∫₀ᵗ F(s)(−k̇(s)) ds`
/// with `F(s) = H(u(t−s)) − H(u(t)) − H'(u(t))(u(t−s) − u(t))`.
/// The last integral is a Stieltjes sum against the nodal values of `k`.
pub fn fundamental_identity_report(
    u: &SampledPath,
    k: &KernelTable,
    h: impl Fn(f64) -> f64 + Sync,
    dh: impl Fn(f64) -> f64 + Sync,
) -> Result<IdentityReport> {
    check_table_grid(k, u.grid)?;
    let knode = regular_kernel(k)?;
    let hu = SampledPath { grid: u.grid, values: u.values.iter().map(|&y| h(y)).collect() };
    let du = d_conv(k, &knode, u);
    let dhu = d_conv(k, &knode, &hu);
    let m = u.grid.m;
    let uv = &u.values;
    let history = nodewise(m, |n| {
        let (un, hn, dn) = (uv[n], h(uv[n]), dh(uv[n]));
        let f = |j: usize| {
            let y = uv[n - j];
            h(y) - hn - dn * (y - un)
        };
        (1..=n)
            .map(|j| (knode[j - 1] - knode[j]) * 0.5 * (f(j - 1) + f(j)))
            .sum::<f64>()
    });
    let mut max_residual = 0.0f64;
    for n in 1..m {
        let (un, dn) = (uv[n], dh(uv[n]));
        let lhs = dn * du[n];
        let rhs = dhu[n] + (-h(un) + dn * un) * knode[n] + history[n];
        max_residual = max_residual.max((lhs - rhs).abs());
    }
    Ok(IdentityReport { max_residual, history })
}

/// Maximum interior residual of the fundamental identity; see
/// [`fundamental_identity_report`].
pub fn fundamental_identity_residual(
    u: &SampledPath,
    k: &KernelTable,
    h: impl Fn(f64) -> f64 + Sync,
    dh: impl Fn(f64) -> f64 + Sync,
) -> Result<f64> {
    Ok(fundamental_identity_report(u, k, h, dh)?.max_residual)
}

/// Result of a commutator check.
#[derive(Debug, Clone, Copy)]
pub struct CommutationReport {
    pub max_residual: f64,
    /// min over nodes of (left side − lower bound) in the one-sided form;
    /// only meaningful when `v ≥ 0` and `φ` is nondecreasing.
    pub min_margin: f64,
}

fn check_same_grid(a: &SampledPath, b: &SampledPath) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch("paths live on different grids".into()));
    }
    Ok(())
}

/// Checks `g_α∗(φ v̇) = φ (g_α∗v̇) + ∫₀ᵗ v(σ) ∂_σ(g_α(t−σ)[φ(t) − φ(σ)]) dσ` for `v(0) = 0`.
///
/// The left side and `g_α∗v̇` use exact moments of `g_α` against piecewise-linear
/// `v` and `φ`; the correction integral is a Stieltjes sum with cell means of `v`.
pub fn commutation_report_1(
    v: &SampledPath,
    phi: &SampledPath,
    alpha: FractionalOrder,
) -> Result<CommutationReport> {
    check_same_grid(v, phi)?;
    if v.values[0].abs() > 1e-14 {
        return Err(Error::Precondition(format!("v(0) must vanish, got {}", v.values[0])));
    }
    let a = alpha.value();
    let grid = v.grid;
    let dt = grid.dt;
    let m = grid.m;
    let g1 = |u: f64| if u <= 0.0 { 0.0 } else { u.powf(a) * rgamma(a + 1.0) };
    let g2 = |u: f64| if u <= 0.0 { 0.0 } else { u.powf(a + 1.0) * rgamma(a + 2.0) };
    let ga = |u: f64| u.powf(a - 1.0) * rgamma(a);
    let (vv, pv) = (&v.values, &phi.values);

    let rows: Vec<(f64, f64)> = (1..=m)
        .map(|n| {
            let tn = grid.t(n);
            let mut lhs = 0.0;
            let mut conv = 0.0;
            let mut correction = 0.0;
            let mut lower = 0.0;
            let big_g = |i: usize| {
                if i == n {
                    0.0
                } else {
                    ga(tn - grid.t(i)) * (pv[n] - pv[i])
                }
            };
            for i in 1..=n {
                let lo = tn - grid.t(i);
                let hi = lo + dt;
                let m0 = g1(hi) - g1(lo);
                let m1 = (hi * m0 - a * (g2(hi) - g2(lo))) / dt;
                let slope = (vv[i] - vv[i - 1]) / dt;
                let dphi = pv[i] - pv[i - 1];
                lhs += slope * (pv[i - 1] * m0 + dphi * m1);
                conv += slope * m0;
                let vbar = 0.5 * (vv[i - 1] + vv[i]);
                correction += vbar * (big_g(i) - big_g(i - 1));
                lower += m0 * dphi / dt * vbar;
            }
            let residual = lhs - pv[n] * conv - correction;
            let margin = lhs - (pv[n] * conv - lower);
            (residual.abs(), margin)
        })
        .collect();
    Ok(summarize(&rows, m))
}

fn summarize(rows: &[(f64, f64)], m: usize) -> CommutationReport {
    // interior nodes only: rows[n-1] is node n
    let interior = &rows[..m.saturating_sub(1)];
    CommutationReport {
        max_residual: interior.iter().map(|r| r.0).fold(0.0, f64::max),
        min_margin: interior.iter().map(|r| r.1).fold(f64::INFINITY, f64::min),
    }
}

pub fn commutation_residual_1(
    v: &SampledPath,
    phi: &SampledPath,
    alpha: FractionalOrder,
) -> Result<f64> {
    Ok(commutation_report_1(v, phi, alpha)?.max_residual)
}

/// Checks `φ d/dt(k∗v) = d/dt(k∗[φv]) + ∫₀ᵗ k̇(t−τ)(φ(t) − φ(τ)) v(τ) dτ` for a
/// bounded kernel `k`; the integral is a Stieltjes sum against nodal `k`.
pub fn commutation_residual_2(
    k: &KernelTable,
    v: &SampledPath,
    phi: &SampledPath,
) -> Result<f64> {
    check_same_grid(v, phi)?;
    check_table_grid(k, v.grid)?;
    let knode = regular_kernel(k)?;
    let (vv, pv) = (&v.values, &phi.values);
    let phiv = SampledPath {
        grid: v.grid,
        values: vv.iter().zip(pv).map(|(a, b)| a * b).collect(),
    };
    let dv = d_conv(k, &knode, v);
    let dphiv = d_conv(k, &knode, &phiv);
    let m = v.grid.m;
    let mut worst = 0.0f64;
    for n in 1..m {
        let f = |j: usize| (pv[n] - pv[n - j]) * vv[n - j];
        let integral: f64 = (1..=n)
            .map(|j| (knode[j] - knode[j - 1]) * 0.5 * (f(j - 1) + f(j)))
            .sum();
        let r = pv[n] * dv[n] - dphiv[n] - integral;
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::yosida_kernels;
    use proptest::prelude::*;

    fn order(a: f64) -> FractionalOrder {
        FractionalOrder::new(a).unwrap()
    }

    fn grid(m: usize) -> TimeGrid {
        TimeGrid::covering(1.0, m).unwrap()
    }

    #[test]
    fn time_grid_validation() {
        assert!(TimeGrid::new(0.0, 10).is_err());
        assert!(TimeGrid::new(0.1, 1).is_err());
        assert_eq!(grid(4).t(2), 0.5);
    }

    #[test]
    fn constant_convolution_is_linear_in_t() {
        let g = grid(32);
        let one = KernelTable::constant(g.dt(), 32, 1.0).unwrap();
        let v = SampledPath::from_fn(g, |_| 1.0);
        let c = causal_convolve(&one, &v).unwrap();
        for (j, x) in c.values().iter().enumerate() {
            assert!((x - g.t(j)).abs() < 1e-14);
        }
    }

    #[test]
    fn convolution_weight_tables_invert() {
        let ka = KernelTable::convolution_weights(0.3, 1.0 / 512.0, 512).unwrap();
        let kb = KernelTable::convolution_weights(0.7, 1.0 / 512.0, 512).unwrap();
        let c = causal_convolve(&ka, &SampledPath::from_table(&kb).unwrap()).unwrap();
        assert!(c.values()[1..].iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn convolution_commutes_for_tables() {
        let a = KernelTable::riemann_liouville(0.4, 0.01, 100).unwrap();
        let b = KernelTable::riemann_liouville(2.3, 0.01, 100).unwrap();
        let ab = causal_convolve(&a, &SampledPath::from_table(&b).unwrap()).unwrap();
        let ba = causal_convolve(&b, &SampledPath::from_table(&a).unwrap()).unwrap();
        for (x, y) in ab.values().iter().zip(ba.values()) {
            assert!((x - y).abs() <= 1e-14 * x.abs().max(1.0));
        }
    }

    #[test]
    fn l1_weights_are_strictly_decreasing() {
        let b = l1_weights(order(0.3), 2000);
        assert_eq!(b[0], 1.0);
        assert!(b.windows(2).all(|w| w[0] > w[1] && w[1] > 0.0));
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let v = SampledPath::from_fn(grid(50), |_| 2.5);
        let d = rl_derivative(&v, 2.5, order(0.6));
        assert!(d.values().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn derivative_of_power_tends_to_gamma() {
        let a = 0.5;
        let err = |m: usize| {
            let v = SampledPath::from_fn(grid(m), |t| 1.0 + t.powf(a));
            let d = rl_derivative(&v, 1.0, order(a));
            (d.values()[m] - crate::special::gamma(1.0 + a)).abs()
        };
        let (e1, e2) = (err(128), err(512));
        assert!(e2 < 0.5 * e1 && e2 < 0.02, "{e1:e} {e2:e}");
    }

    #[test]
    fn derivative_of_linear_path() {
        let m = 1024;
        let v = SampledPath::from_fn(grid(m), |t| 3.0 + t);
        let d = rl_derivative(&v, 3.0, order(0.5));
        // exact for piecewise-linear data: g_{1.5}(t) = 2√(t/π)
        let exact = 2.0 / std::f64::consts::PI.sqrt();
        assert!((d.values()[m] - exact).abs() < 1e-12);
    }

    #[test]
    fn inverse_property_of_l1_derivative() {
        // L1 derivative followed by the cell-averaged g_α recovers v − v₀
        let a = 0.5;
        let err = |m: usize| {
            let g = grid(m);
            let v = SampledPath::from_fn(g, |t| (2.0 * t).sin() + t * t);
            let d = rl_derivative(&v, 0.0, order(a));
            let ga = KernelTable::riemann_liouville(a, g.dt(), m).unwrap();
            let back = causal_convolve(&ga, &d).unwrap();
            back.values()
                .iter()
                .zip(v.values())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(256), err(512));
        let order = (e1 / e2).log2();
        assert!(order > 0.9, "order {order}: {e1:e} {e2:e}");
    }

    #[test]
    fn linear_h_identity_is_exact() {
        let m = 64;
        let g = grid(m);
        let (k, _) = yosida_kernels(order(0.5), 4, g.dt(), m).unwrap();
        let u = SampledPath::from_fn(g, |t| (3.0 * t).cos() + t);
        let r = fundamental_identity_residual(&u, &k, |y| 2.0 * y - 1.0, |_| 2.0).unwrap();
        assert!(r < 1e-12, "{r:e}");
    }

    #[test]
    fn quadratic_h_identity_converges() {
        let res = |m: usize| {
            let g = grid(m);
            let (k, _) = yosida_kernels(order(0.5), 4, g.dt(), m).unwrap();
            let u = SampledPath::from_fn(g, |t| 1.0 + (2.0 * t).sin());
            fundamental_identity_report(&u, &k, |y| y * y, |y| 2.0 * y).unwrap()
        };
        let (a, b) = (res(64), res(128));
        assert!(a.max_residual / b.max_residual >= 1.7, "{:e} {:e}", a.max_residual, b.max_residual);
        assert!(b.min_history() >= -1e-12);
    }

    #[test]
    fn singular_kernel_rejected() {
        let g = grid(16);
        let k = KernelTable::riemann_liouville(0.5, g.dt(), 16).unwrap();
        let u = SampledPath::from_fn(g, |t| t);
        assert!(matches!(
            fundamental_identity_residual(&u, &k, |y| y, |_| 1.0),
            Err(Error::SingularKernel(_))
        ));
    }

    #[test]
    fn commutator_1_trivial_and_convergent() {
        let a = order(0.5);
        let g = grid(64);
        let v = SampledPath::from_fn(g, |t| t);
        let one = SampledPath::from_fn(g, |_| 1.0);
        assert!(commutation_residual_1(&v, &one, a).unwrap() < 1e-12);
        let r = |m: usize| {
            let g = grid(m);
            let v = SampledPath::from_fn(g, |t| t);
            let phi = SampledPath::from_fn(g, |t| t);
            commutation_report_1(&v, &phi, a).unwrap()
        };
        let (r1, r2) = (r(64), r(128));
        assert!(r2.max_residual < 0.6 * r1.max_residual, "{:e} {:e}", r1.max_residual, r2.max_residual);
        assert!(r2.min_margin > -1e-3);
    }

    #[test]
    fn commutator_2_trivial_and_convergent() {
        let r = |m: usize, phi: fn(f64) -> f64| {
            let g = grid(m);
            let (k, _) = yosida_kernels(order(0.5), 2, g.dt(), m).unwrap();
            let v = SampledPath::from_fn(g, |t| (t * 3.0).cos());
            let p = SampledPath::from_fn(g, phi);
            commutation_residual_2(&k, &v, &p).unwrap()
        };
        assert!(r(64, |_| 3.0) < 1e-12);
        let (a, b) = (r(64, |t| t * t + t), r(128, |t| t * t + t));
        assert!(b < 0.6 * a, "{a:e} {b:e}");
    }

    proptest! {
        #[test]
        fn rl_derivative_is_linear(c in -5.0f64..5.0, s in 0.1f64..4.0) {
            let g = grid(40);
            let a = order(0.4);
            let v1 = SampledPath::from_fn(g, |t| (s * t).sin());
            let v2 = SampledPath::from_fn(g, |t| t * t);
            let comb = SampledPath::from_fn(g, |t| (s * t).sin() + c * t * t);
            let d1 = rl_derivative(&v1, 0.0, a);
            let d2 = rl_derivative(&v2, 0.0, a);
            let dc = rl_derivative(&comb, 0.0, a);
            for j in 0..=40 {
                let lin = d1.values()[j] + c * d2.values()[j];
                prop_assert!((dc.values()[j] - lin).abs() <= 1e-10 * (1.0 + lin.abs()));
            }
        }
    }
}
