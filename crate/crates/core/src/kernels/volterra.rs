//! Cell-average Galerkin solver for x + g∗x = f.
//!
//! The unknown is piecewise constant. Averaging the equation over cell `n` gives
//! `x̄_n + Σ_{i≤n} W_{n−i} x̄_i = f̄_n` with
//! `W_k = [G₂((k+1)dt) − 2G₂(k·dt) + G₂((k−1)dt)]/dt` and `G₂` the second
//! primitive of `g` (zero for negative arguments). Singular right-hand sides
//! such as `g_α` are fine because only their cell averages enter.

use super::{FractionalOrder, KernelTable};
use crate::error::{domain, Error, Result};

fn weights(g: &KernelTable, m: usize) -> Result<Vec<f64>> {
    let dt = g.dt();
    let mut w = Vec::with_capacity(m);
    if super::MlForm::of(g.kind()).is_none() {
        // piecewise-constant kernel: the second primitive is piecewise quadratic
        let v = g.values();
        w.push(0.5 * dt * v[1]);
        for k in 1..m {
            w.push(0.5 * dt * (v[k] + v[k + 1]));
        }
        return Ok(w);
    }
    let mut g2 = Vec::with_capacity(m + 1);
    for j in 0..=m {
        g2.push(g.second_primitive(j)?);
    }
    w.push(g2[1] / dt);
    for k in 1..m {
        w.push((g2[k + 1] - 2.0 * g2[k] + g2[k - 1]) / dt);
    }
    Ok(w)
}

/// Solves `x + g∗x = f` on the first `m` steps of the common grid of `g` and `f`.
/// The result stores cell averages of `x`; its `0⁺` entry copies `f`'s.
pub fn solve_volterra(g: &KernelTable, f: &KernelTable, m: usize) -> Result<KernelTable> {
    if !super::same_step(g.dt(), f.dt()) {
        return Err(Error::GridMismatch(format!(
            "kernel dt={} but right-hand side dt={}",
            g.dt(),
            f.dt()
        )));
    }
    if m < 1 || m > g.steps() || m > f.steps() {
        return Err(Error::GridMismatch(format!(
            "requested {m} steps but tables hold {} and {}",
            g.steps(),
            f.steps()
        )));
    }
    let w = weights(g, m)?;
    let diag = 1.0 + w[0];
    if diag.abs() < 1e-14 {
        return Err(Error::SingularStep { index: 1, diagonal: diag });
    }
    let fv = f.values();
    let mut x = vec![0.0; m + 1];
    x[0] = fv[0];
    for n in 1..=m {
        let history: f64 = (1..n).map(|i| w[n - i] * x[i]).sum();
        x[n] = (fv[n] - history) / diag;
    }
    KernelTable::custom(g.dt(), x)
        .map_err(|_| Error::Accuracy("Volterra solution is not finite".into()))
}

/// Yosida kernels by brute force: `s + n g_α∗s = 1`, `h + n g_α∗h = n g_α`.
/// Returns `(n·s, h)`.
pub fn yosida_kernels_volterra(
    alpha: FractionalOrder,
    n: u32,
    dt: f64,
    m: usize,
) -> Result<(KernelTable, KernelTable)> {
    if n == 0 {
        return Err(domain("Yosida index n must be at least 1"));
    }
    let nf = n as f64;
    let ga = KernelTable::riemann_liouville(alpha.value(), dt, m)?;
    let kernel = ga.scaled(nf);
    let s = solve_volterra(&kernel, &KernelTable::constant(dt, m, 1.0)?, m)?;
    let h = solve_volterra(&kernel, &kernel, m)?;
    Ok((s.scaled(nf), h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{resolvent_kernel, yosida_kernels};

    #[test]
    fn zero_kernel_returns_rhs() {
        let g = KernelTable::constant(0.1, 10, 0.0).unwrap();
        let f = KernelTable::from_fn(0.1, 10, |t| (3.0 * t).sin()).unwrap();
        let x = solve_volterra(&g, &f, 10).unwrap();
        assert_eq!(x.values(), f.values());
    }

    #[test]
    fn classical_relaxation_is_exponential() {
        let err = |m: usize| {
            let dt = 1.0 / m as f64;
            let g = KernelTable::riemann_liouville(1.0, dt, m).unwrap().scaled(3.0);
            let x = solve_volterra(&g, &KernelTable::constant(dt, m, 1.0).unwrap(), m).unwrap();
            (1..=m)
                .map(|j| {
                    let exact = ((-3.0 * (j - 1) as f64 * dt).exp() - (-3.0 * j as f64 * dt).exp())
                        / (3.0 * dt);
                    (x.values()[j] - exact).abs()
                })
                .fold(0.0, f64::max)
        };
        let (a, b) = (err(100), err(200));
        assert!(a < 1e-3 && b < a * 0.6, "{a:e} {b:e}");
    }

    #[test]
    fn resolvent_matches_closed_form() {
        let alpha = FractionalOrder::new(0.5).unwrap();
        let err = |m: usize| {
            let dt = 1.0 / m as f64;
            let ga = KernelTable::riemann_liouville(0.5, dt, m).unwrap();
            let x = solve_volterra(&ga.scaled(2.0), &ga, m).unwrap();
            let r = resolvent_kernel(alpha, 2.0, dt, m).unwrap();
            x.l1_distance(&r).unwrap()
        };
        let (a, b) = (err(128), err(256));
        assert!(b < 0.7 * a, "{a:e} {b:e}");
    }

    #[test]
    fn volterra_yosida_agrees_with_closed_form() {
        let alpha = FractionalOrder::new(0.5).unwrap();
        let dist = |m: usize| {
            let dt = 1.0 / m as f64;
            let (g1, h1) = yosida_kernels(alpha, 4, dt, m).unwrap();
            let (g2, h2) = yosida_kernels_volterra(alpha, 4, dt, m).unwrap();
            (g1.l1_distance(&g2).unwrap(), h1.l1_distance(&h2).unwrap())
        };
        let (g_a, h_a) = dist(128);
        let (g_b, h_b) = dist(256);
        assert!(g_b < 0.75 * g_a && h_b < 0.75 * h_a);
    }

    #[test]
    fn linear_in_rhs() {
        let dt = 0.05;
        let g = KernelTable::riemann_liouville(0.3, dt, 40).unwrap().scaled(1.7);
        let f1 = KernelTable::from_fn(dt, 40, |t| t.cos()).unwrap();
        let f2 = KernelTable::from_fn(dt, 40, |t| t * t).unwrap();
        let combo: Vec<f64> = f1
            .values()
            .iter()
            .zip(f2.values())
            .map(|(a, b)| 2.0 * a - 0.5 * b)
            .collect();
        let fc = KernelTable::custom(dt, combo).unwrap();
        let x1 = solve_volterra(&g, &f1, 40).unwrap();
        let x2 = solve_volterra(&g, &f2, 40).unwrap();
        let xc = solve_volterra(&g, &fc, 40).unwrap();
        for j in 1..=40 {
            let lin = 2.0 * x1.values()[j] - 0.5 * x2.values()[j];
            assert!((xc.values()[j] - lin).abs() < 1e-12 * (1.0 + lin.abs()));
        }
    }

    #[test]
    fn singular_step_detected() {
        let g = KernelTable::constant(1.0, 4, -2.0).unwrap();
        let f = KernelTable::constant(1.0, 4, 1.0).unwrap();
        assert!(matches!(solve_volterra(&g, &f, 4), Err(Error::SingularStep { .. })));
    }
}
