//! Discrete weak form against space-time tent functions.
//!
//! With `W^n = Σ_{i=1}^{n} (u^i − u^{i−1}) g_{2−α}(t_{n−i+1})` (so that
//! `(W^n − W^{n−1})/dt` is the L1 derivative) and `η^M = 0`,
//! `B(u, η) = −Σ_{n=1}^{M−1} (η^{n+1} − η^n)·(W^n, 1)_h + dt Σ_{n=1}^{M} [(A D_h u^n | D_h η^n)_h + σ(u^n, η^n)_h]`.
//! For the plain scheme `B(u, η) = dt Σ_n (f^n, η^n)_h` up to rounding.

use super::{Operator, SolveResult};
use crate::special::rgamma;

/// Weak-form values for every test field of the built-in family.
#[derive(Debug, Clone)]
pub struct WeakFormReport {
    pub values: Vec<f64>,
    /// `dt Σ_n (f^n, η^n)_h` for the same fields
    pub forcing_pairing: Vec<f64>,
}

impl WeakFormReport {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest |B(u, η) − dt Σ (f, η)_h|.
    pub fn consistency_error(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.forcing_pairing)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn tent(i: usize, centre: f64, half_width: f64) -> f64 {
    (1.0 - (i as f64 - centre).abs() / half_width).max(0.0)
}

/// Spatial tents supported away from ∂Ω, in the full node layout.
fn space_profiles(result: &SolveResult) -> Vec<Vec<f64>> {
    let space = result.space();
    let nodes = space.nodes();
    let axis_profiles = |cells: usize| -> Vec<(f64, f64)> {
        let n = cells as f64 + 1.0; // tent vanishes at node 0 and node cells+1
        let mut out = Vec::new();
        for frac in [0.25, 0.5, 0.75] {
            let c = (frac * n).round().clamp(1.0, cells as f64);
            for w in [(n / 8.0).max(1.0), (n / 4.0).max(1.0)] {
                let w = w.min(c).min(n - c);
                if w >= 1.0 {
                    out.push((c, w));
                }
            }
        }
        out.dedup();
        out
    };
    let xs = axis_profiles(space.axis(0).cells);
    let mut fields = Vec::new();
    if space.dim() == 1 {
        for &(c, w) in &xs {
            fields.push((0..nodes).map(|i| tent(i, c, w)).collect());
        }
    } else {
        let ys = axis_profiles(space.axis(1).cells);
        for &(cx, wx) in &xs {
            for &(cy, wy) in &ys {
                fields.push(
                    (0..nodes)
                        .map(|idx| {
                            let (ix, iy) = space.split(idx);
                            tent(ix, cx, wx) * tent(iy, cy, wy)
                        })
                        .collect(),
                );
            }
        }
    }
    fields
}

/// Time profiles on levels 0..=M, all vanishing at M.
fn time_profiles(m: usize) -> Vec<Vec<f64>> {
    let mf = m as f64;
    let mut out = vec![(0..=m).map(|n| 1.0 - n as f64 / mf).collect::<Vec<_>>()];
    for frac in [0.25, 0.5] {
        let c = (frac * mf).round().max(1.0);
        let w = (0.25 * mf).round().max(1.0).min(mf - c);
        if w >= 1.0 {
            out.push((0..=m).map(|n| tent(n, c, w)).collect());
        }
    }
    out
}

/// Evaluates `B(u, η)` for each test field of the built-in family.
pub fn weak_form_values(result: &SolveResult) -> WeakFormReport {
    let spec = &result.spec;
    let space = &spec.space;
    let m = spec.time.steps();
    let dt = spec.time.dt();
    let a = spec.alpha.value();
    let vol = space.cell_volume();
    let interior = space.interior();
    let nodes = space.nodes();
    let u = &result.u;

    let g2a: Vec<f64> = (0..=m)
        .map(|j| (j as f64 * dt).powf(1.0 - a) * rgamma(2.0 - a))
        .collect();
    // W^n on interior cells
    let mut w = vec![vec![0.0; nodes]; m + 1];
    for n in 1..=m {
        for &x in &interior {
            let mut s = 0.0;
            for i in 1..=n {
                s += (u[i][x] - u[i - 1][x]) * g2a[n - i + 1];
            }
            w[n][x] = s;
        }
    }
    let static_op = (!spec.coefficients.is_time_dependent())
        .then(|| Operator::assemble(space, &spec.coefficients, 0));
    let ops: Vec<Operator> = match &static_op {
        Some(_) => Vec::new(),
        None => (0..=m).map(|n| Operator::assemble(space, &spec.coefficients, n)).collect(),
    };
    let op_at = |n: usize| static_op.as_ref().unwrap_or_else(|| &ops[n]);
    let points: Vec<[f64; 2]> = (0..nodes).map(|i| space.point(i)).collect();

    let mut values = Vec::new();
    let mut pairing = Vec::new();
    let times = time_profiles(m);
    for phi in space_profiles(result) {
        let mass: Vec<f64> = (0..=m)
            .map(|n| interior.iter().map(|&x| phi[x] * w[n][x]).sum::<f64>() * vol)
            .collect();
        let stiff: Vec<f64> = (0..=m)
            .map(|n| {
                let e = op_at(n).energy(&u[n], &phi, |i| space.is_boundary(i));
                let r: f64 = interior.iter().map(|&x| u[n][x] * phi[x]).sum();
                (e + spec.reaction * r) * vol
            })
            .collect();
        let force: Vec<f64> = (0..=m)
            .map(|n| {
                let t = n as f64 * dt;
                interior.iter().map(|&x| (spec.forcing)(t, points[x]) * phi[x]).sum::<f64>() * vol
            })
            .collect();
        for psi in &times {
            let mut b = 0.0;
            for n in 1..m {
                b -= (psi[n + 1] - psi[n]) * mass[n];
            }
            let mut f = 0.0;
            for n in 1..=m {
                b += dt * psi[n] * stiff[n];
                f += dt * psi[n] * force[n];
            }
            values.push(b);
            pairing.push(f);
        }
    }
    WeakFormReport { values, forcing_pairing: pairing }
}

/// Most negative weak-form value over the test family; `≥ −tol` for supersolutions.
pub fn supersolution_residual(result: &SolveResult) -> f64 {
    weak_form_values(result).min()
}
