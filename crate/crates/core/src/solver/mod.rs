//! Implicit L1 / finite-difference solver for `∂ₜᵅ(u − u₀) − div(A Du) + σu = f`
//! with Dirichlet data on an interval or a rectangle.
//!
//! Space: cell-centred differences, harmonic means of the cell coefficients on
//! interior faces, `2a/h²` on boundary faces. Time: the L1 scheme in convex form
//! `c₀[u^n − Σ_{j=1}^{n−1}(b_{j−1} − b_j)u^{n−j} − b_{n−1}u⁰]`, `c₀ = dt^{−α}/Γ(2−α)`,
//! so every step solves an M-matrix system.

mod coefficients;
mod grid;
mod io;
pub mod linalg;
mod weak;

use std::fmt;
use std::sync::Arc;

pub use coefficients::{
    checkerboard_coefficients, CoefficientField, CoefficientFn, DEFAULT_SAMPLING_SEED,
    ELLIPTICITY_SAMPLES,
};
pub use grid::{Axis, SpaceGrid};
pub use io::{read_binary, SolutionArray, BINARY_MAGIC, BINARY_VERSION};
pub use weak::{supersolution_residual, weak_form_values, WeakFormReport};

use crate::error::{domain, Error, Result};
use crate::fracops::{l1_weights, SampledPath, TimeGrid};
use crate::kernels::FractionalOrder;
use crate::special::rgamma;

/// Scalar function of `(t, x)`; `x[1]` is 0 in 1D.
pub type ScalarField = Arc<dyn Fn(f64, [f64; 2]) -> f64 + Send + Sync>;

/// First-step treatment of the L1 scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum L1Variant {
    /// Plain L1. Keeps the discrete maximum principle; order 1 for data with
    /// the typical `t^α` start-up singularity.
    #[default]
    Plain,
    /// Adds `½(f⁰ − (L + σ)u⁰)` to the first step, recovering order close to
    /// `2 − α` for smooth data. The first step then loses the M-matrix sign
    /// structure in its right-hand side.
    Corrected,
}

pub const LINEAR_TOLERANCE: f64 = 1e-12;

/// Everything needed to run a solve.
#[derive(Clone)]
pub struct ProblemSpec {
    pub alpha: FractionalOrder,
    pub space: SpaceGrid,
    pub time: TimeGrid,
    /// initial values on interior cells, in [`SpaceGrid::interior`] order
    pub u0: Vec<f64>,
    pub boundary: ScalarField,
    pub forcing: ScalarField,
    pub coefficients: CoefficientField,
    /// reaction coefficient σ ≥ 0
    pub reaction: f64,
    pub variant: L1Variant,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("alpha", &self.alpha)
            .field("space", &self.space)
            .field("time", &self.time)
            .field("cells", &self.u0.len())
            .field("coefficients", &self.coefficients)
            .field("reaction", &self.reaction)
            .field("variant", &self.variant)
            .finish()
    }
}

pub fn zero_field() -> ScalarField {
    Arc::new(|_, _| 0.0)
}

pub fn constant_field(c: f64) -> ScalarField {
    Arc::new(move |_, _| c)
}

impl ProblemSpec {
    /// Zero boundary data and forcing, no reaction, plain L1.
    pub fn new(
        alpha: FractionalOrder,
        space: SpaceGrid,
        time: TimeGrid,
        u0: Vec<f64>,
        coefficients: CoefficientField,
    ) -> Self {
        Self {
            alpha,
            space,
            time,
            u0,
            boundary: zero_field(),
            forcing: zero_field(),
            coefficients,
            reaction: 0.0,
            variant: L1Variant::Plain,
        }
    }

    /// `u0` sampled at cell centres.
    pub fn u0_from_fn(space: &SpaceGrid, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        space.interior().into_iter().map(|i| f(space.point(i))).collect()
    }

    pub fn with_boundary(mut self, g: ScalarField) -> Self {
        self.boundary = g;
        self
    }

    pub fn with_forcing(mut self, f: ScalarField) -> Self {
        self.forcing = f;
        self
    }

    pub fn with_reaction(mut self, sigma: f64) -> Self {
        self.reaction = sigma;
        self
    }

    pub fn with_variant(mut self, v: L1Variant) -> Self {
        self.variant = v;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.u0.len() != self.space.cells() {
            return Err(Error::GridMismatch(format!(
                "u0 has {} entries for {} cells",
                self.u0.len(),
                self.space.cells()
            )));
        }
        if self.u0.iter().any(|v| !v.is_finite()) {
            return Err(domain("u0 must be finite"));
        }
        if self.coefficients.dim() != self.space.dim() {
            return Err(Error::GridMismatch("coefficient field dimension differs from grid".into()));
        }
        if !(self.reaction >= 0.0 && self.reaction.is_finite()) {
            return Err(domain(format!("reaction must be nonnegative, got {}", self.reaction)));
        }
        Ok(())
    }

    /// Full time level 0: `u0` inside, `g_D(0, ·)` on the boundary.
    pub fn initial_level(&self) -> Vec<f64> {
        let mut level = vec![0.0; self.space.nodes()];
        for (k, idx) in self.space.interior().into_iter().enumerate() {
            level[idx] = self.u0[k];
        }
        self.fill_boundary(&mut level, 0.0);
        level
    }

    fn fill_boundary(&self, level: &mut [f64], t: f64) {
        for idx in self.space.boundary() {
            level[idx] = (self.boundary)(t, self.space.point(idx));
        }
    }

    pub fn c0(&self) -> f64 {
        let a = self.alpha.value();
        self.time.dt().powf(-a) * rgamma(2.0 - a)
    }
}

/// Face weights `w/h²` of `−div_h(A∇_h ·)` at one time level.
#[derive(Debug, Clone)]
pub(crate) struct Operator {
    dim: usize,
    nx: usize,
    ny: usize,
    /// 1D: face k sits between nodes k and k+1, k = 0..=nx.
    /// 2D: x-face between (ix, iy) and (ix+1, iy), index ix·ny + (iy−1).
    wx: Vec<f64>,
    /// 2D: y-face between (ix, iy) and (ix, iy+1), index (ix−1)·(ny+1) + iy.
    wy: Vec<f64>,
}

fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

impl Operator {
    pub(crate) fn assemble(space: &SpaceGrid, coeff: &CoefficientField, n: usize) -> Self {
        let ax = space.axis(0);
        let nx = ax.cells;
        let hx2 = ax.h() * ax.h();
        if space.dim() == 1 {
            let a: Vec<f64> = (1..=nx).map(|i| coeff.eval(n, space.point(i))[0]).collect();
            let mut wx = Vec::with_capacity(nx + 1);
            wx.push(2.0 * a[0] / hx2);
            for i in 1..nx {
                wx.push(harmonic(a[i - 1], a[i]) / hx2);
            }
            wx.push(2.0 * a[nx - 1] / hx2);
            return Self { dim: 1, nx, ny: 1, wx, wy: Vec::new() };
        }
        let ay = space.axis(1);
        let ny = ay.cells;
        let hy2 = ay.h() * ay.h();
        let cell = |ix: usize, iy: usize| coeff.eval(n, space.point(space.index(ix, iy)));
        let vals: Vec<[f64; 2]> = (1..=nx)
            .flat_map(|ix| (1..=ny).map(move |iy| (ix, iy)))
            .map(|(ix, iy)| cell(ix, iy))
            .collect();
        let at = |ix: usize, iy: usize| vals[(ix - 1) * ny + (iy - 1)];
        let mut wx = vec![0.0; (nx + 1) * ny];
        for ix in 0..=nx {
            for iy in 1..=ny {
                wx[ix * ny + iy - 1] = if ix == 0 {
                    2.0 * at(1, iy)[0]
                } else if ix == nx {
                    2.0 * at(nx, iy)[0]
                } else {
                    harmonic(at(ix, iy)[0], at(ix + 1, iy)[0])
                } / hx2;
            }
        }
        let mut wy = vec![0.0; nx * (ny + 1)];
        for ix in 1..=nx {
            for iy in 0..=ny {
                wy[(ix - 1) * (ny + 1) + iy] = if iy == 0 {
                    2.0 * at(ix, 1)[1]
                } else if iy == ny {
                    2.0 * at(ix, ny)[1]
                } else {
                    harmonic(at(ix, iy)[1], at(ix, iy + 1)[1])
                } / hy2;
            }
        }
        Self { dim: 2, nx, ny, wx, wy }
    }

    fn stride(&self) -> usize {
        self.ny + 2
    }

    /// Calls `f(cell, neighbour, weight)` for each face of each interior cell.
    fn for_each_face(&self, mut f: impl FnMut(usize, usize, f64)) {
        if self.dim == 1 {
            for i in 1..=self.nx {
                f(i, i - 1, self.wx[i - 1]);
                f(i, i + 1, self.wx[i]);
            }
            return;
        }
        let s = self.stride();
        let ny = self.ny;
        for ix in 1..=self.nx {
            for iy in 1..=ny {
                let c = ix * s + iy;
                f(c, c - s, self.wx[(ix - 1) * ny + iy - 1]);
                f(c, c + s, self.wx[ix * ny + iy - 1]);
                f(c, c - 1, self.wy[(ix - 1) * (ny + 1) + iy - 1]);
                f(c, c + 1, self.wy[(ix - 1) * (ny + 1) + iy]);
            }
        }
    }

    /// `(L u)` on interior cells of a full level (boundary entries are data).
    pub(crate) fn apply(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        self.for_each_face(|c, nb, w| out[c] += w * (u[c] - u[nb]));
    }

    /// Sum of face weights per interior cell.
    fn diagonal(&self, len: usize) -> Vec<f64> {
        let mut d = vec![0.0; len];
        self.for_each_face(|c, _, w| d[c] += w);
        d
    }

    /// Σ_faces w (u_c − u_nb)(η_c − η_nb), each interior face counted once,
    /// boundary faces with the boundary entries of `u` and `eta`.
    pub(crate) fn energy(&self, u: &[f64], eta: &[f64], is_boundary: impl Fn(usize) -> bool) -> f64 {
        let mut s = 0.0;
        self.for_each_face(|c, nb, w| {
            // interior faces are visited from both sides
            let share = if is_boundary(nb) { 1.0 } else { 0.5 };
            s += share * w * (u[c] - u[nb]) * (eta[c] - eta[nb]);
        });
        s
    }
}

/// A solved problem: every time level in the full node layout.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub spec: ProblemSpec,
    /// `u[n]` is time level n, length `space.nodes()`
    pub u: Vec<Vec<f64>>,
    /// relative linear residual per step (entry 0 is 0)
    pub residuals: Vec<f64>,
}

impl SolveResult {
    pub fn level(&self, n: usize) -> &[f64] {
        &self.u[n]
    }

    pub fn space(&self) -> &SpaceGrid {
        &self.spec.space
    }

    pub fn time(&self) -> TimeGrid {
        self.spec.time
    }

    /// Max |u| over all nodes and levels.
    pub fn max_abs(&self) -> f64 {
        self.u.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Min and max of the data (`u0` and boundary data on the time grid).
    pub fn data_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in &self.spec.u0 {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
        let b = self.spec.space.boundary();
        for level in &self.u {
            for &idx in &b {
                lo = lo.min(level[idx]);
                hi = hi.max(level[idx]);
            }
        }
        (lo, hi)
    }
}

/// Runs the implicit scheme over all time levels.
pub fn solve_subdiffusion(spec: &ProblemSpec) -> Result<SolveResult> {
    spec.validate()?;
    let space = &spec.space;
    let m = spec.time.steps();
    let dt = spec.time.dt();
    let nodes = space.nodes();
    let interior = space.interior();
    let boundary = space.boundary();
    let points: Vec<[f64; 2]> = (0..nodes).map(|i| space.point(i)).collect();
    let b = l1_weights(spec.alpha, m);
    let c0 = spec.c0();
    let sigma = spec.reaction;

    let mut levels: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    levels.push(spec.initial_level());
    let mut residuals = vec![0.0];

    let static_op = (!spec.coefficients.is_time_dependent())
        .then(|| Operator::assemble(space, &spec.coefficients, 0));

    let mut first_step_extra = vec![0.0; nodes];
    if spec.variant == L1Variant::Corrected {
        let op0 = static_op
            .clone()
            .unwrap_or_else(|| Operator::assemble(space, &spec.coefficients, 0));
        let mut lu = vec![0.0; nodes];
        op0.apply(&levels[0], &mut lu);
        for &i in &interior {
            first_step_extra[i] =
                0.5 * ((spec.forcing)(0.0, points[i]) - lu[i] - sigma * levels[0][i]);
        }
    }

    for n in 1..=m {
        let t = n as f64 * dt;
        let op_owned;
        let op = match &static_op {
            Some(op) => op,
            None => {
                op_owned = Operator::assemble(space, &spec.coefficients, n);
                &op_owned
            }
        };
        let mut next = vec![0.0; nodes];
        for &idx in &boundary {
            next[idx] = (spec.boundary)(t, points[idx]);
        }
        // right-hand side on interior cells
        let mut rhs = vec![0.0; nodes];
        for &i in &interior {
            let mut hist = b[n - 1] * levels[0][i];
            for j in 1..n {
                hist += (b[j - 1] - b[j]) * levels[n - j][i];
            }
            rhs[i] = c0 * hist + (spec.forcing)(t, points[i]);
            if n == 1 {
                rhs[i] += first_step_extra[i];
            }
        }
        op.for_each_face(|c, nb, w| {
            if space.is_boundary(nb) {
                rhs[c] += w * next[nb];
            }
        });
        let mut diag = op.diagonal(nodes);
        for &i in &interior {
            diag[i] += c0 + sigma;
        }
        let residual = if space.dim() == 1 {
            solve_tridiagonal(op, &diag, &rhs, &mut next)
        } else {
            solve_cg(op, &diag, &rhs, &levels[n - 1], &boundary, &mut next, space)?
        };
        if !(residual <= LINEAR_TOLERANCE) {
            return Err(Error::LinearSolve { residual, iterations: 1 });
        }
        residuals.push(residual);
        levels.push(next);
    }
    Ok(SolveResult { spec: spec.clone(), u: levels, residuals })
}

fn relative_residual(op: &Operator, diag: &[f64], rhs: &[f64], x_homog: &[f64]) -> f64 {
    // residual of the interior system with boundary entries of x zeroed
    let mut ax = vec![0.0; x_homog.len()];
    op.for_each_face(|c, nb, w| ax[c] -= w * x_homog[nb]);
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, d) in diag.iter().enumerate() {
        if *d == 0.0 {
            continue;
        }
        let r = rhs[i] - (ax[i] + d * x_homog[i]);
        num += r * r;
        den += rhs[i] * rhs[i];
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

fn solve_tridiagonal(op: &Operator, diag: &[f64], rhs: &[f64], level: &mut [f64]) -> f64 {
    let nx = op.nx;
    let lower: Vec<f64> = (0..nx).map(|k| -op.wx[k]).collect();
    let upper: Vec<f64> = (0..nx).map(|k| -op.wx[k + 1]).collect();
    let x = linalg::thomas(&lower, &diag[1..=nx], &upper, &rhs[1..=nx]);
    let mut homog = vec![0.0; level.len()];
    homog[1..=nx].copy_from_slice(&x);
    level[1..=nx].copy_from_slice(&x);
    relative_residual(op, diag, rhs, &homog)
}

fn solve_cg(
    op: &Operator,
    diag: &[f64],
    rhs: &[f64],
    guess: &[f64],
    boundary: &[usize],
    level: &mut [f64],
    space: &SpaceGrid,
) -> Result<f64> {
    let n = level.len();
    let mut x = guess.to_vec();
    let mut pdiag = diag.to_vec();
    for &i in boundary {
        x[i] = 0.0;
        pdiag[i] = 1.0;
    }
    let apply = |v: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|o| *o = 0.0);
        op.for_each_face(|c, nb, w| {
            if !space.is_boundary(nb) {
                out[c] -= w * v[nb];
            }
        });
        for i in 0..n {
            out[i] += diag[i] * v[i];
        }
    };
    let max_iter = 20 * n + 100;
    let rel = linalg::conjugate_gradient(apply, &pdiag, rhs, &mut x, LINEAR_TOLERANCE, max_iter)?;
    for i in 0..n {
        if !space.is_boundary(i) {
            level[i] = x[i];
        }
    }
    Ok(rel)
}

/// L1 solution of `∂ₜᵅ(u − u₀) + σu = 0`, using the corrected first step.
/// Accepts α = 1 (backward differences with a trapezoidal first step).
pub fn solve_scalar_relaxation(
    alpha: FractionalOrder,
    sigma: f64,
    u0: f64,
    time: TimeGrid,
) -> Result<SampledPath> {
    solve_scalar_relaxation_with(alpha, sigma, u0, time, L1Variant::Corrected)
}

pub fn solve_scalar_relaxation_with(
    alpha: FractionalOrder,
    sigma: f64,
    u0: f64,
    time: TimeGrid,
    variant: L1Variant,
) -> Result<SampledPath> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(domain(format!("sigma must be nonnegative, got {sigma}")));
    }
    let m = time.steps();
    let a = alpha.value();
    let b = l1_weights(alpha, m);
    let c0 = time.dt().powf(-a) * rgamma(2.0 - a);
    let mut u = Vec::with_capacity(m + 1);
    u.push(u0);
    for n in 1..=m {
        let mut hist = b[n - 1] * u0;
        for j in 1..n {
            hist += (b[j - 1] - b[j]) * u[n - j];
        }
        let mut rhs = c0 * hist;
        if n == 1 && variant == L1Variant::Corrected {
            rhs -= 0.5 * sigma * u0;
        }
        u.push(rhs / (c0 + sigma));
    }
    SampledPath::new(time, u)
}

#[cfg(test)]
mod tests;
