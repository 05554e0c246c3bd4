use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SpaceGrid;
use crate::error::{Error, Result};

/// Diagonal coefficient `A(n, x) = diag(a₁, a₂)`; the second entry is unused in 1D.
pub type CoefficientFn = dyn Fn(usize, [f64; 2]) -> [f64; 2] + Send + Sync;

/// Seed used when the caller does not choose one.
pub const DEFAULT_SAMPLING_SEED: u64 = 0x5eed_0001;

/// Checked diffusion coefficient with ellipticity bounds `ν` and `Λ`.
#[derive(Clone)]
pub struct CoefficientField {
    eval: Arc<CoefficientFn>,
    dim: usize,
    nu: f64,
    lambda: f64,
    time_dependent: bool,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField")
            .field("dim", &self.dim)
            .field("nu", &self.nu)
            .field("lambda", &self.lambda)
            .field("time_dependent", &self.time_dependent)
            .finish()
    }
}

/// Number of random (time, point) probes drawn at construction.
pub const ELLIPTICITY_SAMPLES: usize = 2000;

impl CoefficientField {
    /// Wraps `eval` after probing it at random times `0..=time_levels` and
    /// random points of `space`: every probe must satisfy `a_i ≥ ν` and
    /// `|A|_F ≤ Λ`.
    pub fn new(
        space: &SpaceGrid,
        time_levels: usize,
        nu: f64,
        lambda: f64,
        time_dependent: bool,
        seed: u64,
        eval: Arc<CoefficientFn>,
    ) -> Result<Self> {
        if !(nu > 0.0 && lambda >= nu && lambda.is_finite()) {
            return Err(Error::Coefficients(format!(
                "need 0 < nu <= lambda, got nu={nu}, lambda={lambda}"
            )));
        }
        let field = Self { eval, dim: space.dim(), nu, lambda, time_dependent };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..ELLIPTICITY_SAMPLES {
            let n = if time_dependent { rng.gen_range(0..=time_levels) } else { 0 };
            let mut p = [0.0; 2];
            for (d, axis) in space.axes().iter().enumerate() {
                p[d] = rng.gen_range(axis.lower..=axis.upper);
            }
            field.check_point(n, p)?;
        }
        // the cell centres are where the solver actually evaluates
        for idx in space.interior() {
            field.check_point(0, space.point(idx))?;
        }
        Ok(field)
    }

    fn check_point(&self, n: usize, p: [f64; 2]) -> Result<()> {
        let a = (self.eval)(n, p);
        let entries = &a[..self.dim];
        let min = entries.iter().copied().fold(f64::INFINITY, f64::min);
        let frob = entries.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(min >= self.nu * (1.0 - 1e-12)) {
            return Err(Error::Coefficients(format!(
                "ellipticity fails at time index {n}, point {p:?}: min eigenvalue {min} < nu={}",
                self.nu
            )));
        }
        if !(frob <= self.lambda * (1.0 + 1e-12)) {
            return Err(Error::Coefficients(format!(
                "bound fails at time index {n}, point {p:?}: |A|_F={frob} > lambda={}",
                self.lambda
            )));
        }
        Ok(())
    }

    /// `A ≡ a·I`.
    pub fn constant(space: &SpaceGrid, a: f64) -> Result<Self> {
        let lambda = a * (space.dim() as f64).sqrt();
        Self::new(space, 0, a, lambda, false, DEFAULT_SAMPLING_SEED, Arc::new(move |_, _| [a, a]))
    }

    pub fn eval(&self, n: usize, p: [f64; 2]) -> [f64; 2] {
        (self.eval)(n, p)
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn lambda_bound(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_time_dependent(&self) -> bool {
        self.time_dependent
    }

    /// The same field on coordinates `y = (x − x₀)/r`, time indices unchanged:
    /// `B(n, y) = A(n, x₀ + r·y)`. Ellipticity bounds carry over.
    pub fn transported(&self, x0: [f64; 2], r: f64) -> Self {
        let inner = Arc::clone(&self.eval);
        Self {
            eval: Arc::new(move |n, y| inner(n, [x0[0] + r * y[0], x0[1] + r * y[1]])),
            ..self.clone()
        }
    }
}

/// Two-valued field on blocks of `period` cells per axis, optionally flipping
/// every `time_flip` time levels. `ν = low`, `Λ = high·√N`.
pub fn checkerboard_coefficients(
    space: &SpaceGrid,
    period: usize,
    low: f64,
    high: f64,
    time_flip: Option<usize>,
) -> Result<CoefficientField> {
    if !(low > 0.0 && high >= low) {
        return Err(Error::Coefficients(format!(
            "checkerboard needs 0 < low <= high, got low={low}, high={high}"
        )));
    }
    if period == 0 || time_flip == Some(0) {
        return Err(Error::Coefficients("checkerboard periods must be positive".into()));
    }
    let origin: Vec<(f64, f64)> = space.axes().iter().map(|a| (a.lower, a.h())).collect();
    let dim = space.dim();
    let eval = move |n: usize, p: [f64; 2]| {
        let mut parity = time_flip.map_or(0, |k| n / k);
        for (d, &(lo, h)) in origin.iter().enumerate() {
            let cell = ((p[d] - lo) / h).floor().max(0.0) as usize;
            parity += cell / period;
        }
        let v = if parity.is_multiple_of(2) { low } else { high };
        [v, v]
    };
    let nu = low;
    let lambda = high * (dim as f64).sqrt();
    // probing covers a generous number of time levels to exercise the flips
    let levels = time_flip.map_or(0, |k| 4 * k);
    CoefficientField::new(
        space,
        levels,
        nu,
        lambda,
        time_flip.is_some(),
        DEFAULT_SAMPLING_SEED,
        Arc::new(eval),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_checkerboard_is_constant() {
        let g = SpaceGrid::new_1d(0.0, 1.0, 16).unwrap();
        let c = checkerboard_coefficients(&g, 2, 1.0, 1.0, None).unwrap();
        assert_eq!(c.nu(), 1.0);
        assert_eq!(c.lambda_bound(), 1.0);
        for idx in g.interior() {
            assert_eq!(c.eval(0, g.point(idx))[0], 1.0);
        }
    }

    #[test]
    fn two_valued_checkerboard() {
        let g = SpaceGrid::new_2d((0.0, 1.0, 8), (0.0, 1.0, 8)).unwrap();
        let c = checkerboard_coefficients(&g, 2, 1.0, 5.0, None).unwrap();
        let mut seen: Vec<f64> = g.interior().iter().map(|&i| c.eval(0, g.point(i))[0]).collect();
        seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        seen.dedup();
        assert_eq!(seen, vec![1.0, 5.0]);
        assert_eq!(c.nu(), 1.0);
    }

    #[test]
    fn time_flip_changes_values() {
        let g = SpaceGrid::new_1d(0.0, 1.0, 8).unwrap();
        let c = checkerboard_coefficients(&g, 2, 1.0, 5.0, Some(3)).unwrap();
        let p = g.point(1);
        assert_ne!(c.eval(2, p)[0], c.eval(3, p)[0]);
        assert_eq!(c.eval(0, p)[0], c.eval(2, p)[0]);
    }

    #[test]
    fn sampling_rejects_bad_fields() {
        let g = SpaceGrid::new_1d(0.0, 1.0, 8).unwrap();
        let bad = CoefficientField::new(&g, 0, 1.0, 2.0, false, 7, Arc::new(|_, p| {
            let v = if p[0] > 0.5 { 0.5 } else { 1.0 };
            [v, v]
        }));
        assert!(matches!(bad, Err(Error::Coefficients(_))));
        let big = CoefficientField::new(&g, 0, 1.0, 2.0, false, 7, Arc::new(|_, _| [3.0, 3.0]));
        assert!(big.is_err());
    }
}
