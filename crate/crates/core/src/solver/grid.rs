use crate::error::{domain, Result};

/// One uniform axis split into `cells` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lower: f64,
    pub upper: f64,
    pub cells: usize,
}

impl Axis {
    pub fn new(lower: f64, upper: f64, cells: usize) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && upper > lower) {
            return Err(domain(format!("axis bounds must satisfy lower < upper, got [{lower}, {upper}]")));
        }
        if cells < 4 {
            return Err(domain(format!("need at least 4 cells per axis, got {cells}")));
        }
        Ok(Self { lower, upper, cells })
    }

    pub fn h(&self) -> f64 {
        (self.upper - self.lower) / self.cells as f64
    }

    /// Node coordinate: 0 is the lower face, 1..=cells the centres, cells+1 the upper face.
    pub fn node(&self, i: usize) -> f64 {
        if i == 0 {
            self.lower
        } else if i > self.cells {
            self.upper
        } else {
            self.lower + (i as f64 - 0.5) * self.h()
        }
    }

    /// Extent of interior cell `i` (1-based).
    pub fn cell_bounds(&self, i: usize) -> (f64, f64) {
        let h = self.h();
        (self.lower + (i - 1) as f64 * h, self.lower + i as f64 * h)
    }

    /// Nodes along the axis, boundary entries included.
    pub fn nodes(&self) -> usize {
        self.cells + 2
    }
}

/// Cell-centred grid on an interval or a rectangle.
///
/// A time level is stored with boundary entries: `cells + 2` values in 1D,
/// `(nx + 2)·(ny + 2)` values row-major in 2D (x index major).
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceGrid {
    axes: Vec<Axis>,
}

impl SpaceGrid {
    pub fn new_1d(lower: f64, upper: f64, cells: usize) -> Result<Self> {
        Ok(Self { axes: vec![Axis::new(lower, upper, cells)?] })
    }

    pub fn new_2d(x: (f64, f64, usize), y: (f64, f64, usize)) -> Result<Self> {
        Ok(Self { axes: vec![Axis::new(x.0, x.1, x.2)?, Axis::new(y.0, y.1, y.2)?] })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, d: usize) -> Axis {
        self.axes[d]
    }

    /// Interior cell count.
    pub fn cells(&self) -> usize {
        self.axes.iter().map(|a| a.cells).product()
    }

    /// Entries in a time level, boundary included.
    pub fn nodes(&self) -> usize {
        self.axes.iter().map(|a| a.nodes()).product()
    }

    /// Cell volume h^N.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.h()).product()
    }


    /// Flat index of the node with per-axis node indices `(ix, iy)`; `iy` is ignored in 1D.
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        if self.dim() == 1 {
            ix
        } else {
            ix * self.axes[1].nodes() + iy
        }
    }

    /// Per-axis node indices of a flat index.
    pub fn split(&self, idx: usize) -> (usize, usize) {
        if self.dim() == 1 {
            (idx, 0)
        } else {
            let ny = self.axes[1].nodes();
            (idx / ny, idx % ny)
        }
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let (ix, iy) = self.split(idx);
        let a = self.axes[0];
        if ix == 0 || ix == a.cells + 1 {
            return true;
        }
        if self.dim() == 2 {
            let b = self.axes[1];
            return iy == 0 || iy == b.cells + 1;
        }
        false
    }

    /// Coordinates of a flat node index (`y = 0` in 1D).
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let (ix, iy) = self.split(idx);
        let x = self.axes[0].node(ix);
        let y = if self.dim() == 2 { self.axes[1].node(iy) } else { 0.0 };
        [x, y]
    }

    /// Flat indices of interior cells, in the order used for `u0`.
    pub fn interior(&self) -> Vec<usize> {
        let a = self.axes[0];
        if self.dim() == 1 {
            (1..=a.cells).collect()
        } else {
            let b = self.axes[1];
            let mut v = Vec::with_capacity(a.cells * b.cells);
            for ix in 1..=a.cells {
                for iy in 1..=b.cells {
                    v.push(self.index(ix, iy));
                }
            }
            v
        }
    }

    /// Flat indices of boundary nodes.
    pub fn boundary(&self) -> Vec<usize> {
        (0..self.nodes()).filter(|&i| self.is_boundary(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_1d() {
        let g = SpaceGrid::new_1d(0.0, 1.0, 4).unwrap();
        assert_eq!(g.nodes(), 6);
        assert_eq!(g.point(0)[0], 0.0);
        assert!((g.point(1)[0] - 0.125).abs() < 1e-15);
        assert_eq!(g.point(5)[0], 1.0);
        assert_eq!(g.interior(), vec![1, 2, 3, 4]);
        assert_eq!(g.boundary(), vec![0, 5]);
    }

    #[test]
    fn layout_2d() {
        let g = SpaceGrid::new_2d((0.0, 1.0, 4), (0.0, 2.0, 5)).unwrap();
        assert_eq!(g.nodes(), 6 * 7);
        assert_eq!(g.interior().len(), 20);
        assert_eq!(g.boundary().len(), 42 - 20);
        let idx = g.index(2, 3);
        assert_eq!(g.split(idx), (2, 3));
        assert!((g.cell_volume() - 0.25 * 0.4).abs() < 1e-15);
    }

    #[test]
    fn rejects_coarse_axes() {
        assert!(SpaceGrid::new_1d(0.0, 1.0, 3).is_err());
        assert!(SpaceGrid::new_1d(1.0, 1.0, 8).is_err());
    }
}
