//! Axis-aligned grid partition of the position plane.

use nalgebra::Vector2;

use crate::error::{Error, Result};

/// Uniform grid over a rectangle of positions.
///
/// Cells are half-open `(lo, hi]` on both axes, so a point on a shared edge
/// belongs to the lower-index cell. The outermost rows and columns extend to
/// infinity, which makes the grid a partition of the whole plane: positions
/// outside `bounds` fall into the nearest boundary cell.
///
/// Cell indices are row-major with `x` fastest: `index = iy * nx + ix`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacePartition {
    min: [f64; 2],
    max: [f64; 2],
    cell_size: [f64; 2],
    dims: [usize; 2],
}

impl SpacePartition {
    /// Partition of `[min, max]` into `dims[0] x dims[1]` equal cells.
    pub fn new(min: [f64; 2], max: [f64; 2], dims: [usize; 2]) -> Result<Self> {
        for a in 0..2 {
            if !(max[a] > min[a]) || !min[a].is_finite() || !max[a].is_finite() {
                return Err(Error::InvalidArgument("partition bounds must be finite with max > min"));
            }
            if dims[a] == 0 {
                return Err(Error::InvalidArgument("partition needs at least one cell per axis"));
            }
        }
        let cell_size = [(max[0] - min[0]) / dims[0] as f64, (max[1] - min[1]) / dims[1] as f64];
        Ok(Self { min, max, cell_size, dims })
    }

    /// Partition of `[min, max]` into square-ish cells of the given size. The
    /// extent must be an integer multiple of the cell size.
    pub fn with_cell_size(min: [f64; 2], max: [f64; 2], cell_size: [f64; 2]) -> Result<Self> {
        let mut dims = [0usize; 2];
        for a in 0..2 {
            if !(cell_size[a] > 0.0) {
                return Err(Error::InvalidArgument("cell size must be positive"));
            }
            let n = (max[a] - min[a]) / cell_size[a];
            let rounded = libm::round(n);
            if rounded < 1.0 || (rounded * cell_size[a] - (max[a] - min[a])).abs() > 1e-9 {
                return Err(Error::InvalidArgument("cell size must tile the bounds exactly"));
            }
            dims[a] = rounded as usize;
        }
        Self::new(min, max, dims)
    }

    pub fn min(&self) -> [f64; 2] {
        self.min
    }

    pub fn max(&self) -> [f64; 2] {
        self.max
    }

    pub fn dims(&self) -> [usize; 2] {
        self.dims
    }

    pub fn cell_size(&self) -> [f64; 2] {
        self.cell_size
    }

    pub fn cell_count(&self) -> usize {
        self.dims[0] * self.dims[1]
    }

    pub fn index_of(&self, ix: usize, iy: usize) -> usize {
        iy * self.dims[0] + ix
    }

    pub fn indices_of(&self, index: usize) -> (usize, usize) {
        (index % self.dims[0], index / self.dims[0])
    }

    fn edge(&self, axis: usize, k: usize) -> f64 {
        if k == self.dims[axis] {
            self.max[axis]
        } else {
            self.min[axis] + k as f64 * self.cell_size[axis]
        }
    }

    /// Finite bounds `((x0, x1), (y0, y1))` of a cell.
    pub fn cell_bounds(&self, index: usize) -> Result<((f64, f64), (f64, f64))> {
        self.check(index)?;
        let (ix, iy) = self.indices_of(index);
        Ok(((self.edge(0, ix), self.edge(0, ix + 1)), (self.edge(1, iy), self.edge(1, iy + 1))))
    }

    /// The region a cell owns: its bounds, with boundary cells extended to
    /// infinity on their outer sides.
    pub fn cell_region(&self, index: usize) -> Result<((f64, f64), (f64, f64))> {
        let ((mut x0, mut x1), (mut y0, mut y1)) = self.cell_bounds(index)?;
        let (ix, iy) = self.indices_of(index);
        if ix == 0 {
            x0 = f64::NEG_INFINITY;
        }
        if ix + 1 == self.dims[0] {
            x1 = f64::INFINITY;
        }
        if iy == 0 {
            y0 = f64::NEG_INFINITY;
        }
        if iy + 1 == self.dims[1] {
            y1 = f64::INFINITY;
        }
        Ok(((x0, x1), (y0, y1)))
    }

    pub fn cell_center(&self, index: usize) -> Result<Vector2<f64>> {
        let ((x0, x1), (y0, y1)) = self.cell_bounds(index)?;
        Ok(Vector2::new(0.5 * (x0 + x1), 0.5 * (y0 + y1)))
    }

    fn locate_axis(&self, axis: usize, v: f64) -> usize {
        let t = (v - self.min[axis]) / self.cell_size[axis];
        if t.is_nan() {
            return 0;
        }
        let k = libm::ceil(t) - 1.0;
        if k < 0.0 {
            0
        } else if k >= self.dims[axis] as f64 {
            self.dims[axis] - 1
        } else {
            k as usize
        }
    }

    /// Grid coordinates of the cell containing `(x, y)`, clamped to the grid.
    pub fn locate_indices(&self, x: f64, y: f64) -> (usize, usize) {
        (self.locate_axis(0, x), self.locate_axis(1, y))
    }

    /// Index of the cell containing `(x, y)`, clamped to the grid.
    pub fn locate(&self, x: f64, y: f64) -> usize {
        let (ix, iy) = self.locate_indices(x, y);
        self.index_of(ix, iy)
    }

    fn check(&self, index: usize) -> Result<()> {
        if index < self.cell_count() {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                index,
                len: self.cell_count(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiling_is_checked() {
        assert!(SpacePartition::with_cell_size([-2500.0; 2], [2500.0; 2], [50.0; 2]).is_ok());
        assert!(SpacePartition::with_cell_size([0.0; 2], [100.0; 2], [30.0; 2]).is_err());
        assert!(SpacePartition::new([0.0; 2], [0.0, 1.0], [1, 1]).is_err());
        let p = SpacePartition::with_cell_size([-2500.0; 2], [2500.0; 2], [50.0; 2]).unwrap();
        assert_eq!(p.dims(), [100, 100]);
        assert_eq!(p.cell_count(), 10_000);
    }

    #[test]
    fn locate_edges_and_clamping() {
        let p = SpacePartition::new([0.0, 0.0], [30.0, 20.0], [3, 2]).unwrap();
        assert_eq!(p.locate(5.0, 5.0), 0);
        // shared edge x = 10 belongs to the lower cell
        assert_eq!(p.locate(10.0, 5.0), 0);
        assert_eq!(p.locate(10.000001, 5.0), 1);
        assert_eq!(p.locate(25.0, 15.0), p.index_of(2, 1));
        assert_eq!(p.locate(-100.0, -100.0), 0);
        assert_eq!(p.locate(1e9, 1e9), 5);
        assert_eq!(p.locate(0.0, 0.0), 0);
    }

    #[test]
    fn regions_extend_outward() {
        let p = SpacePartition::new([0.0, 0.0], [30.0, 20.0], [3, 2]).unwrap();
        let ((x0, x1), (y0, y1)) = p.cell_region(0).unwrap();
        assert_eq!((x0, x1, y0, y1), (f64::NEG_INFINITY, 10.0, f64::NEG_INFINITY, 10.0));
        let ((x0, x1), (y0, y1)) = p.cell_region(4).unwrap();
        assert_eq!((x0, x1, y0, y1), (10.0, 20.0, 10.0, f64::INFINITY));
        assert_eq!(p.cell_center(4).unwrap(), Vector2::new(15.0, 15.0));
        assert!(p.cell_region(6).is_err());
    }
}
