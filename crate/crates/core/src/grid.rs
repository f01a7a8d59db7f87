//! Uniform one-dimensional grids with boundary metadata.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// Interior points of (−L, L), Dirichlet at ±L.
    Line,
    /// Interior points of (0, L), Dirichlet at 0 and L; the first point is h.
    Halfline,
    /// [−L, L) with wrap-around.
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Dirichlet,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub kind: GridKind,
    /// L.
    pub half_length: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(kind: GridKind, half_length: f64, n: usize) -> Result<Self> {
        ensure(half_length > 0.0 && half_length.is_finite(), "L", "L > 0", half_length)?;
        ensure(n >= 16, "n", "n >= 16", n)?;
        Ok(Grid1D { kind, half_length, n })
    }

    pub fn line(half_length: f64, n: usize) -> Result<Self> {
        Self::new(GridKind::Line, half_length, n)
    }

    pub fn halfline(length: f64, n: usize) -> Result<Self> {
        Self::new(GridKind::Halfline, length, n)
    }

    pub fn periodic(half_length: f64, n: usize) -> Result<Self> {
        Self::new(GridKind::Periodic, half_length, n)
    }

    /// Grid of the given kind whose spacing is as close as possible to `step`.
    pub fn with_step(kind: GridKind, half_length: f64, step: f64) -> Result<Self> {
        ensure(step > 0.0, "step", "step > 0", step)?;
        let cells = match kind {
            GridKind::Line | GridKind::Periodic => 2.0 * half_length / step,
            GridKind::Halfline => half_length / step,
        };
        let cells = cells.round().max(1.0) as usize;
        let n = match kind {
            GridKind::Periodic => cells,
            _ => cells.saturating_sub(1),
        };
        Self::new(kind, half_length, n)
    }

    pub fn boundary(&self) -> Boundary {
        match self.kind {
            GridKind::Periodic => Boundary::Periodic,
            _ => Boundary::Dirichlet,
        }
    }

    pub fn extent(&self) -> f64 {
        match self.kind {
            GridKind::Halfline => self.half_length,
            _ => 2.0 * self.half_length,
        }
    }

    pub fn spacing(&self) -> f64 {
        match self.kind {
            GridKind::Periodic => self.extent() / self.n as f64,
            _ => self.extent() / (self.n + 1) as f64,
        }
    }

    /// Coordinate of index j; j = −1 and j = n give the boundary/exterior points.
    pub fn coord(&self, j: isize) -> f64 {
        let h = self.spacing();
        match self.kind {
            GridKind::Line => -self.half_length + (j + 1) as f64 * h,
            GridKind::Halfline => (j + 1) as f64 * h,
            GridKind::Periodic => -self.half_length + j as f64 * h,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n as isize).map(|j| self.coord(j)).collect()
    }

    /// Distance from the origin of each point (|x| on the line, r on the half-line).
    pub fn radii(&self) -> Vec<f64> {
        self.points().into_iter().map(f64::abs).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_endpoints() {
        let g = Grid1D::line(1.0, 19).unwrap();
        assert!((g.spacing() - 0.1).abs() < 1e-15);
        assert!((g.coord(0) + 0.9).abs() < 1e-15);
        assert!((g.coord(18) - 0.9).abs() < 1e-14);
        let g = Grid1D::halfline(2.0, 19).unwrap();
        assert!((g.coord(0) - 0.1).abs() < 1e-15);
        assert!(g.points().iter().all(|&x| x > 0.0));
        let g = Grid1D::periodic(1.0, 20).unwrap();
        assert_eq!(g.coord(0), -1.0);
        assert_eq!(g.boundary(), Boundary::Periodic);
    }

    #[test]
    fn with_step_rounds() {
        let g = Grid1D::with_step(GridKind::Line, 200.0, 0.05).unwrap();
        assert_eq!(g.n, 7999);
        assert!((g.spacing() - 0.05).abs() < 1e-14);
        let g = Grid1D::with_step(GridKind::Halfline, 200.0, 1e-3).unwrap();
        assert!((g.coord(0) - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(Grid1D::line(1.0, 4).is_err());
        assert!(Grid1D::line(-1.0, 40).is_err());
    }
}
