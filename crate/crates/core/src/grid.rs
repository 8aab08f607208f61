use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform transverse grid, x in micrometres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if n_points < 3 {
            return Err(Error::Config(format!(
                "grid needs at least 3 points, got {n_points}"
            )));
        }
        if !(x_max > x_min) {
            return Err(Error::Config(format!(
                "grid bounds out of order: [{x_min}, {x_max}]"
            )));
        }
        Ok(Grid { x_min, x_max, n_points })
    }

    /// Grid symmetric about x = 0 with the requested half-width, snapped so
    /// that the spacing is exactly `dx`.
    pub fn symmetric(half_width: f64, dx: f64) -> Result<Self> {
        let half_n = (half_width / dx).ceil() as usize;
        let n = 2 * half_n + 1;
        let xw = half_n as f64 * dx;
        Grid::new(-xw, xw, n)
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.spacing()
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.x(i))
    }

    /// Trapezoidal quadrature weight of sample i.
    pub fn weight(&self, i: usize) -> f64 {
        let dx = self.spacing();
        if i == 0 || i == self.n_points - 1 {
            0.5 * dx
        } else {
            dx
        }
    }

    /// Trapezoidal integral of samples given on this grid.
    pub fn trapz(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n_points);
        let dx = self.spacing();
        let mut s = 0.5 * (f[0] + f[f.len() - 1]);
        for v in &f[1..f.len() - 1] {
            s += v;
        }
        s * dx
    }

    /// Index range covering [x_lo, x_hi], clamped to the grid.
    pub fn window(&self, x_lo: f64, x_hi: f64) -> (usize, usize) {
        let dx = self.spacing();
        let i0 = ((x_lo - self.x_min) / dx).floor().max(0.0) as usize;
        let i1 = (((x_hi - self.x_min) / dx).ceil() as usize).min(self.n_points - 1);
        (i0.min(self.n_points - 1), i1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_matches_definition() {
        let g = Grid::new(-5.0, 5.0, 101).unwrap();
        assert!((g.spacing() - 0.1).abs() < 1e-12);
        assert!((g.x(50) - 0.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_tiny_grid() {
        assert!(Grid::new(0.0, 1.0, 2).is_err());
    }

    #[test]
    fn trapz_constant() {
        let g = Grid::new(0.0, 2.0, 21).unwrap();
        let f = vec![3.0; 21];
        assert!((g.trapz(&f) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_grid_centered() {
        let g = Grid::symmetric(52.0, 0.05).unwrap();
        assert_eq!(g.n_points % 2, 1);
        assert!((g.x_min + g.x_max).abs() < 1e-12);
        assert!((g.spacing() - 0.05).abs() < 1e-14);
    }
}
