use num_complex::Complex64;

use crate::grid::Grid;

/// Complex scalar field envelope sampled on a transverse grid at propagation
/// distance `z`. The envelope convention factors out exp(-i k0 n0 z); a guided
/// mode therefore evolves as exp(-i (beta - k0 n0) z) to paraxial accuracy.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Grid,
    pub amplitudes: Vec<Complex64>,
    pub z: f64,
    pub vacuum_wavelength: f64,
    pub reference_index: f64,
}

impl ScalarField {
    pub fn zeros(grid: Grid, vacuum_wavelength: f64, reference_index: f64) -> Self {
        let n = grid.n_points;
        ScalarField {
            grid,
            amplitudes: vec![Complex64::new(0.0, 0.0); n],
            z: 0.0,
            vacuum_wavelength,
            reference_index,
        }
    }

    pub fn k0(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.vacuum_wavelength
    }

    /// Add `profile * amp` to the field; profile samples live on the same grid.
    pub fn add_profile(&mut self, profile: &[f64], amp: Complex64) {
        debug_assert_eq!(profile.len(), self.amplitudes.len());
        for (a, p) in self.amplitudes.iter_mut().zip(profile) {
            *a += amp * *p;
        }
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Trapezoidal power inside the window [x_lo, x_hi].
    pub fn window_power(&self, x_lo: f64, x_hi: f64) -> f64 {
        let (i0, i1) = self.grid.window(x_lo, x_hi);
        let dx = self.grid.spacing();
        let mut s = 0.0;
        for i in i0..=i1 {
            let w = if i == i0 || i == i1 { 0.5 } else { 1.0 };
            s += w * self.amplitudes[i].norm_sqr();
        }
        s * dx
    }

    /// Complex overlap integral <profile, field> (profile real, trapezoidal).
    pub fn overlap(&self, profile: &[f64]) -> Complex64 {
        debug_assert_eq!(profile.len(), self.amplitudes.len());
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..self.amplitudes.len() {
            s += self.grid.weight(i) * profile[i] * self.amplitudes[i];
        }
        s
    }

    pub fn is_finite(&self) -> bool {
        self.amplitudes.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }
}

/// Total trapezoidal power of the field.
pub fn total_power(field: &ScalarField) -> f64 {
    field.grid.trapz(&field.intensity())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(-10.0, 10.0, 401).unwrap()
    }

    #[test]
    fn zero_field_has_zero_power() {
        let f = ScalarField::zeros(grid(), 1.55, 1.46);
        assert_eq!(total_power(&f), 0.0);
    }

    #[test]
    fn window_power_splits_total() {
        let g = grid();
        let mut f = ScalarField::zeros(g.clone(), 1.55, 1.46);
        let prof: Vec<f64> = g.xs().map(|x| (-x * x).exp()).collect();
        f.add_profile(&prof, Complex64::new(1.0, 0.5));
        let p = total_power(&f);
        let left = f.window_power(-10.0, 0.0);
        let right = f.window_power(0.0, 10.0);
        // the shared sample at x = 0 is half-weighted in both windows
        assert!((left + right - p).abs() < 1e-9 * p);
    }
}
