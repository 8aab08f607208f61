//! Crank-Nicolson finite-difference beam propagation.
//!
//! Marches the paraxial equation
//!     2 i k0 n0 dE/dz = d2E/dx2 + k0^2 (n^2 - n0^2) E
//! with a tridiagonal solve per step. Kerr-type segments update the index as
//! n = n_linear + n2 |E|^2, fix-point iterated within each step. Transverse
//! edges carry a complex absorbing layer (quadratic conductivity ramp).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{total_power, ScalarField};
use crate::grid::Grid;
use crate::numerics::thomas_solve;

/// Absorbing boundary layer: imaginary index rising quadratically from zero
/// at the inner edge to `strength` at the grid edge, over `width` um.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorberSpec {
    pub width: f64,
    pub strength: f64,
}

impl Default for AbsorberSpec {
    fn default() -> Self {
        AbsorberSpec { width: 10.0, strength: 0.02 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationParams {
    pub dz: f64,
    pub boundary: AbsorberSpec,
    /// Crank-Nicolson weight; 0.5 is the unitary midpoint scheme.
    pub scheme_weight: f64,
    pub kerr_iterations: usize,
    /// accuracy guard on the step size
    pub dz_limit: f64,
}

impl Default for PropagationParams {
    fn default() -> Self {
        PropagationParams {
            dz: 0.5,
            boundary: AbsorberSpec::default(),
            scheme_weight: 0.5,
            kerr_iterations: 2,
            dz_limit: 1.0,
        }
    }
}

impl PropagationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dz > 0.0) || self.dz > self.dz_limit {
            return Err(Error::Config(format!(
                "dz = {} outside (0, {}]",
                self.dz, self.dz_limit
            )));
        }
        if !(0.0..=1.0).contains(&self.scheme_weight) {
            return Err(Error::Config("scheme_weight must lie in [0, 1]".into()));
        }
        if self.kerr_iterations < 1 {
            return Err(Error::Config("kerr_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// One transverse slice of the index map: real linear index and Kerr
/// coefficient n2 per sample (zero for linear material).
#[derive(Debug, Clone)]
pub struct IndexSlice {
    pub linear_index: Vec<f64>,
    pub kerr: Vec<f64>,
}

impl IndexSlice {
    pub fn new(linear_index: Vec<f64>, kerr: Vec<f64>) -> Result<Self> {
        if linear_index.len() != kerr.len() {
            return Err(Error::GridMismatch);
        }
        if linear_index.iter().any(|n| *n < 1.0) {
            return Err(Error::Config("linear index below 1".into()));
        }
        if kerr.iter().any(|k| *k < 0.0) {
            return Err(Error::Config("negative Kerr coefficient".into()));
        }
        Ok(IndexSlice { linear_index, kerr })
    }

    pub fn uniform(n: f64, len: usize) -> Self {
        IndexSlice { linear_index: vec![n; len], kerr: vec![0.0; len] }
    }
}

/// Source of index slices along z, consumed by [`propagate`].
pub trait SliceSource {
    fn total_length(&self) -> f64;
    /// Fill the linear index and Kerr arrays for the slice at `z`.
    fn fill_slice(&self, z: f64, grid: &Grid, linear: &mut [f64], kerr: &mut [f64]);
    /// z-interval around `z` over which the slice is constant (cache hint).
    fn constant_span(&self, z: f64) -> (f64, f64);
}

/// Reusable buffers for the tridiagonal stepping. For linear slices the
/// Crank-Nicolson matrix factors are precomputed once per slice; Kerr slices
/// rebuild them per iteration.
pub struct StepWorkspace {
    lhs_diag: Vec<Complex64>,
    off_lhs: Vec<Complex64>,
    rhs: Vec<Complex64>,
    scratch: Vec<Complex64>,
    sigma: Vec<f64>,
    vlin: Vec<Complex64>,
    intensity: Vec<f64>,
    prev: Vec<Complex64>,
    // precomputed linear-slice factors (valid for cached dz)
    rd: Vec<Complex64>,
    w: Vec<Complex64>,
    dd: Vec<Complex64>,
    cached_dz: f64,
    factors_valid: bool,
}

impl StepWorkspace {
    pub fn new(grid: &Grid, boundary: &AbsorberSpec) -> Self {
        let n = grid.n_points;
        let sigma: Vec<f64> = grid
            .xs()
            .map(|x| {
                let d_lo = x - grid.x_min;
                let d_hi = grid.x_max - x;
                let d = d_lo.min(d_hi);
                if d < boundary.width {
                    let t = (boundary.width - d) / boundary.width;
                    boundary.strength * t * t
                } else {
                    0.0
                }
            })
            .collect();
        StepWorkspace {
            lhs_diag: vec![Complex64::default(); n],
            off_lhs: vec![Complex64::default(); n - 1],
            rhs: vec![Complex64::default(); n],
            scratch: Vec::with_capacity(n),
            sigma,
            vlin: vec![Complex64::default(); n],
            intensity: vec![0.0; n],
            prev: vec![Complex64::default(); n],
            rd: vec![Complex64::default(); n],
            w: vec![Complex64::default(); n],
            dd: vec![Complex64::default(); n],
            cached_dz: f64::NAN,
            factors_valid: false,
        }
    }

    /// Cache the linear part of k0^2 (n^2 - n0^2) including the absorber.
    pub fn load_slice(&mut self, slice_linear: &[f64], k0: f64, n0: f64) {
        let k2 = k0 * k0;
        for j in 0..slice_linear.len() {
            let nl = slice_linear[j];
            let s = self.sigma[j];
            self.vlin[j] =
                Complex64::new(k2 * (nl * nl - s * s - n0 * n0), -2.0 * k2 * nl * s);
        }
        self.factors_valid = false;
    }

    /// Precompute CN matrix factors for the current linear slice and dz:
    /// rhs diagonal, Thomas elimination multipliers and pivot reciprocals.
    fn prepare_factors(&mut self, field: &ScalarField, params: &PropagationParams, dz: f64) {
        let n = self.vlin.len();
        let k0 = field.k0();
        let n0 = field.reference_index;
        let dx = field.grid.spacing();
        let inv_dx2 = 1.0 / (dx * dx);
        let gamma = dz / (2.0 * k0 * n0);
        let al = Complex64::new(0.0, gamma * params.scheme_weight);
        let ar = Complex64::new(0.0, gamma * (1.0 - params.scheme_weight));
        let c = al * inv_dx2;
        let mut w_prev = Complex64::default();
        for j in 0..n {
            let ldiag = self.vlin[j] - 2.0 * inv_dx2;
            let diag = 1.0 + al * ldiag;
            self.rd[j] = 1.0 - ar * ldiag;
            let pivot = if j == 0 { diag } else { diag - c * w_prev };
            let inv = pivot.finv();
            self.dd[j] = inv;
            w_prev = c * inv;
            self.w[j] = w_prev;
        }
        self.cached_dz = dz;
        self.factors_valid = true;
    }

    /// Advance one Crank-Nicolson step of size dz (in place on `field`).
    fn advance(
        &mut self,
        field: &mut ScalarField,
        slice: &IndexSlice,
        params: &PropagationParams,
        dz: f64,
        has_kerr: bool,
    ) -> Result<()> {
        if has_kerr {
            self.advance_kerr(field, slice, params, dz)?;
        } else {
            if !self.factors_valid || self.cached_dz != dz {
                self.prepare_factors(field, params, dz);
            }
            let n = field.amplitudes.len();
            let k0 = field.k0();
            let n0 = field.reference_index;
            let dx = field.grid.spacing();
            let inv_dx2 = 1.0 / (dx * dx);
            let gamma = dz / (2.0 * k0 * n0);
            let ar_c = Complex64::new(0.0, gamma * (1.0 - params.scheme_weight)) * inv_dx2;
            let c = Complex64::new(0.0, gamma * params.scheme_weight) * inv_dx2;

            self.prev.copy_from_slice(&field.amplitudes);
            let prev = &self.prev;
            let out = &mut field.amplitudes;
            // fused rhs build + Thomas forward elimination
            let mut g_prev = Complex64::default();
            for j in 0..n {
                let mut r = self.rd[j] * prev[j];
                if j > 0 {
                    r -= ar_c * prev[j - 1];
                }
                if j + 1 < n {
                    r -= ar_c * prev[j + 1];
                }
                if j > 0 {
                    r -= c * g_prev;
                }
                g_prev = r * self.dd[j];
                out[j] = g_prev;
            }
            // back substitution
            for j in (0..n - 1).rev() {
                let t = self.w[j] * out[j + 1];
                out[j] -= t;
            }
            field.z += dz;
            if !field.is_finite() {
                return Err(Error::NonFiniteField { z: field.z });
            }
        }
        Ok(())
    }

    fn advance_kerr(
        &mut self,
        field: &mut ScalarField,
        slice: &IndexSlice,
        params: &PropagationParams,
        dz: f64,
    ) -> Result<()> {
        let n = field.amplitudes.len();
        let k0 = field.k0();
        let n0 = field.reference_index;
        let k2 = k0 * k0;
        let dx = field.grid.spacing();
        let inv_dx2 = 1.0 / (dx * dx);
        let gamma = dz / (2.0 * k0 * n0);
        let th = params.scheme_weight;
        let al = Complex64::new(0.0, gamma * th);
        let ar = Complex64::new(0.0, gamma * (1.0 - th));
        for v in self.off_lhs.iter_mut() {
            *v = al * inv_dx2;
        }

        self.prev.copy_from_slice(&field.amplitudes);
        for j in 0..n {
            self.intensity[j] = self.prev[j].norm_sqr();
        }
        for _ in 0..params.kerr_iterations.max(1) {
            for j in 0..n {
                let mut v = self.vlin[j];
                if slice.kerr[j] != 0.0 {
                    let nl = slice.linear_index[j];
                    let nr = nl + slice.kerr[j] * self.intensity[j];
                    let s = self.sigma[j];
                    v += Complex64::new(k2 * (nr * nr - nl * nl), -2.0 * k2 * s * (nr - nl));
                }
                let ldiag = v - 2.0 * inv_dx2;
                self.lhs_diag[j] = 1.0 + al * ldiag;
                let mut r = (1.0 - ar * ldiag) * self.prev[j];
                if j > 0 {
                    r -= ar * inv_dx2 * self.prev[j - 1];
                }
                if j + 1 < n {
                    r -= ar * inv_dx2 * self.prev[j + 1];
                }
                self.rhs[j] = r;
            }
            thomas_solve(
                &self.off_lhs,
                &self.lhs_diag,
                &self.off_lhs,
                &mut self.rhs,
                &mut self.scratch,
            );
            for j in 0..n {
                self.intensity[j] = self.rhs[j].norm_sqr();
            }
        }
        field.amplitudes.copy_from_slice(&self.rhs);
        field.z += dz;
        if !field.is_finite() {
            return Err(Error::NonFiniteField { z: field.z });
        }
        Ok(())
    }
}

/// Advance the field by one step of `params.dz` through a fixed slice.
pub fn step(
    field: &ScalarField,
    slice: &IndexSlice,
    params: &PropagationParams,
) -> Result<ScalarField> {
    params.validate()?;
    if slice.linear_index.len() != field.grid.n_points {
        return Err(Error::GridMismatch);
    }
    let mut ws = StepWorkspace::new(&field.grid, &params.boundary);
    ws.load_slice(&slice.linear_index, field.k0(), field.reference_index);
    let has_kerr = slice.kerr.iter().any(|k| *k > 0.0);
    let mut out = field.clone();
    ws.advance(&mut out, slice, params, params.dz, has_kerr)?;
    Ok(out)
}

/// Recorded propagation history: intensity snapshots plus the final field.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub z_samples: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
    pub powers: Vec<f64>,
    pub final_field: ScalarField,
}

impl Trajectory {
    pub fn input_power(&self) -> f64 {
        self.powers.first().copied().unwrap_or(0.0)
    }

    /// Cumulative power lost to the absorber (and residual radiation) by the
    /// end of the run.
    pub fn absorbed_power(&self) -> f64 {
        self.input_power() - total_power(&self.final_field)
    }
}

/// Propagate through an entire index map, recording an intensity snapshot at
/// z = 0 and then every `record_every` steps (none if `record_every` is 0).
pub fn propagate(
    field: &ScalarField,
    source: &dyn SliceSource,
    params: &PropagationParams,
    record_every: usize,
) -> Result<Trajectory> {
    params.validate()?;
    let mut f = field.clone();
    let mut traj = Trajectory {
        z_samples: vec![f.z],
        snapshots: vec![f.intensity()],
        powers: vec![total_power(&f)],
        final_field: f.clone(),
    };
    let z_end = field.z + source.total_length();
    if source.total_length() <= 0.0 {
        return Ok(traj);
    }

    let mut ws = StepWorkspace::new(&f.grid, &params.boundary);
    let n = f.grid.n_points;
    let mut slice = IndexSlice::uniform(1.0, n);
    let mut span = (f64::NAN, f64::NAN);
    let mut has_kerr = false;
    let mut step_count = 0usize;

    while f.z < z_end - 1e-9 {
        let dz = params.dz.min(z_end - f.z);
        let zmid = f.z - field.z + 0.5 * dz; // layout-local coordinate
        if !(zmid >= span.0 && zmid < span.1) {
            source.fill_slice(zmid, &f.grid, &mut slice.linear_index, &mut slice.kerr);
            span = source.constant_span(zmid);
            has_kerr = slice.kerr.iter().any(|k| *k > 0.0);
            ws.load_slice(&slice.linear_index, f.k0(), f.reference_index);
        }
        ws.advance(&mut f, &slice, params, dz, has_kerr)?;
        step_count += 1;
        if record_every > 0 && step_count % record_every == 0 {
            traj.z_samples.push(f.z);
            traj.snapshots.push(f.intensity());
            traj.powers.push(total_power(&f));
        }
    }
    if *traj.z_samples.last().unwrap() < f.z - 1e-12 {
        traj.z_samples.push(f.z);
        traj.snapshots.push(f.intensity());
        traj.powers.push(total_power(&f));
    }
    traj.final_field = f;
    Ok(traj)
}

/// Uniform medium of the given index over a fixed length.
pub struct UniformMedium {
    pub index: f64,
    pub length: f64,
}

impl SliceSource for UniformMedium {
    fn total_length(&self) -> f64 {
        self.length
    }
    fn fill_slice(&self, _z: f64, _grid: &Grid, linear: &mut [f64], kerr: &mut [f64]) {
        linear.fill(self.index);
        kerr.fill(0.0);
    }
    fn constant_span(&self, _z: f64) -> (f64, f64) {
        (0.0, self.length)
    }
}
