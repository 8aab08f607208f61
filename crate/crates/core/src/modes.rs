//! Guided TE modes of a symmetric step-index slab.
//!
//! Dispersion relations in the usual normalized variables u = h d/2,
//! w = q d/2 with u^2 + w^2 = V^2:
//!   even modes:  u sin u - w cos u = 0   (equivalent to tan u = w/u)
//!   odd modes:   w sin u + u cos u = 0   (equivalent to tan u = -u/w)
//! Both forms are pole-free, so every sign change brackets a root and plain
//! bisection is reliable.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid;

/// Symmetric slab cross-section parameters, lengths in micrometres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlabSpec {
    pub core_index: f64,
    pub clad_index: f64,
    pub core_width: f64,
    pub wavelength: f64,
}

impl SlabSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.clad_index > 0.0 && self.core_index > self.clad_index) {
            return Err(Error::Config(format!(
                "need core_index > clad_index > 0, got {} / {}",
                self.core_index, self.clad_index
            )));
        }
        if !(self.core_width > 0.0) {
            return Err(Error::Config("core_width must be positive".into()));
        }
        if !(self.wavelength > 0.0) {
            return Err(Error::Config("wavelength must be positive".into()));
        }
        Ok(())
    }

    pub fn k0(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength
    }

    /// Normalized frequency V = (k0 d / 2) sqrt(n1^2 - n2^2).
    pub fn v_parameter(&self) -> f64 {
        (self.k0() * self.core_width / 2.0)
            * (self.core_index.powi(2) - self.clad_index.powi(2)).sqrt()
    }

    /// Same slab with the core index raised by `dn` (phase modulator model).
    pub fn with_core_shift(&self, dn: f64) -> SlabSpec {
        SlabSpec { core_index: self.core_index + dn, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

/// Analytic parameters of one guided TE mode.
#[derive(Debug, Clone, Copy)]
pub struct TeMode {
    pub n_eff: f64,
    pub parity: Parity,
    /// transverse wavenumber in the core (rad/um)
    pub h: f64,
    /// decay constant in the cladding (1/um)
    pub q: f64,
    half_width: f64,
    /// analytic norm of the unnormalized piecewise profile
    norm: f64,
}

impl TeMode {
    /// Unnormalized analytic profile value at offset `x` from the slab axis.
    fn raw(&self, x: f64) -> f64 {
        let a = self.half_width;
        match self.parity {
            Parity::Even => {
                if x.abs() <= a {
                    (self.h * x).cos()
                } else {
                    (self.h * a).cos() * (-self.q * (x.abs() - a)).exp()
                }
            }
            Parity::Odd => {
                if x.abs() <= a {
                    (self.h * x).sin()
                } else {
                    x.signum() * (self.h * a).sin() * (-self.q * (x.abs() - a)).exp()
                }
            }
        }
    }

    /// Analytically normalized profile value at offset `x` from the axis.
    pub fn eval(&self, x: f64) -> f64 {
        self.raw(x) / self.norm.sqrt()
    }

    /// Fraction of mode power lying beyond |x| > a + margin.
    pub fn tail_power_beyond(&self, margin: f64) -> f64 {
        let a = self.half_width;
        let edge = match self.parity {
            Parity::Even => (self.h * a).cos().powi(2),
            Parity::Odd => (self.h * a).sin().powi(2),
        };
        // both sides
        edge / self.q * (-2.0 * self.q * margin).exp() / self.norm
    }

    fn analytic(n_eff: f64, parity: Parity, spec: &SlabSpec) -> TeMode {
        let k0 = spec.k0();
        let h = k0 * (spec.core_index.powi(2) - n_eff * n_eff).sqrt();
        let q = k0 * (n_eff * n_eff - spec.clad_index.powi(2)).sqrt();
        let a = spec.core_width / 2.0;
        let norm = match parity {
            Parity::Even => a + (2.0 * h * a).sin() / (2.0 * h) + (h * a).cos().powi(2) / q,
            Parity::Odd => a - (2.0 * h * a).sin() / (2.0 * h) + (h * a).sin().powi(2) / q,
        };
        TeMode { n_eff, parity, h, q, half_width: a, norm }
    }
}

/// Guided-mode basis on a grid: propagation constants (descending) and
/// grid-normalized transverse profiles centered on the slab axis.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    pub betas: Vec<f64>,
    pub profiles: Vec<Vec<f64>>,
    pub grid: Grid,
    pub modes: Vec<TeMode>,
    pub spec: SlabSpec,
    /// slab axis position on the grid
    pub center: f64,
}

/// Complex amplitudes of the TE0/TE1 content of a field, plus the power not
/// captured by the two-mode subspace.
#[derive(Debug, Clone, Copy)]
pub struct ModalAmplitudes {
    pub c0: Complex64,
    pub c1: Complex64,
    pub residual_power: f64,
}

impl ModalAmplitudes {
    pub fn power(&self) -> f64 {
        self.c0.norm_sqr() + self.c1.norm_sqr()
    }
}

fn dispersion(u: f64, v2: f64, parity: Parity) -> f64 {
    let w2 = v2 - u * u;
    let w = if w2 > 0.0 { w2.sqrt() } else { 0.0 };
    match parity {
        Parity::Even => u * u.sin() - w * u.cos(),
        Parity::Odd => w * u.sin() + u * u.cos(),
    }
}

fn u_of_neff(n_eff: f64, spec: &SlabSpec) -> f64 {
    spec.k0() * spec.core_width / 2.0 * (spec.core_index.powi(2) - n_eff * n_eff).sqrt()
}

/// All guided effective indices of the slab, descending, via bracketed
/// bisection of the pole-free dispersion functions.
pub fn guided_indices(spec: &SlabSpec, max_modes: usize) -> Result<Vec<(f64, Parity)>> {
    spec.validate()?;
    let v = spec.v_parameter();
    let v2 = v * v;
    let n_brackets = 200;
    let eps = 1e-12 * (spec.core_index - spec.clad_index);
    let lo = spec.clad_index + eps;
    let hi = spec.core_index - eps;

    let mut found: Vec<(f64, Parity)> = Vec::new();
    for parity in [Parity::Even, Parity::Odd] {
        let f = |ne: f64| dispersion(u_of_neff(ne, spec), v2, parity);
        let mut prev_x = lo;
        let mut prev_f = f(lo);
        for i in 1..=n_brackets {
            let x = lo + (hi - lo) * i as f64 / n_brackets as f64;
            let fx = f(x);
            if prev_f == 0.0 {
                found.push((prev_x, parity));
            } else if prev_f * fx < 0.0 {
                let (mut a, mut b, mut fa) = (prev_x, x, prev_f);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    let fm = f(m);
                    if fa * fm <= 0.0 {
                        b = m;
                    } else {
                        a = m;
                        fa = fm;
                    }
                }
                found.push((0.5 * (a + b), parity));
            }
            prev_x = x;
            prev_f = fx;
        }
    }
    if found.is_empty() {
        return Err(Error::NoGuidedMode);
    }
    found.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    found.truncate(max_modes);
    Ok(found)
}

/// Solve the guided TE modes and sample their profiles on `grid`, slab axis
/// at the grid midpoint. Profiles are re-normalized under the trapezoidal
/// inner product of the grid.
pub fn solve_te_modes(spec: &SlabSpec, grid: &Grid, max_modes: usize) -> Result<ModeBasis> {
    let center = 0.5 * (grid.x_min + grid.x_max);
    solve_te_modes_at(spec, grid, center, max_modes)
}

/// Same as [`solve_te_modes`] with an explicit slab axis position.
pub fn solve_te_modes_at(
    spec: &SlabSpec,
    grid: &Grid,
    center: f64,
    max_modes: usize,
) -> Result<ModeBasis> {
    if grid.spacing() > spec.core_width / 4.0 {
        return Err(Error::GridTooCoarse(format!(
            "dx = {} does not resolve a {} um core",
            grid.spacing(),
            spec.core_width
        )));
    }
    let indices = guided_indices(spec, max_modes)?;
    let k0 = spec.k0();
    let mut betas = Vec::new();
    let mut profiles: Vec<Vec<f64>> = Vec::new();
    let mut modes = Vec::new();
    for (ne, parity) in indices {
        let mode = TeMode::analytic(ne, parity, spec);
        let margin_lo = center - spec.core_width / 2.0 - grid.x_min;
        let margin_hi = grid.x_max - center - spec.core_width / 2.0;
        let margin = margin_lo.min(margin_hi);
        if margin < 0.0 {
            return Err(Error::Geometry("slab core extends outside the grid".into()));
        }
        if mode.tail_power_beyond(margin) > 1e-6 {
            return Err(Error::GridTooCoarse(format!(
                "grid margin {margin:.2} um truncates more than 1e-6 of the mode power"
            )));
        }
        let raw: Vec<f64> = grid.xs().map(|x| mode.eval(x - center)).collect();
        let norm = grid.trapz(&raw.iter().map(|p| p * p).collect::<Vec<_>>());
        if (norm - 1.0).abs() > 1e-3 {
            return Err(Error::GridTooCoarse(format!(
                "profile norm {norm} deviates grossly from 1 on this grid"
            )));
        }
        profiles.push(raw.iter().map(|p| p / norm.sqrt()).collect());
        betas.push(k0 * ne);
        modes.push(mode);
    }
    // orthogonality residual under the grid inner product
    if profiles.len() >= 2 {
        let mut dot = 0.0;
        for i in 0..grid.n_points {
            dot += grid.weight(i) * profiles[0][i] * profiles[1][i];
        }
        if dot.abs() > 1e-6 {
            return Err(Error::GridTooCoarse(format!(
                "mode profiles lose orthogonality on this grid: <0|1> = {dot:.2e}"
            )));
        }
    }
    Ok(ModeBasis { betas, profiles, grid: grid.clone(), modes, spec: *spec, center })
}

impl ModeBasis {
    pub fn n_eff(&self, m: usize) -> f64 {
        self.modes[m].n_eff
    }

    /// Dispersion-relation residual of mode m in normalized (u, w) variables.
    pub fn dispersion_residual(&self, m: usize) -> f64 {
        let v2 = self.spec.v_parameter().powi(2);
        dispersion(u_of_neff(self.modes[m].n_eff, &self.spec), v2, self.modes[m].parity).abs()
    }

    /// Grid-normalized profiles of this basis re-sampled with the slab axis
    /// moved to `center` on the same grid.
    pub fn profiles_at(&self, center: f64) -> Vec<Vec<f64>> {
        self.modes
            .iter()
            .map(|mode| {
                let raw: Vec<f64> = self.grid.xs().map(|x| mode.eval(x - center)).collect();
                let norm = self.grid.trapz(&raw.iter().map(|p| p * p).collect::<Vec<_>>());
                raw.iter().map(|p| p / norm.sqrt()).collect()
            })
            .collect()
    }
}

/// Project a field onto the first two basis modes (trapezoidal inner product).
pub fn decompose(field: &ScalarField, basis: &ModeBasis) -> Result<ModalAmplitudes> {
    if field.grid != basis.grid {
        return Err(Error::GridMismatch);
    }
    decompose_profiles(field, &basis.profiles)
}

/// Projection onto explicitly supplied orthonormal profiles (used by circuit
/// code to decompose at off-axis guide positions).
pub fn decompose_profiles(field: &ScalarField, profiles: &[Vec<f64>]) -> Result<ModalAmplitudes> {
    let c0 = field.overlap(&profiles[0]);
    let c1 = if profiles.len() > 1 { field.overlap(&profiles[1]) } else { Complex64::new(0.0, 0.0) };
    let total = crate::field::total_power(field);
    let mut residual = total - c0.norm_sqr() - c1.norm_sqr();
    if residual < 0.0 {
        if residual < -1e-9 {
            return Err(Error::GridTooCoarse(format!(
                "modal power exceeds total power by {residual:.2e}"
            )));
        }
        residual = 0.0;
    }
    Ok(ModalAmplitudes { c0, c1, residual_power: residual })
}

/// Quartic self-overlap integral of the fundamental mode's normalized
/// profile, int psi0^4 dx, by fine quadrature of the analytic profile.
/// Fixes the Kerr-strength normalization of nonlinear sections.
pub fn fundamental_quartic_integral(spec: &SlabSpec) -> Result<f64> {
    let (ne, parity) = guided_indices(spec, 1)?[0];
    let mode = TeMode::analytic(ne, parity, spec);
    let half = spec.core_width / 2.0 + 12.0 / mode.q.max(0.05);
    let n = 40_000usize;
    let dx = 2.0 * half / n as f64;
    let mut s = 0.0;
    for i in 0..=n {
        let x = -half + i as f64 * dx;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        s += w * mode.eval(x).powi(4);
    }
    Ok(s * dx)
}

/// Beat length 2 pi / (beta0 - beta1) of the first two modes.
pub fn beat_length(basis: &ModeBasis) -> Result<f64> {
    if basis.betas.len() < 2 {
        return Err(Error::SingleMode);
    }
    let db = basis.betas[0] - basis.betas[1];
    if db <= 0.0 || !db.is_finite() {
        return Err(Error::SingleMode);
    }
    Ok(2.0 * std::f64::consts::PI / db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    pub fn default_slab() -> SlabSpec {
        SlabSpec { core_index: 1.47, clad_index: 1.45, core_width: 4.0, wavelength: 1.55 }
    }

    fn wide_grid() -> Grid {
        Grid::symmetric(30.0, 0.02).unwrap()
    }

    /// Independent oracle: dense scan of the dispersion functions over 1e6
    /// effective-index samples with sign-change bracketing and bisection
    /// refinement. Uses the tan-form relations (pole brackets rejected),
    /// a different algebraic route than the solver's pole-free form.
    fn dense_scan_oracle(spec: &SlabSpec) -> Vec<f64> {
        let k0 = spec.k0();
        let d = spec.core_width;
        let f = |ne: f64, odd: bool| -> f64 {
            let h = k0 * (spec.core_index.powi(2) - ne * ne).sqrt();
            let q = k0 * (ne * ne - spec.clad_index.powi(2)).sqrt();
            let u = h * d / 2.0;
            if odd {
                u.tan() + h / q
            } else {
                u.tan() - q / h
            }
        };
        let n = 1_000_000;
        let lo = spec.clad_index + 1e-9;
        let hi = spec.core_index - 1e-9;
        let mut roots = Vec::new();
        for odd in [false, true] {
            let mut px = lo;
            let mut pf = f(lo, odd);
            for i in 1..=n {
                let x = lo + (hi - lo) * i as f64 / n as f64;
                let fx = f(x, odd);
                if pf * fx < 0.0 && pf.abs() < 1e3 && fx.abs() < 1e3 {
                    let (mut a, mut b) = (px, x);
                    for _ in 0..100 {
                        let m = 0.5 * (a + b);
                        if f(a, odd) * f(m, odd) <= 0.0 {
                            b = m;
                        } else {
                            a = m;
                        }
                    }
                    roots.push(0.5 * (a + b));
                }
                px = x;
                pf = fx;
            }
        }
        roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
        roots
    }

    #[test]
    fn no_contrast_means_no_guiding() {
        let spec = SlabSpec { core_index: 1.45, clad_index: 1.45, ..default_slab() };
        assert!(matches!(
            guided_indices(&spec, 4),
            Err(Error::Config(_)) | Err(Error::NoGuidedMode)
        ));
    }

    #[test]
    fn te1_cutoff_at_v_half_pi() {
        // width tuned so V sits just below pi/2: exactly one guided mode
        let mut spec = default_slab();
        let v_target = std::f64::consts::FRAC_PI_2 * 0.98;
        spec.core_width = 2.0 * v_target
            / (spec.k0() * (spec.core_index.powi(2) - spec.clad_index.powi(2)).sqrt());
        let modes = guided_indices(&spec, 4).unwrap();
        assert_eq!(modes.len(), 1);
        assert_eq!(modes[0].1, Parity::Even);
        // nudge just above cutoff: two modes
        spec.core_width *= (std::f64::consts::FRAC_PI_2 * 1.02) / v_target;
        assert_eq!(guided_indices(&spec, 4).unwrap().len(), 2);
    }

    #[test]
    fn default_slab_two_modes_match_dense_scan_oracle() {
        let spec = default_slab();
        let basis = solve_te_modes(&spec, &wide_grid(), 4).unwrap();
        assert_eq!(basis.betas.len(), 2);
        assert!(basis.betas[0] > basis.betas[1]);
        let k0 = spec.k0();
        for b in &basis.betas {
            assert!(*b > k0 * spec.clad_index && *b < k0 * spec.core_index);
        }
        let oracle = dense_scan_oracle(&spec);
        assert_eq!(oracle.len(), 2);
        // frozen oracle values for the default cross-section
        assert!((oracle[0] - 1.464584792).abs() < 1e-7);
        assert!((oracle[1] - 1.451764274).abs() < 1e-7);
        for (m, ne) in oracle.iter().enumerate() {
            assert!(
                (basis.n_eff(m) - ne).abs() < 1e-8,
                "mode {m}: solver {} vs oracle {}",
                basis.n_eff(m),
                ne
            );
        }
    }

    #[test]
    fn dispersion_residual_tiny() {
        let basis = solve_te_modes(&default_slab(), &wide_grid(), 4).unwrap();
        for m in 0..basis.betas.len() {
            assert!(basis.dispersion_residual(m) < 1e-10);
        }
    }

    #[test]
    fn profiles_orthonormal_and_parity() {
        let g = wide_grid();
        let basis = solve_te_modes(&default_slab(), &g, 4).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut dot = 0.0;
                for k in 0..g.n_points {
                    dot += g.weight(k) * basis.profiles[i][k] * basis.profiles[j][k];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-6, "<{i}|{j}> = {dot}");
            }
        }
        // TE0 even and nodeless, TE1 odd with one interior zero crossing
        let p0 = &basis.profiles[0];
        let p1 = &basis.profiles[1];
        let n = g.n_points;
        for k in 0..n {
            assert!((p0[k] - p0[n - 1 - k]).abs() < 1e-9);
            assert!((p1[k] + p1[n - 1 - k]).abs() < 1e-9);
        }
        assert!(p0.iter().all(|v| *v > -1e-12));
        // sign changes of TE1, skipping the exact zero at the axis sample
        let mut crossings = 0;
        let mut last_sign = 0.0_f64;
        for &v in p1.iter() {
            if v == 0.0 {
                continue;
            }
            let s = v.signum();
            if last_sign != 0.0 && s != last_sign {
                crossings += 1;
            }
            last_sign = s;
        }
        assert_eq!(crossings, 1);
        // parity against even/odd test functions to quadrature tolerance
        let even_f: Vec<f64> = g.xs().map(|x| (-0.1 * x * x).exp()).collect();
        let odd_f: Vec<f64> = g.xs().map(|x| x * (-0.1 * x * x).exp()).collect();
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for k in 0..n {
            d0 += g.weight(k) * p0[k] * odd_f[k];
            d1 += g.weight(k) * p1[k] * even_f[k];
        }
        assert!(d0.abs() < 1e-8);
        assert!(d1.abs() < 1e-8);
    }

    #[test]
    fn mode_count_monotone_in_width_and_contrast() {
        let widths = [1.0, 2.0, 3.5, 5.0, 8.0, 12.0];
        let mut last = 0;
        for w in widths {
            let spec = SlabSpec { core_width: w, ..default_slab() };
            let count = guided_indices(&spec, 16).map(|v| v.len()).unwrap_or(0);
            assert!(count >= last, "count dropped from {last} at width {w}");
            last = count;
        }
        let mut last = 0;
        for nc in [1.453, 1.46, 1.47, 1.49, 1.52] {
            let spec = SlabSpec { core_index: nc, ..default_slab() };
            let count = guided_indices(&spec, 16).map(|v| v.len()).unwrap_or(0);
            assert!(count >= last, "count dropped from {last} at core index {nc}");
            last = count;
        }
    }

    #[test]
    fn decompose_recovers_pure_and_mixed_modes() {
        let g = wide_grid();
        let basis = solve_te_modes(&default_slab(), &g, 2).unwrap();
        let mut f = ScalarField::zeros(g.clone(), 1.55, 1.46);
        f.add_profile(&basis.profiles[0], Complex64::new(1.0, 0.0));
        let amps = decompose(&f, &basis).unwrap();
        assert!((amps.c0 - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        assert!(amps.c1.norm() < 1e-9);
        assert!(amps.residual_power < 1e-9);

        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let mut f = ScalarField::zeros(g.clone(), 1.55, 1.46);
        f.add_profile(&basis.profiles[0], Complex64::new(inv_sqrt2, 0.0));
        f.add_profile(&basis.profiles[1], Complex64::new(0.0, inv_sqrt2));
        let amps = decompose(&f, &basis).unwrap();
        assert!((amps.c0 - Complex64::new(inv_sqrt2, 0.0)).norm() < 1e-9);
        assert!((amps.c1 - Complex64::new(0.0, inv_sqrt2)).norm() < 1e-9);
    }

    #[test]
    fn offset_gaussian_leaves_residual() {
        // quadrature oracle: residual = total - sum |<psi_m, f>|^2 computed
        // directly from the overlap integrals of the analytic profiles
        let g = wide_grid();
        let basis = solve_te_modes(&default_slab(), &g, 2).unwrap();
        let mut f = ScalarField::zeros(g.clone(), 1.55, 1.46);
        let gauss: Vec<f64> = g.xs().map(|x| (-(x - 2.5_f64).powi(2) / 4.0).exp()).collect();
        f.add_profile(&gauss, Complex64::new(1.0, 0.0));
        let amps = decompose(&f, &basis).unwrap();
        let total = crate::field::total_power(&f);
        assert!(amps.power() < total);
        assert!(amps.residual_power > 0.0);
        let mut oracle = total;
        for p in &basis.profiles {
            let mut ov = 0.0;
            for k in 0..g.n_points {
                ov += g.weight(k) * p[k] * gauss[k];
            }
            oracle -= ov * ov;
        }
        assert!((amps.residual_power - oracle).abs() < 1e-9 * total);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let basis = solve_te_modes(&default_slab(), &wide_grid(), 2).unwrap();
        let other = Grid::new(-20.0, 20.0, 1001).unwrap();
        let f = ScalarField::zeros(other, 1.55, 1.46);
        assert!(matches!(decompose(&f, &basis), Err(Error::GridMismatch)));
    }

    #[test]
    fn beat_length_matches_betas() {
        let basis = solve_te_modes(&default_slab(), &wide_grid(), 2).unwrap();
        let lb = beat_length(&basis).unwrap();
        assert!(lb > 0.0 && lb.is_finite());
        let db = basis.betas[0] - basis.betas[1];
        assert!((lb - 2.0 * std::f64::consts::PI / db).abs() < 1e-12);
        // against the frozen dense-scan values
        let k0 = default_slab().k0();
        let expect = 2.0 * std::f64::consts::PI / (k0 * (1.464584792 - 1.451764274));
        assert!((lb - expect).abs() / expect < 1e-6);
    }

    #[test]
    fn single_mode_has_no_beat_length() {
        let mut spec = default_slab();
        spec.core_width = 1.5;
        let basis = solve_te_modes(&spec, &wide_grid(), 2).unwrap();
        assert_eq!(basis.betas.len(), 1);
        assert!(matches!(beat_length(&basis), Err(Error::SingleMode)));
    }

    #[test]
    fn tight_margin_rejected_for_weak_mode() {
        // 5 um margin truncates ~2% of the near-cutoff TE1 tail: the solver
        // must refuse rather than return a badly normalized profile
        let g = Grid::symmetric(7.0, 0.02).unwrap();
        assert!(matches!(
            solve_te_modes(&default_slab(), &g, 2),
            Err(Error::GridTooCoarse(_))
        ));
    }

    #[test]
    fn fd_cross_check_of_analytic_solver() {
        // independent discretized eigensolve agrees with the analytic roots
        let spec = default_slab();
        let k0 = spec.k0();
        let dx = 0.02;
        let half = 30.0;
        let n = (2.0 * half / dx) as usize + 1;
        let a = spec.core_width / 2.0;
        let prof: Vec<f64> = (0..n)
            .map(|i| {
                let x = -half + i as f64 * dx;
                crate::numerics::cell_averaged_index(x, dx, &[(-a, a, spec.core_index)], spec.clad_index)
            })
            .collect();
        let fd = crate::numerics::fd_guided_modes(&prof, dx, k0, 4);
        let basis = solve_te_modes(&spec, &Grid::symmetric(half, dx).unwrap(), 4).unwrap();
        assert_eq!(fd.len(), basis.betas.len());
        for (m, mode) in fd.iter().enumerate() {
            assert!((mode.n_eff - basis.n_eff(m)).abs() < 2e-6);
        }
    }
}
