//! Small numerical kernels shared by the solver and the propagation engine:
//! a complex tridiagonal (Thomas) solve and a Sturm-sequence eigensolver for
//! symmetric tridiagonal operators, used for finite-difference mode analysis
//! of composite index profiles (coupler supermodes, modulator calibration).

use num_complex::Complex64;

/// Solve the tridiagonal system (lower, diag, upper) x = rhs in place.
/// `lower[i]` multiplies x[i], `upper[i]` multiplies x[i+2] on row i+1...
/// conventions: row i: lower[i-1]*x[i-1] + diag[i]*x[i] + upper[i]*x[i+1].
/// No pivoting; the Crank-Nicolson matrices here are diagonally dominant.
pub fn thomas_solve(
    lower: &[Complex64],
    diag: &[Complex64],
    upper: &[Complex64],
    rhs: &mut [Complex64],
    scratch: &mut Vec<Complex64>,
) {
    let n = diag.len();
    debug_assert_eq!(lower.len(), n - 1);
    debug_assert_eq!(upper.len(), n - 1);
    debug_assert_eq!(rhs.len(), n);

    scratch.clear();
    scratch.resize(n, Complex64::new(0.0, 0.0));

    // forward sweep
    let mut d = diag[0];
    scratch[0] = upper[0] / d;
    rhs[0] /= d;
    for i in 1..n {
        d = diag[i] - lower[i - 1] * scratch[i - 1];
        if i < n - 1 {
            scratch[i] = upper[i] / d;
        }
        rhs[i] = (rhs[i] - lower[i - 1] * rhs[i - 1]) / d;
    }
    // back substitution
    for i in (0..n - 1).rev() {
        let t = scratch[i] * rhs[i + 1];
        rhs[i] -= t;
    }
}

/// Number of eigenvalues of the symmetric tridiagonal matrix (diag, off)
/// strictly below `x`, by Sturm sequence count.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let n = diag.len();
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let denom = if q.abs() < 1e-300 { 1e-300_f64.copysign(q) } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `k` largest eigenvalues of a symmetric tridiagonal matrix, descending,
/// by Sturm bisection. Robust and O(k n log(1/tol)).
pub fn top_eigenvalues(diag: &[f64], off: &[f64], k: usize, tol: f64) -> Vec<f64> {
    let n = diag.len();
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = (if i > 0 { off[i - 1].abs() } else { 0.0 })
            + (if i < n - 1 { off[i].abs() } else { 0.0 });
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let mut out = Vec::with_capacity(k);
    for j in 0..k.min(n) {
        // eigenvalue with exactly (n - 1 - j) eigenvalues below it
        let want = n - 1 - j;
        let (mut a, mut b) = (lo, hi);
        while b - a > tol * (1.0 + a.abs().max(b.abs())) {
            let m = 0.5 * (a + b);
            if sturm_count(diag, off, m) > want {
                b = m;
            } else {
                a = m;
            }
        }
        out.push(0.5 * (a + b));
    }
    out
}

/// Eigenvector for a known eigenvalue of a symmetric tridiagonal matrix by
/// inverse iteration, normalized to unit Euclidean norm.
pub fn eigenvector(diag: &[f64], off: &[f64], lambda: f64) -> Vec<f64> {
    let n = diag.len();
    let shift = lambda + 1e-10 * (1.0 + lambda.abs());
    let lower: Vec<Complex64> = off.iter().map(|&o| Complex64::new(o, 0.0)).collect();
    let upper = lower.clone();
    let d: Vec<Complex64> = diag.iter().map(|&v| Complex64::new(v - shift, 0.0)).collect();

    let mut v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(((i * 2654435761 + 1013904223) % 1000) as f64 / 1000.0 - 0.5, 0.0))
        .collect();
    let mut scratch = Vec::new();
    for _ in 0..4 {
        thomas_solve(&lower, &d, &upper, &mut v, &mut scratch);
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in v.iter_mut() {
            *c /= norm;
        }
    }
    // fix overall sign: make the largest-magnitude component positive
    let mut idx = 0;
    let mut best = 0.0;
    for (i, c) in v.iter().enumerate() {
        if c.re.abs() > best {
            best = c.re.abs();
            idx = i;
        }
    }
    let sgn = if v[idx].re < 0.0 { -1.0 } else { 1.0 };
    v.iter().map(|c| sgn * c.re).collect()
}

/// Permittivity of one grid cell [x - dx/2, x + dx/2] for a piecewise layout
/// of core intervals painted onto a cladding background, averaged over the
/// cell. Averaging the permittivity across step interfaces restores
/// second-order accuracy of the finite-difference operators.
pub fn cell_averaged_index(
    x: f64,
    dx: f64,
    intervals: &[(f64, f64, f64)],
    n_background: f64,
) -> f64 {
    let mut eps = n_background * n_background;
    let lo = x - 0.5 * dx;
    let hi = x + 0.5 * dx;
    for &(a, b, n_core) in intervals {
        let ov = (hi.min(b) - lo.max(a)).max(0.0);
        if ov > 0.0 {
            eps += ov / dx * (n_core * n_core - n_background * n_background);
        }
    }
    eps.sqrt()
}

/// A finite-difference guided mode of an arbitrary 1D index profile.
#[derive(Debug, Clone)]
pub struct FdMode {
    pub n_eff: f64,
    /// Profile normalized so that sum(psi^2) dx = 1.
    pub profile: Vec<f64>,
}

/// Guided modes (n_eff > max cladding index at the profile edges) of an
/// arbitrary index profile n(x) sampled with uniform spacing `dx`, for vacuum
/// wavenumber `k0`. Modes are returned in descending n_eff order.
pub fn fd_guided_modes(n_profile: &[f64], dx: f64, k0: f64, max_modes: usize) -> Vec<FdMode> {
    let n = n_profile.len();
    let inv_dx2 = 1.0 / (dx * dx);
    let diag: Vec<f64> = n_profile
        .iter()
        .map(|&ni| -2.0 * inv_dx2 + k0 * k0 * ni * ni)
        .collect();
    let off = vec![inv_dx2; n - 1];

    let n_clad = n_profile[0].max(n_profile[n - 1]);
    let cutoff = (k0 * n_clad) * (k0 * n_clad);

    let vals = top_eigenvalues(&diag, &off, max_modes + 2, 1e-13);
    let mut modes = Vec::new();
    for v in vals {
        if v <= cutoff || modes.len() >= max_modes {
            break;
        }
        let profile: Vec<f64> = {
            let raw = eigenvector(&diag, &off, v);
            let norm: f64 = raw.iter().map(|p| p * p).sum::<f64>() * dx;
            raw.iter().map(|p| p / norm.sqrt()).collect()
        };
        modes.push(FdMode { n_eff: v.sqrt() / k0, profile });
    }
    modes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_reproduces_dense_solution() {
        // random-ish diagonally dominant system, checked by residual
        let n = 12;
        let lower: Vec<Complex64> =
            (0..n - 1).map(|i| Complex64::new(0.3 + 0.01 * i as f64, -0.2)).collect();
        let upper: Vec<Complex64> =
            (0..n - 1).map(|i| Complex64::new(-0.25, 0.1 + 0.02 * i as f64)).collect();
        let diag: Vec<Complex64> =
            (0..n).map(|i| Complex64::new(2.0 + 0.1 * i as f64, 0.7)).collect();
        let rhs: Vec<Complex64> =
            (0..n).map(|i| Complex64::new(i as f64, 1.0 - i as f64 * 0.3)).collect();

        let mut x = rhs.clone();
        let mut scratch = Vec::new();
        thomas_solve(&lower, &diag, &upper, &mut x, &mut scratch);

        for i in 0..n {
            let mut r = diag[i] * x[i];
            if i > 0 {
                r += lower[i - 1] * x[i - 1];
            }
            if i < n - 1 {
                r += upper[i] * x[i + 1];
            }
            assert!((r - rhs[i]).norm() < 1e-10, "residual {} at row {}", (r - rhs[i]).norm(), i);
        }
    }

    #[test]
    fn sturm_eigenvalues_of_laplacian() {
        // -d2/dx2 on [0, pi] with Dirichlet ends: eigenvalues -k^2 for the
        // sign convention here (diag = -2/dx^2), so the largest are known.
        let n = 200;
        let dx = std::f64::consts::PI / (n as f64 + 1.0);
        let diag = vec![-2.0 / (dx * dx); n];
        let off = vec![1.0 / (dx * dx); n - 1];
        let vals = top_eigenvalues(&diag, &off, 3, 1e-12);
        for (j, v) in vals.iter().enumerate() {
            let k = (j + 1) as f64;
            let expect = -(2.0 / (dx * dx)) * (1.0 - (k * dx).cos());
            assert!((v - expect).abs() < 1e-6 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn fd_modes_match_analytic_slab() {
        // step-index slab with cell-averaged interfaces; reference values
        // cross-checked against the dispersion-relation solver in modes.rs
        let k0 = 2.0 * std::f64::consts::PI / 1.55;
        let dx = 0.02;
        let half = 30.0;
        let n = (2.0 * half / dx) as usize + 1;
        let prof: Vec<f64> = (0..n)
            .map(|i| {
                let x = -half + i as f64 * dx;
                cell_averaged_index(x, dx, &[(-2.0, 2.0, 1.47)], 1.45)
            })
            .collect();
        let modes = fd_guided_modes(&prof, dx, k0, 4);
        assert_eq!(modes.len(), 2);
        assert!((modes[0].n_eff - 1.464584792).abs() < 2e-6, "{}", modes[0].n_eff);
        assert!((modes[1].n_eff - 1.451764274).abs() < 2e-6, "{}", modes[1].n_eff);
        // orthonormality
        let dot: f64 =
            modes[0].profile.iter().zip(&modes[1].profile).map(|(a, b)| a * b).sum::<f64>() * dx;
        assert!(dot.abs() < 1e-8);
    }
}
