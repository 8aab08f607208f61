//! Exact two-mode algebra for the joint control/target mode space: Bell-type
//! and product state constructors, the analyzer intensity-difference
//! operator, correlation expectations, and a closed-form coupled-mode model
//! of the nonlinear gate used as a fast backend and cross-check for the BPM
//! pipeline.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::modes::ModalAmplitudes;

pub const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Joint state family selected for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
    Product { control: Sign, target: Sign },
}

impl StateKind {
    pub fn is_product(&self) -> bool {
        matches!(self, StateKind::Product { .. })
    }

    /// Preparation settings: control superposition phase (0 or pi) and the
    /// injected target mode (0 or 1) for the gate-generated states.
    pub fn preparation(&self) -> (f64, usize) {
        match self {
            StateKind::PhiPlus => (0.0, 0),
            StateKind::PhiMinus => (std::f64::consts::PI, 0),
            StateKind::PsiPlus => (0.0, 1),
            StateKind::PsiMinus => (std::f64::consts::PI, 1),
            StateKind::Product { control, .. } => {
                (if *control == Sign::Plus { 0.0 } else { std::f64::consts::PI }, 0)
            }
        }
    }
}

impl std::fmt::Display for StateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StateKind::PhiPlus => write!(f, "phi+"),
            StateKind::PhiMinus => write!(f, "phi-"),
            StateKind::PsiPlus => write!(f, "psi+"),
            StateKind::PsiMinus => write!(f, "psi-"),
            StateKind::Product { control, target } => write!(
                f,
                "product({}{})",
                if *control == Sign::Plus { '+' } else { '-' },
                if *target == Sign::Plus { '+' } else { '-' }
            ),
        }
    }
}

/// Normalized joint state over {|0>c|0>t, |0>c|1>t, |1>c|0>t, |1>c|1>t}.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    pub coefficients: [Complex64; 4],
}

impl TwoModeState {
    pub fn new(coefficients: [Complex64; 4]) -> Self {
        let norm: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        assert!(norm > 0.0, "zero state");
        TwoModeState {
            coefficients: [
                coefficients[0] / norm,
                coefficients[1] / norm,
                coefficients[2] / norm,
                coefficients[3] / norm,
            ],
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &TwoModeState) -> Complex64 {
        self.coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Determinant of the 2x2 reshaped coefficient matrix; zero iff the state
    /// factorizes into control and target parts.
    pub fn schmidt_det(&self) -> Complex64 {
        let c = &self.coefficients;
        c[0] * c[3] - c[1] * c[2]
    }
}

/// Bell-type joint states produced by the gate from a control superposition.
pub fn make_entangled(kind: StateKind) -> TwoModeState {
    let r = FRAC_1_SQRT_2;
    let z = Complex64::new(0.0, 0.0);
    let c = |v: f64| Complex64::new(v, 0.0);
    match kind {
        StateKind::PhiPlus => TwoModeState::new([c(r), z, z, c(r)]),
        StateKind::PhiMinus => TwoModeState::new([c(r), z, z, c(-r)]),
        StateKind::PsiPlus => TwoModeState::new([z, c(r), c(r), z]),
        StateKind::PsiMinus => TwoModeState::new([z, c(r), c(-r), z]),
        StateKind::Product { control, target } => make_product(control, target),
    }
}

/// Tensor product of (|0> +/- |1>)/sqrt(2) single-guide superpositions.
pub fn make_product(sign_c: Sign, sign_t: Sign) -> TwoModeState {
    let sc = sign_c.factor();
    let st = sign_t.factor();
    let c = |v: f64| Complex64::new(v, 0.0);
    TwoModeState::new([c(1.0), c(st), c(sc), c(sc * st)])
}

/// General product state from arbitrary single-guide amplitudes.
pub fn product_state(control: [Complex64; 2], target: [Complex64; 2]) -> TwoModeState {
    TwoModeState::new([
        control[0] * target[0],
        control[0] * target[1],
        control[1] * target[0],
        control[1] * target[1],
    ])
}

/// Intensity-difference operator of a mode analyzer set to angle theta:
/// e^{2 i theta} |0><1| + e^{-2 i theta} |1><0|.
#[derive(Debug, Clone, Copy)]
pub struct AnalyzerOperator {
    pub theta: f64,
    pub matrix: [[Complex64; 2]; 2],
}

impl AnalyzerOperator {
    pub fn new(theta: f64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        let e = Complex64::from_polar(1.0, 2.0 * theta);
        AnalyzerOperator { theta, matrix: [[z, e], [e.conj(), z]] }
    }

    /// <psi| A |psi> for a single-guide state (c0, c1); real by Hermiticity.
    pub fn expectation(&self, c0: Complex64, c1: Complex64) -> f64 {
        2.0 * (c0.conj() * c1 * self.matrix[0][1]).re
    }

    pub fn is_hermitian(&self) -> bool {
        (self.matrix[0][1] - self.matrix[1][0].conj()).norm() < 1e-15
            && self.matrix[0][0].norm() < 1e-15
            && self.matrix[1][1].norm() < 1e-15
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        // off-diagonal Hermitian 2x2: +/- |m01|
        let m = self.matrix[0][1].norm();
        [m, -m]
    }
}

/// <state| A(theta1) (x) B(theta2) |state>, exact.
pub fn expect_correlation(state: &TwoModeState, theta1: f64, theta2: f64) -> f64 {
    let a = AnalyzerOperator::new(theta1).matrix;
    let b = AnalyzerOperator::new(theta2).matrix;
    let c = &state.coefficients;
    // psi indexed by (i_c, i_t) -> 2*i_c + i_t
    let mut out = Complex64::new(0.0, 0.0);
    for ic in 0..2 {
        for it in 0..2 {
            for jc in 0..2 {
                for jt in 0..2 {
                    out += c[2 * ic + it].conj() * a[ic][jc] * b[it][jt] * c[2 * jc + jt];
                }
            }
        }
    }
    out.re
}

/// Single-guide analyzer expectation <psi_c| A(theta) |psi_c> for a product
/// factor (used by the factorization checks).
pub fn single_expectation(c0: Complex64, c1: Complex64, theta: f64) -> f64 {
    AnalyzerOperator::new(theta).expectation(c0, c1)
}

/// Lumped parameters of the closed-form gate model. The defaults mirror the
/// behaviour of the BPM device: a mode-selective coupler routes the control's
/// antisymmetric-mode content along a Kerr section adjacent to one target
/// interferometer arm. `xpm_overlap` sets the conditional cross-phase,
/// `interference_residual` the detuning-suppressed two-source interference
/// picked up by the Kerr medium, and `exchange_angle` the residual linear
/// power exchange between the adjacent guides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CnotModelParams {
    pub xpm_overlap: f64,
    pub control_self_overlap: f64,
    pub exchange_angle: f64,
    pub exchange_phase: f64,
    pub interference_residual: f64,
    pub interference_phase: f64,
}

impl Default for CnotModelParams {
    fn default() -> Self {
        CnotModelParams {
            xpm_overlap: 0.10,
            control_self_overlap: 0.45,
            exchange_angle: 0.06,
            exchange_phase: 0.0,
            interference_residual: 0.04,
            interference_phase: std::f64::consts::FRAC_PI_2,
        }
    }
}

impl CnotModelParams {
    /// Kerr strength at which a full-power control pi-shifts the gate arm.
    pub fn kappa_pi(&self) -> f64 {
        std::f64::consts::PI / (2.0 * self.xpm_overlap)
    }
}

/// Closed-form coupled-mode model of the gate with explicit source phases.
pub fn classical_cnot_model_phases(
    control: &ModalAmplitudes,
    target: &ModalAmplitudes,
    phi1: f64,
    phi2: f64,
    kappa: f64,
    params: &CnotModelParams,
) -> (ModalAmplitudes, ModalAmplitudes) {
    let e1 = Complex64::from_polar(1.0, phi1);
    let e2 = Complex64::from_polar(1.0, phi2);
    let r = FRAC_1_SQRT_2;

    let p = control.c0 * e1;
    let g = control.c1 * e1;
    let u = (target.c0 + target.c1) * r * e2;
    let l = (target.c0 - target.c1) * r * e2;

    // residual detuned exchange between the gate arm and the control route
    let (sn, cs) = params.exchange_angle.sin_cos();
    let xp = Complex64::from_polar(1.0, params.exchange_phase);
    let l2 = l * cs - Complex64::i() * xp * sn * g;
    let g2 = g * cs - Complex64::i() * xp.conj() * sn * l;

    // Kerr phases: self + conditional cross-phase + residual interference
    let eta = params.xpm_overlap;
    let rho = params.interference_residual;
    let psi = Complex64::from_polar(1.0, params.interference_phase);
    let gg = params.control_self_overlap;
    let phi_l = kappa * (l2.norm_sqr() + 2.0 * eta * g2.norm_sqr())
        + 2.0 * kappa * rho * (g2 * l2.conj() * psi).re;
    let phi_g = kappa * (gg * g2.norm_sqr() + 2.0 * eta * l2.norm_sqr())
        + 2.0 * kappa * rho * (l2 * g2.conj() * psi).re;

    // static trims: bias the interferometer to identity for an idle control
    let l3 = l2 * Complex64::from_polar(1.0, phi_l - 0.5 * kappa);
    let g3 = g2 * Complex64::from_polar(1.0, phi_g - 0.5 * kappa * gg);

    let c_out = ModalAmplitudes { c0: p, c1: g3, residual_power: 0.0 };
    let t_out = ModalAmplitudes {
        c0: (u + l3) * r,
        c1: (u - l3) * r,
        residual_power: 0.0,
    };
    (c_out, t_out)
}

/// Closed-form gate model with the ensemble phase on the control field.
pub fn classical_cnot_model(
    control: &ModalAmplitudes,
    target: &ModalAmplitudes,
    lambda: f64,
    kappa: f64,
) -> (ModalAmplitudes, ModalAmplitudes) {
    classical_cnot_model_phases(control, target, lambda, 0.0, kappa, &CnotModelParams::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn bell_state_coefficients() {
        let r = FRAC_1_SQRT_2;
        let phi_plus = make_entangled(StateKind::PhiPlus);
        assert!((phi_plus.coefficients[0] - c(r, 0.0)).norm() < 1e-15);
        assert!((phi_plus.coefficients[3] - c(r, 0.0)).norm() < 1e-15);
        let psi_minus = make_entangled(StateKind::PsiMinus);
        assert!((psi_minus.coefficients[1] - c(r, 0.0)).norm() < 1e-15);
        assert!((psi_minus.coefficients[2] - c(-r, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn bell_states_mutually_orthogonal() {
        let kinds =
            [StateKind::PhiPlus, StateKind::PhiMinus, StateKind::PsiPlus, StateKind::PsiMinus];
        for (i, a) in kinds.iter().enumerate() {
            for (j, b) in kinds.iter().enumerate() {
                let ov = make_entangled(*a).inner(&make_entangled(*b)).norm();
                if i == j {
                    assert!((ov - 1.0).abs() < 1e-14);
                } else {
                    assert!(ov < 1e-14);
                }
            }
        }
    }

    #[test]
    fn product_state_coefficients_and_rank() {
        let pp = make_product(Sign::Plus, Sign::Plus);
        for k in 0..4 {
            assert!((pp.coefficients[k] - c(0.5, 0.0)).norm() < 1e-15);
        }
        let pm = make_product(Sign::Plus, Sign::Minus);
        let expect = [0.5, -0.5, 0.5, -0.5];
        for k in 0..4 {
            assert!((pm.coefficients[k] - c(expect[k], 0.0)).norm() < 1e-15);
        }
        for sc in [Sign::Plus, Sign::Minus] {
            for st in [Sign::Plus, Sign::Minus] {
                assert!(make_product(sc, st).schmidt_det().norm() < 1e-14);
            }
        }
        // entangled states have full Schmidt rank
        assert!(make_entangled(StateKind::PhiPlus).schmidt_det().norm() > 0.4);
    }

    #[test]
    fn analyzer_operator_spectrum() {
        for theta in [0.0, 0.3, FRAC_PI_4, 1.0, PI, 4.7] {
            let a = AnalyzerOperator::new(theta);
            assert!(a.is_hermitian());
            let ev = a.eigenvalues();
            assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] + 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn phi_plus_correlation_is_cos_sum() {
        let s = make_entangled(StateKind::PhiPlus);
        for i in 0..13 {
            for j in 0..7 {
                let t1 = i as f64 * 0.37;
                let t2 = j as f64 * 0.61;
                let v = expect_correlation(&s, t1, t2);
                assert!((v - (2.0 * (t1 + t2)).cos()).abs() < 1e-12);
            }
        }
        let sm = make_entangled(StateKind::PhiMinus);
        assert!((expect_correlation(&sm, 0.3, 0.5) + (2.0_f64 * 0.8).cos()).abs() < 1e-12);
    }

    #[test]
    fn psi_plus_equal_angles_unity() {
        let s = make_entangled(StateKind::PsiPlus);
        for theta in [0.0, 0.2, 1.1, 2.9] {
            assert!((expect_correlation(&s, theta, theta) - 1.0).abs() < 1e-12);
        }
        let sm = make_entangled(StateKind::PsiMinus);
        assert!(
            (expect_correlation(&sm, 0.7, 0.2) + (2.0_f64 * 0.5).cos()).abs() < 1e-12
        );
    }

    #[test]
    fn product_correlation_factorizes() {
        let s = make_product(Sign::Plus, Sign::Plus);
        assert!((expect_correlation(&s, 0.0, 0.0) - 1.0).abs() < 1e-12);
        assert!(expect_correlation(&s, FRAC_PI_4, 0.0).abs() < 1e-12);

        // random product states: joint expectation = product of singles
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut rng = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..50 {
            let a = rng() * PI;
            let pa = rng() * 2.0 * PI;
            let b = rng() * PI;
            let pb = rng() * 2.0 * PI;
            let ctrl = [c(a.cos(), 0.0), Complex64::from_polar(a.sin(), pa)];
            let tgt = [c(b.cos(), 0.0), Complex64::from_polar(b.sin(), pb)];
            let s = product_state(ctrl, tgt);
            let t1 = rng() * PI;
            let t2 = rng() * PI;
            let joint = expect_correlation(&s, t1, t2);
            let fac = single_expectation(ctrl[0], ctrl[1], t1)
                * single_expectation(tgt[0], tgt[1], t2);
            assert!((joint - fac).abs() < 1e-12, "joint {joint} vs factorized {fac}");
        }
    }

    #[test]
    fn correlation_bounded_and_pi_periodic() {
        let states = [
            make_entangled(StateKind::PhiPlus),
            make_entangled(StateKind::PsiMinus),
            make_product(Sign::Minus, Sign::Plus),
            TwoModeState::new([c(0.3, 0.1), c(-0.2, 0.4), c(0.5, 0.0), c(0.1, -0.6)]),
        ];
        for s in &states {
            for i in 0..20 {
                let t1 = i as f64 * 0.33 - 2.0;
                let t2 = (i as f64).sin() * 3.0;
                let v = expect_correlation(s, t1, t2);
                assert!(v.abs() <= 1.0 + 1e-12);
                assert!((expect_correlation(s, t1 + PI, t2) - v).abs() < 1e-12);
                assert!((expect_correlation(s, t1, t2 + PI) - v).abs() < 1e-12);
            }
        }
    }

    fn amp(c0: Complex64, c1: Complex64) -> ModalAmplitudes {
        ModalAmplitudes { c0, c1, residual_power: 0.0 }
    }

    #[test]
    fn gate_model_identity_at_zero_kappa() {
        let ctrl = amp(c(1.0, 0.0), c(0.0, 0.0));
        for tgt_mode in 0..2 {
            let tgt = if tgt_mode == 0 {
                amp(c(1.0, 0.0), c(0.0, 0.0))
            } else {
                amp(c(0.0, 0.0), c(1.0, 0.0))
            };
            let (_, t_out) = classical_cnot_model(&ctrl, &tgt, 0.7, 0.0);
            let p = t_out.c0.norm_sqr() + t_out.c1.norm_sqr();
            let fid = if tgt_mode == 0 { t_out.c0.norm_sqr() } else { t_out.c1.norm_sqr() } / p;
            assert!(fid >= 0.99, "kappa=0 fidelity {fid}");
        }
    }

    #[test]
    fn gate_model_swaps_target_at_calibration() {
        let params = CnotModelParams::default();
        let kpi = params.kappa_pi();
        let ctrl = amp(c(0.0, 0.0), c(1.0, 0.0)); // full-power control on mode 1
        let tgt = amp(c(1.0, 0.0), c(0.0, 0.0));
        let (_, t_out) = classical_cnot_model(&ctrl, &tgt, 0.0, kpi);
        let p = t_out.c0.norm_sqr() + t_out.c1.norm_sqr();
        assert!(t_out.c1.norm_sqr() / p >= 0.95, "swap fidelity {}", t_out.c1.norm_sqr() / p);
        let tgt1 = amp(c(0.0, 0.0), c(1.0, 0.0));
        let (_, t_out) = classical_cnot_model(&ctrl, &tgt1, 0.0, kpi);
        let p = t_out.c0.norm_sqr() + t_out.c1.norm_sqr();
        assert!(t_out.c0.norm_sqr() / p >= 0.95);
    }

    #[test]
    fn gate_model_outputs_depend_on_lambda_for_superpositions() {
        let r = FRAC_1_SQRT_2;
        let ctrl = amp(c(r, 0.0), c(r, 0.0));
        let tgt = amp(c(1.0, 0.0), c(0.0, 0.0));
        let kappa = CnotModelParams::default().kappa_pi();
        let (_, t_a) = classical_cnot_model(&ctrl, &tgt, 0.0, kappa);
        let (_, t_b) = classical_cnot_model(&ctrl, &tgt, 1.3, kappa);
        let d01 = (t_a.c0.norm_sqr() - t_b.c0.norm_sqr()).abs();
        assert!(d01 > 1e-3, "no lambda dependence: {d01}");
    }

    #[test]
    fn gate_model_conserves_power() {
        let mut seed = 12345u64;
        let mut rng = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let ctrl = amp(
                Complex64::from_polar(rng(), rng() * 6.28),
                Complex64::from_polar(rng(), rng() * 6.28),
            );
            let tgt = amp(
                Complex64::from_polar(rng(), rng() * 6.28),
                Complex64::from_polar(rng(), rng() * 6.28),
            );
            let pin = ctrl.power() + tgt.power();
            let (c_out, t_out) = classical_cnot_model(&ctrl, &tgt, rng() * 6.28, rng() * 30.0);
            let pout = c_out.power() + t_out.power();
            assert!((pout - pin).abs() < 1e-9 * pin.max(1e-12), "power {pin} -> {pout}");
        }
    }
}
