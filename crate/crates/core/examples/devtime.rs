use modebell::bpm::propagate;
use modebell::circuit::*;
use modebell::field::ScalarField;
use modebell::modes::solve_te_modes_at;
use modebell::oracle::{Sign, StateKind};
use num_complex::Complex64;
use std::time::Instant;

fn main() {
    let scheme = Scheme::default();
    let m = scheme.materials;

    // pure propagation timing reference
    let t3 = Instant::now();
    let grid = modebell::grid::Grid::symmetric(57.0, 0.05).unwrap();
    let basis = solve_te_modes_at(&m.slab(4.0), &grid, 0.0, 2).unwrap();
    let mut f = ScalarField::zeros(grid.clone(), m.wavelength, 1.46);
    f.add_profile(&basis.profiles[0], Complex64::new(1.0, 0.0));
    let guide = modebell::bpm::UniformMedium { index: 1.45, length: 7000.0 };
    let _ = propagate(&f, &guide, &scheme.disc.params(), 0).unwrap();
    println!("uniform 7mm reference [{:.2?}]", t3.elapsed());

    // product bypass scheme (no gate calibrations needed)
    let t1 = Instant::now();
    let cfg = CircuitConfig {
        state_kind: StateKind::Product { control: Sign::Plus, target: Sign::Plus },
        ..Default::default()
    };
    let parts = scheme.build_full_scheme(&cfg, 0.0).unwrap();
    println!("bypass build [{:.2?}] z={:.0}", t1.elapsed(), parts.layout.total_length());
    let t2 = Instant::now();
    let traj = propagate(&parts.input, &parts.layout, &scheme.disc.params(), 0).unwrap();
    println!("bypass propagation [{:.2?}]", t2.elapsed());
    let r = parts.readout(&traj.final_field).unwrap();
    println!("readout A={:+.4} B={:+.4} Pc={:.4} Pt={:.4}", r.a, r.b, r.power_control, r.power_target);
}
