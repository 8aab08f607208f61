use modebell::bpm::propagate;
use modebell::circuit::*;
use modebell::field::{total_power, ScalarField};
use modebell::layout::{DeviceLayout, PortSide, Segment, Track};
use modebell::modes::solve_te_modes_at;
use num_complex::Complex64;
use std::time::Instant;

fn main() {
    let scheme = Scheme::default();
    let m = scheme.materials;
    let g = scheme.geom;

    let ldc = demux_transfer_length(m, g.bus_width, g.demux_gap).unwrap();
    let extra = demux_bend_extra_length(m, g.bus_width, 16.0 - 3.75, g.route_length).unwrap();
    println!("FD transfer length = {ldc:.1} um; bend extra = {extra:.1} um");

    // demux + departure bend probe: inject TE1, measure power routed into K
    // after the bend (the geometry the gate actually uses)
    let xc = 26.0;
    let xk0 = xc - g.bus_width - g.demux_gap;
    let xk1 = 3.75;
    let lpar = (ldc - extra).max(100.0);
    let mut lay = DeviceLayout::new(m);
    lay.push(Segment::new(
        "demux",
        lpar,
        vec![Track::straight(g.bus_width, xc), Track::straight(g.bus_width, xk0)],
    ));
    lay.push(Segment::new(
        "route",
        g.route_length,
        vec![Track::straight(g.bus_width, xc), Track::bent(g.bus_width, xk0, xk1)],
    ));
    lay.add_port("in", PortSide::Input, xc, g.bus_width);
    let grid = scheme.grid(52.0).unwrap();
    let basis = solve_te_modes_at(&m.slab(g.bus_width), &grid, 0.0, 2).unwrap();
    let n0 = 0.5 * (m.core_index + m.clad_index);
    for mode in 0..2 {
        let t0 = Instant::now();
        let mut f = ScalarField::zeros(grid.clone(), m.wavelength, n0);
        let prof = basis.profiles_at(xc);
        f.add_profile(&prof[mode], Complex64::new(1.0, 0.0));
        let t = propagate(&f, &lay, &scheme.disc.params(), 0).unwrap();
        let out = t.final_field;
        let pk = out.window_power(xk1 - 6.0, xk1 + 6.0);
        let pb = out.window_power(xc - 6.0, xc + 6.0);
        println!(
            "  TE{mode} in bus: -> K {:.4}, stays {:.4}, total {:.4}  [{:.2?}]",
            pk, pb, total_power(&out), t0.elapsed()
        );
    }

    let eta = kerr_xpm_overlap(m, &g).unwrap();
    println!("eta_xpm = {eta:.4}, kappa_pi est = {:.2}", std::f64::consts::PI / (2.0 * eta));

    let t1 = Instant::now();
    let kpi = scheme.calibrate_kappa_pi().unwrap();
    println!("calibrated kappa_pi = {kpi:.3} [{:.1?}]", t1.elapsed());
    let t1 = Instant::now();
    let psi = scheme.gate_psi().unwrap();
    println!("gate psi_dn = {psi:.6} [{:.1?}]", t1.elapsed());
    let tt = scheme.gate_truth_table(kpi).unwrap();
    println!("truth table (00,01,10,11) = [{:.4}, {:.4}, {:.4}, {:.4}]", tt[0], tt[1], tt[2], tt[3]);

    let t2 = Instant::now();
    let cfg = CircuitConfig { kerr_strength: kpi, ..Default::default() };
    for lam_i in 0..8 {
        let lam = lam_i as f64 * std::f64::consts::PI / 4.0;
        let r = scheme.measure(&cfg, lam).unwrap();
        println!(
            "  lambda={lam:.3}: A={:+.4} B={:+.4} Pc={:.4} Pt={:.4}",
            r.a, r.b, r.power_control, r.power_target
        );
    }
    println!("[{:.1?} for 8 measures]", t2.elapsed());
}
