//! Piecewise device geometry: z-ordered segments of guide tracks painted
//! onto a cladding background, with optional Kerr strips. A layout is the
//! index-map source consumed by the propagation engine and is serializable
//! for run reproducibility.

use serde::{Deserialize, Serialize};

use crate::bpm::SliceSource;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::modes::{fundamental_quartic_integral, SlabSpec};
use crate::numerics::cell_averaged_index;

/// Maximum guide tilt accepted for paraxial bends (5 degrees).
pub const MAX_SLOPE: f64 = 0.0875;

/// Background material system shared by a layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Materials {
    pub core_index: f64,
    pub clad_index: f64,
    pub wavelength: f64,
}

impl Materials {
    pub fn slab(&self, width: f64) -> SlabSpec {
        SlabSpec {
            core_index: self.core_index,
            clad_index: self.clad_index,
            core_width: width,
            wavelength: self.wavelength,
        }
    }

    pub fn k0(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BendShape {
    Straight,
    /// x(t) = x0 + (x1 - x0) (t - sin(2 pi t) / (2 pi)); zero end slopes.
    RaisedCosine,
}

/// One guide within a segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub width: f64,
    pub x_start: f64,
    pub x_end: f64,
    pub bend: BendShape,
    /// core index offset (phase modulators)
    pub dn: f64,
}

impl Track {
    pub fn straight(width: f64, x: f64) -> Track {
        Track { width, x_start: x, x_end: x, bend: BendShape::Straight, dn: 0.0 }
    }

    pub fn bent(width: f64, x_start: f64, x_end: f64) -> Track {
        Track { width, x_start, x_end, bend: BendShape::RaisedCosine, dn: 0.0 }
    }

    pub fn with_dn(mut self, dn: f64) -> Track {
        self.dn = dn;
        self
    }

    pub fn center(&self, t: f64) -> f64 {
        match self.bend {
            BendShape::Straight => self.x_start + (self.x_end - self.x_start) * t,
            BendShape::RaisedCosine => {
                let s =
                    t - (2.0 * std::f64::consts::PI * t).sin() / (2.0 * std::f64::consts::PI);
                self.x_start + (self.x_end - self.x_start) * s
            }
        }
    }

    pub fn max_slope(&self, length: f64) -> f64 {
        let dx = (self.x_end - self.x_start).abs();
        match self.bend {
            BendShape::Straight => dx / length,
            BendShape::RaisedCosine => 2.0 * dx / length,
        }
    }

    fn mirrored(&self) -> Track {
        Track { x_start: -self.x_start, x_end: -self.x_end, ..self.clone() }
    }
}

/// Transverse strip of Kerr material, constant within a segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KerrStrip {
    pub x_lo: f64,
    pub x_hi: f64,
    /// intensity-to-index coefficient n2 (index per unit |E|^2)
    pub n2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub length: f64,
    pub tracks: Vec<Track>,
    pub kerr: Vec<KerrStrip>,
    pub label: String,
}

impl Segment {
    pub fn new(label: &str, length: f64, tracks: Vec<Track>) -> Segment {
        Segment { length, tracks, kerr: Vec::new(), label: label.to_string() }
    }

    pub fn with_kerr(mut self, strip: KerrStrip) -> Segment {
        self.kerr.push(strip);
        self
    }

    fn is_z_invariant(&self) -> bool {
        self.tracks.iter().all(|t| t.bend == BendShape::Straight || t.x_start == t.x_end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PortSide {
    Input,
    Output,
}

/// Named transverse window at the device entry or exit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Port {
    pub name: String,
    pub side: PortSide,
    pub x_center: f64,
    pub width: f64,
}

impl Port {
    pub fn x_lo(&self) -> f64 {
        self.x_center - 0.5 * self.width
    }
    pub fn x_hi(&self) -> f64 {
        self.x_center + 0.5 * self.width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceLayout {
    pub materials: Materials,
    pub segments: Vec<Segment>,
    pub ports: Vec<Port>,
}

impl DeviceLayout {
    pub fn new(materials: Materials) -> DeviceLayout {
        DeviceLayout { materials, segments: Vec::new(), ports: Vec::new() }
    }

    pub fn push(&mut self, segment: Segment) -> &mut Self {
        self.segments.push(segment);
        self
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }

    pub fn port(&self, name: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn add_port(&mut self, name: &str, side: PortSide, x_center: f64, width: f64) {
        self.ports.push(Port { name: name.into(), side, x_center, width });
    }

    /// Append another fragment's segments; output ports are replaced by the
    /// appended fragment's output ports.
    pub fn append(&mut self, other: DeviceLayout) -> Result<()> {
        if other.materials != self.materials {
            return Err(Error::Geometry("fragment materials differ".into()));
        }
        self.ports.retain(|p| p.side == PortSide::Input);
        self.ports.extend(other.ports.into_iter().filter(|p| p.side == PortSide::Output));
        self.segments.extend(other.segments);
        Ok(())
    }

    /// Mirror image about x = 0.
    pub fn mirrored(&self) -> DeviceLayout {
        DeviceLayout {
            materials: self.materials,
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    length: s.length,
                    tracks: s.tracks.iter().map(Track::mirrored).collect(),
                    kerr: s
                        .kerr
                        .iter()
                        .map(|k| KerrStrip { x_lo: -k.x_hi, x_hi: -k.x_lo, n2: k.n2 })
                        .collect(),
                    label: s.label.clone(),
                })
                .collect(),
            ports: self
                .ports
                .iter()
                .map(|p| Port { x_center: -p.x_center, ..p.clone() })
                .collect(),
        }
    }

    /// Geometric validity: paraxial bends and non-overlapping cores within
    /// every segment.
    pub fn validate(&self) -> Result<()> {
        for seg in &self.segments {
            if seg.length <= 0.0 {
                return Err(Error::Geometry(format!("segment '{}' has no length", seg.label)));
            }
            for t in &seg.tracks {
                if t.max_slope(seg.length) > MAX_SLOPE {
                    return Err(Error::Geometry(format!(
                        "track in '{}' exceeds the paraxial slope bound: {:.4}",
                        seg.label,
                        t.max_slope(seg.length)
                    )));
                }
            }
            for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let mut spans: Vec<(f64, f64)> = seg
                    .tracks
                    .iter()
                    .map(|t| {
                        let c = t.center(frac);
                        (c - t.width / 2.0, c + t.width / 2.0)
                    })
                    .collect();
                spans.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                for w in spans.windows(2) {
                    if w[1].0 < w[0].1 - 1e-9 {
                        return Err(Error::Geometry(format!(
                            "overlapping guides in segment '{}'",
                            seg.label
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn segment_at(&self, z: f64) -> Option<(usize, f64, f64)> {
        let mut z0 = 0.0;
        for (i, s) in self.segments.iter().enumerate() {
            if z < z0 + s.length || i == self.segments.len() - 1 {
                return Some((i, z0, z0 + s.length));
            }
            z0 += s.length;
        }
        None
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("layout serialization")
    }

    pub fn from_json(text: &str) -> Result<DeviceLayout> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("layout parse: {e}")))
    }
}

impl SliceSource for DeviceLayout {
    fn total_length(&self) -> f64 {
        self.total_length()
    }

    fn fill_slice(&self, z: f64, grid: &Grid, linear: &mut [f64], kerr: &mut [f64]) {
        let clad = self.materials.clad_index;
        kerr.fill(0.0);
        let Some((idx, z0, z1)) = self.segment_at(z) else {
            linear.fill(clad);
            return;
        };
        let seg = &self.segments[idx];
        let t = ((z - z0) / (z1 - z0)).clamp(0.0, 1.0);
        let intervals: Vec<(f64, f64, f64)> = seg
            .tracks
            .iter()
            .map(|tr| {
                let c = tr.center(t);
                (c - tr.width / 2.0, c + tr.width / 2.0, self.materials.core_index + tr.dn)
            })
            .collect();
        let dx = grid.spacing();
        for (j, x) in grid.xs().enumerate() {
            linear[j] = cell_averaged_index(x, dx, &intervals, clad);
        }
        for strip in &seg.kerr {
            let (i0, i1) = grid.window(strip.x_lo, strip.x_hi);
            for item in kerr.iter_mut().take(i1 + 1).skip(i0) {
                *item = strip.n2;
            }
        }
    }

    fn constant_span(&self, z: f64) -> (f64, f64) {
        match self.segment_at(z) {
            Some((idx, z0, z1)) if self.segments[idx].is_z_invariant() => (z0, z1),
            _ => (z, z),
        }
    }
}

// ---------------------------------------------------------------------------
// Primitive layout fragments
// ---------------------------------------------------------------------------

/// Straight guide of the given width.
pub fn straight(materials: Materials, width: f64, length: f64) -> Result<DeviceLayout> {
    if width <= 0.0 || length <= 0.0 {
        return Err(Error::Geometry("straight: width and length must be positive".into()));
    }
    let mut l = DeviceLayout::new(materials);
    l.push(Segment::new("straight", length, vec![Track::straight(width, 0.0)]));
    l.add_port("in", PortSide::Input, 0.0, width);
    l.add_port("out", PortSide::Output, 0.0, width);
    l.validate()?;
    Ok(l)
}

/// Raised-cosine lateral offset of a single guide.
pub fn s_bend(materials: Materials, width: f64, offset: f64, length: f64) -> Result<DeviceLayout> {
    if width <= 0.0 || length <= 0.0 {
        return Err(Error::Geometry("s_bend: width and length must be positive".into()));
    }
    let mut l = DeviceLayout::new(materials);
    l.push(Segment::new("s_bend", length, vec![Track::bent(width, 0.0, offset)]));
    l.add_port("in", PortSide::Input, 0.0, width);
    l.add_port("out", PortSide::Output, offset, width);
    l.validate()?;
    Ok(l)
}

/// Symmetric Y junction: a two-moded bus of width `width` splits into two
/// half-width single-mode arms whose centers diverge to +/- arm_sep/2.
pub fn y_splitter(
    materials: Materials,
    width: f64,
    arm_sep: f64,
    length: f64,
) -> Result<DeviceLayout> {
    let w2 = width / 2.0;
    if arm_sep / 2.0 <= w2 {
        return Err(Error::Geometry("y_splitter: arms would stay overlapped".into()));
    }
    let mut l = DeviceLayout::new(materials);
    l.push(Segment::new(
        "y_splitter",
        length,
        vec![
            Track::bent(w2, w2 / 2.0, arm_sep / 2.0),
            Track::bent(w2, -w2 / 2.0, -arm_sep / 2.0),
        ],
    ));
    l.add_port("in", PortSide::Input, 0.0, width);
    l.add_port("plus", PortSide::Output, arm_sep / 2.0, w2 + 2.0);
    l.add_port("minus", PortSide::Output, -arm_sep / 2.0, w2 + 2.0);
    l.validate()?;
    Ok(l)
}

/// Two parallel guides of equal width separated by an edge-to-edge gap.
pub fn directional_coupler(
    materials: Materials,
    width: f64,
    gap: f64,
    length: f64,
) -> Result<DeviceLayout> {
    if gap <= 0.0 {
        return Err(Error::Geometry("directional_coupler: gap must be positive".into()));
    }
    let xc = (width + gap) / 2.0;
    let mut l = DeviceLayout::new(materials);
    l.push(Segment::new(
        "directional_coupler",
        length,
        vec![Track::straight(width, xc), Track::straight(width, -xc)],
    ));
    l.add_port("a_in", PortSide::Input, xc, width);
    l.add_port("b_in", PortSide::Input, -xc, width);
    l.add_port("a_out", PortSide::Output, xc, width);
    l.add_port("b_out", PortSide::Output, -xc, width);
    l.validate()?;
    Ok(l)
}

/// Core-index-shifted section; the index offset differentiates the modal
/// phases through the confinement difference of the guided modes.
pub fn phase_section(
    materials: Materials,
    width: f64,
    delta_n: f64,
    length: f64,
) -> Result<DeviceLayout> {
    let mut l = DeviceLayout::new(materials);
    l.push(Segment::new(
        "phase_section",
        length,
        vec![Track::straight(width, 0.0).with_dn(delta_n)],
    ));
    l.add_port("in", PortSide::Input, 0.0, width);
    l.add_port("out", PortSide::Output, 0.0, width);
    l.validate()?;
    Ok(l)
}

/// Kerr-medium-covered guide. `kappa` is the dimensionless nonlinear
/// strength: the self-phase k0 n2 P L <psi^4> accumulated by the guide's
/// fundamental mode at unit injected power equals kappa.
pub fn kerr_section(
    materials: Materials,
    width: f64,
    kappa: f64,
    length: f64,
) -> Result<DeviceLayout> {
    if kappa < 0.0 {
        return Err(Error::Geometry("kerr_section: kappa must be nonnegative".into()));
    }
    let n2 = kerr_n2_for(materials, width, kappa, length)?;
    let mut l = DeviceLayout::new(materials);
    l.push(
        Segment::new("kerr_section", length, vec![Track::straight(width, 0.0)]).with_kerr(
            KerrStrip { x_lo: -width / 2.0 - 4.0, x_hi: width / 2.0 + 4.0, n2 },
        ),
    );
    l.add_port("in", PortSide::Input, 0.0, width);
    l.add_port("out", PortSide::Output, 0.0, width);
    l.validate()?;
    Ok(l)
}

/// n2 realizing a given dimensionless Kerr strength for the fundamental mode
/// of a guide of the given width over `length`.
pub fn kerr_n2_for(materials: Materials, width: f64, kappa: f64, length: f64) -> Result<f64> {
    let i4 = fundamental_quartic_integral(&materials.slab(width))?;
    Ok(kappa / (materials.k0() * i4 * length))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mats() -> Materials {
        Materials { core_index: 1.47, clad_index: 1.45, wavelength: 1.55 }
    }

    #[test]
    fn slope_guard_rejects_steep_bends() {
        assert!(s_bend(mats(), 4.0, 30.0, 100.0).is_err());
        assert!(s_bend(mats(), 4.0, 10.0, 1000.0).is_ok());
    }

    #[test]
    fn overlap_guard_rejects_colliding_guides() {
        let mut l = DeviceLayout::new(mats());
        l.push(Segment::new(
            "bad",
            100.0,
            vec![Track::straight(4.0, 0.0), Track::straight(4.0, 3.0)],
        ));
        assert!(matches!(l.validate(), Err(Error::Geometry(_))));
    }

    #[test]
    fn slice_paints_cell_averaged_cores() {
        let l = directional_coupler(mats(), 4.0, 6.0, 100.0).unwrap();
        let grid = Grid::symmetric(20.0, 0.05).unwrap();
        let mut lin = vec![0.0; grid.n_points];
        let mut kerr = vec![0.0; grid.n_points];
        l.fill_slice(50.0, &grid, &mut lin, &mut kerr);
        let at = |x: f64| lin[((x - grid.x_min) / grid.spacing()).round() as usize];
        assert!((at(5.0) - 1.47).abs() < 1e-12);
        assert!((at(-5.0) - 1.47).abs() < 1e-12);
        assert!((at(0.0) - 1.45).abs() < 1e-12);
        assert!(kerr.iter().all(|k| *k == 0.0));
    }

    #[test]
    fn kerr_strip_painted() {
        let l = kerr_section(mats(), 2.0, 3.0, 500.0).unwrap();
        let grid = Grid::symmetric(20.0, 0.05).unwrap();
        let mut lin = vec![0.0; grid.n_points];
        let mut kerr = vec![0.0; grid.n_points];
        l.fill_slice(250.0, &grid, &mut lin, &mut kerr);
        let mid = grid.n_points / 2;
        assert!(kerr[mid] > 0.0);
        assert_eq!(kerr[0], 0.0);
    }

    #[test]
    fn mirror_round_trip() {
        let l = y_splitter(mats(), 4.0, 16.0, 800.0).unwrap();
        let m = l.mirrored().mirrored();
        assert_eq!(l, m);
    }

    #[test]
    fn json_round_trip() {
        let l = y_splitter(mats(), 4.0, 16.0, 800.0).unwrap();
        let text = l.to_json();
        let back = DeviceLayout::from_json(&text).unwrap();
        assert_eq!(l, back);
    }
}
