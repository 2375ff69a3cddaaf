//! Parametric cross-section of the glass–silicon–glass gyroscope stack and
//! its rasterization onto a uniform Cartesian grid.
//!
//! Layout coordinates are in micrometres with the origin at the lower-left
//! corner of the bottom glass; grid coordinates are in metres.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::materials::MaterialId;

const UM: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("gap height must be positive, got {0} um")]
    GapNonPositive(f64),
    #[error("{name} must be positive, got {value} um")]
    NonPositiveLength { name: &'static str, value: f64 },
    #[error("proof masses and coupling beam ({needed} um) do not fit in the cavity ({available} um)")]
    RegionOverflow { needed: f64, available: f64 },
    #[error("wire region does not fit on the coupling beam")]
    WireOutsideBeam,
    #[error("only the two-mass tuning-fork layout is supported, got {0} proof masses")]
    UnsupportedProofMassCount(u32),
    #[error("grid needs at least 2x2 cells, got {nx}x{ny}")]
    TooFewCells { nx: usize, ny: usize },
    #[error("region {index} ({material}) is {size:.3} um thick, thinner than one {axis} cell ({cell:.3} um)")]
    ResolutionTooCoarse { index: usize, material: MaterialId, axis: char, size: f64, cell: f64 },
}

/// Axis-aligned rectangle `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center_x(&self) -> f64 {
        0.5 * (self.x0 + self.x1)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    pub fn overlap_area(&self, other: &Rect) -> f64 {
        let w = self.x1.min(other.x1) - self.x0.max(other.x0);
        let h = self.y1.min(other.y1) - self.y0.max(other.y0);
        if w > 0.0 && h > 0.0 {
            w * h
        } else {
            0.0
        }
    }

    pub fn mirrored(&self, axis_x: f64) -> Rect {
        Rect::new(2.0 * axis_x - self.x1, self.y0, 2.0 * axis_x - self.x0, self.y1)
    }
}

/// Straight probe line between two points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: [f64; 2],
    pub end: [f64; 2],
}

impl Segment {
    pub fn horizontal(x0: f64, x1: f64, y: f64) -> Self {
        Self { start: [x0, y], end: [x1, y] }
    }

    pub fn length(&self) -> f64 {
        (self.end[0] - self.start[0]).hypot(self.end[1] - self.start[1])
    }
}

pub const PROBE_ABOVE_LEFT: &str = "above-proofmass-left";
pub const PROBE_ABOVE_RIGHT: &str = "above-proofmass-right";
pub const PROBE_UNDER_LEFT: &str = "under-proofmass-left";
pub const PROBE_UNDER_RIGHT: &str = "under-proofmass-right";
pub const PROBE_DRIVING_AXIS: &str = "driving-axis";

/// Device cross-section parameters, all lengths in micrometres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceParams {
    /// Distance between the proof-mass top surface and the top glass.
    pub gap_height_um: f64,
    /// Inner width of the cavity holding the proof masses and coupling beam.
    pub cavity_width_um: f64,
    /// Width of the bonded silicon frame on each side of the cavity.
    pub frame_width_um: f64,
    pub top_glass_thickness_um: f64,
    pub bottom_glass_thickness_um: f64,
    pub silicon_thickness_um: f64,
    pub proof_mass_width_um: f64,
    pub proof_mass_count: u32,
    /// Central coupling beam carrying the drive wire.
    pub coupling_beam_width_um: f64,
    pub wire_width_um: f64,
    /// Wire thickness, measured down from the top of the silicon layer.
    pub wire_thickness_um: f64,
    pub bottom_cavity_depth_um: f64,
    /// The beam is anchored to the bottom glass through the bottom cavity.
    pub anchored_beam: bool,
    /// Silicon suspension tether across each frame-side channel, centred on
    /// the silicon layer; 0 leaves the channels open over their full height.
    pub tether_thickness_um: f64,
    /// Close the side channels so the bottom cavity is sealed from the gap.
    pub sealed_bottom: bool,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self {
            gap_height_um: 50.0,
            cavity_width_um: 4000.0,
            frame_width_um: 500.0,
            top_glass_thickness_um: 500.0,
            bottom_glass_thickness_um: 500.0,
            silicon_thickness_um: 100.0,
            proof_mass_width_um: 1200.0,
            proof_mass_count: 2,
            coupling_beam_width_um: 400.0,
            wire_width_um: 200.0,
            wire_thickness_um: 25.0,
            bottom_cavity_depth_um: 50.0,
            anchored_beam: true,
            tether_thickness_um: 50.0,
            sealed_bottom: false,
        }
    }
}

impl DeviceParams {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.gap_height_um > 0.0) {
            return Err(GeometryError::GapNonPositive(self.gap_height_um));
        }
        let lengths = [
            ("cavity_width_um", self.cavity_width_um),
            ("frame_width_um", self.frame_width_um),
            ("top_glass_thickness_um", self.top_glass_thickness_um),
            ("bottom_glass_thickness_um", self.bottom_glass_thickness_um),
            ("silicon_thickness_um", self.silicon_thickness_um),
            ("proof_mass_width_um", self.proof_mass_width_um),
            ("coupling_beam_width_um", self.coupling_beam_width_um),
            ("wire_width_um", self.wire_width_um),
            ("wire_thickness_um", self.wire_thickness_um),
            ("bottom_cavity_depth_um", self.bottom_cavity_depth_um),
        ];
        for (name, value) in lengths {
            if !(value > 0.0) {
                return Err(GeometryError::NonPositiveLength { name, value });
            }
        }
        if self.proof_mass_count != 2 {
            return Err(GeometryError::UnsupportedProofMassCount(self.proof_mass_count));
        }
        let needed = 2.0 * self.proof_mass_width_um + self.coupling_beam_width_um;
        if needed >= self.cavity_width_um {
            return Err(GeometryError::RegionOverflow { needed, available: self.cavity_width_um });
        }
        if self.wire_width_um > self.coupling_beam_width_um || self.wire_thickness_um >= self.silicon_thickness_um {
            return Err(GeometryError::WireOutsideBeam);
        }
        let tether_room = self.silicon_thickness_um - 2.0 * self.wire_thickness_um;
        if !(self.tether_thickness_um >= 0.0) || self.tether_thickness_um > tether_room {
            return Err(GeometryError::NonPositiveLength { name: "tether room below the wire", value: tether_room - self.tether_thickness_um });
        }
        Ok(())
    }

    /// Width of each fluid channel beside a proof mass.
    pub fn clearance_um(&self) -> f64 {
        (self.cavity_width_um - 2.0 * self.proof_mass_width_um - self.coupling_beam_width_um) / 4.0
    }

    pub fn total_width_um(&self) -> f64 {
        self.cavity_width_um + 2.0 * self.frame_width_um
    }

    pub fn total_height_um(&self) -> f64 {
        self.bottom_glass_thickness_um
            + self.bottom_cavity_depth_um
            + self.silicon_thickness_um
            + self.gap_height_um
            + self.top_glass_thickness_um
    }

    /// Thinnest vertical fluid feature (top gap or bottom cavity).
    pub fn min_fluid_height_um(&self) -> f64 {
        self.gap_height_um.min(self.bottom_cavity_depth_um)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceLayout {
    pub params: DeviceParams,
    pub regions: Vec<(Rect, MaterialId)>,
    pub bounding_box: Rect,
    pub named_probes: BTreeMap<String, Segment>,
    /// Left then right proof mass.
    pub proof_masses: Vec<Rect>,
    pub heat_source: Rect,
}

impl DeviceLayout {
    pub fn area_of(&self, material: MaterialId) -> f64 {
        self.regions.iter().filter(|(_, m)| *m == material).map(|(r, _)| r.area()).sum()
    }

    pub fn material_at(&self, x: f64, y: f64) -> Option<MaterialId> {
        self.regions.iter().find(|(r, _)| r.contains(x, y)).map(|&(_, m)| m)
    }

    /// Sum of region areas minus bounding-box area, and the total pairwise
    /// overlap. Both are zero for an exact tiling.
    pub fn tiling_defects(&self) -> (f64, f64) {
        let total: f64 = self.regions.iter().map(|(r, _)| r.area()).sum();
        let mut overlap = 0.0;
        for (i, (a, _)) in self.regions.iter().enumerate() {
            for (b, _) in &self.regions[i + 1..] {
                overlap += a.overlap_area(b);
            }
        }
        (total - self.bounding_box.area(), overlap)
    }
}

/// Build the tiled cross-section.
///
/// Bottom to top: bottom glass; bottom cavity etched into the silicon (frame
/// at the sides, optional beam anchor in the middle); the silicon layer with
/// frame, side channels, two proof masses, slots and the coupling beam whose
/// top carries the aluminum wire; the gap recessed into the top glass; the
/// top glass.
pub fn build_device(params: &DeviceParams) -> Result<DeviceLayout, GeometryError> {
    params.validate()?;
    let p = params;
    let w = p.total_width_um();
    let clear = p.clearance_um();
    let xc = 0.5 * w;

    // Column edges across the silicon layer.
    let cav0 = p.frame_width_um;
    let cav1 = cav0 + p.cavity_width_um;
    let pm_l = Rect::new(cav0 + clear, 0.0, cav0 + clear + p.proof_mass_width_um, 0.0);
    let beam0 = pm_l.x1 + clear;
    let beam1 = beam0 + p.coupling_beam_width_um;
    let pm_r_x0 = beam1 + clear;
    let wire0 = xc - 0.5 * p.wire_width_um;
    let wire1 = xc + 0.5 * p.wire_width_um;

    let y_cav0 = p.bottom_glass_thickness_um;
    let y_si0 = y_cav0 + p.bottom_cavity_depth_um;
    let y_wire0 = y_si0 + p.silicon_thickness_um - p.wire_thickness_um;
    let y_si1 = y_si0 + p.silicon_thickness_um;
    let y_gap1 = y_si1 + p.gap_height_um;
    let h = y_gap1 + p.top_glass_thickness_um;

    let channel = if p.sealed_bottom { MaterialId::Silicon } else { MaterialId::Air };
    let mut regions = Vec::new();
    let mut band = |y0: f64, y1: f64, cols: &[(f64, MaterialId)]| {
        if y1 <= y0 {
            return;
        }
        let mut x0 = 0.0;
        for &(x1, m) in cols {
            if x1 > x0 {
                regions.push((Rect::new(x0, y0, x1, y1), m));
            }
            x0 = x1;
        }
    };

    band(0.0, y_cav0, &[(w, MaterialId::PyrexGlass)]);
    if p.anchored_beam {
        band(
            y_cav0,
            y_si0,
            &[
                (cav0, MaterialId::Silicon),
                (beam0, MaterialId::Air),
                (beam1, MaterialId::Silicon),
                (cav1, MaterialId::Air),
                (w, MaterialId::Silicon),
            ],
        );
    } else {
        band(y_cav0, y_si0, &[(cav0, MaterialId::Silicon), (cav1, MaterialId::Air), (w, MaterialId::Silicon)]);
    }
    let si_cols = |outer: MaterialId, beam: &[(f64, MaterialId)]| {
        let mut cols = vec![
            (cav0, MaterialId::Silicon),
            (pm_l.x0, outer),
            (pm_l.x1, MaterialId::Silicon),
            (beam0, channel),
        ];
        cols.extend_from_slice(beam);
        cols.extend_from_slice(&[
            (pm_r_x0, channel),
            (pm_r_x0 + p.proof_mass_width_um, MaterialId::Silicon),
            (cav1, outer),
            (w, MaterialId::Silicon),
        ]);
        cols
    };
    let solid_beam = [(beam1, MaterialId::Silicon)];
    let y_tether0 = if p.tether_thickness_um > 0.0 {
        y_si0 + 0.5 * (p.silicon_thickness_um - p.tether_thickness_um)
    } else {
        y_si0
    };
    let y_tether1 = y_tether0 + p.tether_thickness_um;
    band(y_si0, y_tether0, &si_cols(channel, &solid_beam));
    band(y_tether0, y_tether1, &si_cols(MaterialId::Silicon, &solid_beam));
    band(y_tether1, y_wire0, &si_cols(channel, &solid_beam));
    band(
        y_wire0,
        y_si1,
        &si_cols(channel, &[(wire0, MaterialId::Silicon), (wire1, MaterialId::Aluminum), (beam1, MaterialId::Silicon)]),
    );
    band(y_si1, y_gap1, &[(cav0, MaterialId::PyrexGlass), (cav1, MaterialId::Air), (w, MaterialId::PyrexGlass)]);
    band(y_gap1, h, &[(w, MaterialId::PyrexGlass)]);

    let proof_masses = vec![
        Rect::new(pm_l.x0, y_si0, pm_l.x1, y_si1),
        Rect::new(pm_r_x0, y_si0, pm_r_x0 + p.proof_mass_width_um, y_si1),
    ];
    let y_above = 0.5 * (y_si1 + y_gap1);
    let y_under = 0.5 * (y_cav0 + y_si0);
    let named_probes = BTreeMap::from([
        (PROBE_ABOVE_LEFT.to_string(), Segment::horizontal(proof_masses[0].x0, proof_masses[0].x1, y_above)),
        (PROBE_ABOVE_RIGHT.to_string(), Segment::horizontal(proof_masses[1].x0, proof_masses[1].x1, y_above)),
        (PROBE_UNDER_LEFT.to_string(), Segment::horizontal(proof_masses[0].x0, proof_masses[0].x1, y_under)),
        (PROBE_UNDER_RIGHT.to_string(), Segment::horizontal(proof_masses[1].x0, proof_masses[1].x1, y_under)),
        (PROBE_DRIVING_AXIS.to_string(), Segment::horizontal(cav0, cav1, y_above)),
    ]);

    Ok(DeviceLayout {
        params: params.clone(),
        regions,
        bounding_box: Rect::new(0.0, 0.0, w, h),
        named_probes,
        proof_masses,
        heat_source: Rect::new(wire0, y_wire0, wire1, y_si1),
    })
}

/// Uniform structured grid with one material per cell.
///
/// Cell `(i, j)` has flat index `j * nx + i`; `i` runs along x and `j` along y.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    /// Cell sizes, m.
    pub dx: f64,
    pub dy: f64,
    pub material: Vec<MaterialId>,
    /// Probe segments snapped to cell-centre lines, m.
    pub probes: BTreeMap<String, Segment>,
}

impl Grid {
    /// Grid of `nx × ny` cells over `[0, width] × [0, height]` (metres), every
    /// cell holding `fill`.
    pub fn uniform(nx: usize, ny: usize, width: f64, height: f64, fill: MaterialId) -> Result<Self, GeometryError> {
        if nx < 2 || ny < 2 {
            return Err(GeometryError::TooFewCells { nx, ny });
        }
        Ok(Self {
            nx,
            ny,
            dx: width / nx as f64,
            dy: height / ny as f64,
            material: vec![fill; nx * ny],
            probes: BTreeMap::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn width(&self) -> f64 {
        self.dx * self.nx as f64
    }

    pub fn height(&self) -> f64 {
        self.dy * self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn xc(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    pub fn yc(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dy
    }

    pub fn cell_centers(&self) -> (Vec<f64>, Vec<f64>) {
        ((0..self.nx).map(|i| self.xc(i)).collect(), (0..self.ny).map(|j| self.yc(j)).collect())
    }

    pub fn x_faces(&self) -> Vec<f64> {
        (0..=self.nx).map(|i| i as f64 * self.dx).collect()
    }

    pub fn y_faces(&self) -> Vec<f64> {
        (0..=self.ny).map(|j| j as f64 * self.dy).collect()
    }

    pub fn material_at(&self, i: usize, j: usize) -> MaterialId {
        self.material[self.idx(i, j)]
    }

    pub fn count(&self, material: MaterialId) -> usize {
        self.material.iter().filter(|&&m| m == material).count()
    }

    /// Label 4-connected components of the cells (by flat index) selected by
    /// `is_member`.
    /// Returns per-cell labels (`None` outside the selection) and the number
    /// of components.
    pub fn components(&self, is_member: impl Fn(usize) -> bool) -> (Vec<Option<usize>>, usize) {
        let mut label = vec![None; self.len()];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.len() {
            if label[start].is_some() || !is_member(start) {
                continue;
            }
            label[start] = Some(count);
            queue.push_back(start);
            while let Some(c) = queue.pop_front() {
                let (i, j) = (c % self.nx, c / self.nx);
                let mut visit = |n: usize| {
                    if label[n].is_none() && is_member(n) {
                        label[n] = Some(count);
                        queue.push_back(n);
                    }
                };
                if i > 0 {
                    visit(c - 1);
                }
                if i + 1 < self.nx {
                    visit(c + 1);
                }
                if j > 0 {
                    visit(c - self.nx);
                }
                if j + 1 < self.ny {
                    visit(c + self.nx);
                }
            }
            count += 1;
        }
        (label, count)
    }

    /// Index of the cell-centre line nearest to `x` (m).
    pub fn nearest_column(&self, x: f64) -> usize {
        ((x / self.dx - 0.5).round().max(0.0) as usize).min(self.nx - 1)
    }

    pub fn nearest_row(&self, y: f64) -> usize {
        ((y / self.dy - 0.5).round().max(0.0) as usize).min(self.ny - 1)
    }
}

/// Tag each cell with the material of the region containing its centre.
pub fn rasterize(layout: &DeviceLayout, nx: usize, ny: usize) -> Result<Grid, GeometryError> {
    let bb = layout.bounding_box;
    let mut grid = Grid::uniform(nx, ny, bb.width() * UM, bb.height() * UM, MaterialId::Air)?;
    let (dx_um, dy_um) = (bb.width() / nx as f64, bb.height() / ny as f64);
    for (index, (r, m)) in layout.regions.iter().enumerate() {
        if r.width() < dx_um * (1.0 - 1e-9) {
            return Err(GeometryError::ResolutionTooCoarse {
                index,
                material: *m,
                axis: 'x',
                size: r.width(),
                cell: dx_um,
            });
        }
        if r.height() < dy_um * (1.0 - 1e-9) {
            return Err(GeometryError::ResolutionTooCoarse {
                index,
                material: *m,
                axis: 'y',
                size: r.height(),
                cell: dy_um,
            });
        }
    }
    for j in 0..ny {
        let y = bb.y0 + (j as f64 + 0.5) * dy_um;
        for i in 0..nx {
            let x = bb.x0 + (i as f64 + 0.5) * dx_um;
            grid.material[j * nx + i] = layout.material_at(x, y).expect("regions tile the bounding box");
        }
    }
    for (name, seg) in &layout.named_probes {
        let snap_x = |x: f64| grid.xc(grid.nearest_column((x - bb.x0) * UM));
        let snap_y = |y: f64| grid.yc(grid.nearest_row((y - bb.y0) * UM));
        let snapped = Segment {
            start: [snap_x(seg.start[0]), snap_y(seg.start[1])],
            end: [snap_x(seg.end[0]), snap_y(seg.end[1])],
        };
        grid.probes.insert(name.clone(), snapped);
    }
    Ok(grid)
}

/// Grid sized so that every layout edge of the default family falls on a
/// cell face: `dy = min_fluid_height / cells_per_gap`, `nx` as given.
pub fn rasterize_for_gap(layout: &DeviceLayout, nx: usize, min_ny: usize, cells_per_gap: usize) -> Result<Grid, GeometryError> {
    let dy = layout.params.min_fluid_height_um() / cells_per_gap.max(1) as f64;
    let ny = ((layout.bounding_box.height() / dy).ceil() as usize).max(min_ny);
    rasterize(layout, nx, ny)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(gap: f64) -> DeviceParams {
        DeviceParams { gap_height_um: gap, ..DeviceParams::default() }
    }

    #[test]
    fn default_layout_tiles_exactly() {
        for gap in [50.0, 100.0, 150.0, 200.0] {
            let layout = build_device(&params(gap)).unwrap();
            let (area_err, overlap) = layout.tiling_defects();
            assert_eq!(area_err, 0.0);
            assert_eq!(overlap, 0.0);
            assert_eq!(layout.regions.iter().filter(|(_, m)| *m == MaterialId::Aluminum).count(), 1);
        }
    }

    #[test]
    fn gap_above_proof_mass_has_requested_height() {
        let layout = build_device(&params(50.0)).unwrap();
        for pm in &layout.proof_masses {
            let x = pm.center_x();
            let above = layout
                .regions
                .iter()
                .find(|(r, m)| *m == MaterialId::Air && r.contains(x, pm.y1))
                .map(|(r, _)| *r)
                .unwrap();
            assert_eq!(above.y0, pm.y1);
            assert_eq!(above.height(), 50.0);
            assert_eq!(layout.material_at(x, above.y1), Some(MaterialId::PyrexGlass));
        }
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert_eq!(build_device(&params(0.0)).unwrap_err(), GeometryError::GapNonPositive(0.0));
        assert!(matches!(build_device(&params(-3.0)), Err(GeometryError::GapNonPositive(_))));
        let wide = DeviceParams { proof_mass_width_um: 2000.0, ..DeviceParams::default() };
        assert!(matches!(build_device(&wide), Err(GeometryError::RegionOverflow { .. })));
        let three = DeviceParams { proof_mass_count: 3, ..DeviceParams::default() };
        assert!(matches!(build_device(&three), Err(GeometryError::UnsupportedProofMassCount(3))));
        let wire = DeviceParams { wire_width_um: 500.0, ..DeviceParams::default() };
        assert_eq!(build_device(&wire).unwrap_err(), GeometryError::WireOutsideBeam);
    }

    #[test]
    fn symmetric_layout_mirrors_about_centreline() {
        let layout = build_device(&params(100.0)).unwrap();
        let axis = 0.5 * layout.bounding_box.width();
        for (r, m) in &layout.regions {
            let mirrored = r.mirrored(axis);
            assert!(layout.regions.iter().any(|(q, n)| n == m && *q == mirrored), "{r:?} has no mirror image");
        }
        let grid = rasterize(&layout, 100, 200).unwrap();
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                assert_eq!(grid.material_at(i, j), grid.material_at(grid.nx - 1 - i, j));
            }
        }
    }

    #[test]
    fn rasterized_areas_match_layout() {
        let layout = build_device(&params(150.0)).unwrap();
        // Deliberately misaligned with region edges.
        for (nx, ny) in [(97, 211), (200, 216), (133, 170)] {
            let grid = rasterize(&layout, nx, ny).unwrap();
            let (dx, dy) = (layout.bounding_box.width() / nx as f64, layout.bounding_box.height() / ny as f64);
            for m in MaterialId::ALL {
                let raster = grid.count(m) as f64 * dx * dy;
                let tol: f64 = layout
                    .regions
                    .iter()
                    .filter(|(_, rm)| *rm == m)
                    .map(|(r, _)| r.width() * dy + r.height() * dx + dx * dy)
                    .sum();
                assert!((raster - layout.area_of(m)).abs() <= tol, "{m}: {raster} vs {}", layout.area_of(m));
            }
        }
    }

    #[test]
    fn cell_centres_take_containing_material() {
        let layout = build_device(&params(50.0)).unwrap();
        let grid = rasterize(&layout, 200, 192).unwrap();
        let pm = layout.proof_masses[0];
        let i = grid.nearest_column(pm.center_x() * UM);
        let j = grid.nearest_row(0.5 * (pm.y0 + pm.y1) * UM);
        assert_eq!(grid.material_at(i, j), MaterialId::Silicon);
        let hs = layout.heat_source;
        let i = grid.nearest_column(hs.center_x() * UM);
        let j = grid.nearest_row(0.5 * (hs.y0 + hs.y1) * UM);
        assert_eq!(grid.material_at(i, j), MaterialId::Aluminum);
    }

    #[test]
    fn nested_refinement_preserves_materials() {
        let layout = build_device(&params(100.0)).unwrap();
        // 50 um x 12.5 um cells align with every default edge.
        let coarse = rasterize(&layout, 100, 100).unwrap();
        let fine = rasterize(&layout, 200, 200).unwrap();
        for j in 0..coarse.ny {
            for i in 0..coarse.nx {
                let m = coarse.material_at(i, j);
                for (a, b) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    assert_eq!(fine.material_at(2 * i + a, 2 * j + b), m);
                }
            }
        }
    }

    #[test]
    fn too_coarse_grid_is_rejected() {
        let layout = build_device(&params(50.0)).unwrap();
        assert!(matches!(rasterize(&layout, 200, 20), Err(GeometryError::ResolutionTooCoarse { axis: 'y', .. })));
        assert!(matches!(rasterize(&layout, 1, 20), Err(GeometryError::TooFewCells { .. })));
    }

    #[test]
    fn larger_gap_adds_fluid_above_proof_masses() {
        let mut last = 0;
        for gap in [50.0, 100.0, 150.0, 200.0] {
            let layout = build_device(&params(gap)).unwrap();
            let grid = rasterize_for_gap(&layout, 100, 2, 8).unwrap();
            assert!(grid.dy <= 50.0 * UM / 8.0 + 1e-15);
            let pm = layout.proof_masses[0];
            let above = (0..grid.ny)
                .filter(|&j| grid.yc(j) > pm.y1 * UM)
                .flat_map(|j| (0..grid.nx).map(move |i| (i, j)))
                .filter(|&(i, j)| {
                    let x = grid.xc(i);
                    x > pm.x0 * UM && x < pm.x1 * UM && grid.material_at(i, j) == MaterialId::Air
                })
                .count();
            assert!(above > last);
            last = above;
        }
    }

    #[test]
    fn fluid_forms_one_component_unless_sealed() {
        let layout = build_device(&params(50.0)).unwrap();
        let grid = rasterize(&layout, 200, 192).unwrap();
        let (_, n) = grid.components(|c| grid.material[c] == MaterialId::Air);
        assert_eq!(n, 1);
        let sealed = build_device(&DeviceParams { sealed_bottom: true, ..params(50.0) }).unwrap();
        let grid = rasterize(&sealed, 200, 192).unwrap();
        let (_, n) = grid.components(|c| grid.material[c] == MaterialId::Air);
        // Top gap plus the two halves of the bottom cavity split by the anchor.
        assert_eq!(n, 3);
    }

    #[test]
    fn probes_snap_to_cell_centres() {
        let layout = build_device(&params(50.0)).unwrap();
        let grid = rasterize(&layout, 200, 192).unwrap();
        for seg in grid.probes.values() {
            for p in [seg.start, seg.end] {
                let fi = p[0] / grid.dx - 0.5;
                let fj = p[1] / grid.dy - 0.5;
                assert!((fi - fi.round()).abs() < 1e-9 && (fj - fj.round()).abs() < 1e-9);
            }
        }
        assert_eq!(grid.probes.len(), 5);
    }
}
