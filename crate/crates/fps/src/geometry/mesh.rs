//! Watertight surface mesh generation for the parametric screw.
//!
//! The surface is built as a stack of closed vertex rings: the outer
//! envelope (thread crests, flexure slot, tip cap) is sampled as a
//! radius field r(z, theta), the bore is a straight inner wall, and a
//! flat annular cap closes the head end. Because every strip shares
//! its boundary rings with its neighbors the mesh is watertight by
//! construction and can never self-intersect.

use super::{GeometryError, ScrewSpec, TriangleMesh};
use std::f64::consts::PI;

// Fraction of the wall thickness left as a web at the slot root. The
// cut stops just short of the bore so the surface stays a single
// manifold sheet; the thin web is removed by the solver's knock-down
// factor, not by the mesh.
const SLOT_WEB_FRACTION: f64 = 0.05;

/// Generates the watertight, outward-oriented screw surface.
///
/// `segments_per_turn` is the circumferential resolution (minimum 16);
/// `axial_segments` subdivides the shaft. The axial step must be fine
/// enough to resolve the flexure slot (at most `slot_width / 2`),
/// otherwise a resolution error is returned.
pub fn generate_surface_mesh(
    spec: &ScrewSpec,
    segments_per_turn: usize,
    axial_segments: usize,
) -> Result<TriangleMesh, GeometryError> {
    spec.validate().map_err(GeometryError::InvalidSpec)?;
    if segments_per_turn < 16 {
        return Err(GeometryError::Resolution(format!(
            "segments_per_turn = {segments_per_turn}, minimum is 16"
        )));
    }
    if axial_segments < 8 {
        return Err(GeometryError::Resolution(format!(
            "axial_segments = {axial_segments}, minimum is 8"
        )));
    }
    let shaft_len = spec.shaft_length();
    let dz = shaft_len / axial_segments as f64;
    if spec.slot_width > 0.0 && dz > spec.slot_width / 2.0 {
        let needed = (2.0 * shaft_len / spec.slot_width).ceil() as usize;
        return Err(GeometryError::Resolution(format!(
            "axial step {dz:.3} mm cannot resolve slot_width {} mm; \
             use at least {needed} axial segments",
            spec.slot_width
        )));
    }

    let nt = segments_per_turn;
    let r_bore = spec.cannula_d / 2.0;
    let mut b = Builder::new(nt);

    // Outer envelope over the shaft.
    let mut rings: Vec<u32> = Vec::new();
    for i in 0..=axial_segments {
        let z = shaft_len * i as f64 / axial_segments as f64;
        rings.push(b.ring(z, |theta| outer_radius(spec, z, theta)));
    }

    // Tip: hemispherical cap tapering to the bore radius, or a flat
    // end when tip_radius = 0.
    let top_bore_ring: Option<u32>;
    let mut apex: Option<u32> = None;
    if spec.tip_radius > 0.0 {
        let r_tip = spec.tip_radius;
        let z_extent = (r_tip * r_tip - r_bore * r_bore).sqrt();
        let n_tip = ((z_extent / dz).ceil() as usize).max(8);
        let phi_max = (z_extent / r_tip).asin();
        let last = if r_bore > 0.0 { n_tip } else { n_tip - 1 };
        for k in 1..=last {
            let phi = phi_max * k as f64 / n_tip as f64;
            let z = shaft_len + r_tip * phi.sin();
            let r = r_tip * phi.cos();
            rings.push(b.ring(z, |_| r));
        }
        if r_bore > 0.0 {
            // The last tip ring sits exactly on the bore radius and is
            // shared with the inner wall.
            top_bore_ring = Some(*rings.last().unwrap());
        } else {
            apex = Some(b.point([0.0, 0.0, shaft_len + r_tip]));
            top_bore_ring = None;
        }
    } else if r_bore > 0.0 {
        // Flat end: annular cap from the outer envelope down to the
        // bore at z = shaft_len.
        let ring = b.ring(shaft_len, |_| r_bore);
        top_bore_ring = Some(ring);
    } else {
        apex = Some(b.point([0.0, 0.0, shaft_len]));
        top_bore_ring = None;
    };

    // Side wall strips over the outer envelope.
    for w in rings.windows(2) {
        b.strip(w[0], w[1]);
    }
    // Close the far end.
    match (top_bore_ring, apex) {
        (Some(_), _) if spec.tip_radius > 0.0 => {
            // Already closed: the tip strip ends on the shared bore ring.
        }
        (Some(top), _) => {
            // Flat end cap (normals +Z): outer last ring down to bore.
            b.cap_up(*rings.last().unwrap(), top);
        }
        (None, Some(a)) => b.fan_up(*rings.last().unwrap(), a),
        (None, None) => unreachable!(),
    }

    if r_bore > 0.0 {
        let top = top_bore_ring.expect("bore requires a top ring");
        let bottom = b.ring(0.0, |_| r_bore);
        // Inner wall, oriented toward the axis.
        b.strip(top, bottom);
        // Head-end annular cap (normals -Z).
        b.cap_down(rings[0], bottom);
    } else {
        let center = b.point([0.0, 0.0, 0.0]);
        b.fan_down(rings[0], center);
    }

    let mesh = b.finish();
    debug_assert!(mesh.check_watertight().is_ok());
    Ok(mesh)
}

/// Outer surface radius at axial position `z`, angle `theta`.
fn outer_radius(spec: &ScrewSpec, z: f64, theta: f64) -> f64 {
    let core_r = spec.core_d / 2.0;
    let r_bore = spec.cannula_d / 2.0;
    // Flexure slot: a helical cut through the wall, leaving a thin web
    // at the root so the surface stays manifold.
    if spec.slot_width > 0.0 && z > spec.len_rigid && z < spec.shaft_length() {
        let period = spec.slot_pitch / spec.slot_starts as f64;
        let s = (z - spec.slot_pitch * theta / (2.0 * PI)).rem_euclid(period);
        let d = s.min(period - s);
        if d <= spec.slot_width / 2.0 {
            return r_bore + SLOT_WEB_FRACTION * (core_r - r_bore);
        }
    }
    core_r + thread_height_at(spec, z, theta)
}

/// Radial height of the trapezoidal thread above the root cylinder.
/// Crest width is pitch/8 with 30-degree flanks; the radial depth is
/// half the diametral thread height.
fn thread_height_at(spec: &ScrewSpec, z: f64, theta: f64) -> f64 {
    if spec.thread_height <= 0.0 {
        return 0.0;
    }
    let depth = spec.thread_height / 2.0;
    let crest_half = spec.pitch / 16.0;
    let flank = depth * 30f64.to_radians().tan();
    let u = (z - spec.pitch * theta / (2.0 * PI)).rem_euclid(spec.pitch);
    let d = u.min(spec.pitch - u);
    if d <= crest_half {
        depth
    } else if d <= crest_half + flank {
        depth * (1.0 - (d - crest_half) / flank)
    } else {
        0.0
    }
}

/// Accumulates rings of `nt` vertices and stitches them into strips,
/// caps, and fans with consistent outward winding.
struct Builder {
    nt: usize,
    vertices: Vec<[f64; 3]>,
    triangles: Vec<[u32; 3]>,
}

impl Builder {
    fn new(nt: usize) -> Self {
        Builder {
            nt,
            vertices: Vec::new(),
            triangles: Vec::new(),
        }
    }

    /// Adds a ring of vertices at height `z`; returns the index of its
    /// first vertex.
    fn ring(&mut self, z: f64, radius: impl Fn(f64) -> f64) -> u32 {
        let first = self.vertices.len() as u32;
        for j in 0..self.nt {
            let theta = 2.0 * PI * j as f64 / self.nt as f64;
            let r = radius(theta);
            self.vertices.push([r * theta.cos(), r * theta.sin(), z]);
        }
        first
    }

    fn point(&mut self, p: [f64; 3]) -> u32 {
        self.vertices.push(p);
        (self.vertices.len() - 1) as u32
    }

    fn quad(&mut self, a: u32, b: u32, c: u32, d: u32) {
        self.triangles.push([a, b, c]);
        self.triangles.push([a, c, d]);
    }

    /// Wall strip between `lower` (smaller z) and `upper` rings, wound
    /// so normals point away from the axis when lower is below upper.
    /// Swapping the arguments flips the orientation, which is how the
    /// bore wall points inward.
    fn strip(&mut self, lower: u32, upper: u32) {
        let nt = self.nt as u32;
        for j in 0..nt {
            let j1 = (j + 1) % nt;
            self.quad(lower + j, lower + j1, upper + j1, upper + j);
        }
    }

    /// Annular cap at the head end (normals -Z): `outer` and `inner`
    /// rings at the same z.
    fn cap_down(&mut self, outer: u32, inner: u32) {
        let nt = self.nt as u32;
        for j in 0..nt {
            let j1 = (j + 1) % nt;
            self.quad(inner + j, inner + j1, outer + j1, outer + j);
        }
    }

    /// Annular cap at the far end (normals +Z).
    fn cap_up(&mut self, outer: u32, inner: u32) {
        let nt = self.nt as u32;
        for j in 0..nt {
            let j1 = (j + 1) % nt;
            self.quad(outer + j, outer + j1, inner + j1, inner + j);
        }
    }

    /// Fan closing the far end onto an apex vertex (normals away from
    /// the solid).
    fn fan_up(&mut self, ring: u32, apex: u32) {
        let nt = self.nt as u32;
        for j in 0..nt {
            let j1 = (j + 1) % nt;
            self.triangles.push([ring + j, ring + j1, apex]);
        }
    }

    /// Fan closing the head end onto a center vertex (normals -Z).
    fn fan_down(&mut self, ring: u32, center: u32) {
        let nt = self.nt as u32;
        for j in 0..nt {
            let j1 = (j + 1) % nt;
            self.triangles.push([ring + j1, ring + j, center]);
        }
    }

    fn finish(self) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices,
            triangles: self.triangles,
        }
    }
}
