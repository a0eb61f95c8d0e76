//! Parametric screw geometry: cross-section profile, section
//! properties, surface mesh generation, and STL export.
//!
//! All lengths are millimeters. The screw axis is +Z with the head end
//! at z = 0, the rigid (head-side) region first, then the flexible
//! region, then the rounded tip.

mod mesh;
mod stl;

pub use mesh::generate_surface_mesh;
pub use stl::{export_stl, read_stl, stl_bytes, write_stl_file};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

/// Axial region of the screw shaft.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Rigid,
    Flexible,
    Tip,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Rigid => write!(f, "rigid"),
            Region::Flexible => write!(f, "flexible"),
            Region::Tip => write!(f, "tip"),
        }
    }
}

/// All parametric dimensions of the flexible screw, in mm.
///
/// The thread height is diametral: the radial thread depth is
/// `thread_height / 2`, so crest diameter `core_d + thread_height`
/// equals `od` for the default dimensions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScrewSpec {
    /// Thread outer (crest) diameter.
    pub od: f64,
    /// Shaft / thread-root diameter.
    pub core_d: f64,
    /// Thread pitch.
    pub pitch: f64,
    /// Thread height, diametral.
    pub thread_height: f64,
    /// Flexible region length.
    pub len_flexible: f64,
    /// Rigid region length.
    pub len_rigid: f64,
    /// Central through-bore diameter. Zero means a solid shaft.
    pub cannula_d: f64,
    /// Rounded-tip radius. Zero means a flat end.
    pub tip_radius: f64,
    /// Flexure slot gap width. Zero disables the slot.
    pub slot_width: f64,
    /// Flexure slot helix pitch.
    pub slot_pitch: f64,
    /// Number of helical slot starts.
    pub slot_starts: u32,
}

// Accept JSON keyed by the field names; the secondary parameters fall
// back to their defaults when omitted (tip_radius to core_d / 2).
impl<'de> Deserialize<'de> for ScrewSpec {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            od: f64,
            core_d: f64,
            pitch: f64,
            thread_height: f64,
            len_flexible: f64,
            len_rigid: f64,
            cannula_d: f64,
            tip_radius: Option<f64>,
            slot_width: Option<f64>,
            slot_pitch: Option<f64>,
            slot_starts: Option<u32>,
        }
        let raw = Raw::deserialize(deserializer)?;
        Ok(ScrewSpec {
            od: raw.od,
            core_d: raw.core_d,
            pitch: raw.pitch,
            thread_height: raw.thread_height,
            len_flexible: raw.len_flexible,
            len_rigid: raw.len_rigid,
            cannula_d: raw.cannula_d,
            tip_radius: raw.tip_radius.unwrap_or(raw.core_d / 2.0),
            slot_width: raw.slot_width.unwrap_or(1.0),
            slot_pitch: raw.slot_pitch.unwrap_or(4.0),
            slot_starts: raw.slot_starts.unwrap_or(1),
        })
    }
}

impl ScrewSpec {
    /// The published 9 mm screw dimensions with the default flexure
    /// slot parameters.
    pub fn paper() -> Self {
        ScrewSpec {
            od: 9.0,
            core_d: 6.0,
            pitch: 4.0,
            thread_height: 3.0,
            len_flexible: 30.8,
            len_rigid: 18.0,
            cannula_d: 3.0,
            tip_radius: 3.0,
            slot_width: 1.0,
            slot_pitch: 4.0,
            slot_starts: 1,
        }
    }

    /// Shaft length excluding the tip cap.
    pub fn shaft_length(&self) -> f64 {
        self.len_rigid + self.len_flexible
    }

    /// Returns `Ok(())` for a valid spec, or the full violation list.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let v = validate_spec(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }
}

/// A single violated spec invariant, named by the constraint on the
/// offending fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub constraint: &'static str,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.constraint)
    }
}

/// Checks every spec invariant and returns all violations; an empty
/// list means the spec is valid.
///
/// Degenerate values are allowed where they simply disable a feature:
/// `cannula_d = 0` (solid shaft), `thread_height = 0` with
/// `core_d = od` (plain shaft), `slot_width = 0` (no slot),
/// `tip_radius = 0` (flat end).
pub fn validate_spec(spec: &ScrewSpec) -> Vec<Violation> {
    let mut v = Vec::new();
    let mut check = |ok: bool, constraint: &'static str| {
        if !ok {
            v.push(Violation { constraint });
        }
    };
    check(spec.cannula_d >= 0.0, "cannula_d >= 0");
    check(spec.cannula_d < spec.core_d, "cannula_d < core_d");
    check(spec.core_d > 0.0, "core_d > 0");
    check(spec.core_d <= spec.od, "core_d <= od");
    check(spec.thread_height >= 0.0, "thread_height >= 0");
    check(
        spec.thread_height <= spec.od - spec.core_d,
        "thread_height <= od - core_d",
    );
    check(spec.pitch > 0.0, "pitch > 0");
    check(spec.len_flexible > 0.0, "len_flexible > 0");
    check(spec.len_rigid > 0.0, "len_rigid > 0");
    check(spec.slot_width >= 0.0, "slot_width >= 0");
    check(spec.slot_pitch > 0.0, "slot_pitch > 0");
    check(spec.slot_width < spec.slot_pitch, "slot_width < slot_pitch");
    check(spec.slot_starts >= 1, "slot_starts >= 1");
    check(spec.tip_radius >= 0.0, "tip_radius >= 0");
    if spec.tip_radius > 0.0 {
        // The bore must pass through the tip cap.
        check(spec.cannula_d < 2.0 * spec.tip_radius, "cannula_d < 2 * tip_radius");
    }
    v
}

/// Errors raised by the geometry operations.
#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("invalid screw spec: {}", format_violations(.0))]
    InvalidSpec(Vec<Violation>),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resolution too low: {0}")]
    Resolution(String),
    #[error("mesh integrity violation: {0}")]
    Integrity(String),
    #[error("I/O failure on {destination}: {source}")]
    Io {
        destination: String,
        #[source]
        source: std::io::Error,
    },
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.constraint)
        .collect::<Vec<_>>()
        .join("; ")
}

/// One axial station of the cross-section profile. Diameters describe
/// the structural (thread-root) envelope; thread material is excluded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Station {
    pub z: f64,
    pub outer_d: f64,
    pub inner_d: f64,
    pub region: Region,
}

/// Axial decomposition of the screw into tagged stations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionProfile {
    pub stations: Vec<Station>,
}

impl SectionProfile {
    /// Axial length covered by the rigid + flexible stations.
    pub fn profiled_length(&self) -> f64 {
        self.stations
            .iter()
            .filter(|s| s.region != Region::Tip)
            .last()
            .map(|s| s.z)
            .unwrap_or(0.0)
    }
}

/// Builds the station profile for a valid spec: `[0, L_r]` tagged
/// rigid, `(L_r, L_r + L_f]` flexible, then the tip segment.
pub fn build_profile(spec: &ScrewSpec) -> Result<SectionProfile, GeometryError> {
    spec.validate().map_err(GeometryError::InvalidSpec)?;
    let mut stations = Vec::new();
    let step = 1.0_f64;
    let push_span = |z0: f64, z1: f64, region: Region, stations: &mut Vec<Station>| {
        let n = ((z1 - z0) / step).ceil().max(1.0) as usize;
        for k in 0..=n {
            let z = z0 + (z1 - z0) * k as f64 / n as f64;
            // Region boundaries belong to the earlier region, so skip
            // the duplicate start station of the later span.
            if k == 0 && !stations.is_empty() {
                continue;
            }
            stations.push(Station {
                z,
                outer_d: spec.core_d,
                inner_d: spec.cannula_d,
                region,
            });
        }
    };
    push_span(0.0, spec.len_rigid, Region::Rigid, &mut stations);
    push_span(
        spec.len_rigid,
        spec.shaft_length(),
        Region::Flexible,
        &mut stations,
    );
    if spec.tip_radius > 0.0 {
        // Hemispherical cap: outer diameter tapers from core_d down
        // toward the bore; stop before inner meets outer.
        let r_tip = spec.tip_radius;
        let r_bore = spec.cannula_d / 2.0;
        let z_extent = (r_tip * r_tip - r_bore * r_bore).sqrt();
        let n = 4;
        for k in 1..n {
            let dz = z_extent * k as f64 / n as f64;
            let r = (r_tip * r_tip - dz * dz).sqrt().min(spec.core_d / 2.0);
            stations.push(Station {
                z: spec.shaft_length() + dz,
                outer_d: 2.0 * r,
                inner_d: spec.cannula_d,
                region: Region::Tip,
            });
        }
    }
    Ok(SectionProfile { stations })
}

/// Annulus section properties: `(area, second moment of area)` in
/// mm^2 and mm^4.
pub fn section_properties(outer_d: f64, inner_d: f64) -> Result<(f64, f64), GeometryError> {
    if !(inner_d >= 0.0 && inner_d < outer_d) {
        return Err(GeometryError::Domain(format!(
            "section requires 0 <= inner_d < outer_d, got inner_d = {inner_d}, outer_d = {outer_d}"
        )));
    }
    let area = PI * (outer_d * outer_d - inner_d * inner_d) / 4.0;
    let second_moment = PI * (outer_d.powi(4) - inner_d.powi(4)) / 64.0;
    Ok((area, second_moment))
}

/// Indexed triangle mesh in mm. Triangles wind counter-clockwise seen
/// from outside the solid.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    /// Signed volume by the divergence theorem; positive for outward
    /// orientation. Does not check watertightness.
    pub fn signed_volume(&self) -> f64 {
        let mut six_v = 0.0;
        for t in &self.triangles {
            let a = self.vertices[t[0] as usize];
            let b = self.vertices[t[1] as usize];
            let c = self.vertices[t[2] as usize];
            six_v += a[0] * (b[1] * c[2] - b[2] * c[1])
                - a[1] * (b[0] * c[2] - b[2] * c[0])
                + a[2] * (b[0] * c[1] - b[1] * c[0]);
        }
        six_v / 6.0
    }

    /// Verifies that every directed edge appears exactly once and its
    /// reverse exactly once, i.e. the mesh is a closed, consistently
    /// oriented 2-manifold.
    pub fn check_watertight(&self) -> Result<(), GeometryError> {
        use std::collections::HashMap;
        let mut edges: HashMap<(u32, u32), u32> = HashMap::new();
        for t in &self.triangles {
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(GeometryError::Integrity(format!(
                    "degenerate triangle with repeated vertex indices {t:?}"
                )));
            }
            for k in 0..3 {
                let e = (t[k], t[(k + 1) % 3]);
                *edges.entry(e).or_insert(0) += 1;
            }
        }
        for (&(a, b), &count) in &edges {
            if count != 1 {
                return Err(GeometryError::Integrity(format!(
                    "directed edge ({a}, {b}) used {count} times"
                )));
            }
            if edges.get(&(b, a)) != Some(&1) {
                return Err(GeometryError::Integrity(format!(
                    "edge ({a}, {b}) has no matching opposite edge"
                )));
            }
        }
        Ok(())
    }

    /// Enclosed volume of a watertight, outward-oriented mesh.
    pub fn volume(&self) -> Result<f64, GeometryError> {
        self.check_watertight()?;
        let v = self.signed_volume();
        if v <= 0.0 {
            return Err(GeometryError::Integrity(format!(
                "signed volume {v} is not positive; mesh is inward-oriented"
            )));
        }
        Ok(v)
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }
}

/// Rigidly reorients a mesh for printing: the screw axis (+Z in model
/// space) ends up making `angle_deg` with the build plate (XY plane),
/// and the part is translated so min-Z = 0.
pub fn transform_for_build(mesh: &TriangleMesh, angle_deg: f64) -> TriangleMesh {
    // Rotate about Y by (90 - angle): +Z maps to
    // (cos(angle), 0, sin(angle)), which makes the requested angle
    // with the plate.
    let phi = (90.0 - angle_deg).to_radians();
    let (s, c) = phi.sin_cos();
    let mut vertices: Vec<[f64; 3]> = mesh
        .vertices
        .iter()
        .map(|v| [c * v[0] + s * v[2], v[1], -s * v[0] + c * v[2]])
        .collect();
    let min_z = vertices
        .iter()
        .map(|v| v[2])
        .fold(f64::INFINITY, f64::min);
    if min_z.is_finite() {
        for v in &mut vertices {
            v[2] -= min_z;
        }
    }
    TriangleMesh {
        vertices,
        triangles: mesh.triangles.clone(),
    }
}

/// Enclosed volume of a watertight mesh (free-function form of
/// [`TriangleMesh::volume`]).
pub fn mesh_volume(mesh: &TriangleMesh) -> Result<f64, GeometryError> {
    mesh.volume()
}
