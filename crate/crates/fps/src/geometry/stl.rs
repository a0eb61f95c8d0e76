//! Binary STL export and import.
//!
//! Layout: 80-byte header, little-endian u32 triangle count, then 50
//! bytes per triangle (normal + three vertices as f32 triples plus a
//! zero u16 attribute count).

use super::{GeometryError, TriangleMesh};
use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

const HEADER: &[u8; 80] = &[0u8; 80];

/// Serializes a mesh as binary STL into `writer`; `destination` names
/// the target in error messages.
pub fn export_stl<W: Write>(
    mesh: &TriangleMesh,
    writer: &mut W,
    destination: &str,
) -> Result<(), GeometryError> {
    let io_err = |source| GeometryError::Io {
        destination: destination.to_string(),
        source,
    };
    writer.write_all(HEADER).map_err(io_err)?;
    writer
        .write_all(&(mesh.triangles.len() as u32).to_le_bytes())
        .map_err(io_err)?;
    let mut record = [0u8; 50];
    for t in &mesh.triangles {
        let a = mesh.vertices[t[0] as usize];
        let b = mesh.vertices[t[1] as usize];
        let c = mesh.vertices[t[2] as usize];
        let n = triangle_normal(a, b, c);
        let mut off = 0;
        for v in [n, a, b, c] {
            for k in 0..3 {
                record[off..off + 4].copy_from_slice(&(v[k] as f32).to_le_bytes());
                off += 4;
            }
        }
        record[48] = 0;
        record[49] = 0;
        writer.write_all(&record).map_err(io_err)?;
    }
    Ok(())
}

/// Binary STL as an in-memory byte stream.
pub fn stl_bytes(mesh: &TriangleMesh) -> Vec<u8> {
    let mut buf = Vec::with_capacity(84 + 50 * mesh.triangles.len());
    export_stl(mesh, &mut buf, "<memory>").expect("Vec writes cannot fail");
    buf
}

/// Writes binary STL to a file path.
pub fn write_stl_file(mesh: &TriangleMesh, path: &Path) -> Result<(), GeometryError> {
    let dest = path.display().to_string();
    let mut file = std::fs::File::create(path).map_err(|source| GeometryError::Io {
        destination: dest.clone(),
        source,
    })?;
    export_stl(mesh, &mut file, &dest)
}

/// Reads binary STL, welding vertices that are bit-identical as f32
/// so closed meshes round-trip watertight.
pub fn read_stl<R: Read>(reader: &mut R, source_name: &str) -> Result<TriangleMesh, GeometryError> {
    let io_err = |source| GeometryError::Io {
        destination: source_name.to_string(),
        source,
    };
    let mut header = [0u8; 80];
    reader.read_exact(&mut header).map_err(io_err)?;
    let mut count_bytes = [0u8; 4];
    reader.read_exact(&mut count_bytes).map_err(io_err)?;
    let count = u32::from_le_bytes(count_bytes) as usize;

    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut index: HashMap<[u32; 3], u32> = HashMap::new();
    let mut triangles = Vec::with_capacity(count);
    let mut record = [0u8; 50];
    for _ in 0..count {
        reader.read_exact(&mut record).map_err(io_err)?;
        let mut tri = [0u32; 3];
        for (v, slot) in tri.iter_mut().enumerate() {
            // Skip the normal (first 12 bytes).
            let base = 12 + v * 12;
            let mut bits = [0u32; 3];
            let mut coords = [0f64; 3];
            for k in 0..3 {
                let raw = u32::from_le_bytes(
                    record[base + 4 * k..base + 4 * k + 4].try_into().unwrap(),
                );
                bits[k] = raw;
                coords[k] = f32::from_bits(raw) as f64;
            }
            *slot = *index.entry(bits).or_insert_with(|| {
                vertices.push(coords);
                (vertices.len() - 1) as u32
            });
        }
        triangles.push(tri);
    }
    Ok(TriangleMesh {
        vertices,
        triangles,
    })
}

fn triangle_normal(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> [f64; 3] {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let n = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if len > 0.0 {
        [n[0] / len, n[1] / len, n[2] / len]
    } else {
        [0.0, 0.0, 0.0]
    }
}
