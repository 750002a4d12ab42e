//! Mesh serialization: Wavefront OBJ, a minimal embedded glTF 2.0, and JSON.

use std::fmt::Write as _;
use std::str::FromStr;

use base64::Engine as _;
use serde_json::json;

use super::FiberSurfaceMesh;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Gltf,
    Json,
}

impl MeshFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MeshFormat::Obj => "obj",
            MeshFormat::Gltf => "gltf",
            MeshFormat::Json => "json",
        }
    }
}

impl FromStr for MeshFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "obj" => Ok(MeshFormat::Obj),
            "gltf" => Ok(MeshFormat::Gltf),
            "json" => Ok(MeshFormat::Json),
            _ => Err(Error::UnknownFormat(s.to_string())),
        }
    }
}

pub fn export_mesh(m: &FiberSurfaceMesh, format: MeshFormat) -> Vec<u8> {
    match format {
        MeshFormat::Obj => to_obj(m).into_bytes(),
        MeshFormat::Gltf => to_gltf(m).into_bytes(),
        MeshFormat::Json => serde_json::to_vec(m).expect("mesh serializes"),
    }
}

/// Vertices, the segment parameter as texture `u`, and 1-based faces.
pub fn to_obj(m: &FiberSurfaceMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# fiber surface: {} vertices, {} triangles",
        m.vertices.len(),
        m.triangles.len()
    );
    for v in &m.vertices {
        let _ = writeln!(s, "v {} {} {}", v[0], v[1], v[2]);
    }
    for t in &m.params {
        let _ = writeln!(s, "vt {t} 0");
    }
    for tri in &m.triangles {
        let [a, b, c] = tri.map(|i| i + 1);
        let _ = writeln!(s, "f {a}/{a} {b}/{b} {c}/{c}");
    }
    s
}

pub fn to_gltf(m: &FiberSurfaceMesh) -> String {
    let asset = json!({"version": "2.0", "generator": "csplens"});
    if m.triangles.is_empty() {
        let doc = json!({"asset": asset, "scene": 0, "scenes": [{"nodes": []}]});
        return serde_json::to_string(&doc).expect("gltf serializes");
    }
    let mut buf = Vec::new();
    let mut lo = [f32::INFINITY; 3];
    let mut hi = [f32::NEG_INFINITY; 3];
    for v in &m.vertices {
        for a in 0..3 {
            let x = v[a] as f32;
            lo[a] = lo[a].min(x);
            hi[a] = hi[a].max(x);
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    let pos_len = buf.len();
    for &t in &m.params {
        buf.extend_from_slice(&(t as f32).to_le_bytes());
        buf.extend_from_slice(&0f32.to_le_bytes());
    }
    let uv_len = buf.len() - pos_len;
    for &i in m.triangles.iter().flatten() {
        buf.extend_from_slice(&i.to_le_bytes());
    }
    let idx_len = buf.len() - pos_len - uv_len;
    let uri = format!(
        "data:application/octet-stream;base64,{}",
        base64::engine::general_purpose::STANDARD.encode(&buf)
    );
    let doc = json!({
        "asset": asset,
        "scene": 0,
        "scenes": [{"nodes": [0]}],
        "nodes": [{"mesh": 0}],
        "meshes": [{"primitives": [{
            "attributes": {"POSITION": 0, "TEXCOORD_0": 1},
            "indices": 2,
            "mode": 4
        }]}],
        "buffers": [{"byteLength": buf.len(), "uri": uri}],
        "bufferViews": [
            {"buffer": 0, "byteOffset": 0, "byteLength": pos_len, "target": 34962},
            {"buffer": 0, "byteOffset": pos_len, "byteLength": uv_len, "target": 34962},
            {"buffer": 0, "byteOffset": pos_len + uv_len, "byteLength": idx_len, "target": 34963}
        ],
        "accessors": [
            {"bufferView": 0, "componentType": 5126, "count": m.vertices.len(), "type": "VEC3",
             "min": lo, "max": hi},
            {"bufferView": 1, "componentType": 5126, "count": m.params.len(), "type": "VEC2"},
            {"bufferView": 2, "componentType": 5125, "count": 3 * m.triangles.len(), "type": "SCALAR"}
        ]
    });
    serde_json::to_string(&doc).expect("gltf serializes")
}

pub fn import_json(bytes: &[u8]) -> Result<FiberSurfaceMesh> {
    let m: FiberSurfaceMesh = serde_json::from_slice(bytes)?;
    m.validate()?;
    Ok(m)
}
