//! OBJ and PLY mesh file I/O.
//!
//! OBJ is the primary format (read and write): `v x y z` records and
//! 1-based `f` records, with polygonal faces fan-triangulated at the first
//! vertex. PLY (ascii or binary little-endian) is read-only. Normals, UVs
//! and materials are ignored.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::geometry::TriangleMesh;

/// Loads a triangle mesh from an OBJ or PLY file, sniffing the format from
/// the leading bytes.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut magic = [0u8; 4];
    let read = file.read(&mut magic).map_err(|e| Error::io(path, e))?;
    drop(file);
    if read >= 3 && &magic[..3] == b"ply" {
        load_ply(path)
    } else {
        load_obj(path)
    }
}

/// Writes the mesh as ASCII OBJ. Coordinates are printed with full
/// round-trip precision.
pub fn save_mesh(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        for v in &mesh.vertices {
            writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
        }
        for face in &mesh.faces {
            writeln!(out, "f {} {} {}", face[0] + 1, face[1] + 1, face[2] + 1)?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}

fn load_obj(path: &Path) -> Result<TriangleMesh> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        match fields.next() {
            Some("v") => {
                let mut coord = [0.0f64; 3];
                for c in &mut coord {
                    let field = fields
                        .next()
                        .ok_or_else(|| Error::parse(path, lineno, "vertex needs 3 coordinates"))?;
                    *c = field.parse().map_err(|_| {
                        Error::parse(path, lineno, format!("bad coordinate `{field}`"))
                    })?;
                }
                if coord.iter().any(|c| !c.is_finite()) {
                    return Err(Error::parse(path, lineno, "non-finite coordinate"));
                }
                vertices.push(Point3::new(coord[0], coord[1], coord[2]));
            }
            Some("f") => {
                let mut indices = Vec::with_capacity(4);
                for field in fields {
                    // `f v`, `f v/vt`, `f v/vt/vn`, `f v//vn`
                    let vertex_field = field.split('/').next().unwrap_or(field);
                    let idx: i64 = vertex_field.parse().map_err(|_| {
                        Error::parse(path, lineno, format!("bad face index `{field}`"))
                    })?;
                    // negative indices are relative to the current vertex count
                    let resolved = if idx < 0 {
                        vertices.len() as i64 + idx
                    } else {
                        idx - 1
                    };
                    if resolved < 0 || resolved as usize >= vertices.len() {
                        return Err(Error::FaceIndexOutOfRange {
                            index: idx.unsigned_abs() as usize,
                            vertices: vertices.len(),
                        });
                    }
                    indices.push(resolved as u32);
                }
                if indices.len() < 3 {
                    return Err(Error::parse(path, lineno, "face needs at least 3 vertices"));
                }
                for k in 1..indices.len() - 1 {
                    faces.push([indices[0], indices[k], indices[k + 1]]);
                }
            }
            // normals, texcoords, groups, materials and the rest are skipped
            _ => {}
        }
    }

    TriangleMesh::new(vertices, faces)
}

#[derive(Clone, Copy, PartialEq)]
enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Clone, Copy)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => ScalarType::I8,
            "uchar" | "uint8" => ScalarType::U8,
            "short" | "int16" => ScalarType::I16,
            "ushort" | "uint16" => ScalarType::U16,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            ScalarType::I8 | ScalarType::U8 => 1,
            ScalarType::I16 | ScalarType::U16 => 2,
            ScalarType::I32 | ScalarType::U32 | ScalarType::F32 => 4,
            ScalarType::F64 => 8,
        }
    }

    fn read_le(self, bytes: &[u8]) -> f64 {
        match self {
            ScalarType::I8 => bytes[0] as i8 as f64,
            ScalarType::U8 => bytes[0] as f64,
            ScalarType::I16 => i16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            ScalarType::U16 => u16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            ScalarType::I32 => i32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            ScalarType::U32 => u32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            ScalarType::F32 => f32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            ScalarType::F64 => f64::from_le_bytes(bytes[..8].try_into().unwrap()),
        }
    }
}

enum Property {
    Scalar(ScalarType),
    List { count: ScalarType, item: ScalarType },
}

struct ElementDecl {
    name: String,
    count: usize,
    properties: Vec<(String, Property)>,
}

fn next_line(path: &Path, reader: &mut BufReader<File>, lineno: &mut usize) -> Result<String> {
    let mut line = String::new();
    let n = reader
        .read_line(&mut line)
        .map_err(|e| Error::io(path, e))?;
    if n == 0 {
        return Err(Error::parse(path, *lineno, "unexpected end of file"));
    }
    *lineno += 1;
    Ok(line.trim_end().to_string())
}

fn load_ply(path: &Path) -> Result<TriangleMesh> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);

    let mut lineno = 0;
    if next_line(path, &mut reader, &mut lineno)?.trim() != "ply" {
        return Err(Error::parse(path, 1, "missing `ply` magic"));
    }

    let mut format = None;
    let mut elements: Vec<ElementDecl> = Vec::new();
    loop {
        let line = next_line(path, &mut reader, &mut lineno)?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["end_header"] => break,
            ["comment", ..] | [] => {}
            ["format", "ascii", "1.0"] => format = Some(PlyFormat::Ascii),
            ["format", "binary_little_endian", "1.0"] => {
                format = Some(PlyFormat::BinaryLittleEndian)
            }
            ["format", ..] => {
                return Err(Error::parse(path, lineno, "unsupported PLY format"));
            }
            ["element", name, count] => {
                let count: usize = count
                    .parse()
                    .map_err(|_| Error::parse(path, lineno, "bad element count"))?;
                elements.push(ElementDecl {
                    name: (*name).to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            ["property", "list", count_ty, item_ty, name] => {
                let decl = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(path, lineno, "property before element"))?;
                let count = ScalarType::parse(count_ty)
                    .ok_or_else(|| Error::parse(path, lineno, "unknown list count type"))?;
                let item = ScalarType::parse(item_ty)
                    .ok_or_else(|| Error::parse(path, lineno, "unknown list item type"))?;
                decl.properties
                    .push(((*name).to_string(), Property::List { count, item }));
            }
            ["property", ty, name] => {
                let decl = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(path, lineno, "property before element"))?;
                let ty = ScalarType::parse(ty)
                    .ok_or_else(|| Error::parse(path, lineno, "unknown property type"))?;
                decl.properties
                    .push(((*name).to_string(), Property::Scalar(ty)));
            }
            _ => {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("bad header line `{line}`"),
                ))
            }
        }
    }
    let format = format.ok_or_else(|| Error::parse(path, lineno, "missing format line"))?;

    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();

    for decl in &elements {
        let xyz = if decl.name == "vertex" {
            let find = |key: &str| {
                decl.properties
                    .iter()
                    .position(|(name, _)| name == key)
                    .ok_or_else(|| Error::parse(path, lineno, format!("vertex missing `{key}`")))
            };
            Some((find("x")?, find("y")?, find("z")?))
        } else {
            None
        };

        for _ in 0..decl.count {
            let mut scalars: Vec<f64> = Vec::with_capacity(decl.properties.len());
            let mut list: Vec<f64> = Vec::new();
            match format {
                PlyFormat::Ascii => {
                    let line = next_line(path, &mut reader, &mut lineno)?;
                    let mut fields = line.split_whitespace();
                    let mut next = |what: &str| -> Result<f64> {
                        fields
                            .next()
                            .ok_or_else(|| {
                                Error::parse(path, lineno, format!("missing {what} value"))
                            })?
                            .parse::<f64>()
                            .map_err(|_| Error::parse(path, lineno, format!("bad {what} value")))
                    };
                    for (name, prop) in &decl.properties {
                        match prop {
                            Property::Scalar(_) => scalars.push(next(name)?),
                            Property::List { .. } => {
                                let n = next(name)? as usize;
                                for _ in 0..n {
                                    list.push(next(name)?);
                                }
                            }
                        }
                    }
                }
                PlyFormat::BinaryLittleEndian => {
                    let mut buf = [0u8; 8];
                    let mut read_scalar =
                        |reader: &mut BufReader<File>, ty: ScalarType| -> Result<f64> {
                            reader
                                .read_exact(&mut buf[..ty.size()])
                                .map_err(|e| Error::io(path, e))?;
                            Ok(ty.read_le(&buf))
                        };
                    for (_, prop) in &decl.properties {
                        match prop {
                            Property::Scalar(ty) => scalars.push(read_scalar(&mut reader, *ty)?),
                            Property::List { count, item } => {
                                let n = read_scalar(&mut reader, *count)? as usize;
                                for _ in 0..n {
                                    list.push(read_scalar(&mut reader, *item)?);
                                }
                            }
                        }
                    }
                }
            }

            if let Some((ix, iy, iz)) = xyz {
                // scalar properties in declaration order; list properties do
                // not occur before x/y/z in any vertex layout we accept
                vertices.push(Point3::new(scalars[ix], scalars[iy], scalars[iz]));
            } else if decl.name == "face" && !list.is_empty() {
                let indices: Vec<i64> = list.iter().map(|&v| v as i64).collect();
                if indices.len() < 3 {
                    return Err(Error::parse(path, lineno, "face needs at least 3 indices"));
                }
                for &idx in &indices {
                    if idx < 0 || idx as usize >= vertices.len() {
                        return Err(Error::FaceIndexOutOfRange {
                            index: idx.unsigned_abs() as usize,
                            vertices: vertices.len(),
                        });
                    }
                }
                for k in 1..indices.len() - 1 {
                    faces.push([indices[0] as u32, indices[k] as u32, indices[k + 1] as u32]);
                }
            }
        }
    }

    TriangleMesh::new(vertices, faces)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(contents: &[u8]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn minimal_obj() {
        let f = write_temp(b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
        let mesh = load_mesh(f.path()).unwrap();
        assert_eq!(mesh.vertices.len(), 3);
        assert_eq!(mesh.faces, vec![[0, 1, 2]]);
    }

    #[test]
    fn quad_fan_triangulation() {
        let f = write_temp(b"v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
        let mesh = load_mesh(f.path()).unwrap();
        assert_eq!(mesh.faces, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn face_index_out_of_range() {
        let f = write_temp(b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n");
        assert!(matches!(
            load_mesh(f.path()),
            Err(Error::FaceIndexOutOfRange { index: 9, .. })
        ));
    }

    #[test]
    fn slash_indices_and_comments() {
        let f = write_temp(b"# header\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1\n");
        let mesh = load_mesh(f.path()).unwrap();
        assert_eq!(mesh.faces, vec![[0, 1, 2]]);
    }

    #[test]
    fn malformed_vertex_is_an_error() {
        let f = write_temp(b"v 0 zero 0\n");
        assert!(matches!(load_mesh(f.path()), Err(Error::Parse { .. })));
    }

    #[test]
    fn save_then_load_roundtrip_is_tight() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let vertices: Vec<_> = (0..1000)
            .map(|_| Point3::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>(), rng.gen::<f64>()))
            .collect();
        let faces: Vec<[u32; 3]> = (0..500)
            .map(|_| {
                [
                    rng.gen_range(0..1000u32),
                    rng.gen_range(0..1000u32),
                    rng.gen_range(0..1000u32),
                ]
            })
            .collect();
        let mesh = TriangleMesh::new(vertices, faces).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mesh.obj");
        save_mesh(&mesh, &path).unwrap();
        let back = load_mesh(&path).unwrap();

        assert_eq!(back.faces, mesh.faces);
        let max_delta = mesh
            .vertices
            .iter()
            .zip(&back.vertices)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(max_delta <= 1e-6, "max vertex delta {max_delta}");
    }

    #[test]
    fn empty_mesh_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.obj");
        save_mesh(&TriangleMesh::default(), &path).unwrap();
        let back = load_mesh(&path).unwrap();
        assert!(back.vertices.is_empty() && back.faces.is_empty());
    }

    #[test]
    fn ascii_ply() {
        let f = write_temp(
            b"ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n",
        );
        let mesh = load_mesh(f.path()).unwrap();
        assert_eq!(mesh.vertices.len(), 3);
        assert_eq!(mesh.faces, vec![[0, 1, 2]]);
    }

    #[test]
    fn binary_ply_with_extra_vertex_properties() {
        let mut data = Vec::new();
        data.extend_from_slice(
            b"ply\nformat binary_little_endian 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nproperty float confidence\nelement face 1\nproperty list uchar uint vertex_indices\nend_header\n",
        );
        for (x, y, z) in [(0.0f32, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)] {
            for v in [x, y, z, 0.5] {
                data.extend_from_slice(&v.to_le_bytes());
            }
        }
        data.push(3);
        for idx in [0u32, 1, 2] {
            data.extend_from_slice(&idx.to_le_bytes());
        }
        let f = write_temp(&data);
        let mesh = load_mesh(f.path()).unwrap();
        assert_eq!(mesh.vertices.len(), 3);
        assert_eq!(mesh.faces, vec![[0, 1, 2]]);
        assert!((mesh.vertices[1].x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quad_ply_is_fan_triangulated() {
        let f = write_temp(
            b"ply\nformat ascii 1.0\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n",
        );
        let mesh = load_mesh(f.path()).unwrap();
        assert_eq!(mesh.faces, vec![[0, 1, 2], [0, 2, 3]]);
    }
}
