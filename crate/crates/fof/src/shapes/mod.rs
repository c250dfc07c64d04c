//! Synthetic watertight test solids behind a name-keyed generator registry.
//!
//! Each generator implements [`ShapeGenerator`] and is selected at runtime
//! from a spec string such as `sphere:r=0.6,level=4` or `box:hx=0.5`.
//! Generators must produce watertight meshes with outward-facing normals
//! that fit inside the canonical `[-1,1]^3` cube.

use std::collections::BTreeMap;

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::TriangleMesh;

mod primitives;

/// Key/value parameters from a shape spec string. All values are numeric.
#[derive(Debug, Clone, Default)]
pub struct ShapeParams {
    values: BTreeMap<String, f64>,
}

impl ShapeParams {
    pub fn set(&mut self, key: &str, value: f64) {
        self.values.insert(key.to_string(), value);
    }

    pub fn get_or(&self, key: &str, default: f64) -> f64 {
        self.values.get(key).copied().unwrap_or(default)
    }

    /// Fails when the spec carries a key the generator does not understand;
    /// typos in experiment scripts should not pass silently.
    fn check_known(&self, known: &[&str]) -> Result<()> {
        for key in self.values.keys() {
            if !known.contains(&key.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "unknown shape parameter `{key}` (expected one of {})",
                    known.join(", ")
                )));
            }
        }
        Ok(())
    }
}

/// A parsed `name:key=value,...` shape spec.
#[derive(Debug, Clone)]
pub struct ShapeSpec {
    pub kind: String,
    pub params: ShapeParams,
}

impl ShapeSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, rest) = match spec.split_once(':') {
            Some((kind, rest)) => (kind, rest),
            None => (spec, ""),
        };
        let kind = kind.trim();
        if kind.is_empty() {
            return Err(Error::InvalidParameter("empty shape name".into()));
        }
        let mut params = ShapeParams::default();
        for pair in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (key, value) = pair.split_once('=').ok_or_else(|| {
                Error::InvalidParameter(format!("expected key=value in shape spec, got `{pair}`"))
            })?;
            let value: f64 = value.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("bad numeric value `{value}` for `{key}`"))
            })?;
            params.set(key.trim(), value);
        }
        Ok(ShapeSpec {
            kind: kind.to_string(),
            params,
        })
    }
}

/// A named generator for one family of synthetic solids.
pub trait ShapeGenerator: Send + Sync {
    /// Registry key, e.g. `sphere`.
    fn name(&self) -> &'static str;

    /// One-line parameter summary for `--help` style listings.
    fn usage(&self) -> &'static str;

    fn generate(&self, params: &ShapeParams) -> Result<TriangleMesh>;
}

/// Runtime registry of shape generators, keyed by name.
pub struct ShapeRegistry {
    generators: Vec<Box<dyn ShapeGenerator>>,
}

impl ShapeRegistry {
    pub fn empty() -> Self {
        ShapeRegistry {
            generators: Vec::new(),
        }
    }

    /// Registry with the built-in solids: sphere, box, slab, torus, figure.
    pub fn with_builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(primitives::Sphere));
        reg.register(Box::new(primitives::BoxShape));
        reg.register(Box::new(primitives::Slab));
        reg.register(Box::new(primitives::Torus));
        reg.register(Box::new(primitives::Figure));
        reg
    }

    /// Registers a generator, replacing any previous one with the same name.
    pub fn register(&mut self, generator: Box<dyn ShapeGenerator>) {
        self.generators.retain(|g| g.name() != generator.name());
        self.generators.push(generator);
    }

    pub fn get(&self, name: &str) -> Option<&dyn ShapeGenerator> {
        self.generators
            .iter()
            .find(|g| g.name() == name)
            .map(|g| g.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.generators.iter().map(|g| g.name()).collect()
    }

    pub fn usages(&self) -> Vec<(&'static str, &'static str)> {
        self.generators
            .iter()
            .map(|g| (g.name(), g.usage()))
            .collect()
    }

    pub fn generate(&self, spec: &ShapeSpec) -> Result<TriangleMesh> {
        let generator = self
            .get(&spec.kind)
            .ok_or_else(|| Error::UnknownShape(spec.kind.clone()))?;
        let mesh = generator.generate(&spec.params)?;
        check_in_cube(&mesh)?;
        Ok(mesh)
    }

    pub fn generate_str(&self, spec: &str) -> Result<TriangleMesh> {
        self.generate(&ShapeSpec::parse(spec)?)
    }
}

impl Default for ShapeRegistry {
    fn default() -> Self {
        Self::with_builtin()
    }
}

/// Builds a solid from a spec string using the built-in registry.
pub fn make_shape(spec: &str) -> Result<TriangleMesh> {
    ShapeRegistry::with_builtin().generate_str(spec)
}

fn check_in_cube(mesh: &TriangleMesh) -> Result<()> {
    for v in &mesh.vertices {
        if v.x.abs() > 1.0 || v.y.abs() > 1.0 || v.z.abs() > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "shape extends outside the canonical cube at ({}, {}, {})",
                v.x, v.y, v.z
            )));
        }
    }
    Ok(())
}

/// Appends `other` onto `mesh`, offsetting face indices.
pub(crate) fn append_mesh(mesh: &mut TriangleMesh, other: &TriangleMesh) {
    let offset = mesh.vertices.len() as u32;
    mesh.vertices.extend_from_slice(&other.vertices);
    mesh.faces.extend(
        other
            .faces
            .iter()
            .map(|f| [f[0] + offset, f[1] + offset, f[2] + offset]),
    );
}

pub(crate) fn positive(value: f64, what: &str) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter(format!(
            "{what} must be positive, got {value}"
        )))
    }
}

#[allow(unused)]
pub(crate) fn translate(mesh: &mut TriangleMesh, offset: Vector3<f64>) {
    for v in &mut mesh.vertices {
        *v += offset;
    }
}

#[allow(unused)]
pub(crate) fn point(x: f64, y: f64, z: f64) -> Point3<f64> {
    Point3::new(x, y, z)
}
