//! Property tests over randomized inputs.

use nalgebra::Point3;
use proptest::prelude::*;

use fof::codec::{encode_set, l2_truncation_error, read_fof, write_fof, FofGrid};
use fof::geometry::{normalize_mesh, TriangleMesh};
use fof::raster::IntervalSet;

/// Sorted, disjoint interval sets with widths and gaps of at least 1e-3.
fn interval_sets() -> impl Strategy<Value = IntervalSet> {
    proptest::collection::vec(1e-3..0.4f64, 2..=12).prop_map(|segments| {
        let total: f64 = segments.iter().sum();
        let scale = if total > 1.9 { 1.9 / total } else { 1.0 };
        let mut cursor = -0.95;
        let mut pairs = Vec::new();
        for chunk in segments.chunks_exact(2) {
            let start = cursor + chunk[0] * scale;
            let end = start + chunk[1] * scale;
            pairs.push((start, end));
            cursor = end;
        }
        IntervalSet::from_pairs(pairs).expect("construction preserves the invariants")
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Captured spectral energy never exceeds the signal energy, and the
    /// residual shrinks monotonically with the order.
    #[test]
    fn truncation_error_is_monotone_and_nonnegative(set in interval_sets()) {
        let mut previous = f64::INFINITY;
        for order in [1usize, 2, 4, 8, 16, 32] {
            let err = l2_truncation_error(&set, order);
            prop_assert!(err >= -1e-12, "negative residual {err}");
            prop_assert!(err <= previous + 1e-12, "residual grew at order {order}");
            previous = err;
        }
    }

    /// The DC channel stores the total inside length exactly.
    #[test]
    fn dc_channel_is_the_inside_length(set in interval_sets()) {
        let coeffs = encode_set(&set, 4);
        prop_assert_eq!(coeffs[0], set.inside_length());
    }

    /// Field files hold f32 values, so a grid built from f32-representable
    /// values survives write/read bitwise; one quantizing trip is
    /// idempotent for arbitrary values.
    #[test]
    fn field_file_roundtrip(
        values in proptest::collection::vec(-100f32..100f32, 2 * 2 * 5),
        raw in proptest::collection::vec(-100f64..100f64, 2 * 2 * 5),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.fof");

        let grid = FofGrid::new(2, 2, 2, values.iter().map(|&v| v as f64).collect()).unwrap();
        write_fof(&grid, &path).unwrap();
        let back = read_fof(&path).unwrap();
        prop_assert_eq!(&back, &grid);

        let arbitrary = FofGrid::new(2, 2, 2, raw).unwrap();
        write_fof(&arbitrary, &path).unwrap();
        let once = read_fof(&path).unwrap();
        write_fof(&once, &path).unwrap();
        let twice = read_fof(&path).unwrap();
        prop_assert_eq!(&once, &twice);
    }

    /// Normalization puts every vertex in the cube, spans the longest axis
    /// fully, and is idempotent.
    #[test]
    fn normalization_contract(
        coords in proptest::collection::vec((-50f64..50.0, -50f64..50.0, -50f64..50.0), 3..40),
        margin in 0f64..0.5,
    ) {
        let mesh = TriangleMesh {
            vertices: coords.iter().map(|&(x, y, z)| Point3::new(x, y, z)).collect(),
            faces: vec![],
        };
        let (min, max) = mesh.bounds().unwrap();
        prop_assume!((max - min).amax() > 1e-9);

        let normalized = normalize_mesh(&mesh, margin).unwrap();
        let (min, max) = normalized.bounds().unwrap();
        let half = 1.0 - margin;
        for axis in 0..3 {
            prop_assert!(min[axis] >= -half - 1e-9 && max[axis] <= half + 1e-9);
            // centered box
            prop_assert!((min[axis] + max[axis]).abs() < 1e-9);
        }
        let spans = [max.x - min.x, max.y - min.y, max.z - min.z];
        let longest = spans.iter().cloned().fold(0.0, f64::max);
        prop_assert!((longest - 2.0 * half).abs() < 1e-9);

        let again = normalize_mesh(&normalized, margin).unwrap();
        for (a, b) in normalized.vertices.iter().zip(&again.vertices) {
            prop_assert!((a - b).norm() < 1e-9);
        }
    }
}
