mod common;

use common::{normal_matrix, random_pd, rng};
use ellip_core::gellipsoid::GEllipsoid;
use ellip_core::render::{self, figures, PixelTransform, ELLIPSE_VERTICES};
use ellip_core::statellipse::{self, CoverageSpec, Sample};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;

/// Even-odd ray casting.
fn inside_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) && p[0] < a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]) {
            inside = !inside;
        }
    }
    inside
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn rendering_is_byte_deterministic(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sample = Sample::unnamed(normal_matrix(&mut r, 40, 2) * random_pd(&mut r, 2)).unwrap();
        let a = render::render_scene(&figures::data_ellipse_panel(&sample, [0, 1], &[0.5, 0.95]).unwrap()).unwrap();
        let b = render::render_scene(&figures::data_ellipse_panel(&sample, [0, 1], &[0.5, 0.95]).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn vertices_round_trip_through_pixels(seed in any::<u64>(), equal in any::<bool>()) {
        let mut r = rng(seed);
        let center = DVector::from_fn(2, |_, _| r.random_range(-50.0..50.0));
        let e = GEllipsoid::from_moment(&(random_pd(&mut r, 2) * r.random_range(0.1..20.0)), center).unwrap();
        let bb = render::ellipse_bbox(&e).unwrap().padded(0.1);
        let t = PixelTransform::new(&bb, 600, 480, equal).unwrap();
        let scale = bb.diagonal().max(1.0);
        for v in render::ellipse_path(&e, ELLIPSE_VERTICES).unwrap() {
            let back = t.to_data(t.to_px(v));
            prop_assert!((back[0] - v[0]).abs() <= 1e-9 * scale && (back[1] - v[1]).abs() <= 1e-9 * scale);
            prop_assert!((e.gauge(&DVector::from_vec(v.to_vec()), 1e-12) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn smaller_level_path_nests_inside_larger(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sample = Sample::unnamed(normal_matrix(&mut r, 30, 2) * random_pd(&mut r, 2)).unwrap();
        let small = statellipse::data_ellipsoid(&sample, CoverageSpec::ChiSq(0.5)).unwrap();
        let large = statellipse::data_ellipsoid(&sample, CoverageSpec::ChiSq(0.95)).unwrap();
        let outer = render::ellipse_path(&large, ELLIPSE_VERTICES).unwrap();
        for v in render::ellipse_path(&small, ELLIPSE_VERTICES).unwrap() {
            prop_assert!(inside_polygon(v, &outer));
        }
    }
}

