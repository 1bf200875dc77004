mod common;

use motiv_core::geo::{
    assign_all, assign_county, county_anchor, overlap_fraction, ring_area, ring_centroid, BBox, CountyIndex, Polygon,
};
use proptest::prelude::*;
use rand::Rng;

fn bbox_strategy() -> impl Strategy<Value = BBox> {
    (-5.0..5.0f64, -5.0..5.0f64, 0.01..3.0f64, 0.01..3.0f64).prop_map(|(x, y, w, h)| BBox::new(x, y, x + w, y + h).unwrap())
}

/// Star-shaped polygon around the origin with `n` vertices.
fn star_polygon(radii: &[f64]) -> Polygon {
    let n = radii.len();
    let mut ring: Vec<[f64; 2]> = radii
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            [r * t.cos(), r * t.sin()]
        })
        .collect();
    ring.push(ring[0]);
    Polygon::new(ring)
}

proptest! {
    #[test]
    fn clipped_area_bounded(radii in prop::collection::vec(0.5..3.0f64, 5..24), rect in bbox_strategy()) {
        let poly = star_polygon(&radii);
        let clipped = poly.clipped_area(&rect);
        prop_assert!(clipped >= 0.0);
        prop_assert!(clipped <= poly.area().min(rect.area()) + 1e-12);
    }

    #[test]
    fn translation_invariance(radii in prop::collection::vec(0.5..3.0f64, 5..16), rect in bbox_strategy(),
                              dx in -60.0..60.0f64, dy in -30.0..30.0f64) {
        let poly = star_polygon(&radii);
        let f = overlap_fraction(&rect, std::slice::from_ref(&poly));
        let g = overlap_fraction(&rect.translate(dx, dy), &[poly.translate(dx, dy)]);
        prop_assert!((f - g).abs() < 1e-9, "{} vs {}", f, g);
    }

    #[test]
    fn assignment_independent_of_county_order(rect in bbox_strategy(), seed in 0u64..1000) {
        let counties = common::grid_counties(4, 4)
            .into_iter()
            .map(|mut c| { c.polygons = c.polygons.iter().map(|p| p.translate(96.0, -38.0)).collect(); c })
            .collect::<Vec<_>>();
        let forward = CountyIndex::new(counties.iter().map(|c| (c.fips.as_str(), c.polygons.as_slice())));
        let mut shuffled: Vec<_> = counties.iter().collect();
        let mut r = common::rng(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, r.random_range(0..=i));
        }
        let backward = CountyIndex::new(shuffled.iter().map(|c| (c.fips.as_str(), c.polygons.as_slice())));
        let a = assign_county(&rect, &forward, 0.25);
        prop_assert_eq!(a.clone(), assign_county(&rect, &backward, 0.25));
        if let Some(a) = a {
            prop_assert!(a.overlap_fraction >= 0.25);
        }
    }
}

#[test]
fn twenty_gon_area_matches_monte_carlo() {
    let mut rng = common::rng(20);
    let radii: Vec<f64> = (0..20).map(|_| rng.random_range(0.6..2.0)).collect();
    let poly = star_polygon(&radii);
    let samples = 1_000_000;
    let mut inside = 0usize;
    for _ in 0..samples {
        let p = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        if poly.contains(p) {
            inside += 1;
        }
    }
    let estimate = 16.0 * inside as f64 / samples as f64;
    let rel = (estimate - poly.area()).abs() / poly.area();
    assert!(rel < 0.005, "area {} vs MC {}", poly.area(), estimate);
}

#[test]
fn l_shape_centroid_matches_monte_carlo() {
    let ring = vec![[0.0, 0.0], [3.0, 0.0], [3.0, 1.0], [1.0, 1.0], [1.0, 3.0], [0.0, 3.0], [0.0, 0.0]];
    let c = ring_centroid(&ring).unwrap();
    let poly = Polygon::new(ring.clone());
    let mut rng = common::rng(3);
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for _ in 0..400_000 {
        let p = [rng.random_range(0.0..3.0), rng.random_range(0.0..3.0)];
        if poly.contains(p) {
            sx += p[0];
            sy += p[1];
            n += 1;
        }
    }
    let (mx, my) = (sx / n as f64, sy / n as f64);
    assert!((c[0] - mx).abs() / mx < 0.005 && (c[1] - my).abs() / my < 0.005, "{c:?} vs ({mx}, {my})");
    assert!((ring_area(&ring) - 5.0).abs() < 1e-12);
}

#[test]
fn island_does_not_move_anchor() {
    let big = common::square(-90.0, 40.0, 2.0);
    let island = common::square(-80.0, 30.0, 0.1);
    let a = county_anchor(&[island, big.clone()]).unwrap();
    let b = county_anchor(&[big]).unwrap();
    assert_eq!(a, b);
    assert!(!a.fallback);
}

#[test]
fn parallel_assignment_matches_serial() {
    let counties = common::grid_counties(8, 8);
    let index = CountyIndex::new(counties.iter().map(|c| (c.fips.as_str(), c.polygons.as_slice())));
    let mut rng = common::rng(11);
    let boxes: Vec<BBox> = (0..2000)
        .map(|_| {
            let x = rng.random_range(-100.5..-92.0);
            let y = rng.random_range(34.5..43.0);
            BBox::new(x, y, x + rng.random_range(0.0..1.5), y + rng.random_range(0.0..1.5)).unwrap()
        })
        .collect();
    let serial: Vec<_> = boxes.iter().map(|b| assign_county(b, &index, 0.25)).collect();
    assert_eq!(assign_all(&boxes, &index, 0.25), serial);
}
