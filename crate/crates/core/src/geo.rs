//! Planar geometry on lon/lat degrees: rectangle clipping, shoelace areas,
//! point-in-polygon, county assignment of tweet bounding boxes, and the
//! Mercator anchors used by the glyph map.
//!
//! Areas are computed in the lon/lat plane, not on the sphere. Assignment
//! only compares fractions of one small bounding box, so the distortion
//! cancels to first order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::GeoError;

/// `[lon, lat]` in degrees, matching GeoJSON position order.
pub type Coord = [f64; 2];

/// Default minimum overlap fraction for a tweet to be assigned to a county.
pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 0.25;

/// Largest latitude accepted by [`mercator`].
pub const MAX_MERCATOR_LAT: f64 = 85.06;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min_lon: f64,
    pub min_lat: f64,
    pub max_lon: f64,
    pub max_lat: f64,
}

impl BBox {
    /// Returns `None` unless all corners are finite and `min <= max` on both axes.
    pub fn new(min_lon: f64, min_lat: f64, max_lon: f64, max_lat: f64) -> Option<BBox> {
        let finite = [min_lon, min_lat, max_lon, max_lat].iter().all(|v| v.is_finite());
        (finite && min_lon <= max_lon && min_lat <= max_lat).then_some(BBox {
            min_lon,
            min_lat,
            max_lon,
            max_lat,
        })
    }

    pub fn point(lon: f64, lat: f64) -> BBox {
        BBox {
            min_lon: lon,
            min_lat: lat,
            max_lon: lon,
            max_lat: lat,
        }
    }

    pub fn width(&self) -> f64 {
        self.max_lon - self.min_lon
    }

    pub fn height(&self) -> f64 {
        self.max_lat - self.min_lat
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Zero-area boxes (points and segments) are treated as their center point.
    pub fn is_degenerate(&self) -> bool {
        self.area() <= 0.0
    }

    pub fn center(&self) -> Coord {
        [
            0.5 * (self.min_lon + self.max_lon),
            0.5 * (self.min_lat + self.max_lat),
        ]
    }

    /// Closed intersection test (touching boxes intersect).
    pub fn intersects(&self, other: &BBox) -> bool {
        self.min_lon <= other.max_lon
            && other.min_lon <= self.max_lon
            && self.min_lat <= other.max_lat
            && other.min_lat <= self.max_lat
    }

    pub fn contains(&self, p: Coord) -> bool {
        p[0] >= self.min_lon && p[0] <= self.max_lon && p[1] >= self.min_lat && p[1] <= self.max_lat
    }

    /// Bounding box of a set of coordinates; `None` when empty.
    pub fn of_points<'a, I: IntoIterator<Item = &'a Coord>>(points: I) -> Option<BBox> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut b = BBox::point(first[0], first[1]);
        for p in it {
            b.min_lon = b.min_lon.min(p[0]);
            b.min_lat = b.min_lat.min(p[1]);
            b.max_lon = b.max_lon.max(p[0]);
            b.max_lat = b.max_lat.max(p[1]);
        }
        Some(b)
    }

    pub fn translate(&self, dlon: f64, dlat: f64) -> BBox {
        BBox {
            min_lon: self.min_lon + dlon,
            min_lat: self.min_lat + dlat,
            max_lon: self.max_lon + dlon,
            max_lat: self.max_lat + dlat,
        }
    }
}

/// One polygon: an exterior ring and zero or more holes. Rings are closed
/// (first vertex repeated at the end).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub exterior: Vec<Coord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub holes: Vec<Vec<Coord>>,
}

impl Polygon {
    pub fn new(exterior: Vec<Coord>) -> Polygon {
        Polygon {
            exterior,
            holes: Vec::new(),
        }
    }

    /// Exterior area minus hole areas.
    pub fn area(&self) -> f64 {
        let holes: f64 = self.holes.iter().map(|h| ring_area(h)).sum();
        (ring_area(&self.exterior) - holes).max(0.0)
    }

    pub fn contains(&self, p: Coord) -> bool {
        point_in_ring(p, &self.exterior) && !self.holes.iter().any(|h| point_in_ring(p, h))
    }

    pub fn bbox(&self) -> Option<BBox> {
        BBox::of_points(&self.exterior)
    }

    /// Area of the part of this polygon inside `rect`.
    pub fn clipped_area(&self, rect: &BBox) -> f64 {
        let outer = ring_area(&clip_ring_to_rect(&self.exterior, rect));
        let holes: f64 = self
            .holes
            .iter()
            .map(|h| ring_area(&clip_ring_to_rect(h, rect)))
            .sum();
        (outer - holes).max(0.0)
    }

    /// Rewinds rings so the exterior is counter-clockwise and holes clockwise.
    pub fn normalize_orientation(&mut self) {
        if ring_signed_area(&self.exterior) < 0.0 {
            self.exterior.reverse();
        }
        for h in &mut self.holes {
            if ring_signed_area(h) > 0.0 {
                h.reverse();
            }
        }
    }

    pub fn translate(&self, dlon: f64, dlat: f64) -> Polygon {
        let shift = |r: &Vec<Coord>| r.iter().map(|p| [p[0] + dlon, p[1] + dlat]).collect();
        Polygon {
            exterior: shift(&self.exterior),
            holes: self.holes.iter().map(shift).collect(),
        }
    }
}

/// Signed shoelace area; positive for counter-clockwise rings.
pub fn ring_signed_area(ring: &[Coord]) -> f64 {
    if ring.len() < 3 {
        return 0.0;
    }
    // coordinates relative to the first vertex keep the cross products small
    let [ox, oy] = ring[0];
    let rel = |p: Coord| [p[0] - ox, p[1] - oy];
    let mut twice = 0.0;
    for w in ring.windows(2) {
        let (a, b) = (rel(w[0]), rel(w[1]));
        twice += a[0] * b[1] - b[0] * a[1];
    }
    // an open ring's closing edge ends at the origin vertex and contributes nothing
    0.5 * twice
}

/// Absolute shoelace area in degrees².
pub fn ring_area(ring: &[Coord]) -> f64 {
    ring_signed_area(ring).abs()
}

/// Total area of a multipolygon: exteriors minus holes.
pub fn polygons_area(polygons: &[Polygon]) -> f64 {
    polygons.iter().map(Polygon::area).sum()
}

/// True when a closed ring has at least four vertices and repeats its first vertex.
pub fn ring_is_closed(ring: &[Coord]) -> bool {
    ring.len() >= 4 && ring.first() == ring.last()
}

/// Whether any two non-adjacent edges of a closed ring cross. Quadratic;
/// used for validation only.
pub fn ring_self_intersects(ring: &[Coord]) -> bool {
    let n = ring.len().saturating_sub(1);
    if n < 4 {
        return false;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            // neighbours share a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_cross(ring[i], ring[i + 1], ring[j], ring[j + 1]) {
                return true;
            }
        }
    }
    false
}

fn orient(a: Coord, b: Coord, c: Coord) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_cross(p1: Coord, p2: Coord, q1: Coord, q2: Coord) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    fn inside(self, p: Coord, r: &BBox) -> bool {
        match self {
            Side::Left => p[0] >= r.min_lon,
            Side::Right => p[0] <= r.max_lon,
            Side::Bottom => p[1] >= r.min_lat,
            Side::Top => p[1] <= r.max_lat,
        }
    }

    fn intersect(self, a: Coord, b: Coord, r: &BBox) -> Coord {
        match self {
            Side::Left | Side::Right => {
                let x = if matches!(self, Side::Left) { r.min_lon } else { r.max_lon };
                let t = (x - a[0]) / (b[0] - a[0]);
                [x, a[1] + t * (b[1] - a[1])]
            }
            Side::Bottom | Side::Top => {
                let y = if matches!(self, Side::Bottom) { r.min_lat } else { r.max_lat };
                let t = (y - a[1]) / (b[1] - a[1]);
                [a[0] + t * (b[0] - a[0]), y]
            }
        }
    }
}

/// Sutherland–Hodgman clip of a closed ring against an axis-aligned
/// rectangle, one half-plane at a time. Returns a closed ring, or an empty
/// vector when nothing remains. Concave input may produce zero-width
/// slivers along the rectangle border; they carry no area.
pub fn clip_ring_to_rect(ring: &[Coord], rect: &BBox) -> Vec<Coord> {
    let mut pts: Vec<Coord> = ring.to_vec();
    if pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    if pts.len() < 3 {
        return Vec::new();
    }
    for side in [Side::Left, Side::Right, Side::Bottom, Side::Top] {
        if pts.is_empty() {
            break;
        }
        let mut out = Vec::with_capacity(pts.len() + 4);
        let mut prev = *pts.last().unwrap();
        let mut prev_in = side.inside(prev, rect);
        for &cur in &pts {
            let cur_in = side.inside(cur, rect);
            if cur_in {
                if !prev_in {
                    out.push(side.intersect(prev, cur, rect));
                }
                out.push(cur);
            } else if prev_in {
                out.push(side.intersect(prev, cur, rect));
            }
            prev = cur;
            prev_in = cur_in;
        }
        pts = out;
    }
    if pts.len() < 3 {
        return Vec::new();
    }
    pts.push(pts[0]);
    pts
}

/// Even-odd ray casting. Points exactly on an edge resolve consistently for
/// edges shared by neighbouring rings (half-open rule).
pub fn point_in_ring(p: Coord, ring: &[Coord]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub fn point_in_polygons(p: Coord, polygons: &[Polygon]) -> bool {
    polygons.iter().any(|poly| poly.contains(p))
}

/// Fraction of `bbox` covered by the given multipolygon, in `[0, 1]`.
/// A degenerate box yields 1.0 when its center lies inside, else 0.0.
pub fn overlap_fraction(bbox: &BBox, polygons: &[Polygon]) -> f64 {
    if bbox.is_degenerate() {
        return if point_in_polygons(bbox.center(), polygons) { 1.0 } else { 0.0 };
    }
    let covered: f64 = polygons.iter().map(|p| p.clipped_area(bbox)).sum();
    (covered / bbox.area()).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapResult {
    pub fips: String,
    pub overlap_fraction: f64,
}

/// The county a tweet was assigned to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub fips: String,
    pub overlap_fraction: f64,
}

struct IndexEntry<'a> {
    fips: &'a str,
    bbox: BBox,
    polygons: &'a [Polygon],
}

/// County geometry sorted by FIPS, with per-county bounding boxes for the
/// prefilter.
pub struct CountyIndex<'a> {
    entries: Vec<IndexEntry<'a>>,
}

impl<'a> CountyIndex<'a> {
    pub fn new<I>(counties: I) -> CountyIndex<'a>
    where
        I: IntoIterator<Item = (&'a str, &'a [Polygon])>,
    {
        let mut entries: Vec<IndexEntry<'a>> = counties
            .into_iter()
            .filter_map(|(fips, polygons)| {
                let bbox = BBox::of_points(polygons.iter().flat_map(|p| p.exterior.iter()))?;
                Some(IndexEntry { fips, bbox, polygons })
            })
            .collect();
        entries.sort_by(|a, b| a.fips.cmp(b.fips));
        CountyIndex { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Overlap fraction against every county whose bounding box touches
    /// `bbox`, in ascending FIPS order; zero overlaps are omitted.
    pub fn overlaps(&self, bbox: &BBox) -> Vec<OverlapResult> {
        self.entries
            .iter()
            .filter(|e| e.bbox.intersects(bbox))
            .filter_map(|e| {
                let f = overlap_fraction(bbox, e.polygons);
                (f > 0.0).then(|| OverlapResult {
                    fips: e.fips.to_string(),
                    overlap_fraction: f,
                })
            })
            .collect()
    }
}

/// Assigns a bounding box to the county with the largest overlap fraction,
/// provided that fraction reaches `threshold`. Equal maxima go to the
/// smallest FIPS.
pub fn assign_county(bbox: &BBox, index: &CountyIndex<'_>, threshold: f64) -> Option<Assignment> {
    let mut best: Option<OverlapResult> = None;
    for r in index.overlaps(bbox) {
        // overlaps() is FIPS-ascending, so a strict comparison keeps the smallest FIPS on ties
        if best.as_ref().is_none_or(|b| r.overlap_fraction > b.overlap_fraction) {
            best = Some(r);
        }
    }
    best.filter(|b| b.overlap_fraction >= threshold).map(|b| Assignment {
        fips: b.fips,
        overlap_fraction: b.overlap_fraction,
    })
}

/// Parallel [`assign_county`] over many boxes; output order follows input order.
pub fn assign_all(bboxes: &[BBox], index: &CountyIndex<'_>, threshold: f64) -> Vec<Option<Assignment>> {
    bboxes
        .par_iter()
        .map(|b| assign_county(b, index, threshold))
        .collect()
}

/// Spherical Mercator with unit radius: `x = λ`, `y = ln(tan(π/4 + φ/2))`.
pub fn mercator(lon: f64, lat: f64) -> Result<(f64, f64), GeoError> {
    if !lat.is_finite() || lat.abs() >= MAX_MERCATOR_LAT {
        return Err(GeoError::LatitudeOutOfRange(lat));
    }
    let x = lon.to_radians();
    let y = lat.to_radians().tan().asinh();
    Ok((x, y))
}

/// Area-weighted centroid of a ring; `None` for zero-area rings.
pub fn ring_centroid(ring: &[Coord]) -> Option<Coord> {
    let a = ring_signed_area(ring);
    if a == 0.0 || !a.is_finite() {
        return None;
    }
    let n = ring.len();
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let p = ring[i];
        let q = ring[(i + 1) % n];
        let cross = p[0] * q[1] - q[0] * p[1];
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    Some([cx / (6.0 * a), cy / (6.0 * a)])
}

/// Projected starting position of a county's glyph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub x: f64,
    pub y: f64,
    /// True when the county had no area and its bounding-box center was used.
    pub fallback: bool,
}

/// Centroid of the largest exterior ring, projected with [`mercator`].
pub fn county_anchor(polygons: &[Polygon]) -> Result<Anchor, GeoError> {
    let largest = polygons
        .iter()
        .map(|p| (ring_area(&p.exterior), &p.exterior))
        .fold(None::<(f64, &Vec<Coord>)>, |acc, cur| match acc {
            Some(a) if a.0 >= cur.0 => Some(a),
            _ => Some(cur),
        });
    let (center, fallback) = match largest.and_then(|(_, ring)| ring_centroid(ring)) {
        Some(c) => (c, false),
        None => {
            let bb = BBox::of_points(polygons.iter().flat_map(|p| p.exterior.iter()))
                .unwrap_or(BBox::point(0.0, 0.0));
            (bb.center(), true)
        }
    };
    let (x, y) = mercator(center[0], center[1])?;
    Ok(Anchor { x, y, fallback })
}
