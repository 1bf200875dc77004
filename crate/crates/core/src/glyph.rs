//! County glyphs for the map panel and the relaxation that pulls them
//! toward their anchors while pushing overlapping glyphs apart.
//!
//! A glyph is two half-ellipses sharing a horizontal axis: the upper one
//! has semi-axes `(half_width, upper_radius)`, the lower one
//! `(half_width, lower_radius)`. Width encodes population, the radii encode
//! tweets for and against the topic. Layout coordinates are Mercator
//! radians times `map_scale`, with y growing downward (screen order).


use serde::{Deserialize, Serialize};

use crate::analytics::CountyAggregate;
use crate::corpus::{County, Dataset, Stance};
use crate::error::AnalyticsError;
use crate::features::{CountyFeature, FeatureContext};
use crate::frame::MoralFrame;
use crate::geo;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeScaling {
    Sqrt,
    Linear,
}

impl SizeScaling {
    fn apply(self, v: f64) -> f64 {
        match self {
            SizeScaling::Sqrt => v.sqrt(),
            SizeScaling::Linear => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlyphScales {
    pub w_min: f64,
    pub w_max: f64,
    pub r_max: f64,
    /// Radius used for a stance with no tweets.
    pub r_floor: f64,
    pub scaling: SizeScaling,
    /// Layout units per Mercator radian.
    pub map_scale: f64,
}

impl Default for GlyphScales {
    fn default() -> Self {
        GlyphScales {
            w_min: 4.0,
            w_max: 40.0,
            r_max: 30.0,
            r_floor: 1.0,
            scaling: SizeScaling::Sqrt,
            map_scale: 1000.0,
        }
    }
}

/// Dataset-wide ranges that the glyph scales map from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleDomain {
    pub population_min: f64,
    pub population_max: f64,
    pub count_max: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Glyph {
    pub fips: String,
    pub anchor: [f64; 2],
    pub position: [f64; 2],
    pub half_width: f64,
    pub upper_radius: f64,
    pub lower_radius: f64,
    pub color_value: Option<f64>,
}

impl Glyph {
    /// Vertical semi-axis of the circumscribing ellipse.
    pub fn bounding_half_height(&self) -> f64 {
        self.upper_radius.max(self.lower_radius)
    }
}

fn scale_radius(count: u64, domain: &ScaleDomain, scales: &GlyphScales) -> f64 {
    if count == 0 || domain.count_max == 0 {
        return scales.r_floor;
    }
    let t = scales.scaling.apply(count as f64) / scales.scaling.apply(domain.count_max as f64);
    (scales.r_max * t).clamp(scales.r_floor, scales.r_max)
}

fn scale_half_width(population: Option<u64>, domain: &ScaleDomain, scales: &GlyphScales) -> f64 {
    let (lo, hi) = (scales.w_min / 2.0, scales.w_max / 2.0);
    let Some(p) = population else {
        return lo;
    };
    let a = scales.scaling.apply(domain.population_min);
    let b = scales.scaling.apply(domain.population_max);
    if b <= a {
        return hi;
    }
    let t = ((scales.scaling.apply(p as f64) - a) / (b - a)).clamp(0.0, 1.0);
    lo + t * (hi - lo)
}

/// Shape of one county's glyph. Position starts at the anchor.
pub fn glyph_shape(
    county: &County,
    aggregate: &CountyAggregate,
    frame: Option<MoralFrame>,
    domain: &ScaleDomain,
    scales: &GlyphScales,
    anchor: [f64; 2],
    color_value: Option<f64>,
) -> Glyph {
    Glyph {
        fips: county.fips.clone(),
        anchor,
        position: anchor,
        half_width: scale_half_width(county.population(), domain, scales),
        upper_radius: scale_radius(aggregate.stance_count(frame, Stance::For), domain, scales),
        lower_radius: scale_radius(aggregate.stance_count(frame, Stance::Against), domain, scales),
        color_value,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutConfig {
    pub spring: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Offset per rank applied along x to glyphs sharing an anchor.
    pub coincident_offset: f64,
    /// Upper bound on the collision-only sweeps run after the spring iterations.
    pub polish_passes: usize,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            spring: 0.1,
            max_iterations: 300,
            tolerance: 0.05,
            coincident_offset: 1e-3,
            polish_passes: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutOutcome {
    pub glyphs: Vec<Glyph>,
    pub iterations: usize,
    pub converged: bool,
    pub max_penetration: f64,
    /// Sum over glyphs of the distance from anchor to final position.
    pub total_displacement: f64,
}

/// Penetration depth of two glyphs along their center line under the
/// circumscribing-ellipse approximation; 0 when they do not overlap.
pub fn penetration(a: &Glyph, b: &Glyph) -> f64 {
    let sx = a.half_width + b.half_width;
    let sy = a.bounding_half_height() + b.bounding_half_height();
    let dx = b.position[0] - a.position[0];
    let dy = b.position[1] - a.position[1];
    let s = ((dx / sx).powi(2) + (dy / sy).powi(2)).sqrt();
    if s >= 1.0 {
        return 0.0;
    }
    if s == 0.0 {
        return sx;
    }
    (dx * dx + dy * dy).sqrt() * (1.0 / s - 1.0)
}

/// Pushes two glyphs apart along their center line until the scaled
/// distance is 1. Returns the penetration that was resolved.
fn separate(glyphs: &mut [Glyph], i: usize, j: usize) -> f64 {
    let (a, b) = (&glyphs[i], &glyphs[j]);
    let sx = a.half_width + b.half_width;
    let sy = a.bounding_half_height() + b.bounding_half_height();
    let dx = b.position[0] - a.position[0];
    let dy = b.position[1] - a.position[1];
    let s = ((dx / sx).powi(2) + (dy / sy).powi(2)).sqrt();
    if s >= 1.0 {
        return 0.0;
    }
    let (ux, uy, pen) = if s == 0.0 {
        (1.0, 0.0, sx)
    } else {
        let d = (dx * dx + dy * dy).sqrt();
        (dx / d, dy / d, d * (1.0 / s - 1.0))
    };
    let half = 0.5 * pen;
    glyphs[i].position[0] -= ux * half;
    glyphs[i].position[1] -= uy * half;
    glyphs[j].position[0] += ux * half;
    glyphs[j].position[1] += uy * half;
    pen
}

/// Index pairs `(i, j)`, `i < j`, whose bounding boxes overlap, in
/// lexicographic order. Sweep and prune along x.
fn candidate_pairs(glyphs: &[Glyph]) -> Vec<(usize, usize)> {
    let ext: Vec<[f64; 2]> = glyphs.iter().map(|g| [g.half_width, g.bounding_half_height()]).collect();
    let max_hw = ext.iter().map(|e| e[0]).fold(0.0f64, f64::max);
    let mut order: Vec<usize> = (0..glyphs.len()).collect();
    order.sort_unstable_by(|&a, &b| glyphs[a].position[0].total_cmp(&glyphs[b].position[0]));
    let mut pairs = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        let [xi, yi] = glyphs[i].position;
        for &j in &order[k + 1..] {
            let [xj, yj] = glyphs[j].position;
            let dx = xj - xi;
            if dx >= ext[i][0] + max_hw {
                break;
            }
            if dx < ext[i][0] + ext[j][0] && (yj - yi).abs() < ext[i][1] + ext[j][1] {
                pairs.push((i.min(j), i.max(j)));
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

fn worst_of(glyphs: &[Glyph], pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(i, j)| penetration(&glyphs[i], &glyphs[j])).fold(0.0, f64::max)
}

/// Largest pairwise penetration in the current positions.
pub fn max_penetration(glyphs: &[Glyph]) -> f64 {
    worst_of(glyphs, &candidate_pairs(glyphs))
}

/// Separates coincident anchors deterministically: the k-th glyph (by
/// input order) on a shared anchor moves by `k * offset` along x.
fn perturb_coincident(glyphs: &mut [Glyph], offset: f64) {
    let mut order: Vec<usize> = (0..glyphs.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (glyphs[a].position, glyphs[b].position);
        pa[0].total_cmp(&pb[0]).then(pa[1].total_cmp(&pb[1])).then(a.cmp(&b))
    });
    let mut rank = 0usize;
    for w in 1..order.len() {
        let (prev, cur) = (order[w - 1], order[w]);
        // compare against the unperturbed anchor of the group
        if glyphs[cur].anchor == glyphs[prev].anchor {
            rank += 1;
            glyphs[cur].position[0] += offset * rank as f64;
        } else {
            rank = 0;
        }
    }
}

/// Relaxes glyph positions: each iteration pulls every glyph toward its
/// anchor by `spring * (anchor - position)`, then resolves overlapping
/// pairs in `(i, j)` order by pushing both apart by half the penetration.
/// The spring keeps re-compressing dense clusters, so collision-only
/// sweeps follow until no pair penetrates more than `tolerance`.
/// Iteration stops once no glyph moves more than `tolerance`, or after
/// `max_iterations`; the layout counts as converged when it stopped early
/// and the final sweeps left no penetration above `tolerance`.
///
/// Glyphs are processed in FIPS order regardless of input order, so the
/// result is reproducible bit for bit.
pub fn resolve_overlaps(mut glyphs: Vec<Glyph>, config: &LayoutConfig) -> LayoutOutcome {
    glyphs.sort_by(|a, b| a.fips.cmp(&b.fips));
    for g in &mut glyphs {
        g.position = g.anchor;
    }
    perturb_coincident(&mut glyphs, config.coincident_offset);

    let mut iterations = 0;
    let mut converged = glyphs.len() < 2;
    let mut previous: Vec<[f64; 2]> = Vec::with_capacity(glyphs.len());
    while !converged && iterations < config.max_iterations {
        iterations += 1;
        previous.clear();
        previous.extend(glyphs.iter().map(|g| g.position));
        for g in &mut glyphs {
            g.position[0] += config.spring * (g.anchor[0] - g.position[0]);
            g.position[1] += config.spring * (g.anchor[1] - g.position[1]);
        }
        for (i, j) in candidate_pairs(&glyphs) {
            separate(&mut glyphs, i, j);
        }
        let moved = glyphs
            .iter()
            .zip(&previous)
            .map(|(g, p)| (g.position[0] - p[0]).hypot(g.position[1] - p[1]))
            .fold(0.0, f64::max);
        converged = moved < config.tolerance;
    }
    let mut pairs = candidate_pairs(&glyphs);
    let mut residual = worst_of(&glyphs, &pairs);
    for _ in 0..config.polish_passes {
        if residual <= config.tolerance {
            break;
        }
        for &(i, j) in &pairs {
            separate(&mut glyphs, i, j);
        }
        pairs = candidate_pairs(&glyphs);
        residual = worst_of(&glyphs, &pairs);
    }
    converged &= residual <= config.tolerance;
    let total_displacement = glyphs
        .iter()
        .map(|g| (g.position[0] - g.anchor[0]).hypot(g.position[1] - g.anchor[1]))
        .sum();
    LayoutOutcome {
        max_penetration: residual,
        glyphs,
        iterations,
        converged,
        total_displacement,
    }
}

/// Closed outline of a glyph as a polyline, `segments` points per half.
pub fn glyph_outline(g: &Glyph, segments: usize) -> Vec<[f64; 2]> {
    let n = segments.max(2);
    let [cx, cy] = g.position;
    let mut pts = Vec::with_capacity(2 * n + 1);
    for k in 0..=n {
        let t = std::f64::consts::PI * k as f64 / n as f64;
        pts.push([cx - g.half_width * t.cos(), cy - g.upper_radius * t.sin()]);
    }
    for k in 1..=n {
        let t = std::f64::consts::PI * k as f64 / n as f64;
        pts.push([cx + g.half_width * t.cos(), cy + g.lower_radius * t.sin()]);
    }
    pts
}

/// SVG path data: two elliptical arcs through the glyph's left and right tips.
pub fn glyph_svg_path(g: &Glyph) -> String {
    let [cx, cy] = g.position;
    let hw = g.half_width;
    format!(
        "M{:.3} {:.3}A{:.3} {:.3} 0 0 1 {:.3} {:.3}A{:.3} {:.3} 0 0 1 {:.3} {:.3}Z",
        cx - hw,
        cy,
        hw,
        g.upper_radius,
        cx + hw,
        cy,
        hw,
        g.lower_radius,
        cx - hw,
        cy
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapLayout {
    pub frame: Option<MoralFrame>,
    pub color_feature: String,
    pub domain: ScaleDomain,
    pub iterations: usize,
    pub converged: bool,
    pub max_penetration: f64,
    pub total_displacement: f64,
    /// FIPS of counties whose anchor fell back to a bounding-box center.
    pub anchor_fallbacks: Vec<String>,
    pub glyphs: Vec<Glyph>,
}

/// Whether a county gets a glyph: it has tweets or a known positive population.
pub fn county_has_glyph(county: &County, aggregate: Option<&CountyAggregate>) -> bool {
    aggregate.is_some_and(|a| a.total_tweets > 0) || county.population().is_some_and(|p| p > 0)
}

/// Builds and relaxes the glyph map for a frame (or all frames).
pub fn layout_map(
    dataset: &Dataset,
    frame: Option<MoralFrame>,
    color_feature: &str,
    scales: &GlyphScales,
    config: &LayoutConfig,
) -> Result<MapLayout, AnalyticsError> {
    let feature: CountyFeature = color_feature.parse()?;
    let ctx = FeatureContext::new(dataset);
    let included: Vec<(&County, &CountyAggregate)> = dataset
        .counties()
        .values()
        .filter_map(|c| {
            let agg = ctx.aggregate(&c.fips)?;
            county_has_glyph(c, Some(agg)).then_some((c, agg))
        })
        .collect();

    let pops: Vec<f64> = included.iter().filter_map(|(c, _)| c.population()).map(|p| p as f64).collect();
    let domain = ScaleDomain {
        population_min: pops.iter().copied().fold(f64::INFINITY, f64::min).min(f64::MAX),
        population_max: pops.iter().copied().fold(0.0, f64::max),
        count_max: included
            .iter()
            .map(|(_, a)| a.stance_count(frame, Stance::For).max(a.stance_count(frame, Stance::Against)))
            .max()
            .unwrap_or(0),
    };

    let mut anchor_fallbacks = Vec::new();
    let mut glyphs = Vec::with_capacity(included.len());
    for (county, agg) in included {
        // polar counties cannot be projected; leave them off the map
        let Ok(anchor) = geo::county_anchor(&county.polygons) else {
            anchor_fallbacks.push(county.fips.clone());
            continue;
        };
        if anchor.fallback {
            anchor_fallbacks.push(county.fips.clone());
        }
        let xy = [anchor.x * scales.map_scale, -anchor.y * scales.map_scale];
        glyphs.push(glyph_shape(
            county,
            agg,
            frame,
            &domain,
            scales,
            xy,
            ctx.county_value(county, feature),
        ));
    }
    let outcome = resolve_overlaps(glyphs, config);
    Ok(MapLayout {
        frame,
        color_feature: feature.name(),
        domain,
        iterations: outcome.iterations,
        converged: outcome.converged,
        max_penetration: outcome.max_penetration,
        total_displacement: outcome.total_displacement,
        anchor_fallbacks,
        glyphs: outcome.glyphs,
    })
}
