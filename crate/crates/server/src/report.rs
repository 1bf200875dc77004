//! Plain-text reports and SVG rendering for the command-line tool.

use std::fmt::Write;

use motiv_core::analytics::{county_aggregates, frame_summaries};
use motiv_core::corpus::IngestReport;
use motiv_core::glyph::glyph_svg_path;
use motiv_core::Dataset;

use crate::api::{GamReport, MapView};

pub fn ingest_report(ds: &Dataset, r: &IngestReport) -> String {
    let mut out = String::new();
    let retained = r.build.retained;
    let _ = writeln!(out, "topic: {}", ds.topic_label());
    let _ = writeln!(out, "tweet rows in:        {}", r.rows_in);
    let _ = writeln!(out, "retained:             {retained}");
    let _ = writeln!(out, "dropped:              {}", r.dropped());
    let _ = writeln!(out, "  malformed rows:     {}", r.rejected.len());
    let _ = writeln!(out, "  no stance:          {}", r.dropped_no_stance);
    let _ = writeln!(out, "  no moral frame:     {}", r.dropped_no_frames);
    let _ = writeln!(out, "  below overlap:      {}", r.build.unassigned);
    let _ = writeln!(out, "  unknown county:     {}", r.build.unknown_fips.len());
    let conserved = r.rows_in == retained + r.dropped();
    let _ = writeln!(out, "conservation: {} = {} + {} ({})", r.rows_in, retained, r.dropped(), if conserved { "ok" } else { "MISMATCH" });
    if let Some(range) = ds.time_range() {
        let _ = writeln!(out, "time range: {} .. {}", range.start.to_rfc3339(), range.end.to_rfc3339());
    }
    for d in &r.rejected {
        let _ = writeln!(out, "  rejected line {}: {}", d.line, d.message);
    }
    for m in &r.build.unknown_fips {
        let _ = writeln!(out, "  {m}");
    }

    let _ = writeln!(out, "\nper-frame counts");
    let _ = writeln!(out, "{:<12} {:>7} {:>7} {:>7} {:>7}", "frame", "tweets", "for", "against", "vivid");
    for s in frame_summaries(ds) {
        let vivid = (s.vivid_fraction * s.n_tweets as f64).round() as u64;
        let _ = writeln!(out, "{:<12} {:>7} {:>7} {:>7} {:>7}", s.frame.name(), s.n_tweets, s.n_for, s.n_against, vivid);
    }

    let aggs = county_aggregates(ds);
    let covered = aggs.values().filter(|a| a.total_tweets > 0).count();
    let total = ds.counties().len();
    let _ = writeln!(out, "\ncounty coverage: {covered} of {total} counties have tweets");
    if !r.build.counties_missing_demographics.is_empty() {
        let _ = writeln!(out, "counties without demographics: {}", r.build.counties_missing_demographics.len());
    }
    if !r.build.demographics_without_county.is_empty() {
        let _ = writeln!(out, "demographic rows without a county: {}", r.build.demographics_without_county.join(", "));
    }
    if !r.build.covid_without_county.is_empty() {
        let _ = writeln!(out, "case series without a county: {}", r.build.covid_without_county.join(", "));
    }
    if !r.build.self_intersecting_counties.is_empty() {
        let _ = writeln!(out, "self-intersecting boundaries: {}", r.build.self_intersecting_counties.join(", "));
    }
    let _ = writeln!(out, "{:<7} {:<28} {:>7} {:>7} {:>7}", "fips", "name", "tweets", "for", "against");
    for a in aggs.values().filter(|a| a.total_tweets > 0) {
        let name = ds.county(&a.fips).map_or("", |c| c.name.as_str());
        let _ = writeln!(out, "{:<7} {:<28} {:>7} {:>7} {:>7}", a.fips, name, a.total_tweets, a.total_for, a.total_against);
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"))
}

pub fn gam_table(r: &GamReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "target: {}  ({:?}, {} rows, {} dropped)", r.spec.target, r.spec.granularity, r.n_rows, r.dropped_rows);
    let _ = writeln!(out, "intercept: {:.6}", r.intercept);
    if let Some(b0) = r.original_intercept {
        let _ = writeln!(out, "intercept (original units): {b0:.6}");
    }
    let _ = writeln!(out, "lambda: {}  edf: {:.4}  rss: {:.6}  gcv: {}", opt(r.lambda), r.edf, r.rss, opt(r.gcv_score));
    if r.jittered {
        let _ = writeln!(out, "note: ridge jitter was added to a near-singular system");
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<24} {:<7} {:>14} {:>14} {:>10} {:>12}", "term", "kind", "slope", "std. error", "t", "p");
    for t in &r.terms {
        let p = r.p_values.as_ref().and_then(|ps| ps.iter().find(|p| p.feature == t.feature));
        let kind = format!("{:?}", t.kind).to_lowercase();
        let _ = writeln!(
            out,
            "{:<24} {:<7} {:>14} {:>14} {:>10} {:>12}",
            t.feature,
            kind,
            opt(t.slope),
            opt(t.slope_se),
            p.map_or("-".into(), |p| format!("{:.3}", p.t)),
            p.map_or("-".into(), |p| format!("{:.4e}", p.p_value)),
        );
    }
    if let Some(note) = &r.p_value_note {
        let _ = writeln!(out, "\n{note}");
    }
    out
}

fn fill(v: Option<f64>, scale: f64) -> String {
    let Some(v) = v else {
        return "#bdbdbd".into();
    };
    let t = if scale > 0.0 { (v / scale).clamp(-1.0, 1.0) } else { 0.0 };
    // blue for positive values, red for negative, white at zero
    let (r, g, b) = if t >= 0.0 {
        (255.0 * (1.0 - t) + 33.0 * t, 255.0 * (1.0 - t) + 102.0 * t, 255.0 * (1.0 - t) + 172.0 * t)
    } else {
        let t = -t;
        (255.0 * (1.0 - t) + 178.0 * t, 255.0 * (1.0 - t) + 24.0 * t, 255.0 * (1.0 - t) + 43.0 * t)
    };
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
}

/// One `<path>` per glyph, filled by its color value.
pub fn map_svg(view: &MapView) -> String {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for v in &view.glyphs {
        let g = &v.glyph;
        let h = g.upper_radius.max(g.lower_radius);
        lo[0] = lo[0].min(g.position[0] - g.half_width);
        hi[0] = hi[0].max(g.position[0] + g.half_width);
        lo[1] = lo[1].min(g.position[1] - h);
        hi[1] = hi[1].max(g.position[1] + h);
    }
    if view.glyphs.is_empty() {
        lo = [0.0; 2];
        hi = [1.0; 2];
    }
    let pad = 10.0;
    let scale = view
        .glyphs
        .iter()
        .filter_map(|v| v.glyph.color_value)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.3} {:.3} {:.3} {:.3}\">",
        lo[0] - pad,
        lo[1] - pad,
        hi[0] - lo[0] + 2.0 * pad,
        hi[1] - lo[1] + 2.0 * pad
    );
    let _ = writeln!(out, "<title>{} ({})</title>", xml_escape(&view.topic), xml_escape(&view.color_feature));
    for v in &view.glyphs {
        let _ = writeln!(
            out,
            "<path data-fips=\"{}\" d=\"{}\" fill=\"{}\" stroke=\"#444\" stroke-width=\"0.3\"/>",
            v.glyph.fips,
            glyph_svg_path(&v.glyph),
            fill(v.glyph.color_value, scale)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
