//! Analytics engine for moral-frame-annotated, geotagged microblog corpora.
//!
//! The pipeline: parse tweets and county data ([`corpus`]), score sentiment
//! ([`sentiment`]), assign each tweet's bounding box to a county ([`geo`]),
//! join everything into an immutable [`corpus::Dataset`], then derive frame
//! summaries and timeline layouts ([`analytics`]), glyph-map layouts
//! ([`glyph`]) and additive-model fits with partial dependence ([`gam`]).

pub mod analytics;
pub mod corpus;
pub mod error;
pub mod features;
pub mod frame;
pub mod gam;
pub mod geo;
pub mod glyph;
pub mod sentiment;

pub use corpus::{Dataset, Stance, Tweet};
pub use frame::MoralFrame;
