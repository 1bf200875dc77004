//! HTTP/JSON API, dataset archives and report rendering on top of
//! `motiv-core`. The `motiv` binary is a thin command-line wrapper.

pub mod api;
pub mod archive;
pub mod http;
pub mod report;
