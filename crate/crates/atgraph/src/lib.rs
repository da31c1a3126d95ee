//! Crawler and analytics toolkit for AT Protocol networks.
//!
//! `atgraph` harvests user repositories over the unauthenticated XRPC read
//! routes (`com.atproto.sync.listRepos`, `com.atproto.repo.describeRepo`,
//! `com.atproto.repo.listRecords`), materializes an eight-table CSV dataset
//! (blocks, follows, users, posts, reposts, tags, links, mentions), and flags
//! anomalous blocking behavior with per-day z-scores against a percentile
//! threshold.
//!
//! The crate is organized around the pipeline stages:
//!
//! - [`xrpc`] — rate-limited, retrying HTTP client with cursor pagination
//! - [`records`] — typed rows and parsers for raw record payloads
//! - [`ingest`] — crawl orchestration, checkpointing, and resume
//! - [`store`] — append-only CSV tables with dedupe
//! - [`anomaly`] — daily z-score classification and report emission
//! - [`plot`] — SVG scatter rendering of the classification
//! - [`relay`] — fixture-backed mock relay/PDS for hermetic runs
//! - [`cli`] — the `atgraph` command-line entry point

pub mod anomaly;
pub mod cli;
pub mod ingest;
pub mod plot;
pub mod records;
pub mod relay;
pub mod store;
pub mod types;
pub mod xrpc;
