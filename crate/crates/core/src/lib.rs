//! Interactive, explainable point-of-interest recommendation.
//!
//! Recommendations are served from look-alike visitor groups that are mined on the fly among
//! the visitors who checked in near the user, in the same time of day. Each iteration picks `k`
//! groups that maximize a mindset function (a prior-weighted blend of eight POI-set utilities)
//! and shows the `k'` POIs most visited by each group's members. Bookmarks feed back into the
//! next iteration through relevance pruning and user-specific weights.
//!
//! Module map:
//!
//! * [`dataset`]: ingestion, demographic discretization, time buckets, normalization stats.
//! * [`geo`]: haversine distance, grid index for radius queries, time-matched check-ins.
//! * [`utilities`]: the eight POI-set utility functions.
//! * [`mindsets`]: built-in mindsets, the mindset score, weight updates, custom mindsets.
//! * [`groups`]: transaction embeddings, closed frequent itemset mining, relevance, descriptions.
//! * [`engine`]: the per-iteration pipeline, the greedy maximizer and session state.
//! * [`simulator`]: hit-ratio simulation study and baselines.
//! * [`synth`]: a seeded synthetic city for experiments and tests.

pub mod dataset;
pub mod engine;
pub mod error;
pub mod geo;
pub mod groups;
pub mod mindsets;
pub mod simulator;
pub mod synth;
pub mod utilities;

pub use dataset::{Dataset, LoadConfig};
pub use engine::{Budget, Engine, EngineParams, Recommendation, Session};
pub use error::{Error, Result};
pub use geo::{Context, GeoPoint};
pub use mindsets::{Mindset, UtilityVector};
pub use utilities::UtilityKind;
