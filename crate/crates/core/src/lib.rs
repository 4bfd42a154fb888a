//! Cascade reconstruction and implicit-link diffusion analytics over
//! follow networks.

pub mod cascade;
pub mod community;
pub mod error;
pub mod graph;
pub mod homophily;
pub mod io;
pub mod metrics;
pub mod nullmodel;
pub mod pipeline;
pub mod rci;
pub mod stats;
pub mod summary;

pub use cascade::{Cascade, DiffusionGraph, LinkType, PostRecord, RepostRecord};
pub use error::{Error, ErrorKind, Result};
pub use graph::{FollowNetwork, MutualGraph, Node, UserId};
pub use pipeline::{run_pipeline, Analysis, CascadeInput, Report, RunConfig};
