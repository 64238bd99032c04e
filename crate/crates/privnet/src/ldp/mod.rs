//! Local differential privacy channels and their exact verification oracles.
//!
//! Two non-interactive mechanisms are implemented:
//!
//! - [`rr`]: per-edge randomized response for symmetric binary networks;
//! - [`node`]: the per-row `±B` hypercube mechanism for bipartite binary
//!   networks, protecting a node's whole connection profile.
//!
//! [`channel`] enumerates the node channel exactly in small dimension and
//! backs the privacy-ratio and moment checks for both mechanisms.

pub mod channel;
pub mod node;
pub mod rr;

pub use channel::{channel_exact, moments_exact, privacy_ratio, ChannelTable, Mechanism};
pub use node::{node_constants, node_privatize, NodeMechParams};
pub use rr::{rr_closure, rr_privatize, EdgeRrParams};
