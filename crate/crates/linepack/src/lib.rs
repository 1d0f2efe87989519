//! Deterministic online routing of packets on a unidirectional line.
//!
//! Nodes `0..n` are joined by links `v -> v+1`. Each node buffers up to `B`
//! packets and each link carries up to `c` packets per step. Requests arrive
//! online and are either rejected on arrival or delivered to their exact
//! destination; accepted packets are never dropped.
//!
//! The router splits every edge of the space-time graph into five tracks.
//! Short ("near") requests travel straight along the near track. Long ("far")
//! requests are admitted by online path packing over four shifted tilings of
//! the space-time grid, and then routed through each tile by crossbar routing.

pub mod config;
pub mod execlog;
pub mod greedy;
pub mod intratile;
pub mod model;
pub mod pathpack;
pub mod router;
pub mod spacetime;
pub mod tiling;
pub mod trace;
pub mod workload;

pub use model::{classify, validate_config, ConfigError, NetConfig, RawConfig, Request, RequestClass, Track};
pub use router::{Engine, EngineError, StepReport, Summary};
pub use spacetime::{EdgeKind, Move, STEdge, STVertex};
