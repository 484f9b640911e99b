//! Discrete-event simulation of a DSME network.

mod engine;
pub mod metrics;
mod replicas;
pub mod scenario;
pub mod traffic;

pub use engine::{run, run_with_trace, Simulation};
pub use metrics::{empirical_cdf, Metrics, PacketFate, PacketSummary, SyncRecord, TxStats};
pub use replicas::run_replicas;
pub use scenario::{
    allocate_gts, Assignment, FlowConfig, FlowSpec, InterfererConfig, InterfererRole, NodeOverride,
    NodeSpec, Role, Scenario, ScenarioFile, TopologyConfig, TopologyKind, TrafficConfig,
    COORDINATOR, SCHEMA_VERSION,
};
pub use traffic::{next_arrival, ArrivalProcess, ProcessSpec, TrafficRegistry};
