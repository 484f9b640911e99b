//! Scenario files and their resolution into a concrete node set.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::EnergyConstants;
use crate::error::{Error, Result};
use crate::mac::{
    derive_geometry, validate_allocations, AccessRegistry, GtsAllocation, MacConfig, Priority,
    SuperframeGeometry,
};
use crate::medium::{CaptureRule, Medium, NodeId};
use crate::phy::{ChannelEntry, ChannelPlan, PhyConfig, MAX_PHY_PAYLOAD};
use crate::regulatory::WindowMode;
use crate::sim::traffic::{ProcessSpec, TrafficRegistry};
use crate::time::SimTime;

pub const SCHEMA_VERSION: u32 = 1;
pub const COORDINATOR: NodeId = 0;

fn default_seed() -> u64 {
    1
}

fn default_drain() -> f64 {
    600.0
}

fn default_sinks() -> u32 {
    1
}

fn default_payload() -> usize {
    16
}

fn default_power() -> f64 {
    14.0
}

fn default_service() -> String {
    "gts".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub duration_s: f64,
    #[serde(default)]
    pub warmup_s: f64,
    /// Extra time after `duration_s` for queued packets to resolve.
    #[serde(default = "default_drain")]
    pub drain_s: f64,
    #[serde(default)]
    pub start_jitter_s: f64,
    #[serde(default)]
    pub phy: PhyConfig,
    #[serde(default)]
    pub mac: MacConfig,
    #[serde(default)]
    pub capture: CaptureRule,
    #[serde(default)]
    pub channel_plan: Option<Vec<ChannelEntry>>,
    #[serde(default)]
    pub energy: EnergyConstants,
    #[serde(default)]
    pub airtime_window: WindowMode,
    pub topology: TopologyConfig,
    pub traffic: TrafficConfig,
    #[serde(default)]
    pub interferers: Vec<InterfererConfig>,
    /// Explicit GTS table; allocated automatically when empty.
    #[serde(default)]
    pub gts: Vec<GtsAllocation>,
    #[serde(default)]
    pub nodes: Vec<NodeOverride>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyKind {
    /// Sources each sending to one of several sinks.
    SourceSink,
    /// All sources send to a single sink.
    Star,
    /// Every node sends to a random other node.
    PeerToPeer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Assignment {
    /// Seeded shuffle of the sources, then dealt round robin (balanced).
    #[default]
    Random,
    RoundRobin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub source: NodeId,
    pub sink: NodeId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub kind: TopologyKind,
    pub sources: u32,
    #[serde(default = "default_sinks")]
    pub sinks: u32,
    #[serde(default)]
    pub assignment: Assignment,
    /// Explicit source to sink map by node id, replacing `assignment`.
    #[serde(default)]
    pub flows: Vec<FlowConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficConfig {
    #[serde(default = "default_service")]
    pub service: String,
    #[serde(default)]
    pub confirmed: bool,
    #[serde(default = "default_payload")]
    pub payload_bytes: usize,
    #[serde(default)]
    pub priority: Priority,
    pub process: ProcessSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterfererRole {
    Jammer,
    Lorawan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfererConfig {
    pub role: InterfererRole,
    pub count: u32,
    /// Channel numbers; numbers outside the plan occupy spectrum DSME never uses.
    pub channels: Vec<u8>,
    pub payload_bytes: usize,
    pub process: ProcessSpec,
    #[serde(default = "default_power")]
    pub tx_power_dbm: f64,
    #[serde(default)]
    pub start_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeOverride {
    pub id: NodeId,
    #[serde(default)]
    pub tx_power_dbm: Option<f64>,
    #[serde(default)]
    pub rx_on_when_idle: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Coordinator,
    Source,
    Sink,
    /// Peer-to-peer node that both sends and receives.
    Peer,
    Jammer,
    Lorawan,
}

impl Role {
    pub fn is_dsme_child(self) -> bool {
        matches!(self, Role::Source | Role::Sink | Role::Peer)
    }

    pub fn is_interferer(self) -> bool {
        matches!(self, Role::Jammer | Role::Lorawan)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    pub dest: NodeId,
    pub confirmed: bool,
    pub payload_bytes: usize,
    pub priority: Priority,
    pub process: ProcessSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterfererSpec {
    pub channels: Vec<u8>,
    pub payload_bytes: usize,
    pub process: ProcessSpec,
    pub start: SimTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub id: NodeId,
    pub role: Role,
    pub tx_power_dbm: f64,
    pub rx_on_when_idle: bool,
    pub flow: Option<FlowSpec>,
    pub interferer: Option<InterfererSpec>,
}

/// A validated scenario with every node and allocation resolved.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub duration: SimTime,
    pub warmup: SimTime,
    pub drain: SimTime,
    pub start_jitter: SimTime,
    pub phy: PhyConfig,
    pub mac: MacConfig,
    pub capture: CaptureRule,
    pub plan: ChannelPlan,
    pub energy: EnergyConstants,
    pub airtime_window: WindowMode,
    pub service: String,
    pub nodes: Vec<NodeSpec>,
    pub allocations: Vec<GtsAllocation>,
    pub geometry: SuperframeGeometry,
}

impl ScenarioFile {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// A source/sink scenario with library defaults for everything else.
    pub fn source_sink(
        sources: u32,
        sinks: u32,
        service: &str,
        confirmed: bool,
        process: ProcessSpec,
        duration_s: f64,
    ) -> Self {
        ScenarioFile {
            schema_version: SCHEMA_VERSION,
            name: String::new(),
            seed: default_seed(),
            duration_s,
            warmup_s: 0.0,
            drain_s: default_drain(),
            start_jitter_s: 0.0,
            phy: PhyConfig::default(),
            mac: MacConfig::default(),
            capture: CaptureRule::default(),
            channel_plan: None,
            energy: EnergyConstants::default(),
            airtime_window: WindowMode::Sliding,
            topology: TopologyConfig {
                kind: TopologyKind::SourceSink,
                sources,
                sinks,
                assignment: Assignment::Random,
                flows: Vec::new(),
            },
            traffic: TrafficConfig {
                service: service.into(),
                confirmed,
                payload_bytes: default_payload(),
                priority: Priority::Regular,
                process,
            },
            interferers: Vec::new(),
            gts: Vec::new(),
            nodes: Vec::new(),
        }
    }

    pub fn resolve(&self) -> Result<Scenario> {
        self.resolve_with(&AccessRegistry::default(), &TrafficRegistry::default())
    }

    pub fn resolve_with(
        &self,
        access: &AccessRegistry,
        traffic: &TrafficRegistry,
    ) -> Result<Scenario> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "schema_version {} not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        for (name, v) in [
            ("duration_s", self.duration_s),
            ("warmup_s", self.warmup_s),
            ("drain_s", self.drain_s),
            ("start_jitter_s", self.start_jitter_s),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if self.duration_s == 0.0 {
            return Err(Error::InvalidConfig("duration_s must be positive".into()));
        }
        if self.warmup_s >= self.duration_s {
            return Err(Error::InvalidConfig(
                "warmup_s must be shorter than duration_s".into(),
            ));
        }
        self.phy.validate()?;
        let geometry = derive_geometry(&self.mac)?;
        self.energy.validate()?;
        let plan = match &self.channel_plan {
            Some(entries) => ChannelPlan::new(entries.clone())?,
            None => ChannelPlan::eu868(),
        };
        Medium::new(self.capture)?;
        if self.mac.beacon_bytes + crate::phy::FCS_BYTES > MAX_PHY_PAYLOAD {
            return Err(Error::InvalidConfig(format!(
                "beacon of {} bytes does not fit a frame",
                self.mac.beacon_bytes
            )));
        }
        let t = &self.traffic;
        if !access.contains(&t.service) {
            return Err(Error::InvalidConfig(format!(
                "unknown channel access '{}' (known: {})",
                t.service,
                access.names().collect::<Vec<_>>().join(", ")
            )));
        }
        if crate::mac::DATA_HEADER_BYTES + t.payload_bytes + crate::phy::FCS_BYTES > MAX_PHY_PAYLOAD
        {
            return Err(Error::InvalidConfig(format!(
                "payload of {} bytes does not fit a frame",
                t.payload_bytes
            )));
        }
        traffic.create(&t.process)?;

        let topo = &self.topology;
        if topo.sources == 0 {
            return Err(Error::InvalidConfig(
                "topology needs at least one source".into(),
            ));
        }
        let mut nodes = vec![NodeSpec {
            id: COORDINATOR,
            role: Role::Coordinator,
            tx_power_dbm: default_power(),
            rx_on_when_idle: false,
            flow: None,
            interferer: None,
        }];
        let listens_in_cap = t.service != "gts";
        let flow = |dest| FlowSpec {
            dest,
            confirmed: t.confirmed,
            payload_bytes: t.payload_bytes,
            priority: t.priority,
            process: t.process.clone(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(u64::MAX);
        match topo.kind {
            TopologyKind::SourceSink | TopologyKind::Star => {
                let sinks = if topo.kind == TopologyKind::Star {
                    1
                } else {
                    topo.sinks
                };
                if sinks == 0 {
                    return Err(Error::InvalidConfig(
                        "topology needs at least one sink".into(),
                    ));
                }
                for s in 1..=sinks {
                    nodes.push(NodeSpec {
                        id: s,
                        role: Role::Sink,
                        tx_power_dbm: default_power(),
                        rx_on_when_idle: listens_in_cap || self.mac.rx_on_when_idle,
                        flow: None,
                        interferer: None,
                    });
                }
                let first = sinks + 1;
                let sources: Vec<NodeId> = (first..first + topo.sources).collect();
                let mut dest_of: BTreeMap<NodeId, NodeId> = BTreeMap::new();
                if topo.flows.is_empty() {
                    let mut order = sources.clone();
                    if topo.assignment == Assignment::Random {
                        order.shuffle(&mut rng);
                    }
                    for (i, src) in order.iter().enumerate() {
                        dest_of.insert(*src, 1 + (i as u32 % sinks));
                    }
                } else {
                    for f in &topo.flows {
                        if !sources.contains(&f.source) || !(1..=sinks).contains(&f.sink) {
                            return Err(Error::InvalidConfig(format!(
                                "flow {} -> {} does not connect a source to a sink",
                                f.source, f.sink
                            )));
                        }
                        if dest_of.insert(f.source, f.sink).is_some() {
                            return Err(Error::InvalidConfig(format!(
                                "source {} has two flows",
                                f.source
                            )));
                        }
                    }
                }
                for src in sources {
                    nodes.push(NodeSpec {
                        id: src,
                        role: Role::Source,
                        tx_power_dbm: default_power(),
                        rx_on_when_idle: self.mac.rx_on_when_idle,
                        flow: dest_of.get(&src).map(|d| flow(*d)),
                        interferer: None,
                    });
                }
            }
            TopologyKind::PeerToPeer => {
                if topo.sources < 2 {
                    return Err(Error::InvalidConfig(
                        "peer-to-peer needs at least two nodes".into(),
                    ));
                }
                let n = topo.sources;
                for id in 1..=n {
                    let mut dest = 1 + (rand::Rng::random_range(&mut rng, 0..n - 1));
                    if dest >= id {
                        dest += 1;
                    }
                    nodes.push(NodeSpec {
                        id,
                        role: Role::Peer,
                        tx_power_dbm: default_power(),
                        rx_on_when_idle: listens_in_cap || self.mac.rx_on_when_idle,
                        flow: Some(flow(dest)),
                        interferer: None,
                    });
                }
            }
        }
        let phy_ok = |bytes: usize, what: &str| {
            if bytes > MAX_PHY_PAYLOAD {
                Err(Error::InvalidConfig(format!(
                    "{what} of {bytes} bytes exceeds the PHY limit"
                )))
            } else {
                Ok(())
            }
        };
        for ic in &self.interferers {
            if ic.channels.is_empty() {
                return Err(Error::InvalidConfig(
                    "interferer needs at least one channel".into(),
                ));
            }
            phy_ok(ic.payload_bytes, "interferer payload")?;
            traffic.create(&ic.process)?;
            for _ in 0..ic.count {
                let id = nodes.len() as NodeId;
                nodes.push(NodeSpec {
                    id,
                    role: match ic.role {
                        InterfererRole::Jammer => Role::Jammer,
                        InterfererRole::Lorawan => Role::Lorawan,
                    },
                    tx_power_dbm: ic.tx_power_dbm,
                    rx_on_when_idle: false,
                    flow: None,
                    interferer: Some(InterfererSpec {
                        channels: ic.channels.clone(),
                        payload_bytes: ic.payload_bytes,
                        process: ic.process.clone(),
                        start: SimTime::from_secs_f64(ic.start_s),
                    }),
                });
            }
        }
        for o in &self.nodes {
            let node = nodes.get_mut(o.id as usize).ok_or_else(|| {
                Error::InvalidConfig(format!("override for unknown node {}", o.id))
            })?;
            if let Some(p) = o.tx_power_dbm {
                node.tx_power_dbm = p;
            }
            if let Some(r) = o.rx_on_when_idle {
                node.rx_on_when_idle = r;
            }
        }

        let allocations = if t.service == "gts" {
            if self.gts.is_empty() {
                allocate_gts(&nodes, &geometry)?
            } else {
                self.gts.clone()
            }
        } else {
            self.gts.clone()
        };
        validate_allocations(&allocations, &geometry)?;
        for a in &allocations {
            for id in [a.owner_tx, a.peer_rx] {
                if !nodes
                    .get(id as usize)
                    .is_some_and(|n| n.role.is_dsme_child())
                {
                    return Err(Error::InvalidConfig(format!(
                        "GTS references node {id}, which is not a DSME device"
                    )));
                }
            }
        }

        Ok(Scenario {
            name: self.name.clone(),
            seed: self.seed,
            duration: SimTime::from_secs_f64(self.duration_s),
            warmup: SimTime::from_secs_f64(self.warmup_s),
            drain: SimTime::from_secs_f64(self.drain_s),
            start_jitter: SimTime::from_secs_f64(self.start_jitter_s),
            phy: self.phy.clone(),
            mac: self.mac.clone(),
            capture: self.capture,
            plan,
            energy: self.energy,
            airtime_window: self.airtime_window,
            service: t.service.clone(),
            nodes,
            allocations,
            geometry,
        })
    }
}

/// First-fit GTS assignment: one slot per flow, no node needing two radios
/// at once, and distinct channel offsets within a time slot.
pub fn allocate_gts(nodes: &[NodeSpec], geo: &SuperframeGeometry) -> Result<Vec<GtsAllocation>> {
    let mut slots: Vec<(u32, u32)> = Vec::new();
    for sf in 0..geo.superframes_per_msf {
        for g in 0..geo.gts_in_superframe(sf) {
            slots.push((sf, g));
        }
    }
    let mut busy: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); slots.len()];
    let mut used_offsets: Vec<u8> = vec![0; slots.len()];
    let mut out = Vec::new();
    for n in nodes {
        let Some(f) = &n.flow else { continue };
        let pick = (0..slots.len()).find(|&i| {
            (used_offsets[i] as u32) < geo.channels
                && !busy[i].contains(&n.id)
                && !busy[i].contains(&f.dest)
        });
        let Some(i) = pick else {
            return Err(Error::InvalidConfig(format!(
                "no free GTS for flow {} -> {} ({} GTS per multisuperframe)",
                n.id, f.dest, geo.gts_per_msf
            )));
        };
        busy[i].insert(n.id);
        busy[i].insert(f.dest);
        out.push(GtsAllocation {
            owner_tx: n.id,
            peer_rx: f.dest,
            superframe_index: slots[i].0,
            slot_index: slots[i].1,
            channel_offset: used_offsets[i],
        });
        used_offsets[i] += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolves_source_sink() {
        let f =
            ScenarioFile::source_sink(15, 3, "gts", false, ProcessSpec::exponential(20.0), 60.0);
        let s = f.resolve().unwrap();
        assert_eq!(s.nodes.len(), 19);
        assert_eq!(s.allocations.len(), 15);
        let mut per_sink = BTreeMap::new();
        for a in &s.allocations {
            *per_sink.entry(a.peer_rx).or_insert(0) += 1;
        }
        assert!(per_sink.values().all(|&c| c == 5));
    }

    #[test]
    fn too_many_flows_for_one_sink() {
        let mut f =
            ScenarioFile::source_sink(8, 1, "gts", false, ProcessSpec::exponential(20.0), 60.0);
        f.topology.kind = TopologyKind::Star;
        assert!(f.resolve().is_err());
    }

    #[test]
    fn rejects_unknown_keys_and_versions() {
        let text = r#"
schema_version = 1
duration_s = 10
bogus = 3
[topology]
kind = "star"
sources = 2
[traffic.process]
kind = "exponential"
mean_s = 20
"#;
        assert!(matches!(
            ScenarioFile::from_toml_str(text),
            Err(Error::Parse(_))
        ));
        let mut f =
            ScenarioFile::source_sink(2, 1, "gts", false, ProcessSpec::exponential(20.0), 60.0);
        f.schema_version = 2;
        assert!(f.resolve().is_err());
        f.schema_version = 1;
        f.traffic.service = "tdma".into();
        assert!(f.resolve().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let f =
            ScenarioFile::source_sink(4, 2, "csma", true, ProcessSpec::uniform(7.0, 13.0), 60.0);
        let back = ScenarioFile::from_toml_str(&f.to_toml_string().unwrap()).unwrap();
        assert_eq!(f, back);
    }
}
