//! The emulated edge-cloud infrastructure: a four-layer node hierarchy with
//! inter-layer links, and a QoS-aware greedy placement of microservices
//! onto deployable nodes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::appmodel::{AppSpec, ComputeIntensity, LatencyClass};
use crate::Real;

/// Infrastructure layer, ordered from the network edge inward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Iot,
    Fog1,
    Fog2,
    Fog3,
}

impl Layer {
    /// Distance from the edge: IoT is 0, Fog3 is 3.
    pub fn rank(self) -> u8 {
        match self {
            Layer::Iot => 0,
            Layer::Fog1 => 1,
            Layer::Fog2 => 2,
            Layer::Fog3 => 3,
        }
    }

    fn from_rank(rank: u8) -> Layer {
        match rank {
            0 => Layer::Iot,
            1 => Layer::Fog1,
            2 => Layer::Fog2,
            _ => Layer::Fog3,
        }
    }
}

/// One virtual machine in the emulated infrastructure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub layer: Layer,
    pub vcpus: Real,
    pub memory_gib: Real,
    /// Whether microservices may be scheduled here; the master node is not.
    #[serde(default = "default_true")]
    pub deployable: bool,
}

fn default_true() -> bool {
    true
}

/// One inter-layer link, described once per adjacent layer pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub from_layer: Layer,
    pub to_layer: Layer,
    /// One-way latency, milliseconds.
    pub latency_ms: Real,
    pub bandwidth_gbps: Real,
}

/// The node/link graph plus the latency between distinct same-layer nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
    #[serde(default = "default_same_layer_latency")]
    pub same_layer_latency_ms: Real,
}

fn default_same_layer_latency() -> Real {
    2.0
}

/// Placement of an application's microservices onto nodes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    /// Microservice id → node id.
    pub assignments: BTreeMap<String, String>,
    /// Node id → (vCPUs, GiB) remaining after placement, deployable nodes only.
    pub residual: BTreeMap<String, (Real, Real)>,
}

/// Errors from placement and path queries.
#[derive(Debug, Error)]
pub enum PlacementError {
    #[error("microservice `{microservice}` does not fit on any deployable node (demand {vcpus} vCPU / {memory_gib} GiB)")]
    Infeasible {
        microservice: String,
        vcpus: Real,
        memory_gib: Real,
    },
    #[error("microservice `{0}` is not placed")]
    Unplaced(String),
    #[error("node `{0}` is not part of the topology")]
    UnknownNode(String),
    #[error("topology has no link between layers {a:?} and {b:?}")]
    MissingLink { a: Layer, b: Layer },
}

/// Resource demand implied by a compute-intensity class: (vCPUs, GiB).
pub fn demand(compute: Option<ComputeIntensity>) -> (Real, Real) {
    match compute {
        Some(ComputeIntensity::High) => (2.0, 2.0),
        Some(ComputeIntensity::Medium) => (1.0, 1.0),
        None => (0.5, 0.5),
    }
}

impl Topology {
    /// Looks up a node by id.
    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    fn link_between(&self, a: Layer, b: Layer) -> Option<&Link> {
        self.links.iter().find(|l| {
            (l.from_layer == a && l.to_layer == b) || (l.from_layer == b && l.to_layer == a)
        })
    }

    /// One-way latency between two layers, summing the links along the
    /// layer path; 0 for the same layer.
    pub fn layer_path_latency_ms(&self, a: Layer, b: Layer) -> Result<Real, PlacementError> {
        let (lo, hi) = (a.rank().min(b.rank()), a.rank().max(b.rank()));
        let mut total = 0.0;
        for rank in lo..hi {
            let (la, lb) = (Layer::from_rank(rank), Layer::from_rank(rank + 1));
            let link = self
                .link_between(la, lb)
                .ok_or(PlacementError::MissingLink { a: la, b: lb })?;
            total += link.latency_ms;
        }
        Ok(total)
    }

    /// Structural findings on the topology; empty means usable.
    pub fn findings(&self) -> Vec<String> {
        let mut findings = Vec::new();
        if !self.nodes.iter().any(|n| n.deployable) {
            findings.push("topology has no deployable nodes".to_owned());
        }
        let mut ids = BTreeMap::new();
        for node in &self.nodes {
            if ids.insert(node.id.as_str(), ()).is_some() {
                findings.push(format!("duplicate node id `{}`", node.id));
            }
            if !(node.vcpus > 0.0 && node.vcpus.is_finite()) {
                findings.push(format!("node `{}`: vcpus must be positive", node.id));
            }
            if !(node.memory_gib > 0.0 && node.memory_gib.is_finite()) {
                findings.push(format!("node `{}`: memory_gib must be positive", node.id));
            }
        }
        for link in &self.links {
            if !(link.latency_ms >= 0.0 && link.latency_ms.is_finite()) {
                findings.push(format!(
                    "link {:?}->{:?}: latency_ms must be non-negative",
                    link.from_layer, link.to_layer
                ));
            }
            if !(link.bandwidth_gbps > 0.0 && link.bandwidth_gbps.is_finite()) {
                findings.push(format!(
                    "link {:?}->{:?}: bandwidth_gbps must be positive",
                    link.from_layer, link.to_layer
                ));
            }
        }
        for rank in 0..3 {
            let (a, b) = (Layer::from_rank(rank), Layer::from_rank(rank + 1));
            if self.link_between(a, b).is_none() {
                findings.push(format!("missing link between layers {a:?} and {b:?}"));
            }
        }
        if !(self.same_layer_latency_ms >= 0.0 && self.same_layer_latency_ms.is_finite()) {
            findings.push("same_layer_latency_ms must be non-negative".to_owned());
        }
        findings
    }
}

/// The default ten-node deployment target plus a non-deployable master.
///
/// Two 2 vCPU/8 GiB VMs form the IoT layer, four of the same size fog
/// level 1, three 4 vCPU/16 GiB VMs fog level 2, and one 8 vCPU/32 GiB VM
/// fog level 3; the master (also 8/32, fog level 3) hosts the control plane
/// and receives no microservices. Inter-layer links: IoT→Fog1 5 ms at
/// 100 Gbps, Fog1→Fog2 20 ms at 10 Gbps, Fog2→Fog3 50 ms at 0.15 Gbps;
/// distinct nodes on one layer sit 2 ms apart.
pub fn default_topology() -> Topology {
    let mut nodes = Vec::new();
    let mut push = |id: &str, layer: Layer, vcpus: f64, memory_gib: f64, deployable: bool| {
        nodes.push(Node {
            id: id.to_owned(),
            layer,
            vcpus,
            memory_gib,
            deployable,
        });
    };
    push("iot-0", Layer::Iot, 2.0, 8.0, true);
    push("iot-1", Layer::Iot, 2.0, 8.0, true);
    push("fog1-0", Layer::Fog1, 2.0, 8.0, true);
    push("fog1-1", Layer::Fog1, 2.0, 8.0, true);
    push("fog1-2", Layer::Fog1, 2.0, 8.0, true);
    push("fog1-3", Layer::Fog1, 2.0, 8.0, true);
    push("fog2-0", Layer::Fog2, 4.0, 16.0, true);
    push("fog2-1", Layer::Fog2, 4.0, 16.0, true);
    push("fog2-2", Layer::Fog2, 4.0, 16.0, true);
    push("fog3-0", Layer::Fog3, 8.0, 32.0, true);
    push("master", Layer::Fog3, 8.0, 32.0, false);
    Topology {
        nodes,
        links: vec![
            Link {
                from_layer: Layer::Iot,
                to_layer: Layer::Fog1,
                latency_ms: 5.0,
                bandwidth_gbps: 100.0,
            },
            Link {
                from_layer: Layer::Fog1,
                to_layer: Layer::Fog2,
                latency_ms: 20.0,
                bandwidth_gbps: 10.0,
            },
            Link {
                from_layer: Layer::Fog2,
                to_layer: Layer::Fog3,
                latency_ms: 50.0,
                bandwidth_gbps: 0.15,
            },
        ],
        same_layer_latency_ms: 2.0,
    }
}

/// QoS-aware greedy placement.
///
/// Microservices are ordered latency-critical first, then by descending
/// compute intensity (stable within ties), and each is assigned to the
/// lowest-layer deployable node with enough residual capacity, breaking
/// node ties by id. Deterministic in its inputs.
pub fn place(app: &AppSpec, topo: &Topology) -> Result<Placement, PlacementError> {
    let mut order: Vec<usize> = (0..app.microservices.len()).collect();
    order.sort_by_key(|&i| {
        let ms = &app.microservices[i];
        let latency = match ms.qos.latency {
            LatencyClass::Critical => 0u8,
            LatencyClass::Tolerant => 1u8,
        };
        (latency, std::cmp::Reverse(ms.qos.compute_rank()))
    });
    let mut hosts: Vec<&Node> = topo.nodes.iter().filter(|n| n.deployable).collect();
    hosts.sort_by_key(|n| (n.layer.rank(), n.id.as_str()));
    let mut residual: BTreeMap<String, (Real, Real)> = hosts
        .iter()
        .map(|n| (n.id.clone(), (n.vcpus, n.memory_gib)))
        .collect();
    let mut assignments = BTreeMap::new();
    for i in order {
        let ms = &app.microservices[i];
        let (need_cpu, need_mem) = demand(ms.qos.compute);
        let host = hosts
            .iter()
            .find(|n| {
                let (cpu, mem) = residual[&n.id];
                cpu >= need_cpu && mem >= need_mem
            })
            .ok_or_else(|| PlacementError::Infeasible {
                microservice: ms.id.clone(),
                vcpus: need_cpu,
                memory_gib: need_mem,
            })?;
        let slot = residual.get_mut(&host.id).expect("host tracked");
        slot.0 -= need_cpu;
        slot.1 -= need_mem;
        assignments.insert(ms.id.clone(), host.id.clone());
    }
    Ok(Placement {
        assignments,
        residual,
    })
}

impl Placement {
    fn node_of<'t>(&self, topo: &'t Topology, ms: &str) -> Result<&'t Node, PlacementError> {
        let node_id = self
            .assignments
            .get(ms)
            .ok_or_else(|| PlacementError::Unplaced(ms.to_owned()))?;
        topo.node(node_id)
            .ok_or_else(|| PlacementError::UnknownNode(node_id.clone()))
    }

    /// One-way latency between two placed microservices: 0 when co-located,
    /// the same-layer constant on one layer, otherwise the layer path sum.
    pub fn path_latency_ms(
        &self,
        topo: &Topology,
        a: &str,
        b: &str,
    ) -> Result<Real, PlacementError> {
        let node_a = self.node_of(topo, a)?;
        let node_b = self.node_of(topo, b)?;
        if node_a.id == node_b.id {
            return Ok(0.0);
        }
        if node_a.layer == node_b.layer {
            return Ok(topo.same_layer_latency_ms);
        }
        topo.layer_path_latency_ms(node_a.layer, node_b.layer)
    }

    /// One-way latency from the external client to the entry microservice.
    ///
    /// Clients sit on separate devices at the IoT tier, so an IoT-hosted
    /// entry is one same-layer hop away and deeper layers add the link path.
    pub fn client_latency_ms(&self, topo: &Topology, entry: &str) -> Result<Real, PlacementError> {
        let node = self.node_of(topo, entry)?;
        if node.layer == Layer::Iot {
            Ok(topo.same_layer_latency_ms)
        } else {
            topo.layer_path_latency_ms(Layer::Iot, node.layer)
        }
    }
}
