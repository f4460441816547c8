//! Problem data: depot, customers, charger time slots and fleet parameters.
//!
//! Node ids are positions in [`Instance::nodes`]. Node `0` is the depot. The
//! return copy of the depot is not stored; it is addressed by
//! [`Instance::end_depot`], which equals `nodes.len()` and shares the depot's
//! coordinates and time window.

mod format;
mod generate;
mod schedule;
pub mod synth;

pub use format::{parse_instance, parse_schneider, parse_solution, write_instance, write_solution};
pub use generate::{generate_instance, generate_pair, GeneratedInstance, SlotPlan, RNG_ID};
pub use schedule::{
    check_path, validate_solution, ChargeEvent, RouteReport, RouteSchedule, ValidationReport, Violation,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance used for time and battery comparisons.
pub const EPS: f64 = 1e-6;

/// Rounds to two decimals, the precision of all instance data.
pub fn round2(x: f64) -> f64 {
    let r = (x * 100.0).round() / 100.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("invalid instance: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Depot,
    Customer,
    /// Physical charger location of a base instance; expanded into slots by
    /// the generator.
    Station,
    ChargerSlot,
}

impl NodeKind {
    pub fn code(self) -> char {
        match self {
            NodeKind::Depot => 'D',
            NodeKind::Customer => 'C',
            NodeKind::Station => 'S',
            NodeKind::ChargerSlot => 'F',
        }
    }

    pub fn from_code(c: &str) -> Option<Self> {
        match c {
            "D" => Some(NodeKind::Depot),
            "C" => Some(NodeKind::Customer),
            "S" => Some(NodeKind::Station),
            "F" => Some(NodeKind::ChargerSlot),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub kind: NodeKind,
    pub x: f64,
    pub y: f64,
    pub demand: f64,
    pub tw_open: f64,
    pub tw_close: f64,
    pub service_time: f64,
    pub charger_location: Option<usize>,
    pub slot_capacity: Option<u32>,
}

impl Node {
    pub fn new(id: usize, kind: NodeKind, x: f64, y: f64) -> Self {
        Node {
            id,
            kind,
            x: round2(x),
            y: round2(y),
            demand: 0.0,
            tw_open: 0.0,
            tw_close: 0.0,
            service_time: 0.0,
            charger_location: None,
            slot_capacity: None,
        }
    }

    pub fn is_customer(&self) -> bool {
        self.kind == NodeKind::Customer
    }

    pub fn is_slot(&self) -> bool {
        self.kind == NodeKind::ChargerSlot
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub name: String,
    pub vehicles: usize,
    pub capacity: f64,
    pub battery: f64,
    /// Energy recharged per time unit.
    pub recharge_rate: f64,
    /// Energy consumed per distance unit.
    pub consumption_rate: f64,
    pub seed: Option<u64>,
    pub rng: Option<String>,
    pub nodes: Vec<Node>,
}

impl Instance {
    /// Id of the return depot copy (`n + 1`).
    pub fn end_depot(&self) -> usize {
        self.nodes.len()
    }

    /// Number of route-addressable node ids, including the end depot.
    pub fn num_route_nodes(&self) -> usize {
        self.nodes.len() + 1
    }

    /// Node data for a route id; the end depot maps onto the depot record.
    pub fn node(&self, id: usize) -> &Node {
        if id == self.nodes.len() {
            &self.nodes[0]
        } else {
            &self.nodes[id]
        }
    }

    pub fn horizon(&self) -> f64 {
        self.nodes[0].tw_close
    }

    /// Euclidean distance rounded to two decimals.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.node(i), self.node(j));
        round2(((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt())
    }

    /// Time to recharge the full battery.
    pub fn full_recharge_time(&self) -> f64 {
        self.battery / self.recharge_rate
    }

    pub fn customers(&self) -> impl Iterator<Item = &Node> + '_ {
        self.nodes.iter().filter(|n| n.is_customer())
    }

    pub fn slots(&self) -> impl Iterator<Item = &Node> + '_ {
        self.nodes.iter().filter(|n| n.is_slot())
    }

    pub fn stations(&self) -> impl Iterator<Item = &Node> + '_ {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Station)
    }

    pub fn num_customers(&self) -> usize {
        self.customers().count()
    }

    /// Rounds every numeric field to two decimals.
    pub fn round_data(&mut self) {
        self.capacity = round2(self.capacity);
        self.battery = round2(self.battery);
        self.recharge_rate = round2(self.recharge_rate);
        self.consumption_rate = round2(self.consumption_rate);
        for n in &mut self.nodes {
            n.x = round2(n.x);
            n.y = round2(n.y);
            n.demand = round2(n.demand);
            n.tw_open = round2(n.tw_open);
            n.tw_close = round2(n.tw_close);
            n.service_time = round2(n.service_time);
        }
    }

    /// Checks the structural invariants of the data model.
    pub fn check(&self) -> Result<(), InstanceError> {
        let invalid = |m: String| Err(InstanceError::Invalid(m));
        if self.nodes.is_empty() || self.nodes[0].kind != NodeKind::Depot {
            return invalid("node 0 must be the depot".into());
        }
        if self.battery <= 0.0 || self.recharge_rate <= 0.0 || self.consumption_rate < 0.0 {
            return invalid("battery and recharge rate must be positive".into());
        }
        if self.capacity < 0.0 {
            return invalid("negative vehicle capacity".into());
        }
        let horizon = self.horizon();
        for (idx, n) in self.nodes.iter().enumerate() {
            if n.id != idx {
                return invalid(format!("node ids must be consecutive, found {} at {}", n.id, idx));
            }
            if idx > 0 && n.kind == NodeKind::Depot {
                return invalid(format!("second depot record {}", n.id));
            }
            if n.tw_open < 0.0 || n.tw_open > n.tw_close + EPS || n.tw_close > horizon + EPS {
                return invalid(format!(
                    "node {}: time window [{}, {}] outside [0, {}]",
                    n.id, n.tw_open, n.tw_close, horizon
                ));
            }
            if n.demand < 0.0 || (n.kind != NodeKind::Customer && n.demand != 0.0) {
                return invalid(format!("node {}: bad demand {}", n.id, n.demand));
            }
            if n.service_time < 0.0 {
                return invalid(format!("node {}: negative service time", n.id));
            }
            match n.kind {
                NodeKind::ChargerSlot => match n.slot_capacity {
                    Some(b) if b >= 1 => {}
                    _ => return invalid(format!("slot {}: capacity must be >= 1", n.id)),
                },
                _ if n.slot_capacity.is_some() => {
                    return invalid(format!("node {}: capacity given for non-slot", n.id))
                }
                _ => {}
            }
        }
        let slots: Vec<&Node> = self.slots().collect();
        for (a_idx, a) in slots.iter().enumerate() {
            for b in &slots[a_idx + 1..] {
                if a.charger_location.is_some()
                    && a.charger_location == b.charger_location
                    && a.tw_open < b.tw_close - EPS
                    && b.tw_open < a.tw_close - EPS
                {
                    return invalid(format!(
                        "overlapping slots {} and {} at charger {}",
                        a.id,
                        b.id,
                        a.charger_location.unwrap()
                    ));
                }
            }
        }
        Ok(())
    }

    /// Customers that no route with at most two slot visits can serve.
    pub fn unreachable_customers(&self) -> Vec<usize> {
        let end = self.end_depot();
        let slots: Vec<usize> = self.slots().map(|s| s.id).collect();
        self.customers()
            .map(|c| c.id)
            .filter(|&c| {
                let mut candidates = vec![vec![0, c, end]];
                for &f in &slots {
                    candidates.push(vec![0, f, c, end]);
                    candidates.push(vec![0, c, f, end]);
                    for &f2 in &slots {
                        if f2 != f {
                            candidates.push(vec![0, f, c, f2, end]);
                            candidates.push(vec![0, f, f2, c, end]);
                            candidates.push(vec![0, c, f, f2, end]);
                        }
                    }
                }
                !candidates.iter().any(|p| check_path(self, p).is_ok())
            })
            .collect()
    }

    /// Copy with every slot capacity raised to `cap`.
    pub fn with_slot_capacity(&self, cap: u32) -> Instance {
        let mut out = self.clone();
        for n in &mut out.nodes {
            if n.is_slot() {
                n.slot_capacity = Some(cap);
            }
        }
        out
    }
}
