//! Routing digraph with preprocessing, ng-neighbourhoods and arc views.
//!
//! Node ids follow the instance; the end depot is `n + 1 = inst.nodes.len()`.
//! Arc times include the service time of the tail node.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Instance, NodeKind, EPS};
use crate::nodeset::{NodeSet, MAX_NODES};

pub type ArcId = usize;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub dist: f64,
    pub time: f64,
    pub energy: f64,
    pub cost: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BranchDecision {
    FleetFloor(usize),
    FleetCeil(usize),
    ArcForce(usize, usize),
    ArcForbid(usize, usize),
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("instance has {0} route nodes, at most {MAX_NODES} supported")]
    TooLarge(usize),
    #[error("base instance stations must be expanded into slots first")]
    UnexpandedStations,
    #[error("inconsistent branching decisions: {0}")]
    Inconsistent(String),
}

/// Per-node data the labeling needs, copied out of the instance.
#[derive(Clone, Debug)]
pub struct NodeData {
    pub kind: NodeKind,
    pub demand: f64,
    pub tw_open: f64,
    pub tw_close: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug)]
pub struct RoutingGraph {
    pub nodes: Vec<NodeData>,
    pub arcs: Vec<Arc>,
    out: Vec<Vec<ArcId>>,
    inc: Vec<Vec<ArcId>>,
    lookup: Vec<Option<u32>>,
    /// Customers and slots sorted by distance (ties by id), per node.
    neighbours: Vec<Vec<usize>>,
    pub ng_sets: Vec<NodeSet>,
    pub ng_size: usize,
    pub avg_arc_cost: f64,
    /// All-pairs shortest travel time over retained arcs.
    pub min_time: Vec<Vec<f64>>,
    /// Least energy from a node to the end depot or any slot.
    pub min_energy_to_refuel: Vec<f64>,
    pub capacity: f64,
    pub battery: f64,
    pub recharge_rate: f64,
    pub consumption_rate: f64,
    /// Time to recharge the whole battery.
    pub full_recharge_time: f64,
}

impl RoutingGraph {
    pub fn build(inst: &Instance, ng_size: usize) -> Result<Self, GraphError> {
        let n = inst.num_route_nodes();
        if n > MAX_NODES {
            return Err(GraphError::TooLarge(n));
        }
        if inst.stations().next().is_some() {
            return Err(GraphError::UnexpandedStations);
        }
        let end = inst.end_depot();
        let nodes: Vec<NodeData> = (0..n)
            .map(|i| {
                let nd = inst.node(i);
                NodeData {
                    kind: nd.kind,
                    demand: nd.demand,
                    tw_open: nd.tw_open,
                    tw_close: nd.tw_close,
                    x: nd.x,
                    y: nd.y,
                }
            })
            .collect();
        let mut arcs = Vec::new();
        for i in 0..n {
            if i == end {
                continue;
            }
            let tail = inst.node(i);
            for j in 0..n {
                if j == i || j == 0 || (i == 0 && j == end) {
                    continue;
                }
                let head = inst.node(j);
                let dist = inst.distance(i, j);
                let energy = inst.consumption_rate * dist;
                if energy > inst.battery + EPS {
                    continue;
                }
                let time = dist + tail.service_time;
                if tail.tw_open.max(0.0) + time > head.tw_close + EPS {
                    continue;
                }
                arcs.push(Arc {
                    from: i,
                    to: j,
                    dist,
                    time,
                    energy,
                    cost: dist,
                });
            }
        }
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        let mut lookup = vec![None; n * n];
        for (id, a) in arcs.iter().enumerate() {
            out[a.from].push(id);
            inc[a.to].push(id);
            lookup[a.from * n + a.to] = Some(id as u32);
        }
        let avg_arc_cost = if arcs.is_empty() {
            0.0
        } else {
            arcs.iter().map(|a| a.cost).sum::<f64>() / arcs.len() as f64
        };

        let mut min_time = vec![vec![f64::INFINITY; n]; n];
        for (i, row) in min_time.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for a in &arcs {
            min_time[a.from][a.to] = min_time[a.from][a.to].min(a.time);
        }
        for k in 0..n {
            for i in 0..n {
                let ik = min_time[i][k];
                if ik.is_infinite() {
                    continue;
                }
                for j in 0..n {
                    let cand = ik + min_time[k][j];
                    if cand < min_time[i][j] {
                        min_time[i][j] = cand;
                    }
                }
            }
        }

        let mut g = RoutingGraph {
            nodes,
            arcs,
            out,
            inc,
            lookup,
            neighbours: Vec::new(),
            ng_sets: Vec::new(),
            ng_size,
            avg_arc_cost,
            min_time,
            min_energy_to_refuel: Vec::new(),
            capacity: inst.capacity,
            battery: inst.battery,
            recharge_rate: inst.recharge_rate,
            consumption_rate: inst.consumption_rate,
            full_recharge_time: inst.full_recharge_time(),
        };
        let candidates: Vec<usize> = (1..inst.nodes.len())
            .filter(|&i| matches!(g.nodes[i].kind, NodeKind::Customer | NodeKind::ChargerSlot))
            .collect();
        g.neighbours = (0..n)
            .map(|i| {
                if !candidates.contains(&i) {
                    return Vec::new();
                }
                let mut others: Vec<(f64, usize)> = candidates
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| (inst.distance(i, j), j))
                    .collect();
                others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                others.into_iter().map(|(_, j)| j).collect()
            })
            .collect();
        g.ng_sets = g.ng_sets_of_size(ng_size);
        g.min_energy_to_refuel = g.energy_to_refuel();
        Ok(g)
    }

    /// Reverse Dijkstra on arc energy from the end depot and all slots.
    fn energy_to_refuel(&self) -> Vec<f64> {
        let n = self.num_nodes();
        let mut dist = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        for i in 0..n {
            if i == n - 1 || self.nodes[i].kind == NodeKind::ChargerSlot {
                dist[i] = 0.0;
            }
        }
        loop {
            let next = (0..n)
                .filter(|&i| !done[i] && dist[i].is_finite())
                .min_by(|&a, &b| dist[a].total_cmp(&dist[b]));
            let Some(j) = next else { break };
            done[j] = true;
            for &a in &self.inc[j] {
                let arc = &self.arcs[a];
                let cand = dist[j] + arc.energy;
                if cand < dist[arc.from] {
                    dist[arc.from] = cand;
                }
            }
        }
        dist
    }

    /// Node itself plus its `size` nearest customers or slots.
    pub fn ng_sets_of_size(&self, size: usize) -> Vec<NodeSet> {
        self.neighbours
            .iter()
            .enumerate()
            .map(|(i, list)| {
                let mut set = NodeSet::from_iter(list.iter().copied().take(size));
                set.insert(i);
                set
            })
            .collect()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn end_depot(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn outgoing(&self, i: usize) -> &[ArcId] {
        &self.out[i]
    }

    pub fn incoming(&self, j: usize) -> &[ArcId] {
        &self.inc[j]
    }

    pub fn arc_id(&self, i: usize, j: usize) -> Option<ArcId> {
        let n = self.num_nodes();
        if i >= n || j >= n {
            return None;
        }
        self.lookup[i * n + j].map(|a| a as usize)
    }

    pub fn is_customer(&self, i: usize) -> bool {
        self.nodes[i].kind == NodeKind::Customer
    }

    pub fn is_slot(&self, i: usize) -> bool {
        self.nodes[i].kind == NodeKind::ChargerSlot
    }

    /// Recharge time for the energy spent on an arc.
    pub fn recharge_time(&self, arc: &Arc) -> f64 {
        arc.energy / self.recharge_rate
    }

    /// Arc ids of a node sequence, or `None` if an arc is missing.
    pub fn route_arcs(&self, route: &[usize]) -> Option<Vec<ArcId>> {
        route.windows(2).map(|w| self.arc_id(w[0], w[1])).collect()
    }

    pub fn full_view(&self) -> GraphView {
        GraphView {
            active: vec![true; self.arcs.len()],
        }
    }

    /// Heuristic pricing graph: every customer or slot keeps its five
    /// cheapest arcs to customers and two cheapest arcs to slots; depot
    /// arcs and arcs into the end depot are all kept.
    pub fn reduce(&self, base: &GraphView, costs: &[f64]) -> GraphView {
        const CUSTOMER_ARCS: usize = 5;
        const SLOT_ARCS: usize = 2;
        let mut active = vec![false; self.arcs.len()];
        let end = self.end_depot();
        for i in 0..self.num_nodes() {
            let arcs: Vec<ArcId> = self.out[i].iter().copied().filter(|&a| base.active[a]).collect();
            if i == 0 {
                for a in arcs {
                    active[a] = true;
                }
                continue;
            }
            let mut to_customers = Vec::new();
            let mut to_slots = Vec::new();
            for a in arcs {
                let j = self.arcs[a].to;
                if j == end {
                    active[a] = true;
                } else if self.is_customer(j) {
                    to_customers.push(a);
                } else if self.is_slot(j) {
                    to_slots.push(a);
                }
            }
            for (mut group, keep) in [(to_customers, CUSTOMER_ARCS), (to_slots, SLOT_ARCS)] {
                group.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
                for &a in group.iter().take(keep) {
                    active[a] = true;
                }
            }
        }
        GraphView { active }
    }

    /// View enforcing arc branching decisions; fleet decisions are ignored.
    /// Forcing `(i, j)` removes the other arcs leaving `i` and entering `j`,
    /// but only at customer endpoints: depots and charger slots may be
    /// passed by several routes.
    pub fn apply_branching(&self, decisions: &[BranchDecision]) -> Result<GraphView, GraphError> {
        let mut forced_out: Vec<Option<usize>> = vec![None; self.num_nodes()];
        let mut forced_in: Vec<Option<usize>> = vec![None; self.num_nodes()];
        let mut forbidden = Vec::new();
        for d in decisions {
            match *d {
                BranchDecision::ArcForce(i, j) => {
                    if self.is_customer(i) {
                        if forced_out[i].is_some_and(|k| k != j) {
                            return Err(GraphError::Inconsistent(format!("two forced arcs leave {i}")));
                        }
                        forced_out[i] = Some(j);
                    }
                    if self.is_customer(j) {
                        if forced_in[j].is_some_and(|k| k != i) {
                            return Err(GraphError::Inconsistent(format!("two forced arcs enter {j}")));
                        }
                        forced_in[j] = Some(i);
                    }
                }
                BranchDecision::ArcForbid(i, j) => forbidden.push((i, j)),
                _ => {}
            }
        }
        for &(i, j) in &forbidden {
            if decisions.contains(&BranchDecision::ArcForce(i, j)) {
                return Err(GraphError::Inconsistent(format!(
                    "arc ({i},{j}) both forced and forbidden"
                )));
            }
        }
        let mut view = self.full_view();
        for (id, a) in self.arcs.iter().enumerate() {
            let blocked = forbidden.contains(&(a.from, a.to))
                || forced_out[a.from].is_some_and(|j| j != a.to)
                || forced_in[a.to].is_some_and(|i| i != a.from);
            if blocked {
                view.active[id] = false;
            }
        }
        Ok(view)
    }

    /// Edge list as CSV: `from,to,dist,time,energy,cost`.
    pub fn to_csv(&self, view: Option<&GraphView>) -> String {
        let mut s = String::from("from,to,dist,time,energy,cost\n");
        for (id, a) in self.arcs.iter().enumerate() {
            if view.is_some_and(|v| !v.active[id]) {
                continue;
            }
            writeln!(
                s,
                "{},{},{:.2},{:.2},{:.4},{:.2}",
                a.from, a.to, a.dist, a.time, a.energy, a.cost
            )
            .unwrap();
        }
        s
    }
}

/// Arc subset overlay on a [`RoutingGraph`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphView {
    pub active: Vec<bool>,
}

impl GraphView {
    pub fn contains(&self, arc: ArcId) -> bool {
        self.active[arc]
    }

    pub fn intersect(&self, other: &GraphView) -> GraphView {
        GraphView {
            active: self.active.iter().zip(&other.active).map(|(a, b)| *a && *b).collect(),
        }
    }

    /// Keeps only arcs whose endpoints are both in `nodes`.
    pub fn restrict_nodes(&self, graph: &RoutingGraph, nodes: &NodeSet) -> GraphView {
        GraphView {
            active: graph
                .arcs
                .iter()
                .zip(&self.active)
                .map(|(a, &on)| on && nodes.contains(a.from) && nodes.contains(a.to))
                .collect(),
        }
    }

    pub fn count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// True if every arc of the route is active.
    pub fn admits(&self, graph: &RoutingGraph, route: &[usize]) -> bool {
        route
            .windows(2)
            .all(|w| graph.arc_id(w[0], w[1]).is_some_and(|a| self.active[a]))
    }
}
