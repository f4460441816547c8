//! 2-path cut separation on the LP support graph.

use serde::{Deserialize, Serialize};

use crate::clock::{Clock, LABEL_WORK};
use crate::graph::RoutingGraph;
use crate::labeling::{solve_pricing, PricingRequest};
use crate::master::{Cut, LpSolution, Rmp};
use crate::nodeset::NodeSet;

pub const MAX_SUBSET: usize = 10;
pub const MAX_SUBSETS_EXAMINED: usize = 200_000;
const FLOW_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutReason {
    /// Total demand exceeds the vehicle capacity.
    Capacity,
    /// No single feasible route visits every customer of the subset.
    NoSingleRoute,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutLog {
    pub customers: Vec<usize>,
    pub reason: CutReason,
    pub inflow: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Separation {
    pub cuts: Vec<CutLog>,
    pub examined: usize,
    pub truncated: bool,
}

/// Arc flows `x_ij` of the LP solution, indexed by arc id.
pub fn arc_flows(lp: &LpSolution, rmp: &Rmp, graph: &RoutingGraph) -> Vec<f64> {
    let mut flow = vec![0.0; graph.arcs.len()];
    for (col, &l) in rmp.columns.iter().zip(&lp.lambda) {
        if l <= FLOW_TOL || col.is_artificial() {
            continue;
        }
        for w in col.route.windows(2) {
            if let Some(a) = graph.arc_id(w[0], w[1]) {
                flow[a] += l;
            }
        }
    }
    flow
}

/// True if one feasible route can serve all customers in `set`.
pub fn single_route_serves(graph: &RoutingGraph, set: &NodeSet, clock: &Clock) -> bool {
    let end = graph.end_depot();
    let mut keep = *set;
    keep.insert(0);
    keep.insert(end);
    for i in 0..graph.num_nodes() {
        if graph.is_slot(i) {
            keep.insert(i);
        }
    }
    let view = graph.full_view().restrict_nodes(graph, &keep);
    let costs: Vec<f64> = graph
        .arcs
        .iter()
        .map(|a| if set.contains(a.to) { -1.0 } else { 0.0 })
        .collect();
    let mut req = PricingRequest::new(graph, &view, &costs);
    req.completion_bounds = false;
    req.threshold = -(set.len() as f64) + 0.5;
    let r = solve_pricing(&req);
    clock.tick(r.stats.created * LABEL_WORK);
    !r.columns.is_empty()
}

/// Enumerates connected customer subsets of the support graph (each once,
/// rooted at its smallest id) and returns violated 2-path cuts.
pub fn separate_two_path(lp: &LpSolution, rmp: &Rmp, graph: &RoutingGraph, clock: &Clock) -> Separation {
    let n = graph.num_nodes();
    let flow = arc_flows(lp, rmp, graph);
    let mut inflow_from = vec![Vec::<(usize, f64)>::new(); n];
    let mut adj = vec![NodeSet::new(); n];
    for (a, &f) in flow.iter().enumerate() {
        if f <= FLOW_TOL {
            continue;
        }
        let arc = &graph.arcs[a];
        inflow_from[arc.to].push((arc.from, f));
        if graph.is_customer(arc.from) && graph.is_customer(arc.to) {
            adj[arc.from].insert(arc.to);
            adj[arc.to].insert(arc.from);
        }
    }
    let support: Vec<usize> = (0..n)
        .filter(|&i| graph.is_customer(i) && !inflow_from[i].is_empty())
        .collect();

    let mut out = Separation::default();
    let mut unserviceable: Vec<NodeSet> = Vec::new();
    let existing: Vec<NodeSet> = rmp.cuts.iter().map(Cut::set).collect();
    let mut check = |set: &NodeSet, out: &mut Separation| {
        if set.len() < 2 {
            return;
        }
        let inflow: f64 = set
            .iter()
            .flat_map(|j| inflow_from[j].iter())
            .filter(|(i, _)| !set.contains(*i))
            .map(|(_, f)| f)
            .sum();
        if inflow >= 2.0 - FLOW_TOL || existing.contains(set) {
            return;
        }
        let demand: f64 = set.iter().map(|c| graph.nodes[c].demand).sum();
        let reason = if demand > graph.capacity + 1e-9 {
            Some(CutReason::Capacity)
        } else if unserviceable.iter().any(|u| u.is_subset(set)) || !single_route_serves(graph, set, clock) {
            unserviceable.push(*set);
            Some(CutReason::NoSingleRoute)
        } else {
            None
        };
        if let Some(reason) = reason {
            out.cuts.push(CutLog {
                customers: set.iter().collect(),
                reason,
                inflow,
            });
        }
    };

    // ESU enumeration of connected induced subgraphs
    struct Frame {
        sub: NodeSet,
        ext: Vec<usize>,
    }
    'roots: for &v in &support {
        let mut stack = vec![Frame {
            sub: NodeSet::from_iter([v]),
            ext: adj[v].iter().filter(|&u| u > v).collect(),
        }];
        out.examined += 1;
        check(&stack[0].sub, &mut out);
        while let Some(frame) = stack.last_mut() {
            let Some(w) = frame.ext.pop() else {
                stack.pop();
                continue;
            };
            let sub = frame.sub;
            let mut grown = sub;
            grown.insert(w);
            if out.examined >= MAX_SUBSETS_EXAMINED {
                out.truncated = true;
                break 'roots;
            }
            out.examined += 1;
            check(&grown, &mut out);
            if grown.len() >= MAX_SUBSET {
                continue;
            }
            let near_sub = sub.iter().fold(sub, |acc, s| acc.union(&adj[s]));
            let mut ext = frame.ext.clone();
            for u in adj[w].iter() {
                if u > v && !near_sub.contains(u) && !ext.contains(&u) {
                    ext.push(u);
                }
            }
            stack.push(Frame { sub: grown, ext });
        }
    }
    out
}
