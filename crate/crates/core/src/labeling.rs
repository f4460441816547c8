//! Mono-directional labeling for the elementary shortest path problem with
//! resource constraints, charging slots and at most two recharges.
//!
//! Times are in instance time units; `rtmax` is the recharge time that could
//! be spent at the last visited slot (the energy deficit divided by `g`).

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use crate::graph::{Arc, GraphView, RoutingGraph};
use crate::instance::{NodeKind, EPS};
use crate::nodeset::NodeSet;

pub const MAX_RECHARGES: u8 = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct Label {
    pub node: usize,
    pub cost: f64,
    pub load: f64,
    pub rch: u8,
    pub tmin: f64,
    pub tmax: f64,
    pub rtmax: f64,
    /// Visited nodes (elementary) or ng-memory.
    pub memory: NodeSet,
    /// Customers ruled out by load or time.
    pub unreachable: NodeSet,
    pub parent: Option<usize>,
}

impl Label {
    pub fn depot(graph: &RoutingGraph) -> Label {
        let open = graph.nodes[0].tw_open;
        Label {
            node: 0,
            cost: 0.0,
            load: 0.0,
            rch: 0,
            tmin: open,
            tmax: open,
            rtmax: 0.0,
            memory: NodeSet::from_iter([0]),
            unreachable: NodeSet::new(),
            parent: None,
        }
    }

    pub fn forbidden(&self) -> NodeSet {
        self.memory.union(&self.unreachable)
    }
}

/// Extends `label` along `arc`. `ng` selects ng-memory update; `None` keeps
/// the full visited set. Returns `None` if the extension is infeasible.
pub fn extend(graph: &RoutingGraph, label: &Label, arc: &Arc, arc_cost: f64, ng: Option<&[NodeSet]>) -> Option<Label> {
    debug_assert_eq!(label.node, arc.from);
    let (i, j) = (arc.from, arc.to);
    if label.forbidden().contains(j) {
        return None;
    }
    let ni = &graph.nodes[i];
    let nj = &graph.nodes[j];
    let t = arc.time;
    let h = graph.recharge_time(arc);
    let full = graph.full_recharge_time;
    let i_slot = ni.kind == NodeKind::ChargerSlot;

    let load = label.load + nj.demand;
    let rch = label.rch + u8::from(nj.kind == NodeKind::ChargerSlot);

    let slack = if i_slot {
        (nj.tw_open - label.tmin - t)
            .min(label.rtmax.min(ni.tw_close - label.tmin))
            .max(0.0)
    } else {
        (nj.tw_open - label.tmin - t).min(label.tmax - label.tmin).max(0.0)
    };
    let extra = (label.rtmax - slack + h - full).max(0.0).max(0.0);
    let arrive = nj.tw_open.max(label.tmin + t);
    let tmin = if label.rch == 0 { arrive } else { arrive + extra };
    let tmax = if i_slot {
        nj.tw_close
            .min(nj.tw_open.max((label.tmin + label.rtmax + t).min(ni.tw_close + t)))
    } else {
        nj.tw_close.min(nj.tw_open.max(label.tmax + t))
    };
    let rtmax = if label.rch == 0 {
        label.rtmax + h
    } else {
        full.min((label.rtmax - slack).max(0.0) + h)
    };

    if load > graph.capacity + EPS
        || rch > MAX_RECHARGES
        || tmin > nj.tw_close + EPS
        || tmin > tmax + EPS
        || rtmax > full + EPS
    {
        return None;
    }

    let memory = if j == graph.end_depot() {
        label.memory
    } else {
        let mut m = match ng {
            Some(sets) => label.memory.intersection(&sets[j]),
            None => label.memory,
        };
        m.insert(j);
        m
    };
    Some(Label {
        node: j,
        cost: label.cost + arc_cost,
        load,
        rch,
        tmin,
        tmax,
        rtmax,
        memory,
        unreachable: label.unreachable,
        parent: None,
    })
}

/// True if `a` dominates `b` (both at the same node).
pub fn dominates(a: &Label, b: &Label) -> bool {
    debug_assert_eq!(a.node, b.node);
    a.cost <= b.cost
        && a.load <= b.load
        && a.rch <= b.rch
        && a.tmin <= b.tmin
        && a.rtmax - (a.tmax - a.tmin) <= b.rtmax - (b.tmax - b.tmin)
        && a.rtmax - (b.tmin - a.tmin) <= b.rtmax
        && a.forbidden().is_subset(&b.forbidden())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PricingMode {
    Exact,
    ReducedGraphHeuristic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NgMode {
    Off,
    On(usize),
}

#[derive(Clone, Debug)]
pub struct PricingRequest<'a> {
    pub graph: &'a RoutingGraph,
    pub view: &'a GraphView,
    /// Reduced cost per arc id.
    pub costs: &'a [f64],
    pub mode: PricingMode,
    pub ng: NgMode,
    pub max_columns: usize,
    pub completion_bounds: bool,
    pub resource_bounds: bool,
    pub dominance: bool,
    /// Only routes with reduced cost strictly below this are returned.
    pub threshold: f64,
    pub max_labels: usize,
}

impl<'a> PricingRequest<'a> {
    pub fn new(graph: &'a RoutingGraph, view: &'a GraphView, costs: &'a [f64]) -> Self {
        PricingRequest {
            graph,
            view,
            costs,
            mode: PricingMode::Exact,
            ng: NgMode::Off,
            max_columns: 1,
            completion_bounds: true,
            resource_bounds: true,
            dominance: true,
            threshold: -1e-6,
            max_labels: 2_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PricedRoute {
    pub route: Vec<usize>,
    pub reduced_cost: f64,
    pub elementary: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelStats {
    pub created: u64,
    pub processed: u64,
    pub dominated: u64,
    pub bounded: u64,
}

impl LabelStats {
    pub fn add(&mut self, other: &LabelStats) {
        self.created += other.created;
        self.processed += other.processed;
        self.dominated += other.dominated;
        self.bounded += other.bounded;
    }
}

#[derive(Clone, Debug, Default)]
pub struct PricingResult {
    /// Best first; ties broken by node sequence.
    pub columns: Vec<PricedRoute>,
    pub stats: LabelStats,
    /// The label limit was hit, so the search was not exhaustive.
    pub truncated: bool,
    /// ng sizes tried (`None` = elementary), in order.
    pub ng_history: Vec<Option<usize>>,
}

impl PricingResult {
    pub fn best(&self) -> Option<&PricedRoute> {
        self.columns.first()
    }
}

#[derive(PartialEq)]
struct Key {
    tmin: f64,
    cost: f64,
    id: usize,
}

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed for a min-heap
        other
            .tmin
            .total_cmp(&self.tmin)
            .then(other.cost.total_cmp(&self.cost))
            .then(other.id.cmp(&self.id))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lower bounds on the reduced cost of completing a partial path.
struct CompletionBound {
    min_in_cost: Vec<f64>,
    min_in_time: Vec<f64>,
    end_cost: f64,
    end_time: f64,
    /// Nodes with negative incoming cost, by decreasing value per load unit.
    by_load: Vec<usize>,
    by_time: Vec<usize>,
    demand: Vec<f64>,
}

impl CompletionBound {
    fn new(graph: &RoutingGraph, view: &GraphView, costs: &[f64]) -> Self {
        let n = graph.num_nodes();
        let end = graph.end_depot();
        let mut min_in_cost = vec![f64::INFINITY; n];
        let mut min_in_time = vec![f64::INFINITY; n];
        for (id, a) in graph.arcs.iter().enumerate() {
            if view.contains(id) {
                min_in_cost[a.to] = min_in_cost[a.to].min(costs[id]);
                min_in_time[a.to] = min_in_time[a.to].min(a.time);
            }
        }
        let demand: Vec<f64> = graph.nodes.iter().map(|d| d.demand).collect();
        let items: Vec<usize> = (1..end).filter(|&k| min_in_cost[k] < 0.0).collect();
        let ratio_sort = |weights: &[f64]| {
            let mut v = items.clone();
            v.sort_by(|&a, &b| {
                let ra = -min_in_cost[a] / weights[a];
                let rb = -min_in_cost[b] / weights[b];
                rb.total_cmp(&ra).then(a.cmp(&b))
            });
            v
        };
        CompletionBound {
            by_load: ratio_sort(&demand),
            by_time: ratio_sort(&min_in_time),
            end_cost: min_in_cost[end],
            end_time: min_in_time[end],
            min_in_cost,
            min_in_time,
            demand,
        }
    }

    /// Fractional knapsack over unvisited items; `repeat` lets items be taken
    /// any number of times.
    fn knapsack(&self, order: &[usize], weights: &[f64], capacity: f64, skip: &NodeSet, repeat: bool) -> f64 {
        let mut left = capacity.max(0.0);
        let mut gain = 0.0;
        for &k in order {
            if skip.contains(k) {
                continue;
            }
            let value = -self.min_in_cost[k];
            let w = weights[k];
            if w <= 0.0 {
                if repeat {
                    return f64::INFINITY;
                }
                gain += value;
                continue;
            }
            if repeat {
                return gain + value / w * left;
            }
            if w <= left {
                gain += value;
                left -= w;
            } else {
                gain += value * left / w;
                break;
            }
        }
        gain
    }

    fn lower_bound(&self, graph: &RoutingGraph, label: &Label, repeat: bool) -> f64 {
        let skip = if repeat { NodeSet::new() } else { label.forbidden() };
        let by_load = self.knapsack(&self.by_load, &self.demand, graph.capacity - label.load, &skip, repeat);
        let time_cap = graph.nodes[graph.end_depot()].tw_close - label.tmin - self.end_time;
        let by_time = self.knapsack(&self.by_time, &self.min_in_time, time_cap, &skip, repeat);
        self.end_cost - by_load.min(by_time)
    }
}

/// Runs the labeling algorithm on the request.
pub fn solve_pricing(req: &PricingRequest) -> PricingResult {
    assert!(req.max_columns >= 1);
    let graph = req.graph;
    let end = graph.end_depot();
    let reduced;
    let view = match req.mode {
        PricingMode::Exact => req.view,
        PricingMode::ReducedGraphHeuristic => {
            reduced = graph.reduce(req.view, req.costs);
            &reduced
        }
    };
    let ng_sets = match req.ng {
        NgMode::On(size) => Some(graph.ng_sets_of_size(size)),
        NgMode::Off => None,
    };
    let ng = ng_sets.as_deref();
    let bound = req
        .completion_bounds
        .then(|| CompletionBound::new(graph, view, req.costs));
    let customers: Vec<usize> = (1..end).filter(|&c| graph.is_customer(c)).collect();
    let end_close = graph.nodes[end].tw_close;

    let mut result = PricingResult {
        ng_history: vec![match req.ng {
            NgMode::On(s) => Some(s),
            NgMode::Off => None,
        }],
        ..Default::default()
    };
    let mut arena: Vec<Label> = vec![Label::depot(graph)];
    let mut alive = vec![true];
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); graph.num_nodes()];
    let mut heap = BinaryHeap::new();
    heap.push(Key {
        tmin: arena[0].tmin,
        cost: 0.0,
        id: 0,
    });
    let mut found: Vec<PricedRoute> = Vec::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut best_found = f64::INFINITY;

    while let Some(Key { id, .. }) = heap.pop() {
        if !alive[id] {
            continue;
        }
        if arena.len() > req.max_labels {
            result.truncated = true;
            break;
        }
        result.stats.processed += 1;
        let label = arena[id].clone();
        for &a in graph.outgoing(label.node) {
            if !view.contains(a) {
                continue;
            }
            let arc = &graph.arcs[a];
            let Some(mut next) = extend(graph, &label, arc, req.costs[a], ng) else {
                continue;
            };
            next.parent = Some(id);
            result.stats.created += 1;
            let j = arc.to;
            if j == end {
                if next.cost < req.threshold {
                    let route = path_of(&arena, id, end);
                    if seen.insert(route.clone()) {
                        best_found = best_found.min(next.cost);
                        found.push(PricedRoute {
                            elementary: is_elementary(&route),
                            route,
                            reduced_cost: next.cost,
                        });
                        if found.len() >= 4 * req.max_columns + 64 {
                            sort_columns(&mut found);
                            found.truncate(req.max_columns);
                        }
                    }
                }
                continue;
            }
            if req.resource_bounds {
                let late = next.tmin + graph.min_time[j][end] > end_close + EPS;
                let flat = next.rch == 0
                    && next.rtmax + graph.min_energy_to_refuel[j] / graph.recharge_rate
                        > graph.full_recharge_time + EPS;
                if late || flat {
                    result.stats.bounded += 1;
                    continue;
                }
            }
            let forbidden = next.forbidden();
            for &c in &customers {
                if !forbidden.contains(c)
                    && (next.load + graph.nodes[c].demand > graph.capacity + EPS
                        || next.tmin + graph.min_time[j][c] > graph.nodes[c].tw_close + EPS)
                {
                    next.unreachable.insert(c);
                }
            }
            if let Some(cb) = &bound {
                let limit = req.threshold.min(best_found);
                if next.cost + cb.lower_bound(graph, &next, ng.is_some()) > limit + 1e-9 {
                    result.stats.bounded += 1;
                    continue;
                }
            }
            if req.dominance {
                if buckets[j].iter().any(|&b| dominates(&arena[b], &next)) {
                    result.stats.dominated += 1;
                    continue;
                }
                let mut kept = Vec::with_capacity(buckets[j].len() + 1);
                for &b in &buckets[j] {
                    if dominates(&next, &arena[b]) {
                        alive[b] = false;
                        result.stats.dominated += 1;
                    } else {
                        kept.push(b);
                    }
                }
                buckets[j] = kept;
            }
            let nid = arena.len();
            heap.push(Key {
                tmin: next.tmin,
                cost: next.cost,
                id: nid,
            });
            arena.push(next);
            alive.push(true);
            if req.dominance {
                buckets[j].push(nid);
            }
        }
    }
    sort_columns(&mut found);
    found.truncate(req.max_columns);
    result.columns = found;
    result
}

fn path_of(arena: &[Label], mut id: usize, last: usize) -> Vec<usize> {
    let mut route = vec![last];
    loop {
        route.push(arena[id].node);
        match arena[id].parent {
            Some(p) => id = p,
            None => break,
        }
    }
    route.reverse();
    route
}

fn sort_columns(cols: &mut [PricedRoute]) {
    cols.sort_by(|a, b| {
        a.reduced_cost
            .total_cmp(&b.reduced_cost)
            .then_with(|| a.route.cmp(&b.route))
    });
}

pub fn is_elementary(route: &[usize]) -> bool {
    let set = NodeSet::from_iter(route.iter().copied());
    set.len() == route.len()
}

/// Exact pricing with ng escalation: while the best route is a negative
/// non-elementary one, the ng size grows by 5 up to `start_size + 15`, then
/// the problem is solved without the relaxation.
pub fn ng_escalation_loop(req: &PricingRequest, start_size: usize) -> PricingResult {
    const STEP: usize = 5;
    const MAX_STEPS: usize = 3;
    let mut stats = LabelStats::default();
    let mut history = Vec::new();
    let mut sizes: Vec<NgMode> = if req.ng == NgMode::Off {
        vec![]
    } else {
        (0..=MAX_STEPS).map(|k| NgMode::On(start_size + k * STEP)).collect()
    };
    sizes.push(NgMode::Off);
    let mut last = PricingResult::default();
    for ng in sizes {
        let r = solve_pricing(&PricingRequest { ng, ..req.clone() });
        stats.add(&r.stats);
        history.extend(r.ng_history.iter().copied());
        let done = r.best().is_none_or(|c| c.elementary);
        last = r;
        if done {
            break;
        }
    }
    last.stats = stats;
    last.ng_history = history;
    last
}
