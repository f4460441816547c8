//! Restricted master problem: set covering over routes with slot packing,
//! fleet and 2-path cut rows, plus a restricted integer solver over the pool.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::graph::{GraphView, RoutingGraph};
use crate::instance::{round2, Instance};
use crate::lp::{self, Basis, LpProblem, LpStatus};
use crate::nodeset::NodeSet;

/// Scale of the artificial column cost relative to the longest arc.
pub const BIG_M_FACTOR: f64 = 1e5;
const INF: f64 = f64::INFINITY;
const INT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    Pricing,
    Pfih,
    Artificial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    /// Node ids from 0 to the end depot; a single customer id for
    /// artificial columns.
    pub route: Vec<usize>,
    pub cost: f64,
    /// Visit counts of customers and slots, by node id.
    pub visits: Vec<(usize, u32)>,
    pub elementary: bool,
    pub origin: Origin,
}

impl Column {
    /// Builds a route column, or `None` if an arc is missing in `graph`.
    pub fn from_route(graph: &RoutingGraph, route: &[usize], origin: Origin) -> Option<Column> {
        let arcs = graph.route_arcs(route)?;
        let cost = round2(arcs.iter().map(|&a| graph.arcs[a].cost).sum());
        let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
        for &i in &route[1..route.len() - 1] {
            *counts.entry(i).or_default() += 1;
        }
        Some(Column {
            route: route.to_vec(),
            cost,
            elementary: counts.values().all(|&c| c == 1),
            visits: counts.into_iter().collect(),
            origin,
        })
    }

    pub fn artificial(customer: usize, big_m: f64) -> Column {
        Column {
            route: vec![customer],
            cost: big_m,
            visits: vec![(customer, 1)],
            elementary: true,
            origin: Origin::Artificial,
        }
    }

    pub fn is_artificial(&self) -> bool {
        self.origin == Origin::Artificial
    }

    pub fn visits_of(&self, node: usize) -> u32 {
        self.visits
            .binary_search_by_key(&node, |&(n, _)| n)
            .map(|k| self.visits[k].1)
            .unwrap_or(0)
    }

    /// Number of route arcs entering `set` from outside.
    pub fn entering(&self, set: &NodeSet) -> u32 {
        if self.is_artificial() {
            return 0;
        }
        self.route
            .windows(2)
            .filter(|w| !set.contains(w[0]) && set.contains(w[1]))
            .count() as u32
    }
}

/// A 2-path cut: at least two vehicles must enter the customer subset.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cut {
    pub customers: Vec<usize>,
}

impl Cut {
    pub fn set(&self) -> NodeSet {
        NodeSet::from_iter(self.customers.iter().copied())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Duals {
    /// Per customer, in [`Rmp::customers`] order.
    pub cover: Vec<f64>,
    /// Per slot, in [`Rmp::slots`] order.
    pub pack: Vec<f64>,
    pub fleet: f64,
    pub cuts: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    /// Per pool column.
    pub lambda: Vec<f64>,
    pub duals: Duals,
    pub iterations: u64,
}

impl LpSolution {
    pub fn uses_artificial(&self, rmp: &Rmp) -> bool {
        self.lambda
            .iter()
            .zip(&rmp.columns)
            .any(|(&l, c)| c.is_artificial() && l > INT_TOL)
    }

    pub fn is_integral(&self) -> bool {
        self.lambda.iter().all(|&l| (l - l.round()).abs() <= INT_TOL)
    }
}

#[derive(Clone, Debug)]
pub struct Rmp {
    pub customers: Vec<usize>,
    pub slots: Vec<usize>,
    pub slot_capacity: Vec<f64>,
    /// Lower and upper bound on the number of routes.
    pub fleet: (f64, f64),
    pub cuts: Vec<Cut>,
    pub columns: Vec<Column>,
    pub big_m: f64,
    row_of: Vec<Option<usize>>,
    index: HashMap<Vec<usize>, usize>,
    warm: Option<Basis>,
}

impl Rmp {
    /// Empty master with one artificial column per customer.
    pub fn new(inst: &Instance, graph: &RoutingGraph) -> Rmp {
        let customers: Vec<usize> = inst.customers().map(|c| c.id).collect();
        let slots: Vec<usize> = inst.slots().map(|s| s.id).collect();
        let slot_capacity = slots
            .iter()
            .map(|&s| {
                inst.node(s)
                    .slot_capacity
                    .map_or(INF, |b| if b == u32::MAX { INF } else { b as f64 })
            })
            .collect();
        let mut row_of = vec![None; graph.num_nodes()];
        for (k, &c) in customers.iter().chain(&slots).enumerate() {
            row_of[c] = Some(k);
        }
        let max_arc = graph.arcs.iter().map(|a| a.cost).fold(1.0, f64::max);
        let big_m = BIG_M_FACTOR * max_arc;
        let mut rmp = Rmp {
            customers,
            slots,
            slot_capacity,
            fleet: (0.0, inst.vehicles as f64),
            cuts: Vec::new(),
            columns: Vec::new(),
            big_m,
            row_of,
            index: HashMap::new(),
            warm: None,
        };
        for k in 0..rmp.customers.len() {
            rmp.columns.push(Column::artificial(rmp.customers[k], big_m));
        }
        rmp
    }

    pub fn num_rows(&self) -> usize {
        self.customers.len() + self.slots.len() + 1 + self.cuts.len()
    }

    pub fn fleet_row(&self) -> usize {
        self.customers.len() + self.slots.len()
    }

    /// Adds a column unless the same route is already pooled.
    pub fn add_column(&mut self, col: Column) -> Option<usize> {
        if col.is_artificial() || self.index.contains_key(&col.route) {
            return None;
        }
        let id = self.columns.len();
        self.index.insert(col.route.clone(), id);
        self.columns.push(col);
        Some(id)
    }

    pub fn find(&self, route: &[usize]) -> Option<usize> {
        self.index.get(route).copied()
    }

    pub fn add_cut(&mut self, cut: Cut) -> bool {
        if self.cuts.contains(&cut) {
            return false;
        }
        self.cuts.push(cut);
        true
    }

    fn entries(&self, col: &Column, cut_sets: &[NodeSet]) -> Vec<(usize, f64)> {
        let mut e: Vec<(usize, f64)> = col
            .visits
            .iter()
            .filter_map(|&(n, k)| self.row_of.get(n).copied().flatten().map(|r| (r, k as f64)))
            .collect();
        if col.is_artificial() {
            return e;
        }
        e.push((self.fleet_row(), 1.0));
        for (k, set) in cut_sets.iter().enumerate() {
            let enter = col.entering(set);
            if enter > 0 {
                e.push((self.fleet_row() + 1 + k, enter as f64));
            }
        }
        e
    }

    /// LP relaxation with `lambda >= 0`; columns with `active[j] == false`
    /// are fixed at zero. `upper` bounds every column (1 for the integer
    /// program).
    pub fn lp_problem(&self, active: Option<&[bool]>, upper: f64) -> LpProblem {
        let mut lp = LpProblem::default();
        for _ in &self.customers {
            lp.add_row(1.0, INF);
        }
        for &b in &self.slot_capacity {
            lp.add_row(-INF, b);
        }
        lp.add_row(self.fleet.0, self.fleet.1);
        for _ in &self.cuts {
            lp.add_row(2.0, INF);
        }
        let sets: Vec<NodeSet> = self.cuts.iter().map(Cut::set).collect();
        for (j, col) in self.columns.iter().enumerate() {
            let on = active.is_none_or(|a| a[j]);
            let hi = if col.is_artificial() { INF } else { upper };
            lp.add_col(col.cost, 0.0, if on { hi } else { 0.0 }, self.entries(col, &sets));
        }
        lp
    }

    pub fn row_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.customers.iter().map(|c| format!("cover_{c}")).collect();
        names.extend(self.slots.iter().map(|s| format!("pack_{s}")));
        names.push("fleet".into());
        names.extend((0..self.cuts.len()).map(|k| format!("cut_{k}")));
        names
    }

    pub fn col_names(&self) -> Vec<String> {
        self.columns
            .iter()
            .enumerate()
            .map(|(j, c)| {
                if c.is_artificial() {
                    format!("art_{}", c.route[0])
                } else {
                    format!("lambda_{j}")
                }
            })
            .collect()
    }

    pub fn to_lp_format(&self, active: Option<&[bool]>) -> String {
        self.lp_problem(active, INF)
            .to_lp_format(&self.row_names(), &self.col_names())
    }

    /// Solves the LP relaxation, warm-starting from the previous basis.
    pub fn solve_lp(&mut self, active: Option<&[bool]>, clock: &Clock) -> LpSolution {
        let lp = self.lp_problem(active, INF);
        let r = lp::solve(&lp, self.warm.as_ref());
        clock.tick(r.iterations * (lp.num_rows() as u64 + 10) * 20);
        if r.status == LpStatus::Optimal {
            self.warm = Some(r.basis.clone());
        } else {
            self.warm = None;
        }
        self.unpack(r)
    }

    fn unpack(&self, r: lp::LpResult) -> LpSolution {
        let (nc, ns) = (self.customers.len(), self.slots.len());
        let duals = Duals {
            cover: r.duals[..nc].to_vec(),
            pack: r.duals[nc..nc + ns].to_vec(),
            fleet: r.duals[nc + ns],
            cuts: r.duals[nc + ns + 1..].to_vec(),
        };
        LpSolution {
            status: r.status,
            objective: r.objective,
            lambda: r.x,
            duals,
            iterations: r.iterations,
        }
    }

    /// Dual price attached to entering node `j` (cover or pack row).
    fn node_dual(&self, duals: &Duals, j: usize) -> f64 {
        match self.row_of.get(j).copied().flatten() {
            Some(r) if r < self.customers.len() => duals.cover[r],
            Some(r) => duals.pack[r - self.customers.len()],
            None => 0.0,
        }
    }

    /// Reduced cost per arc: `c_ij` minus the head's row dual, the fleet
    /// dual on depot arcs and the duals of cuts whose subset the arc enters.
    pub fn reduced_cost_arcs(&self, duals: &Duals, graph: &RoutingGraph) -> Vec<f64> {
        let sets: Vec<NodeSet> = self.cuts.iter().map(Cut::set).collect();
        graph
            .arcs
            .iter()
            .map(|a| {
                let mut pi = self.node_dual(duals, a.to);
                if a.from == 0 {
                    pi += duals.fleet;
                }
                for (k, s) in sets.iter().enumerate() {
                    if s.contains(a.to) && !s.contains(a.from) {
                        pi += duals.cuts[k];
                    }
                }
                a.cost - pi
            })
            .collect()
    }

    /// Reduced cost of a pooled column computed row-wise.
    pub fn column_reduced_cost(&self, col: &Column, duals: &Duals) -> f64 {
        let mut rc = col.cost;
        for &(n, k) in &col.visits {
            rc -= k as f64 * self.node_dual(duals, n);
        }
        if !col.is_artificial() {
            rc -= duals.fleet;
            for (k, cut) in self.cuts.iter().enumerate() {
                rc -= col.entering(&cut.set()) as f64 * duals.cuts[k];
            }
        }
        rc
    }

    /// Columns whose every arc is active in `view`; artificials always are.
    pub fn compatible(&self, graph: &RoutingGraph, view: &GraphView) -> Vec<bool> {
        self.columns
            .iter()
            .map(|c| c.is_artificial() || view.admits(graph, &c.route))
            .collect()
    }

    /// Lower bound on the full master LP from an RMP optimum and the most
    /// negative reduced cost over all routes.
    pub fn lagrangian_bound(&self, lp: &LpSolution, min_reduced_cost: f64) -> f64 {
        let (lo, hi) = self.fleet;
        let pf = lp.duals.fleet;
        let fleet_term = if pf > 0.0 {
            pf * lo
        } else if pf < 0.0 {
            pf * hi
        } else {
            0.0
        };
        let without_fleet = min_reduced_cost + pf;
        let routes = if without_fleet < 0.0 {
            hi * without_fleet
        } else {
            lo * without_fleet
        };
        lp.objective - fleet_term + routes
    }
}

#[derive(Clone, Debug)]
pub struct IpParams {
    /// Nominal seconds on the solver clock.
    pub time_limit: f64,
    /// Relative gap at which the search stops.
    pub gap_limit: f64,
    /// Multiplicative objective noise amplitude.
    pub noise: f64,
    pub seed: u64,
    pub max_nodes: usize,
}

impl Default for IpParams {
    fn default() -> Self {
        IpParams {
            time_limit: INF,
            gap_limit: 0.0,
            noise: 0.0,
            seed: 0,
            max_nodes: usize::MAX,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegerSolution {
    /// Indices into the pool.
    pub columns: Vec<usize>,
    /// Unperturbed cost.
    pub value: f64,
    pub uses_artificial: bool,
    /// Search finished within the gap limit.
    pub proven: bool,
    pub nodes: usize,
}

impl IntegerSolution {
    pub fn routes(&self, rmp: &Rmp) -> Vec<Vec<usize>> {
        self.columns
            .iter()
            .filter(|&&j| !rmp.columns[j].is_artificial())
            .map(|&j| rmp.columns[j].route.clone())
            .collect()
    }
}

struct IpNode {
    fixings: Vec<(usize, bool)>,
    bound: f64,
    basis: Option<Basis>,
    seq: usize,
}

/// Branch-and-bound over binary column variables of the pool. Depth first
/// until the first incumbent, best bound afterwards.
pub fn solve_restricted_ip(
    rmp: &Rmp,
    active: Option<&[bool]>,
    params: &IpParams,
    clock: &Clock,
) -> Option<IntegerSolution> {
    let start = clock.elapsed();
    let mut base = rmp.lp_problem(active, 1.0);
    let true_cost = base.cost.clone();
    if params.noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        for (j, c) in base.cost.iter_mut().enumerate() {
            let u: f64 = rng.random_range(-params.noise..=params.noise);
            if !rmp.columns[j].is_artificial() {
                *c *= 1.0 + u;
            }
        }
    }
    let mut open: Vec<IpNode> = vec![IpNode {
        fixings: Vec::new(),
        bound: -INF,
        basis: None,
        seq: 0,
    }];
    let mut seq = 1;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut nodes = 0;
    let mut exhausted = true;
    while !open.is_empty() {
        if clock.elapsed() - start > params.time_limit || nodes >= params.max_nodes {
            exhausted = false;
            break;
        }
        let incumbent = best.as_ref().map_or(INF, |b| b.0);
        let global = open.iter().map(|n| n.bound).fold(INF, f64::min);
        if incumbent < INF && (incumbent - global) <= params.gap_limit * incumbent.abs() + 1e-9 {
            break;
        }
        let pick = if best.is_none() {
            open.len() - 1
        } else {
            (0..open.len())
                .min_by(|&a, &b| {
                    open[a]
                        .bound
                        .total_cmp(&open[b].bound)
                        .then(open[a].seq.cmp(&open[b].seq))
                })
                .unwrap()
        };
        let node = open.swap_remove(pick);
        if node.bound >= incumbent - 1e-9 {
            continue;
        }
        nodes += 1;
        let mut lp = base.clone();
        for &(j, one) in &node.fixings {
            let v = if one { 1.0 } else { 0.0 };
            lp.col_lo[j] = v;
            lp.col_hi[j] = v;
        }
        let r = lp::solve(&lp, node.basis.as_ref());
        clock.tick(r.iterations * (lp.num_rows() as u64 + 10) * 20);
        if r.status != LpStatus::Optimal || r.objective >= incumbent - 1e-9 {
            continue;
        }
        let frac =
            r.x.iter()
                .enumerate()
                .filter(|(_, &v)| (v - v.round()).abs() > INT_TOL)
                .min_by(|a, b| ((a.1 - 0.5).abs()).total_cmp(&(b.1 - 0.5).abs()).then(a.0.cmp(&b.0)));
        match frac {
            None => best = Some((r.objective, r.x)),
            Some((j, _)) => {
                for one in [false, true] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((j, one));
                    open.push(IpNode {
                        fixings,
                        bound: r.objective,
                        basis: Some(r.basis.clone()),
                        seq,
                    });
                    seq += 1;
                }
            }
        }
    }
    let (_, x) = best?;
    let columns: Vec<usize> = (0..x.len()).filter(|&j| x[j] > 0.5).collect();
    let value = round2(columns.iter().map(|&j| true_cost[j] * x[j].round()).sum());
    Some(IntegerSolution {
        uses_artificial: columns.iter().any(|&j| rmp.columns[j].is_artificial()),
        columns,
        value,
        proven: exhausted,
        nodes,
    })
}
