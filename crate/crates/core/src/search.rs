//! Branch-price-and-cut driver: column generation at each node, the root
//! cut loop with the pricing-for-integrality schedule, branching and a
//! best-bound tree search.

use std::fmt::Write as _;
use std::str::FromStr;

use log::{debug, info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clock::{Clock, ClockMode, LABEL_WORK};
use crate::cuts::{arc_flows, separate_two_path, CutLog};
pub use crate::graph::BranchDecision;
use crate::graph::{GraphView, RoutingGraph};
use crate::instance::{validate_solution, Instance};
use crate::labeling::{ng_escalation_loop, solve_pricing, NgMode, PricingMode, PricingRequest};
use crate::lp::LpStatus;
use crate::master::{solve_restricted_ip, Column, Cut, IpParams, LpSolution, Origin, Rmp};
use crate::pfih::{run_pfih, PfihLog, PfihParams};

const INT_TOL: f64 = 1e-6;
/// Objective values are sums of costs rounded to cents.
const COST_STEP: f64 = 0.01;
/// Stream id of the heuristic's random numbers ("pfih" in ASCII).
const PFIH_STREAM: u64 = 0x7066_6968;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PfihStrategy {
    Off,
    DuringPricing,
    BeforeCuts,
    AfterCuts,
}

impl PfihStrategy {
    pub fn name(self) -> &'static str {
        match self {
            PfihStrategy::Off => "off",
            PfihStrategy::DuringPricing => "during",
            PfihStrategy::BeforeCuts => "before",
            PfihStrategy::AfterCuts => "after",
        }
    }
}

impl FromStr for PfihStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "off" => Ok(PfihStrategy::Off),
            "during" => Ok(PfihStrategy::DuringPricing),
            "before" => Ok(PfihStrategy::BeforeCuts),
            "after" => Ok(PfihStrategy::AfterCuts),
            _ => Err(format!("unknown strategy {s:?}, expected off, during, before or after")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Nominal seconds on the solver clock.
    pub time_limit: f64,
    /// Initial ng-set size; 0 prices elementary routes only.
    pub ng_size: usize,
    pub cuts: bool,
    pub pfih: PfihStrategy,
    pub pfih_params: PfihParams,
    pub seed: u64,
    pub clock: ClockMode,
    /// Columns added per pricing call.
    pub max_columns: usize,
    /// Time limit of the restricted master heuristic.
    pub rmh_time_limit: f64,
    pub max_nodes: usize,
    /// Label cap of one pricing call.
    pub max_labels: usize,
    pub max_cut_rounds: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            time_limit: 3600.0,
            ng_size: 8,
            cuts: true,
            pfih: PfihStrategy::Off,
            pfih_params: PfihParams::default(),
            seed: 0,
            clock: ClockMode::Work,
            max_columns: 10,
            rmh_time_limit: 10.0,
            max_nodes: 100_000,
            max_labels: 2_000_000,
            max_cut_rounds: 50,
        }
    }
}

impl SolverConfig {
    pub fn check(&self) -> Result<(), String> {
        if !(self.time_limit >= 0.0 && self.rmh_time_limit >= 0.0) {
            return Err("time limits must be non-negative".into());
        }
        if self.max_columns == 0 || self.max_labels == 0 {
            return Err("column and label limits must be positive".into());
        }
        self.pfih_params.check()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// Tree exhausted with an incumbent.
    Optimal,
    /// Tree exhausted without a feasible solution.
    Infeasible,
    TimeLimit,
    NodeLimit,
    /// Tree exhausted, but some nodes could not be solved or branched.
    Incomplete,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    Open,
    Branched,
    Integer,
    Pruned,
    Infeasible,
    /// LP failure or a fractional point without a branching candidate.
    Unresolved,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchNode {
    pub id: usize,
    pub depth: usize,
    pub decisions: Vec<BranchDecision>,
    pub bound: f64,
    pub status: NodeStatus,
}

/// Outcome of the branching rule on a node LP.
#[derive(Clone, Debug, PartialEq)]
pub enum Branching {
    Split(BranchDecision, BranchDecision),
    IntegerFound,
    /// Fractional, yet no fleet or arc candidate exists.
    NoCandidate,
}

/// Fractional fleet size first, then the first fractional arc in
/// ascending `(i, j)` order with a customer endpoint.
pub fn branch(lp: &LpSolution, rmp: &Rmp, graph: &RoutingGraph) -> Branching {
    let fleet: f64 = rmp
        .columns
        .iter()
        .zip(&lp.lambda)
        .filter(|(c, _)| !c.is_artificial())
        .map(|(_, l)| l)
        .sum();
    if (fleet - fleet.round()).abs() > INT_TOL {
        let lo = fleet.floor() as usize;
        return Branching::Split(BranchDecision::FleetFloor(lo), BranchDecision::FleetCeil(lo + 1));
    }
    let flow = arc_flows(lp, rmp, graph);
    let mut order: Vec<usize> = (0..graph.arcs.len()).collect();
    order.sort_by_key(|&a| (graph.arcs[a].from, graph.arcs[a].to));
    for a in order {
        let f = flow[a];
        let arc = &graph.arcs[a];
        if (f - f.round()).abs() > INT_TOL && (graph.is_customer(arc.from) || graph.is_customer(arc.to)) {
            return Branching::Split(
                BranchDecision::ArcForce(arc.from, arc.to),
                BranchDecision::ArcForbid(arc.from, arc.to),
            );
        }
    }
    if lp.is_integral() {
        Branching::IntegerFound
    } else {
        Branching::NoCandidate
    }
}

/// Fleet bounds implied by the decisions, or `None` if they conflict.
pub fn fleet_bounds(base: (f64, f64), decisions: &[BranchDecision]) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = base;
    for d in decisions {
        match *d {
            BranchDecision::FleetFloor(v) => hi = hi.min(v as f64),
            BranchDecision::FleetCeil(v) => lo = lo.max(v as f64),
            _ => {}
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// Relative gap in percent, `100 (primal - dual) / primal`.
pub fn gap_percent(primal: f64, dual: f64) -> f64 {
    if primal.abs() < 1e-12 {
        return if (primal - dual).abs() < 1e-9 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    (100.0 * (primal - dual) / primal.abs()).max(0.0)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub lp_solves: u64,
    pub lp_iterations: u64,
    pub heuristic_pricing: u64,
    pub exact_pricing: u64,
    pub ng_resolves: u64,
    pub labels: u64,
    pub pricing_columns: u64,
    pub pfih_columns: u64,
    pub pfih_positive_rc_columns: u64,
    pub pfih_invocations: u64,
    pub nodes_infeasible: u64,
    pub nodes_pruned: u64,
    pub nodes_unresolved: u64,
    pub max_depth: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RootReport {
    pub primal: Option<f64>,
    pub dual: Option<f64>,
    pub gap: Option<f64>,
    pub time: f64,
    /// Converged LP value before any cut was added.
    pub lp_before_cuts: Option<f64>,
    pub cut_rounds: usize,
    pub pricing_iterations: usize,
    pub columns: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub instance: String,
    pub status: RunStatus,
    pub node_selection: String,
    pub config: SolverConfig,
    pub root: RootReport,
    pub dual: Option<f64>,
    pub primal: Option<f64>,
    pub gap: Option<f64>,
    pub time: f64,
    pub nodes: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub time_pfih: Option<f64>,
    pub routes: Vec<Vec<usize>>,
    pub cuts: Vec<CutLog>,
    pub pfih: Vec<PfihLog>,
    pub stats: SearchStats,
}

pub const CSV_HEADER: &str = "Instance,Root primal,Root dual,Root gap,Root time,Dual,Primal,Gap,Time,Nodes,Time PFIH";

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.2}"),
        _ => String::new(),
    }
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "{},{},{},{},{:.2},{},{},{},{:.2},{},{}",
            self.instance,
            cell(self.root.primal),
            cell(self.root.dual),
            cell(self.root.gap),
            self.root.time,
            cell(self.dual),
            cell(self.primal),
            cell(self.gap),
            self.time,
            self.nodes,
            cell(self.time_pfih)
        )
        .unwrap();
        s
    }
}

/// Result of column generation at one node.
#[derive(Clone, Debug)]
pub struct NodeLp {
    pub lp: Option<LpSolution>,
    /// Valid lower bound on the node's master LP.
    pub bound: f64,
    pub converged: bool,
    pub failed: bool,
    pub iterations: usize,
}

struct Priced {
    routes: Vec<Vec<usize>>,
    /// Minimum reduced cost over all routes, when the exact pricing was
    /// exhaustive.
    exact_min: Option<f64>,
    exact: bool,
}

struct OpenNode {
    node: SearchNode,
    seq: usize,
}

struct Search<'a> {
    inst: &'a Instance,
    graph: RoutingGraph,
    cfg: &'a SolverConfig,
    clock: Clock,
    rmp: Rmp,
    base_fleet: (f64, f64),
    stats: SearchStats,
    incumbent: Option<(f64, Vec<Vec<usize>>)>,
    rng: ChaCha8Rng,
    pfih_logs: Vec<PfihLog>,
    pfih_time: f64,
    cut_logs: Vec<CutLog>,
}

impl<'a> Search<'a> {
    fn out_of_time(&self) -> bool {
        self.clock.elapsed() >= self.cfg.time_limit
    }

    fn remaining(&self) -> f64 {
        (self.cfg.time_limit - self.clock.elapsed()).max(0.0)
    }

    fn cutoff(&self) -> f64 {
        self.incumbent
            .as_ref()
            .map_or(f64::INFINITY, |(v, _)| v - COST_STEP + 1e-6)
    }

    fn offer(&mut self, routes: Vec<Vec<usize>>, value: f64, source: &str) {
        if self.incumbent.as_ref().is_some_and(|(v, _)| *v <= value + 1e-9) {
            return;
        }
        let report = validate_solution(self.inst, &routes);
        if !report.passed() {
            warn!("{source} solution rejected: {:?}", report.first_failure());
            return;
        }
        info!("incumbent {value:.2} from {source}");
        self.incumbent = Some((value, routes));
    }

    fn price(&mut self, view: &GraphView, costs: &[f64]) -> Priced {
        let mut req = PricingRequest::new(&self.graph, view, costs);
        req.max_columns = self.cfg.max_columns;
        req.max_labels = self.cfg.max_labels;
        req.ng = if self.cfg.ng_size > 0 {
            NgMode::On(self.cfg.ng_size)
        } else {
            NgMode::Off
        };
        let fresh = |rmp: &Rmp, r: &crate::labeling::PricingResult| -> Vec<Vec<usize>> {
            r.columns
                .iter()
                .filter(|c| c.elementary && rmp.find(&c.route).is_none())
                .map(|c| c.route.clone())
                .collect()
        };
        req.mode = PricingMode::ReducedGraphHeuristic;
        let r = solve_pricing(&req);
        self.clock.tick(r.stats.created * LABEL_WORK);
        self.stats.heuristic_pricing += 1;
        self.stats.labels += r.stats.created;
        let routes = fresh(&self.rmp, &r);
        if !routes.is_empty() {
            return Priced {
                routes,
                exact_min: None,
                exact: false,
            };
        }
        req.mode = PricingMode::Exact;
        let r = ng_escalation_loop(&req, self.cfg.ng_size);
        self.clock.tick(r.stats.created * LABEL_WORK);
        self.stats.exact_pricing += 1;
        self.stats.ng_resolves += r.ng_history.len().saturating_sub(1) as u64;
        self.stats.labels += r.stats.created;
        Priced {
            routes: fresh(&self.rmp, &r),
            exact_min: (!r.truncated).then(|| r.best().map_or(0.0, |c| c.reduced_cost.min(0.0))),
            exact: true,
        }
    }

    /// Column generation on the columns marked in `active`; new columns
    /// are appended to the pool and marked active.
    fn colgen(&mut self, view: &GraphView, active: &mut Vec<bool>, during_pricing: bool) -> NodeLp {
        let mut out = NodeLp {
            lp: None,
            bound: f64::NEG_INFINITY,
            converged: false,
            failed: false,
            iterations: 0,
        };
        let mut pfih_first: Option<usize> = None;
        let mut pfih_calls = 0;
        loop {
            if self.out_of_time() {
                return out;
            }
            let lp = self.rmp.solve_lp(Some(active), &self.clock);
            self.stats.lp_solves += 1;
            self.stats.lp_iterations += lp.iterations;
            if lp.status != LpStatus::Optimal {
                warn!("master LP ended with {:?}", lp.status);
                out.failed = true;
                return out;
            }
            out.iterations += 1;
            let costs = self.rmp.reduced_cost_arcs(&lp.duals, &self.graph);
            let priced = self.price(view, &costs);
            if let Some(m) = priced.exact_min {
                out.bound = out.bound.max(self.rmp.lagrangian_bound(&lp, m));
            }
            let mut added = 0;
            for route in &priced.routes {
                let Some(col) = Column::from_route(&self.graph, route, Origin::Pricing) else {
                    continue;
                };
                if self.rmp.add_column(col).is_some() {
                    active.push(true);
                    added += 1;
                }
            }
            self.stats.pricing_columns += added as u64;
            if added == 0 {
                if priced.exact && priced.exact_min.is_some() {
                    out.bound = out.bound.max(lp.objective);
                    out.converged = true;
                }
                out.lp = Some(lp);
                return out;
            }
            if during_pricing && pfih_calls < 10 {
                let gap = (lp.objective - out.bound) / lp.objective.abs().max(1e-9);
                if pfih_first.is_none() && gap < 0.10 {
                    pfih_first = Some(out.iterations);
                }
                if let Some(first) = pfih_first {
                    if (out.iterations - first) % 5 == 0 {
                        let params = PfihParams {
                            start_iterations: 1,
                            ..self.cfg.pfih_params.clone()
                        };
                        self.pfih(&lp, &params, active);
                        pfih_calls += 1;
                    }
                }
            }
            out.lp = Some(lp);
        }
    }

    fn rmh_params(&self) -> IpParams {
        IpParams {
            time_limit: self.cfg.rmh_time_limit.min(self.remaining()),
            ..Default::default()
        }
    }

    fn pfih(&mut self, lp: &LpSolution, params: &PfihParams, active: &mut Vec<bool>) {
        if self.out_of_time() {
            return;
        }
        let start = self.clock.elapsed();
        let rmh = self.rmh_params();
        let before = self.rmp.columns.len();
        let outcome = run_pfih(
            &mut self.rmp,
            &self.graph,
            &lp.duals,
            params,
            &rmh,
            &mut self.rng,
            &self.clock,
        );
        active.resize(self.rmp.columns.len(), true);
        debug_assert_eq!(self.rmp.columns.len() - before, outcome.new_columns.len());
        self.stats.pfih_invocations += 1;
        self.stats.pfih_columns += outcome.new_columns.len() as u64;
        self.stats.pfih_positive_rc_columns += outcome
            .log
            .passes
            .iter()
            .map(|p| p.positive_true_rc as u64)
            .sum::<u64>();
        if let Some(sol) = &outcome.solution {
            let routes = sol.routes(&self.rmp);
            self.offer(routes, sol.value, "pricing for integrality");
        }
        self.pfih_time += self.clock.elapsed() - start;
        self.pfih_logs.push(outcome.log);
    }

    fn rmh(&mut self, active: &[bool], source: &str) {
        if self.out_of_time() {
            return;
        }
        let params = self.rmh_params();
        if let Some(sol) = solve_restricted_ip(&self.rmp, Some(active), &params, &self.clock) {
            if !sol.uses_artificial {
                let routes = sol.routes(&self.rmp);
                self.offer(routes, sol.value, source);
            }
        }
    }

    fn integer_routes(&self, lp: &LpSolution) -> (Vec<Vec<usize>>, f64) {
        let cols: Vec<&Column> = self
            .rmp
            .columns
            .iter()
            .zip(&lp.lambda)
            .filter(|(c, l)| **l > 0.5 && !c.is_artificial())
            .map(|(c, _)| c)
            .collect();
        let value = crate::instance::round2(cols.iter().map(|c| c.cost).sum());
        (cols.into_iter().map(|c| c.route.clone()).collect(), value)
    }

    fn root(&mut self) -> (RootReport, Option<NodeLp>) {
        let mut report = RootReport::default();
        let view = self.graph.full_view();
        let mut active = vec![true; self.rmp.columns.len()];
        let during = self.cfg.pfih == PfihStrategy::DuringPricing;
        let mut node = self.colgen(&view, &mut active, during);
        report.pricing_iterations += node.iterations;
        if node.converged {
            report.lp_before_cuts = node.lp.as_ref().map(|l| l.objective);
        }
        let usable = |n: &NodeLp, rmp: &Rmp| n.converged && n.lp.as_ref().is_some_and(|l| !l.uses_artificial(rmp));
        if self.cfg.pfih == PfihStrategy::BeforeCuts && usable(&node, &self.rmp) {
            let lp = node.lp.clone().unwrap();
            self.pfih(&lp, &self.cfg.pfih_params.clone(), &mut active);
            node = self.reconverge(&view, &mut active, node, &mut report);
        }
        if self.cfg.cuts {
            while report.cut_rounds < self.cfg.max_cut_rounds && usable(&node, &self.rmp) && !self.out_of_time() {
                let lp = node.lp.as_ref().unwrap();
                if lp.is_integral() {
                    break;
                }
                let sep = separate_two_path(lp, &self.rmp, &self.graph, &self.clock);
                let mut added = 0;
                for c in sep.cuts {
                    if self.rmp.add_cut(Cut {
                        customers: c.customers.clone(),
                    }) {
                        added += 1;
                        self.cut_logs.push(c);
                    }
                }
                if added == 0 {
                    break;
                }
                report.cut_rounds += 1;
                debug!("cut round {}: {added} cuts", report.cut_rounds);
                node = self.reconverge(&view, &mut active, node, &mut report);
            }
        }
        if self.cfg.pfih == PfihStrategy::AfterCuts && usable(&node, &self.rmp) {
            let lp = node.lp.clone().unwrap();
            self.pfih(&lp, &self.cfg.pfih_params.clone(), &mut active);
            node = self.reconverge(&view, &mut active, node, &mut report);
        }
        self.rmh(&active, "restricted master heuristic");
        report.columns = self.rmp.columns.len();
        let infeasible = node.converged && node.lp.as_ref().is_some_and(|l| l.uses_artificial(&self.rmp));
        report.dual = (node.bound.is_finite() && !infeasible).then_some(node.bound);
        report.primal = self.incumbent.as_ref().map(|i| i.0);
        if let (Some(p), Some(d)) = (report.primal, report.dual) {
            report.gap = Some(gap_percent(p, d));
        }
        report.time = self.clock.elapsed();
        (report, Some(node))
    }

    /// Column generation after the pool or the rows changed; the bound of
    /// the previous run is kept when it is larger.
    fn reconverge(
        &mut self,
        view: &GraphView,
        active: &mut Vec<bool>,
        prev: NodeLp,
        report: &mut RootReport,
    ) -> NodeLp {
        let mut node = self.colgen(view, active, false);
        report.pricing_iterations += node.iterations;
        if node.lp.is_none() {
            node.lp = prev.lp;
        }
        node.bound = node.bound.max(prev.bound);
        node
    }

    fn process(&mut self, node: &mut SearchNode) -> (Option<NodeLp>, Branching) {
        let Some(fleet) = fleet_bounds(self.base_fleet, &node.decisions) else {
            node.status = NodeStatus::Infeasible;
            return (None, Branching::NoCandidate);
        };
        let view = match self.graph.apply_branching(&node.decisions) {
            Ok(v) => v,
            Err(e) => {
                debug!("node {}: {e}", node.id);
                node.status = NodeStatus::Infeasible;
                return (None, Branching::NoCandidate);
            }
        };
        self.rmp.fleet = fleet;
        let mut active = self.rmp.compatible(&self.graph, &view);
        let res = self.colgen(&view, &mut active, false);
        self.rmp.fleet = self.base_fleet;
        self.classify(node, res, &active)
    }

    fn classify(&mut self, node: &mut SearchNode, res: NodeLp, active: &[bool]) -> (Option<NodeLp>, Branching) {
        node.bound = node.bound.max(res.bound);
        if res.failed {
            node.status = NodeStatus::Unresolved;
            return (Some(res), Branching::NoCandidate);
        }
        if !res.converged {
            node.status = NodeStatus::Open;
            return (Some(res), Branching::NoCandidate);
        }
        let lp = res.lp.as_ref().unwrap();
        if lp.uses_artificial(&self.rmp) {
            node.status = NodeStatus::Infeasible;
            return (Some(res), Branching::NoCandidate);
        }
        if node.bound > self.cutoff() {
            node.status = NodeStatus::Pruned;
            return (Some(res), Branching::NoCandidate);
        }
        let b = branch(lp, &self.rmp, &self.graph);
        match &b {
            Branching::IntegerFound => {
                let (routes, value) = self.integer_routes(lp);
                self.offer(routes, value, "node LP");
                node.status = NodeStatus::Integer;
            }
            Branching::Split(..) => node.status = NodeStatus::Branched,
            Branching::NoCandidate => {
                self.rmh(active, "node restricted master heuristic");
                node.status = NodeStatus::Unresolved;
            }
        }
        (Some(res), b)
    }
}

/// Solves an instance with branch-price-and-cut.
pub fn solve(inst: &Instance, name: &str, cfg: &SolverConfig) -> RunReport {
    let graph = match RoutingGraph::build(inst, cfg.ng_size) {
        Ok(g) => g,
        Err(e) => panic!("instance {name} cannot be solved: {e}"),
    };
    let rmp = Rmp::new(inst, &graph);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(PFIH_STREAM);
    let mut s = Search {
        inst,
        base_fleet: rmp.fleet,
        graph,
        cfg,
        clock: Clock::new(cfg.clock),
        rmp,
        stats: SearchStats::default(),
        incumbent: None,
        rng,
        pfih_logs: Vec::new(),
        pfih_time: 0.0,
        cut_logs: Vec::new(),
    };

    let mut root = SearchNode {
        id: 0,
        depth: 0,
        decisions: Vec::new(),
        bound: f64::NEG_INFINITY,
        status: NodeStatus::Open,
    };
    let (root_report, root_lp) = s.root();
    let mut nodes = 1;
    let mut open: Vec<OpenNode> = Vec::new();
    let mut unresolved: Vec<f64> = Vec::new();
    let mut seq = 0;
    let mut status = None;
    let mut dual = f64::NEG_INFINITY;

    let root_res = root_lp.unwrap();
    let active = vec![true; s.rmp.columns.len()];
    let (_, b) = s.classify(&mut root, root_res, &active);
    let expand = |parent: &SearchNode, b: Branching, open: &mut Vec<OpenNode>, seq: &mut usize| {
        if let Branching::Split(l, r) = b {
            for d in [l, r] {
                let mut decisions = parent.decisions.clone();
                decisions.push(d);
                *seq += 1;
                open.push(OpenNode {
                    node: SearchNode {
                        id: *seq,
                        depth: parent.depth + 1,
                        decisions,
                        bound: parent.bound,
                        status: NodeStatus::Open,
                    },
                    seq: *seq,
                });
            }
        }
    };
    match root.status {
        NodeStatus::Open => {
            status = Some(RunStatus::TimeLimit);
            open.push(OpenNode {
                node: root.clone(),
                seq: 0,
            });
        }
        NodeStatus::Unresolved => unresolved.push(root.bound),
        _ => {}
    }
    if root.bound.is_finite() {
        dual = root.bound;
    }
    expand(&root, b, &mut open, &mut seq);

    while status.is_none() {
        let cutoff = s.cutoff();
        open.retain(|o| {
            let keep = o.node.bound <= cutoff;
            if !keep {
                s.stats.nodes_pruned += 1;
            }
            keep
        });
        let global = open
            .iter()
            .map(|o| o.node.bound)
            .chain(unresolved.iter().copied())
            .chain(s.incumbent.as_ref().map(|i| i.0))
            .fold(f64::INFINITY, f64::min);
        if global.is_finite() {
            dual = dual.max(global);
        }
        if open.is_empty() {
            break;
        }
        if s.out_of_time() {
            status = Some(RunStatus::TimeLimit);
            break;
        }
        if nodes >= cfg.max_nodes {
            status = Some(RunStatus::NodeLimit);
            break;
        }
        let pick = (0..open.len())
            .min_by(|&a, &b| {
                open[a]
                    .node
                    .bound
                    .total_cmp(&open[b].node.bound)
                    .then(open[a].seq.cmp(&open[b].seq))
            })
            .unwrap();
        let OpenNode {
            mut node,
            seq: node_seq,
        } = open.swap_remove(pick);
        nodes += 1;
        s.stats.max_depth = s.stats.max_depth.max(node.depth);
        let (_, b) = s.process(&mut node);
        match node.status {
            NodeStatus::Open => {
                open.push(OpenNode { node, seq: node_seq });
                status = Some(RunStatus::TimeLimit);
            }
            NodeStatus::Infeasible => s.stats.nodes_infeasible += 1,
            NodeStatus::Pruned => s.stats.nodes_pruned += 1,
            NodeStatus::Unresolved => {
                s.stats.nodes_unresolved += 1;
                unresolved.push(node.bound);
            }
            NodeStatus::Branched => expand(&node, b, &mut open, &mut seq),
            NodeStatus::Integer => {}
        }
    }
    // the bound of open and unresolved nodes still limits the dual bound
    let global = open
        .iter()
        .map(|o| o.node.bound)
        .chain(unresolved.iter().copied())
        .chain(s.incumbent.as_ref().map(|i| i.0))
        .fold(f64::INFINITY, f64::min);
    if global.is_finite() {
        dual = dual.max(global);
    }
    let status = status.unwrap_or(if !unresolved.is_empty() {
        RunStatus::Incomplete
    } else if s.incumbent.is_some() {
        RunStatus::Optimal
    } else {
        RunStatus::Infeasible
    });
    let primal = s.incumbent.as_ref().map(|i| i.0);
    if status == RunStatus::Optimal {
        dual = primal.unwrap();
    }
    let dual = (dual.is_finite() && status != RunStatus::Infeasible).then_some(dual);
    let gap = match (primal, dual) {
        (Some(p), Some(d)) => Some(gap_percent(p, d)),
        _ => None,
    };
    let mut routes = s.incumbent.map(|i| i.1).unwrap_or_default();
    routes.sort();
    RunReport {
        instance: name.to_string(),
        status,
        node_selection: "best bound, FIFO ties".into(),
        config: cfg.clone(),
        root: root_report,
        dual,
        primal,
        gap,
        time: s.clock.elapsed(),
        nodes,
        time_pfih: (cfg.pfih != PfihStrategy::Off).then_some(s.pfih_time),
        routes,
        cuts: s.cut_logs,
        pfih: s.pfih_logs,
        stats: s.stats,
    }
}
