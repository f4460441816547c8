//! Pricing for integrality: a destroy-and-repair heuristic that generates
//! columns with a modified pricing objective, so that the columns of one
//! repair process tend to fit together in an integer solution.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clock::{Clock, LABEL_WORK};
use crate::graph::{GraphView, RoutingGraph};
use crate::labeling::{solve_pricing, NgMode, PricingMode, PricingRequest};
use crate::master::{solve_restricted_ip, Column, Duals, IntegerSolution, IpParams, Origin, Rmp};
use crate::nodeset::NodeSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PfihParams {
    /// Start solutions per invocation.
    pub start_iterations: usize,
    /// Destroy-repair passes per start solution.
    pub destroy_iterations: usize,
    /// Objective noise of the start IP.
    pub noise: f64,
    /// Start IP limit in nominal seconds.
    pub start_time_limit: f64,
    pub start_gap_limit: f64,
    /// Weight of the duals in the modified objective.
    pub gamma: f64,
    /// Weight of the heuristic node weights.
    pub beta: f64,
    pub max_columns: usize,
    /// Share of the start solution's routes removed by a destroy step.
    pub destroy_fraction: f64,
    /// Label cap of one repair pricing call.
    pub max_labels: usize,
}

impl Default for PfihParams {
    fn default() -> Self {
        PfihParams {
            start_iterations: 10,
            destroy_iterations: 6,
            noise: 0.05,
            start_time_limit: 10.0,
            start_gap_limit: 0.05,
            gamma: 0.6,
            beta: 0.6,
            max_columns: 10,
            destroy_fraction: 0.5,
            max_labels: 500_000,
        }
    }
}

impl PfihParams {
    /// Settings used when the heuristic runs inside the pricing loop.
    pub fn during_pricing() -> Self {
        PfihParams {
            start_iterations: 1,
            ..Default::default()
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if !(self.gamma >= 0.0 && self.beta >= 0.0) {
            return Err("gamma and beta must be non-negative".into());
        }
        if !(self.destroy_fraction > 0.0 && self.destroy_fraction < 1.0) {
            return Err("destroy fraction must lie in (0, 1)".into());
        }
        if !(self.noise >= 0.0 && self.start_time_limit >= 0.0 && self.start_gap_limit >= 0.0) {
            return Err("noise and start limits must be non-negative".into());
        }
        if self.max_columns == 0 {
            return Err("max columns must be positive".into());
        }
        Ok(())
    }
}

/// Master constraint type attached to a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Cover,
    Pack,
    Partition,
}

/// Heuristic weight `h_jr` of a node.
pub fn heuristic_weight(kind: RowKind, avg_cost: f64, expected: f64, used: f64) -> f64 {
    let d = expected - used;
    avg_cost
        * match kind {
            RowKind::Cover => d.max(0.0),
            RowKind::Pack => d.min(0.0),
            RowKind::Partition => d,
        }
}

/// Expected visits `E_jr` after `r` of `removed` repair iterations.
pub fn expected_visits(r: usize, removed: usize) -> f64 {
    let big_r = removed as f64;
    if r == 0 {
        0.5 / big_r
    } else {
        r as f64 / big_r
    }
}

#[derive(Clone, Debug)]
pub struct RepairState {
    /// Customers and slots served by the kept routes.
    pub partial: NodeSet,
    /// Nodes open to repair columns, both depot copies included.
    pub repair_nodes: NodeSet,
    /// Number of removed routes, which is also the number of repair iterations.
    pub removed: usize,
    /// Current repair iteration.
    pub iteration: usize,
    /// Average visits `U_jr` per node id.
    pub usage: Vec<f64>,
}

impl RepairState {
    pub fn new(graph: &RoutingGraph, kept: &[&[usize]], removed: usize) -> Self {
        let end = graph.end_depot();
        let mut partial = NodeSet::new();
        for route in kept {
            for &i in route.iter() {
                if i != 0 && i != end {
                    partial.insert(i);
                }
            }
        }
        let repair_nodes = NodeSet::from_iter((0..graph.num_nodes()).filter(|&i| !partial.contains(i)));
        RepairState {
            partial,
            repair_nodes,
            removed,
            iteration: 0,
            usage: vec![0.0; graph.num_nodes()],
        }
    }

    pub fn expected(&self) -> f64 {
        expected_visits(self.iteration, self.removed)
    }

    /// `h_jr` for node `j`; zero at depots and outside the repair nodes.
    pub fn weight(&self, graph: &RoutingGraph, j: usize) -> f64 {
        if !self.repair_nodes.contains(j) {
            return 0.0;
        }
        let kind = if graph.is_customer(j) {
            RowKind::Cover
        } else if graph.is_slot(j) {
            RowKind::Pack
        } else {
            return 0.0;
        };
        heuristic_weight(kind, graph.avg_arc_cost, self.expected(), self.usage[j])
    }

    /// Advances to the next iteration with the columns it produced.
    pub fn record(&mut self, routes: &[Vec<usize>]) {
        self.iteration += 1;
        if routes.is_empty() {
            return;
        }
        let k = routes.len() as f64;
        for (j, u) in self.usage.iter_mut().enumerate() {
            let visiting = routes.iter().filter(|r| r.contains(&j)).count();
            *u += visiting as f64 / k;
        }
    }

    pub fn view(&self, graph: &RoutingGraph) -> GraphView {
        graph.full_view().restrict_nodes(graph, &self.repair_nodes)
    }
}

/// Modified arc costs `c_ij - gamma * pi_ij - beta * h_jr`, where `arc_duals`
/// holds `pi_ij` per arc.
pub fn modify_pricing_objective(
    state: &RepairState,
    graph: &RoutingGraph,
    arc_duals: &[f64],
    gamma: f64,
    beta: f64,
) -> Vec<f64> {
    let h: Vec<f64> = (0..graph.num_nodes()).map(|j| state.weight(graph, j)).collect();
    graph
        .arcs
        .iter()
        .zip(arc_duals)
        .map(|(a, &pi)| a.cost - gamma * pi - beta * h[a.to])
        .collect()
}

/// Dual value collected per arc: cost minus reduced cost.
pub fn arc_duals(rmp: &Rmp, graph: &RoutingGraph, duals: &Duals) -> Vec<f64> {
    let rc = rmp.reduced_cost_arcs(duals, graph);
    graph.arcs.iter().zip(rc).map(|(a, r)| a.cost - r).collect()
}

fn centroid(graph: &RoutingGraph, route: &[usize]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = route
        .iter()
        .filter(|&&i| graph.is_customer(i))
        .map(|&i| (graph.nodes[i].x, graph.nodes[i].y))
        .collect();
    if pts.is_empty() {
        return (graph.nodes[0].x, graph.nodes[0].y);
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    (sx / n, sy / n)
}

/// Chooses the routes to keep: a uniform seed route, then routes drawn
/// without replacement with weight `1 / (1 + d)`, where `d` is the distance
/// between customer centroids. Returns the kept indices (sorted) and the
/// number of removed routes.
pub fn destroy_keep(
    graph: &RoutingGraph,
    routes: &[Vec<usize>],
    fraction: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, usize) {
    let l = routes.len();
    if l == 0 {
        return (Vec::new(), 0);
    }
    let removed = (l as f64 * fraction).floor() as usize;
    let seed = rng.random_range(0..l);
    let (cx, cy) = centroid(graph, &routes[seed]);
    let others: Vec<(usize, f64)> = (0..l)
        .filter(|&k| k != seed)
        .map(|k| {
            let (x, y) = centroid(graph, &routes[k]);
            (k, 1.0 / (1.0 + (x - cx).hypot(y - cy)))
        })
        .collect();
    let mut kept: Vec<usize> = others
        .choose_multiple_weighted(rng, l - removed - 1, |o| o.1)
        .expect("weights are positive and finite")
        .map(|o| o.0)
        .collect();
    kept.push(seed);
    kept.sort_unstable();
    (kept, removed)
}

/// Runs the repair iterations of one pass and returns the generated routes.
/// Each iteration keeps up to `max_columns` routes of negative modified
/// cost, found by elementary pricing on the reduced repair graph.
pub fn repair_loop(
    state: &mut RepairState,
    graph: &RoutingGraph,
    arc_duals: &[f64],
    params: &PfihParams,
    clock: &Clock,
) -> Vec<Vec<usize>> {
    let view = state.view(graph);
    let mut out = Vec::new();
    let mut costs = modify_pricing_objective(state, graph, arc_duals, params.gamma, params.beta);
    for _ in 0..state.removed {
        let mut req = PricingRequest::new(graph, &view, &costs);
        req.mode = PricingMode::ReducedGraphHeuristic;
        req.ng = NgMode::Off;
        req.max_columns = params.max_columns;
        req.max_labels = params.max_labels;
        let r = solve_pricing(&req);
        clock.tick(r.stats.created * LABEL_WORK);
        let routes: Vec<Vec<usize>> = r.columns.into_iter().map(|c| c.route).collect();
        state.record(&routes);
        costs = modify_pricing_objective(state, graph, arc_duals, params.gamma, params.beta);
        out.extend(routes);
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct StartSolution {
    /// Pool indices of the real routes.
    pub columns: Vec<usize>,
    pub value: f64,
    /// Some customers are only covered by artificial columns.
    pub uses_artificial: bool,
}

/// Solves the noisy start IP over the pool. `None` when no integer point is
/// found or only artificial columns are selected.
pub fn create_initial_solution(rmp: &Rmp, params: &PfihParams, seed: u64, clock: &Clock) -> Option<StartSolution> {
    let ip = IpParams {
        time_limit: params.start_time_limit,
        gap_limit: params.start_gap_limit,
        noise: params.noise,
        seed,
        ..Default::default()
    };
    let sol = solve_restricted_ip(rmp, None, &ip, clock)?;
    let columns: Vec<usize> = sol
        .columns
        .iter()
        .copied()
        .filter(|&j| !rmp.columns[j].is_artificial())
        .collect();
    if columns.is_empty() {
        return None;
    }
    Some(StartSolution {
        columns,
        value: sol.value,
        uses_artificial: sol.uses_artificial,
    })
}

/// One destroy-repair pass.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PfihPass {
    /// Cost of the start solution, artificials included.
    pub start_value: Option<f64>,
    pub start_uses_artificial: bool,
    /// Routes in the start solution.
    pub routes: usize,
    pub removed: usize,
    pub generated: usize,
    /// Generated routes that were new to the pool.
    pub added: usize,
    pub negative_true_rc: usize,
    pub positive_true_rc: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PfihLog {
    pub passes: Vec<PfihPass>,
    pub new_columns: usize,
    pub primal: Option<f64>,
    /// Solver clock seconds spent.
    pub time: f64,
}

#[derive(Clone, Debug, Default)]
pub struct PfihOutcome {
    /// Pool indices of the added columns.
    pub new_columns: Vec<usize>,
    /// Artificial-free solution of the final restricted master IP.
    pub solution: Option<IntegerSolution>,
    pub log: PfihLog,
}

/// Full heuristic: start solutions, destroy-repair passes with duals frozen
/// at entry, then a restricted master IP over the enlarged pool.
pub fn run_pfih(
    rmp: &mut Rmp,
    graph: &RoutingGraph,
    duals: &Duals,
    params: &PfihParams,
    rmh: &IpParams,
    rng: &mut ChaCha8Rng,
    clock: &Clock,
) -> PfihOutcome {
    let start = clock.elapsed();
    let pi = arc_duals(rmp, graph, duals);
    let mut out = PfihOutcome::default();
    for _ in 0..params.start_iterations {
        let seed: u64 = rng.random();
        let Some(start_sol) = create_initial_solution(rmp, params, seed, clock) else {
            out.log.passes.push(PfihPass::default());
            continue;
        };
        let routes: Vec<Vec<usize>> = start_sol
            .columns
            .iter()
            .map(|&j| rmp.columns[j].route.clone())
            .collect();
        for _ in 0..params.destroy_iterations {
            let (kept, removed) = destroy_keep(graph, &routes, params.destroy_fraction, rng);
            let kept_routes: Vec<&[usize]> = kept.iter().map(|&k| routes[k].as_slice()).collect();
            let mut state = RepairState::new(graph, &kept_routes, removed);
            let generated = repair_loop(&mut state, graph, &pi, params, clock);
            let mut pass = PfihPass {
                start_value: Some(start_sol.value),
                start_uses_artificial: start_sol.uses_artificial,
                routes: routes.len(),
                removed,
                generated: generated.len(),
                ..Default::default()
            };
            for route in generated {
                let Some(col) = Column::from_route(graph, &route, Origin::Pfih) else {
                    continue;
                };
                let rc = rmp.column_reduced_cost(&col, duals);
                if let Some(j) = rmp.add_column(col) {
                    out.new_columns.push(j);
                    pass.added += 1;
                    if rc < -1e-9 {
                        pass.negative_true_rc += 1;
                    } else if rc > 1e-9 {
                        pass.positive_true_rc += 1;
                    }
                }
            }
            out.log.passes.push(pass);
        }
    }
    out.solution = solve_restricted_ip(rmp, None, rmh, clock).filter(|s| !s.uses_artificial);
    out.log.new_columns = out.new_columns.len();
    out.log.primal = out.solution.as_ref().map(|s| s.value);
    out.log.time = clock.elapsed() - start;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::synth::line_instance;
    use rand::SeedableRng;

    #[test]
    fn weight_examples() {
        assert_eq!(heuristic_weight(RowKind::Cover, 10.0, 0.5, 0.3), 2.0);
        assert_eq!(heuristic_weight(RowKind::Pack, 10.0, 0.5, 0.3), 0.0);
        assert_eq!(heuristic_weight(RowKind::Cover, 10.0, 0.5, 0.9), 0.0);
        assert_eq!(heuristic_weight(RowKind::Pack, 10.0, 0.5, 0.9), -4.0);
        assert_eq!(heuristic_weight(RowKind::Partition, 10.0, 0.5, 0.9), -4.0);
    }

    #[test]
    fn expected_visits_schedule() {
        assert_eq!(expected_visits(0, 4), 0.125);
        assert_eq!(expected_visits(2, 4), 0.5);
        assert_eq!(expected_visits(4, 4), 1.0);
    }

    #[test]
    fn usage_recurrence() {
        let inst = line_instance(&[1.0, 2.0, 3.0], 100.0);
        let g = RoutingGraph::build(&inst, 0).unwrap();
        let mut st = RepairState::new(&g, &[], 2);
        let cols: Vec<Vec<usize>> = (0..10)
            .map(|k| if k < 2 { vec![0, 1, 4] } else { vec![0, 2, 4] })
            .collect();
        st.usage[1] = 0.5;
        st.record(&cols);
        assert!((st.usage[1] - 0.7).abs() < 1e-15);
        st.record(&[]);
        assert_eq!(st.iteration, 2);
        assert!((st.usage[1] - 0.7).abs() < 1e-15);
        assert_eq!(st.expected(), 1.0);
    }

    #[test]
    fn zero_weights_leave_costs() {
        let inst = line_instance(&[1.0, 2.0, 3.0], 100.0);
        let g = RoutingGraph::build(&inst, 0).unwrap();
        let st = RepairState::new(&g, &[&[0, 1, 4]], 1);
        let pi: Vec<f64> = (0..g.arcs.len()).map(|a| a as f64).collect();
        let c = modify_pricing_objective(&st, &g, &pi, 0.0, 0.0);
        assert!(c.iter().zip(&g.arcs).all(|(m, a)| *m == a.cost));
        assert!(!st.repair_nodes.contains(1));
        assert!(st.repair_nodes.contains(0) && st.repair_nodes.contains(4));
    }

    #[test]
    fn destroy_counts() {
        let inst = line_instance(&[1.0, 2.0, 3.0, 4.0, 5.0], 100.0);
        let g = RoutingGraph::build(&inst, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let one = vec![vec![0, 1, 6]];
        assert_eq!(destroy_keep(&g, &one, 0.5, &mut rng), (vec![0], 0));
        let five: Vec<Vec<usize>> = (1..=5).map(|c| vec![0, c, 6]).collect();
        let (kept, removed) = destroy_keep(&g, &five, 0.5, &mut rng);
        assert_eq!((kept.len(), removed), (3, 2));
    }

    #[test]
    fn params_validation() {
        assert!(PfihParams::default().check().is_ok());
        let bad = PfihParams {
            destroy_fraction: 1.0,
            ..Default::default()
        };
        assert!(bad.check().is_err());
    }
}
