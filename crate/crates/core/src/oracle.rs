//! Brute-force ground truth for tiny instances.

use thiserror::Error;

use crate::clock::Clock;
use crate::graph::{GraphView, RoutingGraph};
use crate::instance::{check_path, round2, Instance};
use crate::lp::LpStatus;
use crate::master::{Column, Origin, Rmp};

/// Largest number of customers plus slots the oracle accepts.
pub const MAX_ORACLE_NODES: usize = 14;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("instance has {0} customers and slots, oracle limit is {MAX_ORACLE_NODES}")]
    TooLarge(usize),
    #[error("instance is infeasible")]
    Infeasible,
}

fn guard(inst: &Instance) -> Result<(), OracleError> {
    let size = inst.customers().count() + inst.slots().count();
    if size > MAX_ORACLE_NODES {
        return Err(OracleError::TooLarge(size));
    }
    Ok(())
}

/// All elementary feasible routes in DFS order (lexicographic node
/// sequence).
pub fn enumerate_routes(inst: &Instance, graph: &RoutingGraph) -> Result<Vec<Column>, OracleError> {
    guard(inst)?;
    let end = inst.end_depot();
    let mut out = Vec::new();
    let mut path = vec![0];
    let mut used = vec![false; end + 1];
    used[0] = true;
    dfs(inst, graph, &mut path, &mut used, &mut out);
    debug_assert!(out.iter().all(|c| *c.route.last().unwrap() == end));
    Ok(out)
}

fn dfs(inst: &Instance, graph: &RoutingGraph, path: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Column>) {
    let end = inst.end_depot();
    let last = *path.last().unwrap();
    for j in 1..=end {
        if used[j] || graph.arc_id(last, j).is_none() {
            continue;
        }
        path.push(j);
        if check_path(inst, path).is_ok() {
            if j == end {
                if path.len() > 2 {
                    out.push(Column::from_route(graph, path, Origin::Pricing).expect("arcs exist"));
                }
            } else {
                used[j] = true;
                dfs(inst, graph, path, used, out);
                used[j] = false;
            }
        }
        path.pop();
    }
}

pub fn route_cost(inst: &Instance, route: &[usize]) -> f64 {
    route.windows(2).map(|w| inst.distance(w[0], w[1])).sum()
}

/// Minimum of `costs` summed over a route's arcs among enumerated routes
/// admitted by `view`, or `None` if none is.
pub fn min_reduced_cost(
    graph: &RoutingGraph,
    view: &GraphView,
    routes: &[Column],
    costs: &[f64],
) -> Option<(f64, Vec<usize>)> {
    routes
        .iter()
        .filter(|c| view.admits(graph, &c.route))
        .map(|c| {
            let rc: f64 = graph.route_arcs(&c.route).unwrap().iter().map(|&a| costs[a]).sum();
            (rc, c.route.clone())
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactSolution {
    pub value: f64,
    pub routes: Vec<Vec<usize>>,
}

struct Search<'a> {
    inst: &'a Instance,
    routes: &'a [Column],
    /// Route indices covering each customer, cheapest first.
    by_customer: Vec<Vec<usize>>,
    slot_capacity: Vec<u32>,
    best: Option<(f64, Vec<usize>)>,
}

impl Search<'_> {
    fn run(&mut self, covered: &mut [u32], slot_use: &mut [u32], chosen: &mut Vec<usize>, cost: f64) {
        if self.best.as_ref().is_some_and(|b| cost >= b.0 - 1e-9) {
            return;
        }
        let Some(c) = self.inst.customers().map(|c| c.id).find(|&c| covered[c] == 0) else {
            self.best = Some((cost, chosen.clone()));
            return;
        };
        if chosen.len() >= self.inst.vehicles {
            return;
        }
        for k in 0..self.by_customer[c].len() {
            let r = self.by_customer[c][k];
            let col = &self.routes[r];
            if self.best.as_ref().is_some_and(|b| cost + col.cost >= b.0 - 1e-9) {
                break;
            }
            let fits = col
                .visits
                .iter()
                .all(|&(n, v)| !self.inst.node(n).is_slot() || slot_use[n] + v <= self.slot_capacity[n]);
            if !fits || chosen.contains(&r) {
                continue;
            }
            for &(n, v) in &col.visits {
                if self.inst.node(n).is_slot() {
                    slot_use[n] += v;
                } else {
                    covered[n] += v;
                }
            }
            chosen.push(r);
            self.run(covered, slot_use, chosen, cost + col.cost);
            chosen.pop();
            for &(n, v) in &col.visits {
                if self.inst.node(n).is_slot() {
                    slot_use[n] -= v;
                } else {
                    covered[n] -= v;
                }
            }
        }
    }
}

/// Optimal integer solution by exhaustive set-cover search over all
/// enumerated routes.
pub fn solve_exact_tiny(inst: &Instance) -> Result<ExactSolution, OracleError> {
    let graph = RoutingGraph::build(inst, 0).map_err(|_| OracleError::Infeasible)?;
    let routes = enumerate_routes(inst, &graph)?;
    let n = inst.end_depot();
    let mut by_customer = vec![Vec::new(); n + 1];
    for (r, col) in routes.iter().enumerate() {
        for &(c, _) in &col.visits {
            by_customer[c].push(r);
        }
    }
    for list in &mut by_customer {
        list.sort_by(|&a, &b| routes[a].cost.total_cmp(&routes[b].cost).then(a.cmp(&b)));
    }
    let slot_capacity = (0..=n)
        .map(|i| inst.node(i).slot_capacity.unwrap_or(u32::MAX))
        .collect();
    let mut search = Search {
        inst,
        routes: &routes,
        by_customer,
        slot_capacity,
        best: None,
    };
    search.run(&mut vec![0; n + 1], &mut vec![0; n + 1], &mut Vec::new(), 0.0);
    let (value, chosen) = search.best.ok_or(OracleError::Infeasible)?;
    let mut routes: Vec<Vec<usize>> = chosen.iter().map(|&r| routes[r].route.clone()).collect();
    routes.sort();
    Ok(ExactSolution {
        value: round2(value),
        routes,
    })
}

/// Master LP over every enumerated route (no cuts).
pub fn full_enumeration_lp(inst: &Instance) -> Result<f64, OracleError> {
    let graph = RoutingGraph::build(inst, 0).map_err(|_| OracleError::Infeasible)?;
    let routes = enumerate_routes(inst, &graph)?;
    let mut rmp = Rmp::new(inst, &graph);
    for c in routes {
        rmp.add_column(c);
    }
    let lp = rmp.solve_lp(None, &Clock::default());
    if lp.status != LpStatus::Optimal || lp.uses_artificial(&rmp) {
        return Err(OracleError::Infeasible);
    }
    Ok(lp.objective)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::synth::{line_instance, toy_t1};

    #[test]
    fn single_customer_single_route() {
        let inst = line_instance(&[4.0], 100.0);
        let g = RoutingGraph::build(&inst, 0).unwrap();
        let routes = enumerate_routes(&inst, &g).unwrap();
        assert_eq!(routes.len(), 1);
        assert_eq!(routes[0].route, vec![0, 1, 2]);
        assert_eq!(routes[0].cost, 8.0);
    }

    #[test]
    fn far_customer_routes_use_a_slot() {
        let inst = toy_t1();
        let g = RoutingGraph::build(&inst, 0).unwrap();
        let routes = enumerate_routes(&inst, &g).unwrap();
        let serving: Vec<_> = routes.iter().filter(|c| c.route.contains(&4)).collect();
        assert!(!serving.is_empty());
        assert!(serving.iter().all(|c| c.route.iter().any(|&i| inst.node(i).is_slot())));
    }

    #[test]
    fn toy_t1_route_count_golden() {
        let inst = toy_t1();
        let g = RoutingGraph::build(&inst, 0).unwrap();
        let routes = enumerate_routes(&inst, &g).unwrap();
        assert_eq!(routes.len(), 239);
    }

    #[test]
    fn unique_cover() {
        let inst = line_instance(&[4.0], 100.0);
        let sol = solve_exact_tiny(&inst).unwrap();
        assert_eq!(sol.routes, vec![vec![0, 1, 2]]);
        assert_eq!(sol.value, 8.0);
    }

    #[test]
    fn fleet_too_small_is_infeasible() {
        let mut inst = line_instance(&[4.0, 5.0], 100.0);
        inst.capacity = 1.0;
        inst.vehicles = 1;
        assert_eq!(solve_exact_tiny(&inst), Err(OracleError::Infeasible));
    }

    #[test]
    fn contested_slot_costs_more_than_uncapacitated() {
        // Both customers need a recharge on the way back; the well placed
        // slot can serve only one of them.
        use crate::instance::{Node, NodeKind};
        let mut inst = line_instance(&[30.0, 32.0], 200.0);
        inst.battery = 45.0;
        inst.capacity = 1.0;
        for (loc, y) in [(0, 0.0), (1, 6.0)] {
            let mut s = Node::new(inst.nodes.len(), NodeKind::ChargerSlot, 20.0, y);
            s.tw_close = 200.0;
            s.charger_location = Some(loc);
            s.slot_capacity = Some(1);
            inst.nodes.push(s);
        }
        inst.check().unwrap();
        let capped = solve_exact_tiny(&inst).unwrap();
        let free = solve_exact_tiny(&inst.with_slot_capacity(u32::MAX)).unwrap();
        assert_eq!(free.value, 124.0);
        assert!(capped.value > free.value);
    }

    #[test]
    fn guard_refuses_large() {
        let xs: Vec<f64> = (1..=15).map(|x| x as f64).collect();
        let inst = line_instance(&xs, 1000.0);
        let g = RoutingGraph::build(&inst, 0).unwrap();
        assert_eq!(enumerate_routes(&inst, &g), Err(OracleError::TooLarge(15)));
    }
}
