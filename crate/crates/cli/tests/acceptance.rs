//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::collections::BTreeSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use evcts::clock::Clock;
use evcts::cuts::separate_two_path;
use evcts::graph::{Arc, RoutingGraph};
use evcts::instance::synth::{desk_suite, line_instance, tiny_instance, tiny_reachable_instance, toy_t1, TinySpec};
use evcts::instance::{generate_instance, validate_solution, write_instance, Instance, Node, NodeKind};
use evcts::labeling::{extend, solve_pricing, Label, PricingRequest};
use evcts::master::{Cut, Rmp};
use evcts::oracle::{enumerate_routes, min_reduced_cost, solve_exact_tiny, ExactSolution, OracleError};
use evcts::pfih::{expected_visits, heuristic_weight, RepairState, RowKind};
use evcts::search::{solve, PfihStrategy, RunReport, RunStatus, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

struct TinyCase {
    inst: Instance,
    exact: ExactSolution,
    report: RunReport,
}

fn tiny_spec(seed: u64) -> TinySpec {
    TinySpec {
        customers: 4 + (seed % 5) as usize,
        chargers: 1 + (seed % 3) as usize,
        slots_per_charger: 1 + (seed % 2) as usize,
        vehicles: 2 + (seed % 2) as usize,
    }
}

/// The first 50 generated tiny instances that have a feasible solution,
/// solved by both the enumeration oracle and the solver.
fn tiny_suite() -> Result<(Vec<TinyCase>, f64), String> {
    let mut cases = Vec::new();
    let mut solve_time = 0.0;
    for seed in 0..2000u64 {
        if cases.len() == 50 {
            break;
        }
        let inst = tiny_reachable_instance(seed, tiny_spec(seed));
        let exact = match solve_exact_tiny(&inst) {
            Ok(e) => e,
            Err(OracleError::Infeasible) => continue,
            Err(e) => return Err(format!("{}: {e}", inst.name)),
        };
        let start = Instant::now();
        let report = solve(&inst, &inst.name, &SolverConfig::default());
        solve_time += start.elapsed().as_secs_f64();
        cases.push(TinyCase { inst, exact, report });
    }
    ensure!(cases.len() == 50, "only {} feasible tiny instances", cases.len());
    Ok((cases, solve_time))
}

fn oracle_equivalence(cases: &[TinyCase], solve_time: f64) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut branched = 0;
    for c in cases {
        let r = &c.report;
        ensure!(r.status == RunStatus::Optimal, "{}: status {:?}", c.inst.name, r.status);
        let primal = r.primal.ok_or_else(|| format!("{}: no primal", c.inst.name))?;
        let diff = (primal - c.exact.value).abs();
        ensure!(
            diff <= 1e-6,
            "{}: solver {primal} oracle {}",
            c.inst.name,
            c.exact.value
        );
        worst = worst.max(diff);
        ensure!(r.gap == Some(0.0), "{}: gap {:?}", c.inst.name, r.gap);
        let gap_cell = r.csv_row().split(',').nth(7).unwrap().to_string();
        ensure!(gap_cell == "0.00", "{}: reported gap {gap_cell}", c.inst.name);
        ensure!(
            validate_solution(&c.inst, &r.routes).passed(),
            "{}: invalid routes",
            c.inst.name
        );
        branched += usize::from(r.nodes > 1);
    }
    ensure!(solve_time < 120.0, "solves took {solve_time:.1} s");
    Ok(format!(
        "{} instances, max |diff| {worst:.1e}, {branched} needed branching, {solve_time:.1} s",
        cases.len()
    ))
}

fn random_costs(g: &RoutingGraph, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let duals: Vec<f64> = (0..g.num_nodes())
        .map(|i| {
            if g.is_customer(i) {
                rng.random_range(0.0..60.0)
            } else {
                0.0
            }
        })
        .collect();
    let slot_duals: Vec<f64> = (0..g.num_nodes())
        .map(|i| {
            if g.is_slot(i) {
                rng.random_range(-10.0..0.0)
            } else {
                0.0
            }
        })
        .collect();
    let fleet = rng.random_range(-20.0..0.0);
    g.arcs
        .iter()
        .map(|a| a.cost - duals[a.to] - slot_duals[a.to] - if a.from == 0 { fleet } else { 0.0 })
        .collect()
}

fn labeling_min(g: &RoutingGraph, costs: &[f64], dominance: bool) -> Result<Option<f64>, String> {
    let view = g.full_view();
    let mut req = PricingRequest::new(g, &view, costs);
    req.threshold = f64::INFINITY;
    req.dominance = dominance;
    let r = solve_pricing(&req);
    ensure!(!r.truncated, "labeling truncated");
    Ok(r.best().map(|c| c.reduced_cost))
}

fn labeling_correctness() -> Outcome {
    let mut checked = 0;
    let mut with_route = 0;
    let mut max_nodes = 0;
    for k in 0..220u64 {
        let spec = TinySpec {
            customers: 4 + (k % 4) as usize,
            chargers: 1 + (k % 2) as usize,
            slots_per_charger: if k % 2 == 0 { 2 } else { 1 },
            vehicles: 3,
        };
        let inst = tiny_instance(1000 + k, spec);
        let g = RoutingGraph::build(&inst, 0).map_err(|e| e.to_string())?;
        ensure!(g.num_nodes() <= 12, "{} nodes", g.num_nodes());
        max_nodes = max_nodes.max(g.num_nodes());
        let routes = enumerate_routes(&inst, &g).map_err(|e| e.to_string())?;
        let costs = random_costs(&g, k);
        let oracle = min_reduced_cost(&g, &g.full_view(), &routes, &costs).map(|x| x.0);
        let on = labeling_min(&g, &costs, true)?;
        let off = labeling_min(&g, &costs, false)?;
        match (oracle, on, off) {
            (None, None, None) => {}
            (Some(a), Some(b), Some(c)) => {
                ensure!((a - b).abs() <= 1e-9, "problem {k}: enumeration {a} labeling {b}");
                ensure!((b - c).abs() <= 1e-9, "problem {k}: dominance on {b} off {c}");
                with_route += 1;
            }
            other => return Err(format!("problem {k}: {other:?}")),
        }
        checked += 1;
    }
    Ok(format!(
        "{checked} problems (up to {max_nodes} nodes), {with_route} with a route"
    ))
}

/// Depot at 0, customers at x = 5 (window opens 8) and x = 13, one slot at
/// x = 9 closing at 18; battery 20, unit rates, no service times.
fn ref_instance(second_open: f64) -> Instance {
    let mut inst = line_instance(&[5.0, 13.0], 100.0);
    inst.nodes[1].tw_open = 8.0;
    inst.nodes[1].service_time = 0.0;
    inst.nodes[2].service_time = 0.0;
    inst.nodes[2].tw_open = second_open;
    let mut s = Node::new(3, NodeKind::ChargerSlot, 9.0, 0.0);
    s.tw_close = 18.0;
    s.charger_location = Some(0);
    s.slot_capacity = Some(1);
    inst.nodes.push(s);
    inst.battery = 20.0;
    inst
}

fn line_arc(inst: &Instance, i: usize, j: usize) -> Arc {
    let d = (inst.node(i).x - inst.node(j).x).abs();
    Arc {
        from: i,
        to: j,
        dist: d,
        time: d + inst.node(i).service_time,
        energy: d * inst.consumption_rate,
        cost: d,
    }
}

/// Expected (tmin, tmax, rtmax, rch, load) after each step.
type Step = (usize, Option<(f64, f64, f64, u8, f64)>);

fn run_chain(inst: &Instance, path: &[Step]) -> Result<(), String> {
    let g = RoutingGraph::build(inst, 0).map_err(|e| e.to_string())?;
    let mut label = Label::depot(&g);
    for &(j, want) in path {
        let arc = line_arc(inst, label.node, j);
        let next = extend(&g, &label, &arc, arc.cost, None);
        match (next, want) {
            (None, None) => return Ok(()),
            (Some(l), Some((tmin, tmax, rtmax, rch, load))) => {
                let got = (l.tmin, l.tmax, l.rtmax, l.rch, l.load);
                ensure!(
                    (l.tmin - tmin).abs() <= 1e-12
                        && (l.tmax - tmax).abs() <= 1e-12
                        && (l.rtmax - rtmax).abs() <= 1e-12
                        && l.rch == rch
                        && l.load == load,
                    "{} -> {j}: got {got:?}, expected {:?}",
                    label.node,
                    (tmin, tmax, rtmax, rch, load)
                );
                label = l;
            }
            (got, want) => return Err(format!("{} -> {j}: got {got:?}, expected {want:?}", label.node)),
        }
    }
    Ok(())
}

fn ref_fidelity() -> Outcome {
    // no recharge yet: tMin = max(e_j, tMin + t), rtMax accumulates h_ij
    let a = ref_instance(0.0);
    run_chain(
        &a,
        &[(1, Some((8.0, 8.0, 5.0, 0, 1.0))), (3, Some((12.0, 12.0, 9.0, 1, 1.0)))],
    )?;
    // leaving the slot: S = min(20 - 12 - 4, min(9, 18 - 12)) = 4, tMax is
    // capped by the slot deadline 18 + 4 = 22; on the way home X = 9 + 13 - 20 = 2
    let b = ref_instance(20.0);
    let end = b.end_depot();
    run_chain(
        &b,
        &[
            (1, Some((8.0, 8.0, 5.0, 0, 1.0))),
            (3, Some((12.0, 12.0, 9.0, 1, 1.0))),
            (2, Some((20.0, 22.0, 9.0, 1, 2.0))),
            (end, Some((35.0, 35.0, 20.0, 1, 2.0))),
        ],
    )?;
    // 13 + 8 = 21 > H = 20 without a recharge; reaching the slot at 24 > 18
    run_chain(&a, &[(2, Some((13.0, 13.0, 13.0, 0, 1.0))), (1, None)])?;
    run_chain(&b, &[(2, Some((20.0, 20.0, 13.0, 0, 1.0))), (3, None)])?;
    Ok("rch = 0 chain, slot-departure chain, battery and slot-deadline infeasibility".into())
}

fn weight_fidelity() -> Outcome {
    // (E, U, avg(c)) -> (cover, pack, partition), substituted by hand
    let table: [(f64, f64, f64, f64, f64, f64); 12] = [
        (0.5, 0.25, 8.0, 2.0, 0.0, 2.0),
        (0.25, 0.5, 8.0, 0.0, -2.0, -2.0),
        (1.0, 1.0, 3.5, 0.0, 0.0, 0.0),
        (0.0625, 0.0, 16.0, 1.0, 0.0, 1.0),
        (0.75, 1.5, 4.0, 0.0, -3.0, -3.0),
        (1.0, 0.125, 2.5, 2.1875, 0.0, 2.1875),
        (0.125, 0.875, 10.0, 0.0, -7.5, -7.5),
        (0.5, 0.0, 0.0, 0.0, 0.0, 0.0),
        (0.375, 0.25, 12.25, 1.53125, 0.0, 1.53125),
        (0.875, 2.0, 6.0, 0.0, -6.75, -6.75),
        (0.03125, 0.03125, 100.0, 0.0, 0.0, 0.0),
        (0.5, 0.375, 1.75, 0.21875, 0.0, 0.21875),
    ];
    for (e, u, avg, cover, pack, part) in table {
        let got = (
            heuristic_weight(RowKind::Cover, avg, e, u),
            heuristic_weight(RowKind::Pack, avg, e, u),
            heuristic_weight(RowKind::Partition, avg, e, u),
        );
        ensure!(got == (cover, pack, part), "({e}, {u}, {avg}): got {got:?}");
    }
    for big_r in [1usize, 2, 4, 8, 16] {
        ensure!(expected_visits(0, big_r) == 0.5 / big_r as f64, "E_0 for R = {big_r}");
        for r in 1..=big_r {
            ensure!(
                expected_visits(r, big_r) == r as f64 / big_r as f64,
                "E_{r} for R = {big_r}"
            );
        }
        ensure!(expected_visits(big_r, big_r) == 1.0, "E_R for R = {big_r}");
    }
    let g = RoutingGraph::build(&toy_t1(), 0).map_err(|e| e.to_string())?;
    let end = g.end_depot();
    let mut st = RepairState::new(&g, &[], 8);
    st.usage[1] = 0.5;
    let mut routes = vec![vec![0, 1, end], vec![0, 1, 2, end]];
    routes.extend((0..6).map(|_| vec![0, 3, end]));
    st.record(&routes);
    ensure!(st.usage[1] == 0.75, "U after 2 of 8 columns: {}", st.usage[1]);
    ensure!(st.usage[3] == 0.75 && st.usage[2] == 0.125, "U: {:?}", &st.usage[..4]);
    ensure!(st.iteration == 1 && st.expected() == 0.125, "E after one iteration");
    let mut st = RepairState::new(&g, &[], 10);
    st.usage[1] = 0.5;
    let mut routes = vec![vec![0, 1, end], vec![0, 1, 2, end]];
    routes.extend((0..8).map(|_| vec![0, 3, end]));
    st.record(&routes);
    ensure!(
        (st.usage[1] - 0.7).abs() <= 1e-15,
        "worked example gives {}",
        st.usage[1]
    );
    Ok("12 weight triples, E recurrence for R = 1..16, U recurrence".into())
}

fn entries(routes: &[Vec<usize>], set: &BTreeSet<usize>) -> usize {
    routes
        .iter()
        .flat_map(|r| r.windows(2))
        .filter(|w| !set.contains(&w[0]) && set.contains(&w[1]))
        .count()
}

fn cut_prone(seed: u64, capacity: f64, narrow: bool) -> Instance {
    let spec = TinySpec {
        customers: 7,
        chargers: 1,
        slots_per_charger: 2,
        vehicles: 5,
    };
    let mut inst = tiny_instance(seed, spec);
    inst.capacity = capacity;
    if narrow {
        for c in 1..=7 {
            let open = inst.nodes[c].tw_open;
            inst.nodes[c].tw_close = inst.nodes[c].tw_close.min(open + 20.0);
        }
    }
    inst
}

fn cut_validity(cases: &[TinyCase]) -> Outcome {
    let mut cuts = 0;
    let mut lp_pairs = 0;
    let mut check =
        |inst: &Instance, sets: Vec<BTreeSet<usize>>, optimum: Option<&[Vec<usize>]>| -> Result<(), String> {
            let g = RoutingGraph::build(inst, 0).map_err(|e| e.to_string())?;
            let routes = enumerate_routes(inst, &g).map_err(|e| e.to_string())?;
            for set in sets {
                // a feasible solution with a single entry would serve the whole set on one route
                let one = routes.iter().any(|r| set.iter().all(|&c| r.visits_of(c) > 0));
                ensure!(!one, "{}: cut {set:?} is served by a single route", inst.name);
                if let Some(opt) = optimum {
                    ensure!(entries(opt, &set) >= 2, "{}: optimum enters {set:?} once", inst.name);
                }
                cuts += 1;
            }
            Ok(())
        };
    for c in cases {
        let sets = c
            .report
            .cuts
            .iter()
            .map(|k| k.customers.iter().copied().collect())
            .collect();
        check(&c.inst, sets, Some(&c.exact.routes))?;
        if let (Some(before), Some(after)) = (c.report.root.lp_before_cuts, c.report.root.dual) {
            ensure!(after >= before - 1e-9, "{}: bound {before} -> {after}", c.inst.name);
            lp_pairs += 1;
        }
    }
    for seed in 0..60 {
        for (capacity, narrow) in [(10.0, false), (8.0, true)] {
            let inst = cut_prone(seed, capacity, narrow);
            let g = RoutingGraph::build(&inst, 0).map_err(|e| e.to_string())?;
            let routes = enumerate_routes(&inst, &g).map_err(|e| e.to_string())?;
            let mut rmp = Rmp::new(&inst, &g);
            for r in &routes {
                rmp.add_column(r.clone());
            }
            let clock = Clock::default();
            let lp = rmp.solve_lp(None, &clock);
            let sep = separate_two_path(&lp, &rmp, &g, &clock);
            let optimum = solve_exact_tiny(&inst).ok();
            let sets = sep.cuts.iter().map(|k| k.customers.iter().copied().collect()).collect();
            check(&inst, sets, optimum.as_ref().map(|o| o.routes.as_slice()))?;
            for k in &sep.cuts {
                rmp.add_cut(Cut {
                    customers: k.customers.clone(),
                });
            }
            let after = rmp.solve_lp(None, &clock).objective;
            ensure!(
                after >= lp.objective - 1e-9,
                "{}: LP {} -> {after}",
                inst.name,
                lp.objective
            );
            lp_pairs += 1;
        }
    }
    ensure!(cuts > 0, "no cut was emitted");
    Ok(format!("{cuts} cuts valid, {lp_pairs} bound comparisons"))
}

fn pfih_direction() -> Outcome {
    let root_only = |pfih| SolverConfig {
        pfih,
        max_nodes: 1,
        ..SolverConfig::default()
    };
    let mut base_gaps = Vec::new();
    let mut pfih_gaps = Vec::new();
    let mut positive = 0;
    let mut with_positive = 0;
    let mut skipped = 0;
    for inst in desk_suite(14) {
        let off = solve(&inst, &inst.name, &root_only(PfihStrategy::Off));
        let after = solve(&inst, &inst.name, &root_only(PfihStrategy::AfterCuts));
        positive += after.stats.pfih_positive_rc_columns;
        with_positive += usize::from(after.stats.pfih_positive_rc_columns > 0);
        match (
            off.root.gap.filter(|g| g.is_finite()),
            after.root.gap.filter(|g| g.is_finite()),
        ) {
            (Some(a), Some(b)) => {
                base_gaps.push(a);
                pfih_gaps.push(b);
            }
            _ => skipped += 1,
        }
    }
    ensure!(
        base_gaps.len() >= 10,
        "only {} instances with a completed root",
        base_gaps.len()
    );
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (b, a) = (mean(&base_gaps), mean(&pfih_gaps));
    let detail = format!(
        "{} instances ({skipped} skipped), mean root gap {b:.3}% baseline vs {a:.3}% after cuts, \
         {positive} positive reduced cost columns on {with_positive} instances",
        base_gaps.len()
    );
    ensure!(a <= b, "{detail}");
    ensure!(positive > 0, "{detail}");
    Ok(detail)
}

fn generator_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let rates = [1u64, 2, 4, 5, 8, 10, 16, 20, 40];
    let mut with_slots = 0;
    for k in 0..100u64 {
        let l0 = rng.random_range(20_000u64..=150_000);
        let t0 = rng.random_range(0..l0 / 2);
        let battery = rng.random_range(20u64..=200);
        let g = rates[rng.random_range(0..rates.len())];
        let mut depot = Node::new(0, NodeKind::Depot, 0.0, 0.0);
        depot.tw_close = l0 as f64 / 100.0;
        let mut cust = Node::new(1, NodeKind::Customer, 1.0, 0.0);
        cust.demand = 1.0;
        cust.tw_close = depot.tw_close;
        let mut st = Node::new(2, NodeKind::Station, t0 as f64 / 100.0, 0.0);
        st.tw_close = depot.tw_close;
        let base = Instance {
            name: format!("g{k}"),
            vehicles: 1,
            capacity: 10.0,
            battery: battery as f64,
            recharge_rate: g as f64,
            consumption_rate: 1.0,
            seed: None,
            rng: None,
            nodes: vec![depot, cust, st],
        };
        // integer cents: slot length 0.8 B / g, available l0 - 2 t0
        let len = 80 * battery / g;
        let avail = l0 - 2 * t0;
        let count = avail / len;
        let third = generate_instance(&base, 0.33, k).map_err(|e| format!("tuple {k}: {e}"))?;
        let half = generate_instance(&base, 0.50, k).map_err(|e| format!("tuple {k}: {e}"))?;
        let plan = &third.plans[0];
        ensure!(
            plan.slot_len == len as f64 / 100.0,
            "tuple {k}: slot length {} vs {len} cents",
            plan.slot_len
        );
        ensure!(plan.count as u64 == count, "tuple {k}: {} slots vs {count}", plan.count);
        for w in plan.starts.windows(2) {
            ensure!(((w[1] - w[0]) * 100.0).round() as u64 == len, "tuple {k}: slot spacing");
        }
        if let Some(last) = plan.starts.last() {
            ensure!(
                ((last + plan.slot_len) * 100.0).round() as u64 <= l0 - t0,
                "tuple {k}: last slot ends after the return deadline"
            );
        }
        let starts =
            |inst: &Instance| -> BTreeSet<u64> { inst.slots().map(|n| (n.tw_open * 100.0).round() as u64).collect() };
        let (s33, s50) = (starts(&third.instance), starts(&half.instance));
        ensure!(
            s33.len() as u64 == (33 * count).div_ceil(100),
            "tuple {k}: {} open of {count} at 0.33",
            s33.len()
        );
        ensure!(
            s50.len() as u64 == count.div_ceil(2),
            "tuple {k}: {} open of {count} at 0.50",
            s50.len()
        );
        ensure!(s33.is_subset(&s50), "tuple {k}: superset property");
        with_slots += usize::from(count > 0);
    }
    Ok(format!("100 tuples, {with_slots} with at least one slot"))
}

/// Two customers that each need a recharge on the way home and one slot
/// that suits both better than the other.
fn contested(x: f64, y: f64, battery: f64) -> Instance {
    let mut inst = line_instance(&[x, x + 2.0], 200.0);
    inst.name = format!("contested-{x}-{y}");
    inst.battery = battery;
    inst.capacity = 1.0;
    for (loc, sy) in [(0, 0.0), (1, y)] {
        let mut s = Node::new(inst.nodes.len(), NodeKind::ChargerSlot, 20.0, sy);
        s.tw_close = 200.0;
        s.charger_location = Some(loc);
        s.slot_capacity = Some(1);
        inst.nodes.push(s);
    }
    inst
}

fn capacity_impact() -> Outcome {
    let family = [
        (30.0, 6.0, 45.0),
        (28.0, 6.0, 45.0),
        (27.0, 6.0, 45.0),
        (30.0, 8.0, 45.0),
        (29.0, 5.0, 44.0),
        (31.0, 7.0, 46.0),
    ];
    let mut lines = Vec::new();
    for (x, y, battery) in family {
        let inst = contested(x, y, battery);
        inst.check().map_err(|e| e.to_string())?;
        let free_inst = inst.with_slot_capacity(u32::MAX);
        let capped = solve_exact_tiny(&inst).map_err(|e| format!("{}: {e}", inst.name))?;
        let free = solve_exact_tiny(&free_inst).map_err(|e| format!("{}: {e}", inst.name))?;
        ensure!(
            capped.value > free.value,
            "{}: {} vs {}",
            inst.name,
            capped.value,
            free.value
        );
        for (i, want) in [(&inst, capped.value), (&free_inst, free.value)] {
            let r = solve(i, &i.name, &SolverConfig::default());
            ensure!(
                r.primal.is_some_and(|p| (p - want).abs() <= 1e-6),
                "{}: solver {:?} vs {want}",
                i.name,
                r.primal
            );
        }
        lines.push(format!("{:.2}>{:.2}", capped.value, free.value));
    }
    Ok(format!("{} instances: {}", family.len(), lines.join(" ")))
}

fn run_cli(args: &[&str]) -> Result<i32, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_evcts"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    out.status.code().ok_or_else(|| "killed".into())
}

fn same_files(a: &Path, b: &Path) -> Result<(), String> {
    let (x, y) = (
        fs::read(a).map_err(|e| e.to_string())?,
        fs::read(b).map_err(|e| e.to_string())?,
    );
    ensure!(x == y, "{} and {} differ", a.display(), b.display());
    Ok(())
}

fn determinism() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let d = |p: &str| dir.path().join(p);
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let base = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/base-c1-25.txt");
    for out in ["g1", "g2"] {
        let code = run_cli(&[
            "generate",
            "--base",
            &s(&base),
            "--fraction",
            "both",
            "--seed",
            "7",
            "--out",
            &s(&d(out)),
        ])?;
        ensure!(code == 0, "generate exit {code}");
    }
    let mut generated: Vec<String> = fs::read_dir(d("g1"))
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    generated.sort();
    for f in &generated {
        same_files(&d("g1").join(f), &d("g2").join(f))?;
    }
    let medium = d("g1").join(&generated[0]);
    let toy = d("t1.txt");
    fs::write(&toy, write_instance(&toy_t1())).map_err(|e| e.to_string())?;
    for run in ["a", "b"] {
        for (inst, pfih, tag) in [
            (&medium, "after", "m"),
            (&toy, "during", "t"),
            (&medium, "before", "mt"),
        ] {
            let report = d(&format!("{run}/{tag}.json"));
            let mut args = vec![
                "solve".to_string(),
                "--instance".into(),
                s(inst),
                "--pfih".into(),
                pfih.into(),
                "--seed".into(),
                "5".into(),
                "--report".into(),
                s(&report),
            ];
            if tag == "mt" {
                args.extend(["--time-limit".into(), "0.3".into()]);
            }
            let args: Vec<&str> = args.iter().map(String::as_str).collect();
            let code = run_cli(&args)?;
            ensure!(code == 0, "solve exit {code}");
        }
        let code = run_cli(&[
            "bench",
            "--instances",
            &s(&toy),
            &s(&medium),
            "--strategies",
            "off,after",
            "--reps",
            "2",
            "--threads",
            if run == "a" { "1" } else { "3" },
            "--out",
            &s(&d(&format!("{run}/bench.csv"))),
        ])?;
        ensure!(code == 0, "bench exit {code}");
    }
    for f in ["m.json", "m.csv", "t.json", "t.csv", "mt.json", "mt.csv", "bench.csv"] {
        same_files(&d("a").join(f), &d("b").join(f))?;
    }
    let inst = &desk_suite(2)[1];
    let cfg = SolverConfig {
        pfih: PfihStrategy::DuringPricing,
        seed: 9,
        ..SolverConfig::default()
    };
    ensure!(
        solve(inst, "x", &cfg).to_json() == solve(inst, "x", &cfg).to_json(),
        "library reports differ"
    );
    Ok(format!(
        "{} generated files, 3 solve reports, bench across thread counts, library report",
        generated.len()
    ))
}

fn main() {
    let mut failed = 0;
    let mut report = |n: usize, title: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panic: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {n} {title}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {n} {title}: {detail} [{secs:.1} s]");
            }
        }
    };
    let suite = tiny_suite();
    match &suite {
        Ok((cases, t)) => {
            report(1, "oracle equivalence", &mut || oracle_equivalence(cases, *t));
        }
        Err(e) => report(1, "oracle equivalence", &mut || Err(e.clone())),
    }
    report(2, "labeling correctness", &mut labeling_correctness);
    report(3, "REF fidelity", &mut ref_fidelity);
    report(4, "heuristic weight fidelity", &mut weight_fidelity);
    match &suite {
        Ok((cases, _)) => report(5, "cut validity", &mut || cut_validity(cases)),
        Err(e) => report(5, "cut validity", &mut || Err(e.clone())),
    }
    report(6, "PFIH directional effect", &mut pfih_direction);
    report(7, "generator fidelity", &mut generator_fidelity);
    report(8, "capacity impact", &mut capacity_impact);
    report(9, "determinism", &mut determinism);
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
