use evcts::graph::RoutingGraph;
use evcts::instance::check_path;
use evcts::instance::synth::{tiny_instance, TinySpec};
use evcts::labeling::{solve_pricing, NgMode, PricingRequest};
use evcts::oracle::{enumerate_routes, min_reduced_cost};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

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
    let fleet = rng.random_range(-20.0..0.0);
    g.arcs
        .iter()
        .map(|a| a.cost - duals[a.to] - if a.from == 0 { fleet } else { 0.0 })
        .collect()
}

fn exact_min(g: &RoutingGraph, costs: &[f64], tweak: impl Fn(&mut PricingRequest)) -> Option<f64> {
    let view = g.full_view();
    let mut req = PricingRequest::new(g, &view, costs);
    req.threshold = f64::INFINITY;
    tweak(&mut req);
    let r = solve_pricing(&req);
    assert!(!r.truncated);
    r.best().map(|c| c.reduced_cost)
}

fn spec_for(k: u64) -> TinySpec {
    TinySpec {
        customers: 4 + (k % 5) as usize,
        chargers: 1 + (k % 2) as usize,
        slots_per_charger: 2,
        vehicles: 3,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(220))]

    #[test]
    fn exact_pricing_matches_enumeration(seed in 0u64..100_000, dual_seed in 0u64..1000) {
        let inst = tiny_instance(seed, spec_for(seed));
        let g = RoutingGraph::build(&inst, 4).unwrap();
        let routes = enumerate_routes(&inst, &g).unwrap();
        let costs = random_costs(&g, dual_seed);
        let oracle = min_reduced_cost(&g, &g.full_view(), &routes, &costs).map(|x| x.0);
        let full = exact_min(&g, &costs, |_| {});
        match (oracle, full) {
            (None, None) => {}
            (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-9, "oracle {a} labeling {b}"),
            other => prop_assert!(false, "mismatch {:?}", other),
        }
        let no_dom = exact_min(&g, &costs, |r| r.dominance = false);
        prop_assert_eq!(full, no_dom);
        let no_bounds = exact_min(&g, &costs, |r| { r.completion_bounds = false; r.resource_bounds = false; });
        prop_assert_eq!(full, no_bounds);
        if let Some(e) = full {
            let ng = exact_min(&g, &costs, |r| { r.ng = NgMode::On(2); r.max_labels = 200_000; }).unwrap();
            prop_assert!(ng <= e + 1e-9);
        }
    }

    #[test]
    fn returned_routes_are_feasible(seed in 0u64..100_000, dual_seed in 0u64..1000) {
        let inst = tiny_instance(seed, spec_for(seed));
        let g = RoutingGraph::build(&inst, 4).unwrap();
        let view = g.full_view();
        let costs = random_costs(&g, dual_seed);
        let mut req = PricingRequest::new(&g, &view, &costs);
        req.max_columns = 50;
        let r = solve_pricing(&req);
        for c in &r.columns {
            prop_assert!(c.reduced_cost < -1e-6);
            prop_assert!(check_path(&inst, &c.route).is_ok(), "{:?}", c.route);
        }
    }
}

fn labeling_accepts(g: &RoutingGraph, route: &[usize]) -> bool {
    let mut label = evcts::labeling::Label::depot(g);
    for w in route.windows(2) {
        let Some(a) = g.arc_id(w[0], w[1]) else { return false };
        match evcts::labeling::extend(g, &label, &g.arcs[a], 0.0, None) {
            Some(l) => label = l,
            None => return false,
        }
    }
    true
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn validator_and_refs_agree(seed in 0u64..100_000, picks in proptest::collection::vec(0usize..64, 1..7)) {
        let inst = tiny_instance(seed, spec_for(seed));
        let g = RoutingGraph::build(&inst, 0).unwrap();
        let inner: Vec<usize> = (1..inst.end_depot()).collect();
        let mut route = vec![0];
        for p in picks {
            let v = inner[p % inner.len()];
            if !route.contains(&v) {
                route.push(v);
            }
        }
        route.push(inst.end_depot());
        // arcs dropped in preprocessing are infeasible for the validator too
        let validator = check_path(&inst, &route).is_ok();
        prop_assert_eq!(validator, labeling_accepts(&g, &route), "route {:?}", route);
    }
}
