use evcts::lp::{solve, LpProblem, LpStatus};
use proptest::prelude::*;

const INF: f64 = f64::INFINITY;

/// Random covering/packing LP shaped like a set-covering master: integer
/// coefficients, cover rows >= 1, pack rows <= 1, a ranged fleet row, and
/// unit artificials on cover rows keeping it feasible.
fn build(seed_cols: &[(Vec<u8>, u8)], covers: usize, packs: usize, fleet: (f64, f64)) -> LpProblem {
    let mut lp = LpProblem::default();
    for _ in 0..covers {
        lp.add_row(1.0, INF);
    }
    for _ in 0..packs {
        lp.add_row(-INF, 1.0);
    }
    let fleet_row = lp.add_row(fleet.0, fleet.1);
    for (pattern, cost) in seed_cols {
        let mut entries: Vec<(usize, f64)> = pattern
            .iter()
            .map(|&p| p as usize % (covers + packs))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .map(|r| (r, 1.0))
            .collect();
        entries.push((fleet_row, 1.0));
        lp.add_col(*cost as f64 + 1.0, 0.0, INF, entries);
    }
    for r in 0..covers {
        lp.add_col(1000.0, 0.0, INF, vec![(r, 1.0)]);
    }
    lp
}

fn dual_objective(lp: &LpProblem, y: &[f64]) -> Option<f64> {
    let mut z = 0.0;
    for (r, &yr) in y.iter().enumerate() {
        if yr > 1e-9 {
            z += yr * lp.row_lo[r];
        } else if yr < -1e-9 {
            z += yr * lp.row_hi[r];
        }
        if !z.is_finite() {
            return None;
        }
    }
    for j in 0..lp.num_cols() {
        let d = lp.cost[j] - lp.cols[j].iter().map(|&(r, a)| y[r] * a).sum::<f64>();
        if d < -1e-7 {
            if lp.col_hi[j].is_infinite() {
                return None;
            }
            z += d * lp.col_hi[j];
        } else if d > 0.0 {
            z += d * lp.col_lo[j];
        }
    }
    Some(z)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn optimal_solutions_are_certified(
        cols in proptest::collection::vec((proptest::collection::vec(0u8..40, 1..5), 0u8..30), 1..40),
        covers in 1usize..12,
        packs in 0usize..5,
        fleet_lo in 0u8..3,
        fleet_extra in 0u8..10,
    ) {
        let lp = build(&cols, covers, packs, (fleet_lo as f64, (fleet_lo + fleet_extra).max(1) as f64 + 20.0));
        let r = solve(&lp, None);
        if r.status == LpStatus::Infeasible {
            // only possible when the fleet lower bound cannot be met
            prop_assert!(fleet_lo > 0);
            return Ok(());
        }
        prop_assert_eq!(r.status, LpStatus::Optimal);
        let act = lp.row_activity(&r.x);
        for (rr, a) in act.iter().enumerate() {
            prop_assert!(*a >= lp.row_lo[rr] - 1e-7 && *a <= lp.row_hi[rr] + 1e-7);
        }
        prop_assert!(r.x.iter().all(|&v| v >= -1e-7));
        for rr in 0..covers {
            prop_assert!(r.duals[rr] >= -1e-7);
        }
        for rr in covers..covers + packs {
            prop_assert!(r.duals[rr] <= 1e-7);
        }
        let dual = dual_objective(&lp, &r.duals);
        prop_assert!(dual.is_some(), "dual infeasible");
        prop_assert!((dual.unwrap() - r.objective).abs() <= 1e-6 * (1.0 + r.objective.abs()),
            "primal {} dual {:?}", r.objective, dual);
    }

    #[test]
    fn warm_start_matches_cold(
        cols in proptest::collection::vec((proptest::collection::vec(0u8..40, 1..5), 0u8..30), 2..40),
        covers in 1usize..10,
        packs in 0usize..4,
    ) {
        let split = cols.len() / 2;
        let first = build(&cols[..split], covers, packs, (0.0, 50.0));
        let r1 = solve(&first, None);
        prop_assert_eq!(r1.status, LpStatus::Optimal);
        // rebuild with all columns; artificial columns move, so remap the basis
        let full = build(&cols, covers, packs, (0.0, 50.0));
        let remap = |b: evcts::lp::BasicVar| match b {
            evcts::lp::BasicVar::Column(j) if j >= split => evcts::lp::BasicVar::Column(j + cols.len() - split),
            other => other,
        };
        let warm = evcts::lp::Basis {
            basic: r1.basis.basic.iter().map(|&b| remap(b)).collect(),
            at_upper: r1.basis.at_upper.iter().map(|&b| remap(b)).collect(),
        };
        let cold = solve(&full, None);
        let hot = solve(&full, Some(&warm));
        prop_assert_eq!(hot.status, LpStatus::Optimal);
        prop_assert!((hot.objective - cold.objective).abs() <= 1e-6 * (1.0 + cold.objective.abs()));
    }
}
