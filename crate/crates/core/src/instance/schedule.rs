//! Forward schedule construction for routes.
//!
//! A route with at most two slot visits is feasible iff some choice of
//! recharge amounts admits a schedule. Charging more only delays the vehicle,
//! so it suffices to search the minimal battery-feasible recharge amounts:
//! with two slots these form a segment `a1 + a2 = S` on which the worst
//! time-window violation is a convex function of `a1`, minimised by ternary
//! search.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Instance, NodeKind, EPS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    UnknownNode(usize),
    Endpoints,
    NotElementary(usize),
    Capacity,
    MaxRecharges,
    Battery,
    TimeWindow(usize),
    ChargeDeadline(usize),
}

impl Violation {
    /// Stable identifier of the violated constraint.
    pub fn constraint_id(&self) -> &'static str {
        match self {
            Violation::UnknownNode(_) => "unknown_node",
            Violation::Endpoints => "endpoints",
            Violation::NotElementary(_) => "elementary",
            Violation::Capacity => "capacity",
            Violation::MaxRecharges => "max_recharges",
            Violation::Battery => "battery",
            Violation::TimeWindow(_) => "time_window",
            Violation::ChargeDeadline(_) => "charge_deadline",
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::UnknownNode(i) => write!(f, "unknown node {i}"),
            Violation::Endpoints => write!(f, "route must start at 0 and end at the end depot"),
            Violation::NotElementary(i) => write!(f, "node {i} visited twice"),
            Violation::Capacity => write!(f, "vehicle capacity exceeded"),
            Violation::MaxRecharges => write!(f, "max recharges exceeded"),
            Violation::Battery => write!(f, "battery infeasible"),
            Violation::TimeWindow(i) => write!(f, "time window violated at {i}"),
            Violation::ChargeDeadline(i) => write!(f, "charging at slot {i} ends after its deadline"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChargeEvent {
    pub node: usize,
    pub start: f64,
    pub end: f64,
    pub energy: f64,
}

/// Schedule certificate of a route: one entry per visited position.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RouteSchedule {
    pub nodes: Vec<usize>,
    /// Service (or charging) start times.
    pub arrival: Vec<f64>,
    pub battery_in: Vec<f64>,
    pub battery_out: Vec<f64>,
    pub charges: Vec<ChargeEvent>,
}

struct Simulation {
    worst: f64,
    culprit: Option<Violation>,
    schedule: RouteSchedule,
}

fn simulate(inst: &Instance, path: &[usize], charge: &[f64]) -> Simulation {
    let g = inst.recharge_rate;
    let h = inst.consumption_rate;
    let mut sched = RouteSchedule {
        nodes: path.to_vec(),
        ..Default::default()
    };
    let mut worst = f64::NEG_INFINITY;
    let mut culprit = None;
    let mut note = |excess: f64, v: Violation| {
        if excess > worst {
            worst = excess;
            culprit = Some(v);
        }
    };
    let mut time = inst.node(path[0]).tw_open;
    let mut battery = inst.battery;
    let mut slot_idx = 0;
    for (pos, &i) in path.iter().enumerate() {
        let node = inst.node(i);
        if pos > 0 {
            let prev = path[pos - 1];
            time += inst.distance(prev, i);
            battery -= h * inst.distance(prev, i);
            time = time.max(node.tw_open);
        }
        note(time - node.tw_close, Violation::TimeWindow(i));
        sched.arrival.push(time);
        sched.battery_in.push(battery);
        if node.kind == NodeKind::ChargerSlot {
            let energy = charge.get(slot_idx).copied().unwrap_or(0.0);
            slot_idx += 1;
            let start = time;
            time += energy / g;
            battery += energy;
            note(time - node.tw_close, Violation::ChargeDeadline(i));
            sched.charges.push(ChargeEvent {
                node: i,
                start,
                end: time,
                energy,
            });
        } else {
            time += node.service_time;
        }
        sched.battery_out.push(battery);
    }
    Simulation {
        worst,
        culprit,
        schedule: sched,
    }
}

/// Checks a path from the depot. The path may stop anywhere (a prefix) or end
/// at the end depot; the end depot may only appear last.
pub fn check_path(inst: &Instance, path: &[usize]) -> Result<RouteSchedule, Violation> {
    let end = inst.end_depot();
    if path.first() != Some(&0) {
        return Err(Violation::Endpoints);
    }
    let mut seen = vec![false; end + 1];
    let mut load = 0.0;
    let mut slot_positions = Vec::new();
    for (pos, &i) in path.iter().enumerate() {
        if i > end {
            return Err(Violation::UnknownNode(i));
        }
        if (i == 0 && pos > 0) || (i == end && pos + 1 != path.len()) {
            return Err(Violation::Endpoints);
        }
        if seen[i] {
            return Err(Violation::NotElementary(i));
        }
        seen[i] = true;
        let node = inst.node(i);
        match node.kind {
            NodeKind::Customer => load += node.demand,
            NodeKind::ChargerSlot => slot_positions.push(pos),
            NodeKind::Station => return Err(Violation::UnknownNode(i)),
            NodeKind::Depot => {}
        }
    }
    if load > inst.capacity + EPS {
        return Err(Violation::Capacity);
    }
    if slot_positions.len() > 2 {
        return Err(Violation::MaxRecharges);
    }

    // Energy of the segments between consecutive slot visits.
    let h = inst.consumption_rate;
    let mut segments = vec![0.0; slot_positions.len() + 1];
    let mut seg = 0;
    for pos in 1..path.len() {
        segments[seg] += h * inst.distance(path[pos - 1], path[pos]);
        if slot_positions.get(seg) == Some(&pos) {
            seg += 1;
        }
    }
    let b = inst.battery;
    if segments.iter().any(|&e| e > b + EPS) {
        return Err(Violation::Battery);
    }

    let finish = |charge: &[f64]| -> Result<RouteSchedule, Violation> {
        let sim = simulate(inst, path, charge);
        if sim.worst <= EPS {
            Ok(sim.schedule)
        } else {
            Err(sim.culprit.unwrap_or(Violation::Battery))
        }
    };

    match slot_positions.len() {
        0 => finish(&[]),
        1 => finish(&[(segments[0] + segments[1] - b).max(0.0)]),
        _ => {
            let (e0, e1, e2) = (segments[0], segments[1], segments[2]);
            let need = e0 + e1 + e2 - b;
            let lo = (e0 + e1 - b).max(0.0);
            let hi = lo.max(need.min(e0));
            let split = |a1: f64| [a1, (need - a1).max(0.0)];
            let score = |a1: f64| simulate(inst, path, &split(a1)).worst;
            let (mut left, mut right) = (lo, hi);
            for _ in 0..200 {
                if right - left < 1e-12 {
                    break;
                }
                let m1 = left + (right - left) / 3.0;
                let m2 = right - (right - left) / 3.0;
                if score(m1) <= score(m2) {
                    right = m2;
                } else {
                    left = m1;
                }
            }
            let mut best = 0.5 * (left + right);
            for cand in [lo, hi] {
                if score(cand) < score(best) {
                    best = cand;
                }
            }
            finish(&split(best))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RouteReport {
    pub route: Vec<usize>,
    pub violation: Option<Violation>,
    pub schedule: Option<RouteSchedule>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub routes: Vec<RouteReport>,
    pub uncovered: Vec<usize>,
    pub overbooked_slots: Vec<usize>,
    pub fleet_exceeded: bool,
    pub cost: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.routes.iter().all(|r| r.violation.is_none())
            && self.uncovered.is_empty()
            && self.overbooked_slots.is_empty()
            && !self.fleet_exceeded
    }

    /// First violated constraint, as `(route index or none, constraint id)`.
    pub fn first_failure(&self) -> Option<(Option<usize>, String)> {
        for (k, r) in self.routes.iter().enumerate() {
            if let Some(v) = &r.violation {
                return Some((Some(k), format!("{}: {}", v.constraint_id(), v)));
            }
        }
        if let Some(c) = self.uncovered.first() {
            return Some((None, format!("coverage: customer {c} uncovered")));
        }
        if let Some(s) = self.overbooked_slots.first() {
            return Some((None, format!("slot_capacity: slot {s} overbooked")));
        }
        if self.fleet_exceeded {
            return Some((None, "fleet: too many routes".into()));
        }
        None
    }
}

/// Validates a set of routes against every route- and solution-level
/// constraint. Over-covered customers count as visited.
pub fn validate_solution(inst: &Instance, routes: &[Vec<usize>]) -> ValidationReport {
    let end = inst.end_depot();
    let mut visits: BTreeMap<usize, u32> = BTreeMap::new();
    let mut reports = Vec::new();
    let mut cost = 0.0;
    for route in routes {
        let mut violation = None;
        let mut schedule = None;
        if route.len() < 2 || route.last() != Some(&end) {
            violation = Some(Violation::Endpoints);
        } else {
            match check_path(inst, route) {
                Ok(s) => schedule = Some(s),
                Err(v) => violation = Some(v),
            }
        }
        for &i in route {
            if i < inst.nodes.len() && i != 0 {
                *visits.entry(i).or_default() += 1;
            }
        }
        cost += route
            .windows(2)
            .filter(|w| w[0] <= end && w[1] <= end)
            .map(|w| inst.distance(w[0], w[1]))
            .sum::<f64>();
        reports.push(RouteReport {
            route: route.clone(),
            violation,
            schedule,
        });
    }
    let uncovered = inst
        .customers()
        .filter(|c| !visits.contains_key(&c.id))
        .map(|c| c.id)
        .collect();
    let overbooked_slots = inst
        .slots()
        .filter(|s| visits.get(&s.id).copied().unwrap_or(0) > s.slot_capacity.unwrap_or(1))
        .map(|s| s.id)
        .collect();
    ValidationReport {
        routes: reports,
        uncovered,
        overbooked_slots,
        fleet_exceeded: routes.len() > inst.vehicles,
        cost: super::round2(cost),
    }
}
