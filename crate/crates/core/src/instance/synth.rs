//! Synthetic instances for tests, benchmarks and the desk suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{round2, Instance, Node, NodeKind};

/// Customers on the x axis with unit demand, service time 1 and wide
/// windows. Battery and capacity are large enough to be inactive.
pub fn line_instance(xs: &[f64], horizon: f64) -> Instance {
    let mut depot = Node::new(0, NodeKind::Depot, 0.0, 0.0);
    depot.tw_close = horizon;
    let mut nodes = vec![depot];
    for (k, &x) in xs.iter().enumerate() {
        let mut c = Node::new(k + 1, NodeKind::Customer, x, 0.0);
        c.demand = 1.0;
        c.tw_close = horizon;
        c.service_time = 1.0;
        nodes.push(c);
    }
    Instance {
        name: "line".into(),
        vehicles: xs.len().max(1),
        capacity: 100.0,
        battery: 1000.0,
        recharge_rate: 1.0,
        consumption_rate: 1.0,
        seed: None,
        rng: None,
        nodes,
    }
}

/// Fixed toy instance: four customers, one charger with two slots. The
/// fourth customer lies beyond round-trip battery range.
pub fn toy_t1() -> Instance {
    let mut depot = Node::new(0, NodeKind::Depot, 0.0, 0.0);
    depot.tw_close = 200.0;
    let mut nodes = vec![depot];
    for (x, y, q, open, close) in [
        (5.0, 5.0, 2.0, 0.0, 100.0),
        (10.0, 0.0, 3.0, 20.0, 80.0),
        (-8.0, 6.0, 2.0, 0.0, 150.0),
        (22.0, 10.0, 3.0, 30.0, 160.0),
    ] {
        let mut c = Node::new(nodes.len(), NodeKind::Customer, x, y);
        c.demand = q;
        c.tw_open = open;
        c.tw_close = close;
        c.service_time = 2.0;
        nodes.push(c);
    }
    for (open, close) in [(0.0, 60.0), (70.0, 140.0)] {
        let mut s = Node::new(nodes.len(), NodeKind::ChargerSlot, 15.0, 8.0);
        s.tw_open = open;
        s.tw_close = close;
        s.charger_location = Some(0);
        s.slot_capacity = Some(1);
        nodes.push(s);
    }
    Instance {
        name: "t1".into(),
        vehicles: 4,
        capacity: 10.0,
        battery: 40.0,
        recharge_rate: 1.0,
        consumption_rate: 1.0,
        seed: None,
        rng: None,
        nodes,
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TinySpec {
    pub customers: usize,
    pub chargers: usize,
    pub slots_per_charger: usize,
    pub vehicles: usize,
}

/// Small random instance with battery pressure and slotted chargers.
///
/// Coordinates lie on a 60 x 60 grid around a central depot; the battery
/// covers roughly one long round trip, so distant customers need a slot.
pub fn tiny_instance(seed: u64, spec: TinySpec) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7469_6e79);
    let horizon = 240.0;
    let mut depot = Node::new(0, NodeKind::Depot, 30.0, 30.0);
    depot.tw_close = horizon;
    let mut nodes = vec![depot];
    for _ in 0..spec.customers {
        let id = nodes.len();
        let mut c = Node::new(
            id,
            NodeKind::Customer,
            rng.random_range(0..=60) as f64,
            rng.random_range(0..=60) as f64,
        );
        c.demand = rng.random_range(1..=5) as f64;
        c.service_time = 5.0;
        let d0 = round2(((c.x - 30.0).powi(2) + (c.y - 30.0).powi(2)).sqrt());
        let latest = (horizon - 2.0 * d0 - c.service_time - 40.0).max(d0);
        let open = round2(rng.random_range(d0..=latest.max(d0 + 1e-9)).floor());
        let width = rng.random_range(40..=120) as f64;
        c.tw_open = open;
        c.tw_close = round2((open + width).min(horizon - d0 - c.service_time)).max(open);
        nodes.push(c);
    }
    for loc in 0..spec.chargers {
        let (x, y) = (rng.random_range(5..=55) as f64, rng.random_range(5..=55) as f64);
        let mut start = rng.random_range(0..=40) as f64;
        for _ in 0..spec.slots_per_charger {
            let len = rng.random_range(50..=90) as f64;
            let end = (start + len).min(horizon);
            let mut s = Node::new(nodes.len(), NodeKind::ChargerSlot, x, y);
            s.tw_open = start;
            s.tw_close = end;
            s.charger_location = Some(loc);
            s.slot_capacity = Some(1);
            nodes.push(s);
            start = (end + rng.random_range(0..=30) as f64).min(horizon - 10.0);
        }
    }
    Instance {
        name: format!("tiny-{seed}"),
        vehicles: spec.vehicles,
        capacity: 15.0,
        battery: 60.0,
        recharge_rate: 1.0,
        consumption_rate: 1.0,
        seed: Some(seed),
        rng: None,
        nodes,
    }
}

/// Like [`tiny_instance`], redrawn until every customer can be served by
/// some route. The fleet may still be too small.
pub fn tiny_reachable_instance(seed: u64, spec: TinySpec) -> Instance {
    (0u64..)
        .map(|k| tiny_instance(seed.wrapping_mul(1_000).wrapping_add(k), spec))
        .find(|inst| inst.unreachable_customers().is_empty())
        .map(|mut inst| {
            inst.name = format!("tiny-r{seed}");
            inst.seed = Some(seed);
            inst
        })
        .expect("some draw is reachable")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolomonClass {
    R1,
    C1,
    RC1,
}

/// Base instance (no slots) shaped like the R1/C1/RC1 families of the
/// EVRPTW benchmark: 100 x 100 grid, service time 10, fleet parameters of
/// the r1/c1 files. One station sits at the depot.
pub fn schneider_like_base(seed: u64, class: SolomonClass, customers: usize, stations: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ class as u64);
    let (horizon, battery, inverse_rate, capacity, depot_xy) = match class {
        SolomonClass::R1 => (230.0, 60.63, 0.49, 200.0, (35.0, 35.0)),
        SolomonClass::C1 => (1236.0, 79.69, 3.39, 200.0, (40.0, 50.0)),
        SolomonClass::RC1 => (240.0, 60.63, 0.49, 200.0, (40.0, 50.0)),
    };
    let mut depot = Node::new(0, NodeKind::Depot, depot_xy.0, depot_xy.1);
    depot.tw_close = horizon;
    let mut nodes = vec![depot];
    let centers: Vec<(f64, f64)> = (0..4)
        .map(|_| (rng.random_range(15.0..85.0), rng.random_range(15.0..85.0)))
        .collect();
    for k in 0..customers {
        let clustered = match class {
            SolomonClass::R1 => false,
            SolomonClass::C1 => true,
            SolomonClass::RC1 => k % 2 == 0,
        };
        let (x, y) = if clustered {
            let (cx, cy) = centers[k % centers.len()];
            (
                (cx + rng.random_range(-8.0..8.0)).clamp(0.0, 100.0),
                (cy + rng.random_range(-8.0..8.0)).clamp(0.0, 100.0),
            )
        } else {
            (rng.random_range(0.0..100.0), rng.random_range(0.0..100.0))
        };
        let mut c = Node::new(nodes.len(), NodeKind::Customer, x.round(), y.round());
        c.demand = rng.random_range(1..=4) as f64 * 10.0;
        c.service_time = if class == SolomonClass::C1 { 90.0 } else { 10.0 };
        let d0 = ((c.x - depot_xy.0).powi(2) + (c.y - depot_xy.1).powi(2)).sqrt().ceil();
        let latest_start = horizon - d0 - c.service_time;
        let width = match class {
            SolomonClass::C1 => 60.0,
            _ => 30.0,
        };
        let open = rng.random_range(d0..=(latest_start - width).max(d0)).floor();
        c.tw_open = open;
        c.tw_close = (open + width).min(latest_start);
        nodes.push(c);
    }
    for k in 0..stations {
        let (x, y) = if k == 0 {
            depot_xy
        } else {
            (
                rng.random_range(10.0f64..90.0).round(),
                rng.random_range(10.0f64..90.0).round(),
            )
        };
        let mut s = Node::new(nodes.len(), NodeKind::Station, x, y);
        s.tw_close = horizon;
        nodes.push(s);
    }
    let name = match class {
        SolomonClass::R1 => "r1",
        SolomonClass::C1 => "c1",
        SolomonClass::RC1 => "rc1",
    };
    Instance {
        name: format!("{name}s{seed:02}"),
        vehicles: customers,
        capacity,
        battery,
        recharge_rate: round2(1.0 / inverse_rate),
        consumption_rate: 1.0,
        seed: Some(seed),
        rng: None,
        nodes,
    }
}

/// Medium desk instances: 25-customer Schneider-like bases with 21
/// stations, expanded with a third of the slots open. Draws where some
/// customer cannot be served are skipped. Classes alternate R1, C1, RC1.
pub fn desk_suite(count: usize) -> Vec<Instance> {
    let classes = [SolomonClass::R1, SolomonClass::C1, SolomonClass::RC1];
    let mut out = Vec::new();
    for seed in 1u64.. {
        if out.len() == count {
            break;
        }
        let class = classes[out.len() % classes.len()];
        let base = schneider_like_base(seed, class, 25, 21);
        let Ok(g) = super::generate_instance(&base, 0.33, seed) else {
            continue;
        };
        if g.instance.unreachable_customers().is_empty() {
            out.push(g.instance);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_instances_are_valid() {
        for seed in 0..50 {
            let inst = tiny_instance(
                seed,
                TinySpec {
                    customers: 6,
                    chargers: 2,
                    slots_per_charger: 2,
                    vehicles: 3,
                },
            );
            inst.check().unwrap();
        }
    }

    #[test]
    fn toy_t1_far_customer_needs_slot() {
        let t1 = toy_t1();
        t1.check().unwrap();
        assert!(crate::instance::check_path(&t1, &[0, 4, 7]).is_err());
        assert!(crate::instance::check_path(&t1, &[0, 5, 4, 7]).is_ok());
    }

    #[test]
    fn schneider_like_bases_are_valid() {
        for class in [SolomonClass::R1, SolomonClass::C1, SolomonClass::RC1] {
            let b = schneider_like_base(1, class, 25, 6);
            b.check().unwrap();
            assert_eq!(b.num_customers(), 25);
            assert_eq!(b.stations().count(), 6);
        }
    }
}
