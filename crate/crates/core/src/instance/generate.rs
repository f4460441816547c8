//! Charging time slot generation for base instances.
//!
//! For every station at travel time `t0` from the depot, the usable horizon
//! `l0 - 2 t0` is cut into `floor(avail / slot_len)` consecutive slots of
//! length `0.8 B / g`, shifted by a random integer offset in
//! `0..=floor(avail - count * slot_len)`. A random permutation of the slots
//! decides which are open: a fraction `f` opens the first `ceil(f * count)`
//! entries, so larger fractions of the same seed always open a superset.

use log::warn;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{round2, Instance, InstanceError, Node, NodeKind};

/// Identifier of the random stream recorded in generated files: ChaCha8
/// seeded with `seed_from_u64`, integers drawn by rejection sampling.
pub const RNG_ID: &str = "chacha8-rej-v1";

/// Uniform integer in `lo..=hi` by rejection sampling on 64-bit draws.
pub(crate) fn uniform_int(rng: &mut impl RngCore, lo: u64, hi: u64) -> u64 {
    assert!(lo <= hi);
    let span = hi - lo + 1;
    if span == 0 {
        return rng.next_u64();
    }
    let reject = (u64::MAX % span + 1) % span;
    loop {
        let v = rng.next_u64();
        if v <= u64::MAX - reject {
            return lo + v % span;
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SlotPlan {
    pub station: usize,
    pub travel_time: f64,
    pub available: f64,
    pub slot_len: f64,
    pub count: usize,
    pub offset: u64,
    pub starts: Vec<f64>,
    /// Random order in which slots are opened.
    pub open_order: Vec<usize>,
}

impl SlotPlan {
    pub fn open_count(&self, fraction: f64) -> usize {
        open_count(fraction, self.count)
    }

    /// Indices of open slots, ascending.
    pub fn open_slots(&self, fraction: f64) -> Vec<usize> {
        let mut v = self.open_order[..self.open_count(fraction)].to_vec();
        v.sort_unstable();
        v
    }
}

pub(crate) fn open_count(fraction: f64, count: usize) -> usize {
    ((fraction * count as f64) - 1e-9).ceil().max(0.0) as usize
}

#[derive(Clone, Debug)]
pub struct GeneratedInstance {
    pub instance: Instance,
    pub plans: Vec<SlotPlan>,
    pub warnings: Vec<String>,
}

fn plan_slots(base: &Instance, seed: u64) -> Result<(Vec<SlotPlan>, Vec<String>), InstanceError> {
    if base.nodes[0].tw_open != 0.0 {
        return Err(InstanceError::Invalid("depot window must open at time 0".into()));
    }
    if base.slots().next().is_some() {
        return Err(InstanceError::Invalid(
            "base instance already contains charger slots".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = base.horizon();
    let slot_len = round2(0.8 * base.battery / base.recharge_rate);
    let mut plans = Vec::new();
    let mut warnings = Vec::new();
    for st in base.stations() {
        let travel_time = base.distance(0, st.id);
        let available = round2(horizon - 2.0 * travel_time);
        let count = if available > 0.0 && slot_len > 0.0 {
            (available / slot_len + 1e-9).floor() as usize
        } else {
            0
        };
        if count == 0 {
            let msg = format!("station {} admits no charging slot", st.id);
            warn!("{msg}");
            warnings.push(msg);
            plans.push(SlotPlan {
                station: st.id,
                travel_time,
                available,
                slot_len,
                count,
                offset: 0,
                starts: vec![],
                open_order: vec![],
            });
            continue;
        }
        let slack = (available - count as f64 * slot_len + 1e-9).floor().max(0.0) as u64;
        let offset = uniform_int(&mut rng, 0, slack);
        let starts: Vec<f64> = (0..count)
            .map(|k| round2(travel_time + offset as f64 + k as f64 * slot_len))
            .collect();
        let mut open_order: Vec<usize> = (0..count).collect();
        for i in 0..count.saturating_sub(1) {
            let j = uniform_int(&mut rng, i as u64, (count - 1) as u64) as usize;
            open_order.swap(i, j);
        }
        plans.push(SlotPlan {
            station: st.id,
            travel_time,
            available,
            slot_len,
            count,
            offset,
            starts,
            open_order,
        });
    }
    Ok((plans, warnings))
}

fn build(base: &Instance, plans: &[SlotPlan], fraction: f64, seed: u64) -> Instance {
    let mut nodes: Vec<Node> = base
        .nodes
        .iter()
        .filter(|n| n.kind != NodeKind::Station)
        .cloned()
        .collect();
    let mut location_of = std::collections::BTreeMap::new();
    for (loc, st) in base.stations().enumerate() {
        location_of.insert(st.id, loc);
    }
    for plan in plans {
        let st = &base.nodes[plan.station];
        for k in plan.open_slots(fraction) {
            let mut n = Node::new(0, NodeKind::ChargerSlot, st.x, st.y);
            n.tw_open = plan.starts[k];
            n.tw_close = round2(plan.starts[k] + plan.slot_len);
            n.charger_location = Some(location_of[&plan.station]);
            n.slot_capacity = Some(1);
            nodes.push(n);
        }
    }
    for (i, n) in nodes.iter_mut().enumerate() {
        n.id = i;
    }
    Instance {
        name: format!("{}-{}", base.name, (fraction * 100.0).round() as u32),
        seed: Some(seed),
        rng: Some(RNG_ID.to_string()),
        nodes,
        ..base.clone()
    }
}

/// Expands the stations of `base` into open charging time slots.
pub fn generate_instance(base: &Instance, open_fraction: f64, seed: u64) -> Result<GeneratedInstance, InstanceError> {
    if !(open_fraction > 0.0 && open_fraction <= 1.0) {
        return Err(InstanceError::Invalid(format!(
            "open fraction {open_fraction} outside (0, 1]"
        )));
    }
    base.check()?;
    let (plans, warnings) = plan_slots(base, seed)?;
    let instance = build(base, &plans, open_fraction, seed);
    instance.check()?;
    Ok(GeneratedInstance {
        instance,
        plans,
        warnings,
    })
}

/// Generates the one-third and one-half open variants from one slot plan.
pub fn generate_pair(base: &Instance, seed: u64) -> Result<(GeneratedInstance, GeneratedInstance), InstanceError> {
    Ok((
        generate_instance(base, 0.33, seed)?,
        generate_instance(base, 0.50, seed)?,
    ))
}
