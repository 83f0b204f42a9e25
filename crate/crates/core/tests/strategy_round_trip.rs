use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use nmx::error::Result;
use nmx::model::{self, all_primitives, simulate_with, worst_case_cost, MemoryLayout};
use nmx::nested::{hat_rollout, hat_worst_case, lift_strategy, lower_strategy, HatModel};
use nmx::random::{random_instance, InstanceParams};

/// A deterministic agent strategy that depends on everything the agent
/// remembers.
fn hashed(
    seed: u64,
    m: &model::SystemModel,
) -> impl Fn(usize, usize, u32, &[u32], &[u32]) -> Result<u32> + '_ {
    move |t, agent, obs, private, common| {
        let mut h = DefaultHasher::new();
        (seed, t, agent, obs, private, common).hash(&mut h);
        Ok((h.finish() % m.num_actions(t, agent) as u64) as u32)
    }
}

fn round_trip(params: &InstanceParams, seeds: std::ops::Range<u64>) -> usize {
    let mut checked = 0;
    for seed in seeds {
        let inst = random_instance(seed, params);
        let (m, info) = (&inst.model, &inst.info);
        let hm = HatModel::build(m, info).unwrap();
        let layout = MemoryLayout::new(m, info).unwrap();
        for k in 0..2 {
            let g = hashed(seed * 2 + k, m);
            let lifted = lift_strategy(&hm, &g).unwrap();
            let lowered = lower_strategy(&hm, &lifted);
            for p in all_primitives(m, info) {
                let a = simulate_with(m, info, &layout, &g, &p).unwrap();
                let b = simulate_with(m, info, &layout, &lowered, &p).unwrap();
                assert_eq!(a, b, "seed {seed}");
                let h = hat_rollout(&hm, &lifted, &p).unwrap();
                assert_eq!(h.actions, a.actions, "seed {seed}");
                assert_eq!(h.cost, a.cost, "seed {seed}");
            }
            assert_eq!(lift_strategy(&hm, &lowered).unwrap(), lifted, "seed {seed}");
            assert_eq!(
                hat_worst_case(&hm, &lifted).unwrap(),
                worst_case_cost(m, info, &g).unwrap(),
                "seed {seed}"
            );
            checked += 1;
        }
    }
    checked
}

#[test]
fn lift_and_lower_are_inverse_on_two_level_instances() {
    assert!(round_trip(&InstanceParams::default(), 0..60) >= 100);
}

#[test]
fn lift_and_lower_are_inverse_on_three_level_instances() {
    assert!(round_trip(&InstanceParams::three_levels(), 0..30) >= 50);
}

#[test]
fn lift_and_lower_with_stage_costs() {
    assert!(round_trip(&InstanceParams::additive(), 0..30) >= 50);
}
