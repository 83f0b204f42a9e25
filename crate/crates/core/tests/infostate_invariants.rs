use std::collections::BTreeSet;

use nmx::infostate::{
    initial_infostate, interim_set, Evolver, HashedPolicy, Member, Policy, StateRef,
};
use nmx::model::validate;
use nmx::nested::{Hat, HatModel};
use nmx::random::{random_instance, InstanceParams};
use proptest::prelude::*;

fn hats(s: &StateRef) -> BTreeSet<Hat> {
    s.members().iter().map(|m| m.hat.clone()).collect()
}

/// Follow one realized trajectory and check every level's information state
/// against it. `picks` drives the initial state, disturbances and noise.
fn walk(params: &InstanceParams, seed: u64, policy_seed: u64, picks: &[u32]) {
    let inst = random_instance(seed, params);
    assert!(validate(&inst.model, &inst.info).is_valid(), "seed {seed}");
    let hm = HatModel::build(&inst.model, &inst.info).unwrap();
    let m = &hm.model;
    let root = hm.num_subsystems() - 1;
    let policy = HashedPolicy {
        hm: &hm,
        seed: policy_seed,
    };
    let mut pick = picks.iter().cycle().copied();
    let mut ctx: Vec<StateRef> = (0..=root)
        .map(|n| initial_infostate(&hm, n).unwrap())
        .collect();
    let x0s = m.feasible_initial_states(&hm.info);
    let x0 = x0s[pick.next().unwrap() as usize % x0s.len()];
    let starts = hm.initial_hats(x0);
    let mut hat = starts[pick.next().unwrap() as usize % starts.len()].clone();
    for t in 0..=hm.horizon() {
        for n in 0..=root {
            let p = &ctx[n];
            assert!(!p.is_empty());
            assert_eq!(p.level(), n);
            // the truth, nested in the states the more informed levels hold,
            // is never ruled out
            let truth = Member {
                hat: hat.clone(),
                nested: ctx[..n].to_vec(),
            };
            assert!(p.contains(&truth), "seed {seed} t={t} n={n}: truth missing");
            if n < root {
                assert!(
                    hats(p).is_subset(&hats(&ctx[n + 1])),
                    "seed {seed} t={t} n={n}"
                );
            }
            for x in p.members() {
                assert_eq!(x.nested.len(), n);
                for (j, q) in x.nested.iter().enumerate() {
                    assert_eq!(q.level(), j);
                    assert!(!q.is_empty());
                }
            }
        }
        if t == hm.horizon() {
            break;
        }
        let mut u = Vec::new();
        for a in 0..m.num_agents() {
            let j = m.agents[a].subsystem;
            u.push(
                policy
                    .action(t, j, &ctx[j..], a, &hm.view(t, a, &hat))
                    .unwrap(),
            );
        }
        let mut ev = Evolver::new(&hm, t, &policy);
        let mut next = Vec::new();
        for n in 0..=root {
            let z = hm.observe_unchecked(t, n, &hat, &u);
            let q = interim_set(&hm, t, &policy, &ctx[n..], &z).unwrap();
            assert!(!q.is_empty());
            assert!(q.iter().all(|x| ctx[n].contains(x)), "Q not within P");
            assert!(q.iter().any(|x| x.hat == hat));
            next.push(ev.evolve(&ctx[n..], &z).unwrap());
        }
        let w = pick.next().unwrap() % m.num_disturbances(t) as u32;
        let v: Vec<u32> = (0..m.num_agents())
            .map(|a| pick.next().unwrap() % m.num_noise(t + 1, a) as u32)
            .collect();
        hat = hm.step_unchecked(t, &hat, &u, w, &v);
        ctx = next;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn information_states_track_the_truth(
        seed in 0u64..10_000,
        policy_seed in any::<u64>(),
        picks in prop::collection::vec(any::<u32>(), 1..24),
    ) {
        walk(&InstanceParams::default(), seed, policy_seed, &picks);
    }

    #[test]
    fn three_level_states_track_the_truth(
        seed in 0u64..10_000,
        policy_seed in any::<u64>(),
        picks in prop::collection::vec(any::<u32>(), 1..24),
    ) {
        walk(&InstanceParams::three_levels(), seed, policy_seed, &picks);
    }
}
