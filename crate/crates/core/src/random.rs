//! Seeded generator of small random instances.
//!
//! The algorithm is versioned: a given `(GENERATOR_VERSION, seed, params)`
//! always yields the same instance. Information structures are built one
//! variable at a time so that every instance satisfies nestedness, privacy
//! and reconstructibility by construction.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Agent, Cost, FiniteSpace, InfoStructure, SpaceId, SystemModel, VarId};

pub const GENERATOR_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceParams {
    pub max_subsystems: usize,
    pub max_agents_per_subsystem: usize,
    pub max_states: usize,
    pub max_actions: usize,
    pub max_disturbances: usize,
    pub max_noise: usize,
    pub max_obs: usize,
    pub max_horizon: usize,
    pub stage_costs: bool,
    /// Upper bound on the total number of agents.
    pub max_agents: usize,
}

impl Default for InstanceParams {
    fn default() -> Self {
        InstanceParams {
            max_subsystems: 2,
            max_agents_per_subsystem: 2,
            max_states: 3,
            max_actions: 2,
            max_disturbances: 2,
            max_noise: 2,
            max_obs: 3,
            max_horizon: 2,
            stage_costs: false,
            max_agents: 3,
        }
    }
}

impl InstanceParams {
    /// Three subsystems with one agent each.
    pub fn three_levels() -> Self {
        InstanceParams {
            max_subsystems: 3,
            max_agents_per_subsystem: 1,
            ..Self::default()
        }
    }

    pub fn additive() -> Self {
        InstanceParams {
            stage_costs: true,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub model: SystemModel,
    pub info: InfoStructure,
}

/// Draw from `1..=max` with the given weights (truncated to `max`).
fn weighted(rng: &mut ChaCha8Rng, max: usize, weights: &[u32]) -> usize {
    let w = &weights[..max.min(weights.len()).max(1)];
    let total: u32 = w.iter().sum();
    let mut r = rng.gen_range(0..total);
    for (i, &wi) in w.iter().enumerate() {
        if r < wi {
            return i + 1;
        }
        r -= wi;
    }
    w.len()
}

fn subset(rng: &mut ChaCha8Rng, n: usize) -> Vec<u32> {
    loop {
        let s: Vec<u32> = (0..n as u32).filter(|_| rng.gen_bool(0.6)).collect();
        if !s.is_empty() {
            return s;
        }
    }
}

pub fn random_instance(seed: u64, p: &InstanceParams) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((GENERATOR_VERSION as u64) << 56));
    let horizon = weighted(&mut rng, p.max_horizon + 1, &[1, 3, 3, 1]) - 1;
    let ns = weighted(&mut rng, p.max_subsystems, &[1, 2, 2]);
    let mut agents = Vec::new();
    for n in 0..ns {
        let remaining = p
            .max_agents
            .saturating_sub(agents.len() + (ns - n - 1))
            .max(1);
        let k = weighted(
            &mut rng,
            p.max_agents_per_subsystem.min(remaining),
            &[2, 1, 1],
        );
        for _ in 0..k {
            agents.push(Agent {
                name: format!("a{}", agents.len()),
                subsystem: n,
            });
        }
    }
    let na = agents.len();
    let largest = *[
        p.max_states,
        p.max_actions,
        p.max_disturbances,
        p.max_noise,
        p.max_obs,
    ]
    .iter()
    .max()
    .unwrap();
    let spaces: Vec<FiniteSpace> = (1..=largest)
        .map(|k| FiniteSpace::range(format!("n{k}"), k).unwrap())
        .collect();
    let sid = |k: usize| SpaceId(k - 1);

    let nx: Vec<usize> = (0..=horizon)
        .map(|_| weighted(&mut rng, p.max_states, &[1, 3, 3]))
        .collect();
    let nu: Vec<Vec<usize>> = (0..horizon)
        .map(|_| {
            (0..na)
                .map(|_| weighted(&mut rng, p.max_actions, &[1, 4, 1]))
                .collect()
        })
        .collect();
    let nw: Vec<usize> = (0..horizon)
        .map(|_| weighted(&mut rng, p.max_disturbances, &[1, 1, 1]))
        .collect();
    let nv: Vec<Vec<usize>> = (0..=horizon)
        .map(|_| {
            (0..na)
                .map(|_| weighted(&mut rng, p.max_noise, &[3, 1, 1]))
                .collect()
        })
        .collect();
    let ny: Vec<Vec<usize>> = (0..=horizon)
        .map(|_| {
            (0..na)
                .map(|_| weighted(&mut rng, p.max_obs, &[1, 3, 2]))
                .collect()
        })
        .collect();

    let mut dynamics = Vec::new();
    for t in 0..horizon {
        let joint: usize = nu[t].iter().product();
        dynamics.push(
            (0..nx[t] * joint * nw[t])
                .map(|_| rng.gen_range(0..nx[t + 1] as u32))
                .collect(),
        );
    }
    let observation = (0..=horizon)
        .map(|t| {
            (0..na)
                .map(|a| {
                    (0..nx[t] * nv[t][a])
                        .map(|_| rng.gen_range(0..ny[t][a] as u32))
                        .collect()
                })
                .collect()
        })
        .collect();
    let terminal_cost = (0..nx[horizon])
        .map(|_| Some(Cost::from_integer(rng.gen_range(0..10))))
        .collect();
    let stage_costs = p.stage_costs.then(|| {
        (0..horizon)
            .map(|t| {
                let joint: usize = nu[t].iter().product();
                (0..nx[t] * joint)
                    .map(|_| Some(Cost::from_integer(rng.gen_range(0..4))))
                    .collect()
            })
            .collect()
    });
    let initial_states = subset(&mut rng, nx[0]);

    let model = SystemModel {
        horizon,
        agents: agents.clone(),
        num_subsystems: ns,
        spaces,
        state_spaces: nx.iter().map(|&k| sid(k)).collect(),
        initial_states: initial_states.clone(),
        action_spaces: nu
            .iter()
            .map(|r| r.iter().map(|&k| sid(k)).collect())
            .collect(),
        disturbance_spaces: nw.iter().map(|&k| sid(k)).collect(),
        noise_spaces: nv
            .iter()
            .map(|r| r.iter().map(|&k| sid(k)).collect())
            .collect(),
        obs_spaces: ny
            .iter()
            .map(|r| r.iter().map(|&k| sid(k)).collect())
            .collect(),
        dynamics,
        observation,
        terminal_cost,
        stage_costs,
    };

    let mut memory = vec![vec![BTreeSet::new(); na]; horizon + 1];
    let grant = |memory: &mut Vec<Vec<BTreeSet<VarId>>>, from: usize, who: &[usize], v: VarId| {
        for t in from..=horizon {
            for &a in who {
                memory[t][a].insert(v);
            }
        }
    };
    for s in 0..horizon {
        for b in 0..na {
            let owner = agents[b].subsystem;
            // a lone agent's memory is its subsystem's common information,
            // which every lower subsystem must share
            let keeper: Vec<usize> = if agents.iter().filter(|a| a.subsystem == owner).count() == 1
            {
                (0..na).filter(|&a| agents[a].subsystem <= owner).collect()
            } else {
                vec![b]
            };
            for v in [VarId::y(b, s), VarId::u(b, s)] {
                match rng.gen_range(0..10) {
                    0..=1 => {}
                    2..=3 => grant(&mut memory, s + 1, &keeper, v),
                    4..=7 => {
                        // shared with every subsystem up to `top`
                        let top = rng.gen_range(0..=owner);
                        let who: Vec<usize> =
                            (0..na).filter(|&a| agents[a].subsystem <= top).collect();
                        grant(&mut memory, s + 1, &who, v);
                    }
                    _ => {
                        grant(&mut memory, s + 1, &keeper, v);
                        let who: Vec<usize> =
                            (0..na).filter(|&a| agents[a].subsystem <= owner).collect();
                        grant(&mut memory, s + 2, &who, v);
                    }
                }
            }
        }
    }

    let mut initial_common = vec![None; ns];
    if rng.gen_bool(0.3) {
        let mut pool = initial_states.clone();
        pool.shuffle(&mut rng);
        let keep = rng.gen_range(1..=pool.len());
        let mut set: BTreeSet<u32> = pool[..keep].iter().copied().collect();
        for slot in initial_common.iter_mut() {
            if rng.gen_bool(0.3) {
                break;
            }
            *slot = Some(set.clone());
            for x in 0..nx[0] as u32 {
                if rng.gen_bool(0.3) {
                    set.insert(x);
                }
            }
        }
        // a constraint on a higher subsystem needs one on every lower one
        if initial_common[0].is_none() {
            initial_common.iter_mut().for_each(|c| *c = None);
        }
    }

    Instance {
        seed,
        model,
        info: InfoStructure {
            memory,
            initial_common,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate;
    use crate::nested::HatModel;

    #[test]
    fn instances_are_valid_and_constructible() {
        for params in [
            InstanceParams::default(),
            InstanceParams::three_levels(),
            InstanceParams::additive(),
        ] {
            for seed in 0..300 {
                let inst = random_instance(seed, &params);
                let r = validate(&inst.model, &inst.info);
                assert!(r.is_valid(), "seed {seed}: {r}");
                HatModel::build(&inst.model, &inst.info).unwrap();
            }
        }
    }

    #[test]
    fn generation_is_stable() {
        let a = random_instance(42, &InstanceParams::default());
        let b = random_instance(42, &InstanceParams::default());
        assert_eq!(a.model, b.model);
        assert_eq!(a.info, b.info);
    }
}
