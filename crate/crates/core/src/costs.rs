//! Additive costs folded into a terminal cost by tracking the accumulated
//! cost inside the state.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::format::format_cost;
use crate::model::{Cost, FiniteSpace, InfoStructure, SpaceId, SystemModel};

#[derive(Debug, Clone)]
pub struct AugmentedModel {
    /// Terminal-cost model whose state at `t` is a reachable pair `(x, a)`.
    pub model: SystemModel,
    pub info: InfoStructure,
    /// `[t]`: state pairs in index order
    pub pairs: Vec<Vec<(u32, Cost)>>,
    /// `[t]`: achievable accumulated costs `𝒜_t`, ascending
    pub accumulated: Vec<Vec<Cost>>,
}

/// Augment every state with the cost accumulated so far. States at `t = 0`
/// keep their indices (`𝒜_0 = {0}`); later pairs are built by forward
/// reachability, so only achievable sums appear. `cap` bounds the number of
/// pairs at any time step.
pub fn to_terminal(
    model: &SystemModel,
    info: &InfoStructure,
    cap: usize,
) -> Result<AugmentedModel> {
    crate::model::validate(model, info).into_result()?;
    let t_max = model.horizon;
    let mut spaces = model.spaces.clone();
    let mut state_spaces = Vec::with_capacity(t_max + 1);
    let mut pairs: Vec<Vec<(u32, Cost)>> = vec![(0..model.num_states(0) as u32)
        .map(|x| (x, Cost::default()))
        .collect()];
    let mut dynamics = Vec::with_capacity(t_max);
    for t in 0..t_max {
        let joint = model.joint_actions(t);
        let nw = model.num_disturbances(t);
        let mut next = BTreeSet::new();
        let mut raw = Vec::with_capacity(pairs[t].len() * joint * nw);
        for &(x, a) in &pairs[t] {
            for ui in 0..joint {
                let u = model.joint_decode(t, ui);
                let a2 = a + model.stage(t, x, &u);
                for w in 0..nw as u32 {
                    let p = (model.step(t, x, &u, w), a2);
                    next.insert(p);
                    raw.push(p);
                }
            }
        }
        if next.len() > cap {
            return Err(Error::Resource {
                what: "augmented states",
                count: next.len() as u128,
                cap: cap as u128,
            });
        }
        let next: Vec<(u32, Cost)> = next.into_iter().collect();
        dynamics.push(
            raw.iter()
                .map(|p| next.binary_search(p).unwrap() as u32)
                .collect(),
        );
        pairs.push(next);
    }
    for (t, ps) in pairs.iter().enumerate() {
        if t == 0 {
            state_spaces.push(model.state_spaces[0]);
            continue;
        }
        let base = model.space(model.state_spaces[t]);
        let tokens = ps
            .iter()
            .map(|(x, a)| format!("{}+{}", base.token(*x), format_cost(a)))
            .collect();
        spaces.push(FiniteSpace::new(format!("{}+acc{t}", base.name()), tokens)?);
        state_spaces.push(SpaceId(spaces.len() - 1));
    }
    let observation = (0..=t_max)
        .map(|t| {
            (0..model.num_agents())
                .map(|k| {
                    let nv = model.num_noise(t, k);
                    pairs[t]
                        .iter()
                        .flat_map(|&(x, _)| (0..nv as u32).map(move |v| (x, v)))
                        .map(|(x, v)| model.observe(t, k, x, v))
                        .collect()
                })
                .collect()
        })
        .collect();
    let terminal_cost = pairs[t_max]
        .iter()
        .map(|&(x, a)| Some(a + model.terminal(x)))
        .collect();
    let accumulated = pairs
        .iter()
        .map(|ps| {
            let s: BTreeSet<Cost> = ps.iter().map(|p| p.1).collect();
            s.into_iter().collect()
        })
        .collect();
    let augmented = SystemModel {
        spaces,
        state_spaces,
        dynamics,
        observation,
        terminal_cost,
        stage_costs: None,
        ..model.clone()
    };
    Ok(AugmentedModel {
        model: augmented,
        info: info.clone(),
        pairs,
        accumulated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{simulate, worst_case_cost};
    use crate::random::{random_instance, InstanceParams};

    #[test]
    fn zero_stage_costs_keep_the_model() {
        for seed in 0..40 {
            let mut inst = random_instance(seed, &InstanceParams::additive());
            let sc = inst.model.stage_costs.as_mut().unwrap();
            sc.iter_mut()
                .flatten()
                .for_each(|c| *c = Some(Cost::default()));
            let aug = to_terminal(&inst.model, &inst.info, 1000).unwrap();
            assert!(aug.accumulated.iter().all(|a| a == &vec![Cost::default()]));
            assert_eq!(
                aug.model.terminal_cost,
                inst.model
                    .terminal_cost
                    .iter()
                    .enumerate()
                    .filter(|(x, _)| aug.pairs[inst.model.horizon]
                        .iter()
                        .any(|p| p.0 as usize == *x))
                    .map(|(_, c)| *c)
                    .collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn one_step_costs_by_action() {
        let inst = (0..200)
            .map(|s| random_instance(s, &InstanceParams::additive()))
            .find(|i| i.model.horizon == 1 && i.model.num_agents() == 1)
            .unwrap();
        let mut m = inst.model.clone();
        let joint = m.joint_actions(0);
        m.stage_costs = Some(vec![(0..m.num_states(0) * joint)
            .map(|i| Some(Cost::from_integer(1 + (i % joint).min(1) as i64)))
            .collect()]);
        let aug = to_terminal(&m, &inst.info, 1000).unwrap();
        let expect: Vec<Cost> = if joint > 1 {
            vec![1.into(), 2.into()]
        } else {
            vec![1.into()]
        };
        assert_eq!(aug.accumulated[1], expect);
        for (i, &(x, a)) in aug.pairs[1].iter().enumerate() {
            assert_eq!(aug.model.terminal(i as u32), a + m.terminal(x));
        }
    }

    #[test]
    fn rollout_cost_is_preserved() {
        for seed in 0..60 {
            let inst = random_instance(seed, &InstanceParams::additive());
            let aug = to_terminal(&inst.model, &inst.info, 1000).unwrap();
            crate::model::validate(&aug.model, &aug.info)
                .into_result()
                .unwrap();
            let g = |t: usize, a: usize, y: u32, l: &[u32], c: &[u32]| -> crate::Result<u32> {
                let h = (t + 3 * a) as u32 + y + l.iter().sum::<u32>() + 2 * c.iter().sum::<u32>();
                Ok(h % inst.model.num_actions(t, a) as u32)
            };
            for p in crate::model::all_primitives(&inst.model, &inst.info) {
                let a = simulate(&inst.model, &inst.info, &g, &p).unwrap();
                let b = simulate(&aug.model, &aug.info, &g, &p).unwrap();
                assert_eq!(a.cost, b.cost, "seed {seed}");
                assert_eq!(a.actions, b.actions);
            }
            assert_eq!(
                worst_case_cost(&inst.model, &inst.info, &g).unwrap(),
                worst_case_cost(&aug.model, &aug.info, &g).unwrap()
            );
        }
    }

    #[test]
    fn cap_is_reported() {
        let inst = (0..200)
            .map(|s| random_instance(s, &InstanceParams::additive()))
            .find(|i| i.model.horizon == 2)
            .unwrap();
        assert!(matches!(
            to_terminal(&inst.model, &inst.info, 0),
            Err(Error::Resource { .. })
        ));
    }
}
