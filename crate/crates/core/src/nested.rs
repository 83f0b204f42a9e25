//! The equivalent system whose state bundles the plant state with every
//! agent's current observation and private memory, and whose decisions are
//! partial actions chosen from common information alone.
//!
//! A hat state at time `t` is laid out as
//! `[x, y_0, .., y_{K-1}, private(agent 0).., private(agent 1).., ..]`
//! with private values in ascending identifier order.

use std::collections::{BTreeMap, HashMap};

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::model::{
    self, AgentStrategy, Cost, InfoStructure, MemoryLayout, Primitives, SystemModel, VarId, VarKind,
};

pub type Hat = Box<[u32]>;

/// Where a variable realized at `t + 1` is read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    /// A position inside the hat state at `t`.
    Hat(usize),
    /// The action taken by an agent at `t`.
    Action(usize),
}

#[derive(Debug, Clone)]
struct Step {
    /// `[agent]`: sources of the private memory at `t + 1`
    next_private: Vec<Vec<Source>>,
    /// `[subsystem]`: sources of the new information at `t + 1`
    new_info: Vec<Vec<Source>>,
}

#[derive(Debug, Clone)]
pub struct HatModel {
    pub model: SystemModel,
    pub info: InfoStructure,
    pub layout: MemoryLayout,
    /// `[t][agent]` offset of the private block
    priv_off: Vec<Vec<usize>>,
    /// `[t]` total hat length
    len: Vec<usize>,
    steps: Vec<Step>,
    /// `[t][subsystem]` identifiers of `Z_t`
    new_ids: Vec<Vec<Vec<VarId>>>,
    /// `[t][n]`: for each identifier of `C_t^n` in order, `(s, i)` such
    /// that it is the `i`-th component of `Z_s^n`
    common_src: Vec<Vec<Vec<(usize, usize)>>>,
}

impl HatModel {
    /// Build the equivalent system. Fails if some variable entering a memory
    /// at `t + 1` cannot be read off the hat state and actions at `t`.
    pub fn build(model: &SystemModel, info: &InfoStructure) -> Result<Self> {
        model::validate(model, info).into_result()?;
        let layout = MemoryLayout::new(model, info)?;
        let na = model.num_agents();
        let t_max = model.horizon;
        let mut priv_off = Vec::new();
        let mut len = Vec::new();
        for t in 0..=t_max {
            let mut off = 1 + na;
            let mut row = Vec::new();
            for a in 0..na {
                row.push(off);
                off += layout.private[t][a].len();
            }
            priv_off.push(row);
            len.push(off);
        }
        let mut new_ids = Vec::new();
        for t in 0..=t_max {
            let mut row = Vec::new();
            for n in 0..model.num_subsystems {
                let z: Vec<VarId> = info.new_information(model, n, t)?.into_iter().collect();
                if t == 0 && !z.is_empty() {
                    return Err(Error::Construction(format!(
                        "new information at t=0 must be empty, found {}",
                        z[0]
                    )));
                }
                row.push(z);
            }
            new_ids.push(row);
        }
        let mut steps = Vec::new();
        for t in 0..t_max {
            let resolve = |v: &VarId| -> Result<Source> {
                if v.time == t {
                    return Ok(match v.kind {
                        VarKind::Y => Source::Hat(1 + v.agent),
                        VarKind::U => Source::Action(v.agent),
                    });
                }
                for a in 0..na {
                    if let Some(i) = layout.private[t][a].iter().position(|p| p == v) {
                        return Ok(Source::Hat(priv_off[t][a] + i));
                    }
                }
                Err(Error::Construction(format!(
                    "{v} is needed at t={} but is held privately by no agent at t={t}",
                    t + 1
                )))
            };
            let mut next_private = Vec::new();
            for a in 0..na {
                next_private.push(
                    layout.private[t + 1][a]
                        .iter()
                        .map(&resolve)
                        .collect::<Result<Vec<_>>>()?,
                );
            }
            let mut new_info = Vec::new();
            for n in 0..model.num_subsystems {
                new_info.push(
                    new_ids[t + 1][n]
                        .iter()
                        .map(&resolve)
                        .collect::<Result<Vec<_>>>()?,
                );
            }
            steps.push(Step {
                next_private,
                new_info,
            });
        }
        let mut common_src = Vec::new();
        for t in 0..=t_max {
            let mut row = Vec::new();
            for n in 0..model.num_subsystems {
                let mut src = Vec::new();
                for v in &layout.common[t][n] {
                    let found = (0..=t)
                        .find_map(|s| new_ids[s][n].iter().position(|z| z == v).map(|i| (s, i)));
                    src.push(found.ok_or_else(|| {
                        Error::Internal(format!("{v} missing from new information"))
                    })?);
                }
                row.push(src);
            }
            common_src.push(row);
        }
        Ok(HatModel {
            model: model.clone(),
            info: info.clone(),
            layout,
            priv_off,
            len,
            steps,
            new_ids,
            common_src,
        })
    }

    pub fn horizon(&self) -> usize {
        self.model.horizon
    }

    pub fn num_subsystems(&self) -> usize {
        self.model.num_subsystems
    }

    pub fn hat_len(&self, t: usize) -> usize {
        self.len[t]
    }

    pub fn new_info_ids(&self, t: usize, n: usize) -> &[VarId] {
        &self.new_ids[t][n]
    }

    /// Sources of `Z_{t+1}^n`.
    pub fn new_info_sources(&self, t: usize, n: usize) -> &[Source] {
        &self.steps[t].new_info[n]
    }

    pub fn private_range(&self, t: usize, agent: usize) -> std::ops::Range<usize> {
        let start = self.priv_off[t][agent];
        start..start + self.layout.private[t][agent].len()
    }

    /// The argument `(y, l)` of agent `agent`'s partial action, as a single
    /// vector with the observation first.
    pub fn view(&self, t: usize, agent: usize, hat: &[u32]) -> Vec<u32> {
        let mut v = Vec::with_capacity(1 + self.layout.private[t][agent].len());
        self.view_into(t, agent, hat, &mut v);
        v
    }

    /// [`HatModel::view`] into a reused buffer.
    pub fn view_into(&self, t: usize, agent: usize, hat: &[u32], out: &mut Vec<u32>) {
        out.clear();
        out.push(hat[1 + agent]);
        out.extend_from_slice(&hat[self.private_range(t, agent)]);
    }

    /// Hat states at `t = 0` for one initial state.
    pub fn initial_hats(&self, x0: u32) -> Vec<Hat> {
        let m = &self.model;
        let na = m.num_agents();
        let noise = model::product((0..na).map(|a| m.num_noise(0, a)).collect());
        let mut out: Vec<Hat> = noise
            .iter()
            .map(|v| {
                let mut h = vec![x0];
                for a in 0..na {
                    h.push(m.observe(0, a, x0, v[a]));
                }
                h.into_boxed_slice()
            })
            .collect();
        out.sort();
        out.dedup();
        out
    }

    fn check_inputs(&self, t: usize, hat: &[u32], u: &[u32]) -> Result<()> {
        if t >= self.horizon() {
            return Err(Error::OutOfRange {
                what: "time",
                index: t,
                limit: self.horizon().saturating_sub(1),
            });
        }
        if hat.len() != self.len[t] {
            return Err(Error::OutOfRange {
                what: "hat length",
                index: hat.len(),
                limit: self.len[t],
            });
        }
        if hat[0] as usize >= self.model.num_states(t) {
            return Err(Error::OutOfRange {
                what: "state",
                index: hat[0] as usize,
                limit: self.model.num_states(t) - 1,
            });
        }
        if u.len() != self.model.num_agents() {
            return Err(Error::OutOfRange {
                what: "action count",
                index: u.len(),
                limit: self.model.num_agents(),
            });
        }
        for (a, &ua) in u.iter().enumerate() {
            if ua as usize >= self.model.num_actions(t, a) {
                return Err(Error::OutOfRange {
                    what: "action",
                    index: ua as usize,
                    limit: self.model.num_actions(t, a) - 1,
                });
            }
        }
        Ok(())
    }

    fn read(hat: &[u32], u: &[u32], s: Source) -> u32 {
        match s {
            Source::Hat(i) => hat[i],
            Source::Action(a) => u[a],
        }
    }

    /// Hat dynamics without input checks.
    pub fn step_unchecked(&self, t: usize, hat: &[u32], u: &[u32], w: u32, v: &[u32]) -> Hat {
        let m = &self.model;
        let x = m.step(t, hat[0], u, w);
        let mut out = Vec::with_capacity(self.len[t + 1]);
        out.push(x);
        for (a, &va) in v.iter().enumerate() {
            out.push(m.observe(t + 1, a, x, va));
        }
        for srcs in &self.steps[t].next_private {
            out.extend(srcs.iter().map(|&s| Self::read(hat, u, s)));
        }
        out.into_boxed_slice()
    }

    /// `x̂_{t+1} = f̂_t(x̂_t, û_t, w_t, v_{t+1})`, with `û_t` already applied
    /// to the hat state, i.e. given as the realized joint action.
    pub fn hat_step(&self, t: usize, hat: &[u32], u: &[u32], w: u32, v: &[u32]) -> Result<Hat> {
        self.check_inputs(t, hat, u)?;
        if w as usize >= self.model.num_disturbances(t) {
            return Err(Error::OutOfRange {
                what: "disturbance",
                index: w as usize,
                limit: self.model.num_disturbances(t) - 1,
            });
        }
        for (a, &va) in v.iter().enumerate() {
            if va as usize >= self.model.num_noise(t + 1, a) {
                return Err(Error::OutOfRange {
                    what: "noise",
                    index: va as usize,
                    limit: self.model.num_noise(t + 1, a) - 1,
                });
            }
        }
        Ok(self.step_unchecked(t, hat, u, w, v))
    }

    pub fn observe_unchecked(&self, t: usize, n: usize, hat: &[u32], u: &[u32]) -> Vec<u32> {
        self.steps[t].new_info[n]
            .iter()
            .map(|&s| Self::read(hat, u, s))
            .collect()
    }

    /// `z_{t+1}^n = ĥ_t^n(x̂_t, û_t)`: realized new information in identifier
    /// order. Reads only the hat state and the realized actions.
    pub fn hat_observe(&self, t: usize, n: usize, hat: &[u32], u: &[u32]) -> Result<Vec<u32>> {
        self.check_inputs(t, hat, u)?;
        if n >= self.num_subsystems() {
            return Err(Error::OutOfRange {
                what: "subsystem",
                index: n,
                limit: self.num_subsystems() - 1,
            });
        }
        Ok(self.observe_unchecked(t, n, hat, u))
    }

    pub fn terminal(&self, hat: &[u32]) -> Cost {
        self.model.terminal(hat[0])
    }

    /// From realized `C_t^j` values, the new-information sequence
    /// `z_1^m, .., z_t^m` of a less informed subsystem `m >= j`.
    pub fn project_new(
        &self,
        j: usize,
        m: usize,
        t: usize,
        common: &[u32],
    ) -> Result<Vec<Vec<u32>>> {
        let ids = &self.layout.common[t][j];
        let mut out = Vec::with_capacity(t);
        for s in 1..=t {
            let mut z = Vec::with_capacity(self.new_ids[s][m].len());
            for id in &self.new_ids[s][m] {
                let pos = ids.iter().position(|v| v == id).ok_or_else(|| {
                    Error::Internal(format!("{id} is not common to subsystem {}", j + 1))
                })?;
                z.push(common[pos]);
            }
            out.push(z);
        }
        Ok(out)
    }

    /// Realized `C_t^n` values (identifier order) from the sequence
    /// `z_0^n, .., z_t^n`.
    pub fn common_from_new(&self, n: usize, t: usize, zs: &[Vec<u32>]) -> Vec<u32> {
        self.common_src[t][n]
            .iter()
            .map(|&(s, i)| zs[s][i])
            .collect()
    }

    /// Inverse of [`HatModel::common_from_new`]: split realized `C_t^n`
    /// values into `z_0^n, .., z_t^n`.
    pub fn new_from_common(&self, n: usize, t: usize, common: &[u32]) -> Vec<Vec<u32>> {
        let mut zs: Vec<Vec<u32>> = (0..=t).map(|s| vec![0; self.new_ids[s][n].len()]).collect();
        for (k, &(s, i)) in self.common_src[t][n].iter().enumerate() {
            zs[s][i] = common[k];
        }
        zs
    }
}

/// `û_t^{k,n}`: a table from feasible `(y, l)` views to actions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PartialAction {
    pub map: BTreeMap<Vec<u32>, u32>,
}

impl PartialAction {
    pub fn apply(&self, view: &[u32]) -> Option<u32> {
        self.map.get(view).copied()
    }
}

/// Partial strategy `ĝ_t^{k,n}(c_t^n)`, tabulated on reachable common
/// information realizations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PartialStrategy {
    pub tables: HashMap<(usize, usize, Vec<u32>), PartialAction>,
}

impl PartialStrategy {
    pub fn partial_action(&self, t: usize, agent: usize, common: &[u32]) -> Option<&PartialAction> {
        self.tables.get(&(t, agent, common.to_vec()))
    }
}

/// Tabulate `ĝ_t^{k,n}(c)(y, l) = g_t^{k,n}(y, l, c)` over every history
/// reachable under `g`.
pub fn lift_strategy(hm: &HatModel, g: &dyn AgentStrategy) -> Result<PartialStrategy> {
    let m = &hm.model;
    let mut out = PartialStrategy::default();
    for p in model::all_primitives(m, &hm.info) {
        let tr = model::simulate_with(m, &hm.info, &hm.layout, g, &p)?;
        for t in 0..m.horizon {
            for a in 0..m.num_agents() {
                let n = m.agents[a].subsystem;
                let value = |v: &VarId| model::var_value(&tr.observations, &tr.actions, v);
                let common: Vec<u32> = hm.layout.common[t][n].iter().map(value).collect();
                let mut view = vec![tr.observations[t][a]];
                view.extend(hm.layout.private[t][a].iter().map(value));
                out.tables
                    .entry((t, a, common))
                    .or_default()
                    .map
                    .insert(view, tr.actions[t][a]);
            }
        }
    }
    Ok(out)
}

/// `g_t^{k,n}(y, l, c) := ĝ_t^{k,n}(c)(y, l)`.
pub struct Lowered<'a> {
    strategy: &'a PartialStrategy,
    subsystem_of: Vec<usize>,
}

pub fn lower_strategy<'a>(hm: &HatModel, s: &'a PartialStrategy) -> Lowered<'a> {
    Lowered {
        strategy: s,
        subsystem_of: hm.model.agents.iter().map(|a| a.subsystem).collect(),
    }
}

impl AgentStrategy for Lowered<'_> {
    fn act(
        &self,
        t: usize,
        agent: usize,
        obs: u32,
        private: &[u32],
        common: &[u32],
    ) -> Result<u32> {
        let mut view = vec![obs];
        view.extend_from_slice(private);
        self.strategy
            .partial_action(t, agent, common)
            .and_then(|pa| pa.apply(&view))
            .ok_or(Error::StrategyUndefined {
                agent,
                subsystem: self.subsystem_of[agent],
                t,
            })
    }
}

/// A rollout of the equivalent system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HatTrajectory {
    pub hats: Vec<Hat>,
    pub actions: Vec<Vec<u32>>,
    /// `[n][t]`
    pub new_info: Vec<Vec<Vec<u32>>>,
    pub cost: Cost,
}

/// Roll the equivalent system forward under a partial strategy.
pub fn hat_rollout(hm: &HatModel, s: &PartialStrategy, p: &Primitives) -> Result<HatTrajectory> {
    let m = &hm.model;
    let na = m.num_agents();
    let ns = m.num_subsystems;
    let mut hat: Hat = {
        let mut h = vec![p.x0];
        for a in 0..na {
            h.push(m.observe(0, a, p.x0, p.v[0][a]));
        }
        h.into_boxed_slice()
    };
    let mut new_info: Vec<Vec<Vec<u32>>> = (0..ns).map(|_| vec![Vec::new()]).collect();
    let mut hats = vec![hat.clone()];
    let mut actions = Vec::new();
    let mut cost = Cost::zero();
    for t in 0..m.horizon {
        let mut u = Vec::with_capacity(na);
        for a in 0..na {
            let n = m.agents[a].subsystem;
            let common = hm.common_from_new(n, t, &new_info[n]);
            let view = hm.view(t, a, &hat);
            let ua = s
                .partial_action(t, a, &common)
                .and_then(|pa| pa.apply(&view))
                .ok_or(Error::StrategyUndefined {
                    agent: a,
                    subsystem: n,
                    t,
                })?;
            u.push(ua);
        }
        for (n, z) in new_info.iter_mut().enumerate() {
            z.push(hm.hat_observe(t, n, &hat, &u)?);
        }
        cost += m.stage(t, hat[0], &u);
        hat = hm.hat_step(t, &hat, &u, p.w[t], &p.v[t + 1])?;
        hats.push(hat.clone());
        actions.push(u);
    }
    cost += hm.terminal(&hat);
    Ok(HatTrajectory {
        hats,
        actions,
        new_info,
        cost,
    })
}

/// Worst case of [`hat_rollout`] over all primitives.
pub fn hat_worst_case(hm: &HatModel, s: &PartialStrategy) -> Result<Cost> {
    let mut worst: Option<Cost> = None;
    for p in model::all_primitives(&hm.model, &hm.info) {
        let c = hat_rollout(hm, s, &p)?.cost;
        if worst.is_none_or(|w| c > w) {
            worst = Some(c);
        }
    }
    worst.ok_or(Error::InconsistentInitial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Agent, FiniteSpace, SpaceId};
    use std::collections::BTreeSet;

    /// Two agents in two subsystems on a 2-state chain. Agent 0 sees the
    /// state, agent 1 sees nothing. Agent 0 also records agent 1's actions.
    fn two_level() -> (SystemModel, InfoStructure) {
        let spaces = vec![
            FiniteSpace::range("x", 2).unwrap(),
            FiniteSpace::range("u", 2).unwrap(),
            FiniteSpace::range("one", 1).unwrap(),
        ];
        let model = SystemModel {
            horizon: 2,
            agents: vec![
                Agent {
                    name: "a".into(),
                    subsystem: 0,
                },
                Agent {
                    name: "b".into(),
                    subsystem: 1,
                },
            ],
            num_subsystems: 2,
            spaces,
            state_spaces: vec![SpaceId(0); 3],
            initial_states: vec![0, 1],
            action_spaces: vec![vec![SpaceId(1), SpaceId(1)]; 2],
            disturbance_spaces: vec![SpaceId(2); 2],
            noise_spaces: vec![vec![SpaceId(2); 2]; 3],
            obs_spaces: vec![vec![SpaceId(0), SpaceId(2)]; 3],
            // x' = x xor u_a xor u_b
            dynamics: vec![vec![0, 1, 1, 0, 1, 0, 0, 1]; 2],
            observation: vec![vec![vec![0, 1], vec![0, 0]]; 3],
            terminal_cost: vec![Some(Cost::from_integer(0)), Some(Cost::from_integer(1))],
            stage_costs: None,
        };
        let mem_a = |t: usize| -> BTreeSet<VarId> {
            (0..t)
                .flat_map(|s| [VarId::y(0, s), VarId::u(0, s), VarId::u(1, s)])
                .collect()
        };
        let mem_b = |t: usize| -> BTreeSet<VarId> { (0..t).map(|s| VarId::u(1, s)).collect() };
        let info = InfoStructure {
            memory: (0..3).map(|t| vec![mem_a(t), mem_b(t)]).collect(),
            initial_common: vec![None, None],
        };
        (model, info)
    }

    #[test]
    fn new_information_of_recorded_action_is_the_action() {
        let (m, i) = two_level();
        let hm = HatModel::build(&m, &i).unwrap();
        let hat = vec![1, 1, 0];
        assert_eq!(hm.hat_observe(0, 1, &hat, &[1, 0]).unwrap(), vec![0]);
        assert_eq!(hm.hat_observe(0, 0, &hat, &[0, 1]).unwrap(), vec![1, 0, 1]);
        let next = hm.hat_step(0, &hat, &[0, 0], 0, &[0, 0]).unwrap();
        assert_eq!(next[0], 1);
        assert!(hm.hat_step(2, &hat, &[0, 0], 0, &[0, 0]).is_err());
    }

    #[test]
    fn unreconstructible_identifier_is_named() {
        let (m, mut i) = two_level();
        // agent 1 recalls its first action only from t=2; at t=1 the value
        // sat in subsystem 1's common information, which no hat carries
        i.memory[1][1].clear();
        match HatModel::build(&m, &i) {
            Err(Error::Construction(msg)) => assert!(msg.contains("U[a1@0]"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hat_rollout_matches_original() {
        let (m, i) = two_level();
        let hm = HatModel::build(&m, &i).unwrap();
        let g = |t: usize, a: usize, y: u32, _: &[u32], c: &[u32]| -> Result<u32> {
            Ok(((y as usize + t + a + c.iter().sum::<u32>() as usize) % 2) as u32)
        };
        let lifted = lift_strategy(&hm, &g).unwrap();
        for p in model::all_primitives(&m, &i) {
            let orig = model::simulate(&m, &i, &g, &p).unwrap();
            let hat = hat_rollout(&hm, &lifted, &p).unwrap();
            assert_eq!(orig.actions, hat.actions);
            assert_eq!(orig.cost, hat.cost);
            let states: Vec<u32> = hat.hats.iter().map(|h| h[0]).collect();
            assert_eq!(orig.states, states);
            // common information reassembled from new information
            for t in 0..=m.horizon {
                for n in 0..2 {
                    let c = hm.common_from_new(n, t, &hat.new_info[n][..=t]);
                    let direct: Vec<u32> = hm.layout.common[t][n]
                        .iter()
                        .map(|v| model::var_value(&orig.observations, &orig.actions, v))
                        .collect();
                    assert_eq!(c, direct);
                    assert_eq!(hm.new_from_common(n, t, &c), hat.new_info[n][..=t].to_vec());
                }
            }
        }
        let lowered = lower_strategy(&hm, &lifted);
        assert_eq!(
            model::worst_case_cost(&m, &i, &g).unwrap(),
            model::worst_case_cost(&m, &i, &lowered).unwrap()
        );
        assert_eq!(
            hat_worst_case(&hm, &lifted).unwrap(),
            model::worst_case_cost(&m, &i, &g).unwrap()
        );
    }

    #[test]
    fn constant_strategy_lifts_to_constant_tables() {
        let (m, i) = two_level();
        let hm = HatModel::build(&m, &i).unwrap();
        let g = |_: usize, _: usize, _: u32, _: &[u32], _: &[u32]| -> Result<u32> { Ok(1) };
        let lifted = lift_strategy(&hm, &g).unwrap();
        assert!(lifted
            .tables
            .values()
            .all(|pa| pa.map.values().all(|&u| u == 1)));
    }
}
