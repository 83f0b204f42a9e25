//! Brute-force ground truth over agent-level strategy profiles.
//!
//! The search works directly on realized histories and never builds hat
//! states or information states. A world is the current state, the cost
//! accumulated so far, the current observations and the values of every
//! past variable some agent may still remember. For a set of worlds the
//! optimal cost-to-go is the minimum, over actions at each distinct
//! decision argument `(agent, y, memory)`, of the cost-to-go of all
//! successor worlds. Worlds whose memories differ for every agent can never
//! share a decision argument again (memories only grow), so they are
//! searched independently and the results combined by `max`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::model::{
    product, AgentStrategy, Cost, InfoStructure, MemoryLayout, SystemModel, VarId, VarKind,
};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct World {
    x: u32,
    acc: Cost,
    /// current observation of each agent
    y: Vec<u32>,
    /// values of the remembered past variables, in `Ctx::remembered[t]` order
    hist: Vec<u32>,
}

/// `(t, agent, y, memory values in identifier order)`.
pub type DecisionKey = (usize, usize, u32, Vec<u32>);

struct Ctx<'a> {
    model: &'a SystemModel,
    info: &'a InfoStructure,
    /// `[t]`: variables with time `< t` that appear in some memory at a time `>= t`
    remembered: Vec<Vec<VarId>>,
    /// `[t][agent]`: positions of the agent's memory inside `remembered[t]`
    mem_pos: Vec<Vec<Vec<usize>>>,
    /// `[t]`: joint action tuples in index order
    joints: Vec<Vec<Vec<u32>>>,
    /// `[t]`: noise tuples
    noises: Vec<Vec<Vec<u32>>>,
}

impl<'a> Ctx<'a> {
    fn new(model: &'a SystemModel, info: &'a InfoStructure) -> Self {
        let t_max = model.horizon;
        let na = model.num_agents();
        let mut remembered = vec![Vec::new(); t_max + 1];
        let mut acc = BTreeSet::new();
        for t in (0..=t_max).rev() {
            for a in 0..na {
                acc.extend(info.memory[t][a].iter().copied());
            }
            remembered[t] = acc.iter().copied().filter(|v: &VarId| v.time < t).collect();
        }
        let mem_pos = (0..=t_max)
            .map(|t| {
                (0..na)
                    .map(|a| {
                        info.memory[t][a]
                            .iter()
                            .map(|v| remembered[t].binary_search(v).unwrap())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let joints = (0..t_max)
            .map(|t| product((0..na).map(|a| model.num_actions(t, a)).collect()))
            .collect();
        let noises = (0..=t_max)
            .map(|t| product((0..na).map(|a| model.num_noise(t, a)).collect()))
            .collect();
        Ctx {
            model,
            info,
            remembered,
            mem_pos,
            joints,
            noises,
        }
    }

    fn initial_worlds(&self) -> Vec<World> {
        let mut out = BTreeSet::new();
        for x in self.model.feasible_initial_states(self.info) {
            for v in &self.noises[0] {
                out.insert(World {
                    x,
                    acc: Cost::zero(),
                    y: self.observe(0, x, v),
                    hist: Vec::new(),
                });
            }
        }
        out.into_iter().collect()
    }

    fn observe(&self, t: usize, x: u32, v: &[u32]) -> Vec<u32> {
        (0..v.len())
            .map(|a| self.model.observe(t, a, x, v[a]))
            .collect()
    }

    fn memory(&self, t: usize, a: usize, w: &World) -> Vec<u32> {
        self.mem_pos[t][a].iter().map(|&p| w.hist[p]).collect()
    }

    fn key(&self, t: usize, a: usize, w: &World) -> DecisionKey {
        (t, a, w.y[a], self.memory(t, a, w))
    }

    /// All successors of `w` under joint action `u`.
    fn successors(&self, t: usize, w: &World, u: &[u32], out: &mut BTreeSet<World>) {
        let m = self.model;
        let acc = w.acc + m.stage(t, w.x, u);
        let hist: Vec<u32> = self.remembered[t + 1]
            .iter()
            .map(|var| {
                if var.time < t {
                    w.hist[self.remembered[t].binary_search(var).unwrap()]
                } else {
                    match var.kind {
                        VarKind::Y => w.y[var.agent],
                        VarKind::U => u[var.agent],
                    }
                }
            })
            .collect();
        for dw in 0..m.num_disturbances(t) as u32 {
            let x = m.step(t, w.x, u, dw);
            for v in &self.noises[t + 1] {
                out.insert(World {
                    x,
                    acc,
                    y: self.observe(t + 1, x, v),
                    hist: hist.clone(),
                });
            }
        }
    }

    /// Split worlds into groups that never share a decision argument.
    fn components(&self, t: usize, worlds: Vec<World>) -> Vec<Vec<World>> {
        let n = worlds.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for a in 0..self.model.num_agents() {
            let mut first: HashMap<Vec<u32>, usize> = HashMap::new();
            for (i, w) in worlds.iter().enumerate() {
                let j = *first.entry(self.memory(t, a, w)).or_insert(i);
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<World>> = BTreeMap::new();
        for (i, w) in worlds.into_iter().enumerate() {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(w);
        }
        groups.into_values().collect()
    }
}

/// Exact number of distinct strategy profiles over reachable arguments,
/// with the reachable arguments per `(t, agent)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyCount {
    pub total: BigUint,
    /// `[t][agent]`
    pub arguments: Vec<Vec<usize>>,
}

fn reachable_arguments(model: &SystemModel, info: &InfoStructure) -> Vec<Vec<Vec<DecisionKey>>> {
    let ctx = Ctx::new(model, info);
    let na = model.num_agents();
    let mut worlds = ctx.initial_worlds();
    let mut out = Vec::new();
    for t in 0..model.horizon {
        let mut keys = vec![BTreeSet::new(); na];
        for w in &worlds {
            for (a, k) in keys.iter_mut().enumerate() {
                k.insert(ctx.key(t, a, w));
            }
        }
        out.push(keys.into_iter().map(|k| k.into_iter().collect()).collect());
        let mut next = BTreeSet::new();
        for w in &worlds {
            for u in &ctx.joints[t] {
                ctx.successors(t, w, u, &mut next);
            }
        }
        worlds = next.into_iter().collect();
    }
    out
}

/// Product rule: `Π |U_t^k|^(#reachable arguments of k at t)`.
pub fn count_strategies(model: &SystemModel, info: &InfoStructure) -> StrategyCount {
    let args = reachable_arguments(model, info);
    let mut total = BigUint::one();
    for (t, per_agent) in args.iter().enumerate() {
        for (a, keys) in per_agent.iter().enumerate() {
            total *= BigUint::from(model.num_actions(t, a)).pow(keys.len() as u32);
        }
    }
    StrategyCount {
        total,
        arguments: args
            .iter()
            .map(|r| r.iter().map(Vec::len).collect())
            .collect(),
    }
}

/// How agent arguments map onto decision keys.
#[derive(Debug, Clone, PartialEq, Eq)]
struct ArgLayout {
    subsystem: Vec<usize>,
    /// `[t][agent]` memory identifiers in order
    memory: Vec<Vec<Vec<VarId>>>,
    /// `[t][agent]` positions of the private values inside the memory
    private_pos: Vec<Vec<Vec<usize>>>,
    /// `[t][agent]` positions of the common values inside the memory
    common_pos: Vec<Vec<Vec<usize>>>,
}

impl ArgLayout {
    fn new(model: &SystemModel, info: &InfoStructure) -> Result<Self> {
        let layout = MemoryLayout::new(model, info)?;
        let subsystem: Vec<usize> = model.agents.iter().map(|a| a.subsystem).collect();
        let memory: Vec<Vec<Vec<VarId>>> = info
            .memory
            .iter()
            .map(|r| r.iter().map(|m| m.iter().copied().collect()).collect())
            .collect();
        let pos = |ids: &[VarId], mem: &[VarId]| -> Vec<usize> {
            ids.iter().map(|v| mem.binary_search(v).unwrap()).collect()
        };
        let private_pos = (0..memory.len())
            .map(|t| {
                (0..subsystem.len())
                    .map(|a| pos(&layout.private[t][a], &memory[t][a]))
                    .collect()
            })
            .collect();
        let common_pos = (0..memory.len())
            .map(|t| {
                (0..subsystem.len())
                    .map(|a| pos(&layout.common[t][subsystem[a]], &memory[t][a]))
                    .collect()
            })
            .collect();
        Ok(ArgLayout {
            subsystem,
            memory,
            private_pos,
            common_pos,
        })
    }
}

/// A strategy profile as an explicit table over decision arguments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableStrategy {
    pub table: BTreeMap<DecisionKey, u32>,
    layout: std::sync::Arc<ArgLayout>,
}

impl AgentStrategy for TableStrategy {
    fn act(
        &self,
        t: usize,
        agent: usize,
        obs: u32,
        private: &[u32],
        common: &[u32],
    ) -> Result<u32> {
        let l = &self.layout;
        let mut mem = vec![0u32; l.memory[t][agent].len()];
        for (&p, &x) in l.private_pos[t][agent].iter().zip(private) {
            mem[p] = x;
        }
        for (&p, &x) in l.common_pos[t][agent].iter().zip(common) {
            mem[p] = x;
        }
        self.table
            .get(&(t, agent, obs, mem))
            .copied()
            .ok_or(Error::StrategyUndefined {
                agent,
                subsystem: l.subsystem[agent],
                t,
            })
    }
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub value: Cost,
    pub strategy: TableStrategy,
    /// Joint assignments and search nodes visited.
    pub searched: u64,
}

struct Node {
    value: Cost,
    choice: Vec<(DecisionKey, u32)>,
    children: Vec<usize>,
}

/// Memoized component result: solved exactly, or known to cost at least
/// the given bound.
#[derive(Clone, Copy)]
enum Memo {
    Exact(usize),
    AtLeast(Cost),
}

struct Search<'a> {
    ctx: Ctx<'a>,
    memo: HashMap<(usize, Vec<World>), Memo>,
    nodes: Vec<Node>,
    searched: u64,
    cap: u64,
}

impl Search<'_> {
    fn tick(&mut self, n: u64) -> Result<()> {
        self.searched += n;
        if self.searched > self.cap {
            return Err(Error::Resource {
                what: "oracle search nodes",
                count: self.searched as u128,
                cap: self.cap as u128,
            });
        }
        Ok(())
    }

    /// Optimal cost-to-go of a set of worlds (split into components first).
    /// With a cutoff, `None` means the cost is at least the cutoff.
    fn value(
        &mut self,
        t: usize,
        worlds: Vec<World>,
        cutoff: Option<Cost>,
    ) -> Result<Option<(Cost, Vec<usize>)>> {
        let mut best: Option<Cost> = None;
        let mut ids = Vec::new();
        for comp in self.ctx.components(t, worlds) {
            let Some(id) = self.component(t, comp, cutoff)? else {
                return Ok(None);
            };
            let v = self.nodes[id].value;
            if cutoff.is_some_and(|c| v >= c) {
                return Ok(None);
            }
            best = Some(best.map_or(v, |b| b.max(v)));
            ids.push(id);
        }
        Ok(Some((best.ok_or(Error::InconsistentInitial)?, ids)))
    }

    fn component(
        &mut self,
        t: usize,
        worlds: Vec<World>,
        cutoff: Option<Cost>,
    ) -> Result<Option<usize>> {
        let key = (t, worlds);
        match self.memo.get(&key) {
            Some(&Memo::Exact(id)) => return Ok(Some(id)),
            Some(&Memo::AtLeast(b)) if cutoff.is_some_and(|c| c <= b) => return Ok(None),
            _ => {}
        }
        let (t, worlds) = key;
        let node = if t == self.ctx.model.horizon {
            let value = worlds
                .iter()
                .map(|w| w.acc + self.ctx.model.terminal(w.x))
                .max()
                .unwrap();
            Some(Node {
                value,
                choice: Vec::new(),
                children: Vec::new(),
            })
        } else if t + 1 == self.ctx.model.horizon {
            self.last_step(t, &worlds, cutoff)?
        } else {
            self.enumerate(t, &worlds, cutoff)?
        };
        match node {
            Some(node) => {
                self.nodes.push(node);
                let id = self.nodes.len() - 1;
                self.memo.insert((t, worlds), Memo::Exact(id));
                Ok(Some(id))
            }
            None => {
                self.memo
                    .insert((t, worlds), Memo::AtLeast(cutoff.unwrap()));
                Ok(None)
            }
        }
    }

    /// Decision points of the worlds and, per world, the index of each
    /// agent's point.
    fn points(&self, t: usize, worlds: &[World]) -> (Vec<DecisionKey>, Vec<Vec<usize>>) {
        let na = self.ctx.model.num_agents();
        let set: BTreeSet<DecisionKey> = worlds
            .iter()
            .flat_map(|w| (0..na).map(move |a| (a, w)))
            .map(|(a, w)| self.ctx.key(t, a, w))
            .collect();
        let keys: Vec<DecisionKey> = set.into_iter().collect();
        let idx = worlds
            .iter()
            .map(|w| {
                (0..na)
                    .map(|a| keys.binary_search(&self.ctx.key(t, a, w)).unwrap())
                    .collect()
            })
            .collect();
        (keys, idx)
    }

    fn enumerate(
        &mut self,
        t: usize,
        worlds: &[World],
        cutoff: Option<Cost>,
    ) -> Result<Option<Node>> {
        let (keys, idx) = self.points(t, worlds);
        let domains: Vec<usize> = keys
            .iter()
            .map(|k| self.ctx.model.num_actions(t, k.1))
            .collect();
        let mut best: Option<(Cost, Vec<u32>, Vec<usize>)> = None;
        let mut digits = vec![0u32; keys.len()];
        loop {
            self.tick(1)?;
            let mut next = BTreeSet::new();
            for (w, pts) in worlds.iter().zip(&idx) {
                let u: Vec<u32> = pts.iter().map(|&p| digits[p]).collect();
                self.ctx.successors(t, w, &u, &mut next);
            }
            let bound = best.as_ref().map(|b| b.0).or(cutoff);
            if let Some((v, children)) = self.value(t + 1, next.into_iter().collect(), bound)? {
                if best.as_ref().is_none_or(|(b, _, _)| v < *b) {
                    best = Some((v, digits.clone(), children));
                }
            }
            let mut k = digits.len();
            loop {
                if k == 0 {
                    return Ok(best.map(|(value, digits, children)| Node {
                        value,
                        choice: keys.into_iter().zip(digits).collect(),
                        children,
                    }));
                }
                k -= 1;
                digits[k] += 1;
                if (digits[k] as usize) < domains[k] {
                    break;
                }
                digits[k] = 0;
            }
        }
    }

    /// Last decision step: depth-first search over decision points with
    /// incumbent pruning. A world is charged the least cost its assigned
    /// points still allow as soon as any of them is set.
    fn last_step(
        &mut self,
        t: usize,
        worlds: &[World],
        cutoff: Option<Cost>,
    ) -> Result<Option<Node>> {
        let m = self.ctx.model;
        let (keys, idx) = self.points(t, worlds);
        let domains: Vec<usize> = keys.iter().map(|k| m.num_actions(t, k.1)).collect();
        // per world, worst final cost of every joint action
        let tables: Vec<Vec<Cost>> = worlds
            .iter()
            .map(|w| {
                self.ctx.joints[t]
                    .iter()
                    .map(|u| {
                        let acc = w.acc + m.stage(t, w.x, u);
                        (0..m.num_disturbances(t) as u32)
                            .map(|dw| acc + m.terminal(m.step(t, w.x, u, dw)))
                            .max()
                            .unwrap()
                    })
                    .collect()
            })
            .collect();
        let order = search_order(keys.len(), &idx);
        let mut depth = vec![0; keys.len()];
        for (d, &k) in order.iter().enumerate() {
            depth[k] = d;
        }
        let mut touch: Vec<Vec<usize>> = vec![Vec::new(); keys.len()];
        for (i, pts) in idx.iter().enumerate() {
            let mut ds: Vec<usize> = pts.iter().map(|&p| depth[p]).collect();
            ds.sort_unstable();
            ds.dedup();
            for d in ds {
                touch[d].push(i);
            }
        }
        struct Dfs<'b> {
            order: &'b [usize],
            depth: &'b [usize],
            domains: &'b [usize],
            touch: &'b [Vec<usize>],
            idx: &'b [Vec<usize>],
            tables: &'b [Vec<Cost>],
            joints: &'b [Vec<u32>],
            digits: Vec<u32>,
            /// Incumbent bound: the best leaf so far, or the cutoff.
            bound: Option<Cost>,
            best: Option<Vec<u32>>,
            nodes: u64,
        }
        impl Dfs<'_> {
            /// Least cost of world `i` over joint actions that agree with the
            /// keys assigned at depth `d` or above.
            fn bound(&self, i: usize, d: usize) -> Cost {
                let pts = &self.idx[i];
                self.joints
                    .iter()
                    .zip(&self.tables[i])
                    .filter(|(u, _)| {
                        pts.iter()
                            .zip(u.iter())
                            .all(|(&p, &ua)| self.depth[p] > d || self.digits[p] == ua)
                    })
                    .map(|(_, c)| *c)
                    .min()
                    .unwrap()
            }

            fn go(&mut self, d: usize, running: Option<Cost>) {
                self.nodes += 1;
                if d == self.order.len() {
                    let v = running.unwrap_or_else(Cost::zero);
                    if self.bound.is_none_or(|b| v < b) {
                        self.bound = Some(v);
                        self.best = Some(self.digits.clone());
                    }
                    return;
                }
                let k = self.order[d];
                // most promising action first
                let mut options: Vec<(Option<Cost>, u32)> = (0..self.domains[k] as u32)
                    .map(|x| {
                        self.digits[k] = x;
                        let r = self.touch[d]
                            .iter()
                            .map(|&i| self.bound(i, d))
                            .fold(running, |r, c| Some(r.map_or(c, |r| r.max(c))));
                        (r, x)
                    })
                    .collect();
                options.sort();
                for (r, x) in options {
                    if let (Some(r), Some(b)) = (r, self.bound) {
                        if r >= b {
                            break;
                        }
                    }
                    self.digits[k] = x;
                    self.go(d + 1, r);
                }
            }
        }
        let mut dfs = Dfs {
            order: &order,
            depth: &depth,
            domains: &domains,
            touch: &touch,
            idx: &idx,
            tables: &tables,
            joints: &self.ctx.joints[t],
            digits: vec![0; keys.len()],
            bound: cutoff,
            best: None,
            nodes: 0,
        };
        dfs.go(0, None);
        let (nodes, bound, best) = (dfs.nodes, dfs.bound, dfs.best);
        self.tick(nodes)?;
        Ok(best.map(|digits| Node {
            value: bound.unwrap(),
            choice: keys.into_iter().zip(digits).collect(),
            children: Vec::new(),
        }))
    }
}

/// Greedy variable order for the last step: next the key that completes
/// the most worlds, then the one touching the most, then the lowest index.
fn search_order(n: usize, idx: &[Vec<usize>]) -> Vec<usize> {
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let mut pick = (0usize, 0usize, usize::MAX);
        for k in (0..n).filter(|&k| !placed[k]) {
            let mut done = 0;
            let mut touched = 0;
            for pts in idx.iter().filter(|p| p.contains(&k)) {
                touched += 1;
                if pts.iter().all(|&p| p == k || placed[p]) {
                    done += 1;
                }
            }
            if (done, touched) > (pick.0, pick.1) || pick.2 == usize::MAX {
                pick = (done, touched, k);
            }
        }
        placed[pick.2] = true;
        order.push(pick.2);
    }
    order
}

/// Exact `min` over agent-level strategy profiles of the worst-case total
/// cost, with one optimal profile. `cap` bounds the number of joint
/// assignments and search nodes visited.
pub fn brute_force_minimax(
    model: &SystemModel,
    info: &InfoStructure,
    cap: u64,
) -> Result<OracleResult> {
    crate::model::validate(model, info).into_result()?;
    let mut s = Search {
        ctx: Ctx::new(model, info),
        memo: HashMap::new(),
        nodes: Vec::new(),
        searched: 0,
        cap,
    };
    let worlds = s.ctx.initial_worlds();
    let (value, roots) = s
        .value(0, worlds, None)?
        .ok_or_else(|| Error::Internal("oracle found no profile".into()))?;
    let mut table = BTreeMap::new();
    let mut stack = roots;
    while let Some(id) = stack.pop() {
        let node = &s.nodes[id];
        table.extend(node.choice.iter().cloned());
        stack.extend(node.children.iter().copied());
    }
    Ok(OracleResult {
        value,
        strategy: TableStrategy {
            table,
            layout: std::sync::Arc::new(ArgLayout::new(model, info)?),
        },
        searched: s.searched,
    })
}

/// Cursor over every distinct strategy profile on reachable arguments.
pub struct StrategyEnumerator {
    keys: Vec<DecisionKey>,
    domains: Vec<usize>,
    digits: Vec<u32>,
    done: bool,
    layout: std::sync::Arc<ArgLayout>,
}

impl StrategyEnumerator {
    pub fn new(model: &SystemModel, info: &InfoStructure) -> Result<Self> {
        let keys: Vec<DecisionKey> = reachable_arguments(model, info)
            .into_iter()
            .flatten()
            .flatten()
            .collect();
        let domains: Vec<usize> = keys.iter().map(|k| model.num_actions(k.0, k.1)).collect();
        Ok(StrategyEnumerator {
            digits: vec![0; keys.len()],
            keys,
            domains,
            done: false,
            layout: std::sync::Arc::new(ArgLayout::new(model, info)?),
        })
    }
}

impl Iterator for StrategyEnumerator {
    type Item = TableStrategy;

    fn next(&mut self) -> Option<TableStrategy> {
        if self.done {
            return None;
        }
        let out = TableStrategy {
            table: self
                .keys
                .iter()
                .cloned()
                .zip(self.digits.iter().copied())
                .collect(),
            layout: self.layout.clone(),
        };
        let mut k = self.digits.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.digits[k] += 1;
            if (self.digits[k] as usize) < self.domains[k] {
                break;
            }
            self.digits[k] = 0;
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{worst_case_cost, Agent, FiniteSpace, SpaceId};
    use crate::random::{random_instance, InstanceParams};

    fn one_agent(actions: usize, obs: usize, horizon: usize) -> (SystemModel, InfoStructure) {
        let n = obs.max(1);
        let spaces = vec![
            FiniteSpace::range("x", n).unwrap(),
            FiniteSpace::range("u", actions).unwrap(),
            FiniteSpace::range("one", 1).unwrap(),
        ];
        let model = SystemModel {
            horizon,
            agents: vec![Agent {
                name: "a".into(),
                subsystem: 0,
            }],
            num_subsystems: 1,
            spaces,
            state_spaces: vec![SpaceId(0); horizon + 1],
            initial_states: (0..n as u32).collect(),
            action_spaces: vec![vec![SpaceId(1)]; horizon],
            disturbance_spaces: vec![SpaceId(2); horizon],
            noise_spaces: vec![vec![SpaceId(2)]; horizon + 1],
            obs_spaces: vec![vec![SpaceId(0)]; horizon + 1],
            dynamics: (0..horizon)
                .map(|_| {
                    (0..n * actions)
                        .map(|i| ((i / actions + i % actions) % n) as u32)
                        .collect()
                })
                .collect(),
            observation: vec![vec![(0..n as u32).collect()]; horizon + 1],
            terminal_cost: (0..n).map(|c| Some(Cost::from_integer(c as i64))).collect(),
            stage_costs: None,
        };
        let info = InfoStructure {
            memory: vec![vec![Default::default()]; horizon + 1],
            initial_common: vec![None],
        };
        (model, info)
    }

    #[test]
    fn single_argument_count() {
        let (m, i) = one_agent(3, 1, 1);
        assert_eq!(count_strategies(&m, &i).total, BigUint::from(3u32));
    }

    #[test]
    fn product_rule_count() {
        // two arguments at t=0; at t=1 the observation takes two values and
        // the remembered action two more
        let (m, mut i) = one_agent(2, 2, 2);
        i.memory[1][0].insert(VarId::u(0, 0));
        i.memory[2][0].insert(VarId::u(0, 0));
        let c = count_strategies(&m, &i);
        assert_eq!(c.arguments, vec![vec![2], vec![4]]);
        assert_eq!(c.total, BigUint::from(64u32));
    }

    #[test]
    fn horizon_zero_is_worst_terminal() {
        let (m, i) = one_agent(2, 3, 0);
        let r = brute_force_minimax(&m, &i, 10).unwrap();
        assert_eq!(r.value, Cost::from_integer(2));
        assert!(r.strategy.table.is_empty());
    }

    #[test]
    fn deterministic_single_agent_is_shortest_path() {
        // x' = x + u mod 3, cost = x_T; perfect observation. Backward
        // induction by hand: from any x one step reaches 0, so V = 0.
        let (m, i) = one_agent(3, 3, 2);
        let r = brute_force_minimax(&m, &i, 10_000).unwrap();
        assert_eq!(r.value, Cost::from_integer(0));
    }

    #[test]
    fn matches_exhaustive_profile_enumeration() {
        let mut checked = 0;
        for seed in 0..200 {
            let inst = random_instance(seed, &InstanceParams::default());
            let count = count_strategies(&inst.model, &inst.info).total;
            if count > BigUint::from(3000u32) {
                continue;
            }
            let r = brute_force_minimax(&inst.model, &inst.info, 1 << 24).unwrap();
            let mut best: Option<Cost> = None;
            let mut n = BigUint::zero();
            for g in StrategyEnumerator::new(&inst.model, &inst.info).unwrap() {
                let c = worst_case_cost(&inst.model, &inst.info, &g).unwrap();
                assert!(r.value <= c, "seed {seed}");
                best = Some(best.map_or(c, |b| b.min(c)));
                n += 1u32;
            }
            assert_eq!(n, count, "seed {seed}");
            assert_eq!(best.unwrap(), r.value, "seed {seed}");
            assert_eq!(
                worst_case_cost(&inst.model, &inst.info, &r.strategy).unwrap(),
                r.value
            );
            checked += 1;
        }
        assert!(checked >= 50, "{checked}");
    }

    #[test]
    fn cap_refuses() {
        let (m, i) = one_agent(3, 3, 2);
        assert!(matches!(
            brute_force_minimax(&m, &i, 2),
            Err(Error::Resource { .. })
        ));
    }
}
