//! The minimax dynamic program over the information states of the least
//! informed subsystem, and extraction of agent-level strategies.
//!
//! A complete action assigns an action to every decision slot
//! `(j, key, agent, view)` reachable from the current information state:
//! slots with `j` below the root are prescriptions, slots of the root's own
//! subsystem form its partial action. Members whose new information differs
//! in an action-independent component never share an observation, so the
//! backup splits into one factor per such group and is solved exactly by
//! (min, max) variable elimination.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};

use rustc_hash::FxHashMap;

use crate::elim::{self, Factor};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::format::{decimal, format_cost};
use crate::infostate::{
    self, initial_infostate, member_key, nested_ctx, static_signature, Evolver, Interner, Member,
    Policy, StateRef,
};
use crate::model::{self, AgentStrategy, Cost, InfoStructure, SystemModel};
use crate::nested::HatModel;

/// Version tag of the tie-breaking rule, reported alongside results.
pub const TIE_BREAK_RULE: &str = "lexicographic-min-slot-order/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    /// Cap on information states per time step.
    pub max_infostates: usize,
    /// Cap on candidate assignments evaluated by one backup, and on the size
    /// of any intermediate elimination table.
    pub max_candidates: usize,
    /// Materialize the information states at the horizon. When off, the
    /// last backup reads terminal costs straight off the members.
    pub terminal_states: bool,
    pub exec: Exec,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_infostates: 1_000_000,
            max_candidates: 20_000_000,
            terminal_states: false,
            exec: Exec::default(),
        }
    }
}

/// A decision slot: the action of `agent` (subsystem `j`) when its
/// information-state key is `key` and its view is `view`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SlotKey {
    pub j: usize,
    pub key: Vec<StateRef>,
    pub agent: usize,
    pub view: Vec<u32>,
}

/// `θ`: an action for every slot, in canonical slot order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CompleteAction {
    pub slots: Vec<SlotKey>,
    pub actions: Vec<u32>,
}

impl CompleteAction {
    fn index(&self) -> SlotIndex {
        SlotIndex::new(&self.slots)
    }
}

/// Position of each slot in a slot list, searchable from borrowed parts.
/// Slots are bucketed by view; a bucket is scanned linearly, which is cheap
/// because keys of interned states compare by pointer first.
#[derive(Debug, Clone, Default)]
struct SlotIndex {
    by_view: FxHashMap<Vec<u32>, Vec<SlotEntry>>,
}

#[derive(Debug, Clone)]
struct SlotEntry {
    agent: usize,
    j: usize,
    key: Vec<StateRef>,
    pos: usize,
}

impl SlotIndex {
    fn new(slots: &[SlotKey]) -> Self {
        let mut by_view: FxHashMap<_, Vec<_>> = FxHashMap::default();
        for (i, s) in slots.iter().enumerate() {
            by_view.entry(s.view.clone()).or_default().push(SlotEntry {
                agent: s.agent,
                j: s.j,
                key: s.key.clone(),
                pos: i,
            });
        }
        SlotIndex { by_view }
    }

    fn get(&self, j: usize, key: &[StateRef], agent: usize, view: &[u32]) -> Option<usize> {
        self.by_view
            .get(view)?
            .iter()
            .find(|e| e.agent == agent && e.j == j && e.key.as_slice() == key)
            .map(|e| e.pos)
    }
}

/// Reads actions from an assignment over an indexed slot set. Looking up a
/// slot outside the assignment is an internal error.
struct AssignPolicy<'a> {
    index: &'a SlotIndex,
    values: &'a [Option<u32>],
}

impl Policy for AssignPolicy<'_> {
    fn action(
        &self,
        t: usize,
        j: usize,
        key: &[StateRef],
        agent: usize,
        view: &[u32],
    ) -> Result<u32> {
        self.index
            .get(j, key, agent, view)
            .and_then(|i| self.values[i])
            .ok_or_else(|| Error::Internal(format!("slot of agent {agent} at t={t} outside scope")))
    }
}

/// Static closure of the slots that evolving `ctx[0]` can read, restricted
/// to `members`. A nested state is only consulted at the members whose
/// action-independent new information matches the outer member's, so only
/// those are followed.
fn collect_slots(
    hm: &HatModel,
    t: usize,
    ctx: &[StateRef],
    members: &[&Member],
    out: &mut BTreeSet<SlotKey>,
    visited: &mut HashSet<(Vec<StateRef>, Vec<u32>)>,
) {
    let m = &hm.model;
    let level = ctx[0].level();
    for member in members {
        for a in 0..m.num_agents() {
            let j = m.agents[a].subsystem;
            out.insert(SlotKey {
                j,
                key: member_key(j, &member.nested, ctx),
                agent: a,
                view: hm.view(t, a, &member.hat),
            });
        }
        for j in 0..level {
            let cj = nested_ctx(j, &member.nested, ctx);
            let sig = static_signature(hm, t, j, &member.hat);
            if visited.insert((cj.clone(), sig.clone())) {
                let inner: Vec<&Member> = cj[0]
                    .members()
                    .iter()
                    .filter(|x| static_signature(hm, t, j, &x.hat) == sig)
                    .collect();
                collect_slots(hm, t, &cj, &inner, out, visited);
            }
        }
    }
}

struct NodeFactor {
    scope: Vec<usize>,
    offsets: Vec<u32>,
    succ: Vec<u32>,
}

struct Node {
    slots: Vec<SlotKey>,
    domains: Vec<usize>,
    factors: Vec<NodeFactor>,
    candidates: u64,
}

/// Enumerate every group's scope assignments and the successors each one
/// can produce. Successors are interned per node: the node refers to them
/// by index into the returned list.
fn expand(hm: &HatModel, t: usize, p: &StateRef, cap: usize) -> Result<(Node, Vec<StateRef>)> {
    let level = p.level();
    let ctx = vec![p.clone()];
    let mut groups: BTreeMap<Vec<u32>, Vec<&Member>> = BTreeMap::new();
    for member in p.members() {
        groups
            .entry(static_signature(hm, t, level, &member.hat))
            .or_default()
            .push(member);
    }
    let mut scopes = Vec::new();
    let mut all = BTreeSet::new();
    for members in groups.values() {
        let mut s = BTreeSet::new();
        collect_slots(hm, t, &ctx, members, &mut s, &mut HashSet::new());
        all.extend(s.iter().cloned());
        scopes.push(s);
    }
    let slots: Vec<SlotKey> = all.into_iter().collect();
    let index = SlotIndex::new(&slots);
    let domains: Vec<usize> = slots
        .iter()
        .map(|s| hm.model.num_actions(t, s.agent))
        .collect();
    let mut factors = Vec::new();
    let mut candidates = 0usize;
    let mut states: Vec<StateRef> = Vec::new();
    let mut ids: FxHashMap<StateRef, u32> = FxHashMap::default();
    let mut pool = Interner::default();
    for (members, scope_set) in groups.values().zip(scopes) {
        // `slots` is sorted
        let scope: Vec<usize> = scope_set
            .iter()
            .map(|s| slots.binary_search(s).expect("scope slot is listed"))
            .collect();
        let size = scope
            .iter()
            .try_fold(1usize, |acc, &v| acc.checked_mul(domains[v]))
            .unwrap_or(usize::MAX);
        candidates = candidates.saturating_add(size);
        if candidates > cap {
            return Err(Error::Resource {
                what: "candidate complete actions in one backup",
                count: candidates as u128,
                cap: cap as u128,
            });
        }
        let mut values: Vec<Option<u32>> = vec![None; slots.len()];
        let mut offsets = Vec::with_capacity(size + 1);
        offsets.push(0u32);
        let mut succ = Vec::new();
        let mut digits = vec![0u32; scope.len()];
        for _ in 0..size {
            for (k, &v) in scope.iter().enumerate() {
                values[v] = Some(digits[k]);
            }
            let policy = AssignPolicy {
                index: &index,
                values: &values,
            };
            let mut zs = BTreeSet::new();
            for member in members {
                let u = infostate::member_actions(hm, t, &policy, member, &ctx)?;
                zs.insert(hm.observe_unchecked(t, level, &member.hat, &u));
            }
            let mut ev = Evolver::new(hm, t, &policy);
            for z in zs {
                let s = ev.evolve(&ctx, &z)?;
                let id = match ids.get(&s) {
                    Some(&id) => id,
                    None => {
                        let id = states.len() as u32;
                        let s = pool.intern(&s);
                        ids.insert(s.clone(), id);
                        states.push(s);
                        id
                    }
                };
                succ.push(id);
            }
            offsets.push(succ.len() as u32);
            for k in (0..digits.len()).rev() {
                digits[k] += 1;
                if (digits[k] as usize) < domains[scope[k]] {
                    break;
                }
                digits[k] = 0;
            }
        }
        factors.push(NodeFactor {
            scope,
            offsets,
            succ,
        });
    }
    let node = Node {
        slots,
        domains,
        factors,
        candidates: candidates as u64,
    };
    Ok((node, states))
}

/// Last backup without successor states. `V_T` of a successor is the max
/// terminal cost over its members, and the successors of all observations
/// together hold every member's one-step image, so the value of `θ` is the
/// max over members and disturbances of the terminal cost. Each member then
/// contributes a factor over its own agents' slots. The returned costs are
/// indexed by the factor entries.
fn expand_last(hm: &HatModel, t: usize, p: &StateRef) -> Result<(Node, Vec<Cost>)> {
    let m = &hm.model;
    let ctx = vec![p.clone()];
    let member_slots: Vec<Vec<SlotKey>> = p
        .members()
        .iter()
        .map(|member| {
            (0..m.num_agents())
                .map(|a| {
                    let j = m.agents[a].subsystem;
                    SlotKey {
                        j,
                        key: member_key(j, &member.nested, &ctx),
                        agent: a,
                        view: hm.view(t, a, &member.hat),
                    }
                })
                .collect()
        })
        .collect();
    let slots: Vec<SlotKey> = member_slots
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: HashMap<&SlotKey, usize> = slots.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let domains: Vec<usize> = slots.iter().map(|s| m.num_actions(t, s.agent)).collect();
    let nw = m.num_disturbances(t) as u32;
    let mut tables: BTreeMap<Vec<usize>, Vec<Cost>> = BTreeMap::new();
    for (member, ms) in p.members().iter().zip(&member_slots) {
        // agent a reads scope position pos[a]
        let mut scope: Vec<usize> = ms.iter().map(|s| index[s]).collect();
        scope.sort_unstable();
        scope.dedup();
        let pos: Vec<usize> = ms
            .iter()
            .map(|s| scope.binary_search(&index[s]).unwrap())
            .collect();
        let size: usize = scope.iter().map(|&v| domains[v]).product();
        let mut table = Vec::with_capacity(size);
        let mut digits = vec![0u32; scope.len()];
        let mut u = vec![0u32; m.num_agents()];
        for _ in 0..size {
            for (a, &k) in pos.iter().enumerate() {
                u[a] = digits[k];
            }
            let worst = (0..nw)
                .map(|w| m.terminal(m.step(t, member.hat[0], &u, w)))
                .max()
                .ok_or_else(|| Error::Internal(format!("no disturbance at t={t}")))?;
            table.push(worst);
            for k in (0..digits.len()).rev() {
                digits[k] += 1;
                if (digits[k] as usize) < domains[scope[k]] {
                    break;
                }
                digits[k] = 0;
            }
        }
        match tables.get_mut(&scope) {
            Some(old) => old
                .iter_mut()
                .zip(table)
                .for_each(|(o, c)| *o = (*o).max(c)),
            None => {
                tables.insert(scope, table);
            }
        }
    }
    let mut costs: Vec<Cost> = Vec::new();
    let mut ids: HashMap<Cost, u32> = HashMap::new();
    let mut candidates = 0u64;
    let factors = tables
        .into_iter()
        .map(|(scope, table)| {
            candidates += table.len() as u64;
            let succ = table
                .into_iter()
                .map(|c| {
                    *ids.entry(c).or_insert_with(|| {
                        costs.push(c);
                        costs.len() as u32 - 1
                    })
                })
                .collect::<Vec<u32>>();
            NodeFactor {
                scope,
                offsets: (0..=succ.len() as u32).collect(),
                succ,
            }
        })
        .collect();
    let node = Node {
        slots,
        domains,
        factors,
        candidates,
    };
    Ok((node, costs))
}

/// Information states of one time step and, below the horizon, the
/// factored successor structure of each.
pub struct Layer {
    pub states: Vec<StateRef>,
    nodes: Vec<Node>,
}

/// Forward closure from the initial level-`root` state up to time `t_end`.
pub fn forward_layers(
    hm: &HatModel,
    root: usize,
    t_end: usize,
    cap: usize,
    exec: Exec,
) -> Result<Vec<Layer>> {
    let opts = SolveOptions {
        max_infostates: cap,
        terminal_states: true,
        exec,
        ..SolveOptions::default()
    };
    let (mut layers, last) = forward_with(hm, root, t_end, &opts)?;
    let Frontier::States(states) = last else {
        unreachable!("terminal states requested")
    };
    layers.push(Layer {
        states,
        nodes: Vec::new(),
    });
    Ok(layers)
}

/// What the forward pass leaves after its last expanded layer.
enum Frontier {
    States(Vec<StateRef>),
    /// Terminal costs referenced by the last layer's factors.
    Costs(Vec<Cost>),
}

/// Layer-wide interning of per-node successor lists.
struct Successors<T> {
    list: Vec<T>,
    ids: HashMap<T, u32>,
    cap: Option<usize>,
}

impl<T: Clone + Eq + std::hash::Hash> Successors<T> {
    fn new(cap: Option<usize>) -> Self {
        Successors {
            list: Vec::new(),
            ids: HashMap::new(),
            cap,
        }
    }

    /// Rewrite the node's local successor ids to layer-wide ones.
    fn absorb(
        &mut self,
        (mut node, locals): (Node, Vec<T>),
        canon: &mut dyn FnMut(&T) -> T,
    ) -> Result<Node> {
        let mut global = Vec::with_capacity(locals.len());
        for s in locals {
            let id = match self.ids.get(&s) {
                Some(&id) => id,
                None => {
                    if let Some(cap) = self.cap.filter(|&c| self.list.len() >= c) {
                        return Err(Error::Resource {
                            what: "information states",
                            count: self.list.len() as u128 + 1,
                            cap: cap as u128,
                        });
                    }
                    let id = self.list.len() as u32;
                    let s = canon(&s);
                    self.ids.insert(s.clone(), id);
                    self.list.push(s);
                    id
                }
            };
            global.push(id);
        }
        for f in &mut node.factors {
            f.succ.iter_mut().for_each(|s| *s = global[*s as usize]);
        }
        Ok(node)
    }
}

/// States expanded per batch, bounding the memory held by per-node
/// successor lists before they are merged.
const BATCH: usize = 64;

fn forward_with(
    hm: &HatModel,
    root: usize,
    t_end: usize,
    opts: &SolveOptions,
) -> Result<(Vec<Layer>, Frontier)> {
    if t_end > hm.horizon() {
        return Err(Error::OutOfRange {
            what: "time",
            index: t_end,
            limit: hm.horizon(),
        });
    }
    let exec = opts.exec;
    let mut states = vec![initial_infostate(hm, root)?];
    let mut layers = Vec::new();
    for t in 0..t_end {
        let mut nodes = Vec::with_capacity(states.len());
        if t + 1 == hm.horizon() && !opts.terminal_states {
            let mut costs = Successors::new(None);
            for batch in states.chunks(BATCH) {
                for r in exec.try_map(batch, |p| expand_last(hm, t, p))? {
                    nodes.push(costs.absorb(r, &mut |c| *c)?);
                }
            }
            layers.push(Layer { states, nodes });
            return Ok((layers, Frontier::Costs(costs.list)));
        }
        let mut next = Successors::new(Some(opts.max_infostates));
        let mut pool = Interner::default();
        for batch in states.chunks(BATCH) {
            for r in exec.try_map(batch, |p| expand(hm, t, p, opts.max_candidates))? {
                nodes.push(next.absorb(r, &mut |s| pool.intern(s))?);
            }
        }
        layers.push(Layer { states, nodes });
        states = next.list;
    }
    Ok((layers, Frontier::States(states)))
}

/// `V_T(P) = max` of the terminal cost over members.
pub fn terminal_value(hm: &HatModel, p: &StateRef) -> Result<Cost> {
    p.members()
        .iter()
        .map(|m| hm.terminal(&m.hat))
        .max()
        .ok_or_else(|| Error::Internal("empty information state at the horizon".into()))
}

/// `Z̃(P, θ)`: the new-information values the members can emit under `θ`.
pub fn feasible_observations(
    hm: &HatModel,
    t: usize,
    p: &StateRef,
    policy: &dyn Policy,
) -> Result<BTreeSet<Vec<u32>>> {
    let ctx = vec![p.clone()];
    let mut out = BTreeSet::new();
    for member in p.members() {
        let u = infostate::member_actions(hm, t, policy, member, &ctx)?;
        out.insert(hm.observe_unchecked(t, p.level(), &member.hat, &u));
    }
    Ok(out)
}

/// A solved value entry.
#[derive(Debug, Clone)]
pub struct Entry {
    pub state: StateRef,
    pub value: Cost,
    pub action: CompleteAction,
    /// Candidate assignments evaluated by the backup.
    pub candidates: u64,
    index: SlotIndex,
}

#[derive(Debug, Clone, Default)]
pub struct ValueLayer {
    pub entries: Vec<Entry>,
    index: HashMap<StateRef, usize>,
}

impl ValueLayer {
    pub fn get(&self, p: &StateRef) -> Option<&Entry> {
        self.index.get(p).map(|&i| &self.entries[i])
    }
}

/// Value table together with the optimal complete actions: the solved
/// strategy profile.
#[derive(Debug, Clone)]
pub struct Solution {
    pub root: usize,
    pub value: Cost,
    pub layers: Vec<ValueLayer>,
}

impl Solution {
    pub fn infostate_counts(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.entries.len()).collect()
    }

    pub fn candidate_counts(&self) -> Vec<u64> {
        self.layers
            .iter()
            .map(|l| l.entries.iter().map(|e| e.candidates).sum())
            .collect()
    }

    pub fn initial(&self) -> &Entry {
        &self.layers[0].entries[0]
    }
}

fn backup_node(node: &Node, next_rank: &[u32], cap: usize) -> Result<(u32, Vec<u32>)> {
    let factors: Vec<Factor> = node
        .factors
        .iter()
        .map(|f| Factor {
            scope: f.scope.clone(),
            table: f
                .offsets
                .windows(2)
                .map(|w| {
                    f.succ[w[0] as usize..w[1] as usize]
                        .iter()
                        .map(|&s| next_rank[s as usize])
                        .max()
                        .unwrap_or(0)
                })
                .collect(),
        })
        .collect();
    elim::solve(&factors, &node.domains, cap)
}

fn ranks(values: &[Cost]) -> (Vec<Cost>, Vec<u32>) {
    let mut distinct = values.to_vec();
    distinct.sort();
    distinct.dedup();
    let r = values
        .iter()
        .map(|v| distinct.binary_search(v).unwrap() as u32)
        .collect();
    (distinct, r)
}

/// Solve the dynamic program of the least informed subsystem.
pub fn solve(
    model: &SystemModel,
    info: &InfoStructure,
    opts: &SolveOptions,
) -> Result<(HatModel, Solution)> {
    let hm = HatModel::build(model, info)?;
    let sol = solve_hat(&hm, opts)?;
    Ok((hm, sol))
}

/// Terminal-cost models only: fold stage costs in with
/// [`crate::costs::to_terminal`] first.
pub fn solve_hat(hm: &HatModel, opts: &SolveOptions) -> Result<Solution> {
    if hm.model.has_stage_costs() {
        return Err(Error::Params(
            "model has stage costs; fold them into the terminal cost first".into(),
        ));
    }
    let root = hm.num_subsystems() - 1;
    let t_max = hm.horizon();
    let (mut layers, frontier) = forward_with(hm, root, t_max, opts)?;
    let mut solved = vec![ValueLayer::default(); t_max + 1];
    let terminal = match frontier {
        Frontier::Costs(costs) => costs,
        Frontier::States(states) => {
            let terminal: Vec<Cost> = opts.exec.try_map(&states, |p| terminal_value(hm, p))?;
            solved[t_max] = ValueLayer {
                index: states
                    .iter()
                    .cloned()
                    .enumerate()
                    .map(|(i, s)| (s, i))
                    .collect(),
                entries: states
                    .into_iter()
                    .zip(&terminal)
                    .map(|(state, &value)| Entry {
                        state,
                        value,
                        action: CompleteAction::default(),
                        candidates: 0,
                        index: SlotIndex::default(),
                    })
                    .collect(),
            };
            terminal
        }
    };
    let mut next_values = terminal;
    for t in (0..t_max).rev() {
        let layer = layers.pop().unwrap();
        let (distinct, rank) = ranks(&next_values);
        let results = opts.exec.try_map(&layer.nodes, |node| {
            backup_node(node, &rank, opts.max_candidates)
        })?;
        let mut entries = Vec::with_capacity(results.len());
        let mut values = Vec::with_capacity(results.len());
        for ((state, node), (v, assignment)) in
            layer.states.into_iter().zip(layer.nodes).zip(results)
        {
            let value = distinct[v as usize];
            values.push(value);
            let action = CompleteAction {
                slots: node.slots,
                actions: assignment,
            };
            entries.push(Entry {
                state,
                value,
                index: action.index(),
                action,
                candidates: node.candidates,
            });
        }
        solved[t] = ValueLayer {
            index: entries
                .iter()
                .enumerate()
                .map(|(i, e)| (e.state.clone(), i))
                .collect(),
            entries,
        };
        next_values = values;
    }
    let value = solved[0].entries[0].value;
    Ok(Solution {
        root,
        value,
        layers: solved,
    })
}

/// One backup at `(t, P)` against a table of successor values.
pub fn bellman_backup(
    hm: &HatModel,
    t: usize,
    p: &StateRef,
    next: &dyn Fn(&StateRef) -> Option<Cost>,
    opts: &SolveOptions,
) -> Result<(Cost, CompleteAction)> {
    let (node, locals) = expand(hm, t, p, opts.max_candidates)?;
    let values = locals
        .iter()
        .map(|s| {
            next(s).ok_or_else(|| Error::Internal("successor missing from the value table".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let (distinct, rank) = ranks(&values);
    let (v, assignment) = backup_node(&node, &rank, opts.max_candidates)?;
    Ok((
        distinct.get(v as usize).copied().unwrap_or_default(),
        CompleteAction {
            slots: node.slots,
            actions: assignment,
        },
    ))
}

/// Reference backup by enumerating every complete action over the slots
/// of `P`, taking the first minimizer in lexicographic order.
pub fn exhaustive_backup(
    hm: &HatModel,
    t: usize,
    p: &StateRef,
    next: &dyn Fn(&StateRef) -> Option<Cost>,
    cap: usize,
) -> Result<(Cost, CompleteAction)> {
    let (node, _) = expand(hm, t, p, usize::MAX)?;
    let slots = node.slots;
    let domains = node.domains;
    let index = SlotIndex::new(&slots);
    let total = domains
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .filter(|&n| n <= cap)
        .ok_or(Error::Resource {
            what: "complete actions",
            count: u128::MAX,
            cap: cap as u128,
        })?;
    let ctx = vec![p.clone()];
    let mut best: Option<(Cost, Vec<u32>)> = None;
    let mut digits = vec![0u32; slots.len()];
    for _ in 0..total {
        let values: Vec<Option<u32>> = digits.iter().map(|&d| Some(d)).collect();
        let policy = AssignPolicy {
            index: &index,
            values: &values,
        };
        let zs = feasible_observations(hm, t, p, &policy)?;
        let mut ev = Evolver::new(hm, t, &policy);
        let mut worst: Option<Cost> = None;
        for z in zs {
            let s = ev.evolve(&ctx, &z)?;
            let v = next(&s).ok_or_else(|| Error::Internal("successor missing".into()))?;
            worst = Some(worst.map_or(v, |w| w.max(v)));
        }
        let worst = worst.ok_or_else(|| Error::Internal("no feasible observation".into()))?;
        if best.as_ref().is_none_or(|(b, _)| worst < *b) {
            best = Some((worst, digits.clone()));
        }
        for k in (0..digits.len()).rev() {
            digits[k] += 1;
            if (digits[k] as usize) < domains[k] {
                break;
            }
            digits[k] = 0;
        }
    }
    let (v, a) = best.unwrap();
    Ok((v, CompleteAction { slots, actions: a }))
}

/// The solved prescriptions as a policy: the action of a slot is read from
/// the complete action recorded at the root information state (the last
/// element of every key).
pub struct ProfilePolicy<'a> {
    pub solution: &'a Solution,
}

impl Policy for ProfilePolicy<'_> {
    fn action(
        &self,
        t: usize,
        j: usize,
        key: &[StateRef],
        agent: usize,
        view: &[u32],
    ) -> Result<u32> {
        let undefined = Error::StrategyUndefined {
            agent,
            subsystem: j,
            t,
        };
        let root = key.last().ok_or_else(|| undefined.clone_like())?;
        let entry = self.solution.layers[t]
            .get(root)
            .ok_or_else(|| undefined.clone_like())?;
        entry
            .index
            .get(j, key, agent, view)
            .map(|i| entry.action.actions[i])
            .ok_or(undefined)
    }
}

impl Error {
    fn clone_like(&self) -> Error {
        match self {
            Error::StrategyUndefined {
                agent,
                subsystem,
                t,
            } => Error::StrategyUndefined {
                agent: *agent,
                subsystem: *subsystem,
                t: *t,
            },
            other => Error::Internal(other.to_string()),
        }
    }
}

/// Agent-level control laws `g_t^{k,n}(y, l, c)`: the agent rebuilds its
/// information states `Π^{n:N}` from its common information, then applies
/// the partial action prescribed at that key.
pub struct AgentLaws<'a> {
    hm: &'a HatModel,
    solution: &'a Solution,
    cache: Mutex<StateCache>,
}

/// `(t, subsystem, common)` to the information states `Π^{n:N}`.
type StateCache = HashMap<(usize, usize, Vec<u32>), Arc<Vec<StateRef>>>;

pub fn extract_agent_strategies<'a>(hm: &'a HatModel, solution: &'a Solution) -> AgentLaws<'a> {
    AgentLaws {
        hm,
        solution,
        cache: Mutex::new(HashMap::new()),
    }
}

impl AgentLaws<'_> {
    /// `(Π_t^n, .., Π_t^N)` as seen by subsystem `n` after common
    /// information `common`.
    pub fn infostates(&self, t: usize, n: usize, common: &[u32]) -> Result<Arc<Vec<StateRef>>> {
        let key = (t, n, common.to_vec());
        if let Some(c) = self.cache.lock().unwrap().get(&key) {
            return Ok(c.clone());
        }
        let root = self.solution.root;
        let zs = (n..=root)
            .map(|m| self.hm.project_new(n, m, t, common))
            .collect::<Result<Vec<_>>>()?;
        let policy = ProfilePolicy {
            solution: self.solution,
        };
        let ctx = Arc::new(infostate::follow_history(
            self.hm, &policy, n, root, &zs, t,
        )?);
        self.cache.lock().unwrap().insert(key, ctx.clone());
        Ok(ctx)
    }
}

impl AgentStrategy for AgentLaws<'_> {
    fn act(
        &self,
        t: usize,
        agent: usize,
        obs: u32,
        private: &[u32],
        common: &[u32],
    ) -> Result<u32> {
        let n = self.hm.model.agents[agent].subsystem;
        let ctx = self.infostates(t, n, common).map_err(|e| match e {
            Error::InfeasibleObservation => Error::StrategyUndefined {
                agent,
                subsystem: n,
                t,
            },
            e => e,
        })?;
        let mut view = vec![obs];
        view.extend_from_slice(private);
        ProfilePolicy {
            solution: self.solution,
        }
        .action(t, n, &ctx, agent, &view)
    }
}

/// Exact worst-case cost of an agent-level strategy over every primitive
/// realization admitted by the initial constraints.
pub fn evaluate_strategy(
    model: &SystemModel,
    info: &InfoStructure,
    strategy: &dyn AgentStrategy,
) -> Result<Cost> {
    model::worst_case_cost(model, info, strategy)
}

/// Deterministic text export of the optimal complete actions.
pub fn export_strategy(sol: &Solution) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "nmx-strategy v1");
    let _ = writeln!(s, "tie_break {TIE_BREAK_RULE}");
    for (t, layer) in sol.layers.iter().enumerate() {
        if t + 1 == sol.layers.len() {
            break;
        }
        for (i, e) in layer.entries.iter().enumerate() {
            let _ = writeln!(s, "state t={t} id={i} value={}", format_cost(&e.value));
            let _ = writeln!(s, "  info {}", e.state.render());
            for (slot, &u) in e.action.slots.iter().zip(&e.action.actions) {
                let key: Vec<String> = slot.key[..slot.key.len() - 1]
                    .iter()
                    .map(|k| k.render())
                    .collect();
                let _ = writeln!(
                    s,
                    "  slot subsystem={} agent={} view={:?} key=[{}] -> {u}",
                    slot.j + 1,
                    slot.agent + 1,
                    slot.view,
                    key.join(" ")
                );
            }
        }
    }
    s
}

/// Deterministic text export of the value table.
pub fn export_values(sol: &Solution) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "nmx-values v1");
    for (t, layer) in sol.layers.iter().enumerate() {
        for (i, e) in layer.entries.iter().enumerate() {
            let _ = writeln!(
                s,
                "t={t} id={i} value={} ({}) members={} {}",
                format_cost(&e.value),
                decimal(&e.value, 4),
                e.state.len(),
                e.state.render()
            );
        }
    }
    s
}
