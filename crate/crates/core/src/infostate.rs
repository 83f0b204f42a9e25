//! Set-valued information states and their evolution.
//!
//! A level-0 information state is a set of hat states. A level-`n` state is
//! a set of members `(x̂, P^0, .., P^{n-1})` whose nested components are the
//! information states the better informed subsystems may hold.
//!
//! Decisions are read from a [`Policy`] keyed by information-state tuples.
//! For a state at level `i` evolved inside a root at level `R`, its context
//! is `ctx_i = (P^i, .., P^R)`. At a member `(x̂, p)` the partial action of
//! subsystem `j` is keyed by `p[j..] ++ ctx_i` when `j < i` and by
//! `ctx_i[j - i..]` otherwise (subsystems above the root share the root key).

use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rustc_hash::{FxHashMap, FxHashSet, FxHasher};

use crate::error::{Error, Result};
use crate::model;
use crate::nested::{Hat, HatModel, Source};

pub type StateRef = Arc<InfoState>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Member {
    pub hat: Hat,
    pub nested: Vec<StateRef>,
}

/// A canonical (sorted, duplicate-free) information state.
#[derive(Debug, Clone)]
pub struct InfoState {
    level: usize,
    members: Vec<Member>,
    hash: u64,
}

impl InfoState {
    pub fn new(level: usize, mut members: Vec<Member>) -> Self {
        members.sort_unstable();
        members.dedup();
        let mut h = FxHasher::default();
        level.hash(&mut h);
        members.hash(&mut h);
        InfoState {
            level,
            members,
            hash: h.finish(),
        }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, m: &Member) -> bool {
        self.members.binary_search(m).is_ok()
    }

    /// Nested text rendering in canonical order, for golden files and
    /// strategy exports.
    pub fn render(&self) -> String {
        let mut s = String::new();
        self.render_into(&mut s);
        s
    }

    fn render_into(&self, s: &mut String) {
        s.push('{');
        for (i, m) in self.members.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            if !m.nested.is_empty() {
                s.push('(');
            }
            s.push('[');
            for (k, v) in m.hat.iter().enumerate() {
                if k > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{v}");
            }
            s.push(']');
            for p in &m.nested {
                s.push(' ');
                p.render_into(s);
            }
            if !m.nested.is_empty() {
                s.push(')');
            }
        }
        s.push('}');
    }
}

impl PartialEq for InfoState {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self, other)
            || (self.hash == other.hash
                && self.level == other.level
                && self.members == other.members)
    }
}

impl Eq for InfoState {}

/// Hash-consing of information states: equal states, nested ones included,
/// share one allocation.
#[derive(Debug, Default)]
pub struct Interner {
    pool: FxHashSet<StateRef>,
}

impl Interner {
    pub fn intern(&mut self, s: &StateRef) -> StateRef {
        if let Some(x) = self.pool.get(s) {
            return x.clone();
        }
        let s = if s.level == 0 {
            s.clone()
        } else {
            let members = s
                .members
                .iter()
                .map(|m| Member {
                    hat: m.hat.clone(),
                    nested: m.nested.iter().map(|n| self.intern(n)).collect(),
                })
                .collect();
            Arc::new(InfoState {
                level: s.level,
                members,
                hash: s.hash,
            })
        };
        self.pool.insert(s.clone());
        s
    }

    pub fn len(&self) -> usize {
        self.pool.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pool.is_empty()
    }
}

impl Hash for InfoState {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.hash);
    }
}

impl PartialOrd for InfoState {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for InfoState {
    fn cmp(&self, other: &Self) -> Ordering {
        if std::ptr::eq(self, other) {
            return Ordering::Equal;
        }
        self.level
            .cmp(&other.level)
            .then_with(|| self.members.cmp(&other.members))
    }
}

/// Structured decisions: the action of `agent` (in subsystem `j`) at time
/// `t` given its view `(y, l)` and the information-state key of `j`.
pub trait Policy: Sync {
    fn action(
        &self,
        t: usize,
        j: usize,
        key: &[StateRef],
        agent: usize,
        view: &[u32],
    ) -> Result<u32>;
}

impl<F> Policy for F
where
    F: Fn(usize, usize, &[StateRef], usize, &[u32]) -> Result<u32> + Sync,
{
    fn action(
        &self,
        t: usize,
        j: usize,
        key: &[StateRef],
        agent: usize,
        view: &[u32],
    ) -> Result<u32> {
        self(t, j, key, agent, view)
    }
}

/// Key of subsystem `j`'s partial action at a member with nested states
/// `nested`, inside a state whose context is `ctx`.
pub fn member_key(j: usize, nested: &[StateRef], ctx: &[StateRef]) -> Vec<StateRef> {
    let i = nested.len();
    if j < i {
        let mut k = Vec::with_capacity(i - j + ctx.len());
        k.extend_from_slice(&nested[j..]);
        k.extend_from_slice(ctx);
        k
    } else {
        ctx[(j - i).min(ctx.len() - 1)..].to_vec()
    }
}

/// Context of the nested component `nested[j]`.
pub fn nested_ctx(j: usize, nested: &[StateRef], ctx: &[StateRef]) -> Vec<StateRef> {
    let mut k = Vec::with_capacity(nested.len() - j + ctx.len());
    k.extend_from_slice(&nested[j..]);
    k.extend_from_slice(ctx);
    k
}

/// All agents' actions at one member.
pub fn member_actions(
    hm: &HatModel,
    t: usize,
    policy: &dyn Policy,
    member: &Member,
    ctx: &[StateRef],
) -> Result<Vec<u32>> {
    let m = &hm.model;
    let i = member.nested.len();
    let mut keys: Vec<Option<Vec<StateRef>>> = vec![None; m.num_subsystems.min(i)];
    let mut view = Vec::new();
    let mut u = Vec::with_capacity(m.num_agents());
    for a in 0..m.num_agents() {
        let j = m.agents[a].subsystem;
        // keys of less informed subsystems are suffixes of the context
        let key: &[StateRef] = if j < i {
            keys[j].get_or_insert_with(|| member_key(j, &member.nested, ctx))
        } else {
            &ctx[(j - i).min(ctx.len() - 1)..]
        };
        hm.view_into(t, a, &member.hat, &mut view);
        let ua = policy.action(t, j, key, a, &view)?;
        if ua as usize >= m.num_actions(t, a) {
            return Err(Error::StrategyUndefined {
                agent: a,
                subsystem: j,
                t,
            });
        }
        u.push(ua);
    }
    Ok(u)
}

/// Whether the action-independent components of `z` match this hat.
pub fn static_match(hm: &HatModel, t: usize, level: usize, hat: &[u32], z: &[u32]) -> bool {
    hm.new_info_sources(t, level)
        .iter()
        .zip(z)
        .all(|(s, &zv)| match s {
            Source::Hat(i) => hat[*i] == zv,
            Source::Action(_) => true,
        })
}

/// Action-independent part of the new information a member would emit.
pub fn static_signature(hm: &HatModel, t: usize, level: usize, hat: &[u32]) -> Vec<u32> {
    hm.new_info_sources(t, level)
        .iter()
        .filter_map(|s| match s {
            Source::Hat(i) => Some(hat[*i]),
            Source::Action(_) => None,
        })
        .collect()
}

/// `Π_0^n`: all initial hat states admitted by the initial constraints,
/// nested with the matching lower-level initial states.
pub fn initial_infostate(hm: &HatModel, n: usize) -> Result<StateRef> {
    if n >= hm.num_subsystems() {
        return Err(Error::OutOfRange {
            what: "subsystem",
            index: n,
            limit: hm.num_subsystems() - 1,
        });
    }
    let hats: Vec<Hat> = hm
        .model
        .feasible_initial_states(&hm.info)
        .into_iter()
        .flat_map(|x| hm.initial_hats(x))
        .collect();
    if hats.is_empty() {
        return Err(Error::InconsistentInitial);
    }
    let mut nested: Vec<StateRef> = Vec::new();
    for level in 0..=n {
        let members = hats
            .iter()
            .map(|h| Member {
                hat: h.clone(),
                nested: nested.clone(),
            })
            .collect();
        nested.push(Arc::new(InfoState::new(level, members)));
    }
    Ok(nested.pop().unwrap())
}

/// Evolution of information states at one time step under a fixed policy.
/// Nested updates are memoized by `(context, z)`.
pub struct Evolver<'a> {
    hm: &'a HatModel,
    t: usize,
    policy: &'a dyn Policy,
    memo: FxHashMap<(Vec<StateRef>, Vec<u32>), StateRef>,
    noise: Vec<Vec<u32>>,
}

impl<'a> Evolver<'a> {
    pub fn new(hm: &'a HatModel, t: usize, policy: &'a dyn Policy) -> Self {
        let m = &hm.model;
        let noise = model::product((0..m.num_agents()).map(|a| m.num_noise(t + 1, a)).collect());
        Evolver {
            hm,
            t,
            policy,
            memo: FxHashMap::default(),
            noise,
        }
    }

    /// The interim set: members of `ctx[0]` whose predicted new information
    /// equals `z`, with the actions they take.
    pub fn interim(&self, ctx: &[StateRef], z: &[u32]) -> Result<Vec<(Member, Vec<u32>)>> {
        let state = &ctx[0];
        let level = state.level();
        let mut out = Vec::new();
        for member in state.members() {
            if !static_match(self.hm, self.t, level, &member.hat, z) {
                continue;
            }
            let u = member_actions(self.hm, self.t, self.policy, member, ctx)?;
            if self.hm.observe_unchecked(self.t, level, &member.hat, &u) == z {
                out.push((member.clone(), u));
            }
        }
        Ok(out)
    }

    /// `f̃_t`: the successor of `ctx[0]` after observing `z`.
    pub fn evolve(&mut self, ctx: &[StateRef], z: &[u32]) -> Result<StateRef> {
        let state = ctx[0].clone();
        let level = state.level();
        if level > 0 || ctx.len() > 1 {
            let key = (ctx.to_vec(), z.to_vec());
            if let Some(s) = self.memo.get(&key) {
                return Ok(s.clone());
            }
            let s = self.evolve_uncached(ctx, z)?;
            self.memo.insert(key, s.clone());
            return Ok(s);
        }
        self.evolve_uncached(ctx, z)
    }

    fn evolve_uncached(&mut self, ctx: &[StateRef], z: &[u32]) -> Result<StateRef> {
        let hm = self.hm;
        let t = self.t;
        let level = ctx[0].level();
        let interim = self.interim(ctx, z)?;
        if interim.is_empty() {
            return Err(Error::InfeasibleObservation);
        }
        let nw = hm.model.num_disturbances(t) as u32;
        let mut out = Vec::new();
        for (member, u) in interim {
            let mut nested = Vec::with_capacity(level);
            for j in 0..level {
                let zj = hm.observe_unchecked(t, j, &member.hat, &u);
                let cj = nested_ctx(j, &member.nested, ctx);
                let next = self.evolve(&cj, &zj).map_err(|e| match e {
                    Error::InfeasibleObservation => Error::Internal(format!(
                        "nested level {j} state became empty at t={}",
                        t + 1
                    )),
                    e => e,
                })?;
                nested.push(next);
            }
            for w in 0..nw {
                for v in &self.noise {
                    out.push(Member {
                        hat: hm.step_unchecked(t, &member.hat, &u, w, v),
                        nested: nested.clone(),
                    });
                }
            }
        }
        Ok(Arc::new(InfoState::new(level, out)))
    }
}

/// One-shot evolution of the state `ctx[0]` (see [`Evolver::evolve`]).
pub fn evolve_infostate(
    hm: &HatModel,
    t: usize,
    policy: &dyn Policy,
    ctx: &[StateRef],
    z: &[u32],
) -> Result<StateRef> {
    Evolver::new(hm, t, policy).evolve(ctx, z)
}

/// The interim set of `ctx[0]` for observation `z`; always a subset of it.
pub fn interim_set(
    hm: &HatModel,
    t: usize,
    policy: &dyn Policy,
    ctx: &[StateRef],
    z: &[u32],
) -> Result<Vec<Member>> {
    Ok(Evolver::new(hm, t, policy)
        .interim(ctx, z)?
        .into_iter()
        .map(|(m, _)| m)
        .collect())
}

/// Contexts of the information states `(P^n, .., P^R)` held along a history,
/// evolved level by level from the initial states. `zs[m - n][s]` is the new
/// information of subsystem `m` at time `s + 1`.
pub fn follow_history(
    hm: &HatModel,
    policy: &dyn Policy,
    n: usize,
    root: usize,
    zs: &[Vec<Vec<u32>>],
    t: usize,
) -> Result<Vec<StateRef>> {
    let mut ctx: Vec<StateRef> = (n..=root)
        .map(|m| initial_infostate(hm, m))
        .collect::<Result<_>>()?;
    for s in 0..t {
        let mut ev = Evolver::new(hm, s, policy);
        let mut next = Vec::with_capacity(ctx.len());
        for (k, z) in zs.iter().enumerate() {
            next.push(ev.evolve(&ctx[k..], &z[s])?);
        }
        ctx = next;
    }
    Ok(ctx)
}

/// One world of the definitional construction: a hat state together with
/// the realized common information of every subsystem (as the
/// concatenation of its new-information values).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct World {
    hat: Hat,
    commons: Vec<Vec<u32>>,
}

/// Information states of every level at one time, computed directly from
/// the set of worlds consistent with each common-information realization.
#[derive(Debug, Clone, Default)]
pub struct DefinitionalLayer {
    /// `[level]`: realized common information → information state
    pub states: Vec<BTreeMap<Vec<u32>, StateRef>>,
}

/// Result of looking up a history in the definitional construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Definitional {
    State(StateRef),
    /// No primitive realization reproduces the history.
    Inconsistent,
}

/// Direct construction of the information states at every time and level,
/// by forward enumeration of primitives under `policy` with subsystem `root`
/// as the key root. Independent of [`Evolver`].
pub fn definitional_layers(
    hm: &HatModel,
    policy: &dyn Policy,
    root: usize,
) -> Result<Vec<DefinitionalLayer>> {
    let m = &hm.model;
    let na = m.num_agents();
    let levels = root + 1;
    let mut worlds: Vec<World> = m
        .feasible_initial_states(&hm.info)
        .into_iter()
        .flat_map(|x| hm.initial_hats(x))
        .map(|hat| World {
            hat,
            commons: vec![Vec::new(); levels],
        })
        .collect();
    if worlds.is_empty() {
        return Err(Error::InconsistentInitial);
    }
    let mut layers = Vec::new();
    for t in 0..=m.horizon {
        worlds.sort();
        worlds.dedup();
        // per world, the information state of each level, bottom-up
        let mut per_world: Vec<Vec<StateRef>> = vec![Vec::with_capacity(levels); worlds.len()];
        let mut layer = DefinitionalLayer::default();
        for level in 0..levels {
            let mut groups: BTreeMap<&[u32], Vec<usize>> = BTreeMap::new();
            for (i, w) in worlds.iter().enumerate() {
                groups.entry(&w.commons[level]).or_default().push(i);
            }
            let mut map = BTreeMap::new();
            let mut assigned = Vec::new();
            for (c, idx) in groups {
                let members = idx
                    .iter()
                    .map(|&i| Member {
                        hat: worlds[i].hat.clone(),
                        nested: per_world[i].clone(),
                    })
                    .collect();
                let s = Arc::new(InfoState::new(level, members));
                for &i in &idx {
                    assigned.push((i, s.clone()));
                }
                map.insert(c.to_vec(), s);
            }
            for (i, s) in assigned {
                per_world[i].push(s);
            }
            layer.states.push(map);
        }
        layers.push(layer);
        if t == m.horizon {
            break;
        }
        let noise = model::product((0..na).map(|a| m.num_noise(t + 1, a)).collect());
        let mut next = Vec::new();
        for (i, w) in worlds.iter().enumerate() {
            let ps = &per_world[i];
            let mut u = Vec::with_capacity(na);
            for a in 0..na {
                let j = m.agents[a].subsystem;
                let key = &ps[j.min(root)..];
                let ua = policy.action(t, j, key, a, &hm.view(t, a, &w.hat))?;
                if ua as usize >= m.num_actions(t, a) {
                    return Err(Error::StrategyUndefined {
                        agent: a,
                        subsystem: j,
                        t,
                    });
                }
                u.push(ua);
            }
            let commons: Vec<Vec<u32>> = (0..levels)
                .map(|n| {
                    let mut c = w.commons[n].clone();
                    c.extend(hm.observe_unchecked(t, n, &w.hat, &u));
                    c
                })
                .collect();
            for wd in 0..m.num_disturbances(t) as u32 {
                for v in &noise {
                    next.push(World {
                        hat: hm.step_unchecked(t, &w.hat, &u, wd, v),
                        commons: commons.clone(),
                    });
                }
            }
        }
        worlds = next;
    }
    Ok(layers)
}

/// The level-`n` information state at time `t` after the new-information
/// sequence `zs = (z_1^n, .., z_t^n)`, computed definitionally.
pub fn definitional_infostate(
    hm: &HatModel,
    policy: &dyn Policy,
    root: usize,
    n: usize,
    zs: &[Vec<u32>],
) -> Result<Definitional> {
    let t = zs.len();
    if t > hm.horizon() || n > root || root >= hm.num_subsystems() {
        return Err(Error::OutOfRange {
            what: "time or level",
            index: t,
            limit: hm.horizon(),
        });
    }
    let layers = definitional_layers(hm, policy, root)?;
    let c: Vec<u32> = zs.concat();
    Ok(match layers[t].states[n].get(&c) {
        Some(s) => Definitional::State(s.clone()),
        None => Definitional::Inconsistent,
    })
}

/// A deterministic pseudo-random policy derived from a seed; used to probe
/// properties that must hold for every policy.
#[derive(Debug, Clone, Copy)]
pub struct HashedPolicy<'a> {
    pub hm: &'a HatModel,
    pub seed: u64,
}

impl Policy for HashedPolicy<'_> {
    fn action(
        &self,
        t: usize,
        j: usize,
        key: &[StateRef],
        agent: usize,
        view: &[u32],
    ) -> Result<u32> {
        let mut h = DefaultHasher::new();
        (self.seed, t, j, key, agent, view).hash(&mut h);
        let k = self.hm.model.num_actions(t, agent) as u64;
        Ok((h.finish() % k) as u32)
    }
}

/// Layered forward closure of the level-`n` information states under every
/// policy. Subsystems above `n` are treated as choosing freely.
pub fn reachable_infostates(
    hm: &HatModel,
    n: usize,
    t: usize,
    cap: usize,
) -> Result<Vec<StateRef>> {
    let layers = crate::dp::forward_layers(hm, n, t, cap, crate::exec::Exec::default())?;
    Ok(layers
        .into_iter()
        .last()
        .map(|l| l.states)
        .unwrap_or_default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_instance, InstanceParams};

    fn check_recursion_matches_definition(hm: &HatModel, seed: u64) {
        let root = hm.num_subsystems() - 1;
        let policy = HashedPolicy { hm, seed };
        let layers = definitional_layers(hm, &policy, root).unwrap();
        for n in 0..=root {
            assert_eq!(
                *layers[0].states[n].values().next().unwrap(),
                initial_infostate(hm, n).unwrap()
            );
        }
        for t in 0..hm.horizon() {
            for n in 0..=root {
                for (c, state) in &layers[t].states[n] {
                    // context from the definitional states of higher levels
                    let mut ctx = vec![state.clone()];
                    for m in n + 1..=root {
                        let cm = project(hm, t, n, m, c);
                        let member_of = layers[t].states[m][&cm].clone();
                        ctx.push(member_of);
                    }
                    let zlen = hm.new_info_ids(t + 1, n).len();
                    let mut seen = 0;
                    for (c2, next) in &layers[t + 1].states[n] {
                        if c2.len() != c.len() + zlen || &c2[..c.len()] != c.as_slice() {
                            continue;
                        }
                        seen += 1;
                        let z = &c2[c.len()..];
                        let evolved = evolve_infostate(hm, t, &policy, &ctx, z).unwrap();
                        assert_eq!(&evolved, next, "t={t} n={n}");
                        let q = interim_set(hm, t, &policy, &ctx, z).unwrap();
                        assert!(q.iter().all(|m| state.contains(m)));
                    }
                    assert!(seen > 0);
                }
            }
        }
    }

    /// The level-`m` common realization implied by the level-`n` one (`m > n`).
    fn project(hm: &HatModel, t: usize, n: usize, m: usize, cn: &[u32]) -> Vec<u32> {
        let cn_zs = split(hm, n, t, cn);
        let mut out = Vec::new();
        for s in 1..=t {
            for id in hm.new_info_ids(s, m) {
                let v = (1..=s)
                    .find_map(|r| {
                        hm.new_info_ids(r, n)
                            .iter()
                            .position(|x| x == id)
                            .map(|i| cn_zs[r - 1][i])
                    })
                    .unwrap();
                out.push(v);
            }
        }
        out
    }

    fn split(hm: &HatModel, n: usize, t: usize, c: &[u32]) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        let mut pos = 0;
        for s in 1..=t {
            let k = hm.new_info_ids(s, n).len();
            out.push(c[pos..pos + k].to_vec());
            pos += k;
        }
        out
    }

    #[test]
    fn recursion_matches_definition_on_random_instances() {
        for seed in 0..40 {
            let inst = random_instance(seed, &InstanceParams::default());
            let hm = HatModel::build(&inst.model, &inst.info).unwrap();
            check_recursion_matches_definition(&hm, seed ^ 0x5eed);
        }
    }

    #[test]
    fn infeasible_observation_is_reported() {
        let inst = random_instance(3, &InstanceParams::default());
        let hm = HatModel::build(&inst.model, &inst.info).unwrap();
        let root = hm.num_subsystems() - 1;
        let p0 = initial_infostate(&hm, root).unwrap();
        if hm.horizon() == 0 {
            return;
        }
        let zlen = hm.new_info_ids(1, root).len();
        if zlen == 0 {
            return;
        }
        let bad = vec![u32::MAX; zlen];
        let policy = HashedPolicy { hm: &hm, seed: 1 };
        assert!(matches!(
            evolve_infostate(&hm, 0, &policy, &[p0], &bad),
            Err(Error::InfeasibleObservation)
        ));
    }

    #[test]
    fn canonical_form_ignores_insertion_order() {
        let a = Member {
            hat: vec![1, 2].into(),
            nested: vec![],
        };
        let b = Member {
            hat: vec![0, 5].into(),
            nested: vec![],
        };
        let s1 = InfoState::new(0, vec![a.clone(), b.clone(), a.clone()]);
        let s2 = InfoState::new(0, vec![b, a]);
        assert_eq!(s1, s2);
        assert_eq!(s1.len(), 2);
        assert_eq!(s1.render(), "{[0,5] [1,2]}");
    }
}
