//! Finite decentralized control problems: spaces, tabulated dynamics and
//! observations, costs, and the memory-based information structure.
//!
//! Agents are addressed by a global index into [`SystemModel::agents`];
//! subsystems are 0-based internally (subsystem `0` is the best informed).

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_rational::Ratio;
use num_traits::Zero;

use crate::error::{Error, Result};

/// Exact cost value.
pub type Cost = Ratio<i64>;

/// Sentinel for a table entry that was never filled in.
pub const MISSING: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteSpace {
    name: String,
    elements: Vec<String>,
    index: HashMap<String, u32>,
}

impl FiniteSpace {
    pub fn new(name: impl Into<String>, elements: Vec<String>) -> Result<Self> {
        let name = name.into();
        if elements.is_empty() {
            return Err(Error::Params(format!("space `{name}` is empty")));
        }
        let mut index = HashMap::with_capacity(elements.len());
        for (i, e) in elements.iter().enumerate() {
            if index.insert(e.clone(), i as u32).is_some() {
                return Err(Error::Params(format!(
                    "space `{name}` repeats element `{e}`"
                )));
            }
        }
        Ok(FiniteSpace {
            name,
            elements,
            index,
        })
    }

    /// A space whose tokens are `0..n` rendered in decimal.
    pub fn range(name: impl Into<String>, n: usize) -> Result<Self> {
        Self::new(name, (0..n).map(|i| i.to_string()).collect())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn index_of(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, i: u32) -> &str {
        &self.elements[i as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpaceId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Agent {
    pub name: String,
    pub subsystem: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    Y,
    U,
}

/// A past variable `Y_s^a` or `U_s^a` that can sit in an agent's memory.
///
/// Ordered by time first, so sorted identifier lists read chronologically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId {
    pub time: usize,
    pub kind: VarKind,
    pub agent: usize,
}

impl VarId {
    pub fn y(agent: usize, time: usize) -> Self {
        VarId {
            time,
            kind: VarKind::Y,
            agent,
        }
    }

    pub fn u(agent: usize, time: usize) -> Self {
        VarId {
            time,
            kind: VarKind::U,
            agent,
        }
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            VarKind::Y => "Y",
            VarKind::U => "U",
        };
        write!(f, "{k}[a{}@{}]", self.agent, self.time)
    }
}

/// The finite plant. Tables are dense; joint actions use a mixed-radix index
/// with agent 0 most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    pub horizon: usize,
    pub agents: Vec<Agent>,
    pub num_subsystems: usize,
    pub spaces: Vec<FiniteSpace>,
    /// `t = 0..=T`
    pub state_spaces: Vec<SpaceId>,
    /// Feasible initial states, indices into `state_spaces[0]`, ascending.
    pub initial_states: Vec<u32>,
    /// `[t][agent]`, `t = 0..T`
    pub action_spaces: Vec<Vec<SpaceId>>,
    /// `t = 0..T`
    pub disturbance_spaces: Vec<SpaceId>,
    /// `[t][agent]`, `t = 0..=T`
    pub noise_spaces: Vec<Vec<SpaceId>>,
    /// `[t][agent]`, `t = 0..=T`
    pub obs_spaces: Vec<Vec<SpaceId>>,
    /// `[t]`, index `(x * joint + u) * |W_t| + w`
    pub dynamics: Vec<Vec<u32>>,
    /// `[t][agent]`, index `x * |V| + v`
    pub observation: Vec<Vec<Vec<u32>>>,
    pub terminal_cost: Vec<Option<Cost>>,
    /// `[t]`, index `x * joint + u`
    pub stage_costs: Option<Vec<Vec<Option<Cost>>>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfoStructure {
    /// `[t][agent]`, `t = 0..=T`
    pub memory: Vec<Vec<BTreeSet<VarId>>>,
    /// Per subsystem: initial states (indices into `state_spaces[0]`) that
    /// the subsystem's initial common information admits. `None` = all.
    pub initial_common: Vec<Option<BTreeSet<u32>>>,
}

impl SystemModel {
    pub fn space(&self, id: SpaceId) -> &FiniteSpace {
        &self.spaces[id.0]
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn agents_of(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        self.agents
            .iter()
            .enumerate()
            .filter(move |(_, a)| a.subsystem == n)
            .map(|(i, _)| i)
    }

    pub fn num_states(&self, t: usize) -> usize {
        self.space(self.state_spaces[t]).len()
    }

    pub fn num_actions(&self, t: usize, agent: usize) -> usize {
        self.space(self.action_spaces[t][agent]).len()
    }

    pub fn num_disturbances(&self, t: usize) -> usize {
        self.space(self.disturbance_spaces[t]).len()
    }

    pub fn num_noise(&self, t: usize, agent: usize) -> usize {
        self.space(self.noise_spaces[t][agent]).len()
    }

    pub fn num_obs(&self, t: usize, agent: usize) -> usize {
        self.space(self.obs_spaces[t][agent]).len()
    }

    pub fn joint_actions(&self, t: usize) -> usize {
        (0..self.num_agents())
            .map(|a| self.num_actions(t, a))
            .product()
    }

    pub fn joint_index(&self, t: usize, u: &[u32]) -> usize {
        u.iter().enumerate().fold(0usize, |acc, (a, &ua)| {
            acc * self.num_actions(t, a) + ua as usize
        })
    }

    pub fn joint_decode(&self, t: usize, mut idx: usize) -> Vec<u32> {
        let mut u = vec![0u32; self.num_agents()];
        for a in (0..self.num_agents()).rev() {
            let k = self.num_actions(t, a);
            u[a] = (idx % k) as u32;
            idx /= k;
        }
        u
    }

    pub fn dynamics_index(&self, t: usize, x: u32, u: &[u32], w: u32) -> usize {
        let joint = self.joint_actions(t);
        (x as usize * joint + self.joint_index(t, u)) * self.num_disturbances(t) + w as usize
    }

    pub fn step(&self, t: usize, x: u32, u: &[u32], w: u32) -> u32 {
        self.dynamics[t][self.dynamics_index(t, x, u, w)]
    }

    pub fn observe(&self, t: usize, agent: usize, x: u32, v: u32) -> u32 {
        self.observation[t][agent][x as usize * self.num_noise(t, agent) + v as usize]
    }

    pub fn terminal(&self, x: u32) -> Cost {
        self.terminal_cost[x as usize].unwrap_or_else(Cost::zero)
    }

    pub fn stage(&self, t: usize, x: u32, u: &[u32]) -> Cost {
        match &self.stage_costs {
            Some(sc) => {
                let idx = x as usize * self.joint_actions(t) + self.joint_index(t, u);
                sc[t][idx].unwrap_or_else(Cost::zero)
            }
            None => Cost::zero(),
        }
    }

    pub fn has_stage_costs(&self) -> bool {
        self.stage_costs.is_some()
    }

    /// Initial states admitted by both the model and the tightest initial
    /// common constraint.
    pub fn feasible_initial_states(&self, info: &InfoStructure) -> Vec<u32> {
        self.initial_states
            .iter()
            .copied()
            .filter(|x| {
                info.initial_common
                    .iter()
                    .all(|c| c.as_ref().is_none_or(|s| s.contains(x)))
            })
            .collect()
    }
}

impl InfoStructure {
    fn check(&self, n: usize, t: usize, model: &SystemModel) -> Result<()> {
        if t > model.horizon {
            return Err(Error::OutOfRange {
                what: "time",
                index: t,
                limit: model.horizon,
            });
        }
        if n >= model.num_subsystems {
            return Err(Error::OutOfRange {
                what: "subsystem",
                index: n,
                limit: model.num_subsystems.saturating_sub(1),
            });
        }
        Ok(())
    }

    pub fn memory_content(&self, agent: usize, t: usize) -> &BTreeSet<VarId> {
        &self.memory[t][agent]
    }

    /// `C_t^n`: intersection of the memories of all agents in subsystem `n`.
    pub fn common_information(
        &self,
        model: &SystemModel,
        n: usize,
        t: usize,
    ) -> Result<BTreeSet<VarId>> {
        self.check(n, t, model)?;
        let mut agents = model.agents_of(n);
        let first = match agents.next() {
            Some(a) => self.memory[t][a].clone(),
            None => return Ok(BTreeSet::new()),
        };
        Ok(agents.fold(first, |acc, a| {
            acc.intersection(&self.memory[t][a]).copied().collect()
        }))
    }

    /// `L_t^{k,n} = M_t^{k,n} \ C_t^n`.
    pub fn private_information(
        &self,
        model: &SystemModel,
        agent: usize,
        t: usize,
    ) -> Result<BTreeSet<VarId>> {
        if agent >= model.num_agents() {
            return Err(Error::OutOfRange {
                what: "agent",
                index: agent,
                limit: model.num_agents().saturating_sub(1),
            });
        }
        let common = self.common_information(model, model.agents[agent].subsystem, t)?;
        Ok(self.memory[t][agent].difference(&common).copied().collect())
    }

    /// `Z_t^n = C_t^n \ C_{t-1}^n`, with `C_{-1}^n` empty.
    pub fn new_information(
        &self,
        model: &SystemModel,
        n: usize,
        t: usize,
    ) -> Result<BTreeSet<VarId>> {
        let now = self.common_information(model, n, t)?;
        if t == 0 {
            return Ok(now);
        }
        let before = self.common_information(model, n, t - 1)?;
        Ok(now.difference(&before).copied().collect())
    }
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Shape(String),
    OutOfSpace {
        table: &'static str,
        t: usize,
        detail: String,
    },
    MissingEntry {
        table: &'static str,
        t: usize,
        detail: String,
    },
    NegativeCost {
        table: &'static str,
        detail: String,
    },
    UnknownAgent {
        agent: usize,
        t: usize,
        var: VarId,
    },
    FutureReference {
        agent: usize,
        subsystem: usize,
        t: usize,
        var: VarId,
    },
    LowerSubsystemVariable {
        agent: usize,
        subsystem: usize,
        t: usize,
        var: VarId,
    },
    PerfectRecall {
        agent: usize,
        subsystem: usize,
        t: usize,
    },
    Nestedness {
        lower: usize,
        higher: usize,
        t: usize,
    },
    Privacy {
        agent: usize,
        subsystem: usize,
        t: usize,
        var: VarId,
        common_of: usize,
    },
    InitialConstraint(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // subsystems and agents are printed 1-based
        match self {
            Violation::Shape(s) => write!(f, "shape: {s}"),
            Violation::OutOfSpace { table, t, detail } => {
                write!(f, "{table} entry outside its space at t={t}: {detail}")
            }
            Violation::MissingEntry { table, t, detail } => {
                write!(f, "{table} entry missing at t={t}: {detail}")
            }
            Violation::NegativeCost { table, detail } => {
                write!(f, "negative {table} cost: {detail}")
            }
            Violation::UnknownAgent { agent, t, var } => write!(
                f,
                "memory of agent {} at t={t} references unknown agent: {var}",
                agent + 1
            ),
            Violation::FutureReference {
                agent,
                subsystem,
                t,
                var,
            } => write!(
                f,
                "memory of agent (k={}, n={}) at t={t} holds {var}, not yet realized",
                agent + 1,
                subsystem + 1
            ),
            Violation::LowerSubsystemVariable {
                agent,
                subsystem,
                t,
                var,
            } => write!(
                f,
                "memory of agent (k={}, n={}) at t={t} holds {var} from a lower subsystem",
                agent + 1,
                subsystem + 1
            ),
            Violation::PerfectRecall {
                agent,
                subsystem,
                t,
            } => write!(
                f,
                "perfect recall violated by agent (k={}, n={}) between t={t} and t={}",
                agent + 1,
                subsystem + 1,
                t + 1
            ),
            Violation::Nestedness { lower, higher, t } => write!(
                f,
                "common information of subsystem {} not contained in subsystem {} at t={t}",
                higher + 1,
                lower + 1
            ),
            Violation::Privacy {
                agent,
                subsystem,
                t,
                var,
                common_of,
            } => write!(
                f,
                "private {var} of agent (k={}, n={}) at t={t} is common to subsystem {}",
                agent + 1,
                subsystem + 1,
                common_of + 1
            ),
            Violation::InitialConstraint(s) => write!(f, "initial common information: {s}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::Invalid(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Check every structural invariant of the model and the information
/// structure. Violations are collected, never raised.
pub fn validate(model: &SystemModel, info: &InfoStructure) -> ValidationReport {
    let mut out = Vec::new();
    let t_max = model.horizon;
    let na = model.num_agents();

    let shape = |cond: bool, msg: String, out: &mut Vec<Violation>| {
        if !cond {
            out.push(Violation::Shape(msg));
        }
    };
    shape(model.num_subsystems > 0, "no subsystems".into(), &mut out);
    for n in 0..model.num_subsystems {
        shape(
            model.agents_of(n).next().is_some(),
            format!("subsystem {} has no agents", n + 1),
            &mut out,
        );
    }
    for (i, a) in model.agents.iter().enumerate() {
        shape(
            a.subsystem < model.num_subsystems,
            format!("agent {} assigned to unknown subsystem", i + 1),
            &mut out,
        );
    }
    shape(
        model.state_spaces.len() == t_max + 1,
        "state spaces must cover t=0..T".into(),
        &mut out,
    );
    shape(
        model.action_spaces.len() == t_max && model.action_spaces.iter().all(|v| v.len() == na),
        "action spaces must cover every agent for t=0..T-1".into(),
        &mut out,
    );
    shape(
        model.disturbance_spaces.len() == t_max,
        "disturbance spaces must cover t=0..T-1".into(),
        &mut out,
    );
    shape(
        model.noise_spaces.len() == t_max + 1 && model.noise_spaces.iter().all(|v| v.len() == na),
        "noise spaces must cover every agent for t=0..T".into(),
        &mut out,
    );
    shape(
        model.obs_spaces.len() == t_max + 1 && model.obs_spaces.iter().all(|v| v.len() == na),
        "observation spaces must cover every agent for t=0..T".into(),
        &mut out,
    );
    shape(
        info.memory.len() == t_max + 1 && info.memory.iter().all(|v| v.len() == na),
        "memory must be declared for every agent and t=0..T".into(),
        &mut out,
    );
    shape(
        info.initial_common.len() == model.num_subsystems,
        "one initial common constraint per subsystem".into(),
        &mut out,
    );
    if !out.is_empty() {
        return ValidationReport { violations: out };
    }
    shape(
        !model.initial_states.is_empty(),
        "no feasible initial state".into(),
        &mut out,
    );
    for &x in &model.initial_states {
        if x as usize >= model.num_states(0) {
            out.push(Violation::OutOfSpace {
                table: "initial",
                t: 0,
                detail: format!("state index {x}"),
            });
        }
    }

    // tables
    for t in 0..t_max {
        let nx = model.num_states(t);
        let joint = model.joint_actions(t);
        let nw = model.num_disturbances(t);
        let next = model.num_states(t + 1) as u32;
        if model.dynamics[t].len() != nx * joint * nw {
            out.push(Violation::Shape(format!("dynamics table size at t={t}")));
            continue;
        }
        for (i, &y) in model.dynamics[t].iter().enumerate() {
            let x = i / (joint * nw);
            let u = model.joint_decode(t, (i / nw) % joint);
            let w = i % nw;
            let detail = || {
                format!(
                    "x={} u={:?} w={}",
                    model.space(model.state_spaces[t]).token(x as u32),
                    u,
                    w
                )
            };
            if y == MISSING {
                out.push(Violation::MissingEntry {
                    table: "dynamics",
                    t,
                    detail: detail(),
                });
            } else if y >= next {
                out.push(Violation::OutOfSpace {
                    table: "dynamics",
                    t,
                    detail: detail(),
                });
            }
        }
    }
    for t in 0..=t_max {
        for a in 0..na {
            let nx = model.num_states(t);
            let nv = model.num_noise(t, a);
            let ny = model.num_obs(t, a) as u32;
            let table = &model.observation[t][a];
            if table.len() != nx * nv {
                out.push(Violation::Shape(format!(
                    "observation table size for agent {} at t={t}",
                    a + 1
                )));
                continue;
            }
            for (i, &y) in table.iter().enumerate() {
                let detail = || format!("agent {} x={} v={}", a + 1, i / nv, i % nv);
                if y == MISSING {
                    out.push(Violation::MissingEntry {
                        table: "observation",
                        t,
                        detail: detail(),
                    });
                } else if y >= ny {
                    out.push(Violation::OutOfSpace {
                        table: "observation",
                        t,
                        detail: detail(),
                    });
                }
            }
        }
    }
    if model.terminal_cost.len() != model.num_states(t_max) {
        out.push(Violation::Shape("terminal cost table size".into()));
    } else {
        for (x, c) in model.terminal_cost.iter().enumerate() {
            match c {
                None => out.push(Violation::MissingEntry {
                    table: "terminal",
                    t: t_max,
                    detail: format!("x={x}"),
                }),
                Some(c) if *c < Cost::zero() => out.push(Violation::NegativeCost {
                    table: "terminal",
                    detail: format!("x={x} cost={c}"),
                }),
                _ => {}
            }
        }
    }
    if let Some(sc) = &model.stage_costs {
        if sc.len() != t_max {
            out.push(Violation::Shape(
                "stage cost tables must cover t=0..T-1".into(),
            ));
        } else {
            for (t, table) in sc.iter().enumerate() {
                let joint = model.joint_actions(t);
                if table.len() != model.num_states(t) * joint {
                    out.push(Violation::Shape(format!("stage cost table size at t={t}")));
                    continue;
                }
                for (i, c) in table.iter().enumerate() {
                    let detail =
                        || format!("x={} u={:?}", i / joint, model.joint_decode(t, i % joint));
                    match c {
                        None => out.push(Violation::MissingEntry {
                            table: "stage",
                            t,
                            detail: detail(),
                        }),
                        Some(c) if *c < Cost::zero() => out.push(Violation::NegativeCost {
                            table: "stage",
                            detail: format!("t={t} {}", detail()),
                        }),
                        _ => {}
                    }
                }
            }
        }
    }

    // information structure
    for t in 0..=t_max {
        for a in 0..na {
            let n = model.agents[a].subsystem;
            for &var in &info.memory[t][a] {
                if var.agent >= na {
                    out.push(Violation::UnknownAgent { agent: a, t, var });
                    continue;
                }
                if var.time >= t {
                    out.push(Violation::FutureReference {
                        agent: a,
                        subsystem: n,
                        t,
                        var,
                    });
                }
                if model.agents[var.agent].subsystem < n {
                    out.push(Violation::LowerSubsystemVariable {
                        agent: a,
                        subsystem: n,
                        t,
                        var,
                    });
                }
            }
            if t < t_max && !info.memory[t][a].is_subset(&info.memory[t + 1][a]) {
                out.push(Violation::PerfectRecall {
                    agent: a,
                    subsystem: n,
                    t,
                });
            }
        }
    }
    let ns = model.num_subsystems;
    let commons: Vec<Vec<BTreeSet<VarId>>> = (0..=t_max)
        .map(|t| {
            (0..ns)
                .map(|n| info.common_information(model, n, t).unwrap_or_default())
                .collect()
        })
        .collect();
    for t in 0..=t_max {
        for n in 0..ns {
            for m in n + 1..ns {
                if !commons[t][m].is_subset(&commons[t][n]) {
                    out.push(Violation::Nestedness {
                        lower: n,
                        higher: m,
                        t,
                    });
                }
            }
        }
        for a in 0..na {
            let m = model.agents[a].subsystem;
            for var in info.memory[t][a].difference(&commons[t][m]) {
                for n in 0..m {
                    if commons[t][n].contains(var) {
                        out.push(Violation::Privacy {
                            agent: a,
                            subsystem: m,
                            t,
                            var: *var,
                            common_of: n,
                        });
                    }
                }
            }
        }
    }

    let nx0 = model.num_states(0) as u32;
    for (n, c) in info.initial_common.iter().enumerate() {
        if let Some(set) = c {
            if let Some(x) = set.iter().find(|&&x| x >= nx0) {
                out.push(Violation::InitialConstraint(format!(
                    "subsystem {} admits unknown state index {x}",
                    n + 1
                )));
            }
        }
    }
    // a better informed subsystem admits fewer initial states
    for n in 0..ns {
        for m in n + 1..ns {
            if let (Some(lo), hi) = (&info.initial_common[m], &info.initial_common[n]) {
                let ok = match hi {
                    Some(hi) => hi.is_subset(lo),
                    None => false,
                };
                if !ok {
                    out.push(Violation::InitialConstraint(format!(
                        "constraint of subsystem {} is not nested inside subsystem {}",
                        n + 1,
                        m + 1
                    )));
                }
            }
        }
    }
    if out.is_empty() && model.feasible_initial_states(info).is_empty() {
        out.push(Violation::InitialConstraint(
            "no initial state satisfies every constraint".into(),
        ));
    }

    ValidationReport { violations: out }
}

/// Realized primitive variables `(x_0, w_{0:T-1}, v_{0:T})`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Primitives {
    pub x0: u32,
    pub w: Vec<u32>,
    /// `[t][agent]`
    pub v: Vec<Vec<u32>>,
}

/// Agent-level control laws `g_t^{k,n}(y, l, c)`.
///
/// `private` and `common` carry realized values of `L_t` and `C_t` in
/// ascending identifier order.
pub trait AgentStrategy {
    fn act(&self, t: usize, agent: usize, obs: u32, private: &[u32], common: &[u32])
        -> Result<u32>;
}

impl<F> AgentStrategy for F
where
    F: Fn(usize, usize, u32, &[u32], &[u32]) -> Result<u32>,
{
    fn act(
        &self,
        t: usize,
        agent: usize,
        obs: u32,
        private: &[u32],
        common: &[u32],
    ) -> Result<u32> {
        self(t, agent, obs, private, common)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub states: Vec<u32>,
    /// `[t][agent]`, `t = 0..T`
    pub actions: Vec<Vec<u32>>,
    /// `[t][agent]`, `t = 0..=T`
    pub observations: Vec<Vec<u32>>,
    /// `[t][agent]` realized memory values in identifier order
    pub memories: Vec<Vec<Vec<u32>>>,
    pub cost: Cost,
}

/// Precomputed per-agent split of memories into private and common parts.
#[derive(Debug, Clone)]
pub struct MemoryLayout {
    /// `[t][agent]`
    pub private: Vec<Vec<Vec<VarId>>>,
    /// `[t][subsystem]`
    pub common: Vec<Vec<Vec<VarId>>>,
}

impl MemoryLayout {
    pub fn new(model: &SystemModel, info: &InfoStructure) -> Result<Self> {
        let mut private = Vec::new();
        let mut common = Vec::new();
        for t in 0..=model.horizon {
            let mut c_t = Vec::new();
            for n in 0..model.num_subsystems {
                c_t.push(info.common_information(model, n, t)?.into_iter().collect());
            }
            let mut p_t = Vec::new();
            for a in 0..model.num_agents() {
                p_t.push(info.private_information(model, a, t)?.into_iter().collect());
            }
            common.push(c_t);
            private.push(p_t);
        }
        Ok(MemoryLayout { private, common })
    }
}

/// Realized values of past variables along a partially built trajectory.
pub(crate) fn var_value(obs: &[Vec<u32>], actions: &[Vec<u32>], var: &VarId) -> u32 {
    match var.kind {
        VarKind::Y => obs[var.time][var.agent],
        VarKind::U => actions[var.time][var.agent],
    }
}

pub(crate) fn agent_action(
    model: &SystemModel,
    layout: &MemoryLayout,
    strategy: &dyn AgentStrategy,
    t: usize,
    agent: usize,
    obs: &[Vec<u32>],
    actions: &[Vec<u32>],
) -> Result<u32> {
    let n = model.agents[agent].subsystem;
    let private: Vec<u32> = layout.private[t][agent]
        .iter()
        .map(|v| var_value(obs, actions, v))
        .collect();
    let common: Vec<u32> = layout.common[t][n]
        .iter()
        .map(|v| var_value(obs, actions, v))
        .collect();
    let u = strategy.act(t, agent, obs[t][agent], &private, &common)?;
    if u as usize >= model.num_actions(t, agent) {
        return Err(Error::StrategyUndefined {
            agent,
            subsystem: n,
            t,
        });
    }
    Ok(u)
}

/// Deterministic rollout of the original system under an agent-level strategy.
pub fn simulate(
    model: &SystemModel,
    info: &InfoStructure,
    strategy: &dyn AgentStrategy,
    primitives: &Primitives,
) -> Result<Trajectory> {
    let layout = MemoryLayout::new(model, info)?;
    simulate_with(model, info, &layout, strategy, primitives)
}

pub fn simulate_with(
    model: &SystemModel,
    info: &InfoStructure,
    layout: &MemoryLayout,
    strategy: &dyn AgentStrategy,
    p: &Primitives,
) -> Result<Trajectory> {
    let t_max = model.horizon;
    let na = model.num_agents();
    let mut x = p.x0;
    let mut states = vec![x];
    let mut obs: Vec<Vec<u32>> = Vec::new();
    let mut actions: Vec<Vec<u32>> = Vec::new();
    let mut memories = Vec::new();
    let mut cost = Cost::zero();
    for t in 0..=t_max {
        obs.push((0..na).map(|a| model.observe(t, a, x, p.v[t][a])).collect());
        memories.push(
            (0..na)
                .map(|a| {
                    info.memory[t][a]
                        .iter()
                        .map(|v| var_value(&obs, &actions, v))
                        .collect()
                })
                .collect(),
        );
        if t == t_max {
            break;
        }
        let mut u = Vec::with_capacity(na);
        for a in 0..na {
            u.push(agent_action(model, layout, strategy, t, a, &obs, &actions)?);
        }
        cost += model.stage(t, x, &u);
        x = model.step(t, x, &u, p.w[t]);
        actions.push(u);
        states.push(x);
    }
    cost += model.terminal(x);
    Ok(Trajectory {
        states,
        actions,
        observations: obs,
        memories,
        cost,
    })
}

/// Enumerate every primitive realization (initial states restricted by the
/// initial common constraints).
pub fn all_primitives(model: &SystemModel, info: &InfoStructure) -> Vec<Primitives> {
    let t_max = model.horizon;
    let na = model.num_agents();
    let mut out: Vec<Primitives> = model
        .feasible_initial_states(info)
        .into_iter()
        .map(|x0| Primitives {
            x0,
            w: Vec::new(),
            v: Vec::new(),
        })
        .collect();
    for t in 0..=t_max {
        let noise_combos = product((0..na).map(|a| model.num_noise(t, a)).collect());
        let mut next = Vec::with_capacity(out.len() * noise_combos.len());
        for p in &out {
            for v in &noise_combos {
                let mut q = p.clone();
                q.v.push(v.clone());
                next.push(q);
            }
        }
        out = next;
        if t < t_max {
            let nw = model.num_disturbances(t);
            let mut next = Vec::with_capacity(out.len() * nw);
            for p in &out {
                for w in 0..nw as u32 {
                    let mut q = p.clone();
                    q.w.push(w);
                    next.push(q);
                }
            }
            out = next;
        }
    }
    out
}

/// Cartesian product of `0..sizes[i]`, first coordinate most significant.
pub fn product(sizes: Vec<usize>) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::with_capacity(sizes.len())];
    for &s in &sizes {
        let mut next = Vec::with_capacity(out.len() * s);
        for p in &out {
            for i in 0..s as u32 {
                let mut q = p.clone();
                q.push(i);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Worst-case realized cost of an agent-level strategy over all primitives.
pub fn worst_case_cost(
    model: &SystemModel,
    info: &InfoStructure,
    strategy: &dyn AgentStrategy,
) -> Result<Cost> {
    let layout = MemoryLayout::new(model, info)?;
    let mut worst: Option<Cost> = None;
    for p in all_primitives(model, info) {
        let c = simulate_with(model, info, &layout, strategy, &p)?.cost;
        worst = Some(match worst {
            Some(w) if w >= c => w,
            _ => c,
        });
    }
    worst.ok_or(Error::InconsistentInitial)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// One agent, one subsystem, `|X| = 2`, identity dynamics, full recall.
    pub(crate) fn chain(t_max: usize) -> (SystemModel, InfoStructure) {
        let spaces = vec![
            FiniteSpace::range("x", 2).unwrap(),
            FiniteSpace::range("u", 2).unwrap(),
            FiniteSpace::range("one", 1).unwrap(),
        ];
        let model = SystemModel {
            horizon: t_max,
            agents: vec![Agent {
                name: "a".into(),
                subsystem: 0,
            }],
            num_subsystems: 1,
            spaces,
            state_spaces: vec![SpaceId(0); t_max + 1],
            initial_states: vec![0, 1],
            action_spaces: vec![vec![SpaceId(1)]; t_max],
            disturbance_spaces: vec![SpaceId(2); t_max],
            noise_spaces: vec![vec![SpaceId(2)]; t_max + 1],
            obs_spaces: vec![vec![SpaceId(0)]; t_max + 1],
            dynamics: vec![vec![0, 0, 1, 1]; t_max],
            observation: vec![vec![vec![0, 1]]; t_max + 1],
            terminal_cost: vec![Some(Cost::from_integer(3)), Some(Cost::from_integer(5))],
            stage_costs: None,
        };
        let memory = (0..=t_max)
            .map(|t| {
                vec![(0..t)
                    .flat_map(|s| [VarId::y(0, s), VarId::u(0, s)])
                    .collect()]
            })
            .collect();
        let info = InfoStructure {
            memory,
            initial_common: vec![None],
        };
        (model, info)
    }

    #[test]
    fn full_sharing_single_subsystem_is_valid() {
        let (m, i) = chain(2);
        assert!(validate(&m, &i).is_valid(), "{}", validate(&m, &i));
    }

    #[test]
    fn privacy_violation_is_reported() {
        // two subsystems with one agent each; agent of subsystem 2 keeps Y
        // of itself privately? impossible with one agent, so use two agents
        let (mut m, _) = chain(1);
        m.agents = vec![
            Agent {
                name: "a".into(),
                subsystem: 0,
            },
            Agent {
                name: "b".into(),
                subsystem: 1,
            },
            Agent {
                name: "c".into(),
                subsystem: 1,
            },
        ];
        m.num_subsystems = 2;
        m.action_spaces = vec![vec![SpaceId(2); 3]];
        m.noise_spaces = vec![vec![SpaceId(2); 3]; 2];
        m.obs_spaces = vec![vec![SpaceId(0); 3]; 2];
        m.dynamics = vec![vec![0, 1]];
        m.observation = vec![vec![vec![0, 1]; 3]; 2];
        let y = VarId::y(1, 0);
        let info = InfoStructure {
            memory: vec![
                vec![BTreeSet::new(); 3],
                vec![[y].into(), [y].into(), BTreeSet::new()],
            ],
            initial_common: vec![None, None],
        };
        let report = validate(&m, &info);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Privacy { agent: 1, var, .. } if *var == y)));
    }

    #[test]
    fn common_private_new_information() {
        let (m, i) = chain(2);
        assert_eq!(
            i.common_information(&m, 0, 2).unwrap(),
            i.memory[2][0].clone()
        );
        assert!(i.private_information(&m, 0, 2).unwrap().is_empty());
        assert!(i.new_information(&m, 0, 0).unwrap().is_empty());
        let z1: Vec<_> = i.new_information(&m, 0, 1).unwrap().into_iter().collect();
        assert_eq!(z1, vec![VarId::y(0, 0), VarId::u(0, 0)]);
        assert!(matches!(
            i.common_information(&m, 3, 0),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn disjoint_memories_have_empty_common() {
        let (mut m, _) = chain(1);
        m.agents.push(Agent {
            name: "b".into(),
            subsystem: 0,
        });
        let info = InfoStructure {
            memory: vec![
                vec![BTreeSet::new(); 2],
                vec![[VarId::y(0, 0)].into(), [VarId::y(1, 0)].into()],
            ],
            initial_common: vec![None],
        };
        assert!(info.common_information(&m, 0, 1).unwrap().is_empty());
        let p: Vec<_> = info
            .private_information(&m, 1, 1)
            .unwrap()
            .into_iter()
            .collect();
        assert_eq!(p, vec![VarId::y(1, 0)]);
    }

    #[test]
    fn horizon_zero_costs_terminal() {
        let (m, i) = chain(0);
        let never = |_: usize, _: usize, _: u32, _: &[u32], _: &[u32]| -> Result<u32> {
            Err(Error::Internal("no decisions at T=0".into()))
        };
        let tr = simulate(
            &m,
            &i,
            &never,
            &Primitives {
                x0: 1,
                w: vec![],
                v: vec![vec![0]],
            },
        )
        .unwrap();
        assert_eq!(tr.cost, Cost::from_integer(5));
    }

    #[test]
    fn identity_chain_keeps_state() {
        let (m, i) = chain(2);
        let zero = |_: usize, _: usize, _: u32, _: &[u32], _: &[u32]| -> Result<u32> { Ok(0) };
        let p = Primitives {
            x0: 1,
            w: vec![0, 0],
            v: vec![vec![0]; 3],
        };
        let tr = simulate(&m, &i, &zero, &p).unwrap();
        assert_eq!(tr.states, vec![1, 1, 1]);
        assert_eq!(tr.cost, Cost::from_integer(5));
        assert_eq!(tr, simulate(&m, &i, &zero, &p).unwrap());
    }

    #[test]
    fn undefined_strategy_names_agent() {
        let (m, i) = chain(1);
        let bad = |t: usize, a: usize, _: u32, _: &[u32], _: &[u32]| -> Result<u32> {
            Err(Error::StrategyUndefined {
                agent: a,
                subsystem: 0,
                t,
            })
        };
        let p = Primitives {
            x0: 0,
            w: vec![0],
            v: vec![vec![0]; 2],
        };
        assert!(matches!(
            simulate(&m, &i, &bad, &p),
            Err(Error::StrategyUndefined { agent: 0, t: 0, .. })
        ));
    }

    #[test]
    fn perfect_recall_violation_is_reported() {
        let (m, mut i) = chain(2);
        i.memory[2][0].remove(&VarId::y(0, 0));
        let r = validate(&m, &i);
        assert!(r
            .violations
            .iter()
            .any(|v| matches!(v, Violation::PerfectRecall { t: 1, .. })));
    }
}
