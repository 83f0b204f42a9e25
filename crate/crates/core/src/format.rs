//! The `nmx-model v1` text format.
//!
//! Line oriented, `#` starts a comment, tokens are whitespace separated.
//! Subsystems are numbered from 1 in the file (subsystem 1 is the best
//! informed); agents and spaces are referenced by name.
//!
//! ```text
//! nmx-model v1
//! horizon <T>
//! space <name> <tok>...
//! agent <name> subsystem <n>
//! state <t> <space>                      # t = 0..T
//! action <agent> <t> <space>             # t = 0..T-1
//! disturbance <t> <space>                # t = 0..T-1
//! noise <agent> <t> <space>              # t = 0..T
//! obs <agent> <t> <space>                # t = 0..T
//! initial <x>...
//! initial-common <n> <x>...              # optional per subsystem
//! memory <agent> <t> <id>...             # id = Y:<agent>:<s> | U:<agent>:<s>
//! dynamics <t> <x> <u>... <w> -> <x'>    # one action token per agent
//! observe <agent> <t> <x> <v> -> <y>
//! terminal <x> <cost>
//! stage <t> <x> <u>... <cost>            # optional; costs are p/q or decimals
//! end
//! ```
//!
//! Output tokens that fall outside their space are kept and reported by
//! [`crate::model::validate`]; everything else malformed is a parse error.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::model::{
    Agent, Cost, FiniteSpace, InfoStructure, SpaceId, SystemModel, VarId, VarKind, MISSING,
};

pub const HEADER: &str = "nmx-model v1";

/// Stored for output tokens that are not in their declared space.
const OUT_OF_SPACE: u32 = u32::MAX - 1;

struct Tok<'a> {
    text: &'a str,
    col: usize,
}

fn tokenize(line: &str) -> Vec<Tok<'_>> {
    let line = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Tok {
                    text: &line[s..i],
                    col: s + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Tok {
            text: &line[s..],
            col: s + 1,
        });
    }
    out
}

struct Parser {
    line: usize,
    horizon: Option<usize>,
    spaces: Vec<FiniteSpace>,
    space_names: HashMap<String, SpaceId>,
    agents: Vec<Agent>,
    agent_names: HashMap<String, usize>,
    state: Vec<Option<SpaceId>>,
    action: Vec<Vec<Option<SpaceId>>>,
    disturbance: Vec<Option<SpaceId>>,
    noise: Vec<Vec<Option<SpaceId>>>,
    obs: Vec<Vec<Option<SpaceId>>>,
    initial: Option<Vec<u32>>,
    initial_common: Vec<(usize, BTreeSet<u32>)>,
    memory: Vec<(usize, usize, BTreeSet<VarId>)>,
    tables: Option<Tables>,
}

struct Tables {
    dynamics: Vec<Vec<u32>>,
    observation: Vec<Vec<Vec<u32>>>,
    terminal: Vec<Option<Cost>>,
    stage: Option<Vec<Vec<Option<Cost>>>>,
}

fn err<T>(line: usize, col: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        line,
        column: col,
        message: message.into(),
    })
}

/// Parse a decimal or `p/q` cost.
pub fn parse_cost(s: &str) -> Option<Cost> {
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.parse().ok()?;
        let q: i64 = q.parse().ok()?;
        if q == 0 {
            return None;
        }
        return Some(Cost::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || frac.len() > 12 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let neg = int.starts_with('-');
        let i: i64 = if int == "-" || int.is_empty() {
            0
        } else {
            int.parse().ok()?
        };
        let scale = 10i64.checked_pow(frac.len() as u32)?;
        let f: i64 = frac.parse().ok()?;
        let mag = i.checked_abs()?.checked_mul(scale)?.checked_add(f)?;
        return Some(Cost::new(if neg { -mag } else { mag }, scale));
    }
    s.parse::<i64>().ok().map(Cost::from_integer)
}

/// Canonical cost rendering: integers plain, everything else `p/q`.
pub fn format_cost(c: &Cost) -> String {
    if c.denom().is_one() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl Parser {
    fn num(&self, t: &Tok) -> Result<usize> {
        t.text.parse().or_else(|_| {
            err(
                self.line,
                t.col,
                format!("expected an integer, got `{}`", t.text),
            )
        })
    }

    fn horizon(&self, t: &Tok) -> Result<usize> {
        self.horizon
            .ok_or(())
            .or_else(|_| err(self.line, t.col, "`horizon` must come first"))
    }

    fn time(&self, t: &Tok, max: usize) -> Result<usize> {
        let v = self.num(t)?;
        if v > max {
            return err(self.line, t.col, format!("time {v} out of range 0..={max}"));
        }
        Ok(v)
    }

    fn space_ref(&self, t: &Tok) -> Result<SpaceId> {
        self.space_names
            .get(t.text)
            .copied()
            .ok_or(())
            .or_else(|_| err(self.line, t.col, format!("unknown space `{}`", t.text)))
    }

    fn agent_ref(&self, t: &Tok) -> Result<usize> {
        self.agent_names
            .get(t.text)
            .copied()
            .ok_or(())
            .or_else(|_| err(self.line, t.col, format!("unknown agent `{}`", t.text)))
    }

    fn ensure_dims(&mut self) {
        let t = self.horizon.unwrap_or(0);
        let na = self.agents.len();
        for v in [&mut self.action] {
            v.resize(t, Vec::new());
            for row in v.iter_mut() {
                row.resize(na, None);
            }
        }
        for v in [&mut self.noise, &mut self.obs] {
            v.resize(t + 1, Vec::new());
            for row in v.iter_mut() {
                row.resize(na, None);
            }
        }
    }

    fn declared(&self, col: usize, what: &str, s: Option<SpaceId>) -> Result<SpaceId> {
        s.ok_or(())
            .or_else(|_| err(self.line, col, format!("{what} space not declared")))
    }

    /// Lock in all space declarations and allocate the tables.
    fn tables(&mut self, col: usize) -> Result<&mut Tables> {
        if self.tables.is_none() {
            let t_max = self.horizon.unwrap_or(0);
            let na = self.agents.len();
            let size = |s: SpaceId| self.spaces[s.0].len();
            let mut dynamics = Vec::new();
            for t in 0..t_max {
                let nx = size(self.declared(col, "state", self.state[t])?);
                let mut joint = 1;
                for a in 0..na {
                    joint *= size(self.declared(col, "action", self.action[t][a])?);
                }
                let nw = size(self.declared(col, "disturbance", self.disturbance[t])?);
                self.declared(col, "state", self.state[t + 1])?;
                dynamics.push(vec![MISSING; nx * joint * nw]);
            }
            let mut observation = Vec::new();
            for t in 0..=t_max {
                let nx = size(self.declared(col, "state", self.state[t])?);
                let mut row = Vec::new();
                for a in 0..na {
                    let nv = size(self.declared(col, "noise", self.noise[t][a])?);
                    self.declared(col, "observation", self.obs[t][a])?;
                    row.push(vec![MISSING; nx * nv]);
                }
                observation.push(row);
            }
            let terminal = vec![None; size(self.state[t_max].unwrap())];
            self.tables = Some(Tables {
                dynamics,
                observation,
                terminal,
                stage: None,
            });
        }
        Ok(self.tables.as_mut().unwrap())
    }

    fn element(&self, space: SpaceId, t: &Tok) -> Result<u32> {
        let s = &self.spaces[space.0];
        s.index_of(t.text).ok_or(()).or_else(|_| {
            err(
                self.line,
                t.col,
                format!("`{}` is not an element of space `{}`", t.text, s.name()),
            )
        })
    }

    fn output(&self, space: SpaceId, t: &Tok) -> u32 {
        self.spaces[space.0]
            .index_of(t.text)
            .unwrap_or(OUT_OF_SPACE)
    }

    fn joint(&self, t: usize, toks: &[Tok]) -> Result<usize> {
        let mut idx = 0;
        for (a, tok) in toks.iter().enumerate() {
            let s = self.action[t][a].unwrap();
            idx = idx * self.spaces[s.0].len() + self.element(s, tok)? as usize;
        }
        Ok(idx)
    }

    fn var_id(&self, t: &Tok) -> Result<VarId> {
        let parts: Vec<&str> = t.text.split(':').collect();
        if parts.len() != 3 {
            return err(
                self.line,
                t.col,
                format!("malformed identifier `{}`", t.text),
            );
        }
        let kind = match parts[0] {
            "Y" => VarKind::Y,
            "U" => VarKind::U,
            _ => {
                return err(
                    self.line,
                    t.col,
                    format!("unknown variable kind in `{}`", t.text),
                )
            }
        };
        let agent = self
            .agent_names
            .get(parts[1])
            .copied()
            .ok_or(())
            .or_else(|_| err(self.line, t.col, format!("unknown agent in `{}`", t.text)))?;
        let time = parts[2]
            .parse()
            .or_else(|_| err(self.line, t.col, format!("bad time in `{}`", t.text)))?;
        Ok(VarId { time, kind, agent })
    }

    fn directive(&mut self, toks: &[Tok]) -> Result<bool> {
        let head = &toks[0];
        let line = self.line;
        let arity = |n: usize| -> Result<()> {
            if toks.len() != n {
                return err(
                    line,
                    head.col,
                    format!("`{}` takes {} arguments", head.text, n - 1),
                );
            }
            Ok(())
        };
        let locked = |p: &Parser| -> Result<()> {
            if p.tables.is_some() {
                return err(
                    line,
                    head.col,
                    format!("`{}` must precede table entries", head.text),
                );
            }
            Ok(())
        };
        match head.text {
            "horizon" => {
                arity(2)?;
                if self.horizon.is_some() {
                    return err(line, head.col, "duplicate `horizon`");
                }
                let t = self.num(&toks[1])?;
                self.horizon = Some(t);
                self.state = vec![None; t + 1];
                self.disturbance = vec![None; t];
                self.ensure_dims();
            }
            "space" => {
                locked(self)?;
                if toks.len() < 3 {
                    return err(
                        line,
                        head.col,
                        "`space` needs a name and at least one element",
                    );
                }
                let name = toks[1].text.to_string();
                if self.space_names.contains_key(&name) {
                    return err(line, toks[1].col, format!("duplicate space `{name}`"));
                }
                let elems = toks[2..].iter().map(|t| t.text.to_string()).collect();
                let space = FiniteSpace::new(name.clone(), elems)
                    .or_else(|e| err(line, toks[2].col, e.to_string()))?;
                self.space_names.insert(name, SpaceId(self.spaces.len()));
                self.spaces.push(space);
            }
            "agent" => {
                locked(self)?;
                self.horizon(head)?;
                arity(4)?;
                if toks[2].text != "subsystem" {
                    return err(line, toks[2].col, "expected `subsystem`");
                }
                let name = toks[1].text.to_string();
                if self.agent_names.contains_key(&name) || name.contains(':') {
                    return err(
                        line,
                        toks[1].col,
                        format!("bad or duplicate agent `{name}`"),
                    );
                }
                let n = self.num(&toks[3])?;
                if n == 0 {
                    return err(line, toks[3].col, "subsystems are numbered from 1");
                }
                self.agent_names.insert(name.clone(), self.agents.len());
                self.agents.push(Agent {
                    name,
                    subsystem: n - 1,
                });
                self.ensure_dims();
            }
            "state" | "disturbance" => {
                locked(self)?;
                arity(3)?;
                let t_max = self.horizon(head)?;
                let is_state = head.text == "state";
                let t = self.time(
                    &toks[1],
                    if is_state {
                        t_max
                    } else {
                        t_max.wrapping_sub(1)
                    },
                )?;
                let s = self.space_ref(&toks[2])?;
                let slot = if is_state {
                    &mut self.state[t]
                } else {
                    &mut self.disturbance[t]
                };
                if slot.replace(s).is_some() {
                    return err(
                        line,
                        head.col,
                        format!("duplicate `{}` for t={t}", head.text),
                    );
                }
            }
            "action" | "noise" | "obs" => {
                locked(self)?;
                arity(4)?;
                let t_max = self.horizon(head)?;
                let a = self.agent_ref(&toks[1])?;
                let max = if head.text == "action" {
                    if t_max == 0 {
                        return err(line, head.col, "no actions when the horizon is 0");
                    }
                    t_max - 1
                } else {
                    t_max
                };
                let t = self.time(&toks[2], max)?;
                let s = self.space_ref(&toks[3])?;
                let slot = match head.text {
                    "action" => &mut self.action[t][a],
                    "noise" => &mut self.noise[t][a],
                    _ => &mut self.obs[t][a],
                };
                if slot.replace(s).is_some() {
                    return err(
                        line,
                        head.col,
                        format!("duplicate `{}` for t={t}", head.text),
                    );
                }
            }
            "initial" => {
                self.horizon(head)?;
                let s = self.declared(head.col, "state", self.state[0])?;
                if self.initial.is_some() {
                    return err(line, head.col, "duplicate `initial`");
                }
                let mut v = Vec::new();
                for t in &toks[1..] {
                    v.push(self.element(s, t)?);
                }
                v.sort_unstable();
                v.dedup();
                self.initial = Some(v);
            }
            "initial-common" => {
                self.horizon(head)?;
                if toks.len() < 2 {
                    return err(line, head.col, "`initial-common` needs a subsystem");
                }
                let n = self.num(&toks[1])?;
                if n == 0 {
                    return err(line, toks[1].col, "subsystems are numbered from 1");
                }
                let s = self.declared(head.col, "state", self.state[0])?;
                let mut set = BTreeSet::new();
                for t in &toks[2..] {
                    set.insert(self.element(s, t)?);
                }
                if self.initial_common.iter().any(|(m, _)| *m == n - 1) {
                    return err(line, head.col, "duplicate `initial-common`");
                }
                self.initial_common.push((n - 1, set));
            }
            "memory" => {
                let t_max = self.horizon(head)?;
                if toks.len() < 3 {
                    return err(line, head.col, "`memory` needs an agent and a time");
                }
                let a = self.agent_ref(&toks[1])?;
                let t = self.time(&toks[2], t_max)?;
                if self.memory.iter().any(|(b, s, _)| *b == a && *s == t) {
                    return err(line, head.col, "duplicate `memory` line");
                }
                let mut ids = BTreeSet::new();
                for tok in &toks[3..] {
                    ids.insert(self.var_id(tok)?);
                }
                self.memory.push((a, t, ids));
            }
            "dynamics" => {
                let t_max = self.horizon(head)?;
                let na = self.agents.len();
                if toks.len() != na + 6 || toks[na + 4].text != "->" {
                    return err(
                        line,
                        head.col,
                        format!("`dynamics` takes t x u*{na} w -> x'"),
                    );
                }
                let t = self.time(&toks[1], t_max.wrapping_sub(1))?;
                self.tables(head.col)?;
                let sx = self.state[t].unwrap();
                let x = self.element(sx, &toks[2])? as usize;
                let u = self.joint(t, &toks[3..3 + na])?;
                let sw = self.disturbance[t].unwrap();
                let w = self.element(sw, &toks[3 + na])? as usize;
                let y = self.output(self.state[t + 1].unwrap(), &toks[na + 5]);
                let nw = self.spaces[sw.0].len();
                let joint = self.tables.as_ref().unwrap().dynamics[t].len()
                    / (self.spaces[sx.0].len() * nw);
                let cell = &mut self.tables.as_mut().unwrap().dynamics[t][(x * joint + u) * nw + w];
                if *cell != MISSING {
                    return err(line, head.col, "duplicate dynamics entry");
                }
                *cell = y;
            }
            "observe" => {
                arity(7)?;
                let t_max = self.horizon(head)?;
                if toks[5].text != "->" {
                    return err(line, toks[5].col, "expected `->`");
                }
                let a = self.agent_ref(&toks[1])?;
                let t = self.time(&toks[2], t_max)?;
                self.tables(head.col)?;
                let x = self.element(self.state[t].unwrap(), &toks[3])? as usize;
                let sv = self.noise[t][a].unwrap();
                let v = self.element(sv, &toks[4])? as usize;
                let y = self.output(self.obs[t][a].unwrap(), &toks[6]);
                let nv = self.spaces[sv.0].len();
                let cell = &mut self.tables.as_mut().unwrap().observation[t][a][x * nv + v];
                if *cell != MISSING {
                    return err(line, head.col, "duplicate observation entry");
                }
                *cell = y;
            }
            "terminal" => {
                arity(3)?;
                let t_max = self.horizon(head)?;
                self.tables(head.col)?;
                let x = self.element(self.state[t_max].unwrap(), &toks[1])? as usize;
                let c = parse_cost(toks[2].text)
                    .ok_or(())
                    .or_else(|_| err(line, toks[2].col, "bad cost"))?;
                let cell = &mut self.tables.as_mut().unwrap().terminal[x];
                if cell.replace(c).is_some() {
                    return err(line, head.col, "duplicate terminal entry");
                }
            }
            "stage" => {
                let t_max = self.horizon(head)?;
                let na = self.agents.len();
                if toks.len() != na + 4 {
                    return err(line, head.col, format!("`stage` takes t x u*{na} cost"));
                }
                let t = self.time(&toks[1], t_max.wrapping_sub(1))?;
                self.tables(head.col)?;
                let sx = self.state[t].unwrap();
                let x = self.element(sx, &toks[2])? as usize;
                let u = self.joint(t, &toks[3..3 + na])?;
                let c = parse_cost(toks[3 + na].text)
                    .ok_or(())
                    .or_else(|_| err(line, toks[3 + na].col, "bad cost"))?;
                let nx = self.spaces[sx.0].len();
                let sizes: Vec<usize> = (0..t_max)
                    .map(|s| {
                        let joint: usize = (0..na)
                            .map(|a| self.spaces[self.action[s][a].unwrap().0].len())
                            .product();
                        self.spaces[self.state[s].unwrap().0].len() * joint
                    })
                    .collect();
                let tables = self.tables.as_mut().unwrap();
                let stage = tables
                    .stage
                    .get_or_insert_with(|| sizes.iter().map(|&n| vec![None; n]).collect());
                let joint = stage[t].len() / nx;
                let cell = &mut stage[t][x * joint + u];
                if cell.replace(c).is_some() {
                    return err(line, head.col, "duplicate stage entry");
                }
            }
            "end" => {
                arity(1)?;
                return Ok(true);
            }
            other => return err(line, head.col, format!("unknown directive `{other}`")),
        }
        Ok(false)
    }

    fn finish(mut self) -> Result<(SystemModel, InfoStructure)> {
        let line = self.line;
        let t_max = match self.horizon {
            Some(t) => t,
            None => return err(line, 1, "missing `horizon`"),
        };
        if self.agents.is_empty() {
            return err(line, 1, "no agents declared");
        }
        self.tables(1)?;
        let num_subsystems = self.agents.iter().map(|a| a.subsystem).max().unwrap() + 1;
        let initial_states = match self.initial.take() {
            Some(v) => v,
            None => return err(line, 1, "missing `initial`"),
        };
        let mut memory = vec![vec![BTreeSet::new(); self.agents.len()]; t_max + 1];
        for (a, t, ids) in self.memory.drain(..) {
            memory[t][a] = ids;
        }
        let mut initial_common = vec![None; num_subsystems];
        for (n, set) in self.initial_common.drain(..) {
            if n >= num_subsystems {
                return err(
                    line,
                    1,
                    format!("`initial-common` for unknown subsystem {}", n + 1),
                );
            }
            initial_common[n] = Some(set);
        }
        let tables = self.tables.take().unwrap();
        let model = SystemModel {
            horizon: t_max,
            agents: self.agents,
            num_subsystems,
            spaces: self.spaces,
            state_spaces: self.state.into_iter().map(Option::unwrap).collect(),
            initial_states,
            action_spaces: self
                .action
                .into_iter()
                .map(|r| r.into_iter().map(Option::unwrap).collect())
                .collect(),
            disturbance_spaces: self.disturbance.into_iter().map(Option::unwrap).collect(),
            noise_spaces: self
                .noise
                .into_iter()
                .map(|r| r.into_iter().map(Option::unwrap).collect())
                .collect(),
            obs_spaces: self
                .obs
                .into_iter()
                .map(|r| r.into_iter().map(Option::unwrap).collect())
                .collect(),
            dynamics: tables.dynamics,
            observation: tables.observation,
            terminal_cost: tables.terminal,
            stage_costs: tables.stage,
        };
        Ok((
            model,
            InfoStructure {
                memory,
                initial_common,
            },
        ))
    }
}

/// Parse a model file. Structural problems that are representable (missing
/// or out-of-space table entries, bad information structures) are left for
/// [`crate::model::validate`].
pub fn parse(text: &str) -> Result<(SystemModel, InfoStructure)> {
    let mut p = Parser {
        line: 0,
        horizon: None,
        spaces: Vec::new(),
        space_names: HashMap::new(),
        agents: Vec::new(),
        agent_names: HashMap::new(),
        state: Vec::new(),
        action: Vec::new(),
        disturbance: Vec::new(),
        noise: Vec::new(),
        obs: Vec::new(),
        initial: None,
        initial_common: Vec::new(),
        memory: Vec::new(),
        tables: None,
    };
    let mut header = false;
    let mut ended = false;
    for (i, raw) in text.lines().enumerate() {
        p.line = i + 1;
        let toks = tokenize(raw);
        if toks.is_empty() {
            continue;
        }
        if ended {
            return err(p.line, toks[0].col, "content after `end`");
        }
        if !header {
            if raw.trim() != HEADER {
                return err(p.line, 1, format!("expected header `{HEADER}`"));
            }
            header = true;
            continue;
        }
        ended = p.directive(&toks)?;
    }
    if !header {
        return err(1, 1, format!("expected header `{HEADER}`"));
    }
    if !ended {
        return err(p.line + 1, 1, "missing `end`");
    }
    p.finish()
}

fn id_token(model: &SystemModel, v: &VarId) -> String {
    let k = match v.kind {
        VarKind::Y => "Y",
        VarKind::U => "U",
    };
    format!("{k}:{}:{}", model.agents[v.agent].name, v.time)
}

/// Canonical rendering; `parse(serialize(m, i)) == (m, i)` for every model
/// this module can parse whose table entries are all inside their spaces.
pub fn serialize(model: &SystemModel, info: &InfoStructure) -> String {
    let mut s = String::new();
    let t_max = model.horizon;
    let na = model.num_agents();
    let _ = writeln!(s, "{HEADER}");
    let _ = writeln!(s, "horizon {t_max}");
    for sp in &model.spaces {
        let _ = writeln!(s, "space {} {}", sp.name(), sp.elements().join(" "));
    }
    for a in &model.agents {
        let _ = writeln!(s, "agent {} subsystem {}", a.name, a.subsystem + 1);
    }
    let name = |id: SpaceId| model.space(id).name().to_string();
    for t in 0..=t_max {
        let _ = writeln!(s, "state {t} {}", name(model.state_spaces[t]));
    }
    for t in 0..t_max {
        let _ = writeln!(s, "disturbance {t} {}", name(model.disturbance_spaces[t]));
        for a in 0..na {
            let _ = writeln!(
                s,
                "action {} {t} {}",
                model.agents[a].name,
                name(model.action_spaces[t][a])
            );
        }
    }
    for t in 0..=t_max {
        for a in 0..na {
            let _ = writeln!(
                s,
                "noise {} {t} {}",
                model.agents[a].name,
                name(model.noise_spaces[t][a])
            );
            let _ = writeln!(
                s,
                "obs {} {t} {}",
                model.agents[a].name,
                name(model.obs_spaces[t][a])
            );
        }
    }
    let x0 = model.space(model.state_spaces[0]);
    let toks: Vec<&str> = model.initial_states.iter().map(|&x| x0.token(x)).collect();
    let _ = writeln!(s, "initial {}", toks.join(" "));
    for (n, c) in info.initial_common.iter().enumerate() {
        if let Some(set) = c {
            let mut line = format!("initial-common {}", n + 1);
            for &x in set {
                line.push(' ');
                line.push_str(x0.token(x));
            }
            let _ = writeln!(s, "{line}");
        }
    }
    for t in 0..=t_max {
        for a in 0..na {
            let mut line = format!("memory {} {t}", model.agents[a].name);
            for v in &info.memory[t][a] {
                line.push(' ');
                line.push_str(&id_token(model, v));
            }
            let _ = writeln!(s, "{line}");
        }
    }
    for t in 0..t_max {
        let sx = model.space(model.state_spaces[t]);
        let sn = model.space(model.state_spaces[t + 1]);
        let sw = model.space(model.disturbance_spaces[t]);
        let joint = model.joint_actions(t);
        for x in 0..sx.len() {
            for j in 0..joint {
                let u = model.joint_decode(t, j);
                let us: Vec<&str> = u
                    .iter()
                    .enumerate()
                    .map(|(a, &ua)| model.space(model.action_spaces[t][a]).token(ua))
                    .collect();
                for w in 0..sw.len() {
                    let y = model.dynamics[t][(x * joint + j) * sw.len() + w];
                    if y == MISSING || y as usize >= sn.len() {
                        continue;
                    }
                    let _ = writeln!(
                        s,
                        "dynamics {t} {} {} {} -> {}",
                        sx.token(x as u32),
                        us.join(" "),
                        sw.token(w as u32),
                        sn.token(y)
                    );
                }
            }
        }
    }
    for t in 0..=t_max {
        let sx = model.space(model.state_spaces[t]);
        for a in 0..na {
            let sv = model.space(model.noise_spaces[t][a]);
            let sy = model.space(model.obs_spaces[t][a]);
            for x in 0..sx.len() {
                for v in 0..sv.len() {
                    let y = model.observation[t][a][x * sv.len() + v];
                    if y == MISSING || y as usize >= sy.len() {
                        continue;
                    }
                    let _ = writeln!(
                        s,
                        "observe {} {t} {} {} -> {}",
                        model.agents[a].name,
                        sx.token(x as u32),
                        sv.token(v as u32),
                        sy.token(y)
                    );
                }
            }
        }
    }
    let sx = model.space(model.state_spaces[t_max]);
    for (x, c) in model.terminal_cost.iter().enumerate() {
        if let Some(c) = c {
            let _ = writeln!(s, "terminal {} {}", sx.token(x as u32), format_cost(c));
        }
    }
    if let Some(stage) = &model.stage_costs {
        for (t, table) in stage.iter().enumerate() {
            let sx = model.space(model.state_spaces[t]);
            let joint = model.joint_actions(t);
            for (i, c) in table.iter().enumerate() {
                let Some(c) = c else { continue };
                let u = model.joint_decode(t, i % joint);
                let us: Vec<&str> = u
                    .iter()
                    .enumerate()
                    .map(|(a, &ua)| model.space(model.action_spaces[t][a]).token(ua))
                    .collect();
                let _ = writeln!(
                    s,
                    "stage {t} {} {} {}",
                    sx.token((i / joint) as u32),
                    us.join(" "),
                    format_cost(c)
                );
            }
        }
    }
    let _ = writeln!(s, "end");
    s
}

/// Decimal rendering of a cost with up to `digits` fractional digits.
pub fn decimal(c: &Cost, digits: usize) -> String {
    let neg = *c < Cost::zero();
    let c = if neg { -*c } else { *c };
    let int = c.numer() / c.denom();
    let mut rem = c.numer() % c.denom();
    let mut s = format!("{}{}", if neg { "-" } else { "" }, int);
    if digits > 0 {
        s.push('.');
        for _ in 0..digits {
            rem *= 10;
            s.push(char::from(b'0' + (rem / c.denom()) as u8));
            rem %= c.denom();
        }
    }
    s
}
