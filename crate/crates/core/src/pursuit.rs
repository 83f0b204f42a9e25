//! Two agents on a line trying to surround a moving target.
//!
//! Agent 1 (the better informed subsystem) sees a noisy target position
//! `clip(X⁰ + V)` with `V ∈ {-1, 0}`. Agent 2 measures the target exactly
//! and passes the measurement to agent 1 one step later. Agent 1 cannot
//! transmit to agent 2. Both agents know where each agent stands.
//!
//! [`TargetView::Delayed`] gives each agent exactly the listed information
//! sets: at time `t` both know `X⁰_{0:t-1}` and agent 2 decides on common
//! information alone. [`TargetView::Immediate`] lets agent 2 act on its
//! current measurement `X⁰_t` as well. Memory is the same in both:
//!
//! * agent 1 remembers `Y¹, Y², U¹, U²` of all past steps;
//! * agent 2 remembers `Y², U²` of all past steps.

use std::collections::BTreeSet;

use crate::dp::{self, SolveOptions};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{Agent, Cost, FiniteSpace, InfoStructure, SpaceId, SystemModel, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PursuitParams {
    /// Grid size `Λ`; positions are `1..=Λ`.
    pub lambda: u32,
    pub horizon: usize,
    /// Penalty `D` for failing to surround.
    pub penalty: i64,
    pub x1: u32,
    pub x2: u32,
    /// Initial common target observation.
    pub y0: u32,
    pub view: TargetView,
}

/// When agent 2's target measurement can drive its own action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TargetView {
    /// One step late, together with agent 1. The state carries the previous
    /// target position.
    #[default]
    Delayed,
    /// At the time it is taken.
    Immediate,
}

impl TargetView {
    pub fn name(self) -> &'static str {
        match self {
            TargetView::Delayed => "delayed",
            TargetView::Immediate => "immediate",
        }
    }
}

impl PursuitParams {
    /// The benchmark grid: `Λ = 8`, `T = 3`, `D = 10`.
    pub fn table1(x1: u32, x2: u32, y0: u32) -> Self {
        PursuitParams {
            lambda: 8,
            horizon: 3,
            penalty: 10,
            x1,
            x2,
            y0,
            view: TargetView::Delayed,
        }
    }

    pub fn check(&self) -> Result<()> {
        let l = self.lambda;
        if l < 2 {
            return Err(Error::Params(format!(
                "grid size must be at least 2, got {l}"
            )));
        }
        if l > 64 {
            return Err(Error::Params(format!("grid size {l} exceeds 64")));
        }
        if self.penalty <= 0 {
            return Err(Error::Params("failure penalty must be positive".into()));
        }
        for (name, v) in [("x1", self.x1), ("x2", self.x2), ("y0", self.y0)] {
            if !(1..=l).contains(&v) {
                return Err(Error::Params(format!("{name} = {v} is outside 1..={l}")));
            }
        }
        Ok(())
    }

    /// Target positions admitted by the initial observation.
    pub fn initial_targets(&self) -> Vec<u32> {
        (self.y0.saturating_sub(1).max(1)..=(self.y0 + 1).min(self.lambda)).collect()
    }
}

/// When the agents count as surrounding the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Surround {
    /// `min(x¹, x²) ≤ x⁰ ≤ max(x¹, x²)`
    Inclusive,
    /// `min(x¹, x²) < x⁰ < max(x¹, x²)`
    Exclusive,
}

impl Surround {
    pub fn name(self) -> &'static str {
        match self {
            Surround::Inclusive => "inclusive",
            Surround::Exclusive => "exclusive",
        }
    }
}

pub fn surround_indicator(x0: u32, x1: u32, x2: u32, rule: Surround) -> bool {
    let (lo, hi) = (x1.min(x2), x1.max(x2));
    match rule {
        Surround::Inclusive => lo <= x0 && x0 <= hi,
        Surround::Exclusive => lo < x0 && x0 < hi,
    }
}

fn clip(v: i64, l: u32) -> u32 {
    v.clamp(1, l as i64) as u32
}

/// Terminal cost `|x⁰ - x¹| + |x⁰ - x²| + D (1 - I^s)`.
pub fn terminal_cost(p: &PursuitParams, x0: u32, x1: u32, x2: u32, rule: Surround) -> i64 {
    let d = (x0 as i64 - x1 as i64).abs() + (x0 as i64 - x2 as i64).abs();
    if surround_indicator(x0, x1, x2, rule) {
        d
    } else {
        d + p.penalty
    }
}

/// State index of positions `(x⁰, x¹, x²)` with previous target position
/// `prev` (`0` before the first step, ignored under
/// [`TargetView::Immediate`]).
pub fn state_index(p: &PursuitParams, x0: u32, prev: u32, x1: u32, x2: u32) -> u32 {
    let lay = Layout {
        lambda: p.lambda,
        view: p.view,
    };
    let prev = if p.view == TargetView::Delayed {
        prev
    } else {
        0
    };
    lay.index(Pos { x0, prev, x1, x2 })
}

/// Decoded state: positions and, under [`TargetView::Delayed`], the
/// previous target position (`0` before the first step).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    x0: u32,
    prev: u32,
    x1: u32,
    x2: u32,
}

struct Layout {
    lambda: u32,
    view: TargetView,
}

impl Layout {
    fn prevs(&self) -> u32 {
        match self.view {
            TargetView::Delayed => self.lambda + 1,
            TargetView::Immediate => 1,
        }
    }

    fn len(&self) -> u32 {
        self.lambda.pow(3) * self.prevs()
    }

    fn index(&self, p: Pos) -> u32 {
        let l = self.lambda;
        (((p.x0 - 1) * self.prevs() + p.prev) * l + p.x1 - 1) * l + p.x2 - 1
    }

    fn decode(&self, i: u32) -> Pos {
        let l = self.lambda;
        let x2 = i % l + 1;
        let x1 = (i / l) % l + 1;
        let r = i / (l * l);
        Pos {
            x0: r / self.prevs() + 1,
            prev: r % self.prevs(),
            x1,
            x2,
        }
    }

    fn token(&self, p: Pos) -> String {
        match self.view {
            TargetView::Delayed => format!("{}.{}.{}.{}", p.x0, p.prev, p.x1, p.x2),
            TargetView::Immediate => format!("{}.{}.{}", p.x0, p.x1, p.x2),
        }
    }
}

pub fn build(p: &PursuitParams, rule: Surround) -> Result<(SystemModel, InfoStructure)> {
    p.check()?;
    let l = p.lambda;
    let t_max = p.horizon;
    let lay = Layout {
        lambda: l,
        view: p.view,
    };
    let n = lay.len();
    let delayed = p.view == TargetView::Delayed;
    let moves: Vec<String> = ["-1", "0", "1"].iter().map(|s| s.to_string()).collect();
    // Y¹ = (noisy target, previous target), Y² = (target or previous target, x¹)
    let y1_tokens: Vec<String> = (1..=l)
        .flat_map(|y| (0..lay.prevs()).map(move |q| (y, q)))
        .map(|(y, q)| {
            if delayed {
                format!("{y}.{q}")
            } else {
                y.to_string()
            }
        })
        .collect();
    let y2_first = if delayed { 0..=l } else { 1..=l };
    let y2_tokens: Vec<String> = y2_first
        .flat_map(|a| (1..=l).map(move |b| format!("{a}.{b}")))
        .collect();
    let spaces = vec![
        FiniteSpace::new(
            "positions",
            (0..n).map(|i| lay.token(lay.decode(i))).collect(),
        )?,
        FiniteSpace::new("move", moves.clone())?,
        FiniteSpace::new("drift", moves)?,
        FiniteSpace::new("noise", vec!["-1".into(), "0".into()])?,
        FiniteSpace::new("exact", vec!["0".into()])?,
        FiniteSpace::new("target.seen1", y1_tokens)?,
        FiniteSpace::new("target.seen2", y2_tokens)?,
    ];
    let (s_x, s_u, s_w, s_v1, s_v2, s_y1, s_y2) = (
        SpaceId(0),
        SpaceId(1),
        SpaceId(2),
        SpaceId(3),
        SpaceId(4),
        SpaceId(5),
        SpaceId(6),
    );

    // index ((x * 9 + u1 * 3 + u2) * 3 + w)
    let mut step = Vec::with_capacity(n as usize * 27);
    let mut obs1 = Vec::with_capacity(n as usize * 2);
    let mut obs2 = Vec::with_capacity(n as usize);
    let mut terminal = Vec::with_capacity(n as usize);
    for i in 0..n {
        let s = lay.decode(i);
        for u1 in -1i64..=1 {
            for u2 in -1i64..=1 {
                for w in -1i64..=1 {
                    step.push(lay.index(Pos {
                        x0: clip(s.x0 as i64 + w, l),
                        prev: if delayed { s.x0 } else { 0 },
                        x1: clip(s.x1 as i64 + u1, l),
                        x2: clip(s.x2 as i64 + u2, l),
                    }));
                }
            }
        }
        for v in [-1i64, 0] {
            obs1.push((clip(s.x0 as i64 + v, l) - 1) * lay.prevs() + s.prev);
        }
        let seen = if delayed { s.prev } else { s.x0 - 1 };
        obs2.push(seen * l + s.x1 - 1);
        terminal.push(Some(Cost::from_integer(terminal_cost(
            p, s.x0, s.x1, s.x2, rule,
        ))));
    }
    let start = |x0: u32| {
        lay.index(Pos {
            x0,
            prev: 0,
            x1: p.x1,
            x2: p.x2,
        })
    };
    let model = SystemModel {
        horizon: t_max,
        agents: vec![
            Agent {
                name: "agent1".into(),
                subsystem: 0,
            },
            Agent {
                name: "agent2".into(),
                subsystem: 1,
            },
        ],
        num_subsystems: 2,
        spaces,
        state_spaces: vec![s_x; t_max + 1],
        initial_states: (1..=l).map(start).collect(),
        action_spaces: vec![vec![s_u, s_u]; t_max],
        disturbance_spaces: vec![s_w; t_max],
        noise_spaces: vec![vec![s_v1, s_v2]; t_max + 1],
        obs_spaces: vec![vec![s_y1, s_y2]; t_max + 1],
        dynamics: vec![step; t_max],
        observation: vec![vec![obs1, obs2]; t_max + 1],
        terminal_cost: terminal,
        stage_costs: None,
    };
    let mut memory = vec![vec![BTreeSet::new(); 2]; t_max + 1];
    for t in 1..=t_max {
        for s in 0..t {
            memory[t][0].extend([
                VarId::y(0, s),
                VarId::y(1, s),
                VarId::u(0, s),
                VarId::u(1, s),
            ]);
            memory[t][1].extend([VarId::y(1, s), VarId::u(1, s)]);
        }
    }
    let start: BTreeSet<u32> = p.initial_targets().into_iter().map(start).collect();
    let info = InfoStructure {
        memory,
        initial_common: vec![Some(start.clone()), Some(start)],
    };
    Ok((model, info))
}

#[derive(Debug, Clone)]
pub struct PursuitRow {
    pub params: PursuitParams,
    pub rule: Surround,
    pub value: Cost,
    pub infostates: Vec<usize>,
    pub candidates: Vec<u64>,
}

pub fn solve(p: &PursuitParams, rule: Surround, opts: &SolveOptions) -> Result<PursuitRow> {
    let (model, info) = build(p, rule)?;
    let (_, sol) = dp::solve(&model, &info, opts)?;
    Ok(PursuitRow {
        params: *p,
        rule,
        value: sol.value,
        infostates: sol.infostate_counts(),
        candidates: sol.candidate_counts(),
    })
}

/// Benchmark initial conditions `(x¹₀, x²₀, y₀)` and their reference optimal costs.
pub const TABLE1: [((u32, u32, u32), i64); 4] = [
    ((8, 8, 2), 18),
    ((3, 6, 7), 4),
    ((3, 3, 4), 14),
    ((3, 5, 8), 4),
];

/// Solve the four benchmark rows under the inclusive reading.
pub fn table1(opts: &SolveOptions, rows: Exec) -> Result<Vec<PursuitRow>> {
    rows.try_map(&TABLE1, |&((x1, x2, y0), _)| {
        solve(
            &PursuitParams::table1(x1, x2, y0),
            Surround::Inclusive,
            opts,
        )
    })
}
