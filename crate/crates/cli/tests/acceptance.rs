//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use nmx::infostate::{
    definitional_layers, follow_history, initial_infostate, interim_set, Evolver, HashedPolicy,
    Member, Policy, StateRef,
};
use nmx::model::{all_primitives, simulate_with, worst_case_cost, MemoryLayout};
use nmx::nested::{hat_worst_case, lift_strategy, lower_strategy, HatModel};
use nmx::random::{random_instance, InstanceParams};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

const BIN: &str = env!("CARGO_BIN_EXE_nmx");

fn nmx(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("nmx runs")
}

fn fields(out: &Output) -> BTreeMap<String, String> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn table1() -> Verdict {
    let out = nmx(&["pursuit", "--table1"]);
    let f = fields(&out);
    let mut detail = Vec::new();
    for n in 1..=4 {
        let get = |k: &str| f.get(&format!("row.{n}.{k}")).cloned().unwrap_or_default();
        let line = format!(
            "row {n} ({}): expected {} got {} infostates [{}] candidates [{}]",
            get("init"),
            get("expected"),
            get("value"),
            get("infostates"),
            get("candidates")
        );
        println!("    {line}");
        detail.push(get("value"));
    }
    for (k, v) in &f {
        if k.starts_with("variant.") {
            println!("    {k}={v}");
        }
    }
    let verdict = f.get("table1").map(String::as_str);
    if out.status.code() == Some(0) && verdict == Some("MATCH") {
        Ok(format!(
            "values {} under the {} surround rule",
            detail.join("/"),
            f["surround"]
        ))
    } else {
        Err(format!("table1={verdict:?}, values {}", detail.join("/")))
    }
}

fn small_pursuit() -> Verdict {
    let starts = [
        ("1", "4", "2"),
        ("2", "2", "3"),
        ("4", "4", "1"),
        ("1", "1", "4"),
        ("3", "1", "1"),
    ];
    let mut values = Vec::new();
    for (x1, x2, y0) in starts {
        let out = nmx(&[
            "pursuit", "--lambda", "4", "--t", "2", "--x1", x1, "--x2", x2, "--y0", y0, "--oracle",
        ]);
        let f = fields(&out);
        if out.status.code() != Some(0) || f.get("agreement").map(String::as_str) != Some("PASS") {
            return Err(format!(
                "({x1},{x2},{y0}): {:?}",
                String::from_utf8_lossy(&out.stderr)
            ));
        }
        values.push(f["value"].clone());
    }
    Ok(format!(
        "{} initial conditions agree, values {}",
        starts.len(),
        values.join("/")
    ))
}

fn verify(family: &str, count: u32) -> Verdict {
    let count = count.to_string();
    let out = nmx(&[
        "verify", "--seed", "0", "--count", &count, "--family", family,
    ]);
    let f = fields(&out);
    match (out.status.code(), f.get("verdict").map(String::as_str)) {
        (Some(0), Some("PASS")) => Ok(format!("{count} {family} instances agree")),
        _ => Err(format!("failed={:?}", f.get("failed"))),
    }
}

fn random_dp() -> Verdict {
    let a = verify("default", 200)?;
    let b = verify("three-levels", 50)?;
    Ok(format!("{a}; {b}"))
}

fn split(hm: &HatModel, n: usize, t: usize, c: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    let mut pos = 0;
    for s in 1..=t {
        let k = hm.new_info_ids(s, n).len();
        out.push(c[pos..pos + k].to_vec());
        pos += k;
    }
    out
}

fn recursion() -> Verdict {
    let mut compared = 0;
    let mut three = 0;
    for params in [InstanceParams::default(), InstanceParams::three_levels()] {
        for seed in 0..100 {
            let inst = random_instance(seed, &params);
            let hm = HatModel::build(&inst.model, &inst.info).map_err(|e| e.to_string())?;
            let root = hm.num_subsystems() - 1;
            let policy = HashedPolicy { hm: &hm, seed };
            let layers = definitional_layers(&hm, &policy, root).map_err(|e| e.to_string())?;
            for (t, layer) in layers.iter().enumerate() {
                for n in 0..=root {
                    for (c, state) in &layer.states[n] {
                        let common = hm.common_from_new(n, t, &split(&hm, n, t, c));
                        let zs = (n..=root)
                            .map(|m| hm.project_new(n, m, t, &common))
                            .collect::<nmx::Result<Vec<_>>>()
                            .map_err(|e| e.to_string())?;
                        let ctx = follow_history(&hm, &policy, n, root, &zs, t)
                            .map_err(|e| e.to_string())?;
                        if &ctx[0] != state {
                            return Err(format!("seed {seed} t={t} level {}", n + 1));
                        }
                        compared += 1;
                        if root == 2 {
                            three += 1;
                        }
                    }
                }
            }
        }
    }
    if three == 0 {
        return Err("no instance with three subsystems".into());
    }
    Ok(format!(
        "{compared} states equal, {three} of them with three subsystems"
    ))
}

fn round_trip() -> Verdict {
    let mut strategies = 0;
    for seed in 0..60u64 {
        let inst = random_instance(seed, &InstanceParams::default());
        let (m, info) = (&inst.model, &inst.info);
        let hm = HatModel::build(m, info).map_err(|e| e.to_string())?;
        let layout = MemoryLayout::new(m, info).map_err(|e| e.to_string())?;
        for k in 0..2u64 {
            let g = |t: usize, agent: usize, obs: u32, private: &[u32], common: &[u32]| {
                let mut h = DefaultHasher::new();
                (seed, k, t, agent, obs, private, common).hash(&mut h);
                Ok((h.finish() % m.num_actions(t, agent) as u64) as u32)
            };
            let lifted = lift_strategy(&hm, &g).map_err(|e| e.to_string())?;
            let lowered = lower_strategy(&hm, &lifted);
            for p in all_primitives(m, info) {
                let a = simulate_with(m, info, &layout, &g, &p).map_err(|e| e.to_string())?;
                let b = simulate_with(m, info, &layout, &lowered, &p).map_err(|e| e.to_string())?;
                if a != b {
                    return Err(format!("seed {seed}: trajectories differ"));
                }
            }
            let relifted = lift_strategy(&hm, &lowered).map_err(|e| e.to_string())?;
            let same_cost = hat_worst_case(&hm, &lifted).ok() == worst_case_cost(m, info, &g).ok();
            if relifted != lifted || !same_cost {
                return Err(format!("seed {seed}: round trip differs"));
            }
            strategies += 1;
        }
    }
    Ok(format!("{strategies} strategies round-trip"))
}

fn additive() -> Verdict {
    verify("additive", 60)
}

/// Follow one realized trajectory and check every level's state against it.
fn walk(params: &InstanceParams, seed: u64, policy_seed: u64, picks: &[u32]) -> Result<(), String> {
    let inst = random_instance(seed, params);
    let hm = HatModel::build(&inst.model, &inst.info).map_err(|e| e.to_string())?;
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
    let starts = hm.initial_hats(x0s[pick.next().unwrap() as usize % x0s.len()]);
    let mut hat = starts[pick.next().unwrap() as usize % starts.len()].clone();
    let fail = |what: &str, t: usize| Err(format!("seed {seed} t={t}: {what}"));
    for t in 0..=hm.horizon() {
        for n in 0..=root {
            let truth = Member {
                hat: hat.clone(),
                nested: ctx[..n].to_vec(),
            };
            if ctx[n].is_empty() {
                return fail("empty state", t);
            }
            if !ctx[n].contains(&truth) {
                return fail("truth missing", t);
            }
            if n < root
                && !ctx[n]
                    .members()
                    .iter()
                    .all(|x| ctx[n + 1].members().iter().any(|y| y.hat == x.hat))
            {
                return fail("not nested", t);
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
                    .map_err(|e| e.to_string())?,
            );
        }
        let mut ev = Evolver::new(&hm, t, &policy);
        let mut next = Vec::new();
        for n in 0..=root {
            let z = hm.observe_unchecked(t, n, &hat, &u);
            let q = interim_set(&hm, t, &policy, &ctx[n..], &z).map_err(|e| e.to_string())?;
            if q.is_empty() || !q.iter().all(|x| ctx[n].contains(x)) {
                return fail("interim set not within the state", t);
            }
            next.push(ev.evolve(&ctx[n..], &z).map_err(|e| e.to_string())?);
        }
        let w = pick.next().unwrap() % m.num_disturbances(t) as u32;
        let v: Vec<u32> = (0..m.num_agents())
            .map(|a| pick.next().unwrap() % m.num_noise(t + 1, a) as u32)
            .collect();
        hat = hm.step_unchecked(t, &hat, &u, w, &v);
        ctx = next;
    }
    Ok(())
}

fn invariants() -> Verdict {
    let cases = 256;
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (
        0u64..10_000,
        any::<u64>(),
        prop::collection::vec(any::<u32>(), 1..24),
        prop::bool::ANY,
    );
    runner
        .run(&strategy, |(seed, policy_seed, picks, three)| {
            let params = if three {
                InstanceParams::three_levels()
            } else {
                InstanceParams::default()
            };
            walk(&params, seed, policy_seed, &picks).map_err(TestCaseError::fail)
        })
        .map_err(|e| e.to_string())?;
    Ok(format!(
        "{cases} generated trajectories: nonempty, truth kept, nested, interim within state"
    ))
}

fn same(a: &Output, b: &Output) -> bool {
    a.status.code() == b.status.code() && a.stdout == b.stdout
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let model = dir.path().join("model.txt");
    let model_s = model.to_str().unwrap();
    let export = nmx(&["export", "random", "--seed", "11", "-o", model_s]);
    let export2 = nmx(&["export", "random", "--seed", "11"]);
    let text = std::fs::read(&model).map_err(|e| e.to_string())?;
    if export.status.code() != Some(0) || export2.stdout != text {
        return Err("export differs between file and stdout".into());
    }
    let run = |jobs: &str, tag: &str| -> (Output, Vec<u8>, Vec<u8>) {
        let s = dir.path().join(format!("strategy{tag}.txt"));
        let v = dir.path().join(format!("values{tag}.txt"));
        let out = nmx(&[
            "--jobs",
            jobs,
            "solve",
            model_s,
            "--export-strategy",
            s.to_str().unwrap(),
            "--value-table",
            v.to_str().unwrap(),
        ]);
        let read = |p: &Path| std::fs::read(p).unwrap_or_default();
        (out, read(&s), read(&v))
    };
    let a = run("1", "a");
    let b = run("1", "b");
    let c = run("4", "c");
    if a.0.status.code() != Some(0) {
        return Err(String::from_utf8_lossy(&a.0.stderr).into_owned());
    }
    for other in [&b, &c] {
        if !same(&a.0, &other.0) || a.1 != other.1 || a.2 != other.2 {
            return Err("solve report or exports differ between runs".into());
        }
    }
    let args = [
        "pursuit", "--lambda", "4", "--t", "2", "--x1", "2", "--x2", "3", "--y0", "3",
    ];
    if !same(&nmx(&args), &nmx(&args)) {
        return Err("pursuit report differs between runs".into());
    }
    let args = ["verify", "--seed", "40", "--count", "10"];
    if !same(&nmx(&args), &nmx(&args)) {
        return Err("verify report differs between runs".into());
    }
    Ok("solve, pursuit, verify and export outputs are byte-identical across runs and thread counts".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 benchmark table", table1),
        ("2 small pursuit vs oracle", small_pursuit),
        ("3 dp vs oracle on random instances", random_dp),
        ("4 recursion vs direct construction", recursion),
        ("5 strategy lift/lower round trip", round_trip),
        ("6 additive costs through augmentation", additive),
        ("7 structural invariants", invariants),
        ("8 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let verdict = check();
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(msg) => println!("criterion {name}: PASS ({msg}) [{secs:.1}s]"),
            Err(msg) => {
                failed += 1;
                println!("criterion {name}: FAIL ({msg}) [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
