use std::path::Path;
use std::time::Instant;

use nmx::costs::to_terminal;
use nmx::dp::{self, Solution, SolveOptions, TIE_BREAK_RULE};
use nmx::format::{format_cost, parse, serialize};
use nmx::nested::HatModel;
use nmx::oracle::{brute_force_minimax, TableStrategy};
use nmx::pursuit::{self, PursuitParams, Surround, TargetView, TABLE1};
use nmx::random::{random_instance, GENERATOR_VERSION};
use nmx::{Cost, Error, InfoStructure, SystemModel};

use crate::report::{sha256_hex, Report};
use crate::{exit, Caps, Cli, Command, ExportWhat, Outputs, PursuitArgs, SolveArgs, VerifyArgs};

pub struct Outcome {
    pub report: String,
    pub code: u8,
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse { .. } => exit::PARSE,
            Error::Invalid(_)
            | Error::OutOfRange { .. }
            | Error::Construction(_)
            | Error::InconsistentInitial => exit::INVALID,
            Error::Resource { .. } => exit::RESOURCE,
            Error::Params(_) => exit::USAGE,
            Error::StrategyUndefined { .. } | Error::InfeasibleObservation | Error::Internal(_) => {
                exit::INTERNAL
            }
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: exit::USAGE,
        message: message.into(),
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: exit::PARSE,
        message: format!("{}: {e}", path.display()),
    }
}

pub fn run(cli: &Cli) -> Res<Outcome> {
    match &cli.command {
        Command::Solve(a) => solve(a, &cli.caps),
        Command::Verify(a) => verify(a, &cli.caps),
        Command::Pursuit(a) => run_pursuit(a, &cli.caps),
        Command::Export { what } => export(what),
    }
}

fn options(caps: &Caps) -> SolveOptions {
    SolveOptions {
        max_infostates: caps.max_infostates,
        max_candidates: caps.max_candidates,
        ..SolveOptions::default()
    }
}

/// A solved model: the dynamic program runs on the terminal-cost form.
struct Solved {
    hm: HatModel,
    solution: Solution,
}

fn solve_model(m: &SystemModel, i: &InfoStructure, caps: &Caps) -> Res<Solved> {
    let opts = options(caps);
    let (hm, solution) = if m.has_stage_costs() {
        let aug = to_terminal(m, i, caps.max_infostates)?;
        dp::solve(&aug.model, &aug.info, &opts)?
    } else {
        dp::solve(m, i, &opts)?
    };
    Ok(Solved { hm, solution })
}

fn put_solution(r: &mut Report, prefix: &str, sol: &Solution) {
    r.cost(&format!("{prefix}value"), &sol.value);
    let t_max = sol.layers.len() - 1;
    r.list(
        &format!("{prefix}infostates"),
        &sol.infostate_counts()[..t_max],
    );
    r.list(
        &format!("{prefix}candidates"),
        &sol.candidate_counts()[..t_max],
    );
}

fn write_outputs(r: &mut Report, out: &Outputs, sol: &Solution) -> Res<()> {
    let strategy = dp::export_strategy(sol);
    r.put(
        "strategy_digest",
        format!("sha256:{}", sha256_hex(strategy.as_bytes())),
    );
    if let Some(p) = &out.export_strategy {
        std::fs::write(p, &strategy).map_err(|e| io_error(p, e))?;
    }
    if let Some(p) = &out.value_table {
        let values = dp::export_values(sol);
        r.put(
            "values_digest",
            format!("sha256:{}", sha256_hex(values.as_bytes())),
        );
        std::fs::write(p, values).map_err(|e| io_error(p, e))?;
    }
    Ok(())
}

fn put_shape(r: &mut Report, m: &SystemModel) {
    r.put("horizon", m.horizon);
    r.put("subsystems", m.num_subsystems);
    r.put("agents", m.num_agents());
    r.put(
        "cost_form",
        if m.has_stage_costs() {
            "additive"
        } else {
            "terminal"
        },
    );
}

fn solve(a: &SolveArgs, caps: &Caps) -> Res<Outcome> {
    let bytes = std::fs::read(&a.model).map_err(|e| io_error(&a.model, e))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| Failure {
        code: exit::PARSE,
        message: format!("{}: not valid UTF-8", a.model.display()),
    })?;
    let (m, i) = parse(&text)?;
    let solved = solve_model(&m, &i, caps)?;
    let mut r = Report::new("solve");
    r.put("instance_digest", format!("sha256:{}", sha256_hex(&bytes)));
    put_shape(&mut r, &m);
    r.put("tie_break", TIE_BREAK_RULE);
    put_solution(&mut r, "", &solved.solution);
    write_outputs(&mut r, &a.out, &solved.solution)?;
    Ok(Outcome {
        report: r.render(),
        code: exit::OK,
    })
}

/// One checked instance.
struct Check {
    claimed: Cost,
    oracle: Cost,
    strategy: Cost,
    oracle_strategy: TableStrategy,
    searched: u64,
}

impl Check {
    fn pass(&self) -> bool {
        self.claimed == self.oracle && self.strategy == self.claimed
    }
}

fn check(m: &SystemModel, i: &InfoStructure, caps: &Caps, corrupt: i64) -> Res<Check> {
    let solved = solve_model(m, i, caps)?;
    let oracle = brute_force_minimax(m, i, caps.oracle_cap).map_err(|e| match e {
        Error::Resource { .. } => Failure {
            code: exit::RESOURCE,
            message: format!("oracle refused: {e}"),
        },
        e => e.into(),
    })?;
    let laws = dp::extract_agent_strategies(&solved.hm, &solved.solution);
    let strategy = dp::evaluate_strategy(m, i, &laws)?;
    Ok(Check {
        claimed: solved.solution.value + Cost::from_integer(corrupt),
        oracle: oracle.value,
        strategy,
        oracle_strategy: oracle.strategy,
        searched: oracle.searched,
    })
}

/// The strategy that refutes a failed comparison, with its worst-case cost.
fn put_witness(r: &mut Report, m: &SystemModel, i: &InfoStructure, c: &Check) -> Res<()> {
    if c.oracle < c.claimed {
        r.put("witness.source", "oracle");
        let worst = nmx::model::worst_case_cost(m, i, &c.oracle_strategy)?;
        r.cost("witness.worst_case", &worst);
        for (n, ((t, agent, obs, mem), u)) in c.oracle_strategy.table.iter().enumerate() {
            r.put(
                format!("witness.rule.{n}"),
                format!(
                    "t={t} agent={} obs={obs} memory={mem:?} action={u}",
                    agent + 1
                ),
            );
        }
    } else {
        r.put("witness.source", "dp-strategy");
        r.cost("witness.worst_case", &c.strategy);
    }
    Ok(())
}

fn verify(a: &VerifyArgs, caps: &Caps) -> Res<Outcome> {
    let corrupt = a.corrupt_value.unwrap_or(0);
    let mut r = Report::new("verify");
    let mut instances: Vec<(String, String, SystemModel, InfoStructure)> = Vec::new();
    if let Some(path) = &a.model {
        let bytes = std::fs::read(path).map_err(|e| io_error(path, e))?;
        let text =
            String::from_utf8(bytes.clone()).map_err(|_| usage("model file is not UTF-8"))?;
        let (m, i) = parse(&text)?;
        instances.push(("file".into(), sha256_hex(&bytes), m, i));
    } else {
        let family = a.family.unwrap_or(crate::Family::Default);
        let first = a.seed.unwrap_or(0);
        let count = a.count.unwrap_or(1);
        if count == 0 {
            return Err(usage("--count must be positive"));
        }
        r.put("generator_version", GENERATOR_VERSION);
        r.put("family", family.name());
        for seed in first..first + count {
            let inst = random_instance(seed, &family.params());
            let digest = sha256_hex(serialize(&inst.model, &inst.info).as_bytes());
            instances.push((format!("seed:{seed}"), digest, inst.model, inst.info));
        }
    }
    r.put("tie_break", TIE_BREAK_RULE);
    r.put("instances", instances.len());
    let mut failed = 0usize;
    let mut witness_done = false;
    for (k, (name, digest, m, i)) in instances.iter().enumerate() {
        let c = check(m, i, caps, corrupt)?;
        let p = format!("instance.{k}");
        r.put(format!("{p}.source"), name);
        r.put(format!("{p}.digest"), format!("sha256:{digest}"));
        r.cost(&format!("{p}.dp"), &c.claimed);
        r.cost(&format!("{p}.oracle"), &c.oracle);
        r.cost(&format!("{p}.strategy_worst_case"), &c.strategy);
        r.put(format!("{p}.oracle_nodes"), c.searched);
        r.put(
            format!("{p}.status"),
            if c.pass() { "PASS" } else { "FAIL" },
        );
        if !c.pass() {
            failed += 1;
            if !witness_done {
                r.put("witness.instance", k);
                put_witness(&mut r, m, i, &c)?;
                witness_done = true;
            }
        }
    }
    r.put("failed", failed);
    r.put("verdict", if failed == 0 { "PASS" } else { "FAIL" });
    Ok(Outcome {
        report: r.render(),
        code: if failed == 0 {
            exit::OK
        } else {
            exit::VERIFY_FAIL
        },
    })
}

fn model_digest(m: &SystemModel, i: &InfoStructure) -> String {
    format!("sha256:{}", sha256_hex(serialize(m, i).as_bytes()))
}

fn solve_row(p: &PursuitParams, rule: Surround, caps: &Caps) -> Res<(String, Solution)> {
    let (m, i) = pursuit::build(p, rule)?;
    let start = Instant::now();
    let (_, sol) = dp::solve(&m, &i, &options(caps))?;
    eprintln!(
        "row x1={} x2={} y0={} view={} surround={} wall_time_ms={}",
        p.x1,
        p.x2,
        p.y0,
        p.view.name(),
        rule.name(),
        start.elapsed().as_millis()
    );
    Ok((model_digest(&m, &i), sol))
}

fn run_pursuit(a: &PursuitArgs, caps: &Caps) -> Res<Outcome> {
    if a.table1 {
        return table1(a, caps);
    }
    let p = a.spec.params().map_err(usage)?;
    let rule = a.spec.rule();
    let mut r = Report::new("pursuit");
    let (digest, sol) = solve_row(&p, rule, caps)?;
    r.put("instance_digest", digest);
    put_params(&mut r, &p, rule);
    r.put("tie_break", TIE_BREAK_RULE);
    put_solution(&mut r, "", &sol);
    write_outputs(&mut r, &a.out, &sol)?;
    let mut code = exit::OK;
    if a.oracle {
        let (m, i) = pursuit::build(&p, rule)?;
        let o = brute_force_minimax(&m, &i, caps.oracle_cap).map_err(|e| match e {
            Error::Resource { .. } => Failure {
                code: exit::RESOURCE,
                message: format!("oracle refused: {e}"),
            },
            e => e.into(),
        })?;
        r.cost("oracle_value", &o.value);
        r.put("oracle_nodes", o.searched);
        let agree = o.value == sol.value;
        r.put("agreement", if agree { "PASS" } else { "FAIL" });
        if !agree {
            code = exit::VERIFY_FAIL;
        }
    }
    Ok(Outcome {
        report: r.render(),
        code,
    })
}

fn put_params(r: &mut Report, p: &PursuitParams, rule: Surround) {
    r.put("lambda", p.lambda);
    r.put("horizon", p.horizon);
    r.put("penalty", p.penalty);
    r.put("x1", p.x1);
    r.put("x2", p.x2);
    r.put("y0", p.y0);
    r.put("view", p.view.name());
    r.put("surround", rule.name());
}

fn table1(a: &PursuitArgs, caps: &Caps) -> Res<Outcome> {
    let view = a.spec.view();
    let rule = a.spec.rule();
    let mut r = Report::new("pursuit-table1");
    let base = PursuitParams::table1(1, 1, 1);
    r.put("lambda", base.lambda);
    r.put("horizon", base.horizon);
    r.put("penalty", base.penalty);
    r.put("view", view.name());
    r.put("surround", rule.name());
    r.put("tie_break", TIE_BREAK_RULE);
    let mut mismatched = 0;
    for (n, &((x1, x2, y0), expected)) in TABLE1.iter().enumerate() {
        let p = PursuitParams {
            view,
            ..PursuitParams::table1(x1, x2, y0)
        };
        let (digest, sol) = solve_row(&p, rule, caps)?;
        let k = format!("row.{}", n + 1);
        r.put(format!("{k}.init"), format!("{x1},{x2},{y0}"));
        r.put(format!("{k}.digest"), digest);
        r.put(format!("{k}.expected"), expected);
        put_solution(&mut r, &format!("{k}."), &sol);
        let ok = sol.value == Cost::from_integer(expected);
        r.put(format!("{k}.match"), if ok { "yes" } else { "no" });
        if !ok {
            mismatched += 1;
        }
    }
    r.put("table1", if mismatched == 0 { "MATCH" } else { "MISMATCH" });
    if mismatched > 0 {
        let other = match rule {
            Surround::Inclusive => Surround::Exclusive,
            Surround::Exclusive => Surround::Inclusive,
        };
        put_variant(&mut r, view, other, caps)?;
    }
    // the other reading of agent 2's measurement, for comparison
    if view == TargetView::Delayed {
        for rule in [Surround::Inclusive, Surround::Exclusive] {
            put_variant(&mut r, TargetView::Immediate, rule, caps)?;
        }
    }
    Ok(Outcome {
        report: r.render(),
        code: if mismatched == 0 {
            exit::OK
        } else {
            exit::VERIFY_FAIL
        },
    })
}

fn put_variant(r: &mut Report, view: TargetView, rule: Surround, caps: &Caps) -> Res<()> {
    let k = format!("variant.{}.{}", view.name(), rule.name());
    let mut values = Vec::new();
    for &((x1, x2, y0), _) in &TABLE1 {
        let p = PursuitParams {
            view,
            ..PursuitParams::table1(x1, x2, y0)
        };
        let (_, sol) = solve_row(&p, rule, caps)?;
        values.push(format_cost(&sol.value));
    }
    r.list(&format!("{k}.values"), &values);
    let expected: Vec<String> = TABLE1.iter().map(|e| e.1.to_string()).collect();
    r.put(
        format!("{k}.match"),
        if values == expected { "yes" } else { "no" },
    );
    Ok(())
}

fn export(what: &ExportWhat) -> Res<Outcome> {
    let (text, output) = match what {
        ExportWhat::Pursuit { spec, output } => {
            let p = spec.params().map_err(usage)?;
            let (m, i) = pursuit::build(&p, spec.rule())?;
            (serialize(&m, &i), output)
        }
        ExportWhat::Random {
            seed,
            family,
            output,
        } => {
            let inst = random_instance(*seed, &family.params());
            (serialize(&inst.model, &inst.info), output)
        }
    };
    match output {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| io_error(path, e))?;
            let mut r = Report::new("export");
            r.put(
                "instance_digest",
                format!("sha256:{}", sha256_hex(text.as_bytes())),
            );
            r.put("bytes", text.len());
            Ok(Outcome {
                report: r.render(),
                code: exit::OK,
            })
        }
        None => Ok(Outcome {
            report: text,
            code: exit::OK,
        }),
    }
}
