//! Command-line front end. Exit codes: 0 success or consistent, 1
//! inconsistent or not universal, 2 input error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::classify::{classify, lemma_case, Classification, ChainSide, Witness};
use crate::extensions::{entropic_consistency_demo, entropic_rho, extend, max_semigroup_residual, ExtensionError};
use crate::measure::{Filtration, Measure, Partition, Position, Space};
use crate::pasting::{is_filtration_consistent, rectangle_size_bound};
use crate::random::{random_position, rng, seed_from_env};
use crate::rational::{fmt_q, fmt_vec, Q};
use crate::scenario::{load_path, Scenario, DEFAULT_MAX_GENERATORS, DEFAULT_MAX_OUTCOMES};
use crate::simplex_export::{project, render_svg};

pub const SCHEMA: &str = "tcrisk-report/1";

#[derive(Debug, Parser)]
#[command(name = "tcrisk", version, about = "Time-consistency analysis for finitely generated coherent risk measures")]
struct Cli {
    /// Emit a machine-readable JSON report.
    #[arg(long, global = true)]
    json: bool,
    /// Lift the outcome and generator limits (prints a cost estimate first).
    #[arg(long, global = true)]
    allow_large: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate ρ(X), or the blockwise conditional risk at a level.
    Eval {
        scenario: PathBuf,
        #[arg(long)]
        position: String,
        #[arg(long, requires = "filtration")]
        level: Option<usize>,
        #[arg(long)]
        filtration: Option<String>,
    },
    /// Rectangle check of every level of a filtration.
    Check {
        scenario: PathBuf,
        #[arg(long)]
        filtration: String,
    },
    /// Decide the universal class.
    Classify { scenario: PathBuf },
    /// Print a non-consistency witness with its contradiction chain.
    Witness { scenario: PathBuf },
    /// Tabulate the dynamic extension and its semigroup residuals.
    Extend {
        scenario: PathBuf,
        #[arg(long)]
        filtration: String,
        /// Random positions added to the residual check.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write the barycentric figure as SVG (and optionally CSV).
    Simplex {
        scenario: PathBuf,
        /// Comma-separated outcome labels.
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Entropic risk: conditional residuals and homogeneity gap.
    Entropic {
        scenario: PathBuf,
        #[arg(long)]
        gamma: f64,
        /// Defaults to trivial then discrete.
        #[arg(long)]
        filtration: Option<String>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

struct Report {
    command: &'static str,
    text: String,
    json: Value,
    code: i32,
}

type CmdResult = Result<Report, String>;

fn blocks_str(space: &Space, pi: &Partition) -> String {
    pi.blocks()
        .iter()
        .map(|b| format!("{{{}}}", b.iter().map(|&i| space.label(i)).collect::<Vec<_>>().join(",")))
        .collect::<Vec<_>>()
        .join(" ")
}

fn set_str(space: &Space, set: &[usize]) -> String {
    format!("{{{}}}", set.iter().map(|&i| space.label(i)).collect::<Vec<_>>().join(","))
}

fn labels(space: &Space, set: &[usize]) -> Vec<String> {
    set.iter().map(|&i| space.label(i).to_string()).collect()
}

fn strs(v: &[Q]) -> Vec<String> {
    v.iter().map(fmt_q).collect()
}

fn blockwise_json(space: &Space, pi: &Partition, x: &Position) -> Value {
    let values = x.block_values(pi);
    Value::Array(
        pi.blocks()
            .iter()
            .zip(&values)
            .map(|(b, v)| json!({"block": labels(space, b), "value": fmt_q(v)}))
            .collect(),
    )
}

fn blockwise_text(space: &Space, pi: &Partition, x: &Position) -> String {
    let values = x.block_values(pi);
    pi.blocks()
        .iter()
        .zip(&values)
        .map(|(b, v)| format!("{}: {}", set_str(space, b), fmt_q(v)))
        .collect::<Vec<_>>()
        .join("  ")
}

fn load(path: &Path, allow_large: bool, err: &mut dyn Write) -> Result<Scenario, String> {
    let s = load_path(path, allow_large).map_err(|e| format!("{}: {e}", path.display()))?;
    let n = s.space.len();
    let k = s.rm.gens().len();
    if allow_large && (n > DEFAULT_MAX_OUTCOMES || k > DEFAULT_MAX_GENERATORS) {
        let splits = 1u128.checked_shl(n as u32).map_or(u128::MAX, |v| v.saturating_sub(2));
        let per_step = rectangle_size_bound(&s.rm, &Partition::discrete(n));
        let _ = writeln!(
            err,
            "cost estimate: {n} outcomes, {k} generators; up to {splits} two-block splits, up to {per_step} rectangle vertices per step, each an exact LP"
        );
    }
    Ok(s)
}

fn witness_json(space: &Space, w: &Witness) -> Value {
    json!({
        "a": labels(space, &w.a),
        "b": labels(space, &w.b),
        "failing_partition": w.failing_partition.blocks().iter().map(|b| labels(space, b)).collect::<Vec<_>>(),
        "failing_vertex": strs(w.failing_vertex.probs()),
        "separator": w.certificate.separator.as_ref().map(|y| strs(y.values())),
        "chain": w.chain.as_ref().map(|c| json!({
            "side": match c.side { ChainSide::Min => "min", ChainSide::Max => "max" },
            "a": labels(space, &c.a),
            "b": labels(space, &c.b),
            "z": c.z.iter().zip(c.roles).map(|(z, r)| json!({"p": strs(z.probs()), "role": r})).collect::<Vec<_>>(),
        })),
    })
}

fn witness_text(space: &Space, w: &Witness) -> String {
    let mut t = String::new();
    t.push_str(&format!("a = {}\nb = {}\n", set_str(space, &w.a), set_str(space, &w.b)));
    t.push_str(&format!("failing partition: {}\n", blocks_str(space, &w.failing_partition)));
    t.push_str(&format!("failing vertex: {}\n", fmt_vec(w.failing_vertex.probs())));
    if let Some(y) = &w.certificate.separator {
        t.push_str(&format!("separator: {}\n", fmt_vec(y.values())));
    }
    match &w.chain {
        Some(c) => {
            let side = match c.side {
                ChainSide::Min => "min",
                ChainSide::Max => "max",
            };
            t.push_str(&format!(
                "chain ({side} side, a = {}, b = {}):\n",
                set_str(space, &c.a),
                set_str(space, &c.b)
            ));
            for (k, (z, role)) in c.z.iter().zip(c.roles).enumerate() {
                t.push_str(&format!("  z{} = {}  {}\n", k + 1, fmt_vec(z.probs()), role));
            }
        }
        None => t.push_str("chain: none\n"),
    }
    t
}

fn cmd_eval(s: &Scenario, position: &str, level: Option<usize>, filtration: Option<&str>) -> CmdResult {
    let x = s.position(position).map_err(|e| e.to_string())?;
    match (level, filtration) {
        (Some(t), Some(name)) => {
            let f = s.filtration(name).map_err(|e| e.to_string())?;
            let pi = f
                .level(t)
                .ok_or_else(|| format!("unknown level {t} (filtration {name:?} has {} levels)", f.len()))?;
            let v = s.rm.conditional_rho(x, pi).map_err(|e| e.to_string())?;
            Ok(Report {
                command: "eval",
                text: format!("{}\n", blockwise_text(&s.space, pi, &v)),
                json: json!({"position": position, "filtration": name, "level": t, "blocks": blockwise_json(&s.space, pi, &v)}),
                code: 0,
            })
        }
        _ => {
            let r = s.rm.rho(x).map_err(|e| e.to_string())?;
            Ok(Report {
                command: "eval",
                text: format!("{}\n", fmt_q(&r)),
                json: json!({"position": position, "rho": fmt_q(&r)}),
                code: 0,
            })
        }
    }
}

fn cmd_check(s: &Scenario, name: &str) -> CmdResult {
    let f = s.filtration(name).map_err(|e| e.to_string())?;
    let reports = is_filtration_consistent(&s.rm, f).map_err(|e| e.to_string())?;
    let mut text = String::new();
    let mut levels = Vec::new();
    for (t, r) in reports.iter().enumerate() {
        let verdict = if r.is_consistent() { "PASS" } else { "FAIL" };
        text.push_str(&format!("level {t} {}: {verdict}\n", blocks_str(&s.space, &r.partition)));
        let mut fails = Vec::new();
        for fl in &r.failures {
            let sep = fl.certificate.separator.as_ref().map(|y| fmt_vec(y.values())).unwrap_or_default();
            text.push_str(&format!("  vertex {} separator {}\n", fmt_vec(fl.vertex.probs()), sep));
            fails.push(json!({
                "vertex": strs(fl.vertex.probs()),
                "separator": fl.certificate.separator.as_ref().map(|y| strs(y.values())),
            }));
        }
        levels.push(json!({
            "level": t,
            "partition": r.partition.blocks().iter().map(|b| labels(&s.space, b)).collect::<Vec<_>>(),
            "consistent": r.is_consistent(),
            "failures": fails,
        }));
    }
    let ok = reports.iter().all(|r| r.is_consistent());
    text.push_str(if ok { "consistent\n" } else { "inconsistent\n" });
    Ok(Report {
        command: "check",
        text,
        json: json!({"filtration": name, "consistent": ok, "levels": levels}),
        code: if ok { 0 } else { 1 },
    })
}

fn class_json(space: &Space, c: &Classification) -> Value {
    let mut v = json!({"tag": c.tag(), "describe": c.describe(space)});
    match c {
        Classification::OneAtomic { omega1 } => v["omega1"] = json!(space.label(*omega1)),
        Classification::TwoAtomic { omega1, omega2, alpha, beta } => {
            v["omega1"] = json!(space.label(*omega1));
            v["omega2"] = json!(space.label(*omega2));
            v["alpha"] = json!(fmt_q(alpha));
            v["beta"] = json!(fmt_q(beta));
        }
        Classification::Linear { p1 } => v["p1"] = json!(strs(p1.probs())),
        Classification::NotUniversal(w) => v["witness"] = witness_json(space, w),
        Classification::Extremal => {}
    }
    v
}

fn cmd_classify(s: &Scenario) -> CmdResult {
    let c = classify(&s.rm).map_err(|e| e.to_string())?;
    let mut text = format!("{}\n", c.describe(&s.space));
    if let Classification::NotUniversal(w) = &c {
        text.push_str(&format!(
            "witness: a = {}, b = {}, failing vertex {} at {}\n",
            set_str(&s.space, &w.a),
            set_str(&s.space, &w.b),
            fmt_vec(w.failing_vertex.probs()),
            blocks_str(&s.space, &w.failing_partition)
        ));
    }
    Ok(Report {
        command: "classify",
        text,
        json: class_json(&s.space, &c),
        code: if c.is_universal() { 0 } else { 1 },
    })
}

fn cmd_witness(s: &Scenario) -> CmdResult {
    let c = classify(&s.rm).map_err(|e| e.to_string())?;
    match &c {
        Classification::NotUniversal(w) => {
            let case = lemma_case(&s.rm, &w.a, &w.b).map_err(|e| e.to_string())?;
            let mut text = String::from("NotUniversal\n");
            text.push_str(&format!("lemma case: {}\n", case.label()));
            text.push_str(&witness_text(&s.space, w));
            let mut j = witness_json(&s.space, w);
            j["lemma_case"] = json!(case.label());
            Ok(Report {
                command: "witness",
                text,
                json: json!({"universal": false, "witness": j}),
                code: 1,
            })
        }
        other => Ok(Report {
            command: "witness",
            text: format!("no witness: {}\n", other.describe(&s.space)),
            json: json!({"universal": true, "class": class_json(&s.space, other)}),
            code: 0,
        }),
    }
}

fn cmd_extend(s: &Scenario, name: &str, samples: usize, seed: u64) -> CmdResult {
    let f = s.filtration(name).map_err(|e| e.to_string())?;
    let d = match extend(&s.rm, f) {
        Ok(d) => d,
        Err(ExtensionError::NotUniversal(w)) => {
            let text = format!(
                "refused: NotUniversal, no dynamic extension exists for every filtration\nwitness:\n{}",
                witness_text(&s.space, &w)
            );
            return Ok(Report {
                command: "extend",
                text,
                json: json!({"refused": true, "witness": witness_json(&s.space, &w)}),
                code: 1,
            });
        }
        Err(e) => return Err(e.to_string()),
    };
    let mut text = format!("class: {}\n", d.class().describe(&s.space));
    let mut tables = Vec::new();
    for (pname, x) in &s.positions {
        text.push_str(&format!("position {pname}:\n"));
        let mut levels = Vec::new();
        for (t, pi) in f.levels().iter().enumerate() {
            let v = d.evaluate(t, x).map_err(|e| e.to_string())?;
            text.push_str(&format!("  level {t}: {}\n", blockwise_text(&s.space, pi, &v)));
            levels.push(blockwise_json(&s.space, pi, &v));
        }
        tables.push(json!({"position": pname, "levels": levels}));
    }
    let mut r = rng(seed);
    let mut xs: Vec<Position> = s.positions.values().cloned().collect();
    xs.extend((0..samples).map(|_| random_position(&s.space, &mut r, -10, 10)));
    let mut worst = Q::from_integer(0.into());
    for x in &xs {
        let v = max_semigroup_residual(&d, x).map_err(|e| e.to_string())?;
        if v > worst {
            worst = v;
        }
    }
    text.push_str(&format!(
        "semigroup residual over {} positions (seed {seed}), all level pairs: {}\n",
        xs.len(),
        fmt_q(&worst)
    ));
    let zero = worst == Q::from_integer(0.into());
    Ok(Report {
        command: "extend",
        text,
        json: json!({
            "class": class_json(&s.space, d.class()),
            "filtration": name,
            "tables": tables,
            "positions_checked": xs.len(),
            "seed": seed,
            "max_semigroup_residual": fmt_q(&worst),
        }),
        code: if zero { 0 } else { 1 },
    })
}

fn cmd_simplex(s: &Scenario, a: &str, b: &str, out: &Path, csv: Option<&Path>) -> CmdResult {
    let a = s.outcome_set(a).map_err(|e| e.to_string())?;
    let b = s.outcome_set(b).map_err(|e| e.to_string())?;
    let scene = project(&s.rm, &a, &b).map_err(|e| e.to_string())?;
    std::fs::write(out, render_svg(&scene)).map_err(|e| format!("io error: {}: {e}", out.display()))?;
    let mut text = format!("wrote {} ({} points", out.display(), scene.points.len());
    text.push_str(if scene.segments.is_empty() { ", no chain)\n" } else { ", with chain)\n" });
    if let Some(p) = csv {
        std::fs::write(p, scene.to_csv()).map_err(|e| format!("io error: {}: {e}", p.display()))?;
        text.push_str(&format!("wrote {}\n", p.display()));
    }
    let mut j = scene.to_json();
    j["svg"] = json!(out.display().to_string());
    j["csv"] = json!(csv.map(|p| p.display().to_string()));
    Ok(Report {
        command: "simplex",
        text,
        json: j,
        code: 0,
    })
}

fn cmd_entropic(s: &Scenario, gamma: f64, name: Option<&str>, samples: usize, seed: u64) -> CmdResult {
    let f = match name {
        Some(n) => s.filtration(n).map_err(|e| e.to_string())?.clone(),
        None => {
            let n = s.space.len();
            let mut levels = vec![Partition::trivial(n)];
            if n > 1 {
                levels.push(Partition::discrete(n));
            }
            Filtration::new(levels).map_err(|e| e.to_string())?
        }
    };
    let p0 = Measure::reference(&s.space);
    let mut text = format!("gamma = {gamma} (approx values)\n");
    let mut rows = Vec::new();
    let mut worst_res: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    for (pname, x) in &s.positions {
        let rep = entropic_consistency_demo(&f, gamma, &p0, x).map_err(|e| e.to_string())?;
        let rho = entropic_rho(x, gamma, &p0).map_err(|e| e.to_string())?;
        text.push_str(&format!(
            "{pname}: rho ~ {rho:.9}, residual ~ {:.3e}, homogeneity gap ~ {:.9}\n",
            rep.residual, rep.homogeneity_gap
        ));
        worst_res = worst_res.max(rep.residual);
        worst_gap = worst_gap.max(rep.homogeneity_gap);
        rows.push(json!({"position": pname, "rho": rho, "residual": rep.residual, "homogeneity_gap": rep.homogeneity_gap}));
    }
    let mut r = rng(seed);
    for _ in 0..samples {
        let x = random_position(&s.space, &mut r, -10, 10);
        let rep = entropic_consistency_demo(&f, gamma, &p0, &x).map_err(|e| e.to_string())?;
        worst_res = worst_res.max(rep.residual);
        worst_gap = worst_gap.max(rep.homogeneity_gap);
    }
    let total = s.positions.len() + samples;
    text.push_str(&format!(
        "max residual over {total} positions (seed {seed}) ~ {worst_res:.3e}\nmax homogeneity gap ~ {worst_gap:.9}\n"
    ));
    Ok(Report {
        command: "entropic",
        text,
        json: json!({
            "approx": true,
            "gamma": gamma,
            "positions": rows,
            "positions_checked": total,
            "seed": seed,
            "max_residual": worst_res,
            "max_homogeneity_gap": worst_gap,
        }),
        code: 0,
    })
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let large = cli.allow_large;
    let result = (|| -> CmdResult {
        match &cli.cmd {
            Command::Eval {
                scenario,
                position,
                level,
                filtration,
            } => cmd_eval(&load(scenario, large, err)?, position, *level, filtration.as_deref()),
            Command::Check { scenario, filtration } => cmd_check(&load(scenario, large, err)?, filtration),
            Command::Classify { scenario } => cmd_classify(&load(scenario, large, err)?),
            Command::Witness { scenario } => cmd_witness(&load(scenario, large, err)?),
            Command::Extend {
                scenario,
                filtration,
                samples,
                seed,
            } => {
                let s = load(scenario, large, err)?;
                let seed = seed_from_env(seed.unwrap_or(s.options.seed));
                cmd_extend(&s, filtration, *samples, seed)
            }
            Command::Simplex { scenario, a, b, out, csv } => {
                cmd_simplex(&load(scenario, large, err)?, a, b, out, csv.as_deref())
            }
            Command::Entropic {
                scenario,
                gamma,
                filtration,
                samples,
                seed,
            } => {
                let s = load(scenario, large, err)?;
                let seed = seed_from_env(seed.unwrap_or(s.options.seed));
                cmd_entropic(&s, *gamma, filtration.as_deref(), *samples, seed)
            }
        }
    })();
    match result {
        Ok(r) => {
            if cli.json {
                let mut j = json!({"schema": SCHEMA, "command": r.command, "exit_code": r.code});
                if let (Value::Object(m), Value::Object(body)) = (&mut j, r.json) {
                    m.extend(body);
                }
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&j).expect("report serializes"));
            } else {
                let _ = write!(out, "{}", r.text);
            }
            r.code
        }
        Err(msg) => {
            if cli.json {
                let j = json!({"schema": SCHEMA, "error": msg, "exit_code": 2});
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&j).expect("report serializes"));
            }
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}
