//! prismlab: verification suites and solvers for truncated prismatic
//! period-ring arithmetic.
//!
//! Exit codes: 0 = all checks passed, 1 = some check failed, 2 = bad input.

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use prismlab::descent::{
    crystalline_test, key_residual, solve_key_equation, tau_power_convergence, CrystallineVerdict,
    SolveOptions,
};
use prismlab::galois::GroupAction;
use prismlab::json::{ElementFile, ProblemFile};
use prismlab::maxring::iplus_reduce;
use prismlab::report::{Report, SuiteConfig};
use prismlab::series::parse_poly_ints;
use prismlab::suites::{default_grid, run_suite, SUITE_NAMES};

#[derive(Parser)]
#[command(name = "prismlab", version, about = "exact-arithmetic workbench for prismatic period rings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named verification suite (or the whole grid with --all)
    Verify {
        /// suite name; see `prismlab verify --list`
        #[arg(long)]
        suite: Option<String>,
        /// run every suite over the default prime/Eisenstein grid
        #[arg(long)]
        all: bool,
        /// list the suite names and exit
        #[arg(long)]
        list: bool,
        /// prime p
        #[arg(long, default_value_t = 2)]
        p: u32,
        /// Eisenstein polynomial, e.g. "u^2-3" or "-3,0,1" (low degree first)
        #[arg(long, short = 'E')]
        eisenstein: Option<String>,
        #[arg(long, default_value_t = 12)]
        m: u32,
        #[arg(long, default_value_t = 12)]
        n: u32,
        #[arg(long, default_value_t = 8)]
        l: u32,
        #[arg(long, default_value_t = 8)]
        i: u32,
        #[arg(long, default_value_t = 6)]
        depth: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        nmax: u32,
        /// iteration/sample budget knob
        #[arg(long, default_value_t = 0)]
        budget: u32,
        /// write the JSON report(s) here instead of stdout
        #[arg(long)]
        out: Option<String>,
        /// print the human-readable table as well
        #[arg(long)]
        table: bool,
    },
    /// Solve the key matrix equation for a problem file
    Solve {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        out: Option<String>,
    },
    /// Apply a pipeline of operations to an element file
    Calc {
        #[arg(long)]
        elem: String,
        /// operations: phi | delta | act:tau | act:A,CHI | reduce-mod-e |
        /// iplus | fil:H | exact-div-p[:K]
        #[arg(long = "op")]
        ops: Vec<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Print the JSON schemas of the wire formats
    Schema {
        #[arg(long, default_value = "all")]
        which: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::from(0),
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> prismlab::Result<bool> {
    match cli.command {
        Command::Verify {
            suite,
            all,
            list,
            p,
            eisenstein,
            m,
            n,
            l,
            i,
            depth,
            seed,
            nmax,
            budget,
            out,
            table,
        } => {
            if list {
                for name in SUITE_NAMES {
                    println!("{name}");
                }
                return Ok(true);
            }
            let mut reports: Vec<Report> = Vec::new();
            if all {
                let plan = grid_plan();
                let threads: usize = std::env::var("PRISMLAB_THREADS")
                    .ok()
                    .and_then(|v| v.parse().ok())
                    .filter(|&t| t >= 1)
                    .unwrap_or(1);
                reports = run_plan(&plan, seed, threads)?;
            } else {
                let name = suite.ok_or_else(|| {
                    prismlab::Error::BadInput("pass --suite NAME or --all".into())
                })?;
                let eis = match &eisenstein {
                    Some(s) => parse_eis_arg(s)?,
                    None => vec![-(p as i64), 1],
                };
                let mut cfg = SuiteConfig::new(&name, p, eis);
                cfg.m = m;
                cfg.n = n;
                cfg.l = l;
                cfg.i = i;
                cfg.depth = depth;
                cfg.seed = seed;
                cfg.nmax = nmax;
                cfg.budget = budget;
                reports.push(run_suite(&cfg)?);
            }
            let pass = reports.iter().all(|r| r.pass);
            let json = if reports.len() == 1 {
                reports[0].to_json()
            } else {
                serde_json::to_string_pretty(&reports).expect("report serialization")
            };
            match out {
                Some(path) => {
                    let mut f = std::fs::File::create(&path)
                        .map_err(|e| prismlab::Error::BadInput(format!("cannot write {path}: {e}")))?;
                    f.write_all(json.as_bytes())
                        .map_err(|e| prismlab::Error::BadInput(format!("write failed: {e}")))?;
                }
                None => println!("{json}"),
            }
            if table {
                for r in &reports {
                    eprint!("{}", r.render_table());
                }
            }
            Ok(pass)
        }
        Command::Solve { problem, out } => {
            let text = std::fs::read_to_string(&problem)
                .map_err(|e| prismlab::Error::BadInput(format!("cannot read {problem}: {e}")))?;
            let (ring, km, g, budget) = ProblemFile::parse(&text)?;
            let act = GroupAction::new(&ring, g)?;
            let gm = solve_key_equation(&ring, &act, &km, SolveOptions { max_iterations: budget })?;
            let res = key_residual(&ring, &act, &km, &gm.x)?;
            let verdict = crystalline_test(&ring, &gm);
            let conv = tau_power_convergence(&ring, &act, &gm.x, 2)?;
            let result = serde_json::json!({
                "iterations": gm.iterations,
                "residual_zero": res.is_zero(),
                "verdict": match &verdict {
                    CrystallineVerdict::CrystallineAtPrecision { .. } => "crystalline-at-precision".to_string(),
                    CrystallineVerdict::SemistableWitness { row, col, gamma_index, .. } =>
                        format!("semistable-witness at entry ({row},{col}), gamma_{gamma_index}(w)"),
                    CrystallineVerdict::Undecided => "undecided".to_string(),
                },
                "convergence": conv.iter().map(|(n, g, s)| serde_json::json!({
                    "n": n, "grade": g, "saturated": s
                })).collect::<Vec<_>>(),
                "entries": (0..km.d).map(|r| (0..km.d).map(|c| {
                    serde_json::to_value(prismlab::json::ElementWire::from_elem(&ring, gm.x.at(r, c))).unwrap()
                }).collect::<Vec<_>>()).collect::<Vec<_>>(),
            });
            let text = serde_json::to_string_pretty(&result).expect("result serialization");
            match out {
                Some(path) => std::fs::write(&path, text)
                    .map_err(|e| prismlab::Error::BadInput(format!("write failed: {e}")))?,
                None => println!("{text}"),
            }
            Ok(res.is_zero())
        }
        Command::Calc { elem, ops, out } => {
            let text = std::fs::read_to_string(&elem)
                .map_err(|e| prismlab::Error::BadInput(format!("cannot read {elem}: {e}")))?;
            let (ring, mut cur) = ElementFile::parse(&text)?;
            let mut extra: Vec<String> = Vec::new();
            for (pos, op) in ops.iter().enumerate() {
                cur = apply_op(&ring, cur, op, &mut extra)
                    .map_err(|e| prismlab::Error::BadInput(format!("op {pos} ({op}): {e}")))?;
            }
            let rendered = ElementFile::render(&ring, &cur);
            match out {
                Some(path) => std::fs::write(&path, rendered)
                    .map_err(|e| prismlab::Error::BadInput(format!("write failed: {e}")))?,
                None => println!("{rendered}"),
            }
            for line in extra {
                eprintln!("{line}");
            }
            Ok(true)
        }
        Command::Schema { which } => {
            print_schemas(&which);
            Ok(true)
        }
    }
}

fn parse_eis_arg(s: &str) -> prismlab::Result<Vec<i64>> {
    if s.contains('u') || s.contains('x') || s.contains('^') {
        parse_poly_ints(s)
    } else {
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse()
                    .map_err(|_| prismlab::Error::BadInput(format!("bad coefficient {t:?}")))
            })
            .collect()
    }
}

fn apply_op(
    ring: &prismlab::maxring::MaxRing,
    cur: prismlab::maxring::MaxRingElement,
    op: &str,
    extra: &mut Vec<String>,
) -> prismlab::Result<prismlab::maxring::MaxRingElement> {
    let cfg = ring.cfg();
    if let Some(rest) = op.strip_prefix("act:") {
        let g = if rest == "tau" {
            prismlab::galois::GroupElement::tau(&cfg)
        } else {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 2 {
                return Err(prismlab::Error::BadInput("act needs tau or A,CHI".into()));
            }
            let a = prismlab::padic::TruncatedScalar::from_i64(
                &cfg,
                parts[0].parse().map_err(|_| prismlab::Error::BadInput("bad a".into()))?,
            );
            let chi = prismlab::padic::TruncatedScalar::from_i64(
                &cfg,
                parts[1].parse().map_err(|_| prismlab::Error::BadInput("bad chi".into()))?,
            );
            prismlab::galois::GroupElement::new(&cfg, a, chi)?
        };
        let act = GroupAction::new(ring, g)?;
        return act.act(&cur);
    }
    if let Some(rest) = op.strip_prefix("fil:") {
        let h: u32 = rest.parse().map_err(|_| prismlab::Error::BadInput("bad level".into()))?;
        return match ring.exact_div_e_pow(&cur, h) {
            Ok(q) => {
                extra.push(format!("fil:{h}: member; witness quotient returned"));
                Ok(q)
            }
            Err(e) => {
                extra.push(format!("fil:{h}: reject ({e})"));
                Ok(cur)
            }
        };
    }
    if let Some(rest) = op.strip_prefix("exact-div-p") {
        let k: u32 = if let Some(kstr) = rest.strip_prefix(':') {
            kstr.parse().map_err(|_| prismlab::Error::BadInput("bad power".into()))?
        } else {
            1
        };
        return ring.exact_div_p(&cur, k);
    }
    match op {
        "phi" => ring.phi(&cur),
        "delta" => {
            let p = cfg.p;
            let num = ring.sub(&ring.phi(&cur)?, &ring.pow(&cur, p)?)?;
            ring.exact_div_p(&num, 1)
        }
        "reduce-mod-e" => {
            let red = ring.reduce_mod_e(&cur);
            let mut out = ring.zero();
            for (&gi, s) in &red.terms {
                out = ring.add(
                    &out,
                    &ring.gamma_with(
                        cur.flavor.unwrap_or(prismlab::maxring::Flavor::Z),
                        gi,
                        ring.omax.from_series(s),
                    ),
                )?;
            }
            extra.push("reduce-mod-e: residue representatives of u-degree < e".into());
            Ok(out)
        }
        "iplus" => {
            let v = iplus_reduce(ring, &cur);
            extra.push(format!("iplus residue: {} (prec {})", v.residue, v.prec));
            Ok(ring.constant(v))
        }
        "identity" => Ok(cur),
        other => Err(prismlab::Error::BadInput(format!("unknown op {other:?}"))),
    }
}

/// The default verification plan: which suites run at which grid points.
fn grid_plan() -> Vec<SuiteConfig> {
    let mut plan = Vec::new();
    let full_grid = default_grid();
    for name in SUITE_NAMES {
        match name {
            "delta-axioms" => {
                for p in [2u32, 3, 5] {
                    plan.push(SuiteConfig::new(name, p, vec![-(p as i64), 1]));
                }
            }
            "lemma-2.2" => {
                for (p, e) in &full_grid {
                    plan.push(SuiteConfig::new(name, *p, e.clone()));
                }
            }
            "lemma-2.3" | "lemma-2.4" | "prop-2.5" | "lemma-2.8" => {
                for (p, e) in &full_grid {
                    if *p <= 3 {
                        plan.push(SuiteConfig::new(name, *p, e.clone()));
                    }
                }
            }
            "lemma-3.7" | "key-equation" => {
                for p in [2u32, 3] {
                    plan.push(SuiteConfig::new(name, p, vec![-(p as i64), 1]));
                    plan.push(SuiteConfig::new(name, p, vec![-(p as i64), 0, 1]));
                }
            }
            _ => {
                for p in [2u32, 3] {
                    plan.push(SuiteConfig::new(name, p, vec![-(p as i64), 1]));
                }
            }
        }
    }
    plan
}

fn run_plan(plan: &[SuiteConfig], seed: u64, threads: usize) -> prismlab::Result<Vec<Report>> {
    let plan: Vec<SuiteConfig> = plan
        .iter()
        .map(|c| SuiteConfig { seed, ..c.clone() })
        .collect();
    if threads <= 1 {
        let mut out = Vec::with_capacity(plan.len());
        for cfg in &plan {
            eprintln!("running {} (p = {}, E = {:?})", cfg.suite, cfg.p, cfg.eisenstein);
            out.push(run_suite(cfg)?);
        }
        return Ok(out);
    }
    // order-stable fan-out: results land at their plan index
    let mut slots: Vec<Option<prismlab::Result<Report>>> = Vec::new();
    slots.resize_with(plan.len(), || None);
    let slots = std::sync::Mutex::new(&mut slots);
    let next = std::sync::atomic::AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..threads.min(plan.len()) {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if idx >= plan.len() {
                    break;
                }
                let cfg = &plan[idx];
                eprintln!("running {} (p = {}, E = {:?})", cfg.suite, cfg.p, cfg.eisenstein);
                let rep = run_suite(cfg);
                slots.lock().unwrap()[idx] = Some(rep);
            });
        }
    });
    let slots = slots.into_inner().unwrap();
    let mut out = Vec::with_capacity(plan.len());
    for s in slots.drain(..) {
        out.push(s.expect("plan slot filled")?);
    }
    Ok(out)
}

fn print_schemas(which: &str) {
    let elem = serde_json::json!({
        "prec": {"p": "prime", "m": "p-adic precision", "n": "u-adic window",
                  "l": "E/p-order window", "i": "divided-power window"},
        "eisenstein": "[c0, c1, ..., 1] with v_p(c0) = 1, p | c_i",
        "elem": {
            "flavor": "\"z\" | \"w\" | null",
            "terms": [{"gamma": "divided-power index",
                        "coeff": {"l0": "series", "tail": [{"l": "slot", "poly": "series"}]}}]
        },
        "series": "either [int, ...] (dense, low degree first) or [{\"u\": exp, \"c\": {\"residue\": \"decimal\", \"prec\": int}}]"
    });
    let problem = serde_json::json!({
        "prec": "as in the element schema",
        "eisenstein": "as in the element schema",
        "d": "rank", "h": "height",
        "A_mat": "[[series; d]; d], the Frobenius matrix",
        "B_mat": "[[series; d]; d], with A B = B A = E^h Id",
        "g": {"a": "decimal string", "chi": "decimal string (unit)"},
        "budget": "optional iteration cap"
    });
    let group = serde_json::json!({"a": "decimal string", "chi": "decimal string (unit)"});
    let report = serde_json::json!({
        "schema_version": 1,
        "suite": "name", "config": "echo of the request",
        "effective": "working windows after guard adjustment",
        "checks": [{"name": "...", "status": "pass|fail|undecided", "detail": "...", "millis": 0}],
        "pass": true
    });
    let all = serde_json::json!({
        "elem": elem, "problem": problem, "group": group, "report": report
    });
    let chosen = match which {
        "elem" => &all["elem"],
        "problem" => &all["problem"],
        "group" => &all["group"],
        "report" => &all["report"],
        _ => &all,
    };
    println!("{}", serde_json::to_string_pretty(chosen).unwrap());
}
