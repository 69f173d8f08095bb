//! Command-line front end: compute K-groups of finite chain rings, emit
//! tables/JSON/CSV, keep a JSON-lines result cache, and run verification
//! suites (Euler characteristic, even vanishing, nilpotence witnesses).

use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;

use syntomic::envelope::{nilpotence_witness, NilpotenceMode};
use syntomic::pipeline::{
    angeltveit_check, even_vanishing_threshold, job_key, kgroups, precision_plan, KGroupInput,
    KGroupResult,
};
use syntomic::Error;

#[derive(Parser)]
#[command(name = "syntomic", version, about = "p-primary K-groups of O_K/pi^n")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute K_{2i-1} and K_{2i-2} for one twist or a range.
    Compute(ComputeArgs),
    /// Verify computed results and structural witnesses.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ComputeArgs {
    #[arg(long)]
    p: u64,
    #[arg(long, default_value_t = 1)]
    f: usize,
    #[arg(long)]
    n: u32,
    /// Single motivic weight i (K_{2i-1}, K_{2i-2}).
    #[arg(long, conflicts_with_all = ["i_min", "i_max"])]
    i: Option<u64>,
    #[arg(long, requires = "i_max")]
    i_min: Option<u64>,
    #[arg(long, requires = "i_min")]
    i_max: Option<u64>,
    /// Non-constant Eisenstein coefficients c_1,...,c_e (low to high); the
    /// constant term is always p.  Default "1" gives E = z + p.
    #[arg(long, default_value = "1")]
    eisenstein: String,
    /// Override the planned working precision (digits of p).
    #[arg(long)]
    precision: Option<u32>,
    /// Retry with doubled precision on exhaustion.
    #[arg(long)]
    adaptive: bool,
    /// table, json, or csv.
    #[arg(long, default_value = "table")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON-lines cache file (read and appended).
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Check the mod-p nilpotence witnesses instead of K-groups.
    #[arg(long)]
    nilpotence: bool,
    /// plain, nygaard, or both (with --nilpotence).
    #[arg(long, default_value = "both")]
    mode: String,
    #[arg(long)]
    p: Option<u64>,
    #[arg(long, default_value_t = 1)]
    f: usize,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, default_value = "1")]
    eisenstein: String,
    #[arg(long)]
    bound: Option<u64>,
    /// Recompute and check this range of twists.
    #[arg(long, requires = "i_max")]
    i_min: Option<u64>,
    #[arg(long, requires = "i_min")]
    i_max: Option<u64>,
    /// JSON-lines fixture to check (and compare against, if recomputing).
    #[arg(long)]
    fixture: Option<PathBuf>,
    #[arg(long)]
    precision: Option<u32>,
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Compute(args) => run_compute(&args),
        Cmd::Verify(args) => run_verify(&args),
    };
    std::process::exit(code);
}

fn parse_eisenstein(s: &str) -> Result<Vec<i64>, String> {
    let coeffs: Result<Vec<i64>, _> = s
        .split(',')
        .map(|t| t.trim().parse::<i64>())
        .collect();
    match coeffs {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(format!("cannot parse Eisenstein coefficients from {s:?}")),
    }
}

enum Outcome {
    Done(KGroupResult, Option<String>),
    Exhausted,
}

fn run_compute(args: &ComputeArgs) -> i32 {
    let eis = match parse_eisenstein(&args.eisenstein) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let (lo, hi) = match (args.i, args.i_min, args.i_max) {
        (Some(i), _, _) => (i, i),
        (None, Some(a), Some(b)) if a <= b && a >= 1 => (a, b),
        _ => {
            eprintln!("error: give --i or a valid --i-min/--i-max range");
            return 2;
        }
    };

    let cache_lines: Vec<String> = args
        .cache
        .as_ref()
        .and_then(|path| std::fs::read_to_string(path).ok())
        .map(|s| s.lines().map(str::to_string).collect())
        .unwrap_or_default();

    let jobs: Vec<u64> = (lo..=hi).collect();
    let mut outcomes: Vec<(u64, Result<Outcome, Error>)> = Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for &i in &jobs {
            let eis = eis.clone();
            let cache_lines = &cache_lines;
            handles.push((
                i,
                scope.spawn(move || compute_one(args, &eis, i, cache_lines)),
            ));
        }
        for (i, h) in handles {
            outcomes.push((i, h.join().expect("worker panicked")));
        }
    });
    outcomes.sort_by_key(|(i, _)| *i);

    // Append fresh results to the cache.
    if let Some(path) = &args.cache {
        if let Ok(mut file) = std::fs::OpenOptions::new().create(true).append(true).open(path) {
            for (_, o) in &outcomes {
                if let Ok(Outcome::Done(res, None)) = o {
                    let _ = writeln!(file, "{}", serde_json::to_string(res).unwrap());
                }
            }
        }
    }

    let mut failures = 0;
    let mut rendered = String::new();
    match args.format.as_str() {
        "json" => {
            for (_, o) in &outcomes {
                match o {
                    Ok(Outcome::Done(_, Some(line))) => rendered.push_str(&format!("{line}\n")),
                    Ok(Outcome::Done(res, None)) => {
                        rendered.push_str(&format!("{}\n", serde_json::to_string(res).unwrap()))
                    }
                    Ok(Outcome::Exhausted) => failures += 1,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return 1;
                    }
                }
            }
        }
        "csv" => {
            rendered.push_str("p,f,n,i,group,exponents\n");
            for (i, o) in &outcomes {
                match o {
                    Ok(Outcome::Done(res, _)) => {
                        rendered.push_str(&format!(
                            "{},{},{},{},K{},{}\n",
                            res.p,
                            res.f,
                            res.n,
                            res.i,
                            2 * res.i - 1,
                            join_exps(&res.h1)
                        ));
                        if res.i >= 2 {
                            rendered.push_str(&format!(
                                "{},{},{},{},K{},{}\n",
                                res.p,
                                res.f,
                                res.n,
                                res.i,
                                2 * res.i - 2,
                                join_exps(&res.h2)
                            ));
                        }
                    }
                    Ok(Outcome::Exhausted) => {
                        failures += 1;
                        rendered.push_str(&format!("{},{},{},{},K{},x\n", args.p, args.f, args.n, i, 2 * i - 1));
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        return 1;
                    }
                }
            }
        }
        "table" => {
            rendered.push_str(&format!(
                "# p={} f={} n={} E(z)=z-part {:?} + {}\n",
                args.p, args.f, args.n, eis, args.p
            ));
            // Appendix layout: one row per K_r, ascending r; blank cell for
            // the zero group, "x" when the computation did not succeed.
            let mut rows: Vec<(u64, String)> = Vec::new();
            for (i, o) in &outcomes {
                match o {
                    Ok(Outcome::Done(res, _)) => {
                        rows.push((2 * i - 1, join_exps(&res.h1)));
                        if *i >= 2 {
                            rows.push((2 * i - 2, join_exps(&res.h2)));
                        }
                    }
                    Ok(Outcome::Exhausted) => {
                        failures += 1;
                        rows.push((2 * i - 1, "x".into()));
                        if *i >= 2 {
                            rows.push((2 * i - 2, "x".into()));
                        }
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        return 1;
                    }
                }
            }
            rows.sort();
            for (r, cell) in rows {
                rendered.push_str(&format!("K_{r}\t{cell}\n"));
            }
        }
        other => {
            eprintln!("error: unknown format {other:?}");
            return 2;
        }
    }

    if let Some(path) = &args.out {
        if let Err(e) = std::fs::write(path, &rendered) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return 1;
        }
    } else {
        print!("{rendered}");
    }
    if failures > 0 {
        eprintln!("{failures} cell(s) hit precision exhaustion (marked x)");
    }
    0
}

fn compute_one(
    args: &ComputeArgs,
    eis: &[i64],
    i: u64,
    cache_lines: &[String],
) -> Result<Outcome, Error> {
    let input = KGroupInput {
        p: args.p,
        f: args.f,
        n: args.n,
        eisenstein: eis.to_vec(),
        i,
        precision_override: args.precision,
        adaptive: args.adaptive,
        h_lift: None,
    };
    let plan = precision_plan(args.p, args.n, i);
    let working = args.precision.unwrap_or(plan.working).max(2);
    let key = job_key(&input, working);
    for line in cache_lines {
        if let Ok(res) = serde_json::from_str::<KGroupResult>(line) {
            let cached_input = KGroupInput {
                precision_override: Some(res.precision.working),
                ..input.clone()
            };
            if res.p == input.p
                && res.f == input.f
                && res.n == input.n
                && res.i == i
                && res.eisenstein == input.eisenstein
                && job_key(&cached_input, res.precision.working) == key
            {
                return Ok(Outcome::Done(res, Some(line.clone())));
            }
        }
    }
    match kgroups(&input) {
        Ok(res) => Ok(Outcome::Done(res, None)),
        Err(Error::PrecisionExhausted { .. }) => Ok(Outcome::Exhausted),
        Err(e) => Err(e),
    }
}

fn join_exps(exps: &[u32]) -> String {
    exps.iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn run_verify(args: &VerifyArgs) -> i32 {
    let eis = match parse_eisenstein(&args.eisenstein) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if args.nilpotence {
        let (Some(p), Some(n)) = (args.p, args.n) else {
            eprintln!("error: --nilpotence needs --p and --n");
            return 2;
        };
        let modes: Vec<NilpotenceMode> = match args.mode.as_str() {
            "plain" => vec![NilpotenceMode::Plain],
            "nygaard" => vec![NilpotenceMode::Nygaard],
            "both" => vec![NilpotenceMode::Plain, NilpotenceMode::Nygaard],
            other => {
                eprintln!("error: unknown mode {other:?}");
                return 2;
            }
        };
        for mode in modes {
            match nilpotence_witness(p, n, &eis, mode, args.bound) {
                Ok(rep) => {
                    println!(
                        "nilpotence {:?}: exponent {} vanishes={} sharp={} (bound {})",
                        mode, rep.exponent, rep.vanishes, rep.sharp, rep.bound
                    );
                    if !rep.vanishes || !rep.sharp {
                        eprintln!("CheckFailed: nilpotence witness in mode {mode:?}");
                        return 1;
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return 1;
                }
            }
        }
        return 0;
    }

    let mut fixture: Vec<KGroupResult> = Vec::new();
    if let Some(path) = &args.fixture {
        let Ok(text) = std::fs::read_to_string(path) else {
            eprintln!("error: cannot read {}", path.display());
            return 2;
        };
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            match serde_json::from_str::<KGroupResult>(line) {
                Ok(r) => fixture.push(r),
                Err(e) => {
                    eprintln!("error: bad fixture line: {e}");
                    return 2;
                }
            }
        }
    }

    let mut checked = 0;
    for res in &fixture {
        if let Err(msg) = check_result(res) {
            eprintln!("CheckFailed: {msg}");
            return 1;
        }
        checked += 1;
    }

    if let (Some(p), Some(n), Some(lo), Some(hi)) = (args.p, args.n, args.i_min, args.i_max) {
        for i in lo..=hi {
            let input = KGroupInput {
                p,
                f: args.f,
                n,
                eisenstein: eis.clone(),
                i,
                precision_override: args.precision,
                adaptive: false,
                h_lift: None,
            };
            match kgroups(&input) {
                Ok(res) => {
                    if let Err(msg) = check_result(&res) {
                        eprintln!("CheckFailed: {msg}");
                        return 1;
                    }
                    if let Some(fx) = fixture
                        .iter()
                        .find(|r| r.p == p && r.f == args.f && r.n == n && r.i == i)
                    {
                        if fx.h1 != res.h1 || fx.h2 != res.h2 {
                            eprintln!(
                                "CheckFailed: fixture mismatch at i={i}: fixture ({:?},{:?}) recomputed ({:?},{:?})",
                                fx.h1, fx.h2, res.h1, res.h2
                            );
                            return 1;
                        }
                    }
                    checked += 1;
                }
                Err(e) => {
                    eprintln!("error: i={i}: {e}");
                    return 1;
                }
            }
        }
    }
    println!("ok: {checked} result(s) verified");
    0
}

fn check_result(res: &KGroupResult) -> Result<(), String> {
    if !angeltveit_check(res) {
        return Err(format!(
            "Euler characteristic violated at p={} n={} i={}: h1={:?} h2={:?}",
            res.p, res.n, res.i, res.h1, res.h2
        ));
    }
    let e = res.eisenstein.len() as u32;
    let threshold = even_vanishing_threshold(res.p, e, res.n);
    if res.i >= threshold && !res.h2.is_empty() {
        return Err(format!(
            "even vanishing violated: i={} >= threshold {} but h2={:?}",
            res.i, threshold, res.h2
        ));
    }
    for window in res.h1.windows(2).chain(res.h2.windows(2)) {
        if window[0] > window[1] {
            return Err("exponents not sorted".into());
        }
    }
    Ok(())
}
