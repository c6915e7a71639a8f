use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rte_bench::offline::{load_artifacts, save_artifacts};
use rte_bench::report::write_case;
use rte_bench::*;
use rte_core::dsa::DsaOperator;
use rte_core::solvers::{DsaCorrection, SolveReport};
use rte_core::TransportSystem;

#[derive(Parser)]
#[command(name = "rte-bench", version, about = "Parametric transport benchmarks with reduced-order acceleration")]
struct Cli {
    /// TOML configuration; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args)]
struct Common {
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    scale: Option<f64>,
    /// Case names; repeat or separate with commas.
    #[arg(long = "case", global = true, value_delimiter = ',')]
    cases: Vec<String>,
    /// Method list, e.g. `DSA,ROMIG,ROMSAD-3,5`.
    #[arg(long, global = true)]
    methods: Option<String>,
    #[arg(long, global = true)]
    n_test: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_delimiter = ',')]
    eps_pod: Option<Vec<f64>>,
    #[arg(long, global = true)]
    max_iterations: Option<usize>,
    /// Write the transport and diffusion matrices as triplet text.
    #[arg(long, global = true)]
    dump_triplets: bool,
}

#[derive(Subcommand)]
enum Verb {
    /// Training solves and reduced models, saved under {out}/{case}/models.
    Offline,
    /// Single solve at one parameter value.
    Solve {
        #[arg(long)]
        method: String,
        /// Parameter values separated by commas.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        mu: Vec<f64>,
    },
    /// Offline (unless models exist) and online runs with reports.
    Bench {
        /// Recompute models even if saved ones exist.
        #[arg(long)]
        fresh: bool,
    },
    /// Compares two metric tables (files or output directories).
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Largest relative n_sweep difference accepted.
        #[arg(long, default_value_t = 0.0)]
        tolerance: f64,
    },
    /// Runs the invariant suites.
    Selfcheck,
}

fn merged_config(cli: &Cli) -> BenchResult<BenchConfig> {
    let mut c = match &cli.config {
        Some(p) => BenchConfig::load(p)?,
        None => BenchConfig::default(),
    };
    let o = &cli.common;
    if let Some(v) = &o.out_dir {
        c.out_dir = v.clone();
    }
    if let Some(v) = o.scale {
        c.scale = v;
    }
    if !o.cases.is_empty() {
        c.cases = o.cases.clone();
    }
    if o.methods.is_some() {
        c.methods = o.methods.clone();
    }
    if o.n_test.is_some() {
        c.n_test = o.n_test;
    }
    if o.seed.is_some() {
        c.seed = o.seed;
    }
    if o.eps_pod.is_some() {
        c.eps_pod = o.eps_pod.clone();
    }
    if o.max_iterations.is_some() {
        c.max_iterations = o.max_iterations;
    }
    c.dump_triplets |= o.dump_triplets;
    Ok(c)
}

fn models_dir(cfg: &BenchConfig, case: &BenchmarkCase) -> PathBuf {
    cfg.out_dir.join(case.id.name()).join("models")
}

/// Dense transport triplets are only written for small systems.
const DENSE_DUMP_LIMIT: usize = 20_000;

fn dump_triplets(dir: &Path, system: &TransportSystem<f64>) -> BenchResult<()> {
    fs::create_dir_all(dir)?;
    if system.n_unknowns() <= DENSE_DUMP_LIMIT {
        system.write_triplets(BufWriter::new(fs::File::create(dir.join("transport.txt"))?))?;
    } else {
        log::warn!("{} unknowns: transport triplets skipped", system.n_unknowns());
    }
    DsaOperator::build(system)?.write_triplets(BufWriter::new(fs::File::create(dir.join("dsa.txt"))?))?;
    Ok(())
}

fn offline(cfg: &BenchConfig) -> BenchResult<()> {
    for id in cfg.case_ids()? {
        let case = cfg.case(id)?;
        println!("{}", case.describe());
        let art = run_offline(&case)?;
        let dir = models_dir(cfg, &case);
        save_artifacts(&art, &dir)?;
        print!("{}", art.rank_table());
        println!("models written to {}", dir.display());
    }
    Ok(())
}

fn solve(cfg: &BenchConfig, method: &str, mu: &[f64]) -> BenchResult<()> {
    let ids = cfg.case_ids()?;
    let [id] = ids[..] else {
        return Err(BenchError::Config("solve needs exactly one --case".into()));
    };
    let case = cfg.case(id)?;
    let method: Method = method.parse()?;
    case.problem.check_parameters(mu)?;
    let system = TransportSystem::assemble(&case.problem, &case.mesh, &case.quadrature, mu)?;
    if cfg.dump_triplets {
        dump_triplets(&cfg.out_dir.join(id.name()).join("triplets"), &system)?;
    }
    let art = if method.is_reduced() { Some(load_artifacts(&case, &models_dir(cfg, &case))?) } else { None };
    let models = match &art {
        Some(a) => Some(&a.models[0]),
        None => None,
    };
    let (_, rep) = run_method(&case, &system, method, models, &mut DsaCorrection::new())?;
    println!("{}", SolveReport::HEADER);
    println!("{}", rep.to_record());
    rep.write_history(std::io::stdout().lock())?;
    Ok(())
}

fn bench(cfg: &BenchConfig, fresh: bool) -> BenchResult<()> {
    let mut all = MetricsTable::default();
    for id in cfg.case_ids()? {
        let case = cfg.case(id)?;
        println!("{}", case.describe());
        let needs_models = case.methods.iter().any(|m| m.is_reduced());
        let art = if !needs_models {
            None
        } else if !fresh && models_dir(cfg, &case).exists() {
            Some(load_artifacts(&case, &models_dir(cfg, &case))?)
        } else {
            let a = run_offline(&case)?;
            save_artifacts(&a, &models_dir(cfg, &case))?;
            Some(a)
        };
        let test = case.test_set();
        if cfg.dump_triplets {
            let system = TransportSystem::assemble(&case.problem, &case.mesh, &case.quadrature, &test[0])?;
            dump_triplets(&cfg.out_dir.join(id.name()).join("triplets"), &system)?;
        }
        let run = run_case(&case, art.as_ref(), &case.methods, &test)?;
        let table = MetricsTable::from_run(&run);
        let dir = write_case(&cfg.out_dir, &run, &table)?;
        print!("{}", table.to_tsv(true));
        println!("reports written to {}", dir.display());
        all.extend(table);
    }
    fs::create_dir_all(&cfg.out_dir)?;
    fs::write(cfg.out_dir.join("summary.tsv"), all.to_tsv(true))?;
    Ok(())
}

fn read_table(p: &Path) -> BenchResult<MetricsTable> {
    let file = if p.is_dir() { p.join("summary.tsv") } else { p.to_path_buf() };
    MetricsTable::from_tsv(&fs::read_to_string(&file)?)
}

fn compare(a: &Path, b: &Path, tolerance: f64) -> BenchResult<bool> {
    let (ta, tb) = (read_table(a)?, read_table(b)?);
    let mut ok = true;
    println!("case\tmethod\teps_pod\tn_sweep_a\tn_sweep_b\trel_diff");
    for ra in &ta.rows {
        let eps = ra.eps_pod.map_or_else(|| "-".into(), |e| format!("{e:e}"));
        match tb.rows.iter().find(|r| r.case == ra.case && r.method == ra.method && r.eps_pod == ra.eps_pod) {
            Some(rb) => {
                let rel = (ra.n_sweep - rb.n_sweep).abs() / ra.n_sweep.abs().max(1e-300);
                ok &= rel <= tolerance;
                println!("{}\t{}\t{eps}\t{:.4}\t{:.4}\t{rel:.4}", ra.case, ra.method, ra.n_sweep, rb.n_sweep);
            }
            None => {
                ok = false;
                println!("{}\t{}\t{eps}\t{:.4}\tmissing\t-", ra.case, ra.method, ra.n_sweep);
            }
        }
    }
    for rb in &tb.rows {
        if !ta.rows.iter().any(|r| r.case == rb.case && r.method == rb.method && r.eps_pod == rb.eps_pod) {
            ok = false;
            println!("{}\t{}\t-\tmissing\t{:.4}\t-", rb.case, rb.method, rb.n_sweep);
        }
    }
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = merged_config(&cli).and_then(|cfg| match &cli.verb {
        Verb::Offline => offline(&cfg).map(|_| true),
        Verb::Solve { method, mu } => solve(&cfg, method, mu).map(|_| true),
        Verb::Bench { fresh } => bench(&cfg, *fresh).map(|_| true),
        Verb::Compare { a, b, tolerance } => compare(a, b, *tolerance),
        Verb::Selfcheck => {
            let outcomes = selfcheck::run_all();
            for o in &outcomes {
                println!(
                    "{}\t{}\terror {:.3e} (tolerance {:.1e})\t{:.2} s",
                    if o.passed { "PASS" } else { "FAIL" },
                    o.name,
                    o.error,
                    o.tolerance,
                    o.seconds
                );
            }
            Ok(outcomes.iter().all(|o| o.passed))
        }
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
