//! `sgreedy`: generate instances, run the matchers, check the accounting and
//! evaluate λ certificates from the shell.
//!
//! Exit codes: 0 ok, 1 invariant violation, 2 usage error, 3 IO error.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stochastic_greedy::analysis::{decompose, run_mechanism, verify_bounds, write_bounds_csv, BoundKind, Mechanism};
use stochastic_greedy::certificates::{
    self, competitive_ratio, impossibility_scan, lambda_opt_terms, lambda_terms, LambdaKind, LambdaParams,
    ScanConfig, OPT_CEILING,
};
use stochastic_greedy::engine::{
    compute_policy, enumerate_exact, mc_estimate, propagate, write_expectations_csv, EngineKind, PolicySource,
    DEFAULT_ENUM_CAP,
};
use stochastic_greedy::harness::{
    emit_plot_data, generate, run_suite, standard_suite, write_suite_csv, GeneratorSpec, SuiteOptions, SuiteReport,
    SuiteRow, WeightLaw,
};
use stochastic_greedy::io::{format_instance, load_instance};
use stochastic_greedy::matchers::{expected_value, run_greedy, Algorithm, RunConfig};
use stochastic_greedy::{offline_optimum, Execution, Instance};

#[derive(Parser)]
#[command(name = "sgreedy", version, about = "Stochastic greedy for online weighted matching")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a generated instance.
    Gen {
        #[command(subcommand)]
        family: Family,
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Offline optimum of an instance.
    Opt {
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Expected value of one algorithm, as a CSV row.
    Run {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "sg")]
        algorithm: AlgoArg,
        #[command(flatten)]
        algo: AlgoOpts,
        /// Also write the decision table (or greedy's assignment) here.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-(t, advertiser) expected gains.
    Expect {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "sg")]
        algorithm: RandAlgo,
        #[command(flatten)]
        algo: AlgoOpts,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the Excess mechanism and check each impression's lower bound.
    Verify {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "base")]
        mechanism: KindArg,
        #[command(flatten)]
        lp: LambdaOpts,
        /// Check against this λ instead of the certificate value.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_ENUM_CAP)]
        enum_cap: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// λ certificates.
    Lambda {
        #[command(subcommand)]
        op: LambdaOp,
    },
    /// Batch suite: every instance × algorithm, one CSV row each.
    Bench {
        /// Instance files; the built-in suite when empty.
        instances: Vec<PathBuf>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "greedy,sg,osg")]
        algorithms: Vec<AlgoArg>,
        #[command(flatten)]
        algo: AlgoOpts,
        #[arg(long)]
        timings: bool,
        #[arg(long)]
        sequential: bool,
        /// Also write (instance, algorithm, ratio) columns here.
        #[arg(long)]
        plot: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Family {
    Figure1,
    Figure2,
    Figure3,
    Cascade {
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
    WorstcasePair {
        #[arg(long, default_value_t = 10.0)]
        l: f64,
    },
    Triangular {
        #[arg(long, default_value_t = 3)]
        n: usize,
    },
    Random {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.7)]
        density: f64,
        /// Integer weight levels (plus jitter); uniform weights when absent.
        #[arg(long)]
        levels: Option<u32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Greedy,
    Sg,
    Osg,
}

#[derive(Clone, Copy, ValueEnum)]
enum RandAlgo {
    Sg,
    Osg,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Enum,
    Dist,
    Mc,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum KindArg {
    Base,
    Optimized,
}

#[derive(Args)]
struct AlgoOpts {
    #[arg(long, default_value_t = 0.082)]
    eps: f64,
    #[arg(long, default_value_t = 0.445)]
    delta: f64,
    #[arg(long, default_value_t = 0.8613)]
    p: f64,
    #[arg(long, value_enum, default_value = "dist")]
    engine: EngineArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    replicas: usize,
}

/// Unset values fall back to the certificate point of the chosen kind.
#[derive(Args)]
struct LambdaOpts {
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Subcommand)]
enum LambdaOp {
    /// The eleven terms at one point.
    Eval {
        #[arg(long, value_enum, default_value = "base")]
        kind: KindArg,
        #[command(flatten)]
        lp: LambdaOpts,
        /// CSV of the terms.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multi-start search for the best point.
    Maximize {
        #[arg(long, value_enum, default_value = "optimized")]
        kind: KindArg,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        #[arg(long, default_value_t = 300)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid scan of the optimised terms against the known ceiling.
    Impossibility {
        #[arg(long, default_value_t = 8)]
        resolution: usize,
        #[arg(long, default_value_t = 200)]
        refine_iters: usize,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Violation(String),
    Usage(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Violation(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Violation(m) | Failure::Usage(m) | Failure::Io(m) => m,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn io_err(e: impl std::fmt::Display) -> Failure {
    Failure::Io(e.to_string())
}

type Res = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("sgreedy: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

/// Writes to `path`, or stdout when none.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => File::create(p)
            .map(|f| Box::new(io::BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|e| io_err(format!("{}: {e}", p.display()))),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn load(path: &Path) -> Result<Instance, Failure> {
    use stochastic_greedy::IoError;
    load_instance(path).map_err(|e| match e {
        IoError::Parse { .. } => usage(e),
        _ => io_err(e),
    })
}

fn engine_kind(e: EngineArg) -> EngineKind {
    match e {
        EngineArg::Enum => EngineKind::Enum,
        EngineArg::Dist => EngineKind::Dist,
        EngineArg::Mc => EngineKind::Mc,
    }
}

fn algorithm(a: AlgoArg) -> Algorithm {
    match a {
        AlgoArg::Greedy => Algorithm::Greedy,
        AlgoArg::Sg => Algorithm::Sg,
        AlgoArg::Osg => Algorithm::Osg,
    }
}

fn run_config(a: AlgoArg, o: &AlgoOpts) -> RunConfig {
    RunConfig {
        algorithm: algorithm(a),
        eps: o.eps,
        delta: o.delta,
        p: o.p,
        engine: engine_kind(o.engine),
        seed: o.seed,
        replicas: o.replicas,
        enum_cap: DEFAULT_ENUM_CAP,
    }
}

fn lambda_params(kind: KindArg, o: &LambdaOpts) -> LambdaParams {
    let base = match kind {
        KindArg::Base => LambdaParams::base_point(),
        KindArg::Optimized => LambdaParams::optimized_point(),
    };
    LambdaParams {
        eps: o.eps.unwrap_or(base.eps),
        delta: o.delta.unwrap_or(base.delta),
        zeta: o.zeta.unwrap_or(base.zeta),
        beta: o.beta.unwrap_or(base.beta),
        sigma: o.sigma.unwrap_or(base.sigma),
        p: match kind {
            KindArg::Base => None,
            KindArg::Optimized => o.p.or(base.p),
        },
    }
}

fn file_label(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn dispatch(cmd: Cmd) -> Res {
    match cmd {
        Cmd::Gen { family, out } => cmd_gen(family, out.as_deref()),
        Cmd::Opt { instance, out } => cmd_opt(&instance, out.as_deref()),
        Cmd::Run {
            instance,
            algorithm,
            algo,
            trace,
            out,
        } => cmd_run(&instance, algorithm, &algo, trace.as_deref(), out.as_deref()),
        Cmd::Expect {
            instance,
            algorithm,
            algo,
            out,
        } => cmd_expect(&instance, algorithm, &algo, out.as_deref()),
        Cmd::Verify {
            instance,
            mechanism,
            lp,
            lambda,
            enum_cap,
            out,
        } => cmd_verify(&instance, mechanism, &lp, lambda, enum_cap, out.as_deref()),
        Cmd::Lambda { op } => cmd_lambda(op),
        Cmd::Bench {
            instances,
            algorithms,
            algo,
            timings,
            sequential,
            plot,
            out,
        } => {
            let named = if instances.is_empty() {
                standard_suite(algo.seed)
            } else {
                instances
                    .iter()
                    .map(|p| Ok((file_label(p), load(p)?)))
                    .collect::<Result<_, Failure>>()?
            };
            let configs: Vec<RunConfig> = algorithms.iter().map(|&a| run_config(a, &algo)).collect();
            let opts = SuiteOptions {
                exec: if sequential { Execution::Sequential } else { Execution::Parallel },
                timings,
            };
            let report = run_suite(&configs, &named, opts);
            write_suite_csv(sink(out.as_deref())?, &report).map_err(io_err)?;
            if let Some(p) = plot {
                emit_plot_data(sink(Some(&p))?, &report).map_err(io_err)?;
            }
            if report.ok() {
                Ok(())
            } else {
                for v in &report.violations {
                    eprintln!("violation: {v}");
                }
                Err(Failure::Violation(format!("{} invariant violation(s)", report.violations.len())))
            }
        }
    }
}

fn cmd_gen(family: Family, out: Option<&Path>) -> Res {
    let spec = match family {
        Family::Figure1 => GeneratorSpec::Figure1,
        Family::Figure2 => GeneratorSpec::Figure2,
        Family::Figure3 => GeneratorSpec::Figure3,
        Family::Cascade { k } => GeneratorSpec::Cascade(k),
        Family::WorstcasePair { l } => GeneratorSpec::WorstcasePair(l),
        Family::Triangular { n } => GeneratorSpec::Triangular(n),
        Family::Random {
            m,
            n,
            density,
            levels,
            seed,
        } => GeneratorSpec::Random {
            m,
            n,
            law: match levels {
                Some(levels) => WeightLaw::Levels { density, levels },
                None => WeightLaw::Uniform { density },
            },
            seed,
        },
    };
    let inst = generate(&spec).map_err(usage)?;
    sink(out)?
        .write_all(format_instance(&inst).as_bytes())
        .map_err(io_err)
}

fn cmd_opt(path: &Path, out: Option<&Path>) -> Res {
    let inst = load(path)?;
    let opt = offline_optimum(&inst);
    let mut w = sink(out)?;
    let matched: Vec<String> = opt
        .matched
        .iter()
        .map(|a| a.map_or("-".to_string(), |a| a.to_string()))
        .collect();
    writeln!(w, "opt {}", opt.value).map_err(io_err)?;
    writeln!(w, "matched {}", matched.join(" ")).map_err(io_err)
}

fn cmd_run(path: &Path, a: AlgoArg, o: &AlgoOpts, trace: Option<&Path>, out: Option<&Path>) -> Res {
    let inst = load(path)?;
    let cfg = run_config(a, o);
    let (report, dump) = if cfg.algorithm == Algorithm::Greedy {
        let (tr, r) = run_greedy(&inst);
        let dump: String = tr
            .assigned
            .iter()
            .enumerate()
            .map(|(i, a)| format!("t={} a={a}\n", i + 1))
            .collect();
        (r, dump)
    } else {
        let r = expected_value(&inst, &cfg).map_err(usage)?;
        let dump = r.policy.as_ref().map(|t| t.dump()).unwrap_or_default();
        (r, dump)
    };
    let suite = SuiteReport {
        rows: vec![SuiteRow {
            instance: file_label(path),
            algorithm: report.algorithm,
            engine: report.engine,
            value: report.value,
            stderr: report.stderr,
            opt: report.opt,
            ratio: report.ratio,
            runtime_ms: None,
        }],
        violations: vec![],
    };
    write_suite_csv(sink(out)?, &suite).map_err(io_err)?;
    if let Some(t) = trace {
        sink(Some(t))?.write_all(dump.as_bytes()).map_err(io_err)?;
    }
    Ok(())
}

fn cmd_expect(path: &Path, a: RandAlgo, o: &AlgoOpts, out: Option<&Path>) -> Res {
    let inst = load(path)?;
    let a = match a {
        RandAlgo::Sg => AlgoArg::Sg,
        RandAlgo::Osg => AlgoArg::Osg,
    };
    let cfg = run_config(a, o);
    let params = cfg.params();
    params.validate().map_err(usage)?;
    let w = sink(out)?;
    match cfg.engine {
        EngineKind::Enum => {
            let r = enumerate_exact(&inst, PolicySource::Lockstep(params), cfg.enum_cap).map_err(usage)?;
            write_expectations_csv(w, cfg.engine, &r.run.e_gains, None)
        }
        EngineKind::Dist => {
            let r = propagate(&inst, PolicySource::Lockstep(params)).map_err(usage)?;
            write_expectations_csv(w, cfg.engine, &r.run.e_gains, None)
        }
        EngineKind::Mc => {
            let table = compute_policy(&inst, params).map_err(usage)?;
            let r = mc_estimate(&inst, &table, cfg.replicas, cfg.seed, Execution::Parallel).map_err(usage)?;
            write_expectations_csv(w, cfg.engine, &r.e_gain, Some(&r.e_gain_stderr))
        }
    }
    .map_err(io_err)
}

fn cmd_verify(
    path: &Path,
    kind: KindArg,
    o: &LambdaOpts,
    lambda: Option<f64>,
    cap: usize,
    out: Option<&Path>,
) -> Res {
    let inst = load(path)?;
    let lp = lambda_params(kind, o);
    let (params, mech, terms) = match kind {
        KindArg::Base => (
            stochastic_greedy::AlgoParams::sg(lp.eps, lp.delta),
            Mechanism::Base {
                zeta: lp.zeta,
                beta: lp.beta,
                sigma: lp.sigma,
            },
            lambda_terms(&lp),
        ),
        KindArg::Optimized => {
            let p = lp.p.expect("optimized point carries p");
            (
                stochastic_greedy::AlgoParams::osg(lp.eps, lp.delta, p),
                Mechanism::Optimized {
                    zeta: lp.zeta,
                    beta: lp.beta,
                    sigma: lp.sigma,
                    p,
                },
                lambda_opt_terms(&lp),
            )
        }
    };
    let l = match lambda {
        Some(l) => l,
        None => terms.map_err(usage)?.min,
    };
    params.validate().map_err(usage)?;
    let dec = decompose(&inst, params, cap).map_err(usage)?;
    let ledger = run_mechanism(&dec, mech).map_err(usage)?;
    let bound = match kind {
        KindArg::Base => BoundKind::Base(l),
        KindArg::Optimized => BoundKind::Optimized(l),
    };
    let report = verify_bounds(&dec, &ledger, bound);
    write_bounds_csv(sink(out)?, &report).map_err(io_err)?;
    eprintln!(
        "lambda {l:.10}  sum gap {:.3e}  dropped {:.6}",
        report.sum_gap, report.dropped
    );
    let fails = report.violators().count();
    if fails > 0 || report.sum_gap.abs() > 1e-9 {
        Err(Failure::Violation(format!(
            "{fails} impression(s) below bound, sum gap {:.3e}",
            report.sum_gap
        )))
    } else {
        Ok(())
    }
}

fn print_point(w: &mut dyn Write, lp: &LambdaParams) -> io::Result<()> {
    write!(
        w,
        "eps={:.6} delta={:.6} zeta={:.6} beta={:.6} sigma={:.6}",
        lp.eps, lp.delta, lp.zeta, lp.beta, lp.sigma
    )?;
    if let Some(p) = lp.p {
        write!(w, " p={p:.6}")?;
    }
    writeln!(w)
}

fn print_ratio(w: &mut dyn Write, lambda: f64) -> io::Result<()> {
    match competitive_ratio(lambda) {
        Ok(r) => writeln!(w, "ratio = {r:.10}"),
        Err(_) => writeln!(w, "ratio = n/a (negative lambda)"),
    }
}

fn cmd_lambda(op: LambdaOp) -> Res {
    let mut stdout = io::stdout().lock();
    match op {
        LambdaOp::Eval { kind, lp, out } => {
            let lp = lambda_params(kind, &lp);
            let terms = match kind {
                KindArg::Base => lambda_terms(&lp),
                KindArg::Optimized => lambda_opt_terms(&lp),
            }
            .map_err(usage)?;
            (|| {
                print_point(&mut stdout, &lp)?;
                writeln!(stdout, "{terms}")?;
                print_ratio(&mut stdout, terms.min)
            })()
            .map_err(io_err)?;
            if let Some(p) = out {
                terms.write_csv(sink(Some(&p))?).map_err(io_err)?;
            }
            Ok(())
        }
        LambdaOp::Maximize {
            kind,
            restarts,
            iters,
            seed,
            out,
        } => {
            let k = match kind {
                KindArg::Base => LambdaKind::Base,
                KindArg::Optimized => LambdaKind::Optimized,
            };
            let (lp, terms) = certificates::maximize(k, restarts, iters, seed, Execution::Parallel).map_err(usage)?;
            (|| {
                print_point(&mut stdout, &lp)?;
                writeln!(stdout, "{terms}")?;
                print_ratio(&mut stdout, terms.min)
            })()
            .map_err(io_err)?;
            if let Some(p) = out {
                terms.write_csv(sink(Some(&p))?).map_err(io_err)?;
            }
            Ok(())
        }
        LambdaOp::Impossibility {
            resolution,
            refine_iters,
            restarts,
            out,
        } => {
            let cfg = ScanConfig {
                resolution,
                refine_iters,
                restarts,
                ..ScanConfig::default()
            };
            let r = impossibility_scan(&cfg, Execution::Parallel).map_err(usage)?;
            (|| {
                print_point(&mut stdout, &r.argmax)?;
                writeln!(stdout, "{}", r.breakdown)?;
                writeln!(
                    stdout,
                    "grid points {}  max {:.10}  ceiling {OPT_CEILING}  below ceiling: {}",
                    r.grid_points, r.max, r.below_ceiling
                )
            })()
            .map_err(io_err)?;
            if let Some(p) = out {
                r.breakdown.write_csv(sink(Some(&p))?).map_err(io_err)?;
            }
            if r.below_ceiling {
                Ok(())
            } else {
                Err(Failure::Violation(format!("scan max {} above ceiling {OPT_CEILING}", r.max)))
            }
        }
    }
}
