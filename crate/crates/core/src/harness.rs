//! Instance families, the batch suite runner and report emission.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::EngineKind;
use crate::error::GenerateError;
use crate::exec::Execution;
use crate::instance::Instance;
use crate::matchers::{expected_value, Algorithm, RunConfig, RunReport};

/// How random weights are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightLaw {
    /// Each edge present with probability `density`, weight uniform in (0, 1].
    Uniform { density: f64 },
    /// Each edge present with probability `density`, weight one of
    /// `1..=levels` plus a jitter below 1e-3 (near-ties without exact ties).
    Levels { density: f64, levels: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeneratorSpec {
    Figure1,
    Figure2,
    Figure3,
    /// Hub advertiser 0 shared by `k` impressions, each also adjacent to its
    /// own spoke advertiser; `Cascade(3)` is the cascading-effect figure.
    Cascade(usize),
    /// Single advertiser, weights 1 then `L`.
    WorstcasePair(f64),
    /// Row `i` has weight 1 for advertisers `>= i`.
    Triangular(usize),
    Random {
        m: usize,
        n: usize,
        law: WeightLaw,
        seed: u64,
    },
}

pub fn generate(spec: &GeneratorSpec) -> Result<Instance, GenerateError> {
    let bad = |family, reason: &str| GenerateError::Size {
        family,
        reason: reason.to_string(),
    };
    let inst = match *spec {
        // columns (a, a'): a gets 2 then 5, a' gets 3, then i offers 7 to a
        GeneratorSpec::Figure1 => {
            Instance::from_rows(2, &[[2.0, 0.0], [0.0, 3.0], [5.0, 0.0], [7.0, 0.0]])
        }
        // columns (a, a', a''): single-edge priors 3, 9, 8, then i = (9, 12, 7)
        GeneratorSpec::Figure2 => Instance::from_rows(
            3,
            &[
                [3.0, 0.0, 0.0],
                [0.0, 9.0, 0.0],
                [0.0, 0.0, 8.0],
                [9.0, 12.0, 7.0],
            ],
        ),
        // columns (a1, a'1, a2, a'2)
        GeneratorSpec::Figure3 => Instance::from_rows(
            4,
            &[
                [1.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 1.0],
                [1.0, 0.0, 1.0, 0.0],
            ],
        ),
        GeneratorSpec::Cascade(k) => {
            if k == 0 {
                return Err(bad("cascade", "needs at least one spoke"));
            }
            let rows: Vec<Vec<f64>> = (0..k)
                .map(|j| {
                    let mut r = vec![0.0; k + 1];
                    r[0] = 1.0;
                    r[j + 1] = 1.0;
                    r
                })
                .collect();
            Instance::from_rows(k + 1, &rows)
        }
        GeneratorSpec::WorstcasePair(l) => {
            if !(l.is_finite() && l >= 0.0) {
                return Err(bad("worstcase_pair", "L must be finite and nonnegative"));
            }
            Instance::from_rows(1, &[[1.0], [l]])
        }
        GeneratorSpec::Triangular(n) => {
            if n == 0 {
                return Err(bad("triangular", "n must be positive"));
            }
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|a| if a >= i { 1.0 } else { 0.0 }).collect())
                .collect();
            Instance::from_rows(n, &rows)
        }
        GeneratorSpec::Random { m, n, law, seed } => {
            if n == 0 {
                return Err(bad("random", "needs at least one advertiser"));
            }
            let density = match law {
                WeightLaw::Uniform { density } | WeightLaw::Levels { density, .. } => density,
            };
            if !(0.0..=1.0).contains(&density) {
                return Err(bad("random", "density outside [0, 1]"));
            }
            if let WeightLaw::Levels { levels: 0, .. } = law {
                return Err(bad("random", "levels must be positive"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let weights = (0..m * n)
                .map(|_| {
                    if rng.random::<f64>() >= density {
                        return 0.0;
                    }
                    match law {
                        WeightLaw::Uniform { .. } => 1.0 - rng.random::<f64>(),
                        WeightLaw::Levels { levels, .. } => {
                            rng.random_range(1..=levels) as f64 + 1e-3 * rng.random::<f64>()
                        }
                    }
                })
                .collect();
            Instance::new(n, weights)
        }
    };
    Ok(inst.expect("generators build valid instances"))
}

/// Small instances covering every family; all within the enumeration cap.
pub fn standard_suite(seed: u64) -> Vec<(String, Instance)> {
    let mut out: Vec<(String, Instance)> = vec![
        ("figure1".into(), generate(&GeneratorSpec::Figure1).unwrap()),
        ("figure2".into(), generate(&GeneratorSpec::Figure2).unwrap()),
        ("figure3".into(), generate(&GeneratorSpec::Figure3).unwrap()),
        ("cascade3".into(), generate(&GeneratorSpec::Cascade(3)).unwrap()),
        ("cascade5".into(), generate(&GeneratorSpec::Cascade(5)).unwrap()),
        ("worstcase_pair".into(), generate(&GeneratorSpec::WorstcasePair(10.0)).unwrap()),
        ("greedy_tight".into(), Instance::from_rows(2, &[[1.0, 1.0], [1.0, 0.0]]).unwrap()),
    ];
    for n in 2..=5 {
        out.push((format!("triangular{n}"), generate(&GeneratorSpec::Triangular(n)).unwrap()));
    }
    for k in 0..24u64 {
        let (m, n) = (2 + (k % 5) as usize, 2 + (k % 3) as usize);
        let law = if k % 2 == 0 {
            WeightLaw::Uniform { density: 0.7 }
        } else {
            WeightLaw::Levels {
                density: 0.8,
                levels: 3,
            }
        };
        let spec = GeneratorSpec::Random {
            m,
            n,
            law,
            seed: seed.wrapping_mul(1000).wrapping_add(k),
        };
        out.push((format!("random{k:02}_{m}x{n}"), generate(&spec).unwrap()));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SuiteOptions {
    pub exec: Execution,
    /// Add a wall-clock column (breaks byte-identical reruns).
    pub timings: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRow {
    pub instance: String,
    pub algorithm: Algorithm,
    pub engine: Option<EngineKind>,
    pub value: f64,
    pub stderr: Option<f64>,
    pub opt: f64,
    pub ratio: f64,
    pub runtime_ms: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct SuiteReport {
    pub rows: Vec<SuiteRow>,
    /// Invariant failures and engine errors, one message each.
    pub violations: Vec<String>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Every (instance, config) pair, rows in (instance, config) order.
pub fn run_suite(
    configs: &[RunConfig],
    instances: &[(String, Instance)],
    opts: SuiteOptions,
) -> SuiteReport {
    let pairs: Vec<(usize, usize)> = (0..instances.len())
        .flat_map(|i| (0..configs.len()).map(move |c| (i, c)))
        .collect();
    let results = opts.exec.map(&pairs, |&(i, c)| {
        let (name, inst) = &instances[i];
        let cfg = &configs[c];
        let start = Instant::now();
        let r = expected_value(inst, cfg);
        let ms = start.elapsed().as_secs_f64() * 1e3;
        (name.clone(), cfg.algorithm, r, ms)
    });
    let mut report = SuiteReport::default();
    for (name, algorithm, r, ms) in results {
        match r {
            Ok(r) => {
                report.violations.extend(check_row(&name, &r));
                report.rows.push(SuiteRow {
                    instance: name,
                    algorithm,
                    engine: r.engine,
                    value: r.value,
                    stderr: r.stderr,
                    opt: r.opt,
                    ratio: r.ratio,
                    runtime_ms: opts.timings.then_some(ms),
                });
            }
            Err(e) => report
                .violations
                .push(format!("{name} [{}]: {e}", algorithm.name())),
        }
    }
    report
}

fn check_row(name: &str, r: &RunReport) -> Vec<String> {
    let mut v = Vec::new();
    if r.algorithm == Algorithm::Greedy && r.ratio < 0.5 - 1e-12 {
        v.push(format!("{name}: greedy ratio {} below 1/2", r.ratio));
    }
    let slack = r.stderr.map_or(1e-9, |s| 1e-9 + 6.0 * s);
    if r.value > r.opt + slack {
        v.push(format!("{name} [{}]: value {} exceeds OPT {}", r.algorithm.name(), r.value, r.opt));
    }
    v
}

pub fn write_suite_csv<W: Write>(out: W, report: &SuiteReport) -> Result<(), csv::Error> {
    let timings = report.rows.iter().any(|r| r.runtime_ms.is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["instance", "algorithm", "engine", "value", "stderr", "opt", "ratio"];
    if timings {
        header.push("runtime_ms");
    }
    w.write_record(&header)?;
    for r in &report.rows {
        let mut rec = vec![
            r.instance.clone(),
            r.algorithm.name().to_string(),
            r.engine.map_or("-".into(), |e| e.name().to_string()),
            format!("{}", r.value),
            r.stderr.map_or(String::new(), |s| format!("{s}")),
            format!("{}", r.opt),
            format!("{}", r.ratio),
        ];
        if timings {
            rec.push(r.runtime_ms.map_or(String::new(), |t| format!("{t:.3}")));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `(instance, algorithm, ratio)` columns sorted by instance then algorithm,
/// ratios to 12 significant digits.
pub fn emit_plot_data<W: Write>(out: W, report: &SuiteReport) -> Result<(), csv::Error> {
    let mut rows: Vec<&SuiteRow> = report.rows.iter().collect();
    rows.sort_by(|a, b| {
        (a.instance.as_str(), a.algorithm.name()).cmp(&(b.instance.as_str(), b.algorithm.name()))
    });
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["instance", "algorithm", "ratio"])?;
    for r in rows {
        w.write_record([
            r.instance.clone(),
            r.algorithm.name().to_string(),
            format!("{:.11e}", r.ratio),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_shapes() {
        let f3 = generate(&GeneratorSpec::Figure3).unwrap();
        assert_eq!((f3.num_impressions(), f3.num_advertisers()), (3, 4));
        assert_eq!(f3.weights().iter().filter(|&&w| w == 1.0).count(), 6);
        let tri = generate(&GeneratorSpec::Triangular(3)).unwrap();
        assert_eq!(tri.row(1), &[0.0, 1.0, 1.0]);
        assert!(generate(&GeneratorSpec::Triangular(0)).is_err());
        assert!(generate(&GeneratorSpec::Cascade(0)).is_err());
    }

    #[test]
    fn random_is_seeded() {
        let spec = GeneratorSpec::Random {
            m: 4,
            n: 3,
            law: WeightLaw::Uniform { density: 0.5 },
            seed: 9,
        };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    }

    #[test]
    fn empty_suite_has_header_only() {
        let rep = run_suite(&[RunConfig::default()], &[], SuiteOptions::default());
        assert!(rep.ok());
        let mut buf = Vec::new();
        write_suite_csv(&mut buf, &rep).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "instance,algorithm,engine,value,stderr,opt,ratio\n");
    }
}
