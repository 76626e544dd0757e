use crate::{BoundsArgs, DataArgs, EsoArgs, Failure, GenArgs, GenSvmArgs, ProblemKind, SamplingKindArg, SolveArgs, VerifyArgs};
use anyhow::Context;
use pcdm::eso::{self, EsoSource};
use pcdm::io::{self, LibsvmOptions};
use pcdm::model::{CompositeProblem, Regularizer};
use pcdm::sampling::SamplingSpec;
use pcdm::solver::{self, SolverConfig, SolverError, StepWeights};
use pcdm::theory::{self, suite, RateInputs, TheoryError};
use std::path::{Path, PathBuf};

type Result<T> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// `<path>.b.csv`
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".b.csv");
    PathBuf::from(s)
}

pub fn gen(a: &GenArgs) -> Result<()> {
    let inst = io::gen_least_squares(a.m, a.n, a.omega, a.seed).map_err(|e| usage(e.to_string()))?;
    io::write_libsvm(&a.out, &inst.a, &inst.b).with_context(|| format!("writing {}", a.out.display()))?;
    let side = sidecar_path(&a.out);
    io::write_vector_csv(&side, &inst.b).with_context(|| format!("writing {}", side.display()))?;
    println!("rows={} cols={} nnz={} out={} b={}", a.m, a.n, inst.a.nnz(), a.out.display(), side.display());
    Ok(())
}

pub fn gen_svm(a: &GenSvmArgs) -> Result<()> {
    let (x, y) = io::gen_classification(a.samples, a.features, a.density, a.flip, a.seed)
        .map_err(|e| usage(e.to_string()))?;
    io::write_libsvm(&a.out, &x, &y).with_context(|| format!("writing {}", a.out.display()))?;
    println!("samples={} features={} nnz={} out={}", a.samples, a.features, x.nnz(), a.out.display());
    Ok(())
}

fn parse_reg(s: &str) -> Result<Regularizer> {
    let num = |t: &str| t.parse::<f64>().map_err(|_| usage(format!("bad number `{t}` in --reg {s}")));
    let parts: Vec<&str> = s.split(':').collect();
    let reg = match parts.as_slice() {
        ["none"] => Regularizer::Zero,
        ["l1", l] => Regularizer::L1 { lambda: num(l)? },
        ["l2", m] => Regularizer::SquaredL2 { mu: num(m)? },
        ["box"] => Regularizer::Box { lo: 0.0, hi: 1.0 },
        ["box", lo, hi] => Regularizer::Box { lo: num(lo)?, hi: num(hi)? },
        _ => return Err(usage(format!("unknown regularizer `{s}` (none, l1:L, l2:M, box, box:LO:HI)"))),
    };
    reg.validate().map_err(usage)?;
    Ok(reg)
}

fn load_problem(d: &DataArgs, reg: Regularizer) -> Result<CompositeProblem> {
    let read_err = |e: io::IoError| usage(format!("{}: {e}", d.data.display()));
    match d.problem {
        ProblemKind::Ls => {
            let opts = LibsvmOptions { normalize_rows: false, n_features: d.features };
            let (a, targets) = io::parse_libsvm_raw(&d.data, opts).map_err(read_err)?;
            let side = sidecar_path(&d.data);
            let b = if side.exists() {
                let b = io::read_vector_csv(&side).map_err(|e| usage(format!("{}: {e}", side.display())))?;
                if b.len() != a.rows() {
                    return Err(usage(format!("{} has {} entries, data has {} rows", side.display(), b.len(), a.rows())));
                }
                b
            } else {
                targets
            };
            CompositeProblem::least_squares(a, b, reg).map_err(|e| usage(e.to_string()))
        }
        ProblemKind::Svm => {
            if !matches!(reg, Regularizer::Zero | Regularizer::Box { lo: 0.0, hi: 1.0 }) {
                return Err(usage("the SVM dual always uses box:0:1"));
            }
            let opts = LibsvmOptions { normalize_rows: d.normalize, n_features: d.features };
            let (x, y) = io::parse_libsvm(&d.data, opts).map_err(read_err)?;
            CompositeProblem::svm_dual(x, y, d.lambda).map_err(|e| usage(e.to_string()))
        }
    }
}

fn sampling_for(kind: SamplingKindArg, tau: usize, n: usize) -> Result<SamplingSpec> {
    let spec = match kind {
        SamplingKindArg::TauNice => SamplingSpec::tau_nice(tau, n),
        SamplingKindArg::Serial => SamplingSpec::serial(n),
    };
    spec.map_err(|e| usage(e.to_string()))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.10e}"))
}

pub fn solve(a: &SolveArgs) -> Result<()> {
    let problem = load_problem(&a.data, parse_reg(&a.reg)?)?;
    let n = problem.n_blocks();
    let sampling = sampling_for(a.sampling, a.tau, n)?;
    let tau = sampling.tau().unwrap_or(1);
    let iters = match (a.iters, a.epochs) {
        (Some(k), _) => k,
        (None, Some(e)) if e >= 0.0 && e.is_finite() => (e * n as f64 / tau as f64).ceil() as u64,
        (None, Some(e)) => return Err(usage(format!("bad --epochs {e}"))),
        (None, None) => 1000,
    };
    let f_star = if a.reference {
        let fs = solver::reference_solve(&problem).context("reference solve")?;
        log::info!("reference F* = {fs}");
        Some(fs)
    } else {
        a.f_star
    };
    let mut cfg = SolverConfig::new(sampling, StepWeights::Eso(a.eso));
    cfg.max_iterations = iters;
    cfg.seed = a.seed;
    cfg.thread_count = a.threads;
    cfg.mode = a.mode;
    cfg.record_stride = a.record_stride;
    cfg.deterministic = !a.nondeterministic;
    cfg.strict_monotone = a.strict_monotone;
    cfg.record_time = a.time;
    cfg.f_star = f_star;

    let (trace, aborted) = match solver::run(&problem, &cfg) {
        Ok(t) => (t, None),
        Err(SolverError::NumericalAbort { k, trace }) => (*trace, Some(k)),
        Err(e @ (SolverError::Config(_) | SolverError::Eso(_) | SolverError::Sampling(_))) => {
            return Err(usage(e.to_string()))
        }
        Err(e) => return Err(anyhow::Error::from(e).into()),
    };
    io::write_trace_csv(&trace.records, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let last = trace.records.last().expect("trace has the starting record");
    let mode = match trace.mode {
        solver::Mode::PcdmM => "pcdm-m",
        _ => "pcdm",
    };
    println!(
        "status={} mode={mode} eso={} tau={tau} iterations={} F={:.10e} gap={} xi={} rejected={} out={}",
        if aborted.is_some() { "aborted" } else { "ok" },
        trace.eso.source,
        last.k,
        last.f,
        fmt_opt(last.gap),
        fmt_opt(f_star.map(|fs| last.f - fs)),
        trace.rejected,
        a.out.display()
    );
    match aborted {
        Some(k) => Err(Failure::Abort(format!("non-finite iterate at iteration {k}; trace written"))),
        None => Ok(()),
    }
}

fn median(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    }
}

fn hist_path(prefix: &Path, source: EsoSource) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(format!(".{}.csv", source.tag()));
    PathBuf::from(s)
}

pub fn eso(a: &EsoArgs) -> Result<()> {
    let problem = load_problem(&a.data, Regularizer::Zero)?;
    let n = problem.n_blocks();
    let sampling = sampling_for(SamplingKindArg::TauNice, a.tau, n)?;
    let data = if a.eso.contains(&EsoSource::RtD) {
        problem.smoothness_with_sigma(1e-8, 20_000)
    } else {
        problem.smoothness()
    }
    .context("smoothness constants")?;
    println!("eso,tau,factor,min,median,max,mean");
    for &source in &a.eso {
        let p = eso::build_eso(source, &data, &sampling).map_err(|e| usage(e.to_string()))?;
        let factor = match source {
            EsoSource::RtP => eso::rt_p_factor(data.omega, a.tau, n),
            EsoSource::RtD => eso::rt_d_factor(data.sigma.expect("sigma computed"), a.tau, n),
            _ => {
                let ratios: Vec<f64> =
                    p.v.iter().zip(&data.lipschitz).filter(|(_, &l)| l > 0.0).map(|(v, l)| v / l).collect();
                ratios.iter().sum::<f64>() / ratios.len().max(1) as f64
            }
        };
        let mut sorted = p.v.clone();
        sorted.sort_by(f64::total_cmp);
        let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
        println!(
            "{},{},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
            source,
            a.tau,
            factor,
            sorted[0],
            median(&sorted),
            sorted[sorted.len() - 1],
            mean
        );
        if let Some(prefix) = &a.hist {
            let path = hist_path(prefix, source);
            io::write_v_histogram(&p.v, a.buckets, &path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        }
    }
    Ok(())
}

fn theory_err(e: TheoryError) -> Failure {
    match e {
        TheoryError::Invalid(m) => usage(m),
        e => Failure::Other(e.into()),
    }
}

pub fn bounds(a: &BoundsArgs) -> Result<()> {
    if a.kstep == 0 {
        return Err(usage("--kstep must be positive"));
    }
    let mut inp = RateInputs::new(a.alpha, a.dist0sq, a.xi0)
        .with_target(a.eps, a.rho)
        .with_strong_convexity(a.mu_f, a.mu_psi);
    if let Some(r2) = a.levelset_r2 {
        inp = inp.with_levelset_radius_sq(r2);
    }
    inp.validate().map_err(theory_err)?;
    let mu = a.mu_f + a.mu_psi;
    let bounded = inp.c().is_finite();

    println!("quantity,real,k");
    if bounded {
        let c = theory::k_convex(&inp).map_err(theory_err)?;
        println!("k_convex,{:.10e},{}", c.real, c.k);
    }
    if mu > 0.0 {
        let c = theory::k_strongly_convex(&inp).map_err(theory_err)?;
        println!("k_strongly_convex,{:.10e},{}", c.real, c.k);
    }
    let c = theory::k_unbounded(&inp).map_err(theory_err)?;
    println!("k_unbounded,{:.10e},{}", c.real, c.k);
    let (runs, c) = theory::k_restart(&inp).map_err(theory_err)?;
    println!("restart_runs,{runs},{runs}");
    println!("restart_k,{:.10e},{}", c.real, c.k);
    if bounded {
        let prior = theory::rt12a_bounds(&inp, 0).map_err(theory_err)?;
        println!("rt12a_k_tilde,{:.10e},{}", prior.k_tilde.real, prior.k_tilde.k);
        if let Some(h) = prior.k_hat {
            println!("rt12a_k_hat,{:.10e},{}", h.real, h.k);
        }
        println!("rt12a_ratio,{:.10e},", prior.ratio);
    }

    println!();
    print!("k,bound_convex");
    if mu > 0.0 {
        print!(",bound_strongly_convex");
    }
    println!(",rt12a");
    let mut k = 0;
    while k <= a.kmax {
        print!("{k},{:.10e}", theory::bound_convex(&inp, k).map_err(theory_err)?);
        if mu > 0.0 {
            print!(",{:.10e}", theory::bound_strongly_convex(&inp, k).map_err(theory_err)?);
        }
        if bounded {
            println!(",{:.10e}", theory::rt12a_bounds(&inp, k).map_err(theory_err)?.rate);
        } else {
            println!(",");
        }
        k += a.kstep;
    }
    Ok(())
}

pub fn verify(a: &VerifyArgs) -> Result<()> {
    let cfg = suite::SuiteConfig { seed: a.seed, instances: a.instances, eso_trials: a.trials, points: a.points };
    let reports = suite::run_oracle_suite(&cfg).context("oracle suite")?;
    println!("oracle,checks,max_violation,tolerance,status");
    let mut failed = Vec::new();
    for r in &reports {
        println!(
            "{},{},{:.3e},{:.1e},{}",
            r.name,
            r.checks,
            r.max_violation,
            r.tolerance,
            if r.passed() { "ok" } else { "VIOLATED" }
        );
        if !r.passed() {
            eprintln!("{} violated by {:.3e}: {}", r.name, r.max_violation, r.worst);
            failed.push(r.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verify(format!("violations in {}", failed.join(", "))))
    }
}
