use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;
use gpdim::io::{
    read_sequence_raw, write_curve_tsv, write_estimate_json, write_pseq, Dtype, EstimateRecord,
};
use gpdim::prob::validate;
use gpdim::processes::{
    materialize, DirichletSampler, DirichletSpec, GrowthNet, GrowthNetConfig, MarkovChain,
    MarkovSource, RowSource, UniformSphereNoise,
};
use gpdim::reduce::project_sequence;
use gpdim::theory::run_suite;
use gpdim::{estimate, Error, EstimateOptions, FilterSpec, Metric, ReductionSpec, StateSequence};
use serde::{Deserialize, Serialize};

use crate::args::{
    AnalyzeArgs, Cli, Command, Process, ReduceArgs, SimulateArgs, ValidateArgs, VerifyArgs,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_VERIFY: u8 = 3;

/// Failure carrying the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        msg: msg.into(),
    }
}

type CmdResult = std::result::Result<u8, Failure>;

pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            f.code
        }
    }
}

fn dispatch(cli: Cli) -> CmdResult {
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = cli.threads {
            if t == 0 {
                return Err(usage("--threads must be at least 1"));
            }
            b = b.num_threads(t);
        }
        b.build().map_err(|e| usage(e.to_string()))?
    };
    pool.install(|| match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze(a, false),
        Command::Curve(a) => analyze(a, true),
        Command::Validate(a) => validate_cmd(a),
        Command::Reduce(a) => reduce_cmd(a),
        Command::Verify(a) => verify(a),
    })
}

/// Parameters stored next to a simulated sequence.
#[derive(Debug, Serialize, Deserialize)]
pub struct Sidecar {
    pub process: String,
    pub params: serde_json::Value,
    pub seed: u64,
    pub n_steps: usize,
    pub dim: usize,
    pub recommended_eta: Option<f64>,
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn read_sidecar(input: &Path) -> Option<Sidecar> {
    let text = std::fs::read_to_string(sidecar_path(input)).ok()?;
    serde_json::from_str(&text).ok()
}

fn simulate(a: SimulateArgs) -> CmdResult {
    if a.n == 0 {
        return Err(usage("--n must be positive"));
    }
    let mut params = serde_json::Map::new();
    let mut recommended_eta = None;
    let mut source: Box<dyn RowSource> = match a.process {
        Process::Ba | Process::Fapa => {
            let mut cfg = match a.process {
                Process::Ba => GrowthNetConfig::ba(a.n),
                _ => GrowthNetConfig::fapa(a.n, a.kappa),
            };
            cfg.m0 = a.m0;
            cfg.m = a.m;
            cfg.total_nodes = a.total_nodes;
            params.insert("m0".into(), a.m0.into());
            params.insert("m".into(), a.m.into());
            params.insert("total_nodes".into(), cfg.total().into());
            if let Some(k) = cfg.kappa {
                params.insert("kappa".into(), k.into());
            }
            recommended_eta = Some(1.0);
            Box::new(GrowthNet::new(cfg, a.seed)?)
        }
        Process::Dirichlet => {
            let k = a.k.unwrap_or(50_257);
            let spec = if a.local_fractal {
                params.insert("alpha".into(), "local-fractal".into());
                DirichletSpec::local_fractal(k)?
            } else {
                let alpha = match (a.alpha, a.alpha_times_k) {
                    (Some(x), _) => x,
                    (None, Some(c)) => c / k as f64,
                    (None, None) => 5.0 / k as f64,
                };
                params.insert("alpha".into(), alpha.into());
                DirichletSpec::symmetric(k, alpha)?
            };
            params.insert("k".into(), k.into());
            Box::new(DirichletSampler::new(&spec, a.seed))
        }
        Process::Uniform => {
            let k = a.k.unwrap_or(1000);
            if k < 2 {
                return Err(usage("--k must be at least 2"));
            }
            params.insert("k".into(), k.into());
            Box::new(UniformSphereNoise::new(k, a.seed))
        }
        Process::Markov => {
            let k = a.k.unwrap_or(50);
            if k < 2 {
                return Err(usage("--k must be at least 2"));
            }
            params.insert("k".into(), k.into());
            let chain = MarkovChain::random(k, a.seed);
            let seq = drain(
                &mut MarkovSource::new(&chain, a.seed ^ 0x5eed),
                a.n,
                a.m_groups,
            )?;
            return finish_simulate(&a, seq, params, recommended_eta);
        }
    };
    let seq = drain(source.as_mut(), a.n, a.m_groups)?;
    finish_simulate(&a, seq, params, recommended_eta)
}

fn drain<S: RowSource + ?Sized>(
    src: &mut S,
    n: usize,
    m_groups: Option<usize>,
) -> Result<StateSequence, Failure> {
    let out = materialize(src, n, None, m_groups)?;
    out.sequence.ok_or_else(|| Failure {
        code: EXIT_DATA,
        msg: "generator produced no rows".into(),
    })
}

fn finish_simulate(
    a: &SimulateArgs,
    seq: StateSequence,
    mut params: serde_json::Map<String, serde_json::Value>,
    recommended_eta: Option<f64>,
) -> CmdResult {
    if let Some(m) = a.m_groups {
        params.insert("m_groups".into(), m.into());
    }
    let dtype: Dtype = a.dtype.into();
    write_pseq(&seq, &a.output, dtype)?;
    let process = serde_json::to_value(a.process)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default();
    let side = Sidecar {
        process,
        params: serde_json::Value::Object(params),
        seed: a.seed,
        n_steps: seq.n_steps(),
        dim: seq.dim(),
        recommended_eta,
    };
    let side_path = sidecar_path(&a.output);
    let text = serde_json::to_string_pretty(&side).map_err(Error::from)?;
    std::fs::write(&side_path, text + "\n").map_err(|e| Failure {
        code: EXIT_DATA,
        msg: format!("writing {}: {e}", side_path.display()),
    })?;
    eprintln!(
        "wrote {} rows x {} to {} ({})",
        seq.n_steps(),
        seq.dim(),
        a.output.display(),
        dtype_name(dtype)
    );
    Ok(EXIT_OK)
}

fn dtype_name(d: Dtype) -> &'static str {
    match d {
        Dtype::F32 => "f32",
        Dtype::F64 => "f64",
    }
}

fn load(path: &Path, tolerance: Option<f64>, renormalize: bool) -> Result<StateSequence, Failure> {
    let loaded = read_sequence_raw(path)?;
    let tol = tolerance.unwrap_or_else(|| loaded.tolerance());
    let seq = if renormalize {
        loaded.sequence.renormalized()
    } else {
        loaded.sequence
    };
    let bad = validate(&seq, tol);
    if !bad.is_empty() {
        return Err(Error::Validation(bad).into());
    }
    Ok(seq)
}

fn analyze(a: AnalyzeArgs, curve_only: bool) -> CmdResult {
    let seq = load(&a.input, a.tolerance, a.renormalize)?;
    let sidecar = read_sidecar(&a.input);

    let filter = if a.no_filter {
        None
    } else {
        let mut f = FilterSpec::eta(a.eta).with_entropy(a.entropy_min, a.entropy_max);
        if let Some(w) = a.argmax {
            f = f.with_argmax(w);
        }
        Some(f)
    };
    let metric: Metric = a.metric.into();
    let m_groups = if a.no_reduce { None } else { Some(a.m_groups) };
    let opts = EstimateOptions {
        filter,
        m_groups,
        metric,
        n_edges: a.edges,
        region: a.region,
        min_points: a.min_points,
        convergence: a.convergence,
    };
    let seed = a.seed.or(sidecar.as_ref().map(|s| s.seed));

    eprintln!(
        "config: input={} rows={} dim={} metric={} filter={} m_groups={} edges={} region={} min_points={} threads={} seed={}",
        a.input.display(),
        seq.n_steps(),
        seq.dim(),
        metric.name(),
        match &opts.filter {
            None => "none".to_string(),
            Some(f) => describe_filter(f),
        },
        m_groups.map_or("none".into(), |m| m.to_string()),
        opts.n_edges,
        opts.region.map_or("auto".into(), |(l, h)| format!("{l},{h}")),
        opts.min_points,
        rayon::current_num_threads(),
        seed.map_or("none".into(), |s| s.to_string()),
    );
    if let Some(eta) = sidecar.as_ref().and_then(|s| s.recommended_eta) {
        if opts.filter.as_ref().is_some_and(|f| f.eta != eta) {
            eprintln!("note: the generator recommends --eta {eta} for this sequence");
        }
    }

    let report = estimate(&seq, &opts)?;

    if curve_only {
        match &a.output {
            Some(p) => write_curve_tsv(&report.curve, p)?,
            None => print!("{}", report.curve.to_tsv()),
        }
        return Ok(EXIT_OK);
    }

    let eta = opts.filter.as_ref().map(|f| f.eta);
    let record = EstimateRecord::from_report(&report, metric, eta, m_groups, seed);
    eprintln!(
        "nu_hat={:.4} r2={:.4} window=[{:.4e}, {:.4e}] points={} of {}{}",
        record.nu_hat,
        record.r_squared,
        record.fit_lo,
        record.fit_hi,
        report.n_points,
        report.n_input,
        report
            .nu_hat_half
            .map_or(String::new(), |h| format!(" half={h:.4}")),
    );
    match &a.output {
        Some(p) => write_estimate_json(&record, p)?,
        None => println!(
            "{}",
            serde_json::to_string_pretty(&record).map_err(Error::from)?
        ),
    }
    if let Some(p) = &a.curve {
        write_curve_tsv(&report.curve, p)?;
    }
    Ok(EXIT_OK)
}

fn describe_filter(f: &FilterSpec) -> String {
    let mut s = match f.argmax_word {
        None => format!("max<{}", f.eta),
        Some(w) => format!("argmax={w},max>{}", f.eta),
    };
    if let Some(lo) = f.entropy_min {
        s += &format!(",H>={lo}");
    }
    if let Some(hi) = f.entropy_max {
        s += &format!(",H<={hi}");
    }
    s
}

fn validate_cmd(a: ValidateArgs) -> CmdResult {
    let loaded = read_sequence_raw(&a.input)?;
    let tol = a.tolerance.unwrap_or_else(|| loaded.tolerance());
    let bad = validate(&loaded.sequence, tol);
    let seq = &loaded.sequence;
    if bad.is_empty() {
        println!(
            "ok: {} rows x {} (tolerance {tol:e})",
            seq.n_steps(),
            seq.dim()
        );
        return Ok(EXIT_OK);
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for v in bad.iter().take(a.limit) {
        let _ = writeln!(out, "{v}");
    }
    if bad.len() > a.limit {
        let _ = writeln!(out, "... {} more", bad.len() - a.limit);
    }
    let _ = writeln!(out, "{} violation(s) in {} rows", bad.len(), seq.n_steps());
    Ok(EXIT_DATA)
}

fn reduce_cmd(a: ReduceArgs) -> CmdResult {
    let loaded = read_sequence_raw(&a.input)?;
    let tol = a.tolerance.unwrap_or_else(|| loaded.tolerance());
    let bad = validate(&loaded.sequence, tol);
    if !bad.is_empty() {
        return Err(Error::Validation(bad).into());
    }
    let dtype = a
        .dtype
        .map(Dtype::from)
        .or(loaded.dtype)
        .unwrap_or(Dtype::F64);
    let spec = ReductionSpec::capped(a.m_groups, loaded.sequence.dim())?;
    let reduced = project_sequence(&loaded.sequence, &spec)?;
    write_pseq(&reduced, &a.output, dtype)?;
    eprintln!(
        "reduced {} -> {} columns, wrote {}",
        loaded.sequence.dim(),
        reduced.dim(),
        a.output.display()
    );
    Ok(EXIT_OK)
}

fn verify(a: VerifyArgs) -> CmdResult {
    let checks = run_suite(a.seed)?;
    let mut failed = 0;
    for c in &checks {
        if a.json {
            println!("{}", serde_json::to_string(c).map_err(Error::from)?);
        } else {
            println!("{c}");
        }
        if !c.passed {
            failed += 1;
        }
    }
    eprintln!(
        "{} of {} checks passed",
        checks.len() - failed,
        checks.len()
    );
    Ok(if failed == 0 { EXIT_OK } else { EXIT_VERIFY })
}
