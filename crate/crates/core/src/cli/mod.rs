//! Command-line front end.
//!
//! Each invocation runs one job: read the named matrix files, call the
//! library, and write a JSON report with the result, its residual
//! diagnostics and a verdict. Exit status: 0 success, 1 input errors,
//! 2 mathematically infeasible problems, 3 numerical failures.

pub mod parse;
pub mod report;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use nalgebra::{Complex, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::compatibility::{a_hermitian_residual, family, is_compatible};
use crate::douglas::oblique_pinv;
use crate::error::Error;
use crate::least_squares::{a1a2_lss, a_lss, blue, optimal_lss};
use crate::linalg::{numeric_rank, pinv, quadratic_form, relative, ObliqueProjection, Subspace, Tolerances};
use crate::weighted_inverse::{verify_gi, wgi_family};

use parse::{parse_matrix_str, ParseError, ParsedMatrix};
use report::CliScalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Command {
    Pinv,
    Wpinv,
    Compat,
    Oblique,
    Lss,
    Alss,
    Blue,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Pinv => "pinv",
            Command::Wpinv => "wpinv",
            Command::Compat => "compat",
            Command::Oblique => "oblique",
            Command::Lss => "lss",
            Command::Alss => "alss",
            Command::Blue => "blue",
            Command::Verify => "verify",
        }
    }

    pub fn required_inputs(self) -> &'static [&'static str] {
        match self {
            Command::Pinv => &["B"],
            Command::Wpinv => &["B", "A1", "A2"],
            Command::Compat => &["A", "S"],
            Command::Oblique => &["B", "P", "Q"],
            Command::Lss => &["B", "A2", "y"],
            Command::Alss => &["B", "A1", "A2", "y"],
            Command::Blue => &["B", "V2", "c"],
            Command::Verify => &["B", "A1", "A2", "C"],
        }
    }

    pub fn optional_inputs(self) -> &'static [&'static str] {
        match self {
            Command::Wpinv => &["z1", "z2"],
            _ => &[],
        }
    }
}

/// A fully specified invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct JobSpec {
    pub command: Command,
    pub inputs: BTreeMap<String, PathBuf>,
    pub tol: Tolerances,
    pub output_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub samples: usize,
    pub pretty: bool,
}

impl JobSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        let cmd = self.command;
        for name in cmd.required_inputs() {
            if !self.inputs.contains_key(*name) {
                return Err(CliError::Usage(format!("{} needs --{name}", cmd.name())));
            }
        }
        for name in self.inputs.keys() {
            let known = cmd.required_inputs().contains(&name.as_str()) || cmd.optional_inputs().contains(&name.as_str());
            if !known {
                return Err(CliError::Usage(format!("{} does not take --{name}", cmd.name())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Compute(#[from] Error),
}

impl CliError {
    /// `(kind, exit code)`.
    fn classify(&self) -> (&'static str, i32) {
        match self {
            CliError::Usage(_) => ("usage", 1),
            CliError::Parse(_) => ("input", 1),
            CliError::Compute(e) => match e {
                Error::NonFinite | Error::Dimension(_) | Error::InvalidTolerance(_) => ("input", 1),
                Error::Convergence(_) | Error::Incompatible(_) => ("numerical", 3),
                _ => ("infeasible", 2),
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.classify().1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Verdict {
    Ok,
    NotMember,
    Fail,
}

impl Verdict {
    fn label(self) -> &'static str {
        match self {
            Verdict::Ok => "ok",
            Verdict::NotMember => "not-member",
            Verdict::Fail => "fail",
        }
    }

    fn exit_code(self) -> i32 {
        match self {
            Verdict::Ok | Verdict::NotMember => 0,
            Verdict::Fail => 3,
        }
    }

    fn check(ok: bool) -> Self {
        if ok {
            Verdict::Ok
        } else {
            Verdict::Fail
        }
    }
}

struct Outcome {
    result: Value,
    diagnostics: Value,
    verdict: Verdict,
}

/// Parses arguments (the first is the program name), runs the job and
/// returns the exit status.
pub fn main_from_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match cli.into_job() {
        Ok(job) => run(&job),
        Err(e) => {
            eprintln!("wginv: {e}");
            e.exit_code()
        }
    }
}

/// Runs one job, writes its report and returns the exit status.
pub fn run(job: &JobSpec) -> i32 {
    let mut inputs = BTreeMap::new();
    let outcome = job.validate().and_then(|()| execute(job, &mut inputs));
    let mut doc = json!({
        "command": job.command.name(),
        "inputs": inputs,
        "tolerances": job.tol,
        "seed": job.seed,
        "samples": job.samples,
    });
    let code = match outcome {
        Ok(o) => {
            doc["result"] = o.result;
            doc["diagnostics"] = o.diagnostics;
            doc["verdict"] = json!(o.verdict.label());
            o.verdict.exit_code()
        }
        Err(e) => {
            eprintln!("wginv: {e}");
            let (kind, code) = e.classify();
            doc["error"] = json!({"kind": kind, "message": e.to_string()});
            doc["verdict"] = json!("error");
            code
        }
    };
    let mut text = if job.pretty {
        serde_json::to_string_pretty(&doc)
    } else {
        serde_json::to_string(&doc)
    }
    .expect("report values are finite");
    text.push('\n');
    let written = match &job.output_path {
        Some(path) => std::fs::write(path, text.as_bytes()),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    match written {
        Ok(()) => code,
        Err(e) => {
            eprintln!("wginv: cannot write report: {e}");
            1
        }
    }
}

fn execute(job: &JobSpec, summary: &mut BTreeMap<String, Value>) -> Result<Outcome, CliError> {
    let mut parsed = BTreeMap::new();
    for (name, path) in &job.inputs {
        let label = path.display().to_string();
        let bytes = std::fs::read(path).map_err(|e| ParseError::Io {
            path: label.clone(),
            message: e.to_string(),
        })?;
        let text = String::from_utf8(bytes.clone()).map_err(|_| ParseError::Io {
            path: label.clone(),
            message: "not valid UTF-8".into(),
        })?;
        let m = parse_matrix_str(&text, &label)?;
        let (rows, cols) = m.shape();
        summary.insert(
            name.clone(),
            json!({
                "path": label,
                "sha256": hex::encode(Sha256::digest(&bytes)),
                "rows": rows,
                "cols": cols,
                "complex": m.is_complex(),
            }),
        );
        parsed.insert(name.clone(), m);
    }
    if parsed.values().any(ParsedMatrix::is_complex) {
        let inputs = parsed.into_iter().map(|(k, m)| (k, m.to_complex())).collect();
        dispatch::<Complex<f64>>(job, &Inputs(inputs))
    } else {
        let inputs = parsed
            .into_iter()
            .map(|(k, m)| match m {
                ParsedMatrix::Real(m) => (k, m),
                ParsedMatrix::Complex(_) => unreachable!(),
            })
            .collect();
        dispatch::<f64>(job, &Inputs(inputs))
    }
}

struct Inputs<T: CliScalar>(BTreeMap<String, DMatrix<T>>);

impl<T: CliScalar> Inputs<T> {
    fn matrix(&self, name: &str) -> &DMatrix<T> {
        &self.0[name]
    }

    fn optional(&self, name: &str) -> Option<&DMatrix<T>> {
        self.0.get(name)
    }

    /// Accepts a single row or a single column.
    fn vector(&self, name: &str) -> Result<DVector<T>, CliError> {
        let m = self.matrix(name);
        if m.ncols() == 1 || m.nrows() == 1 {
            Ok(DVector::from_iterator(m.len(), m.iter().copied()))
        } else {
            Err(Error::Dimension(format!("{name} must be a vector, got {}x{}", m.nrows(), m.ncols())).into())
        }
    }
}

fn dispatch<T: CliScalar>(job: &JobSpec, inputs: &Inputs<T>) -> Result<Outcome, CliError> {
    let tol = &job.tol;
    let res = tol.residual_rel();
    let mut rng = ChaCha8Rng::seed_from_u64(job.seed.unwrap_or(0));
    let b = || inputs.matrix("B");
    match job.command {
        Command::Pinv => {
            let b = b();
            let c = pinv(b, tol)?;
            let (n, m) = (b.ncols(), b.nrows());
            let r = verify_gi(b, &DMatrix::identity(n, n), &DMatrix::identity(m, m), &c, tol)?;
            Ok(Outcome {
                result: json!({"pinv": report::matrix(&c), "rank": numeric_rank(b, tol)?}),
                diagnostics: json!({"residuals": r}),
                verdict: Verdict::check(r.member),
            })
        }
        Command::Wpinv => {
            let (a1, a2) = (inputs.matrix("A1"), inputs.matrix("A2"));
            let fam = wgi_family(b(), a1, a2, tol)?;
            let (s1, s2) = fam.parameter_shapes();
            let z1 = inputs.optional("z1").cloned().unwrap_or_else(|| DMatrix::zeros(s1.0, s1.1));
            let z2 = inputs.optional("z2").cloned().unwrap_or_else(|| DMatrix::zeros(s2.0, s2.1));
            let c = fam.member(&z1, &z2)?;
            let r = verify_gi(b(), a1, a2, &c, tol)?;
            let mut ok = r.member;
            let mut diagnostics = json!({"residuals": r});
            if job.samples > 0 {
                let mut worst: f64 = 0.0;
                for _ in 0..job.samples {
                    let z1 = report::random_matrix::<T, _>(&mut rng, s1);
                    let z2 = report::random_matrix::<T, _>(&mut rng, s2);
                    let sample = verify_gi(b(), a1, a2, &fam.member(&z1, &z2)?, tol)?;
                    worst = worst.max(sample.max());
                }
                ok &= worst <= res;
                diagnostics["sampled_max_residual"] = json!(worst);
            }
            Ok(Outcome {
                result: json!({
                    "solution": report::matrix(&c),
                    "canonical": inputs.optional("z1").is_none() && inputs.optional("z2").is_none(),
                    "parameter_shapes": {"null_side": report::shape(s1), "range_side": report::shape(s2)},
                    "parameter_dim": fam.parameter_dim(),
                    "singleton": fam.is_singleton(),
                }),
                diagnostics,
                verdict: Verdict::check(ok),
            })
        }
        Command::Compat => {
            let a = inputs.matrix("A");
            let s = Subspace::span(inputs.matrix("S"), tol)?;
            let compatible = is_compatible(a, &s, tol)?;
            let fam = family(a, &s, tol)?;
            let q = fam.canonical();
            let defect = q.idempotency_defect();
            let hermitian = a_hermitian_residual(a, q.matrix());
            let outside = relative(s.distance_of(q.matrix()), q.matrix().norm());
            Ok(Outcome {
                result: json!({
                    "projection": report::matrix(q.matrix()),
                    "compatible": compatible,
                    "subspace_dim": s.dim(),
                    "nullspace_dim": q.nullspace().dim(),
                    "free_dim": fam.free_target().dim(),
                    "parameter_shape": report::shape(fam.parameter_shape()),
                    "parameter_dim": fam.parameter_dim(),
                    "singleton": fam.is_singleton(),
                }),
                diagnostics: json!({
                    "idempotency_defect": defect,
                    "a_hermitian_residual": hermitian,
                    "range_residual": outside,
                }),
                verdict: Verdict::check(compatible && defect.max(hermitian).max(outside) <= res),
            })
        }
        Command::Oblique => {
            let (p, q) = (inputs.matrix("P"), inputs.matrix("Q"));
            let pp = ObliqueProjection::from_matrix(p.clone(), tol)?;
            let qq = ObliqueProjection::from_matrix(q.clone(), tol)?;
            let c = oblique_pinv(b(), &pp, &qq, tol)?;
            let bc = relative((b() * &c - p).norm(), p.norm());
            let cb = relative((&c * b() - q).norm(), q.norm());
            Ok(Outcome {
                result: json!({"solution": report::matrix(&c)}),
                diagnostics: json!({"bc_minus_p": bc, "cb_minus_q": cb}),
                verdict: Verdict::check(bc.max(cb) <= res),
            })
        }
        Command::Lss => {
            let a2 = inputs.matrix("A2");
            let y = inputs.vector("y")?;
            let set = a_lss(b(), a2, &y, tol)?;
            let gradient = gradient_residual(b(), a2, set.particular(), &y);
            Ok(Outcome {
                result: json!({
                    "solution": report::vector(set.particular()),
                    "branch": set.branch(),
                    "solution_space_dim": set.directions().dim(),
                    "null_space_dim": set.translate().dim(),
                }),
                diagnostics: json!({
                    "a2_residual": set.residual(),
                    "a2_residual_sq": set.residual_sq(),
                    "gradient_residual": gradient,
                }),
                verdict: Verdict::check(gradient <= res),
            })
        }
        Command::Alss => {
            let (a1, a2) = (inputs.matrix("A1"), inputs.matrix("A2"));
            let y = inputs.vector("y")?;
            let f = a1a2_lss(b(), a1, a2, &y, tol)?;
            let opt = optimal_lss(b(), a1, a2, &y, tol)?;
            let gradient = gradient_residual(b(), a2, f.canonical(), &y);
            let mut ok = gradient <= res;
            let mut diagnostics = json!({
                "a2_residual_sq": f.a2_residual_sq(),
                "a1_seminorm_sq": f.a1_seminorm_sq(),
                "gradient_residual": gradient,
                "optimal_a2_residual_sq": opt.a2_residual_sq,
                "optimal_a1_seminorm_sq": opt.a1_seminorm_sq,
            });
            if job.samples > 0 {
                let scale2 = a2.norm() * y.norm_squared();
                let mut worst: f64 = 0.0;
                for _ in 0..job.samples {
                    let z = report::random_matrix::<T, _>(&mut rng, f.family().parameter_shape());
                    let x = f.member(&z)?;
                    let d2 = (quadratic_form(a2, &(b() * &x - &y)) - f.a2_residual_sq()).abs();
                    let d1 = (quadratic_form(a1, &x) - f.a1_seminorm_sq()).abs();
                    worst = worst
                        .max(relative(d2, scale2))
                        .max(relative(d1, a1.norm() * x.norm_squared()));
                }
                ok &= worst <= res;
                diagnostics["sampled_max_deviation"] = json!(worst);
            }
            Ok(Outcome {
                result: json!({
                    "solution": report::vector(f.canonical()),
                    "optimal": report::vector(&opt.solution),
                    "branch": f.branch(),
                    "solution_space_dim": f.lss().directions().dim(),
                    "minimizer_space_dim": f.family().free_target().dim(),
                    "fibers_coincide": f.fibers_coincide(),
                }),
                diagnostics,
                verdict: Verdict::check(ok),
            })
        }
        Command::Blue => {
            let v2 = inputs.matrix("V2");
            let c = inputs.vector("c")?;
            let g = blue(b(), v2, &c, tol)?;
            Ok(Outcome {
                result: json!({
                    "estimate": report::vector(g.estimate()),
                    "objective": g.objective(),
                    "branch": g.branch(),
                }),
                diagnostics: json!({"feasibility_residual": g.feasibility_residual()}),
                verdict: Verdict::check(g.feasibility_residual() <= res),
            })
        }
        Command::Verify => {
            let r = verify_gi(b(), inputs.matrix("A1"), inputs.matrix("A2"), inputs.matrix("C"), tol)?;
            Ok(Outcome {
                result: json!({"member": r.member}),
                diagnostics: json!({"residuals": r}),
                verdict: if r.member { Verdict::Ok } else { Verdict::NotMember },
            })
        }
    }
}

/// `||B^H A (B u - y)|| / (||B|| ||A|| (||B|| ||u|| + ||y||))`.
fn gradient_residual<T: CliScalar>(b: &DMatrix<T>, a: &DMatrix<T>, u: &DVector<T>, y: &DVector<T>) -> f64 {
    let g = b.adjoint() * (a * (b * u - y));
    let nb = b.norm();
    relative(g.norm(), nb * a.norm() * (nb * u.norm() + y.norm()))
}

#[derive(Parser, Debug)]
#[command(name = "wginv", version, about = "Weighted generalized inverses and seminorm least squares")]
struct Cli {
    #[command(subcommand)]
    command: CommandArgs,
}

#[derive(Args, Debug)]
struct Common {
    /// Relative rank cutoff.
    #[arg(long = "rank-tol", default_value_t = 1e-12)]
    rank_tol: f64,
    /// Relative residual tolerance.
    #[arg(long = "res-tol", default_value_t = 1e-8)]
    res_tol: f64,
    /// Report path; standard output when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Indented JSON.
    #[arg(long)]
    pretty: bool,
    /// Seed for sampled family members.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of random family members to check.
    #[arg(long, default_value_t = 0)]
    samples: usize,
}

#[derive(Subcommand, Debug)]
enum CommandArgs {
    /// Moore-Penrose inverse of B.
    Pinv {
        #[arg(long = "B")]
        b: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Weighted generalized inverse (I - Q) B^† P; canonical unless z1/z2 are given.
    Wpinv {
        #[arg(long = "B")]
        b: PathBuf,
        #[arg(long = "A1")]
        a1: PathBuf,
        #[arg(long = "A2")]
        a2: PathBuf,
        /// Null-side family parameter.
        #[arg(long = "z1")]
        z1: Option<PathBuf>,
        /// Range-side family parameter.
        #[arg(long = "z2")]
        z2: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Canonical A-Hermitian projection onto the column span of S.
    Compat {
        #[arg(long = "A")]
        a: PathBuf,
        #[arg(long = "S")]
        s: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Oblique pseudoinverse Q B^† P.
    Oblique {
        #[arg(long = "B")]
        b: PathBuf,
        #[arg(long = "P")]
        p: PathBuf,
        #[arg(long = "Q")]
        q: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// A2-least squares solution of B x = y.
    Lss {
        #[arg(long = "B")]
        b: PathBuf,
        #[arg(long = "A2")]
        a2: PathBuf,
        #[arg(long = "y")]
        y: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// A1 A2-least squares solution of B x = y.
    Alss {
        #[arg(long = "B")]
        b: PathBuf,
        #[arg(long = "A1")]
        a1: PathBuf,
        #[arg(long = "A2")]
        a2: PathBuf,
        #[arg(long = "y")]
        y: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Best linear unbiased estimator: min <V2 g, g> subject to B^H g = c.
    Blue {
        #[arg(long = "B")]
        b: PathBuf,
        #[arg(long = "V2")]
        v2: PathBuf,
        #[arg(long = "c")]
        c: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Residuals of a candidate C in the weighted system.
    Verify {
        #[arg(long = "B")]
        b: PathBuf,
        #[arg(long = "A1")]
        a1: PathBuf,
        #[arg(long = "A2")]
        a2: PathBuf,
        #[arg(long = "C")]
        c: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

impl Cli {
    fn into_job(self) -> Result<JobSpec, CliError> {
        let mut inputs = BTreeMap::new();
        let mut put = |k: &str, v: PathBuf| {
            inputs.insert(k.to_string(), v);
        };
        let (command, common) = match self.command {
            CommandArgs::Pinv { b, common } => {
                put("B", b);
                (Command::Pinv, common)
            }
            CommandArgs::Wpinv { b, a1, a2, z1, z2, common } => {
                put("B", b);
                put("A1", a1);
                put("A2", a2);
                if let Some(z) = z1 {
                    put("z1", z);
                }
                if let Some(z) = z2 {
                    put("z2", z);
                }
                (Command::Wpinv, common)
            }
            CommandArgs::Compat { a, s, common } => {
                put("A", a);
                put("S", s);
                (Command::Compat, common)
            }
            CommandArgs::Oblique { b, p, q, common } => {
                put("B", b);
                put("P", p);
                put("Q", q);
                (Command::Oblique, common)
            }
            CommandArgs::Lss { b, a2, y, common } => {
                put("B", b);
                put("A2", a2);
                put("y", y);
                (Command::Lss, common)
            }
            CommandArgs::Alss { b, a1, a2, y, common } => {
                put("B", b);
                put("A1", a1);
                put("A2", a2);
                put("y", y);
                (Command::Alss, common)
            }
            CommandArgs::Blue { b, v2, c, common } => {
                put("B", b);
                put("V2", v2);
                put("c", c);
                (Command::Blue, common)
            }
            CommandArgs::Verify { b, a1, a2, c, common } => {
                put("B", b);
                put("A1", a1);
                put("A2", a2);
                put("C", c);
                (Command::Verify, common)
            }
        };
        Ok(JobSpec {
            command,
            inputs,
            tol: Tolerances::new(common.rank_tol, common.res_tol)?,
            output_path: common.output,
            seed: common.seed,
            samples: common.samples,
            pretty: common.pretty,
        })
    }
}
