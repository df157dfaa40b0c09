//! Command-line front end: argument grammar, command execution and the
//! exit-code contract. The binary is a thin wrapper around [`main_with_args`].

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::ansatz::{build_ansatz, AnsatzData};
use crate::asymptotics::{decay_fit, ray, ray_csv, ricci_flat_test, xi_growth_check, AleExpansion};
use crate::config::{OutputFormat, RunConfig};
use crate::lattice::{lattice_index, Lattice};
use crate::polytope::wps_lattice;
use crate::report::VerificationReport;
use crate::surface::{conformal_factor_check, polynomial_fit, polynomiality_check, surface_json, SurfaceData};
use crate::typej::{classify, validate_tree, ResolutionTree, TypeJVerdict};
use crate::verify::{
    abreu_check, boundary_report, det_factorization, hessian_check, positivity_check, vandermonde_check,
};
use crate::weights::{validate_weight_vector, GroupedWeights, WeightVector};
use crate::{Error, Result};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_BAD_INPUT: i32 = 2;
pub const EXIT_UNKNOWN: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// Checks accepted by `verify --checks`.
pub const CHECKS: &[&str] =
    &["abreu", "boundary", "positivity", "det", "hessian", "vandermonde", "lattice", "asymptotics", "xi_growth"];

#[derive(Parser, Debug)]
#[command(name = "toric-ale", version, about = "Scalar-flat toric ALE metrics: classification and verification")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default, Clone)]
pub struct CommonArgs {
    /// `key = value` configuration file; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// JSON output (default except for `ray`).
    #[arg(long, global = true, conflicts_with_all = ["dot", "csv"])]
    pub json: bool,
    /// Graphviz output of the resolution tree (`classify` only).
    #[arg(long, global = true, conflicts_with = "csv")]
    pub dot: bool,
    /// CSV output: tree edges, check summaries, surface reports or ray samples.
    #[arg(long, global = true)]
    pub csv: bool,
    /// Offset of the quasi-random sample points.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Record wall time in reports (makes output non-reproducible).
    #[arg(long, global = true)]
    pub timing: bool,
    /// Extra `key=value` overrides, applied after the file and environment.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide whether the cyclic singularity C^m/Γ_b is of type J.
    Classify {
        /// Weight vector `b_0 b_1 … b_m`.
        #[arg(required = true, num_args = 2.., allow_negative_numbers = true)]
        weights: Vec<i64>,
    },
    /// Run numerical and exact checks on the metric of a weight vector.
    Verify {
        #[command(flatten)]
        weights: WeightArgs,
        /// Comma-separated subset of: abreu, boundary, positivity, det,
        /// hessian, vandermonde, lattice, asymptotics, xi_growth.
        #[arg(long, default_value = "abreu,boundary,positivity", value_delimiter = ',')]
        checks: Vec<String>,
    },
    /// Complex-surface data: Bochner-flat dual, λ_a, weighted normals.
    Surface {
        #[arg(num_args = 3, allow_negative_numbers = true, required = true)]
        weights: Vec<i64>,
    },
    /// Kähler potential along a ray to infinity (CSV by default).
    Ray {
        #[command(flatten)]
        weights: WeightArgs,
    },
}

#[derive(Args, Debug, Clone)]
pub struct WeightArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub a0: i64,
    /// Weights; repeated values encode multiplicities.
    #[arg(long = "w", num_args = 1.., required = true, allow_negative_numbers = true)]
    pub w: Vec<i64>,
    /// Use the flat cone model instead of the ALE metric.
    #[arg(long)]
    pub flat: bool,
}

/// Rendered output of a command.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub exit_code: i32,
}

impl Outcome {
    fn new(stdout: String, exit_code: i32) -> Self {
        Outcome { stdout, exit_code }
    }
}

/// Maps library errors onto the exit-code contract.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Numeric(_) | Error::Domain(_) => EXIT_NUMERIC,
        _ => EXIT_BAD_INPUT,
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

impl CommonArgs {
    fn format(&self, cfg: &RunConfig) -> OutputFormat {
        if self.json {
            OutputFormat::Json
        } else if self.dot {
            OutputFormat::Dot
        } else if self.csv {
            OutputFormat::Csv
        } else {
            cfg.format
        }
    }

    /// Defaults, file, environment, then flags.
    pub fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(p) = &self.config {
            cfg.apply_file(p)?;
        }
        cfg.apply_env()?;
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("`--set {kv}`: expected KEY=VALUE")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        if let Some(seed) = self.seed {
            cfg.verify.seed = seed;
        }
        if self.timing {
            cfg.verify.timing = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn unsupported(format: OutputFormat, command: &str) -> Error {
    Error::Config(format!("`{command}` has no {format} output"))
}

// ----- classify ------------------------------------------------------------

fn tree_edges_csv(tree: &ResolutionTree) -> String {
    fn walk(t: &ResolutionTree, out: &mut String) {
        for (slot, child) in &t.children {
            let join = |w: &[i64]| w.iter().map(i64::to_string).collect::<Vec<_>>().join(" ");
            out.push_str(&format!("{},{},{}\n", join(&t.weights), slot, join(&child.weights)));
            walk(child, out);
        }
    }
    let mut out = String::from("parent,slot,child\n");
    walk(tree, &mut out);
    out
}

pub fn cmd_classify(weights: &[i64], cfg: &RunConfig, format: OutputFormat) -> Result<Outcome> {
    let b = WeightVector::from_slice(weights)?;
    if !validate_weight_vector(&b).positive {
        return Err(Error::InvalidWeights(format!("{b}: entries must be positive")));
    }
    let verdict = classify(&b, &cfg.classifier)?;
    let code = if verdict.is_yes() { EXIT_PASS } else { EXIT_UNKNOWN };
    let text = match (&verdict, format) {
        (_, OutputFormat::Json) => {
            let mut v = serde_json::to_value(&verdict).expect("verdict serializes");
            v["weights"] = json!(weights);
            if let Some(t) = verdict.tree() {
                v["tree_valid"] = json!(validate_tree(t, cfg.classifier.unit_canonicalization).is_ok());
                v["depth"] = json!(t.depth());
            }
            pretty(&v)
        }
        (TypeJVerdict::Yes { tree }, OutputFormat::Dot) => tree.to_dot(),
        (TypeJVerdict::Yes { tree }, OutputFormat::Csv) => tree_edges_csv(tree),
        (TypeJVerdict::Unknown { .. }, OutputFormat::Dot) => "digraph typej {\n}\n".to_string(),
        (TypeJVerdict::Unknown { .. }, OutputFormat::Csv) => "parent,slot,child\n".to_string(),
    };
    Ok(Outcome::new(text, code))
}

// ----- verify --------------------------------------------------------------

fn grouped(args: &WeightArgs) -> Result<GroupedWeights> {
    let g = GroupedWeights::group(args.a0, &args.w)?;
    let validity = validate_weight_vector(&g.weight_vector());
    if !validity.valid() {
        return Err(Error::InvalidWeights(format!("{g}: {validity:?}")));
    }
    Ok(g)
}

fn lattice_report(data: &AnsatzData) -> Result<VerificationReport> {
    let g = &data.weights;
    let index = lattice_index(&wps_lattice(g)?, &Lattice::standard(g.ell()))?;
    let expected = num_bigint::BigInt::from(g.c()).pow(g.ell() as u32 - 1);
    let ok = index == expected;
    let r = VerificationReport::new("lattice", if ok { 0.0 } else { 1.0 }, 0.0, 1)
        .with_detail("index", index.to_string())
        .with_detail("expected", expected.to_string());
    Ok(r)
}

/// Pass rule for the asymptotic fit: on Ricci-flat or flat data the leading
/// coefficient must vanish below the noise threshold; otherwise it must match
/// the closed form (and the exponent, for `m ≥ 3`) within the fit tolerances.
pub fn asymptotics_report(data: &AnsatzData, fit: &AleExpansion, cfg: &RunConfig) -> VerificationReport {
    let expect_zero = data.flat || fit.ricci_flat_exact;
    let coefficient_error = fit.coefficient_relative_error();
    let exponent_error = fit.exponent_relative_error();
    let (residual, tol) = if expect_zero {
        (fit.fitted_coefficient.abs() / fit.noise_scale.max(f64::MIN_POSITIVE), crate::asymptotics::RICCI_FLAT_THRESHOLD)
    } else {
        (coefficient_error, cfg.fit_coefficient_tol)
    };
    let mut r = VerificationReport::new("asymptotics", residual, tol, cfg.ray.points)
        .with_detail("m", fit.m)
        .with_detail("linear_coefficient", fit.linear_coefficient.clone())
        .with_detail("closed_coefficient", fit.closed_coefficient)
        .with_detail("fitted_coefficient", fit.fitted_coefficient)
        .with_detail("fit_residual", fit.fit_residual)
        .with_detail("ricci_flat_exact", fit.ricci_flat_exact)
        .with_detail("ricci_flat_fit", fit.ricci_flat_fit)
        .with_detail("ricci_flat", serde_json::to_value(ricci_flat_test(&data.weights)).expect("serializes"));
    if let (Some(e), Some(fe)) = (fit.expected_exponent, fit.fitted_exponent) {
        r = r.with_detail("expected_exponent", e).with_detail("fitted_exponent", fe);
    }
    if !expect_zero {
        if fit.ricci_flat_fit {
            r = r.fail_because("leading coefficient vanished on data that is not Ricci-flat");
        } else if exponent_error.is_some_and(|e| e > cfg.fit_exponent_tol) {
            r = r.fail_because("fitted decay exponent outside tolerance");
        }
    }
    r
}

fn run_check(name: &str, data: &AnsatzData, cfg: &RunConfig) -> Result<VerificationReport> {
    let v = &cfg.verify;
    let start = Instant::now();
    Ok(match name {
        "abreu" => abreu_check(data, v),
        "boundary" => boundary_report(data, v),
        "positivity" => positivity_check(data, v),
        "det" => det_factorization(data, v),
        "hessian" => hessian_check(data, v),
        "vandermonde" => vandermonde_check(data),
        "lattice" => lattice_report(data)?.timed(start, v.timing),
        "asymptotics" => {
            let fit = decay_fit(data, &cfg.ray)?;
            asymptotics_report(data, &fit, cfg).timed(start, v.timing)
        }
        "xi_growth" => {
            let pts = ray(data, &cfg.ray)?;
            xi_growth_check(data, &pts, 1e-6).timed(start, v.timing)
        }
        other => return Err(Error::Config(format!("unknown check `{other}`; expected one of {CHECKS:?}"))),
    })
}

pub fn cmd_verify(args: &WeightArgs, checks: &[String], cfg: &RunConfig, format: OutputFormat) -> Result<Outcome> {
    for c in checks {
        if !CHECKS.contains(&c.as_str()) {
            return Err(Error::Config(format!("unknown check `{c}`; expected one of {CHECKS:?}")));
        }
    }
    if format == OutputFormat::Dot {
        return Err(unsupported(format, "verify"));
    }
    let g = grouped(args)?;
    let data = build_ansatz(&g, args.flat)?;
    let reports = checks.iter().map(|c| run_check(c, &data, cfg)).collect::<Result<Vec<_>>>()?;
    let pass = reports.iter().all(|r| r.pass);
    let text = match format {
        OutputFormat::Csv => {
            let mut s = String::from("check,max_residual,tolerance,pass,points\n");
            for r in &reports {
                s.push_str(&format!("{},{:e},{:e},{},{}\n", r.check, r.max_residual, r.tolerance, r.pass, r.points));
            }
            s
        }
        _ => pretty(&json!({
            "weights": { "a0": g.a0, "distinct": g.distinct, "multiplicities": g.mult },
            "flat": args.flat,
            "seed": cfg.verify.seed,
            "pass": pass,
            "reports": reports,
        })),
    };
    Ok(Outcome::new(text, if pass { EXIT_PASS } else { EXIT_FAIL }))
}

// ----- surface -------------------------------------------------------------

pub fn cmd_surface(weights: &[i64], cfg: &RunConfig, format: OutputFormat) -> Result<Outcome> {
    let [a0, a1, a2] = weights else {
        return Err(Error::InvalidWeights("surface takes exactly three weights a0 a1 a2".into()));
    };
    let validity = validate_weight_vector(&WeightVector::new(*a0, vec![*a1, *a2]));
    if !validity.valid() {
        return Err(Error::InvalidWeights(format!("({a0};{a1},{a2}): {validity:?}")));
    }
    let s = SurfaceData::new(*a0, *a1, *a2)?;
    let levels = cfg.verify.boundary_levels;
    let boundary = s.dual_boundary_residuals(levels)?;
    let worst = boundary.iter().fold(0.0f64, |w, r| {
        w.max((r.slope - 1.0).abs() / cfg.verify.boundary_slope_tol)
            .max(r.gradient_error / cfg.verify.boundary_grad_tol)
    });
    let boundary_report = VerificationReport::new("dual_boundary", worst, 1.0, boundary.len()).with_detail(
        "facets",
        boundary
            .iter()
            .map(|r| json!({"label": r.label, "slope": r.slope, "ratio_deviation": r.ratio_deviation, "gradient_error": r.gradient_error}))
            .collect::<Vec<_>>(),
    );
    let mut reports = vec![polynomiality_check(&s)?, conformal_factor_check(&s)?, boundary_report];
    if let Some(ok) = s.matches_ansatz()? {
        reports.push(VerificationReport::new("ansatz_cross_check", if ok { 0.0 } else { 1.0 }, 0.0, 1));
    }
    let pass = reports.iter().all(|r| r.pass);
    let text = match format {
        OutputFormat::Json => {
            let mut v = surface_json(&s)?;
            v["pass"] = json!(pass);
            v["reports"] = serde_json::to_value(&reports).expect("reports serialize");
            pretty(&v)
        }
        OutputFormat::Csv => {
            let fit = polynomial_fit(&s, 3)?;
            let mut out = String::from("entry,s1_power,s2_power,coefficient\n");
            for (name, coeffs) in ["h11", "h12", "h22"].iter().zip(&fit.coefficients) {
                for (&(i, j), c) in fit.exponents.iter().zip(coeffs) {
                    out.push_str(&format!("{name},{i},{j},{}\n", crate::rat_string(c)));
                }
            }
            out
        }
        OutputFormat::Dot => return Err(unsupported(format, "surface")),
    };
    Ok(Outcome::new(text, if pass { EXIT_PASS } else { EXIT_FAIL }))
}

// ----- ray -----------------------------------------------------------------

pub fn cmd_ray(args: &WeightArgs, cfg: &RunConfig, format: Option<OutputFormat>) -> Result<Outcome> {
    let g = grouped(args)?;
    let data = build_ansatz(&g, args.flat)?;
    let pts = ray(&data, &cfg.ray)?;
    let text = match format.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Csv => ray_csv(&pts),
        OutputFormat::Json => pretty(&json!(pts
            .iter()
            .map(|p| json!({"xi_ell": p.xi_ell, "norm_sq": p.norm_sq, "potential": p.potential, "deviation": p.deviation, "decaying": p.decaying}))
            .collect::<Vec<_>>())),
        OutputFormat::Dot => return Err(unsupported(OutputFormat::Dot, "ray")),
    };
    Ok(Outcome::new(text, EXIT_PASS))
}

/// Executes a parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = cli.common.run_config()?;
    let format = cli.common.format(&cfg);
    match &cli.command {
        Command::Classify { weights } => cmd_classify(weights, &cfg, format),
        Command::Verify { weights, checks } => cmd_verify(weights, checks, &cfg, format),
        Command::Surface { weights } => cmd_surface(weights, &cfg, format),
        Command::Ray { weights } => {
            let explicit = cli.common.json || cli.common.dot || cli.common.csv;
            cmd_ray(weights, &cfg, explicit.then_some(format))
        }
    }
}

/// Parses, runs and renders; returns (stdout, stderr, exit code).
pub fn main_with_args<I, T>(args: I) -> (String, String, i32)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_BAD_INPUT } else { EXIT_PASS };
            let text = e.render().to_string();
            return if e.use_stderr() { (String::new(), text, code) } else { (text, String::new(), code) };
        }
    };
    match run(&cli) {
        Ok(o) => (o.stdout, String::new(), o.exit_code),
        Err(e) => (String::new(), format!("error: {e}\n"), exit_code_for(&e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (String, String, i32) {
        main_with_args(std::iter::once("toric-ale").chain(args.iter().copied()))
    }

    #[test]
    fn classify_exit_codes() {
        assert_eq!(run_args(&["classify", "5", "3", "2", "1"]).2, EXIT_PASS);
        assert_eq!(run_args(&["classify", "7", "5", "1", "1"]).2, EXIT_PASS);
        assert_eq!(run_args(&["classify", "4", "2", "1"]).2, EXIT_BAD_INPUT);
        assert_eq!(run_args(&["classify", "x"]).2, EXIT_BAD_INPUT);
    }

    #[test]
    fn classify_dot_and_csv() {
        let (dot, _, code) = run_args(&["classify", "5", "3", "2", "1", "--dot"]);
        assert_eq!(code, 0);
        assert!(dot.starts_with("digraph"));
        let (csv, _, _) = run_args(&["classify", "5", "3", "2", "1", "--csv"]);
        assert!(csv.starts_with("parent,slot,child\n"));
        assert!(csv.lines().count() > 1);
    }

    #[test]
    fn surface_lambda() {
        let (out, _, code) = run_args(&["surface", "7", "2", "3"]);
        assert_eq!(code, 0, "{out}");
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["lambda_a"], "294");
        let (out, _, _) = run_args(&["surface", "5", "1", "1"]);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["lambda_a"], "1");
        assert_eq!(v["structure"]["kind"], "calabi");
    }

    #[test]
    fn bad_inputs() {
        assert_eq!(run_args(&["surface", "7", "2"]).2, EXIT_BAD_INPUT);
        assert_eq!(run_args(&["verify", "--a0", "4", "--w", "2", "2"]).2, EXIT_BAD_INPUT);
        assert_eq!(run_args(&["verify", "--a0", "5", "--w", "2", "3", "--checks", "nope"]).2, EXIT_BAD_INPUT);
        assert_eq!(run_args(&["verify", "--a0", "5", "--w", "2", "3", "--dot"]).2, EXIT_BAD_INPUT);
        assert_eq!(run_args(&["verify", "--a0", "5", "--w", "2", "3", "--set", "abreu_tol=-1"]).2, EXIT_BAD_INPUT);
    }

    #[test]
    fn verify_exact_checks() {
        let (out, _, code) =
            run_args(&["verify", "--a0", "5", "--w", "2", "3", "--checks", "vandermonde,lattice", "--csv"]);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("lattice,0e0,0e0,true,1"));
    }
}
