//! Command-line driver: parameter scans of the normalized two-particle
//! distribution, off-axis scans, beam-profile tables, experiment visibility
//! reports, and a validation suite comparing the numeric and closed-form
//! paths. Scans emit CSV (stdout or --out); reports emit text or JSON.

use std::fs;
use std::io::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use antibunch::beamprofile::{angular_half_width, farfield_amplitude, radial_integral_check};
use antibunch::collinear::{
    c_analytic, c_normalized, coherence_lengths, consistency_corrections, dip_depth,
    dip_half_width, CollinearSetup,
};
use antibunch::dists::Vec3;
use antibunch::experiments::{builtin_presets, dip_report, find_preset, render_report};
use antibunch::numerics::{saddle_theta0, theta_integral, QuadSpec, SaddleParams, ThetaMode};
use antibunch::offaxis::{appendix_oracles, c_offaxis, c_symmetric_pair};
use antibunch::params::{
    BeamSpec, DetectorSpec, Geometry, Method, ParamsFile, SourceSpec, Statistics,
};

#[derive(Parser)]
#[command(name = "antibunch", version, about = "Beam correlation calculator")]
struct Cli {
    /// Worker threads (default: ANTIBUNCH_THREADS or the processor count).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan C̄(z̄₁; z̄₂) over a z̄₁ grid for a swept parameter (d, a or beta).
    ScanCollinear(ScanCollinearArgs),
    /// Scan the off-axis closed form over the detector angle.
    ScanOffaxis(ScanOffaxisArgs),
    /// Tabulate the far-field beam profile |φ̂(α)| and optionally validate it
    /// against the regularized radial integral.
    BeamProfile(BeamProfileArgs),
    /// Visibility factors for a recorded experiment (NAME or 'all').
    Preset(PresetArgs),
    /// Run the internal consistency suites; nonzero exit on failure.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepVar {
    D,
    A,
    Beta,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Analytic,
    Gauss,
    Numeric,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Analytic => Method::Analytic,
            MethodArg::Gauss => Method::GaussianApprox,
            MethodArg::Numeric => Method::Numeric,
        }
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Analytic => "analytic",
        Method::GaussianApprox => "gauss",
        Method::Numeric => "numeric",
    }
}

/// 12 significant digits, reproducible across runs.
fn fmt_g(x: f64) -> String {
    format!("{x:.11e}")
}

#[derive(Args)]
struct ScanCollinearArgs {
    /// JSON scan configuration (see docs/params-schema.md).
    #[arg(long)]
    config: std::path::PathBuf,
    /// Override the swept variable.
    #[arg(long, value_enum)]
    sweep: Option<SweepVar>,
    /// Override the method list (repeatable).
    #[arg(long = "method", value_enum)]
    methods: Vec<MethodArg>,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Debug, Deserialize)]
struct ScanFile {
    params: ParamsFile,
    scan: ScanSpec,
}

#[derive(Debug, Deserialize)]
struct ScanSpec {
    z1_min: f64,
    z1_max: f64,
    points: usize,
    /// Reference detector position; defaults to the geometry's z2.
    z2: Option<f64>,
    #[serde(default = "default_sweep")]
    sweep: String,
    #[serde(default)]
    sweep_values: Vec<f64>,
    #[serde(default = "default_methods")]
    methods: Vec<String>,
    rel_tol: Option<f64>,
}

fn default_sweep() -> String {
    "d".into()
}

fn default_methods() -> Vec<String> {
    vec!["analytic".into()]
}

fn parse_method(name: &str) -> Result<Method, String> {
    match name {
        "analytic" => Ok(Method::Analytic),
        "gauss" => Ok(Method::GaussianApprox),
        "numeric" => Ok(Method::Numeric),
        other => Err(format!("unknown method '{other}' (analytic|gauss|numeric)")),
    }
}

fn quad_from(rel_tol: Option<f64>, default_rel: f64) -> (QuadSpec, Vec<String>) {
    let mut warnings = Vec::new();
    let rel = rel_tol.unwrap_or(default_rel);
    if rel >= 0.5 {
        warnings.push(format!(
            "configured rel_tol = {rel} is no tolerance at all; results will be noise-limited"
        ));
    }
    (QuadSpec::default().with_rel_tol(rel), warnings)
}

fn write_output(out: &Option<std::path::PathBuf>, text: &str) -> std::io::Result<()> {
    match out {
        Some(path) => fs::write(path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}

fn run_scan_collinear(args: &ScanCollinearArgs) -> Result<String, String> {
    let text = fs::read_to_string(&args.config).map_err(|e| format!("read config: {e}"))?;
    let file: ScanFile = serde_json::from_str(&text).map_err(|e| {
        format!("scan config: {e}\n(expected {{\"params\": {{...}}, \"scan\": {{...}}}})")
    })?;
    let (src, beam, det, geo) = file.params.resolve().map_err(|e| e.to_string())?;
    let z2 = match (file.scan.z2, geo) {
        (Some(z2), _) => z2,
        (None, Geometry::Collinear { z2, .. }) => z2,
        _ => return Err("scan-collinear needs collinear geometry or scan.z2".into()),
    };
    let sweep = match args.sweep {
        Some(SweepVar::D) => "d".to_string(),
        Some(SweepVar::A) => "a".to_string(),
        Some(SweepVar::Beta) => "beta".to_string(),
        None => file.scan.sweep.clone(),
    };
    if !matches!(sweep.as_str(), "d" | "a" | "beta") {
        return Err(format!("unknown sweep variable '{sweep}' (d|a|beta)"));
    }
    let sweep_values = if file.scan.sweep_values.is_empty() {
        vec![match sweep.as_str() {
            "d" => det.d,
            "a" => det.a,
            _ => src.beta,
        }]
    } else {
        file.scan.sweep_values.clone()
    };
    let methods: Vec<Method> = if args.methods.is_empty() {
        file.scan.methods.iter().map(|s| parse_method(s)).collect::<Result<_, _>>()?
    } else {
        args.methods.iter().map(|&m| m.into()).collect()
    };
    let (quad, warnings) = quad_from(file.scan.rel_tol, 1e-8);
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let n = file.scan.points;
    let z1s: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                file.scan.z1_min
            } else {
                file.scan.z1_min
                    + (file.scan.z1_max - file.scan.z1_min) * i as f64 / (n - 1) as f64
            }
        })
        .collect();

    // Deterministic ordering: cartesian (sweep, z1, method); the parallel
    // map preserves it through the ordered collect.
    let mut grid = Vec::new();
    for &sv in &sweep_values {
        for &z1 in &z1s {
            for &m in &methods {
                grid.push((sv, z1, m));
            }
        }
    }
    let rows: Vec<String> = grid
        .par_iter()
        .map(|&(sv, z1, m)| {
            let mut src = src;
            let mut det = det;
            match sweep.as_str() {
                "d" => det.d = sv,
                "a" => det.a = sv,
                _ => src.beta = sv,
            }
            let setup = match CollinearSetup::new(src, beam, det, z1, z2) {
                Ok(s) => s,
                Err(e) => return format!("# error at z1={z1}: {e}"),
            };
            match c_normalized(&setup, m, &quad) {
                Ok(c) => format!(
                    "{},{},{},{},{}",
                    fmt_g(sv),
                    fmt_g(z1),
                    method_name(m),
                    fmt_g(c.value),
                    fmt_g(c.abs_error)
                ),
                Err(e) => format!("# error at z1={z1}: {e}"),
            }
        })
        .collect();

    let mut csv = String::from("sweep_value,z1,method,c,abs_error\n");
    for r in rows {
        csv.push_str(&r);
        csv.push('\n');
    }
    Ok(csv)
}

#[derive(Args)]
struct ScanOffaxisArgs {
    #[arg(long)]
    config: std::path::PathBuf,
    /// Also evaluate the radial-quadrature oracle per row.
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Debug, Deserialize)]
struct OffaxisFile {
    params: ParamsFile,
    scan: OffaxisScan,
}

#[derive(Debug, Deserialize)]
struct OffaxisScan {
    theta_min: f64,
    theta_max: f64,
    points: usize,
    r1: f64,
    r2: f64,
    rel_tol: Option<f64>,
}

fn run_scan_offaxis(args: &ScanOffaxisArgs) -> Result<String, String> {
    let text = fs::read_to_string(&args.config).map_err(|e| format!("read config: {e}"))?;
    let file: OffaxisFile = serde_json::from_str(&text).map_err(|e| format!("scan config: {e}"))?;
    let (src, beam, det, _) = file.params.resolve().map_err(|e| e.to_string())?;
    let (quad, warnings) = quad_from(file.scan.rel_tol, 1e-8);
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let n = file.scan.points;
    let thetas: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                file.scan.theta_min
            } else {
                file.scan.theta_min
                    + (file.scan.theta_max - file.scan.theta_min) * i as f64 / (n - 1) as f64
            }
        })
        .collect();
    let rows: Vec<String> = thetas
        .par_iter()
        .map(|&th| {
            let c = c_offaxis(th, file.scan.r1, file.scan.r2, &src, &beam, &det);
            let base = format!(
                "{},{},{},{}",
                fmt_g(th),
                fmt_g(file.scan.r1),
                fmt_g(file.scan.r2),
                fmt_g(c)
            );
            if args.oracle {
                let oracle =
                    match appendix_oracles(th, file.scan.r1, file.scan.r2, &src, &beam, &det, &quad)
                    {
                        Ok(o) => fmt_g(o.c),
                        Err(_) => "nan".into(),
                    };
                format!("{base},{oracle}")
            } else {
                base
            }
        })
        .collect();
    let mut csv = String::from(if args.oracle {
        "theta_d,r1,r2,c,c_oracle\n"
    } else {
        "theta_d,r1,r2,c\n"
    });
    for r in rows {
        csv.push_str(&r);
        csv.push('\n');
    }
    Ok(csv)
}

#[derive(Args)]
struct BeamProfileArgs {
    #[arg(long)]
    config: std::path::PathBuf,
    /// Run the η-extrapolated radial-integral validation as well.
    #[arg(long)]
    check: bool,
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Debug, Deserialize)]
struct BeamProfileFile {
    params: ParamsFile,
    profile: ProfileSpec,
}

#[derive(Debug, Deserialize)]
struct ProfileSpec {
    /// Source momentum magnitude (directed along the beam axis).
    k: f64,
    r: f64,
    alpha_max: f64,
    points: usize,
    rel_tol: Option<f64>,
}

fn run_beam_profile(args: &BeamProfileArgs) -> Result<String, String> {
    let text = fs::read_to_string(&args.config).map_err(|e| format!("read config: {e}"))?;
    let file: BeamProfileFile =
        serde_json::from_str(&text).map_err(|e| format!("profile config: {e}"))?;
    let (src, beam, _, _) = file.params.resolve().map_err(|e| e.to_string())?;
    let p = &file.profile;
    let k = Vec3::new(0.0, 0.0, p.k);
    let mut csv = String::from("alpha,re,im,modulus\n");
    for i in 0..p.points {
        let alpha =
            if p.points == 1 { 0.0 } else { p.alpha_max * i as f64 / (p.points - 1) as f64 };
        let rhat = Vec3::new(alpha.sin(), 0.0, alpha.cos());
        let amp = farfield_amplitude(k, rhat, p.r, &src, &beam);
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_g(alpha),
            fmt_g(amp.re),
            fmt_g(amp.im),
            fmt_g(amp.norm())
        ));
    }
    if args.check {
        let (quad, _) = quad_from(p.rel_tol, 1e-9);
        let quad = QuadSpec { max_subdiv: 20000, ..quad };
        let check = radial_integral_check(k, Vec3::new(0.0, 0.0, 1.0), p.r, &src, &beam, &quad)
            .map_err(|e| e.to_string())?;
        let width = angular_half_width(k, p.r, &src, &beam);
        eprintln!(
            "radial check: |extrapolated| = {:.6e}, |far field| = {:.6e}, deviation {:.3e}; \
             angular 1/e half-width {:.5e} rad (w k = {:.1})",
            check.extrapolated.norm(),
            check.farfield.norm(),
            check.rel_deviation,
            width,
            src.w * p.k,
        );
    }
    Ok(csv)
}

#[derive(Args)]
struct PresetArgs {
    /// Preset name, or 'all'.
    name: String,
    #[arg(long)]
    json: bool,
}

fn run_preset(args: &PresetArgs) -> Result<String, String> {
    let reports: Vec<_> = if args.name == "all" {
        builtin_presets().iter().map(dip_report).collect()
    } else {
        vec![dip_report(&find_preset(&args.name).map_err(|e| e.to_string())?)]
    };
    if args.json {
        serde_json::to_string_pretty(&reports).map_err(|e| e.to_string())
    } else {
        Ok(reports.iter().map(render_report).collect::<Vec<_>>().join("\n"))
    }
}

#[derive(Args)]
struct ValidateArgs {
    /// Optional JSON file with a quadrature override {"rel_tol": ...}.
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    /// Statistics for the mirror-identity suite.
    #[arg(long, value_enum, default_value = "fermion")]
    statistics: StatArg,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StatArg {
    Fermion,
    Boson,
}

#[derive(Serialize)]
struct Check {
    name: String,
    pass: bool,
    detail: String,
}

#[derive(Serialize)]
struct ValidateReport {
    checks: Vec<Check>,
    warnings: Vec<String>,
    all_pass: bool,
}

#[derive(Debug, Deserialize, Default)]
struct ValidateConfig {
    rel_tol: Option<f64>,
}

fn run_validate(args: &ValidateArgs) -> Result<(String, bool), String> {
    let cfg: ValidateConfig = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("read config: {e}"))?;
            serde_json::from_str(&text).map_err(|e| format!("validate config: {e}"))?
        }
        None => ValidateConfig::default(),
    };
    let (quad, warnings) = quad_from(cfg.rel_tol, 1e-8);
    let nquad = quad.with_rel_tol(quad.rel_tol.max(1e-6));

    let mut checks: Vec<Check> = Vec::new();
    let push = |checks: &mut Vec<Check>, name: &str, pass: bool, detail: String| {
        checks.push(Check { name: name.into(), pass, detail });
    };

    // Canonical low-temperature configuration (the figure parameters).
    let src = SourceSpec::new(1.0, 0.05, 5.0, 210.125).map_err(|e| e.to_string())?;
    let beam = BeamSpec::new(20.0, 0.5, 0.5).map_err(|e| e.to_string())?;
    let ideal = DetectorSpec::ideal();
    let setup = CollinearSetup::new(src, beam, ideal, 160.0, 160.0).map_err(|e| e.to_string())?;

    let floor = c_analytic(&setup);
    push(&mut checks, "dip_floor_analytic", floor == 0.5, format!("C̄(z̄,z̄) = {floor}"));
    let cnum = c_normalized(&setup, Method::Numeric, &nquad).map_err(|e| e.to_string())?;
    push(
        &mut checks,
        "dip_floor_numeric",
        (cnum.value - 0.5).abs() < 0.02,
        format!("numeric C̄ = {:.6}", cnum.value),
    );

    // Method agreement on the dip shoulder (dots vs curves).
    let shoulder = setup.with_z(161.0, 160.0);
    let cn = c_normalized(&shoulder, Method::Numeric, &nquad).map_err(|e| e.to_string())?;
    let cg = c_normalized(&shoulder, Method::GaussianApprox, &quad).map_err(|e| e.to_string())?;
    let depth = 1.0 - cg.value;
    push(
        &mut checks,
        "method_agreement_fig_params",
        (cn.value - cg.value).abs() <= 0.05 * depth,
        format!("numeric {:.6} vs gauss {:.6} (depth {:.4})", cn.value, cg.value, depth),
    );

    let c12 = c_normalized(&setup.with_z(158.5, 161.0), Method::GaussianApprox, &quad)
        .map_err(|e| e.to_string())?;
    let c21 = c_normalized(&setup.with_z(161.0, 158.5), Method::GaussianApprox, &quad)
        .map_err(|e| e.to_string())?;
    push(
        &mut checks,
        "exchange_symmetry",
        (c12.value - c21.value).abs() < 1e-9,
        format!("|ΔC̄| = {:.3e}", (c12.value - c21.value).abs()),
    );

    let mut scaled = setup.with_z(161.0, 160.0);
    scaled.src.coupling = 10.0;
    let c_scaled =
        c_normalized(&scaled, Method::GaussianApprox, &quad).map_err(|e| e.to_string())?;
    push(
        &mut checks,
        "lambda_invariance",
        (c_scaled.value - cg.value).abs() < 1e-10,
        format!("|ΔC̄| = {:.3e}", (c_scaled.value - cg.value).abs()),
    );

    let mut hot = setup;
    hot.src.beta = 0.05;
    let d_cold = dip_depth(&setup, Method::Numeric, &nquad).map_err(|e| e.to_string())?;
    let d_hot = dip_depth(&hot, Method::Numeric, &nquad).map_err(|e| e.to_string())?;
    push(
        &mut checks,
        "temperature_invariance",
        ((d_cold - d_hot) / d_cold).abs() < 0.02,
        format!("depth(β=5) = {d_cold:.5}, depth(β=0.05) = {d_hot:.5}"),
    );

    let mut worst = 0.0f64;
    for &(p, q) in &[(1.0, 0.0), (40.0, 3.0), (400.0, 100.0), (7.0, 60.0)] {
        let sp = SaddleParams::new(p, q).map_err(|e| e.to_string())?;
        let t0 = saddle_theta0(&sp);
        let s = p + q;
        let g = |t: f64| (t.sin() * t.cos()).ln() - s * t.sin().powi(2);
        let h = 1e-6;
        worst = worst.max(((g(t0 + h) - g(t0 - h)) / (2.0 * h)).abs());
    }
    push(&mut checks, "saddle_stationarity", worst < 1e-6, format!("max residual {worst:.2e}"));

    let sp = SaddleParams::new(137.0, 11.0).map_err(|e| e.to_string())?;
    let lhs = theta_integral(&sp, ThetaMode::Numeric, &quad).map_err(|e| e.to_string())?;
    let rhs = antibunch::numerics::polar_aperture_integral(137.0, 11.0, &quad)
        .map_err(|e| e.to_string())?;
    push(
        &mut checks,
        "theta_change_of_variable",
        ((lhs - rhs) / rhs).abs() < 1e-8,
        format!("Θ-form {lhs:.10e} vs θ-form {rhs:.10e}"),
    );

    // Off-axis reductions and the statistics mirror.
    let det2 = DetectorSpec::new(0.0, 2.0).map_err(|e| e.to_string())?;
    let benign = SourceSpec::new(1.0, 0.05, 5.0, 288.0).map_err(|e| e.to_string())?;
    let c_off0 = c_offaxis(0.0, 161.0, 160.0, &benign, &beam, &det2);
    let dz: f64 = 1.0;
    let want = 1.0
        - 0.5 / (1.0 + 4.0 * beam.dk_z * beam.dk_z * det2.d * det2.d).sqrt()
            * (-dz * dz / (1.0 / (beam.dk_z * beam.dk_z) + 4.0 * det2.d * det2.d)).exp();
    push(
        &mut checks,
        "offaxis_zero_angle_reduction",
        (c_off0 - want).abs() < 1e-12,
        format!("C̄(Θ=0) = {c_off0:.12}"),
    );
    let pair = c_symmetric_pair(3.0, 4.0, 160.0, &benign, &beam, &det2);
    let r = (9.0f64 + 16.0 + 160.0 * 160.0).sqrt();
    let th = 25.0f64.sqrt().atan2(160.0);
    let via = c_offaxis(th, r, r, &benign, &beam, &det2);
    push(
        &mut checks,
        "symmetric_pair_identity",
        (pair - via).abs() < 1e-10,
        format!("pair {pair:.12} vs angle-form {via:.12}"),
    );

    let statistics = match args.statistics {
        StatArg::Fermion => Statistics::Fermion,
        StatArg::Boson => Statistics::Boson,
    };
    let boson_src = benign.with_statistics(Statistics::Boson);
    let cf = c_offaxis(0.04, 161.0, 160.0, &benign, &beam, &det2);
    let cb = c_offaxis(0.04, 161.0, 160.0, &boson_src, &beam, &det2);
    push(
        &mut checks,
        "statistics_mirror_identity",
        (cf + cb - 2.0).abs() < 1e-12,
        format!("C̄_f + C̄_b = {:.12} (suite statistics: {statistics:?})", cf + cb),
    );

    let rep = consistency_corrections(
        &CollinearSetup::new(
            benign,
            beam,
            DetectorSpec::new(5.0, 2.0).map_err(|e| e.to_string())?,
            150.0,
            170.0,
        )
        .map_err(|e| e.to_string())?,
    );
    push(
        &mut checks,
        "consistency_corrections",
        rep.residual.abs() < 1e-12,
        format!("corrected−uncorrected = {:.2e}", rep.residual),
    );

    let (lat, lon) = coherence_lengths(&setup);
    push(
        &mut checks,
        "coherence_lengths",
        (lat - 160.0 / (2.0f64.sqrt() * 20.0)).abs() < 1e-12 && (lon - 1.0).abs() < 1e-12,
        format!("lateral {lat:.4}, longitudinal {lon:.4}"),
    );
    let w_analytic =
        dip_half_width(&setup, Method::Analytic, &quad).map_err(|e| e.to_string())?;
    push(
        &mut checks,
        "analytic_half_width",
        (w_analytic - 2.0).abs() < 1e-5,
        format!("half-width {w_analytic:.6} (want 1/δk_z = 2)"),
    );

    let all_pass = checks.iter().all(|c| c.pass);
    let report = ValidateReport { checks, warnings, all_pass };
    let text = if args.json {
        serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?
    } else {
        let mut t = String::new();
        for c in &report.checks {
            t.push_str(&format!(
                "{} {}: {}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            ));
        }
        for w in &report.warnings {
            t.push_str(&format!("WARN config: {w}\n"));
        }
        t.push_str(if report.all_pass { "all checks passed\n" } else { "FAILURES present\n" });
        t
    };
    Ok((text, all_pass))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli
        .threads
        .or_else(|| std::env::var("ANTIBUNCH_THREADS").ok().and_then(|v| v.parse().ok()))
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    // The global pool may already exist when main is driven twice in-process.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();

    let outcome = match &cli.command {
        Command::ScanCollinear(args) => run_scan_collinear(args).and_then(|csv| {
            write_output(&args.out, &csv).map_err(|e| e.to_string())?;
            Ok(true)
        }),
        Command::ScanOffaxis(args) => run_scan_offaxis(args).and_then(|csv| {
            write_output(&args.out, &csv).map_err(|e| e.to_string())?;
            Ok(true)
        }),
        Command::BeamProfile(args) => run_beam_profile(args).and_then(|csv| {
            write_output(&args.out, &csv).map_err(|e| e.to_string())?;
            Ok(true)
        }),
        Command::Preset(args) => run_preset(args).and_then(|text| {
            println!("{text}");
            Ok(true)
        }),
        Command::Validate(args) => run_validate(args).map(|(text, pass)| {
            print!("{text}");
            pass
        }),
    };

    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
