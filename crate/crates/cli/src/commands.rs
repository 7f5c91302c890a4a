use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use levelfit::lp::{mps, LpStatus, RowOrigin};
use levelfit::verify::{count_components_anchored, verify, verify_fit, VerificationReport};
use levelfit::{degree_sweep, fit, fit_problem, BasisKind, BoxDomain, GridSpec, PointCloud, Polynomial};
use log::info;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::ingest::{ingest_points, IngestError};
use crate::settings::Settings;

pub const COEFFS_FILE: &str = "coeffs.json";
pub const REPORT_FILE: &str = "report.json";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const PLOT_FILE: &str = "plot.csv";
pub const MPS_FILE: &str = "problem.mps";

/// Contents of `report.json` written by `fit`.
#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    pub degree: u32,
    pub dimension: usize,
    pub points: usize,
    pub basis: BasisKind,
    pub lp_basis: BasisKind,
    #[serde(rename = "box")]
    pub domain: BoxDomain,
    pub grid: GridSpec,
    pub grid_size: usize,
    pub status: LpStatus,
    pub w: f64,
    pub iterations: usize,
    pub lp_rows: usize,
    pub lp_cols: usize,
    pub containment_margin: f64,
    pub min_grid_value: f64,
    pub verification: VerificationReport,
    pub passed: bool,
}

/// Contents of `report.json` written by `verify`.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    #[serde(flatten)]
    pub verification: VerificationReport,
    pub passed: bool,
}

fn load(settings: &Settings) -> Result<(PointCloud, BoxDomain)> {
    let cloud = ingest_points(settings.points_path()?)?;
    let domain = settings.domain()?;
    if domain.dimension() != cloud.dimension() {
        return Err(CliError::Usage(format!(
            "box has {} axes but the points have {} coordinates",
            domain.dimension(),
            cloud.dimension()
        )));
    }
    Ok((cloud, domain))
}

fn load_polynomial(path: &Path) -> Result<Polynomial> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| IngestError::Invalid(format!("{}: {e}", path.display())).into())
}

fn output_path(settings: &Settings, name: &str) -> Result<PathBuf> {
    let dir = settings.out_dir();
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir.join(name))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize to JSON");
    text.push('\n');
    write_text(path, &text)
}

fn components_text(c: Option<usize>) -> String {
    c.map_or_else(|| "-".into(), |c| c.to_string())
}

/// Fits one degree, runs every verification check and writes `coeffs.json` and `report.json`.
pub fn cmd_fit(settings: &Settings) -> Result<FitReport> {
    let (cloud, domain) = load(settings)?;
    let degree = settings.degree()?;
    let opts = settings.fit_options(degree, cloud.dimension());
    let result = fit(&cloud, &domain, &opts)?;
    let verification = verify_fit(&result, &cloud, &settings.verify_options())?;
    let passed = result.status == LpStatus::Optimal && verification.passed();
    let report = FitReport {
        degree,
        dimension: cloud.dimension(),
        points: cloud.len(),
        basis: opts.basis,
        lp_basis: result.lp_basis,
        domain: result.domain.clone(),
        grid: result.grid.clone(),
        grid_size: result.grid_size,
        status: result.status,
        w: result.objective,
        iterations: result.diagnostics.iterations,
        lp_rows: result.diagnostics.lp_rows,
        lp_cols: result.diagnostics.lp_cols,
        containment_margin: result.diagnostics.containment_margin,
        min_grid_value: result.diagnostics.min_grid_value,
        verification,
        passed,
    };
    write_json(&output_path(settings, COEFFS_FILE)?, &result.polynomial)?;
    write_json(&output_path(settings, REPORT_FILE)?, &report)?;
    println!(
        "degree {degree}: w = {}, components {}, containment margin {:e}, scan minimum {:e}",
        report.w,
        components_text(report.verification.components),
        report.containment_margin,
        report.verification.min_scan_value
    );
    if !passed {
        return Err(CliError::Verification(failure_reason(&report.verification)));
    }
    Ok(report)
}

fn failure_reason(v: &VerificationReport) -> String {
    if !v.containment_ok {
        format!("containment margin {:e}", v.containment_margin)
    } else if v.trace_pass == Some(false) {
        format!("trace(PM) = {:?} disagrees with w = {:?}", v.trace_pm.unwrap_or(f64::NAN), v.w)
    } else {
        format!("volume bound violated: w = {} < Monte Carlo volume {} - 3 x {}", v.w, v.mc_volume, v.mc_stderr)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub degree: u32,
    pub status: String,
    pub w: Option<f64>,
    pub components: Option<usize>,
    pub containment_margin: Option<f64>,
    pub min_scan_value: Option<f64>,
    pub seconds: f64,
}

/// Fits every degree and writes `sweep.csv`. Fails if any fit fails or `w` increases with degree.
pub fn cmd_sweep(settings: &Settings) -> Result<Vec<SweepRow>> {
    let (cloud, domain) = load(settings)?;
    let degrees = settings.degrees()?;
    let n = cloud.dimension();
    let opts = settings.fit_options(degrees[0], n);
    let resolution = settings.verify_options().resolution_for(n);
    let sweep = degree_sweep(&cloud, &domain, &degrees, &opts)?;

    let mut rows = Vec::with_capacity(sweep.entries.len());
    for entry in &sweep.entries {
        let row = match &entry.result {
            Ok(r) => SweepRow {
                degree: entry.degree,
                status: "optimal".into(),
                w: Some(r.objective),
                components: if n <= 3 {
                    Some(count_components_anchored(&r.polynomial, &r.domain, resolution, cloud.points())?)
                } else {
                    None
                },
                containment_margin: Some(r.diagnostics.containment_margin),
                min_scan_value: Some(r.diagnostics.scan.min_value),
                seconds: entry.seconds,
            },
            Err(e) => SweepRow {
                degree: entry.degree,
                status: match e {
                    levelfit::Error::Unbounded { .. } => "unbounded".into(),
                    _ => "solver_failure".into(),
                },
                w: None,
                components: None,
                containment_margin: None,
                min_scan_value: None,
                seconds: entry.seconds,
            },
        };
        rows.push(row);
    }

    let opt = |v: Option<f64>| v.map_or_else(String::new, |v| format!("{v:?}"));
    let mut csv = String::from("degree,status,w,components,containment_margin,min_scan_value,seconds\n");
    println!(
        "{:>6}  {:>14}  {:>18}  {:>10}  {:>12}  {:>8}",
        "degree", "status", "w", "components", "scan min", "seconds"
    );
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{:.3}",
            r.degree,
            r.status,
            opt(r.w),
            r.components.map_or_else(String::new, |c| c.to_string()),
            opt(r.containment_margin),
            opt(r.min_scan_value),
            r.seconds
        );
        println!(
            "{:>6}  {:>14}  {:>18}  {:>10}  {:>12}  {:>8.3}",
            r.degree,
            r.status,
            r.w.map_or_else(|| "-".into(), |w| format!("{w:.12}")),
            components_text(r.components),
            r.min_scan_value.map_or_else(|| "-".into(), |v| format!("{v:.3e}")),
            r.seconds
        );
    }
    write_text(&output_path(settings, SWEEP_FILE)?, &csv)?;

    if let Some(entry) = sweep.entries.iter().find(|e| e.result.is_err()) {
        let Err(e) = &entry.result else { unreachable!() };
        return Err(CliError::Solve(levelfit::Error::Solver(format!("degree {}: {e}", entry.degree))));
    }
    if let Some(&(d, d2)) = sweep.monotonicity_violations.first() {
        return Err(CliError::Verification(format!("w increases from degree {d} to degree {d2}")));
    }
    Ok(rows)
}

/// Default plot resolution per axis.
pub fn default_plot_resolution(dimension: usize) -> usize {
    match dimension {
        1 => 1001,
        2 => 201,
        _ => 41,
    }
}

/// Evaluates a polynomial on a tensor grid and writes `plot.csv`.
///
/// The polynomial is read from `coeffs` when given and fitted otherwise.
pub fn cmd_plotdata(settings: &Settings, coeffs: Option<&Path>) -> Result<PathBuf> {
    let (polynomial, domain) = match coeffs {
        Some(path) => (load_polynomial(path)?, settings.domain()?),
        None => {
            let (cloud, domain) = load(settings)?;
            let opts = settings.fit_options(settings.degree()?, cloud.dimension());
            let r = fit(&cloud, &domain, &opts)?;
            (r.polynomial, r.domain)
        }
    };
    let n = domain.dimension();
    if polynomial.dimension() != n {
        return Err(CliError::Usage(format!("box has {n} axes, polynomial has {}", polynomial.dimension())));
    }
    let resolution = settings.resolution.unwrap_or_else(|| default_plot_resolution(n));
    let grid = levelfit::fit::build_grid(&domain, &GridSpec::Tensor { points_per_axis: resolution })?;
    let text = plot_csv(&polynomial, &domain, &grid, resolution);
    let path = output_path(settings, PLOT_FILE)?;
    write_text(&path, &text)?;
    println!("wrote {} ({} points)", path.display(), grid.len());
    Ok(path)
}

fn plot_csv(p: &Polynomial, domain: &BoxDomain, grid: &[Vec<f64>], resolution: usize) -> String {
    let n = domain.dimension();
    let axes: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let bounds: Vec<String> = (0..n).map(|i| format!("[{}, {}]", domain.lower()[i], domain.upper()[i])).collect();
    let mut out = String::new();
    let _ = writeln!(out, "# degree {} {} polynomial on {}", p.degree(), p.basis().kind(), bounds.join(" x "));
    let _ = writeln!(
        out,
        "# {resolution} points per axis including both ends, row-major: {} varies slowest, {} fastest",
        axes[0],
        axes[n - 1]
    );
    let _ = writeln!(out, "# in_set is 1 where p >= 1");
    let _ = writeln!(out, "{},p,in_set", axes.join(","));
    let mut eval = p.evaluator();
    for x in grid {
        let v = eval.eval(x);
        for c in x {
            let _ = write!(out, "{c:?},");
        }
        let _ = writeln!(out, "{v:?},{}", u8::from(v >= 1.0));
    }
    out
}

/// Writes the fitting LP as `problem.mps`, in the coordinates of the requested basis.
pub fn cmd_export_mps(settings: &Settings) -> Result<PathBuf> {
    let (cloud, domain) = load(settings)?;
    let mut opts = settings.fit_options(settings.degree()?, cloud.dimension());
    opts.lp_basis = opts.basis;
    let problem = fit_problem(&cloud, &domain, &opts)?;
    let lp = &problem.lp;
    let path = output_path(settings, MPS_FILE)?;
    let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
    let mut writer = std::io::BufWriter::new(file);
    mps::write_mps(lp, "LEVELFIT", &mut writer).map_err(|e| match e {
        levelfit::Error::Io(source) => CliError::io(&path, source),
        other => other.into(),
    })?;
    std::io::Write::flush(&mut writer).map_err(|e| CliError::io(&path, e))?;
    println!(
        "wrote {}: {} rows ({} cloud, {} grid, {} bound), {} columns",
        path.display(),
        lp.num_rows(),
        lp.count_rows(RowOrigin::Containment),
        lp.count_rows(RowOrigin::Grid),
        lp.count_rows(RowOrigin::Generic),
        lp.num_cols()
    );
    Ok(path)
}

/// Verifies a stored polynomial against a point cloud and writes `report.json`.
pub fn cmd_verify(settings: &Settings, coeffs: &Path) -> Result<VerifyReport> {
    let (cloud, domain) = load(settings)?;
    let p = load_polynomial(coeffs)?;
    let start = Instant::now();
    let verification = verify(&p, &cloud, &domain, &settings.verify_options())?;
    info!("verification took {:.2} s", start.elapsed().as_secs_f64());
    let report = VerifyReport { passed: verification.passed(), verification };
    write_json(&output_path(settings, REPORT_FILE)?, &report)?;
    let v = &report.verification;
    println!(
        "w = {}, Monte Carlo volume {} +- {}, components {}, containment margin {:e}, scan minimum {:e}",
        v.w,
        v.mc_volume,
        v.mc_stderr,
        components_text(v.components),
        v.containment_margin,
        v.min_scan_value
    );
    if !report.passed {
        return Err(CliError::Verification(failure_reason(v)));
    }
    Ok(report)
}
