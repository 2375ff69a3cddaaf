//! The `run`, `check` and `bench` commands.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cavityflow::analysis::SweepReport;
use cavityflow::benchmark::{run_cavity, REFERENCE_NUSSELT};
use cavityflow::output::{write_field_csv, write_summary_csv, write_vtk_fields};
use cavityflow::sweep::{run_sweep, CaseOutcome, SweepError};
use log::{error, info, warn};

use crate::config::{FieldFormat, RunConfig};

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    CaseFailure = 2,
    ConfigError = 3,
}

pub const SUMMARY_FILE: &str = "summary.csv";
pub const EFFECTIVE_CONFIG_FILE: &str = "effective-config.toml";
pub const METADATA_FILE: &str = "metadata.toml";

/// Offset reduction measured on fabricated devices when the gap grows from
/// 50 µm to 200 µm, as a fraction of the 50 µm offset.
pub const MEASURED_OFFSET_REDUCTION: f64 = 2.0 / 3.0;

fn case_stem(case: &CaseOutcome) -> String {
    format!("gap{}um_T{}K", case.gap_um, case.ambient_k)
}

fn case_log(case: &CaseOutcome) -> String {
    let mut s = String::new();
    writeln!(s, "gap_um = {}", case.gap_um).unwrap();
    writeln!(s, "ambient_K = {}", case.ambient_k).unwrap();
    writeln!(s, "seconds = {:.3}", case.seconds).unwrap();
    if let Some(grid) = &case.grid {
        writeln!(s, "grid = {} x {} (dx {} m, dy {} m)", grid.nx, grid.ny, grid.dx, grid.dy).unwrap();
    }
    if let Some(src) = &case.source {
        writeln!(s, "joule_power_W = {}", src.power()).unwrap();
        writeln!(s, "s_h_W_per_m3 = {}", src.s_h).unwrap();
    }
    if let Some(state) = &case.state {
        writeln!(s, "outer_iterations = {}", state.iterations).unwrap();
        writeln!(s, "converged = {}", state.converged).unwrap();
        if let Some(r) = state.final_residuals() {
            writeln!(
                s,
                "final_residuals = continuity {:.3e}, momentum_x {:.3e}, momentum_y {:.3e}, energy {:.3e}",
                r.continuity, r.momentum_x, r.momentum_y, r.energy
            )
            .unwrap();
        }
    }
    if let Some(b) = &case.balance {
        writeln!(s, "power_in_W_per_m = {}", b.power_in).unwrap();
        writeln!(s, "power_out_W_per_m = {}", b.power_out).unwrap();
        writeln!(s, "imbalance_fraction = {:.3e}", b.imbalance_fraction).unwrap();
    }
    if let Some(e) = &case.error {
        writeln!(s, "error = {e}").unwrap();
    }
    s
}

/// Proxy at the largest gap over the proxy at the smallest, at the first
/// ambient temperature.
pub fn offset_ratio(report: &SweepReport) -> Option<(f64, f64, f64)> {
    let ambient = report.rows.first()?.ambient_k;
    let rows: Vec<_> = report.rows_at_ambient(ambient).collect();
    let (narrow, wide) = (rows.first()?, rows.last()?);
    if narrow.gap_um == wide.gap_um || narrow.offset_proxy_au == 0.0 {
        return None;
    }
    Some((narrow.gap_um, wide.gap_um, wide.offset_proxy_au / narrow.offset_proxy_au))
}

fn quote(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn metadata(config: &RunConfig, report: &SweepReport, cases: &[CaseOutcome]) -> String {
    let mut s = String::new();
    writeln!(s, "generator = {}", quote(concat!("cavityflow ", env!("CARGO_PKG_VERSION")))).unwrap();
    writeln!(s, "offset_proxy_units = \"a.u.\"").unwrap();
    writeln!(
        s,
        "offset_proxy_model = {}",
        quote("model, not measured: epsilon * (|torque_left - torque_right| + |force_left - force_right| * arm_scale)")
    )
    .unwrap();
    writeln!(s, "epsilon = {}", config.plan.epsilon).unwrap();
    match config.plan.arm_scale_um {
        Some(a) => writeln!(s, "arm_scale_um = {a}").unwrap(),
        None => writeln!(s, "arm_scale_um = {}", 0.5 * config.plan.device.proof_mass_width_um).unwrap(),
    }
    writeln!(s, "ambient_temperatures_note = {}", quote("ambient temperatures are implementer-chosen values")).unwrap();
    writeln!(s, "pressure_level_note = {}", quote("p_total = p_atm * mean fluid T / T_ambient + p_dyn (sealed ideal gas)")).unwrap();
    if let Some((g0, g1, ratio)) = offset_ratio(report) {
        writeln!(s, "simulated_offset_ratio = {ratio}").unwrap();
        writeln!(s, "simulated_offset_ratio_gaps_um = [{g0}, {g1}]").unwrap();
        writeln!(s, "measured_offset_reduction = {MEASURED_OFFSET_REDUCTION}").unwrap();
    }
    for slope in &report.slopes {
        writeln!(s, "\n[[delta_p_ambient_slope]]\ngap_um = {}\nslope_Pa_per_K = {}\npoints = {}", slope.gap_um, slope.slope, slope.points)
            .unwrap();
    }
    for case in cases {
        writeln!(s, "\n[[case]]\ngap_um = {}\nambient_K = {}", case.gap_um, case.ambient_k).unwrap();
        writeln!(s, "succeeded = {}", case.succeeded()).unwrap();
        if let Some(state) = &case.state {
            writeln!(s, "outer_iterations = {}", state.iterations).unwrap();
        }
        if let Some(b) = &case.balance {
            writeln!(s, "imbalance_fraction = {}", b.imbalance_fraction).unwrap();
        }
        if let Some(e) = &case.error {
            writeln!(s, "error = {}", quote(e)).unwrap();
        }
    }
    s
}

fn write_case_files(config: &RunConfig, case: &CaseOutcome) -> std::io::Result<()> {
    let dir = config.output_dir.join("cases");
    fs::create_dir_all(&dir)?;
    let stem = case_stem(case);
    fs::write(dir.join(format!("{stem}.log")), case_log(case))?;
    if !config.emit_fields {
        return Ok(());
    }
    let (Some(state), Some(grid)) = (&case.state, &case.grid) else {
        return Ok(());
    };
    let to_io = |e: cavityflow::output::OutputError| std::io::Error::other(e.to_string());
    for format in &config.field_formats {
        match format {
            FieldFormat::Vtk => write_vtk_fields(state, grid, &dir.join(format!("{stem}.vtk"))).map_err(to_io)?,
            FieldFormat::Csv => write_field_csv(state, grid, &dir.join(format!("{stem}_fields.csv"))).map_err(to_io)?,
        }
    }
    Ok(())
}

fn ensure_writable(dir: &Path) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let probe = dir.join(".cavityflow-write-test");
    fs::write(&probe, b"").map_err(|e| format!("{} is not writable: {e}", dir.display()))?;
    let _ = fs::remove_file(probe);
    Ok(())
}

/// Run the sweep and write every output. Returns the exit status.
pub fn run(config: &RunConfig) -> Status {
    let out: PathBuf = config.output_dir.clone();
    if let Err(e) = ensure_writable(&out) {
        error!("output_dir: {e}");
        return Status::ConfigError;
    }
    if let Err(e) = fs::write(out.join(EFFECTIVE_CONFIG_FILE), config.effective_config()) {
        error!("writing effective config: {e}");
        return Status::CaseFailure;
    }
    info!("{} cases, output in {}", config.plan.cases().len(), out.display());
    let outcome = match run_sweep(&config.plan) {
        Ok(o) => o,
        Err(SweepError::InvalidPlan { key, reason }) => {
            error!("{key} {reason}");
            return Status::ConfigError;
        }
        Err(e) => {
            error!("{e}");
            return Status::CaseFailure;
        }
    };
    let mut status = if outcome.report.failures.is_empty() { Status::Success } else { Status::CaseFailure };
    for case in &outcome.cases {
        if let Err(e) = write_case_files(config, case) {
            error!("writing case files for {}: {e}", case_stem(case));
            status = Status::CaseFailure;
        }
        if let Some(b) = &case.balance {
            if b.imbalance_fraction > 0.01 {
                warn!("{}: energy imbalance {:.3e}", case_stem(case), b.imbalance_fraction);
            }
        }
    }
    if let Err(e) = write_summary_csv(&outcome.report, &out.join(SUMMARY_FILE)) {
        error!("writing summary: {e}");
        status = Status::CaseFailure;
    }
    if let Err(e) = fs::write(out.join(METADATA_FILE), metadata(config, &outcome.report, &outcome.cases)) {
        error!("writing metadata: {e}");
        status = Status::CaseFailure;
    }

    print!("{}", report_text(&outcome.report));
    for f in &outcome.report.failures {
        println!("FAILED gap {} um, ambient {} K: {}", f.gap_um, f.ambient_k, f.error);
    }
    status
}

/// Human-readable digest of a sweep.
pub fn report_text(report: &SweepReport) -> String {
    let mut s = String::new();
    writeln!(s, "{:>8} {:>8} {:>12} {:>14} {:>12} {:>12} {:>12}", "gap_um", "T_amb_K", "mean_T_K", "p_thermo_Pa", "|dp/dx|", "delta_p_L", "offset").unwrap();
    for r in &report.rows {
        writeln!(
            s,
            "{:>8} {:>8} {:>12.6} {:>14.4} {:>12.4e} {:>12.4e} {:>12.4e}",
            r.gap_um, r.ambient_k, r.mean_t_k, r.p_thermo_pa, r.grad_p_pa_per_m, r.delta_p_left_pa, r.offset_proxy_au
        )
        .unwrap();
    }
    for slope in &report.slopes {
        writeln!(s, "gap {} um: d(delta_p)/dT_ambient = {:.4e} Pa/K over {} points", slope.gap_um, slope.slope, slope.points).unwrap();
    }
    if let Some((g0, g1, ratio)) = offset_ratio(report) {
        writeln!(
            s,
            "offset proxy ratio {g1} um / {g0} um = {ratio:.4} (change {:.1}%); measured devices: offset changes by about {:.0}% between 200 and 50 um",
            100.0 * (1.0 - ratio),
            100.0 * MEASURED_OFFSET_REDUCTION
        )
        .unwrap();
    }
    s
}

/// Validate a configuration and print the effective document.
pub fn check(config: &RunConfig) -> Status {
    print!("{}", config.effective_config());
    Status::Success
}

/// Run the cavity benchmark at both reference Rayleigh numbers.
pub fn bench(n: usize) -> Status {
    if n < 2 {
        eprintln!("error: --grid must be at least 2");
        return Status::ConfigError;
    }
    let mut status = Status::Success;
    println!("{:>8} {:>6} {:>10} {:>10} {:>8} {:>6}", "Ra", "grid", "Nu", "reference", "error", "iters");
    for (ra, _) in REFERENCE_NUSSELT {
        match run_cavity(n, ra) {
            Ok(r) => {
                let err = r.relative_error();
                println!("{:>8.0e} {:>6} {:>10.5} {:>10.3} {:>7.2}% {:>6}", ra, n, r.nusselt, r.reference, 100.0 * err, r.iterations);
                if err > 0.03 {
                    status = Status::CaseFailure;
                }
            }
            Err(e) => {
                println!("{ra:>8.0e} {n:>6} failed: {e}");
                status = Status::CaseFailure;
            }
        }
    }
    status
}
