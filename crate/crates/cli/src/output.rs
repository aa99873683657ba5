//! CSV, JSON and gnuplot artifacts.

use contact_stokes::audit::AuditEntry;
use contact_stokes::norms::{DiagnosticsReport, DiagnosticsRow, ProbeRow};
use std::io::Write;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("missing input file {0}")]
    Missing(String),
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> OutputError + '_ {
    move |e| OutputError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), OutputError> {
    let mut f = std::fs::File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub const REPORT_COLUMNS: [&str; 12] = [
    "step",
    "time",
    "mass",
    "mass_drift",
    "energy_i",
    "e_parallel",
    "d_bar",
    "d_parallel",
    "d_full",
    "dt3_eta",
    "dt3_flag",
    "balance_residual",
];

const REPORT_HEADER: &str = "\
# contact-stokes diagnostics, one row per time step
# mass: integral of eta after re-projection; mass_drift: before re-projection
# energy_i: total surface energy; e_parallel: sum_{j<=2} |d_t^j eta|_{H1}^2
# d_bar, d_parallel, d_full: dissipation surrogates (d_full adds weighted terms)
# rows with dt3_flag = 0 precede the three-step window: e_parallel holds only the j = 0 term, dissipation columns are 0
# dt3_eta: third-difference term, noisy by construction
# balance_residual: |dE/dt + dissipation| of the energy audit
";

/// Writes one row per step, fixed column order, LF line endings.
pub fn export_csv(report: &DiagnosticsReport, path: &Path) -> Result<(), OutputError> {
    let mut out = String::from(REPORT_HEADER);
    out.push_str(&REPORT_COLUMNS.join(","));
    out.push('\n');
    for r in &report.rows {
        let cells = [
            r.step.to_string(),
            num(r.time),
            num(r.mass),
            num(r.mass_drift),
            num(r.energy_i),
            num(r.e_parallel),
            num(r.d_bar),
            num(r.d_parallel),
            num(r.d_full),
            num(r.dt3_eta),
            r.dt3_flag.to_string(),
            num(r.balance_residual),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    write_file(path, &out)
}

/// Reads rows written by [`export_csv`].
pub fn parse_report_csv(path: &Path) -> Result<Vec<DiagnosticsRow>, OutputError> {
    let name = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| OutputError::Io {
            path: name.clone(),
            message: e.to_string(),
        })?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| OutputError::Io {
            path: name.clone(),
            message: e.to_string(),
        })?
        .iter()
        .map(String::from)
        .collect();
    if header != REPORT_COLUMNS {
        return Err(OutputError::Parse {
            path: name,
            line: 0,
            message: format!("unexpected columns {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| OutputError::Io {
            path: name.clone(),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |c: usize| OutputError::Parse {
            path: name.clone(),
            line,
            message: format!("bad value in column {}", REPORT_COLUMNS[c]),
        };
        let f = |c: usize| rec[c].parse::<f64>().map_err(|_| bad(c));
        rows.push(DiagnosticsRow {
            step: rec[0].parse().map_err(|_| bad(0))?,
            time: f(1)?,
            mass: f(2)?,
            mass_drift: f(3)?,
            energy_i: f(4)?,
            e_parallel: f(5)?,
            d_bar: f(6)?,
            d_parallel: f(7)?,
            d_full: f(8)?,
            dt3_eta: f(9)?,
            dt3_flag: rec[10].parse().map_err(|_| bad(10))?,
            balance_residual: f(11)?,
        });
    }
    Ok(rows)
}

pub fn write_audit_csv(entries: &[AuditEntry], path: &Path) -> Result<(), OutputError> {
    let mut out = String::from("# energy balance per step: residual = |(energy_new - energy_old)/dt + viscous + slip + contact + contact_nonlinear|\n");
    out.push_str("time,dt,energy_old,energy_new,viscous,slip,contact,contact_nonlinear,residual\n");
    for a in entries {
        let cells = [
            a.time,
            a.dt,
            a.energy_old,
            a.energy_new,
            a.viscous,
            a.slip,
            a.contact,
            a.contact_nonlinear,
            a.residual,
        ];
        out.push_str(&cells.map(num).join(","));
        out.push('\n');
    }
    write_file(path, &out)
}

/// Surface snapshots in gnuplot block format: one block per time, columns time, x, eta.
pub fn write_surface_csv(
    x: &[f64],
    snapshots: &[(f64, Vec<f64>)],
    path: &Path,
) -> Result<(), OutputError> {
    let mut out =
        String::from("# surface snapshots, blocks separated by blank lines\n# time,x,eta\n");
    for (b, (t, eta)) in snapshots.iter().enumerate() {
        if b > 0 {
            out.push_str("\n\n");
        }
        for (xi, e) in x.iter().zip(eta) {
            out.push_str(&format!("{},{},{}\n", num(*t), num(*xi), num(*e)));
        }
    }
    write_file(path, &out)
}

pub fn write_probe_csv(rows: &[ProbeRow], path: &Path) -> Result<(), OutputError> {
    let mut out =
        String::from("# weighted second-derivative norm on corner patches per refinement level\n");
    out.push_str("level,n_surface,delta,norm,ratio\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.level,
            r.n_surface,
            num(r.delta),
            num(r.norm),
            num(r.ratio)
        ));
    }
    write_file(path, &out)
}

pub fn write_json(value: &serde_json::Value, path: &Path) -> Result<(), OutputError> {
    let mut text = serde_json::to_string_pretty(value).expect("json value serializes");
    text.push('\n');
    write_file(path, &text)
}

pub const PLOT_SCRIPTS: [&str; 4] = ["energy.gp", "decay.gp", "residual.gp", "surface.gp"];

/// Writes the four gnuplot scripts next to the CSVs they read.
pub fn emit_plots(
    dir: &Path,
    report: &str,
    surface: &str,
) -> Result<Vec<std::path::PathBuf>, OutputError> {
    for f in [report, surface] {
        if !dir.join(f).is_file() {
            return Err(OutputError::Missing(dir.join(f).display().to_string()));
        }
    }
    let common = "set datafile separator ','\nset datafile commentschars '#'\n";
    let scripts = [
        format!(
            "{common}set terminal pngcairo size 900,600\nset output 'energy.png'\nset xlabel 't'\nset ylabel 'I(zeta0 + eta)'\nplot '{report}' every ::1 using 2:5 with lines title 'energy'\n"
        ),
        format!(
            "{common}set terminal pngcairo size 900,600\nset output 'decay.png'\nset logscale y\nset xlabel 't'\nset ylabel 'E_parallel'\nplot '{report}' every ::1 using 2:6 with lines title 'E_parallel'\n"
        ),
        format!(
            "{common}set terminal pngcairo size 900,600\nset output 'residual.png'\nset logscale y\nset xlabel 't'\nset ylabel 'balance residual'\nplot '{report}' every ::1 using 2:12 with points pt 7 ps 0.4 title 'residual'\n"
        ),
        format!(
            "{common}set terminal pngcairo size 900,600\nset output 'surface.png'\nset xlabel 'x'\nset ylabel 'eta'\nplot for [i=0:*] '{surface}' index i using 2:3 with lines notitle\n"
        ),
    ];
    let mut written = Vec::new();
    for (name, text) in PLOT_SCRIPTS.iter().zip(&scripts) {
        let p = dir.join(name);
        write_file(&p, text)?;
        written.push(p);
    }
    Ok(written)
}
