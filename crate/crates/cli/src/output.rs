//! Artifact writers. Numbers go out with 17 significant digits so that reruns compare bytewise.

use std::fs;
use std::path::Path;

use fnls_core::snapshot::write_snapshot;
use fnls_core::{Field, PhysicsParams, TrajectoryRecord};
use serde::Serialize;

use crate::error::CliError;

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

pub fn write_field(path: &Path, field: &Field, params: &PhysicsParams) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::io(format!("cannot create {}: {e}", path.display())))?;
    write_snapshot(std::io::BufWriter::new(file), field, params)?;
    Ok(())
}

/// `{:.16e}`: one digit before the point and sixteen after.
pub fn number(v: f64) -> String {
    format!("{v:.16e}")
}

/// Diagnostics table, one row per recorded sample. The first radius fills the unsuffixed
/// columns; further radii append `exterior_mass_R<r>` and `V_psi_R<r>` pairs.
pub fn write_diagnostics(path: &Path, radii: &[f64], records: &[TrajectoryRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(format!("cannot create {}: {e}", path.display())))?;
    let mut header: Vec<String> = [
        "t",
        "mass",
        "energy",
        "K",
        "hs_norm",
        "l_alpha2_norm",
        "exterior_mass_R",
        "V_psi",
        "M_phi",
        "dM_dt_rhs",
        "mass_drift",
        "alias_tail",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for r in radii.iter().skip(1) {
        header.push(format!("exterior_mass_R{r}"));
        header.push(format!("V_psi_R{r}"));
    }
    w.write_record(&header).map_err(csv_error)?;

    for rec in records {
        let c = &rec.conserved;
        let first = rec.exterior.first();
        let (m_phi, dm_dt) = rec.virial.map_or((f64::NAN, f64::NAN), |v| (v.m_value, v.dm_dt_rhs));
        let mut row = vec![
            number(rec.t),
            number(c.mass),
            number(c.energy),
            number(c.k),
            number(rec.hs_norm),
            number(c.l_alpha2_norm),
            number(first.map_or(f64::NAN, |e| e.sharp)),
            number(first.map_or(f64::NAN, |e| e.v_psi)),
            number(m_phi),
            number(dm_dt),
            number(rec.mass_drift),
            number(rec.alias_tail),
        ];
        for e in rec.exterior.iter().skip(1) {
            row.push(number(e.sharp));
            row.push(number(e.v_psi));
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::io(e.to_string())
}
