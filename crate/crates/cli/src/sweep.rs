//! Parameter sweeps: one isolated run per point of the axes' Cartesian product.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use log::info;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::config::{Purpose, RunConfig, SweepCommand};
use crate::error::{CliError, ErrorKind};
use crate::output::write_json;
use crate::run_command;

#[derive(Serialize)]
struct Completed {
    point: usize,
    directory: String,
    values: BTreeMap<String, toml::Value>,
    summary: Value,
}

#[derive(Serialize)]
struct Failed {
    point: usize,
    values: BTreeMap<String, toml::Value>,
    error: CliError,
}

#[derive(Serialize)]
struct Index<'a> {
    command: SweepCommand,
    axes: &'a BTreeMap<String, Vec<toml::Value>>,
    runs: Vec<Completed>,
    failed: Vec<Failed>,
}

/// Points in odometer order: the last key varies fastest.
fn points(axes: &BTreeMap<String, Vec<toml::Value>>) -> Vec<BTreeMap<String, toml::Value>> {
    axes.iter().fold(vec![BTreeMap::new()], |acc, (key, values)| {
        acc.into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.insert(key.clone(), v.clone());
                    q
                })
            })
            .collect()
    })
}

pub fn sweep(cfg: &RunConfig, dir: &Path) -> Result<Value, CliError> {
    let spec = cfg.sweep.as_ref().expect("validated");
    let purpose = Purpose::from(spec.command);
    let pts = points(&spec.axes);
    let width = pts.len().saturating_sub(1).to_string().len().max(3);

    // every point is checked before anything runs
    let mut configs = Vec::with_capacity(pts.len());
    let mut bad = Vec::new();
    for (i, values) in pts.iter().enumerate() {
        let mut c = cfg.clone();
        c.sweep = None;
        for (k, v) in values {
            c = c.with_value(k, v)?;
        }
        bad.extend(c.violations(purpose).into_iter().map(|v| format!("point {i}: {v}")));
        configs.push(c);
    }
    if !bad.is_empty() {
        return Err(CliError::validation(bad));
    }

    info!("sweeping {} points", configs.len());
    let results: Vec<Result<Value, CliError>> = configs
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let sub = dir.join(format!("point-{i:0width$}"));
            fs::create_dir_all(&sub)?;
            let out = run_command(purpose, c, &sub);
            if out.is_err() {
                let _ = fs::remove_dir_all(&sub);
            }
            out
        })
        .collect();

    let mut index = Index { command: spec.command, axes: &spec.axes, runs: Vec::new(), failed: Vec::new() };
    for (i, (values, result)) in pts.into_iter().zip(results).enumerate() {
        match result {
            Ok(summary) => index.runs.push(Completed { point: i, directory: format!("point-{i:0width$}"), values, summary }),
            Err(error) => index.failed.push(Failed { point: i, values, error }),
        }
    }
    write_json(&dir.join("index.json"), &index)?;
    let (done, failed) = (index.runs.len(), index.failed.len());
    if failed == 0 {
        Ok(serde_json::json!({ "completed": done }))
    } else {
        Err(CliError {
            kind: ErrorKind::Computation,
            message: format!("{failed} of {} sweep points failed; see index.json", done + failed),
            violations: Vec::new(),
        })
    }
}
