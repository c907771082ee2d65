//! Demand-scenario sources: base demands, seeded synthetic profiles, or a
//! CSV file whose header names the junctions.

use anyhow::{bail, Context};
use hydronet::net::{DemandScenario, Network};
use hydronet::synth;
use serde::Serialize;

#[derive(Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioSource {
    Base,
    Synthetic { steps: usize, seed: u64 },
    File { path: String },
}

pub fn load(spec: Option<&str>, net: &Network) -> anyhow::Result<(DemandScenario, ScenarioSource)> {
    match spec {
        None => Ok((
            DemandScenario::single(net.base_demands(), net.n_junctions())?,
            ScenarioSource::Base,
        )),
        Some(s) if s.starts_with("synthetic:") => {
            let rest: Vec<&str> = s.split(':').collect();
            if rest.len() != 3 {
                bail!("--steps synthetic spec must be `synthetic:N:SEED`, got `{s}`");
            }
            let steps: usize = rest[1].parse().context("synthetic step count")?;
            let seed: u64 = rest[2].parse().context("synthetic seed")?;
            if steps == 0 {
                bail!("synthetic scenario needs at least one step");
            }
            Ok((
                synth::synthetic_scenario(net, steps, seed),
                ScenarioSource::Synthetic { steps, seed },
            ))
        }
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading scenario file `{path}`"))?;
            let scenario = parse_csv(&text, net)?;
            Ok((
                scenario,
                ScenarioSource::File {
                    path: path.to_string(),
                },
            ))
        }
    }
}

/// CSV scenario: first row lists junction ids (any order, exact set), each
/// further row is one step of demands in m³/s.
fn parse_csv(text: &str, net: &Network) -> anyhow::Result<DemandScenario> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().context("scenario file is empty")?;
    let ids: Vec<&str> = header.split(',').map(str::trim).collect();
    let mut col_of = vec![usize::MAX; net.n_junctions()];
    for (j, junction) in net.junctions().iter().enumerate() {
        let pos = ids
            .iter()
            .position(|&id| id == junction.id)
            .with_context(|| format!("scenario header misses junction `{}`", junction.id))?;
        col_of[j] = pos;
    }
    if ids.len() != net.n_junctions() {
        bail!(
            "scenario header has {} columns for {} junctions",
            ids.len(),
            net.n_junctions()
        );
    }
    let mut steps = Vec::new();
    for (row_no, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != ids.len() {
            bail!("scenario row {} has {} fields, expected {}", row_no + 2, fields.len(), ids.len());
        }
        let values: Vec<f64> = fields
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("scenario row {}", row_no + 2))?;
        steps.push(col_of.iter().map(|&c| values[c]).collect());
    }
    Ok(DemandScenario::new(steps, None, net.n_junctions())?)
}
