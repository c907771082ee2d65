//! Canonical JSON dump of a network, used for test fixtures and the CLI.
//! All quantities are SI (m³/s, m); entity order is preserved.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{FixedHead, HeadlossModel, Junction, Network, NodeRef, PipeSpec};

#[derive(Serialize, Deserialize)]
struct NetworkDto {
    schema_version: u32,
    junctions: Vec<JunctionDto>,
    fixed_heads: Vec<FixedHeadDto>,
    pipes: Vec<PipeDto>,
}

#[derive(Serialize, Deserialize)]
struct JunctionDto {
    id: String,
    demand: f64,
}

#[derive(Serialize, Deserialize)]
struct FixedHeadDto {
    id: String,
    head: f64,
}

#[derive(Serialize, Deserialize)]
struct PipeDto {
    id: String,
    from: String,
    to: String,
    length: f64,
    diameter: f64,
    roughness: f64,
    model: HeadlossModel,
}

pub fn to_json(net: &Network) -> String {
    let node_name = |r: NodeRef| match r {
        NodeRef::Junction(i) => net.junctions()[i].id.clone(),
        NodeRef::Fixed(i) => net.fixed_heads()[i].id.clone(),
    };
    let dto = NetworkDto {
        schema_version: 1,
        junctions: net
            .junctions()
            .iter()
            .map(|j| JunctionDto {
                id: j.id.clone(),
                demand: j.demand,
            })
            .collect(),
        fixed_heads: net
            .fixed_heads()
            .iter()
            .map(|f| FixedHeadDto {
                id: f.id.clone(),
                head: f.head,
            })
            .collect(),
        pipes: net
            .pipes()
            .iter()
            .map(|p| PipeDto {
                id: p.id.clone(),
                from: node_name(p.from),
                to: node_name(p.to),
                length: p.length,
                diameter: p.diameter,
                roughness: p.roughness,
                model: p.model,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&dto).expect("network serialization cannot fail")
}

pub fn from_json(text: &str) -> Result<Network> {
    let dto: NetworkDto = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        msg: e.to_string(),
    })?;
    Network::build(
        dto.junctions
            .into_iter()
            .map(|j| Junction {
                id: j.id,
                demand: j.demand,
            })
            .collect(),
        dto.fixed_heads
            .into_iter()
            .map(|f| FixedHead {
                id: f.id,
                head: f.head,
            })
            .collect(),
        dto.pipes
            .into_iter()
            .map(|p| PipeSpec {
                id: p.id,
                from: p.from,
                to: p.to,
                length: p.length,
                diameter: p.diameter,
                roughness: p.roughness,
                model: p.model,
            })
            .collect(),
    )
}
