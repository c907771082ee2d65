//! Reader for a demand-driven subset of the EPANET INP format.
//!
//! Supported sections: `[TITLE]`, `[JUNCTIONS]`, `[RESERVOIRS]`, `[PIPES]`,
//! `[DEMANDS]`, `[OPTIONS]` (Units and Headloss only), plus `[COORDINATES]`,
//! `[PATTERNS]` and other cosmetic sections which are skipped. Sections that
//! would introduce control devices or dynamic storage ([PUMPS], [VALVES],
//! [TANKS], [CONTROLS], [RULES], [STATUS], [EMITTERS]) are rejected when they
//! contain data.
//!
//! Everything is converted to SI at the parse boundary: flows to m³/s, heads
//! and lengths to meters, diameters to meters, Darcy-Weisbach roughness to
//! meters (from mm in metric unit systems, millifeet in US ones). Solver
//! code downstream never sees a unit.

use crate::error::{Error, Result};

use super::{FixedHead, HeadlossModel, Junction, Network, PipeSpec};

#[derive(Clone, Copy, PartialEq, Debug)]
enum UnitSystem {
    Metric,
    Us,
}

#[derive(Clone, Copy, Debug)]
struct Units {
    /// Multiplier taking a flow in file units to m³/s.
    flow: f64,
    system: UnitSystem,
}

impl Units {
    fn from_name(name: &str, line: usize) -> Result<Units> {
        let (flow, system) = match name.to_ascii_uppercase().as_str() {
            "LPS" => (1e-3, UnitSystem::Metric),
            "LPM" => (1e-3 / 60.0, UnitSystem::Metric),
            "MLD" => (1e3 / 86_400.0, UnitSystem::Metric),
            "CMH" => (1.0 / 3600.0, UnitSystem::Metric),
            "CMD" => (1.0 / 86_400.0, UnitSystem::Metric),
            "CFS" => (0.028_316_846_592, UnitSystem::Us),
            "GPM" => (3.785_411_784e-3 / 60.0, UnitSystem::Us),
            "MGD" => (3.785_411_784e3 / 86_400.0, UnitSystem::Us),
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unsupported flow units `{other}`"),
                })
            }
        };
        Ok(Units { flow, system })
    }

    fn length(&self) -> f64 {
        match self.system {
            UnitSystem::Metric => 1.0,
            UnitSystem::Us => 0.3048,
        }
    }

    fn diameter(&self) -> f64 {
        match self.system {
            UnitSystem::Metric => 1e-3,  // mm
            UnitSystem::Us => 0.0254,    // inches
        }
    }

    fn dw_roughness(&self) -> f64 {
        match self.system {
            UnitSystem::Metric => 1e-3,      // mm
            UnitSystem::Us => 0.3048e-3,     // millifeet
        }
    }
}

impl Default for Units {
    fn default() -> Self {
        Units {
            flow: 1e-3,
            system: UnitSystem::Metric,
        }
    }
}

#[derive(Debug)]
struct RawJunction {
    id: String,
    demand_file_units: f64,
}

#[derive(Debug)]
struct RawReservoir {
    id: String,
    head_file_units: f64,
}

#[derive(Debug)]
struct RawPipe {
    id: String,
    from: String,
    to: String,
    length: f64,
    diameter: f64,
    roughness: f64,
}

/// Parses INP text into a validated [`Network`].
pub fn parse_inp(text: &str) -> Result<Network> {
    let mut section = String::new();
    let mut units = Units::default();
    let mut model = HeadlossModel::HazenWilliams;
    let mut junctions: Vec<RawJunction> = Vec::new();
    let mut reservoirs: Vec<RawReservoir> = Vec::new();
    let mut pipes: Vec<RawPipe> = Vec::new();
    let mut extra_demands: Vec<(usize, String, f64)> = Vec::new();

    let rejected = [
        "PUMPS", "VALVES", "TANKS", "CONTROLS", "RULES", "STATUS", "EMITTERS",
    ];

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find(';') {
            Some(p) => &raw_line[..p],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            let name = line.trim_matches(|c| c == '[' || c == ']').trim();
            section = name.to_ascii_uppercase();
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match section.as_str() {
            "JUNCTIONS" => {
                // ID  Elevation  (Demand)  (Pattern) - elevation is read and
                // ignored, the model works in total heads.
                if fields.is_empty() {
                    continue;
                }
                let demand = if fields.len() >= 3 {
                    parse_f64(fields[2], line_no)?
                } else {
                    0.0
                };
                junctions.push(RawJunction {
                    id: fields[0].to_string(),
                    demand_file_units: demand,
                });
            }
            "RESERVOIRS" => {
                if fields.len() < 2 {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "reservoir needs `ID Head`".into(),
                    });
                }
                reservoirs.push(RawReservoir {
                    id: fields[0].to_string(),
                    head_file_units: parse_f64(fields[1], line_no)?,
                });
            }
            "PIPES" => {
                // ID  Node1  Node2  Length  Diameter  Roughness  (MinorLoss)  (Status)
                if fields.len() < 6 {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "pipe needs `ID Node1 Node2 Length Diameter Roughness`".into(),
                    });
                }
                if let Some(status) = fields.get(7) {
                    let s = status.to_ascii_uppercase();
                    if s == "CLOSED" || s == "CV" {
                        return Err(Error::UnsupportedSection {
                            section: format!("PIPES ({s} status)"),
                            line: line_no,
                            hint: "closed pipes and check valves are control devices",
                        });
                    }
                }
                pipes.push(RawPipe {
                    id: fields[0].to_string(),
                    from: fields[1].to_string(),
                    to: fields[2].to_string(),
                    length: parse_f64(fields[3], line_no)?,
                    diameter: parse_f64(fields[4], line_no)?,
                    roughness: parse_f64(fields[5], line_no)?,
                });
            }
            "DEMANDS" => {
                // Demand categories add onto the junction base demand.
                if fields.len() < 2 {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "demand needs `ID Demand`".into(),
                    });
                }
                extra_demands.push((line_no, fields[0].to_string(), parse_f64(fields[1], line_no)?));
            }
            "OPTIONS" => {
                if fields.len() >= 2 {
                    match fields[0].to_ascii_uppercase().as_str() {
                        "UNITS" => units = Units::from_name(fields[1], line_no)?,
                        "HEADLOSS" => {
                            model = match fields[1].to_ascii_uppercase().as_str() {
                                "H-W" | "HW" => HeadlossModel::HazenWilliams,
                                "D-W" | "DW" => HeadlossModel::DarcyWeisbach,
                                other => {
                                    return Err(Error::Parse {
                                        line: line_no,
                                        msg: format!("unsupported headloss model `{other}`"),
                                    })
                                }
                            }
                        }
                        _ => {}
                    }
                }
            }
            s if rejected.contains(&s) => {
                return Err(Error::UnsupportedSection {
                    section: s.to_string(),
                    line: line_no,
                    hint: "control devices and dynamic storage are out of scope",
                });
            }
            // Anything else (TITLE, COORDINATES, PATTERNS, TIMES, REPORT, ...)
            // is cosmetic for a steady-state demand-driven run.
            _ => {}
        }
    }

    let junction_list: Vec<Junction> = junctions
        .iter()
        .map(|j| Junction {
            id: j.id.clone(),
            demand: j.demand_file_units * units.flow,
        })
        .collect();
    let mut junction_list = junction_list;
    for (line, id, extra) in extra_demands {
        match junction_list.iter_mut().find(|j| j.id == id) {
            Some(j) => j.demand += extra * units.flow,
            None => {
                return Err(Error::Parse {
                    line,
                    msg: format!("[DEMANDS] references unknown junction `{id}`"),
                })
            }
        }
    }
    let fixed: Vec<FixedHead> = reservoirs
        .iter()
        .map(|r| FixedHead {
            id: r.id.clone(),
            head: r.head_file_units * units.length(),
        })
        .collect();
    let pipe_specs: Vec<PipeSpec> = pipes
        .into_iter()
        .map(|p| PipeSpec {
            id: p.id,
            from: p.from,
            to: p.to,
            length: p.length * units.length(),
            diameter: p.diameter * units.diameter(),
            roughness: match model {
                HeadlossModel::HazenWilliams => p.roughness,
                HeadlossModel::DarcyWeisbach => p.roughness * units.dw_roughness(),
            },
            model,
        })
        .collect();

    Network::build(junction_list, fixed, pipe_specs)
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("expected a number, found `{s}`"),
    })
}
