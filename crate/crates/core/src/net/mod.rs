//! Network data model: junctions, fixed-head nodes, pipes, incidence
//! matrices and demand scenarios. Everything is validated on construction
//! and immutable afterwards, so a `Network` can be shared freely between
//! concurrent solver runs.

mod inp;
mod json;

pub use inp::parse_inp;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{SparseMatrix, Symmetry};

/// Frictional headloss law of a pipe.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadlossModel {
    /// Roughness is the Hazen-Williams C coefficient (dimensionless).
    HazenWilliams,
    /// Roughness is the absolute pipe roughness in meters.
    DarcyWeisbach,
}

/// Unknown-head node with a base demand in m³/s.
#[derive(Clone, PartialEq, Debug)]
pub struct Junction {
    pub id: String,
    pub demand: f64,
}

/// Known-head node (reservoir or static tank) with its head in meters.
#[derive(Clone, PartialEq, Debug)]
pub struct FixedHead {
    pub id: String,
    pub head: f64,
}

/// Resolved endpoint of a pipe.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NodeRef {
    Junction(usize),
    Fixed(usize),
}

/// Pipe with SI geometry. The reference flow direction is `from` → `to`.
#[derive(Clone, PartialEq, Debug)]
pub struct Pipe {
    pub id: String,
    pub from: NodeRef,
    pub to: NodeRef,
    /// Length in meters.
    pub length: f64,
    /// Inner diameter in meters.
    pub diameter: f64,
    /// Hazen-Williams C, or Darcy-Weisbach absolute roughness in meters.
    pub roughness: f64,
    pub model: HeadlossModel,
}

/// Pipe description with endpoints still given by node id, the form produced
/// by parsers and generators before validation.
#[derive(Clone, Debug)]
pub struct PipeSpec {
    pub id: String,
    pub from: String,
    pub to: String,
    pub length: f64,
    pub diameter: f64,
    pub roughness: f64,
    pub model: HeadlossModel,
}

/// Validated, immutable network model.
#[derive(Clone, PartialEq, Debug)]
pub struct Network {
    junctions: Vec<Junction>,
    fixed_heads: Vec<FixedHead>,
    pipes: Vec<Pipe>,
}

impl Network {
    /// Builds and validates a network from parsed pieces. Node and pipe
    /// order is preserved as given (file order), which keeps incidence
    /// matrices and basis construction reproducible.
    pub fn build(
        junctions: Vec<Junction>,
        fixed_heads: Vec<FixedHead>,
        pipes: Vec<PipeSpec>,
    ) -> Result<Self> {
        use std::collections::HashMap;

        if fixed_heads.is_empty() {
            return Err(Error::NoFixedHead);
        }
        if junctions.is_empty() {
            return Err(Error::InvalidNetwork("no junctions".into()));
        }

        let mut node_index: HashMap<&str, NodeRef> = HashMap::new();
        for (i, j) in junctions.iter().enumerate() {
            if node_index.insert(&j.id, NodeRef::Junction(i)).is_some() {
                return Err(Error::DuplicateId(j.id.clone()));
            }
            if !(j.demand >= 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "junction `{}` has negative demand {}",
                    j.id, j.demand
                )));
            }
        }
        for (i, f) in fixed_heads.iter().enumerate() {
            if node_index.insert(&f.id, NodeRef::Fixed(i)).is_some() {
                return Err(Error::DuplicateId(f.id.clone()));
            }
            if !f.head.is_finite() {
                return Err(Error::InvalidNetwork(format!(
                    "fixed head `{}` is not finite",
                    f.id
                )));
            }
        }

        let mut pipe_ids = std::collections::HashSet::new();
        let mut resolved = Vec::with_capacity(pipes.len());
        for p in &pipes {
            if !pipe_ids.insert(p.id.clone()) {
                return Err(Error::DuplicateId(p.id.clone()));
            }
            let from = *node_index.get(p.from.as_str()).ok_or_else(|| Error::DanglingNodeRef {
                pipe: p.id.clone(),
                node: p.from.clone(),
            })?;
            let to = *node_index.get(p.to.as_str()).ok_or_else(|| Error::DanglingNodeRef {
                pipe: p.id.clone(),
                node: p.to.clone(),
            })?;
            if from == to {
                return Err(Error::InvalidNetwork(format!(
                    "pipe `{}` connects node `{}` to itself",
                    p.id, p.from
                )));
            }
            if !(p.length > 0.0) || !(p.diameter > 0.0) || !(p.roughness > 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "pipe `{}` needs positive length, diameter and roughness",
                    p.id
                )));
            }
            resolved.push(Pipe {
                id: p.id.clone(),
                from,
                to,
                length: p.length,
                diameter: p.diameter,
                roughness: p.roughness,
                model: p.model,
            });
        }

        let net = Network {
            junctions,
            fixed_heads,
            pipes: resolved,
        };
        net.check_connected()?;
        Ok(net)
    }

    fn check_connected(&self) -> Result<()> {
        // Union-find over all nodes (junctions first, then fixed heads).
        let n = self.n_junctions() + self.n_fixed();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut Vec<usize>, mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let flat = |r: NodeRef, nj: usize| match r {
            NodeRef::Junction(i) => i,
            NodeRef::Fixed(i) => nj + i,
        };
        for p in &self.pipes {
            let a = find(&mut parent, flat(p.from, self.n_junctions()));
            let b = find(&mut parent, flat(p.to, self.n_junctions()));
            parent[a] = b;
        }
        let root = find(&mut parent, 0);
        for x in 1..n {
            if find(&mut parent, x) != root {
                return Err(Error::DisconnectedGraph);
            }
        }
        Ok(())
    }

    pub fn junctions(&self) -> &[Junction] {
        &self.junctions
    }

    pub fn fixed_heads(&self) -> &[FixedHead] {
        &self.fixed_heads
    }

    pub fn pipes(&self) -> &[Pipe] {
        &self.pipes
    }

    pub fn n_junctions(&self) -> usize {
        self.junctions.len()
    }

    pub fn n_fixed(&self) -> usize {
        self.fixed_heads.len()
    }

    pub fn n_pipes(&self) -> usize {
        self.pipes.len()
    }

    /// Number of independent loops, `n_p − n_n`. Non-negative for any
    /// connected network with at least one fixed head.
    pub fn n_loops(&self) -> usize {
        self.n_pipes() - self.n_junctions()
    }

    pub fn base_demands(&self) -> Vec<f64> {
        self.junctions.iter().map(|j| j.demand).collect()
    }

    pub fn fixed_head_values(&self) -> Vec<f64> {
        self.fixed_heads.iter().map(|f| f.head).collect()
    }

    /// Node-to-edge incidence matrices `(A12, A10)` for unknown-head and
    /// fixed-head nodes. Entry `+1` at `(j, i)` when pipe `j` enters node
    /// `i`, `−1` when it leaves; row order follows the pipe list, column
    /// order the node lists.
    pub fn incidence(&self) -> (SparseMatrix, SparseMatrix) {
        let mut t12 = Vec::new();
        let mut t10 = Vec::new();
        for (j, p) in self.pipes.iter().enumerate() {
            match p.to {
                NodeRef::Junction(i) => t12.push((j, i, 1.0)),
                NodeRef::Fixed(i) => t10.push((j, i, 1.0)),
            }
            match p.from {
                NodeRef::Junction(i) => t12.push((j, i, -1.0)),
                NodeRef::Fixed(i) => t10.push((j, i, -1.0)),
            }
        }
        let a12 = SparseMatrix::from_triplets(self.n_pipes(), self.n_junctions(), &t12, Symmetry::General)
            .expect("incidence construction cannot fail on a validated network");
        let a10 = SparseMatrix::from_triplets(self.n_pipes(), self.n_fixed(), &t10, Symmetry::General)
            .expect("incidence construction cannot fail on a validated network");
        (a12, a10)
    }

    /// Stable structural fingerprint used to pair precomputed data with the
    /// network it was built from.
    pub fn fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.n_junctions().hash(&mut h);
        self.n_fixed().hash(&mut h);
        for p in &self.pipes {
            p.id.hash(&mut h);
            match p.from {
                NodeRef::Junction(i) => (0u8, i).hash(&mut h),
                NodeRef::Fixed(i) => (1u8, i).hash(&mut h),
            }
            match p.to {
                NodeRef::Junction(i) => (0u8, i).hash(&mut h),
                NodeRef::Fixed(i) => (1u8, i).hash(&mut h),
            }
            p.length.to_bits().hash(&mut h);
            p.diameter.to_bits().hash(&mut h);
            p.roughness.to_bits().hash(&mut h);
        }
        h.finish()
    }

    /// Canonical JSON dump (SI units throughout).
    pub fn to_json(&self) -> String {
        json::to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Network> {
        json::from_json(text)
    }
}

/// A sequence of demand vectors, one per time step.
#[derive(Clone, PartialEq, Debug)]
pub struct DemandScenario {
    steps: Vec<Vec<f64>>,
    labels: Option<Vec<String>>,
}

impl DemandScenario {
    pub fn new(steps: Vec<Vec<f64>>, labels: Option<Vec<String>>, n_junctions: usize) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidNetwork("scenario has no steps".into()));
        }
        for (k, d) in steps.iter().enumerate() {
            if d.len() != n_junctions {
                return Err(Error::DimensionMismatch(format!(
                    "step {k} has {} demands for {n_junctions} junctions",
                    d.len()
                )));
            }
            if d.iter().any(|&x| !(x >= 0.0)) {
                return Err(Error::InvalidNetwork(format!("step {k} has a negative demand")));
            }
        }
        if let Some(l) = &labels {
            if l.len() != steps.len() {
                return Err(Error::DimensionMismatch("label count != step count".into()));
            }
        }
        Ok(Self { steps, labels })
    }

    pub fn single(demands: Vec<f64>, n_junctions: usize) -> Result<Self> {
        Self::new(vec![demands], None, n_junctions)
    }

    pub fn steps(&self) -> &[Vec<f64>] {
        &self.steps
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}
