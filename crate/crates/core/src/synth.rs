//! Synthetic desk-scale networks and demand scenarios used as fixtures by
//! tests and the benchmark driver: a single pipe, a parallel pair, a
//! triangle, a square loop, rectangular grids and a seeded random generator.
//! All of them are deterministic for a given seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::net::{DemandScenario, FixedHead, HeadlossModel, Junction, Network, PipeSpec};

fn pipe(
    id: String,
    from: &str,
    to: &str,
    length: f64,
    diameter: f64,
    model: HeadlossModel,
    roughness_hw: f64,
) -> PipeSpec {
    PipeSpec {
        id,
        from: from.into(),
        to: to.into(),
        length,
        diameter,
        roughness: match model {
            HeadlossModel::HazenWilliams => roughness_hw,
            // Rough pipe (0.5 mm) keeps the friction factor close to its
            // fully-turbulent asymptote at fixture flow rates.
            HeadlossModel::DarcyWeisbach => 5e-4,
        },
        model,
    }
}

/// Reservoir at 50 m feeding one junction with 0.01 m³/s through a single
/// 1000 m, 0.3 m pipe.
pub fn single_pipe(model: HeadlossModel) -> Network {
    Network::build(
        vec![Junction { id: "J1".into(), demand: 0.01 }],
        vec![FixedHead { id: "R".into(), head: 50.0 }],
        vec![pipe("P1".into(), "R", "J1", 1000.0, 0.3, model, 100.0)],
    )
    .expect("fixture is valid")
}

/// Two identical pipes between the reservoir and one junction; by symmetry
/// each carries half the demand.
pub fn parallel_pair(model: HeadlossModel) -> Network {
    Network::build(
        vec![Junction { id: "J1".into(), demand: 0.02 }],
        vec![FixedHead { id: "R".into(), head: 50.0 }],
        vec![
            pipe("P1".into(), "R", "J1", 800.0, 0.25, model, 110.0),
            pipe("P2".into(), "R", "J1", 800.0, 0.25, model, 110.0),
        ],
    )
    .expect("fixture is valid")
}

/// Three junctions behind one feeder with mixed diameters and one loop.
pub fn triangle(model: HeadlossModel) -> Network {
    Network::build(
        vec![
            Junction { id: "A".into(), demand: 0.012 },
            Junction { id: "B".into(), demand: 0.02 },
            Junction { id: "C".into(), demand: 0.016 },
        ],
        vec![FixedHead { id: "R".into(), head: 60.0 }],
        vec![
            pipe("P1".into(), "R", "A", 600.0, 0.35, model, 120.0),
            pipe("P2".into(), "A", "B", 400.0, 0.25, model, 100.0),
            pipe("P3".into(), "A", "C", 500.0, 0.2, model, 110.0),
            pipe("P4".into(), "B", "C", 300.0, 0.15, model, 95.0),
        ],
    )
    .expect("fixture is valid")
}

/// Ring of four pipes through the reservoir: one pseudo-loop (n_l = 1).
pub fn square_loop(model: HeadlossModel) -> Network {
    Network::build(
        vec![
            Junction { id: "a".into(), demand: 0.015 },
            Junction { id: "b".into(), demand: 0.02 },
            Junction { id: "c".into(), demand: 0.01 },
        ],
        vec![FixedHead { id: "R".into(), head: 55.0 }],
        vec![
            pipe("P1".into(), "R", "a", 500.0, 0.3, model, 110.0),
            pipe("P2".into(), "a", "b", 400.0, 0.25, model, 100.0),
            pipe("P3".into(), "b", "c", 400.0, 0.2, model, 105.0),
            pipe("P4".into(), "c", "R", 500.0, 0.3, model, 115.0),
        ],
    )
    .expect("fixture is valid")
}

/// Rectangular grid of `nx × ny` nodes with the corner node as reservoir.
/// Demands span several decades (most junctions draw very little, a few
/// dominate) the way operational models do, so pipe flows and Newton step
/// sizes are strongly heterogeneous; diameters vary with position so no flow
/// vanishes by symmetry. `grid(10, 10, ..)` has 180 pipes, 99 junctions and
/// 81 loops.
pub fn grid(nx: usize, ny: usize, model: HeadlossModel) -> Network {
    assert!(nx >= 2 && ny >= 2, "grid needs at least 2x2 nodes");
    let name = |x: usize, y: usize| format!("N{x}_{y}");
    let mut junctions = Vec::new();
    for y in 0..ny {
        for x in 0..nx {
            if x == 0 && y == 0 {
                continue;
            }
            // 2.5 L/s down to well under 1 mL/s on a log scale, so pipe
            // flows span several decades like operational models.
            let decade = ((3 * x + 5 * y + 1) % 10) as f64;
            let demand = 2.5e-3 * 10f64.powf(-0.5 * decade);
            junctions.push(Junction { id: name(x, y), demand });
        }
    }
    let fixed = vec![FixedHead { id: name(0, 0), head: 80.0 }];
    let mut pipes = Vec::new();
    let mut k = 0usize;
    let mut add = |from: String, to: String, salt: usize, pipes: &mut Vec<PipeSpec>| {
        let diameter = 0.08 + 0.02 * ((salt % 5) as f64);
        let c = 90.0 + 10.0 * ((salt % 5) as f64);
        pipes.push(pipe(format!("P{k}"), &from, &to, 600.0, diameter, model, c));
        k += 1;
    };
    for y in 0..ny {
        for x in 0..nx {
            if x + 1 < nx {
                add(name(x, y), name(x + 1, y), 3 * x + 7 * y, &mut pipes);
            }
            if y + 1 < ny {
                add(name(x, y), name(x, y + 1), 5 * x + 2 * y + 1, &mut pipes);
            }
        }
    }
    Network::build(junctions, fixed, pipes).expect("fixture is valid")
}

/// Random connected network: a random spanning tree over `n_nodes` plus
/// `extra_chords` additional pipes (parallel pipes allowed), with one to
/// three reservoirs. Deterministic in the seed; `n_p = n_nodes − n_0 + extra_chords`
/// never exceeds 500 for the sizes used in tests.
pub fn random_connected(n_nodes: usize, extra_chords: usize, seed: u64, model: HeadlossModel) -> Network {
    assert!(n_nodes >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_fixed = 1 + rng.random_range(0..(n_nodes - 1).min(3));
    let name = |i: usize| format!("N{i}");

    // Nodes 0..n_fixed are reservoirs.
    let fixed: Vec<FixedHead> = (0..n_fixed)
        .map(|i| FixedHead {
            id: name(i),
            head: 40.0 + rng.random_range(0.0..30.0),
        })
        .collect();
    let junctions: Vec<Junction> = (n_fixed..n_nodes)
        .map(|i| Junction {
            id: name(i),
            demand: 1e-3 + rng.random_range(0.0..9e-3),
        })
        .collect();

    let mut pipes = Vec::new();
    let mut k = 0usize;
    let mut add_pipe = |a: usize, b: usize, rng: &mut ChaCha8Rng, pipes: &mut Vec<PipeSpec>| {
        let length = 50.0 + rng.random_range(0.0..450.0);
        let diameter = 0.1 + rng.random_range(0.0..0.3);
        let c = 80.0 + rng.random_range(0.0..60.0);
        pipes.push(pipe(format!("P{k}"), &name(a), &name(b), length, diameter, model, c));
        k += 1;
    };
    // Random attachment spanning tree; node i > 0 hooks onto an earlier node.
    for i in 1..n_nodes {
        let j = rng.random_range(0..i);
        add_pipe(j, i, &mut rng, &mut pipes);
    }
    for _ in 0..extra_chords {
        let a = rng.random_range(0..n_nodes);
        let mut b = rng.random_range(0..n_nodes);
        if a == b {
            b = (b + 1) % n_nodes;
        }
        add_pipe(a, b, &mut rng, &mut pipes);
    }
    Network::build(junctions, fixed, pipes).expect("generator produces valid networks")
}

/// Diurnal-looking demand scenario: base demands scaled per step by a
/// sinusoid plus seeded noise, with small per-junction jitter. Multipliers
/// are clamped away from zero so demands stay nonnegative.
pub fn synthetic_scenario(net: &Network, steps: usize, seed: u64) -> DemandScenario {
    assert!(steps >= 1);
    let base = net.base_demands();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(steps);
    let mut labels = Vec::with_capacity(steps);
    for t in 0..steps {
        let phase = 2.0 * std::f64::consts::PI * (t as f64) / (steps as f64);
        let global = 1.0 + 0.5 * phase.sin() + 0.1 * (rng.random_range(-1.0..1.0));
        let global = global.max(0.05);
        let step: Vec<f64> = base
            .iter()
            .map(|d| {
                let jitter = 1.0 + 0.05 * rng.random_range(-1.0..1.0f64);
                d * global * jitter.max(0.0)
            })
            .collect();
        out.push(step);
        labels.push(format!("t{t}"));
    }
    DemandScenario::new(out, Some(labels), net.n_junctions()).expect("synthetic demands are valid")
}
