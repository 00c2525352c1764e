#![allow(dead_code)]

use nalgebra::DMatrix;
use obsrec::analysis::classify_sensors;
use obsrec::digraph::{Sensor, SystemPattern};
use obsrec::estimator::{build_network, instantiate, EstimatorNetwork, GainMatrix, NumericSystem};
use obsrec::sim::generate_random_scenario;
use obsrec_oracles as oracle;
use rand::{Rng, SeedableRng};

pub fn random_pattern(n: usize, density: f64, seed: u64) -> SystemPattern {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let edges = (0..n)
        .flat_map(|j| (0..n).map(move |i| (j, i)))
        .filter(|_| rng.random_bool(density))
        .collect();
    SystemPattern::new(n, edges, vec![]).unwrap()
}

pub fn sensor_states(p: &SystemPattern) -> Vec<Vec<usize>> {
    p.sensors().iter().map(|s| s.states.clone()).collect()
}

pub fn oracle_verdict(p: &SystemPattern, seed: u64) -> bool {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    oracle::generic_rank_observable(p.n(), p.edges(), &sensor_states(p), 3, &mut rng)
        .expect("generic-rank draws disagree")
}

/// `W ⊗ A − K D_H (W ⊗ A)` assembled entry by entry from the definitions.
pub fn explicit_closed_loop(
    system: &NumericSystem,
    network: &EstimatorNetwork,
    gain: &GainMatrix,
) -> DMatrix<f64> {
    let n = system.n();
    let m = network.len();
    let w = network.weights();
    let mut wa = DMatrix::zeros(m * n, m * n);
    for i in 0..m {
        for j in 0..m {
            for r in 0..n {
                for c in 0..n {
                    wa[(i * n + r, j * n + c)] = w[(i, j)] * system.a[(r, c)];
                }
            }
        }
    }
    let mut dh = DMatrix::zeros(m * n, m * n);
    let mut k = DMatrix::zeros(m * n, m * n);
    for i in 0..m {
        let members: Vec<usize> = (0..m).filter(|&j| j == i || network.is_alpha(j)).collect();
        for &j in &members {
            let h = &system.sensor(&network.ids()[j]).unwrap().h;
            let g = h.transpose() * h;
            for r in 0..n {
                for c in 0..n {
                    dh[(i * n + r, i * n + c)] += g[(r, c)];
                }
            }
        }
        for r in 0..n {
            for c in 0..n {
                k[(i * n + r, i * n + c)] = gain.blocks[i][(r, c)];
            }
        }
    }
    &wa - &k * &dh * &wa
}

/// Random pattern with a cycle, `m` random sensors and a random network.
pub fn random_instance(seed: u64) -> (SystemPattern, NumericSystem, EstimatorNetwork) {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let n = rng.random_range(2..=6);
    let base = generate_random_scenario(n, rng.random_range(0.15..0.6), seed).pattern;
    let m = rng.random_range(1..=4);
    let sensors: Vec<Sensor> = (0..m)
        .map(|k| {
            let count = rng.random_range(1..=2);
            let mut states: Vec<usize> = (0..count).map(|_| rng.random_range(0..n)).collect();
            states.sort_unstable();
            states.dedup();
            Sensor::new(format!("s{k}"), states)
        })
        .collect();
    let pattern = base.with_sensors(sensors).unwrap();
    let system = instantiate(&pattern, rng.random_range(0.5..1.5), seed).unwrap();
    let network = build_network(&classify_sensors(&pattern), seed).unwrap();
    (pattern, system, network)
}
