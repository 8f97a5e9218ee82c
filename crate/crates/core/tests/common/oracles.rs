//! Independent oracles for the attribution and ranking pipeline. Each check
//! returns the first disagreement as an error message.

#![allow(dead_code)]

use std::f64::consts::PI;

use lidarxai_core::attribution::{map_to_objects, postprocess, ObjectScore, ProcessedAttribution};
use lidarxai_core::policy::actor::actor_specs;
use lidarxai_core::policy::{Mlp, MlpPolicy, OutputHead};
use lidarxai_core::study::kendall::ranking_tau_scores;
use lidarxai_core::study::{ranking_tau, tau_b};
use lidarxai_core::world::lidar::{ray_angle, RAYS_PER_SECTOR};
use lidarxai_core::world::{
    pool, raycast, sample_scene, scan, ObstacleId, Pose, SamplerConfig, StateVector, Vec2, NUM_RAYS, NUM_SECTORS,
    STATE_DIM,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_policy(seed: u64) -> MlpPolicy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    MlpPolicy::from_network(Mlp::new(&actor_specs(), &mut rng)).unwrap()
}

pub fn random_state(rng: &mut impl Rng) -> StateVector {
    let mut s = [0.0; STATE_DIM];
    for (i, v) in s.iter_mut().enumerate() {
        *v = if i < 15 {
            rng.random_range(0.0..1.0)
        } else if i == 15 {
            rng.random_range(0.0..0.8)
        } else {
            rng.random_range(-1.0..1.0)
        };
    }
    StateVector(s)
}

/// Analytic input gradient against central differences with step `1e-5`,
/// relative tolerance `1e-4` and absolute floor `1e-6`.
pub fn gradient_matches_finite_differences(nets: u64) -> Result<(), String> {
    const H: f64 = 1e-5;
    let close = |a: f64, n: f64| (a - n).abs() <= (1e-4 * a.abs().max(n.abs())).max(1e-6);
    for seed in 0..nets {
        let policy = random_policy(seed);
        let state = random_state(&mut ChaCha8Rng::seed_from_u64(seed + 10_000));
        for head in [OutputHead::V, OutputHead::Omega] {
            let grad = policy.input_gradient(&state, head).unwrap();
            let f = |s: &StateVector| policy.forward(s).unwrap().pre_clamp[head.index()];
            for i in 0..STATE_DIM {
                let mut plus = state;
                let mut minus = state;
                plus.0[i] += H;
                minus.0[i] -= H;
                let numeric = (f(&plus) - f(&minus)) / (2.0 * H);
                if !close(grad[i], numeric) {
                    return Err(format!(
                        "net {seed} {head:?} input {i}: analytic {} numeric {numeric}",
                        grad[i]
                    ));
                }
            }
        }
    }
    Ok(())
}

pub fn random_g(rng: &mut impl Rng) -> [f64; NUM_SECTORS] {
    let scale = 10f64.powf(rng.random_range(-6.0..2.0));
    std::array::from_fn(|_| rng.random_range(-1.0..1.0) * scale)
}

/// Range, extremes and scale/sign invariance of the min-max scaling.
pub fn postprocess_properties(cases: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..cases {
        let g = random_g(&mut rng);
        let p = postprocess(&g).g_star;
        if !p.iter().all(|v| (0.0..=1.0).contains(v)) {
            return Err(format!("case {case}: value outside [0, 1]: {p:?}"));
        }
        let min = p.iter().copied().fold(f64::INFINITY, f64::min);
        let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if min != 0.0 || max != 1.0 {
            return Err(format!("case {case}: min {min} max {max}"));
        }
        let c = 10f64.powf(rng.random_range(-3.0..3.0));
        let scaled = postprocess(&g.map(|v| v * c)).g_star;
        let negated = postprocess(&g.map(|v| -v)).g_star;
        for i in 0..NUM_SECTORS {
            if (scaled[i] - p[i]).abs() > 1e-12 {
                return Err(format!("case {case}: scaling by {c} moved sector {i} by {}", scaled[i] - p[i]));
            }
            if (negated[i] - p[i]).abs() > 1e-12 {
                return Err(format!("case {case}: negation moved sector {i}"));
            }
        }
    }
    Ok(())
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// τ-b from an all-pairs count; `None` when one side is entirely tied.
pub fn brute_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    let (mut c, mut d, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let sx = x[i].partial_cmp(&x[j]).unwrap();
            let sy = y[i].partial_cmp(&y[j]).unwrap();
            match (sx.is_eq(), sy.is_eq()) {
                (true, true) => {}
                (true, false) => tx += 1,
                (false, true) => ty += 1,
                (false, false) => {
                    if sx == sy {
                        c += 1
                    } else {
                        d += 1
                    }
                }
            }
        }
    }
    let denom = (((c + d + tx) * (c + d + ty)) as f64).sqrt();
    (denom > 0.0).then(|| (c - d) as f64 / denom)
}

fn ids(p: &[usize]) -> Vec<ObstacleId> {
    p.iter().map(|&i| ObstacleId(i as u32)).collect()
}

/// Every pair of permutations of `2..=max_n` elements.
pub fn kendall_exhaustive(max_n: usize) -> Result<usize, String> {
    let mut checked = 0;
    for n in 2..=max_n {
        let perms = permutations(n);
        for a in &perms {
            for b in &perms {
                let got = ranking_tau(&ids(a), &ids(b)).map_err(|e| format!("{a:?} vs {b:?}: {e}"))?;
                let pos = |p: &[usize], v: usize| p.iter().position(|&x| x == v).unwrap() as f64;
                let xs: Vec<f64> = (0..n).map(|v| pos(a, v)).collect();
                let ys: Vec<f64> = (0..n).map(|v| pos(b, v)).collect();
                let expected = brute_tau_b(&xs, &ys).unwrap();
                if got != expected {
                    return Err(format!("{a:?} vs {b:?}: {got} vs {expected}"));
                }
                checked += 1;
            }
        }
    }
    Ok(checked)
}

/// Strict submitted orders against ground truths with tied scores.
pub fn kendall_tied_ground_truths(cases: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    while checked < cases {
        let n = rng.random_range(2..=6);
        let levels = rng.random_range(1..=n);
        let scores: Vec<(ObstacleId, f64)> = (0..n)
            .map(|i| (ObstacleId(i as u32), rng.random_range(0..levels) as f64 / levels as f64))
            .collect();
        let mut submitted: Vec<usize> = (0..n).collect();
        submitted.shuffle(&mut rng);
        let xs: Vec<f64> = (0..n)
            .map(|v| -(submitted.iter().position(|&x| x == v).unwrap() as f64))
            .collect();
        let ys: Vec<f64> = scores.iter().map(|s| s.1).collect();
        let got = ranking_tau_scores(&ids(&submitted), &scores);
        match (brute_tau_b(&xs, &ys), got) {
            (Some(expected), Ok(got)) => {
                if (got - expected).abs() >= 1e-12 {
                    return Err(format!("{submitted:?} {scores:?}: {got} vs {expected}"));
                }
                checked += 1;
            }
            (None, Err(_)) => {}
            (expected, got) => return Err(format!("{submitted:?} {scores:?}: {got:?} vs {expected:?}")),
        }
    }
    Ok(())
}

/// Tied samples of arbitrary length on both sides.
pub fn kendall_general_ties(cases: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..cases {
        let n = rng.random_range(2..=40);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..5) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..5) as f64).collect();
        match (brute_tau_b(&x, &y), tau_b(&x, &y)) {
            (Some(expected), Ok(got)) if (got - expected).abs() < 1e-12 => {}
            (None, Err(_)) => {}
            (expected, got) => return Err(format!("{x:?} {y:?}: {got:?} vs {expected:?}")),
        }
    }
    Ok(())
}

/// Object scores and ground-truth order rebuilt from a per-ray loop over
/// (sector, hit object, score) triples.
pub fn mapping_matches_exhaustive_loop(scenes: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = SamplerConfig::training();
    for case in 0..scenes {
        let scene = sample_scene(&mut rng, &cfg).unwrap();
        let pose = Pose::new(
            Vec2::new(rng.random_range(-3.5..3.5), rng.random_range(-3.5..3.5)),
            rng.random_range(-PI..PI),
        );
        let s = scan(&scene, &pose);
        let pooled = pool(&s);
        let processed = ProcessedAttribution {
            g_star: postprocess(&random_g(&mut rng)).g_star,
        };
        let got = map_to_objects(&processed, &pooled, &s, &scene);

        let mut triples: Vec<(usize, Option<ObstacleId>, f64)> = Vec::new();
        for sector in 0..NUM_SECTORS {
            let mut best: Option<(f64, Option<ObstacleId>)> = None;
            for k in sector * RAYS_PER_SECTOR..(sector + 1) * RAYS_PER_SECTOR {
                debug_assert!(k < NUM_RAYS);
                let (d, hit) = raycast(&scene, pose.position, Vec2::from_angle(ray_angle(pose.heading, k)));
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, hit));
                }
            }
            triples.push((sector, best.unwrap().1, processed.g_star[sector]));
        }
        let expected: Vec<ObjectScore> = scene
            .obstacles
            .iter()
            .map(|o| ObjectScore {
                id: o.id,
                score: triples
                    .iter()
                    .filter(|t| t.1 == Some(o.id))
                    .map(|t| t.2)
                    .fold(0.0, f64::max),
            })
            .collect();
        if got.scores != expected {
            return Err(format!("scene {case}: {:?} vs {expected:?}", got.scores));
        }
        for (pos, id) in got.ground_truth_ranking.iter().enumerate() {
            let me = expected.iter().find(|s| s.id == *id).unwrap();
            let ahead = expected
                .iter()
                .filter(|o| o.score > me.score || (o.score == me.score && o.id < me.id))
                .count();
            if ahead != pos {
                return Err(format!("scene {case}: object {id:?} ranked {pos}, expected {ahead}"));
            }
        }
    }
    Ok(())
}
