//! Shared generators and independent oracles for the integration tests.
#![allow(dead_code)]

use distreg::measures::{make_discrete, DiscreteDistribution, Points};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random weights on `m` atoms, each bounded away from zero.
pub fn random_weights(r: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| 0.05 + r.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// Random distribution on R^d with 1..=max_support atoms in [-scale, scale]^d.
/// One-dimensional atoms are rounded to a grid so ties occur.
pub fn random_discrete(r: &mut ChaCha8Rng, d: usize, max_support: usize, scale: f64) -> DiscreteDistribution {
    let m = r.random_range(1..=max_support);
    let coords: Vec<f64> = (0..m * d)
        .map(|_| {
            let v = scale * (2.0 * r.random::<f64>() - 1.0);
            if d == 1 && r.random::<f64>() < 0.3 {
                (v * 4.0).round() / 4.0
            } else {
                v
            }
        })
        .collect();
    make_discrete(Points::new(coords, d).unwrap(), random_weights(r, m)).unwrap()
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Flows of the basic solution with basic cells `cells`, if the cells form a
/// spanning tree of the row/column graph. Found by repeatedly settling a row
/// or column that has a single unsettled basic cell.
fn basic_solution(cells: &[usize], supply: &[f64], demand: &[f64]) -> Option<Vec<f64>> {
    let (m, n) = (supply.len(), demand.len());
    let mut rs = supply.to_vec();
    let mut cs = demand.to_vec();
    let mut flow = vec![0.0; m * n];
    let mut open: Vec<usize> = cells.to_vec();
    while !open.is_empty() {
        let mut progressed = false;
        for line in 0..m + n {
            let members: Vec<usize> = open
                .iter()
                .copied()
                .filter(|&c| if line < m { c / n == line } else { c % n == line - m })
                .collect();
            if members.len() != 1 {
                continue;
            }
            let c = members[0];
            let (i, j) = (c / n, c % n);
            let x = if line < m { rs[i] } else { cs[j] };
            flow[c] = x;
            rs[i] -= x;
            cs[j] -= x;
            open.retain(|&o| o != c);
            progressed = true;
        }
        if !progressed {
            return None;
        }
    }
    let residual = rs.iter().chain(&cs).map(|v| v.abs()).fold(0.0, f64::max);
    (residual < 1e-12).then_some(flow)
}

fn subsets(total: usize, size: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == size {
        out.push(cur.clone());
        return;
    }
    for c in start..total {
        if total - c < size - cur.len() {
            break;
        }
        cur.push(c);
        subsets(total, size, c + 1, cur, out);
        cur.pop();
    }
}

/// Minimum transport cost over all vertices of the transportation polytope,
/// by enumerating every (m + n − 1)-subset of cells.
pub fn brute_force_cost(a: &DiscreteDistribution, b: &DiscreteDistribution, p: f64) -> f64 {
    let (m, n) = (a.len(), b.len());
    let cost: Vec<f64> = a
        .atoms()
        .rows()
        .flat_map(|ya| b.atoms().rows().map(move |yb| euclid(ya, yb).powf(p)))
        .collect();
    let mut all = Vec::new();
    subsets(m * n, m + n - 1, 0, &mut Vec::new(), &mut all);
    let mut best = f64::INFINITY;
    for cells in all {
        if let Some(flow) = basic_solution(&cells, a.weights(), b.weights()) {
            if flow.iter().all(|&f| f >= -1e-13) {
                let c: f64 = flow.iter().zip(&cost).map(|(f, c)| f * c).sum();
                best = best.min(c);
            }
        }
    }
    best
}
