//! Slow reference implementations for checking `shapeopt`.
//!
//! Everything here is written from the definitions with plain index
//! arithmetic and shares no code path with the solvers it checks (only the
//! field and problem types). None of it is meant for production use.

use std::collections::VecDeque;
use std::f64::consts::FRAC_1_SQRT_2;

use shapeopt::graph_cut::CutProblem;
use shapeopt::{BinaryMask, ScalarField, WeightField};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance too large for the oracle: {size} > {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("dimension mismatch")]
    DimensionMismatch,
}

pub type Result<T> = std::result::Result<T, OracleError>;

/// Largest grid the exhaustive minimizer accepts.
pub const MAX_BRUTE_FORCE_PIXELS: usize = 20;
/// Largest graph the reference max-flow accepts.
pub const MAX_REFERENCE_NODES: usize = 200;

/// Weighted pairwise terms of the anisotropic TV as `(a, b, c)`: the energy
/// pays `c |u_a - u_b|`. Read straight off the double sum over `(i, j)`:
/// axis neighbours `(i+1, j)`, `(i, j+1)` at `g/2`, diagonal neighbours
/// `(i+1, j+1)`, `(i-1, j+1)` at `g / (2 sqrt 2)`.
pub fn pairwise_terms(g: &WeightField) -> Vec<(usize, usize, f64)> {
    let (h, w) = g.dims();
    let idx = |i: usize, j: usize| i * w + j;
    let mut terms = Vec::new();
    for i in 0..h {
        for j in 0..w {
            let gij = g.get(i, j);
            if i + 1 < h {
                terms.push((idx(i, j), idx(i + 1, j), 0.5 * gij));
            }
            if j + 1 < w {
                terms.push((idx(i, j), idx(i, j + 1), 0.5 * gij));
            }
            if i + 1 < h && j + 1 < w {
                terms.push((idx(i, j), idx(i + 1, j + 1), 0.5 * FRAC_1_SQRT_2 * gij));
            }
            if i >= 1 && j + 1 < w {
                terms.push((idx(i, j), idx(i - 1, j + 1), 0.5 * FRAC_1_SQRT_2 * gij));
            }
        }
    }
    terms
}

/// The weighted anisotropic TV evaluated term by term.
pub fn tv_direct(u: &ScalarField, g: &WeightField) -> Result<f64> {
    if u.dims() != g.dims() {
        return Err(OracleError::DimensionMismatch);
    }
    let v = u.values();
    Ok(pairwise_terms(g)
        .into_iter()
        .map(|(a, b, c)| c * (v[a] - v[b]).abs())
        .sum())
}

fn mask_perimeter(bits: &[bool], terms: &[(usize, usize, f64)]) -> f64 {
    terms
        .iter()
        .filter(|(a, b, _)| bits[*a] != bits[*b])
        .map(|(_, _, c)| c)
        .sum()
}

/// Total variation rebuilt from the perimeters of the upper level sets,
/// each weighted by the gap to the next distinct value.
pub fn tv_by_coarea(u: &ScalarField, g: &WeightField) -> Result<f64> {
    if u.dims() != g.dims() {
        return Err(OracleError::DimensionMismatch);
    }
    let terms = pairwise_terms(g);
    let mut levels = u.values().to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    Ok(levels
        .windows(2)
        .map(|pair| {
            let t = 0.5 * (pair[0] + pair[1]);
            let bits: Vec<bool> = u.values().iter().map(|&v| v > t).collect();
            (pair[1] - pair[0]) * mask_perimeter(&bits, &terms)
        })
        .sum())
}

/// Binary shape energy `sum (alpha - f) theta + perimeter`, term by term.
pub fn energy_direct(theta: &BinaryMask, f: &ScalarField, g: &WeightField, alpha: f64) -> Result<f64> {
    if theta.dims() != f.dims() || f.dims() != g.dims() {
        return Err(OracleError::DimensionMismatch);
    }
    let data: f64 = theta
        .bits()
        .iter()
        .zip(f.values())
        .filter(|(b, _)| **b)
        .map(|(_, fv)| alpha - fv)
        .sum();
    Ok(data + mask_perimeter(theta.bits(), &pairwise_terms(g)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Enumeration {
    Ascending,
    Descending,
}

/// Exhaustive minimizer of the binary shape energy over all `2^(h w)`
/// masks. Energies are updated incrementally along a Gray-code walk; the
/// masks within `1e-9` of the best are re-evaluated exactly and the
/// lexicographically smallest optimum is returned.
pub fn brute_force_min(f: &ScalarField, g: &WeightField, alpha: f64) -> Result<(BinaryMask, f64)> {
    brute_force_min_ordered(f, g, alpha, Enumeration::Ascending)
}

pub fn brute_force_min_ordered(
    f: &ScalarField,
    g: &WeightField,
    alpha: f64,
    order: Enumeration,
) -> Result<(BinaryMask, f64)> {
    if f.dims() != g.dims() {
        return Err(OracleError::DimensionMismatch);
    }
    let (h, w) = f.dims();
    let n = h * w;
    if n > MAX_BRUTE_FORCE_PIXELS {
        return Err(OracleError::TooLarge {
            size: n,
            limit: MAX_BRUTE_FORCE_PIXELS,
        });
    }
    let unary: Vec<f64> = f.values().iter().map(|fv| alpha - fv).collect();
    let mut adjacency = vec![Vec::new(); n];
    for (a, b, c) in pairwise_terms(g) {
        adjacency[a].push((b, c));
        adjacency[b].push((a, c));
    }

    // Gray-code walk over all masks
    let total = 1u64 << n;
    let mut bits = vec![false; n];
    let mut energy = 0.0;
    let mut visited: Vec<(u64, f64)> = Vec::with_capacity(total as usize);
    visited.push((0, 0.0));
    let mut code = 0u64;
    for step in 1..total {
        let k = step.trailing_zeros() as usize;
        let on = !bits[k];
        let mut delta = if on { unary[k] } else { -unary[k] };
        for &(l, c) in &adjacency[k] {
            // |theta_k - theta_l| flips between 0 and 1
            delta += if bits[l] != on { c } else { -c };
        }
        bits[k] = on;
        code ^= 1 << k;
        energy += delta;
        visited.push((code, energy));
    }
    if order == Enumeration::Descending {
        visited.reverse();
    }
    let best = visited.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);

    let mut winner: Option<(Vec<bool>, f64)> = None;
    for &(code, e) in &visited {
        if e > best + 1e-9 {
            continue;
        }
        let mask = BinaryMask::from_code(h, w, code).expect("n <= 20");
        let exact = energy_direct(&mask, f, g, alpha)?;
        let better = match &winner {
            None => true,
            Some((wb, we)) => exact < *we || (exact == *we && mask.bits() < &wb[..]),
        };
        if better {
            winner = Some((mask.bits().to_vec(), exact));
        }
    }
    let (bits, e) = winner.expect("at least one mask");
    Ok((BinaryMask::new(h, w, bits).expect("valid dims"), e))
}

/// Max-flow value by shortest augmenting paths (Edmonds-Karp) on a dense
/// residual matrix with explicit source and sink vertices. BFS walks a
/// neighbour list fixed up front, since residual arcs only appear between
/// vertices already joined by some arc.
pub fn reference_max_flow(problem: &CutProblem) -> Result<f64> {
    let n = problem.node_count();
    if n > MAX_REFERENCE_NODES {
        return Err(OracleError::TooLarge {
            size: n,
            limit: MAX_REFERENCE_NODES,
        });
    }
    let (s, t) = (n, n + 1);
    let m = n + 2;
    let mut cap = vec![vec![0.0f64; m]; m];
    for (i, tc) in problem.terminals().iter().enumerate() {
        cap[s][i] += tc.source;
        cap[i][t] += tc.sink;
    }
    for a in problem.arcs() {
        cap[a.from][a.to] += a.cap;
        cap[a.to][a.from] += a.reverse_cap;
    }
    let neighbours: Vec<Vec<usize>> = (0..m)
        .map(|x| (0..m).filter(|&y| cap[x][y] > 0.0 || cap[y][x] > 0.0).collect())
        .collect();
    let mut flow = 0.0;
    loop {
        let mut prev = vec![usize::MAX; m];
        prev[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            if x == t {
                break;
            }
            for &y in &neighbours[x] {
                if prev[y] == usize::MAX && cap[x][y] > 0.0 {
                    prev[y] = x;
                    queue.push_back(y);
                }
            }
        }
        if prev[t] == usize::MAX {
            return Ok(flow);
        }
        let mut b = f64::INFINITY;
        let mut y = t;
        while y != s {
            let x = prev[y];
            b = b.min(cap[x][y]);
            y = x;
        }
        let mut y = t;
        while y != s {
            let x = prev[y];
            cap[x][y] -= b;
            cap[y][x] += b;
            y = x;
        }
        flow += b;
    }
}

/// Dense matrices of the axis and diagonal gradients, rows ordered
/// `[x components; y components]`, built from the difference definitions.
pub fn dense_gradients(h: usize, w: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = h * w;
    let mut axis = vec![vec![0.0; n]; 2 * n];
    let mut diag = vec![vec![0.0; n]; 2 * n];
    for i in 0..h {
        for j in 0..w {
            let k = i * w + j;
            if i + 1 < h {
                axis[k][k + w] += 1.0;
                axis[k][k] -= 1.0;
            }
            if j + 1 < w {
                axis[n + k][k + 1] += 1.0;
                axis[n + k][k] -= 1.0;
            }
            if i + 1 < h && j + 1 < w {
                diag[k][(i + 1) * w + j + 1] += FRAC_1_SQRT_2;
                diag[k][k] -= FRAC_1_SQRT_2;
            }
            if i >= 1 && j + 1 < w {
                diag[n + k][(i - 1) * w + j + 1] += FRAC_1_SQRT_2;
                diag[n + k][k] -= FRAC_1_SQRT_2;
            }
        }
    }
    (axis, diag)
}

/// `(A^T A + D^T D) / 2` for the dense gradients `A`, `D`.
pub fn dense_step_operator(h: usize, w: usize) -> Vec<Vec<f64>> {
    let n = h * w;
    let (a, d) = dense_gradients(h, w);
    let mut m = vec![vec![0.0; n]; n];
    for (r, row) in m.iter_mut().enumerate() {
        for (c, entry) in row.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in 0..2 * n {
                s += a[k][r] * a[k][c] + d[k][r] * d[k][c];
            }
            *entry = 0.5 * s;
        }
    }
    m
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(matrix: &[Vec<f64>]) -> Vec<f64> {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum();
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (head, tail) = a.split_at_mut(q);
                for (x, y) in head[p].iter_mut().zip(tail[0].iter_mut()) {
                    let (apk, aqk) = (*x, *y);
                    *x = c * apk - s * aqk;
                    *y = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|k| a[k][k]).collect()
}
