//! Independent reference implementations shared by the integration and
//! acceptance suites. Everything here is written from the definitions with
//! dense, brute-force methods and uses none of the library's algorithms.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng as _;
use trigon_core::autodiff::DMatrix;
use trigon_core::rng::{Rng, SeedStream};
use trigon_core::Graph;

pub fn rng(name: &str, seed: u64) -> Rng {
    SeedStream::new(seed).substream(name)
}

/// Erdős–Rényi graph.
pub fn random_graph(n: usize, p: f64, rng: &mut Rng) -> Graph {
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                pairs.push((u, v));
            }
        }
    }
    Graph::from_pairs(n, pairs).unwrap()
}

/// Random recursive tree plus Erdős–Rényi extra edges; always connected.
pub fn random_connected_graph(n: usize, p: f64, rng: &mut Rng) -> Graph {
    let mut pairs = Vec::new();
    for v in 1..n {
        pairs.push((rng.random_range(0..v), v));
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                pairs.push((u, v));
            }
        }
    }
    Graph::from_pairs(n, pairs).unwrap()
}

pub fn adjacency(g: &Graph) -> Vec<Vec<bool>> {
    let mut a = vec![vec![false; g.n()]; g.n()];
    for (u, v) in g.edges() {
        a[u][v] = true;
        a[v][u] = true;
    }
    a
}

pub fn degrees(a: &[Vec<bool>]) -> Vec<usize> {
    a.iter()
        .map(|row| row.iter().filter(|&&x| x).count())
        .collect()
}

/// All-pairs hop distances.
pub fn floyd_warshall(g: &Graph) -> Vec<Vec<Option<usize>>> {
    let n = g.n();
    let a = adjacency(g);
    let mut d: Vec<Vec<Option<usize>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        Some(0)
                    } else if a[i][j] {
                        Some(1)
                    } else {
                        None
                    }
                })
                .collect()
        })
        .collect();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(x), Some(y)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|c| x + y < c) {
                        d[i][j] = Some(x + y);
                    }
                }
            }
        }
    }
    d
}

/// `None` when disconnected.
pub fn fw_diameter(g: &Graph) -> Option<usize> {
    let d = floyd_warshall(g);
    let mut best = 0;
    for row in &d {
        for &x in row {
            best = best.max(x?);
        }
    }
    Some(best)
}

/// Triangles by testing every node triple.
pub fn brute_triangles(g: &Graph) -> BTreeSet<[usize; 3]> {
    let a = adjacency(g);
    let n = g.n();
    let mut out = BTreeSet::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if a[i][j] && a[j][k] && a[i][k] {
                    out.insert([i, j, k]);
                }
            }
        }
    }
    out
}

/// Balanced Forman curvature from an exhaustive scan of all node pairs
/// `(k, w)` closing a 4-cycle `u - v - w - k - u` without diagonals.
pub fn motif_curvature(g: &Graph, u: usize, v: usize) -> f64 {
    let a = adjacency(g);
    let n = g.n();
    let deg = degrees(&a);
    let (du, dv) = (deg[u] as f64, deg[v] as f64);
    let t = (0..n).filter(|&k| a[u][k] && a[v][k]).count() as f64;
    let mut ks = BTreeSet::new();
    let mut ws = BTreeSet::new();
    let mut through = vec![0usize; n];
    for k in 0..n {
        for w in 0..n {
            let distinct = k != w && k != u && k != v && w != u && w != v;
            if distinct && a[u][k] && a[k][w] && a[w][v] && !a[k][v] && !a[w][u] {
                ks.insert(k);
                ws.insert(w);
                through[k] += 1;
                through[w] += 1;
            }
        }
    }
    // a node lies on the u side or the v side, never both
    let gamma = ks.iter().chain(&ws).map(|&x| through[x]).max().unwrap_or(0) as f64;
    let (max, min) = (du.max(dv), du.min(dv));
    let mut c = 2.0 / du + 2.0 / dv - 2.0 + 2.0 * t / max + t / min;
    if gamma > 0.0 {
        c += (ks.len() + ws.len()) as f64 / (gamma * max);
    }
    c
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(mut m: Vec<Vec<f64>>) -> Vec<f64> {
    let n = m.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `I - D^{-1/2} A D^{-1/2}` on a graph without isolated nodes.
pub fn normalized_laplacian(g: &Graph) -> Vec<Vec<f64>> {
    let a = adjacency(g);
    let deg = degrees(&a);
    let n = g.n();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d = if i == j { 1.0 } else { 0.0 };
                    if a[i][j] {
                        d - 1.0 / ((deg[i] * deg[j]) as f64).sqrt()
                    } else {
                        d
                    }
                })
                .collect()
        })
        .collect()
}

pub fn lambda2_oracle(g: &Graph) -> f64 {
    jacobi_eigenvalues(normalized_laplacian(g))[1]
}

/// Solves `m x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / m[r][r];
    }
    x
}

/// Effective resistance on a connected graph: inject a unit current at `u`
/// with `v` grounded and read off the potential at `u`.
pub fn resistance_oracle(g: &Graph, u: usize, v: usize) -> f64 {
    if u == v {
        return 0.0;
    }
    let a = adjacency(g);
    let deg = degrees(&a);
    let keep: Vec<usize> = (0..g.n()).filter(|&i| i != v).collect();
    let m: Vec<Vec<f64>> = keep
        .iter()
        .map(|&i| {
            keep.iter()
                .map(|&j| {
                    if i == j {
                        deg[i] as f64
                    } else if a[i][j] {
                        -1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let b: Vec<f64> = keep
        .iter()
        .map(|&i| if i == u { 1.0 } else { 0.0 })
        .collect();
    let x = solve(m, b);
    x[keep.iter().position(|&i| i == u).unwrap()]
}

/// `min |∂S| / min(vol S, vol S^c)` over every proper nonempty subset.
pub fn exhaustive_cheeger(g: &Graph) -> f64 {
    let n = g.n();
    let a = adjacency(g);
    let deg = degrees(&a);
    let total: usize = deg.iter().sum();
    let mut best = f64::INFINITY;
    for mask in 1u64..(1u64 << n) - 1 {
        let inside = |i: usize| mask >> i & 1 == 1;
        let vol: usize = (0..n).filter(|&i| inside(i)).map(|i| deg[i]).sum();
        let mut cut = 0;
        for i in 0..n {
            for j in i + 1..n {
                if a[i][j] && inside(i) != inside(j) {
                    cut += 1;
                }
            }
        }
        let den = vol.min(total - vol);
        if den > 0 {
            best = best.min(cut as f64 / den as f64);
        }
    }
    best
}

/// Signed in-circle determinant, positive when `d` lies strictly inside
/// the circumcircle of the counter-clockwise triangle `abc`.
pub fn incircle(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> f64 {
    let (adx, ady) = (a[0] - d[0], a[1] - d[1]);
    let (bdx, bdy) = (b[0] - d[0], b[1] - d[1]);
    let (cdx, cdy) = (c[0] - d[0], c[1] - d[1]);
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx)
}

pub fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Central difference of `f` with respect to entry `i` of `x`.
pub fn central_difference(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut xp = x.to_vec();
    xp[i] += h;
    let mut xm = x.to_vec();
    xm[i] -= h;
    (f(&xp) - f(&xm)) / (2.0 * h)
}

/// `|a - b| / max(|a|, |b|)`, with differences below `1e-9` counted as 0.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let diff = (a - b).abs();
    if diff < 1e-9 {
        0.0
    } else {
        diff / a.abs().max(b.abs())
    }
}

/// Largest relative error between an analytic gradient (flattened column
/// major like `DMatrix`) and central differences of `f` around `x`.
pub fn gradient_check(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], analytic: &[f64]) -> f64 {
    assert_eq!(x.len(), analytic.len());
    (0..x.len())
        .map(|i| relative_error(analytic[i], central_difference(f, x, i, 1e-6)))
        .fold(0.0, f64::max)
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Mean over candidates of `(1 - y) p^2 + y max(0, 1 - p)^2`.
pub fn contrastive_oracle(p: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..p.len() {
        let hinge = if 1.0 - p[i] > 0.0 { 1.0 - p[i] } else { 0.0 };
        s += (1.0 - y[i]) * p[i] * p[i] + y[i] * hinge * hinge;
    }
    s / p.len() as f64
}

/// Probability-weighted mean perimeter of the triangles with `p >= 0.5`.
pub fn structural_oracle(p: &[f64], perimeter: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..p.len() {
        if p[i] >= 0.5 {
            num += p[i] * perimeter[i];
            den += p[i];
        }
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Mean over training nodes of `(sum of p over incident triangles - pi[y])^2`.
pub fn participation_oracle(
    p: &[f64],
    triangles: &[[usize; 3]],
    train: &[usize],
    labels: &[usize],
    pi: &[f64],
) -> f64 {
    let mut s = 0.0;
    for &i in train {
        let count: f64 = triangles
            .iter()
            .zip(p)
            .filter(|(t, _)| t.contains(&i))
            .map(|(_, &q)| q)
            .sum();
        let d = count - pi[labels[i]];
        s += d * d;
    }
    s / train.len() as f64
}

/// Euclidean perimeter of a triangle over feature rows.
pub fn perimeter_oracle(x: &DMatrix<f64>, t: [usize; 3]) -> f64 {
    let dist = |a: usize, b: usize| {
        (0..x.ncols())
            .map(|c| (x[(a, c)] - x[(b, c)]).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    dist(t[0], t[1]) + dist(t[1], t[2]) + dist(t[2], t[0])
}
