//! Slow, obviously-correct reference implementations.
//!
//! Everything here works on plain index lists so that it shares no code
//! with the `obsrec` crate it is used to check. All indices are zero-based;
//! an edge `(j, i)` means state `j` drives state `i` (`a_ij != 0`).

// Dense matrix loops read closer to the textbook with explicit indices.
#![allow(clippy::needless_range_loop)]

use rand::Rng;

/// Maximum matching size by dynamic programming over subsets of right nodes.
///
/// `adj[l]` lists the right nodes adjacent to left node `l`. Exponential in
/// `n_right`, so only usable for `n_right <= 20`.
pub fn max_matching_size(n_right: usize, adj: &[Vec<usize>]) -> usize {
    assert!(n_right <= 20, "bitmask oracle limited to 20 right nodes");
    let full = 1usize << n_right;
    // best[mask] = largest matching of the left nodes processed so far that
    // uses exactly the right nodes in `mask`; -1 marks unreachable masks.
    let mut best = vec![-1i32; full];
    best[0] = 0;
    for neighbours in adj {
        let mut next = best.clone();
        for mask in 0..full {
            if best[mask] < 0 {
                continue;
            }
            for &r in neighbours {
                let bit = 1usize << r;
                if mask & bit == 0 {
                    let cand = best[mask] + 1;
                    if cand > next[mask | bit] {
                        next[mask | bit] = cand;
                    }
                }
            }
        }
        best = next;
    }
    best.into_iter().max().unwrap_or(0).max(0) as usize
}

/// Every matching of the bipartite graph, as `left -> Option<right>` maps.
pub fn all_matchings(n_right: usize, adj: &[Vec<usize>]) -> Vec<Vec<Option<usize>>> {
    fn rec(
        l: usize,
        adj: &[Vec<usize>],
        used: &mut [bool],
        cur: &mut Vec<Option<usize>>,
        out: &mut Vec<Vec<Option<usize>>>,
    ) {
        if l == adj.len() {
            out.push(cur.clone());
            return;
        }
        cur.push(None);
        rec(l + 1, adj, used, cur, out);
        cur.pop();
        for &r in &adj[l] {
            if !used[r] {
                used[r] = true;
                cur.push(Some(r));
                rec(l + 1, adj, used, cur, out);
                cur.pop();
                used[r] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(0, adj, &mut vec![false; n_right], &mut Vec::new(), &mut out);
    out
}

/// All matchings of maximum cardinality.
pub fn all_maximum_matchings(n_right: usize, adj: &[Vec<usize>]) -> Vec<Vec<Option<usize>>> {
    let all = all_matchings(n_right, adj);
    let size = |m: &Vec<Option<usize>>| m.iter().filter(|x| x.is_some()).count();
    let best = all.iter().map(size).max().unwrap_or(0);
    all.into_iter().filter(|m| size(m) == best).collect()
}

/// Left nodes that are unmatched under at least one maximum matching.
pub fn ever_unmatched_left(n_right: usize, adj: &[Vec<usize>]) -> Vec<usize> {
    let mut hit = vec![false; adj.len()];
    for m in all_maximum_matchings(n_right, adj) {
        for (l, r) in m.iter().enumerate() {
            if r.is_none() {
                hit[l] = true;
            }
        }
    }
    (0..adj.len()).filter(|&l| hit[l]).collect()
}

/// Bipartite adjacency for observability: left `j` links to right `i` for
/// each edge `j -> i` (a state is matched through an outgoing edge).
pub fn observability_bipartite(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(j, i) in edges {
        adj[j].push(i);
    }
    adj
}

/// Transitive closure by Warshall's algorithm; `reach[a][b]` means a path of
/// length zero or more from `a` to `b`.
pub fn reachability(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut reach = vec![vec![false; n]; n];
    for (v, row) in reach.iter_mut().enumerate() {
        row[v] = true;
    }
    for &(a, b) in edges {
        reach[a][b] = true;
    }
    for k in 0..n {
        for a in 0..n {
            if reach[a][k] {
                for b in 0..n {
                    if reach[k][b] {
                        reach[a][b] = true;
                    }
                }
            }
        }
    }
    reach
}

/// Mutual-reachability classes (sorted, ordered by smallest member) and, for
/// each class, whether no edge leaves it.
pub fn scc_classes(n: usize, edges: &[(usize, usize)]) -> (Vec<Vec<usize>>, Vec<bool>) {
    let reach = reachability(n, edges);
    let mut seen = vec![false; n];
    let mut classes = Vec::new();
    for v in 0..n {
        if seen[v] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&u| reach[v][u] && reach[u][v]).collect();
        for &u in &class {
            seen[u] = true;
        }
        classes.push(class);
    }
    let parent = classes
        .iter()
        .map(|c| {
            !edges
                .iter()
                .any(|&(a, b)| c.contains(&a) && !c.contains(&b))
        })
        .collect();
    (classes, parent)
}

const P: u64 = (1 << 61) - 1;

fn mulmod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % P as u128) as u64
}

fn powmod(mut a: u64, mut e: u64) -> u64 {
    let mut acc = 1;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, a);
        }
        a = mulmod(a, a);
        e >>= 1;
    }
    acc
}

/// Rank over GF(2^61 - 1) by Gaussian elimination.
pub fn rank_mod_p(mut rows: Vec<Vec<u64>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..rows.len()).find(|&r| rows[r][c] != 0) else {
            continue;
        };
        rows.swap(rank, piv);
        let inv = powmod(rows[rank][c], P - 2);
        for x in rows[rank].iter_mut() {
            *x = mulmod(*x, inv);
        }
        for r in 0..rows.len() {
            if r != rank && rows[r][c] != 0 {
                let f = rows[r][c];
                for k in 0..cols {
                    let sub = mulmod(f, rows[rank][k]);
                    rows[r][k] = (rows[r][k] + P - sub) % P;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// One generic-rank draw: instantiate every structural nonzero of `A` with a
/// value uniform on `[0.5, 1.5]` (on a 1e-9 grid) with a random sign, build
/// the observability matrix `[C; CA; ...; CA^(n-1)]` and return its rank.
///
/// The values are scaled to integers and the rank is computed exactly modulo
/// a 61-bit prime, so the only failure mode is an astronomically unlikely
/// algebraic coincidence.
pub fn generic_observability_rank<R: Rng>(
    n: usize,
    edges: &[(usize, usize)],
    sensors: &[Vec<usize>],
    rng: &mut R,
) -> usize {
    let mut a = vec![vec![0u64; n]; n];
    for &(j, i) in edges {
        let mag: u64 = rng.random_range(500_000_000..=1_500_000_000);
        a[i][j] = if rng.random_bool(0.5) { mag } else { P - mag };
    }
    let mut block: Vec<Vec<u64>> = sensors
        .iter()
        .flatten()
        .map(|&s| {
            let mut row = vec![0u64; n];
            row[s] = 1;
            row
        })
        .collect();
    let mut rows = Vec::new();
    for _ in 0..n {
        rows.extend(block.iter().cloned());
        block = block
            .iter()
            .map(|row| {
                (0..n)
                    .map(|col| (0..n).fold(0u64, |acc, k| (acc + mulmod(row[k], a[k][col])) % P))
                    .collect()
            })
            .collect();
    }
    if rows.is_empty() {
        return 0;
    }
    rank_mod_p(rows)
}

/// Structural observability by generic rank over `draws` independent
/// instantiations. Returns `None` if the draws disagree.
pub fn generic_rank_observable<R: Rng>(
    n: usize,
    edges: &[(usize, usize)],
    sensors: &[Vec<usize>],
    draws: usize,
    rng: &mut R,
) -> Option<bool> {
    let verdicts: Vec<bool> = (0..draws)
        .map(|_| generic_observability_rank(n, edges, sensors, rng) == n)
        .collect();
    if verdicts.iter().all(|&v| v == verdicts[0]) {
        Some(verdicts[0])
    } else {
        None
    }
}

/// Spectral radius estimate by normalised power iteration: the geometric
/// mean growth of `||M^k x||` over a long window. `m` is row-major.
pub fn power_iteration_radius(m: &[Vec<f64>], iters: usize, seed: u64) -> f64 {
    use rand::SeedableRng;
    let n = m.len();
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let burn = iters / 2;
    let mut log_growth = 0.0;
    for k in 0..iters {
        let y: Vec<f64> = (0..n)
            .map(|r| m[r].iter().zip(&x).map(|(a, b)| a * b).sum())
            .collect();
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        if k >= burn {
            log_growth += norm.ln();
        }
        x = y.into_iter().map(|v| v / norm).collect();
    }
    (log_growth / (iters - burn) as f64).exp()
}
