//! Seeded generators for random test instances.
//!
//! Everything here is deterministic in the seed (ChaCha8 streams), so any
//! reported failure can be replayed exactly. Two flavors of instance are
//! produced on purpose:
//!
//! * "dyadic" instances keep every distance, weight, and mass on a binary
//!   grid with small numerators, and group orbits of power-of-two size.
//!   On such instances the identities this crate verifies hold bit-exactly,
//!   so suites can assert equality instead of closeness.
//! * generic instances (arbitrary reals, groups like Z_3 or S_3 whose orbit
//!   sizes are not powers of two) exercise the same identities up to
//!   rounding tolerances.
//!
//! Invariance under a group action is always arranged by canonical
//! assignment: a quantity is computed once for the least representative of
//! each orbit (of points, or of unordered pairs) and copied to the whole
//! orbit, which makes equivariance a bit-level property rather than an
//! approximate one.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::exact::{exact_sum, ExactSum};
use crate::graph::WeightedGraph;
use crate::group::Action;
use crate::perm::Perm;
use crate::space::Space;
use crate::transport::Measure;

/// Deterministic stream for a seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Multiple of `grid` drawn uniformly from `[lo, hi]` (bounds included,
/// both assumed to be multiples of `grid`).
pub fn dyadic_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64, grid: f64) -> f64 {
    let steps = ((hi - lo) / grid).round() as u64;
    lo + grid * rng.gen_range(0..=steps) as f64
}

/// Random metric from a Euclidean point cloud plus a constant off-diagonal
/// offset. The offset gives every triangle inequality slack of at least
/// `0.25`, so downstream symmetrization by ulp-sized amounts cannot break
/// the metric axioms.
pub fn euclidean_space(rng: &mut ChaCha8Rng, n: usize) -> Space {
    let points: Vec<[f64; 3]> = (0..n)
        .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
        .collect();
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d2: f64 = (0..3).map(|k| (points[i][k] - points[j][k]).powi(2)).sum();
            let d = d2.sqrt() + 0.25;
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let mass: Vec<f64> = (0..n).map(|_| dyadic_in(rng, 0.25, 4.0, 0.25)).collect();
    Space::with_default_labels(dist, mass).expect("euclidean offset metric is valid")
}

/// Random shortest-path metric with all distances on the 1/64 grid.
///
/// Edge weights are dyadic and bounded, so every Floyd-Warshall sum and
/// minimum is exact; the result is a metric in exact arithmetic, not merely
/// up to tolerance.
pub fn dyadic_space(rng: &mut ChaCha8Rng, n: usize) -> Space {
    let grid = 1.0 / 64.0;
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let w = dyadic_in(rng, 0.5, 4.0, grid);
            dist[i][j] = w;
            dist[j][i] = w;
        }
    }
    floyd_warshall(&mut dist);
    let mass: Vec<f64> = (0..n).map(|_| dyadic_in(rng, 0.25, 4.0, 0.25)).collect();
    Space::with_default_labels(dist, mass).expect("dyadic shortest-path metric is valid")
}

fn floyd_warshall(dist: &mut [Vec<f64>]) {
    let n = dist.len();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = dist[i][k] + dist[k][j];
                if via < dist[i][j] {
                    dist[i][j] = via;
                }
            }
        }
    }
}

/// Rotation `i -> i + 1 (mod n)`.
pub fn rotation(n: usize) -> Perm {
    Perm::new((0..n).map(|i| (i + 1) % n).collect(), n).unwrap()
}

/// Reflection `i -> n - 1 - i`.
pub fn reflection(n: usize) -> Perm {
    Perm::new((0..n).rev().collect(), n).unwrap()
}

/// Half turn of an even cycle, `i -> i + n/2 (mod n)`.
pub fn half_turn(n: usize) -> Perm {
    assert!(n % 2 == 0);
    Perm::new((0..n).map(|i| (i + n / 2) % n).collect(), n).unwrap()
}

/// Up to `count` involutions with pairwise disjoint supports. They commute,
/// so the generated group is elementary abelian of order `2^k`; every orbit
/// has power-of-two size, which the dyadic suites rely on.
pub fn disjoint_involutions(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<Perm> {
    let mut free: Vec<usize> = (0..n).collect();
    free.shuffle(rng);
    let mut gens = Vec::new();
    for _ in 0..count {
        if free.len() < 2 {
            break;
        }
        // Each involution swaps one or two disjoint pairs drawn from the
        // points not yet touched by earlier generators.
        let pairs = if free.len() >= 4 && rng.gen_bool(0.5) { 2 } else { 1 };
        let mut image: Vec<usize> = (0..n).collect();
        for _ in 0..pairs {
            let a = free.pop().unwrap();
            let b = free.pop().unwrap();
            image[a] = b;
            image[b] = a;
        }
        gens.push(Perm::new(image, n).unwrap());
    }
    gens
}

/// Generator families whose closures are not 2-groups: a 3-cycle (Z_3) or
/// a transposition plus 3-cycle on a common support (S_3).
pub fn odd_order_generators(rng: &mut ChaCha8Rng, n: usize, symmetric: bool) -> Vec<Perm> {
    assert!(n >= 3);
    let mut pts: Vec<usize> = (0..n).collect();
    pts.shuffle(rng);
    let (a, b, c) = (pts[0], pts[1], pts[2]);
    let mut image: Vec<usize> = (0..n).collect();
    image[a] = b;
    image[b] = c;
    image[c] = a;
    let three_cycle = Perm::new(image, n).unwrap();
    if !symmetric {
        return vec![three_cycle];
    }
    let mut swap: Vec<usize> = (0..n).collect();
    swap[a] = b;
    swap[b] = a;
    vec![three_cycle, Perm::new(swap, n).unwrap()]
}

/// Rebuild a space so that the given permutations act on it by
/// measure-preserving isometries, and return the action.
///
/// Distances are orbit averages assigned canonically per unordered-pair
/// orbit and masses are constant on point orbits, so generator checks in
/// `Action::build` pass with exact comparisons. The base space's triangle
/// slack (offset construction) or exact dyadic arithmetic (2-groups on
/// grid metrics) keeps the averaged table a metric.
pub fn invariant_space(base: &Space, generators: Vec<Perm>) -> (Space, Action) {
    let n = base.len();
    // Close the generators over the plain uniform space first; the group
    // only depends on the permutations, not on the metric.
    let uniform = Space::with_default_labels(
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect(),
        vec![1.0; n],
    )
    .unwrap();
    let carrier = Action::build(&uniform, generators.clone(), None)
        .expect("any permutation acts on the uniform space");

    let mut dist = vec![vec![f64::NAN; n]; n];
    for i in 0..n {
        dist[i][i] = 0.0;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if !dist[i][j].is_nan() {
                continue;
            }
            // Canonical value for the whole pair orbit: group average at
            // the first pair found, copied everywhere.
            let terms: Vec<f64> = carrier
                .elements()
                .iter()
                .map(|g| base.dist(g.apply(i), g.apply(j)))
                .collect();
            let v = exact_sum(&terms) / carrier.order() as f64;
            for g in carrier.elements() {
                let (a, b) = (g.apply(i), g.apply(j));
                dist[a][b] = v;
                dist[b][a] = v;
            }
        }
    }

    let mut mass = vec![f64::NAN; n];
    for orbit in carrier.orbits() {
        let v = base.mass(orbit[0]);
        for &x in orbit {
            mass[x] = v;
        }
    }

    let space = Space::with_default_labels(dist, mass).expect("orbit-averaged metric is valid");
    let action = Action::build(&space, generators, None)
        .expect("orbit-constant tables are invariant by construction");
    (space, action)
}

/// Probability vector with every weight of the form `k / 2^resolution`.
/// Some entries may be zero.
pub fn dyadic_probability(rng: &mut ChaCha8Rng, n: usize, resolution: u32) -> Measure {
    let total = 1u64 << resolution;
    let mut units = vec![0u64; n];
    for _ in 0..total {
        units[rng.gen_range(0..n)] += 1;
    }
    let scale = 1.0 / total as f64;
    Measure::new(units.iter().map(|&u| u as f64 * scale).collect())
        .expect("dyadic composition sums to one exactly")
}

/// Group-invariant probability vector, dyadic when every orbit of the
/// action has power-of-two size (the units spent per step are then always
/// a power of two, so the greedy draw below terminates at exactly zero).
pub fn invariant_dyadic_probability(rng: &mut ChaCha8Rng, action: &Action, resolution: u32) -> Measure {
    let orbits = action.orbits();
    debug_assert!(orbits.iter().all(|o| o.len().is_power_of_two()));
    let total = 1u64 << resolution;
    debug_assert!(orbits.iter().all(|o| (o.len() as u64) <= total));
    let mut per_point = vec![0u64; action.degree()];
    let mut remaining = total;
    while remaining > 0 {
        let eligible: Vec<usize> = (0..orbits.len())
            .filter(|&k| orbits[k].len() as u64 <= remaining)
            .collect();
        let k = *eligible.choose(rng).expect("minimal orbit always fits");
        for &x in &orbits[k] {
            per_point[x] += 1;
        }
        remaining -= orbits[k].len() as u64;
    }
    let scale = 1.0 / total as f64;
    Measure::new(per_point.iter().map(|&u| u as f64 * scale).collect())
        .expect("orbit-greedy composition sums to one exactly")
}

/// Like `invariant_dyadic_probability`, but every point receives at least
/// `1 / 2^resolution`. The initial floor spends a multiple of the minimal
/// orbit size, so the greedy remainder argument still terminates at zero.
pub fn positive_invariant_dyadic_probability(
    rng: &mut ChaCha8Rng,
    action: &Action,
    resolution: u32,
) -> Measure {
    let orbits = action.orbits();
    debug_assert!(orbits.iter().all(|o| o.len().is_power_of_two()));
    let n = action.degree();
    let total = 1u64 << resolution;
    debug_assert!(n as u64 <= total);
    let mut per_point = vec![1u64; n];
    let mut remaining = total - n as u64;
    while remaining > 0 {
        let eligible: Vec<usize> = (0..orbits.len())
            .filter(|&k| orbits[k].len() as u64 <= remaining)
            .collect();
        let k = *eligible.choose(rng).expect("minimal orbit always fits");
        for &x in &orbits[k] {
            per_point[x] += 1;
        }
        remaining -= orbits[k].len() as u64;
    }
    let scale = 1.0 / total as f64;
    Measure::new(per_point.iter().map(|&u| u as f64 * scale).collect())
        .expect("orbit-greedy composition sums to one exactly")
}

/// Orbits of ordered point pairs under the action, each orbit listed once
/// with its members in first-encounter order.
fn ordered_pair_orbits(action: &Action) -> Vec<Vec<(usize, usize)>> {
    let n = action.degree();
    let mut seen = vec![vec![false; n]; n];
    let mut orbits = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if seen[x][y] {
                continue;
            }
            let mut members = Vec::new();
            for g in action.elements() {
                let (a, b) = (g.apply(x), g.apply(y));
                if !seen[a][b] {
                    seen[a][b] = true;
                    members.push((a, b));
                }
            }
            orbits.push(members);
        }
    }
    orbits
}

/// Row-stochastic kernel with `K(gx, gy) = K(x, y)` bit for bit: dyadic
/// scores constant on ordered-pair orbits, normalized by the orbit-constant
/// row total. All entries positive, so the chain is irreducible.
pub fn invariant_kernel(rng: &mut ChaCha8Rng, action: &Action) -> Vec<Vec<f64>> {
    let n = action.degree();
    let mut score = vec![vec![0.0; n]; n];
    for orbit in ordered_pair_orbits(action) {
        let v = dyadic_in(rng, 0.125, 1.0, 0.125);
        for (a, b) in orbit {
            score[a][b] = v;
        }
    }
    // Row totals are orbit-constant as real numbers; computing one per
    // point orbit keeps them bit-constant too.
    let mut total = vec![0.0; n];
    for orbit in action.orbits() {
        let t = exact_sum(&score[orbit[0]]);
        for &x in orbit {
            total[x] = t;
        }
    }
    (0..n)
        .map(|x| (0..n).map(|y| score[x][y] / total[x]).collect())
        .collect()
}

/// Reversible invariant kernel for a given invariant stationary vector:
/// `K(x, y) = t(x, y) pi(y)` off the diagonal with a symmetric
/// orbit-constant dyadic `t`, diagonal set to the row remainder. Detailed
/// balance and stationarity hold exactly when `pi` is dyadic with small
/// numerators, because every product and row sum then stays on a binary
/// grid.
pub fn reversible_invariant_kernel(
    rng: &mut ChaCha8Rng,
    action: &Action,
    pi: &Measure,
) -> Vec<Vec<f64>> {
    let n = action.degree();
    let mut t = vec![vec![0.0; n]; n];
    for orbit in ordered_pair_orbits(action) {
        let (x, y) = orbit[0];
        if x == y || t[x][y] != 0.0 {
            continue;
        }
        let v = dyadic_in(rng, 0.125, 0.875, 0.125);
        for (a, b) in orbit {
            t[a][b] = v;
            t[b][a] = v;
        }
    }
    let mut kernel = vec![vec![0.0; n]; n];
    for x in 0..n {
        let mut off = ExactSum::new();
        for y in 0..n {
            if y != x {
                kernel[x][y] = t[x][y] * pi.weight(y);
                off.add(kernel[x][y]);
            }
        }
        // t < 1 and the pi weights sum below one, so the remainder is a
        // genuine positive holding probability.
        kernel[x][x] = 1.0 - off.value();
    }
    kernel
}

fn power_of_two_mass(rng: &mut ChaCha8Rng) -> f64 {
    *[0.25, 0.5, 1.0, 2.0, 4.0].choose(rng).expect("nonempty choices")
}

/// Random connected graph with edge weights on the quarter grid and
/// power-of-two vertex masses; on such graphs every operator sum stays on
/// a binary grid, so calculus identities can be asserted bit for bit. A
/// spanning path keeps the graph connected.
pub fn dyadic_graph(rng: &mut ChaCha8Rng, n: usize) -> WeightedGraph {
    let mut omega = vec![vec![0.0; n]; n];
    for i in 0..n.saturating_sub(1) {
        let w = dyadic_in(rng, 0.25, 2.0, 0.25);
        omega[i][i + 1] = w;
        omega[i + 1][i] = w;
    }
    for i in 0..n {
        for j in (i + 2)..n {
            if rng.gen_bool(0.35) {
                let w = dyadic_in(rng, 0.25, 2.0, 0.25);
                omega[i][j] = w;
                omega[j][i] = w;
            }
        }
    }
    let measure = (0..n).map(|_| power_of_two_mass(rng)).collect();
    WeightedGraph::with_default_labels(omega, measure).expect("generated graph is valid")
}

/// Random connected graph with generic real weights and masses.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> WeightedGraph {
    let mut omega = vec![vec![0.0; n]; n];
    for i in 0..n.saturating_sub(1) {
        let w = rng.gen_range(0.2..2.0);
        omega[i][i + 1] = w;
        omega[i + 1][i] = w;
    }
    for i in 0..n {
        for j in (i + 2)..n {
            if rng.gen_bool(0.35) {
                let w = rng.gen_range(0.2..2.0);
                omega[i][j] = w;
                omega[j][i] = w;
            }
        }
    }
    let measure = (0..n).map(|_| rng.gen_range(0.25..4.0)).collect();
    WeightedGraph::with_default_labels(omega, measure).expect("generated graph is valid")
}

/// Vertex function on the eighth grid in `[-2, 2]`.
pub fn dyadic_function(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| dyadic_in(rng, -2.0, 2.0, 0.125)).collect()
}

/// Generic real vertex function in `[-2, 2)`.
pub fn random_function(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

/// Hamming cube on `2^dim` vertices with unit edge weights and unit
/// masses; labels are the coordinate bitstrings.
pub fn cube_graph(dim: u32) -> WeightedGraph {
    let n = 1usize << dim;
    let mut omega = vec![vec![0.0; n]; n];
    for u in 0..n {
        for v in (u + 1)..n {
            if (u ^ v).count_ones() == 1 {
                omega[u][v] = 1.0;
                omega[v][u] = 1.0;
            }
        }
    }
    let labels = (0..n).map(|u| format!("{u:0width$b}", width = dim as usize)).collect();
    WeightedGraph::new(labels, omega, vec![1.0; n]).expect("cube is a valid graph")
}

/// Permutation of cube vertices exchanging coordinates `a` and `b`.
pub fn coordinate_swap(dim: u32, a: u32, b: u32) -> Perm {
    let n = 1usize << dim;
    let image = (0..n)
        .map(|v| {
            let bit_a = (v >> a) & 1;
            let bit_b = (v >> b) & 1;
            if bit_a == bit_b {
                v
            } else {
                v ^ (1 << a) ^ (1 << b)
            }
        })
        .collect();
    Perm::new(image, n).expect("coordinate swap is a permutation")
}

/// Graph with `omega(gx, gy) = omega(x, y)` and orbit-constant masses, bit
/// for bit, built by canonical assignment on orbits of unordered pairs.
/// Path pairs always receive positive weight, so the graph is connected.
pub fn invariant_dyadic_graph(
    rng: &mut ChaCha8Rng,
    n: usize,
    generators: Vec<Perm>,
) -> (WeightedGraph, Action) {
    let action = Action::close(n, generators, None).expect("generators close into a group");
    let mut omega = vec![vec![0.0; n]; n];
    let mut assigned = vec![vec![false; n]; n];
    for x in 0..n {
        for y in (x + 1)..n {
            if assigned[x][y] {
                continue;
            }
            let orbit: Vec<(usize, usize)> =
                action.elements().iter().map(|g| (g.apply(x), g.apply(y))).collect();
            let touches_path = orbit.iter().any(|&(a, b)| a.abs_diff(b) == 1);
            let w = if touches_path || !rng.gen_bool(0.3) {
                dyadic_in(rng, 0.25, 2.0, 0.25)
            } else {
                0.0
            };
            for (a, b) in orbit {
                omega[a][b] = w;
                omega[b][a] = w;
                assigned[a][b] = true;
                assigned[b][a] = true;
            }
        }
    }
    let mut measure = vec![0.0; n];
    for orbit in action.orbits() {
        let m = power_of_two_mass(rng);
        for &x in orbit {
            measure[x] = m;
        }
    }
    let graph =
        WeightedGraph::with_default_labels(omega, measure).expect("generated graph is valid");
    (graph, action)
}

/// Group-invariant probability vector for arbitrary orbit sizes; exact
/// only up to rounding.
pub fn invariant_probability(rng: &mut ChaCha8Rng, action: &Action) -> Measure {
    let orbits = action.orbits();
    let weights: Vec<f64> = (0..orbits.len()).map(|_| rng.gen_range(0.05..1.0)).collect();
    let terms: Vec<f64> = orbits
        .iter()
        .zip(&weights)
        .map(|(o, &w)| w * o.len() as f64)
        .collect();
    let total = exact_sum(&terms);
    let mut out = vec![0.0; action.degree()];
    for (o, &w) in orbits.iter().zip(&weights) {
        let v = w / total;
        for &x in o {
            out[x] = v;
        }
    }
    Measure::new(out).expect("normalized orbit weights sum to one")
}

/// Integer mass vector summing to `total`, for brute-force LP oracles that
/// work over scaled integer plans. Every entry is at least 1.
pub fn integer_composition(rng: &mut ChaCha8Rng, n: usize, total: u64) -> Vec<u64> {
    assert!(total >= n as u64);
    let mut units = vec![1u64; n];
    for _ in 0..(total - n as u64) {
        units[rng.gen_range(0..n)] += 1;
    }
    units
}

/// Unit cycle graph metric on `n` points, unit masses.
pub fn cycle_space(n: usize) -> Space {
    let dist = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let k = i.abs_diff(j);
                    k.min(n - k) as f64
                })
                .collect()
        })
        .collect();
    Space::with_default_labels(dist, vec![1.0; n]).unwrap()
}

/// Unit 4-cycle: graph metric of the square, unit masses.
pub fn four_cycle() -> Space {
    cycle_space(4)
}
