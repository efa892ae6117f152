//! K-means partitioning, recursive decomposition into qubit-sized
//! sub-problems, and recombination of sub-tours into one global tour.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{QacoError, Result};
use crate::tspio::{TspInstance, Tour};

/// Result of one K-means run.
#[derive(Debug, Clone)]
pub struct Partition {
    pub assignments: Vec<usize>,
    pub centroids: Vec<(f64, f64)>,
    pub inertia: f64,
    /// Inertia after each Lloyd sweep of the winning restart.
    pub inertia_history: Vec<f64>,
}

fn sq_dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (a.0 - b.0, a.1 - b.1);
    dx * dx + dy * dy
}

fn compute_inertia(points: &[(f64, f64)], assignments: &[usize], centroids: &[(f64, f64)]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &c)| sq_dist(*p, centroids[c]))
        .sum()
}

fn assign(points: &[(f64, f64)], centroids: &[(f64, f64)]) -> Vec<usize> {
    points
        .iter()
        .map(|p| {
            centroids
                .iter()
                .enumerate()
                .min_by(|a, b| sq_dist(*p, *a.1).total_cmp(&sq_dist(*p, *b.1)))
                .map(|(i, _)| i)
                .unwrap()
        })
        .collect()
}

/// Lloyd iterations from one random initialization.
fn lloyd<R: Rng>(
    points: &[(f64, f64)],
    k: usize,
    max_iters: usize,
    rng: &mut R,
) -> Partition {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.shuffle(rng);
    let mut centroids: Vec<(f64, f64)> = idx[..k].iter().map(|&i| points[i]).collect();
    let mut assignments = assign(points, &centroids);
    let mut inertia_history = vec![compute_inertia(points, &assignments, &centroids)];

    for _ in 0..max_iters {
        let prev_centroids = centroids.clone();
        let mut sums = vec![(0.0, 0.0, 0usize); k];
        for (p, &c) in points.iter().zip(&assignments) {
            sums[c].0 += p.0;
            sums[c].1 += p.1;
            sums[c].2 += 1;
        }
        for (c, s) in centroids.iter_mut().zip(&sums) {
            if s.2 > 0 {
                *c = (s.0 / s.2 as f64, s.1 / s.2 as f64);
            }
        }
        // reseed any emptied centroid at the point farthest from where the
        // centroid used to sit
        for ci in 0..k {
            if sums[ci].2 == 0 {
                let far = points
                    .iter()
                    .enumerate()
                    .max_by(|a, b| {
                        sq_dist(*a.1, prev_centroids[ci]).total_cmp(&sq_dist(*b.1, prev_centroids[ci]))
                    })
                    .map(|(i, _)| i)
                    .unwrap();
                centroids[ci] = points[far];
            }
        }
        let next = assign(points, &centroids);
        let converged = next == assignments;
        assignments = next;
        inertia_history.push(compute_inertia(points, &assignments, &centroids));
        if converged {
            break;
        }
    }
    let inertia = *inertia_history.last().unwrap();
    Partition {
        assignments,
        centroids,
        inertia,
        inertia_history,
    }
}

/// Best-of-restarts K-means by lowest inertia.
pub fn kmeans<R: Rng>(
    points: &[(f64, f64)],
    k: usize,
    restarts: usize,
    max_iters: usize,
    rng: &mut R,
) -> Result<Partition> {
    if k == 0 || k > points.len() {
        return Err(QacoError::Usage(format!(
            "k = {k} outside [1, {}]",
            points.len()
        )));
    }
    let mut best: Option<Partition> = None;
    for _ in 0..restarts.max(1) {
        let p = lloyd(points, k, max_iters, rng);
        if best.as_ref().map_or(true, |b| p.inertia < b.inertia) {
            best = Some(p);
        }
    }
    Ok(best.unwrap())
}

/// Recursive K-means partition of a city set into leaves of at most `cap`
/// cities.
#[derive(Debug, Clone)]
pub enum DecompositionTree {
    Leaf {
        cities: Vec<usize>,
    },
    Internal {
        children: Vec<DecompositionTree>,
        centroids: Vec<(f64, f64)>,
    },
}

impl DecompositionTree {
    /// All cities under this node, in leaf order.
    pub fn cities(&self) -> Vec<usize> {
        match self {
            DecompositionTree::Leaf { cities } => cities.clone(),
            DecompositionTree::Internal { children, .. } => {
                children.iter().flat_map(|c| c.cities()).collect()
            }
        }
    }

    pub fn leaf_sizes(&self) -> Vec<usize> {
        match self {
            DecompositionTree::Leaf { cities } => vec![cities.len()],
            DecompositionTree::Internal { children, .. } => {
                children.iter().flat_map(|c| c.leaf_sizes()).collect()
            }
        }
    }
}

/// Split any subset larger than `cap` with K-means, k = ceil(size / cap)
/// bounded at `cap` children, until every leaf fits.
pub fn decompose(
    instance: &TspInstance,
    cap: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DecompositionTree> {
    if cap < 2 {
        return Err(QacoError::Config(format!("cap {cap} must be at least 2")));
    }
    let coords = instance.coords.as_ref().ok_or_else(|| {
        QacoError::Config(format!(
            "instance {} has no coordinates; clustering needs them",
            instance.name
        ))
    })?;
    let cities: Vec<usize> = (0..instance.dimension).collect();
    decompose_subset(coords, cities, cap, rng)
}

fn decompose_subset(
    coords: &[(f64, f64)],
    cities: Vec<usize>,
    cap: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DecompositionTree> {
    if cities.len() <= cap {
        return Ok(DecompositionTree::Leaf { cities });
    }
    let points: Vec<(f64, f64)> = cities.iter().map(|&c| coords[c]).collect();
    let k = cities.len().div_ceil(cap).min(cap).max(2);
    let part = kmeans(&points, k, 10, 100, rng)?;

    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (local, &cluster) in part.assignments.iter().enumerate() {
        groups[cluster].push(cities[local]);
    }
    // drop emptied clusters, keep centroid alignment
    let mut children = Vec::new();
    let mut centroids = Vec::new();
    for (group, centroid) in groups.into_iter().zip(part.centroids) {
        if group.is_empty() {
            continue;
        }
        // a split that failed to separate anything would recurse forever;
        // fall back to an even chunking
        if group.len() == cities.len() {
            for chunk in group.chunks(cap) {
                children.push(DecompositionTree::Leaf {
                    cities: chunk.to_vec(),
                });
                let cx = chunk.iter().map(|&c| coords[c].0).sum::<f64>() / chunk.len() as f64;
                let cy = chunk.iter().map(|&c| coords[c].1).sum::<f64>() / chunk.len() as f64;
                centroids.push((cx, cy));
            }
            return Ok(DecompositionTree::Internal {
                children,
                centroids,
            });
        }
        children.push(decompose_subset(coords, group, cap, rng)?);
        centroids.push(centroid);
    }
    Ok(DecompositionTree::Internal {
        children,
        centroids,
    })
}

/// A sub-problem solver driving both leaf tours and centroid-level tours.
pub trait SubSolver {
    fn solve(&self, instance: &TspInstance, rng: &mut ChaCha8Rng) -> Result<Tour>;
    /// Largest instance `solve` accepts directly.
    fn city_cap(&self) -> usize;
}

/// One way to open a child cycle: remove the edge before `start` and walk the
/// cycle from `start`, optionally reversed. Entry/exit cities are the removed
/// edge's endpoints.
#[derive(Debug, Clone, Copy)]
struct Opening {
    entry: usize,
    exit: usize,
    /// Length of the intra-child edge this opening removes.
    removed: f64,
    start: usize,
    reversed: bool,
}

fn openings(instance: &TspInstance, tour: &[usize]) -> Vec<Opening> {
    let n = tour.len();
    if n == 1 {
        return vec![Opening {
            entry: tour[0],
            exit: tour[0],
            removed: 0.0,
            start: 0,
            reversed: false,
        }];
    }
    let mut out = Vec::with_capacity(2 * n);
    for cut in 0..n {
        // removing edge (tour[cut], tour[cut+1]) leaves a path between its
        // endpoints; either endpoint may face the previous child
        let u = tour[cut];
        let v = tour[(cut + 1) % n];
        let removed = instance.distance(u, v);
        out.push(Opening {
            entry: v,
            exit: u,
            removed,
            start: (cut + 1) % n,
            reversed: false,
        });
        if n > 2 {
            out.push(Opening {
                entry: u,
                exit: v,
                removed,
                start: (cut + 1) % n,
                reversed: true,
            });
        }
    }
    out
}

fn render(tour: &[usize], opening: &Opening) -> Vec<usize> {
    let n = tour.len();
    let mut path: Vec<usize> = (0..n).map(|i| tour[(opening.start + i) % n]).collect();
    if opening.reversed {
        path.reverse();
    }
    path
}

/// Splice child tours, visited in centroid-tour order, into one cycle.
///
/// Each child cycle is opened by removing exactly one of its own edges;
/// consecutive children (and the last back to the first) are connected
/// between the opened endpoints. The edge/orientation choice per child is
/// optimized jointly by dynamic programming over the children ring, so the
/// total added junction length minus removed intra-child length is minimal
/// for the given centroid order.
pub fn recombine(
    instance: &TspInstance,
    child_tours: &[Tour],
    centroid_order: &[usize],
) -> Result<Tour> {
    if child_tours.len() != centroid_order.len() {
        return Err(QacoError::Usage(
            "one tour per centroid-tour position required".into(),
        ));
    }
    if child_tours.len() == 1 {
        return Ok(child_tours[0].clone());
    }
    let ordered: Vec<&Tour> = centroid_order.iter().map(|&c| &child_tours[c]).collect();
    let options: Vec<Vec<Opening>> = ordered.iter().map(|t| openings(instance, t)).collect();
    let m = ordered.len();

    // dp[i][j]: best cost up to child i using its j-th opening, given the
    // first child's opening is fixed (cost closes the ring at the end)
    let mut best_total = f64::INFINITY;
    let mut best_choice: Vec<usize> = Vec::new();
    for (first_idx, first) in options[0].iter().enumerate() {
        let mut cost: Vec<f64> = options[1]
            .iter()
            .map(|o| -first.removed - o.removed + instance.distance(first.exit, o.entry))
            .collect();
        let mut back: Vec<Vec<usize>> = vec![vec![0; options[1].len()]];
        for i in 2..m {
            let mut next_cost = vec![f64::INFINITY; options[i].len()];
            let mut next_back = vec![0usize; options[i].len()];
            for (j, o) in options[i].iter().enumerate() {
                for (pj, po) in options[i - 1].iter().enumerate() {
                    let c = cost[pj] - o.removed + instance.distance(po.exit, o.entry);
                    if c < next_cost[j] {
                        next_cost[j] = c;
                        next_back[j] = pj;
                    }
                }
            }
            back.push(next_back);
            cost = next_cost;
        }
        for (j, o) in options[m - 1].iter().enumerate() {
            let total = cost[j] + instance.distance(o.exit, first.entry);
            if total < best_total {
                best_total = total;
                let mut choice = vec![0usize; m];
                choice[0] = first_idx;
                choice[m - 1] = j;
                let mut cur = j;
                for i in (1..m - 1).rev() {
                    cur = back[i][cur];
                    choice[i] = cur;
                }
                best_choice = choice;
            }
        }
    }

    let mut tour = Vec::new();
    for (i, &j) in best_choice.iter().enumerate() {
        tour.extend(render(ordered[i], &options[i][j]));
    }
    Ok(tour)
}

/// Decompose, solve every leaf, and splice bottom-up. Centroid-level tours are
/// produced by the same sub-solver.
pub fn hierarchical_solve(
    instance: &TspInstance,
    solver: &dyn SubSolver,
    cap: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Tour, f64)> {
    if instance.dimension < 2 {
        return Err(QacoError::Usage("need at least 2 cities".into()));
    }
    if instance.dimension <= cap {
        let tour = solver.solve(instance, rng)?;
        let length = instance.tour_length(&tour);
        return Ok((tour, length));
    }
    let tree = decompose(instance, cap, rng)?;
    let mut tour = solve_tree(instance, &tree, solver, rng)?;
    // the splice only optimizes junctions locally; polish the assembled cycle
    local_improve(instance, &mut tour);
    let length = instance.tour_length(&tour);
    Ok((tour, length))
}

/// Deterministic 2-opt plus segment-relocation (Or-opt) passes until no move
/// improves the cycle.
pub fn local_improve(instance: &TspInstance, tour: &mut Tour) {
    let n = tour.len();
    if n < 4 {
        return;
    }
    let d = |a: usize, b: usize| instance.distance(a, b);
    loop {
        let mut improved = false;
        // 2-opt: reverse tour[i+1..=j]
        for i in 0..n - 1 {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (tour[i], tour[i + 1]);
                let (c, e) = (tour[j], tour[(j + 1) % n]);
                if d(a, c) + d(b, e) + 1e-12 < d(a, b) + d(c, e) {
                    tour[i + 1..=j].reverse();
                    improved = true;
                }
            }
        }
        // Or-opt: move a short segment elsewhere
        for seg_len in 1..=3usize.min(n - 3) {
            let mut pos = 0;
            while pos + seg_len <= n {
                let prev = (pos + n - 1) % n;
                let next = (pos + seg_len) % n;
                if next == prev {
                    pos += 1;
                    continue;
                }
                let (p, s0, s1, q) = (tour[prev], tour[pos], tour[pos + seg_len - 1], tour[next]);
                let gain_remove = d(p, s0) + d(s1, q) - d(p, q);
                if gain_remove <= 1e-12 {
                    pos += 1;
                    continue;
                }
                let mut best: Option<(usize, f64)> = None;
                let mut k = next;
                while (k + 1) % n != prev {
                    let (u, v) = (tour[k], tour[(k + 1) % n]);
                    let cost_insert = d(u, s0) + d(s1, v) - d(u, v);
                    if cost_insert + 1e-12 < gain_remove
                        && best.map_or(true, |(_, c)| cost_insert < c)
                    {
                        best = Some((k, cost_insert));
                    }
                    k = (k + 1) % n;
                }
                if let Some((k, _)) = best {
                    let seg: Vec<usize> = tour[pos..pos + seg_len].to_vec();
                    let mut rest: Vec<usize> = Vec::with_capacity(n - seg_len);
                    rest.extend_from_slice(&tour[..pos]);
                    rest.extend_from_slice(&tour[pos + seg_len..]);
                    // position of tour[k] within rest
                    let anchor = tour[k];
                    let at = rest.iter().position(|&c| c == anchor).unwrap();
                    let mut rebuilt = Vec::with_capacity(n);
                    rebuilt.extend_from_slice(&rest[..=at]);
                    rebuilt.extend_from_slice(&seg);
                    rebuilt.extend_from_slice(&rest[at + 1..]);
                    *tour = rebuilt;
                    improved = true;
                }
                pos += 1;
            }
        }
        if !improved {
            break;
        }
    }
}

fn solve_tree(
    instance: &TspInstance,
    tree: &DecompositionTree,
    solver: &dyn SubSolver,
    rng: &mut ChaCha8Rng,
) -> Result<Tour> {
    match tree {
        DecompositionTree::Leaf { cities } => {
            if cities.len() == 1 {
                return Ok(cities.clone());
            }
            let sub = instance.restrict(cities);
            let local = solve_small(&sub, solver, rng)?;
            Ok(local.into_iter().map(|i| cities[i]).collect())
        }
        DecompositionTree::Internal {
            children,
            centroids,
        } => {
            let mut tours = Vec::with_capacity(children.len());
            for child in children {
                tours.push(solve_tree(instance, child, solver, rng)?);
            }
            let centroid_order = if centroids.len() <= 3 {
                (0..centroids.len()).collect()
            } else {
                let centroid_inst = TspInstance::from_coords(
                    "centroids",
                    centroids.clone(),
                    crate::tspio::Metric::RawEuclidean,
                )?;
                solve_small(&centroid_inst, solver, rng)?
            };
            recombine(instance, &tours, &centroid_order)
        }
    }
}

/// Solve directly when within the solver's cap, otherwise recurse through
/// another decomposition level.
fn solve_small(
    instance: &TspInstance,
    solver: &dyn SubSolver,
    rng: &mut ChaCha8Rng,
) -> Result<Tour> {
    match instance.dimension {
        0 => Err(QacoError::Usage("empty sub-problem".into())),
        1 => Ok(vec![0]),
        2 => Ok(vec![0, 1]),
        n if n <= solver.city_cap() => solver.solve(instance, rng),
        _ => {
            let (tour, _) = hierarchical_solve(instance, solver, solver.city_cap(), rng)?;
            Ok(tour)
        }
    }
}
