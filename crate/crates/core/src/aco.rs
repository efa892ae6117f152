//! Classical ant colony baseline: pseudo-random-proportional node choice,
//! evaporation, and iteration-best pheromone deposit.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::error::{QacoError, Result};
use crate::pheromone::IterationTrace;
use crate::tspio::{TspInstance, Tour};

pub const TAU_MIN: f64 = 1e-6;

/// Symmetric edge pheromone levels, floored at `TAU_MIN`.
#[derive(Debug, Clone)]
pub struct PheromoneMatrix {
    n: usize,
    tau: Vec<f64>,
}

impl PheromoneMatrix {
    pub fn uniform(n: usize) -> Self {
        PheromoneMatrix {
            n,
            tau: vec![1.0; n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.tau[i * self.n + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        let v = v.max(TAU_MIN);
        self.tau[i * self.n + j] = v;
        self.tau[j * self.n + i] = v;
    }

    pub fn min_entry(&self) -> f64 {
        self.tau
            .iter()
            .enumerate()
            .filter(|(i, _)| i / self.n != i % self.n)
            .map(|(_, &v)| v)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct AcoConfig {
    /// Pheromone exponent.
    pub alpha: f64,
    /// Heuristic (inverse distance) exponent.
    pub beta: f64,
    /// Evaporation rate in (0, 1).
    pub rho: f64,
    /// Exploitation threshold in [0, 1].
    pub q0: f64,
    pub num_ants: usize,
    pub iterations: usize,
    /// Deposit constant; `None` uses the instance's mean edge length so the
    /// deposit is scale-free.
    pub deposit_constant: Option<f64>,
}

impl Default for AcoConfig {
    fn default() -> Self {
        AcoConfig {
            alpha: 4.0,
            beta: 2.0,
            rho: 0.1,
            q0: 0.9,
            num_ants: 6,
            iterations: 1000,
            deposit_constant: None,
        }
    }
}

impl AcoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(QacoError::Config(format!("rho {} outside (0,1)", self.rho)));
        }
        if !(0.0..=1.0).contains(&self.q0) {
            return Err(QacoError::Config(format!("q0 {} outside [0,1]", self.q0)));
        }
        if self.num_ants == 0 || self.iterations == 0 {
            return Err(QacoError::Config("need at least 1 ant and 1 iteration".into()));
        }
        Ok(())
    }
}

#[inline]
fn desirability(tau: f64, eta: f64, alpha: f64, beta: f64) -> f64 {
    tau.powf(alpha) * eta.powf(beta)
}

/// Normalized transition probabilities over the allowed set:
/// P(s) proportional to tau^alpha * eta^beta.
pub fn transition_probs(
    current: usize,
    allowed: &[usize],
    tau: &PheromoneMatrix,
    instance: &TspInstance,
    alpha: f64,
    beta: f64,
) -> Result<Vec<f64>> {
    if allowed.is_empty() {
        return Err(QacoError::Usage("empty allowed set".into()));
    }
    let weights: Vec<f64> = allowed
        .iter()
        .map(|&s| {
            let eta = 1.0 / instance.distance(current, s);
            desirability(tau.get(current, s), eta, alpha, beta)
        })
        .collect();
    let sum: f64 = weights.iter().sum();
    Ok(weights.iter().map(|w| w / sum).collect())
}

/// Pseudo-random-proportional rule: greedy argmax with probability q0,
/// otherwise a draw from `transition_probs`. Argmax ties break on the lowest
/// node index.
pub fn next_node<R: Rng>(
    current: usize,
    allowed: &[usize],
    tau: &PheromoneMatrix,
    instance: &TspInstance,
    cfg: &AcoConfig,
    rng: &mut R,
) -> Result<usize> {
    if allowed.is_empty() {
        return Err(QacoError::Usage("empty allowed set".into()));
    }
    let q: f64 = rng.gen();
    if q <= cfg.q0 {
        let mut best = allowed[0];
        let mut best_w = f64::NEG_INFINITY;
        for &s in allowed {
            let eta = 1.0 / instance.distance(current, s);
            let w = desirability(tau.get(current, s), eta, cfg.alpha, cfg.beta);
            if w > best_w {
                best_w = w;
                best = s;
            }
        }
        Ok(best)
    } else {
        let probs = transition_probs(current, allowed, tau, instance, cfg.alpha, cfg.beta)?;
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (&s, p) in allowed.iter().zip(&probs) {
            acc += p;
            if u < acc {
                return Ok(s);
            }
        }
        Ok(*allowed.last().unwrap())
    }
}

fn construct_tour<R: Rng>(
    instance: &TspInstance,
    tau: &PheromoneMatrix,
    cfg: &AcoConfig,
    rng: &mut R,
) -> Result<Tour> {
    let n = instance.dimension;
    let start = rng.gen_range(0..n);
    let mut tour = vec![start];
    let mut allowed: Vec<usize> = (0..n).filter(|&c| c != start).collect();
    while !allowed.is_empty() {
        let next = next_node(*tour.last().unwrap(), &allowed, tau, instance, cfg, rng)?;
        allowed.retain(|&c| c != next);
        tour.push(next);
    }
    Ok(tour)
}

/// Evaporate all entries, then deposit Q/L on the iteration-best tour's edges
/// (both directions), flooring at `TAU_MIN`.
pub fn update_pheromone(
    tau: &mut PheromoneMatrix,
    tours_with_lengths: &[(Tour, f64)],
    cfg: &AcoConfig,
    deposit_q: f64,
) -> Result<()> {
    if tours_with_lengths.is_empty() {
        return Err(QacoError::Usage("need at least one tour to update".into()));
    }
    let n = tau.n;
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (1.0 - cfg.rho) * tau.get(i, j);
            tau.set(i, j, v);
        }
    }
    let (best_tour, best_len) = tours_with_lengths
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let deposit = deposit_q / best_len;
    for w in best_tour.windows(2) {
        let v = tau.get(w[0], w[1]) + deposit;
        tau.set(w[0], w[1], v);
    }
    let (first, last) = (best_tour[0], *best_tour.last().unwrap());
    let v = tau.get(last, first) + deposit;
    tau.set(last, first, v);
    Ok(())
}

#[derive(Debug, Clone)]
pub struct AcoOutcome {
    pub best_tour: Tour,
    pub best_length: f64,
    pub trace: IterationTrace,
}

/// Full colony run: `num_ants` tours per iteration, iteration-best deposit,
/// global best tracked across iterations.
pub fn aco_solve(
    instance: &TspInstance,
    cfg: &AcoConfig,
    rng: &mut ChaCha8Rng,
) -> Result<AcoOutcome> {
    cfg.validate()?;
    if instance.dimension < 3 {
        return Err(QacoError::Usage(format!(
            "ACO needs at least 3 cities, got {}",
            instance.dimension
        )));
    }
    let deposit_q = cfg
        .deposit_constant
        .unwrap_or_else(|| instance.mean_edge_length());
    let mut tau = PheromoneMatrix::uniform(instance.dimension);
    let mut best_tour: Option<Tour> = None;
    let mut best_length = f64::INFINITY;
    let mut trace = IterationTrace::with_capacity(cfg.iterations);

    for iteration in 1..=cfg.iterations {
        let mut tours = Vec::with_capacity(cfg.num_ants);
        for _ in 0..cfg.num_ants {
            let tour = construct_tour(instance, &tau, cfg, rng)?;
            let length = instance.tour_length(&tour);
            tours.push((tour, length));
        }
        for (tour, length) in &tours {
            if *length < best_length {
                best_length = *length;
                best_tour = Some(tour.clone());
            }
        }
        update_pheromone(&mut tau, &tours, cfg, deposit_q)?;
        trace.push((iteration, best_length));
    }

    Ok(AcoOutcome {
        best_tour: best_tour.expect("at least one iteration"),
        best_length,
        trace,
    })
}

pub fn aco_solve_seeded(instance: &TspInstance, cfg: &AcoConfig, seed: u64) -> Result<AcoOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    aco_solve(instance, cfg, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tspio::{random_instance, Metric};
    use approx::assert_abs_diff_eq;

    fn line_instance(ds: &[f64]) -> TspInstance {
        // cities on a line at the given x positions
        let coords = ds.iter().map(|&x| (x, 0.0)).collect();
        TspInstance::from_coords("line", coords, Metric::RawEuclidean).unwrap()
    }

    #[test]
    fn transition_single_allowed() {
        let inst = line_instance(&[0.0, 1.0, 2.0]);
        let tau = PheromoneMatrix::uniform(3);
        let p = transition_probs(0, &[2], &tau, &inst, 1.0, 1.0).unwrap();
        assert_eq!(p, vec![1.0]);
    }

    #[test]
    fn transition_uniform_symmetry() {
        // equal tau, equal distances -> uniform
        let inst = TspInstance::from_coords(
            "tri",
            vec![(0.0, 0.0), (1.0, 0.0), (0.5, 3.0f64.sqrt() / 2.0)],
            Metric::RawEuclidean,
        )
        .unwrap();
        let tau = PheromoneMatrix::uniform(3);
        let p = transition_probs(0, &[1, 2], &tau, &inst, 2.0, 3.0).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn transition_hand_normalization() {
        // tau = [1, 2], equal eta, alpha = beta = 1 -> [1/3, 2/3]
        let inst = TspInstance::from_coords(
            "iso",
            vec![(0.0, 0.0), (0.0, 1.0), (0.0, -1.0)],
            Metric::RawEuclidean,
        )
        .unwrap();
        let mut tau = PheromoneMatrix::uniform(3);
        tau.set(0, 2, 2.0);
        let p = transition_probs(0, &[1, 2], &tau, &inst, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(p[0], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn transition_sums_to_one_and_scale_invariant() {
        let inst = random_instance(6, 2, (50.0, 50.0)).unwrap();
        let mut tau = PheromoneMatrix::uniform(6);
        for i in 0..6 {
            for j in (i + 1)..6 {
                tau.set(i, j, 0.1 + (i + j) as f64);
            }
        }
        let allowed = [1, 2, 4, 5];
        let p = transition_probs(0, &allowed, &tau, &inst, 4.0, 2.0).unwrap();
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);

        let mut scaled = tau.clone();
        for i in 0..6 {
            for j in (i + 1)..6 {
                scaled.set(i, j, tau.get(i, j) * 7.5);
            }
        }
        let q = transition_probs(0, &allowed, &scaled, &inst, 4.0, 2.0).unwrap();
        for (a, b) in p.iter().zip(&q) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn transition_empty_allowed_errors() {
        let inst = line_instance(&[0.0, 1.0, 2.0]);
        let tau = PheromoneMatrix::uniform(3);
        assert!(transition_probs(0, &[], &tau, &inst, 1.0, 1.0).is_err());
    }

    #[test]
    fn next_node_pure_exploitation() {
        let inst = line_instance(&[0.0, 1.0, 2.0]);
        let mut tau = PheromoneMatrix::uniform(3);
        tau.set(0, 1, 5.0);
        let cfg = AcoConfig {
            q0: 1.0,
            ..AcoConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            assert_eq!(next_node(0, &[1, 2], &tau, &inst, &cfg, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn next_node_matches_transition_probs_at_q0_zero() {
        let inst = TspInstance::from_coords(
            "iso",
            vec![(0.0, 0.0), (0.0, 1.0), (0.0, -1.0)],
            Metric::RawEuclidean,
        )
        .unwrap();
        let mut tau = PheromoneMatrix::uniform(3);
        tau.set(0, 2, 2.0);
        let cfg = AcoConfig {
            q0: 0.0,
            alpha: 1.0,
            beta: 1.0,
            ..AcoConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 10_000;
        let mut count1 = 0;
        for _ in 0..n {
            if next_node(0, &[1, 2], &tau, &inst, &cfg, &mut rng).unwrap() == 1 {
                count1 += 1;
            }
        }
        // expected 1/3; 5 sigma binomial band
        let f = count1 as f64 / n as f64;
        let sigma = (1.0 / 3.0 * 2.0 / 3.0 / n as f64).sqrt();
        assert!((f - 1.0 / 3.0).abs() < 5.0 * sigma, "fraction {f}");
    }

    #[test]
    fn update_full_evaporation_floors() {
        let inst = line_instance(&[0.0, 1.0, 2.0]);
        let mut tau = PheromoneMatrix::uniform(3);
        let cfg = AcoConfig {
            rho: 0.999999999,
            ..AcoConfig::default()
        };
        // deposit constant 0 so only evaporation acts
        update_pheromone(&mut tau, &[(vec![0, 1, 2], inst.tour_length(&[0, 1, 2]))], &cfg, 0.0)
            .unwrap();
        assert_abs_diff_eq!(tau.min_entry(), TAU_MIN, epsilon = 1e-12);
    }

    #[test]
    fn update_deposit_only() {
        let mut tau = PheromoneMatrix::uniform(4);
        let cfg = AcoConfig {
            rho: 1e-12,
            ..AcoConfig::default()
        };
        // Q/L = 0.5 on the best tour's edges
        update_pheromone(&mut tau, &[(vec![0, 1, 2, 3], 2.0)], &cfg, 1.0).unwrap();
        assert_abs_diff_eq!(tau.get(0, 1), 1.5, epsilon = 1e-9);
        assert_abs_diff_eq!(tau.get(1, 0), 1.5, epsilon = 1e-9);
        // non-tour edge only evaporated
        assert_abs_diff_eq!(tau.get(0, 2), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn update_two_evaporation_rounds() {
        let mut tau = PheromoneMatrix::uniform(3);
        tau.set(0, 1, 4.0);
        tau.set(0, 2, 4.0);
        tau.set(1, 2, 4.0);
        let cfg = AcoConfig {
            rho: 0.5,
            ..AcoConfig::default()
        };
        update_pheromone(&mut tau, &[(vec![0, 1, 2], 1.0)], &cfg, 0.0).unwrap();
        update_pheromone(&mut tau, &[(vec![0, 1, 2], 1.0)], &cfg, 0.0).unwrap();
        assert_abs_diff_eq!(tau.get(0, 1), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn solve_triangle() {
        let inst = TspInstance::from_coords(
            "tri",
            vec![(0.0, 0.0), (3.0, 0.0), (0.0, 4.0)],
            Metric::RawEuclidean,
        )
        .unwrap();
        let cfg = AcoConfig {
            iterations: 2,
            ..AcoConfig::default()
        };
        let out = aco_solve_seeded(&inst, &cfg, 1).unwrap();
        assert_abs_diff_eq!(out.best_length, 12.0);
    }

    #[test]
    fn solve_unit_square() {
        let inst = TspInstance::from_coords(
            "sq",
            vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)],
            Metric::RawEuclidean,
        )
        .unwrap();
        let cfg = AcoConfig {
            iterations: 100,
            ..AcoConfig::default()
        };
        let mut hits = 0;
        for seed in 0..20 {
            let out = aco_solve_seeded(&inst, &cfg, seed).unwrap();
            if (out.best_length - 4.0).abs() < 1e-9 {
                hits += 1;
            }
        }
        assert!(hits >= 19, "optimum found in only {hits}/20 seeds");
    }

    #[test]
    fn trace_non_increasing() {
        let inst = random_instance(10, 5, (100.0, 100.0)).unwrap();
        let cfg = AcoConfig {
            iterations: 50,
            ..AcoConfig::default()
        };
        let out = aco_solve_seeded(&inst, &cfg, 3).unwrap();
        assert!(out.trace.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn rejects_tiny_instance() {
        let inst = line_instance(&[0.0, 1.0]);
        assert!(aco_solve_seeded(&inst, &AcoConfig::default(), 1).is_err());
    }
}
