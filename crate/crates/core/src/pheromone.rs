//! The quantum ant colony core: binary tour encoding, the path-search
//! circuit, the ancilla mutation schedule, Hamming-distance repair of
//! infeasible samples, and the rotation-lookup pheromone update, assembled
//! into the per-sub-problem iteration loop.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use std::f64::consts::PI;

use crate::error::{QacoError, Result};
use crate::qsim::{NoiseSpec, NoisePlacement, StateVector};
use crate::tspio::{is_permutation, TspInstance, Tour};

/// How the cities of one sub-problem map onto qubits: each city index is a
/// fixed-width binary code, tour position order preserved, plus one ancilla.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubproblemEncoding {
    pub num_cities: usize,
    pub bits_per_city: usize,
    pub path_qubits: usize,
    pub ancilla_index: usize,
}

impl SubproblemEncoding {
    pub fn new(num_cities: usize) -> Result<Self> {
        if num_cities < 2 {
            return Err(QacoError::Usage(format!(
                "sub-problem needs at least 2 cities, got {num_cities}"
            )));
        }
        let bits_per_city = (usize::BITS - (num_cities - 1).leading_zeros()).max(1) as usize;
        let path_qubits = num_cities * bits_per_city;
        Ok(SubproblemEncoding {
            num_cities,
            bits_per_city,
            path_qubits,
            ancilla_index: path_qubits,
        })
    }

    pub fn total_qubits(&self) -> usize {
        self.path_qubits + 1
    }
}

/// Per-qubit rotation angles playing the role of a pheromone trail.
#[derive(Debug, Clone, PartialEq)]
pub struct PheromoneVector {
    pub angles: Vec<f64>,
}

impl PheromoneVector {
    /// All angles at pi/2: every path bit is 0 or 1 with probability 1/2.
    pub fn uniform(path_qubits: usize) -> Self {
        PheromoneVector {
            angles: vec![PI / 2.0; path_qubits],
        }
    }
}

/// Bounded archive of best feasible tours, ascending by length, distinct
/// encodings.
#[derive(Debug, Clone)]
pub struct SolutionPool {
    capacity: usize,
    entries: Vec<PoolEntry>,
}

#[derive(Debug, Clone)]
pub struct PoolEntry {
    pub tour: Tour,
    pub bits: Vec<u8>,
    pub length: f64,
}

impl SolutionPool {
    pub fn new(capacity: usize) -> Self {
        SolutionPool {
            capacity,
            entries: Vec::new(),
        }
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, tour: Tour, bits: Vec<u8>, length: f64) {
        if self.entries.iter().any(|e| e.bits == bits) {
            return;
        }
        let pos = self
            .entries
            .partition_point(|e| e.length <= length);
        self.entries.insert(pos, PoolEntry { tour, bits, length });
        self.entries.truncate(self.capacity);
    }
}

/// Ancilla rotation angle as a step function of the no-improvement streak.
#[derive(Debug, Clone, Copy)]
pub struct MutationSchedule {
    pub thresholds: (usize, usize, usize),
    pub angles: (f64, f64, f64),
}

impl Default for MutationSchedule {
    fn default() -> Self {
        MutationSchedule {
            thresholds: (5, 10, 15),
            angles: (PI / 6.0, PI / 4.0, PI / 2.0),
        }
    }
}

/// Angle for a given streak: 0 below the first threshold, stepping up on
/// [t1, t2) and [t2, t3), the last angle exactly at t3, and back to 0 past it.
pub fn mutation_angle(invariant_count: usize, sched: &MutationSchedule) -> f64 {
    let (t1, t2, t3) = sched.thresholds;
    let (a1, a2, a3) = sched.angles;
    if invariant_count < t1 {
        0.0
    } else if invariant_count < t2 {
        a1
    } else if invariant_count < t3 {
        a2
    } else if invariant_count == t3 {
        a3
    } else {
        0.0
    }
}

/// Configuration for one QACO run.
#[derive(Debug, Clone)]
pub struct QacoConfig {
    pub max_iterations: usize,
    /// Infeasible samples are replaced by random permutations for this many
    /// initial iterations; afterwards the pool-based repair takes over.
    pub random_repair_iterations: usize,
    pub pool_capacity: usize,
    pub noise: NoiseSpec,
    pub clamp_band: (f64, f64),
    pub schedule: MutationSchedule,
    /// Candidate measurements drawn per iteration.
    pub shots_per_iteration: usize,
    /// Largest sub-problem this register budget accepts.
    pub city_cap: usize,
}

impl Default for QacoConfig {
    fn default() -> Self {
        QacoConfig {
            max_iterations: 1000,
            random_repair_iterations: 10,
            pool_capacity: 10,
            noise: NoiseSpec::none(),
            clamp_band: (0.05 * PI, 0.95 * PI),
            schedule: MutationSchedule::default(),
            shots_per_iteration: 1,
            city_cap: 4,
        }
    }
}

/// Concatenate the binary code of each city, tour order preserved.
pub fn encode_tour(tour: &[usize], enc: &SubproblemEncoding) -> Result<Vec<u8>> {
    if !is_permutation(tour, enc.num_cities) {
        return Err(QacoError::Usage(format!(
            "tour {tour:?} is not a permutation of 0..{}",
            enc.num_cities
        )));
    }
    let mut bits = Vec::with_capacity(enc.path_qubits);
    for &city in tour {
        for b in (0..enc.bits_per_city).rev() {
            bits.push(((city >> b) & 1) as u8);
        }
    }
    Ok(bits)
}

/// Inverse of `encode_tour`; `None` when any slot decodes out of range or a
/// city repeats.
pub fn decode_bitstring(bits: &[u8], enc: &SubproblemEncoding) -> Result<Option<Tour>> {
    if bits.len() != enc.path_qubits {
        return Err(QacoError::Usage(format!(
            "expected {} bits, got {}",
            enc.path_qubits,
            bits.len()
        )));
    }
    let mut tour = Vec::with_capacity(enc.num_cities);
    let mut seen = vec![false; enc.num_cities];
    for chunk in bits.chunks(enc.bits_per_city) {
        let mut city = 0usize;
        for &b in chunk {
            city = city << 1 | b as usize;
        }
        if city >= enc.num_cities || seen[city] {
            return Ok(None);
        }
        seen[city] = true;
        tour.push(city);
    }
    Ok(Some(tour))
}

pub fn hamming(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Selection weights inversely proportional to Hamming distance:
/// p_i = 1 / (d_i * sum_j 1/d_j).
pub fn pool_selection_probs(distances: &[usize]) -> Result<Vec<f64>> {
    if distances.is_empty() {
        return Err(QacoError::Usage("empty solution pool".into()));
    }
    if distances.iter().any(|&d| d == 0) {
        return Err(QacoError::Usage(
            "Hamming distance 0 means the sample was feasible".into(),
        ));
    }
    let inv_sum: f64 = distances.iter().map(|&d| 1.0 / d as f64).sum();
    Ok(distances
        .iter()
        .map(|&d| 1.0 / (d as f64 * inv_sum))
        .collect())
}

/// Build and measure one pass of the path-search circuit.
///
/// Each path qubit gets Ry(angle_i); the ancilla gets Ry(mut_angle) and then
/// controls a NOT onto one uniformly chosen path qubit, so a sampled path
/// mutates in a single bit with probability sin^2(mut_angle/2).
pub fn sample_candidate<R: Rng>(
    pher: &PheromoneVector,
    mut_angle: f64,
    enc: &SubproblemEncoding,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<Vec<u8>> {
    let mut state = StateVector::new(enc.total_qubits())?;
    let all_gates = noise.placement == NoisePlacement::AfterAllGates;
    for (q, &angle) in pher.angles.iter().enumerate() {
        state.apply_ry(q, angle)?;
        if all_gates {
            state.apply_noise(noise, &[q], rng)?;
        }
    }
    state.apply_ry(enc.ancilla_index, mut_angle)?;
    if all_gates {
        state.apply_noise(noise, &[enc.ancilla_index], rng)?;
    }
    let target = rng.gen_range(0..enc.path_qubits);
    state.apply_cnot(&[enc.ancilla_index], target)?;
    state.apply_noise(noise, &[enc.ancilla_index, target], rng)?;
    let measured = state.sample(rng);
    Ok(measured[..enc.path_qubits].to_vec())
}

fn random_permutation<R: Rng>(k: usize, rng: &mut R) -> Tour {
    let mut tour: Tour = (0..k).collect();
    for i in (1..k).rev() {
        let j = rng.gen_range(0..=i);
        tour.swap(i, j);
    }
    tour
}

/// Turn a measured bitstring into a feasible tour: decode if possible,
/// otherwise draw a random permutation early on, otherwise pick a pool entry
/// weighted inversely by Hamming distance.
pub fn repair<R: Rng>(
    bits: &[u8],
    iteration: usize,
    pool: &SolutionPool,
    cfg: &QacoConfig,
    enc: &SubproblemEncoding,
    rng: &mut R,
) -> Result<Tour> {
    if let Some(tour) = decode_bitstring(bits, enc)? {
        return Ok(tour);
    }
    if iteration <= cfg.random_repair_iterations || pool.is_empty() {
        return Ok(random_permutation(enc.num_cities, rng));
    }
    let distances: Vec<usize> = pool
        .entries()
        .iter()
        .map(|e| hamming(bits, &e.bits).max(1))
        .collect();
    let probs = pool_selection_probs(&distances)?;
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (entry, p) in pool.entries().iter().zip(&probs) {
        acc += p;
        if u < acc {
            return Ok(entry.tour.clone());
        }
    }
    Ok(pool.entries().last().expect("pool non-empty").tour.clone())
}

/// Rotation-angle increment for one qubit, from the lookup of (sampled bit,
/// best bit, whether the current solution beat the best).
pub fn delta_theta(x_i: u8, b_i: u8, current_better: bool) -> f64 {
    match (x_i, b_i, current_better) {
        (0, 0, true) => -0.01 * PI,
        (0, 0, false) => 0.04 * PI,
        (0, 1, true) => -0.05 * PI,
        (0, 1, false) => 0.07 * PI,
        (1, 0, true) => 0.05 * PI,
        (1, 0, false) => -0.07 * PI,
        (1, 1, true) => 0.01 * PI,
        (1, 1, false) => -0.04 * PI,
        _ => unreachable!("bits must be 0 or 1"),
    }
}

/// Shift every pheromone angle by its lookup increment, clamped to the band.
pub fn update_pheromone(
    pher: &mut PheromoneVector,
    sample_bits: &[u8],
    best_bits: &[u8],
    current_better: bool,
    clamp_band: (f64, f64),
) -> Result<()> {
    if sample_bits.len() != pher.angles.len() || best_bits.len() != pher.angles.len() {
        return Err(QacoError::Usage(
            "pheromone, sample and best encodings must share length".into(),
        ));
    }
    for ((angle, &x), &b) in pher.angles.iter_mut().zip(sample_bits).zip(best_bits) {
        *angle = (*angle + delta_theta(x, b, current_better)).clamp(clamp_band.0, clamp_band.1);
    }
    Ok(())
}

/// One (iteration, best length) pair per iteration.
pub type IterationTrace = Vec<(usize, f64)>;

#[derive(Debug, Clone)]
pub struct QacoOutcome {
    pub best_tour: Tour,
    pub best_length: f64,
    pub trace: IterationTrace,
}

/// Run the full iteration loop on one sub-problem.
pub fn qaco_solve(
    instance: &TspInstance,
    cfg: &QacoConfig,
    rng: &mut ChaCha8Rng,
) -> Result<QacoOutcome> {
    let k = instance.dimension;
    if k > cfg.city_cap {
        return Err(QacoError::DecompositionRequired {
            cities: k,
            cap: cfg.city_cap,
        });
    }
    let enc = SubproblemEncoding::new(k)?;
    if enc.total_qubits() > crate::qsim::MAX_QUBITS {
        return Err(QacoError::Config(format!(
            "{k} cities need {} qubits, register cap is {}",
            enc.total_qubits(),
            crate::qsim::MAX_QUBITS
        )));
    }

    let mut pher = PheromoneVector::uniform(enc.path_qubits);
    let mut pool = SolutionPool::new(cfg.pool_capacity);
    let mut invariant_count = 0usize;
    let mut best_tour: Option<Tour> = None;
    let mut best_length = f64::INFINITY;
    let mut trace = IterationTrace::with_capacity(cfg.max_iterations);

    for iteration in 1..=cfg.max_iterations {
        let mut_angle = mutation_angle(invariant_count, &cfg.schedule);
        let mut iter_best: Option<(Tour, f64)> = None;
        for _ in 0..cfg.shots_per_iteration.max(1) {
            let bits = sample_candidate(&pher, mut_angle, &enc, &cfg.noise, rng)?;
            let tour = repair(&bits, iteration, &pool, cfg, &enc, rng)?;
            let length = instance.tour_length(&tour);
            if iter_best.as_ref().is_none_or(|(_, l)| length < *l) {
                iter_best = Some((tour, length));
            }
        }
        let (tour, length) = iter_best.expect("at least one shot");
        let encoded = encode_tour(&tour, &enc)?;
        pool.insert(tour.clone(), encoded.clone(), length);

        let improved = length < best_length;
        if improved {
            best_length = length;
            best_tour = Some(tour);
            invariant_count = 0;
        } else {
            invariant_count += 1;
        }

        let best_bits = encode_tour(best_tour.as_ref().expect("best set"), &enc)?;
        update_pheromone(&mut pher, &encoded, &best_bits, improved, cfg.clamp_band)?;
        trace.push((iteration, best_length));
    }

    Ok(QacoOutcome {
        best_tour: best_tour.expect("max_iterations >= 1"),
        best_length,
        trace,
    })
}

/// Convenience wrapper seeding its own RNG.
pub fn qaco_solve_seeded(instance: &TspInstance, cfg: &QacoConfig, seed: u64) -> Result<QacoOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    qaco_solve(instance, cfg, &mut rng)
}
