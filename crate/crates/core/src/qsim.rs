//! Minimal statevector simulator for the path-search circuits.
//!
//! Supports exactly the gate set the optimizer needs: `Ry` rotations, `X`,
//! and multi-controlled NOT, plus stochastic-trajectory noise channels.
//! Qubit 0 is the most significant bit of a rendered basis string.

use num_complex::Complex64;
use rand::Rng;

use crate::error::QacoError;

/// Hard cap on register width; 2^24 amplitudes is already 256 MiB.
pub const MAX_QUBITS: usize = 24;

/// Noise channel applied after gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum NoiseModel {
    None,
    BitFlip,
    ThermalRelaxation,
}

/// Where in the circuit noise is injected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum NoisePlacement {
    AfterMultiQubitGates,
    AfterAllGates,
}

/// Noise channel configuration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoiseSpec {
    pub model: NoiseModel,
    pub rate: f64,
    pub placement: NoisePlacement,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            model: NoiseModel::None,
            rate: 0.0,
            placement: NoisePlacement::AfterMultiQubitGates,
        }
    }

    pub fn new(model: NoiseModel, rate: f64, placement: NoisePlacement) -> Result<Self, QacoError> {
        if !(0.0..=1.0).contains(&rate) {
            return Err(QacoError::Config(format!(
                "noise rate {rate} outside [0, 1]"
            )));
        }
        Ok(NoiseSpec {
            model,
            rate,
            placement,
        })
    }

    pub fn is_none(&self) -> bool {
        matches!(self.model, NoiseModel::None) || self.rate == 0.0
    }
}

/// Full quantum state of an n-qubit register.
#[derive(Debug, Clone)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Initialize the register in |0...0>.
    pub fn new(num_qubits: usize) -> Result<Self, QacoError> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(QacoError::Config(format!(
                "qubit count {num_qubits} outside [1, {MAX_QUBITS}]"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { num_qubits, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Bit value of `qubit` within basis index `idx` (qubit 0 = MSB).
    #[inline]
    fn bit(&self, idx: usize, qubit: usize) -> bool {
        idx >> (self.num_qubits - 1 - qubit) & 1 == 1
    }

    #[inline]
    fn mask(&self, qubit: usize) -> usize {
        1 << (self.num_qubits - 1 - qubit)
    }

    fn check_qubit(&self, qubit: usize) -> Result<(), QacoError> {
        if qubit >= self.num_qubits {
            return Err(QacoError::Usage(format!(
                "qubit index {qubit} out of range for {}-qubit register",
                self.num_qubits
            )));
        }
        Ok(())
    }

    /// Apply Ry(angle) on one wire: rows (cos a/2, -sin a/2) / (sin a/2, cos a/2).
    pub fn apply_ry(&mut self, qubit: usize, angle: f64) -> Result<(), QacoError> {
        self.check_qubit(qubit)?;
        let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
        let m = self.mask(qubit);
        for i in 0..self.amps.len() {
            if i & m == 0 {
                let a0 = self.amps[i];
                let a1 = self.amps[i | m];
                self.amps[i] = c * a0 - s * a1;
                self.amps[i | m] = s * a0 + c * a1;
            }
        }
        Ok(())
    }

    /// Pauli X on one wire.
    pub fn apply_x(&mut self, qubit: usize) -> Result<(), QacoError> {
        self.check_qubit(qubit)?;
        let m = self.mask(qubit);
        for i in 0..self.amps.len() {
            if i & m == 0 {
                self.amps.swap(i, i | m);
            }
        }
        Ok(())
    }

    /// Multi-controlled NOT: flip `target` on basis states where all controls are 1.
    pub fn apply_cnot(&mut self, controls: &[usize], target: usize) -> Result<(), QacoError> {
        self.check_qubit(target)?;
        if controls.len() > 3 {
            return Err(QacoError::Usage(format!(
                "at most 3 controls supported, got {}",
                controls.len()
            )));
        }
        let mut seen = vec![target];
        for &c in controls {
            self.check_qubit(c)?;
            if seen.contains(&c) {
                return Err(QacoError::Usage(format!(
                    "overlapping qubit index {c} in controlled gate"
                )));
            }
            seen.push(c);
        }
        let tmask = self.mask(target);
        let cmask: usize = controls.iter().map(|&c| self.mask(c)).sum();
        for i in 0..self.amps.len() {
            if i & tmask == 0 && i & cmask == cmask {
                self.amps.swap(i, i | tmask);
            }
        }
        Ok(())
    }

    /// |amplitude|^2 per basis state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Draw one basis state index with probability |amplitude|^2.
    ///
    /// The state is not mutated; every iteration rebuilds its circuit, so
    /// measurement collapse never matters here.
    pub fn sample_index<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            acc += a.norm_sqr();
            if u < acc {
                return i;
            }
        }
        self.amps.len() - 1
    }

    /// Draw one basis state as a bit vector, qubit 0 first.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<u8> {
        let idx = self.sample_index(rng);
        (0..self.num_qubits)
            .map(|q| u8::from(self.bit(idx, q)))
            .collect()
    }

    /// Apply the configured noise channel to each touched qubit.
    ///
    /// Trajectory semantics on the statevector: BIT_FLIP applies X with
    /// probability `rate` per qubit; THERMAL_RELAXATION samples one branch of
    /// the amplitude-damping Kraus pair {diag(1, sqrt(1-rate)), |0><1| sqrt(rate)}
    /// with probability equal to the branch norm, then renormalizes.
    pub fn apply_noise<R: Rng>(
        &mut self,
        spec: &NoiseSpec,
        touched: &[usize],
        rng: &mut R,
    ) -> Result<(), QacoError> {
        if spec.is_none() {
            return Ok(());
        }
        match spec.model {
            NoiseModel::None => {}
            NoiseModel::BitFlip => {
                for &q in touched {
                    if rng.gen::<f64>() < spec.rate {
                        self.apply_x(q)?;
                    }
                }
            }
            NoiseModel::ThermalRelaxation => {
                for &q in touched {
                    self.apply_amplitude_damping(q, spec.rate, rng)?;
                }
            }
        }
        Ok(())
    }

    fn apply_amplitude_damping<R: Rng>(
        &mut self,
        qubit: usize,
        rate: f64,
        rng: &mut R,
    ) -> Result<(), QacoError> {
        self.check_qubit(qubit)?;
        let m = self.mask(qubit);
        // P(decay branch) = rate * P(qubit = 1)
        let p1: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & m != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        let p_decay = rate * p1;
        if rng.gen::<f64>() < p_decay {
            // K1: |1> component drops to |0>
            let g = rate.sqrt();
            for i in 0..self.amps.len() {
                if i & m == 0 {
                    self.amps[i] = g * self.amps[i | m];
                    self.amps[i | m] = Complex64::new(0.0, 0.0);
                }
            }
        } else {
            let k = (1.0 - rate).sqrt();
            for i in 0..self.amps.len() {
                if i & m != 0 {
                    self.amps[i] *= k;
                }
            }
        }
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            for a in &mut self.amps {
                *a /= norm;
            }
        }
        Ok(())
    }
}

/// Render a sampled bit vector as a basis string, e.g. [1,0,1] -> "101".
pub fn bits_to_string(bits: &[u8]) -> String {
    bits.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect()
}
