//! A small qubit statevector simulator for the two binary MNIST classifiers
//! built from qubit gates: the XX/ZZ readout-qubit circuit and the
//! single-qubit `R_y ∘ H` head.
//!
//! Qubit 0 is the most significant bit of the flat index. In the XX/ZZ
//! circuit qubit 0 is the readout and qubit `k + 1` carries pixel `k`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use ndarray::{array, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{C64, ONE, ZERO};

pub const PIXELS: usize = 16;
/// Side of the downsampled image.
pub const SMALL_SIDE: usize = 4;
const BLOCK: usize = 7;

#[derive(Clone, Debug, PartialEq)]
pub struct QubitState {
    amplitudes: Array1<C64>,
    qubits: usize,
}

impl QubitState {
    /// `|0…0⟩` on `qubits` qubits (at most 24).
    pub fn zero(qubits: usize) -> Result<Self> {
        if qubits == 0 || qubits > 24 {
            return Err(Error::InvalidConfig(format!("qubit count {qubits} outside 1..=24")));
        }
        let mut amplitudes = Array1::from_elem(1 << qubits, ZERO);
        amplitudes[0] = ONE;
        Ok(QubitState { amplitudes, qubits })
    }

    pub fn from_amplitudes(amplitudes: Array1<C64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidConfig(format!("{len} amplitudes is not a qubit register")));
        }
        Ok(QubitState {
            qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    fn bit(&self, qubit: usize) -> usize {
        1 << (self.qubits - 1 - qubit)
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.qubits {
            return Err(Error::OutOfRange {
                index: q,
                bound: self.qubits,
            });
        }
        Ok(())
    }

    /// Applies a one-qubit gate to `targets[0]` or a two-qubit gate to the
    /// ordered pair `(targets[0], targets[1])`, which need not be adjacent.
    pub fn apply(&mut self, gate: &QubitGate, targets: &[usize]) -> Result<()> {
        if targets.len() != gate.arity() {
            return Err(Error::LengthMismatch {
                what: "gate targets",
                expected: gate.arity(),
                found: targets.len(),
            });
        }
        for &t in targets {
            self.check_qubit(t)?;
        }
        let u = gate.matrix();
        match targets {
            [a] => {
                let ba = self.bit(*a);
                for base in (0..self.amplitudes.len()).filter(|i| i & ba == 0) {
                    let (x0, x1) = (self.amplitudes[base], self.amplitudes[base | ba]);
                    self.amplitudes[base] = u[[0, 0]] * x0 + u[[0, 1]] * x1;
                    self.amplitudes[base | ba] = u[[1, 0]] * x0 + u[[1, 1]] * x1;
                }
            }
            [a, b] => {
                if a == b {
                    return Err(Error::InvalidConfig("two-qubit gate on a single qubit".into()));
                }
                let (ba, bb) = (self.bit(*a), self.bit(*b));
                for base in (0..self.amplitudes.len()).filter(|i| i & (ba | bb) == 0) {
                    let idx = [base, base | bb, base | ba, base | ba | bb];
                    let x: Vec<C64> = idx.iter().map(|&i| self.amplitudes[i]).collect();
                    for (r, &i) in idx.iter().enumerate() {
                        self.amplitudes[i] = (0..4).map(|c| u[[r, c]] * x[c]).sum();
                    }
                }
            }
            _ => unreachable!("arity is 1 or 2"),
        }
        Ok(())
    }

    /// Reduced 2×2 density matrix of one qubit.
    pub fn reduced(&self, qubit: usize) -> Result<Array2<C64>> {
        self.check_qubit(qubit)?;
        let b = self.bit(qubit);
        let mut rho = Array2::from_elem((2, 2), ZERO);
        for base in (0..self.amplitudes.len()).filter(|i| i & b == 0) {
            let v = [self.amplitudes[base], self.amplitudes[base | b]];
            for r in 0..2 {
                for c in 0..2 {
                    rho[[r, c]] += v[r] * v[c].conj();
                }
            }
        }
        Ok(rho)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum QubitGate {
    H,
    X,
    Z,
    Ry(f64),
    /// `(X⊗X)^t = cos(πt/2) I − i sin(πt/2) X⊗X`.
    XXPow(f64),
    /// `(Z⊗Z)^s` up to global phase: `diag(1, e^{iπs}, e^{iπs}, 1)`.
    ZZPow(f64),
}

impl QubitGate {
    /// Parses `H`, `X`, `Z`, `Ry(θ)`, `XXpow(t)` or `ZZpow(s)`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let unknown = || Error::UnknownGate(text.to_string());
        match text {
            "H" => return Ok(QubitGate::H),
            "X" => return Ok(QubitGate::X),
            "Z" => return Ok(QubitGate::Z),
            _ => {}
        }
        let (name, rest) = text.split_once('(').ok_or_else(unknown)?;
        let value: f64 = rest
            .strip_suffix(')')
            .and_then(|v| v.trim().parse().ok())
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(unknown)?;
        match name.trim() {
            "Ry" => Ok(QubitGate::Ry(value)),
            "XXpow" => Ok(QubitGate::XXPow(value)),
            "ZZpow" => Ok(QubitGate::ZZPow(value)),
            _ => Err(unknown()),
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            QubitGate::XXPow(_) | QubitGate::ZZPow(_) => 2,
            _ => 1,
        }
    }

    pub fn matrix(&self) -> Array2<C64> {
        let r = |v: f64| C64::new(v, 0.0);
        match *self {
            QubitGate::H => array![[r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2)], [r(FRAC_1_SQRT_2), r(-FRAC_1_SQRT_2)]],
            QubitGate::X => array![[ZERO, ONE], [ONE, ZERO]],
            QubitGate::Z => array![[ONE, ZERO], [ZERO, -ONE]],
            QubitGate::Ry(theta) => {
                let (s, c) = (theta / 2.0).sin_cos();
                array![[r(c), r(-s)], [r(s), r(c)]]
            }
            QubitGate::XXPow(t) => {
                let c = r((PI * t / 2.0).cos());
                let s = C64::new(0.0, -(PI * t / 2.0).sin());
                array![
                    [c, ZERO, ZERO, s],
                    [ZERO, c, s, ZERO],
                    [ZERO, s, c, ZERO],
                    [s, ZERO, ZERO, c]
                ]
            }
            QubitGate::ZZPow(s) => {
                let mut m = Array2::from_elem((4, 4), ZERO);
                let phase = C64::from_polar(1.0, PI * s);
                for (i, v) in [ONE, phase, phase, ONE].into_iter().enumerate() {
                    m[[i, i]] = v;
                }
                m
            }
        }
    }
}

fn check_inputs(bits: &[bool], t: &[f64], s: &[f64]) -> Result<()> {
    for (what, len) in [("pixel bits", bits.len()), ("XX exponents", t.len()), ("ZZ exponents", s.len())] {
        if len != PIXELS {
            return Err(Error::LengthMismatch {
                what,
                expected: PIXELS,
                found: len,
            });
        }
    }
    if t.iter().chain(s).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("circuit exponents"));
    }
    Ok(())
}

fn hadamard_conjugate(rho: &Array2<C64>) -> Array2<C64> {
    let h = QubitGate::H.matrix();
    h.dot(rho).dot(&h)
}

/// Readout qubit after the final Hadamard.
#[derive(Clone, Debug, PartialEq)]
pub struct Readout {
    pub rho: Array2<C64>,
}

impl Readout {
    pub fn expectation_z(&self) -> f64 {
        self.rho[[0, 0]].re - self.rho[[1, 1]].re
    }

    /// `⟨φ|ρ|φ⟩` for a pure reference `φ` (normalized internally).
    pub fn fidelity_with(&self, phi: [C64; 2]) -> f64 {
        let n2 = phi[0].norm_sqr() + phi[1].norm_sqr();
        let mut f = ZERO;
        for r in 0..2 {
            for c in 0..2 {
                f += phi[r].conj() * self.rho[[r, c]] * phi[c];
            }
        }
        f.re / n2
    }

    /// Purity `tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.rho.dot(&self.rho).diag().iter().map(|c| c.re).sum()
    }
}

/// Runs the XX/ZZ circuit one (readout, data) pair at a time.
///
/// The readout enters the XX layer as `|−⟩`, an eigenvector of `X`, so each
/// XX gate leaves the register a product state and only rotates its data
/// qubit. The ZZ layer is then folded into the readout density matrix one
/// data qubit at a time, tracing each one out after its gate.
pub fn google_circuit(bits: &[bool], t: &[f64], s: &[f64]) -> Result<Readout> {
    check_inputs(bits, t, s)?;
    let minus = [C64::new(FRAC_1_SQRT_2, 0.0), C64::new(-FRAC_1_SQRT_2, 0.0)];
    let mut rho = Array2::from_shape_fn((2, 2), |(r, c)| minus[r] * minus[c].conj());
    let xx_on_minus = |k: usize| -> Result<[C64; 2]> {
        let mut pair = QubitState::zero(2)?;
        pair.apply(&QubitGate::X, &[0])?;
        pair.apply(&QubitGate::H, &[0])?;
        if bits[k] {
            pair.apply(&QubitGate::X, &[1])?;
        }
        pair.apply(&QubitGate::XXPow(t[k]), &[0, 1])?;
        // Factor |−⟩ ⊗ φ: rows r of the 2×2 amplitude block are minus[r]·φ.
        let a = pair.amplitudes();
        Ok([a[0] / minus[0], a[1] / minus[0]])
    };
    for (k, &sk) in s.iter().enumerate() {
        let phi = xx_on_minus(k)?;
        let zz = QubitGate::ZZPow(sk).matrix();
        let mut next = Array2::from_elem((2, 2), ZERO);
        for r in 0..2 {
            for c in 0..2 {
                // tr_data[ZZ (ρ ⊗ |φ⟩⟨φ|) ZZ†] with ZZ diagonal.
                let overlap: C64 = (0..2)
                    .map(|d| zz[[2 * r + d, 2 * r + d]] * phi[d] * (zz[[2 * c + d, 2 * c + d]] * phi[d]).conj())
                    .sum();
                next[[r, c]] = rho[[r, c]] * overlap;
            }
        }
        rho = next;
    }
    Ok(Readout {
        rho: hadamard_conjugate(&rho),
    })
}

/// The same circuit on the full 17-qubit statevector.
pub fn google_circuit_full(bits: &[bool], t: &[f64], s: &[f64]) -> Result<Readout> {
    check_inputs(bits, t, s)?;
    let mut state = QubitState::zero(PIXELS + 1)?;
    state.apply(&QubitGate::X, &[0])?;
    state.apply(&QubitGate::H, &[0])?;
    for (k, &b) in bits.iter().enumerate() {
        if b {
            state.apply(&QubitGate::X, &[k + 1])?;
        }
    }
    for (k, &tk) in t.iter().enumerate() {
        state.apply(&QubitGate::XXPow(tk), &[0, k + 1])?;
    }
    for (k, &sk) in s.iter().enumerate() {
        state.apply(&QubitGate::ZZPow(sk), &[0, k + 1])?;
    }
    state.apply(&QubitGate::H, &[0])?;
    Ok(Readout { rho: state.reduced(0)? })
}

/// Unnormalized readout `(1 − e^{iπΣs}, 1 + e^{iπΣs})` claimed in closed
/// form.
pub fn closed_form_readout(s: &[f64]) -> [C64; 2] {
    let e = C64::from_polar(1.0, PI * s.iter().sum::<f64>());
    [ONE - e, ONE + e]
}

/// `⟨Z⟩` of the normalized closed-form readout.
pub fn closed_form_expectation(s: &[f64]) -> f64 {
    let [a, b] = closed_form_readout(s);
    (a.norm_sqr() - b.norm_sqr()) / (a.norm_sqr() + b.norm_sqr())
}

/// `½ Σ|λ|` over the eigenvalues of `ρ − σ` for 2×2 Hermitian inputs.
pub fn trace_distance(rho: &Array2<C64>, sigma: &Array2<C64>) -> f64 {
    let d = rho - sigma;
    let (a, b, c) = (d[[0, 0]].re, d[[1, 1]].re, d[[0, 1]]);
    let mid = (a + b) / 2.0;
    let rad = (((a - b) / 2.0).powi(2) + c.norm_sqr()).sqrt();
    ((mid + rad).abs() + (mid - rad).abs()) / 2.0
}

/// 28×28 pixels in `[0, 255]` to 16 bits: scale to `[0, 1]`, average 7×7
/// blocks, keep blocks above 0.5. Bit `4·row + col`.
pub fn binarize_resize(image: &[f64]) -> Result<Vec<bool>> {
    let side = SMALL_SIDE * BLOCK;
    if image.len() != side * side {
        return Err(Error::LengthMismatch {
            what: "image pixels",
            expected: side * side,
            found: image.len(),
        });
    }
    let mut bits = Vec::with_capacity(PIXELS);
    for br in 0..SMALL_SIDE {
        for bc in 0..SMALL_SIDE {
            let mut sum = 0.0;
            for r in 0..BLOCK {
                for c in 0..BLOCK {
                    sum += image[(br * BLOCK + r) * side + bc * BLOCK + c] / 255.0;
                }
            }
            bits.push(sum / (BLOCK * BLOCK) as f64 > 0.5);
        }
    }
    Ok(bits)
}

/// Outcome probabilities of `R_y(θ) ∘ H |0⟩`.
pub fn ry_head(theta: f64) -> Result<[f64; 2]> {
    if !theta.is_finite() {
        return Err(Error::NonFinite("R_y angle"));
    }
    let mut q = QubitState::zero(1)?;
    q.apply(&QubitGate::H, &[0])?;
    q.apply(&QubitGate::Ry(theta), &[0])?;
    let a = q.amplitudes();
    Ok([a[0].norm_sqr(), a[1].norm_sqr()])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseShiftGrad {
    /// `f(θ + δ) − f(θ − δ)`.
    pub difference: f64,
    /// The difference divided by `2δ`.
    pub scaled: f64,
}

/// Two evaluations of a readout statistic at `θ ± δ`.
pub fn phase_shift_grad<F: Fn(f64) -> f64>(statistic: F, theta: f64, delta: f64) -> Result<PhaseShiftGrad> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidConfig(format!("shift must be positive, got {delta}")));
    }
    let difference = statistic(theta + delta) - statistic(theta - delta);
    Ok(PhaseShiftGrad {
        difference,
        scaled: difference / (2.0 * delta),
    })
}

/// Random pixel bits and exponents in `[−1, 1)`.
pub fn random_google_inputs(seed: u64) -> (Vec<bool>, Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits = (0..PIXELS).map(|_| rng.random::<bool>()).collect();
    let t = (0..PIXELS).map(|_| rng.random_range(-1.0..1.0)).collect();
    let s = (0..PIXELS).map(|_| rng.random_range(-1.0..1.0)).collect();
    (bits, t, s)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GoogleTrial {
    pub seed: u64,
    pub expectation_z: f64,
    pub closed_form_z: f64,
    pub closed_form_fidelity: f64,
    pub readout_purity: f64,
    pub pairwise_vs_full: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GoogleReport {
    pub trials: Vec<GoogleTrial>,
    /// `⟨Z⟩` with every ZZ exponent zero.
    pub zero_s_expectation: f64,
}

impl GoogleReport {
    pub const TOLERANCE: f64 = 1e-9;

    pub fn simulators_agree(&self) -> bool {
        self.trials.iter().all(|t| t.pairwise_vs_full <= Self::TOLERANCE)
    }

    pub fn closed_form_holds(&self) -> bool {
        self.trials
            .iter()
            .all(|t| t.closed_form_fidelity >= 1.0 - Self::TOLERANCE)
    }
}

pub fn google_report(seed: u64, trials: usize) -> Result<GoogleReport> {
    let mut out = Vec::with_capacity(trials);
    for i in 0..trials as u64 {
        let trial_seed = seed.wrapping_add(i);
        let (bits, t, s) = random_google_inputs(trial_seed);
        let pairwise = google_circuit(&bits, &t, &s)?;
        let full = google_circuit_full(&bits, &t, &s)?;
        out.push(GoogleTrial {
            seed: trial_seed,
            expectation_z: pairwise.expectation_z(),
            closed_form_z: closed_form_expectation(&s),
            closed_form_fidelity: pairwise.fidelity_with(closed_form_readout(&s)),
            readout_purity: pairwise.purity(),
            pairwise_vs_full: trace_distance(&pairwise.rho, &full.rho),
        });
    }
    let (bits, t, _) = random_google_inputs(seed);
    let zero_s_expectation = google_circuit(&bits, &t, &[0.0; PIXELS])?.expectation_z();
    Ok(GoogleReport {
        trials: out,
        zero_s_expectation,
    })
}

impl fmt::Display for GoogleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "XX/ZZ readout circuit, 16 data qubits + 1 readout")?;
        writeln!(f, "seed        <Z> sim      <Z> closed   fidelity     purity       |pair-full|")?;
        for t in &self.trials {
            writeln!(
                f,
                "{:<11} {:<12.6} {:<12.6} {:<12.6e} {:<12.6} {:.2e}",
                t.seed, t.expectation_z, t.closed_form_z, t.closed_form_fidelity, t.readout_purity, t.pairwise_vs_full
            )?;
        }
        writeln!(f, "all s = 0: <Z> = {:.12}", self.zero_s_expectation)?;
        writeln!(
            f,
            "pairwise vs full statevector: {}",
            if self.simulators_agree() { "agree" } else { "DISAGREE" }
        )?;
        write!(
            f,
            "closed-form readout (1 - e^(i pi sum s), 1 + e^(i pi sum s)): {}",
            if self.closed_form_holds() {
                "matches"
            } else {
                "does not match for generic t, s, bits"
            }
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QiskitRow {
    pub theta: f64,
    pub p0: f64,
    pub p1: f64,
    pub grad_p1: f64,
    pub analytic_grad_p1: f64,
}

/// `p₁(θ) = (cos(θ/2) + sin(θ/2))² / 2`, so `dp₁/dθ = cos θ / 2`.
pub fn qiskit_report(seed: u64, rows: usize, delta: f64) -> Result<Vec<QiskitRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p1 = |th: f64| ry_head(th).map(|p| p[1]).unwrap_or(f64::NAN);
    (0..rows)
        .map(|_| {
            let theta = rng.random_range(0.0..4.0 * PI);
            let [p0, p1v] = ry_head(theta)?;
            Ok(QiskitRow {
                theta,
                p0,
                p1: p1v,
                grad_p1: phase_shift_grad(p1, theta, delta)?.scaled,
                analytic_grad_p1: theta.cos() / 2.0,
            })
        })
        .collect()
}
