//! Exact (shot-free) readout: per-mode expectation values and variances via
//! the reduced density matrix, and full-register basis probabilities.

use ndarray::{array, Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{Cutoff, State, C64, ONE, ZERO};

const HERMITIAN_TOL: f64 = 1e-10;

/// A single-mode Hermitian observable.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    matrix: Array2<C64>,
}

impl Observable {
    pub fn new(matrix: Array2<C64>) -> Result<Self> {
        let (r, c) = matrix.dim();
        if r != c {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: c,
            });
        }
        let deviation = matrix
            .indexed_iter()
            .map(|((i, j), v)| (v - matrix[[j, i]].conj()).norm())
            .fold(0.0, f64::max);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian(deviation));
        }
        Ok(Observable { matrix })
    }

    /// Pauli-X; only meaningful on a qubit-sized cutoff.
    pub fn pauli_x(cutoff: Cutoff) -> Result<Self> {
        Self::require_qubit(cutoff)?;
        Self::new(array![[ZERO, ONE], [ONE, ZERO]])
    }

    /// Pauli-Z `diag(1, −1)`; only meaningful on a qubit-sized cutoff.
    pub fn pauli_z(cutoff: Cutoff) -> Result<Self> {
        Self::require_qubit(cutoff)?;
        Self::new(array![[ONE, ZERO], [ZERO, -ONE]])
    }

    /// The number operator, defined at every cutoff.
    pub fn number(cutoff: Cutoff) -> Self {
        let diag: Array1<C64> = (0..cutoff.get()).map(|k| C64::new(k as f64, 0.0)).collect();
        Observable {
            matrix: Array2::from_diag(&diag),
        }
    }

    fn require_qubit(cutoff: Cutoff) -> Result<()> {
        if cutoff.get() != 2 {
            return Err(Error::InvalidConfig(format!(
                "Pauli observables need cutoff 2, got {}",
                cutoff.get()
            )));
        }
        Ok(())
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn side(&self) -> usize {
        self.matrix.nrows()
    }

    fn squared(&self) -> Array2<C64> {
        self.matrix.dot(&self.matrix)
    }
}

fn check_side(state: &State, obs: &Observable) -> Result<()> {
    let n = state.cutoff().get();
    if obs.side() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: obs.side(),
        });
    }
    Ok(())
}

/// `tr(ρ_mode A)` with the imaginary rounding residue dropped.
pub fn expectation(state: &State, obs: &Observable, mode: usize) -> Result<f64> {
    check_side(state, obs)?;
    Ok(state.partial_trace(mode)?.trace_with(obs.matrix())?.re)
}

/// `⟨A²⟩ − ⟨A⟩²` on one mode.
pub fn variance(state: &State, obs: &Observable, mode: usize) -> Result<f64> {
    check_side(state, obs)?;
    let rho = state.partial_trace(mode)?;
    let mean = rho.trace_with(obs.matrix())?.re;
    let second = rho.trace_with(&obs.squared())?.re;
    Ok(second - mean * mean)
}

/// `|c_k|²` for every flat basis index.
pub fn probabilities(state: &State) -> Vec<f64> {
    state.amplitudes().iter().map(|c| c.norm_sqr()).collect()
}

/// One expectation value per mode, in mode order.
pub fn expectation_all_modes(state: &State, obs: &Observable) -> Result<Vec<f64>> {
    (0..state.modes())
        .map(|mode| expectation(state, obs, mode))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementKind {
    Expectation,
    Variance,
    Probability,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementOutcome {
    pub kind: MeasurementKind,
    pub values: Vec<f64>,
}

/// Runs one of the three readouts. `obs` is ignored for probabilities.
pub fn measure(state: &State, kind: MeasurementKind, obs: &Observable) -> Result<MeasurementOutcome> {
    let values = match kind {
        MeasurementKind::Probability => probabilities(state),
        MeasurementKind::Expectation => expectation_all_modes(state, obs)?,
        MeasurementKind::Variance => (0..state.modes())
            .map(|mode| variance(state, obs, mode))
            .collect::<Result<_>>()?,
    };
    Ok(MeasurementOutcome { kind, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn cut(n: usize) -> Cutoff {
        Cutoff::new(n).unwrap()
    }

    fn qubit(amps: &[C64]) -> State {
        State::from_amplitudes(amps.iter().copied().collect(), 1, cut(2)).unwrap()
    }

    #[test]
    fn pauli_x_single_mode_formula() {
        let (p0, p1) = (C64::new(0.6, 0.3), C64::new(-0.2, 0.7));
        let psi = qubit(&[p0, p1]).normalized();
        let a = psi.amplitudes();
        let formula = 2.0 * (a[0].re * a[1].re + a[0].im * a[1].im);
        let x = Observable::pauli_x(cut(2)).unwrap();
        assert!((expectation(&psi, &x, 0).unwrap() - formula).abs() < 1e-14);
    }

    #[test]
    fn expectation_examples() {
        let z = Observable::pauli_z(cut(2)).unwrap();
        let x = Observable::pauli_x(cut(2)).unwrap();
        let vac = State::vacuum(1, cut(2)).unwrap();
        assert_eq!(expectation(&vac, &z, 0).unwrap(), 1.0);
        let bell = State::from_amplitudes(
            array![C64::new(FRAC_1_SQRT_2, 0.0), ZERO, ZERO, C64::new(FRAC_1_SQRT_2, 0.0)],
            2,
            cut(2),
        )
        .unwrap();
        assert!(expectation(&bell, &x, 0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn variance_examples() {
        let z = Observable::pauli_z(cut(2)).unwrap();
        let x = Observable::pauli_x(cut(2)).unwrap();
        let vac = State::vacuum(1, cut(2)).unwrap();
        assert_eq!(variance(&vac, &z, 0).unwrap(), 0.0);
        assert!((variance(&vac, &x, 0).unwrap() - 1.0).abs() < 1e-15);
        let plus = qubit(&[C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0)]);
        assert!((variance(&plus, &z, 0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn probability_examples() {
        let plus = qubit(&[C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0)]);
        let p = probabilities(&plus);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        assert_eq!(probabilities(&State::vacuum(2, cut(4)).unwrap()).len(), 16);
    }

    #[test]
    fn all_modes_on_product_state() {
        let z = Observable::pauli_z(cut(2)).unwrap();
        let s = State::basis(&[0, 1], cut(2)).unwrap();
        assert_eq!(expectation_all_modes(&s, &z).unwrap(), vec![1.0, -1.0]);
        assert_eq!(
            expectation_all_modes(&State::vacuum(8, cut(2)).unwrap(), &z).unwrap().len(),
            8
        );
    }

    #[test]
    fn observable_validation() {
        assert!(Observable::pauli_x(cut(3)).is_err());
        let skew = array![[ZERO, ONE], [-ONE, ZERO]];
        assert!(matches!(Observable::new(skew), Err(Error::NotHermitian(_))));
        let z = Observable::pauli_z(cut(2)).unwrap();
        let s = State::vacuum(1, cut(3)).unwrap();
        assert!(matches!(
            expectation(&s, &z, 0),
            Err(Error::DimensionMismatch { .. })
        ));
        let n = Observable::number(cut(3));
        let two = State::fock(2, cut(3)).unwrap();
        assert_eq!(expectation(&two, &n, 0).unwrap(), 2.0);
    }

    #[test]
    fn measure_dispatch() {
        let z = Observable::pauli_z(cut(2)).unwrap();
        let s = State::basis(&[1, 0], cut(2)).unwrap();
        let out = measure(&s, MeasurementKind::Variance, &z).unwrap();
        assert_eq!(out.values, vec![0.0, 0.0]);
        let out = measure(&s, MeasurementKind::Probability, &z).unwrap();
        assert_eq!(out.values, vec![0.0, 0.0, 1.0, 0.0]);
    }
}
