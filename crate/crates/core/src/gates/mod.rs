//! Gaussian and Kerr gates as unitary matrices on the truncated Fock space.
//!
//! Every Gaussian gate is the exponential of an anti-Hermitian generator
//! built from the truncated ladder operators, so the resulting matrices are
//! unitary on the truncated space up to rounding:
//!
//! | gate         | generator                              |
//! |--------------|----------------------------------------|
//! | rotation     | `iφ â†â` (diagonal, built exactly)      |
//! | squeezer     | `(z* â² − z â†²) / 2`                   |
//! | displacement | `α â† − α* â`                          |
//! | beamsplitter | `θ (e^{iφ} â b̂† − e^{−iφ} â† b̂)`        |
//! | Kerr         | `iκ n̂²` (diagonal, built exactly)      |
//!
//! In the beamsplitter `â` acts on the first (leftmost) mode of the pair and
//! `b̂` on the second.

mod expm;

use std::f64::consts::TAU;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{Cutoff, Operator, State, C64};

pub use expm::expm;

/// Largest squeezing or displacement magnitude accepted by the gate
/// constructors.
pub const MAX_MAGNITUDE: f64 = 2.0;

/// `exp(M)` for an operator matrix of side at most 4096.
pub fn matrix_exp(op: &Operator) -> Result<Operator> {
    Operator::from_matrix(expm(op.matrix())?, op.arity(), op.cutoff())
}

fn check_finite(name: &'static str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(name))
    }
}

fn check_magnitude(name: &'static str, value: C64) -> Result<()> {
    check_finite(name, &[value.re, value.im])?;
    let r = value.norm();
    if r > MAX_MAGNITUDE {
        return Err(Error::ParameterTooLarge {
            name,
            value: r,
            limit: MAX_MAGNITUDE,
        });
    }
    Ok(())
}

/// `R(φ) = exp(iφ n̂)`, diagonal with entries `e^{ikφ}`.
pub fn rotation(phi: f64, cutoff: Cutoff) -> Result<Operator> {
    check_finite("rotation angle", &[phi])?;
    Ok(Operator::diagonal(
        (0..cutoff.get()).map(|k| C64::from_polar(1.0, k as f64 * phi)),
        cutoff,
    ))
}

/// `K(κ) = exp(iκ n̂²)`, diagonal with entries `e^{iκk²}`.
pub fn kerr(kappa: f64, cutoff: Cutoff) -> Result<Operator> {
    check_finite("Kerr strength", &[kappa])?;
    Ok(Operator::diagonal(
        (0..cutoff.get()).map(|k| C64::from_polar(1.0, kappa * (k * k) as f64)),
        cutoff,
    ))
}

/// `S(z) = exp((z* â² − z â†²) / 2)`.
pub fn squeezer(z: C64, cutoff: Cutoff) -> Result<Operator> {
    check_magnitude("squeezing", z)?;
    if z == C64::new(0.0, 0.0) {
        return Ok(Operator::identity(1, cutoff));
    }
    let a = Operator::annihilation(cutoff);
    let a2 = a.matmul(&a)?;
    let ad2 = a2.adjoint();
    let generator = a2.scaled(z.conj() * 0.5).sub(&ad2.scaled(z * 0.5))?;
    matrix_exp(&generator)
}

/// `D(α) = exp(α â† − α* â)`.
pub fn displacement(alpha: C64, cutoff: Cutoff) -> Result<Operator> {
    check_magnitude("displacement", alpha)?;
    if alpha == C64::new(0.0, 0.0) {
        return Ok(Operator::identity(1, cutoff));
    }
    let a = Operator::annihilation(cutoff);
    let generator = a.adjoint().scaled(alpha).sub(&a.scaled(alpha.conj()))?;
    matrix_exp(&generator)
}

/// Two-mode beamsplitter `B(θ, φ) = exp(θ (e^{iφ} â b̂† − e^{−iφ} â† b̂))`.
pub fn beamsplitter(theta: f64, phi: f64, cutoff: Cutoff) -> Result<Operator> {
    check_finite("beamsplitter angles", &[theta, phi])?;
    if theta == 0.0 {
        return Ok(Operator::identity(2, cutoff));
    }
    let a = Operator::annihilation(cutoff);
    let ad = a.adjoint();
    let a_bd = a.kron(&ad)?;
    let ad_b = ad.kron(&a)?;
    let generator = a_bd
        .scaled(C64::from_polar(theta, phi))
        .sub(&ad_b.scaled(C64::from_polar(theta, -phi)))?;
    matrix_exp(&generator)
}

/// A single parameterized gate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    Rotation { phi: f64 },
    Squeezer { z: C64 },
    Displacement { alpha: C64 },
    Beamsplitter { theta: f64, phi: f64 },
    Kerr { kappa: f64 },
}

impl Gate {
    pub fn family(&self) -> GateFamily {
        match self {
            Gate::Rotation { .. } => GateFamily::Rotation,
            Gate::Squeezer { .. } => GateFamily::Squeezer,
            Gate::Displacement { .. } => GateFamily::Displacement,
            Gate::Beamsplitter { .. } => GateFamily::Beamsplitter,
            Gate::Kerr { .. } => GateFamily::Kerr,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Gate::Beamsplitter { .. } => 2,
            _ => 1,
        }
    }

    pub fn matrix(&self, cutoff: Cutoff) -> Result<Operator> {
        match *self {
            Gate::Rotation { phi } => rotation(phi, cutoff),
            Gate::Squeezer { z } => squeezer(z, cutoff),
            Gate::Displacement { alpha } => displacement(alpha, cutoff),
            Gate::Beamsplitter { theta, phi } => beamsplitter(theta, phi, cutoff),
            Gate::Kerr { kappa } => kerr(kappa, cutoff),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateFamily {
    Rotation,
    Squeezer,
    Displacement,
    Beamsplitter,
    Kerr,
}

impl GateFamily {
    pub const ALL: [GateFamily; 5] = [
        GateFamily::Rotation,
        GateFamily::Squeezer,
        GateFamily::Displacement,
        GateFamily::Beamsplitter,
        GateFamily::Kerr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateFamily::Rotation => "rotation",
            GateFamily::Squeezer => "squeezer",
            GateFamily::Displacement => "displacement",
            GateFamily::Beamsplitter => "beamsplitter",
            GateFamily::Kerr => "kerr",
        }
    }

    /// Draws parameters with squeezing/displacement magnitudes in `[0, 1]`
    /// and angles in `[0, 2π)`.
    fn sample<R: Rng>(self, rng: &mut R) -> Gate {
        let polar = |rng: &mut R| C64::from_polar(rng.random::<f64>(), rng.random::<f64>() * TAU);
        match self {
            GateFamily::Rotation => Gate::Rotation {
                phi: rng.random::<f64>() * TAU,
            },
            GateFamily::Squeezer => Gate::Squeezer { z: polar(rng) },
            GateFamily::Displacement => Gate::Displacement { alpha: polar(rng) },
            GateFamily::Beamsplitter => Gate::Beamsplitter {
                theta: rng.random::<f64>() * TAU,
                phi: rng.random::<f64>() * TAU,
            },
            GateFamily::Kerr => Gate::Kerr {
                kappa: (rng.random::<f64>() - 0.5) * TAU,
            },
        }
    }
}

impl fmt::Display for GateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Interferometer parameters for `m` modes: one beamsplitter per adjacent
/// pair and one rotation per mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterferometerParams {
    pub bs_thetas: Vec<f64>,
    pub bs_phis: Vec<f64>,
    pub rot_phis: Vec<f64>,
}

impl InterferometerParams {
    pub fn zeros(modes: usize) -> Self {
        InterferometerParams {
            bs_thetas: vec![0.0; modes.saturating_sub(1)],
            bs_phis: vec![0.0; modes.saturating_sub(1)],
            rot_phis: vec![0.0; modes],
        }
    }

    pub fn validate(&self, modes: usize) -> Result<()> {
        let pairs = modes.saturating_sub(1);
        for (what, len, expected) in [
            ("interferometer beamsplitter thetas", self.bs_thetas.len(), pairs),
            ("interferometer beamsplitter phis", self.bs_phis.len(), pairs),
            ("interferometer rotations", self.rot_phis.len(), modes),
        ] {
            if len != expected {
                return Err(Error::LengthMismatch {
                    what,
                    expected,
                    found: len,
                });
            }
        }
        Ok(())
    }

    /// The gate sequence in application order: beamsplitters on
    /// `(0,1), (1,2), ...` followed by one rotation per mode. Each entry
    /// carries the first mode it acts on.
    pub fn gates(&self) -> impl Iterator<Item = (usize, Gate)> + '_ {
        let splitters = self
            .bs_thetas
            .iter()
            .zip(&self.bs_phis)
            .enumerate()
            .map(|(j, (&theta, &phi))| (j, Gate::Beamsplitter { theta, phi }));
        let rotations = self
            .rot_phis
            .iter()
            .enumerate()
            .map(|(j, &phi)| (j, Gate::Rotation { phi }));
        splitters.chain(rotations)
    }

    /// Applies the interferometer to a register in place.
    pub fn apply(&self, state: &mut State) -> Result<()> {
        self.validate(state.modes())?;
        for (first, gate) in self.gates() {
            gate.matrix(state.cutoff())?.apply_on_mut(state, first)?;
        }
        Ok(())
    }
}

/// Full `n^m`-side matrix of an interferometer.
pub fn interferometer(p: &InterferometerParams, modes: usize, cutoff: Cutoff) -> Result<Operator> {
    p.validate(modes)?;
    let mut total = Operator::identity(modes, cutoff);
    for (first, gate) in p.gates() {
        let embedded = gate.matrix(cutoff)?.embed(first, modes)?;
        total = embedded.matmul(&total)?;
    }
    Ok(total)
}

/// Worst unitarity error per gate family over random parameter draws.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnitarityReport {
    pub cutoff: usize,
    pub trials: usize,
    pub seed: u64,
    pub families: Vec<(GateFamily, f64)>,
}

impl UnitarityReport {
    pub const TOLERANCE: f64 = 1e-9;

    pub fn worst(&self) -> f64 {
        self.families.iter().map(|&(_, e)| e).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.families.iter().all(|&(_, e)| e <= Self::TOLERANCE)
    }
}

impl fmt::Display for UnitarityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "unitarity check: cutoff={} trials={} seed={}",
            self.cutoff, self.trials, self.seed
        )?;
        for (family, err) in &self.families {
            let verdict = if *err <= Self::TOLERANCE { "ok" } else { "FAIL" };
            writeln!(f, "{:<13} max|U†U-I|={:.3e} {}", family.name(), err, verdict)?;
        }
        Ok(())
    }
}

/// Builds `trials` random instances of every gate family and records the
/// largest `max|U†U − I|` seen per family.
pub fn gate_unitarity_report(cutoff: Cutoff, trials: usize, seed: u64) -> Result<UnitarityReport> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut families = Vec::with_capacity(GateFamily::ALL.len());
    for family in GateFamily::ALL {
        let mut worst: f64 = 0.0;
        for _ in 0..trials {
            let gate = family.sample(&mut rng);
            worst = worst.max(gate.matrix(cutoff)?.unitarity_error());
        }
        families.push((family, worst));
    }
    Ok(UnitarityReport {
        cutoff: cutoff.get(),
        trials,
        seed,
        families,
    })
}

/// `[A, B] = AB − BA`.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    a.matmul(b)?.sub(&b.matmul(a)?)
}

/// Total photon number `n̂ ⊗ I + I ⊗ n̂` on a mode pair.
pub fn pair_number(cutoff: Cutoff) -> Result<Operator> {
    let n = Operator::number(cutoff);
    let id = Operator::identity(1, cutoff);
    n.kron(&id)?.add(&id.kron(&n)?)
}
