//! Truncated Fock-space registers.
//!
//! A register of `m` qumodes at cutoff `n` is a dense amplitude vector of
//! length `n^m`. The flat index of the basis state `|k0 k1 ... k(m-1)>` is
//! `sum_j kj * n^(m-1-j)`, i.e. mode 0 is the most significant digit and the
//! leftmost tensor factor.

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Number of Fock levels `|0>..|n-1>` kept per mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Cutoff(usize);

impl Cutoff {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::CutoffTooSmall(n));
        }
        Ok(Cutoff(n))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }

    /// Side length of an operator acting on `arity` modes.
    pub fn dim(self, arity: usize) -> usize {
        self.0.pow(arity as u32)
    }
}

impl TryFrom<usize> for Cutoff {
    type Error = Error;

    fn try_from(n: usize) -> Result<Self> {
        Cutoff::new(n)
    }
}

impl From<Cutoff> for usize {
    fn from(c: Cutoff) -> usize {
        c.0
    }
}

fn check_cutoffs(a: Cutoff, b: Cutoff) -> Result<()> {
    if a != b {
        return Err(Error::CutoffMismatch {
            left: a.0,
            right: b.0,
        });
    }
    Ok(())
}

/// Pure state of an `m`-mode register.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    amplitudes: Array1<C64>,
    modes: usize,
    cutoff: Cutoff,
}

impl State {
    pub fn from_amplitudes(amplitudes: Array1<C64>, modes: usize, cutoff: Cutoff) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidConfig("a register needs at least one mode".into()));
        }
        let expected = cutoff.dim(modes);
        if amplitudes.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: amplitudes.len(),
            });
        }
        Ok(State {
            amplitudes,
            modes,
            cutoff,
        })
    }

    /// The single-mode Fock state `|k>`.
    pub fn fock(k: usize, cutoff: Cutoff) -> Result<Self> {
        Self::basis(&[k], cutoff)
    }

    /// The product basis state `|k0 k1 ...>`.
    pub fn basis(levels: &[usize], cutoff: Cutoff) -> Result<Self> {
        let n = cutoff.get();
        let mut index = 0;
        for &k in levels {
            if k >= n {
                return Err(Error::OutOfRange { index: k, bound: n });
            }
            index = index * n + k;
        }
        let mut amplitudes = Array1::zeros(cutoff.dim(levels.len()));
        amplitudes[index] = ONE;
        Self::from_amplitudes(amplitudes, levels.len(), cutoff)
    }

    /// `|0...0>` on `modes` modes.
    pub fn vacuum(modes: usize, cutoff: Cutoff) -> Result<Self> {
        Self::basis(&vec![0; modes], cutoff)
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Array1<C64> {
        self.amplitudes
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Rescales to unit norm. A zero vector is returned unchanged.
    pub fn normalized(mut self) -> Self {
        let norm = self.norm();
        if norm > 0.0 {
            self.amplitudes.mapv_inplace(|c| c / norm);
        }
        self
    }

    /// Kronecker product `self ⊗ other`; `self` occupies the leading modes.
    pub fn tensor(&self, other: &State) -> Result<State> {
        check_cutoffs(self.cutoff, other.cutoff)?;
        let mut out = Array1::zeros(self.len() * other.len());
        for (i, &a) in self.amplitudes.iter().enumerate() {
            let base = i * other.len();
            for (j, &b) in other.amplitudes.iter().enumerate() {
                out[base + j] = a * b;
            }
        }
        State::from_amplitudes(out, self.modes + other.modes, self.cutoff)
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &State) -> Result<C64> {
        check_cutoffs(self.cutoff, other.cutoff)?;
        if self.modes != other.modes {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `(outer, span, inner)` block sizes for an operator acting on
    /// `arity` consecutive modes starting at `first`.
    fn blocks(&self, first: usize, arity: usize) -> (usize, usize, usize) {
        let n = self.cutoff.get();
        let outer = n.pow(first as u32);
        let span = n.pow(arity as u32);
        let inner = n.pow((self.modes - first - arity) as u32);
        (outer, span, inner)
    }

    /// Reduced density matrix of one mode, tracing out all others.
    pub fn partial_trace(&self, keep: usize) -> Result<DensityMatrix> {
        if keep >= self.modes {
            return Err(Error::ModeOutOfRange {
                mode: keep,
                modes: self.modes,
            });
        }
        let (outer, n, inner) = self.blocks(keep, 1);
        let view = self
            .amplitudes
            .view()
            .into_shape_with_order((outer, n, inner))
            .expect("register length is n^m");
        let mut rho = Array2::<C64>::zeros((n, n));
        for block in view.axis_iter(Axis(0)) {
            for a in 0..n {
                for b in a..n {
                    let mut acc = ZERO;
                    for i in 0..inner {
                        acc += block[[a, i]] * block[[b, i]].conj();
                    }
                    rho[[a, b]] += acc;
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                rho[[a, b]] = rho[[b, a]].conj();
            }
        }
        Ok(DensityMatrix { matrix: rho })
    }
}

/// Dense operator on one, two or all modes of a register.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    matrix: Array2<C64>,
    arity: usize,
    cutoff: Cutoff,
}

impl Operator {
    pub fn from_matrix(matrix: Array2<C64>, arity: usize, cutoff: Cutoff) -> Result<Self> {
        let side = cutoff.dim(arity);
        if matrix.nrows() != side || matrix.ncols() != side {
            return Err(Error::DimensionMismatch {
                expected: side,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Operator {
            matrix,
            arity,
            cutoff,
        })
    }

    pub fn identity(arity: usize, cutoff: Cutoff) -> Self {
        Operator {
            matrix: Array2::eye(cutoff.dim(arity)),
            arity,
            cutoff,
        }
    }

    /// Diagonal single-mode operator from its diagonal entries.
    pub(crate) fn diagonal(entries: impl IntoIterator<Item = C64>, cutoff: Cutoff) -> Self {
        let diag: Array1<C64> = entries.into_iter().collect();
        debug_assert_eq!(diag.len(), cutoff.get());
        Operator {
            matrix: Array2::from_diag(&diag),
            arity: 1,
            cutoff,
        }
    }

    /// Creation operator: `â†|k> = sqrt(k+1)|k+1>`, with `â†|n-1> = 0`.
    pub fn creation(cutoff: Cutoff) -> Self {
        let n = cutoff.get();
        let mut m = Array2::zeros((n, n));
        for k in 1..n {
            m[[k, k - 1]] = C64::new((k as f64).sqrt(), 0.0);
        }
        Operator {
            matrix: m,
            arity: 1,
            cutoff,
        }
    }

    /// Annihilation operator: `â|k> = sqrt(k)|k-1>`.
    pub fn annihilation(cutoff: Cutoff) -> Self {
        let n = cutoff.get();
        let mut m = Array2::zeros((n, n));
        for k in 1..n {
            m[[k - 1, k]] = C64::new((k as f64).sqrt(), 0.0);
        }
        Operator {
            matrix: m,
            arity: 1,
            cutoff,
        }
    }

    /// Number operator `â†â = diag(0, 1, ..., n-1)`.
    pub fn number(cutoff: Cutoff) -> Self {
        Self::creation(cutoff)
            .matmul(&Self::annihilation(cutoff))
            .expect("same shape")
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    pub fn side(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Operator {
            matrix: self.matrix.t().mapv(|c| c.conj()),
            arity: self.arity,
            cutoff: self.cutoff,
        }
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Operator {
            matrix: &self.matrix * factor,
            arity: self.arity,
            cutoff: self.cutoff,
        }
    }

    fn check_same_shape(&self, other: &Operator) -> Result<()> {
        check_cutoffs(self.cutoff, other.cutoff)?;
        if self.arity != other.arity {
            return Err(Error::DimensionMismatch {
                expected: self.side(),
                found: other.side(),
            });
        }
        Ok(())
    }

    /// Operator product `self · other`.
    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        self.check_same_shape(other)?;
        Ok(Operator {
            matrix: self.matrix.dot(&other.matrix),
            arity: self.arity,
            cutoff: self.cutoff,
        })
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.check_same_shape(other)?;
        Ok(Operator {
            matrix: &self.matrix + &other.matrix,
            arity: self.arity,
            cutoff: self.cutoff,
        })
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.check_same_shape(other)?;
        Ok(Operator {
            matrix: &self.matrix - &other.matrix,
            arity: self.arity,
            cutoff: self.cutoff,
        })
    }

    /// `self ⊗ other`; arities add.
    pub fn kron(&self, other: &Operator) -> Result<Operator> {
        check_cutoffs(self.cutoff, other.cutoff)?;
        Ok(Operator {
            matrix: kron(&self.matrix, &other.matrix),
            arity: self.arity + other.arity,
            cutoff: self.cutoff,
        })
    }

    /// `I ⊗ ... ⊗ op ⊗ ... ⊗ I` with `op` starting at mode `first`.
    ///
    /// Works for single-mode operators and for two-mode operators on the
    /// adjacent pair `(first, first + 1)`.
    pub fn embed(&self, first: usize, modes: usize) -> Result<Operator> {
        if first + self.arity > modes {
            return Err(Error::ModeOutOfRange {
                mode: first + self.arity - 1,
                modes,
            });
        }
        let left = Operator::identity(first, self.cutoff);
        let right = Operator::identity(modes - first - self.arity, self.cutoff);
        left.kron(self)?.kron(&right)
    }

    /// Full-register matrix–vector product. Never renormalizes.
    pub fn apply(&self, state: &State) -> Result<State> {
        check_cutoffs(self.cutoff, state.cutoff)?;
        if self.side() != state.len() {
            return Err(Error::DimensionMismatch {
                expected: state.len(),
                found: self.side(),
            });
        }
        Ok(State {
            amplitudes: self.matrix.dot(&state.amplitudes),
            modes: state.modes,
            cutoff: state.cutoff,
        })
    }

    /// Applies a single-mode operator to mode `first`, or a two-mode operator
    /// to the adjacent pair `(first, first + 1)`, without materializing the
    /// full-register matrix.
    pub fn apply_on(&self, state: &State, first: usize) -> Result<State> {
        let mut out = state.clone();
        self.apply_on_mut(&mut out, first)?;
        Ok(out)
    }

    pub(crate) fn apply_on_mut(&self, state: &mut State, first: usize) -> Result<()> {
        check_cutoffs(self.cutoff, state.cutoff)?;
        if first + self.arity > state.modes {
            return Err(Error::ModeOutOfRange {
                mode: first + self.arity - 1,
                modes: state.modes,
            });
        }
        let (outer, span, inner) = state.blocks(first, self.arity);
        let mut view = state
            .amplitudes
            .view_mut()
            .into_shape_with_order((outer, span, inner))
            .expect("register length is n^m");
        for mut block in view.axis_iter_mut(Axis(0)) {
            let updated = self.matrix.dot(&block);
            block.assign(&updated);
        }
        Ok(())
    }

    /// `max |(U†U - I)_ij|`.
    pub fn unitarity_error(&self) -> f64 {
        let product = self.matrix.t().mapv(|c| c.conj()).dot(&self.matrix);
        product
            .indexed_iter()
            .map(|((i, j), &c)| if i == j { (c - ONE).norm() } else { c.norm() })
            .fold(0.0, f64::max)
    }

    /// Largest entrywise deviation between two operators of the same shape.
    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(max_abs_diff(&self.matrix, &other.matrix))
    }
}

/// Reduced density matrix of a single qumode.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: Array2<C64>,
}

impl DensityMatrix {
    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.diag().sum()
    }

    /// `max |ρ - ρ†|`.
    pub fn hermiticity_error(&self) -> f64 {
        max_abs_diff(&self.matrix, &self.matrix.t().mapv(|c| c.conj()))
    }

    /// `tr(ρ A)`.
    pub fn trace_with(&self, obs: &Array2<C64>) -> Result<C64> {
        if obs.nrows() != self.dim() || obs.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: obs.nrows(),
            });
        }
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += self.matrix[[i, j]] * obs[[j, i]];
            }
        }
        Ok(acc)
    }
}

pub(crate) fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for ((i, j), &x) in a.indexed_iter() {
        if x == ZERO {
            continue;
        }
        for ((k, l), &y) in b.indexed_iter() {
            out[[i * br + k, j * bc + l]] = x * y;
        }
    }
    out
}

pub(crate) fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
