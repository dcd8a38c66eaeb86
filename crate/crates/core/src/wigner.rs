//! Wigner functions of single-mode Fock states.
//!
//! `W(x, p) = 1/(2πħ) ∫ e^{−ipy/ħ} ψ(x + y/2) ψ*(x − y/2) dy`, evaluated by the
//! trapezoidal rule with Hermite functions from the normalized three-term
//! recurrence, and checked against
//! `W_k = ((−1)^k/π) e^{−(x²+p²)} L_k(2(x²+p²))`.

use std::f64::consts::PI;
use std::io::Write;

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Reduced Planck constant; natural units.
pub const HBAR: f64 = 1.0;
/// Largest Fock index accepted by the numeric integral.
pub const MAX_NUMERIC_FOCK: usize = 20;
/// Integration window `[−Y_MAX, Y_MAX]`.
pub const Y_MAX: f64 = 12.0;
pub const QUADRATURE_POINTS: usize = 2049;

/// Normalized Hermite function `ψ_k(x)`:
/// `ψ₀ = π^{−1/4} e^{−x²/2}`, `ψ_{j+1} = √(2/(j+1)) x ψ_j − √(j/(j+1)) ψ_{j−1}`.
pub fn hermite_function(k: usize, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-x * x / 2.0).exp();
    for j in 0..k {
        let jf = j as f64;
        let next = (2.0 / (jf + 1.0)).sqrt() * x * cur - (jf / (jf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Laguerre polynomial `L_k(t)`.
pub fn laguerre(k: usize, t: f64) -> f64 {
    let mut prev = 1.0;
    if k == 0 {
        return prev;
    }
    let mut cur = 1.0 - t;
    for j in 1..k {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 - t) * cur - jf * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

pub fn wigner_fock_closed(k: usize, x: f64, p: f64) -> f64 {
    let rho = x * x + p * p;
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign / PI * (-rho).exp() * laguerre(k, 2.0 * rho)
}

fn check_fock(k: usize) -> Result<()> {
    if k > MAX_NUMERIC_FOCK {
        return Err(Error::OutOfRange {
            index: k,
            bound: MAX_NUMERIC_FOCK + 1,
        });
    }
    Ok(())
}

fn quadrature_nodes() -> (Vec<f64>, Vec<f64>) {
    let h = 2.0 * Y_MAX / (QUADRATURE_POINTS - 1) as f64;
    let ys = (0..QUADRATURE_POINTS).map(|i| -Y_MAX + h * i as f64).collect();
    let ws = (0..QUADRATURE_POINTS)
        .map(|i| if i == 0 || i == QUADRATURE_POINTS - 1 { h / 2.0 } else { h })
        .collect();
    (ys, ws)
}

/// Weighted `ψ(x + y/2) ψ(x − y/2)` at every node; the Fock wavefunctions
/// are real, so only the cosine part of the kernel survives.
fn integrand(k: usize, x: f64, ys: &[f64], ws: &[f64]) -> Vec<f64> {
    ys.iter()
        .zip(ws)
        .map(|(&y, &w)| w * hermite_function(k, x + y / 2.0) * hermite_function(k, x - y / 2.0))
        .collect()
}

fn transform(products: &[f64], ys: &[f64], p: f64) -> f64 {
    let sum: f64 = products.iter().zip(ys).map(|(f, &y)| f * (p * y / HBAR).cos()).sum();
    sum / (2.0 * PI * HBAR)
}

/// Quadrature value of the Wigner function of `|k⟩`, `k ≤ 20`.
pub fn wigner_fock_numeric(k: usize, x: f64, p: f64) -> Result<f64> {
    check_fock(k)?;
    if !(x.is_finite() && p.is_finite()) {
        return Err(Error::NonFinite("phase-space point"));
    }
    let (ys, ws) = quadrature_nodes();
    Ok(transform(&integrand(k, x, &ys, &ws), &ys, p))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseSpaceGrid {
    pub fock: usize,
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    /// `values[[i, j]] = W(xs[j], ps[i])`.
    pub values: Array2<f64>,
    /// Largest `|numeric − closed form|` over the grid.
    pub max_closed_form_deviation: f64,
}

impl PhaseSpaceGrid {
    pub fn dx(&self) -> f64 {
        self.xs[1] - self.xs[0]
    }

    pub fn dp(&self) -> f64 {
        self.ps[1] - self.ps[0]
    }

    /// Riemann sum of the grid values times the cell area.
    pub fn integral(&self) -> f64 {
        self.values.sum() * self.dx() * self.dp()
    }

    /// `Σ_p W(xs[j], p) Δp`, the position marginal at `xs[j]`.
    pub fn position_marginal(&self, j: usize) -> f64 {
        self.values.column(j).sum() * self.dp()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// CSV with header `x,p,w`, p-major, nine significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,p,w")?;
        for (i, p) in self.ps.iter().enumerate() {
            for (j, x) in self.xs.iter().enumerate() {
                writeln!(out, "{x:.8e},{p:.8e},{:.8e}", self.values[[i, j]])?;
            }
        }
        Ok(())
    }
}

/// Symmetric `points × points` grid over `[−range, range]²`.
pub fn wigner_grid(k: usize, range: f64, points: usize) -> Result<PhaseSpaceGrid> {
    check_fock(k)?;
    if points < 3 || points.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!("grid points must be odd and at least 3, got {points}")));
    }
    if !(range.is_finite() && range > 0.0) {
        return Err(Error::InvalidConfig(format!("grid range must be positive, got {range}")));
    }
    let step = 2.0 * range / (points - 1) as f64;
    // Centre index lands exactly on 0 so the grid is point-symmetric.
    let half = (points / 2) as i64;
    let axis: Vec<f64> = (-half..=half).map(|i| step * i as f64).collect();
    let (ys, ws) = quadrature_nodes();
    let columns: Vec<Vec<f64>> = axis
        .par_iter()
        .map(|&x| {
            let products = integrand(k, x, &ys, &ws);
            axis.iter().map(|&p| transform(&products, &ys, p)).collect()
        })
        .collect();
    let values = Array2::from_shape_fn((points, points), |(i, j)| columns[j][i]);
    let max_closed_form_deviation = values
        .indexed_iter()
        .map(|((i, j), v)| (v - wigner_fock_closed(k, axis[j], axis[i])).abs())
        .fold(0.0, f64::max);
    Ok(PhaseSpaceGrid {
        fock: k,
        xs: axis.clone(),
        ps: axis,
        values,
        max_closed_form_deviation,
    })
}
