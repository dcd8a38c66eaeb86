//! Dense complex matrix exponential by scaling and squaring around a
//! diagonal Padé approximant (Higham 2005). Degrees 3, 5, 7 and 9 are used
//! for small 1-norms; degree 13 otherwise, with the matrix scaled down by
//! `2^s` so the approximant stays inside its backward-error bound.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::fock::{C64, ZERO};

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// 1-norm thresholds below which the degree-m approximant is accurate to
// unit roundoff.
const THETA3: f64 = 1.495585217958292e-2;
const THETA5: f64 = 2.539_398_330_063_23e-1;
const THETA7: f64 = 9.504178996162932e-1;
const THETA9: f64 = 2.097847961257068;
const THETA13: f64 = 5.371920351148152;

pub(crate) const MAX_SIDE: usize = 4096;

fn one_norm(a: &Array2<C64>) -> f64 {
    a.columns()
        .into_iter()
        .map(|col| col.iter().map(|c| c.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn scaled(a: &Array2<C64>, s: f64) -> Array2<C64> {
    a.mapv(|c| c * s)
}

fn add_scaled(acc: &mut Array2<C64>, a: &Array2<C64>, s: f64) {
    acc.zip_mut_with(a, |x, &y| *x += y * s);
}

/// Low-degree approximant: `U = A Σ b_odd A^(k-1)`, `V = Σ b_even A^k`.
fn pade_low(a: &Array2<C64>, b: &[f64]) -> Result<Array2<C64>> {
    let n = a.nrows();
    let eye = Array2::<C64>::eye(n);
    let a2 = a.dot(a);
    let mut u_inner = scaled(&eye, b[1]);
    let mut v = scaled(&eye, b[0]);
    let mut power = eye;
    for k in 1..b.len() / 2 {
        power = power.dot(&a2);
        add_scaled(&mut u_inner, &power, b[2 * k + 1]);
        add_scaled(&mut v, &power, b[2 * k]);
    }
    let u = a.dot(&u_inner);
    solve(&v - &u, &v + &u)
}

fn pade13(a: &Array2<C64>) -> Result<Array2<C64>> {
    let b = &PADE13;
    let n = a.nrows();
    let eye = Array2::<C64>::eye(n);
    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);

    let mut w1 = scaled(&a6, b[13]);
    add_scaled(&mut w1, &a4, b[11]);
    add_scaled(&mut w1, &a2, b[9]);
    let mut w2 = a6.dot(&w1);
    add_scaled(&mut w2, &a6, b[7]);
    add_scaled(&mut w2, &a4, b[5]);
    add_scaled(&mut w2, &a2, b[3]);
    add_scaled(&mut w2, &eye, b[1]);
    let u = a.dot(&w2);

    let mut z1 = scaled(&a6, b[12]);
    add_scaled(&mut z1, &a4, b[10]);
    add_scaled(&mut z1, &a2, b[8]);
    let mut v = a6.dot(&z1);
    add_scaled(&mut v, &a6, b[6]);
    add_scaled(&mut v, &a4, b[4]);
    add_scaled(&mut v, &a2, b[2]);
    add_scaled(&mut v, &eye, b[0]);

    solve(&v - &u, &v + &u)
}

/// Solves `A X = B` by LU decomposition with partial pivoting.
fn solve(mut a: Array2<C64>, mut b: Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    let m = b.ncols();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[[i, col]].norm().total_cmp(&a[[j, col]].norm()))
            .expect("non-empty range");
        let pivot = a[[pivot_row, col]];
        if pivot.norm() == 0.0 || !pivot.is_finite() {
            return Err(Error::NonFinite("matrix exponential (singular Padé denominator)"));
        }
        if pivot_row != col {
            for j in 0..n {
                a.swap([col, j], [pivot_row, j]);
            }
            for j in 0..m {
                b.swap([col, j], [pivot_row, j]);
            }
        }
        for row in col + 1..n {
            let factor = a[[row, col]] / pivot;
            if factor == ZERO {
                continue;
            }
            for j in col..n {
                let v = a[[col, j]];
                a[[row, j]] -= factor * v;
            }
            for j in 0..m {
                let v = b[[col, j]];
                b[[row, j]] -= factor * v;
            }
        }
    }
    for col in (0..n).rev() {
        let pivot = a[[col, col]];
        for j in 0..m {
            let mut acc = b[[col, j]];
            for k in col + 1..n {
                acc -= a[[col, k]] * b[[k, j]];
            }
            b[[col, j]] = acc / pivot;
        }
    }
    Ok(b)
}

/// `exp(A)` for a dense square complex matrix, accurate to near machine
/// precision.
pub fn expm(a: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    if n > MAX_SIDE {
        return Err(Error::DimensionMismatch {
            expected: MAX_SIDE,
            found: n,
        });
    }
    if a.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("matrix exponential input"));
    }
    if n == 0 {
        return Ok(a.clone());
    }
    if n == 1 {
        return Ok(Array2::from_elem((1, 1), a[[0, 0]].exp()));
    }

    let norm = one_norm(a);
    if norm == 0.0 {
        return Ok(Array2::eye(n));
    }
    if norm <= THETA3 {
        return pade_low(a, &PADE3);
    }
    if norm <= THETA5 {
        return pade_low(a, &PADE5);
    }
    if norm <= THETA7 {
        return pade_low(a, &PADE7);
    }
    if norm <= THETA9 {
        return pade_low(a, &PADE9);
    }

    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let mut result = pade13(&scaled(a, 0.5f64.powi(squarings)))?;
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    if result.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("matrix exponential result"));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::max_abs_diff;
    use ndarray::array;

    /// Plain Taylor sum; only trustworthy for small norms.
    fn taylor(a: &Array2<C64>, terms: usize) -> Array2<C64> {
        let n = a.nrows();
        let mut sum = Array2::<C64>::eye(n);
        let mut term = Array2::<C64>::eye(n);
        for k in 1..terms {
            term = term.dot(a).mapv(|c| c / k as f64);
            sum += &term;
        }
        sum
    }

    #[test]
    fn zero_and_diagonal() {
        let z = Array2::<C64>::zeros((3, 3));
        assert_eq!(expm(&z).unwrap(), Array2::eye(3));
        let d = array![C64::new(0.5, 0.0), C64::new(-1.2, 0.3), C64::new(2.5, -4.0)];
        let e = expm(&Array2::from_diag(&d)).unwrap();
        let expected = Array2::from_diag(&d.mapv(|c| c.exp()));
        assert!(max_abs_diff(&e, &expected) < 1e-12);
    }

    #[test]
    fn pauli_x_rotation_against_series() {
        let theta = 0.3;
        let i_theta = C64::new(0.0, theta);
        let m = array![[ZERO, i_theta], [i_theta, ZERO]];
        let oracle = taylor(&m, 40);
        let closed = array![
            [C64::new(theta.cos(), 0.0), C64::new(0.0, theta.sin())],
            [C64::new(0.0, theta.sin()), C64::new(theta.cos(), 0.0)]
        ];
        assert!(max_abs_diff(&oracle, &closed) < 1e-15);
        assert!(max_abs_diff(&expm(&m).unwrap(), &oracle) < 1e-12);
    }

    #[test]
    fn every_degree_agrees_with_series() {
        // 1-norms chosen to land in each Padé branch, including squaring.
        let base = array![
            [C64::new(0.1, 0.2), C64::new(-0.3, 0.1), C64::new(0.05, 0.0)],
            [C64::new(0.2, -0.1), C64::new(0.0, 0.4), C64::new(0.1, 0.1)],
            [C64::new(-0.1, 0.0), C64::new(0.3, 0.2), C64::new(-0.2, -0.1)]
        ];
        for scale in [0.01, 0.2, 1.0, 2.5, 6.0, 20.0] {
            let a = base.mapv(|c| c * scale);
            // Taylor with squaring as an independent route.
            let s = 8;
            let mut oracle = taylor(&a.mapv(|c| c / 2f64.powi(s)), 30);
            for _ in 0..s {
                oracle = oracle.dot(&oracle);
            }
            let got = expm(&a).unwrap();
            let scale_ref = oracle.iter().map(|c| c.norm()).fold(1.0, f64::max);
            assert!(
                max_abs_diff(&got, &oracle) / scale_ref < 1e-12,
                "scale {scale}"
            );
        }
    }

    #[test]
    fn rejects_bad_input() {
        let nan = array![[C64::new(f64::NAN, 0.0), ZERO], [ZERO, ZERO]];
        assert!(matches!(expm(&nan), Err(Error::NonFinite(_))));
        let rect = Array2::<C64>::zeros((2, 3));
        assert!(matches!(expm(&rect), Err(Error::DimensionMismatch { .. })));
    }
}
