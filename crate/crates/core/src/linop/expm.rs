// Scaling and squaring with diagonal Padé approximants of degree 3..13,
// after Higham, "The scaling and squaring method for the matrix exponential
// revisited" (2005).

use crate::error::{Error, Result};

use super::{c, ComplexMatrix};

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539_398_330_063_23e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068;
const THETA_13: f64 = 5.371920351148152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
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
const B13: [f64; 14] = [
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

fn one_norm(a: &ComplexMatrix) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Odd/even parts `(U, V)` of a low-degree Padé approximant.
fn pade_low(a: &ComplexMatrix, b: &[f64]) -> (ComplexMatrix, ComplexMatrix) {
    let n = a.nrows();
    let a2 = a * a;
    let mut power = ComplexMatrix::identity(n, n);
    let mut odd = ComplexMatrix::zeros(n, n);
    let mut even = ComplexMatrix::zeros(n, n);
    for pair in b.chunks(2) {
        even += &power * c(pair[0]);
        odd += &power * c(pair[1]);
        power = &power * &a2;
    }
    (a * odd, even)
}

fn pade13(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let n = a.nrows();
    let id = ComplexMatrix::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| c(B13[k]);
    let inner_u = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9));
    let u = a * (inner_u + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1));
    let inner_v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8));
    let v = inner_v + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);
    (u, v)
}

/// Matrix exponential of a square complex matrix.
///
/// Returns [`Error::NonFinite`] for NaN or infinite entries; `exp(0)` is the
/// identity exactly.
pub fn matrix_exp(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "exponential of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    if !super::is_finite(a) {
        return Err(Error::NonFinite);
    }
    let n = a.nrows();
    if a.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
        return Ok(ComplexMatrix::identity(n, n));
    }

    let norm = one_norm(a);
    let (u, v, squarings) = if norm <= THETA_3 {
        let (u, v) = pade_low(a, &B3);
        (u, v, 0)
    } else if norm <= THETA_5 {
        let (u, v) = pade_low(a, &B5);
        (u, v, 0)
    } else if norm <= THETA_7 {
        let (u, v) = pade_low(a, &B7);
        (u, v, 0)
    } else if norm <= THETA_9 {
        let (u, v) = pade_low(a, &B9);
        (u, v, 0)
    } else {
        let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
        let scaled = a * c(2f64.powi(-s));
        let (u, v) = pade13(&scaled);
        (u, v, s as u32)
    };

    let numer = &v + &u;
    let denom = &v - &u;
    let mut result = denom.lu().solve(&numer).ok_or(Error::NonFinite)?;
    for _ in 0..squarings {
        result = &result * &result;
    }
    Ok(result)
}
