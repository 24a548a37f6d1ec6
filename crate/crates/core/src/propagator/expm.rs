//! Dense matrix exponential by scaling and squaring with diagonal Padé
//! approximants (degree 3, 5, 7, 9 or 13 chosen from the 1-norm).

use nalgebra::{ComplexField, DMatrix};

use crate::error::{Error, Result};

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.53939833006323e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
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

// beyond this many squarings the result overflows for any non-trivial input
const MAX_SQUARINGS: i32 = 1000;

pub(crate) fn norm1<T: ComplexField<RealField = f64> + Copy>(a: &DMatrix<T>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn scaled<T: ComplexField<RealField = f64> + Copy>(a: &DMatrix<T>, s: f64) -> DMatrix<T> {
    a.map(|z| z * T::from_real(s))
}

fn add_diag<T: ComplexField<RealField = f64> + Copy>(a: &mut DMatrix<T>, s: f64) {
    for i in 0..a.nrows() {
        a[(i, i)] += T::from_real(s);
    }
}

/// `exp(scale·m)`.
pub fn matrix_exponential<T>(m: &DMatrix<T>, scale: f64) -> Result<DMatrix<T>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    if !m.is_square() {
        return Err(Error::InvalidArgument(format!(
            "matrix exponential needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !scale.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite scale {scale}")));
    }
    expm(&scaled(m, scale))
}

/// `exp(a)`.
pub fn expm<T>(a: &DMatrix<T>) -> Result<DMatrix<T>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = a.nrows();
    let norm = norm1(a);
    if !norm.is_finite() {
        return Err(Error::ExpmOverflow { norm });
    }
    if norm == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }

    for &(degree, theta) in &THETA {
        if norm <= theta {
            return finish(pade_low(a, degree), 0, norm);
        }
    }

    let s = ((norm / THETA_13).log2().ceil() as i32).max(0);
    if s > MAX_SQUARINGS {
        return Err(Error::ExpmOverflow { norm });
    }
    let a = scaled(a, 0.5_f64.powi(s));
    finish(pade13(&a), s, norm)
}

fn finish<T>(uv: (DMatrix<T>, DMatrix<T>), squarings: i32, norm: f64) -> Result<DMatrix<T>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let (u, v) = uv;
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::Eigensolver("singular Padé denominator".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if r.iter().all(|z| z.modulus().is_finite()) {
        Ok(r)
    } else {
        Err(Error::ExpmOverflow { norm })
    }
}

fn pade_low<T>(a: &DMatrix<T>, degree: usize) -> (DMatrix<T>, DMatrix<T>)
where
    T: ComplexField<RealField = f64> + Copy,
{
    let b: &[f64] = match degree {
        3 => &B3,
        5 => &B5,
        7 => &B7,
        9 => &B9,
        _ => unreachable!("unsupported Padé degree {degree}"),
    };
    let n = a.nrows();
    let a2 = a * a;
    // even powers A^0, A^2, ..., A^(degree-1)
    let mut powers = vec![DMatrix::<T>::identity(n, n), a2.clone()];
    while powers.len() < degree.div_ceil(2) {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    let mut u = DMatrix::<T>::zeros(n, n);
    let mut v = DMatrix::<T>::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        u += scaled(p, b[2 * k + 1]);
        v += scaled(p, b[2 * k]);
    }
    (a * u, v)
}

fn pade13<T>(a: &DMatrix<T>) -> (DMatrix<T>, DMatrix<T>)
where
    T: ComplexField<RealField = f64> + Copy,
{
    let b = &B13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let mut inner_u = scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]);
    inner_u = &a6 * inner_u;
    inner_u += scaled(&a6, b[7]) + scaled(&a4, b[5]) + scaled(&a2, b[3]);
    add_diag(&mut inner_u, b[1]);
    let u = a * inner_u;

    let mut v = scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]);
    v = &a6 * v;
    v += scaled(&a6, b[6]) + scaled(&a4, b[4]) + scaled(&a2, b[2]);
    add_diag(&mut v, b[0]);
    (u, v)
}
