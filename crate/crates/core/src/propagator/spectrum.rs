//! Dense non-symmetric eigendecomposition and the spectral data of `G(T)`.

use nalgebra::linalg::Hessenberg;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::liouvillian::{devectorize, hermitian_basis_matrix, vectorized_trace, VectorizedState};
use crate::model::ComplexMatrix;

/// Eigenmatrices with `|trace|` above this may be the steady state.
pub const STEADY_TRACE_MIN: f64 = 1e-8;

/// Right eigenpairs of a general complex matrix, unsorted.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<C64>,
    /// Unit 2-norm right eigenvectors.
    pub vectors: Vec<DVector<C64>>,
}

/// Complex Schur form followed by triangular back-substitution.
///
/// Near a defective point the two affected eigenvectors come out nearly
/// parallel rather than being regularised, which is what the coalescence
/// metric measures. Exactly repeated eigenvalues with a negligible coupling
/// in the Schur form keep independent Schur vectors.
pub fn eigen_decompose(m: &DMatrix<C64>) -> Result<EigenDecomposition> {
    if !m.is_square() {
        return Err(Error::InvalidArgument("eigendecomposition needs a square matrix".into()));
    }
    if !m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Eigensolver("non-finite matrix entry".into()));
    }
    let n = m.nrows();
    let (q, t) = complex_schur(m)?;

    let t_norm = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * t_norm;
    let negligible = 1e3 * f64::EPSILON * t_norm;

    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut x = DVector::<C64>::zeros(n);
        x[k] = C64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let s: C64 = (j + 1..=k).map(|l| t[(j, l)] * x[l]).sum();
            let mut d = t[(j, j)] - lambda;
            if d.norm() < small {
                if s.norm() <= negligible {
                    x[j] = C64::new(0.0, 0.0);
                    continue;
                }
                d = if d.norm() == 0.0 { C64::new(small, 0.0) } else { d * (small / d.norm()) };
            }
            x[j] = -s / d;
        }
        let v = &q * x;
        let norm = v.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Eigensolver(format!("degenerate eigenvector for eigenvalue {lambda}")));
        }
        values.push(lambda);
        vectors.push(v / C64::new(norm, 0.0));
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Rotation `[[c, s], [-conj(s), c]]` that maps `(a, b)` to `(r, 0)`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let r = a.norm().hypot(b.norm());
    if r == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    if a.norm() == 0.0 {
        return (0.0, b.conj() / b.norm());
    }
    (a.norm() / r, (a / a.norm()) * b.conj() / r)
}

fn rotate_rows(h: &mut DMatrix<C64>, k: usize, c: f64, s: C64, cols: std::ops::Range<usize>) {
    for j in cols {
        let (x, y) = (h[(k, j)], h[(k + 1, j)]);
        h[(k, j)] = x * c + s * y;
        h[(k + 1, j)] = -s.conj() * x + y * c;
    }
}

fn rotate_cols(h: &mut DMatrix<C64>, k: usize, c: f64, s: C64, rows: std::ops::Range<usize>) {
    for i in rows {
        let (x, y) = (h[(i, k)], h[(i, k + 1)]);
        h[(i, k)] = x * c + y * s.conj();
        h[(i, k + 1)] = -x * s + y * c;
    }
}

/// Complex Schur form `m = Q T Q†` by single-shift QR on the Hessenberg form.
pub fn complex_schur(m: &DMatrix<C64>) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((DMatrix::zeros(0, 0), DMatrix::zeros(0, 0)));
    }
    let (mut q, mut h) = Hessenberg::new(m.clone()).unpack();
    for j in 0..n {
        for i in j + 2..n {
            h[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    let scale = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tiny = f64::MIN_POSITIVE * n as f64 / f64::EPSILON;
    let max_iter = 30 * n.max(10);

    let mut hi = n - 1;
    let mut iter = 0;
    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let mut diag = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if diag == 0.0 {
                diag = scale;
            }
            if sub <= f64::EPSILON * diag || sub <= tiny {
                h[(lo, lo - 1)] = C64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > max_iter {
            return Err(Error::Eigensolver("QR iteration did not converge".into()));
        }

        let shift = if iter % 10 == 0 {
            // exceptional shift breaks cycles on (near-)unitary inputs
            h[(hi, hi)] + 0.75 * h[(hi, hi - 1)].norm()
        } else {
            let (a, b, c, d) = (h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)]);
            let half = (a - d) * 0.5;
            let root = (half * half + b * c).sqrt();
            let (l1, l2) = ((a + d) * 0.5 + root, (a + d) * 0.5 - root);
            if (l1 - d).norm() <= (l2 - d).norm() { l1 } else { l2 }
        };

        let (c, s) = givens(h[(lo, lo)] - shift, h[(lo + 1, lo)]);
        rotate_rows(&mut h, lo, c, s, lo..n);
        rotate_cols(&mut h, lo, c, s, 0..(lo + 3).min(hi + 1));
        rotate_cols(&mut q, lo, c, s, 0..n);
        for k in lo + 1..hi {
            let (c, s) = givens(h[(k, k - 1)], h[(k + 1, k - 1)]);
            rotate_rows(&mut h, k, c, s, k - 1..n);
            h[(k + 1, k - 1)] = C64::new(0.0, 0.0);
            rotate_cols(&mut h, k, c, s, 0..(k + 3).min(hi + 1));
            rotate_cols(&mut q, k, c, s, 0..n);
        }
    }
    Ok((q, h))
}

/// Fixes the global phase so the largest-modulus component is real and
/// positive. Ties within a relative `1e-9` go to the lowest index.
pub fn fix_phase(v: &mut DVector<C64>) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let idx = v.iter().position(|z| z.norm() >= max * (1.0 - 1e-9)).unwrap();
    let pivot = v[idx];
    let phase = pivot.conj() / pivot.norm();
    v.apply(|z| *z *= phase);
    v[idx] = C64::new(pivot.norm(), 0.0);
}

/// Eigenvalues and unit Hilbert–Schmidt-norm eigenmatrices of a one-period
/// propagator, sorted by descending real part (ties by ascending imaginary
/// part).
#[derive(Clone, Debug)]
pub struct PropagatorSpectrum {
    pub g_matrix: DMatrix<C64>,
    pub eigenvalues: Vec<C64>,
    pub eigenmatrices: Vec<DVector<C64>>,
    pub steady_index: usize,
    /// Smallest distance between two eigenvalues.
    pub min_gap: f64,
}

impl PropagatorSpectrum {
    /// Hilbert-space dimension `N` (the propagator is `N²×N²`).
    pub fn dim(&self) -> usize {
        (self.g_matrix.nrows() as f64).sqrt().round() as usize
    }

    pub fn steady_eigenvalue(&self) -> C64 {
        self.eigenvalues[self.steady_index]
    }

    pub fn transient_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.eigenvalues.len()).filter(move |&k| k != self.steady_index)
    }

    pub fn transient_eigenvalues(&self) -> Vec<C64> {
        self.transient_indices().map(|k| self.eigenvalues[k]).collect()
    }

    pub fn eigenmatrix(&self, k: usize) -> ComplexMatrix {
        let v = VectorizedState::from_amplitudes(self.dim(), self.eigenmatrices[k].clone())
            .expect("eigenvector length is N²");
        devectorize(&v)
    }

    pub fn eigenmatrix_trace(&self, k: usize) -> C64 {
        vectorized_trace(&self.eigenmatrices[k], self.dim())
    }
}

fn finish(
    g_matrix: DMatrix<C64>,
    pairs: Vec<(C64, DVector<C64>)>,
    steady: Option<usize>,
    n: usize,
) -> Result<PropagatorSpectrum> {
    let mut tagged: Vec<(usize, C64, DVector<C64>)> =
        pairs.into_iter().enumerate().map(|(k, (l, v))| (k, l, v)).collect();
    // stable, so an exact tie keeps the steady state ahead
    tagged.sort_by(|a, b| b.1.re.total_cmp(&a.1.re).then(a.1.im.total_cmp(&b.1.im)));
    let mut eigenvalues = Vec::with_capacity(tagged.len());
    let mut eigenmatrices = Vec::with_capacity(tagged.len());
    let mut steady_index = None;
    for (pos, (k, l, mut v)) in tagged.into_iter().enumerate() {
        fix_phase(&mut v);
        if Some(k) == steady {
            steady_index = Some(pos);
        }
        eigenvalues.push(l);
        eigenmatrices.push(v);
    }
    let steady_index = match steady_index {
        Some(i) => i,
        None => (0..eigenvalues.len())
            .filter(|&k| vectorized_trace(&eigenmatrices[k], n).norm() > STEADY_TRACE_MIN)
            .min_by(|&a, &b| (eigenvalues[a] - 1.0).norm().total_cmp(&(eigenvalues[b] - 1.0).norm()))
            .ok_or(Error::NoSteadyState)?,
    };
    if (eigenvalues[steady_index] - 1.0).norm() > 1e-6 {
        return Err(Error::NoSteadyState);
    }
    let mut min_gap = f64::INFINITY;
    for i in 0..eigenvalues.len() {
        for j in i + 1..eigenvalues.len() {
            min_gap = min_gap.min((eigenvalues[i] - eigenvalues[j]).norm());
        }
    }
    Ok(PropagatorSpectrum { g_matrix, eigenvalues, eigenmatrices, steady_index, min_gap })
}

/// Spectral decomposition of a one-period propagator acting on
/// column-stacked density matrices.
pub fn spectrum(g: &DMatrix<C64>) -> Result<PropagatorSpectrum> {
    let n2 = g.nrows();
    let n = (n2 as f64).sqrt().round() as usize;
    if n * n != n2 || !g.is_square() {
        return Err(Error::InvalidArgument(format!("propagator size {n2} is not a square number")));
    }
    let EigenDecomposition { values, vectors } = eigen_decompose(g)?;
    finish(g.clone(), values.into_iter().zip(vectors).collect(), None, n)
}

/// Spectral decomposition of a real propagator given in the Hermitian
/// operator basis (see [`crate::liouvillian::hermitian_basis`]).
///
/// The steady eigenvalue is exactly 1 and the transient spectrum comes from
/// the traceless block alone, so transient eigenvalues keep their relative
/// accuracy even when they are many orders of magnitude below 1.
pub fn spectrum_from_real(g: &DMatrix<f64>, n: usize) -> Result<PropagatorSpectrum> {
    let n2 = n * n;
    if g.nrows() != n2 || g.ncols() != n2 || n < 2 {
        return Err(Error::InvalidArgument(format!("expected a {n2}x{n2} propagator for dimension {n}")));
    }
    if !g.iter().all(|x| x.is_finite()) {
        return Err(Error::Eigensolver("non-finite propagator entry".into()));
    }
    let m = n2 - 1;
    let block: DMatrix<C64> = g.view((0, 0), (m, m)).map(|x| C64::new(x, 0.0));
    let feed = g.view((0, m), (m, 1)).into_owned() / (n as f64).sqrt();
    let u = hermitian_basis_matrix(n);

    // steady state: x = (𝟙 − G₀)⁻¹ c, least-norm when 1 ∈ spec G₀
    let lhs = DMatrix::<f64>::identity(m, m) - g.view((0, 0), (m, m));
    let x = match lhs.clone().lu().solve(&feed) {
        Some(x) if x.iter().all(|v| v.is_finite()) => x,
        _ => lhs
            .svd(true, true)
            .solve(&feed, 1e-12)
            .map_err(|e| Error::Eigensolver(format!("steady state: {e}")))?,
    };
    let mut coords = DVector::<C64>::zeros(n2);
    coords[m] = C64::new(1.0 / (n as f64).sqrt(), 0.0);
    for k in 0..m {
        coords[k] = C64::new(x[k], 0.0);
    }
    let steady = &u * coords;
    let steady = &steady / C64::new(steady.norm(), 0.0);

    let EigenDecomposition { values, vectors } = eigen_decompose(&block)?;
    let mut pairs = vec![(C64::new(1.0, 0.0), steady)];
    for (l, y) in values.into_iter().zip(vectors) {
        let mut coords = DVector::<C64>::zeros(n2);
        coords.rows_mut(0, m).copy_from(&y);
        pairs.push((l, &u * coords));
    }
    let g_matrix = &u * g.map(|x| C64::new(x, 0.0)) * u.adjoint();
    finish(g_matrix, pairs, Some(0), n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(state: &mut u64) -> f64 {
        *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    #[test]
    fn residuals_on_random_matrices() {
        let mut st = 7;
        for _ in 0..50 {
            let m = DMatrix::from_fn(5, 5, |_, _| C64::new(lcg(&mut st), lcg(&mut st)));
            let e = eigen_decompose(&m).unwrap();
            for (l, v) in e.values.iter().zip(&e.vectors) {
                let r = (&m * v - v * *l).norm();
                assert!(r < 1e-12, "residual {r:e}");
            }
        }
    }

    #[test]
    fn schur_reconstructs_and_is_triangular() {
        let mut st = 3;
        for n in [1, 2, 3, 4, 9] {
            let m = DMatrix::from_fn(n, n, |_, _| C64::new(lcg(&mut st), lcg(&mut st)));
            let (q, t) = complex_schur(&m).unwrap();
            let back = &q * &t * q.adjoint();
            assert!((back - &m).iter().all(|z| z.norm() < 1e-13));
            assert!((q.adjoint() * &q - DMatrix::<C64>::identity(n, n)).iter().all(|z| z.norm() < 1e-14));
            for j in 0..n {
                for i in j + 1..n {
                    assert_eq!(t[(i, j)], C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn schur_handles_permutation_and_near_identity() {
        // cyclic permutation: unshifted and double-shift QR stall on it
        let mut p = DMatrix::<C64>::zeros(4, 4);
        for i in 0..4 {
            p[((i + 1) % 4, i)] = C64::new(1.0, 0.0);
        }
        let e = eigen_decompose(&p).unwrap();
        for l in &e.values {
            assert!((l.powi(4) - 1.0).norm() < 1e-13);
        }
        let mut st = 5;
        let m = DMatrix::from_fn(4, 4, |i, j| {
            let d = if i == j { 1.0 } else { 0.0 };
            C64::new(d + 1e-16 * lcg(&mut st), 1e-16 * lcg(&mut st))
        });
        assert!(eigen_decompose(&m).is_ok());
    }

    #[test]
    fn jordan_block_gives_parallel_vectors() {
        let eps = 1e-14;
        let m = DMatrix::from_row_slice(2, 2, &[
            C64::new(0.5, 0.0), C64::new(1.0, 0.0),
            C64::new(eps, 0.0), C64::new(0.5, 0.0),
        ]);
        let e = eigen_decompose(&m).unwrap();
        let overlap = e.vectors[0].dotc(&e.vectors[1]).norm();
        assert!(overlap > 1.0 - 1e-6, "overlap {overlap}");
    }

    #[test]
    fn repeated_eigenvalue_of_normal_matrix_keeps_orthogonal_vectors() {
        let m = DMatrix::<C64>::identity(3, 3);
        let e = eigen_decompose(&m).unwrap();
        for i in 0..3 {
            for j in i + 1..3 {
                assert!(e.vectors[i].dotc(&e.vectors[j]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn phase_fix_is_idempotent_and_makes_pivot_real() {
        let mut v = DVector::from_vec(vec![C64::new(0.1, 0.2), C64::new(-0.3, 0.8), C64::new(0.0, -0.1)]);
        fix_phase(&mut v);
        assert!(v[1].im.abs() < 1e-16 && v[1].re > 0.0);
        let w = v.clone();
        fix_phase(&mut v);
        assert_eq!(v, w);
    }
}
