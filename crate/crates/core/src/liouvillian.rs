//! Column-stacking vectorization and the `N²×N²` Liouvillian matrix.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{ComplexMatrix, LindbladModel};

const I: C64 = C64::new(0.0, 1.0);

/// A density matrix flattened column by column: entry `(m, n)` lands at
/// index `m + N·n`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorizedState {
    dim: usize,
    amplitudes: DVector<C64>,
}

impl VectorizedState {
    pub fn from_amplitudes(dim: usize, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != dim * dim {
            return Err(Error::InvalidArgument(format!(
                "vectorized state of dimension {dim} needs {} amplitudes, got {}",
                dim * dim,
                amplitudes.len()
            )));
        }
        Ok(Self { dim, amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }
}

pub fn vectorize(rho: &ComplexMatrix) -> VectorizedState {
    let m = rho.as_matrix();
    // nalgebra storage is column-major, which is exactly column stacking
    VectorizedState { dim: rho.dim(), amplitudes: DVector::from_column_slice(m.as_slice()) }
}

pub fn devectorize(v: &VectorizedState) -> ComplexMatrix {
    let m = DMatrix::from_column_slice(v.dim, v.dim, v.amplitudes.as_slice());
    ComplexMatrix::from_matrix(m).expect("square by construction")
}

/// `vec(𝟙)`, the left fixed vector of every trace-preserving generator.
pub fn vectorized_identity(dim: usize) -> DVector<C64> {
    vectorize(&ComplexMatrix::identity(dim)).into_amplitudes()
}

/// Trace of the matrix whose column stacking is `v`.
pub fn vectorized_trace(v: &DVector<C64>, dim: usize) -> C64 {
    (0..dim).map(|m| v[m + dim * m]).sum()
}

pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

#[derive(Clone, Debug)]
pub struct LiouvillianMatrix {
    pub matrix: DMatrix<C64>,
    pub time: f64,
}

impl LiouvillianMatrix {
    /// Largest component of `vec(𝟙)†·ℒ`; zero for a trace-preserving generator.
    pub fn trace_defect(&self) -> f64 {
        let n2 = self.matrix.nrows();
        let n = (n2 as f64).sqrt().round() as usize;
        let id = vectorized_identity(n);
        (id.adjoint() * &self.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Unit-coefficient superoperator pieces of a model:
/// `ℒ(t) = J(t)·coherent + Σ_k γ_k(t)·dissipative[k]`.
#[derive(Clone, Debug)]
pub struct LiouvillianParts {
    pub coherent: DMatrix<C64>,
    pub dissipative: Vec<DMatrix<C64>>,
    /// Sign of the quantum-jump term; `1.0` except in mutation fixtures.
    jump_sign: f64,
}

impl LiouvillianParts {
    pub fn new(model: &LindbladModel) -> Self {
        Self::with_jump_sign(model, 1.0)
    }

    /// Builds the pieces with the `F*⊗F` term scaled by `jump_sign`.
    /// Anything other than `1.0` breaks trace preservation; used to check
    /// that the validation suite catches a wrong jump-term sign.
    #[doc(hidden)]
    pub fn with_jump_sign(model: &LindbladModel, jump_sign: f64) -> Self {
        let n = model.dim();
        let id = DMatrix::<C64>::identity(n, n);
        let h = model.hamiltonian_op.as_matrix();
        let coherent = (kron(&id, h) - kron(&h.transpose(), &id)) * (-I);
        let dissipative = model
            .dissipators
            .iter()
            .map(|d| {
                let f = d.op.as_matrix();
                let ff = f.adjoint() * f;
                let jump = kron(&f.map(|z| z.conj()), f) * C64::new(2.0 * jump_sign, 0.0);
                (kron(&id, &ff) + kron(&ff.transpose(), &id) - jump) * C64::new(-0.5, 0.0)
            })
            .collect();
        Self { coherent, dissipative, jump_sign }
    }

    pub fn jump_sign(&self) -> f64 {
        self.jump_sign
    }

    pub fn combine(&self, drive: f64, strengths: impl IntoIterator<Item = f64>) -> DMatrix<C64> {
        let mut out = self.coherent.map(|z| z * drive);
        for (d, g) in self.dissipative.iter().zip(strengths) {
            if g != 0.0 {
                out.zip_apply(d, |o, x| *o += x * g);
            }
        }
        out
    }

    pub fn at(&self, model: &LindbladModel, t: f64) -> DMatrix<C64> {
        self.combine(
            model.hamiltonian_schedule.value(t),
            model.dissipators.iter().map(|d| d.schedule.value(t)),
        )
    }
}

/// Orthonormal Hermitian operator basis under the Hilbert–Schmidt product:
/// for each pair `j < k` the symmetric and antisymmetric off-diagonal
/// elements, then the `N − 1` traceless diagonal ones, then `𝟙/√N` last.
/// For a qubit this is `(σ_x, σ_y, σ_z, 𝟙)/√2`.
pub fn hermitian_basis(n: usize) -> Vec<DMatrix<C64>> {
    let e = |j: usize, k: usize| {
        let mut m = DMatrix::<C64>::zeros(n, n);
        m[(j, k)] = C64::new(1.0, 0.0);
        m
    };
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in j + 1..n {
            out.push((e(j, k) + e(k, j)) * C64::new(r2, 0.0));
            out.push((e(k, j) - e(j, k)) * C64::new(0.0, r2));
        }
    }
    for l in 1..n {
        let norm = ((l * (l + 1)) as f64).sqrt();
        let mut d = DMatrix::<C64>::zeros(n, n);
        for j in 0..l {
            d[(j, j)] = C64::new(1.0 / norm, 0.0);
        }
        d[(l, l)] = C64::new(-(l as f64) / norm, 0.0);
        out.push(d);
    }
    out.push(DMatrix::<C64>::identity(n, n) * C64::new(1.0 / (n as f64).sqrt(), 0.0));
    out
}

/// Unitary whose columns are `vec(B_k)` for the [`hermitian_basis`].
pub fn hermitian_basis_matrix(n: usize) -> DMatrix<C64> {
    let cols: Vec<DVector<C64>> =
        hermitian_basis(n).iter().map(|b| DVector::from_column_slice(b.as_slice())).collect();
    DMatrix::from_columns(&cols)
}

/// The superoperator pieces in the [`hermitian_basis`], where they are real.
///
/// The last row vanishes (trace preservation), so the pieces are block upper
/// triangular with an invariant traceless block. Keeping the identity
/// component last lets pivoted elimination inside the exponential preserve
/// that structure exactly.
/// Entries below `1e-13` of a piece's largest entry are rounding residue of
/// the basis change and are set to exactly zero, so block structure such as
/// the decoupled `s_x` component of a `σ_x`-driven qubit survives
/// exponentiation exactly.
#[derive(Clone, Debug)]
pub struct RealLiouvillianParts {
    pub coherent: DMatrix<f64>,
    pub dissipative: Vec<DMatrix<f64>>,
}

impl RealLiouvillianParts {
    pub fn new(parts: &LiouvillianParts) -> Self {
        let n = (parts.coherent.nrows() as f64).sqrt().round() as usize;
        let u = hermitian_basis_matrix(n);
        let ud = u.adjoint();
        let to_real = |m: &DMatrix<C64>| {
            let r = &ud * m * &u;
            let max = r.iter().map(|z| z.norm()).fold(0.0, f64::max);
            r.map(|z| if z.norm() <= 1e-13 * max { 0.0 } else { z.re })
        };
        Self {
            coherent: to_real(&parts.coherent),
            dissipative: parts.dissipative.iter().map(to_real).collect(),
        }
    }

    pub fn combine(&self, drive: f64, strengths: impl IntoIterator<Item = f64>) -> DMatrix<f64> {
        let mut out = &self.coherent * drive;
        for (d, g) in self.dissipative.iter().zip(strengths) {
            if g != 0.0 {
                out.zip_apply(d, |o, x| *o += x * g);
            }
        }
        out
    }

    pub fn at(&self, model: &LindbladModel, t: f64) -> DMatrix<f64> {
        self.combine(
            model.hamiltonian_schedule.value(t),
            model.dissipators.iter().map(|d| d.schedule.value(t)),
        )
    }
}

/// `ℒ(t) = -i[𝟙⊗H − Hᵀ⊗𝟙] − Σ_k (γ_k/2)[𝟙⊗F†F + (F†F)ᵀ⊗𝟙 − 2F*⊗F]`.
pub fn assemble_liouvillian(model: &LindbladModel, t: f64) -> Result<LiouvillianMatrix> {
    model.validate()?;
    let parts = LiouvillianParts::new(model);
    Ok(LiouvillianMatrix { matrix: parts.at(model, t), time: t })
}

/// No-jump generator `H_nH = H_S − i·Σ_k (γ_k/2)·F_k†F_k`.
pub fn postselected_hamiltonian(model: &LindbladModel, t: f64) -> ComplexMatrix {
    let mut h = model.hamiltonian_op.as_matrix().map(|z| z * model.hamiltonian_schedule.value(t));
    for d in &model.dissipators {
        let f = d.op.as_matrix();
        let g = d.schedule.value(t);
        h -= (f.adjoint() * f) * (I * (0.5 * g));
    }
    ComplexMatrix::from_matrix(h).expect("square by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{pauli, DissipatorKind, FamilyPoint, ModelFamily, PauliName};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn vectorize_examples() {
        let half_id = ComplexMatrix::identity(2).scale(0.5);
        let v = vectorize(&half_id);
        assert_eq!(v.amplitudes().as_slice(), &[c(0.5), c(0.0), c(0.0), c(0.5)]);
        let v = vectorize(&pauli(PauliName::X));
        assert_eq!(v.amplitudes().as_slice(), &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        // (m, n) = (0, 1) goes to index 0 + 2·1
        let m = pauli(PauliName::Minus);
        assert_eq!(vectorize(&m).amplitudes()[2], c(1.0));
        assert_eq!(devectorize(&vectorize(&m)), m);
    }

    #[test]
    fn static_coherent_spectrum() {
        let m = FamilyPoint::new(ModelFamily::Static, DissipatorKind::Minus, 0.0, 1.0).build();
        let l = assemble_liouvillian(&m, 0.0).unwrap();
        let anti = &l.matrix + l.matrix.adjoint();
        assert!(anti.iter().all(|z| z.norm() < 1e-15));
        let mut eig = crate::propagator::eigen_decompose(&l.matrix).unwrap().values;
        eig.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((eig[0] - C64::new(0.0, -2.0)).norm() < 1e-12);
        assert!(eig[1].norm() < 1e-12 && eig[2].norm() < 1e-12);
        assert!((eig[3] - C64::new(0.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn hermitian_basis_is_orthonormal() {
        for n in 1..5 {
            let u = hermitian_basis_matrix(n);
            let g = u.adjoint() * &u;
            assert!((g - DMatrix::<C64>::identity(n * n, n * n)).iter().all(|z| z.norm() < 1e-15));
            for b in hermitian_basis(n) {
                assert!((b.adjoint() - &b).iter().all(|z| z.norm() == 0.0));
            }
        }
        let b = hermitian_basis(2);
        let r2 = std::f64::consts::FRAC_1_SQRT_2;
        for (k, p) in [PauliName::X, PauliName::Y, PauliName::Z].into_iter().enumerate() {
            let expected = pauli(p).scale(r2).into_matrix();
            let d = (&b[k] - &expected).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(d < 1e-15, "{k}: {d}");
        }
    }

    #[test]
    fn real_form_matches_bloch_structure() {
        // −i[H, ·] and the dissipator are real in the Pauli basis; the 𝟙 row vanishes
        let m = FamilyPoint::new(ModelFamily::Static, DissipatorKind::Minus, 0.8, 1.0).build();
        let parts = LiouvillianParts::new(&m);
        let real = RealLiouvillianParts::new(&parts);
        let l = real.at(&m, 0.0);
        assert!(l.row(3).iter().all(|x| *x == 0.0));
        // s_x decouples from (s_y, s_z) exactly
        assert_eq!([l[(0, 1)], l[(0, 2)], l[(1, 0)], l[(2, 0)]], [0.0; 4]);
        assert!((l[(0, 0)] + 0.4).abs() < 1e-15);
        assert!((l[(2, 2)] + 0.8).abs() < 1e-15);
        assert!((l[(1, 2)] - 2.0).abs() < 1e-15 && (l[(2, 1)] + 2.0).abs() < 1e-15);
        // 𝟙/√2 feeds σ_z/√2 at rate γ₋
        assert!((l[(2, 3)] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn trace_preservation() {
        for fam in ModelFamily::MODULATED {
            for d in DissipatorKind::ALL {
                let m = FamilyPoint::new(fam, d, 3.7, 1.3).build();
                for k in 0..7 {
                    let l = assemble_liouvillian(&m, 0.31 * k as f64).unwrap();
                    assert!(l.trace_defect() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn wrong_jump_sign_breaks_trace() {
        let m = FamilyPoint::new(ModelFamily::Static, DissipatorKind::Minus, 1.0, 1.0).build();
        let parts = LiouvillianParts::with_jump_sign(&m, -1.0);
        let l = LiouvillianMatrix { matrix: parts.at(&m, 0.0), time: 0.0 };
        assert!(l.trace_defect() > 0.5);
    }

    #[test]
    fn postselected_static_ep() {
        let m = FamilyPoint::new(ModelFamily::Static, DissipatorKind::Minus, 4.0, 1.0).build();
        let h = postselected_hamiltonian(&m, 0.0).into_matrix();
        // 2×2 closed form: λ = (tr ± √(tr² − 4 det)) / 2
        let tr = h[(0, 0)] + h[(1, 1)];
        let det = h[(0, 0)] * h[(1, 1)] - h[(0, 1)] * h[(1, 0)];
        let disc = tr * tr - det * 4.0;
        assert!(disc.norm() < 1e-14);
        assert!((tr / 2.0 - C64::new(0.0, -1.0)).norm() < 1e-14);

        let m0 = FamilyPoint::new(ModelFamily::Static, DissipatorKind::Minus, 0.0, 1.0).build();
        let h0 = postselected_hamiltonian(&m0, 0.0);
        assert!(h0.is_hermitian(0.0));
    }

    #[test]
    fn postselected_phase_noise_has_no_ep() {
        for g in [0.5, 2.0, 7.0] {
            let m = FamilyPoint::new(ModelFamily::Static, DissipatorKind::Z, g, 1.0).build();
            let h = postselected_hamiltonian(&m, 0.0).into_matrix();
            let shift = h - pauli(PauliName::X).scale(-1.0).into_matrix();
            assert!((shift[(0, 0)] - C64::new(0.0, -g / 2.0)).norm() < 1e-15);
            assert!((shift[(1, 1)] - C64::new(0.0, -g / 2.0)).norm() < 1e-15);
            assert!(shift[(0, 1)].norm() == 0.0 && shift[(1, 0)].norm() == 0.0);
        }
    }
}
