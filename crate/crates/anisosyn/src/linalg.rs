//! Dense linear-algebra helpers shared by the solvers.
//!
//! Everything here works on `nalgebra` dynamic matrices. The two nontrivial
//! pieces are an eigenvalue-ordered complex Schur decomposition (used to pick
//! stable invariant subspaces of symplectic matrices) and a Householder
//! orthonormal-complement routine (used for projection-lemma null bases).

use nalgebra::{Complex, DMatrix, DVector};

pub type CMatrix = DMatrix<Complex<f64>>;

/// (M + Mᵀ)/2.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// ‖M − Mᵀ‖_max, the symmetry defect.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

/// Largest eigenvalue modulus; 0 for the 0×0 matrix.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    a.complex_eigenvalues().iter().map(|l| l.norm()).fold(0.0, f64::max)
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = symmetrize(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

pub fn min_symmetric_eig(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    symmetric_eigenvalues(m)[0]
}

pub fn max_symmetric_eig(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    *symmetric_eigenvalues(m).last().unwrap()
}

/// Largest singular value; 0 for empty matrices.
pub fn sigma_max(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values()[0]
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| Complex::new(v, 0.0))
}

/// Complex Givens rotation G = [[c, s], [-s̄, c]] with c real ≥ 0 such that
/// G·[f; g] has zero second component.
fn givens(f: Complex<f64>, g: Complex<f64>) -> (f64, Complex<f64>) {
    if g.norm() == 0.0 {
        return (1.0, Complex::new(0.0, 0.0));
    }
    if f.norm() == 0.0 {
        return (0.0, g.conj() / g.norm());
    }
    let d = (f.norm_sqr() + g.norm_sqr()).sqrt();
    let c = f.norm() / d;
    let s = (f / f.norm()) * g.conj() / d;
    (c, s)
}

/// Swap the eigenvalues at positions k and k+1 of a complex upper-triangular
/// Schur pair (T, Q) by a unitary similarity, in place.
fn swap_adjacent(t: &mut CMatrix, q: &mut CMatrix, k: usize) {
    let n = t.nrows();
    let t11 = t[(k, k)];
    let t12 = t[(k, k + 1)];
    let t22 = t[(k + 1, k + 1)];
    if (t22 - t11).norm() <= f64::EPSILON * (t11.norm() + t22.norm()) {
        return; // numerically identical eigenvalues; order is immaterial
    }
    let (c, s) = givens(t12, t22 - t11);
    // rows k, k+1 of T from column k on
    for j in k..n {
        let x = t[(k, j)];
        let y = t[(k + 1, j)];
        t[(k, j)] = c * x + s * y;
        t[(k + 1, j)] = c * y - s.conj() * x;
    }
    // columns k, k+1 of T down to row k+1
    for i in 0..k + 2 {
        let x = t[(i, k)];
        let y = t[(i, k + 1)];
        t[(i, k)] = c * x + s.conj() * y;
        t[(i, k + 1)] = c * y - s * x;
    }
    // accumulate into Q
    for i in 0..n {
        let x = q[(i, k)];
        let y = q[(i, k + 1)];
        q[(i, k)] = c * x + s.conj() * y;
        q[(i, k + 1)] = c * y - s * x;
    }
    t[(k, k)] = t22;
    t[(k + 1, k + 1)] = t11;
    t[(k + 1, k)] = Complex::new(0.0, 0.0);
}

pub struct OrderedSchur {
    /// Unitary factor; the first `n_selected` columns span the invariant
    /// subspace of the selected eigenvalues.
    pub q: CMatrix,
    /// Upper-triangular factor with the selected eigenvalues leading.
    pub t: CMatrix,
    pub n_selected: usize,
}

/// Complex Schur form of a real matrix with the eigenvalues satisfying
/// `select` moved to the leading diagonal positions.
pub fn ordered_complex_schur<F>(a: &DMatrix<f64>, select: F) -> Option<OrderedSchur>
where
    F: Fn(Complex<f64>) -> bool,
{
    let n = a.nrows();
    let ac = to_complex(a);
    let schur = ac.try_schur(1e-14, 200 * n.max(1))?;
    let (mut q, mut t) = schur.unpack();
    let mut target = 0;
    for i in 0..n {
        if select(t[(i, i)]) {
            let mut k = i;
            while k > target {
                swap_adjacent(&mut t, &mut q, k - 1);
                k -= 1;
            }
            target += 1;
        }
    }
    Some(OrderedSchur { q, t, n_selected: target })
}

/// Orthonormal basis of the null space of `m` (d columns in, r columns out),
/// computed by column-pivoted Householder QR of mᵀ. Columns are sign-fixed so
/// the first entry of significant magnitude is positive. Returns a d×0 matrix
/// when the null space is trivial.
pub fn null_space_basis(m: &DMatrix<f64>) -> DMatrix<f64> {
    let d = m.ncols();
    if m.nrows() == 0 || d == 0 {
        return DMatrix::identity(d, d);
    }
    let mut r = m.transpose(); // d×k
    let k = r.ncols();
    let mut q = DMatrix::<f64>::identity(d, d);
    let steps = d.min(k);
    let norm_scale = r.amax().max(1e-300);
    let mut rank = 0;
    for step in 0..steps {
        // pivot: bring the remaining column of largest norm to position `step`
        let mut best = step;
        let mut best_norm = 0.0;
        for j in step..k {
            let nj = r.view((step, j), (d - step, 1)).norm();
            if nj > best_norm {
                best_norm = nj;
                best = j;
            }
        }
        if best_norm <= 1e-13 * norm_scale {
            break;
        }
        r.swap_columns(step, best);
        // Householder reflector zeroing r[step+1.., step]
        let mut v = DVector::<f64>::zeros(d - step);
        for i in 0..d - step {
            v[i] = r[(step + i, step)];
        }
        let alpha = -v[0].signum() * v.norm();
        v[0] -= alpha;
        let vn = v.norm();
        if vn > 0.0 {
            v /= vn;
            // r[step.., step..] ← H r, with H = I − 2vvᵀ
            for j in step..k {
                let mut dot = 0.0;
                for i in 0..d - step {
                    dot += v[i] * r[(step + i, j)];
                }
                for i in 0..d - step {
                    r[(step + i, j)] -= 2.0 * dot * v[i];
                }
            }
            // q ← q H (embedded)
            for row in 0..d {
                let mut dot = 0.0;
                for i in 0..d - step {
                    dot += q[(row, step + i)] * v[i];
                }
                for i in 0..d - step {
                    q[(row, step + i)] -= 2.0 * dot * v[i];
                }
            }
        }
        rank += 1;
    }
    let mut basis = q.columns(rank, d - rank).into_owned();
    // sign convention: first entry of significant magnitude positive
    for j in 0..basis.ncols() {
        let col = basis.column(j);
        let lead = col.iter().find(|v| v.abs() > 1e-9);
        if let Some(&v) = lead {
            if v < 0.0 {
                for i in 0..basis.nrows() {
                    basis[(i, j)] = -basis[(i, j)];
                }
            }
        }
    }
    basis
}

/// Horizontal concatenation.
pub fn hstack(parts: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = parts[0].nrows();
    let cols = parts.iter().map(|p| p.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        assert_eq!(p.nrows(), rows, "hstack row mismatch");
        out.view_mut((0, at), (rows, p.ncols())).copy_from(*p);
        at += p.ncols();
    }
    out
}

/// Vertical concatenation.
pub fn vstack(parts: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let cols = parts[0].ncols();
    let rows = parts.iter().map(|p| p.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        assert_eq!(p.ncols(), cols, "vstack column mismatch");
        out.view_mut((at, 0), (p.nrows(), cols)).copy_from(*p);
        at += p.nrows();
    }
    out
}

/// Selector with an identity block: maps R^size into rows
/// offset..offset+size of R^total.
pub fn selector(total: usize, offset: usize, size: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(total, size);
    for i in 0..size {
        out[(offset + i, i)] = 1.0;
    }
    out
}

/// Frequency response F(z) = C (zI − A)⁻¹ B + D at z on the unit circle.
pub fn transfer_at(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    z: Complex<f64>,
) -> CMatrix {
    let n = a.nrows();
    if n == 0 {
        return to_complex(d);
    }
    let zi_a = CMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { z } else { Complex::new(0.0, 0.0) };
        diag - Complex::new(a[(i, j)], 0.0)
    });
    let rhs = to_complex(b);
    let sol = zi_a.lu().solve(&rhs).expect("zI - A singular on the unit circle");
    to_complex(c) * sol + to_complex(d)
}

/// Largest singular value of a complex matrix.
pub fn sigma_max_complex(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values[0]
}
