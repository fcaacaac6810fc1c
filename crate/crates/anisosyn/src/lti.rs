//! Discrete-time LTI realizations, stability tests, generalized Lyapunov and
//! Riccati solvers, closed-loop assembly, and zero-order-hold discretization.
//!
//! The Riccati solver handles the indefinite-weight equation
//!
//! ```txt
//! X = AᵀXA + (AᵀXB + CᵀD) ((1/q)I − BᵀXB − DᵀD)⁻¹ (AᵀXB + CᵀD)ᵀ + CᵀC
//! ```
//!
//! by extracting the stable invariant subspace of the associated symplectic
//! matrix, falling back to a fixed-point sweep from X = 0 when the symplectic
//! matrix cannot be formed (singular shifted A).

use crate::error::{Error, Result};
use crate::linalg::{
    asymmetry, min_symmetric_eig, ordered_complex_schur, spectral_radius, symmetrize,
};
use crate::Matrix;

/// Margin applied to strict spectral-radius inequalities.
pub const STABILITY_MARGIN: f64 = 1e-9;
/// Relative residual tolerance for the Lyapunov solver.
pub const TOL_LYAP: f64 = 1e-10;
/// Relative residual tolerance for the Riccati solver.
pub const TOL_RIC: f64 = 1e-8;

/// Discrete-time state-space realization x⁺ = Ax + Bu, y = Cx + Du.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub d: Matrix,
}

impl StateSpace {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let m = b.ncols();
        let p = c.nrows();
        if b.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "B must have {} rows, got {}",
                n,
                b.nrows()
            )));
        }
        if c.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "C must have {} columns, got {}",
                n,
                c.ncols()
            )));
        }
        if d.nrows() != p || d.ncols() != m {
            return Err(Error::DimensionMismatch(format!(
                "D must be {}x{}, got {}x{}",
                p,
                m,
                d.nrows(),
                d.ncols()
            )));
        }
        if m == 0 || p == 0 {
            return Err(Error::DimensionMismatch(
                "system needs at least one input and one output".into(),
            ));
        }
        Ok(Self { a, b, c, d })
    }

    /// State dimension n.
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension m.
    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    /// Output dimension p.
    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }
}

/// A state-space realization interpreted in continuous time.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousStateSpace {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub d: Matrix,
}

impl ContinuousStateSpace {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix) -> Result<Self> {
        let ss = StateSpace::new(a, b, c, d)?;
        Ok(Self { a: ss.a, b: ss.b, c: ss.c, d: ss.d })
    }
}

/// Generalized plant for static output-feedback design:
///
/// ```txt
/// x⁺ = A x + B1 w + B2 u,   z = C1 x + D12 u + D11 w,   y = C2 x
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    pub a: Matrix,
    pub b1: Matrix,
    pub b2: Matrix,
    pub c1: Matrix,
    pub c2: Matrix,
    pub d11: Matrix,
    pub d12: Matrix,
}

impl Plant {
    pub fn new(
        a: Matrix,
        b1: Matrix,
        b2: Matrix,
        c1: Matrix,
        c2: Matrix,
        d11: Matrix,
        d12: Matrix,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch("A must be square".into()));
        }
        for (name, m, rows, cols) in [
            ("B1", &b1, n, b1.ncols()),
            ("B2", &b2, n, b2.ncols()),
            ("C1", &c1, c1.nrows(), n),
            ("C2", &c2, c2.nrows(), n),
            ("D11", &d11, c1.nrows(), b1.ncols()),
            ("D12", &d12, c1.nrows(), b2.ncols()),
        ] {
            if m.nrows() != rows || m.ncols() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "{} must be {}x{}, got {}x{}",
                    name,
                    rows,
                    cols,
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        if b1.ncols() == 0 || b2.ncols() == 0 || c1.nrows() == 0 || c2.nrows() == 0 {
            return Err(Error::DimensionMismatch(
                "plant channels must all be nonempty".into(),
            ));
        }
        Ok(Self { a, b1, b2, c1, c2, d11, d12 })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// Disturbance input dimension m_w.
    pub fn disturbance_inputs(&self) -> usize {
        self.b1.ncols()
    }

    /// Control input dimension m_u.
    pub fn control_inputs(&self) -> usize {
        self.b2.ncols()
    }

    /// Performance output dimension p_z.
    pub fn performance_outputs(&self) -> usize {
        self.c1.nrows()
    }

    /// Measurement dimension p_y.
    pub fn measurements(&self) -> usize {
        self.c2.nrows()
    }
}

/// Stabilizing solution of the anisotropic Riccati equation together with its
/// positivity certificate Ψ_q = (1/q)I − BᵀXB − DᵀD.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub x: Matrix,
    pub psi_q: Matrix,
    pub stabilizing: bool,
    pub closed_loop_spectral_radius: f64,
}

/// True iff the spectral radius of A is below 1 − [`STABILITY_MARGIN`].
pub fn is_stable(sys: &StateSpace) -> bool {
    spectral_radius(&sys.a) < 1.0 - STABILITY_MARGIN
}

/// Solve X = AᵀXA + Q for symmetric PSD Q and Schur-stable A.
pub fn solve_dlyap(a: &Matrix, q: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    if a.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "A and Q must both be {}x{}",
            n, n
        )));
    }
    let defect = asymmetry(q);
    if defect > 1e-10 * (1.0 + q.amax()) {
        return Err(Error::NonSymmetric { defect });
    }
    let rho = spectral_radius(a);
    if rho >= 1.0 - STABILITY_MARGIN {
        return Err(Error::UnstableMatrix { rho });
    }
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    // vec(X) − (Aᵀ ⊗ Aᵀ) vec(X) = vec(Q)
    let at = a.transpose();
    let lhs = Matrix::identity(n * n, n * n) - at.kronecker(&at);
    let rhs = nalgebra::DVector::from_column_slice(symmetrize(q).as_slice());
    let sol = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NumericalFailure("Lyapunov operator is singular".into()))?;
    let x = symmetrize(&Matrix::from_column_slice(n, n, sol.as_slice()));
    let residual = (&x - at * &x * a - q).amax();
    if residual > TOL_LYAP * (1.0 + q.amax()).max(x.amax()) {
        return Err(Error::NumericalFailure(format!(
            "Lyapunov residual {residual:e} out of tolerance"
        )));
    }
    Ok(x)
}

/// Which sign of R + BᵀXB certifies the solution of a generic DARE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum KernelSign {
    Positive,
    Negative,
}

/// Solution of the generic discrete Riccati equation
/// X = AᵀXA − (AᵀXB + S)(R + BᵀXB)⁻¹(AᵀXB + S)ᵀ + Q.
pub(crate) struct DareSolution {
    pub x: Matrix,
    pub closed_loop_radius: f64,
}

fn dare_rhs(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    s: &Matrix,
    x: &Matrix,
) -> Option<Matrix> {
    let axb = a.transpose() * x * b + s;
    let kernel = r + b.transpose() * x * b;
    let sol = kernel.lu().solve(&axb.transpose())?;
    Some(symmetrize(&(a.transpose() * x * a - &axb * sol + q)))
}

fn dare_validate(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    s: &Matrix,
    sign: KernelSign,
    x: &Matrix,
) -> Option<DareSolution> {
    let kernel = symmetrize(&(r + b.transpose() * x * b));
    let scale = 1.0 + kernel.amax();
    let definite = match sign {
        KernelSign::Positive => min_symmetric_eig(&kernel) > 1e-14 * scale,
        KernelSign::Negative => min_symmetric_eig(&(-&kernel)) > 1e-14 * scale,
    };
    if !definite {
        return None;
    }
    if min_symmetric_eig(x) < -1e-8 * (1.0 + x.amax()) {
        return None;
    }
    let rhs = dare_rhs(a, b, q, r, s, x)?;
    if (x - &rhs).amax() > TOL_RIC * (1.0 + x.amax()) {
        return None;
    }
    let axb = a.transpose() * x * b + s;
    let feedback = -kernel.lu().solve(&axb.transpose())?;
    let rho = spectral_radius(&(a + b * &feedback));
    if rho >= 1.0 {
        return None;
    }
    Some(DareSolution { x: x.clone(), closed_loop_radius: rho })
}

fn dare_fixed_point(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    s: &Matrix,
    sign: KernelSign,
    init: &Matrix,
) -> Option<Matrix> {
    let mut x = init.clone();
    let limit = 1e12 * (1.0 + q.amax());
    for _ in 0..200_000 {
        let kernel = symmetrize(&(r + b.transpose() * &x * b));
        let ok = match sign {
            KernelSign::Positive => min_symmetric_eig(&kernel) > 0.0,
            KernelSign::Negative => min_symmetric_eig(&(-&kernel)) > 0.0,
        };
        if !ok {
            return None;
        }
        let next = dare_rhs(a, b, q, r, s, &x)?;
        let step = (&next - &x).amax();
        let done = step <= 1e-13 * (1.0 + next.amax());
        x = next;
        if x.amax() > limit {
            return None;
        }
        if done {
            return Some(x);
        }
    }
    None
}

/// Generic DARE solver: stable invariant subspace of the symplectic matrix,
/// with a fixed-point fallback. Returns Ok(None) when no stabilizing solution
/// with the requested kernel sign exists.
pub(crate) fn solve_dare(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    s: &Matrix,
    sign: KernelSign,
    fixed_point_init: &Matrix,
) -> Result<Option<DareSolution>> {
    let n = a.nrows();
    if n == 0 {
        let kernel = r.clone();
        let ok = match sign {
            KernelSign::Positive => min_symmetric_eig(&kernel) > 0.0,
            KernelSign::Negative => min_symmetric_eig(&(-&kernel)) > 0.0,
        };
        if !ok {
            return Ok(None);
        }
        return Ok(Some(DareSolution { x: Matrix::zeros(0, 0), closed_loop_radius: 0.0 }));
    }

    // R must be invertible to form the symplectic matrix at all.
    let r_svd = r.clone().svd(false, false);
    let r_sigma = &r_svd.singular_values;
    let r_invertible = r_sigma[0] > 0.0 && r_sigma[r_sigma.len() - 1] > 1e-13 * r_sigma[0];

    if r_invertible {
        let r_lu = r.clone().lu();
        let r_inv_st = r_lu.solve(&s.transpose()).expect("invertible R");
        let r_inv_bt = r_lu.solve(&b.transpose()).expect("invertible R");
        let a_sh = a - b * &r_inv_st;
        let g = symmetrize(&(b * &r_inv_bt));
        let q_sh = symmetrize(&(q - s * &r_inv_st));

        let a_svd = a_sh.clone().svd(false, false);
        let sv = &a_svd.singular_values;
        let a_invertible = sv[0] > 0.0 && sv[sv.len() - 1] > 1e-12 * sv[0];
        if a_invertible {
            let a_inv_t = a_sh
                .transpose()
                .lu()
                .solve(&Matrix::identity(n, n))
                .expect("invertible shifted A");
            let mut z = Matrix::zeros(2 * n, 2 * n);
            z.view_mut((0, 0), (n, n)).copy_from(&(&a_sh + &g * &a_inv_t * &q_sh));
            z.view_mut((0, n), (n, n)).copy_from(&(-&g * &a_inv_t));
            z.view_mut((n, 0), (n, n)).copy_from(&(-&a_inv_t * &q_sh));
            z.view_mut((n, n), (n, n)).copy_from(&a_inv_t);

            if let Some(os) = ordered_complex_schur(&z, |l| l.norm() < 1.0) {
                let on_circle = (0..2 * n).any(|i| (os.t[(i, i)].norm() - 1.0).abs() <= 1e-9);
                if on_circle || os.n_selected != n {
                    // eigenvalues pinned to the unit circle: no stabilizing solution
                    return Ok(None);
                }
                let u1 = os.q.view((0, 0), (n, n)).into_owned();
                let u2 = os.q.view((n, 0), (n, n)).into_owned();
                let u1_svd = u1.clone().svd(false, false);
                let usv = &u1_svd.singular_values;
                if usv[usv.len() - 1] > 1e-13 * usv[0].max(1.0) {
                    if let Some(xc) = u1.transpose().lu().solve(&u2.transpose()) {
                        let xc = xc.transpose();
                        let imag = xc.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
                        let x = symmetrize(&xc.map(|v| v.re));
                        if imag <= 1e-6 * (1.0 + x.amax()) {
                            if let Some(sol) = dare_validate(a, b, q, r, s, sign, &x) {
                                return Ok(Some(sol));
                            }
                        }
                    }
                }
            }
        }
    }

    // Fallback sweep; also covers the singular shifted-A case.
    match dare_fixed_point(a, b, q, r, s, sign, fixed_point_init) {
        Some(x) => Ok(dare_validate(a, b, q, r, s, sign, &x)),
        None => Ok(None),
    }
}

/// Solve the anisotropic Riccati equation of a stable system for a given
/// q > 0, returning the stabilizing solution and the Ψ_q certificate, or
/// `stabilizing = false` when none exists.
pub fn solve_dare_aniso(sys: &StateSpace, q: f64) -> Result<RiccatiSolution> {
    if q <= 0.0 {
        return Err(Error::InvalidArgs(format!("q must be positive, got {q}")));
    }
    let rho = spectral_radius(&sys.a);
    if sys.order() > 0 && rho >= 1.0 - STABILITY_MARGIN {
        return Err(Error::UnstableSystem { rho });
    }
    let m = sys.inputs();
    let psi0 = Matrix::identity(m, m) / q - sys.d.transpose() * &sys.d;
    let not_stabilizing = |psi: Matrix| RiccatiSolution {
        x: Matrix::zeros(sys.order(), sys.order()),
        psi_q: psi,
        stabilizing: false,
        closed_loop_spectral_radius: f64::INFINITY,
    };
    // X ⪰ 0 forces Ψ_q(X) ⪯ Ψ_q(0); an indefinite Ψ_q(0) settles it already.
    if min_symmetric_eig(&psi0) <= 0.0 {
        return Ok(not_stabilizing(psi0));
    }
    let q_cost = symmetrize(&(sys.c.transpose() * &sys.c));
    let r = sys.d.transpose() * &sys.d - Matrix::identity(m, m) / q;
    let s = sys.c.transpose() * &sys.d;
    let init = Matrix::zeros(sys.order(), sys.order());
    match solve_dare(&sys.a, &sys.b, &q_cost, &r, &s, KernelSign::Negative, &init)? {
        Some(sol) => {
            let psi_q = symmetrize(
                &(Matrix::identity(m, m) / q
                    - sys.b.transpose() * &sol.x * &sys.b
                    - sys.d.transpose() * &sys.d),
            );
            Ok(RiccatiSolution {
                x: sol.x,
                psi_q,
                stabilizing: true,
                closed_loop_spectral_radius: sol.closed_loop_radius,
            })
        }
        None => Ok(not_stabilizing(psi0)),
    }
}

/// Close the loop u = K y around a plant: (A + B2 K C2, B1, C1 + D12 K C2, D11).
pub fn close_loop(plant: &Plant, k: &Matrix) -> Result<StateSpace> {
    if k.nrows() != plant.control_inputs() || k.ncols() != plant.measurements() {
        return Err(Error::DimensionMismatch(format!(
            "gain must be {}x{}, got {}x{}",
            plant.control_inputs(),
            plant.measurements(),
            k.nrows(),
            k.ncols()
        )));
    }
    StateSpace::new(
        &plant.a + &plant.b2 * k * &plant.c2,
        plant.b1.clone(),
        &plant.c1 + &plant.d12 * k * &plant.c2,
        plant.d11.clone(),
    )
}

/// Zero-order-hold discretization at sample time `ts` seconds:
/// A_d = exp(A·Ts), B_d = ∫₀^Ts exp(Aτ)dτ · B, C and D unchanged.
pub fn discretize_zoh(sys: &ContinuousStateSpace, ts: f64) -> StateSpace {
    assert!(ts > 0.0, "sample time must be positive");
    let n = sys.a.nrows();
    let m = sys.b.ncols();
    let mut block = Matrix::zeros(n + m, n + m);
    block.view_mut((0, 0), (n, n)).copy_from(&sys.a);
    block.view_mut((0, n), (n, m)).copy_from(&sys.b);
    let e = (block * ts).exp();
    let a_d = e.view((0, 0), (n, n)).into_owned();
    let b_d = e.view((0, n), (n, m)).into_owned();
    StateSpace { a: a_d, b: b_d, c: sys.c.clone(), d: sys.d.clone() }
}
