//! System norms: H2, H∞, mean anisotropy, and the a-anisotropic norm with
//! its bound certificate and interpolation estimate.
//!
//! The a-anisotropic norm is evaluated by scanning the scalar parameter q of
//! the Riccati-based bound
//!
//! ```txt
//! γ²(q) = 1/q − e^(−2a/m) · det(Ψ_q)^(1/m),   Ψ_q = (1/q)I − BᵀXB − DᵀD
//! ```
//!
//! over the admissible interval and taking the minimum; the same scan decides
//! feasibility of a given (a, γ) pair. With M = BᵀXB + DᵀD the bound is
//! evaluated as −expm1(−2a/m + Σᵢ ln1p(−q·μᵢ(M))/m)/q, which stays accurate
//! for q many orders of magnitude below 1/‖F‖∞².

use crate::error::{Error, Result};
use crate::linalg::{
    min_symmetric_eig, spectral_radius, symmetric_eigenvalues, symmetrize, transfer_at,
    sigma_max, sigma_max_complex,
};
use crate::lti::{
    solve_dare, solve_dare_aniso, solve_dlyap, KernelSign, RiccatiSolution, StateSpace,
    STABILITY_MARGIN,
};
use crate::Matrix;
use nalgebra::Complex;

/// Mean anisotropy of a colouring filter together with the covariances that
/// define it.
#[derive(Debug, Clone)]
pub struct AnisotropyResult {
    /// Mean anisotropy in nats.
    pub mean_anisotropy: f64,
    /// E[w(0)w(0)ᵀ], the stationary output covariance.
    pub output_covariance: Matrix,
    /// E[w̃(0)w̃(0)ᵀ], the one-step prediction error covariance.
    pub prediction_error_covariance: Matrix,
}

/// Certificate for an a-anisotropic norm bound |||F|||_a ≤ γ.
#[derive(Debug, Clone)]
pub struct AnisoNormCertificate {
    pub feasible: bool,
    /// Scalar parameter at which the certificate (or the best attempt) holds.
    pub q: f64,
    /// The bound that was checked.
    pub gamma: f64,
    /// Riccati solution at `q`.
    pub x: RiccatiSolution,
    /// Slack of the determinant condition, e^(−2a) − det((1/q − γ²)Ψ_q⁻¹).
    pub det_margin: f64,
}

fn require_stable(sys: &StateSpace) -> Result<()> {
    let rho = spectral_radius(&sys.a);
    if sys.order() > 0 && rho >= 1.0 - STABILITY_MARGIN {
        return Err(Error::UnstableSystem { rho });
    }
    Ok(())
}

/// H2 norm √(Tr(BᵀXB + DᵀD)) with X the observability Gramian.
pub fn h2_norm(sys: &StateSpace) -> Result<f64> {
    require_stable(sys)?;
    let q = symmetrize(&(sys.c.transpose() * &sys.c));
    let x = solve_dlyap(&sys.a, &q)?;
    let g = sys.b.transpose() * x * &sys.b + sys.d.transpose() * &sys.d;
    Ok(g.trace().max(0.0).sqrt())
}

/// Largest singular value of the frequency response over a [0, π] grid.
fn frequency_grid_max(sys: &StateSpace, points: usize) -> f64 {
    let mut peak = 0.0f64;
    for k in 0..points {
        let theta = std::f64::consts::PI * k as f64 / (points - 1) as f64;
        let z = Complex::new(theta.cos(), theta.sin());
        let f = transfer_at(&sys.a, &sys.b, &sys.c, &sys.d, z);
        peak = peak.max(sigma_max_complex(&f));
    }
    peak
}

/// H∞ norm by bisection on the Riccati existence test, bracketed from a
/// frequency-grid lower bound.
pub fn hinf_norm(sys: &StateSpace, tol: f64) -> Result<f64> {
    if tol <= 0.0 {
        return Err(Error::InvalidArgs(format!("tolerance must be positive, got {tol}")));
    }
    require_stable(sys)?;
    if sys.order() == 0 {
        return Ok(sigma_max(&sys.d));
    }
    // enough points that a nonzero transfer function cannot vanish on all of them
    let points = 512.max(2 * sys.order() + 2);
    let mut lower = frequency_grid_max(sys, points);
    if lower == 0.0 {
        return Ok(0.0);
    }
    let feasible = |gamma: f64| -> Result<bool> {
        Ok(solve_dare_aniso(sys, 1.0 / (gamma * gamma))?.stabilizing)
    };
    let mut upper = 2.0 * lower;
    let mut grow = 0;
    while !feasible(upper)? {
        upper *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(Error::NumericalFailure(
                "H-infinity bisection could not bracket the norm".into(),
            ));
        }
    }
    while upper - lower > tol * upper {
        let mid = 0.5 * (upper + lower);
        if feasible(mid)? {
            upper = mid;
        } else {
            lower = mid;
        }
    }
    Ok(0.5 * (upper + lower))
}

/// Mean anisotropy of a stable square colouring filter, from the stationary
/// output covariance and the steady-state one-step prediction error.
pub fn mean_anisotropy(filter: &StateSpace) -> Result<AnisotropyResult> {
    let m = filter.inputs();
    let p = filter.outputs();
    if p != m {
        return Err(Error::NotSquare { p, m });
    }
    require_stable(filter)?;
    let n = filter.order();
    let bbt = symmetrize(&(&filter.b * filter.b.transpose()));
    let ddt = symmetrize(&(&filter.d * filter.d.transpose()));

    // stationary state covariance P = A P Aᵀ + BBᵀ
    let p_state = solve_dlyap(&filter.a.transpose(), &bbt)?;
    let output_cov = symmetrize(&(&filter.c * &p_state * filter.c.transpose() + &ddt));
    let trace_w = output_cov.trace();
    if trace_w <= 0.0 {
        return Err(Error::SingularInnovation { min_eig: 0.0 });
    }

    // steady-state filtering Riccati in the dual direction
    let pe = if n == 0 {
        Matrix::zeros(0, 0)
    } else {
        let s = &filter.b * filter.d.transpose();
        let sol = solve_dare(
            &filter.a.transpose(),
            &filter.c.transpose(),
            &bbt,
            &ddt,
            &s,
            KernelSign::Positive,
            &bbt,
        )?;
        match sol {
            Some(s) => s.x,
            None => {
                return Err(Error::SingularInnovation {
                    min_eig: min_symmetric_eig(&ddt),
                })
            }
        }
    };
    let innovation = symmetrize(&(&filter.c * &pe * filter.c.transpose() + &ddt));

    let min_eig = min_symmetric_eig(&innovation);
    if min_eig <= 1e-12 * (1.0 + innovation.amax()) {
        return Err(Error::SingularInnovation { min_eig });
    }
    let chol = innovation
        .clone()
        .cholesky()
        .ok_or(Error::SingularInnovation { min_eig })?;
    let log_det: f64 = (0..m).map(|i| chol.l()[(i, i)].ln()).sum::<f64>() * 2.0;
    let mean = -0.5 * ((m as f64) * ((m as f64) / trace_w).ln() + log_det);

    Ok(AnisotropyResult {
        mean_anisotropy: mean.max(0.0),
        output_covariance: output_cov,
        prediction_error_covariance: innovation,
    })
}

/// Certified bound γ²(q) at one q, along with the Riccati solution behind it.
/// `None` when the Riccati equation has no stabilizing solution at this q.
fn gamma_sq_at(sys: &StateSpace, a: f64, q: f64) -> Result<Option<(f64, RiccatiSolution)>> {
    let sol = solve_dare_aniso(sys, q)?;
    if !sol.stabilizing {
        return Ok(None);
    }
    let m = sys.inputs() as f64;
    let big_m = symmetrize(
        &(sys.b.transpose() * &sol.x * &sys.b + sys.d.transpose() * &sys.d),
    );
    let mut log_det_scaled = 0.0;
    for mu in symmetric_eigenvalues(&big_m) {
        let arg = -q * mu;
        if arg <= -1.0 + 1e-14 {
            return Ok(None);
        }
        log_det_scaled += arg.ln_1p();
    }
    let gamma_sq = -f64::exp_m1(-2.0 * a / m + log_det_scaled / m) / q;
    Ok(Some((gamma_sq, sol)))
}

struct QScanBest {
    q: f64,
    gamma_sq: f64,
    ric: RiccatiSolution,
}

/// Minimize γ²(q) over q ∈ (0, q_max) by a coarse log-grid scan followed by
/// golden-section refinement of the best bracket.
fn minimize_gamma_sq(
    sys: &StateSpace,
    a: f64,
    q_max: f64,
    rel_tol: f64,
) -> Result<Option<QScanBest>> {
    const GRID: usize = 80;
    const DECADES: f64 = 10.0;
    let ln_hi = q_max.ln();
    let ln_lo = ln_hi - DECADES * std::f64::consts::LN_10;
    let mut best: Option<QScanBest> = None;
    let consider = |q: f64, point: Option<(f64, RiccatiSolution)>, best: &mut Option<QScanBest>| {
        if let Some((g, ric)) = point {
            if best.as_ref().is_none_or(|b| g < b.gamma_sq) {
                *best = Some(QScanBest { q, gamma_sq: g, ric });
            }
        }
    };

    let mut values = [f64::INFINITY; GRID];
    for (i, value) in values.iter_mut().enumerate() {
        let q = (ln_lo + (ln_hi - ln_lo) * i as f64 / (GRID - 1) as f64).exp();
        let point = gamma_sq_at(sys, a, q)?;
        if let Some((g, _)) = point {
            *value = g;
        }
        consider(q, point, &mut best);
    }
    if best.is_none() {
        return Ok(None);
    }
    let i_min = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let cell = (ln_hi - ln_lo) / (GRID - 1) as f64;
    let mut lo = ln_lo + cell * i_min.saturating_sub(1) as f64;
    let mut hi = (ln_lo + cell * (i_min + 1) as f64).min(ln_hi);

    // golden-section in log q
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let eval = |ln_q: f64, best: &mut Option<QScanBest>| -> Result<f64> {
        let q = ln_q.exp();
        let point = gamma_sq_at(sys, a, q)?;
        let v = point.as_ref().map_or(f64::INFINITY, |(g, _)| *g);
        consider(q, point, best);
        Ok(v)
    };
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = eval(x1, &mut best)?;
    let mut f2 = eval(x2, &mut best)?;
    let tol = rel_tol.max(1e-12);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = eval(x1, &mut best)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = eval(x2, &mut best)?;
        }
    }
    Ok(best)
}

/// Check |||F|||_a ≤ γ by searching the admissible q interval for a point
/// satisfying the Riccati and determinant conditions.
pub fn aniso_bound_check(sys: &StateSpace, a: f64, gamma: f64) -> Result<AnisoNormCertificate> {
    if a < 0.0 {
        return Err(Error::InvalidArgs(format!("anisotropy level must be >= 0, got {a}")));
    }
    if gamma <= 0.0 {
        return Err(Error::InvalidArgs(format!("gamma must be positive, got {gamma}")));
    }
    require_stable(sys)?;
    let hinf = hinf_norm(sys, 1e-8)?;
    let q_cap = if hinf > 0.0 {
        (1.0 / (gamma * gamma)).min(1.0 / (hinf * hinf))
    } else {
        1.0 / (gamma * gamma)
    } * (1.0 - 1e-9);

    let best = minimize_gamma_sq(sys, a, q_cap, 1e-4)?;
    match best {
        Some(b) => {
            let m = sys.inputs() as f64;
            let lhs = 1.0 / b.q - gamma * gamma;
            let log_det_psi: f64 = symmetric_eigenvalues(&b.ric.psi_q)
                .iter()
                .map(|e| e.max(f64::MIN_POSITIVE).ln())
                .sum();
            let log_ratio = m * lhs.max(f64::MIN_POSITIVE).ln() - log_det_psi;
            let det_margin = (-2.0 * a).exp() - log_ratio.min(700.0).exp();
            Ok(AnisoNormCertificate {
                feasible: b.gamma_sq <= gamma * gamma,
                q: b.q,
                gamma,
                x: b.ric,
                det_margin,
            })
        }
        None => Ok(AnisoNormCertificate {
            feasible: false,
            q: q_cap,
            gamma,
            x: RiccatiSolution {
                x: Matrix::zeros(sys.order(), sys.order()),
                psi_q: Matrix::zeros(sys.inputs(), sys.inputs()),
                stabilizing: false,
                closed_loop_spectral_radius: f64::INFINITY,
            },
            det_margin: f64::NEG_INFINITY,
        }),
    }
}

/// The a-anisotropic norm |||F|||_a, clamped into [‖F‖₂/√m, ‖F‖∞].
pub fn aniso_norm(sys: &StateSpace, a: f64, tol: f64) -> Result<f64> {
    if a < 0.0 {
        return Err(Error::InvalidArgs(format!("anisotropy level must be >= 0, got {a}")));
    }
    if tol <= 0.0 {
        return Err(Error::InvalidArgs(format!("tolerance must be positive, got {tol}")));
    }
    require_stable(sys)?;
    let m = sys.inputs() as f64;
    let h2 = h2_norm(sys)?;
    let hinf = hinf_norm(sys, (0.1 * tol).clamp(1e-12, 1e-6))?;
    if hinf <= 0.0 {
        return Ok(0.0);
    }
    let q_max = (1.0 - 1e-6) / (hinf * hinf);
    let best = minimize_gamma_sq(sys, a, q_max, tol.min(1e-4))?;
    let value = match best {
        Some(b) => b.gamma_sq.max(0.0).sqrt(),
        None => hinf,
    };
    Ok(value.clamp(h2 / m.sqrt(), hinf))
}

/// Interpolation bound √(η²(1 − e^(−2a/m)) + (σ²/m)e^(−2a/m)) on the
/// a-anisotropic norm from H∞ and H2 bounds η and σ.
pub fn interp_bound(eta: f64, sigma: f64, m: usize, a: f64) -> Result<f64> {
    if eta < 0.0 || sigma < 0.0 || a < 0.0 {
        return Err(Error::InvalidArgs(
            "eta, sigma and a must all be nonnegative".into(),
        ));
    }
    if m == 0 {
        return Err(Error::InvalidArgs("m must be at least 1".into()));
    }
    let w = (-2.0 * a / m as f64).exp();
    Ok((eta * eta * (1.0 - w) + sigma * sigma / m as f64 * w).sqrt())
}
