//! Plant configuration files, the F4E pitch-loop model bank, end-to-end
//! design runs, and report emission.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sigma_max_complex, spectral_radius, transfer_at};
use crate::lti::{close_loop, discretize_zoh, ContinuousStateSpace, Plant, StateSpace};
use crate::norms::{aniso_norm, hinf_norm};
use crate::synthesis::{ccl_synthesize, CclOptions, SynthesisStatus};
use crate::Matrix;
use nalgebra::Complex;

/// H∞ design bounds per F4E operating point.
pub const F4E_GAMMA_INF: [f64; 4] = [0.3, 0.6, 1.0, 0.25];
/// Point-wise tightening factors for the near-optimal anisotropic design.
pub const F4E_ANISO_FACTOR: [f64; 4] = [0.84, 0.8, 0.82, 1.0];
/// Mean anisotropy level of the anisotropic designs.
pub const F4E_ANISOTROPY_LEVEL: f64 = 0.5;
/// Anisotropy level standing in for a → ∞ in the H∞ mode.
pub const F4E_A_LARGE: f64 = 1e3;
/// Default sample time of the case study, seconds.
pub const F4E_DEFAULT_TS: f64 = 0.01;

/// Generalized-plant configuration document (JSON): matrices as nested
/// row-major arrays, optionally continuous-time with a sample time.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PlantConfig {
    pub name: String,
    #[serde(default)]
    pub continuous: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_time: Option<f64>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B1")]
    pub b1: Vec<Vec<f64>>,
    #[serde(rename = "B2")]
    pub b2: Vec<Vec<f64>>,
    #[serde(rename = "C1")]
    pub c1: Vec<Vec<f64>>,
    #[serde(rename = "C2")]
    pub c2: Vec<Vec<f64>>,
    #[serde(rename = "D11")]
    pub d11: Vec<Vec<f64>>,
    #[serde(rename = "D12")]
    pub d12: Vec<Vec<f64>>,
}

/// State-space configuration document for the norm commands.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SystemConfig {
    pub name: String,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
}

/// Gain file for the analyze command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GainConfig {
    #[serde(rename = "K")]
    pub k: Vec<Vec<f64>>,
}

pub fn matrix_from_rows(name: &str, rows: &[Vec<f64>]) -> Result<Matrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::ParseError(format!("matrix {name} has ragged rows")));
    }
    let mut m = Matrix::zeros(r, c);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::ParseError(format!("matrix {name} has a non-finite entry")));
            }
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

pub fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

impl PlantConfig {
    /// Validate and assemble the plant, discretizing if continuous.
    pub fn build(&self) -> Result<Plant> {
        let a = matrix_from_rows("A", &self.a)?;
        let b1 = matrix_from_rows("B1", &self.b1)?;
        let b2 = matrix_from_rows("B2", &self.b2)?;
        let c1 = matrix_from_rows("C1", &self.c1)?;
        let c2 = matrix_from_rows("C2", &self.c2)?;
        let d11 = matrix_from_rows("D11", &self.d11)?;
        let d12 = matrix_from_rows("D12", &self.d12)?;
        if !self.continuous {
            return Plant::new(a, b1, b2, c1, c2, d11, d12);
        }
        let ts = self.sample_time.ok_or_else(|| {
            Error::ParseError(format!(
                "plant '{}' is continuous but has no sample_time",
                self.name
            ))
        })?;
        if ts <= 0.0 {
            return Err(Error::ParseError(format!("sample_time must be positive, got {ts}")));
        }
        let n = a.nrows();
        if n == 0 {
            // a static plant is its own discretization
            return Plant::new(a, b1, b2, c1, c2, d11, d12);
        }
        // hold both input channels over the sample period
        let m_w = b1.ncols();
        let m_u = b2.ncols();
        let b_all = crate::linalg::hstack(&[&b1, &b2]);
        let sys = ContinuousStateSpace::new(
            a,
            b_all,
            Matrix::identity(n, n),
            Matrix::zeros(n, m_w + m_u),
        )?;
        let d = discretize_zoh(&sys, ts);
        let b1_d = d.b.columns(0, m_w).into_owned();
        let b2_d = d.b.columns(m_w, m_u).into_owned();
        Plant::new(d.a, b1_d, b2_d, c1, c2, d11, d12)
    }
}

impl SystemConfig {
    pub fn build(&self) -> Result<StateSpace> {
        StateSpace::new(
            matrix_from_rows("A", &self.a)?,
            matrix_from_rows("B", &self.b)?,
            matrix_from_rows("C", &self.c)?,
            matrix_from_rows("D", &self.d)?,
        )
    }
}

/// Load and validate a plant configuration, discretizing continuous models.
pub fn load_plant(path: &Path) -> Result<(Plant, PlantConfig)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::ParseError(format!("cannot read {}: {e}", path.display())))?;
    let config: PlantConfig = serde_json::from_str(&text)
        .map_err(|e| Error::ParseError(format!("{}: {e}", path.display())))?;
    let plant = config.build()?;
    Ok((plant, config))
}

pub fn load_system(path: &Path) -> Result<(StateSpace, SystemConfig)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::ParseError(format!("cannot read {}: {e}", path.display())))?;
    let config: SystemConfig = serde_json::from_str(&text)
        .map_err(|e| Error::ParseError(format!("{}: {e}", path.display())))?;
    let sys = config.build()?;
    Ok((sys, config))
}

pub fn load_gain(path: &Path) -> Result<Matrix> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::ParseError(format!("cannot read {}: {e}", path.display())))?;
    let config: GainConfig = serde_json::from_str(&text)
        .map_err(|e| Error::ParseError(format!("{}: {e}", path.display())))?;
    matrix_from_rows("K", &config.k)
}

/// Table-7 short-period parameters: a11, a12, a13, a21, a22, a23, b1.
const F4E_TABLE: [[f64; 7]; 4] = [
    [-0.9896, 17.41, 96.15, 0.2648, -0.8512, -11.39, -97.78],
    [-0.6607, 18.11, 84.34, 0.08201, -0.6587, -10.81, -272.2],
    [-1.702, 50.72, 263.5, 0.2201, -1.418, -31.99, -85.09],
    [-0.5162, 29.96, 178.9, -0.6896, -1.225, -30.38, -175.6],
];

/// Continuous pitch-loop plant of one F4E operating point: states
/// [Nz, q, δe], a 30 rad/s first-order elevon servo, unit-intensity
/// disturbance on every state, z = [Nz; q; 0.001·u] and y = [Nz; q].
pub fn f4e_model(point: usize) -> Result<PlantConfig> {
    if !(1..=4).contains(&point) {
        return Err(Error::InvalidPoint(point));
    }
    let r = F4E_TABLE[point - 1];
    Ok(PlantConfig {
        name: format!("f4e-point-{point}"),
        continuous: true,
        sample_time: Some(F4E_DEFAULT_TS),
        a: vec![
            vec![r[0], r[1], r[2]],
            vec![r[3], r[4], r[5]],
            vec![0.0, 0.0, -30.0],
        ],
        b1: vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ],
        b2: vec![vec![r[6]], vec![0.0], vec![30.0]],
        c1: vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0],
        ],
        c2: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
        d11: vec![vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]],
        d12: vec![vec![0.0], vec![0.0], vec![0.001]],
    })
}

/// Design mode of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignMode {
    Hinf,
    Aniso,
    AnisoSubopt,
    /// Free-form run from the synthesize command.
    Custom,
}

impl DesignMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DesignMode::Hinf => "hinf",
            DesignMode::Aniso => "aniso",
            DesignMode::AnisoSubopt => "aniso_subopt",
            DesignMode::Custom => "custom",
        }
    }
}

/// Everything one design run produces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignReport {
    pub schema_version: u32,
    pub mode: DesignMode,
    pub operating_point: String,
    pub gamma_bound: f64,
    pub a: f64,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub achieved_hinf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub achieved_aniso: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_loop_spectral_radius: Option<f64>,
    pub iterations: usize,
    pub sigma_data: Vec<(f64, f64)>,
}

/// Options of a design run.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub operating_point: String,
    /// H∞ bound γ∞ of the point.
    pub gamma_inf: f64,
    /// Tightening factor of the near-optimal anisotropic mode.
    pub aniso_factor: f64,
    /// Mean anisotropy level of the anisotropic modes.
    pub anisotropy: f64,
    /// Stand-in anisotropy for the H∞ mode.
    pub a_large: f64,
    /// Sample time, for the frequency axis of the singular-value data.
    pub ts: f64,
    pub ccl: CclOptions,
    pub sigma_points: usize,
}

impl RunOptions {
    pub fn for_point(point: usize, ts: f64) -> Result<Self> {
        if !(1..=4).contains(&point) {
            return Err(Error::InvalidPoint(point));
        }
        Ok(Self {
            operating_point: format!("f4e-point-{point}"),
            gamma_inf: F4E_GAMMA_INF[point - 1],
            aniso_factor: F4E_ANISO_FACTOR[point - 1],
            anisotropy: F4E_ANISOTROPY_LEVEL,
            a_large: F4E_A_LARGE,
            ts,
            ccl: CclOptions::default(),
            sigma_points: 400,
        })
    }
}

/// The (a, γ) pair a mode designs to.
pub fn mode_targets(mode: DesignMode, opts: &RunOptions) -> (f64, f64) {
    match mode {
        DesignMode::Hinf => (opts.a_large, opts.gamma_inf),
        DesignMode::Aniso => (opts.anisotropy, opts.aniso_factor * opts.gamma_inf),
        DesignMode::AnisoSubopt | DesignMode::Custom => (opts.anisotropy, opts.gamma_inf),
    }
}

/// Log-spaced frequency grid in rad/s below the Nyquist rate.
pub fn default_frequency_grid(points: usize, ts: f64) -> Vec<f64> {
    let lo = 1e-2f64.ln();
    let hi = (0.99 * std::f64::consts::PI / ts).ln();
    (0..points)
        .map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Singular-value data of a stable discrete system over a frequency grid,
/// as CSV with header `freq_rad_s,sigma_max`.
pub fn emit_sigma(sys: &StateSpace, grid: &[f64], ts: f64) -> Result<String> {
    let rho = spectral_radius(&sys.a);
    if sys.order() > 0 && rho >= 1.0 {
        return Err(Error::UnstableSystem { rho });
    }
    let nyquist = std::f64::consts::PI / ts;
    let mut out = String::from("freq_rad_s,sigma_max\n");
    for &w in grid {
        if w >= nyquist {
            return Err(Error::InvalidArgs(format!(
                "frequency {w} rad/s at or above the Nyquist rate {nyquist}"
            )));
        }
        let theta = w * ts;
        let z = Complex::new(theta.cos(), theta.sin());
        let f = transfer_at(&sys.a, &sys.b, &sys.c, &sys.d, z);
        out.push_str(&format!("{w},{}\n", sigma_max_complex(&f)));
    }
    Ok(out)
}

/// Run one design and collect the report; synthesis failures become a
/// failed-status report rather than an error.
pub fn run_design(plant: &Plant, mode: DesignMode, opts: &RunOptions) -> DesignReport {
    let (a, gamma) = mode_targets(mode, opts);
    let mut report = DesignReport {
        schema_version: 1,
        mode,
        operating_point: opts.operating_point.clone(),
        gamma_bound: gamma,
        a,
        status: String::new(),
        k: None,
        gain_norm: None,
        achieved_hinf: None,
        achieved_aniso: None,
        closed_loop_spectral_radius: None,
        iterations: 0,
        sigma_data: Vec::new(),
    };
    match ccl_synthesize(plant, a, gamma, &opts.ccl) {
        Ok(result) if result.status == SynthesisStatus::Success => {
            let k = result.k.expect("successful synthesis carries a gain");
            report.iterations = result.iterations.len();
            match close_loop(plant, &k) {
                Ok(cl) => {
                    report.status = "success".into();
                    report.gain_norm = Some(k.norm());
                    report.k = Some(matrix_to_rows(&k));
                    report.closed_loop_spectral_radius = Some(spectral_radius(&cl.a));
                    report.achieved_hinf = hinf_norm(&cl, 1e-6).ok();
                    report.achieved_aniso = aniso_norm(&cl, a, 1e-6).ok();
                    let grid = default_frequency_grid(opts.sigma_points, opts.ts);
                    if let Ok(csv) = emit_sigma(&cl, &grid, opts.ts) {
                        report.sigma_data = csv
                            .lines()
                            .skip(1)
                            .filter_map(|line| {
                                let mut it = line.split(',');
                                Some((it.next()?.parse().ok()?, it.next()?.parse().ok()?))
                            })
                            .collect();
                    }
                }
                Err(e) => report.status = format!("failed: {e}"),
            }
        }
        Ok(result) => {
            report.iterations = result.iterations.len();
            report.status = format!(
                "failed: iteration limit reached (coupling residual {:.3e})",
                result
                    .iterations
                    .last()
                    .map(|it| it.coupling_residual)
                    .unwrap_or(f64::NAN)
            );
        }
        Err(e) => report.status = format!("failed: {e}"),
    }
    report
}

/// Gain-table CSV with header `point,mode,K1,K2,gain_norm`; rows without a
/// gain carry empty cells.
pub fn gain_table_csv(rows: &[(String, DesignMode, Option<Matrix>)]) -> String {
    let mut out = String::from("point,mode,K1,K2,gain_norm\n");
    for (point, mode, k) in rows {
        match k {
            Some(k) if k.len() >= 2 => {
                out.push_str(&format!(
                    "{point},{},{},{},{}\n",
                    mode.as_str(),
                    k[(0, 0)],
                    k[(0, 1)],
                    k.norm()
                ));
            }
            Some(k) => {
                out.push_str(&format!("{point},{},{},,{}\n", mode.as_str(), k[(0, 0)], k.norm()));
            }
            None => out.push_str(&format!("{point},{},,,\n", mode.as_str())),
        }
    }
    out
}
