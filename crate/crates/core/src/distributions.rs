//! Measurement statistics and phase-space portraits: P(J_z) vectors,
//! Husimi-Q spherical grids, basis projections, and the figure panel data.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::channels::{ExperimentConfig, Pipeline, Recombiner};
use crate::convention::JzConvention;
use crate::dicke::{
    cat_state_analytic, css_state_with, m_values, optimal_state, DickeKet, JxEigen, StateRef,
};
use crate::error::{Error, Result};
use crate::fisher::{prob_derivatives_for_pipeline, ParameterId};
use crate::{phase, C64, FIGURE_BASE_OFFSET};

/// Probability distribution over the J_z outcomes, ascending m.
#[derive(Debug, Clone, PartialEq)]
pub struct JzDistribution {
    n: u32,
    probabilities: Vec<f64>,
}

impl JzDistribution {
    pub fn new(n: u32, probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.len() != n as usize + 1 {
            return Err(Error::DimensionMismatch {
                expected: n as usize + 1,
                got: probabilities.len(),
            });
        }
        for (i, &p) in probabilities.iter().enumerate() {
            if p < -1e-12 {
                return Err(Error::InvalidProbability { index: i, value: p });
            }
        }
        let total: f64 = probabilities.iter().sum();
        if libm::fabs(total - 1.0) > 1e-10 {
            return Err(Error::NotNormalized { norm_sq: total });
        }
        Ok(JzDistribution { n, probabilities })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn m_values(&self) -> Vec<f64> {
        m_values(self.n)
    }
}

/// |c_m|^2 for kets; the diagonal for densities.
pub fn jz_distribution<'a>(state: impl Into<StateRef<'a>>) -> Result<JzDistribution> {
    let state = state.into();
    let (n, p) = match state {
        StateRef::Ket(k) => (k.n(), k.probabilities()),
        StateRef::Density(d) => (d.n(), d.diag_probabilities()),
    };
    JzDistribution::new(n, p)
}

/// Husimi-Q values Q(theta, phi) = |<xi(theta, phi)|psi>|^2 over an inclusive
/// grid, theta in [0, pi] and phi in [-pi, pi].
#[derive(Debug, Clone, PartialEq)]
pub struct HusimiGrid {
    thetas: Vec<f64>,
    phis: Vec<f64>,
    /// Row-major: `values[it * phis.len() + ip]`.
    values: Vec<f64>,
}

impl HusimiGrid {
    /// Assembles a grid from row-major values; used by parallel drivers that
    /// evaluate rows with [`husimi_row`].
    pub fn from_parts(thetas: Vec<f64>, phis: Vec<f64>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), thetas.len() * phis.len());
        HusimiGrid { thetas, phis, values }
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn phis(&self) -> &[f64] {
        &self.phis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, it: usize, ip: usize) -> f64 {
        self.values[it * self.phis.len() + ip]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Grid indices of the largest value.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0usize, 0usize);
        let mut bv = f64::NEG_INFINITY;
        for it in 0..self.thetas.len() {
            for ip in 0..self.phis.len() {
                let v = self.value(it, ip);
                if v > bv {
                    bv = v;
                    best = (it, ip);
                }
            }
        }
        best
    }

    /// Trapezoid quadrature of Q over the sphere with the sin(theta) measure;
    /// equals 4 pi / (N+1) for a normalized state, up to grid error.
    pub fn sphere_integral(&self) -> f64 {
        let nt = self.thetas.len();
        let np = self.phis.len();
        let mut theta_rows = Vec::with_capacity(nt);
        for it in 0..nt {
            let mut acc = 0.0;
            for ip in 0..np - 1 {
                let dphi = self.phis[ip + 1] - self.phis[ip];
                acc += 0.5 * (self.value(it, ip) + self.value(it, ip + 1)) * dphi;
            }
            theta_rows.push(acc * libm::sin(self.thetas[it]));
        }
        let mut total = 0.0;
        for it in 0..nt - 1 {
            let dth = self.thetas[it + 1] - self.thetas[it];
            total += 0.5 * (theta_rows[it] + theta_rows[it + 1]) * dth;
        }
        total
    }
}

/// One grid row of Q at fixed theta, shared by the grid builder and parallel
/// callers. The row is evaluated by building |xi(theta, 0)> once and folding
/// the phi phase into the overlap.
pub fn husimi_row(eig: &JxEigen, state: &DickeKet, theta: f64, phis: &[f64]) -> Result<Vec<f64>> {
    if state.n() != eig.n() {
        return Err(Error::DimensionMismatch { expected: eig.dim(), got: state.dim() });
    }
    let xi0 = css_state_with(eig, theta, 0.0)?;
    let ms = m_values(state.n());
    // <xi(theta, phi)|psi> = sum_m conj(xi0_m) e^{-i phi m} psi_m
    let weights: Vec<C64> = xi0
        .amplitudes()
        .iter()
        .zip(state.amplitudes())
        .map(|(x, p)| x.conj() * p)
        .collect();
    Ok(phis
        .iter()
        .map(|&ph| {
            let mut acc = C64::new(0.0, 0.0);
            for (w, &m) in weights.iter().zip(&ms) {
                acc += w * phase(-ph * m);
            }
            acc.norm_sqr()
        })
        .collect())
}

fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    let step = (b - a) / (count as f64 - 1.0);
    (0..count)
        .map(|i| if i + 1 == count { b } else { a + step * i as f64 })
        .collect()
}

/// Evaluates Q over the inclusive grid. Both resolutions must be at least 2.
pub fn husimi_grid(state: &DickeKet, theta_points: usize, phi_points: usize) -> Result<HusimiGrid> {
    if theta_points < 2 || phi_points < 2 {
        return Err(Error::InvalidInput {
            field: "grid resolution",
            reason: String::from("theta_points and phi_points must be >= 2"),
        });
    }
    let eig = JxEigen::compute(state.n())?;
    let thetas = linspace(0.0, core::f64::consts::PI, theta_points);
    let phis = linspace(-core::f64::consts::PI, core::f64::consts::PI, phi_points);
    let mut values = Vec::with_capacity(theta_points * phi_points);
    for &th in &thetas {
        values.extend(husimi_row(&eig, state, th, &phis)?);
    }
    Ok(HusimiGrid { thetas, phis, values })
}

/// |<m_k|psi>|^2 for k = x, y, z, each ascending in the respective eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisProjections {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

/// Projects a pure state onto the three collective-spin eigenbases.
pub fn basis_projections(state: &DickeKet) -> Result<BasisProjections> {
    let eig = JxEigen::compute(state.n())?;
    let x = eig.project_x(state).iter().map(|c| c.norm_sqr()).collect();
    let y = eig.project_y(state).iter().map(|c| c.norm_sqr()).collect();
    let z = state.probabilities();
    Ok(BasisProjections { x, y, z })
}

/// Which figure's panel set to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    Fig2,
    Fig3,
    Fig4,
}

impl FigureId {
    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
        }
    }

    pub fn parse(s: &str) -> Option<FigureId> {
        match s {
            "fig2" => Some(FigureId::Fig2),
            "fig3" => Some(FigureId::Fig3),
            "fig4" => Some(FigureId::Fig4),
            _ => None,
        }
    }
}

/// Optional departures from the figure defaults.
#[derive(Debug, Clone, Copy, Default)]
pub struct FigureOverrides {
    /// Offset applied to every small parameter in derivative panels
    /// (default 1e-8).
    pub base_offset: Option<f64>,
    /// Twisting strength (default pi/4).
    pub chi_tau: Option<f64>,
    /// Husimi grid resolution per axis (default 201).
    pub husimi_points: Option<usize>,
}

/// One panel of figure data.
#[derive(Debug, Clone)]
pub struct FigurePanel {
    /// e.g. "fig3b".
    pub name: String,
    /// What the values are, e.g. "P" or "dP_dalpha".
    pub quantity: String,
    pub data: PanelData,
}

#[derive(Debug, Clone)]
pub enum PanelData {
    /// A function of m (ascending). The label says which eigenbasis when it
    /// is not J_z.
    Series { m: Vec<f64>, values: Vec<f64> },
    Grid(HusimiGrid),
}

fn series(name: &str, quantity: &str, m: Vec<f64>, values: Vec<f64>) -> FigurePanel {
    FigurePanel {
        name: String::from(name),
        quantity: String::from(quantity),
        data: PanelData::Series { m, values },
    }
}

/// Panel data for the three reproduced figures.
///
/// Probability panels are evaluated at exactly zero phases; derivative panels
/// at the small-offset operating point (every relevant parameter at
/// `base_offset`), matching the stated operating conditions of each panel.
pub fn figure_data(
    figure: FigureId,
    n: u32,
    overrides: FigureOverrides,
    convention: JzConvention,
) -> Result<Vec<FigurePanel>> {
    let eps = overrides.base_offset.unwrap_or(FIGURE_BASE_OFFSET);
    let chi = overrides.chi_tau.unwrap_or(core::f64::consts::FRAC_PI_4);
    let ms = m_values(n);
    match figure {
        FigureId::Fig2 => {
            let points = overrides.husimi_points.unwrap_or(201);
            let opt = optimal_state(n)?;
            let cat = cat_state_analytic(n)?;
            let mut panels = Vec::new();
            panels.push(FigurePanel {
                name: String::from("fig2a"),
                quantity: String::from("Q"),
                data: PanelData::Grid(husimi_grid(&opt, points, points)?),
            });
            panels.push(FigurePanel {
                name: String::from("fig2b"),
                quantity: String::from("Q"),
                data: PanelData::Grid(husimi_grid(&cat, points, points)?),
            });
            let po = basis_projections(&opt)?;
            let pc = basis_projections(&cat)?;
            panels.push(series("fig2c", "P_Jx", ms.clone(), po.x));
            panels.push(series("fig2d", "P_Jx", ms.clone(), pc.x));
            panels.push(series("fig2e", "P_Jy", ms.clone(), po.y));
            panels.push(series("fig2f", "P_Jy", ms.clone(), pc.y));
            panels.push(series("fig2g", "P_Jz", ms.clone(), po.z));
            panels.push(series("fig2h", "P_Jz", ms, pc.z));
            Ok(panels)
        }
        FigureId::Fig3 | FigureId::Fig4 => {
            let (recomb, with_deph, stem, params): (_, _, _, &[ParameterId]) = match figure {
                FigureId::Fig3 => (
                    Recombiner::U0Dagger,
                    false,
                    "fig3",
                    &[ParameterId::Alpha, ParameterId::Beta],
                ),
                FigureId::Fig4 => (Recombiner::U0, true, "fig4", &ParameterId::ALL),
                FigureId::Fig2 => unreachable!(),
            };
            // panel (a): the undisturbed distribution
            let mut zero = ExperimentConfig::zeroed(n, recomb);
            zero.twisting.chi_tau = chi;
            let p0 = Pipeline::new(zero, convention)?.final_probabilities();
            let mut panels = Vec::new();
            panels.push(series(&format!("{stem}a"), "P", ms.clone(), p0));

            // derivative panels at the offset operating point
            let mut cfg = ExperimentConfig::figure_defaults(n, recomb, with_deph);
            cfg.twisting.chi_tau = chi;
            cfg.gravity.alpha = eps;
            cfg.gravity.beta = eps;
            for d in &mut cfg.dephasing {
                d.delta = eps;
            }
            let pipe = Pipeline::new(cfg, convention)?;
            let table = prob_derivatives_for_pipeline(&pipe, params)?;
            for (i, &param) in params.iter().enumerate() {
                let letter = char::from(b'b' + i as u8);
                panels.push(series(
                    &format!("{stem}{letter}"),
                    &format!("dP_d{}", param.name()),
                    ms.clone(),
                    table.derivatives[i].clone(),
                ));
            }
            Ok(panels)
        }
    }
}
