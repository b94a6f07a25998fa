//! Nodal right-hand side of the momentum equation, excluding viscosity
//! (which acts through the basis eigenvalues).
//!
//! Transport terms use the skew form `T(G, v) = 1/2 [div(G (x) v) + (G . grad) v]`
//! so that they do no work against `v`; the remaining half-divergence terms
//! reuse the density update's own flux divergence and Laplacian, which makes
//! the kinetic-energy balance close against the continuity equation.

use serde::{Deserialize, Serialize};

use crate::energy::{enthalpy, pressure, PhysParams, SchemeParams};
use crate::error::Result;
use crate::field_core::ops::{dx, dy, lap};
use crate::field_core::{ericksen_stress, tensor_divergence, DirectorField, ScalarField, VectorField2};

/// Discretization of the elastic body force `-nu div(grad d (.) grad d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElasticForm {
    /// `-nu (grad d)^T lap d`; pairs exactly with the director transport.
    #[default]
    GradTransposeLaplacian,
    /// `-nu (grad d)^T (lap d + |grad d|^2 d)`.
    GradTransposeTension,
    /// `-nu div(sigma)` with the trace-free Ericksen stress.
    StressDivergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PressureForm {
    /// `-rho grad h(rho)`, adjoint to the centered mass flux.
    #[default]
    Enthalpy,
    /// `-grad P(rho)`.
    Conservative,
}

/// Switches for individual contributions, mainly for decoupled tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingTerms {
    /// Viscosity enters the momentum step through the basis eigenvalues;
    /// [`forcing_field`] ignores this flag.
    pub viscous: bool,
    pub convection: bool,
    pub pressure: bool,
    pub elastic: bool,
    pub artificial: bool,
}

impl Default for ForcingTerms {
    fn default() -> Self {
        ForcingTerms {
            viscous: true,
            convection: true,
            pressure: true,
            elastic: true,
            artificial: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForcingOptions {
    pub terms: ForcingTerms,
    pub elastic: ElasticForm,
    pub pressure: PressureForm,
}

/// Discrete continuity data from the density step: `div_h(rho v)` and the
/// Neumann Laplacian of the new density.
#[derive(Debug, Clone, Copy)]
pub struct Transport<'a> {
    pub flux_div: &'a [f64],
    pub lap_rho: &'a [f64],
}

/// `T(G, v)` component-wise.
fn skew_transport(g: &crate::field_core::GridSpec, gx: &[f64], gy: &[f64], v: &VectorField2) -> [Vec<f64>; 2] {
    let n = g.node_count();
    let mut out = [vec![0.0; n], vec![0.0; n]];
    for (c, vc) in [v.u(), v.w()].into_iter().enumerate() {
        let fx: Vec<f64> = (0..n).map(|k| gx[k] * vc[k]).collect();
        let fy: Vec<f64> = (0..n).map(|k| gy[k] * vc[k]).collect();
        let (dfx, dfy) = (dx(g, &fx), dy(g, &fy));
        let (vx, vy) = (dx(g, vc), dy(g, vc));
        for k in 0..n {
            out[c][k] = 0.5 * (dfx[k] + dfy[k] + gx[k] * vx[k] + gy[k] * vy[k]);
        }
    }
    out
}

/// Elastic force per unit `nu`.
pub fn elastic_force(d: &DirectorField, form: ElasticForm) -> VectorField2 {
    let g = d.grid();
    let n = g.node_count();
    match form {
        ElasticForm::StressDivergence => tensor_divergence(&ericksen_stress(d)).scaled(-1.0),
        ElasticForm::GradTransposeLaplacian | ElasticForm::GradTransposeTension => {
            let mut l1 = lap(g, d.d1());
            let mut l2 = lap(g, d.d2());
            if form == ElasticForm::GradTransposeTension {
                let t = crate::energy::tension_field(d);
                l1.copy_from_slice(t.u());
                l2.copy_from_slice(t.w());
            }
            let (d1x, d1y, d2x, d2y) = (dx(g, d.d1()), dy(g, d.d1()), dx(g, d.d2()), dy(g, d.d2()));
            let u = (0..n).map(|k| -(d1x[k] * l1[k] + d2x[k] * l2[k])).collect();
            let w = (0..n).map(|k| -(d1y[k] * l1[k] + d2y[k] * l2[k])).collect();
            VectorField2::new(*g, u, w).expect("congruent")
        }
    }
}

/// Non-viscous momentum forcing at the nodes.
pub fn forcing_field(
    rho: &ScalarField,
    v: &VectorField2,
    d: &DirectorField,
    transport: Option<Transport<'_>>,
    p: &PhysParams,
    s: &SchemeParams,
    opts: &ForcingOptions,
) -> Result<VectorField2> {
    let g = *rho.grid();
    g.check_same(v.grid(), "forcing")?;
    g.check_same(d.grid(), "forcing")?;
    let n = g.node_count();
    let r = rho.values();
    let mut fu = vec![0.0; n];
    let mut fw = vec![0.0; n];
    let fallback;
    let tr = match transport {
        Some(t) => t,
        None => {
            let mx: Vec<f64> = (0..n).map(|k| r[k] * v.u()[k]).collect();
            let my: Vec<f64> = (0..n).map(|k| r[k] * v.w()[k]).collect();
            let mut div = dx(&g, &mx);
            for (a, b) in div.iter_mut().zip(dy(&g, &my)) {
                *a += b;
            }
            fallback = (div, lap(&g, r));
            Transport {
                flux_div: &fallback.0,
                lap_rho: &fallback.1,
            }
        }
    };

    if opts.terms.convection {
        let gx: Vec<f64> = (0..n).map(|k| r[k] * v.u()[k]).collect();
        let gy: Vec<f64> = (0..n).map(|k| r[k] * v.w()[k]).collect();
        let t = skew_transport(&g, &gx, &gy, v);
        for k in 0..n {
            fu[k] -= t[0][k] + 0.5 * tr.flux_div[k] * v.u()[k];
            fw[k] -= t[1][k] + 0.5 * tr.flux_div[k] * v.w()[k];
        }
    }
    if opts.terms.artificial && s.eps > 0.0 {
        let (rx, ry) = (dx(&g, r), dy(&g, r));
        let t = skew_transport(&g, &rx, &ry, v);
        for k in 0..n {
            fu[k] += s.eps * (0.5 * tr.lap_rho[k] * v.u()[k] - t[0][k]);
            fw[k] += s.eps * (0.5 * tr.lap_rho[k] * v.w()[k] - t[1][k]);
        }
    }
    if opts.terms.pressure {
        match opts.pressure {
            PressureForm::Enthalpy => {
                let h: Vec<f64> = r.iter().map(|&x| enthalpy(x, p, s)).collect();
                let (hx, hy) = (dx(&g, &h), dy(&g, &h));
                for k in 0..n {
                    fu[k] -= r[k] * hx[k];
                    fw[k] -= r[k] * hy[k];
                }
            }
            PressureForm::Conservative => {
                let pr: Vec<f64> = r.iter().map(|&x| pressure(x, p, s)).collect();
                let (px, py) = (dx(&g, &pr), dy(&g, &pr));
                for k in 0..n {
                    fu[k] -= px[k];
                    fw[k] -= py[k];
                }
            }
        }
    }
    if opts.terms.elastic {
        let e = elastic_force(d, opts.elastic);
        for k in 0..n {
            fu[k] += p.nu * e.u()[k];
            fw[k] += p.nu * e.w()[k];
        }
    }
    VectorField2::new(g, fu, fw)
}

/// Nodal viscous term `mu lap v + (mu+lambda) grad div v` by finite differences.
pub fn viscous_field(v: &VectorField2, p: &PhysParams) -> VectorField2 {
    let g = v.grid();
    let n = g.node_count();
    let mut div = dx(g, v.u());
    for (a, b) in div.iter_mut().zip(dy(g, v.w())) {
        *a += b;
    }
    let (gx, gy) = (dx(g, &div), dy(g, &div));
    let (lu, lw) = (lap(g, v.u()), lap(g, v.w()));
    let s = p.mu + p.lambda;
    let u = (0..n).map(|k| p.mu * lu[k] + s * gx[k]).collect();
    let w = (0..n).map(|k| p.mu * lw[k] + s * gy[k]).collect();
    VectorField2::new(*g, u, w).expect("congruent")
}
