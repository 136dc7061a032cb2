use rayon::prelude::*;

use super::{Evaluation, ObjectiveConfig, Penalty};
use crate::error::{Error, Result};
use crate::galerkin::DiscreteSystem;
use crate::linalg::{trace_adjoint_product, CMat, C64};

fn elementwise_sum(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Gradient of the objective with respect to the model parameters.
///
/// With `Y = W^{-1} E`, `Q = V Y` and the parameter derivatives `dK`, `dF`
/// and `dR`, each component is
/// `-Re[tr(Y* dF^T conj U) + tr(Q* dF)] + Re sum_j q_j^T dK u_j`,
/// plus, when the metric depends on the parameters, the derivative of the
/// Gram matrix contracted against `Y Y*`. One extra solve with `K` covers
/// all parameters.
pub fn gradient(sys: &DiscreteSystem, cfg: &ObjectiveConfig, ev: &Evaluation) -> Result<Vec<f64>> {
    let np = sys.n_params();
    if let Some(d) = &sys.source_derivs {
        if d.len() != np {
            return Err(Error::DimensionMismatch(format!("{} source derivatives for {np} parameters", d.len())));
        }
    }
    if let Some(d) = &sys.inner_derivs {
        if d.len() != np {
            return Err(Error::DimensionMismatch(format!("{} inner-product derivatives for {np} parameters", d.len())));
        }
    }
    let y = &ev.weighted;
    let u = &ev.states.u;
    let ubar = u.map(|z| z.conj());
    let q = &ev.states.v * y;
    let qbar = q.map(|z| z.conj());

    let beta = if cfg.gram_varies() {
        match cfg.rho {
            Penalty::Finite(r) => 0.5 / r,
            Penalty::ZeroLimit => 0.5,
            Penalty::Infinite => 0.0,
        }
    } else {
        0.0
    };
    let z2 = if beta != 0.0 { Some(ev.states.lu.solve(&sys.inner.mul(&qbar)?)?) } else { None };

    let grad = (0..np)
        .into_par_iter()
        .map(|k| {
            let dk = &sys.operator_derivs[k];
            let mut g = dk.bilinear_columns(&q, u).re;
            if let Some(df) = sys.source_derivs.as_ref().map(|d| &d[k]) {
                g -= trace_adjoint_product(y, &(df.transpose() * &ubar)).re;
                g -= trace_adjoint_product(&q, df).re;
            }
            if let Some(z2) = &z2 {
                let mut t = 0.0;
                if let Some(dr) = sys.inner_derivs.as_ref().map(|d| &d[k]) {
                    t += dr.bilinear_columns(&qbar, &q).re;
                }
                let mut cross = -dk.bilinear_columns(&q, z2);
                if let Some(df) = sys.source_derivs.as_ref().map(|d| &d[k]) {
                    cross += elementwise_sum(z2, &(df * y));
                }
                t += 2.0 * cross.re;
                g -= beta * t;
            }
            g
        })
        .collect();
    Ok(grad)
}
