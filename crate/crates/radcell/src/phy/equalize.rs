//! MMSE equalization and post-equalizer SINR.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::sinr_ceiling;
use crate::error::{Error, Result};

type CMat = DMatrix<Complex64>;
type CVec = DVector<Complex64>;

fn check_dims(h: &CMat, w: &CMat) -> Result<()> {
    if h.ncols() != w.nrows() {
        return Err(Error::Input(format!(
            "channel has {} transmit ports but the precoder has {} rows",
            h.ncols(),
            w.nrows()
        )));
    }
    Ok(())
}

/// MMSE receive matrix `(W^H Ĥ^H Ĥ W + σ̂² I)^-1 W^H Ĥ^H`.
pub fn mmse_matrix(h: &CMat, w: &CMat, sigma2: f64) -> Result<CMat> {
    check_dims(h, w)?;
    let hw = h * w;
    let hw_h = hw.adjoint();
    let layers = w.ncols();
    let gram = &hw_h * &hw + CMat::identity(layers, layers) * Complex64::new(sigma2, 0.0);
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::Numerical("MMSE system is singular; effective channel is rank deficient".into()))?;
    Ok(inv * hw_h)
}

pub fn mmse_equalize(y: &CVec, h: &CMat, w: &CMat, sigma2: f64) -> Result<CVec> {
    if y.len() != h.nrows() {
        return Err(Error::Input("received vector does not match the channel".into()));
    }
    Ok(mmse_matrix(h, w, sigma2)? * y)
}

/// Pilot-aided per-layer SINR `1/[(W^H Ĥ^H Ĥ W/σ̂² + I)^-1]_ll − 1`.
pub fn pilot_sinr(h: &CMat, w: &CMat, sigma2: f64) -> Result<Vec<f64>> {
    check_dims(h, w)?;
    let layers = w.ncols();
    if sigma2 <= 0.0 {
        return Ok(vec![sinr_ceiling(); layers]);
    }
    let hw = h * w;
    let m = hw.adjoint() * &hw / Complex64::new(sigma2, 0.0) + CMat::identity(layers, layers);
    let inv = m.try_inverse().ok_or_else(|| Error::Numerical("pilot SINR system is singular".into()))?;
    Ok((0..layers).map(|l| (1.0 / inv[(l, l)].re - 1.0).min(sinr_ceiling())).collect())
}

/// Instantaneous post-equalizer SINR per layer for one RE:
/// `|x_l|² / |[(ĜHW − I)x + Ĝ(h_r i + w)]_l|²`.
pub fn true_post_eq_sinr(g: &CMat, h: &CMat, w: &CMat, x: &CVec, interference: &CVec, noise: &CVec) -> Result<Vec<f64>> {
    check_dims(h, w)?;
    let layers = w.ncols();
    let e = (g * h * w - CMat::identity(layers, layers)) * x + g * (interference + noise);
    Ok((0..layers)
        .map(|l| {
            let den = e[l].norm_sqr();
            if den == 0.0 {
                sinr_ceiling()
            } else {
                (x[l].norm_sqr() / den).min(sinr_ceiling())
            }
        })
        .collect())
}

/// Post-equalizer SINR averaged over unit-power symbols and noise, with
/// the realized interference vector:
/// `1/[(ĜHW − I)(ĜHW − I)^H + Ĝ(r r^H + σ_w² I)Ĝ^H]_ll`.
pub fn expected_post_eq_sinr(g: &CMat, h: &CMat, w: &CMat, interference: &CVec, sigma_w2: f64) -> Result<Vec<f64>> {
    check_dims(h, w)?;
    let layers = w.ncols();
    let bias = g * h * w - CMat::identity(layers, layers);
    let n = interference.len();
    let cov = interference * interference.adjoint() + CMat::identity(n, n) * Complex64::new(sigma_w2, 0.0);
    let mse = &bias * bias.adjoint() + g * cov * g.adjoint();
    Ok((0..layers)
        .map(|l| {
            let d = mse[(l, l)].re;
            if d <= 0.0 {
                sinr_ceiling()
            } else {
                (1.0 / d).min(sinr_ceiling())
            }
        })
        .collect())
}

/// Scalar MMSE gain `ĥ*/(|ĥ|² + σ̂²)`.
pub fn siso_mmse_gain(h_est: Complex64, sigma2: f64) -> Complex64 {
    h_est.conj() / (h_est.norm_sqr() + sigma2)
}

/// Scalar form of [`expected_post_eq_sinr`] with interference power `i_pow`.
pub fn siso_expected_sinr(g: Complex64, h: Complex64, i_pow: f64, sigma_w2: f64) -> f64 {
    let d = (g * h - 1.0).norm_sqr() + g.norm_sqr() * (i_pow + sigma_w2);
    if d <= 0.0 {
        sinr_ceiling()
    } else {
        (1.0 / d).min(sinr_ceiling())
    }
}

/// Scalar pilot-aided SINR `|ĥ|²/σ̂²`.
pub fn siso_pilot_sinr(h_est: Complex64, sigma2: f64) -> f64 {
    if sigma2 <= 0.0 {
        sinr_ceiling()
    } else {
        (h_est.norm_sqr() / sigma2).min(sinr_ceiling())
    }
}
