use super::lp::holder_proxy;
use super::scalar::ScalarField2D;
use crate::error::{Error, Result};
use serde::Serialize;

fn sobolev_sum(f: &ScalarField2D, weight: impl Fn(f64) -> f64) -> f64 {
    let g = *f.grid();
    let spec = f.spectrum();
    let mut acc = 0.0;
    for j in 0..g.ny {
        let ky = g.ky(j);
        for i in 0..g.nx {
            let k2 = g.kx(i).powi(2) + ky * ky;
            acc += weight(k2) * spec.coeff(i, j).norm_sqr();
        }
    }
    acc * g.lx * g.ly
}

/// Bessel-potential norm `(Σ ⟨ξ⟩^{2s} |f̂|² lx ly)^{1/2}`.
pub fn sobolev_norm(f: &ScalarField2D, s: f64) -> Result<f64> {
    if !(-2.0..=4.0).contains(&s) {
        return Err(Error::OutOfRange {
            what: "Sobolev index s".into(),
            detail: format!("{s} not in [-2, 4]"),
        });
    }
    f.check_finite("sobolev_norm input")?;
    Ok(sobolev_sum(f, |k2| (1.0 + k2).powf(s)).sqrt())
}

/// Homogeneous norm `(Σ_{ξ≠0} |ξ|^{2s} |f̂|² lx ly)^{1/2}`.
pub fn homogeneous_sobolev_norm(f: &ScalarField2D, s: f64) -> Result<f64> {
    f.check_finite("homogeneous_sobolev_norm input")?;
    Ok(sobolev_sum(f, |k2| if k2 == 0.0 { 0.0 } else { k2.powf(s) }).sqrt())
}

/// `L^p` norm by grid quadrature; `p = ∞` gives the grid maximum.
pub fn lp_norm(f: &ScalarField2D, p: f64) -> f64 {
    if p.is_infinite() {
        return f.max_abs();
    }
    let area = f.grid().cell_area();
    (f.values().iter().map(|v| v.abs().powf(p)).sum::<f64>() * area).powf(1.0 / p)
}

/// Composite Simpson rule on uniform samples; an even sample count closes with the 3/8 rule.
pub fn simpson(values: &[f64], dt: f64) -> f64 {
    let n = values.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * dt * (values[0] + values[1]),
        3 => dt / 3.0 * (values[0] + 4.0 * values[1] + values[2]),
        _ if n % 2 == 1 => {
            let mut acc = values[0] + values[n - 1];
            for (k, v) in values.iter().enumerate().take(n - 1).skip(1) {
                acc += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            acc * dt / 3.0
        }
        _ => {
            let head = if n - 3 >= 3 { simpson(&values[..n - 3], dt) } else { 0.0 };
            let t = &values[n - 4..];
            head + 3.0 * dt / 8.0 * (t[0] + 3.0 * t[1] + 3.0 * t[2] + t[3])
        }
    }
}

/// Space-time norms of a uniformly sampled series.
#[derive(Debug, Clone, Serialize)]
pub struct MixedNorms {
    pub l4t_linfx: f64,
    pub l4t_besov: f64,
    pub linft_hs: f64,
    pub l8x: Vec<f64>,
}

/// Computes `L⁴_t L^∞_x`, `L⁴_t C^δ` (Besov proxy), `L^∞_t H^s` and `L⁸_x` per sample.
pub fn mixed_norms(series: &[ScalarField2D], dt: f64, delta: f64, s: f64) -> Result<MixedNorms> {
    if series.len() < 4 {
        return Err(Error::TooFewSlices {
            need: 4,
            have: series.len(),
        });
    }
    let sup4: Vec<f64> = series.iter().map(|f| f.max_abs().powi(4)).collect();
    let besov4: Vec<f64> = series
        .iter()
        .map(|f| holder_proxy(f, delta).powi(4))
        .collect();
    let mut linft_hs: f64 = 0.0;
    for f in series {
        linft_hs = linft_hs.max(sobolev_norm(f, s)?);
    }
    Ok(MixedNorms {
        l4t_linfx: simpson(&sup4, dt).powf(0.25),
        l4t_besov: simpson(&besov4, dt).powf(0.25),
        linft_hs,
        l8x: series.iter().map(|f| lp_norm(f, 8.0)).collect(),
    })
}
