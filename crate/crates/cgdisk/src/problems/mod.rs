//! Bundled right-hand sides.

pub mod chart;
pub mod expansion;
pub mod kobayashi;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::holder::{jet_index, jet_len};
use crate::system::RhsSystem;
use crate::C64;

pub use chart::MetricChart;
pub use expansion::{cp_coefficients, expand_brute_force, real_to_complex, CpCoefficients, OperatorCoefficients};
pub use kobayashi::{harmonic_jet, kobayashi_upper_bound, KobayashiOptions, KobayashiReport};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: &[&str] = &[
    "zero",
    "conj_z",
    "mizohata",
    "liouville",
    "director",
    "j_holomorphic",
    "m_laplace",
    "holo_linear",
    "holo_riccati",
    "harmonic_map",
];

/// `d^mu dbar^nu u = 0`.
pub fn zero(mu: usize, nu: usize, n: usize) -> Result<RhsSystem> {
    Ok(RhsSystem::new("zero", mu, nu, n, |_, _, out| out.fill(ZERO))?
        .autonomous()
        .eta_m_free())
}

/// `dbar u = conj z`.
pub fn conj_z() -> Result<RhsSystem> {
    Ok(RhsSystem::new("conj_z", 0, 1, 1, |z, _, out| out[0] = z.conj())?.eta_m_free())
}

/// `dbar u = F / (1 + Re z) - (1 - Re z) / (1 + Re z) d u`, restricted to `|z| < 1`.
pub fn mizohata(f: impl Fn(C64) -> C64 + Send + Sync + 'static) -> Result<RhsSystem> {
    let d = jet_index(1, 0);
    Ok(RhsSystem::new("mizohata", 0, 1, 1, move |z, jet, out| {
        let x = z.re;
        out[0] = f(z) / (1.0 + x) - jet[d] * ((1.0 - x) / (1.0 + x));
    })?
    .with_domain(0.99, f64::INFINITY, f64::INFINITY)
    .note("disk radius restricted below 1 (singular at Re z = -1)"))
}

/// `Delta u = e^(2u)`, i.e. `d dbar u = e^(2u) / 4`.
pub fn liouville() -> Result<RhsSystem> {
    Ok(RhsSystem::new("liouville", 1, 1, 1, |_, jet, out| out[0] = (jet[0] * 2.0).exp() * 0.25)?
        .with_domain(f64::INFINITY, 1.0, f64::INFINITY)
        .autonomous()
        .eta_m_free()
        .real()?
        .note("residual measured on Delta u - e^(2u)")
        .with_residual_scale(4.0))
}

/// `Delta u^i + |grad u|^2 u^i = 0` for `n` components.
pub fn director(n: usize) -> Result<RhsSystem> {
    let e = jet_len(2);
    let (d, db) = (jet_index(1, 0), jet_index(0, 1));
    Ok(RhsSystem::new("director", 1, 1, n, move |_, jet, out| {
        let energy: C64 = (0..n).map(|j| jet[j * e + d] * jet[j * e + db]).sum();
        for i in 0..n {
            out[i] = ZERO - energy * jet[i * e];
        }
    })?
    .with_domain(f64::INFINITY, 1.0, f64::INFINITY)
    .autonomous()
    .eta_m_free()
    .real()?
    .with_residual_scale(4.0))
}

/// `dbar u = a(u) conj(d u)` with `a(0) = 0`.
pub fn j_holomorphic(a: impl Fn(C64) -> C64 + Send + Sync + 'static) -> Result<RhsSystem> {
    let a0 = a(ZERO);
    if a0.norm() > 1e-12 {
        return Err(Error::InvalidSystem(format!("j_holomorphic needs a(0) = 0, got {a0}")));
    }
    let d = jet_index(1, 0);
    Ok(RhsSystem::new("j_holomorphic", 0, 1, 1, move |_, jet, out| out[0] = a(jet[0]) * jet[d].conj())?.autonomous())
}

/// `Delta^m' u = A`, solved as `d^m' dbar^m' u = A / 4^m'`.
pub fn m_laplace(
    mp: usize,
    n: usize,
    a: impl Fn(C64, &[C64], &mut [C64]) + Send + Sync + 'static,
) -> Result<RhsSystem> {
    let scale = 4f64.powi(mp as i32);
    Ok(RhsSystem::new("m_laplace", mp, mp, n, move |z, jet, out| {
        a(z, jet, out);
        out.iter_mut().for_each(|v| *v /= scale);
    })?
    .real()?
    .with_residual_scale(scale))
}

/// `d^m f = H(z, f, ..., d^(m-1) f)` with `H` free of conjugates.
pub fn holomorphic_system(
    name: &str,
    m: usize,
    n: usize,
    h: impl Fn(C64, &[C64], &mut [C64]) + Send + Sync + 'static,
) -> Result<RhsSystem> {
    RhsSystem::new(name, m, 0, n, h)?.holomorphic()
}

/// `-Gamma^i_jk(u) d u^j dbar u^k`.
pub fn harmonic_map(chart: Arc<MetricChart>) -> Result<RhsSystem> {
    let n = chart.n;
    let e = jet_len(2);
    let (d, db) = (jet_index(1, 0), jet_index(0, 1));
    let flat = chart.is_flat();
    let radius = chart.inner_radius();
    let name = format!("harmonic_map({})", chart.name);
    let sys = RhsSystem::new(name, 1, 1, n, move |_, jet, out| {
        if flat {
            out.fill(ZERO);
            return;
        }
        let w: Vec<f64> = (0..n).map(|c| jet[c * e].re).collect();
        let mut gamma = vec![0.0; n * n * n];
        chart.christoffel_into(&w, &mut gamma);
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = ZERO;
            for j in 0..n {
                for k in 0..n {
                    let g = gamma[i * n * n + j * n + k];
                    if g != 0.0 {
                        acc += jet[j * e + d] * jet[k * e + db] * g;
                    }
                }
            }
            *o = ZERO - acc;
        }
    })?;
    Ok(sys
        .with_domain(f64::INFINITY, radius, f64::INFINITY)
        .autonomous()
        .eta_m_free()
        .real()?)
}

/// Parameters for [`builtin`].
#[derive(Clone, Debug, Default)]
pub struct BuiltinParams {
    /// Constant `F` (mizohata), slope `c` of `a(u) = c u` (j_holomorphic),
    /// constant `A` (m_laplace).
    pub coefficient: Option<C64>,
    /// `m'` for m_laplace; `(mu, nu)` for zero.
    pub mu: Option<usize>,
    pub nu: Option<usize>,
    pub n: Option<usize>,
    pub chart: Option<Arc<MetricChart>>,
}

/// Builds a bundled system by name.
pub fn builtin(name: &str, p: &BuiltinParams) -> Result<RhsSystem> {
    let c = p.coefficient.unwrap_or(ZERO);
    match name {
        "zero" => zero(p.mu.unwrap_or(0), p.nu.unwrap_or(1), p.n.unwrap_or(1)),
        "conj_z" => conj_z(),
        "mizohata" => mizohata(move |_| c),
        "liouville" => liouville(),
        "director" => director(p.n.unwrap_or(3)),
        "j_holomorphic" => j_holomorphic(move |u| c * u),
        "m_laplace" => {
            let sys = m_laplace(p.mu.unwrap_or(1), p.n.unwrap_or(1), move |_, _, out| out.fill(c))?;
            Ok(sys.autonomous().eta_m_free())
        }
        "holo_linear" => holomorphic_system("holo_linear", 1, 1, |_, jet, out| out[0] = jet[0]),
        "holo_riccati" => holomorphic_system("holo_riccati", 1, 1, |_, jet, out| out[0] = jet[0] * jet[0]),
        "harmonic_map" => {
            let chart = match &p.chart {
                Some(c) => c.clone(),
                None => Arc::new(MetricChart::flat(p.n.unwrap_or(2), 1e6)?),
            };
            harmonic_map(chart)
        }
        other => Err(Error::UnknownSystem(format!(
            "'{other}' (known: {})",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mizohata_derivative_at_origin() {
        let s = mizohata(|_| ZERO).unwrap();
        let p = s.partials(ZERO, &[ZERO; 3], crate::system::Partials { z: 1e-4, eta: vec![1e-4; 2] });
        assert!((p.deta[1] + 1.0).norm() < 1e-10);
    }

    #[test]
    fn flat_harmonic_map_is_exactly_zero() {
        let s = harmonic_map(Arc::new(MetricChart::flat(2, 10.0).unwrap())).unwrap();
        let jet: Vec<C64> = (0..12).map(|k| C64::new(k as f64, 1.0)).collect();
        let mut out = [C64::new(1.0, 1.0); 2];
        s.eval(ZERO, &jet, &mut out);
        assert!(out.iter().all(|v| v.re.to_bits() == 0 && v.im.to_bits() == 0));
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(matches!(builtin("nope", &BuiltinParams::default()), Err(Error::UnknownSystem(_))));
        for name in BUILTIN_NAMES {
            builtin(name, &BuiltinParams::default()).unwrap();
        }
    }
}
