//! Riemannian metrics on a coordinate box and their Christoffel symbols.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Writes `g_ij(w)` row-major into an `n * n` slice.
pub type MetricFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
/// Writes `Gamma^i_jk(w)` at `i * n * n + j * n + k`.
pub type ChristoffelFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

const SPOT_CHECKS: usize = 100;
const MAX_CONDITION: f64 = 1e12;

#[derive(Clone)]
pub struct MetricChart {
    pub name: String,
    pub n: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub fd_step: f64,
    metric: MetricFn,
    christoffel: Option<ChristoffelFn>,
    flat: bool,
}

impl std::fmt::Debug for MetricChart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MetricChart")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .field("fd_step", &self.fd_step)
            .finish_non_exhaustive()
    }
}

fn condition(g: &[f64], n: usize) -> f64 {
    let eig = DMatrix::from_row_slice(n, n, g).symmetric_eigen();
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e.abs())));
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

impl MetricChart {
    /// Validates symmetry and positive definiteness at fixed-seed samples.
    pub fn new(
        name: impl Into<String>,
        n: usize,
        lo: Vec<f64>,
        hi: Vec<f64>,
        metric: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        if n == 0 || lo.len() != n || hi.len() != n || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::ChartTable(format!("invalid box {lo:?} .. {hi:?} for dimension {n}")));
        }
        let chart = Self {
            name: name.into(),
            n,
            fd_step: 1e-5 * lo.iter().zip(&hi).map(|(a, b)| b - a).fold(f64::INFINITY, f64::min).min(1e5),
            lo,
            hi,
            metric: Arc::new(metric),
            christoffel: None,
            flat: false,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0xc4a7);
        let mut g = vec![0.0; n * n];
        for s in 0..SPOT_CHECKS {
            let w: Vec<f64> = if s == 0 {
                chart.lo.iter().zip(&chart.hi).map(|(a, b)| 0f64.clamp(*a, *b)).collect()
            } else {
                chart.lo.iter().zip(&chart.hi).map(|(a, b)| rng.gen_range(*a..*b)).collect()
            };
            (chart.metric)(&w, &mut g);
            for i in 0..n {
                for j in 0..i {
                    let (a, b) = (g[i * n + j], g[j * n + i]);
                    if (a - b).abs() > 1e-12 * (a.abs() + b.abs()).max(1.0) {
                        return Err(Error::ChartTable(format!("metric not symmetric at {w:?}")));
                    }
                }
            }
            let cond = condition(&g, n);
            if !(cond <= MAX_CONDITION) {
                return Err(Error::SingularMetric { w, cond });
            }
        }
        Ok(chart)
    }

    pub fn with_christoffel(mut self, f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.christoffel = Some(Arc::new(f));
        self
    }

    /// Identity metric on `[-half, half]^n`.
    pub fn flat(n: usize, half: f64) -> Result<Self> {
        let mut c = Self::new("flat", n, vec![-half; n], vec![half; n], move |_, g| {
            g.iter_mut().enumerate().for_each(|(k, v)| *v = if k % (n + 1) == 0 { 1.0 } else { 0.0 })
        })?
        .with_christoffel(|_, out| out.iter_mut().for_each(|v| *v = 0.0));
        c.flat = true;
        Ok(c)
    }

    /// Round sphere in stereographic coordinates, `g = lambda^2 I` with
    /// `lambda = 2 / (1 + |w|^2)`.
    pub fn sphere(half: f64) -> Result<Self> {
        Ok(Self::new("sphere", 2, vec![-half; 2], vec![half; 2], |w, g| {
            let l = 2.0 / (1.0 + w[0] * w[0] + w[1] * w[1]);
            g.copy_from_slice(&[l * l, 0.0, 0.0, l * l]);
        })?
        .with_christoffel(|w, out| conformal_christoffel(2, w, out)))
    }

    /// Table with columns `w_1..w_n, g_11, g_12, ..., g_nn` on a full
    /// tensor grid, interpolated multilinearly.
    pub fn from_csv(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::ChartTable("empty table".into()))?
            .split(',')
            .map(str::trim)
            .collect();
        let n = (1..=8)
            .find(|n| n + n * n == header.len())
            .ok_or_else(|| Error::ChartTable(format!("{} columns do not fit w_1..w_n, g_11..g_nn", header.len())))?;
        for (k, h) in header.iter().enumerate() {
            let want = if k < n {
                format!("w_{}", k + 1)
            } else {
                let q = k - n;
                format!("g_{}{}", q / n + 1, q % n + 1)
            };
            if *h != want {
                return Err(Error::ChartTable(format!("column {} is '{h}', expected '{want}'", k + 1)));
            }
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (ln, line) in lines.enumerate() {
            let vals = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::ChartTable(format!("row {}: {e}", ln + 2)))?;
            if vals.len() != header.len() {
                return Err(Error::ChartTable(format!("row {} has {} values", ln + 2, vals.len())));
            }
            rows.push(vals);
        }
        let axes: Vec<Vec<f64>> = (0..n)
            .map(|a| {
                let mut v: Vec<f64> = rows.iter().map(|r| r[a]).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            })
            .collect();
        let total: usize = axes.iter().map(Vec::len).product();
        if total != rows.len() || axes.iter().any(|a| a.len() < 2) {
            return Err(Error::ChartTable(format!(
                "{} rows do not form a tensor grid with at least two nodes per axis",
                rows.len()
            )));
        }
        let nn = n * n;
        let mut table = vec![f64::NAN; total * nn];
        for r in &rows {
            let mut flat = 0;
            for a in 0..n {
                let i = axes[a].binary_search_by(|x| x.total_cmp(&r[a])).expect("own value");
                flat = flat * axes[a].len() + i;
            }
            table[flat * nn..(flat + 1) * nn].copy_from_slice(&r[n..]);
        }
        let lo = axes.iter().map(|a| a[0]).collect();
        let hi = axes.iter().map(|a| a[a.len() - 1]).collect();
        let axes = Arc::new(axes);
        let table = Arc::new(table);
        Self::new(name, n, lo, hi, move |w, g| multilinear(&axes, &table, nn, w, g))
    }

    pub fn is_flat(&self) -> bool {
        self.flat
    }

    pub fn metric_at(&self, w: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.n * self.n];
        (self.metric)(w, &mut g);
        g
    }

    /// Largest ball about the origin that stays a finite-difference step
    /// inside the box.
    pub fn inner_radius(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (-a).min(*b))
            .fold(f64::INFINITY, f64::min)
            - self.fd_step
    }

    /// `Gamma^i_jk(w)`, checked against the box and the metric conditioning.
    pub fn christoffel(&self, w: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: w.len(),
            });
        }
        let h = self.fd_step;
        if w.iter().zip(self.lo.iter().zip(&self.hi)).any(|(x, (a, b))| *x < a + h || *x > b - h) {
            return Err(Error::OutsideDomain(format!("{w:?} is not inside the chart box minus one step")));
        }
        let g = self.metric_at(w);
        let cond = condition(&g, self.n);
        if !(cond <= MAX_CONDITION) {
            return Err(Error::SingularMetric { w: w.to_vec(), cond });
        }
        let mut out = vec![0.0; self.n.pow(3)];
        self.christoffel_into(w, &mut out);
        Ok(out)
    }

    /// Unchecked evaluation for hot loops.
    pub fn christoffel_into(&self, w: &[f64], out: &mut [f64]) {
        if let Some(f) = &self.christoffel {
            return f(w, out);
        }
        let n = self.n;
        let nn = n * n;
        let h = self.fd_step;
        // dg[l * nn + i * n + j] = d_l g_ij
        let mut dg = vec![0.0; n * nn];
        let mut wp = w.to_vec();
        let (mut gp, mut gm) = (vec![0.0; nn], vec![0.0; nn]);
        for l in 0..n {
            wp[l] = w[l] + h;
            (self.metric)(&wp, &mut gp);
            wp[l] = w[l] - h;
            (self.metric)(&wp, &mut gm);
            wp[l] = w[l];
            for k in 0..nn {
                dg[l * nn + k] = (gp[k] - gm[k]) / (2.0 * h);
            }
        }
        let g = self.metric_at(w);
        let inv = DMatrix::from_row_slice(n, n, &g)
            .try_inverse()
            .unwrap_or_else(|| DMatrix::from_element(n, n, f64::NAN));
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += inv[(i, l)] * (dg[j * nn + l * n + k] + dg[k * nn + j * n + l] - dg[l * nn + j * n + k]);
                    }
                    out[i * nn + j * n + k] = 0.5 * s;
                }
            }
        }
    }
}

/// Christoffel symbols of `(2 / (1 + |w|^2))^2 I` in closed form.
pub fn conformal_christoffel(n: usize, w: &[f64], out: &mut [f64]) {
    let s = 1.0 + w.iter().map(|x| x * x).sum::<f64>();
    let dlog: Vec<f64> = w.iter().map(|x| -2.0 * x / s).collect();
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                out[k * n * n + i * n + j] = d(i, k) * dlog[j] + d(j, k) * dlog[i] - d(i, j) * dlog[k];
            }
        }
    }
}

fn multilinear(axes: &[Vec<f64>], table: &[f64], nn: usize, w: &[f64], out: &mut [f64]) {
    let n = axes.len();
    let mut cell = Vec::with_capacity(n);
    for (a, ax) in axes.iter().enumerate() {
        let x = w[a].clamp(ax[0], ax[ax.len() - 1]);
        let i = ax.partition_point(|v| *v <= x).clamp(1, ax.len() - 1) - 1;
        cell.push((i, (x - ax[i]) / (ax[i + 1] - ax[i])));
    }
    out.iter_mut().for_each(|v| *v = 0.0);
    for corner in 0..(1usize << n) {
        let mut weight = 1.0;
        let mut flat = 0;
        for a in 0..n {
            let up = (corner >> a) & 1;
            let (i, t) = cell[a];
            weight *= if up == 1 { t } else { 1.0 - t };
            flat = flat * axes[a].len() + i + up;
        }
        if weight != 0.0 {
            for k in 0..nn {
                out[k] += weight * table[flat * nn + k];
            }
        }
    }
}
