//! The `L²` metric on the space of all Riemannian metrics, its geodesics,
//! and the projection `g ↦ dV_g` onto volume forms.

use nalgebra::DMatrix;

use crate::density::{Density, QuadraticCrossing};
use crate::error::{CoreError, Result};
use crate::grid::{pairwise_sum, same_grid, Grid, ScalarField};
use crate::tensor::{min_eigenvalue, pointwise_trace, pointwise_trace_pair, Metric, SymTensorField};

/// `∫ tr(g⁻¹h g⁻¹k) dV_g`.
pub fn ebin_inner(g: &Metric, h: &SymTensorField, k: &SymTensorField) -> Result<f64> {
    let t = pointwise_trace_pair(g, h, k)?;
    Ok(t.integral_weighted(g.volume_ratio()))
}

pub fn ebin_norm(g: &Metric, h: &SymTensorField) -> Result<f64> {
    Ok(ebin_inner(g, h, h)?.max(0.0).sqrt())
}

/// Time-sampled path of metrics.
#[derive(Debug, Clone)]
pub struct MetricPath {
    grid: Grid,
    times: Vec<f64>,
    metrics: Vec<SymTensorField>,
    velocities: Option<Vec<SymTensorField>>,
    generator: String,
}

impl MetricPath {
    pub fn new(
        times: Vec<f64>,
        metrics: Vec<SymTensorField>,
        velocities: Option<Vec<SymTensorField>>,
        generator: impl Into<String>,
    ) -> Result<Self> {
        if times.is_empty() || times.len() != metrics.len() {
            return Err(CoreError::InvalidInput(
                "path needs one metric per time sample".into(),
            ));
        }
        if let Some(v) = &velocities {
            if v.len() != times.len() {
                return Err(CoreError::InvalidInput(
                    "path needs one velocity per time sample".into(),
                ));
            }
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CoreError::InvalidInput("times must increase strictly".into()));
        }
        let grid = metrics[0].grid().clone();
        for (j, m) in metrics.iter().enumerate() {
            same_grid(&grid, m.grid())?;
            if let Err(CoreError::Singular { node, .. }) = Metric::new(m.clone()) {
                return Err(CoreError::Degenerate {
                    time: times[j],
                    node,
                });
            }
        }
        Ok(Self {
            grid,
            times,
            metrics,
            velocities,
            generator: generator.into(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn metrics(&self) -> &[SymTensorField] {
        &self.metrics
    }

    pub fn velocities(&self) -> Option<&[SymTensorField]> {
        self.velocities.as_deref()
    }

    pub fn generator(&self) -> &str {
        &self.generator
    }

    pub fn first(&self) -> &SymTensorField {
        &self.metrics[0]
    }

    pub fn last(&self) -> &SymTensorField {
        &self.metrics[self.metrics.len() - 1]
    }

    /// Volume forms along the path.
    pub fn volume_forms(&self) -> Result<Vec<Density>> {
        self.metrics
            .iter()
            .map(|m| Ok(crate::tensor::riemannian_volume(&Metric::new(m.clone())?)))
            .collect()
    }
}

fn geodesic_rhs(g: &DMatrix<f64>, k: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let ginv = g.clone().cholesky()?.inverse();
    let a = &ginv * k;
    let tr_a = a.trace();
    let tr_a2 = (&a * &a).trace();
    Some(k * &a + g * (0.25 * tr_a2) - k * (0.5 * tr_a))
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Time at which the node volume `(1 + ta/4)² + (n/8)bt²` vanishes, with
/// `a = tr(g⁻¹h)` and `b = tr((g⁻¹h₀)²)`. Only a purely conformal node with
/// `a < 0` has a real root, a double one at `t = −4/a`.
fn collapse_time(g0: &DMatrix<f64>, h: &DMatrix<f64>) -> Option<f64> {
    let m = g0.clone().cholesky()?.inverse() * h;
    let a = m.trace();
    let b = (&m * &m).trace() - a * a / g0.nrows() as f64;
    let scale = (&m * &m).trace().max(f64::MIN_POSITIVE);
    (a < 0.0 && b <= 1e-12 * scale).then(|| -4.0 / a)
}

/// Cheap lower bound on the smallest eigenvalue of an SPD matrix,
/// `det / tr^(d−1)`.
fn min_eigenvalue_bound(g: &DMatrix<f64>) -> f64 {
    let d = g.nrows() as i32;
    g.determinant() / g.trace().powi(d - 1)
}

/// Classical RK4 on `(g, g_t)`, keeping the steps for which `keep` holds.
fn rk4_node(
    g0: &DMatrix<f64>,
    h: &DMatrix<f64>,
    dt: f64,
    steps: usize,
    node: usize,
    keep: impl Fn(usize) -> bool,
) -> Result<Vec<(DMatrix<f64>, DMatrix<f64>)>> {
    if let Some(t) = collapse_time(g0, h) {
        if t <= dt * steps as f64 {
            return Err(CoreError::Degenerate { time: t, node });
        }
    }
    let floor = 1e-8 * min_eigenvalue(g0);
    let mut out = Vec::new();
    let (mut g, mut k) = (g0.clone(), h.clone());
    if keep(0) {
        out.push((g.clone(), k.clone()));
    }
    let degenerate = |s: usize| CoreError::Degenerate {
        time: s as f64 * dt,
        node,
    };
    for s in 1..=steps {
        let f = |g: &DMatrix<f64>, k: &DMatrix<f64>| geodesic_rhs(g, k).ok_or_else(|| degenerate(s));
        let a1 = f(&g, &k)?;
        let (g2, k2) = (&g + &k * (0.5 * dt), &k + &a1 * (0.5 * dt));
        let a2 = f(&g2, &k2)?;
        let (g3, k3) = (&g + &k2 * (0.5 * dt), &k + &a2 * (0.5 * dt));
        let a3 = f(&g3, &k3)?;
        let (g4, k4) = (&g + &k3 * dt, &k + &a3 * dt);
        let a4 = f(&g4, &k4)?;
        g += (&k + &k2 * 2.0 + &k3 * 2.0 + &k4) * (dt / 6.0);
        k += (&a1 + &a2 * 2.0 + &a3 * 2.0 + &a4) * (dt / 6.0);
        symmetrize(&mut g);
        symmetrize(&mut k);
        if min_eigenvalue_bound(&g) < floor && min_eigenvalue(&g) < floor {
            return Err(degenerate(s));
        }
        if keep(s) {
            out.push((g.clone(), k.clone()));
        }
    }
    Ok(out)
}

/// Integrates every node, keeping the steps selected by `keep`. Returns the
/// per-node trajectories, or the earliest degeneration.
fn integrate_nodes(
    g0: &SymTensorField,
    h: &SymTensorField,
    dt: f64,
    steps: usize,
    keep: impl Fn(usize) -> bool + Copy,
) -> Result<Vec<Vec<(DMatrix<f64>, DMatrix<f64>)>>> {
    let mut per_node = Vec::with_capacity(g0.grid().len());
    let mut earliest: Option<(f64, usize)> = None;
    for node in 0..g0.grid().len() {
        match rk4_node(g0.at(node), h.at(node), dt, steps, node, keep) {
            Ok(tr) => per_node.push(tr),
            Err(CoreError::Degenerate { time, node }) => {
                if earliest.is_none_or(|(t0, _)| time < t0) {
                    earliest = Some((time, node));
                }
            }
            Err(e) => return Err(e),
        }
    }
    match earliest {
        Some((time, node)) => Err(CoreError::Degenerate { time, node }),
        None => Ok(per_node),
    }
}

/// Geodesic with `g(0) = g₀`, `g_t(0) = h`, sampled at `steps + 1` equally spaced times.
///
/// The equation is pointwise, so every node is integrated independently. A
/// node that collapses conformally, or whose smallest eigenvalue drops below
/// `1e-8` of its initial value, aborts the run with the earliest such time.
pub fn ebin_geodesic(
    g0: &SymTensorField,
    h: &SymTensorField,
    t_end: f64,
    steps: usize,
) -> Result<MetricPath> {
    same_grid(g0.grid(), h.grid())?;
    Metric::new(g0.clone())?;
    if steps == 0 || !(t_end > 0.0) {
        return Err(CoreError::InvalidInput("need t_end > 0 and at least one step".into()));
    }
    let grid = g0.grid().clone();
    let dt = t_end / steps as f64;
    let per_node = integrate_nodes(g0, h, dt, steps, |_| true)?;
    let mut metrics = Vec::with_capacity(steps + 1);
    let mut velocities = Vec::with_capacity(steps + 1);
    for s in 0..=steps {
        let gs = per_node.iter().map(|tr| tr[s].0.clone()).collect();
        let ks = per_node.iter().map(|tr| tr[s].1.clone()).collect();
        metrics.push(SymTensorField::from_vec_unchecked(&grid, gs));
        velocities.push(SymTensorField::from_vec_unchecked(&grid, ks));
    }
    let times = (0..=steps).map(|s| s as f64 * dt).collect();
    Ok(MetricPath {
        grid,
        times,
        metrics,
        velocities: Some(velocities),
        generator: "ebin-geodesic-rk4".into(),
    })
}

/// Observed order of the endpoint error under step halving, from runs with
/// `steps`, `2·steps` and `4·steps`.
pub fn richardson_order(g0: &SymTensorField, h: &SymTensorField, t_end: f64, steps: usize) -> Result<f64> {
    let ends: Vec<SymTensorField> = [steps, 2 * steps, 4 * steps]
        .iter()
        .map(|&s| Ok(ebin_geodesic(g0, h, t_end, s)?.last().clone()))
        .collect::<Result<_>>()?;
    let e1 = ends[0].sub(&ends[1])?.sup_norm();
    let e2 = ends[1].sub(&ends[2])?.sup_norm();
    Ok((e1 / e2).log2())
}

/// Trace-free part `h₀ = h − (1/2n) tr(g⁻¹h) g`.
pub fn traceless_part(g: &Metric, h: &SymTensorField) -> Result<SymTensorField> {
    let (_, hh) = tangent_split(g, h)?;
    h.sub(&hh)
}

/// `μ(t) = ((1 + (t/4)tr(g⁻¹h))² + (n/8) tr((g⁻¹h₀)²) t²) μ(0)` along the geodesic.
pub fn volume_along_geodesic(g0: &Metric, h: &SymTensorField, t: f64) -> Result<Density> {
    let n = g0.grid().complex_dim() as f64;
    let tr = pointwise_trace(g0, h)?;
    let h0 = traceless_part(g0, h)?;
    let tr2 = pointwise_trace_pair(g0, &h0, &h0)?;
    let ratio = g0
        .volume_ratio()
        .iter()
        .zip(tr.values())
        .zip(tr2.values())
        .map(|((v, a), b)| {
            let s = 1.0 + 0.25 * t * a;
            (s * s + n / 8.0 * b * t * t) * v
        })
        .collect();
    Density::new(g0.grid(), ratio)
}

/// Coefficients `[c₀, c₁, c₂]` of `Vol(g(t))` from the closed form.
pub fn volume_polynomial(g0: &Metric, h: &SymTensorField) -> Result<[f64; 3]> {
    let n = g0.grid().complex_dim() as f64;
    let tr = pointwise_trace(g0, h)?;
    let h0 = traceless_part(g0, h)?;
    let tr2 = pointwise_trace_pair(g0, &h0, &h0)?;
    let w = g0.volume_ratio();
    let c0 = ScalarField::constant(g0.grid(), 1.0).integral_weighted(w);
    let c1 = 0.5 * tr.integral_weighted(w);
    let c2 = tr
        .zip_with(&tr2, |a, b| a * a / 16.0 + n / 8.0 * b)?
        .integral_weighted(w);
    Ok([c0, c1, c2])
}

/// Least-squares quadratic through `(t_j, y_j)`; returns coefficients and the
/// largest absolute residual.
pub fn fit_quadratic(t: &[f64], y: &[f64]) -> ([f64; 3], f64) {
    let a = DMatrix::from_fn(t.len(), 3, |i, j| t[i].powi(j as i32));
    let b = nalgebra::DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let c = svd.solve(&b, 1e-14).expect("svd with both factors");
    let resid = (&a * &c - &b).amax();
    ([c[0], c[1], c[2]], resid)
}

#[derive(Debug, Clone)]
pub struct IntersectionResult {
    pub crossing: QuadraticCrossing,
    pub fitted: [f64; 3],
    pub analytic: [f64; 3],
    /// Largest residual of the 5-point fit, relative to the initial volume.
    pub fit_residual: f64,
    /// `∫ tr(g⁻¹h) dV_g`.
    pub first_variation: f64,
}

fn sample_volumes(g0: &SymTensorField, h: &SymTensorField, t_end: f64, steps: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    same_grid(g0.grid(), h.grid())?;
    if !(t_end > 0.0) {
        return Err(CoreError::InvalidInput("need t_end > 0".into()));
    }
    let steps = steps.max(1).div_ceil(4) * 4;
    let dt = t_end / steps as f64;
    let per_node = integrate_nodes(g0, h, dt, steps, |s| s % (steps / 4) == 0)?;
    let mut ts = Vec::with_capacity(5);
    let mut vs = Vec::with_capacity(5);
    for j in 0..5 {
        let gs = per_node.iter().map(|tr| tr[j].0.clone()).collect();
        ts.push((j * steps / 4) as f64 * dt);
        vs.push(Metric::new(SymTensorField::from_vec_unchecked(g0.grid(), gs))?.volume());
    }
    Ok((ts, vs))
}

/// Times at which the geodesic from `g₀` in direction `h` has the initial
/// total volume, from a 5-sample quadratic fit of the integrated path.
pub fn volume_level_crossings(
    g0: &SymTensorField,
    h: &SymTensorField,
    t_end: f64,
    steps: usize,
) -> Result<IntersectionResult> {
    let metric = Metric::new(g0.clone())?;
    let (ts, vs) = sample_volumes(g0, h, t_end, steps)?;
    let (fitted, resid) = fit_quadratic(&ts, &vs);
    let v0 = metric.volume();
    let analytic = volume_polynomial(&metric, h)?;
    let first_variation = pointwise_trace(&metric, h)?.integral_weighted(metric.volume_ratio());
    Ok(IntersectionResult {
        crossing: QuadraticCrossing::solve(fitted, v0, 1e-12),
        fitted,
        analytic,
        fit_residual: resid / v0,
        first_variation,
    })
}

/// Intersections of the geodesic through a Kähler metric, in a Kähler
/// direction, with the Kähler class.
///
/// The direction must be J-invariant with `∫ tr(g⁻¹h) dV_g = 0`. The linear
/// volume term then vanishes, so the two intersections counted with
/// multiplicity are a double root at `t = 0` (`crossing.tangential`).
pub fn kahler_intersections(
    g0: &SymTensorField,
    h: &SymTensorField,
    t_end: f64,
    steps: usize,
) -> Result<IntersectionResult> {
    let metric = Metric::new(g0.clone())?;
    let scale = h.sup_norm().max(1e-300);
    let defect = h.j_defect();
    if defect > 1e-10 * scale {
        return Err(CoreError::NotJInvariant { node: 0, defect });
    }
    let tr = pointwise_trace(&metric, h)?;
    let mean = tr.integral_weighted(metric.volume_ratio());
    let abs = tr.map(f64::abs).integral_weighted(metric.volume_ratio());
    if mean.abs() > 1e-9 * abs.max(1e-300) {
        return Err(CoreError::NotTangent {
            mean_trace: mean / metric.volume(),
        });
    }
    volume_level_crossings(g0, h, t_end, steps)
}

/// `π(g) = dV_g`.
pub fn submersion_pi(g: &Metric) -> Density {
    crate::tensor::riemannian_volume(g)
}

/// `dπ_g h = ½ tr(g⁻¹h) dV_g`, as a ratio against the reference measure.
pub fn submersion_differential(g: &Metric, h: &SymTensorField) -> Result<ScalarField> {
    let tr = pointwise_trace(g, h)?;
    Ok(ScalarField::from_vec_unchecked(
        g.grid(),
        tr.values()
            .iter()
            .zip(g.volume_ratio())
            .map(|(t, v)| 0.5 * t * v)
            .collect(),
    ))
}

/// Splits `h` into its trace-free (vertical) and pure-trace (horizontal) parts.
pub fn tangent_split(g: &Metric, h: &SymTensorField) -> Result<(SymTensorField, SymTensorField)> {
    let dim = g.grid().tensor_dim() as f64;
    let tr = pointwise_trace(g, h)?;
    let horizontal = g.field().scale_by(&tr.scale(1.0 / dim))?;
    let vertical = h.sub(&horizontal)?;
    Ok((vertical, horizontal))
}

/// Levi-Civita connection of the `L²` metric for constant fields `h`, `k`:
/// `−½hg⁻¹k − ½kg⁻¹h − ¼tr(g⁻¹hg⁻¹k)g + ¼tr(g⁻¹h)k + ¼tr(g⁻¹k)h`.
pub fn ebin_connection(g: &Metric, h: &SymTensorField, k: &SymTensorField) -> Result<SymTensorField> {
    same_grid(g.grid(), h.grid())?;
    same_grid(g.grid(), k.grid())?;
    let values = (0..g.grid().len())
        .map(|i| {
            let gm = g.field().at(i);
            let (hm, km) = (h.at(i), k.at(i));
            let gi = g.inverse(i);
            let gh = gi * hm;
            let gk = gi * km;
            let t_hk = (&gh * &gk).trace();
            let mut m = -(hm * &gk) * 0.5 - (km * &gh) * 0.5 - gm * (0.25 * t_hk)
                + km * (0.25 * gh.trace())
                + hm * (0.25 * gk.trace());
            symmetrize(&mut m);
            m
        })
        .collect();
    Ok(SymTensorField::from_vec_unchecked(g.grid(), values))
}

fn is_uniform(t: &[f64]) -> bool {
    if t.len() < 3 {
        return true;
    }
    let d = t[1] - t[0];
    t.windows(2).all(|w| ((w[1] - w[0]) - d).abs() <= 1e-12 * d.abs())
}

/// Composite Simpson rule on uniform samples with an odd count, trapezoid otherwise.
pub fn integrate_samples(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len();
    if n < 2 {
        return 0.0;
    }
    if n % 2 == 1 && n >= 3 && is_uniform(t) {
        let h = (t[n - 1] - t[0]) / (n - 1) as f64;
        let terms: Vec<f64> = (0..n)
            .map(|i| {
                let c = if i == 0 || i == n - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * y[i]
            })
            .collect();
        return pairwise_sum(&terms) * h / 3.0;
    }
    let terms: Vec<f64> = t
        .windows(2)
        .zip(y.windows(2))
        .map(|(tw, yw)| 0.5 * (tw[1] - tw[0]) * (yw[0] + yw[1]))
        .collect();
    pairwise_sum(&terms)
}

/// Length `∫ √(g_E(ġ, ġ)) dt`.
///
/// Uses the stored velocities when present; otherwise sums midpoint chords
/// `‖g_{j+1} − g_j‖` measured at `(g_j + g_{j+1})/2`.
pub fn path_length_ebin(path: &MetricPath) -> Result<f64> {
    if path.times.len() < 2 {
        return Ok(0.0);
    }
    match &path.velocities {
        Some(vel) => {
            let speeds = path
                .metrics
                .iter()
                .zip(vel)
                .map(|(g, k)| ebin_norm(&Metric::new(g.clone())?, k))
                .collect::<Result<Vec<f64>>>()?;
            Ok(integrate_samples(&path.times, &speeds))
        }
        None => {
            let mut parts = Vec::with_capacity(path.times.len() - 1);
            for w in path.metrics.windows(2) {
                let mid = Metric::new(w[0].add(&w[1])?.scale(0.5))?;
                parts.push(ebin_norm(&mid, &w[1].sub(&w[0])?)?);
            }
            Ok(pairwise_sum(&parts))
        }
    }
}

/// Length of the projected path `t ↦ dV_{g(t)}` under the pairing on all
/// volume forms, as the sum of exact chord distances between samples.
pub fn projected_length(path: &MetricPath) -> Result<f64> {
    let forms = path.volume_forms()?;
    let parts = forms
        .windows(2)
        .map(|w| crate::density::dtilde_v_distance(&w[0], &w[1]))
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&parts))
}
