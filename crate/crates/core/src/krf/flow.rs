//! Normalized Kähler–Ricci flow of S¹-invariant metrics on the 2-sphere.
//!
//! A metric is `ω_φ = F ω` with `F = 1 + ½Δφ` against the round unit sphere
//! (`Ric ω = ω`, `V = 4π`). The potential flow
//! `φ̇ = log F − f_ω + φ − a(t)` acts on `F` as `Ḟ = ½Δ log F + F − 1 = F(1 − s)`,
//! independently of the constant `a(t)`. We evolve `F` with Crank–Nicolson and
//! recover `φ = 2Δ⁻¹(F − 1)` in the gauge `∫ φ ω = 0`.

use std::path::Path;

use nalgebra::{DMatrix, DVector, LU};
use serde::Serialize;

use crate::density::Density;
use crate::error::{CoreError, Result};
use crate::grid::{pairwise_sum, Grid, ScalarField, Topology};
use crate::io::write_table;
use crate::kahler::KahlerPotential;
use crate::krf::sphere::SphereOps;
use crate::report::Report;

/// Convergence threshold on the terminal `‖s − 1‖_∞`.
pub const CURVATURE_THRESHOLD: f64 = 1e-3;
/// Convergence threshold on the terminal `‖Ḟ‖_{L¹}`, per unit time.
pub const INCREMENT_THRESHOLD: f64 = 1e-8;
/// Largest admissible geometric tail of the length integral past the last sample.
pub const TAIL_THRESHOLD: f64 = 1e-6;
/// Curvature values below this are treated as round-off in the rate fit.
pub const FIT_FLOOR: f64 = 1e-9;

fn sphere_ops(grid: &Grid) -> Result<&SphereOps> {
    grid.sphere_ops()
}

fn weighted(grid: &Grid, f: impl Fn(usize) -> f64) -> f64 {
    let terms: Vec<f64> = grid.weights().iter().enumerate().map(|(i, w)| w * f(i)).collect();
    pairwise_sum(&terms)
}

/// An axisymmetric Kähler metric on the sphere, stored by its gauge-fixed potential.
#[derive(Debug, Clone)]
pub struct SymmetricSphereMetric {
    potential: KahlerPotential,
}

impl SymmetricSphereMetric {
    pub fn new(phi: ScalarField) -> Result<Self> {
        if phi.grid().topology() != Topology::SphereAxisym {
            return Err(CoreError::Unsupported {
                op: "Kähler–Ricci flow",
                topology: phi.grid().topology().to_string(),
            });
        }
        Ok(Self {
            potential: KahlerPotential::new(phi)?.gauge_fixed(),
        })
    }

    /// `φ₀ = amplitude · P_l(cos θ)`.
    pub fn mode(grid: &Grid, l: usize, amplitude: f64) -> Result<Self> {
        let mut coeffs = vec![0.0; l + 1];
        coeffs[l] = amplitude;
        Self::new(crate::sampling::legendre_series(grid, &coeffs))
    }

    /// Random smooth data with `sup |F − 1| = amplitude`.
    pub fn random(grid: &Grid, rng: &mut rand_chacha::ChaCha8Rng, amplitude: f64) -> Result<Self> {
        let f = crate::sampling::random_field(grid, rng);
        let lap = crate::kahler::reference_laplacian(&f)?;
        let top = lap.sup_norm();
        Self::new(if top > 0.0 { f.scale(amplitude / top) } else { f })
    }

    pub fn potential(&self) -> &KahlerPotential {
        &self.potential
    }

    pub fn grid(&self) -> &Grid {
        self.potential.grid()
    }

    /// `F = ω_φ / ω`.
    pub fn ratio(&self) -> &[f64] {
        self.potential.metric().volume_ratio()
    }
}

fn curvature_from_ratio(ops: &SphereOps, ratio: &[f64]) -> Vec<f64> {
    let logs: Vec<f64> = ratio.iter().map(|f| f.ln()).collect();
    let lap = ops.laplace_beltrami(&logs);
    ratio
        .iter()
        .zip(&lap)
        .map(|(f, l)| (1.0 - 0.5 * l) / f)
        .collect()
}

/// `s = tr_{ω_φ} Ric ω_φ = (1 − ½Δ log F)/F`.
pub fn scalar_curvature(metric: &SymmetricSphereMetric) -> Result<ScalarField> {
    let ops = sphere_ops(metric.grid())?;
    ScalarField::new(metric.grid(), curvature_from_ratio(ops, metric.ratio()))
}

/// `f` with `i∂∂̄f = Ric ω_φ − ω_φ`, normalized by `(1/V)∫ e^f ω_φ = 1`.
pub fn ricci_potential(metric: &SymmetricSphereMetric) -> Result<ScalarField> {
    let grid = metric.grid();
    let ops = sphere_ops(grid)?;
    let ratio = metric.ratio();
    let s = curvature_from_ratio(ops, ratio);
    // ½Δf = F(s − 1)
    let rhs: Vec<f64> = ratio.iter().zip(&s).map(|(f, s)| f * (s - 1.0)).collect();
    let vol = grid.volume();
    let mean = weighted(grid, |i| rhs[i]) / vol;
    if mean.abs() > 1e-9 {
        return Err(CoreError::NotMeanZero { relative_mean: mean });
    }
    let rhs: Vec<f64> = rhs.iter().map(|v| 2.0 * (v - mean)).collect();
    let f = ops.solve_laplace_beltrami(&rhs);
    let shift = (weighted(grid, |i| f[i].exp() * ratio[i]) / vol).ln();
    ScalarField::new(grid, f.into_iter().map(|v| v - shift).collect())
}

/// Choice of the normalizing constant `a(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Gauge {
    /// `∫ φ(t) ω = 0` for all `t`.
    MeanZero,
    /// The mean-zero potential plus `c·t`.
    Drift(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct FlowControls {
    pub t_end: f64,
    pub dt0: f64,
    /// Abort once a rejected step would need a smaller step than this.
    pub dt_min: f64,
    /// Number of recorded samples, besides `t = 0`.
    pub records: usize,
    pub gauge: Gauge,
}

impl Default for FlowControls {
    fn default() -> Self {
        Self {
            t_end: 30.0,
            dt0: 1e-3,
            dt_min: 1e-9,
            records: 1000,
            gauge: Gauge::MeanZero,
        }
    }
}

/// Monitors at one recorded time.
#[derive(Debug, Clone, Serialize)]
pub struct FlowSample {
    pub t: f64,
    /// `‖s − 1‖_{L²(ω(t))}`.
    pub curvature_l2: f64,
    pub curvature_sup: f64,
    pub phi_dot_sup: f64,
    pub phi_c0: f64,
    /// `‖Ḟ‖_{L¹(ω)}`.
    pub increment_rate: f64,
    /// `∫₀ᵗ ‖s − 1‖_{L²(ω(τ))} dτ`.
    pub length: f64,
    /// Sum of `g_V` lengths of the per-step chords of the volume-form path.
    pub length_direct: f64,
    /// `∫ (s − 1) ω_φ`.
    pub curvature_integral: f64,
}

#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    grid: Grid,
    controls: FlowControls,
    samples: Vec<FlowSample>,
    potentials: Vec<ScalarField>,
    densities: Vec<Density>,
    steps: usize,
    rejected: usize,
    max_mass_drift: f64,
}

impl FlowTrajectory {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn controls(&self) -> &FlowControls {
        &self.controls
    }

    pub fn samples(&self) -> &[FlowSample] {
        &self.samples
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// Potentials `φ(t_j)` in the run's gauge.
    pub fn potentials(&self) -> &[ScalarField] {
        &self.potentials
    }

    pub fn densities(&self) -> &[Density] {
        &self.densities
    }

    pub fn last(&self) -> &FlowSample {
        self.samples.last().expect("trajectory has its initial sample")
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    /// Largest relative mass correction applied after a step.
    pub fn max_mass_drift(&self) -> f64 {
        self.max_mass_drift
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<Vec<f64>> = self
            .samples
            .iter()
            .map(|s| vec![s.t, s.curvature_l2, s.phi_dot_sup, s.phi_c0, s.length])
            .collect();
        write_table(
            path,
            &["t", "curvature_l2", "phi_dot_sup", "phi_c0", "dc_length"],
            &rows,
        )
    }
}

struct Stepper<'a> {
    ops: &'a SphereOps,
    lap: &'a DMatrix<f64>,
    n: usize,
    jacobian: Option<(LU<f64, nalgebra::Dyn, nalgebra::Dyn>, f64)>,
    steps_since_factor: usize,
}

const NEWTON_TOL: f64 = 1e-13;
const NEWTON_MAX: usize = 25;
const REFACTOR_EVERY: usize = 500;
const REFACTOR_ITERS: usize = 4;

impl<'a> Stepper<'a> {
    /// `R(F) = ½Δ log F + F − 1`.
    fn rhs(&self, f: &[f64]) -> Vec<f64> {
        let logs: Vec<f64> = f.iter().map(|v| v.ln()).collect();
        let lap = self.ops.laplace_beltrami(&logs);
        lap.iter().zip(f).map(|(l, v)| 0.5 * l + v - 1.0).collect()
    }

    fn factor(&mut self, f: &[f64], dt: f64) {
        let mut j = DMatrix::zeros(self.n, self.n);
        for c in 0..self.n {
            let scale = -0.25 * dt / f[c];
            for r in 0..self.n {
                j[(r, c)] = scale * self.lap[(r, c)];
            }
            j[(c, c)] += 1.0 - 0.5 * dt;
        }
        self.jacobian = Some((j.lu(), dt));
        self.steps_since_factor = 0;
    }

    /// One Crank–Nicolson step; `None` if Newton fails or positivity is lost.
    fn step(&mut self, f: &[f64], dt: f64) -> Option<Vec<f64>> {
        let stale = match &self.jacobian {
            Some((_, d)) => *d != dt || self.steps_since_factor >= REFACTOR_EVERY,
            None => true,
        };
        if stale {
            self.factor(f, dt);
        }
        for attempt in 0..2 {
            if let Some((x, iters)) = self.newton(f, dt) {
                self.steps_since_factor += 1;
                if iters > REFACTOR_ITERS {
                    self.factor(&x, dt);
                }
                return Some(x);
            }
            if attempt == 0 {
                self.factor(f, dt);
            }
        }
        None
    }

    fn newton(&self, f: &[f64], dt: f64) -> Option<(Vec<f64>, usize)> {
        let (lu, _) = self.jacobian.as_ref()?;
        let r0 = self.rhs(f);
        let mut x: Vec<f64> = f.iter().zip(&r0).map(|(v, r)| v + dt * r).collect();
        if x.iter().any(|v| *v <= 0.0) {
            x = f.to_vec();
        }
        for it in 1..=NEWTON_MAX {
            let rx = self.rhs(&x);
            let g: Vec<f64> = (0..self.n)
                .map(|i| x[i] - f[i] - 0.5 * dt * (rx[i] + r0[i]))
                .collect();
            let delta = lu.solve(&DVector::from_vec(g))?;
            let mut size = 0.0f64;
            for (xi, d) in x.iter_mut().zip(delta.iter()) {
                *xi -= d;
                size = size.max(d.abs());
            }
            if !size.is_finite() || x.iter().any(|v| *v <= 0.0) {
                return None;
            }
            if size <= NEWTON_TOL {
                return Some((x, it));
            }
        }
        None
    }
}

struct Monitor {
    curvature_l2: f64,
    curvature_sup: f64,
    increment_rate: f64,
    curvature_integral: f64,
}

fn monitor(grid: &Grid, ops: &SphereOps, f: &[f64]) -> Monitor {
    let s = curvature_from_ratio(ops, f);
    Monitor {
        curvature_l2: weighted(grid, |i| (s[i] - 1.0).powi(2) * f[i]).max(0.0).sqrt(),
        curvature_sup: s.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max),
        increment_rate: weighted(grid, |i| (f[i] * (1.0 - s[i])).abs()),
        curvature_integral: weighted(grid, |i| (s[i] - 1.0) * f[i]),
    }
}

/// Potential and its time derivative in the requested gauge.
fn potential_state(grid: &Grid, ops: &SphereOps, f: &[f64], t: f64, gauge: Gauge) -> (Vec<f64>, f64) {
    let vol = grid.volume();
    let rhs: Vec<f64> = f.iter().map(|v| 2.0 * (v - 1.0)).collect();
    let phi0 = ops.solve_laplace_beltrami(&rhs);
    let logs: Vec<f64> = f.iter().map(|v| v.ln()).collect();
    let mean_log = weighted(grid, |i| logs[i]) / vol;
    let c = match gauge {
        Gauge::MeanZero => 0.0,
        Gauge::Drift(c) => c,
    };
    // mean-zero part: φ̇ = log F − mean(log F) + φ
    let phi_dot_sup = logs
        .iter()
        .zip(&phi0)
        .map(|(l, p)| (l - mean_log + p + c).abs())
        .fold(0.0, f64::max);
    let phi = phi0.iter().map(|p| p + c * t).collect();
    (phi, phi_dot_sup)
}

/// Integrates the flow from `φ₀` to `controls.t_end`.
///
/// Steps that lose positivity or whose Newton iteration fails are rejected and
/// retried with half the step; the step grows back after 20 clean steps. The
/// mass `∫F ω = V` is restored after every step.
pub fn krf_integrate(initial: &SymmetricSphereMetric, controls: FlowControls) -> Result<FlowTrajectory> {
    if !(controls.t_end > 0.0) || !(controls.dt0 > 0.0) || controls.records == 0 {
        return Err(CoreError::InvalidInput("need t_end > 0, dt0 > 0 and at least one record".into()));
    }
    let grid = initial.grid().clone();
    let ops = sphere_ops(&grid)?;
    let lap = ops.laplacian_matrix();
    let vol = grid.volume();
    let mut stepper = Stepper {
        ops,
        lap,
        n: grid.len(),
        jacobian: None,
        steps_since_factor: 0,
    };

    let mut f = initial.ratio().to_vec();
    let mut t = 0.0;
    let mut dt = controls.dt0;
    let mut clean = 0usize;
    let (mut length, mut length_direct) = (0.0, 0.0);
    let mut m = monitor(&grid, ops, &f);
    let mut traj = FlowTrajectory {
        grid: grid.clone(),
        controls,
        samples: Vec::new(),
        potentials: Vec::new(),
        densities: Vec::new(),
        steps: 0,
        rejected: 0,
        max_mass_drift: 0.0,
    };
    let record = |traj: &mut FlowTrajectory, f: &[f64], t: f64, m: &Monitor, length: f64, length_direct: f64| {
        let (phi, phi_dot_sup) = potential_state(&grid, ops, f, t, controls.gauge);
        traj.samples.push(FlowSample {
            t,
            curvature_l2: m.curvature_l2,
            curvature_sup: m.curvature_sup,
            phi_dot_sup,
            phi_c0: phi.iter().map(|v| v.abs()).fold(0.0, f64::max),
            increment_rate: m.increment_rate,
            length,
            length_direct,
            curvature_integral: m.curvature_integral,
        });
        traj.potentials.push(ScalarField::from_vec_unchecked(&grid, phi));
        traj.densities.push(Density::from_ratio_unchecked(&grid, f.to_vec()));
    };
    record(&mut traj, &f, t, &m, length, length_direct);
    let spacing = controls.t_end / controls.records as f64;
    let mut next_record = spacing;

    while t < controls.t_end {
        let h = dt.min(controls.t_end - t);
        let Some(mut next) = stepper.step(&f, h) else {
            traj.rejected += 1;
            dt *= 0.5;
            clean = 0;
            if dt < controls.dt_min {
                return Err(CoreError::NumericalAbort(format!(
                    "step size fell below {:e} at t = {t}",
                    controls.dt_min
                )));
            }
            continue;
        };
        let mass = weighted(&grid, |i| next[i]);
        traj.max_mass_drift = traj.max_mass_drift.max((mass - vol).abs() / vol);
        for v in next.iter_mut() {
            *v *= vol / mass;
        }
        let chord = weighted(&grid, |i| {
            let d = next[i] - f[i];
            2.0 * d * d / (next[i] + f[i])
        });
        length_direct += chord.max(0.0).sqrt();
        let m_next = monitor(&grid, ops, &next);
        length += 0.5 * h * (m.curvature_l2 + m_next.curvature_l2);
        f = next;
        m = m_next;
        t = if controls.t_end - t - h <= 1e-12 * controls.t_end { controls.t_end } else { t + h };
        traj.steps += 1;
        clean += 1;
        if clean >= 20 && dt < controls.dt0 {
            dt = (2.0 * dt).min(controls.dt0);
            clean = 0;
        }
        if t >= next_record - 1e-12 * controls.t_end || t >= controls.t_end {
            record(&mut traj, &f, t, &m, length, length_direct);
            while next_record <= t + 1e-12 * controls.t_end {
                next_record += spacing;
            }
        }
    }
    Ok(traj)
}

/// `∫ ‖s − 1‖_{L²(ω(t))} dt` and the direct `g_V` length of the volume-form path.
pub fn dc_length_of_flow(traj: &FlowTrajectory) -> (f64, f64) {
    let last = traj.last();
    (last.length, last.length_direct)
}

/// Exponential decay rate of `‖s − 1‖_{L²}` from a log-linear fit over the
/// later half of the samples above [`FIT_FLOOR`].
pub fn fit_decay_rate(traj: &FlowTrajectory) -> Option<f64> {
    let above: Vec<&FlowSample> = traj
        .samples
        .iter()
        .filter(|s| s.t > 0.0 && s.curvature_l2 > FIT_FLOOR)
        .collect();
    let tail = &above[above.len() / 2..];
    if tail.len() < 5 {
        return None;
    }
    let n = tail.len() as f64;
    let mt = tail.iter().map(|s| s.t).sum::<f64>() / n;
    let my = tail.iter().map(|s| s.curvature_l2.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for s in tail {
        let dx = s.t - mt;
        sxy += dx * (s.curvature_l2.ln() - my);
        sxx += dx * dx;
    }
    (sxx > 0.0).then(|| -sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowStatus {
    Converged,
    /// The run ended before the thresholds were met. A finite run cannot
    /// certify divergence, so there is no third state.
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceSummary {
    pub status: FlowStatus,
    pub rate: Option<f64>,
    pub length: f64,
    pub length_direct: f64,
    /// Bound on the remaining length past the last sample, `‖s − 1‖/rate`.
    pub tail_bound: Option<f64>,
    pub finite_length: bool,
    pub c0_bound: f64,
    pub phi_dot_bound: f64,
    pub reports: Vec<Report>,
}

/// Verdict thresholds for [`convergence_report_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// On `sup|s − 1|` at the final sample.
    pub curvature: f64,
    /// On the volume-form increment rate at the final sample.
    pub increment: f64,
    /// On the bound for the length still to come.
    pub tail: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            curvature: CURVATURE_THRESHOLD,
            increment: INCREMENT_THRESHOLD,
            tail: TAIL_THRESHOLD,
        }
    }
}

/// Judges a completed run with the default thresholds.
pub fn convergence_report(traj: &FlowTrajectory) -> ConvergenceSummary {
    convergence_report_with(traj, &Thresholds::default())
}

/// Judges a completed run: terminal curvature and volume-form increments,
/// certified finiteness of the length, and the coherence of the two.
pub fn convergence_report_with(traj: &FlowTrajectory, th: &Thresholds) -> ConvergenceSummary {
    let last = traj.last();
    let stationary = traj.samples.iter().all(|s| s.curvature_l2 <= FIT_FLOOR);
    let rate = fit_decay_rate(traj);
    let tail_bound = if stationary {
        Some(last.curvature_l2)
    } else {
        rate.filter(|r| *r > 0.0).map(|r| last.curvature_l2 / r)
    };
    let finite_length = tail_bound.is_some_and(|b| b <= th.tail);
    let curvature_ok = last.curvature_sup <= th.curvature;
    let increment_ok = last.increment_rate <= th.increment;
    let status = if curvature_ok && increment_ok {
        FlowStatus::Converged
    } else {
        FlowStatus::Inconclusive
    };
    let c0_bound = traj.samples.iter().map(|s| s.phi_c0).fold(0.0, f64::max);
    let phi_dot_bound = traj.samples.iter().map(|s| s.phi_dot_sup).fold(0.0, f64::max);
    let (length, length_direct) = dc_length_of_flow(traj);
    let converged = status == FlowStatus::Converged;
    let reports = vec![
        Report::at_most("terminal volume-form increment", last.increment_rate, th.increment, 0.0),
        Report::at_most("terminal scalar curvature deviation", last.curvature_sup, th.curvature, 0.0),
        Report::verdict("potential stays bounded", c0_bound.is_finite(), c0_bound, f64::INFINITY),
        Report::at_most(
            "length tail past final sample",
            tail_bound.unwrap_or(f64::INFINITY),
            th.tail,
            0.0,
        ),
        Report::close("length by curvature and by volume-form speed", length, length_direct, 1e-4),
        Report::verdict(
            "converged exactly when length is finite",
            converged == finite_length,
            converged as u8 as f64,
            finite_length as u8 as f64,
        ),
    ];
    ConvergenceSummary {
        status,
        rate,
        length,
        length_direct,
        tail_bound,
        finite_length,
        c0_bound,
        phi_dot_bound,
        reports,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityRun {
    pub label: String,
    pub summary: ConvergenceSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilitySummary {
    /// Every run converged with finite length.
    pub consistent_with_stable: bool,
    pub runs: Vec<StabilityRun>,
}

/// Runs the flow from every initial metric and aggregates the verdicts.
pub fn cr_stability_report(
    initial: &[(String, SymmetricSphereMetric)],
    controls: FlowControls,
) -> Result<StabilitySummary> {
    let runs = initial
        .iter()
        .map(|(label, m)| {
            let traj = krf_integrate(m, controls)?;
            Ok(StabilityRun {
                label: label.clone(),
                summary: convergence_report(&traj),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let consistent_with_stable = runs
        .iter()
        .all(|r| r.summary.status == FlowStatus::Converged && r.summary.finite_length);
    Ok(StabilitySummary {
        consistent_with_stable,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn round_metric_is_einstein() {
        let g = GridSpec::sphere(32).unwrap();
        let m = SymmetricSphereMetric::new(ScalarField::zeros(&g)).unwrap();
        let s = scalar_curvature(&m).unwrap();
        assert!(s.values().iter().all(|v| (v - 1.0).abs() < 1e-13));
        assert!(ricci_potential(&m).unwrap().sup_norm() < 1e-13);
    }

    #[test]
    fn total_curvature_and_parity() {
        let g = GridSpec::sphere(64).unwrap();
        let m = SymmetricSphereMetric::mode(&g, 2, 0.05).unwrap();
        let s = scalar_curvature(&m).unwrap();
        let total = s.map(|v| v - 1.0).integral_weighted(m.ratio());
        assert!(total.abs() < 1e-12);
        // four derivatives of φ amplify round-off by ~‖Δ‖²
        let v = s.values();
        assert!(v.iter().all(|x| x.is_finite()));
        for i in 0..v.len() / 2 {
            assert!((v[i] - v[v.len() - 1 - i]).abs() < 1e-8);
        }
    }

    #[test]
    fn ricci_potential_solves_forward_equation() {
        let g = GridSpec::sphere(64).unwrap();
        let m = SymmetricSphereMetric::mode(&g, 3, 0.02).unwrap();
        let f = ricci_potential(&m).unwrap();
        let ops = g.sphere_ops().unwrap();
        let s = scalar_curvature(&m).unwrap();
        let lhs = ops.laplace_beltrami(f.values());
        for i in 0..g.len() {
            let rhs = 2.0 * m.ratio()[i] * (s.values()[i] - 1.0);
            assert!((lhs[i] - rhs).abs() < 1e-9);
        }
        let norm = weighted(&g, |i| f.values()[i].exp() * m.ratio()[i]) / g.volume();
        assert!((norm - 1.0).abs() < 1e-13);
    }

    #[test]
    fn fixed_point_is_stationary() {
        let g = GridSpec::sphere(32).unwrap();
        let m = SymmetricSphereMetric::new(ScalarField::zeros(&g)).unwrap();
        let ctl = FlowControls {
            t_end: 1.0,
            records: 10,
            ..Default::default()
        };
        let traj = krf_integrate(&m, ctl).unwrap();
        assert!(traj.samples().iter().all(|s| s.phi_c0 <= 1e-10));
        assert_eq!(convergence_report(&traj).status, FlowStatus::Converged);
    }

    #[test]
    fn truncated_run_is_inconclusive() {
        let g = GridSpec::sphere(32).unwrap();
        let m = SymmetricSphereMetric::mode(&g, 2, 0.05).unwrap();
        let ctl = FlowControls {
            t_end: 0.2,
            records: 10,
            ..Default::default()
        };
        let sum = convergence_report(&krf_integrate(&m, ctl).unwrap());
        assert_eq!(sum.status, FlowStatus::Inconclusive);
        assert!(!sum.finite_length);
    }

    #[test]
    fn gauge_does_not_move_volume_forms() {
        let g = GridSpec::sphere(32).unwrap();
        let m = SymmetricSphereMetric::mode(&g, 2, 0.05).unwrap();
        let base = FlowControls {
            t_end: 0.5,
            records: 5,
            ..Default::default()
        };
        let a = krf_integrate(&m, base).unwrap();
        let b = krf_integrate(&m, FlowControls { gauge: Gauge::Drift(0.3), ..base }).unwrap();
        for (x, y) in a.densities().iter().zip(b.densities()) {
            assert!(x.l1_distance(y).unwrap() <= 1e-10);
        }
        let (pa, pb) = (a.potentials().last().unwrap(), b.potentials().last().unwrap());
        assert!((pb.sub(pa).unwrap().mean() - 0.15).abs() < 1e-12);
    }
}
