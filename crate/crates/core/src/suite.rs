//! Seeded verification suites. Each function samples its own inputs from the
//! seed and returns one [`Report`] per checked quantity.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::density::{
    boundary_ray, bump_family_ratios, dv_distance_with_reference,
    equivalence_check, l1_convergence_check, l1_l2_equivalence, tilv_mass_crossings, CalabiGeodesic,
    Density,
};
use crate::ebin::{ebin_inner, kahler_intersections, volume_level_crossings};
use crate::error::{CoreError, Result};
use crate::grid::{Grid, ScalarField};
use crate::kahler::{
    angle_check, angle_check_in_basis, calabi_inner, calabi_inner_ddbar, check_isometric_embedding,
    default_trial_paths, equivalence_chain_check, nabla11, second_fundamental_trace,
    second_fundamental_trace_from_connections, trace_pairing_identity, KahlerPotential,
};
use crate::krf::{convergence_report, krf_integrate, FlowControls, FlowStatus, SymmetricSphereMetric};
use crate::report::Report;
use crate::sampling::{random_density, random_field, random_potential, random_tangent, rng};
use crate::tensor::{pointwise_trace, SymTensorField};

/// Ratio `d_V / d̃_V` can approach but never reach this.
pub const EQUIVALENCE_BOUND: f64 = PI / (2.0 * std::f64::consts::SQRT_2);

#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub seed: u64,
    pub count: usize,
    /// Overrides the per-check default tolerance.
    pub tol: Option<f64>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            count: 20,
            tol: None,
        }
    }
}

impl SuiteOptions {
    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

fn tagged(mut reports: Vec<Report>, tag: &str) -> Vec<Report> {
    for r in &mut reports {
        r.check_name = format!("{} [{tag}]", r.check_name);
    }
    reports
}

/// Random `(φ, ν, η)` triples.
fn triples(grid: &Grid, opts: &SuiteOptions) -> Result<Vec<(KahlerPotential, ScalarField, ScalarField)>> {
    let mut r = rng(opts.seed);
    (0..opts.count)
        .map(|_| {
            let phi = random_potential(grid, &mut r, 0.5)?;
            let nu = random_tangent(grid, &mut r);
            let eta = random_tangent(grid, &mut r);
            Ok((phi, nu, eta))
        })
        .collect()
}

/// `g_E(∇^{1,1}ν, ∇^{1,1}η) = 2 g_C(ν, η)`, and the two forms of `g_C` agree.
pub fn isometric_embedding(grid: &Grid, opts: &SuiteOptions) -> Result<Vec<Report>> {
    let tol = opts.tol(1e-8);
    let mut out = Vec::new();
    for (j, (phi, nu, eta)) in triples(grid, opts)?.iter().enumerate() {
        let tag = format!("sample {j}");
        out.extend(tagged(vec![check_isometric_embedding(phi, nu, eta, tol)?], &tag));
        let a = calabi_inner(phi, nu, eta)?;
        let b = calabi_inner_ddbar(phi, nu, eta)?;
        out.extend(tagged(vec![Report::close("Laplacian and ddbar forms of the Calabi pairing", a, b, tol)], &tag));
    }
    Ok(out)
}

pub fn trace_pairing(grid: &Grid, opts: &SuiteOptions) -> Result<Vec<Report>> {
    let tol = opts.tol(1e-8);
    let mut out = Vec::new();
    for (j, (phi, nu, eta)) in triples(grid, opts)?.iter().enumerate() {
        let reports = trace_pairing_identity(phi, &nabla11(nu)?, &nabla11(eta)?, tol)?;
        out.extend(tagged(reports, &format!("sample {j}")));
    }
    Ok(out)
}

/// Largest cosine to the conformal directions, over all conformal factors and
/// over a random basis that also contains `tr(g⁻¹h)`.
pub fn conformal_angle_suite(grid: &Grid, opts: &SuiteOptions) -> Result<Vec<Report>> {
    let tol = opts.tol(1e-6);
    let n = grid.complex_dim();
    let bound = 1.0 / (n as f64).sqrt();
    let mut r = rng(opts.seed ^ 0xa5);
    let mut out = Vec::new();
    for (j, (phi, nu, _)) in triples(grid, opts)?.iter().enumerate() {
        let tag = format!("sample {j}");
        let h = nabla11(nu)?;
        let g = phi.metric();
        let nodal = angle_check(g, &h)?;
        out.extend(tagged(nodal.reports(n, tol), &tag));
        let mut basis: Vec<ScalarField> = (0..4).map(|_| random_field(grid, &mut r)).collect();
        let free = angle_check_in_basis(g, &h, &basis)?;
        out.extend(tagged(
            vec![Report::at_most("cosine over a random basis", free.cosine, bound, 1e-8)],
            &tag,
        ));
        basis.push(pointwise_trace(g, &h)?);
        let with_trace = angle_check_in_basis(g, &h, &basis)?;
        out.extend(tagged(
            vec![Report::close_abs("cosine with the trace in the basis", with_trace.cosine, bound, tol)],
            &tag,
        ));
    }
    Ok(out)
}

/// `∫ tr(g⁻¹ II(h,h)) dV = −(n/2) ‖h‖²_E < 0`.
pub fn second_fundamental_suite(grid: &Grid, opts: &SuiteOptions) -> Result<Vec<Report>> {
    let tol = opts.tol(1e-6);
    let n = grid.complex_dim() as f64;
    let mut out = Vec::new();
    for (j, (phi, nu, _)) in triples(grid, opts)?.iter().enumerate() {
        let h = nabla11(nu)?;
        let norm2 = ebin_inner(phi.metric(), &h, &h)?;
        let tr = second_fundamental_trace(phi, nu, nu)?;
        let lhs = phi.integrate(&tr)?;
        let alt = second_fundamental_trace_from_connections(phi, nu, nu)?;
        let gap = alt.sub(&tr)?.sup_norm();
        out.extend(tagged(
            vec![
                Report::close("integrated trace of second fundamental form", lhs, -0.5 * n * norm2, tol),
                Report::less_than("trace pairing is negative", lhs, 0.0),
                Report::at_most("trace from difference of connections", gap, 0.0, tol * tr.sup_norm()),
            ],
            &format!("sample {j}"),
        ));
    }
    Ok(out)
}

/// Seeded pairs of random volume forms of mass `V`, with a shared random spread per pair.
pub fn density_pairs(grid: &Grid, seed: u64, count: usize) -> Result<Vec<(Density, Density)>> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let spread = r.gen_range(0.1..2.0);
            Ok((random_density(grid, &mut r, spread)?, random_density(grid, &mut r, spread)?))
        })
        .collect()
}

/// Closed-form volume-form geodesics: equation, unit speed, length and the
/// endpoint velocity.
pub fn calabi_geodesic_suite(grid: &Grid, opts: &SuiteOptions) -> Result<Vec<Report>> {
    let mut out = Vec::new();
    let mut r = rng(opts.seed ^ 0x5c);
    for (j, (mu1, mu2)) in density_pairs(grid, opts.seed, opts.count)?.iter().enumerate() {
        let geo = CalabiGeodesic::new(mu1, mu2)?;
        let t_len = geo.length();
        let ts: Vec<f64> = (0..=8).map(|k| t_len * k as f64 / 8.0).collect();
        let residual = ts.iter().map(|&t| geo.ode_residual(t)).fold(0.0, f64::max);
        let speed_gap = ts.iter().map(|&t| (geo.speed(t) - 1.0).abs()).fold(0.0, f64::max);
        let rho = random_density(grid, &mut r, 0.5)?;
        let other = dv_distance_with_reference(mu1, mu2, &rho)?;
        // fourth-order central difference of F(t) at t = T
        let h = 1e-3 * t_len;
        let f = |t: f64| geo.at(t).ratio_field();
        let fd = f(t_len + h)
            .sub(&f(t_len - h))?
            .scale(8.0)
            .sub(&f(t_len + 2.0 * h).sub(&f(t_len - 2.0 * h))?)?
            .scale(1.0 / (12.0 * h));
        let closed = geo.terminal_velocity();
        let vel_gap = fd.sub(&closed)?.sup_norm() / closed.sup_norm().max(1e-300);
        let cv = closed.values();
        let end = mu2.ratio();
        let norm = (0..grid.len())
            .map(|i| grid.weights()[i] * cv[i] * cv[i] / end[i])
            .sum::<f64>()
            .sqrt();
        out.extend(tagged(
            vec![
                Report::at_most("geodesic equation residual", residual, 0.0, opts.tol(1e-8)),
                Report::at_most("deviation from unit speed", speed_gap, 0.0, opts.tol(1e-8)),
                Report::close("length against distance formula", t_len, other, opts.tol(1e-10)),
                Report::at_most("endpoint velocity against finite differences", vel_gap, 0.0, opts.tol(1e-6)),
                Report::close_abs("endpoint velocity has unit norm", norm, 1.0, opts.tol(1e-8)),
            ],
            &format!("pair {j}"),
        ));
    }
    Ok(out)
}

/// `d̃_V ≤ d_V < (π/(2√2)) d̃_V` on random pairs.
pub fn equivalence_suite(grid: &Grid, opts: &SuiteOptions) -> Result<Vec<Report>> {
    let mut out = Vec::new();
    for (j, (mu1, mu2)) in density_pairs(grid, opts.seed, opts.count)?.iter().enumerate() {
        out.extend(tagged(equivalence_check(mu1, mu2)?, &format!("pair {j}")));
    }
    Ok(out)
}

/// Bump family: the ratio `d_V/d̃_V` climbs toward the optimal constant.
pub fn bump_family_suite(grid: &Grid, eps: &[f64], target: f64) -> Result<Vec<Report>> {
    let ratios = bump_family_ratios(grid, eps)?;
    let mut out: Vec<Report> = ratios
        .iter()
        .map(|&(e, ratio)| Report::less_than(format!("bump ratio below optimal constant [eps {e:e}]"), ratio, EQUIVALENCE_BOUND))
        .collect();
    let increasing = ratios.windows(2).all(|w| w[1].1 > w[0].1);
    let best = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    out.push(Report::verdict("bump ratio increases as the floor shrinks", increasing, best, EQUIVALENCE_BOUND));
    out.push(Report::at_most("best bump ratio reaches target", target, best, 0.0));
    Ok(out)
}

/// Inequality chain between the intrinsic and ambient distances on random
/// potential pairs.
pub fn theorem_chain_suite(grid: &Grid, opts: &SuiteOptions) -> Result<Vec<Report>> {
    let tol = opts.tol(1e-8);
    let mut r = rng(opts.seed);
    let mut out = Vec::new();
    for j in 0..opts.count {
        let p1 = random_potential(grid, &mut r, 0.4)?;
        let p2 = random_potential(grid, &mut r, 0.4)?;
        let paths = default_trial_paths(&p1, &p2)?;
        out.extend(tagged(equivalence_chain_check(&p1, &p2, &paths, tol)?, &format!("pair {j}")));
    }
    Ok(out)
}

/// Geodesics leave the fixed-volume level sets: mass crossings of ambient
/// volume-form geodesics, and the volume polynomial along metric geodesics.
pub fn intersection_suite(grid: &Grid, opts: &SuiteOptions) -> Result<Vec<Report>> {
    let mut r = rng(opts.seed);
    let mut out = Vec::new();
    let vol = grid.volume();
    for j in 0..opts.count {
        let tag = format!("sample {j}");
        let mu = random_density(grid, &mut r, 1.0)?;
        let nu = random_density(grid, &mut r, 1.0)?;
        // chord from μ to ν in the square-root picture
        let chord = ScalarField::new(
            grid,
            mu.ratio()
                .iter()
                .zip(nu.ratio())
                .map(|(f, g)| 2.0 * ((f * g).sqrt() - f))
                .collect(),
        )?;
        let c = tilv_mass_crossings(&mu, &chord, vol)?;
        let ok = c.roots.len() == 2 && !c.tangential;
        let (t0, t1) = if ok { (c.roots[0], c.roots[1]) } else { (f64::NAN, f64::NAN) };
        // a mass-preserving direction only touches the level set
        let a = random_field(grid, &mut r).mul(&mu.ratio_field())?;
        let a = a.map({
            let m = a.integral() / vol;
            move |v| v - m
        });
        let touch = tilv_mass_crossings(&mu, &a, vol)?;
        let double_at_start = touch.roots.len() == 2
            && touch.tangential
            && touch.roots.iter().all(|t| t.abs() <= 1e-12);
        out.extend(tagged(
            vec![
                Report::verdict("geodesic between two forms meets the level set twice", ok, c.roots.len() as f64, 2.0),
                Report::close_abs("first crossing at the start", t0, 0.0, 1e-10),
                Report::close_abs("second crossing at the end", t1, 1.0, 1e-10),
                Report::close(
                    "mass back at the level at the second crossing",
                    crate::density::tilv_geodesic(&mu, &chord, t1)?.total(),
                    vol,
                    1e-10,
                ),
                Report::verdict(
                    "mass-preserving direction touches the level set in a double root",
                    double_at_start,
                    touch.roots.len() as f64,
                    2.0,
                ),
            ],
            &tag,
        ));

        let phi = random_potential(grid, &mut r, 0.4)?;
        let g0 = phi.metric().field().clone();
        let h = nabla11(&random_tangent(grid, &mut r))?;
        let t_end = safe_horizon(phi.metric(), &h)?;
        let k = kahler_intersections(&g0, &h, t_end, GEODESIC_STEPS)?;
        out.extend(tagged(
            vec![
                Report::at_most("volume along metric geodesic is quadratic", k.fit_residual, 0.0, 1e-10),
                Report::close("curvature of volume along geodesic", k.fitted[2], k.analytic[2], 1e-8),
                Report::verdict(
                    "Kähler geodesic meets its class in two points with multiplicity",
                    k.crossing.roots.len() == 2 && k.crossing.roots[0].abs() <= 1e-6 * t_end,
                    k.crossing.roots.len() as f64,
                    2.0,
                ),
            ],
            &tag,
        ));

        // a direction with nonzero first variation crosses transversally
        let tilt = h.add(&g0.scale(-0.2 * ebin_inner(phi.metric(), &h, &h)?.sqrt() / vol.sqrt()))?;
        let t_tilt = safe_horizon(phi.metric(), &tilt)?;
        let v = volume_level_crossings(&g0, &tilt, t_tilt, GEODESIC_STEPS)?;
        let expected = -v.analytic[1] / v.analytic[2];
        out.extend(tagged(
            vec![Report::close(
                "transversal second crossing",
                v.crossing.roots.last().copied().unwrap_or(f64::NAN),
                expected,
                1e-6,
            )],
            &tag,
        ));
    }
    Ok(out)
}

/// RK4 steps for metric geodesics; the volume fit is at round-off already.
const GEODESIC_STEPS: usize = 100;

/// Time horizon well inside the existence interval of the metric geodesic:
/// the earliest conformal collapse is at `−4/tr(g⁻¹h)`.
fn safe_horizon(g: &crate::tensor::Metric, h: &SymTensorField) -> Result<f64> {
    let tr = pointwise_trace(g, h)?;
    let worst = tr.min();
    Ok(if worst < 0.0 { (2.0 / -worst).min(1.0) } else { 1.0 })
}

/// L¹ versus intrinsic convergence, `L²` versus `L¹` of squares, and boundary rays.
pub fn completion_suite(grid: &Grid, opts: &SuiteOptions) -> Result<Vec<Report>> {
    let mut r = rng(opts.seed);
    let vol = grid.volume();
    let base = random_density(grid, &mut r, 0.5)?;
    let other = random_density(grid, &mut r, 0.5)?;
    let mix = |w: f64| -> Result<Density> {
        let ratio = base
            .ratio()
            .iter()
            .zip(other.ratio())
            .map(|(a, b)| (1.0 - w) * a + w * b)
            .collect();
        Density::new(grid, ratio)?.normalized(vol)
    };
    let convergent = (0..24).map(|k| mix(0.25f64.powi(k))).collect::<Result<Vec<_>>>()?;
    let alternating = (0..24).map(|k| mix(if k % 2 == 0 { 0.9 } else { 0.1 })).collect::<Result<Vec<_>>>()?;
    let c1 = l1_convergence_check(&convergent, &base)?;
    let c2 = l1_convergence_check(&alternating, &base)?;

    let roots = |seq: &[Density]| -> Vec<ScalarField> { seq.iter().map(|d| d.ratio_field().map(f64::sqrt)).collect() };
    let limit = base.ratio_field().map(f64::sqrt);
    let e1 = l1_l2_equivalence(&roots(&convergent), &limit)?;
    let e2 = l1_l2_equivalence(&roots(&alternating), &limit)?;

    let mut out = vec![
        c1.report("L1 and intrinsic convergence agree"),
        Report::verdict("mixture sequence converges", c1.first_converges, 0.0, 0.0),
        c2.report("L1 and intrinsic convergence agree"),
        Report::verdict("alternating sequence does not converge", !c2.first_converges, 0.0, 0.0),
        e1.report("L2 and L1 of squares agree"),
        e2.report("L2 and L1 of squares agree"),
    ];

    for j in 0..opts.count.min(5) {
        let mu = random_density(grid, &mut r, 0.8)?;
        let g = random_field(grid, &mut r);
        let w = mu.ratio();
        let mean = (0..grid.len()).map(|i| grid.weights()[i] * g.values()[i] * w[i]).sum::<f64>() / vol;
        let g = g.map(|v| v - mean);
        let norm = (0..grid.len())
            .map(|i| grid.weights()[i] * g.values()[i].powi(2) * w[i])
            .sum::<f64>()
            .sqrt();
        let ray = boundary_ray(&mu, &g.scale(1.0 / norm))?;
        let end = ray.terminal();
        out.extend(tagged(
            vec![
                Report::close("terminal mass of boundary ray", end.total(), vol, 1e-10),
                Report::less_than("boundary reached before antipode", ray.t_max(), PI * vol.sqrt()),
                Report::verdict(
                    "terminal form vanishes somewhere",
                    end.ratio().iter().any(|v| *v == 0.0) && end.ratio().iter().all(|v| *v >= 0.0),
                    end.ratio().iter().cloned().fold(f64::INFINITY, f64::min),
                    0.0,
                ),
            ],
            &format!("ray {j}"),
        ));
    }
    Ok(out)
}

/// Per-run outcome of the flow suite.
#[derive(Debug, Clone, Serialize)]
pub struct FlowRun {
    pub label: String,
    pub status: FlowStatus,
    pub rate: Option<f64>,
    pub length: f64,
    pub length_direct: f64,
    pub terminal_curvature: f64,
}

/// Initial data for the flow suite: low Legendre modes and seeded random data.
pub fn flow_initial_data(grid: &Grid, seed: u64, amplitude: f64) -> Result<Vec<(String, SymmetricSphereMetric)>> {
    let mut r = rng(seed);
    let mut data = Vec::new();
    for l in 1..=3 {
        data.push((format!("mode {l}"), SymmetricSphereMetric::mode(grid, l, amplitude)?));
    }
    for k in 0..2 {
        data.push((format!("random {k}"), SymmetricSphereMetric::random(grid, &mut r, amplitude)?));
    }
    Ok(data)
}

/// Round fixed point and small-data convergence of the flow.
pub fn flow_suite(grid: &Grid, opts: &SuiteOptions, controls: FlowControls, amplitude: f64) -> Result<(Vec<Report>, Vec<FlowRun>)> {
    let mut out = Vec::new();
    let round = SymmetricSphereMetric::new(ScalarField::zeros(grid))?;
    let fixed = krf_integrate(&round, FlowControls { t_end: controls.t_end.min(5.0), ..controls })?;
    let drift = fixed.samples().iter().map(|s| s.phi_c0).fold(0.0, f64::max);
    out.push(Report::at_most("round metric stays fixed", drift, 0.0, 1e-10));

    let mut runs = Vec::new();
    for (label, init) in flow_initial_data(grid, opts.seed, amplitude)? {
        let traj = krf_integrate(&init, controls)?;
        let sum = convergence_report(&traj);
        let total_curv = traj.samples().iter().map(|s| s.curvature_integral.abs()).fold(0.0, f64::max);
        let mut reports = sum.reports.clone();
        reports.push(Report::verdict("run converged", sum.status == FlowStatus::Converged, 0.0, 0.0));
        reports.push(Report::less_than("fitted decay rate is positive", 0.0, sum.rate.unwrap_or(0.0)));
        reports.push(Report::at_most("mass drift per step", traj.max_mass_drift(), 0.0, 1e-8));
        reports.push(Report::at_most("total curvature constraint", total_curv, 0.0, 1e-8));
        reports.push(Report::verdict(
            "time derivative of potential stays bounded",
            sum.phi_dot_bound.is_finite(),
            sum.phi_dot_bound,
            f64::INFINITY,
        ));
        out.extend(tagged(reports, &label));
        runs.push(FlowRun {
            label,
            status: sum.status,
            rate: sum.rate,
            length: sum.length,
            length_direct: sum.length_direct,
            terminal_curvature: traj.last().curvature_sup,
        });
    }
    Ok((out, runs))
}

/// Named groups of suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteName {
    Kahler,
    Density,
    Ebin,
    Flow,
    All,
}

impl SuiteName {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "kahler" => Self::Kahler,
            "density" => Self::Density,
            "ebin" => Self::Ebin,
            "flow" => Self::Flow,
            "all" => Self::All,
            other => {
                return Err(CoreError::Parse(format!(
                    "unknown suite {other:?} (expected kahler, density, ebin, flow or all)"
                )))
            }
        })
    }
}

/// Runs a suite group on one grid. The flow suite needs the sphere; the
/// others run anywhere.
pub fn run_suite(name: SuiteName, grid: &Grid, opts: &SuiteOptions) -> Result<Vec<Report>> {
    let mut out = Vec::new();
    if matches!(name, SuiteName::Kahler | SuiteName::All) {
        out.extend(isometric_embedding(grid, opts)?);
        out.extend(trace_pairing(grid, opts)?);
        out.extend(conformal_angle_suite(grid, opts)?);
        out.extend(second_fundamental_suite(grid, opts)?);
        out.extend(theorem_chain_suite(grid, opts)?);
    }
    if matches!(name, SuiteName::Density | SuiteName::All) {
        out.extend(calabi_geodesic_suite(grid, opts)?);
        out.extend(equivalence_suite(grid, opts)?);
        out.extend(completion_suite(grid, opts)?);
    }
    if matches!(name, SuiteName::Ebin | SuiteName::All) {
        out.extend(intersection_suite(grid, opts)?);
    }
    if name == SuiteName::Flow || (name == SuiteName::All && !grid.topology().is_torus()) {
        out.extend(flow_suite(grid, opts, FlowControls::default(), 0.05)?.0);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn small_kahler_suite_passes() {
        let g = GridSpec::torus2d(16).unwrap();
        let opts = SuiteOptions { count: 2, ..Default::default() };
        let reports = run_suite(SuiteName::Kahler, &g, &opts).unwrap();
        for r in &reports {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn suite_names_parse() {
        assert_eq!(SuiteName::parse("flow").unwrap(), SuiteName::Flow);
        assert!(SuiteName::parse("everything").is_err());
    }
}
