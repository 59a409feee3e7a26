//! Kähler potentials in the fixed class and the geometry they inherit from the
//! ambient space of metrics.
//!
//! A potential `φ` gives `g_φ = g₀ + ∇^{1,1}φ` with `∇^{1,1}φ = ½(∇²φ + J·∇²φ)`.
//! Its Laplacian is `Δ_φ ν = ½ tr(g_φ⁻¹ ∇^{1,1}ν)`, which on the flat torus is
//! `½ Σ ∂²`.

use std::f64::consts::PI;

use crate::density::{dtilde_v_distance, dv_distance, CalabiGeodesic, Density};
use crate::ebin::{ebin_connection, ebin_inner, integrate_samples, path_length_ebin, MetricPath};
use crate::error::{CoreError, Result};
use crate::grid::{same_grid, Grid, ScalarField, Topology};
use crate::report::Report;
use crate::solver::{bicgstab, SolverSettings};
use crate::tensor::{
    min_eigenvalue, pointwise_trace, pointwise_trace_pair, real_hessian, riemannian_volume, Metric,
    SymTensorField,
};

/// Tolerance for the mean of a Laplacian right-hand side.
pub const MEAN_ZERO_TOL: f64 = 1e-9;

/// `∇^{1,1}ν`, the J-invariant part of the Hessian.
pub fn nabla11(nu: &ScalarField) -> Result<SymTensorField> {
    Ok(real_hessian(nu)?.project_11())
}

/// Reference Laplacian `Δ_ω` (flat or round).
pub fn reference_laplacian(nu: &ScalarField) -> Result<ScalarField> {
    let grid = nu.grid();
    let v = match grid.topology() {
        Topology::SphereAxisym => grid
            .sphere_ops()?
            .laplace_beltrami(nu.values())
            .into_iter()
            .map(|x| 0.5 * x)
            .collect(),
        _ => grid.spectral()?.flat_laplacian(nu.values()),
    };
    Ok(ScalarField::from_vec_unchecked(grid, v))
}

/// Mean-zero solution of `Δ_ω u = f` for mean-zero `f`.
pub fn reference_laplacian_inverse(f: &ScalarField) -> Result<ScalarField> {
    let grid = f.grid();
    let v = match grid.topology() {
        Topology::SphereAxisym => {
            let rhs: Vec<f64> = f.values().iter().map(|x| 2.0 * x).collect();
            grid.sphere_ops()?.solve_laplace_beltrami(&rhs)
        }
        _ => grid.spectral()?.inverse_flat_laplacian(f.values()),
    };
    Ok(ScalarField::from_vec_unchecked(grid, v))
}

/// `g₀ + ∇^{1,1}φ`, rejected if it fails to be positive definite anywhere.
pub fn potential_to_metric(phi: &ScalarField) -> Result<SymTensorField> {
    let g = SymTensorField::identity(phi.grid()).add(&nabla11(phi)?)?;
    let (node, eig) = g
        .values()
        .iter()
        .map(min_eigenvalue)
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| CoreError::InvalidInput("empty grid".into()))?;
    if eig <= 0.0 {
        return Err(CoreError::Positivity {
            node,
            coords: phi.grid().coords(node),
            eigenvalue: eig,
        });
    }
    Ok(g)
}

/// A potential together with its metric.
#[derive(Debug, Clone)]
pub struct KahlerPotential {
    phi: ScalarField,
    metric: Metric,
}

impl KahlerPotential {
    pub fn new(phi: ScalarField) -> Result<Self> {
        let metric = Metric::new(potential_to_metric(&phi)?)?;
        Ok(Self { phi, metric })
    }

    pub fn reference(grid: &Grid) -> Self {
        Self::new(ScalarField::zeros(grid)).expect("reference metric is positive")
    }

    pub fn grid(&self) -> &Grid {
        self.phi.grid()
    }

    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn volume_form(&self) -> Density {
        riemannian_volume(&self.metric)
    }

    pub fn volume(&self) -> f64 {
        self.metric.volume()
    }

    /// The same metric with `∫ φ ωⁿ = 0`.
    pub fn gauge_fixed(&self) -> Self {
        let m = self.phi.mean();
        Self {
            phi: self.phi.map(|v| v - m),
            metric: self.metric.clone(),
        }
    }

    /// `Δ_φ ν = ½ tr(g_φ⁻¹ ∇^{1,1}ν)`.
    pub fn laplacian(&self, nu: &ScalarField) -> Result<ScalarField> {
        Ok(pointwise_trace(&self.metric, &nabla11(nu)?)?.scale(0.5))
    }

    /// `∫ f dV_φ`.
    pub fn integrate(&self, f: &ScalarField) -> Result<f64> {
        same_grid(self.grid(), f.grid())?;
        Ok(f.integral_weighted(self.metric.volume_ratio()))
    }

    /// Solution of `Δ_φ u = f` with `∫ u dV_φ = 0`.
    ///
    /// `f` must integrate to zero against `dV_φ` up to [`MEAN_ZERO_TOL`]
    /// (relative to `∫|f| dV_φ`); the residual mean is projected out.
    pub fn inverse_laplacian(&self, f: &ScalarField) -> Result<ScalarField> {
        let vol = self.volume();
        let mean = self.integrate(f)?;
        let abs = self.integrate(&f.map(f64::abs))?;
        if abs == 0.0 {
            return Ok(ScalarField::zeros(self.grid()));
        }
        if mean.abs() > MEAN_ZERO_TOL * abs {
            return Err(CoreError::NotMeanZero {
                relative_mean: mean / abs,
            });
        }
        let f = f.map(|v| v - mean / vol);
        let rho = ScalarField::from_vec_unchecked(self.grid(), self.metric.volume_ratio().to_vec());
        let u = if self.grid().complex_dim() == 1 {
            // g_φ = ρ g₀, hence Δ_φ = ρ⁻¹ Δ_ω
            reference_laplacian_inverse(&f.mul(&rho)?)?
        } else {
            let grid = self.grid().clone();
            let apply = |x: &[f64]| {
                let xf = ScalarField::from_vec_unchecked(&grid, x.to_vec());
                self.laplacian(&xf).expect("same grid").into_values()
            };
            let precondition = |r: &[f64]| {
                let rf = ScalarField::from_vec_unchecked(&grid, r.to_vec());
                reference_laplacian_inverse(&rf.mul(&rho).expect("same grid"))
                    .expect("torus grid")
                    .into_values()
            };
            let (x, _) = bicgstab(apply, precondition, f.values(), SolverSettings::default())?;
            ScalarField::from_vec_unchecked(&grid, x)
        };
        let shift = self.integrate(&u)? / vol;
        Ok(u.map(|v| v - shift))
    }
}

/// `∫ Δ_φν Δ_φη dV_φ`.
pub fn calabi_inner(phi: &KahlerPotential, nu: &ScalarField, eta: &ScalarField) -> Result<f64> {
    let a = phi.laplacian(nu)?;
    let b = phi.laplacian(eta)?;
    phi.integrate(&a.mul(&b)?)
}

/// `(i∂∂̄ν, i∂∂̄η)_{ω_φ} = ½ tr(g_φ⁻¹ h g_φ⁻¹ k)` per node.
pub fn ddbar_pairing(phi: &KahlerPotential, nu: &ScalarField, eta: &ScalarField) -> Result<ScalarField> {
    Ok(pointwise_trace_pair(phi.metric(), &nabla11(nu)?, &nabla11(eta)?)?.scale(0.5))
}

/// `∫ (i∂∂̄ν, i∂∂̄η)_{ω_φ} dV_φ`.
pub fn calabi_inner_ddbar(phi: &KahlerPotential, nu: &ScalarField, eta: &ScalarField) -> Result<f64> {
    phi.integrate(&ddbar_pairing(phi, nu, eta)?)
}

/// Compares `g_E(∇^{1,1}ν, ∇^{1,1}η)` with `2 g_C(ν, η)`.
pub fn check_isometric_embedding(
    phi: &KahlerPotential,
    nu: &ScalarField,
    eta: &ScalarField,
    tol: f64,
) -> Result<Report> {
    let lhs = ebin_inner(phi.metric(), &nabla11(nu)?, &nabla11(eta)?)?;
    let rhs = 2.0 * calabi_inner(phi, nu, eta)?;
    Ok(Report::close("ambient pairing equals twice the Calabi pairing", lhs, rhs, tol))
}

/// For `h = ∇^{1,1}ν`, `k = ∇^{1,1}η`: `g_E(h,k) = ½∫tr(g⁻¹h)tr(g⁻¹k)dV`,
/// and the conformal part of `h` carries `n^{−1/2}` of its norm. Both are
/// integrated identities; they fail for general J-invariant tensors. Only
/// J-invariance is checked here.
pub fn trace_pairing_identity(
    phi: &KahlerPotential,
    h: &SymTensorField,
    k: &SymTensorField,
    tol: f64,
) -> Result<Vec<Report>> {
    for t in [h, k] {
        let defect = t.j_defect();
        if defect > 1e-10 * t.sup_norm().max(1e-300) {
            return Err(CoreError::NotJInvariant { node: 0, defect });
        }
    }
    let g = phi.metric();
    let n = phi.grid().complex_dim() as f64;
    let lhs = ebin_inner(g, h, k)?;
    let th = pointwise_trace(g, h)?;
    let tk = pointwise_trace(g, k)?;
    let rhs = 0.5 * th.mul(&tk)?.integral_weighted(g.volume_ratio());
    let (_, h_t) = crate::ebin::tangent_split(g, h)?;
    let norm_h = ebin_inner(g, h, h)?.max(0.0).sqrt();
    let norm_t = ebin_inner(g, &h_t, &h_t)?.max(0.0).sqrt();
    Ok(vec![
        Report::close("trace pairing", lhs, rhs, tol),
        Report::close("conformal part norm fraction", norm_t, norm_h / n.sqrt(), tol),
    ])
}

/// Levi-Civita connection of the Calabi metric on constant fields, in the
/// gauge `∫ ∇_ν η dV_φ = 0`:
/// `Δ_φ(∇_ν η) = ½Δν Δη + (1/2V)∫Δν Δη dV_φ − (i∂∂̄ν, i∂∂̄η)`.
pub fn calabi_connection(phi: &KahlerPotential, nu: &ScalarField, eta: &ScalarField) -> Result<ScalarField> {
    let a = phi.laplacian(nu)?;
    let b = phi.laplacian(eta)?;
    let ab = a.mul(&b)?;
    let avg = phi.integrate(&ab)? / phi.volume();
    let pair = ddbar_pairing(phi, nu, eta)?;
    let rhs = ab.zip_with(&pair, |x, p| 0.5 * x + 0.5 * avg - p)?;
    phi.inverse_laplacian(&rhs)
}

/// `tr(g⁻¹ II(h,k)) = −(n/2)tr(g⁻¹hg⁻¹k) + ¼tr(g⁻¹h)tr(g⁻¹k) − (1/2V) g_E(h,k)`
/// for `h = ∇^{1,1}ν`, `k = ∇^{1,1}η`.
pub fn second_fundamental_trace(
    phi: &KahlerPotential,
    nu: &ScalarField,
    eta: &ScalarField,
) -> Result<ScalarField> {
    let g = phi.metric();
    let n = phi.grid().complex_dim() as f64;
    let h = nabla11(nu)?;
    let k = nabla11(eta)?;
    let pair = pointwise_trace_pair(g, &h, &k)?;
    let th = pointwise_trace(g, &h)?;
    let tk = pointwise_trace(g, &k)?;
    let ge = ebin_inner(g, &h, &k)?;
    let c = ge / (2.0 * phi.volume());
    let values = pair
        .values()
        .iter()
        .zip(th.values())
        .zip(tk.values())
        .map(|((p, a), b)| -0.5 * n * p + 0.25 * a * b - c)
        .collect();
    Ok(ScalarField::from_vec_unchecked(phi.grid(), values))
}

/// The same trace assembled as `tr(g⁻¹(∇^E_h k − ∇^{1,1}(∇^C_ν η)))`.
pub fn second_fundamental_trace_from_connections(
    phi: &KahlerPotential,
    nu: &ScalarField,
    eta: &ScalarField,
) -> Result<ScalarField> {
    let g = phi.metric();
    let ambient = ebin_connection(g, &nabla11(nu)?, &nabla11(eta)?)?;
    let intrinsic = nabla11(&calabi_connection(phi, nu, eta)?)?;
    pointwise_trace(g, &ambient.sub(&intrinsic)?)
}

/// Angle between the Kähler directions and the conformal directions: `arccos(n^{−1/2})`.
pub fn conformal_angle(n: usize) -> f64 {
    (1.0 / (n as f64).sqrt()).acos()
}

#[derive(Debug, Clone)]
pub struct AngleResult {
    /// Largest `g_E(h, ρg) / (‖h‖ ‖ρg‖)` over the span of the basis.
    pub cosine: f64,
    pub angle: f64,
    /// Maximizing conformal factor `ρ`.
    pub maximizer: ScalarField,
}

impl AngleResult {
    pub fn reports(&self, n: usize, tol: f64) -> Vec<Report> {
        vec![
            Report::close_abs("maximal cosine", self.cosine, 1.0 / (n as f64).sqrt(), tol),
            Report::close_abs("conformal angle", self.angle, conformal_angle(n), tol),
        ]
    }
}

/// Maximizes the cosine between `h` and conformal directions `ρ g`, with `ρ`
/// ranging over all grid functions (one basis element per node).
pub fn angle_check(g: &Metric, h: &SymTensorField) -> Result<AngleResult> {
    let n = g.grid().complex_dim() as f64;
    let norm_h = ebin_inner(g, h, h)?.max(0.0).sqrt();
    if norm_h == 0.0 {
        return Err(CoreError::InvalidInput("angle of the zero vector".into()));
    }
    // with the nodal basis the Gram matrix is diagonal and the Rayleigh
    // maximizer is ρ = tr(g⁻¹h)
    let tr = pointwise_trace(g, h)?;
    let w = g.volume_ratio();
    let b_norm = tr.mul(&tr)?.integral_weighted(w).sqrt();
    let cosine = (b_norm / ((2.0 * n).sqrt() * norm_h)).min(1.0);
    Ok(AngleResult {
        cosine,
        angle: cosine.acos(),
        maximizer: tr,
    })
}

/// Same maximization over the span of an arbitrary basis of conformal factors,
/// through the Gram matrix.
pub fn angle_check_in_basis(g: &Metric, h: &SymTensorField, basis: &[ScalarField]) -> Result<AngleResult> {
    let norm_h = ebin_inner(g, h, h)?.max(0.0).sqrt();
    if norm_h == 0.0 || basis.is_empty() {
        return Err(CoreError::InvalidInput("need a nonzero direction and a basis".into()));
    }
    let dirs: Vec<SymTensorField> = basis
        .iter()
        .map(|rho| g.field().scale_by(rho))
        .collect::<Result<_>>()?;
    let m = basis.len();
    let mut gram = nalgebra::DMatrix::zeros(m, m);
    let mut rhs = nalgebra::DVector::zeros(m);
    for i in 0..m {
        rhs[i] = ebin_inner(g, h, &dirs[i])?;
        for j in i..m {
            let v = ebin_inner(g, &dirs[i], &dirs[j])?;
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let coeffs = gram
        .clone()
        .cholesky()
        .ok_or_else(|| CoreError::InvalidInput("basis is linearly dependent".into()))?
        .solve(&rhs);
    let cos2 = rhs.dot(&coeffs) / (norm_h * norm_h);
    let cosine = cos2.max(0.0).sqrt().min(1.0);
    let mut rho = ScalarField::zeros(g.grid());
    for (c, b) in coeffs.iter().zip(basis) {
        rho = rho.add(&b.scale(*c))?;
    }
    Ok(AngleResult {
        cosine,
        angle: cosine.acos(),
        maximizer: rho,
    })
}

/// Intrinsic distance between two Kähler metrics in the class, computed from
/// their volume forms.
pub fn dc_distance(phi1: &KahlerPotential, phi2: &KahlerPotential) -> Result<f64> {
    dv_distance(&phi1.volume_form(), &phi2.volume_form())
}

/// Time-sampled path of potentials with their time derivatives.
#[derive(Debug, Clone)]
pub struct PotentialPath {
    pub times: Vec<f64>,
    pub potentials: Vec<KahlerPotential>,
    pub velocities: Vec<ScalarField>,
}

impl PotentialPath {
    pub fn to_metric_path(&self, generator: &str) -> Result<MetricPath> {
        let metrics = self
            .potentials
            .iter()
            .map(|p| p.metric().field().clone())
            .collect();
        let vel = self
            .velocities
            .iter()
            .map(nabla11)
            .collect::<Result<Vec<_>>>()?;
        MetricPath::new(self.times.clone(), metrics, Some(vel), generator)
    }

    /// `∫ √(g_C(φ_t, φ_t)) dt`.
    pub fn calabi_length(&self) -> Result<f64> {
        let speeds = self
            .potentials
            .iter()
            .zip(&self.velocities)
            .map(|(p, v)| Ok(calabi_inner(p, v, v)?.max(0.0).sqrt()))
            .collect::<Result<Vec<f64>>>()?;
        Ok(integrate_samples(&self.times, &speeds))
    }
}

/// Lifts the volume-form geodesic between `dV_{φ₁}` and `dV_{φ₂}` to
/// potentials. Only for complex dimension one, where `dV_φ/μ₀ = 1 + Δ_ω φ`
/// is linear in `φ` and inverts exactly. `samples` should be odd.
pub fn calabi_lift(phi1: &KahlerPotential, phi2: &KahlerPotential, samples: usize) -> Result<PotentialPath> {
    let grid = phi1.grid();
    if grid.complex_dim() != 1 {
        return Err(CoreError::Unsupported {
            op: "volume-form inversion",
            topology: grid.topology().to_string(),
        });
    }
    let geo = CalabiGeodesic::new(&phi1.volume_form(), &phi2.volume_form())?;
    let t_end = geo.length();
    if t_end == 0.0 || samples < 2 {
        return Err(CoreError::InvalidInput("lift needs distinct endpoints and two samples".into()));
    }
    let mut times = Vec::with_capacity(samples);
    let mut potentials = Vec::with_capacity(samples);
    let mut velocities = Vec::with_capacity(samples);
    for j in 0..samples {
        let t = t_end * j as f64 / (samples - 1) as f64;
        let f = geo.at(t).ratio_field().map(|v| v - 1.0);
        let f = f.map({
            let m = f.mean();
            move |v| v - m
        });
        potentials.push(KahlerPotential::new(reference_laplacian_inverse(&f)?)?);
        let ft = geo.velocity(t);
        let ft = ft.map({
            let m = ft.mean();
            move |v| v - m
        });
        velocities.push(reference_laplacian_inverse(&ft)?);
        times.push(t);
    }
    Ok(PotentialPath {
        times,
        potentials,
        velocities,
    })
}

/// The affine segment `(1−s)g_{φ₁} + s g_{φ₂}`, `s ∈ [0,1]`, which stays in the class.
pub fn affine_segment(phi1: &KahlerPotential, phi2: &KahlerPotential, samples: usize) -> Result<MetricPath> {
    let g1 = phi1.metric().field();
    let g2 = phi2.metric().field();
    let dg = g2.sub(g1)?;
    let samples = samples.max(2);
    let mut times = Vec::with_capacity(samples);
    let mut metrics = Vec::with_capacity(samples);
    for j in 0..samples {
        let s = j as f64 / (samples - 1) as f64;
        times.push(s);
        metrics.push(g1.add(&dg.scale(s))?);
    }
    MetricPath::new(times, metrics, Some(vec![dg; samples]), "affine-segment")
}

/// Default trial paths: the affine segment, plus the lifted volume-form
/// geodesic in complex dimension one.
pub fn default_trial_paths(phi1: &KahlerPotential, phi2: &KahlerPotential) -> Result<Vec<MetricPath>> {
    let mut paths = vec![affine_segment(phi1, phi2, 65)?];
    if phi1.grid().complex_dim() == 1 && dc_distance(phi1, phi2)? > 0.0 {
        paths.push(calabi_lift(phi1, phi2, 65)?.to_metric_path("calabi-lift")?);
    }
    Ok(paths)
}

/// Checks the computable chain between the intrinsic and ambient distances:
/// `d_V < (π/(2√2)) d̃_V`, `d̃_V ≤ √(n/2) L_E` for every trial path, and, in
/// complex dimension one, `L_E = √2 L_C` along the lifted geodesic.
pub fn equivalence_chain_check(
    phi1: &KahlerPotential,
    phi2: &KahlerPotential,
    trial_paths: &[MetricPath],
    tol: f64,
) -> Result<Vec<Report>> {
    let n = phi1.grid().complex_dim() as f64;
    let mu1 = phi1.volume_form();
    let mu2 = phi2.volume_form();
    let dv = dv_distance(&mu1, &mu2)?;
    let dt = dtilde_v_distance(&mu1, &mu2)?;
    let mut out = Vec::new();
    if dt == 0.0 {
        out.push(Report::verdict("coincident volume forms", dv == 0.0, dv, dt));
    } else {
        out.push(Report::at_most("extrinsic below intrinsic volume distance", dt, dv, 0.0));
        out.push(Report::less_than(
            "intrinsic below optimal multiple of extrinsic",
            dv,
            PI / (2.0 * 2f64.sqrt()) * dt,
        ));
    }
    for path in trial_paths {
        let le = path_length_ebin(path)?;
        out.push(Report::at_most(
            format!("extrinsic distance below scaled length of {}", path.generator()),
            dt,
            (0.5 * n).sqrt() * le,
            0.0,
        ));
    }
    if n == 1.0 && dv > 0.0 {
        let lift = calabi_lift(phi1, phi2, 65)?;
        let lc = lift.calabi_length()?;
        let le = path_length_ebin(&lift.to_metric_path("calabi-lift")?)?;
        out.push(Report::close("ambient length of lifted geodesic", le, 2f64.sqrt() * lc, tol));
        out.push(Report::close("Calabi length of lifted geodesic", lc, dv, tol));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn sin1(grid: &Grid, amp: f64) -> ScalarField {
        ScalarField::from_fn(grid, |x| amp * (2.0 * PI * x[0]).sin())
    }

    #[test]
    fn nabla11_of_sine_is_conformal() {
        let g = GridSpec::torus2d(16).unwrap();
        let h = nabla11(&sin1(&g, 1.0)).unwrap();
        for i in 0..g.len() {
            let s = (2.0 * PI * g.coords(i)[0]).sin();
            let e = -2.0 * PI * PI * s;
            assert!((h.at(i)[(0, 0)] - e).abs() < 1e-10);
            assert!((h.at(i)[(1, 1)] - e).abs() < 1e-10);
            assert!(h.at(i)[(0, 1)].abs() < 1e-10);
        }
    }

    #[test]
    fn positivity_boundary_reported_with_location() {
        let g = GridSpec::torus2d(16).unwrap();
        let crit = 1.0 / (2.0 * PI * PI);
        assert!(potential_to_metric(&sin1(&g, 0.99 * crit)).is_ok());
        match potential_to_metric(&sin1(&g, 1.01 * crit)) {
            Err(CoreError::Positivity { coords, eigenvalue, .. }) => {
                assert!(eigenvalue < 0.0);
                assert!((coords[0] - 0.25).abs() < 1e-12);
            }
            other => panic!("expected positivity error, got {other:?}"),
        }
    }

    #[test]
    fn calabi_norm_of_sine_on_flat_torus() {
        let g = GridSpec::torus2d(16).unwrap();
        let p = KahlerPotential::reference(&g);
        let nu = sin1(&g, 1.0);
        let a = calabi_inner(&p, &nu, &nu).unwrap();
        let b = calabi_inner_ddbar(&p, &nu, &nu).unwrap();
        let exact = 2.0 * PI.powi(4);
        assert!((a - exact).abs() < 1e-9 * exact);
        assert!((b - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn inverse_laplacian_on_curved_metric() {
        for g in [GridSpec::torus2d(16).unwrap(), GridSpec::torus4d(8).unwrap()] {
            let tau = 2.0 * PI;
            let phi = ScalarField::from_fn(&g, |x| 0.01 * (tau * x[0]).sin() * (tau * x[1]).cos());
            let p = KahlerPotential::new(phi).unwrap();
            let u = ScalarField::from_fn(&g, |x| (tau * x[1]).sin() + 0.3 * (tau * (x[0] - x[1])).cos());
            let f = p.laplacian(&u).unwrap();
            let back = p.inverse_laplacian(&f).unwrap();
            let shift = p.integrate(&u).unwrap() / p.volume();
            let err = back.sub(&u.map(|v| v - shift)).unwrap().sup_norm();
            assert!(err < 1e-8, "error {err}");
        }
    }

    #[test]
    fn non_mean_zero_rhs_rejected() {
        let g = GridSpec::torus2d(8).unwrap();
        let p = KahlerPotential::reference(&g);
        let f = ScalarField::constant(&g, 1.0);
        assert!(matches!(p.inverse_laplacian(&f), Err(CoreError::NotMeanZero { .. })));
    }

    #[test]
    fn connection_matches_koszul_differences() {
        let g = GridSpec::torus2d(16).unwrap();
        let tau = 2.0 * PI;
        let phi = KahlerPotential::new(ScalarField::from_fn(&g, |x| {
            0.01 * (tau * x[0]).sin() * (tau * x[1]).sin()
        }))
        .unwrap();
        let nu = ScalarField::from_fn(&g, |x| (tau * x[0]).cos());
        let eta = ScalarField::from_fn(&g, |x| (tau * (x[0] + x[1])).sin());
        let psi = ScalarField::from_fn(&g, |x| (2.0 * tau * x[1]).cos() + (tau * x[0]).sin());
        let moved = |dir: &ScalarField, s: f64| {
            KahlerPotential::new(phi.phi().add(&dir.scale(s)).unwrap()).unwrap()
        };
        let deriv = |dir: &ScalarField, a: &ScalarField, b: &ScalarField| {
            let eps = 1e-5;
            let c = |s: f64| calabi_inner(&moved(dir, s * eps), a, b).unwrap();
            (8.0 * (c(1.0) - c(-1.0)) - (c(2.0) - c(-2.0))) / (12.0 * eps)
        };
        let koszul = 0.5 * (deriv(&nu, &eta, &psi) + deriv(&eta, &nu, &psi) - deriv(&psi, &nu, &eta));
        let conn = calabi_connection(&phi, &nu, &eta).unwrap();
        let lhs = calabi_inner(&phi, &conn, &psi).unwrap();
        assert!((lhs - koszul).abs() < 1e-6 * koszul.abs().max(1.0), "{lhs} vs {koszul}");
    }

    #[test]
    fn second_fundamental_trace_integrates_to_negative_multiple() {
        let g = GridSpec::torus4d(8).unwrap();
        let tau = 2.0 * PI;
        let phi = KahlerPotential::new(ScalarField::from_fn(&g, |x| {
            0.004 * (tau * (x[0] + x[2])).cos()
        }))
        .unwrap();
        let nu = ScalarField::from_fn(&g, |x| (tau * x[1]).sin() + (tau * (x[0] - x[3])).cos());
        let tr = second_fundamental_trace(&phi, &nu, &nu).unwrap();
        let lhs = phi.integrate(&tr).unwrap();
        let h = nabla11(&nu).unwrap();
        let rhs = -ebin_inner(phi.metric(), &h, &h).unwrap();
        assert!((lhs - rhs).abs() < 1e-9 * rhs.abs());
        let alt = second_fundamental_trace_from_connections(&phi, &nu, &nu).unwrap();
        assert!(alt.sub(&tr).unwrap().sup_norm() < 1e-6 * tr.sup_norm());
    }

    #[test]
    fn angle_values() {
        assert!(conformal_angle(1).abs() < 1e-15);
        assert!((conformal_angle(2) - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn lifted_geodesic_has_twice_the_squared_speed() {
        let g = GridSpec::torus2d(32).unwrap();
        let p1 = KahlerPotential::reference(&g);
        let p2 = KahlerPotential::new(sin1(&g, 0.02)).unwrap();
        let reports = equivalence_chain_check(&p1, &p2, &default_trial_paths(&p1, &p2).unwrap(), 1e-8).unwrap();
        for r in &reports {
            assert!(r.pass, "{r:?}");
        }
    }
}
