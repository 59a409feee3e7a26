//! Volume forms `μ = F μ₀` relative to the grid's reference measure, their
//! square-root coordinates, geodesics and distances.
//!
//! Tangent vectors `α = a μ₀` are passed as the scalar field `a`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::grid::{pairwise_sum, same_grid, Grid, ScalarField};
use crate::report::Report;

/// Relative tolerance for membership in a fixed-mass level set.
pub const MASS_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Density {
    grid: Grid,
    ratio: Vec<f64>,
    total: f64,
}

fn weighted_sum(grid: &Grid, f: impl Fn(usize) -> f64) -> f64 {
    let terms: Vec<f64> = grid
        .weights()
        .iter()
        .enumerate()
        .map(|(i, w)| w * f(i))
        .collect();
    pairwise_sum(&terms)
}

impl Density {
    pub fn new(grid: &Grid, ratio: Vec<f64>) -> Result<Self> {
        if ratio.len() != grid.len() {
            return Err(CoreError::InvalidInput(format!(
                "expected {} samples, got {}",
                grid.len(),
                ratio.len()
            )));
        }
        for (node, &v) in ratio.iter().enumerate() {
            if !v.is_finite() {
                return Err(CoreError::InvalidInput(format!("non-finite density at node {node}")));
            }
            if v < 0.0 {
                return Err(CoreError::NegativeDensity { node, value: v });
            }
        }
        Ok(Self::from_ratio_unchecked(grid, ratio))
    }

    pub(crate) fn from_ratio_unchecked(grid: &Grid, ratio: Vec<f64>) -> Self {
        let total = weighted_sum(grid, |i| ratio[i]);
        Self {
            grid: grid.clone(),
            ratio,
            total,
        }
    }

    pub fn from_field(f: &ScalarField) -> Result<Self> {
        Self::new(f.grid(), f.values().to_vec())
    }

    /// The reference measure itself.
    pub fn reference(grid: &Grid) -> Self {
        Self::from_ratio_unchecked(grid, vec![1.0; grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ratio(&self) -> &[f64] {
        &self.ratio
    }

    pub fn ratio_field(&self) -> ScalarField {
        ScalarField::from_vec_unchecked(&self.grid, self.ratio.clone())
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        Self::new(&self.grid, self.ratio.iter().map(|v| v * c).collect())
    }

    /// Rescale to total mass `mass`.
    pub fn normalized(&self, mass: f64) -> Result<Self> {
        if self.total <= 0.0 {
            return Err(CoreError::Normalization("density has zero mass".into()));
        }
        self.scale(mass / self.total)
    }

    pub fn ensure_positive(&self) -> Result<()> {
        match self.ratio.iter().position(|&v| v <= 0.0) {
            Some(node) => Err(CoreError::VanishingDensity { node }),
            None => Ok(()),
        }
    }

    pub fn ensure_mass(&self, mass: f64) -> Result<()> {
        if (self.total - mass).abs() > MASS_TOL * mass.abs() {
            return Err(CoreError::WrongMass {
                mass: self.total,
                expected: mass,
            });
        }
        Ok(())
    }

    pub fn l1_distance(&self, other: &Density) -> Result<f64> {
        same_grid(&self.grid, &other.grid)?;
        Ok(weighted_sum(&self.grid, |i| (self.ratio[i] - other.ratio[i]).abs()))
    }
}

/// Square-root coordinates `w = Φ(μ) = 2√(μ/μ₀)`.
#[derive(Debug, Clone)]
pub struct HalfDensity {
    grid: Grid,
    values: Vec<f64>,
}

impl HalfDensity {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if let Some(node) = values.iter().position(|&v| v < 0.0 || !v.is_finite()) {
            return Err(CoreError::NegativeDensity {
                node,
                value: values[node],
            });
        }
        if values.len() != grid.len() {
            return Err(CoreError::InvalidInput("half-density has wrong length".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `L²(μ₀)` norm.
    pub fn norm(&self) -> f64 {
        weighted_sum(&self.grid, |i| self.values[i] * self.values[i]).sqrt()
    }
}

pub fn phi_map(mu: &Density) -> HalfDensity {
    HalfDensity {
        grid: mu.grid.clone(),
        values: mu.ratio.iter().map(|f| 2.0 * f.sqrt()).collect(),
    }
}

pub fn phi_inverse(w: &HalfDensity) -> Density {
    Density::from_ratio_unchecked(&w.grid, w.values.iter().map(|v| 0.25 * v * v).collect())
}

/// `dΦ_μ(α) = a / √F`.
pub fn phi_differential(mu: &Density, a: &ScalarField) -> Result<ScalarField> {
    same_grid(&mu.grid, a.grid())?;
    mu.ensure_positive()?;
    Ok(ScalarField::from_vec_unchecked(
        &mu.grid,
        a.values()
            .iter()
            .zip(&mu.ratio)
            .map(|(a, f)| a / f.sqrt())
            .collect(),
    ))
}

/// `∫ (α/μ)(β/μ) μ` on all positive volume forms.
pub fn gtilde_inner(mu: &Density, a: &ScalarField, b: &ScalarField) -> Result<f64> {
    same_grid(&mu.grid, a.grid())?;
    same_grid(&mu.grid, b.grid())?;
    mu.ensure_positive()?;
    let (a, b) = (a.values(), b.values());
    Ok(weighted_sum(&mu.grid, |i| a[i] * b[i] / mu.ratio[i]))
}

fn ensure_mean_zero(a: &ScalarField) -> Result<()> {
    let scale = a.values().iter().map(|v| v.abs()).fold(0.0, f64::max) * a.grid().volume();
    let m = a.integral();
    if m.abs() > 1e-9 * scale.max(1e-300) {
        return Err(CoreError::NotMeanZero {
            relative_mean: m / scale,
        });
    }
    Ok(())
}

/// The same pairing restricted to mass-preserving tangents.
pub fn gv_inner(mu: &Density, a: &ScalarField, b: &ScalarField) -> Result<f64> {
    ensure_mean_zero(a)?;
    ensure_mean_zero(b)?;
    gtilde_inner(mu, a, b)
}

/// Geodesic of the ambient pairing: `μ(t) = (1 + t a/(2F))² μ`.
pub fn tilv_geodesic(mu: &Density, a: &ScalarField, t: f64) -> Result<Density> {
    same_grid(&mu.grid, a.grid())?;
    mu.ensure_positive()?;
    let ratio = mu
        .ratio
        .iter()
        .zip(a.values())
        .map(|(f, a)| {
            let s = 1.0 + t * a / (2.0 * f);
            s * s * f
        })
        .collect();
    Ok(Density::from_ratio_unchecked(&mu.grid, ratio))
}

/// Roots of a quadratic `c₀ + c₁t + c₂t² = target` counted with multiplicity.
#[derive(Debug, Clone, Serialize)]
pub struct QuadraticCrossing {
    /// Coefficients `[c₀, c₁, c₂]`.
    pub coefficients: [f64; 3],
    pub roots: Vec<f64>,
    /// A double root: the curve touches the level set instead of crossing it.
    pub tangential: bool,
    /// The quadratic is constant and equal to the target.
    pub degenerate: bool,
}

impl QuadraticCrossing {
    pub fn solve(coefficients: [f64; 3], target: f64, rel_tol: f64) -> Self {
        let [c0, c1, c2] = coefficients;
        let a = c2;
        let b = c1;
        let c = c0 - target;
        let scale = c0.abs().max(target.abs()).max(1e-300);
        if a.abs() <= rel_tol * scale && b.abs() <= rel_tol * scale {
            return Self {
                coefficients,
                roots: Vec::new(),
                degenerate: c.abs() <= rel_tol * scale,
                tangential: false,
            };
        }
        if a.abs() <= rel_tol * scale {
            return Self {
                coefficients,
                roots: vec![-c / b],
                degenerate: false,
                tangential: false,
            };
        }
        let disc = b * b - 4.0 * a * c;
        // measured against the quadratic's own size, so round-off in c₀ and c₁
        // does not split a touching root
        let disc_scale = (b * b).max(4.0 * a.abs() * scale).max(1e-300);
        let mut roots = if disc.abs() <= rel_tol * disc_scale {
            let r = -b / (2.0 * a);
            return Self {
                coefficients,
                roots: vec![r, r],
                degenerate: false,
                tangential: true,
            };
        } else if disc < 0.0 {
            Vec::new()
        } else {
            // stable form avoids cancellation
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            if q == 0.0 {
                let r = (-c / a).sqrt();
                vec![-r, r]
            } else {
                vec![q / a, c / q]
            }
        };
        roots.sort_by(f64::total_cmp);
        Self {
            coefficients,
            roots,
            degenerate: false,
            tangential: false,
        }
    }
}

/// Times at which the ambient geodesic through `μ` with velocity `α` has mass `target`.
pub fn tilv_mass_crossings(mu: &Density, a: &ScalarField, target: f64) -> Result<QuadraticCrossing> {
    same_grid(&mu.grid, a.grid())?;
    mu.ensure_positive()?;
    let av = a.values();
    let c1 = weighted_sum(&mu.grid, |i| av[i]);
    let c2 = 0.25 * weighted_sum(&mu.grid, |i| av[i] * av[i] / mu.ratio[i]);
    Ok(QuadraticCrossing::solve([mu.total, c1, c2], target, 1e-12))
}

fn common_mass(mu1: &Density, mu2: &Density) -> Result<f64> {
    same_grid(&mu1.grid, &mu2.grid)?;
    mu2.ensure_mass(mu1.total)?;
    // symmetric in the two arguments, to the bit
    Ok(0.5 * (mu1.total + mu2.total))
}

fn hellinger_sq(mu1: &Density, mu2: &Density) -> f64 {
    weighted_sum(&mu1.grid, |i| {
        let d = mu1.ratio[i].sqrt() - mu2.ratio[i].sqrt();
        d * d
    })
}

/// Half the great-circle angle between the two forms, `arccos(∫√(FG)/V)`.
///
/// Evaluated through `1 − cos = ∫(√F − √G)²/(2V)`, which keeps full relative
/// accuracy for nearby densities.
fn half_angle(mu1: &Density, mu2: &Density, v: f64) -> f64 {
    let x = (hellinger_sq(mu1, mu2) / (2.0 * v)).clamp(0.0, 2.0);
    2.0 * (0.5 * x).sqrt().asin()
}

/// Intrinsic distance on the fixed-mass level set: `2√V arccos(∫√(FG) μ₀ / V)`.
pub fn dv_distance(mu1: &Density, mu2: &Density) -> Result<f64> {
    let v = common_mass(mu1, mu2)?;
    Ok(2.0 * v.sqrt() * half_angle(mu1, mu2, v))
}

/// The same distance with the formula written against another reference `ρ μ₀`.
pub fn dv_distance_with_reference(mu1: &Density, mu2: &Density, rho: &Density) -> Result<f64> {
    let v = common_mass(mu1, mu2)?;
    same_grid(&mu1.grid, &rho.grid)?;
    rho.ensure_positive()?;
    let r = &rho.ratio;
    let overlap = weighted_sum(&mu1.grid, |i| {
        (mu1.ratio[i] / r[i] * (mu2.ratio[i] / r[i])).sqrt() * r[i]
    });
    Ok(2.0 * v.sqrt() * (overlap / v).clamp(-1.0, 1.0).acos())
}

/// Extrinsic distance `‖Φ(μ₂) − Φ(μ₁)‖_{L²(μ₀)}`.
pub fn dtilde_v_distance(mu1: &Density, mu2: &Density) -> Result<f64> {
    same_grid(&mu1.grid, &mu2.grid)?;
    Ok(2.0 * hellinger_sq(mu1, mu2).sqrt())
}

/// Unit-speed great-circle geodesic between two forms of equal mass.
#[derive(Debug, Clone)]
pub struct CalabiGeodesic {
    grid: Grid,
    sqrt_start: Vec<f64>,
    sqrt_end: Vec<f64>,
    start: Vec<f64>,
    end: Vec<f64>,
    volume: f64,
    length: f64,
}

impl CalabiGeodesic {
    pub fn new(mu1: &Density, mu2: &Density) -> Result<Self> {
        let v = common_mass(mu1, mu2)?;
        mu1.ensure_positive()?;
        mu2.ensure_positive()?;
        Ok(Self {
            grid: mu1.grid.clone(),
            sqrt_start: mu1.ratio.iter().map(|f| f.sqrt()).collect(),
            sqrt_end: mu2.ratio.iter().map(|f| f.sqrt()).collect(),
            start: mu1.ratio.clone(),
            end: mu2.ratio.clone(),
            volume: v,
            length: 2.0 * v.sqrt() * half_angle(mu1, mu2, v),
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    fn angle(&self) -> f64 {
        0.5 * self.length / self.volume.sqrt()
    }

    /// `(√F, (√F)_t)` per node at time `t`.
    fn root_and_rate(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let theta = self.angle();
        if theta < 1e-300 {
            return (self.sqrt_start.clone(), vec![0.0; self.start.len()]);
        }
        let rv = self.volume.sqrt();
        let s = theta.sin();
        let a = (0.5 * (self.length - t) / rv).sin() / s;
        let b = (0.5 * t / rv).sin() / s;
        let da = -(0.5 * (self.length - t) / rv).cos() / (2.0 * rv * s);
        let db = (0.5 * t / rv).cos() / (2.0 * rv * s);
        let root = self
            .sqrt_start
            .iter()
            .zip(&self.sqrt_end)
            .map(|(f, g)| a * f + b * g)
            .collect();
        let rate = self
            .sqrt_start
            .iter()
            .zip(&self.sqrt_end)
            .map(|(f, g)| da * f + db * g)
            .collect();
        (root, rate)
    }

    pub fn at(&self, t: f64) -> Density {
        let (r, _) = self.root_and_rate(t);
        Density::from_ratio_unchecked(&self.grid, r.iter().map(|s| s * s).collect())
    }

    /// `F_t(t)`.
    pub fn velocity(&self, t: f64) -> ScalarField {
        let (r, dr) = self.root_and_rate(t);
        ScalarField::from_vec_unchecked(
            &self.grid,
            r.iter().zip(&dr).map(|(s, ds)| 2.0 * s * ds).collect(),
        )
    }

    /// `F_tt(t) = 2((√F)_t)² − F/(2V)`.
    pub fn acceleration(&self, t: f64) -> ScalarField {
        let (r, dr) = self.root_and_rate(t);
        let v = self.volume;
        ScalarField::from_vec_unchecked(
            &self.grid,
            r.iter()
                .zip(&dr)
                .map(|(s, ds)| 2.0 * ds * ds - s * s / (2.0 * v))
                .collect(),
        )
    }

    /// Sup-norm of `F_t² − 2F_tt F − F²/V` (unit speed).
    pub fn ode_residual(&self, t: f64) -> f64 {
        let f = self.at(t);
        let ft = self.velocity(t);
        let ftt = self.acceleration(t);
        let v = self.volume;
        f.ratio
            .iter()
            .zip(ft.values())
            .zip(ftt.values())
            .map(|((f, ft), ftt)| (ft * ft - 2.0 * ftt * f - f * f / v).abs())
            .fold(0.0, f64::max)
    }

    /// Endpoint velocity from the closed form
    /// `G cot θ / √V − √(FG) / (√V sin θ)`, `θ = T/(2√V)`.
    pub fn terminal_velocity(&self) -> ScalarField {
        let theta = self.angle();
        let rv = self.volume.sqrt();
        let values = if theta < 1e-300 {
            vec![0.0; self.start.len()]
        } else {
            self.start
                .iter()
                .zip(&self.end)
                .map(|(f, g)| g / theta.tan() / rv - (f * g).sqrt() / (rv * theta.sin()))
                .collect()
        };
        ScalarField::from_vec_unchecked(&self.grid, values)
    }

    /// Intrinsic speed `√(g_V(F_t, F_t))` at time `t`.
    pub fn speed(&self, t: f64) -> f64 {
        let mu = self.at(t);
        let ft = self.velocity(t);
        let v = ft.values();
        weighted_sum(&self.grid, |i| v[i] * v[i] / mu.ratio[i]).sqrt()
    }
}

pub fn calabi_geodesic(mu1: &Density, mu2: &Density, t: f64) -> Result<Density> {
    Ok(CalabiGeodesic::new(mu1, mu2)?.at(t))
}

pub fn geodesic_length(mu1: &Density, mu2: &Density) -> Result<f64> {
    Ok(CalabiGeodesic::new(mu1, mu2)?.length())
}

/// Radial projection of the ambient chord onto the fixed-mass sphere:
/// `(V/v(t)) ((1−t)√F₁ + t√F₂)²`.
pub fn chord_projection(mu1: &Density, mu2: &Density, t: f64) -> Result<Density> {
    let v = common_mass(mu1, mu2)?;
    let chord: Vec<f64> = mu1
        .ratio
        .iter()
        .zip(&mu2.ratio)
        .map(|(f, g)| {
            let s = (1.0 - t) * f.sqrt() + t * g.sqrt();
            s * s
        })
        .collect();
    let vt = weighted_sum(&mu1.grid, |i| chord[i]);
    Ok(Density::from_ratio_unchecked(
        &mu1.grid,
        chord.iter().map(|c| c * v / vt).collect(),
    ))
}

/// Checks `d̃_V ≤ d_V < (π/(2√2)) d̃_V` and the intermediate convexity step.
pub fn equivalence_check(mu1: &Density, mu2: &Density) -> Result<Vec<Report>> {
    let v = common_mass(mu1, mu2)?;
    let dv = dv_distance(mu1, mu2)?;
    let dt = dtilde_v_distance(mu1, mu2)?;
    let x = dv / (2.0 * v.sqrt());
    let identical = dt == 0.0;
    let upper = PI / (2.0 * 2f64.sqrt()) * dt;
    Ok(vec![
        Report::at_most("extrinsic distance below intrinsic", dt, dv, 0.0),
        if identical {
            Report::verdict("intrinsic below optimal multiple of extrinsic", dv == 0.0, dv, upper)
        } else {
            Report::less_than("intrinsic below optimal multiple of extrinsic", dv, upper)
        },
        Report::at_most(
            "convexity bound on half angle",
            x - 0.5 * PI * x.sin(),
            0.0,
            0.0,
        ),
        Report::less_than("diameter bound", dv, PI * v.sqrt()),
    ])
}

fn smooth_step(s: f64) -> f64 {
    let e = |s: f64| if s <= 0.0 { 0.0 } else { (-1.0 / s).exp() };
    let (a, b) = (e(s), e(1.0 - s));
    a / (a + b)
}

/// Smooth indicator of `[lo, hi]` with ramps of width `ramp`.
pub fn mollified_indicator(u: f64, lo: f64, hi: f64, ramp: f64) -> f64 {
    smooth_step((u - lo) / ramp) * smooth_step((hi - u) / ramp)
}

/// Normalized position along the first axis, in `[0, 1)`.
fn unit_coordinate(grid: &Grid, node: usize) -> f64 {
    let c = grid.coords(node)[0];
    if grid.topology().is_torus() {
        c
    } else {
        c / PI
    }
}

/// Pair of forms of mass `V` concentrated on disjoint slabs, floored at `ε`.
pub fn bump_pair(grid: &Grid, eps: f64) -> Result<(Density, Density)> {
    let make = |lo: f64, hi: f64| -> Result<Density> {
        let ratio = (0..grid.len())
            .map(|i| eps + mollified_indicator(unit_coordinate(grid, i), lo, hi, 0.1))
            .collect();
        Density::new(grid, ratio)?.normalized(grid.volume())
    };
    Ok((make(0.05, 0.45)?, make(0.55, 0.95)?))
}

/// `d_V / d̃_V` along the bump family.
pub fn bump_family_ratios(grid: &Grid, eps: &[f64]) -> Result<Vec<(f64, f64)>> {
    eps.iter()
        .map(|&e| {
            let (a, b) = bump_pair(grid, e)?;
            Ok((e, dv_distance(&a, &b)? / dtilde_v_distance(&a, &b)?))
        })
        .collect()
}

/// Great-circle ray from `μ` in the unit direction `G μ` that exits through
/// the boundary of the positive cone.
#[derive(Debug, Clone)]
pub struct BoundaryRay {
    base: Density,
    direction: Vec<f64>,
    volume: f64,
    t_max: f64,
    exit_node: usize,
}

impl BoundaryRay {
    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn exit_node(&self) -> usize {
        self.exit_node
    }

    /// `μ (G√V sin(½t/√V) + cos(½t/√V))²`.
    pub fn at(&self, t: f64) -> Density {
        let rv = self.volume.sqrt();
        let (s, c) = (0.5 * t / rv).sin_cos();
        let ratio = self
            .base
            .ratio
            .iter()
            .zip(&self.direction)
            .map(|(f, g)| {
                let m = g * rv * s + c;
                f * m * m
            })
            .collect();
        Density::from_ratio_unchecked(&self.base.grid, ratio)
    }

    pub fn terminal(&self) -> Density {
        let mut d = self.at(self.t_max);
        d.ratio[self.exit_node] = 0.0;
        d.total = weighted_sum(&d.grid, |i| d.ratio[i]);
        d
    }
}

/// Requires `∫G μ = 0` and `∫G² μ = 1`.
pub fn boundary_ray(mu: &Density, g: &ScalarField) -> Result<BoundaryRay> {
    same_grid(&mu.grid, g.grid())?;
    mu.ensure_positive()?;
    let gv = g.values();
    let first = weighted_sum(&mu.grid, |i| gv[i] * mu.ratio[i]);
    let abs_first = weighted_sum(&mu.grid, |i| gv[i].abs() * mu.ratio[i]);
    let second = weighted_sum(&mu.grid, |i| gv[i] * gv[i] * mu.ratio[i]);
    if first.abs() > 1e-9 * abs_first.max(1e-300) {
        return Err(CoreError::Normalization(format!(
            "direction has nonzero mean {first:e}"
        )));
    }
    if (second - 1.0).abs() > 1e-9 {
        return Err(CoreError::Normalization(format!(
            "direction has squared norm {second}, expected 1"
        )));
    }
    let v = mu.total;
    let rv = v.sqrt();
    let (exit_node, tau) = gv
        .iter()
        .enumerate()
        .map(|(i, g)| (i, 1.0_f64.atan2(-g * rv)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| CoreError::InvalidInput("empty grid".into()))?;
    Ok(BoundaryRay {
        base: mu.clone(),
        direction: gv.to_vec(),
        volume: v,
        t_max: 2.0 * rv * tau,
        exit_node,
    })
}

/// Outcome of comparing two convergence criteria on the same sequence.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionComparison {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub first_converges: bool,
    pub second_converges: bool,
}

impl CriterionComparison {
    pub fn agree(&self) -> bool {
        self.first_converges == self.second_converges
    }

    pub fn report(&self, name: &str) -> Report {
        Report::verdict(
            format!(
                "{name} ({})",
                if self.first_converges { "convergent" } else { "non-convergent" }
            ),
            self.agree(),
            self.first.last().copied().unwrap_or(0.0),
            self.second.last().copied().unwrap_or(0.0),
        )
    }
}

/// Three successive terms below `tol`, without increase between them.
pub fn is_converging(terms: &[f64], tol: f64) -> bool {
    if terms.len() < 3 {
        return false;
    }
    let tail = &terms[terms.len() - 3..];
    tail.iter().all(|&t| t < tol) && tail.windows(2).all(|w| w[1] <= w[0])
}

pub const CONVERGENCE_TOL: f64 = 1e-6;

/// `∫|μ_k − μ| → 0` against `d_V(μ_k, μ) → 0` on a sequence of fixed mass.
pub fn l1_convergence_check(sequence: &[Density], limit: &Density) -> Result<CriterionComparison> {
    let mut l1 = Vec::with_capacity(sequence.len());
    let mut dv = Vec::with_capacity(sequence.len());
    for mu in sequence {
        l1.push(mu.l1_distance(limit)?);
        dv.push(dv_distance(mu, limit)?);
    }
    Ok(CriterionComparison {
        first_converges: is_converging(&l1, CONVERGENCE_TOL),
        second_converges: is_converging(&dv, CONVERGENCE_TOL),
        first: l1,
        second: dv,
    })
}

/// `f_k → f` in `L²` against `f_k² → f²` in `L¹`, for nonnegative functions.
pub fn l1_l2_equivalence(sequence: &[ScalarField], limit: &ScalarField) -> Result<CriterionComparison> {
    if let Some(node) = limit.values().iter().position(|&v| v < 0.0) {
        return Err(CoreError::NegativeDensity {
            node,
            value: limit.values()[node],
        });
    }
    let lv = limit.values();
    let grid = limit.grid();
    let mut l2 = Vec::with_capacity(sequence.len());
    let mut l1 = Vec::with_capacity(sequence.len());
    for f in sequence {
        same_grid(grid, f.grid())?;
        let fv = f.values();
        if let Some(node) = fv.iter().position(|&v| v < 0.0) {
            return Err(CoreError::NegativeDensity {
                node,
                value: fv[node],
            });
        }
        l2.push(weighted_sum(grid, |i| (fv[i] - lv[i]).powi(2)).sqrt());
        l1.push(weighted_sum(grid, |i| (fv[i] * fv[i] - lv[i] * lv[i]).abs()));
    }
    Ok(CriterionComparison {
        first_converges: is_converging(&l2, CONVERGENCE_TOL),
        second_converges: is_converging(&l1, CONVERGENCE_TOL),
        first: l2,
        second: l1,
    })
}
