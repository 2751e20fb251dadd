//! Compactly supported force fields and their integral invariants.
//!
//! All families are built from the bump `b(s) = (1 - s^2)^4` for `s < 1`
//! (exactly zero beyond), so every force vanishes identically outside its
//! support disk. The total force is the pairing with a radial cutoff that is 1 on
//! the support and falls to 0 at twice the support radius through the quintic
//! smoothstep `S(t) = 10t^3 - 15t^4 + 6t^5`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScalarField, TensorField, VectorField};
use crate::grid::PolarGrid;
use crate::operators::{divergence, gradient};
use crate::poisson::{ball_grid, hminus1_components, resample, solve_poisson_neumann_projected};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceFamily {
    /// Identically zero.
    None,
    /// Odd bump pointing along the orientation; total force zero.
    BumpDipole,
    /// Even bump pointing along the orientation; nonzero total force.
    BumpNet,
    /// Azimuthal swirl; total force zero, nonzero curl.
    Rotlet,
    /// Divergence of the tensor `amplitude * M(orientation) * b`.
    TensorDivergence,
}

impl ForceFamily {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" | "zero" => Some(Self::None),
            "bump_dipole" => Some(Self::BumpDipole),
            "bump_net" => Some(Self::BumpNet),
            "rotlet" => Some(Self::Rotlet),
            "tensor_divergence" => Some(Self::TensorDivergence),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::BumpDipole => "bump_dipole",
            Self::BumpNet => "bump_net",
            Self::Rotlet => "rotlet",
            Self::TensorDivergence => "tensor_divergence",
        }
    }

    /// Whether the family has zero total force by construction.
    pub fn zero_total_force(&self) -> bool {
        !matches!(self, Self::BumpNet)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceSpec {
    pub family: ForceFamily,
    pub support_radius: f64,
    pub amplitude: f64,
    pub orientation: f64,
    pub center: [f64; 2],
}

impl Default for ForceSpec {
    fn default() -> Self {
        Self { family: ForceFamily::None, support_radius: 1.0, amplitude: 0.0, orientation: 0.0, center: [0.0, 0.0] }
    }
}

fn bump(s: f64) -> f64 {
    if s < 1.0 {
        (1.0 - s * s).powi(4)
    } else {
        0.0
    }
}

impl ForceSpec {
    pub fn new(family: ForceFamily, support_radius: f64, amplitude: f64) -> Self {
        Self { family, support_radius, amplitude, ..Self::default() }
    }

    /// Radius of the bump itself: the support radius minus the centre offset.
    pub fn bump_radius(&self) -> f64 {
        self.support_radius - self.center[0].hypot(self.center[1])
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.support_radius > 0.0) {
            return Err(Error::Config("force support radius must be positive".into()));
        }
        if !(self.bump_radius() > 0.0) {
            return Err(Error::Config("force centre lies outside its support disk".into()));
        }
        if !self.amplitude.is_finite() || !self.orientation.is_finite() {
            return Err(Error::Config("force amplitude and orientation must be finite".into()));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.family == ForceFamily::None || self.amplitude == 0.0
    }

    /// Force at the Cartesian point `(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> (f64, f64) {
        if self.is_zero() {
            return (0.0, 0.0);
        }
        let rb = self.bump_radius();
        let (zx, zy) = (x - self.center[0], y - self.center[1]);
        let s = zx.hypot(zy) / rb;
        if s >= 1.0 {
            return (0.0, 0.0);
        }
        let a = self.amplitude;
        let (sa, ca) = self.orientation.sin_cos();
        match self.family {
            ForceFamily::None => (0.0, 0.0),
            ForceFamily::BumpNet => {
                let b = bump(s);
                (a * b * ca, a * b * sa)
            }
            ForceFamily::BumpDipole => {
                let b = a * (zx * ca + zy * sa) / rb * bump(s);
                (b * ca, b * sa)
            }
            ForceFamily::Rotlet => {
                let b = a * bump(s) / rb;
                (-b * zy, b * zx)
            }
            ForceFamily::TensorDivergence => {
                // grad b = -8 (1 - s^2)^3 z / rb^2 ; M = rotation by the orientation
                let q = -8.0 * (1.0 - s * s).powi(3) / (rb * rb);
                let (gx, gy) = (q * zx, q * zy);
                (a * (ca * gx - sa * gy), a * (sa * gx + ca * gy))
            }
        }
    }

    /// The tensor whose divergence is the force (only for `TensorDivergence`).
    pub fn tensor(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        let rb = self.bump_radius();
        let s = (x - self.center[0]).hypot(y - self.center[1]) / rb;
        let b = self.amplitude * bump(s);
        let (sa, ca) = self.orientation.sin_cos();
        [[b * ca, -b * sa], [b * sa, b * ca]]
    }

    /// Sample on a grid.
    pub fn sample(&self, grid: &Arc<PolarGrid>) -> VectorField {
        VectorField::from_fn(grid.clone(), |x, y| self.eval(x, y))
    }

    /// The same force after the rescaling `f_tau(z) = tau^3 f(tau z)`.
    pub fn rescaled(&self, tau: f64) -> Self {
        Self {
            support_radius: self.support_radius / tau,
            amplitude: self.amplitude * tau.powi(3),
            center: [self.center[0] / tau, self.center[1] / tau],
            ..*self
        }
    }
}

/// Cutoff `chi` of the total-force pairing.
pub fn cutoff(r: f64, support_radius: f64) -> f64 {
    let t = (r - support_radius) / support_radius;
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }
}

/// `||grad chi||_{L^2}`, independent of the support radius.
pub fn cutoff_constant() -> f64 {
    // 2 pi * int_0^1 S'(t)^2 (1 + t) dt by 5-point Gauss-Legendre (exact for degree 9)
    let x = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    let w = [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1, 0.236_926_885_056_189_1];
    let mut acc = 0.0;
    for k in 0..5 {
        let t = 0.5 * (x[k] + 1.0);
        let ds = 30.0 * t * t * (1.0 - t) * (1.0 - t);
        acc += 0.5 * w[k] * ds * ds * (1.0 + t);
    }
    (2.0 * PI * acc).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceSummary {
    pub family: ForceFamily,
    pub support_radius: f64,
    pub amplitude: f64,
    pub total_force: [f64; 2],
    /// `||f||_{H^-1(B_{2R})}`, Euclidean combination of components.
    pub a_norm: f64,
    pub a_components: [f64; 2],
    /// `||grad chi||_{L^2}`: the constant in `|F| <= C A`.
    pub cutoff_constant: f64,
}

impl ForceSummary {
    pub fn total_force_norm(&self) -> f64 {
        self.total_force[0].hypot(self.total_force[1])
    }
}

/// Total force `<f, chi>` of a sampled field.
pub fn total_force(f: &VectorField, support_radius: f64) -> Result<[f64; 2]> {
    let g = &f.grid;
    let (ux, uy) = f.to_cartesian();
    let nt = g.n_theta;
    let outer = (2.0 * support_radius).min(g.r_out);
    let mut out = [0.0; 2];
    for (c, vals) in [ux, uy].iter().enumerate() {
        let weighted: Vec<f64> =
            vals.iter().enumerate().map(|(k, v)| v * cutoff(g.radii[k / nt], support_radius)).collect();
        out[c] = ScalarField { grid: g.clone(), values: weighted }.annulus_integral(0.0, outer)?;
    }
    Ok(out)
}

/// Sample a force on a grid and compute its summary.
pub fn make_force(spec: &ForceSpec, grid: &Arc<PolarGrid>) -> Result<(VectorField, ForceSummary)> {
    spec.validate()?;
    let r = spec.support_radius;
    if 2.0 * r > grid.r_out * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "support radius {r} too large for a disk of radius {} (need 2R <= r_out)",
            grid.r_out
        )));
    }
    let f = spec.sample(grid);
    let total = total_force(&f, r)?;
    let h = hminus1_components(&f, 2.0 * r)?;
    let summary = ForceSummary {
        family: spec.family,
        support_radius: r,
        amplitude: spec.amplitude,
        total_force: total,
        a_norm: h.total,
        a_components: h.components,
        cutoff_constant: cutoff_constant(),
    };
    Ok((f, summary))
}

/// Tensor potential with its verification record.
#[derive(Debug, Clone)]
pub struct TensorPotential {
    pub tensor: TensorField,
    /// `||div T - f||_{L^2} / ||f||_{L^2}` on the ball.
    pub divergence_error: f64,
    pub tensor_l2: f64,
    pub a_norm: f64,
    /// `||T||_{L^2} / ||f||_{H^-1}`.
    pub ratio: f64,
}

fn l2(grid: &Arc<PolarGrid>, a: &[f64], b: &[f64]) -> f64 {
    let sq: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * x + y * y).collect();
    ScalarField { grid: grid.clone(), values: sq }.disk_integral().max(0.0).sqrt()
}

/// Tensor `T = grad g` with `lap g = f` in `B_{2R}` and zero normal derivative,
/// so that `div T = f` (requires zero total force).
pub fn tensor_potential(f: &VectorField, support_radius: f64) -> Result<TensorPotential> {
    let g = &f.grid;
    let ball = 2.0 * support_radius;
    if ball > g.r_out * (1.0 + 1e-12) {
        return Err(Error::Range(format!("ball of radius {ball} exceeds the grid")));
    }
    let (ux, uy) = f.to_cartesian();
    let abs_scale = ScalarField { grid: g.clone(), values: ux.iter().zip(&uy).map(|(a, b)| a.hypot(*b)).collect() }
        .annulus_integral(0.0, ball)?;
    let tf = total_force(f, support_radius)?;
    if tf[0].hypot(tf[1]) > 1e-8 * abs_scale.max(1e-300) {
        return Err(Error::Precondition(format!(
            "tensor potential needs zero total force, got ({:.3e}, {:.3e})",
            tf[0], tf[1]
        )));
    }
    let bg = ball_grid(g, ball)?;
    let comps = [resample(&ux, g, &bg, 1.0)?, resample(&uy, g, &bg, 1.0)?];
    let mut tensor = TensorField::zeros(bg.clone());
    let mut div_err_sq = 0.0;
    for (i, comp) in comps.iter().enumerate() {
        let rhs = ScalarField { grid: bg.clone(), values: comp.clone() };
        let sol = solve_poisson_neumann_projected(&rhs, &vec![0.0; bg.n_theta])?;
        let grad = gradient(&sol.field);
        let (gx, gy) = grad.to_cartesian();
        let div = divergence(&VectorField::from_cartesian(bg.clone(), &gx, &gy));
        let resid: Vec<f64> = div.values.iter().zip(comp).map(|(a, b)| a - b).collect();
        let e = l2(&bg, &resid, &vec![0.0; resid.len()]);
        div_err_sq += e * e;
        tensor.t[i][0] = gx;
        tensor.t[i][1] = gy;
    }
    let f_l2 = l2(&bg, &comps[0], &comps[1]);
    let tensor_l2 = tensor.l2_norm();
    let a_norm = hminus1_components(f, ball)?.total;
    Ok(TensorPotential {
        tensor,
        divergence_error: if f_l2 > 0.0 { div_err_sq.sqrt() / f_l2 } else { 0.0 },
        tensor_l2,
        a_norm,
        ratio: if a_norm > 0.0 { tensor_l2 / a_norm } else { 0.0 },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainChange {
    pub a: f64,
    /// `||f||_{H^-1(B_{aR})}`.
    pub norm_large: f64,
    /// `||f||_{H^-1(B_{2R})}`.
    pub norm_base: f64,
    /// `1 + sqrt(ln(a/2))`.
    pub log_factor: f64,
    /// `norm_large / norm_base`.
    pub plain_ratio: f64,
    /// `norm_large / (norm_base * log_factor)`: the empirical constant.
    pub ratio: f64,
}

/// Compare the H^-1 norms of `f` on `B_{aR}` and `B_{2R}`.
pub fn change_of_domain_ratio(f: &VectorField, support_radius: f64, a: f64) -> Result<DomainChange> {
    if !(a >= 2.0) {
        return Err(Error::Range(format!("domain factor a = {a} must be >= 2")));
    }
    if a * support_radius > f.grid.r_out * (1.0 + 1e-12) {
        return Err(Error::Range(format!(
            "ball of radius {} exceeds the grid radius {}",
            a * support_radius,
            f.grid.r_out
        )));
    }
    let norm_large = hminus1_components(f, a * support_radius)?.total;
    let norm_base = hminus1_components(f, 2.0 * support_radius)?.total;
    let log_factor = 1.0 + (a / 2.0).ln().sqrt();
    let plain_ratio = if norm_base > 0.0 { norm_large / norm_base } else { 0.0 };
    Ok(DomainChange { a, norm_large, norm_base, log_factor, plain_ratio, ratio: plain_ratio / log_factor })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(r_out: f64) -> Arc<PolarGrid> {
        Arc::new(PolarGrid::with_inner_spacing(r_out, 0.03, 1.04, 32).unwrap())
    }

    #[test]
    fn cutoff_constant_closed_form() {
        // 2 pi * 900 * (B(5,5) + B(6,5)) = 30 pi / 7
        assert!((cutoff_constant() - (30.0 * PI / 7.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn forces_vanish_outside_support() {
        for family in [ForceFamily::BumpDipole, ForceFamily::BumpNet, ForceFamily::Rotlet, ForceFamily::TensorDivergence] {
            let spec = ForceSpec { family, support_radius: 1.0, amplitude: 2.0, orientation: 0.4, center: [0.1, -0.2] };
            let g = grid(3.0);
            let f = spec.sample(&g);
            let nt = g.n_theta;
            for k in 0..g.len() {
                if g.radii[k / nt] >= 1.0 {
                    assert_eq!(f.u_r[k], 0.0);
                    assert_eq!(f.u_theta[k], 0.0);
                }
            }
        }
    }

    #[test]
    fn total_force_classes() {
        let g = grid(2.0);
        for family in [ForceFamily::BumpDipole, ForceFamily::Rotlet, ForceFamily::TensorDivergence] {
            let spec = ForceSpec { family, support_radius: 1.0, amplitude: 3.0, orientation: 0.7, center: [0.0, 0.0] };
            let (_, s) = make_force(&spec, &g).unwrap();
            assert!(s.total_force_norm() <= 1e-10 * 3.0, "{family:?}: {:?}", s.total_force);
        }
    }

    #[test]
    fn bump_net_total_force_matches_radial_oracle() {
        let g = grid(2.0);
        let a = 1.7;
        let spec = ForceSpec::new(ForceFamily::BumpNet, 1.0, a);
        let (_, s) = make_force(&spec, &g).unwrap();
        // 1D oracle: 2 pi int_0^1 b(r) r dr by composite Simpson at fine resolution
        let n = 20_000;
        let h = 1.0 / n as f64;
        let mut acc = 0.0;
        for k in 0..=n {
            let r = k as f64 * h;
            let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * bump(r) * r;
        }
        let i0 = 2.0 * PI * acc * h / 3.0;
        assert!((s.total_force[0] - a * i0).abs() < 1e-6 * a * i0, "{} vs {}", s.total_force[0], a * i0);
        assert!(s.total_force[1].abs() < 1e-12);
        assert!((i0 - PI / 5.0).abs() < 1e-10);
        assert!(s.total_force_norm() <= s.cutoff_constant * s.a_norm);
    }

    #[test]
    fn rotlet_has_curl() {
        let g = grid(2.0);
        let f = ForceSpec::new(ForceFamily::Rotlet, 1.0, 1.0).sample(&g);
        assert!(crate::operators::curl2d(&f).max_abs() > 0.1);
    }

    #[test]
    fn support_too_large_rejected() {
        let g = grid(1.5);
        assert!(make_force(&ForceSpec::new(ForceFamily::BumpNet, 1.0, 1.0), &g).is_err());
    }

    #[test]
    fn tensor_potential_recovers_divergence() {
        let spec = ForceSpec { family: ForceFamily::TensorDivergence, support_radius: 1.0, amplitude: 1.0, orientation: 0.3, center: [0.0, 0.0] };
        let errs: Vec<f64> = [0.04, 0.02]
            .iter()
            .map(|&h| {
                let g = Arc::new(PolarGrid::with_inner_spacing(2.0, h, 1.0, 32).unwrap());
                tensor_potential(&spec.sample(&g), 1.0).unwrap().divergence_error
            })
            .collect();
        assert!(errs[1] < 1e-2, "{errs:?}");
        assert!(errs[0] / errs[1] > 3.0, "not second order: {errs:?}");
        let g = grid(2.0);
        let zero = tensor_potential(&VectorField::zeros(g.clone()), 1.0).unwrap();
        assert_eq!(zero.tensor_l2, 0.0);
        let net = ForceSpec::new(ForceFamily::BumpNet, 1.0, 1.0).sample(&g);
        assert!(matches!(tensor_potential(&net, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn tensor_potential_ratio_is_radius_independent() {
        let ratios: Vec<f64> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&r| {
                let g = Arc::new(PolarGrid::with_inner_spacing(2.0 * r, 0.03 * r, 1.04, 32).unwrap());
                let f = ForceSpec::new(ForceFamily::BumpDipole, r, 1.0).sample(&g);
                tensor_potential(&f, r).unwrap().ratio
            })
            .collect();
        for r in &ratios {
            assert!(r.is_finite() && *r > 0.0);
            assert!((r / ratios[1] - 1.0).abs() < 1e-6, "{ratios:?}");
        }
    }

    #[test]
    fn change_of_domain() {
        let g = Arc::new(PolarGrid::with_inner_spacing(64.0, 0.03, 1.06, 32).unwrap());
        let same = change_of_domain_ratio(&ForceSpec::new(ForceFamily::BumpNet, 1.0, 1.0).sample(&g), 1.0, 2.0).unwrap();
        assert!((same.plain_ratio - 1.0).abs() < 1e-12);
        assert_eq!(same.log_factor, 1.0);
        assert!(change_of_domain_ratio(&VectorField::zeros(g.clone()), 1.0, 1.5).is_err());
        assert!(change_of_domain_ratio(&VectorField::zeros(g.clone()), 1.0, 128.0).is_err());
    }
}
