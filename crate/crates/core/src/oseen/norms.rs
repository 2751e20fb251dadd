//! Weighted sup norm against the wake majorants, the `L^5` norm on the ball
//! `B_{2R}`, and their sum.
//!
//! The majorants `h_1 = |z|^{-1/2}`, `h_2 = |z|^{-3/5}` are stated for unit far
//! speed. Fields with far speed `lambda` are measured after the rescaling
//! `u~(z) = u(z / lambda) / lambda` (which maps the far speed to 1); inside the
//! unit disk the majorants are continued by 1.

use serde::{Deserialize, Serialize};

use super::lattice::LatticeField;
use crate::nse::Solution;

/// Decay exponents of the two majorants.
pub const MAJORANT_EXPONENTS: [f64; 2] = [0.5, 0.6];

/// Fraction of the sampled region kept for the sup norm (outer boundary guard).
pub const GUARD_FRACTION: f64 = 0.9;

/// `(h_1, h_2)` at a point given in unit-speed coordinates.
pub fn majorant(z: [f64; 2]) -> [f64; 2] {
    let r = z[0].hypot(z[1]).max(1.0);
    [r.powf(-MAJORANT_EXPONENTS[0]), r.powf(-MAJORANT_EXPONENTS[1])]
}

/// A perturbation field sampled at points with quadrature areas.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub points: Vec<[f64; 2]>,
    pub u: Vec<[f64; 2]>,
    pub area: Vec<f64>,
    /// Whether the point lies inside the boundary guard.
    pub guarded: Vec<bool>,
}

impl Samples {
    /// Cell centres of a lattice; the guard is the square of side `0.9` times the lattice.
    pub fn from_lattice(f: &LatticeField) -> Self {
        let l = f.lattice;
        let limit = GUARD_FRACTION * l.half_width();
        let points = l.points();
        let guarded = points.iter().map(|z| z[0].abs().max(z[1].abs()) <= limit).collect();
        Self {
            u: f.u1.iter().zip(&f.u2).map(|(a, b)| [*a, *b]).collect(),
            area: vec![l.h * l.h; l.len()],
            points,
            guarded,
        }
    }

    /// Nodes of a disk solution, with the perturbation `w - w_inf`.
    pub fn from_solution(sol: &Solution) -> Self {
        let g = &sol.grid;
        let (wx, wy) = sol.w.to_cartesian();
        let limit = GUARD_FRACTION * g.r_out;
        let mut s = Self { points: Vec::new(), u: Vec::new(), area: Vec::new(), guarded: Vec::new() };
        for i in 0..g.n_r {
            let r = g.radii[i];
            for j in 0..g.n_theta {
                let (st, ct) = g.theta(j).sin_cos();
                let k = g.idx(i, j);
                s.points.push([r * ct, r * st]);
                s.u.push([wx[k] - sol.far_velocity.0, wy[k] - sol.far_velocity.1]);
                s.area.push(g.quad_weights[i]);
                s.guarded.push(r <= limit);
            }
        }
        s
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same points with the values replaced by `a u + b v`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        Self {
            u: self.u.iter().zip(&other.u).map(|(x, y)| [a * x[0] + b * y[0], a * x[1] + b * y[1]]).collect(),
            ..self.clone()
        }
    }
}

/// The three norms of one field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormLedger {
    /// `sup_{|z| >= 2R, i} |u_i| / h_i`.
    pub y_norm: f64,
    /// The sup for each component separately.
    pub y_components: [f64; 2],
    /// `||u||_{L^5(B_{2R})}`.
    pub l5_ball: f64,
    pub x_norm: f64,
}

/// Norms of sampled data for support radius `R` and far speed `lambda`.
pub fn norm_ledger(s: &Samples, support_radius: f64, lambda: f64) -> NormLedger {
    let ball = 2.0 * support_radius;
    let mut y = [0.0f64; 2];
    let mut l5 = 0.0;
    for k in 0..s.len() {
        let z = s.points[k];
        let r = z[0].hypot(z[1]);
        let u = s.u[k];
        if r < ball {
            l5 += (u[0] * u[0] + u[1] * u[1]).powf(2.5) * s.area[k];
        } else if s.guarded[k] {
            let h = majorant([lambda * z[0], lambda * z[1]]);
            y[0] = y[0].max(u[0].abs() / (lambda * h[0]));
            y[1] = y[1].max(u[1].abs() / (lambda * h[1]));
        }
    }
    let l5_ball = l5.powf(0.2) * lambda.powf(-0.6);
    let y_norm = y[0].max(y[1]);
    NormLedger { y_norm, y_components: y, l5_ball, x_norm: y_norm + l5_ball }
}

/// `||u||_{L^2(B_{2R})}` of sampled data (no rescaling).
pub fn l2_ball(s: &Samples, support_radius: f64) -> f64 {
    let ball = 2.0 * support_radius;
    (0..s.len())
        .filter(|&k| s.points[k][0].hypot(s.points[k][1]) < ball)
        .map(|k| (s.u[k][0].powi(2) + s.u[k][1].powi(2)) * s.area[k])
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oseen::lattice::Lattice;
    use proptest::prelude::*;

    fn random_samples(seed: &[f64]) -> Samples {
        let l = Lattice::new(4.0, 0.5).unwrap();
        let f = LatticeField::from_fn(l, |x, y| {
            let a = seed[0] * (x * seed[1]).sin() + seed[2] / (1.0 + x * x + y * y);
            let b = seed[3] * (y * seed[4]).cos() * (-0.1 * x * x).exp();
            (a, b)
        });
        Samples::from_lattice(&f)
    }

    #[test]
    fn majorant_saturating_field_has_unit_norm() {
        let l = Lattice::new(8.0, 0.25).unwrap();
        let f = LatticeField::from_fn(l, |x, y| {
            let h = majorant([x, y]);
            (h[0], -h[1])
        });
        let n = norm_ledger(&Samples::from_lattice(&f), 1.0, 1.0);
        assert!((n.y_norm - 1.0).abs() < 1e-14);
        assert!(n.x_norm >= n.y_norm);
    }

    #[test]
    fn rescaling_convention() {
        // u_tau(z) = tau u(tau z) has the same norms at far speed tau lambda and support R / tau
        let l = Lattice::new(8.0, 0.125).unwrap();
        let u = |x: f64, y: f64| ((-(x * x + y * y) / 9.0).exp(), 0.3 * x / (1.0 + x * x + y * y));
        let a = norm_ledger(&Samples::from_lattice(&LatticeField::from_fn(l, u)), 1.0, 1.0);
        let tau = 2.0;
        let ls = Lattice::new(4.0, 0.0625).unwrap();
        let fs = LatticeField::from_fn(ls, |x, y| {
            let (p, q) = u(tau * x, tau * y);
            (tau * p, tau * q)
        });
        let b = norm_ledger(&Samples::from_lattice(&fs), 0.5, tau);
        assert!((a.y_norm - b.y_norm).abs() < 1e-12 * a.y_norm);
        assert!((a.l5_ball - b.l5_ball).abs() < 1e-12 * a.l5_ball);
    }

    proptest! {
        #[test]
        fn ledgers_are_norms(
            s1 in proptest::collection::vec(-2.0f64..2.0, 5),
            s2 in proptest::collection::vec(-2.0f64..2.0, 5),
            alpha in -3.0f64..3.0,
        ) {
            let a = random_samples(&s1);
            let b = random_samples(&s2);
            let na = norm_ledger(&a, 1.0, 1.0);
            let nb = norm_ledger(&b, 1.0, 1.0);
            let nab = norm_ledger(&a.combine(1.0, &b, 1.0), 1.0, 1.0);
            let ns = norm_ledger(&a.combine(alpha, &b, 0.0), 1.0, 1.0);
            let tol = 1e-12 * (na.x_norm + nb.x_norm + 1.0);
            prop_assert!(na.y_norm >= 0.0 && na.l5_ball >= 0.0 && na.x_norm >= na.y_norm);
            prop_assert!(nab.y_norm <= na.y_norm + nb.y_norm + tol);
            prop_assert!(nab.l5_ball <= na.l5_ball + nb.l5_ball + tol);
            prop_assert!(nab.x_norm <= na.x_norm + nb.x_norm + tol);
            prop_assert!((ns.y_norm - alpha.abs() * na.y_norm).abs() <= tol);
            prop_assert!((ns.l5_ball - alpha.abs() * na.l5_ball).abs() <= tol);
        }
    }
}
