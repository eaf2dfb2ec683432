//! Quadrature over `ℂ^d` in per-dimension polar coordinates (`d = 1`) or
//! total-radius hyperspherical coordinates (`d ≥ 2`).
//!
//! The integrands of interest are supported in a total-radius annulus and
//! are smooth inside it but only `C²`/`C³` across its boundary spheres; the
//! hyperspherical parameterization keeps those junctions at interval
//! endpoints where Gauss–Legendre is unaffected.

use ndarray_linalg::c64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Legendre P_n(x) and its derivative by recurrence.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=order {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

pub fn gauss_legendre_on(order: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (n, w) = gauss_legendre(order);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        n.iter().map(|&x| mid + half * x).collect(),
        w.iter().map(|&x| half * x).collect(),
    )
}

/// Radial × angular tensor scheme for integrals over `ℂ^d` against the
/// Lebesgue measure `∏ dα_m dβ_m = ∏ r_m dr_m dθ_m`.
#[derive(Clone, Copy, Debug)]
pub struct QuadratureScheme {
    pub radial_order: usize,
    pub angular_order: usize,
    /// Inner/outer radius of the supporting annulus in total radius.
    pub r_lo: f64,
    pub r_hi: f64,
}

impl QuadratureScheme {
    pub fn new(radial_order: usize, angular_order: usize, r_lo: f64, r_hi: f64) -> Self {
        QuadratureScheme {
            radial_order,
            angular_order,
            r_lo,
            r_hi,
        }
    }

    /// Double radial resolution. The angular rule is exact for trigonometric
    /// polynomials below the angular order, so the convergence comparison
    /// varies the radial direction only.
    fn doubled(&self) -> QuadratureScheme {
        QuadratureScheme {
            radial_order: 2 * self.radial_order,
            ..*self
        }
    }

    /// Plain integration of `f` over `ℂ^d`, support within the total-radius
    /// annulus `[r_lo, r_hi]`.
    pub fn integrate<F>(&self, d: usize, f: F) -> c64
    where
        F: Fn(&[c64]) -> c64 + Sync,
    {
        assert!(d >= 1);
        let angles: Vec<f64> = (0..self.angular_order)
            .map(|k| 2.0 * std::f64::consts::PI * k as f64 / self.angular_order as f64)
            .collect();
        let ang_weight = 2.0 * std::f64::consts::PI / self.angular_order as f64;

        match d {
            1 => {
                let (rs, ws) = gauss_legendre_on(self.radial_order, self.r_lo, self.r_hi);
                let cells: Vec<(f64, f64)> = rs.into_iter().zip(ws).collect();
                let partial: Vec<c64> = cells
                    .par_iter()
                    .map(|&(r, w)| {
                        let mut acc = c64::new(0.0, 0.0);
                        for &th in &angles {
                            let wpt = [c64::new(r * th.cos(), r * th.sin())];
                            acc += f(&wpt) * c64::new(w * r * ang_weight, 0.0);
                        }
                        acc
                    })
                    .collect();
                partial.into_iter().sum()
            }
            2 => {
                // (w₁, w₂) = (R cos φ e^{iθ₁}, R sin φ e^{iθ₂});
                // measure R³ cos φ sin φ dR dφ dθ₁ dθ₂.
                let (rs, rws) = gauss_legendre_on(self.radial_order, self.r_lo, self.r_hi);
                let phi_order = (self.radial_order / 2).max(6);
                let (phis, pws) =
                    gauss_legendre_on(phi_order, 0.0, std::f64::consts::FRAC_PI_2);
                let mut cells = Vec::new();
                for (r, rw) in rs.iter().zip(rws.iter()) {
                    for (ph, pw) in phis.iter().zip(pws.iter()) {
                        cells.push((*r, *ph, rw * pw));
                    }
                }
                let partial: Vec<c64> = cells
                    .par_iter()
                    .map(|&(rr, ph, w)| {
                        let (r1, r2) = (rr * ph.cos(), rr * ph.sin());
                        let jac = rr * rr * rr * ph.cos() * ph.sin();
                        let mut acc = c64::new(0.0, 0.0);
                        for &t1 in &angles {
                            for &t2 in &angles {
                                let wpt = [
                                    c64::new(r1 * t1.cos(), r1 * t1.sin()),
                                    c64::new(r2 * t2.cos(), r2 * t2.sin()),
                                ];
                                acc += f(&wpt)
                                    * c64::new(w * jac * ang_weight * ang_weight, 0.0);
                            }
                        }
                        acc
                    })
                    .collect();
                partial.into_iter().sum()
            }
            _ => {
                // Generic tensor fallback: per-dimension polar with radial
                // range [0, r_hi]; the kink at the inner support sphere costs
                // accuracy, so high dimensions should prefer small problems.
                let (rs, ws) = gauss_legendre_on(self.radial_order, 0.0, self.r_hi);
                let radial: Vec<(f64, f64)> = rs.into_iter().zip(ws).collect();
                let mut idx = vec![0usize; d];
                let mut cells: Vec<Vec<(f64, f64)>> = Vec::new();
                loop {
                    cells.push(idx.iter().map(|&i| radial[i]).collect());
                    let mut j = 0;
                    loop {
                        idx[j] += 1;
                        if idx[j] < radial.len() {
                            break;
                        }
                        idx[j] = 0;
                        j += 1;
                        if j == d {
                            break;
                        }
                    }
                    if j == d {
                        break;
                    }
                }
                let partial: Vec<c64> = cells
                    .par_iter()
                    .map(|cell| {
                        let mut acc = c64::new(0.0, 0.0);
                        let mut ang_idx = vec![0usize; d];
                        loop {
                            let mut wpt = Vec::with_capacity(d);
                            let mut weight = 1.0;
                            for (m, &(r, w)) in cell.iter().enumerate() {
                                let th = angles[ang_idx[m]];
                                wpt.push(c64::new(r * th.cos(), r * th.sin()));
                                weight *= w * r * ang_weight;
                            }
                            acc += f(&wpt) * c64::new(weight, 0.0);
                            let mut j = 0;
                            loop {
                                ang_idx[j] += 1;
                                if ang_idx[j] < angles.len() {
                                    break;
                                }
                                ang_idx[j] = 0;
                                j += 1;
                                if j == d {
                                    break;
                                }
                            }
                            if j == d {
                                break;
                            }
                        }
                        acc
                    })
                    .collect();
                partial.into_iter().sum()
            }
        }
    }

    /// Integrate at this resolution and with doubled radial nodes; errors
    /// with `QuadratureUnconverged` when the two differ by more than
    /// `rel_tol` relative to `max(|value|, 1e-2)`. Returns the doubled and
    /// the base value together with the observed shift.
    pub fn integrate_checked<F>(&self, d: usize, rel_tol: f64, f: F) -> Result<(c64, c64, f64)>
    where
        F: Fn(&[c64]) -> c64 + Sync,
    {
        let base = self.integrate(d, &f);
        let fine = self.doubled().integrate(d, &f);
        let shift = (fine - base).norm() / fine.norm().max(1e-2);
        if shift > rel_tol {
            return Err(Error::QuadratureUnconverged { shift });
        }
        Ok((fine, base, shift))
    }
}
