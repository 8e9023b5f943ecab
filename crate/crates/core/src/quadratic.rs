//! The complex quadratic model at the bottom of the well.
//!
//! For a quadratic symbol `Q(x, ξ) = a x² + 2b xξ + c ξ²` whose range cone
//! is proper (opening < π — in particular whenever some phase rotation of Q
//! has positive-definite real part), the Weyl quantization has discrete
//! spectrum `{(2n-1) c₀ h, n ≥ 1}` with `c₀ = √(ac - b²)`, the square root
//! taken inside the closed convex cone spanned by the range of Q. All
//! eigenvalues are algebraically simple, and the resolvent obeys
//! `‖(z - Q^w)⁻¹‖ ≤ D / dist(z, sp Q^w)` on the probed discs even though the
//! operator is highly non-normal.

use crate::hermite::{weyl_quantize_poly, PolySymbol};
use crate::{Error, Result, C64};
use faer::linalg::solvers::Solve;
use faer::{c64, Mat};

/// Angular data of the range cone of a quadratic form: returns the unit
/// mid-direction and the half-opening (radians).
fn range_cone(a: C64, b: C64, c: C64) -> Result<(C64, f64)> {
    let samples = 256;
    let mut dirs: Vec<C64> = Vec::with_capacity(samples);
    let scale = a.norm().max(b.norm()).max(c.norm());
    if scale == 0.0 {
        return Err(Error::NotSectorial("zero quadratic form".into()));
    }
    for k in 0..samples {
        let th = std::f64::consts::PI * k as f64 / samples as f64;
        let (x, xi) = (th.cos(), th.sin());
        let w = a * x * x + 2.0 * b * x * xi + c * xi * xi;
        if w.norm() <= 1e-14 * scale {
            return Err(Error::NotSectorial(format!(
                "form vanishes on the unit circle (direction {th:.3} rad)"
            )));
        }
        dirs.push(w / w.norm());
    }
    let mean: C64 = dirs.iter().sum();
    if mean.norm() < 1e-9 {
        return Err(Error::NotSectorial(
            "range directions average to zero (opening >= pi)".into(),
        ));
    }
    let frame = mean / mean.norm();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for d in &dirs {
        let psi = (d * frame.conj()).arg();
        lo = lo.min(psi);
        hi = hi.max(psi);
    }
    if hi - lo >= std::f64::consts::PI - 1e-9 {
        return Err(Error::NotSectorial(format!(
            "range cone opening {:.6} >= pi",
            hi - lo
        )));
    }
    // rotate frame to the arc midpoint
    let mid = 0.5 * (lo + hi);
    let frame = frame * C64::from_polar(1.0, mid);
    Ok((frame, 0.5 * (hi - lo)))
}

/// √(ac - b²) with the branch selected inside the closed convex cone of the
/// range of `a x² + 2b xξ + c ξ²`.
pub fn cone_sqrt_det(a: C64, b: C64, c: C64) -> Result<C64> {
    let det = a * c - b * b;
    let (frame, half_open) = range_cone(a, b, c)?;
    let w = det.sqrt();
    let tol = 1e-6;
    let inside = |cand: C64| -> bool {
        if cand.norm() == 0.0 {
            return false;
        }
        (cand * frame.conj()).arg().abs() <= half_open + tol
    };
    match (inside(w), inside(-w)) {
        (true, false) => Ok(w),
        (false, true) => Ok(-w),
        (true, true) => Err(Error::ConeAmbiguity(w, -w)),
        (false, false) => Err(Error::ConeAmbiguity(w, -w)),
    }
}

/// Complex quadratic form `Q(x, ξ) = a x² + 2b xξ + c ξ²` with a proper
/// range cone (checked on construction).
#[derive(Debug, Clone, Copy)]
pub struct ComplexQuadratic {
    pub a: C64,
    pub b: C64,
    pub c: C64,
}

impl ComplexQuadratic {
    pub fn new(a: C64, b: C64, c: C64) -> Result<Self> {
        range_cone(a, b, c)?;
        Ok(Self { a, b, c })
    }

    /// From the complex Hessian of the effective symbol at the well, given
    /// in (ξ, x) coordinates: `Q(x, ξ) = ½ Hess p̂ ((ξ, x), (ξ, x))`.
    pub fn from_half_hessian_xi_x(h: [[C64; 2]; 2]) -> Result<Self> {
        // h indices: 0 = ξ, 1 = x
        let c = 0.5 * h[0][0];
        let b = 0.5 * h[0][1];
        let a = 0.5 * h[1][1];
        Self::new(a, b, c)
    }

    pub fn value(&self, x: f64, xi: f64) -> C64 {
        self.a * x * x + 2.0 * self.b * x * xi + self.c * xi * xi
    }

    /// Fine-structure constant √(ac - b²), cone branch.
    pub fn c0(&self) -> Result<C64> {
        cone_sqrt_det(self.a, self.b, self.c)
    }

    /// Normal-form data `(s, α)`: the Weyl spectrum of Q equals
    /// `s · {(2n-1) e^{iα/2}, n ≥ 1}` with `α ∈ [0, π)` the angle of the
    /// reduced oscillator `ξ² + e^{iα} x²`.
    pub fn normal_form(&self) -> Result<(C64, f64)> {
        let (frame, _) = range_cone(self.a, self.b, self.c)?;
        // rotate into the frame where the real part is positive definite
        let rot = frame.conj();
        let m = [[rot * self.a, rot * self.b], [rot * self.b, rot * self.c]];
        let re = [[m[0][0].re, m[0][1].re], [m[1][0].re, m[1][1].re]];
        let det_re = re[0][0] * re[1][1] - re[0][1] * re[1][0];
        if re[0][0] <= 0.0 || det_re <= 0.0 {
            return Err(Error::NotSectorial(
                "rotated real part is not positive definite".into(),
            ));
        }
        // symplectic congruence sending Re(m) to c_re * Id, c_re = sqrt(det Re m)
        let c_re = det_re.sqrt();
        // inverse square root of the 2x2 SPD matrix re
        let tr = re[0][0] + re[1][1];
        let s_eig = ((tr + 2.0 * c_re).sqrt(), {
            let d = tr - 2.0 * c_re;
            if d > 0.0 {
                d.sqrt()
            } else {
                0.0
            }
        });
        // sqrt(re) = (re + c_re I) / sqrt(tr + 2 c_re)
        let denom = (tr + 2.0 * c_re).sqrt();
        let sq = [
            [(re[0][0] + c_re) / denom, re[0][1] / denom],
            [re[1][0] / denom, (re[1][1] + c_re) / denom],
        ];
        let _ = s_eig;
        let det_sq = sq[0][0] * sq[1][1] - sq[0][1] * sq[1][0];
        let inv_sq = [
            [sq[1][1] / det_sq, -sq[0][1] / det_sq],
            [-sq[1][0] / det_sq, sq[0][0] / det_sq],
        ];
        // S = sqrt(c_re) * re^{-1/2}; N = S^T Im(m) S
        let s = [
            [c_re.sqrt() * inv_sq[0][0], c_re.sqrt() * inv_sq[0][1]],
            [c_re.sqrt() * inv_sq[1][0], c_re.sqrt() * inv_sq[1][1]],
        ];
        let im = [[m[0][0].im, m[0][1].im], [m[1][0].im, m[1][1].im]];
        let mut nmat = [[0.0f64; 2]; 2];
        for r in 0..2 {
            for cc in 0..2 {
                let mut acc = 0.0;
                for k in 0..2 {
                    for l in 0..2 {
                        acc += s[k][r] * im[k][l] * s[l][cc];
                    }
                }
                nmat[r][cc] = acc;
            }
        }
        // eigenvalues of the symmetric 2x2 N
        let half_tr = 0.5 * (nmat[0][0] + nmat[1][1]);
        let rad = (0.25 * (nmat[0][0] - nmat[1][1]).powi(2) + nmat[0][1] * nmat[0][1]).sqrt();
        let (ia, ib) = (half_tr + rad, half_tr - rad);
        let alpha = ((ia.atan2(c_re)) - (ib.atan2(c_re))).abs();
        let scale = self.c0()? * C64::from_polar(1.0, -alpha / 2.0);
        Ok((scale, alpha))
    }

    /// Exact spectrum `{(2n-1) c₀ h : 1 ≤ n ≤ n_max}`.
    pub fn spectrum(&self, n_max: usize, h: f64) -> Result<Vec<C64>> {
        let c0 = self.c0()?;
        Ok((1..=n_max).map(|n| (2 * n - 1) as f64 * c0 * h).collect())
    }

    /// Truncated Hermite-basis matrix of `Op_h^w(Q)` (the h-quantization is
    /// `h` times the unit-h ladder matrix, by homogeneity).
    pub fn ladder_matrix(&self, n: usize, h: f64) -> Mat<c64> {
        let mut sym = PolySymbol::zero();
        sym.add_term(2, 0, self.a);
        sym.add_term(1, 1, 2.0 * self.b);
        sym.add_term(0, 2, self.c);
        let mut m = weyl_quantize_poly(&sym, n);
        for j in 0..n {
            for i in 0..n {
                m[(i, j)] *= h;
            }
        }
        m
    }

    /// Distance from z to the full analytic spectrum ray {(2n-1) c₀ h}.
    pub fn dist_to_spectrum(&self, z: C64, h: f64) -> Result<f64> {
        let c0 = self.c0()? * h;
        let t = (z * c0.conj()).re / c0.norm_sqr();
        // nearest odd integer >= 1
        let k = ((t + 1.0) / 2.0).round().max(1.0);
        let mut best = f64::INFINITY;
        for kk in [k - 1.0, k, k + 1.0] {
            if kk >= 1.0 {
                best = best.min((z - (2.0 * kk - 1.0) * c0).norm());
            }
        }
        Ok(best)
    }

    /// Empirical resolvent constant `D = max ‖(z - Q^w)⁻¹‖ · dist(z, sp)`
    /// over z in `D(0, Ch)` with `dist(z, sp) ≥ h^{3/2-κ}`.
    pub fn resolvent_constant(&self, h: f64, big_c: f64, kappa: f64, n: usize) -> Result<f64> {
        let m = self.ladder_matrix(n, h);
        let c0 = self.c0()? * h;
        let r_excl = h.powf(1.5 - kappa);
        let mut zs: Vec<C64> = Vec::new();
        // circles around each eigenvalue in the disc + a radial sweep
        let mut k = 1usize;
        while ((2 * k - 1) as f64 * c0).norm() <= big_c * h + 3.0 * r_excl {
            let center = (2 * k - 1) as f64 * c0;
            for a in 0..12 {
                let th = 2.0 * std::f64::consts::PI * a as f64 / 12.0;
                zs.push(center + C64::from_polar(1.5 * r_excl, th));
            }
            k += 1;
            if k > 64 {
                break;
            }
        }
        for rfrac in [0.25, 0.5, 0.75, 1.0] {
            for a in 0..16 {
                let th = 2.0 * std::f64::consts::PI * a as f64 / 16.0;
                zs.push(C64::from_polar(rfrac * big_c * h, th));
            }
        }
        let mut dmax: f64 = 0.0;
        for z in zs {
            if z.norm() > big_c * h {
                continue;
            }
            let dist = self.dist_to_spectrum(z, h)?;
            if dist < r_excl {
                continue;
            }
            let norm_res = resolvent_norm(m.as_ref(), z)?;
            dmax = dmax.max(norm_res * dist);
        }
        Ok(dmax)
    }

    /// Rank (trace) of the Riesz projector around the n-th analytic
    /// eigenvalue, from the truncated resolvent on a small contour.
    pub fn riesz_rank(&self, n_trunc: usize, which: usize, h: f64) -> Result<f64> {
        let m = self.ladder_matrix(n_trunc, h);
        let c0 = self.c0()? * h;
        let center = (2.0 * which as f64 - 1.0) * c0;
        let radius = 0.8 * c0.norm();
        let nodes = 24;
        let mut trace = C64::new(0.0, 0.0);
        for k in 0..nodes {
            let th = 2.0 * std::f64::consts::PI * k as f64 / nodes as f64;
            let z = center + C64::from_polar(radius, th);
            // dz/(2πi) weight for the trapezoid rule on the circle
            let dz = C64::from_polar(radius, th + std::f64::consts::FRAC_PI_2)
                * (2.0 * std::f64::consts::PI / nodes as f64);
            // trace of (z - M)^{-1} via LU solve against identity
            let mut a = Mat::<c64>::zeros(n_trunc, n_trunc);
            for j in 0..n_trunc {
                for i in 0..n_trunc {
                    a[(i, j)] = -m[(i, j)];
                }
                a[(j, j)] += z;
            }
            let lu = a.partial_piv_lu();
            let rhs = Mat::<c64>::identity(n_trunc, n_trunc);
            let inv = lu.solve(&rhs);
            let mut tr = C64::new(0.0, 0.0);
            for i in 0..n_trunc {
                tr += inv[(i, i)];
            }
            trace += tr * dz / C64::new(0.0, 2.0 * std::f64::consts::PI);
        }
        Ok(trace.norm())
    }
}

/// `‖(z - M)⁻¹‖₂ = 1/σ_min(z - M)`; errors out within 1e-12 of the spectrum.
pub fn resolvent_norm(m: faer::MatRef<'_, c64>, z: C64) -> Result<f64> {
    let n = m.nrows();
    let a = Mat::from_fn(n, n, |i, j| {
        let v = if i == j { z - m[(i, j)] } else { -m[(i, j)] };
        v
    });
    let sv = a
        .singular_values()
        .map_err(|e| Error::Eigensolve(format!("svd failed: {e:?}")))?;
    let smin = *sv.last().unwrap();
    if smin < 1e-12 {
        let eigs = m
            .eigenvalues()
            .map_err(|e| Error::Eigensolve(format!("{e:?}")))?;
        let nearest = eigs
            .iter()
            .min_by(|p, q| (z - *p).norm().partial_cmp(&(z - *q).norm()).unwrap())
            .copied()
            .unwrap_or(C64::new(0.0, 0.0));
        return Err(Error::NearSpectrum {
            z,
            nearest,
            dist: smin,
        });
    }
    Ok(1.0 / smin)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: C64, b: C64, c: C64) -> ComplexQuadratic {
        ComplexQuadratic::new(a, b, c).unwrap()
    }

    #[test]
    fn cone_branch_examples() {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        // x² + ξ²: det 1, branch +1
        assert!((cone_sqrt_det(one, zero, one).unwrap() - one).norm() < 1e-12);
        // i(x² + ξ²): cone is the ray i·R₊, det -1, branch +i
        let i = C64::new(0.0, 1.0);
        assert!((cone_sqrt_det(i, zero, i).unwrap() - i).norm() < 1e-12);
        // ξ² + e^{iα} x²: branch e^{iα/2}
        for alpha in [0.3, 1.2, 2.0, 2.8] {
            let e = C64::from_polar(1.0, alpha);
            let got = cone_sqrt_det(e, zero, one).unwrap();
            let expect = C64::from_polar(1.0, alpha / 2.0);
            assert!((got - expect).norm() < 1e-9, "alpha = {alpha}: {got}");
        }
    }

    #[test]
    fn not_sectorial_rejected() {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        // x² - ξ² changes sign: cone opening = pi
        assert!(ComplexQuadratic::new(one, zero, -one).is_err());
    }

    #[test]
    fn normal_form_examples() {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let i = C64::new(0.0, 1.0);
        // x² + ξ² → s = 1, α = 0
        let (s, alpha) = q(one, zero, one).normal_form().unwrap();
        assert!((s - one).norm() < 1e-9 && alpha.abs() < 1e-9);
        // ξ² + i x² → α = π/2, spectrum (2n-1) e^{iπ/4}
        let (s, alpha) = q(i, zero, one).normal_form().unwrap();
        assert!((alpha - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
        let lam1 = s * C64::from_polar(1.0, alpha / 2.0);
        assert!((lam1 - C64::from_polar(1.0, std::f64::consts::FRAC_PI_4)).norm() < 1e-9);
        // 2x² + 2ξ² → spectrum (2n-1)·2
        let (s, alpha) = q(2.0 * one, zero, 2.0 * one).normal_form().unwrap();
        assert!(alpha.abs() < 1e-9);
        assert!((s - 2.0 * one).norm() < 1e-9);
        // ξ² + e^{iπ/3} x² → spectrum (2n-1) e^{iπ/6}
        let e = C64::from_polar(1.0, std::f64::consts::FRAC_PI_3);
        let sp = q(e, zero, one).spectrum(3, 1.0).unwrap();
        for (n, lam) in sp.iter().enumerate() {
            let expect =
                (2 * n + 1) as f64 * C64::from_polar(1.0, std::f64::consts::FRAC_PI_6);
            assert!((lam - expect).norm() < 1e-9);
        }
    }

    #[test]
    fn normal_form_angle_invariant_under_symplectic_scaling() {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let e = C64::from_polar(1.0, 1.1);
        let base = q(e, zero, one);
        let (_, alpha0) = base.normal_form().unwrap();
        for s in [0.5f64, 1.7, 3.0] {
            // (x, ξ) → (s x, ξ/s): a → a s², c → c / s²
            let scaled = q(e * s * s, zero, one / (s * s));
            let (_, alpha) = scaled.normal_form().unwrap();
            assert!((alpha - alpha0).abs() < 1e-8, "s = {s}");
            // spectrum is exactly invariant
            let sp0 = base.spectrum(4, 0.3).unwrap();
            let sp1 = scaled.spectrum(4, 0.3).unwrap();
            for (a, b) in sp0.iter().zip(&sp1) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn truncated_matrix_matches_analytic_spectrum() {
        // α ≤ 2π/3, first 8 eigenvalues at N = 256 to 1e-8
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        for alpha in [std::f64::consts::FRAC_PI_6, std::f64::consts::FRAC_PI_2, 2.0] {
            let e = C64::from_polar(1.0, alpha);
            let model = q(e, zero, one);
            let m = model.ladder_matrix(256, 1.0);
            let eigs = m.eigenvalues().unwrap();
            let sp = model.spectrum(8, 1.0).unwrap();
            for target in sp {
                let best = eigs
                    .iter()
                    .map(|l| (l - target).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(best < 1e-8, "alpha = {alpha}: miss {best:.3e} at {target}");
            }
        }
    }

    #[test]
    fn riesz_projectors_are_rank_one() {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let e = C64::from_polar(1.0, 1.3);
        let model = q(e, zero, one);
        for which in 1..=3usize {
            let rank = model.riesz_rank(96, which, 1.0).unwrap();
            assert!((rank - 1.0).abs() < 1e-6, "eigenvalue {which}: rank {rank}");
        }
    }

    #[test]
    fn selfadjoint_resolvent_constant_is_one() {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let model = q(one, zero, one);
        let d = model.resolvent_constant(1.0, 10.0, 0.2, 128).unwrap();
        assert!((d - 1.0).abs() < 1e-6, "normal matrix must give D = 1, got {d}");
    }

    #[test]
    fn rotated_resolvent_constant_finite_and_stable() {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let model = q(i, zero, one);
        let d1 = model.resolvent_constant(1.0, 10.0, 0.2, 128).unwrap();
        let d2 = model.resolvent_constant(1.0, 10.0, 0.2, 256).unwrap();
        assert!(d1.is_finite() && d1 >= 1.0);
        assert!(
            (d1 - d2).abs() <= 0.2 * d2.abs(),
            "instability under truncation doubling: {d1} vs {d2}"
        );
    }

    #[test]
    fn sectoriality_bound_far_left() {
        // z real, far left: the resolvent is capped by the distance to the
        // numerical range, which for real z on the left is at least
        // λ_min((M + M†)/2) - z. No pseudospectral blowup on that side.
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let e = C64::from_polar(1.0, 0.9);
        let model = q(e, zero, one);
        let n = 96;
        let m = model.ladder_matrix(n, 1.0);
        let herm = Mat::<c64>::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()));
        let lam_min = herm
            .eigenvalues()
            .unwrap()
            .iter()
            .map(|l| l.re)
            .fold(f64::INFINITY, f64::min);
        let z = C64::new(-5.0, 0.0);
        let rn = resolvent_norm(m.as_ref(), z).unwrap();
        let bound = 1.0 / (lam_min - z.re);
        assert!(rn <= bound + 1e-9, "rn = {rn}, numerical-range bound = {bound}");
        // and it stays within a modest factor of 1/dist(z, sp)
        let dist = model.dist_to_spectrum(z, 1.0).unwrap();
        assert!(rn * dist <= 1.5, "rn*dist = {}", rn * dist);
    }
}
