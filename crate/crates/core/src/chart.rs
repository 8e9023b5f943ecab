//! Gauge chart and phase-space diffeomorphism.
//!
//! The gauge is fixed as `A = (0, A₂)` with `A₂(q) = ∫₀^{q₁} B(s, q₂) ds`,
//! and the chart is `φ(q) = (A₂(q), q₂)`, written `(ξ, x) = φ(q)`.
//! Since `∂₁A₂ = B ≥ b₀ > 0`, the map `q₁ ↦ A₂(q₁, q₂)` is a strictly
//! monotone bijection of ℝ, so `φ` is a global diffeomorphism.
//!
//! Pulled-back symbols carry a hat: `f̂ = f ∘ φ⁻¹`, evaluated at slow points
//! `X₂ = (ξ₂, x₂)`. Derivatives transform by
//!
//! ```text
//! ∂_ξ f̂ = (∂₁ f) / B,        ∂_x f̂ = -(α/B) ∂₁ f + ∂₂ f,
//! ```
//!
//! with `α = ∂₂A₂`; iterating these gives all second derivatives needed by
//! the fiber symbols. `W = ¼(∂_ξ B̂)² + ¼(∂_ξ α̂)²` is the curvature-induced
//! zero-point shift entering the subprincipal fiber symbol.

use crate::fields::FieldModel;
use crate::numeric::integrate;
use crate::{Error, Result, C64};
use std::sync::Arc;

/// A point of the slow phase space, in the paper's argument order:
/// hatted symbols are evaluated as `f̂(ξ, x)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SlowPoint {
    pub xi: f64,
    pub x: f64,
}

impl SlowPoint {
    pub fn new(xi: f64, x: f64) -> Self {
        Self { xi, x }
    }
}

/// Which coefficient to use on the `(∂_ξ α̂)²` term of `W`.
///
/// The statement-level value is ¼ (it appears twice in the source
/// derivation); an intermediate display suggests ½. The default is ¼ and the
/// alternative is kept switchable so the two-route comparison can
/// discriminate empirically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WAlphaCoeff {
    #[default]
    Quarter,
    Half,
}

impl WAlphaCoeff {
    fn value(self) -> f64 {
        match self {
            WAlphaCoeff::Quarter => 0.25,
            WAlphaCoeff::Half => 0.5,
        }
    }
}

/// Value and first/second derivatives of a hatted symbol at a slow point.
#[derive(Debug, Clone, Copy)]
pub struct Jet2 {
    pub f: C64,
    /// ∂_ξ
    pub d1: C64,
    /// ∂_x
    pub d2: C64,
    pub d11: C64,
    pub d12: C64,
    pub d22: C64,
}

/// All chart data the fiber symbols need at one slow point.
#[derive(Debug, Clone)]
pub struct ChartJets {
    /// Pre-image q = φ⁻¹(X₂).
    pub q: [f64; 2],
    pub bhat: Jet2,
    pub alphahat: Jet2,
    pub vhat: Jet2,
    pub w: f64,
}

pub struct GaugeChart {
    model: Arc<FieldModel>,
    pub quad_tol: f64,
    pub inverse_tol: f64,
    pub w_alpha: WAlphaCoeff,
}

impl GaugeChart {
    pub fn new(model: Arc<FieldModel>) -> Self {
        Self {
            model,
            quad_tol: 1e-12,
            inverse_tol: 1e-11,
            w_alpha: WAlphaCoeff::default(),
        }
    }

    pub fn with_w_alpha(mut self, w: WAlphaCoeff) -> Self {
        self.w_alpha = w;
        self
    }

    pub fn model(&self) -> &FieldModel {
        &self.model
    }

    /// Gauge potential `A₂(q) = ∫₀^{q₁} B(s, q₂) ds`.
    pub fn a2(&self, q1: f64, q2: f64) -> Result<f64> {
        integrate(|s| self.model.b_field.eval(s, q2), 0.0, q1, self.quad_tol)
    }

    /// `α(q) = ∂₂A₂(q) = ∫₀^{q₁} ∂₂B(s, q₂) ds`.
    pub fn alpha(&self, q1: f64, q2: f64) -> Result<f64> {
        integrate(
            |s| self.model.b_field.partial(0, 1, s, q2),
            0.0,
            q1,
            self.quad_tol,
        )
    }

    /// Partial derivatives of α in q coordinates, up to total order 2.
    ///
    /// `∂₁α = ∂₂B` collapses the q₁ derivatives; pure q₂ derivatives stay
    /// under the integral sign.
    fn alpha_partial(&self, a: usize, b: usize, q1: f64, q2: f64) -> Result<f64> {
        if a == 0 && b == 0 {
            return self.alpha(q1, q2);
        }
        if a >= 1 {
            return Ok(self.model.b_field.partial(a - 1, b + 1, q1, q2));
        }
        integrate(
            |s| self.model.b_field.partial(0, b + 1, s, q2),
            0.0,
            q1,
            self.quad_tol,
        )
    }

    /// Forward chart: `φ(q) = (A₂(q), q₂)`.
    pub fn phi(&self, q1: f64, q2: f64) -> Result<SlowPoint> {
        Ok(SlowPoint::new(self.a2(q1, q2)?, q2))
    }

    /// Inverse chart by safeguarded monotone Newton on `A₂(·, x) = ξ`.
    pub fn phi_inv(&self, p: SlowPoint) -> Result<[f64; 2]> {
        self.phi_inv_hinted(p, p.xi / self.model.b_field.eval(0.0, p.x))
    }

    /// Inverse chart with an initial guess (used by grid loops that walk
    /// along neighbouring targets).
    pub fn phi_inv_hinted(&self, p: SlowPoint, hint: f64) -> Result<[f64; 2]> {
        let target = p.xi;
        let x = p.x;
        let tol = self.inverse_tol * (1.0 + target.abs());
        // bracket the root: A2 is increasing with slope >= b0
        let mut lo = hint.min(target / self.model.b0);
        let mut hi = hint.max(target / self.model.b0);
        if lo > 0.0 {
            lo = 0.0;
        }
        if hi < 0.0 {
            hi = 0.0;
        }
        let mut f_lo = self.a2(lo, x)? - target;
        let mut f_hi = self.a2(hi, x)? - target;
        for _ in 0..64 {
            if f_lo <= 0.0 {
                break;
            }
            lo -= (hi - lo).max(1.0);
            f_lo = self.a2(lo, x)? - target;
        }
        for _ in 0..64 {
            if f_hi >= 0.0 {
                break;
            }
            hi += (hi - lo).max(1.0);
            f_hi = self.a2(hi, x)? - target;
        }
        if f_lo > 0.0 || f_hi < 0.0 {
            return Err(Error::DiffeoInverse {
                target,
                residual: f_lo.abs().min(f_hi.abs()),
            });
        }
        let mut g = hint.clamp(lo, hi);
        let mut res = self.a2(g, x)? - target;
        for _ in 0..80 {
            if res.abs() <= tol {
                return Ok([g, x]);
            }
            if res > 0.0 {
                hi = g;
            } else {
                lo = g;
            }
            let slope = self.model.b_field.eval(g, x);
            let mut next = g - res / slope;
            if !(lo..=hi).contains(&next) {
                next = 0.5 * (lo + hi);
            }
            g = next;
            res = self.a2(g, x)? - target;
        }
        if res.abs() <= 10.0 * tol {
            return Ok([g, x]);
        }
        Err(Error::DiffeoInverse {
            target,
            residual: res.abs(),
        })
    }

    pub fn bhat(&self, p: SlowPoint) -> Result<f64> {
        let q = self.phi_inv(p)?;
        Ok(self.model.b_field.eval(q[0], q[1]))
    }

    pub fn vhat(&self, p: SlowPoint) -> Result<C64> {
        let q = self.phi_inv(p)?;
        Ok(self.model.potential.eval(q[0], q[1]))
    }

    pub fn alphahat(&self, p: SlowPoint) -> Result<f64> {
        let q = self.phi_inv(p)?;
        self.alpha(q[0], q[1])
    }

    /// `W = ¼(∂_ξ B̂)² + c_α (∂_ξ α̂)²` at a slow point.
    pub fn w_value(&self, p: SlowPoint) -> Result<f64> {
        let jets = self.jets(p)?;
        Ok(jets.w)
    }

    /// `B̂ + V̂` at a slow point (principal part of the effective symbol).
    pub fn p_hat(&self, p: SlowPoint) -> Result<C64> {
        let q = self.phi_inv(p)?;
        Ok(self.model.p(q[0], q[1]))
    }

    /// Full chart jets at a slow point, with an optional warm start for the
    /// chart inversion.
    pub fn jets(&self, p: SlowPoint) -> Result<ChartJets> {
        let q = self.phi_inv(p)?;
        self.jets_at_q(q)
    }

    pub fn jets_hinted(&self, p: SlowPoint, hint: f64) -> Result<ChartJets> {
        let q = self.phi_inv_hinted(p, hint)?;
        self.jets_at_q(q)
    }

    /// Chart jets expressed through q-space derivatives at `q = φ⁻¹(X₂)`.
    pub fn jets_at_q(&self, q: [f64; 2]) -> Result<ChartJets> {
        let (q1, q2) = (q[0], q[1]);
        let b = self.model.b_field.eval(q1, q2);
        let alpha = self.alpha(q1, q2)?;

        // q-space derivative tables
        let bq = |a: usize, c: usize| C64::new(self.model.b_field.partial(a, c, q1, q2), 0.0);
        let vq = |a: usize, c: usize| self.model.potential.partial(a, c, q1, q2);
        let mut aq = [[C64::new(0.0, 0.0); 3]; 3];
        for (a, c) in [(0usize, 0usize), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
            aq[a][c] = C64::new(self.alpha_partial(a, c, q1, q2)?, 0.0);
        }

        let bj = self.hat_jet(b, alpha, &|a, c| bq(a, c), q1, q2)?;
        let vj = self.hat_jet(b, alpha, &|a, c| vq(a, c), q1, q2)?;
        let aj = self.hat_jet(b, alpha, &|a, c| aq[a][c], q1, q2)?;

        let w = 0.25 * bj.d1.re * bj.d1.re + self.w_alpha.value() * aj.d1.re * aj.d1.re;

        Ok(ChartJets {
            q,
            bhat: bj,
            alphahat: aj,
            vhat: vj,
            w,
        })
    }

    /// Chain rule through the chart: q-space partials of one symbol
    /// (closure `fq(a, b)` = ∂₁^a ∂₂^b f at q) into (ξ, x)-space derivatives
    /// of the hatted symbol, up to second order.
    fn hat_jet(
        &self,
        b: f64,
        alpha: f64,
        fq: &dyn Fn(usize, usize) -> C64,
        q1: f64,
        q2: f64,
    ) -> Result<Jet2> {
        let bq = |a: usize, c: usize| self.model.b_field.partial(a, c, q1, q2);
        let b1 = bq(1, 0);
        let b2 = bq(0, 1);
        // alpha derivatives needed by the second-order terms
        let a1 = b2; // ∂₁α = ∂₂B
        let a2 = self.alpha_partial(0, 1, q1, q2)?;

        let f = fq(0, 0);
        let f1 = fq(1, 0);
        let f2 = fq(0, 1);
        let f11 = fq(2, 0);
        let f12 = fq(1, 1);
        let f22 = fq(0, 2);

        let d1 = f1 / b;
        let d2 = -(alpha / b) * f1 + f2;

        // g1 = f1 / B, its q-derivatives
        let g1_1 = (f11 * b - f1 * b1) / (b * b);
        let g1_2 = (f12 * b - f1 * b2) / (b * b);
        // d11 = ∂_ξ-hat of g1, d12 = ∂_x-hat of g1
        let d11 = g1_1 / b;
        let d12 = -(alpha / b) * g1_1 + g1_2;

        // g2 = -(α/B) f1 + f2, its q-derivatives
        let coef_1 = -(a1 * b - alpha * b1) / (b * b);
        let coef_2 = -(a2 * b - alpha * b2) / (b * b);
        let g2_1 = coef_1 * f1 - (alpha / b) * f11 + f12;
        let g2_2 = coef_2 * f1 - (alpha / b) * f12 + f22;
        let d22 = -(alpha / b) * g2_1 + g2_2;

        Ok(Jet2 {
            f,
            d1,
            d2,
            d11,
            d12,
            d22,
        })
    }

    /// Hessian of `p̂ = (B + V) ∘ φ⁻¹` at `φ(q0)`, in (ξ, x) coordinates,
    /// valid for arbitrary (also nonvanishing) gradients of p.
    pub fn hess_p_hat(&self, q1: f64, q2: f64) -> Result<[[C64; 2]; 2]> {
        let b = self.model.b_field.eval(q1, q2);
        let alpha = self.alpha(q1, q2)?;
        let b1 = self.model.b_field.partial(1, 0, q1, q2);
        let b2 = self.model.b_field.partial(0, 1, q1, q2);
        let a1 = b2;
        let a2 = self.alpha_partial(0, 1, q1, q2)?;

        let g = [self.model.p_partial(1, 0, q1, q2), self.model.p_partial(0, 1, q1, q2)];
        let h = [
            [self.model.p_partial(2, 0, q1, q2), self.model.p_partial(1, 1, q1, q2)],
            [self.model.p_partial(1, 1, q1, q2), self.model.p_partial(0, 2, q1, q2)],
        ];

        // Dψ = J⁻¹ with J = dφ = [[B, α], [0, 1]]
        let ji = [[1.0 / b, -alpha / b], [0.0, 1.0]];
        // first-order part: J⁻ᵀ H J⁻¹
        let mut hx = [[C64::new(0.0, 0.0); 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..2 {
                    for l in 0..2 {
                        acc += ji[k][r] * h[k][l] * ji[l][c];
                    }
                }
                hx[r][c] = acc;
            }
        }
        // second-order part: (∂₁p) Hess ψ₁, where ψ₁ = g(ξ, x) solves A₂(g, x) = ξ
        let g_xx = -b1 / (b * b * b);
        let g_xix = (alpha * b1 / b - b2) / (b * b);
        let g_x2 = -(-alpha * a1 + b * a2 + alpha * alpha * b1 / b - alpha * b2) / (b * b);
        let hess_psi1 = [[g_xx, g_xix], [g_xix, g_x2]];
        for r in 0..2 {
            for c in 0..2 {
                hx[r][c] += g[0] * hess_psi1[r][c];
            }
        }
        Ok(hx)
    }
}
