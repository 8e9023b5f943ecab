//! Electromagnetic field models: the pair `(B, V)`, the localizer
//! `F = u(B + Re V) + v Im V`, well location and the fine-structure
//! constant `c₀`.
//!
//! `B` must dominate a positive constant `b₀`; `V` may be complex. The
//! localizer's unique global minimum `q₀` determines `μ₀ = (B+V)(q₀)`,
//! and the spectrum of the full operator concentrates in `D(μ₀h, Ch²)`.

use crate::chart::GaugeChart;
use crate::expr::Expr;
use crate::numeric::{fd_partial, fd_partial_c};
use crate::quadratic::cone_sqrt_det;
use crate::{Error, Result, C64};
use rand::Rng;
use rand::SeedableRng;
use std::sync::Arc;

type RealFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type RealPartialFn = Arc<dyn Fn(usize, usize, f64, f64) -> f64 + Send + Sync>;
type ComplexFn = Arc<dyn Fn(f64, f64) -> C64 + Send + Sync>;
type ComplexPartialFn = Arc<dyn Fn(usize, usize, f64, f64) -> C64 + Send + Sync>;

/// Real scalar field on the plane with partial derivatives up to total
/// order 3 (analytic when available, 4th-order finite differences otherwise).
#[derive(Clone)]
pub struct RealField {
    eval: RealFn,
    partial: Option<RealPartialFn>,
}

impl RealField {
    pub fn from_fn(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(f),
            partial: None,
        }
    }

    pub fn with_partials(
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        partials: impl Fn(usize, usize, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Arc::new(f),
            partial: Some(Arc::new(partials)),
        }
    }

    /// Field from a parsed expression; derivatives are symbolic.
    pub fn from_expr(e: &Expr) -> Self {
        let table = DiffTable::new(e);
        let t2 = table.clone();
        Self {
            eval: Arc::new(move |q1, q2| table.get(0, 0).eval(q1, q2).re),
            partial: Some(Arc::new(move |a, b, q1, q2| t2.get(a, b).eval(q1, q2).re)),
        }
    }

    pub fn eval(&self, q1: f64, q2: f64) -> f64 {
        (self.eval)(q1, q2)
    }

    pub fn partial(&self, a: usize, b: usize, q1: f64, q2: f64) -> f64 {
        if a == 0 && b == 0 {
            return self.eval(q1, q2);
        }
        match &self.partial {
            Some(p) => p(a, b, q1, q2),
            None => fd_partial(&|x, y| self.eval(x, y), a, b, q1, q2),
        }
    }

    pub fn has_analytic_partials(&self) -> bool {
        self.partial.is_some()
    }
}

/// Complex scalar field, same contract as [`RealField`].
#[derive(Clone)]
pub struct ComplexField {
    eval: ComplexFn,
    partial: Option<ComplexPartialFn>,
}

impl ComplexField {
    pub fn from_fn(f: impl Fn(f64, f64) -> C64 + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(f),
            partial: None,
        }
    }

    pub fn with_partials(
        f: impl Fn(f64, f64) -> C64 + Send + Sync + 'static,
        partials: impl Fn(usize, usize, f64, f64) -> C64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Arc::new(f),
            partial: Some(Arc::new(partials)),
        }
    }

    pub fn from_expr(e: &Expr) -> Self {
        let table = DiffTable::new(e);
        let t2 = table.clone();
        Self {
            eval: Arc::new(move |q1, q2| table.get(0, 0).eval(q1, q2)),
            partial: Some(Arc::new(move |a, b, q1, q2| t2.get(a, b).eval(q1, q2))),
        }
    }

    pub fn zero() -> Self {
        Self::with_partials(|_, _| C64::new(0.0, 0.0), |_, _, _, _| C64::new(0.0, 0.0))
    }

    pub fn eval(&self, q1: f64, q2: f64) -> C64 {
        (self.eval)(q1, q2)
    }

    pub fn partial(&self, a: usize, b: usize, q1: f64, q2: f64) -> C64 {
        if a == 0 && b == 0 {
            return self.eval(q1, q2);
        }
        match &self.partial {
            Some(p) => p(a, b, q1, q2),
            None => fd_partial_c(&|x, y| self.eval(x, y), a, b, q1, q2),
        }
    }

    pub fn has_analytic_partials(&self) -> bool {
        self.partial.is_some()
    }
}

/// Symbolic derivative table for all (a, b) with a + b <= 3.
#[derive(Clone)]
struct DiffTable {
    exprs: Arc<Vec<Vec<Expr>>>,
}

impl DiffTable {
    fn new(e: &Expr) -> Self {
        let mut rows = Vec::new();
        for a in 0..=3usize {
            let mut row = Vec::new();
            let mut d = e.clone();
            for _ in 0..a {
                d = d.diff(0);
            }
            for b in 0..=(3 - a) {
                if b > 0 {
                    d = d.diff(1);
                }
                row.push(d.clone());
            }
            rows.push(row);
        }
        Self {
            exprs: Arc::new(rows),
        }
    }

    fn get(&self, a: usize, b: usize) -> &Expr {
        &self.exprs[a][b]
    }
}

/// The electromagnetic data `(B, V)` plus the localizer coefficients.
#[derive(Clone)]
pub struct FieldModel {
    pub name: String,
    pub b_field: RealField,
    pub potential: ComplexField,
    /// Witness for the uniform lower bound B >= b0 > 0.
    pub b0: f64,
    /// Localizer coefficients; u > 0.
    pub u: f64,
    pub v: f64,
}

impl FieldModel {
    /// Localizer F = u (B + Re V) + v Im V = Re((u - iv)(B + V)).
    pub fn localizer(&self, q1: f64, q2: f64) -> f64 {
        let b = self.b_field.eval(q1, q2);
        let v = self.potential.eval(q1, q2);
        self.u * (b + v.re) + self.v * v.im
    }

    /// p = B + V.
    pub fn p(&self, q1: f64, q2: f64) -> C64 {
        C64::new(self.b_field.eval(q1, q2), 0.0) + self.potential.eval(q1, q2)
    }

    pub fn p_partial(&self, a: usize, b: usize, q1: f64, q2: f64) -> C64 {
        C64::new(self.b_field.partial(a, b, q1, q2), 0.0) + self.potential.partial(a, b, q1, q2)
    }

    pub fn grad_localizer(&self, q1: f64, q2: f64) -> [f64; 2] {
        let g1 = self.p_partial(1, 0, q1, q2);
        let g2 = self.p_partial(0, 1, q1, q2);
        [
            self.u * g1.re + self.v * g1.im,
            self.u * g2.re + self.v * g2.im,
        ]
    }

    pub fn hess_localizer(&self, q1: f64, q2: f64) -> [[f64; 2]; 2] {
        let h11 = self.p_partial(2, 0, q1, q2);
        let h12 = self.p_partial(1, 1, q1, q2);
        let h22 = self.p_partial(0, 2, q1, q2);
        let proj = |c: C64| self.u * c.re + self.v * c.im;
        [[proj(h11), proj(h12)], [proj(h12), proj(h22)]]
    }

    /// Validates the model on a sampled box: positivity of B, u > 0,
    /// analytic-vs-finite-difference agreement, and the sampled symbol-class
    /// boundedness heuristics.
    pub fn validate(&self, half_width: f64, grid_n: usize, seed: u64) -> Result<ValidationReport> {
        if self.u <= 0.0 {
            return Err(Error::Validation(format!("u must be positive, got {}", self.u)));
        }
        if self.b0 <= 0.0 {
            return Err(Error::Validation(format!("b0 must be positive, got {}", self.b0)));
        }
        let mut min_b = f64::INFINITY;
        let mut sup_derivs = 0.0f64;
        let step = 2.0 * half_width / (grid_n - 1) as f64;
        for i in 0..grid_n {
            for j in 0..grid_n {
                let q1 = -half_width + i as f64 * step;
                let q2 = -half_width + j as f64 * step;
                let b = self.b_field.eval(q1, q2);
                min_b = min_b.min(b);
                if b < self.b0 {
                    return Err(Error::Validation(format!(
                        "B({q1}, {q2}) = {b} < b0 = {}",
                        self.b0
                    )));
                }
            }
        }
        // sampled S(1) heuristic: derivative boundedness of B and V up to order 2,
        // and boundedness of the line integral of d2 B (gauge slope alpha)
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut max_fd_mismatch = 0.0f64;
        let mut max_alpha = 0.0f64;
        for _ in 0..100 {
            let q1 = rng.random_range(-half_width..half_width);
            let q2 = rng.random_range(-half_width..half_width);
            for (a, b) in [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
                let db = self.b_field.partial(a, b, q1, q2);
                let dv = self.potential.partial(a, b, q1, q2);
                sup_derivs = sup_derivs.max(db.abs()).max(dv.norm());
                if self.b_field.has_analytic_partials() && a + b == 1 {
                    let fd = fd_partial(&|x, y| self.b_field.eval(x, y), a, b, q1, q2);
                    let denom = db.abs().max(1.0);
                    max_fd_mismatch = max_fd_mismatch.max((db - fd).abs() / denom);
                }
                if self.potential.has_analytic_partials() && a + b == 1 {
                    let fd = fd_partial_c(&|x, y| self.potential.eval(x, y), a, b, q1, q2);
                    let denom = dv.norm().max(1.0);
                    max_fd_mismatch = max_fd_mismatch.max((dv - fd).norm() / denom);
                }
            }
            let alpha = crate::numeric::integrate(
                |s| self.b_field.partial(0, 1, s, q2),
                0.0,
                q1,
                1e-10,
            )?;
            max_alpha = max_alpha.max(alpha.abs());
        }
        if max_fd_mismatch > 1e-6 {
            return Err(Error::Validation(format!(
                "analytic derivatives disagree with finite differences: relative error {max_fd_mismatch:.3e}"
            )));
        }
        Ok(ValidationReport {
            min_b,
            sup_derivs,
            sup_alpha: max_alpha,
            fd_mismatch: max_fd_mismatch,
        })
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ValidationReport {
    pub min_b: f64,
    pub sup_derivs: f64,
    /// Sampled bound for the gauge slope integral (Assumption on symbol
    /// classes is a growth condition at infinity; this check is heuristic).
    pub sup_alpha: f64,
    pub fd_mismatch: f64,
}

/// Rectangular search box for the well.
#[derive(Debug, Clone, Copy)]
pub struct SearchBox {
    pub q1: (f64, f64),
    pub q2: (f64, f64),
}

impl SearchBox {
    pub fn centered(half_width: f64) -> Self {
        Self {
            q1: (-half_width, half_width),
            q2: (-half_width, half_width),
        }
    }
}

/// Everything the spectral routes need to know about the well.
#[derive(Debug, Clone, serde::Serialize)]
pub struct WellData {
    /// Minimizer of the localizer F.
    pub q0: [f64; 2],
    /// phi(q0) in (xi, x) coordinates.
    pub x0: crate::chart::SlowPoint,
    /// mu0 = (B + V)(q0).
    pub mu0: C64,
    /// Fine-structure constant c0 = sqrt(det(1/2 Hess p_hat(X0))), cone branch.
    pub c0: C64,
    /// Complex Hessian of p = B + V at q0, in q coordinates.
    pub hess_p_q: [[C64; 2]; 2],
    /// Complex Hessian of p_hat at X0, in (xi, x) coordinates.
    pub hess_p_x: [[C64; 2]; 2],
    /// Norm of the complex gradient of p at q0 (zero under the
    /// fine-structure hypotheses; O(eps) for perturbed models).
    pub grad_p_norm: f64,
    pub min_f: f64,
    pub u: f64,
    pub v: f64,
}

/// Options controlling the well search.
#[derive(Debug, Clone, Copy)]
pub struct WellOpts {
    /// Cluster margin as a fraction of (boundary min - interior min).
    pub margin_frac: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
}

impl Default for WellOpts {
    fn default() -> Self {
        Self {
            margin_frac: 0.1,
            newton_tol: 1e-9,
            max_newton: 100,
        }
    }
}

/// Coarse grid scan plus Newton refinement of the localizer minimum.
///
/// Fails when the minimum sits on the search-box boundary ("minimum possibly
/// at infinity"), when the sublevel set splits into disconnected clusters
/// ("non-unique minimum"), or when F is flat.
pub fn find_well(
    model: &FieldModel,
    chart: &GaugeChart,
    search_box: SearchBox,
    grid_n: usize,
) -> Result<WellData> {
    find_well_with(model, chart, search_box, grid_n, WellOpts::default())
}

pub fn find_well_with(
    model: &FieldModel,
    chart: &GaugeChart,
    search_box: SearchBox,
    grid_n: usize,
    opts: WellOpts,
) -> Result<WellData> {
    assert!(grid_n >= 8);
    let (x_lo, x_hi) = search_box.q1;
    let (y_lo, y_hi) = search_box.q2;
    let dx = (x_hi - x_lo) / (grid_n - 1) as f64;
    let dy = (y_hi - y_lo) / (grid_n - 1) as f64;

    let mut f = vec![0.0f64; grid_n * grid_n];
    let mut min_f = f64::INFINITY;
    let mut argmin = (0usize, 0usize);
    let mut boundary_min = f64::INFINITY;
    let mut max_f = f64::NEG_INFINITY;
    for j in 0..grid_n {
        for i in 0..grid_n {
            let v = model.localizer(x_lo + i as f64 * dx, y_lo + j as f64 * dy);
            f[j * grid_n + i] = v;
            max_f = max_f.max(v);
            if v < min_f {
                min_f = v;
                argmin = (i, j);
            }
            if i == 0 || j == 0 || i == grid_n - 1 || j == grid_n - 1 {
                boundary_min = boundary_min.min(v);
            }
        }
    }

    if max_f - min_f < 1e-12 * (1.0 + min_f.abs()) {
        return Err(Error::Well(
            "localizer F is constant on the search box; minimum not isolated".into(),
        ));
    }
    let depth = boundary_min - min_f;
    if depth <= 1e-10 * (1.0 + min_f.abs()) {
        return Err(Error::Well(
            "minimum attained on the search-box boundary; minimum possibly at infinity".into(),
        ));
    }

    // connectivity of the sublevel cluster {F <= min + margin}
    let margin = opts.margin_frac * depth;
    let threshold = min_f + margin;
    let mut label = vec![0usize; grid_n * grid_n];
    let mut n_clusters = 0usize;
    for start in 0..grid_n * grid_n {
        if f[start] > threshold || label[start] != 0 {
            continue;
        }
        n_clusters += 1;
        let mut stack = vec![start];
        label[start] = n_clusters;
        while let Some(idx) = stack.pop() {
            let (i, j) = (idx % grid_n, idx / grid_n);
            let push = |ni: usize, nj: usize, stack: &mut Vec<usize>, label: &mut Vec<usize>| {
                let nidx = nj * grid_n + ni;
                if f[nidx] <= threshold && label[nidx] == 0 {
                    label[nidx] = n_clusters;
                    stack.push(nidx);
                }
            };
            if i > 0 {
                push(i - 1, j, &mut stack, &mut label);
            }
            if i + 1 < grid_n {
                push(i + 1, j, &mut stack, &mut label);
            }
            if j > 0 {
                push(i, j - 1, &mut stack, &mut label);
            }
            if j + 1 < grid_n {
                push(i, j + 1, &mut stack, &mut label);
            }
        }
    }
    if n_clusters > 1 {
        return Err(Error::Well(format!(
            "non-unique minimum: {n_clusters} disjoint sublevel clusters below min F + margin; \
             run separate charts with different (u, v)"
        )));
    }

    // Newton refinement from the grid argmin
    let mut q = [
        x_lo + argmin.0 as f64 * dx,
        y_lo + argmin.1 as f64 * dy,
    ];
    let mut fval = min_f;
    for _ in 0..opts.max_newton {
        let g = model.grad_localizer(q[0], q[1]);
        let gnorm = (g[0] * g[0] + g[1] * g[1]).sqrt();
        if gnorm <= opts.newton_tol {
            break;
        }
        let h = model.hess_localizer(q[0], q[1]);
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let mut step = if det.abs() > 1e-14 {
            [
                -(h[1][1] * g[0] - h[0][1] * g[1]) / det,
                -(-h[1][0] * g[0] + h[0][0] * g[1]) / det,
            ]
        } else {
            [-g[0], -g[1]]
        };
        // damped: accept only decreasing steps
        let mut t = 1.0;
        loop {
            let cand = [q[0] + t * step[0], q[1] + t * step[1]];
            let fc = model.localizer(cand[0], cand[1]);
            if fc <= fval || t < 1e-6 {
                q = cand;
                fval = fc;
                break;
            }
            t *= 0.5;
        }
        let _ = &mut step;
    }
    let g = model.grad_localizer(q[0], q[1]);
    let gnorm = (g[0] * g[0] + g[1] * g[1]).sqrt();
    if gnorm > 1e-8 {
        return Err(Error::Well(format!(
            "Newton refinement stalled: |grad F| = {gnorm:.3e} at ({}, {})",
            q[0], q[1]
        )));
    }
    let hf = model.hess_localizer(q[0], q[1]);
    if hf[0][0] <= 0.0 || hf[0][0] * hf[1][1] - hf[0][1] * hf[1][0] <= 0.0 {
        return Err(Error::DegenerateWell(
            "Hessian of F at the minimum is not positive definite".into(),
        ));
    }

    let mu0 = model.p(q[0], q[1]);
    let min_f_refined = model.localizer(q[0], q[1]);
    let x0 = chart.phi(q[0], q[1])?;
    let (c0, hess_p_q, hess_p_x, grad_p_norm) = compute_c0(model, chart, q)?;

    Ok(WellData {
        q0: q,
        x0,
        mu0,
        c0,
        hess_p_q,
        hess_p_x,
        grad_p_norm,
        min_f: min_f_refined,
        u: model.u,
        v: model.v,
    })
}

/// Fine-structure constant `c0 = sqrt(det(1/2 Hess_X p_hat(X0)))` with the
/// cone branch, plus the Hessians in both coordinate systems.
///
/// When the complex gradient of p vanishes at q0 the chain-rule identity
/// `c0 = B(q0)^{-1} sqrt(det(1/2 Hess_q p(q0)))` is verified to relative
/// 1e-6; for nonzero gradients (perturbed wells) the identity only holds up
/// to O(|grad p|) and the check is relaxed accordingly.
pub fn compute_c0(
    model: &FieldModel,
    chart: &GaugeChart,
    q0: [f64; 2],
) -> Result<(C64, [[C64; 2]; 2], [[C64; 2]; 2], f64)> {
    let (q1, q2) = (q0[0], q0[1]);
    let g = [model.p_partial(1, 0, q1, q2), model.p_partial(0, 1, q1, q2)];
    let grad_p_norm = (g[0].norm_sqr() + g[1].norm_sqr()).sqrt();

    let h_q = [
        [model.p_partial(2, 0, q1, q2), model.p_partial(1, 1, q1, q2)],
        [model.p_partial(1, 1, q1, q2), model.p_partial(0, 2, q1, q2)],
    ];
    let h_x = chart.hess_p_hat(q1, q2)?;

    let scale = h_x[0][0].norm() + h_x[1][1].norm() + h_x[0][1].norm();
    let half = |m: [[C64; 2]; 2]| {
        [
            [0.5 * m[0][0], 0.5 * m[0][1]],
            [0.5 * m[1][0], 0.5 * m[1][1]],
        ]
    };
    let mx = half(h_x);
    let det_x = mx[0][0] * mx[1][1] - mx[0][1] * mx[1][0];
    if det_x.norm() <= 1e-10 * (scale * scale).max(1e-10) {
        return Err(Error::DegenerateWell(format!(
            "det(1/2 Hess p_hat) = {det_x} ~ 0 at the well"
        )));
    }
    let c0 = cone_sqrt_det(mx[0][0], mx[0][1], mx[1][1])?;

    // cross-check against the q-coordinate formula
    let mq = half(h_q);
    let c0_q = cone_sqrt_det(mq[0][0], mq[0][1], mq[1][1])? / model.b_field.eval(q1, q2);
    let rel = (c0 - c0_q).norm() / c0.norm().max(1e-300);
    let allowed = if grad_p_norm <= 1e-6 {
        1e-6
    } else {
        // chain rule picks up gradient terms of relative size ~ |grad p| / scale
        1e-6 + 10.0 * grad_p_norm / scale.max(1e-12)
    };
    if rel > allowed {
        return Err(Error::DegenerateWell(format!(
            "c0 cross-check failed: X-coordinate {c0} vs q-coordinate {c0_q} (rel {rel:.3e}, allowed {allowed:.3e})"
        )));
    }
    Ok((c0, h_q, h_x, grad_p_norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry;

    #[test]
    fn localizer_special_cases() {
        // u=1, v=0, V=0: F = B
        let m = registry::builtin("radial_well").unwrap();
        for &(x, y) in &[(0.0, 0.0), (1.2, -0.7)] {
            assert!((m.localizer(x, y) - m.b_field.eval(x, y)).abs() < 1e-14);
        }
        // u=1, v=1, B + Re V constant: F = const + Im V
        let m = registry::builtin("imaginary_well").unwrap();
        for &(x, y) in &[(0.3, 0.4), (-1.0, 2.0)] {
            let im_v = m.potential.eval(x, y).im;
            assert!((m.localizer(x, y) - (1.0 + im_v)).abs() < 1e-14);
        }
    }

    #[test]
    fn localizer_two_chart_remark() {
        // B = 1 - w, V = i*Vtilde with disjoint supports; u=1, v=-1 gives
        // F = 1 - w - Vtilde
        let w = |q1: f64, q2: f64| 0.5 * (-((q1 + 2.0) * (q1 + 2.0) + q2 * q2) * 8.0).exp();
        let vt = |q1: f64, q2: f64| 0.7 * (-((q1 - 2.0) * (q1 - 2.0) + q2 * q2) * 8.0).exp();
        let model = FieldModel {
            name: "two-chart".into(),
            b_field: RealField::from_fn(move |x, y| 1.0 - w(x, y)),
            potential: ComplexField::from_fn(move |x, y| C64::new(0.0, vt(x, y))),
            b0: 0.4,
            u: 1.0,
            v: -1.0,
        };
        for &(x, y) in &[(-2.0, 0.0), (2.0, 0.0), (0.0, 0.0)] {
            let expect = 1.0 - w(x, y) - vt(x, y);
            assert!((model.localizer(x, y) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn find_well_radial() {
        let m = registry::builtin("radial_well").unwrap();
        let chart = GaugeChart::new(Arc::new(m.clone()));
        let well = find_well(&m, &chart, SearchBox::centered(3.0), 61).unwrap();
        assert!(well.q0[0].abs() < 1e-8 && well.q0[1].abs() < 1e-8);
        assert!((well.mu0 - C64::new(1.0, 0.0)).norm() < 1e-10);
        assert!((well.c0 - C64::new(1.0, 0.0)).norm() < 1e-6, "c0 = {}", well.c0);
    }

    #[test]
    fn find_well_translated() {
        let a = [0.4, -0.6];
        let m = FieldModel {
            name: "translated".into(),
            b_field: RealField::from_fn(move |x, y| {
                2.0 - (-((x - a[0]).powi(2) + (y - a[1]).powi(2))).exp()
            }),
            potential: ComplexField::zero(),
            b0: 1.0,
            u: 1.0,
            v: 0.0,
        };
        let chart = GaugeChart::new(Arc::new(m.clone()));
        let well = find_well(&m, &chart, SearchBox::centered(3.0), 61).unwrap();
        assert!((well.q0[0] - a[0]).abs() < 1e-8 && (well.q0[1] - a[1]).abs() < 1e-8);
        // c0 invariant under translation
        assert!((well.c0 - C64::new(1.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn find_well_landau_fails() {
        let m = registry::builtin("landau").unwrap();
        let chart = GaugeChart::new(Arc::new(m.clone()));
        let err = find_well(&m, &chart, SearchBox::centered(3.0), 41).unwrap_err();
        assert!(matches!(err, Error::Well(_)));
    }

    #[test]
    fn c0_imaginary_well_is_i() {
        let m = registry::builtin("imaginary_well").unwrap();
        let chart = GaugeChart::new(Arc::new(m.clone()));
        let well = find_well(&m, &chart, SearchBox::centered(3.0), 61).unwrap();
        assert!((well.mu0 - C64::new(1.0, 0.0)).norm() < 1e-10);
        assert!(
            (well.c0 - C64::new(0.0, 1.0)).norm() < 1e-6,
            "expected c0 = i, got {}",
            well.c0
        );
    }

    #[test]
    fn c0_degenerate_landau() {
        // B = 1, V = 0: zero Hessian
        let m = registry::builtin("landau").unwrap();
        let chart = GaugeChart::new(Arc::new(m.clone()));
        let err = compute_c0(&m, &chart, [0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::DegenerateWell(_)));
    }

    #[test]
    fn validation_checks_b0() {
        let m = FieldModel {
            name: "bad".into(),
            b_field: RealField::from_fn(|x, _| x),
            potential: ComplexField::zero(),
            b0: 0.5,
            u: 1.0,
            v: 0.0,
        };
        assert!(m.validate(2.0, 21, 1).is_err());
    }

    #[test]
    fn validation_passes_builtins() {
        for key in ["landau", "radial_well", "imaginary_well", "perturbed_well(0.1)"] {
            let m = registry::builtin(key).unwrap();
            let rep = m.validate(4.0, 21, 7).unwrap();
            assert!(rep.min_b >= m.b0, "{key}: min B {} < b0", rep.min_b);
            assert!(rep.fd_mismatch < 1e-6, "{key}: fd mismatch {}", rep.fd_mismatch);
        }
    }
}
