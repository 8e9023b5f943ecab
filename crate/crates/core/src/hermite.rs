//! Exact Weyl quantization of polynomial symbols in the fast variables
//! `(x₁, ξ₁)`, truncated to the Hermite (number) basis, and the fiber-wise
//! spectral data built from it.
//!
//! The ladder identities `x = (a + a†)/√2`, `ξ = (a - a†)/(i√2)` make the
//! quantization of any monomial an exact finite band matrix. A degree-d
//! monomial is symmetrized by the McCoy formula
//!
//! ```text
//! Op^w(x^a ξ^b) = 2^{-a} Σ_k C(a, k) x̂^k ξ̂^b x̂^{a-k},
//! ```
//!
//! and every matrix is assembled at dimension N + degree before cropping to
//! N×N, so the retained block is free of truncation bleed.
//!
//! The fiber hierarchy: `P₀` is a (complex-shifted) harmonic oscillator
//! with eigenvalues `(2n-1)B̂ + V̂` and Gaussian ground state `f`; `P₁` is
//! odd in `(x₁, ξ₁)`, so `⟨P₁ f, f⟩ = 0` holds exactly at the matrix level;
//! `P₂` feeds the subprincipal effective correction
//! `μ₁ = ⟨P₂ f, f⟩ - ⟨P₁ (P₀ - z)⁻¹ Π⊥ P₁ f, f⟩`.

use crate::chart::{ChartJets, GaugeChart, SlowPoint};
use crate::{Error, Result, C64};
use faer::linalg::solvers::Solve;
use faer::{c64, Mat};
use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, OnceLock};

/// Polynomial symbol Σ c_{ab} x₁^a ξ₁^b with finite support.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolySymbol {
    terms: BTreeMap<(u8, u8), C64>,
}

impl PolySymbol {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: C64) -> Self {
        let mut s = Self::default();
        s.add_term(0, 0, c);
        s
    }

    pub fn x() -> Self {
        let mut s = Self::default();
        s.add_term(1, 0, C64::new(1.0, 0.0));
        s
    }

    pub fn xi() -> Self {
        let mut s = Self::default();
        s.add_term(0, 1, C64::new(1.0, 0.0));
        s
    }

    pub fn add_term(&mut self, a: u8, b: u8, c: C64) {
        if c.norm_sqr() == 0.0 {
            return;
        }
        let e = self.terms.entry((a, b)).or_insert(C64::new(0.0, 0.0));
        *e += c;
        if e.norm_sqr() == 0.0 {
            self.terms.remove(&(a, b));
        }
    }

    pub fn coeff(&self, a: u8, b: u8) -> C64 {
        self.terms.get(&(a, b)).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u8, u8), &C64)> {
        self.terms.iter()
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|(a, b)| (*a + *b) as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&(a, b), &c) in other.terms.iter() {
            out.add_term(a, b, c);
        }
        out
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = Self::default();
        for (&(a, b), &v) in self.terms.iter() {
            out.add_term(a, b, c * v);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::default();
        for (&(a1, b1), &c1) in self.terms.iter() {
            for (&(a2, b2), &c2) in other.terms.iter() {
                out.add_term(a1 + a2, b1 + b2, c1 * c2);
            }
        }
        out
    }

    /// Evaluate the symbol at a phase point (used by test oracles).
    pub fn eval(&self, x: f64, xi: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (&(a, b), &c) in self.terms.iter() {
            acc += c * x.powi(a as i32) * xi.powi(b as i32);
        }
        acc
    }

    /// True when every coefficient is real.
    pub fn is_real(&self) -> bool {
        self.terms.values().all(|c| c.im == 0.0)
    }
}

/// Annihilation-ladder position operator at the given dimension.
fn ladder_x(dim: usize) -> Mat<c64> {
    let mut m = Mat::<c64>::zeros(dim, dim);
    let s = 1.0 / 2.0f64.sqrt();
    for n in 0..dim - 1 {
        let v = c64::new(((n + 1) as f64).sqrt() * s, 0.0);
        m[(n, n + 1)] = v;
        m[(n + 1, n)] = v;
    }
    m
}

fn ladder_xi(dim: usize) -> Mat<c64> {
    let mut m = Mat::<c64>::zeros(dim, dim);
    let s = 1.0 / 2.0f64.sqrt();
    for n in 0..dim - 1 {
        let v = ((n + 1) as f64).sqrt() * s;
        m[(n, n + 1)] = c64::new(0.0, -v);
        m[(n + 1, n)] = c64::new(0.0, v);
    }
    m
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

type MonoKey = (usize, u8, u8);

fn monomial_cache() -> &'static Mutex<HashMap<MonoKey, std::sync::Arc<Mat<c64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<MonoKey, std::sync::Arc<Mat<c64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// N×N Hermite-basis matrix of Op^w(x^a ξ^b); results are cached.
pub fn monomial_op(n: usize, a: u8, b: u8) -> std::sync::Arc<Mat<c64>> {
    if let Some(hit) = monomial_cache().lock().unwrap().get(&(n, a, b)) {
        return hit.clone();
    }
    let deg = (a + b) as usize;
    let dim = n + deg;
    let x = ladder_x(dim);
    let xi = ladder_xi(dim);
    // powers of x up to a, xi^b
    let mut xpow: Vec<Mat<c64>> = Vec::with_capacity(a as usize + 1);
    xpow.push(Mat::identity(dim, dim));
    for k in 0..a as usize {
        let next = &xpow[k] * &x;
        xpow.push(next);
    }
    let mut xib = Mat::<c64>::identity(dim, dim);
    for _ in 0..b {
        xib = &xib * &xi;
    }
    let mut acc = Mat::<c64>::zeros(dim, dim);
    let scale = 0.5f64.powi(a as i32);
    for k in 0..=a as usize {
        let w = c64::new(binomial(a as usize, k) * scale, 0.0);
        let term = &xpow[k] * &(&xib * &xpow[a as usize - k]);
        for j in 0..dim {
            for i in 0..dim {
                acc[(i, j)] += w * term[(i, j)];
            }
        }
    }
    let cropped = Mat::from_fn(n, n, |i, j| acc[(i, j)]);
    let arc = std::sync::Arc::new(cropped);
    monomial_cache()
        .lock()
        .unwrap()
        .insert((n, a, b), arc.clone());
    arc
}

/// Weyl quantization of a polynomial symbol as an N×N Hermite-basis matrix.
pub fn weyl_quantize_poly(sym: &PolySymbol, n: usize) -> Mat<c64> {
    let deg = sym.degree();
    assert!(deg <= 8, "polynomial degree {deg} > 8");
    assert!(n >= deg + 2, "truncation N = {n} too small for degree {deg}");
    let mut acc = Mat::<c64>::zeros(n, n);
    for (&(a, b), &c) in sym.terms() {
        let m = monomial_op(n, a, b);
        for j in 0..n {
            for i in 0..n {
                acc[(i, j)] += c * m[(i, j)];
            }
        }
    }
    acc
}

/// Truncated fiber operator `P_j(X₂)` in the Hermite basis.
#[derive(Debug, Clone)]
pub struct FiberOperator {
    pub x2: SlowPoint,
    pub n: usize,
    pub j: usize,
    pub matrix: Mat<c64>,
}

/// The fiber symbols p₀, p₁, p₂ at one slow point, from chart jets.
///
/// These are the h^{1/2}-Taylor coefficients of the conjugated full symbol
/// in the fast variables,
///
/// ```text
/// B̂(ξ₂+√h x₁, x₂+√h ξ₁)² ξ₁² + (x₁ - α̂(ξ₂+√h x₁, x₂+√h ξ₁) ξ₁)²
///   + V̂(ξ₂+√h x₁, x₂+√h ξ₁) + h W(ξ₂+√h x₁, x₂+√h ξ₁),
/// ```
///
/// with the slow-variable cutoff dropped (taken ≡ 1), which against
/// Gaussian states changes nothing to any polynomial order. The relative
/// sign between the α̂-coupling and the argument displacements follows from
/// re-deriving the gauge conjugation (ξ₂ - x₁ = -x̃₁ in the straightening
/// canonical variables); it is also the sign for which the closed-form
/// Gaussian ground state of P₀ has its stated phase.
pub fn fiber_symbol(j: usize, jets: &ChartJets) -> PolySymbol {
    let x = PolySymbol::x();
    let xi = PolySymbol::xi();
    let xi2 = xi.mul(&xi);
    let bh = &jets.bhat;
    let ah = &jets.alphahat;
    let vh = &jets.vhat;
    // x - α̂ ξ appears in both the principal and subprincipal parts
    let x_minus_axi = x.add(&xi.scale(-ah.f));
    // directional symbols: slot-1 increment couples to x₁, slot-2 to ξ₁
    let dsym = |j2: &crate::chart::Jet2| x.scale(j2.d1).add(&xi.scale(j2.d2));
    let d2sym = |j2: &crate::chart::Jet2| {
        x.mul(&x)
            .scale(j2.d11)
            .add(&x.mul(&xi).scale(2.0 * j2.d12))
            .add(&xi2.scale(j2.d22))
    };
    match j {
        0 => xi2
            .scale(bh.f * bh.f)
            .add(&x_minus_axi.mul(&x_minus_axi))
            .add(&PolySymbol::constant(vh.f)),
        1 => {
            let db = dsym(bh);
            let da = dsym(ah);
            let dv = dsym(vh);
            xi2.mul(&db)
                .scale(2.0 * bh.f)
                .add(&xi.mul(&x_minus_axi).mul(&da).scale(C64::new(-2.0, 0.0)))
                .add(&dv)
        }
        2 => {
            let db = dsym(bh);
            let da = dsym(ah);
            let d2b = d2sym(bh);
            let d2a = d2sym(ah);
            let d2v = d2sym(vh);
            xi2.mul(&db.mul(&db).add(&d2b.scale(bh.f)))
                .add(&xi2.mul(&da.mul(&da)))
                .add(&xi.mul(&x_minus_axi).mul(&d2a).scale(C64::new(-1.0, 0.0)))
                .add(&d2v.scale(C64::new(0.5, 0.0)))
                .add(&PolySymbol::constant(C64::new(jets.w, 0.0)))
        }
        _ => panic!("fiber symbols defined for j in 0..=2"),
    }
}

/// Build the fiber operator `P_j(X₂)` at truncation N.
pub fn fiber_p(j: usize, chart: &GaugeChart, x2: SlowPoint, n: usize) -> Result<FiberOperator> {
    let jets = chart.jets(x2)?;
    Ok(fiber_p_from_jets(j, &jets, x2, n))
}

pub fn fiber_p_from_jets(j: usize, jets: &ChartJets, x2: SlowPoint, n: usize) -> FiberOperator {
    let sym = fiber_symbol(j, jets);
    FiberOperator {
        x2,
        n,
        j,
        matrix: weyl_quantize_poly(&sym, n),
    }
}

/// Normalized ground state of `P₀(X₂)` in the Hermite basis.
///
/// With the convention `ξ = -i d/dx`, the Gaussian solving
/// `P₀ f = (B̂ + V̂) f` is `f ∝ exp(-x₁²/(2(B̂ + iα̂)))`, i.e. the exponent
/// `γ = (B̂ - iα̂)/(B̂² + α̂²)`; its Hermite coefficients follow the stable
/// two-term recurrence `c_{2m+2} = τ √((2m+1)/(2m+2)) c_{2m}` with
/// `τ = (1-γ)/(1+γ)`. Odd coefficients vanish identically.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub x2: SlowPoint,
    /// Exponent: f ∝ exp(-γ x₁²/2).
    pub gamma: C64,
    /// L²-normalization constant (B̂/(π(B̂² + α̂²)))^{1/4}.
    pub c_norm: f64,
    /// Unit-norm Hermite coefficients, length N.
    pub coeffs: Vec<C64>,
}

pub fn ground_state_from_values(bhat: f64, alphahat: f64, x2: SlowPoint, n: usize) -> GroundState {
    assert!(bhat > 0.0, "ground state needs B̂ > 0, got {bhat}");
    let gamma = C64::new(1.0, 0.0) / C64::new(bhat, alphahat);
    let tau = (C64::new(1.0, 0.0) - gamma) / (C64::new(1.0, 0.0) + gamma);
    let mut coeffs = vec![C64::new(0.0, 0.0); n];
    let mut c = C64::new(1.0, 0.0);
    coeffs[0] = c;
    let mut m = 0usize;
    while 2 * m + 2 < n {
        c *= tau * ((2 * m + 1) as f64 / (2 * m + 2) as f64).sqrt();
        coeffs[2 * m + 2] = c;
        m += 1;
    }
    let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in coeffs.iter_mut() {
        *c /= norm;
    }
    let c_norm = (bhat / (std::f64::consts::PI * (bhat * bhat + alphahat * alphahat))).powf(0.25);
    GroundState {
        x2,
        gamma,
        c_norm,
        coeffs,
    }
}

pub fn ground_state(chart: &GaugeChart, x2: SlowPoint, n: usize) -> Result<GroundState> {
    let jets = chart.jets(x2)?;
    let gs = ground_state_from_values(jets.bhat.f.re, jets.alphahat.f.re, x2, n);
    // truncation advisory: residual against P0 must meet the contract
    let p0 = fiber_p_from_jets(0, &jets, x2, n);
    let mu = jets.bhat.f + jets.vhat.f;
    let res = eigen_residual(p0.matrix.as_ref(), &gs.coeffs, mu);
    if res > 1e-8 {
        return Err(Error::Truncation(format!(
            "ground-state residual {res:.3e} at N = {n}; increase the truncation"
        )));
    }
    Ok(gs)
}

/// ⟨u, v⟩ = Σ uᵢ conj(vᵢ).
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a * b.conj()).sum()
}

pub fn mat_vec(m: faer::MatRef<'_, c64>, v: &[C64]) -> Vec<C64> {
    let n = m.nrows();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (j, vj) in v.iter().enumerate() {
        if vj.norm_sqr() == 0.0 {
            continue;
        }
        for i in 0..n {
            out[i] += m[(i, j)] * vj;
        }
    }
    out
}

/// ‖M f - μ f‖₂ for a unit vector f.
pub fn eigen_residual(m: faer::MatRef<'_, c64>, f: &[C64], mu: C64) -> f64 {
    let mf = mat_vec(m, f);
    mf.iter()
        .zip(f)
        .map(|(a, b)| (a - mu * b).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// ⟨P₁(X₂) f, f⟩ — identically zero (odd symbol against the even ground
/// state); returned for the invariant checks.
pub fn p1_mean(chart: &GaugeChart, x2: SlowPoint, n: usize) -> Result<C64> {
    let jets = chart.jets(x2)?;
    let p1 = fiber_p_from_jets(1, &jets, x2, n);
    let gs = ground_state_from_values(jets.bhat.f.re, jets.alphahat.f.re, x2, n);
    let w = mat_vec(p1.matrix.as_ref(), &gs.coeffs);
    Ok(inner(&w, &gs.coeffs))
}

/// The subprincipal effective correction
/// `μ₁(X₂; z) = ⟨P₂ f, f⟩ - ⟨P₁ (P₀ - z)⁻¹ Π⊥ P₁ f, f⟩`.
///
/// `P₁ f` lives in the odd-parity sector while the near-singular direction
/// of `P₀ - z` (the ground state itself) is even, so the deflated resolvent
/// reduces to a well-conditioned solve on the odd sector.
pub fn mu1(chart: &GaugeChart, x2: SlowPoint, z: C64, n: usize, mu0: C64) -> Result<C64> {
    let model = chart.model();
    let lhs = model.u * (z - mu0).re + model.v * (z - mu0).im;
    let rhs = 2.0 * model.u * model.b0;
    if lhs >= rhs {
        return Err(Error::FiberParameter { z, lhs, rhs });
    }
    let jets = chart.jets(x2)?;
    Ok(mu1_from_jets(&jets, x2, z, n)?.0)
}

/// μ₁ from precomputed jets; also returns the solve condition estimate.
pub fn mu1_from_jets(jets: &ChartJets, x2: SlowPoint, z: C64, n: usize) -> Result<(C64, f64)> {
    let p0 = fiber_p_from_jets(0, jets, x2, n);
    let p1 = fiber_p_from_jets(1, jets, x2, n);
    let p2 = fiber_p_from_jets(2, jets, x2, n);
    let gs = ground_state_from_values(jets.bhat.f.re, jets.alphahat.f.re, x2, n);

    let t1 = {
        let p2f = mat_vec(p2.matrix.as_ref(), &gs.coeffs);
        inner(&p2f, &gs.coeffs)
    };

    let w = mat_vec(p1.matrix.as_ref(), &gs.coeffs);
    // deflation: w is odd, f is even, so ⟨w, f⟩ = 0 and the constrained
    // solve closes within the odd sector
    let odd: Vec<usize> = (1..n).step_by(2).collect();
    let m = odd.len();
    let mut a = Mat::<c64>::zeros(m, m);
    for (jj, &cj) in odd.iter().enumerate() {
        for (ii, &ci) in odd.iter().enumerate() {
            a[(ii, jj)] = p0.matrix[(ci, cj)];
        }
        a[(jj, jj)] -= z;
    }
    let lu = a.partial_piv_lu();
    // condition proxy from the U factor
    let (mut dmin, mut dmax) = (f64::INFINITY, 0.0f64);
    for i in 0..m {
        let d = lu.U()[(i, i)].norm();
        dmin = dmin.min(d);
        dmax = dmax.max(d);
    }
    let cond = if dmin == 0.0 { f64::INFINITY } else { dmax / dmin };
    if cond > 1e12 {
        let eigs = a.eigenvalues().map_err(|e| Error::Eigensolve(format!("{e:?}")))?;
        let nearest = eigs
            .iter()
            .min_by(|p, q| p.norm().partial_cmp(&q.norm()).unwrap())
            .copied()
            .unwrap_or(C64::new(0.0, 0.0));
        return Err(Error::FiberSolve {
            cond,
            nearest: nearest + z,
        });
    }
    let mut rhs = Mat::<c64>::zeros(m, 1);
    for (ii, &ci) in odd.iter().enumerate() {
        rhs[(ii, 0)] = w[ci];
    }
    let sol = lu.solve(&rhs);
    let mut y = vec![C64::new(0.0, 0.0); n];
    for (ii, &ci) in odd.iter().enumerate() {
        y[ci] = sol[(ii, 0)];
    }
    let p1y = mat_vec(p1.matrix.as_ref(), &y);
    let t2 = inner(&p1y, &gs.coeffs);
    Ok((t1 - t2, cond))
}

/// μ₁ with automatic truncation doubling until successive values agree to
/// `rtol` (relative), starting at `n0` and capped at `n_cap`.
pub fn mu1_converged(
    chart: &GaugeChart,
    x2: SlowPoint,
    z: C64,
    n0: usize,
    n_cap: usize,
    rtol: f64,
    mu0: C64,
) -> Result<(C64, usize)> {
    let model = chart.model();
    let lhs = model.u * (z - mu0).re + model.v * (z - mu0).im;
    let rhs = 2.0 * model.u * model.b0;
    if lhs >= rhs {
        return Err(Error::FiberParameter { z, lhs, rhs });
    }
    let jets = chart.jets(x2)?;
    let mut n = n0;
    let (mut prev, _) = mu1_from_jets(&jets, x2, z, n)?;
    loop {
        let n2 = 2 * n;
        if n2 > n_cap {
            return Err(Error::Truncation(format!(
                "mu1 did not converge to rtol {rtol:.1e} below N = {n_cap}"
            )));
        }
        let (next, _) = mu1_from_jets(&jets, x2, z, n2)?;
        if (next - prev).norm() <= rtol * next.norm().max(1.0) {
            return Ok((next, n2));
        }
        prev = next;
        n = n2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry;
    use std::sync::Arc;

    fn radial_chart() -> GaugeChart {
        GaugeChart::new(Arc::new(registry::builtin("radial_well").unwrap()))
    }

    fn imaginary_chart() -> GaugeChart {
        GaugeChart::new(Arc::new(registry::builtin("imaginary_well").unwrap()))
    }

    #[test]
    fn harmonic_oscillator_diagonal() {
        let sym = PolySymbol::x().mul(&PolySymbol::x()).add(&PolySymbol::xi().mul(&PolySymbol::xi()));
        let m = weyl_quantize_poly(&sym, 5);
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j { (2 * i + 1) as f64 } else { 0.0 };
                assert!((m[(i, j)] - c64::new(expect, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn position_operator_tridiagonal() {
        let m = weyl_quantize_poly(&PolySymbol::x(), 3);
        let s = 1.0 / 2.0f64.sqrt();
        for n in 0..2usize {
            let expect = ((n + 1) as f64).sqrt() * s;
            assert!((m[(n, n + 1)].re - expect).abs() < 1e-15);
            assert!((m[(n + 1, n)].re - expect).abs() < 1e-15);
        }
        assert!(m[(0, 0)].norm() < 1e-15 && m[(2, 2)].norm() < 1e-15);
    }

    #[test]
    fn weyl_ordering_xy() {
        // Op^w(x ξ) = (x̂ξ̂ + ξ̂x̂)/2; check against the ladder algebra:
        // x̂ξ̂ + ξ̂x̂ = i(a†² - a²), so entries sit on |i-j| = 2.
        let mut sym = PolySymbol::zero();
        sym.add_term(1, 1, c64::new(1.0, 0.0));
        let m = weyl_quantize_poly(&sym, 4);
        for i in 0..4usize {
            for j in 0..4usize {
                let d = i.abs_diff(j);
                if d != 2 {
                    assert!(m[(i, j)].norm() < 1e-14, "({i},{j}) = {}", m[(i, j)]);
                }
            }
        }
        // (x̂ξ̂+ξ̂x̂)/2 |0> has component i·√2/2 ... on |2>:
        // i(a†² - a²)/2 acting on |0⟩ gives (i√2/2)|2⟩
        assert!((m[(2, 0)] - c64::new(0.0, (2.0f64).sqrt() / 2.0)).norm() < 1e-14);
        assert!((m[(0, 2)] - c64::new(0.0, -(2.0f64).sqrt() / 2.0)).norm() < 1e-14);
    }

    #[test]
    fn quantization_linearity_exact() {
        let mut s1 = PolySymbol::zero();
        s1.add_term(2, 1, c64::new(0.3, -0.4));
        s1.add_term(0, 2, c64::new(1.0, 2.0));
        let mut s2 = PolySymbol::zero();
        s2.add_term(1, 1, c64::new(-0.7, 0.1));
        s2.add_term(2, 2, c64::new(0.05, 0.0));
        let alpha = c64::new(1.3, -0.2);
        let beta = c64::new(-0.6, 0.9);
        let lhs = weyl_quantize_poly(&s1.scale(alpha).add(&s2.scale(beta)), 12);
        let m1 = weyl_quantize_poly(&s1, 12);
        let m2 = weyl_quantize_poly(&s2, 12);
        for i in 0..12 {
            for j in 0..12 {
                let rhs = alpha * m1[(i, j)] + beta * m2[(i, j)];
                assert!((lhs[(i, j)] - rhs).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn real_symbol_hermitian_and_banded() {
        let mut sym = PolySymbol::zero();
        sym.add_term(2, 0, c64::new(1.5, 0.0));
        sym.add_term(1, 1, c64::new(-0.3, 0.0));
        sym.add_term(0, 4, c64::new(0.2, 0.0));
        sym.add_term(3, 1, c64::new(0.7, 0.0));
        let n = 24;
        let m = weyl_quantize_poly(&sym, n);
        let band = sym.degree();
        for i in 0..n {
            for j in 0..n {
                assert!((m[(i, j)] - m[(j, i)].conj()).norm() < 1e-13, "not hermitian");
                if i.abs_diff(j) > band {
                    assert!(m[(i, j)].norm() < 1e-14, "band violation at ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn odd_symbol_has_zero_even_even_entries() {
        let mut sym = PolySymbol::zero();
        sym.add_term(1, 0, c64::new(0.4, 0.1));
        sym.add_term(0, 3, c64::new(-1.0, 0.8));
        sym.add_term(2, 1, c64::new(0.3, 0.0));
        let m = weyl_quantize_poly(&sym, 16);
        for i in 0..16 {
            for j in 0..16 {
                if (i + j) % 2 == 0 {
                    assert!(m[(i, j)].norm() == 0.0, "parity violation at ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn fiber_p1_vanishes_for_constant_field() {
        let chart = GaugeChart::new(Arc::new(registry::builtin("landau").unwrap()));
        let p1 = fiber_p(1, &chart, SlowPoint::new(0.4, -1.0), 16).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                assert!(p1.matrix[(i, j)].norm() < 1e-14);
            }
        }
        // constant-field P0 spectrum: (2n-1) b
        let p0 = fiber_p(0, &chart, SlowPoint::new(0.4, -1.0), 32).unwrap();
        let mut eigs = p0.matrix.eigenvalues().unwrap();
        eigs.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        for n in 0..5 {
            assert!((eigs[n] - c64::new((2 * n + 1) as f64, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn fiber_spectrum_matches_exact_formula() {
        // radial model at X2 = phi(0.5, 0.5): eigenvalues (2n-1) B̂ + V̂
        let chart = radial_chart();
        let x2 = chart.phi(0.5, 0.5).unwrap();
        let jets = chart.jets(x2).unwrap();
        let bhat = jets.bhat.f.re;
        let p0 = fiber_p(0, &chart, x2, 64).unwrap();
        let mut eigs = p0.matrix.eigenvalues().unwrap();
        eigs.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        for n in 0..5 {
            let expect = (2 * n + 1) as f64 * bhat;
            assert!(
                (eigs[n].re - expect).abs() < 1e-9 && eigs[n].im.abs() < 1e-9,
                "n = {n}: {} vs {expect}",
                eigs[n]
            );
        }
    }

    #[test]
    fn ground_state_standard_gaussian() {
        let gs = ground_state_from_values(1.0, 0.0, SlowPoint::new(0.0, 0.0), 8);
        assert!((gs.coeffs[0] - c64::new(1.0, 0.0)).norm() < 1e-14);
        for c in &gs.coeffs[1..] {
            assert!(c.norm() < 1e-14);
        }
        assert!((gs.c_norm - std::f64::consts::PI.powf(-0.25)).abs() < 1e-14);
    }

    #[test]
    fn ground_state_residual_squeezed() {
        // B̂ = 2, α̂ = 0.7 synthetic fiber: residual of the analytic Gaussian
        // against the quantized quadratic symbol
        let (bhat, ahat) = (2.0, 0.7);
        let n = 64;
        // B̂² ξ² + (x - α̂ ξ)²
        let mut sym = PolySymbol::zero();
        sym.add_term(0, 2, c64::new(bhat * bhat + ahat * ahat, 0.0));
        sym.add_term(1, 1, c64::new(-2.0 * ahat, 0.0));
        sym.add_term(2, 0, c64::new(1.0, 0.0));
        let p0 = weyl_quantize_poly(&sym, n);
        let gs = ground_state_from_values(bhat, ahat, SlowPoint::new(0.0, 0.0), n);
        let res = eigen_residual(p0.as_ref(), &gs.coeffs, c64::new(bhat, 0.0));
        assert!(res < 1e-8, "residual {res:.3e}");
        let norm: f64 = gs.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn p1_mean_vanishes_radial() {
        let chart = radial_chart();
        let x2 = chart.phi(0.3, -0.2).unwrap();
        for n in [32, 64, 128] {
            let v = p1_mean(&chart, x2, n).unwrap();
            assert!(v.norm() <= 1e-10, "N = {n}: {v}");
        }
    }

    #[test]
    fn mu1_zero_for_constant_field() {
        let chart = GaugeChart::new(Arc::new(registry::builtin("landau").unwrap()));
        let z = c64::new(1.0, 0.0);
        let v = mu1(&chart, SlowPoint::new(0.2, 0.5), z, 32, c64::new(1.0, 0.0)).unwrap();
        assert!(v.norm() < 1e-12, "mu1 = {v}");
    }

    #[test]
    fn mu1_truncation_convergence() {
        let chart = radial_chart();
        let x2 = chart.phi(0.0, 0.0).unwrap();
        let mu0 = c64::new(1.0, 0.0);
        let a = mu1(&chart, x2, mu0, 64, mu0).unwrap();
        let b = mu1(&chart, x2, mu0, 128, mu0).unwrap();
        assert!(
            (a - b).norm() <= 1e-7 * b.norm().max(1.0),
            "mu1(64) = {a}, mu1(128) = {b}"
        );
        let (v, n) = mu1_converged(&chart, x2, mu0, 64, 512, 1e-7, mu0).unwrap();
        assert!(n <= 128);
        assert!((v - b).norm() <= 1e-7 * v.norm().max(1.0));
    }

    #[test]
    fn mu1_rejects_bad_z() {
        let chart = radial_chart();
        let x2 = chart.phi(0.0, 0.0).unwrap();
        let mu0 = c64::new(1.0, 0.0);
        // u Re(z - mu0) >= 2 u b0 = 2
        let bad = mu0 + c64::new(2.5, 0.0);
        assert!(matches!(
            mu1(&chart, x2, bad, 32, mu0),
            Err(Error::FiberParameter { .. })
        ));
    }

    #[test]
    fn mu1_imaginary_well_truncation_stable() {
        let chart = imaginary_chart();
        let x2 = chart.phi(0.25, -0.15).unwrap();
        let mu0 = c64::new(1.0, 0.0);
        let a = mu1(&chart, x2, mu0, 64, mu0).unwrap();
        let b = mu1(&chart, x2, mu0, 128, mu0).unwrap();
        assert!((a - b).norm() <= 1e-7 * b.norm().max(1.0));
    }
}
