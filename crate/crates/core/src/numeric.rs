//! Shared numerical kernels: adaptive Gauss–Kronrod quadrature, high-order
//! finite differences, uniform-grid bicubic interpolation, and small fitting
//! helpers.

use crate::{Error, Result, C64};

/// 7-point Gauss / 15-point Kronrod abscissae on [-1, 1] (positive half).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss–Kronrod 7-15 panel: returns (kronrod value, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut k = 0.0;
    let mut g = 0.0;
    for j in 0..8 {
        let x = half * XGK[j];
        let (fp, fm) = (f(c + x), f(c - x));
        let s = if j == 7 { f(c) } else { fp + fm };
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    k *= half;
    g *= half;
    let err = (200.0 * (k - g).abs()).powf(1.5).min((k - g).abs());
    (k, err)
}

/// Adaptive quadrature of `f` over [a, b] to absolute tolerance `tol`.
///
/// Bisects the worst panel until the summed error estimate is below `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (sign, lo, hi) = if a < b { (1.0, a, b) } else { (-1.0, b, a) };
    let mut panels = vec![(lo, hi)];
    let mut vals = vec![gk15(&f, lo, hi)];
    let max_panels = 2048;
    loop {
        let total_err: f64 = vals.iter().map(|v| v.1).sum();
        if total_err <= tol {
            let total: f64 = vals.iter().map(|v| v.0).sum();
            return Ok(sign * total);
        }
        if panels.len() >= max_panels {
            let (wa, wb) = panels[worst(&vals)];
            return Err(Error::Quadrature {
                a: wa,
                b: wb,
                err: total_err,
                subdivisions: panels.len(),
            });
        }
        let w = worst(&vals);
        let (pa, pb) = panels[w];
        let mid = 0.5 * (pa + pb);
        panels[w] = (pa, mid);
        vals[w] = gk15(&f, pa, mid);
        panels.push((mid, pb));
        vals.push(gk15(&f, mid, pb));
    }
}

fn worst(vals: &[(f64, f64)]) -> usize {
    let mut idx = 0;
    let mut best = -1.0;
    for (i, v) in vals.iter().enumerate() {
        if v.1 > best {
            best = v.1;
            idx = i;
        }
    }
    idx
}

/// 4th-order central finite-difference stencils for d/dx of order 1..=3.
/// Returns (offsets, coefficients, denominator power).
fn stencil(order: usize) -> (&'static [isize], &'static [f64]) {
    match order {
        0 => (&[0], &[1.0]),
        1 => (&[-2, -1, 1, 2], &[1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0]),
        2 => (
            &[-2, -1, 0, 1, 2],
            &[
                -1.0 / 12.0,
                16.0 / 12.0,
                -30.0 / 12.0,
                16.0 / 12.0,
                -1.0 / 12.0,
            ],
        ),
        3 => (
            &[-3, -2, -1, 1, 2, 3],
            &[
                1.0 / 8.0,
                -8.0 / 8.0,
                13.0 / 8.0,
                -13.0 / 8.0,
                8.0 / 8.0,
                -1.0 / 8.0,
            ],
        ),
        _ => panic!("finite differences implemented for orders 0..=3"),
    }
}

/// Step size for a partial derivative of given total order at point scale |q|.
pub fn fd_step(total_order: usize, scale: f64) -> f64 {
    let base = match total_order {
        0 | 1 => 1e-4,
        2 => 4e-4,
        _ => 5e-3,
    };
    base * (1.0 + scale)
}

/// Mixed partial `∂^a_{q1} ∂^b_{q2} f(q1, q2)` by nested 4th-order central
/// differences. `a + b <= 3`.
pub fn fd_partial<F: Fn(f64, f64) -> f64>(f: &F, a: usize, b: usize, q1: f64, q2: f64) -> f64 {
    assert!(a + b <= 3, "finite differences support total order <= 3");
    let s = fd_step(a + b, q1.hypot(q2));
    let (off1, co1) = stencil(a);
    let (off2, co2) = stencil(b);
    let mut acc = 0.0;
    for (o1, c1) in off1.iter().zip(co1) {
        for (o2, c2) in off2.iter().zip(co2) {
            acc += c1 * c2 * f(q1 + *o1 as f64 * s, q2 + *o2 as f64 * s);
        }
    }
    acc / s.powi((a + b) as i32)
}

/// Complex version of [`fd_partial`].
pub fn fd_partial_c<F: Fn(f64, f64) -> C64>(f: &F, a: usize, b: usize, q1: f64, q2: f64) -> C64 {
    let re = fd_partial(&|x, y| f(x, y).re, a, b, q1, q2);
    let im = fd_partial(&|x, y| f(x, y).im, a, b, q1, q2);
    C64::new(re, im)
}

/// Degree-5 Lagrange weights for 6 consecutive unit-spaced nodes, at offset
/// `t` measured from the first node.
fn lagrange6(t: f64) -> [f64; 6] {
    let mut w = [0.0f64; 6];
    for (k, wk) in w.iter_mut().enumerate() {
        let mut acc = 1.0;
        for m in 0..6 {
            if m != k {
                acc *= (t - m as f64) / (k as f64 - m as f64);
            }
        }
        *wk = acc;
    }
    w
}

/// Tensor-product 6-point Lagrange interpolation of complex values on a
/// uniform grid (6th-order accurate; one-sided stencils near the edges).
#[derive(Debug, Clone)]
pub struct GridInterp2 {
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major: `values[iy * nx + ix]`.
    pub values: Vec<C64>,
}

impl GridInterp2 {
    pub fn eval(&self, x: f64, y: f64) -> C64 {
        assert!(self.nx >= 6 && self.ny >= 6, "grid too small for 6-point stencils");
        let fx = (x - self.x0) / self.dx;
        let fy = (y - self.y0) / self.dy;
        let ix = ((fx.floor() as isize) - 2).clamp(0, self.nx as isize - 6) as usize;
        let iy = ((fy.floor() as isize) - 2).clamp(0, self.ny as isize - 6) as usize;
        let wx = lagrange6(fx - ix as f64);
        let wy = lagrange6(fy - iy as f64);
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..6 {
            let row = (iy + j) * self.nx + ix;
            let mut s = C64::new(0.0, 0.0);
            for i in 0..6 {
                s += wx[i] * self.values[row + i];
            }
            acc += wy[j] * s;
        }
        acc
    }
}

/// Least squares line through (x, y): returns (slope, intercept, r²).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}

/// Richardson extrapolation with refinement ratio `r` and order `p`:
/// combines a fine-grid and a coarse-grid value.
pub fn richardson(fine: C64, coarse: C64, r: f64, p: f64) -> C64 {
    let rp = r.powf(p);
    (rp * fine - coarse) / (rp - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_gaussian() {
        // ∫₀¹ e^{-s²} ds = (√π/2) erf(1)
        let v = integrate(|s| (-s * s).exp(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 0.746824132812427).abs() < 1e-12);
    }

    #[test]
    fn quadrature_empty_and_reversed() {
        let v = integrate(|s| s.cos(), 2.0, 2.0, 1e-12).unwrap();
        assert_eq!(v, 0.0);
        let a = integrate(|s| s.cos(), 0.0, 1.5, 1e-12).unwrap();
        let b = integrate(|s| s.cos(), 1.5, 0.0, 1e-12).unwrap();
        assert!((a + b).abs() < 1e-13);
    }

    #[test]
    fn fd_orders() {
        let f = |x: f64, y: f64| (x * x * y).sin() + x * y * y;
        // ∂₁ at (0.7, -0.3)
        let exact = |x: f64, y: f64| (x * x * y).cos() * 2.0 * x * y + y * y;
        let got = fd_partial(&f, 1, 0, 0.7, -0.3);
        assert!((got - exact(0.7, -0.3)).abs() < 1e-9);
        // mixed third derivative of x²y³: ∂₁∂₂² = 12 x y
        let g = |x: f64, y: f64| x * x * y * y * y;
        let got = fd_partial(&g, 1, 2, 1.3, 0.4);
        assert!((got - 12.0 * 1.3 * 0.4).abs() < 1e-6);
    }

    #[test]
    fn grid_interp_reproduces_smooth_function() {
        let (nx, ny) = (33, 33);
        let (x0, y0, dx, dy) = (-2.0, -2.0, 4.0 / 32.0, 4.0 / 32.0);
        let f = |x: f64, y: f64| C64::new((x + 0.3 * y).sin(), (0.2 * x * y).cos());
        let mut values = vec![C64::new(0.0, 0.0); nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                values[j * nx + i] = f(x0 + i as f64 * dx, y0 + j as f64 * dy);
            }
        }
        let interp = GridInterp2 { x0, y0, dx, dy, nx, ny, values };
        let mut worst = 0.0f64;
        for &(x, y) in &[(0.11, -0.47), (-1.3, 0.9), (0.77, 0.77), (-0.05, 1.9)] {
            worst = worst.max((interp.eval(x, y) - f(x, y)).norm());
        }
        assert!(worst < 1e-7, "interpolation error {worst:.3e}");
    }

    #[test]
    fn linear_fit_exact() {
        let xs: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let (s, b, r2) = linear_fit(&xs, &ys);
        assert!((s - 2.5).abs() < 1e-12 && (b + 1.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }
}
