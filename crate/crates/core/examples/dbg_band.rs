
use magspec::chart::{GaugeChart, SlowPoint};
use magspec::fields::{ComplexField, FieldModel, RealField};
use magspec::hermite::mu1;
use magspec::C64;
use std::sync::Arc;

// B depends on q1 only: the 2D operator fibers exactly over the dual
// variable eta of q2, and the lowest band of
//     H_eta = (-ih d/dq1)^2 + (eta - A2(q1))^2
// equals h * (effective symbol at xi = eta) up to O(h^3). This pins down
// mu1 independently of the whole hermite/chart machinery.
fn main() {
    let model = Arc::new(FieldModel {
        name: "q1-only".into(),
        b_field: RealField::with_partials(
            |q1, _| 2.0 - (-q1 * q1).exp(),
            |a, b, q1, _| {
                if b > 0 {
                    return 0.0;
                }
                let g = (-q1 * q1).exp();
                match a {
                    0 => 2.0 - g,
                    1 => 2.0 * q1 * g,
                    2 => (2.0 - 4.0 * q1 * q1) * g,
                    3 => (-12.0 * q1 + 8.0 * q1 * q1 * q1) * g,
                    _ => unreachable!(),
                }
            },
        ),
        potential: ComplexField::zero(),
        b0: 1.0,
        u: 1.0,
        v: 0.0,
    });
    let chart = GaugeChart::new(model.clone());

    // exact 1D band eigenvalue by fine central differences + Richardson;
    // the lowest eigenvalue of the symmetric tridiagonal comes from
    // Sturm-sequence bisection
    let band = |eta: f64, h: f64| -> f64 {
        let lo = -5.0f64;
        let hi = 6.0f64;
        let solve = |n: usize| -> f64 {
            let d = (hi - lo) / (n + 1) as f64;
            let t = h * h / (d * d);
            let diag: Vec<f64> = (0..n)
                .map(|i| {
                    let q1 = lo + (i + 1) as f64 * d;
                    let a2 = 2.0 * q1 - (std::f64::consts::PI).sqrt() / 2.0 * erf(q1);
                    2.0 * t + (eta - a2) * (eta - a2)
                })
                .collect();
            // count of eigenvalues below x via the Sturm sequence
            let count_below = |x: f64| -> usize {
                let mut count = 0usize;
                let mut q = diag[0] - x;
                if q < 0.0 {
                    count += 1;
                }
                for i in 1..n {
                    let denom = if q.abs() < 1e-300 { 1e-300 } else { q };
                    q = (diag[i] - x) - t * t / denom;
                    if q < 0.0 {
                        count += 1;
                    }
                }
                count
            };
            let (mut a, mut b) = (0.0f64, 4.0 * t + 100.0);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if count_below(mid) >= 1 {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        };
        let e1 = solve(3000);
        let e2 = solve(4500);
        let r = 4501.0f64 / 3001.0;
        (r * r * e2 - e1) / (r * r - 1.0)
    };

    for eta in [0.0f64, 0.5, 1.0] {
        let x2 = SlowPoint::new(eta, 0.0);
        let bhat = chart.bhat(x2).unwrap();
        let mu0 = C64::new(1.0, 0.0);
        let mine = mu1(&chart, x2, mu0, 64, mu0).unwrap();
        // extract mu1_true by two-h extrapolation of (band/h - Bhat)/h
        let mut est = Vec::new();
        for h in [0.04f64, 0.02] {
            let eps = band(eta, h);
            est.push((eps / h - bhat) / h);
        }
        let mu1_true = 2.0 * est[1] - est[0]; // O(h) Richardson in h
        println!(
            "eta = {eta}: Bhat = {bhat:.8}, mu1_mine = {:.6}, mu1_band(0.04) = {:.6}, mu1_band(0.02) = {:.6}, extrap = {:.6}",
            mine.re, est[0], est[1], mu1_true
        );
    }
}

// Abramowitz-Stegun 7.1.26, enough accuracy for the gauge integral here
fn erf(x: f64) -> f64 {
    let s = x.signum();
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let y = 1.0
        - (((((1.061405429 * t - 1.453152027) * t) + 1.421413741) * t - 0.284496736) * t
            + 0.254829592)
            * t
            * (-x * x).exp();
    s * y
}
