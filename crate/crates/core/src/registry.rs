//! Built-in named field models.
//!
//! All built-ins carry analytic partial derivatives (Gaussian bumps
//! differentiate through Hermite polynomials), so nothing downstream relies
//! on finite differences for them.

use crate::fields::{ComplexField, FieldModel, RealField};
use crate::{Error, Result, C64};

/// Physicists' Hermite polynomial H_m, m <= 3.
fn hermite_phys(m: usize, t: f64) -> f64 {
    match m {
        0 => 1.0,
        1 => 2.0 * t,
        2 => 4.0 * t * t - 2.0,
        3 => 8.0 * t * t * t - 12.0 * t,
        _ => unreachable!("partials limited to total order 3"),
    }
}

/// ∂₁^m ∂₂^n of exp(-(q1-a1)² - (q2-a2)²).
fn gaussian_partial(m: usize, n: usize, u: f64, w: f64) -> f64 {
    let sign = if (m + n) % 2 == 0 { 1.0 } else { -1.0 };
    sign * hermite_phys(m, u) * hermite_phys(n, w) * (-u * u - w * w).exp()
}

fn radial_b() -> RealField {
    RealField::with_partials(
        |q1, q2| 2.0 - (-q1 * q1 - q2 * q2).exp(),
        |a, b, q1, q2| {
            if a == 0 && b == 0 {
                2.0 - (-q1 * q1 - q2 * q2).exp()
            } else {
                -gaussian_partial(a, b, q1, q2)
            }
        },
    )
}

/// Look up a built-in model. `perturbed_well` takes the perturbation
/// strength in parentheses, e.g. `perturbed_well(0.1)`.
pub fn builtin(key: &str) -> Result<FieldModel> {
    let key = key.trim();
    if let Some(rest) = key.strip_prefix("perturbed_well") {
        let eps = match rest.trim() {
            "" => 0.1,
            s => {
                let inner = s
                    .strip_prefix('(')
                    .and_then(|t| t.strip_suffix(')'))
                    .ok_or_else(|| {
                        Error::Config(format!("malformed model key '{key}'; want perturbed_well(eps)"))
                    })?;
                inner.trim().parse::<f64>().map_err(|_| {
                    Error::Config(format!("bad epsilon in model key '{key}'"))
                })?
            }
        };
        return Ok(perturbed_well(eps));
    }
    match key {
        "landau" => Ok(FieldModel {
            name: "landau".into(),
            b_field: RealField::with_partials(|_, _| 1.0, |_, _, _, _| 0.0),
            potential: ComplexField::zero(),
            b0: 1.0,
            u: 1.0,
            v: 0.0,
        }),
        "radial_well" => Ok(FieldModel {
            name: "radial_well".into(),
            b_field: radial_b(),
            potential: ComplexField::zero(),
            b0: 1.0,
            u: 1.0,
            v: 0.0,
        }),
        "imaginary_well" => Ok(FieldModel {
            name: "imaginary_well".into(),
            b_field: RealField::with_partials(|_, _| 1.0, |_, _, _, _| 0.0),
            potential: ComplexField::with_partials(
                |q1, q2| C64::new(0.0, 1.0 - (-q1 * q1 - q2 * q2).exp()),
                |a, b, q1, q2| {
                    if a == 0 && b == 0 {
                        C64::new(0.0, 1.0 - (-q1 * q1 - q2 * q2).exp())
                    } else {
                        C64::new(0.0, -gaussian_partial(a, b, q1, q2))
                    }
                },
            ),
            b0: 1.0,
            u: 1.0,
            v: 1.0,
        }),
        _ => Err(Error::Config(format!(
            "unknown model '{key}'; built-ins: landau, radial_well, imaginary_well, perturbed_well(eps)"
        ))),
    }
}

/// Radial magnetic well plus a complex Gaussian electric bump at (1, 0):
/// `V = eps (1+i)/2 exp(-|q - (1,0)|²)`.
pub fn perturbed_well(eps: f64) -> FieldModel {
    let amp = C64::new(0.5 * eps, 0.5 * eps);
    FieldModel {
        name: format!("perturbed_well({eps})"),
        b_field: radial_b(),
        potential: ComplexField::with_partials(
            move |q1, q2| amp * (-(q1 - 1.0) * (q1 - 1.0) - q2 * q2).exp(),
            move |a, b, q1, q2| {
                if a == 0 && b == 0 {
                    amp * (-(q1 - 1.0) * (q1 - 1.0) - q2 * q2).exp()
                } else {
                    amp * gaussian_partial(a, b, q1 - 1.0, q2)
                }
            },
        ),
        b0: 1.0,
        u: 1.0,
        v: 0.0,
    }
}

/// Model from user expressions for B and V (either may be empty for V = 0).
pub fn from_expressions(
    name: &str,
    b_src: &str,
    v_src: Option<&str>,
    b0: f64,
    u: f64,
    v: f64,
) -> Result<FieldModel> {
    let b_expr = crate::expr::Expr::parse(b_src)?;
    // B must be real-valued: probe the imaginary part
    for &(x, y) in &[(0.0, 0.0), (1.1, -0.7), (-2.3, 0.4), (0.5, 2.2)] {
        if b_expr.eval(x, y).im.abs() > 1e-12 {
            return Err(Error::Config(format!(
                "magnetic field expression '{b_src}' is not real-valued"
            )));
        }
    }
    let potential = match v_src {
        Some(src) if !src.trim().is_empty() => {
            ComplexField::from_expr(&crate::expr::Expr::parse(src)?)
        }
        _ => ComplexField::zero(),
    };
    Ok(FieldModel {
        name: name.to_string(),
        b_field: RealField::from_expr(&b_expr),
        potential,
        b0,
        u,
        v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_partials_match_fd() {
        let f = |x: f64, y: f64| (-(x * x) - y * y).exp();
        for (m, n) in [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1)] {
            let got = gaussian_partial(m, n, 0.6, -0.4);
            let fd = crate::numeric::fd_partial(&f, m, n, 0.6, -0.4);
            assert!(
                (got - fd).abs() < 1e-6,
                "({m},{n}): analytic {got} vs fd {fd}"
            );
        }
    }

    #[test]
    fn perturbed_key_parsing() {
        assert!(builtin("perturbed_well(0.25)").is_ok());
        assert!(builtin("perturbed_well").is_ok());
        assert!(builtin("perturbed_well[0.25]").is_err());
        assert!(builtin("no_such_model").is_err());
    }

    #[test]
    fn expression_model_rejects_complex_b() {
        assert!(from_expressions("bad", "1 + i*q1", None, 1.0, 1.0, 0.0).is_err());
        assert!(from_expressions("ok", "2 - exp(-(q1^2+q2^2))", None, 1.0, 1.0, 0.0).is_ok());
    }
}
