//! Sweep orchestration: run the selected routes over a strictly decreasing
//! h list, match spectra pairwise, probe the gap and resolvent hypotheses,
//! and fit the asymptotic structure.
//!
//! The direct route optionally Richardson-extrapolates over a grid triple
//! (ratio 1.5), which both sharpens the eigenvalues to O(d⁴) and yields an
//! honest discretization-error indicator: the difference between the
//! extrapolants of the two grid pairs.

use crate::chart::GaugeChart;
use crate::config::{RouteSel, RunConfig};
use crate::direct2d::{assemble_l, numerical_range_guard, spectral_window, DirectOpts};
use crate::effective::{
    assemble_peff, eff_spectrum, resolvent_constant_probe, EffOpts, EffectiveSymbol,
};
use crate::eigensolve::{match_spectra, shift_invert_spectrum, ShiftInvertOpts};
use crate::fields::{find_well, FieldModel, SearchBox, WellData};
use crate::numeric::{linear_fit, richardson};
use crate::quadratic::ComplexQuadratic;
use crate::report::{DirectCell, EffectiveCell, FineStructure, HCell, OrderFit, SweepReport};
use crate::{Result, C64};
use std::sync::Arc;

/// Model, chart, and well data shared by every cell of a sweep.
pub struct Setup {
    pub model: FieldModel,
    pub chart: Arc<GaugeChart>,
    pub well: WellData,
}

/// Validate the model, build the chart, and locate the well for one
/// localizer chart (u, v).
pub fn prepare(cfg: &RunConfig, uv: (f64, f64)) -> Result<Setup> {
    let mut model = cfg.build_model()?;
    model.u = uv.0;
    model.v = uv.1;
    model.validate(cfg.search_half_width, 21, cfg.seed)?;
    let chart = Arc::new(GaugeChart::new(Arc::new(model.clone())));
    let well = find_well(
        &model,
        &chart,
        SearchBox::centered(cfg.search_half_width),
        cfg.search_grid_n,
    )?;
    Ok(Setup { model, chart, well })
}

/// One direct-route cell: assemble at one or three grids, extract the
/// window spectrum by shift-invert Arnoldi, extrapolate.
pub fn direct_cell(cfg: &RunConfig, setup: &Setup, h_idx: usize) -> Result<DirectCell> {
    let h = cfg.h_list[h_idx];
    let n_mid = cfg.n_for(h_idx);
    let grids: Vec<usize> = if cfg.richardson {
        vec![
            ((n_mid as f64) / 1.5).round() as usize,
            n_mid,
            ((n_mid as f64) * 1.5).round() as usize,
        ]
    } else {
        vec![n_mid]
    };
    let (shift, radius, wide) = spectral_window(&setup.well, h, cfg.big_c, cfg.big_c_prime);
    let opts = DirectOpts {
        boundary_margin: cfg.boundary_margin,
        strict_resolution: false,
    };
    let mut per_grid: Vec<Vec<C64>> = Vec::new();
    let mut res_max = 0.0f64;
    let mut spacings: Vec<f64> = Vec::new();
    let mut guard_ok = true;
    let mut guard_worst = f64::INFINITY;
    for &n in &grids {
        let (grid, csr) = assemble_l(
            &setup.model,
            &setup.chart,
            Some(&setup.well),
            h,
            cfg.box_l,
            n,
            opts,
        )?;
        let si = shift_invert_spectrum(
            &csr,
            shift,
            ShiftInvertOpts {
                k: cfg.k,
                tol: 1e-8,
                radius: Some(wide),
                max_restarts: 5,
                seed: cfg.seed,
            },
        )?;
        let mut eigs: Vec<(C64, f64)> = si
            .eigenvalues
            .iter()
            .zip(&si.residuals)
            .filter(|(l, _)| (*l - shift).norm() <= radius)
            .map(|(l, r)| (*l, *r))
            .collect();
        eigs.sort_by(|a, b| {
            (a.0 - shift)
                .norm()
                .partial_cmp(&(b.0 - shift).norm())
                .unwrap()
        });
        let vals: Vec<C64> = eigs.iter().map(|e| e.0).collect();
        let (worst, ok) = numerical_range_guard(&setup.model, &setup.well, &grid, &vals);
        guard_ok &= ok;
        guard_worst = guard_worst.min(worst);
        res_max = res_max.max(eigs.iter().map(|e| e.1).fold(0.0f64, f64::max));
        per_grid.push(vals);
        spacings.push(grid.d);
    }

    // pair eigenvalues across grids and Richardson-extrapolate
    let (eigenvalues, disc_estimate) = if grids.len() == 3 {
        let ext_fine = extrapolate_pair(&per_grid[1], &per_grid[2], spacings[1], spacings[2]);
        let ext_coarse = extrapolate_pair(&per_grid[0], &per_grid[1], spacings[0], spacings[1]);
        let m = match_spectra(&ext_fine, &ext_coarse);
        (ext_fine, Some(m.max_err))
    } else {
        (per_grid.swap_remove(0), None)
    };

    Ok(DirectCell {
        eigenvalues,
        residual_max: res_max,
        grids,
        disc_estimate,
        guard_ok,
        guard_worst,
    })
}

fn extrapolate_pair(fine: &[C64], coarse: &[C64], d_fine: f64, d_coarse: f64) -> Vec<C64> {
    let m = match_spectra(fine, coarse);
    let r = d_coarse / d_fine;
    let mut out = Vec::with_capacity(m.pairs.len());
    for &(i, j, _) in &m.pairs {
        out.push(richardson(fine[i], coarse[j], r, 2.0));
    }
    out
}

/// One effective-route cell: build the symbol (with its μ₁ cache), assemble
/// the grid Weyl operator, and extract the disc spectrum.
pub fn effective_cell(cfg: &RunConfig, setup: &Setup, h: f64) -> Result<EffectiveCell> {
    let sym = EffectiveSymbol::build(
        setup.chart.clone(),
        &setup.well,
        h,
        EffOpts {
            big_c: cfg.big_c,
            z: None,
            n_fiber: cfg.n_fiber,
            cache_n: 33,
            plateau: true,
        },
    )?;
    let l = sym.suggested_box();
    let op = assemble_peff(&sym, cfg.m_grid, l)?;
    let spec = eff_spectrum(&op, &setup.well, cfg.big_c)?;
    let c0_empirical = if cfg.probes && !spec.result.eigenvalues.is_empty() {
        Some(resolvent_constant_probe(
            &op,
            &spec.result.eigenvalues,
            cfg.kappa,
        )?)
    } else {
        None
    };
    Ok(EffectiveCell {
        eigenvalues: spec.result.eigenvalues.clone(),
        residual_max: spec
            .result
            .residuals
            .iter()
            .cloned()
            .fold(0.0f64, f64::max),
        gap_over_h: spec.gap_over_h,
        boundary_mass: spec.boundary_mass,
        m: cfg.m_grid,
        box_l: l,
        c0_empirical,
    })
}

/// Quadratic-model eigenvalues in the ν (effective) normalization:
/// `μ₀ + (2n-1) c₀ h` inside the studied disc.
pub fn quadratic_cell(setup: &Setup, h: f64, big_c: f64) -> Result<Vec<C64>> {
    let q = ComplexQuadratic::from_half_hessian_xi_x(setup.well.hess_p_x)?;
    let c0 = q.c0()?;
    let n_max = ((big_c / c0.norm() + 1.0) / 2.0).floor().max(1.0) as usize;
    Ok(q
        .spectrum(n_max, h)?
        .into_iter()
        .map(|s| setup.well.mu0 + s)
        .collect())
}

/// Least squares of log err against log h.
pub fn order_fit(points: &[(f64, f64)]) -> OrderFit {
    let kept: Vec<(f64, f64)> = points.iter().filter(|p| p.1 > 0.0).copied().collect();
    let dropped = points.len() - kept.len();
    if kept.len() < 2 {
        return OrderFit {
            slope: f64::NAN,
            intercept: f64::NAN,
            r2: f64::NAN,
            points: kept,
            dropped,
        };
    }
    let xs: Vec<f64> = kept.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept, r2) = linear_fit(&xs, &ys);
    OrderFit {
        slope,
        intercept,
        r2,
        points: kept,
        dropped,
    }
}

/// Joint fit of `(λ_j(h) - μ₀ h)/h² ≈ (2j-1) c₀ + c₁` over all (j, h).
///
/// Returns the plain two-parameter fit and an h-corrected four-parameter
/// fit `(2j-1)(c₀ + h d₀) + (c₁ + h d₁)` whose intercepts estimate the
/// h → 0 limit; the o(h²) remainder otherwise leaks into c₀ at first order.
pub fn fine_structure_fit(data: &[(f64, Vec<C64>)], mu0: C64) -> Option<FineStructure> {
    let mut rows: Vec<([f64; 4], C64)> = Vec::new();
    let mut distinct_j = std::collections::BTreeSet::new();
    let mut distinct_h = std::collections::BTreeSet::new();
    for (h, lambdas) in data {
        for (idx, lam) in lambdas.iter().enumerate() {
            let j = idx + 1;
            let y = (lam - mu0 * *h) / (h * h);
            let tj = (2 * j - 1) as f64;
            rows.push(([tj, 1.0, h * tj, *h], y));
            distinct_j.insert(j);
            distinct_h.insert((h * 1e12).round() as i64);
        }
    }
    if rows.is_empty() {
        return None;
    }
    let c0_identifiable = distinct_j.len() >= 2;
    let extended_ok = c0_identifiable && distinct_h.len() >= 2 && rows.len() >= 5;

    // plain 2-parameter fit
    let (c0_raw, c1_raw) = lsq_real_design(&rows, 2, c0_identifiable);
    // extended 4-parameter fit
    let (c0, c1) = if extended_ok {
        lsq_real_design(&rows, 4, true)
    } else {
        (c0_raw, c1_raw)
    };

    // residuals of the plain model
    let mut max_residual = 0.0f64;
    for (phi, y) in &rows {
        let pred = c0_raw.unwrap_or(C64::new(0.0, 0.0)) * phi[0] + c1_raw * phi[1];
        max_residual = max_residual.max((y - pred).norm());
    }
    Some(FineStructure {
        c0,
        c1,
        c0_raw,
        c1_raw,
        max_residual,
        n_points: rows.len(),
    })
}

/// Solve the complex least squares with a real design matrix of `p` columns
/// (subset of [2j-1, 1, h(2j-1), h]); when c0 is not identifiable (single
/// j), fit the intercept alone.
fn lsq_real_design(rows: &[([f64; 4], C64)], p: usize, with_c0: bool) -> (Option<C64>, C64) {
    let cols: Vec<usize> = if with_c0 {
        (0..p).collect()
    } else {
        vec![1] // intercept only
    };
    let np = cols.len();
    let mut g = vec![vec![0.0f64; np]; np];
    let mut b = vec![C64::new(0.0, 0.0); np];
    for (phi, y) in rows {
        for (a, &ca) in cols.iter().enumerate() {
            for (c, &cc) in cols.iter().enumerate() {
                g[a][c] += phi[ca] * phi[cc];
            }
            b[a] += phi[ca] * y;
        }
    }
    // Gaussian elimination with partial pivoting (real matrix, complex rhs)
    for k in 0..np {
        let mut piv = k;
        for r in k + 1..np {
            if g[r][k].abs() > g[piv][k].abs() {
                piv = r;
            }
        }
        g.swap(k, piv);
        b.swap(k, piv);
        let d = g[k][k];
        for r in k + 1..np {
            let f = g[r][k] / d;
            for c in k..np {
                g[r][c] -= f * g[k][c];
            }
            b[r] = b[r] - f * b[k];
        }
    }
    let mut x = vec![C64::new(0.0, 0.0); np];
    for k in (0..np).rev() {
        let mut acc = b[k];
        for c in k + 1..np {
            acc -= g[k][c] * x[c];
        }
        x[k] = acc / g[k][k];
    }
    if with_c0 {
        (Some(x[0]), x[1])
    } else {
        (None, x[0])
    }
}

/// Run the full sweep for one localizer chart.
pub fn run_sweep(cfg: &RunConfig, uv: (f64, f64)) -> Result<SweepReport> {
    cfg.validate(true)?;
    let setup = prepare(cfg, uv)?;
    let mut cells: Vec<HCell> = Vec::new();
    for (h_idx, &h) in cfg.h_list.iter().enumerate() {
        let mut cell = HCell {
            h,
            direct: None,
            effective: None,
            quadratic: None,
            matching: None,
            errors: vec![],
        };
        if cfg.routes.contains(&RouteSel::Direct) {
            match direct_cell(cfg, &setup, h_idx) {
                Ok(d) => cell.direct = Some(d),
                Err(e) => cell.errors.push(format!("direct: {e}")),
            }
        }
        if cfg.routes.contains(&RouteSel::Effective) {
            match effective_cell(cfg, &setup, h) {
                Ok(e) => cell.effective = Some(e),
                Err(e) => cell.errors.push(format!("effective: {e}")),
            }
        }
        if cfg.routes.contains(&RouteSel::Quadratic) {
            match quadratic_cell(&setup, h, cfg.big_c) {
                Ok(q) => cell.quadratic = Some(q),
                Err(e) => cell.errors.push(format!("quadratic: {e}")),
            }
        }
        if let (Some(d), Some(e)) = (&cell.direct, &cell.effective) {
            let scaled: Vec<C64> = e.eigenvalues.iter().map(|nu| nu * h).collect();
            cell.matching = Some(match_spectra(&d.eigenvalues, &scaled));
        }
        cells.push(cell);
    }

    // fits over the sweep
    let match_points: Vec<(f64, f64)> = cells
        .iter()
        .filter_map(|c| c.matching.as_ref().map(|m| (c.h, m.max_err)))
        .collect();
    let order_direct_vs_effective = if match_points.len() >= 3 {
        Some(order_fit(&match_points))
    } else {
        None
    };

    let direct_data: Vec<(f64, Vec<C64>)> = cells
        .iter()
        .filter_map(|c| c.direct.as_ref().map(|d| (c.h, d.eigenvalues.clone())))
        .collect();
    let fine_direct = if direct_data.len() >= 3 {
        fine_structure_fit(&direct_data, setup.well.mu0)
    } else {
        None
    };
    let eff_data: Vec<(f64, Vec<C64>)> = cells
        .iter()
        .filter_map(|c| {
            c.effective.as_ref().map(|e| {
                (
                    c.h,
                    e.eigenvalues.iter().map(|nu| nu * c.h).collect::<Vec<C64>>(),
                )
            })
        })
        .collect();
    let fine_effective = if eff_data.len() >= 3 {
        fine_structure_fit(&eff_data, setup.well.mu0)
    } else {
        None
    };

    // hypothesis probes
    let gap_over_h_min = cells
        .iter()
        .filter_map(|c| c.effective.as_ref())
        .map(|e| e.gap_over_h)
        .filter(|g| g.is_finite())
        .fold(f64::INFINITY, f64::min);
    let c0_empirical_max = cells
        .iter()
        .filter_map(|c| c.effective.as_ref().and_then(|e| e.c0_empirical))
        .fold(f64::NAN, f64::max);

    // route consistency: effective vs quadratic gap at the smallest h
    let route_gap_ratio = cells.last().and_then(|c| {
        let e = c.effective.as_ref()?;
        let q = ComplexQuadratic::from_half_hessian_xi_x(setup.well.hess_p_x).ok()?;
        let c0 = q.c0().ok()?;
        if e.gap_over_h.is_finite() {
            Some(e.gap_over_h / (2.0 * c0.norm()))
        } else {
            None
        }
    });

    let incomplete = cells.iter().any(|c| !c.errors.is_empty());
    Ok(SweepReport {
        model: setup.model.name.clone(),
        u: uv.0,
        v: uv.1,
        seed: cfg.seed,
        big_c: cfg.big_c,
        big_c_prime: cfg.big_c_prime,
        kappa: cfg.kappa,
        well: setup.well.clone(),
        cells,
        order_direct_vs_effective,
        fine_direct,
        fine_effective,
        gap_over_h_min,
        c0_empirical_max,
        route_gap_ratio,
        incomplete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_fit_exact_powers() {
        let pts: Vec<(f64, f64)> = [0.1, 0.07, 0.05, 0.035]
            .iter()
            .map(|&h| (h, h.powf(2.5)))
            .collect();
        let fit = order_fit(&pts);
        assert!((fit.slope - 2.5).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        // (h, 3h²): slope 2, intercept log 3
        let pts: Vec<(f64, f64)> = [0.1, 0.07, 0.05]
            .iter()
            .map(|&h| (h, 3.0 * h * h))
            .collect();
        let fit = order_fit(&pts);
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 3.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn order_fit_drops_zeros() {
        let fit = order_fit(&[(0.1, 1e-3), (0.05, 0.0), (0.02, 1e-5)]);
        assert_eq!(fit.dropped, 1);
        assert!(fit.slope.is_finite());
    }

    #[test]
    fn fine_structure_exact_recovery() {
        // synthetic λ_j = μ₀ h + ((2j-1)(1+2i) + 0.3) h²
        let mu0 = C64::new(1.0, 0.0);
        let c0 = C64::new(1.0, 2.0);
        let c1 = C64::new(0.3, 0.0);
        let data: Vec<(f64, Vec<C64>)> = [0.1, 0.07, 0.05]
            .iter()
            .map(|&h| {
                let lams: Vec<C64> = (1..=3)
                    .map(|j| mu0 * h + ((2 * j - 1) as f64 * c0 + c1) * h * h)
                    .collect();
                (h, lams)
            })
            .collect();
        let fit = fine_structure_fit(&data, mu0).unwrap();
        assert!((fit.c0_raw.unwrap() - c0).norm() < 1e-12);
        assert!((fit.c1_raw - c1).norm() < 1e-12);
        assert!((fit.c0.unwrap() - c0).norm() < 1e-10);
        assert!((fit.c1 - c1).norm() < 1e-10);
        assert!(fit.max_residual < 1e-12);
    }

    #[test]
    fn fine_structure_extended_removes_h_drift() {
        // λ_j = μ₀h + ((2j-1) c₀ + c₁) h² + (2j-1) d₀ h³: the raw fit sees an
        // O(h) bias on c₀, the extended fit recovers it to rounding
        let mu0 = C64::new(1.0, 0.0);
        let c0 = C64::new(0.0, 1.0);
        let c1 = C64::new(0.1, -0.2);
        let d0 = C64::new(0.8, 0.5);
        let data: Vec<(f64, Vec<C64>)> = [0.1, 0.07, 0.05, 0.035]
            .iter()
            .map(|&h| {
                let lams: Vec<C64> = (1..=3)
                    .map(|j| {
                        let tj = (2 * j - 1) as f64;
                        mu0 * h + (tj * c0 + c1) * h * h + tj * d0 * h * h * h
                    })
                    .collect();
                (h, lams)
            })
            .collect();
        let fit = fine_structure_fit(&data, mu0).unwrap();
        assert!((fit.c0.unwrap() - c0).norm() < 1e-10, "extended fit c0 = {:?}", fit.c0);
        assert!(
            (fit.c0_raw.unwrap() - c0).norm() > 1e-3,
            "raw fit should show the drift"
        );
    }

    #[test]
    fn fine_structure_single_j_gives_no_c0() {
        let mu0 = C64::new(0.5, 0.0);
        let data: Vec<(f64, Vec<C64>)> = [0.1, 0.05, 0.02]
            .iter()
            .map(|&h| (h, vec![mu0 * h + C64::new(0.2, 0.0) * h * h]))
            .collect();
        let fit = fine_structure_fit(&data, mu0).unwrap();
        assert!(fit.c0_raw.is_none());
        assert!((fit.c1_raw - C64::new(0.2, 0.0)).norm() < 1e-12);
    }
}
