//! Sweep report: every number traceable to a route and an h, serialized as
//! UTF-8 JSON with sorted keys and one RFC-4180 CSV per route.

use crate::eigensolve::MatchReport;
use crate::fields::WellData;
use crate::{Result, C64};
use serde_json::{json, Map, Value};
use std::io::Write;

#[derive(Debug, Clone, serde::Serialize)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: Vec<(f64, f64)>,
    pub dropped: usize,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct FineStructure {
    /// h-corrected estimates (used by the asymptotic checks).
    pub c0: Option<C64>,
    pub c1: C64,
    /// Plain two-parameter fit.
    pub c0_raw: Option<C64>,
    pub c1_raw: C64,
    pub max_residual: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct DirectCell {
    /// Extrapolated eigenvalues in D(μ₀h, Ch²), sorted by distance from μ₀h.
    pub eigenvalues: Vec<C64>,
    pub residual_max: f64,
    pub grids: Vec<usize>,
    /// Difference between the two Richardson extrapolants (3-grid runs).
    pub disc_estimate: Option<f64>,
    pub guard_ok: bool,
    pub guard_worst: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct EffectiveCell {
    /// ν_j in D(μ₀, Ch), sorted by distance from μ₀.
    pub eigenvalues: Vec<C64>,
    pub residual_max: f64,
    pub gap_over_h: f64,
    pub boundary_mass: f64,
    pub m: usize,
    pub box_l: f64,
    /// Empirical resolvent constant C₀ (when probes are enabled).
    pub c0_empirical: Option<f64>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct HCell {
    pub h: f64,
    pub direct: Option<DirectCell>,
    pub effective: Option<EffectiveCell>,
    /// Quadratic-model ν values μ₀ + (2n-1)c₀h.
    pub quadratic: Option<Vec<C64>>,
    /// Direct λ against h·ν (effective).
    pub matching: Option<MatchReport>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SweepReport {
    pub model: String,
    pub u: f64,
    pub v: f64,
    pub seed: u64,
    pub big_c: f64,
    pub big_c_prime: f64,
    pub kappa: f64,
    pub well: WellData,
    pub cells: Vec<HCell>,
    pub order_direct_vs_effective: Option<OrderFit>,
    pub fine_direct: Option<FineStructure>,
    pub fine_effective: Option<FineStructure>,
    pub gap_over_h_min: f64,
    pub c0_empirical_max: f64,
    pub route_gap_ratio: Option<f64>,
    pub incomplete: bool,
}

fn c64_value(c: &C64) -> Value {
    json!({ "im": c.im, "re": c.re })
}

fn spectrum_value(eigs: &[C64]) -> Value {
    Value::Array(eigs.iter().map(c64_value).collect())
}

impl SweepReport {
    /// JSON with recursively sorted keys (serde_json maps are BTree-backed,
    /// so building through `Value` is enough for byte determinism).
    pub fn to_json(&self) -> Value {
        let mut root = Map::new();
        root.insert("model".into(), json!(self.model));
        root.insert("u".into(), json!(self.u));
        root.insert("v".into(), json!(self.v));
        root.insert("seed".into(), json!(self.seed));
        root.insert("C".into(), json!(self.big_c));
        root.insert("C_prime".into(), json!(self.big_c_prime));
        root.insert("kappa".into(), json!(self.kappa));
        root.insert(
            "well".into(),
            json!({
                "q0": self.well.q0,
                "x0": { "xi": self.well.x0.xi, "x": self.well.x0.x },
                "mu0": c64_value(&self.well.mu0),
                "c0": c64_value(&self.well.c0),
                "grad_p_norm": self.well.grad_p_norm,
                "min_f": self.well.min_f,
            }),
        );
        let cells: Vec<Value> = self
            .cells
            .iter()
            .map(|c| {
                let mut m = Map::new();
                m.insert("h".into(), json!(c.h));
                if let Some(d) = &c.direct {
                    m.insert(
                        "direct".into(),
                        json!({
                            "eigenvalues": spectrum_value(&d.eigenvalues),
                            "residual_max": d.residual_max,
                            "grids": d.grids,
                            "disc_estimate": d.disc_estimate,
                            "guard_ok": d.guard_ok,
                            "guard_worst": d.guard_worst,
                        }),
                    );
                }
                if let Some(e) = &c.effective {
                    m.insert(
                        "effective".into(),
                        json!({
                            "eigenvalues": spectrum_value(&e.eigenvalues),
                            "residual_max": e.residual_max,
                            "gap_over_h": e.gap_over_h,
                            "boundary_mass": e.boundary_mass,
                            "M": e.m,
                            "box_l": e.box_l,
                            "c0_empirical": e.c0_empirical,
                        }),
                    );
                }
                if let Some(q) = &c.quadratic {
                    m.insert("quadratic".into(), spectrum_value(q));
                }
                if let Some(mt) = &c.matching {
                    m.insert(
                        "matching".into(),
                        json!({
                            "pairs": mt.pairs,
                            "max_err": mt.max_err,
                            "mean_err": mt.mean_err,
                            "ambiguous": mt.ambiguous,
                            "unmatched_a": mt.unmatched_a,
                            "unmatched_b": mt.unmatched_b,
                        }),
                    );
                }
                if !c.errors.is_empty() {
                    m.insert("errors".into(), json!(c.errors));
                }
                Value::Object(m)
            })
            .collect();
        root.insert("cells".into(), Value::Array(cells));
        if let Some(f) = &self.order_direct_vs_effective {
            root.insert(
                "order_direct_vs_effective".into(),
                json!({
                    "slope": f.slope,
                    "intercept": f.intercept,
                    "r2": f.r2,
                    "points": f.points,
                    "dropped": f.dropped,
                }),
            );
        }
        for (key, fine) in [
            ("fine_direct", &self.fine_direct),
            ("fine_effective", &self.fine_effective),
        ] {
            if let Some(f) = fine {
                root.insert(
                    key.into(),
                    json!({
                        "c0": f.c0.as_ref().map(c64_value),
                        "c1": c64_value(&f.c1),
                        "c0_raw": f.c0_raw.as_ref().map(c64_value),
                        "c1_raw": c64_value(&f.c1_raw),
                        "max_residual": f.max_residual,
                        "n_points": f.n_points,
                    }),
                );
            }
        }
        root.insert("gap_over_h_min".into(), json!(self.gap_over_h_min));
        if self.c0_empirical_max.is_finite() {
            root.insert("c0_empirical_max".into(), json!(self.c0_empirical_max));
        }
        root.insert("route_gap_ratio".into(), json!(self.route_gap_ratio));
        root.insert("incomplete".into(), json!(self.incomplete));
        Value::Object(root)
    }

    /// One CSV per route with columns (h, j, re_val, im_val, residual),
    /// RFC-4180 (CRLF line endings).
    pub fn write_csv<W: Write>(&self, route: &str, mut w: W) -> Result<()> {
        write!(w, "h,j,re_val,im_val,residual\r\n")?;
        for cell in &self.cells {
            match route {
                "direct" => {
                    if let Some(d) = &cell.direct {
                        for (idx, lam) in d.eigenvalues.iter().enumerate() {
                            write!(
                                w,
                                "{},{},{:.17e},{:.17e},{:.3e}\r\n",
                                cell.h,
                                idx + 1,
                                lam.re,
                                lam.im,
                                d.residual_max
                            )?;
                        }
                    }
                }
                "effective" => {
                    if let Some(e) = &cell.effective {
                        for (idx, nu) in e.eigenvalues.iter().enumerate() {
                            write!(
                                w,
                                "{},{},{:.17e},{:.17e},{:.3e}\r\n",
                                cell.h,
                                idx + 1,
                                nu.re,
                                nu.im,
                                e.residual_max
                            )?;
                        }
                    }
                }
                "quadratic" => {
                    if let Some(q) = &cell.quadratic {
                        for (idx, nu) in q.iter().enumerate() {
                            write!(
                                w,
                                "{},{},{:.17e},{:.17e},0\r\n",
                                cell.h,
                                idx + 1,
                                nu.re,
                                nu.im
                            )?;
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Write the JSON report and per-route CSVs into a directory.
    pub fn write_outputs(&self, dir: &std::path::Path, csv: bool, json_out: bool) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        if json_out {
            let path = dir.join(format!("report_{}.json", sanitize(&self.model)));
            let mut f = std::fs::File::create(path)?;
            let text = serde_json::to_string_pretty(&self.to_json()).expect("json");
            f.write_all(text.as_bytes())?;
            f.write_all(b"\n")?;
        }
        if csv {
            for route in ["direct", "effective", "quadratic"] {
                let has = match route {
                    "direct" => self.cells.iter().any(|c| c.direct.is_some()),
                    "effective" => self.cells.iter().any(|c| c.effective.is_some()),
                    _ => self.cells.iter().any(|c| c.quadratic.is_some()),
                };
                if !has {
                    continue;
                }
                let path = dir.join(format!("{}_{}.csv", route, sanitize(&self.model)));
                let f = std::fs::File::create(path)?;
                self.write_csv(route, f)?;
            }
        }
        Ok(())
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect()
}
