//! Run configuration: flat sectioned key-value text with typed sections
//! `[model]`, `[sweep]`, `[numerics]`, `[output]`. Unknown sections or keys
//! are hard errors, so a typo never silently changes a run.

use crate::{Error, Result};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Built-in model key, or a label for expression models.
    pub model: String,
    /// Custom field expressions (set for expression models).
    pub b_expr: Option<String>,
    pub v_expr: Option<String>,
    pub b0: f64,
    /// Localizer charts to run; one sweep per (u, v) pair.
    pub uv: Vec<(f64, f64)>,
    pub h_list: Vec<f64>,
    pub routes: Vec<RouteSel>,
    /// Eigenvalues requested near the window per h.
    pub k: usize,
    pub big_c: f64,
    pub big_c_prime: f64,
    pub kappa: f64,
    /// Direct-route box half-width.
    pub box_l: f64,
    /// Direct grid override (empty = resolution rule d <= sqrt(h)/6).
    pub n_list: Vec<usize>,
    /// Effective-route grid size.
    pub m_grid: usize,
    /// Fiber truncation.
    pub n_fiber: usize,
    /// Well search half-width and scan resolution.
    pub search_half_width: f64,
    pub search_grid_n: usize,
    pub seed: u64,
    pub threads: usize,
    pub richardson: bool,
    /// Run the resolvent-constant probes.
    pub probes: bool,
    pub boundary_margin: f64,
    pub out_dir: Option<String>,
    pub write_csv: bool,
    pub write_json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteSel {
    Direct,
    Effective,
    Quadratic,
}

impl std::str::FromStr for RouteSel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "direct" => Ok(RouteSel::Direct),
            "effective" => Ok(RouteSel::Effective),
            "quadratic" => Ok(RouteSel::Quadratic),
            other => Err(Error::Config(format!(
                "unknown route '{other}' (want direct, effective, quadratic)"
            ))),
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: "radial_well".into(),
            b_expr: None,
            v_expr: None,
            b0: 1.0,
            uv: vec![],
            h_list: vec![0.1, 0.07, 0.05, 0.035, 0.025],
            routes: vec![RouteSel::Direct, RouteSel::Effective, RouteSel::Quadratic],
            k: 6,
            big_c: 6.0,
            big_c_prime: 12.0,
            kappa: 0.2,
            box_l: 3.5,
            n_list: vec![],
            m_grid: 256,
            n_fiber: 64,
            search_half_width: 3.0,
            search_grid_n: 61,
            seed: 42,
            threads: 0,
            richardson: true,
            probes: false,
            boundary_margin: 0.3,
            out_dir: None,
            write_csv: true,
            write_json: true,
        }
    }
}

impl RunConfig {
    /// Structural checks; `for_sweep` additionally requires enough h values
    /// for the order fits.
    pub fn validate(&self, for_sweep: bool) -> Result<()> {
        if self.h_list.is_empty() {
            return Err(Error::Config("empty h list".into()));
        }
        for w in self.h_list.windows(2) {
            if w[1] >= w[0] {
                return Err(Error::Config(format!(
                    "h list must be strictly decreasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if self.h_list.iter().any(|h| *h <= 0.0) {
            return Err(Error::Config("h values must be positive".into()));
        }
        if for_sweep && self.h_list.len() < 3 {
            return Err(Error::Config(format!(
                "order fits need at least 3 h values, got {}",
                self.h_list.len()
            )));
        }
        if !(0.0 < self.kappa && self.kappa < 0.5) {
            return Err(Error::Config(format!(
                "kappa must lie in (0, 1/2), got {}",
                self.kappa
            )));
        }
        if self.big_c <= 0.0 || self.big_c_prime <= self.big_c {
            return Err(Error::Config(format!(
                "need 0 < C < C', got C = {}, C' = {}",
                self.big_c, self.big_c_prime
            )));
        }
        if !self.n_list.is_empty() && self.n_list.len() != self.h_list.len() {
            return Err(Error::Config(format!(
                "n list length {} does not match h list length {}",
                self.n_list.len(),
                self.h_list.len()
            )));
        }
        if self.routes.is_empty() {
            return Err(Error::Config("no routes selected".into()));
        }
        Ok(())
    }

    /// Build the field model this config describes.
    pub fn build_model(&self) -> Result<crate::fields::FieldModel> {
        let mut model = match &self.b_expr {
            Some(b) => crate::registry::from_expressions(
                &self.model,
                b,
                self.v_expr.as_deref(),
                self.b0,
                1.0,
                0.0,
            )?,
            None => crate::registry::builtin(&self.model)?,
        };
        if let Some(&(u, v)) = self.uv.first() {
            model.u = u;
            model.v = v;
        }
        Ok(model)
    }

    /// All (u, v) charts to run (the model default when none are given).
    pub fn charts(&self, model: &crate::fields::FieldModel) -> Vec<(f64, f64)> {
        if self.uv.is_empty() {
            vec![(model.u, model.v)]
        } else {
            self.uv.clone()
        }
    }

    /// Direct-route grid for one h: the override list or the resolution rule
    /// d <= sqrt(h)/6.
    pub fn n_for(&self, h_index: usize) -> usize {
        if !self.n_list.is_empty() {
            return self.n_list[h_index];
        }
        let h = self.h_list[h_index];
        let d_max = h.sqrt() / 6.0;
        (2.0 * self.box_l / d_max).ceil() as usize
    }
}

/// Parse the sectioned key-value config format.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut sections: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim().to_string();
            if !["model", "sweep", "numerics", "output"].contains(&name.as_str()) {
                return Err(Error::Config(format!(
                    "line {}: unknown section [{name}]",
                    lineno + 1
                )));
            }
            current = Some(name.clone());
            sections.entry(name).or_default();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected key = value, got '{line}'",
                lineno + 1
            )));
        };
        let section = current.clone().ok_or_else(|| {
            Error::Config(format!("line {}: key outside any section", lineno + 1))
        })?;
        sections
            .get_mut(&section)
            .unwrap()
            .push((key.trim().to_string(), value.trim().trim_matches('"').to_string()));
    }

    for (section, pairs) in sections {
        for (key, value) in pairs {
            apply_key(&mut cfg, &section, &key, &value)?;
        }
    }
    Ok(cfg)
}

fn apply_key(cfg: &mut RunConfig, section: &str, key: &str, value: &str) -> Result<()> {
    let bad_key = || {
        Err(Error::Config(format!(
            "unknown key '{key}' in section [{section}]"
        )))
    };
    let parse_f64 = |v: &str| {
        v.parse::<f64>()
            .map_err(|_| Error::Config(format!("bad number '{v}' for key '{key}'")))
    };
    let parse_usize = |v: &str| {
        v.parse::<usize>()
            .map_err(|_| Error::Config(format!("bad integer '{v}' for key '{key}'")))
    };
    let parse_bool = |v: &str| match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("bad boolean '{v}' for key '{key}'"))),
    };
    match section {
        "model" => match key {
            "name" => cfg.model = value.to_string(),
            "B" => cfg.b_expr = Some(value.to_string()),
            "V" => cfg.v_expr = Some(value.to_string()),
            "b0" => cfg.b0 = parse_f64(value)?,
            "uv" => {
                let mut out = Vec::new();
                for pair in value.split(';') {
                    let nums: Vec<&str> = pair.split(',').map(|s| s.trim()).collect();
                    if nums.len() != 2 {
                        return Err(Error::Config(format!(
                            "bad uv pair '{pair}'; want 'u, v; u, v; ...'"
                        )));
                    }
                    out.push((parse_f64(nums[0])?, parse_f64(nums[1])?));
                }
                cfg.uv = out;
            }
            _ => return bad_key(),
        },
        "sweep" => match key {
            "h" => {
                cfg.h_list = value
                    .split(',')
                    .map(|s| parse_f64(s.trim()))
                    .collect::<Result<Vec<f64>>>()?;
            }
            "routes" => {
                cfg.routes = value
                    .split(',')
                    .map(|s| s.trim().parse())
                    .collect::<Result<Vec<RouteSel>>>()?;
            }
            "k" => cfg.k = parse_usize(value)?,
            _ => return bad_key(),
        },
        "numerics" => match key {
            "C" => cfg.big_c = parse_f64(value)?,
            "C_prime" => cfg.big_c_prime = parse_f64(value)?,
            "kappa" => cfg.kappa = parse_f64(value)?,
            "L" => cfg.box_l = parse_f64(value)?,
            "n" => {
                if value == "auto" {
                    cfg.n_list = vec![];
                } else {
                    cfg.n_list = value
                        .split(',')
                        .map(|s| parse_usize(s.trim()))
                        .collect::<Result<Vec<usize>>>()?;
                }
            }
            "M" => cfg.m_grid = parse_usize(value)?,
            "N" => cfg.n_fiber = parse_usize(value)?,
            "search_box" => cfg.search_half_width = parse_f64(value)?,
            "grid_n" => cfg.search_grid_n = parse_usize(value)?,
            "seed" => {
                cfg.seed = value
                    .parse::<u64>()
                    .map_err(|_| Error::Config(format!("bad seed '{value}'")))?;
            }
            "threads" => cfg.threads = parse_usize(value)?,
            "richardson" => cfg.richardson = parse_bool(value)?,
            "probes" => cfg.probes = parse_bool(value)?,
            "margin" => cfg.boundary_margin = parse_f64(value)?,
            _ => return bad_key(),
        },
        "output" => match key {
            "dir" => cfg.out_dir = Some(value.to_string()),
            "csv" => cfg.write_csv = parse_bool(value)?,
            "json" => cfg.write_json = parse_bool(value)?,
            _ => return bad_key(),
        },
        _ => unreachable!("sections validated during parsing"),
    }
    Ok(())
}

/// Helper shared by the CLI: parse `0.1,0.07,0.05` into an h list.
pub fn parse_h_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad h value '{t}'")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_full_config() {
        let text = r#"
# experiment
[model]
name = imaginary_well
uv = 1, 1

[sweep]
h = 0.1, 0.07, 0.05
routes = direct, effective

[numerics]
C = 5.0
C_prime = 10.0
kappa = 0.25
M = 128
seed = 7

[output]
dir = out
csv = false
"#;
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.model, "imaginary_well");
        assert_eq!(cfg.uv, vec![(1.0, 1.0)]);
        assert_eq!(cfg.h_list, vec![0.1, 0.07, 0.05]);
        assert_eq!(cfg.routes, vec![RouteSel::Direct, RouteSel::Effective]);
        assert_eq!(cfg.big_c, 5.0);
        assert_eq!(cfg.m_grid, 128);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.out_dir.as_deref(), Some("out"));
        assert!(!cfg.write_csv);
        cfg.validate(true).unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse_config("[model]\nnme = landau\n").is_err());
        assert!(parse_config("[models]\nname = landau\n").is_err());
        assert!(parse_config("name = landau\n").is_err());
    }

    #[test]
    fn validation_rules() {
        let mut cfg = RunConfig {
            h_list: vec![0.1, 0.1],
            ..Default::default()
        };
        assert!(cfg.validate(false).is_err());
        cfg.h_list = vec![0.1, 0.05];
        assert!(cfg.validate(false).is_ok());
        assert!(cfg.validate(true).is_err()); // < 3 values for a sweep
        cfg.h_list = vec![0.1, 0.05, 0.02];
        cfg.kappa = 0.7;
        assert!(cfg.validate(true).is_err());
        cfg.kappa = 0.2;
        assert!(cfg.validate(true).is_ok());
    }

    #[test]
    fn resolution_rule() {
        let cfg = RunConfig::default();
        // d = 2 L / (n + 1) <= sqrt(h)/6 must hold for the rule's n
        for (i, &h) in cfg.h_list.iter().enumerate() {
            let n = cfg.n_for(i);
            let d = 2.0 * cfg.box_l / (n + 1) as f64;
            assert!(d <= h.sqrt() / 6.0 + 1e-12, "h = {h}: d = {d}");
        }
    }

    #[test]
    fn expression_model_from_config() {
        let text = r#"
[model]
name = custom
B = 2 - exp(-(q1^2 + q2^2))
b0 = 1.0
"#;
        let cfg = parse_config(text).unwrap();
        let model = cfg.build_model().unwrap();
        assert!((model.b_field.eval(0.0, 0.0) - 1.0).abs() < 1e-14);
    }
}
