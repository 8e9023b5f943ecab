//! Complex non-Hermitian eigenvalue extraction with residual certification.
//!
//! Small problems go through a dense eigendecomposition; large sparse ones
//! through shift-invert Arnoldi backed by one sparse complex LU
//! factorization. Every reported eigenvalue carries an explicit residual
//! `‖(M - λ)v‖/‖v‖` computed on the original matrix, never on the
//! transformed one.

use crate::{Error, Result, C64};
use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat};
use rand::distr::{Distribution, StandardUniform};
use rand::SeedableRng;
use serde::Serialize;

/// Which route produced a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Direct,
    Effective,
    Quadratic,
}

/// Eigenvalues with residual certificates and multiplicity clustering.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<C64>,
    pub residuals: Vec<f64>,
    pub cluster_ids: Vec<usize>,
    pub route: Route,
    pub iterations: usize,
    pub subspace: usize,
    /// False when the iterative path stopped with fewer certified values
    /// than requested (partial result).
    pub complete: bool,
}

impl SpectrumResult {
    /// Clusters within `radius` get a shared id; call after sorting.
    pub fn assign_clusters(&mut self, radius: f64) {
        let n = self.eigenvalues.len();
        let mut ids = vec![usize::MAX; n];
        let mut next = 0usize;
        for i in 0..n {
            if ids[i] != usize::MAX {
                continue;
            }
            ids[i] = next;
            for j in i + 1..n {
                if (self.eigenvalues[i] - self.eigenvalues[j]).norm() <= radius {
                    ids[j] = next;
                }
            }
            next += 1;
        }
        self.cluster_ids = ids;
    }

    /// Largest cluster size (1 everywhere means all simple).
    pub fn max_cluster_size(&self) -> usize {
        let mut counts = std::collections::HashMap::new();
        for id in &self.cluster_ids {
            *counts.entry(*id).or_insert(0usize) += 1;
        }
        counts.values().copied().max().unwrap_or(0)
    }
}

/// Minimal CSR storage for the sparse routes: assembly, matvec, export.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<C64>,
}

impl Csr {
    /// From unsorted triplets with duplicate accumulation.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, C64)]) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut indices = vec![0usize; triplets.len()];
        let mut values = vec![C64::new(0.0, 0.0); triplets.len()];
        let mut cursor = counts.clone();
        for &(r, c, v) in triplets {
            let k = cursor[r];
            indices[k] = c;
            values[k] = v;
            cursor[r] += 1;
        }
        // sort each row, merge duplicates
        let mut indptr = vec![0usize; n + 1];
        let mut out_idx = Vec::with_capacity(triplets.len());
        let mut out_val = Vec::with_capacity(triplets.len());
        for r in 0..n {
            let lo = counts[r];
            let hi = counts[r + 1];
            let mut row: Vec<(usize, C64)> = (lo..hi).map(|k| (indices[k], values[k])).collect();
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    let t = out_val.last_mut().unwrap();
                    *t += v;
                } else {
                    out_idx.push(c);
                    out_val.push(v);
                    last = Some(c);
                }
            }
            indptr[r + 1] = out_idx.len();
        }
        Csr {
            n,
            indptr,
            indices: out_idx,
            values: out_val,
        }
    }

    pub fn matvec(&self, v: &[C64], out: &mut [C64]) {
        for r in 0..self.n {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * v[self.indices[k]];
            }
            out[r] = acc;
        }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Residual ‖Mv - λv‖ / ‖v‖.
    pub fn residual(&self, v: &[C64], lambda: C64) -> f64 {
        let mut mv = vec![C64::new(0.0, 0.0); self.n];
        self.matvec(v, &mut mv);
        let num: f64 = mv
            .iter()
            .zip(v)
            .map(|(a, b)| (a - lambda * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let den: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        num / den
    }

    /// Coordinate-triplet text export: `row col re im` per line.
    pub fn export_triplets<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        for r in 0..self.n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                writeln!(
                    w,
                    "{} {} {:.17e} {:.17e}",
                    r, self.indices[k], self.values[k].re, self.values[k].im
                )?;
            }
        }
        Ok(())
    }

    /// Dense copy (small matrices / oracle comparisons).
    pub fn to_dense(&self) -> Mat<c64> {
        let mut m = Mat::<c64>::zeros(self.n, self.n);
        for r in 0..self.n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                m[(r, self.indices[k])] = self.values[k];
            }
        }
        m
    }
}

/// Full eigendecomposition with residuals recovered from the eigenvectors.
pub fn dense_spectrum(m: faer::MatRef<'_, c64>, route: Route) -> Result<SpectrumResult> {
    let n = m.nrows();
    assert!(n <= 4096, "dense path capped at 4096, got {n}");
    let evd = m
        .eigen()
        .map_err(|e| Error::Eigensolve(format!("dense eigendecomposition failed: {e:?}")))?;
    let lam = evd.S();
    let u = evd.U();
    let mut eigenvalues = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    for k in 0..n {
        let l = lam[k];
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                acc += m[(i, j)] * u[(j, k)];
            }
            num += (acc - l * u[(i, k)]).norm_sqr();
            den += u[(i, k)].norm_sqr();
        }
        eigenvalues.push(l);
        residuals.push((num / den).sqrt());
    }
    let max_res = residuals.iter().cloned().fold(0.0f64, f64::max);
    let mut result = SpectrumResult {
        eigenvalues,
        residuals,
        cluster_ids: vec![],
        route,
        iterations: 1,
        complete: true,
        subspace: n,
    };
    result.assign_clusters(1e3 * max_res.max(1e-15));
    Ok(result)
}

/// Dense spectrum filtered to the disc `|λ - center| <= radius`, sorted by
/// distance from the center.
pub fn dense_spectrum_in_disc(
    m: faer::MatRef<'_, c64>,
    route: Route,
    center: C64,
    radius: f64,
) -> Result<SpectrumResult> {
    let full = dense_spectrum(m, route)?;
    let mut picked: Vec<(C64, f64)> = full
        .eigenvalues
        .iter()
        .zip(&full.residuals)
        .filter(|(l, _)| (*l - center).norm() <= radius)
        .map(|(l, r)| (*l, *r))
        .collect();
    picked.sort_by(|a, b| {
        (a.0 - center)
            .norm()
            .partial_cmp(&(b.0 - center).norm())
            .unwrap()
    });
    let max_res = picked.iter().map(|p| p.1).fold(0.0f64, f64::max);
    let mut result = SpectrumResult {
        eigenvalues: picked.iter().map(|p| p.0).collect(),
        residuals: picked.iter().map(|p| p.1).collect(),
        cluster_ids: vec![],
        route,
        iterations: 1,
        complete: true,
        subspace: m.nrows(),
    };
    result.assign_clusters(1e3 * max_res.max(1e-15));
    Ok(result)
}

#[derive(Debug, Clone, Copy)]
pub struct ShiftInvertOpts {
    /// Number of eigenvalues wanted near the shift.
    pub k: usize,
    /// Residual certification tolerance on the original matrix.
    pub tol: f64,
    /// Restrict certification to |λ - shift| <= radius when set.
    pub radius: Option<f64>,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for ShiftInvertOpts {
    fn default() -> Self {
        Self {
            k: 6,
            tol: 1e-8,
            radius: None,
            max_restarts: 5,
            seed: 42,
        }
    }
}

/// Shift-invert Arnoldi: one sparse complex LU of (M - σ), Krylov iteration
/// on its inverse, Ritz values mapped back by λ = σ + 1/θ and certified by
/// explicit residuals on M.
pub fn shift_invert_spectrum(
    csr: &Csr,
    shift: C64,
    opts: ShiftInvertOpts,
) -> Result<SpectrumResult> {
    let n = csr.n;
    let mut shift = shift;
    let mut lu = None;
    let mut attempts = 0usize;
    // re-shift slightly on singular pivots
    while lu.is_none() {
        let mut triplets: Vec<Triplet<usize, usize, c64>> = Vec::with_capacity(csr.nnz() + n);
        for r in 0..n {
            let mut has_diag = false;
            for k in csr.indptr[r]..csr.indptr[r + 1] {
                let c = csr.indices[k];
                let mut v = csr.values[k];
                if c == r {
                    v -= shift;
                    has_diag = true;
                }
                triplets.push(Triplet::new(r, c, v));
            }
            if !has_diag {
                triplets.push(Triplet::new(r, r, -shift));
            }
        }
        let sp = SparseColMat::<usize, c64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::Eigensolve(format!("sparse assembly failed: {e:?}")))?;
        match sp.sp_lu() {
            Ok(f) => lu = Some(f),
            Err(e) => {
                attempts += 1;
                if attempts > 3 {
                    return Err(Error::Eigensolve(format!(
                        "sparse LU failed after {attempts} shift perturbations: {e:?}"
                    )));
                }
                let nudge = shift.norm().max(1e-6) * 1e-6;
                shift += C64::new(0.0, nudge);
            }
        }
    }
    let lu = lu.unwrap();
    let apply = |v: &[C64]| -> Vec<C64> {
        let mut rhs = Mat::<c64>::zeros(n, 1);
        for i in 0..n {
            rhs[(i, 0)] = v[i];
        }
        let sol = lu.solve(&rhs);
        (0..n).map(|i| sol[(i, 0)]).collect()
    };

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    let start: Vec<C64> = (0..n)
        .map(|_| {
            let re: f64 = StandardUniform.sample(&mut rng);
            let im: f64 = StandardUniform.sample(&mut rng);
            C64::new(re - 0.5, im - 0.5)
        })
        .collect();

    let mut m_sub = (4 * opts.k + 20).min(n);
    let mut iterations = 0usize;
    let mut prev_count: Option<usize> = None;
    for restart in 0..=opts.max_restarts {
        // Arnoldi with modified Gram-Schmidt and one reorthogonalization pass
        let mut v: Vec<Vec<C64>> = Vec::with_capacity(m_sub + 1);
        let mut h = vec![vec![C64::new(0.0, 0.0); m_sub]; m_sub + 1];
        let nrm = |x: &[C64]| x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let mut v0 = start.clone();
        let n0 = nrm(&v0);
        v0.iter_mut().for_each(|c| *c /= n0);
        v.push(v0);
        let mut actual_m = m_sub;
        for j in 0..m_sub {
            iterations += 1;
            let mut w = apply(&v[j]);
            for _pass in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let hij: C64 = w.iter().zip(vi).map(|(a, b)| a * b.conj()).sum();
                    if hij.norm() == 0.0 {
                        continue;
                    }
                    for (wc, vc) in w.iter_mut().zip(vi) {
                        *wc -= hij * vc;
                    }
                    h[i][j] += hij;
                }
            }
            let beta = nrm(&w);
            h[j + 1][j] = C64::new(beta, 0.0);
            if beta < 1e-14 {
                actual_m = j + 1;
                break;
            }
            w.iter_mut().for_each(|c| *c /= beta);
            v.push(w);
        }

        // Ritz pairs of the projected matrix
        let hm = Mat::<c64>::from_fn(actual_m, actual_m, |i, j| h[i][j]);
        let evd = hm
            .eigen()
            .map_err(|e| Error::Eigensolve(format!("projected eigensolve failed: {e:?}")))?;
        let theta = evd.S();
        let y = evd.U();
        let mut certified: Vec<(C64, f64, f64)> = Vec::new(); // (λ, residual, |λ-shift|)
        for k in 0..actual_m {
            let th = theta[k];
            if th.norm() < 1e-300 {
                continue;
            }
            let lam = shift + C64::new(1.0, 0.0) / th;
            if let Some(radius) = opts.radius {
                if (lam - shift).norm() > radius {
                    continue;
                }
            }
            // Ritz vector in the original space
            let mut vec = vec![C64::new(0.0, 0.0); n];
            for (j, vj) in v.iter().take(actual_m).enumerate() {
                let c = y[(j, k)];
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                for (o, vc) in vec.iter_mut().zip(vj) {
                    *o += c * vc;
                }
            }
            let res = csr.residual(&vec, lam);
            if res <= opts.tol {
                certified.push((lam, res, (lam - shift).norm()));
            }
        }
        certified.sort_by(|a, b| a.2.partial_cmp(&b.2).unwrap());
        certified.dedup_by(|a, b| (a.0 - b.0).norm() < 1e-12 * (1.0 + a.0.norm()));

        let stagnated = prev_count == Some(certified.len());
        prev_count = Some(certified.len());
        if certified.len() >= opts.k
            || restart == opts.max_restarts
            || actual_m < m_sub
            || stagnated
        {
            // fewer than k after all restarts: partial result, flagged
            let take = certified.len().min(opts.k.max(1));
            let kept = &certified[..take];
            let max_res = kept.iter().map(|c| c.1).fold(0.0f64, f64::max);
            let mut result = SpectrumResult {
                eigenvalues: kept.iter().map(|c| c.0).collect(),
                residuals: kept.iter().map(|c| c.1).collect(),
                cluster_ids: vec![],
                route: Route::Direct,
                iterations,
                subspace: actual_m,
                complete: certified.len() >= opts.k,
            };
            result.assign_clusters(1e3 * max_res.max(1e-15));
            return Ok(result);
        }
        m_sub = (m_sub + 20).min(n);
    }
    unreachable!()
}

/// Optimal matching between two eigenvalue lists by total |λ_a - λ_b|.
#[derive(Debug, Clone, Serialize)]
pub struct MatchReport {
    /// (index in a, index in b, distance)
    pub pairs: Vec<(usize, usize, f64)>,
    pub unmatched_a: Vec<usize>,
    pub unmatched_b: Vec<usize>,
    pub max_err: f64,
    pub mean_err: f64,
    /// Set when a second matching comes within 10% of the optimal cost.
    pub ambiguous: bool,
}

/// Exhaustive optimal bipartite matching (list sizes here are tiny; the
/// enumeration doubles as a second-best probe for the ambiguity flag).
pub fn match_spectra(a: &[C64], b: &[C64]) -> MatchReport {
    let (swap, small, large) = if a.len() <= b.len() {
        (false, a, b)
    } else {
        (true, b, a)
    };
    let k = small.len();
    let m = large.len();
    assert!(k <= 9, "matching supports up to 9 entries, got {k}");
    if k == 0 {
        return MatchReport {
            pairs: vec![],
            unmatched_a: if swap { (0..m).collect() } else { vec![] },
            unmatched_b: if swap { vec![] } else { (0..m).collect() },
            max_err: 0.0,
            mean_err: 0.0,
            ambiguous: false,
        };
    }
    let cost = |i: usize, j: usize| (small[i] - large[j]).norm();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut second = f64::INFINITY;
    let mut assignment = vec![usize::MAX; k];
    let mut used = vec![false; m];
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        i: usize,
        k: usize,
        m: usize,
        acc: f64,
        cost: &dyn Fn(usize, usize) -> f64,
        assignment: &mut Vec<usize>,
        used: &mut Vec<bool>,
        best: &mut Option<(f64, Vec<usize>)>,
        second: &mut f64,
    ) {
        if acc >= *second {
            return;
        }
        if i == k {
            match best {
                Some((bcost, bass)) => {
                    if acc < *bcost {
                        *second = *bcost;
                        *bass = assignment.clone();
                        *bcost = acc;
                    } else if (acc - *bcost) > 1e-15 * (1.0 + acc.abs()) {
                        *second = (*second).min(acc);
                    }
                }
                None => *best = Some((acc, assignment.clone())),
            }
            return;
        }
        for j in 0..m {
            if used[j] {
                continue;
            }
            used[j] = true;
            assignment[i] = j;
            recurse(i + 1, k, m, acc + cost(i, j), cost, assignment, used, best, second);
            used[j] = false;
        }
        assignment[i] = usize::MAX;
    }
    recurse(
        0,
        k,
        m,
        0.0,
        &cost,
        &mut assignment,
        &mut used,
        &mut best,
        &mut second,
    );
    let (total, assign) = best.unwrap();
    let ambiguous = second.is_finite() && second <= 1.10 * total && total > 0.0;
    let mut pairs: Vec<(usize, usize, f64)> = assign
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            let d = cost(i, j);
            if swap {
                (j, i, d)
            } else {
                (i, j, d)
            }
        })
        .collect();
    pairs.sort_by_key(|p| p.0);
    let used_large: std::collections::HashSet<usize> = assign.iter().copied().collect();
    let unmatched_large: Vec<usize> = (0..m).filter(|j| !used_large.contains(j)).collect();
    let (unmatched_a, unmatched_b) = if swap {
        (unmatched_large, vec![])
    } else {
        (vec![], unmatched_large)
    };
    let max_err = pairs.iter().map(|p| p.2).fold(0.0f64, f64::max);
    let mean_err = if pairs.is_empty() {
        0.0
    } else {
        pairs.iter().map(|p| p.2).sum::<f64>() / pairs.len() as f64
    };
    MatchReport {
        pairs,
        unmatched_a,
        unmatched_b,
        max_err,
        mean_err,
        ambiguous,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_csr(values: &[C64]) -> Csr {
        let triplets: Vec<(usize, usize, C64)> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| (i, i, v))
            .collect();
        Csr::from_triplets(values.len(), &triplets)
    }

    #[test]
    fn dense_diag() {
        let m = Mat::<c64>::from_fn(3, 3, |i, j| {
            if i == j {
                c64::new((i + 1) as f64, 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        });
        let s = dense_spectrum(m.as_ref(), Route::Quadratic).unwrap();
        let mut eigs: Vec<f64> = s.eigenvalues.iter().map(|l| l.re).collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((eigs[0] - 1.0).abs() < 1e-14 && (eigs[2] - 3.0).abs() < 1e-14);
        assert!(s.residuals.iter().all(|r| *r < 1e-13));
    }

    #[test]
    fn dense_jordan_block_clusters() {
        // defective 2x2 Jordan block at 0: eigenvalue 0 twice, one cluster
        let mut m = Mat::<c64>::zeros(2, 2);
        m[(0, 1)] = c64::new(1.0, 0.0);
        let s = dense_spectrum(m.as_ref(), Route::Quadratic).unwrap();
        assert_eq!(s.eigenvalues.len(), 2);
        assert!(s.eigenvalues.iter().all(|l| l.norm() < 1e-7));
        assert_eq!(s.cluster_ids[0], s.cluster_ids[1], "defective pair must cluster");
    }

    #[test]
    fn shift_invert_diagonal() {
        let vals: Vec<C64> = (1..=40).map(|i| C64::new(0.1 * i as f64, 0.0)).collect();
        let csr = diag_csr(&vals);
        let opts = ShiftInvertOpts {
            k: 2,
            tol: 1e-10,
            ..Default::default()
        };
        let s = shift_invert_spectrum(&csr, C64::new(0.11, 0.0), opts).unwrap();
        let mut eigs: Vec<f64> = s.eigenvalues.iter().map(|l| l.re).collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((eigs[0] - 0.1).abs() < 1e-9 && (eigs[1] - 0.2).abs() < 1e-9);
    }

    #[test]
    fn shift_invert_matches_dense_on_random_sparse() {
        // pseudo-random sparse complex matrix, both paths agree near a shift
        let n = 100usize;
        let mut triplets = Vec::new();
        let mut state = 123456789u64;
        let mut rnd = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 33) as f64) / (u32::MAX as f64) - 0.5
        };
        for i in 0..n {
            triplets.push((i, i, C64::new(i as f64 * 0.05 + rnd() * 0.01, rnd() * 0.1)));
            let j = (i * 7 + 3) % n;
            if j != i {
                triplets.push((i, j, C64::new(0.05 * rnd(), 0.05 * rnd())));
            }
        }
        let csr = Csr::from_triplets(n, &triplets);
        let dense = csr.to_dense();
        let shift = C64::new(1.01, 0.0);
        let full = dense_spectrum(dense.as_ref(), Route::Direct).unwrap();
        let mut by_dist: Vec<C64> = full.eigenvalues.clone();
        by_dist.sort_by(|a, b| {
            (a - shift)
                .norm()
                .partial_cmp(&(b - shift).norm())
                .unwrap()
        });
        let opts = ShiftInvertOpts {
            k: 6,
            tol: 1e-9,
            ..Default::default()
        };
        let si = shift_invert_spectrum(&csr, shift, opts).unwrap();
        for lam in si.eigenvalues.iter().take(6) {
            let best = by_dist
                .iter()
                .take(10)
                .map(|l| (l - lam).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-9, "iterative eigenvalue {lam} missing from dense set");
        }
        assert!(si.residuals.iter().all(|r| *r <= 1e-9));
    }

    #[test]
    fn shift_invariance_of_window_content() {
        let vals: Vec<C64> = (1..=60)
            .map(|i| C64::new(0.05 * i as f64, 0.002 * (i % 7) as f64))
            .collect();
        let csr = diag_csr(&vals);
        let radius = 0.12;
        let center = C64::new(1.0, 0.0);
        let run = |shift: C64| {
            // k covers everything certifiable in the window from either shift
            let opts = ShiftInvertOpts {
                k: 8,
                tol: 1e-10,
                radius: Some(radius + (shift - center).norm()),
                ..Default::default()
            };
            let mut s = shift_invert_spectrum(&csr, shift, opts).unwrap();
            s.eigenvalues.retain(|l| (l - center).norm() <= radius);
            s.eigenvalues
                .sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
            s.eigenvalues
        };
        let s1 = run(center);
        let s2 = run(center + C64::new(0.3 * radius, 0.0));
        assert_eq!(s1.len(), s2.len());
        for (a, b) in s1.iter().zip(&s2) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn match_identical_and_shifted() {
        let a = vec![C64::new(1.0, 0.0), C64::new(3.0, 0.0)];
        let r = match_spectra(&a, &a);
        assert_eq!(r.pairs.len(), 2);
        assert_eq!(r.max_err, 0.0);
        let b = vec![C64::new(1.01, 0.0), C64::new(2.99, 0.0)];
        let r = match_spectra(&a, &b);
        assert_eq!(r.pairs[0].0, 0);
        assert_eq!(r.pairs[0].1, 0);
        assert!((r.max_err - 0.01) < 1e-12);
        assert!(!r.ambiguous);
    }

    #[test]
    fn match_flags_ambiguity() {
        let a = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let b = vec![C64::new(0.5, 0.0), C64::new(0.500001, 0.0)];
        let r = match_spectra(&a, &b);
        assert!(r.ambiguous, "near-degenerate matching must be flagged");
    }

    #[test]
    fn match_uneven_lists() {
        let a = vec![C64::new(1.0, 0.0)];
        let b = vec![C64::new(5.0, 0.0), C64::new(1.1, 0.0), C64::new(9.0, 0.0)];
        let r = match_spectra(&a, &b);
        assert_eq!(r.pairs.len(), 1);
        assert_eq!((r.pairs[0].0, r.pairs[0].1), (0, 1));
        assert_eq!(r.unmatched_b, vec![0, 2]);
    }

    #[test]
    fn csr_duplicate_accumulation() {
        let t = vec![
            (0, 0, C64::new(1.0, 0.0)),
            (0, 0, C64::new(2.0, 0.0)),
            (1, 0, C64::new(-1.0, 0.5)),
        ];
        let csr = Csr::from_triplets(2, &t);
        assert_eq!(csr.nnz(), 2);
        let d = csr.to_dense();
        assert!((d[(0, 0)] - c64::new(3.0, 0.0)).norm() < 1e-15);
        assert!((d[(1, 0)] - c64::new(-1.0, 0.5)).norm() < 1e-15);
    }
}
