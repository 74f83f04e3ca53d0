//! Small-τ behaviour of L_{0,G}(τ) for Neumann-based conditions: the boundary matrix B,
//! the projection Q₀ onto ker B, the Morse decomposition and the eigenvalue expansion
//! λ_j(τ) = τ·λ⁽¹⁾_j + τ²·λ⁽²⁾_j + o(τ²).

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{BoundaryKind, Model, PathPoint, Segment};
use crate::error::{MaslovError, Result};

/// |eig| ≤ KER_TOL_REL·‖B‖ counts as a zero eigenvalue of B.
pub const KER_TOL_REL: f64 = 1e-10;
/// The near-zero group counts as separated when its largest |μ| is below this fraction of the gap.
pub const SEPARATION_RATIO: f64 = 0.5;

/// B, Q₀ and the second-order form on ker B.
#[derive(Debug, Clone)]
pub struct BoundaryFormData {
    /// B_ij = ⟨Θ e_i, e_j⟩ on boundary-constant vectors.
    pub b: DMatrix<f64>,
    pub b_eigenvalues: Vec<f64>,
    /// Orthonormal basis of ker B (N×k).
    pub q0_basis: DMatrix<f64>,
    pub q0: DMatrix<f64>,
    pub v0: DMatrix<f64>,
    /// Q₀V(0)Q₀ restricted to ran Q₀ (k×k).
    pub qvq: DMatrix<f64>,
    pub qvq_eigenvalues: Vec<f64>,
    pub volume: f64,
    /// Zero tolerance used for the eigenvalues of B.
    pub b_tol: f64,
    /// Smallest |eigenvalue| of QVQ exceeds the tolerance (vacuous when ker B = 0).
    pub nondegenerate: bool,
    pub morse_minus_b: usize,
    pub morse_qvq: usize,
}

impl BoundaryFormData {
    /// Mor(−B) + Mor(Q₀V(0)Q₀), refused when the form on ker B is degenerate.
    pub fn expected_morse(&self) -> Result<usize> {
        if !self.nondegenerate {
            let min = self.qvq_eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
            return Err(MaslovError::DegenerateSecondOrderForm(min));
        }
        Ok(self.morse_minus_b + self.morse_qvq)
    }

    /// First-order targets eig(−B)/|Ω|, ascending.
    pub fn slope_targets(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.b_eigenvalues.iter().map(|&b| if b.abs() <= self.b_tol { 0.0 } else { -b / self.volume }).collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }
}

fn sorted_eigen(mut a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    if a.is_empty() {
        return (Vec::new(), a);
    }
    crate::linalg::symmetrize(&mut a);
    let eig = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(order.len(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

pub fn compute_boundary_form(model: &Model) -> Result<BoundaryFormData> {
    if model.kind() != BoundaryKind::NeumannBased {
        return Err(MaslovError::Input("B is defined for Neumann-based conditions only".into()));
    }
    let sm = &model.sm;
    let n = sm.n_sys;
    let theta = model.boundary_operator();
    let m = sm.num_boundary_dofs();
    let wt = DMatrix::from_fn(m, m, |p, q| sm.m_b[p] * theta[(p, q)]);
    let b = DMatrix::from_fn(n, n, |i, j| {
        let mut acc = 0.0;
        for p in (i..m).step_by(n) {
            for q in (j..m).step_by(n) {
                acc += wt[(p, q)];
            }
        }
        acc
    });
    let (b_eigenvalues, b_vecs) = sorted_eigen(b.clone());
    let scale = b_eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let tol = KER_TOL_REL * scale;
    let ker: Vec<usize> = (0..n).filter(|&k| b_eigenvalues[k].abs() <= tol).collect();
    let q0_basis = DMatrix::from_fn(n, ker.len(), |r, c| b_vecs[(r, ker[c])]);
    let q0 = &q0_basis * q0_basis.transpose();
    let v0 = model.potential.at_origin();
    let qvq = q0_basis.transpose() * &v0 * &q0_basis;
    let (qvq_eigenvalues, _) = sorted_eigen(qvq.clone());
    let vtol = KER_TOL_REL * v0.amax().max(1.0);
    let nondegenerate = qvq_eigenvalues.iter().all(|v| v.abs() > vtol);
    Ok(BoundaryFormData {
        morse_minus_b: b_eigenvalues.iter().filter(|&&v| v > tol).count(),
        morse_qvq: qvq_eigenvalues.iter().filter(|&&v| v < -vtol).count(),
        b,
        b_eigenvalues,
        q0_basis,
        q0,
        v0,
        qvq,
        qvq_eigenvalues,
        volume: model.grid().volume(),
        b_tol: tol,
        nondegenerate,
    })
}

/// L_{0,G}(τ): λ = 0, t = τ.
fn small_tau_point(tau: f64) -> PathPoint {
    PathPoint { s: 0.0, lambda: 0.0, t: tau, segment: Segment::Sigma1 }
}

/// Indices of the `count` eigenvalues of smallest magnitude, in ascending value order.
fn near_zero_group(values: &[f64], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].abs().total_cmp(&values[j].abs()));
    let mut group: Vec<usize> = idx.into_iter().take(count).collect();
    group.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    group
}

#[derive(Debug, Clone, Serialize)]
pub struct SmallTauRow {
    pub tau: f64,
    /// One of the three smallest τ, where the identity is asserted.
    pub checked: bool,
    pub morse: usize,
    pub near_zero: Vec<f64>,
    /// Largest |μ| in the near-zero group.
    pub group_max: f64,
    /// Smallest |μ| outside the group.
    pub gap: f64,
    pub separated: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SmallTauReport {
    pub morse_minus_b: usize,
    pub morse_qvq: usize,
    pub expected: usize,
    pub rows: Vec<SmallTauRow>,
    /// Largest τ of the list below which every τ has a separated near-zero group.
    pub gap_threshold: Option<f64>,
    /// Equality holds at the three smallest τ, all of them below the gap threshold.
    pub pass: bool,
}

/// Morse index of L_{0,G}(τ) against Mor(−B) + Mor(Q₀V(0)Q₀) over a τ list (at least three values).
pub fn verify_small_tau_morse(model: &Model, taus: &[f64]) -> Result<SmallTauReport> {
    let form = compute_boundary_form(model)?;
    let expected = form.expected_morse()?;
    if taus.len() < 3 {
        return Err(MaslovError::Input("small-tau check needs at least three tau values".into()));
    }
    let mut taus = taus.to_vec();
    taus.sort_by(|a, b| b.total_cmp(a));
    let n = model.n_sys();
    let mut rows = taus
        .par_iter()
        .map(|&tau| {
            if !(tau > 0.0 && tau <= 1.0) {
                return Err(MaslovError::Input(format!("tau must lie in (0,1], got {tau}")));
            }
            let eig = model.pencil(&small_tau_point(tau))?.eigen(false)?;
            let values: Vec<f64> = eig.values.iter().copied().collect();
            let group = near_zero_group(&values, n);
            let group_max = group.iter().fold(0.0_f64, |m, &i| m.max(values[i].abs()));
            let gap = (0..values.len()).filter(|i| !group.contains(i)).fold(f64::INFINITY, |m, i| m.min(values[i].abs()));
            let tol = 1e-12 * eig.max_abs();
            if group.iter().any(|&i| values[i].abs() <= tol) {
                return Err(MaslovError::Consistency(format!("L_0(tau) singular at tau = {tau}")));
            }
            let morse = eig.count_below(-tol);
            let separated = group_max < SEPARATION_RATIO * gap;
            Ok(SmallTauRow {
                tau,
                checked: false,
                morse,
                near_zero: group.iter().map(|&i| values[i]).collect(),
                group_max,
                gap,
                separated,
                holds: morse == expected,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let k = rows.len();
    for r in &mut rows[k - 3..] {
        r.checked = true;
    }
    let tail = rows.iter().rev().take_while(|r| r.separated).count();
    let gap_threshold = if tail > 0 { Some(rows[k - tail].tau) } else { None };
    let pass = tail >= 3 && rows[k - 3..].iter().all(|r| r.holds);
    Ok(SmallTauReport { morse_minus_b: form.morse_minus_b, morse_qvq: form.morse_qvq, expected, rows, gap_threshold, pass })
}

/// Richardson table for g(τ_k) on τ_{k+1} = τ_k/2, for g = a + bτ + cτ² + …; returns
/// the extrapolated value and the difference between the last two diagonal entries.
pub fn richardson(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut prev = values.to_vec();
    let mut diag = vec![prev[n - 1]];
    for j in 1..n {
        let f = 2f64.powi(j as i32);
        let next: Vec<f64> = (j..n).map(|k| (f * prev[k - j + 1] - prev[k - j]) / (f - 1.0)).collect();
        diag.push(*next.last().unwrap());
        prev = next;
    }
    let last = *diag.last().unwrap();
    let spread = if diag.len() > 1 { (last - diag[diag.len() - 2]).abs() } else { f64::NAN };
    (last, spread)
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchFit {
    pub values: Vec<f64>,
    pub slope: f64,
    pub slope_spread: f64,
    pub slope_target: f64,
    pub slope_error: f64,
    /// Relative error, or absolute error when the target vanishes.
    pub slope_rel_error: f64,
    pub curvature: f64,
    pub curvature_spread: f64,
    pub curvature_target: Option<f64>,
    pub curvature_rel_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionFit {
    pub taus: Vec<f64>,
    pub volume: f64,
    pub b_eigenvalues: Vec<f64>,
    pub qvq_eigenvalues: Vec<f64>,
    /// Sorted by slope, then by curvature.
    pub branches: Vec<BranchFit>,
}

impl ExpansionFit {
    pub fn max_slope_error(&self) -> f64 {
        self.branches.iter().fold(0.0, |m, b| m.max(b.slope_rel_error))
    }

    pub fn max_curvature_error(&self) -> f64 {
        self.branches.iter().filter_map(|b| b.curvature_rel_error).fold(0.0, f64::max)
    }

    pub fn negative_slopes(&self) -> usize {
        self.branches.iter().filter(|b| b.slope < 0.0 && b.slope_target < 0.0).count()
    }
}

struct TauSample {
    values: Vec<f64>,
    vectors: Vec<DVector<f64>>,
}

/// Permutation of `to` maximizing the summed |overlap| with `from` (exhaustive for N ≤ 6).
fn best_permutation(overlap: &DMatrix<f64>) -> Vec<usize> {
    let n = overlap.nrows();
    let mut best = (f64::NEG_INFINITY, (0..n).collect::<Vec<_>>());
    if n <= 6 {
        let mut perm: Vec<usize> = (0..n).collect();
        permute(&mut perm, 0, overlap, &mut best);
        return best.1;
    }
    let mut used = vec![false; n];
    let mut out = vec![0; n];
    for i in 0..n {
        let j = (0..n).filter(|&j| !used[j]).max_by(|&a, &b| overlap[(i, a)].total_cmp(&overlap[(i, b)])).unwrap();
        used[j] = true;
        out[i] = j;
    }
    out
}

fn permute(perm: &mut Vec<usize>, k: usize, overlap: &DMatrix<f64>, best: &mut (f64, Vec<usize>)) {
    if k == perm.len() {
        let score: f64 = perm.iter().enumerate().map(|(i, &j)| overlap[(i, j)]).sum();
        if score > best.0 {
            *best = (score, perm.clone());
        }
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute(perm, k + 1, overlap, best);
        perm.swap(k, i);
    }
}

/// Fits λ_j(τ) over a halving τ grid and compares with eig(−B)/|Ω| and eig(Q₀V(0)Q₀).
pub fn eigenvalue_expansion_fit(model: &Model, taus: &[f64]) -> Result<ExpansionFit> {
    let form = compute_boundary_form(model)?;
    form.expected_morse()?;
    if taus.len() < 3 {
        return Err(MaslovError::Input("expansion fit needs at least three tau values".into()));
    }
    let mut taus = taus.to_vec();
    taus.sort_by(|a, b| b.total_cmp(a));
    for w in taus.windows(2) {
        if ((w[0] / w[1]) - 2.0).abs() > 1e-12 {
            return Err(MaslovError::Input("tau grid must halve at each step".into()));
        }
    }
    let n = model.n_sys();
    let m_vol = &model.sm.m_vol;
    let samples = taus
        .par_iter()
        .map(|&tau| {
            let eig = model.pencil(&small_tau_point(tau))?.eigen(true)?;
            let x = eig.vectors.as_ref().expect("vectors requested");
            let values: Vec<f64> = eig.values.iter().copied().collect();
            let group = near_zero_group(&values, n);
            Ok(TauSample { values: group.iter().map(|&i| values[i]).collect(), vectors: group.iter().map(|&i| x.column(i).into_owned()).collect() })
        })
        .collect::<Result<Vec<_>>>()?;

    // branch b at τ_k is samples[k] entry order[k][b]
    let mut order: Vec<Vec<usize>> = vec![(0..n).collect()];
    for k in 1..samples.len() {
        let prev = &samples[k - 1];
        let cur = &samples[k];
        let overlap = DMatrix::from_fn(n, n, |i, j| {
            let u = &prev.vectors[order[k - 1][i]];
            u.iter().zip(cur.vectors[j].iter()).zip(m_vol.iter()).map(|((a, b), w)| a * b * w).sum::<f64>().abs()
        });
        let perm = best_permutation(&overlap);
        for (i, &j) in perm.iter().enumerate() {
            if overlap[(i, j)] < 0.5 {
                let pi = order[k - 1][i];
                let close = cur.values.iter().enumerate().any(|(l, v)| l != j && (v - cur.values[j]).abs() <= 1e-8 * v.abs().max(prev.values[pi].abs()));
                if !close {
                    let other = (0..n).find(|&l| l != i && overlap[(l, j)] >= overlap[(i, j)]).unwrap_or(i);
                    return Err(MaslovError::BranchCrossing(i, other, taus[k]));
                }
            }
        }
        order.push(perm);
    }

    let slope_targets = form.slope_targets();
    let mut branches: Vec<BranchFit> = (0..n)
        .map(|b| {
            let values: Vec<f64> = (0..samples.len()).map(|k| samples[k].values[order[k][b]]).collect();
            let g: Vec<f64> = values.iter().zip(&taus).map(|(v, t)| v / t).collect();
            let (slope, slope_spread) = richardson(&g);
            let h: Vec<f64> = values.iter().zip(&taus).map(|(v, t)| (v - t * slope) / (t * t)).collect();
            let (curvature, curvature_spread) = richardson(&h);
            BranchFit {
                values,
                slope,
                slope_spread,
                slope_target: f64::NAN,
                slope_error: f64::NAN,
                slope_rel_error: f64::NAN,
                curvature,
                curvature_spread,
                curvature_target: None,
                curvature_rel_error: None,
            }
        })
        .collect();
    branches.sort_by(|a, b| a.slope.total_cmp(&b.slope));
    for (br, &target) in branches.iter_mut().zip(&slope_targets) {
        br.slope_target = target;
        br.slope_error = (br.slope - target).abs();
        br.slope_rel_error = if target != 0.0 { br.slope_error / target.abs() } else { br.slope_error };
    }
    // slope-zero branches carry the second-order targets
    let mut zero: Vec<usize> = (0..n).filter(|&b| branches[b].slope_target == 0.0).collect();
    zero.sort_by(|&a, &b| branches[a].curvature.total_cmp(&branches[b].curvature));
    for (&b, &target) in zero.iter().zip(&form.qvq_eigenvalues) {
        let br = &mut branches[b];
        br.curvature_target = Some(target);
        br.curvature_rel_error = Some((br.curvature - target).abs() / target.abs());
    }
    Ok(ExpansionFit { taus, volume: form.volume, b_eigenvalues: form.b_eigenvalues.clone(), qvq_eigenvalues: form.qvq_eigenvalues.clone(), branches })
}

/// Dyadic grid τ = 2^{−p}, p = p_min..=p_max.
pub fn dyadic_taus(p_min: i32, p_max: i32) -> Vec<f64> {
    (p_min..=p_max).map(|p| 2f64.powi(-p)).collect()
}
