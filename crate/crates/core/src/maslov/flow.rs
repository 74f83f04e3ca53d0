//! Spectral flow of eigenphases through −1 with adaptive sampling.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MaslovError, Result};

#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    pub intervals: usize,
    pub max_depth: usize,
    pub max_phase_step: f64,
    pub phase_zero_tol: f64,
    /// Number of candidate ε values in (0, π).
    pub eps_candidates: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { intervals: 32, max_depth: 30, max_phase_step: std::f64::consts::FRAC_PI_4, phase_zero_tol: 1e-7, eps_candidates: 2048 }
    }
}

/// Eigenphases ψ (eigenvalue e^{i(π+ψ)}) at a parameter value, ascending.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseSample {
    pub s: f64,
    pub phases: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FlowOutcome {
    pub index: i64,
    pub samples: Vec<PhaseSample>,
    pub leaves: usize,
}

fn wrap(x: f64) -> f64 {
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}

/// k(s, ε): number of eigenphases in [0, ε], with |ψ| ≤ zero_tol read as 0.
pub fn count_near_minus_one(phases: &[f64], eps: f64, zero_tol: f64) -> i64 {
    phases
        .iter()
        .filter(|&&p| {
            let q = if p.abs() <= zero_tol { 0.0 } else { p };
            (0.0..=eps).contains(&q)
        })
        .count() as i64
}

/// Matches two sorted phase lists by the cyclic shift of least maximal motion.
/// Returns (shift, signed motion per index of `from`).
pub fn match_phases(from: &[f64], to: &[f64]) -> (usize, Vec<f64>) {
    let m = from.len();
    let mut best = (0, f64::INFINITY);
    for r in 0..m {
        let mut worst = 0.0_f64;
        for i in 0..m {
            worst = worst.max(wrap(to[(i + r) % m] - from[i]).abs());
            if worst >= best.1 {
                break;
            }
        }
        if worst < best.1 {
            best = (r, worst);
        }
    }
    let r = best.0;
    (r, (0..m).map(|i| wrap(to[(i + r) % m] - from[i])).collect())
}

struct Ctx<'a, F> {
    f: &'a F,
    opts: FlowOptions,
    samples: Vec<PhaseSample>,
    leaves: usize,
}

impl<F> Ctx<'_, F>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    fn eval(&mut self, s: f64) -> Result<Vec<f64>> {
        let p = (self.f)(s)?;
        self.samples.push(PhaseSample { s, phases: p.clone() });
        Ok(p)
    }

    fn leaf(&mut self, a: (f64, &[f64]), mid: (f64, &[f64]), b: (f64, &[f64]), depth: usize) -> Result<i64> {
        let (sa, pa) = a;
        let (sm, pm) = mid;
        let (sb, pb) = b;
        if pa.len() != pb.len() || pa.len() != pm.len() {
            return Err(MaslovError::Consistency("eigenphase count changed along the path".into()));
        }
        let m = pa.len();
        let (r1, d1) = match_phases(pa, pm);
        let (_, d2) = match_phases(pm, pb);
        let mut swept = Vec::with_capacity(m);
        let mut step = 0.0_f64;
        for i in 0..m {
            let j = (i + r1) % m;
            let x0 = pa[i];
            let x1 = x0 + d1[i];
            let x2 = x1 + d2[j];
            let motion = d1[i].abs() + d2[j].abs();
            step = step.max(motion);
            let lo = x0.min(x1).min(x2);
            let hi = x0.max(x1).max(x2);
            let margin = 0.25 * motion + 1e-12;
            swept.push((lo - margin, hi + margin));
        }
        let eps = if step <= self.opts.max_phase_step { choose_eps(&swept, self.opts.eps_candidates) } else { None };
        match eps {
            Some(eps) => {
                self.leaves += 1;
                let z = self.opts.phase_zero_tol;
                Ok(count_near_minus_one(pb, eps, z) - count_near_minus_one(pa, eps, z))
            }
            None => {
                if depth >= self.opts.max_depth {
                    return Err(MaslovError::PhaseTracking { a: sa, b: sb });
                }
                let q1 = 0.5 * (sa + sm);
                let q2 = 0.5 * (sm + sb);
                let p1 = self.eval(q1)?;
                let p2 = self.eval(q2)?;
                let left = self.leaf((sa, pa), (q1, &p1), (sm, pm), depth + 1)?;
                let right = self.leaf((sm, pm), (q2, &p2), (sb, pb), depth + 1)?;
                Ok(left + right)
            }
        }
    }
}

/// ε ∈ (0, π) such that neither ±ε (mod 2π) lies in a swept interval, with maximal clearance.
fn choose_eps(swept: &[(f64, f64)], candidates: usize) -> Option<f64> {
    let dist = |x: f64, (lo, hi): (f64, f64)| -> f64 {
        // distance from the lattice x + 2πk to [lo, hi]; negative when inside
        let k = ((0.5 * (lo + hi) - x) / TAU).round();
        let mut best = f64::INFINITY;
        for dk in [-1.0, 0.0, 1.0] {
            let y = x + (k + dk) * TAU;
            let d = if y < lo {
                lo - y
            } else if y > hi {
                y - hi
            } else {
                -1.0
            };
            best = best.min(d);
        }
        best
    };
    let mut best: Option<(f64, f64)> = None;
    for c in 0..candidates {
        let eps = PI * (c as f64 + 0.5) / candidates as f64;
        let clearance = swept.iter().map(|&iv| dist(eps, iv).min(dist(-eps, iv))).fold(f64::INFINITY, f64::min);
        if clearance > 0.0 && best.is_none_or(|(_, b)| clearance > b) {
            best = Some((eps, clearance));
        }
    }
    best.map(|(e, _)| e)
}

/// Σ_j (k(s_j, ε_j) − k(s_{j−1}, ε_j)) over an adaptive partition of [a, b].
pub fn spectral_flow<F>(a: f64, b: f64, f: &F, opts: FlowOptions) -> Result<FlowOutcome>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    if b.partial_cmp(&a) != Some(std::cmp::Ordering::Greater) {
        return Err(MaslovError::Input(format!("empty parameter interval [{a}, {b}]")));
    }
    let n = opts.intervals.max(1);
    let grid: Vec<f64> = (0..=2 * n).map(|i| if i == 2 * n { b } else { a + (b - a) * i as f64 / (2 * n) as f64 }).collect();
    let first: Vec<Vec<f64>> = grid.par_iter().map(|&s| f(s)).collect::<Result<_>>()?;
    let mut ctx = Ctx { f, opts, samples: grid.iter().zip(&first).map(|(&s, p)| PhaseSample { s, phases: p.clone() }).collect(), leaves: 0 };
    let mut index = 0;
    for i in 0..n {
        let (l, m, r) = (2 * i, 2 * i + 1, 2 * i + 2);
        index += ctx.leaf((grid[l], &first[l]), (grid[m], &first[m]), (grid[r], &first[r]), 0)?;
    }
    let mut samples = ctx.samples;
    samples.sort_by(|x, y| x.s.total_cmp(&y.s));
    Ok(FlowOutcome { index, samples, leaves: ctx.leaves })
}
