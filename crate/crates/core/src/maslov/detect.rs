//! Conjugate point detection from sign changes of pencil eigenvalues.

use nalgebra::{DMatrix, DVector};

use super::forms::{self, form_signature};
use super::solver::MaslovSolver;
use super::{CrossingPosition, CrossingRecord, DetectionRoute};
use crate::assembly::Segment;
use crate::error::{MaslovError, Result};
use crate::linalg::symmetrize;
use crate::symplectic::intersection_dim;

const GOLDEN: f64 = 0.381_966_011_250_105_1;

fn count_neg(v: &[f64]) -> usize {
    v.iter().filter(|&&x| x < 0.0).count()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn min_abs(v: &[f64]) -> f64 {
    v.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()))
}

impl MaslovSolver<'_> {
    fn zero_tol(&self, v: &[f64]) -> f64 {
        self.options.zero_tol_rel * max_abs(v)
    }

    fn offset(&self, seg: Segment) -> f64 {
        let (a, b) = self.path.range(seg);
        1e-7 * (b - a)
    }

    /// Isolates every sign change of eigenvalues between two points and appends roots.
    fn resolve(&self, seg: Segment, lo: (f64, Vec<f64>), hi: (f64, Vec<f64>), depth: usize, out: &mut Vec<f64>) -> Result<()> {
        let (ca, cb) = (count_neg(&lo.1), count_neg(&hi.1));
        if ca == cb {
            return Ok(());
        }
        if depth > self.options.max_refine_depth || hi.0 - lo.0 <= 0.0 {
            return Err(MaslovError::UnresolvedCluster { a: lo.0, b: hi.0 });
        }
        let j = ca.min(cb);
        let (mut a, mut fa) = (lo.0, lo.1[j]);
        let (mut b, mut fb) = (hi.0, hi.1[j]);
        let scale = max_abs(&lo.1).max(max_abs(&hi.1));
        let mut root = 0.5 * (a + b);
        let mut side = 0i8;
        for _ in 0..200 {
            if b - a <= self.options.refine_tol {
                root = if fa.abs() < fb.abs() { a } else { b };
                break;
            }
            let mut x = (a * fb - b * fa) / (fb - fa);
            if !(x > a && x < b) {
                x = 0.5 * (a + b);
            }
            let fx = self.eigenvalues_at(seg, x)?[j];
            root = x;
            if fx.abs() <= 1e-15 * scale {
                break;
            }
            // fa ≥ 0 side and fb < 0 side (or reversed) keep opposite signs
            if (fx < 0.0) == (fa < 0.0) {
                a = x;
                fa = fx;
                if side == -1 {
                    fb *= 0.5;
                }
                side = -1;
            } else {
                b = x;
                fb = fx;
                if side == 1 {
                    fa *= 0.5;
                }
                side = 1;
            }
        }
        let delta = self.offset(seg).min(0.25 * (hi.0 - lo.0));
        let left = (root - delta).max(lo.0);
        let right = (root + delta).min(hi.0);
        let vl = if left > lo.0 { self.eigenvalues_at(seg, left)? } else { lo.1.clone() };
        let vr = if right < hi.0 { self.eigenvalues_at(seg, right)? } else { hi.1.clone() };
        if count_neg(&vl) != count_neg(&vr) {
            out.push(root);
        }
        if left > lo.0 {
            self.resolve(seg, lo, (left, vl), depth + 1, out)?;
        }
        if right < hi.0 {
            self.resolve(seg, (right, vr), hi, depth + 1, out)?;
        }
        Ok(())
    }

    /// Golden-section search toward zero of the eigenvalue nearest zero at a local dip.
    fn probe_dip(&self, seg: Segment, l: (f64, Vec<f64>), m: (f64, Vec<f64>), r: (f64, Vec<f64>), out: &mut Vec<f64>, tangential: &mut Vec<f64>) -> Result<()> {
        let j = (0..m.1.len()).min_by(|&x, &y| m.1[x].abs().total_cmp(&m.1[y].abs())).unwrap_or(0);
        let sign = if m.1[j] < 0.0 { -1.0 } else { 1.0 };
        let base = count_neg(&m.1);
        let (mut a, mut b) = (l.0, r.0);
        let mut x1 = a + GOLDEN * (b - a);
        let mut x2 = b - GOLDEN * (b - a);
        let mut v1 = self.eigenvalues_at(seg, x1)?;
        let mut v2 = self.eigenvalues_at(seg, x2)?;
        for _ in 0..60 {
            for (x, v) in [(x1, &v1), (x2, &v2)] {
                if count_neg(v) != base {
                    self.resolve(seg, l.clone(), (x, v.clone()), 0, out)?;
                    return self.resolve(seg, (x, v.clone()), r.clone(), 0, out);
                }
            }
            if b - a <= self.options.refine_tol {
                break;
            }
            if sign * v1[j] < sign * v2[j] {
                b = x2;
                x2 = x1;
                v2 = v1;
                x1 = a + GOLDEN * (b - a);
                v1 = self.eigenvalues_at(seg, x1)?;
            } else {
                a = x1;
                x1 = x2;
                v1 = v2;
                x2 = b - GOLDEN * (b - a);
                v2 = self.eigenvalues_at(seg, x2)?;
            }
        }
        let (x, v) = if sign * v1[j] < sign * v2[j] { (x1, v1) } else { (x2, v2) };
        if v[j].abs() <= self.zero_tol(&v) {
            tangential.push(x);
        }
        Ok(())
    }

    /// Locates all conjugate points on a segment and evaluates their crossing forms.
    pub fn detect_crossings(&self, seg: Segment) -> Result<Vec<CrossingRecord>> {
        let (a, b) = self.path.range(seg);
        if b <= a {
            return Ok(Vec::new());
        }
        let mut samples = self.sample_values(seg)?;
        let n = samples.len();
        let delta = self.offset(seg);
        let start_hit = min_abs(&samples[0].1) <= self.zero_tol(&samples[0].1);
        let end_hit = min_abs(&samples[n - 1].1) <= self.zero_tol(&samples[n - 1].1);
        if start_hit {
            samples[0] = (a + delta, self.eigenvalues_at(seg, a + delta)?);
        }
        if end_hit {
            samples[n - 1] = (b - delta, self.eigenvalues_at(seg, b - delta)?);
        }
        let mut roots = Vec::new();
        let mut tangential = Vec::new();
        for i in 0..n - 1 {
            self.resolve(seg, samples[i].clone(), samples[i + 1].clone(), 0, &mut roots)?;
        }
        let counts: Vec<usize> = samples.iter().map(|(_, v)| count_neg(v)).collect();
        let mags: Vec<f64> = samples.iter().map(|(_, v)| min_abs(v)).collect();
        for i in 1..n.saturating_sub(1) {
            if counts[i - 1] != counts[i] || counts[i] != counts[i + 1] {
                continue;
            }
            if mags[i] < 0.25 * mags[i - 1].min(mags[i + 1]) {
                self.probe_dip(seg, samples[i - 1].clone(), samples[i].clone(), samples[i + 1].clone(), &mut roots, &mut tangential)?;
            }
        }
        let mut located: Vec<(f64, CrossingPosition)> = Vec::new();
        if start_hit {
            located.push((a, CrossingPosition::Start));
        }
        roots.extend(tangential);
        roots.sort_by(|x, y| x.total_cmp(y));
        for s in roots {
            if located.last().is_none_or(|(p, _)| s - p > 10.0 * self.options.refine_tol) {
                located.push((s, CrossingPosition::Interior));
            }
        }
        if end_hit {
            located.push((b, CrossingPosition::End));
        }
        located.into_iter().map(|(s, pos)| self.build_record(seg, s, pos)).collect()
    }

    fn build_record(&self, seg: Segment, s: f64, position: CrossingPosition) -> Result<CrossingRecord> {
        let (a, b) = self.path.range(seg);
        let point = self.path.eval_on(seg, s);
        let pencil = self.model.pencil(&point)?;
        let eig = pencil.eigen(true)?;
        let vals: Vec<f64> = eig.values.iter().copied().collect();
        let tol = self.zero_tol(&vals);
        let idx: Vec<usize> = (0..vals.len()).filter(|&k| vals[k].abs() <= tol).collect();
        let x = eig.vectors.as_ref().expect("vectors requested");
        let kernel: Vec<DVector<f64>> = idx.iter().map(|&k| pencil.embedding.lift(&x.column(k).into_owned())).collect();
        let coords: Vec<DVector<f64>> = idx.iter().map(|&k| x.column(k).into_owned()).collect();

        let delta = self.offset(seg);
        let strict = vals.iter().filter(|&&v| v < -tol).count() as i64;
        let count_change = match position {
            CrossingPosition::Start => count_neg(&self.eigenvalues_at(seg, a + delta)?) as i64 - strict,
            CrossingPosition::End => strict - count_neg(&self.eigenvalues_at(seg, b - delta)?) as i64,
            CrossingPosition::Interior => {
                count_neg(&self.eigenvalues_at(seg, (s + delta).min(b))?) as i64 - count_neg(&self.eigenvalues_at(seg, (s - delta).max(a))?) as i64
            }
        };

        let form = forms::general_form(self.model, &self.path, &point, &kernel)?;
        let (n_plus, n_minus, degenerate, form_eigenvalues) = form_signature(&form, self.options.form_tol_rel);
        let contribution = match position {
            CrossingPosition::Start => -(n_minus as i64),
            CrossingPosition::End => n_plus as i64,
            CrossingPosition::Interior => n_plus as i64 - n_minus as i64,
        };

        let branch_derivatives = self.branch_derivatives(seg, s, position, &idx, &coords)?;
        let sign_of = |v: f64, scale: f64| {
            if v > 1e-8 * scale {
                1
            } else if v < -1e-8 * scale {
                -1
            } else {
                0
            }
        };
        let fs = form_eigenvalues.iter().fold(1e-300_f64, |m, v| m.max(v.abs()));
        let bs = branch_derivatives.iter().fold(1e-300_f64, |m, v| m.max(v.abs()));
        let mut sorted_d = branch_derivatives.clone();
        sorted_d.sort_by(|p, q| p.total_cmp(q));
        let sign_agrees = sorted_d.len() == form_eigenvalues.len()
            && form_eigenvalues.iter().zip(&sorted_d).all(|(f, d)| sign_of(*f, fs) == sign_of(*d, bs) && sign_of(*f, fs) != 0);

        let frame = self.upsilon(seg, s)?;
        let (frame_intersection_dim, _) = intersection_dim(&frame, self.model.reference_frame(), self.options.intersection_tol)?;

        Ok(CrossingRecord {
            s_star: s,
            segment: seg,
            lambda: point.lambda,
            t: point.t,
            position,
            kernel_dim: kernel.len(),
            frame_intersection_dim,
            count_change,
            form: (0..form.nrows()).map(|i| form.row(i).iter().copied().collect()).collect(),
            form_eigenvalues,
            n_plus,
            n_minus,
            signature: n_plus as i64 - n_minus as i64,
            contribution,
            degenerate,
            detection_route: DetectionRoute::PencilEigenvalue,
            branch_derivatives,
            sign_agrees,
            kernel,
        })
    }

    /// Derivatives of the eigenvalue branches through zero by difference quotients:
    /// the eigenvalue itself for a simple kernel, the projected operator derivative otherwise.
    fn branch_derivatives(&self, seg: Segment, s: f64, position: CrossingPosition, idx: &[usize], coords: &[DVector<f64>]) -> Result<Vec<f64>> {
        if idx.is_empty() {
            return Ok(Vec::new());
        }
        let (a, b) = self.path.range(seg);
        let h = 1e-5 * (b - a);
        let (lo, hi) = match position {
            CrossingPosition::Start => (s, (s + h).min(b)),
            CrossingPosition::End => ((s - h).max(a), s),
            CrossingPosition::Interior => ((s - h).max(a), (s + h).min(b)),
        };
        if idx.len() == 1 {
            let j = idx[0];
            let vl = self.eigenvalues_at(seg, lo)?;
            let vh = self.eigenvalues_at(seg, hi)?;
            return Ok(vec![(vh[j] - vl[j]) / (hi - lo)]);
        }
        let al = self.model.pencil(&self.path.eval_on(seg, lo))?.a;
        let ah = self.model.pencil(&self.path.eval_on(seg, hi))?.a;
        let d = (ah - al) / (hi - lo);
        let k = coords.len();
        let mut p = DMatrix::from_fn(k, k, |i, j| coords[i].dot(&(&d * &coords[j])));
        symmetrize(&mut p);
        let mut out: Vec<f64> = p.symmetric_eigenvalues().iter().copied().collect();
        out.sort_by(|x, y| x.total_cmp(y));
        Ok(out)
    }
}
