use nalgebra::DMatrix;
use rayon::prelude::*;

use super::flow::{spectral_flow, FlowOptions, PhaseSample};
use super::forms::{self, FormRoute};
use super::{CrossingRecord, MaslovOptions, MaslovResult, Method, SegmentResult};
use crate::assembly::{GammaPath, Model, PathPoint, Segment};
use crate::dtn::upsilon_frame;
use crate::error::{MaslovError, Result};
use crate::symplectic::{souriau_eigenphases, LagrangianFrame};

/// How Λ (the depth of Γ in λ) is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaChoice {
    /// Λ = (|c_τ| + 1)/τ² with c_τ the lowest eigenvalue seen on Σ₂.
    Auto,
    Fixed(f64),
}

/// Maslov index computations along Γ for one model and one τ.
pub struct MaslovSolver<'a> {
    pub(crate) model: &'a Model,
    pub(crate) path: GammaPath,
    pub(crate) options: MaslovOptions,
    /// Uniform Σ₂ samples (s, ascending eigenvalues).
    pub(crate) sigma2: Vec<(f64, Vec<f64>)>,
    pub(crate) base1: Vec<f64>,
    pub(crate) base3: Vec<f64>,
    lower_bound: f64,
}

pub(crate) fn eigenvalues(model: &Model, point: &PathPoint) -> Result<Vec<f64>> {
    Ok(model.pencil(point)?.eigen(false)?.values.iter().copied().collect())
}

impl<'a> MaslovSolver<'a> {
    pub fn new(model: &'a Model, tau: f64, lambda: LambdaChoice, options: MaslovOptions) -> Result<Self> {
        let probe = GammaPath::new(tau, 1.0)?;
        let n = options.n_samples.max(2);
        let len = 1.0 - tau;
        let grid: Vec<f64> = (0..n).map(|i| if i == n - 1 { len } else { len * i as f64 / (n - 1) as f64 }).collect();
        let sigma2: Vec<(f64, Vec<f64>)> = grid.par_iter().map(|&s| Ok((s, eigenvalues(model, &probe.eval_on(Segment::Sigma2, s))?))).collect::<Result<_>>()?;
        let lower_bound = sigma2.iter().map(|(_, v)| v[0]).fold(f64::INFINITY, f64::min);
        let lambda_max = match lambda {
            LambdaChoice::Auto => (lower_bound.abs() + 1.0) / (tau * tau),
            LambdaChoice::Fixed(v) => v,
        };
        let path = GammaPath::new(tau, lambda_max)?;
        let base1 = eigenvalues(model, &path.eval_on(Segment::Sigma1, path.range(Segment::Sigma1).0))?;
        let base3 = eigenvalues(model, &path.eval_on(Segment::Sigma3, path.range(Segment::Sigma3).0))?;
        Ok(Self { model, path, options, sigma2, base1, base3, lower_bound })
    }

    pub fn path(&self) -> &GammaPath {
        &self.path
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn options(&self) -> &MaslovOptions {
        &self.options
    }

    /// c_τ: the lowest pencil eigenvalue over the Σ₂ samples.
    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    /// Ascending pencil eigenvalues at s ∈ seg.
    pub fn eigenvalues_at(&self, seg: Segment, s: f64) -> Result<Vec<f64>> {
        let p = self.path.eval_on(seg, s);
        match seg {
            Segment::Sigma1 | Segment::Sigma3 => {
                let (base, start) = if seg == Segment::Sigma1 { (&self.base1, self.path.range(seg).0) } else { (&self.base3, self.path.range(seg).0) };
                let p0 = self.path.eval_on(seg, start);
                let shift = (p.lambda - p0.lambda) * p.t * p.t;
                Ok(base.iter().map(|v| v - shift).collect())
            }
            Segment::Sigma2 => eigenvalues(self.model, &p),
            Segment::Sigma4 => {
                let mirror = self.path.eval_on(Segment::Sigma2, self.path.mirror(s));
                let shift = self.path.lambda_max * p.t * p.t;
                Ok(eigenvalues(self.model, &mirror)?.into_iter().map(|v| v + shift).collect())
            }
        }
    }

    /// Eigenvalues on the uniform detection grid of a segment.
    pub fn sample_values(&self, seg: Segment) -> Result<Vec<(f64, Vec<f64>)>> {
        let (a, b) = self.path.range(seg);
        match seg {
            Segment::Sigma2 => Ok(self.sigma2.clone()),
            Segment::Sigma4 => Ok(self
                .sigma2
                .iter()
                .rev()
                .map(|(s2, v)| {
                    let t = s2 + self.path.tau;
                    let shift = self.path.lambda_max * t * t;
                    (self.path.mirror(*s2).clamp(a, b), v.iter().map(|x| x + shift).collect())
                })
                .collect()),
            _ => {
                let n = self.options.n_samples.max(2);
                (0..n)
                    .map(|i| {
                        let s = if i == n - 1 { b } else { a + (b - a) * i as f64 / (n - 1) as f64 };
                        Ok((s, self.eigenvalues_at(seg, s)?))
                    })
                    .collect()
            }
        }
    }

    /// Signed eigenvalue of smallest modulus along the detection grid.
    pub fn mu_min_trace(&self, seg: Segment) -> Result<Vec<(f64, f64)>> {
        Ok(self.sample_values(seg)?.into_iter().map(|(s, v)| (s, v.into_iter().fold(f64::INFINITY, |m, x| if x.abs() < m.abs() { x } else { m }))).collect())
    }

    /// Lowest eigenvalue over the Σ₄ detection grid.
    pub fn sigma4_min_eigenvalue(&self) -> Result<f64> {
        Ok(self.sample_values(Segment::Sigma4)?.iter().map(|(_, v)| v[0]).fold(f64::INFINITY, f64::min))
    }

    /// Crossing form of a detected crossing by the chosen route.
    pub fn crossing_form(&self, record: &CrossingRecord, route: FormRoute) -> Result<DMatrix<f64>> {
        let point = self.path.eval_on(record.segment, record.s_star);
        forms::evaluate(route, self.model, &self.path, &point, &record.kernel)
    }

    /// Υ(s) on a segment, nudging s off points where both trace maps are singular.
    /// The nudge grows geometrically up to 1e−6 of the segment length.
    pub fn upsilon(&self, seg: Segment, s: f64) -> Result<LagrangianFrame> {
        let (a, b) = self.path.range(seg);
        let nudge = 1e-9 * (b - a).max(1e-3);
        let mut last = None;
        for k in [0.0, 1.0, -1.0, 4.0, -4.0, 16.0, -16.0, 64.0, -64.0, 256.0, -256.0, 1024.0, -1024.0] {
            let x = (s + k * nudge).clamp(a, b);
            match upsilon_frame(self.model, &self.path.eval_on(seg, x), self.options.fallback_tol) {
                Ok(f) => return Ok(f.frame),
                Err(e @ MaslovError::BothMapsSingular(_)) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last.unwrap_or(MaslovError::BothMapsSingular(s)))
    }

    /// Eigenphases of the Souriau map of (Υ(s), G).
    pub fn phases_at(&self, seg: Segment, s: f64) -> Result<Vec<f64>> {
        let f = self.upsilon(seg, s)?;
        souriau_eigenphases(&f, self.model.reference_frame())
    }

    pub fn maslov_index_crossing_form(&self, seg: Segment) -> Result<SegmentResult> {
        let crossings = self.detect_crossings(seg)?;
        if let Some(c) = crossings.iter().find(|c| c.degenerate) {
            return Err(MaslovError::DegenerateCrossing { s: c.s_star, eigenvalues: c.form_eigenvalues.clone() });
        }
        let index = crossings.iter().map(|c| c.contribution).sum();
        Ok(SegmentResult { segment: seg, range: self.path.range(seg), index, method: Method::CrossingForm, crossings, phases: Vec::new() })
    }

    pub fn maslov_index_spectral_flow(&self, seg: Segment) -> Result<SegmentResult> {
        let (a, b) = self.path.range(seg);
        if b <= a {
            return Ok(SegmentResult { segment: seg, range: (a, b), index: 0, method: Method::SpectralFlow, crossings: Vec::new(), phases: Vec::new() });
        }
        let opts = FlowOptions {
            intervals: self.options.flow_intervals,
            max_depth: self.options.flow_max_depth,
            max_phase_step: self.options.max_phase_step,
            phase_zero_tol: self.options.phase_zero_tol,
            ..FlowOptions::default()
        };
        let f = |s: f64| self.phases_at(seg, s);
        let out = spectral_flow(a, b, &f, opts)?;
        Ok(SegmentResult { segment: seg, range: (a, b), index: out.index, method: Method::SpectralFlow, crossings: Vec::new(), phases: out.samples })
    }

    pub fn maslov_index(&self, seg: Segment, method: Method) -> Result<SegmentResult> {
        match method {
            Method::CrossingForm => self.maslov_index_crossing_form(seg),
            Method::SpectralFlow => self.maslov_index_spectral_flow(seg),
        }
    }

    /// Index over the closed loop Γ = Σ₁ ∪ Σ₂ ∪ Σ₃ ∪ Σ₄.
    pub fn closed_loop(&self, method: Method) -> Result<MaslovResult> {
        let segments = Segment::ALL.iter().map(|&seg| self.maslov_index(seg, method)).collect::<Result<Vec<_>>>()?;
        Ok(MaslovResult::from_segments(method, segments))
    }

    pub fn phase_trace(&self, seg: Segment) -> Result<Vec<PhaseSample>> {
        Ok(self.maslov_index_spectral_flow(seg)?.phases)
    }
}
