//! Conjugate points along Γ, Maslov crossing forms, and the Maslov index by crossing
//! forms and by spectral flow of the Souriau map.

mod detect;
mod flow;
mod forms;
mod solver;

use std::f64::consts::FRAC_PI_4;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::assembly::Segment;

pub use flow::{count_near_minus_one, match_phases, spectral_flow, FlowOptions, FlowOutcome, PhaseSample};
pub use forms::{boundary_gradients, form_signature, FormRoute};
pub use solver::{LambdaChoice, MaslovSolver};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaslovOptions {
    /// Uniform samples per segment for crossing detection (endpoints included).
    pub n_samples: usize,
    /// Bracket width at which root refinement stops.
    pub refine_tol: f64,
    /// Kernel tolerance relative to the largest |eigenvalue| of the pencil.
    pub zero_tol_rel: f64,
    /// Principal-angle cosine threshold 1 − tol for frame intersections.
    pub intersection_tol: f64,
    /// Relative conditioning below which a trace map counts as singular.
    pub fallback_tol: f64,
    /// Form eigenvalues below form_tol_rel · max(1, ‖form‖) are treated as zero.
    pub form_tol_rel: f64,
    pub max_refine_depth: usize,
    /// Initial uniform sample intervals per segment for the spectral flow.
    pub flow_intervals: usize,
    pub flow_max_depth: usize,
    pub max_phase_step: f64,
    pub phase_zero_tol: f64,
}

impl Default for MaslovOptions {
    fn default() -> Self {
        Self {
            n_samples: 200,
            refine_tol: 1e-10,
            zero_tol_rel: 1e-8,
            intersection_tol: crate::symplectic::DEFAULT_INTERSECTION_TOL,
            fallback_tol: crate::dtn::DEFAULT_FALLBACK_TOL,
            form_tol_rel: 1e-8,
            max_refine_depth: 48,
            flow_intervals: 32,
            flow_max_depth: 30,
            max_phase_step: FRAC_PI_4,
            phase_zero_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectionRoute {
    PencilEigenvalue,
    FrameIntersection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossingPosition {
    Start,
    Interior,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    CrossingForm,
    SpectralFlow,
}

/// A conjugate point with its crossing form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossingRecord {
    pub s_star: f64,
    pub segment: Segment,
    pub lambda: f64,
    pub t: f64,
    pub position: CrossingPosition,
    pub kernel_dim: usize,
    /// dim(Υ(s*) ∩ G) from the frames.
    pub frame_intersection_dim: usize,
    /// Change of the negative eigenvalue count across s* (right minus left).
    pub count_change: i64,
    /// Crossing form rows (kernel_dim × kernel_dim).
    pub form: Vec<Vec<f64>>,
    pub form_eigenvalues: Vec<f64>,
    pub n_plus: usize,
    pub n_minus: usize,
    pub signature: i64,
    pub contribution: i64,
    pub degenerate: bool,
    pub detection_route: DetectionRoute,
    /// Derivatives of the eigenvalue branches through zero, by central differences.
    pub branch_derivatives: Vec<f64>,
    /// Sorted signs of form eigenvalues equal sorted signs of branch derivatives.
    pub sign_agrees: bool,
    #[serde(skip)]
    pub kernel: Vec<DVector<f64>>,
}

/// Maslov index of one segment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentResult {
    pub segment: Segment,
    pub range: (f64, f64),
    pub index: i64,
    pub method: Method,
    pub crossings: Vec<CrossingRecord>,
    /// Sampled eigenphases (spectral flow only).
    #[serde(skip)]
    pub phases: Vec<PhaseSample>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaslovResult {
    pub method: Method,
    pub segments: Vec<SegmentResult>,
    pub total: i64,
}

impl MaslovResult {
    pub fn from_segments(method: Method, segments: Vec<SegmentResult>) -> Self {
        let total = segments.iter().map(|s| s.index).sum();
        Self { method, segments, total }
    }

    pub fn segment(&self, seg: Segment) -> Option<&SegmentResult> {
        self.segments.iter().find(|r| r.segment == seg)
    }

    pub fn crossings(&self) -> impl Iterator<Item = &CrossingRecord> {
        self.segments.iter().flat_map(|s| s.crossings.iter())
    }
}
