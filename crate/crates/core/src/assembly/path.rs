use serde::{Deserialize, Serialize};

use crate::error::{MaslovError, Result};

/// The four sides of the rectangle [−Λ,0]×[τ,1], traversed counterclockwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Segment {
    #[serde(rename = "sigma1")]
    Sigma1,
    #[serde(rename = "sigma2")]
    Sigma2,
    #[serde(rename = "sigma3")]
    Sigma3,
    #[serde(rename = "sigma4")]
    Sigma4,
}

impl Segment {
    pub const ALL: [Segment; 4] = [Segment::Sigma1, Segment::Sigma2, Segment::Sigma3, Segment::Sigma4];

    pub fn label(self) -> &'static str {
        match self {
            Segment::Sigma1 => "sigma1",
            Segment::Sigma2 => "sigma2",
            Segment::Sigma3 => "sigma3",
            Segment::Sigma4 => "sigma4",
        }
    }

    /// t is constant along Σ₁ and Σ₃.
    pub fn constant_t(self) -> bool {
        matches!(self, Segment::Sigma1 | Segment::Sigma3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub s: f64,
    pub lambda: f64,
    pub t: f64,
    pub segment: Segment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPath {
    pub tau: f64,
    pub lambda_max: f64,
}

impl GammaPath {
    pub fn new(tau: f64, lambda_max: f64) -> Result<Self> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(MaslovError::Input(format!("tau must lie in (0,1], got {tau}")));
        }
        if lambda_max <= 0.0 || !lambda_max.is_finite() {
            return Err(MaslovError::Input(format!("Lambda must be positive, got {lambda_max}")));
        }
        Ok(Self { tau, lambda_max })
    }

    pub fn start(&self) -> f64 {
        -self.lambda_max
    }

    pub fn end(&self) -> f64 {
        2.0 * (1.0 - self.tau) + self.lambda_max
    }

    /// Closed parameter interval of a segment.
    pub fn range(&self, seg: Segment) -> (f64, f64) {
        let (tau, lam) = (self.tau, self.lambda_max);
        match seg {
            Segment::Sigma1 => (-lam, 0.0),
            Segment::Sigma2 => (0.0, 1.0 - tau),
            Segment::Sigma3 => (1.0 - tau, 1.0 - tau + lam),
            Segment::Sigma4 => (1.0 - tau + lam, 2.0 * (1.0 - tau) + lam),
        }
    }

    /// (λ̇, ṫ) along a segment.
    pub fn velocity(&self, seg: Segment) -> (f64, f64) {
        match seg {
            Segment::Sigma1 => (1.0, 0.0),
            Segment::Sigma2 => (0.0, 1.0),
            Segment::Sigma3 => (-1.0, 0.0),
            Segment::Sigma4 => (0.0, -1.0),
        }
    }

    /// Evaluates (λ, t) by the formula of a given segment (endpoints included).
    pub fn eval_on(&self, seg: Segment, s: f64) -> PathPoint {
        let (tau, lam) = (self.tau, self.lambda_max);
        let (lambda, t) = match seg {
            Segment::Sigma1 => (s, tau),
            Segment::Sigma2 => (0.0, s + tau),
            Segment::Sigma3 => ((1.0 - tau) - s, 1.0),
            Segment::Sigma4 => (-lam, -s + 2.0 - tau + lam),
        };
        PathPoint { s, lambda, t: t.clamp(tau, 1.0), segment: seg }
    }

    /// Segment owning s under the half-open convention [a, b) (the last one closed).
    pub fn segment_of(&self, s: f64) -> Result<Segment> {
        if !(s >= self.start() && s <= self.end()) {
            return Err(MaslovError::Input(format!("s = {s} outside [{}, {}]", self.start(), self.end())));
        }
        for seg in Segment::ALL {
            let (_, b) = self.range(seg);
            if s < b {
                return Ok(seg);
            }
        }
        Ok(Segment::Sigma4)
    }

    pub fn eval(&self, s: f64) -> Result<PathPoint> {
        let seg = self.segment_of(s)?;
        Ok(self.eval_on(seg, s))
    }

    /// Point of Σ₂ with the same t as s ∈ Σ₄.
    pub fn mirror(&self, s: f64) -> f64 {
        -s + 2.0 * (1.0 - self.tau) + self.lambda_max
    }
}
