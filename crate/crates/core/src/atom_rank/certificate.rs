use std::fmt;

use serde::{Deserialize, Serialize};

use super::{RankError, ThetaSample};

/// Which procedure contributed to a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MethodTag {
    MomentBound,
    ThetaScan,
    ExactRegular,
    ZeroBlock,
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Regularity of the non-atomic part near zero: `ν([−r, r]) ≤ c·r^β` for `0 < r < r₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityInfo {
    pub c: f64,
    pub beta: f64,
    pub r0: f64,
}

impl RegularityInfo {
    pub fn new(c: f64, beta: f64, r0: f64) -> Result<Self, RankError> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(RankError::InvalidParameter(format!("regularity c = {c} must be >= 0")));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(RankError::InvalidParameter(format!(
                "regularity beta = {beta} must lie in (0, 1]"
            )));
        }
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(RankError::InvalidParameter(format!("regularity r0 = {r0} must be > 0")));
        }
        Ok(Self { c, beta, r0 })
    }

    /// Strict upper limit for `y` below which `N·θ(y)` is within `1/4` of `N·μ({0})`:
    /// `min{ r₀^{(2+β)/2}, (1/(4N(c+1)))^{(2+β)/(2β)} }`.
    pub fn y_threshold(&self, dim: usize) -> f64 {
        let e = 2.0 + self.beta;
        let a = self.r0.powf(e / 2.0);
        let b = (1.0 / (4.0 * dim as f64 * (self.c + 1.0))).powf(e / (2.0 * self.beta));
        a.min(b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankCertificate {
    pub dim: usize,
    pub lower_bound: usize,
    pub upper_bound: Option<usize>,
    pub exact: Option<usize>,
    pub method_tags: Vec<MethodTag>,
    pub samples: Vec<ThetaSample>,
    pub warning_flags: Vec<String>,
}

#[derive(Serialize)]
struct SampleJson {
    y: f64,
    theta: f64,
    eps: f64,
}

#[derive(Serialize)]
struct CertificateJson<'a> {
    #[serde(rename = "N")]
    dim: usize,
    lower: usize,
    upper: Option<usize>,
    exact: Option<usize>,
    methods: &'a [MethodTag],
    samples: Vec<SampleJson>,
    warnings: &'a [String],
}

impl RankCertificate {
    pub(crate) fn empty(dim: usize) -> Self {
        Self {
            dim,
            lower_bound: 0,
            upper_bound: None,
            exact: None,
            method_tags: Vec::new(),
            samples: Vec::new(),
            warning_flags: Vec::new(),
        }
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub(crate) fn tag(&mut self, t: MethodTag) {
        if !self.method_tags.contains(&t) {
            self.method_tags.push(t);
        }
    }

    pub(crate) fn warn(&mut self, w: impl Into<String>) {
        let w = w.into();
        if !self.warning_flags.contains(&w) {
            self.warning_flags.push(w);
        }
    }

    /// Sets `exact` when the bounds meet; a lower bound of `N` meets the trivial upper bound.
    pub(crate) fn settle(&mut self) {
        if self.lower_bound >= self.dim {
            self.lower_bound = self.dim;
            self.upper_bound = Some(self.dim);
        }
        if let Some(u) = self.upper_bound {
            if u == self.lower_bound && self.exact.is_none() {
                self.exact = Some(u);
            }
        }
    }

    pub fn to_json(&self) -> String {
        let doc = CertificateJson {
            dim: self.dim,
            lower: self.lower_bound,
            upper: self.upper_bound,
            exact: self.exact,
            methods: &self.method_tags,
            samples: self
                .samples
                .iter()
                .map(|s| SampleJson {
                    y: s.y,
                    theta: s.theta_tilde,
                    eps: s.eps,
                })
                .collect(),
            warnings: &self.warning_flags,
        };
        serde_json::to_string_pretty(&doc).expect("certificate fields are serializable")
    }
}
