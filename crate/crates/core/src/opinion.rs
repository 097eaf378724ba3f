//! Binomial subjective-logic opinions.
//!
//! An [`Opinion`] is a belief/disbelief/uncertainty triple summing to one,
//! plus a base rate used to project it onto a probability.

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

/// Default evidence window for binomial opinions.
pub const DEFAULT_WINDOW: f64 = 2.0;

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpinionError {
    #[error("opinion masses must sum to 1 (got b={b}, d={d}, u={u})")]
    NotNormalized { b: f64, d: f64, u: f64 },
    #[error("opinion component {name}={value} outside [0,1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("negative evidence (r={r}, s={s})")]
    NegativeEvidence { r: f64, s: f64 },
    #[error("degenerate base rates {a_x} and {a_y}")]
    DegenerateBaseRate { a_x: f64, a_y: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(try_from = "RawOpinion")]
pub struct Opinion {
    b: f64,
    d: f64,
    u: f64,
    a: f64,
}

#[derive(Deserialize)]
struct RawOpinion {
    b: f64,
    d: f64,
    u: f64,
    a: f64,
}

impl TryFrom<RawOpinion> for Opinion {
    type Error = OpinionError;

    fn try_from(raw: RawOpinion) -> Result<Self, Self::Error> {
        Opinion::new(raw.b, raw.d, raw.u, raw.a)
    }
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

impl Serialize for Opinion {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Out {
            b: f64,
            d: f64,
            u: f64,
            a: f64,
        }
        let (b, d) = (round6(self.b), round6(self.d));
        Out {
            b,
            d,
            u: round6(1.0 - b - d).max(0.0),
            a: round6(self.a),
        }
        .serialize(serializer)
    }
}

// Operators accumulate ulp-level error; clamp it away without hiding real bugs.
fn tidy(x: f64) -> f64 {
    if x.abs() < 1e-15 {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

impl Opinion {
    pub fn new(b: f64, d: f64, u: f64, a: f64) -> Result<Self, OpinionError> {
        for (name, value) in [("b", b), ("d", d), ("u", u), ("a", a)] {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(OpinionError::OutOfRange { name, value });
            }
        }
        if (b + d + u - 1.0).abs() > TOL {
            return Err(OpinionError::NotNormalized { b, d, u });
        }
        Ok(Self { b, d, u, a })
    }

    fn raw(b: f64, d: f64, u: f64, a: f64) -> Self {
        let (b, d, u, a) = (tidy(b), tidy(d), tidy(u), tidy(a));
        debug_assert!((b + d + u - 1.0).abs() <= TOL, "b={b} d={d} u={u}");
        Self { b, d, u, a }
    }

    /// Full uncertainty with the given base rate.
    pub fn vacuous(a: f64) -> Self {
        Self::raw(0.0, 0.0, 1.0, a)
    }

    pub fn certain_true() -> Self {
        Self::raw(1.0, 0.0, 0.0, 0.5)
    }

    pub fn certain_false() -> Self {
        Self::raw(0.0, 1.0, 0.0, 0.5)
    }

    pub fn belief(&self) -> f64 {
        self.b
    }

    pub fn disbelief(&self) -> f64 {
        self.d
    }

    pub fn uncertainty(&self) -> f64 {
        self.u
    }

    pub fn base_rate(&self) -> f64 {
        self.a
    }

    /// Maps `r` positive and `s` negative observations to an opinion with
    /// window constant 2 and base rate 0.5.
    pub fn from_evidence(r: f64, s: f64) -> Result<Self, OpinionError> {
        Self::from_evidence_with(r, s, DEFAULT_WINDOW, 0.5)
    }

    pub fn from_evidence_with(r: f64, s: f64, window: f64, a: f64) -> Result<Self, OpinionError> {
        if !(r >= 0.0 && s >= 0.0) {
            return Err(OpinionError::NegativeEvidence { r, s });
        }
        if !(window > 0.0) {
            return Err(OpinionError::OutOfRange {
                name: "window",
                value: window,
            });
        }
        if !(0.0..=1.0).contains(&a) {
            return Err(OpinionError::OutOfRange { name: "a", value: a });
        }
        let n = r + s + window;
        Ok(Self::raw(r / n, s / n, window / n, a))
    }

    pub fn expected_probability(&self) -> f64 {
        self.b + self.a * self.u
    }

    pub fn complement(&self) -> Self {
        Self::raw(self.d, self.b, self.u, 1.0 - self.a)
    }

    /// Conjunction (normal multiplication).
    pub fn multiply(&self, y: &Opinion) -> Result<Self, OpinionError> {
        let x = self;
        let denom = 1.0 - x.a * y.a;
        if denom <= 0.0 {
            return Err(OpinionError::DegenerateBaseRate { a_x: x.a, a_y: y.a });
        }
        let b = x.b * y.b + ((1.0 - x.a) * y.a * x.b * y.u + x.a * (1.0 - y.a) * x.u * y.b) / denom;
        let d = x.d + y.d - x.d * y.d;
        let u = x.u * y.u + ((1.0 - y.a) * x.b * y.u + (1.0 - x.a) * x.u * y.b) / denom;
        Ok(Self::raw(b, d, u, x.a * y.a))
    }

    /// Disjunction (normal comultiplication).
    pub fn comultiply(&self, y: &Opinion) -> Result<Self, OpinionError> {
        let x = self;
        let a = x.a + y.a - x.a * y.a;
        if a <= 0.0 {
            return Err(OpinionError::DegenerateBaseRate { a_x: x.a, a_y: y.a });
        }
        let b = x.b + y.b - x.b * y.b;
        let d = x.d * y.d + (x.a * (1.0 - y.a) * x.d * y.u + (1.0 - x.a) * y.a * x.u * y.d) / a;
        let u = x.u * y.u + (y.a * x.d * y.u + x.a * x.u * y.d) / a;
        Ok(Self::raw(b, d, u, a))
    }

    /// Trust discounting: `self` is the trust held in the source of `x`.
    pub fn discount(&self, x: &Opinion) -> Self {
        let t = self;
        Self::raw(t.b * x.b, t.b * x.d, t.d + t.u + t.b * x.u, x.a)
    }

    /// Cumulative fusion of two independent opinions about the same thing.
    pub fn fuse(&self, y: &Opinion) -> Self {
        let x = self;
        let kappa = x.u + y.u - x.u * y.u;
        if kappa <= 0.0 {
            return Self::raw(
                (x.b + y.b) / 2.0,
                (x.d + y.d) / 2.0,
                (x.u + y.u) / 2.0,
                (x.a + y.a) / 2.0,
            );
        }
        let b = (x.b * y.u + y.b * x.u) / kappa;
        let d = (x.d * y.u + y.d * x.u) / kappa;
        let u = (x.u * y.u) / kappa;
        let a_denom = x.u + y.u - 2.0 * x.u * y.u;
        let a = if a_denom.abs() < 1e-12 {
            (x.a + y.a) / 2.0
        } else {
            (x.a * y.u + y.a * x.u - (x.a + y.a) * x.u * y.u) / a_denom
        };
        Self::raw(b, d, u, a)
    }

    /// `1 − u`: how much weight a source reporting this opinion carries.
    pub fn confidence_weight(&self) -> f64 {
        1.0 - self.u
    }

    /// Component-wise comparison within `tol`.
    pub fn approx_eq(&self, other: &Opinion, tol: f64) -> bool {
        (self.b - other.b).abs() <= tol
            && (self.d - other.d).abs() <= tol
            && (self.u - other.u).abs() <= tol
            && (self.a - other.a).abs() <= tol
    }
}

impl std::fmt::Display for Opinion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({:.3}, {:.3}, {:.3}; a={:.2})",
            self.b, self.d, self.u, self.a
        )
    }
}
