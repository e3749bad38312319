//! Separable sparsity penalties: ℓ1, SCAD and MCP.
//!
//! Each penalty exposes its scalar value, derivative away from zero, the scaled
//! proximal map `argmin_x ν·g(x) + ½(x − w)²`, and its weak-convexity constant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    L1,
    Scad,
    Mcp,
}

impl std::fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PenaltyKind::L1 => "l1",
            PenaltyKind::Scad => "scad",
            PenaltyKind::Mcp => "mcp",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PenaltySpec")]
pub struct Penalty {
    kind: PenaltyKind,
    lambda: f64,
    a: f64,
    penalize_diagonal: bool,
}

#[derive(Deserialize)]
struct PenaltySpec {
    kind: PenaltyKind,
    lambda: f64,
    #[serde(default)]
    a: Option<f64>,
    #[serde(default = "default_true")]
    penalize_diagonal: bool,
}

fn default_true() -> bool {
    true
}

impl TryFrom<PenaltySpec> for Penalty {
    type Error = Error;

    fn try_from(s: PenaltySpec) -> Result<Self> {
        let a = match (s.kind, s.a) {
            (PenaltyKind::L1, a) => a.unwrap_or(0.0),
            (_, Some(a)) => a,
            (kind, None) => {
                return Err(Error::Config(format!("{kind} penalty requires shape parameter `a`")))
            }
        };
        Penalty::new(s.kind, s.lambda, a).map(|p| p.with_penalize_diagonal(s.penalize_diagonal))
    }
}

impl Penalty {
    pub fn new(kind: PenaltyKind, lambda: f64, a: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Config(format!("lambda must be finite and nonnegative, got {lambda}")));
        }
        match kind {
            PenaltyKind::Scad if !(a > 2.0 && a.is_finite()) => {
                return Err(Error::Config(format!("SCAD requires a > 2, got {a}")))
            }
            PenaltyKind::Mcp if !(a > 0.0 && a.is_finite()) => {
                return Err(Error::Config(format!("MCP requires a > 0, got {a}")))
            }
            _ => {}
        }
        Ok(Self {
            kind,
            lambda,
            a,
            penalize_diagonal: true,
        })
    }

    pub fn l1(lambda: f64) -> Result<Self> {
        Self::new(PenaltyKind::L1, lambda, 0.0)
    }

    pub fn scad(lambda: f64, a: f64) -> Result<Self> {
        Self::new(PenaltyKind::Scad, lambda, a)
    }

    pub fn mcp(lambda: f64, a: f64) -> Result<Self> {
        Self::new(PenaltyKind::Mcp, lambda, a)
    }

    pub fn with_penalize_diagonal(mut self, on: bool) -> Self {
        self.penalize_diagonal = on;
        self
    }

    /// Same family and shape at a different level.
    pub fn with_lambda(self, lambda: f64) -> Result<Self> {
        Ok(Self::new(self.kind, lambda, self.a)?.with_penalize_diagonal(self.penalize_diagonal))
    }

    pub fn kind(&self) -> PenaltyKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn penalize_diagonal(&self) -> bool {
        self.penalize_diagonal
    }

    /// Weak-convexity constant: the smallest μ with `g(w) + μw²/2` convex.
    pub fn mu(&self) -> f64 {
        match self.kind {
            PenaltyKind::L1 => 0.0,
            PenaltyKind::Scad => 1.0 / (self.a - 1.0),
            PenaltyKind::Mcp => 1.0 / self.a,
        }
    }

    /// Whether the penalty stays bounded as |w| grows (true for the folded-concave families).
    pub fn is_bounded(&self) -> bool {
        self.lambda == 0.0 || self.kind != PenaltyKind::L1
    }

    pub fn value(&self, w: f64) -> f64 {
        let z = w.abs();
        let (l, a) = (self.lambda, self.a);
        match self.kind {
            PenaltyKind::L1 => l * z,
            PenaltyKind::Scad => {
                if z <= l {
                    l * z
                } else if z <= a * l {
                    (2.0 * a * l * z - z * z - l * l) / (2.0 * (a - 1.0))
                } else {
                    (a + 1.0) * l * l / 2.0
                }
            }
            PenaltyKind::Mcp => {
                if z <= a * l {
                    l * z - z * z / (2.0 * a)
                } else {
                    a * l * l / 2.0
                }
            }
        }
    }

    /// Derivative at `w != 0`. At zero only the subgradient interval `[-λ, λ]` exists.
    pub fn derivative(&self, w: f64) -> Result<f64> {
        if w == 0.0 {
            return Err(Error::Domain(
                "penalty derivative is undefined at 0; use the subgradient interval".into(),
            ));
        }
        Ok(w.signum() * self.slope(w.abs()))
    }

    /// One-sided derivative of `g` at `w` in direction `d`.
    pub fn directional_derivative(&self, w: f64, d: f64) -> f64 {
        if w == 0.0 {
            self.lambda * d.abs()
        } else {
            w.signum() * self.slope(w.abs()) * d
        }
    }

    fn slope(&self, z: f64) -> f64 {
        let (l, a) = (self.lambda, self.a);
        match self.kind {
            PenaltyKind::L1 => l,
            PenaltyKind::Scad => {
                if z <= l {
                    l
                } else if z <= a * l {
                    (a * l - z) / (a - 1.0)
                } else {
                    0.0
                }
            }
            PenaltyKind::Mcp => {
                if z <= a * l {
                    l - z / a
                } else {
                    0.0
                }
            }
        }
    }

    /// Checks that the scaled prox `argmin ν·g + ½(x − w)²` is well defined for this `ν`.
    pub fn validate_prox_scale(&self, nu: f64) -> Result<()> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::Config(format!("prox scale must be positive, got {nu}")));
        }
        if self.kind == PenaltyKind::Scad && self.lambda > 0.0 && nu >= self.a - 1.0 {
            return Err(Error::Config(format!(
                "SCAD prox requires 1/rho < a - 1 (got 1/rho = {nu}, a = {})",
                self.a
            )));
        }
        Ok(())
    }

    /// Scaled proximal map `argmin_x ν·g(x) + ½(x − w)²`.
    pub fn prox(&self, w: f64, nu: f64) -> Result<f64> {
        self.validate_prox_scale(nu)?;
        Ok(self.prox_unchecked(w, nu))
    }

    pub(crate) fn prox_unchecked(&self, w: f64, nu: f64) -> f64 {
        let l = self.lambda;
        if l == 0.0 {
            return w;
        }
        let z = w.abs();
        let x = match self.kind {
            PenaltyKind::L1 => (z - nu * l).max(0.0),
            PenaltyKind::Scad => self.best_candidate(z, nu, &self.scad_candidates(z, nu)),
            PenaltyKind::Mcp => self.best_candidate(z, nu, &self.mcp_candidates(z, nu)),
        };
        w.signum() * x
    }

    /// Minimizers of the prox objective restricted to each region of the
    /// piecewise penalty, for `z = |w| ≥ 0`, ordered by increasing magnitude.
    fn scad_candidates(&self, z: f64, nu: f64) -> [f64; 3] {
        let (l, a) = (self.lambda, self.a);
        let c = 1.0 - nu / (a - 1.0);
        [
            (z - nu * l).clamp(0.0, l),
            ((z - a * nu * l / (a - 1.0)) / c).clamp(l, a * l),
            z.max(a * l),
        ]
    }

    fn mcp_candidates(&self, z: f64, nu: f64) -> [f64; 3] {
        let (l, a) = (self.lambda, self.a);
        let c = 1.0 - nu / a;
        let inner = if c > 0.0 {
            ((z - nu * l) / c).clamp(0.0, a * l)
        } else {
            // Concave piece: its minimum over [0, aλ] sits at an endpoint.
            0.0
        };
        [inner.min(a * l), a * l, z.max(a * l)]
    }

    fn best_candidate(&self, z: f64, nu: f64, candidates: &[f64]) -> f64 {
        let obj = |x: f64| nu * self.value(x) + 0.5 * (x - z) * (x - z);
        let mut best = candidates[0];
        let mut best_val = obj(best);
        for &x in &candidates[1..] {
            let v = obj(x);
            let eps = 1e-15 * (1.0 + best_val.abs());
            if v < best_val - eps || (v <= best_val + eps && x < best) {
                best = x;
                best_val = v;
            }
        }
        best
    }

    /// Sum of the penalty over all entries (both triangles), skipping the
    /// diagonal when it is not penalized.
    pub fn matrix_value(&self, s: &SymmetricMatrix) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        let n = s.dim();
        let mut acc = 0.0;
        for j in 0..n {
            if self.penalize_diagonal {
                acc += self.value(s.get(j, j));
            }
            for i in (j + 1)..n {
                acc += 2.0 * self.value(s.get(i, j));
            }
        }
        acc
    }

    /// Entrywise prox; diagonal passed through when it is not penalized.
    pub fn matrix_prox(&self, s: &SymmetricMatrix, nu: f64) -> Result<SymmetricMatrix> {
        self.validate_prox_scale(nu)?;
        Ok(self.matrix_prox_unchecked(s, nu))
    }

    pub(crate) fn matrix_prox_unchecked(&self, s: &SymmetricMatrix, nu: f64) -> SymmetricMatrix {
        let diag = self.penalize_diagonal;
        s.map_indexed(|i, j, v| {
            if i == j && !diag {
                v
            } else {
                self.prox_unchecked(v, nu)
            }
        })
    }
}
