//! Estimator pipelines: non-projected and projected graphical Lasso, and
//! nodewise ℓ1 regression with symmetrization.

use serde::{Deserialize, Serialize};

use crate::admm::{AdmmConfig, SolveReport, SpectralAdmm};
use crate::error::{Error, Result};
use crate::matrix::{eigendecompose, psd_project_frobenius, spectral_norm, SymmetricMatrix};
use crate::penalty::{Penalty, PenaltyKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorVariant {
    #[serde(rename = "nonproj")]
    NonprojGlasso,
    #[serde(rename = "proj")]
    ProjGlasso,
    #[serde(rename = "nodewise")]
    Nodewise,
}

impl std::fmt::Display for EstimatorVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EstimatorVariant::NonprojGlasso => "nonproj",
            EstimatorVariant::ProjGlasso => "proj",
            EstimatorVariant::Nodewise => "nodewise",
        })
    }
}

/// Side-constraint radius: a fixed value, or (nodewise only) a multiple of
/// each node's oracle ℓ1 norm `‖Θ*_{−j,j}/Θ*_jj‖₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RadiusSpec {
    Fixed(f64),
    PerNode { per_node_scale: f64 },
}

/// Settings of the nodewise inner solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodewiseConfig {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for NodewiseConfig {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSpec {
    pub variant: EstimatorVariant,
    pub penalty: Penalty,
    #[serde(rename = "R")]
    pub radius: RadiusSpec,
    #[serde(default)]
    pub solver: AdmmConfig,
    #[serde(default)]
    pub nodewise: NodewiseConfig,
}

impl EstimatorSpec {
    pub fn new(variant: EstimatorVariant, penalty: Penalty, radius: f64) -> Self {
        Self {
            variant,
            penalty,
            radius: RadiusSpec::Fixed(radius),
            solver: AdmmConfig {
                radius,
                ..AdmmConfig::default()
            },
            nodewise: NodewiseConfig::default(),
        }
    }

    pub fn with_solver(mut self, solver: AdmmConfig) -> Self {
        self.solver = solver;
        if let RadiusSpec::Fixed(r) = self.radius {
            self.solver.radius = r;
        }
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        self.penalty = self.penalty.with_lambda(lambda)?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        match (self.variant, self.radius) {
            (EstimatorVariant::Nodewise, _) if self.penalty.kind() != PenaltyKind::L1 => {
                Err(Error::Config("nodewise regression supports only the l1 penalty".into()))
            }
            (EstimatorVariant::Nodewise, RadiusSpec::PerNode { per_node_scale }) if !(per_node_scale > 0.0) => {
                Err(Error::Config("per_node_scale must be positive".into()))
            }
            (EstimatorVariant::Nodewise, _) => Ok(()),
            (_, RadiusSpec::PerNode { .. }) => Err(Error::Config(
                "per-node radii apply only to the nodewise estimator".into(),
            )),
            (_, RadiusSpec::Fixed(r)) => AdmmConfig {
                radius: r,
                ..self.solver
            }
            .validate(),
        }
    }

    fn admm_config(&self) -> AdmmConfig {
        match self.radius {
            RadiusSpec::Fixed(r) => AdmmConfig {
                radius: r,
                ..self.solver
            },
            RadiusSpec::PerNode { .. } => self.solver,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeSummary {
    pub iterations: usize,
    pub converged: bool,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateResult {
    #[serde(skip)]
    pub theta_hat: SymmetricMatrix,
    pub spec: EstimatorSpec,
    /// ADMM report for the graphical Lasso variants.
    pub report: Option<SolveReport>,
    /// Per-node inner-solver summaries for nodewise regression.
    pub nodes: Option<Vec<NodeSummary>>,
    /// Radius of the elementwise-max PSD projection (projected variant only).
    pub projection_radius: Option<f64>,
    #[serde(skip)]
    pub dual: Option<SymmetricMatrix>,
}

impl EstimateResult {
    pub fn converged(&self) -> bool {
        match (&self.report, &self.nodes) {
            (Some(r), _) => r.converged,
            (None, Some(nodes)) => nodes.iter().all(|n| n.converged),
            _ => true,
        }
    }
}

/// Result of [`linf_psd_project`].
#[derive(Debug, Clone, PartialEq)]
pub struct LinfProjection {
    pub matrix: SymmetricMatrix,
    /// Achieved `‖Γ⁺ − Γ‖_∞`.
    pub radius: f64,
}

/// Iteration cap of one feasibility test inside the bisection.
const FEASIBILITY_MAX_ITER: usize = 400;

/// Approximate `argmin_{Γ⁺ ⪰ 0} ‖Γ⁺ − Γ‖_∞` (elementwise max norm).
///
/// Bisection over the box radius t ∈ [0, |λ_min(Γ)|]; each radius is tested by
/// alternating projections between the box `Γ ± t` and the PSD cone, warm
/// started from the last PSD iterate. A radius is feasible once a PSD iterate
/// lands in the box; stagnating iterates mark it infeasible. `Γ + |λ_min|·I`
/// certifies the upper end of the bracket.
pub fn linf_psd_project(gamma: &SymmetricMatrix, tol: f64) -> Result<LinfProjection> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("projection tolerance must be positive, got {tol}")));
    }
    let evd = eigendecompose(gamma)?;
    let sigma_min = evd.min_value();
    if sigma_min >= 0.0 {
        return Ok(LinfProjection {
            matrix: gamma.clone(),
            radius: 0.0,
        });
    }
    let n = gamma.dim();
    let mut best = LinfProjection {
        matrix: gamma.map_indexed(|i, j, v| if i == j { v - sigma_min } else { v }),
        radius: -sigma_min,
    };
    let mut lo = 0.0;
    let mut hi = -sigma_min;
    let mut warm = psd_project_frobenius(gamma)?;
    // Slack on the box test so round-off in the PSD reconstruction does not
    // reject a point that is feasible in exact arithmetic.
    let box_slack = 0.25 * tol;
    while hi - lo > tol {
        let t = 0.5 * (lo + hi);
        match box_psd_feasible(gamma, t, box_slack, &warm)? {
            Some(y) => {
                let radius = (&y - gamma).max_abs();
                warm = y.clone();
                if radius <= best.radius {
                    best = LinfProjection { matrix: y, radius };
                }
                hi = t;
            }
            None => lo = t,
        }
    }
    debug_assert_eq!(best.matrix.dim(), n);
    Ok(best)
}

/// Alternating projections between `{X : |X − Γ| ≤ t}` and the PSD cone.
/// Returns a PSD point inside the (slightly relaxed) box, or `None`.
fn box_psd_feasible(
    gamma: &SymmetricMatrix,
    t: f64,
    slack: f64,
    start: &SymmetricMatrix,
) -> Result<Option<SymmetricMatrix>> {
    let mut y = start.clone();
    let mut prev_gap = f64::INFINITY;
    for k in 0..FEASIBILITY_MAX_ITER {
        if (&y - gamma).max_abs() <= t + slack {
            return Ok(Some(y));
        }
        let x = y.zip_map(gamma, |v, g| v.clamp(g - t, g + t));
        let evd = eigendecompose(&x)?;
        if evd.min_value() >= 0.0 {
            return Ok(Some(x));
        }
        let y_next = evd.map_values(|v| v.max(0.0));
        let gap = (&x - &y_next).frobenius_norm();
        y = y_next;
        if k >= 10 && gap >= (1.0 - 1e-3) * prev_gap {
            return Ok(None);
        }
        prev_gap = gap;
    }
    Ok(None)
}

/// Graphical Lasso with a spectral-norm side constraint. The projected variant
/// first replaces Γ by its elementwise-max PSD projection.
pub fn glasso(gamma: &SymmetricMatrix, spec: &EstimatorSpec) -> Result<EstimateResult> {
    glasso_path(gamma, spec, &[spec.penalty.lambda()])?.remove(0)
}

/// Graphical Lasso along a λ path, warm-starting each solve from the previous
/// one. Each entry is the result for the corresponding λ; solver failures are
/// reported per entry.
pub fn glasso_path(
    gamma: &SymmetricMatrix,
    spec: &EstimatorSpec,
    lambdas: &[f64],
) -> Result<Vec<Result<EstimateResult>>> {
    spec.validate()?;
    let (input, projection_radius) = match spec.variant {
        EstimatorVariant::NonprojGlasso => (None, None),
        EstimatorVariant::ProjGlasso => {
            let p = linf_psd_project(gamma, crate::config::Tolerances::default().linf_radius)?;
            (Some(p.matrix), Some(p.radius))
        }
        EstimatorVariant::Nodewise => {
            return Err(Error::Config("glasso called with the nodewise variant".into()))
        }
    };
    let input = input.as_ref().unwrap_or(gamma);
    let cfg = spec.admm_config();
    let mut warm: Option<(SymmetricMatrix, SymmetricMatrix)> = None;
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let s = match spec.with_lambda(lambda) {
            Ok(s) => s,
            Err(e) => {
                out.push(Err(e));
                continue;
            }
        };
        let solved = SpectralAdmm::new(input, s.penalty, cfg).and_then(|solver| match &warm {
            Some((theta, dual)) => solver.with_start(theta.clone(), Some(dual.clone())),
            None => Ok(solver),
        });
        let result = solved.and_then(|mut solver| {
            let report = solver.iterate(|_, _| {})?;
            let v = solver.v().clone();
            let (theta, dual) = solver.into_parts();
            let theta_hat = with_zero_pattern(&theta, &v);
            let fit = EstimateResult {
                theta_hat,
                spec: s,
                report: Some(report),
                nodes: None,
                projection_radius,
                dual: Some(dual.clone()),
            };
            Ok((fit, theta, dual))
        });
        match result {
            Ok((r, theta, dual)) => {
                warm = Some((theta, dual));
                out.push(Ok(r));
            }
            Err(e) => out.push(Err(e)),
        }
    }
    Ok(out)
}

/// Θ with the exact off-diagonal zeros of the penalty-prox iterate V. At a
/// converged point the two differ by the primal residual; Θ alone carries
/// round-off where V is exactly sparse.
fn with_zero_pattern(theta: &SymmetricMatrix, v: &SymmetricMatrix) -> SymmetricMatrix {
    theta.map_indexed(|i, j, t| if i != j && v.get(i, j) == 0.0 { 0.0 } else { t })
}

/// Oracle per-node ℓ1 norms `‖β*_j‖₁` with `β*_j = −Θ*_{−j,j} / Θ*_jj`.
pub fn oracle_node_l1(theta_star: &SymmetricMatrix) -> Vec<f64> {
    let n = theta_star.dim();
    (0..n)
        .map(|j| {
            let d = theta_star.get(j, j);
            (0..n)
                .filter(|&i| i != j)
                .map(|i| (theta_star.get(i, j) / d).abs())
                .sum()
        })
        .collect()
}

/// Nodewise regression. `oracle` is required when the radius is per node.
pub fn nodewise(
    gamma: &SymmetricMatrix,
    spec: &EstimatorSpec,
    oracle: Option<&SymmetricMatrix>,
) -> Result<EstimateResult> {
    let mut solver = NodewiseSolver::new(gamma, spec, oracle)?;
    solver.solve(spec.penalty.lambda())
}

/// Nodewise regression keeping each node's coefficients between calls, so a
/// λ path can be warm started.
pub struct NodewiseSolver<'a> {
    gamma: &'a SymmetricMatrix,
    spec: EstimatorSpec,
    radii: Vec<f64>,
    step: f64,
    betas: Vec<Vec<f64>>,
}

impl<'a> NodewiseSolver<'a> {
    pub fn new(gamma: &'a SymmetricMatrix, spec: &EstimatorSpec, oracle: Option<&SymmetricMatrix>) -> Result<Self> {
        if spec.variant != EstimatorVariant::Nodewise {
            return Err(Error::Config("nodewise solver requires the nodewise variant".into()));
        }
        spec.validate()?;
        gamma.check_finite()?;
        let n = gamma.dim();
        for j in 0..n {
            if !(gamma.get(j, j) > 0.0) {
                return Err(Error::Input(format!(
                    "diagonal entry {j} of the covariance input is not positive"
                )));
            }
        }
        let radii = match spec.radius {
            RadiusSpec::Fixed(r) => {
                if !(r > 0.0) {
                    return Err(Error::Config(format!("R must be positive, got {r}")));
                }
                vec![r; n]
            }
            RadiusSpec::PerNode { per_node_scale } => {
                let oracle = oracle.ok_or_else(|| {
                    Error::Config("per-node radius requires the oracle precision matrix".into())
                })?;
                if oracle.dim() != n {
                    return Err(Error::Input("oracle dimension does not match the input".into()));
                }
                oracle_node_l1(oracle).into_iter().map(|v| per_node_scale * v).collect()
            }
        };
        // The spectral norm of Γ bounds that of every principal submatrix.
        let step = 1.0 / (spectral_norm(gamma)? + 1e-6);
        Ok(Self {
            gamma,
            spec: *spec,
            radii,
            step,
            betas: vec![vec![0.0; n]; n],
        })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn solve(&mut self, lambda: f64) -> Result<EstimateResult> {
        let spec = self.spec.with_lambda(lambda)?;
        let n = self.gamma.dim();
        let mut tilde = vec![vec![0.0; n]; n]; // tilde[j] = column j of Θ̃
        let mut nodes = Vec::with_capacity(n);
        for j in 0..n {
            let (iterations, converged) = self.regress(j, lambda, spec.nodewise);
            let beta = &self.betas[j];
            let fitted: f64 = (0..n).filter(|&i| i != j).map(|i| self.gamma.get(i, j) * beta[i]).sum();
            let resid = self.gamma.get(j, j) - fitted;
            if !(resid > 0.0) {
                return Err(Error::DegenerateNode {
                    node: j,
                    residual_variance: resid,
                });
            }
            let a = -1.0 / resid;
            for i in 0..n {
                tilde[j][i] = if i == j { -a } else { a * beta[i] };
            }
            nodes.push(NodeSummary {
                iterations,
                converged,
                radius: self.radii[j],
            });
        }
        let theta_hat = SymmetricMatrix::from_lower_fn(n, |i, j| {
            if i == j {
                tilde[j][j]
            } else {
                // Θ̃_ij = tilde[j][i], Θ̃_ji = tilde[i][j].
                let (x, y) = (tilde[j][i], tilde[i][j]);
                if y.abs() < x.abs() {
                    y
                } else {
                    x
                }
            }
        });
        Ok(EstimateResult {
            theta_hat,
            spec,
            report: None,
            nodes: Some(nodes),
            projection_radius: None,
            dual: None,
        })
    }

    /// Projected proximal gradient for
    /// `min_{‖β‖₁ ≤ R_j} ½βᵀΓ_{−j,−j}β − ⟨Γ_{−j,j}, β⟩ + λ‖β‖₁`, with β_j pinned at 0.
    fn regress(&mut self, j: usize, lambda: f64, cfg: NodewiseConfig) -> (usize, bool) {
        let n = self.gamma.dim();
        let radius = self.radii[j];
        let beta = &mut self.betas[j];
        if radius <= 0.0 {
            beta.iter_mut().for_each(|b| *b = 0.0);
            return (0, true);
        }
        let step = self.step;
        let thresh = step * lambda;
        let gamma = self.gamma.as_mat();
        let mut grad = vec![0.0; n];
        let mut next = vec![0.0; n];
        for it in 1..=cfg.max_iter {
            // grad = Γ β − Γ_{·,j}, using only the nonzero coefficients.
            for i in 0..n {
                grad[i] = -gamma[(i, j)];
            }
            for (k, &b) in beta.iter().enumerate() {
                if b != 0.0 {
                    let col = gamma.col(k);
                    for i in 0..n {
                        grad[i] += col[i] * b;
                    }
                }
            }
            for i in 0..n {
                next[i] = if i == j {
                    0.0
                } else {
                    let z = beta[i] - step * grad[i];
                    z.signum() * (z.abs() - thresh).max(0.0)
                };
            }
            l1_ball_project(&mut next, radius);
            let change = next
                .iter()
                .zip(beta.iter())
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            beta.copy_from_slice(&next);
            if change < cfg.tol {
                return (it, true);
            }
        }
        (cfg.max_iter, false)
    }
}

/// In-place Euclidean projection onto `{x : ‖x‖₁ ≤ radius}`.
pub fn l1_ball_project(x: &mut [f64], radius: f64) {
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    if l1 <= radius {
        return;
    }
    let mut u: Vec<f64> = x.iter().map(|v| v.abs()).filter(|&v| v > 0.0).collect();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cum += uk;
        let cand = (cum - radius) / (k + 1) as f64;
        if uk > cand {
            tau = cand;
        } else {
            break;
        }
    }
    for v in x.iter_mut() {
        *v = v.signum() * (v.abs() - tau).max(0.0);
    }
}

/// Dispatches to [`glasso`] or [`nodewise`].
pub fn estimate(
    gamma: &SymmetricMatrix,
    spec: &EstimatorSpec,
    oracle: Option<&SymmetricMatrix>,
) -> Result<EstimateResult> {
    match spec.variant {
        EstimatorVariant::Nodewise => nodewise(gamma, spec, oracle),
        _ => glasso(gamma, spec),
    }
}

/// Fits every λ in `lambdas`, warm-starting each from the previous fit.
/// Per-λ failures are returned in place; setup errors abort.
pub fn estimate_path(
    gamma: &SymmetricMatrix,
    spec: &EstimatorSpec,
    lambdas: &[f64],
    oracle: Option<&SymmetricMatrix>,
) -> Result<Vec<Result<EstimateResult>>> {
    match spec.variant {
        EstimatorVariant::Nodewise => {
            let mut solver = NodewiseSolver::new(gamma, spec, oracle)?;
            Ok(lambdas.iter().map(|&l| solver.solve(l)).collect())
        }
        _ => glasso_path(gamma, spec, lambdas),
    }
}
