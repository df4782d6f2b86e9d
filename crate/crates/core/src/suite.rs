//! Check registry, point sampling and suite execution.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::catalog::{self, ChartTarget, HypersurfaceTarget, Target, TargetKind};
use crate::chart::{covariant_derivative, divergence, metric_field, point_geometry, PointGeometry, SymTensorField};
use crate::codazzi::{codazzi_residual, harmonicity_diagnostics, make_field, AnalyticFunction, FieldKind};
use crate::config::{Strategy, SuiteConfig};
use crate::conformal::{
    eigenvalue_formula_residuals, lcf_reconstruction_residual, schouten, schouten_operator_identity_residual,
};
use crate::curvature_operator::{bridging_identities, min_sectional_curvature, operator_spectrum};
use crate::error::{GeomError, Result};
use crate::fd::FdSpec;
use crate::hypersurface::{
    induced_chart, second_fundamental_form, sff_field, simons_identity_residual, sphere_constraint_residual,
};
use crate::tensor::{norm_with, SymMatrix};
use crate::weitzenbock::{
    bochner_residual, frame_eigen, kato_gap, laplacian_pinching_gap, okumura_gap_with, q2_spectral_at, q_p_at,
    ricci_pinching_gap,
};

/// Random orthonormal pairs per point for the bridging identities.
pub const BRIDGING_PAIRS: usize = 20;
/// Steps for the convergence-order check (plain central differences).
pub const CONVERGENCE_STEPS: (f64, f64) = (0.02, 0.01);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Pass iff `|value| ≤ tolerance`.
    Equality,
    /// Pass iff `value ≥ −tolerance`.
    Inequality,
}

macro_rules! checks {
    ($( $id:ident => $name:literal, $tol:expr, $kind:ident, $desc:literal; )*) => {
        /// Every registered check.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum CheckId { $($id),* }

        impl CheckId {
            pub const ALL: &'static [CheckId] = &[$(CheckId::$id),*];

            pub fn name(self) -> &'static str {
                match self { $(CheckId::$id => $name),* }
            }

            pub fn default_tolerance(self) -> f64 {
                match self { $(CheckId::$id => $tol),* }
            }

            pub fn kind(self) -> CheckKind {
                match self { $(CheckId::$id => CheckKind::$kind),* }
            }

            pub fn description(self) -> &'static str {
                match self { $(CheckId::$id => $desc),* }
            }

            pub fn from_name(name: &str) -> Option<CheckId> {
                match name { $($name => Some(CheckId::$id),)* _ => None }
            }
        }
    };
}

checks! {
    RiemannSymmetries => "riemann_symmetries", 5e-5, Equality, "algebraic symmetries and first Bianchi identity of R_abcd";
    MetricCompatibility => "metric_compatibility", 1e-5, Equality, "max |nabla g|";
    ConstantCurvature => "constant_curvature", 1e-4, Equality, "sectional curvature and Ricci tensor against the known constant curvature";
    ScalarCurvature => "scalar_curvature", 1e-3, Equality, "scalar curvature against n(n-1)K";
    ConvergenceOrder => "convergence_order", 0.5, Equality, "error ratio of the curvature tensor under step halving, minus 4";
    BridgingIdentities => "bridging_identities", 1e-4, Equality, "g(R(theta),theta) = 2 sec and Ric(X,X) = sum of sectional curvatures";
    SelfAdjointness => "self_adjointness", 1e-8, Equality, "asymmetry of the curvature operator matrix on traceless 2-tensors";
    OperatorSectionalChain => "operator_sectional_chain", 1e-4, Inequality, "curvature operator nonnegative implies min sectional curvature >= 0";
    LcfReconstruction => "lcf_reconstruction", 1e-4, Equality, "R_abcd against its reconstruction from Ric and s (negative control on non-LCF charts)";
    EigenvalueFormulas => "eigenvalue_formulas", 1e-4, Equality, "sectional curvature from Ricci and Schouten eigenvalues";
    SchoutenIdentity => "schouten_identity", 1e-4, Equality, "R_ijkl theta^jk theta^il = 2 S_ij theta^ik theta^j_k";
    SchoutenOperatorChain => "schouten_operator_chain", 1e-8, Inequality, "Schouten nonnegative implies curvature operator nonnegative";
    QFormsAgree => "q_forms_agree", 1e-8, Equality, "general and spectral forms of Q_2 on a tensor diagonal in the Ricci frame";
    Okumura => "okumura", 1e-12, Inequality, "cubic trace bound on the traceless Ricci tensor";
    Kato => "kato", 1e-10, Inequality, "|nabla T|^2 - |d|T||^2 over the Codazzi fields";
    Bochner => "bochner", 1e-4, Equality, "1/2 Lap |T|^2 - Q(T,T) - |nabla T|^2 over the Codazzi fields";
    Pinching => "pinching", 1e-4, Inequality, "Ricci pinching lower bounds for Q_2(Ric) and 1/2 Lap |Ric|^2";
    Codazzi => "codazzi", 1e-5, Equality, "Codazzi residual of each constructed field";
    DivergenceIdentity => "divergence_identity", 2e-5, Equality, "delta T + d trace T for Codazzi 2-tensors";
    HarmonicForms => "harmonic_forms", 1e-4, Equality, "d^nabla T and delta T for constant-trace Codazzi 2-tensors";
    SffNorm => "sff_norm", 1e-5, Equality, "|S|^2 against its known constant";
    MeanCurvature => "mean_curvature", 1e-8, Equality, "mean curvature of a minimal hypersurface";
    SphereConstraint => "sphere_constraint", 1e-10, Equality, "| |F| - 1 |";
    CodazziOfS => "codazzi_of_S", 1e-4, Equality, "Codazzi residual of the second fundamental form";
    DivergenceOfS => "divergence_of_S", 1e-4, Equality, "|delta S|";
    SimonsIdentity => "simons_identity", 1e-4, Equality, "1/2 Lap |S|^2 - |S|^2 (n - |S|^2) - |nabla S|^2";
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for CheckId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inapplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub target: String,
    pub check: CheckId,
    pub point_index: usize,
    pub point: Vec<f64>,
    pub kind: CheckKind,
    /// Residual (equalities) or gap (inequalities).
    pub value: Option<f64>,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetRecord {
    pub name: String,
    pub kind: &'static str,
    pub dim: usize,
    pub domain_lo: Vec<f64>,
    pub domain_hi: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub targets: Vec<TargetRecord>,
    pub records: Vec<CheckRecord>,
}

/// What a single check produced at a point.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Value {
        value: f64,
        note: String,
    },
    /// A value judged against a record-specific tolerance and kind.
    Custom {
        value: f64,
        kind: CheckKind,
        tolerance: f64,
        note: String,
    },
    Inapplicable(String),
    Error(String),
}

impl Outcome {
    fn value(value: f64) -> Self {
        Outcome::Value {
            value,
            note: String::new(),
        }
    }

    fn noted(value: f64, note: impl Into<String>) -> Self {
        Outcome::Value {
            value,
            note: note.into(),
        }
    }

    fn from_err(e: GeomError) -> Self {
        if e.is_precondition() {
            Outcome::Inapplicable(e.to_string())
        } else {
            Outcome::Error(e.to_string())
        }
    }
}

fn outcome(r: Result<f64>) -> Outcome {
    match r {
        Ok(v) => Outcome::value(v),
        Err(e) => Outcome::from_err(e),
    }
}

pub fn judge(kind: CheckKind, value: f64, tolerance: f64) -> Verdict {
    let ok = match kind {
        CheckKind::Equality => value.abs() <= tolerance,
        CheckKind::Inequality => value >= -tolerance,
    };
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Generator for one target: seeded by the suite seed, stream chosen by the target name.
pub fn target_rng(seed: u64, target: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(target));
    rng
}

/// Generator for the random inputs of one point.
fn point_rng(seed: u64, target: &str, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng.set_stream(fnv1a(target));
    rng
}

/// Distance from the boundary that every check at a sampled point needs.
pub fn sampling_margin(fd: &FdSpec) -> f64 {
    let nested = fd.nested();
    // outer second derivative, the jet of the field it differentiates, the
    // geometry under that field and the parameter shrink of induced charts
    let chart = 3.0 * (nested.step + nested.field_step + fd.step.max(fd.field_step));
    // Simons: Laplacian over the jet of the second fundamental form
    let surface = 6.0 * nested.field_step.max(nested.step);
    chart.max(surface).max(3.0 * CONVERGENCE_STEPS.0) + nested.field_step
}

pub fn sample_points(target: &Target, cfg: &SuiteConfig, fixed: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    match cfg.sampling.strategy {
        Strategy::Fixed => Ok(fixed.to_vec()),
        Strategy::Uniform => {
            let margin = sampling_margin(&cfg.fd);
            let domain = target.domain().shrink(margin).ok_or_else(|| {
                GeomError::UnsupportedConstruction(format!("domain of {} too small for margin {margin}", target.name))
            })?;
            let mut rng = target_rng(cfg.sampling.seed, &target.name);
            Ok((0..cfg.sampling.points_per_target)
                .map(|_| {
                    domain
                        .lo
                        .iter()
                        .zip(&domain.hi)
                        .map(|(lo, hi)| rng.random_range(*lo..*hi))
                        .collect()
                })
                .collect())
        }
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Random spanning pairs for planes.
pub fn random_pairs(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    (0..count)
        .map(|_| (random_vector(rng, n), random_vector(rng, n)))
        .collect()
}

/// `Σ c_ab e_a ⊗ e_b` in covariant components for a `g`-orthonormal frame `e`.
pub fn frame_form(geom: &PointGeometry, frame: &[Vec<f64>], c: &SymMatrix) -> SymMatrix {
    let n = geom.dim();
    let lo: Vec<Vec<f64>> = frame.iter().map(|e| geom.g.mul_vec(e)).collect();
    SymMatrix::from_fn(n, |i, j| {
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += c.get(a, b) * lo[a][i] * lo[b][j];
            }
        }
        s
    })
}

/// A random traceless symmetric tensor.
pub fn random_traceless(rng: &mut ChaCha8Rng, geom: &PointGeometry) -> SymMatrix {
    let n = geom.dim();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(-1.0..1.0);
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    let mean = (0..n).map(|i| entries[i * n + i]).sum::<f64>() / n as f64;
    for i in 0..n {
        entries[i * n + i] -= mean;
    }
    let c = SymMatrix::symmetric_part(n, &entries);
    frame_form(geom, &geom.orthonormal_frame(), &c)
}

/// A random traceless tensor diagonal in the Ricci eigenframe.
pub fn random_ricci_diagonal(rng: &mut ChaCha8Rng, geom: &PointGeometry) -> Result<SymMatrix> {
    let n = geom.dim();
    let (_, frame) = frame_eigen(&geom.ricci, geom)?;
    let mut lam = random_vector(rng, n);
    let mean = lam.iter().sum::<f64>() / n as f64;
    lam.iter_mut().for_each(|l| *l -= mean);
    Ok(frame_form(geom, &frame, &SymMatrix::diag(&lam)))
}

struct ChartContext<'a> {
    target: &'a ChartTarget,
    fields: Vec<SymTensorField>,
    /// `Hess (x¹)³`: Codazzi with non-constant trace, used only for the divergence identity.
    extra_codazzi: Option<SymTensorField>,
    ricci: Option<SymTensorField>,
    fd: FdSpec,
}

/// Steps for second derivatives of a catalog field: the Ricci field, itself a
/// finite-difference result, is differentiated with the coarser field step.
pub fn laplacian_fd(field: &SymTensorField, fd: &FdSpec) -> FdSpec {
    if field.name() == catalog::RICCI_FIELD {
        fd.coarse_fields()
    } else {
        *fd
    }
}

fn max_over<F>(fields: &[SymTensorField], mut f: F) -> Outcome
where
    F: FnMut(&SymTensorField) -> Result<f64>,
{
    let mut worst: Option<(f64, String)> = None;
    let mut skipped = Vec::new();
    for field in fields {
        match f(field) {
            Ok(v) => {
                if worst.as_ref().is_none_or(|(w, _)| v.abs() > w.abs()) {
                    worst = Some((v, field.name().to_string()));
                }
            }
            Err(e) if e.is_precondition() => skipped.push(format!("{}: {e}", field.name())),
            Err(e) => return Outcome::Error(format!("{}: {e}", field.name())),
        }
    }
    finish_over(worst, skipped, "worst")
}

fn min_over<F>(fields: &[SymTensorField], mut f: F) -> Outcome
where
    F: FnMut(&SymTensorField) -> Result<f64>,
{
    let mut worst: Option<(f64, String)> = None;
    let mut skipped = Vec::new();
    for field in fields {
        match f(field) {
            Ok(v) => {
                if worst.as_ref().is_none_or(|(w, _)| v < *w) {
                    worst = Some((v, field.name().to_string()));
                }
            }
            Err(e) if e.is_precondition() => skipped.push(format!("{}: {e}", field.name())),
            Err(e) => return Outcome::Error(format!("{}: {e}", field.name())),
        }
    }
    finish_over(worst, skipped, "smallest")
}

fn finish_over(worst: Option<(f64, String)>, skipped: Vec<String>, label: &str) -> Outcome {
    match worst {
        Some((v, name)) => {
            let mut note = format!("{label}: {name}");
            if !skipped.is_empty() {
                note.push_str(&format!("; skipped {}", skipped.join("; ")));
            }
            Outcome::noted(v, note)
        }
        None if skipped.is_empty() => Outcome::Inapplicable("no fields".into()),
        None => Outcome::Inapplicable(skipped.join("; ")),
    }
}

fn rank2(fields: &[SymTensorField]) -> Vec<SymTensorField> {
    fields.iter().filter(|f| f.rank() == 2).cloned().collect()
}

fn constant_curvature_residual(geom: &PointGeometry, k: f64, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
    let n = geom.dim();
    let frame = geom.orthonormal_frame();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((geom.riemann_form(&frame[i], &frame[j], &frame[i], &frame[j]) - k).abs());
        }
    }
    for (x, y) in pairs {
        let s = crate::curvature_operator::sectional_curvature(geom, x, y)?;
        worst = worst.max((s - k).abs());
    }
    let expect = geom.g.scale((n as f64 - 1.0) * k);
    for (a, b) in geom.ricci.data().iter().zip(expect.data()) {
        worst = worst.max((a - b).abs());
    }
    Ok(worst)
}

/// Max-norm distance of `R_abcd` from `K (g_ac g_bd − g_ad g_bc)`.
pub fn constant_curvature_defect(geom: &PointGeometry, k: f64) -> f64 {
    let n = geom.dim();
    let g = |a: usize, b: usize| geom.g.get(a, b);
    let r = geom.riemann_low.data();
    let mut worst = 0.0_f64;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let exact = k * (g(a, c) * g(b, d) - g(a, d) * g(b, c));
                    worst = worst.max((r[((a * n + b) * n + c) * n + d] - exact).abs());
                }
            }
        }
    }
    worst
}

/// Curvature errors at the two convergence steps (plain central differences)
/// and their ratio minus 4.
pub fn convergence_order(chart: &crate::chart::ChartManifold, x: &[f64], k: f64) -> Result<(f64, f64, f64)> {
    let err = |h: f64| -> Result<f64> {
        let fd = FdSpec {
            step: h,
            field_step: h,
            richardson: false,
        };
        Ok(constant_curvature_defect(&point_geometry(chart, x, &fd)?, k))
    };
    let e1 = err(CONVERGENCE_STEPS.0)?;
    let e2 = err(CONVERGENCE_STEPS.1)?;
    Ok((e1, e2, e1 / e2 - 4.0))
}

fn run_chart_check(
    id: CheckId,
    ctx: &ChartContext<'_>,
    x: &[f64],
    geom: &PointGeometry,
    rng: &mut ChaCha8Rng,
) -> Outcome {
    let chart = &ctx.target.chart;
    let props = &ctx.target.properties;
    let fd = &ctx.fd;
    let n = chart.dim();
    match id {
        CheckId::RiemannSymmetries => Outcome::value(geom.riemann_symmetry_defect()),
        CheckId::MetricCompatibility => {
            outcome(covariant_derivative(&metric_field(chart), chart, x, fd).map(|t| t.max_abs()))
        }
        CheckId::ConstantCurvature => match props.constant_curvature {
            Some(k) => {
                let pairs = random_pairs(rng, n, BRIDGING_PAIRS);
                outcome(constant_curvature_residual(geom, k, &pairs))
            }
            None => Outcome::Inapplicable("curvature is not constant".into()),
        },
        CheckId::ScalarCurvature => match props.constant_curvature {
            Some(k) => Outcome::value(geom.scalar - (n * (n - 1)) as f64 * k),
            None => Outcome::Inapplicable("curvature is not constant".into()),
        },
        CheckId::ConvergenceOrder => match props.constant_curvature {
            Some(k) if k != 0.0 => match convergence_order(chart, x, k) {
                Ok((e1, e2, v)) => Outcome::noted(
                    v,
                    format!(
                        "errors {e1:.3e} at h={} and {e2:.3e} at h={}",
                        CONVERGENCE_STEPS.0, CONVERGENCE_STEPS.1
                    ),
                ),
                Err(e) => Outcome::from_err(e),
            },
            _ => Outcome::Inapplicable("needs nonzero constant curvature".into()),
        },
        CheckId::BridgingIdentities => {
            let pairs = random_pairs(rng, n, BRIDGING_PAIRS);
            match bridging_identities(geom, &pairs) {
                Ok(b) => Outcome::noted(
                    b.op_sec_residual.max(b.ricci_sum_residual),
                    format!(
                        "operator-sectional {:.3e}, ricci-sum {:.3e}",
                        b.op_sec_residual, b.ricci_sum_residual
                    ),
                ),
                Err(e) => Outcome::from_err(e),
            }
        }
        CheckId::SelfAdjointness => outcome(operator_spectrum(geom).map(|s| s.asymmetry)),
        CheckId::OperatorSectionalChain => match operator_spectrum(geom) {
            Ok(s) if s.classification.is_nonnegative() => {
                let pairs = random_pairs(rng, n, BRIDGING_PAIRS);
                outcome(min_sectional_curvature(geom, &pairs))
            }
            Ok(s) => Outcome::Inapplicable(format!("operator is {:?}", s.classification)),
            Err(e) => Outcome::from_err(e),
        },
        CheckId::LcfReconstruction => match lcf_reconstruction_residual(geom) {
            Ok(r) if props.conformally_flat => Outcome::value(r),
            Ok(r) => Outcome::Custom {
                value: r - crate::conformal::NON_LCF_FLOOR,
                kind: CheckKind::Inequality,
                tolerance: 0.0,
                note: format!(
                    "negative control: residual {r:.3e} must exceed {:e}",
                    crate::conformal::NON_LCF_FLOOR
                ),
            },
            Err(e) => Outcome::from_err(e),
        },
        CheckId::EigenvalueFormulas => match eigenvalue_formula_residuals(geom) {
            Ok(r) => Outcome::noted(
                r.ricci_formula_residual.max(r.schouten_formula_residual),
                format!(
                    "ricci form {:.3e}, schouten form {:.3e}, (n-2)^-1-scaled schouten form {:.3e}",
                    r.ricci_formula_residual, r.schouten_formula_residual, r.scaled_schouten_residual
                ),
            ),
            Err(e) => Outcome::from_err(e),
        },
        CheckId::SchoutenIdentity => {
            let theta = random_traceless(rng, geom);
            outcome(schouten_operator_identity_residual(geom, &theta))
        }
        CheckId::SchoutenOperatorChain => {
            if n < 3 {
                return Outcome::Inapplicable("needs n >= 3".into());
            }
            match lcf_reconstruction_residual(geom) {
                Ok(r) if r > crate::conformal::LCF_GATE => {
                    return Outcome::Inapplicable(format!("not conformally flat (residual {r:.3e})"))
                }
                Err(e) => return Outcome::from_err(e),
                _ => {}
            }
            let sch = match schouten(geom).and_then(|s| frame_eigen(&s, geom)) {
                Ok((eigs, _)) => eigs,
                Err(e) => return Outcome::from_err(e),
            };
            if sch[0] < -crate::curvature_operator::POSITIVITY_TOL {
                return Outcome::Inapplicable(format!("Schouten tensor has eigenvalue {:.3e}", sch[0]));
            }
            match operator_spectrum(geom) {
                Ok(s) => Outcome::noted(s.eigenvalues[0], format!("{:?}", s.classification)),
                Err(e) => Outcome::from_err(e),
            }
        }
        CheckId::QFormsAgree => {
            let t = match random_ricci_diagonal(rng, geom) {
                Ok(t) => t,
                Err(e) => return Outcome::from_err(e),
            };
            outcome(q_p_at(&t.to_tensor(), geom).and_then(|a| Ok(a - q2_spectral_at(&t, geom)?)))
        }
        CheckId::Okumura => {
            let rbar = match crate::codazzi::traceless_part(&geom.ricci.to_tensor(), &geom.g)
                .and_then(|t| t.to_sym_matrix())
            {
                Ok(t) => t,
                Err(e) => return Outcome::from_err(e),
            };
            outcome(okumura_gap_with(&rbar, &geom.g_inv))
        }
        CheckId::Kato => min_over(&ctx.fields, |f| kato_gap(f, chart, x, fd)),
        CheckId::Bochner => max_over(&ctx.fields, |f| {
            bochner_residual(f, chart, x, &laplacian_fd(f, fd)).map(|b| b.residual)
        }),
        CheckId::Pinching => {
            if n < 3 {
                return Outcome::Inapplicable("needs n >= 3".into());
            }
            match lcf_reconstruction_residual(geom) {
                Ok(r) if r > crate::conformal::LCF_GATE => {
                    return Outcome::Inapplicable(format!("not conformally flat (residual {r:.3e})"))
                }
                Err(e) => return Outcome::from_err(e),
                _ => {}
            }
            let algebraic = match ricci_pinching_gap(geom) {
                Ok(v) => v,
                Err(e) => return Outcome::from_err(e),
            };
            match &ctx.ricci {
                Some(ric) => match laplacian_pinching_gap(ric, chart, x, &laplacian_fd(ric, fd)) {
                    Ok(v) => Outcome::noted(
                        algebraic.min(v),
                        format!("Q2 bound gap {algebraic:.3e}, Laplacian bound gap {v:.3e}"),
                    ),
                    Err(e) if e.is_precondition() => Outcome::noted(algebraic, format!("Q2 bound only; {e}")),
                    Err(e) => Outcome::from_err(e),
                },
                None => Outcome::noted(algebraic, "Q2 bound only; Ricci tensor is not Codazzi here"),
            }
        }
        CheckId::Codazzi => max_over(&ctx.fields, |f| codazzi_residual(f, chart, x, fd)),
        CheckId::DivergenceIdentity => {
            let mut fields = rank2(&ctx.fields);
            fields.extend(ctx.extra_codazzi.clone());
            max_over(&fields, |f| {
                let d = harmonicity_diagnostics(f, chart, x, fd)?;
                d.divergence_identity_residual.ok_or(GeomError::NotCodazzi {
                    residual: d.codazzi_residual,
                })
            })
        }
        CheckId::HarmonicForms => max_over(&rank2(&ctx.fields), |f| {
            let d = harmonicity_diagnostics(f, chart, x, fd)?;
            if d.trace_gradient_norm > crate::weitzenbock::PRECONDITION_TOL {
                return Err(GeomError::NonConstantTrace {
                    gradient: d.trace_gradient_norm,
                });
            }
            Ok(d.d_nabla_norm.max(d.divergence_norm))
        }),
        _ => Outcome::Inapplicable("hypersurface check on a chart target".into()),
    }
}

fn run_hypersurface_check(id: CheckId, target: &HypersurfaceTarget, u: &[f64], fd: &FdSpec) -> Outcome {
    let h = &target.surface;
    let sff = || second_fundamental_form(h, u, fd);
    match id {
        CheckId::SffNorm => outcome(sff().map(|d| d.sff_norm_sq - target.sff_norm_sq)),
        CheckId::MeanCurvature => outcome(sff().map(|d| d.mean_curvature)),
        CheckId::SphereConstraint => outcome(sphere_constraint_residual(h, u)),
        CheckId::CodazziOfS => {
            outcome(induced_chart(h, fd).and_then(|c| codazzi_residual(&sff_field(h, fd), &c, u, fd)))
        }
        CheckId::DivergenceOfS => outcome(induced_chart(h, fd).and_then(|c| {
            let d = divergence(&sff_field(h, fd), &c, u, fd)?;
            norm_with(&d, &c.metric_at(u).inverse()?)
        })),
        CheckId::SimonsIdentity => match simons_identity_residual(h, u, &fd.nested()) {
            Ok(b) => Outcome::noted(
                b.residual,
                format!("lhs {:.3e}, q {:.3e}, grad {:.3e}", b.lhs, b.q_term, b.grad_term),
            ),
            Err(e) => Outcome::from_err(e),
        },
        _ => Outcome::Inapplicable("chart check on a hypersurface target".into()),
    }
}

fn record(target: &str, id: CheckId, index: usize, point: &[f64], tolerance: f64, out: Outcome) -> CheckRecord {
    let (kind, value, tolerance, verdict, note) = match out {
        Outcome::Value { value, note } => {
            let kind = id.kind();
            if value.is_finite() {
                (kind, Some(value), tolerance, judge(kind, value, tolerance), note)
            } else {
                (
                    kind,
                    None,
                    tolerance,
                    Verdict::Fail,
                    format!("non-finite value {value}"),
                )
            }
        }
        Outcome::Custom {
            value,
            kind,
            tolerance,
            note,
        } => (kind, Some(value), tolerance, judge(kind, value, tolerance), note),
        Outcome::Inapplicable(note) => (id.kind(), None, tolerance, Verdict::Inapplicable, note),
        Outcome::Error(note) => (id.kind(), None, tolerance, Verdict::Fail, note),
    };
    CheckRecord {
        target: target.to_string(),
        check: id,
        point_index: index,
        point: point.to_vec(),
        kind,
        value,
        tolerance,
        verdict,
        note,
    }
}

fn chart_context<'a>(target: &'a ChartTarget, fd: &FdSpec) -> Result<ChartContext<'a>> {
    let fields = catalog::codazzi_fields(target, fd)?;
    let ricci = fields.iter().find(|f| f.name() == catalog::RICCI_FIELD).cloned();
    let extra_codazzi = if target.properties.euclidean {
        Some(make_field(FieldKind::Hessian {
            chart: target.chart.clone(),
            function: AnalyticFunction::cube(target.chart.dim()),
        })?)
    } else {
        None
    };
    Ok(ChartContext {
        target,
        fields,
        extra_codazzi,
        ricci,
        fd: *fd,
    })
}

fn run_target(target: &Target, points: &[Vec<f64>], cfg: &SuiteConfig) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    let fd = &cfg.fd;
    match &target.kind {
        TargetKind::Chart(ct) => {
            let ctx = chart_context(ct, fd);
            for (i, x) in points.iter().enumerate() {
                let mut rng = point_rng(cfg.sampling.seed, &target.name, i);
                let geom = point_geometry(&ct.chart, x, fd);
                for spec in &cfg.checks {
                    let o = match (&ctx, &geom) {
                        (Ok(ctx), Ok(geom)) => run_chart_check(spec.id, ctx, x, geom, &mut rng),
                        (Err(e), _) | (_, Err(e)) => Outcome::from_err(e.clone()),
                    };
                    out.push(record(&target.name, spec.id, i, x, spec.tolerance, o));
                }
            }
        }
        TargetKind::Hypersurface(ht) => {
            for (i, u) in points.iter().enumerate() {
                for spec in &cfg.checks {
                    let o = run_hypersurface_check(spec.id, ht, u, fd);
                    out.push(record(&target.name, spec.id, i, u, spec.tolerance, o));
                }
            }
        }
    }
    out
}

/// Runs every configured check at every sampled point of every target.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteResult> {
    let mut prepared = Vec::with_capacity(cfg.targets.len());
    for spec in &cfg.targets {
        let target = catalog::resolve(&spec.name).map_err(GeomError::UnsupportedConstruction)?;
        let points = sample_points(&target, cfg, &spec.points)?;
        prepared.push((target, points));
    }
    let mut records: Vec<CheckRecord> = std::thread::scope(|s| {
        let handles: Vec<_> = prepared
            .iter()
            .map(|(t, p)| s.spawn(move || run_target(t, p, cfg)))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("suite worker panicked"))
            .collect()
    });
    records.sort_by(|a, b| {
        (a.target.as_str(), a.check.name(), a.point_index).cmp(&(b.target.as_str(), b.check.name(), b.point_index))
    });
    let mut targets: Vec<TargetRecord> = prepared
        .into_iter()
        .map(|(t, points)| TargetRecord {
            kind: match t.kind {
                TargetKind::Chart(_) => "chart",
                TargetKind::Hypersurface(_) => "hypersurface",
            },
            dim: t.dim(),
            domain_lo: t.domain().lo.clone(),
            domain_hi: t.domain().hi.clone(),
            name: t.name,
            points,
        })
        .collect();
    targets.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(SuiteResult { targets, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_round_trip() {
        for &id in CheckId::ALL {
            assert_eq!(CheckId::from_name(id.name()), Some(id));
        }
        assert_eq!(CheckId::from_name("frobnicate"), None);
    }

    #[test]
    fn verdict_rules() {
        assert_eq!(judge(CheckKind::Equality, -1e-5, 1e-4), Verdict::Pass);
        assert_eq!(judge(CheckKind::Equality, 2e-4, 1e-4), Verdict::Fail);
        assert_eq!(judge(CheckKind::Inequality, -1e-5, 1e-4), Verdict::Pass);
        assert_eq!(judge(CheckKind::Inequality, -2e-4, 1e-4), Verdict::Fail);
        assert_eq!(judge(CheckKind::Inequality, 5.0, 0.0), Verdict::Pass);
    }

    #[test]
    fn sampling_is_seeded() {
        let cfg = SuiteConfig::new(&["sphere:n=3"], &[CheckId::RiemannSymmetries]).unwrap();
        let t = catalog::resolve("sphere:n=3").unwrap();
        let a = sample_points(&t, &cfg, &[]).unwrap();
        let b = sample_points(&t, &cfg, &[]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
        let m = sampling_margin(&cfg.fd);
        assert!(a.iter().all(|p| t.domain().distance_to_boundary(p) >= m));
    }
}
