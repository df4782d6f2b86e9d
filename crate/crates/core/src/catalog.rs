//! Named charts and hypersurfaces with known geometry.
//!
//! Targets are addressed as `family:key=value,...`, e.g. `sphere:n=3`,
//! `sphere:n=2,r=2`, `clifford:n=4,k=2`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::chart::{ChartManifold, Domain, SymTensorField};
use crate::codazzi::{make_field, traceless_part, AnalyticFunction, FieldKind};
use crate::error::Result;
use crate::fd::FdSpec;
use crate::hypersurface::Hypersurface;
use crate::tensor::SymMatrix;

/// Metric step used inside Ricci fields, which are differenced again.
/// Polar angles stay this far from the poles.
const POLE_MARGIN: f64 = 0.5;
const AZIMUTH_HALF_WIDTH: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChartProperties {
    /// Sectional curvature when it is constant.
    pub constant_curvature: Option<f64>,
    pub conformally_flat: bool,
    /// Metric is the identity matrix, so harmonic functions give traceless Hessians.
    pub euclidean: bool,
    /// Christoffel symbols vanish (constant metric).
    pub constant_metric: bool,
    /// Ricci tensor is a Codazzi tensor.
    pub codazzi_ricci: bool,
}

#[derive(Debug, Clone)]
pub struct ChartTarget {
    pub chart: ChartManifold,
    pub properties: ChartProperties,
}

#[derive(Debug, Clone)]
pub struct HypersurfaceTarget {
    pub surface: Hypersurface,
    /// `||S||²`, constant on every catalog instance.
    pub sff_norm_sq: f64,
}

#[derive(Debug, Clone)]
pub enum TargetKind {
    Chart(ChartTarget),
    Hypersurface(HypersurfaceTarget),
}

#[derive(Debug, Clone)]
pub struct Target {
    pub name: String,
    pub kind: TargetKind,
}

impl Target {
    pub fn dim(&self) -> usize {
        match &self.kind {
            TargetKind::Chart(c) => c.chart.dim(),
            TargetKind::Hypersurface(h) => h.surface.dim(),
        }
    }

    pub fn domain(&self) -> &Domain {
        match &self.kind {
            TargetKind::Chart(c) => c.chart.domain(),
            TargetKind::Hypersurface(h) => h.surface.domain(),
        }
    }
}

/// Every shipped target name.
pub fn catalog_names() -> Vec<String> {
    let mut v: Vec<String> = Vec::new();
    for n in 2..=4 {
        v.push(format!("euclidean:n={n}"));
    }
    v.push("flat_torus:n=2".into());
    for n in 2..=4 {
        v.push(format!("sphere:n={n}"));
    }
    v.push("sphere:n=2,r=2".into());
    for n in 2..=3 {
        v.push(format!("hyperbolic:n={n}"));
    }
    v.push("cylinder:n=4".into());
    v.push("hyp_sphere:n=4".into());
    v.push("conformal:n=3".into());
    v.push("conformal:n=4".into());
    v.push("sphere_product:n=4".into());
    v.push("equator:n=2".into());
    v.push("equator:n=3".into());
    for (n, k) in [(2, 1), (3, 1), (4, 2)] {
        v.push(format!("clifford:n={n},k={k}"));
    }
    v
}

/// Parses `family:key=value,...`.
pub fn parse_name(name: &str) -> std::result::Result<(String, BTreeMap<String, String>), String> {
    let (family, rest) = match name.split_once(':') {
        Some((f, r)) => (f.trim(), r.trim()),
        None => (name.trim(), ""),
    };
    if family.is_empty() {
        return Err(format!("empty target family in {name:?}"));
    }
    let mut params = BTreeMap::new();
    for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| format!("parameter {part:?} in {name:?} is not key=value"))?;
        if params.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(format!("parameter {:?} repeated in {name:?}", k.trim()));
        }
    }
    Ok((family.to_string(), params))
}

struct Params<'a> {
    name: &'a str,
    map: BTreeMap<String, String>,
}

impl Params<'_> {
    fn take_usize(&mut self, key: &str) -> std::result::Result<Option<usize>, String> {
        self.map
            .remove(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| format!("{key}={v:?} in {:?} is not an integer", self.name))
            })
            .transpose()
    }

    fn take_f64(&mut self, key: &str) -> std::result::Result<Option<f64>, String> {
        self.map
            .remove(key)
            .map(|v| match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(format!("{key}={v:?} in {:?} is not a finite number", self.name)),
            })
            .transpose()
    }

    fn finish(self) -> std::result::Result<(), String> {
        match self.map.keys().next() {
            Some(k) => Err(format!("unknown parameter {k:?} in target {:?}", self.name)),
            None => Ok(()),
        }
    }
}

fn dim_in(name: &str, n: Option<usize>, allowed: &[usize]) -> std::result::Result<usize, String> {
    let n = n.ok_or_else(|| format!("target {name:?} needs n"))?;
    if !allowed.contains(&n) {
        return Err(format!("target {name:?}: n={n} not in {allowed:?}"));
    }
    Ok(n)
}

/// Resolves a target name to its chart or hypersurface.
pub fn resolve(name: &str) -> std::result::Result<Target, String> {
    let (family, map) = parse_name(name)?;
    let mut p = Params { name, map };
    let n = p.take_usize("n")?;
    let props = |constant_curvature, conformally_flat, codazzi_ricci| ChartProperties {
        constant_curvature,
        conformally_flat,
        euclidean: false,
        constant_metric: false,
        codazzi_ricci,
    };
    let (canonical, kind) = match family.as_str() {
        "euclidean" => {
            let n = dim_in(name, n, &[2, 3, 4, 5, 6])?;
            let properties = ChartProperties {
                euclidean: true,
                constant_metric: true,
                ..props(Some(0.0), true, true)
            };
            (format!("euclidean:n={n}"), chart(euclidean_chart(n), properties))
        }
        "flat_torus" => {
            let n = dim_in(name, n.or(Some(2)), &[2])?;
            let properties = ChartProperties {
                constant_metric: true,
                ..props(Some(0.0), true, true)
            };
            (format!("flat_torus:n={n}"), chart(flat_torus_chart(), properties))
        }
        "sphere" => {
            let n = dim_in(name, n, &[2, 3, 4, 5])?;
            let r = p.take_f64("r")?.unwrap_or(1.0);
            if r <= 0.0 {
                return Err(format!("target {name:?}: radius must be positive"));
            }
            let canonical = if r == 1.0 {
                format!("sphere:n={n}")
            } else {
                format!("sphere:n={n},r={r}")
            };
            (
                canonical,
                chart(sphere_chart(n, r), props(Some(1.0 / (r * r)), true, true)),
            )
        }
        "hyperbolic" => {
            let n = dim_in(name, n, &[2, 3, 4])?;
            (
                format!("hyperbolic:n={n}"),
                chart(hyperbolic_chart(n), props(Some(-1.0), true, true)),
            )
        }
        "cylinder" => {
            let n = dim_in(name, n.or(Some(4)), &[4])?;
            (
                format!("cylinder:n={n}"),
                chart(cylinder_chart(), props(None, true, true)),
            )
        }
        "hyp_sphere" => {
            let n = dim_in(name, n.or(Some(4)), &[4])?;
            (
                format!("hyp_sphere:n={n}"),
                chart(hyp_sphere_chart(), props(None, true, true)),
            )
        }
        "conformal" => {
            let n = dim_in(name, n, &[3, 4])?;
            (
                format!("conformal:n={n}"),
                chart(conformal_chart(n), props(None, true, false)),
            )
        }
        "sphere_product" => {
            let n = dim_in(name, n.or(Some(4)), &[4])?;
            (
                format!("sphere_product:n={n}"),
                chart(sphere_product_chart(), props(None, false, true)),
            )
        }
        "equator" => {
            let n = dim_in(name, n, &[2, 3, 4])?;
            let surface = equator(n).map_err(|e| e.to_string())?;
            (
                format!("equator:n={n}"),
                TargetKind::Hypersurface(HypersurfaceTarget {
                    surface,
                    sff_norm_sq: 0.0,
                }),
            )
        }
        "clifford" => {
            let n = dim_in(name, n, &[2, 3, 4, 5])?;
            let k = p.take_usize("k")?.ok_or_else(|| format!("target {name:?} needs k"))?;
            if k == 0 || k >= n {
                return Err(format!("target {name:?}: need 0 < k < n"));
            }
            let surface = clifford_torus(n, k).map_err(|e| e.to_string())?;
            (
                format!("clifford:n={n},k={k}"),
                TargetKind::Hypersurface(HypersurfaceTarget {
                    surface,
                    sff_norm_sq: n as f64,
                }),
            )
        }
        other => return Err(format!("unknown target family {other:?} in {name:?}")),
    };
    p.finish()?;
    Ok(Target { name: canonical, kind })
}

fn chart(chart: ChartManifold, properties: ChartProperties) -> TargetKind {
    TargetKind::Chart(ChartTarget { chart, properties })
}

fn angle_domain(m: usize) -> Domain {
    let mut lo = vec![POLE_MARGIN; m];
    let mut hi = vec![PI - POLE_MARGIN; m];
    lo[m - 1] = -AZIMUTH_HALF_WIDTH;
    hi[m - 1] = AZIMUTH_HALF_WIDTH;
    Domain::new(lo, hi)
}

/// `diag(1, sin²a₁, sin²a₁ sin²a₂, …)`, the round metric in nested angles.
fn round_metric_diag(a: &[f64]) -> Vec<f64> {
    let mut d = Vec::with_capacity(a.len());
    let mut w = 1.0;
    for (i, ai) in a.iter().enumerate() {
        d.push(w);
        if i + 1 < a.len() {
            w *= ai.sin().powi(2);
        }
    }
    d
}

/// Point of the unit `S^m ⊂ ℝ^{m+1}` at nested angles `a₁ … a_m`.
pub fn sphere_embedding(a: &[f64]) -> Vec<f64> {
    let m = a.len();
    let mut x = Vec::with_capacity(m + 1);
    let mut w = 1.0;
    for ai in a {
        x.push(w * ai.cos());
        w *= ai.sin();
    }
    x.push(w);
    x
}

pub fn euclidean_chart(n: usize) -> ChartManifold {
    ChartManifold::new(format!("euclidean:n={n}"), Domain::cube(n, -1.0, 1.0), move |_| {
        SymMatrix::identity(n)
    })
}

pub fn flat_torus_chart() -> ChartManifold {
    let g = SymMatrix::from_rows(2, vec![1.0, 0.3, 0.3, 2.0]).expect("symmetric");
    ChartManifold::new("flat_torus:n=2", Domain::cube(2, -1.0, 1.0), move |_| g.clone())
}

pub fn sphere_chart(n: usize, r: f64) -> ChartManifold {
    let name = if r == 1.0 {
        format!("sphere:n={n}")
    } else {
        format!("sphere:n={n},r={r}")
    };
    ChartManifold::new(name, angle_domain(n), move |a| {
        SymMatrix::diag(&round_metric_diag(a)).scale(r * r)
    })
}

/// Upper half-space, last coordinate positive.
pub fn hyperbolic_chart(n: usize) -> ChartManifold {
    let mut lo = vec![-1.0; n];
    let mut hi = vec![1.0; n];
    lo[n - 1] = 0.5;
    hi[n - 1] = 2.0;
    ChartManifold::new(format!("hyperbolic:n={n}"), Domain::new(lo, hi), move |x| {
        SymMatrix::identity(n).scale(1.0 / (x[n - 1] * x[n - 1]))
    })
}

/// `S¹ × S³`.
pub fn cylinder_chart() -> ChartManifold {
    let s3 = angle_domain(3);
    let domain = Domain::new(
        [vec![-1.0], s3.lo.clone()].concat(),
        [vec![1.0], s3.hi.clone()].concat(),
    );
    ChartManifold::new("cylinder:n=4", domain, |x| {
        let d = round_metric_diag(&x[1..]);
        SymMatrix::diag(&[1.0, d[0], d[1], d[2]])
    })
}

/// `H² × S²` with equal and opposite curvatures.
pub fn hyp_sphere_chart() -> ChartManifold {
    let domain = Domain::new(
        vec![-1.0, 0.5, POLE_MARGIN, -AZIMUTH_HALF_WIDTH],
        vec![1.0, 2.0, PI - POLE_MARGIN, AZIMUTH_HALF_WIDTH],
    );
    ChartManifold::new("hyp_sphere:n=4", domain, |x| {
        let h = 1.0 / (x[1] * x[1]);
        SymMatrix::diag(&[h, h, 1.0, x[2].sin().powi(2)])
    })
}

/// `e^{2f} δ` with `f = 0.3 sin x¹ + 0.2 x²x³ − 0.1 (xⁿ)²`.
pub fn conformal_chart(n: usize) -> ChartManifold {
    ChartManifold::new(format!("conformal:n={n}"), Domain::cube(n, -1.0, 1.0), move |x| {
        let f = 0.3 * x[0].sin() + 0.2 * x[1] * x[2] - 0.1 * x[n - 1] * x[n - 1];
        SymMatrix::identity(n).scale((2.0 * f).exp())
    })
}

/// `S² × S²`, Einstein but not conformally flat.
pub fn sphere_product_chart() -> ChartManifold {
    let s2 = angle_domain(2);
    let domain = Domain::new(
        [s2.lo.clone(), s2.lo.clone()].concat(),
        [s2.hi.clone(), s2.hi.clone()].concat(),
    );
    ChartManifold::new("sphere_product:n=4", domain, |x| {
        SymMatrix::diag(&[1.0, x[0].sin().powi(2), 1.0, x[2].sin().powi(2)])
    })
}

/// `S^n ⊂ S^{n+1}` as the last-coordinate-zero slice.
pub fn equator(n: usize) -> Result<Hypersurface> {
    Hypersurface::new(format!("equator:n={n}"), angle_domain(n), |u| {
        let mut x = sphere_embedding(u);
        x.push(0.0);
        x
    })
}

/// `S^k(r₁) × S^{n−k}(r₂)` with `r₁ = √(k/n)`, `r₂ = √((n−k)/n)`, in arc-length angles.
pub fn clifford_torus(n: usize, k: usize) -> Result<Hypersurface> {
    assert!(0 < k && k < n);
    let r1 = (k as f64 / n as f64).sqrt();
    let r2 = ((n - k) as f64 / n as f64).sqrt();
    let d1 = angle_domain(k);
    let d2 = angle_domain(n - k);
    let scale = |v: &[f64], r: f64| v.iter().map(|x| x * r).collect::<Vec<_>>();
    let domain = Domain::new(
        [scale(&d1.lo, r1), scale(&d2.lo, r2)].concat(),
        [scale(&d1.hi, r1), scale(&d2.hi, r2)].concat(),
    );
    Hypersurface::new(format!("clifford:n={n},k={k}"), domain, move |u| {
        let a: Vec<f64> = u[..k].iter().map(|v| v / r1).collect();
        let b: Vec<f64> = u[k..].iter().map(|v| v / r2).collect();
        let mut x = scale(&sphere_embedding(&a), r1);
        x.extend(scale(&sphere_embedding(&b), r2));
        x
    })
}

/// Codazzi fields exercised on a chart target.
pub fn codazzi_fields(target: &ChartTarget, fd: &FdSpec) -> Result<Vec<SymTensorField>> {
    let chart = &target.chart;
    let n = chart.dim();
    let props = &target.properties;
    let mut out = vec![make_field(FieldKind::MetricMultiple {
        chart: chart.clone(),
        factor: 2.0,
    })?];
    if props.euclidean {
        let mut fns = vec![AnalyticFunction::cubic_harmonic(n), AnalyticFunction::exp_cos(n)];
        if n >= 3 {
            fns.push(AnalyticFunction::triple_product(n));
        }
        for function in &fns {
            out.push(make_field(FieldKind::Hessian {
                chart: chart.clone(),
                function: function.clone(),
            })?);
        }
        out.push(make_field(FieldKind::ThirdDerivative {
            chart: chart.clone(),
            function: AnalyticFunction::exp_cos(n),
        })?);
    } else if props.constant_metric {
        let g = chart.metric_at(&chart.domain().center());
        let raw = SymMatrix::from_fn(n, |i, j| if i == j { (i + 1) as f64 } else { 0.5 });
        let value = traceless_part(&raw.to_tensor(), &g)?.to_sym_matrix()?;
        out.push(make_field(FieldKind::Constant { dim: n, value })?);
    }
    if props.codazzi_ricci {
        out.push(make_field(FieldKind::RicciOf {
            chart: chart.clone(),
            fd: ricci_field_fd(fd),
        })?);
    }
    Ok(out)
}

/// Name of the Ricci field built by [`codazzi_fields`].
pub const RICCI_FIELD: &str = "ricci";

/// Steps the Ricci field is evaluated with.
pub fn ricci_field_fd(fd: &FdSpec) -> FdSpec {
    fd.coarse_metric()
}
