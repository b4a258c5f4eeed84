//! Determinantal kernels on the line and pointwise checks of the hypotheses
//! `K(x,y) = K(y,x)` and `0 <= K <= 1`.
//!
//! JSON layout of a kernel spec:
//!
//! ```json
//! {"family": "sine", "params": {"density": 1.0}, "domain": {"kind": "full_line"}}
//! {"family": "airy"}
//! {"family": "bessel", "params": {"order": 1.0}, "domain": {"kind": "half_line"}}
//! {"family": "product", "params": {"alpha": 0.5, "scale": 1.0}}
//! {"family": "custom", "table": {"grid": [-1, 0, 1], "values": [[2,2,2],[2,2,2],[2,2,2]]}}
//! ```
//!
//! Parameter names: `density` (sine, `0 < density <= 1`), `order` (bessel,
//! `order > -1`), `alpha` (product, `0 < alpha <= 1`) and `scale` (product
//! envelope width, default 1). `domain` defaults to the family's natural
//! domain.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::geometry::Interval;
use crate::quadrature::GaussLegendre;
use crate::spectral;
use crate::special::{airy_pair, bessel_pair};

/// Below this separation the divided-difference kernels are evaluated on the
/// diagonal at the midpoint; the error is `O(|x - y|^2)`.
const DIAGONAL_SWITCH: f64 = 1e-6;

/// Nodes used by [`validate_kernel`] for the asymmetry grid and eigen-check.
pub const VALIDATION_NODES: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Sine,
    Airy,
    Bessel,
    Product,
    Custom,
}

impl Family {
    fn parse(tag: &str) -> Result<Self> {
        match tag {
            "sine" => Ok(Family::Sine),
            "airy" => Ok(Family::Airy),
            "bessel" => Ok(Family::Bessel),
            "product" => Ok(Family::Product),
            "custom" => Ok(Family::Custom),
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }

    fn natural_domain(self) -> AmbientDomain {
        match self {
            Family::Bessel => AmbientDomain::HalfLine,
            _ => AmbientDomain::FullLine,
        }
    }
}

/// The space the points live in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AmbientDomain {
    FullLine,
    HalfLine,
    EuclideanBox { lo: Vec<f64>, hi: Vec<f64> },
}

/// Grid samples of a kernel, interpolated bilinearly and clamped at the edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelTable {
    pub grid: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl KernelTable {
    fn validate(&self) -> Result<()> {
        let n = self.grid.len();
        if n < 2 || !self.grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidSpec(
                "table grid needs at least two strictly increasing points".into(),
            ));
        }
        if self.values.len() != n || self.values.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidSpec(format!(
                "table values must be a {n}x{n} matrix"
            )));
        }
        Ok(())
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let g = &self.grid;
        let n = g.len();
        if x <= g[0] {
            return (0, 0.0);
        }
        if x >= g[n - 1] {
            return (n - 2, 1.0);
        }
        let i = g.partition_point(|&v| v <= x) - 1;
        let i = i.min(n - 2);
        (i, (x - g[i]) / (g[i + 1] - g[i]))
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let (i, s) = self.locate(x);
        let (j, t) = self.locate(y);
        let v = &self.values;
        (1.0 - s) * (1.0 - t) * v[i][j]
            + s * (1.0 - t) * v[i + 1][j]
            + (1.0 - s) * t * v[i][j + 1]
            + s * t * v[i + 1][j + 1]
    }
}

/// Serializable description of a kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<AmbientDomain>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<KernelTable>,
}

impl KernelSpec {
    pub fn sine(density: f64) -> Self {
        Self::with_params("sine", &[("density", density)])
    }

    pub fn airy() -> Self {
        Self::with_params("airy", &[])
    }

    pub fn bessel(order: f64) -> Self {
        Self::with_params("bessel", &[("order", order)])
    }

    pub fn product(alpha: f64) -> Self {
        Self::with_params("product", &[("alpha", alpha), ("scale", 1.0)])
    }

    pub fn constant(value: f64, window: Interval) -> Self {
        Self {
            family: "custom".into(),
            params: BTreeMap::new(),
            domain: None,
            table: Some(KernelTable {
                grid: vec![window.lo, window.hi],
                values: vec![vec![value; 2]; 2],
            }),
        }
    }

    fn with_params(family: &str, params: &[(&str, f64)]) -> Self {
        Self {
            family: family.into(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            domain: None,
            table: None,
        }
    }

    pub fn build(&self) -> Result<Kernel> {
        construct_kernel(self)
    }
}

type KernelFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

#[derive(Clone)]
enum KernelKind {
    Sine { density: f64 },
    Airy,
    Bessel { order: f64 },
    Product { alpha: f64, scale: f64 },
    Tabulated(Arc<KernelTable>),
    Function { name: String, f: Arc<KernelFn> },
}

/// A symmetric two-point evaluator. Immutable and cheap to clone.
#[derive(Clone)]
pub struct Kernel {
    kind: KernelKind,
    domain: AmbientDomain,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            KernelKind::Sine { density } => write!(f, "Sine(density={density})"),
            KernelKind::Airy => write!(f, "Airy"),
            KernelKind::Bessel { order } => write!(f, "Bessel(order={order})"),
            KernelKind::Product { alpha, scale } => {
                write!(f, "Product(alpha={alpha}, scale={scale})")
            }
            KernelKind::Tabulated(t) => write!(f, "Tabulated({} points)", t.grid.len()),
            KernelKind::Function { name, .. } => write!(f, "Function({name})"),
        }
    }
}

fn param(spec: &KernelSpec, name: &'static str, default: Option<f64>) -> Result<f64> {
    match (spec.params.get(name), default) {
        (Some(&v), _) => Ok(v),
        (None, Some(d)) => Ok(d),
        (None, None) => Err(Error::InvalidSpec(format!(
            "family `{}` requires parameter `{name}`",
            spec.family
        ))),
    }
}

fn reject_unknown_params(spec: &KernelSpec, allowed: &[&str]) -> Result<()> {
    match spec.params.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::InvalidSpec(format!(
            "unknown parameter `{k}` for family `{}`",
            spec.family
        ))),
        None => Ok(()),
    }
}

/// Builds a kernel from its spec, checking parameter ranges and the
/// family/domain pairing.
pub fn construct_kernel(spec: &KernelSpec) -> Result<Kernel> {
    let family = Family::parse(&spec.family)?;
    let domain = spec.domain.clone().unwrap_or(family.natural_domain());
    match (&domain, family) {
        (AmbientDomain::EuclideanBox { .. }, _) => {
            return Err(Error::InvalidSpec(
                "kernels live on the line; boxes are only used by the Poisson sampler".into(),
            ))
        }
        (AmbientDomain::HalfLine, f) if f != Family::Bessel && f != Family::Custom => {
            return Err(Error::InvalidSpec(
                "the half line is reserved for the Bessel family".into(),
            ))
        }
        (AmbientDomain::FullLine, Family::Bessel) => {
            return Err(Error::InvalidSpec("the Bessel kernel lives on the half line".into()))
        }
        _ => {}
    }
    if family != Family::Custom && spec.table.is_some() {
        return Err(Error::InvalidSpec("only custom kernels take a table".into()));
    }
    let kind = match family {
        Family::Sine => {
            reject_unknown_params(spec, &["density"])?;
            let density = param(spec, "density", Some(1.0))?;
            ensure(
                density > 0.0 && density <= 1.0,
                "density",
                density,
                "must lie in (0, 1]",
            )?;
            KernelKind::Sine { density }
        }
        Family::Airy => {
            reject_unknown_params(spec, &[])?;
            KernelKind::Airy
        }
        Family::Bessel => {
            reject_unknown_params(spec, &["order"])?;
            let order = param(spec, "order", None)?;
            ensure(order > -1.0 && order.is_finite(), "order", order, "must exceed -1")?;
            KernelKind::Bessel { order }
        }
        Family::Product => {
            reject_unknown_params(spec, &["alpha", "scale"])?;
            let alpha = param(spec, "alpha", None)?;
            let scale = param(spec, "scale", Some(1.0))?;
            ensure(alpha > 0.0 && alpha <= 1.0, "alpha", alpha, "must lie in (0, 1]")?;
            ensure(scale > 0.0 && scale.is_finite(), "scale", scale, "must be positive")?;
            KernelKind::Product { alpha, scale }
        }
        Family::Custom => {
            reject_unknown_params(spec, &[])?;
            let table = spec
                .table
                .clone()
                .ok_or_else(|| Error::InvalidSpec("custom kernels need a `table`".into()))?;
            table.validate()?;
            KernelKind::Tabulated(Arc::new(table))
        }
    };
    Ok(Kernel { kind, domain })
}

impl Kernel {
    /// A kernel given by a closure. Not serializable; used for test fixtures
    /// such as finite-rank projections.
    pub fn from_fn<F>(name: &str, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            kind: KernelKind::Function {
                name: name.to_string(),
                f: Arc::new(f),
            },
            domain: AmbientDomain::FullLine,
        }
    }

    pub fn zero() -> Self {
        Self::from_fn("zero", |_, _| 0.0)
    }

    pub fn family(&self) -> Family {
        match self.kind {
            KernelKind::Sine { .. } => Family::Sine,
            KernelKind::Airy => Family::Airy,
            KernelKind::Bessel { .. } => Family::Bessel,
            KernelKind::Product { .. } => Family::Product,
            KernelKind::Tabulated(_) | KernelKind::Function { .. } => Family::Custom,
        }
    }

    pub fn domain(&self) -> &AmbientDomain {
        &self.domain
    }

    /// Hölder exponent of the product family's profile `k(t) = exp(-|t|^alpha)`.
    pub fn product_alpha(&self) -> Option<f64> {
        match self.kind {
            KernelKind::Product { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    /// The `KernelSpec` this kernel was built from; `None` for closure kernels.
    pub fn spec(&self) -> Option<KernelSpec> {
        let mut spec = match &self.kind {
            KernelKind::Sine { density } => KernelSpec::sine(*density),
            KernelKind::Airy => KernelSpec::airy(),
            KernelKind::Bessel { order } => KernelSpec::bessel(*order),
            KernelKind::Product { alpha, scale } => KernelSpec::with_params(
                "product",
                &[("alpha", *alpha), ("scale", *scale)],
            ),
            KernelKind::Tabulated(t) => KernelSpec {
                family: "custom".into(),
                params: BTreeMap::new(),
                domain: None,
                table: Some((**t).clone()),
            },
            KernelKind::Function { .. } => return None,
        };
        spec.domain = Some(self.domain.clone());
        Some(spec)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match &self.kind {
            KernelKind::Sine { density } => {
                let t = x - y;
                if t == 0.0 {
                    *density
                } else {
                    density * (PI * t).sin() / (PI * t)
                }
            }
            KernelKind::Airy => airy_kernel(x, y),
            KernelKind::Bessel { order } => bessel_kernel(*order, x, y),
            KernelKind::Product { alpha, scale } => {
                envelope(x, *scale) * profile(x - y, *alpha) * envelope(y, *scale)
            }
            KernelKind::Tabulated(t) => t.eval(x, y),
            KernelKind::Function { f, .. } => f(x, y),
        }
    }

    /// The even profile `k` of a product kernel.
    pub fn profile(&self, t: f64) -> Option<f64> {
        match self.kind {
            KernelKind::Product { alpha, .. } => Some(profile(t, alpha)),
            _ => None,
        }
    }

    /// `max |K(x, y)|` over the Gauss nodes of `window`.
    pub fn sup_on(&self, window: Interval, n_nodes: usize) -> Result<f64> {
        let rule = GaussLegendre::new(n_nodes, window)?;
        let mut m = 0.0f64;
        for &x in rule.nodes.iter().chain([window.lo, window.hi].iter()) {
            for &y in rule.nodes.iter().chain([window.lo, window.hi].iter()) {
                m = m.max(self.eval(x, y).abs());
            }
        }
        Ok(m)
    }
}

fn envelope(x: f64, scale: f64) -> f64 {
    let u = x / scale;
    (-u * u).exp()
}

fn profile(t: f64, alpha: f64) -> f64 {
    (-t.abs().powf(alpha)).exp()
}

fn airy_kernel(x: f64, y: f64) -> f64 {
    if (x - y).abs() < DIAGONAL_SWITCH {
        let m = 0.5 * (x + y);
        let (a, ap) = airy_pair(m);
        return ap * ap - m * a * a;
    }
    let (ax, apx) = airy_pair(x);
    let (ay, apy) = airy_pair(y);
    (ax * apy - ay * apx) / (x - y)
}

fn bessel_kernel(order: f64, x: f64, y: f64) -> f64 {
    if x < 0.0 || y < 0.0 {
        return f64::NAN;
    }
    if (x - y).abs() < DIAGONAL_SWITCH {
        return bessel_diagonal(order, 0.5 * (x + y));
    }
    let (sx, sy) = (x.sqrt(), y.sqrt());
    let (jx, jpx) = bessel_pair(order, sx);
    let (jy, jpy) = bessel_pair(order, sy);
    (jx * sy * jpy - jy * sx * jpx) / (2.0 * (x - y))
}

/// `K(x, x) = (J_a(u)^2 + J_{a+1}(u)^2 - (2a/u) J_a(u) J_{a+1}(u)) / 4`, `u = sqrt(x)`.
fn bessel_diagonal(order: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if order == 0.0 {
            0.25
        } else if order > 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    let u = x.sqrt();
    let j = bessel_pair(order, u).0;
    let j1 = bessel_pair(order + 1.0, u).0;
    0.25 * (j * j + j1 * j1 - 2.0 * order / u * j * j1)
}

/// Outcome of [`validate_kernel`].
#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub window: Interval,
    pub n_nodes: usize,
    /// `max |K(x,y) - K(y,x)|` over the node grid.
    pub max_asymmetry: f64,
    pub min_diagonal: f64,
    /// Smallest `K(x,x) K(y,y) - K(x,y)^2` over the node grid.
    pub min_pair_minor: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// Sum of the Nyström eigenvalues.
    pub trace: f64,
    /// Gauss quadrature of `K(x,x)` over the window.
    pub diagonal_integral: f64,
    pub symmetric: bool,
    pub eigenvalues_in_range: bool,
    pub passed: bool,
}

/// Checks Hermitian symmetry on a grid and `0 <= K <= 1` for the windowed
/// operator, via a Nyström eigensolve.
pub fn validate_kernel(kernel: &Kernel, window: Interval, tol: f64) -> Result<ValidationReport> {
    ensure(tol > 0.0, "tol", tol, "must be positive")?;
    let window = Interval::checked(window.lo, window.hi)?;
    let rule = GaussLegendre::new(VALIDATION_NODES, window)?;
    let n = rule.len();
    let mut max_asymmetry = 0.0f64;
    let mut min_diagonal = f64::INFINITY;
    let mut min_pair_minor = f64::INFINITY;
    let mut gram = vec![0.0; n * n];
    for (i, &x) in rule.nodes.iter().enumerate() {
        for (j, &y) in rule.nodes.iter().enumerate() {
            let v = kernel.eval(x, y);
            if !v.is_finite() {
                return Err(Error::NonFiniteKernel { x, y });
            }
            gram[i * n + j] = v;
        }
    }
    for i in 0..n {
        min_diagonal = min_diagonal.min(gram[i * n + i]);
        for j in 0..n {
            max_asymmetry = max_asymmetry.max((gram[i * n + j] - gram[j * n + i]).abs());
            let minor = gram[i * n + i] * gram[j * n + j] - gram[i * n + j] * gram[i * n + j];
            min_pair_minor = min_pair_minor.min(minor);
        }
    }
    let raw = spectral::nystrom_raw(kernel, &rule)?;
    let trace: f64 = raw.eigenvalues.iter().sum();
    let diagonal_integral = rule.integrate(|x| kernel.eval(x, x));
    let min_eigenvalue = raw.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max_eigenvalue = raw.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let symmetric = max_asymmetry <= 1e-10 * (1.0 + min_diagonal.abs());
    let eigenvalues_in_range = min_eigenvalue >= -tol && max_eigenvalue <= 1.0 + tol;
    let passed = symmetric && eigenvalues_in_range && trace.is_finite();
    Ok(ValidationReport {
        window,
        n_nodes: n,
        max_asymmetry,
        min_diagonal,
        min_pair_minor,
        min_eigenvalue,
        max_eigenvalue,
        trace,
        diagonal_integral,
        symmetric,
        eigenvalues_in_range,
        passed,
    })
}

/// Empirical constants in `c1 t^alpha <= k(0) - k(t) <= c2 t^alpha`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HolderConstants {
    pub c1: f64,
    pub c2: f64,
}

/// Grid points of the log-spaced `t` grid on `[1e-6, 1]`.
pub const HOLDER_GRID: usize = 241;

/// Scans `(k(0) - k(t)) / t^alpha` over `t` in `[1e-6, 1]` (log-spaced) and
/// returns its extrema. A ratio that keeps drifting as `t -> 0` means the
/// probed exponent is wrong.
pub fn holder_envelope_check(kernel: &Kernel, alpha: f64) -> Result<HolderConstants> {
    ensure(alpha > 0.0 && alpha <= 1.0, "alpha", alpha, "must lie in (0, 1]")?;
    if kernel.family() != Family::Product {
        return Err(Error::InvalidSpec(
            "the Hölder envelope check applies to product kernels".into(),
        ));
    }
    let k0 = kernel.profile(0.0).unwrap_or(1.0);
    let ratios: Vec<(f64, f64)> = (0..HOLDER_GRID)
        .map(|i| {
            let t = 10f64.powf(-6.0 + 6.0 * i as f64 / (HOLDER_GRID - 1) as f64);
            let kt = kernel.profile(t).unwrap_or(f64::NAN);
            (t, (k0 - kt) / t.powf(alpha))
        })
        .collect();
    let c1 = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let c2 = ratios.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    // Drift of log ratio against log t over the two smallest decades.
    let small: Vec<&(f64, f64)> = ratios.iter().filter(|(t, _)| *t <= 1e-4 * 1.000_001).collect();
    let (first, last) = (small[0], small[small.len() - 1]);
    let slope = (last.1.ln() - first.1.ln()) / (last.0.ln() - first.0.ln());
    if !(c1.is_finite() && c2.is_finite()) || c1 <= 0.0 || slope.abs() > 0.05 {
        return Err(Error::HolderMismatch { alpha, slope });
    }
    Ok(HolderConstants { c1, c2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sine() -> Kernel {
        KernelSpec::sine(1.0).build().unwrap()
    }

    #[test]
    fn sine_values() {
        let k = sine();
        assert_eq!(k.eval(0.0, 0.0), 1.0);
        assert!(k.eval(0.0, 1.0).abs() < 1e-15);
        assert!((k.eval(0.0, 0.5) - 2.0 / PI).abs() < 1e-15);
        let half = KernelSpec::sine(0.4).build().unwrap();
        for x in [-3.0, 0.0, 1.7, 1e6] {
            assert_eq!(half.eval(x, x), 0.4);
        }
    }

    #[test]
    fn product_at_origin() {
        let k = KernelSpec::product(1.0).build().unwrap();
        assert_eq!(k.eval(0.0, 0.0), 1.0);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(KernelSpec::sine(0.0).build().is_err());
        assert!(KernelSpec::sine(1.5).build().is_err());
        assert!(KernelSpec::product(0.0).build().is_err());
        assert!(KernelSpec::product(1.2).build().is_err());
        assert!(KernelSpec::bessel(-1.0).build().is_err());
        let mut bogus = KernelSpec::sine(1.0);
        bogus.family = "cosine".into();
        assert!(matches!(bogus.build(), Err(Error::UnknownFamily(_))));
        let mut extra = KernelSpec::sine(1.0);
        extra.params.insert("rho".into(), 1.0);
        assert!(extra.build().is_err());
    }

    #[test]
    fn domain_pairing() {
        let mut s = KernelSpec::sine(1.0);
        s.domain = Some(AmbientDomain::HalfLine);
        assert!(s.build().is_err());
        let mut b = KernelSpec::bessel(1.0);
        b.domain = Some(AmbientDomain::FullLine);
        assert!(b.build().is_err());
        assert_eq!(
            KernelSpec::bessel(1.0).build().unwrap().domain(),
            &AmbientDomain::HalfLine
        );
    }

    #[test]
    fn json_round_trip() {
        let spec = KernelSpec::product(0.5);
        let text = serde_json::to_string(&spec).unwrap();
        let back: KernelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);
        let parsed: KernelSpec = serde_json::from_str(
            r#"{"family":"sine","params":{"density":1.0},"domain":{"kind":"full_line"}}"#,
        )
        .unwrap();
        assert_eq!(parsed.build().unwrap().eval(0.0, 0.0), 1.0);
        assert!(serde_json::from_str::<KernelSpec>(r#"{"family":"sine","oops":1}"#).is_err());
    }

    // Reference values from a 40-digit arbitrary-precision evaluation.
    #[test]
    fn airy_kernel_reference() {
        let k = KernelSpec::airy().build().unwrap();
        let cases = [
            (0.0, 0.0, 0.066_987_483_779_663_97),
            (1.0, -1.0, 0.041_929_248_279_154_1),
            (-2.0, -2.0, 0.485_672_493_531_084_3),
            (-3.0, 0.5, -0.003_517_793_297_688_596_5),
            (2.0, 2.0, 3.791_991_476_693_737e-4),
        ];
        for (x, y, want) in cases {
            let v = k.eval(x, y);
            assert!((v - want).abs() < 1e-11 * want.abs().max(1e-3), "K({x},{y}) = {v}");
        }
        // Near-diagonal branch agrees with the divided difference.
        let (a, b) = (k.eval(0.3 - 1e-6, 0.3 + 1e-6), k.eval(0.3 - 2.5e-7, 0.3 + 2.5e-7));
        assert!((a - b).abs() < 1e-9, "{a} {b}");
    }

    #[test]
    fn bessel_kernel_reference() {
        let cases = [
            (1.0, 1.0, 1.0, 0.026_430_159_291_780_167),
            (1.0, 2.0, 5.0, 0.054_217_093_427_131_82),
            (0.0, 0.5, 0.5, 0.220_636_769_641_536_07),
            (0.5, 3.0, 3.5, 0.099_053_569_942_157_07),
            (2.0, 10.0, 10.0, 0.035_493_210_113_948_84),
        ];
        for (a, x, y, want) in cases {
            let k = KernelSpec::bessel(a).build().unwrap();
            let v = k.eval(x, y);
            assert!((v - want).abs() < 1e-10, "K_{a}({x},{y}) = {v}, want {want}");
        }
    }

    #[test]
    fn tabulated_bilinear() {
        let spec = KernelSpec {
            family: "custom".into(),
            params: BTreeMap::new(),
            domain: None,
            table: Some(KernelTable {
                grid: vec![0.0, 1.0],
                values: vec![vec![0.0, 1.0], vec![1.0, 2.0]],
            }),
        };
        let k = spec.build().unwrap();
        assert!((k.eval(0.5, 0.5) - 1.0).abs() < 1e-15);
        assert!((k.eval(0.25, 0.0) - 0.25).abs() < 1e-15);
        assert_eq!(k.eval(5.0, 5.0), 2.0);
    }

    #[test]
    fn validation_outcomes() {
        let w = Interval::new(-3.0, 3.0);
        let r = validate_kernel(&sine(), w, 1e-8).unwrap();
        assert!(r.passed, "{r:?}");
        assert!((r.trace - 6.0).abs() < 1e-8);

        let p = KernelSpec::product(0.5).build().unwrap();
        let r = validate_kernel(&p, w, 1e-8).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.min_eigenvalue >= -1e-8 && r.max_eigenvalue <= 1.0);

        let w1 = Interval::new(-1.0, 1.0);
        let c = KernelSpec::constant(2.0, w1).build().unwrap();
        let r = validate_kernel(&c, w1, 1e-8).unwrap();
        assert!(!r.passed);
        assert!((r.max_eigenvalue - 4.0).abs() < 1e-10);
    }

    #[test]
    fn airy_and_bessel_validate() {
        let a = KernelSpec::airy().build().unwrap();
        assert!(validate_kernel(&a, Interval::new(-6.0, 2.0), 1e-8).unwrap().passed);
        let b = KernelSpec::bessel(1.0).build().unwrap();
        assert!(validate_kernel(&b, Interval::new(0.0, 20.0), 1e-8).unwrap().passed);
    }

    #[test]
    fn non_finite_is_reported() {
        let k = Kernel::from_fn("pole", |x, _| if x > 0.0 { f64::NAN } else { 0.0 });
        let err = validate_kernel(&k, Interval::new(-1.0, 1.0), 1e-8).unwrap_err();
        assert!(matches!(err, Error::NonFiniteKernel { x, .. } if x > 0.0));
    }

    #[test]
    fn holder_constants() {
        let e1 = 1.0 - (-1.0f64).exp();
        let k1 = KernelSpec::product(1.0).build().unwrap();
        let h = holder_envelope_check(&k1, 1.0).unwrap();
        assert!((h.c1 - e1).abs() < 1e-12 && (h.c2 - 1.0).abs() < 1e-5, "{h:?}");
        let k05 = KernelSpec::product(0.5).build().unwrap();
        let h = holder_envelope_check(&k05, 0.5).unwrap();
        assert!((h.c1 - e1).abs() < 1e-12 && (h.c2 - 1.0).abs() < 1e-2, "{h:?}");
        assert!(matches!(
            holder_envelope_check(&k05, 0.25),
            Err(Error::HolderMismatch { .. })
        ));
        assert!(holder_envelope_check(&sine(), 1.0).is_err());
    }

    proptest! {
        #[test]
        fn shipped_kernels_symmetric_and_psd_pairs(
            x in -4.0f64..4.0, y in -4.0f64..4.0, alpha in 0.05f64..1.0
        ) {
            let kernels = [
                sine(),
                KernelSpec::airy().build().unwrap(),
                KernelSpec::product(alpha).build().unwrap(),
            ];
            for k in &kernels {
                let (kxy, kyx) = (k.eval(x, y), k.eval(y, x));
                prop_assert!((kxy - kyx).abs() <= 1e-12);
                prop_assert!(k.eval(x, x) >= 0.0);
                prop_assert!(k.eval(x, x) * k.eval(y, y) - kxy * kxy >= -1e-10);
            }
            let b = KernelSpec::bessel(alpha).build().unwrap();
            let (u, v) = (x.abs() * 3.0, y.abs() * 3.0);
            prop_assert!((b.eval(u, v) - b.eval(v, u)).abs() <= 1e-12);
            prop_assert!(b.eval(u, u) * b.eval(v, v) - b.eval(u, v).powi(2) >= -1e-10);
        }

        #[test]
        fn product_bounded(x in -5.0f64..5.0, y in -5.0f64..5.0, alpha in 0.05f64..1.0) {
            let v = KernelSpec::product(alpha).build().unwrap().eval(x, y);
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
