//! Nyström discretization of the windowed operator `1_B K 1_B`.
//!
//! With Gauss–Legendre nodes `x_q` and weights `w_q` the symmetric matrix
//! `G = W^{1/2} K W^{1/2}` shares its spectrum with the discretized operator;
//! eigenvectors rescaled by `W^{-1/2}` are node values of eigenfunctions that
//! are orthonormal in the weighted inner product.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::geometry::Interval;
use crate::kernels::Kernel;
use crate::quadrature::GaussLegendre;

/// Eigenvalue tolerance used for clamping into `[0, 1]`.
pub const EIGEN_TOL: f64 = 1e-8;
/// Eigenvalues at or above `1 - PROJECTION_GAP` are treated as projections.
pub const PROJECTION_GAP: f64 = 1e-12;
/// Eigenpairs below this are dropped from series over the spectrum.
pub const ACTIVE_THRESHOLD: f64 = 1e-14;

pub(crate) struct RawSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Columns are orthonormal eigenvectors of `G`, descending eigenvalue.
    pub vectors: DMatrix<f64>,
}

pub(crate) fn nystrom_raw(kernel: &Kernel, rule: &GaussLegendre) -> Result<RawSpectrum> {
    let n = rule.len();
    let sw: Vec<f64> = rule.weights.iter().map(|w| w.sqrt()).collect();
    let mut g = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let kij = kernel.eval(rule.nodes[i], rule.nodes[j]);
            let kji = if i == j {
                kij
            } else {
                kernel.eval(rule.nodes[j], rule.nodes[i])
            };
            if !kij.is_finite() || !kji.is_finite() {
                return Err(Error::NonFiniteKernel {
                    x: rule.nodes[i],
                    y: rule.nodes[j],
                });
            }
            let v = 0.5 * (kij + kji) * sw[i] * sw[j];
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::try_new(g, f64::EPSILON, 0).ok_or(Error::Eigensolve)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        // Deterministic sign: the largest-magnitude entry is positive.
        let imax = v.iamax();
        if v[imax] < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(col, &v);
    }
    Ok(RawSpectrum {
        eigenvalues,
        vectors,
    })
}

/// Quadrature nodes and weights with the eigenpairs of the windowed operator.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub window: Interval,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Descending, clamped into `[0, 1]`.
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[(q, i)] = phi_i(x_q)`; `sum_q w_q phi_i phi_j = delta_ij`.
    pub eigenvectors: DMatrix<f64>,
    kernel: Kernel,
}

/// Symmetrized Nyström eigendecomposition of `kernel` on `window`.
///
/// Fails with [`Error::KernelInvalid`] if an eigenvalue falls outside
/// `[-10 tol, 1 + 10 tol]`; otherwise eigenvalues are clamped into `[0, 1]`.
pub fn nystrom_decompose(
    kernel: &Kernel,
    window: Interval,
    n_nodes: usize,
) -> Result<SpectralDecomposition> {
    ensure(n_nodes >= 8, "n_nodes", n_nodes as f64, "must be at least 8")?;
    let window = Interval::checked(window.lo, window.hi)?;
    let rule = GaussLegendre::new(n_nodes, window)?;
    let raw = nystrom_raw(kernel, &rule)?;
    let (lo, hi) = (-10.0 * EIGEN_TOL, 1.0 + 10.0 * EIGEN_TOL);
    if let Some(&bad) = raw.eigenvalues.iter().find(|&&l| l < lo || l > hi) {
        return Err(Error::KernelInvalid {
            eigenvalue: bad,
            lo,
            hi,
        });
    }
    let eigenvalues = raw.eigenvalues.iter().map(|l| l.clamp(0.0, 1.0)).collect();
    let mut eigenvectors = raw.vectors;
    for (q, w) in rule.weights.iter().enumerate() {
        let s = 1.0 / w.sqrt();
        eigenvectors.row_mut(q).scale_mut(s);
    }
    Ok(SpectralDecomposition {
        window,
        nodes: rule.nodes,
        weights: rule.weights,
        eigenvalues,
        eigenvectors,
        kernel: kernel.clone(),
    })
}

/// JSON snapshot of a decomposition. `eigenvectors[i]` holds `phi_i` at the nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionDump {
    pub window: Interval,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
}

impl SpectralDecomposition {
    /// Assembles a decomposition from known eigenpairs (node values of
    /// weight-orthonormal eigenfunctions).
    pub fn from_parts(
        kernel: &Kernel,
        window: Interval,
        nodes: Vec<f64>,
        weights: Vec<f64>,
        eigenvalues: Vec<f64>,
        eigenvectors: DMatrix<f64>,
    ) -> Result<Self> {
        let n = nodes.len();
        if weights.len() != n || eigenvectors.nrows() != n || eigenvectors.ncols() != eigenvalues.len()
        {
            return Err(Error::InvalidSpec("inconsistent decomposition shapes".into()));
        }
        Ok(Self {
            window,
            nodes,
            weights,
            eigenvalues,
            eigenvectors,
            kernel: kernel.clone(),
        })
    }

    pub fn from_dump(kernel: &Kernel, dump: DecompositionDump) -> Result<Self> {
        let n = dump.nodes.len();
        let m = dump.eigenvectors.len();
        if dump.eigenvectors.iter().any(|v| v.len() != n) {
            return Err(Error::InvalidSpec("eigenvector length mismatch".into()));
        }
        let vecs = DMatrix::from_fn(n, m, |q, i| dump.eigenvectors[i][q]);
        Self::from_parts(kernel, dump.window, dump.nodes, dump.weights, dump.eigenvalues, vecs)
    }

    pub fn dump(&self) -> DecompositionDump {
        DecompositionDump {
            window: self.window,
            nodes: self.nodes.clone(),
            weights: self.weights.clone(),
            eigenvalues: self.eigenvalues.clone(),
            eigenvectors: (0..self.eigenvectors.ncols())
                .map(|i| self.eigenvectors.column(i).iter().copied().collect())
                .collect(),
        }
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// Variance of the point count: `sum lambda_i (1 - lambda_i)`.
    pub fn count_variance(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l * (1.0 - l)).sum()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// Indices of eigenpairs above [`ACTIVE_THRESHOLD`].
    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > ACTIVE_THRESHOLD)
            .map(|(i, _)| i)
    }

    fn check_not_projection(&self) -> Result<()> {
        match self.eigenvalues.iter().find(|&&l| l >= 1.0 - PROJECTION_GAP) {
            Some(&l) => Err(Error::DegenerateProjection(l)),
            None => Ok(()),
        }
    }

    /// `det(Id - K) = prod (1 - lambda_i)`, accumulated in log space.
    pub fn fredholm_det(&self) -> Result<f64> {
        self.check_not_projection()?;
        Ok(self.log_fredholm_det().exp())
    }

    fn log_fredholm_det(&self) -> f64 {
        self.eigenvalues.iter().map(|&l| (-l).ln_1p()).sum()
    }

    /// `a_i(x) = sum_q w_q K(x, x_q) phi_i(x_q) = lambda_i phi_i(x)` for
    /// every eigenpair, `phi_i` extended off the nodes by the Nyström formula.
    pub fn weighted_projections(&self, x: f64) -> DVector<f64> {
        let kx = DVector::from_iterator(
            self.n_nodes(),
            self.nodes
                .iter()
                .zip(&self.weights)
                .map(|(&xq, &w)| w * self.kernel.eval(x, xq)),
        );
        self.eigenvectors.tr_mul(&kx)
    }

    /// Nyström extension of every eigenfunction to `x`; pairs below
    /// [`ACTIVE_THRESHOLD`] are reported as zero.
    pub fn eigenfunctions_at(&self, x: f64) -> DVector<f64> {
        let a = self.weighted_projections(x);
        DVector::from_iterator(
            a.len(),
            a.iter()
                .zip(&self.eigenvalues)
                .map(|(ai, &l)| if l > ACTIVE_THRESHOLD { ai / l } else { 0.0 }),
        )
    }

    /// Nyström extension of the eigenfunctions listed in `idx`, which must
    /// all be above [`ACTIVE_THRESHOLD`].
    pub fn eigenfunctions_subset(&self, x: f64, idx: &[usize]) -> DVector<f64> {
        let kx: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&xq, &w)| w * self.kernel.eval(x, xq))
            .collect();
        DVector::from_iterator(
            idx.len(),
            idx.iter().map(|&i| {
                let col = self.eigenvectors.column(i);
                let a: f64 = col.iter().zip(&kx).map(|(v, k)| v * k).sum();
                a / self.eigenvalues[i]
            }),
        )
    }

    /// Evaluator for `L = K (Id - K)^{-1}` on this window.
    pub fn l_kernel(&self) -> Result<LKernel<'_>> {
        self.check_not_projection()?;
        let inv_gap = self
            .eigenvalues
            .iter()
            .map(|&l| if l > ACTIVE_THRESHOLD { 1.0 / (1.0 - l) } else { 0.0 })
            .collect();
        Ok(LKernel {
            decomp: self,
            inv_gap,
        })
    }

    /// `L(x, y)`; see [`LKernel`].
    pub fn l_kernel_eval(&self, x: f64, y: f64) -> Result<f64> {
        let l = self.l_kernel()?;
        Ok(l.eval(x, y))
    }

    /// `max |sum_i lambda_i phi_i(x) phi_i(y) - K(x, y)|` over `points^2`,
    /// eigenfunctions extended off the nodes.
    pub fn mercer_error(&self, points: &[f64]) -> f64 {
        let phis: Vec<DVector<f64>> = points.iter().map(|&x| self.eigenfunctions_at(x)).collect();
        let lam = DVector::from_vec(self.eigenvalues.clone());
        let mut worst = 0.0f64;
        for (i, &x) in points.iter().enumerate() {
            for (j, &y) in points.iter().enumerate() {
                let rec: f64 = phis[i].component_mul(&phis[j]).dot(&lam);
                worst = worst.max((rec - self.kernel.eval(x, y)).abs());
            }
        }
        worst
    }
}

/// The kernel of `L = K (Id - K)^{-1}` restricted to the window, discretized
/// on the Nyström nodes:
///
/// `L(x, y) = K(x, y) + sum_i a_i(x) a_i(y) / (1 - lambda_i)`,
///
/// with `a_i(x) = lambda_i phi_i(x)`. Whenever `K` equals its eigen-expansion
/// this is exactly `sum_i lambda_i / (1 - lambda_i) phi_i(x) phi_i(y)`; the
/// explicit `K(x, y)` term keeps the off-node behaviour of non-smooth kernels.
pub struct LKernel<'a> {
    decomp: &'a SpectralDecomposition,
    inv_gap: Vec<f64>,
}

impl LKernel<'_> {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let ax = self.decomp.weighted_projections(x);
        let ay = if x == y {
            ax.clone()
        } else {
            self.decomp.weighted_projections(y)
        };
        self.combine(x, y, &ax, &ay)
    }

    fn combine(&self, x: f64, y: f64, ax: &DVector<f64>, ay: &DVector<f64>) -> f64 {
        let corr: f64 = ax
            .iter()
            .zip(ay.iter())
            .zip(&self.inv_gap)
            .map(|((a, b), g)| a * b * g)
            .sum();
        self.decomp.kernel.eval(x, y) + corr
    }

    /// `det(L(x_i, x_j))` over the given points.
    pub fn matrix(&self, points: &[f64]) -> DMatrix<f64> {
        let proj: Vec<DVector<f64>> = points
            .iter()
            .map(|&x| self.decomp.weighted_projections(x))
            .collect();
        let n = points.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = self.combine(points[i], points[j], &proj[i], &proj[j]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }
}
