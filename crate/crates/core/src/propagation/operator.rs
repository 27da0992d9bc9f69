use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphOperators;
use crate::linalg::{solve_spd, DenseMatrix, LinearOperator, SparseMatrix};
use crate::lowrank::{build_tsgcn_operator, EigOptions, EigSummary, TsgcnOperator};
use crate::scalar::Scalar;

use super::spec::{RegularizerSpec, Variant};

/// Numerical settings used when an operator is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildOptions {
    pub eig: EigOptions,
    /// Relative residual target for the GNN-LF/HF conjugate-gradient solves.
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            eig: EigOptions::default(),
            cg_tol: 1e-10,
            cg_max_iter: 1000,
        }
    }
}

/// What was built, for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub variant: Variant,
    pub label: String,
    pub alpha: f64,
    pub beta: f64,
    pub k_order: usize,
    pub rank: usize,
    /// How the operator is evaluated, e.g. `conjugate gradient on I + λL̂`.
    pub path: String,
    pub source_bound: bool,
    pub eig: Option<EigSummary>,
}

#[derive(Debug, Clone)]
enum Kernel<T: Scalar> {
    /// `Z ↦ ÂZ`.
    Adjacency(SparseMatrix<T>),
    /// `steps` iterations of `P ← (1−α)ÂP + αZ` from `P = Z`.
    Appnp { a_hat: SparseMatrix<T>, alpha: T, steps: usize },
    /// `Z ↦ Σ_k c_k Â^k Z` by Horner's rule.
    Polynomial { a_hat: SparseMatrix<T>, coeffs: Vec<T> },
    /// `Z ↦ (I + λ·op)^{-1}(I + μ·op)Z`.
    Rational {
        system: SparseMatrix<T>,
        numerator: SparseMatrix<T>,
        tol: f64,
        max_iter: usize,
    },
    Tsgcn(TsgcnOperator<T>),
}

/// A layer's propagation rule.
///
/// [`layer_map`](Self::layer_map) is what the network applies to `Z = HΘ`;
/// for APPNP and DAGNN the source term is `Z` itself. [`apply`](Self::apply)
/// is the rule with an explicitly bound source `H⁰` and
/// [`apply_linear`](Self::apply_linear) its homogeneous part.
#[derive(Debug, Clone)]
pub struct PropagationOperator<T: Scalar> {
    kernel: Kernel<T>,
    source: Option<DenseMatrix<T>>,
    a_hat: SparseMatrix<T>,
    alpha: T,
    descriptor: Descriptor,
}

fn horner<T: Scalar>(a: &SparseMatrix<T>, coeffs: &[T], z: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let mut p = z.scale(coeffs[coeffs.len() - 1]);
    for &c in coeffs[..coeffs.len() - 1].iter().rev() {
        p = a.spmm(&p)?;
        p.axpy(c, z)?;
    }
    Ok(p)
}

impl<T: Scalar> Kernel<T> {
    fn apply(&self, z: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        match self {
            Kernel::Adjacency(a) => a.spmm(z),
            Kernel::Appnp { a_hat, alpha, steps } => {
                let keep = T::one() - *alpha;
                let mut p = z.clone();
                for _ in 0..*steps {
                    p = a_hat.spmm(&p)?.scale(keep);
                    p.axpy(*alpha, z)?;
                }
                Ok(p)
            }
            Kernel::Polynomial { a_hat, coeffs } => horner(a_hat, coeffs, z),
            Kernel::Rational {
                system,
                numerator,
                tol,
                max_iter,
            } => solve_spd(system, &numerator.spmm(z)?, *tol, *max_iter),
            Kernel::Tsgcn(op) => op.apply(z),
        }
    }

    fn apply_transpose(&self, z: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        match self {
            Kernel::Tsgcn(TsgcnOperator::Exact(m)) => m.t_matmul(z),
            // Every other kernel is a symmetric matrix function of one operator.
            _ => self.apply(z),
        }
    }
}

impl<T: Scalar> PropagationOperator<T> {
    pub fn descriptor(&self) -> &Descriptor {
        &self.descriptor
    }

    pub fn variant(&self) -> Variant {
        self.descriptor.variant
    }

    pub fn n_nodes(&self) -> usize {
        self.a_hat.n_rows()
    }

    pub fn source(&self) -> Option<&DenseMatrix<T>> {
        self.source.as_ref()
    }

    /// Per-layer map used by the network.
    pub fn layer_map(&self, z: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        self.check_rows(z)?;
        let out = self.kernel.apply(z)?;
        out.ensure_finite("propagation")?;
        Ok(out)
    }

    /// Transpose of [`layer_map`](Self::layer_map), used in backpropagation.
    pub fn layer_map_transpose(&self, g: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        self.check_rows(g)?;
        self.kernel.apply_transpose(g)
    }

    /// Homogeneous part of the bound rule: `(1−α)ÂH` for APPNP, zero for
    /// DAGNN (its output depends on `H⁰` only), the layer map otherwise.
    pub fn apply_linear(&self, h: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        self.check_rows(h)?;
        match self.descriptor.variant {
            Variant::Appnp => Ok(self.a_hat.spmm(h)?.scale(T::one() - self.alpha)),
            Variant::Dagnn => Ok(DenseMatrix::zeros(h.n_rows(), h.n_cols())),
            _ => self.layer_map(h),
        }
    }

    /// The rule with its bound source: `(1−α)ÂH + αH⁰` for APPNP,
    /// `Σ γ_k Â^k H⁰` for DAGNN, the layer map otherwise.
    pub fn apply(&self, h: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        match (self.descriptor.variant, &self.source) {
            (Variant::Appnp, Some(h0)) => {
                let mut out = self.apply_linear(h)?;
                out.axpy(self.alpha, h0)?;
                Ok(out)
            }
            (Variant::Dagnn, Some(h0)) => {
                self.check_rows(h)?;
                self.layer_map(h0)
            }
            (v, None) if v.needs_source() => Err(Error::Spec(format!("{v} needs a bound source term H0"))),
            _ => self.layer_map(h),
        }
    }

    /// Dense `N × N` matrix of the layer map, built column by column.
    pub fn materialize(&self) -> Result<DenseMatrix<T>> {
        self.layer_map(&DenseMatrix::identity(self.n_nodes()))
    }

    /// Dense matrix of [`apply_linear`](Self::apply_linear).
    pub fn materialize_linear(&self) -> Result<DenseMatrix<T>> {
        self.apply_linear(&DenseMatrix::identity(self.n_nodes()))
    }

    fn check_rows(&self, h: &DenseMatrix<T>) -> Result<()> {
        if h.n_rows() != self.n_nodes() {
            return Err(Error::shape(
                "propagation",
                format!("{} rows", self.n_nodes()),
                format!("{} rows", h.n_rows()),
            ));
        }
        Ok(())
    }
}

/// Builds the per-layer propagation rule for `spec` with the source term tied
/// to each layer's own input.
pub fn build_layer_propagation<T: Scalar>(
    spec: &RegularizerSpec,
    ops: &GraphOperators<T>,
    opts: &BuildOptions,
) -> Result<PropagationOperator<T>> {
    spec.validate()?;
    let a_hat = ops.a_hat.clone();
    let mut eig = None;
    let (kernel, path) = match spec.variant {
        Variant::Gcn | Variant::Sgc => (Kernel::Adjacency(a_hat.clone()), "sparse Â".to_string()),
        Variant::Appnp => (
            Kernel::Appnp {
                a_hat: a_hat.clone(),
                alpha: T::of(spec.alpha),
                steps: spec.k_order,
            },
            format!("{} personalized-PageRank steps", spec.k_order),
        ),
        Variant::JkNet | Variant::Dagnn => {
            let coeffs = if spec.variant == Variant::JkNet {
                spec.jknet_coefficients()
            } else {
                spec.dagnn_coefficients()
            };
            (
                Kernel::Polynomial {
                    a_hat: a_hat.clone(),
                    coeffs: coeffs.into_iter().map(T::of).collect(),
                },
                format!("degree-{} polynomial in Â", spec.k_order),
            )
        }
        Variant::GnnLf | Variant::GnnHf => {
            let (lambda, mu) = spec.rational_parameters().expect("rational variant");
            let (base, name) = if spec.variant == Variant::GnnHf {
                (ops.l_hat()?, "L̂")
            } else {
                (a_hat.clone(), "Â")
            };
            (
                Kernel::Rational {
                    system: base.shifted(T::one(), T::of(lambda))?,
                    numerator: base.shifted(T::one(), T::of(mu))?,
                    tol: opts.cg_tol,
                    max_iter: opts.cg_max_iter,
                },
                format!("conjugate gradient on I + {lambda}{name}, numerator I + {mu}{name}"),
            )
        }
        Variant::Tsgcn | Variant::TsgcnS | Variant::TsgcnT => {
            let (a, b) = spec.tsgcn_weights();
            let op = build_tsgcn_operator(ops, a, b, spec.rank, spec.exact_inverse, &opts.eig)?;
            eig = op.summary().cloned();
            let path = if spec.exact_inverse {
                "dense inverse of I + αL̃_G + βL̃_X".to_string()
            } else {
                format!("Woodbury, rank {}", spec.rank)
            };
            (Kernel::Tsgcn(op), path)
        }
    };
    Ok(PropagationOperator {
        kernel,
        source: None,
        a_hat,
        alpha: T::of(spec.alpha),
        descriptor: Descriptor {
            variant: spec.variant,
            label: spec.label(),
            alpha: spec.alpha,
            beta: spec.beta,
            k_order: spec.k_order,
            rank: spec.rank,
            path,
            source_bound: false,
            eig,
        },
    })
}

/// Builds the rule for `spec`. `h0` must be given exactly for the variants
/// with a source term (APPNP, DAGNN).
pub fn build_propagation<T: Scalar>(
    spec: &RegularizerSpec,
    ops: &GraphOperators<T>,
    h0: Option<&DenseMatrix<T>>,
) -> Result<PropagationOperator<T>> {
    build_propagation_with(spec, ops, h0, &BuildOptions::default())
}

pub fn build_propagation_with<T: Scalar>(
    spec: &RegularizerSpec,
    ops: &GraphOperators<T>,
    h0: Option<&DenseMatrix<T>>,
    opts: &BuildOptions,
) -> Result<PropagationOperator<T>> {
    match (spec.variant.needs_source(), h0) {
        (true, None) => return Err(Error::Spec(format!("{} needs a source term H0", spec.variant))),
        (false, Some(_)) => {
            return Err(Error::Spec(format!("{} takes no source term", spec.variant)));
        }
        _ => {}
    }
    let mut op = build_layer_propagation(spec, ops, opts)?;
    if let Some(h0) = h0 {
        if h0.n_rows() != ops.n_nodes() {
            return Err(Error::shape("build_propagation", format!("{} rows", ops.n_nodes()), h0.n_rows()));
        }
        op.source = Some(h0.clone());
        op.descriptor.source_bound = true;
    }
    Ok(op)
}
