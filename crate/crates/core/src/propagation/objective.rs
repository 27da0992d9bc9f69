use crate::error::{Error, Result};
use crate::graph::GraphOperators;
use crate::linalg::{dense_inverse, DenseMatrix};
use crate::scalar::Scalar;

use super::spec::{RegularizerSpec, Variant};

/// Largest graph the dense objective oracle accepts.
pub const DENSE_ORACLE_LIMIT: usize = 64;

/// `J(H) = −Tr(Hᵀ(F + C)) + ½Tr(HᵀMH)` in dense form.
pub(crate) struct Quadratic<T: Scalar> {
    pub m: DenseMatrix<T>,
    pub target: DenseMatrix<T>,
}

fn shifted_identity<T: Scalar>(base: &DenseMatrix<T>, c: f64) -> DenseMatrix<T> {
    let mut out = base.scale(T::of(c));
    for i in 0..out.n_rows() {
        out[(i, i)] += T::one();
    }
    out
}

pub(crate) fn quadratic<T: Scalar>(
    spec: &RegularizerSpec,
    ops: &GraphOperators<T>,
    b: &DenseMatrix<T>,
    h0: Option<&DenseMatrix<T>>,
) -> Result<Quadratic<T>> {
    let n = ops.n_nodes();
    if n > DENSE_ORACLE_LIMIT {
        return Err(Error::TooLarge { n, max: DENSE_ORACLE_LIMIT });
    }
    if b.n_rows() != n {
        return Err(Error::shape("regularizer_objective", format!("{n} rows"), b.n_rows()));
    }
    let needs = |what: &str| Error::Spec(format!("{} objective needs {what}", spec.variant));
    let a_hat = ops.a_hat.to_dense();
    let l_hat = ops.l_hat()?.to_dense();
    let mut target = b.clone();
    let m = match spec.variant {
        Variant::Gcn | Variant::Sgc => ops.l_topo.to_dense(),
        Variant::Appnp => {
            let h0 = h0.ok_or_else(|| needs("H0"))?;
            let a_inv = dense_inverse(&a_hat)?;
            let c = spec.alpha / (1.0 - spec.alpha);
            target.axpy(T::one(), &a_inv.matmul(h0)?.scale(T::of(c)))?;
            a_inv.scale(T::of(1.0 / (1.0 - spec.alpha)))
        }
        Variant::JkNet => dense_inverse(&a_hat)?.matmul(&shifted_identity(&l_hat, spec.beta))?,
        Variant::Dagnn => {
            target = h0.ok_or_else(|| needs("H0"))?.clone();
            shifted_identity(&l_hat, spec.beta)
        }
        Variant::GnnHf | Variant::GnnLf => {
            let (lambda, mu) = spec.rational_parameters().expect("rational variant");
            let base = if spec.variant == Variant::GnnHf { &l_hat } else { &a_hat };
            dense_inverse(&shifted_identity(base, mu))?.matmul(&shifted_identity(base, lambda))?
        }
        Variant::Tsgcn | Variant::TsgcnS | Variant::TsgcnT => {
            let (a, bw) = spec.tsgcn_weights();
            let joint = ops.l_topo.add_scaled(T::of(a), &ops.l_sem, T::of(bw))?.to_dense();
            shifted_identity(&joint, 1.0)
        }
    };
    if target.shape() != b.shape() {
        return Err(Error::shape("regularizer_objective", format!("{:?}", b.shape()), format!("{:?}", target.shape())));
    }
    Ok(Quadratic { m, target })
}

/// Value of the layer objective `−Tr(HᵀH^{(l−1)}Θ) + ½·L(H; G)` for `spec`,
/// evaluated with dense matrices and explicit inverses. `b` is `H^{(l−1)}Θ`.
///
/// DAGNN fits `H⁰` in place of `b`; APPNP's regularizer contributes the extra
/// linear term in `H⁰`. Graphs above [`DENSE_ORACLE_LIMIT`] nodes are refused.
pub fn regularizer_objective<T: Scalar>(
    spec: &RegularizerSpec,
    ops: &GraphOperators<T>,
    h: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    h0: Option<&DenseMatrix<T>>,
) -> Result<T> {
    let q = quadratic(spec, ops, b, h0)?;
    let fit = h.inner(&q.target)?;
    let reg = h.inner(&q.m.matmul(h)?)?;
    Ok(-fit + T::of(0.5) * reg)
}

/// Gradient of [`regularizer_objective`] with respect to `H`.
pub fn objective_gradient<T: Scalar>(
    spec: &RegularizerSpec,
    ops: &GraphOperators<T>,
    h: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    h0: Option<&DenseMatrix<T>>,
) -> Result<DenseMatrix<T>> {
    let q = quadratic(spec, ops, b, h0)?;
    let sym = q.m.add(&q.m.transpose())?.scale(T::of(0.5));
    sym.matmul(h)?.sub(&q.target)
}
