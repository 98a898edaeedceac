//! Haar-distributed orthogonal matrices and the block random task
//! transformation `O = Qp * diag(Qm, I_{p-m}) * Qp^T`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// Dense orthogonal matrix.
///
/// Constructed by [`sample_haar`] or checked on entry via
/// [`OrthogonalMatrix::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMatrix {
    dim: usize,
    entries: DMatrix<f64>,
}

impl OrthogonalMatrix {
    /// Wrap a matrix, verifying `Q^T Q = I` and `det Q = ±1`.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::InvalidDimension(format!(
                "orthogonal matrix must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let q = OrthogonalMatrix {
            dim: entries.nrows(),
            entries,
        };
        q.validate()?;
        Ok(q)
    }

    /// Orthogonality defect `max |Q^T Q - I|` and determinant check.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Ok(());
        }
        let gram = self.entries.transpose() * &self.entries;
        let defect = (gram - DMatrix::identity(self.dim, self.dim))
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        if defect > 1e-12 * self.dim as f64 {
            return Err(Error::InvalidArgument(format!(
                "orthogonality defect {defect:.3e} too large for dim {}",
                self.dim
            )));
        }
        let det = self.entries.determinant();
        if (det.abs() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "determinant {det} is not within 1e-9 of +-1"
            )));
        }
        Ok(())
    }

    pub(crate) fn from_sampled_unchecked(entries: DMatrix<f64>) -> Self {
        debug_assert_eq!(entries.nrows(), entries.ncols());
        OrthogonalMatrix {
            dim: entries.nrows(),
            entries,
        }
    }

    pub(crate) fn empty() -> Self {
        OrthogonalMatrix {
            dim: 0,
            entries: DMatrix::zeros(0, 0),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// Haar-distributed sample from the orthogonal group `O(dim)`.
///
/// QR decomposition of an i.i.d. standard-normal matrix, with column `j` of
/// `Q` flipped by `sign(R_jj)`. Without the sign correction QR is not
/// Haar-distributed.
pub fn sample_haar<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<OrthogonalMatrix> {
    if dim == 0 {
        return Err(Error::InvalidDimension(
            "Haar sampling needs dim >= 1".into(),
        ));
    }
    Ok(OrthogonalMatrix::from_sampled_unchecked(haar_matrix(
        dim, rng,
    )))
}

fn haar_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let gauss = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = gauss.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            for i in 0..dim {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// The random task transformation `O = Qp * diag(Qm, I_{p-m}) * Qp^T`.
///
/// `O` rotates a uniformly random `m`-dimensional subspace and fixes its
/// `(p-m)`-dimensional complement. Both the factors and the composed
/// operator are kept: solvers consume `composed`, moment cross-checks the
/// factors.
#[derive(Debug, Clone)]
pub struct BlockRotation {
    p: usize,
    m: usize,
    qp: OrthogonalMatrix,
    qm: OrthogonalMatrix,
    composed: DMatrix<f64>,
}

impl BlockRotation {
    pub fn p(&self) -> usize {
        self.p
    }

    /// Dimension of the rotated subspace.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn qp(&self) -> &OrthogonalMatrix {
        &self.qp
    }

    /// Empty for `m = 0`; a uniform `{+1, -1}` scalar for `m = 1`.
    pub fn qm(&self) -> &OrthogonalMatrix {
        &self.qm
    }

    pub fn composed(&self) -> &DMatrix<f64> {
        &self.composed
    }
}

/// Sample a [`BlockRotation`] with `Qp ~ O(p)` and `Qm ~ O(m)`.
///
/// For `m = 0` the operator is exactly the identity.
pub fn make_block_rotation<R: Rng + ?Sized>(
    p: usize,
    m: usize,
    rng: &mut R,
) -> Result<BlockRotation> {
    if p == 0 {
        return Err(Error::InvalidDimension("p must be >= 1".into()));
    }
    if m > p {
        return Err(Error::InvalidDimension(format!(
            "transformed-subspace dimension m={m} exceeds p={p}"
        )));
    }
    let qp = sample_haar(p, rng)?;
    if m == 0 {
        return Ok(BlockRotation {
            p,
            m,
            qp,
            qm: OrthogonalMatrix::empty(),
            composed: DMatrix::identity(p, p),
        });
    }
    let qm = sample_haar(m, rng)?;
    let mut inner = DMatrix::identity(p, p);
    inner.view_mut((0, 0), (m, m)).copy_from(qm.matrix());
    let composed = qp.matrix() * inner * qp.matrix().transpose();
    Ok(BlockRotation {
        p,
        m,
        qp,
        qm,
        composed,
    })
}

/// Apply the transformation to data: `X O`, rows are samples.
pub fn apply_rotation(b: &BlockRotation, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() != b.p {
        return Err(Error::InvalidDimension(format!(
            "data has {} columns but the rotation acts on dimension {}",
            x.ncols(),
            b.p
        )));
    }
    Ok(x * &b.composed)
}
