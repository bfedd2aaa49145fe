use super::space::FeSpace;
use super::sparse::{CsrMatrix, Scalar};
use crate::error::{Error, Result};

/// Impose `x[dofs[k]] = values[k]` by symmetric elimination.
///
/// Constrained rows and columns are zeroed with a unit diagonal, and the
/// known values are moved to the right-hand side of the free equations, so
/// the free block of the system is unchanged and symmetry is preserved.
pub fn constrain_dirichlet<T: Scalar>(
    space: &FeSpace,
    a: &CsrMatrix<T>,
    b: &[T],
    dofs: &[usize],
    values: &[T],
) -> Result<(CsrMatrix<T>, Vec<T>)> {
    if dofs.len() != values.len() {
        return Err(Error::InvalidSpec("one Dirichlet value per constrained DOF is required".into()));
    }
    let mut full = vec![T::zero(); a.nrows()];
    let mut mask = vec![false; a.nrows()];
    for (&d, &v) in dofs.iter().zip(values) {
        if d >= space.ndofs() || !space.is_boundary_dof(d) {
            return Err(Error::InvalidSpec(format!("DOF {d} is not a boundary DOF")));
        }
        mask[d] = true;
        full[d] = v;
    }
    Ok(apply_dirichlet(a, b, &mask, &full))
}

/// Symmetric elimination for the DOFs flagged in `mask`, with prescribed
/// values read from `values` (full length).
pub fn apply_dirichlet<T: Scalar>(a: &CsrMatrix<T>, b: &[T], mask: &[bool], values: &[T]) -> (CsrMatrix<T>, Vec<T>) {
    let mut rhs = b.to_vec();
    for i in 0..a.nrows() {
        if mask[i] {
            rhs[i] = values[i];
            continue;
        }
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if mask[j] {
                rhs[i] -= v * values[j];
            }
        }
    }
    (eliminate(a, mask), rhs)
}

/// Zero the rows and columns flagged in `mask` and put 1 on their diagonal.
/// For homogeneous constraints the right-hand side only needs zeros at the
/// flagged entries.
pub fn eliminate<T: Scalar>(a: &CsrMatrix<T>, mask: &[bool]) -> CsrMatrix<T> {
    let mut out = a.clone();
    let indptr = a.indptr().to_vec();
    let indices = a.indices().to_vec();
    let vals = out.values_mut();
    for i in 0..a.nrows() {
        for k in indptr[i]..indptr[i + 1] {
            let j = indices[k];
            if mask[i] || mask[j] {
                vals[k] = if i == j { T::one() } else { T::zero() };
            }
        }
    }
    out
}
