//! Pointwise field values shared by solutions, exact solutions and error
//! measurement.

use crate::error::Result;
use crate::geometry::Mat2;
use crate::spaces::ParametricMesh;

/// Deflection and rotation with physical gradients at one point.
/// `grad_theta[i][j] = d theta_i / d x_j`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldValues {
    pub w: f64,
    pub grad_w: [f64; 2],
    pub theta: [f64; 2],
    pub grad_theta: Mat2,
}

/// Something that can be compared against a discrete solution: an exact
/// solution (evaluated at the physical point `x`) or another discrete
/// solution on the same geometry (evaluated at the parametric point).
pub trait ReferenceSolution: Send + Sync {
    fn eval(&self, uhat: [f64; 2], x: [f64; 2]) -> Result<FieldValues>;

    /// Physical shear `mu k t^-2 (theta - grad w)`.
    fn shear(&self, uhat: [f64; 2], x: [f64; 2]) -> Result<[f64; 2]>;

    /// Breakpoints of a piecewise reference, so that error integrals can
    /// follow the common refinement.
    fn parametric_mesh(&self) -> Option<&ParametricMesh> {
        None
    }
}

/// Closed-form fields evaluated at physical points.
pub struct FnFields<F, G> {
    fields: F,
    shear: G,
}

impl<F, G> FnFields<F, G>
where
    F: Fn([f64; 2]) -> FieldValues + Send + Sync,
    G: Fn([f64; 2]) -> [f64; 2] + Send + Sync,
{
    pub fn new(fields: F, shear: G) -> Self {
        FnFields { fields, shear }
    }
}

impl<F, G> ReferenceSolution for FnFields<F, G>
where
    F: Fn([f64; 2]) -> FieldValues + Send + Sync,
    G: Fn([f64; 2]) -> [f64; 2] + Send + Sync,
{
    fn eval(&self, _uhat: [f64; 2], x: [f64; 2]) -> Result<FieldValues> {
        Ok((self.fields)(x))
    }

    fn shear(&self, _uhat: [f64; 2], x: [f64; 2]) -> Result<[f64; 2]> {
        Ok((self.shear)(x))
    }
}
