//! Tolerance constants, one per concern.

/// Row sums and distribution sums must match 1 within this.
pub const VALIDATION: f64 = 1e-12;

/// Algebraic identities that hold exactly in real arithmetic.
pub const IDENTITY: f64 = 1e-10;

/// Convergence target for scalar searches (golden section, bisection).
pub const OPTIMIZER: f64 = 1e-8;

/// Step for central finite differences of `E0` and `Ex` at `ρ = 1`.
pub const DERIVATIVE_STEP: f64 = 1e-5;

/// Coarse step used for the Richardson cross-check of the derivatives.
pub const DERIVATIVE_STEP_COARSE: f64 = 1e-3;
