//! The J_z normalization switch for the classical-phase parameter.
//!
//! Two conventions circulate for the generator conjugate to the differential
//! phase beta: J_z itself (eigenvalues m) or the mode-number difference
//! `a^dag a - b^dag b` (eigenvalues 2m). They differ by a factor of 4 in every
//! beta row/column of a Fisher matrix. The covariance oracle shows that the
//! published reference values (F_bb = 2N^2 for the three-peak state) are
//! reproduced by the 2m choice, so that is the default here; the half
//! convention stays available behind this switch.

/// Which generator the phase `beta` multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JzConvention {
    /// beta couples to J_z (eigenvalues m).
    Half,
    /// beta couples to a^dag a - b^dag b = 2 J_z (eigenvalues 2m). Default;
    /// reproduces the reference Fisher values.
    #[default]
    Unit,
}

impl JzConvention {
    /// Multiplier applied to the J_z eigenvalue m in the beta generator.
    #[inline]
    pub fn beta_weight(self) -> f64 {
        match self {
            JzConvention::Half => 1.0,
            JzConvention::Unit => 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            JzConvention::Half => "half",
            JzConvention::Unit => "unit",
        }
    }
}
