//! The discriminant-ordered generating series over Q: local factors, the
//! cyclotomic zeta factorization, truncated Euler products, the Möbius sieve
//! to surjections and the numeric limits built on them.

pub mod coeffs;
pub mod euler;
pub mod local;
pub mod lvalues;
pub mod sieve;
pub mod zeta;

pub use coeffs::{series_coefficients, COEFF_CAP};
pub use euler::{euler_product_truncated, EulerProductState, ProductMode};
pub use local::{local_factor, local_factor_in, ElementProfile, LocalFactor};
pub use zeta::{zeta_factorization, ZetaEntry, ZetaFactorization};
pub use sieve::{nonvanishing_limit, residue_main_term, sieve_to_surjective, LimitReport, ResidueReport, SieveReport};
