use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `10·log10(p)`. The normalized power unit is taken as 1 mW, so the result
/// reads directly in dBm.
pub fn to_dbm<T: Scalar>(p: T) -> Result<T> {
    if !(p > T::zero()) {
        return Err(Error::invalid(format!("power must be positive, got {p}")));
    }
    Ok(T::lit(10.0) * p.log10())
}

/// Inverse of [`to_dbm`]: `10^(x/10)`.
pub fn from_db<T: Scalar>(x: T) -> T {
    T::lit(10.0).powf(x / T::lit(10.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_power_is_zero_dbm() {
        assert_eq!(to_dbm(1.0_f64).unwrap(), 0.0);
    }

    #[test]
    fn six_db_linear() {
        assert_relative_eq!(from_db(6.0_f64), 3.981_071_705_534_973, max_relative = 1e-14);
        assert_relative_eq!(from_db(6.0_f32), 3.981_071_7_f32, max_relative = 1e-6);
    }

    #[test]
    fn round_trip() {
        for x in [-30.0_f64, -1.5, 0.0, 6.0, 17.2, 40.0] {
            assert_relative_eq!(to_dbm(from_db(x)).unwrap(), x, epsilon = 1e-12);
        }
    }

    #[test]
    fn dbm_of_hybrid_bound() {
        assert_relative_eq!(to_dbm(52.2_f64).unwrap(), 17.1767, epsilon = 1e-4);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(matches!(to_dbm(0.0_f64), Err(Error::InvalidArgument(_))));
        assert!(to_dbm(-1.0_f64).is_err());
        assert!(to_dbm(f64::NAN).is_err());
    }
}
