//! Truncation operators on field samples.

use crate::error::{invalid, Result};
use crate::lattice::FieldSample;

/// Split of a field at level `a` into `X' = X I[|X| <= a]` and `X'' = X I[|X| > a]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationPair {
    pub low_part: FieldSample,
    pub high_part: FieldSample,
    pub threshold: f64,
}

fn check_level(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return invalid(format!("{name} must be a positive finite real, got {v}"));
    }
    Ok(())
}

pub fn truncate(field: &FieldSample, a: f64) -> Result<TruncationPair> {
    check_level("truncation level", a)?;
    Ok(TruncationPair {
        // signed zeros keep `low + high` bitwise equal to the input at -0.0
        low_part: field.map(|x| if x.abs() <= a { x } else { 0.0f64.copysign(x) }),
        high_part: field.map(|x| if x.abs() <= a { 0.0f64.copysign(x) } else { x }),
        threshold: a,
    })
}

/// `min(cap, |x|) sgn(x)` sitewise.
pub fn capped_sign_truncate(field: &FieldSample, cap: f64) -> Result<FieldSample> {
    check_level("cap", cap)?;
    Ok(field.map(|x| if x.abs() <= cap { x } else { cap.copysign(x) }))
}

/// `x I[x < b] + b I[x >= b]` sitewise; the lower side passes through.
pub fn one_sided_truncate(field: &FieldSample, b: f64) -> Result<FieldSample> {
    check_level("level", b)?;
    Ok(field.map(|x| if x >= b { b } else { x }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::MultiIndex;

    fn f(v: &[f64]) -> FieldSample {
        FieldSample::new(MultiIndex::new(vec![v.len()]).unwrap(), v.to_vec()).unwrap()
    }

    #[test]
    fn truncate_examples() {
        let p = truncate(&f(&[3.0, -0.5]), 1.0).unwrap();
        assert_eq!(p.low_part.values(), &[0.0, -0.5]);
        assert_eq!(p.high_part.values(), &[3.0, 0.0]);

        let p = truncate(&f(&[0.1, -0.2]), 1.0).unwrap();
        assert_eq!(p.low_part.values(), &[0.1, -0.2]);
        assert!(p.high_part.values().iter().all(|&v| v == 0.0));

        let p = truncate(&f(&[-2.0, 2.0]), 2.0).unwrap();
        assert_eq!(p.low_part.values(), &[-2.0, 2.0]);
        assert_eq!(p.high_part.values(), &[0.0, 0.0]);

        assert!(truncate(&f(&[1.0]), 0.0).is_err());
        assert!(truncate(&f(&[1.0]), -1.0).is_err());
    }

    #[test]
    fn capped_sign_examples() {
        assert_eq!(capped_sign_truncate(&f(&[5.0, -5.0]), 2.0).unwrap().values(), &[2.0, -2.0]);
        assert_eq!(capped_sign_truncate(&f(&[0.5]), 2.0).unwrap().values(), &[0.5]);
        assert_eq!(capped_sign_truncate(&f(&[-3.0, 1.0, 3.0]), 3.0).unwrap().values(), &[-3.0, 1.0, 3.0]);
        assert!(capped_sign_truncate(&f(&[1.0]), 0.0).is_err());
    }

    #[test]
    fn one_sided_examples() {
        assert_eq!(one_sided_truncate(&f(&[10.0, -10.0]), 1.0).unwrap().values(), &[1.0, -10.0]);
        assert_eq!(one_sided_truncate(&f(&[0.2, -4.0]), 1.0).unwrap().values(), &[0.2, -4.0]);
        assert_eq!(one_sided_truncate(&f(&[1.0, 2.0, 3.0]), 2.0).unwrap().values(), &[1.0, 2.0, 2.0]);
        assert!(one_sided_truncate(&f(&[1.0]), -2.0).is_err());
    }
}
