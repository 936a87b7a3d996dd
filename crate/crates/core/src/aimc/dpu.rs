use super::lut::{lut_eval, Lut, LutFunction};
use crate::error::{Error, Result};
use crate::ref_models::SvddTarget;

/// Log-amplitude reduction: `sum_i LUT_log2cosh(a_i)`.
///
/// The adder tree sums logarithms; `psi` itself is `exp` of the result.
pub fn dpu_nqs_reduce(a: &[f64], l: &Lut) -> Result<f64> {
    if l.function != LutFunction::Log2Cosh {
        return Err(Error::InvalidArgument(format!(
            "NQS reduction needs a log2cosh table, got {:?}",
            l.function
        )));
    }
    Ok(a.iter().map(|&x| lut_eval(l, x)).sum())
}

/// Anomaly score `sum_k LUT_square(O_k - y_k)`.
pub fn dpu_svdd_reduce(y: &[f64], t: &SvddTarget, l: &Lut) -> Result<f64> {
    if l.function != LutFunction::Square {
        return Err(Error::InvalidArgument(format!(
            "SVDD reduction needs a square table, got {:?}",
            l.function
        )));
    }
    if y.len() != t.z {
        return Err(Error::dims("SVDD output length", t.z, y.len()));
    }
    Ok(y.iter().map(|&v| lut_eval(l, t.n - v)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aimc::lut::lut_build;
    use crate::ref_models::{log2cosh, svdd_score};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_vector_gives_hidden_ln2() {
        let l = lut_build(LutFunction::Log2Cosh, -2.0, 2.0, 1024).unwrap();
        let v = dpu_nqs_reduce(&[0.0; 32], &l).unwrap();
        assert!((v - 32.0 * std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(dpu_nqs_reduce(&[0.7], &l).unwrap(), lut_eval(&l, 0.7));
    }

    #[test]
    fn random_vectors_within_summed_bound() {
        let l = lut_build(LutFunction::Log2Cosh, -2.0, 2.0, 1024).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let a: Vec<f64> = (0..64).map(|_| rng.random_range(-2.0..2.0)).collect();
            let exact: f64 = a.iter().map(|&x| log2cosh(x)).sum();
            let got = dpu_nqs_reduce(&a, &l).unwrap();
            assert!((got - exact).abs() <= l.error_bound() * 64.0 + 1e-12);
        }
    }

    #[test]
    fn svdd_reduction() {
        let l = lut_build(LutFunction::Square, -30.0, 30.0, 1024).unwrap();
        let t = SvddTarget::new(5, 0.0).unwrap();
        assert_eq!(dpu_svdd_reduce(&[0.0; 5], &t, &l).unwrap(), 0.0);
        let v = dpu_svdd_reduce(&[1.0; 5], &t, &l).unwrap();
        assert!((v - 5.0).abs() <= 5.0 * l.error_bound());

        let t2 = SvddTarget::new(8, 3.0).unwrap();
        assert_eq!(dpu_svdd_reduce(&t2.point(), &t2, &l).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let y: Vec<f64> = (0..8).map(|_| rng.random_range(-20.0..20.0)).collect();
            let exact = svdd_score(&y, &t2).unwrap();
            let got = dpu_svdd_reduce(&y, &t2, &l).unwrap();
            assert!((got - exact).abs() <= 8.0 * l.error_bound() + 1e-9);
        }
    }

    #[test]
    fn wrong_table_kind_is_rejected() {
        let sq = lut_build(LutFunction::Square, -1.0, 1.0, 16).unwrap();
        let lc = lut_build(LutFunction::Log2Cosh, -1.0, 1.0, 16).unwrap();
        assert!(dpu_nqs_reduce(&[0.0], &sq).is_err());
        let t = SvddTarget::new(1, 0.0).unwrap();
        assert!(dpu_svdd_reduce(&[0.0], &t, &lc).is_err());
        assert!(dpu_svdd_reduce(&[0.0, 0.0], &t, &sq).is_err());
    }
}
