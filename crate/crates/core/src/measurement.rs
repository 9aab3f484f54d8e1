//! The phaseless measurement model `y = α(x) + ν`.

use std::ops::Index;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::frames::Frame;
use crate::hilbert::ComplexVector;
use crate::rng::stream_rng;
use crate::symops::SymOperator;

/// Length-`m` real measurement vector. Entries may be negative once noise is
/// added.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVector(DVector<f64>);

impl MeasurementVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self(DVector::from_vec(values)))
    }

    pub fn zeros(m: usize) -> Self {
        Self(DVector::zeros(m))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn as_dvector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.norm_squared()
    }

    /// Euclidean distance to another measurement vector of the same length.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        check_dim(self.len(), other.len())?;
        Ok((&self.0 - &other.0).norm())
    }
}

impl Index<usize> for MeasurementVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Additive white Gaussian noise with standard deviation `sigma`, drawn from
/// the stream `(seed, stream)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
    pub stream: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!("sigma must be >= 0, got {sigma}")));
        }
        Ok(Self {
            sigma,
            seed,
            stream: 0,
        })
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }
}

/// `α(x)_k = |⟨x, f_k⟩|²`.
pub fn alpha(frame: &Frame, x: &ComplexVector) -> Result<MeasurementVector> {
    let c = frame.coefficients(x)?;
    Ok(MeasurementVector(c.map(|z| z.norm_sqr())))
}

/// `𝒜(T)_k = ⟨T f_k, f_k⟩ = tr{T F_k}`.
pub fn cal_a(frame: &Frame, t: &SymOperator) -> Result<MeasurementVector> {
    check_dim(frame.dim(), t.dim())?;
    let f = frame.synthesis();
    let tf = t.matrix() * f;
    let vals = DVector::from_fn(frame.len(), |k, _| {
        f.column(k)
            .iter()
            .zip(tf.column(k).iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    });
    Ok(MeasurementVector(vals))
}

/// `𝒜(u∘v)_k = Re(⟨u, f_k⟩⟨f_k, v⟩)`, evaluated from analysis coefficients.
pub fn cal_a_outer(frame: &Frame, u: &ComplexVector, v: &ComplexVector) -> Result<MeasurementVector> {
    let cu = frame.coefficients(u)?;
    let cv = frame.coefficients(v)?;
    Ok(MeasurementVector(cu.zip_map(&cv, |a, b| (a * b.conj()).re)))
}

/// `y + ν` with `ν_k ~ N(0, σ²)` i.i.d. No clipping is applied.
pub fn add_noise(y: &MeasurementVector, spec: &NoiseSpec) -> MeasurementVector {
    if spec.sigma == 0.0 {
        return y.clone();
    }
    let mut rng = stream_rng(spec.seed, spec.stream);
    let noisy = y.0.map(|v| {
        let g: f64 = rng.sample(StandardNormal);
        v + spec.sigma * g
    });
    MeasurementVector(noisy)
}

/// `σ` such that `Σ_k |⟨x,f_k⟩|⁴ / (m σ²) = 10^{snr_db/10}`.
pub fn sigma_for_snr(frame: &Frame, x: &ComplexVector, snr_db: f64) -> Result<f64> {
    if x.is_zero() {
        return Err(Error::InvalidArgument("SNR is undefined for x = 0".into()));
    }
    let y = alpha(frame, x)?;
    let power = y.norm_squared() / frame.len() as f64;
    Ok((power / 10f64.powf(snr_db / 10.0)).sqrt())
}

/// Inverse of [`sigma_for_snr`].
pub fn snr_db(frame: &Frame, x: &ComplexVector, sigma: f64) -> Result<f64> {
    let y = alpha(frame, x)?;
    Ok(10.0 * (y.norm_squared() / (frame.len() as f64 * sigma * sigma)).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::random_gaussian_frame;
    use crate::rng::{complex_gaussian_vector, complex_normal};
    use crate::symops::{rank_one, sym_outer};
    use nalgebra::DMatrix;

    #[test]
    fn alpha_examples() {
        let f = random_gaussian_frame(3, 7, 1).unwrap();
        let y = alpha(&f, &ComplexVector::zeros(3)).unwrap();
        assert!(y.as_slice().iter().all(|&v| v == 0.0));

        let b = Frame::standard_basis(4);
        let y = alpha(&b, &ComplexVector::basis(4, 0)).unwrap();
        assert_eq!(y.as_slice(), &[1.0, 0.0, 0.0, 0.0]);

        let mut rng = stream_rng(30, 0);
        for _ in 0..20 {
            let x = complex_gaussian_vector(&mut rng, 3);
            let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let a = alpha(&f, &x).unwrap();
            let b = alpha(&f, &x.rotate_phase(phi)).unwrap();
            assert!(a.as_slice().iter().all(|&v| v >= 0.0));
            for k in 0..a.len() {
                assert!((a[k] - b[k]).abs() <= 1e-14 * (1.0 + a[k]) * 4.0);
            }
        }
        assert!(alpha(&f, &ComplexVector::zeros(2)).is_err());
    }

    #[test]
    fn cal_a_examples() {
        let f = random_gaussian_frame(4, 9, 2).unwrap();
        let ones = cal_a(&f, &SymOperator::identity(4)).unwrap();
        assert!(ones.as_slice().iter().all(|v| (v - 1.0).abs() < 1e-14));

        let mut rng = stream_rng(31, 0);
        let x = complex_gaussian_vector(&mut rng, 4);
        let a = alpha(&f, &x).unwrap();
        let b = cal_a(&f, &rank_one(&x)).unwrap();
        assert!((a.as_dvector() - b.as_dvector()).amax() <= 1e-13 * (1.0 + a.as_dvector().amax()));
    }

    #[test]
    fn cal_a_is_linear() {
        let f = random_gaussian_frame(3, 8, 3).unwrap();
        let mut rng = stream_rng(32, 0);
        let herm = |rng: &mut crate::rng::StreamRng| {
            let m = DMatrix::from_fn(3, 3, |_, _| complex_normal(rng));
            SymOperator::new((&m + m.adjoint()) * num_complex::Complex64::new(0.5, 0.0)).unwrap()
        };
        let t = herm(&mut rng);
        let s = herm(&mut rng);
        let (a, b) = (1.7, -0.4);
        let lhs = cal_a(&f, &(&t.scale(a) + &s.scale(b))).unwrap();
        let rhs = cal_a(&f, &t).unwrap().as_dvector() * a + cal_a(&f, &s).unwrap().as_dvector() * b;
        assert!((lhs.as_dvector() - rhs).amax() < 1e-12);
    }

    #[test]
    fn outer_product_expansion() {
        let f = random_gaussian_frame(4, 10, 4).unwrap();
        let mut rng = stream_rng(33, 0);
        let u = complex_gaussian_vector(&mut rng, 4);
        let v = complex_gaussian_vector(&mut rng, 4);
        let dense = cal_a(&f, &sym_outer(&u, &v).unwrap()).unwrap();
        let fast = cal_a_outer(&f, &u, &v).unwrap();
        assert!((dense.as_dvector() - fast.as_dvector()).amax() < 1e-12);
    }

    #[test]
    fn noise_statistics_and_determinism() {
        let y = MeasurementVector::zeros(100_000);
        let spec = NoiseSpec::new(0.3, 17).unwrap();
        let a = add_noise(&y, &spec);
        let b = add_noise(&y, &spec);
        assert_eq!(a, b);
        let mean = a.as_slice().iter().sum::<f64>() / a.len() as f64;
        let var = a.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (a.len() - 1) as f64;
        assert!((var / 0.09 - 1.0).abs() < 0.05, "variance {var}");
        assert!(a.as_slice().iter().any(|&v| v < 0.0));

        let c = add_noise(&y, &spec.with_stream(1));
        assert_ne!(a, c);

        let z = MeasurementVector::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(add_noise(&z, &NoiseSpec::new(0.0, 1).unwrap()), z);
        assert!(NoiseSpec::new(-1.0, 0).is_err());
    }

    #[test]
    fn sigma_for_snr_examples() {
        let f = random_gaussian_frame(3, 12, 5).unwrap();
        let mut rng = stream_rng(34, 0);
        let x = complex_gaussian_vector(&mut rng, 3);
        let power = alpha(&f, &x).unwrap().norm_squared() / 12.0;
        let db = 10.0 * power.log10();
        assert!((sigma_for_snr(&f, &x, db).unwrap() - 1.0).abs() < 1e-12);

        let s0 = sigma_for_snr(&f, &x, 7.0).unwrap();
        let s1 = sigma_for_snr(&f, &x, 17.0).unwrap();
        assert!((s1 / s0 - 10f64.powf(-0.5)).abs() < 1e-14);

        for target in [-30.0, 0.0, 12.5, 40.0] {
            let s = sigma_for_snr(&f, &x, target).unwrap();
            assert!((snr_db(&f, &x, s).unwrap() - target).abs() < 1e-12);
        }
        assert!(sigma_for_snr(&f, &ComplexVector::zeros(3), 10.0).is_err());
    }
}
