//! Mean-zero real periodic functions as truncated Fourier series.
//!
//! Everything works in the orthonormal basis `e_k(x) = exp(ikx)/sqrt(2*pi)`
//! on `[0, 2*pi]`. With that choice Parseval is coefficient-diagonal and the
//! Poincare and interpolation inequalities hold with constant exactly 1.
//!
//! A real-valued field with zero mean is determined by its coefficients for
//! `k >= 1`; the negative modes follow from Hermitian symmetry
//! `a_{-k} = conj(a_k)` and there is no `k = 0` entry. We only store the
//! positive half.

use num_complex::Complex64;

use crate::error::FieldError;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Which trig function a pure harmonic is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Harmonic {
    Sin,
    Cos,
}

/// A mean-zero real 2*pi-periodic function, stored as the coefficients
/// `a_1 .. a_n` with respect to the orthonormal exponential basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierField {
    /// `coeffs[i]` is the amplitude of mode `k = i + 1`.
    coeffs: Vec<Complex64>,
}

impl FourierField {
    /// The zero field with the given truncation order.
    pub fn zero(n_modes: usize) -> Self {
        FourierField {
            coeffs: vec![Complex64::new(0.0, 0.0); n_modes],
        }
    }

    /// Builds a field from the coefficients of modes `1..=n`. The negative
    /// modes are implied by Hermitian symmetry.
    pub fn from_positive_coeffs(coeffs: Vec<Complex64>) -> Result<Self, FieldError> {
        for (i, c) in coeffs.iter().enumerate() {
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(FieldError::NonFinite { mode: i + 1 });
            }
        }
        Ok(FourierField { coeffs })
    }

    /// `amplitude * sin(kx)` or `amplitude * cos(kx)` as a field.
    pub fn harmonic(amplitude: f64, kind: Harmonic, wavenumber: usize) -> Self {
        assert!(wavenumber >= 1, "harmonics must have wavenumber >= 1");
        let mut f = FourierField::zero(wavenumber);
        // sin(kx) = sqrt(2*pi) (e_k - e_{-k}) / (2i), cos(kx) = sqrt(2*pi) (e_k + e_{-k}) / 2
        let half = amplitude * TWO_PI.sqrt() / 2.0;
        f.coeffs[wavenumber - 1] = match kind {
            Harmonic::Sin => Complex64::new(0.0, -half),
            Harmonic::Cos => Complex64::new(half, 0.0),
        };
        f
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient of mode `k` over the full symmetric sequence. Returns 0
    /// for `k = 0` and for modes beyond the truncation order.
    pub fn coeff(&self, k: i64) -> Complex64 {
        if k == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let idx = (k.unsigned_abs() as usize) - 1;
        match self.coeffs.get(idx) {
            Some(c) if k > 0 => *c,
            Some(c) => c.conj(),
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// The stored positive-mode coefficients, `a_1 ..= a_n`.
    pub fn positive_coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Zero-pads to a wider truncation order. Shrinking is an error, even if
    /// the dropped coefficients happen to be zero at some point of a run.
    pub fn zero_padded(&self, n_modes: usize) -> Result<Self, FieldError> {
        if n_modes < self.coeffs.len() {
            return Err(FieldError::WouldTruncate {
                from: self.coeffs.len(),
                to: n_modes,
            });
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(n_modes, Complex64::new(0.0, 0.0));
        Ok(FourierField { coeffs })
    }

    /// Coefficient-wise `d^order/dx^order`: multiplication by `(ik)^order`.
    pub fn derivative(&self, order: u32) -> Self {
        if order == 0 {
            return self.clone();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let ik = Complex64::new(0.0, (i + 1) as f64);
                a * ik.powu(order)
            })
            .collect();
        FourierField { coeffs }
    }

    /// `sqrt(sum_k |a_k|^2)` over the full symmetric sequence (Parseval).
    pub fn l2_norm(&self) -> f64 {
        (2.0 * self.coeffs.iter().map(|a| a.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// `sqrt(sum_k k^{2s} |a_k|^2)`. For `s = 1` this is `||f_x||`, the norm
    /// used on H^1; `s = -1` gives the H^{-1} norm of the residual.
    pub fn sobolev_norm(&self, s: i32) -> f64 {
        let sum: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| ((i + 1) as f64).powi(2 * s) * a.norm_sqr())
            .sum();
        (2.0 * sum).sqrt()
    }

    /// Rigorous upper bound on `||f||_inf` via the coefficient l1 sum:
    /// `sum_k |a_k| / sqrt(2*pi) >= sup |f|`. Never an underestimate, unlike
    /// sampling on a grid.
    pub fn sup_norm_bound(&self) -> f64 {
        2.0 * self.coeffs.iter().map(|a| a.norm()).sum::<f64>() / TWO_PI.sqrt()
    }

    /// L2 inner product of two real fields.
    pub fn l2_inner(&self, other: &FourierField) -> f64 {
        let n = self.coeffs.len().min(other.coeffs.len());
        let sum: f64 = (0..n)
            .map(|i| (self.coeffs[i] * other.coeffs[i].conj()).re)
            .sum();
        2.0 * sum
    }

    /// Pointwise product of two fields by exact convolution of the symmetric
    /// coefficient sequences, truncated to `out_modes` and projected back to
    /// mean zero (the `k = 0` output coefficient is discarded).
    pub fn product(&self, other: &FourierField, out_modes: usize) -> FourierField {
        let nf = self.coeffs.len() as i64;
        let ng = other.coeffs.len() as i64;
        let inv_sqrt = 1.0 / TWO_PI.sqrt();
        let mut coeffs = Vec::with_capacity(out_modes);
        for k in 1..=(out_modes as i64) {
            let mut b = Complex64::new(0.0, 0.0);
            // s runs over the nonzero modes of self with k - s inside other.
            let lo = (-nf).max(k - ng);
            let hi = nf.min(k + ng);
            for s in lo..=hi {
                if s == 0 || s == k {
                    continue;
                }
                b += self.coeff(s) * other.coeff(k - s);
            }
            coeffs.push(b * inv_sqrt);
        }
        FourierField { coeffs }
    }

    /// Evaluates the field at a point.
    pub fn evaluate(&self, x: f64) -> f64 {
        let mut sum = Complex64::new(0.0, 0.0);
        for (i, a) in self.coeffs.iter().enumerate() {
            let k = (i + 1) as f64;
            sum += a * Complex64::new(0.0, k * x).exp();
        }
        2.0 * sum.re / TWO_PI.sqrt()
    }

    /// Values on the uniform grid `x_j = 2*pi*j/m`, `j = 0..m`.
    pub fn evaluate_grid(&self, m: usize) -> Vec<f64> {
        (0..m).map(|j| self.evaluate(TWO_PI * j as f64 / m as f64)).collect()
    }

    /// `a*f + b*g`, padded to the wider bandwidth.
    pub fn lin_comb(a: f64, f: &FourierField, b: f64, g: &FourierField) -> FourierField {
        let n = f.coeffs.len().max(g.coeffs.len());
        let coeffs = (0..n)
            .map(|i| {
                let k = (i + 1) as i64;
                a * f.coeff(k) + b * g.coeff(k)
            })
            .collect();
        FourierField { coeffs }
    }

    pub fn scaled(&self, a: f64) -> FourierField {
        FourierField {
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }
}

impl std::ops::Add for &FourierField {
    type Output = FourierField;
    fn add(self, rhs: &FourierField) -> FourierField {
        FourierField::lin_comb(1.0, self, 1.0, rhs)
    }
}

impl std::ops::Sub for &FourierField {
    type Output = FourierField;
    fn sub(self, rhs: &FourierField) -> FourierField {
        FourierField::lin_comb(1.0, self, -1.0, rhs)
    }
}
