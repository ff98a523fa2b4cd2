//! Points of the punctured parameter cylinder: longitudinal momentum `kx` and
//! boundary parameter `a` in the projective line.

use num_traits::Float;

use crate::error::{config, Error, Result};

/// Projective boundary parameter `(p, q)`, `a = q / p`.
///
/// Stands for the boundary conditions `v(0) = 0` and
/// `p * (i kx u)(0) + q * v'(0) = 0`. Stored normalized with `p > 0`, or
/// `(p, q) = (0, 1)` for `a = inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryParam {
    p: f64,
    q: f64,
}

impl BoundaryParam {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        let n = Float::hypot(p, q);
        if !n.is_finite() || n == 0.0 {
            return config("boundary pair (p, q) must be finite and nonzero");
        }
        let (mut p, mut q) = (p / n, q / n);
        if p < 0.0 || (p == 0.0 && q < 0.0) {
            p = -p;
            q = -q;
        }
        if p == 0.0 {
            q = 1.0;
        }
        Ok(BoundaryParam { p: p + 0.0, q: q + 0.0 })
    }

    pub fn from_a(a: f64) -> Result<Self> {
        if !a.is_finite() {
            return config("boundary parameter a must be finite; use BoundaryParam::infinity");
        }
        Self::new(1.0, a)
    }

    /// `a = inf`, the condition `v(0) = v'(0) = 0`.
    pub fn infinity() -> Self {
        BoundaryParam { p: 0.0, q: 1.0 }
    }

    /// Point of the projective circle at angle `phi`, `(p, q) = (cos phi, sin phi)`.
    pub fn from_angle(phi: f64) -> Self {
        let (s, c) = Float::sin_cos(phi);
        Self::new(c, s).unwrap_or_else(|_| Self::infinity())
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `None` for `a = inf`.
    pub fn a(&self) -> Option<f64> {
        if self.p == 0.0 {
            None
        } else {
            Some(self.q / self.p)
        }
    }

    /// Angle in `(-pi/2, pi/2]` with `a = tan(angle)`.
    pub fn angle(&self) -> f64 {
        Float::atan2(self.q, self.p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderPoint {
    kx: f64,
    bc: BoundaryParam,
}

impl CylinderPoint {
    pub fn new(kx: f64, bc: BoundaryParam) -> Result<Self> {
        if !kx.is_finite() {
            return config("kx must be finite");
        }
        if kx == 0.0 && bc.q == 0.0 {
            return Err(Error::Puncture);
        }
        Ok(CylinderPoint { kx, bc })
    }

    pub fn from_kx_a(kx: f64, a: f64) -> Result<Self> {
        Self::new(kx, BoundaryParam::from_a(a)?)
    }

    pub fn kx(&self) -> f64 {
        self.kx
    }

    pub fn bc(&self) -> BoundaryParam {
        self.bc
    }

    /// Distance to the puncture in the flat `(kx, angle)` metric.
    pub fn puncture_distance(&self) -> f64 {
        Float::hypot(self.kx, self.bc.angle())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_representative() {
        let b = BoundaryParam::new(-2.0, -1.0).unwrap();
        assert!(b.p() > 0.0);
        assert!((b.a().unwrap() - 0.5).abs() < 1e-15);
        let inf = BoundaryParam::new(0.0, -3.0).unwrap();
        assert_eq!(inf, BoundaryParam::infinity());
        assert_eq!(inf.a(), None);
        assert!(BoundaryParam::new(0.0, 0.0).is_err());
    }

    #[test]
    fn angle_roundtrip() {
        for k in -9..=9 {
            let phi = k as f64 * 0.17;
            let b = BoundaryParam::from_angle(phi);
            assert!((b.angle() - phi).abs() < 1e-14);
        }
        let b = BoundaryParam::from_angle(core::f64::consts::FRAC_PI_2);
        assert!(b.a().map_or(true, |a| a.abs() > 1e15));
    }

    #[test]
    fn puncture_rejected() {
        assert_eq!(CylinderPoint::from_kx_a(0.0, 0.0), Err(Error::Puncture));
        assert!(CylinderPoint::from_kx_a(0.0, 1.0).is_ok());
        assert!(CylinderPoint::from_kx_a(1e-12, 0.0).is_ok());
        assert!(CylinderPoint::new(0.0, BoundaryParam::infinity()).is_ok());
    }
}
