use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Rule for the nearest-neighbour hopping rates of a semi-infinite chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "table", rename_all = "snake_case")]
pub enum ProfileKind {
    /// κ_n = |ρ| for n ≥ 1.
    Uniform,
    /// κ_n = |ρ|·√n.
    GlauberFock,
    /// κ_n = |ρ|·table[n - 1]; the table is indexed from n = 1.
    Custom(Vec<f64>),
}

/// A lattice truncated to sites 0..=N.
///
/// Hopping magnitudes live in the profile rule; the phase of the complex
/// coupling scale `rho` rides on every bond (upper element −κ_{n+1}·ρ/|ρ|).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoppingProfile {
    pub kind: ProfileKind,
    pub rho: Complex64,
    /// Index of the last retained site, N.
    pub max_site: usize,
}

impl HoppingProfile {
    pub fn new(kind: ProfileKind, rho: Complex64, max_site: usize) -> Result<Self> {
        if !(rho.re.is_finite() && rho.im.is_finite()) {
            return Err(Error::InvalidProfile("rho must be finite".into()));
        }
        if let ProfileKind::Custom(table) = &kind {
            if table.len() < max_site {
                return Err(Error::InvalidProfile(format!(
                    "custom table has {} entries, needs at least {}",
                    table.len(),
                    max_site
                )));
            }
            if let Some(bad) = table.iter().position(|k| !k.is_finite() || *k < 0.0) {
                return Err(Error::InvalidProfile(format!(
                    "custom table entry for n = {} is {} (must be finite and nonnegative)",
                    bad + 1,
                    table[bad]
                )));
            }
        }
        Ok(Self {
            kind,
            rho,
            max_site,
        })
    }

    pub fn glauber_fock(rho: f64, max_site: usize) -> Self {
        Self::new(ProfileKind::GlauberFock, Complex64::new(rho, 0.0), max_site)
            .expect("real finite rho")
    }

    pub fn uniform(rho: f64, max_site: usize) -> Self {
        Self::new(ProfileKind::Uniform, Complex64::new(rho, 0.0), max_site).expect("real finite rho")
    }

    /// Number of amplitudes, N + 1.
    pub fn len(&self) -> usize {
        self.max_site + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// κ_n; κ_0 = 0 marks the open boundary.
    pub fn hopping(&self, n: usize) -> Result<f64> {
        if n > self.max_site {
            return Err(Error::SiteOutOfRange {
                index: n,
                max: self.max_site,
            });
        }
        Ok(self.hopping_unchecked(n))
    }

    fn hopping_unchecked(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let scale = self.rho.norm();
        match &self.kind {
            ProfileKind::Uniform => scale,
            ProfileKind::GlauberFock => scale * (n as f64).sqrt(),
            ProfileKind::Custom(table) => scale * table[n - 1],
        }
    }

    /// κ_1..=κ_N, the bond magnitudes of the truncated chain.
    pub fn bonds(&self) -> Vec<f64> {
        (1..=self.max_site).map(|n| self.hopping_unchecked(n)).collect()
    }

    /// ρ/|ρ|, or 1 for a vanishing coupling scale.
    pub fn unit_phase(&self) -> Complex64 {
        let r = self.rho.norm();
        if r == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            self.rho / r
        }
    }

    pub fn with_max_site(&self, max_site: usize) -> Result<Self> {
        Self::new(self.kind.clone(), self.rho, max_site)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_hopping_is_zero() {
        let gf = HoppingProfile::glauber_fock(1.0, 10);
        assert_eq!(gf.hopping(0).unwrap(), 0.0);
        let u = HoppingProfile::uniform(0.7, 20);
        assert_eq!(u.hopping(0).unwrap(), 0.0);
    }

    #[test]
    fn glauber_fock_square_root_rule() {
        let gf = HoppingProfile::glauber_fock(1.0, 10);
        assert_eq!(gf.hopping(4).unwrap(), 2.0);
        let gf = HoppingProfile::glauber_fock(0.5, 10);
        assert_eq!(gf.hopping(9).unwrap(), 1.5);
    }

    #[test]
    fn uniform_rule() {
        let u = HoppingProfile::uniform(0.7, 20);
        assert_eq!(u.hopping(13).unwrap(), 0.7);
    }

    #[test]
    fn complex_rho_uses_modulus() {
        let p = HoppingProfile::new(ProfileKind::GlauberFock, Complex64::new(0.0, 2.0), 5).unwrap();
        assert_eq!(p.hopping(1).unwrap(), 2.0);
        assert!((p.unit_phase() - Complex64::i()).norm() < 1e-15);
    }

    #[test]
    fn out_of_range_site() {
        let gf = HoppingProfile::glauber_fock(1.0, 10);
        assert_eq!(
            gf.hopping(11),
            Err(Error::SiteOutOfRange { index: 11, max: 10 })
        );
    }

    #[test]
    fn custom_table_validation() {
        let rho = Complex64::new(1.0, 0.0);
        assert!(HoppingProfile::new(ProfileKind::Custom(vec![1.0, 2.0]), rho, 3).is_err());
        assert!(HoppingProfile::new(ProfileKind::Custom(vec![1.0, f64::NAN, 1.0]), rho, 3).is_err());
        assert!(HoppingProfile::new(ProfileKind::Custom(vec![1.0, -1.0, 1.0]), rho, 3).is_err());
        let p = HoppingProfile::new(ProfileKind::Custom(vec![0.3, 0.4, 0.5, 9.0]), rho * 2.0, 3)
            .unwrap();
        assert_eq!(p.bonds(), vec![0.6, 0.8, 1.0]);
    }
}
