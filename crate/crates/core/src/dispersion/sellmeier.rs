use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-resonance Sellmeier form `n²(λ) = A + B/(λ² − C) − D·λ²`, λ in um.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SellmeierSet {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub min_um: f64,
    pub max_um: f64,
}

impl SellmeierSet {
    /// Ordinary index of beta-barium borate (Eimerl et al. coefficients).
    pub const BBO_ORDINARY: SellmeierSet = SellmeierSet {
        a: 2.7359,
        b: 0.01878,
        c: 0.01822,
        d: 0.01354,
        min_um: 0.22,
        max_um: 2.6,
    };

    /// Principal extraordinary index of beta-barium borate.
    pub const BBO_EXTRAORDINARY: SellmeierSet = SellmeierSet {
        a: 2.3753,
        b: 0.01224,
        c: 0.01667,
        d: 0.01516,
        min_um: 0.22,
        max_um: 2.6,
    };

    /// Fused silica, least-squares fit of the three-term Malitson formula
    /// over 1.2-1.7 um (max deviation in n² is 1.7e-6).
    pub const FUSED_SILICA: SellmeierSet = SellmeierSet {
        a: 2.106517569,
        b: 0.005788108667,
        c: 0.2050819401,
        d: 0.009967875548,
        min_um: 1.2,
        max_um: 1.7,
    };

    /// Dispersion-free medium of index `n` over `[min_um, max_um]`.
    pub fn constant(n: f64, min_um: f64, max_um: f64) -> Self {
        SellmeierSet {
            a: n * n,
            b: 0.0,
            c: 0.0,
            d: 0.0,
            min_um,
            max_um,
        }
    }

    pub fn contains(&self, lambda_um: f64) -> bool {
        lambda_um >= self.min_um && lambda_um <= self.max_um
    }

    pub fn check(&self, lambda_um: f64) -> Result<()> {
        if self.contains(lambda_um) {
            Ok(())
        } else {
            Err(Error::Domain {
                wavelength_um: lambda_um,
                min_um: self.min_um,
                max_um: self.max_um,
            })
        }
    }

    /// n² without the window check.
    #[inline]
    pub fn index_squared_unchecked(&self, lambda_um: f64) -> f64 {
        let l2 = lambda_um * lambda_um;
        self.a + self.b / (l2 - self.c) - self.d * l2
    }

    pub fn index(&self, lambda_um: f64) -> Result<f64> {
        self.check(lambda_um)?;
        Ok(self.index_squared_unchecked(lambda_um).sqrt())
    }

    /// Checks the window is sane, the pole lies below it and n² > 1 on a
    /// 100-point grid spanning it.
    pub fn validate(&self) -> Result<()> {
        let finite = [self.a, self.b, self.c, self.d, self.min_um, self.max_um]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.min_um <= 0.0 || self.min_um >= self.max_um {
            return Err(Error::Precondition(format!(
                "Sellmeier window [{}, {}] um is not a valid range",
                self.min_um, self.max_um
            )));
        }
        if self.min_um * self.min_um - self.c <= 0.0 {
            return Err(Error::Precondition(format!(
                "Sellmeier pole at {} um lies inside the window",
                self.c.sqrt()
            )));
        }
        for k in 0..100 {
            let l = self.min_um + (self.max_um - self.min_um) * k as f64 / 99.0;
            if self.index_squared_unchecked(l) <= 1.0 {
                return Err(Error::Precondition(format!(
                    "Sellmeier n² <= 1 at {l} um"
                )));
            }
        }
        Ok(())
    }
}
