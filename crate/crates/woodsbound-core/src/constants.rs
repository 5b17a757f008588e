//! Named constants: critical determinants of spheres, Hermite-constant
//! bounds, the covering estimates ω_k, the Minkowski ratios ν_k and the
//! admissible range of B_n.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::decimal::{iv_from_decimal, DecimalError};
use crate::interval::{Interval, IntervalError};

/// Largest dimension with a tabulated ω.
pub const MAX_TABLE_DIM: usize = 33;

/// Errors raised while building or querying the constants table.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConstantsError {
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("missing entry for dimension {0}")]
    Missing(usize),
    #[error("dimension {dim}: {reason}")]
    Invalid { dim: usize, reason: String },
    #[error(transparent)]
    Decimal(#[from] DecimalError),
    #[error(transparent)]
    Interval(#[from] IntervalError),
}

/// One row of the input table, with decimal strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstantRow {
    pub dimension: usize,
    /// Upper bound on γ_k; absent for k ≤ 8, where it is derived.
    pub gamma_upper: Option<String>,
    pub omega: String,
    pub source: String,
}

/// Immutable table of all constants used by the prover.
#[derive(Debug, Clone)]
pub struct ConstantsTable {
    epsilon: Interval,
    lemma7_factor: Interval,
    gamma: BTreeMap<usize, Interval>,
    omega: BTreeMap<usize, Interval>,
    sources: BTreeMap<usize, String>,
}

/// Δ(S_k) for 2 ≤ k ≤ 8, as closed forms.
pub fn critical_determinant(k: usize) -> Result<Interval, ConstantsError> {
    let two = Interval::point(2.0);
    let three = Interval::point(3.0);
    let v = match k {
        2 => three.pow_rational(1, 2)?.div(two)?,
        3 => two.pow_rational(-1, 2)?,
        4 => Interval::point(0.5),
        5 => two.pow_rational(-3, 2)?,
        6 => three.pow_rational(1, 2)?.div(Interval::point(8.0))?,
        7 => Interval::point(0.125),
        8 => Interval::point(0.0625),
        _ => return Err(ConstantsError::UnsupportedDimension(k)),
    };
    Ok(v)
}

/// Δ(S_k)², exactly where possible.
pub fn critical_determinant_squared(k: usize) -> Result<Interval, ConstantsError> {
    let v = match k {
        2 => Interval::ratio(3, 4)?,
        3 => Interval::point(0.5),
        4 => Interval::point(0.25),
        5 => Interval::point(0.125),
        6 => Interval::ratio(3, 64)?,
        7 => Interval::ratio(1, 64)?,
        8 => Interval::ratio(1, 256)?,
        _ => return Err(ConstantsError::UnsupportedDimension(k)),
    };
    Ok(v)
}

impl ConstantsTable {
    /// Builds the table from decimal strings. Rows must cover ω for
    /// 2..=33 and γ for 9..=33.
    pub fn from_rows(
        epsilon: &str,
        lemma7_factor: &str,
        rows: &[ConstantRow],
    ) -> Result<Self, ConstantsError> {
        let epsilon = iv_from_decimal(epsilon)?;
        let lemma7_factor = iv_from_decimal(lemma7_factor)?;
        let mut gamma = BTreeMap::new();
        let mut omega = BTreeMap::new();
        let mut sources = BTreeMap::new();
        omega.insert(1, Interval::point(1.0));
        for k in 2..=8 {
            let d = critical_determinant(k)?;
            gamma.insert(k, d.pow_rational(-2, k as u64)?);
        }
        for row in rows {
            let k = row.dimension;
            if !(2..=MAX_TABLE_DIM).contains(&k) {
                return Err(ConstantsError::UnsupportedDimension(k));
            }
            let w = iv_from_decimal(&row.omega)?;
            if k <= 9 && w != Interval::point(k as f64) {
                return Err(ConstantsError::Invalid {
                    dim: k,
                    reason: "ω must equal the dimension up to 9".into(),
                });
            }
            if w.lo() < k as f64 {
                return Err(ConstantsError::Invalid {
                    dim: k,
                    reason: "ω below the dimension".into(),
                });
            }
            omega.insert(k, w);
            match (&row.gamma_upper, k) {
                (Some(g), k) if k >= 9 => {
                    let g = iv_from_decimal(g)?;
                    if g.lo() <= 0.0 {
                        return Err(ConstantsError::Invalid {
                            dim: k,
                            reason: "γ must be positive".into(),
                        });
                    }
                    gamma.insert(k, g);
                }
                (Some(_), _) => {
                    return Err(ConstantsError::Invalid {
                        dim: k,
                        reason: "γ is derived for k ≤ 8".into(),
                    });
                }
                (None, k) if k >= 9 => return Err(ConstantsError::Missing(k)),
                (None, _) => {}
            }
            sources.insert(k, row.source.clone());
        }
        for k in 2..=MAX_TABLE_DIM {
            if !omega.contains_key(&k) {
                return Err(ConstantsError::Missing(k));
            }
            if !gamma.contains_key(&k) {
                return Err(ConstantsError::Missing(k));
            }
        }
        Ok(Self {
            epsilon,
            lemma7_factor,
            gamma,
            omega,
            sources,
        })
    }

    /// ε, the ratio in B_{i+4} ≥ ε·B_i.
    pub fn epsilon(&self) -> Interval {
        self.epsilon
    }

    /// The numeric factor entering the lower bound on B_n.
    pub fn lemma7_factor(&self) -> Interval {
        self.lemma7_factor
    }

    pub fn source(&self, k: usize) -> Option<&str> {
        self.sources.get(&k).map(|s| s.as_str())
    }

    /// Enclosure of an upper bound on Hermite's constant γ_k, 2 ≤ k ≤ 33.
    pub fn hermite_bound(&self, k: usize) -> Result<Interval, ConstantsError> {
        self.gamma
            .get(&k)
            .copied()
            .ok_or(ConstantsError::UnsupportedDimension(k))
    }

    /// Upper enclosure of γ_k^k; exact reciprocal critical determinant for k ≤ 8.
    pub fn hermite_power(&self, k: usize) -> Result<Interval, ConstantsError> {
        if k == 1 {
            return Ok(Interval::point(1.0));
        }
        if k <= 8 {
            return Ok(critical_determinant_squared(k)?.recip()?);
        }
        Ok(self.hermite_bound(k)?.powi(k as u64))
    }

    /// ω_k for 1 ≤ k ≤ 33 (and any dimension added by [`Self::push_omega`]).
    pub fn omega(&self, k: usize) -> Result<Interval, ConstantsError> {
        self.omega
            .get(&k)
            .copied()
            .ok_or(ConstantsError::UnsupportedDimension(k))
    }

    /// Replaces ω_k; used for what-if runs and for extended dimensions.
    pub fn push_omega(&mut self, k: usize, value: Interval) {
        self.omega.insert(k, value);
    }

    /// max{ω_{k−1}·l^{−1/(k−1)} + l, ω_{k−1}·m^{−1/(k−1)} + m}.
    pub fn extend_omega(
        &self,
        k: usize,
        l: Interval,
        m: Interval,
    ) -> Result<Interval, ConstantsError> {
        if k < 2 {
            return Err(ConstantsError::UnsupportedDimension(k));
        }
        if l.lo() <= 0.0 || m.lo() <= 0.0 {
            return Err(ConstantsError::Invalid {
                dim: k,
                reason: "range endpoints must be positive".into(),
            });
        }
        let prev = self.omega(k - 1)?;
        let e = (k - 1) as u64;
        let a = prev * l.pow_rational(-1, e)? + l;
        let b = prev * m.pow_rational(-1, e)? + m;
        Ok(a.max(&b))
    }

    /// ν_k = (2k/ω_k)^{k/2}.
    pub fn nu(&self, k: usize) -> Result<Interval, ConstantsError> {
        if !(2..=MAX_TABLE_DIM).contains(&k) {
            return Err(ConstantsError::UnsupportedDimension(k));
        }
        let base = Interval::int(2 * k as i64).div(self.omega(k)?)?;
        Ok(base.pow_rational(k as i64, 2)?)
    }

    /// Enclosures (l_k, m_k) of the bounds l_k ≤ B_k ≤ m_k.
    pub fn bn_range(&self, k: usize) -> Result<(Interval, Interval), ConstantsError> {
        if !(7..=MAX_TABLE_DIM).contains(&k) {
            return Err(ConstantsError::UnsupportedDimension(k));
        }
        let m = self
            .hermite_bound(k - 1)?
            .pow_rational((k - 1) as i64, k as u64)?;
        let mut denom = self.lemma7_factor.pow_rational(1, 5)?;
        for j in 6..=k {
            denom = denom * self.hermite_bound(j)?.pow_rational(1, (j - 1) as u64)?;
        }
        Ok((denom.recip()?, m))
    }

    /// Dimensions with an ω entry, ascending.
    pub fn dimensions(&self) -> Vec<usize> {
        self.omega.keys().copied().collect()
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_determinants() {
        let d5 = critical_determinant(5).unwrap();
        assert!((d5.mid() - 0.353_553_390_593_273_7).abs() < 1e-15 && d5.width() < 1e-15);
        assert_eq!(critical_determinant(8).unwrap(), Interval::point(0.0625));
        assert_eq!(critical_determinant(4).unwrap(), Interval::point(0.5));
        assert!(critical_determinant(9).is_err());
        assert!(critical_determinant(1).is_err());
    }

    #[test]
    fn derived_hermite_constants() {
        let t = fixture::table();
        let g4 = t.hermite_bound(4).unwrap();
        assert!(
            g4.contains(core::f64::consts::SQRT_2)
                || (g4.lo() - core::f64::consts::SQRT_2).abs() < 1e-15
        );
        assert!(g4.width() < 1e-14);
        let g8 = t.hermite_bound(8).unwrap();
        assert!(g8.contains(2.0));
        assert!(g8.width() < 1e-14);
        // γ_k^{-k} agrees with Δ(S_k)².
        for k in 2..=8 {
            let lhs = t
                .hermite_bound(k)
                .unwrap()
                .pow_rational(-(k as i64), 1)
                .unwrap();
            let rhs = critical_determinant_squared(k).unwrap();
            assert!(lhs.intersect(&rhs).is_some(), "k={k}");
        }
    }

    #[test]
    fn omega_values() {
        let t = fixture::table();
        assert_eq!(t.omega(9).unwrap(), Interval::point(9.0));
        assert!(t.omega(10).unwrap().contains(10.3));
        assert!(t.omega(13).unwrap().contains(14.455765));
        assert!(t.omega(34).is_err());
    }

    #[test]
    fn extension_at_unit_range() {
        let t = fixture::table();
        let one = Interval::point(1.0);
        let w = t.extend_omega(34, one, one).unwrap();
        let expected = t.omega(33).unwrap() + one;
        assert!(w.contains_interval(&expected) || w == expected);
        assert!(t.extend_omega(34, Interval::point(0.0), one).is_err());
    }

    #[test]
    fn nu_table_rows() {
        let t = fixture::table();
        assert!(
            t.nu(10).unwrap().contains(27.603_481_1)
                || (t.nu(10).unwrap().mid() - 27.6034811).abs() < 5e-8
        );
    }

    #[test]
    fn rejects_bad_rows() {
        let rows = [ConstantRow {
            dimension: 5,
            gamma_upper: None,
            omega: "6".into(),
            source: String::new(),
        }];
        assert!(ConstantsTable::from_rows("0.46873", "8.5337", &rows).is_err());
    }
}
