//! Ordered partitions of n with plain, starred and weak parts.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flavor {
    Plain,
    /// Bounded by a lower-dimensional ω.
    Starred,
    /// Size-2 part bounded by 2·B_{i+1} with no condition.
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Part {
    pub size: usize,
    pub flavor: Flavor,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PartitionError {
    #[error("malformed partition {text:?}: {reason}")]
    Malformed { text: String, reason: &'static str },
    #[error("weak flavor on a part of size {0}; only size 2 can be weak")]
    WeakSize(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    parts: Vec<Part>,
}

impl Partition {
    pub fn new(parts: Vec<Part>) -> Result<Self, PartitionError> {
        for p in &parts {
            if p.size == 0 {
                return Err(PartitionError::Malformed {
                    text: String::new(),
                    reason: "zero part",
                });
            }
            if p.flavor == Flavor::Weak && p.size != 2 {
                return Err(PartitionError::WeakSize(p.size));
            }
        }
        if parts.is_empty() {
            return Err(PartitionError::Malformed {
                text: String::new(),
                reason: "no parts",
            });
        }
        Ok(Self { parts })
    }

    /// Parses `(4,1,1)`, `(9*,1)`, `(2,2,2,2,2)w`, `(2,2)_w` or `(1,2w,4)`.
    /// A trailing `w` makes every plain part of size 2 weak.
    pub fn parse(text: &str) -> Result<Self, PartitionError> {
        let bad = |reason| PartitionError::Malformed {
            text: text.to_string(),
            reason,
        };
        let t = text.trim();
        let (body, all_weak) = if let Some(b) = t.strip_suffix("_w") {
            (b, true)
        } else if let Some(b) = t.strip_suffix('w') {
            if b.ends_with(')') {
                (b, true)
            } else {
                (t, false)
            }
        } else {
            (t, false)
        };
        let inner = body
            .strip_prefix('(')
            .and_then(|b| b.strip_suffix(')'))
            .ok_or_else(|| bad("expected parentheses"))?;
        let mut parts = Vec::new();
        for item in inner.split(',') {
            let item = item.trim();
            let (num, flavor) = if let Some(x) = item.strip_suffix('*') {
                (x, Flavor::Starred)
            } else if let Some(x) = item.strip_suffix('w') {
                (x, Flavor::Weak)
            } else {
                (item, Flavor::Plain)
            };
            if num.is_empty() || !num.bytes().all(|c| c.is_ascii_digit()) {
                return Err(bad("expected a part size"));
            }
            let size: usize = num.parse().map_err(|_| bad("part size too large"))?;
            if size == 0 {
                return Err(bad("zero part"));
            }
            let flavor = if all_weak && flavor == Flavor::Plain && size == 2 {
                Flavor::Weak
            } else {
                flavor
            };
            parts.push(Part { size, flavor });
        }
        Self::new(parts).map_err(|e| match e {
            PartitionError::Malformed { reason, .. } => bad(reason),
            e => e,
        })
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn total(&self) -> usize {
        self.parts.iter().map(|p| p.size).sum()
    }

    /// 1-based starting index of each part.
    pub fn starts(&self) -> Vec<usize> {
        let mut at = 1;
        self.parts
            .iter()
            .map(|p| {
                let s = at;
                at += p.size;
                s
            })
            .collect()
    }

    /// True when no part carries a condition.
    pub fn is_unconditional(&self) -> bool {
        self.starts()
            .iter()
            .zip(&self.parts)
            .all(|(&i, p)| match p.flavor {
                Flavor::Weak => true,
                Flavor::Plain => p.size == 1,
                Flavor::Starred => i == 1 || p.size == 1,
            })
    }
}

impl FromStr for Partition {
    type Err = PartitionError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, p) in self.parts.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", p.size)?;
            match p.flavor {
                Flavor::Plain => {}
                Flavor::Starred => write!(f, "*")?,
                Flavor::Weak => write!(f, "w")?,
            }
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_usual_forms() {
        let p = Partition::parse("(4,1,1,1,1,1,1)").unwrap();
        assert_eq!(p.total(), 10);
        assert_eq!(p.starts(), [1, 5, 6, 7, 8, 9, 10]);
        let p = Partition::parse("(9*,1)").unwrap();
        assert_eq!(
            p.parts()[0],
            Part {
                size: 9,
                flavor: Flavor::Starred
            }
        );
        let p = Partition::parse("(2,2,2,2,2)w").unwrap();
        assert!(p.parts().iter().all(|x| x.flavor == Flavor::Weak));
        let p = Partition::parse("(1, 2,2)_w").unwrap();
        assert_eq!(p.parts()[0].flavor, Flavor::Plain);
        assert!(p.is_unconditional());
        let p = Partition::parse("(1,2w,4)").unwrap();
        assert_eq!(p.parts()[1].flavor, Flavor::Weak);
        assert!(!p.is_unconditional());
    }

    #[test]
    fn display_round_trips() {
        for s in ["(4,6*)", "(1,2w,4)", "(21*,1)", "(2w,1,2w)"] {
            let p = Partition::parse(s).unwrap();
            assert_eq!(Partition::parse(&p.to_string()).unwrap(), p);
        }
    }

    #[test]
    fn rejects_malformed() {
        for s in ["(4,)", "()", "4,1", "(0,1)", "(a)", "(3w)", "(2,2", "(2**)"] {
            assert!(Partition::parse(s).is_err(), "{s}");
        }
    }
}
