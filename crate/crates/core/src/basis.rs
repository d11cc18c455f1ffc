//! The 0-, 1- and 2-excitation sectors of an `N`-site spin-1/2 chain.
//!
//! Ordering is fixed: the vacuum first, then single excitations by ascending
//! site, then ordered pairs `(i, j)`, `i < j`, lexicographically. Sites are
//! 1-based at the public surface and 0-based everywhere inside the crate.

use crate::error::{Error, Result};

/// One basis state of the excitation subspace, in 1-based site labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisIndex {
    Vacuum,
    Single(usize),
    Pair(usize, usize),
}

/// `1 + N + N(N-1)/2`.
pub const fn dim_total(n_sites: usize) -> usize {
    (n_sites * n_sites + n_sites + 2) / 2
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    n_sites: usize,
    /// 0-based pairs in block order.
    pairs: Vec<(usize, usize)>,
}

impl Basis {
    pub fn new(n_sites: usize) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::InvalidSize(n_sites));
        }
        let mut pairs = Vec::with_capacity(n_sites * (n_sites - 1) / 2);
        for i in 0..n_sites {
            for j in i + 1..n_sites {
                pairs.push((i, j));
            }
        }
        Ok(Self { n_sites, pairs })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim_one(&self) -> usize {
        self.n_sites
    }

    pub fn dim_two(&self) -> usize {
        self.pairs.len()
    }

    pub fn dim_total(&self) -> usize {
        1 + self.dim_one() + self.dim_two()
    }

    /// Zero-based position of the 1-based pair `(i, j)` in the two-excitation block.
    pub fn pair_offset(&self, i: usize, j: usize) -> Result<usize> {
        if i == 0 || i >= j || j > self.n_sites {
            return Err(Error::PairIndex { i, j, n: self.n_sites });
        }
        Ok(self.pair0(i - 1, j - 1))
    }

    /// Inverse of [`Basis::pair_offset`]; returns 1-based sites.
    pub fn pair_at(&self, offset: usize) -> Result<(usize, usize)> {
        self.pairs
            .get(offset)
            .map(|&(i, j)| (i + 1, j + 1))
            .ok_or(Error::PairIndex { i: offset, j: offset, n: self.n_sites })
    }

    /// Position in the full `dim_total` ordering.
    pub fn index_of(&self, state: BasisIndex) -> Result<usize> {
        match state {
            BasisIndex::Vacuum => Ok(0),
            BasisIndex::Single(k) => {
                self.check_site(k)?;
                Ok(k)
            }
            BasisIndex::Pair(i, j) => Ok(1 + self.n_sites + self.pair_offset(i, j)?),
        }
    }

    pub fn state_at(&self, index: usize) -> Result<BasisIndex> {
        let n = self.n_sites;
        match index {
            0 => Ok(BasisIndex::Vacuum),
            k if k <= n => Ok(BasisIndex::Single(k)),
            k => {
                let (i, j) = self.pair_at(k - 1 - n)?;
                Ok(BasisIndex::Pair(i, j))
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = BasisIndex> + '_ {
        std::iter::once(BasisIndex::Vacuum)
            .chain((1..=self.n_sites).map(BasisIndex::Single))
            .chain(self.pairs.iter().map(|&(i, j)| BasisIndex::Pair(i + 1, j + 1)))
    }

    pub fn check_site(&self, site: usize) -> Result<()> {
        if site == 0 || site > self.n_sites {
            Err(Error::Site { site, n: self.n_sites })
        } else {
            Ok(())
        }
    }

    /// 0-based ordered pair offset. Callers guarantee `a < b < n`.
    #[inline]
    pub(crate) fn pair0(&self, a: usize, b: usize) -> usize {
        debug_assert!(a < b && b < self.n_sites);
        a * (2 * self.n_sites - a - 1) / 2 + (b - a - 1)
    }

    /// 0-based offset of the unordered pair `{a, b}`, `a != b`.
    #[inline]
    pub(crate) fn pair0_unordered(&self, a: usize, b: usize) -> usize {
        if a < b {
            self.pair0(a, b)
        } else {
            self.pair0(b, a)
        }
    }

    /// 0-based pairs in block order.
    pub(crate) fn pairs0(&self) -> &[(usize, usize)] {
        &self.pairs
    }
}
