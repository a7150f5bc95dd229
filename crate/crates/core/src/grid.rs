//! Exact arithmetic on the finite ultrametric group `G_N^n = B_N^n / B_{-N}^n`.
//!
//! A point of the grid is, per coordinate, a digit string
//! `a_{-N} p^{-N} + ... + a_{N-1} p^{N-1}` with digits in `[0, p)`. Digit
//! position `k` is stored at slot `k + N`, so each coordinate is the base-p
//! little-endian value `m = sum_s digit[s] p^s` in `[0, p^2N)`. Group
//! addition/subtraction is addition mod `p^2N` per coordinate, the valuation
//! of a difference is the position of its lowest nonzero digit minimized over
//! coordinates, and the norm is `p^{-ord}`.
//!
//! The canonical ordinal of a point composes the per-coordinate values
//! lexicographically (first coordinate most significant). Snapshot files and
//! dense matrix exports are pinned to this order.

use crate::error::Error;
use crate::Result;

/// Size of the grid and the prime used, `M = p^(2·N·n)`.
///
/// `resolution` is the ball exponent N: the grid covers `B_N^n` at step `p^-N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridParams {
    /// Prime base.
    pub p: u32,
    /// Spatial dimension n >= 1.
    pub n: u32,
    /// Resolution N >= 1.
    pub resolution: u32,
}

/// Largest grid size accepted by the builder.
pub const MAX_POINTS: u64 = 1 << 31;

fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    let p = p as u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl GridParams {
    /// Validate and build grid parameters.
    pub fn new(p: u32, n: u32, resolution: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidParams(format!("p = {p} is not prime")));
        }
        if n == 0 {
            return Err(Error::InvalidParams("dimension n must be >= 1".into()));
        }
        if resolution == 0 {
            return Err(Error::InvalidParams("resolution N must be >= 1".into()));
        }
        let params = GridParams { p, n, resolution };
        let bits = 2.0 * f64::from(resolution) * f64::from(n) * f64::from(p).log2();
        if bits > 31.0 {
            return Err(Error::InvalidParams(format!(
                "grid size p^(2Nn) = {p}^{} exceeds {MAX_POINTS} points",
                2 * resolution * n
            )));
        }
        Ok(params)
    }

    /// Digit slots per coordinate, `2N`.
    pub fn digits_per_coord(&self) -> u32 {
        2 * self.resolution
    }

    /// Per-coordinate modulus `p^(2N)`.
    pub fn coord_modulus(&self) -> u64 {
        (self.p as u64).pow(self.digits_per_coord())
    }

    /// Total number of grid points `M = p^(2Nn)`.
    pub fn num_points(&self) -> u64 {
        self.coord_modulus().pow(self.n)
    }

    /// Haar volume of the ball `B_r^n`, normalized so `vol(B_0^n) = 1`.
    pub fn ball_volume(&self, r: i32) -> f64 {
        f64::from(self.p).powi(r * self.n as i32)
    }

    /// Haar volume of the sphere `S_r^n`: `p^{rn} (1 - p^{-n})`.
    pub fn sphere_volume(&self, r: i32) -> f64 {
        self.ball_volume(r) * (1.0 - f64::from(self.p).powi(-(self.n as i32)))
    }

    /// Number of grid points at distance exactly `p^r` from a fixed point,
    /// for `r` in `[-N+1, N]`; zero outside that range.
    pub fn sphere_count(&self, r: i32) -> u64 {
        let nn = self.resolution as i32;
        if r < -nn + 1 || r > nn {
            return 0;
        }
        let pu = self.p as u64;
        let ball = pu.pow(((nn + r) * self.n as i32) as u32);
        let inner = if nn + r > 0 {
            pu.pow(((nn + r - 1) * self.n as i32) as u32)
        } else {
            0
        };
        ball - inner
    }

    /// All grid points in canonical ordinal order.
    pub fn enumerate(&self) -> impl Iterator<Item = GridIndex> + '_ {
        (0..self.num_points()).map(move |o| GridIndex::from_ordinal(*self, o))
    }
}

/// Valuation of a difference of grid points: an integer in `[-N, N-1]`, or
/// `Infinite` when the points coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtendedValuation {
    /// `ord(i - j)` for distinct points.
    Finite(i32),
    /// The points coincide in `G_N^n`.
    Infinite,
}

impl ExtendedValuation {
    /// `p^{-ord}`; zero for coinciding points.
    pub fn norm(&self, p: u32) -> f64 {
        match self {
            ExtendedValuation::Finite(v) => f64::from(p).powi(-v),
            ExtendedValuation::Infinite => 0.0,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtendedValuation::Infinite)
    }
}

impl PartialOrd for ExtendedValuation {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedValuation {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use ExtendedValuation::*;
        match (self, other) {
            (Infinite, Infinite) => std::cmp::Ordering::Equal,
            (Infinite, Finite(_)) => std::cmp::Ordering::Greater,
            (Finite(_), Infinite) => std::cmp::Ordering::Less,
            (Finite(a), Finite(b)) => a.cmp(b),
        }
    }
}

/// A point of `G_N^n`, stored per coordinate as the little-endian digit value
/// `m_j = sum_s a_{s-N}^j p^s` in `[0, p^2N)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridIndex {
    params: GridParams,
    coords: Vec<u64>,
}

impl GridIndex {
    /// The zero element.
    pub fn zero(params: GridParams) -> Self {
        GridIndex {
            params,
            coords: vec![0; params.n as usize],
        }
    }

    /// Build from the canonical ordinal.
    pub fn from_ordinal(params: GridParams, ordinal: u64) -> Self {
        debug_assert!(ordinal < params.num_points());
        let modulus = params.coord_modulus();
        let n = params.n as usize;
        let mut coords = vec![0u64; n];
        let mut rest = ordinal;
        for j in (0..n).rev() {
            coords[j] = rest % modulus;
            rest /= modulus;
        }
        GridIndex { params, coords }
    }

    /// Build from per-coordinate little-endian digit values.
    pub fn from_coords(params: GridParams, coords: &[u64]) -> Result<Self> {
        if coords.len() != params.n as usize {
            return Err(Error::DimensionMismatch {
                expected: params.n as usize,
                got: coords.len(),
            });
        }
        let modulus = params.coord_modulus();
        if let Some(c) = coords.iter().find(|&&c| c >= modulus) {
            return Err(Error::InvalidParams(format!(
                "coordinate value {c} out of range [0, {modulus})"
            )));
        }
        Ok(GridIndex {
            params,
            coords: coords.to_vec(),
        })
    }

    /// Build from digit arrays: `digits[j][s]` is the digit of coordinate `j`
    /// at position `s - N` (slot `s` in `[0, 2N)`).
    pub fn from_digits(params: GridParams, digits: &[Vec<u32>]) -> Result<Self> {
        if digits.len() != params.n as usize {
            return Err(Error::DimensionMismatch {
                expected: params.n as usize,
                got: digits.len(),
            });
        }
        let slots = params.digits_per_coord() as usize;
        let mut coords = Vec::with_capacity(digits.len());
        for digs in digits {
            if digs.len() != slots {
                return Err(Error::DimensionMismatch {
                    expected: slots,
                    got: digs.len(),
                });
            }
            let mut m = 0u64;
            for (s, &d) in digs.iter().enumerate() {
                if d >= params.p {
                    return Err(Error::InvalidParams(format!(
                        "digit {d} out of range [0, {})",
                        params.p
                    )));
                }
                m += u64::from(d) * (params.p as u64).pow(s as u32);
            }
            coords.push(m);
        }
        Ok(GridIndex { params, coords })
    }

    pub fn params(&self) -> GridParams {
        self.params
    }

    /// Per-coordinate little-endian digit values.
    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    /// Canonical ordinal: lexicographic composite of the coordinate values,
    /// first coordinate most significant.
    pub fn ordinal(&self) -> u64 {
        let modulus = self.params.coord_modulus();
        self.coords.iter().fold(0u64, |acc, &m| acc * modulus + m)
    }

    /// Digit of coordinate `j` at slot `s` (position `s - N`).
    pub fn digit(&self, j: usize, s: u32) -> u32 {
        let p = self.params.p as u64;
        ((self.coords[j] / p.pow(s)) % p) as u32
    }

    /// Digit array of coordinate `j`, slots `0..2N`.
    pub fn digits(&self, j: usize) -> Vec<u32> {
        (0..self.params.digits_per_coord())
            .map(|s| self.digit(j, s))
            .collect()
    }

    fn check_params(&self, other: &GridIndex) -> Result<()> {
        if self.params != other.params {
            return Err(Error::ParamMismatch(format!(
                "{:?} vs {:?}",
                self.params, other.params
            )));
        }
        Ok(())
    }

    /// Group addition: per-coordinate addition mod `p^2N`.
    pub fn add(&self, other: &GridIndex) -> Result<GridIndex> {
        self.check_params(other)?;
        let modulus = self.params.coord_modulus();
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(&a, &b)| (a + b) % modulus)
            .collect();
        Ok(GridIndex {
            params: self.params,
            coords,
        })
    }

    /// Group subtraction: per-coordinate subtraction mod `p^2N` (digitwise
    /// base-p subtraction with borrow).
    pub fn sub(&self, other: &GridIndex) -> Result<GridIndex> {
        self.check_params(other)?;
        let modulus = self.params.coord_modulus();
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(&a, &b)| (a + modulus - b) % modulus)
            .collect();
        Ok(GridIndex {
            params: self.params,
            coords,
        })
    }

    /// `ord(self - other)`: position of the lowest nonzero digit of the
    /// difference, minimized over coordinates; `Infinite` iff equal.
    pub fn valuation(&self, other: &GridIndex) -> Result<ExtendedValuation> {
        self.check_params(other)?;
        let diff = self.sub(other)?;
        Ok(coords_valuation(&self.params, &diff.coords))
    }

    /// `||self - other||_p = p^{-ord}`.
    pub fn distance(&self, other: &GridIndex) -> Result<f64> {
        Ok(self.valuation(other)?.norm(self.params.p))
    }
}

/// Valuation of a difference already reduced per coordinate.
pub(crate) fn coords_valuation(params: &GridParams, diff: &[u64]) -> ExtendedValuation {
    let p = params.p as u64;
    let nn = params.resolution as i32;
    let mut best: Option<i32> = None;
    for &d in diff {
        if d == 0 {
            continue;
        }
        let mut d = d;
        let mut slot = 0i32;
        while d % p == 0 {
            d /= p;
            slot += 1;
        }
        let ord = slot - nn;
        best = Some(best.map_or(ord, |b| b.min(ord)));
    }
    match best {
        Some(v) => ExtendedValuation::Finite(v),
        None => ExtendedValuation::Infinite,
    }
}

impl std::fmt::Display for GridIndex {
    /// Rational display of the representative, e.g. `3/2` or `(1/2, 3)`.
    /// Formatting only; all arithmetic stays on digits.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let scale = (self.params.p as u64).pow(self.params.resolution);
        let fmt_coord = |m: u64, f: &mut std::fmt::Formatter<'_>| {
            let g = gcd(m, scale);
            let (num, den) = (m / g, scale / g);
            if den == 1 {
                write!(f, "{num}")
            } else {
                write!(f, "{num}/{den}")
            }
        };
        if self.coords.len() == 1 {
            fmt_coord(self.coords[0], f)
        } else {
            write!(f, "(")?;
            for (j, &m) in self.coords.iter().enumerate() {
                if j > 0 {
                    write!(f, ", ")?;
                }
                fmt_coord(m, f)?;
            }
            write!(f, ")")
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

/// The quotient filtration `B_-N ⊂ ... ⊂ B_N` as a `p^n`-ary tree of depth
/// `2N`. Level 0 holds the `M` singleton leaves; the node of level `l`
/// containing a point is the ball of radius `p^(l-N)` around it; level `2N`
/// is the whole grid.
///
/// Leaves are stored in a tree layout in which every ball is a contiguous
/// block; `tree_of_canonical` / `canonical_of_tree` translate between the
/// canonical ordinal order and that layout.
#[derive(Debug, Clone)]
pub struct LevelTree {
    params: GridParams,
    tree_of_canonical: Vec<u32>,
    canonical_of_tree: Vec<u32>,
    /// Subtree size per level, `p^(l·n)` for level `l` in `0..=2N`.
    block_size: Vec<u64>,
}

impl LevelTree {
    /// Build the tree for a grid. `O(M · N · n)`.
    pub fn new(params: GridParams) -> Self {
        let m = params.num_points() as usize;
        let n = params.n as usize;
        let slots = params.digits_per_coord();
        let p = params.p as u64;
        let modulus = params.coord_modulus();

        let mut tree_of_canonical = vec![0u32; m];
        let mut canonical_of_tree = vec![0u32; m];
        let mut coords = vec![0u64; n];
        for ordinal in 0..m as u64 {
            let mut rest = ordinal;
            for j in (0..n).rev() {
                coords[j] = rest % modulus;
                rest /= modulus;
            }
            // Low digit slots are the most significant part of the tree
            // position: a ball fixes the low slots of every coordinate, so
            // its leaves form one contiguous block.
            let mut pos = 0u64;
            for s in 0..slots {
                let div = p.pow(s);
                for &c in coords.iter() {
                    pos = pos * p + (c / div) % p;
                }
            }
            tree_of_canonical[ordinal as usize] = pos as u32;
            canonical_of_tree[pos as usize] = ordinal as u32;
        }

        let levels = slots as usize;
        let mut block_size = Vec::with_capacity(levels + 1);
        let children = p.pow(params.n);
        let mut size = 1u64;
        for _ in 0..=levels {
            block_size.push(size);
            size *= children;
        }

        LevelTree {
            params,
            tree_of_canonical,
            canonical_of_tree,
            block_size,
        }
    }

    pub fn params(&self) -> GridParams {
        self.params
    }

    /// Depth of the tree (`2N`); levels run `0..=depth`.
    pub fn depth(&self) -> u32 {
        self.params.digits_per_coord()
    }

    /// Number of children of every internal node, `p^n`.
    pub fn children_per_node(&self) -> u64 {
        (self.params.p as u64).pow(self.params.n)
    }

    /// Number of nodes at a level (`M / p^(l·n)`).
    pub fn node_count(&self, level: u32) -> u64 {
        self.params.num_points() / self.block_size[level as usize]
    }

    /// Number of leaves under one node of a level, `p^(l·n)`.
    pub fn subtree_size(&self, level: u32) -> u64 {
        self.block_size[level as usize]
    }

    /// Tree position of a canonical ordinal.
    pub fn tree_position(&self, ordinal: u64) -> u64 {
        self.tree_of_canonical[ordinal as usize] as u64
    }

    /// Canonical ordinal of a tree position.
    pub fn ordinal_at(&self, tree_pos: u64) -> u64 {
        self.canonical_of_tree[tree_pos as usize] as u64
    }

    /// Node id (within its level) of the ancestor of a leaf.
    pub fn ancestor(&self, tree_pos: u64, level: u32) -> u64 {
        tree_pos / self.block_size[level as usize]
    }

    /// Ancestor node of a leaf given by its canonical ordinal: the ball of
    /// radius `p^(level - N)` containing it.
    pub fn ancestor_of_ordinal(&self, ordinal: u64, level: u32) -> u64 {
        self.ancestor(self.tree_position(ordinal), level)
    }

    pub(crate) fn tree_of_canonical(&self) -> &[u32] {
        &self.tree_of_canonical
    }

    pub(crate) fn canonical_of_tree(&self) -> &[u32] {
        &self.canonical_of_tree
    }
}
