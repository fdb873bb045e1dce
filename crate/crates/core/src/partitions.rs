//! Finite Young diagram combinatorics.
//!
//! Diagrams are stored as weakly decreasing lists of row lengths. Cells are
//! 1-indexed `(i, j)` pairs with `i` the row and `j` the column. The number
//! of standard tableaux of a shape is computed by the hook length formula;
//! explicit enumeration is kept for small shapes as a cross-check.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound on `|λ|` for [`enumerate_tableaux`].
pub const DEFAULT_ENUMERATION_BOUND: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub i: usize,
    pub j: usize,
}

impl Cell {
    pub fn new(i: usize, j: usize) -> Result<Self> {
        if i == 0 || j == 0 {
            return Err(Error::InvalidCell { i, j });
        }
        Ok(Cell { i, j })
    }

    /// Column minus row.
    pub fn content(self) -> i64 {
        self.j as i64 - self.i as i64
    }

    /// `(i, j) ≤ (i', j')` in the product order on N².
    pub fn le(self, other: Cell) -> bool {
        self.i <= other.i && self.j <= other.j
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.i, self.j)
    }
}

/// A finite Young diagram; the empty diagram has no rows.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct YoungDiagram {
    rows: Vec<usize>,
}

impl TryFrom<Vec<usize>> for YoungDiagram {
    type Error = Error;
    fn try_from(rows: Vec<usize>) -> Result<Self> {
        YoungDiagram::new(rows)
    }
}

impl From<YoungDiagram> for Vec<usize> {
    fn from(d: YoungDiagram) -> Self {
        d.rows
    }
}

impl fmt::Display for YoungDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, r) in self.rows.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "]")
    }
}

impl YoungDiagram {
    pub fn new(rows: Vec<usize>) -> Result<Self> {
        let ok = rows.iter().all(|&r| r > 0) && rows.windows(2).all(|w| w[0] >= w[1]);
        if !ok {
            return Err(Error::InvalidDiagram(rows));
        }
        Ok(YoungDiagram { rows })
    }

    pub fn empty() -> Self {
        YoungDiagram { rows: Vec::new() }
    }

    /// The one-row diagram `(k)`; empty when `k == 0`.
    pub fn one_row(k: usize) -> Self {
        if k == 0 {
            Self::empty()
        } else {
            YoungDiagram { rows: vec![k] }
        }
    }

    /// Builds the diagram spanned by an arbitrary downward-closed cell set.
    pub fn from_cells<I: IntoIterator<Item = Cell>>(cells: I) -> Result<Self> {
        let cells: Vec<Cell> = cells.into_iter().collect();
        let n_rows = cells.iter().map(|c| c.i).max().unwrap_or(0);
        let mut rows = vec![0usize; n_rows];
        for c in &cells {
            rows[c.i - 1] = rows[c.i - 1].max(c.j);
        }
        let d = YoungDiagram::new(rows)?;
        if d.size() != cells.len() {
            return Err(Error::InvalidInput("cell set is not a Young diagram".into()));
        }
        Ok(d)
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn row_len(&self, i: usize) -> usize {
        if i == 0 {
            return 0;
        }
        self.rows.get(i - 1).copied().unwrap_or(0)
    }

    /// Length of column `j` (1-indexed).
    pub fn col_len(&self, j: usize) -> usize {
        self.rows.iter().take_while(|&&r| r >= j).count()
    }

    pub fn size(&self) -> usize {
        self.rows.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.i >= 1 && cell.j >= 1 && self.row_len(cell.i) >= cell.j
    }

    pub fn contains_diagram(&self, other: &YoungDiagram) -> bool {
        other.rows.len() <= self.rows.len()
            && other.rows.iter().zip(&self.rows).all(|(a, b)| a <= b)
    }

    /// Cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, &len)| (1..=len).map(move |j| Cell { i: i + 1, j }))
    }

    /// The set λ⁺, ordered by row.
    pub fn addable_corners(&self) -> Vec<Cell> {
        let mut out = Vec::with_capacity(self.rows.len() + 1);
        for i in 1..=self.rows.len() + 1 {
            let len = self.row_len(i);
            if i == 1 || self.row_len(i - 1) > len {
                out.push(Cell { i, j: len + 1 });
            }
        }
        out
    }

    /// The set λ⁻, ordered by row.
    pub fn removable_corners(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for i in 1..=self.rows.len() {
            let len = self.row_len(i);
            if self.row_len(i + 1) < len {
                out.push(Cell { i, j: len });
            }
        }
        out
    }

    pub fn is_addable(&self, cell: Cell) -> bool {
        cell.i >= 1
            && cell.j == self.row_len(cell.i) + 1
            && (cell.i == 1 || self.row_len(cell.i - 1) >= cell.j)
    }

    pub fn is_removable(&self, cell: Cell) -> bool {
        cell.i >= 1 && cell.j >= 1 && self.row_len(cell.i) == cell.j && self.row_len(cell.i + 1) < cell.j
    }

    /// λ + □. Panics if the cell is not addable.
    pub fn add_cell(&self, cell: Cell) -> YoungDiagram {
        assert!(self.is_addable(cell), "{cell} is not addable to {self}");
        let mut rows = self.rows.clone();
        if cell.i > rows.len() {
            rows.push(1);
        } else {
            rows[cell.i - 1] += 1;
        }
        YoungDiagram { rows }
    }

    /// λ − □. Panics if the cell is not removable.
    pub fn remove_cell(&self, cell: Cell) -> YoungDiagram {
        assert!(self.is_removable(cell), "{cell} is not removable from {self}");
        let mut rows = self.rows.clone();
        rows[cell.i - 1] -= 1;
        if rows[cell.i - 1] == 0 {
            rows.pop();
        }
        YoungDiagram { rows }
    }

    /// Hook length of a cell of the diagram: arm + leg + 1.
    pub fn hook_length(&self, cell: Cell) -> usize {
        debug_assert!(self.contains(cell));
        let arm = self.row_len(cell.i) - cell.j;
        let leg = self.col_len(cell.j) - cell.i;
        arm + leg + 1
    }

    /// Number of standard tableaux, exact.
    pub fn dim_exact(&self) -> BigUint {
        let n = self.size();
        let mut num = BigUint::one();
        for k in 2..=n {
            num *= k as u64;
        }
        let mut den = BigUint::one();
        for c in self.cells() {
            den *= self.hook_length(c) as u64;
        }
        num / den
    }

    /// Number of standard tableaux, or an overflow error if it exceeds `u64`.
    pub fn dim(&self) -> Result<u64> {
        self.dim_exact()
            .to_u64()
            .ok_or(Error::DimensionOverflow(self.size()))
    }

    /// All diagrams of size `n`, in lexicographic order of the row lists.
    pub fn all_of_size(n: usize) -> Vec<YoungDiagram> {
        fn rec(rem: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<YoungDiagram>) {
            if rem == 0 {
                out.push(YoungDiagram { rows: cur.clone() });
                return;
            }
            for part in 1..=rem.min(max) {
                cur.push(part);
                rec(rem - part, part, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(n, n, &mut Vec::new(), &mut out);
        out.sort();
        out
    }

    /// All diagrams with `|λ| ≤ n`, ordered by size then lexicographically.
    pub fn all_up_to(n: usize) -> Vec<YoungDiagram> {
        (0..=n).flat_map(Self::all_of_size).collect()
    }
}

/// A standard Young tableau stored row by row.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StandardTableau {
    shape: YoungDiagram,
    entries: Vec<Vec<usize>>,
}

impl StandardTableau {
    pub fn new(entries: Vec<Vec<usize>>) -> Result<Self> {
        let shape = YoungDiagram::new(entries.iter().map(Vec::len).collect())?;
        let n = shape.size();
        let mut seen = vec![false; n + 1];
        for &e in entries.iter().flatten() {
            if e == 0 || e > n || seen[e] {
                return Err(Error::InvalidInput(format!("entries {entries:?} are not a bijection onto 1..={n}")));
            }
            seen[e] = true;
        }
        let t = StandardTableau { shape, entries };
        for c in t.shape.cells() {
            let v = t.entry(c);
            let right = Cell { i: c.i, j: c.j + 1 };
            let below = Cell { i: c.i + 1, j: c.j };
            if (t.shape.contains(right) && t.entry(right) <= v) || (t.shape.contains(below) && t.entry(below) <= v) {
                return Err(Error::InvalidInput(format!("tableau {:?} is not standard", t.entries)));
            }
        }
        Ok(t)
    }

    pub fn shape(&self) -> &YoungDiagram {
        &self.shape
    }

    pub fn entries(&self) -> &[Vec<usize>] {
        &self.entries
    }

    pub fn entry(&self, cell: Cell) -> usize {
        self.entries[cell.i - 1][cell.j - 1]
    }

    /// Cells listed by increasing entry.
    pub fn cells_in_order(&self) -> Vec<Cell> {
        let mut out = vec![Cell { i: 1, j: 1 }; self.shape.size()];
        for c in self.shape.cells() {
            out[self.entry(c) - 1] = c;
        }
        out
    }

    /// Rebuilds a tableau from the order in which cells were added.
    pub fn from_cell_order(order: &[Cell]) -> Result<Self> {
        let shape = YoungDiagram::from_cells(order.iter().copied())?;
        let mut entries: Vec<Vec<usize>> = shape.rows().iter().map(|&r| vec![0; r]).collect();
        for (k, c) in order.iter().enumerate() {
            entries[c.i - 1][c.j - 1] = k + 1;
        }
        StandardTableau::new(entries)
    }
}

/// Every standard tableau of shape `shape`, provided `|λ| ≤ bound`.
pub fn enumerate_tableaux(shape: &YoungDiagram, bound: usize) -> Result<Vec<StandardTableau>> {
    let n = shape.size();
    if n > bound {
        return Err(Error::EnumerationBound { size: n, bound });
    }
    // Place the largest entry at each removable corner and recurse.
    fn rec(shape: &YoungDiagram, order: &mut Vec<Cell>, out: &mut Vec<Vec<Cell>>) {
        if shape.is_empty() {
            let mut o = order.clone();
            o.reverse();
            out.push(o);
            return;
        }
        for c in shape.removable_corners() {
            order.push(c);
            rec(&shape.remove_cell(c), order, out);
            order.pop();
        }
    }
    let mut orders = Vec::new();
    rec(shape, &mut Vec::with_capacity(n), &mut orders);
    orders
        .into_iter()
        .map(|o| {
            if o.is_empty() {
                Ok(StandardTableau { shape: YoungDiagram::empty(), entries: Vec::new() })
            } else {
                StandardTableau::from_cell_order(&o)
            }
        })
        .collect()
}

/// One hook walk: returns a removable corner `□` with probability
/// `dim(λ−□)/dim λ`. Panics on the empty diagram.
pub fn hook_walk_corner<R: Rng + ?Sized>(shape: &YoungDiagram, rng: &mut R) -> Cell {
    assert!(!shape.is_empty(), "hook walk on the empty diagram");
    let n = shape.size();
    let mut pick = rng.random_range(0..n);
    let mut cell = Cell { i: 1, j: 1 };
    for (i, &len) in shape.rows().iter().enumerate() {
        if pick < len {
            cell = Cell { i: i + 1, j: pick + 1 };
            break;
        }
        pick -= len;
    }
    loop {
        let arm = shape.row_len(cell.i) - cell.j;
        let leg = shape.col_len(cell.j) - cell.i;
        if arm + leg == 0 {
            return cell;
        }
        let step = rng.random_range(0..arm + leg);
        if step < arm {
            cell.j += step + 1;
        } else {
            cell.i += step - arm + 1;
        }
    }
}

/// A uniformly distributed standard tableau of the given shape, built by
/// stripping hook-walk corners from the full shape down to ∅.
pub fn uniform_tableau<R: Rng + ?Sized>(shape: &YoungDiagram, rng: &mut R) -> StandardTableau {
    let n = shape.size();
    let mut entries: Vec<Vec<usize>> = shape.rows().iter().map(|&r| vec![0; r]).collect();
    let mut cur = shape.clone();
    for k in (1..=n).rev() {
        let c = hook_walk_corner(&cur, rng);
        entries[c.i - 1][c.j - 1] = k;
        cur = cur.remove_cell(c);
    }
    StandardTableau { shape: shape.clone(), entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn d(rows: &[usize]) -> YoungDiagram {
        YoungDiagram::new(rows.to_vec()).unwrap()
    }

    fn c(i: usize, j: usize) -> Cell {
        Cell::new(i, j).unwrap()
    }

    /// Brute-force λ⁺ / λ⁻: test every cell of a bounding box.
    fn brute_corners(shape: &YoungDiagram) -> (Vec<Cell>, Vec<Cell>) {
        let cells: Vec<Cell> = shape.cells().collect();
        let mut add = Vec::new();
        let mut rem = Vec::new();
        for i in 1..=shape.num_rows() + 2 {
            for j in 1..=shape.row_len(1) + 2 {
                let x = c(i, j);
                if shape.contains(x) {
                    let rest: Vec<Cell> = cells.iter().copied().filter(|&y| y != x).collect();
                    if YoungDiagram::from_cells(rest).is_ok() {
                        rem.push(x);
                    }
                } else {
                    let mut more = cells.clone();
                    more.push(x);
                    if YoungDiagram::from_cells(more).is_ok() {
                        add.push(x);
                    }
                }
            }
        }
        add.sort();
        rem.sort();
        (add, rem)
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(YoungDiagram::new(vec![1, 2]).is_err());
        assert!(YoungDiagram::new(vec![2, 0]).is_err());
        assert!(Cell::new(0, 1).is_err());
    }

    #[test]
    fn corner_examples() {
        assert_eq!(YoungDiagram::empty().addable_corners(), vec![c(1, 1)]);
        assert_eq!(d(&[1]).addable_corners(), vec![c(1, 2), c(2, 1)]);
        assert_eq!(d(&[2, 1]).addable_corners(), vec![c(1, 3), c(2, 2), c(3, 1)]);
        assert!(YoungDiagram::empty().removable_corners().is_empty());
        assert_eq!(d(&[1]).removable_corners(), vec![c(1, 1)]);
        assert_eq!(d(&[2, 2]).removable_corners(), vec![c(2, 2)]);
    }

    #[test]
    fn corners_match_brute_force() {
        for shape in YoungDiagram::all_up_to(8) {
            let (add, rem) = brute_corners(&shape);
            assert_eq!(shape.addable_corners(), add, "{shape}");
            assert_eq!(shape.removable_corners(), rem, "{shape}");
            let mut distinct = shape.rows().to_vec();
            distinct.dedup();
            assert_eq!(add.len(), distinct.len() + 1);
        }
    }

    #[test]
    fn dim_examples() {
        assert_eq!(YoungDiagram::empty().dim().unwrap(), 1);
        assert_eq!(d(&[2, 1]).dim().unwrap(), 2);
        assert_eq!(d(&[3, 2]).dim().unwrap(), 5);
    }

    #[test]
    fn dim_overflow_is_signalled() {
        // dim of the 12x12 square is far beyond u64.
        let sq = d(&[12; 12]);
        assert_eq!(sq.dim(), Err(Error::DimensionOverflow(144)));
        assert!(sq.dim_exact() > BigUint::from(u64::MAX));
    }

    #[test]
    fn enumeration_examples() {
        let e = enumerate_tableaux(&YoungDiagram::empty(), 12).unwrap();
        assert_eq!(e.len(), 1);
        let e = enumerate_tableaux(&d(&[1, 1]), 12).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].entries(), &[vec![1], vec![2]]);
        assert_eq!(enumerate_tableaux(&d(&[2, 1]), 12).unwrap().len(), 2);
        assert_eq!(
            enumerate_tableaux(&d(&[7, 6]), 12),
            Err(Error::EnumerationBound { size: 13, bound: 12 })
        );
    }

    #[test]
    fn partition_counts() {
        let counts: Vec<usize> = (0..=10).map(|n| YoungDiagram::all_of_size(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42]);
    }

    #[test]
    fn ordering_is_size_then_lex() {
        let all = YoungDiagram::all_up_to(3);
        let rows: Vec<Vec<usize>> = all.iter().map(|d| d.rows().to_vec()).collect();
        assert_eq!(
            rows,
            vec![vec![], vec![1], vec![1, 1], vec![2], vec![1, 1, 1], vec![2, 1], vec![3]]
        );
    }

    #[test]
    fn tableau_validation() {
        assert!(StandardTableau::new(vec![vec![1, 3], vec![2]]).is_ok());
        assert!(StandardTableau::new(vec![vec![2, 1]]).is_err());
        assert!(StandardTableau::new(vec![vec![1, 2], vec![2]]).is_err());
    }

    #[test]
    fn hook_walk_deterministic_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(hook_walk_corner(&d(&[1]), &mut rng), c(1, 1));
            assert_eq!(hook_walk_corner(&d(&[2, 2]), &mut rng), c(2, 2));
        }
    }

    #[test]
    fn hook_walk_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000usize;
        for shape in [d(&[2, 1]), d(&[3, 1]), d(&[3, 2, 1])] {
            let dim = shape.dim().unwrap() as f64;
            let corners = shape.removable_corners();
            let mut counts = vec![0usize; corners.len()];
            for _ in 0..n {
                let x = hook_walk_corner(&shape, &mut rng);
                counts[corners.iter().position(|&y| y == x).unwrap()] += 1;
            }
            for (k, corner) in corners.iter().enumerate() {
                let p = shape.remove_cell(*corner).dim().unwrap() as f64 / dim;
                let sigma = (p * (1.0 - p) / n as f64).sqrt();
                let obs = counts[k] as f64 / n as f64;
                assert!((obs - p).abs() < 4.0 * sigma, "{shape} {corner}: {obs} vs {p}");
            }
        }
    }

    #[test]
    fn uniform_tableau_is_standard() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let shape = d(&[5, 3, 3, 1]);
        for _ in 0..200 {
            let t = uniform_tableau(&shape, &mut rng);
            assert!(StandardTableau::new(t.entries().to_vec()).is_ok());
        }
    }

    #[test]
    fn json_rows() {
        let s = serde_json::to_string(&d(&[3, 1])).unwrap();
        assert_eq!(s, "[3,1]");
        let back: YoungDiagram = serde_json::from_str("[3,1]").unwrap();
        assert_eq!(back, d(&[3, 1]));
        assert!(serde_json::from_str::<YoungDiagram>("[1,3]").is_err());
    }
}
