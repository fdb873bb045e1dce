//! Generalized standard tableaux bounded by `r`: the state space of the
//! particle process.
//!
//! A state stores the finite heights row by row. Every cell outside the
//! support implicitly has height `r`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partitions::{Cell, StandardTableau, YoungDiagram};

#[derive(Debug, Clone, PartialEq)]
pub struct HeightState {
    r: f64,
    rows: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct CellHeight {
    i: usize,
    j: usize,
    h: f64,
}

#[derive(Serialize, Deserialize)]
struct StateRepr {
    r: f64,
    cells: Vec<CellHeight>,
}

impl Serialize for HeightState {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let cells = self
            .cells()
            .map(|(c, h)| CellHeight { i: c.i, j: c.j, h })
            .collect();
        StateRepr { r: self.r, cells }.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for HeightState {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let repr = StateRepr::deserialize(de)?;
        let cells = repr.cells.into_iter().map(|c| (Cell { i: c.i, j: c.j }, c.h));
        HeightState::from_cells(repr.r, cells).map_err(serde::de::Error::custom)
    }
}

impl HeightState {
    /// The empty tableau at level `r`.
    pub fn empty(r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidState(format!("level r = {r} must be positive")));
        }
        Ok(HeightState { r, rows: Vec::new() })
    }

    /// Builds a state from row-wise heights and validates it.
    pub fn from_rows(r: f64, rows: Vec<Vec<f64>>) -> Result<Self> {
        let st = HeightState { r, rows };
        st.validate()?;
        Ok(st)
    }

    /// Builds a state from `(cell, height)` pairs in any order.
    pub fn from_cells<I: IntoIterator<Item = (Cell, f64)>>(r: f64, cells: I) -> Result<Self> {
        let cells: Vec<(Cell, f64)> = cells.into_iter().collect();
        let shape = YoungDiagram::from_cells(cells.iter().map(|(c, _)| *c))
            .map_err(|e| Error::InvalidState(e.to_string()))?;
        let mut rows: Vec<Vec<f64>> = shape.rows().iter().map(|&n| vec![f64::NAN; n]).collect();
        for (c, h) in cells {
            if c.i == 0 || c.j == 0 {
                return Err(Error::InvalidState(format!("cell {c} has a zero index")));
            }
            rows[c.i - 1][c.j - 1] = h;
        }
        Self::from_rows(r, rows)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn size(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_supported(&self, cell: Cell) -> bool {
        cell.i >= 1 && cell.j >= 1 && self.rows.get(cell.i - 1).is_some_and(|row| row.len() >= cell.j)
    }

    /// Supported cells with their heights, row-major.
    pub fn cells(&self) -> impl Iterator<Item = (Cell, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &h)| (Cell { i: i + 1, j: j + 1 }, h)))
    }

    /// Stored height, or `r` off the support.
    pub fn height(&self, cell: Cell) -> f64 {
        if cell.i == 0 || cell.j == 0 {
            return self.r;
        }
        self.rows
            .get(cell.i - 1)
            .and_then(|row| row.get(cell.j - 1))
            .copied()
            .unwrap_or(self.r)
    }

    /// Lower end of the jump window: the larger of the upper and left
    /// neighbours' heights, `0` at the corner cell `(1,1)`.
    pub fn h_down(&self, cell: Cell) -> f64 {
        match (cell.i > 1, cell.j > 1) {
            (true, true) => self
                .height(Cell { i: cell.i - 1, j: cell.j })
                .max(self.height(Cell { i: cell.i, j: cell.j - 1 })),
            (false, true) => self.height(Cell { i: 1, j: cell.j - 1 }),
            (true, false) => self.height(Cell { i: cell.i - 1, j: 1 }),
            (false, false) => 0.0,
        }
    }

    pub fn shape(&self) -> YoungDiagram {
        YoungDiagram::new(self.rows.iter().map(Vec::len).collect()).expect("state support is a diagram")
    }

    /// Applies `h ↦ min(h, r_new)` cellwise.
    pub fn truncate(&self, r_new: f64) -> Result<HeightState> {
        if !(r_new > 0.0) {
            return Err(Error::InvalidState(format!("truncation level {r_new} must be positive")));
        }
        if r_new > self.r {
            return Err(Error::TruncationAboveLevel { new: r_new, current: self.r });
        }
        let mut out = HeightState { r: r_new, rows: self.rows.clone() };
        out.drop_at_level();
        Ok(out)
    }

    /// Projection onto the standard tableau recording the order of the
    /// heights, together with the sorted heights.
    pub fn to_ranked_tableau(&self) -> (YoungDiagram, StandardTableau, Vec<f64>) {
        let mut cells: Vec<(Cell, f64)> = self.cells().collect();
        cells.sort_by(|a, b| a.1.total_cmp(&b.1));
        let order: Vec<Cell> = cells.iter().map(|(c, _)| *c).collect();
        let heights = cells.iter().map(|(_, h)| *h).collect();
        let tableau = if order.is_empty() {
            StandardTableau::new(Vec::new()).expect("empty tableau")
        } else {
            StandardTableau::from_cell_order(&order).expect("valid state ranks to a standard tableau")
        };
        (self.shape(), tableau, heights)
    }

    /// Support together with the addable corners of the shape; exactly the
    /// cells whose jump window is nonempty.
    pub fn active_cells(&self) -> Vec<Cell> {
        let mut out: Vec<Cell> = self.cells().map(|(c, _)| c).collect();
        out.extend(self.shape().addable_corners());
        out
    }

    /// Checks all structural invariants: support is a diagram, heights lie
    /// in `(0, r)`, increase along rows and columns, and are pairwise
    /// distinct (exact comparison).
    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::InvalidState(format!("level r = {} must be positive", self.r)));
        }
        let lens: Vec<usize> = self.rows.iter().map(Vec::len).collect();
        YoungDiagram::new(lens.clone()).map_err(|_| Error::InvalidState(format!("support rows {lens:?} do not form a diagram")))?;
        for (c, h) in self.cells() {
            if !(h > 0.0 && h < self.r) {
                return Err(Error::InvalidState(format!("height {h} at {c} is outside (0, {})", self.r)));
            }
            let right = Cell { i: c.i, j: c.j + 1 };
            let below = Cell { i: c.i + 1, j: c.j };
            for n in [right, below] {
                if self.is_supported(n) && self.height(n) <= h {
                    return Err(Error::InvalidState(format!("heights not increasing from {c} to {n}")));
                }
            }
        }
        let mut all: Vec<f64> = self.cells().map(|(_, h)| h).collect();
        all.sort_by(f64::total_cmp);
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidState("heights are not pairwise distinct".into()));
        }
        Ok(())
    }

    /// Sets the height of a supported or addable cell. The caller is
    /// responsible for keeping the order constraints.
    pub(crate) fn set_height(&mut self, cell: Cell, h: f64) {
        if cell.i > self.rows.len() {
            debug_assert_eq!((cell.i, cell.j), (self.rows.len() + 1, 1));
            self.rows.push(vec![h]);
            return;
        }
        let row = &mut self.rows[cell.i - 1];
        if cell.j > row.len() {
            debug_assert_eq!(cell.j, row.len() + 1);
            row.push(h);
        } else {
            row[cell.j - 1] = h;
        }
    }

    /// Drops a removable corner from the support.
    pub(crate) fn remove_corner(&mut self, cell: Cell) {
        let row = &mut self.rows[cell.i - 1];
        debug_assert_eq!(row.len(), cell.j);
        row.pop();
        if row.is_empty() {
            debug_assert_eq!(cell.i, self.rows.len());
            self.rows.pop();
        }
    }

    /// Removes every height `≥ r`. Heights increase along rows and columns,
    /// so each row keeps a prefix and the support stays a diagram.
    pub(crate) fn drop_at_level(&mut self) {
        let r = self.r;
        for row in &mut self.rows {
            let keep = row.iter().take_while(|&&h| h < r).count();
            row.truncate(keep);
        }
        while self.rows.last().is_some_and(Vec::is_empty) {
            self.rows.pop();
        }
    }

    /// Applies `f` to every stored height.
    pub(crate) fn map_heights(&mut self, mut f: impl FnMut(f64) -> f64) {
        for h in self.rows.iter_mut().flatten() {
            *h = f(*h);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(i: usize, j: usize) -> Cell {
        Cell { i, j }
    }

    #[test]
    fn height_examples() {
        let e = HeightState::empty(2.0).unwrap();
        assert_eq!(e.height(c(5, 7)), 2.0);
        let s = HeightState::from_rows(2.0, vec![vec![0.3]]).unwrap();
        assert_eq!(s.height(c(1, 1)), 0.3);
        assert_eq!(s.height(c(2, 1)), 2.0);
    }

    #[test]
    fn h_down_examples() {
        let s = HeightState::from_rows(1.0, vec![vec![0.2, 0.5]]).unwrap();
        assert_eq!(s.h_down(c(1, 1)), 0.0);
        assert_eq!(s.h_down(c(2, 2)), 1.0);
        assert_eq!(s.h_down(c(1, 2)), 0.2);
        assert_eq!(s.h_down(c(2, 1)), 0.2);
        assert_eq!(s.h_down(c(1, 3)), 0.5);
    }

    #[test]
    fn shape_examples() {
        assert!(HeightState::empty(1.0).unwrap().shape().is_empty());
        let s = HeightState::from_rows(1.0, vec![vec![0.1, 0.4]]).unwrap();
        assert_eq!(s.shape().rows(), &[2]);
        let s = HeightState::from_rows(1.0, vec![vec![0.1, 0.4], vec![0.2]]).unwrap();
        assert_eq!(s.shape().rows(), &[2, 1]);
    }

    #[test]
    fn validation_catches_violations() {
        assert!(HeightState::from_rows(1.0, vec![vec![0.5, 0.4]]).is_err());
        assert!(HeightState::from_rows(1.0, vec![vec![0.5], vec![0.4]]).is_err());
        assert!(HeightState::from_rows(1.0, vec![vec![0.5], vec![0.6, 0.7]]).is_err());
        assert!(HeightState::from_rows(1.0, vec![vec![0.2, 1.0]]).is_err());
        assert!(HeightState::from_rows(1.0, vec![vec![0.0]]).is_err());
        assert!(HeightState::from_rows(1.0, vec![vec![0.2, 0.5], vec![0.5]]).is_err());
        assert!(HeightState::from_rows(1.0, vec![vec![]]).is_err());
        assert!(HeightState::empty(0.0).is_err());
    }

    #[test]
    fn truncate_examples() {
        let s = HeightState::from_rows(2.0, vec![vec![0.3, 1.5]]).unwrap();
        assert_eq!(s.truncate(2.0).unwrap(), s);
        let t = s.truncate(1.0).unwrap();
        assert_eq!(t.rows(), &[vec![0.3]]);
        assert_eq!(t.r(), 1.0);
        assert!(s.truncate(2.5).is_err());
        // Values equal to the new level become unsupported.
        assert!(s.truncate(0.3).unwrap().is_empty());
    }

    #[test]
    fn ranked_tableau_example() {
        let s = HeightState::from_rows(1.0, vec![vec![0.1, 0.5], vec![0.2]]).unwrap();
        let (shape, t, hs) = s.to_ranked_tableau();
        assert_eq!(shape.rows(), &[2, 1]);
        assert_eq!(t.entries(), &[vec![1, 3], vec![2]]);
        assert_eq!(hs, vec![0.1, 0.2, 0.5]);
        let (_, t, hs) = HeightState::from_rows(1.0, vec![vec![0.1]]).unwrap().to_ranked_tableau();
        assert_eq!(t.entries(), &[vec![1]]);
        assert_eq!(hs, vec![0.1]);
    }

    #[test]
    fn active_cells_examples() {
        assert_eq!(HeightState::empty(1.0).unwrap().active_cells(), vec![c(1, 1)]);
        let s = HeightState::from_rows(1.0, vec![vec![0.4]]).unwrap();
        let mut a = s.active_cells();
        a.sort();
        assert_eq!(a, vec![c(1, 1), c(1, 2), c(2, 1)]);
    }

    #[test]
    fn json_format() {
        let s = HeightState::from_rows(1.0, vec![vec![0.3]]).unwrap();
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"r":1.0,"cells":[{"i":1,"j":1,"h":0.3}]}"#);
        let back: HeightState = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<HeightState>(r#"{"r":1.0,"cells":[{"i":1,"j":2,"h":0.3}]}"#).is_err());
        assert!(serde_json::from_str::<HeightState>(r#"{"r":1.0,"cells":[{"i":1,"j":1,"h":1.3}]}"#).is_err());
    }

    /// Random valid states: a random diagram filled from sorted uniforms via
    /// a random linear extension.
    fn state_strategy() -> impl Strategy<Value = HeightState> {
        (proptest::collection::vec(1usize..5, 0..5), proptest::collection::vec(0.001f64..0.999, 25), any::<u64>())
            .prop_map(|(mut rows, mut xs, seed)| {
                rows.sort_unstable_by(|a, b| b.cmp(a));
                let shape = YoungDiagram::new(rows).unwrap();
                let n = shape.size();
                xs.truncate(n);
                xs.sort_by(f64::total_cmp);
                xs.dedup();
                let shape = if xs.len() < n { YoungDiagram::empty() } else { shape };
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let t = crate::partitions::uniform_tableau(&shape, &mut rng);
                let cells = t.cells_in_order().into_iter().zip(xs.into_iter().map(|x| 3.0 * x));
                HeightState::from_cells(3.0, cells).unwrap()
            })
    }

    proptest! {
        #[test]
        fn truncation_composes(st in state_strategy(), a in 0.01f64..3.0, b in 0.01f64..3.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let direct = st.truncate(lo).unwrap();
            let composed = st.truncate(hi).unwrap().truncate(lo).unwrap();
            prop_assert_eq!(&direct, &composed);
            prop_assert_eq!(direct.truncate(lo).unwrap(), direct.clone());
            prop_assert!(direct.validate().is_ok());
            prop_assert!(st.truncate(hi).unwrap().shape().contains_diagram(&direct.shape()));
        }

        #[test]
        fn active_cells_have_open_windows(st in state_strategy()) {
            let active = st.active_cells();
            for c in &active {
                prop_assert!(st.h_down(*c) < st.height(*c));
            }
            for i in 1..8 {
                for j in 1..8 {
                    let cell = Cell { i, j };
                    if !active.contains(&cell) {
                        prop_assert_eq!(st.h_down(cell), st.r());
                        prop_assert_eq!(st.height(cell), st.r());
                    }
                }
            }
        }

        #[test]
        fn ranked_tableau_is_standard(st in state_strategy()) {
            let (shape, t, hs) = st.to_ranked_tableau();
            prop_assert_eq!(t.shape(), &shape);
            prop_assert!(hs.windows(2).all(|w| w[0] < w[1]));
            for (cell, h) in st.cells() {
                prop_assert_eq!(hs[t.entry(cell) - 1], h);
            }
        }
    }
}
