//! The jump chain on Young diagrams: its Q-matrix, a Gillespie simulator,
//! and transient/stationary solves on a finite truncation.
//!
//! Rates out of `λ`:
//!
//! * up to `λ+□`:   `r·q(c(□))·dim(λ+□) / ((|λ|+1)·dim λ)`
//! * down to `λ−□`: `(r+1)·|λ|·dim(λ−□) / dim λ`
//!
//! and the total exit rate is `(2r+1)|λ| + r·z z′`.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use statrs::distribution::{DiscreteCDF, Poisson};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::params::{ExactParameters, Parameters};
use crate::partitions::{Cell, YoungDiagram};

/// Default maximal diagram size for generator truncation.
pub const DEFAULT_MAX_SIZE: usize = 12;
/// Largest accepted truncation size.
pub const GENERATOR_BOUND: usize = 16;
/// Target for the neglected Poisson tail in uniformization.
pub const SERIES_TOLERANCE: f64 = 1e-13;

/// A probability distribution over diagrams.
pub type ShapeDistribution = BTreeMap<YoungDiagram, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub source: YoungDiagram,
    pub up: Vec<(Cell, f64)>,
    pub down: Vec<(Cell, f64)>,
    pub total_exit: f64,
}

impl RateRow {
    pub fn sum_of_rates(&self) -> f64 {
        self.up.iter().chain(&self.down).map(|(_, w)| w).sum()
    }
}

fn ratio_f64(num: &num_bigint::BigUint, den: &num_bigint::BigUint) -> f64 {
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
        .to_f64()
        .expect("finite dimension ratio")
}

/// Outgoing rates of the shape chain at `λ`.
pub fn rate_row(shape: &YoungDiagram, params: &Parameters) -> RateRow {
    let n = shape.size();
    let r = params.r;
    let dim = shape.dim_exact();
    let up = shape
        .addable_corners()
        .into_iter()
        .map(|c| {
            let ratio = ratio_f64(&shape.add_cell(c).dim_exact(), &dim) / (n as f64 + 1.0);
            (c, r * params.q_rate(c) * ratio)
        })
        .collect();
    let down = shape
        .removable_corners()
        .into_iter()
        .map(|c| (c, (r + 1.0) * n as f64 * ratio_f64(&shape.remove_cell(c).dim_exact(), &dim)))
        .collect();
    RateRow { source: shape.clone(), up, down, total_exit: (2.0 * r + 1.0) * n as f64 + r * params.p }
}

/// Exact rates: `(up, down, total_exit)` with the closed-form total.
pub fn rate_row_exact(shape: &YoungDiagram, params: &ExactParameters) -> (Vec<(Cell, BigRational)>, Vec<(Cell, BigRational)>, BigRational) {
    let n = BigRational::from_integer(BigInt::from(shape.size()));
    let one = BigRational::from_integer(BigInt::from(1));
    let two = BigRational::from_integer(BigInt::from(2));
    let dim = BigInt::from(shape.dim_exact());
    let up = shape
        .addable_corners()
        .into_iter()
        .map(|c| {
            let ratio = BigRational::new(BigInt::from(shape.add_cell(c).dim_exact()), dim.clone()) / (&n + &one);
            (c, &params.r * params.q_content(c.content()) * ratio)
        })
        .collect();
    let down = shape
        .removable_corners()
        .into_iter()
        .map(|c| {
            let ratio = BigRational::new(BigInt::from(shape.remove_cell(c).dim_exact()), dim.clone());
            (c, (&params.r + &one) * &n * ratio)
        })
        .collect();
    let total = (&two * &params.r + &one) * &n + &params.r * &params.p;
    (up, down, total)
}

/// Checks `Σ up + Σ down = (2r+1)|λ| + r·p` exactly.
pub fn row_sum_identity_holds(shape: &YoungDiagram, params: &ExactParameters) -> bool {
    let (up, down, total) = rate_row_exact(shape, params);
    let sum = up.iter().chain(&down).fold(BigRational::zero(), |acc, (_, w)| acc + w);
    sum == total
}

/// A shape trajectory: `states[k]` holds on `[times[k], times[k+1])`, the
/// last state until `horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<YoungDiagram>,
    pub horizon: f64,
}

impl ShapeTrajectory {
    pub fn final_state(&self) -> &YoungDiagram {
        self.states.last().expect("trajectory has an initial state")
    }

    pub fn jumps(&self) -> usize {
        self.states.len() - 1
    }

    /// Time spent in each shape within `[from, to]`.
    pub fn occupation(&self, from: f64, to: f64) -> ShapeDistribution {
        let mut out = ShapeDistribution::new();
        for (k, st) in self.states.iter().enumerate() {
            let a = self.times[k].max(from);
            let b = self.times.get(k + 1).copied().unwrap_or(self.horizon).min(to);
            if b > a {
                *out.entry(st.clone()).or_insert(0.0) += b - a;
            }
        }
        out
    }

    /// Shape at time `t`.
    pub fn state_at(&self, t: f64) -> &YoungDiagram {
        let k = self.times.partition_point(|&s| s <= t);
        &self.states[k.saturating_sub(1)]
    }
}

/// Direct-method simulation of the shape chain up to time `horizon`.
pub fn gillespie_run<R: Rng + ?Sized>(
    start: &YoungDiagram,
    params: &Parameters,
    horizon: f64,
    event_cap: u64,
    rng: &mut R,
) -> Result<ShapeTrajectory> {
    let mut times = vec![0.0];
    let mut states = vec![start.clone()];
    let mut t = 0.0;
    let mut cur = start.clone();
    let mut cache: HashMap<YoungDiagram, RateRow> = HashMap::new();
    loop {
        let row = cache.entry(cur.clone()).or_insert_with(|| rate_row(&cur, params));
        let total = row.sum_of_rates();
        let e: f64 = Exp1.sample(rng);
        t += e / total;
        if t > horizon {
            break;
        }
        if (states.len() - 1) as u64 >= event_cap {
            return Err(Error::Explosion { cap: event_cap, time: t });
        }
        let mut u = rng.random::<f64>() * total;
        let mut next = None;
        for (c, w) in &row.up {
            if u < *w {
                next = Some(cur.add_cell(*c));
                break;
            }
            u -= w;
        }
        if next.is_none() {
            for (c, w) in &row.down {
                if u < *w {
                    next = Some(cur.remove_cell(*c));
                    break;
                }
                u -= w;
            }
        }
        // Rounding can leave u just above the last weight.
        let next = next.unwrap_or_else(|| match row.down.last() {
            Some((c, _)) => cur.remove_cell(*c),
            None => cur.add_cell(row.up.last().expect("nonempty rate row").0),
        });
        cur = next;
        times.push(t);
        states.push(cur.clone());
    }
    Ok(ShapeTrajectory { times, states, horizon })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Up-moves out of the largest shapes go to an absorbing overflow state.
    Overflow,
    /// Up-moves out of the largest shapes are deleted.
    Reflecting,
}

/// The Q-matrix restricted to `{λ : |λ| ≤ N}`.
#[derive(Debug, Clone)]
pub struct Generator {
    max_size: usize,
    boundary: Boundary,
    states: Vec<YoungDiagram>,
    index: HashMap<YoungDiagram, usize>,
    /// Off-diagonal entries per row; the overflow state (if any) is index
    /// `states.len()`.
    off: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
}

/// Truncated generator with an absorbing overflow state.
pub fn build_generator(max_size: usize, params: &Parameters) -> Result<Generator> {
    Generator::build(max_size, params, Boundary::Overflow)
}

impl Generator {
    pub fn build(max_size: usize, params: &Parameters, boundary: Boundary) -> Result<Self> {
        if max_size > GENERATOR_BOUND {
            return Err(Error::EnumerationBound { size: max_size, bound: GENERATOR_BOUND });
        }
        let states = YoungDiagram::all_up_to(max_size);
        let index: HashMap<YoungDiagram, usize> = states.iter().cloned().enumerate().map(|(k, d)| (d, k)).collect();
        let overflow = states.len();
        let mut off = Vec::with_capacity(states.len() + 1);
        let mut diag = Vec::with_capacity(states.len() + 1);
        for st in &states {
            let row = rate_row(st, params);
            let mut entries = Vec::new();
            let mut to_overflow = 0.0;
            for (c, w) in &row.up {
                match index.get(&st.add_cell(*c)) {
                    Some(&k) => entries.push((k, *w)),
                    None => to_overflow += w,
                }
            }
            for (c, w) in &row.down {
                entries.push((index[&st.remove_cell(*c)], *w));
            }
            if to_overflow > 0.0 && boundary == Boundary::Overflow {
                entries.push((overflow, to_overflow));
            }
            entries.sort_by_key(|e| e.0);
            let exit: f64 = entries.iter().map(|e| e.1).sum();
            off.push(entries);
            diag.push(-exit);
        }
        if boundary == Boundary::Overflow {
            off.push(Vec::new());
            diag.push(0.0);
        }
        Ok(Generator { max_size, boundary, states, index, off, diag })
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Retained diagrams, ordered by size then lexicographically.
    pub fn states(&self) -> &[YoungDiagram] {
        &self.states
    }

    /// Number of matrix rows, including the overflow state when present.
    pub fn dimension(&self) -> usize {
        self.diag.len()
    }

    pub fn overflow_index(&self) -> Option<usize> {
        (self.boundary == Boundary::Overflow).then_some(self.states.len())
    }

    pub fn index_of(&self, shape: &YoungDiagram) -> Option<usize> {
        self.index.get(shape).copied()
    }

    pub fn diagonal(&self, k: usize) -> f64 {
        self.diag[k]
    }

    pub fn off_diagonal(&self, k: usize) -> &[(usize, f64)] {
        &self.off[k]
    }

    /// The same truncation with the overflow state deleted.
    pub fn reflecting(&self) -> Generator {
        if self.boundary == Boundary::Reflecting {
            return self.clone();
        }
        let n = self.states.len();
        let mut off = Vec::with_capacity(n);
        let mut diag = Vec::with_capacity(n);
        for row in &self.off[..n] {
            let entries: Vec<(usize, f64)> = row.iter().copied().filter(|e| e.0 < n).collect();
            diag.push(-entries.iter().map(|e| e.1).sum::<f64>());
            off.push(entries);
        }
        Generator { max_size: self.max_size, boundary: Boundary::Reflecting, states: self.states.clone(), index: self.index.clone(), off, diag }
    }

    /// `v ↦ v Q` for a row vector.
    pub fn left_multiply(&self, v: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = v.iter().zip(&self.diag).map(|(a, d)| a * d).collect();
        for (k, row) in self.off.iter().enumerate() {
            if v[k] != 0.0 {
                for &(m, w) in row {
                    out[m] += v[k] * w;
                }
            }
        }
        out
    }

    /// Converts a vector over retained states to a distribution.
    pub fn to_distribution(&self, v: &[f64]) -> ShapeDistribution {
        self.states.iter().cloned().zip(v.iter().copied()).filter(|(_, p)| *p > 0.0).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transient {
    /// Probabilities over the retained states, in generator order.
    pub probs: Vec<f64>,
    /// Mass absorbed in the overflow state: an upper bound on the error
    /// caused by truncating the state space.
    pub overflow: f64,
    /// Neglected tail of the Poisson series.
    pub series_error: f64,
    pub terms: usize,
}

/// Distribution at time `t` from `start`, by uniformization:
/// `Σₖ Poisson(k; Λt) · e_start Pᵏ` with `P = I + Q/Λ`.
pub fn transient_distribution(gen: &Generator, start: &YoungDiagram, t: f64) -> Result<Transient> {
    let k0 = gen.index_of(start).ok_or_else(|| Error::UnknownState(start.rows().to_vec()))?;
    let mut v = vec![0.0; gen.dimension()];
    v[k0] = 1.0;
    transient_from(gen, v, t)
}

/// Uniformization from an arbitrary initial vector over all generator rows.
pub fn transient_from(gen: &Generator, initial: Vec<f64>, t: f64) -> Result<Transient> {
    if !(t >= 0.0) {
        return Err(Error::InvalidInput(format!("time {t} must be nonnegative")));
    }
    let lambda = gen.diag.iter().fold(0.0f64, |m, d| m.max(-d));
    let split = |acc: Vec<f64>, series_error: f64, terms: usize| {
        let n = gen.states.len();
        let overflow = gen.overflow_index().map_or(0.0, |k| acc[k]);
        Transient { probs: acc[..n].to_vec(), overflow, series_error, terms }
    };
    let mean = lambda * t;
    if mean == 0.0 {
        return Ok(split(initial, 0.0, 0));
    }
    let poisson = Poisson::new(mean).map_err(|e| Error::Solver(e.to_string()))?;
    let mut kmax = (mean + 10.0 * mean.sqrt() + 10.0).ceil() as u64;
    while poisson.sf(kmax) > SERIES_TOLERANCE {
        kmax += (mean.sqrt() as u64).max(10);
    }
    let ln_mean = mean.ln();
    let mut v = initial;
    let mut acc = vec![0.0; v.len()];
    for k in 0..=kmax {
        let w = (-mean + k as f64 * ln_mean - ln_gamma(k as f64 + 1.0)).exp();
        if w > 0.0 {
            for (a, x) in acc.iter_mut().zip(&v) {
                *a += w * x;
            }
        }
        if k < kmax {
            let qv = gen.left_multiply(&v);
            for (x, d) in v.iter_mut().zip(qv) {
                *x += d / lambda;
            }
        }
    }
    Ok(split(acc, poisson.sf(kmax), kmax as usize + 1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stationary {
    /// Stationary probabilities over the retained states.
    pub probs: Vec<f64>,
    /// `‖π Q̃‖∞`.
    pub residual: f64,
    /// Mass on the largest retained shapes, `|λ| = N`.
    pub boundary_mass: f64,
    /// Whether `boundary_mass < 1e-6`.
    pub converged: bool,
}

/// Solves `π Q̃ = 0, Σ π = 1` for the truncation with the overflow state
/// deleted (up-moves out of `|λ| = N` are dropped).
pub fn stationary_distribution(gen: &Generator) -> Result<Stationary> {
    let refl = gen.reflecting();
    let n = refl.states.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        a[(k, k)] = refl.diag[k];
        for &(m, w) in &refl.off[k] {
            a[(m, k)] += w;
        }
    }
    for k in 0..n {
        a[(n - 1, k)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let x = a.lu().solve(&b).ok_or_else(|| Error::Solver("singular stationary system".into()))?;
    let mut probs: Vec<f64> = x.iter().map(|&p| p.max(0.0)).collect();
    let total: f64 = probs.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Solver(format!("stationary solve produced total mass {total}")));
    }
    for p in &mut probs {
        *p /= total;
    }
    let residual = refl.left_multiply(&probs).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let boundary_mass = refl
        .states
        .iter()
        .zip(&probs)
        .filter(|(s, _)| s.size() == refl.max_size)
        .map(|(_, p)| p)
        .sum::<f64>();
    let boundary_mass = if refl.max_size == 0 { 0.0 } else { boundary_mass };
    Ok(Stationary { probs, residual, boundary_mass, converged: boundary_mass < 1e-6 })
}
