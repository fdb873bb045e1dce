//! Claim-testing harness: exact identities, and statistical comparisons
//! between the particle process and the shape jump chain.
//!
//! Every report records the seeds, sample sizes and thresholds it used, so
//! a run can be reproduced exactly.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::{replica_rng, run_replicas};
use crate::error::{Error, Result};
use crate::gibbs::{sample_gibbs, test_gibbsianness, GibbsReport, Verdict};
use crate::jump_chain::{build_generator, gillespie_run, stationary_distribution, transient_distribution, ShapeDistribution};
use crate::params::{ExactParameters, Parameters};
use crate::partitions::{uniform_tableau, Cell, StandardTableau, YoungDiagram};
use crate::pdmp::{Engine, EventKind, Mode, RunStats, SimConfig, Step, DEFAULT_EVENT_CAP};
use crate::stats::{ks_exponential, ks_uniform, normalize, tv_unchecked, TestResult};
use crate::tableau_state::HeightState;

/// Budget on the overflow mass of a truncated transient.
pub const OVERFLOW_BUDGET: f64 = 1e-6;
/// States with at least this much exact mass count towards the margin.
pub const MARGIN_MASS_CUTOFF: f64 = 1e-4;
/// Significance level for single KS checks.
pub const KS_ALPHA: f64 = 1e-3;

// ---------------------------------------------------------------------------
// Exact identities

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowSumReport {
    pub max_size: usize,
    pub parameter_sets: Vec<String>,
    pub shapes_checked: usize,
    pub failures: Vec<String>,
    pub verdict: Verdict,
}

/// Checks the exact row-sum identity of the Q-matrix for every `|λ| ≤ N`
/// and every parameter set.
pub fn rowsum_check(max_size: usize, params: &[ExactParameters]) -> RowSumReport {
    let shapes = YoungDiagram::all_up_to(max_size);
    let mut failures = Vec::new();
    for prm in params {
        for shape in &shapes {
            if !crate::jump_chain::row_sum_identity_holds(shape, prm) {
                failures.push(format!("{shape} at s={}, p={}, r={}", prm.s, prm.p, prm.r));
            }
        }
    }
    RowSumReport {
        max_size,
        parameter_sets: params.iter().map(|p| format!("s={}, p={}, r={}", p.s, p.p, p.r)).collect(),
        shapes_checked: shapes.len() * params.len(),
        verdict: if failures.is_empty() { Verdict::Pass } else { Verdict::Fail },
        failures,
    }
}

/// The three parameter sets used for the exact row-sum check:
/// `z = z′ = 1/2, r = 1`; `z = 1 ± 2i, r = 2`; `z = z′ = −1/2, r = 1/2`.
pub fn standard_exact_parameter_sets() -> Vec<ExactParameters> {
    vec![
        ExactParameters::from_ratios((1, 1), (1, 4), (1, 1)).expect("admissible"),
        ExactParameters::from_ratios((2, 1), (5, 1), (2, 1)).expect("admissible"),
        ExactParameters::from_ratios((-1, 1), (1, 4), (1, 2)).expect("admissible"),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub lhs: BigRational,
    pub rhs: BigRational,
}

impl IdentityCheck {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

/// Position of a cell in the total order on N², as far as the region's
/// linear extension determines it. Cells outside the region can sit
/// anywhere after their predecessors.
enum Rank {
    Inside(usize),
    Outside,
}

/// Evaluates the formal identity
///
/// `Σ (y(c↑) + y(c↓) − 2y(c))·q(c) = 2 Σ y(c)`,
///
/// where `c↑` is the smaller of `(i+1,j)`, `(i,j+1)` and `c↓` the larger of
/// `(i−1,j)`, `(i,j−1)` in a total order on N², with `y((1,1)↓) = 0`.
///
/// The total order is known only on `region` (through `order`). A
/// neighbour comparison involving a cell outside the region is accepted
/// only when both possible answers give the same `y` value; otherwise the
/// region is too small and an error is returned.
pub fn remark_identity_check(
    y: &BTreeMap<Cell, BigRational>,
    region: &YoungDiagram,
    order: &StandardTableau,
    s: &BigRational,
    p: &BigRational,
) -> Result<IdentityCheck> {
    if order.shape() != region {
        return Err(Error::InvalidOrder(format!("order has shape {} but region is {region}", order.shape())));
    }
    let zero = BigRational::zero();
    let yv = |c: Cell| y.get(&c).unwrap_or(&zero);
    for (c, v) in y {
        if !v.is_zero() && !region.contains(*c) {
            return Err(Error::RegionTooSmall(format!("support cell {c} lies outside the region {region}")));
        }
    }
    let rank = |c: Cell| if region.contains(c) { Rank::Inside(order.entry(c)) } else { Rank::Outside };

    // Picks the smaller (`want_max = false`) or larger cell of a pair.
    let choose = |a: Cell, b: Cell, want_max: bool, at: Cell| -> Result<BigRational> {
        match (rank(a), rank(b)) {
            (Rank::Inside(ra), Rank::Inside(rb)) => {
                let pick = if (ra > rb) == want_max { a } else { b };
                Ok(yv(pick).clone())
            }
            (Rank::Outside, Rank::Outside) => Ok(zero.clone()),
            (Rank::Inside(_), Rank::Outside) | (Rank::Outside, Rank::Inside(_)) => {
                let inside = if region.contains(a) { a } else { b };
                if yv(inside).is_zero() {
                    Ok(zero.clone())
                } else {
                    Err(Error::RegionTooSmall(format!(
                        "neighbour of {at}: cannot order {a} and {b} with y({inside}) = {} nonzero",
                        yv(inside)
                    )))
                }
            }
        }
    };
    let up = |c: Cell| choose(Cell { i: c.i + 1, j: c.j }, Cell { i: c.i, j: c.j + 1 }, false, c);
    let down = |c: Cell| -> Result<BigRational> {
        match (c.i > 1, c.j > 1) {
            (true, true) => choose(Cell { i: c.i - 1, j: c.j }, Cell { i: c.i, j: c.j - 1 }, true, c),
            (false, true) => Ok(yv(Cell { i: 1, j: c.j - 1 }).clone()),
            (true, false) => Ok(yv(Cell { i: c.i - 1, j: 1 }).clone()),
            (false, false) => Ok(zero.clone()),
        }
    };

    // Cells outside the region have y = 0 and y(c↑) = 0; only those right
    // after a support cell can see a nonzero y(c↓).
    let mut cells: Vec<Cell> = region.cells().collect();
    for (c, v) in y {
        if !v.is_zero() {
            cells.push(Cell { i: c.i + 1, j: c.j });
            cells.push(Cell { i: c.i, j: c.j + 1 });
        }
    }
    cells.sort();
    cells.dedup();

    let two = BigRational::from_integer(BigInt::from(2));
    let mut lhs = BigRational::zero();
    for c in cells {
        let coeff = up(c)? + down(c)? - &two * yv(c);
        if coeff.is_zero() {
            continue;
        }
        let content = BigRational::from_integer(BigInt::from(c.content()));
        let q = p + s * &content + &content * &content;
        lhs += coeff * q;
    }
    let rhs = &two * y.values().fold(BigRational::zero(), |a, v| a + v);
    Ok(IdentityCheck { lhs, rhs })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub trials: usize,
    pub seed: u64,
    pub passed: usize,
    /// Full witnesses of failing trials.
    pub failures: Vec<String>,
    pub verdict: Verdict,
}

fn random_rational<R: Rng + ?Sized>(rng: &mut R, bound: i64) -> BigRational {
    let den: i64 = rng.random_range(1..=12);
    let num: i64 = rng.random_range(-bound * den..=bound * den);
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Randomized exact trials of the identity: support inside a 6×6 box,
/// values in `[−10, 10] ∩ ℚ`, a uniform linear extension of the 7×7 box,
/// and random rational `(s, p)`.
pub fn identity_trials(trials: usize, seed: u64) -> IdentityReport {
    let region = YoungDiagram::new(vec![7; 7]).expect("square");
    let mut failures = Vec::new();
    let mut passed = 0;
    for k in 0..trials {
        let mut rng = replica_rng(seed, k as u64);
        let mut y = BTreeMap::new();
        let density = rng.random_range(0.05..0.6);
        for i in 1..=6 {
            for j in 1..=6 {
                if rng.random::<f64>() < density {
                    y.insert(Cell { i, j }, random_rational(&mut rng, 10));
                }
            }
        }
        let order = uniform_tableau(&region, &mut rng);
        let s = random_rational(&mut rng, 10);
        let p = random_rational(&mut rng, 10);
        match remark_identity_check(&y, &region, &order, &s, &p) {
            Ok(chk) if chk.holds() => passed += 1,
            Ok(chk) => failures.push(format!(
                "trial {k}: lhs={} rhs={} s={s} p={p} y={:?} order={:?}",
                chk.lhs,
                chk.rhs,
                y.iter().map(|(c, v)| (c.to_string(), v.to_string())).collect::<Vec<_>>(),
                order.entries()
            )),
            Err(e) => failures.push(format!("trial {k}: {e}")),
        }
    }
    IdentityReport { trials, seed, passed, verdict: if failures.is_empty() { Verdict::Pass } else { Verdict::Fail }, failures }
}

// ---------------------------------------------------------------------------
// Ensembles

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub replicas: usize,
    pub seed: u64,
    pub event_cap: u64,
    pub mean_events: f64,
    pub max_events: u64,
    pub mean_rejections: f64,
}

impl EnsembleStats {
    fn from_runs(seed: u64, event_cap: u64, stats: &[RunStats]) -> Self {
        let n = stats.len().max(1) as f64;
        EnsembleStats {
            replicas: stats.len(),
            seed,
            event_cap,
            mean_events: stats.iter().map(|s| s.events() as f64).sum::<f64>() / n,
            max_events: stats.iter().map(RunStats::events).max().unwrap_or(0),
            mean_rejections: stats.iter().map(|s| s.rejections as f64).sum::<f64>() / n,
        }
    }
}

/// Runs `replicas` independent trajectories of the particle process; the
/// initial state of each replica is drawn by `initial` from its own stream.
pub fn pdmp_ensemble<F>(cfg: &SimConfig, replicas: usize, initial: F) -> Result<(Vec<HeightState>, EnsembleStats)>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> Result<HeightState> + Sync,
{
    let runs = run_replicas(cfg.seed, replicas, |_, rng| {
        let init = initial(rng)?;
        let mut engine = Engine::new(cfg, init, &mut *rng)?;
        engine.run_with(|_, _| {})?;
        let stats = engine.stats().clone();
        Ok((engine.into_state(), stats))
    })?;
    let stats: Vec<RunStats> = runs.iter().map(|r| r.1.clone()).collect();
    let finals = runs.into_iter().map(|r| r.0).collect();
    Ok((finals, EnsembleStats::from_runs(cfg.seed, cfg.event_cap, &stats)))
}

/// Normalized shape histogram of a set of states.
pub fn shape_histogram(states: &[HeightState]) -> ShapeDistribution {
    let mut counts = ShapeDistribution::new();
    for s in states {
        *counts.entry(s.shape()).or_insert(0.0) += 1.0;
    }
    normalize(&counts)
}

/// `4·√(K/n)/2`: a four-sigma bound on the TV distance of an empirical
/// multinomial histogram over `K` relevant states.
pub fn multinomial_margin(k: usize, n: usize) -> f64 {
    4.0 * (k as f64 / n as f64).sqrt() / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleSource {
    /// The particle process, projected to its shape.
    Pdmp,
    /// The shape jump chain itself (harness calibration).
    Gillespie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim4aReport {
    pub params: Parameters,
    pub horizon: f64,
    pub max_size: usize,
    pub source: EnsembleSource,
    pub ensemble: EnsembleStats,
    pub tv: f64,
    pub relevant_states: usize,
    pub overflow: f64,
    pub series_error: f64,
    pub margin: f64,
    pub empirical: Vec<(YoungDiagram, f64)>,
    pub exact: Vec<(YoungDiagram, f64)>,
    pub gibbs: Option<GibbsReport>,
    pub verdict: Verdict,
}

/// Compares the shape law of the particle process started from the empty
/// tableau with the jump chain's transient law at time `horizon`, and tests
/// the final states for the Gibbs property.
pub fn claim_4a_test(params: &Parameters, horizon: f64, replicas: usize, max_size: usize, seed: u64, source: EnsembleSource) -> Result<Claim4aReport> {
    let gen = build_generator(max_size, params)?;
    let exact = transient_distribution(&gen, &YoungDiagram::empty(), horizon)?;
    let exact_dist = gen.to_distribution(&exact.probs);

    let cfg = SimConfig::new(*params, horizon, seed);
    let (empirical, ensemble, gibbs) = match source {
        EnsembleSource::Pdmp => {
            let (finals, stats) = pdmp_ensemble(&cfg, replicas, |_| HeightState::empty(params.r))?;
            (shape_histogram(&finals), stats, Some(test_gibbsianness(&finals)))
        }
        EnsembleSource::Gillespie => {
            let trajs = run_replicas(seed, replicas, |_, rng| gillespie_run(&YoungDiagram::empty(), params, horizon, DEFAULT_EVENT_CAP, rng))?;
            let mut counts = ShapeDistribution::new();
            for t in &trajs {
                *counts.entry(t.final_state().clone()).or_insert(0.0) += 1.0;
            }
            let stats: Vec<RunStats> = trajs.iter().map(|t| RunStats { jumps: t.jumps() as u64, ..Default::default() }).collect();
            (normalize(&counts), EnsembleStats::from_runs(seed, DEFAULT_EVENT_CAP, &stats), None)
        }
    };
    let tv = tv_unchecked(&empirical, &exact_dist);
    let relevant_states = exact.probs.iter().filter(|&&p| p > MARGIN_MASS_CUTOFF).count();
    let margin = multinomial_margin(relevant_states, replicas) + exact.overflow;
    let gibbs_ok = gibbs.as_ref().is_none_or(|g| g.verdict != Verdict::Fail);
    let verdict = if exact.overflow > OVERFLOW_BUDGET {
        Verdict::Inconclusive
    } else if tv < margin && gibbs_ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(Claim4aReport {
        params: *params,
        horizon,
        max_size,
        source,
        ensemble,
        tv,
        relevant_states,
        overflow: exact.overflow,
        series_error: exact.series_error,
        margin,
        empirical: empirical.into_iter().collect(),
        exact: exact_dist.into_iter().collect(),
        gibbs,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim5aReport {
    pub params: Parameters,
    pub r_prime: f64,
    pub horizon: f64,
    pub truncated: EnsembleStats,
    pub native: EnsembleStats,
    pub tv: f64,
    pub relevant_states: usize,
    pub margin: f64,
    pub gibbs_truncated: GibbsReport,
    pub verdict: Verdict,
}

/// Seed of the level-`r` ensemble when it must be independent of the
/// level-`r′` ensemble.
pub fn native_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

/// Runs the process at level `r′` and truncates to `r`; compares with the
/// process run natively at level `r`. The two ensembles use independent
/// seeds (`seed` and [`native_seed`]).
pub fn claim_5a_test(params: &Parameters, r_prime: f64, horizon: f64, replicas: usize, seed: u64) -> Result<Claim5aReport> {
    if !(r_prime >= params.r) {
        return Err(Error::InvalidInput(format!("r' = {r_prime} must be at least r = {}", params.r)));
    }
    let high = SimConfig::new(params.with_r(r_prime)?, horizon, seed);
    let (finals_high, truncated) = pdmp_ensemble(&high, replicas, |_| HeightState::empty(r_prime))?;
    let projected: Vec<HeightState> = finals_high.iter().map(|s| s.truncate(params.r)).collect::<Result<_>>()?;

    let low = SimConfig::new(*params, horizon, native_seed(seed));
    let (finals_low, native) = pdmp_ensemble(&low, replicas, |_| HeightState::empty(params.r))?;

    let ha = shape_histogram(&projected);
    let hb = shape_histogram(&finals_low);
    let tv = tv_unchecked(&ha, &hb);
    let relevant_states = ha.keys().chain(hb.keys()).collect::<std::collections::BTreeSet<_>>().into_iter()
        .filter(|k| ha.get(*k).copied().unwrap_or(0.0).max(hb.get(*k).copied().unwrap_or(0.0)) > MARGIN_MASS_CUTOFF)
        .count();
    // Both histograms are noisy: the variance doubles.
    let margin = multinomial_margin(2 * relevant_states, replicas);
    let gibbs_truncated = test_gibbsianness(&projected);
    let verdict = if tv < margin && gibbs_truncated.verdict != Verdict::Fail { Verdict::Pass } else { Verdict::Fail };
    Ok(Claim5aReport { params: *params, r_prime, horizon, truncated, native, tv, relevant_states, margin, gibbs_truncated, verdict })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Initial {
    Empty,
    /// Gibbs measure with the stationary shape law.
    Stationary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub params: Parameters,
    pub max_size: usize,
    pub burn_in: f64,
    pub horizon: f64,
    pub initial: Initial,
    pub pdmp: EnsembleStats,
    pub stationary_residual: f64,
    pub stationary_boundary_mass: f64,
    /// TV between the time-averaged occupation after burn-in and π.
    pub tv_occupation: f64,
    /// TV between the shape histograms at `burn_in` and at `horizon`.
    pub tv_two_time: f64,
    /// TV between the histogram at `burn_in` and π.
    pub tv_at_burn_in: f64,
    /// Same occupation comparison for the jump chain itself.
    pub tv_gillespie: f64,
    pub two_time_margin: f64,
    pub verdict: Verdict,
}

fn add_interval(occ: &mut ShapeDistribution, shape: &YoungDiagram, a: f64, b: f64, from: f64, to: f64) {
    let (lo, hi) = (a.max(from), b.min(to));
    if hi > lo {
        *occ.entry(shape.clone()).or_insert(0.0) += hi - lo;
    }
}

/// Compares long-run shape occupation of the particle process with the
/// numerical stationary law of the truncated jump chain, and calibrates the
/// comparison with the jump chain's own occupation measure.
pub fn stationarity_test(
    params: &Parameters,
    max_size: usize,
    burn_in: f64,
    horizon: f64,
    replicas: usize,
    seed: u64,
    initial: Initial,
) -> Result<StationarityReport> {
    if !(horizon > burn_in && burn_in >= 0.0) {
        return Err(Error::InvalidInput(format!("need 0 <= burn-in ({burn_in}) < horizon ({horizon})")));
    }
    let gen = build_generator(max_size, params)?;
    let st = stationary_distribution(&gen)?;
    let pi = gen.to_distribution(&st.probs);

    let cfg = SimConfig::new(*params, horizon, seed);
    let runs = run_replicas(seed, replicas, |_, rng| {
        let init = match initial {
            Initial::Empty => HeightState::empty(params.r)?,
            Initial::Stationary => sample_gibbs(&pi, params.r, rng)?,
        };
        let mut shape = init.shape();
        let mut since = 0.0;
        let mut at_burn = None;
        let mut occ = ShapeDistribution::new();
        let mut engine = Engine::new(&cfg, init, &mut *rng)?;
        engine.run_with(|ev, state| {
            let changes = ev.kind == EventKind::Absorb || ev.from >= params.r;
            if changes {
                if at_burn.is_none() && ev.t > burn_in {
                    at_burn = Some(shape.clone());
                }
                add_interval(&mut occ, &shape, since, ev.t, burn_in, horizon);
                shape = state.shape();
                since = ev.t;
            }
        })?;
        add_interval(&mut occ, &shape, since, horizon, burn_in, horizon);
        let at_burn = at_burn.unwrap_or_else(|| shape.clone());
        Ok((occ, at_burn, shape, engine.stats().clone()))
    })?;
    let mut occ_total = ShapeDistribution::new();
    let mut h_burn = ShapeDistribution::new();
    let mut h_end = ShapeDistribution::new();
    let mut stats = Vec::with_capacity(runs.len());
    for (occ, b, e, s) in runs {
        for (k, v) in occ {
            *occ_total.entry(k).or_insert(0.0) += v;
        }
        *h_burn.entry(b).or_insert(0.0) += 1.0;
        *h_end.entry(e).or_insert(0.0) += 1.0;
        stats.push(s);
    }
    let (occ_total, h_burn, h_end) = (normalize(&occ_total), normalize(&h_burn), normalize(&h_end));

    let gill = run_replicas(native_seed(seed), replicas, |_, rng| {
        let start = match initial {
            Initial::Empty => YoungDiagram::empty(),
            Initial::Stationary => sample_gibbs(&pi, params.r, rng)?.shape(),
        };
        let tr = gillespie_run(&start, params, horizon, DEFAULT_EVENT_CAP, rng)?;
        Ok(tr.occupation(burn_in, horizon))
    })?;
    let mut gill_total = ShapeDistribution::new();
    for occ in gill {
        for (k, v) in occ {
            *gill_total.entry(k).or_insert(0.0) += v;
        }
    }
    let gill_total = normalize(&gill_total);

    let tv_occupation = tv_unchecked(&occ_total, &pi);
    let tv_gillespie = tv_unchecked(&gill_total, &pi);
    let tv_two_time = tv_unchecked(&h_burn, &h_end);
    let tv_at_burn_in = tv_unchecked(&h_burn, &pi);
    let relevant = st.probs.iter().filter(|&&p| p > MARGIN_MASS_CUTOFF).count();
    let two_time_margin = multinomial_margin(2 * relevant, replicas);
    let verdict = if tv_two_time < two_time_margin && tv_occupation < 0.03 && tv_gillespie < 0.02 {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(StationarityReport {
        params: *params,
        max_size,
        burn_in,
        horizon,
        initial,
        pdmp: EnsembleStats::from_runs(seed, cfg.event_cap, &stats),
        stationary_residual: st.residual,
        stationary_boundary_mass: st.boundary_mass,
        tv_occupation,
        tv_two_time,
        tv_at_burn_in,
        tv_gillespie,
        two_time_margin,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleParticleReport {
    pub params: Parameters,
    pub mode: Mode,
    pub samples: usize,
    pub seed: u64,
    pub first_event_rate: f64,
    pub first_event_mean: f64,
    pub first_event_ks: TestResult,
    pub ratio_ks: TestResult,
    /// Replicas whose first event was not a jump.
    pub early_absorptions: usize,
    pub verdict: Verdict,
}

/// The model restricted to the cell `(1,1)`: a single particle. Checks the
/// law of the first event time from the empty state and the law of jump
/// destinations from a supported state.
pub fn single_particle_test(params: &Parameters, mode: Mode, samples: usize, seed: u64) -> Result<SingleParticleReport> {
    let mut cfg = SimConfig::new(*params, f64::INFINITY, seed);
    cfg.mode = mode;
    cfg.subdiagram = Some(YoungDiagram::one_row(1));
    let rate = match mode {
        Mode::Full => params.p * params.r,
        Mode::Plancherel => params.r,
    };
    let out = run_replicas(seed, samples, |_, rng| {
        let mut engine = Engine::new(&cfg, HeightState::empty(params.r)?, &mut *rng)?;
        let mut first: Option<(f64, bool)> = None;
        let mut ratio = None;
        while ratio.is_none() {
            match engine.step()? {
                Step::Event(ev) => {
                    if first.is_none() {
                        first = Some((ev.t, ev.kind == EventKind::Jump));
                    }
                    if ev.kind == EventKind::Jump && ev.from < params.r {
                        ratio = Some(ev.to / ev.from);
                    }
                }
                Step::Rejected => {}
                Step::Horizon => break,
            }
        }
        let (t, jump) = first.expect("an event occurs");
        Ok((t, jump, ratio.expect("a jump from a supported state occurs")))
    })?;
    let times: Vec<f64> = out.iter().map(|o| o.0).collect();
    let ratios: Vec<f64> = out.iter().map(|o| o.2).collect();
    let early_absorptions = out.iter().filter(|o| !o.1).count();
    let first_event_ks = ks_exponential(&times, rate);
    let ratio_ks = ks_uniform(&ratios);
    let verdict = if first_event_ks.p_value > KS_ALPHA && ratio_ks.p_value > KS_ALPHA && early_absorptions == 0 {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(SingleParticleReport {
        params: *params,
        mode,
        samples,
        seed,
        first_event_rate: rate,
        first_event_mean: times.iter().sum::<f64>() / times.len().max(1) as f64,
        first_event_ks,
        ratio_ks,
        early_absorptions,
        verdict,
    })
}
