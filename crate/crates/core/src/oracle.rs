//! Brute-force reference for tiny instances: backward recursion over
//! grid-discretized sets of feasible stored-energy levels.
//!
//! `E_T` is the whole energy box. A level `e` belongs to `E_{t-1}` when every
//! checked setpoint of period `t` can be served by a dispatch whose energy
//! delta `d` lands on some `g ∈ E_t`, i.e. `κ·e − d = g`. The set of deltas
//! reachable at a fixed setpoint is computed once per setpoint with the LP
//! solver. Two roundings bracket the discretization error: conservative
//! demands exact landing on a grid level, optimistic accepts a level within
//! one energy step.

use std::collections::HashMap;

use flexagg_lp::{self as lp, LinearProgram, LpStatus, Sense};

use crate::aggregation::FlexBand;
use crate::error::{Error, Result};
use crate::model::Case;
use crate::polyhedron::{add_period_block, build_period_polyhedron, DispatchBlock};

const MEMBER_TOL: f64 = 1e-9;
/// Support directions used for two-unit delta regions.
const DIRECTIONS: usize = 16;
/// Size limits of [`backward_soc_sets`].
pub const MAX_PERIODS: usize = 4;
pub const MAX_UNITS: usize = 2;
/// Limits of [`grid_band_search`].
pub const SEARCH_MAX_PERIODS: usize = 3;
pub const SEARCH_MAX_LEVELS: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    /// Setpoint spacing in MW.
    pub power_step: f64,
    /// Stored-energy spacing in MWh.
    pub soc_step: f64,
    /// Cap on the number of energy grid points.
    pub max_points: usize,
}

impl GridSpec {
    pub fn uniform(step: f64) -> Self {
        Self { power_step: step, soc_step: step, max_points: 1_000_000 }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("power_step", self.power_step), ("soc_step", self.soc_step)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Precondition(format!("grid {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rounding {
    /// Inner approximation: every accepted level is truly feasible.
    Conservative,
    /// Outer approximation: levels within one energy step are accepted.
    Optimistic,
}

/// Membership grids of the feasible stored-energy sets.
#[derive(Clone, Debug, PartialEq)]
pub struct SocSetApprox {
    pub rounding: Rounding,
    /// Grid levels, one vector of unit energies per point.
    pub points: Vec<Vec<f64>>,
    /// `member[t][k]`: whether `points[k]` lies in `E_t`, for `t = 0..=T`.
    pub member: Vec<Vec<bool>>,
}

impl SocSetApprox {
    pub fn count(&self, t: usize) -> usize {
        self.member[t].iter().filter(|m| **m).count()
    }

    /// Whether `E_t` of `self` is contained in `E_t` of `other`.
    pub fn subset_of(&self, other: &SocSetApprox, t: usize) -> bool {
        self.member[t].iter().zip(&other.member[t]).all(|(a, b)| !a || *b)
    }
}

/// Energy deltas reachable within one period at a fixed setpoint.
#[derive(Clone, Debug)]
enum DeltaRegion {
    Empty,
    /// No storage and a feasible dispatch.
    Point,
    Interval(f64, f64),
    /// Two units: support points (inner hull) and support values.
    Polygon { hull: Vec<[f64; 2]>, support: Vec<([f64; 2], f64)> },
}

impl DeltaRegion {
    fn contains(&self, d: &[f64], rounding: Rounding, slack: f64) -> bool {
        let pad = match rounding {
            Rounding::Conservative => MEMBER_TOL,
            Rounding::Optimistic => slack + MEMBER_TOL,
        };
        match self {
            DeltaRegion::Empty => false,
            DeltaRegion::Point => true,
            DeltaRegion::Interval(lo, hi) => d[0] >= lo - pad && d[0] <= hi + pad,
            DeltaRegion::Polygon { hull, support } => match rounding {
                Rounding::Conservative => in_hull(hull, [d[0], d[1]]),
                Rounding::Optimistic => {
                    support.iter().all(|(a, h)| a[0] * d[0] + a[1] * d[1] <= h + slack * (a[0].abs() + a[1].abs()) + MEMBER_TOL)
                }
            },
        }
    }
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counter-clockwise convex hull.
fn convex_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() <= MEMBER_TOL && (a[1] - b[1]).abs() <= MEMBER_TOL);
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= MEMBER_TOL {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn in_hull(hull: &[[f64; 2]], p: [f64; 2]) -> bool {
    match hull.len() {
        0 => false,
        1 => (p[0] - hull[0][0]).abs() <= MEMBER_TOL && (p[1] - hull[0][1]).abs() <= MEMBER_TOL,
        2 => {
            let (a, b) = (hull[0], hull[1]);
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            let along = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / (len * len);
            cross(a, b, p).abs() <= MEMBER_TOL * len.max(1.0) && (-MEMBER_TOL..=1.0 + MEMBER_TOL).contains(&along)
        }
        n => (0..n).all(|k| cross(hull[k], hull[(k + 1) % n], p) >= -MEMBER_TOL),
    }
}

/// One period's dispatch program with a movable setpoint.
struct PeriodProbe {
    lp: LinearProgram,
    block: DispatchBlock,
}

impl PeriodProbe {
    fn new(case: &Case, t: usize) -> Self {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let agg = lp.add_fixed(0.0);
        let block = add_period_block(&mut lp, case, t, agg, true);
        Self { lp, block }
    }

    /// Maximizes `Σ dir_i · delta_i` at setpoint `q`; returns the deltas.
    fn support(&mut self, case: &Case, q: f64, dir: &[f64]) -> Result<Option<Vec<f64>>> {
        self.lp.set_bounds(self.block.aggregate, q, q);
        self.lp.clear_objective();
        for (i, ess) in case.esses.iter().enumerate() {
            for (v, a) in self.block.delta(ess, i, case.tau).terms {
                self.lp.set_objective(v, self.lp.objective()[v.index()] + a * dir[i]);
            }
        }
        let out = lp::solve(&self.lp)?;
        match out.status {
            LpStatus::Optimal => {
                let d = case.esses.iter().enumerate().map(|(i, e)| e.split_delta(out.x[self.block.discharge[i].index()], out.x[self.block.charge[i].index()], case.tau));
                Ok(Some(d.collect()))
            }
            LpStatus::Infeasible => Ok(None),
            LpStatus::Unbounded => Err(Error::Invariant("storage energy delta unbounded".into())),
        }
    }

    fn region(&mut self, case: &Case, q: f64) -> Result<DeltaRegion> {
        match case.esses.len() {
            0 => Ok(if self.support(case, q, &[])?.is_some() { DeltaRegion::Point } else { DeltaRegion::Empty }),
            1 => {
                let Some(hi) = self.support(case, q, &[1.0])? else { return Ok(DeltaRegion::Empty) };
                let lo = self.support(case, q, &[-1.0])?.expect("feasibility does not depend on the objective");
                Ok(DeltaRegion::Interval(lo[0], hi[0]))
            }
            _ => {
                let mut pts = Vec::with_capacity(DIRECTIONS);
                let mut support = Vec::with_capacity(DIRECTIONS);
                for k in 0..DIRECTIONS {
                    let theta = 2.0 * std::f64::consts::PI * k as f64 / DIRECTIONS as f64;
                    let a = [theta.cos(), theta.sin()];
                    let Some(d) = self.support(case, q, &a)? else { return Ok(DeltaRegion::Empty) };
                    support.push((a, a[0] * d[0] + a[1] * d[1]));
                    pts.push([d[0], d[1]]);
                }
                Ok(DeltaRegion::Polygon { hull: convex_hull(pts), support })
            }
        }
    }
}

fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut k = 0usize;
    loop {
        let x = lo + k as f64 * step;
        if x > hi + 1e-12 * hi.abs().max(1.0) {
            break;
        }
        v.push(x.min(hi));
        k += 1;
    }
    if hi - v.last().copied().unwrap_or(lo) > 1e-12 * hi.abs().max(1.0) {
        v.push(hi);
    }
    v
}

fn energy_grid(case: &Case, grid: &GridSpec) -> Result<Vec<Vec<f64>>> {
    let axes: Vec<Vec<f64>> = case.esses.iter().map(|e| axis(e.e_min, e.e_max, grid.soc_step)).collect();
    let total = axes.iter().map(|a| a.len() as u128).product::<u128>();
    if total > grid.max_points as u128 {
        return Err(Error::GridTooLarge { points: total, limit: grid.max_points as u128 });
    }
    let mut points = vec![Vec::new()];
    for a in &axes {
        points = points.iter().flat_map(|p| a.iter().map(move |x| [p.clone(), vec![*x]].concat())).collect();
    }
    Ok(points)
}

/// Setpoints checked in `[lo, hi]`: the grid multiples inside plus both ends.
fn setpoints(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let mut v = vec![lo];
    let mut k = (lo / step).floor() as i64 + 1;
    while (k as f64) * step < hi - 1e-12 {
        let q = k as f64 * step;
        if q > lo + 1e-12 {
            v.push(q);
        }
        k += 1;
    }
    if hi > lo {
        v.push(hi);
    }
    v
}

/// Whether some member of `next` is reachable from `e` under `region`.
fn reaches(case: &Case, e: &[f64], region: &DeltaRegion, points: &[Vec<f64>], next: &[bool], rounding: Rounding, slack: f64) -> bool {
    let mut d = vec![0.0; e.len()];
    points.iter().zip(next).any(|(g, &m)| {
        if !m {
            return false;
        }
        for i in 0..e.len() {
            d[i] = case.esses[i].kappa * e[i] - g[i];
        }
        region.contains(&d, rounding, slack)
    })
}

fn check_limits(case: &Case, band: &FlexBand) -> Result<()> {
    case.validate()?;
    if case.esses.len() > MAX_UNITS || case.periods > MAX_PERIODS {
        return Err(Error::Precondition(format!(
            "grid recursion supports at most {MAX_UNITS} storage units and {MAX_PERIODS} periods, case has {} and {}",
            case.esses.len(),
            case.periods
        )));
    }
    band.validate()?;
    if band.periods() != case.periods {
        return Err(Error::Precondition(format!("band covers {} periods, case has {}", band.periods(), case.periods)));
    }
    Ok(())
}

fn regions(case: &Case, band: &FlexBand, step: f64) -> Result<Vec<Vec<DeltaRegion>>> {
    (0..case.periods)
        .map(|t| {
            let mut probe = PeriodProbe::new(case, t);
            setpoints(band.lower[t], band.upper[t], step).into_iter().map(|q| probe.region(case, q)).collect()
        })
        .collect()
}

fn recurse(case: &Case, regions: &[Vec<DeltaRegion>], points: &[Vec<f64>], rounding: Rounding, slack: f64) -> Vec<Vec<bool>> {
    let mut member = vec![vec![true; points.len()]; case.periods + 1];
    for t in (0..case.periods).rev() {
        let (head, tail) = member.split_at_mut(t + 1);
        let next = &tail[0];
        for (k, e) in points.iter().enumerate() {
            head[t][k] = regions[t].iter().all(|r| reaches(case, e, r, points, next, rounding, slack));
        }
    }
    member
}

/// Grid approximation of the feasible stored-energy sets for `band`.
pub fn backward_soc_sets(case: &Case, band: &FlexBand, grid: &GridSpec, rounding: Rounding) -> Result<SocSetApprox> {
    check_limits(case, band)?;
    grid.validate()?;
    let points = energy_grid(case, grid)?;
    let regions = regions(case, band, grid.power_step)?;
    let member = recurse(case, &regions, &points, rounding, grid.soc_step);
    Ok(SocSetApprox { rounding, points, member })
}

/// Whether the initial energy levels lie in the approximated `E_0`.
pub fn verify_band(case: &Case, band: &FlexBand, grid: &GridSpec, rounding: Rounding) -> Result<bool> {
    check_limits(case, band)?;
    grid.validate()?;
    let points = energy_grid(case, grid)?;
    let regions = regions(case, band, grid.power_step)?;
    let member = recurse(case, &regions, &points, rounding, grid.soc_step);
    let e0 = case.initial_soc();
    Ok(regions[0].iter().all(|r| reaches(case, &e0, r, &points, &member[1], rounding, grid.soc_step)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSearchResult {
    /// Best index over grid bands that pass the conservative check.
    pub value_conservative: f64,
    /// Best index over grid bands that pass the optimistic check.
    pub value_optimistic: f64,
    /// A band attaining `value_conservative`.
    pub band: FlexBand,
    /// Loss from restricting band endpoints to the setpoint grid.
    pub error_bound: f64,
}

/// Exhaustive search over bands with endpoints on the setpoint grid.
pub fn grid_band_search(case: &Case, grid: &GridSpec) -> Result<GridSearchResult> {
    case.validate()?;
    grid.validate()?;
    if case.periods > SEARCH_MAX_PERIODS || case.esses.len() > 1 {
        return Err(Error::Precondition(format!(
            "band search supports at most {SEARCH_MAX_PERIODS} periods and one storage unit, case has {} and {}",
            case.periods,
            case.esses.len()
        )));
    }
    let points = energy_grid(case, grid)?;
    if points.len() > SEARCH_MAX_LEVELS {
        return Err(Error::GridTooLarge { points: points.len() as u128, limit: SEARCH_MAX_LEVELS as u128 });
    }
    let h = grid.power_step;
    let mut qs = Vec::with_capacity(case.periods);
    let mut regs = Vec::with_capacity(case.periods);
    for t in 0..case.periods {
        let (lo, hi) = build_period_polyhedron(case, t + 1)?.project_aggregate()?;
        let first = (lo / h - 1e-9).ceil() as i64;
        let last = (hi / h + 1e-9).floor() as i64;
        if first > last {
            return Err(Error::Infeasible(format!("period {} admits no setpoint on the grid", t + 1)));
        }
        let q: Vec<f64> = (first..=last).map(|k| k as f64 * h).collect();
        let mut probe = PeriodProbe::new(case, t);
        regs.push(q.iter().map(|&x| probe.region(case, x)).collect::<Result<Vec<_>>>()?);
        qs.push(q);
    }
    let mut values = [0.0; 2];
    let mut best_band = None;
    for (r, rounding) in [Rounding::Conservative, Rounding::Optimistic].into_iter().enumerate() {
        let (v, band) = search(case, &qs, &regs, &points, rounding, grid.soc_step)?;
        values[r] = v;
        if r == 0 {
            best_band = Some(band);
        }
    }
    let w_max = case.weights.iter().copied().fold(0.0, f64::max);
    Ok(GridSearchResult {
        value_conservative: values[0],
        value_optimistic: values[1],
        band: best_band.expect("conservative pass ran"),
        error_bound: 2.0 * w_max * h * case.periods as f64,
    })
}

type Choices = Vec<(usize, usize)>;

fn search(
    case: &Case,
    qs: &[Vec<f64>],
    regs: &[Vec<DeltaRegion>],
    points: &[Vec<f64>],
    rounding: Rounding,
    slack: f64,
) -> Result<(f64, FlexBand)> {
    let full: u64 = if points.len() == 64 { u64::MAX } else { (1u64 << points.len()) - 1 };
    let to_bools = |m: u64| (0..points.len()).map(|k| m >> k & 1 == 1).collect::<Vec<bool>>();
    // Future value per reachable energy set, with the band choices behind it.
    let mut states: HashMap<u64, (f64, Choices)> = HashMap::from([(full, (0.0, Vec::new()))]);
    for t in (1..case.periods).rev() {
        let mut next_states: HashMap<u64, (f64, Choices)> = HashMap::new();
        for (mask, (value, choices)) in &states {
            let next = to_bools(*mask);
            let admit: Vec<u64> = regs[t]
                .iter()
                .map(|r| {
                    points.iter().enumerate().filter(|(_, e)| reaches(case, e, r, points, &next, rounding, slack)).fold(0u64, |m, (k, _)| m | 1 << k)
                })
                .collect();
            for l in 0..admit.len() {
                let mut run = full;
                for u in l..admit.len() {
                    run &= admit[u];
                    if run == 0 {
                        break;
                    }
                    let v = value + case.weights[t] * (qs[t][u] - qs[t][l]);
                    let better = next_states.get(&run).is_none_or(|(b, _)| v > *b);
                    if better {
                        let mut c = choices.clone();
                        c.push((l, u));
                        next_states.insert(run, (v, c));
                    }
                }
            }
        }
        states = next_states;
    }
    let e0 = case.initial_soc();
    let mut best: Option<(f64, Choices)> = None;
    let mut keys: Vec<&u64> = states.keys().collect();
    keys.sort();
    for mask in keys {
        let (value, choices) = &states[mask];
        let next = to_bools(*mask);
        let admit: Vec<bool> = regs[0].iter().map(|r| reaches(case, &e0, r, points, &next, rounding, slack)).collect();
        for l in 0..admit.len() {
            for u in l..admit.len() {
                if !admit[u] {
                    break;
                }
                let v = value + case.weights[0] * (qs[0][u] - qs[0][l]);
                if best.as_ref().is_none_or(|(b, _)| v > *b) {
                    let mut c = choices.clone();
                    c.push((l, u));
                    best = Some((v, c));
                }
            }
        }
    }
    let Some((value, mut choices)) = best else {
        return Err(Error::Infeasible("no grid band is feasible from the initial energy levels".into()));
    };
    choices.reverse();
    let lower = choices.iter().enumerate().map(|(t, (l, _))| qs[t][*l]).collect();
    let upper = choices.iter().enumerate().map(|(t, (_, u))| qs[t][*u]).collect();
    Ok((value, FlexBand::new(lower, upper)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;

    #[test]
    fn hull_membership() {
        let hull = convex_hull(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]]);
        assert_eq!(hull.len(), 4);
        assert!(in_hull(&hull, [0.5, 0.5]));
        assert!(in_hull(&hull, [1.0, 0.5]));
        assert!(!in_hull(&hull, [1.1, 0.5]));
        let seg = convex_hull(vec![[0.0, 0.0], [1.0, 1.0], [0.5, 0.5]]);
        assert!(in_hull(&seg, [0.25, 0.25]));
        assert!(!in_hull(&seg, [0.25, 0.3]));
    }

    #[test]
    fn setpoints_include_ends() {
        assert_eq!(setpoints(0.0, 0.0, 0.5), vec![0.0]);
        let s = setpoints(-0.3, 1.1, 0.5);
        assert_eq!(s, vec![-0.3, 0.0, 0.5, 1.0, 1.1]);
    }

    #[test]
    fn zero_width_band_without_storage_is_a_point_set() {
        let case = cases::no_storage(2);
        let band = FlexBand::new(vec![-0.5, -0.5], vec![-0.5, -0.5]).unwrap();
        let sets = backward_soc_sets(&case, &band, &GridSpec::uniform(0.1), Rounding::Conservative).unwrap();
        assert_eq!(sets.points, vec![Vec::<f64>::new()]);
        assert!(sets.member.iter().all(|m| m == &vec![true]));
        assert!(verify_band(&case, &band, &GridSpec::uniform(0.1), Rounding::Conservative).unwrap());
    }

    #[test]
    fn grid_size_is_capped() {
        let case = cases::example3();
        let band = FlexBand::new(vec![0.0; 3], vec![0.0; 3]).unwrap();
        let grid = GridSpec { max_points: 5, ..GridSpec::uniform(0.05) };
        assert!(matches!(backward_soc_sets(&case, &band, &grid, Rounding::Conservative), Err(Error::GridTooLarge { .. })));
    }

    #[test]
    fn two_unit_regions_bracket() {
        let mut case = cases::example3();
        case.esses.push(case.esses[0].clone());
        case.costs.esses.push(1.0);
        let band = FlexBand::new(vec![0.0, -1.0, 0.0], vec![0.5, 0.0, 0.5]).unwrap();
        let grid = GridSpec::uniform(0.25);
        let inner = backward_soc_sets(&case, &band, &grid, Rounding::Conservative).unwrap();
        let outer = backward_soc_sets(&case, &band, &grid, Rounding::Optimistic).unwrap();
        for t in 0..=3 {
            assert!(inner.subset_of(&outer, t));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn sub_bands_keep_sets_and_roundings_nest(cuts in proptest::collection::vec((0u32..=4, 0u32..=4), 3)) {
                let case = cases::example3();
                let grid = GridSpec::uniform(0.25);
                let outer = FlexBand::new(vec![0.0, -2.0, -1.0], vec![1.0, 0.0, 1.0]).unwrap();
                let lower: Vec<f64> = cuts.iter().zip(&outer.lower).map(|((a, _), l)| l + 0.125 * *a as f64).collect();
                let upper: Vec<f64> = cuts.iter().zip(&outer.upper).zip(&lower).map(|(((_, b), u), l)| (u - 0.125 * *b as f64).max(*l)).collect();
                let inner = FlexBand::new(lower, upper).unwrap();
                for rounding in [Rounding::Conservative, Rounding::Optimistic] {
                    let big = backward_soc_sets(&case, &outer, &grid, rounding).unwrap();
                    let small = backward_soc_sets(&case, &inner, &grid, rounding).unwrap();
                    for t in 0..=3 {
                        prop_assert!(big.subset_of(&small, t));
                    }
                }
                let c = backward_soc_sets(&case, &inner, &grid, Rounding::Conservative).unwrap();
                let o = backward_soc_sets(&case, &inner, &grid, Rounding::Optimistic).unwrap();
                for t in 0..=3 {
                    prop_assert!(c.subset_of(&o, t));
                }
            }
        }
    }
}
