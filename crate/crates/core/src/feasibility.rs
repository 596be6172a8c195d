//! Allocations, the feasibility predicate, and exhaustive enumeration.
//!
//! An allocation assigns one on-grid bundle to every entity in roster
//! order. Aggregate balance is read against the finite set of achievable
//! net supplies `omega - y` for `y` in the declared production set, either
//! exactly or with free disposal.
//!
//! Enumeration is streaming and lexicographic: entities in roster order,
//! each grid in canonical order, so the first allocation a scan reports is
//! deterministic. Branches whose componentwise bounds already rule out
//! every net supply are pruned, and under exact balance the final entity's
//! bundle is forced rather than scanned. A preflight product cap keeps
//! runaway state spaces from being walked at all.

use std::ops::ControlFlow;

use serde::Serialize;

use crate::economy::{Bundle, Economy, FeasibilityMode};
use crate::{Error, Result, TOL};

/// One bundle per entity, aligned with the economy's roster order.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Allocation(pub Vec<Bundle>);

impl Allocation {
    pub fn total(&self) -> Bundle {
        let dim = self.0.first().map_or(0, Bundle::dim);
        let mut acc = vec![0.0; dim];
        for b in &self.0 {
            for (k, v) in b.0.iter().enumerate() {
                acc[k] += v;
            }
        }
        Bundle(acc)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Whether `total` balances against some achievable net supply under the
/// economy's feasibility mode.
pub fn aggregate_ok(e: &Economy, total: &Bundle) -> bool {
    e.feasibility.net_supplies().iter().any(|t| match e.feasibility.mode {
        FeasibilityMode::ExactBalance => total.approx_eq(t, TOL),
        FeasibilityMode::FreeDisposal => total
            .0
            .iter()
            .zip(&t.0)
            .all(|(have, cap)| *have <= cap + TOL),
    })
}

/// Full feasibility predicate: right arity, every bundle on its entity's
/// grid, and aggregate balance. Structural mismatches (wrong bundle count
/// or dimension) are errors; a merely infeasible allocation is `Ok(false)`.
pub fn is_feasible(e: &Economy, alloc: &Allocation) -> Result<bool> {
    if alloc.0.len() != e.entities.len() {
        return Err(Error::Arity {
            context: "allocation".into(),
            expected: e.entities.len(),
            found: alloc.0.len(),
        });
    }
    let dim = e.dim();
    for (b, ent) in alloc.0.iter().zip(&e.entities) {
        if b.dim() != dim {
            return Err(Error::Arity {
                context: format!("bundle for {}", ent.id),
                expected: dim,
                found: b.dim(),
            });
        }
    }
    for (i, b) in alloc.0.iter().enumerate() {
        if !e.grids[i].contains(b) {
            return Ok(false);
        }
    }
    Ok(aggregate_ok(e, &alloc.total()))
}

struct Enumerator<'a, F> {
    points: Vec<Vec<Bundle>>,
    targets: Vec<Bundle>,
    mode: FeasibilityMode,
    dim: usize,
    suffix_min: Vec<Vec<f64>>,
    suffix_max: Vec<Vec<f64>>,
    chosen: Vec<Bundle>,
    partial: Vec<f64>,
    visit: &'a mut F,
}

impl<F> Enumerator<'_, F>
where
    F: FnMut(&[Bundle]) -> ControlFlow<()>,
{
    /// Can any target still be met from this branch, given the chosen
    /// prefix and the componentwise bounds over the remaining entities?
    fn viable(&self, depth: usize) -> bool {
        self.targets.iter().any(|t| {
            (0..self.dim).all(|k| {
                let lo = self.partial[k] + self.suffix_min[depth][k];
                match self.mode {
                    FeasibilityMode::ExactBalance => {
                        let hi = self.partial[k] + self.suffix_max[depth][k];
                        lo <= t.0[k] + TOL && t.0[k] <= hi + TOL
                    }
                    FeasibilityMode::FreeDisposal => lo <= t.0[k] + TOL,
                }
            })
        })
    }

    fn push(&mut self, b: Bundle) {
        for (k, v) in b.0.iter().enumerate() {
            self.partial[k] += v;
        }
        self.chosen.push(b);
    }

    fn pop(&mut self) {
        let b = self.chosen.pop().expect("pop on empty prefix");
        for (k, v) in b.0.iter().enumerate() {
            self.partial[k] -= v;
        }
    }

    fn walk(&mut self, depth: usize) -> ControlFlow<()> {
        if !self.viable(depth) {
            return ControlFlow::Continue(());
        }
        if depth == self.points.len() {
            return (self.visit)(&self.chosen);
        }
        if depth + 1 == self.points.len() && self.mode == FeasibilityMode::ExactBalance {
            // Only bundles completing some target exactly can work; look
            // them up instead of scanning the grid.
            let mut forced: Vec<usize> = Vec::new();
            for t in &self.targets {
                let need = Bundle(
                    (0..self.dim).map(|k| t.0[k] - self.partial[k]).collect(),
                );
                if let Some(i) = find_point(&self.points[depth], &need) {
                    if !forced.contains(&i) {
                        forced.push(i);
                    }
                }
            }
            forced.sort_unstable();
            for i in forced {
                let b = self.points[depth][i].clone();
                self.push(b);
                self.walk(depth + 1)?;
                self.pop();
            }
            return ControlFlow::Continue(());
        }
        for i in 0..self.points[depth].len() {
            let b = self.points[depth][i].clone();
            self.push(b);
            self.walk(depth + 1)?;
            self.pop();
        }
        ControlFlow::Continue(())
    }
}

fn find_point(points: &[Bundle], b: &Bundle) -> Option<usize> {
    points
        .binary_search_by(|p| {
            if p.approx_eq(b, TOL) {
                std::cmp::Ordering::Equal
            } else {
                p.lex_cmp(b)
            }
        })
        .ok()
}

/// Stream every feasible allocation, in lexicographic order, to `visit`.
/// The visitor may stop the scan early with `ControlFlow::Break`.
///
/// Fails with a resource error before walking anything if the product of
/// grid sizes exceeds `cap`.
pub fn for_each_feasible<F>(e: &Economy, cap: u64, mut visit: F) -> Result<()>
where
    F: FnMut(&[Bundle]) -> ControlFlow<()>,
{
    let product: u128 = e.grids.iter().map(|g| g.len() as u128).product();
    if product > u128::from(cap) {
        return Err(Error::CapExceeded { product, cap });
    }
    let n = e.entities.len();
    let dim = e.dim();
    let points: Vec<Vec<Bundle>> = e.grids.iter().map(|g| g.iter().collect()).collect();
    let mut suffix_min = vec![vec![0.0; dim]; n + 1];
    let mut suffix_max = vec![vec![0.0; dim]; n + 1];
    for i in (0..n).rev() {
        for k in 0..dim {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for b in &points[i] {
                lo = lo.min(b.0[k]);
                hi = hi.max(b.0[k]);
            }
            suffix_min[i][k] = suffix_min[i + 1][k] + lo;
            suffix_max[i][k] = suffix_max[i + 1][k] + hi;
        }
    }
    let mut en = Enumerator {
        points,
        targets: e.feasibility.net_supplies(),
        mode: e.feasibility.mode,
        dim,
        suffix_min,
        suffix_max,
        chosen: Vec::with_capacity(n),
        partial: vec![0.0; dim],
        visit: &mut visit,
    };
    let _ = en.walk(0);
    Ok(())
}

/// Collect every feasible allocation, in lexicographic order.
pub fn feasible_allocations(e: &Economy, cap: u64) -> Result<Vec<Allocation>> {
    let mut out = Vec::new();
    for_each_feasible(e, cap, |bundles| {
        out.push(Allocation(bundles.to_vec()));
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

/// Outcome of the aggregate support check at a price vector.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupportCheck {
    /// Value of the aggregate allocation at the prices.
    pub value: f64,
    /// Best achievable net-supply value at the prices.
    pub best: f64,
    /// Lexicographically first net supply attaining `best`.
    pub best_supply: Bundle,
    pub holds: bool,
}

/// Check that the aggregate allocation extracts the maximal net-supply
/// value at `prices`. Under free disposal, support additionally requires
/// nonnegative prices, and a negative coordinate is a domain error.
pub fn aggregate_support_check(
    e: &Economy,
    prices: &[f64],
    alloc: &Allocation,
) -> Result<SupportCheck> {
    let dim = e.dim();
    if prices.len() != dim {
        return Err(Error::Arity {
            context: "price vector".into(),
            expected: dim,
            found: prices.len(),
        });
    }
    if e.feasibility.mode == FeasibilityMode::FreeDisposal {
        for (k, p) in prices.iter().enumerate() {
            if *p < -TOL {
                return Err(Error::NegativePrice {
                    coord: k,
                    value: *p,
                });
            }
        }
    }
    let total = alloc.total();
    if total.dim() != dim {
        return Err(Error::Arity {
            context: "allocation total".into(),
            expected: dim,
            found: total.dim(),
        });
    }
    let value = total.dot(prices);
    let supplies = e.feasibility.net_supplies();
    let mut best = f64::NEG_INFINITY;
    let mut best_supply = Bundle::zeros(dim);
    for t in &supplies {
        let v = t.dot(prices);
        if v > best + TOL {
            best = v;
            best_supply = t.clone();
        }
    }
    Ok(SupportCheck {
        value,
        best,
        best_supply,
        holds: (value - best).abs() <= TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economy::{
        Economy, Entity, FeasibilitySpec, Grid, InstitutionalState, Status, StatusAssignment,
    };
    use crate::welfare::WelfareFunction;
    use std::collections::BTreeMap;

    fn line_economy(sides: &[usize], omega: f64, mode: FeasibilityMode) -> Economy {
        let entities: Vec<Entity> = (0..sides.len())
            .map(|i| {
                if i == 0 {
                    Entity::human(format!("e{i}"))
                } else {
                    Entity::artificial(format!("e{i}"))
                }
            })
            .collect();
        let sigma = StatusAssignment::from_pairs(
            (0..sides.len()).map(|i| (format!("e{i}"), Status::Agent)),
        );
        let grids: Vec<Grid> = sides.iter().map(|s| Grid::cube(1, *s)).collect();
        let welfare: BTreeMap<_, _> = entities
            .iter()
            .map(|ent| (ent.id.clone(), WelfareFunction::linear(vec![1.0])))
            .collect();
        Economy {
            lx: 1,
            lr: 0,
            rights_class: vec![vec![]; sides.len()],
            states: vec![InstitutionalState::bare("s0")],
            welfare,
            delegates: vec![],
            channels: vec![],
            feasibility: FeasibilitySpec {
                omega: vec![omega],
                production: vec![Bundle::zeros(1)],
                mode,
            },
            attributes: vec![],
            entities,
            sigma,
            grids,
        }
    }

    #[test]
    fn exact_balance_enumerates_all_splits() {
        let e = line_economy(&[3, 3], 2.0, FeasibilityMode::ExactBalance);
        let allocs = feasible_allocations(&e, 1_000).unwrap();
        let sums: Vec<(f64, f64)> = allocs
            .iter()
            .map(|a| (a.0[0].0[0], a.0[1].0[0]))
            .collect();
        assert_eq!(sums, vec![(0.0, 2.0), (1.0, 1.0), (2.0, 0.0)]);
    }

    #[test]
    fn free_disposal_admits_slack() {
        let e = line_economy(&[3, 3], 2.0, FeasibilityMode::FreeDisposal);
        let allocs = feasible_allocations(&e, 1_000).unwrap();
        assert_eq!(allocs.len(), 6);
        for a in &allocs {
            assert!(a.total().0[0] <= 2.0 + TOL);
        }
        let first: Vec<f64> = allocs.iter().map(|a| a.0[0].0[0]).collect();
        let mut sorted = first.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(first, sorted, "enumeration must be lexicographic");
    }

    #[test]
    fn production_extends_the_target_set() {
        let mut e = line_economy(&[4, 4], 2.0, FeasibilityMode::ExactBalance);
        e.feasibility.production = vec![Bundle::zeros(1), Bundle::new(vec![-2.0])];
        let allocs = feasible_allocations(&e, 1_000).unwrap();
        let sums: Vec<f64> = allocs.iter().map(|a| a.total().0[0]).collect();
        assert!(sums.iter().all(|s| (*s - 2.0).abs() < TOL || (*s - 4.0).abs() < TOL));
        assert_eq!(sums.iter().filter(|s| (**s - 2.0).abs() < TOL).count(), 3);
        // Splits of 4 over two copies of {0,1,2,3}: (1,3), (2,2), (3,1).
        assert_eq!(sums.iter().filter(|s| (**s - 4.0).abs() < TOL).count(), 3);
    }

    #[test]
    fn enumeration_matches_naive_scan() {
        for mode in [FeasibilityMode::ExactBalance, FeasibilityMode::FreeDisposal] {
            let e = line_economy(&[3, 4, 2], 3.0, mode);
            let fast = feasible_allocations(&e, 1_000).unwrap();
            let mut naive = Vec::new();
            for a in e.grids[0].iter() {
                for b in e.grids[1].iter() {
                    for c in e.grids[2].iter() {
                        let alloc = Allocation(vec![a.clone(), b.clone(), c.clone()]);
                        if is_feasible(&e, &alloc).unwrap() {
                            naive.push(alloc);
                        }
                    }
                }
            }
            assert_eq!(fast, naive, "mode {mode:?}");
        }
    }

    #[test]
    fn cap_is_enforced_before_walking() {
        let e = line_economy(&[3, 3], 2.0, FeasibilityMode::ExactBalance);
        let err = feasible_allocations(&e, 8).unwrap_err();
        assert_eq!(
            err,
            Error::CapExceeded {
                product: 9,
                cap: 8
            }
        );
        assert!(feasible_allocations(&e, 9).is_ok());
    }

    #[test]
    fn early_break_stops_the_scan() {
        let e = line_economy(&[3, 3], 2.0, FeasibilityMode::ExactBalance);
        let mut seen = 0;
        for_each_feasible(&e, 1_000, |_| {
            seen += 1;
            ControlFlow::Break(())
        })
        .unwrap();
        assert_eq!(seen, 1);
    }

    #[test]
    fn is_feasible_rejects_off_grid_and_imbalance() {
        let e = line_economy(&[3, 3], 2.0, FeasibilityMode::ExactBalance);
        let off = Allocation(vec![Bundle::new(vec![0.5]), Bundle::new(vec![1.5])]);
        assert!(!is_feasible(&e, &off).unwrap());
        let imbalanced = Allocation(vec![Bundle::new(vec![2.0]), Bundle::new(vec![2.0])]);
        assert!(!is_feasible(&e, &imbalanced).unwrap());
        let short = Allocation(vec![Bundle::new(vec![2.0])]);
        assert!(is_feasible(&e, &short).is_err());
    }

    #[test]
    fn support_holds_at_market_clearing_total() {
        let e = line_economy(&[3, 3], 2.0, FeasibilityMode::ExactBalance);
        let alloc = Allocation(vec![Bundle::new(vec![1.0]), Bundle::new(vec![1.0])]);
        let check = aggregate_support_check(&e, &[1.0], &alloc).unwrap();
        assert!(check.holds);
        assert_eq!(check.value, 2.0);
        assert_eq!(check.best, 2.0);
    }

    #[test]
    fn support_fails_for_wasteful_production_choice() {
        let mut e = line_economy(&[3, 3], 2.0, FeasibilityMode::ExactBalance);
        e.feasibility.production = vec![Bundle::zeros(1), Bundle::new(vec![1.0])];
        let alloc = Allocation(vec![Bundle::new(vec![0.0]), Bundle::new(vec![1.0])]);
        let check = aggregate_support_check(&e, &[1.0], &alloc).unwrap();
        assert!(!check.holds);
        assert_eq!(check.best, 2.0);
        assert_eq!(check.value, 1.0);
    }

    #[test]
    fn free_disposal_support_requires_nonnegative_prices() {
        let e = line_economy(&[3, 3], 2.0, FeasibilityMode::FreeDisposal);
        let alloc = Allocation(vec![Bundle::new(vec![1.0]), Bundle::new(vec![1.0])]);
        let err = aggregate_support_check(&e, &[-1.0], &alloc).unwrap_err();
        assert!(matches!(err, Error::NegativePrice { coord: 0, .. }));
    }
}
