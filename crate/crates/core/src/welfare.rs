//! Welfare functions over bundles and institutional states.
//!
//! Three families are supported: linear (`w . z`), log-linear
//! (`sum_k alpha_k ln(z_k + shift)`), and tabulated (explicit values on an
//! explicit point set, with optional per-state tables). Every family may add
//! a per-state offset, so institutional facts can shift welfare without
//! touching the bundle part.
//!
//! Evaluation is total over the declared domain and loud outside it: a
//! log-linear form off its domain or a tabulated form off its table is an
//! error, never a silent default.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::economy::{Bundle, Grid, StateId};
use crate::TOL;

/// Why a welfare evaluation failed.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("bundle dimension {found} does not match weight dimension {expected}")]
    Arity { expected: usize, found: usize },
    #[error(
        "log-linear welfare undefined at coordinate {coord}: {value} + shift {shift} is not positive"
    )]
    LogDomain { coord: usize, value: f64, shift: f64 },
    #[error("no tabulated value for bundle {bundle} at state {state}")]
    NotTabulated { bundle: Bundle, state: StateId },
}

/// Explicit value table over a finite point set, kept in lexicographic
/// order for binary-search lookup.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Table {
    pub entries: Vec<(Bundle, f64)>,
}

impl Table {
    pub fn new(entries: Vec<(Bundle, f64)>) -> Self {
        let mut entries = entries;
        entries.sort_by(|a, b| a.0.lex_cmp(&b.0));
        entries.dedup_by(|a, b| a.0.approx_eq(&b.0, TOL));
        Table { entries }
    }

    pub fn get(&self, b: &Bundle) -> Option<f64> {
        self.entries
            .binary_search_by(|(p, _)| {
                if p.approx_eq(b, TOL) {
                    std::cmp::Ordering::Equal
                } else {
                    p.lex_cmp(b)
                }
            })
            .ok()
            .map(|i| self.entries[i].1)
    }

    pub fn dim(&self) -> Option<usize> {
        self.entries.first().map(|(b, _)| b.dim())
    }
}

/// The bundle-dependent part of a welfare function.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum WelfareForm {
    Linear {
        weights: Vec<f64>,
    },
    LogLinear {
        alphas: Vec<f64>,
        shift: f64,
    },
    Tabulated {
        default: Table,
        by_state: BTreeMap<StateId, Table>,
    },
}

impl WelfareForm {
    pub fn name(&self) -> &'static str {
        match self {
            WelfareForm::Linear { .. } => "linear",
            WelfareForm::LogLinear { .. } => "log-linear",
            WelfareForm::Tabulated { .. } => "tabulated",
        }
    }
}

impl fmt::Display for WelfareForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A complete welfare function: form, per-state additive offsets, and an
/// optional declaration of strict monotonicity that validation checks
/// against the weights.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WelfareFunction {
    pub form: WelfareForm,
    /// Additive offset per state; an absent state contributes zero.
    pub state_offsets: BTreeMap<StateId, f64>,
    pub declared_monotone: bool,
}

impl WelfareFunction {
    pub fn linear(weights: Vec<f64>) -> Self {
        WelfareFunction {
            form: WelfareForm::Linear { weights },
            state_offsets: BTreeMap::new(),
            declared_monotone: false,
        }
    }

    /// Linear form declared strictly monotone; validation requires all
    /// weights strictly positive.
    pub fn linear_monotone(weights: Vec<f64>) -> Self {
        WelfareFunction {
            declared_monotone: true,
            ..WelfareFunction::linear(weights)
        }
    }

    pub fn log_linear(alphas: Vec<f64>, shift: f64) -> Self {
        WelfareFunction {
            form: WelfareForm::LogLinear { alphas, shift },
            state_offsets: BTreeMap::new(),
            declared_monotone: false,
        }
    }

    pub fn tabulated(entries: Vec<(Bundle, f64)>) -> Self {
        WelfareFunction {
            form: WelfareForm::Tabulated {
                default: Table::new(entries),
                by_state: BTreeMap::new(),
            },
            state_offsets: BTreeMap::new(),
            declared_monotone: false,
        }
    }

    /// Add a per-state additive offset.
    pub fn with_offset(mut self, state: impl Into<String>, delta: f64) -> Self {
        self.state_offsets.insert(StateId::new(state), delta);
        self
    }

    /// For a tabulated form, install a state-specific table.
    pub fn with_state_table(mut self, state: impl Into<String>, entries: Vec<(Bundle, f64)>) -> Self {
        if let WelfareForm::Tabulated { by_state, .. } = &mut self.form {
            by_state.insert(StateId::new(state), Table::new(entries));
        }
        self
    }

    /// The weight vector of a linear form, `None` for the other forms.
    pub fn linear_weights(&self) -> Option<Vec<f64>> {
        match &self.form {
            WelfareForm::Linear { weights } => Some(weights.clone()),
            _ => None,
        }
    }

    /// Fixed input dimension, when the form pins one.
    pub fn arity(&self) -> Option<usize> {
        match &self.form {
            WelfareForm::Linear { weights } => Some(weights.len()),
            WelfareForm::LogLinear { alphas, .. } => Some(alphas.len()),
            WelfareForm::Tabulated { default, by_state } => default
                .dim()
                .or_else(|| by_state.values().find_map(Table::dim)),
        }
    }

    /// True when every coordinate weight is strictly positive; vacuously
    /// true for tabulated forms, which carry no weights.
    pub fn weights_strictly_positive(&self) -> bool {
        match &self.form {
            WelfareForm::Linear { weights } => weights.iter().all(|w| *w > 0.0),
            WelfareForm::LogLinear { alphas, .. } => alphas.iter().all(|a| *a > 0.0),
            WelfareForm::Tabulated { .. } => true,
        }
    }

    pub fn eval(&self, b: &Bundle, state: &StateId) -> Result<f64, EvalError> {
        let offset = self.state_offsets.get(state).copied().unwrap_or(0.0);
        let base = match &self.form {
            WelfareForm::Linear { weights } => {
                if weights.len() != b.dim() {
                    return Err(EvalError::Arity {
                        expected: weights.len(),
                        found: b.dim(),
                    });
                }
                b.dot(weights)
            }
            WelfareForm::LogLinear { alphas, shift } => {
                if alphas.len() != b.dim() {
                    return Err(EvalError::Arity {
                        expected: alphas.len(),
                        found: b.dim(),
                    });
                }
                let mut acc = 0.0;
                for (k, (alpha, z)) in alphas.iter().zip(&b.0).enumerate() {
                    let arg = z + shift;
                    if arg <= 0.0 {
                        return Err(EvalError::LogDomain {
                            coord: k,
                            value: *z,
                            shift: *shift,
                        });
                    }
                    acc += alpha * arg.ln();
                }
                acc
            }
            WelfareForm::Tabulated { default, by_state } => {
                let from_state = by_state.get(state).and_then(|t| t.get(b));
                match from_state.or_else(|| default.get(b)) {
                    Some(v) => v,
                    None => {
                        return Err(EvalError::NotTabulated {
                            bundle: b.clone(),
                            state: state.clone(),
                        })
                    }
                }
            }
        };
        Ok(base + offset)
    }
}

/// Index and value of the welfare maximum over `points`, breaking ties in
/// favor of the earliest point. With points in canonical lexicographic
/// order this makes the witness deterministic.
pub fn argmax_on(
    points: &[Bundle],
    w: &WelfareFunction,
    state: &StateId,
) -> Result<(usize, f64), EvalError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in points.iter().enumerate() {
        let v = w.eval(p, state)?;
        match best {
            None => best = Some((i, v)),
            Some((_, bv)) if v > bv + TOL => best = Some((i, v)),
            Some(_) => {}
        }
    }
    best.ok_or(EvalError::Arity {
        expected: 0,
        found: 0,
    })
}

/// Welfare maximum over a grid in canonical order.
pub fn argmax_on_grid(
    grid: &Grid,
    w: &WelfareFunction,
    state: &StateId,
) -> Result<(Bundle, f64), EvalError> {
    let points: Vec<Bundle> = grid.iter().collect();
    let (i, v) = argmax_on(&points, w, state)?;
    Ok((points[i].clone(), v))
}

/// Smallest Lipschitz constant of `w` on the grid at `state`, in the
/// Euclidean metric. Linear forms use the weight norm directly; other forms
/// take the exact pairwise maximum of slope over distinct grid points.
pub fn lipschitz_bound(w: &WelfareFunction, grid: &Grid, state: &StateId) -> Result<f64, EvalError> {
    if grid.len() < 2 {
        return Ok(0.0);
    }
    if let WelfareForm::Linear { weights } = &w.form {
        return Ok(weights.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    let points: Vec<Bundle> = grid.iter().collect();
    let values: Vec<f64> = points
        .iter()
        .map(|p| w.eval(p, state))
        .collect::<Result<_, _>>()?;
    let mut bound = 0.0f64;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d = points[i].distance(&points[j]);
            if d > TOL {
                bound = bound.max((values[i] - values[j]).abs() / d);
            }
        }
    }
    Ok(bound)
}

/// Whether `w` actually depends on coordinate `k` over the grid at
/// `state`. Linear and log-linear forms answer from their weights;
/// tabulated forms compare grid pairs that differ only at `k`.
pub fn depends_on_coordinate(
    w: &WelfareFunction,
    grid: &Grid,
    state: &StateId,
    k: usize,
) -> Result<bool, EvalError> {
    match &w.form {
        WelfareForm::Linear { weights } => Ok(weights.get(k).map_or(false, |v| v.abs() > TOL)),
        WelfareForm::LogLinear { alphas, .. } => {
            Ok(alphas.get(k).map_or(false, |a| a.abs() > TOL))
        }
        WelfareForm::Tabulated { .. } => {
            let points: Vec<Bundle> = grid.iter().collect();
            for i in 0..points.len() {
                for j in (i + 1)..points.len() {
                    let same_elsewhere = points[i]
                        .0
                        .iter()
                        .zip(&points[j].0)
                        .enumerate()
                        .all(|(c, (a, b))| c == k || (a - b).abs() <= TOL);
                    if !same_elsewhere {
                        continue;
                    }
                    let vi = w.eval(&points[i], state)?;
                    let vj = w.eval(&points[j], state)?;
                    if (vi - vj).abs() > TOL {
                        return Ok(true);
                    }
                }
            }
            Ok(false)
        }
    }
}

/// A grid triple witnessing a failure of upper-contour convexity: the
/// midpoint of `a` and `b` lies on the grid yet scores strictly below both
/// endpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexityWitness {
    pub a: Bundle,
    pub b: Bundle,
    pub midpoint: Bundle,
    pub value_a: f64,
    pub value_b: f64,
    pub value_mid: f64,
}

/// Probe upper-contour convexity using every grid pair whose midpoint is
/// itself on the grid. Returns the lexicographically first witness of
/// failure, or `None` when the probe finds no counterexample.
pub fn convexity_witness(
    w: &WelfareFunction,
    grid: &Grid,
    state: &StateId,
) -> Result<Option<ConvexityWitness>, EvalError> {
    let points: Vec<Bundle> = grid.iter().collect();
    let values: Vec<f64> = points
        .iter()
        .map(|p| w.eval(p, state))
        .collect::<Result<_, _>>()?;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let mid = points[i].midpoint(&points[j]);
            let Some(k) = grid.find(&mid) else {
                continue;
            };
            let floor = values[i].min(values[j]);
            if values[k] < floor - TOL {
                return Ok(Some(ConvexityWitness {
                    a: points[i].clone(),
                    b: points[j].clone(),
                    midpoint: points[k].clone(),
                    value_a: values[i],
                    value_b: values[j],
                    value_mid: values[k],
                }));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(id: &str) -> StateId {
        StateId::new(id)
    }

    #[test]
    fn linear_eval_with_offset() {
        let w = WelfareFunction::linear(vec![2.0, 1.0]).with_offset("s1", 5.0);
        let b = Bundle::new(vec![3.0, 4.0]);
        assert_eq!(w.eval(&b, &s("s0")).unwrap(), 10.0);
        assert_eq!(w.eval(&b, &s("s1")).unwrap(), 15.0);
    }

    #[test]
    fn linear_arity_mismatch_is_an_error() {
        let w = WelfareFunction::linear(vec![1.0, 1.0]);
        let err = w.eval(&Bundle::new(vec![1.0]), &s("s0")).unwrap_err();
        assert_eq!(
            err,
            EvalError::Arity {
                expected: 2,
                found: 1
            }
        );
    }

    #[test]
    fn log_linear_eval_and_domain() {
        let w = WelfareFunction::log_linear(vec![1.0, 2.0], 1.0);
        let v = w
            .eval(&Bundle::new(vec![0.0, std::f64::consts::E - 1.0]), &s("s0"))
            .unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let err = w.eval(&Bundle::new(vec![-1.0, 0.0]), &s("s0")).unwrap_err();
        assert!(matches!(err, EvalError::LogDomain { coord: 0, .. }));
    }

    #[test]
    fn tabulated_lookup_prefers_state_table() {
        let b0 = Bundle::new(vec![0.0]);
        let b1 = Bundle::new(vec![1.0]);
        let w = WelfareFunction::tabulated(vec![(b0.clone(), 1.0), (b1.clone(), 2.0)])
            .with_state_table("alt", vec![(b0.clone(), 7.0)]);
        assert_eq!(w.eval(&b0, &s("s0")).unwrap(), 1.0);
        assert_eq!(w.eval(&b0, &s("alt")).unwrap(), 7.0);
        assert_eq!(w.eval(&b1, &s("alt")).unwrap(), 2.0);
        let err = w.eval(&Bundle::new(vec![2.0]), &s("s0")).unwrap_err();
        assert!(matches!(err, EvalError::NotTabulated { .. }));
    }

    #[test]
    fn argmax_breaks_ties_lexicographically_first() {
        let grid = Grid::cube(2, 3);
        let w = WelfareFunction::linear(vec![0.0, 0.0]);
        let (b, v) = argmax_on_grid(&grid, &w, &s("s0")).unwrap();
        assert_eq!(b, Bundle::new(vec![0.0, 0.0]));
        assert_eq!(v, 0.0);
    }

    #[test]
    fn argmax_finds_unique_maximum() {
        let grid = Grid::cube(2, 4);
        let w = WelfareFunction::linear(vec![2.0, 1.0]);
        let (b, v) = argmax_on_grid(&grid, &w, &s("s0")).unwrap();
        assert_eq!(b, Bundle::new(vec![3.0, 3.0]));
        assert_eq!(v, 9.0);
    }

    #[test]
    fn argmax_unchanged_by_constant_offset() {
        let grid = Grid::cube(2, 4);
        let w = WelfareFunction::linear(vec![1.0, 3.0]);
        let shifted = w.clone().with_offset("s0", 42.0);
        let (b1, v1) = argmax_on_grid(&grid, &w, &s("s0")).unwrap();
        let (b2, v2) = argmax_on_grid(&grid, &shifted, &s("s0")).unwrap();
        assert_eq!(b1, b2);
        assert!((v2 - v1 - 42.0).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_linear_is_weight_norm() {
        let grid = Grid::cube(2, 3);
        let w = WelfareFunction::linear(vec![3.0, 4.0]);
        assert_eq!(lipschitz_bound(&w, &grid, &s("s0")).unwrap(), 5.0);
    }

    #[test]
    fn lipschitz_singleton_grid_is_zero() {
        let grid = Grid::singleton(Bundle::new(vec![1.0, 1.0]));
        let w = WelfareFunction::linear(vec![3.0, 4.0]);
        assert_eq!(lipschitz_bound(&w, &grid, &s("s0")).unwrap(), 0.0);
    }

    #[test]
    fn lipschitz_tabulated_is_pairwise_max() {
        let b0 = Bundle::new(vec![0.0]);
        let b1 = Bundle::new(vec![1.0]);
        let b2 = Bundle::new(vec![3.0]);
        let grid = Grid::points(vec![b0.clone(), b1.clone(), b2.clone()]);
        let w = WelfareFunction::tabulated(vec![(b0, 0.0), (b1, 4.0), (b2, 5.0)]);
        assert_eq!(lipschitz_bound(&w, &grid, &s("s0")).unwrap(), 4.0);
    }

    #[test]
    fn coordinate_dependence_reads_weights_and_tables() {
        let grid = Grid::cube(2, 3);
        let linear = WelfareFunction::linear(vec![1.0, 0.0]);
        assert!(depends_on_coordinate(&linear, &grid, &s("s0"), 0).unwrap());
        assert!(!depends_on_coordinate(&linear, &grid, &s("s0"), 1).unwrap());

        let entries: Vec<(Bundle, f64)> = grid.iter().map(|b| {
            let v = b.0[1];
            (b, v)
        }).collect();
        let tab = WelfareFunction::tabulated(entries);
        assert!(!depends_on_coordinate(&tab, &grid, &s("s0"), 0).unwrap());
        assert!(depends_on_coordinate(&tab, &grid, &s("s0"), 1).unwrap());
    }

    #[test]
    fn convexity_passes_for_linear() {
        let grid = Grid::cube(2, 5);
        let w = WelfareFunction::linear(vec![1.0, 2.0]);
        assert_eq!(convexity_witness(&w, &grid, &s("s0")).unwrap(), None);
    }

    #[test]
    fn convexity_flags_a_dip() {
        let b0 = Bundle::new(vec![0.0]);
        let b1 = Bundle::new(vec![1.0]);
        let b2 = Bundle::new(vec![2.0]);
        let grid = Grid::points(vec![b0.clone(), b1.clone(), b2.clone()]);
        let w = WelfareFunction::tabulated(vec![(b0, 1.0), (b1, 0.0), (b2, 1.0)]);
        let witness = convexity_witness(&w, &grid, &s("s0")).unwrap().unwrap();
        assert_eq!(witness.midpoint, Bundle::new(vec![1.0]));
        assert_eq!(witness.value_mid, 0.0);
    }
}
