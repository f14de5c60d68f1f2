//! Interval type-2 fuzzy inference.
//!
//! Antecedents are Gaussian sets with an uncertain mean in `[m1, m2]` and a
//! shared spread. Rule firing uses the product t-norm on both envelopes.
//! Two output paths are provided:
//!
//! * [`km_type_reduce`] + [`defuzzify`]: center-of-sets type reduction with
//!   the Karnik-Mendel switch-point iteration.
//! * [`Rulebase::basis_vector`]: the linear-in-parameter basis used by the
//!   adaptive laws, `y = theta . xi(x)`.
//!
//! Both agree exactly when all consequents are equal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian set whose mean is uncertain in `[m1, m2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IT2GaussianSet {
    m1: f64,
    m2: f64,
    sigma: f64,
}

impl IT2GaussianSet {
    pub fn new(m1: f64, m2: f64, sigma: f64) -> Result<Self> {
        let invalid = |reason| Error::InvalidSet {
            m1,
            m2,
            sigma,
            reason,
        };
        if !(m1.is_finite() && m2.is_finite() && sigma.is_finite()) {
            return Err(invalid("parameters must be finite"));
        }
        if m1 > m2 {
            return Err(invalid("m1 must not exceed m2"));
        }
        if sigma <= 0.0 {
            return Err(invalid("sigma must be positive"));
        }
        Ok(Self { m1, m2, sigma })
    }

    pub fn m1(&self) -> f64 {
        self.m1
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn gauss(&self, x: f64, m: f64) -> f64 {
        let d = x - m;
        (-(d * d) / (2.0 * self.sigma * self.sigma)).exp()
    }

    /// Upper membership envelope: flat top over `[m1, m2]`.
    pub fn upper(&self, x: f64) -> f64 {
        if x < self.m1 {
            self.gauss(x, self.m1)
        } else if x > self.m2 {
            self.gauss(x, self.m2)
        } else {
            1.0
        }
    }

    /// Lower membership envelope: the farther of the two extreme Gaussians.
    pub fn lower(&self, x: f64) -> f64 {
        if x <= 0.5 * (self.m1 + self.m2) {
            self.gauss(x, self.m2)
        } else {
            self.gauss(x, self.m1)
        }
    }

    /// Returns `(lower, upper)` membership at `x`.
    pub fn eval_bounds(&self, x: f64) -> Result<(f64, f64)> {
        if !x.is_finite() {
            return Err(Error::NonFinite("membership input"));
        }
        Ok((self.lower(x), self.upper(x)))
    }
}

/// Rule activation interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiringInterval {
    pub lo: f64,
    pub hi: f64,
}

impl FiringInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::InvalidParameter(format!(
                "firing interval [{lo}, {hi}] outside 0 <= lo <= hi <= 1"
            )));
        }
        Ok(Self { lo, hi })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub antecedents: Vec<IT2GaussianSet>,
    pub consequent: usize,
}

impl Rule {
    /// Product t-norm over lower and upper envelopes.
    pub fn firing_interval(&self, x: &[f64]) -> Result<FiringInterval> {
        if x.len() != self.antecedents.len() {
            return Err(Error::DimensionMismatch {
                expected: self.antecedents.len(),
                got: x.len(),
            });
        }
        let mut lo = 1.0;
        let mut hi = 1.0;
        for (set, &xj) in self.antecedents.iter().zip(x) {
            let (l, u) = set.eval_bounds(xj)?;
            lo *= l;
            hi *= u;
        }
        Ok(FiringInterval { lo, hi })
    }
}

/// Interval bounds `[y_l, y_r]` of the type-reduced set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedOutput {
    pub y_l: f64,
    pub y_r: f64,
}

/// Crisp output: midpoint of the type-reduced interval.
pub fn defuzzify(r: ReducedOutput) -> f64 {
    0.5 * (r.y_l + r.y_r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rulebase {
    inputs: usize,
    rules: Vec<Rule>,
}

impl Rulebase {
    pub fn new(rules: Vec<Rule>) -> Result<Self> {
        let first = rules.first().ok_or(Error::EmptyRulebase)?;
        let inputs = first.antecedents.len();
        if inputs == 0 {
            return Err(Error::InvalidParameter("rule without antecedents".into()));
        }
        for r in &rules {
            if r.antecedents.len() != inputs {
                return Err(Error::DimensionMismatch {
                    expected: inputs,
                    got: r.antecedents.len(),
                });
            }
        }
        Ok(Self { inputs, rules })
    }

    /// Full Cartesian-product rulebase. The last input varies fastest and
    /// rule `i` maps to consequent `i`.
    pub fn grid(sets_per_input: &[Vec<IT2GaussianSet>]) -> Result<Self> {
        if sets_per_input.is_empty() || sets_per_input.iter().any(|s| s.is_empty()) {
            return Err(Error::EmptyRulebase);
        }
        let mut combos: Vec<Vec<IT2GaussianSet>> = vec![Vec::new()];
        for sets in sets_per_input {
            combos = combos
                .into_iter()
                .flat_map(|prefix| {
                    sets.iter().map(move |s| {
                        let mut v = prefix.clone();
                        v.push(*s);
                        v
                    })
                })
                .collect();
        }
        let rules = combos
            .into_iter()
            .enumerate()
            .map(|(i, antecedents)| Rule {
                antecedents,
                consequent: i,
            })
            .collect();
        Self::new(rules)
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Number of consequent parameters addressed by the rules.
    pub fn parameter_count(&self) -> usize {
        self.rules
            .iter()
            .map(|r| r.consequent + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn firing_intervals(&self, x: &[f64]) -> Result<Vec<FiringInterval>> {
        self.rules.iter().map(|r| r.firing_interval(x)).collect()
    }

    /// Basis `xi` such that the crisp output is linear in the consequents.
    ///
    /// `xi_i = (lo_i / sum lo + hi_i / sum hi) / 2`. When every lower firing
    /// is zero the upper-normalized term is used alone.
    pub fn basis_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        let firings = self.firing_intervals(x)?;
        basis_from_firings(&firings)
    }

    /// Full KM reduction with the given per-parameter consequents.
    pub fn km_output(&self, x: &[f64], theta: &[f64]) -> Result<ReducedOutput> {
        let firings = self.firing_intervals(x)?;
        let w = self.rule_consequents(theta)?;
        km_type_reduce(&firings, &w)
    }

    fn rule_consequents(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if theta.len() < self.parameter_count() {
            return Err(Error::DimensionMismatch {
                expected: self.parameter_count(),
                got: theta.len(),
            });
        }
        Ok(self.rules.iter().map(|r| theta[r.consequent]).collect())
    }
}

/// Normalized basis from a list of firing intervals.
pub fn basis_from_firings(firings: &[FiringInterval]) -> Result<Vec<f64>> {
    if firings.is_empty() {
        return Err(Error::EmptyRulebase);
    }
    let sum_hi: f64 = firings.iter().map(|f| f.hi).sum();
    if !(sum_hi > 0.0) {
        return Err(Error::NoFiring);
    }
    let sum_lo: f64 = firings.iter().map(|f| f.lo).sum();
    let xi = firings
        .iter()
        .map(|f| {
            let upper = f.hi / sum_hi;
            let lower = if sum_lo > 0.0 { f.lo / sum_lo } else { upper };
            0.5 * (lower + upper)
        })
        .collect();
    Ok(xi)
}

/// Center-of-sets type reduction by Karnik-Mendel iteration.
///
/// `y_r` takes lower firings below the switch point and upper firings above
/// it; `y_l` the reverse.
pub fn km_type_reduce(firings: &[FiringInterval], consequents: &[f64]) -> Result<ReducedOutput> {
    if firings.is_empty() {
        return Err(Error::EmptyRulebase);
    }
    if firings.len() != consequents.len() {
        return Err(Error::DimensionMismatch {
            expected: firings.len(),
            got: consequents.len(),
        });
    }
    if consequents.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite("consequents"));
    }
    if !firings.iter().any(|f| f.hi > 0.0) {
        return Err(Error::NoFiring);
    }

    let mut order: Vec<usize> = (0..firings.len()).collect();
    order.sort_by(|&a, &b| consequents[a].total_cmp(&consequents[b]));
    let w: Vec<f64> = order.iter().map(|&i| consequents[i]).collect();
    // KM is scale-invariant; rescaling keeps far-tail (subnormal) firings accurate
    let peak = firings.iter().map(|f| f.hi).fold(0.0, f64::max);
    let lo: Vec<f64> = order.iter().map(|&i| firings[i].lo / peak).collect();
    let hi: Vec<f64> = order.iter().map(|&i| firings[i].hi / peak).collect();

    let y_r = km_endpoint(&w, &lo, &hi, Endpoint::Right);
    let y_l = km_endpoint(&w, &lo, &hi, Endpoint::Left);
    Ok(ReducedOutput { y_l, y_r })
}

#[derive(Clone, Copy)]
enum Endpoint {
    Left,
    Right,
}

fn km_endpoint(w: &[f64], lo: &[f64], hi: &[f64], end: Endpoint) -> f64 {
    let weighted = |k: usize| {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..w.len() {
            let f = match (end, i < k) {
                (Endpoint::Right, true) | (Endpoint::Left, false) => lo[i],
                (Endpoint::Right, false) | (Endpoint::Left, true) => hi[i],
            };
            num += f * w[i];
            den += f;
        }
        num / den
    };
    // Switch index: rules with w < y (right) or w <= y (left) form the first
    // segment. This choice keeps the denominator positive.
    let switch = |y: f64| match end {
        Endpoint::Right => w.partition_point(|&wi| wi < y),
        Endpoint::Left => w.partition_point(|&wi| wi <= y),
    };

    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..w.len() {
        let f = 0.5 * (lo[i] + hi[i]);
        num += f * w[i];
        den += f;
    }
    let mut k = switch(num / den);
    let mut y = weighted(k);
    for _ in 0..=w.len() {
        let next = switch(y);
        if next == k {
            break;
        }
        k = next;
        y = weighted(k);
    }
    y
}

/// Adjustable linear-in-parameter fuzzy system `y = theta . xi(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyApproximator {
    rulebase: Rulebase,
    theta: Vec<f64>,
}

impl FuzzyApproximator {
    pub fn new(rulebase: Rulebase, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != rulebase.parameter_count() {
            return Err(Error::DimensionMismatch {
                expected: rulebase.parameter_count(),
                got: theta.len(),
            });
        }
        Ok(Self { rulebase, theta })
    }

    pub fn zeros(rulebase: Rulebase) -> Self {
        let theta = vec![0.0; rulebase.parameter_count()];
        Self { rulebase, theta }
    }

    pub fn rulebase(&self) -> &Rulebase {
        &self.rulebase
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    /// Basis vector over parameters (rules sharing a consequent are summed).
    pub fn basis(&self, x: &[f64]) -> Result<Vec<f64>> {
        let xi_rules = self.rulebase.basis_vector(x)?;
        let mut xi = vec![0.0; self.theta.len()];
        for (rule, v) in self.rulebase.rules.iter().zip(xi_rules) {
            xi[rule.consequent] += v;
        }
        Ok(xi)
    }

    pub fn eval_with_basis(&self, xi: &[f64]) -> f64 {
        dot(&self.theta, xi)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eval_with_basis(&self.basis(x)?))
    }

    /// Diagnostic path through KM reduction and midpoint defuzzification.
    pub fn eval_km(&self, x: &[f64]) -> Result<f64> {
        self.rulebase.km_output(x, &self.theta).map(defuzzify)
    }

    pub fn theta_norm(&self) -> f64 {
        dot(&self.theta, &self.theta).sqrt()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
