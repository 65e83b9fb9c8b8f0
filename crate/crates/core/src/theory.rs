//! Feasibility bounds for the reverse-pattern construction, and the expected
//! number of samples in each (subset, pattern) cell before and after shifting.
//!
//! Feasibility bounds are strict (`<`); the dominance-factor refinements
//! are non-strict (`<=`).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{self, Dataset, FlipMap, NoiseKind, NoiseSource, NoiseSpec};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsQuery {
    pub k: usize,
    pub eta: f64,
    pub beta: f64,
    /// Required ratio of clean-pattern scale to reverse-pattern scale.
    pub delta: f64,
}

impl BoundsQuery {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Domain(format!("class count {} < 2", self.k)));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::Domain(format!("eta {} outside (0, 1)", self.eta)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::Domain(format!("beta {} outside (0, 1)", self.beta)));
        }
        if !(self.delta >= 1.0) {
            return Err(Error::Domain(format!("delta {} < 1", self.delta)));
        }
        Ok(())
    }
}

/// Expected number of symmetric-polluted labels that land on the true class
/// after one shift: `r / (k - 1)`.
pub fn expected_true_after_shift(r: f64, k: usize) -> f64 {
    r / (k as f64 - 1.0)
}

/// `(k - 1) / k`; symmetric noise is feasible iff `eta` is strictly below it.
pub fn symmetric_eta_bound(k: usize) -> f64 {
    (k as f64 - 1.0) / k as f64
}

pub fn symmetric_eta_feasible(eta: f64, k: usize) -> bool {
    eta < symmetric_eta_bound(k)
}

fn require_symmetric_eta(eta: f64, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::Domain(format!("class count {k} < 2")));
    }
    if !(0.0..1.0).contains(&eta) || !symmetric_eta_feasible(eta, k) {
        return Err(Error::Domain(format!(
            "eta {eta} not below the symmetric bound {}",
            symmetric_eta_bound(k)
        )));
    }
    Ok(())
}

/// Largest selection rate (exclusive) for which the clean pattern still
/// outnumbers the shifted clean pattern: `(1-eta) / (2 - 2 eta - eta/(k-1))`.
pub fn symmetric_beta_bound(eta: f64, k: usize) -> Result<f64> {
    require_symmetric_eta(eta, k)?;
    let km1 = k as f64 - 1.0;
    Ok((1.0 - eta) / (2.0 - 2.0 * eta - eta / km1))
}

/// Selection rate bound (inclusive) when the clean pattern must be at least
/// `delta` times the reverse pattern: `(1-eta) / ((1+delta)(1-eta) - eta/(k-1))`.
pub fn symmetric_beta_bound_delta(eta: f64, k: usize, delta: f64) -> Result<f64> {
    require_symmetric_eta(eta, k)?;
    if !(delta >= 1.0) {
        return Err(Error::Domain(format!("delta {delta} < 1")));
    }
    let km1 = k as f64 - 1.0;
    Ok((1.0 - eta) / ((1.0 + delta) * (1.0 - eta) - eta / km1))
}

/// Asymmetric noise: `eta < 1/2` and `beta < 1/2`.
pub fn asymmetric_feasible(eta: f64, beta: f64) -> bool {
    eta < 0.5 && beta < 0.5
}

/// `1 / (1 + delta)`, inclusive.
pub fn asymmetric_beta_bound_delta(delta: f64) -> Result<f64> {
    if !(delta >= 1.0) {
        return Err(Error::Domain(format!("delta {delta} < 1")));
    }
    Ok(1.0 / (1.0 + delta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subset {
    Selected,
    Leftover,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    /// Correct label.
    Clean,
    /// Symmetric-noise label.
    Chaos,
    /// Asymmetric-noise label.
    Polluted,
    /// A clean label moved by the shift (symmetric case).
    RegularShifted,
    /// A clean label moved by the shift (asymmetric case).
    ShiftedClean,
    /// An asymmetric-noise label moved by the shift.
    ShiftedPolluted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensusCell {
    pub subset: Subset,
    pub pattern: Pattern,
    pub count: f64,
}

/// Expected (or observed) sample counts per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternCensus {
    pub n: f64,
    pub before: Vec<CensusCell>,
    pub after: Vec<CensusCell>,
}

impl PatternCensus {
    fn lookup(cells: &[CensusCell], subset: Subset, pattern: Pattern) -> f64 {
        cells
            .iter()
            .find(|c| c.subset == subset && c.pattern == pattern)
            .map_or(0.0, |c| c.count)
    }

    pub fn before(&self, subset: Subset, pattern: Pattern) -> f64 {
        Self::lookup(&self.before, subset, pattern)
    }

    pub fn after(&self, subset: Subset, pattern: Pattern) -> f64 {
        Self::lookup(&self.after, subset, pattern)
    }

    pub fn after_total(&self) -> f64 {
        self.after.iter().map(|c| c.count).sum()
    }

    pub fn before_total(&self) -> f64 {
        self.before.iter().map(|c| c.count).sum()
    }
}

fn cell(subset: Subset, pattern: Pattern, count: f64) -> CensusCell {
    CensusCell {
        subset,
        pattern,
        count,
    }
}

fn check_rates(eta: f64, beta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eta) || !(0.0..1.0).contains(&beta) {
        return Err(Error::Domain(format!("rates eta={eta}, beta={beta} outside [0, 1)")));
    }
    Ok(())
}

pub fn pattern_census_symmetric(n: f64, eta: f64, beta: f64, k: usize) -> Result<PatternCensus> {
    use Pattern::*;
    use Subset::*;
    check_rates(eta, beta)?;
    if k < 2 {
        return Err(Error::Domain(format!("class count {k} < 2")));
    }
    let km1 = k as f64 - 1.0;
    Ok(PatternCensus {
        n,
        before: vec![
            cell(Selected, Chaos, eta * beta * n),
            cell(Selected, Clean, (1.0 - eta) * beta * n),
            cell(Leftover, Chaos, eta * (1.0 - beta) * n),
            cell(Leftover, Clean, (1.0 - eta) * (1.0 - beta) * n),
        ],
        after: vec![
            cell(Selected, Chaos, eta * beta * (k as f64 - 2.0) / km1 * n),
            cell(Selected, RegularShifted, (1.0 - eta) * beta * n),
            cell(Selected, Clean, eta * beta / km1 * n),
            cell(Leftover, Chaos, eta * (1.0 - beta) * n),
            cell(Leftover, Clean, (1.0 - eta) * (1.0 - beta) * n),
        ],
    })
}

/// Asymmetric census. A shifted polluted label is assumed never to hit the
/// true class, so the selected-clean cell is exactly zero; `map` is checked
/// for the collisions that would break that assumption.
pub fn pattern_census_asymmetric(n: f64, eta: f64, beta: f64, map: &FlipMap) -> Result<PatternCensus> {
    use Pattern::*;
    use Subset::*;
    check_rates(eta, beta)?;
    let collisions = map.shift_collisions();
    if !collisions.is_empty() {
        return Err(Error::CensusInvalid(format!(
            "flip map collides with the label shift on classes {collisions:?}"
        )));
    }
    Ok(PatternCensus {
        n,
        before: vec![
            cell(Selected, Polluted, eta * beta * n),
            cell(Selected, Clean, (1.0 - eta) * beta * n),
            cell(Leftover, Polluted, eta * (1.0 - beta) * n),
            cell(Leftover, Clean, (1.0 - eta) * (1.0 - beta) * n),
        ],
        after: vec![
            cell(Selected, ShiftedPolluted, eta * beta * n),
            cell(Selected, ShiftedClean, (1.0 - eta) * beta * n),
            cell(Selected, Clean, 0.0),
            cell(Leftover, Polluted, eta * (1.0 - beta) * n),
            cell(Leftover, Clean, (1.0 - eta) * (1.0 - beta) * n),
        ],
    })
}

/// Observed census of a noisy dataset and its reverse split. Reads oracle
/// labels; used to cross-check the closed forms by simulation.
pub fn observed_census(
    noisy: &Dataset,
    split: &data::ReverseSplit,
    kind: NoiseKind,
) -> Result<PatternCensus> {
    use Pattern::*;
    use Subset::*;
    let oracle = noisy
        .oracle_labels()
        .ok_or_else(|| Error::Precondition("observed census needs oracle labels".into()))?;
    let noisy_labels = noisy.labels();
    let shifted = split.dataset().labels();
    let (dirty, moved_clean, moved_dirty) = match kind {
        NoiseKind::Symmetric => (Chaos, RegularShifted, Chaos),
        NoiseKind::Asymmetric => (Polluted, ShiftedClean, ShiftedPolluted),
    };

    let mut before = std::collections::HashMap::new();
    let mut after = std::collections::HashMap::new();
    let bump = |map: &mut std::collections::HashMap<(Subset, Pattern), f64>, s, p| {
        *map.entry((s, p)).or_insert(0.0) += 1.0;
    };
    for &i in split.reverse_idx() {
        let was_clean = noisy_labels[i] == oracle[i];
        bump(&mut before, Selected, if was_clean { Clean } else { dirty });
        let p = if shifted[i] == oracle[i] {
            Clean
        } else if was_clean {
            moved_clean
        } else {
            moved_dirty
        };
        bump(&mut after, Selected, p);
    }
    for &i in split.leftover_idx() {
        let p = if noisy_labels[i] == oracle[i] { Clean } else { dirty };
        bump(&mut before, Leftover, p);
        bump(&mut after, Leftover, p);
    }

    let template = match kind {
        NoiseKind::Symmetric => pattern_census_symmetric(0.0, 0.0, 0.0, 2)?,
        NoiseKind::Asymmetric => PatternCensus {
            n: 0.0,
            before: vec![
                cell(Selected, Polluted, 0.0),
                cell(Selected, Clean, 0.0),
                cell(Leftover, Polluted, 0.0),
                cell(Leftover, Clean, 0.0),
            ],
            after: vec![
                cell(Selected, ShiftedPolluted, 0.0),
                cell(Selected, ShiftedClean, 0.0),
                cell(Selected, Clean, 0.0),
                cell(Leftover, Polluted, 0.0),
                cell(Leftover, Clean, 0.0),
            ],
        },
    };
    let fill = |cells: Vec<CensusCell>, counts: &std::collections::HashMap<(Subset, Pattern), f64>| {
        cells
            .into_iter()
            .map(|c| cell(c.subset, c.pattern, counts.get(&(c.subset, c.pattern)).copied().unwrap_or(0.0)))
            .collect()
    };
    Ok(PatternCensus {
        n: noisy.n() as f64,
        before: fill(template.before, &before),
        after: fill(template.after, &after),
    })
}

/// Injects noise into `clean`, draws a reverse split and returns its observed
/// census.
pub fn simulate_census(clean: &Dataset, noise: &NoiseSpec, beta: f64, seed: u64) -> Result<PatternCensus> {
    let noisy = data::inject_noise(clean, noise, rng::derive(seed, "noise"))?;
    let split = data::make_reverse_split(&noisy, beta, rng::derive(seed, "split"))?;
    observed_census(&noisy, &split, noise.source.kind())
}

/// Named inequality checked by [`check_config`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// `eta < (k-1)/k`
    SymmetricEta,
    /// `beta < (1-eta) / (2 - 2 eta - eta/(k-1))`
    SymmetricBeta,
    /// `beta <= (1-eta) / ((1+delta)(1-eta) - eta/(k-1))`
    SymmetricBetaDelta,
    /// `eta < 1/2`
    AsymmetricEta,
    /// `beta < 1/2`
    AsymmetricBeta,
    /// `beta <= 1/(1+delta)`
    AsymmetricBetaDelta,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::SymmetricEta => "symmetric-eta: eta < (k-1)/k",
            Condition::SymmetricBeta => "symmetric-beta: beta < (1-eta)/(2-2eta-eta/(k-1))",
            Condition::SymmetricBetaDelta => {
                "symmetric-beta-delta: beta <= (1-eta)/((1+delta)(1-eta)-eta/(k-1))"
            }
            Condition::AsymmetricEta => "asymmetric-eta: eta < 1/2",
            Condition::AsymmetricBeta => "asymmetric-beta: beta < 1/2",
            Condition::AsymmetricBetaDelta => "asymmetric-beta-delta: beta <= 1/(1+delta)",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Every applicable bound for one configuration.
///
/// Beta bounds above 1 are reported as 1 (no constraint); the unclamped
/// values are kept in the `raw_*` fields. Beta bounds are `None` when the
/// eta condition already fails and the formula is meaningless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub source: NoiseKind,
    pub query: BoundsQuery,
    pub eta_bound: f64,
    pub beta_bound_basic: Option<f64>,
    pub beta_bound_delta: Option<f64>,
    pub raw_beta_bound_basic: Option<f64>,
    pub raw_beta_bound_delta: Option<f64>,
    pub feasible: bool,
    pub violated_conditions: Vec<Condition>,
}

impl FeasibilityReport {
    pub fn violation_names(&self) -> Vec<&'static str> {
        self.violated_conditions.iter().map(|c| c.name()).collect()
    }

    /// Aligned two-column text rendering.
    pub fn table(&self) -> String {
        let fmt_opt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.6}"));
        let mut rows = vec![
            ("source", format!("{:?}", self.source).to_lowercase()),
            ("k", self.query.k.to_string()),
            ("eta", self.query.eta.to_string()),
            ("beta", self.query.beta.to_string()),
            ("delta", self.query.delta.to_string()),
            ("eta bound (<)", format!("{:.6}", self.eta_bound)),
            ("beta bound (<)", fmt_opt(self.beta_bound_basic)),
            ("beta bound, delta (<=)", fmt_opt(self.beta_bound_delta)),
            ("feasible", self.feasible.to_string()),
        ];
        for c in &self.violated_conditions {
            rows.push(("violated", c.name().to_string()));
        }
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        rows.iter()
            .map(|(k, v)| format!("{k:<width$}  {v}\n"))
            .collect()
    }
}

fn clamp_unit(v: f64) -> f64 {
    if v > 1.0 {
        1.0
    } else {
        v
    }
}

/// Evaluates all bounds that apply to `source`. Never fails: out-of-range
/// inputs show up as violations.
pub fn check_config(query: &BoundsQuery, source: NoiseKind) -> FeasibilityReport {
    let BoundsQuery { k, eta, beta, delta } = *query;
    let mut violated = Vec::new();
    let (eta_bound, raw_basic, raw_delta) = match source {
        NoiseKind::Symmetric => {
            let eta_bound = symmetric_eta_bound(k.max(2));
            if !(eta > 0.0 && eta < eta_bound) {
                violated.push(Condition::SymmetricEta);
                (eta_bound, None, None)
            } else {
                let basic = symmetric_beta_bound(eta, k).ok();
                let with_delta = symmetric_beta_bound_delta(eta, k, delta.max(1.0)).ok();
                // a non-positive denominator means the bound is unconstrained
                let basic = basic.map(|b| if b <= 0.0 { f64::INFINITY } else { b });
                let with_delta = with_delta.map(|b| if b <= 0.0 { f64::INFINITY } else { b });
                if !(beta > 0.0 && basic.is_some_and(|b| beta < b)) {
                    violated.push(Condition::SymmetricBeta);
                }
                if !(delta >= 1.0 && with_delta.is_some_and(|b| beta <= b)) {
                    violated.push(Condition::SymmetricBetaDelta);
                }
                (eta_bound, basic, with_delta)
            }
        }
        NoiseKind::Asymmetric => {
            if !(eta > 0.0 && eta < 0.5) {
                violated.push(Condition::AsymmetricEta);
            }
            if !(beta > 0.0 && beta < 0.5) {
                violated.push(Condition::AsymmetricBeta);
            }
            let with_delta = asymmetric_beta_bound_delta(delta).ok();
            if !with_delta.is_some_and(|b| beta <= b) {
                violated.push(Condition::AsymmetricBetaDelta);
            }
            (0.5, Some(0.5), with_delta)
        }
    };
    if !(beta < 1.0) && !violated.iter().any(|c| matches!(c, Condition::SymmetricBeta | Condition::AsymmetricBeta)) {
        violated.push(match source {
            NoiseKind::Symmetric => Condition::SymmetricBeta,
            NoiseKind::Asymmetric => Condition::AsymmetricBeta,
        });
    }
    FeasibilityReport {
        source,
        query: *query,
        eta_bound,
        beta_bound_basic: raw_basic.map(clamp_unit),
        beta_bound_delta: raw_delta.map(clamp_unit),
        raw_beta_bound_basic: raw_basic,
        raw_beta_bound_delta: raw_delta,
        feasible: violated.is_empty(),
        violated_conditions: violated,
    }
}

/// Feasibility of a concrete noise spec at the given selection rate.
pub fn check_noise(noise: &NoiseSpec, k: usize, beta: f64, delta: f64) -> FeasibilityReport {
    let kind = match noise.source {
        NoiseSource::Symmetric => NoiseKind::Symmetric,
        NoiseSource::Asymmetric(_) => NoiseKind::Asymmetric,
    };
    check_config(
        &BoundsQuery {
            k,
            eta: noise.eta,
            beta,
            delta,
        },
        kind,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_count_examples() {
        assert_eq!(expected_true_after_shift(9000.0, 10), 1000.0);
        assert_eq!(expected_true_after_shift(0.0, 7), 0.0);
    }

    #[test]
    fn symmetric_eta_examples() {
        assert!((symmetric_eta_bound(10) - 0.9).abs() < 1e-15);
        assert!(symmetric_eta_feasible(0.8, 10));
        assert_eq!(symmetric_eta_bound(2), 0.5);
        assert!(!symmetric_eta_feasible(0.9, 10));
    }

    #[test]
    fn symmetric_beta_examples() {
        let b = symmetric_beta_bound(0.6, 10).unwrap();
        assert!((b - 0.4 / (0.8 - 0.6 / 9.0)).abs() < 1e-15);
        assert!((b - 0.545_454_545_454_545_4).abs() < 1e-12);
        assert_eq!(symmetric_beta_bound(0.0, 10).unwrap(), 0.5);
        let b = symmetric_beta_bound(0.8, 10).unwrap();
        assert!((b - 0.2 / (0.4 - 0.8 / 9.0)).abs() < 1e-12);
        assert!((b - 0.642_857_142_857_142_9).abs() < 1e-12);
        assert!(matches!(symmetric_beta_bound(0.9, 10), Err(Error::Domain(_))));
    }

    #[test]
    fn symmetric_delta_examples() {
        for &eta in &[0.0, 0.2, 0.6, 0.85] {
            assert_eq!(
                symmetric_beta_bound_delta(eta, 10, 1.0).unwrap(),
                symmetric_beta_bound(eta, 10).unwrap()
            );
        }
        assert!((symmetric_beta_bound_delta(0.0, 10, 9.0).unwrap() - 0.1).abs() < 1e-15);
        let b = symmetric_beta_bound_delta(0.4, 10, 9.0).unwrap();
        assert!((b - 0.6 / (6.0 - 0.4 / 9.0)).abs() < 1e-15);
        assert!((b - 0.100_746).abs() < 1e-6);
        assert!(symmetric_beta_bound_delta(0.4, 10, 0.5).is_err());
    }

    #[test]
    fn asymmetric_examples() {
        assert!(asymmetric_feasible(0.46, 0.1));
        assert!(!asymmetric_feasible(0.5, 0.1));
        assert!(!asymmetric_feasible(0.3, 0.5));
        assert!((asymmetric_beta_bound_delta(9.0).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(asymmetric_beta_bound_delta(1.0).unwrap(), 0.5);
        assert!((asymmetric_beta_bound_delta(99.0).unwrap() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn census_tables() {
        let c = pattern_census_symmetric(1000.0, 0.6, 0.1, 10).unwrap();
        assert!((c.after(Subset::Selected, Pattern::Chaos) - 160.0 / 3.0).abs() < 1e-9);
        assert!((c.after(Subset::Selected, Pattern::RegularShifted) - 40.0).abs() < 1e-9);
        assert!((c.after(Subset::Selected, Pattern::Clean) - 20.0 / 3.0).abs() < 1e-9);
        assert!((c.after_total() - 1000.0).abs() < 1e-9);

        let empty = pattern_census_symmetric(1000.0, 0.6, 0.0, 10).unwrap();
        assert_eq!(empty.after(Subset::Selected, Pattern::Chaos), 0.0);
        assert_eq!(empty.after(Subset::Leftover, Pattern::Chaos), 600.0);
        assert_eq!(empty.after(Subset::Leftover, Pattern::Clean), 400.0);

        let map = FlipMap::cyclic(10, 2).unwrap();
        let a = pattern_census_asymmetric(1000.0, 0.3, 0.1, &map).unwrap();
        assert!((a.after(Subset::Selected, Pattern::ShiftedPolluted) - 30.0).abs() < 1e-9);
        assert!((a.after(Subset::Selected, Pattern::ShiftedClean) - 70.0).abs() < 1e-9);
        assert!((a.after(Subset::Leftover, Pattern::Polluted) - 270.0).abs() < 1e-9);
        assert!((a.after(Subset::Leftover, Pattern::Clean) - 630.0).abs() < 1e-9);
        assert_eq!(a.after(Subset::Selected, Pattern::Clean), 0.0);
        assert!((a.after_total() - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn asymmetric_census_rejects_colliding_map() {
        let map = FlipMap::cyclic(10, 1).unwrap();
        assert!(matches!(
            pattern_census_asymmetric(1000.0, 0.3, 0.1, &map),
            Err(Error::CensusInvalid(_))
        ));
    }

    #[test]
    fn check_config_examples() {
        let q = BoundsQuery { k: 10, eta: 0.4, beta: 0.1, delta: 9.0 };
        let r = check_config(&q, NoiseKind::Symmetric);
        assert!(r.feasible, "{r:?}");
        assert!(r.violated_conditions.is_empty());

        let q = BoundsQuery { k: 10, eta: 0.6, beta: 0.1, delta: 9.0 };
        let r = check_config(&q, NoiseKind::Asymmetric);
        assert!(!r.feasible);
        assert_eq!(r.violated_conditions, vec![Condition::AsymmetricEta]);

        let q = BoundsQuery { k: 10, eta: 0.95, beta: 0.1, delta: 9.0 };
        let r = check_config(&q, NoiseKind::Symmetric);
        assert_eq!(r.violated_conditions, vec![Condition::SymmetricEta]);
        assert!(r.beta_bound_basic.is_none());
    }

    #[test]
    fn report_keeps_raw_and_clamped_bounds() {
        let q = BoundsQuery { k: 10, eta: 0.8, beta: 0.1, delta: 1.0 };
        let r = check_config(&q, NoiseKind::Symmetric);
        assert_eq!(r.beta_bound_basic, r.raw_beta_bound_basic);
        assert!((r.beta_bound_basic.unwrap() - 0.642_857_142_857).abs() < 1e-9);
        assert!(r.feasible);
        assert!(r.table().contains("feasible"));
        assert_eq!(clamp_unit(1.3), 1.0);
        assert_eq!(clamp_unit(0.3), 0.3);
    }

    #[test]
    fn delta_bound_non_strict() {
        // beta equal to 1/(1+delta) passes the inclusive refinement
        let q = BoundsQuery { k: 10, eta: 0.3, beta: 0.1, delta: 9.0 };
        assert!(check_config(&q, NoiseKind::Asymmetric).feasible);
        let q = BoundsQuery { k: 10, eta: 0.3, beta: 0.5, delta: 1.0 };
        let r = check_config(&q, NoiseKind::Asymmetric);
        assert_eq!(r.violated_conditions, vec![Condition::AsymmetricBeta]);
    }
}
