//! Closed-form thresholds, line-of-descent reconstruction and critical-point
//! extraction from response curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::GenerationRecord;
use crate::model::Genome;

/// Fraction of the line of descent dropped at the leaf end.
pub const DEFAULT_TRUNCATION: f64 = 0.25;
/// Default LOD analysis window, as fractions of its length.
pub const DEFAULT_LOD_WINDOW: (f64, f64) = (0.5, 0.75);
/// Fraction of final generations averaged into a run's converged value.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.1;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Range of `r` in which defection beats cooperation individually while
/// full cooperation beats full defection: `(1, k + 1)`.
pub fn dilemma_bounds(k: usize) -> Result<(f64, f64)> {
    if k < 1 {
        return Err(Error::Argument("k must be at least 1".into()));
    }
    Ok((1.0, (k + 1) as f64))
}

/// Smallest synergy at which cooperation pays when agents mimic the focal
/// player with probability `rho_a`: `(k + 1) / (rho_a k + 1)`.
pub fn predicted_critical_r(k: usize, rho_a: f64) -> Result<f64> {
    if k < 1 {
        return Err(Error::Argument("k must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&rho_a) {
        return Err(Error::Argument(format!("rho_A out of [0,1]: {rho_a}")));
    }
    Ok((k + 1) as f64 / (rho_a * k as f64 + 1.0))
}

/// Genomes along one line of descent, root (generation 0) first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LodSeries {
    pub genomes: Vec<Genome>,
    pub truncation_fraction: f64,
}

impl LodSeries {
    pub fn new(genomes: Vec<Genome>, truncation_fraction: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&truncation_fraction) {
            return Err(Error::Argument(format!(
                "truncation fraction must lie in [0, 1), got {truncation_fraction}"
            )));
        }
        Ok(LodSeries {
            genomes,
            truncation_fraction,
        })
    }

    pub fn len(&self) -> usize {
        self.genomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genomes.is_empty()
    }
}

/// Follows parent links from individual `final_pick` of the last generation
/// back to generation 0, rebuilding each ancestor's genome from the initial
/// population and the logged mutations.
pub fn reconstruct_lod(
    initial_genomes: &[Genome],
    records: &[GenerationRecord],
    final_pick: usize,
    truncation_fraction: f64,
) -> Result<LodSeries> {
    let n = initial_genomes.len();
    if final_pick >= n {
        return Err(Error::Argument(format!(
            "final pick {final_pick} outside population of {n}"
        )));
    }
    // walk back: lineage[t] is the ancestor's index in generation t
    let mut lineage = vec![0usize; records.len() + 1];
    lineage[records.len()] = final_pick;
    for (t, record) in records.iter().enumerate().rev() {
        if record.parent_index.len() != n {
            return Err(Error::Integrity(format!(
                "generation {t} has {} parent links for a population of {n}",
                record.parent_index.len()
            )));
        }
        let parent = record.parent_index[lineage[t + 1]] as usize;
        if parent >= n {
            return Err(Error::Integrity(format!(
                "generation {t} links to parent {parent} outside population of {n}"
            )));
        }
        lineage[t] = parent;
    }

    let mut genomes = Vec::with_capacity(records.len() + 1);
    let mut current = initial_genomes[lineage[0]];
    genomes.push(current);
    for (t, record) in records.iter().enumerate() {
        let child = lineage[t + 1] as u32;
        if let Some(m) = record.mutations.iter().find(|m| m.index == child) {
            current = m.genome;
        }
        genomes.push(current);
    }
    LodSeries::new(genomes, truncation_fraction)
}

/// Mean `p_C` over LOD entries `[start * T, end * T)`, `T` the LOD length.
/// The window may not reach into the truncated tail.
pub fn lod_statistic(lod: &LodSeries, window: (f64, f64)) -> Result<f64> {
    let (start, end) = window;
    let limit = 1.0 - lod.truncation_fraction;
    if !(0.0 <= start && start < end && end <= limit + 1e-12) {
        return Err(Error::Argument(format!(
            "window ({start}, {end}) must satisfy 0 <= start < end <= {limit}"
        )));
    }
    let t = lod.len() as f64;
    let lo = (start * t).floor() as usize;
    let hi = ((end * t).floor() as usize).min(lod.len());
    if hi <= lo {
        return Err(Error::Argument(format!(
            "window ({start}, {end}) selects no entries of a {}-entry line of descent",
            lod.len()
        )));
    }
    let slice = &lod.genomes[lo..hi];
    Ok(slice.iter().map(Genome::p_c).sum::<f64>() / slice.len() as f64)
}

/// Converged population values of one run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mean_p_c: f64,
    pub mean_p_ac: f64,
    pub coop_frequency: f64,
}

/// Averages the per-generation means over the final `tail_fraction` of the
/// records (at least one). `None` for an empty run.
pub fn convergence_summary(records: &[GenerationRecord], tail_fraction: f64) -> Option<RunSummary> {
    if records.is_empty() {
        return None;
    }
    let take = ((records.len() as f64 * tail_fraction).ceil() as usize).clamp(1, records.len());
    let tail = &records[records.len() - take..];
    let m = tail.len() as f64;
    Some(RunSummary {
        mean_p_c: tail.iter().map(|r| r.mean_p_c).sum::<f64>() / m,
        mean_p_ac: tail.iter().map(|r| r.mean_p_ac).sum::<f64>() / m,
        coop_frequency: tail.iter().map(|r| r.coop_frequency).sum::<f64>() / m,
    })
}

/// A response value as a function of `r`, strictly ascending in `r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseCurve {
    points: Vec<(f64, f64)>,
}

impl ResponseCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if !points.windows(2).all(|w| w[0].0 < w[1].0) {
            return Err(Error::Argument(
                "curve must be strictly ascending in r".into(),
            ));
        }
        if let Some(&(r, v)) = points.iter().find(|(_, v)| !(0.0..=1.0).contains(v)) {
            return Err(Error::Argument(format!(
                "curve value {v} at r={r} outside [0,1]"
            )));
        }
        Ok(ResponseCurve { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    #[serde(rename = "rho_A")]
    pub rho_a: f64,
    pub r_critical: Option<f64>,
}

/// First upward crossing of `threshold`, linearly interpolated between the
/// bracketing points; `None` if the curve never crosses.
pub fn extract_critical_r(curve: &ResponseCurve, threshold: f64) -> Result<Option<f64>> {
    if curve.points.len() < 2 {
        return Err(Error::Argument("curve needs at least two points".into()));
    }
    Ok(curve.points.windows(2).find_map(|w| {
        let ((r1, v1), (r2, v2)) = (w[0], w[1]);
        (v1 < threshold && threshold <= v2).then(|| r1 + (r2 - r1) * (threshold - v1) / (v2 - v1))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::Mutation;

    fn g(p_c: f64) -> Genome {
        Genome::new(p_c, 0.5).unwrap()
    }

    fn record(parents: Vec<u32>, mutations: Vec<Mutation>) -> GenerationRecord {
        GenerationRecord {
            generation: 0,
            mean_p_c: 0.5,
            mean_p_ac: 0.5,
            coop_frequency: 0.5,
            parent_index: parents,
            mutations,
        }
    }

    #[test]
    fn dilemma_bound_examples() {
        assert_eq!(dilemma_bounds(4).unwrap(), (1.0, 5.0));
        assert_eq!(dilemma_bounds(1).unwrap(), (1.0, 2.0));
        assert_eq!(dilemma_bounds(9).unwrap(), (1.0, 10.0));
        assert!(dilemma_bounds(0).is_err());
    }

    #[test]
    fn critical_r_examples() {
        assert_eq!(predicted_critical_r(4, 0.0).unwrap(), 5.0);
        assert_eq!(predicted_critical_r(4, 1.0).unwrap(), 1.0);
        assert_eq!(predicted_critical_r(4, 0.25).unwrap(), 2.5);
        assert!(predicted_critical_r(4, 1.5).is_err());
        assert!(predicted_critical_r(0, 0.5).is_err());
    }

    #[test]
    fn single_hop_lod() {
        let initial: Vec<Genome> = (0..10).map(|i| g(i as f64 / 10.0)).collect();
        let rec = record(vec![7; 10], vec![]);
        let lod = reconstruct_lod(&initial, &[rec], 3, DEFAULT_TRUNCATION).unwrap();
        assert_eq!(lod.genomes, vec![g(0.7), g(0.7)]);
    }

    #[test]
    fn mutation_appears_on_lod_from_origin() {
        // individual 2 mutates in generation 1 and every later individual descends from it
        let initial = vec![g(0.1); 4];
        let mutant = g(0.9);
        let records = vec![
            record(vec![0, 1, 2, 3], vec![]),
            record(
                vec![0, 1, 2, 3],
                vec![Mutation {
                    index: 2,
                    genome: mutant,
                }],
            ),
            record(vec![2, 2, 2, 2], vec![]),
            record(vec![1, 0, 3, 2], vec![]),
        ];
        let lod = reconstruct_lod(&initial, &records, 0, DEFAULT_TRUNCATION).unwrap();
        assert_eq!(lod.len(), 5);
        assert_eq!(lod.genomes, vec![g(0.1), g(0.1), mutant, mutant, mutant]);
    }

    #[test]
    fn broken_links_are_integrity_errors() {
        let initial = vec![g(0.1); 4];
        let short = record(vec![0, 1], vec![]);
        assert!(matches!(
            reconstruct_lod(&initial, &[short], 0, 0.25),
            Err(Error::Integrity(_))
        ));
        let dangling = record(vec![9, 9, 9, 9], vec![]);
        assert!(matches!(
            reconstruct_lod(&initial, &[dangling], 0, 0.25),
            Err(Error::Integrity(_))
        ));
        assert!(matches!(
            reconstruct_lod(&initial, &[], 4, 0.25),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn lod_statistics() {
        let lod = LodSeries::new(vec![g(0.3); 100], 0.25).unwrap();
        assert!((lod_statistic(&lod, DEFAULT_LOD_WINDOW).unwrap() - 0.3).abs() < 1e-12);
        assert!(lod_statistic(&lod, (0.8, 0.9)).is_err());

        let t = 1000;
        let ramp = LodSeries::new((0..t).map(|i| g(i as f64 / t as f64)).collect(), 0.25).unwrap();
        let v = lod_statistic(&ramp, (0.5, 0.75)).unwrap();
        // mean of i/T for i in [500, 750)
        assert!((v - 0.6245).abs() < 1e-9, "{v}");
        assert!((v - 0.625).abs() < 1e-3);
    }

    #[test]
    fn crossing_examples() {
        let c = ResponseCurve::new(vec![(4.75, 0.4), (5.0, 0.6)]).unwrap();
        assert!((extract_critical_r(&c, 0.5).unwrap().unwrap() - 4.875).abs() < 1e-12);

        let below = ResponseCurve::new(vec![(1.0, 0.1), (2.0, 0.2), (3.0, 0.49)]).unwrap();
        assert_eq!(extract_critical_r(&below, 0.5).unwrap(), None);

        let hit = ResponseCurve::new(vec![(2.0, 0.2), (3.0, 0.5), (4.0, 0.9)]).unwrap();
        assert_eq!(extract_critical_r(&hit, 0.5).unwrap(), Some(3.0));
    }

    #[test]
    fn curve_validation() {
        assert!(ResponseCurve::new(vec![(2.0, 0.1), (1.0, 0.2)]).is_err());
        assert!(ResponseCurve::new(vec![(1.0, 0.1), (1.0, 0.2)]).is_err());
        assert!(ResponseCurve::new(vec![(1.0, 1.2)]).is_err());
        let one = ResponseCurve::new(vec![(1.0, 0.2)]).unwrap();
        assert!(extract_critical_r(&one, 0.5).is_err());
    }

    #[test]
    fn tail_average() {
        let mut records: Vec<GenerationRecord> = (0..20).map(|_| record(vec![], vec![])).collect();
        for (i, r) in records.iter_mut().enumerate() {
            r.mean_p_c = i as f64 / 20.0;
        }
        let s = convergence_summary(&records, 0.1).unwrap();
        assert!((s.mean_p_c - (18.0 + 19.0) / 40.0).abs() < 1e-12);
        assert!(convergence_summary(&[], 0.1).is_none());
    }
}
