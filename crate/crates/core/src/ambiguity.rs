//! Ambiguity sets built from data: MLE fits that survive a K-S test.

use serde::Serialize;
use thiserror::Error;

use crate::stats::{
    fit_mle, ks_accepts_stat, ks_critical_coefficient, Distribution, Family, FittedDistribution,
    StatsError,
};

#[derive(Debug, Error)]
pub enum AmbiguityError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("every family failed to fit: {}", format_failures(.0))]
    AllFitsFailed(Vec<(Family, String)>),
}

fn format_failures(failures: &[(Family, String)]) -> String {
    failures
        .iter()
        .map(|(f, why)| format!("{f}: {why}"))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Where the data behind a set came from.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Provenance {
    pub dataset: String,
    pub subsample_fraction: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AmbiguitySet {
    /// Accepted fits in family-list order.
    pub members: Vec<FittedDistribution>,
    /// No fit passed the test and the smallest-statistic fit was kept.
    pub forced: bool,
    /// Fits the test rejected.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rejected: Vec<FittedDistribution>,
    /// Families whose fit failed, with the reason.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<(Family, String)>,
    pub level: f64,
    pub source: Provenance,
}

impl AmbiguitySet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn distributions(&self) -> Vec<Distribution> {
        self.members
            .iter()
            .map(|f| f.distribution.clone())
            .collect()
    }

    pub fn contains_family(&self, family: Family) -> bool {
        self.members.iter().any(|f| f.family() == family)
    }

    /// Smallest K-S statistic over every successful fit, accepted or not.
    pub fn best_fit(&self) -> &FittedDistribution {
        smallest_ks(self.members.iter().chain(&self.rejected))
            .expect("a set always holds at least one fit")
    }

    pub fn with_source(mut self, source: Provenance) -> Self {
        self.source = source;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ambiguity set serialization cannot fail")
    }
}

fn smallest_ks<'a, I: Iterator<Item = &'a FittedDistribution>>(
    fits: I,
) -> Option<&'a FittedDistribution> {
    // Ties keep the earlier fit; callers pass fits in family-list order.
    fits.fold(None, |best: Option<&FittedDistribution>, f| match best {
        Some(b) if b.ks_stat <= f.ks_stat => Some(b),
        _ => Some(f),
    })
}

/// Fitted candidates and the families that could not be fitted, with reasons.
type Fits = (Vec<FittedDistribution>, Vec<(Family, String)>);

fn fit_all(sample: &[f64], families: &[Family]) -> Result<Fits, AmbiguityError> {
    if sample.len() < 10 {
        return Err(AmbiguityError::Invalid(format!(
            "at least 10 observations are needed, got {}",
            sample.len()
        )));
    }
    if families.is_empty() {
        return Err(AmbiguityError::Invalid(
            "no candidate families given".into(),
        ));
    }
    let mut seen = Vec::new();
    let mut fits = Vec::new();
    let mut failures = Vec::new();
    for &family in families {
        if seen.contains(&family) {
            continue;
        }
        seen.push(family);
        match fit_mle(family, sample) {
            Ok(f) if f.ks_stat.is_finite() => fits.push(f),
            Ok(_) => failures.push((family, "non-finite K-S statistic".to_string())),
            Err(e) => failures.push((family, e.to_string())),
        }
    }
    if fits.is_empty() {
        return Err(AmbiguityError::AllFitsFailed(failures));
    }
    Ok((fits, failures))
}

/// Fits every family and keeps those the K-S test does not reject at
/// `level`. If all are rejected the fit with the smallest statistic is kept
/// and the set is marked forced.
pub fn build_ambiguity_set(
    sample: &[f64],
    families: &[Family],
    level: f64,
) -> Result<AmbiguitySet, AmbiguityError> {
    let coef = ks_critical_coefficient(level)?;
    let (fits, failures) = fit_all(sample, families)?;
    let (mut members, mut rejected): (Vec<_>, Vec<_>) = fits
        .into_iter()
        .partition(|f| ks_accepts_stat(f.ks_stat, sample.len(), coef));
    let forced = members.is_empty();
    if forced {
        let best = smallest_ks(rejected.iter())
            .expect("at least one fit")
            .clone();
        rejected.retain(|f| f.family() != best.family());
        members.push(best);
    }
    Ok(AmbiguitySet {
        members,
        forced,
        rejected,
        failures,
        level,
        source: Provenance::default(),
    })
}

/// The fit with the smallest K-S statistic; ties go to the earlier family.
pub fn best_fit(sample: &[f64], families: &[Family]) -> Result<FittedDistribution, AmbiguityError> {
    let (fits, _) = fit_all(sample, families)?;
    Ok(smallest_ks(fits.iter()).expect("at least one fit").clone())
}

/// True when the best fit's family differs from the data's true family.
pub fn misspecification_indicator(best: &FittedDistribution, truth: Family) -> bool {
    best.family() != truth
}

/// Parses one value per line, ignoring blank lines, `#` comments and a
/// single non-numeric header line. The first comma-separated field of each
/// line is used.
pub fn parse_sample_text(text: &str) -> Result<Vec<f64>, AmbiguityError> {
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let field = line.split(',').next().unwrap_or("").trim();
        if field.is_empty() || field.starts_with('#') {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(v) => {
                return Err(AmbiguityError::Invalid(format!(
                    "line {}: non-finite value {v}",
                    idx + 1
                )))
            }
            Err(_) if values.is_empty() && idx == 0 => continue,
            Err(_) => {
                return Err(AmbiguityError::Invalid(format!(
                    "line {}: not a number: {field:?}",
                    idx + 1
                )))
            }
        }
    }
    if values.is_empty() {
        return Err(AmbiguityError::Invalid("no numeric values found".into()));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::normal_quantile;

    const QUEUE_FAMILIES: [Family; 3] = [Family::Lognormal, Family::Gamma, Family::Weibull];

    fn lognormal_grid(n: usize, mu: f64, sigma: f64) -> Vec<f64> {
        (0..n)
            .map(|i| (mu + sigma * normal_quantile((i as f64 + 0.5) / n as f64)).exp())
            .collect()
    }

    #[test]
    fn grid_sample_accepts_its_own_family() {
        let sample = lognormal_grid(200, -0.5, 1.0);
        let set = build_ambiguity_set(&sample, &QUEUE_FAMILIES, 0.05).unwrap();
        assert!(set.contains_family(Family::Lognormal));
        assert!(!set.forced);
        assert_eq!(set.best_fit().family(), Family::Lognormal);
        assert!(!misspecification_indicator(
            set.best_fit(),
            Family::Lognormal
        ));
    }

    #[test]
    fn single_family_best_fit() {
        let sample = lognormal_grid(50, 0.0, 0.5);
        assert_eq!(
            best_fit(&sample, &[Family::Gamma]).unwrap().family(),
            Family::Gamma
        );
    }

    #[test]
    fn total_rejection_forces_the_smallest_statistic() {
        // Bimodal data that no unimodal family fits.
        let mut sample = vec![1.0; 100];
        sample.extend(vec![100.0; 100]);
        for (i, v) in sample.iter_mut().enumerate() {
            *v += i as f64 * 1e-3;
        }
        let set =
            build_ambiguity_set(&sample, &[Family::Exponential, Family::Lognormal], 0.05).unwrap();
        assert!(set.forced);
        assert_eq!(set.len(), 1);
        assert_eq!(&set.members[0], set.best_fit());
    }

    #[test]
    fn all_failures_carry_diagnostics() {
        let sample: Vec<f64> = (0..20).map(|i| i as f64 - 5.0).collect();
        match build_ambiguity_set(&sample, &[Family::Lognormal, Family::Gamma], 0.05) {
            Err(AmbiguityError::AllFitsFailed(f)) => assert_eq!(f.len(), 2),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn small_samples_and_bad_levels_are_rejected() {
        assert!(build_ambiguity_set(&[1.0; 5], &QUEUE_FAMILIES, 0.05).is_err());
        assert!(build_ambiguity_set(&lognormal_grid(20, 0.0, 1.0), &QUEUE_FAMILIES, 0.07).is_err());
    }

    #[test]
    fn json_lists_members() {
        let set =
            build_ambiguity_set(&lognormal_grid(100, 0.0, 1.0), &QUEUE_FAMILIES, 0.05).unwrap();
        let v: serde_json::Value = serde_json::from_str(&set.to_json()).unwrap();
        let first = &v["members"][0];
        assert!(first["family"].is_string());
        assert!(first["params"].is_object());
        assert!(first["ks_stat"].is_number());
    }

    #[test]
    fn text_parsing() {
        assert_eq!(
            parse_sample_text("x\n1.5\n\n2,ignored\n# note\n3\n").unwrap(),
            vec![1.5, 2.0, 3.0]
        );
        assert!(parse_sample_text("1\nfoo\n").is_err());
        assert!(parse_sample_text("").is_err());
    }
}
