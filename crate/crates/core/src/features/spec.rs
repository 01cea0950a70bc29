//! Feature-set specifications and their textual form.
//!
//! A spec is a union of atoms joined by `+`:
//!
//! ```text
//! F3+F10+rateP(prev,0.1)
//! Fall+unigrams
//! cca(4)
//! rateS(prev,500)
//! ```
//!
//! `Fall` expands to `F1`..`F10`. `cca(k)` stands for the `k`-component
//! fusion of all statistical features with the unigram features.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::rate::{RateParams, RateScale, VolumeBaseline};
use super::FeatureError;

pub const CCA_COMPONENTS: [usize; 4] = [1, 2, 4, 8];

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum Atom {
    Stat(u8),
    Unigrams,
    Cca(usize),
    Rate(RateParams),
}

impl Atom {
    fn sort_key(&self) -> (u8, u64, u64, u64) {
        match *self {
            Atom::Stat(i) => (0, u64::from(i), 0, 0),
            Atom::Unigrams => (1, 0, 0, 0),
            Atom::Cca(k) => (2, k as u64, 0, 0),
            Atom::Rate(p) => {
                let base = p.baseline as u64;
                match p.scale {
                    RateScale::Static(d) => (3, base, u64::from(d), 0),
                    RateScale::Proportional(t) => (4, base, t.to_bits(), 0),
                }
            }
        }
    }

    fn validate(&self) -> Result<(), FeatureError> {
        match *self {
            Atom::Stat(i) if !(1..=10).contains(&i) => {
                Err(FeatureError::Spec(format!("statistical set F{i} does not exist")))
            }
            Atom::Cca(k) if !CCA_COMPONENTS.contains(&k) => {
                Err(FeatureError::Spec(format!("cca components must be one of 1, 2, 4, 8; got {k}")))
            }
            Atom::Rate(p) => p.validate(),
            _ => Ok(()),
        }
    }

    /// Identifier prefix of the features this atom selects. `None` for CCA,
    /// whose features are produced per training fold.
    pub fn feature_prefix(&self) -> Option<String> {
        match self {
            Atom::Stat(i) => Some(format!("F{i}.")),
            Atom::Unigrams => Some("uni.".to_string()),
            Atom::Cca(_) => None,
            Atom::Rate(p) => Some(format!("{}.", p.feature_prefix())),
        }
    }
}

impl PartialEq for Atom {
    fn eq(&self, other: &Self) -> bool {
        self.sort_key() == other.sort_key()
    }
}

impl Eq for Atom {}

impl PartialOrd for Atom {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Atom {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Stat(i) => write!(f, "F{i}"),
            Atom::Unigrams => f.write_str("unigrams"),
            Atom::Cca(k) => write!(f, "cca({k})"),
            Atom::Rate(p) => match p.scale {
                RateScale::Static(d) => write!(f, "rateS({},{})", p.baseline, d),
                RateScale::Proportional(t) => write!(f, "rateP({},{})", p.baseline, t),
            },
        }
    }
}

/// A nonempty union of feature atoms, kept sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FeatureSetSpec {
    atoms: Vec<Atom>,
}

impl FeatureSetSpec {
    pub fn new(atoms: impl IntoIterator<Item = Atom>) -> Result<Self, FeatureError> {
        let mut atoms: Vec<Atom> = atoms.into_iter().collect();
        if atoms.is_empty() {
            return Err(FeatureError::Spec("feature set is empty".into()));
        }
        for a in &atoms {
            a.validate()?;
        }
        atoms.sort();
        atoms.dedup();
        Ok(Self { atoms })
    }

    pub fn stat(i: u8) -> Self {
        Self::new([Atom::Stat(i)]).expect("valid statistical set")
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn union(&self, other: &FeatureSetSpec) -> FeatureSetSpec {
        Self::new(self.atoms.iter().chain(&other.atoms).copied()).expect("union of valid specs")
    }

    pub fn cca_components(&self) -> Option<usize> {
        self.atoms.iter().find_map(|a| match a {
            Atom::Cca(k) => Some(*k),
            _ => None,
        })
    }

    pub fn uses_unigrams(&self) -> bool {
        self.atoms.iter().any(|a| matches!(a, Atom::Unigrams | Atom::Cca(_)))
    }

    pub fn uses_stats(&self) -> bool {
        self.atoms.iter().any(|a| matches!(a, Atom::Stat(_) | Atom::Cca(_)))
    }

    pub fn rates(&self) -> impl Iterator<Item = RateParams> + '_ {
        self.atoms.iter().filter_map(|a| match a {
            Atom::Rate(p) => Some(*p),
            _ => None,
        })
    }

    /// Prefixes of the precomputed features this spec selects.
    pub fn feature_prefixes(&self) -> Vec<String> {
        self.atoms.iter().filter_map(Atom::feature_prefix).collect()
    }

    /// Whether a precomputed feature identifier belongs to this spec.
    pub fn selects(&self, feature: &str) -> bool {
        self.atoms.iter().filter_map(Atom::feature_prefix).any(|p| feature.starts_with(&p))
    }
}

impl fmt::Display for FeatureSetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

fn parse_args(body: &str, atom: &str) -> Result<Vec<String>, FeatureError> {
    let inner = body
        .strip_prefix('(')
        .and_then(|b| b.strip_suffix(')'))
        .ok_or_else(|| FeatureError::Spec(format!("{atom}: expected parenthesized arguments")))?;
    Ok(inner.split(',').map(|s| s.trim().to_string()).collect())
}

fn parse_atoms(token: &str) -> Result<Vec<Atom>, FeatureError> {
    let token = token.trim();
    let lower = token.to_ascii_lowercase();
    let bad = || FeatureError::Spec(format!("unknown feature set token {token:?}"));
    if lower == "fall" {
        return Ok((1..=10).map(Atom::Stat).collect());
    }
    if lower == "unigrams" || lower == "uni" {
        return Ok(vec![Atom::Unigrams]);
    }
    if let Some(num) = lower.strip_prefix('f') {
        let i: u8 = num.parse().map_err(|_| bad())?;
        return Ok(vec![Atom::Stat(i)]);
    }
    if let Some(rest) = lower.strip_prefix("cca") {
        let args = parse_args(rest, "cca")?;
        let [k] = args.as_slice() else { return Err(bad()) };
        let k = k.parse().map_err(|_| bad())?;
        return Ok(vec![Atom::Cca(k)]);
    }
    for (prefix, proportional) in [("rates", false), ("ratep", true)] {
        if let Some(rest) = lower.strip_prefix(prefix) {
            let args = parse_args(rest, prefix)?;
            let [base, width] = args.as_slice() else { return Err(bad()) };
            let baseline = VolumeBaseline::parse(base)
                .ok_or_else(|| FeatureError::Spec(format!("unknown volume baseline {base:?}")))?;
            let params = if proportional {
                RateParams::proportional(baseline, width.parse().map_err(|_| bad())?)
            } else {
                RateParams::static_width(baseline, width.parse().map_err(|_| bad())?)
            };
            return Ok(vec![Atom::Rate(params)]);
        }
    }
    Err(bad())
}

impl FromStr for FeatureSetSpec {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut atoms = Vec::new();
        for token in s.split('+') {
            if token.trim().is_empty() {
                return Err(FeatureError::Spec(format!("empty term in feature set {s:?}")));
            }
            atoms.extend(parse_atoms(token)?);
        }
        Self::new(atoms)
    }
}

impl TryFrom<String> for FeatureSetSpec {
    type Error = FeatureError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<FeatureSetSpec> for String {
    fn from(s: FeatureSetSpec) -> Self {
        s.to_string()
    }
}

/// The ten statistical sets and their 45 pairwise unions.
pub fn statistical_feature_sets() -> Vec<FeatureSetSpec> {
    let mut out: Vec<FeatureSetSpec> = (1..=10).map(FeatureSetSpec::stat).collect();
    for i in 1..=10u8 {
        for j in (i + 1)..=10 {
            out.push(FeatureSetSpec::new([Atom::Stat(i), Atom::Stat(j)]).expect("valid pair"));
        }
    }
    out
}

pub const RATE_P_THETAS: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

/// Twitter-based sets and the named unions used in the accuracy tables:
/// all statistical features, unigrams, CCA with 1/2/4/8 components,
/// `rateS(prev,500)`, every `rateP` variant, and the three best per-task
/// unions.
pub fn twitter_feature_sets() -> Vec<FeatureSetSpec> {
    let parse = |s: &str| s.parse::<FeatureSetSpec>().expect("valid built-in spec");
    let mut out = vec![parse("Fall"), parse("unigrams")];
    out.extend(CCA_COMPONENTS.iter().map(|k| parse(&format!("cca({k})"))));
    out.push(parse("rateS(prev,500)"));
    for base in ["prev", "prevavg"] {
        for theta in RATE_P_THETAS {
            out.push(parse(&format!("rateP({base},{theta})")));
        }
    }
    out.push(parse("F5+F9+rateP(prev,0.2)"));
    out.push(parse("F3+F10+rateP(prev,0.1)"));
    out.push(parse("F3+F4+rateS(prev,200)"));
    out
}

/// Every feature set used in experiments: the 55 statistical sets followed
/// by [`twitter_feature_sets`].
pub fn enumerate_feature_sets() -> Vec<FeatureSetSpec> {
    let mut out = statistical_feature_sets();
    out.extend(twitter_feature_sets());
    out
}
