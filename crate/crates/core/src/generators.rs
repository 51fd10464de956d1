//! Synthetic stream generation with parameterized abrupt, gradual, and mixed
//! concept drift, label noise, and a Monte-Carlo concept-distance oracle.
//!
//! Two generator families are provided. SEA draws three features uniformly
//! on [0,10] and labels an instance positive when the sum of the first two
//! features is at or below a threshold; drift switches thresholds. The
//! rotating hyperplane draws ten features uniformly on [0,1] and labels by
//! the sign of a linear form; drift rotates the weight vector. Gradual drift
//! mixes old and new concepts along a linear ramp: SEA samples which concept
//! labels each instance, the hyperplane interpolates its weights (and
//! offset) and renormalizes, so the boundary turns smoothly.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::stream::{Instance, StreamSchema};

pub const SEA_FEATURES: usize = 3;
pub const HYPERPLANE_FEATURES: usize = 10;

/// Sum-threshold concept on the first two SEA features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeaConcept {
    pub threshold: f64,
}

impl SeaConcept {
    pub fn new(threshold: f64) -> Self {
        assert!(
            threshold > 0.0 && threshold < 20.0,
            "SEA threshold must lie in (0, 20)"
        );
        SeaConcept { threshold }
    }
}

/// Linear separator w.x >= offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneConcept {
    pub weights: Vec<f64>,
    pub offset: f64,
}

impl HyperplaneConcept {
    pub fn new(weights: Vec<f64>, offset: f64) -> Self {
        assert!(
            weights.iter().any(|w| *w != 0.0),
            "weight vector must not be all-zero"
        );
        HyperplaneConcept { weights, offset }
    }

    /// Offset that balances the classes under uniform [0,1] features.
    pub fn balanced_offset(weights: &[f64]) -> f64 {
        weights.iter().sum::<f64>() * 0.5
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Concept {
    Sea(SeaConcept),
    Hyperplane(HyperplaneConcept),
}

impl Concept {
    pub fn family(&self) -> &'static str {
        match self {
            Concept::Sea(_) => "sea",
            Concept::Hyperplane(_) => "hyperplane",
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Concept::Sea(_) => SEA_FEATURES,
            Concept::Hyperplane(c) => c.weights.len(),
        }
    }

    fn label(&self, x: &[f64]) -> Result<usize> {
        match self {
            Concept::Sea(c) => Ok(sea_label(x, c)),
            Concept::Hyperplane(c) => hyperplane_label(x, c),
        }
    }
}

/// Positive (class 1) iff x0 + x1 <= threshold; the third feature is
/// irrelevant by construction. Boundary points count as positive.
pub fn sea_label(x: &[f64], concept: &SeaConcept) -> usize {
    usize::from(x[0] + x[1] <= concept.threshold)
}

/// Positive (class 1) iff w.x >= offset. Boundary points count as positive.
pub fn hyperplane_label(x: &[f64], concept: &HyperplaneConcept) -> Result<usize> {
    if x.len() != concept.weights.len() {
        return Err(Error::DimensionMismatch {
            expected: concept.weights.len(),
            found: x.len(),
        });
    }
    let dot: f64 = x.iter().zip(&concept.weights).map(|(a, b)| a * b).sum();
    Ok(usize::from(dot >= concept.offset))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftKind {
    None,
    Abrupt,
    Gradual,
    Mixed,
}

/// One concept transition. `window == 1` is a step at `center`; larger
/// windows ramp linearly across [center - window/2, center + window/2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub center: usize,
    pub window: usize,
    pub to: Concept,
}

impl Transition {
    fn start(&self) -> usize {
        self.center.saturating_sub(self.window / 2)
    }

    fn end(&self) -> usize {
        self.start() + self.window
    }
}

/// Probability of sampling the new concept at instance `t` for a transition
/// centered at `center` over `window` instances.
pub fn mix_weight(t: usize, center: usize, window: usize) -> f64 {
    if window <= 1 {
        return if t >= center { 1.0 } else { 0.0 };
    }
    let start = center.saturating_sub(window / 2);
    if t < start {
        0.0
    } else {
        (((t - start) as f64) / (window as f64)).min(1.0)
    }
}

/// Declarative description of the drift injected into a generated stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub kind: DriftKind,
    /// Ordinal 1..=4, 1 lowest. 0 for hand-built specs outside the ladders.
    pub magnitude_level: u8,
    /// Concept in effect before any transition.
    pub base: Concept,
    pub transitions: Vec<Transition>,
}

impl DriftSpec {
    pub fn none(base: Concept) -> Self {
        DriftSpec {
            kind: DriftKind::None,
            magnitude_level: 0,
            base,
            transitions: Vec::new(),
        }
    }

    pub fn abrupt(center: usize, from: Concept, to: Concept, magnitude_level: u8) -> Self {
        DriftSpec {
            kind: DriftKind::Abrupt,
            magnitude_level,
            base: from,
            transitions: vec![Transition {
                center,
                window: 1,
                to,
            }],
        }
    }

    pub fn gradual(
        center: usize,
        window: usize,
        from: Concept,
        to: Concept,
        magnitude_level: u8,
    ) -> Self {
        DriftSpec {
            kind: DriftKind::Gradual,
            magnitude_level,
            base: from,
            transitions: vec![Transition { center, window, to }],
        }
    }

    pub fn mixed(base: Concept, transitions: Vec<Transition>, magnitude_level: u8) -> Self {
        DriftSpec {
            kind: DriftKind::Mixed,
            magnitude_level,
            base,
            transitions,
        }
    }

    /// Ground-truth drift midpoints.
    pub fn drift_positions(&self) -> Vec<usize> {
        self.transitions.iter().map(|t| t.center).collect()
    }

    /// Mixing weight of the (single) transition at instance `t`; 0 for
    /// no-drift specs.
    pub fn mix_weight_at(&self, t: usize) -> f64 {
        match self.transitions.as_slice() {
            [] => 0.0,
            [tr] => mix_weight(t, tr.center, tr.window),
            _ => panic!("mix_weight_at is defined for single-transition specs"),
        }
    }

    pub fn validate(&self, stream_len: usize) -> Result<()> {
        let fam = self.base.family();
        for tr in &self.transitions {
            if tr.to.family() != fam {
                return Err(Error::InvalidDriftSpec(
                    "transitions must stay within one concept family".into(),
                ));
            }
            if tr.window == 0 {
                return Err(Error::InvalidDriftSpec("transition window is 0".into()));
            }
            if tr.end() > stream_len || tr.center >= stream_len {
                return Err(Error::InvalidDriftSpec(format!(
                    "transition interval [{}, {}) exceeds stream length {}",
                    tr.start(),
                    tr.end(),
                    stream_len
                )));
            }
        }
        for pair in self.transitions.windows(2) {
            if pair[1].start() < pair[0].end() {
                return Err(Error::InvalidDriftSpec(
                    "transition intervals overlap or are out of order".into(),
                ));
            }
        }
        match self.kind {
            DriftKind::None => {
                if !self.transitions.is_empty() {
                    return Err(Error::InvalidDriftSpec(
                        "kind none admits no transitions".into(),
                    ));
                }
            }
            DriftKind::Abrupt => {
                if self.transitions.len() != 1 || self.transitions[0].window != 1 {
                    return Err(Error::InvalidDriftSpec(
                        "abrupt drift is one transition with window 1".into(),
                    ));
                }
            }
            DriftKind::Gradual => {
                if self.transitions.len() != 1 || self.transitions[0].window < 2 {
                    return Err(Error::InvalidDriftSpec(
                        "gradual drift is one transition with window >= 2".into(),
                    ));
                }
            }
            DriftKind::Mixed => {
                let abrupt = self.transitions.iter().filter(|t| t.window == 1).count();
                let gradual = self.transitions.iter().filter(|t| t.window >= 2).count();
                if abrupt != 1 || gradual < 1 {
                    return Err(Error::InvalidDriftSpec(
                        "mixed drift needs exactly one abrupt and >= 1 gradual transitions"
                            .into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Label-flip noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub label_flip_rate: f64,
}

impl NoiseSpec {
    pub fn new(label_flip_rate: f64) -> Self {
        assert!((0.0..=1.0).contains(&label_flip_rate));
        NoiseSpec { label_flip_rate }
    }

    pub fn none() -> Self {
        NoiseSpec {
            label_flip_rate: 0.0,
        }
    }
}

/// The four canonical SEA thresholds, in generator function order.
pub const SEA_THRESHOLDS: [f64; 4] = [8.0, 9.0, 7.0, 9.5];

/// Abrupt SEA concept pairs ranked by computed concept distance:
/// 0.04625, 0.085, 0.13125, 0.20625 for levels 1..=4.
pub fn sea_magnitude_pair(level: u8) -> (SeaConcept, SeaConcept) {
    let (a, b) = match level {
        1 => (9.0, 9.5),
        2 => (8.0, 9.0),
        3 => (8.0, 9.5),
        4 => (7.0, 9.5),
        _ => panic!("magnitude level must be 1..=4"),
    };
    (SeaConcept::new(a), SeaConcept::new(b))
}

/// Base hyperplane direction (all-ones, unit length) and the orthogonal
/// direction used for rotations.
fn hyperplane_basis(d: usize) -> (Vec<f64>, Vec<f64>) {
    let s = (d as f64).sqrt();
    let u = vec![1.0 / s; d];
    let v: Vec<f64> = (0..d)
        .map(|i| if i % 2 == 0 { 1.0 / s } else { -1.0 / s })
        .collect();
    (u, v)
}

fn rotated_hyperplane(degrees: f64, d: usize) -> HyperplaneConcept {
    let (u, v) = hyperplane_basis(d);
    let th = degrees.to_radians();
    let w: Vec<f64> = u
        .iter()
        .zip(&v)
        .map(|(a, b)| th.cos() * a + th.sin() * b)
        .collect();
    let offset = HyperplaneConcept::balanced_offset(&w);
    HyperplaneConcept::new(w, offset)
}

/// Rotation angles per magnitude level; disagreement rates are roughly
/// 0.085, 0.168, 0.249, 0.331 under uniform features.
pub const HYPERPLANE_ANGLES: [f64; 4] = [15.0, 30.0, 45.0, 60.0];

pub fn hyperplane_magnitude_pair(level: u8) -> (HyperplaneConcept, HyperplaneConcept) {
    assert!((1..=4).contains(&level), "magnitude level must be 1..=4");
    let from = rotated_hyperplane(0.0, HYPERPLANE_FEATURES);
    let to = rotated_hyperplane(
        HYPERPLANE_ANGLES[level as usize - 1],
        HYPERPLANE_FEATURES,
    );
    (from, to)
}

/// Default abrupt drift spec at the given magnitude level, centered at
/// `center`.
pub fn abrupt_spec(family: Family, center: usize, level: u8) -> DriftSpec {
    match family {
        Family::Sea => {
            let (a, b) = sea_magnitude_pair(level);
            DriftSpec::abrupt(center, Concept::Sea(a), Concept::Sea(b), level)
        }
        Family::Hyperplane => {
            let (a, b) = hyperplane_magnitude_pair(level);
            DriftSpec::abrupt(center, Concept::Hyperplane(a), Concept::Hyperplane(b), level)
        }
    }
}

/// Default gradual drift spec over `window` instances centered at `center`.
pub fn gradual_spec(family: Family, center: usize, window: usize, level: u8) -> DriftSpec {
    match family {
        Family::Sea => {
            let (a, b) = sea_magnitude_pair(level);
            DriftSpec::gradual(center, window, Concept::Sea(a), Concept::Sea(b), level)
        }
        Family::Hyperplane => {
            let (a, b) = hyperplane_magnitude_pair(level);
            DriftSpec::gradual(
                center,
                window,
                Concept::Hyperplane(a),
                Concept::Hyperplane(b),
                level,
            )
        }
    }
}

/// Default SEA mixed-drift ladder: a gradual drift, then an abrupt switch at
/// n/2 whose size grows with the level, then a second gradual drift.
pub fn mixed_spec(n: usize, level: u8) -> DriftSpec {
    assert!((1..=4).contains(&level), "magnitude level must be 1..=4");
    let abrupt_to = [9.5, 8.0, 7.0, 5.0][level as usize - 1];
    let final_to = if abrupt_to <= 9.0 {
        abrupt_to + 1.0
    } else {
        abrupt_to - 1.0
    };
    let w = n / 5;
    DriftSpec::mixed(
        Concept::Sea(SeaConcept::new(8.0)),
        vec![
            Transition {
                center: n / 4,
                window: w,
                to: Concept::Sea(SeaConcept::new(9.0)),
            },
            Transition {
                center: n / 2,
                window: 1,
                to: Concept::Sea(SeaConcept::new(abrupt_to)),
            },
            Transition {
                center: 3 * n / 4,
                window: w,
                to: Concept::Sea(SeaConcept::new(final_to)),
            },
        ],
        level,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Sea,
    Hyperplane,
}

impl Family {
    pub fn n_features(&self) -> usize {
        match self {
            Family::Sea => SEA_FEATURES,
            Family::Hyperplane => HYPERPLANE_FEATURES,
        }
    }

    fn feature_range(&self) -> (f64, f64) {
        match self {
            Family::Sea => (0.0, 10.0),
            Family::Hyperplane => (0.0, 1.0),
        }
    }

    pub fn of(concept: &Concept) -> Family {
        match concept {
            Concept::Sea(_) => Family::Sea,
            Concept::Hyperplane(_) => Family::Hyperplane,
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::Sea => write!(f, "sea"),
            Family::Hyperplane => write!(f, "hyperplane"),
        }
    }
}

fn lerp_concept(from: &HyperplaneConcept, to: &HyperplaneConcept, w: f64) -> HyperplaneConcept {
    let weights: Vec<f64> = from
        .weights
        .iter()
        .zip(&to.weights)
        .map(|(a, b)| a + (b - a) * w)
        .collect();
    let offset = from.offset + (to.offset - from.offset) * w;
    let norm = weights.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return HyperplaneConcept {
            weights: to.weights.clone(),
            offset: to.offset,
        };
    }
    HyperplaneConcept {
        weights: weights.iter().map(|x| x / norm).collect(),
        offset: offset / norm,
    }
}

/// Generate a stream of `n` instances under the given drift spec and noise.
/// Fully deterministic given the seed. Returns the schema, the instances,
/// and the ground-truth drift midpoints.
pub fn generate_stream(
    n: usize,
    spec: &DriftSpec,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<(StreamSchema, Vec<Instance>, Vec<usize>)> {
    if n == 0 {
        return Err(Error::EmptyStream);
    }
    spec.validate(n)?;
    let family = Family::of(&spec.base);
    let d = family.n_features();
    let (lo, hi) = family.feature_range();
    let mut rng = rng::derive(seed, "generate", 0);
    let mut instances = Vec::with_capacity(n);

    // Concepts resolved before each transition: resolved[i] is in effect
    // before transitions[i] starts.
    let mut resolved = vec![spec.base.clone()];
    for tr in &spec.transitions {
        resolved.push(tr.to.clone());
    }

    for t in 0..n {
        let features: Vec<f64> = (0..d).map(|_| rng.gen_range(lo..hi)).collect();
        // Index of the last transition that has started by t.
        let mut active: Option<usize> = None;
        for (i, tr) in spec.transitions.iter().enumerate() {
            if t >= tr.start() {
                active = Some(i);
            }
        }
        let concept_u: f64 = rng.gen();
        let label = match active {
            None => spec.base.label(&features)?,
            Some(i) => {
                let tr = &spec.transitions[i];
                let w = mix_weight(t, tr.center, tr.window);
                match (&resolved[i], &tr.to) {
                    (Concept::Hyperplane(a), Concept::Hyperplane(b)) => {
                        let eff = lerp_concept(a, b, w);
                        hyperplane_label(&features, &eff)?
                    }
                    (prev, next) => {
                        if concept_u < w {
                            next.label(&features)?
                        } else {
                            prev.label(&features)?
                        }
                    }
                }
            }
        };
        let noise_u: f64 = rng.gen();
        let label = if noise_u < noise.label_flip_rate {
            1 - label
        } else {
            label
        };
        instances.push(Instance { features, label });
    }
    let schema = StreamSchema::numeric(d, 2);
    Ok((schema, instances, spec.drift_positions()))
}

/// Monte-Carlo estimate of the label-disagreement probability between two
/// concepts of the same family under that family's feature distribution.
pub fn concept_distance(a: &Concept, b: &Concept, n_samples: usize, seed: u64) -> Result<f64> {
    if a.family() != b.family() {
        return Err(Error::FamilyMismatch);
    }
    assert!(n_samples >= 1);
    let family = Family::of(a);
    let d = a.n_features().max(b.n_features());
    let (lo, hi) = family.feature_range();
    let mut rng = rng::derive(seed, "concept-distance", 0);
    let mut disagree = 0usize;
    let mut x = vec![0.0; d];
    for _ in 0..n_samples {
        for v in x.iter_mut() {
            *v = rng.gen_range(lo..hi);
        }
        if a.label(&x)? != b.label(&x)? {
            disagree += 1;
        }
    }
    Ok(disagree as f64 / n_samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive;
    use rand::Rng;

    #[test]
    fn sea_label_examples() {
        let c = SeaConcept::new(8.0);
        assert_eq!(sea_label(&[0.0, 0.0, 5.0], &c), 1);
        // boundary counts as positive
        assert_eq!(sea_label(&[5.0, 3.0, 0.0], &c), 1);
        assert_eq!(sea_label(&[5.0, 3.1, 0.0], &c), 0);
    }

    #[test]
    fn sea_positive_rate_matches_area() {
        // analytic area under x0+x1 <= 8 within [0,10]^2 is 8^2/2 / 100
        let mut rng = derive(11, "mc", 0);
        let mut pos = 0;
        let n = 1_000_000;
        let c = SeaConcept::new(8.0);
        for _ in 0..n {
            let x = [
                rng.gen_range(0.0..10.0),
                rng.gen_range(0.0..10.0),
                rng.gen_range(0.0..10.0),
            ];
            pos += sea_label(&x, &c);
        }
        let rate = pos as f64 / n as f64;
        assert!((rate - 0.32).abs() < 0.01, "rate {rate}");
    }

    #[test]
    fn hyperplane_label_examples() {
        let c = HyperplaneConcept::new(vec![1.0; 10], 5.0);
        assert_eq!(hyperplane_label(&[0.5; 10], &c).unwrap(), 1); // boundary
        assert_eq!(hyperplane_label(&[1.0; 10], &c).unwrap(), 1);
        assert_eq!(hyperplane_label(&[0.4; 10], &c).unwrap(), 0);
        assert!(hyperplane_label(&[1.0; 3], &c).is_err());
    }

    #[test]
    fn hyperplane_balanced_offset_gives_even_classes() {
        let w = vec![1.0; 10];
        let c = HyperplaneConcept::new(w.clone(), HyperplaneConcept::balanced_offset(&w));
        let mut rng = derive(12, "mc", 0);
        let n = 1_000_000;
        let mut pos = 0;
        for _ in 0..n {
            let x: Vec<f64> = (0..10).map(|_| rng.gen_range(0.0..1.0)).collect();
            pos += hyperplane_label(&x, &c).unwrap();
        }
        let rate = pos as f64 / n as f64;
        assert!((rate - 0.5).abs() < 0.01, "rate {rate}");
    }

    #[test]
    fn mix_weight_abrupt_is_step() {
        assert_eq!(mix_weight(249_999, 250_000, 1), 0.0);
        assert_eq!(mix_weight(250_000, 250_000, 1), 1.0);
    }

    #[test]
    fn mix_weight_gradual_midpoint() {
        assert_eq!(mix_weight(100_000, 100_000, 100_000), 0.5);
        assert_eq!(mix_weight(49_999, 100_000, 100_000), 0.0);
        assert_eq!(mix_weight(150_000, 100_000, 100_000), 1.0);
    }

    #[test]
    fn mix_weight_is_monotone() {
        let mut prev = 0.0;
        for t in 0..200_000 {
            let w = mix_weight(t, 100_000, 60_000);
            assert!(w >= prev && (0.0..=1.0).contains(&w));
            prev = w;
        }
    }

    #[test]
    fn generate_is_deterministic() {
        let spec = abrupt_spec(Family::Sea, 5_000, 4);
        let noise = NoiseSpec::new(0.10);
        let (s1, a, d1) = generate_stream(10_000, &spec, &noise, 7).unwrap();
        let (s2, b, d2) = generate_stream(10_000, &spec, &noise, 7).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(a, b);
        assert_eq!(d1, d2);
        assert_eq!(d1, vec![5_000]);
    }

    #[test]
    fn no_drift_prefix_matches_abrupt_prefix() {
        let none = DriftSpec::none(Concept::Sea(SeaConcept::new(8.0)));
        let (a, b) = sea_magnitude_pair(2); // 8 -> 9
        let drift = DriftSpec::abrupt(5_000, Concept::Sea(a), Concept::Sea(b), 2);
        let noise = NoiseSpec::none();
        let (_, s_none, _) = generate_stream(6_000, &none, &noise, 3).unwrap();
        let (_, s_drift, _) = generate_stream(6_000, &drift, &noise, 3).unwrap();
        assert_eq!(&s_none[..5_000], &s_drift[..5_000]);
        assert_ne!(&s_none[5_000..], &s_drift[5_000..]);
    }

    #[test]
    fn noise_rate_is_respected() {
        // with no drift, a perfect oracle of the concept disagrees with the
        // stream exactly where labels were flipped
        let concept = SeaConcept::new(8.0);
        let spec = DriftSpec::none(Concept::Sea(concept));
        let noise = NoiseSpec::new(0.10);
        let (_, instances, _) = generate_stream(100_000, &spec, &noise, 5).unwrap();
        let flipped = instances
            .iter()
            .filter(|i| sea_label(&i.features, &concept) != i.label)
            .count();
        let rate = flipped as f64 / instances.len() as f64;
        assert!((rate - 0.10).abs() < 0.005, "flip rate {rate}");
    }

    #[test]
    fn concept_distance_identity_is_zero() {
        let c = Concept::Sea(SeaConcept::new(9.0));
        assert_eq!(concept_distance(&c, &c, 10_000, 1).unwrap(), 0.0);
    }

    #[test]
    fn concept_distance_matches_band_area() {
        let a = Concept::Sea(SeaConcept::new(8.0));
        let b = Concept::Sea(SeaConcept::new(9.0));
        let d = concept_distance(&a, &b, 1_000_000, 2).unwrap();
        assert!((d - 0.085).abs() < 0.01, "distance {d}");
    }

    #[test]
    fn concept_distance_rejects_family_mismatch() {
        let a = Concept::Sea(SeaConcept::new(8.0));
        let b = Concept::Hyperplane(rotated_hyperplane(0.0, 10));
        assert!(matches!(
            concept_distance(&a, &b, 10, 1),
            Err(Error::FamilyMismatch)
        ));
    }

    #[test]
    fn sea_ladder_distances_strictly_increase() {
        let mut prev = 0.0;
        for level in 1..=4 {
            let (a, b) = sea_magnitude_pair(level);
            let d =
                concept_distance(&Concept::Sea(a), &Concept::Sea(b), 400_000, 17).unwrap();
            assert!(d > prev, "level {level}: {d} <= {prev}");
            prev = d;
        }
    }

    #[test]
    fn hyperplane_ladder_distances_strictly_increase() {
        let mut prev = 0.0;
        for level in 1..=4 {
            let (a, b) = hyperplane_magnitude_pair(level);
            let d = concept_distance(
                &Concept::Hyperplane(a),
                &Concept::Hyperplane(b),
                400_000,
                18,
            )
            .unwrap();
            assert!(d > prev, "level {level}: {d} <= {prev}");
            prev = d;
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let (a, b) = sea_magnitude_pair(1);
        let spec = DriftSpec::abrupt(10_000, Concept::Sea(a), Concept::Sea(b), 1);
        assert!(spec.validate(5_000).is_err());
        let bad_mixed = DriftSpec::mixed(
            Concept::Sea(SeaConcept::new(8.0)),
            vec![Transition {
                center: 100,
                window: 50,
                to: Concept::Sea(SeaConcept::new(9.0)),
            }],
            1,
        );
        assert!(bad_mixed.validate(1_000).is_err()); // no abrupt component
    }

    #[test]
    fn mixed_ladder_is_valid() {
        for level in 1..=4 {
            mixed_spec(100_000, level).validate(100_000).unwrap();
        }
    }
}
