//! Published per-emotion appraisal loadings and what can be done with them.
//!
//! The loadings are principal-component locations of emotions on six
//! appraisal axes (Smith and Ellsworth, 1985), restricted to the
//! seven corpus emotions; "happiness" is mapped to joy. Their "control"
//! axis is situational control, which the corpus annotates as
//! `circumstance`. The corpus `control` dimension has no counterpart and is
//! ignored here.
//!
//! The comparison in [`sign_agreement`] is a formalisation of a narrative
//! comparison: a corpus cell agrees with the reference when its ratio lies
//! on the side of the dimension mean that the loading's sign points to.

use super::CooccurrenceTable;
use crate::corpus::{AppraisalVector, Dimension, Emotion};
use crate::table::{fmt_decimal, Table};

/// The six reference axes, in published column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Unpleasant,
    Responsibility,
    Uncertainty,
    Attention,
    Effort,
    Control,
}

impl Axis {
    pub const ALL: [Axis; 6] = [
        Axis::Unpleasant,
        Axis::Responsibility,
        Axis::Uncertainty,
        Axis::Attention,
        Axis::Effort,
        Axis::Control,
    ];

    /// Corpus dimension measuring this axis, and whether it points the
    /// opposite way (pleasant vs. unpleasant, certain vs. uncertain).
    pub fn corpus_dimension(self) -> (Dimension, bool) {
        match self {
            Axis::Unpleasant => (Dimension::Pleasantness, true),
            Axis::Responsibility => (Dimension::Responsibility, false),
            Axis::Uncertainty => (Dimension::Certainty, true),
            Axis::Attention => (Dimension::Attention, false),
            Axis::Effort => (Dimension::Effort, false),
            Axis::Control => (Dimension::Circumstance, false),
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Axis::Unpleasant => "Unpleasant",
            Axis::Responsibility => "Responsibility",
            Axis::Uncertainty => "Uncertainty",
            Axis::Attention => "Attention",
            Axis::Effort => "Effort",
            Axis::Control => "Control",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceProfile {
    /// `loadings[e][axis]`, rows in [`Emotion::ALL`] order.
    pub loadings: [[f64; 6]; 7],
}

impl ReferenceProfile {
    pub fn smith_ellsworth() -> Self {
        let mut loadings = [[0.0; 6]; 7];
        loadings[Emotion::Joy.index()] = [-1.46, 0.09, -0.46, 0.15, -0.33, -0.21];
        loadings[Emotion::Sadness.index()] = [0.87, -0.36, 0.00, -0.21, -0.14, 1.15];
        loadings[Emotion::Anger.index()] = [0.85, -0.94, -0.29, 0.12, 0.53, -0.96];
        loadings[Emotion::Fear.index()] = [0.44, -0.17, 0.73, 0.03, 0.63, 0.59];
        loadings[Emotion::Disgust.index()] = [0.38, -0.50, -0.39, -0.96, 0.06, -0.19];
        loadings[Emotion::Shame.index()] = [0.73, 1.31, 0.21, -0.11, 0.07, -0.07];
        loadings[Emotion::Guilt.index()] = [0.60, 1.31, -0.15, -0.36, 0.00, -0.29];
        ReferenceProfile { loadings }
    }

    pub fn loading(&self, e: Emotion, axis: Axis) -> f64 {
        self.loadings[e.index()][axis as usize]
    }

    /// Dot product of the ±1-coded appraisal with the emotion's loadings.
    pub fn score(&self, e: Emotion, v: AppraisalVector) -> f64 {
        Axis::ALL
            .iter()
            .map(|&axis| {
                let (dim, inverted) = axis.corpus_dimension();
                let mut s = if v.get(dim) { 1.0 } else { -1.0 };
                if inverted {
                    s = -s;
                }
                s * self.loading(e, axis)
            })
            .sum()
    }

    pub fn to_table(&self) -> Table {
        let mut header = vec!["Emotion".to_string()];
        header.extend(Axis::ALL.iter().map(|a| a.title().to_string()));
        let mut table = Table::new(header);
        for e in Emotion::ALL {
            let mut row = vec![e.title().to_string()];
            row.extend(Axis::ALL.iter().map(|&a| format!("{:.2}", self.loading(e, a))));
            table.push(row);
        }
        table
    }
}

impl Default for ReferenceProfile {
    fn default() -> Self {
        Self::smith_ellsworth()
    }
}

/// Rule-based emotion for an appraisal vector: the emotion whose reference
/// loadings have the largest dot product with the ±1-coded bits. Ties go
/// to the earlier emotion.
pub fn predict_emotion_reference(v: AppraisalVector) -> Emotion {
    predict_with(&ReferenceProfile::smith_ellsworth(), v)
}

pub(crate) fn predict_with(profile: &ReferenceProfile, v: AppraisalVector) -> Emotion {
    let scores: Vec<f64> = Emotion::ALL.iter().map(|&e| profile.score(e, v)).collect();
    Emotion::argmax(&scores)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignAgreement {
    /// `flags[e][axis]`: whether the corpus ratio deviates from the
    /// dimension mean in the direction the loading implies.
    pub flags: [[bool; 6]; 7],
    /// Fraction of agreeing cells.
    pub rate: f64,
}

impl SignAgreement {
    pub fn to_table(&self) -> Table {
        let mut header = vec!["Emotion".to_string()];
        header.extend(Axis::ALL.iter().map(|a| a.title().to_string()));
        let mut table = Table::new(header);
        for e in Emotion::ALL {
            let mut row = vec![e.title().to_string()];
            row.extend(self.flags[e.index()].iter().map(|&f| if f { "agree" } else { "differ" }.to_string()));
            table.push(row);
        }
        let mut summary = vec!["Agreement rate".to_string(), fmt_decimal(self.rate)];
        summary.resize(7, String::new());
        table.push(summary);
        table
    }
}

/// Compares co-occurrence ratios with the reference loadings cell by cell.
///
/// Cells with zero deviation from the dimension mean, or with a zero
/// loading, count as agreeing.
pub fn sign_agreement(table: &CooccurrenceTable, reference: &ReferenceProfile) -> SignAgreement {
    let mut flags = [[false; 6]; 7];
    for (a, &axis) in Axis::ALL.iter().enumerate() {
        let (dim, inverted) = axis.corpus_dimension();
        let mean = Emotion::ALL.iter().map(|&e| table.ratio(e, dim)).sum::<f64>() / 7.0;
        for e in Emotion::ALL {
            let deviation = table.ratio(e, dim) - mean;
            let mut implied = reference.loading(e, axis);
            if inverted {
                implied = -implied;
            }
            flags[e.index()][a] = deviation == 0.0 || implied == 0.0 || (deviation > 0.0) == (implied > 0.0);
        }
    }
    let agreeing = flags.iter().flatten().filter(|&&f| f).count();
    SignAgreement {
        flags,
        rate: agreeing as f64 / 42.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Oracle: the published table verbatim, in its own row order
    // (happiness, sadness, anger, fear, disgust, shame, guilt) and with
    // the bit→axis mapping spelled out per row.
    const PUBLISHED: [(Emotion, [f64; 6]); 7] = [
        (Emotion::Joy, [-1.46, 0.09, -0.46, 0.15, -0.33, -0.21]),
        (Emotion::Sadness, [0.87, -0.36, 0.00, -0.21, -0.14, 1.15]),
        (Emotion::Anger, [0.85, -0.94, -0.29, 0.12, 0.53, -0.96]),
        (Emotion::Fear, [0.44, -0.17, 0.73, 0.03, 0.63, 0.59]),
        (Emotion::Disgust, [0.38, -0.50, -0.39, -0.96, 0.06, -0.19]),
        (Emotion::Shame, [0.73, 1.31, 0.21, -0.11, 0.07, -0.07]),
        (Emotion::Guilt, [0.60, 1.31, -0.15, -0.36, 0.00, -0.29]),
    ];

    fn brute_force(bits: [u8; 7]) -> Emotion {
        let pm = |b: u8| if b == 1 { 1.0 } else { -1.0 };
        let [att, cert, eff, pleas, resp, _ctrl, circ] = bits;
        let x = [-pm(pleas), pm(resp), -pm(cert), pm(att), pm(eff), pm(circ)];
        let mut best: Option<(Emotion, f64)> = None;
        for (e, row) in PUBLISHED {
            let s: f64 = row.iter().zip(x).map(|(l, v)| l * v).sum();
            best = match best {
                Some((be, bs)) if bs > s || (bs == s && be < e) => Some((be, bs)),
                _ => Some((e, s)),
            };
        }
        best.unwrap().0
    }

    #[test]
    fn pleasant_attentive_certain_is_joy() {
        let v = AppraisalVector::from_bits([1, 1, 0, 1, 0, 0, 0]);
        assert_eq!(brute_force(v.bits()), Emotion::Joy);
        assert_eq!(predict_emotion_reference(v), Emotion::Joy);
    }

    #[test]
    fn matches_brute_force_on_all_vectors() {
        for code in 0..128u8 {
            let v = AppraisalVector::from_code(code);
            assert_eq!(predict_emotion_reference(v), brute_force(v.bits()), "code {code}");
        }
    }

    #[test]
    fn pleasant_only_is_never_disgust() {
        let v = AppraisalVector::from_bits([0, 0, 0, 1, 0, 0, 0]);
        assert_ne!(predict_emotion_reference(v), Emotion::Disgust);
        assert_eq!(brute_force(v.bits()), predict_emotion_reference(v));
    }

    #[test]
    fn control_bit_is_ignored() {
        for code in 0..128u8 {
            let mut v = AppraisalVector::from_code(code);
            let before = predict_emotion_reference(v);
            v.set(Dimension::Control, !v.get(Dimension::Control));
            assert_eq!(predict_emotion_reference(v), before);
        }
    }

    #[test]
    fn ties_go_to_earlier_label() {
        let profile = ReferenceProfile { loadings: [[0.0; 6]; 7] };
        assert_eq!(predict_with(&profile, AppraisalVector::ZERO), Emotion::Anger);
        let mut loadings = [[0.0; 6]; 7];
        loadings[Emotion::Guilt.index()] = [1.0; 6];
        loadings[Emotion::Shame.index()] = [1.0; 6];
        // every axis coded +1: guilt and shame both score 6
        let v = AppraisalVector::from_bits([1, 0, 1, 0, 1, 0, 1]);
        let profile = ReferenceProfile { loadings };
        assert_eq!(profile.score(Emotion::Shame, v), 6.0);
        assert_eq!(predict_with(&profile, v), Emotion::Guilt);
    }

    #[test]
    fn argmax_invariant_under_positive_rescaling() {
        let base = ReferenceProfile::smith_ellsworth();
        for factor in [0.5, 2.0, 10.0] {
            let mut scaled = base.clone();
            for row in &mut scaled.loadings {
                for x in row.iter_mut() {
                    *x *= factor;
                }
            }
            for code in 0..128u8 {
                let v = AppraisalVector::from_code(code);
                assert_eq!(predict_with(&scaled, v), predict_with(&base, v));
            }
        }
    }

    #[test]
    fn table_spot_values() {
        let r = ReferenceProfile::smith_ellsworth();
        assert_eq!(r.loading(Emotion::Joy, Axis::Unpleasant), -1.46);
        assert_eq!(r.loading(Emotion::Shame, Axis::Responsibility), 1.31);
        assert_eq!(r.loading(Emotion::Fear, Axis::Uncertainty), 0.73);
    }

    #[test]
    fn table_built_from_reference_signs_agrees_everywhere() {
        let r = ReferenceProfile::smith_ellsworth();
        let mut counts = [[0usize; 7]; 7];
        for e in Emotion::ALL {
            for axis in Axis::ALL {
                let (dim, inverted) = axis.corpus_dimension();
                let mut l = r.loading(e, axis);
                if inverted {
                    l = -l;
                }
                counts[e.index()][dim.index()] = if l > 0.0 { 60 } else if l < 0.0 { 40 } else { 50 };
            }
        }
        let table = CooccurrenceTable::from_counts(counts, [100; 7]);
        assert_eq!(sign_agreement(&table, &r).rate, 1.0);
    }

    #[test]
    fn flat_table_agrees_by_convention() {
        let table = CooccurrenceTable::from_counts([[30; 7]; 7], [100; 7]);
        let s = sign_agreement(&table, &ReferenceProfile::smith_ellsworth());
        assert_eq!(s.rate, 1.0);
    }

    #[test]
    fn joy_pleasantness_agrees_with_published_counts() {
        // pleasantness counts per emotion from the released annotation
        let pleasant = [0usize, 2, 4, 0, 141, 1, 1];
        let mut counts = [[0usize; 7]; 7];
        for (e, &c) in pleasant.iter().enumerate() {
            counts[e][Dimension::Pleasantness.index()] = c;
        }
        let table = CooccurrenceTable::from_counts(counts, [143; 7]);
        let s = sign_agreement(&table, &ReferenceProfile::smith_ellsworth());
        assert!(s.flags[Emotion::Joy.index()][Axis::Unpleasant as usize]);
    }
}
