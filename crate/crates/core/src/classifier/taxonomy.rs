use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::ClassifierError;

/// The four major diagnostic classes, in their canonical order.
pub const DEFAULT_MAJORS: [&str; 4] = ["Healthy", "Benign", "OPMD", "OralCancer"];

/// Subtypes generated per major class by [`ClassTaxonomy::default`].
pub const DEFAULT_SUBTYPES_PER_MAJOR: usize = 4;

/// One subtype entry of a taxonomy definition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubtypeDef {
    pub label: String,
    pub major: String,
}

/// Label space of every prediction: ordered majors and ordered subtypes,
/// each subtype owned by exactly one major.
///
/// Predictions are made over subtypes; the major is derived through
/// [`ClassTaxonomy::parent`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassTaxonomy {
    majors: Vec<String>,
    subtypes: Vec<String>,
    parent: Vec<usize>,
}

impl Default for ClassTaxonomy {
    /// 4 majors × 4 placeholder subtypes (`Healthy-1` .. `OralCancer-4`).
    fn default() -> Self {
        let mut defs = Vec::new();
        for major in DEFAULT_MAJORS {
            for i in 1..=DEFAULT_SUBTYPES_PER_MAJOR {
                defs.push(SubtypeDef {
                    label: format!("{major}-{i}"),
                    major: major.to_string(),
                });
            }
        }
        let majors = DEFAULT_MAJORS.iter().map(|s| s.to_string()).collect();
        Self::new(majors, defs).expect("default taxonomy is valid")
    }
}

impl ClassTaxonomy {
    pub fn new(majors: Vec<String>, subtypes: Vec<SubtypeDef>) -> Result<Self, ClassifierError> {
        let invalid = |msg: String| Err(ClassifierError::InvalidTaxonomy(msg));

        if majors.len() != DEFAULT_MAJORS.len()
            || majors.iter().zip(DEFAULT_MAJORS).any(|(a, b)| a != b)
        {
            return invalid(format!(
                "majors must be exactly {:?} in order, got {:?}",
                DEFAULT_MAJORS, majors
            ));
        }

        let mut seen = HashSet::new();
        for m in &majors {
            seen.insert(m.as_str());
        }
        let mut parent = Vec::with_capacity(subtypes.len());
        let mut labels = Vec::with_capacity(subtypes.len());
        for def in &subtypes {
            if def.label.trim().is_empty() {
                return invalid("empty subtype label".into());
            }
            if !seen.insert(def.label.as_str()) {
                return invalid(format!("duplicate label `{}`", def.label));
            }
            let Some(idx) = majors.iter().position(|m| *m == def.major) else {
                return invalid(format!(
                    "subtype `{}` names unknown major `{}`",
                    def.label, def.major
                ));
            };
            parent.push(idx);
            labels.push(def.label.clone());
        }
        for (i, m) in majors.iter().enumerate() {
            if !parent.contains(&i) {
                return invalid(format!("major `{m}` has no subtype"));
            }
        }

        Ok(Self {
            majors,
            subtypes: labels,
            parent,
        })
    }

    pub fn majors(&self) -> &[String] {
        &self.majors
    }

    /// Class labels in prediction order.
    pub fn subtypes(&self) -> &[String] {
        &self.subtypes
    }

    pub fn len(&self) -> usize {
        self.subtypes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subtypes.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.subtypes.iter().position(|s| s == label)
    }

    /// Major class owning `label`.
    pub fn parent(&self, label: &str) -> Option<&str> {
        self.index_of(label)
            .map(|i| self.majors[self.parent[i]].as_str())
    }

    /// Index of the major class for subtype index `class`.
    pub fn major_index(&self, class: usize) -> usize {
        self.parent[class]
    }

    /// Position of subtype `class` among the subtypes of its major.
    pub fn rank_within_major(&self, class: usize) -> usize {
        let major = self.parent[class];
        self.parent[..class].iter().filter(|&&p| p == major).count()
    }

    pub fn subtype_defs(&self) -> Vec<SubtypeDef> {
        self.subtypes
            .iter()
            .zip(&self.parent)
            .map(|(label, &p)| SubtypeDef {
                label: label.clone(),
                major: self.majors[p].clone(),
            })
            .collect()
    }

    /// Subtype count per major, keyed by major label.
    pub fn subtypes_per_major(&self) -> BTreeMap<&str, usize> {
        let mut out = BTreeMap::new();
        for &p in &self.parent {
            *out.entry(self.majors[p].as_str()).or_insert(0) += 1;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_has_four_majors_sixteen_subtypes() {
        let t = ClassTaxonomy::default();
        assert_eq!(t.majors(), DEFAULT_MAJORS);
        assert_eq!(t.len(), 16);
        for (_, n) in t.subtypes_per_major() {
            assert_eq!(n, 4);
        }
        assert_eq!(t.parent("OPMD-3"), Some("OPMD"));
        assert_eq!(t.rank_within_major(t.index_of("OPMD-3").unwrap()), 2);
        assert_eq!(t, ClassTaxonomy::default());
    }

    #[test]
    fn rejects_reordered_majors() {
        let majors = vec!["Benign", "Healthy", "OPMD", "OralCancer"]
            .into_iter()
            .map(String::from)
            .collect();
        assert!(ClassTaxonomy::new(majors, ClassTaxonomy::default().subtype_defs()).is_err());
    }

    #[test]
    fn rejects_duplicate_and_orphan_labels() {
        let majors: Vec<String> = DEFAULT_MAJORS.iter().map(|s| s.to_string()).collect();
        let mut defs = ClassTaxonomy::default().subtype_defs();
        defs.push(defs[0].clone());
        assert!(ClassTaxonomy::new(majors.clone(), defs).is_err());

        let defs: Vec<_> = ClassTaxonomy::default()
            .subtype_defs()
            .into_iter()
            .filter(|d| d.major != "Benign")
            .collect();
        assert!(ClassTaxonomy::new(majors.clone(), defs).is_err());

        let defs = vec![SubtypeDef {
            label: "x".into(),
            major: "Nope".into(),
        }];
        assert!(ClassTaxonomy::new(majors, defs).is_err());
    }
}
