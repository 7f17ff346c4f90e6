use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::HalfMode;
use crate::error::{Error, Result};

/// Where an arm's training captions come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrainData {
    /// The comparable portion (several independent captions per image).
    Comparable,
    /// The comparable portion with one caption kept per image and language.
    ComparableOne,
    /// The translation portion, restricted to the given languages if any.
    Translation(Option<Vec<String>>),
    /// Half / overlap / disjoint image subsets of the comparable portion,
    /// over the two comparable languages.
    Half(HalfMode),
    Union(Vec<TrainData>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arm {
    pub label: String,
    pub data: TrainData,
    /// Training languages. With `per_language`, one model is trained for
    /// each evaluation language on that language alone.
    pub languages: Vec<String>,
    pub per_language: bool,
    pub c2c: bool,
}

impl Arm {
    fn mono(label: &str, data: TrainData) -> Self {
        Self {
            label: label.into(),
            data,
            languages: Vec::new(),
            per_language: true,
            c2c: false,
        }
    }

    fn joint(label: &str, data: TrainData, languages: &[&str], c2c: bool) -> Self {
        Self {
            label: label.into(),
            data,
            languages: languages.iter().map(|l| l.to_string()).collect(),
            per_language: false,
            c2c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Recipe {
    E1,
    E2,
    E3,
    E4,
    E5,
    E6,
}

const BI: [&str; 2] = ["en", "de"];
const MULTI: [&str; 4] = ["en", "de", "fr", "cs"];

impl Recipe {
    pub const ALL: [Recipe; 6] = [
        Recipe::E1,
        Recipe::E2,
        Recipe::E3,
        Recipe::E4,
        Recipe::E5,
        Recipe::E6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Recipe::E1 => "E1",
            Recipe::E2 => "E2",
            Recipe::E3 => "E3",
            Recipe::E4 => "E4",
            Recipe::E5 => "E5",
            Recipe::E6 => "E6",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Recipe::E1 => "monolingual vs bilingual vs bilingual + c2c on comparable data",
            Recipe::E2 => "bilingual training on translations vs comparable captions",
            Recipe::E3 => "full, half, overlapping and disjoint bilingual image sets",
            Recipe::E4 => "multilingual training on translations vs comparable captions",
            Recipe::E5 => "high-to-low resource transfer into French and Czech",
            Recipe::E6 => "monolingual vs bilingual vs multilingual",
        }
    }

    /// Languages every arm is evaluated on.
    pub fn eval_languages(self) -> Vec<String> {
        let langs: &[&str] = match self {
            Recipe::E4 => &MULTI,
            Recipe::E5 => &["fr", "cs"],
            _ => &BI,
        };
        langs.iter().map(|l| l.to_string()).collect()
    }

    /// The arm the others are compared against.
    pub fn baseline(self) -> &'static str {
        match self {
            Recipe::E3 => "Half",
            _ => "Monolingual",
        }
    }

    pub fn arms(self) -> Vec<Arm> {
        use TrainData::*;
        match self {
            Recipe::E1 => vec![
                Arm::mono("Monolingual", Comparable),
                Arm::joint("Bilingual", Comparable, &BI, false),
                Arm::joint("+ c2c", Comparable, &BI, true),
            ],
            Recipe::E2 => vec![
                Arm::mono("Monolingual", Translation(None)),
                Arm::joint("Bi-translation", Translation(None), &BI, false),
                Arm::joint("+ c2c", Translation(None), &BI, true),
                Arm::joint("Bi-comparable", ComparableOne, &BI, false),
                Arm::joint("+ c2c ", ComparableOne, &BI, true),
            ],
            Recipe::E3 => vec![
                Arm::mono("Full", Comparable),
                Arm::mono("Half", Half(HalfMode::HalfMono)),
                Arm::joint("Bi-overlap", Half(HalfMode::Overlap), &BI, false),
                Arm::joint("+ c2c", Half(HalfMode::Overlap), &BI, true),
                Arm::joint("Bi-disjoint", Half(HalfMode::Disjoint), &BI, false),
            ],
            Recipe::E4 => {
                let comparable = Union(vec![
                    ComparableOne,
                    Translation(Some(vec!["fr".into(), "cs".into()])),
                ]);
                vec![
                    Arm::mono("Monolingual", Translation(None)),
                    Arm::joint("Multi-translation", Translation(None), &MULTI, false),
                    Arm::joint("+ c2c", Translation(None), &MULTI, true),
                    Arm::joint("Multi-comparable", comparable.clone(), &MULTI, false),
                    Arm::joint("+ c2c ", comparable, &MULTI, true),
                ]
            }
            Recipe::E5 => {
                let both = Union(vec![Translation(None), Comparable]);
                vec![
                    Arm::mono("Monolingual", Translation(None)),
                    Arm::joint("Multilingual", Translation(None), &MULTI, false),
                    Arm::joint("+ Comparable", both.clone(), &MULTI, false),
                    Arm::joint("+ c2c", both, &MULTI, true),
                ]
            }
            Recipe::E6 => vec![
                Arm::mono("Monolingual", ComparableOne),
                Arm::joint("Bilingual", ComparableOne, &BI, true),
                Arm::joint(
                    "Multilingual",
                    Union(vec![
                        ComparableOne,
                        Translation(Some(vec!["fr".into(), "cs".into()])),
                    ]),
                    &MULTI,
                    true,
                ),
            ],
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Recipe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Recipe::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<String> = Recipe::ALL
                    .iter()
                    .map(|r| format!("  {}  {}", r.name(), r.description()))
                    .collect();
                Error::Config(format!(
                    "unknown recipe `{s}`; available recipes:\n{}",
                    names.join("\n")
                ))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(r: Recipe) -> Vec<String> {
        r.arms()
            .into_iter()
            .map(|a| a.label.trim().to_owned())
            .collect()
    }

    #[test]
    fn row_structure() {
        assert_eq!(labels(Recipe::E1), ["Monolingual", "Bilingual", "+ c2c"]);
        assert_eq!(
            labels(Recipe::E3),
            ["Full", "Half", "Bi-overlap", "+ c2c", "Bi-disjoint"]
        );
        assert_eq!(
            labels(Recipe::E5),
            ["Monolingual", "Multilingual", "+ Comparable", "+ c2c"]
        );
        assert_eq!(
            labels(Recipe::E6),
            ["Monolingual", "Bilingual", "Multilingual"]
        );
    }

    #[test]
    fn labels_are_unique_within_a_recipe() {
        for r in Recipe::ALL {
            let arms = r.arms();
            let mut names: Vec<&str> = arms.iter().map(|a| a.label.as_str()).collect();
            names.sort();
            names.dedup();
            assert_eq!(names.len(), arms.len(), "{r}");
            assert!(arms.iter().any(|a| a.label == r.baseline()));
        }
    }

    #[test]
    fn unknown_recipe_lists_available() {
        let err = "E9".parse::<Recipe>().unwrap_err().to_string();
        assert!(err.contains("E1") && err.contains("E6"), "{err}");
        assert_eq!("e3".parse::<Recipe>().unwrap(), Recipe::E3);
    }
}
