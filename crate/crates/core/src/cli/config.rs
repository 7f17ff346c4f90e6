use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::data::DEFAULT_MIN_COUNT;
use crate::error::{Error, Result};
use crate::experiment::{DataSource, ExperimentSettings, ModelSettings};
use crate::synth::SynthConfig;
use crate::training::TrainConfig;

/// Configuration file of the `train` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainFile {
    /// Corpus directory, relative to the configuration file.
    pub corpus: PathBuf,
    #[serde(default = "default_min_count")]
    pub min_count: usize,
    #[serde(default)]
    pub model: ModelSettings,
    #[serde(default)]
    pub train: TrainConfig,
}

fn default_min_count() -> usize {
    DEFAULT_MIN_COUNT
}

/// Configuration file of the `experiment` command. Omitted tables keep the
/// recipe defaults; within a table, omitted keys do too.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub min_count: Option<usize>,
    pub synth: Option<toml::Table>,
    pub model: Option<toml::Table>,
    pub train: Option<toml::Table>,
}

fn overlay<T: Serialize + DeserializeOwned>(base: &T, table: &toml::Table) -> Result<T> {
    let mut merged = toml::Table::try_from(base).map_err(|e| Error::Config(e.to_string()))?;
    for (k, v) in table {
        merged.insert(k.clone(), v.clone());
    }
    merged
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.message().to_owned()))
}

impl ExperimentFile {
    pub fn into_settings(self) -> ExperimentSettings {
        self.apply(ExperimentSettings::default())
            .expect("validated by parse_toml")
    }

    fn apply(&self, mut s: ExperimentSettings) -> Result<ExperimentSettings> {
        if let Some(n) = self.min_count {
            s.min_count = n;
        }
        if let Some(t) = &self.synth {
            let base = match &s.source {
                DataSource::Synthetic(c) => c.clone(),
                DataSource::Files { .. } => SynthConfig::default(),
            };
            s.source = DataSource::Synthetic(overlay(&base, t)?);
        }
        if let Some(t) = &self.model {
            s.model = overlay(&s.model, t)?;
        }
        if let Some(t) = &self.train {
            s.train = overlay(&s.train, t)?;
        }
        Ok(s)
    }
}

/// A configuration file with checks beyond its schema.
pub trait ConfigFile {
    fn check(&self) -> Result<()>;
}

impl ConfigFile for TrainFile {
    fn check(&self) -> Result<()> {
        self.train.validate()
    }
}

impl ConfigFile for ExperimentFile {
    fn check(&self) -> Result<()> {
        self.apply(ExperimentSettings::default())?.validate()
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Reads and validates a TOML configuration file. Syntax, type and value
/// errors are reported with the offending line.
pub fn parse_toml<T: DeserializeOwned + ConfigFile>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: T = toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_owned(),
        line: e.span().map_or(1, |s| line_of(&text, s.start)),
        message: e.message().to_owned(),
    })?;
    value.check().map_err(|e| match e {
        Error::Config(message) => Error::Parse {
            path: path.to_owned(),
            line: 1,
            message,
        },
        other => other,
    })?;
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn train_file_defaults() {
        let f = file("corpus = \"data\"\n[train]\nlanguages = [\"en\", \"de\"]\nc2c = true\n");
        let t: TrainFile = parse_toml(f.path()).unwrap();
        assert_eq!(t.min_count, 4);
        assert_eq!(t.model.d_hid, 1024);
        assert_eq!(t.train.batch_size, 128);
        assert!(t.train.c2c);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let f = file("corpus = \"data\"\n\n[train]\nbatch_size = \"big\"\n");
        match parse_toml::<TrainFile>(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        let f = file("corpus = \"data\"\n[train]\nlearning_rate = 0.1\n");
        match parse_toml::<TrainFile>(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let f = file("corpus = \"data\"\n[train]\np_c2i = 1.5\n");
        assert!(matches!(
            parse_toml::<TrainFile>(f.path()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn experiment_overlay_keeps_other_defaults() {
        let f = file("[train]\nlr = 0.01\n[synth]\nn_train = 50\n");
        let s = parse_toml::<ExperimentFile>(f.path())
            .unwrap()
            .into_settings();
        let d = ExperimentSettings::default();
        assert_eq!(s.train.lr, 0.01);
        assert_eq!(s.train.batch_size, d.train.batch_size);
        assert_eq!(s.train.eval_every, d.train.eval_every);
        match s.source {
            DataSource::Synthetic(c) => {
                assert_eq!(c.n_train, 50);
                assert_eq!(c.n_test, 100);
            }
            other => panic!("{other:?}"),
        }
        let bad = file("[model]\nwidth = 3\n");
        assert!(parse_toml::<ExperimentFile>(bad.path()).is_err());
    }
}
