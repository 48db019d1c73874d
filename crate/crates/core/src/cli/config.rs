//! Run configuration: a TOML file whose relative paths resolve against the
//! file's own directory, overridden by command-line flags.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::lm::{ConditionalLM, RemoteLM, TabularLM};
use crate::tokeniser::{BoundaryFlags, TokeniserSpec};
use crate::vocab::{Id, MarkedVocabulary, Scheme};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LmSource {
    /// Tabular model file.
    pub tabular: Option<PathBuf>,
    /// `host:port` of a scoring server.
    pub endpoint: Option<String>,
    /// Program and arguments of a scoring process speaking over stdio.
    pub command: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub vocab: Option<PathBuf>,
    pub tokeniser: Option<PathBuf>,
    #[serde(default)]
    pub lm: LmSource,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default = "yes")]
    pub mark_first_word: bool,
    #[serde(default = "yes")]
    pub mark_final_word: bool,
    #[serde(default)]
    pub punct: Vec<Id>,
    pub eos_id: Option<Id>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    pub out_dir: Option<PathBuf>,
}

fn default_scheme() -> String {
    "bow".into()
}

fn yes() -> bool {
    true
}

fn default_tolerance() -> f64 {
    1e-10
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

/// Loaded model, either kind.
pub enum LoadedLm {
    Tabular(TabularLM),
    Remote(RemoteLM),
}

impl LoadedLm {
    pub fn as_dyn(&self) -> &dyn ConditionalLM {
        match self {
            LoadedLm::Tabular(lm) => lm,
            LoadedLm::Remote(lm) => lm,
        }
    }

    pub fn tabular(&self) -> Option<&TabularLM> {
        match self {
            LoadedLm::Tabular(lm) => Some(lm),
            LoadedLm::Remote(_) => None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.vocab.as_mut().map(resolve);
        cfg.tokeniser.as_mut().map(resolve);
        cfg.lm.tabular.as_mut().map(resolve);
        cfg.out_dir.as_mut().map(resolve);
        Ok(cfg)
    }

    pub fn scheme(&self) -> Result<Scheme, String> {
        self.scheme.parse::<Scheme>().map_err(|e| format!("scheme: {e}"))
    }

    pub fn flags(&self) -> BoundaryFlags {
        BoundaryFlags { mark_first_word: self.mark_first_word, mark_final_word: self.mark_final_word }
    }

    fn required<'a>(&self, field: &'a Option<PathBuf>, name: &str) -> Result<&'a PathBuf, String> {
        field.as_ref().ok_or_else(|| format!("config sets no {name} path"))
    }

    pub fn load_vocab(&self) -> Result<MarkedVocabulary, String> {
        let path = self.required(&self.vocab, "vocab")?;
        MarkedVocabulary::load(path, self.scheme()?, self.eos_id, self.punct.iter().copied()).map_err(|e| e.to_string())
    }

    pub fn load_spec(&self) -> Result<TokeniserSpec, String> {
        let vocab = self.load_vocab()?;
        let path = self.required(&self.tokeniser, "tokeniser")?;
        TokeniserSpec::load(path, vocab, self.flags()).map_err(|e| e.to_string())
    }

    pub fn load_lm(&self, support_len: usize) -> Result<LoadedLm, String> {
        let src = &self.lm;
        match (&src.tabular, &src.endpoint, &src.command) {
            (Some(path), None, None) => {
                TabularLM::load(path, support_len).map(LoadedLm::Tabular).map_err(|e| e.to_string())
            }
            (None, Some(addr), None) => {
                RemoteLM::connect(addr, support_len).map(LoadedLm::Remote).map_err(|e| e.to_string())
            }
            (None, None, Some(cmd)) if !cmd.is_empty() => {
                RemoteLM::spawn(&cmd[0], &cmd[1..], support_len).map(LoadedLm::Remote).map_err(|e| e.to_string())
            }
            (None, None, None) => Err("config sets no language model".into()),
            _ => Err("config must set exactly one of lm.tabular, lm.endpoint, lm.command".into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.scheme, "bow");
        assert!(cfg.mark_first_word && cfg.mark_final_word);
        assert_eq!(cfg.tolerance, 1e-10);
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "vocab = \"v.tsv\"\nseed = 4\n[lm]\ntabular = \"/abs/lm.tsv\"\n").unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.vocab.unwrap(), dir.path().join("v.tsv"));
        assert_eq!(cfg.lm.tabular.unwrap(), PathBuf::from("/abs/lm.tsv"));
        assert_eq!(cfg.seed, 4);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("vocabulary = \"x\"").is_err());
    }

    #[test]
    fn two_model_sources() {
        let cfg: RunConfig = toml::from_str("[lm]\ntabular = \"a\"\nendpoint = \"b:1\"").unwrap();
        assert!(cfg.load_lm(3).is_err());
    }
}
