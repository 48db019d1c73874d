//! Marked subword vocabularies.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Id = u32;

/// Rendering of the whitespace marker in vocabulary surfaces.
pub const MARKER: char = '_';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Bow,
    Eow,
    Mid,
}

impl FromStr for Role {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bow" => Ok(Role::Bow),
            "eow" => Ok(Role::Eow),
            "mid" => Ok(Role::Mid),
            other => Err(format!("unknown role `{other}`")),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Bow => "bow",
            Role::Eow => "eow",
            Role::Mid => "mid",
        })
    }
}

/// Which side of a word the marked subwords sit on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Eow,
    Bow,
}

impl Scheme {
    pub fn marked_role(self) -> Role {
        match self {
            Scheme::Eow => Role::Eow,
            Scheme::Bow => Role::Bow,
        }
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "eow" => Ok(Scheme::Eow),
            "bow" => Ok(Scheme::Bow),
            other => Err(format!("unknown marking scheme `{other}`")),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Eow => "eow",
            Scheme::Bow => "bow",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subword {
    pub id: Id,
    pub surface: String,
    pub role: Role,
}

impl Subword {
    pub fn new(id: Id, surface: impl Into<String>, role: Role) -> Self {
        Subword { id, surface: surface.into(), role }
    }

    /// Surface with the boundary marker removed.
    pub fn text(&self) -> &str {
        match self.role {
            Role::Bow => self.surface.strip_prefix(MARKER).unwrap_or(&self.surface),
            Role::Eow => self.surface.strip_suffix(MARKER).unwrap_or(&self.surface),
            Role::Mid => &self.surface,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum VocabError {
    #[error("subword id {0} appears more than once")]
    DuplicateId(Id),
    #[error("subword {0} has an empty surface")]
    EmptySurface(Id),
    #[error("no {0}-marked subwords in the vocabulary")]
    EmptyMarkedSet(Role),
    #[error("subword {id} has role {role}, which the {scheme} scheme does not allow")]
    RoleOutsideScheme { id: Id, role: Role, scheme: Scheme },
    #[error("subword ids must be 0..{expected}; id {found} is out of range")]
    IdOutOfRange { expected: usize, found: Id },
    #[error("eos id {eos} must equal the vocabulary size {size}")]
    EosPlacement { eos: Id, size: usize },
    #[error("punctuation id {0} is neither a subword nor eos")]
    UnknownPunct(Id),
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

/// A subword inventory partitioned into marked and unmarked roles, plus the
/// reserved end-of-sequence id and the punctuation class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedVocabulary {
    subwords: Vec<Subword>,
    scheme: Scheme,
    eos_id: Id,
    punct_ids: BTreeSet<Id>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    /// Pairs of ids whose marker-stripped surfaces coincide across roles.
    pub shared_surfaces: Vec<(Id, Id)>,
    pub marked: usize,
    pub unmarked: usize,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.shared_surfaces.is_empty()
    }
}

impl MarkedVocabulary {
    /// Builds and validates. Subwords are stored in id order.
    pub fn new(
        mut subwords: Vec<Subword>,
        scheme: Scheme,
        punct_ids: impl IntoIterator<Item = Id>,
    ) -> Result<Self, VocabError> {
        subwords.sort_by_key(|s| s.id);
        let eos_id = subwords.len() as Id;
        let vocab = MarkedVocabulary {
            subwords,
            scheme,
            eos_id,
            punct_ids: punct_ids.into_iter().collect(),
        };
        validate_vocabulary(&vocab)?;
        Ok(vocab)
    }

    /// As [`MarkedVocabulary::new`], but checks a declared eos id.
    pub fn with_eos(
        subwords: Vec<Subword>,
        scheme: Scheme,
        eos_id: Id,
        punct_ids: impl IntoIterator<Item = Id>,
    ) -> Result<Self, VocabError> {
        let size = subwords.len();
        if eos_id as usize != size {
            return Err(VocabError::EosPlacement { eos: eos_id, size });
        }
        Self::new(subwords, scheme, punct_ids)
    }

    /// Reads the `id<TAB>surface<TAB>role` file. A declared eos id must be
    /// the vocabulary size.
    pub fn load(
        path: &Path,
        scheme: Scheme,
        eos_id: Option<Id>,
        punct_ids: impl IntoIterator<Item = Id>,
    ) -> Result<Self, VocabError> {
        let text = std::fs::read_to_string(path).map_err(|e| VocabError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        let subwords = parse_vocab_tsv(&text, &path.display().to_string())?;
        let eos_id = eos_id.unwrap_or(subwords.len() as Id);
        Self::with_eos(subwords, scheme, eos_id, punct_ids)
    }

    pub fn len(&self) -> usize {
        self.subwords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subwords.is_empty()
    }

    /// Size of the support of every next-subword distribution.
    pub fn support_len(&self) -> usize {
        self.subwords.len() + 1
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn eos(&self) -> Id {
        self.eos_id
    }

    pub fn punct_ids(&self) -> &BTreeSet<Id> {
        &self.punct_ids
    }

    pub fn is_punct(&self, id: Id) -> bool {
        self.punct_ids.contains(&id)
    }

    pub fn subwords(&self) -> &[Subword] {
        &self.subwords
    }

    pub fn get(&self, id: Id) -> Option<&Subword> {
        self.subwords.get(id as usize)
    }

    pub fn role(&self, id: Id) -> Option<Role> {
        self.get(id).map(|s| s.role)
    }

    pub fn is_marked(&self, id: Id) -> bool {
        self.role(id) == Some(self.scheme.marked_role())
    }

    pub fn is_mid(&self, id: Id) -> bool {
        self.role(id) == Some(Role::Mid)
    }

    pub fn contains(&self, id: Id) -> bool {
        (id as usize) < self.subwords.len()
    }

    /// Marked ids followed by eos, in id order.
    pub fn marked_with_eos(&self) -> Vec<Id> {
        self.ids_with_eos(|s| s.role == self.scheme.marked_role())
    }

    /// Unmarked ids followed by eos, in id order.
    pub fn mid_with_eos(&self) -> Vec<Id> {
        self.ids_with_eos(|s| s.role == Role::Mid)
    }

    fn ids_with_eos(&self, keep: impl Fn(&Subword) -> bool) -> Vec<Id> {
        let mut ids: Vec<Id> = self.subwords.iter().filter(|s| keep(s)).map(|s| s.id).collect();
        ids.push(self.eos_id);
        ids
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("id\tsurface\trole\n");
        for s in &self.subwords {
            out.push_str(&format!("{}\t{}\t{}\n", s.id, s.surface, s.role));
        }
        out
    }
}

fn parse_vocab_tsv(text: &str, path: &str) -> Result<Vec<Subword>, VocabError> {
    let err = |line: usize, msg: String| VocabError::Parse { path: path.to_string(), line, msg };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == "id\tsurface\trole" => {}
        _ => return Err(err(1, "expected header `id<TAB>surface<TAB>role`".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(err(i + 1, format!("expected 3 columns, found {}", cols.len())));
        }
        let id = cols[0].parse::<Id>().map_err(|e| err(i + 1, e.to_string()))?;
        let role = cols[2].parse::<Role>().map_err(|e| err(i + 1, e))?;
        out.push(Subword::new(id, cols[1], role));
    }
    Ok(out)
}

/// Checks the role partition and id layout; reports shared surfaces, which
/// make the word-level code ambiguous.
pub fn validate_vocabulary(vocab: &MarkedVocabulary) -> Result<ValidationReport, VocabError> {
    let mut seen = BTreeSet::new();
    for s in &vocab.subwords {
        if !seen.insert(s.id) {
            return Err(VocabError::DuplicateId(s.id));
        }
    }
    let size = vocab.subwords.len();
    for s in &vocab.subwords {
        if s.id as usize >= size {
            return Err(VocabError::IdOutOfRange { expected: size, found: s.id });
        }
        if s.surface.is_empty() || s.text().is_empty() {
            return Err(VocabError::EmptySurface(s.id));
        }
        if s.role != Role::Mid && s.role != vocab.scheme.marked_role() {
            return Err(VocabError::RoleOutsideScheme { id: s.id, role: s.role, scheme: vocab.scheme });
        }
    }
    if vocab.eos_id as usize != size {
        return Err(VocabError::EosPlacement { eos: vocab.eos_id, size });
    }
    let marked = vocab.subwords.iter().filter(|s| s.role == vocab.scheme.marked_role()).count();
    if marked == 0 {
        return Err(VocabError::EmptyMarkedSet(vocab.scheme.marked_role()));
    }
    for &p in &vocab.punct_ids {
        if p as usize > size {
            return Err(VocabError::UnknownPunct(p));
        }
    }
    let mut by_text: BTreeMap<(&str, Role), Id> = BTreeMap::new();
    let mut shared = Vec::new();
    for s in &vocab.subwords {
        if let Some(&other) = by_text.get(&(s.text(), s.role)) {
            shared.push((other, s.id));
        } else {
            by_text.insert((s.text(), s.role), s.id);
        }
    }
    Ok(ValidationReport { shared_surfaces: shared, marked, unmarked: size - marked })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Vec<Subword> {
        vec![
            Subword::new(0, "_a", Role::Bow),
            Subword::new(1, "_b", Role::Bow),
            Subword::new(2, "c", Role::Mid),
        ]
    }

    #[test]
    fn well_formed_partition() {
        let v = MarkedVocabulary::new(toy(), Scheme::Bow, []).unwrap();
        let report = validate_vocabulary(&v).unwrap();
        assert!(report.is_clean());
        assert_eq!((report.marked, report.unmarked), (2, 1));
        assert_eq!(v.eos(), 3);
        assert_eq!(v.marked_with_eos(), vec![0, 1, 3]);
        assert_eq!(v.mid_with_eos(), vec![2, 3]);
    }

    #[test]
    fn duplicate_id() {
        let mut sw = toy();
        sw[1].id = 0;
        assert_eq!(MarkedVocabulary::new(sw, Scheme::Bow, []), Err(VocabError::DuplicateId(0)));
    }

    #[test]
    fn empty_marked_set() {
        let sw = vec![Subword::new(0, "a", Role::Mid)];
        assert_eq!(
            MarkedVocabulary::new(sw, Scheme::Bow, []),
            Err(VocabError::EmptyMarkedSet(Role::Bow))
        );
    }

    #[test]
    fn empty_surface() {
        let mut sw = toy();
        sw[2].surface.clear();
        assert_eq!(MarkedVocabulary::new(sw, Scheme::Bow, []), Err(VocabError::EmptySurface(2)));
        let bare_marker = vec![Subword::new(0, "_", Role::Bow)];
        assert_eq!(
            MarkedVocabulary::new(bare_marker, Scheme::Bow, []),
            Err(VocabError::EmptySurface(0))
        );
    }

    #[test]
    fn roles_must_fit_scheme() {
        assert!(matches!(
            MarkedVocabulary::new(toy(), Scheme::Eow, []),
            Err(VocabError::RoleOutsideScheme { id: 0, .. })
        ));
    }

    #[test]
    fn shared_surface_is_reported() {
        let mut sw = toy();
        sw.push(Subword::new(3, "c", Role::Mid));
        let v = MarkedVocabulary::new(sw, Scheme::Bow, []).unwrap();
        assert_eq!(validate_vocabulary(&v).unwrap().shared_surfaces, vec![(2, 3)]);
    }

    #[test]
    fn tsv_round_trip() {
        let v = MarkedVocabulary::new(toy(), Scheme::Bow, [3]).unwrap();
        let parsed = parse_vocab_tsv(&v.to_tsv(), "mem").unwrap();
        assert_eq!(parsed, v.subwords);
    }

    #[test]
    fn partition_covers_id_range() {
        let v = MarkedVocabulary::new(toy(), Scheme::Bow, []).unwrap();
        let mut all: Vec<Id> = v.marked_with_eos();
        all.extend(v.mid_with_eos());
        all.sort();
        all.dedup();
        assert_eq!(all, (0..=v.eos()).collect::<Vec<_>>());
    }
}
