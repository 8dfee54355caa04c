//! BATS-layout analogy datasets: parsing, vocabulary resolution and analogy
//! enumeration.
//!
//! Layout: `<root>/<digit>_<TypeName>/<code> [<name>].txt`, one
//! `start<TAB>end` pair per line where `end` may list slash-separated
//! alternatives. Only the first alternative is kept, and only the first pair
//! for a repeated start word.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embed_io::{EmbeddingTable, LookupPolicy};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Minimum number of resolved pairs for OCS/PCS.
pub const MIN_METRIC_PAIRS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BroadType {
    Inflectional,
    Derivational,
    Encyclopedic,
    Lexicographic,
}

impl BroadType {
    pub const ALL: [BroadType; 4] = [
        BroadType::Inflectional,
        BroadType::Derivational,
        BroadType::Encyclopedic,
        BroadType::Lexicographic,
    ];

    /// Maps the leading digit of a BATS type directory (`1_Inflectional_morphology`).
    pub fn from_directory(name: &str) -> Option<BroadType> {
        match name.chars().next()? {
            '1' => Some(BroadType::Inflectional),
            '2' => Some(BroadType::Derivational),
            '3' => Some(BroadType::Encyclopedic),
            '4' => Some(BroadType::Lexicographic),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BroadType::Inflectional => "inflectional",
            BroadType::Derivational => "derivational",
            BroadType::Encyclopedic => "encyclopedic",
            BroadType::Lexicographic => "lexicographic",
        }
    }
}

impl fmt::Display for BroadType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordPair {
    pub start: String,
    pub end: String,
}

/// A named set of word pairs sharing one linguistic relation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub name: String,
    pub broad_type: BroadType,
    pub pairs: Vec<WordPair>,
}

impl Relation {
    /// Builds a relation, keeping the first pair for each start word.
    pub fn new(name: impl Into<String>, broad_type: BroadType, pairs: Vec<WordPair>) -> Self {
        let mut seen = HashSet::new();
        let pairs = pairs
            .into_iter()
            .filter(|p| seen.insert(p.start.clone()))
            .collect();
        Relation {
            name: name.into(),
            broad_type,
            pairs,
        }
    }
}

/// Parses the body of one relation file.
pub fn parse_relation(name: &str, broad_type: BroadType, text: &str) -> Result<Relation> {
    let mut pairs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: &str| Error::TextParse {
            source_name: name.to_string(),
            line: lineno,
            message: message.to_string(),
        };
        let (start, end) = line
            .split_once('\t')
            .ok_or_else(|| err("missing tab separator"))?;
        let start = start.trim();
        let end = end.split('/').next().unwrap_or_default().trim();
        if start.is_empty() || end.is_empty() {
            return Err(err("empty field"));
        }
        pairs.push(WordPair {
            start: start.to_string(),
            end: end.to_string(),
        });
    }
    Ok(Relation::new(name, broad_type, pairs))
}

/// Parses one relation file. The relation name is the file stem and the
/// broad type comes from the parent directory's leading digit.
pub fn parse_relation_file(path: &Path) -> Result<Relation> {
    let dir = path
        .parent()
        .and_then(|p| p.file_name())
        .and_then(|n| n.to_str())
        .unwrap_or_default();
    let broad_type = BroadType::from_directory(dir).ok_or_else(|| {
        Error::Dataset(format!(
            "cannot infer broad type of {} from directory `{dir}`",
            path.display()
        ))
    })?;
    let name = path
        .file_stem()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Dataset(format!("bad file name {}", path.display())))?;
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_relation(name, broad_type, &text)
}

fn sorted_entries(dir: &Path) -> Result<Vec<fs::DirEntry>> {
    let mut entries = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(dir, e))?;
    entries.sort_by_key(|e| e.file_name());
    Ok(entries)
}

/// Loads every relation under a BATS root, in path-sorted order.
pub fn load_dataset(root: &Path) -> Result<Vec<Relation>> {
    let mut relations = Vec::new();
    let mut found = Vec::new();
    for entry in sorted_entries(root)? {
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with('.') || !entry.path().is_dir() {
            continue;
        }
        if BroadType::from_directory(&name).is_none() {
            return Err(Error::Dataset(format!(
                "unrecognized type directory `{name}` in {}",
                root.display()
            )));
        }
        found.push(name);
        for file in sorted_entries(&entry.path())? {
            let path = file.path();
            if path.extension().and_then(|e| e.to_str()) == Some("txt") {
                relations.push(parse_relation_file(&path)?);
            }
        }
    }
    if relations.is_empty() {
        return Err(Error::Dataset(format!(
            "no relation files under {} (type directories found: [{}])",
            root.display(),
            found.join(", ")
        )));
    }
    Ok(relations)
}

/// One pair bound to table rows. Words are the vocabulary forms that
/// matched, which may differ in case from the dataset when case fallback
/// was used.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedPair<T> {
    pub start: String,
    pub end: String,
    pub start_row: usize,
    pub end_row: usize,
    pub start_vec: Vec<T>,
    pub end_vec: Vec<T>,
}

impl<T: Scalar> ResolvedPair<T> {
    pub fn from_rows(table: &EmbeddingTable<T>, start_row: usize, end_row: usize) -> Self {
        ResolvedPair {
            start: table.word(start_row).to_string(),
            end: table.word(end_row).to_string(),
            start_row,
            end_row,
            start_vec: table.row(start_row).to_vec(),
            end_vec: table.row(end_row).to_vec(),
        }
    }
}

/// A relation restricted to in-vocabulary, non-degenerate pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedRelation<T> {
    pub name: String,
    /// `None` for baselines that have no type attribution.
    pub broad_type: Option<BroadType>,
    pub total_pairs: usize,
    pub pairs: Vec<ResolvedPair<T>>,
    pub dropped_oov: usize,
    pub dropped_identical: usize,
}

impl<T: Scalar> ResolvedRelation<T> {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn dropped(&self) -> usize {
        self.dropped_oov + self.dropped_identical
    }

    /// Whether OCS and PCS can be computed.
    pub fn usable(&self) -> bool {
        self.pairs.len() >= MIN_METRIC_PAIRS
    }

    pub fn require_usable(&self) -> Result<()> {
        if self.usable() {
            Ok(())
        } else {
            Err(Error::Ineligible {
                name: self.name.clone(),
                pairs: self.pairs.len(),
                required: MIN_METRIC_PAIRS,
            })
        }
    }

    /// Builds a relation from row pairs, dropping pairs whose two rows hold
    /// identical vectors.
    pub fn from_row_pairs(
        name: impl Into<String>,
        broad_type: Option<BroadType>,
        table: &EmbeddingTable<T>,
        rows: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let mut pairs = Vec::new();
        let mut identical = 0;
        let mut total = 0;
        for (s, e) in rows {
            total += 1;
            if table.row(s) == table.row(e) {
                identical += 1;
            } else {
                pairs.push(ResolvedPair::from_rows(table, s, e));
            }
        }
        ResolvedRelation {
            name: name.into(),
            broad_type,
            total_pairs: total,
            pairs,
            dropped_oov: 0,
            dropped_identical: identical,
        }
    }
}

/// Binds a relation to the table, dropping out-of-vocabulary pairs and pairs
/// whose words share one vector.
pub fn resolve<T: Scalar>(
    relation: &Relation,
    table: &EmbeddingTable<T>,
    policy: LookupPolicy,
) -> ResolvedRelation<T> {
    let mut oov = 0;
    let mut rows = Vec::new();
    for pair in &relation.pairs {
        match (
            table.lookup_index(&pair.start, policy),
            table.lookup_index(&pair.end, policy),
        ) {
            (Some(s), Some(e)) => rows.push((s, e)),
            _ => oov += 1,
        }
    }
    let mut resolved =
        ResolvedRelation::from_row_pairs(&relation.name, Some(relation.broad_type), table, rows);
    resolved.total_pairs = relation.pairs.len();
    resolved.dropped_oov = oov;
    resolved
}

/// An analogy `a : a* :: b : b*` drawn from two distinct pairs of a relation.
#[derive(Debug, Clone, Copy)]
pub struct AnalogyQuad<'a, T> {
    pub first: &'a ResolvedPair<T>,
    pub second: &'a ResolvedPair<T>,
}

impl<'a, T> AnalogyQuad<'a, T> {
    pub fn a(&self) -> &'a [T] {
        &self.first.start_vec
    }

    pub fn a_star(&self) -> &'a [T] {
        &self.first.end_vec
    }

    pub fn b(&self) -> &'a [T] {
        &self.second.start_vec
    }

    pub fn b_star(&self) -> &'a [T] {
        &self.second.end_vec
    }
}

/// All `N·(N−1)` ordered combinations of distinct pairs.
pub fn enumerate_quads<T>(resolved: &ResolvedRelation<T>) -> Vec<AnalogyQuad<'_, T>> {
    let pairs = &resolved.pairs;
    let mut quads = Vec::with_capacity(pairs.len() * pairs.len().saturating_sub(1));
    for (i, first) in pairs.iter().enumerate() {
        for (j, second) in pairs.iter().enumerate() {
            if i != j {
                quads.push(AnalogyQuad { first, second });
            }
        }
    }
    quads
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(s: &str, e: &str) -> WordPair {
        WordPair {
            start: s.into(),
            end: e.into(),
        }
    }

    #[test]
    fn parses_simple_line() {
        let r = parse_relation("I01", BroadType::Inflectional, "cat\tcats\n").unwrap();
        assert_eq!(r.pairs, vec![pair("cat", "cats")]);
    }

    #[test]
    fn keeps_first_alternative() {
        let r = parse_relation("I01", BroadType::Inflectional, "mouse\tmice/mouses\n").unwrap();
        assert_eq!(r.pairs, vec![pair("mouse", "mice")]);
    }

    #[test]
    fn keeps_first_pair_for_repeated_start() {
        let r = parse_relation("I07", BroadType::Inflectional, "run\tran\nrun\trunning\n").unwrap();
        assert_eq!(r.pairs, vec![pair("run", "ran")]);
    }

    #[test]
    fn missing_tab_and_empty_field_report_line() {
        match parse_relation("x", BroadType::Encyclopedic, "a\tb\nno-tab\n").unwrap_err() {
            Error::TextParse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
        match parse_relation("x", BroadType::Encyclopedic, "a\t\n").unwrap_err() {
            Error::TextParse { line, .. } => assert_eq!(line, 1),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn broad_type_from_directory_digit() {
        assert_eq!(
            BroadType::from_directory("3_Encyclopedic_semantics"),
            Some(BroadType::Encyclopedic)
        );
        assert_eq!(BroadType::from_directory("5_Other"), None);
        assert_eq!(BroadType::from_directory(""), None);
    }

    fn table() -> EmbeddingTable<f64> {
        let words = ["cat", "cats", "dog", "dogs", "fox", "foxes", "same", "twin"];
        let data = vec![
            1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.5, 1.5, 2.0, 2.0, 2.0, 3.0, 0.3, 0.3, 0.3, 0.3,
        ];
        EmbeddingTable::from_rows(words.iter().map(|w| w.to_string()).collect(), data, 2).unwrap()
    }

    #[test]
    fn resolve_all_present() {
        let rel = Relation::new(
            "r",
            BroadType::Inflectional,
            vec![
                pair("cat", "cats"),
                pair("dog", "dogs"),
                pair("fox", "foxes"),
            ],
        );
        let r = resolve(&rel, &table(), LookupPolicy::default());
        assert_eq!(r.dropped(), 0);
        assert_eq!(r.len(), 3);
        assert!(r.usable());
        assert_eq!(r.pairs[1].start, "dog");
    }

    #[test]
    fn resolve_drops_missing_and_identical() {
        let rel = Relation::new(
            "r",
            BroadType::Inflectional,
            vec![
                pair("cat", "cats"),
                pair("wolf", "wolves"),
                pair("same", "twin"),
                pair("dog", "dogs"),
            ],
        );
        let r = resolve(&rel, &table(), LookupPolicy::default());
        assert_eq!(r.dropped_oov, 1);
        assert_eq!(r.dropped_identical, 1);
        assert_eq!(r.total_pairs, 4);
        assert!(!r.usable());
        assert!(matches!(
            r.require_usable(),
            Err(Error::Ineligible { pairs: 2, .. })
        ));
    }

    #[test]
    fn resolve_everything_missing_is_unusable() {
        let rel = Relation::new(
            "r",
            BroadType::Lexicographic,
            vec![pair("x", "y"), pair("z", "w")],
        );
        let r = resolve(&rel, &table(), LookupPolicy::default());
        assert!(r.is_empty());
        assert_eq!(r.dropped_oov, 2);
        assert!(!r.usable());
    }

    #[test]
    fn resolve_uses_case_fallback() {
        let rel = Relation::new("r", BroadType::Inflectional, vec![pair("Cat", "CATS")]);
        let r = resolve(
            &rel,
            &table(),
            LookupPolicy {
                case_fallback: true,
            },
        );
        assert_eq!(r.pairs[0].start, "cat");
        assert_eq!(r.pairs[0].end, "cats");
    }

    #[test]
    fn quad_counts() {
        let t = table();
        let two = ResolvedRelation::from_row_pairs("r", None, &t, [(0, 1), (2, 3)]);
        assert_eq!(enumerate_quads(&two).len(), 2);
        let one = ResolvedRelation::from_row_pairs("r", None, &t, [(0, 1)]);
        assert!(enumerate_quads(&one).is_empty());

        let words: Vec<String> = (0..100).map(|i| format!("w{i}")).collect();
        let data: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let big = EmbeddingTable::from_rows(words, data, 1).unwrap();
        let fifty =
            ResolvedRelation::from_row_pairs("r", None, &big, (0..50).map(|i| (2 * i, 2 * i + 1)));
        let quads = enumerate_quads(&fifty);
        assert_eq!(quads.len(), 2450);
        assert!(quads
            .iter()
            .all(|q| q.first.start_row != q.second.start_row));
    }
}
