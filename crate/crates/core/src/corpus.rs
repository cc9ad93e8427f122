//! Posts, raw annotation ingestion and aggregation, corpus files.
//!
//! A raw annotation row is one annotator's judgment of one post. Aggregation
//! groups rows by post and derives a single binary label and a target set:
//!
//! * a target is kept when at least half of the post's annotators flagged it
//!   (`2 * flags >= n`, so 2 of 4 is enough);
//! * the label is hateful when the mean `hatespeech` score is above 1 and
//!   non-hateful when below 1. Posts whose mean is exactly 1 are excluded and
//!   listed in the aggregation report.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eda::EdaOperation;
use crate::error::{Error, Result};
use crate::generate::PromptMode;

/// The seven identity categories a post can target.
///
/// Variants are declared alphabetically so that ordered sets iterate in
/// alphabetical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetIdentity {
    Age,
    Disability,
    Gender,
    Origin,
    Race,
    Religion,
    Sexuality,
}

impl TargetIdentity {
    pub const ALL: [TargetIdentity; 7] = [
        TargetIdentity::Race,
        TargetIdentity::Religion,
        TargetIdentity::Origin,
        TargetIdentity::Gender,
        TargetIdentity::Sexuality,
        TargetIdentity::Age,
        TargetIdentity::Disability,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TargetIdentity::Race => "race",
            TargetIdentity::Religion => "religion",
            TargetIdentity::Origin => "origin",
            TargetIdentity::Gender => "gender",
            TargetIdentity::Sexuality => "sexuality",
            TargetIdentity::Age => "age",
            TargetIdentity::Disability => "disability",
        }
    }
}

impl fmt::Display for TargetIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TargetIdentity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TargetIdentity::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Schema(format!("unknown target identity `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    #[default]
    NonHateful,
    Hateful,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Hateful, Label::NonHateful];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Hateful => "hateful",
            Label::NonHateful => "non_hateful",
        }
    }

    pub fn is_hateful(self) -> bool {
        self == Label::Hateful
    }

    pub fn from_hateful(hateful: bool) -> Self {
        if hateful {
            Label::Hateful
        } else {
            Label::NonHateful
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hateful" => Ok(Label::Hateful),
            "non_hateful" | "non-hateful" => Ok(Label::NonHateful),
            other => Err(Error::Schema(format!("unknown label `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Gold,
    Eda,
    Generated,
}

/// Where a synthetic post came from. Gold posts carry none of these fields.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_mode: Option<PromptMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub with_target: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intended_label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intended_target: Option<TargetIdentity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eda_operation: Option<EdaOperation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_id: Option<String>,
}

impl SourceMeta {
    fn has_generator_fields(&self) -> bool {
        self.generator.is_some()
            || self.prompt_mode.is_some()
            || self.intended_label.is_some()
            || self.intended_target.is_some()
            || self.prompt_hash.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    #[serde(rename = "id")]
    pub post_id: String,
    pub text: String,
    pub label: Label,
    pub targets: BTreeSet<TargetIdentity>,
    pub provenance: Provenance,
    #[serde(default)]
    pub source_meta: Option<SourceMeta>,
}

impl Post {
    pub fn gold(
        post_id: impl Into<String>,
        text: impl Into<String>,
        label: Label,
        targets: impl IntoIterator<Item = TargetIdentity>,
    ) -> Self {
        Post {
            post_id: post_id.into(),
            text: text.into(),
            label,
            targets: targets.into_iter().collect(),
            provenance: Provenance::Gold,
            source_meta: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.text.trim().is_empty() {
            return Err(Error::Input(format!("post {} has empty text", self.post_id)));
        }
        if self.provenance == Provenance::Gold
            && self.source_meta.as_ref().is_some_and(SourceMeta::has_generator_fields)
        {
            return Err(Error::Input(format!(
                "gold post {} carries generator metadata",
                self.post_id
            )));
        }
        Ok(())
    }

    pub fn intended_label(&self) -> Option<Label> {
        self.source_meta.as_ref().and_then(|m| m.intended_label)
    }

    pub fn intended_target(&self) -> Option<TargetIdentity> {
        self.source_meta.as_ref().and_then(|m| m.intended_target)
    }
}

/// One annotator's judgment of one post.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawAnnotation {
    pub post_id: String,
    pub annotator_id: String,
    pub text: String,
    /// 0 non-hateful, 1 unclear, 2 hateful.
    pub hatespeech_score: u8,
    pub target_flags: BTreeSet<TargetIdentity>,
}

const REQUIRED_COLUMNS: [&str; 4] = ["post_id", "annotator_id", "text", "hatespeech"];

fn parse_flag(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "1.0" => Some(true),
        "false" | "0" | "0.0" | "" => Some(false),
        _ => None,
    }
}

fn parse_score(raw: &str) -> Option<u8> {
    let raw = raw.trim();
    if let Ok(v) = raw.parse::<u8>() {
        return Some(v);
    }
    // The MHS release stores the score as a float (`2.0`).
    let v: f64 = raw.parse().ok()?;
    (v.fract() == 0.0 && (0.0..=255.0).contains(&v)).then_some(v as u8)
}

/// Parse raw annotation CSV rows.
///
/// Besides the seven `target_<category>` columns, any `target_<category>_<subgroup>`
/// column is OR-ed into its category. `comment_id` is accepted in place of
/// `post_id`. Row numbers in errors count data rows from 1.
pub fn parse_annotations<R: Read>(reader: R) -> Result<Vec<RawAnnotation>> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = csv.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);

    let mut idx = HashMap::new();
    for name in REQUIRED_COLUMNS {
        let pos = find(name).or_else(|| (name == "post_id").then(|| find("comment_id")).flatten());
        match pos {
            Some(p) => {
                idx.insert(name, p);
            }
            None => return Err(Error::Schema(format!("missing column `{name}`"))),
        }
    }

    let mut flag_columns: Vec<(usize, TargetIdentity)> = Vec::new();
    for target in TargetIdentity::ALL {
        let top = format!("target_{}", target.as_str());
        if find(&top).is_none() {
            return Err(Error::Schema(format!("missing column `{top}`")));
        }
        let sub = format!("{top}_");
        for (i, h) in headers.iter().enumerate() {
            if h == top || h.starts_with(&sub) {
                flag_columns.push((i, target));
            }
        }
    }

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let field = |col: usize| record.get(col).unwrap_or("");
        let value_err = |message: String| Error::Value { row, message };

        let post_id = field(idx["post_id"]).to_string();
        let annotator_id = field(idx["annotator_id"]).to_string();
        let raw_score = field(idx["hatespeech"]);
        let hatespeech_score = parse_score(raw_score)
            .filter(|s| *s <= 2)
            .ok_or_else(|| value_err(format!("hatespeech must be 0, 1 or 2, got `{raw_score}`")))?;

        let mut target_flags = BTreeSet::new();
        for &(col, target) in &flag_columns {
            let raw = field(col);
            let flag = parse_flag(raw).ok_or_else(|| {
                value_err(format!("column `{}`: not a boolean: `{raw}`", &headers[col]))
            })?;
            if flag {
                target_flags.insert(target);
            }
        }

        if !seen.insert((post_id.clone(), annotator_id.clone())) {
            return Err(value_err(format!(
                "duplicate annotation of post {post_id} by annotator {annotator_id}"
            )));
        }
        out.push(RawAnnotation {
            post_id,
            annotator_id,
            text: field(idx["text"]).to_string(),
            hatespeech_score,
            target_flags,
        });
    }
    Ok(out)
}

pub fn read_annotations(path: &Path) -> Result<Vec<RawAnnotation>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_annotations(BufReader::new(file))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcludedPost {
    pub post_id: String,
    pub annotators: usize,
    pub mean_score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregation {
    pub posts: Vec<Post>,
    pub excluded: Vec<ExcludedPost>,
}

/// Collapse annotation rows into one gold post per `post_id`, in order of
/// first appearance.
pub fn aggregate(annotations: &[RawAnnotation]) -> Result<Aggregation> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<&RawAnnotation>> = HashMap::new();
    for a in annotations {
        groups
            .entry(a.post_id.as_str())
            .or_insert_with(|| {
                order.push(a.post_id.as_str());
                Vec::new()
            })
            .push(a);
    }

    let mut posts = Vec::new();
    let mut excluded = Vec::new();
    for post_id in order {
        let group = &groups[post_id];
        let text = &group[0].text;
        if group.iter().any(|a| &a.text != text) {
            return Err(Error::Consistency {
                post_id: post_id.to_string(),
                message: "annotations disagree on the post text".into(),
            });
        }

        let n = group.len();
        let score_sum: usize = group.iter().map(|a| a.hatespeech_score as usize).sum();
        let mut flag_counts: BTreeMap<TargetIdentity, usize> = BTreeMap::new();
        for t in group.iter().flat_map(|a| a.target_flags.iter()) {
            *flag_counts.entry(*t).or_default() += 1;
        }
        let targets = flag_counts
            .into_iter()
            .filter(|&(_, c)| 2 * c >= n)
            .map(|(t, _)| t);

        // mean > 1  <=>  sum > n, kept in integers to avoid rounding at the boundary
        let label = match score_sum.cmp(&n) {
            std::cmp::Ordering::Greater => Label::Hateful,
            std::cmp::Ordering::Less => Label::NonHateful,
            std::cmp::Ordering::Equal => {
                excluded.push(ExcludedPost {
                    post_id: post_id.to_string(),
                    annotators: n,
                    mean_score: 1.0,
                });
                continue;
            }
        };
        posts.push(Post::gold(post_id, text.clone(), label, targets));
    }
    Ok(Aggregation { posts, excluded })
}

/// Seeded uniform sample of `n` posts without replacement.
pub fn sample_gold(corpus: &[Post], n: usize, seed: u64) -> Result<Vec<Post>> {
    if n > corpus.len() {
        return Err(Error::Size {
            requested: n,
            available: corpus.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(index::sample(&mut rng, corpus.len(), n)
        .into_iter()
        .map(|i| corpus[i].clone())
        .collect())
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total_posts: usize,
    pub hateful_posts: usize,
    pub per_target_counts: BTreeMap<TargetIdentity, usize>,
    pub untargeted_count: usize,
}

pub fn corpus_stats(corpus: &[Post]) -> CorpusStats {
    let mut stats = CorpusStats::default();
    for post in corpus {
        stats.total_posts += 1;
        if post.label.is_hateful() {
            stats.hateful_posts += 1;
        }
        if post.targets.is_empty() {
            stats.untargeted_count += 1;
        }
        for t in &post.targets {
            *stats.per_target_counts.entry(*t).or_default() += 1;
        }
    }
    stats
}

pub fn parse_corpus<R: BufRead>(reader: R, path: &Path) -> Result<Vec<Post>> {
    let mut posts = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let post: Post = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        post.validate().map_err(|e| parse_err(e.to_string()))?;
        posts.push(post);
    }
    Ok(posts)
}

pub fn read_corpus(path: &Path) -> Result<Vec<Post>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(BufReader::new(file), path)
}

pub fn write_corpus(path: &Path, corpus: &[Post]) -> Result<()> {
    write_jsonl(path, corpus)
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "post_id,annotator_id,text,hatespeech,target_race,target_religion,target_origin,target_gender,target_sexuality,target_age,target_disability";

    fn ann(post: &str, annotator: &str, score: u8, targets: &[TargetIdentity]) -> RawAnnotation {
        RawAnnotation {
            post_id: post.into(),
            annotator_id: annotator.into(),
            text: format!("text of {post}"),
            hatespeech_score: score,
            target_flags: targets.iter().copied().collect(),
        }
    }

    #[test]
    fn parses_row_into_annotation() {
        let data = format!("{HEADER}\np1,a1,some text,2,true,false,0,0,false,false,0\n");
        let rows = parse_annotations(data.as_bytes()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].hatespeech_score, 2);
        assert_eq!(rows[0].target_flags, BTreeSet::from([TargetIdentity::Race]));
    }

    #[test]
    fn out_of_range_score_names_row() {
        let data = format!(
            "{HEADER}\np1,a1,ok,0,0,0,0,0,0,0,0\np2,a1,bad,3,0,0,0,0,0,0,0\n"
        );
        match parse_annotations(data.as_bytes()) {
            Err(Error::Value { row, .. }) => assert_eq!(row, 2),
            other => panic!("expected value error, got {other:?}"),
        }
    }

    #[test]
    fn empty_input_is_empty_list() {
        let rows = parse_annotations(format!("{HEADER}\n").as_bytes()).unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn missing_column_is_schema_error() {
        let data = "post_id,annotator_id,text,hatespeech\np1,a1,x,0\n";
        assert!(matches!(parse_annotations(data.as_bytes()), Err(Error::Schema(_))));
    }

    #[test]
    fn subgroup_columns_fold_into_category() {
        let data = format!("{HEADER},target_gender_women\np1,a1,x,1,0,0,0,false,0,0,0,True\n");
        let rows = parse_annotations(data.as_bytes()).unwrap();
        assert_eq!(rows[0].target_flags, BTreeSet::from([TargetIdentity::Gender]));
    }

    #[test]
    fn duplicate_pair_rejected() {
        let data = format!("{HEADER}\np1,a1,x,0,0,0,0,0,0,0,0\np1,a1,x,1,0,0,0,0,0,0,0\n");
        assert!(matches!(
            parse_annotations(data.as_bytes()),
            Err(Error::Value { row: 2, .. })
        ));
    }

    #[test]
    fn three_of_five_gender_flags_make_gender_target() {
        use TargetIdentity::*;
        let rows: Vec<_> = (0..5)
            .map(|i| ann("p", &format!("a{i}"), 2, if i < 3 { &[Gender] } else { &[] }))
            .collect();
        let agg = aggregate(&rows).unwrap();
        assert_eq!(agg.posts[0].targets, BTreeSet::from([Gender]));
    }

    #[test]
    fn two_of_four_is_at_least_half() {
        use TargetIdentity::*;
        let rows = vec![
            ann("p", "a", 2, &[Age]),
            ann("p", "b", 2, &[Age]),
            ann("p", "c", 2, &[]),
            ann("p", "d", 2, &[Race]),
        ];
        let agg = aggregate(&rows).unwrap();
        assert_eq!(agg.posts[0].targets, BTreeSet::from([Age]));
    }

    #[test]
    fn mean_above_one_is_hateful() {
        let rows: Vec<_> = [0, 1, 2, 2]
            .iter()
            .enumerate()
            .map(|(i, s)| ann("p", &i.to_string(), *s, &[]))
            .collect();
        // (0 + 1 + 2 + 2) / 4 = 1.25
        assert_eq!(aggregate(&rows).unwrap().posts[0].label, Label::Hateful);
    }

    #[test]
    fn mean_exactly_one_is_excluded() {
        let rows = vec![ann("p", "a", 0, &[]), ann("p", "b", 2, &[])];
        let agg = aggregate(&rows).unwrap();
        assert!(agg.posts.is_empty());
        assert_eq!(agg.excluded[0].post_id, "p");
    }

    #[test]
    fn conflicting_texts_rejected() {
        let mut rows = vec![ann("p", "a", 0, &[]), ann("p", "b", 0, &[])];
        rows[1].text = "other".into();
        assert!(matches!(aggregate(&rows), Err(Error::Consistency { .. })));
    }

    fn toy_corpus(n: usize) -> Vec<Post> {
        (0..n)
            .map(|i| Post::gold(format!("p{i}"), format!("post {i}"), Label::NonHateful, []))
            .collect()
    }

    #[test]
    fn full_sample_is_permutation() {
        let corpus = toy_corpus(50);
        let mut ids: Vec<_> = sample_gold(&corpus, 50, 7).unwrap().into_iter().map(|p| p.post_id).collect();
        ids.sort();
        let mut expected: Vec<_> = corpus.into_iter().map(|p| p.post_id).collect();
        expected.sort();
        assert_eq!(ids, expected);
    }

    #[test]
    fn sample_is_deterministic_and_checks_size() {
        let corpus = toy_corpus(100);
        assert_eq!(sample_gold(&corpus, 10, 3).unwrap(), sample_gold(&corpus, 10, 3).unwrap());
        assert!(matches!(sample_gold(&corpus, 101, 3), Err(Error::Size { .. })));
    }

    #[test]
    fn stats_count_targets_and_untargeted() {
        use TargetIdentity::*;
        assert_eq!(corpus_stats(&[]), CorpusStats::default());
        let corpus = vec![
            Post::gold("a", "x", Label::Hateful, [Race, Gender]),
            Post::gold("b", "y", Label::NonHateful, []),
        ];
        let s = corpus_stats(&corpus);
        assert_eq!(s.per_target_counts[&Race], 1);
        assert_eq!(s.per_target_counts[&Gender], 1);
        assert_eq!(s.untargeted_count, 1);
        assert_eq!(s.hateful_posts, 1);
    }

    #[test]
    fn corpus_round_trip_preserves_unicode() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let mut corpus = toy_corpus(3);
        corpus[1].text = "naïve 🙂 “quoted” \u{200d}".into();
        corpus[2].targets.insert(TargetIdentity::Religion);
        write_corpus(&path, &corpus).unwrap();
        assert_eq!(read_corpus(&path).unwrap(), corpus);
        let raw = std::fs::read_to_string(&path).unwrap();
        assert!(raw.contains("naïve 🙂"));
    }

    #[test]
    fn bad_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        write_corpus(&path, &toy_corpus(2)).unwrap();
        let mut raw = std::fs::read_to_string(&path).unwrap();
        raw.push_str("{not json}\n");
        std::fs::write(&path, raw).unwrap();
        match read_corpus(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn target_parsing_is_closed() {
        assert_eq!("age".parse::<TargetIdentity>().unwrap(), TargetIdentity::Age);
        assert!("class".parse::<TargetIdentity>().is_err());
    }
}
