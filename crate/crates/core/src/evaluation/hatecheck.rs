//! Functional test cases in the HateCheck format, scored per target identity
//! and rolled up into the seven corpus categories.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::ConfusionCounts;
use crate::classifier::Scorer;
use crate::corpus::{Label, Post, Provenance, TargetIdentity};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HateCheckIdent {
    #[serde(rename = "women")]
    Women,
    #[serde(rename = "trans people")]
    TransPeople,
    #[serde(rename = "gay people")]
    GayPeople,
    #[serde(rename = "black people")]
    BlackPeople,
    #[serde(rename = "disabled people")]
    DisabledPeople,
    #[serde(rename = "Muslims")]
    Muslims,
    #[serde(rename = "immigrants")]
    Immigrants,
}

/// HateCheck identity to corpus category. Nothing maps to `age`.
pub const TARGET_MAP: [(HateCheckIdent, TargetIdentity); 7] = [
    (HateCheckIdent::Women, TargetIdentity::Gender),
    (HateCheckIdent::TransPeople, TargetIdentity::Gender),
    (HateCheckIdent::GayPeople, TargetIdentity::Sexuality),
    (HateCheckIdent::BlackPeople, TargetIdentity::Race),
    (HateCheckIdent::DisabledPeople, TargetIdentity::Disability),
    (HateCheckIdent::Muslims, TargetIdentity::Religion),
    (HateCheckIdent::Immigrants, TargetIdentity::Origin),
];

impl HateCheckIdent {
    pub const ALL: [HateCheckIdent; 7] = [
        HateCheckIdent::Women,
        HateCheckIdent::TransPeople,
        HateCheckIdent::GayPeople,
        HateCheckIdent::BlackPeople,
        HateCheckIdent::DisabledPeople,
        HateCheckIdent::Muslims,
        HateCheckIdent::Immigrants,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HateCheckIdent::Women => "women",
            HateCheckIdent::TransPeople => "trans people",
            HateCheckIdent::GayPeople => "gay people",
            HateCheckIdent::BlackPeople => "black people",
            HateCheckIdent::DisabledPeople => "disabled people",
            HateCheckIdent::Muslims => "Muslims",
            HateCheckIdent::Immigrants => "immigrants",
        }
    }

    pub fn mhs_category(self) -> TargetIdentity {
        TARGET_MAP
            .iter()
            .find(|(ident, _)| *ident == self)
            .map(|(_, t)| *t)
            .expect("every identity is in the table")
    }
}

impl fmt::Display for HateCheckIdent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HateCheckIdent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_lowercase();
        HateCheckIdent::ALL
            .into_iter()
            .find(|i| i.as_str().to_lowercase() == wanted)
            .ok_or_else(|| Error::Schema(format!("unknown HateCheck target `{s}`")))
    }
}

/// Parse a `target_ident` cell: a HateCheck identity, or `none`/empty.
pub fn parse_target_ident(raw: &str) -> Result<Option<HateCheckIdent>> {
    let t = raw.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        t.parse().map(Some)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HateCheckCase {
    pub functionality: String,
    pub case_id: String,
    pub text: String,
    pub gold_label: Label,
    pub target_ident: Option<HateCheckIdent>,
}

impl HateCheckCase {
    fn as_post(&self) -> Post {
        Post {
            post_id: self.case_id.clone(),
            text: self.text.clone(),
            label: self.gold_label,
            targets: self.target_ident.map(HateCheckIdent::mhs_category).into_iter().collect(),
            provenance: Provenance::Gold,
            source_meta: None,
        }
    }
}

/// Read HateCheck cases: `functionality,case_id,test_case,label_gold,target_ident`.
pub fn parse_hatecheck<R: Read>(reader: R) -> Result<Vec<HateCheckCase>> {
    let mut csv = csv::ReaderBuilder::new().from_reader(reader);
    let headers = csv.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing HateCheck column `{name}`")))
    };
    let (functionality, case_id, text, label, ident) = (
        col("functionality")?,
        col("case_id")?,
        col("test_case")?,
        col("label_gold")?,
        col("target_ident")?,
    );
    let mut out = Vec::new();
    for (i, rec) in csv.records().enumerate() {
        let rec = rec?;
        let get = |c: usize| rec.get(c).unwrap_or("").to_string();
        let gold_label = match get(label).trim() {
            "hateful" => Label::Hateful,
            "non-hateful" | "non_hateful" => Label::NonHateful,
            other => {
                return Err(Error::Value {
                    row: i + 1,
                    message: format!("label_gold must be hateful or non-hateful, got `{other}`"),
                })
            }
        };
        out.push(HateCheckCase {
            functionality: get(functionality),
            case_id: get(case_id),
            text: get(text),
            gold_label,
            target_ident: parse_target_ident(&get(ident))?,
        });
    }
    Ok(out)
}

pub fn read_hatecheck(path: &Path) -> Result<Vec<HateCheckCase>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_hatecheck(file)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketScore {
    pub hate_f1: f64,
    pub n: usize,
    pub counts: ConfusionCounts,
}

impl From<ConfusionCounts> for BucketScore {
    fn from(counts: ConfusionCounts) -> Self {
        BucketScore {
            hate_f1: counts.hate_f1(),
            n: counts.total(),
            counts,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalityScore {
    pub accuracy: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HateCheckReport {
    /// Keyed by HateCheck identity name.
    pub per_target: BTreeMap<String, BucketScore>,
    /// Pooled counts of the identities mapped to each category.
    pub per_category: BTreeMap<TargetIdentity, BucketScore>,
    pub per_functionality: BTreeMap<String, FunctionalityScore>,
    pub overall: BucketScore,
}

pub fn hatecheck_evaluate(cases: &[HateCheckCase], scorer: &dyn Scorer) -> Result<HateCheckReport> {
    if cases.is_empty() {
        return Err(Error::Input("no HateCheck cases".into()));
    }
    let mut per_ident: BTreeMap<HateCheckIdent, ConfusionCounts> = BTreeMap::new();
    let mut per_func: BTreeMap<String, ConfusionCounts> = BTreeMap::new();
    let mut overall = ConfusionCounts::default();
    for case in cases {
        let pred = scorer.predict_label(&case.as_post())?;
        overall.add(case.gold_label, pred);
        per_func.entry(case.functionality.clone()).or_default().add(case.gold_label, pred);
        if let Some(ident) = case.target_ident {
            per_ident.entry(ident).or_default().add(case.gold_label, pred);
        }
    }
    Ok(HateCheckReport {
        per_category: rollup(&per_ident),
        per_target: per_ident
            .into_iter()
            .map(|(i, c)| (i.as_str().to_string(), c.into()))
            .collect(),
        per_functionality: per_func
            .into_iter()
            .map(|(f, c)| {
                (
                    f,
                    FunctionalityScore {
                        accuracy: c.accuracy(),
                        n: c.total(),
                    },
                )
            })
            .collect(),
        overall: overall.into(),
    })
}

fn rollup(per_ident: &BTreeMap<HateCheckIdent, ConfusionCounts>) -> BTreeMap<TargetIdentity, BucketScore> {
    let mut pooled: BTreeMap<TargetIdentity, ConfusionCounts> = BTreeMap::new();
    for (ident, counts) in per_ident {
        pooled.entry(ident.mhs_category()).or_default().merge(counts);
    }
    pooled.into_iter().map(|(t, c)| (t, c.into())).collect()
}
