use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::plan::SessionPlan;
use crate::error::Error;
use crate::evaluation::{krippendorff_alpha_nominal, AnnotationJudgment, Dimension};

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Rejected(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Internal(#[from] Error),
}

pub type ApiResult<T> = std::result::Result<T, ApiError>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub annotator_id: String,
    pub total: usize,
    pub completed: usize,
}

/// What an annotator sees for one item: no label, target or setup.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemView {
    pub item_id: String,
    pub text: String,
    pub target_match_applies: bool,
    /// 1-based position of this item in the session.
    pub position: usize,
    pub total: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NextItem {
    pub done: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item: Option<ItemView>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgmentInput {
    pub item_id: String,
    pub hateful: bool,
    #[serde(default)]
    pub target_match: Option<bool>,
    pub realistic: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub seq: u64,
    /// True when an earlier judgment of the same item was superseded.
    pub replaced: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionAgreement {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub overlap_items: usize,
    pub judgments: usize,
    pub dimensions: BTreeMap<Dimension, DimensionAgreement>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum LogRecord {
    Session {
        session_id: String,
        annotator_id: String,
        shard: usize,
    },
    Judgment {
        seq: u64,
        session_id: String,
        replaces: bool,
        judgment: AnnotationJudgment,
    },
}

struct Session {
    annotator_id: String,
    queue: Vec<String>,
    served: BTreeSet<String>,
}

#[derive(Default)]
struct State {
    sessions: HashMap<String, Session>,
    by_annotator: HashMap<String, String>,
    /// (item, annotator) -> (first accepted seq, latest judgment)
    judgments: BTreeMap<(String, String), (u64, AnnotationJudgment)>,
    seq: u64,
    log: Option<File>,
}

/// Session state and the judgment log. All writes go through one mutex, so
/// the log has a single writer.
pub struct AnnotationService {
    plan: SessionPlan,
    log_path: Option<PathBuf>,
    state: Mutex<State>,
}

impl AnnotationService {
    /// Open the service, replaying `log_path` if it already exists.
    pub fn open(plan: SessionPlan, log_path: Option<&Path>) -> crate::Result<Self> {
        let mut state = State::default();
        if let Some(path) = log_path {
            if path.exists() {
                let file = File::open(path).map_err(|e| Error::io(path, e))?;
                for (n, line) in BufReader::new(file).lines().enumerate() {
                    let line = line.map_err(|e| Error::io(path, e))?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let record: LogRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                        path: path.to_path_buf(),
                        line: n + 1,
                        message: e.to_string(),
                    })?;
                    replay(&plan, &mut state, record);
                }
            }
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            let file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| Error::io(path, e))?;
            state.log = Some(file);
        }
        Ok(AnnotationService {
            plan,
            log_path: log_path.map(Path::to_path_buf),
            state: Mutex::new(state),
        })
    }

    pub fn plan(&self) -> &SessionPlan {
        &self.plan
    }

    pub fn log_path(&self) -> Option<&Path> {
        self.log_path.as_deref()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Start a session, or return the existing one for this annotator.
    pub fn create_session(&self, annotator_id: &str) -> ApiResult<SessionInfo> {
        let annotator_id = annotator_id.trim();
        if annotator_id.is_empty() {
            return Err(ApiError::Invalid("annotator_id must not be empty".into()));
        }
        let mut st = self.lock();
        if let Some(id) = st.by_annotator.get(annotator_id).cloned() {
            return Ok(info(&st, &id));
        }
        let shard = st.by_annotator.len() % self.plan.shards.len().max(1);
        let session_id = uuid::Uuid::new_v4().simple().to_string();
        let record = LogRecord::Session {
            session_id: session_id.clone(),
            annotator_id: annotator_id.to_string(),
            shard,
        };
        append(&mut st, self.log_path.as_deref(), &record)?;
        replay(&self.plan, &mut st, record);
        Ok(info(&st, &session_id))
    }

    pub fn session(&self, session_id: &str) -> ApiResult<SessionInfo> {
        let st = self.lock();
        if !st.sessions.contains_key(session_id) {
            return Err(unknown_session(session_id));
        }
        Ok(info(&st, session_id))
    }

    /// The first item in the queue this annotator has not judged yet.
    pub fn next_item(&self, session_id: &str) -> ApiResult<NextItem> {
        let mut st = self.lock();
        let State { sessions, judgments, .. } = &mut *st;
        let session = sessions.get_mut(session_id).ok_or_else(|| unknown_session(session_id))?;
        let done = |id: &String| judgments.contains_key(&(id.clone(), session.annotator_id.clone()));
        let Some(pos) = session.queue.iter().position(|id| !done(id)) else {
            return Ok(NextItem { done: true, item: None });
        };
        let id = session.queue[pos].clone();
        let item = self.plan.item(&id).expect("queued items come from the plan");
        session.served.insert(id.clone());
        let completed = session.queue.iter().filter(|id| done(id)).count();
        Ok(NextItem {
            done: false,
            item: Some(ItemView {
                item_id: id,
                text: item.text.clone(),
                target_match_applies: item.target_match_applies,
                position: completed + 1,
                total: session.queue.len(),
            }),
        })
    }

    pub fn submit(&self, session_id: &str, input: JudgmentInput) -> ApiResult<Receipt> {
        let mut st = self.lock();
        let session = st.sessions.get(session_id).ok_or_else(|| unknown_session(session_id))?;
        if !session.served.contains(&input.item_id) {
            return Err(ApiError::Rejected(format!("item {} has not been served to this session", input.item_id)));
        }
        let item = self.plan.item(&input.item_id).expect("served items come from the plan");
        match (item.target_match_applies, input.target_match) {
            (true, None) => return Err(ApiError::Invalid("target_match is required for this item".into())),
            (false, Some(_)) => return Err(ApiError::Invalid("target_match does not apply to this item".into())),
            _ => {}
        }
        let judgment = AnnotationJudgment {
            item_id: input.item_id,
            annotator_id: session.annotator_id.clone(),
            hateful: input.hateful,
            target_match: input.target_match,
            realistic: input.realistic,
        };
        let key = (judgment.item_id.clone(), judgment.annotator_id.clone());
        let replaces = st.judgments.contains_key(&key);
        let seq = st.seq + 1;
        let record = LogRecord::Judgment {
            seq,
            session_id: session_id.to_string(),
            replaces,
            judgment,
        };
        append(&mut st, self.log_path.as_deref(), &record)?;
        replay(&self.plan, &mut st, record);
        Ok(Receipt { seq, replaced: replaces })
    }

    /// Current judgments (last write wins), in order of first submission.
    pub fn export(&self) -> Vec<AnnotationJudgment> {
        let st = self.lock();
        let mut all: Vec<&(u64, AnnotationJudgment)> = st.judgments.values().collect();
        all.sort_by_key(|(seq, _)| *seq);
        all.into_iter().map(|(_, j)| j.clone()).collect()
    }

    /// Krippendorff's alpha per dimension over the shared overlap slice.
    pub fn agreement(&self) -> AgreementReport {
        let overlap: BTreeSet<&str> = self.plan.overlap_ids().collect();
        let judgments: Vec<AnnotationJudgment> = self
            .export()
            .into_iter()
            .filter(|j| overlap.contains(j.item_id.as_str()))
            .collect();
        let dimensions = Dimension::ALL
            .into_iter()
            .map(|d| {
                let entry = match krippendorff_alpha_nominal(&judgments, d) {
                    Ok(a) => DimensionAgreement { alpha: Some(a), error: None },
                    Err(e) => DimensionAgreement { alpha: None, error: Some(e.to_string()) },
                };
                (d, entry)
            })
            .collect();
        AgreementReport {
            overlap_items: overlap.len(),
            judgments: judgments.len(),
            dimensions,
        }
    }
}

fn unknown_session(id: &str) -> ApiError {
    ApiError::NotFound(format!("unknown session {id}"))
}

fn info(st: &State, session_id: &str) -> SessionInfo {
    let s = &st.sessions[session_id];
    let completed = s
        .queue
        .iter()
        .filter(|id| st.judgments.contains_key(&((*id).clone(), s.annotator_id.clone())))
        .count();
    SessionInfo {
        session_id: session_id.to_string(),
        annotator_id: s.annotator_id.clone(),
        total: s.queue.len(),
        completed,
    }
}

fn append(st: &mut State, path: Option<&Path>, record: &LogRecord) -> crate::Result<()> {
    if let (Some(file), Some(path)) = (st.log.as_mut(), path) {
        let mut line = serde_json::to_string(record)?;
        line.push('\n');
        file.write_all(line.as_bytes())
            .and_then(|_| file.flush())
            .map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn replay(plan: &SessionPlan, st: &mut State, record: LogRecord) {
    match record {
        LogRecord::Session {
            session_id,
            annotator_id,
            shard,
        } => {
            let queue = plan.queue(shard, &annotator_id);
            st.by_annotator.insert(annotator_id.clone(), session_id.clone());
            st.sessions.insert(
                session_id,
                Session {
                    annotator_id,
                    queue,
                    served: BTreeSet::new(),
                },
            );
        }
        LogRecord::Judgment {
            seq,
            session_id,
            judgment,
            ..
        } => {
            st.seq = st.seq.max(seq);
            if let Some(s) = st.sessions.get_mut(&session_id) {
                s.served.insert(judgment.item_id.clone());
            }
            let key = (judgment.item_id.clone(), judgment.annotator_id.clone());
            let first = st.judgments.get(&key).map_or(seq, |(f, _)| *f);
            st.judgments.insert(key, (first, judgment));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::plan::{plan_sessions, PlanConfig};
    use crate::corpus::{Label, Post, Provenance, SourceMeta, TargetIdentity};

    fn plan() -> SessionPlan {
        plan_with_overlap(0.3)
    }

    fn plan_with_overlap(overlap_fraction: f64) -> SessionPlan {
        let mut posts = Vec::new();
        for (i, t) in TargetIdentity::ALL.iter().enumerate() {
            for label in [Label::Hateful, Label::NonHateful] {
                posts.push(Post {
                    post_id: format!("p{i}{label}"),
                    text: format!("post about {t}"),
                    label,
                    targets: [*t].into(),
                    provenance: Provenance::Generated,
                    source_meta: Some(SourceMeta {
                        with_target: Some(i % 2 == 0),
                        intended_label: Some(label),
                        intended_target: (i % 2 == 0).then_some(*t),
                        ..Default::default()
                    }),
                });
            }
        }
        let cfg = PlanConfig { items_per_setup: 14, overlap_fraction, ..Default::default() };
        plan_sessions(&[("s".into(), posts)], &cfg).unwrap()
    }

    fn answer(svc: &AnnotationService, session: &str, item: &ItemView, hateful: bool) -> Receipt {
        let input = JudgmentInput {
            item_id: item.item_id.clone(),
            hateful,
            target_match: item.target_match_applies.then_some(true),
            realistic: !hateful,
        };
        svc.submit(session, input).unwrap()
    }

    #[test]
    fn serves_each_item_once_until_done() {
        let svc = AnnotationService::open(plan(), None).unwrap();
        let s = svc.create_session("ann1").unwrap();
        let mut seen = BTreeSet::new();
        loop {
            let next = svc.next_item(&s.session_id).unwrap();
            let Some(item) = next.item else { break };
            assert_eq!(item.position, seen.len() + 1);
            assert!(seen.insert(item.item_id.clone()));
            answer(&svc, &s.session_id, &item, true);
        }
        assert_eq!(seen.len(), s.total);
        assert_eq!(svc.session(&s.session_id).unwrap().completed, s.total);
    }

    #[test]
    fn rejects_unserved_and_malformed_judgments() {
        let svc = AnnotationService::open(plan(), None).unwrap();
        let s = svc.create_session("ann1").unwrap();
        let unserved = JudgmentInput {
            item_id: "item-00001".into(),
            hateful: true,
            target_match: None,
            realistic: true,
        };
        assert!(matches!(svc.submit(&s.session_id, unserved), Err(ApiError::Rejected(_))));
        let item = svc.next_item(&s.session_id).unwrap().item.unwrap();
        let wrong = JudgmentInput {
            item_id: item.item_id.clone(),
            hateful: true,
            target_match: if item.target_match_applies { None } else { Some(true) },
            realistic: true,
        };
        assert!(matches!(svc.submit(&s.session_id, wrong), Err(ApiError::Invalid(_))));
        assert!(matches!(svc.next_item("nope"), Err(ApiError::NotFound(_))));
    }

    #[test]
    fn duplicate_is_last_write_wins_with_audit() {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("judgments.log.jsonl");
        let svc = AnnotationService::open(plan(), Some(&log)).unwrap();
        let s = svc.create_session("ann1").unwrap();
        let item = svc.next_item(&s.session_id).unwrap().item.unwrap();
        assert!(!answer(&svc, &s.session_id, &item, true).replaced);
        assert!(answer(&svc, &s.session_id, &item, false).replaced);
        let export = svc.export();
        assert_eq!(export.len(), 1);
        assert!(!export[0].hateful);
        let text = std::fs::read_to_string(&log).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("\"replaces\":true"));

        drop(svc);
        let reopened = AnnotationService::open(plan(), Some(&log)).unwrap();
        assert_eq!(reopened.export(), export);
        let again = reopened.create_session("ann1").unwrap();
        assert_eq!(again.session_id, s.session_id);
        assert_eq!(again.completed, 1);
    }

    #[test]
    fn agreeing_overlap_gives_alpha_one() {
        let svc = AnnotationService::open(plan_with_overlap(1.0), None).unwrap();
        let overlap: BTreeSet<String> = svc.plan().overlap_ids().map(str::to_string).collect();
        for ann in ["ann1", "ann2"] {
            let s = svc.create_session(ann).unwrap();
            while let Some(item) = svc.next_item(&s.session_id).unwrap().item {
                let intended = svc.plan().item(&item.item_id).unwrap().intended_label.is_hateful();
                let input = JudgmentInput {
                    item_id: item.item_id.clone(),
                    hateful: intended,
                    target_match: item.target_match_applies.then_some(intended),
                    realistic: !intended,
                };
                svc.submit(&s.session_id, input).unwrap();
            }
        }
        let report = svc.agreement();
        assert_eq!(report.overlap_items, overlap.len());
        assert_eq!(report.judgments, 2 * overlap.len());
        for d in Dimension::ALL {
            assert_eq!(report.dimensions[&d].alpha, Some(1.0), "{d:?}");
        }
    }
}
