//! Blind manual annotation of generated posts: seeded session plans with a
//! shared overlap slice, an append-only judgment log and the HTTP API the
//! annotation UI talks to.

mod plan;
mod server;
mod store;

pub use plan::{plan_sessions, PlanConfig, PlanItem, SessionPlan};
pub use server::{router, serve, spawn};
pub use store::{
    AgreementReport, AnnotationService, ApiError, ApiResult, DimensionAgreement, ItemView, JudgmentInput, NextItem,
    Receipt, SessionInfo,
};
