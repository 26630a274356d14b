//! Sharp balls, condition-(E) scaling nets and euclidean models.

mod cnet;
mod condition;
mod model;

pub use cnet::{CNet, Eventual, Majorant, NetKind, Profile};
pub use condition::{
    check_condition_e, first_failure, monotone_envelope, ConditionECertificate, MonotoneEvidence,
};
pub use model::{
    ball_relation, blow_up_model, capture_representative, default_model, escaping_sphere_point,
    model_member_at, BallRelation, BlowUp, Capture, DressedBall, EuclideanModel,
};
pub(crate) use model::{diff_bound, scaled, structural_threshold};
