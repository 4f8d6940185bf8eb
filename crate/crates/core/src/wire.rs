//! JSON bodies of the `/v1` migration API.
//!
//! | route                       | request        | response                         |
//! |-----------------------------|----------------|----------------------------------|
//! | `PUT /v1/pool`              | [`PutRequest`] | 200 [`PutAck`], 400 [`ErrorBody`] |
//! | `GET /v1/pool/random`       |                | 200 [`RandomMigrant`], 404 [`ErrorBody`] |
//! | `GET /v1/stats`             |                | 200 [`Stats`]                    |
//! | `POST /v1/experiment/reset` |                | 200 [`ResetAck`]                 |

use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::genome::Genome;

pub const PUT_POOL: &str = "/v1/pool";
pub const GET_RANDOM: &str = "/v1/pool/random";
pub const GET_STATS: &str = "/v1/stats";
pub const POST_RESET: &str = "/v1/experiment/reset";

pub const EMPTY_POOL: &str = "empty pool";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PutRequest {
    pub uuid: Uuid,
    pub genome: Genome,
    pub fitness: f64,
    pub generation: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PutAck {
    pub accepted: bool,
    pub solved: bool,
    pub experiment_id: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomMigrant {
    pub genome: Genome,
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResetAck {
    pub experiment_id: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Stats {
    pub experiment_id: u64,
    pub pool_size: usize,
    pub best_fitness: Option<f64>,
    pub puts: u64,
    pub gets: u64,
    pub solutions: u64,
    pub rejected: u64,
    /// UTC, ISO-8601 with milliseconds.
    pub started_at: String,
    /// Seconds since the server process started.
    pub uptime: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::BitChromosome;

    #[test]
    fn put_body_shape() {
        let req = PutRequest {
            uuid: Uuid::nil(),
            genome: Genome::Bits("0110".parse::<BitChromosome>().unwrap()),
            fitness: 1.5,
            generation: 100,
        };
        let text = serde_json::to_string(&req).unwrap();
        assert_eq!(
            text,
            r#"{"uuid":"00000000-0000-0000-0000-000000000000","genome":"0110","fitness":1.5,"generation":100}"#
        );
        assert_eq!(serde_json::from_str::<PutRequest>(&text).unwrap(), req);
    }

    #[test]
    fn malformed_bodies_fail_to_parse() {
        for body in [
            r#"{"uuid":"nope","genome":"01","fitness":1,"generation":1}"#,
            r#"{"uuid":"00000000-0000-0000-0000-000000000000","genome":"01","generation":1}"#,
            r#"{"uuid":"00000000-0000-0000-0000-000000000000","genome":"0x","fitness":1,"generation":1}"#,
            r#"{"uuid":"00000000-0000-0000-0000-000000000000","genome":"01","fitness":1,"generation":-1}"#,
            r#"not json"#,
        ] {
            assert!(serde_json::from_str::<PutRequest>(body).is_err(), "{body}");
        }
    }

    #[test]
    fn ack_and_stats_use_camel_case() {
        let ack = PutAck { accepted: true, solved: false, experiment_id: 3 };
        assert_eq!(serde_json::to_string(&ack).unwrap(), r#"{"accepted":true,"solved":false,"experimentId":3}"#);
        let v = serde_json::to_value(Stats {
            experiment_id: 1,
            pool_size: 0,
            best_fitness: None,
            puts: 0,
            gets: 0,
            solutions: 0,
            rejected: 0,
            started_at: "x".into(),
            uptime: 0.0,
        })
        .unwrap();
        assert!(v["bestFitness"].is_null());
        assert_eq!(v["poolSize"], 0);
    }
}
