//! Versioned JSON documents for states, channels, tables and reports.
//!
//! Every document is a JSON object carrying `"version"` and `"kind"` next to
//! the fields of the value, and optionally a `"config"` object echoing the
//! parameters that produced it. Complex numbers are `[re, im]` pairs.
//!
//! Decoding runs in three stages, each with its own error: JSON syntax
//! ([`Error::Parse`]), document shape ([`Error::SchemaMismatch`], naming the
//! field path), and the owning type's validator ([`Error::Validation`]).

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::channels::{ChannelRepr, QuantumChannel};
use crate::conditional::{ConditionalTable, TableRepr};
use crate::error::{Error, Result};
use crate::states::{DensityMatrix, DensityRepr};
use crate::verify::{TrialConfig, VerificationReport};

pub const SCHEMA_VERSION: &str = "1.0";
pub const SCHEMA_MAJOR: u64 = 1;

/// A type with a versioned JSON document form.
pub trait Document: Serialize + Sized {
    const KIND: &'static str;
    /// Whether `config` is part of the value rather than an echo.
    const OWNS_CONFIG: bool = false;

    /// Decodes the value fields of a document (without `version`/`kind`).
    fn from_fields(fields: Value) -> Result<Self>;
}

fn shaped<R: DeserializeOwned>(fields: Value) -> Result<R> {
    serde_path_to_error::deserialize(fields).map_err(|e| Error::SchemaMismatch {
        field: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

fn validated<R, T>(fields: Value) -> Result<T>
where
    R: DeserializeOwned,
    T: TryFrom<R, Error = Error>,
{
    T::try_from(shaped::<R>(fields)?).map_err(|e| Error::Validation(Box::new(e)))
}

impl Document for DensityMatrix {
    const KIND: &'static str = "density_matrix";

    fn from_fields(fields: Value) -> Result<Self> {
        validated::<DensityRepr, _>(fields)
    }
}

impl Document for QuantumChannel {
    const KIND: &'static str = "channel";

    fn from_fields(fields: Value) -> Result<Self> {
        validated::<ChannelRepr, _>(fields)
    }
}

impl Document for ConditionalTable {
    const KIND: &'static str = "conditional_table";

    fn from_fields(fields: Value) -> Result<Self> {
        validated::<TableRepr, _>(fields)
    }
}

impl Document for VerificationReport {
    const KIND: &'static str = "verification_report";
    const OWNS_CONFIG: bool = true;

    fn from_fields(fields: Value) -> Result<Self> {
        let report: VerificationReport = shaped(fields)?;
        report.config.validate().map_err(|e| Error::Validation(Box::new(e)))?;
        Ok(report)
    }
}

impl Document for TrialConfig {
    const KIND: &'static str = "trial_config";

    fn from_fields(fields: Value) -> Result<Self> {
        let cfg: TrialConfig = shaped(fields)?;
        cfg.validate().map_err(|e| Error::Validation(Box::new(e)))?;
        Ok(cfg)
    }
}

/// Wraps any serializable value as a document of the given kind.
pub fn to_document<T: Serialize + ?Sized>(kind: &str, value: &T) -> Value {
    let mut doc = Map::new();
    doc.insert("version".into(), Value::from(SCHEMA_VERSION));
    doc.insert("kind".into(), Value::from(kind));
    match serde_json::to_value(value).expect("in-memory serialization") {
        Value::Object(fields) => doc.extend(fields),
        other => {
            doc.insert("value".into(), other);
        }
    }
    Value::Object(doc)
}

pub fn encode<T: Document>(value: &T) -> String {
    to_json(&to_document(T::KIND, value))
}

pub fn to_json(doc: &Value) -> String {
    serde_json::to_string(doc).expect("in-memory serialization")
}

pub fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Checks the envelope of a document and returns its value fields.
/// A missing `version` is read as the current one; a missing `kind` is
/// accepted for any target. An echoed `config` is dropped unless `keep_config`.
pub fn open_document(doc: Value, expected_kind: &str, keep_config: bool) -> Result<Value> {
    let Value::Object(mut fields) = doc else {
        return Err(Error::SchemaMismatch {
            field: ".".into(),
            message: "document must be a JSON object".into(),
        });
    };
    if let Some(v) = fields.remove("version") {
        let v = v.as_str().ok_or_else(|| Error::SchemaMismatch {
            field: "version".into(),
            message: "expected a string like \"1.0\"".into(),
        })?;
        let major = v.split('.').next().and_then(|m| m.parse::<u64>().ok());
        if major != Some(SCHEMA_MAJOR) {
            return Err(Error::SchemaMismatch {
                field: "version".into(),
                message: format!("unsupported schema version {v:?} (this build reads {SCHEMA_MAJOR}.x)"),
            });
        }
    }
    if !keep_config {
        fields.remove("config");
    }
    if let Some(kind) = fields.remove("kind") {
        if kind.as_str() != Some(expected_kind) {
            return Err(Error::SchemaMismatch {
                field: "kind".into(),
                message: format!("expected {expected_kind:?}, found {kind}"),
            });
        }
    }
    Ok(Value::Object(fields))
}

pub fn decode<T: Document>(text: &str) -> Result<T> {
    decode_value(parse_json(text)?)
}

pub fn decode_value<T: Document>(doc: Value) -> Result<T> {
    T::from_fields(open_document(doc, T::KIND, T::OWNS_CONFIG)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::random_channel;
    use crate::conditional::conditional_probs;
    use crate::linalg::{ComplexMatrix, C64, ONE};
    use crate::states::random_density;
    use crate::verify::run_suite;
    use proptest::prelude::*;

    fn max_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        a.max_abs_diff(b)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn density_roundtrip(seed in any::<u64>(), d in 1usize..=6, rank_pick in 0usize..6) {
            let rho = random_density(d, 1 + rank_pick % d, seed).unwrap();
            let back: DensityMatrix = decode(&encode(&rho)).unwrap();
            prop_assert!(max_diff(rho.matrix(), back.matrix()) <= 1e-15);
        }

        #[test]
        fn channel_and_table_roundtrip(seed in any::<u64>(), d_in in 1usize..=4, d_out in 1usize..=4, extra in 0usize..3) {
            let env = d_in.div_ceil(d_out) + extra;
            let channel = random_channel(d_in, d_out, env, seed).unwrap();
            let back: QuantumChannel = decode(&encode(&channel)).unwrap();
            prop_assert_eq!(back.kraus().len(), channel.kraus().len());
            for (a, b) in channel.kraus().iter().zip(back.kraus()) {
                prop_assert!(max_diff(a, b) <= 1e-15);
            }
            let rho = random_density(d_in, d_in, seed ^ 7).unwrap();
            let table = conditional_probs(&channel, &rho).unwrap().table;
            let back: ConditionalTable = decode(&encode(&table)).unwrap();
            for (ra, rb) in table.rows().iter().zip(back.rows()) {
                for (x, y) in ra.iter().zip(rb) {
                    prop_assert!((x - y).abs() <= 1e-15);
                }
            }
            prop_assert_eq!(back.degeneracy_from(), table.degeneracy_from());
        }
    }

    #[test]
    fn exact_float_roundtrip() {
        let m = ComplexMatrix::from_vec(1, 1, vec![C64::new(0.1 + 0.2, 1.0 / 3.0)]).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: ComplexMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back[(0, 0)], m[(0, 0)]);
    }

    #[test]
    fn report_roundtrip() {
        let cfg = TrialConfig {
            n_trials: 3,
            dims: vec![2, 3],
            ..TrialConfig::default()
        };
        let report = run_suite(&cfg).unwrap();
        let back: VerificationReport = decode(&encode(&report)).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn envelope() {
        let doc = to_document("density_matrix", &DensityMatrix::maximally_mixed(2));
        assert_eq!(doc["version"], "1.0");
        assert_eq!(doc["kind"], "density_matrix");
        assert_eq!(doc["dim"], 2);
        assert_eq!(doc["matrix"]["rows"], 2);
    }

    #[test]
    fn truncated_json_reports_position() {
        let text = encode(&DensityMatrix::maximally_mixed(2));
        let cut = &text[..text.len() / 2];
        match decode::<DensityMatrix>(cut) {
            Err(Error::Parse { line, column, .. }) => assert!(line >= 1 && column > 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_major_version_rejected() {
        let mut doc = to_document("density_matrix", &DensityMatrix::maximally_mixed(2));
        doc["version"] = "2.0".into();
        let err = decode_value::<DensityMatrix>(doc.clone()).unwrap_err();
        assert!(matches!(err, Error::SchemaMismatch { ref field, .. } if field == "version"));
        doc["version"] = "1.7".into();
        assert!(decode_value::<DensityMatrix>(doc.clone()).is_ok());
        doc.as_object_mut().unwrap().remove("version");
        assert!(decode_value::<DensityMatrix>(doc).is_ok());
    }

    #[test]
    fn echoed_config_is_ignored() {
        let mut doc = to_document("density_matrix", &DensityMatrix::maximally_mixed(2));
        doc["config"] = serde_json::json!({"seed": 3});
        assert!(decode_value::<DensityMatrix>(doc).is_ok());
    }

    #[test]
    fn wrong_kind_rejected() {
        let doc = to_document("channel", &QuantumChannel::identity(2));
        let err = decode_value::<DensityMatrix>(doc).unwrap_err();
        assert!(matches!(err, Error::SchemaMismatch { ref field, .. } if field == "kind"));
    }

    #[test]
    fn missing_field_is_named() {
        let text = r#"{"version":"1.0","kind":"channel","dim_in":2,"dim_out":2}"#;
        match decode::<QuantumChannel>(text) {
            Err(Error::SchemaMismatch { message, .. }) => assert!(message.contains("kraus"), "{message}"),
            other => panic!("{other:?}"),
        }
        let text = r#"{"dim":1,"matrix":{"rows":1,"cols":1,"data":[[1,"x"]]}}"#;
        match decode::<DensityMatrix>(text) {
            Err(Error::SchemaMismatch { field, .. }) => assert!(field.starts_with("matrix.data"), "{field}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_trace_preserving_channel_fails_validation() {
        let k = ComplexMatrix::identity(2).scale(ONE * 0.9);
        let doc = serde_json::json!({
            "version": "1.0",
            "kind": "channel",
            "dim_in": 2,
            "dim_out": 2,
            "kraus": [k],
        });
        match decode_value::<QuantumChannel>(doc) {
            Err(Error::Validation(inner)) => assert!(matches!(*inner, Error::NotTracePreserving { .. })),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_state_fails_validation() {
        let text = r#"{"dim":2,"matrix":{"rows":2,"cols":2,"data":[[1,0],[0,0],[0,0],[-1,0]]}}"#;
        assert!(matches!(decode::<DensityMatrix>(text), Err(Error::Validation(_))));
    }

    #[test]
    fn invalid_config_fails_validation() {
        assert!(matches!(
            decode::<TrialConfig>(r#"{"dims":[1]}"#),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            decode::<TrialConfig>(r#"{"dimz":[2]}"#),
            Err(Error::SchemaMismatch { .. })
        ));
    }
}
