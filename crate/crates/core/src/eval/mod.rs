//! Environment-forced greedy decoding, scoring and length curves.

pub mod curve;
pub mod decode;

pub use curve::{aggregate, eval_examples, length_curve, parse_curve_csv, CurveRow, LengthAccuracyCurve};
pub use decode::{
    completed_context, env_forced_decode, exact_match, per_token_accuracy, score_example, score_examples, ConstantStub,
    DecodeOutcome, DecodeSession, Decoder, ExampleScore, OracleStub, SpyStub,
};
