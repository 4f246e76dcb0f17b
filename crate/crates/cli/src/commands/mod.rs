pub mod build_vocab;
pub mod eval;
pub mod gen_data;
pub mod pretrain;
pub mod report;
pub mod train;
pub mod transfer;

use relmark_core::head::SummaryKind;
use relmark_core::MarkerScheme;

pub fn parse_marker_scheme(s: &str) -> Result<MarkerScheme, String> {
    match s {
        "um" => Ok(MarkerScheme::Uniform),
        "etm" => Ok(MarkerScheme::EntityType),
        other => Err(format!("unknown marker scheme {other:?} (expected um or etm)")),
    }
}

pub fn parse_summary_kind(s: &str) -> Result<SummaryKind, String> {
    match s {
        "ss" => Ok(SummaryKind::SentenceStart),
        "es" => Ok(SummaryKind::EntityStart),
        "emp" => Ok(SummaryKind::EntityMaxPool),
        other => Err(format!("unknown summary {other:?} (expected ss, es, or emp)")),
    }
}
