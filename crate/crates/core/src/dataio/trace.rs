use std::fmt::Write as _;

use super::format_g17;
use crate::learn::TraceRow;
use crate::oracle::TrialSummary;

pub const TRACE_HEADER: &str =
    "iteration,observed_loglik,expected_loglik,max_param_delta,clip_count,post_norm_violations,skipped_records";

pub const SUMMARY_HEADER: &str =
    "trial,em_iters,them_iters,em_final_ll,them_final_ll,em_zero_params,them_zero_params,them_violations";

pub fn write_trace(rows: &[TraceRow]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.iteration,
            format_g17(r.observed_loglik),
            format_g17(r.expected_loglik),
            format_g17(r.max_param_delta),
            r.clip_count,
            r.post_norm_violations,
            r.skipped_records
        );
    }
    out
}

pub fn write_summary(rows: &[TrialSummary]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.trial,
            r.em_iters,
            r.them_iters,
            format_g17(r.em_final_ll),
            format_g17(r.them_final_ll),
            r.em_zero_params,
            r.them_zero_params,
            r.them_violations
        );
    }
    out
}
