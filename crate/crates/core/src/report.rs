//! Plain-text comparison tables built from [`EvalReport`] rows.

use thiserror::Error;

use crate::verifier::EvalReport;

pub const REPORT_COLUMNS: [&str; 8] = [
    "Model",
    "Training Parameters",
    "Training Loss",
    "Training Accuracy",
    "Computation Time (mins)",
    "Testing Loss",
    "Testing Accuracy",
    "Similarity (Avg)",
];

const SEPARATOR: &str = " | ";

#[derive(Debug, Error, PartialEq, Eq)]
#[error("no rows to report")]
pub struct EmptyReport;

fn thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

/// Cell texts for one row: grouped parameter count, minutes at two decimals,
/// every other figure at four.
pub fn report_cells(row: &EvalReport) -> [String; 8] {
    [
        row.model_name.clone(),
        thousands(row.train_params),
        format!("{:.4}", row.train_loss),
        format!("{:.4}", row.train_accuracy),
        format!("{:.2}", row.compute_minutes),
        format!("{:.4}", row.test_loss),
        format!("{:.4}", row.test_accuracy),
        format!("{:.4}", row.mean_similarity),
    ]
}

/// Header, rule and one line per row, in input order. The model column is
/// left-aligned and numeric columns right-aligned; trailing spaces are trimmed.
pub fn render_report(rows: &[EvalReport]) -> Result<String, EmptyReport> {
    if rows.is_empty() {
        return Err(EmptyReport);
    }
    let cells: Vec<[String; 8]> = rows.iter().map(report_cells).collect();
    let mut widths = REPORT_COLUMNS.map(str::len);
    for line in &cells {
        for (w, c) in widths.iter_mut().zip(line) {
            *w = (*w).max(c.len());
        }
    }
    let format_line = |line: [&str; 8]| {
        let parts: Vec<String> = line
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(i, (c, w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        parts.join(SEPARATOR).trim_end().to_string()
    };
    let mut out = String::new();
    out.push_str(&format_line(REPORT_COLUMNS));
    out.push('\n');
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&rule.join("-+-"));
    out.push('\n');
    for line in &cells {
        out.push_str(&format_line(line.each_ref().map(String::as_str)));
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(name: &str, params: usize) -> EvalReport {
        EvalReport {
            model_name: name.into(),
            train_params: params,
            train_loss: 0.25,
            train_accuracy: 0.9,
            compute_minutes: 1.5,
            test_loss: 0.3,
            test_accuracy: 0.85,
            mean_similarity: 70.0,
            genuine_similarity: None,
            synthetic_similarity: None,
            threshold: 50.0,
        }
    }

    #[test]
    fn digit_grouping() {
        assert_eq!(thousands(0), "0");
        assert_eq!(thousands(999), "999");
        assert_eq!(thousands(1000), "1,000");
        assert_eq!(thousands(420_736), "420,736");
        assert_eq!(thousands(87_877_632), "87,877,632");
    }

    #[test]
    fn empty_is_an_error() {
        assert_eq!(render_report(&[]), Err(EmptyReport));
    }

    #[test]
    fn single_row_has_header_rule_and_line() {
        let text = render_report(&[row("SmallConv", 420_736)]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("Model"));
        assert!(lines[2].starts_with("SmallConv"));
        assert!(lines[2].ends_with("70.0000"));
    }

    #[test]
    fn rows_keep_input_order_and_align() {
        let text = render_report(&[row("b", 10), row("a", 2_000_000)]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[2].starts_with("b "));
        assert!(lines[3].starts_with("a "));
        assert_eq!(lines[2].len(), lines[3].len());
        assert_eq!(lines[0].len(), lines[2].len());
    }
}
