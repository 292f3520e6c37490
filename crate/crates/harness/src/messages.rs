//! Aggregator message complexity. The fit is done in exact integer
//! arithmetic so a slope of one is reported exactly, not approximately.

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::round::RoundReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageSample {
    pub participants: u64,
    pub messages: u64,
}

impl From<&RoundReport> for MessageSample {
    fn from(r: &RoundReport) -> Self {
        MessageSample {
            participants: (r.n_demanders + r.n_suppliers) as u64,
            messages: r.messages.total as u64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexitySummary {
    /// Least-squares slope; `None` when every sample has the same participant count.
    pub slope: Option<f64>,
    pub overhead: i64,
    pub samples: usize,
}

/// Fits `messages = slope * participants + c` and requires an exact fit with slope one.
pub fn message_complexity_report(samples: &[MessageSample]) -> Result<ComplexitySummary> {
    if samples.is_empty() {
        return Err(HarnessError::config("reports", "need at least one round"));
    }
    let n = samples.len() as i128;
    let (sx, sy, sxx, sxy) = samples
        .iter()
        .fold((0i128, 0i128, 0i128, 0i128), |(sx, sy, sxx, sxy), s| {
            let x = s.participants as i128;
            let y = s.messages as i128;
            (sx + x, sy + y, sxx + x * x, sxy + x * y)
        });
    let den = n * sxx - sx * sx;
    let overhead = samples[0].messages as i64 - samples[0].participants as i64;
    if den == 0 {
        if samples.iter().any(|s| s.messages != samples[0].messages) {
            return Err(HarnessError::config(
                "reports",
                "message counts differ at equal participant counts",
            ));
        }
        return Ok(ComplexitySummary {
            slope: None,
            overhead,
            samples: samples.len(),
        });
    }
    let num = n * sxy - sx * sy;
    // Exact residual check: den * n * y == num * n * x + (sy * den - num * sx).
    let intercept_num = sy * den - num * sx;
    for s in samples {
        let lhs = den * n * s.messages as i128;
        let rhs = num * n * s.participants as i128 + intercept_num;
        if lhs != rhs {
            return Err(HarnessError::config(
                "reports",
                format!("message counts are not linear in participants (sample {s:?})"),
            ));
        }
    }
    if num != den {
        return Err(HarnessError::config(
            "reports",
            format!("slope {}/{} differs from one", num, den),
        ));
    }
    Ok(ComplexitySummary {
        slope: Some(1.0),
        overhead,
        samples: samples.len(),
    })
}
