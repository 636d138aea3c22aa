use serde::Serialize;

use super::{BoundReport, TheoremId};
use crate::error::{Error, Result};

/// Slack below the Gaussian fourth moment tolerated before clamping.
const FOURTH_MOMENT_SLACK: f64 = 1e-10;

#[derive(Serialize)]
struct ThirdInputs {
    fourth_moment: f64,
    h2_norm: f64,
}

/// `|E h(W) - E h(N)| <= ||h''|| (E W^4 - 3) / 3` for standardized infinitely divisible `W`.
///
/// A fourth moment below 3 is outside the hypotheses; the value is clamped at 0 and a
/// warning is attached.
pub fn third_moment_bound(fourth_moment: f64, h2_norm: f64) -> Result<BoundReport> {
    if !fourth_moment.is_finite() {
        return Err(Error::domain("fourth moment must be finite"));
    }
    if !(h2_norm >= 0.0 && h2_norm.is_finite()) {
        return Err(Error::domain("||h''|| must be non-negative"));
    }
    let excess = fourth_moment - 3.0;
    let below = excess < -FOURTH_MOMENT_SLACK;
    let term = if below { 0.0 } else { h2_norm * excess.max(0.0) / 3.0 };
    let report = BoundReport::assemble(
        TheoremId::ThirdMoment,
        &ThirdInputs { fourth_moment, h2_norm },
        &[("excess_kurtosis_term", term)],
        &[],
    )
    .with_diagnostic("excess_kurtosis", excess);
    Ok(if below { report.with_warning("fourth_moment_below_gaussian: value clamped at 0") } else { report })
}

/// `E W^4 = 3(m - 2)/(m - 4)` for `W = sqrt((m - 2)/m) T` with `T` Student's t on `m > 4` degrees of freedom.
pub fn student_t_fourth_moment(dof: f64) -> Result<f64> {
    if !(dof > 4.0 && dof.is_finite()) {
        return Err(Error::domain(format!("Student's t needs more than 4 degrees of freedom for a finite fourth moment, got {dof}")));
    }
    Ok(3.0 * (dof - 2.0) / (dof - 4.0))
}

#[derive(Serialize)]
struct TInputs {
    dof: f64,
}

/// `2/(m - 4)` per unit `||h''||` for the standardized Student's t law.
pub fn student_t_bound(dof: f64) -> Result<BoundReport> {
    let m4 = student_t_fourth_moment(dof)?;
    let value = 2.0 / (dof - 4.0);
    let via_moment = third_moment_bound(m4, 1.0)?.require_value()?;
    debug_assert!((via_moment - value).abs() <= 1e-12 * (1.0 + value));
    Ok(BoundReport::assemble(TheoremId::T, &TInputs { dof }, &[("excess_kurtosis_term", value)], &[])
        .with_diagnostic("fourth_moment", m4)
        .with_diagnostic("via_fourth_moment", via_moment))
}
