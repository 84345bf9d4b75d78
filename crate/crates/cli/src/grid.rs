//! Parsing of value lists and `start:stop:step` ranges.

/// Values are rounded to this many decimals so grids agree across platforms.
const DECIMALS: f64 = 1e12;
/// Slack for including `stop` in a range.
const STOP_SLACK: f64 = 1e-12;
/// Upper bound on the length of a parsed range.
const MAX_POINTS: usize = 10_000_000;

fn round(v: f64) -> f64 {
    (v * DECIMALS).round() / DECIMALS
}

fn number(token: &str, rmax: Option<f64>) -> Result<f64, String> {
    let token = token.trim();
    if token == "rmax" {
        return rmax.ok_or_else(|| "`rmax` is only valid in a phi scan".to_string());
    }
    let v: f64 = token
        .parse()
        .map_err(|_| format!("`{token}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{token}` is not finite"))
    }
}

/// Parses `v`, `v1,v2,...` or `start:stop:step` (stop included within 1e-12).
///
/// `rmax`, when given, is accepted as a value token and caps the range.
pub fn parse_grid(spec: &str, rmax: Option<f64>) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let values = match parts.len() {
        1 => spec
            .split(',')
            .map(|t| number(t, rmax).map(round))
            .collect::<Result<Vec<f64>, String>>()?,
        3 => {
            let start = number(parts[0], rmax)?;
            let stop = number(parts[1], rmax)?;
            let step = number(parts[2], rmax)?;
            if step <= 0.0 {
                return Err(format!("step must be positive, got {step}"));
            }
            if stop < start {
                return Err(format!("stop {stop} is below start {start}"));
            }
            let count = ((stop - start + STOP_SLACK) / step).floor() as usize + 1;
            if count > MAX_POINTS {
                return Err(format!("range has {count} points, limit is {MAX_POINTS}"));
            }
            (0..count)
                .map(|k| {
                    let v = round(start + k as f64 * step);
                    match rmax {
                        Some(r) => v.min(r),
                        None => v,
                    }
                })
                .collect()
        }
        _ => return Err(format!("`{spec}` is neither a list nor start:stop:step")),
    };
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(format!("`{spec}` is not strictly increasing"));
    }
    Ok(values)
}
