//! Argument syntax and number formatting shared by the commands.

use crate::index::{diagonal, geometric, MultiIndex};

/// Twelve significant digits, trailing zeros trimmed, at least one decimal.
pub fn sig12(v: f64) -> String {
    if v == 0.0 {
        return "0.0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let magnitude = v.abs().log10().floor() as i32;
    if !(-5..15).contains(&magnitude) {
        return format!("{v:.11e}");
    }
    let decimals = (11 - magnitude).max(1) as usize;
    let mut s = format!("{v:.decimals$}");
    while s.ends_with('0') && !s.ends_with(".0") {
        s.pop();
    }
    s
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `2^30`, `1<<30` or a decimal.
pub fn parse_budget(s: &str) -> Result<u64, String> {
    let bad = || format!("bad budget `{s}` (examples: 2^30, 1073741824)");
    let s = s.trim();
    if let Some((base, exp)) = s.split_once('^') {
        let base: u64 = base.trim().parse().map_err(|_| bad())?;
        let exp: u32 = exp.trim().parse().map_err(|_| bad())?;
        return base.checked_pow(exp).ok_or_else(bad);
    }
    if let Some((one, shift)) = s.split_once("<<") {
        let one: u64 = one.trim().parse().map_err(|_| bad())?;
        let shift: u32 = shift.trim().parse().map_err(|_| bad())?;
        return one.checked_shl(shift).filter(|v| v >> shift == one).ok_or_else(bad);
    }
    s.parse().map_err(|_| bad())
}

fn parse_range(body: &str) -> Result<(u64, u64), String> {
    let (a, b) = body
        .split_once("..")
        .ok_or_else(|| format!("expected A..B, got `{body}`"))?;
    let a: u64 = a.trim().parse().map_err(|_| format!("bad number `{a}`"))?;
    let b: u64 = b.trim().parse().map_err(|_| format!("bad number `{b}`"))?;
    Ok((a, b))
}

fn checked(x: MultiIndex, dim: usize) -> Result<MultiIndex, String> {
    if x.dim() != dim {
        return Err(format!("sides {x} have dimension {}, expected {dim}", x.dim()));
    }
    Ok(x)
}

/// Comma-separated sides, each `a x b x ...`.
pub fn parse_sides_list(s: &str, dim: usize) -> Result<Vec<MultiIndex>, String> {
    s.split(',')
        .map(|item| {
            let x: MultiIndex = item.parse().map_err(|e| format!("{e}"))?;
            checked(x, dim)
        })
        .collect()
}

/// `diag:A..B` (inclusive), `geom:R..MAX`, or an explicit sides list.
pub fn parse_schedule(s: &str, dim: usize) -> Result<Vec<MultiIndex>, String> {
    let schedule = if let Some(body) = s.strip_prefix("diag:") {
        let (a, b) = parse_range(body)?;
        if a == 0 || a > b {
            return Err(format!("diag range needs 1 ≤ A ≤ B, got {a}..{b}"));
        }
        diagonal(dim, a, b)
    } else if let Some(body) = s.strip_prefix("geom:") {
        let (r, max) = parse_range(body)?;
        if r < 2 || max == 0 {
            return Err(format!("geom needs ratio ≥ 2 and max ≥ 1, got {r}..{max}"));
        }
        geometric(dim, r, max)
    } else {
        parse_sides_list(s, dim)?
    };
    if schedule.is_empty() {
        return Err(format!("schedule `{s}` is empty"));
    }
    Ok(schedule)
}

/// Naturals separated by `x` or `,`, zero allowed.
pub fn parse_naturals(s: &str) -> Result<Vec<u64>, String> {
    s.split(['x', ','])
        .map(|p| p.trim().parse().map_err(|_| format!("bad natural `{p}` in `{s}`")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(sig12(0.0), "0.0");
        assert_eq!(sig12(1.0), "1.0");
        assert_eq!(sig12(0.19264507794239583), "0.192645077942");
        assert_eq!(sig12(377.2629), "377.2629");
        assert_eq!(sig12(2.0 / 3.0), "0.666666666667");
        assert_eq!(sig12(-1.5), "-1.5");
        assert_eq!(sig12(1e-9), "1.00000000000e-9");
    }

    #[test]
    fn budgets() {
        assert_eq!(parse_budget("2^30"), Ok(1 << 30));
        assert_eq!(parse_budget("1<<12"), Ok(4096));
        assert_eq!(parse_budget("1000"), Ok(1000));
        assert!(parse_budget("2^70").is_err());
        assert!(parse_budget("lots").is_err());
    }

    #[test]
    fn schedules() {
        assert_eq!(parse_schedule("diag:1..3", 2).unwrap().len(), 3);
        assert_eq!(parse_schedule("1x1,2x3", 2).unwrap()[1].coords(), &[2, 3]);
        assert!(parse_schedule("1x1,2", 2).is_err());
        assert!(parse_schedule("diag:3..1", 1).is_err());
        assert_eq!(
            parse_schedule("geom:2..8", 1).unwrap().last().unwrap().coords(),
            &[8]
        );
    }

    #[test]
    fn quoting() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a, b"), "\"a, b\"");
        assert_eq!(parse_naturals("2x0"), Ok(vec![2, 0]));
    }
}
