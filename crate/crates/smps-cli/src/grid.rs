use std::fmt;
use std::str::FromStr;

/// Decimal places kept when generating grid points, so that `0.1 + 2 * 0.1`
/// prints as `0.3`.
const GRID_DECIMALS: f64 = 1e12;

/// A list of parameter values: `start:stop:step` (inclusive), a comma list,
/// or a single value.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    spec: String,
    values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid grid '{spec}': {reason}")]
pub struct GridError {
    spec: String,
    reason: String,
}

fn round_grid(x: f64) -> f64 {
    (x * GRID_DECIMALS).round() / GRID_DECIMALS
}

impl Grid {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Checks every value lies in `(lo, hi]`.
    pub fn check_within(&self, lo: f64, hi: f64) -> Result<(), GridError> {
        match self.values.iter().find(|&&v| !(v > lo && v <= hi)) {
            Some(v) => Err(self.error(format!("value {v} outside ({lo}, {hi}]"))),
            None => Ok(()),
        }
    }

    /// Checks every value is at least `lo`.
    pub fn check_at_least(&self, lo: f64) -> Result<(), GridError> {
        match self.values.iter().find(|&&v| !(v >= lo)) {
            Some(v) => Err(self.error(format!("value {v} below {lo}"))),
            None => Ok(()),
        }
    }

    fn error(&self, reason: String) -> GridError {
        GridError {
            spec: self.spec.clone(),
            reason,
        }
    }
}

impl FromStr for Grid {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| GridError {
            spec: s.to_string(),
            reason: reason.to_string(),
        };
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| err("not a number"));
        let values = if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let [start, stop, step] = parts[..] else {
                return Err(err("expected start:stop:step"));
            };
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0) || !step.is_finite() {
                return Err(err("step must be positive"));
            }
            if stop < start {
                return Err(err("stop is below start"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..count)
                .map(|i| round_grid(start + i as f64 * step))
                .collect()
        } else {
            s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(err("values must be finite"));
        }
        Ok(Grid {
            spec: s.to_string(),
            values,
        })
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_is_inclusive_and_rounded() {
        let g: Grid = "0.05:0.95:0.05".parse().unwrap();
        assert_eq!(g.len(), 19);
        assert_eq!(g.values()[2], 0.15);
        assert_eq!(*g.values().last().unwrap(), 0.95);
    }

    #[test]
    fn list_and_single() {
        let g: Grid = "0.2,0.5".parse().unwrap();
        assert_eq!(g.values(), &[0.2, 0.5]);
        let g: Grid = "0.3".parse().unwrap();
        assert_eq!(g.values(), &[0.3]);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!("0.1:0.5:0".parse::<Grid>().is_err());
        assert!("0.1:0.5".parse::<Grid>().is_err());
        assert!("0.5:0.1:0.1".parse::<Grid>().is_err());
        assert!("x".parse::<Grid>().is_err());
        let g: Grid = "0:1:0.5".parse().unwrap();
        assert!(g.check_within(0.0, 1.0).is_err());
        assert!(g.check_at_least(0.0).is_ok());
    }
}
