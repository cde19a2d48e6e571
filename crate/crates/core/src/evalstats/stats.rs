use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    ZProportion,
    MannWhitneyU,
}

impl TestKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TestKind::ZProportion => "z-proportion",
            TestKind::MannWhitneyU => "mann-whitney-u",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Magnitude {
    Negligible,
    Small,
    Medium,
    Large,
}

impl Magnitude {
    pub fn as_str(self) -> &'static str {
        match self {
            Magnitude::Negligible => "negligible",
            Magnitude::Small => "small",
            Magnitude::Medium => "medium",
            Magnitude::Large => "large",
        }
    }
}

/// Which sample the statistic leans towards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    A,
    B,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatTestResult {
    pub test: TestKind,
    /// Z for the proportion test, U of the first sample otherwise.
    pub statistic: f64,
    /// One-sided, for "A is better than B".
    pub p_value: f64,
    pub a12: Option<f64>,
    pub a12_magnitude: Option<Magnitude>,
    pub direction: Direction,
    /// Set when the statistic is undefined and was replaced by its null value.
    pub degenerate: bool,
    /// The p-value came from full enumeration.
    pub exact: bool,
}

impl StatTestResult {
    /// A is better than B at the 5% level.
    pub fn significant(&self) -> bool {
        self.direction == Direction::A && self.p_value < 0.05
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid sample: {0}")]
pub struct SampleError(pub String);

/// Upper tail of the standard normal.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Pooled two-proportion test of `exec_a/n_a > exec_b/n_b`.
pub fn z_test_proportions(exec_a: u64, n_a: u64, exec_b: u64, n_b: u64) -> Result<StatTestResult, SampleError> {
    if n_a == 0 || n_b == 0 {
        return Err(SampleError("both samples need at least one trial".into()));
    }
    if exec_a > n_a || exec_b > n_b {
        return Err(SampleError("more successes than trials".into()));
    }
    let (pa, pb) = (exec_a as f64 / n_a as f64, exec_b as f64 / n_b as f64);
    let pooled = (exec_a + exec_b) as f64 / (n_a + n_b) as f64;
    let mut r = StatTestResult {
        test: TestKind::ZProportion,
        statistic: 0.0,
        p_value: 0.5,
        a12: None,
        a12_magnitude: None,
        direction: Direction::Neither,
        degenerate: true,
        exact: false,
    };
    if pooled == 0.0 || pooled == 1.0 {
        return Ok(r);
    }
    let se = (pooled * (1.0 - pooled) * (1.0 / n_a as f64 + 1.0 / n_b as f64)).sqrt();
    let z = (pa - pb) / se;
    r.statistic = z;
    r.p_value = normal_sf(z);
    r.degenerate = false;
    r.direction = if z > 0.0 {
        Direction::A
    } else if z < 0.0 {
        Direction::B
    } else {
        Direction::Neither
    };
    Ok(r)
}

/// `(#{x > y} + 0.5 #{x = y}) / (|xs| |ys|)`.
pub fn a12(xs: &[f64], ys: &[f64]) -> Result<(f64, Magnitude), SampleError> {
    nonempty(xs, ys)?;
    let mut score = 0.0;
    for x in xs {
        for y in ys {
            if x > y {
                score += 1.0;
            } else if x == y {
                score += 0.5;
            }
        }
    }
    let v = score / (xs.len() * ys.len()) as f64;
    Ok((v, magnitude(v)))
}

/// Cutoffs 0.44, 0.36 and 0.29 below one half, mirrored above it.
pub fn magnitude(a12: f64) -> Magnitude {
    let d = a12.min(1.0 - a12);
    if d > 0.44 {
        Magnitude::Negligible
    } else if d > 0.36 {
        Magnitude::Small
    } else if d > 0.29 {
        Magnitude::Medium
    } else {
        Magnitude::Large
    }
}

fn nonempty(xs: &[f64], ys: &[f64]) -> Result<(), SampleError> {
    if xs.is_empty() || ys.is_empty() {
        return Err(SampleError("both samples must be nonempty".into()));
    }
    if xs.iter().chain(ys).any(|v| v.is_nan()) {
        return Err(SampleError("samples contain NaN".into()));
    }
    Ok(())
}

/// Ranks of the pooled sample, doubled so midranks stay integral.
fn doubled_midranks(pooled: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        // Positions i..=j share rank ((i+1) + (j+1)) / 2.
        for &k in &order[i..=j] {
            ranks[k] = (i + j + 2) as u64;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

/// Largest sample size for which the p-value is enumerated exactly.
pub const EXACT_LIMIT: usize = 8;

/// One-sided U test that `xs` tends to be smaller than `ys`.
pub fn mann_whitney_u(xs: &[f64], ys: &[f64]) -> Result<StatTestResult, SampleError> {
    nonempty(xs, ys)?;
    let (nx, ny) = (xs.len(), ys.len());
    let pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
    let (ranks, ties) = doubled_midranks(&pooled);
    let offset = (nx * (nx + 1)) as u64;
    let u2 = ranks[..nx].iter().sum::<u64>() - offset;
    let u = u2 as f64 / 2.0;
    let mu = (nx * ny) as f64 / 2.0;
    let (value, mag) = a12(xs, ys)?;

    let n = (nx + ny) as f64;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0));
    let var = (nx * ny) as f64 / 12.0 * ((n + 1.0) - tie_term);
    let exact = nx.max(ny) <= EXACT_LIMIT;
    let (p_value, degenerate) = if var <= 0.0 {
        (1.0, true)
    } else if exact {
        (exact_lower_tail(&ranks, nx, u2 + offset), false)
    } else {
        let z = (u - mu + 0.5) / var.sqrt();
        (normal_sf(-z), false)
    };
    Ok(StatTestResult {
        test: TestKind::MannWhitneyU,
        statistic: u,
        p_value: p_value.min(1.0),
        a12: Some(value),
        a12_magnitude: Some(mag),
        direction: if u < mu {
            Direction::A
        } else if u > mu {
            Direction::B
        } else {
            Direction::Neither
        },
        degenerate,
        exact,
    })
}

/// Share of `k`-subsets of `ranks` whose sum is at most `limit`.
fn exact_lower_tail(ranks: &[u64], k: usize, limit: u64) -> f64 {
    fn walk(ranks: &[u64], start: usize, left: usize, sum: u64, limit: u64, hits: &mut u64, total: &mut u64) {
        if left == 0 {
            *total += 1;
            if sum <= limit {
                *hits += 1;
            }
            return;
        }
        for i in start..=ranks.len() - left {
            walk(ranks, i + 1, left - 1, sum + ranks[i], limit, hits, total);
        }
    }
    let (mut hits, mut total) = (0, 0);
    walk(ranks, 0, k, 0, limit, &mut hits, &mut total);
    hits as f64 / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_examples() {
        let r = z_test_proportions(50, 100, 50, 100).unwrap();
        assert_eq!((r.statistic, r.p_value, r.degenerate), (0.0, 0.5, false));
        assert!(z_test_proportions(0, 10, 0, 10).unwrap().degenerate);
        assert!(z_test_proportions(10, 10, 5, 5).unwrap().degenerate);
        assert!(z_test_proportions(1, 0, 0, 1).is_err());
        let r = z_test_proportions(284, 300, 212, 300).unwrap();
        assert!(r.significant());
    }

    #[test]
    fn u_examples() {
        let r = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0 / 6.0).abs() < 1e-15);
        assert!(r.exact);
        let r = mann_whitney_u(&[1.0], &[2.0]).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 0.5));
        let r = mann_whitney_u(&[1.0, 2.0, 2.0], &[1.0, 2.0, 2.0]).unwrap();
        assert!(r.p_value >= 0.5);
        assert!(mann_whitney_u(&[], &[1.0]).is_err());
        let r = mann_whitney_u(&[3.0, 3.0], &[3.0]).unwrap();
        assert!(r.degenerate && r.p_value == 1.0);
    }

    #[test]
    fn a12_examples() {
        assert_eq!(a12(&[2.0, 2.0], &[2.0]).unwrap(), (0.5, Magnitude::Negligible));
        assert_eq!(a12(&[1.0, 2.0], &[5.0]).unwrap(), (0.0, Magnitude::Large));
        assert_eq!(a12(&[1.0, 3.0], &[2.0, 4.0]).unwrap(), (0.25, Magnitude::Large));
        assert_eq!(magnitude(0.43), Magnitude::Small);
        assert_eq!(magnitude(0.35), Magnitude::Medium);
        assert_eq!(magnitude(0.28), Magnitude::Large);
        assert_eq!(magnitude(0.45), Magnitude::Negligible);
        assert_eq!(magnitude(0.44), Magnitude::Small);
        assert_eq!(magnitude(0.65), Magnitude::Medium);
    }
}
