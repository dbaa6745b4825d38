use crate::error::{Error, Result};

/// Euclidean projection of `v` onto `{x : Σx = total, lo ≤ x_i ≤ hi}`.
///
/// The projection is `x_i = clamp(v_i - τ, lo, hi)` for the unique shift `τ`
/// balancing the sum. The sum is piecewise linear and nonincreasing in `τ`
/// with kinks at `v_i - hi` and `v_i - lo`; the right piece is located by
/// binary search over the sorted kinks and `τ` is then solved for exactly.
pub fn project_simplex_box(v: &[f64], total: f64, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let n = v.len();
    if n == 0 {
        return Err(Error::param("v", "empty vector"));
    }
    if !(lo <= hi) || v.iter().any(|x| !x.is_finite()) || !total.is_finite() {
        return Err(Error::param("bounds", format!("need finite data and lo <= hi, got [{lo}, {hi}]")));
    }
    let nf = n as f64;
    let slack = 1e-12 * total.abs().max(nf * hi.abs()).max(1.0);
    if total < nf * lo - slack || total > nf * hi + slack {
        return Err(Error::Infeasible(format!(
            "sum {total} unreachable with {n} entries in [{lo}, {hi}]"
        )));
    }
    if total <= nf * lo {
        return Ok(vec![lo; n]);
    }
    if total >= nf * hi {
        return Ok(vec![hi; n]);
    }

    let sum_at = |tau: f64| v.iter().map(|x| (x - tau).clamp(lo, hi)).sum::<f64>();
    let mut kinks: Vec<f64> = v.iter().flat_map(|x| [x - hi, x - lo]).collect();
    kinks.sort_by(|a, b| a.total_cmp(b));

    // Largest kink index whose sum is still >= total.
    let (mut a, mut b) = (0usize, kinks.len() - 1);
    if sum_at(kinks[b]) >= total {
        a = b;
    } else {
        while b - a > 1 {
            let mid = (a + b) / 2;
            if sum_at(kinks[mid]) >= total {
                a = mid;
            } else {
                b = mid;
            }
        }
    }
    let left = kinks[a];
    let right = if a + 1 < kinks.len() { kinks[a + 1] } else { left + 1.0 };
    let probe = 0.5 * (left + right);

    let (mut fixed, mut free_sum, mut free_count) = (0.0, 0.0, 0usize);
    for &x in v {
        if x - probe >= hi {
            fixed += hi;
        } else if x - probe <= lo {
            fixed += lo;
        } else {
            free_sum += x;
            free_count += 1;
        }
    }
    let tau = if free_count == 0 {
        left
    } else {
        (free_sum + fixed - total) / free_count as f64
    };
    Ok(v.iter().map(|x| (x - tau).clamp(lo, hi)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasible_points_are_fixed() {
        let v = [1.0, 2.0, 3.0];
        assert_eq!(project_simplex_box(&v, 6.0, 0.0, 5.0).unwrap(), v.to_vec());
    }

    #[test]
    fn extreme_totals() {
        assert_eq!(project_simplex_box(&[0.0; 4], 4.0, 1.0, 3.0).unwrap(), vec![1.0; 4]);
        assert_eq!(project_simplex_box(&[9.0, -9.0], 6.0, 1.0, 3.0).unwrap(), vec![3.0; 2]);
    }

    #[test]
    fn incompatible_bounds() {
        assert!(project_simplex_box(&[0.0; 3], 10.0, 0.0, 3.0).is_err());
        assert!(project_simplex_box(&[0.0; 3], 1.0, 1.0, 3.0).is_err());
        assert!(project_simplex_box(&[], 1.0, 0.0, 3.0).is_err());
        assert!(project_simplex_box(&[0.0], 1.0, 3.0, 0.0).is_err());
    }

    #[test]
    fn clamps_and_shifts() {
        let x = project_simplex_box(&[10.0, 0.0, 0.0], 3.0, 0.0, 2.0).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-15);
        assert!((x[1] - 0.5).abs() < 1e-15 && (x[2] - 0.5).abs() < 1e-15);
    }
}
