//! Independent oracles shared by the integration tests. Everything here is
//! a from-scratch re-implementation of the quantity it checks, kept apart
//! from the library's own computation paths.

/// Central finite-difference gradient of a scalar function.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut up = x.to_vec();
            let mut dn = x.to_vec();
            up[i] += h;
            dn[i] -= h;
            (f(&up) - f(&dn)) / (2.0 * h)
        })
        .collect()
}

pub fn max_relative_error(analytic: &[f64], reference: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(reference)
        .map(|(&a, &r)| (a - r).abs() / a.abs().max(r.abs()).max(1e-8))
        .fold(0.0, f64::max)
}

/// Definitional concordance index: a double loop over ordered pairs.
pub fn oracle_cindex(scores: &[f64], event: &[bool], time: &[f64]) -> Option<f64> {
    let n = scores.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j || !event[i] {
                continue;
            }
            let comparable = time[i] < time[j] || (time[i] == time[j] && !event[j]);
            if !comparable {
                continue;
            }
            den += 1.0;
            num += if scores[i] > scores[j] {
                1.0
            } else if scores[i] == scores[j] {
                0.5
            } else {
                0.0
            };
        }
    }
    (den > 0.0).then(|| num / den)
}

/// Definitional cumulative/dynamic AUC at a single time.
pub fn oracle_auc(scores: &[f64], event: &[bool], time: &[f64], t: f64) -> Option<f64> {
    let n = scores.len();
    let mut num = 0.0;
    let mut cases = 0.0;
    let mut controls = 0.0;
    for i in 0..n {
        if event[i] && time[i] <= t {
            cases += 1.0;
            for j in 0..n {
                if time[j] > t {
                    num += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
    }
    for j in 0..n {
        if time[j] > t {
            controls += 1.0;
        }
    }
    (cases > 0.0 && controls > 0.0).then(|| num / (cases * controls))
}

/// Binary AUC by the rank-sum (Mann-Whitney) formula with midranks.
pub fn oracle_rank_sum_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let n = all.len();
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && all[j].0 == all[i].0 {
            j += 1;
        }
        let mid = (i + 1 + j) as f64 / 2.0;
        for r in ranks.iter_mut().take(j).skip(i) {
            *r = mid;
        }
        i = j;
    }
    let rank_sum: f64 = ranks
        .iter()
        .zip(&all)
        .filter(|(_, (_, is_pos))| *is_pos)
        .map(|(r, _)| *r)
        .sum();
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    (rank_sum - np * (np + 1.0) / 2.0) / (np * nn)
}

/// Population concordance of the exponential hazards model with hazard
/// `exp(x)`, `x` standard normal, scored by `x` itself:
/// `C = 2 E[ 1(d > 0) / (1 + exp(-d)) ]` with `d ~ N(0, 2)`, by Simpson
/// quadrature.
pub fn true_concordance_exponential() -> f64 {
    let sd = std::f64::consts::SQRT_2;
    let upper = 14.0 * sd;
    let steps = 400_000usize; // even
    let h = upper / steps as f64;
    let integrand = |d: f64| {
        let sigmoid = 1.0 / (1.0 + (-d).exp());
        let phi = (-0.5 * (d / sd) * (d / sd)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
        sigmoid * phi
    };
    let mut acc = integrand(0.0) + integrand(upper);
    for k in 1..steps {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * integrand(k as f64 * h);
    }
    2.0 * acc * h / 3.0
}
