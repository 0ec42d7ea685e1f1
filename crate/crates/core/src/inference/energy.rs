use std::collections::VecDeque;

use super::{Accumulator1D, EnergyConfig, InferenceError, Result};

/// Optimal boundary pair on one accumulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyMax {
    pub s1: f64,
    pub s2: f64,
    pub energy: f64,
    /// Position indices of `s1` and `s2`.
    pub i1: usize,
    pub i2: usize,
}

/// Feasible index gaps `[kmin, kmax]` for the configured width bounds.
pub(crate) fn gap_bounds(step: f64, cfg: &EnergyConfig) -> (usize, usize) {
    const SLACK: f64 = 1e-9;
    let kmin = ((cfg.min_width - SLACK) / step).ceil().max(1.0) as usize;
    let kmax = ((cfg.max_width + SLACK) / step).floor() as usize;
    (kmin, kmax)
}

/// `E(i, j) = λ·(P[j] − P[i]) + (1 − λ)·(D[j] + D[i])`, evaluated in this
/// exact form so every caller rounds identically.
#[inline]
pub(crate) fn pair_energy(acc: &Accumulator1D, lambda: f64, i: usize, j: usize) -> f64 {
    lambda * (acc.prefix_seg[j] - acc.prefix_seg[i]) + (1.0 - lambda) * (acc.slice_dt[j] + acc.slice_dt[i])
}

/// Exact maximizer of the pair energy over `i < j` with
/// `min_width ≤ s_j − s_i ≤ max_width`. Ties go to the smallest `s1`, then
/// the smallest `s2`.
///
/// The energy splits as `f(j) + g(i)`, so a sliding-window maximum of `g`
/// finds the optimum in linear time. Because the split form rounds
/// differently from the pair form, every pair within a few ulps of the split
/// optimum is then re-scored with [`pair_energy`]; the result is bit-identical
/// to exhaustive enumeration.
pub fn maximize_energy(acc: &Accumulator1D, cfg: &EnergyConfig) -> Result<EnergyMax> {
    let n = acc.len();
    let (kmin, kmax) = gap_bounds(acc.step, cfg);
    if n < 2 || kmin > kmax || n - 1 < kmin {
        return Err(InferenceError::WindowTooShort {
            span: acc.span(),
            min_width: cfg.min_width,
        });
    }
    let lambda = cfg.lambda_i;
    let f: Vec<f64> = (0..n)
        .map(|j| lambda * acc.prefix_seg[j] + (1.0 - lambda) * acc.slice_dt[j])
        .collect();
    let g: Vec<f64> = (0..n)
        .map(|i| (1.0 - lambda) * acc.slice_dt[i] - lambda * acc.prefix_seg[i])
        .collect();

    // Sliding max of g over i in [j - kmax, j - kmin]; ties keep the
    // smaller index.
    let mut window_max = vec![f64::NEG_INFINITY; n];
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut best = f64::NEG_INFINITY;
    for j in kmin..n {
        let add = j - kmin;
        while deque.back().is_some_and(|&b| g[b] < g[add]) {
            deque.pop_back();
        }
        deque.push_back(add);
        let lo = j.saturating_sub(kmax);
        while deque.front().is_some_and(|&fr| fr < lo) {
            deque.pop_front();
        }
        let gi = g[*deque.front().unwrap()];
        window_max[j] = gi;
        best = best.max(f[j] + gi);
    }

    let scale = 2.0
        * (lambda * acc.prefix_seg.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            + (1.0 - lambda) * acc.slice_dt.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let threshold = best - 64.0 * f64::EPSILON * scale;

    let mut arg: Option<(usize, usize, f64)> = None;
    for j in kmin..n {
        if f[j] + window_max[j] < threshold {
            continue;
        }
        for i in j.saturating_sub(kmax)..=j - kmin {
            if f[j] + g[i] < threshold {
                continue;
            }
            let e = pair_energy(acc, lambda, i, j);
            let better = match arg {
                None => true,
                Some((bi, bj, be)) => e > be || (e == be && (i, j) < (bi, bj)),
            };
            if better {
                arg = Some((i, j, e));
            }
        }
    }
    let (i1, i2, energy) = arg.expect("the split optimum is always within threshold");
    Ok(EnergyMax {
        s1: acc.positions[i1],
        s2: acc.positions[i2],
        energy,
        i1,
        i2,
    })
}

/// Exhaustive O(n²) reference for [`maximize_energy`].
pub fn maximize_energy_brute_force(acc: &Accumulator1D, cfg: &EnergyConfig) -> Result<EnergyMax> {
    let n = acc.len();
    let (kmin, kmax) = gap_bounds(acc.step, cfg);
    let mut arg: Option<(usize, usize, f64)> = None;
    for i in 0..n {
        for j in i + kmin..n.min(i + kmax + 1) {
            let e = pair_energy(acc, cfg.lambda_i, i, j);
            if arg.map_or(true, |(_, _, be)| e > be) {
                arg = Some((i, j, e));
            }
        }
    }
    let (i1, i2, energy) = arg.ok_or(InferenceError::WindowTooShort {
        span: acc.span(),
        min_width: cfg.min_width,
    })?;
    Ok(EnergyMax {
        s1: acc.positions[i1],
        s2: acc.positions[i2],
        energy,
        i1,
        i2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(lambda: f64) -> EnergyConfig {
        EnergyConfig {
            lambda_i: lambda,
            ..Default::default()
        }
    }

    #[test]
    fn dt_spikes_only() {
        let n = 200;
        let mut dt = vec![0.0; n];
        dt[50] = 1.0;
        dt[100] = 1.0;
        let acc = Accumulator1D::from_slices(0.0, 0.04, vec![0.0; n], dt);
        let m = maximize_energy(&acc, &cfg(0.0)).unwrap();
        assert_eq!((m.i1, m.i2), (50, 100));
        assert!((m.s1 - 2.0).abs() < 1e-12 && (m.s2 - 4.0).abs() < 1e-12);
        assert_eq!(m.energy, 2.0);
    }

    #[test]
    fn signed_seg_block() {
        let n = 200;
        let seg: Vec<f64> = (0..n)
            .map(|k| if (50..=100).contains(&k) { 1.0 } else { -1.0 })
            .collect();
        let acc = Accumulator1D::from_slices(0.0, 0.04, seg, vec![0.0; n]);
        let m = maximize_energy(&acc, &cfg(1.0)).unwrap();
        // Prefix differences cover (x1, x2], so x1 sits one step before the
        // first positive slice.
        assert_eq!((m.i1, m.i2), (49, 100));
        assert!((m.s1 - (2.0 - 0.04)).abs() < 1e-12 && (m.s2 - 4.0).abs() < 1e-12);
        assert_eq!(m, maximize_energy_brute_force(&acc, &cfg(1.0)).unwrap());
    }

    #[test]
    fn width_bounds_respected() {
        let n = 400;
        let mut dt = vec![0.0; n];
        dt[10] = 1.0;
        dt[390] = 1.0;
        let acc = Accumulator1D::from_slices(0.0, 0.04, vec![0.0; n], dt);
        let m = maximize_energy(&acc, &cfg(0.0)).unwrap();
        let w = m.s2 - m.s1;
        assert!((1.0 - 1e-9..=10.0 + 1e-9).contains(&w));
        assert_eq!(m.energy, 1.0);
        // Many pairs reach 1; ties go to the smallest s1, then s2.
        assert_eq!((m.i1, m.i2), (10, 35));
    }

    #[test]
    fn window_too_short() {
        let acc = Accumulator1D::from_slices(0.0, 0.04, vec![0.0; 20], vec![0.0; 20]);
        assert!(matches!(
            maximize_energy(&acc, &cfg(0.5)),
            Err(InferenceError::WindowTooShort { .. })
        ));
        let acc = Accumulator1D::from_slices(0.0, 0.04, vec![0.0; 26], vec![0.0; 26]);
        let m = maximize_energy(&acc, &cfg(0.5)).unwrap();
        assert_eq!((m.i1, m.i2), (0, 25));
    }

    #[test]
    fn matches_brute_force_on_fifty_seeds() {
        for seed in 0..50u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(60..=200);
            let seg: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let dt: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let acc = Accumulator1D::from_slices(rng.gen_range(0.0..20.0), 0.04, seg, dt);
            let c = EnergyConfig {
                lambda_i: rng.gen_range(0.0..=1.0),
                min_width: rng.gen_range(0.5..2.0),
                max_width: rng.gen_range(2.0..8.0),
                ..Default::default()
            };
            let fast = maximize_energy(&acc, &c).unwrap();
            let slow = maximize_energy_brute_force(&acc, &c).unwrap();
            assert_eq!(fast, slow, "seed {seed}");
            assert_eq!(fast.energy.to_bits(), slow.energy.to_bits());
        }
    }

    proptest! {
        #[test]
        fn fast_equals_brute_force(
            seg in prop::collection::vec(-4i32..=4, 26..200),
            dt in prop::collection::vec(0i32..=4, 200),
            lambda_q in 0u32..=8,
            min_k in 1usize..30,
            extra_k in 0usize..150,
        ) {
            // Coarse quantization produces many exact ties.
            let n = seg.len();
            let seg: Vec<f64> = seg.iter().map(|v| *v as f64 / 4.0).collect();
            let dt: Vec<f64> = dt[..n].iter().map(|v| *v as f64 / 4.0).collect();
            let acc = Accumulator1D::from_slices(0.0, 0.04, seg, dt);
            let c = EnergyConfig {
                lambda_i: lambda_q as f64 / 8.0,
                min_width: min_k as f64 * 0.04,
                max_width: (min_k + extra_k + 1) as f64 * 0.04,
                ..Default::default()
            };
            let fast = maximize_energy(&acc, &c);
            let slow = maximize_energy_brute_force(&acc, &c);
            match (fast, slow) {
                (Ok(a), Ok(b)) => {
                    prop_assert_eq!(a, b);
                    prop_assert_eq!(a.energy.to_bits(), b.energy.to_bits());
                }
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
            }
        }

        #[test]
        fn dt_shift_keeps_argmax(
            seg in prop::collection::vec(-8i32..=8, 60..120),
            dt in prop::collection::vec(0i32..=8, 120),
            shift in 1i32..8,
        ) {
            let n = seg.len();
            let seg: Vec<f64> = seg.iter().map(|v| *v as f64 / 8.0).collect();
            let base: Vec<f64> = dt[..n].iter().map(|v| *v as f64 / 8.0).collect();
            let shifted: Vec<f64> = base.iter().map(|v| v + shift as f64 / 8.0).collect();
            let c = EnergyConfig { lambda_i: 0.5, ..Default::default() };
            let a = maximize_energy(&Accumulator1D::from_slices(0.0, 0.0625, seg.clone(), base), &c).unwrap();
            let b = maximize_energy(&Accumulator1D::from_slices(0.0, 0.0625, seg, shifted), &c).unwrap();
            prop_assert_eq!((a.i1, a.i2), (b.i1, b.i2));
            prop_assert_eq!(b.energy - a.energy, shift as f64 / 8.0);
        }

        #[test]
        fn dt_only_picks_best_feasible_peaks(dt in prop::collection::vec(0.0f64..1.0, 30..150)) {
            let n = dt.len();
            let acc = Accumulator1D::from_slices(0.0, 0.04, vec![0.0; n], dt.clone());
            let c = cfg(0.0);
            let m = maximize_energy(&acc, &c).unwrap();
            let (kmin, kmax) = gap_bounds(0.04, &c);
            let mut best = f64::NEG_INFINITY;
            for i in 0..n {
                for j in i + kmin..n.min(i + kmax + 1) {
                    best = best.max(dt[i] + dt[j]);
                }
            }
            prop_assert!((m.energy - best).abs() < 1e-12);
        }
    }
}
