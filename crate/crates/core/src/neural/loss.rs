//! Multi-label binary cross-entropy, pairwise margin ranking loss and their
//! weighted mix, each with its gradient with respect to the logits.

use crate::ciu::{CiuId, NUM_CIUS};

use super::tensor::Real;

/// `ln σ(x)` without overflow for large |x|.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -libm::log1p(libm::exp(-x))
    } else {
        x - libm::log1p(libm::exp(x))
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Mean binary cross-entropy over the 23 classes, via
/// `ln(1 - σ(s)) = ln σ(-s)`.
pub fn bce_loss<F: Real>(logits: &[F; NUM_CIUS], targets: &[bool; NUM_CIUS]) -> f64 {
    let total: f64 = logits
        .iter()
        .zip(targets)
        .map(|(&s, &y)| {
            let s = s.as_f64();
            if y {
                log_sigmoid(s)
            } else {
                log_sigmoid(-s)
            }
        })
        .sum();
    -total / NUM_CIUS as f64
}

/// Mean hinge `max(0, s_j - s_i + margin)` over all position pairs `i < j`
/// of the ground-truth order. Zero with fewer than two CIUs.
pub fn rank_loss<F: Real>(logits: &[F; NUM_CIUS], order: &[CiuId], margin: f64) -> f64 {
    let n = order.len();
    if n < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n {
        let si = logits[order[i].code()].as_f64();
        for later in &order[i + 1..] {
            total += (logits[later.code()].as_f64() - si + margin).max(0.0);
        }
    }
    total / (n * (n - 1) / 2) as f64
}

/// `(1 - λ) · bce + λ · rank`
pub fn total_loss<F: Real>(logits: &[F; NUM_CIUS], targets: &[bool; NUM_CIUS], order: &[CiuId], margin: f64, lambda: f64) -> f64 {
    mix(bce_loss(logits, targets), rank_loss(logits, order, margin), lambda)
}

#[inline]
pub fn mix(bce: f64, rank: f64, lambda: f64) -> f64 {
    (1.0 - lambda) * bce + lambda * rank
}

/// Total loss and its gradient with respect to the logits. Hinge terms
/// exactly at the kink contribute a zero subgradient.
pub fn total_loss_grad<F: Real>(
    logits: &[F; NUM_CIUS],
    targets: &[bool; NUM_CIUS],
    order: &[CiuId],
    margin: f64,
    lambda: f64,
) -> (f64, [F; NUM_CIUS]) {
    let mut grad = [0.0f64; NUM_CIUS];
    let k = NUM_CIUS as f64;
    for ((g, &s), &y) in grad.iter_mut().zip(logits).zip(targets) {
        let p = sigmoid(s.as_f64());
        *g = (1.0 - lambda) * (p - if y { 1.0 } else { 0.0 }) / k;
    }
    let n = order.len();
    if n >= 2 && lambda != 0.0 {
        let w = lambda / (n * (n - 1) / 2) as f64;
        for i in 0..n {
            let ci = order[i].code();
            for later in &order[i + 1..] {
                let cj = later.code();
                if logits[cj].as_f64() - logits[ci].as_f64() + margin > 0.0 {
                    grad[cj] += w;
                    grad[ci] -= w;
                }
            }
        }
    }
    let loss = total_loss(logits, targets, order, margin, lambda);
    (loss, grad.map(F::of))
}

/// For each ranked pair, whether its hinge is active. Used to exclude
/// finite-difference probes that straddle a kink.
pub fn hinge_pattern<F: Real>(logits: &[F; NUM_CIUS], order: &[CiuId], margin: f64) -> alloc::vec::Vec<bool> {
    let mut out = alloc::vec::Vec::new();
    for i in 0..order.len() {
        for later in &order[i + 1..] {
            out.push(logits[later.code()].as_f64() - logits[order[i].code()].as_f64() + margin > 0.0);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn logits_with(values: &[(CiuId, f64)]) -> [f64; NUM_CIUS] {
        let mut s = [0.0; NUM_CIUS];
        for &(c, v) in values {
            s[c.code()] = v;
        }
        s
    }

    #[test]
    fn bce_at_zero_is_ln2() {
        let s = [0.0f64; NUM_CIUS];
        let mut y = [false; NUM_CIUS];
        assert!((bce_loss(&s, &y) - core::f64::consts::LN_2).abs() < 1e-15);
        y[3] = true;
        y[20] = true;
        assert!((bce_loss(&s, &y) - core::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn bce_saturated() {
        let mut y = [false; NUM_CIUS];
        y[0] = true;
        y[5] = true;
        let s = y.map(|t| if t { 40.0 } else { -40.0 });
        assert!(bce_loss(&s, &y) < 1e-15);
        let wrong = y.map(|t| if t { -800.0 } else { 800.0 });
        assert!((bce_loss(&wrong, &y) - 800.0).abs() < 1e-9);
    }

    #[test]
    fn rank_examples() {
        let order = [CiuId::BOY, CiuId::COOKIE];
        let s = logits_with(&[(CiuId::BOY, 2.0), (CiuId::COOKIE, 0.0)]);
        assert_eq!(rank_loss(&s, &order, 1.0), 0.0);
        let s = logits_with(&[(CiuId::BOY, 0.0), (CiuId::COOKIE, 2.0)]);
        assert_eq!(rank_loss(&s, &order, 1.0), 3.0);

        let abc = [CiuId::GIRL, CiuId::SINK, CiuId::WATER];
        let s = logits_with(&[(CiuId::GIRL, 3.0), (CiuId::SINK, 2.0), (CiuId::WATER, 1.0)]);
        assert_eq!(rank_loss(&s, &abc, 1.0), 0.0);
        let s = logits_with(&[(CiuId::GIRL, 1.0), (CiuId::SINK, 2.0), (CiuId::WATER, 3.0)]);
        assert!((rank_loss(&s, &abc, 1.0) - 7.0 / 3.0).abs() < 1e-15);
        assert_eq!(rank_loss(&s, &abc[..1], 1.0), 0.0);
    }

    #[test]
    fn mixing_identities() {
        assert_eq!(mix(0.693147, 3.0, 0.0), 0.693147);
        assert_eq!(mix(0.693147, 3.0, 1.0), 3.0);
        assert!((mix(0.693147, 3.0, 0.1) - 0.9238323).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_bce_formula() {
        let s = logits_with(&[(CiuId::BOY, 2.0), (CiuId::GIRL, -1.0)]);
        let mut y = [false; NUM_CIUS];
        y[0] = true;
        let (_, g) = total_loss_grad(&s, &y, &[], 1.0, 0.0);
        assert!((g[0] - (sigmoid(2.0) - 1.0) / 23.0).abs() < 1e-15);
        assert!((g[1] - sigmoid(-1.0) / 23.0).abs() < 1e-15);
        let order = vec![CiuId::BOY, CiuId::GIRL];
        let kink = logits_with(&[(CiuId::BOY, 1.0), (CiuId::GIRL, 0.0)]);
        assert_eq!(hinge_pattern(&kink, &order, 1.0), vec![false]);
    }

    proptest::proptest! {
        #[test]
        fn rank_shift_invariant(vals in proptest::collection::vec(-5.0f64..5.0, NUM_CIUS), shift in -10.0f64..10.0,
                                codes in proptest::sample::subsequence((0..NUM_CIUS).collect::<alloc::vec::Vec<_>>(), 0..6)) {
            let mut s = [0.0; NUM_CIUS];
            s.copy_from_slice(&vals);
            let shifted = s.map(|v| v + shift);
            let order: alloc::vec::Vec<CiuId> = codes.iter().map(|&c| CiuId::from_code(c).unwrap()).collect();
            let a = rank_loss(&s, &order, 1.0);
            let b = rank_loss(&shifted, &order, 1.0);
            proptest::prop_assert!((a - b).abs() < 1e-9);
            proptest::prop_assert!(a >= 0.0);
        }

        #[test]
        fn rank_zero_iff_margins_hold(vals in proptest::collection::vec(-3.0f64..3.0, 4)) {
            let order = [CiuId::BOY, CiuId::GIRL, CiuId::WOMAN, CiuId::SINK];
            let mut s = [0.0; NUM_CIUS];
            for (c, v) in order.iter().zip(&vals) { s[c.code()] = *v; }
            let ordered = (0..4).all(|i| (i + 1..4).all(|j| vals[i] - vals[j] >= 1.0));
            proptest::prop_assert_eq!(rank_loss(&s, &order, 1.0) == 0.0, ordered);
        }

        #[test]
        fn bce_decreases_toward_label(vals in proptest::collection::vec(-6.0f64..6.0, NUM_CIUS), k in 0usize..NUM_CIUS, positive: bool) {
            let mut s = [0.0; NUM_CIUS];
            s.copy_from_slice(&vals);
            let mut y = [false; NUM_CIUS];
            y[k] = positive;
            let before = bce_loss(&s, &y);
            s[k] += if positive { 0.5 } else { -0.5 };
            proptest::prop_assert!(bce_loss(&s, &y) < before);
            proptest::prop_assert!(before >= 0.0);
        }
    }
}
