//! Erosion, dilation and closing against set-definition oracles on Z^2.

use proptest::prelude::*;
use xray_core::imaging::{close, dilate, erode, BinaryMask, StructuringElement};

fn arb_mask(max: usize) -> impl Strategy<Value = BinaryMask> {
    (1..=max, 1..=max, 0.0f64..1.0).prop_flat_map(|(w, h, density)| {
        proptest::collection::vec(proptest::bool::weighted(density), w * h)
            .prop_map(move |bits| BinaryMask::from_vec(w, h, bits).unwrap())
    })
}

fn arb_element() -> impl Strategy<Value = StructuringElement> {
    prop_oneof![
        Just(StructuringElement::square(3)),
        Just(StructuringElement::square(10)),
        (1usize..=6).prop_map(StructuringElement::square),
    ]
}

/// Footprint offsets `B = [lo, hi]^2`.
fn offsets(se: &StructuringElement) -> Vec<(i64, i64)> {
    let (lo, hi) = se.offsets();
    (lo..=hi).flat_map(|dy| (lo..=hi).map(move |dx| (dx, dy))).collect()
}

fn at(m: &BinaryMask, x: i64, y: i64) -> bool {
    x >= 0 && y >= 0 && (x as usize) < m.width() && (y as usize) < m.height() && m.get(x as usize, y as usize)
}

/// `{p : p + b in A for all b in B}` with everything outside the frame empty.
fn erode_oracle(a: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let b = offsets(se);
    BinaryMask::from_fn(a.width(), a.height(), |x, y| {
        b.iter().all(|&(dx, dy)| at(a, x as i64 + dx, y as i64 + dy))
    })
    .unwrap()
}

/// `{a + b : a in A, b in B}` restricted to the frame.
fn dilate_oracle(a: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let b = offsets(se);
    BinaryMask::from_fn(a.width(), a.height(), |x, y| {
        b.iter().any(|&(dx, dy)| at(a, x as i64 - dx, y as i64 - dy))
    })
    .unwrap()
}

/// `(A + B) - B` computed on an unbounded plane, then restricted to the frame.
fn close_oracle(a: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let b = offsets(se);
    let n = se.size() as i64;
    let (w, h) = (a.width() as i64, a.height() as i64);
    let ext_w = (w + 2 * n) as usize;
    let dilated: Vec<bool> = (0..(h + 2 * n))
        .flat_map(|y| (0..(w + 2 * n)).map(move |x| (x - n, y - n)))
        .map(|(x, y)| b.iter().any(|&(dx, dy)| at(a, x - dx, y - dy)))
        .collect();
    BinaryMask::from_fn(a.width(), a.height(), |x, y| {
        b.iter().all(|&(dx, dy)| {
            let (px, py) = (x as i64 + dx + n, y as i64 + dy + n);
            dilated[py as usize * ext_w + px as usize]
        })
    })
    .unwrap()
}

fn subset(a: &BinaryMask, b: &BinaryMask) -> bool {
    a.as_slice().iter().zip(b.as_slice()).all(|(&x, &y)| !x || y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn erode_matches_oracle(a in arb_mask(16), se in arb_element()) {
        prop_assert_eq!(erode(&a, &se), erode_oracle(&a, &se));
    }

    #[test]
    fn dilate_matches_oracle(a in arb_mask(16), se in arb_element()) {
        prop_assert_eq!(dilate(&a, &se), dilate_oracle(&a, &se));
    }

    #[test]
    fn close_matches_oracle(a in arb_mask(16), se in arb_element()) {
        prop_assert_eq!(close(&a, &se), close_oracle(&a, &se));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn erosion_is_anti_extensive_and_dilation_extensive(a in arb_mask(16), se in arb_element()) {
        prop_assert!(subset(&erode(&a, &se), &a));
        prop_assert!(subset(&a, &dilate(&a, &se)));
    }

    #[test]
    fn closing_is_extensive_and_idempotent(a in arb_mask(16), se in arb_element()) {
        let c = close(&a, &se);
        prop_assert!(subset(&a, &c));
        prop_assert_eq!(close(&c, &se), c);
    }

    #[test]
    fn operators_are_increasing(a in arb_mask(12), extra in arb_mask(12), se in arb_element()) {
        let (w, h) = (a.width(), a.height());
        let b = BinaryMask::from_fn(w, h, |x, y| {
            a.get(x, y) || (x < extra.width() && y < extra.height() && extra.get(x, y))
        }).unwrap();
        prop_assert!(subset(&erode(&a, &se), &erode(&b, &se)));
        prop_assert!(subset(&dilate(&a, &se), &dilate(&b, &se)));
        prop_assert!(subset(&close(&a, &se), &close(&b, &se)));
    }

    /// Away from the border, erosion is the complement of dilating the
    /// complement by the reflected element.
    #[test]
    fn erosion_dilation_duality(a in arb_mask(16), se in arb_element()) {
        let lhs = erode(&a, &se);
        let rhs = dilate(&a.complement(), &se.reflected()).complement();
        let (lo, hi) = se.offsets();
        for (x, y, v) in lhs.enumerate() {
            let inside = x as i64 + lo >= 0
                && y as i64 + lo >= 0
                && x as i64 + hi < a.width() as i64
                && y as i64 + hi < a.height() as i64;
            if inside {
                prop_assert_eq!(v, rhs.get(x, y), "at ({}, {})", x, y);
            }
        }
    }
}

#[test]
fn ten_by_ten_element_anchor() {
    let se = StructuringElement::square(10);
    assert_eq!(se.anchor(), 5);
    assert_eq!(se.offsets(), (-5, 4));
}
