//! The shipped toy shapes: six small multi-level CSG trees of about six
//! primitives each.

use crate::csg::{parse_csg, CsgModel};

pub const TOY_SOURCES: [(&str, &str); 6] = [
    ("bracket", include_str!("../data/toy/bracket.csg")),
    ("cup", include_str!("../data/toy/cup.csg")),
    ("dumbbell", include_str!("../data/toy/dumbbell.csg")),
    ("lamp", include_str!("../data/toy/lamp.csg")),
    ("nut", include_str!("../data/toy/nut.csg")),
    ("table", include_str!("../data/toy/table.csg")),
];

/// All toy shapes, parsed, in name order.
pub fn toy_shapes() -> Vec<(&'static str, CsgModel)> {
    TOY_SOURCES
        .iter()
        .map(|(name, src)| (*name, parse_csg(src).expect("shipped toy shapes parse")))
        .collect()
}

pub fn toy_shape(name: &str) -> Option<CsgModel> {
    TOY_SOURCES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, src)| parse_csg(src).expect("shipped toy shapes parse"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csg::{simplify_stump, tree_to_stump, Solid, DEFAULT_TERM_CAP};
    use crate::sampling::sample_uniform;

    #[test]
    fn toys_parse_and_normalize() {
        for (name, m) in toy_shapes() {
            assert!((4..=8).contains(&m.primitives.len()), "{name}");
            assert!(m.expr.depth() >= 3, "{name}");
            let s = tree_to_stump(&m, DEFAULT_TERM_CAP).unwrap();
            let set = sample_uniform(&m, 4000, &m.bounds(), 1).unwrap();
            let simple = simplify_stump(&s, &set.points);
            let inside = set.inside_count();
            assert!(inside > 100 && inside < 3900, "{name}: {inside}");
            for (p, t) in set.points.iter().zip(&set.target) {
                assert_eq!(s.eval_hard(p), *t, "{name}");
                assert_eq!(simple.eval_hard(p), *t, "{name}");
            }
        }
        assert!(toy_shape("cup").is_some());
        assert!(toy_shape("teapot").is_none());
    }
}
