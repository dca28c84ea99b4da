//! Executable CSG-tree to stump conversion.
//!
//! Every subtree is turned into a list of terms (a union of intersections of
//! literals). Union concatenates term lists, intersection distributes
//! pairwise, difference intersects with the complement of the right operand.
//! Terms that contain a primitive in both polarities are empty and dropped.

use std::collections::{BTreeMap, BTreeSet};

use crate::csg::expr::{CsgExpr, CsgModel};
use crate::csg::stump::Stump;
use crate::csg::CsgError;

/// Default cap on the number of intersection columns.
pub const DEFAULT_TERM_CAP: usize = 4096;

/// Primitive index -> polarity (`true` = positive, `false` = complemented).
pub type Term = BTreeMap<usize, bool>;

fn check(terms: Vec<Term>, cap: usize) -> Result<Vec<Term>, CsgError> {
    if terms.len() > cap {
        Err(CsgError::TermOverflow {
            terms: terms.len(),
            cap,
        })
    } else {
        Ok(terms)
    }
}

fn merge(a: &Term, b: &Term) -> Option<Term> {
    let mut out = a.clone();
    for (&k, &pol) in b {
        if let Some(&prev) = out.get(&k) {
            if prev != pol {
                return None;
            }
        }
        out.insert(k, pol);
    }
    Some(out)
}

/// Pairwise distribution; the right operand's terms are the outer loop.
fn intersect(a: &[Term], b: &[Term], cap: usize) -> Result<Vec<Term>, CsgError> {
    let mut out = Vec::new();
    for eta in b {
        for gamma in a {
            if let Some(t) = merge(gamma, eta) {
                out.push(t);
                if out.len() > cap {
                    return Err(CsgError::TermOverflow { terms: out.len(), cap });
                }
            }
        }
    }
    Ok(out)
}

fn complement(terms: &[Term], cap: usize) -> Result<Vec<Term>, CsgError> {
    // not(g1 | .. | gm) = not g1 & .. & not gm, and not g is a union of negated literals
    let mut acc: Vec<Term> = vec![Term::new()];
    for gamma in terms {
        let negated: Vec<Term> = gamma.iter().map(|(&k, &pol)| Term::from([(k, !pol)])).collect();
        acc = intersect(&acc, &negated, cap)?;
        if acc.is_empty() {
            break;
        }
    }
    Ok(acc)
}

/// Union-of-intersections form of an expression.
pub fn to_terms(expr: &CsgExpr, cap: usize) -> Result<Vec<Term>, CsgError> {
    let terms = match expr {
        CsgExpr::Leaf(i) => vec![Term::from([(*i, true)])],
        CsgExpr::Universe => vec![Term::new()],
        CsgExpr::Empty => vec![],
        CsgExpr::Union(a, b) => {
            let mut t = to_terms(a, cap)?;
            t.extend(to_terms(b, cap)?);
            t
        }
        CsgExpr::Intersection(a, b) => intersect(&to_terms(a, cap)?, &to_terms(b, cap)?, cap)?,
        CsgExpr::Difference(a, b) => {
            let right = complement(&to_terms(b, cap)?, cap)?;
            intersect(&to_terms(a, cap)?, &right, cap)?
        }
        CsgExpr::Complement(a) => complement(&to_terms(a, cap)?, cap)?,
    };
    check(terms, cap)
}

/// Builds a stump with one column per term. A primitive used with both
/// polarities appears twice in the table (same geometry, different `w_c`).
pub fn terms_to_stump(terms: &[Term], model: &CsgModel) -> Stump {
    let rows: BTreeSet<(usize, bool)> = terms
        .iter()
        .flat_map(|t| t.iter().map(|(&k, &pol)| (k, !pol)))
        .collect();
    let rows: Vec<(usize, bool)> = rows.into_iter().collect();
    let row_of: BTreeMap<(usize, bool), usize> = rows.iter().enumerate().map(|(r, &key)| (key, r)).collect();
    let c = terms.len();
    let mut w_i = vec![vec![false; c]; rows.len()];
    for (j, t) in terms.iter().enumerate() {
        for (&k, &pol) in t {
            w_i[row_of[&(k, !pol)]][j] = true;
        }
    }
    Stump {
        primitives: rows.iter().map(|&(k, _)| model.primitives[k]).collect(),
        w_c: rows.iter().map(|&(_, comp)| comp).collect(),
        w_i,
        w_u: vec![true; c],
    }
}

/// Converts a CSG tree into an equivalent stump.
pub fn tree_to_stump(model: &CsgModel, cap: usize) -> Result<Stump, CsgError> {
    let terms = to_terms(&model.expr, cap)?;
    Ok(terms_to_stump(&terms, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csg::parse::parse_csg;
    use crate::geometry::Vec3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn leaf(i: usize) -> CsgExpr {
        CsgExpr::Leaf(i)
    }

    #[test]
    fn base_case_difference() {
        let m = parse_csg("difference(box(2,2,2), sphere(r=1))").unwrap();
        let s = tree_to_stump(&m, DEFAULT_TERM_CAP).unwrap();
        assert_eq!(s.c(), 1);
        assert_eq!(s.w_c, vec![false, true]);
        assert_eq!(s.w_i, vec![vec![true], vec![true]]);
        assert_eq!(s.w_u, vec![true]);
    }

    #[test]
    fn base_case_union() {
        let terms = to_terms(&CsgExpr::union(leaf(0), leaf(1)), 16).unwrap();
        assert_eq!(terms, vec![Term::from([(0, true)]), Term::from([(1, true)])]);
    }

    #[test]
    fn distribution_order() {
        // (A | B) & (C | D) -> AC, BC, AD, BD with the right operand outermost
        let e = CsgExpr::intersection(CsgExpr::union(leaf(0), leaf(1)), CsgExpr::union(leaf(2), leaf(3)));
        let terms = to_terms(&e, 16).unwrap();
        let pairs: Vec<Vec<usize>> = terms.iter().map(|t| t.keys().copied().collect()).collect();
        assert_eq!(pairs, vec![vec![0, 2], vec![1, 2], vec![0, 3], vec![1, 3]]);
    }

    #[test]
    fn distribution_matches_tree_on_random_points() {
        let m = parse_csg(
            "intersection(union(sphere(1), translate(1,0,0, sphere(0.8))), \
             union(box(1.5,3,3), translate(0,1,0, cylinder(r=0.5))))",
        )
        .unwrap();
        let s = tree_to_stump(&m, DEFAULT_TERM_CAP).unwrap();
        assert_eq!(s.c(), 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let x = Vec3::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            assert_eq!(s.eval_hard(&x), m.eval_hard(&x));
        }
    }

    #[test]
    fn both_polarities_duplicate_primitive() {
        // symmetric difference needs each primitive positive and complemented
        let m = parse_csg("union(difference(sphere(1), translate(1,0,0, sphere(1))), difference(translate(1,0,0, sphere(1)), sphere(1)))").unwrap();
        let s = tree_to_stump(&m, DEFAULT_TERM_CAP).unwrap();
        assert_eq!(s.k(), 4);
        assert_eq!(s.w_c.iter().filter(|c| **c).count(), 2);
    }

    #[test]
    fn special_shapes() {
        assert!(to_terms(&CsgExpr::Empty, 4).unwrap().is_empty());
        assert_eq!(to_terms(&CsgExpr::Universe, 4).unwrap(), vec![Term::new()]);
        assert_eq!(
            to_terms(&CsgExpr::complement(CsgExpr::Empty), 4).unwrap(),
            vec![Term::new()]
        );
        assert!(to_terms(&CsgExpr::complement(CsgExpr::Universe), 4).unwrap().is_empty());
        // A & not A vanishes
        assert!(to_terms(&CsgExpr::difference(leaf(0), leaf(0)), 4).unwrap().is_empty());
    }

    #[test]
    fn overflow_is_reported() {
        let mut e = CsgExpr::union(leaf(0), leaf(1));
        for _ in 0..6 {
            e = CsgExpr::intersection(e.clone(), CsgExpr::union(leaf(0), leaf(1)));
        }
        // literal merging keeps these small, so use distinct primitives instead
        let mut wide = CsgExpr::union(leaf(0), leaf(1));
        for i in 1..8 {
            wide = CsgExpr::intersection(wide, CsgExpr::union(leaf(2 * i), leaf(2 * i + 1)));
        }
        assert!(to_terms(&e, 4096).is_ok());
        assert!(matches!(
            to_terms(&wide, 100),
            Err(CsgError::TermOverflow { cap: 100, .. })
        ));
    }
}
