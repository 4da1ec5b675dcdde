//! Exact oracles over the group models: the automorphism space, the
//! isomorphism question for the pointed models, a game solver for tiny
//! instances, and the invariant suites.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::bitmat::{Affine, BitRow};
use crate::error::{Error, Result};
use crate::gf2_models::{GroupElement, Model, SortId, StructureParameter};

pub mod oracle;
pub mod solver;
pub mod suites;

pub use solver::{solve_game, SolveCaps, SolveReport};
pub use suites::{run_suite, SuiteConfig, SuiteReport, SUITES};

/// Group-closed automorphisms as base tuples `⟨c_s⟩`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AutoSpace {
    pub dimension: usize,
    pub basis: Vec<BTreeMap<SortId, GroupElement>>,
    pub particular: Option<BTreeMap<SortId, GroupElement>>,
}

/// Column layout of the unknowns `c_s` for a set of sorts.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub sorts: Vec<SortId>,
    pub offset: HashMap<SortId, usize>,
    pub width: usize,
}

impl Layout {
    pub fn new(param: &StructureParameter, sorts: impl IntoIterator<Item = SortId>) -> Self {
        let mut offset = HashMap::new();
        let mut order = Vec::new();
        let mut width = 0;
        for s in sorts {
            if offset.contains_key(&s) {
                continue;
            }
            offset.insert(s, width);
            order.push(s);
            width += param.gen_count(s);
        }
        Layout { sorts: order, offset, width }
    }

    pub fn decode(&self, param: &StructureParameter, x: &BitRow) -> BTreeMap<SortId, GroupElement> {
        self.sorts
            .iter()
            .map(|&s| (s, GroupElement { sort: s, support: x.slice(self.offset[&s], param.gen_count(s)) }))
            .collect()
    }

    /// Rows `y` with `y · c = 0` exactly when every `S`-pair of bases lies
    /// in its pair subgroup.
    pub fn auto_rows(&self, param: &StructureParameter) -> Vec<BitRow> {
        let mut rows = Vec::new();
        for &s1 in &self.sorts {
            for &s2 in &self.sorts {
                if !param.in_s(s1, s2) {
                    continue;
                }
                let n1 = param.gen_count(s1);
                for y in param.pair_basis(s1, s2).annihilator() {
                    let mut row = BitRow::zeros(self.width);
                    for k in y.ones() {
                        if k < n1 {
                            row.flip(self.offset[&s1] + k);
                        } else {
                            row.flip(self.offset[&s2] + k - n1);
                        }
                    }
                    if !row.is_zero() {
                        rows.push(row);
                    }
                }
            }
        }
        rows
    }

    /// Rows fixing `c_s = value`.
    pub fn pin_rows(&self, s: SortId, value: &GroupElement) -> (Vec<BitRow>, Vec<bool>) {
        let o = self.offset[&s];
        (0..value.support.len()).map(|k| (BitRow::from_ones(self.width, [o + k]), value.support.get(k))).unzip()
    }
}

/// Solves the Lemma 1.7 constraints over all sorts by elimination.
pub fn auto_space(param: &StructureParameter, cap: usize) -> Result<AutoSpace> {
    if param.num_generators() > cap {
        return Err(Error::cap("generators in the linear system", param.num_generators(), cap));
    }
    let layout = Layout::new(param, 0..param.num_sorts());
    let rows = layout.auto_rows(param);
    let rhs = vec![false; rows.len()];
    let sol = Affine::solve(&rows, &rhs, layout.width).expect("homogeneous systems are consistent");
    Ok(AutoSpace {
        dimension: sol.dim(),
        basis: sol.basis().rows().map(|r| layout.decode(param, r)).collect(),
        particular: None,
    })
}

/// Whether some automorphism of the common model sends `a*` to `b*`.
pub fn iso_exists(m1: &Model, m2: &Model, cap: usize) -> Result<bool> {
    if !m1.param.same_as(&m2.param) {
        return Err(Error::ParameterMismatch("the models are built over different parameters".into()));
    }
    iso_solutions(m1, m2, cap).map(|s| s.is_some())
}

/// The affine space of automorphism tuples carrying the constant across.
pub fn iso_solutions(m1: &Model, m2: &Model, cap: usize) -> Result<Option<AutoSpace>> {
    let param = &m1.param;
    if param.num_generators() > cap {
        return Err(Error::cap("generators in the linear system", param.num_generators(), cap));
    }
    let layout = Layout::new(param, 0..param.num_sorts());
    let mut rows = layout.auto_rows(param);
    let mut rhs = vec![false; rows.len()];
    match (&m1.constant, &m2.constant) {
        (None, None) => {}
        (Some(a), Some(b)) => {
            if a.sort != b.sort {
                return Ok(None);
            }
            let (r, v) = layout.pin_rows(a.sort, &a.add(b)?);
            rows.extend(r);
            rhs.extend(v);
        }
        _ => return Ok(None),
    }
    Ok(Affine::solve(&rows, &rhs, layout.width).map(|sol| AutoSpace {
        dimension: sol.dim(),
        basis: sol.basis().rows().map(|r| layout.decode(param, r)).collect(),
        particular: Some(layout.decode(param, sol.particular())),
    }))
}

/// Length of the reduced representation.
pub fn n_of(c: &GroupElement) -> usize {
    c.weight()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2_models::SRelation;
    use std::sync::Arc;

    fn one_sort(s_pairs: &[(usize, usize)], t: &[(usize, usize)], gens: usize) -> StructureParameter {
        StructureParameter::explicit(
            vec![("s".into(), (0..gens).map(|k| format!("t{k}")).collect())],
            SRelation::Pairs(s_pairs.iter().copied().collect()),
            t.iter().copied(),
        )
        .unwrap()
    }

    #[test]
    fn empty_s_leaves_everything_free() {
        let p = one_sort(&[], &[], 1);
        let a = auto_space(&p, 64).unwrap();
        assert_eq!(a.dimension, 1);
        assert_eq!(oracle::count_automorphisms(&p), 2);
    }

    #[test]
    fn reflexive_pair_pins_base() {
        // Q_{s,s} is spanned by (x_t, x_t); (c, c) lies in it for every c,
        // so nothing is pinned.
        let p = one_sort(&[(0, 0)], &[(0, 0)], 1);
        assert_eq!(auto_space(&p, 64).unwrap().dimension, 1);
        // with no T-pairs Q is trivial and c must be zero
        let p = one_sort(&[(0, 0)], &[], 1);
        assert_eq!(auto_space(&p, 64).unwrap().dimension, 0);
    }

    #[test]
    fn iso_examples() {
        let p = Arc::new(one_sort(&[(0, 0)], &[], 2));
        let a = p.zero(0);
        let m = Model::new(p.clone(), Some(a.clone()));
        assert!(iso_exists(&m, &m, 64).unwrap());
        let m2 = Model::new(p.clone(), Some(p.gen(0, 1)));
        assert!(!iso_exists(&m, &m2, 64).unwrap());
        assert!(!oracle::iso_exists_enum(&m, &m2));
        let other = Arc::new(one_sort(&[], &[], 2));
        assert!(matches!(iso_exists(&m, &Model::new(other.clone(), Some(other.zero(0))), 64), Err(Error::ParameterMismatch(_))));
        assert!(iso_exists(&Model::new(other.clone(), Some(other.zero(0))), &Model::new(other.clone(), Some(other.gen(0, 1))), 64).unwrap());
    }

    #[test]
    fn n_of_examples() {
        let p = one_sort(&[], &[], 3);
        assert_eq!(n_of(&p.zero(0)), 0);
        assert_eq!(n_of(&p.gen(0, 1)), 1);
        assert_eq!(n_of(&p.gen(0, 0).add(&p.gen(0, 2)).unwrap()), 2);
    }

    #[test]
    fn cap_overflow() {
        let p = one_sort(&[], &[], 3);
        assert!(matches!(auto_space(&p, 2), Err(Error::SizeCap { .. })));
    }
}
