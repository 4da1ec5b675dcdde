//! Dense linear algebra over the two-element field.
//!
//! Vectors are packed into `u64` words. [`Basis`] keeps an echelon basis
//! with one pivot per row so membership tests cost one reduction pass.
//! [`Affine`] is a coset `particular + span(basis)` used by the solver.

use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitRow {
    words: Vec<u64>,
    len: usize,
}

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        BitRow { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn from_ones(len: usize, ones: impl IntoIterator<Item = usize>) -> Self {
        let mut r = Self::zeros(len);
        for i in ones {
            r.flip(i);
        }
        r
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Self::from_ones(bits.len(), bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        if self.get(i) != v {
            self.flip(i);
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] ^= 1 << (i % 64);
    }

    pub fn xor_assign(&mut self, other: &BitRow) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitRow) -> BitRow {
        let mut r = self.clone();
        r.xor_assign(other);
        r
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Inner product over the two-element field.
    pub fn dot(&self, other: &BitRow) -> bool {
        let mut acc = 0u32;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= (a & b).count_ones() & 1;
        }
        acc == 1
    }

    pub fn first_one(&self) -> Option<usize> {
        for (wi, &w) in self.words.iter().enumerate() {
            if w != 0 {
                return Some(wi * 64 + w.trailing_zeros() as usize);
            }
        }
        None
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }

    /// Bits `range` as a new row.
    pub fn slice(&self, start: usize, len: usize) -> BitRow {
        BitRow::from_ones(len, self.ones().filter(|&i| i >= start && i < start + len).map(|i| i - start))
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &BitRow) -> BitRow {
        let n = self.len;
        BitRow::from_ones(n + other.len, self.ones().chain(other.ones().map(|i| i + n)))
    }

    /// Picks coordinates `idx` (in order) into a new row.
    pub fn select(&self, idx: &[usize]) -> BitRow {
        BitRow::from_ones(idx.len(), idx.iter().enumerate().filter(|(_, &i)| self.get(i)).map(|(k, _)| k))
    }

    /// Scatters `self` into a row of length `len` at positions `idx`.
    pub fn scatter(&self, idx: &[usize], len: usize) -> BitRow {
        BitRow::from_ones(len, self.ones().map(|k| idx[k]))
    }
}

impl fmt::Debug for BitRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Echelon basis: every row has a distinct pivot (its lowest set bit) and
/// no other row has that bit set.
#[derive(Clone, Debug, Default)]
pub struct Basis {
    len: usize,
    rows: Vec<(usize, BitRow)>,
}

impl Basis {
    pub fn new(len: usize) -> Self {
        Basis { len, rows: Vec::new() }
    }

    pub fn from_rows<'a>(len: usize, rows: impl IntoIterator<Item = &'a BitRow>) -> Self {
        let mut b = Basis::new(len);
        for r in rows {
            b.insert(r.clone());
        }
        b
    }

    pub fn width(&self) -> usize {
        self.len
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> impl Iterator<Item = &BitRow> {
        self.rows.iter().map(|(_, r)| r)
    }

    pub fn pivots(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.iter().map(|(p, _)| *p)
    }

    /// Reduces `v` against the basis.
    pub fn reduce(&self, mut v: BitRow) -> BitRow {
        for (p, r) in &self.rows {
            if v.get(*p) {
                v.xor_assign(r);
            }
        }
        v
    }

    pub fn contains(&self, v: &BitRow) -> bool {
        self.reduce(v.clone()).is_zero()
    }

    /// Adds `v`; returns false if it was already in the span.
    pub fn insert(&mut self, v: BitRow) -> bool {
        debug_assert_eq!(v.len(), self.len);
        let v = self.reduce(v);
        let Some(p) = v.first_one() else { return false };
        for (_, r) in self.rows.iter_mut() {
            if r.get(p) {
                r.xor_assign(&v);
            }
        }
        self.rows.push((p, v));
        true
    }

    /// Basis of `{y : y·b = 0 for every row b}`.
    pub fn annihilator(&self) -> Vec<BitRow> {
        let pivots: Vec<usize> = self.pivots().collect();
        let mut is_pivot = vec![false; self.len];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        // Fully reduced rows: row k = e_{p_k} + sum over free f of a_{k,f} e_f.
        // y is orthogonal to all rows iff y_{p_k} = sum_f a_{k,f} y_f.
        (0..self.len)
            .filter(|&f| !is_pivot[f])
            .map(|f| {
                let mut y = BitRow::zeros(self.len);
                y.flip(f);
                for (p, r) in &self.rows {
                    if r.get(f) {
                        y.flip(*p);
                    }
                }
                y
            })
            .collect()
    }
}

/// Basis of the solution space of `rows · x = 0`.
pub fn nullspace(rows: &[BitRow], ncols: usize) -> Vec<BitRow> {
    Basis::from_rows(ncols, rows).annihilator()
}

/// The coset `particular + span(basis)`.
#[derive(Clone, Debug)]
pub struct Affine {
    particular: BitRow,
    basis: Basis,
}

impl Affine {
    pub fn full(len: usize) -> Self {
        let mut basis = Basis::new(len);
        for i in 0..len {
            basis.insert(BitRow::from_ones(len, [i]));
        }
        Affine { particular: BitRow::zeros(len), basis }
    }

    pub fn point(p: BitRow) -> Self {
        let len = p.len();
        Affine { particular: p, basis: Basis::new(len) }
    }

    pub fn linear(basis: Basis) -> Self {
        Affine { particular: BitRow::zeros(basis.width()), basis }
    }

    /// Solutions of `rows[k] · x = rhs[k]`, or `None` if inconsistent.
    pub fn solve(rows: &[BitRow], rhs: &[bool], ncols: usize) -> Option<Self> {
        debug_assert_eq!(rows.len(), rhs.len());
        // Eliminate on augmented rows with the constant in the extra column.
        let mut aug = Basis::new(ncols + 1);
        for (r, &b) in rows.iter().zip(rhs) {
            let mut a = r.concat(&BitRow::zeros(1));
            a.set(ncols, b);
            aug.insert(a);
        }
        let mut particular = BitRow::zeros(ncols);
        let mut coeffs = Basis::new(ncols);
        for (p, r) in &aug.rows {
            if *p == ncols {
                return None;
            }
            if r.get(ncols) {
                particular.flip(*p);
            }
            coeffs.insert(r.slice(0, ncols));
        }
        Some(Affine { particular, basis: Basis::from_rows(ncols, &coeffs.annihilator()) })
    }

    pub fn width(&self) -> usize {
        self.particular.len()
    }

    pub fn dim(&self) -> usize {
        self.basis.rank()
    }

    pub fn particular(&self) -> &BitRow {
        &self.particular
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn contains(&self, x: &BitRow) -> bool {
        self.basis.contains(&x.xor(&self.particular))
    }

    /// Constraint form: rows and right-hand sides describing the coset.
    pub fn constraints(&self) -> (Vec<BitRow>, Vec<bool>) {
        let rows = self.basis.annihilator();
        let rhs = rows.iter().map(|y| y.dot(&self.particular)).collect();
        (rows, rhs)
    }

    pub fn intersect(&self, other: &Affine) -> Option<Affine> {
        let (mut rows, mut rhs) = self.constraints();
        let (r2, b2) = other.constraints();
        rows.extend(r2);
        rhs.extend(b2);
        Affine::solve(&rows, &rhs, self.width())
    }

    /// Image under the coordinate projection onto `idx`.
    pub fn project(&self, idx: &[usize]) -> Affine {
        let basis = Basis::from_rows(idx.len(), &self.basis.rows().map(|r| r.select(idx)).collect::<Vec<_>>());
        let particular = basis.reduce(self.particular.select(idx));
        Affine { particular, basis }
    }

    /// Preimage under the projection from width `len` onto `idx`.
    pub fn lift(&self, idx: &[usize], len: usize) -> Affine {
        let mut basis = Basis::from_rows(len, &self.basis.rows().map(|r| r.scatter(idx, len)).collect::<Vec<_>>());
        let mut taken = vec![false; len];
        for &i in idx {
            taken[i] = true;
        }
        for (i, t) in taken.into_iter().enumerate() {
            if !t {
                basis.insert(BitRow::from_ones(len, [i]));
            }
        }
        Affine { particular: self.particular.scatter(idx, len), basis }
    }

    /// Some element, reduced to a canonical representative.
    pub fn canonical_point(&self) -> BitRow {
        self.basis.reduce(self.particular.clone())
    }

    /// All elements; only for small dimensions.
    pub fn elements(&self) -> Vec<BitRow> {
        let rows: Vec<&BitRow> = self.basis.rows().collect();
        assert!(rows.len() < 24, "refusing to enumerate 2^{} points", rows.len());
        (0u64..1 << rows.len())
            .map(|mask| {
                let mut p = self.particular.clone();
                for (k, r) in rows.iter().enumerate() {
                    if mask >> k & 1 == 1 {
                        p.xor_assign(r);
                    }
                }
                p
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(bits: &str) -> BitRow {
        BitRow::from_bools(&bits.chars().map(|c| c == '1').collect::<Vec<_>>())
    }

    #[test]
    fn basis_membership() {
        let b = Basis::from_rows(4, &[row("1100"), row("0110")]);
        assert!(b.contains(&row("1010")));
        assert!(!b.contains(&row("1000")));
        assert!(b.contains(&row("0000")));
        assert_eq!(b.rank(), 2);
    }

    #[test]
    fn annihilator_is_orthogonal() {
        let b = Basis::from_rows(5, &[row("11000"), row("00111")]);
        let ann = b.annihilator();
        assert_eq!(ann.len(), 3);
        for y in &ann {
            for r in b.rows() {
                assert!(!y.dot(r));
            }
        }
    }

    #[test]
    fn solve_and_inconsistency() {
        let rows = [row("110"), row("011")];
        let s = Affine::solve(&rows, &[true, false], 3).unwrap();
        assert_eq!(s.dim(), 1);
        for x in s.elements() {
            assert!(rows[0].dot(&x) && !rows[1].dot(&x));
        }
        assert!(Affine::solve(&[row("11"), row("11")], &[true, false], 2).is_none());
    }

    #[test]
    fn long_rows_cross_word_boundaries() {
        let mut r = BitRow::zeros(130);
        r.flip(0);
        r.flip(64);
        r.flip(129);
        assert_eq!(r.ones().collect::<Vec<_>>(), vec![0, 64, 129]);
        assert_eq!(r.count_ones(), 3);
        assert_eq!(r.slice(60, 10).ones().collect::<Vec<_>>(), vec![4]);
    }

    fn arb_rows(width: usize) -> impl Strategy<Value = Vec<BitRow>> {
        proptest::collection::vec(proptest::collection::vec(any::<bool>(), width), 0..6)
            .prop_map(|rs| rs.iter().map(|b| BitRow::from_bools(b)).collect())
    }

    proptest! {
        #[test]
        fn span_membership_matches_enumeration(rows in arb_rows(6), probe in proptest::collection::vec(any::<bool>(), 6)) {
            let b = Basis::from_rows(6, &rows);
            let v = BitRow::from_bools(&probe);
            let mut in_span = false;
            for mask in 0u32..1 << rows.len() {
                let mut acc = BitRow::zeros(6);
                for (k, r) in rows.iter().enumerate() {
                    if mask >> k & 1 == 1 { acc.xor_assign(r); }
                }
                if acc == v { in_span = true; }
            }
            prop_assert_eq!(b.contains(&v), in_span);
        }

        #[test]
        fn intersect_and_project_match_enumeration(a in arb_rows(5), b in arb_rows(5),
                                                   pa in proptest::collection::vec(any::<bool>(), 5),
                                                   pb in proptest::collection::vec(any::<bool>(), 5)) {
            let x = Affine { particular: BitRow::from_bools(&pa), basis: Basis::from_rows(5, &a) };
            let y = Affine { particular: BitRow::from_bools(&pb), basis: Basis::from_rows(5, &b) };
            let xs: std::collections::BTreeSet<_> = x.elements().into_iter().collect();
            let ys: std::collections::BTreeSet<_> = y.elements().into_iter().collect();
            let both: Vec<_> = xs.intersection(&ys).cloned().collect();
            match x.intersect(&y) {
                None => prop_assert!(both.is_empty()),
                Some(z) => {
                    let zs: std::collections::BTreeSet<_> = z.elements().into_iter().collect();
                    prop_assert_eq!(zs.into_iter().collect::<Vec<_>>(), both);
                }
            }
            let idx = [0usize, 3];
            let proj: std::collections::BTreeSet<_> = x.project(&idx).elements().into_iter().collect();
            let direct: std::collections::BTreeSet<_> = xs.iter().map(|p| p.select(&idx)).collect();
            prop_assert_eq!(proj, direct);
            let lifted = x.project(&idx).lift(&idx, 5);
            for p in &xs { prop_assert!(lifted.contains(p)); }
        }
    }
}
