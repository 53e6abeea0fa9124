//! Prime-field arithmetic and linear maps over GF(q).

use std::fmt;
use std::str::FromStr;

use crate::error::{input, resource, Error, Result};

pub const MAX_FIELD_ORDER: u16 = 257;

/// Bits budget for full enumeration of a space or ensemble.
pub const ENUMERATION_BITS: f64 = 26.0;

/// A prime field GF(q).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Field {
    q: u16,
}

fn is_prime(n: u16) -> bool {
    n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

impl Field {
    pub fn new(q: u16) -> Result<Field> {
        if !is_prime(q) || q > MAX_FIELD_ORDER {
            return input(format!("field order {q} is not a prime up to {MAX_FIELD_ORDER}"));
        }
        Ok(Field { q })
    }

    pub fn binary() -> Field {
        Field { q: 2 }
    }

    pub fn order(self) -> u16 {
        self.q
    }

    pub fn bits(self) -> f64 {
        (self.q as f64).log2()
    }

    #[inline]
    pub fn add(self, a: u16, b: u16) -> u16 {
        ((a as u32 + b as u32) % self.q as u32) as u16
    }

    #[inline]
    pub fn sub(self, a: u16, b: u16) -> u16 {
        ((a as u32 + self.q as u32 - b as u32) % self.q as u32) as u16
    }

    #[inline]
    pub fn mul(self, a: u16, b: u16) -> u16 {
        ((a as u32 * b as u32) % self.q as u32) as u16
    }

    pub fn neg(self, a: u16) -> u16 {
        self.sub(0, a)
    }

    pub fn inv(self, a: u16) -> Result<u16> {
        if a.is_multiple_of(self.q) {
            return input("zero has no inverse");
        }
        // Fermat: a^(q-2)
        let (mut base, mut e, mut acc) = (a as u32 % self.q as u32, self.q as u32 - 2, 1u32);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % self.q as u32;
            }
            base = base * base % self.q as u32;
            e >>= 1;
        }
        Ok(acc as u16)
    }

    pub fn add_vec(self, a: &[u16], b: &[u16]) -> Vec<u16> {
        a.iter().zip(b).map(|(&x, &y)| self.add(x, y)).collect()
    }

    pub fn sub_vec(self, a: &[u16], b: &[u16]) -> Vec<u16> {
        a.iter().zip(b).map(|(&x, &y)| self.sub(x, y)).collect()
    }

    /// Number of vectors of length `len`, if it fits the enumeration budget.
    pub fn space_size(self, len: usize) -> Result<u64> {
        if len as f64 * self.bits() > ENUMERATION_BITS + 1e-9 {
            return resource(format!(
                "space GF({})^{len} has {:.1} bits, above the {ENUMERATION_BITS} bit budget",
                self.q,
                len as f64 * self.bits()
            ));
        }
        Ok((self.q as u64).pow(len as u32))
    }

    /// Mixed-radix index of a vector, first coordinate most significant.
    pub fn index_of(self, v: &[u16]) -> u64 {
        v.iter().fold(0u64, |acc, &x| acc * self.q as u64 + x as u64)
    }

    /// Inverse of [`Field::index_of`].
    pub fn vector_at(self, mut idx: u64, len: usize) -> Vec<u16> {
        let mut v = vec![0u16; len];
        for slot in v.iter_mut().rev() {
            *slot = (idx % self.q as u64) as u16;
            idx /= self.q as u64;
        }
        v
    }

    /// Every vector of length `len` in index order. Guarded.
    pub fn all_vectors(self, len: usize) -> Result<impl Iterator<Item = Vec<u16>>> {
        let total = self.space_size(len)?;
        Ok((0..total).map(move |i| self.vector_at(i, len)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StorageKind {
    Dense,
    Sparse,
}

/// A `rows x cols` matrix over GF(q), applied to column vectors.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinearMap {
    field: Field,
    rows: usize,
    cols: usize,
    /// row-major
    data: Vec<u16>,
    kind: StorageKind,
}

impl LinearMap {
    pub fn from_rows(field: Field, rows: Vec<Vec<u16>>, cols: usize, kind: StorageKind) -> Result<Self> {
        let m = rows.len();
        let mut data = Vec::with_capacity(m * cols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return input(format!("row {r} has {} entries, expected {cols}", row.len()));
            }
            data.extend_from_slice(row);
        }
        Self::from_data(field, m, cols, data, kind)
    }

    pub fn from_data(field: Field, rows: usize, cols: usize, data: Vec<u16>, kind: StorageKind) -> Result<Self> {
        if data.len() != rows * cols {
            return input(format!("{} entries for a {rows}x{cols} matrix", data.len()));
        }
        if let Some(x) = data.iter().find(|&&x| x >= field.order()) {
            return input(format!("entry {x} outside GF({})", field.order()));
        }
        Ok(LinearMap { field, rows, cols, data, kind })
    }

    pub fn zero(field: Field, rows: usize, cols: usize) -> Self {
        LinearMap { field, rows, cols, data: vec![0; rows * cols], kind: StorageKind::Dense }
    }

    pub fn identity(field: Field, n: usize) -> Self {
        let mut m = Self::zero(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn kind(&self) -> StorageKind {
        self.kind
    }

    pub fn entry(&self, r: usize, c: usize) -> u16 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[u16] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Nonzero `(row, value)` pairs of column `c`.
    pub fn column_support(&self, c: usize) -> Vec<(usize, u16)> {
        (0..self.rows)
            .filter_map(|r| {
                let v = self.entry(r, c);
                (v != 0).then_some((r, v))
            })
            .collect()
    }

    pub fn apply(&self, v: &[u16]) -> Result<Vec<u16>> {
        if v.len() != self.cols {
            return input(format!("vector of length {} applied to a map with {} columns", v.len(), self.cols));
        }
        Ok(self.apply_unchecked(v))
    }

    pub(crate) fn apply_unchecked(&self, v: &[u16]) -> Vec<u16> {
        let q = self.field.order() as u32;
        (0..self.rows)
            .map(|r| {
                let acc = self
                    .row(r)
                    .iter()
                    .zip(v)
                    .fold(0u32, |acc, (&a, &x)| (acc + a as u32 * x as u32) % q);
                acc as u16
            })
            .collect()
    }

    /// True when `self * v == 0`.
    pub(crate) fn annihilates(&self, v: &[u16]) -> bool {
        let q = self.field.order() as u32;
        (0..self.rows).all(|r| {
            self.row(r).iter().zip(v).fold(0u32, |acc, (&a, &x)| (acc + a as u32 * x as u32) % q) == 0
        })
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn stack(&self, other: &LinearMap) -> Result<LinearMap> {
        if self.cols != other.cols || self.field != other.field {
            return input("stacked maps need the same field and column count");
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        let kind = if self.kind == other.kind { self.kind } else { StorageKind::Dense };
        Ok(LinearMap { field: self.field, rows: self.rows + other.rows, cols: self.cols, data, kind })
    }

    pub fn rank(&self) -> usize {
        let rows: Vec<Vec<u16>> = (0..self.rows).map(|r| self.row(r).to_vec()).collect();
        row_reduce(self.field, rows, self.cols).pivots.len()
    }

    /// Solution set of `self * z = c`, or `None` when `c` is outside the image.
    pub fn coset(&self, c: &[u16]) -> Result<Option<AffineCoset>> {
        if c.len() != self.rows {
            return input(format!("coset value of length {} for a map with {} rows", c.len(), self.rows));
        }
        if let Some(x) = c.iter().find(|&&x| x >= self.field.order()) {
            return input(format!("coset value entry {x} outside GF({})", self.field.order()));
        }
        let f = self.field;
        let n = self.cols;
        let aug: Vec<Vec<u16>> = (0..self.rows)
            .map(|r| {
                let mut row = self.row(r).to_vec();
                row.push(c[r]);
                row
            })
            .collect();
        let red = row_reduce(f, aug, n);
        // a pivot-free row with nonzero right-hand side is a contradiction
        for row in red.rows.iter().skip(red.pivots.len()) {
            if row[n] != 0 {
                return Ok(None);
            }
        }
        let mut offset = vec![0u16; n];
        for (r, &p) in red.pivots.iter().enumerate() {
            offset[p] = red.rows[r][n];
        }
        let free: Vec<usize> = (0..n).filter(|c| !red.pivots.contains(c)).collect();
        let basis = free
            .iter()
            .map(|&fc| {
                let mut v = vec![0u16; n];
                v[fc] = 1;
                for (r, &p) in red.pivots.iter().enumerate() {
                    v[p] = f.neg(red.rows[r][fc]);
                }
                v
            })
            .collect();
        Ok(Some(AffineCoset { field: f, offset, basis, lead: free }))
    }

    /// Every `z` with `self * z = c`. Guarded on the coset size.
    pub fn coset_members(&self, c: &[u16]) -> Result<Box<dyn Iterator<Item = Vec<u16>>>> {
        match self.coset(c)? {
            None => Ok(Box::new(std::iter::empty())),
            Some(cs) => {
                cs.checked_size(ENUMERATION_BITS)?;
                Ok(Box::new(cs.into_iter()))
            }
        }
    }

    /// All vectors `f(z)`, as mixed-radix indices. Guarded on `q^rank`.
    pub fn image_indices(&self) -> Result<Vec<u64>> {
        let f = self.field;
        f.space_size(self.rows)?;
        let cols: Vec<Vec<u16>> = (0..self.cols).map(|c| (0..self.rows).map(|r| self.entry(r, c)).collect()).collect();
        let red = row_reduce(f, cols, self.rows);
        let basis: Vec<Vec<u16>> = red.rows.into_iter().take(red.pivots.len()).collect();
        let span = AffineCoset { field: f, offset: vec![0; self.rows], basis, lead: red.pivots };
        span.checked_size(ENUMERATION_BITS)?;
        Ok(span.into_iter().map(|v| f.index_of(&v)).collect())
    }
}

struct Reduced {
    rows: Vec<Vec<u16>>,
    pivots: Vec<usize>,
}

/// Reduced row echelon form over the first `width` columns; extra trailing
/// columns (an augmented right-hand side) are carried along.
fn row_reduce(f: Field, mut rows: Vec<Vec<u16>>, width: usize) -> Reduced {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..width {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| rows[i][c] != 0) else {
            continue;
        };
        rows.swap(r, p);
        let inv = f.inv(rows[r][c]).expect("nonzero pivot");
        for x in rows[r].iter_mut() {
            *x = f.mul(*x, inv);
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row[c] != 0 {
                let factor = row[c];
                for (x, &pv) in row.iter_mut().zip(&pivot_row) {
                    *x = f.sub(*x, f.mul(factor, pv));
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    Reduced { rows, pivots }
}

/// `offset + span(basis)`, enumerated in coefficient order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineCoset {
    field: Field,
    offset: Vec<u16>,
    basis: Vec<Vec<u16>>,
    /// coordinate where basis vector `i` is 1 and every other basis vector is 0
    lead: Vec<usize>,
}

impl AffineCoset {
    pub fn offset(&self) -> &[u16] {
        &self.offset
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn size_bits(&self) -> f64 {
        self.basis.len() as f64 * self.field.bits()
    }

    /// Number of members if it stays within `bits`.
    pub fn checked_size(&self, bits: f64) -> Result<u64> {
        if self.size_bits() > bits + 1e-9 {
            return resource(format!(
                "coset of dimension {} over GF({}) exceeds the {bits} bit budget",
                self.basis.len(),
                self.field.order()
            ));
        }
        Ok((self.field.order() as u64).pow(self.basis.len() as u32))
    }

    /// Member number `idx` in coefficient order.
    pub fn member(&self, idx: u64) -> Vec<u16> {
        let f = self.field;
        let coeffs = f.vector_at(idx, self.basis.len());
        let mut v = self.offset.clone();
        for (a, b) in coeffs.iter().zip(&self.basis) {
            if *a != 0 {
                for (x, &y) in v.iter_mut().zip(b) {
                    *x = f.add(*x, f.mul(*a, y));
                }
            }
        }
        v
    }

    pub fn contains(&self, v: &[u16]) -> bool {
        // the coefficients of v - offset are read off the lead coordinates
        let f = self.field;
        if v.len() != self.offset.len() {
            return false;
        }
        let mut rest = f.sub_vec(v, &self.offset);
        for (b, &lead) in self.basis.iter().zip(&self.lead) {
            let a = rest[lead];
            if a != 0 {
                for (x, &y) in rest.iter_mut().zip(b) {
                    *x = f.sub(*x, f.mul(a, y));
                }
            }
        }
        rest.iter().all(|&x| x == 0)
    }
}

impl IntoIterator for AffineCoset {
    type Item = Vec<u16>;
    type IntoIter = Box<dyn Iterator<Item = Vec<u16>>>;

    fn into_iter(self) -> Self::IntoIter {
        let total = (self.field.order() as u64).saturating_pow(self.basis.len() as u32);
        Box::new((0..total).map(move |i| self.member(i)))
    }
}

/// Codeword-side map `f` and message-side map `g` of one message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionPair {
    pub f: LinearMap,
    pub g: LinearMap,
}

impl FunctionPair {
    /// Both maps must share the field and the block length, and neither may
    /// have more rows than columns. Their combined row count may exceed `n`;
    /// the joint coset is then often empty, which the encoder reports.
    pub fn new(f: LinearMap, g: LinearMap) -> Result<Self> {
        if f.cols != g.cols || f.field != g.field {
            return input("f and g need the same field and column count");
        }
        if f.rows > f.cols || g.rows > g.cols {
            return input(format!(
                "maps must not have more rows than columns (f: {}x{}, g: {}x{})",
                f.rows, f.cols, g.rows, g.cols
            ));
        }
        Ok(FunctionPair { f, g })
    }

    pub fn block_length(&self) -> usize {
        self.f.cols
    }

    pub fn stacked(&self) -> LinearMap {
        self.f.stack(&self.g).expect("checked at construction")
    }

    /// `{z : f(z) = c, g(z) = m}` as an affine coset.
    pub fn joint_coset(&self, c: &[u16], m: &[u16]) -> Result<Option<AffineCoset>> {
        if m.len() != self.g.rows {
            return input(format!("message of length {} for g with {} rows", m.len(), self.g.rows));
        }
        let mut cm = c.to_vec();
        cm.extend_from_slice(m);
        if c.len() != self.f.rows {
            return input(format!("coset value of length {} for f with {} rows", c.len(), self.f.rows));
        }
        self.stacked().coset(&cm)
    }

    pub fn joint_coset_members(&self, c: &[u16], m: &[u16]) -> Result<Box<dyn Iterator<Item = Vec<u16>>>> {
        match self.joint_coset(c, m)? {
            None => Ok(Box::new(std::iter::empty())),
            Some(cs) => {
                cs.checked_size(ENUMERATION_BITS)?;
                Ok(Box::new(cs.into_iter()))
            }
        }
    }
}

impl fmt::Display for LinearMap {
    /// A header line `gf-matrix q=.. rows=.. cols=.. kind=..`, then either one
    /// line per row (dense) or one `row col value` triplet per nonzero (sparse).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            StorageKind::Dense => {
                writeln!(f, "gf-matrix q={} rows={} cols={} kind=dense", self.field.order(), self.rows, self.cols)?;
                for r in 0..self.rows {
                    let row: Vec<String> = self.row(r).iter().map(|x| x.to_string()).collect();
                    writeln!(f, "{}", row.join(" "))?;
                }
            }
            StorageKind::Sparse => {
                let nnz = self.data.iter().filter(|&&x| x != 0).count();
                writeln!(
                    f,
                    "gf-matrix q={} rows={} cols={} kind=sparse nnz={nnz}",
                    self.field.order(),
                    self.rows,
                    self.cols
                )?;
                for c in 0..self.cols {
                    for (r, v) in self.column_support(c) {
                        writeln!(f, "{r} {c} {v}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl FromStr for LinearMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Input("empty matrix text".into()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("gf-matrix") {
            return input("matrix text must start with 'gf-matrix'");
        }
        let (mut q, mut rows, mut cols, mut kind, mut nnz) = (None, None, None, None, None);
        for p in parts {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Error::Input(format!("malformed header field '{p}'")))?;
            let num = || v.parse::<usize>().map_err(|_| Error::Input(format!("bad number in '{p}'")));
            match k {
                "q" => q = Some(num()?),
                "rows" => rows = Some(num()?),
                "cols" => cols = Some(num()?),
                "nnz" => nnz = Some(num()?),
                "kind" => {
                    kind = Some(match v {
                        "dense" => StorageKind::Dense,
                        "sparse" => StorageKind::Sparse,
                        _ => return input(format!("unknown storage kind '{v}'")),
                    })
                }
                _ => return input(format!("unknown header field '{k}'")),
            }
        }
        let missing = |n: &str| Error::Input(format!("header lacks '{n}'"));
        let q = q.ok_or_else(|| missing("q"))?;
        let rows = rows.ok_or_else(|| missing("rows"))?;
        let cols = cols.ok_or_else(|| missing("cols"))?;
        let kind = kind.ok_or_else(|| missing("kind"))?;
        let field = Field::new(u16::try_from(q).map_err(|_| Error::Input(format!("field order {q} too large")))?)?;
        let parse_entry = |t: &str| t.parse::<u16>().map_err(|_| Error::Input(format!("bad entry '{t}'")));
        match kind {
            StorageKind::Dense => {
                let mut data = Vec::with_capacity(rows * cols);
                for line in lines {
                    for t in line.split_whitespace() {
                        data.push(parse_entry(t)?);
                    }
                }
                LinearMap::from_data(field, rows, cols, data, kind)
            }
            StorageKind::Sparse => {
                let mut data = vec![0u16; rows * cols];
                let mut count = 0;
                for line in lines {
                    let t: Vec<&str> = line.split_whitespace().collect();
                    if t.len() != 3 {
                        return input(format!("sparse line '{line}' is not a triplet"));
                    }
                    let r: usize = t[0].parse().map_err(|_| Error::Input(format!("bad row '{}'", t[0])))?;
                    let c: usize = t[1].parse().map_err(|_| Error::Input(format!("bad column '{}'", t[1])))?;
                    if r >= rows || c >= cols {
                        return input(format!("triplet ({r},{c}) outside {rows}x{cols}"));
                    }
                    data[r * cols + c] = parse_entry(t[2])?;
                    count += 1;
                }
                if let Some(n) = nnz {
                    if n != count {
                        return input(format!("header says nnz={n} but {count} triplets follow"));
                    }
                }
                LinearMap::from_data(field, rows, cols, data, kind)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf2() -> Field {
        Field::binary()
    }

    #[test]
    fn field_checks() {
        assert!(Field::new(4).is_err());
        assert!(Field::new(263).is_err());
        let f = Field::new(257).unwrap();
        for a in 1..257 {
            assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
        }
    }

    #[test]
    fn apply_examples() {
        let f = LinearMap::from_rows(gf2(), vec![vec![1, 1]], 2, StorageKind::Dense).unwrap();
        assert_eq!(f.apply(&[1, 1]).unwrap(), vec![0]);
        let g3 = Field::new(3).unwrap();
        let m = LinearMap::from_rows(g3, vec![vec![2]], 1, StorageKind::Dense).unwrap();
        assert_eq!(m.apply(&[2]).unwrap(), vec![1]);
        let id = LinearMap::identity(g3, 3);
        assert_eq!(id.apply(&[2, 0, 1]).unwrap(), vec![2, 0, 1]);
        assert!(id.apply(&[1]).is_err());
    }

    #[test]
    fn coset_examples() {
        let f = LinearMap::from_rows(gf2(), vec![vec![1, 1]], 2, StorageKind::Dense).unwrap();
        let mut got: Vec<_> = f.coset_members(&[0]).unwrap().collect();
        got.sort();
        assert_eq!(got, vec![vec![0, 0], vec![1, 1]]);
        let zero = LinearMap::zero(gf2(), 1, 2);
        assert_eq!(zero.coset_members(&[1]).unwrap().count(), 0);
        let empty = LinearMap::zero(gf2(), 0, 3);
        assert_eq!(empty.coset_members(&[]).unwrap().count(), 8);
    }

    #[test]
    fn joint_coset_examples() {
        let f = LinearMap::from_rows(gf2(), vec![vec![1, 1]], 2, StorageKind::Dense).unwrap();
        let g = LinearMap::from_rows(gf2(), vec![vec![1, 0]], 2, StorageKind::Dense).unwrap();
        let pair = FunctionPair::new(f.clone(), g).unwrap();
        let got: Vec<_> = pair.joint_coset_members(&[0], &[1]).unwrap().collect();
        assert_eq!(got, vec![vec![1, 1]]);
        let clash = FunctionPair::new(f.clone(), f.clone()).unwrap();
        assert_eq!(clash.joint_coset_members(&[0], &[1]).unwrap().count(), 0);
        let no_g = FunctionPair::new(f.clone(), LinearMap::zero(gf2(), 0, 2)).unwrap();
        let a: Vec<_> = no_g.joint_coset_members(&[1], &[]).unwrap().collect();
        let b: Vec<_> = f.coset_members(&[1]).unwrap().collect();
        assert_eq!(a, b);
    }

    #[test]
    fn coset_membership_test_matches_enumeration() {
        let g3 = Field::new(3).unwrap();
        let f = LinearMap::from_rows(g3, vec![vec![1, 2, 0], vec![0, 1, 1]], 3, StorageKind::Dense).unwrap();
        let cs = f.coset(&[2, 1]).unwrap().unwrap();
        for v in g3.all_vectors(3).unwrap() {
            assert_eq!(cs.contains(&v), f.apply(&v).unwrap() == vec![2, 1]);
        }
    }

    #[test]
    fn coset_guard() {
        let empty = LinearMap::zero(gf2(), 0, 40);
        assert!(matches!(empty.coset_members(&[]), Err(Error::Resource(_))));
        // a large map with a small coset stays enumerable
        let id = LinearMap::identity(gf2(), 40);
        assert_eq!(id.coset_members(&[1; 40]).unwrap().count(), 1);
    }

    #[test]
    fn text_round_trip() {
        let g5 = Field::new(5).unwrap();
        let m = LinearMap::from_rows(g5, vec![vec![1, 0, 4], vec![0, 3, 0]], 3, StorageKind::Dense).unwrap();
        assert_eq!(m.to_string().parse::<LinearMap>().unwrap(), m);
        let s = LinearMap::from_rows(g5, vec![vec![1, 0, 4], vec![0, 3, 0]], 3, StorageKind::Sparse).unwrap();
        let text = s.to_string();
        assert!(text.starts_with("gf-matrix q=5 rows=2 cols=3 kind=sparse nnz=3"));
        assert_eq!(text.parse::<LinearMap>().unwrap(), s);
        assert!("gf-matrix q=2 rows=1 cols=2 kind=dense\n1 2".parse::<LinearMap>().is_err());
        assert!("matrix".parse::<LinearMap>().is_err());
    }

    #[test]
    fn pair_dimension_rules() {
        let f = LinearMap::zero(gf2(), 3, 2);
        let g = LinearMap::zero(gf2(), 1, 2);
        assert!(FunctionPair::new(f, g.clone()).is_err());
        let wide = LinearMap::zero(gf2(), 2, 2);
        assert!(FunctionPair::new(wide, g).is_ok());
    }
}
