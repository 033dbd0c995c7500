//! Boolean functions as truth tables, and the structural operations the
//! analyses need: relevance, projection, antisymmetrization.
//!
//! Assignments are encoded as integers: bit `i` of the index is the value of
//! variable `v{i+1}`. Variable indices in this API are zero-based; `v1` is
//! index 0.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_VARS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Assignment {
    num_vars: u8,
    bits: u32,
}

impl Assignment {
    pub fn new(num_vars: usize, bits: u32) -> Result<Self> {
        check_num_vars(num_vars)?;
        if (bits as u64) >> num_vars != 0 {
            return Err(Error::invalid(format!("assignment bits {bits:#b} exceed {num_vars} variables")));
        }
        Ok(Self { num_vars: num_vars as u8, bits })
    }

    pub fn from_values(values: &[bool]) -> Result<Self> {
        let bits = values.iter().enumerate().fold(0u32, |acc, (i, &v)| acc | ((v as u32) << i));
        Self::new(values.len(), bits)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars as usize
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn value(&self, i: usize) -> bool {
        (self.bits >> i) & 1 == 1
    }

    /// All `2^n` assignments in index order.
    pub fn all(num_vars: usize) -> impl Iterator<Item = Assignment> {
        (0..1u32 << num_vars).map(move |bits| Assignment { num_vars: num_vars as u8, bits })
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.num_vars() {
            f.write_str(if self.value(i) { "T" } else { "F" })?;
        }
        Ok(())
    }
}

fn check_num_vars(n: usize) -> Result<()> {
    if n > MAX_VARS {
        return Err(Error::TooManyVars { got: n, limit: MAX_VARS });
    }
    Ok(())
}

fn words_for(n: usize) -> usize {
    (1usize << n).div_ceil(64)
}

/// A Boolean function of `n` variables as a `2^n`-bit table.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TruthTable {
    num_vars: u8,
    words: Vec<u64>,
}

impl TruthTable {
    pub fn from_fn(num_vars: usize, f: impl Fn(u32) -> bool) -> Result<Self> {
        check_num_vars(num_vars)?;
        let mut words = vec![0u64; words_for(num_vars)];
        for a in 0..1u32 << num_vars {
            if f(a) {
                words[(a / 64) as usize] |= 1 << (a % 64);
            }
        }
        Ok(Self { num_vars: num_vars as u8, words })
    }

    /// Tables with `n <= 6` fit in one word; bit `a` is the value at assignment `a`.
    pub fn from_u64(num_vars: usize, bits: u64) -> Result<Self> {
        check_num_vars(num_vars)?;
        if num_vars > 6 {
            return Err(Error::invalid("from_u64 needs at most 6 variables"));
        }
        let size = 1u32 << num_vars;
        if size < 64 && bits >> size != 0 {
            return Err(Error::invalid(format!("table bits {bits:#x} exceed 2^{num_vars} entries")));
        }
        Ok(Self { num_vars: num_vars as u8, words: vec![bits] })
    }

    pub fn from_words(num_vars: usize, mut words: Vec<u64>) -> Result<Self> {
        check_num_vars(num_vars)?;
        if words.len() != words_for(num_vars) {
            return Err(Error::invalid("word count does not match variable count"));
        }
        let size = 1usize << num_vars;
        if size < 64 && words[0] >> size != 0 {
            return Err(Error::invalid("table bits exceed 2^n entries"));
        }
        words.shrink_to_fit();
        Ok(Self { num_vars: num_vars as u8, words })
    }

    pub fn constant(num_vars: usize, value: bool) -> Result<Self> {
        Self::from_fn(num_vars, |_| value)
    }

    pub fn var(num_vars: usize, i: usize) -> Result<Self> {
        check_index(num_vars, i)?;
        Self::from_fn(num_vars, |a| (a >> i) & 1 == 1)
    }

    /// `v1 ⊕ … ⊕ vn`.
    pub fn xor_all(num_vars: usize) -> Result<Self> {
        Self::from_fn(num_vars, |a| a.count_ones() % 2 == 1)
    }

    /// Parses a formula in the `v1 & (v2 | !v3)` syntax over `num_vars` variables.
    pub fn parse(text: &str, num_vars: usize) -> Result<Self> {
        lower(&parse_formula(text)?, num_vars)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars as usize
    }

    pub fn size(&self) -> u32 {
        1 << self.num_vars
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// The table as one word; `None` when `n > 6`.
    pub fn as_u64(&self) -> Option<u64> {
        (self.num_vars <= 6).then(|| self.words[0])
    }

    #[inline]
    pub fn get(&self, a: u32) -> bool {
        (self.words[(a / 64) as usize] >> (a % 64)) & 1 == 1
    }

    pub fn eval(&self, a: &Assignment) -> Result<bool> {
        if a.num_vars() != self.num_vars() {
            return Err(Error::DimensionMismatch { expected: self.num_vars(), got: a.num_vars() });
        }
        Ok(self.get(a.bits()))
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_constant(&self) -> bool {
        let ones = self.count_ones();
        ones == 0 || ones == self.size() as u64
    }

    fn map(&self, f: impl Fn(u32) -> bool) -> Self {
        Self::from_fn(self.num_vars(), f).expect("num_vars already validated")
    }

    pub fn complement(&self) -> Self {
        self.map(|a| !self.get(a))
    }

    fn zip(&self, other: &Self, op: impl Fn(bool, bool) -> bool) -> Result<Self> {
        if self.num_vars != other.num_vars {
            return Err(Error::DimensionMismatch { expected: self.num_vars(), got: other.num_vars() });
        }
        Ok(self.map(|a| op(self.get(a), other.get(a))))
    }

    pub fn and(&self, other: &Self) -> Result<Self> {
        self.zip(other, |x, y| x & y)
    }

    pub fn or(&self, other: &Self) -> Result<Self> {
        self.zip(other, |x, y| x | y)
    }

    pub fn xor(&self, other: &Self) -> Result<Self> {
        self.zip(other, |x, y| x ^ y)
    }

    /// Number of assignments `A` with `φ(A[v_i↦T]) ≠ φ(A[v_i↦F])`, counted
    /// over all `2^n` assignments (each flip pair contributes twice).
    pub fn relevance_count(&self, i: usize) -> Result<u64> {
        check_index(self.num_vars(), i)?;
        let bit = 1u32 << i;
        Ok((0..self.size()).filter(|&a| self.get(a) != self.get(a ^ bit)).count() as u64)
    }

    pub fn relevance_counts(&self) -> Vec<u64> {
        (0..self.num_vars()).map(|i| self.relevance_count(i).expect("index in range")).collect()
    }

    /// `v_i ≤_φ v_j`: `v_i` is at most as relevant as `v_j`.
    pub fn relevance_leq(&self, i: usize, j: usize) -> Result<bool> {
        Ok(self.relevance_count(i)? <= self.relevance_count(j)?)
    }

    /// `φ[v_i ↦ b]`, still over the same `n` variables.
    pub fn project(&self, i: usize, value: bool) -> Result<Self> {
        check_index(self.num_vars(), i)?;
        let bit = 1u32 << i;
        Ok(self.map(|a| self.get(if value { a | bit } else { a & !bit })))
    }

    /// True iff flipping `v_i` always flips `φ`.
    pub fn antisymmetric_in(&self, i: usize) -> Result<bool> {
        check_index(self.num_vars(), i)?;
        let bit = 1u32 << i;
        Ok((0..self.size()).all(|a| self.get(a) != self.get(a ^ bit)))
    }

    /// `φ_v = (v ∧ φ[v↦T]) ∨ (¬v ∧ ¬φ[v↦T])`.
    pub fn antisymmetrize(&self, i: usize) -> Result<Self> {
        check_index(self.num_vars(), i)?;
        let bit = 1u32 << i;
        Ok(self.map(|a| {
            let high = self.get(a | bit);
            if a & bit != 0 {
                high
            } else {
                !high
            }
        }))
    }

    /// Number of variables `φ` is not antisymmetric in.
    pub fn v_count(&self) -> usize {
        (0..self.num_vars()).filter(|&i| !self.antisymmetric_in(i).expect("index in range")).count()
    }

    pub fn is_xor_or_negation(&self) -> bool {
        self.v_count() == 0
    }

    /// Renames variables: variable `i` of `self` becomes variable `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let n = self.num_vars();
        if perm.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: perm.len() });
        }
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::invalid("not a permutation"));
            }
        }
        Ok(self.map(|b| {
            let a = (0..n).fold(0u32, |acc, i| acc | (((b >> perm[i]) & 1) << i));
            self.get(a)
        }))
    }

    /// `ψ(A) = φ(A with v_i flipped)`.
    pub fn negate_input(&self, i: usize) -> Result<Self> {
        check_index(self.num_vars(), i)?;
        Ok(self.map(|a| self.get(a ^ (1 << i))))
    }

    /// Hex rendering, most significant word first, no prefix.
    pub fn to_hex(&self) -> String {
        let digits = (self.size() as usize).div_ceil(4);
        let mut s = String::new();
        for w in self.words.iter().rev() {
            s.push_str(&format!("{w:016x}"));
        }
        s[s.len() - digits..].to_string()
    }

    pub fn from_hex(num_vars: usize, hex: &str) -> Result<Self> {
        check_num_vars(num_vars)?;
        let hex = hex.trim().trim_start_matches("0x");
        let bad = || Error::invalid(format!("bad table literal {hex:?}"));
        if hex.is_empty() || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(bad());
        }
        let mut words = vec![0u64; words_for(num_vars)];
        for (k, ch) in hex.bytes().rev().enumerate() {
            let v = (ch as char).to_digit(16).expect("checked") as u64;
            if v == 0 {
                continue;
            }
            let w = k / 16;
            if w >= words.len() {
                return Err(bad());
            }
            words[w] |= v << ((k % 16) * 4);
        }
        Self::from_words(num_vars, words)
    }
}

impl fmt::Debug for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruthTable(n={}, 0x{})", self.num_vars, self.to_hex())
    }
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", self.to_hex())
    }
}

fn check_index(n: usize, i: usize) -> Result<()> {
    if i >= n {
        return Err(Error::VarOutOfRange { index: i, num_vars: n });
    }
    Ok(())
}

/// Every table over `n` variables, in increasing bit order. Limited to `n <= 5`.
pub fn enumerate_truth_tables(num_vars: usize) -> Result<impl Iterator<Item = TruthTable>> {
    if num_vars > 5 {
        return Err(Error::TooManyVars { got: num_vars, limit: 5 });
    }
    let count = 1u64 << (1u64 << num_vars);
    Ok((0..count).map(move |bits| TruthTable::from_u64(num_vars, bits).expect("bits in range")))
}

/// Orbits of single-word tables (`n <= 5`) under permuting variables,
/// negating inputs and complementing the output. Returns `(representative, orbit size)`
/// with the smallest table value as representative, in increasing order.
pub fn npn_orbits(num_vars: usize) -> Result<Vec<(u64, u64)>> {
    if num_vars > 4 {
        return Err(Error::TooManyVars { got: num_vars, limit: 4 });
    }
    let size = 1u32 << num_vars;
    let total = 1usize << size;
    let maps = npn_index_maps(num_vars);
    let mask = if size == 64 { u64::MAX } else { (1u64 << size) - 1 };
    let mut seen = vec![false; total];
    let mut orbits = Vec::new();
    for rep in 0..total as u64 {
        if seen[rep as usize] {
            continue;
        }
        let mut count = 0u64;
        for map in &maps {
            let t = apply_index_map(rep, map);
            for u in [t, !t & mask] {
                if !seen[u as usize] {
                    seen[u as usize] = true;
                    count += 1;
                }
            }
        }
        orbits.push((rep, count));
    }
    Ok(orbits)
}

/// For every (permutation, input negation mask), the map `b ↦ a` with `ψ(b) = φ(a)`.
fn npn_index_maps(n: usize) -> Vec<Vec<u32>> {
    let mut perms = Vec::new();
    permutations(&mut (0..n).collect::<Vec<_>>(), 0, &mut perms);
    let mut maps = Vec::new();
    for perm in &perms {
        for neg in 0..1u32 << n {
            let map =
                (0..1u32 << n).map(|b| (0..n).fold(0u32, |acc, i| acc | (((b >> perm[i]) & 1) << i)) ^ neg).collect();
            maps.push(map);
        }
    }
    maps
}

fn apply_index_map(bits: u64, map: &[u32]) -> u64 {
    map.iter().enumerate().fold(0u64, |acc, (b, &a)| acc | (((bits >> a) & 1) << b))
}

fn permutations(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

// ---------------------------------------------------------------------------
// Formula syntax
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FormulaAst {
    /// Zero-based variable index.
    Var(usize),
    Const(bool),
    Not(Box<FormulaAst>),
    And(Box<FormulaAst>, Box<FormulaAst>),
    Xor(Box<FormulaAst>, Box<FormulaAst>),
    Or(Box<FormulaAst>, Box<FormulaAst>),
}

impl FormulaAst {
    fn eval(&self, a: u32) -> bool {
        match self {
            FormulaAst::Var(i) => (a >> i) & 1 == 1,
            FormulaAst::Const(b) => *b,
            FormulaAst::Not(x) => !x.eval(a),
            FormulaAst::And(x, y) => x.eval(a) && y.eval(a),
            FormulaAst::Xor(x, y) => x.eval(a) ^ y.eval(a),
            FormulaAst::Or(x, y) => x.eval(a) || y.eval(a),
        }
    }

    /// Largest zero-based variable index mentioned, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            FormulaAst::Var(i) => Some(*i),
            FormulaAst::Const(_) => None,
            FormulaAst::Not(x) => x.max_var(),
            FormulaAst::And(x, y) | FormulaAst::Xor(x, y) | FormulaAst::Or(x, y) => x.max_var().max(y.max_var()),
        }
    }
}

/// Lowers a parse tree to its truth table over `num_vars` variables.
pub fn lower(ast: &FormulaAst, num_vars: usize) -> Result<TruthTable> {
    check_num_vars(num_vars)?;
    if let Some(i) = ast.max_var() {
        if i >= num_vars {
            return Err(Error::VarOutOfRange { index: i, num_vars });
        }
    }
    TruthTable::from_fn(num_vars, |a| ast.eval(a))
}

/// Grammar, loosest to tightest: `|`, `^`, `&`, `!`; binary operators are
/// left-associative. Atoms are `vK` (K ≥ 1), `T`, `F` and parenthesized formulas.
pub fn parse_formula(text: &str) -> Result<FormulaAst> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let ast = p.or()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(ast)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn or(&mut self) -> Result<FormulaAst> {
        let mut lhs = self.xor()?;
        while self.eat(b'|') {
            lhs = FormulaAst::Or(Box::new(lhs), Box::new(self.xor()?));
        }
        Ok(lhs)
    }

    fn xor(&mut self) -> Result<FormulaAst> {
        let mut lhs = self.and()?;
        while self.eat(b'^') {
            lhs = FormulaAst::Xor(Box::new(lhs), Box::new(self.and()?));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<FormulaAst> {
        let mut lhs = self.unary()?;
        while self.eat(b'&') {
            lhs = FormulaAst::And(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<FormulaAst> {
        if self.eat(b'!') {
            return Ok(FormulaAst::Not(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<FormulaAst> {
        self.skip_ws();
        match self.src.get(self.pos) {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.or()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(inner)
            }
            Some(b'T') => {
                self.pos += 1;
                Ok(FormulaAst::Const(true))
            }
            Some(b'F') => {
                self.pos += 1;
                Ok(FormulaAst::Const(false))
            }
            Some(b'v') => {
                let start = self.pos;
                self.pos += 1;
                let digits_start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let digits = std::str::from_utf8(&self.src[digits_start..self.pos]).unwrap_or("");
                match digits.parse::<usize>() {
                    Ok(k) if k >= 1 => Ok(FormulaAst::Var(k - 1)),
                    _ => {
                        self.pos = start;
                        Err(self.err("expected variable index after 'v' (v1, v2, ...)"))
                    }
                }
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }
}
