//! Edit-distance metrics, `**kern` error rates, SMILES syntax validation and
//! exact-match accuracies.

use thiserror::Error;

use super::order_independent_mean;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeqError {
    #[error("{preds} predictions for {refs} references")]
    LengthMismatch { preds: usize, refs: usize },
    #[error("reference {index} has an empty {view} view")]
    EmptyReference { index: usize, view: &'static str },
    #[error("no examples to score")]
    EmptyInput,
}

/// Levenshtein distance with unit insert, delete and substitute costs.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Character edit distance divided by the longer string's length; 0 for two
/// empty strings.
pub fn normalized_edit_distance(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 0.0;
    }
    edit_distance(&a, &b) as f64 / longest as f64
}

/// A `**kern` transcription and its three tokenizations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernDocument {
    raw: String,
}

impl KernDocument {
    pub fn new(raw: impl Into<String>) -> Self {
        Self { raw: raw.into() }
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    /// Every character, including tabs and newlines.
    pub fn chars(&self) -> Vec<char> {
        self.raw.chars().collect()
    }

    /// Maximal non-whitespace runs; tabs separate spines.
    pub fn symbols(&self) -> Vec<&str> {
        self.raw.split_whitespace().collect()
    }

    pub fn lines(&self) -> Vec<&str> {
        self.raw.lines().collect()
    }
}

/// How per-example distances combine into a rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateMode {
    /// Mean over examples of `distance / reference length`.
    #[default]
    PerExample,
    /// `sum(distance) / sum(reference length)` over the corpus.
    Pooled,
}

/// Character, symbol and line error rates in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRates {
    pub cer: f64,
    pub ser: f64,
    pub ler: f64,
}

/// Distances and reference lengths of one example at the three granularities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct KernDistances {
    pub char_dist: usize,
    pub char_len: usize,
    pub symbol_dist: usize,
    pub symbol_len: usize,
    pub line_dist: usize,
    pub line_len: usize,
}

pub fn kern_distances(pred: &KernDocument, gt: &KernDocument, index: usize) -> Result<KernDistances, SeqError> {
    let (gc, gs, gl) = (gt.chars(), gt.symbols(), gt.lines());
    for (len, view) in [(gc.len(), "character"), (gs.len(), "symbol"), (gl.len(), "line")] {
        if len == 0 {
            return Err(SeqError::EmptyReference { index, view });
        }
    }
    Ok(KernDistances {
        char_dist: edit_distance(&pred.chars(), &gc),
        char_len: gc.len(),
        symbol_dist: edit_distance(&pred.symbols(), &gs),
        symbol_len: gs.len(),
        line_dist: edit_distance(&pred.lines(), &gl),
        line_len: gl.len(),
    })
}

/// Reduces per-example distances to percentages.
pub fn error_rates(examples: &[KernDistances], mode: RateMode) -> Result<ErrorRates, SeqError> {
    if examples.is_empty() {
        return Err(SeqError::EmptyInput);
    }
    let rate = |dist: fn(&KernDistances) -> (usize, usize)| -> f64 {
        match mode {
            RateMode::PerExample => {
                let ratios = examples.iter().map(|e| {
                    let (d, n) = dist(e);
                    d as f64 / n as f64
                });
                100.0 * order_independent_mean(ratios.collect())
            }
            RateMode::Pooled => {
                let (d, n) = examples.iter().map(dist).fold((0, 0), |(a, b), (d, n)| (a + d, b + n));
                100.0 * d as f64 / n as f64
            }
        }
    };
    Ok(ErrorRates {
        cer: rate(|e| (e.char_dist, e.char_len)),
        ser: rate(|e| (e.symbol_dist, e.symbol_len)),
        ler: rate(|e| (e.line_dist, e.line_len)),
    })
}

pub fn cer_ser_ler(preds: &[KernDocument], gts: &[KernDocument], mode: RateMode) -> Result<ErrorRates, SeqError> {
    if preds.len() != gts.len() {
        return Err(SeqError::LengthMismatch { preds: preds.len(), refs: gts.len() });
    }
    let dists = preds
        .iter()
        .zip(gts)
        .enumerate()
        .map(|(i, (p, g))| kern_distances(p, g, i))
        .collect::<Result<Vec<_>, _>>()?;
    error_rates(&dists, mode)
}

/// Why a SMILES string was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesIssue {
    #[error("empty string")]
    Empty,
    #[error("unbalanced parenthesis at byte {0}")]
    UnbalancedParen(usize),
    #[error("empty branch at byte {0}")]
    EmptyBranch(usize),
    #[error("branch or ring bond without a preceding atom at byte {0}")]
    MissingAtom(usize),
    #[error("ring bond {0} is opened but never closed")]
    UnpairedRingBond(u16),
    #[error("ring bond {0} closes on the atom that opened it")]
    SelfRingBond(u16),
    #[error("ring bond {0} has conflicting bond orders")]
    RingBondMismatch(u16),
    #[error("bond symbol at byte {0} is not followed by an atom")]
    DanglingBond(usize),
    #[error("malformed bracket atom at byte {0}")]
    BadBracketAtom(usize),
    #[error("unknown symbol {1:?} at byte {0}")]
    UnknownSymbol(usize, char),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SmilesValidity {
    Valid,
    Invalid(SmilesIssue),
}

impl SmilesValidity {
    pub fn is_valid(&self) -> bool {
        matches!(self, SmilesValidity::Valid)
    }
}

const ELEMENTS: &[&str] = &[
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K", "Ca",
    "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",
    "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce",
    "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir",
    "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm",
    "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc",
    "Lv", "Ts", "Og",
];
const AROMATIC_BRACKET: &[&str] = &["se", "as", "te", "b", "c", "n", "o", "p", "s"];

/// Checks SMILES syntax: atoms (organic subset, aromatic, bracket), bonds,
/// branches, ring closures (`1`-`9`, `%NN`) and `.` disconnections. No
/// valence or aromaticity chemistry is checked.
pub fn smiles_validate(s: &str) -> SmilesValidity {
    match check_smiles(s) {
        Ok(()) => SmilesValidity::Valid,
        Err(issue) => SmilesValidity::Invalid(issue),
    }
}

struct OpenRing {
    atom: usize,
    bond: Option<u8>,
}

fn check_smiles(s: &str) -> Result<(), SmilesIssue> {
    if s.is_empty() {
        return Err(SmilesIssue::Empty);
    }
    let b = s.as_bytes();
    let mut i = 0;
    let mut atoms = 0usize;
    // index of the atom that the next bond attaches to
    let mut has_prev_atom = false;
    let mut pending_bond: Option<(usize, u8)> = None;
    let mut after_dot: Option<usize> = None;
    // per open '(' : (byte offset, atoms seen inside)
    let mut branches: Vec<(usize, usize)> = Vec::new();
    let mut rings: std::collections::BTreeMap<u16, OpenRing> = Default::default();

    while i < b.len() {
        let c = b[i];
        match c {
            b'-' | b'=' | b'#' | b'$' | b':' | b'/' | b'\\' => {
                if pending_bond.is_some() || !has_prev_atom {
                    return Err(SmilesIssue::DanglingBond(i));
                }
                pending_bond = Some((i, c));
                i += 1;
            }
            b'.' => {
                if let Some((at, _)) = pending_bond {
                    return Err(SmilesIssue::DanglingBond(at));
                }
                if !has_prev_atom {
                    return Err(SmilesIssue::DanglingBond(i));
                }
                has_prev_atom = false;
                after_dot = Some(i);
                i += 1;
            }
            b'(' => {
                if !has_prev_atom {
                    return Err(SmilesIssue::MissingAtom(i));
                }
                if let Some((at, _)) = pending_bond {
                    return Err(SmilesIssue::DanglingBond(at));
                }
                branches.push((i, atoms));
                i += 1;
            }
            b')' => {
                let Some((open, atoms_before)) = branches.pop() else {
                    return Err(SmilesIssue::UnbalancedParen(i));
                };
                if let Some((at, _)) = pending_bond {
                    return Err(SmilesIssue::DanglingBond(at));
                }
                if atoms == atoms_before {
                    return Err(SmilesIssue::EmptyBranch(open));
                }
                has_prev_atom = true;
                i += 1;
            }
            b'0'..=b'9' | b'%' => {
                if !has_prev_atom {
                    return Err(SmilesIssue::MissingAtom(i));
                }
                let (ring, len) = if c == b'%' {
                    match (b.get(i + 1), b.get(i + 2)) {
                        (Some(d1), Some(d2)) if d1.is_ascii_digit() && d2.is_ascii_digit() => {
                            (u16::from(d1 - b'0') * 10 + u16::from(d2 - b'0'), 3)
                        }
                        _ => return Err(SmilesIssue::UnknownSymbol(i, '%')),
                    }
                } else {
                    (u16::from(c - b'0'), 1)
                };
                let bond = pending_bond.take().map(|(_, bc)| bc);
                let here = atoms - 1;
                match rings.remove(&ring) {
                    Some(open) => {
                        if open.atom == here {
                            return Err(SmilesIssue::SelfRingBond(ring));
                        }
                        if let (Some(x), Some(y)) = (open.bond, bond) {
                            if x != y {
                                return Err(SmilesIssue::RingBondMismatch(ring));
                            }
                        }
                    }
                    None => {
                        rings.insert(ring, OpenRing { atom: here, bond });
                    }
                }
                i += len;
            }
            b'[' => {
                let close = s[i..].find(']').ok_or(SmilesIssue::BadBracketAtom(i))?;
                if !bracket_atom_ok(&s[i + 1..i + close]) {
                    return Err(SmilesIssue::BadBracketAtom(i));
                }
                pending_bond = None;
                after_dot = None;
                has_prev_atom = true;
                atoms += 1;
                i += close + 1;
            }
            _ => {
                let len = organic_atom_len(&b[i..]).ok_or_else(|| {
                    SmilesIssue::UnknownSymbol(i, s[i..].chars().next().unwrap_or('?'))
                })?;
                pending_bond = None;
                after_dot = None;
                has_prev_atom = true;
                atoms += 1;
                i += len;
            }
        }
    }
    if let Some((at, _)) = pending_bond {
        return Err(SmilesIssue::DanglingBond(at));
    }
    if let Some(at) = after_dot {
        return Err(SmilesIssue::DanglingBond(at));
    }
    if let Some(&(open, _)) = branches.last() {
        return Err(SmilesIssue::UnbalancedParen(open));
    }
    if let Some((&ring, _)) = rings.iter().next() {
        return Err(SmilesIssue::UnpairedRingBond(ring));
    }
    Ok(())
}

fn organic_atom_len(b: &[u8]) -> Option<usize> {
    match b {
        [b'C', b'l', ..] | [b'B', b'r', ..] => Some(2),
        [b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I', ..] => Some(1),
        [b'b' | b'c' | b'n' | b'o' | b'p' | b's' | b'*', ..] => Some(1),
        _ => None,
    }
}

/// `isotope? symbol chiral? hcount? charge? class?`
fn bracket_atom_ok(inner: &str) -> bool {
    let mut rest = inner.trim_start_matches(|c: char| c.is_ascii_digit());
    if inner.len() - rest.len() > 3 {
        return false;
    }
    let symbol_len = if rest.starts_with('*') {
        1
    } else if let Some(a) = AROMATIC_BRACKET.iter().find(|a| rest.starts_with(**a)) {
        a.len()
    } else {
        let two = rest.get(..2).filter(|t| ELEMENTS.contains(t));
        let one = rest.get(..1).filter(|t| ELEMENTS.contains(t));
        match (two, one) {
            (Some(_), _) => 2,
            (None, Some(_)) => 1,
            _ => return false,
        }
    };
    rest = &rest[symbol_len..];

    if let Some(r) = rest.strip_prefix('@') {
        rest = r.strip_prefix('@').unwrap_or(r);
        for (class, max_digits) in [("TH", 1), ("AL", 1), ("SP", 1), ("TB", 2), ("OH", 2)] {
            if let Some(r) = rest.strip_prefix(class) {
                let digits = r.len() - r.trim_start_matches(|c: char| c.is_ascii_digit()).len();
                if digits == 0 || digits > max_digits {
                    return false;
                }
                rest = &r[digits..];
                break;
            }
        }
    }
    if let Some(r) = rest.strip_prefix('H') {
        rest = r.strip_prefix(|c: char| c.is_ascii_digit()).unwrap_or(r);
    }
    if let Some(sign) = rest.chars().next().filter(|c| *c == '+' || *c == '-') {
        let r = &rest[1..];
        let digits = r.len() - r.trim_start_matches(|c: char| c.is_ascii_digit()).len();
        rest = if digits > 0 {
            if digits > 2 {
                return false;
            }
            &r[digits..]
        } else {
            r.trim_start_matches(sign)
        };
    }
    if let Some(r) = rest.strip_prefix(':') {
        let digits = r.len() - r.trim_start_matches(|c: char| c.is_ascii_digit()).len();
        if digits == 0 {
            return false;
        }
        rest = &r[digits..];
    }
    rest.is_empty()
}

/// Percentage of pairs that are byte-identical after trimming surrounding whitespace.
pub fn full_match_rate<P: AsRef<str>, G: AsRef<str>>(preds: &[P], gts: &[G]) -> Result<f64, SeqError> {
    exact_match_accuracy(preds, gts, |s| s.trim().to_string())
}

/// Percentage of pairs whose normalized forms are equal.
pub fn exact_match_accuracy<P, G, F>(preds: &[P], gts: &[G], normalize: F) -> Result<f64, SeqError>
where
    P: AsRef<str>,
    G: AsRef<str>,
    F: Fn(&str) -> String,
{
    if preds.len() != gts.len() {
        return Err(SeqError::LengthMismatch { preds: preds.len(), refs: gts.len() });
    }
    if gts.is_empty() {
        return Err(SeqError::EmptyInput);
    }
    let hits = preds
        .iter()
        .zip(gts)
        .filter(|(p, g)| normalize(p.as_ref()) == normalize(g.as_ref()))
        .count();
    Ok(100.0 * hits as f64 / gts.len() as f64)
}

/// Configurable answer normalization for exact-match scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TextNormalizer {
    pub trim: bool,
    pub case_fold: bool,
    pub collapse_whitespace: bool,
}

impl Default for TextNormalizer {
    fn default() -> Self {
        Self { trim: true, case_fold: false, collapse_whitespace: false }
    }
}

impl TextNormalizer {
    pub fn normalize(&self, s: &str) -> String {
        let mut out = if self.collapse_whitespace {
            s.split_whitespace().collect::<Vec<_>>().join(" ")
        } else if self.trim {
            s.trim().to_string()
        } else {
            s.to_string()
        };
        if self.case_fold {
            out = out.to_lowercase();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lev_oracle(a: &[u8], b: &[u8]) -> usize {
        match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((x, ar)), Some((y, br))) => {
                let sub = lev_oracle(ar, br) + usize::from(x != y);
                sub.min(lev_oracle(ar, b) + 1).min(lev_oracle(a, br) + 1)
            }
        }
    }

    #[test]
    fn edit_distance_examples() {
        assert_eq!(edit_distance(b"kitten", b"kitten"), 0);
        assert_eq!(edit_distance(b"abc", b"abd"), 1);
        assert_eq!(edit_distance(b"kitten", b"sitting"), 3);
        assert_eq!(edit_distance::<u8>(b"", b"abc"), 3);
        assert_eq!(normalized_edit_distance("", ""), 0.0);
        assert_eq!(normalized_edit_distance("a", "b"), 1.0);
        assert_eq!(normalized_edit_distance("ab", "abcd"), 0.5);
    }

    #[test]
    fn kern_views() {
        let d = KernDocument::new("**kern\t**kern\n4c\t4e\n*-\t*-\n");
        assert_eq!(d.lines(), vec!["**kern\t**kern", "4c\t4e", "*-\t*-"]);
        assert_eq!(d.symbols(), vec!["**kern", "**kern", "4c", "4e", "*-", "*-"]);
        assert_eq!(d.chars().iter().filter(|c| **c == '\t').count(), 3);
    }

    #[test]
    fn error_rate_examples() {
        let same = [KernDocument::new("4c 4d\n4e")];
        let r = cer_ser_ler(&same, &same, RateMode::PerExample).unwrap();
        assert_eq!((r.cer, r.ser, r.ler), (0.0, 0.0, 0.0));

        let r = cer_ser_ler(&[KernDocument::new("ab ce")], &[KernDocument::new("ab cd")], RateMode::PerExample).unwrap();
        assert_eq!((r.cer, r.ser, r.ler), (20.0, 50.0, 100.0));

        let long = cer_ser_ler(&[KernDocument::new("a b c d e f")], &[KernDocument::new("a")], RateMode::PerExample).unwrap();
        assert!(long.cer > 100.0 && long.ser > 100.0);
    }

    #[test]
    fn pooled_differs_from_per_example() {
        let gts = [KernDocument::new("ab"), KernDocument::new("abcdefgh")];
        let preds = [KernDocument::new("xb"), KernDocument::new("abcdefgh")];
        let per = cer_ser_ler(&preds, &gts, RateMode::PerExample).unwrap();
        let pooled = cer_ser_ler(&preds, &gts, RateMode::Pooled).unwrap();
        assert_eq!(per.cer, 25.0);
        assert_eq!(pooled.cer, 10.0);
    }

    #[test]
    fn error_rate_errors() {
        let one = [KernDocument::new("a")];
        assert!(matches!(cer_ser_ler(&one, &[], RateMode::PerExample), Err(SeqError::LengthMismatch { .. })));
        assert_eq!(
            cer_ser_ler(&one, &[KernDocument::new("")], RateMode::PerExample),
            Err(SeqError::EmptyReference { index: 0, view: "character" })
        );
        assert_eq!(
            cer_ser_ler(&one, &[KernDocument::new(" \t")], RateMode::PerExample),
            Err(SeqError::EmptyReference { index: 0, view: "symbol" })
        );
        assert_eq!(cer_ser_ler(&[], &[], RateMode::Pooled), Err(SeqError::EmptyInput));
    }

    const FIG11: &str = "CC1([C@@H]([C@@H](C2=C(O1)C=CC(=C2)C(C(F)(F)F)(F)F)N3CCCCC3=O)O)C";

    #[test]
    fn smiles_accepts_regression_corpus() {
        for s in [
            FIG11,
            "C",
            "c1ccccc1",
            "CC(=O)OC1=CC=CC=C1C(=O)O",
            "CN1C=NC2=C1C(=O)N(C(=O)N2C)C",
            "[13CH4]",
            "C[C@H](N)C(=O)O",
            "F/C=C/F",
            "[Na+].[Cl-]",
            "C%10CCCCC%10",
            "C=1CCCCC=1",
            "[Fe+++]",
            "[nH]1cccc1",
            "OCC[N+](C)(C)C",
            "[2H]C([2H])([2H])Cl",
            "C[C@@]12CC[C@H]3[C@@H](CCC4=CC(=O)CC[C@]34C)[C@@H]1CCC2=O",
            "*C(=O)*",
            "[CH2:1]=[O:2]",
        ] {
            assert_eq!(smiles_validate(s), SmilesValidity::Valid, "{s}");
        }
    }

    #[test]
    fn smiles_rejects_mutations() {
        use SmilesIssue::*;
        let cases: &[(&str, SmilesIssue)] = &[
            ("", Empty),
            ("C(C", UnbalancedParen(1)),
            ("CC)C", UnbalancedParen(2)),
            ("C()C", EmptyBranch(1)),
            ("(C)C", MissingAtom(0)),
            ("1CC1", MissingAtom(0)),
            ("C1CC", UnpairedRingBond(1)),
            ("C11", SelfRingBond(1)),
            ("C=1CC#1", RingBondMismatch(1)),
            ("CC=", DanglingBond(2)),
            ("=CC", DanglingBond(0)),
            ("C(=)C", DanglingBond(2)),
            ("C=(C)C", DanglingBond(1)),
            ("CC.", DanglingBond(2)),
            ("C==C", DanglingBond(2)),
            ("C[Xx]", BadBracketAtom(1)),
            ("C[CH4", BadBracketAtom(1)),
            ("CX", UnknownSymbol(1, 'X')),
            ("C%1C", UnknownSymbol(1, '%')),
        ];
        for (s, issue) in cases {
            assert_eq!(smiles_validate(s), SmilesValidity::Invalid(issue.clone()), "{s}");
        }
    }

    #[test]
    fn full_match_examples() {
        assert_eq!(full_match_rate(&["CCO", "c1ccccc1"], &["CCO", "c1ccccc1"]).unwrap(), 100.0);
        assert_eq!(full_match_rate(&["CCO ", "CC"], &["CCO", "CO"]).unwrap(), 50.0);
        // same molecule, different spelling
        assert_eq!(full_match_rate(&["OCC"], &["CCO"]).unwrap(), 0.0);
        assert!(matches!(full_match_rate(&["a"], &["a", "b"]), Err(SeqError::LengthMismatch { .. })));
        assert_eq!(full_match_rate::<&str, &str>(&[], &[]), Err(SeqError::EmptyInput));
    }

    #[test]
    fn exact_match_normalizers() {
        let n = TextNormalizer::default();
        assert_eq!(exact_match_accuracy(&[" Yes"], &["Yes"], |s| n.normalize(s)).unwrap(), 100.0);
        assert_eq!(exact_match_accuracy(&["yes", "no"], &["Yes", "no"], |s| n.normalize(s)).unwrap(), 50.0);
        let folded = TextNormalizer { case_fold: true, collapse_whitespace: true, ..n };
        assert_eq!(exact_match_accuracy(&["new  YORK"], &["New York"], |s| folded.normalize(s)).unwrap(), 100.0);
        assert_eq!(exact_match_accuracy(&["1"], &["one"], |s| n.normalize(s)).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn matches_recursive_oracle(a in proptest::collection::vec(0u8..4, 0..8), b in proptest::collection::vec(0u8..4, 0..8)) {
            prop_assert_eq!(edit_distance(&a, &b), lev_oracle(&a, &b));
        }

        #[test]
        fn edit_distance_is_a_metric(
            a in proptest::collection::vec(0u8..3, 0..10),
            b in proptest::collection::vec(0u8..3, 0..10),
            c in proptest::collection::vec(0u8..3, 0..10),
        ) {
            prop_assert_eq!(edit_distance(&a, &b), edit_distance(&b, &a));
            prop_assert_eq!(edit_distance(&a, &b) == 0, a == b);
            prop_assert!(edit_distance(&a, &c) <= edit_distance(&a, &b) + edit_distance(&b, &c));
        }

        #[test]
        fn rates_are_order_invariant(
            pairs in proptest::collection::vec(("[ab \n]{0,12}", "[ab]{1,4}( [ab]{1,4}){0,3}"), 1..8),
            rot in 0usize..8,
        ) {
            let preds: Vec<_> = pairs.iter().map(|(p, _)| KernDocument::new(p.clone())).collect();
            let gts: Vec<_> = pairs.iter().map(|(_, g)| KernDocument::new(g.clone())).collect();
            let base = cer_ser_ler(&preds, &gts, RateMode::PerExample).unwrap();
            let k = rot % preds.len();
            let (mut p2, mut g2) = (preds.clone(), gts.clone());
            p2.rotate_left(k);
            g2.rotate_left(k);
            let rotated = cer_ser_ler(&p2, &g2, RateMode::PerExample).unwrap();
            prop_assert_eq!(base, rotated);
            let zero = base.cer == 0.0 && base.ser == 0.0 && base.ler == 0.0;
            prop_assert_eq!(zero, preds.iter().zip(&gts).all(|(p, g)| p.raw() == g.raw()));
        }
    }
}
