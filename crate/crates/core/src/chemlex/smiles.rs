//! SMILES reading and writing for the subset needed by bond counting:
//! organic-subset and bracket atoms with charges, bond orders, aromaticity,
//! branches, ring closures and disconnected components. Stereochemistry,
//! isotopes and hydrogen counts are accepted but discarded.

use std::collections::HashMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[rustfmt::skip]
const ELEMENTS: &[&str] = &[
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
    "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In",
    "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb",
    "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl",
    "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk",
    "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh",
    "Fl", "Mc", "Lv", "Ts", "Og",
];
const ORGANIC: &[&str] = &["B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"];
const AROMATIC_ORGANIC: &[&str] = &["B", "C", "N", "O", "P", "S"];
const AROMATIC_BRACKET: &[&str] = &["B", "C", "N", "O", "P", "S", "Se", "As", "Te"];

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Atom {
    /// Capitalized element symbol, `*` for a wildcard.
    pub element: String,
    pub aromatic: bool,
    pub charge: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    pub fn key(self) -> &'static str {
        match self {
            BondOrder::Single => "1",
            BondOrder::Double => "2",
            BondOrder::Triple => "3",
            BondOrder::Aromatic => "ar",
        }
    }

    fn symbol(self) -> char {
        match self {
            BondOrder::Single => '-',
            BondOrder::Double => '=',
            BondOrder::Triple => '#',
            BondOrder::Aromatic => ':',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

/// Atoms and bonds of a molecule. Bond endpoints are valid atom indices and
/// no bond joins an atom to itself.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MolGraph {
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
}

impl MolGraph {
    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    fn neighbors(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.atoms.len()];
        for (k, b) in self.bonds.iter().enumerate() {
            adj[b.a].push((b.b, k));
            adj[b.b].push((b.a, k));
        }
        adj
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesErrorKind {
    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),
    #[error("unbalanced parenthesis")]
    UnbalancedParenthesis,
    #[error("unclosed ring bond {0}")]
    UnclosedRing(u32),
    #[error("bond has no atom to attach to")]
    DanglingBond,
    #[error("ring bond joins an atom to itself")]
    SelfLoop,
    #[error("atoms are already bonded")]
    DuplicateBond,
    #[error("conflicting ring bond orders")]
    ConflictingRingBond,
    #[error("unterminated bracket atom")]
    UnterminatedBracket,
    #[error("empty branch")]
    EmptyBranch,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct SmilesError {
    /// Character offset of the offending symbol.
    pub position: usize,
    pub kind: SmilesErrorKind,
}

impl fmt::Display for SmilesError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SMILES error at position {}: {}", self.position, self.kind)
    }
}

fn err<T>(position: usize, kind: SmilesErrorKind) -> Result<T, SmilesError> {
    Err(SmilesError { position, kind })
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    graph: MolGraph,
    bonded: std::collections::HashSet<(usize, usize)>,
    _src: &'a str,
}

pub fn parse_smiles(smiles: &str) -> Result<MolGraph, SmilesError> {
    Parser {
        chars: smiles.chars().collect(),
        pos: 0,
        graph: MolGraph::default(),
        bonded: Default::default(),
        _src: smiles,
    }
    .run()
}

impl Parser<'_> {
    fn add_bond(&mut self, a: usize, b: usize, order: BondOrder, at: usize) -> Result<(), SmilesError> {
        if a == b {
            return err(at, SmilesErrorKind::SelfLoop);
        }
        if !self.bonded.insert((a.min(b), a.max(b))) {
            return err(at, SmilesErrorKind::DuplicateBond);
        }
        self.graph.bonds.push(Bond { a, b, order });
        Ok(())
    }

    fn implicit_order(&self, a: usize, b: usize) -> BondOrder {
        if self.graph.atoms[a].aromatic && self.graph.atoms[b].aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        }
    }

    fn run(mut self) -> Result<MolGraph, SmilesError> {
        let mut prev: Option<usize> = None;
        let mut branches: Vec<(Option<usize>, usize)> = Vec::new();
        let mut pending: Option<(BondOrder, usize)> = None;
        let mut rings: HashMap<u32, (usize, Option<BondOrder>, usize)> = HashMap::new();
        // True right after '(' until an atom or bond appears.
        let mut branch_open = false;

        while self.pos < self.chars.len() {
            let at = self.pos;
            let c = self.chars[at];
            match c {
                '-' | '=' | '#' | ':' | '/' | '\\' | '$' => {
                    if pending.is_some() || prev.is_none() {
                        return err(at, SmilesErrorKind::DanglingBond);
                    }
                    let order = match c {
                        '=' => BondOrder::Double,
                        '#' => BondOrder::Triple,
                        ':' => BondOrder::Aromatic,
                        '$' => return err(at, SmilesErrorKind::UnknownSymbol("$".into())),
                        _ => BondOrder::Single,
                    };
                    pending = Some((order, at));
                    branch_open = false;
                    self.pos += 1;
                }
                '.' => {
                    if pending.is_some() || prev.is_none() || !branches.is_empty() {
                        return err(at, SmilesErrorKind::DanglingBond);
                    }
                    prev = None;
                    self.pos += 1;
                }
                '(' => {
                    if prev.is_none() || pending.is_some() {
                        return err(at, SmilesErrorKind::UnbalancedParenthesis);
                    }
                    branches.push((prev, at));
                    branch_open = true;
                    self.pos += 1;
                }
                ')' => {
                    if branch_open {
                        return err(at, SmilesErrorKind::EmptyBranch);
                    }
                    if let Some((_, p)) = pending {
                        return err(p, SmilesErrorKind::DanglingBond);
                    }
                    let Some((restored, _)) = branches.pop() else {
                        return err(at, SmilesErrorKind::UnbalancedParenthesis);
                    };
                    prev = restored;
                    self.pos += 1;
                }
                '0'..='9' | '%' => {
                    let number = if c == '%' {
                        let digits: String = self.chars[at + 1..].iter().take(2).collect();
                        if digits.len() != 2 || !digits.chars().all(|d| d.is_ascii_digit()) {
                            return err(at, SmilesErrorKind::UnknownSymbol("%".into()));
                        }
                        self.pos += 3;
                        digits.parse::<u32>().expect("two digits")
                    } else {
                        self.pos += 1;
                        c.to_digit(10).expect("digit")
                    };
                    let Some(current) = prev else {
                        return err(at, SmilesErrorKind::DanglingBond);
                    };
                    let bond = pending.take().map(|(o, _)| o);
                    match rings.remove(&number) {
                        Some((open_atom, open_bond, _)) => {
                            let order = match (open_bond, bond) {
                                (Some(x), Some(y)) if x != y => {
                                    return err(at, SmilesErrorKind::ConflictingRingBond)
                                }
                                (Some(x), _) | (None, Some(x)) => x,
                                (None, None) => self.implicit_order(open_atom, current),
                            };
                            self.add_bond(open_atom, current, order, at)?;
                        }
                        None => {
                            rings.insert(number, (current, bond, at));
                        }
                    }
                }
                '[' => {
                    let atom = self.bracket_atom()?;
                    prev = Some(self.push_atom(atom, prev, pending.take(), at)?);
                    branch_open = false;
                }
                '*' => {
                    self.pos += 1;
                    let atom = Atom {
                        element: "*".into(),
                        aromatic: false,
                        charge: 0,
                    };
                    prev = Some(self.push_atom(atom, prev, pending.take(), at)?);
                    branch_open = false;
                }
                _ => {
                    let atom = self.organic_atom()?;
                    prev = Some(self.push_atom(atom, prev, pending.take(), at)?);
                    branch_open = false;
                }
            }
        }
        if let Some((_, p)) = pending {
            return err(p, SmilesErrorKind::DanglingBond);
        }
        if let Some(&(_, p)) = branches.last() {
            return err(p, SmilesErrorKind::UnbalancedParenthesis);
        }
        if let Some((&number, &(_, _, p))) = rings.iter().min_by_key(|(_, v)| v.2) {
            return err(p, SmilesErrorKind::UnclosedRing(number));
        }
        Ok(self.graph)
    }

    fn push_atom(
        &mut self,
        atom: Atom,
        prev: Option<usize>,
        pending: Option<(BondOrder, usize)>,
        at: usize,
    ) -> Result<usize, SmilesError> {
        self.graph.atoms.push(atom);
        let idx = self.graph.atoms.len() - 1;
        match (prev, pending) {
            (Some(p), Some((order, _))) => self.add_bond(p, idx, order, at)?,
            (Some(p), None) => {
                let order = self.implicit_order(p, idx);
                self.add_bond(p, idx, order, at)?
            }
            (None, Some((_, bp))) => return err(bp, SmilesErrorKind::DanglingBond),
            (None, None) => {}
        }
        Ok(idx)
    }

    fn organic_atom(&mut self) -> Result<Atom, SmilesError> {
        let at = self.pos;
        let c = self.chars[at];
        let next = self.chars.get(at + 1).copied();
        let two: Option<String> = next.map(|n| format!("{c}{n}"));
        if let Some(sym) = two.filter(|s| s == "Cl" || s == "Br") {
            self.pos += 2;
            return Ok(Atom {
                element: sym,
                aromatic: false,
                charge: 0,
            });
        }
        let sym = c.to_string();
        if ORGANIC.contains(&sym.as_str()) {
            self.pos += 1;
            return Ok(Atom {
                element: sym,
                aromatic: false,
                charge: 0,
            });
        }
        let upper = c.to_ascii_uppercase().to_string();
        if c.is_ascii_lowercase() && AROMATIC_ORGANIC.contains(&upper.as_str()) {
            self.pos += 1;
            return Ok(Atom {
                element: upper,
                aromatic: true,
                charge: 0,
            });
        }
        err(at, SmilesErrorKind::UnknownSymbol(sym))
    }

    fn bracket_atom(&mut self) -> Result<Atom, SmilesError> {
        let open = self.pos;
        let close = match self.chars[open..].iter().position(|&c| c == ']') {
            Some(off) => open + off,
            None => return err(open, SmilesErrorKind::UnterminatedBracket),
        };
        let body: Vec<char> = self.chars[open + 1..close].to_vec();
        let mut i = 0;
        while i < body.len() && body[i].is_ascii_digit() {
            i += 1; // isotope, ignored
        }
        let sym_at = open + 1 + i;
        let (element, aromatic) = match body.get(i) {
            Some('*') => {
                i += 1;
                ("*".to_owned(), false)
            }
            Some(&c) if c.is_ascii_uppercase() => {
                let two = body.get(i + 1).filter(|n| n.is_ascii_lowercase()).map(|n| format!("{c}{n}"));
                match two.filter(|s| ELEMENTS.contains(&s.as_str())) {
                    Some(s) => {
                        i += 2;
                        (s, false)
                    }
                    None if ELEMENTS.contains(&c.to_string().as_str()) => {
                        i += 1;
                        (c.to_string(), false)
                    }
                    None => return err(sym_at, SmilesErrorKind::UnknownSymbol(c.to_string())),
                }
            }
            Some(&c) if c.is_ascii_lowercase() => {
                let two = body.get(i + 1).filter(|n| n.is_ascii_lowercase()).map(|n| {
                    let mut s = c.to_ascii_uppercase().to_string();
                    s.push(*n);
                    s
                });
                match two.filter(|s| AROMATIC_BRACKET.contains(&s.as_str())) {
                    Some(s) => {
                        i += 2;
                        (s, true)
                    }
                    None => {
                        let s = c.to_ascii_uppercase().to_string();
                        if !AROMATIC_BRACKET.contains(&s.as_str()) {
                            return err(sym_at, SmilesErrorKind::UnknownSymbol(c.to_string()));
                        }
                        i += 1;
                        (s, true)
                    }
                }
            }
            Some(&c) => return err(sym_at, SmilesErrorKind::UnknownSymbol(c.to_string())),
            None => return err(sym_at, SmilesErrorKind::UnknownSymbol("]".into())),
        };
        // chirality
        while body.get(i) == Some(&'@') {
            i += 1;
            while body.get(i).is_some_and(|c| c.is_ascii_uppercase() && *c != 'H') {
                i += 1;
            }
            while body.get(i).is_some_and(char::is_ascii_digit) {
                i += 1;
            }
        }
        // hydrogen count
        if body.get(i) == Some(&'H') {
            i += 1;
            while body.get(i).is_some_and(char::is_ascii_digit) {
                i += 1;
            }
        }
        let mut charge: i32 = 0;
        if let Some(&sign @ ('+' | '-')) = body.get(i) {
            let unit = if sign == '+' { 1 } else { -1 };
            i += 1;
            let digits: String = body[i..].iter().take_while(|c| c.is_ascii_digit()).collect();
            if !digits.is_empty() {
                i += digits.len();
                charge = unit * digits.parse::<i32>().unwrap_or(0);
            } else {
                charge = unit;
                while body.get(i) == Some(&sign) {
                    charge += unit;
                    i += 1;
                }
            }
        }
        if body.get(i) == Some(&':') {
            i += 1;
            while body.get(i).is_some_and(char::is_ascii_digit) {
                i += 1;
            }
        }
        if i != body.len() {
            return err(open + 1 + i, SmilesErrorKind::UnknownSymbol(body[i].to_string()));
        }
        self.pos = close + 1;
        Ok(Atom {
            element,
            aromatic,
            charge: charge.clamp(i8::MIN as i32, i8::MAX as i32) as i8,
        })
    }
}

fn atom_text(atom: &Atom) -> String {
    let plain = atom.charge == 0
        && if atom.aromatic {
            AROMATIC_ORGANIC.contains(&atom.element.as_str())
        } else {
            ORGANIC.contains(&atom.element.as_str()) || atom.element == "*"
        };
    let sym = if atom.aromatic {
        atom.element.to_lowercase()
    } else {
        atom.element.clone()
    };
    if plain {
        return sym;
    }
    let charge = match atom.charge {
        0 => String::new(),
        1 => "+".into(),
        -1 => "-".into(),
        c if c > 0 => format!("+{c}"),
        c => format!("-{}", -c),
    };
    format!("[{sym}{charge}]")
}

fn bond_text(graph: &MolGraph, bond: &Bond) -> String {
    match bond.order {
        BondOrder::Single if graph.atoms[bond.a].aromatic && graph.atoms[bond.b].aromatic => "-".into(),
        BondOrder::Single => String::new(),
        other => other.symbol().to_string(),
    }
}

fn ring_label(n: usize) -> String {
    if n < 10 {
        n.to_string()
    } else {
        format!("%{n:02}")
    }
}

/// Writes a SMILES string visiting atoms in index order.
pub fn write_smiles(graph: &MolGraph) -> String {
    Writer::new(graph, None::<&mut rand::rngs::ThreadRng>).write()
}

/// Writes a SMILES string with randomized roots and branch order.
pub fn write_smiles_shuffled<R: Rng>(graph: &MolGraph, rng: &mut R) -> String {
    Writer::new(graph, Some(rng)).write()
}

struct Writer<'g> {
    graph: &'g MolGraph,
    adj: Vec<Vec<(usize, usize)>>,
    roots: Vec<usize>,
    visited: Vec<bool>,
    children: Vec<Vec<(usize, usize)>>,
    // per atom: (ring number, bond index) in emission order
    ring_marks: Vec<Vec<(usize, usize)>>,
    next_ring: usize,
}

impl<'g> Writer<'g> {
    fn new<R: Rng>(graph: &'g MolGraph, mut rng: Option<&mut R>) -> Self {
        let mut adj = graph.neighbors();
        let mut roots: Vec<usize> = (0..graph.atoms.len()).collect();
        if let Some(rng) = &mut rng {
            roots.shuffle(rng);
            for list in &mut adj {
                list.shuffle(rng);
            }
        }
        let n = graph.atoms.len();
        Writer {
            graph,
            adj,
            roots,
            visited: vec![false; n],
            children: vec![Vec::new(); n],
            ring_marks: vec![Vec::new(); n],
            next_ring: 1,
        }
    }

    fn write(mut self) -> String {
        let mut components = Vec::new();
        let mut used_bond = vec![false; self.graph.bonds.len()];
        for r in self.roots.clone() {
            if self.visited[r] {
                continue;
            }
            self.plan(r, &mut used_bond);
            components.push(r);
        }
        components
            .into_iter()
            .map(|r| {
                let mut s = String::new();
                self.emit(r, &mut s);
                s
            })
            .collect::<Vec<_>>()
            .join(".")
    }

    fn plan(&mut self, root: usize, used_bond: &mut [bool]) {
        // iterative DFS keeping neighbor cursors
        self.visited[root] = true;
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(&mut (atom, ref mut cursor)) = stack.last_mut() {
            if *cursor >= self.adj[atom].len() {
                stack.pop();
                continue;
            }
            let (next, bond) = self.adj[atom][*cursor];
            *cursor += 1;
            if used_bond[bond] {
                continue;
            }
            used_bond[bond] = true;
            if self.visited[next] {
                let n = self.next_ring;
                self.next_ring += 1;
                self.ring_marks[next].push((n, bond));
                self.ring_marks[atom].push((n, bond));
            } else {
                self.visited[next] = true;
                self.children[atom].push((next, bond));
                stack.push((next, 0));
            }
        }
    }

    fn emit(&self, root: usize, out: &mut String) {
        enum Step {
            Atom(usize),
            Text(&'static str),
            Bond(usize),
        }
        let mut stack = vec![Step::Atom(root)];
        while let Some(step) = stack.pop() {
            match step {
                Step::Text(t) => out.push_str(t),
                Step::Bond(b) => out.push_str(&bond_text(self.graph, &self.graph.bonds[b])),
                Step::Atom(a) => {
                    out.push_str(&atom_text(&self.graph.atoms[a]));
                    for &(n, b) in &self.ring_marks[a] {
                        out.push_str(&bond_text(self.graph, &self.graph.bonds[b]));
                        out.push_str(&ring_label(n));
                    }
                    let kids = &self.children[a];
                    // pushed in reverse so they pop in order
                    for (k, &(child, bond)) in kids.iter().enumerate().rev() {
                        let last = k + 1 == kids.len();
                        if !last {
                            stack.push(Step::Text(")"));
                        }
                        stack.push(Step::Atom(child));
                        stack.push(Step::Bond(bond));
                        if !last {
                            stack.push(Step::Text("("));
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn elements(g: &MolGraph) -> Vec<&str> {
        g.atoms.iter().map(|a| a.element.as_str()).collect()
    }

    #[test]
    fn ethanol() {
        let g = parse_smiles("CCO").unwrap();
        assert_eq!(elements(&g), vec!["C", "C", "O"]);
        assert_eq!(
            g.bonds,
            vec![
                Bond { a: 0, b: 1, order: BondOrder::Single },
                Bond { a: 1, b: 2, order: BondOrder::Single },
            ]
        );
    }

    #[test]
    fn carbon_dioxide() {
        let g = parse_smiles("O=C=O").unwrap();
        assert_eq!(g.atoms.len(), 3);
        assert!(g.bonds.iter().all(|b| b.order == BondOrder::Double));
        assert_eq!(g.bonds.len(), 2);
    }

    #[test]
    fn unclosed_ring_reports_digit_position() {
        let e = parse_smiles("C1CC").unwrap_err();
        assert_eq!(e.position, 1);
        assert_eq!(e.kind, SmilesErrorKind::UnclosedRing(1));
    }

    #[test]
    fn error_positions() {
        assert_eq!(parse_smiles("CC(C").unwrap_err().position, 2);
        assert_eq!(parse_smiles("CC)C").unwrap_err().position, 2);
        assert_eq!(parse_smiles("CQ").unwrap_err().position, 1);
        assert_eq!(parse_smiles("C[Xx]").unwrap_err().position, 2);
        assert_eq!(parse_smiles("C=").unwrap_err().position, 1);
        assert_eq!(parse_smiles("C11").unwrap_err().kind, SmilesErrorKind::SelfLoop);
        assert_eq!(parse_smiles("C()C").unwrap_err().kind, SmilesErrorKind::EmptyBranch);
        assert_eq!(
            parse_smiles("[NH4+").unwrap_err().kind,
            SmilesErrorKind::UnterminatedBracket
        );
    }

    #[test]
    fn benzene_is_aromatic_ring() {
        let g = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(g.atoms.len(), 6);
        assert_eq!(g.bonds.len(), 6);
        assert!(g.bonds.iter().all(|b| b.order == BondOrder::Aromatic));
        assert!(g.atoms.iter().all(|a| a.aromatic && a.element == "C"));
    }

    #[test]
    fn bracket_atoms_and_charges() {
        let g = parse_smiles("[NH4+].[O-][N+](=O)[O-]").unwrap();
        assert_eq!(elements(&g), vec!["N", "O", "N", "O", "O"]);
        assert_eq!(g.atoms[0].charge, 1);
        assert_eq!(g.atoms[1].charge, -1);
        assert_eq!(g.bonds.len(), 3);
        let g = parse_smiles("[Pb+2].[13CH3][C@@H](Cl)Br").unwrap();
        assert_eq!(g.atoms[0].charge, 2);
        assert_eq!(elements(&g), vec!["Pb", "C", "C", "Cl", "Br"]);
        let g = parse_smiles("[nH]1cccc1").unwrap();
        assert!(g.atoms[0].aromatic);
        let g = parse_smiles("C%12CC%12").unwrap();
        assert_eq!(g.bonds.len(), 3);
        let g = parse_smiles("C=1CC1").unwrap();
        assert_eq!(g.bonds[2].order, BondOrder::Double);
    }

    #[test]
    fn empty_string_is_empty_molecule() {
        assert!(parse_smiles("").unwrap().is_empty());
    }

    #[test]
    fn writer_round_trip_keeps_graph_for_fixtures() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for smi in FIXTURES {
            let g = parse_smiles(smi).unwrap();
            for _ in 0..5 {
                let written = write_smiles_shuffled(&g, &mut rng);
                let back = parse_smiles(&written).unwrap_or_else(|e| panic!("{written}: {e}"));
                assert_eq!(back.atoms.len(), g.atoms.len());
                assert_eq!(back.bonds.len(), g.bonds.len());
            }
        }
    }

    pub(crate) const FIXTURES: &[&str] = &[
        "CCO",
        "O=C=O",
        "c1ccccc1",
        "Cc1c(cc(cc1[N+](=O)[O-])[N+](=O)[O-])[N+](=O)[O-]",
        "C1N(CN(CN1[N+](=O)[O-])[N+](=O)[O-])[N+](=O)[O-]",
        "C(C(CO[N+](=O)[O-])(CO[N+](=O)[O-])CO[N+](=O)[O-])O[N+](=O)[O-]",
        "[NH4+].[O-]Cl(=O)(=O)=O",
        "CCCCCCOC(=O)c1ccccc1C(=O)OCCCCCC",
        "C12CC3CC(C1)CC(C3)C2",
        "N#N",
    ];
}
