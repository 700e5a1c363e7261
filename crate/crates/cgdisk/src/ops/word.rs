//! Symbolic derivatives of composite Cauchy operators.
//!
//! Words are read outermost atom first and act on an implicit innermost
//! argument `h`. The rewrite rules are
//!
//! * `dbar T_j w = d^{j-1} w`,   `d T_j w = T_{j+1} w`,
//! * `d Tbar_j w = dbar^{j-1} w`, `dbar Tbar_j w = Tbar_{j+1} w`,
//!
//! with `T_1 = T` and `T_2 = 2T`. A word is in normal form when it only
//! contains `T_j` and `Tbar_j` atoms.

use std::fmt;

use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    /// `T_j`, `j >= 1`.
    T(usize),
    /// `Tbar_j`, `j >= 1`.
    Tbar(usize),
    /// `d^k S_b`.
    DkSb(usize),
    /// `dbar^k Sbar_b`.
    DbarkSbarB(usize),
    /// Pending `d^p` on the next argument.
    D(usize),
    /// Pending `dbar^p` on the next argument.
    Dbar(usize),
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Atom::T(1) => write!(f, "T"),
            Atom::T(j) => write!(f, "T_{j}"),
            Atom::Tbar(1) => write!(f, "Tbar"),
            Atom::Tbar(j) => write!(f, "Tbar_{j}"),
            Atom::DkSb(0) => write!(f, "S_b"),
            Atom::DkSb(k) => write!(f, "d^{k} S_b"),
            Atom::DbarkSbarB(0) => write!(f, "Sbar_b"),
            Atom::DbarkSbarB(k) => write!(f, "dbar^{k} Sbar_b"),
            Atom::D(p) => write!(f, "d^{p}"),
            Atom::Dbar(p) => write!(f, "dbar^{p}"),
        }
    }
}

/// A prefactor times a composition of atoms applied to `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorWord {
    pub prefactor: C64,
    pub atoms: Vec<Atom>,
}

impl OperatorWord {
    pub fn identity() -> Self {
        Self {
            prefactor: C64::new(1.0, 0.0),
            atoms: Vec::new(),
        }
    }

    /// `T^nu Tbar^mu`.
    pub fn composite(nu: usize, mu: usize) -> Self {
        let mut atoms = vec![Atom::T(1); nu];
        atoms.extend(std::iter::repeat(Atom::Tbar(1)).take(mu));
        Self {
            prefactor: C64::new(1.0, 0.0),
            atoms,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_normal(&self) -> bool {
        self.atoms
            .iter()
            .all(|a| matches!(a, Atom::T(_) | Atom::Tbar(_)))
    }

    /// Expands a leading `T_j` or `Tbar_j` with `j >= 3` into second-order
    /// transforms and boundary terms:
    /// `T_{k+2} w = 2T(d^k w) - sum_{i=1}^k d^i S_b(d^{k-i} w)`.
    pub fn expand_leading(&self) -> Vec<OperatorWord> {
        let (head, rest) = match self.atoms.split_first() {
            Some(x) => x,
            None => return vec![self.clone()],
        };
        let (k, conj) = match *head {
            Atom::T(j) if j >= 3 => (j - 2, false),
            Atom::Tbar(j) if j >= 3 => (j - 2, true),
            _ => return vec![self.clone()],
        };
        let pending = |p: usize| if conj { Atom::Dbar(p) } else { Atom::D(p) };
        let mut out = Vec::with_capacity(k + 1);
        let mut first = vec![if conj { Atom::Tbar(2) } else { Atom::T(2) }, pending(k)];
        first.extend_from_slice(rest);
        out.push(OperatorWord {
            prefactor: self.prefactor,
            atoms: first,
        });
        for i in 1..=k {
            let mut atoms = vec![if conj {
                Atom::DbarkSbarB(i)
            } else {
                Atom::DkSb(i)
            }];
            if k > i {
                atoms.push(pending(k - i));
            }
            atoms.extend_from_slice(rest);
            out.push(OperatorWord {
                prefactor: -self.prefactor,
                atoms,
            });
        }
        out
    }
}

impl fmt::Display for OperatorWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.prefactor != C64::new(1.0, 0.0) {
            write!(f, "({}) ", self.prefactor)?;
        }
        for a in &self.atoms {
            write!(f, "{a} . ")?;
        }
        write!(f, "h")
    }
}

/// Applies `d^p dbar^pb` to a normal-form word and returns its normal form.
pub fn differentiate(atoms: &[Atom], p: usize, pb: usize) -> Result<Vec<Atom>> {
    let Some((&head, rest)) = atoms.split_first() else {
        if p + pb > 0 {
            return Err(Error::PendingDerivative { pending: p + pb });
        }
        return Ok(Vec::new());
    };
    match head {
        Atom::T(j) => {
            if pb > 0 {
                differentiate(rest, p + j - 1, pb - 1)
            } else {
                let mut out = vec![Atom::T(j + p)];
                out.extend_from_slice(rest);
                Ok(out)
            }
        }
        Atom::Tbar(j) => {
            if p > 0 {
                differentiate(rest, p - 1, pb + j - 1)
            } else {
                let mut out = vec![Atom::Tbar(j + pb)];
                out.extend_from_slice(rest);
                Ok(out)
            }
        }
        other => panic!("differentiate expects a normal-form word, found {other}"),
    }
}

/// Normal form of `d^k dbar^l (T^nu Tbar^mu .)`.
pub fn reduce_word(k: usize, l: usize, nu: usize, mu: usize) -> Result<OperatorWord> {
    let m = nu + mu;
    if k + l > m {
        return Err(Error::OrderTooHigh { k, l, m });
    }
    let base = OperatorWord::composite(nu, mu);
    Ok(OperatorWord {
        prefactor: base.prefactor,
        atoms: differentiate(&base.atoms, k, l)?,
    })
}
