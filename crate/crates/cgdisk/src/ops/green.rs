//! Evaluation of normal-form operator words and the composite Green map
//! `omega = T^nu Tbar^mu h` together with all its derivative entries.

use std::collections::HashMap;

use super::word::{differentiate, reduce_word, Atom};
use super::{apply_dbark_sbar_b, apply_dk_sb, apply_t, apply_t2, apply_t2bar, apply_tbar};
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::holder::{jet_pairs, JetField};

/// `T_{k+2} f = 2T(d^k f) - sum_{i=1}^k d^i S_b(d^{k-i} f)` from samples of
/// `d^j f`, `j = 0..=k`.
pub fn apply_high_t(k: usize, stack: &[ScalarField]) -> Result<ScalarField> {
    if stack.len() < k + 1 {
        return Err(Error::MissingJetLevel {
            needed: k + 1,
            got: stack.len(),
        });
    }
    let grid = stack[0].grid();
    let mut acc = apply_t2(&stack[k]);
    for i in 1..=k {
        acc = acc.sub(&apply_dk_sb(grid, i, stack[k - i].boundary())?)?;
    }
    Ok(acc)
}

/// Memoized evaluator of words applied to a fixed innermost field.
pub struct WordEvaluator<'a> {
    h: &'a ScalarField,
    cache: HashMap<Vec<Atom>, ScalarField>,
}

impl<'a> WordEvaluator<'a> {
    pub fn new(h: &'a ScalarField) -> Self {
        Self {
            h,
            cache: HashMap::new(),
        }
    }

    /// Evaluates a normal-form word on `h`.
    pub fn eval(&mut self, atoms: &[Atom]) -> Result<ScalarField> {
        if let Some(f) = self.cache.get(atoms) {
            return Ok(f.clone());
        }
        let grid = self.h.grid().clone();
        let out = match atoms.split_first() {
            None => self.h.clone(),
            Some((&head, rest)) => match head {
                Atom::T(1) => apply_t(&self.eval(rest)?),
                Atom::T(2) => apply_t2(&self.eval(rest)?),
                Atom::T(j) => {
                    let k = j - 2;
                    let top = self.eval(&differentiate(rest, k, 0)?)?;
                    let mut acc = apply_t2(&top);
                    for i in 1..=k {
                        let g = self.eval(&differentiate(rest, k - i, 0)?)?;
                        acc = acc.sub(&apply_dk_sb(&grid, i, g.boundary())?)?;
                    }
                    acc
                }
                Atom::Tbar(1) => apply_tbar(&self.eval(rest)?),
                Atom::Tbar(2) => apply_t2bar(&self.eval(rest)?),
                Atom::Tbar(j) => {
                    let k = j - 2;
                    let top = self.eval(&differentiate(rest, 0, k)?)?;
                    let mut acc = apply_t2bar(&top);
                    for i in 1..=k {
                        let g = self.eval(&differentiate(rest, 0, k - i)?)?;
                        acc = acc.sub(&apply_dbark_sbar_b(&grid, i, g.boundary())?)?;
                    }
                    acc
                }
                other => panic!("word evaluator expects normal form, found {other}"),
            },
        };
        self.cache.insert(atoms.to_vec(), out.clone());
        Ok(out)
    }
}

/// `omega = T^nu Tbar^mu h` with every entry `d^k dbar^l omega`, `k + l <= nu + mu`.
///
/// The `(mu, nu)` entry is `h` itself.
pub fn compose_green(nu: usize, mu: usize, h: &ScalarField) -> Result<JetField> {
    let m = nu + mu;
    let mut ev = WordEvaluator::new(h);
    let mut entries = Vec::new();
    for (k, l) in jet_pairs(m) {
        let w = reduce_word(k, l, nu, mu)?;
        entries.push(ev.eval(&w.atoms)?);
    }
    JetField::from_entries(h.grid().clone(), m, 1, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sample, DiscGrid};
    use crate::C64;

    #[test]
    fn green_of_constant() {
        let g = DiscGrid::new(1.0, 16, 32).unwrap();
        let c = C64::new(0.5, -2.0);
        let h = ScalarField::constant(&g, c);
        let jet = compose_green(1, 0, &h).unwrap();
        let expect = sample(&g, |z| c * z.conj()).unwrap();
        assert!(jet.entry(0, 0, 0).sub(&expect).unwrap().sup() < 1e-13);
        assert!(jet.entry(0, 1, 0).sup() < 1e-13);
        assert!(jet.entry(0, 0, 1).sub(&h).unwrap().sup() == 0.0);
    }

    #[test]
    fn green_of_laplacian() {
        let r = 0.8;
        let g = DiscGrid::new(r, 16, 32).unwrap();
        let h = ScalarField::constant(&g, C64::new(1.0, 0.0));
        let jet = compose_green(1, 1, &h).unwrap();
        let expect = sample(&g, |z| z * z.conj() - r * r).unwrap();
        assert!(jet.entry(0, 0, 0).sub(&expect).unwrap().sup() < 1e-13);
        assert!(jet.entry(0, 1, 1).sub(&h).unwrap().sup() == 0.0);
    }

    #[test]
    fn high_t_with_empty_sum_is_2t() {
        let g = DiscGrid::new(1.0, 8, 16).unwrap();
        let f = sample(&g, |z| z * z + z.conj()).unwrap();
        let a = apply_high_t(0, std::slice::from_ref(&f)).unwrap();
        let b = apply_t2(&f);
        assert!(a.values().zip(b.values()).all(|(x, y)| x == y));
        assert!(matches!(
            apply_high_t(2, std::slice::from_ref(&f)),
            Err(Error::MissingJetLevel { .. })
        ));
    }
}
