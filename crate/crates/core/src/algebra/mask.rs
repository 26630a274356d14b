use std::fmt;

use num_integer::Integer;

/// Periodic set of grid indices `{k >= 1 : k mod modulus ∈ residues}`.
///
/// Masks are always kept in their least-period form, so two masks select the
/// same indices iff they compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mask {
    modulus: u32,
    residues: Vec<u32>,
}

impl Mask {
    /// The mask selecting every index.
    pub fn all() -> Self {
        Mask {
            modulus: 1,
            residues: vec![0],
        }
    }

    /// Builds a mask and reduces it to its least modulus.
    ///
    /// Returns `None` when `modulus` is zero or the residue set is empty.
    pub fn new(modulus: u32, residues: impl IntoIterator<Item = u32>) -> Option<Self> {
        if modulus == 0 {
            return None;
        }
        let mut selected = vec![false; modulus as usize];
        for r in residues {
            selected[(r % modulus) as usize] = true;
        }
        Self::from_indicator(&selected)
    }

    /// Builds the least-period mask from an indicator over `0..len`.
    pub(crate) fn from_indicator(selected: &[bool]) -> Option<Self> {
        if !selected.iter().any(|&s| s) {
            return None;
        }
        let len = selected.len() as u32;
        for d in divisors(len) {
            let periodic = (0..len).all(|r| selected[r as usize] == selected[(r % d) as usize]);
            if periodic {
                let residues = (0..d).filter(|&r| selected[r as usize]).collect();
                return Some(Mask {
                    modulus: d,
                    residues,
                });
            }
        }
        unreachable!("the full length is always a period")
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn residues(&self) -> &[u32] {
        &self.residues
    }

    pub fn is_all(&self) -> bool {
        self.modulus == 1
    }

    pub fn selects(&self, k: u32) -> bool {
        self.residues.binary_search(&(k % self.modulus)).is_ok()
    }

    pub fn intersect(&self, other: &Mask) -> Option<Mask> {
        let len = self.modulus.lcm(&other.modulus);
        let ind: Vec<bool> = (0..len)
            .map(|r| self.selects(r) && other.selects(r))
            .collect();
        Self::from_indicator(&ind)
    }

    pub fn complement(&self) -> Option<Mask> {
        let ind: Vec<bool> = (0..self.modulus).map(|r| !self.selects(r)).collect();
        Self::from_indicator(&ind)
    }
}

impl fmt::Display for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mod({}", self.modulus)?;
        for r in &self.residues {
            write!(f, ",{}", r)?;
        }
        write!(f, ")")
    }
}

fn divisors(n: u32) -> impl Iterator<Item = u32> {
    (1..=n).filter(move |d| n.is_multiple_of(*d))
}

/// Least common multiple of the moduli of the given masks.
pub(crate) fn common_modulus<'a>(masks: impl IntoIterator<Item = &'a Mask>) -> u32 {
    masks.into_iter().fold(1, |acc, m| acc.lcm(&m.modulus))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduces_to_least_modulus() {
        let m = Mask::new(4, [0, 2]).unwrap();
        assert_eq!(m, Mask::new(2, [0]).unwrap());
        assert_eq!(Mask::new(6, 0..6).unwrap(), Mask::all());
        assert_eq!(Mask::new(6, [1, 4]).unwrap().modulus(), 3);
    }

    #[test]
    fn empty_or_zero_modulus_rejected() {
        assert!(Mask::new(3, []).is_none());
        assert!(Mask::new(0, [0]).is_none());
    }

    #[test]
    fn selection_and_intersection() {
        let even = Mask::new(2, [0]).unwrap();
        let odd = even.complement().unwrap();
        assert!(even.selects(4) && !even.selects(5));
        assert!(odd.selects(1));
        assert!(even.intersect(&odd).is_none());
        let thirds = Mask::new(3, [0]).unwrap();
        assert_eq!(even.intersect(&thirds), Mask::new(6, [0]));
        assert!(Mask::all().complement().is_none());
    }

    #[test]
    fn display() {
        assert_eq!(Mask::new(3, [2, 0]).unwrap().to_string(), "mod(3,0,2)");
    }
}
