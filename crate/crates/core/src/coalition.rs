//! Players and coalitions.

use std::fmt;

use crate::error::{Error, Result};

/// Index of a player in `[0, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlayerId(pub usize);

impl PlayerId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Attention-head position of a player: flat index = layer * heads_per_layer + head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HeadCoordinate {
    pub layer: usize,
    pub head: usize,
}

/// How flat player indices map onto (layer, head) pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeadLayout {
    pub heads_per_layer: usize,
}

impl HeadLayout {
    pub fn new(heads_per_layer: usize) -> Self {
        assert!(heads_per_layer > 0, "heads_per_layer must be positive");
        Self { heads_per_layer }
    }

    pub fn coordinate(&self, player: PlayerId) -> HeadCoordinate {
        HeadCoordinate {
            layer: player.0 / self.heads_per_layer,
            head: player.0 % self.heads_per_layer,
        }
    }

    pub fn player(&self, coord: HeadCoordinate) -> Result<PlayerId> {
        if coord.head >= self.heads_per_layer {
            return Err(Error::arg(format!(
                "head {} out of range for {} heads per layer",
                coord.head, self.heads_per_layer
            )));
        }
        Ok(PlayerId(coord.layer * self.heads_per_layer + coord.head))
    }
}

/// Fixed-width bit set over N players; bit set = player active.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Coalition {
    width: usize,
    words: Vec<u64>,
}

impl Coalition {
    pub fn empty(width: usize) -> Self {
        Self {
            width,
            words: vec![0; width.div_ceil(64)],
        }
    }

    pub fn grand(width: usize) -> Self {
        let mut c = Self::empty(width);
        for (i, w) in c.words.iter_mut().enumerate() {
            let bits = (width - i * 64).min(64);
            *w = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
        }
        c
    }

    /// Coalition whose members are the set bits of `mask` (width ≤ 64).
    pub fn from_mask(width: usize, mask: u64) -> Result<Self> {
        if width > 64 {
            return Err(Error::arg("from_mask supports at most 64 players"));
        }
        if width < 64 && mask >> width != 0 {
            return Err(Error::arg(format!("mask {mask:#x} has bits beyond width {width}")));
        }
        let mut c = Self::empty(width);
        if width > 0 {
            c.words[0] = mask;
        }
        Ok(c)
    }

    pub fn from_members(width: usize, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut c = Self::empty(width);
        for m in members {
            c.insert(PlayerId(m))?;
        }
        Ok(c)
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut c = Self::empty(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                c.words[i / 64] |= 1 << (i % 64);
            }
        }
        c
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_grand(&self) -> bool {
        self.len() == self.width
    }

    fn check(&self, p: PlayerId) -> Result<()> {
        if p.0 >= self.width {
            Err(Error::arg(format!(
                "player {} out of range for coalition of width {}",
                p.0, self.width
            )))
        } else {
            Ok(())
        }
    }

    pub fn contains(&self, p: PlayerId) -> bool {
        p.0 < self.width && self.words[p.0 / 64] >> (p.0 % 64) & 1 == 1
    }

    pub fn insert(&mut self, p: PlayerId) -> Result<()> {
        self.check(p)?;
        self.words[p.0 / 64] |= 1 << (p.0 % 64);
        Ok(())
    }

    pub fn remove(&mut self, p: PlayerId) -> Result<()> {
        self.check(p)?;
        self.words[p.0 / 64] &= !(1 << (p.0 % 64));
        Ok(())
    }

    /// Copy of `self` with `p` added.
    pub fn with(&self, p: PlayerId) -> Result<Self> {
        let mut c = self.clone();
        c.insert(p)?;
        Ok(c)
    }

    /// Copy of `self` with `p` removed.
    pub fn without(&self, p: PlayerId) -> Result<Self> {
        let mut c = self.clone();
        c.remove(p)?;
        Ok(c)
    }

    pub fn members(&self) -> impl Iterator<Item = PlayerId> + '_ {
        (0..self.width).filter(|&i| self.words[i / 64] >> (i % 64) & 1 == 1).map(PlayerId)
    }

    /// Gate vector: 1.0 for active players, 0.0 otherwise.
    pub fn gates(&self) -> Vec<f64> {
        (0..self.width)
            .map(|i| if self.contains(PlayerId(i)) { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.width).map(|i| self.contains(PlayerId(i))).collect()
    }

    /// `"0"/"1"` string, player 0 first.
    pub fn to_bit_string(&self) -> String {
        (0..self.width)
            .map(|i| if self.contains(PlayerId(i)) { '1' } else { '0' })
            .collect()
    }

    pub fn from_bit_string(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|ch| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Format(format!("invalid mask character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bools(&bits))
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Coalition({})", self.to_bit_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(width: usize, members: &[usize]) -> Coalition {
        Coalition::from_members(width, members.iter().copied()).unwrap()
    }

    #[test]
    fn without_and_with() {
        assert_eq!(set(3, &[0, 1, 2]).without(PlayerId(1)).unwrap(), set(3, &[0, 2]));
        assert_eq!(Coalition::empty(3).with(PlayerId(0)).unwrap(), set(3, &[0]));
    }

    #[test]
    fn out_of_range_is_an_argument_error() {
        let c = Coalition::empty(3);
        assert!(matches!(c.with(PlayerId(3)), Err(Error::Argument(_))));
        assert!(matches!(c.without(PlayerId(7)), Err(Error::Argument(_))));
    }

    #[test]
    fn grand_and_empty() {
        for n in [0, 1, 5, 63, 64, 65, 144] {
            let g = Coalition::grand(n);
            assert_eq!(g.len(), n);
            assert!(g.is_grand());
            assert!(Coalition::empty(n).is_empty());
            assert_eq!(g.members().count(), n);
        }
    }

    #[test]
    fn set_algebra_exhaustive_small_widths() {
        for n in 1..=8usize {
            for mask in 0u64..(1 << n) {
                let c = Coalition::from_mask(n, mask).unwrap();
                assert_eq!(c.len(), mask.count_ones() as usize);
                for p in 0..n {
                    let p = PlayerId(p);
                    let added = c.with(p).unwrap();
                    // idempotence
                    assert_eq!(added.with(p).unwrap(), added);
                    assert_eq!(c.without(p).unwrap().without(p).unwrap(), c.without(p).unwrap());
                    // with(without(c, p), p) restores c when p ∈ c
                    if c.contains(p) {
                        assert_eq!(c.without(p).unwrap().with(p).unwrap(), c);
                    }
                    for q in 0..n {
                        let q = PlayerId(q);
                        if q != p {
                            // independent edits commute
                            assert_eq!(
                                c.with(p).unwrap().without(q).unwrap(),
                                c.without(q).unwrap().with(p).unwrap()
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn bit_string_round_trip() {
        let c = set(70, &[0, 3, 64, 69]);
        let s = c.to_bit_string();
        assert_eq!(s.len(), 70);
        assert_eq!(Coalition::from_bit_string(&s).unwrap(), c);
        assert!(Coalition::from_bit_string("01x").is_err());
    }

    #[test]
    fn head_layout_is_bijective() {
        let layout = HeadLayout::new(12);
        for i in 0..144 {
            let coord = layout.coordinate(PlayerId(i));
            assert_eq!(layout.player(coord).unwrap(), PlayerId(i));
        }
        assert_eq!(layout.coordinate(PlayerId(5 * 12 + 4)), HeadCoordinate { layer: 5, head: 4 });
    }
}
