//! Unanimity and glove games.

use std::any::Any;

use crate::coalition::{Coalition, PlayerId};
use crate::error::{Error, Result};
use crate::game::{Game, Metric};

#[derive(Debug)]
pub struct UnanimityMetric {
    n: usize,
}

impl Metric for UnanimityMetric {
    fn n_players(&self) -> usize {
        self.n
    }

    fn raw_metric(&self, coalition: &Coalition) -> Result<f64> {
        Ok(if coalition.is_grand() { 1.0 } else { 0.0 })
    }

    fn descriptor(&self) -> String {
        format!("unanimity:{}", self.n)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// `V(S) = 1` iff every player is present.
pub fn make_unanimity_game(n: usize) -> Result<Game> {
    if n == 0 {
        return Err(Error::arg("unanimity game needs n >= 1"));
    }
    Game::new(UnanimityMetric { n })
}

/// One left glove (player 0), two right gloves (players 1 and 2).
#[derive(Debug)]
pub struct GloveMetric;

impl Metric for GloveMetric {
    fn n_players(&self) -> usize {
        3
    }

    fn raw_metric(&self, c: &Coalition) -> Result<f64> {
        let pair = c.contains(PlayerId(0)) && (c.contains(PlayerId(1)) || c.contains(PlayerId(2)));
        Ok(if pair { 1.0 } else { 0.0 })
    }

    fn descriptor(&self) -> String {
        "glove".to_string()
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

pub fn make_glove_game() -> Result<Game> {
    Game::new(GloveMetric)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unanimity_values() {
        let g = make_unanimity_game(3).unwrap();
        assert_eq!(g.grand_value().unwrap(), 1.0);
        let two = Coalition::from_members(3, [0, 1]).unwrap();
        assert_eq!(g.evaluate_adjusted(&two).unwrap(), 0.0);
        assert!(make_unanimity_game(0).is_err());
    }

    #[test]
    fn glove_table() {
        let g = make_glove_game().unwrap();
        let v = |m: &[usize]| g.evaluate_adjusted(&Coalition::from_members(3, m.iter().copied()).unwrap()).unwrap();
        assert_eq!(v(&[0, 1]), 1.0);
        assert_eq!(v(&[0, 2]), 1.0);
        assert_eq!(v(&[1, 2]), 0.0);
        assert_eq!(v(&[0]), 0.0);
        assert_eq!(v(&[0, 1, 2]), 1.0);
    }
}
