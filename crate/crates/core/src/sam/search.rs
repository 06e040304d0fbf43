//! Greedy and beam search over any autoregressive step model.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// One autoregressive decoder. `step` produces the next-token distribution
/// for a state; `advance` records the chosen token in the state.
pub trait StepModel {
    type State: Clone;

    fn num_classes(&self) -> usize;
    fn initial_state(&self) -> Self::State;
    fn step(&self, state: &Self::State) -> Result<(Vec<f64>, Self::State)>;
    fn advance(&self, state: Self::State, token: usize) -> Self::State;
}

#[derive(Debug, Clone)]
pub struct Hypothesis<S> {
    pub tokens: Vec<usize>,
    pub log_prob: f64,
    /// Probability of each chosen token.
    pub token_probs: Vec<f64>,
    /// Full distribution at each step.
    pub step_probs: Vec<Vec<f64>>,
    pub state: S,
    pub finished: bool,
}

impl<S> Hypothesis<S> {
    fn root(state: S) -> Self {
        Self {
            tokens: Vec::new(),
            log_prob: 0.0,
            token_probs: Vec::new(),
            step_probs: Vec::new(),
            state,
            finished: false,
        }
    }
}

/// Highest log probability first, then lexicographically smaller tokens.
fn rank(a_lp: f64, a_tok: &[usize], b_lp: f64, b_tok: &[usize]) -> Ordering {
    b_lp.total_cmp(&a_lp).then_with(|| a_tok.cmp(b_tok))
}

/// Picks the most probable class each step (lowest index on ties) until
/// `eos` or `max_steps`.
pub fn greedy<M: StepModel>(model: &M, eos: usize, max_steps: usize) -> Result<Hypothesis<M::State>> {
    let mut hyp = Hypothesis::root(model.initial_state());
    for _ in 0..max_steps {
        let (probs, state) = model.step(&hyp.state)?;
        let (best, p) = probs
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bp), (i, p)| if p > bp { (i, p) } else { (bi, bp) });
        hyp.tokens.push(best);
        hyp.log_prob += p.ln();
        hyp.token_probs.push(p);
        hyp.step_probs.push(probs);
        hyp.state = model.advance(state, best);
        if best == eos {
            hyp.finished = true;
            break;
        }
    }
    Ok(hyp)
}

/// Beam search keeping the `k` best hypotheses by total log probability.
/// Finished hypotheses stay in the beam unexpanded and compete on raw log
/// probability. Stops when every kept hypothesis is finished or after
/// `max_steps` steps, and returns the best one.
pub fn beam<M: StepModel>(model: &M, eos: usize, k: usize, max_steps: usize) -> Result<Hypothesis<M::State>> {
    if k == 0 {
        return Err(Error::invalid("beam width must be at least 1"));
    }
    let mut hyps = vec![Hypothesis::root(model.initial_state())];
    for _ in 0..max_steps {
        if hyps.iter().all(|h| h.finished) {
            break;
        }
        // (parent, token or None for a carried finished hypothesis, score)
        struct Cand {
            parent: usize,
            token: Option<usize>,
            log_prob: f64,
            tokens: Vec<usize>,
        }
        let mut expansions = Vec::with_capacity(hyps.len());
        let mut cands = Vec::new();
        for (i, h) in hyps.iter().enumerate() {
            if h.finished {
                expansions.push(None);
                cands.push(Cand {
                    parent: i,
                    token: None,
                    log_prob: h.log_prob,
                    tokens: h.tokens.clone(),
                });
                continue;
            }
            let (probs, state) = model.step(&h.state)?;
            for (c, &p) in probs.iter().enumerate() {
                let mut tokens = h.tokens.clone();
                tokens.push(c);
                cands.push(Cand {
                    parent: i,
                    token: Some(c),
                    log_prob: h.log_prob + p.ln(),
                    tokens,
                });
            }
            expansions.push(Some((probs, state)));
        }
        cands.sort_by(|a, b| rank(a.log_prob, &a.tokens, b.log_prob, &b.tokens));
        cands.truncate(k);
        hyps = cands
            .into_iter()
            .map(|c| {
                let parent = &hyps[c.parent];
                match (c.token, &expansions[c.parent]) {
                    (Some(tok), Some((probs, state))) => {
                        let mut token_probs = parent.token_probs.clone();
                        token_probs.push(probs[tok]);
                        let mut step_probs = parent.step_probs.clone();
                        step_probs.push(probs.clone());
                        Hypothesis {
                            tokens: c.tokens,
                            log_prob: c.log_prob,
                            token_probs,
                            step_probs,
                            state: model.advance(state.clone(), tok),
                            finished: tok == eos,
                        }
                    }
                    _ => parent.clone(),
                }
            })
            .collect();
    }
    Ok(hyps.swap_remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Next-token distribution looked up by prefix; class 0 is EOS.
    struct Table<F: Fn(&[usize]) -> Vec<f64>> {
        classes: usize,
        dist: F,
    }

    impl<F: Fn(&[usize]) -> Vec<f64>> StepModel for Table<F> {
        type State = Vec<usize>;

        fn num_classes(&self) -> usize {
            self.classes
        }
        fn initial_state(&self) -> Vec<usize> {
            Vec::new()
        }
        fn step(&self, prefix: &Vec<usize>) -> Result<(Vec<f64>, Vec<usize>)> {
            Ok(((self.dist)(prefix), prefix.clone()))
        }
        fn advance(&self, mut prefix: Vec<usize>, token: usize) -> Vec<usize> {
            prefix.push(token);
            prefix
        }
    }

    #[test]
    fn beam_finds_global_max_where_greedy_does_not() {
        // Three classes, two steps, EOS never emitted early.
        // Step 1: a=0.6, b=0.4. After a: flat (0.34,0.33,0.33); after b: (0.9, 0.05, 0.05).
        let table = Table {
            classes: 3,
            dist: |prefix: &[usize]| match prefix {
                [] => vec![0.0, 0.6, 0.4],
                [1] => vec![0.34, 0.33, 0.33],
                [2] => vec![0.9, 0.05, 0.05],
                _ => vec![1.0, 0.0, 0.0],
            },
        };
        let g = greedy(&table, 0, 2).unwrap();
        assert_eq!(g.tokens, vec![1, 0]);
        let b = beam(&table, 0, 2, 2).unwrap();
        assert_eq!(b.tokens, vec![2, 0]);

        // Exhaustive enumeration of the 3x3 two-step sequences.
        let mut best = (f64::NEG_INFINITY, vec![]);
        for a in 0..3usize {
            let p1 = (table.dist)(&[])[a];
            if a == 0 {
                if p1.ln() > best.0 {
                    best = (p1.ln(), vec![0]);
                }
                continue;
            }
            for c in 0..3usize {
                let lp = p1.ln() + (table.dist)(&[a])[c].ln();
                if lp > best.0 {
                    best = (lp, vec![a, c]);
                }
            }
        }
        assert_eq!(best.1, b.tokens);
        assert!((b.log_prob - best.0).abs() < 1e-12);
    }

    #[test]
    fn forced_sequence_for_any_width() {
        let forced = [3usize, 1, 2, 0];
        let table = Table {
            classes: 4,
            dist: move |prefix: &[usize]| {
                let mut d = vec![0.0; 4];
                d[forced[prefix.len().min(3)]] = 1.0;
                d
            },
        };
        for k in 1..6 {
            let b = beam(&table, 0, k, 10).unwrap();
            assert_eq!(b.tokens, forced);
            assert!(b.finished);
            assert_eq!(b.log_prob, 0.0);
        }
        assert_eq!(greedy(&table, 0, 10).unwrap().tokens, forced);
    }

    #[test]
    fn stops_at_max_steps() {
        let table = Table {
            classes: 3,
            dist: |_: &[usize]| vec![0.1, 0.5, 0.4],
        };
        let g = greedy(&table, 0, 5).unwrap();
        assert_eq!(g.tokens, vec![1; 5]);
        assert!(!g.finished);
        let b = beam(&table, 0, 3, 5).unwrap();
        assert_eq!(b.tokens.len(), 5);
    }

    #[test]
    fn finished_hypotheses_compete_unexpanded() {
        // EOS at step one has 0.45; every continuation is worse than that.
        let table = Table {
            classes: 3,
            dist: |prefix: &[usize]| match prefix.len() {
                0 => vec![0.45, 0.3, 0.25],
                _ => vec![0.5, 0.25, 0.25],
            },
        };
        let b = beam(&table, 0, 4, 6).unwrap();
        assert_eq!(b.tokens, vec![0]);
        assert!(beam(&table, 0, 0, 6).is_err());
    }

    #[test]
    fn ties_prefer_lexicographically_smaller() {
        let table = Table {
            classes: 3,
            dist: |prefix: &[usize]| if prefix.is_empty() { vec![0.0, 0.5, 0.5] } else { vec![1.0, 0.0, 0.0] },
        };
        assert_eq!(beam(&table, 0, 2, 4).unwrap().tokens, vec![1, 0]);
        assert_eq!(greedy(&table, 0, 4).unwrap().tokens, vec![1, 0]);
    }
}
