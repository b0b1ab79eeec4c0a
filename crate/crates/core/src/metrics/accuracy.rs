//! Token and sentence accuracy.

use serde::{Deserialize, Serialize};

use super::MetricsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyResult {
    pub token_accuracy: f64,
    pub sentence_accuracy: f64,
    pub token_count: usize,
    pub sentence_count: usize,
}

/// Correct tokens, total tokens, fully correct sentences.
fn tally<G, P>(gold: &[Vec<G>], pred: &[Vec<P>]) -> Result<(usize, usize, usize), MetricsError>
where
    G: AsRef<str>,
    P: AsRef<str>,
{
    if gold.len() != pred.len() {
        return Err(MetricsError::Alignment {
            sentence: gold.len().min(pred.len()),
            message: format!("{} gold sentences, {} predicted", gold.len(), pred.len()),
        });
    }
    let (mut correct, mut total, mut exact) = (0, 0, 0);
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.len() != p.len() {
            return Err(MetricsError::Alignment {
                sentence: i,
                message: format!("{} gold tokens, {} predicted", g.len(), p.len()),
            });
        }
        let hits = g
            .iter()
            .zip(p)
            .filter(|(a, b)| a.as_ref() == b.as_ref())
            .count();
        correct += hits;
        total += g.len();
        exact += usize::from(hits == g.len());
    }
    if total == 0 {
        return Err(MetricsError::EmptyInput);
    }
    Ok((correct, total, exact))
}

pub fn token_accuracy<G, P>(gold: &[Vec<G>], pred: &[Vec<P>]) -> Result<f64, MetricsError>
where
    G: AsRef<str>,
    P: AsRef<str>,
{
    let (correct, total, _) = tally(gold, pred)?;
    Ok(correct as f64 / total as f64)
}

pub fn sentence_accuracy<G, P>(gold: &[Vec<G>], pred: &[Vec<P>]) -> Result<f64, MetricsError>
where
    G: AsRef<str>,
    P: AsRef<str>,
{
    let (_, _, exact) = tally(gold, pred)?;
    Ok(exact as f64 / gold.len() as f64)
}

pub fn accuracy<G, P>(gold: &[Vec<G>], pred: &[Vec<P>]) -> Result<AccuracyResult, MetricsError>
where
    G: AsRef<str>,
    P: AsRef<str>,
{
    let (correct, total, exact) = tally(gold, pred)?;
    Ok(AccuracyResult {
        token_accuracy: correct as f64 / total as f64,
        sentence_accuracy: exact as f64 / gold.len() as f64,
        token_count: total,
        sentence_count: gold.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seqs(rows: &[&str]) -> Vec<Vec<String>> {
        rows.iter()
            .map(|r| r.split_whitespace().map(str::to_string).collect())
            .collect()
    }

    #[test]
    fn identity_is_one() {
        let gold = seqs(&["N V D", "N"]);
        assert_eq!(token_accuracy(&gold, &gold).unwrap(), 1.0);
        assert_eq!(sentence_accuracy(&gold, &gold).unwrap(), 1.0);
    }

    #[test]
    fn all_wrong_is_zero() {
        let gold = seqs(&["N V", "D"]);
        let pred = seqs(&["V N", "N"]);
        assert_eq!(token_accuracy(&gold, &pred).unwrap(), 0.0);
        assert_eq!(sentence_accuracy(&gold, &pred).unwrap(), 0.0);
    }

    #[test]
    fn two_of_three() {
        let r = accuracy(&seqs(&["N V D"]), &seqs(&["N N D"])).unwrap();
        assert_eq!(r.token_accuracy, 2.0 / 3.0);
        assert_eq!(r.sentence_accuracy, 0.0);
        assert_eq!((r.token_count, r.sentence_count), (3, 1));
    }

    #[test]
    fn one_error_per_sentence() {
        let gold = seqs(&["N V", "D N"]);
        let pred = seqs(&["N N", "N N"]);
        assert_eq!(sentence_accuracy(&gold, &pred).unwrap(), 0.0);
    }

    #[test]
    fn half_sentences_right() {
        let gold = seqs(&["N V", "D N"]);
        let pred = seqs(&["N V", "N N"]);
        assert_eq!(sentence_accuracy(&gold, &pred).unwrap(), 0.5);
    }

    #[test]
    fn misalignment_names_sentence() {
        let err = token_accuracy(&seqs(&["N", "N V"]), &seqs(&["N", "N"])).unwrap_err();
        assert!(matches!(err, MetricsError::Alignment { sentence: 1, .. }));
        let err = token_accuracy(&seqs(&["N", "N"]), &seqs(&["N"])).unwrap_err();
        assert!(matches!(err, MetricsError::Alignment { sentence: 1, .. }));
    }

    #[test]
    fn empty_input_is_error() {
        let none: Vec<Vec<String>> = Vec::new();
        assert!(matches!(
            token_accuracy(&none, &none),
            Err(MetricsError::EmptyInput)
        ));
    }
}
