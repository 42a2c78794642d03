use serde::{Deserialize, Serialize};

use crate::model::CompressionConfig;

/// Removal budgets of one compression call, in tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetPlan {
    /// Tokens to remove from the whole prompt.
    pub e_comp: usize,
    /// Share removed by dropping whole chunks.
    pub e_chunk: usize,
    /// Share removed by dropping sentences inside kept chunks.
    pub e_sent: usize,
    /// Sentence budget of each kept chunk, in selection order.
    pub per_chunk_budgets: Vec<usize>,
}

/// `E_comp = max(0, |P| - T)`, split as `E_chunk = round(rho * E_comp)` and
/// `E_sent = E_comp - E_chunk`.
pub fn plan_budgets(original_tokens: usize, config: &CompressionConfig) -> BudgetPlan {
    let e_comp = original_tokens.saturating_sub(config.target_tokens);
    let e_chunk = ((config.rho * e_comp as f64).round() as usize).min(e_comp);
    BudgetPlan {
        e_comp,
        e_chunk,
        e_sent: e_comp - e_chunk,
        per_chunk_budgets: Vec::new(),
    }
}

/// Real-valued share of the sentence budget for each chunk, proportional to
/// `(1 / max(score, epsilon))^gamma`.
pub fn sentence_budget_shares(scores: &[f64], gamma: f64, epsilon: f64) -> Vec<f64> {
    if scores.is_empty() {
        return Vec::new();
    }
    // Log domain keeps large gamma and tiny scores from overflowing.
    let logs: Vec<f64> = scores.iter().map(|&c| -gamma * c.max(epsilon).ln()).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

/// Integer per-chunk sentence budgets summing to `e_sent` exactly: floor of
/// each real quota, then one extra token to the largest fractional parts
/// (ties to the lower index).
pub fn allocate_sentence_budgets(scores: &[f64], e_sent: usize, gamma: f64, epsilon: f64) -> Vec<usize> {
    let shares = sentence_budget_shares(scores, gamma, epsilon);
    if shares.is_empty() {
        return Vec::new();
    }
    let quotas: Vec<f64> = shares
        .iter()
        .map(|s| {
            let q = s * e_sent as f64;
            // Pull values a rounding error away from an integer onto it.
            let r = q.round();
            if (q - r).abs() <= 1e-10 * r.max(1.0) {
                r
            } else {
                q
            }
        })
        .collect();
    let mut budgets: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let fractions: Vec<f64> = quotas.iter().zip(&budgets).map(|(q, &b)| q - b as f64).collect();

    let assigned: usize = budgets.iter().sum();
    let mut by_fraction: Vec<usize> = (0..budgets.len()).collect();
    if assigned <= e_sent {
        by_fraction.sort_by(|&a, &b| fractions[b].total_cmp(&fractions[a]).then(a.cmp(&b)));
        for &i in by_fraction.iter().cycle().take(e_sent - assigned) {
            budgets[i] += 1;
        }
    } else {
        by_fraction.sort_by(|&a, &b| fractions[a].total_cmp(&fractions[b]).then(b.cmp(&a)));
        let mut excess = assigned - e_sent;
        for &i in by_fraction.iter().cycle() {
            if excess == 0 {
                break;
            }
            if budgets[i] > 0 {
                budgets[i] -= 1;
                excess -= 1;
            }
        }
    }
    budgets
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn removal_budget() {
        let plan = plan_budgets(3018, &CompressionConfig::with_target(500));
        assert_eq!(plan.e_comp, 2518);
        assert_eq!(plan.e_chunk + plan.e_sent, 2518);
        assert_eq!(plan_budgets(400, &CompressionConfig::with_target(500)).e_comp, 0);
    }

    #[test]
    fn default_rho_split() {
        let plan = plan_budgets(600, &CompressionConfig::with_target(500));
        assert_eq!((plan.e_chunk, plan.e_sent), (80, 20));
    }

    #[test]
    fn gamma_zero_is_uniform() {
        assert_eq!(allocate_sentence_budgets(&[0.9, 0.1, 0.4, 0.0], 100, 0.0, 1e-12), [25, 25, 25, 25]);
    }

    #[test]
    fn inverse_score_shares() {
        assert_eq!(allocate_sentence_budgets(&[0.2, 0.1], 30, 1.0, 1e-12), [10, 20]);
        assert_eq!(allocate_sentence_budgets(&[0.2, 0.1], 31, 1.0, 1e-12), [10, 21]);
    }

    #[test]
    fn remainder_ties_go_to_lower_index() {
        assert_eq!(allocate_sentence_budgets(&[1.0, 1.0, 1.0], 5, 1.0, 1e-12), [2, 2, 1]);
    }

    #[test]
    fn zero_score_is_floored() {
        let b = allocate_sentence_budgets(&[0.0, 0.5], 1000, 1.0, 1e-12);
        assert_eq!(b, [1000, 0]);
    }

    #[test]
    fn empty_input() {
        assert!(allocate_sentence_budgets(&[], 10, 1.0, 1e-12).is_empty());
    }
}
