#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "legalir/dataset.hpp"
#include "legalir/text_normalize.hpp"

namespace legalir {

/// precision = |pred ∩ gold| / |pred| (0 when pred is empty);
/// recall = |pred ∩ gold| / |gold| (0 when gold is empty but pred is not);
/// both empty -> precision = recall = 1.
std::pair<double, double> prf(const std::set<ArticleRef>& predicted,
                              const std::set<ArticleRef>& gold);

/// (1 + beta^2) * p * r / (beta^2 * p + r), 0 when the denominator is 0.
/// Throws when beta <= 0.
double f_beta(double precision, double recall, double beta);

struct PerQueryEval {
    std::string question_id;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double f2 = 0.0;
    bool empty_prediction = false;
    bool empty_gold = false;
};

struct EvalReport {
    std::vector<PerQueryEval> per_query;  // one row per gold question, gold order
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double macro_f2 = 0.0;
    std::size_t empty_prediction_count = 0;
    std::size_t empty_gold_count = 0;
};

/// Macro metrics are unweighted means over all gold questions; questions
/// missing from the predictions count as empty sets. Predictions referencing
/// an unknown question_id raise an error.
EvalReport evaluate_run(const std::map<std::string, std::set<ArticleRef>>& predictions,
                        const std::vector<Question>& gold);

/// Token-multiset overlap F1 over normalized text (lowercased,
/// punctuation-stripped, no stopword removal). Both empty -> 1.
double answer_f1(const std::string& predicted, const std::string& gold);

}  // namespace legalir
