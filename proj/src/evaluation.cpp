#include "legalir/evaluation.hpp"

#include <algorithm>

#include "legalir/errors.hpp"

namespace legalir {

std::pair<double, double> prf(const std::set<ArticleRef>& predicted,
                              const std::set<ArticleRef>& gold) {
    if (predicted.empty() && gold.empty()) return {1.0, 1.0};

    std::size_t overlap = 0;
    for (const ArticleRef& p : predicted) overlap += gold.count(p);

    double precision =
        predicted.empty() ? 0.0 : static_cast<double>(overlap) / static_cast<double>(predicted.size());
    double recall =
        gold.empty() ? 0.0 : static_cast<double>(overlap) / static_cast<double>(gold.size());
    return {precision, recall};
}

double f_beta(double precision, double recall, double beta) {
    if (!(beta > 0.0)) throw Error("f_beta: beta must be > 0");
    double b2 = beta * beta;
    double denom = b2 * precision + recall;
    if (denom == 0.0) return 0.0;
    return (1.0 + b2) * precision * recall / denom;
}

EvalReport evaluate_run(const std::map<std::string, std::set<ArticleRef>>& predictions,
                        const std::vector<Question>& gold) {
    std::set<std::string> known;
    for (const Question& q : gold) known.insert(q.question_id);
    for (const auto& [qid, _] : predictions) {
        if (known.find(qid) == known.end()) {
            throw Error("evaluate_run: prediction references unknown question_id '" + qid + "'");
        }
    }

    EvalReport report;
    report.per_query.reserve(gold.size());
    double sum_p = 0.0;
    double sum_r = 0.0;
    double sum_f1 = 0.0;
    double sum_f2 = 0.0;
    for (const Question& q : gold) {
        static const std::set<ArticleRef> kEmpty;
        auto it = predictions.find(q.question_id);
        const std::set<ArticleRef>& pred = it == predictions.end() ? kEmpty : it->second;

        PerQueryEval row;
        row.question_id = q.question_id;
        std::tie(row.precision, row.recall) = prf(pred, q.relevant);
        row.f1 = f_beta(row.precision, row.recall, 1.0);
        row.f2 = f_beta(row.precision, row.recall, 2.0);
        row.empty_prediction = pred.empty();
        row.empty_gold = q.relevant.empty();
        if (row.empty_prediction) ++report.empty_prediction_count;
        if (row.empty_gold) ++report.empty_gold_count;
        sum_p += row.precision;
        sum_r += row.recall;
        sum_f1 += row.f1;
        sum_f2 += row.f2;
        report.per_query.push_back(std::move(row));
    }

    double n = static_cast<double>(gold.size());
    if (!gold.empty()) {
        report.macro_precision = sum_p / n;
        report.macro_recall = sum_r / n;
        report.macro_f1 = sum_f1 / n;
        report.macro_f2 = sum_f2 / n;
    }
    return report;
}

double answer_f1(const std::string& predicted, const std::string& gold) {
    NormalizationConfig cfg;  // lowercase + punctuation strip, no stopword removal
    TokenSeq pred_tokens = tokenize(normalize(predicted, cfg));
    TokenSeq gold_tokens = tokenize(normalize(gold, cfg));

    if (pred_tokens.empty() && gold_tokens.empty()) return 1.0;
    if (pred_tokens.empty() || gold_tokens.empty()) return 0.0;

    std::unordered_map<std::string, std::size_t> gold_counts;
    for (const auto& t : gold_tokens.tokens) ++gold_counts[t];
    std::size_t overlap = 0;
    for (const auto& t : pred_tokens.tokens) {
        auto it = gold_counts.find(t);
        if (it != gold_counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;

    double p = static_cast<double>(overlap) / static_cast<double>(pred_tokens.size());
    double r = static_cast<double>(overlap) / static_cast<double>(gold_tokens.size());
    return 2.0 * p * r / (p + r);
}

}  // namespace legalir
