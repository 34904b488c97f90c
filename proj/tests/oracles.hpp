#pragma once

// Test-side reference implementations, deliberately independent of the
// library's data paths: the BM25 oracle scores documents by scanning them
// directly, and the LM oracle recounts every order from scratch into
// string-keyed maps.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace oracle {

using Doc = std::pair<std::string, std::vector<std::string>>;

inline double bm25_score(const std::vector<Doc>& docs, std::size_t doc_index,
                         const std::vector<std::string>& query, double k1, double b) {
    double n = static_cast<double>(docs.size());
    double avgdl = 0.0;
    for (const Doc& d : docs) avgdl += static_cast<double>(d.second.size());
    avgdl /= n;

    const auto& tokens = docs[doc_index].second;
    double score = 0.0;
    for (const std::string& term : query) {
        std::size_t tf = 0;
        for (const auto& t : tokens) tf += t == term;
        if (tf == 0) continue;
        std::size_t df = 0;
        for (const Doc& d : docs) {
            for (const auto& t : d.second) {
                if (t == term) {
                    ++df;
                    break;
                }
            }
        }
        double idf =
            std::log(1.0 + (n - static_cast<double>(df) + 0.5) / (static_cast<double>(df) + 0.5));
        double norm = avgdl > 0.0 ? static_cast<double>(tokens.size()) / avgdl : 0.0;
        score += idf * (static_cast<double>(tf) * (k1 + 1.0)) /
                 (static_cast<double>(tf) + k1 * (1.0 - b + b * norm));
    }
    return score;
}

inline std::vector<std::pair<std::string, double>> bm25_top_k(const std::vector<Doc>& docs,
                                                              const std::vector<std::string>& query,
                                                              std::size_t k, double k1, double b) {
    std::vector<std::pair<std::string, double>> hits;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        double s = bm25_score(docs, i, query, k1, b);
        if (s > 0.0) hits.emplace_back(docs[i].first, s);
    }
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b2) {
        return a.second != b2.second ? a.second > b2.second : a.first < b2.first;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

/// Interpolated absolute-discounting n-gram scorer over string-keyed counts.
/// Each order is counted by direct m-gram extraction rather than marginals.
class NGramOracle {
public:
    NGramOracle(const std::vector<std::vector<std::string>>& sentences, std::size_t order,
                double discount, std::uint64_t unk_threshold)
        : order_(order), discount_(discount) {
        std::map<std::string, std::uint64_t> freq;
        for (const auto& s : sentences) {
            for (const auto& t : s) ++freq[t];
        }
        vocab_ = {"<unk>", "<s>", "</s>"};
        for (const auto& [t, c] : freq) {
            if (c >= unk_threshold && t != "<unk>" && t != "<s>" && t != "</s>") vocab_.insert(t);
        }

        counts_.resize(order_);
        totals_.resize(order_);
        for (const auto& s : sentences) {
            std::vector<std::string> mapped;
            for (const auto& t : s) mapped.push_back(map_token(t));
            mapped.push_back("</s>");
            for (std::size_t m = 0; m < order_; ++m) {
                std::vector<std::string> padded(m, "<s>");
                padded.insert(padded.end(), mapped.begin(), mapped.end());
                for (std::size_t j = m; j < padded.size(); ++j) {
                    std::string ctx = join(padded, j - m, m);
                    ++counts_[m][ctx][padded[j]];
                    ++totals_[m][ctx];
                }
            }
        }
    }

    double prob(const std::vector<std::string>& context, const std::string& word) const {
        std::vector<std::string> mapped;
        for (const auto& t : context) mapped.push_back(map_token(t));
        return prob_mapped(mapped, map_token(word));
    }

    double sentence_log_prob(const std::vector<std::string>& sentence) const {
        std::vector<std::string> padded(order_ - 1, "<s>");
        for (const auto& t : sentence) padded.push_back(map_token(t));
        padded.push_back("</s>");
        double sum = 0.0;
        for (std::size_t j = order_ - 1; j < padded.size(); ++j) {
            std::vector<std::string> ctx(padded.begin() + (j - (order_ - 1)), padded.begin() + j);
            sum += std::log(prob_mapped(ctx, padded[j]));
        }
        return sum;
    }

    double perplexity(const std::vector<std::string>& sentence) const {
        return std::exp(-sentence_log_prob(sentence) / static_cast<double>(sentence.size() + 1));
    }

    const std::set<std::string>& vocab() const { return vocab_; }

private:
    std::string map_token(const std::string& t) const {
        return vocab_.count(t) ? t : std::string("<unk>");
    }

    static std::string join(const std::vector<std::string>& tokens, std::size_t begin,
                            std::size_t count) {
        std::string out;
        for (std::size_t i = 0; i < count; ++i) {
            out += tokens[begin + i];
            out.push_back('\x01');
        }
        return out;
    }

    double prob_mapped(const std::vector<std::string>& context, const std::string& word) const {
        std::size_t m = context.size();
        if (m == 0) {
            std::uint64_t c = 0;
            std::uint64_t total = 0;
            auto it = counts_[0].find("");
            if (it != counts_[0].end()) {
                if (auto w = it->second.find(word); w != it->second.end()) c = w->second;
                total = totals_[0].at("");
            }
            return (static_cast<double>(c) + 1.0) /
                   (static_cast<double>(total) + static_cast<double>(vocab_.size()));
        }
        std::string key = join(context, 0, m);
        std::vector<std::string> shorter(context.begin() + 1, context.end());
        auto it = counts_[m].find(key);
        if (it == counts_[m].end()) return prob_mapped(shorter, word);

        double total = static_cast<double>(totals_[m].at(key));
        std::uint64_t c = 0;
        if (auto w = it->second.find(word); w != it->second.end()) c = w->second;
        double discounted = std::max(static_cast<double>(c) - discount_, 0.0) / total;
        double lambda = discount_ * static_cast<double>(it->second.size()) / total;
        return discounted + lambda * prob_mapped(shorter, word);
    }

    std::size_t order_;
    double discount_;
    std::set<std::string> vocab_;
    std::vector<std::unordered_map<std::string, std::map<std::string, std::uint64_t>>> counts_;
    std::vector<std::unordered_map<std::string, std::uint64_t>> totals_;
};

}  // namespace oracle
