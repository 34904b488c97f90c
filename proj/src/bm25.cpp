#include "legalir/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "legalir/errors.hpp"

namespace legalir {

using nlohmann::json;

Bm25Index Bm25Index::build(const std::vector<std::pair<std::string, TokenSeq>>& docs,
                           Bm25Params params) {
    if (docs.empty()) throw Error("bm25: cannot index an empty corpus (avg_doc_len undefined)");
    if (!(params.k1 > 0.0)) throw Error("bm25: k1 must be > 0");
    if (!(params.b >= 0.0 && params.b <= 1.0)) throw Error("bm25: b must be in [0, 1]");

    Bm25Index index;
    index.params_ = params;
    index.doc_ids_.reserve(docs.size());
    index.doc_len_.reserve(docs.size());

    double total_len = 0.0;
    for (const auto& [doc_id, tokens] : docs) {
        auto [it, inserted] =
            index.id_lookup_.emplace(doc_id, static_cast<std::uint32_t>(index.doc_ids_.size()));
        if (!inserted) throw Error("bm25: duplicate doc_id '" + doc_id + "'");
        std::uint32_t internal = it->second;
        index.doc_ids_.push_back(doc_id);
        index.doc_len_.push_back(static_cast<std::uint32_t>(tokens.size()));
        total_len += static_cast<double>(tokens.size());

        std::unordered_map<std::string, std::uint32_t> tf;
        for (const auto& t : tokens.tokens) ++tf[t];
        for (const auto& [term, count] : tf) {
            index.postings_[term].push_back({internal, count});
        }
    }
    index.avg_doc_len_ = total_len / static_cast<double>(docs.size());

    // Docs are inserted in order, but per-term postings must be sorted for
    // lookup by binary search and for deterministic accumulation.
    for (auto& [term, plist] : index.postings_) {
        std::sort(plist.begin(), plist.end(),
                  [](const Posting& a, const Posting& b) { return a.doc < b.doc; });
    }
    return index;
}

double Bm25Index::term_score(std::uint32_t tf, std::uint32_t doc_len, std::size_t df) const {
    double n = static_cast<double>(doc_count());
    double idf = std::log(1.0 + (n - static_cast<double>(df) + 0.5) / (static_cast<double>(df) + 0.5));
    double norm = avg_doc_len_ > 0.0 ? static_cast<double>(doc_len) / avg_doc_len_ : 0.0;
    double denom = static_cast<double>(tf) + params_.k1 * (1.0 - params_.b + params_.b * norm);
    return idf * (static_cast<double>(tf) * (params_.k1 + 1.0)) / denom;
}

double Bm25Index::score(const TokenSeq& query, const std::string& doc_id) const {
    auto it = id_lookup_.find(doc_id);
    if (it == id_lookup_.end()) throw Error("bm25: unknown doc_id '" + doc_id + "'");
    std::uint32_t internal = it->second;

    double total = 0.0;
    for (const auto& term : query.tokens) {
        auto pit = postings_.find(term);
        if (pit == postings_.end()) continue;
        const auto& plist = pit->second;
        auto pos = std::lower_bound(plist.begin(), plist.end(), internal,
                                    [](const Posting& p, std::uint32_t d) { return p.doc < d; });
        if (pos == plist.end() || pos->doc != internal) continue;
        total += term_score(pos->tf, doc_len_[internal], plist.size());
    }
    return total;
}

std::vector<ScoredHit> Bm25Index::top_k(const TokenSeq& query, std::size_t k) const {
    std::vector<double> scores(doc_ids_.size(), 0.0);
    std::vector<std::uint32_t> touched;

    // Accumulate query terms in sequence order so repeated terms count with
    // multiplicity and per-document sums are reproducible.
    for (const auto& term : query.tokens) {
        auto pit = postings_.find(term);
        if (pit == postings_.end()) continue;
        const auto& plist = pit->second;
        for (const Posting& p : plist) {
            if (scores[p.doc] == 0.0) touched.push_back(p.doc);
            scores[p.doc] += term_score(p.tf, doc_len_[p.doc], plist.size());
        }
    }

    std::vector<ScoredHit> hits;
    hits.reserve(touched.size());
    for (std::uint32_t doc : touched) {
        if (scores[doc] > 0.0) hits.push_back({doc_ids_[doc], scores[doc]});
    }
    std::sort(hits.begin(), hits.end(), [](const ScoredHit& a, const ScoredHit& b) {
        return a.score != b.score ? a.score > b.score : a.doc_id < b.doc_id;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

void Bm25Index::save(const std::filesystem::path& path) const {
    json doc;
    doc["format"] = "legalir-bm25";
    doc["version"] = 1;
    doc["k1"] = params_.k1;
    doc["b"] = params_.b;
    json docs = json::array();
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
        docs.push_back({{"id", doc_ids_[i]}, {"len", doc_len_[i]}});
    }
    doc["docs"] = std::move(docs);
    json postings = json::object();
    for (const auto& [term, plist] : postings_) {
        json lst = json::array();
        for (const Posting& p : plist) lst.push_back({p.doc, p.tf});
        postings[term] = std::move(lst);
    }
    doc["postings"] = std::move(postings);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("bm25: cannot write " + path.string());
    out << doc.dump() << "\n";
    if (!out) throw Error("bm25: failed writing " + path.string());
}

Bm25Index Bm25Index::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("bm25: cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw Error("bm25: malformed index file " + path.string() + ": " + e.what());
    }
    if (doc.value("format", "") != "legalir-bm25" || doc.value("version", 0) != 1) {
        throw Error("bm25: " + path.string() + " is not a version-1 legalir-bm25 file");
    }

    Bm25Index index;
    index.params_.k1 = doc.at("k1").get<double>();
    index.params_.b = doc.at("b").get<double>();
    double total_len = 0.0;
    for (const auto& d : doc.at("docs")) {
        std::string id = d.at("id").get<std::string>();
        std::uint32_t len = d.at("len").get<std::uint32_t>();
        index.id_lookup_.emplace(id, static_cast<std::uint32_t>(index.doc_ids_.size()));
        index.doc_ids_.push_back(std::move(id));
        index.doc_len_.push_back(len);
        total_len += static_cast<double>(len);
    }
    if (index.doc_ids_.empty()) throw Error("bm25: index file has no documents");
    index.avg_doc_len_ = total_len / static_cast<double>(index.doc_ids_.size());
    for (const auto& [term, lst] : doc.at("postings").items()) {
        auto& plist = index.postings_[term];
        for (const auto& p : lst) {
            plist.push_back({p.at(0).get<std::uint32_t>(), p.at(1).get<std::uint32_t>()});
        }
    }
    return index;
}

}  // namespace legalir
