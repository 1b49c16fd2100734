#include "benchup/contamination.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "benchup/errors.hpp"
#include "benchup/util.hpp"

namespace benchup {

using Json = nlohmann::json;

TokenSeq TokenSeq::tokenize(std::string_view text) {
    TokenSeq seq;
    std::string current;
    for (char c : text) {
        const auto uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc) || uc >= 0x80) {
            current.push_back(static_cast<char>(std::tolower(uc)));
        } else if (!current.empty()) {
            seq.tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) seq.tokens.push_back(std::move(current));
    return seq;
}

namespace {

/// DFS state for the chunk-minimizing matcher. Candidate positions are
/// visited in order; the only branching happens at words that occur more
/// than once on either side.
class ChunkMinimizer {
public:
    ChunkMinimizer(const TokenSeq& candidate, const TokenSeq& reference) {
        std::unordered_map<std::string, int> ids;
        auto intern = [&ids](const std::string& w) {
            auto [it, inserted] = ids.emplace(w, static_cast<int>(ids.size()));
            return it->second;
        };
        cand_.reserve(candidate.size());
        for (const auto& w : candidate.tokens) cand_.push_back(intern(w));
        ref_.reserve(reference.size());
        for (const auto& w : reference.tokens) ref_.push_back(intern(w));

        ref_positions_.resize(ids.size());
        for (std::size_t j = 0; j < ref_.size(); ++j) ref_positions_[ref_[j]].push_back(j);

        std::vector<std::size_t> cand_count(ids.size(), 0);
        for (int w : cand_) ++cand_count[w];
        quota_.resize(ids.size(), 0);
        for (std::size_t w = 0; w < ids.size(); ++w) {
            quota_[w] = std::min(cand_count[w], ref_positions_[w].size());
            total_matches_ += quota_[w];
        }

        // rem_cand_[i][only for word at i]: candidate occurrences of cand_[i]
        // at positions >= i. Computed per word by a backward sweep.
        rem_cand_.resize(cand_.size(), 0);
        std::vector<std::size_t> running(ids.size(), 0);
        for (std::size_t i = cand_.size(); i-- > 0;) {
            rem_cand_[i] = ++running[cand_[i]];
        }

        ref_used_.assign(ref_.size(), false);
        matched_.assign(ids.size(), 0);
        current_.reserve(total_matches_);
    }

    Alignment run() {
        best_chunks_ = total_matches_ + 1;
        if (total_matches_ > 0) dfs(0, 0, kNoPrev, kNoPrev);
        Alignment result;
        result.pairs = std::move(best_pairs_);
        result.chunk_count = result.pairs.empty() ? 0 : best_chunks_;
        return result;
    }

    std::size_t total_matches() const { return total_matches_; }

private:
    static constexpr std::size_t kNoPrev = static_cast<std::size_t>(-1);
    static constexpr std::size_t kNodeBudget = 4'000'000;

    void dfs(std::size_t i, std::size_t chunks, std::size_t prev_cand, std::size_t prev_ref) {
        if (chunks >= best_chunks_ || nodes_ > kNodeBudget) return;
        ++nodes_;
        if (i == cand_.size()) {
            best_chunks_ = chunks;
            best_pairs_ = current_;
            return;
        }
        const int w = cand_[i];
        const std::size_t need = quota_[w] - matched_[w];

        if (need > 0) {
            const auto& positions = ref_positions_[w];
            auto try_match = [&](std::size_t j) {
                ref_used_[j] = true;
                ++matched_[w];
                current_.emplace_back(i, j);
                const bool continues =
                    prev_cand != kNoPrev && i == prev_cand + 1 && j == prev_ref + 1;
                dfs(i + 1, continues ? chunks : chunks + 1, i, j);
                current_.pop_back();
                --matched_[w];
                ref_used_[j] = false;
            };
            // Try continuing the current chunk first so the greedy dive finds
            // a tight bound early.
            const bool can_continue = prev_cand != kNoPrev && i == prev_cand + 1 &&
                                      prev_ref + 1 < ref_.size() && ref_[prev_ref + 1] == w &&
                                      !ref_used_[prev_ref + 1];
            if (can_continue) try_match(prev_ref + 1);
            for (std::size_t j : positions) {
                if (ref_used_[j]) continue;
                if (can_continue && j == prev_ref + 1) continue;  // already tried
                try_match(j);
            }
        }
        // Leaving position i unmatched is legal only when the word's quota
        // stays reachable from the remaining occurrences.
        if (rem_cand_[i] - 1 >= need) {
            dfs(i + 1, chunks, prev_cand, prev_ref);
        }
    }

    std::vector<int> cand_;
    std::vector<int> ref_;
    std::vector<std::vector<std::size_t>> ref_positions_;
    std::vector<std::size_t> quota_;
    std::vector<std::size_t> rem_cand_;
    std::vector<bool> ref_used_;
    std::vector<std::size_t> matched_;
    std::vector<std::pair<std::size_t, std::size_t>> current_;
    std::vector<std::pair<std::size_t, std::size_t>> best_pairs_;
    std::size_t best_chunks_ = 0;
    std::size_t total_matches_ = 0;
    std::size_t nodes_ = 0;
};

}  // namespace

Alignment meteor_align(const TokenSeq& candidate, const TokenSeq& reference) {
    if (candidate.empty() || reference.empty()) return {};
    ChunkMinimizer minimizer(candidate, reference);
    return minimizer.run();
}

double meteor_score(const TokenSeq& candidate, const TokenSeq& reference) {
    if (candidate.empty() || reference.empty()) return 0.0;
    Alignment alignment = meteor_align(candidate, reference);
    const double m = static_cast<double>(alignment.pairs.size());
    if (m == 0.0) return 0.0;
    const double precision = m / static_cast<double>(candidate.size());
    const double recall = m / static_cast<double>(reference.size());
    const double fmean = 10.0 * precision * recall / (recall + 9.0 * precision);
    const double frag = static_cast<double>(alignment.chunk_count) / m;
    const double penalty = 0.5 * frag * frag * frag;
    return fmean * (1.0 - penalty);
}

double meteor_score(std::string_view candidate, std::string_view reference) {
    return meteor_score(TokenSeq::tokenize(candidate), TokenSeq::tokenize(reference));
}

// ---------------------------------------------------------------------------
// Corpus + classification
// ---------------------------------------------------------------------------

std::string_view to_string(CorpusSource source) {
    switch (source) {
        case CorpusSource::Benchmark: return "benchmark";
        case CorpusSource::InstructionTuning: return "instruction_tuning";
        case CorpusSource::Web: return "web";
    }
    return "benchmark";
}

std::optional<CorpusSource> corpus_source_from_string(std::string_view name) {
    if (name == "benchmark") return CorpusSource::Benchmark;
    if (name == "instruction_tuning" || name == "ift") return CorpusSource::InstructionTuning;
    if (name == "web") return CorpusSource::Web;
    return std::nullopt;
}

std::string_view to_string(ContaminationKind kind) {
    switch (kind) {
        case ContaminationKind::Clean: return "clean";
        case ContaminationKind::InputDirty: return "input_dirty";
        case ContaminationKind::InputLabelDirty: return "input_label_dirty";
    }
    return "clean";
}

std::vector<CorpusDoc> read_corpus_manifest(std::string_view bytes) {
    std::vector<CorpusDoc> docs;
    auto lines = split_lines(bytes);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        Json j;
        try {
            j = Json::parse(lines[i]);
        } catch (const Json::parse_error& e) {
            throw FormatError("corpus line " + std::to_string(i + 1) + " is not valid JSON: " +
                              e.what());
        }
        CorpusDoc doc;
        doc.doc_id = j.at("doc_id").get<std::string>();
        auto source = corpus_source_from_string(j.value("source", "benchmark"));
        if (!source) throw FormatError("corpus doc " + doc.doc_id + " has unknown source");
        doc.source = *source;
        doc.input_text = j.at("input_text").get<std::string>();
        if (trim(doc.input_text).empty()) {
            throw FormatError("corpus doc " + doc.doc_id + " has empty input_text");
        }
        if (j.contains("label_text") && !j.at("label_text").is_null()) {
            doc.label_text = j.at("label_text").get<std::string>();
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

namespace {

std::vector<std::pair<std::string, std::size_t>> token_histogram(const TokenSeq& tokens) {
    std::vector<std::string> sorted = tokens.tokens;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::pair<std::string, std::size_t>> histogram;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        histogram.emplace_back(sorted[i], j - i);
        i = j;
    }
    return histogram;
}

}  // namespace

CorpusIndex::CorpusIndex(std::vector<CorpusDoc> docs) : docs_(std::move(docs)) {
    doc_tokens_.reserve(docs_.size());
    for (std::size_t i = 0; i < docs_.size(); ++i) {
        doc_tokens_.push_back(TokenSeq::tokenize(docs_[i].input_text));
        for (const auto& [token, count] : token_histogram(doc_tokens_.back())) {
            postings_[token].emplace_back(i, count);
        }
    }
}

std::vector<std::size_t> CorpusIndex::candidate_docs(const TokenSeq& query, std::size_t k) const {
    if (query.empty() || k == 0) return {};
    std::unordered_map<std::size_t, std::size_t> shared;
    for (const auto& [token, count] : token_histogram(query)) {
        auto it = postings_.find(token);
        if (it == postings_.end()) continue;
        for (const auto& [doc, doc_count] : it->second) ++shared[doc];
    }
    std::vector<std::pair<std::size_t, std::size_t>> ranked(shared.begin(), shared.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > k) ranked.resize(k);
    std::vector<std::size_t> out;
    out.reserve(ranked.size());
    for (const auto& [doc, count] : ranked) out.push_back(doc);
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> CorpusIndex::match_counts(
    const TokenSeq& query) const {
    std::unordered_map<std::size_t, std::size_t> matches;
    for (const auto& [token, count] : token_histogram(query)) {
        auto it = postings_.find(token);
        if (it == postings_.end()) continue;
        for (const auto& [doc, doc_count] : it->second) {
            matches[doc] += std::min(count, doc_count);
        }
    }
    return {matches.begin(), matches.end()};
}

namespace {

std::string sample_answer_text(const Sample& sample) {
    return sample.answer.correct_text();
}

ContaminationLabel classify_against(const Sample& sample, const std::vector<CorpusDoc>& docs,
                                    const std::vector<const TokenSeq*>& doc_tokens,
                                    const std::vector<std::size_t>& doc_indices,
                                    double threshold) {
    const TokenSeq input_tokens = TokenSeq::tokenize(sample.input_text);
    const std::string answer = sample_answer_text(sample);
    const TokenSeq answer_tokens = TokenSeq::tokenize(answer);

    ContaminationLabel label;
    double best_input = 0.0;
    std::size_t best_doc = 0;
    bool have_best = false;
    bool any_input_dirty = false;
    bool any_label_dirty = false;

    for (std::size_t n = 0; n < doc_indices.size(); ++n) {
        const std::size_t d = doc_indices[n];
        const CorpusDoc& doc = docs[d];
        const double input_score = meteor_score(input_tokens, *doc_tokens[n]);
        if (input_score > best_input || !have_best) {
            best_input = input_score;
            best_doc = d;
            have_best = input_score > 0.0;
        }
        if (input_score >= threshold) {
            any_input_dirty = true;
            const TokenSeq label_side = doc.label_text ? TokenSeq::tokenize(*doc.label_text)
                                                       : *doc_tokens[n];
            if (meteor_score(answer_tokens, label_side) >= threshold) {
                any_label_dirty = true;
            }
        }
    }

    if (any_label_dirty) {
        label.value = ContaminationKind::InputLabelDirty;
    } else if (any_input_dirty) {
        label.value = ContaminationKind::InputDirty;
    } else {
        label.value = ContaminationKind::Clean;
    }

    if (have_best) {
        BestMatch match;
        match.doc_id = docs[best_doc].doc_id;
        match.input_score = best_input;
        match.compared_against_label_text = docs[best_doc].label_text.has_value();
        const TokenSeq label_side = docs[best_doc].label_text
                                        ? TokenSeq::tokenize(*docs[best_doc].label_text)
                                        : TokenSeq::tokenize(docs[best_doc].input_text);
        match.label_score = meteor_score(answer_tokens, label_side);
        label.best_match = match;
    }
    return label;
}

}  // namespace

ContaminationLabel classify_sample(const Sample& sample, const std::vector<CorpusDoc>& corpus,
                                   double threshold) {
    std::vector<TokenSeq> tokens;
    tokens.reserve(corpus.size());
    std::vector<const TokenSeq*> token_ptrs;
    std::vector<std::size_t> indices;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        tokens.push_back(TokenSeq::tokenize(corpus[i].input_text));
    }
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        token_ptrs.push_back(&tokens[i]);
        indices.push_back(i);
    }
    return classify_against(sample, corpus, token_ptrs, indices, threshold);
}

ContaminationLabel classify_sample(const Sample& sample, const CorpusIndex& index,
                                   const ClassifyOptions& options) {
    const auto& docs = index.docs();
    const TokenSeq query = TokenSeq::tokenize(sample.input_text);

    auto classify_subset = [&](const std::vector<std::size_t>& subset) {
        std::vector<const TokenSeq*> token_ptrs;
        token_ptrs.reserve(subset.size());
        for (std::size_t d : subset) token_ptrs.push_back(&index.doc_tokens(d));
        return classify_against(sample, docs, token_ptrs, subset, options.threshold);
    };

    std::vector<std::size_t> all(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) all[i] = i;

    if (options.index_k == 0 || options.index_k >= docs.size()) {
        return classify_subset(all);
    }

    // Rank sharing docs by an upper bound on their METEOR score: the exact
    // maximum match count m caps the F-mean, and the fragmentation penalty
    // only lowers the score. Scoring in bound order makes it provable when
    // the remaining docs can neither flip the label nor move the evidence.
    auto counts = index.match_counts(query);
    struct Bounded {
        std::size_t doc;
        double upper;
    };
    std::vector<Bounded> ranked;
    ranked.reserve(counts.size());
    for (const auto& [doc, m] : counts) {
        const std::size_t doc_len = index.doc_tokens(doc).size();
        if (m == 0 || doc_len == 0 || query.empty()) continue;
        const double precision = static_cast<double>(m) / static_cast<double>(query.size());
        const double recall = static_cast<double>(m) / static_cast<double>(doc_len);
        ranked.push_back({doc, 10.0 * precision * recall / (recall + 9.0 * precision)});
    }
    std::sort(ranked.begin(), ranked.end(), [](const Bounded& a, const Bounded& b) {
        if (a.upper != b.upper) return a.upper > b.upper;
        return a.doc < b.doc;
    });

    const std::size_t scored = std::min(options.index_k, ranked.size());
    std::vector<std::size_t> shortlist;
    shortlist.reserve(scored);
    for (std::size_t i = 0; i < scored; ++i) shortlist.push_back(ranked[i].doc);
    std::sort(shortlist.begin(), shortlist.end());  // full-scan tie-break order

    ContaminationLabel label = classify_subset(shortlist);
    const double best = label.best_match ? label.best_match->input_score : 0.0;
    const double next_upper = scored < ranked.size() ? ranked[scored].upper : 0.0;

    const bool unscored_could_matter =
        next_upper >= options.threshold || (next_upper > 0.0 && next_upper >= best);
    const bool near_threshold = std::abs(best - options.threshold) <= options.full_scan_margin;
    if (unscored_could_matter || near_threshold) {
        return classify_subset(all);
    }
    return label;
}

ContaminationReport build_report(const DatasetSnapshot& snapshot,
                                 const std::vector<CorpusDoc>& corpus, double threshold) {
    ContaminationReport report;
    report.dataset = snapshot.task.task_id;
    report.threshold = threshold;
    report.total = snapshot.samples.size();

    CorpusIndex index(corpus);
    ClassifyOptions options;
    options.threshold = threshold;
    for (const Sample& sample : snapshot.samples) {
        ContaminationLabel label = classify_sample(sample, index, options);
        switch (label.value) {
            case ContaminationKind::Clean: ++report.clean; break;
            case ContaminationKind::InputDirty: ++report.input_dirty; break;
            case ContaminationKind::InputLabelDirty: ++report.input_label_dirty; break;
        }
        report.rows.push_back({sample.id, label.value, label.best_match});
    }
    return report;
}

namespace {

std::string format_threshold(double threshold) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", threshold);
    return buf;
}

}  // namespace

std::string report_to_json(const ContaminationReport& report) {
    Json j;
    j["dataset"] = report.dataset;
    j["threshold"] = report.threshold;
    j["total"] = report.total;
    j["clean"] = report.clean;
    j["input_dirty"] = report.input_dirty;
    j["input_label_dirty"] = report.input_label_dirty;
    Json rows = Json::array();
    for (const auto& row : report.rows) {
        Json r;
        r["sample_id"] = row.sample_id;
        r["label"] = std::string(to_string(row.label));
        if (row.best_match) {
            r["best_match"] = {
                {"doc_id", row.best_match->doc_id},
                {"input_score", row.best_match->input_score},
                {"label_score", row.best_match->label_score},
                {"compared_against_label_text", row.best_match->compared_against_label_text},
            };
        }
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    return j.dump(2) + "\n";
}

std::string report_to_markdown(const ContaminationReport& report) {
    std::ostringstream out;
    out << "# Contamination report\n";
    out << "\n";
    out << "Similarity metric: exact-match METEOR, threshold " << format_threshold(report.threshold)
        << ".\n";
    out << "\n";
    out << "| Dataset | #Total | #Clean | #Input Dirty | #Input-label Dirty |\n";
    out << "| --- | --- | --- | --- | --- |\n";
    out << "| " << report.dataset << " | " << report.total << " | " << report.clean << " | "
        << report.input_dirty << " | " << report.input_label_dirty << " |\n";
    return out.str();
}

}  // namespace benchup
