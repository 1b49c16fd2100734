#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "benchup/corpus.hpp"

namespace benchup {

/// Deterministic word stream: lowercase, split on non-alphanumeric bytes
/// (multi-byte UTF-8 sequences count as word bytes), empties dropped.
struct TokenSeq {
    std::vector<std::string> tokens;

    static TokenSeq tokenize(std::string_view text);

    bool empty() const { return tokens.empty(); }
    std::size_t size() const { return tokens.size(); }
};

/// A unigram alignment between a candidate and a reference. Pairs are sorted
/// by candidate index; each index is used at most once per side. chunk_count
/// is the number of maximal runs that are contiguous and monotone on both
/// sides.
struct Alignment {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::size_t chunk_count = 0;
};

/// Maximum unigram matching that, among maximum matchings, minimizes the
/// chunk count. Exhaustive with branch-and-bound; falls back to the best
/// alignment found once a node budget is exhausted (only reachable with
/// pathologically repetitive inputs).
Alignment meteor_align(const TokenSeq& candidate, const TokenSeq& reference);

/// Exact-match METEOR: P=m/w_c, R=m/w_r, F=10PR/(R+9P),
/// penalty=0.5*(chunks/m)^3, score=F*(1-penalty). Zero when nothing matches.
double meteor_score(const TokenSeq& candidate, const TokenSeq& reference);
double meteor_score(std::string_view candidate, std::string_view reference);

// ---------------------------------------------------------------------------
// Contamination classification
// ---------------------------------------------------------------------------

enum class CorpusSource { Benchmark, InstructionTuning, Web };

std::string_view to_string(CorpusSource source);
std::optional<CorpusSource> corpus_source_from_string(std::string_view name);

struct CorpusDoc {
    std::string doc_id;
    CorpusSource source = CorpusSource::Benchmark;
    std::string input_text;
    std::optional<std::string> label_text;
};

/// Reads a line-delimited JSON corpus manifest: {doc_id, source, input_text,
/// label_text?}.
std::vector<CorpusDoc> read_corpus_manifest(std::string_view bytes);

enum class ContaminationKind { Clean, InputDirty, InputLabelDirty };

std::string_view to_string(ContaminationKind kind);

struct BestMatch {
    std::string doc_id;
    double input_score = 0.0;
    double label_score = 0.0;
    /// Whether the label comparison ran against the doc's paired label_text
    /// or fell back to the doc body.
    bool compared_against_label_text = true;
};

struct ContaminationLabel {
    ContaminationKind value = ContaminationKind::Clean;
    std::optional<BestMatch> best_match;
};

/// Pre-tokenized corpus with an inverted unigram index. Immutable once
/// built; safe to share across threads.
class CorpusIndex {
public:
    explicit CorpusIndex(std::vector<CorpusDoc> docs);

    const std::vector<CorpusDoc>& docs() const { return docs_; }
    const TokenSeq& doc_tokens(std::size_t i) const { return doc_tokens_[i]; }

    /// Indices of the k docs sharing the most distinct unigrams with the
    /// query, best first. Ties resolve in doc order.
    std::vector<std::size_t> candidate_docs(const TokenSeq& query, std::size_t k) const;

    /// Exact maximum unigram-match count against every doc sharing at least
    /// one token, as (doc, matches) pairs. This bounds the METEOR score from
    /// above, which is what makes index-assisted classification exact.
    std::vector<std::pair<std::size_t, std::size_t>> match_counts(const TokenSeq& query) const;

private:
    std::vector<CorpusDoc> docs_;
    std::vector<TokenSeq> doc_tokens_;
    // token -> (doc index, occurrences in that doc)
    std::unordered_map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> postings_;
};

struct ClassifyOptions {
    double threshold = 0.75;
    /// Cap on docs scored through the index before falling back. 0 = full
    /// scan.
    std::size_t index_k = 64;
    /// Extra guard: also rescan fully when the best score lands within this
    /// margin of the threshold.
    double full_scan_margin = 0.05;
};

/// Full-scan classification against every doc.
ContaminationLabel classify_sample(const Sample& sample, const std::vector<CorpusDoc>& corpus,
                                   double threshold);

/// Index-assisted classification; equals the full scan whenever the margin
/// fallback is enabled.
ContaminationLabel classify_sample(const Sample& sample, const CorpusIndex& index,
                                   const ClassifyOptions& options);

struct ContaminationRow {
    std::string sample_id;
    ContaminationKind label = ContaminationKind::Clean;
    std::optional<BestMatch> best_match;
};

struct ContaminationReport {
    std::string dataset;
    double threshold = 0.75;
    std::size_t total = 0;
    std::size_t clean = 0;
    std::size_t input_dirty = 0;
    std::size_t input_label_dirty = 0;
    std::vector<ContaminationRow> rows;
};

ContaminationReport build_report(const DatasetSnapshot& snapshot,
                                 const std::vector<CorpusDoc>& corpus, double threshold);

std::string report_to_json(const ContaminationReport& report);
std::string report_to_markdown(const ContaminationReport& report);

}  // namespace benchup
