#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "benchup/corpus.hpp"
#include "benchup/gateway.hpp"

namespace benchup {

using Rational = boost::multiprecision::cpp_rational;

// ---------------------------------------------------------------------------
// Hint expressions (prefix function-call notation)
// ---------------------------------------------------------------------------

enum class HintOp { Add, Subtract, Multiply, Divide, Power, Negate };

std::string_view to_string(HintOp op);

/// add/subtract/multiply/divide/power take exactly two arguments; negate one.
struct HintExpr {
    // Number node when args is empty; Call node otherwise.
    std::optional<Rational> number;
    std::optional<HintOp> op;
    std::vector<HintExpr> args;

    bool is_number() const { return number.has_value(); }
};

HintExpr parse_hint_expr(std::string_view text);

/// Exact rational evaluation. power with a non-integer exponent is computed
/// in double precision and rounded to 12 significant digits.
Rational eval_hint_expr(const HintExpr& expr);

/// Canonical lowercase rendering; parse(pretty_print(e)) == e up to
/// whitespace.
std::string pretty_print(const HintExpr& expr);

/// Parses an integer or decimal literal into an exact rational.
std::optional<Rational> rational_from_decimal(std::string_view text);

// ---------------------------------------------------------------------------
// Periodic table
// ---------------------------------------------------------------------------

struct ElementInfo {
    std::string name;    // canonical lowercase
    std::string symbol;
    int atomic_number = 0;
};

class PeriodicTable {
public:
    static const PeriodicTable& instance();

    /// Case-insensitive lookup; accepts common spelling variants
    /// (aluminum/aluminium, cesium/caesium, sulphur/sulfur).
    std::optional<int> atomic_number(std::string_view name) const;
    std::optional<std::string> name_of(int atomic_number) const;

    const std::vector<ElementInfo>& elements() const;

private:
    PeriodicTable();
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

// ---------------------------------------------------------------------------
// Verdicts and checks
// ---------------------------------------------------------------------------

enum class VerdictReason { Ok, WrongAnswer, Unparseable, Duplicate, SelfCheckFailed };

std::string_view to_string(VerdictReason reason);

struct ValidationVerdict {
    bool pass = false;
    VerdictReason reason = VerdictReason::Ok;
    std::string detail;

    static ValidationVerdict ok() { return {true, VerdictReason::Ok, {}}; }
    static ValidationVerdict fail(VerdictReason reason, std::string detail) {
        return {false, reason, std::move(detail)};
    }
};

/// Math word problems: the hint must evaluate to the score-1 option, within
/// 1e-6 after both sides are normalized (commas and units stripped).
ValidationVerdict check_math_sample(const Sample& sample);

std::size_t lcs_length(std::string_view a, std::string_view b);

/// CS-algorithms samples: recomputes the LCS length over the two strings
/// named in the question (quoted, or introduced by "String 1:"/"String 2:")
/// and compares it with the labeled answer.
ValidationVerdict check_algos_sample(const Sample& sample);

/// Periodic-element samples: handles "<N> more/fewer protons than <element>"
/// and direct atomic-number questions. Anything else is Unparseable so the
/// caller can fall back to a model-self check.
ValidationVerdict check_element_sample(const Sample& sample);

/// Asks the generator model to answer the sample; passes when the extracted
/// answer matches the label.
ValidationVerdict model_self_check(const Sample& sample, Gateway& gateway,
                                   const std::string& model_name);

/// METEOR-based near-duplicate detection against previously accepted
/// samples. Members sharing no unigram with the candidate are skipped.
ValidationVerdict dedup_filter(const Sample& candidate, const std::vector<Sample>& against,
                               double threshold);

/// Dispatches to the task's program checker, or the model-self check.
ValidationVerdict validate_sample(const Sample& sample, const TaskSpec& task, Gateway& gateway,
                                  const std::string& model_name);

}  // namespace benchup
