#include "benchup/validators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <regex>
#include <sstream>
#include <unordered_map>

#include "benchup/contamination.hpp"
#include "benchup/errors.hpp"
#include "benchup/evaluator.hpp"
#include "benchup/promptkit.hpp"
#include "benchup/util.hpp"

namespace benchup {

using boost::multiprecision::cpp_int;

std::string_view to_string(HintOp op) {
    switch (op) {
        case HintOp::Add: return "add";
        case HintOp::Subtract: return "subtract";
        case HintOp::Multiply: return "multiply";
        case HintOp::Divide: return "divide";
        case HintOp::Power: return "power";
        case HintOp::Negate: return "negate";
    }
    return "add";
}

std::string_view to_string(VerdictReason reason) {
    switch (reason) {
        case VerdictReason::Ok: return "ok";
        case VerdictReason::WrongAnswer: return "wrong_answer";
        case VerdictReason::Unparseable: return "unparseable";
        case VerdictReason::Duplicate: return "duplicate";
        case VerdictReason::SelfCheckFailed: return "self_check_failed";
    }
    return "ok";
}

// ---------------------------------------------------------------------------
// Hint expression grammar:  expr := number | name '(' expr (',' expr)* ')'
// ---------------------------------------------------------------------------

std::optional<Rational> rational_from_decimal(std::string_view text) {
    std::string t = trim(text);
    if (t.empty()) return std::nullopt;
    bool negative = false;
    std::size_t pos = 0;
    if (t[0] == '-' || t[0] == '+') {
        negative = t[0] == '-';
        pos = 1;
    }
    std::string digits;
    std::size_t frac_digits = 0;
    bool seen_dot = false;
    bool seen_digit = false;
    for (; pos < t.size(); ++pos) {
        char c = t[pos];
        if (c == '.') {
            if (seen_dot) return std::nullopt;
            seen_dot = true;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            digits.push_back(c);
            if (seen_dot) ++frac_digits;
            seen_digit = true;
        } else {
            return std::nullopt;
        }
    }
    if (!seen_digit) return std::nullopt;
    cpp_int numerator(digits);
    cpp_int denominator = 1;
    for (std::size_t i = 0; i < frac_digits; ++i) denominator *= 10;
    Rational value(numerator, denominator);
    return negative ? -value : value;
}

namespace {

struct HintParser {
    std::string_view text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    [[noreturn]] void fail(const std::string& message) { throw HintParseError(message, pos); }

    HintExpr parse() {
        HintExpr expr = parse_expr();
        skip_ws();
        if (pos != text.size()) fail("trailing characters after expression");
        return expr;
    }

    HintExpr parse_expr() {
        skip_ws();
        if (pos >= text.size()) fail("expected expression");
        char c = text[pos];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
            return parse_number();
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            return parse_call();
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    HintExpr parse_number() {
        const std::size_t start = pos;
        if (text[pos] == '-' || text[pos] == '+') ++pos;
        bool any = false;
        while (pos < text.size() &&
               (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.')) {
            any = true;
            ++pos;
        }
        if (!any) fail("expected a number");
        auto value = rational_from_decimal(text.substr(start, pos - start));
        if (!value) {
            pos = start;
            fail("malformed number literal");
        }
        HintExpr expr;
        expr.number = *value;
        return expr;
    }

    HintExpr parse_call() {
        const std::size_t name_start = pos;
        while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) ||
                                     text[pos] == '_')) {
            ++pos;
        }
        const std::string name = to_lower(text.substr(name_start, pos - name_start));

        HintOp op;
        std::size_t arity;
        if (name == "add") { op = HintOp::Add; arity = 2; }
        else if (name == "subtract") { op = HintOp::Subtract; arity = 2; }
        else if (name == "multiply") { op = HintOp::Multiply; arity = 2; }
        else if (name == "divide") { op = HintOp::Divide; arity = 2; }
        else if (name == "power") { op = HintOp::Power; arity = 2; }
        else if (name == "negate") { op = HintOp::Negate; arity = 1; }
        else {
            pos = name_start;
            fail("unknown function \"" + name + "\"");
        }

        skip_ws();
        if (pos >= text.size() || text[pos] != '(') fail("expected '(' after \"" + name + "\"");
        ++pos;

        HintExpr expr;
        expr.op = op;
        while (true) {
            skip_ws();
            if (pos >= text.size()) fail("unbalanced parentheses");
            if (text[pos] == ')') {
                if (!expr.args.empty()) fail("empty argument");
                ++pos;
                break;
            }
            expr.args.push_back(parse_expr());
            skip_ws();
            if (pos >= text.size()) fail("unbalanced parentheses");
            if (text[pos] == ',') {
                ++pos;
                skip_ws();
                if (pos < text.size() && text[pos] == ')') fail("empty argument");
                continue;
            }
            if (text[pos] == ')') {
                ++pos;
                break;
            }
            fail("expected ',' or ')'");
        }
        if (expr.args.size() != arity) {
            fail("\"" + name + "\" takes " + std::to_string(arity) + " argument(s), got " +
                 std::to_string(expr.args.size()));
        }
        return expr;
    }
};

Rational pow_integer(const Rational& base, const cpp_int& exponent) {
    if (exponent == 0) return Rational(1);
    const bool negative = exponent < 0;
    cpp_int n = negative ? cpp_int(-exponent) : exponent;
    if (negative && base == 0) throw EvalError("zero raised to a negative power");
    Rational result(1);
    Rational factor = base;
    while (n > 0) {
        if ((n & 1) != 0) result *= factor;
        factor *= factor;
        n >>= 1;
    }
    return negative ? Rational(1) / result : result;
}

/// Rounds to 12 significant digits and converts back to an exact rational.
Rational round_to_12_digits(double value) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.11e", value);
    // Format: [-]d.ddddddddddde[+-]xx
    const std::string s(buf);
    const std::size_t e_pos = s.find('e');
    std::string mantissa = s.substr(0, e_pos);
    const int exp10 = std::stoi(s.substr(e_pos + 1));
    auto parsed = rational_from_decimal(mantissa);
    if (!parsed) throw EvalError("could not round power result");
    cpp_int scale = 1;
    for (int i = 0; i < std::abs(exp10); ++i) scale *= 10;
    return exp10 >= 0 ? *parsed * Rational(scale) : *parsed / Rational(scale);
}

}  // namespace

HintExpr parse_hint_expr(std::string_view text) {
    HintParser parser{text};
    return parser.parse();
}

Rational eval_hint_expr(const HintExpr& expr) {
    if (expr.is_number()) return *expr.number;
    if (!expr.op) throw EvalError("malformed expression node");
    std::vector<Rational> values;
    values.reserve(expr.args.size());
    for (const HintExpr& arg : expr.args) values.push_back(eval_hint_expr(arg));
    switch (*expr.op) {
        case HintOp::Add: return values[0] + values[1];
        case HintOp::Subtract: return values[0] - values[1];
        case HintOp::Multiply: return values[0] * values[1];
        case HintOp::Divide:
            if (values[1] == 0) throw EvalError("division by zero");
            return values[0] / values[1];
        case HintOp::Power: {
            const Rational& exponent = values[1];
            if (boost::multiprecision::denominator(exponent) == 1) {
                return pow_integer(values[0], boost::multiprecision::numerator(exponent));
            }
            const double base = values[0].convert_to<double>();
            const double exp = exponent.convert_to<double>();
            if (base < 0) throw EvalError("negative base with fractional exponent");
            const double result = std::pow(base, exp);
            if (!std::isfinite(result)) throw EvalError("power result is not finite");
            return round_to_12_digits(result);
        }
        case HintOp::Negate: return -values[0];
    }
    throw EvalError("unknown operator");
}

namespace {

std::string rational_to_decimal(const Rational& value) {
    cpp_int num = boost::multiprecision::numerator(value);
    cpp_int den = boost::multiprecision::denominator(value);
    const bool negative = num < 0;
    if (negative) num = -num;
    // den is 2^a * 5^b for every literal the grammar can produce.
    cpp_int d = den;
    while (d % 2 == 0) d /= 2;
    while (d % 5 == 0) d /= 5;
    if (d != 1) throw EvalError("rational has no finite decimal form");
    std::size_t k = 0;
    cpp_int scale = 1;
    while (scale % den != 0) {
        scale *= 10;
        ++k;
    }
    cpp_int digits = num * (scale / den);
    std::string text = digits.str();
    if (k > 0) {
        while (text.size() <= k) text.insert(text.begin(), '0');
        text.insert(text.size() - k, ".");
    }
    return (negative ? "-" : "") + text;
}

std::string rational_to_string(const Rational& value) {
    try {
        if (value < 0) return "-" + rational_to_decimal(-value);
        return rational_to_decimal(value);
    } catch (const EvalError&) {
        return boost::multiprecision::numerator(value).str() + "/" +
               boost::multiprecision::denominator(value).str();
    }
}

}  // namespace

std::string pretty_print(const HintExpr& expr) {
    if (expr.is_number()) {
        const Rational& v = *expr.number;
        if (v < 0) return "negate(" + rational_to_decimal(-v) + ")";
        return rational_to_decimal(v);
    }
    std::ostringstream out;
    out << to_string(*expr.op) << '(';
    for (std::size_t i = 0; i < expr.args.size(); ++i) {
        if (i > 0) out << ", ";
        out << pretty_print(expr.args[i]);
    }
    out << ')';
    return out.str();
}

// ---------------------------------------------------------------------------
// Program checks
// ---------------------------------------------------------------------------

namespace {

/// First numeric literal in the text after stripping commas; units and other
/// prose are ignored.
std::optional<Rational> extract_number(std::string_view text) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (char c : text) {
        if (c != ',') cleaned.push_back(c);
    }
    static const std::regex number_re(R"(-?\d+(\.\d+)?)");
    std::smatch match;
    if (!std::regex_search(cleaned, match, number_re)) return std::nullopt;
    return rational_from_decimal(match.str(0));
}

const std::pair<std::string, int>* winning_option(const AnswerSpec& answer) {
    for (const auto& entry : answer.target_scores) {
        if (entry.second == 1) return &entry;
    }
    return nullptr;
}

}  // namespace

ValidationVerdict check_math_sample(const Sample& sample) {
    if (!sample.answer.hint) {
        return ValidationVerdict::fail(VerdictReason::Unparseable, "sample has no hint");
    }
    Rational value;
    try {
        value = eval_hint_expr(parse_hint_expr(*sample.answer.hint));
    } catch (const HintParseError& e) {
        return ValidationVerdict::fail(VerdictReason::Unparseable, e.what());
    } catch (const EvalError& e) {
        return ValidationVerdict::fail(VerdictReason::Unparseable, e.what());
    }
    const auto* winner = winning_option(sample.answer);
    if (winner == nullptr) {
        return ValidationVerdict::fail(VerdictReason::WrongAnswer, "no option has score 1");
    }
    auto labeled = extract_number(winner->first);
    if (!labeled) {
        return ValidationVerdict::fail(VerdictReason::Unparseable,
                                       "winning option \"" + winner->first + "\" is not numeric");
    }
    const Rational tolerance(1, 1'000'000);
    Rational diff = value - *labeled;
    if (diff < 0) diff = -diff;
    if (diff <= tolerance) return ValidationVerdict::ok();
    return ValidationVerdict::fail(VerdictReason::WrongAnswer,
                                   "hint evaluates to " + rational_to_string(value) +
                                       " but the labeled answer is \"" + winner->first + "\"");
}

std::size_t lcs_length(std::string_view a, std::string_view b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> curr(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1]) {
                curr[j] = prev[j - 1] + 1;
            } else {
                curr[j] = std::max(prev[j], curr[j - 1]);
            }
        }
        std::swap(prev, curr);
    }
    return prev[b.size()];
}

namespace {

/// Extraction patterns for the two compared strings, in order of priority:
/// "String 1: X" / "String 2: Y" labels, two double-quoted tokens, then
/// "strings X and Y" with all-caps tokens.
std::optional<std::pair<std::string, std::string>> extract_lcs_strings(const std::string& input) {
    static const std::regex labeled_re(
        R"re(string\s*1\s*[:=]\s*"?([A-Za-z0-9]+)"?[\s\S]*?string\s*2\s*[:=]\s*"?([A-Za-z0-9]+)"?)re",
        std::regex::icase);
    std::smatch match;
    if (std::regex_search(input, match, labeled_re)) {
        return std::make_pair(match.str(1), match.str(2));
    }
    static const std::regex quoted_re(R"re("([A-Za-z0-9]+)")re");
    std::vector<std::string> quoted;
    for (auto it = std::sregex_iterator(input.begin(), input.end(), quoted_re);
         it != std::sregex_iterator(); ++it) {
        quoted.push_back(it->str(1));
    }
    if (quoted.size() >= 2) return std::make_pair(quoted[0], quoted[1]);
    static const std::regex bare_re(R"(strings?\s+([A-Z0-9]+)\s+and\s+([A-Z0-9]+))");
    if (std::regex_search(input, match, bare_re)) {
        return std::make_pair(match.str(1), match.str(2));
    }
    return std::nullopt;
}

}  // namespace

ValidationVerdict check_algos_sample(const Sample& sample) {
    auto strings = extract_lcs_strings(sample.input_text);
    if (!strings) {
        return ValidationVerdict::fail(VerdictReason::Unparseable,
                                       "could not extract two strings from the question");
    }
    std::optional<Rational> labeled;
    if (sample.answer.kind == AnswerKind::FreeResponse) {
        labeled = extract_number(sample.answer.reference);
    } else if (const auto* winner = winning_option(sample.answer)) {
        labeled = extract_number(winner->first);
    }
    if (!labeled) {
        return ValidationVerdict::fail(VerdictReason::Unparseable, "labeled answer is not numeric");
    }
    const std::size_t expected = lcs_length(strings->first, strings->second);
    if (Rational(expected) == *labeled) return ValidationVerdict::ok();
    return ValidationVerdict::fail(VerdictReason::WrongAnswer,
                                   "LCS of \"" + strings->first + "\" and \"" + strings->second +
                                       "\" is " + std::to_string(expected));
}

namespace {

std::optional<int> parse_count_word(const std::string& word) {
    static const std::unordered_map<std::string, int> words = {
        {"a", 1},         {"an", 1},        {"one", 1},       {"two", 2},
        {"three", 3},     {"four", 4},      {"five", 5},      {"six", 6},
        {"seven", 7},     {"eight", 8},     {"nine", 9},      {"ten", 10},
        {"eleven", 11},   {"twelve", 12},   {"thirteen", 13}, {"fourteen", 14},
        {"fifteen", 15},  {"sixteen", 16},  {"seventeen", 17},{"eighteen", 18},
        {"nineteen", 19}, {"twenty", 20},
    };
    auto it = words.find(word);
    if (it != words.end()) return it->second;
    try {
        std::size_t consumed = 0;
        int value = std::stoi(word, &consumed);
        if (consumed == word.size()) return value;
    } catch (const std::exception&) {
    }
    return std::nullopt;
}

std::string normalize_element_name(std::string_view text) {
    std::string t = to_lower(trim(text));
    while (!t.empty() && (t.back() == '.' || t.back() == '!')) t.pop_back();
    return trim(t);
}

}  // namespace

ValidationVerdict check_element_sample(const Sample& sample) {
    const std::string question = to_lower(sample.input_text);
    const PeriodicTable& table = PeriodicTable::instance();

    std::optional<int> target_number;
    static const std::regex relative_re(
        R"((\w+)\s+(more|fewer|less)\s+protons?\s+than\s+([a-z]+))");
    static const std::regex direct_re(R"(atomic\s+number\s+(?:of\s+|is\s+)?(\d+))");
    std::smatch match;
    if (std::regex_search(question, match, relative_re)) {
        auto count = parse_count_word(match.str(1));
        auto base = table.atomic_number(match.str(3));
        if (!count || !base) {
            return ValidationVerdict::fail(VerdictReason::Unparseable,
                                           "could not resolve the proton-count pattern");
        }
        target_number = match.str(2) == "more" ? *base + *count : *base - *count;
    } else if (std::regex_search(question, match, direct_re)) {
        target_number = std::stoi(match.str(1));
    } else {
        return ValidationVerdict::fail(VerdictReason::Unparseable,
                                       "question matches no known pattern");
    }

    auto expected = table.name_of(*target_number);
    if (!expected) {
        return ValidationVerdict::fail(VerdictReason::Unparseable,
                                       "atomic number " + std::to_string(*target_number) +
                                           " is outside the table");
    }
    const std::string labeled = normalize_element_name(sample.answer.kind == AnswerKind::FreeResponse
                                                           ? sample.answer.reference
                                                           : sample.answer.correct_text());
    auto labeled_number = table.atomic_number(labeled);
    if (labeled_number && *labeled_number == *target_number) return ValidationVerdict::ok();
    return ValidationVerdict::fail(VerdictReason::WrongAnswer,
                                   "expected " + *expected + ", labeled \"" + labeled + "\"");
}

ValidationVerdict model_self_check(const Sample& sample, Gateway& gateway,
                                   const std::string& model_name) {
    ChatRequest request;
    request.prompt = render_answer_prompt(sample);
    request.prompt.purpose = PromptPurpose::SelfCheck;
    request.model_name = model_name;
    request.temperature = 0.0;
    request.max_tokens = 1024;
    request.tag = "self_check";
    const ChatResponse response = gateway.complete(request);

    if (sample.answer.kind == AnswerKind::FreeResponse) {
        const std::string got = collapse_whitespace(to_lower(response.text));
        const std::string want = collapse_whitespace(to_lower(sample.answer.reference));
        if (got == want || contains_word(got, want)) return ValidationVerdict::ok();
        return ValidationVerdict::fail(VerdictReason::SelfCheckFailed,
                                       "model answered \"" + response.text + "\"");
    }

    auto extracted = extract_mc_answer(response.text, sample.answer);
    const std::string want = sample.answer.kind == AnswerKind::MultipleChoice
                                 ? sample.answer.answer_letter
                                 : sample.answer.correct_text();
    if (extracted && *extracted == want) return ValidationVerdict::ok();
    return ValidationVerdict::fail(VerdictReason::SelfCheckFailed,
                                   "model answered \"" + response.text + "\"");
}

ValidationVerdict dedup_filter(const Sample& candidate, const std::vector<Sample>& against,
                               double threshold) {
    const TokenSeq candidate_tokens = TokenSeq::tokenize(candidate.input_text);
    std::vector<std::string> distinct = candidate_tokens.tokens;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    for (const Sample& member : against) {
        const TokenSeq member_tokens = TokenSeq::tokenize(member.input_text);
        const bool shares_token =
            std::any_of(member_tokens.tokens.begin(), member_tokens.tokens.end(),
                        [&](const std::string& token) {
                            return std::binary_search(distinct.begin(), distinct.end(), token);
                        });
        if (!shares_token) continue;
        const double score = meteor_score(candidate_tokens, member_tokens);
        if (score >= threshold) {
            char detail[160];
            std::snprintf(detail, sizeof(detail), "similarity %.4f to %s", score,
                          member.id.c_str());
            return ValidationVerdict::fail(VerdictReason::Duplicate, detail);
        }
    }
    return ValidationVerdict::ok();
}

ValidationVerdict validate_sample(const Sample& sample, const TaskSpec& task, Gateway& gateway,
                                  const std::string& model_name) {
    if (task.validation == ValidationMethod::ProgramCheck && task.program_checker) {
        ValidationVerdict verdict;
        switch (*task.program_checker) {
            case ProgramChecker::MathHint: verdict = check_math_sample(sample); break;
            case ProgramChecker::LcsLength: verdict = check_algos_sample(sample); break;
            case ProgramChecker::PeriodicElement: verdict = check_element_sample(sample); break;
        }
        // Pattern-based checkers can meet questions beyond their grammar;
        // those fall back to the model-self check.
        if (verdict.reason == VerdictReason::Unparseable &&
            *task.program_checker == ProgramChecker::PeriodicElement) {
            return model_self_check(sample, gateway, model_name);
        }
        return verdict;
    }
    return model_self_check(sample, gateway, model_name);
}

}  // namespace benchup
