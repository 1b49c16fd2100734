#include <doctest.h>

#include <random>
#include <vector>

#include "benchup/errors.hpp"
#include "benchup/gateway.hpp"
#include "benchup/validators.hpp"

using namespace benchup;

namespace {

Sample make_math_sample(const std::string& hint,
                        std::vector<std::pair<std::string, int>> scores) {
    Sample sample;
    sample.id = "math/00000/abc";
    sample.task_id = "elementary_math_qa";
    sample.input_text = "a man has some hens and cows . if the number of heads be 50 and the "
                        "number of feet equals 144 , then the number of hens will be";
    sample.answer.kind = AnswerKind::TargetScores;
    sample.answer.target_scores = std::move(scores);
    sample.answer.hint = hint;
    return sample;
}

// ---------------------------------------------------------------------------
// Independent oracles (test-only)
// ---------------------------------------------------------------------------

// Random expression trees are generated directly as postfix token streams
// and evaluated with a stack machine that shares no code with the
// recursive-descent path under test.
struct PostfixToken {
    bool is_op = false;
    HintOp op = HintOp::Add;
    long value = 0;
};

Rational eval_postfix(const std::vector<PostfixToken>& tokens) {
    std::vector<Rational> stack;
    for (const PostfixToken& token : tokens) {
        if (!token.is_op) {
            stack.emplace_back(token.value);
            continue;
        }
        if (token.op == HintOp::Negate) {
            Rational a = stack.back();
            stack.pop_back();
            stack.push_back(-a);
            continue;
        }
        Rational b = stack.back();
        stack.pop_back();
        Rational a = stack.back();
        stack.pop_back();
        switch (token.op) {
            case HintOp::Add: stack.push_back(a + b); break;
            case HintOp::Subtract: stack.push_back(a - b); break;
            case HintOp::Multiply: stack.push_back(a * b); break;
            case HintOp::Divide:
                if (b == 0) throw EvalError("division by zero");
                stack.push_back(a / b);
                break;
            case HintOp::Power: {
                // The generator only emits small non-negative integer
                // exponents.
                Rational result(1);
                for (Rational i(0); i < b; i += 1) result *= a;
                stack.push_back(result);
                break;
            }
            case HintOp::Negate: break;
        }
    }
    REQUIRE(stack.size() == 1);
    return stack.back();
}

struct RandomExpr {
    std::string prefix;
    std::vector<PostfixToken> postfix;
};

RandomExpr gen_expr(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> leaf_value(0, 60);
    std::uniform_int_distribution<int> pick(0, 5);
    const int choice = depth <= 0 ? 0 : pick(rng);
    if (choice == 0) {
        const long v = leaf_value(rng);
        return {std::to_string(v), {{false, HintOp::Add, v}}};
    }
    RandomExpr expr;
    if (choice == 5) {
        RandomExpr a = gen_expr(rng, depth - 1);
        expr.prefix = "negate(" + a.prefix + ")";
        expr.postfix = a.postfix;
        expr.postfix.push_back({true, HintOp::Negate, 0});
        return expr;
    }
    HintOp op = HintOp::Add;
    std::string name;
    switch (choice) {
        case 1: op = HintOp::Add; name = "add"; break;
        case 2: op = HintOp::Subtract; name = "subtract"; break;
        case 3: op = HintOp::Multiply; name = "multiply"; break;
        case 4: op = HintOp::Divide; name = "divide"; break;
    }
    RandomExpr a = gen_expr(rng, depth - 1);
    RandomExpr b = gen_expr(rng, depth - 1);
    expr.prefix = name + "(" + a.prefix + ", " + b.prefix + ")";
    expr.postfix = a.postfix;
    expr.postfix.insert(expr.postfix.end(), b.postfix.begin(), b.postfix.end());
    expr.postfix.push_back({true, op, 0});
    return expr;
}

// Exhaustive LCS: every subsequence of `a` checked against `b`.
bool is_subsequence(const std::string& needle, const std::string& text) {
    std::size_t i = 0;
    for (char c : text) {
        if (i < needle.size() && needle[i] == c) ++i;
    }
    return i == needle.size();
}

std::size_t lcs_bruteforce(const std::string& a, const std::string& b) {
    std::size_t best = 0;
    for (std::size_t mask = 0; mask < (1u << a.size()); ++mask) {
        std::string sub;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (mask & (1u << i)) sub.push_back(a[i]);
        }
        if (sub.size() > best && is_subsequence(sub, b)) best = sub.size();
    }
    return best;
}

}  // namespace

TEST_CASE("hint parser handles the published worked example") {
    HintExpr expr = parse_hint_expr("divide(subtract(multiply(50, 4), 144), 2)");
    REQUIRE(expr.op == HintOp::Divide);
    REQUIRE(expr.args.size() == 2);
    CHECK(expr.args[0].op == HintOp::Subtract);
    CHECK(expr.args[0].args[0].op == HintOp::Multiply);
    CHECK(expr.args[1].is_number());
    CHECK(eval_hint_expr(expr) == Rational(28));
}

TEST_CASE("hint evaluator reproduces both worked values exactly") {
    CHECK(eval_hint_expr(parse_hint_expr("divide(subtract(multiply(50, 4), 144), 2)")) ==
          Rational(28));
    CHECK(eval_hint_expr(parse_hint_expr("divide(subtract(multiply(30, 4), 100), 2)")) ==
          Rational(10));
}

TEST_CASE("hint parser leaf and error cases") {
    CHECK(parse_hint_expr("7").number == Rational(7));
    CHECK(parse_hint_expr(" 3.5 ").number == Rational(7, 2));
    CHECK(eval_hint_expr(parse_hint_expr("negate(0)")) == Rational(0));

    CHECK_THROWS_AS(parse_hint_expr("divide(multiply(30, 4), )"), HintParseError);
    CHECK_THROWS_AS(parse_hint_expr("foo(1,2)"), HintParseError);
    CHECK_THROWS_AS(parse_hint_expr("add(1,2,3)"), HintParseError);
    CHECK_THROWS_AS(parse_hint_expr("add(1"), HintParseError);
    CHECK_THROWS_AS(parse_hint_expr("add(1,2) trailing"), HintParseError);
    CHECK_THROWS_AS(eval_hint_expr(parse_hint_expr("divide(1, subtract(2, 2))")), EvalError);
}

TEST_CASE("hint parser is whitespace and case insensitive") {
    CHECK(eval_hint_expr(parse_hint_expr("ADD( 1 ,\t2 )")) == Rational(3));
    CHECK(eval_hint_expr(parse_hint_expr("Power(2, 10)")) == Rational(1024));
    CHECK(eval_hint_expr(parse_hint_expr("power(2, negate(2))")) == Rational(1, 4));
}

TEST_CASE("power with fractional exponent rounds to 12 significant digits") {
    const Rational result = eval_hint_expr(parse_hint_expr("power(2, 0.5)"));
    const double value = result.convert_to<double>();
    CHECK(value == doctest::Approx(1.41421356237).epsilon(1e-11));
    CHECK_THROWS_AS(eval_hint_expr(parse_hint_expr("power(negate(2), 0.5)")), EvalError);
}

TEST_CASE("pretty_print then parse is the identity up to whitespace") {
    std::mt19937_64 rng(20240401);
    for (int i = 0; i < 200; ++i) {
        RandomExpr expr = gen_expr(rng, 3);
        HintExpr parsed = parse_hint_expr(expr.prefix);
        const std::string printed = pretty_print(parsed);
        HintExpr reparsed = parse_hint_expr(printed);
        CHECK(pretty_print(reparsed) == printed);
        bool lhs_threw = false;
        bool rhs_threw = false;
        Rational lhs, rhs;
        try { lhs = eval_hint_expr(parsed); } catch (const EvalError&) { lhs_threw = true; }
        try { rhs = eval_hint_expr(reparsed); } catch (const EvalError&) { rhs_threw = true; }
        REQUIRE(lhs_threw == rhs_threw);
        if (!lhs_threw) CHECK(lhs == rhs);
    }
}

TEST_CASE("hint evaluator agrees with the postfix-stack oracle on 1000 expressions") {
    std::mt19937_64 rng(987654321);
    for (int i = 0; i < 1000; ++i) {
        RandomExpr expr = gen_expr(rng, 4);
        bool oracle_threw = false;
        Rational expected;
        try {
            expected = eval_postfix(expr.postfix);
        } catch (const EvalError&) {
            oracle_threw = true;
        }
        bool impl_threw = false;
        Rational got;
        try {
            got = eval_hint_expr(parse_hint_expr(expr.prefix));
        } catch (const EvalError&) {
            impl_threw = true;
        }
        REQUIRE(oracle_threw == impl_threw);
        if (!oracle_threw) REQUIRE(got == expected);
    }
}

TEST_CASE("check_math_sample validates the hen-and-cow sample") {
    Sample sample = make_math_sample("divide(subtract(multiply(50, 4), 144), 2)",
                                     {{"22", 0}, {"24", 0}, {"26", 0}, {"20", 0}, {"28", 1}});
    CHECK(check_math_sample(sample).pass);

    Sample wrong = make_math_sample("divide(subtract(multiply(50, 4), 144), 2)",
                                    {{"22", 0}, {"24", 1}, {"26", 0}, {"20", 0}, {"28", 0}});
    ValidationVerdict verdict = check_math_sample(wrong);
    CHECK_FALSE(verdict.pass);
    CHECK(verdict.reason == VerdictReason::WrongAnswer);

    Sample bad_hint = make_math_sample("foo(1,2)", {{"28", 1}, {"24", 0}});
    CHECK(check_math_sample(bad_hint).reason == VerdictReason::Unparseable);
}

TEST_CASE("check_math_sample strips commas and units from options") {
    Sample sample = make_math_sample("multiply(1000, 4)", {{"4,000 km", 1}, {"400", 0}});
    CHECK(check_math_sample(sample).pass);
}

TEST_CASE("lcs_length basics") {
    CHECK(lcs_length("", "anything") == 0);
    CHECK(lcs_length("anything", "") == 0);
    CHECK(lcs_length("ABCBDAB", "BDCABA") == 4);
    const std::string same = "ABBCAACB";
    CHECK(lcs_length(same, same) == same.size());
}

TEST_CASE("lcs_length matches exhaustive enumeration on 1000 sampled pairs") {
    std::mt19937_64 rng(424242);
    std::uniform_int_distribution<int> len(0, 8);
    std::uniform_int_distribution<int> letter(0, 2);
    for (int i = 0; i < 1000; ++i) {
        std::string a, b;
        const int la = len(rng), lb = len(rng);
        for (int k = 0; k < la; ++k) a.push_back(static_cast<char>('A' + letter(rng)));
        for (int k = 0; k < lb; ++k) b.push_back(static_cast<char>('A' + letter(rng)));
        const std::size_t expected = lcs_bruteforce(a, b);
        CHECK(lcs_length(a, b) == expected);
        CHECK(lcs_length(b, a) == expected);
    }
}

TEST_CASE("check_algos_sample recomputes the LCS") {
    Sample sample;
    sample.task_id = "cs_algorithms";
    sample.input_text = "Given two strings \"ABC\" and \"AC\", what is the length of their "
                        "longest common subsequence?";
    sample.answer.kind = AnswerKind::FreeResponse;
    sample.answer.reference = "2";
    CHECK(check_algos_sample(sample).pass);

    sample.answer.reference = "3";
    CHECK(check_algos_sample(sample).reason == VerdictReason::WrongAnswer);

    Sample one_string = sample;
    one_string.input_text = "What is the longest common subsequence of \"ABC\"?";
    one_string.answer.reference = "2";
    CHECK(check_algos_sample(one_string).reason == VerdictReason::Unparseable);

    Sample labeled = sample;
    labeled.input_text = "String 1: ABCBDAB\nString 2: BDCABA\nFind the LCS length.";
    labeled.answer.reference = "4";
    CHECK(check_algos_sample(labeled).pass);
}

TEST_CASE("check_element_sample handles proton-offset and atomic-number questions") {
    Sample sample;
    sample.task_id = "periodic_elements";
    sample.answer.kind = AnswerKind::FreeResponse;

    sample.input_text = "What element contains two more protons than hydrogen?";
    sample.answer.reference = "lithium";
    CHECK(check_element_sample(sample).pass);

    sample.input_text = "What element contains one more proton than Hydrogen?";
    sample.answer.reference = "helium";
    CHECK(check_element_sample(sample).pass);

    sample.input_text = "What element contains 119 more protons than hydrogen?";
    sample.answer.reference = "unobtainium";
    CHECK(check_element_sample(sample).reason == VerdictReason::Unparseable);

    sample.input_text = "Which element has the atomic number 79?";
    sample.answer.reference = "Gold";
    CHECK(check_element_sample(sample).pass);

    sample.input_text = "What element contains two fewer protons than oxygen?";
    sample.answer.reference = "carbon";
    CHECK(check_element_sample(sample).pass);

    sample.input_text = "Name an element that smells bad.";
    sample.answer.reference = "sulfur";
    CHECK(check_element_sample(sample).reason == VerdictReason::Unparseable);

    sample.input_text = "Which element has the atomic number 13?";
    sample.answer.reference = "aluminum";
    CHECK(check_element_sample(sample).pass);
}

TEST_CASE("periodic table is a bijection over 118 elements") {
    const PeriodicTable& table = PeriodicTable::instance();
    REQUIRE(table.elements().size() == 118);
    CHECK(table.atomic_number("hydrogen") == 1);
    CHECK(table.atomic_number("Helium") == 2);
    CHECK(table.atomic_number("lithium") == 3);
    CHECK(table.atomic_number("oganesson") == 118);
    CHECK_FALSE(table.atomic_number("adamantium").has_value());
    for (const ElementInfo& element : table.elements()) {
        REQUIRE(table.atomic_number(element.name) == element.atomic_number);
        REQUIRE(table.name_of(element.atomic_number) == element.name);
    }
    CHECK_FALSE(table.name_of(0).has_value());
    CHECK_FALSE(table.name_of(119).has_value());
}

TEST_CASE("model_self_check passes and fails with a scripted mock") {
    Sample sample;
    sample.id = "sports/00000/aaa";
    sample.task_id = "sports_understanding";
    sample.input_text = "Jamal Murray made 10 three-pointers in a row";
    sample.answer.kind = AnswerKind::TargetScores;
    sample.answer.target_scores = {{"plausible", 1}, {"implausible", 0}};

    SUBCASE("labeled option answered") {
        Gateway gateway(mock_backend({{"Jamal Murray", "plausible"}}, MockFallback::Refuse));
        CHECK(model_self_check(sample, gateway, "m").pass);
    }
    SUBCASE("other option answered") {
        Gateway gateway(mock_backend({{"Jamal Murray", "implausible"}}, MockFallback::Refuse));
        ValidationVerdict verdict = model_self_check(sample, gateway, "m");
        CHECK_FALSE(verdict.pass);
        CHECK(verdict.reason == VerdictReason::SelfCheckFailed);
    }
    SUBCASE("prose containing the correct option once") {
        Gateway gateway(mock_backend(
            {{"Jamal Murray", "The statement is plausible."}}, MockFallback::Refuse));
        CHECK(model_self_check(sample, gateway, "m").pass);
    }
}

TEST_CASE("dedup_filter flags near-duplicates and passes fresh candidates") {
    auto sports_sample = [](const std::string& id, const std::string& text) {
        Sample sample;
        sample.id = id;
        sample.task_id = "sports_understanding";
        sample.input_text = text;
        sample.answer.kind = AnswerKind::TargetScores;
        sample.answer.target_scores = {{"plausible", 1}, {"implausible", 0}};
        return sample;
    };
    const std::vector<Sample> originals = {
        sports_sample("s/0", "Jamal Murray was perfect from the line"),
        sports_sample("s/1", "Derrick White backhanded a shot"),
    };

    SUBCASE("identical text is a duplicate at threshold 0.9") {
        Sample candidate = sports_sample("c/0", "Jamal Murray was perfect from the line");
        ValidationVerdict verdict = dedup_filter(candidate, originals, 0.9);
        CHECK_FALSE(verdict.pass);
        CHECK(verdict.reason == VerdictReason::Duplicate);
    }
    SUBCASE("no shared tokens passes") {
        Sample candidate = sports_sample("c/1", "completely unrelated gardening sentence");
        CHECK(dedup_filter(candidate, originals, 0.9).pass);
    }
    SUBCASE("the published mimic pair is not a duplicate") {
        Sample candidate = sports_sample("c/2", "Jamal Murray made 10 three-pointers in a row");
        CHECK(dedup_filter(candidate, originals, 0.9).pass);
    }
    SUBCASE("monotone: growing the pool never flips Duplicate to Ok") {
        Sample candidate = sports_sample("c/3", "Derrick White backhanded a shot");
        std::vector<Sample> small = {originals[1]};
        REQUIRE_FALSE(dedup_filter(candidate, small, 0.9).pass);
        CHECK_FALSE(dedup_filter(candidate, originals, 0.9).pass);
    }
}
