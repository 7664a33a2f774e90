#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "coxql/parse.hpp"
#include "coxql/synth.hpp"

using namespace coxql;

TEST_SUITE_BEGIN("qlcore");

TEST_CASE("registry exposes 31 operations partitioned into 8 categories") {
    auto all = OperationRegistry::instance().all();
    CHECK(all.size() == kOperationCount);

    std::size_t terminals = 0, filters = 0, connectives = 0;
    std::map<Category, std::size_t> per_category;
    for (const OperationSpec& spec : all) {
        if (is_terminal_operation(spec.kind)) ++terminals;
        if (is_filter_operation(spec.kind)) ++filters;
        if (is_connective(spec.kind)) ++connectives;
        ++per_category[spec.category];
    }
    CHECK(terminals == 23);
    CHECK(filters == 6);
    CHECK(connectives == 2);
    CHECK(per_category[Category::LocalPrediction] == 2);
    CHECK(per_category[Category::GlobalPrediction] == 2);
    CHECK(per_category[Category::LocalExplanation] == 3);
    CHECK(per_category[Category::Perturbation] == 3);
    CHECK(per_category[Category::Data] == 5);
    CHECK(per_category[Category::Modification] == 3);
    CHECK(per_category[Category::Meta] == 5);
    CHECK(per_category[Category::FilterLogic] == 8);

    std::size_t sum = 0;
    for (const auto& [cat, count] : per_category) sum += count;
    CHECK(sum == kOperationCount);
}

TEST_CASE("instance filter requirement follows the operation signatures") {
    const OperationKind required[] = {
        OperationKind::Predict,  OperationKind::Likelihood, OperationKind::NlpAttribute,
        OperationKind::Rationalize, OperationKind::Influence, OperationKind::Cfe,
        OperationKind::Adversarial, OperationKind::Augment,   OperationKind::Show,
        OperationKind::Similarity,  OperationKind::EditLabel, OperationKind::Learn,
        OperationKind::Unlearn,
    };
    std::set<OperationKind> req(std::begin(required), std::end(required));
    for (const OperationSpec& spec : OperationRegistry::instance().all()) {
        CHECK(spec.requires_instance_filter == (req.count(spec.kind) > 0));
    }
}

TEST_CASE("parse_query handles the reference examples") {
    SUBCASE("filter id and terminal") {
        ParseResult r = parse_query("filter id 9130 and predict");
        REQUIRE(r.ok());
        CHECK(r.ast->terminal == OperationKind::Predict);
        REQUIRE(r.ast->filters.size() == 1);
        CHECK(r.ast->filters[0].clause.kind == OperationKind::Filter);
        CHECK(r.ast->filters[0].clause.args == std::vector<SlotValue>{Id{9130}});
        CHECK(r.ast->slots.empty());
    }
    SUBCASE("bare terminal") {
        ParseResult r = parse_query("countdata");
        REQUIRE(r.ok());
        CHECK(r.ast->terminal == OperationKind::CountData);
        CHECK(r.ast->filters.empty());
        CHECK(r.ast->slots.empty());
    }
    SUBCASE("slots parsed in canonical order") {
        ParseResult r = parse_query("filter id 3 and nlpattribute topk 3 default");
        REQUIRE(r.ok());
        CHECK(r.ast->slots ==
              std::vector<SlotValue>{TopK{3}, AttributionMethod::Default});
    }
    SUBCASE("missing instance filter is an error") {
        ParseResult r = parse_query("predict");
        REQUIRE_FALSE(r.ok());
        CHECK(r.error->kind == ParseErrorKind::MissingInstanceFilter);
        CHECK(r.error->operation == "predict");
    }
}

TEST_CASE("parse_query normalizes the shortened attribution form") {
    auto full = normalize_query("filter id 2451 and nlpattribute all default");
    auto brief = normalize_query("filter id 2451 and nlpattribute default");
    REQUIRE(full);
    REQUIRE(brief);
    CHECK(*full == *brief);
    CHECK(*brief == "filter id 2451 and nlpattribute all default");
}

TEST_CASE("alias spellings are accepted and normalized") {
    CHECK(normalize_query("filter id 12 and similar topk 1") ==
          "filter id 12 and similarity topk 1");
    CHECK(normalize_query("qatutorial qada") == "qatutorial qaaugment");
    CHECK(normalize_query("tutorial qacfe") == "qatutorial qacfe");
    CHECK(normalize_query("filter id 31 and nlpattribute all integrated gradient") ==
          "filter id 31 and nlpattribute all integrated_gradient");
    CHECK(normalize_query("filter id 31 and attribute all input x gradient") ==
          "filter id 31 and nlpattribute all input_x_gradient");
}

TEST_CASE("parsing is case-insensitive and whitespace-tolerant") {
    CHECK(normalize_query("  FILTER  ID 3   AND   SHOW ") == "filter id 3 and show");
}

TEST_CASE("parse errors identify the offending span") {
    CHECK(parse_query("").error->kind == ParseErrorKind::EmptyQuery);
    CHECK(parse_query("frobnicate").error->kind == ParseErrorKind::UnknownOperation);
    CHECK(parse_query("mistake").error->kind == ParseErrorKind::MissingSlot);
    CHECK(parse_query("mistake accuracy").error->kind == ParseErrorKind::IllegalSlot);
    CHECK(parse_query("score accuracy f1").error->kind == ParseErrorKind::TrailingTokens);
    CHECK(parse_query("filter id 3 and nlpattribute topk default").error->kind ==
          ParseErrorKind::MissingNumber);
    CHECK(parse_query("filter id 3 and nlpattribute topk 0 default").error->kind ==
          ParseErrorKind::NumberOutOfRange);
    CHECK(parse_query("filter id 3 or predict").error->kind ==
          ParseErrorKind::IllegalConnective);
    CHECK(parse_query("predict and filter id 3").error->kind ==
          ParseErrorKind::MisplacedOperation);
    CHECK(parse_query("and countdata").error->kind == ParseErrorKind::IllegalConnective);
}

TEST_CASE("pure filter chains parse with the last clause as terminal") {
    ParseResult r = parse_query("labelfilter positive or filter id 3");
    REQUIRE(r.ok());
    CHECK(r.ast->terminal == OperationKind::Filter);
    CHECK(r.ast->slots == std::vector<SlotValue>{Id{3}});
    REQUIRE(r.ast->filters.size() == 1);
    CHECK(r.ast->filters[0].conn == Connective::Or);
}

TEST_CASE("canonicalize renders the reference examples") {
    QueryAst rationalize;
    rationalize.filters = {{FilterClause{OperationKind::Filter, {Id{2222}}}, Connective::And}};
    rationalize.terminal = OperationKind::Rationalize;
    CHECK(canonicalize(rationalize) == "filter id 2222 and rationalize");

    QueryAst tutorial;
    tutorial.terminal = OperationKind::QaTutorial;
    tutorial.slots = {TutorialTopic::QaCfe};
    CHECK(canonicalize(tutorial) == "qatutorial qacfe");
}

TEST_CASE("canonicalize rejects invalid asts") {
    QueryAst bad;
    bad.terminal = OperationKind::Predict;  // needs an instance filter
    CHECK_THROWS_AS(canonicalize(bad), InvalidAstError);
}

TEST_CASE("validate reports violations as data") {
    SUBCASE("clean ast") {
        QueryAst ast;
        ast.filters = {{FilterClause{OperationKind::Filter, {Id{15}}}, Connective::And}};
        ast.terminal = OperationKind::Likelihood;
        CHECK(validate(ast).ok());
    }
    SUBCASE("extra metric is an arity violation") {
        QueryAst ast;
        ast.terminal = OperationKind::Score;
        ast.slots = {Metric::Accuracy, Metric::F1};
        ValidationReport report = validate(ast);
        REQUIRE_FALSE(report.ok());
        CHECK(report.has(ViolationKind::SlotArity));
    }
    SUBCASE("missing mandatory slot before default filling") {
        QueryAst ast;
        ast.terminal = OperationKind::Mistake;
        ValidationReport report = validate(ast);
        CHECK(report.has(ViolationKind::MissingSlot));
    }
    SUBCASE("swapped slots collapse to one order violation") {
        QueryAst ast;
        ast.filters = {{FilterClause{OperationKind::Filter, {Id{3}}}, Connective::And}};
        ast.terminal = OperationKind::NlpAttribute;
        ast.slots = {AttributionMethod::Default, TopK{3}};
        ValidationReport report = validate(ast);
        REQUIRE(report.violations.size() == 1);
        CHECK(report.has(ViolationKind::SlotOrder));
    }
    SUBCASE("or before a terminal operation") {
        QueryAst ast;
        ast.filters = {{FilterClause{OperationKind::Filter, {Id{3}}}, Connective::Or}};
        ast.terminal = OperationKind::Show;
        CHECK(validate(ast).has(ViolationKind::IllegalConnective));
    }
    SUBCASE("terminal operation in filter position") {
        QueryAst ast;
        ast.filters = {{FilterClause{OperationKind::Predict, {}}, Connective::And}};
        ast.terminal = OperationKind::CountData;
        CHECK(validate(ast).has(ViolationKind::MisplacedOperation));
    }
    SUBCASE("bounds") {
        QueryAst ast;
        ast.terminal = OperationKind::Keywords;
        ast.slots = {TopK{0}};
        CHECK(validate(ast).has(ViolationKind::NumberBounds));
    }
}

TEST_CASE("default_fill completes and is idempotent") {
    SUBCASE("attribution defaults") {
        QueryAst ast;
        ast.filters = {{FilterClause{OperationKind::Filter, {Id{1}}}, Connective::And}};
        ast.terminal = OperationKind::NlpAttribute;
        DefaultFillResult filled = default_fill(ast);
        REQUIRE(filled.ok());
        CHECK(filled.ast->slots ==
              std::vector<SlotValue>{All{}, AttributionMethod::Default});
    }
    SUBCASE("similarity default count") {
        QueryAst ast;
        ast.filters = {{FilterClause{OperationKind::Filter, {Id{12}}}, Connective::And}};
        ast.terminal = OperationKind::Similarity;
        DefaultFillResult filled = default_fill(ast);
        REQUIRE(filled.ok());
        CHECK(filled.ast->slots == std::vector<SlotValue>{TopK{1}});
    }
    SUBCASE("idempotent and preserving") {
        ParseResult r = parse_query("filter id 3 and nlpattribute topk 7 lime");
        REQUIRE(r.ok());
        DefaultFillResult once = default_fill(*r.ast);
        REQUIRE(once.ok());
        CHECK(*once.ast == *r.ast);
        DefaultFillResult twice = default_fill(*once.ast);
        REQUIRE(twice.ok());
        CHECK(*twice.ast == *once.ast);
    }
    SUBCASE("no default for the tutorial topic") {
        QueryAst ast;
        ast.terminal = OperationKind::QaTutorial;
        DefaultFillResult filled = default_fill(ast);
        CHECK_FALSE(filled.ok());
        CHECK(filled.missing == "qatutorial.topic");
    }
}

TEST_CASE("round-trip: parse(canonicalize(ast)) == ast for random valid asts") {
    std::mt19937_64 rng(20240601);
    for (int i = 0; i < 500; ++i) {
        QueryAst ast = sample_ast(rng);
        CAPTURE(i);
        std::string canonical = canonicalize(ast);
        CAPTURE(canonical);
        ParseResult back = parse_query(canonical);
        REQUIRE(back.ok());
        CHECK(*back.ast == ast);
        CHECK(canonicalize(*back.ast) == canonical);
    }
}

TEST_SUITE_END();
