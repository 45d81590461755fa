#include <gtest/gtest.h>

#include <random>
#include <string>
#include <vector>

#include <flatcirc/model_io.hpp>

#include "support.hpp"

using namespace flatcirc;
using namespace flatcirc::testing;

namespace
{

const std::string models = FLATCIRC_MODELS_DIR;

std::string model_path(const std::string &name)
{
    return models + "/" + name + ".json";
}

// exp(x) coefficients by the factorial recurrence c_k = c_{k-1} / k.
series exp_oracle(std::size_t n, int cap, std::size_t axis)
{
    series s(n, cap);
    rational c = 1;
    for (int k = 0; k <= cap; ++k) {
        if (k > 0) {
            c /= k;
        }
        exponent e;
        e[axis] = static_cast<std::uint8_t>(k);
        s.add_term(e, c);
    }
    return s;
}

std::size_t offset_of(const std::string &text, const std::vector<std::string> &names, int cap)
{
    try {
        parse_expression(text, names, cap);
    } catch (const parse_error &err) {
        return err.offset();
    }
    ADD_FAILURE() << "no parse error for '" << text << "'";
    return 0;
}

ordered_json minimal_model()
{
    return ordered_json::parse(R"({"schemaVersion": 1, "name": "m", "dimension": 2, "order": 5, "muOrder": 2,
                                   "potential": ["x0^2/2", "x0*x1"]})");
}

} // namespace

TEST(Parser, Examples)
{
    const auto names = default_coordinates(2);
    EXPECT_EQ(parse_expression("x0*x1", names, 4), var(2, 4, 0) * var(2, 4, 1));
    EXPECT_EQ(parse_expression("exp(x1)", names, 3), exp_oracle(2, 3, 1));
    EXPECT_EQ(parse_expression("exp(x1)", names, 7), exp_oracle(2, 7, 1));
    EXPECT_EQ(parse_expression("x0^2/2 + 3", names, 4),
              rational(1, 2) * var(2, 4, 0) * var(2, 4, 0) + cst(2, 4, 3));
    EXPECT_EQ(parse_expression("-x0^2", names, 4), rational(-1) * var(2, 4, 0) * var(2, 4, 0));
    EXPECT_EQ(parse_expression("2*(x0 - x1)^2", names, 4),
              rational(2) * (var(2, 4, 0) - var(2, 4, 1)) * (var(2, 4, 0) - var(2, 4, 1)));
    EXPECT_EQ(parse_expression("0.25", names, 2), cst(2, 2, rational(1, 4)));
    EXPECT_EQ(parse_expression("010", names, 2), cst(2, 2, 10));
    EXPECT_EQ(parse_expression("x0^9", names, 4), series(2, 4));
}

TEST(Parser, DivisionByUnits)
{
    const auto names = default_coordinates(1);
    const auto geo = parse_expression("1/(1 - x0)", names, 5);
    for (int k = 0; k <= 5; ++k) {
        exponent e;
        e[0] = static_cast<std::uint8_t>(k);
        EXPECT_EQ(geo.coefficient(e), 1);
    }
    EXPECT_EQ(parse_expression("(1 - x0)^-1", names, 5), geo);
    EXPECT_EQ(parse_expression("(1+x0)/(1+x0)", names, 5), cst(1, 5, 1));
    EXPECT_THROW(parse_expression("1/x0", names, 5), non_unit_error);
    EXPECT_THROW(parse_expression("x0^-1", names, 5), non_unit_error);
    EXPECT_THROW(parse_expression("exp(1 + x0)", names, 5), non_unit_error);
}

TEST(Parser, CustomNames)
{
    const std::vector<std::string> names{"t", "q"};
    EXPECT_EQ(parse_expression("t*q + exp(q)", names, 3),
              var(2, 3, 0) * var(2, 3, 1) + exp_oracle(2, 3, 1));
}

TEST(Parser, ErrorsCarryOffsets)
{
    const auto names = default_coordinates(2);
    EXPECT_EQ(offset_of("x0 + ", names, 3), 5u);
    EXPECT_EQ(offset_of("x0 + y", names, 3), 5u);
    EXPECT_EQ(offset_of("(x0", names, 3), 3u);
    EXPECT_EQ(offset_of("x0 x1", names, 3), 3u);
    EXPECT_EQ(offset_of("x0^x1", names, 3), 3u);
    EXPECT_EQ(offset_of("", names, 3), 0u);
    EXPECT_EQ(offset_of("x0 $", names, 3), 3u);
    EXPECT_EQ(offset_of("sin(x0)", names, 3), 0u);
}

TEST(Parser, PrintParseRoundtrip)
{
    std::mt19937 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(trial % 3);
        const auto s = random_series(rng, n, 6, 6, 40);
        const auto names = default_coordinates(n);
        EXPECT_EQ(parse_expression(to_expression(s, names), names, 6), s) << to_expression(s, names);
    }
    EXPECT_EQ(to_expression(series(2, 3)), "0");
    EXPECT_EQ(to_expression(rational(-1, 2) * var(2, 3, 0) * var(2, 3, 1) + cst(2, 3, 1)), "1 - 1/2*x0*x1");
}

TEST(Loader, ShippedModelsLoad)
{
    for (const auto *name : {"one-dim", "qc-p1", "nilpotent", "shifted-identity", "broken-assoc"}) {
        EXPECT_NO_THROW(load_model_file(model_path(name))) << name;
    }
    const auto qc = load_model_file(model_path("qc-p1"));
    EXPECT_EQ(qc.dim, 2u);
    EXPECT_EQ(qc.order, 8);
    EXPECT_TRUE(analyze(qc.structure.structure.as_tensor() - qc_p1(8).structure.as_tensor()).vanishes);
    ASSERT_TRUE(qc.euler);
    EXPECT_EQ(qc.euler->field, qc_p1_euler(8));
}

TEST(Loader, Overrides)
{
    const auto m = load_model_file(model_path("qc-p1"), {4, 2, rational(1, 3)});
    EXPECT_EQ(m.order, 4);
    EXPECT_EQ(m.mu_order, 2);
    EXPECT_EQ(*m.lambda0, rational(1, 3));
}

TEST(Loader, SolvesMissingIdentity)
{
    const auto m = load_model(minimal_model());
    EXPECT_FALSE(m.identity_declared);
    ASSERT_TRUE(m.structure.identity);
    EXPECT_EQ((*m.structure.identity)[0].constant_term(), 1);
}

TEST(Loader, Rejections)
{
    auto bad = minimal_model();
    bad["schemaVersion"] = 2;
    EXPECT_THROW(load_model(bad), model_error);

    bad = minimal_model();
    bad["structure"] = ordered_json::array();
    EXPECT_THROW(load_model(bad), model_error);

    bad = minimal_model();
    bad["potential"] = {"x0^2/2"};
    EXPECT_THROW(load_model(bad), model_error);

    bad = minimal_model();
    bad["potential"] = {"x0^2/2 +", "x0*x1"};
    try {
        load_model(bad);
        ADD_FAILURE();
    } catch (const model_error &err) {
        EXPECT_NE(std::string(err.what()).find("potential[0]"), std::string::npos);
        EXPECT_NE(std::string(err.what()).find("offset 8"), std::string::npos);
    }

    bad = minimal_model();
    bad["coordinates"] = {"a", "a"};
    EXPECT_THROW(load_model(bad), model_error);

    bad = minimal_model();
    bad["dimension"] = 0;
    EXPECT_THROW(load_model(bad), model_error);
}

TEST(Loader, CanonicalTablesRoundtrip)
{
    const auto m = load_model_file(model_path("qc-p1"));
    const auto j = model_to_json(m);
    const auto back = load_model(j);
    EXPECT_EQ(back.order, m.structure.valid_to());
    EXPECT_TRUE(analyze(back.structure.structure.as_tensor() - m.structure.structure.as_tensor()).vanishes);
    EXPECT_EQ(model_to_json(back).dump(), j.dump());
}

TEST(Suite, ValidModelsPass)
{
    for (const auto *name : {"one-dim", "qc-p1", "nilpotent", "shifted-identity"}) {
        const auto r = run_check_suite(load_model_file(model_path(name)));
        EXPECT_TRUE(r.ok()) << report_to_text(r);
    }
}

TEST(Suite, BrokenModelNamesOffenses)
{
    const auto r = run_check_suite(load_model_file(model_path("broken-assoc")));
    EXPECT_FALSE(r.ok());
    for (const auto *id : {"r2", "hertling-manin", "associativity"}) {
        const auto *c = r.find(id);
        ASSERT_NE(c, nullptr);
        EXPECT_EQ(c->status, check_status::fail) << id;
        ASSERT_TRUE(c->offense) << id;
    }
    // d1 o (d2 o d1) - d2 o (d1 o d1) = x2 d1 - d1 - x1 x2 d0.
    EXPECT_EQ(*r.find("r2")->offense, "[1,2,1,0] x1*x2 coeff -1");
    EXPECT_EQ(r.find("torsion")->status, check_status::pass);
}

TEST(Suite, SelectionAndSkips)
{
    const auto m = load_model_file(model_path("shifted-identity"));
    const auto r = run_check_suite(m, {"pencil", "hertling-manin"});
    ASSERT_EQ(r.records.size(), 4u);
    EXPECT_EQ(r.records[0].id, "torsion");
    EXPECT_EQ(r.records[3].id, "hertling-manin");
    EXPECT_THROW(run_check_suite(m, {"no-such-check"}), precondition_error);
    const auto all = run_check_suite(m);
    EXPECT_EQ(all.find("euler-weight")->status, check_status::pass);
    EXPECT_EQ(all.find("potential-flatness")->status, check_status::skipped);
    EXPECT_EQ(all.find("nabla-e-e")->detail, "eigen 1/2");
}

TEST(Suite, NonEulerFieldFails)
{
    auto j = read_json_file(model_path("qc-p1"));
    j["euler"]["field"] = {"x0 + x0^2", "2"};
    const auto r = run_check_suite(load_model(j), {"euler", "extended"});
    EXPECT_EQ(r.find("euler-weight")->status, check_status::fail);
    EXPECT_EQ(r.find("euler-compat")->status, check_status::fail);
    EXPECT_EQ(r.find("extended-flatness")->status, check_status::fail);
}

TEST(Suite, DeterministicReports)
{
    const auto m = load_model_file(model_path("qc-p1"));
    const auto a = report_to_json(run_check_suite(m)).dump(2);
    const auto b = report_to_json(run_check_suite(m)).dump(2);
    EXPECT_EQ(a, b);
    EXPECT_EQ(report_to_text(run_check_suite(m)), report_to_text(run_check_suite(m)));
}

TEST(Suite, ReportSchema)
{
    const auto j = report_to_json(run_check_suite(load_model_file(model_path("one-dim")), {"pencil"}));
    EXPECT_EQ(j["schemaVersion"], report_schema_version);
    ASSERT_EQ(j["checks"].size(), 3u);
    const auto &c = j["checks"][0];
    for (const auto *key : {"id", "anchor", "status", "provenDegree", "muDegree", "firstOffense", "detail"}) {
        EXPECT_TRUE(c.contains(key)) << key;
    }
    EXPECT_EQ(j["summary"]["passed"], 3);
}

TEST(Dualize, TwistedModelRechecks)
{
    const auto m = load_model_file(model_path("one-dim"));
    const auto eps = vector_field({parse_expression("1 + x0", m.coordinates, m.order)});
    const auto d = load_model(model_to_json(dualize(m, eps)));
    EXPECT_EQ(d.name, "one-dim-dual");
    const auto r = run_check_suite(d, {"associativity", "identity"});
    EXPECT_TRUE(r.ok()) << report_to_text(r);
}

TEST(Families, JsonRoundtrip)
{
    const auto fam = correlators_from_b(b_from_structure(qc_p1(5)));
    const auto j = family_to_json(fam);
    EXPECT_EQ(family_from_json(j), fam);
    EXPECT_EQ(j["entries"].begin().key(), "0");
    EXPECT_EQ(j["entries"]["1,1"][0][1], "1/1");
    auto bad = j;
    bad["schemaVersion"] = 9;
    EXPECT_THROW(family_from_json(bad), model_error);
}

TEST(Dualize, DeclaresConjugatedConnection)
{
    const auto m = load_model_file(model_path("qc-p1"));
    const auto eps = vector_field({series(2, m.order), parse_expression("exp(-x1)", m.coordinates, m.order)});
    const auto j = model_to_json(dualize(m, eps));
    ASSERT_TRUE(j.contains("connection"));
    const auto d = load_model(j);
    ASSERT_TRUE(d.declared_base);
    EXPECT_FALSE(d.frame_is_flat());
    // eps is flat for the conjugated connection because e is flat in the coordinate frame.
    for (std::size_t a = 0; a < 2; ++a) {
        EXPECT_TRUE(analyze(covariant_derivative(d.base(), d.structure.frame(a), eps)).vanishes);
    }
    const auto r = run_check_suite(d);
    EXPECT_EQ(r.find("associativity")->status, check_status::pass);
    EXPECT_EQ(r.find("identity")->status, check_status::pass);
    EXPECT_EQ(r.find("hertling-manin")->status, check_status::fail);
    for (const auto *id : {"potential-roundtrip", "primitive-section", "master-equation", "euler-compat"}) {
        EXPECT_EQ(r.find(id)->status, check_status::skipped) << id;
    }
    EXPECT_EQ(model_to_json(d).dump(), j.dump());
}
