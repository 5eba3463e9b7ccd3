#include <cstdlib>

#include "breaklab/report.hpp"
#include "doctest.h"

using namespace breaklab;
using scenario::Json;
using scenario::SchemaError;

namespace {

Json abs_doc(double sign) {
  return Json::parse(R"({
    "kind": "potential", "dimension": 1, "seed": 1,
    "domain": {"type": "interval", "lo": -1, "hi": 1},
    "potential": {"cells": [{"type": "interval", "lo": -1, "hi": 0}, {"type": "interval", "lo": 0, "hi": 1}],
                  "gradients": [[-1], [1]]}})")
      .patch(Json::array({{{"op", "replace"}, {"path", "/potential/gradients"}, {"value", {{-sign}, {sign}}}}}));
}

Json pyramid_doc() {
  return Json::parse(R"({
    "kind": "potential", "dimension": 2, "seed": 3,
    "domain": {"type": "box", "lo": [-1, -1], "hi": [1, 1]},
    "potential": {"cells": [
        {"type": "polygon", "vertices": [[0, 0], [1, -1], [1, 1]]},
        {"type": "polygon", "vertices": [[0, 0], [1, 1], [-1, 1]]},
        {"type": "polygon", "vertices": [[0, 0], [-1, 1], [-1, -1]]},
        {"type": "polygon", "vertices": [[0, 0], [-1, -1], [1, -1]]}],
      "gradients": [[1, 0], [0, 1], [-1, 0], [0, -1]]}})");
}

std::string error_path(const Json& doc) {
  try {
    scenario::parse(doc);
  } catch (const SchemaError& e) {
    return e.path();
  }
  return "<accepted>";
}

Json with(Json doc, const std::string& pointer, Json value) {
  doc[Json::json_pointer(pointer)] = std::move(value);
  return doc;
}

Json without(Json doc, const std::string& pointer) {
  return doc.patch(Json::array({{{"op", "remove"}, {"path", pointer}}}));
}

std::string verdict(const report::Outcome& o, const char* check) {
  return o.report.at("checks").at(check).at("verdict").get<std::string>();
}

}  // namespace

TEST_CASE("valid scenarios build their payloads") {
  const auto s = scenario::parse(abs_doc(1.0));
  CHECK(s.kind == scenario::Kind::potential);
  CHECK(s.potential->partition().size() == 2);
  CHECK(s.potential->offsets()[1] == doctest::Approx(0.0));
  CHECK(*s.seed == 1);

  const auto t = scenario::parse(Json::parse(R"({"kind": "sdot", "dimension": 2,
      "domain": {"type": "box", "lo": [0, 0], "hi": [2, 1]}, "sdot": {"sites": [[0, 0], [1, 0], [0, 1]]}})"));
  for (double m : t.target->masses) CHECK(m == doctest::Approx(2.0 / 3.0));

  const auto f = scenario::parse(Json::parse(R"({"kind": "field", "dimension": 2,
      "domain": {"type": "regular_polygon", "center": [0, 0], "radius": 1, "sides": 32},
      "field": {"b": {"name": "sum", "terms": [{"name": "rotational_disk"}, {"name": "radial_gradient", "scale": 2}]}}})"));
  CHECK(f.field->b.terms.size() == 2);
  CHECK(f.field->polar.samples_per_bin == transport::PolarOptions{}.samples_per_bin);

  const auto h = scenario::parse(Json::parse(R"({"kind": "potential", "dimension": 3,
      "domain": {"type": "hull", "vertices": [[0,0,0],[1,0,0],[0,1,0],[0,0,1]]},
      "potential": {"cells": [{"type": "halfspaces", "halfspaces": [
          {"normal": [-1,0,0], "offset": 0}, {"normal": [0,-1,0], "offset": 0},
          {"normal": [0,0,-1], "offset": 0}, {"normal": [1,1,1], "offset": 1}]}],
        "gradients": [[1, 2, 3]]}})"));
  CHECK(h.domain.volume() == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("schema violations carry the offending path") {
  const Json ok = abs_doc(1.0);
  CHECK(error_path(with(ok, "/extra", 1)) == "/extra");
  CHECK(error_path(without(ok, "/domain")) == "/");
  CHECK(error_path(with(ok, "/kind", "nope")) == "/kind");
  CHECK(error_path(with(ok, "/dimension", 4)) == "/dimension");
  CHECK(error_path(with(ok, "/seed", -1)) == "/seed");
  CHECK(error_path(with(ok, "/t_grid", Json::array({0.1, 0.0}))) == "/t_grid/1");
  CHECK(error_path(with(ok, "/sdot", Json::object())) == "/sdot");
  CHECK(error_path(with(ok, "/domain/type", "disk")) == "/domain/type");
  CHECK(error_path(with(ok, "/potential/gradients/1", Json::array({1, 2}))) == "/potential/gradients/1");
  // Cells that leave a gap do not tile the domain.
  CHECK(error_path(with(ok, "/potential/cells/1/hi", 0.5)) == "/potential/cells");
  CHECK(error_path(with(ok, "/potential/offsets", Json::array({0.0}))) == "/potential/offsets");
  CHECK(error_path(with(pyramid_doc(), "/potential/cells/0/vertices/0", Json::array({0.5, 0.0}))) ==
        "/potential/cells");

  const Json sd = Json::parse(R"({"kind": "sdot", "dimension": 2,
      "domain": {"type": "box", "lo": [0, 0], "hi": [1, 1]}, "sdot": {"sites": [[0, 0], [1, 0]], "masses": [0.5, 0.4]}})");
  CHECK(error_path(sd) == "/sdot");
  CHECK(error_path(with(sd, "/sdot/masses", Json::array({0.5, 0.5, 0.0}))) == "/sdot/masses");

  const Json fd = Json::parse(R"({"kind": "field", "dimension": 2,
      "domain": {"type": "box", "lo": [0, 0], "hi": [1, 1]}, "field": {"b": {"name": "zero"}}})");
  CHECK(error_path(fd) == "<accepted>");
  CHECK(error_path(with(fd, "/field/grid", 8)) == "/field/grid");
  CHECK(error_path(with(fd, "/t_grid", Json::array({0.1, 0.2}))) == "/t_grid/1");
  CHECK(error_path(with(fd, "/field/b/name", "vortex")) == "/field/b");
  CHECK(error_path(with(with(fd, "/dimension", 3), "/domain",
                        Json::parse(R"({"type": "box", "lo": [0,0,0], "hi": [1,1,1]})"))) == "/dimension");
}

TEST_CASE("CSV follows RFC 4180") {
  report::Table t{"x", {"name", "value", "note"}, {}};
  t.rows.push_back({"plain", 0.1, nullptr});
  t.rows.push_back({"a,b", -2.5e-10, "say \"hi\""});
  t.rows.push_back({"line\nbreak", 3, true});
  CHECK(report::to_csv(t) ==
        "name,value,note\r\n"
        "plain,0.1,\r\n"
        "\"a,b\",-2.5e-10,\"say \"\"hi\"\"\"\r\n"
        "\"line\nbreak\",3,1\r\n");
}

TEST_CASE("emitted regions parse back to the same partition") {
  const auto s = scenario::parse(pyramid_doc());
  const Json doc = scenario::potential_scenario("copy", s.domain, *s.potential, 3);
  const auto back = scenario::parse(doc);
  REQUIRE(back.potential->partition().size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(geometry::volume(back.potential->partition().cells()[i]) ==
          doctest::Approx(geometry::volume(s.potential->partition().cells()[i])).epsilon(1e-15));
    CHECK((back.potential->gradients()[i] - s.potential->gradients()[i]).norm() == 0.0);
  }
}

TEST_CASE("seed precedence: command line, scenario, environment") {
  auto s = scenario::parse(abs_doc(1.0));
  CHECK(report::resolve_seed(9, s) == 9);
  CHECK(report::resolve_seed(std::nullopt, s) == 1);
  s.seed.reset();
  ::setenv("BREAKLAB_SEED", "42", 1);
  CHECK(report::resolve_seed(std::nullopt, s) == 42);
  ::setenv("BREAKLAB_SEED", "x", 1);
  CHECK_THROWS_AS(report::resolve_seed(std::nullopt, s), SchemaError);
  ::unsetenv("BREAKLAB_SEED");
  CHECK(report::resolve_seed(std::nullopt, s) == 0);
}

TEST_CASE("potential runs: |x| passes, -|x| fails with witnesses") {
  const auto good = report::run(scenario::parse(abs_doc(1.0)), 1);
  for (const char* c : {"validate", "convexity", "mpc", "expanding", "subharmonicity", "gpsi_monotonicity", "det_sweep"})
    CHECK(verdict(good, c) == "pass");
  CHECK_FALSE(good.findings_failed);

  const auto bad = report::run(scenario::parse(abs_doc(-1.0)), 1);
  CHECK(verdict(bad, "validate") == "pass");
  for (const char* c : {"convexity", "mpc", "subharmonicity", "gpsi_monotonicity"}) CHECK(verdict(bad, c) == "fail");
  CHECK(bad.findings_failed);
  const auto& ev = bad.report.at("checks").at("convexity").at("evidence");
  CHECK(ev.at("witnesses").at(0).at("lambda").get<double>() == doctest::Approx(-2.0));
  CHECK(bad.report.at("checks").at("mpc").at("evidence").at("witness_t").is_number());
  CHECK(bad.report.at("checks").at("gpsi_monotonicity").at("evidence").at("initial_increase").get<bool>());
}

TEST_CASE("reports are byte-identical across runs") {
  const auto s = scenario::parse(pyramid_doc());
  CHECK(report::dump(report::run(s, 5).report) == report::dump(report::run(s, 5).report));
}

TEST_CASE("sdot commands") {
  const auto s = scenario::parse(Json::parse(R"({"kind": "sdot", "dimension": 2, "seed": 1,
      "domain": {"type": "box", "lo": [0, 0], "hi": [1, 1]}, "tolerances": {"sdot": 1e-12},
      "sdot": {"sites": [[0, 0], [1, 0]]}})"));
  const auto o = report::solve_sdot(s, 1);
  const auto w = o.report.at("sdot").at("weights").get<std::vector<double>>();
  CHECK(w[0] == 0.0);
  CHECK(std::abs(w[1] + 0.5) <= 1e-9);
  REQUIRE(o.documents.size() == 1);
  const auto derived = scenario::parse(o.documents[0].second);
  const auto r = report::run(derived, 1);
  CHECK_FALSE(r.findings_failed);
  CHECK_THROWS_AS(report::polar(s, 1), SchemaError);

  const auto one = scenario::parse(Json::parse(R"({"kind": "sdot", "dimension": 2,
      "domain": {"type": "box", "lo": [0, 0], "hi": [1, 1]}, "sdot": {"sites": [[0.3, 0.3]]}})"));
  const auto single = report::solve_sdot(one, 0);
  CHECK(single.report.at("sdot").at("weights") == Json::array({0.0}));
  CHECK(single.report.at("sdot").at("max_residual").get<double>() <= 1e-14);
}

TEST_CASE("zero field: every error column vanishes") {
  const auto s = scenario::parse(Json::parse(R"({"kind": "field", "dimension": 2, "seed": 2,
      "domain": {"type": "regular_polygon", "center": [0, 0], "radius": 1, "sides": 32},
      "t_grid": [0.4, 0.2], "field": {"b": {"name": "zero"}, "grid": 32, "samples": 128}})"));
  const auto o = report::polar(s, 2);
  CHECK(verdict(o, "polar_limit") == "pass");
  const auto& t = o.tables.front();
  REQUIRE(t.name == "polar");
  for (const auto& row : t.rows) {
    CHECK(row[1] == 0.0);
    CHECK(row[4] == 0.0);
  }
}
