#include "breaklab/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace breaklab::scenario {

namespace {

using geometry::ConvexPolytope;
using geometry::Domain;

// Walks a document, carrying the JSON pointer of the current value.
class Node {
 public:
  Node(const Json& v, std::string path) : v_(v), path_(std::move(path)) {}

  const Json& value() const { return v_; }
  const std::string& path() const { return path_; }
  [[noreturn]] void fail(const std::string& msg) const { throw SchemaError(path_.empty() ? "/" : path_, msg); }

  void require_object(std::initializer_list<const char*> allowed) const {
    if (!v_.is_object()) fail("expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, _] : v_.items())
      if (!ok.count(k)) Node(v_[k], path_ + "/" + k).fail("unknown property");
  }
  bool has(const char* key) const { return v_.contains(key); }
  Node at(const char* key) const {
    if (!v_.contains(key)) fail(std::string("missing required property '") + key + "'");
    return {v_.at(key), path_ + "/" + key};
  }
  Node at(std::size_t i) const { return {v_.at(i), path_ + "/" + std::to_string(i)}; }
  std::size_t size() const { return v_.size(); }

  const Json& array(std::size_t min_items = 0) const {
    if (!v_.is_array()) fail("expected an array");
    if (v_.size() < min_items) fail("expected at least " + std::to_string(min_items) + " items");
    return v_;
  }
  double number() const {
    if (!v_.is_number()) fail("expected a number");
    const double x = v_.get<double>();
    if (!std::isfinite(x)) fail("expected a finite number");
    return x;
  }
  double positive() const {
    const double x = number();
    if (!(x > 0.0)) fail("expected a positive number");
    return x;
  }
  std::int64_t integer(std::int64_t lo, std::int64_t hi) const {
    if (!v_.is_number_integer()) fail("expected an integer");
    if (v_.is_number_unsigned() && v_.get<std::uint64_t>() > static_cast<std::uint64_t>(hi))
      fail("integer out of range");
    const auto x = v_.get<std::int64_t>();
    if (x < lo || x > hi) fail("integer out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
  }
  std::uint64_t seed() const {
    if (!v_.is_number_unsigned() && !(v_.is_number_integer() && v_.get<std::int64_t>() >= 0))
      fail("expected a non-negative integer");
    return v_.get<std::uint64_t>();
  }
  std::string string() const {
    if (!v_.is_string()) fail("expected a string");
    return v_.get<std::string>();
  }
  Vec vec(int dim) const {
    array();
    if (static_cast<int>(v_.size()) != dim) fail("expected " + std::to_string(dim) + " coordinates");
    Vec x(dim);
    for (int a = 0; a < dim; ++a) x(a) = at(static_cast<std::size_t>(a)).number();
    return x;
  }
  std::vector<Vec> vecs(int dim, std::size_t min_items) const {
    array(min_items);
    std::vector<Vec> out;
    for (std::size_t i = 0; i < v_.size(); ++i) out.push_back(at(i).vec(dim));
    return out;
  }
  std::vector<double> numbers(std::size_t min_items) const {
    array(min_items);
    std::vector<double> out;
    for (std::size_t i = 0; i < v_.size(); ++i) out.push_back(at(i).number());
    return out;
  }

 private:
  const Json& v_;
  std::string path_;
};

ConvexPolytope region(const Node& n, int dim) {
  if (!n.value().is_object()) n.fail("expected a region object");
  const std::string type = n.at("type").string();
  try {
    if (type == "interval") {
      n.require_object({"type", "lo", "hi"});
      if (dim != 1) n.fail("interval regions need dimension 1");
      const double lo = n.at("lo").number();
      const double hi = n.at("hi").number();
      if (!(hi > lo)) n.fail("interval needs lo < hi");
      return ConvexPolytope::interval(lo, hi);
    }
    if (type == "box") {
      n.require_object({"type", "lo", "hi"});
      const Vec lo = n.at("lo").vec(dim);
      const Vec hi = n.at("hi").vec(dim);
      if (!((hi - lo).minCoeff() > 0.0)) n.fail("box needs lo < hi on every axis");
      return ConvexPolytope::box(lo, hi);
    }
    if (type == "polygon") {
      n.require_object({"type", "vertices"});
      if (dim != 2) n.fail("polygon regions need dimension 2");
      auto p = ConvexPolytope::polygon(n.at("vertices").vecs(2, 3));
      if (p.is_empty() || p.degenerate()) n.fail("polygon has empty interior");
      return p;
    }
    if (type == "hull") {
      n.require_object({"type", "vertices"});
      return ConvexPolytope::hull(dim, n.at("vertices").vecs(dim, static_cast<std::size_t>(dim) + 1));
    }
    if (type == "regular_polygon") {
      n.require_object({"type", "center", "radius", "sides"});
      if (dim != 2) n.fail("regular_polygon regions need dimension 2");
      return ConvexPolytope::regular_polygon(n.at("center").vec(2), n.at("radius").positive(),
                                             static_cast<int>(n.at("sides").integer(3, 1 << 16)));
    }
    if (type == "halfspaces") {
      n.require_object({"type", "halfspaces"});
      const Node list = n.at("halfspaces");
      list.array(static_cast<std::size_t>(dim) + 1);
      std::vector<geometry::HalfSpace> hs;
      for (std::size_t i = 0; i < list.size(); ++i) {
        const Node h = list.at(i);
        h.require_object({"normal", "offset"});
        const Vec normal = h.at("normal").vec(dim);
        if (!(normal.norm() > 0.0)) h.at("normal").fail("zero normal");
        hs.push_back(geometry::HalfSpace::make(normal, h.at("offset").number()));
      }
      // Bound the intersection so unbounded input is caught instead of
      // silently truncated.
      const double big = 1e6;
      for (int a = 0; a < dim; ++a) {
        Vec e = Vec::Zero(dim);
        e(a) = 1.0;
        hs.push_back({e, big, -1});
        hs.push_back({-e, big, -1});
      }
      auto p = ConvexPolytope::from_halfspaces(dim, hs);
      if (p.is_empty() || p.degenerate()) n.fail("half-spaces have empty intersection");
      if ((p.bounds().hi - p.bounds().lo).maxCoeff() >= big) n.fail("half-spaces do not bound a region");
      return p;
    }
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    n.fail(e.what());
  }
  n.at("type").fail("unknown region type '" + type + "'");
}

Domain domain(const Node& n, int dim) {
  if (n.value().is_object() && n.has("pieces")) {
    n.require_object({"pieces"});
    const Node list = n.at("pieces");
    list.array(1);
    std::vector<ConvexPolytope> pieces;
    for (std::size_t i = 0; i < list.size(); ++i) pieces.push_back(region(list.at(i), dim));
    return Domain(std::move(pieces));
  }
  return Domain(region(n, dim));
}

field::FieldSpec field_spec(const Node& n, int dim) {
  n.require_object({"name", "center", "scale", "terms"});
  field::FieldSpec s;
  s.name = n.at("name").string();
  if (n.has("center")) {
    const Vec c = n.at("center").vec(dim);
    s.center.assign(c.data(), c.data() + dim);
  }
  if (n.has("scale")) s.scale = n.at("scale").number();
  if (n.has("terms")) {
    const Node terms = n.at("terms");
    terms.array(1);
    for (std::size_t i = 0; i < terms.size(); ++i) s.terms.push_back(field_spec(terms.at(i), dim));
  }
  if (s.name == "sum" && s.terms.empty()) n.fail("'sum' needs terms");
  if (s.name != "sum" && !s.terms.empty()) n.at("terms").fail("only 'sum' takes terms");
  try {
    field::make_generator(s, dim);
  } catch (const Error& e) {
    n.fail(e.what());
  }
  return s;
}

void check_decreasing(const Node& n, const std::vector<double>& t) {
  for (std::size_t k = 1; k < t.size(); ++k)
    if (!(t[k] < t[k - 1])) n.at(k).fail("t_grid must be strictly decreasing for polar experiments");
}

}  // namespace

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::potential:
      return "potential";
    case Kind::sdot:
      return "sdot";
    case Kind::field:
      return "field";
  }
  return "?";
}

Scenario parse(const Json& doc) {
  const Node root(doc, "");
  root.require_object({"schema", "kind", "name", "dimension", "domain", "seed", "t_grid", "expanding",
                       "tolerances", "potential", "sdot", "field"});
  Scenario s;
  s.source = doc;
  if (root.has("schema") && root.at("schema").string() != kSchemaId)
    root.at("schema").fail(std::string("expected '") + kSchemaId + "'");
  const std::string kind = root.at("kind").string();
  if (kind == "potential")
    s.kind = Kind::potential;
  else if (kind == "sdot")
    s.kind = Kind::sdot;
  else if (kind == "field")
    s.kind = Kind::field;
  else
    root.at("kind").fail("expected one of potential, sdot, field");
  for (const char* payload : {"potential", "sdot", "field"})
    if (payload != kind && root.has(payload)) root.at(payload).fail("payload does not match kind '" + kind + "'");

  s.name = root.has("name") ? root.at("name").string() : std::string(kind);
  s.dimension = static_cast<int>(root.at("dimension").integer(1, 3));
  const int dim = s.dimension;
  s.domain = domain(root.at("domain"), dim);
  if (root.has("seed")) s.seed = root.at("seed").seed();
  if (root.has("t_grid")) {
    const Node tg = root.at("t_grid");
    s.t_grid = tg.numbers(1);
    for (std::size_t k = 0; k < s.t_grid.size(); ++k) tg.at(k).positive();
  }
  if (root.has("expanding")) {
    const Node e = root.at("expanding");
    e.require_object({"times", "probes"});
    if (e.has("times")) {
      s.expanding_times = e.at("times").numbers(1);
      for (std::size_t k = 0; k < s.expanding_times.size(); ++k) e.at("times").at(k).positive();
    }
    if (e.has("probes")) s.expanding_probes = static_cast<std::size_t>(e.at("probes").integer(64, 1 << 22));
  }
  if (root.has("tolerances")) {
    const Node t = root.at("tolerances");
    t.require_object({"sdot", "helmholtz", "pairing", "gpsi", "det"});
    if (t.has("sdot")) s.tol.sdot = t.at("sdot").positive();
    if (t.has("helmholtz")) s.tol.helmholtz = t.at("helmholtz").positive();
    if (t.has("pairing")) s.tol.pairing = t.at("pairing").positive();
    if (t.has("gpsi")) s.tol.gpsi = t.at("gpsi").positive();
    if (t.has("det")) s.tol.det = t.at("det").positive();
  }

  switch (s.kind) {
    case Kind::potential: {
      const Node p = root.at("potential");
      p.require_object({"cells", "gradients", "offsets"});
      const Node cl = p.at("cells");
      cl.array(1);
      std::vector<ConvexPolytope> cells;
      for (std::size_t i = 0; i < cl.size(); ++i) cells.push_back(region(cl.at(i), dim));
      const Node gl = p.at("gradients");
      if (gl.array().size() != cells.size()) gl.fail("expected one gradient per cell");
      std::vector<Vec> grads = gl.vecs(dim, 1);
      geometry::CellPartition partition;
      try {
        partition = geometry::CellPartition(s.domain, std::move(cells));
      } catch (const Error& e) {
        cl.fail(e.what());
      }
      if (p.has("offsets")) {
        const Node ol = p.at("offsets");
        if (ol.array().size() != grads.size()) ol.fail("expected one offset per cell");
        s.potential.emplace(std::move(partition), std::move(grads), ol.numbers(1));
      } else {
        try {
          s.potential = potential::PiecewiseAffinePotential::from_gradients(std::move(partition), std::move(grads));
        } catch (const Error& e) {
          gl.fail(e.what());
        }
      }
      break;
    }
    case Kind::sdot: {
      if (!s.domain.is_convex()) root.at("domain").fail("sdot scenarios need a convex domain");
      const Node p = root.at("sdot");
      p.require_object({"sites", "masses"});
      transport::DiscreteTarget t;
      t.sites = p.at("sites").vecs(dim, 1);
      if (p.has("masses")) {
        const Node ml = p.at("masses");
        if (ml.array().size() != t.sites.size()) ml.fail("expected one mass per site");
        t.masses = ml.numbers(1);
        for (std::size_t i = 0; i < t.masses.size(); ++i) ml.at(i).positive();
      } else {
        t.masses.assign(t.sites.size(), s.domain.volume() / static_cast<double>(t.sites.size()));
      }
      try {
        transport::validate_target(s.domain, t);
      } catch (const Error& e) {
        p.fail(e.what());
      }
      s.target = std::move(t);
      break;
    }
    case Kind::field: {
      if (dim > 2) root.at("dimension").fail("field scenarios support dimension 1 or 2");
      if (!s.domain.is_convex()) root.at("domain").fail("field scenarios need a convex domain");
      const Node p = root.at("field");
      p.require_object({"b", "grid", "samples", "estimator", "samples_per_bin"});
      FieldPayload f;
      f.b = field_spec(p.at("b"), dim);
      if (p.has("grid")) f.grid = static_cast<int>(p.at("grid").integer(16, 1024));
      if (p.has("estimator")) {
        const std::string e = p.at("estimator").string();
        if (e == "semidiscrete")
          f.polar.estimator = transport::PolarEstimator::semidiscrete;
        else if (e == "assignment")
          f.polar.estimator = transport::PolarEstimator::assignment;
        else
          p.at("estimator").fail("expected semidiscrete or assignment");
      }
      const auto max_samples = f.polar.estimator == transport::PolarEstimator::assignment
                                   ? static_cast<std::int64_t>(transport::kMaxExactSize)
                                   : std::int64_t{1} << 16;
      if (p.has("samples")) f.samples = static_cast<std::size_t>(p.at("samples").integer(2, max_samples));
      if (p.has("samples_per_bin")) f.polar.samples_per_bin = p.at("samples_per_bin").positive();
      f.polar.sdot_tol = s.tol.sdot;
      f.polar.helmholtz_tol = s.tol.helmholtz;
      const field::Grid probe(s.domain, f.grid);
      if (probe.min_axis_cells() < 16) p.at("grid").fail("every axis needs at least 16 cells");
      if (!s.t_grid.empty()) check_decreasing(root.at("t_grid"), s.t_grid);
      s.field = std::move(f);
      break;
    }
  }
  return s;
}

Scenario load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw SchemaError("/", "cannot read " + file.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw SchemaError("/", std::string("malformed JSON: ") + e.what());
  }
  return parse(doc);
}

Json region_json(const geometry::ConvexPolytope& p) {
  const int dim = p.dimension();
  auto coords = [](const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  if (dim == 1) return {{"type", "interval"}, {"lo", p.vertices()[0](0)}, {"hi", p.vertices()[1](0)}};
  if (dim == 2) {
    Json verts = Json::array();
    for (const auto& v : p.vertices()) verts.push_back(coords(v));
    return {{"type", "polygon"}, {"vertices", verts}};
  }
  Json hs = Json::array();
  for (const auto& h : p.halfspaces()) hs.push_back({{"normal", coords(h.normal)}, {"offset", h.offset}});
  return {{"type", "halfspaces"}, {"halfspaces", hs}};
}

Json potential_scenario(const std::string& name, const geometry::Domain& domain,
                        const potential::PiecewiseAffinePotential& phi, std::optional<std::uint64_t> seed) {
  Json doc;
  doc["schema"] = kSchemaId;
  doc["kind"] = "potential";
  doc["name"] = name;
  doc["dimension"] = phi.dimension();
  if (domain.is_convex()) {
    doc["domain"] = region_json(domain.convex_piece());
  } else {
    Json pieces = Json::array();
    for (const auto& p : domain.pieces()) pieces.push_back(region_json(p));
    doc["domain"] = {{"pieces", pieces}};
  }
  if (seed) doc["seed"] = *seed;
  Json cells = Json::array();
  Json grads = Json::array();
  for (std::size_t i = 0; i < phi.partition().size(); ++i) {
    cells.push_back(region_json(phi.partition().cells()[i]));
    const Vec& g = phi.gradients()[i];
    grads.push_back(std::vector<double>(g.data(), g.data() + g.size()));
  }
  doc["potential"] = {{"cells", cells}, {"gradients", grads}, {"offsets", phi.offsets()}};
  return doc;
}

}  // namespace breaklab::scenario
