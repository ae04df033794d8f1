#include "koszul/manifold_file.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "koszul/error.hpp"

namespace koszul {

using nlohmann::json;

std::string to_string(FixtureKind kind) {
  switch (kind) {
    case FixtureKind::Manifold:
      return "manifold";
    case FixtureKind::Product:
      return "product";
    case FixtureKind::Conformal:
      return "conformal";
  }
  return "?";
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ParseError(where + ": " + what);
}

const json& need(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) fail(where, std::string("missing \"") + key + "\"");
  return j.at(key);
}

Expr parse_expr(const json& j, const std::string& where) {
  if (j.is_number()) return Expr(j.get<double>());
  if (!j.is_string()) fail(where, "expression must be a string or a number");
  try {
    return Expr::parse(j.get<std::string>());
  } catch (const ParseError& e) {
    fail(where, e.what());
  }
}

std::vector<Expr> parse_row(const json& j, int n, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) fail(where, "expected " + std::to_string(n) + " entries");
  std::vector<Expr> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(parse_expr(j[i], where));
  return out;
}

std::vector<std::vector<Expr>> parse_matrix(const json& j, int n, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) fail(where, "expected " + std::to_string(n) + " rows");
  std::vector<std::vector<Expr>> rows;
  for (const auto& r : j) rows.push_back(parse_row(r, n, where));
  return rows;
}

void check_coords(const Expr& e, int n, const std::string& where) {
  if (e.max_coord() >= n) fail(where, "expression uses coordinate " + std::to_string(e.max_coord()));
}

std::vector<Point> parse_points(const json& j, int n, const std::string& where) {
  std::vector<Point> out;
  if (!j.is_array()) fail(where, "expected a list of points");
  for (const auto& p : j) {
    if (!p.is_array() || static_cast<int>(p.size()) != n) fail(where, "point of wrong dimension");
    Point q;
    for (const auto& v : p) q.push_back(v.get<double>());
    out.push_back(q);
  }
  return out;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void add_coordinate_fields(Fixture& f) {
  for (int i = 0; i < f.chart.dim(); ++i) f.fields[f.coords[i]] = VectorField::coordinate(f.chart, i);
}

Fixture parse_manifold(const json& j, const std::string& where) {
  Fixture f;
  f.kind = FixtureKind::Manifold;
  int n = 0;
  if (j.contains("coords")) {
    for (const auto& c : j.at("coords")) f.coords.push_back(c.get<std::string>());
    n = static_cast<int>(f.coords.size());
  } else {
    n = need(j, "dim", where).get<int>();
    for (int i = 0; i < n; ++i) f.coords.push_back("x" + std::to_string(i));
  }
  if (n < 1) fail(where, "dimension must be positive");
  if (j.contains("dim") && j.at("dim").get<int>() != n) fail(where, "dim disagrees with coords");

  const json& b = need(j, "bounds", where);
  if (!b.is_array() || static_cast<int>(b.size()) != n) fail(where, "bounds must list one interval per coordinate");
  std::vector<Interval> bounds;
  for (const auto& iv : b) {
    if (!iv.is_array() || iv.size() != 2) fail(where, "interval must be [lo, hi]");
    bounds.push_back({iv[0].get<double>(), iv[1].get<double>()});
    if (!(bounds.back().lo <= bounds.back().hi)) fail(where, "empty interval");
  }
  f.chart = ChartDomain(bounds);

  auto rows = parse_matrix(need(j, "metric", where), n, where + " metric");
  for (const auto& r : rows) {
    for (const auto& e : r) check_coords(e, n, where + " metric");
  }
  f.metric = MetricField(f.chart, rows);

  add_coordinate_fields(f);
  if (j.contains("fields")) {
    for (const auto& [name, comps] : j.at("fields").items()) {
      auto c = parse_row(comps, n, where + " field " + name);
      for (const auto& e : c) check_coords(e, n, where + " field " + name);
      f.fields[name] = VectorField(f.chart, c);
    }
  }
  if (j.contains("scalars")) {
    for (const auto& [name, e] : j.at("scalars").items()) {
      Expr x = parse_expr(e, where + " scalar " + name);
      check_coords(x, n, where + " scalar " + name);
      f.scalars[name] = ScalarField(f.chart, x);
    }
  }
  if (j.contains("structure")) {
    f.structure = ProductStructure(f.chart, parse_matrix(j.at("structure"), n, where + " structure"));
  }
  if (j.contains("p")) f.p = f.field(need(j.at("p"), "field", where + " p").get<std::string>());
  if (j.contains("radical")) {
    for (const auto& r : j.at("radical")) f.radical.emplace_back(f.chart, parse_row(r, n, where + " radical"));
  }
  return f;
}

Fixture load_factor(const std::filesystem::path& base_dir, const json& ref, const std::string& where) {
  if (!ref.is_string()) fail(where, "reference must be a path");
  const auto path = base_dir / ref.get<std::string>();
  return parse_manifold(read_json(path), path.string());
}

Fixture parse_product(const json& j, const std::filesystem::path& dir, const std::string& where) {
  Fixture base = load_factor(dir, need(j, "base", where), where + " base");
  WarpedProductSpec spec;
  spec.base = {base.chart, base.metric, base.structure};
  if (j.contains("base_structure")) {
    spec.base.structure =
        ProductStructure(base.chart, parse_matrix(j.at("base_structure"), base.chart.dim(), where + " base_structure"));
  }
  std::vector<Fixture> factors{base};
  const json& fibers = need(j, "fibers", where);
  if (!fibers.is_array() || fibers.empty()) fail(where, "a product needs at least one fiber");
  for (const auto& fj : fibers) {
    Fixture fib = load_factor(dir, need(fj, "ref", where), where + " fiber");
    Expr warp = parse_expr(need(fj, "warp", where), where + " warp");
    check_coords(warp, base.chart.dim(), where + " warp");
    std::optional<ProductStructure> st = fib.structure;
    if (fj.contains("structure")) {
      st = ProductStructure(fib.chart, parse_matrix(fj.at("structure"), fib.chart.dim(), where + " fiber structure"));
    }
    spec.fibers.push_back({fib.chart, fib.metric, ScalarField(base.chart, warp), st});
    factors.push_back(fib);
  }

  if (j.contains("p")) {
    const json& pj = j.at("p");
    const std::string on = need(pj, "on", where + " p").get<std::string>();
    int factor = 0;
    if (on == "base") {
      factor = 0;
    } else if (on.rfind("fiber:", 0) == 0) {
      factor = std::stoi(on.substr(6));
      if (factor < 1 || factor > spec.fiber_count()) fail(where, "p on a fiber that does not exist");
    } else {
      fail(where, "p.on must be \"base\" or \"fiber:<j>\"");
    }
    spec.p = Slot{factor, factors[factor].field(need(pj, "field", where + " p").get<std::string>())};
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    fail(where, e.what());
  }

  Fixture f;
  f.kind = FixtureKind::Product;
  f.chart = spec.chart();
  f.metric = assemble_product_metric(spec);
  if (spec.has_structure()) f.structure = assemble_product_structure(spec);
  if (j.contains("coords")) {
    for (const auto& c : j.at("coords")) f.coords.push_back(c.get<std::string>());
    if (static_cast<int>(f.coords.size()) != f.chart.dim()) fail(where, "coords has the wrong length");
  } else {
    for (const auto& fac : factors) f.coords.insert(f.coords.end(), fac.coords.begin(), fac.coords.end());
  }
  if (std::set<std::string>(f.coords.begin(), f.coords.end()).size() != f.coords.size()) {
    fail(where, "coordinate names collide; give \"coords\" explicitly");
  }
  add_coordinate_fields(f);
  // Named factor fields, lifted, when the name is free.
  for (int k = 0; k < static_cast<int>(factors.size()); ++k) {
    for (const auto& [name, v] : factors[k].fields) {
      if (std::find(factors[k].coords.begin(), factors[k].coords.end(), name) != factors[k].coords.end()) continue;
      if (!f.fields.count(name)) f.fields[name] = lift_field(spec, k, v);
    }
  }
  for (const auto& [name, s] : base.scalars) f.scalars[name] = ScalarField(f.chart, s.expr);
  for (int k = 1; k <= spec.fiber_count(); ++k) {
    f.scalars["f" + std::to_string(k)] = ScalarField(f.chart, spec.fibers[k - 1].warp.expr);
  }
  if (spec.p) f.p = lift_field(spec, *spec.p);
  f.product = spec;
  return f;
}

Fixture parse_conformal(const json& j, const std::filesystem::path& dir, const std::string& where) {
  Fixture base = load_factor(dir, need(j, "base", where), where + " base");
  const int n = base.chart.dim();
  ConformalSpec spec;
  spec.chart = base.chart;
  spec.base_metric = base.metric;
  Expr w = parse_expr(need(j, "omega", where), where + " omega");
  check_coords(w, n, where + " omega");
  spec.omega = ScalarField(base.chart, w);
  spec.structure = base.structure;
  if (j.contains("structure")) spec.structure = ProductStructure(base.chart, parse_matrix(j.at("structure"), n, where));

  Fixture f = base;
  f.kind = FixtureKind::Conformal;
  f.metric = spec.metric();
  f.structure = spec.structure;
  f.radical.clear();
  f.scalars["omega"] = spec.omega;
  f.conformal = spec;
  return f;
}

}  // namespace

int Fixture::coord_index(const std::string& name) const {
  auto it = std::find(coords.begin(), coords.end(), name);
  return it == coords.end() ? -1 : static_cast<int>(it - coords.begin());
}

int Fixture::factor_of(int coord) const {
  if (!product) return 0;
  for (int k = product->factor_count() - 1; k >= 0; --k) {
    if (coord >= product->offset(k)) return k;
  }
  return 0;
}

const VectorField& Fixture::field(const std::string& name) const {
  auto it = fields.find(name);
  if (it == fields.end()) throw ParseError("fixture " + id + " has no field \"" + name + "\"");
  return it->second;
}

Slot Fixture::slot(const std::string& coord_name) const {
  const int i = coord_index(coord_name);
  if (i < 0) throw ParseError("fixture " + id + " has no coordinate \"" + coord_name + "\"");
  if (!product) return {0, VectorField::coordinate(chart, i)};
  const int k = factor_of(i);
  return {k, VectorField::coordinate(product->factor_chart(k), i - product->offset(k))};
}

std::vector<Expr> Fixture::expressions() const {
  std::vector<Expr> out = metric.packed();
  for (const auto& [name, v] : fields) out.insert(out.end(), v.components().begin(), v.components().end());
  for (const auto& [name, s] : scalars) out.push_back(s.expr);
  if (structure) {
    for (int a = 0; a < structure->dim(); ++a) {
      for (int b = 0; b < structure->dim(); ++b) out.push_back(structure->entry(a, b));
    }
  }
  return out;
}

Fixture parse_fixture(const std::string& json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(e.what());
  }
  const std::string id = j.value("id", std::string("unnamed"));
  const std::string kind = j.value("kind", std::string("manifold"));
  Fixture f;
  try {
    if (kind == "manifold") {
      f = parse_manifold(j, id);
    } else if (kind == "product") {
      f = parse_product(j, base_dir, id);
    } else if (kind == "conformal") {
      f = parse_conformal(j, base_dir, id);
    } else {
      fail(id, "unknown kind \"" + kind + "\"");
    }
    f.radical_stationary = j.value("radical_stationary", true);
    if (j.contains("anchors")) f.anchors = parse_points(j.at("anchors"), f.chart.dim(), id + " anchors");
  } catch (const json::exception& e) {
    fail(id, e.what());
  }
  f.id = id;
  f.description = j.value("description", std::string());
  return f;
}

Fixture load_fixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_fixture(ss.str(), path.parent_path());
}

Catalog Catalog::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ParseError("no fixture directory " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  Catalog c;
  for (const auto& p : files) c.add(load_fixture(p));
  return c;
}

Catalog Catalog::shipped() { return load(KOSZUL_FIXTURE_DIR); }

void Catalog::add(Fixture f) {
  const std::string id = f.id;
  fixtures_.insert_or_assign(id, std::move(f));
}

const Fixture& Catalog::get(const std::string& id) const {
  auto it = fixtures_.find(id);
  if (it == fixtures_.end()) throw UnknownFixture("unknown fixture \"" + id + "\"");
  return it->second;
}

std::vector<std::string> Catalog::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, f] : fixtures_) out.push_back(id);
  return out;
}

}  // namespace koszul
