#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "koszul/curvature.hpp"
#include "koszul/error.hpp"
#include "koszul/verifier.hpp"

using namespace koszul;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);
  return buf;
}

std::string fmt_point(const Point& p) {
  std::string s = "(";
  for (std::size_t i = 0; i < p.size(); ++i) s += (i ? "," : "") + fmt(p[i]);
  return s + ")";
}

// A fixture id from the shipped catalog, or a path to a fixture file.
Fixture resolve_fixture(const Catalog& catalog, const std::string& name) {
  if (catalog.contains(name)) return catalog.get(name);
  if (std::filesystem::exists(name)) return load_fixture(name);
  return catalog.get(name);
}

ConnectionTag parse_variant(const std::string& v) {
  if (v == "lc") return ConnectionTag::LeviCivita;
  if (v == "ssm") return ConnectionTag::SSMetric;
  if (v == "ssnm") return ConnectionTag::SSNonMetric;
  if (v == "ap") return ConnectionTag::AlmostProduct;
  throw ParseError("unknown variant \"" + v + "\"");
}

struct VerifyArgs {
  std::vector<std::string> suites{"all"};
  std::vector<std::string> fixtures;
  std::uint64_t seed = 42;
  int points = 64;
  int draws = 8;
  double tol_rel = 1e-7;
  double tol_abs = 1e-10;
  std::string out;
};

int cmd_verify(const VerifyArgs& a) {
  Catalog catalog = Catalog::shipped();
  std::vector<std::string> fixture_ids;
  for (const auto& f : a.fixtures) {
    Fixture fx = resolve_fixture(catalog, f);
    fixture_ids.push_back(fx.id);
    if (!catalog.contains(fx.id)) catalog.add(std::move(fx));
  }
  Tolerances tol;
  tol.rel = a.tol_rel;
  tol.abs = a.tol_abs;
  tol.curvature_rel = std::max(tol.curvature_rel, a.tol_rel);
  const Sampling sampling{a.seed, a.points, a.draws};

  nlohmann::json reports = nlohmann::json::array();
  int failures = 0, clauses = 0;
  for (const auto& s : a.suites) {
    const CheckReport r = run_suite(make_suite(s, sampling, tol, fixture_ids), catalog);
    clauses += static_cast<int>(r.clauses.size());
    for (const auto* cp : r.failing()) {
      const auto& c = *cp;
      ++failures;
      std::cout << "FAIL " << c.id << " on " << c.fixture << ": " << c.passes << "/" << c.samples
                << " max_rel_residual " << fmt(c.max_rel_residual) << " at " << fmt_point(c.worst_point) << "\n";
      for (const auto& e : c.errors) std::cout << "  " << e.type << " at " << fmt_point(e.point) << ": " << e.message << "\n";
    }
    reports.push_back(r.to_json());
  }
  std::cout << "suites " << a.suites.size() << ", clause results " << clauses << ", failures " << failures << "\n";
  if (!a.out.empty()) {
    std::ofstream os(a.out);
    if (!os) throw ParseError("cannot write " + a.out);
    os << (reports.size() == 1 ? reports[0] : reports).dump(2) << "\n";
  }
  return failures == 0 ? 0 : 1;
}

struct CurvatureArgs {
  std::string fixture;
  std::string variant = "lc";
  std::string p_on;
  std::string p_field;
  std::string slots;
  std::string point;
};

int cmd_curvature(const CurvatureArgs& a) {
  const Catalog catalog = Catalog::shipped();
  const Fixture fx = resolve_fixture(catalog, a.fixture);
  const ConnectionTag tag = parse_variant(a.variant);

  Point p;
  for (const auto& s : split(a.point, ',')) {
    try {
      p.push_back(std::stod(s));
    } catch (const std::exception&) {
      throw ParseError("bad point coordinate \"" + s + "\"");
    }
  }
  if (static_cast<int>(p.size()) != fx.chart.dim()) throw ParseError("point has the wrong dimension");
  const auto names = split(a.slots, ',');
  if (names.size() != 4) throw ParseError("--slots needs four names");

  std::optional<WarpedProductSpec> spec = fx.product;
  std::optional<VectorField> pf = fx.p;
  if (!a.p_field.empty()) {
    Slot ps = fx.slot(a.p_field);
    if (!a.p_on.empty()) {
      const int want = a.p_on == "base" ? 0 : a.p_on.rfind("fiber:", 0) == 0 ? std::stoi(a.p_on.substr(6)) : -1;
      if (want < 0) throw ParseError("bad --p-on \"" + a.p_on + "\"");
      if (want != ps.factor) throw ParseError(a.p_field + " does not lie on " + a.p_on);
    }
    if (spec) {
      spec->p = ps;
      pf = lift_field(*spec, ps);
    } else {
      pf = fx.field(a.p_field);
    }
  }
  if ((tag == ConnectionTag::SSMetric || tag == ConnectionTag::SSNonMetric) && !pf) {
    throw ParseError("variant " + a.variant + " needs --p-field");
  }
  if (tag == ConnectionTag::AlmostProduct && !fx.structure) throw ParseError(fx.id + " has no structure");

  std::vector<VectorField> fields;
  for (const auto& n : names) fields.push_back(fx.field(n));

  const MetricField g = spec ? assemble_product_metric(*spec) : fx.metric;
  const bool direct_ok = spec ? direct_route_ok(*spec, p) : well_conditioned(metric_at(g, p));
  int status = 0;
  if (!direct_ok) {
    std::cout << "direct: skipped: near-singular\n";
  } else {
    ConnectionVariant v;
    switch (tag) {
      case ConnectionTag::LeviCivita:
        v = ConnectionVariant::levi_civita();
        break;
      case ConnectionTag::SSMetric:
        v = ConnectionVariant::ss_metric(*pf);
        break;
      case ConnectionTag::SSNonMetric:
        v = ConnectionVariant::ss_non_metric(*pf);
        break;
      case ConnectionTag::AlmostProduct:
        v = ConnectionVariant::almost_product(*fx.structure);
        break;
    }
    try {
      const Frame fr(g, v, p);
      std::cout << "direct: " << fmt(riemann_terms(fr, fields[0], fields[1], fields[2], fields[3]).value) << "\n";
    } catch (const NotAnnihilator& e) {
      std::cout << "direct: NotAnnihilator at " << fmt_point(p) << ": " << e.what() << "\n";
      status = 1;
    }
  }
  if (spec) {
    std::vector<Slot> slots;
    for (const auto& n : names) slots.push_back(fx.slot(n));
    try {
      std::cout << "factorwise: " << fmt(factorwise_riemann(*spec, tag, slots, p)) << "\n";
    } catch (const UnsupportedCase& e) {
      std::cout << "factorwise: unsupported: " << e.what() << "\n";
    }
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Koszul forms and curvature on singular semi-Riemannian manifolds"};
  app.require_subcommand(1);

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "run theorem suites on the fixture catalog");
  verify->add_option("--suite", va.suites, "suite ids, or all")->delimiter(',');
  verify->add_option("--fixture", va.fixtures, "fixture ids or files (default: whole catalog)")->delimiter(',');
  verify->add_option("--seed", va.seed);
  verify->add_option("--points", va.points)->check(CLI::PositiveNumber);
  verify->add_option("--draws", va.draws)->check(CLI::PositiveNumber);
  verify->add_option("--tol-rel", va.tol_rel)->check(CLI::PositiveNumber);
  verify->add_option("--tol-abs", va.tol_abs)->check(CLI::PositiveNumber);
  verify->add_option("--out", va.out, "report JSON path");

  CurvatureArgs ca;
  auto* curv = app.add_subcommand("curvature", "curvature at one point by both routes");
  curv->add_option("--fixture", ca.fixture)->required();
  curv->add_option("--variant", ca.variant)->check(CLI::IsMember({"lc", "ssm", "ssnm", "ap"}));
  curv->add_option("--p-on", ca.p_on);
  curv->add_option("--p-field", ca.p_field);
  curv->add_option("--slots", ca.slots)->required();
  curv->add_option("--point", ca.point)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*verify) return cmd_verify(va);
    return cmd_curvature(ca);
  } catch (const NotAnnihilator& e) {
    std::cerr << "NotAnnihilator: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
