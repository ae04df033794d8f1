#pragma once

// Fixture files: JSON descriptions of a chart with a metric, or of a warped
// product or conformal metric built from factor files.
//
// Factor / manifold file:
//   {"id": "...", "kind": "manifold", "coords": ["t", "th"], "bounds": [[-2, 2], [-3, 3]],
//    "metric": [["1", "0"], ["0", "(pow (coord 0) 2)"]],
//    "fields": {"X": ["1", "(coord 1)"]}, "scalars": {"f": "(coord 0)"},
//    "structure": [["1", "0"], ["0", "-1"]], "p": {"field": "X"},
//    "radical": [["0", "1"]], "radical_stationary": true, "anchors": [[0, 0.3]]}
// "dim" may replace "coords" (names default to x0, x1, ...). Expressions are
// s-expression strings or numbers. "radical" lists fields spanning the radical
// everywhere on the chart.
//
// Product file:
//   {"id": "...", "kind": "product", "base": "factors/line.json", "base_structure": [...],
//    "fibers": [{"ref": "factors/circle.json", "warp": "(coord 0)", "structure": [...]}],
//    "p": {"on": "base" | "fiber:1", "field": "t"}, "coords": [...], "anchors": [...]}
//
// Conformal file (Omega^2 g0):
//   {"id": "...", "kind": "conformal", "base": "factors/plane.json", "omega": "(coord 0)",
//    "structure": [...], "anchors": [...]}
//
// References are relative to the referring file.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "koszul/products.hpp"

namespace koszul {

enum class FixtureKind { Manifold, Product, Conformal };

std::string to_string(FixtureKind kind);

struct Fixture {
  std::string id;
  std::string description;
  FixtureKind kind = FixtureKind::Manifold;
  ChartDomain chart;
  MetricField metric;
  std::optional<ProductStructure> structure;
  std::vector<std::string> coords;
  std::map<std::string, VectorField> fields;  // coordinate fields included
  std::map<std::string, ScalarField> scalars;
  std::optional<VectorField> p;
  std::vector<VectorField> radical;
  bool radical_stationary = true;  // declared; NotAnnihilator is a failure unless false
  std::vector<Point> anchors;
  std::optional<WarpedProductSpec> product;
  std::optional<ConformalSpec> conformal;

  int coord_index(const std::string& name) const;  // -1 when absent
  // Factor owning a product coordinate (0 for non-products).
  int factor_of(int coord) const;
  // A named field; for products also usable as a slot on its factor.
  const VectorField& field(const std::string& name) const;
  Slot slot(const std::string& coord_name) const;

  // Every expression the fixture is made of, each over the full chart.
  std::vector<Expr> expressions() const;
};

// Throws ParseError (malformed JSON or expression, bad reference) and the
// invariant errors of the module types.
Fixture load_fixture(const std::filesystem::path& path);
Fixture parse_fixture(const std::string& json_text, const std::filesystem::path& base_dir = ".");

class Catalog {
 public:
  Catalog() = default;
  // Every *.json directly inside dir (factor files under dir/factors are not fixtures).
  static Catalog load(const std::filesystem::path& dir);
  static Catalog shipped();  // the fixtures directory of the source tree

  void add(Fixture f);
  bool contains(const std::string& id) const { return fixtures_.count(id) > 0; }
  const Fixture& get(const std::string& id) const;  // UnknownFixture
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, Fixture> fixtures_;
};

}  // namespace koszul
