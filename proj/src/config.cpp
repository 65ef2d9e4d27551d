#include "momentlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace momentlab::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw InvalidArgument(where + ": " + what);
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) {
      std::string list;
      for (const auto& k : allowed) list += (list.empty() ? "" : ", ") + k;
      fail(where, "unknown key \"" + it.key() + "\" (allowed: " + list + ")");
    }
}

double get_double(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(where, "must be finite");
  return v;
}

int get_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<int>();
}

bool get_bool(const json& j, const std::string& where) {
  if (!j.is_boolean()) fail(where, "expected true or false");
  return j.get<bool>();
}

template <class T, class F>
std::vector<T> get_list(const json& j, const std::string& where, F&& each) {
  if (!j.is_array()) fail(where, "expected a list");
  std::vector<T> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(each(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<int> get_int_list(const json& j, const std::string& where) {
  return get_list<int>(j, where, [](const json& e, const std::string& w) { return get_int(e, w); });
}

std::vector<double> get_double_list(const json& j, const std::string& where) {
  return get_list<double>(j, where, [](const json& e, const std::string& w) { return get_double(e, w); });
}

Coord get_coord(const json& j, int dimension, const std::string& where) {
  auto v = get_int_list(j, where);
  if (static_cast<int>(v.size()) != dimension)
    fail(where, "expected " + std::to_string(dimension) + " components");
  Coord c{};
  for (int a = 0; a < dimension; ++a) c[a] = v[a];
  return c;
}

Geometry parse_geometry(const json& j, int dimension, const std::string& where) {
  check_keys(j, {"extents", "mask", "letter"}, where);
  Geometry g;
  if (!j.contains("extents")) fail(where, "missing \"extents\"");
  g.extents = get_int_list(j["extents"], where + ".extents");
  if (static_cast<int>(g.extents.size()) != dimension)
    fail(where + ".extents", "expected " + std::to_string(dimension) + " extents");
  for (int e : g.extents)
    if (e < 1) fail(where + ".extents", "extents must be positive");
  if (j.contains("mask") && j.contains("letter")) fail(where, "give either \"mask\" or \"letter\"");
  if (j.contains("mask")) {
    g.mask = get_list<Coord>(j["mask"], where + ".mask",
                             [&](const json& e, const std::string& w) { return get_coord(e, dimension, w); });
  }
  if (j.contains("letter")) {
    if (!j["letter"].is_string() || j["letter"].get<std::string>().size() != 1)
      fail(where + ".letter", "expected a single letter");
    g.letter = j["letter"].get<std::string>()[0];
    if (dimension != 2) fail(where + ".letter", "letter masks need a 2D domain");
    g.mask = lattice::letter_mask(g.letter, g.extents);
  }
  // Surface mask problems now rather than at run time.
  lattice::LatticeDomain::build(g.extents, g.mask);
  return g;
}

}  // namespace

void set_tolerance(ExperimentConfig& config, const std::string& key, double value) {
  if (!config.tolerances.count(key)) {
    std::string list;
    for (const auto& [k, v] : config.tolerances) list += (list.empty() ? "" : ", ") + k;
    throw InvalidArgument("unknown tolerance \"" + key + "\" (known: " + list + ")");
  }
  if (!(value > 0) || !std::isfinite(value)) throw InvalidArgument("tolerance \"" + key + "\" must be positive");
  config.tolerances[key] = value;
  config.dynamics.search.epsilon_rate = config.tolerances.at("epsilon_rate");
}

std::string kind_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::Spectrum: return "spectrum";
    case TaskKind::Moments: return "moments";
    case TaskKind::Scaling: return "scaling";
    case TaskKind::Walks: return "walks";
    case TaskKind::Greens: return "greens";
    case TaskKind::Dynamics: return "dynamics";
  }
  return "?";
}

TaskKind kind_from_name(const std::string& name) {
  for (auto k : {TaskKind::Spectrum, TaskKind::Moments, TaskKind::Scaling, TaskKind::Walks,
                 TaskKind::Greens, TaskKind::Dynamics})
    if (kind_name(k) == name) return k;
  throw InvalidArgument("unknown experiment kind \"" + name +
                        "\" (expected spectrum, moments, scaling, walks, greens, dynamics or sweep)");
}

std::string Geometry::label() const {
  std::string s;
  for (std::size_t a = 0; a < extents.size(); ++a) s += (a ? "x" : "") + std::to_string(extents[a]);
  if (letter) s += std::string("-") + letter;
  else if (!mask.empty()) s += "-masked" + std::to_string(mask.size());
  return s;
}

lattice::LatticeModel ModelSpec::build() const {
  if (pt) return dynamics::pt_model(pt->gamma, pt->alpha, onsite);
  auto hops = hoppings;
  if (add_conjugates) {
    for (const auto& h : hoppings) {
      Coord neg{};
      for (int a = 0; a < kMaxDimension; ++a) neg[a] = -h.delta[a];
      const bool paired = std::any_of(hoppings.begin(), hoppings.end(),
                                      [&](const lattice::Hopping& o) { return o.delta == neg; });
      if (!paired) hops.push_back({neg, h.amplitude});
    }
  }
  return lattice::LatticeModel::from_hoppings(dimension, std::move(hops), onsite);
}

std::map<std::string, double> default_tolerances() {
  return {
      {"route_rel", 1e-8},          {"bulk_rel", 1e-12},  {"decomposition_rel", 1e-10},
      {"roundtrip_hz", 0.05},       {"norm", 1e-12},      {"epsilon_rate", dynamics::kDefaultEpsilonRate},
  };
}

Complex parse_complex(const json& j, const std::string& where) {
  if (j.is_number()) return {get_double(j, where), 0.0};
  if (j.is_array() && j.size() == 2) return {get_double(j[0], where + "[0]"), get_double(j[1], where + "[1]")};
  fail(where, "expected a number or [re, im]");
}

lattice::BoundarySpec parse_boundary(const json& j, int dimension, const std::string& where) {
  if (!j.is_array()) fail(where, "expected a list with one closure per axis");
  if (static_cast<int>(j.size()) != dimension)
    fail(where, "expected " + std::to_string(dimension) + " closures");
  lattice::BoundarySpec b;
  for (std::size_t a = 0; a < j.size(); ++a) {
    const auto& e = j[a];
    const std::string w = where + "[" + std::to_string(a) + "]";
    if (e.is_string()) {
      const auto s = e.get<std::string>();
      if (s == "obc") b.axes.push_back(lattice::Closure::open());
      else if (s == "pbc") b.axes.push_back(lattice::Closure::periodic());
      else fail(w, "expected \"obc\", \"pbc\" or {\"gbc\": g}");
    } else if (e.is_object()) {
      check_keys(e, {"gbc"}, w);
      if (!e.contains("gbc")) fail(w, "expected {\"gbc\": g}");
      const double g = get_double(e["gbc"], w + ".gbc");
      if (g < 0) fail(w + ".gbc", "coupling must be non-negative");
      b.axes.push_back(lattice::Closure::generalized(g));
    } else {
      fail(w, "expected \"obc\", \"pbc\" or {\"gbc\": g}");
    }
  }
  return b;
}

json boundary_json(const lattice::BoundarySpec& b) {
  json out = json::array();
  for (const auto& c : b.axes) {
    if (c.kind == lattice::Closure::Kind::Open) out.push_back("obc");
    else if (c.kind == lattice::Closure::Kind::Periodic) out.push_back("pbc");
    else out.push_back({{"gbc", c.coupling}});
  }
  return out;
}

ExperimentConfig parse_config(const json& doc) {
  check_keys(doc, {"kind", "task", "dimension", "hoppings", "onsite", "add_conjugates", "pt", "extents",
                   "mask", "letter", "boundary", "moments", "scaling", "walks", "greens", "dynamics",
                   "sweep", "output", "seed", "tolerances"},
             "config");
  ExperimentConfig c;
  c.source = doc;
  if (!doc.contains("kind") || !doc["kind"].is_string()) fail("config.kind", "required string");
  const auto kind = doc["kind"].get<std::string>();
  if (kind == "sweep") {
    c.sweep = true;
    if (!doc.contains("task") || !doc["task"].is_string())
      fail("config.task", "a sweep needs the per-point task kind");
    c.task = kind_from_name(doc["task"].get<std::string>());
  } else {
    if (doc.contains("task")) fail("config.task", "only valid with kind \"sweep\"");
    if (doc.contains("sweep")) fail("config.sweep", "sweep axes need kind \"sweep\"");
    c.task = kind_from_name(kind);
  }

  auto& m = c.model;
  m.dimension = doc.contains("dimension") ? get_int(doc["dimension"], "config.dimension") : 1;
  if (m.dimension < 1 || m.dimension > kMaxDimension) fail("config.dimension", "must be 1, 2 or 3");
  if (doc.contains("onsite")) m.onsite = parse_complex(doc["onsite"], "config.onsite");
  if (doc.contains("pt") && doc.contains("hoppings")) fail("config", "give either \"pt\" or \"hoppings\"");
  if (doc.contains("pt")) {
    check_keys(doc["pt"], {"gamma", "alpha"}, "config.pt");
    if (m.dimension != 1) fail("config.pt", "the PT model is one-dimensional");
    PtSpec pt;
    if (!doc["pt"].contains("alpha")) fail("config.pt", "\"alpha\" is required");
    pt.alpha = get_double(doc["pt"]["alpha"], "config.pt.alpha");
    if (doc["pt"].contains("gamma")) pt.gamma = get_double(doc["pt"]["gamma"], "config.pt.gamma");
    if (pt.gamma < 0 || pt.gamma >= 1) fail("config.pt.gamma", "must lie in [0, 1)");
    m.pt = pt;
    if (!doc.contains("onsite")) m.onsite = dynamics::kDefaultOnsite;
  } else if (doc.contains("hoppings")) {
    m.hoppings = get_list<lattice::Hopping>(doc["hoppings"], "config.hoppings", [&](const json& e, const std::string& w) {
      check_keys(e, {"delta", "amp"}, w);
      if (!e.contains("delta") || !e.contains("amp")) fail(w, "needs \"delta\" and \"amp\"");
      return lattice::Hopping{get_coord(e["delta"], m.dimension, w + ".delta"), parse_complex(e["amp"], w + ".amp")};
    });
  }
  if (doc.contains("add_conjugates")) m.add_conjugates = get_bool(doc["add_conjugates"], "config.add_conjugates");
  m.build();  // validates the table

  json geo = json::object();
  for (const char* k : {"extents", "mask", "letter"})
    if (doc.contains(k)) geo[k] = doc[k];
  if (!geo.contains("extents")) fail("config.extents", "required");
  c.geometry = parse_geometry(geo, m.dimension, "config");
  c.boundary = doc.contains("boundary") ? parse_boundary(doc["boundary"], m.dimension, "config.boundary")
                                        : lattice::BoundarySpec::open(m.dimension);

  if (doc.contains("moments")) {
    const auto& j = doc["moments"];
    check_keys(j, {"m_max", "central"}, "config.moments");
    if (j.contains("m_max")) c.moments.m_max = get_int(j["m_max"], "config.moments.m_max");
    if (j.contains("central")) c.moments.central = get_bool(j["central"], "config.moments.central");
  }
  if (c.moments.m_max < 1 || c.moments.m_max > kMaxMomentOrder)
    fail("config.moments.m_max", "must lie in 1.." + std::to_string(kMaxMomentOrder));

  if (doc.contains("scaling")) {
    const auto& j = doc["scaling"];
    check_keys(j, {"sizes", "orders", "central"}, "config.scaling");
    if (j.contains("sizes")) c.scaling.sizes = get_int_list(j["sizes"], "config.scaling.sizes");
    if (j.contains("orders")) c.scaling.orders = get_int_list(j["orders"], "config.scaling.orders");
    if (j.contains("central")) c.scaling.central = get_bool(j["central"], "config.scaling.central");
  }
  for (int o : c.scaling.orders)
    if (o < 1 || o > kMaxMomentOrder) fail("config.scaling.orders", "orders must lie in 1.." + std::to_string(kMaxMomentOrder));
  for (int s : c.scaling.sizes)
    if (s < 1) fail("config.scaling.sizes", "sizes must be positive");
  if (c.task == TaskKind::Scaling && c.scaling.sizes.empty())
    fail("config.scaling.sizes", "a scaling run needs at least one size");

  if (doc.contains("walks")) {
    const auto& j = doc["walks"];
    check_keys(j, {"m_max", "exhaustive"}, "config.walks");
    if (j.contains("m_max")) c.walks.m_max = get_int(j["m_max"], "config.walks.m_max");
    if (j.contains("exhaustive")) c.walks.exhaustive = get_bool(j["exhaustive"], "config.walks.exhaustive");
  }
  if (c.walks.m_max < 1 || c.walks.m_max > 8) fail("config.walks.m_max", "must lie in 1..8");

  if (doc.contains("greens")) {
    const auto& j = doc["greens"];
    check_keys(j, {"step", "margin", "noise", "residual_threshold", "write_stack"}, "config.greens");
    auto& g = c.greens;
    if (j.contains("step")) g.step = get_double(j["step"], "config.greens.step");
    if (j.contains("margin")) g.margin = get_double(j["margin"], "config.greens.margin");
    if (j.contains("noise")) g.noise = get_double(j["noise"], "config.greens.noise");
    if (j.contains("residual_threshold"))
      g.residual_threshold = get_double(j["residual_threshold"], "config.greens.residual_threshold");
    if (j.contains("write_stack")) g.write_stack = get_bool(j["write_stack"], "config.greens.write_stack");
    if (!(g.step > 0)) fail("config.greens.step", "must be positive");
    if (g.margin < 0) fail("config.greens.margin", "must be non-negative");
    if (g.noise < 0) fail("config.greens.noise", "must be non-negative");
  }

  if (doc.contains("dynamics")) {
    const auto& j = doc["dynamics"];
    check_keys(j, {"duration", "width", "center", "step", "record_every", "algebraic_exponent",
                   "critical", "bracket", "gamma_tolerance", "calibrate", "calibrate_target", "export_every"},
               "config.dynamics");
    auto& d = c.dynamics;
    if (j.contains("duration")) d.run.duration = get_double(j["duration"], "config.dynamics.duration");
    if (j.contains("width")) d.run.width = get_double(j["width"], "config.dynamics.width");
    if (j.contains("center")) d.run.center = get_double(j["center"], "config.dynamics.center");
    if (j.contains("step")) d.run.step = get_double(j["step"], "config.dynamics.step");
    if (j.contains("record_every")) d.run.record_every = get_int(j["record_every"], "config.dynamics.record_every");
    if (j.contains("algebraic_exponent"))
      d.run.algebraic_exponent = get_double(j["algebraic_exponent"], "config.dynamics.algebraic_exponent");
    if (j.contains("critical")) d.critical = get_bool(j["critical"], "config.dynamics.critical");
    if (j.contains("bracket")) {
      auto b = get_double_list(j["bracket"], "config.dynamics.bracket");
      if (b.size() != 2 || !(b[1] > b[0])) fail("config.dynamics.bracket", "expected [low, high] with low < high");
      d.search.low = b[0];
      d.search.high = b[1];
    }
    if (j.contains("gamma_tolerance"))
      d.search.tolerance = get_double(j["gamma_tolerance"], "config.dynamics.gamma_tolerance");
    if (j.contains("calibrate")) d.calibrate = get_bool(j["calibrate"], "config.dynamics.calibrate");
    if (j.contains("calibrate_target"))
      d.calibrate_target = get_double(j["calibrate_target"], "config.dynamics.calibrate_target");
    if (j.contains("export_every")) d.export_every = get_int(j["export_every"], "config.dynamics.export_every");
    if (!(d.run.duration > 0)) fail("config.dynamics.duration", "must be positive");
    if (!(d.run.width > 0)) fail("config.dynamics.width", "must be positive");
    if (d.run.step < 0) fail("config.dynamics.step", "must be non-negative (0 picks the contract step)");
    if (d.export_every < 1) fail("config.dynamics.export_every", "must be at least 1");
    if (!(d.search.tolerance > 0)) fail("config.dynamics.gamma_tolerance", "must be positive");
  }
  if (c.task == TaskKind::Dynamics) {
    if (!m.pt) fail("config.pt", "a dynamics run needs the PT model block");
    if (c.boundary.axes[0].kind != lattice::Closure::Kind::Open)
      fail("config.boundary", "dynamics runs use an open chain");
    if (!c.geometry.mask.empty()) fail("config.mask", "dynamics runs use an unmasked chain");
    c.dynamics.run.sites = c.geometry.extents[0];
    if (c.dynamics.run.sites < 3) fail("config.extents", "a dynamics chain needs at least 3 sites");
  }

  if (doc.contains("sweep")) {
    const auto& j = doc["sweep"];
    check_keys(j, {"g", "N", "m_max", "gamma", "boundaries", "geometries", "letters"}, "config.sweep");
    auto& s = c.axes;
    if (j.contains("g")) s.g = get_double_list(j["g"], "config.sweep.g");
    for (double g : s.g)
      if (g < 0) fail("config.sweep.g", "couplings must be non-negative");
    if (j.contains("N")) s.sizes = get_int_list(j["N"], "config.sweep.N");
    for (int n : s.sizes)
      if (n < 1) fail("config.sweep.N", "sizes must be positive");
    if (j.contains("m_max")) s.m_max = get_int_list(j["m_max"], "config.sweep.m_max");
    for (int v : s.m_max)
      if (v < 1 || v > kMaxMomentOrder) fail("config.sweep.m_max", "orders must lie in 1.." + std::to_string(kMaxMomentOrder));
    if (j.contains("gamma")) {
      if (!m.pt) fail("config.sweep.gamma", "gamma sweeps need the PT model block");
      s.gamma = get_double_list(j["gamma"], "config.sweep.gamma");
      for (double g : s.gamma)
        if (g < 0 || g >= 1) fail("config.sweep.gamma", "gamma must lie in [0, 1)");
    }
    if (j.contains("boundaries"))
      s.boundaries = get_list<lattice::BoundarySpec>(j["boundaries"], "config.sweep.boundaries",
                                                     [&](const json& e, const std::string& w) {
                                                       return parse_boundary(e, m.dimension, w);
                                                     });
    if (j.contains("geometries"))
      s.geometries = get_list<Geometry>(j["geometries"], "config.sweep.geometries",
                                        [&](const json& e, const std::string& w) {
                                          return parse_geometry(e, m.dimension, w);
                                        });
    if (j.contains("letters")) {
      if (j.contains("geometries")) fail("config.sweep", "give either \"letters\" or \"geometries\"");
      s.geometries = get_list<Geometry>(j["letters"], "config.sweep.letters", [&](const json& e, const std::string& w) {
        if (!e.is_string()) fail(w, "expected \"square\" or a letter");
        json g = {{"extents", c.geometry.extents}};
        const auto name = e.get<std::string>();
        if (name != "square") g["letter"] = name;
        return parse_geometry(g, m.dimension, w);
      });
    }
    if (!s.sizes.empty() && m.dimension != 1 && c.task != TaskKind::Scaling)
      fail("config.sweep.N", "size sweeps apply to 1D chains");
  }

  if (doc.contains("output")) {
    if (!doc["output"].is_string() || doc["output"].get<std::string>().empty())
      fail("config.output", "expected a directory path");
    c.output = doc["output"].get<std::string>();
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() && doc["seed"].get<long long>() >= 0))
      fail("config.seed", "expected a non-negative integer");
    c.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("tolerances")) {
    const auto& j = doc["tolerances"];
    if (!j.is_object()) fail("config.tolerances", "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
      set_tolerance(c, it.key(), get_double(it.value(), "config.tolerances." + it.key()));
  }
  c.dynamics.search.epsilon_rate = c.tolerances.at("epsilon_rate");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

void apply_tolerance_override(ExperimentConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw InvalidArgument("tolerance override \"" + assignment + "\" needs key=value");
  const auto key = assignment.substr(0, eq);
  double v = 0.0;
  try {
    std::size_t used = 0;
    v = std::stod(assignment.substr(eq + 1), &used);
    if (used != assignment.size() - eq - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw InvalidArgument("tolerance \"" + key + "\" needs a numeric value");
  }
  set_tolerance(config, key, v);
}

}  // namespace momentlab::cli
