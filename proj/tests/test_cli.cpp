#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "momentlab/config.hpp"
#include "momentlab/experiment.hpp"
#include "momentlab/presets.hpp"

using namespace momentlab;
using namespace momentlab::cli;
using nlohmann::json;

namespace {

json small_chain() {
  return {
      {"kind", "moments"},
      {"dimension", 1},
      {"hoppings", json::array({{{"delta", {2}}, {"amp", {1.0, 0.0}}},
                                {{"delta", {-2}}, {"amp", {-1.0, 0.0}}},
                                {{"delta", {1}}, {"amp", {4.0, 0.0}}},
                                {{"delta", {-1}}, {"amp", {4.0, 0.0}}}})},
      {"onsite", {1038.0, -4.5}},
      {"extents", {12}},
      {"boundary", {"obc"}},
      {"moments", {{"m_max", 6}}},
  };
}

bool rejects(const json& doc) {
  try {
    plan_tasks(parse_config(doc));
  } catch (const InvalidArgument&) {
    return true;
  }
  return false;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const char* bin = std::getenv("MOMENTLAB_BIN");
  if (!bin) return -1;
  const int status = std::system((std::string(bin) + " " + args + " >/dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("config validation names bad input") {
  CHECK_FALSE(rejects(small_chain()));
  auto d = small_chain();
  d["typo"] = 1;
  CHECK(rejects(d));
  d = small_chain();
  d["boundary"] = {"closed"};
  CHECK(rejects(d));
  d = small_chain();
  d["boundary"] = {"obc", "obc"};
  CHECK(rejects(d));
  d = small_chain();
  d["moments"]["m_max"] = 21;
  CHECK(rejects(d));
  d = small_chain();
  d["extents"] = {2001};
  CHECK(rejects(d));
  d = small_chain();
  d["kind"] = "walks";
  d["walks"] = {{"exhaustive", true}};
  CHECK(rejects(d));
  d["extents"] = {8};
  CHECK_FALSE(rejects(d));
  d = small_chain();
  d["sweep"] = {{"g", {0.0, 1.0}}};
  CHECK(rejects(d));  // sweep axes need kind "sweep"
  d = small_chain();
  d["kind"] = "dynamics";
  CHECK(rejects(d));  // dynamics needs the PT model
  d = small_chain();
  d["hoppings"][0]["delta"] = {0};
  CHECK(rejects(d));
  d = small_chain();
  d["mask"] = json::array({{40}});
  CHECK(rejects(d));
  d = small_chain();
  d["kind"] = "frobnicate";
  CHECK(rejects(d));
  d = small_chain();
  d["boundary"] = {{{"gbc", -1.0}}};
  CHECK(rejects(d));
}

TEST_CASE("boundary spellings") {
  auto d = small_chain();
  d["boundary"] = {"pbc"};
  CHECK(parse_config(d).boundary.axes[0].kind == lattice::Closure::Kind::Periodic);
  d["boundary"] = {{{"gbc", 0.5}}};
  const auto b = parse_config(d).boundary;
  CHECK(b.axes[0].kind == lattice::Closure::Kind::Generalized);
  CHECK(b.axes[0].coupling == 0.5);
  CHECK(parse_boundary(boundary_json(b), 1, "boundary").axes[0].coupling == 0.5);
}

TEST_CASE("tolerance overrides") {
  auto cfg = parse_config(small_chain());
  apply_tolerance_override(cfg, "route_rel=1e-12");
  CHECK(cfg.tolerances.at("route_rel") == 1e-12);
  CHECK_THROWS_AS(apply_tolerance_override(cfg, "nosuch=1"), InvalidArgument);
  CHECK_THROWS_AS(apply_tolerance_override(cfg, "route_rel"), InvalidArgument);
  CHECK_THROWS_AS(apply_tolerance_override(cfg, "route_rel=abc"), InvalidArgument);
}

TEST_CASE("presets") {
  const auto names = preset_names();
  CHECK(names.size() == 5);
  for (const auto& n : names) CHECK_NOTHROW(parse_config(preset(n)));
  try {
    preset("nope");
    FAIL("expected an error");
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    for (const auto& n : names) CHECK(msg.find(n) != std::string::npos);
  }

  const auto fig2 = parse_config(preset("fig2-gbc"));
  CHECK(fig2.axes.g == std::vector<double>{0.0, 0.001, 0.1, 1.0, 2.0});
  CHECK(fig2.geometry.extents == std::vector<int>{30});
  CHECK(fig2.model.onsite == Complex(1038, -4.5));

  const auto fig3 = parse_config(preset("fig3-3d"));
  CHECK(fig3.geometry.extents == std::vector<int>{4, 4, 4});
  CHECK(fig3.axes.boundaries.size() == 8);
  const auto model = fig3.model.build();
  std::map<Coord, Complex> t;
  for (const auto& h : model.hoppings()) t[h.delta] = h.amplitude;
  CHECK(t[{1, 0, 0}] == Complex(0, 1));
  CHECK(t[{0, 1, 0}] == Complex(1));
  CHECK(t[{0, 0, 1}] == Complex(0, 1));
  CHECK(t[{1, 1, 1}] == Complex(2));
  CHECK(t[{1, -1, 1}] == Complex(1.2));
  CHECK(model.onsite() == Complex(1040, -6));

  const auto fig4 = parse_config(preset("fig4-dynamics"));
  CHECK(fig4.axes.gamma == std::vector<double>{0.0, 0.13, 0.45});
  REQUIRE(fig4.model.pt.has_value());
  CHECK(fig4.model.pt->alpha == kCalibratedAlpha);
  CHECK(fig4.dynamics.critical);
}

TEST_CASE("sweep expansion") {
  auto doc = preset("fig3-2d");
  const auto plan = plan_tasks(parse_config(doc));
  CHECK(plan.size() == 12);
  std::set<std::string> ids;
  for (const auto& t : plan) ids.insert(t.id);
  CHECK(ids.size() == 12);
  auto fig4 = plan_tasks(parse_config(preset("fig4-dynamics")));
  CHECK(fig4.size() == 4);
  CHECK(fig4.back().critical);
}

TEST_CASE("an empty sweep equals the plain kind") {
  auto a = small_chain();
  a["kind"] = "sweep";
  a["task"] = "moments";
  a["sweep"] = json::object();
  const auto ra = render_experiment(parse_config(a), 1);
  const auto rb = render_experiment(parse_config(small_chain()), 1);
  REQUIRE(ra.size() == rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    CHECK(ra[i].path == rb[i].path);
    if (ra[i].path != "manifest.json") CHECK(ra[i].content == rb[i].content);
  }
}

TEST_CASE("outputs do not depend on the worker count") {
  for (const char* name : {"fig2-gbc", "fig3-2d"}) {
    const auto cfg = parse_config(preset(name));
    const auto a = render_experiment(cfg, 1);
    const auto b = render_experiment(cfg, 4);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].path == b[i].path);
      CHECK(a[i].content == b[i].content);
    }
  }
}

TEST_CASE("noisy greens runs follow the seed") {
  auto d = small_chain();
  d["kind"] = "greens";
  d["greens"] = {{"noise", 0.001}, {"write_stack", true}};
  d["seed"] = 5;
  const auto a = render_experiment(parse_config(d), 1);
  const auto b = render_experiment(parse_config(d), 2);
  d["seed"] = 6;
  const auto c = render_experiment(parse_config(d), 1);
  bool same = a.size() == b.size(), differ = false;
  for (std::size_t i = 0; same && i < a.size(); ++i) same = a[i].content == b[i].content;
  for (std::size_t i = 0; i < a.size() && i < c.size(); ++i)
    if (a[i].path.find("response.csv") != std::string::npos) differ = a[i].content != c[i].content;
  CHECK(same);
  CHECK(differ);
}

TEST_CASE("command-line exit codes") {
  if (!std::getenv("MOMENTLAB_BIN")) {
    MESSAGE("MOMENTLAB_BIN not set; skipping");
    return;
  }
  const auto dir = std::filesystem::temp_directory_path() / "momentlab-cli-test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto cfg = dir / "chain.json";
  std::ofstream(cfg) << small_chain().dump(2);
  auto bad = small_chain();
  bad["extra"] = true;
  std::ofstream(dir / "bad.json") << bad.dump();
  std::ofstream(dir / "broken.json") << "{ not json";

  CHECK(run_cli("presets") == 0);
  CHECK(run_cli("preset nope") == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("run " + cfg.string() + " --tol-override route_rel=0") == 2);
  CHECK(run_cli("run " + (dir / "bad.json").string()) == 2);
  CHECK(run_cli("run " + (dir / "broken.json").string()) == 2);
  CHECK(run_cli("run " + (dir / "missing.json").string()) == 2);
  CHECK(run_cli("run " + cfg.string() + " --out " + (dir / "a").string()) == 0);
  CHECK(run_cli("--workers 3 run " + cfg.string() + " --out " + (dir / "b").string()) == 0);
  for (const char* f : {"000-moments/moments.csv", "000-moments/spectrum.json", "summary.json", "manifest.json"})
    CHECK(read_file(dir / "a" / f) == read_file(dir / "b" / f));
  // a too-strict tolerance makes the route check fail
  CHECK(run_cli("run " + cfg.string() + " --out " + (dir / "c").string() + " --tol-override route_rel=1e-300") == 1);
  std::filesystem::remove_all(dir);
}
