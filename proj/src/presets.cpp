#include "momentlab/presets.hpp"

#include "momentlab/lattice.hpp"

namespace momentlab::cli {

using nlohmann::json;

namespace {

json hop(std::vector<int> delta, double re, double im = 0.0) {
  return {{"delta", delta}, {"amp", {re, im}}};
}

json fig2_hoppings(double kp, double km, double k) {
  return json::array({hop({2}, kp), hop({-2}, km), hop({1}, k), hop({-1}, k)});
}

json fig3_2d_hoppings() {
  // 2 kx cos kx + 2 ky cos(kx + ky), kx = 2i, ky = 4
  return json::array({hop({1, 0}, 0, 2), hop({-1, 0}, 0, 2), hop({1, 1}, 4), hop({-1, -1}, 4)});
}

json fig3_3d_hoppings() {
  return json::array({
      hop({1, 0, 0}, 0, 1), hop({-1, 0, 0}, 0, 1),  // kx = i
      hop({0, 1, 0}, 1),    hop({0, -1, 0}, 1),     // ky = 1
      hop({0, 0, 1}, 0, 1), hop({0, 0, -1}, 0, 1),  // kz = i
      hop({1, 1, 1}, 2),    hop({-1, -1, -1}, 2),   // kd = 2
      hop({1, -1, 1}, 1.2), hop({1, 1, -1}, 1.2),   // ka = 1.2
  });
}

json boundary_combos(int dimension) {
  json out = json::array();
  for (int bits = 0; bits < (1 << dimension); ++bits) {
    json b = json::array();
    for (int a = 0; a < dimension; ++a) b.push_back((bits >> (dimension - 1 - a)) & 1 ? "obc" : "pbc");
    out.push_back(b);
  }
  return out;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"fig2-gbc", "fig2-scaling", "fig3-2d", "fig3-3d", "fig4-dynamics"};
}

json preset(const std::string& name) {
  if (name == "fig2-gbc") {
    return {
        {"kind", "sweep"},
        {"task", "moments"},
        {"dimension", 1},
        {"hoppings", fig2_hoppings(1.0, -1.0, 4.0)},
        {"onsite", {1038.0, -4.5}},
        {"extents", {30}},
        {"boundary", {"obc"}},
        {"moments", {{"m_max", 10}, {"central", true}}},
        {"sweep", {{"g", {0.0, 0.001, 0.1, 1.0, 2.0}}}},
        {"output", "fig2-gbc"},
    };
  }
  if (name == "fig2-scaling") {
    json sizes = json::array();
    for (int n = 7; n <= 60; ++n) sizes.push_back(n);
    json orders = json::array();
    for (int m = 2; m <= 10; ++m) orders.push_back(m);
    return {
        {"kind", "scaling"},
        {"dimension", 1},
        {"hoppings", fig2_hoppings(2.0, 0.4, 4.0)},
        {"onsite", {1038.0, -4.5}},
        {"extents", {60}},
        {"boundary", {"obc"}},
        {"scaling", {{"sizes", sizes}, {"orders", orders}, {"central", true}}},
        {"output", "fig2-scaling"},
    };
  }
  if (name == "fig3-2d") {
    return {
        {"kind", "sweep"},
        {"task", "moments"},
        {"dimension", 2},
        {"hoppings", fig3_2d_hoppings()},
        {"onsite", {1040.0, -6.0}},
        {"extents", {8, 8}},
        {"boundary", {"pbc", "pbc"}},
        {"moments", {{"m_max", 10}, {"central", true}}},
        {"sweep",
         {{"geometries", json::array({{{"extents", {8, 8}}},
                                      {{"extents", {9, 9}}, {"letter", "P"}},
                                      {{"extents", {9, 9}}, {"letter", "M"}}})},
          {"boundaries", boundary_combos(2)}}},
        {"output", "fig3-2d"},
    };
  }
  if (name == "fig3-3d") {
    return {
        {"kind", "sweep"},
        {"task", "moments"},
        {"dimension", 3},
        {"hoppings", fig3_3d_hoppings()},
        {"onsite", {1040.0, -6.0}},
        {"extents", {4, 4, 4}},
        {"boundary", {"pbc", "pbc", "pbc"}},
        {"moments", {{"m_max", 10}, {"central", true}}},
        {"sweep", {{"boundaries", boundary_combos(3)}}},
        {"output", "fig3-3d"},
    };
  }
  if (name == "fig4-dynamics") {
    return {
        {"kind", "sweep"},
        {"task", "dynamics"},
        {"pt", {{"alpha", kCalibratedAlpha}}},
        {"onsite", {1040.0, -3.0}},
        {"extents", {201}},
        {"boundary", {"obc"}},
        {"dynamics",
         {{"duration", 3.0}, {"width", 0.01}, {"center", 0.05}, {"critical", true},
          {"bracket", {0.13, 0.45}}, {"gamma_tolerance", 0.005}}},
        {"sweep", {{"gamma", {0.0, 0.13, 0.45}}}},
        {"output", "fig4-dynamics"},
    };
  }
  std::string list;
  for (const auto& n : preset_names()) list += (list.empty() ? "" : ", ") + n;
  throw InvalidArgument("unknown preset \"" + name + "\" (available: " + list + ")");
}

}  // namespace momentlab::cli
