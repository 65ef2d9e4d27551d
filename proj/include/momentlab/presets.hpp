#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace momentlab::cli {

/// Alpha for the PT model at which the saddle critical gamma sits at 0.155
/// (calibrate_alpha with the default bracket and onsite 1040 - 3i).
inline constexpr double kCalibratedAlpha = 0.1934;

std::vector<std::string> preset_names();

/// Built-in config document; throws InvalidArgument listing the available names.
nlohmann::json preset(const std::string& name);

}  // namespace momentlab::cli
