#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "momentlab/linalg.hpp"

namespace momentlab::io {

/// Fixed 17-significant-digit rendering used by every CSV writer.
std::string format_double(double value);

/// Joins already formatted fields with commas.
std::string csv_line(const std::vector<std::string>& fields);

/// [[re, im], ...]
nlohmann::json complex_list_json(const std::vector<Complex>& values);
std::vector<Complex> complex_list_from_json(const nlohmann::json& j);

nlohmann::json spectrum_json(const linalg::ComplexSpectrum& spectrum);

void write_text(const std::filesystem::path& path, const std::string& content);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// 64-bit FNV-1a, used for config hashes.
std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t value);

}  // namespace momentlab::io
