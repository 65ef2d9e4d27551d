#include "momentlab/output.hpp"

#include <cstdio>
#include <fstream>

namespace momentlab::io {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += fields[i];
  }
  line += '\n';
  return line;
}

nlohmann::json complex_list_json(const std::vector<Complex>& values) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& v : values) j.push_back({v.real(), v.imag()});
  return j;
}

std::vector<Complex> complex_list_from_json(const nlohmann::json& j) {
  std::vector<Complex> out;
  for (const auto& e : j) out.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
  return out;
}

nlohmann::json spectrum_json(const linalg::ComplexSpectrum& spectrum) {
  return complex_list_json(spectrum.eigenvalues);
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << content;
  if (!os) throw std::runtime_error("failed while writing " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace momentlab::io
