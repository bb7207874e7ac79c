#include "modnas/front_io.hpp"

#include <charconv>
#include <sstream>

#include "modnas/errors.hpp"
#include "modnas/param_store.hpp"

namespace modnas {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_front_csv(const std::filesystem::path& path, const std::vector<Vec>& points) {
  std::ostringstream out;
  const std::size_t m = points.empty() ? 0 : points.front().size();
  for (std::size_t k = 0; k < m; ++k) out << (k ? "," : "") << "obj" << (k + 1);
  out << '\n';
  for (const auto& p : points) {
    check_size(p.size(), m, "front CSV row");
    for (std::size_t k = 0; k < m; ++k) out << (k ? "," : "") << format_double(p[k]);
    out << '\n';
  }
  write_text_atomic(path, out.str());
}

std::vector<Vec> read_front_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::vector<Vec> points;
  bool header = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("obj", 0) == 0) continue;
    }
    Vec row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t comma = std::min(line.find(',', pos), line.size());
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(line.data() + pos, line.data() + comma, v);
      if (ec != std::errc() || ptr != line.data() + comma) {
        throw SchemaError(path.string() + ":" + std::to_string(lineno) + ": not a number");
      }
      row.push_back(v);
      pos = comma + 1;
    }
    if (!points.empty() && row.size() != points.front().size()) {
      throw SchemaError(path.string() + ":" + std::to_string(lineno) + ": inconsistent column count");
    }
    points.push_back(std::move(row));
  }
  return points;
}

nlohmann::json front_to_json(const ParetoFront& front) {
  auto pts = nlohmann::json::array();
  for (const auto& p : front.points) pts.push_back({{"values", p.values}, {"arch", p.arch}});
  return {{"num_objectives", front.num_objectives}, {"points", pts}};
}

ParetoFront front_from_json(const nlohmann::json& doc) {
  ParetoFront f;
  f.num_objectives = doc.at("num_objectives").get<std::size_t>();
  for (const auto& p : doc.at("points")) {
    f.points.push_back({p.at("values").get<Vec>(), p.value("arch", std::int64_t{-1})});
  }
  return f;
}

}  // namespace modnas
