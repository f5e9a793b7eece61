#include "zrp/configuration.hpp"

#include <sstream>

#include "zrp/errors.hpp"

namespace zrp {

Edge Edge::source(double rate) {
  if (!(rate >= 0.0) || rate > 1.0) throw ConfigError("source rate must lie in [0,1]");
  return {Kind::source, rate};
}

std::string Edge::str() const {
  switch (kind) {
    case Kind::closed: return "closed";
    case Kind::sink: return "sink";
    case Kind::source: {
      std::ostringstream s;
      s << "source(" << rate << ")";
      return s.str();
    }
  }
  return "?";
}

nlohmann::json Edge::to_json() const {
  switch (kind) {
    case Kind::closed: return {{"kind", "closed"}};
    case Kind::sink: return {{"kind", "sink"}};
    case Kind::source: return {{"kind", "source"}, {"rate", rate}};
  }
  return {};
}

Edge Edge::from_json(const nlohmann::json& j) {
  const auto kind = j.is_string() ? j.get<std::string>() : j.at("kind").get<std::string>();
  if (kind == "closed") return closed();
  if (kind == "sink") return sink();
  if (kind == "source") return source(j.at("rate").get<double>());
  throw ConfigError("unknown edge policy '" + kind + "'");
}

Configuration::Configuration(Window window, std::vector<Occupancy> occupancy, Edge left, Edge right)
    : window_(window), occ_(std::move(occupancy)), left_(left), right_(right) {
  if (window_.size() == 0) throw ConfigError("configuration window is empty");
  if (occ_.size() != window_.size()) throw ConfigError("occupancy table does not match window");
  for (auto o : occ_)
    if (o.is_finite() && o.count() < 0) throw ConfigError("negative occupancy");
}

Configuration Configuration::empty(Window window, Edge left, Edge right) {
  return Configuration(window, std::vector<Occupancy>(window.size()), left, right);
}

Configuration Configuration::from_counts(Window window, std::span<const std::int64_t> counts,
                                         Edge left, Edge right) {
  std::vector<Occupancy> occ;
  occ.reserve(counts.size());
  for (auto n : counts) occ.emplace_back(n);
  return Configuration(window, std::move(occ), left, right);
}

std::vector<std::int64_t> Configuration::source_set() const {
  std::vector<std::int64_t> s;
  for (std::size_t i = 0; i < occ_.size(); ++i)
    if (occ_[i].is_infinite()) s.push_back(window_.site(i));
  return s;
}

std::int64_t Configuration::mass_right_of(std::int64_t x) const {
  std::int64_t total = 0;
  for (std::int64_t y = std::max(x + 1, window_.first); y <= window_.last; ++y) {
    const auto o = (*this)[y];
    if (o.is_infinite()) throw DomainError("infinite mass right of " + std::to_string(x));
    total += o.count();
  }
  return total;
}

std::int64_t Configuration::total_mass() const { return mass_right_of(window_.first - 1); }

bool dominated(const Configuration& zeta, const Configuration& xi) {
  if (zeta.window_ != xi.window_) throw ConfigError("window mismatch");
  for (std::size_t i = 0; i < zeta.occ_.size(); ++i)
    if (zeta.occ_[i] > xi.occ_[i]) return false;
  return true;
}

std::string Configuration::str() const {
  std::ostringstream s;
  s << left_.str() << " |";
  for (auto o : occ_) s << ' ' << o;
  s << " | " << right_.str();
  return s.str();
}

}  // namespace zrp
