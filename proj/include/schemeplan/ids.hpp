#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>

namespace schemeplan {

// Nonempty token matching [A-Za-z][A-Za-z0-9_]*.
inline bool is_identifier(std::string_view text) {
  if (text.empty()) return false;
  auto alpha = [](char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); };
  auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (!alpha(text.front())) return false;
  for (char c : text) {
    if (!alpha(c) && !digit(c) && c != '_') return false;
  }
  return true;
}

// Strongly typed identifier. The tag keeps unit, connector and route names
// from being mixed up; the value itself is an ordinary string.
template <class Tag>
class Identifier {
 public:
  Identifier() = default;
  explicit Identifier(std::string value) : value_(std::move(value)) {}
  explicit Identifier(std::string_view value) : value_(value) {}
  explicit Identifier(const char* value) : value_(value) {}

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }
  bool valid() const { return is_identifier(value_); }

  friend bool operator==(const Identifier&, const Identifier&) = default;
  friend auto operator<=>(const Identifier&, const Identifier&) = default;

  friend std::ostream& operator<<(std::ostream& os, const Identifier& id) { return os << id.value_; }

 private:
  std::string value_;
};

struct ConnectorTag {};
struct UnitTag {};
struct RouteTag {};
struct MarkerTag {};

using ConnectorId = Identifier<ConnectorTag>;
using UnitId = Identifier<UnitTag>;
using RouteId = Identifier<RouteTag>;
using MarkerName = Identifier<MarkerTag>;

inline void hash_combine(std::size_t& seed, std::size_t value) {
  seed ^= value + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
}

}  // namespace schemeplan

template <class Tag>
struct std::hash<schemeplan::Identifier<Tag>> {
  std::size_t operator()(const schemeplan::Identifier<Tag>& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
