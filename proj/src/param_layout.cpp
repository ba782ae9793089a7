#include "pizero/param_layout.hpp"

#include <algorithm>

#include "pizero/error.hpp"

namespace pizero {

std::size_t ParamLayout::add(std::string name, std::size_t size, std::string shape) {
  if (contains(name)) throw ConfigError("ParamLayout: duplicate component " + name);
  const std::size_t offset = total_;
  components_.push_back({std::move(name), offset, size, std::move(shape)});
  total_ += size;
  return offset;
}

const ParamComponent& ParamLayout::component(const std::string& name) const {
  const auto it = std::find_if(components_.begin(), components_.end(),
                               [&](const ParamComponent& c) { return c.name == name; });
  if (it == components_.end()) throw ConfigError("ParamLayout: no component " + name);
  return *it;
}

bool ParamLayout::contains(const std::string& name) const {
  return std::any_of(components_.begin(), components_.end(),
                     [&](const ParamComponent& c) { return c.name == name; });
}

std::span<const double> ParamVector::component(const std::string& name) const {
  const auto& c = layout->component(name);
  return std::span<const double>(values).subspan(c.offset, c.size);
}

std::span<double> ParamVector::component(const std::string& name) {
  const auto& c = layout->component(name);
  return std::span<double>(values).subspan(c.offset, c.size);
}

}  // namespace pizero
