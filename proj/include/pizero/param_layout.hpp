#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pizero {

struct ParamComponent {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
  /// Human-readable shape, e.g. "mlp 192->64->64" or "gru in=4 hidden=64".
  std::string shape;

  friend bool operator==(const ParamComponent&, const ParamComponent&) = default;
};

/// Named, contiguous, disjoint windows over a flat parameter vector.
/// Components are appended in order, so a layout is a pure function of the
/// sequence of `add` calls.
class ParamLayout {
 public:
  /// Appends a component and returns its offset.
  std::size_t add(std::string name, std::size_t size, std::string shape);

  const ParamComponent& component(const std::string& name) const;
  bool contains(const std::string& name) const;
  const std::vector<ParamComponent>& components() const { return components_; }
  std::size_t total_size() const { return total_; }

  friend bool operator==(const ParamLayout&, const ParamLayout&) = default;

 private:
  std::vector<ParamComponent> components_;
  std::size_t total_ = 0;
};

/// Every learnable scalar of an agent, in one flat vector.
struct ParamVector {
  std::shared_ptr<const ParamLayout> layout;
  std::vector<double> values;

  std::span<const double> component(const std::string& name) const;
  std::span<double> component(const std::string& name);
};

}  // namespace pizero
