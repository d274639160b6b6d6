#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace carcheck {

/// theta = (alpha, beta, tau2, phi) for one posterior draw.
struct ModelParams {
  double alpha = 0.0;
  double beta = 0.0;
  double tau2 = 1.0;
  double phi = 0.0;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Log relative risks s_1..s_n.
using LatentField = std::vector<double>;

/// Open interval of admissible spatial-dependence values.
struct PhiBounds {
  double lower = 0.0;
  double upper = 0.0;

  [[nodiscard]] bool contains(double phi) const { return phi > lower && phi < upper; }
};

/// Which district (1-based id) has its likelihood term removed, if any.
/// The latent value of a held-out district stays in the model.
struct HoldoutSpec {
  std::optional<int> district;

  [[nodiscard]] bool active() const { return district.has_value(); }
  [[nodiscard]] bool holds_out(std::size_t index) const {
    return district && static_cast<std::size_t>(*district - 1) == index;
  }

  friend bool operator==(const HoldoutSpec&, const HoldoutSpec&) = default;
};

}  // namespace carcheck
