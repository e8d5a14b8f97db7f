#pragma once

#include <optional>
#include <span>
#include <string>

#include "gxe/power.hpp"

namespace gxe {

// Self-contained SVG documents for quick visual checks; no styling
// dependencies, one element per plotted feature.

std::string roc_svg(const RocCurve& curve, const std::string& title);

// One circle per SNP at (position, -log10 p); an optional vertical marker
// highlights the causal locus.
std::string manhattan_svg(std::span<const double> positions,
                          std::span<const double> neglog10_p,
                          std::optional<double> causal_position,
                          const std::string& title);

}  // namespace gxe
