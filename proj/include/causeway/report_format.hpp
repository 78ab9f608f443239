#pragma once

#include <string>

namespace causeway {

/// "p=0.504", "p=1", "p=3.57E-10", "p<2.2E-16".
std::string format_p_value(double p);

/// Fixed three decimals: "6.562".
std::string format_fixed3(double v);

/// Shortest round-trip decimal for machine documents.
std::string format_exact(double v);

}  // namespace causeway
