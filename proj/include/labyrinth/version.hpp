#pragma once

#include <json.hpp>

namespace lab {

// Bumped by hand when a module's numerical output changes.
inline nlohmann::json module_versions() {
    return {{"geometry", "1.0"}, {"kernels", "1.0"}, {"lattice", "1.1"}, {"lifting", "1.0"}, {"barrier", "1.1"},
            {"path", "1.0"},     {"runge", "2.0"},   {"potential", "2.0"}, {"pullback", "1.0"}, {"cli", "1.0"}};
}

}  // namespace lab
