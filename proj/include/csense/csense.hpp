#pragma once

// Umbrella header: the whole library.

#include "cli.hpp"      // IWYU pragma: export
#include "config.hpp"   // IWYU pragma: export
#include "cost.hpp"     // IWYU pragma: export
#include "errors.hpp"   // IWYU pragma: export
#include "hyperexp.hpp" // IWYU pragma: export
#include "mdp.hpp"      // IWYU pragma: export
#include "numerics.hpp" // IWYU pragma: export
#include "policies.hpp" // IWYU pragma: export
#include "rng.hpp"      // IWYU pragma: export
#include "simulator.hpp" // IWYU pragma: export
