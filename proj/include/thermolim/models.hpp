#pragma once

#include "models/audits.hpp"
#include "models/broken_fixture.hpp"
#include "models/energy_model.hpp"
#include "models/gaussian_free_energy.hpp"
#include "models/lattice_pair.hpp"
#include "models/local_functional.hpp"
#include "models/registry.hpp"
