#pragma once

// Umbrella header for the Doppler-cloak simulation toolkit.

#include "dopcl/circuit.hpp"
#include "dopcl/cloak.hpp"
#include "dopcl/config.hpp"
#include "dopcl/constants.hpp"
#include "dopcl/csv.hpp"
#include "dopcl/dsp.hpp"
#include "dopcl/errors.hpp"
#include "dopcl/metasurface.hpp"
#include "dopcl/modulation.hpp"
#include "dopcl/numeric.hpp"
#include "dopcl/phase_map.hpp"
#include "dopcl/scene.hpp"
