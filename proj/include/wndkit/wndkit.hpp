#pragma once

#include "wndkit/averaging.hpp"
#include "wndkit/config.hpp"
#include "wndkit/core.hpp"
#include "wndkit/dissipativity.hpp"
#include "wndkit/io.hpp"
#include "wndkit/lattice.hpp"
#include "wndkit/navier_stokes.hpp"
#include "wndkit/solver.hpp"
#include "wndkit/spectral.hpp"
#include "wndkit/state.hpp"
#include "wndkit/system_spec.hpp"
