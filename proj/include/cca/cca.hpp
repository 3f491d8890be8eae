#pragma once

#include "cca/baseline.hpp"
#include "cca/bridge.hpp"
#include "cca/distribution.hpp"
#include "cca/error.hpp"
#include "cca/evolve.hpp"
#include "cca/metrics.hpp"
#include "cca/objective.hpp"
#include "cca/scene.hpp"
#include "cca/seed.hpp"
#include "cca/synthsim.hpp"
#include "cca/texture.hpp"
