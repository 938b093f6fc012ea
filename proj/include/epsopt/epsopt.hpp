#pragma once

#include "epsopt/common.hpp"
#include "epsopt/environment.hpp"
#include "epsopt/harness.hpp"
#include "epsopt/model.hpp"
#include "epsopt/objective.hpp"
#include "epsopt/optimizer.hpp"
#include "epsopt/policies.hpp"
#include "epsopt/posterior.hpp"
#include "epsopt/rng.hpp"
