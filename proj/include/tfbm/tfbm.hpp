#pragma once

#include "tfbm/params.hpp"
#include "tfbm/covariance.hpp"
#include "tfbm/rng.hpp"
#include "tfbm/simulate.hpp"
#include "tfbm/roughpath.hpp"
#include "tfbm/signature.hpp"
#include "tfbm/regression.hpp"
#include "tfbm/rde.hpp"
#include "tfbm/experiments.hpp"
