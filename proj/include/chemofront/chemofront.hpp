#pragma once

#include "chemofront/errors.hpp"
#include "chemofront/config.hpp"
#include "chemofront/model_params.hpp"
#include "chemofront/tridiagonal.hpp"
#include "chemofront/spectral.hpp"
#include "chemofront/elliptic.hpp"
#include "chemofront/stepper.hpp"
#include "chemofront/oracles.hpp"
#include "chemofront/dichotomy.hpp"
#include "chemofront/run_config.hpp"
