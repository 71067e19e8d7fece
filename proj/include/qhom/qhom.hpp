#pragma once

#include "analysis.hpp"
#include "boundary.hpp"
#include "bvp.hpp"
#include "errors.hpp"
#include "experiment.hpp"
#include "grid.hpp"
#include "homogenize.hpp"
#include "linalg.hpp"
#include "linearization.hpp"
#include "monotone.hpp"
#include "problem.hpp"
#include "quadrature.hpp"
#include "registry.hpp"
#include "types.hpp"
