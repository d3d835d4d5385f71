#pragma once

#include "adf/backends/backends.hpp"
#include "adf/backends/dual.hpp"
#include "adf/backends/fdm.hpp"
#include "adf/backends/tape.hpp"
#include "adf/core/backend.hpp"
#include "adf/core/derivation.hpp"
#include "adf/core/errors.hpp"
#include "adf/core/primitives.hpp"
#include "adf/core/value.hpp"
#include "adf/lazy/operators.hpp"
#include "adf/solvers/gauss_newton.hpp"
#include "adf/solvers/newton.hpp"
