#pragma once

#include "bio.hpp"
#include "dense.hpp"
#include "errors.hpp"
#include "givens.hpp"
#include "image_io.hpp"
#include "matrix_market.hpp"
#include "operator.hpp"
#include "problems.hpp"
#include "quaternion.hpp"
#include "qvector.hpp"
#include "solvers.hpp"
#include "ssor.hpp"
