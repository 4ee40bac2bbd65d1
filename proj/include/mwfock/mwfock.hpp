#pragma once

#include "errors.hpp"
#include "linalg.hpp"
#include "metric.hpp"
#include "reduce.hpp"
#include "apr.hpp"
#include "lattice.hpp"
#include "fockop.hpp"
#include "io.hpp"
#include "verify.hpp"
