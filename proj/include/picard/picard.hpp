#pragma once

// Umbrella header.

#include "picard/bergman_kernel.hpp"
#include "picard/bergman_metric.hpp"
#include "picard/complex_hyperbolic.hpp"
#include "picard/growth.hpp"
#include "picard/heisenberg_lattice.hpp"
#include "picard/log_domain.hpp"
#include "picard/quadrature.hpp"
