#pragma once

#include "edr/csv.hpp"
#include "edr/estimator.hpp"
#include "edr/kernels.hpp"
#include "edr/parallel.hpp"
#include "edr/quadrature.hpp"
#include "edr/report.hpp"
#include "edr/rng.hpp"
#include "edr/sample.hpp"
#include "edr/simlab.hpp"
#include "edr/spectral.hpp"
#include "edr/summation.hpp"
