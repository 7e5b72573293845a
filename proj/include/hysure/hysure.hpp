#pragma once

#include "hysure/calibration.hpp"
#include "hysure/degradation.hpp"
#include "hysure/errors.hpp"
#include "hysure/fft.hpp"
#include "hysure/image.hpp"
#include "hysure/io.hpp"
#include "hysure/kernel.hpp"
#include "hysure/metrics.hpp"
#include "hysure/operators.hpp"
#include "hysure/solver.hpp"
#include "hysure/subspace.hpp"
