// Umbrella header.
#pragma once

#include "excursion/clipped.hpp"
#include "excursion/covariance.hpp"
#include "excursion/errors.hpp"
#include "excursion/gpsim.hpp"
#include "excursion/iia.hpp"
#include "excursion/numerics.hpp"
#include "excursion/parallel.hpp"
#include "excursion/persistency.hpp"
#include "excursion/slepian.hpp"
#include "excursion/switchproc.hpp"
