#pragma once

#include "atlas/geo/affine.hpp"
#include "atlas/geo/datum.hpp"
#include "atlas/geo/longitude.hpp"
#include "atlas/geo/measure.hpp"
#include "atlas/geo/projection.hpp"
#include "atlas/geo/simplify.hpp"
#include "atlas/geo/spec_string.hpp"
#include "atlas/geo/transverse_mercator.hpp"
#include "atlas/geo/types.hpp"
