#pragma once

#include "atlas/warehouse/container.hpp"
#include "atlas/warehouse/geojson.hpp"
#include "atlas/warehouse/geometry.hpp"
#include "atlas/warehouse/ingest.hpp"
#include "atlas/warehouse/schema.hpp"
#include "atlas/warehouse/topology.hpp"
#include "atlas/warehouse/validate.hpp"
#include "atlas/warehouse/warehouse.hpp"
