#ifndef TERRAIN_LOOP_TERRAIN_LOOP_HPP
#define TERRAIN_LOOP_TERRAIN_LOOP_HPP

#include "terrain_loop/cloud.hpp"
#include "terrain_loop/config.hpp"
#include "terrain_loop/errors.hpp"
#include "terrain_loop/evaluation.hpp"
#include "terrain_loop/features.hpp"
#include "terrain_loop/formats.hpp"
#include "terrain_loop/gp.hpp"
#include "terrain_loop/gp_fit.hpp"
#include "terrain_loop/io.hpp"
#include "terrain_loop/pipeline.hpp"
#include "terrain_loop/raster.hpp"
#include "terrain_loop/raster_io.hpp"
#include "terrain_loop/registration.hpp"
#include "terrain_loop/se2.hpp"
#include "terrain_loop/synth.hpp"

#endif
