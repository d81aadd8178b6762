#pragma once

#include "config.hpp"
#include "critical_points.hpp"
#include "dynamics.hpp"
#include "eigen.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "newton.hpp"
#include "nonlinearity.hpp"
#include "operators.hpp"
#include "pattern.hpp"
#include "pipeline.hpp"
#include "profile.hpp"
#include "surface.hpp"
