#pragma once

#include "chi2.hpp"
#include "estimators.hpp"
#include "geometry.hpp"
#include "gof.hpp"
#include "io.hpp"
#include "marks.hpp"
#include "matrix.hpp"
#include "models.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "spatial_grid.hpp"
#include "study.hpp"
