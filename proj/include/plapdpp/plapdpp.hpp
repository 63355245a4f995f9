#pragma once

#include "plapdpp/averages.hpp"
#include "plapdpp/barriers.hpp"
#include "plapdpp/core.hpp"
#include "plapdpp/exact.hpp"
#include "plapdpp/geometry.hpp"
#include "plapdpp/io.hpp"
#include "plapdpp/kernel.hpp"
#include "plapdpp/quadrature.hpp"
#include "plapdpp/scheme.hpp"
#include "plapdpp/solver.hpp"
