#pragma once

#include "fraclab/errors.hpp"
#include "fraclab/fraccalc.hpp"
#include "fraclab/gamma.hpp"
#include "fraclab/grid.hpp"
#include "fraclab/homog.hpp"
#include "fraclab/kernels.hpp"
#include "fraclab/parallel.hpp"
#include "fraclab/params.hpp"
#include "fraclab/solver.hpp"
