#pragma once

#include "fvfrac/analytic.hpp"
#include "fvfrac/assembly.hpp"
#include "fvfrac/constitutive.hpp"
#include "fvfrac/discretization/dofs.hpp"
#include "fvfrac/discretization/local.hpp"
#include "fvfrac/errors.hpp"
#include "fvfrac/harness/acceptance.hpp"
#include "fvfrac/harness/cases.hpp"
#include "fvfrac/harness/fixtures.hpp"
#include "fvfrac/harness/metrics.hpp"
#include "fvfrac/io/config.hpp"
#include "fvfrac/io/report.hpp"
#include "fvfrac/io/text.hpp"
#include "fvfrac/io/vtk.hpp"
#include "fvfrac/mesh/raw_mesh.hpp"
#include "fvfrac/mesh/split_mesh.hpp"
#include "fvfrac/solver.hpp"
#include "fvfrac/types.hpp"
