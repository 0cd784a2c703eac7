#pragma once

#include "rgcca/error.hpp"
#include "rgcca/penalty.hpp"
#include "rgcca/core.hpp"
#include "rgcca/project.hpp"
#include "rgcca/solver.hpp"
#include "rgcca/simulate.hpp"
#include "rgcca/model.hpp"
#include "rgcca/io.hpp"
