#pragma once

// Everything except the scenario front end.

#include "qrc/comass.hpp"
#include "qrc/decomposition.hpp"
#include "qrc/distortion.hpp"
#include "qrc/dual.hpp"
#include "qrc/expr.hpp"
#include "qrc/exterior.hpp"
#include "qrc/form_field.hpp"
#include "qrc/functionals.hpp"
#include "qrc/grid.hpp"
#include "qrc/limit_lab.hpp"
#include "qrc/map_engine.hpp"
#include "qrc/parallel.hpp"
